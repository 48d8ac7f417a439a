"""
Shape data, the linear map Lambda and its three defining conditions.

For shape operators C_i in sp(n) the map is

    Lambda(x) = sum_i ( C_i x (x) underline(f^i) + f^i (x) underline(C_i x) )

with f^i = sum_k OmegaN^{ik} f_k the dual normal basis, so that
Lambda(x) f_i = C_i x. Every check runs on basis vectors only; the
conditions are multilinear.
"""
import logging
from dataclasses import dataclass, field, replace
from itertools import combinations, product
from typing import Any, Dict, List, Optional, Sequence, Tuple

from sympy import ImmutableDenseNDimArray, ImmutableMatrix, Matrix, Rational

from app.core.exceptions import (
    AlgebraClosureError,
    ConsistencyError,
    DimensionMismatchError,
    HypothesisError,
    InconsistentStructureError,
    InputError,
    NotSymplecticError,
    OutOfClassError,
)
from app.geometry.exact_core import (
    block_diagonal,
    commutator,
    identity,
    inverse,
    is_zero,
    matrix_to_json,
    scalar_to_str,
    unit_vector,
    zero_matrix,
)
from app.geometry.symplectic_model import (
    AffineSympElement,
    Block,
    CurvatureTensor,
    SympSpace,
    bracket_map,
    is_in_sp,
    phi_map,
)

logger = logging.getLogger(__name__)

StructureConstants = Tuple[Tuple[Tuple[Rational, ...], ...], ...]


def _structure_from_ops(B_ops: Sequence[ImmutableMatrix]) -> StructureConstants:
    """B^k_{ij} = (B_i)[k, j]"""
    size = len(B_ops)
    return tuple(tuple(tuple(B_ops[i][k, j] for k in range(size)) for j in range(size)) for i in range(size))


def _ops_from_structure(B_struct: StructureConstants) -> Tuple[ImmutableMatrix, ...]:
    size = len(B_struct)
    return tuple(
        ImmutableMatrix(size, size, lambda k, j, i=i: B_struct[i][j][k]) for i in range(size)
    )


@dataclass(frozen=True)
class ShapeFamily:
    """
    Shape operators C_1..C_2p of an extrinsic symmetric space at its base point.

    ``B_struct[i][j][k]`` is the structure constant B^k_{ij}; ``B_ops[i]`` is
    the normal-block operator with B_i f_j = sum_k B^k_{ij} f_k. Constructing
    the dataclass directly skips validation; ``create`` validates.
    """

    space: SympSpace
    C: Tuple[ImmutableMatrix, ...]
    B_struct: Optional[StructureConstants] = None
    B_ops: Optional[Tuple[ImmutableMatrix, ...]] = None

    @classmethod
    def create(
        cls,
        space: SympSpace,
        C: Sequence[ImmutableMatrix],
        B_struct: Optional[Sequence] = None,
        B_ops: Optional[Sequence[ImmutableMatrix]] = None,
    ) -> "ShapeFamily":
        if space.p == 0:
            raise InputError("codimension zero: p must be at least 1", ("space", "p"))
        C = tuple(ImmutableMatrix(c) for c in C)
        if len(C) != space.normal_dim:
            raise DimensionMismatchError(f"{len(C)} shape operators given, expected 2p = {space.normal_dim}")
        for index, c in enumerate(C):
            if c.shape != space.omega0.shape:
                raise DimensionMismatchError(f"C_{index + 1} is {c.rows}x{c.cols}, expected {space.tangent_dim} square")
            if not is_in_sp(space, c, Block.TANGENT):
                raise NotSymplecticError(f"C_{index + 1} is not in sp(n)")

        ops = tuple(ImmutableMatrix(b) for b in B_ops) if B_ops is not None else None
        struct = None
        if B_struct is not None:
            struct = tuple(tuple(tuple(Rational(v) for v in row) for row in block) for block in B_struct)
            size = space.normal_dim
            if len(struct) != size or any(len(row) != size or any(len(v) != size for v in row) for row in struct):
                raise DimensionMismatchError(f"B_struct must be a {size}x{size}x{size} array")
        if ops is not None:
            for index, b in enumerate(ops):
                if b.shape != space.omegaN0.shape:
                    raise DimensionMismatchError(
                        f"B_{index + 1} is {b.rows}x{b.cols}, expected {space.normal_dim} square"
                    )
            if len(ops) != space.normal_dim:
                raise DimensionMismatchError(f"{len(ops)} normal operators given, expected {space.normal_dim}")
            derived = _structure_from_ops(ops)
            if struct is not None and derived != struct:
                raise InconsistentStructureError("B_ops do not act on the normal basis by B_struct")
            struct = derived
        elif struct is not None:
            ops = _ops_from_structure(struct)

        family = cls(space=space, C=C, B_struct=struct, B_ops=ops)
        if struct is not None:
            problems = family.structure_violations()
            if problems:
                logger.error(f"Structure constants rejected: {problems[0]}")
                raise InconsistentStructureError(f"structure constants invalid: {'; '.join(problems[:3])}")
        logger.debug(f"Built shape family n={space.n}, p={space.p}, structure={'yes' if struct else 'no'}")
        return family

    def with_structure(self, B_struct: StructureConstants) -> "ShapeFamily":
        return ShapeFamily.create(self.space, self.C, B_struct=B_struct)

    def structure_violations(self) -> List[str]:
        """Product closure C_iC_j = sum B^k_{ij} C_k and B_i in sp of the normal block"""
        if self.B_struct is None:
            return []
        problems = []
        size = len(self.C)
        for i, j in product(range(size), repeat=2):
            combo = zero_matrix(self.space.tangent_dim)
            for k in range(size):
                if self.B_struct[i][j][k] != 0:
                    combo = combo + self.B_struct[i][j][k] * self.C[k]
            if self.C[i] * self.C[j] != combo:
                problems.append(f"C_{i + 1}C_{j + 1} != sum_k B^k C_k")
        omegaN = self.space.omegaN0
        for i, j, k in product(range(size), repeat=3):
            total = sum(
                (self.B_struct[i][j][r] * omegaN[r, k] + self.B_struct[i][k][r] * omegaN[j, r] for r in range(size)),
                Rational(0),
            )
            if total != 0:
                problems.append(f"Omega-compatibility fails at (i,j,k)={(i + 1, j + 1, k + 1)}")
        return problems

    @property
    def has_zero_structure(self) -> bool:
        return self.B_struct is not None and all(v == 0 for block in self.B_struct for row in block for v in row)

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "space": {
                "n": self.space.n,
                "p": self.space.p,
                "omega0": matrix_to_json(self.space.omega0),
                "omegaN0": matrix_to_json(self.space.omegaN0),
            },
            "C": [matrix_to_json(c) for c in self.C],
        }
        if self.B_struct is not None:
            data["B_struct"] = [[[scalar_to_str(v) for v in row] for row in block] for block in self.B_struct]
        return data


@dataclass(frozen=True)
class LambdaMap:
    """Lambda cached on the tangent basis; general arguments are assembled by linearity"""

    family: ShapeFamily
    basis_images: Tuple[ImmutableMatrix, ...]

    @property
    def space(self) -> SympSpace:
        return self.family.space

    def __call__(self, x: ImmutableMatrix) -> ImmutableMatrix:
        """Lambda(x) for a tangent vector x of length 2n"""
        values = list(x)
        if len(values) != self.space.tangent_dim:
            raise DimensionMismatchError(f"Lambda takes tangent vectors of length {self.space.tangent_dim}")
        total = zero_matrix(self.space.dim)
        for coeff, image in zip(values, self.basis_images):
            if coeff != 0:
                total = total + coeff * image
        return ImmutableMatrix(total)

    def at_basis(self, index: int) -> ImmutableMatrix:
        return self.basis_images[index]

    def shape_operator(self, i: int) -> ImmutableMatrix:
        """C_i read back from Lambda: column alpha is the tangent part of Lambda(e_alpha) f_i"""
        space = self.space
        f_i = space.normal_basis[i]
        columns = [space.tangent_part(image * f_i) for image in self.basis_images]
        return ImmutableMatrix.hstack(*columns)

    @property
    def is_zero(self) -> bool:
        return all(is_zero(image) for image in self.basis_images)


def build_lambda(family: ShapeFamily, strict: bool = True) -> LambdaMap:
    """
    Assemble Lambda(e_alpha) for every tangent basis vector.

    Args:
        family: shape data
        strict: reject C_i outside sp(n); pass False to inspect corrupted data

    Raises:
        NotSymplecticError: some C_i is not in sp(n) and strict is set
    """
    space = family.space
    if strict:
        for index, c in enumerate(family.C):
            if not is_in_sp(space, c, Block.TANGENT):
                raise NotSymplecticError(f"C_{index + 1} is not in sp(n)")
    duals = space.dual_normal
    images = []
    for alpha in range(space.tangent_dim):
        image = zero_matrix(space.dim)
        for c, dual in zip(family.C, duals):
            u = space.embed_tangent(list(c[:, alpha]))
            if is_zero(u):
                continue
            image = image + space.outer(u, dual) + space.outer(dual, u)
        images.append(ImmutableMatrix(image))
    logger.debug(f"Built Lambda on {space.tangent_dim} basis vectors")
    return LambdaMap(family=family, basis_images=tuple(images))


# --------------------------------------------------------------------------
# Conditions
# --------------------------------------------------------------------------


@dataclass
class ConditionReport:
    """Verdict of one defining condition; truthiness is the verdict"""

    condition: str
    holds: bool
    failures: List[Dict[str, Any]] = field(default_factory=list)
    checked: int = 0
    details: Dict[str, Any] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> Dict[str, Any]:
        return {
            "condition": self.condition,
            "holds": self.holds,
            "checked": self.checked,
            "failures": self.failures[:10],
            **self.details,
        }


def reflection_S0(space: SympSpace) -> ImmutableMatrix:
    """diag(-I_2n, I_2p)"""
    return block_diagonal(-identity(space.tangent_dim), identity(space.normal_dim))


def check_condition_1(lm: LambdaMap) -> ConditionReport:
    """S0 Lambda(x) S0 = -Lambda(x)"""
    s0 = reflection_S0(lm.space)
    failures = []
    for alpha, image in enumerate(lm.basis_images):
        residual = s0 * image * s0 + image
        if not is_zero(residual):
            failures.append({"tuple": [alpha], "residual": matrix_to_json(residual)})
    return ConditionReport("condition_1", not failures, failures, checked=len(lm.basis_images))


def check_condition_2(lm: LambdaMap) -> ConditionReport:
    """Lambda(x) y = Lambda(y) x"""
    space = lm.space
    failures = []
    checked = 0
    for alpha, beta in combinations(range(space.tangent_dim), 2):
        checked += 1
        e_alpha = unit_vector(space.dim, alpha)
        e_beta = unit_vector(space.dim, beta)
        residual = lm.basis_images[alpha] * e_beta - lm.basis_images[beta] * e_alpha
        if not is_zero(residual):
            failures.append({"tuple": [alpha, beta], "residual": [scalar_to_str(v) for v in residual]})
    return ConditionReport("condition_2", not failures, failures, checked=checked)


def _condition_3_lambda_form(lm: LambdaMap) -> List[Dict[str, Any]]:
    space = lm.space
    failures = []
    for alpha, beta in combinations(range(space.tangent_dim), 2):
        bracket = commutator(lm.basis_images[alpha], lm.basis_images[beta])
        if is_zero(bracket):
            continue
        for gamma in range(space.tangent_dim):
            moved = space.tangent_part(bracket * unit_vector(space.dim, gamma))
            residual = lm(moved) - commutator(bracket, lm.basis_images[gamma])
            if not is_zero(residual):
                failures.append({"tuple": [alpha, beta, gamma], "residual": matrix_to_json(residual)})
    return failures


def _tangent_bracket(
    space: SympSpace, C: Sequence[ImmutableMatrix], x: ImmutableMatrix, y: ImmutableMatrix
) -> ImmutableMatrix:
    """K with K z = sum OmegaN^{ij} ( w(C_i y, z) C_j x - w(C_i x, z) C_j y )"""
    inv = space.omegaN_inverse
    omega0 = space.omega0
    total = zero_matrix(space.tangent_dim)
    for i, j in product(range(len(C)), repeat=2):
        coeff = inv[i, j]
        if coeff == 0:
            continue
        cix, ciy, cjx, cjy = C[i] * x, C[i] * y, C[j] * x, C[j] * y
        total = total + coeff * (cjx * ciy.T * omega0 - cjy * cix.T * omega0)
    return ImmutableMatrix(total)


def _condition_3_shape_form(space: SympSpace, C: Sequence[ImmutableMatrix]) -> List[Dict[str, Any]]:
    inv = space.omegaN_inverse
    failures = []
    size = len(C)
    for alpha, beta in combinations(range(space.tangent_dim), 2):
        x = unit_vector(space.tangent_dim, alpha)
        y = unit_vector(space.tangent_dim, beta)
        K = _tangent_bracket(space, C, x, y)
        for l in range(size):
            cl = C[l]
            correction = zero_matrix(space.tangent_dim)
            for i, k in product(range(size), repeat=2):
                coeff = inv[i, k]
                if coeff == 0:
                    continue
                weight = space.tangent_pair(C[i] * y, cl * x) - space.tangent_pair(C[i] * x, cl * y)
                if weight != 0:
                    correction = correction + coeff * weight * C[k]
            residual = cl * K - K * cl - correction
            if not is_zero(residual):
                failures.append({"tuple": [alpha, beta], "normal_index": l, "residual": matrix_to_json(residual)})
    return failures


def check_condition_3(lm: LambdaMap) -> ConditionReport:
    """
    Lambda([Lambda(x), Lambda(y)] z) = [[Lambda(x), Lambda(y)], Lambda(z)].

    Evaluated on Lambda directly and through the shape operators read back
    from Lambda; when every Lambda(e_alpha) lies in sp the two must agree.

    Raises:
        ConsistencyError: the two evaluations disagree on symplectic Lambda
    """
    space = lm.space
    lambda_failures = _condition_3_lambda_form(lm)
    shape_ops = [lm.shape_operator(i) for i in range(space.normal_dim)]
    shape_failures = _condition_3_shape_form(space, shape_ops)
    lambda_holds = not lambda_failures
    shape_holds = not shape_failures
    if lambda_holds != shape_holds:
        if all(is_in_sp(space, image, Block.AMBIENT) for image in lm.basis_images):
            logger.error(f"Condition 3 forms disagree: lambda={lambda_holds}, shape={shape_holds}")
            raise ConsistencyError(
                "condition 3 evaluated on Lambda and on the shape operators disagree",
                lambda_failures[:1] + shape_failures[:1],
            )
        logger.warning("Condition 3 forms disagree on a Lambda outside sp; reporting the Lambda form")
    checked = len(list(combinations(range(space.tangent_dim), 2))) * space.tangent_dim
    return ConditionReport(
        "condition_3",
        lambda_holds and shape_holds,
        lambda_failures or shape_failures,
        checked=checked,
        details={"lambda_form": lambda_holds, "shape_form": shape_holds},
    )


def check_all_conditions(lm: LambdaMap) -> List[ConditionReport]:
    reports = [check_condition_1(lm), check_condition_2(lm), check_condition_3(lm)]
    logger.info(f"Conditions: {', '.join(f'{r.condition}={r.holds}' for r in reports)}")
    return reports


# --------------------------------------------------------------------------
# Second fundamental form and curvature
# --------------------------------------------------------------------------


def second_fundamental_form(lm: LambdaMap, x: ImmutableMatrix, y: ImmutableMatrix) -> ImmutableMatrix:
    """alpha_0(x, y) = Lambda(y) x, returned as its normal coordinates (length 2p)"""
    space = lm.space
    value = lm(y) * space.embed_tangent(list(x))
    return space.normal_part(value)


def _bracket_curvature(lm: LambdaMap) -> CurvatureTensor:
    space = lm.space
    dim = space.tangent_dim
    forms = {}
    for alpha, beta in combinations(range(dim), 2):
        bracket = commutator(lm.basis_images[alpha], lm.basis_images[beta])
        tangent_block = ImmutableMatrix(bracket[:dim, :dim])
        forms[(alpha, beta)] = -(tangent_block.T * space.omega0)

    def component(a: int, b: int, c: int, d: int) -> Rational:
        if a == b:
            return Rational(0)
        if a < b:
            return forms[(a, b)][c, d]
        return -forms[(b, a)][c, d]

    return CurvatureTensor.from_function(dim, component)


def _shape_sum_curvature(space: SympSpace, C: Sequence[ImmutableMatrix]) -> CurvatureTensor:
    """sum OmegaN^{ji} ( W_i[y,z] W_j[x,t] - W_i[x,z] W_j[y,t] ) with W_i = C_i^T omega0"""
    inv = space.omegaN_inverse
    W = [c.T * space.omega0 for c in C]
    pairs = [(i, j, inv[j, i]) for i, j in product(range(len(C)), repeat=2) if inv[j, i] != 0]

    def component(x: int, y: int, z: int, t: int) -> Rational:
        return sum(
            (coeff * (W[i][y, z] * W[j][x, t] - W[i][x, z] * W[j][y, t]) for i, j, coeff in pairs),
            Rational(0),
        )

    return CurvatureTensor.from_function(space.tangent_dim, component)


def _gauss_curvature(lm: LambdaMap) -> CurvatureTensor:
    """Omega(alpha(y,z), alpha(x,t)) - Omega(alpha(x,z), alpha(y,t))"""
    space = lm.space
    dim = space.tangent_dim
    basis = [unit_vector(dim, a) for a in range(dim)]
    alpha = {(a, b): second_fundamental_form(lm, basis[a], basis[b]) for a, b in product(range(dim), repeat=2)}

    def component(x: int, y: int, z: int, t: int) -> Rational:
        return space.normal_pair(alpha[(y, z)], alpha[(x, t)]) - space.normal_pair(alpha[(x, z)], alpha[(y, t)])

    return CurvatureTensor.from_function(dim, component)


def curvature_at_base(lm: LambdaMap) -> CurvatureTensor:
    """
    R_0(x,y,z,t) = -w([Lambda(x), Lambda(y)] z, t).

    Computed from the bracket, from the shape-operator sum and from the
    second fundamental form; all three must agree componentwise.

    Raises:
        HypothesisError: condition 1 or 2 fails
        ConsistencyError: the three computations disagree
    """
    if not check_condition_1(lm) or not check_condition_2(lm):
        raise HypothesisError("curvature at the base point needs conditions 1 and 2")
    bracket_form = _bracket_curvature(lm)
    shape_form = _shape_sum_curvature(lm.space, lm.family.C)
    gauss_form = _gauss_curvature(lm)
    for name, other in (("shape-sum", shape_form), ("second fundamental form", gauss_form)):
        diffs = bracket_form.differences(other)
        if diffs:
            logger.error(f"Curvature routes disagree ({name}) at {diffs[:3]}")
            raise ConsistencyError(f"bracket curvature and {name} curvature disagree", diffs[:10])
    return bracket_form


# --------------------------------------------------------------------------
# Wedge element, phi and psi
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WedgeElement:
    """
    sum_t c_t A_t ^ B_t in Lambda^2 sp(n), with A ^ B = A (x) B - B (x) A.

    phi and psi act on each decomposable term; ``as_array`` gives the
    element as a 4-index tensor for comparisons.
    """

    space: SympSpace
    terms: Tuple[Tuple[Rational, ImmutableMatrix, ImmutableMatrix], ...]

    def as_array(self) -> ImmutableDenseNDimArray:
        dim = self.space.tangent_dim
        flat = [Rational(0)] * dim**4
        for coeff, A, B in self.terms:
            for index, (a, b, c, d) in enumerate(product(range(dim), repeat=4)):
                flat[index] += coeff * (A[a, b] * B[c, d] - B[a, b] * A[c, d])
        return ImmutableDenseNDimArray(flat, (dim, dim, dim, dim))

    def phi(self) -> CurvatureTensor:
        total = CurvatureTensor.zero(self.space.tangent_dim)
        for coeff, A, B in self.terms:
            total = total + phi_map(self.space, A, B).scale(coeff)
        return total

    def psi(self) -> ImmutableMatrix:
        total = zero_matrix(self.space.tangent_dim)
        for coeff, A, B in self.terms:
            total = total + coeff * bracket_map(A, B)
        return ImmutableMatrix(total)

    @property
    def is_zero(self) -> bool:
        return not any(v != 0 for v in self.as_array())


def wedge_element(family: ShapeFamily) -> WedgeElement:
    """1/2 sum_{i,j} OmegaN^{ij} C_i ^ C_j, whose phi-image is the curvature at the base point"""
    inv = family.space.omegaN_inverse
    terms = []
    for i, j in combinations(range(len(family.C)), 2):
        # the (i, j) and (j, i) halves coincide
        if inv[i, j] != 0:
            terms.append((inv[i, j], family.C[i], family.C[j]))
    return WedgeElement(family.space, tuple(terms))


def change_normal_basis(family: ShapeFamily, M: ImmutableMatrix) -> ShapeFamily:
    """
    Re-express the family in the normal basis f'_j = sum_i M[i, j] f_i.

    The normal Gram matrix becomes M^T OmegaN M and C'_j = sum_i M[i, j] C_i;
    structure constants are not carried over.
    """
    space = family.space
    if M.shape != space.omegaN0.shape:
        raise DimensionMismatchError(f"basis change must be {space.normal_dim} square")
    new_form = ImmutableMatrix(M.T * space.omegaN0 * M)
    new_space = SympSpace.create(space.n, space.p, space.omega0, new_form)
    size = len(family.C)
    C = [
        ImmutableMatrix(sum((M[i, j] * family.C[i] for i in range(size)), zero_matrix(space.tangent_dim)))
        for j in range(size)
    ]
    return ShapeFamily.create(new_space, C)


def conjugate_tangent(family: ShapeFamily, phi: ImmutableMatrix) -> ShapeFamily:
    """C_i -> Phi C_i Phi^{-1} for Phi preserving omega0; structure constants are unchanged"""
    space = family.space
    if phi.T * space.omega0 * phi != space.omega0:
        raise NotSymplecticError("tangent change of basis does not preserve omega0")
    phi_inv = inverse(phi)
    C = [ImmutableMatrix(phi * c * phi_inv) for c in family.C]
    return ShapeFamily.create(space, C, B_struct=family.B_struct)


def structure_constants(family: ShapeFamily) -> StructureConstants:
    """
    Solve C_iC_j = sum_k B^k_{ij} C_k together with the Omega-compatibility.

    Free parameters of an underdetermined system are set to zero.

    Raises:
        OutOfClassError: the products of the C_i do not close or no
            compatible constants exist
    """
    space = family.space
    size = len(family.C)
    dim = space.tangent_dim

    def unknown(i: int, j: int, k: int) -> int:
        return (i * size + j) * size + k

    rows: List[List[Rational]] = []
    rhs: List[Rational] = []
    for i, j in product(range(size), repeat=2):
        target = family.C[i] * family.C[j]
        for r, c in product(range(dim), repeat=2):
            row = [Rational(0)] * size**3
            for k in range(size):
                row[unknown(i, j, k)] = family.C[k][r, c]
            rows.append(row)
            rhs.append(target[r, c])
    omegaN = space.omegaN0
    for i, j, k in product(range(size), repeat=3):
        row = [Rational(0)] * size**3
        for r in range(size):
            row[unknown(i, j, r)] += omegaN[r, k]
            row[unknown(i, k, r)] += omegaN[j, r]
        rows.append(row)
        rhs.append(Rational(0))

    try:
        solution, params = Matrix(rows).gauss_jordan_solve(Matrix(rhs))
    except ValueError as exc:
        raise OutOfClassError(f"no structure constants close the products C_iC_j: {exc}") from exc
    if params.shape[0]:
        solution = solution.subs({symbol: 0 for symbol in params})
    values = [Rational(v) for v in solution]
    return tuple(
        tuple(tuple(values[unknown(i, j, k)] for k in range(size)) for j in range(size)) for i in range(size)
    )


# --------------------------------------------------------------------------
# The transvection algebra
# --------------------------------------------------------------------------


def _independent(vectors: Sequence[ImmutableMatrix]) -> List[int]:
    if not vectors:
        return []
    _, pivots = Matrix.hstack(*vectors).rref()
    return list(pivots)


@dataclass
class GroupAlgebra:
    """Spanning set (Lambda(e_alpha), e_alpha), ([Lambda(e_alpha), Lambda(e_beta)], 0) and a basis of its span"""

    elements: List[AffineSympElement]
    basis: List[AffineSympElement]
    transvection_count: int

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def isotropy(self) -> List[AffineSympElement]:
        return self.elements[self.transvection_count :]

    @property
    def is_abelian(self) -> bool:
        return all(a.bracket(b).is_zero for a, b in combinations(self.basis, 2))


def lambda_group_algebra(lm: LambdaMap) -> GroupAlgebra:
    """
    Raises:
        AlgebraClosureError: a bracket of two spanning elements leaves the span
    """
    space = lm.space
    dim = space.tangent_dim
    transvections = [
        AffineSympElement(lm.basis_images[alpha], unit_vector(space.dim, alpha)) for alpha in range(dim)
    ]
    isotropy = [
        AffineSympElement(commutator(lm.basis_images[alpha], lm.basis_images[beta]), zero_matrix(space.dim, 1))
        for alpha, beta in combinations(range(dim), 2)
    ]
    elements = transvections + isotropy
    vectors = [element.as_vector() for element in elements]
    pivots = _independent(vectors)
    basis = [elements[i] for i in pivots]
    basis_matrix = Matrix.hstack(*[vectors[i] for i in pivots])
    rank = len(pivots)
    for a, b in combinations(range(len(elements)), 2):
        bracket = elements[a].bracket(elements[b])
        if bracket.is_zero:
            continue
        if Matrix.hstack(basis_matrix, bracket.as_vector()).rank() != rank:
            logger.error(f"Bracket of spanning elements {a} and {b} leaves the span")
            raise AlgebraClosureError("transvection algebra not closed under the bracket", (a, b))
    logger.info(f"Transvection algebra closed, dimension {rank}")
    return GroupAlgebra(elements=elements, basis=basis, transvection_count=dim)


def lower_central_series(elements: Sequence[AffineSympElement], max_steps: int = 32) -> List[int]:
    """
    Dimensions of g, [g, g], [g, [g, g]], ... until the dimension stops changing.

    The algebra is nilpotent iff the last entry is 0.
    """
    if not elements:
        return [0]
    dim = elements[0].A.rows
    generators = [elements[i] for i in _independent([e.as_vector() for e in elements])]
    current = list(generators)
    dims = [len(current)]
    for _ in range(max_steps):
        brackets = [g.bracket(c) for g in generators for c in current]
        brackets = [b for b in brackets if not b.is_zero]
        vectors = [b.as_vector() for b in brackets]
        current = [brackets[i] for i in _independent(vectors)]
        if len(current) == dims[-1]:
            break
        dims.append(len(current))
        if not current:
            break
    logger.debug(f"Lower central series dimensions {dims} (ambient size {dim})")
    return dims


def is_nilpotent_algebra(elements: Sequence[AffineSympElement]) -> bool:
    return lower_central_series(elements)[-1] == 0


def replace_shape_operator(family: ShapeFamily, index: int, C_new: ImmutableMatrix) -> ShapeFamily:
    """Unvalidated copy with one shape operator replaced"""
    C = list(family.C)
    C[index] = ImmutableMatrix(C_new)
    return replace(family, C=tuple(C), B_struct=None, B_ops=None)
