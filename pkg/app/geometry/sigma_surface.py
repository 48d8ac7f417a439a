"""
Quadratic surfaces Sigma = {F_i = 0} defined by affine symplectic data.

F_i(z) = 1/2 Omega(z, A_i z) - Omega(a_i, z). When the a_i span a symplectic
2p-plane and the A_i stabilize it through constants B^k_{ij}, Sigma is an
extrinsic symmetric space; this module builds Sigma, samples it and checks
the identities the construction implies.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations, islice, product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sympy import ImmutableMatrix, Rational

from app.core.config import settings
from app.core.exceptions import (
    ConsistencyError,
    DegenerateNormalSpaceError,
    DimensionMismatchError,
    FamilyNotClosedError,
    HypothesisError,
    InconsistentStructureError,
    OutOfClassError,
)
from app.geometry.exact_core import (
    MultiPoly,
    block_diagonal,
    inverse,
    is_zero,
    matrix_to_json,
    nullspace_basis,
    scalar_to_str,
    unit_vector,
    vector_to_json,
    zero_matrix,
)
from app.geometry.lambda_conditions import (
    ShapeFamily,
    StructureConstants,
    build_lambda,
    curvature_at_base,
    structure_constants,
    wedge_element,
)
from app.geometry.symplectic_model import (
    AffineSympElement,
    Block,
    CurvatureTensor,
    SympSpace,
    is_in_sp,
    random_rational,
    standard_form,
    symmetry_S,
    symp_projection,
)

logger = logging.getLogger(__name__)

_MN_ITERATIONS = 6


@dataclass(frozen=True)
class SurfaceSpec:
    """Sigma together with its hamiltonians, the Gram matrix Omega(a_i, a_j) and the solved B^k_{ij}"""

    space: SympSpace
    generators: Tuple[AffineSympElement, ...]
    F: Tuple[MultiPoly, ...]
    gram: ImmutableMatrix
    B_struct: StructureConstants

    @property
    def size(self) -> int:
        return len(self.generators)

    @property
    def a_vectors(self) -> List[ImmutableMatrix]:
        return [g.a for g in self.generators]

    @property
    def gram_inverse(self) -> ImmutableMatrix:
        return inverse(self.gram)

    @property
    def B_ops(self) -> Tuple[ImmutableMatrix, ...]:
        """Action of A_i on the normal plane in the basis a_1..a_2p"""
        size = self.size
        return tuple(ImmutableMatrix(size, size, lambda k, j, i=i: self.B_struct[i][j][k]) for i in range(size))

    def evaluate(self, z: ImmutableMatrix) -> List[Rational]:
        point = list(z)
        return [f.evaluate(point) for f in self.F]

    def to_json(self) -> Dict[str, Any]:
        return {
            "n": self.space.n,
            "p": self.space.p,
            "gram": matrix_to_json(self.gram),
            "B_struct": [[[scalar_to_str(v) for v in row] for row in block] for block in self.B_struct],
            "F": [str(f) for f in self.F],
        }


def hamiltonian(space: SympSpace, generator: AffineSympElement) -> MultiPoly:
    """F(z) = 1/2 Omega(z, A z) - Omega(a, z)"""
    quadratic = MultiPoly.quadratic_form(ImmutableMatrix(space.omega * generator.A))
    linear = MultiPoly.linear_form(list(-(generator.a.T * space.omega)))
    return quadratic + linear


def build_surface(space: SympSpace, generators: Sequence[AffineSympElement]) -> SurfaceSpec:
    """
    Raises:
        DimensionMismatchError: not 2p generators
        NotSymplecticError: some A_i is not in sp(n+p)
        DegenerateNormalSpaceError: the Gram matrix of the a_i has rank < 2p
        FamilyNotClosedError: no constants B^k_{ij} stabilize the a_i, or
            they fail on the products A_iA_j
    """
    if len(generators) != space.normal_dim:
        raise DimensionMismatchError(f"{len(generators)} generators given, expected 2p = {space.normal_dim}")
    generators = tuple(AffineSympElement.create(space, g.A, g.a) for g in generators)
    a = [g.a for g in generators]
    size = len(generators)
    gram = ImmutableMatrix(size, size, lambda i, j: space.omega_pair(a[i], a[j]))
    rank = gram.rank()
    if rank < size:
        logger.error(f"Normal space degenerate: Gram rank {rank} < {size}")
        raise DegenerateNormalSpaceError("a_i do not span a symplectic subspace", rank, size)
    gram_inv = inverse(gram)

    struct = []
    residuals: Dict[str, Any] = {}
    for i in range(size):
        block = []
        for j in range(size):
            image = generators[i].A * a[j]
            pairing = ImmutableMatrix(size, 1, [space.omega_pair(a[l], image) for l in range(size)])
            coeffs = gram_inv * pairing
            rebuilt = sum((coeffs[k] * a[k] for k in range(size)), zero_matrix(space.dim, 1))
            if image != rebuilt:
                residuals[f"A_{i + 1}a_{j + 1}"] = vector_to_json(image - rebuilt)
            block.append(tuple(coeffs))
        struct.append(tuple(block))
    if residuals:
        logger.error(f"Stabilization of the a_i fails at {sorted(residuals)[:3]}")
        raise FamilyNotClosedError("A_i a_j leaves the span of the a_k", residuals)
    for i, j in product(range(size), repeat=2):
        combo = sum((struct[i][j][k] * generators[k].A for k in range(size)), zero_matrix(space.dim))
        if generators[i].A * generators[j].A != combo:
            residuals[f"A_{i + 1}A_{j + 1}"] = matrix_to_json(generators[i].A * generators[j].A - combo)
    if residuals:
        logger.error(f"Products A_iA_j not closed at {sorted(residuals)[:3]}")
        raise FamilyNotClosedError("A_iA_j != sum_k B^k_{ij} A_k", residuals)

    F = tuple(hamiltonian(space, g) for g in generators)
    space_with_a = SympSpace.create(space.n, space.p, space.omega0, space.omegaN0, a_basis=a)
    logger.info(f"Built surface n={space.n}, p={space.p}")
    return SurfaceSpec(space=space_with_a, generators=generators, F=F, gram=gram, B_struct=tuple(struct))


def membership(surf: SurfaceSpec, z: ImmutableMatrix) -> bool:
    if z.shape != (surf.space.dim, 1):
        raise DimensionMismatchError(f"point has shape {z.shape}, expected ({surf.space.dim}, 1)")
    return all(value == 0 for value in surf.evaluate(z))


@dataclass
class TangentNormalSplit:
    tangent: List[ImmutableMatrix]
    normal: List[ImmutableMatrix]
    gram: ImmutableMatrix
    gram_constant: bool


def normal_vectors(surf: SurfaceSpec, z: ImmutableMatrix) -> List[ImmutableMatrix]:
    """A_i z + a_i, spanning the normal space at z"""
    return [ImmutableMatrix(g.A * z + g.a) for g in surf.generators]


def tangent_normal_split(surf: SurfaceSpec, z: ImmutableMatrix) -> TangentNormalSplit:
    """
    Raises:
        HypothesisError: z is not on Sigma
    """
    if not membership(surf, z):
        raise HypothesisError(f"point {vector_to_json(z)} is not on the surface")
    space = surf.space
    normal = normal_vectors(surf, z)
    size = len(normal)
    constraints = ImmutableMatrix.vstack(*[v.T * space.omega for v in normal])
    tangent = nullspace_basis(constraints)
    gram = ImmutableMatrix(size, size, lambda i, j: space.omega_pair(normal[i], normal[j]))
    return TangentNormalSplit(tangent=tangent, normal=normal, gram=gram, gram_constant=gram == surf.gram)


# --------------------------------------------------------------------------
# Points on Sigma
# --------------------------------------------------------------------------


def tangent_plane_basis(surf: SurfaceSpec) -> List[ImmutableMatrix]:
    """Basis of the Omega-orthogonal complement of span(a_i); standard tangent vectors when it is the tangent block"""
    space = surf.space
    standard = [unit_vector(space.dim, alpha) for alpha in range(space.tangent_dim)]
    if all(space.omega_pair(a, e) == 0 for a in surf.a_vectors for e in standard):
        return standard
    constraints = ImmutableMatrix.vstack(*[a.T * space.omega for a in surf.a_vectors])
    return nullspace_basis(constraints)


def point_from_tangent(surf: SurfaceSpec, y: ImmutableMatrix, max_iterations: Optional[int] = None) -> ImmutableMatrix:
    """
    The point y + sum_j c^j a_j of Sigma over y in the tangent plane at 0.

    Solves c = G^{-1}(1/2 Omega(y, A_i y) + 1/2 Omega(w, A_i w))_i by
    fixed-point iteration; the A_i are nilpotent on the normal plane, so the
    iteration stabilizes after finitely many steps.

    Raises:
        OutOfClassError: no fixed point within the iteration limit
    """
    space = surf.space
    limit = max_iterations or settings.SURFACE_SOLVE_MAX_ITERATIONS
    gram_inv = surf.gram_inverse
    size = surf.size
    base = [space.omega_pair(y, g.A * y) / 2 for g in surf.generators]
    w = zero_matrix(space.dim, 1)
    for _ in range(limit):
        rhs = ImmutableMatrix(
            size, 1, [base[i] + space.omega_pair(w, surf.generators[i].A * w) / 2 for i in range(size)]
        )
        coeffs = gram_inv * rhs
        updated = sum((coeffs[j] * surf.a_vectors[j] for j in range(size)), zero_matrix(space.dim, 1))
        if updated == w:
            return ImmutableMatrix(y + w)
        w = ImmutableMatrix(updated)
    raise OutOfClassError(f"normal equations did not stabilize in {limit} iterations")


def sample_points(surf: SurfaceSpec, count: int, rng: np.random.Generator, bound: int = 2) -> List[ImmutableMatrix]:
    """Points on Sigma over random rational tangent coordinates"""
    basis = tangent_plane_basis(surf)
    points = []
    for _ in range(count):
        y = sum((random_rational(rng, bound) * b for b in basis), zero_matrix(surf.space.dim, 1))
        points.append(point_from_tangent(surf, ImmutableMatrix(y)))
    return points


# --------------------------------------------------------------------------
# Symmetry and product identities
# --------------------------------------------------------------------------


@dataclass
class SymmetryCheck:
    x: ImmutableMatrix
    y: ImmutableMatrix
    image: ImmutableMatrix
    holds: bool

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> Dict[str, Any]:
        return {
            "x": vector_to_json(self.x),
            "y": vector_to_json(self.y),
            "image": vector_to_json(self.image),
            "holds": self.holds,
        }


def surface_symmetry(surf: SurfaceSpec, x: ImmutableMatrix):
    """S_x relative to the tangent space of Sigma at x"""
    split = tangent_normal_split(surf, x)
    return symmetry_S(surf.space, x, split.tangent)


def verify_extrinsic_symmetry(surf: SurfaceSpec, x: ImmutableMatrix, y: ImmutableMatrix) -> SymmetryCheck:
    """True iff S_x y lies on Sigma"""
    if not membership(surf, y):
        raise HypothesisError(f"point {vector_to_json(y)} is not on the surface")
    image = surface_symmetry(surf, x).apply(y)
    holds = membership(surf, image)
    if not holds:
        logger.warning(f"S_x y left the surface for x={vector_to_json(x)}, y={vector_to_json(y)}")
    return SymmetryCheck(x=x, y=y, image=image, holds=holds)


@dataclass
class ProductIdentityReport:
    anticommute_failures: List[Tuple[int, int]] = field(default_factory=list)
    triple_failures: List[Tuple[int, int, int]] = field(default_factory=list)
    linearly_independent: bool = False
    product_failures: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not (self.anticommute_failures or self.triple_failures or self.product_failures)

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "anticommute_failures": [list(t) for t in self.anticommute_failures],
            "triple_failures": [list(t) for t in self.triple_failures],
            "linearly_independent": self.linearly_independent,
            "product_failures": [list(t) for t in self.product_failures],
        }


def verify_product_identities(surf: SurfaceSpec) -> ProductIdentityReport:
    """A_iA_j + A_jA_i = 0, A_iA_jA_k = 0 and, for independent A_i, A_iA_j = 0"""
    A = [g.A for g in surf.generators]
    size = len(A)
    report = ProductIdentityReport()
    for i, j in combinations(range(size), 2):
        if not is_zero(A[i] * A[j] + A[j] * A[i]):
            report.anticommute_failures.append((i, j))
    for i in range(size):
        if not is_zero(A[i] * A[i]):
            report.anticommute_failures.append((i, i))
    for i, j, k in product(range(size), repeat=3):
        if not is_zero(A[i] * A[j] * A[k]):
            report.triple_failures.append((i, j, k))
    flat = ImmutableMatrix.hstack(*[ImmutableMatrix(list(m)) for m in A])
    report.linearly_independent = flat.rank() == size
    if report.linearly_independent:
        report.product_failures = [(i, j) for i, j in product(range(size), repeat=2) if not is_zero(A[i] * A[j])]
    if not report.holds:
        logger.warning(f"Product identities fail: {report.to_dict()}")
    return report


# --------------------------------------------------------------------------
# The bullet algebra
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BulletAlgebra:
    """u . v = B(u) v on the normal plane, B(u) = sum_i u^i B_i"""

    form: ImmutableMatrix
    ops: Tuple[ImmutableMatrix, ...]

    def operator(self, u: ImmutableMatrix) -> ImmutableMatrix:
        return sum((u[i] * op for i, op in enumerate(self.ops)), zero_matrix(self.form.rows))

    def product(self, u: ImmutableMatrix, v: ImmutableMatrix) -> ImmutableMatrix:
        return ImmutableMatrix(self.operator(u) * v)

    @property
    def structure(self) -> StructureConstants:
        size = len(self.ops)
        return tuple(tuple(tuple(self.ops[i][k, j] for k in range(size)) for j in range(size)) for i in range(size))

    def violations(self) -> List[str]:
        size = len(self.ops)
        problems = []
        for i, j in product(range(size), repeat=2):
            g_j = unit_vector(size, j)
            if self.operator(self.ops[i] * g_j) != self.ops[i] * self.ops[j]:
                problems.append(f"associativity fails for (g_{i + 1}, g_{j + 1})")
        for i, op in enumerate(self.ops):
            if not (self.form * op).is_symmetric():
                problems.append(f"B_{i + 1} does not preserve the normal form")
        return problems

    def verify(self) -> "BulletAlgebra":
        problems = self.violations()
        if problems:
            logger.error(f"Bullet structure rejected: {problems[0]}")
            raise InconsistentStructureError("; ".join(problems[:3]))
        return self


def bullet_product(surf: SurfaceSpec) -> BulletAlgebra:
    """
    Raises:
        InconsistentStructureError: associativity or compatibility fails
    """
    return BulletAlgebra(form=surf.gram, ops=surf.B_ops).verify()


def block_bullet_algebra(D: Sequence[ImmutableMatrix]) -> BulletAlgebra:
    """
    B(g_k) = 0 and B(g_{p+k}) = [[0, D_k], [0, 0]] for symmetric D_k, in a
    basis where the normal form is [[0, I], [-I, 0]].
    """
    p = len(D)
    for index, d in enumerate(D):
        if d.shape != (p, p) or not d.is_symmetric():
            raise OutOfClassError(f"D_{index + 1} must be a symmetric {p}x{p} matrix")
    form = standard_form(p)
    ops = [zero_matrix(2 * p) for _ in range(p)]
    for d in D:
        ops.append(ImmutableMatrix.vstack(ImmutableMatrix.hstack(zero_matrix(p), d), zero_matrix(p, 2 * p)))
    return BulletAlgebra(form=form, ops=tuple(ops)).verify()


# --------------------------------------------------------------------------
# M = N
# --------------------------------------------------------------------------


@dataclass
class LemmaMNReport:
    holds: bool
    grid_points: int
    m_points: int
    counterexamples: List[Dict[str, Any]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "grid_points": self.grid_points,
            "m_points": self.m_points,
            "counterexamples": self.counterexamples[:10],
        }


def lemma_MN_violations(
    space: SympSpace, B_ops: Sequence[ImmutableMatrix], C_ops: Sequence[ImmutableMatrix]
) -> List[str]:
    """B(B(xi)eta) = B(xi)B(eta), C(B(xi)eta) = 0, C(xi)C(eta) = 0 and sp membership on basis vectors"""
    size = space.normal_dim
    problems = []
    if len(B_ops) != size or len(C_ops) != size:
        raise DimensionMismatchError(f"expected {size} operators B_i and C_i")
    for i in range(size):
        if not is_in_sp(space, B_ops[i], Block.NORMAL):
            problems.append(f"B_{i + 1} not in sp(p)")
        if not is_in_sp(space, C_ops[i], Block.TANGENT):
            problems.append(f"C_{i + 1} not in sp(n)")
    for i, j in product(range(size), repeat=2):
        image = B_ops[i] * unit_vector(size, j)
        B_of = sum((image[k] * B_ops[k] for k in range(size)), zero_matrix(size))
        C_of = sum((image[k] * C_ops[k] for k in range(size)), zero_matrix(space.tangent_dim))
        if B_of != B_ops[i] * B_ops[j]:
            problems.append(f"B(B_{i + 1}g_{j + 1}) != B_{i + 1}B_{j + 1}")
        if not is_zero(C_of):
            problems.append(f"C(B_{i + 1}g_{j + 1}) != 0")
        if not is_zero(C_ops[i] * C_ops[j]):
            problems.append(f"C_{i + 1}C_{j + 1} != 0")
    return problems


def verify_lemma_MN(
    space: SympSpace,
    B_ops: Sequence[ImmutableMatrix],
    C_ops: Sequence[ImmutableMatrix],
    rng: np.random.Generator,
) -> LemmaMNReport:
    """
    Compare M: 1/2 w(x, C_i x) + 1/2 Omega(u, B_i u) - Omega(g_i, u) = 0 with
    N: 1/2 w(x, C_i x) - Omega(g_i, u) = 0 on sampled points.

    N-points over a rational grid of x must lie in M; M-points reached by
    fixed-point iteration from grid and random starts must lie in N and have
    B_i u = 0; random (x, u) pairs must have equal membership.

    Raises:
        HypothesisError: B and C do not satisfy the product hypotheses
    """
    problems = lemma_MN_violations(space, B_ops, C_ops)
    if problems:
        logger.error(f"Hypotheses of M = N fail: {problems[0]}")
        raise HypothesisError("; ".join(problems[:3]))
    size = space.normal_dim
    omegaN = space.omegaN0
    omegaN_inv = space.omegaN_inverse

    def q(x: ImmutableMatrix) -> List[Rational]:
        return [space.tangent_pair(x, c * x) / 2 for c in C_ops]

    def b(u: ImmutableMatrix) -> List[Rational]:
        return [space.normal_pair(u, op * u) / 2 for op in B_ops]

    def in_N(x: ImmutableMatrix, u: ImmutableMatrix) -> bool:
        return list(omegaN * u) == q(x)

    def in_M(x: ImmutableMatrix, u: ImmutableMatrix) -> bool:
        lhs = omegaN * u
        return all(lhs[i] == qi + bi for i, (qi, bi) in enumerate(zip(q(x), b(u))))

    def annihilated(u: ImmutableMatrix) -> bool:
        return all(is_zero(op * u) for op in B_ops)

    axis = settings.grid_axis()
    grid = [
        ImmutableMatrix(list(values))
        for values in islice(product(axis, repeat=space.tangent_dim), settings.GRID_CAP)
    ]
    randoms = [
        ImmutableMatrix([random_rational(rng) for _ in range(space.tangent_dim)])
        for _ in range(settings.RANDOM_GRID_POINTS)
    ]
    counterexamples = []
    m_points = 0
    for x in grid + randoms:
        u_n = ImmutableMatrix(omegaN_inv * ImmutableMatrix(q(x)))
        if not in_M(x, u_n):
            counterexamples.append({"x": vector_to_json(x), "u": vector_to_json(u_n), "kind": "N point outside M"})
        qx = q(x)
        for start in (zero_matrix(size, 1), ImmutableMatrix([random_rational(rng) for _ in range(size)])):
            u = start
            # the degree in the start doubles per step
            for _ in range(_MN_ITERATIONS):
                nxt = ImmutableMatrix(omegaN_inv * ImmutableMatrix([qi + bi for qi, bi in zip(qx, b(u))]))
                if nxt == u:
                    break
                u = nxt
            if in_M(x, u):
                m_points += 1
                if not in_N(x, u) or not annihilated(u):
                    counterexamples.append(
                        {"x": vector_to_json(x), "u": vector_to_json(u), "kind": "M point outside N"}
                    )
        u_sample = ImmutableMatrix([Rational(int(rng.integers(-2, 3))) for _ in range(size)])
        if in_M(x, u_sample) != in_N(x, u_sample):
            counterexamples.append(
                {"x": vector_to_json(x), "u": vector_to_json(u_sample), "kind": "membership differs"}
            )
    report = LemmaMNReport(
        holds=not counterexamples,
        grid_points=len(grid) + len(randoms),
        m_points=m_points,
        counterexamples=counterexamples,
    )
    logger.info(f"M = N checked on {report.grid_points} points, {m_points} M-points, holds={report.holds}")
    return report


# --------------------------------------------------------------------------
# Curvature of Sigma and translation to shape data
# --------------------------------------------------------------------------


def surface_curvature(
    surf: SurfaceSpec, z: ImmutableMatrix, basis: Optional[Sequence[ImmutableMatrix]] = None
) -> Tuple[CurvatureTensor, List[ImmutableMatrix]]:
    """
    R_z(X, Y) = sum OmegaN^{ij} ( p A_j Y (x) underline(p A_i X) + p A_i X (x) underline(p A_j Y) )

    with p the projection onto T_z Sigma, evaluated on ``basis`` (default:
    the projections of the tangent basis at 0) as R[a, b, c, d] =
    Omega(R(t_a, t_b) t_c, t_d).
    """
    space = surf.space
    split = tangent_normal_split(surf, z)
    projection = symp_projection(space, split.tangent)
    if basis is None:
        basis = [ImmutableMatrix(projection * t) for t in tangent_plane_basis(surf)]
        if ImmutableMatrix.hstack(*basis).rank() < space.tangent_dim:
            basis = split.tangent
    basis = list(basis)
    gram_inv = surf.gram_inverse
    size = surf.size
    images = {
        (i, a): ImmutableMatrix(projection * surf.generators[i].A * basis[a])
        for i in range(size)
        for a in range(len(basis))
    }
    pairs = [(i, j, gram_inv[i, j]) for i, j in product(range(size), repeat=2) if gram_inv[i, j] != 0]

    def component(a: int, b: int, c: int, d: int) -> Rational:
        total = Rational(0)
        for i, j, coeff in pairs:
            total += coeff * (
                space.omega_pair(images[(j, b)], basis[d]) * space.omega_pair(images[(i, a)], basis[c])
                + space.omega_pair(images[(i, a)], basis[d]) * space.omega_pair(images[(j, b)], basis[c])
            )
        return total

    return CurvatureTensor.from_function(len(basis), component), basis


def is_standard_split(surf: SurfaceSpec) -> bool:
    space = surf.space
    return all(a == unit_vector(space.dim, space.tangent_dim + i) for i, a in enumerate(surf.a_vectors))


def family_from_surface(surf: SurfaceSpec) -> ShapeFamily:
    """
    Shape data C_i = A_i restricted to the tangent block, with the normal form Omega(a_i, a_j).

    Raises:
        OutOfClassError: the a_i are not the standard normal basis e_{2n+i}
    """
    if not is_standard_split(surf):
        raise OutOfClassError("shape data needs a_i = e_{2n+i}")
    space = surf.space
    dim = space.tangent_dim
    C = [ImmutableMatrix(g.A[:dim, :dim]) for g in surf.generators]
    normal_space = SympSpace.create(space.n, space.p, space.omega0, surf.gram)
    return ShapeFamily.create(normal_space, C, B_struct=surf.B_struct)


def surface_from_family(family: ShapeFamily) -> SurfaceSpec:
    """A_i = diag(C_i, B_i), a_i = f_i; structure constants are solved when the family carries none"""
    if family.B_struct is None:
        family = family.with_structure(structure_constants(family))
    space = family.space
    generators = [
        AffineSympElement(block_diagonal(c, b), unit_vector(space.dim, space.tangent_dim + i))
        for i, (c, b) in enumerate(zip(family.C, family.B_ops))
    ]
    return build_surface(space, generators)


def flatness_criterion(surf: SurfaceSpec, points: Sequence[ImmutableMatrix]) -> Dict[str, Any]:
    """
    Compare "sum OmegaN^{ij} C_i ^ C_j = 0" with the vanishing of the surface
    curvature at 0 and at the given points; the curvature at 0 must equal the
    base-point curvature of the shape data.

    Raises:
        ConsistencyError: the surface and base-point curvatures differ at 0
    """
    family = family_from_surface(surf)
    wedge_zero = wedge_element(family).is_zero
    at_origin, _ = surface_curvature(surf, zero_matrix(surf.space.dim, 1))
    base = curvature_at_base(build_lambda(family))
    diffs = at_origin.differences(base)
    if diffs:
        logger.error(f"Surface curvature at 0 differs from the base-point curvature at {diffs[:3]}")
        raise ConsistencyError("surface curvature at the origin disagrees with the shape-data curvature", diffs[:10])
    flat_everywhere = at_origin.is_zero and all(surface_curvature(surf, z)[0].is_zero for z in points)
    return {"wedge_zero": wedge_zero, "flat": flat_everywhere, "agrees": wedge_zero == flat_everywhere}

