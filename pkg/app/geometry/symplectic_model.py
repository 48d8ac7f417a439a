"""
Ambient symplectic model: block forms, membership in sp, Omega-orthogonal
projections, the affine symmetries S^W_x and the phi / ric apparatus on
algebraic curvature tensors.

Conventions used across the package:
    Omega(u, v) = u^T Omega v
    A is in sp  <=>  Omega A is symmetric
    u (x) underline(v) has the matrix u v^T Omega
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from itertools import product
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from sympy import ImmutableDenseNDimArray, ImmutableMatrix, Rational

from app.core.exceptions import DimensionMismatchError, NotSymplecticError, SingularMatrixError
from app.geometry.exact_core import (
    block_diagonal,
    commutator,
    identity,
    inverse,
    is_zero,
    scalar_to_str,
    unit_vector,
    zero_matrix,
)

logger = logging.getLogger(__name__)


class Block(str, Enum):
    """Which diagonal block of the ambient form a matrix acts on"""

    TANGENT = "tangent"
    NORMAL = "normal"
    AMBIENT = "ambient"


def standard_form(half_dim: int) -> ImmutableMatrix:
    """[[0, I], [-I, 0]] of size 2*half_dim"""
    size = 2 * half_dim
    rows = [[Rational(0)] * size for _ in range(size)]
    for i in range(half_dim):
        rows[i][half_dim + i] = Rational(1)
        rows[half_dim + i][i] = Rational(-1)
    return ImmutableMatrix(rows)


def pairing(omega: ImmutableMatrix, u: ImmutableMatrix, v: ImmutableMatrix) -> Rational:
    """Omega(u, v)"""
    return (u.T * omega * v)[0, 0]


def check_symplectic_form(form: ImmutableMatrix, name: str) -> None:
    if form.rows != form.cols:
        raise DimensionMismatchError(f"{name} must be square, got {form.rows}x{form.cols}")
    if form.rows % 2:
        raise NotSymplecticError(f"{name} has odd size {form.rows}")
    if form.T != -form:
        raise NotSymplecticError(f"{name} is not skew-symmetric")
    rank = form.rank()
    if rank < form.rows:
        raise NotSymplecticError(f"{name} is degenerate (rank {rank} < {form.rows})")


@dataclass(frozen=True)
class SympSpace:
    """
    R^{2n} (+) R^{2p} with the block form omega0 (+) OmegaN0.

    The normal basis f_i is the standard basis e_{2n+i}; ``normal_basis_a``
    optionally records the a_i of a surface construction.
    """

    n: int
    p: int
    omega0: ImmutableMatrix
    omegaN0: ImmutableMatrix
    normal_basis_a: Optional[Tuple[ImmutableMatrix, ...]] = None

    @classmethod
    def create(
        cls,
        n: int,
        p: int,
        omega0: Optional[ImmutableMatrix] = None,
        omegaN0: Optional[ImmutableMatrix] = None,
        a_basis: Optional[Sequence[ImmutableMatrix]] = None,
    ) -> "SympSpace":
        """Validate the forms and apply the standard-block defaults"""
        if n < 1 or p < 0:
            raise DimensionMismatchError(f"invalid dimensions n={n}, p={p}")
        omega0 = standard_form(n) if omega0 is None else ImmutableMatrix(omega0)
        omegaN0 = standard_form(p) if omegaN0 is None else ImmutableMatrix(omegaN0)
        if omega0.rows != 2 * n:
            raise DimensionMismatchError(f"omega0 is {omega0.rows}x{omega0.cols}, expected {2 * n}x{2 * n}")
        if omegaN0.rows != 2 * p:
            raise DimensionMismatchError(f"omegaN0 is {omegaN0.rows}x{omegaN0.cols}, expected {2 * p}x{2 * p}")
        check_symplectic_form(omega0, "omega0")
        if p:
            check_symplectic_form(omegaN0, "omegaN0")
        basis = None
        if a_basis is not None:
            basis = tuple(ImmutableMatrix(a) for a in a_basis)
            for index, a in enumerate(basis):
                if a.shape != (2 * (n + p), 1):
                    raise DimensionMismatchError(f"a_{index + 1} has shape {a.shape}, expected ({2 * (n + p)}, 1)")
        space = cls(n=n, p=p, omega0=omega0, omegaN0=omegaN0, normal_basis_a=basis)
        logger.debug(f"Created symplectic space n={n}, p={p}")
        return space

    @property
    def tangent_dim(self) -> int:
        return 2 * self.n

    @property
    def normal_dim(self) -> int:
        return 2 * self.p

    @property
    def dim(self) -> int:
        return 2 * (self.n + self.p)

    @cached_property
    def omega(self) -> ImmutableMatrix:
        if not self.p:
            return self.omega0
        return block_diagonal(self.omega0, self.omegaN0)

    @cached_property
    def omega_inverse(self) -> ImmutableMatrix:
        """Omega^{ij}: sum_j Omega^{ij} Omega_{jk} = delta^i_k"""
        return inverse(self.omega)

    @cached_property
    def omega0_inverse(self) -> ImmutableMatrix:
        return inverse(self.omega0)

    @cached_property
    def omegaN_inverse(self) -> ImmutableMatrix:
        """Omega_N^{ij}, the inverse of the normal Gram matrix"""
        return inverse(self.omegaN0)

    @cached_property
    def normal_basis(self) -> Tuple[ImmutableMatrix, ...]:
        return tuple(unit_vector(self.dim, self.tangent_dim + i) for i in range(self.normal_dim))

    @cached_property
    def dual_normal(self) -> Tuple[ImmutableMatrix, ...]:
        """f^i = sum_k Omega_N^{ik} f_k, so that Omega(f^i, f_j) = delta^i_j"""
        duals = []
        for i in range(self.normal_dim):
            coeffs = [self.omegaN_inverse[i, k] for k in range(self.normal_dim)]
            duals.append(self.embed_normal(coeffs))
        return tuple(duals)

    def form(self, block: Block) -> ImmutableMatrix:
        if block == Block.TANGENT:
            return self.omega0
        if block == Block.NORMAL:
            return self.omegaN0
        return self.omega

    def embed_tangent(self, x: Sequence) -> ImmutableMatrix:
        values = list(x)
        if len(values) != self.tangent_dim:
            raise DimensionMismatchError(f"tangent vector has {len(values)} entries, expected {self.tangent_dim}")
        return ImmutableMatrix(self.dim, 1, values + [Rational(0)] * self.normal_dim)

    def embed_normal(self, u: Sequence) -> ImmutableMatrix:
        values = list(u)
        if len(values) != self.normal_dim:
            raise DimensionMismatchError(f"normal vector has {len(values)} entries, expected {self.normal_dim}")
        return ImmutableMatrix(self.dim, 1, [Rational(0)] * self.tangent_dim + values)

    def tangent_part(self, z: ImmutableMatrix) -> ImmutableMatrix:
        return ImmutableMatrix(z[: self.tangent_dim, :])

    def normal_part(self, z: ImmutableMatrix) -> ImmutableMatrix:
        return ImmutableMatrix(z[self.tangent_dim :, :])

    def omega_pair(self, u: ImmutableMatrix, v: ImmutableMatrix) -> Rational:
        return pairing(self.omega, u, v)

    def tangent_pair(self, x: ImmutableMatrix, y: ImmutableMatrix) -> Rational:
        return pairing(self.omega0, x, y)

    def normal_pair(self, u: ImmutableMatrix, v: ImmutableMatrix) -> Rational:
        return pairing(self.omegaN0, u, v)

    def outer(self, u: ImmutableMatrix, v: ImmutableMatrix) -> ImmutableMatrix:
        """u (x) underline(v) on the ambient space"""
        return ImmutableMatrix(u * v.T * self.omega)


@dataclass(frozen=True)
class AffineMap:
    """y -> linear * y + shift"""

    linear: ImmutableMatrix
    shift: ImmutableMatrix

    @classmethod
    def identity(cls, dim: int) -> "AffineMap":
        return cls(identity(dim), zero_matrix(dim, 1))

    def apply(self, y: ImmutableMatrix) -> ImmutableMatrix:
        return ImmutableMatrix(self.linear * y + self.shift)

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """self o inner"""
        return AffineMap(
            ImmutableMatrix(self.linear * inner.linear), ImmutableMatrix(self.linear * inner.shift + self.shift)
        )

    def is_symplectic(self, omega: ImmutableMatrix) -> bool:
        return self.linear.T * omega * self.linear == omega


@dataclass(frozen=True)
class AffineSympElement:
    """(A, a) in the affine symplectic algebra"""

    A: ImmutableMatrix
    a: ImmutableMatrix

    @classmethod
    def create(cls, space: SympSpace, A: ImmutableMatrix, a: ImmutableMatrix) -> "AffineSympElement":
        if not is_in_sp(space, A, Block.AMBIENT):
            raise NotSymplecticError("A is not in sp of the ambient form")
        if a.shape != (space.dim, 1):
            raise DimensionMismatchError(f"a has shape {a.shape}, expected ({space.dim}, 1)")
        return cls(ImmutableMatrix(A), ImmutableMatrix(a))

    def bracket(self, other: "AffineSympElement") -> "AffineSympElement":
        """[(Y, y), (Y', y')] = ([Y, Y'], Y y' - Y' y)"""
        return AffineSympElement(commutator(self.A, other.A), ImmutableMatrix(self.A * other.a - other.A * self.a))

    def as_vector(self) -> ImmutableMatrix:
        return ImmutableMatrix(list(self.A) + list(self.a))

    @classmethod
    def from_vector(cls, vec: ImmutableMatrix, dim: int) -> "AffineSympElement":
        entries = list(vec)
        return cls(ImmutableMatrix(dim, dim, entries[: dim * dim]), ImmutableMatrix(dim, 1, entries[dim * dim :]))

    @property
    def is_zero(self) -> bool:
        return is_zero(self.A) and is_zero(self.a)


@dataclass(frozen=True)
class CurvatureTensor:
    """R(x, y, z, t) on the tangent basis"""

    dim: int
    components: ImmutableDenseNDimArray

    @classmethod
    def from_function(cls, dim: int, fn: Callable[[int, int, int, int], Rational]) -> "CurvatureTensor":
        flat = [fn(a, b, c, d) for a, b, c, d in product(range(dim), repeat=4)]
        return cls(dim, ImmutableDenseNDimArray(flat, (dim, dim, dim, dim)))

    @classmethod
    def zero(cls, dim: int) -> "CurvatureTensor":
        return cls(dim, ImmutableDenseNDimArray([Rational(0)] * dim**4, (dim, dim, dim, dim)))

    def __getitem__(self, index: Tuple[int, int, int, int]) -> Rational:
        return self.components[index]

    @property
    def is_zero(self) -> bool:
        return not any(value != 0 for value in self.components)

    def __add__(self, other: "CurvatureTensor") -> "CurvatureTensor":
        return CurvatureTensor(self.dim, self.components + other.components)

    def scale(self, factor: Rational) -> "CurvatureTensor":
        return CurvatureTensor(self.dim, self.components * factor)

    def differences(self, other: "CurvatureTensor") -> List[Tuple[int, int, int, int]]:
        return [
            index
            for index in product(range(self.dim), repeat=4)
            if self.components[index] != other.components[index]
        ]

    def invariant_violations(self) -> List[str]:
        """Antisymmetry in (x, y), symmetry in (z, t) and the first Bianchi identity"""
        problems = []
        for a, b, c, d in product(range(self.dim), repeat=4):
            value = self.components[a, b, c, d]
            if value != -self.components[b, a, c, d]:
                problems.append(f"antisymmetry fails at {(a, b, c, d)}")
            if value != self.components[a, b, d, c]:
                problems.append(f"z/t symmetry fails at {(a, b, c, d)}")
            cyclic = value + self.components[b, c, a, d] + self.components[c, a, b, d]
            if cyclic != 0:
                problems.append(f"Bianchi fails at {(a, b, c, d)}")
        return problems

    def nonzero_components(self) -> List[Tuple[Tuple[int, int, int, int], Rational]]:
        return [
            (index, self.components[index])
            for index in product(range(self.dim), repeat=4)
            if self.components[index] != 0
        ]

    def to_json(self) -> List[dict]:
        return [{"index": list(index), "value": scalar_to_str(value)} for index, value in self.nonzero_components()]


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


def is_in_sp(space: SympSpace, A: ImmutableMatrix, block: Block = Block.TANGENT) -> bool:
    """True iff Omega_block A is symmetric"""
    form = space.form(block)
    if A.shape != form.shape:
        raise DimensionMismatchError(f"matrix is {A.rows}x{A.cols}, {block.value} block is {form.rows}x{form.cols}")
    product_ = form * A
    return product_ == product_.T


def symp_projection(space: SympSpace, W_basis: Sequence[ImmutableMatrix]) -> ImmutableMatrix:
    """
    Omega-orthogonal projection onto W = span(W_basis).

    P = W G^{-1} W^T Omega with the Gram matrix G = W^T Omega W; the kernel
    of P is the Omega-orthogonal complement of W.
    """
    if not W_basis:
        return zero_matrix(space.dim)
    W = ImmutableMatrix.hstack(*W_basis)
    if W.rows != space.dim:
        raise DimensionMismatchError(f"basis vectors have {W.rows} entries, expected {space.dim}")
    gram = ImmutableMatrix(W.T * space.omega * W)
    try:
        gram_inverse = inverse(gram)
    except SingularMatrixError as exc:
        raise NotSymplecticError(f"subspace is degenerate: Gram rank {exc.rank} < {exc.size}") from exc
    return ImmutableMatrix(W * gram_inverse * W.T * space.omega)


def symmetry_S(space: SympSpace, x: ImmutableMatrix, W_basis: Sequence[ImmutableMatrix]) -> AffineMap:
    """The involution y -> y - 2 p^W (y - x)"""
    projection = symp_projection(space, W_basis)
    linear = ImmutableMatrix(identity(space.dim) - 2 * projection)
    return AffineMap(linear, ImmutableMatrix(2 * projection * x))


def omega_form_of(space: SympSpace, M: ImmutableMatrix) -> ImmutableMatrix:
    """Matrix of the bilinear form (X, Y) -> omega(M X, Y) on the tangent block"""
    return ImmutableMatrix(M.T * space.omega0)


def phi_map(space: SympSpace, A: ImmutableMatrix, B: ImmutableMatrix) -> CurvatureTensor:
    """
    phi(A ^ B)(X,Y,Z,T) = w(BY,Z)w(AX,T) - w(AY,Z)w(BX,T) - w(BX,Z)w(AY,T) + w(AX,Z)w(BY,T)
    """
    if not (is_in_sp(space, A) and is_in_sp(space, B)):
        raise NotSymplecticError("phi is defined on sp(n) ^ sp(n)")
    wa = omega_form_of(space, A)
    wb = omega_form_of(space, B)

    def component(x: int, y: int, z: int, t: int) -> Rational:
        return wb[y, z] * wa[x, t] - wa[y, z] * wb[x, t] - wb[x, z] * wa[y, t] + wa[x, z] * wb[y, t]

    return CurvatureTensor.from_function(space.tangent_dim, component)


def bracket_map(A: ImmutableMatrix, B: ImmutableMatrix) -> ImmutableMatrix:
    """psi(A ^ B) = [A, B]"""
    return commutator(A, B)


def ricci(space: SympSpace, R: CurvatureTensor) -> ImmutableMatrix:
    """
    ric(X, Y) = Tr[Z -> R(X, Z) Y].

    R(X, Z) Y is the vector v with omega(v, T) = R(X, Z, Y, T), i.e.
    v = (omega0^T)^{-1} r where r_T = R(X, Z, Y, T).
    """
    dim = space.tangent_dim
    raise_index = inverse(space.omega0.T)
    entries = []
    for a in range(dim):
        row = []
        for b in range(dim):
            total = Rational(0)
            for c in range(dim):
                for t in range(dim):
                    coeff = raise_index[c, t]
                    if coeff != 0:
                        total += coeff * R[a, c, b, t]
            row.append(total)
        entries.append(row)
    return ImmutableMatrix(entries)


def act_on_tensor(S: ImmutableMatrix, R: CurvatureTensor) -> CurvatureTensor:
    """(S.R)(X, Y, Z, T) = R(S^{-1}X, S^{-1}Y, S^{-1}Z, S^{-1}T)"""
    dim = R.dim
    s_inv = inverse(S)
    current = {index: R[index] for index in product(range(dim), repeat=4)}
    for axis in range(4):
        updated = {}
        for index in product(range(dim), repeat=4):
            total = Rational(0)
            for k in range(dim):
                coeff = s_inv[k, index[axis]]
                if coeff != 0:
                    source = index[:axis] + (k,) + index[axis + 1 :]
                    total += coeff * current[source]
            updated[index] = total
        current = updated
    return CurvatureTensor.from_function(dim, lambda a, b, c, d: current[(a, b, c, d)])


# --------------------------------------------------------------------------
# Random exact samples
# --------------------------------------------------------------------------


def random_int(rng: np.random.Generator, bound: int, nonzero: bool = False) -> int:
    while True:
        value = int(rng.integers(-bound, bound + 1))
        if value or not nonzero:
            return value


def random_rational(rng: np.random.Generator, bound: int = 3, denominators: Sequence[int] = (1, 2, 3)) -> Rational:
    return Rational(random_int(rng, bound), int(denominators[int(rng.integers(0, len(denominators)))]))


def random_vector(rng: np.random.Generator, size: int, bound: int = 2) -> ImmutableMatrix:
    return ImmutableMatrix(size, 1, [Rational(random_int(rng, bound)) for _ in range(size)])


def random_symmetric(rng: np.random.Generator, size: int, bound: int = 2) -> ImmutableMatrix:
    rows = [[Rational(0)] * size for _ in range(size)]
    for i in range(size):
        for j in range(i, size):
            value = Rational(random_int(rng, bound))
            rows[i][j] = value
            rows[j][i] = value
    return ImmutableMatrix(rows)


def random_sp_element(omega: ImmutableMatrix, rng: np.random.Generator, bound: int = 2) -> ImmutableMatrix:
    """Omega^{-1} S for a random symmetric S"""
    return ImmutableMatrix(inverse(omega) * random_symmetric(rng, omega.rows, bound))


def random_symplectic_matrix(omega: ImmutableMatrix, rng: np.random.Generator, factors: int = 3) -> ImmutableMatrix:
    """Product of transvections v -> v + c Omega(w, v) w"""
    size = omega.rows
    result = identity(size)
    for _ in range(factors):
        w = random_vector(rng, size, bound=1)
        if is_zero(w):
            continue
        c = Rational(random_int(rng, 2, nonzero=True))
        transvection = ImmutableMatrix(identity(size) + c * w * w.T * omega)
        result = ImmutableMatrix(transvection * result)
    return result
