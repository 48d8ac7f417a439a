"""
Moyal star product on the ambient space and the star product it induces on
a surface Sigma whose shape operators multiply to zero.

Conventions: Omega^{ij} is the (i, j) entry of the inverse of the ambient
form matrix, {u, v} = sum Omega^{ij} d_i u d_j v, and

    u * v = sum_r (nu/2)^r / r! C_r(u, v),
    C_r(u, v) = sum Omega^{i1 j1}..Omega^{ir jr} d_{i1..ir} u d_{j1..jr} v,

so that u * v - v * u = nu {u, v} + O(nu^3). The hamiltonian field of F is
X_F = {F, .}; for F_i(z) = 1/2 Omega(z, A_i z) - Omega(a_i, z) this is
z -> -(A_i z + a_i).
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from math import factorial
from typing import Any, Dict, List, Tuple, Union

from sympy import ImmutableMatrix, Rational

from app.core.exceptions import ConsistencyError, DimensionMismatchError, OutOfClassError
from app.geometry.exact_core import MultiPoly, is_zero, matrix_to_json
from app.geometry.lambda_conditions import LambdaMap
from app.geometry.orbit_engine import transvection
from app.geometry.sigma_surface import SurfaceSpec, family_from_surface, is_standard_split
from app.geometry.symplectic_model import AffineMap, SympSpace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StarSeries:
    """A finite nu-series; ``value`` carries nu as a ring variable"""

    value: MultiPoly

    @property
    def num_vars(self) -> int:
        return self.value.num_vars

    @property
    def max_nu_degree(self) -> int:
        return self.value.nu_degree()

    def part(self, degree: int) -> MultiPoly:
        return self.value.nu_part(degree)

    def __sub__(self, other: "StarSeries") -> "StarSeries":
        return StarSeries(self.value - other.value)

    def to_json(self) -> Dict[str, Any]:
        return {
            "num_vars": self.num_vars,
            "max_nu_degree": self.max_nu_degree,
            "parts": {str(r): self.part(r).to_json() for r in range(self.max_nu_degree + 1)},
        }


def poisson_bracket(space: SympSpace, u: MultiPoly, v: MultiPoly) -> MultiPoly:
    """{u, v} = sum Omega^{ij} d_i u d_j v"""
    _check_vars(space, u, v)
    inv = space.omega_inverse
    total = MultiPoly.zero(space.dim)
    du = [u.diff(i) for i in range(space.dim)]
    dv = [v.diff(j) for j in range(space.dim)]
    for i in range(space.dim):
        if du[i].is_zero:
            continue
        for j in range(space.dim):
            if inv[i, j] != 0 and not dv[j].is_zero:
                total = total + du[i] * dv[j] * inv[i, j]
    return total


def _check_vars(space: SympSpace, *polys: MultiPoly) -> None:
    for poly in polys:
        if poly.num_vars != space.dim:
            raise DimensionMismatchError(f"polynomial in {poly.num_vars} variables on a {space.dim}-dimensional space")


@lru_cache(maxsize=None)
def _diagonal(num_vars: int) -> Tuple[MultiPoly, ...]:
    """Substitution w = z from the doubled ring back to num_vars variables"""
    gens = [MultiPoly.variable(num_vars, i) for i in range(num_vars)]
    return tuple(gens + gens)


def moyal_star(space: SympSpace, u: MultiPoly, v: MultiPoly) -> StarSeries:
    """
    The full series; the bidifferential operator D = sum Omega^{ij} d_{z_i} d_{w_j}
    acts on u(z) v(w) in a doubled ring and the diagonal w = z is taken at the end.
    Terminates once D^r kills the product, at r <= min(deg u, deg v) + 1.
    """
    _check_vars(space, u, v)
    size = space.dim
    inv = space.omega_inverse
    pairs = [(i, j, inv[i, j]) for i in range(size) for j in range(size) if inv[i, j] != 0]
    term = u.embed(2 * size, 0) * v.embed(2 * size, size)
    nu = MultiPoly.nu(size)
    diagonal = list(_diagonal(size))
    total = MultiPoly.zero(size)
    r = 0
    while not term.is_zero:
        weight = Rational(1, 2**r * factorial(r))
        total = total + term.compose(diagonal, size) * (nu**r) * weight
        following = MultiPoly.zero(2 * size)
        for i, j, coeff in pairs:
            following = following + term.diff(i).diff(size + j) * coeff
        term = following
        r += 1
    logger.debug(f"Moyal product of degrees {u.total_degree()} and {v.total_degree()} stopped at r={r}")
    return StarSeries(total)


def star_commutator(space: SympSpace, u: MultiPoly, v: MultiPoly) -> StarSeries:
    return moyal_star(space, u, v) - moyal_star(space, v, u)


def associativity_check(space: SympSpace, u: MultiPoly, v: MultiPoly, w: MultiPoly) -> bool:
    left = moyal_star(space, moyal_star(space, u, v).value, w)
    right = moyal_star(space, u, moyal_star(space, v, w).value)
    return left == right


def affine_pullback(u: MultiPoly, phi: AffineMap) -> MultiPoly:
    """u o phi for an affine map of the coordinates of u"""
    size = u.num_vars
    if phi.linear.shape != (size, size):
        raise DimensionMismatchError(f"affine map of size {phi.linear.rows} on {size} variables")
    substitutions = [MultiPoly.linear_form(list(phi.linear.row(i)), phi.shift[i]) for i in range(size)]
    return u.compose(substitutions, size)


def affine_invariance_check(space: SympSpace, u: MultiPoly, v: MultiPoly, phi: AffineMap) -> bool:
    """(u o phi) * (v o phi) == (u * v) o phi; phi should be symplectic"""
    left = moyal_star(space, affine_pullback(u, phi), affine_pullback(v, phi))
    right = affine_pullback(moyal_star(space, u, v).value, phi)
    return left.value == right


# --------------------------------------------------------------------------
# Hamiltonian fields of the surface equations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HamiltonianField:
    """X_{F_i} as a derivation: components -(A_i z + a_i)_k as linear polynomials"""

    index: int
    components: Tuple[MultiPoly, ...]

    def __call__(self, f: MultiPoly) -> MultiPoly:
        if f.num_vars != len(self.components):
            raise DimensionMismatchError(f"field on {len(self.components)} variables applied to {f.num_vars}")
        total = MultiPoly.zero(f.num_vars)
        for k, component in enumerate(self.components):
            if not component.is_zero:
                total = total + component * f.diff(k)
        return total


def _surface_of(source: Union[SurfaceSpec, "FoliationProjection"]) -> SurfaceSpec:
    return source.surf if isinstance(source, FoliationProjection) else source


def hamiltonian_vector_field(source: Union[SurfaceSpec, "FoliationProjection"], i: int) -> HamiltonianField:
    surf = _surface_of(source)
    generator = surf.generators[i]
    A, a = -generator.A, -generator.a
    components = tuple(MultiPoly.linear_form(list(A.row(k)), a[k]) for k in range(surf.space.dim))
    return HamiltonianField(index=i, components=components)


def derivation_property_check(surf: SurfaceSpec, u: MultiPoly, v: MultiPoly) -> bool:
    """X_{F_i}(u * v) == X_{F_i}u * v + u * X_{F_i}v for every i"""
    space = surf.space
    uv = moyal_star(space, u, v).value
    for i in range(surf.size):
        field_ = hamiltonian_vector_field(surf, i)
        left = field_(uv)
        right = moyal_star(space, field_(u), v).value + moyal_star(space, u, field_(v)).value
        if left != right:
            logger.warning(f"Derivation property fails for X_F{i + 1}")
            return False
    return True


# --------------------------------------------------------------------------
# Projection along the leaves
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FoliationProjection:
    """
    pi(z) = z - sum_i s_i(z) (A_i z + a_i) with s_i = sum_j Gram^{ji} F_j,
    the endpoint on Sigma of the commuting hamiltonian flows through z.
    ``graph`` gives the ambient point over graph coordinates x in R^{2n}.
    """

    surf: SurfaceSpec
    components: Tuple[MultiPoly, ...]
    graph: Tuple[MultiPoly, ...]

    @property
    def space(self) -> SympSpace:
        return self.surf.space

    @property
    def graph_vars(self) -> int:
        return self.surf.space.tangent_dim

    def tangent_components(self) -> List[MultiPoly]:
        return list(self.components[: self.graph_vars])

    def idempotence_residuals(self) -> List[MultiPoly]:
        size = self.space.dim
        twice = [c.compose(list(self.components), size) for c in self.components]
        return [a - b for a, b in zip(twice, self.components) if a != b]

    def surface_residuals(self) -> List[MultiPoly]:
        size = self.space.dim
        return [r for r in (f.compose(list(self.components), size) for f in self.surf.F) if not r.is_zero]

    def to_json(self) -> Dict[str, Any]:
        return {
            "components": [str(c) for c in self.components],
            "graph": [str(g) for g in self.graph],
        }


def projection_class_violations(surf: SurfaceSpec) -> List[str]:
    """Reasons the surface falls outside the class with A_iA_j = 0 and A_i a_j = 0"""
    problems = []
    if not is_standard_split(surf):
        problems.append("graph coordinates need a_i = e_{2n+i}")
    A = [g.A for g in surf.generators]
    for i, j in ((i, j) for i in range(surf.size) for j in range(surf.size)):
        if not is_zero(A[i] * A[j]):
            problems.append(f"A_{i + 1}A_{j + 1} != 0")
        if not is_zero(A[i] * surf.generators[j].a):
            problems.append(f"A_{i + 1}a_{j + 1} != 0")
    return problems


def build_projection(surf: SurfaceSpec) -> FoliationProjection:
    """
    Raises:
        OutOfClassError: some product A_iA_j or A_i a_j is nonzero, or the
            normal basis is not standard
        ConsistencyError: pi fails idempotence or does not land on Sigma
    """
    problems = projection_class_violations(surf)
    if problems:
        logger.error(f"Projection rejected: {problems[0]}")
        raise OutOfClassError(f"surface outside the quantizable class: {'; '.join(problems[:3])}")
    space = surf.space
    size = space.dim
    gram_inv = surf.gram_inverse
    s = [
        sum((surf.F[j] * gram_inv[j, i] for j in range(surf.size) if gram_inv[j, i] != 0), MultiPoly.zero(size))
        for i in range(surf.size)
    ]
    coords = [MultiPoly.variable(size, k) for k in range(size)]
    components = []
    for k in range(size):
        value = coords[k]
        for i, generator in enumerate(surf.generators):
            direction = MultiPoly.linear_form(list(generator.A.row(k)), generator.a[k])
            if not direction.is_zero and not s[i].is_zero:
                value = value - s[i] * direction
        components.append(value)

    graph_vars = space.tangent_dim
    # F = 0 solves u as a quadratic in the tangent block
    graph = tuple([MultiPoly.variable(graph_vars, k) for k in range(graph_vars)] + _graph_normal(surf, graph_vars))

    proj = FoliationProjection(surf=surf, components=tuple(components), graph=graph)
    failures = proj.idempotence_residuals() + proj.surface_residuals()
    failures += [r for r in (f.compose(list(graph), graph_vars) for f in surf.F) if not r.is_zero]
    if failures:
        logger.error(f"Projection is not an idempotent map onto Sigma: {len(failures)} residual components")
        raise ConsistencyError("projection fails pi o pi = pi or F o pi = 0", [str(f) for f in failures[:5]])
    logger.info(f"Built leaf projection for n={space.n}, p={space.p}")
    return proj


def _graph_normal(surf: SurfaceSpec, graph_vars: int) -> List[MultiPoly]:
    """u^k(x) = 1/2 sum_j OmegaN^{kj} w(x, C_j x)"""
    family = family_from_surface(surf)
    inv = surf.gram_inverse
    quadratics = [MultiPoly.quadratic_form(ImmutableMatrix(surf.space.omega0 * c)) for c in family.C]
    return [
        sum((quadratics[j] * inv[k, j] for j in range(surf.size) if inv[k, j] != 0), MultiPoly.zero(graph_vars))
        for k in range(surf.size)
    ]


def pullback(proj: FoliationProjection, f: MultiPoly) -> MultiPoly:
    """f o (tangent block of pi); annihilated by every X_{F_i}"""
    if f.num_vars != proj.graph_vars:
        raise DimensionMismatchError(f"graph functions take {proj.graph_vars} variables, got {f.num_vars}")
    return f.compose(proj.tangent_components(), proj.space.dim)


def restrict(proj: FoliationProjection, u: MultiPoly) -> MultiPoly:
    """u restricted to Sigma, in graph coordinates"""
    return u.compose(list(proj.graph), proj.graph_vars)


def induced_star(proj: FoliationProjection, f: MultiPoly, g: MultiPoly) -> StarSeries:
    """f *_Sigma g = (pi^*f * pi^*g) restricted to Sigma"""
    ambient = moyal_star(proj.space, pullback(proj, f), pullback(proj, g))
    return StarSeries(restrict(proj, ambient.value))


def sigma_poisson_bracket(proj: FoliationProjection, f: MultiPoly, g: MultiPoly) -> MultiPoly:
    """{f, g}_Sigma = {pi^*f, pi^*g} restricted to Sigma"""
    return restrict(proj, poisson_bracket(proj.space, pullback(proj, f), pullback(proj, g)))


def poisson_compatibility_check(proj: FoliationProjection, f: MultiPoly, g: MultiPoly) -> bool:
    """{pi^*f, pi^*g} == pi^*{f, g}_Sigma"""
    ambient = poisson_bracket(proj.space, pullback(proj, f), pullback(proj, g))
    return ambient == pullback(proj, sigma_poisson_bracket(proj, f, g))


def leaf_invariance_check(proj: FoliationProjection, f: MultiPoly) -> bool:
    """X_{F_i}(pi^*f) == 0 for every i"""
    lifted = pullback(proj, f)
    return all(hamiltonian_vector_field(proj, i)(lifted).is_zero for i in range(proj.surf.size))


def induced_associativity_check(proj: FoliationProjection, f: MultiPoly, g: MultiPoly, h: MultiPoly) -> bool:
    left = induced_star(proj, induced_star(proj, f, g).value, h)
    right = induced_star(proj, f, induced_star(proj, g, h).value)
    return left == right


def hamiltonian_brackets(proj: FoliationProjection) -> List[List[MultiPoly]]:
    """{F_i, F_j}; in the quantizable class these are the constants -Omega(a_i, a_j)"""
    space = proj.space
    F = proj.surf.F
    return [[poisson_bracket(space, F[i], F[j]) for j in range(len(F))] for i in range(len(F))]


def hamiltonian_bracket_violations(proj: FoliationProjection) -> List[Tuple[int, int]]:
    """Pairs where {F_i, F_j} restricted to Sigma is not the constant -Omega(a_i, a_j)"""
    brackets = hamiltonian_brackets(proj)
    size = proj.graph_vars
    return [
        (i, j)
        for i, row in enumerate(brackets)
        for j, value in enumerate(row)
        if restrict(proj, value) != MultiPoly.constant(size, -proj.surf.gram[i, j])
    ]


# --------------------------------------------------------------------------
# Invariance under transvections
# --------------------------------------------------------------------------


def sigma_transvection(proj: FoliationProjection, lm: LambdaMap, x: ImmutableMatrix, t) -> Tuple[MultiPoly, ...]:
    """psi restricted to Sigma in graph coordinates: tangent block of psi(graph(x'))"""
    psi = transvection(lm, x, t)
    size = proj.graph_vars
    ambient = []
    for k in range(proj.space.dim):
        value = MultiPoly.constant(size, psi.shift[k])
        for col in range(proj.space.dim):
            if psi.linear[k, col] != 0:
                value = value + proj.graph[col] * psi.linear[k, col]
        ambient.append(value)
    return tuple(ambient[:size])


def transvection_invariance_check(
    proj: FoliationProjection, lm: LambdaMap, f: MultiPoly, g: MultiPoly, x: ImmutableMatrix, t
) -> bool:
    """
    (f o psi) *_Sigma (g o psi) == (f *_Sigma g) o psi.

    Raises:
        ConsistencyError: lm was not built from the shape data of proj's surface
    """
    family = family_from_surface(proj.surf)
    if tuple(lm.family.C) != tuple(family.C):
        raise ConsistencyError(
            "Lambda and the surface carry different shape operators",
            [{"lambda": [matrix_to_json(c) for c in lm.family.C], "surface": [matrix_to_json(c) for c in family.C]}],
        )
    psi = list(sigma_transvection(proj, lm, x, t))
    size = proj.graph_vars
    left = induced_star(proj, f.compose(psi, size), g.compose(psi, size))
    right = induced_star(proj, f, g).value.compose(psi, size)
    return left.value == right


def parse_graph_poly(text: str, proj: FoliationProjection) -> MultiPoly:
    """Parse an expression in x1..x2n and nu"""
    return MultiPoly.parse(text, proj.graph_vars, prefix="x")


def parse_ambient_poly(text: str, space: SympSpace) -> MultiPoly:
    """Parse an expression in z1..zN and nu"""
    return MultiPoly.parse(text, space.dim, prefix="z")

