"""
Orbits of the base point under the transvection group.

All exponentials are finite sums of nilpotent powers; t is always an exact
rational.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations, product
from typing import Any, Dict, List, Optional, Sequence, Tuple

from sympy import ImmutableMatrix, Rational, factorial

from app.core.exceptions import ConsistencyError, NotNilpotentError, OutOfClassError
from app.geometry.exact_core import (
    MultiPoly,
    identity,
    is_zero,
    scalar_to_str,
    to_scalar,
    unit_vector,
    vector_to_json,
    zero_matrix,
)
from app.geometry.lambda_conditions import (
    LambdaMap,
    ShapeFamily,
    curvature_at_base,
    second_fundamental_form,
    structure_constants,
)
from app.geometry.sigma_surface import SurfaceSpec, membership, surface_symmetry
from app.geometry.symplectic_model import AffineMap

logger = logging.getLogger(__name__)

CLOSED_FORM_DEGREE = 5


def nilpotent_exp(A: ImmutableMatrix) -> ImmutableMatrix:
    """
    exp(A) as the finite sum of A^k / k!.

    Raises:
        NotNilpotentError: A^dim != 0
    """
    size = A.rows
    total = identity(size)
    power = identity(size)
    for k in range(1, size + 1):
        power = power * A
        if is_zero(power):
            return ImmutableMatrix(total)
        total = total + power / factorial(k)
    logger.error(f"exp requested for a non-nilpotent {size}x{size} matrix")
    raise NotNilpotentError(f"matrix is not nilpotent: A^{size} != 0")


def nilpotency_degree(lm: LambdaMap, x: ImmutableMatrix) -> int:
    """
    Least k >= 1 with Lambda(x)^k = 0.

    Raises:
        NotNilpotentError: no such k up to the ambient dimension
    """
    lam = lm(x)
    power = lam
    for k in range(1, lm.space.dim + 1):
        if is_zero(power):
            return k
        power = power * lam
    raise NotNilpotentError(f"Lambda({vector_to_json(x)}) is not nilpotent")


def _augmented(lam: ImmutableMatrix, x: ImmutableMatrix, t: Rational) -> ImmutableMatrix:
    """[[t Lambda, t x], [0, 0]]"""
    size = lam.rows
    top = ImmutableMatrix.hstack(t * lam, t * x)
    return ImmutableMatrix.vstack(top, zero_matrix(1, size + 1))


def transvection(lm: LambdaMap, x: ImmutableMatrix, t) -> AffineMap:
    """exp(t (Lambda(x), x)) as an affine map"""
    t = to_scalar(t)
    space = lm.space
    ambient_x = space.embed_tangent(list(x))
    exp = nilpotent_exp(_augmented(lm(x), ambient_x, t))
    size = space.dim
    return AffineMap(ImmutableMatrix(exp[:size, :size]), ImmutableMatrix(exp[:size, size]))


@dataclass
class OrbitPoint:
    t: Rational
    x_tilde: ImmutableMatrix
    u_tilde: ImmutableMatrix
    surf_residuals: Optional[List[Rational]] = None

    @property
    def ambient(self) -> ImmutableMatrix:
        return ImmutableMatrix.vstack(self.x_tilde, self.u_tilde)

    @property
    def on_surface(self) -> Optional[bool]:
        if self.surf_residuals is None:
            return None
        return all(r == 0 for r in self.surf_residuals)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "t": scalar_to_str(self.t),
            "x_tilde": vector_to_json(self.x_tilde),
            "u_tilde": vector_to_json(self.u_tilde),
            "on_surface": self.on_surface,
        }


def _closed_form(family: ShapeFamily, x: ImmutableMatrix, t: Rational) -> Tuple[ImmutableMatrix, ImmutableMatrix]:
    """
    x~ = t x + t^3/6 L^2 x + t^5/120 L^4 x and u~ = t^2/2 L x + t^4/24 L^3 x,
    with the powers of L = Lambda(x) applied to x written through the C_i.
    """
    space = family.space
    inv = space.omegaN_inverse
    size = len(family.C)
    C_x = [c * x for c in family.C]

    def normal_coords(v: ImmutableMatrix) -> ImmutableMatrix:
        # Lambda(x) v for tangent v, in normal coordinates
        weights = [space.tangent_pair(C_x[i], v) for i in range(size)]
        return ImmutableMatrix(
            size, 1, [sum((inv[i, k] * weights[i] for i in range(size)), Rational(0)) for k in range(size)]
        )

    def tangent_image(u: ImmutableMatrix) -> ImmutableMatrix:
        # Lambda(x) u for normal u
        return sum((u[k] * C_x[k] for k in range(size)), zero_matrix(space.tangent_dim, 1))

    first = normal_coords(x)
    second = tangent_image(first)
    third = normal_coords(second)
    fourth = tangent_image(third)
    x_tilde = t * x + t**3 / 6 * second + t**5 / 120 * fourth
    u_tilde = t**2 / 2 * first + t**4 / 24 * third
    return ImmutableMatrix(x_tilde), ImmutableMatrix(u_tilde)


def surf_equations(
    family: ShapeFamily,
    x_tilde: ImmutableMatrix,
    u_tilde: ImmutableMatrix,
    B_ops: Optional[Sequence[ImmutableMatrix]] = None,
) -> List[Rational]:
    """1/2 w(x~, C_i x~) + 1/2 Omega(u~, B_i u~) - Omega(f_i, u~) for each i"""
    space = family.space
    ops = B_ops if B_ops is not None else family.B_ops
    if ops is None:
        ops = [zero_matrix(space.normal_dim)] * len(family.C)
    shifted = space.omegaN0 * u_tilde
    return [
        space.tangent_pair(x_tilde, c * x_tilde) / 2 + space.normal_pair(u_tilde, b * u_tilde) / 2 - shifted[i]
        for i, (c, b) in enumerate(zip(family.C, ops))
    ]


def _normal_operators(family: ShapeFamily) -> Optional[Tuple[ImmutableMatrix, ...]]:
    if family.B_ops is not None:
        return family.B_ops
    try:
        return family.with_structure(structure_constants(family)).B_ops
    except OutOfClassError:
        logger.warning("No structure constants for the family; orbit points are not checked against the surface")
        return None


def orbit_point(lm: LambdaMap, x: ImmutableMatrix, t, B_ops: Optional[Sequence[ImmutableMatrix]] = None) -> OrbitPoint:
    """
    exp(t (Lambda(x), x)) applied to the origin, i.e. sum_{k>=1} t^k Lambda(x)^{k-1} x / k!.

    The nilpotent exponential is cross-checked against the closed-form
    expansion; the point is checked against the surface equations when
    structure constants are known or solvable.

    Raises:
        NotNilpotentError: Lambda(x) is not nilpotent
        OutOfClassError: Lambda(x)^5 != 0, outside the closed-form class
        ConsistencyError: the two routes disagree
    """
    t = to_scalar(t)
    space = lm.space
    degree = nilpotency_degree(lm, x)
    if degree > CLOSED_FORM_DEGREE:
        raise OutOfClassError(f"Lambda(x)^{CLOSED_FORM_DEGREE} != 0 (degree {degree})")
    point = transvection(lm, x, t).shift
    generic_x = space.tangent_part(point)
    generic_u = space.normal_part(point)
    closed_x, closed_u = _closed_form(lm.family, ImmutableMatrix(x), t)
    if generic_x != closed_x or generic_u != closed_u:
        logger.error(f"Orbit routes disagree at x={vector_to_json(x)}, t={t}")
        raise ConsistencyError(
            "closed-form orbit and nilpotent exponential disagree",
            [{"generic": vector_to_json(point), "closed": vector_to_json(ImmutableMatrix.vstack(closed_x, closed_u))}],
        )
    ops = B_ops if B_ops is not None else _normal_operators(lm.family)
    residuals = surf_equations(lm.family, generic_x, generic_u, ops) if ops is not None else None
    result = OrbitPoint(t=t, x_tilde=generic_x, u_tilde=generic_u, surf_residuals=residuals)
    if result.on_surface is False:
        logger.warning(f"Orbit point off the surface equations at t={t}: {[str(r) for r in residuals]}")
    return result


@dataclass
class GeodesicCheck:
    symmetry_product: bool
    group_law: Dict[str, bool] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.symmetry_product and all(self.group_law.values())

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> Dict[str, Any]:
        return {"holds": self.holds, "symmetry_product": self.symmetry_product, "group_law": self.group_law}


DEFAULT_GROUP_LAW_PAIRS = ((Rational(1), Rational(1)), (Rational(1), Rational(-1)), (Rational(1, 2), Rational(1, 2)))


def geodesic_symmetry_check(
    lm: LambdaMap,
    surf: SurfaceSpec,
    x: ImmutableMatrix,
    t,
    pairs: Sequence[Tuple[Any, Any]] = DEFAULT_GROUP_LAW_PAIRS,
) -> GeodesicCheck:
    """psi_t = S_{Exp(t/2 x)} S_0 and psi_s psi_t = psi_{s+t}"""
    t = to_scalar(t)
    psi = transvection(lm, x, t)
    midpoint = transvection(lm, x, t / 2).shift
    if not membership(surf, midpoint):
        logger.warning(f"Orbit midpoint {vector_to_json(midpoint)} is not on the surface")
        product_holds = False
    else:
        s_mid = surface_symmetry(surf, midpoint)
        s_zero = surface_symmetry(surf, zero_matrix(surf.space.dim, 1))
        product_holds = s_mid.compose(s_zero) == psi
    law = {}
    for s, u in pairs:
        s, u = to_scalar(s), to_scalar(u)
        composed = transvection(lm, x, s).compose(transvection(lm, x, u))
        law[f"{scalar_to_str(s)},{scalar_to_str(u)}"] = composed == transvection(lm, x, s + u)
    return GeodesicCheck(symmetry_product=product_holds, group_law=law)


@dataclass
class FlatnessReport:
    isotropic: bool
    flat: bool
    alpha_span_dim: int

    @property
    def agrees(self) -> bool:
        return self.isotropic == self.flat

    def __bool__(self) -> bool:
        return self.agrees

    def to_dict(self) -> Dict[str, Any]:
        return {
            "isotropic": self.isotropic,
            "flat": self.flat,
            "alpha_span_dim": self.alpha_span_dim,
            "agrees": self.agrees,
        }


def check_flat_iff_isotropic(lm: LambdaMap) -> FlatnessReport:
    """
    The image of alpha_0 spans an isotropic subspace exactly when the
    curvature at the base point vanishes.

    Raises:
        ConsistencyError: the two sides differ
    """
    space = lm.space
    dim = space.tangent_dim
    basis = [unit_vector(dim, a) for a in range(dim)]
    images = [second_fundamental_form(lm, basis[a], basis[b]) for a, b in combinations(range(dim), 2)]
    images += [second_fundamental_form(lm, basis[a], basis[a]) for a in range(dim)]
    images = [v for v in images if not is_zero(v)]
    isotropic = all(space.normal_pair(u, v) == 0 for u, v in product(images, repeat=2))
    span_dim = ImmutableMatrix.hstack(*images).rank() if images else 0
    flat = curvature_at_base(lm).is_zero
    report = FlatnessReport(isotropic=isotropic, flat=flat, alpha_span_dim=span_dim)
    if not report.agrees:
        logger.error(f"Flatness and isotropy disagree: {report.to_dict()}")
        raise ConsistencyError("isotropy of the second fundamental form and flatness disagree", [report.to_dict()])
    return report


def flat_graph_form(lm: LambdaMap) -> List[MultiPoly]:
    """
    u^k(x) = 1/2 sum_i OmegaN^{ik} w(C_i x, x), polynomials in x1..x2n.

    Raises:
        OutOfClassError: the curvature at the base point is not zero
    """
    if not curvature_at_base(lm).is_zero:
        raise OutOfClassError("graph form needs a flat family")
    family = lm.family
    space = family.space
    inv = space.omegaN_inverse
    halves = []
    for c in family.C:
        form = -(space.omega0 * c)
        halves.append(MultiPoly.quadratic_form(ImmutableMatrix((form + form.T) / 2)))
    size = len(family.C)
    graph = []
    for k in range(size):
        total = MultiPoly.zero(space.tangent_dim)
        for i in range(size):
            if inv[i, k] != 0:
                total = total + halves[i] * inv[i, k]
        graph.append(total)
    return graph


def graph_residuals(graph: Sequence[MultiPoly], point: OrbitPoint) -> List[Rational]:
    """u~^k - u^k(x~)"""
    coords = list(point.x_tilde)
    return [point.u_tilde[k] - g.evaluate(coords) for k, g in enumerate(graph)]
