"""
Codimension two (p = 1): the specialised condition equations and a sampled
check of the dichotomy "flat or all products C_iC_j vanish".

With the standard forms, Omega_N^{12} = -1 and the equations read, for
l = 1, 2 and tangent x, y,

    [C_l, K] + w_1 C_2 - w_2 C_1 = 0,    K = C_1x o C_2y - C_1y o C_2x,
    w_i = w(C_i y, C_l x) - w(C_i x, C_l y),

where u o v = u (x) underline(v) + v (x) underline(u).
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations, product
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sympy import ImmutableMatrix, Rational, symbols

from app.core.config import settings
from app.core.exceptions import HypothesisError, NotSymplecticError
from app.geometry.exact_core import inverse, is_zero, matrix_to_json, nullspace_basis, zero_matrix
from app.geometry.lambda_conditions import ShapeFamily, build_lambda, curvature_at_base
from app.geometry.symplectic_model import (
    Block,
    SympSpace,
    is_in_sp,
    phi_map,
    random_int,
    random_rational,
    random_sp_element,
    random_symmetric,
    random_symplectic_matrix,
    random_vector,
    standard_form,
)
from app.schemas.report import CheckStatus

logger = logging.getLogger(__name__)


class ScalarMode(str, Enum):
    EXACT = "exact"
    FLOAT = "float"


class Codim2Verdict(str, Enum):
    FLAT = "flat"
    PRODUCTS_ZERO = "products_zero"
    VIOLATION = "violation"


@dataclass(frozen=True)
class Codim2Instance:
    n: int
    C1: ImmutableMatrix
    C2: ImmutableMatrix
    mode: ScalarMode = ScalarMode.EXACT
    kind: str = "given"

    @classmethod
    def create(cls, n: int, C1, C2, mode: ScalarMode = ScalarMode.EXACT, kind: str = "given") -> "Codim2Instance":
        space = SympSpace.create(n, 1)
        C1, C2 = ImmutableMatrix(C1), ImmutableMatrix(C2)
        for name, c in (("C1", C1), ("C2", C2)):
            if not is_in_sp(space, c, Block.TANGENT):
                raise NotSymplecticError(f"{name} is not in sp({n})")
        return cls(n=n, C1=C1, C2=C2, mode=ScalarMode(mode), kind=kind)

    @property
    def space(self) -> SympSpace:
        return SympSpace.create(self.n, 1)

    @property
    def operators(self) -> Tuple[ImmutableMatrix, ImmutableMatrix]:
        return self.C1, self.C2

    def family(self) -> ShapeFamily:
        return ShapeFamily.create(self.space, [self.C1, self.C2])

    @property
    def pencil_dim(self) -> int:
        """dim span(C1, C2)"""
        return ImmutableMatrix.hstack(ImmutableMatrix(list(self.C1)), ImmutableMatrix(list(self.C2))).rank()

    def to_dict(self) -> Dict[str, Any]:
        return {"n": self.n, "kind": self.kind, "C1": matrix_to_json(self.C1), "C2": matrix_to_json(self.C2)}


def circle(u: ImmutableMatrix, v: ImmutableMatrix, omega0: ImmutableMatrix) -> ImmutableMatrix:
    """u o v = u (x) underline(v) + v (x) underline(u) on the tangent block"""
    return ImmutableMatrix(u * v.T * omega0 + v * u.T * omega0)


def p1_residuals(inst: Codim2Instance) -> List[Dict[str, Any]]:
    """Nonzero residuals of both equations over tangent basis pairs"""
    omega0 = standard_form(inst.n)
    C = inst.operators
    dim = 2 * inst.n
    failures = []
    for alpha, beta in combinations(range(dim), 2):
        x = ImmutableMatrix(dim, 1, lambda i, j: 1 if i == alpha else 0)
        y = ImmutableMatrix(dim, 1, lambda i, j: 1 if i == beta else 0)
        K = circle(C[0] * x, C[1] * y, omega0) - circle(C[0] * y, C[1] * x, omega0)
        for l in range(2):
            cl = C[l]
            w = [
                (C[i] * y).T * omega0 * (cl * x) - (C[i] * x).T * omega0 * (cl * y)
                for i in range(2)
            ]
            residual = cl * K - K * cl + w[0][0, 0] * C[1] - w[1][0, 0] * C[0]
            if not is_zero(residual):
                failures.append({"pair": [alpha, beta], "equation": "a" if l == 0 else "b"})
    return failures


def check_p1_equations(inst: Codim2Instance) -> bool:
    return not p1_residuals(inst)


def _float(m: ImmutableMatrix) -> np.ndarray:
    return np.array(m.tolist(), dtype=float)


def check_p1_equations_float(inst: Codim2Instance, tolerance: Optional[float] = None) -> bool:
    """float64 pre-filter: residual Frobenius norm <= tol * (1 + |C1| + |C2|)"""
    tol = settings.FLOAT_TOLERANCE if tolerance is None else tolerance
    omega0 = _float(standard_form(inst.n))
    C = [_float(inst.C1), _float(inst.C2)]
    scale = 1.0 + np.linalg.norm(C[0]) + np.linalg.norm(C[1])
    eye = np.eye(2 * inst.n)

    def circ(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.outer(u, v) @ omega0 + np.outer(v, u) @ omega0

    for alpha, beta in combinations(range(2 * inst.n), 2):
        x, y = eye[alpha], eye[beta]
        K = circ(C[0] @ x, C[1] @ y) - circ(C[0] @ y, C[1] @ x)
        for l in range(2):
            cl = C[l]
            w = [(C[i] @ y) @ omega0 @ (cl @ x) - (C[i] @ x) @ omega0 @ (cl @ y) for i in range(2)]
            residual = cl @ K - K @ cl + w[0] * C[1] - w[1] * C[0]
            if np.linalg.norm(residual) > tol * scale:
                return False
    return True


def classify(inst: Codim2Instance) -> Codim2Verdict:
    """
    Raises:
        HypothesisError: the instance does not solve the p = 1 equations
    """
    if not check_p1_equations(inst):
        raise HypothesisError("instance does not solve the codimension-two equations")
    if curvature_at_base(build_lambda(inst.family())).is_zero:
        return Codim2Verdict.FLAT
    C = inst.operators
    if all(is_zero(a * b) for a, b in product(C, repeat=2)):
        return Codim2Verdict.PRODUCTS_ZERO
    logger.error(f"Dichotomy violated by {inst.to_dict()}")
    return Codim2Verdict.VIOLATION


# --------------------------------------------------------------------------
# Sampling
# --------------------------------------------------------------------------


def _proportional(n: int, rng: np.random.Generator) -> Tuple[ImmutableMatrix, ImmutableMatrix]:
    omega0 = standard_form(n)
    C1 = random_sp_element(omega0, rng)
    factor = Rational(0) if rng.random() < 0.3 else random_rational(rng)
    return C1, ImmutableMatrix(factor * C1)


def _rank_one(n: int, rng: np.random.Generator) -> Tuple[ImmutableMatrix, ImmutableMatrix]:
    """x1 o x1 and x2 o x2 with w(x1, x2) = 0"""
    omega0 = standard_form(n)
    x1 = random_vector(rng, 2 * n)
    while is_zero(x1):
        x1 = random_vector(rng, 2 * n)
    orthogonal = nullspace_basis(ImmutableMatrix(x1.T * omega0))
    x2 = sum((random_int(rng, 2) * v for v in orthogonal), zero_matrix(2 * n, 1))
    return circle(x1, x1, omega0) / 2, circle(ImmutableMatrix(x2), ImmutableMatrix(x2), omega0) / 2


def _block_conjugate(n: int, rng: np.random.Generator) -> Tuple[ImmutableMatrix, ImmutableMatrix]:
    """P [[0, S_i], [0, 0]] P^{-1} with S_i symmetric and P symplectic"""
    omega0 = standard_form(n)
    P = random_symplectic_matrix(omega0, rng)
    P_inv = inverse(P)
    ops = []
    for _ in range(2):
        S = random_symmetric(rng, n)
        block = ImmutableMatrix.vstack(ImmutableMatrix.hstack(zero_matrix(n), S), zero_matrix(n, 2 * n))
        ops.append(ImmutableMatrix(P * block * P_inv))
    return ops[0], ops[1]


def _projected(n: int, rng: np.random.Generator) -> Tuple[ImmutableMatrix, ImmutableMatrix]:
    """C1 squaring to zero, C2 a random sp element with C C1 = C1 C = 0"""
    C1, _ = _block_conjugate(n, rng)
    omega0 = standard_form(n)
    omega_inv = inverse(omega0)
    dim = 2 * n
    params = symbols(f"s0:{dim * (dim + 1) // 2}")
    entries = [[Rational(0)] * dim for _ in range(dim)]
    index = 0
    for i in range(dim):
        for j in range(i, dim):
            entries[i][j] = params[index]
            entries[j][i] = params[index]
            index += 1
    generic = omega_inv * ImmutableMatrix(entries)
    equations = list(generic * C1) + list(C1 * generic)
    system = ImmutableMatrix([[eq.coeff(s) for s in params] for eq in equations])
    kernel = nullspace_basis(system)
    if not kernel:
        return C1, zero_matrix(dim)
    coeffs = sum((random_int(rng, 2) * v for v in kernel), zero_matrix(len(params), 1))
    C2 = generic.subs(dict(zip(params, list(coeffs))))
    return C1, ImmutableMatrix(C2)


def _generic(n: int, rng: np.random.Generator) -> Tuple[ImmutableMatrix, ImmutableMatrix]:
    omega0 = standard_form(n)
    return random_sp_element(omega0, rng), random_sp_element(omega0, rng)


CANDIDATE_KINDS: Dict[str, Callable[[int, np.random.Generator], Tuple[ImmutableMatrix, ImmutableMatrix]]] = {
    "proportional": _proportional,
    "rank_one": _rank_one,
    "block_conjugate": _block_conjugate,
    "projected": _projected,
    "generic": _generic,
}


def instance_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for instance ``index`` of a seeded run"""
    return np.random.default_rng([seed, index])


def sample_instance(n: int, seed: int, index: int, mode: ScalarMode = ScalarMode.EXACT) -> Codim2Instance:
    """
    Instance ``index`` of the run: candidates of the structured kinds are
    drawn until one solves the equations. After SAMPLER_MAX_ATTEMPTS misses a
    proportional pair is returned; those always solve them.
    """
    rng = instance_rng(seed, index)
    kinds = list(CANDIDATE_KINDS)
    mode = ScalarMode(mode)
    for attempt in range(settings.SAMPLER_MAX_ATTEMPTS):
        kind = kinds[int(rng.integers(0, len(kinds)))]
        C1, C2 = CANDIDATE_KINDS[kind](n, rng)
        inst = Codim2Instance(n=n, C1=C1, C2=C2, mode=mode, kind=kind)
        if mode == ScalarMode.FLOAT and not check_p1_equations_float(inst):
            continue
        if check_p1_equations(inst):
            return inst
        if mode == ScalarMode.FLOAT:
            logger.warning(f"Float pre-filter accepted a {kind} candidate that fails exactly")
    logger.warning(f"Sampler fell back to a proportional pair for instance {index}")
    C1, C2 = _proportional(n, rng)
    return Codim2Instance(n=n, C1=C1, C2=C2, mode=mode, kind="proportional")


def sample_solutions(
    n: int, count: int, seed: int, mode: ScalarMode = ScalarMode.EXACT, start: int = 0
) -> List[Codim2Instance]:
    """Instances start .. start+count-1; each depends only on (seed, index)"""
    if n < 1:
        raise HypothesisError("n must be at least 1")
    return [sample_instance(n, seed, index, mode) for index in range(start, start + count)]


# --------------------------------------------------------------------------
# Lemma conclusions
# --------------------------------------------------------------------------


@dataclass
class LemmaCheck:
    status: CheckStatus
    detail: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"status": self.status.value, "detail": self.detail}


@dataclass
class ProofLemmaReport:
    checks: Dict[str, LemmaCheck] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return all(check.status != CheckStatus.FAIL for check in self.checks.values())

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> Dict[str, Any]:
        return {name: check.to_dict() for name, check in self.checks.items()}


def is_nilpotent_charpoly(M: ImmutableMatrix) -> bool:
    """Characteristic polynomial equal to lambda^dim"""
    coeffs = M.charpoly().all_coeffs()
    return coeffs[0] == 1 and all(c == 0 for c in coeffs[1:])


def pencil_pairs(rng: np.random.Generator) -> List[Tuple[Rational, Rational]]:
    radius = settings.PENCIL_GRID_RADIUS
    pairs = [
        (Rational(a), Rational(b))
        for a, b in product(range(-radius, radius + 1), repeat=2)
        if (a, b) != (0, 0)
    ]
    while len(pairs) < (2 * radius + 1) ** 2 - 1 + settings.PENCIL_RANDOM_PAIRS:
        a, b = random_rational(rng, 5), random_rational(rng, 5)
        if a or b:
            pairs.append((a, b))
    return pairs


def verify_proof_lemmas(inst: Codim2Instance, rng: Optional[np.random.Generator] = None) -> ProofLemmaReport:
    """
    Conclusions of the intermediate steps, stated for a two-dimensional
    pencil span(C1, C2): every element is nilpotent; ker C1 lies in ker C
    when C1^2 != 0; such a C1 has a partner C in the pencil with
    C^2 = C C1 = C1 C = 0; every element squares to zero.

    Every conclusion is evaluated. For a pencil of dimension < 2 one that
    does not hold is SKIPPED rather than FAIL. Without an element of nonzero
    square the kernel and partner conclusions hold vacuously.

    Raises:
        HypothesisError: the instance does not solve the equations
    """
    if not check_p1_equations(inst):
        raise HypothesisError("instance does not solve the codimension-two equations")
    rng = rng or np.random.default_rng(settings.DEFAULT_SEED)
    report = ProofLemmaReport()
    in_scope = inst.pencil_dim == 2

    def conclude(holds: bool, detail: Optional[str] = None) -> LemmaCheck:
        if holds or in_scope:
            return LemmaCheck(CheckStatus.of(holds), detail)
        return LemmaCheck(CheckStatus.SKIPPED, "span(C1, C2) has dimension < 2")

    C1, C2 = inst.operators

    failures = [(a, b) for a, b in pencil_pairs(rng) if not is_nilpotent_charpoly(ImmutableMatrix(a * C1 + b * C2))]
    detail = f"non-nilpotent at {[(str(a), str(b)) for a, b in failures[:3]]}" if failures else None
    report.checks["pencil_nilpotent"] = conclude(not failures, detail)

    squares_zero = is_zero(C1 * C1) and is_zero(C2 * C2) and is_zero(C1 * C2 + C2 * C1)
    report.checks["squares_zero"] = conclude(squares_zero)

    leading = next((c for c in (C1, C2, C1 + C2) if not is_zero(c * c)), None)
    if leading is None:
        vacuous = "vacuous: no element of the pencil with nonzero square"
        report.checks["kernel_inclusion"] = LemmaCheck(CheckStatus.PASS, vacuous)
        report.checks["square_zero_partner"] = LemmaCheck(CheckStatus.PASS, vacuous)
        return report
    kernel = nullspace_basis(leading)
    included = all(is_zero(c * v) for c in (C1, C2) for v in kernel)
    report.checks["kernel_inclusion"] = conclude(included)
    radius = settings.PENCIL_GRID_RADIUS
    partner = any(
        not is_zero(C) and is_zero(C * C) and is_zero(C * leading) and is_zero(leading * C)
        for C in (ImmutableMatrix(a * C1 + b * C2) for a, b in product(range(-radius, radius + 1), repeat=2))
    )
    report.checks["square_zero_partner"] = conclude(partner)
    return report


# --------------------------------------------------------------------------
# Batches
# --------------------------------------------------------------------------


def classify_instance(inst: Codim2Instance, index: int, seed: int) -> Dict[str, Any]:
    """Verdict and lemma report for one sampled instance, as a JSON-ready dict"""
    verdict = classify(inst)
    lemmas = verify_proof_lemmas(inst, np.random.default_rng([seed, index, 1]))
    result = {
        "index": index,
        "kind": inst.kind,
        "verdict": verdict.value,
        "pencil_dim": inst.pencil_dim,
        "lemmas": lemmas.to_dict(),
        "lemmas_hold": lemmas.holds,
    }
    if verdict == Codim2Verdict.VIOLATION or not lemmas.holds:
        result["instance"] = inst.to_dict()
    return result


def summarize(results: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    histogram = {verdict.value: 0 for verdict in Codim2Verdict}
    kinds: Dict[str, int] = {}
    for result in results:
        histogram[result["verdict"]] += 1
        kinds[result["kind"]] = kinds.get(result["kind"], 0) + 1
    return {
        "instances": len(results),
        "histogram": histogram,
        "kinds": kinds,
        "violations": [r["instance"] for r in results if r["verdict"] == Codim2Verdict.VIOLATION.value],
        "lemma_failures": [r for r in results if not r["lemmas_hold"]],
        "scope": "dichotomy verified on the sampled instances only",
    }


def find_commuting_pair(n: int, rng: np.random.Generator, attempts: int = 200):
    """
    Commuting A, B in sp(n) with phi(A ^ B) != 0, found by search.

    Candidates are pairs of polynomials in one random sp element and pairs
    acting on complementary symplectic blocks.
    """
    space = SympSpace.create(n, 1)
    omega0 = space.omega0
    for _ in range(attempts):
        A = random_sp_element(omega0, rng, bound=1)
        choice = int(rng.integers(0, 2))
        if choice == 0:
            # odd powers of A stay in sp and commute with A
            B = ImmutableMatrix(A * A * A)
        else:
            B = random_sp_element(omega0, rng, bound=1)
            if not is_zero(A * B - B * A):
                continue
        if is_zero(A * B - B * A) and not phi_map(space, A, B).is_zero:
            return A, B
    return None
