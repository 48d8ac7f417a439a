"""
Subcommand implementations. Each ``cmd_*`` takes decoded inputs and returns
a RunReport; ``execute`` wraps one with timing, error mapping and the exit
code.
"""
import hashlib
import json
import logging
import time
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sympy import ImmutableMatrix

from app.core.config import settings
from app.core.exceptions import (
    AlgebraClosureError,
    DegenerateNormalSpaceError,
    DimensionMismatchError,
    FamilyNotClosedError,
    InconsistentStructureError,
    InputError,
    NotNilpotentError,
    NotSymplecticError,
    OutOfClassError,
    SymspaceError,
)
from app.geometry.codim2_classifier import ScalarMode, summarize
from app.geometry.exact_core import MultiPoly, scalar_to_str, to_scalar, unit_vector, vector, vector_to_json
from app.geometry.lambda_conditions import (
    ShapeFamily,
    StructureConstants,
    build_lambda,
    check_all_conditions,
    curvature_at_base,
    is_nilpotent_algebra,
    lambda_group_algebra,
    lower_central_series,
    structure_constants,
)
from app.geometry.moyal_quantization import (
    affine_invariance_check,
    associativity_check,
    build_projection,
    derivation_property_check,
    hamiltonian_bracket_violations,
    induced_associativity_check,
    induced_star,
    leaf_invariance_check,
    moyal_star,
    poisson_compatibility_check,
    pullback,
    transvection_invariance_check,
)
from app.geometry.orbit_engine import (
    check_flat_iff_isotropic,
    flat_graph_form,
    geodesic_symmetry_check,
    graph_residuals,
    nilpotency_degree,
    orbit_point,
)
from app.geometry.sigma_surface import (
    SurfaceSpec,
    bullet_product,
    family_from_surface,
    flatness_criterion,
    is_standard_split,
    lemma_MN_violations,
    sample_points,
    surface_from_family,
    verify_lemma_MN,
    verify_product_identities,
)
from app.geometry.symplectic_model import AffineMap, random_symplectic_matrix, random_vector
from app.schemas.geometry import (
    OrbitRequestModel,
    family_from_document,
    load_model,
    poly_from_terms,
    read_document,
    surface_from_document,
)
from app.schemas.report import CheckStatus, RunReport
from app.tasks.verification import classify_codim2_run, verify_symmetry_run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2

# rejected inputs, as opposed to failed checks or internal inconsistencies
INPUT_ERRORS = (
    InputError,
    DimensionMismatchError,
    NotSymplecticError,
    DegenerateNormalSpaceError,
    FamilyNotClosedError,
    InconsistentStructureError,
    OutOfClassError,
    FileNotFoundError,
)


def document_digest(document: Dict[str, Any]) -> str:
    canonical = json.dumps(document, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_document(path: Optional[str], bundled: Optional[str]) -> Dict[str, Any]:
    if bundled:
        return read_document(settings.bundled_file(bundled))
    if not path:
        raise InputError("an input file or --bundled NAME is required")
    return read_document(path)


def _require_exact(mode: str, command: str) -> None:
    if ScalarMode(mode) != ScalarMode.EXACT:
        raise InputError(f"{command} runs in exact mode only", ("--mode",))


def structure_relations(B_struct: StructureConstants) -> List[str]:
    """Nonzero relations C_iC_j = sum_k B^k_{ij} C_k, 1-indexed"""
    relations = []
    for i, block in enumerate(B_struct):
        for j, row in enumerate(block):
            terms = [f"{scalar_to_str(c)}*C_{k + 1}" for k, c in enumerate(row) if c != 0]
            if terms:
                relations.append(f"C_{i + 1}C_{j + 1} = {' + '.join(terms)}")
    return relations


# --------------------------------------------------------------------------
# check-lambda
# --------------------------------------------------------------------------


def cmd_check_lambda(document: Dict[str, Any], seed: int, mode: str) -> RunReport:
    _require_exact(mode, "check-lambda")
    family = family_from_document(document)
    lm = build_lambda(family)
    report = RunReport(command="check-lambda", seed=seed, mode=mode)

    conditions = check_all_conditions(lm)
    for condition in conditions:
        report.add(condition.condition, condition.holds, condition.to_dict())
    if not all(c.holds for c in conditions[:2]):
        report.skip("flat_iff_isotropic", "curvature needs conditions 1 and 2")
    else:
        curvature = curvature_at_base(lm)
        report.results["curvature"] = curvature.to_json()
        report.results["flat"] = curvature.is_zero
        flatness = check_flat_iff_isotropic(lm)
        report.add("flat_iff_isotropic", flatness.agrees, flatness.to_dict())

    dim = family.space.tangent_dim
    try:
        degrees = [nilpotency_degree(lm, unit_vector(dim, a)) for a in range(dim)]
        report.results["nilpotency_degrees"] = degrees
        report.add("lambda_nilpotent", True, {"degrees": degrees})
    except NotNilpotentError as exc:
        report.add("lambda_nilpotent", False, {"reason": str(exc)})

    try:
        algebra = lambda_group_algebra(lm)
        series = lower_central_series(algebra.basis)
        report.add("transvection_algebra_closed", True, {"dimension": algebra.dimension})
        report.add(
            "transvection_algebra_nilpotent", is_nilpotent_algebra(algebra.basis), {"lower_central_series": series}
        )
    except AlgebraClosureError as exc:
        report.add("transvection_algebra_closed", False, {"pair": list(exc.pair)})

    struct = family.B_struct
    if struct is None:
        try:
            struct = structure_constants(family)
        except OutOfClassError as exc:
            report.skip("structure_constants", str(exc))
    if struct is not None:
        report.results["B_relations"] = structure_relations(struct)
    return report


# --------------------------------------------------------------------------
# surface
# --------------------------------------------------------------------------


def cmd_surface(document: Dict[str, Any], seed: int, mode: str, verify_symmetry: int = 50) -> RunReport:
    _require_exact(mode, "surface")
    surf = surface_from_document(document)
    report = RunReport(command="surface", seed=seed, mode=mode)
    report.results["surface"] = surf.to_json()
    report.results["B_relations"] = structure_relations(surf.B_struct)
    report.add("origin_on_surface", all(v == 0 for v in surf.evaluate(ImmutableMatrix.zeros(surf.space.dim, 1))))

    identities = verify_product_identities(surf)
    report.add("product_identities", identities.holds, identities.to_dict())
    try:
        bullet_product(surf)
        report.add("bullet_associative", True)
    except InconsistentStructureError as exc:
        report.add("bullet_associative", False, {"reason": str(exc)})

    rng = np.random.default_rng(seed)
    if is_standard_split(surf):
        family = family_from_surface(surf)
        if lemma_MN_violations(family.space, surf.B_ops, family.C):
            report.skip("lemma_M_equals_N", "hypotheses on B and C do not hold")
        else:
            mn = verify_lemma_MN(family.space, surf.B_ops, family.C, rng)
            report.add("lemma_M_equals_N", mn.holds, mn.to_dict())
        criterion = flatness_criterion(surf, sample_points(surf, 3, rng))
        report.add("flatness_criterion", criterion["agrees"], criterion)
    else:
        report.skip("lemma_M_equals_N", "normal basis is not e_{2n+i}")
        report.skip("flatness_criterion", "normal basis is not e_{2n+i}")

    if verify_symmetry > 0:
        results = verify_symmetry_run(document, verify_symmetry, seed)
        failures = [r for r in results if not r["holds"]]
        report.add("extrinsic_symmetry", not failures, {"pairs": len(results), "failures": failures[:5]})
    return report


# --------------------------------------------------------------------------
# orbit
# --------------------------------------------------------------------------


def default_orbit_points(dim: int) -> List[Dict[str, Any]]:
    return [{"x": vector_to_json(unit_vector(dim, a)), "t": t} for a in range(dim) for t in ("1", "2", "1/3")]


def cmd_orbit(
    document: Dict[str, Any], seed: int, mode: str, points: Optional[List[Dict[str, Any]]] = None
) -> RunReport:
    _require_exact(mode, "orbit")
    family = family_from_document(document)
    lm = build_lambda(family)
    dim = family.space.tangent_dim
    request = load_model(OrbitRequestModel, {"points": points if points is not None else default_orbit_points(dim)})
    report = RunReport(command="orbit", seed=seed, mode=mode)

    surf = _surface_for(family)
    flat = curvature_at_base(lm).is_zero
    graph = flat_graph_form(lm) if flat else None
    rows = []
    for index, item in enumerate(request.points):
        x = vector(item.x)
        if x.rows != dim:
            raise InputError(f"x has {x.rows} entries, expected {dim}", ("points", index, "x"))
        point = orbit_point(lm, x, item.t)
        row = point.to_dict()
        if graph is not None:
            row["graph_residuals"] = [scalar_to_str(r) for r in graph_residuals(graph, point)]
        if surf is not None:
            row["geodesic"] = geodesic_symmetry_check(lm, surf, x, item.t).to_dict()
        rows.append(row)
    report.results["points"] = rows

    on_surface = [row["on_surface"] for row in rows]
    if any(value is None for value in on_surface):
        report.skip("orbit_on_surface", "no structure constants for the family")
    else:
        report.add("orbit_on_surface", all(on_surface))
    if graph is not None:
        report.add("flat_graph", all(all(r == "0" for r in row["graph_residuals"]) for row in rows))
    if surf is None:
        report.skip("geodesic_symmetry", "no surface could be built from the family")
    else:
        report.add("geodesic_symmetry", all(row["geodesic"]["holds"] for row in rows))
    return report


def _surface_for(family: ShapeFamily) -> Optional[SurfaceSpec]:
    try:
        return surface_from_family(family)
    except SymspaceError as exc:
        logger.warning(f"Surface not available for the family: {exc}")
        return None


# --------------------------------------------------------------------------
# classify-codim2
# --------------------------------------------------------------------------


def cmd_classify_codim2(n: int, count: int, seed: int, mode: str) -> RunReport:
    if n < 1 or count < 0:
        raise InputError("--n must be at least 1 and --count non-negative")
    mode = ScalarMode(mode).value
    results = classify_codim2_run(n, count, seed, mode)
    summary = summarize(results)
    report = RunReport(command="classify-codim2", seed=seed, mode=mode)
    report.results = {"n": n, **summary}
    report.add("dichotomy", not summary["violations"], {"histogram": summary["histogram"]})
    report.add("proof_lemmas", not summary["lemma_failures"], {"failures": len(summary["lemma_failures"])})
    return report


# --------------------------------------------------------------------------
# star
# --------------------------------------------------------------------------


STAR_CHECKS = ("assoc", "derivation", "invariance")


def parse_poly(spec: Any, num_vars: int, prefix: str) -> MultiPoly:
    """A JSON term list (or its text) or an expression in prefix1..prefixN and nu"""
    if isinstance(spec, list):
        return poly_from_terms(num_vars, spec)
    text = str(spec).strip()
    if text.startswith("["):
        try:
            return poly_from_terms(num_vars, json.loads(text))
        except json.JSONDecodeError as exc:
            raise InputError(f"bad polynomial term list: {exc.msg}") from exc
    return MultiPoly.parse(text, num_vars, prefix)


def _random_affine(surf: SurfaceSpec, rng: np.random.Generator) -> AffineMap:
    omega = surf.space.omega
    return AffineMap(random_symplectic_matrix(omega, rng), random_vector(rng, omega.rows))


def cmd_star(
    document: Dict[str, Any],
    seed: int,
    mode: str,
    u: Any,
    v: Any,
    w: Any = None,
    on_sigma: bool = False,
    checks: Sequence[str] = (),
    x: Optional[Sequence[str]] = None,
    t: str = "1",
) -> RunReport:
    _require_exact(mode, "star")
    unknown = [c for c in checks if c not in STAR_CHECKS]
    if unknown:
        raise InputError(f"unknown checks {unknown}; choose from {', '.join(STAR_CHECKS)}", ("--check",))
    surf = surface_from_document(document)
    space = surf.space
    rng = np.random.default_rng(seed)
    report = RunReport(command="star", seed=seed, mode=mode)

    if on_sigma:
        proj = build_projection(surf)
        size, prefix = proj.graph_vars, "x"
    else:
        proj = None
        size, prefix = space.dim, "z"
    f, g = parse_poly(u, size, prefix), parse_poly(v, size, prefix)
    h = parse_poly(w, size, prefix) if w is not None else f + g

    if proj is not None:
        series = induced_star(proj, f, g)
        report.results["projection"] = proj.to_json()
        report.add("leaf_invariant_pullbacks", leaf_invariance_check(proj, f) and leaf_invariance_check(proj, g))
        report.add("poisson_compatibility", poisson_compatibility_check(proj, f, g))
        violations = hamiltonian_bracket_violations(proj)
        report.add("hamiltonian_brackets", not violations, {"violations": [list(p) for p in violations]})
    else:
        series = moyal_star(space, f, g)
    report.results["star"] = series.to_json()
    report.results["star_text"] = str(series.value)

    for check in checks:
        if check == "assoc":
            holds = induced_associativity_check(proj, f, g, h) if proj else associativity_check(space, f, g, h)
            report.add("associativity", holds)
        elif check == "derivation":
            a, b = (pullback(proj, f), pullback(proj, g)) if proj else (f, g)
            report.add("derivation", derivation_property_check(surf, a, b))
        elif check == "invariance":
            if proj is not None:
                family = family_from_surface(surf)
                direction = vector(x) if x else unit_vector(space.tangent_dim, 0)
                holds = transvection_invariance_check(proj, build_lambda(family), f, g, direction, to_scalar(t))
                report.add("transvection_invariance", holds, {"x": vector_to_json(direction), "t": scalar_to_str(t)})
            else:
                phi = _random_affine(surf, rng)
                report.add("affine_invariance", affine_invariance_check(space, f, g, phi))
    return report


# --------------------------------------------------------------------------
# Running and rendering
# --------------------------------------------------------------------------


Runner = Callable[[Optional[Dict[str, Any]]], RunReport]


def execute(
    command: str, seed: int, mode: str, runner: Runner, load: Optional[Callable[[], Dict[str, Any]]] = None
) -> Tuple[RunReport, int]:
    """
    Load the input (if any), run a subcommand on it and map exceptions to an
    error report and an exit code.
    """
    started = time.perf_counter()
    digest = None
    try:
        document = load() if load is not None else None
        digest = document_digest(document) if document is not None else None
        report = runner(document)
        code = EXIT_OK if report.all_passed else EXIT_CHECK_FAILED
    except INPUT_ERRORS as exc:
        logger.error(f"{command}: invalid input: {exc}")
        report = RunReport(command=command, seed=seed, mode=mode, error=f"{type(exc).__name__}: {exc}")
        code = EXIT_INPUT_ERROR
    except SymspaceError as exc:
        logger.error(f"{command}: {type(exc).__name__}: {exc}")
        report = RunReport(command=command, seed=seed, mode=mode, error=f"{type(exc).__name__}: {exc}")
        code = EXIT_CHECK_FAILED
    report.input_digest = digest
    report.wall_time = round(time.perf_counter() - started, 3)
    failed = [c.name for c in report.checks if c.status == CheckStatus.FAIL]
    logger.info(f"{command} finished with exit code {code}; failed checks: {failed or 'none'}")
    return report, code


def render_text(report: RunReport) -> str:
    lines = [f"{report.command} (seed {report.seed}, mode {report.mode})"]
    if report.input_digest:
        lines.append(f"input sha256 {report.input_digest}")
    if report.error:
        lines.append(f"ERROR {report.error}")
    for check in report.checks:
        suffix = f" ({check.reason})" if check.reason else ""
        lines.append(f"  {check.status.value:<8} {check.name}{suffix}")
    for key, value in report.results.items():
        if isinstance(value, (str, int, float, bool)):
            lines.append(f"  {key}: {value}")
        elif key in ("B_relations", "histogram", "kinds", "nilpotency_degrees"):
            lines.append(f"  {key}: {json.dumps(value)}")
    return "\n".join(lines)


def render(report: RunReport, output: str) -> str:
    if output == "text":
        return render_text(report)
    return json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True)
