import numpy as np
import pytest
from sympy import ImmutableMatrix

from app.core.exceptions import NotNilpotentError, OutOfClassError
from app.geometry.exact_core import commutator, inverse, zero_matrix
from app.geometry.lambda_conditions import ShapeFamily, build_lambda, check_condition_3, curvature_at_base
from app.geometry.orbit_engine import check_flat_iff_isotropic, flat_graph_form, graph_residuals, orbit_point
from app.geometry.symplectic_model import (
    SympSpace,
    omega_form_of,
    phi_map,
    random_rational,
    random_sp_element,
    random_symmetric,
    random_symplectic_matrix,
    random_vector,
    ricci,
)

FAMILY_COUNT = 200
SWEEP_SEED = 2024


def _generic(space, rng):
    return [random_sp_element(space.omega0, rng) for _ in range(space.normal_dim)]


def _square_zero(space, rng):
    """P [[0, S_i], [0, 0]] P^{-1}: every product C_iC_j vanishes"""
    n = space.n
    P = random_symplectic_matrix(space.omega0, rng)
    P_inv = inverse(P)
    ops = []
    for _ in range(space.normal_dim):
        block = ImmutableMatrix.vstack(
            ImmutableMatrix.hstack(zero_matrix(n), random_symmetric(rng, n)), zero_matrix(n, 2 * n)
        )
        ops.append(ImmutableMatrix(P * block * P_inv))
    return ops


def _proportional(space, rng):
    base = random_sp_element(space.omega0, rng)
    return [ImmutableMatrix(random_rational(rng) * base) for _ in range(space.normal_dim)]


def _half_zero(space, rng):
    """Only the first operator of each symplectic normal pair is nonzero"""
    return [
        random_sp_element(space.omega0, rng) if i % 2 == 0 else zero_matrix(space.tangent_dim)
        for i in range(space.normal_dim)
    ]


GENERATORS = (_generic, _square_zero, _proportional, _half_zero)


def generated_family(index: int) -> ShapeFamily:
    """Family ``index`` of the sweep: n in 1..3, p in 1..2, one of four constructions"""
    rng = np.random.default_rng([SWEEP_SEED, index])
    space = SympSpace.create(1 + index % 3, 1 + (index // 3) % 2)
    return ShapeFamily.create(space, GENERATORS[index % len(GENERATORS)](space, rng))


@pytest.fixture(scope="module")
def sweep():
    """(family, Lambda, condition 3 report) for every generated family"""
    results = []
    for index in range(FAMILY_COUNT):
        family = generated_family(index)
        lm = build_lambda(family)
        results.append((family, lm, check_condition_3(lm)))
    return results


@pytest.mark.slow
class TestGeneratedFamilies:
    def test_condition_3_forms_agree(self, sweep):
        disagreements = [
            index
            for index, (_, _, report) in enumerate(sweep)
            if report.details["lambda_form"] != report.details["shape_form"]
        ]
        assert disagreements == []
        verdicts = {bool(report) for _, _, report in sweep}
        assert verdicts == {True, False}

    def test_curvature_routes_agree(self, sweep):
        """curvature_at_base raises when the bracket, shape-sum and Gauss routes differ"""
        for _, lm, _ in sweep:
            curvature_at_base(lm)

    def test_flat_iff_isotropic(self, sweep):
        reports = [check_flat_iff_isotropic(lm) for _, lm, _ in sweep]
        assert all(report.agrees for report in reports)
        assert {report.flat for report in reports} == {True, False}

    def test_flat_orbits_lie_on_the_graph(self, sweep):
        rng = np.random.default_rng(SWEEP_SEED)
        checked = 0
        for family, lm, report in sweep:
            if not report or not curvature_at_base(lm).is_zero:
                continue
            graph = flat_graph_form(lm)
            for _ in range(2):
                x = random_vector(rng, family.space.tangent_dim)
                try:
                    point = orbit_point(lm, x, random_rational(rng))
                except (NotNilpotentError, OutOfClassError):
                    continue
                assert all(r == 0 for r in graph_residuals(graph, point))
                checked += 1
        assert checked > 0


@pytest.mark.slow
def test_ricci_of_phi_on_random_pairs():
    """ric(phi(A ^ B)) = -w([A, B] ., .) on sp(2)"""
    space = SympSpace.create(2, 0)
    rng = np.random.default_rng(SWEEP_SEED)
    for _ in range(100):
        A = random_sp_element(space.omega0, rng)
        B = random_sp_element(space.omega0, rng)
        assert ricci(space, phi_map(space, A, B)) + omega_form_of(space, commutator(A, B)) == zero_matrix(4)
