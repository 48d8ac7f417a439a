import numpy as np
import pytest

from app.core.exceptions import HypothesisError, NotSymplecticError
from app.geometry.codim2_classifier import (
    Codim2Instance,
    Codim2Verdict,
    ScalarMode,
    check_p1_equations,
    check_p1_equations_float,
    classify,
    classify_instance,
    find_commuting_pair,
    sample_instance,
    sample_solutions,
    summarize,
    verify_proof_lemmas,
)
from app.geometry.exact_core import commutator, identity, matrix, zero_matrix
from app.geometry.lambda_conditions import build_lambda, check_condition_3
from app.geometry.symplectic_model import SympSpace, phi_map
from app.schemas.report import CheckStatus


def _unit(size, row, col):
    return matrix([[1 if (i, j) == (row, col) else 0 for j in range(size)] for i in range(size)])


@pytest.fixture
def flat_instance():
    return Codim2Instance.create(1, matrix([[0, 1], [0, 0]]), zero_matrix(2))


@pytest.fixture
def products_zero_instance():
    return Codim2Instance.create(2, _unit(4, 0, 2), _unit(4, 1, 3))


@pytest.fixture
def failing_instance():
    return Codim2Instance.create(1, matrix([[1, 0], [0, -1]]), matrix([[0, 1], [0, 0]]))


class TestEquations:
    def test_zero_pair_solves_the_equations(self):
        assert check_p1_equations(Codim2Instance.create(2, zero_matrix(4), zero_matrix(4)))

    def test_flat_pair_solves_the_equations(self, flat_instance):
        assert check_p1_equations(flat_instance)
        assert check_p1_equations_float(flat_instance)

    def test_failing_pair(self, failing_instance):
        assert not check_p1_equations(failing_instance)
        assert not check_p1_equations_float(failing_instance)

    @pytest.mark.parametrize("fixture", ["flat_instance", "products_zero_instance", "failing_instance"])
    def test_agrees_with_condition_3(self, fixture, request):
        inst = request.getfixturevalue(fixture)
        assert check_p1_equations(inst) == bool(check_condition_3(build_lambda(inst.family(), strict=False)))

    def test_operators_must_be_in_sp(self):
        with pytest.raises(NotSymplecticError):
            Codim2Instance.create(1, identity(2), zero_matrix(2))


class TestClassify:
    def test_single_operator_is_flat(self, flat_instance):
        assert classify(flat_instance) == Codim2Verdict.FLAT

    def test_curved_pair_has_zero_products(self, products_zero_instance):
        assert classify(products_zero_instance) == Codim2Verdict.PRODUCTS_ZERO

    def test_classify_needs_a_solution(self, failing_instance):
        with pytest.raises(HypothesisError):
            classify(failing_instance)
        with pytest.raises(HypothesisError):
            verify_proof_lemmas(failing_instance)

    def test_lemmas_on_a_pencil_of_square_zero_elements(self, products_zero_instance):
        report = verify_proof_lemmas(products_zero_instance, np.random.default_rng(3))
        assert report.holds
        assert {check.status for check in report.checks.values()} == {CheckStatus.PASS}
        assert report.checks["kernel_inclusion"].detail.startswith("vacuous")

    def test_lemmas_on_a_one_dimensional_pencil(self, flat_instance):
        report = verify_proof_lemmas(flat_instance)
        assert flat_instance.pencil_dim == 1
        assert report.checks["pencil_nilpotent"].status == CheckStatus.PASS
        assert report.checks["squares_zero"].status == CheckStatus.PASS
        assert report.holds

    def test_lemmas_hold_vacuously_for_the_zero_pair(self):
        inst = Codim2Instance.create(2, zero_matrix(4), zero_matrix(4))
        report = verify_proof_lemmas(inst)
        assert inst.pencil_dim == 0
        assert {check.status for check in report.checks.values()} == {CheckStatus.PASS}

    def test_non_nilpotent_proportional_pair_is_outside_the_lemmas(self):
        """C2 = 2 C1 with C1 = diag(1, -1): a solution, but the pencil is not nilpotent"""
        C1 = matrix([[1, 0], [0, -1]])
        inst = Codim2Instance.create(1, C1, 2 * C1)
        report = verify_proof_lemmas(inst)
        assert report.checks["pencil_nilpotent"].status == CheckStatus.SKIPPED
        assert report.checks["squares_zero"].status == CheckStatus.SKIPPED
        assert report.checks["kernel_inclusion"].status == CheckStatus.PASS
        assert report.holds


class TestSampling:
    def test_instances_depend_only_on_seed_and_index(self):
        batch = sample_solutions(1, 4, seed=11)
        assert sample_instance(1, 11, 2) == batch[2]
        assert sample_solutions(1, 2, seed=11, start=2) == batch[2:]

    def test_sampled_instances_solve_the_equations(self):
        for inst in sample_solutions(2, 4, seed=5):
            assert check_p1_equations(inst)
            assert classify(inst) != Codim2Verdict.VIOLATION

    def test_float_mode(self):
        inst = sample_instance(1, 3, 0, ScalarMode.FLOAT)
        assert inst.mode == ScalarMode.FLOAT
        assert check_p1_equations(inst)

    def test_n_must_be_positive(self):
        with pytest.raises(HypothesisError):
            sample_solutions(0, 1, seed=1)


class TestSummaries:
    def test_classify_instance_result(self, products_zero_instance):
        result = classify_instance(products_zero_instance, index=4, seed=9)
        assert result["verdict"] == "products_zero"
        assert result["lemmas_hold"]
        assert "instance" not in result

    def test_summarize(self):
        results = [
            {"verdict": "flat", "kind": "proportional", "lemmas_hold": True},
            {"verdict": "flat", "kind": "rank_one", "lemmas_hold": True},
            {"verdict": "products_zero", "kind": "rank_one", "lemmas_hold": True},
        ]
        summary = summarize(results)
        assert summary["instances"] == 3
        assert summary["histogram"] == {"flat": 2, "products_zero": 1, "violation": 0}
        assert summary["kinds"] == {"proportional": 1, "rank_one": 2}
        assert summary["violations"] == []
        assert summary["lemma_failures"] == []


class TestCommutingPairs:
    def test_no_pair_in_sp_1(self):
        """Commuting elements of sp(1) are proportional"""
        assert find_commuting_pair(1, np.random.default_rng(0), attempts=20) is None

    def test_pair_found_in_sp_2(self):
        pair = find_commuting_pair(2, np.random.default_rng(0))
        assert pair is not None
        A, B = pair
        space = SympSpace.create(2, 1)
        assert commutator(A, B) == zero_matrix(4)
        assert not phi_map(space, A, B).is_zero
