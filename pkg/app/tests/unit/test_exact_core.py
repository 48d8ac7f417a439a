from fractions import Fraction

import pytest
from hypothesis import given, settings as hypothesis_settings, strategies as st
from sympy import Rational

from app.core.exceptions import DimensionMismatchError, InputError, SingularMatrixError
from app.geometry.exact_core import (
    MultiPoly,
    inverse,
    mat_mul,
    matrix,
    nullspace_basis,
    poly_arith,
    poly_diff,
    poly_eval,
    scalar_to_str,
    solve_linear,
    to_scalar,
    vector,
)


def polynomials(num_vars: int = 2, max_exp: int = 2, max_nu: int = 1):
    """Random sparse polynomials with small integer coefficients"""
    monomials = st.tuples(st.tuples(*[st.integers(0, max_exp)] * num_vars), st.integers(0, max_nu))
    terms = st.dictionaries(monomials, st.integers(-3, 3), max_size=4)
    return terms.map(lambda t: MultiPoly.from_terms(num_vars, t))


class TestScalars:
    def test_to_scalar_accepts_exact_inputs(self):
        """Ints, p/q strings and Fractions all become Rationals"""
        assert to_scalar(3) == Rational(3)
        assert to_scalar("-2/6") == Rational(-1, 3)
        assert to_scalar(Fraction(5, 4)) == Rational(5, 4)

    @pytest.mark.parametrize("value", ["1.5", "x", "1/0", True])
    def test_to_scalar_rejects_inexact_inputs(self, value):
        with pytest.raises(InputError):
            to_scalar(value)

    def test_scalar_to_str_is_canonical(self):
        assert scalar_to_str("4/2") == "2"
        assert scalar_to_str(Rational(-3, 6)) == "-1/2"


class TestMatrices:
    def test_ragged_rows_rejected(self):
        with pytest.raises(DimensionMismatchError):
            matrix([[1, 2], [3]])

    def test_inverse_of_singular_matrix(self):
        with pytest.raises(SingularMatrixError) as exc_info:
            inverse(matrix([[1, 2], [2, 4]]))
        assert exc_info.value.rank == 1

    def test_mat_mul_checks_shapes(self):
        assert mat_mul(matrix([[1, 2]]), vector([3, 4])) == matrix([[11]])
        with pytest.raises(DimensionMismatchError):
            mat_mul(vector([1, 2]), vector([3, 4]))

    def test_solve_linear_is_exact(self):
        solution = solve_linear(matrix([[2, 1], [1, 3]]), vector([1, 0]))
        assert solution == vector([Rational(3, 5), Rational(-1, 5)])
        with pytest.raises(DimensionMismatchError):
            solve_linear(matrix([[1, 2]]), vector([1]))

    def test_nullspace_basis_spans_kernel(self):
        m = matrix([[1, 1, 0], [0, 0, 1]])
        basis = nullspace_basis(m)
        assert len(basis) == 1
        assert m * basis[0] == vector([0, 0])


class TestMultiPoly:
    def test_parse_and_evaluate(self):
        p = MultiPoly.parse("z1**2 - 3*z2 + nu*z1", 2)
        assert p.evaluate([2, 1]) == Rational(1)
        assert p.evaluate([2, 1], nu=1) == Rational(3)
        assert p.nu_degree() == 1
        assert p.total_degree() == 2

    def test_parse_with_prefix(self):
        p = MultiPoly.parse("x1*x2", 2, prefix="x")
        assert p == MultiPoly.variable(2, 0) * MultiPoly.variable(2, 1)

    def test_parse_rejects_unknown_symbols(self):
        with pytest.raises(InputError):
            MultiPoly.parse("z3 + 1", 2)

    def test_quadratic_form_halves_the_matrix(self):
        """1/2 z^T S z for S = [[2, 1], [1, 0]] is z1^2 + z1 z2"""
        q = MultiPoly.quadratic_form(matrix([[2, 1], [1, 0]]))
        assert q == MultiPoly.parse("z1**2 + z1*z2", 2)

    def test_linear_form_with_constant(self):
        assert MultiPoly.linear_form([1, -2], 5) == MultiPoly.parse("z1 - 2*z2 + 5", 2)

    def test_nu_part_and_truncate(self):
        p = MultiPoly.parse("z1 + nu*z2 + nu**2", 2)
        assert p.nu_part(1) == MultiPoly.variable(2, 1)
        assert p.truncate(1) == MultiPoly.parse("z1 + nu*z2", 2)

    def test_compose_substitutes_coordinates(self):
        p = MultiPoly.parse("z1*z2 + nu", 2)
        subs = [MultiPoly.parse("z1 + z2", 2), MultiPoly.parse("z1 - z2", 2)]
        assert p.compose(subs) == MultiPoly.parse("z1**2 - z2**2 + nu", 2)

    def test_embed_shifts_coordinates(self):
        p = MultiPoly.parse("z1*z2**2", 2)
        assert p.embed(4, offset=2) == MultiPoly.parse("z3*z4**2", 4)

    def test_mismatched_rings_rejected(self):
        with pytest.raises(DimensionMismatchError):
            MultiPoly.variable(2, 0) + MultiPoly.variable(3, 0)

    def test_from_json_reports_location(self):
        with pytest.raises(InputError) as exc_info:
            MultiPoly.from_json(2, [{"exps": [1], "coeff": "1"}], ("u",))
        assert exc_info.value.location == ("u", 0)

    def test_functional_helpers(self):
        p = MultiPoly.parse("z1**2*z2 + nu", 2)
        assert poly_diff(p, 0) == MultiPoly.parse("2*z1*z2", 2)
        assert poly_eval(p, ["1/2", 4], nu=3) == Rational(4)

    def test_poly_arith_scale(self):
        p = MultiPoly.parse("z1 + 1", 1)
        assert poly_arith(p, "1/2", "scale") == MultiPoly.parse("z1/2 + 1/2", 1)
        with pytest.raises(DimensionMismatchError):
            poly_arith(p, p, "scale")

    @hypothesis_settings(max_examples=40, deadline=None)
    @given(polynomials(), polynomials())
    def test_product_rule(self, u, v):
        for var in range(2):
            assert (u * v).diff(var) == u.diff(var) * v + u * v.diff(var)

    @hypothesis_settings(max_examples=40, deadline=None)
    @given(polynomials(), polynomials(), st.integers(-2, 2), st.integers(-2, 2))
    def test_evaluation_is_a_ring_map(self, u, v, a, b):
        point = [a, b]
        assert (u * v).evaluate(point, nu=1) == u.evaluate(point, nu=1) * v.evaluate(point, nu=1)
        assert (u - v).evaluate(point) == u.evaluate(point) - v.evaluate(point)
