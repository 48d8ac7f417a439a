from unittest.mock import patch

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings, strategies as st

from app.core.exceptions import ConsistencyError, DimensionMismatchError, OutOfClassError
from app.geometry.exact_core import MultiPoly, identity, vector
from app.geometry.lambda_conditions import build_lambda
from app.geometry.moyal_quantization import (
    affine_invariance_check,
    affine_pullback,
    associativity_check,
    build_projection,
    derivation_property_check,
    hamiltonian_bracket_violations,
    hamiltonian_brackets,
    hamiltonian_vector_field,
    induced_associativity_check,
    induced_star,
    leaf_invariance_check,
    moyal_star,
    parse_ambient_poly,
    parse_graph_poly,
    poisson_bracket,
    poisson_compatibility_check,
    pullback,
    restrict,
    sigma_poisson_bracket,
    star_commutator,
    transvection_invariance_check,
)
from app.geometry.symplectic_model import (
    AffineMap,
    SympSpace,
    random_rational,
    random_symplectic_matrix,
    random_vector,
)

PLANE = SympSpace.create(1, 0)


def small_polynomials():
    monomials = st.tuples(st.tuples(st.integers(0, 2), st.integers(0, 2)), st.just(0))
    terms = st.dictionaries(monomials, st.integers(-2, 2), max_size=3)
    return terms.map(lambda t: MultiPoly.from_terms(2, t))


def z(text):
    return parse_ambient_poly(text, PLANE)


@pytest.fixture
def projection(parabola):
    return build_projection(parabola)


class TestMoyalStar:
    def test_coordinate_product(self):
        assert moyal_star(PLANE, z("z1"), z("z2")).value == z("z1*z2 - nu/2")

    def test_squares(self):
        assert moyal_star(PLANE, z("z1**2"), z("z2**2")).value == z("z1**2*z2**2 - 2*nu*z1*z2 + nu**2/2")

    def test_series_parts(self):
        series = moyal_star(PLANE, z("z1**2"), z("z2**2"))
        assert series.max_nu_degree == 2
        assert series.part(0) == z("z1**2*z2**2")
        assert series.to_json()["max_nu_degree"] == 2

    def test_commutator_of_quadratics_is_nu_times_the_bracket(self):
        u, v = z("z1**2 + z2"), z("z1*z2")
        assert star_commutator(PLANE, u, v).value == poisson_bracket(PLANE, u, v) * MultiPoly.nu(2)

    def test_constant_is_a_unit(self):
        u = z("z1**3 - z1*z2")
        assert moyal_star(PLANE, MultiPoly.constant(2, 1), u).value == u

    def test_polynomials_must_live_on_the_space(self):
        with pytest.raises(DimensionMismatchError):
            moyal_star(PLANE, z("z1"), MultiPoly.variable(4, 0))

    @hypothesis_settings(max_examples=25, deadline=None)
    @given(small_polynomials(), small_polynomials(), small_polynomials())
    def test_associativity(self, u, v, w):
        assert associativity_check(PLANE, u, v, w)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_invariance_under_affine_symplectic_maps(self, seed):
        rng = np.random.default_rng(seed)
        phi = AffineMap(random_symplectic_matrix(PLANE.omega, rng), random_vector(rng, 2))
        assert affine_invariance_check(PLANE, z("z1**2*z2"), z("z2**2 + z1"), phi)

    def test_affine_pullback(self):
        phi = AffineMap(identity(2), vector([1, -2]))
        assert affine_pullback(z("z1*z2"), phi) == z("(z1 + 1)*(z2 - 2)")


class TestAmbientDerivation:
    def test_hamiltonian_fields_are_derivations(self, parabola):
        u = parse_ambient_poly("z1*z3 + z2**2", parabola.space)
        v = parse_ambient_poly("z4 - z1*z2", parabola.space)
        assert derivation_property_check(parabola, u, v)


class TestProjection:
    def test_parabola_projection(self, projection):
        space = projection.space
        expected = [parse_ambient_poly("z1 - z2*z3", space), parse_ambient_poly("z2", space)]
        assert projection.tangent_components() == expected
        assert projection.graph[2].is_zero
        assert projection.graph[3] == parse_graph_poly("-x2**2/2", projection)
        assert projection.idempotence_residuals() == []
        assert projection.surface_residuals() == []

    def test_induced_product_of_coordinates(self, projection):
        x1, x2 = parse_graph_poly("x1", projection), parse_graph_poly("x2", projection)
        assert induced_star(projection, x1, x2).value == parse_graph_poly("x1*x2 - nu/2", projection)

    def test_pullbacks_are_leaf_invariant(self, projection):
        for text in ("x1", "x2", "x1**2*x2 - x2**3"):
            assert leaf_invariance_check(projection, parse_graph_poly(text, projection))

    def test_pullback_takes_graph_functions(self, projection):
        with pytest.raises(DimensionMismatchError):
            pullback(projection, MultiPoly.variable(4, 0))

    def test_poisson_compatibility(self, projection):
        f, g = parse_graph_poly("x1**2", projection), parse_graph_poly("x1*x2 + x2", projection)
        assert poisson_compatibility_check(projection, f, g)

    def test_induced_product_is_associative(self, projection):
        f, g, h = (parse_graph_poly(t, projection) for t in ("x1", "x2**2", "x1*x2"))
        assert induced_associativity_check(projection, f, g, h)

    def test_hamiltonian_brackets_are_constant(self, projection):
        assert hamiltonian_bracket_violations(projection) == []

    def test_hamiltonian_brackets_restrict_to_constants(self, projection):
        gram = projection.surf.gram
        brackets = hamiltonian_brackets(projection)
        for i, row in enumerate(brackets):
            for j, value in enumerate(row):
                assert restrict(projection, value) == MultiPoly.constant(projection.graph_vars, -gram[i, j])

    def test_bracket_vanishing_only_at_the_origin_is_reported(self, projection):
        """{F_1, F_2} shifted by z2 agrees with the constant at 0 but not along Sigma"""
        brackets = hamiltonian_brackets(projection)
        brackets[0][1] = brackets[0][1] + MultiPoly.variable(projection.space.dim, 1)
        with patch("app.geometry.moyal_quantization.hamiltonian_brackets", return_value=brackets):
            assert hamiltonian_bracket_violations(projection) == [(0, 1)]

    def test_surface_outside_the_class(self, r8_surface):
        """A_3 A_4 = A_2 != 0"""
        with pytest.raises(OutOfClassError):
            build_projection(r8_surface)


class TestTransvectionInvariance:
    @pytest.mark.parametrize("x,t", [([1, 0], 1), ([0, 1], 2), ([1, 1], "1/2")])
    def test_induced_product_is_invariant(self, projection, parabola_lambda, x, t):
        f, g = parse_graph_poly("x1*x2", projection), parse_graph_poly("x2**2 - x1", projection)
        assert transvection_invariance_check(projection, parabola_lambda, f, g, vector(x), t)

    def test_lambda_from_another_family(self, projection, zero_family):
        f = parse_graph_poly("x1", projection)
        with pytest.raises(ConsistencyError) as exc_info:
            transvection_invariance_check(projection, build_lambda(zero_family), f, f, vector([1, 0]), 1)
        assert "lambda" in exc_info.value.details[0]


class TestHamiltonianFields:
    def test_field_of_the_first_equation(self, parabola):
        """X_F1 = -(A_1 z + a_1) = (-z2, 0, -1, 0)"""
        field_ = hamiltonian_vector_field(parabola, 0)
        space = parabola.space
        assert field_(parse_ambient_poly("z1", space)) == parse_ambient_poly("-z2", space)
        assert field_(parse_ambient_poly("z3", space)) == parse_ambient_poly("-1", space)
        assert field_(parse_ambient_poly("z2*z4", space)).is_zero

    def test_bracket_on_sigma(self, projection):
        x1, x2 = parse_graph_poly("x1", projection), parse_graph_poly("x2", projection)
        assert sigma_poisson_bracket(projection, x1, x2) == parse_graph_poly("-1", projection)


def random_poly(rng, num_vars, degree, terms=3):
    """A few random monomials of total degree <= degree with rational coefficients"""
    raw = {}
    for _ in range(terms):
        exps = [0] * num_vars
        for _ in range(int(rng.integers(0, degree + 1))):
            exps[int(rng.integers(0, num_vars))] += 1
        raw[(tuple(exps), 0)] = random_rational(rng)
    return MultiPoly.from_terms(num_vars, raw)


@pytest.mark.slow
class TestSeededSweeps:
    def test_ambient_associativity(self, parabola, rng):
        space = parabola.space
        for _ in range(30):
            u, v, w = (random_poly(rng, space.dim, 3) for _ in range(3))
            assert associativity_check(space, u, v, w)

    def test_leading_terms(self, parabola, rng):
        """C_0 is the pointwise product and the nu-part of the commutator is the bracket"""
        space = parabola.space
        for _ in range(30):
            u, v = random_poly(rng, space.dim, 3), random_poly(rng, space.dim, 3)
            assert moyal_star(space, u, v).part(0) == u * v
            assert star_commutator(space, u, v).part(1) == poisson_bracket(space, u, v)

    def test_derivation_property(self, parabola, rng):
        for _ in range(30):
            u, v = random_poly(rng, parabola.space.dim, 3), random_poly(rng, parabola.space.dim, 3)
            assert derivation_property_check(parabola, u, v)

    def test_induced_associativity(self, projection, rng):
        for _ in range(20):
            f, g, h = (random_poly(rng, projection.graph_vars, 2) for _ in range(3))
            assert induced_associativity_check(projection, f, g, h)

    def test_transvection_invariance(self, projection, parabola_lambda, rng):
        for _ in range(10):
            f, g = random_poly(rng, projection.graph_vars, 2), random_poly(rng, projection.graph_vars, 2)
            x = random_vector(rng, projection.graph_vars)
            assert transvection_invariance_check(projection, parabola_lambda, f, g, x, random_rational(rng))
