import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings, strategies as st

from app.core.exceptions import DimensionMismatchError, NotSymplecticError
from app.geometry.exact_core import commutator, identity, inverse, matrix, unit_vector, vector, zero_matrix
from app.geometry.symplectic_model import (
    AffineMap,
    AffineSympElement,
    Block,
    SympSpace,
    act_on_tensor,
    is_in_sp,
    omega_form_of,
    phi_map,
    random_sp_element,
    random_symplectic_matrix,
    ricci,
    standard_form,
    symmetry_S,
    symp_projection,
)


class TestSympSpace:
    def test_standard_forms_by_default(self):
        space = SympSpace.create(1, 1)
        assert space.omega0 == matrix([[0, 1], [-1, 0]])
        assert space.dim == 4
        assert space.omega.shape == (4, 4)

    def test_dual_normal_basis(self):
        """Omega(f^i, f_j) = delta^i_j"""
        space = SympSpace.create(2, 2)
        for i, dual in enumerate(space.dual_normal):
            for j, f in enumerate(space.normal_basis):
                assert space.omega_pair(dual, f) == (1 if i == j else 0)

    def test_degenerate_form_rejected(self):
        with pytest.raises(NotSymplecticError):
            SympSpace.create(1, 0, omega0=matrix([[0, 0], [0, 0]]))

    def test_wrong_size_form_rejected(self):
        with pytest.raises(DimensionMismatchError):
            SympSpace.create(2, 1, omega0=standard_form(1))

    def test_non_standard_tangent_form(self):
        space = SympSpace.create(1, 1, omega0=matrix([[0, 2], [-2, 0]]))
        assert space.tangent_pair(unit_vector(2, 0), unit_vector(2, 1)) == 2


class TestAffineSymplectic:
    def test_sp_membership(self):
        space = SympSpace.create(1, 0)
        assert is_in_sp(space, matrix([[1, 0], [0, -1]]))
        assert not is_in_sp(space, identity(2))

    def test_affine_element_rejects_non_sp(self):
        space = SympSpace.create(1, 0)
        with pytest.raises(NotSymplecticError):
            AffineSympElement.create(space, identity(2), vector([0, 0]))

    def test_bracket_is_antisymmetric(self, rng):
        space = SympSpace.create(1, 1)
        a = AffineSympElement.create(space, random_sp_element(space.omega, rng), vector([1, 0, 2, 0]))
        b = AffineSympElement.create(space, random_sp_element(space.omega, rng), vector([0, 1, 0, -1]))
        assert a.bracket(b).as_vector() == -b.bracket(a).as_vector()

    def test_affine_compose(self):
        f = AffineMap(matrix([[1, 1], [0, 1]]), vector([1, 0]))
        g = AffineMap.identity(2)
        assert f.compose(g) == f
        assert f.compose(f).apply(vector([0, 0])) == vector([2, 0])

    @hypothesis_settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000))
    def test_random_symplectic_matrices_preserve_the_form(self, seed):
        omega = standard_form(2)
        M = random_symplectic_matrix(omega, np.random.default_rng(seed))
        assert AffineMap(M, zero_matrix(4, 1)).is_symplectic(omega)

    @hypothesis_settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000))
    def test_random_sp_elements(self, seed):
        space = SympSpace.create(2, 1)
        assert is_in_sp(space, random_sp_element(space.omega, np.random.default_rng(seed)), Block.AMBIENT)


class TestProjectionAndSymmetry:
    def test_projection_onto_tangent_block(self):
        space = SympSpace.create(1, 1)
        W = [unit_vector(4, 0), unit_vector(4, 1)]
        P = symp_projection(space, W)
        assert P * P == P
        assert P * unit_vector(4, 2) == zero_matrix(4, 1)

    def test_symmetry_is_an_involution_fixing_x(self):
        space = SympSpace.create(1, 1)
        x = vector([1, 2, 3, 4])
        S = symmetry_S(space, x, [unit_vector(4, 0), unit_vector(4, 1)])
        assert S.compose(S) == AffineMap.identity(4)
        assert S.apply(x) == x

    def test_degenerate_subspace_rejected(self):
        space = SympSpace.create(1, 1)
        with pytest.raises(NotSymplecticError):
            symp_projection(space, [unit_vector(4, 0), unit_vector(4, 2)])


class TestCurvatureTensors:
    def test_phi_is_antisymmetric(self, rng):
        space = SympSpace.create(2, 0)
        A = random_sp_element(space.omega0, rng)
        B = random_sp_element(space.omega0, rng)
        assert phi_map(space, A, B) + phi_map(space, B, A).scale(-1) == phi_map(space, A, B).scale(2)

    def test_phi_satisfies_curvature_identities(self, rng):
        space = SympSpace.create(1, 0)
        A = random_sp_element(space.omega0, rng)
        B = random_sp_element(space.omega0, rng)
        assert phi_map(space, A, B).invariant_violations() == []

    def test_identity_action(self, rng):
        space = SympSpace.create(1, 0)
        R = phi_map(space, random_sp_element(space.omega0, rng), random_sp_element(space.omega0, rng))
        assert act_on_tensor(identity(2), R).differences(R) == []

    def test_phi_of_a_wedge_with_itself(self, rng):
        space = SympSpace.create(2, 0)
        A = random_sp_element(space.omega0, rng)
        assert phi_map(space, A, A).is_zero

    def test_phi_is_equivariant(self, rng):
        space = SympSpace.create(1, 0)
        A = random_sp_element(space.omega0, rng)
        B = random_sp_element(space.omega0, rng)
        S = random_symplectic_matrix(space.omega0, rng)
        S_inv = inverse(S)
        conjugated = phi_map(space, S * A * S_inv, S * B * S_inv)
        assert conjugated.differences(act_on_tensor(S, phi_map(space, A, B))) == []

    def test_ricci_of_phi_is_minus_the_bracket_form(self, rng):
        """ric(phi(A ^ B))(X, Y) = -w([A, B] X, Y)"""
        space = SympSpace.create(2, 0)
        A = random_sp_element(space.omega0, rng)
        B = random_sp_element(space.omega0, rng)
        ric = ricci(space, phi_map(space, A, B))
        assert ric + omega_form_of(space, commutator(A, B)) == zero_matrix(4)

    def test_ricci_of_zero_tensor(self):
        space = SympSpace.create(1, 0)
        assert ricci(space, phi_map(space, zero_matrix(2), zero_matrix(2))) == zero_matrix(2)
