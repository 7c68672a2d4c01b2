import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrflab.symmetry import (
    CircleGroup,
    CircleRep,
    FiniteGroup,
    FiniteRep,
    HomogeneousSpace,
    average_over_group,
    cyclic_group,
    fixed_point_algebra,
    regular_representation,
    right_regular_representation,
    symmetric_group,
    tensor_rep,
    trivial_rep,
)
from qrflab.vnalg import commutant, generate_algebra, span_distance

from _factories import SIGMA_X, random_complex

seeds = st.integers(0, 2**31 - 1)


class TestFiniteGroups:
    def test_cyclic_orders(self):
        for n in (1, 2, 5):
            assert cyclic_group(n).order == n

    def test_cyclic_needs_positive_order(self):
        with pytest.raises(ValueError, match="n >= 1"):
            cyclic_group(0)

    def test_symmetric_three_is_nonabelian(self):
        g = symmetric_group(3)
        assert g.order == 6
        assert not np.array_equal(g.table, g.table.T)

    def test_inverses_close(self):
        g = symmetric_group(3)
        for a in range(g.order):
            assert g.table[a, g.inverse[a]] == g.identity
            assert g.table[g.inverse[a], a] == g.identity

    def test_rejects_wrong_table_shape(self):
        with pytest.raises(ValueError, match="shape does not match"):
            FiniteGroup(["e", "a"], np.zeros((3, 3), dtype=int))

    def test_rejects_table_without_identity(self):
        table = np.zeros((2, 2), dtype=int)
        with pytest.raises(ValueError, match="no two-sided identity"):
            FiniteGroup(["a", "b"], table)

    def test_rejects_nonassociative_table(self):
        # smallest nonassociative loop: a Latin square with identity and
        # two-sided inverses where (a.b).b != a.(b.b)
        table = np.array([
            [0, 1, 2, 3, 4],
            [1, 0, 3, 4, 2],
            [2, 4, 0, 1, 3],
            [3, 2, 4, 0, 1],
            [4, 3, 1, 2, 0],
        ])
        with pytest.raises(ValueError, match="not associative"):
            FiniteGroup(list("eabcd"), table)


class TestFiniteReps:
    def test_regular_rep_is_a_homomorphism(self):
        g = symmetric_group(3)
        lam = regular_representation(g)
        for a in range(g.order):
            for b in range(g.order):
                prod = lam.unitary(a) @ lam.unitary(b)
                assert np.allclose(prod, lam.unitary(int(g.table[a, b])), atol=1e-12)

    def test_left_and_right_translations_commute(self):
        g = symmetric_group(3)
        lam = regular_representation(g)
        rho = right_regular_representation(g)
        for a in range(g.order):
            for b in range(g.order):
                left, right = lam.unitary(a), rho.unitary(b)
                assert np.allclose(left @ right, right @ left, atol=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_left_commutant_is_the_right_algebra(self, n):
        g = symmetric_group(n) if n == 3 else cyclic_group(2)
        lam = regular_representation(g)
        rho = right_regular_representation(g)
        left_alg = generate_algebra(lam.unitaries, g.order)
        right_alg = generate_algebra(rho.unitaries, g.order)
        assert span_distance(commutant(left_alg), right_alg) <= 1e-7

    def test_rep_needs_one_matrix_per_element(self):
        g = cyclic_group(2)
        with pytest.raises(ValueError, match="one unitary per group element"):
            FiniteRep(g, [np.eye(2, dtype=complex)])

    def test_rep_rejects_nonunitary_matrix(self):
        g = cyclic_group(2)
        mats = [np.eye(2, dtype=complex), 0.5 * np.eye(2, dtype=complex)]
        with pytest.raises(ValueError, match="not unitary"):
            FiniteRep(g, mats)

    def test_rep_rejects_broken_homomorphism(self):
        g = cyclic_group(3)
        omega = np.exp(2j * np.pi / 3)
        mats = [np.eye(1, dtype=complex), omega * np.eye(1), omega * np.eye(1)]
        with pytest.raises(ValueError):
            FiniteRep(g, mats)

    def test_identity_must_act_trivially(self):
        g = cyclic_group(2)
        mats = [SIGMA_X, np.eye(2, dtype=complex)]
        with pytest.raises(ValueError, match="identity element must act"):
            FiniteRep(g, mats)


class TestAveraging:
    @given(seeds)
    def test_projection_onto_fixed_points(self, seed):
        g = cyclic_group(3)
        lam = regular_representation(g)
        x = random_complex(np.random.default_rng(seed), 3)
        avg = average_over_group(lam, lam, x)
        twice = average_over_group(lam, lam, avg)
        assert np.allclose(avg, twice, atol=1e-12)
        assert np.isclose(np.trace(avg), np.trace(x))
        for u in lam.unitaries:
            assert np.allclose(u @ avg @ u.conj().T, avg, atol=1e-12)

    def test_needs_matching_dimensions(self):
        g = cyclic_group(2)
        lam = regular_representation(g)
        with pytest.raises(ValueError, match="operator shape"):
            average_over_group(lam, lam, np.eye(3))

    def test_mixed_group_reps_are_rejected(self):
        lam2 = regular_representation(cyclic_group(2))
        omega = np.exp(2j * np.pi / 3)
        phases = FiniteRep(cyclic_group(3), [np.diag([1.0, omega**k]) for k in range(3)])
        with pytest.raises(ValueError, match="one group"):
            average_over_group(lam2, phases, np.eye(2))

    def test_fixed_point_algebra_of_the_regular_rep(self):
        g = cyclic_group(3)
        lam = regular_representation(g)
        fixed = fixed_point_algebra(lam)
        # for an abelian group the fixed points of Ad lambda are the
        # commutant of the whole translation algebra
        assert fixed.dim == 3
        assert span_distance(fixed, commutant(generate_algebra(lam.unitaries, 3))) <= 1e-8


class TestCircle:
    def test_quadrature_node_count_covers_the_band(self):
        g = CircleGroup(2)
        nodes = g.quadrature_nodes()
        assert len(nodes) == 9

    def test_rejects_negative_bandwidth(self):
        with pytest.raises(ValueError, match="non-negative"):
            CircleGroup(-1)

    def test_generator_eigenvalues_must_be_integers(self):
        with pytest.raises(ValueError, match="must be integers"):
            CircleRep(CircleGroup(1), np.diag([0.0, 0.5]))

    def test_generator_must_fit_the_band(self):
        with pytest.raises(ValueError, match="exceeds the group band limit"):
            CircleRep(CircleGroup(1), np.diag([0.0, 2.0]))

    def test_averaging_kills_off_diagonals_exactly(self):
        g = CircleGroup(1)
        rep = CircleRep(g, np.diag([0.0, 1.0]))
        x = np.array([[0.3, 0.7], [0.2, -0.1]], dtype=complex)
        avg = average_over_group(rep, rep, x)
        assert np.allclose(avg, np.diag(np.diag(x)), atol=1e-14)

    def test_unitary_at_angle(self):
        rep = CircleRep(CircleGroup(1), np.diag([0.0, 1.0]))
        u = rep.unitary(np.pi)
        assert np.allclose(u, np.diag([1.0, -1.0]), atol=1e-12)


class TestTensorRep:
    def test_finite_tensor_is_pointwise_kron(self):
        g = cyclic_group(2)
        lam = regular_representation(g)
        both = tensor_rep(lam, lam)
        assert np.allclose(both.unitary(1), np.kron(lam.unitary(1), lam.unitary(1)))

    def test_circle_tensor_needs_room_for_the_sum(self):
        rep = CircleRep(CircleGroup(1), np.diag([0.0, 1.0]))
        with pytest.raises(ValueError):
            tensor_rep(rep, rep)
        wide = tensor_rep(rep, rep, group=CircleGroup(2))
        assert np.allclose(wide.unitary(np.pi / 2), np.kron(rep.unitary(np.pi / 2), rep.unitary(np.pi / 2)))

    def test_trivial_rep_acts_as_identity(self):
        g = cyclic_group(3)
        triv = trivial_rep(g, 2)
        for k in range(3):
            assert np.array_equal(triv.unitary(k), np.eye(2, dtype=complex))


class TestHomogeneousSpace:
    def test_coset_count(self):
        g = symmetric_group(3)
        pair = next(a for a in range(1, 6) if g.table[a, a] == g.identity)
        space = HomogeneousSpace(g, (g.identity, pair))
        assert space.size == 3
        assert not space.principal

    def test_action_is_a_group_action(self):
        g = symmetric_group(3)
        space = HomogeneousSpace(g, (g.identity,))
        assert space.principal
        for a in range(g.order):
            for b in range(g.order):
                for cell in range(space.size):
                    assert space.act(int(g.table[a, b]), cell) == space.act(a, space.act(b, cell))

    def test_subgroup_must_contain_identity(self):
        g = cyclic_group(4)
        with pytest.raises(ValueError, match="must contain the identity"):
            HomogeneousSpace(g, (1, 3))

    def test_subgroup_must_be_closed(self):
        g = cyclic_group(4)
        with pytest.raises(ValueError, match="not closed"):
            HomogeneousSpace(g, (0, 1))
