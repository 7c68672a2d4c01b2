import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrflab.symmetry import regular_representation, symmetric_group
from qrflab.vnalg import (
    OperatorAlgebra,
    ProductTrace,
    algebra_from_matrices,
    centre,
    commutant,
    decompose,
    generate_algebra,
    is_factor,
    normalized_trace,
    span_distance,
    span_intersection,
)

from _factories import SIGMA_X, SIGMA_Z, random_complex, random_hermitian

seeds = st.integers(0, 2**31 - 1)


def full_matrix_algebra(d: int) -> OperatorAlgebra:
    rows = np.eye(d * d, dtype=complex)
    return OperatorAlgebra(d, rows)


def diagonal_algebra(d: int) -> OperatorAlgebra:
    mats = [np.diag(np.eye(d)[k]).astype(complex) for k in range(d)]
    return algebra_from_matrices(mats, d)


class TestValidation:
    def test_rejects_row_length_mismatch(self):
        with pytest.raises(ValueError, match="do not match the ambient dimension"):
            OperatorAlgebra(2, np.eye(3, dtype=complex))

    def test_rejects_non_orthonormal_rows(self):
        rows = np.ones((2, 4), dtype=complex)
        with pytest.raises(ValueError, match="not orthonormal"):
            OperatorAlgebra(2, rows)

    def test_validate_flags_missing_identity(self):
        alg = algebra_from_matrices([SIGMA_X], 2)
        with pytest.raises(ValueError, match="does not contain the identity"):
            alg.validate()

    def test_validate_flags_open_adjoints(self):
        raising = np.array([[0, 1], [0, 0]], dtype=complex)
        alg = algebra_from_matrices([np.eye(2), raising], 2)
        with pytest.raises(ValueError, match="not closed under adjoints"):
            alg.validate()

    def test_generator_dimension_guard(self):
        with pytest.raises(ValueError, match="does not match ambient_dim"):
            generate_algebra([np.eye(3)], 2)


class TestGeneration:
    def test_two_paulis_generate_everything(self):
        alg = generate_algebra([SIGMA_X, SIGMA_Z], 2)
        assert alg.dim == 4
        alg.validate()

    def test_single_diagonal_generates_the_diagonal(self):
        alg = generate_algebra([SIGMA_Z], 2)
        assert alg.dim == 2
        assert span_distance(alg, diagonal_algebra(2)) < 1e-10

    @given(seeds)
    def test_projection_is_idempotent(self, seed):
        gen = np.random.default_rng(seed)
        alg = generate_algebra([SIGMA_Z], 2)
        x = random_complex(gen, 2)
        once = alg.project(x)
        assert np.allclose(alg.project(once), once, atol=1e-12)
        assert alg.distance(once) < 1e-10
        assert alg.contains(once)


class TestCommutant:
    def test_full_algebra_has_trivial_commutant(self):
        assert commutant(full_matrix_algebra(3)).dim == 1

    def test_diagonal_is_its_own_commutant(self):
        d2 = diagonal_algebra(2)
        assert span_distance(commutant(d2), d2) < 1e-10

    def test_commutant_elements_commute(self, rng):
        alg = generate_algebra([SIGMA_Z], 2)
        comm = commutant(alg)
        for b in comm.basis_matrices():
            assert np.allclose(b @ SIGMA_Z, SIGMA_Z @ b, atol=1e-10)

    @settings(max_examples=25)
    @given(seeds, st.integers(2, 3), st.integers(1, 2))
    def test_double_commutant_returns_the_algebra(self, seed, d, k):
        gen = np.random.default_rng(seed)
        alg = generate_algebra([random_hermitian(gen, d) for _ in range(k)], d)
        bic = commutant(commutant(alg))
        assert bic.dim == alg.dim
        assert span_distance(bic, alg) <= 1e-8


class TestCentre:
    def test_factor_detection(self):
        assert is_factor(full_matrix_algebra(2))
        assert not is_factor(diagonal_algebra(2))

    def test_centre_of_diagonal_is_diagonal(self):
        d2 = diagonal_algebra(2)
        assert centre(d2).dim == 2

    def test_centre_of_full_is_scalars(self):
        c = centre(full_matrix_algebra(3))
        assert c.dim == 1
        b = c.basis_matrices()[0]
        assert np.allclose(b, b[0, 0] * np.eye(3), atol=1e-10)


class TestDecompose:
    def test_symmetric_group_algebra_splits_1_1_2(self):
        rep = regular_representation(symmetric_group(3))
        alg = generate_algebra(rep.unitaries, 6)
        structure = decompose(alg)
        assert structure.blocks == [(1, 1), (1, 1), (2, 2)]
        assert structure.defect <= 1e-7
        assert structure.algebra_dim == alg.dim == 6
        assert structure.commutant_dim == 6

    def test_direct_sum_with_uneven_multiplicity(self):
        z = np.zeros((3, 3), dtype=complex)
        gx, gz, gp = z.copy(), z.copy(), z.copy()
        gx[:2, :2] = SIGMA_X
        gz[:2, :2] = SIGMA_Z
        gp[2, 2] = 1.0
        alg = generate_algebra([gx, gz, gp], 3)
        structure = decompose(alg)
        assert structure.blocks == [(1, 1), (2, 1)]
        assert structure.algebra_dim == 5
        assert structure.commutant_dim == 2

    def test_amplified_factor(self):
        alg = generate_algebra([np.kron(SIGMA_X, np.eye(2)), np.kron(SIGMA_Z, np.eye(2))], 4)
        structure = decompose(alg)
        assert structure.blocks == [(2, 2)]
        assert structure.defect <= 1e-7


class TestProductTrace:
    def make(self):
        left = full_matrix_algebra(2)
        right = diagonal_algebra(2)
        lifted_left = algebra_from_matrices(
            [np.kron(b, np.eye(2)) for b in left.basis_matrices()], 4)
        lifted_right = algebra_from_matrices(
            [np.kron(np.eye(2), b) for b in right.basis_matrices()], 4)
        return ProductTrace(left, right), lifted_left, lifted_right

    def test_normalised_at_identity(self):
        tau, _, _ = self.make()
        assert abs(tau(np.eye(4)) - 1.0) < 1e-12

    def test_tracial_on_the_product(self, rng):
        tau, lifted_left, lifted_right = self.make()
        for _ in range(20):
            x = sum(c * np.kron(a, b)
                    for c, a, b in zip(rng.standard_normal(4),
                                       [np.eye(2), SIGMA_X, SIGMA_Z, SIGMA_X @ SIGMA_Z],
                                       [np.diag([1.0, 0.0])] * 4))
            y = np.kron(SIGMA_X, np.diag([0.0, 1.0]).astype(complex))
            assert abs(tau(x @ y) - tau(y @ x)) < 1e-9

    def test_faithful_on_positive_elements(self, rng):
        tau, _, _ = self.make()
        x = np.kron(random_complex(rng, 2), np.diag(rng.uniform(0.5, 1.5, 2)).astype(complex))
        assert tau(x.conj().T @ x).real > 1e-9

    def test_rejects_operators_outside_the_product(self):
        tau, _, _ = self.make()
        stray = np.zeros((4, 4), dtype=complex)
        stray[0, 1] = 1.0  # the off-diagonal on the right leg is not in D2
        with pytest.raises(ValueError, match="outside the tensor product algebra"):
            tau(stray)


def test_span_distance_ignores_basis_choice(rng):
    alg = generate_algebra([SIGMA_X, SIGMA_Z], 2)
    q, _ = np.linalg.qr(random_complex(rng, alg.dim))
    recombined = OperatorAlgebra(2, q @ alg.rows)
    assert span_distance(alg, recombined) < 1e-10


def test_span_intersection_picks_common_operators():
    d2 = diagonal_algebra(2)
    other = algebra_from_matrices([np.eye(2), SIGMA_X], 2)
    rows = span_intersection(d2.rows, other.rows)
    assert rows.shape[0] == 1
    common = rows[0].reshape(2, 2)
    assert np.allclose(common, common[0, 0] * np.eye(2), atol=1e-10)


def test_normalized_trace_of_identity():
    assert normalized_trace(np.eye(5)) == 1.0
