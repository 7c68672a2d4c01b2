import numpy as np
import pytest

from qrflab.frames import CosetCells, Povm, QuantumReferenceFrame, ideal_frame
from qrflab.opcore import dagger, op_norm
from qrflab.relativise import (
    FrameAssignment,
    GroupAction,
    expected_relative_outcome,
    localization_defect,
    relativize,
    restrict,
)
from qrflab.symmetry import (
    FiniteRep,
    HomogeneousSpace,
    cyclic_group,
    regular_representation,
    symmetric_group,
    tensor_rep,
)
from qrflab.vnalg import OperatorAlgebra, algebra_from_matrices, generate_algebra

from _factories import SIGMA_X, SIGMA_Z, random_complex, random_density


def qubit_action() -> GroupAction:
    g = cyclic_group(2)
    flip = FiniteRep(g, [np.eye(2, dtype=complex), SIGMA_X])
    full = OperatorAlgebra(2, np.eye(4, dtype=complex))
    return GroupAction(full, flip)


def sharp_frame() -> QuantumReferenceFrame:
    return ideal_frame(regular_representation(cyclic_group(2)))


def unsharp_frame(p: float = 0.75) -> QuantumReferenceFrame:
    g = cyclic_group(2)
    cells = CosetCells(HomogeneousSpace(g, (g.identity,)))
    effects = [np.diag([p, 1 - p]).astype(complex), np.diag([1 - p, p]).astype(complex)]
    return QuantumReferenceFrame(regular_representation(g), Povm(cells, effects))


def coset_fixture():
    """Conjugation action of S3 on its own translation algebra, observed
    through a frame whose cells are the cosets of a two-element subgroup."""
    g = symmetric_group(3)
    lam = regular_representation(g)
    algebra = generate_algebra(lam.unitaries, 6)
    action = GroupAction(algebra, lam)
    pair = next(a for a in range(1, 6) if g.table[a, a] == g.identity)
    space = HomogeneousSpace(g, (g.identity, pair))
    effects = []
    for coset in space.cosets:
        p = np.zeros((6, 6), dtype=complex)
        for member in coset:
            p[member, member] = 1.0
        effects.append(p)
    frame = QuantumReferenceFrame(lam, Povm(CosetCells(space), effects))
    cycles = [a for a in range(1, 6) if g.table[a, a] != g.identity]
    return g, lam, action, frame, cycles


class TestGroupAction:
    def test_rejects_dimension_mismatch(self):
        g = cyclic_group(2)
        flip = FiniteRep(g, [np.eye(2, dtype=complex), SIGMA_X])
        with pytest.raises(ValueError, match="dimensions differ"):
            GroupAction(OperatorAlgebra(3, np.eye(9, dtype=complex)), flip)

    def test_rejects_non_invariant_algebra(self):
        g = cyclic_group(2)
        hadamard = (SIGMA_X + SIGMA_Z) / np.sqrt(2)
        rot = FiniteRep(g, [np.eye(2, dtype=complex), hadamard])
        diag = algebra_from_matrices([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], 2)
        with pytest.raises(ValueError, match="does not preserve the algebra"):
            GroupAction(diag, rot)


class TestRelativize:
    def test_sharp_qubit_oracle(self):
        out = relativize(SIGMA_Z, qubit_action(), sharp_frame())
        assert np.allclose(out, np.kron(SIGMA_Z, SIGMA_Z), atol=1e-12)

    def test_unsharp_qubit_oracle(self):
        out = relativize(SIGMA_Z, qubit_action(), unsharp_frame())
        assert np.allclose(out, np.kron(SIGMA_Z, np.diag([0.5, -0.5])), atol=1e-12)

    def test_output_is_invariant_under_the_joint_rep(self):
        action = qubit_action()
        frame = sharp_frame()
        joint = tensor_rep(action.rep, frame.rep)
        for x in (SIGMA_X, SIGMA_Z, SIGMA_X @ SIGMA_Z):
            y = relativize(x, action, frame)
            for u in joint.unitaries:
                assert op_norm(u @ y @ dagger(u) - y) <= 1e-9

    def test_linearity(self, rng):
        action, frame = qubit_action(), unsharp_frame()
        a, b = random_complex(rng, 2), random_complex(rng, 2)
        lhs = relativize(a + 2.0 * b, action, frame)
        rhs = relativize(a, action, frame) + 2.0 * relativize(b, action, frame)
        assert np.allclose(lhs, rhs, atol=1e-11)

    def test_sharp_frames_preserve_products(self, rng):
        action, frame = qubit_action(), sharp_frame()
        for _ in range(10):
            a, b = random_complex(rng, 2), random_complex(rng, 2)
            defect = op_norm(
                relativize(a @ b, action, frame)
                - relativize(a, action, frame) @ relativize(b, action, frame))
            assert defect <= 1e-10

    def test_unsharp_frames_do_not(self):
        action, frame = qubit_action(), unsharp_frame()
        defect = op_norm(
            relativize(SIGMA_Z @ SIGMA_Z, action, frame)
            - relativize(SIGMA_Z, action, frame) @ relativize(SIGMA_Z, action, frame))
        assert defect == pytest.approx(0.75, abs=1e-12)
        assert defect >= 0.1

    def test_dimension_guard(self):
        with pytest.raises(ValueError, match="does not match the system"):
            relativize(np.eye(3), qubit_action(), sharp_frame())

    def test_membership_guard(self):
        g = cyclic_group(2)
        flip = FiniteRep(g, [np.eye(2, dtype=complex), SIGMA_X])
        diag = algebra_from_matrices([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], 2)
        action = GroupAction(diag, flip)
        with pytest.raises(ValueError, match="outside the system algebra"):
            relativize(SIGMA_X + 0.5 * SIGMA_Z, action, sharp_frame())

    def test_stabiliser_guard_on_coset_frames(self):
        _, lam, action, frame, cycles = coset_fixture()
        with pytest.raises(ValueError, match="stabiliser-invariant"):
            relativize(lam.unitary(cycles[0]), action, frame)

    def test_stabiliser_invariant_input_passes(self):
        g, lam, action, frame, cycles = coset_fixture()
        x = lam.unitary(cycles[0]) + lam.unitary(cycles[1])
        y = relativize(x, action, frame)
        joint = tensor_rep(action.rep, frame.rep)
        for u in joint.unitaries:
            assert op_norm(u @ y @ dagger(u) - y) <= 1e-9


class TestSpanStructure:
    def test_sharp_relativisation_lands_in_the_invariant_product(self):
        action, frame = qubit_action(), sharp_frame()
        joint = tensor_rep(action.rep, frame.rep)
        effect_alg = generate_algebra(frame.povm.effects, 2)
        product_rows = algebra_from_matrices(
            [np.kron(a, b)
             for a in action.algebra.basis_matrices()
             for b in effect_alg.basis_matrices()], 4)
        images = []
        for b in action.algebra.basis_matrices():
            y = relativize(b, action, frame)
            for u in joint.unitaries:
                assert op_norm(u @ y @ dagger(u) - y) <= 1e-8
            assert product_rows.distance(y) <= 1e-7
            images.append(y.reshape(-1))
        assert np.linalg.matrix_rank(np.array(images), tol=1e-8) == 4


class TestExpectations:
    @pytest.mark.parametrize("frame_builder", [sharp_frame, unsharp_frame])
    def test_dual_routes_agree_on_random_triples(self, rng, frame_builder):
        action, frame = qubit_action(), frame_builder()
        for _ in range(100):
            x = random_complex(rng, 2)
            omega_s = random_density(rng, 2)
            omega_r = random_density(rng, 2)
            # raises RuntimeError if the two evaluation routes disagree
            expected_relative_outcome(x, action, frame, omega_s, omega_r, tol=1e-9)

    def test_peaked_frame_reproduces_the_bare_expectation(self):
        action, frame = qubit_action(), sharp_frame()
        omega_s = np.diag([0.3, 0.7]).astype(complex)
        peaked = np.diag([1.0, 0.0]).astype(complex)
        got = expected_relative_outcome(SIGMA_Z, action, frame, omega_s, peaked)
        assert got == pytest.approx(np.trace(omega_s @ SIGMA_Z), abs=1e-12)

    def test_restrict_factorises_tensors(self, rng):
        a, b = random_complex(rng, 2), random_complex(rng, 2)
        sigma = random_density(rng, 2)
        out = restrict(np.kron(a, b), sigma, (2, 2))
        assert np.allclose(out, a * np.trace(b @ sigma), atol=1e-12)

    def test_restrict_dimension_guard(self):
        with pytest.raises(ValueError, match="frame state dimension"):
            restrict(np.eye(4), np.eye(3) / 3, (2, 2))


class TestLocalization:
    def test_peaked_state_localizes(self):
        action, frame = qubit_action(), sharp_frame()
        sigma = np.diag([1.0, 0.0]).astype(complex)
        assert localization_defect(SIGMA_Z, action, frame, sigma) <= 1e-12

    def test_maximally_mixed_state_does_not(self):
        action, frame = qubit_action(), sharp_frame()
        sigma = np.eye(2, dtype=complex) / 2
        assert localization_defect(SIGMA_Z, action, frame, sigma) == pytest.approx(1.0, abs=1e-12)

    def test_unsharp_frame_localizes_halfway(self):
        action, frame = qubit_action(), unsharp_frame()
        sigma = np.diag([1.0, 0.0]).astype(complex)
        assert localization_defect(SIGMA_Z, action, frame, sigma) == pytest.approx(0.5, abs=1e-12)


class TestFrameAssignment:
    def test_table_is_equivariant(self):
        g, lam, action, frame, cycles = coset_fixture()
        anchor = lam.unitary(cycles[0]) + lam.unitary(cycles[1])
        assignment = FrameAssignment(action, frame, {"spin": anchor})
        assert assignment.labels == ["spin"]
        assert assignment.equivariance_defect() <= 1e-9
        assert np.allclose(assignment.observable("spin", 0), anchor)

    def test_relativized_matches_direct_call(self):
        g, lam, action, frame, cycles = coset_fixture()
        anchor = lam.unitary(cycles[0]) + lam.unitary(cycles[1])
        assignment = FrameAssignment(action, frame, {"spin": anchor})
        direct = relativize(anchor, action, frame)
        assert np.allclose(assignment.relativized("spin"), direct, atol=1e-12)

    def test_rejects_non_invariant_anchor(self):
        g, lam, action, frame, cycles = coset_fixture()
        with pytest.raises(ValueError, match="not stabiliser-invariant"):
            FrameAssignment(action, frame, {"bad": lam.unitary(cycles[0])})
