"""Relativisation of system observables over a reference frame.

The central map sends an invariant system observable x to a joint
observable on system plus frame by pairing the orbit of x with the frame's
outcome effects. Restriction through a frame state undoes it in the
localised limit; both directions are implemented together with the
expectation identities that connect them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frames import CosetCells, QuantumReferenceFrame
from .opcore import (
    as_operator,
    check_density,
    dagger,
    hs_norm,
    op_norm,
    partial_trace,
)
from .symmetry import CircleRep, FiniteRep, Rep
from .vnalg import OperatorAlgebra


@dataclass
class GroupAction:
    """An algebra of system observables carried into itself by a representation."""

    algebra: OperatorAlgebra
    rep: Rep
    closure_tol: float = 1.0e-8

    def __post_init__(self) -> None:
        if self.algebra.ambient_dim != self.rep.dim:
            raise ValueError("algebra and representation dimensions differ")
        if isinstance(self.rep, FiniteRep):
            points = range(self.rep.group.order)
        else:
            points = self.rep.group.quadrature_nodes()
        for b in self.algebra.basis_matrices():
            for g in points:
                moved = self.rep.conjugate(g, b)
                if self.algebra.distance(moved) > self.closure_tol * max(1.0, hs_norm(moved)):
                    raise ValueError("representation does not preserve the algebra")


def _require_same_group(action: GroupAction, frame: QuantumReferenceFrame) -> None:
    if type(action.rep) is not type(frame.rep) or action.rep.group != frame.rep.group:
        raise ValueError("system action and frame must share one symmetry group")


def _stabiliser_defect(x: np.ndarray, action: GroupAction, frame: QuantumReferenceFrame) -> float:
    if isinstance(frame.rep, CircleRep):
        # Circle frames are principal; the stabiliser is trivial.
        return 0.0
    cells: CosetCells = frame.povm.space
    worst = 0.0
    for h in cells.space.subgroup:
        worst = max(worst, op_norm(action.rep.conjugate(h, x) - x))
    return worst


def relativize(
    x: np.ndarray,
    action: GroupAction,
    frame: QuantumReferenceFrame,
    invariance_tol: float = 1.0e-8,
) -> np.ndarray:
    """Pair the orbit of x with the frame effects.

    For finitely many cells this is sum_s U(g_s) x U(g_s)^dag (x) E_s over
    coset representatives g_s; x must be invariant under the stabiliser
    subgroup for the result to be independent of how representatives were
    chosen. Band-limited circle frames contract Fourier modes exactly
    instead of summing.
    """
    x = as_operator(x)
    _require_same_group(action, frame)
    if x.shape[0] != action.rep.dim:
        raise ValueError("observable dimension does not match the system")
    if not action.algebra.contains(x):
        raise ValueError("observable lies outside the system algebra")
    if _stabiliser_defect(x, action, frame) > invariance_tol * max(1.0, op_norm(x)):
        raise ValueError("relativisation requires stabiliser-invariant input")
    if isinstance(frame.rep, FiniteRep):
        cells: CosetCells = frame.povm.space
        d_s, d_r = action.rep.dim, frame.rep.dim
        out = np.zeros((d_s * d_r, d_s * d_r), dtype=complex)
        for s, g_s in enumerate(cells.space.representatives):
            out += np.kron(action.rep.conjugate(g_s, x), frame.povm.effects[s])
        return out
    return _relativize_circle(x, action, frame)


def _phase_density_matrix(frame: QuantumReferenceFrame) -> np.ndarray:
    c = getattr(frame.povm, "phase_c", None)
    if c is None:
        raise ValueError("circle relativisation needs a phase POVM with its c matrix")
    gen = frame.rep.generator
    if np.abs(gen - np.diag(np.diag(gen))).max() > 1.0e-12:
        raise ValueError("circle frame generator must be diagonal in the POVM basis")
    return c


def _relativize_circle(
    x: np.ndarray, action: GroupAction, frame: QuantumReferenceFrame
) -> np.ndarray:
    """Exact Fourier-mode contraction of the orbit against the phase density.

    In the eigenbasis of the system generator the orbit has entries
    e^{i theta (k_j - k_k)} x_jk and the POVM density carries modes n - m;
    integrating over the circle keeps exactly the terms where the two
    frequencies cancel.
    """
    c = _phase_density_matrix(frame)
    sys_rep: CircleRep = action.rep
    v = sys_rep.vecs
    k = sys_rep.freqs
    xt = dagger(v) @ x @ v
    nr = np.rint(np.diag(frame.rep.generator).real).astype(int)
    d_s, d_r = sys_rep.dim, frame.rep.dim
    out = np.zeros((d_s * d_r, d_s * d_r), dtype=complex)
    for j in range(d_s):
        for kk in range(d_s):
            nu = k[j] - k[kk]
            for n in range(d_r):
                for m in range(d_r):
                    if nu + nr[n] - nr[m] == 0:
                        out[j * d_r + n, kk * d_r + m] = xt[j, kk] * c[n, m]
    big_v = np.kron(v, np.eye(d_r))
    return big_v @ out @ dagger(big_v)


def restrict(joint: np.ndarray, sigma: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    """Slice a joint observable at a frame state: X -> tr_R(X (1 (x) sigma))."""
    joint = as_operator(joint, "joint observable")
    sigma = check_density(sigma)
    d_s, d_r = dims
    if sigma.shape[0] != d_r:
        raise ValueError("frame state dimension mismatch")
    return partial_trace(joint @ np.kron(np.eye(d_s), sigma), dims, "second")


def expected_relative_outcome(
    x: np.ndarray,
    action: GroupAction,
    frame: QuantumReferenceFrame,
    omega_s: np.ndarray,
    omega_r: np.ndarray,
    tol: float = 1.0e-9,
) -> complex:
    """Expectation of the relativised observable in a product state.

    Evaluated twice: directly on the joint space, and as the orbit
    expectation weighted by the frame's outcome distribution. The two
    routes must agree; their residual is part of the runtime contract.
    """
    omega_s = check_density(omega_s)
    omega_r = check_density(omega_r)
    joint = relativize(x, action, frame)
    direct = complex(np.trace(np.kron(omega_s, omega_r) @ joint))
    if isinstance(frame.rep, FiniteRep):
        cells: CosetCells = frame.povm.space
        weighted = 0.0 + 0.0j
        for s, g_s in enumerate(cells.space.representatives):
            orbit = complex(np.trace(omega_s @ action.rep.conjugate(g_s, x)))
            weight = complex(np.trace(omega_r @ frame.povm.effects[s]))
            weighted += orbit * weight
    else:
        weighted = _circle_pairing(x, action, frame, omega_s, omega_r)
    if abs(direct - weighted) > tol * max(1.0, abs(direct)):
        raise RuntimeError(
            "joint and outcome-weighted expectations disagree: "
            f"{direct!r} vs {weighted!r}"
        )
    return direct


def _circle_pairing(
    x: np.ndarray,
    action: GroupAction,
    frame: QuantumReferenceFrame,
    omega_s: np.ndarray,
    omega_r: np.ndarray,
) -> complex:
    # integral of omega_S(orbit(theta)) against the outcome density of
    # omega_R, contracted mode by mode.
    c = _phase_density_matrix(frame)
    sys_rep: CircleRep = action.rep
    v = sys_rep.vecs
    k = sys_rep.freqs
    xt = dagger(v) @ x @ v
    rs = dagger(v) @ omega_s @ v
    nr = np.rint(np.diag(frame.rep.generator).real).astype(int)
    total = 0.0 + 0.0j
    for j in range(sys_rep.dim):
        for kk in range(sys_rep.dim):
            nu = k[j] - k[kk]
            for n in range(frame.rep.dim):
                for m in range(frame.rep.dim):
                    if nu + nr[n] - nr[m] == 0:
                        total += xt[j, kk] * rs[kk, j] * c[n, m] * omega_r[m, n]
    return total


def localization_defect(
    x: np.ndarray,
    action: GroupAction,
    frame: QuantumReferenceFrame,
    sigma: np.ndarray,
) -> float:
    """Operator-norm distance between x and its round trip through the frame.

    Vanishes exactly when sigma is perfectly localised at the identity cell
    of a sharp frame; grows as sigma spreads over the orbit.
    """
    joint = relativize(x, action, frame)
    back = restrict(joint, sigma, (action.rep.dim, frame.rep.dim))
    return op_norm(back - x)


@dataclass
class FrameAssignment:
    """A labelled family of invariant observables, transported to each cell.

    Anchors are the observables assigned to the identity cell; the table
    entry for (label, cell) is the anchor conjugated to that cell's coset
    representative. Entries are built on first use and cached.
    """

    action: GroupAction
    frame: QuantumReferenceFrame
    anchors: dict[str, np.ndarray]
    invariance_tol: float = 1.0e-8
    _table: dict[tuple[str, int], np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        _require_same_group(self.action, self.frame)
        if not isinstance(self.frame.rep, FiniteRep):
            raise ValueError("frame assignments are tabulated for finite frames only")
        self.anchors = {k: as_operator(v, f"anchor {k!r}") for k, v in self.anchors.items()}
        for label, a in self.anchors.items():
            if _stabiliser_defect(a, self.action, self.frame) > self.invariance_tol:
                raise ValueError(f"anchor {label!r} is not stabiliser-invariant")
            if not self.action.algebra.contains(a):
                raise ValueError(f"anchor {label!r} lies outside the system algebra")

    @property
    def labels(self) -> list[str]:
        return sorted(self.anchors)

    def observable(self, label: str, cell: int) -> np.ndarray:
        key = (label, cell)
        if key not in self._table:
            cells: CosetCells = self.frame.povm.space
            g_s = cells.space.representatives[cell]
            self._table[key] = self.action.rep.conjugate(g_s, self.anchors[label])
        return self._table[key]

    def equivariance_defect(self) -> float:
        """Worst violation of moving a table entry with the group action.

        Conjugating the entry at cell s by U(g) must land on the entry at
        g . s, up to the anchor's stabiliser invariance.
        """
        cells: CosetCells = self.frame.povm.space
        group = self.action.rep.group
        worst = 0.0
        for label in self.anchors:
            for s in range(cells.size):
                for g in range(group.order):
                    moved = self.action.rep.conjugate(g, self.observable(label, s))
                    target_cell = cells.space.act(g, s)
                    direct = self.observable(label, target_cell)
                    worst = max(worst, op_norm(moved - direct))
        return worst

    def relativized(self, label: str) -> np.ndarray:
        return relativize(
            self.anchors[label], self.action, self.frame, self.invariance_tol
        )
