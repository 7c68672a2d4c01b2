"""Covariant positive operator valued measures and reference frames.

A frame couples a group representation to a POVM whose outcomes carry a
group action: finitely many cells (cosets of a subgroup) or a partition of
the circle into arcs. Sharpness, the norm-1 property, smearings and the two
dilation constructions all live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .opcore import (
    as_operator,
    dagger,
    hermitian_eig,
    hs_norm,
    op_norm,
    psd_sqrt,
    rel_err,
)
from .symmetry import (
    CircleGroup,
    CircleRep,
    FiniteRep,
    HomogeneousSpace,
    Rep,
    regular_representation,
)


@dataclass(frozen=True)
class PlainCells:
    """A bare finite outcome set with no group action."""

    size: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("outcome set must be non-empty")


@dataclass(frozen=True)
class CosetCells:
    """Outcomes labelled by the left cosets of a subgroup."""

    space: HomogeneousSpace

    @property
    def size(self) -> int:
        return self.space.size


@dataclass(frozen=True)
class CirclePartition:
    """Right-open arcs [b_i, b_{i+1}) cutting the circle at the given angles.

    The final arc wraps around to the first boundary plus a full turn.
    """

    boundaries: tuple[float, ...]

    def __post_init__(self) -> None:
        b = self.boundaries
        if len(b) < 1:
            raise ValueError("a partition needs at least one boundary")
        if any(not (0.0 <= x < 2.0 * np.pi) for x in b):
            raise ValueError("boundaries must lie in [0, 2pi)")
        if any(b[i + 1] <= b[i] for i in range(len(b) - 1)):
            raise ValueError("boundaries must be strictly ascending")

    @property
    def size(self) -> int:
        return len(self.boundaries)

    def arcs(self) -> list[tuple[float, float]]:
        b = self.boundaries
        out = [(b[i], b[i + 1]) for i in range(len(b) - 1)]
        out.append((b[-1], b[0] + 2.0 * np.pi))
        return out


ValueSpace = PlainCells | CosetCells | CirclePartition


@dataclass
class Povm:
    """A discrete positive operator valued measure.

    Effects are Hermitian, sit between 0 and 1 and sum to the identity,
    all within ``tol``.
    """

    space: ValueSpace
    effects: list[np.ndarray]
    tol: float = 1.0e-9
    # For phase observables, the correlation matrix that generated the
    # effects; circle-frame relativisation needs it to contract modes.
    phase_c: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.effects = [as_operator(e, "effect") for e in self.effects]
        if len(self.effects) != self.space.size:
            raise ValueError("effect count does not match the outcome set")
        d = self.effects[0].shape[0]
        for e in self.effects:
            if e.shape[0] != d:
                raise ValueError("effects differ in dimension")
            if hs_norm(e - dagger(e)) > self.tol * max(1.0, hs_norm(e)):
                raise ValueError("effect is not Hermitian")
            vals = np.linalg.eigvalsh((e + dagger(e)) / 2.0)
            if vals.min() < -self.tol or vals.max() > 1.0 + self.tol:
                raise ValueError("effect eigenvalues must lie in [0, 1]")
        if rel_err(sum(self.effects), np.eye(d)) > self.tol:
            raise ValueError("effects do not sum to the identity")

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)


@dataclass
class MarkovKernel:
    """A row-stochastic matrix: rows index inputs, columns outputs."""

    rows: np.ndarray

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=float)
        if self.rows.ndim != 2:
            raise ValueError("kernel must be a matrix")
        if self.rows.min() < -1.0e-12 or self.rows.max() > 1.0 + 1.0e-12:
            raise ValueError("kernel entries must lie in [0, 1]")
        sums = self.rows.sum(axis=1)
        if np.abs(sums - 1.0).max() > 1.0e-12:
            raise ValueError("kernel rows must sum to one")


def smear(povm: Povm, kernel: MarkovKernel, out_space: ValueSpace | None = None) -> Povm:
    """Classically post-process a POVM through a Markov kernel.

    The new effect for output y is sum_x kernel[x, y] * E_x.
    """
    if kernel.rows.shape[0] != povm.n_outcomes:
        raise ValueError("kernel input count does not match the POVM")
    n_out = kernel.rows.shape[1]
    effects = []
    for y in range(n_out):
        e = np.zeros((povm.dim, povm.dim), dtype=complex)
        for x in range(povm.n_outcomes):
            e += kernel.rows[x, y] * povm.effects[x]
        effects.append(e)
    return Povm(out_space if out_space is not None else PlainCells(n_out), effects)


def check_norm1(povm: Povm) -> list[float]:
    """Per-cell norm-1 score: the largest eigenvalue of each effect.

    A score of 1 for every non-zero effect is the localisability property;
    identically zero effects score 0.
    """
    scores = []
    for e in povm.effects:
        if hs_norm(e) <= 1.0e-14:
            scores.append(0.0)
            continue
        vals, _ = hermitian_eig(e)
        scores.append(float(vals[-1]))
    return scores


def is_sharp(povm: Povm, tol: float = 1.0e-8) -> bool:
    """Projection-valued with orthogonal effects: E_x E_y = delta_xy E_x."""
    for i, a in enumerate(povm.effects):
        for j, b in enumerate(povm.effects):
            target = a if i == j else np.zeros_like(a)
            if hs_norm(a @ b - target) > tol * max(1.0, hs_norm(a)):
                return False
    return True


def phase_povm(dim: int, c: np.ndarray, partition: CirclePartition) -> Povm:
    """Covariant phase observable with correlation matrix ``c``.

    The effect of an arc has matrix elements c[n, m] times the arc integral
    of e^{i (n - m) theta}, normalised so the full circle gives the
    identity.
    """
    c = as_operator(c, "c matrix")
    if c.shape[0] != dim:
        raise ValueError("c matrix dimension mismatch")
    if np.abs(np.diag(c) - 1.0).max() > 1.0e-9:
        raise ValueError("c matrix must have unit diagonal")
    vals = np.linalg.eigvalsh((c + dagger(c)) / 2.0)
    if vals.min() < -1.0e-9 or hs_norm(c - dagger(c)) > 1.0e-9 * max(1.0, hs_norm(c)):
        raise ValueError("c matrix must be positive semidefinite")
    effects = []
    for lo, hi in partition.arcs():
        e = np.zeros((dim, dim), dtype=complex)
        for n in range(dim):
            for m in range(dim):
                e[n, m] = c[n, m] * _arc_integral(n - m, lo, hi)
        effects.append(e)
    return Povm(partition, effects, phase_c=c)


def _arc_integral(nu: int, lo: float, hi: float) -> complex:
    # (1/2pi) * integral over [lo, hi) of e^{i nu theta}
    if nu == 0:
        return complex((hi - lo) / (2.0 * np.pi))
    return (np.exp(1j * nu * hi) - np.exp(1j * nu * lo)) / (2.0j * np.pi * nu)


@dataclass
class QuantumReferenceFrame:
    """A group representation together with a covariant POVM for it."""

    rep: Rep
    povm: Povm

    def __post_init__(self) -> None:
        if self.rep.dim != self.povm.dim:
            raise ValueError("representation and POVM dimensions differ")
        sp = self.povm.space
        if isinstance(self.rep, FiniteRep):
            if not isinstance(sp, CosetCells) or sp.space.group != self.rep.group:
                raise ValueError("finite frame needs coset cells over the same group")
        else:
            if not isinstance(sp, CirclePartition):
                raise ValueError("circle frame needs a circle partition")

    @property
    def is_principal(self) -> bool:
        sp = self.povm.space
        return sp.space.principal if isinstance(sp, CosetCells) else True

    def covariance_defect(self) -> float:
        """Worst-case violation of U(g) E(X) U(g)^dag = E(g . X).

        Finite frames are checked exhaustively. Circle frames are checked at
        every rotation that maps the arc partition onto itself; rotations
        incommensurate with the partition are not evaluated.
        """
        if isinstance(self.rep, FiniteRep):
            cells: CosetCells = self.povm.space
            worst = 0.0
            for g in range(self.rep.group.order):
                for s, e in enumerate(self.povm.effects):
                    moved = self.rep.conjugate(g, e)
                    target = self.povm.effects[cells.space.act(g, s)]
                    worst = max(worst, op_norm(moved - target))
            return worst
        return self._circle_covariance_defect()

    def _circle_covariance_defect(self) -> float:
        part: CirclePartition = self.povm.space
        bounds = np.array(part.boundaries)
        worst = 0.0
        for j in range(len(bounds)):
            theta = float((bounds[j] - bounds[0]) % (2.0 * np.pi))
            shifted = np.sort((bounds + theta) % (2.0 * np.pi))
            if np.abs(shifted - bounds).max() > 1.0e-12:
                continue
            # Rotation by theta sends arc i to arc i + j cyclically.
            u = self.rep.unitary(theta)
            for s, e in enumerate(self.povm.effects):
                target = self.povm.effects[(s + j) % len(bounds)]
                worst = max(worst, op_norm(u @ e @ dagger(u) - target))
        return worst

    def norm1_scores(self) -> list[float]:
        return check_norm1(self.povm)

    def is_sharp(self, tol: float = 1.0e-8) -> bool:
        return is_sharp(self.povm, tol)

    def is_complete(self, tol: float = 1.0e-8) -> bool | None:
        """Whether only the identity leaves every effect fixed.

        Evaluated exhaustively for finite frames; for circle frames the
        check is not evaluated and None is returned.
        """
        if not isinstance(self.rep, FiniteRep):
            return None
        g0 = self.rep.group.identity
        for g in range(self.rep.group.order):
            if g == g0:
                continue
            if all(
                op_norm(self.rep.conjugate(g, e) - e) <= tol for e in self.povm.effects
            ):
                return False
        return True


def ideal_frame(rep: FiniteRep) -> QuantumReferenceFrame:
    """The sharp principal frame carried by the regular representation."""
    group = rep.group
    lam = regular_representation(group)
    if rep.dim != group.order or any(
        rel_err(u, v) > 1.0e-9 for u, v in zip(rep.unitaries, lam.unitaries)
    ):
        raise ValueError("ideal frame needs the left regular representation")
    hom = HomogeneousSpace(group, (group.identity,))
    effects = []
    for c in range(hom.size):
        e = np.zeros((group.order, group.order), dtype=complex)
        g = hom.representatives[c]
        e[g, g] = 1.0
        effects.append(e)
    return QuantumReferenceFrame(rep, Povm(CosetCells(hom), effects))


@dataclass
class Dilation:
    """An isometry onto a larger space where the POVM becomes projective."""

    isometry: np.ndarray
    projections: list[np.ndarray]
    ambient_dim: int
    covariant: bool = False
    ambient_rep: FiniteRep | None = None
    kdim: int | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.isometry, dtype=complex)
        if rel_err(dagger(w) @ w, np.eye(w.shape[1])) > 1.0e-9:
            raise ValueError("dilation map is not an isometry")
        for p in self.projections:
            if hs_norm(p @ p - p) > 1.0e-8 * max(1.0, hs_norm(p)):
                raise ValueError("ambient effect is not a projection")
        self.isometry = w

    def pulled_back_effects(self) -> list[np.ndarray]:
        w = self.isometry
        return [dagger(w) @ p @ w for p in self.projections]

    def reconstruction_defect(self, povm: Povm) -> float:
        worst = 0.0
        for e, p in zip(povm.effects, self.pulled_back_effects()):
            worst = max(worst, hs_norm(e - p))
        return worst


def naimark_dilate(povm: Povm) -> Dilation:
    """Square-root dilation on the system tensored with the outcome space.

    W psi = sum_x (sqrt(E_x) psi) (x) |x>, and the ambient projections are
    1 (x) |x><x|; pulling them back recovers the POVM exactly.
    """
    d, k = povm.dim, povm.n_outcomes
    roots = [psd_sqrt(e) for e in povm.effects]
    w = np.zeros((d * k, d), dtype=complex)
    for x, r in enumerate(roots):
        for i in range(d):
            w[i * k + x, :] = r[i, :]
    projections = []
    eye = np.eye(d)
    for x in range(k):
        sel = np.zeros((k, k), dtype=complex)
        sel[x, x] = 1.0
        projections.append(np.kron(eye, sel))
    return Dilation(w, projections, ambient_dim=d * k)


def covariant_dilate(frame: QuantumReferenceFrame, tol: float = 1.0e-8) -> Dilation:
    """Dilate a finite principal frame to a projective one on H (x) l2(G).

    The isometry sends psi to the function g -> sqrt(E_e) U(g^-1) psi; it
    intertwines U with 1 (x) lambda and pulls the position projections
    1 (x) |g><g| back to the original effects.
    """
    if not isinstance(frame.rep, FiniteRep) or not frame.is_principal:
        raise ValueError("covariant dilation implemented for finite principal frames only")
    if frame.covariance_defect() > tol:
        raise ValueError("frame is not covariant within tolerance")
    group = frame.rep.group
    cells: CosetCells = frame.povm.space
    d = frame.rep.dim
    n = group.order
    cell_of = {hom_rep: c for c, hom_rep in enumerate(cells.space.representatives)}
    e_id = frame.povm.effects[cell_of[group.identity]]
    root = psd_sqrt(e_id)
    w = np.zeros((d * n, d), dtype=complex)
    for g in range(n):
        m_g = root @ frame.rep.unitary(group.inverse[g])
        for i in range(d):
            w[i * n + g, :] = m_g[i, :]
    eye = np.eye(d)
    projections = []
    for g in range(n):
        sel = np.zeros((n, n), dtype=complex)
        sel[g, g] = 1.0
        projections.append(np.kron(eye, sel))
    lam = regular_representation(group)
    ambient = FiniteRep(group, [np.kron(eye, u) for u in lam.unitaries])
    dil = Dilation(
        w, projections, ambient_dim=d * n, covariant=True, ambient_rep=ambient, kdim=d
    )
    worst = max(
        rel_err(w @ frame.rep.unitary(g), ambient.unitaries[g] @ w) for g in range(n)
    )
    if worst > 1.0e-9:
        raise RuntimeError("dilation failed to intertwine the representations")
    return dil
