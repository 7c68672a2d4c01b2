"""Crossed products of matrix algebras by finite group actions.

The crossed product lives on the system space tensored with l2(G). It is
generated by the twisted embedding of the algebra together with the right
translations, and two classical identities about it are checked
numerically: the commutation theorem that identifies it with a fixed-point
algebra, and the compression theorem that recovers the invariant algebra
of a frame from a corner of the crossed product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frames import Dilation, QuantumReferenceFrame, covariant_dilate
from .opcore import dagger, hs_norm, rel_err
from .relativise import GroupAction
from .symmetry import (
    FiniteGroup,
    FiniteRep,
    fixed_point_rows,
    regular_representation,
    right_regular_representation,
    tensor_rep,
)
from .vnalg import (
    OperatorAlgebra,
    SPAN_TOL,
    _orthonormal_rows,
    generate_algebra,
    span_distance,
    span_intersection,
)


def embed_twisted(a: np.ndarray, rep: FiniteRep) -> np.ndarray:
    """The crossed product embedding, pi(a) = sum_g alpha(g, a) (x) |g><g|."""
    n = rep.group.order
    d = rep.dim
    out = np.zeros((d * n, d * n), dtype=complex)
    for g in range(n):
        sel = np.zeros((n, n), dtype=complex)
        sel[g, g] = 1.0
        out += np.kron(rep.conjugate(g, a), sel)
    return out


def right_translations(group: FiniteGroup, dim: int) -> list[np.ndarray]:
    """1 (x) rho(g) on the system space tensored with l2(G)."""
    rho = right_regular_representation(group)
    eye = np.eye(dim)
    return [np.kron(eye, u) for u in rho.unitaries]


@dataclass
class CrossedProductAlgebra:
    """The algebra generated by pi(M) and the right translations."""

    action: GroupAction
    algebra: OperatorAlgebra
    tagged_generators: list[tuple[str, np.ndarray]]

    @property
    def group(self) -> FiniteGroup:
        return self.action.rep.group

    @property
    def ambient_dim(self) -> int:
        return self.algebra.ambient_dim

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def covariance_defect(self) -> float:
        """Worst violation of rho(g) pi(a) rho(g)^dag = pi(alpha(g, a))."""
        rep = self.action.rep
        rhos = right_translations(rep.group, rep.dim)
        worst = 0.0
        for b in self.action.algebra.basis_matrices():
            pb = embed_twisted(b, rep)
            for g in range(rep.group.order):
                lhs = rhos[g] @ pb @ dagger(rhos[g])
                rhs = embed_twisted(rep.conjugate(g, b), rep)
                worst = max(worst, hs_norm(lhs - rhs))
        return worst

    def pi_homomorphism_defect(self) -> float:
        rep = self.action.rep
        mats = self.action.algebra.basis_matrices()
        worst = 0.0
        for a in mats:
            worst = max(
                worst,
                hs_norm(embed_twisted(dagger(a), rep) - dagger(embed_twisted(a, rep))),
            )
            for b in mats:
                lhs = embed_twisted(a @ b, rep)
                rhs = embed_twisted(a, rep) @ embed_twisted(b, rep)
                worst = max(worst, hs_norm(lhs - rhs))
        return worst


def build_crossed_product(action: GroupAction) -> CrossedProductAlgebra:
    """Generate M x| G from the twisted embedding and right translations."""
    if not isinstance(action.rep, FiniteRep):
        raise ValueError("continuous crossed products handled analytically in typecond")
    rep = action.rep
    tagged: list[tuple[str, np.ndarray]] = []
    for i, b in enumerate(action.algebra.basis_matrices()):
        tagged.append((f"pi:{i}", embed_twisted(b, rep)))
    for g, u in enumerate(right_translations(rep.group, rep.dim)):
        tagged.append((f"rho:{rep.group.labels[g]}", u))
    alg = generate_algebra([m for _, m in tagged], rep.dim * rep.group.order)
    return CrossedProductAlgebra(action, alg, tagged)


def intertwining_unitary(rep: FiniteRep) -> np.ndarray:
    """V with (V phi)(g) = U(g) phi(g); conjugation by V untwists pi."""
    n = rep.group.order
    d = rep.dim
    v = np.zeros((d * n, d * n), dtype=complex)
    for g in range(n):
        sel = np.zeros((n, n), dtype=complex)
        sel[g, g] = 1.0
        v += np.kron(rep.unitary(g), sel)
    return v


def invariant_joint_algebra(
    action: GroupAction, frame_rep: FiniteRep
) -> OperatorAlgebra:
    """Fixed points of Ad(U_S (x) U_R) inside M_S (x) B(H_R)."""
    if action.rep.group != frame_rep.group:
        raise ValueError("system and frame must share one symmetry group")
    joint = tensor_rep(action.rep, frame_rep)
    fixed = fixed_point_rows(joint, joint)
    d_r = frame_rep.dim
    tensor_rows = []
    units = np.eye(d_r * d_r)
    for a in action.algebra.basis_matrices():
        for kl in range(d_r * d_r):
            e = units[kl].reshape(d_r, d_r)
            tensor_rows.append(np.kron(a, e).ravel())
    rows = span_intersection(fixed, np.array(tensor_rows))
    return OperatorAlgebra(action.rep.dim * d_r, rows)


@dataclass
class CommutationReport:
    """Numerical witness for the commutation theorem on one fixture."""

    crossed_dim: int
    fixed_dim: int
    span_defect: float
    untwist_defect: float
    translation_defect: float
    tolerance: float = SPAN_TOL

    @property
    def passed(self) -> bool:
        return (
            self.crossed_dim == self.fixed_dim
            and self.span_defect <= self.tolerance
            and self.untwist_defect <= 1.0e-10
            and self.translation_defect <= 1.0e-10
        )


def verify_commutation_theorem(cp: CrossedProductAlgebra) -> CommutationReport:
    """Check M x| G = (M (x) B(l2 G))^{alpha (x) Ad lambda}.

    Also verifies the conjugation identities for V: it untwists pi back to
    a (x) 1 and carries U(g) (x) rho(g) to 1 (x) rho(g).
    """
    action = cp.action
    rep = action.rep
    group = rep.group
    lam = regular_representation(group)
    joint = tensor_rep(rep, lam)
    fixed = fixed_point_rows(joint, joint)
    d, n = rep.dim, group.order
    tensor_rows = []
    units = np.eye(n * n)
    for a in action.algebra.basis_matrices():
        for kl in range(n * n):
            e = units[kl].reshape(n, n)
            tensor_rows.append(np.kron(a, e).ravel())
    fixed_in_m = span_intersection(fixed, np.array(tensor_rows))
    span_defect = span_distance(cp.algebra.rows, fixed_in_m)

    v = intertwining_unitary(rep)
    untwist = 0.0
    for a in action.algebra.basis_matrices():
        lhs = v @ np.kron(a, np.eye(n)) @ dagger(v)
        untwist = max(untwist, hs_norm(lhs - embed_twisted(a, rep)))
    rho = right_regular_representation(group)
    rhos = right_translations(group, d)
    translation = 0.0
    for g in range(n):
        lhs = v @ np.kron(rep.unitary(g), rho.unitaries[g]) @ dagger(v)
        translation = max(translation, hs_norm(lhs - rhos[g]))

    return CommutationReport(
        crossed_dim=cp.dim,
        fixed_dim=fixed_in_m.shape[0],
        span_defect=span_defect,
        untwist_defect=untwist,
        translation_defect=translation,
    )


def compress_by_frame(
    alg: OperatorAlgebra,
    p: np.ndarray,
    translations: list[np.ndarray],
    tol: float = 1.0e-8,
) -> OperatorAlgebra:
    """Corner of an algebra cut by a translation-invariant projection.

    ``translations`` are the unitaries p must commute with (the frame-side
    left translations); a projection that fails this is rejected because
    the corner would not inherit the symmetry.
    """
    d = alg.ambient_dim
    if p.shape != (d, d):
        raise ValueError("projection dimension mismatch")
    if hs_norm(p @ p - p) > tol * max(1.0, hs_norm(p)) or hs_norm(p - dagger(p)) > tol:
        raise ValueError("compression needs a self-adjoint idempotent")
    for u in translations:
        if hs_norm(p @ u - u @ p) > tol * max(1.0, hs_norm(p)):
            raise ValueError("projection does not commute with the frame translations")
    cands = np.array([(p @ b @ p).ravel() for b in alg.basis_matrices()])
    rows = _orthonormal_rows(cands, None)
    return OperatorAlgebra(d, rows)


def _reorder_middle_last(d_s: int, n: int, d_k: int) -> np.ndarray:
    """Permutation taking (H_S (x) l2(G)) (x) K to H_S (x) K (x) l2(G)."""
    size = d_s * n * d_k
    perm = np.zeros((size, size), dtype=complex)
    for s in range(d_s):
        for g in range(n):
            for k in range(d_k):
                src = (s * n + g) * d_k + k
                dst = (s * d_k + k) * n + g
                perm[dst, src] = 1.0
    return perm


@dataclass
class CompressionReport:
    """Numerical witness for the frame compression theorem on one fixture."""

    invariant_dim: int
    compressed_dim: int
    span_defect: float
    tolerance: float = SPAN_TOL

    @property
    def passed(self) -> bool:
        return self.invariant_dim == self.compressed_dim and self.span_defect <= self.tolerance


def verify_frame_compression(
    action: GroupAction, frame: QuantumReferenceFrame
) -> CompressionReport:
    """Check that the frame's dilation carries the invariant algebra of
    system plus frame onto a corner of (M x| G) (x) B(K).

    The dilation isometry W embeds H_R into K (x) l2(G); conjugating the
    invariant algebra by 1 (x) W must give exactly the compression of the
    extended crossed product by 1 (x) W W^dag.
    """
    if not isinstance(frame.rep, FiniteRep):
        raise ValueError("frame compression is verified for finite frames only")
    inv = invariant_joint_algebra(action, frame.rep)
    dil: Dilation = covariant_dilate(frame)
    w = dil.isometry
    d_s = action.rep.dim
    d_k = dil.kdim
    n = frame.rep.group.order
    p = w @ dagger(w)

    cp = build_crossed_product(action)
    perm = _reorder_middle_last(d_s, n, d_k)
    units = np.eye(d_k * d_k)
    ext_rows = []
    for c in cp.algebra.basis_matrices():
        for kl in range(d_k * d_k):
            e = units[kl].reshape(d_k, d_k)
            ext_rows.append((perm @ np.kron(c, e) @ dagger(perm)).ravel())
    extended = OperatorAlgebra(d_s * d_k * n, np.array(ext_rows))

    lam = regular_representation(frame.rep.group)
    guards = [np.kron(np.eye(d_s * d_k), u) for u in lam.unitaries]
    big_p = np.kron(np.eye(d_s), p)
    corner = compress_by_frame(extended, big_p, guards)

    big_w = np.kron(np.eye(d_s), w)
    embedded = np.array([(big_w @ x @ dagger(big_w)).ravel() for x in inv.basis_matrices()])
    defect = span_distance(embedded, corner.rows)
    return CompressionReport(
        invariant_dim=inv.dim, compressed_dim=corner.dim, span_defect=defect
    )
