"""Finite-dimensional von Neumann algebra engine.

An algebra is stored as a Hilbert-Schmidt orthonormal basis of a subspace of
d x d matrices that is closed under adjoints and products and contains the
identity. Everything here is exact linear algebra on the vectorised
operator space; no structure theory is assumed, it is computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .opcore import DEFAULT_TOL, as_operator, dagger, hermitian_eig, hs_norm

# Drop threshold for new directions during Gram-Schmidt closure passes.
GS_DROP_TOL = 1.0e-9

# Span comparisons throughout the package use this threshold.
SPAN_TOL = 1.0e-7


def _vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=complex).ravel()


def _unvec(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape(d, d)


def _orthonormal_rows(
    candidates: np.ndarray, basis: np.ndarray | None, drop_tol: float = GS_DROP_TOL
) -> np.ndarray:
    """Extend orthonormal ``basis`` rows by Gram-Schmidt over ``candidates``.

    Candidates are normalised first; a candidate is dropped when its residual
    after projection falls below ``drop_tol``.
    """
    cur = basis if basis is not None else np.zeros((0, candidates.shape[1]), complex)
    norms = np.linalg.norm(candidates, axis=1)
    cands = candidates[norms > drop_tol] / norms[norms > drop_tol, None]
    if cur.shape[0]:
        # Batched first projection; survivors get a sequential second pass.
        cands = cands - (cands @ cur.conj().T) @ cur
    new: list[np.ndarray] = []
    for v in cands:
        if cur.shape[0]:
            v = v - (cur.conj() @ v) @ cur
        for w in new:
            v = v - np.vdot(w, v) * w
        n = np.linalg.norm(v)
        if n > drop_tol:
            new.append(v / n)
    if not new:
        return cur
    return np.vstack([cur, np.array(new)])


def _null_space(a: np.ndarray, tol: float = 1.0e-9) -> np.ndarray:
    """Orthonormal rows spanning {x : a @ x = 0}."""
    if a.shape[0] == 0:
        return np.eye(a.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(a)
    cut = tol * max(1.0, s[0] if s.size else 0.0)
    rank = int((s > cut).sum())
    return vh[rank:].conj()


@dataclass
class OperatorAlgebra:
    """A *-subalgebra of d x d matrices, held as an orthonormal basis.

    ``rows`` has one vectorised basis element per row; the span is closed
    under adjoints and products and contains the identity.
    """

    ambient_dim: int
    rows: np.ndarray

    def __post_init__(self) -> None:
        d = self.ambient_dim
        if self.rows.ndim != 2 or self.rows.shape[1] != d * d:
            raise ValueError("basis rows do not match the ambient dimension")
        gram = self.rows @ self.rows.conj().T
        if np.linalg.norm(gram - np.eye(self.rows.shape[0])) > 1.0e-9 * max(
            1.0, self.rows.shape[0]
        ):
            raise ValueError("basis rows are not orthonormal")

    @property
    def dim(self) -> int:
        return self.rows.shape[0]

    def basis_matrices(self) -> list[np.ndarray]:
        d = self.ambient_dim
        return [_unvec(r, d) for r in self.rows]

    def project(self, x: np.ndarray) -> np.ndarray:
        v = _vec(x)
        return _unvec((self.rows.conj() @ v) @ self.rows, self.ambient_dim)

    def distance(self, x: np.ndarray) -> float:
        """HS distance from ``x`` to the span."""
        v = _vec(x)
        coef = self.rows.conj() @ v
        return float(np.linalg.norm(v - coef @ self.rows))

    def contains(self, x: np.ndarray, tol: float = 1.0e-8) -> bool:
        return self.distance(x) <= tol * max(1.0, hs_norm(x))

    def star_closure_defect(self) -> float:
        d = self.ambient_dim
        worst = 0.0
        for r in self.rows:
            adj = _vec(dagger(_unvec(r, d)))
            coef = self.rows.conj() @ adj
            worst = max(worst, float(np.linalg.norm(adj - coef @ self.rows)))
        return worst

    def validate(self, tol: float = 1.0e-8) -> None:
        if self.star_closure_defect() > tol:
            raise ValueError("basis span is not closed under adjoints")
        if self.distance(np.eye(self.ambient_dim)) > tol * np.sqrt(self.ambient_dim):
            raise ValueError("basis span does not contain the identity")


def algebra_from_matrices(mats, ambient_dim: int) -> OperatorAlgebra:
    """Orthonormalise a spanning set (no closure) into an algebra object."""
    cands = np.array([_vec(as_operator(m)) for m in mats])
    rows = _orthonormal_rows(cands, None)
    return OperatorAlgebra(ambient_dim, rows)


def generate_algebra(
    generators, ambient_dim: int, drop_tol: float = GS_DROP_TOL
) -> OperatorAlgebra:
    """Smallest unital *-closed algebra containing the generators.

    Alternates adjoining adjoints and all pairwise products, orthonormalising
    as it goes, until one full pass produces no new direction.
    """
    d = int(ambient_dim)
    gens = [as_operator(g, "generator") for g in generators]
    for g in gens:
        if g.shape[0] != d:
            raise ValueError("generator dimension does not match ambient_dim")
    seed = [np.eye(d, dtype=complex)] + gens
    rows = _orthonormal_rows(np.array([_vec(m) for m in seed]), None, drop_tol)
    while True:
        before = rows.shape[0]
        mats = [_unvec(r, d) for r in rows]
        adjs = np.array([_vec(dagger(m)) for m in mats])
        rows = _orthonormal_rows(adjs, rows, drop_tol)
        mats = [_unvec(r, d) for r in rows]
        stack = np.array(mats)
        prods = np.einsum("aij,bjk->abik", stack, stack).reshape(-1, d * d)
        rows = _orthonormal_rows(prods, rows, drop_tol)
        if rows.shape[0] == before:
            break
        if rows.shape[0] > d * d:
            raise RuntimeError("closure exceeded the ambient operator space")
    return OperatorAlgebra(d, rows)


def commutant(alg: OperatorAlgebra, tol: float = 1.0e-9) -> OperatorAlgebra:
    """All matrices commuting with every element of ``alg``.

    Solved as one exact null-space problem on the vectorised operator space:
    vec(bx - xb) = (b (x) I - I (x) b^T) vec(x) for row-major vec.
    """
    d = alg.ambient_dim
    eye = np.eye(d)
    blocks = []
    for b in alg.basis_matrices():
        blocks.append(np.kron(b, eye) - np.kron(eye, b.T))
    rows = _null_space(np.vstack(blocks), tol)
    return OperatorAlgebra(d, rows)


def span_intersection(a_rows: np.ndarray, b_rows: np.ndarray) -> np.ndarray:
    """Orthonormal rows spanning the intersection of two row-span subspaces."""
    m1 = a_rows.shape[0]
    if m1 == 0 or b_rows.shape[0] == 0:
        return np.zeros((0, a_rows.shape[1]), complex)
    stacked = np.vstack([a_rows, -b_rows])
    combos = _null_space(stacked.T)
    if combos.shape[0] == 0:
        return np.zeros((0, a_rows.shape[1]), complex)
    vecs = combos[:, :m1] @ a_rows
    return _orthonormal_rows(vecs, None)


def centre(alg: OperatorAlgebra) -> OperatorAlgebra:
    rows = span_intersection(alg.rows, commutant(alg).rows)
    return OperatorAlgebra(alg.ambient_dim, rows)


def is_factor(alg: OperatorAlgebra) -> bool:
    return centre(alg).dim == 1


def span_distance(a: OperatorAlgebra | np.ndarray, b: OperatorAlgebra | np.ndarray) -> float:
    """Symmetric span distance: worst distance of one orthonormal basis
    element to the other span, maximised over both directions."""
    ra = a.rows if isinstance(a, OperatorAlgebra) else a
    rb = b.rows if isinstance(b, OperatorAlgebra) else b
    worst = 0.0
    for rows, other in ((ra, rb), (rb, ra)):
        if other.shape[0] == 0:
            if rows.shape[0]:
                return 1.0
            continue
        resid = rows - (rows @ other.conj().T) @ other
        if resid.size:
            worst = max(worst, float(np.linalg.norm(resid, axis=1).max()))
    return worst


@dataclass
class BlockStructure:
    """Wedderburn block data: the algebra is a direct sum of full matrix
    blocks M_n acting with multiplicity m, exhibited by ``change_of_basis``."""

    blocks: list[tuple[int, int]]
    change_of_basis: np.ndarray
    defect: float = 0.0

    @property
    def algebra_dim(self) -> int:
        return sum(n * n for n, _ in self.blocks)

    @property
    def commutant_dim(self) -> int:
        return sum(m * m for _, m in self.blocks)


def _cluster(vals: np.ndarray, gap: float) -> list[np.ndarray]:
    groups: list[list[int]] = [[0]]
    for i in range(1, len(vals)):
        if vals[i] - vals[i - 1] <= gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [np.array(g) for g in groups]


def _hermitian_span_rows(rows: np.ndarray, d: int) -> list[np.ndarray]:
    out = []
    for r in rows:
        m = _unvec(r, d)
        out.append((m + dagger(m)) / 2.0)
        out.append((m - dagger(m)) / 2.0j)
    return out


def _split_block(
    alg_rows: np.ndarray, iso: np.ndarray, rng: np.random.Generator
) -> tuple[int, int, np.ndarray]:
    """Turn one central block into (n, m, block unitary).

    ``iso`` has orthonormal columns spanning the block subspace. Inside the
    block the algebra is a full matrix factor M_n with multiplicity m; the
    returned unitary reorders the block so elements look like X (x) 1_m.
    """
    r = iso.shape[1]
    d = int(np.sqrt(alg_rows.shape[1]))
    comp = [dagger(iso) @ _unvec(row, d) @ iso for row in alg_rows]
    rows = _orthonormal_rows(np.array([_vec(c) for c in comp]), None)
    dim = rows.shape[0]
    n = int(round(np.sqrt(dim)))
    if n * n != dim or r % n != 0:
        raise _Degenerate
    m = r // n

    herm = _hermitian_span_rows(rows, r)
    for _ in range(8):
        coeff = rng.standard_normal(len(herm))
        a = sum(c * h for c, h in zip(coeff, herm))
        vals, vecs = hermitian_eig(a)
        gap = 1.0e-8 * max(1.0, float(np.abs(vals).max()))
        clusters = _cluster(vals, gap)
        if len(clusters) == n and all(len(c) == m for c in clusters):
            break
    else:
        raise _Degenerate
    chunks = [vecs[:, c] for c in clusters]

    for _ in range(8):
        z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        g = _unvec(z @ rows, r)
        aligners = []
        ok = True
        for k, ck in enumerate(chunks):
            w = dagger(ck) @ g @ chunks[0]
            u, s, vh = np.linalg.svd(w)
            if s.min() < 1.0e-8 * max(1.0, s.max()):
                ok = False
                break
            aligners.append(u @ vh)
        if ok:
            break
    else:
        raise _Degenerate

    cols = [ck @ uk for ck, uk in zip(chunks, aligners)]
    q = np.hstack(cols)
    return n, m, q


class _Degenerate(Exception):
    pass


def decompose(
    alg: OperatorAlgebra, seed: int = 7, max_retries: int = 8, tol: float = SPAN_TOL
) -> BlockStructure:
    """Exhibit the block structure of a finite-dimensional algebra.

    A generic Hermitian element of the centre is sampled (seeded, so runs
    are reproducible); its spectral projections carve the ambient space into
    the central blocks, which are then split individually. Degenerate draws
    are retried up to ``max_retries`` times.
    """
    d = alg.ambient_dim
    z_alg = centre(alg)
    herm = _hermitian_span_rows(z_alg.rows, d)
    rng = np.random.default_rng(seed)
    for attempt in range(max_retries):
        coeff = rng.standard_normal(len(herm))
        z = sum(c * h for c, h in zip(coeff, herm))
        vals, vecs = hermitian_eig(z)
        gap = 1.0e-8 * max(1.0, float(np.abs(vals).max()))
        clusters = _cluster(vals, gap)
        if len(clusters) != z_alg.dim:
            continue
        try:
            pieces = []
            for cl in clusters:
                iso = vecs[:, cl]
                n, m, q = _split_block(alg.rows, iso, rng)
                pieces.append((n, m, iso @ q))
        except _Degenerate:
            continue
        pieces.sort(key=lambda p: (p[0], p[1]))
        u = np.hstack([p[2] for p in pieces])
        blocks = [(n, m) for n, m, _ in pieces]
        defect = _block_defect(alg, blocks, u)
        if defect <= tol:
            return BlockStructure(blocks, u, defect)
    raise RuntimeError(
        "central element remained degenerate after "
        f"{max_retries} seeded attempts"
    )


def _block_defect(
    alg: OperatorAlgebra, blocks: list[tuple[int, int]], u: np.ndarray
) -> float:
    """Worst deviation of conjugated basis elements from (+) X_i (x) 1_m form."""
    d = alg.ambient_dim
    worst = 0.0
    for b in alg.basis_matrices():
        c = dagger(u) @ b @ u
        model = np.zeros_like(c)
        off = 0
        for n, m in blocks:
            r = n * m
            sub = c[off : off + r, off : off + r].reshape(n, m, n, m)
            x = np.einsum("kalb->kl", sub) / m
            model[off : off + r, off : off + r] = np.kron(x, np.eye(m))
            off += r
        worst = max(worst, float(np.linalg.norm(c - model)))
    return worst


def normalized_trace(x: np.ndarray) -> complex:
    """The tracial state of the ambient matrix algebra, tr(x)/d."""
    x = np.asarray(x)
    return complex(np.trace(x)) / x.shape[0]


@dataclass
class ProductTrace:
    """Linear extension of tau1 (x) tau2 to the algebra generated by
    elementary tensors a (x) b."""

    left: OperatorAlgebra
    right: OperatorAlgebra
    _rows: np.ndarray = field(init=False, repr=False)
    _values: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        d1, d2 = self.left.ambient_dim, self.right.ambient_dim
        mats = []
        vals = []
        for a in self.left.basis_matrices():
            for b in self.right.basis_matrices():
                mats.append(_vec(np.kron(a, b)))
                vals.append(normalized_trace(a) * normalized_trace(b))
        # Elementary tensors of two orthonormal bases are orthonormal.
        self._rows = np.array(mats)
        self._values = np.array(vals)

    def __call__(self, x: np.ndarray) -> complex:
        v = _vec(x)
        coef = self._rows.conj() @ v
        resid = v - coef @ self._rows
        if np.linalg.norm(resid) > 1.0e-8 * max(1.0, float(np.linalg.norm(v))):
            raise ValueError("operator lies outside the tensor product algebra")
        return complex(coef @ self._values)
