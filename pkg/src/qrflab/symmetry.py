"""Symmetry groups, unitary representations and group averaging.

Two kinds of group are supported: finite groups given by a Cayley table,
and the circle, handled through a band limit so that every integral in
sight is an exact finite quadrature. Both are unimodular, so a single Haar
average suffices for left and right invariance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .opcore import DEFAULT_TOL, as_operator, dagger, hermitian_eig, rel_err
from .vnalg import OperatorAlgebra, _orthonormal_rows

# Exhaustive associativity checking is cubic; cap it at a size where that
# stays instant.
_ASSOC_CHECK_MAX = 64


@dataclass
class FiniteGroup:
    """A finite group presented by labels and a Cayley table.

    ``table[i, j]`` is the index of the product of elements i and j.
    """

    labels: list[str]
    table: np.ndarray
    identity: int = field(init=False)
    inverse: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        n = len(self.labels)
        self.table = np.asarray(self.table, dtype=int)
        if self.table.shape != (n, n):
            raise ValueError("Cayley table shape does not match element count")
        if not ((0 <= self.table) & (self.table < n)).all():
            raise ValueError("Cayley table entry out of range")
        ids = [
            i
            for i in range(n)
            if (self.table[i] == np.arange(n)).all()
            and (self.table[:, i] == np.arange(n)).all()
        ]
        if len(ids) != 1:
            raise ValueError("Cayley table has no two-sided identity")
        self.identity = ids[0]
        inv = np.full(n, -1, dtype=int)
        for i in range(n):
            hits = np.flatnonzero(self.table[i] == self.identity)
            if hits.size != 1 or self.table[hits[0], i] != self.identity:
                raise ValueError(f"element {self.labels[i]!r} has no inverse")
            inv[i] = hits[0]
        self.inverse = inv
        if n <= _ASSOC_CHECK_MAX:
            t = self.table
            # (ab)c == a(bc) for all triples, done in two vectorised gathers:
            # t[t, :][a, b, c] = t[t[a, b], c] and t[:, t][a, b, c] = t[a, t[b, c]].
            if not (t[t, :] == t[:, t]).all():
                raise ValueError("Cayley table is not associative")

    @property
    def order(self) -> int:
        return len(self.labels)

    def haar_weight(self) -> float:
        return 1.0 / self.order

    def modular_function(self, g: int) -> float:
        # Finite groups are unimodular.
        return 1.0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteGroup)
            and self.labels == other.labels
            and np.array_equal(self.table, other.table)
        )


@dataclass(frozen=True)
class CircleGroup:
    """The circle group, up to a fixed band limit.

    Any representation attached to this group may only carry integer
    frequencies of magnitude at most ``bandwidth``; group averages are then
    exact sums over ``4 * bandwidth + 1`` equispaced angles.
    """

    bandwidth: int

    def __post_init__(self) -> None:
        if self.bandwidth < 0:
            raise ValueError("bandwidth must be non-negative")

    def quadrature_nodes(self) -> np.ndarray:
        n = 4 * self.bandwidth + 1
        return 2.0 * np.pi * np.arange(n) / n

    def modular_function(self, theta: float) -> float:
        return 1.0


SymmetryGroup = FiniteGroup | CircleGroup


def cyclic_group(n: int) -> FiniteGroup:
    if n < 1:
        raise ValueError("cyclic group needs n >= 1")
    idx = np.arange(n)
    table = (idx[:, None] + idx[None, :]) % n
    return FiniteGroup([f"g{k}" for k in range(n)], table)


def symmetric_group(n: int) -> FiniteGroup:
    """S_n with permutations composed as functions, p*q : i -> p[q[i]]."""
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    size = len(perms)
    table = np.zeros((size, size), dtype=int)
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            table[i, j] = index[tuple(p[q[k]] for k in range(n))]
    labels = ["".join(map(str, p)) for p in perms]
    return FiniteGroup(labels, table)


@dataclass
class FiniteRep:
    """A unitary representation of a finite group, one matrix per element."""

    group: FiniteGroup
    unitaries: list[np.ndarray]

    def __post_init__(self) -> None:
        g = self.group
        self.unitaries = [as_operator(u, "representation matrix") for u in self.unitaries]
        if len(self.unitaries) != g.order:
            raise ValueError("representation needs one unitary per group element")
        d = self.unitaries[0].shape[0]
        eye = np.eye(d)
        for i, u in enumerate(self.unitaries):
            if u.shape[0] != d:
                raise ValueError("representation matrices differ in dimension")
            if rel_err(u @ dagger(u), eye) > DEFAULT_TOL:
                raise ValueError(f"matrix for {g.labels[i]!r} is not unitary")
        if rel_err(self.unitaries[g.identity], eye) > DEFAULT_TOL:
            raise ValueError("identity element must act as the identity matrix")
        for i in range(g.order):
            for j in range(g.order):
                prod = self.unitaries[i] @ self.unitaries[j]
                if rel_err(prod, self.unitaries[g.table[i, j]]) > DEFAULT_TOL:
                    raise ValueError(
                        f"not a homomorphism at pair ({g.labels[i]}, {g.labels[j]})"
                    )

    @property
    def dim(self) -> int:
        return self.unitaries[0].shape[0]

    def unitary(self, g: int) -> np.ndarray:
        return self.unitaries[g]

    def conjugate(self, g: int, x: np.ndarray) -> np.ndarray:
        u = self.unitaries[g]
        return u @ x @ dagger(u)


@dataclass
class CircleRep:
    """A band-limited circle representation, U(theta) = exp(i theta N).

    The generator must be Hermitian with integer eigenvalues bounded by the
    group's band limit; the eigendecomposition is cached so U(theta) is
    assembled exactly from phases.
    """

    group: CircleGroup
    generator: np.ndarray
    freqs: np.ndarray = field(init=False)
    vecs: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.generator = as_operator(self.generator, "generator")
        vals, vecs = hermitian_eig(self.generator)
        ints = np.rint(vals)
        if np.abs(vals - ints).max() > 1.0e-9:
            raise ValueError("generator eigenvalues must be integers")
        if ints.size and np.abs(ints).max() > self.group.bandwidth:
            raise ValueError("generator frequency exceeds the group band limit")
        self.freqs = ints.astype(int)
        self.vecs = vecs

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    def unitary(self, theta: float) -> np.ndarray:
        phases = np.exp(1j * theta * self.freqs)
        return (self.vecs * phases) @ dagger(self.vecs)

    def conjugate(self, theta: float, x: np.ndarray) -> np.ndarray:
        u = self.unitary(theta)
        return u @ x @ dagger(u)


Rep = FiniteRep | CircleRep


def trivial_rep(group: SymmetryGroup, dim: int) -> Rep:
    if isinstance(group, FiniteGroup):
        eye = np.eye(dim, dtype=complex)
        return FiniteRep(group, [eye.copy() for _ in range(group.order)])
    return CircleRep(group, np.zeros((dim, dim), dtype=complex))


def tensor_rep(a: Rep, b: Rep, group: SymmetryGroup | None = None) -> Rep:
    """Tensor product representation on the Kronecker product space.

    For circle representations the combined frequencies can exceed either
    band limit, so a wide-enough target ``group`` must be supplied when the
    default (reusing ``a.group``) would not hold them.
    """
    if isinstance(a, FiniteRep) and isinstance(b, FiniteRep):
        if a.group != b.group:
            raise ValueError("tensor product needs representations of one group")
        us = [np.kron(u, v) for u, v in zip(a.unitaries, b.unitaries)]
        return FiniteRep(group if isinstance(group, FiniteGroup) else a.group, us)
    if isinstance(a, CircleRep) and isinstance(b, CircleRep):
        gen = np.kron(a.generator, np.eye(b.dim)) + np.kron(np.eye(a.dim), b.generator)
        target = group if isinstance(group, CircleGroup) else a.group
        return CircleRep(target, gen)
    raise ValueError("cannot mix finite and circle representations")


def _check_pair(u: Rep, v: Rep, x: np.ndarray) -> None:
    if type(u) is not type(v):
        raise ValueError("averaging needs two representations of one group")
    if isinstance(u, FiniteRep):
        if u.group != v.group:
            raise ValueError("averaging needs two representations of one group")
    elif u.group != v.group:
        raise ValueError("averaging needs two representations of one group")
    if x.shape != (u.dim, v.dim):
        raise ValueError("operator shape does not match the representations")


def average_over_group(u: Rep, v: Rep, x: np.ndarray) -> np.ndarray:
    """Haar average of g -> U(g) x V(g)^dag.

    Finite groups sum in fixed element order; the circle uses the group's
    exact quadrature grid. The result is a fixed point of the same map.
    """
    x = as_operator(x)
    _check_pair(u, v, x)
    if isinstance(u, FiniteRep):
        acc = np.zeros_like(x)
        for g in range(u.group.order):
            acc += u.unitaries[g] @ x @ dagger(v.unitaries[g])
        return acc / u.group.order
    nodes = u.group.quadrature_nodes()
    acc = np.zeros_like(x)
    for theta in nodes:
        acc += u.unitary(theta) @ x @ dagger(v.unitary(theta))
    return acc / nodes.size


def _averaging_superoperator(u: Rep, v: Rep) -> np.ndarray:
    # Acts on row-major vectorised operators: vec(UxV^dag) = (U (x) conj(V)) vec(x).
    if isinstance(u, FiniteRep):
        pairs = list(zip(u.unitaries, v.unitaries))
        return sum(np.kron(a, b.conj()) for a, b in pairs) / len(pairs)
    nodes = u.group.quadrature_nodes()
    return sum(
        np.kron(u.unitary(t), v.unitary(t).conj()) for t in nodes
    ) / nodes.size


def fixed_point_rows(u: Rep, v: Rep | None = None) -> np.ndarray:
    """Orthonormal basis (as vectorised rows) of {x : U(g) x V(g)^dag = x}."""
    v = u if v is None else v
    if u.dim != v.dim:
        raise ValueError("fixed points need equal dimensions on both sides")
    proj = _averaging_superoperator(u, v)
    # The averaging map is idempotent, so its column span is the fixed space.
    return _orthonormal_rows(proj.T, None)


def fixed_point_algebra(u: Rep) -> OperatorAlgebra:
    """Fixed points of the adjoint action, packaged as an algebra."""
    alg = OperatorAlgebra(u.dim, fixed_point_rows(u, u))
    alg.validate()
    return alg


def regular_representation(group: SymmetryGroup) -> FiniteRep:
    """Left regular representation, lambda(g)|h> = |gh>."""
    if isinstance(group, CircleGroup):
        raise ValueError("regular representation not finite-dimensional")
    n = group.order
    mats = []
    for g in range(n):
        m = np.zeros((n, n), dtype=complex)
        for h in range(n):
            m[group.table[g, h], h] = 1.0
        mats.append(m)
    return FiniteRep(group, mats)


def right_regular_representation(group: SymmetryGroup) -> FiniteRep:
    """Right regular representation, rho(g)|h> = |h g^-1>."""
    if isinstance(group, CircleGroup):
        raise ValueError("regular representation not finite-dimensional")
    n = group.order
    mats = []
    for g in range(n):
        m = np.zeros((n, n), dtype=complex)
        ginv = group.inverse[g]
        for h in range(n):
            m[group.table[h, ginv], h] = 1.0
        mats.append(m)
    return FiniteRep(group, mats)


@dataclass
class HomogeneousSpace:
    """Left cosets of a subgroup, with the left action tabulated.

    ``subgroup`` is a set of element indices; cosets are stored as sorted
    tuples with the smallest member as representative.
    """

    group: FiniteGroup
    subgroup: tuple[int, ...]
    cosets: list[tuple[int, ...]] = field(init=False)
    representatives: list[int] = field(init=False)
    coset_index: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        g = self.group
        sub = tuple(sorted(set(int(s) for s in self.subgroup)))
        if g.identity not in sub:
            raise ValueError("subgroup must contain the identity")
        for a in sub:
            if g.inverse[a] not in sub:
                raise ValueError("subgroup is not closed under inverses")
            for b in sub:
                if g.table[a, b] not in sub:
                    raise ValueError("subgroup is not closed under products")
        self.subgroup = sub
        seen: dict[int, int] = {}
        cosets: list[tuple[int, ...]] = []
        for e in range(g.order):
            if e in seen:
                continue
            cs = tuple(sorted(int(g.table[e, s]) for s in sub))
            for member in cs:
                seen[member] = len(cosets)
            cosets.append(cs)
        self.cosets = cosets
        self.representatives = [c[0] for c in cosets]
        idx = np.zeros(g.order, dtype=int)
        for e, c in seen.items():
            idx[e] = c
        self.coset_index = idx

    @property
    def size(self) -> int:
        return len(self.cosets)

    @property
    def principal(self) -> bool:
        return len(self.subgroup) == 1

    def act(self, g: int, cell: int) -> int:
        """Index of g . (sH) where s represents cell."""
        return int(self.coset_index[self.group.table[g, self.representatives[cell]]])
