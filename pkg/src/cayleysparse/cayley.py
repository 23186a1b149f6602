"""Cayley and Schreier graphs over explicit groups.

Conventions:

* adjacency is by right multiplication: ``(A_s)[x, y] = 1`` iff ``y = x . s``,
  so ``A_a @ A_b == A_{a*b}``;
* an undirected generator set is closed under inverses with equal weights on
  ``s`` and ``s^-1``; the representative of a pair is its smaller index;
* cut values use one formula for both kinds of graph,
  ``sum_s w_s * #{x in T : x.s not in T}``, which for undirected sets equals
  the quadratic form ``1_T^T L_H 1_T``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .groups import GroupAction, GroupTable, regular_action


class GeneratorSetError(ValueError):
    pass


class Rep(NamedTuple):
    rep: int
    is_involution: bool
    weight: float


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """Weighted multiset of generators, merged into ``(element, weight)`` entries.

    Build instances with :meth:`build`, which validates and normalizes the
    input.  Entries are sorted by element index.
    """

    group: GroupTable
    entries: tuple[tuple[int, float], ...]
    directed: bool = False

    @classmethod
    def build(
        cls,
        group: GroupTable,
        elems: Iterable[int],
        weights: Iterable[float] | None = None,
        *,
        directed: bool = False,
        symmetrize: bool = False,
    ) -> GeneratorSet:
        """Validate and merge generators.

        Duplicates are merged by adding weights and zero weights are dropped.
        The identity, out-of-range elements and negative weights are rejected.
        An undirected set that is not inverse-closed with equal weights is
        rejected unless ``symmetrize`` is set, in which case the weights of
        ``s`` and ``s^-1`` are both replaced by their average.
        """
        elems = [int(e) for e in elems]
        if weights is None:
            weights = [1.0] * len(elems)
        else:
            weights = [float(w) for w in weights]
        if len(weights) != len(elems):
            raise GeneratorSetError("elements and weights differ in length")
        merged: dict[int, float] = defaultdict(float)
        for e, w in zip(elems, weights):
            if not 0 <= e < group.n:
                raise GeneratorSetError(f"generator {e} is not an element of a group of order {group.n}")
            if e == group.identity:
                raise GeneratorSetError("the identity cannot be a generator (self-loops)")
            if not w >= 0:
                raise GeneratorSetError(f"generator {e} has negative weight {w}")
            merged[e] += w
        merged = {e: w for e, w in merged.items() if w > 0}
        if not directed:
            asym = [e for e, w in merged.items() if merged.get(group.inverse(e), 0.0) != w]
            if asym:
                if not symmetrize:
                    raise GeneratorSetError(
                        f"undirected generator set is not inverse-closed with equal weights at {sorted(asym)[:5]}"
                    )
                sym = {}
                for e, w in merged.items():
                    avg = (w + merged.get(group.inverse(e), 0.0)) / 2
                    sym[e] = sym[group.inverse(e)] = avg
                merged = sym
        return cls(group, tuple(sorted(merged.items())), directed)

    @classmethod
    def all_nonidentity(cls, group: GroupTable) -> GeneratorSet:
        return cls.build(group, [g for g in range(group.n) if g != group.identity])

    @property
    def elements(self) -> np.ndarray:
        return np.array([e for e, _ in self.entries], dtype=np.int64)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.entries], dtype=float)

    def weight_of(self, elem: int) -> float:
        return dict(self.entries).get(elem, 0.0)

    @property
    def is_unit_weight(self) -> bool:
        return all(w == 1.0 for _, w in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def parse_generator_text(text: str) -> tuple[list[int], list[float]]:
    """Parse ``elem [weight]`` lines; weight defaults to 1.0, ``#`` starts a comment."""
    elems, weights = [], []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) > 2:
            raise GeneratorSetError(f"bad generator line {raw!r}")
        try:
            elems.append(int(toks[0]))
            weights.append(float(toks[1]) if len(toks) == 2 else 1.0)
        except ValueError as exc:
            raise GeneratorSetError(f"bad generator line {raw!r}") from exc
    return elems, weights


def symmetric_representatives(gens: GeneratorSet) -> list[Rep]:
    """One entry per ``{s, s^-1}`` pair, choosing the smaller index."""
    if gens.directed:
        raise GeneratorSetError("symmetric representatives need an undirected generator set")
    g = gens.group
    reps = []
    for e, w in gens.entries:
        inv = g.inverse(e)
        if e <= inv:
            reps.append(Rep(e, e == inv, w))
    return reps


@dataclass(frozen=True, eq=False)
class CayleyGraph:
    """Schreier graph of ``gens`` acting on ``vertices``; Cayley when the action is regular."""

    vertices: GroupAction
    gens: GeneratorSet

    def __post_init__(self):
        if self.gens.group is not self.vertices.group and self.gens.group.n != self.vertices.group.n:
            raise GeneratorSetError("generators and action live in different groups")

    @classmethod
    def cayley(cls, group: GroupTable, gens: GeneratorSet) -> CayleyGraph:
        return cls(regular_action(group), gens)

    @classmethod
    def schreier(cls, action: GroupAction, gens: GeneratorSet) -> CayleyGraph:
        return cls(action, gens)

    @property
    def group(self) -> GroupTable:
        return self.vertices.group

    @property
    def n(self) -> int:
        return self.vertices.set_size

    @property
    def directed(self) -> bool:
        return self.gens.directed

    def with_gens(self, gens: GeneratorSet) -> CayleyGraph:
        return CayleyGraph(self.vertices, gens)

    def reps(self) -> list[Rep]:
        return symmetric_representatives(self.gens)


def adjacency_perm(h: CayleyGraph, s: int) -> np.ndarray:
    """``perm[x] = x . s``; as a matrix, row ``x`` has its 1 in column ``perm[x]``."""
    if not 0 <= s < h.group.n:
        raise GeneratorSetError(f"{s} is not a group element")
    return h.vertices.act[:, s].astype(np.int64)


def adjacency_matrix(h: CayleyGraph, s: int) -> np.ndarray:
    perm = adjacency_perm(h, s)
    a = np.zeros((h.n, h.n))
    a[np.arange(h.n), perm] = 1.0
    return a


def generator_laplacian(h: CayleyGraph, rep: int, weight: float = 1.0) -> np.ndarray:
    """``w (2I - A_s - A_{s^-1})``, or ``w (I - A_s)`` when ``s`` is an involution."""
    inv = h.group.inverse(rep)
    eye = np.eye(h.n)
    if inv == rep:
        lap = eye - adjacency_matrix(h, rep)
    else:
        lap = 2 * eye - adjacency_matrix(h, rep) - adjacency_matrix(h, inv)
    return weight * lap


def generator_quadratic_form(h: CayleyGraph, rep: int, v: np.ndarray) -> np.ndarray:
    """``v^T L_rep v`` for the unit-weight generator Laplacian, without forming it.

    ``v`` may hold several vectors as columns.
    """
    perm = adjacency_perm(h, rep)
    diff2 = ((v - v[perm]) ** 2).sum(axis=0)
    return diff2 / 2 if h.group.is_involution(rep) else diff2


def arc_weight_matrix(h: CayleyGraph) -> np.ndarray:
    """``W[x, y] = sum of w_s over generators s with x . s = y``."""
    n = h.n
    w = np.zeros((n, n))
    rows = np.arange(n)
    for e, wt in h.gens.entries:
        np.add.at(w, (rows, h.vertices.act[:, e]), wt)
    return w


def graph_laplacian(h: CayleyGraph) -> np.ndarray:
    """``L_H = sum over representatives of w_s L_s``.

    Built as ``(sum_s w_s) I - W`` with ``W`` the arc-weight matrix, which is the
    same sum grouped by generator instead of by pair.
    """
    if h.directed:
        raise GeneratorSetError("graph Laplacian is defined for undirected generator sets")
    w = arc_weight_matrix(h)
    lap = -w
    lap[np.diag_indices(h.n)] += float(sum(wt for _, wt in h.gens.entries))
    return lap


def _as_mask(h: CayleyGraph, cut_set) -> np.ndarray:
    arr = np.asarray(cut_set)
    if arr.dtype == bool and arr.shape == (h.n,):
        return arr
    mask = np.zeros(h.n, dtype=bool)
    idx = np.asarray(list(cut_set), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= h.n):
        raise ValueError("cut set contains a vertex out of range")
    mask[idx] = True
    return mask


def cut_value(h: CayleyGraph, cut_set) -> float:
    """Weight of arcs leaving ``cut_set``: ``sum_s w_s #{x in T : x.s not in T}``.

    ``cut_set`` is a boolean mask of length ``n`` or an iterable of vertices.
    """
    mask = _as_mask(h, cut_set)
    if not len(h.gens):
        return 0.0
    act = h.vertices.act[:, h.gens.elements]
    leaving = mask[:, None] & ~mask[act]
    return float(leaving.sum(axis=0) @ h.gens.weights)


def undirectify(h: CayleyGraph) -> CayleyGraph:
    """Add ``s^-1`` with weight ``w_s`` for every directed generator ``s``.

    Involutions pass through once; coinciding entries are merged by weight
    addition.
    """
    g = h.group
    elems, weights = [], []
    for e, w in h.gens.entries:
        elems.append(e)
        weights.append(w)
        if not g.is_involution(e):
            elems.append(g.inverse(e))
            weights.append(w)
    return h.with_gens(GeneratorSet.build(g, elems, weights, directed=False))


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.components -= 1
        return True


def component_labels(h: CayleyGraph) -> np.ndarray:
    """Weakly connected component label per vertex via union-find over generator arcs."""
    uf = UnionFind(h.n)
    for e, _ in h.gens.entries:
        if uf.components == 1:
            break
        for x, y in enumerate(h.vertices.act[:, e].tolist()):
            uf.union(x, y)
    roots = [uf.find(x) for x in range(h.n)]
    _, labels = np.unique(roots, return_inverse=True)
    return labels


def connected_components(h: CayleyGraph) -> int:
    return int(component_labels(h).max()) + 1 if h.n else 0


def edge_list(h: CayleyGraph) -> list[tuple[int, int, float]]:
    """Edges as ``(u, v, w)``.

    Directed graphs list every arc ``x -> x.s``.  Undirected graphs list each
    edge of the multigraph once, so ``sum w (v_u - v_v)^2`` is the Laplacian
    quadratic form.  Self-loops are omitted.
    """
    out = []
    act = h.vertices.act
    if h.directed:
        for e, w in h.gens.entries:
            out += [(x, int(y), w) for x, y in enumerate(act[:, e]) if x != y]
        return out
    for e, inv, w in ((r.rep, r.is_involution, r.weight) for r in h.reps()):
        for x, y in enumerate(act[:, e].tolist()):
            if x == y or (inv and y < x):
                continue
            out.append((x, y, w))
    return out


def random_generators(
    group: GroupTable, count: int, seed: int, *, directed: bool = False
) -> GeneratorSet:
    """``count`` distinct random non-identity elements, closed under inverses unless directed."""
    pool = np.array([g for g in range(group.n) if g != group.identity])
    if count > len(pool):
        raise GeneratorSetError(f"cannot draw {count} generators from {len(pool)} non-identity elements")
    chosen = np.random.default_rng(seed).choice(pool, size=count, replace=False).tolist()
    if directed:
        return GeneratorSet.build(group, chosen, directed=True)
    closed = set(chosen) | {group.inverse(e) for e in chosen}
    return GeneratorSet.build(group, sorted(closed))
