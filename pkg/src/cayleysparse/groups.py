"""Explicit finite groups and group actions.

Every group element is a dense index ``0..n-1`` and the group is stored as its
full ``n x n`` multiplication table.  This keeps adjacency construction for
Cayley and Schreier graphs a matter of fancy indexing, at the cost of
``O(n^2)`` memory, which is fine for groups of a few thousand elements.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# n^2 table entries as int32; sym:7 (5040 elements) needs about 100 MiB.
MAX_ORDER = 5040
# Exhaustive associativity / action checks up to this order, sampled above.
EXHAUSTIVE_ORDER = 64
SAMPLED_TRIPLES = 10_000


class GroupTableError(ValueError):
    """Raised when a multiplication table does not describe a group."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.int32)
    a.setflags(write=False)
    return a


def _check_budget(n: int) -> None:
    if n > MAX_ORDER:
        raise GroupTableError(f"group of order {n} exceeds table budget {MAX_ORDER}")


def _find_identity(mul: np.ndarray) -> int:
    n = mul.shape[0]
    ar = np.arange(n)
    for e in range(n):
        if np.array_equal(mul[e], ar) and np.array_equal(mul[:, e], ar):
            return e
    raise GroupTableError("table has no identity row/column")


def _find_inverses(mul: np.ndarray, identity: int) -> np.ndarray:
    n = mul.shape[0]
    inv = np.full(n, -1, dtype=np.int64)
    for g in range(n):
        hits = np.flatnonzero(mul[g] == identity)
        for h in hits:
            if mul[h, g] == identity:
                inv[g] = h
                break
        if inv[g] < 0:
            raise GroupTableError(f"element {g} has no two-sided inverse")
    return inv


def check_associative(mul: np.ndarray, *, seed: int = 0) -> tuple[int, int, int] | None:
    """Return a violating triple ``(a, b, c)`` or ``None``.

    Exhaustive for ``n <= EXHAUSTIVE_ORDER``, otherwise checks
    ``SAMPLED_TRIPLES`` uniformly random triples.
    """
    n = mul.shape[0]
    if n <= EXHAUSTIVE_ORDER:
        left = mul[mul]  # left[a, b, c] = (ab)c
        right = mul[np.arange(n)[:, None, None], mul[None, :, :]]
        bad = np.argwhere(left != right)
    else:
        rng = np.random.default_rng(seed)
        a, b, c = rng.integers(0, n, size=(3, SAMPLED_TRIPLES))
        mask = mul[mul[a, b], c] != mul[a, mul[b, c]]
        bad = np.stack([a[mask], b[mask], c[mask]], axis=1)
    if len(bad):
        return tuple(int(t) for t in bad[0])
    return None


@dataclass(frozen=True, eq=False)
class GroupTable:
    """A finite group given by its multiplication table.

    ``mul[g, h]`` is the index of ``g*h``; ``inv[g]`` is the index of ``g^-1``.
    Instances are immutable and the arrays are read-only.
    """

    mul: np.ndarray
    inv: np.ndarray
    identity: int
    name: str = "group"
    _abelian: list = field(default_factory=list, repr=False)

    @classmethod
    def from_array(cls, mul, name: str = "table") -> GroupTable:
        """Validate a square table, inferring identity and inverses."""
        mul = np.asarray(mul)
        if mul.ndim != 2 or mul.shape[0] != mul.shape[1] or mul.shape[0] == 0:
            raise GroupTableError(f"table must be a non-empty square array, got shape {mul.shape}")
        n = mul.shape[0]
        _check_budget(n)
        if mul.min() < 0 or mul.max() >= n:
            raise GroupTableError("table entries must lie in [0, n)")
        mul = mul.astype(np.int64)
        identity = _find_identity(mul)
        inv = _find_inverses(mul, identity)
        bad = check_associative(mul)
        if bad is not None:
            raise GroupTableError(f"associativity fails for triple {bad}")
        return cls(_frozen(mul), _frozen(inv), identity, name)

    @property
    def n(self) -> int:
        return int(self.mul.shape[0])

    def __len__(self) -> int:
        return self.n

    def op(self, a: int, b: int) -> int:
        return int(self.mul[a, b])

    def inverse(self, a: int) -> int:
        return int(self.inv[a])

    def is_involution(self, a: int) -> bool:
        return int(self.inv[a]) == a

    def commute(self, a: int, b: int) -> bool:
        return self.mul[a, b] == self.mul[b, a]

    @property
    def is_abelian(self) -> bool:
        if not self._abelian:
            self._abelian.append(bool(np.array_equal(self.mul, self.mul.T)))
        return self._abelian[0]

    def word(self, elems) -> int:
        """Left-to-right product of a sequence of elements."""
        acc = self.identity
        for e in elems:
            acc = int(self.mul[acc, e])
        return acc

    def to_text(self) -> str:
        lines = [str(self.n)]
        lines += [" ".join(map(str, row)) for row in self.mul.tolist()]
        return "\n".join(lines) + "\n"


def make_cyclic(n: int) -> GroupTable:
    """Z_n under addition mod n."""
    if n < 1:
        raise GroupTableError("cyclic group needs n >= 1")
    _check_budget(n)
    ar = np.arange(n)
    mul = (ar[:, None] + ar[None, :]) % n
    inv = (-ar) % n
    return GroupTable(_frozen(mul), _frozen(inv), 0, f"cyclic:{n}")


def make_f2k(k: int) -> GroupTable:
    """F_2^k; element i is the bit-vector of i and multiplication is XOR."""
    if k < 1:
        raise GroupTableError("f2 group needs k >= 1")
    if k > int(math.log2(MAX_ORDER)):
        raise GroupTableError(f"2^{k} elements exceeds table budget {MAX_ORDER}")
    ar = np.arange(2**k)
    return GroupTable(_frozen(np.bitwise_xor.outer(ar, ar)), _frozen(ar), 0, f"f2:{k}")


def dihedral_index(m: int, rot: int, flip: int) -> int:
    """Index of r^rot f^flip in ``make_dihedral(m)``."""
    return flip * m + rot % m


def make_dihedral(m: int) -> GroupTable:
    """Dihedral group of order 2m.

    Element ``r^a f^b`` has index ``b*m + a``, so ``r`` is index 1 and ``f`` is
    index ``m``.  Uses ``(r^a f^b)(r^c f^d) = r^(a + (-1)^b c) f^(b+d)``.
    """
    if m < 3:
        raise GroupTableError("dihedral group needs m >= 3")
    _check_budget(2 * m)
    idx = np.arange(2 * m)
    a, b = idx % m, idx // m
    sign = 1 - 2 * b
    rot = (a[:, None] + sign[:, None] * a[None, :]) % m
    flip = (b[:, None] + b[None, :]) % 2
    mul = flip * m + rot
    inv_rot = np.where(b == 0, (-a) % m, a)
    inv = b * m + inv_rot
    return GroupTable(_frozen(mul), _frozen(inv), 0, f"dihedral:{m}")


def make_symmetric(m: int) -> GroupTable:
    """Symmetric group S_m on ranked permutations.

    Elements are the permutations of ``range(m)`` in lexicographic order, so
    index 0 is the identity.  ``mul(p, q)`` applies ``p`` first and then ``q``:
    as maps, ``(p*q)(i) = q[p[i]]``.
    """
    if not 2 <= m <= 7:
        raise GroupTableError("symmetric group supports 2 <= m <= 7")
    # itertools yields lexicographic order, so the mixed-radix codes are sorted.
    perms = np.array(list(itertools.permutations(range(m))), dtype=np.int64)
    n = len(perms)
    radix = m ** np.arange(m - 1, -1, -1)
    codes = perms @ radix
    mul = np.empty((n, n), dtype=np.int32)
    for p in range(n):
        # row p: (p*q)(i) = q[p[i]] for every q
        mul[p] = np.searchsorted(codes, perms[:, perms[p]] @ radix)
    ident = 0
    inv = np.argmax(mul == ident, axis=1)
    return GroupTable(_frozen(mul), _frozen(inv), ident, f"sym:{m}")


def make_product(g1: GroupTable, g2: GroupTable) -> GroupTable:
    """Direct product; the pair (i1, i2) has index ``i1 * n2 + i2``."""
    n1, n2 = g1.n, g2.n
    _check_budget(n1 * n2)
    i1 = np.repeat(np.arange(n1), n2)
    i2 = np.tile(np.arange(n2), n1)
    mul = g1.mul[i1[:, None], i1[None, :]].astype(np.int64) * n2 + g2.mul[i2[:, None], i2[None, :]]
    inv = g1.inv[i1].astype(np.int64) * n2 + g2.inv[i2]
    ident = g1.identity * n2 + g2.identity
    return GroupTable(_frozen(mul), _frozen(inv), ident, f"product:{g1.name},{g2.name}")


def parse_table_text(text: str) -> np.ndarray:
    rows = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([int(tok) for tok in line.split()])
        except ValueError as exc:
            raise GroupTableError(f"non-integer token in line {raw!r}") from exc
    if not rows or len(rows[0]) != 1:
        raise GroupTableError("first line must hold the element count n")
    n = rows[0][0]
    body = rows[1:]
    if n < 1 or len(body) != n or any(len(r) != n for r in body):
        raise GroupTableError(f"expected {n} rows of {n} entries")
    return np.array(body, dtype=np.int64)


def from_table(text: str, name: str = "table") -> GroupTable:
    """Parse and validate the plain-text group table format.

    Line 1 holds ``n``; the next ``n`` lines hold row ``g`` of the table, so
    column ``h`` is ``mul(g, h)``.  Lines starting with ``#`` are comments.
    """
    return GroupTable.from_array(parse_table_text(text), name=name)


def load_table(path: str | Path) -> GroupTable:
    path = Path(path)
    return from_table(path.read_text(), name=f"table:{path}")


def is_isomorphic(g1: GroupTable, g2: GroupTable, max_order: int = 8) -> bool:
    """Brute-force isomorphism test for tiny groups (test helper)."""
    if g1.n != g2.n:
        return False
    n = g1.n
    if n > max_order:
        raise ValueError(f"brute-force isomorphism limited to order {max_order}")
    rest1 = [g for g in range(n) if g != g1.identity]
    rest2 = [g for g in range(n) if g != g2.identity]
    for image in itertools.permutations(rest2):
        phi = np.empty(n, dtype=np.int64)
        phi[g1.identity] = g2.identity
        phi[rest1] = image
        if np.array_equal(phi[g1.mul], g2.mul[phi[:, None], phi[None, :]]):
            return True
    return False


class GroupActionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GroupAction:
    """A right action of ``group`` on ``{0, ..., set_size-1}``.

    ``act[x, g]`` is the image of point ``x`` under ``g``; the action satisfies
    ``act[act[x, g], h] == act[x, g*h]``.
    """

    group: GroupTable
    act: np.ndarray
    name: str = "action"

    @property
    def set_size(self) -> int:
        return int(self.act.shape[0])

    @property
    def is_regular(self) -> bool:
        return self.name == "regular"

    def validate(self, *, seed: int = 0) -> None:
        g = self.group
        act = self.act
        if act.ndim != 2 or act.shape[1] != g.n:
            raise GroupActionError(f"action table must have shape (|X|, {g.n})")
        if act.min() < 0 or act.max() >= act.shape[0]:
            raise GroupActionError("action entries must lie in [0, |X|)")
        if not np.array_equal(act[:, g.identity], np.arange(act.shape[0])):
            raise GroupActionError("identity does not act trivially")
        if g.n <= EXHAUSTIVE_ORDER:
            lhs = act[act[:, :, None], np.arange(g.n)[None, None, :]]  # act(act(x,g),h)
            rhs = act[np.arange(act.shape[0])[:, None, None], g.mul[None, :, :]]
            if not np.array_equal(lhs, rhs):
                raise GroupActionError("action is not a right action")
        else:
            rng = np.random.default_rng(seed)
            x = rng.integers(0, act.shape[0], SAMPLED_TRIPLES)
            a, b = rng.integers(0, g.n, size=(2, SAMPLED_TRIPLES))
            if not np.array_equal(act[act[x, a], b], act[x, g.mul[a, b]]):
                raise GroupActionError("action is not a right action")


def regular_action(g: GroupTable) -> GroupAction:
    """The right-regular action ``x . s = x*s`` on the group itself."""
    return GroupAction(g, g.mul, "regular")


def subgroup_closure(g: GroupTable, gens) -> np.ndarray:
    """Sorted elements of the subgroup generated by ``gens``."""
    seen = np.zeros(g.n, dtype=bool)
    seen[g.identity] = True
    frontier = [g.identity]
    gens = [int(s) for s in gens]
    while frontier:
        nxt = []
        for x in frontier:
            for s in gens:
                y = int(g.mul[x, s])
                if not seen[y]:
                    seen[y] = True
                    nxt.append(y)
        frontier = nxt
    return np.flatnonzero(seen)


def coset_action(g: GroupTable, subgroup) -> GroupAction:
    """Right-multiplication action of ``g`` on the right cosets ``H x`` of a subgroup.

    Cosets are numbered by their smallest element, in increasing order.
    """
    sub = np.unique(np.asarray(list(subgroup), dtype=np.int64))
    if g.identity not in sub:
        raise GroupActionError("subgroup must contain the identity")
    members = set(sub.tolist())
    if not all(int(g.mul[a, b]) in members for a in sub for b in sub):
        raise GroupActionError("subset is not closed under multiplication")
    label = np.full(g.n, -1, dtype=np.int64)
    count = 0
    for x in range(g.n):
        if label[x] < 0:
            label[g.mul[sub, x]] = count
            count += 1
    reps = np.array([np.flatnonzero(label == c)[0] for c in range(count)])
    act = label[g.mul[reps]]
    action = GroupAction(g, _frozen(act), f"cosets:{len(sub)}")
    action.validate()
    return action
