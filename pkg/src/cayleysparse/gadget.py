"""Linear equations over non-abelian groups and the iterated-commutator AND gadget.

An equation is a word of monomials ``a^(sign * x_var)`` with binary ``x``.  The
gadget of arity ``r`` is built from nested commutators

    L_2 = b1^y1 b2^y2 b1^-y1 b2^-y2
    L_{i+1} = L_i  b^y_{i+1}  L_i^-1  b^-y_{i+1}

which is the identity unless every ``y`` is 1.  Written over fresh ``x``
variables, each level doubles the word and adds two monomials, so the word
length follows ``K_2 = 4, K_{i+1} = 2 K_i + 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .groups import GroupTable

MAX_EXHAUSTIVE_VARS = 20
MAX_GADGET_MONOMIALS = 1 << 22


class GadgetError(ValueError):
    pass


class Monomial(NamedTuple):
    coeff: int
    var: int
    sign: int  # +1 or -1


@dataclass(frozen=True, eq=False)
class GadgetEquation:
    """``C(x) = prod_k coeff_k^(sign_k * x[var_k])``, multiplied left to right."""

    group: GroupTable
    monomials: tuple[Monomial, ...]
    var_count: int

    def __post_init__(self):
        for m in self.monomials:
            if not 0 <= m.var < self.var_count:
                raise GadgetError(f"variable {m.var} out of range for {self.var_count} variables")
            if not 0 <= m.coeff < self.group.n:
                raise GadgetError(f"coefficient {m.coeff} is not a group element")
            if m.sign not in (1, -1):
                raise GadgetError(f"sign must be +1 or -1, got {m.sign}")

    def __len__(self) -> int:
        return len(self.monomials)

    def inverse(self) -> GadgetEquation:
        """``C(x)^-1``: reversed word with every sign negated."""
        mons = tuple(Monomial(m.coeff, m.var, -m.sign) for m in reversed(self.monomials))
        return GadgetEquation(self.group, mons, self.var_count)

    def shifted(self, offset: int, var_count: int) -> GadgetEquation:
        mons = tuple(Monomial(m.coeff, m.var + offset, m.sign) for m in self.monomials)
        return GadgetEquation(self.group, mons, var_count)

    def with_sign_flipped(self, k: int) -> GadgetEquation:
        mons = list(self.monomials)
        mons[k] = mons[k]._replace(sign=-mons[k].sign)
        return GadgetEquation(self.group, tuple(mons), self.var_count)


def eval_equation(eq: GadgetEquation, x: Sequence[int]) -> int:
    """Group element ``C(x)`` for a binary assignment ``x``."""
    if len(x) != eq.var_count:
        raise GadgetError(f"assignment has {len(x)} entries, equation has {eq.var_count} variables")
    g = eq.group
    acc = g.identity
    for m in eq.monomials:
        if x[m.var]:
            elem = m.coeff if m.sign > 0 else g.inverse(m.coeff)
            acc = g.op(acc, elem)
    return acc


def eval_equation_batch(eq: GadgetEquation, xs: np.ndarray) -> np.ndarray:
    """``C(x)`` for every row of a binary ``(k, var_count)`` array."""
    xs = np.asarray(xs)
    if xs.ndim != 2 or xs.shape[1] != eq.var_count:
        raise GadgetError(f"assignments must have shape (k, {eq.var_count})")
    g = eq.group
    mul = g.mul
    acc = np.full(xs.shape[0], g.identity, dtype=np.int64)
    for m in eq.monomials:
        elem = m.coeff if m.sign > 0 else int(g.inv[m.coeff])
        on = xs[:, m.var].astype(bool)
        acc[on] = mul[acc[on], elem]
    return acc


def all_assignments(n: int) -> np.ndarray:
    codes = np.arange(1 << n, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(np.int8)


@dataclass(frozen=True)
class GadgetLevel:
    arity: int
    b: int  # element introduced at this level
    z: int  # value of the level-arity word at all-ones


@dataclass(frozen=True, eq=False)
class AndGadget:
    r: int
    equation: GadgetEquation
    pi: tuple[int, ...]  # x-variable -> y-variable
    base: tuple[int, int]  # non-commuting b1, b2
    levels: tuple[GadgetLevel, ...]  # arities 2..r

    @property
    def k(self) -> int:
        return len(self.equation)

    def lift(self, y: Sequence[int]) -> list[int]:
        """x-assignment obtained by substituting ``y`` through ``pi``."""
        return [int(y[j]) for j in self.pi]

    def to_dict(self, verified: bool | None = None) -> dict:
        return {
            "group": self.equation.group.name,
            "r": self.r,
            "K": self.k,
            "monomials": [
                {"coeff": m.coeff, "var": m.var, "sign": m.sign} for m in self.equation.monomials
            ],
            "pi": list(self.pi),
            "base": list(self.base),
            "levels": [{"arity": lv.arity, "b": lv.b, "z": lv.z} for lv in self.levels],
            "verified": verified,
        }


def gadget_size(r: int) -> int:
    """Word length of the arity-``r`` gadget."""
    k = 4
    for _ in range(2, r):
        k = 2 * k + 2
    return k


def _noncommuting_pair(g: GroupTable) -> tuple[int, int]:
    mul = g.mul
    bad = np.argwhere(mul != mul.T)
    if not len(bad):
        raise GadgetError(f"{g.name} is abelian; the AND gadget needs a non-commuting pair")
    a, b = bad[0]  # lexicographically smallest, so a < b
    return int(a), int(b)


def _noncommuting_with(g: GroupTable, z: int) -> int:
    hits = np.flatnonzero(g.mul[z] != g.mul[:, z])
    if not len(hits):
        raise GadgetError(f"element {z} is central in {g.name}; no element fails to commute with it")
    return int(hits[0])


def build_and_gadget(group: GroupTable, r: int) -> AndGadget:
    """Equation over ``K_r`` variables whose non-identity indicator is ``AND_r`` after ``pi``.

    The inverted copy at each level gets fresh variables; ``pi`` maps both
    copies back to the same ``y`` variables.
    """
    if r < 2:
        raise GadgetError("arity must be at least 2")
    if gadget_size(r) > MAX_GADGET_MONOMIALS:
        raise GadgetError(f"arity {r} exceeds the monomial budget")
    b1, b2 = _noncommuting_pair(group)
    eq = GadgetEquation(
        group,
        (Monomial(b1, 0, 1), Monomial(b2, 1, 1), Monomial(b1, 2, -1), Monomial(b2, 3, -1)),
        4,
    )
    pi = [0, 1, 0, 1]
    z = eval_equation(eq, [1] * 4)
    levels = [GadgetLevel(2, b2, z)]
    for i in range(2, r):
        b = _noncommuting_with(group, z)
        k = eq.var_count
        size = 2 * k + 2
        mons = (
            eq.shifted(0, size).monomials
            + (Monomial(b, k, 1),)
            + eq.shifted(k + 1, size).inverse().monomials
            + (Monomial(b, 2 * k + 1, -1),)
        )
        eq = GadgetEquation(group, mons, size)
        pi = pi + [i] + pi + [i]
        z = eval_equation(eq, [1] * size)
        if z == group.identity:
            raise GadgetError(f"level {i + 1} collapsed to the identity")
        levels.append(GadgetLevel(i + 1, b, z))
    return AndGadget(r, eq, tuple(pi), (b1, b2), tuple(levels))


@dataclass(frozen=True)
class GadgetCheck:
    ok: bool
    witness: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_and_gadget(gadget: AndGadget) -> GadgetCheck:
    """Exhaustively check ``C(pi(y)) != 1  <=>  y == all-ones`` over ``{0,1}^r``."""
    r = gadget.r
    if r > MAX_EXHAUSTIVE_VARS:
        raise GadgetError(f"exhaustive check limited to arity {MAX_EXHAUSTIVE_VARS}")
    ys = all_assignments(r)
    xs = ys[:, list(gadget.pi)]
    values = eval_equation_batch(gadget.equation, xs)
    nonid = values != gadget.equation.group.identity
    expected = ys.all(axis=1)
    bad = np.flatnonzero(nonid != expected)
    if len(bad):
        return GadgetCheck(False, tuple(int(v) for v in ys[bad[0]]))
    return GadgetCheck(True)


def _common_var_count(eqs) -> int:
    counts = {eq.var_count for eq, _ in eqs}
    if len(counts) > 1:
        raise GadgetError(f"equations disagree on the variable count: {sorted(counts)}")
    return counts.pop() if counts else 0


def csp_unsat_count(eqs: Sequence[tuple[GadgetEquation, float]], x: Sequence[int]) -> float:
    """``sum_i w_i * [C_i(x) != 1]``."""
    _common_var_count(eqs)
    total = 0.0
    for eq, w in eqs:
        if eval_equation(eq, x) != eq.group.identity:
            total += w
    return total


def unsat_counts_all(eqs: Sequence[tuple[GadgetEquation, float]], n: int) -> np.ndarray:
    xs = all_assignments(n)
    total = np.zeros(len(xs))
    for eq, w in eqs:
        total += w * (eval_equation_batch(eq, xs) != eq.group.identity)
    return total


def brute_force_code_sparsifier_check(
    eqs: Sequence[tuple[GadgetEquation, float]],
    candidate: Sequence[tuple[int, float]],
    eps: float,
) -> bool:
    """Whether the weighted subset ``candidate`` (index, weight) is a ``(1 +- eps)``
    code sparsifier of ``eqs`` for every binary assignment."""
    n = _common_var_count(eqs)
    if n > MAX_EXHAUSTIVE_VARS:
        raise GadgetError(f"exhaustive check limited to {MAX_EXHAUSTIVE_VARS} variables")
    full = unsat_counts_all(eqs, n)
    sub = unsat_counts_all([(eqs[i][0], w) for i, w in candidate], n)
    zero = full == 0
    if np.any(sub[zero] != 0):
        return False
    ratio = sub[~zero] / full[~zero]
    return bool(np.all((ratio >= 1 - eps) & (ratio <= 1 + eps)))
