"""Independent oracles for sparsifier quality.

A report passes when every checked ratio ``sparsifier / original`` lies in
``[1 - eps - slack, 1 + eps + slack]`` and every cut that is empty in the
original is also empty in the sparsifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cayley import (
    CayleyGraph,
    arc_weight_matrix,
    connected_components,
    graph_laplacian,
    symmetric_representatives,
)
from .config import get_tolerances
from .groups import subgroup_closure
from .spectral import RangeContainmentError, relative_eigensystem

MAX_EXHAUSTIVE_VERTICES = 20
_CHUNK = 1 << 15


@dataclass(frozen=True)
class VerifyReport:
    kind: str  # "spectral" | "cutExhaustive" | "cutSampled"
    passed: bool
    worst_low: float
    worst_high: float
    eps: float
    trials: int
    witness: list | None = None

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        def num(x):
            return x if math.isfinite(x) else str(x)

        return {
            "kind": self.kind,
            "pass": self.passed,
            "worstLow": num(self.worst_low),
            "worstHigh": num(self.worst_high),
            "eps": self.eps,
            "trials": self.trials,
            "witness": self.witness,
        }


def _in_band(low: float, high: float, eps: float) -> bool:
    slack = get_tolerances().verify_slack
    return low >= 1 - eps - slack and high <= 1 + eps + slack


def _same_vertices(h: CayleyGraph, h_tilde: CayleyGraph) -> None:
    if h.n != h_tilde.n:
        raise ValueError("graphs have different vertex counts")


def verify_spectral(h: CayleyGraph, h_tilde: CayleyGraph, eps: float) -> VerifyReport:
    """Loewner-order check ``(1-eps) L_H <= L_H~ <= (1+eps) L_H``.

    The witness is the vector attaining the worse of the two extreme ratios,
    or a null-space vector of ``L_H`` on which ``L_H~`` is nonzero.
    """
    _same_vertices(h, h_tilde)
    lap = graph_laplacian(h)
    try:
        rs = relative_eigensystem(lap, graph_laplacian(h_tilde), connected_components(h))
    except RangeContainmentError as exc:
        return VerifyReport("spectral", False, 0.0, math.inf, eps, 1, exc.witness.tolist())
    worse = rs.vmin if (1 - rs.lmin) >= (rs.lmax - 1) else rs.vmax
    return VerifyReport(
        "spectral", _in_band(rs.lmin, rs.lmax, eps), rs.lmin, rs.lmax, eps, 1, worse.tolist()
    )


def cut_values_batch(w: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Cut values ``1_T^T W 1_{not T}`` for rows of a boolean ``masks`` array."""
    b = masks.astype(float)
    return np.einsum("ij,ij->i", b @ w, 1.0 - b)


def _bitmask_rows(start: int, stop: int, n: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(bool)


class _Tracker:
    """Running worst ratios over batches of cuts."""

    def __init__(self, eps: float):
        self.eps = eps
        self.low = math.inf
        self.high = -math.inf
        self.low_wit = None
        self.high_wit = None
        self.zero_violation = None
        self.count = 0

    def update(self, masks: np.ndarray, orig: np.ndarray, sparse: np.ndarray) -> None:
        self.count += len(masks)
        scale = max(float(orig.max(initial=0.0)), 1.0)
        zero = orig <= 1e-12 * scale
        bad_zero = zero & (sparse > get_tolerances().verify_slack * scale)
        if self.zero_violation is None and bad_zero.any():
            self.zero_violation = masks[np.argmax(bad_zero)]
        nz = ~zero
        if not nz.any():
            return
        ratios = sparse[nz] / orig[nz]
        sub = masks[nz]
        i, j = int(np.argmin(ratios)), int(np.argmax(ratios))
        if ratios[i] < self.low:
            self.low, self.low_wit = float(ratios[i]), sub[i]
        if ratios[j] > self.high:
            self.high, self.high_wit = float(ratios[j]), sub[j]

    def report(self, kind: str) -> VerifyReport:
        low = 1.0 if self.low == math.inf else self.low
        high = 1.0 if self.high == -math.inf else self.high
        if self.zero_violation is not None:
            wit = np.flatnonzero(self.zero_violation).tolist()
            return VerifyReport(kind, False, low, math.inf, self.eps, self.count, wit)
        passed = _in_band(low, high, self.eps)
        if self.low_wit is None:
            wit = None
        else:
            worse = self.low_wit if (1 - low) >= (high - 1) else self.high_wit
            wit = np.flatnonzero(worse).tolist()
        return VerifyReport(kind, passed, low, high, self.eps, self.count, wit)


def _check_direction(h: CayleyGraph, h_tilde: CayleyGraph, directed: bool | None) -> None:
    if directed is None:
        return
    if h.directed != directed or h_tilde.directed != directed:
        raise ValueError(f"expected {'directed' if directed else 'undirected'} graphs")


def verify_cuts_exhaustive(
    h: CayleyGraph, h_tilde: CayleyGraph, eps: float, directed: bool | None = None
) -> VerifyReport:
    """Compare every one of the ``2^n`` cuts (``n <= 20``).

    Directed graphs count arcs leaving ``T``; undirected graphs use the
    Laplacian quadratic form, which the same arc count reproduces.
    """
    _same_vertices(h, h_tilde)
    _check_direction(h, h_tilde, directed)
    n = h.n
    if n > MAX_EXHAUSTIVE_VERTICES:
        raise ValueError(f"exhaustive cut check limited to {MAX_EXHAUSTIVE_VERTICES} vertices, got {n}")
    w, wt = arc_weight_matrix(h), arc_weight_matrix(h_tilde)
    tracker = _Tracker(eps)
    total = 1 << n
    for start in range(0, total, _CHUNK):
        masks = _bitmask_rows(start, min(start + _CHUNK, total), n)
        tracker.update(masks, cut_values_batch(w, masks), cut_values_batch(wt, masks))
    return tracker.report("cutExhaustive")


def structured_cuts(h: CayleyGraph, limit: int = 64) -> list[np.ndarray]:
    """Singletons plus orbits of vertex 0 under ``<s>`` and ``<S \\ {s, s^-1}>``.

    Dropping a whole pair tends to expose the sparsest cuts (for a Cayley graph
    these orbits are subgroups).
    """
    g = h.group
    act = h.vertices.act
    out = []
    for x in range(min(h.n, limit)):
        m = np.zeros(h.n, dtype=bool)
        m[x] = True
        out.append(m)
    elems = [e for e, _ in h.gens.entries]
    if h.directed:
        pairs = sorted({min(e, g.inverse(e)) for e in elems})
    else:
        pairs = [r.rep for r in symmetric_representatives(h.gens)]
    for rep in pairs[:limit]:
        pair = {rep, g.inverse(rep)}
        for sub_gens in ([rep], [e for e in elems if e not in pair]):
            sub = subgroup_closure(g, sub_gens)
            m = np.zeros(h.n, dtype=bool)
            m[np.unique(act[0, sub])] = True
            if 0 < m.sum() < h.n:
                out.append(m)
    return out


def verify_cuts_sampled(
    h: CayleyGraph,
    h_tilde: CayleyGraph,
    eps: float,
    trials: int,
    seed: int = 0,
) -> VerifyReport:
    """Check ``trials`` uniformly random cuts plus the structured ones."""
    if trials < 1:
        raise ValueError("trials must be positive")
    _same_vertices(h, h_tilde)
    w, wt = arc_weight_matrix(h), arc_weight_matrix(h_tilde)
    rng = np.random.default_rng(seed)
    tracker = _Tracker(eps)
    structured = structured_cuts(h)
    if structured:
        masks = np.array(structured)
        tracker.update(masks, cut_values_batch(w, masks), cut_values_batch(wt, masks))
    done = 0
    while done < trials:
        k = min(_CHUNK, trials - done)
        masks = rng.random((k, h.n)) < 0.5
        tracker.update(masks, cut_values_batch(w, masks), cut_values_batch(wt, masks))
        done += k
    return tracker.report("cutSampled")
