"""Importance sampling of generators.

The importance of a representative ``s`` is the largest fraction of Laplacian
energy its pair can carry,

    imp(s) = max_v  v^T L_s v / v^T L_H v  =  || L_H^{+/2} L_s L_H^{+/2} ||_op,

and each representative is kept with probability
``p_s = min(C * imp(s) * ln(n) / eps^2, 1)`` at weight ``1/p_s`` (together with
its inverse).  ``n`` is the number of vertices, so Schreier graphs use the
size of the acted-on set.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .cayley import (
    CayleyGraph,
    GeneratorSet,
    GeneratorSetError,
    adjacency_perm,
    connected_components,
    generator_laplacian,
    generator_quadratic_form,
    graph_laplacian,
    undirectify,
)
from .config import get_tolerances
from .spectral import (
    RangeContainmentError,
    SpectralDecomposition,
    opnorm_psd,
    pinv_sqrt,
    psd_decompose,
    relative_spectrum,
    top_eigenvalue,
)

DEFAULT_C = 4.0
DEFAULT_SEED = 1


def _check_eps(eps: float) -> None:
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")


def _require_undirected(h: CayleyGraph) -> None:
    if h.directed:
        raise GeneratorSetError("this operation needs an undirected generator set")


class LaplacianContext:
    """Cached spectral data of ``L_H`` shared by all representatives.

    Read-only after construction apart from lazily filled caches, which are
    written once with identical values, so sharing across threads is safe.
    """

    def __init__(self, h: CayleyGraph, laplacian: np.ndarray | None = None):
        _require_undirected(h)
        self.h = h
        self.laplacian = graph_laplacian(h) if laplacian is None else laplacian
        self.components = connected_components(h)
        self.reps = h.reps()

    @cached_property
    def decomposition(self) -> SpectralDecomposition:
        return psd_decompose(self.laplacian, self.components)

    @cached_property
    def factor(self) -> np.ndarray:
        """``B`` with ``B^T B = L_H^+`` (rank x n)."""
        return self.decomposition.pinv_sqrt_factor()

    @cached_property
    def pinv(self) -> np.ndarray:
        b = self.factor
        return b.T @ b

    @cached_property
    def opnorm(self) -> float:
        ev = self.decomposition.eigenvalues
        return float(ev[0]) if len(ev) else 0.0

    def energy(self, v: np.ndarray) -> np.ndarray:
        return np.einsum("i...,i...->...", v, self.laplacian @ v)


def _gram_importance(ctx: LaplacianContext, rep: int) -> float:
    """``imp(rep)`` as the top eigenvalue of ``(I - A_s) L^+ (I - A_s)^T``.

    ``L_s = (I - A_s)^T (I - A_s)`` for a pair and half of that for an
    involution.  For an involution the rows of ``I - A_s`` come in +/- pairs,
    so restricting to one row per 2-cycle and dropping the factor 1/2 gives the
    same value from a matrix of half the size.
    """
    h = ctx.h
    perm = adjacency_perm(h, rep)
    pinv = ctx.pinv
    moved = np.flatnonzero(perm != np.arange(h.n))
    if h.group.is_involution(rep):
        rows = moved[moved < perm[moved]]
    else:
        rows = moved
    cols = perm[rows]
    diff = pinv[rows] - pinv[cols]
    gram = diff[:, rows] - diff[:, cols]
    return max(top_eigenvalue((gram + gram.T) / 2), 0.0)


def importance(h: CayleyGraph, rep: int) -> float:
    """``|| L_H^{+/2} L_rep L_H^{+/2} ||_op`` with the unit-weight ``L_rep``.

    Straight from the definition with dense matrices; :func:`importances`
    computes all representatives at once and is much faster.
    """
    _require_undirected(h)
    root = pinv_sqrt(graph_laplacian(h), connected_components(h))
    return opnorm_psd(root @ generator_laplacian(h, rep) @ root)


def importances(
    h: CayleyGraph, *, context: LaplacianContext | None = None, threads: int = 1
) -> dict[int, float]:
    """Importance of every symmetric representative, keyed by representative."""
    ctx = context or LaplacianContext(h)
    reps = [r.rep for r in ctx.reps]
    if not reps:
        return {}
    ctx.pinv  # fill the cache before fanning out
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(lambda r: _gram_importance(ctx, r), reps))
    else:
        values = [_gram_importance(ctx, r) for r in reps]
    return dict(zip(reps, values))


def scores(h: CayleyGraph, v: np.ndarray, *, context: LaplacianContext | None = None) -> dict[int, float]:
    """``v^T L_s v / v^T L_H v`` for every representative (unit-weight ``L_s``).

    For a unit-weight graph the scores sum to one; in general
    ``sum_s w_s * score(s, v) == 1``.
    """
    ctx = context or LaplacianContext(h)
    v = np.asarray(v, dtype=float)
    den = float(ctx.energy(v))
    floor = get_tolerances().energy_floor * max(ctx.opnorm, 1.0) * float(v @ v)
    if not den > floor:
        raise ValueError("v lies in the null space of L_H; score is undefined")
    return {r.rep: float(generator_quadratic_form(h, r.rep, v)) / den for r in ctx.reps}


def score(h: CayleyGraph, rep: int, v: np.ndarray, *, context: LaplacianContext | None = None) -> float:
    ctx = context or LaplacianContext(h)
    v = np.asarray(v, dtype=float)
    den = float(ctx.energy(v))
    floor = get_tolerances().energy_floor * max(ctx.opnorm, 1.0) * float(v @ v)
    if not den > floor:
        raise ValueError("v lies in the null space of L_H; score is undefined")
    return float(generator_quadratic_form(h, rep, v)) / den


def maximizing_vector(ctx: LaplacianContext, rep: int) -> np.ndarray:
    """A vector ``v`` with ``score(rep, v) == imp(rep)``.

    ``v = L_H^{+/2} y`` for the top eigenvector ``y`` of the normalized
    generator matrix, computed in the coordinates of ``range(L_H)``.
    """
    h = ctx.h
    bt = ctx.factor.T  # n x r
    perm = adjacency_perm(h, rep)
    if h.group.is_involution(rep):
        ls_bt = bt - bt[perm]
    else:
        inv_perm = adjacency_perm(h, h.group.inverse(rep))
        ls_bt = 2 * bt - bt[perm] - bt[inv_perm]
    m = ctx.factor @ ls_bt
    _, y = np.linalg.eigh((m + m.T) / 2)
    v = bt @ y[:, -1]
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class RepImportance:
    rep: int
    imp: float
    p: float
    is_involution: bool
    weight: float = 1.0
    copies: int | None = None


@dataclass(frozen=True)
class ImportanceProfile:
    """Importances and sampling probabilities of one run.

    ``p == min(big_c * imp * log_term / eps**2, 1)`` for every entry, where
    ``eps`` is the accuracy the sampler targeted (``eps/10`` in the weighted
    path).
    """

    per_rep: tuple[RepImportance, ...]
    eps: float
    big_c: float
    log_term: float

    def probability(self, imp: float) -> float:
        return sampling_probability(imp, self.eps, self.big_c, self.log_term)

    def by_rep(self) -> dict[int, RepImportance]:
        return {r.rep: r for r in self.per_rep}

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "C": self.big_c,
            "logTerm": self.log_term,
            "reps": [
                {"rep": r.rep, "imp": r.imp, "p": r.p, "involution": r.is_involution}
                | ({"copies": r.copies} if r.copies is not None else {})
                for r in self.per_rep
            ],
        }


def sampling_probability(imp: float, eps: float, big_c: float, log_term: float) -> float:
    return min(big_c * imp * log_term / eps**2, 1.0)


def importance_profile(
    h: CayleyGraph,
    eps: float,
    big_c: float = DEFAULT_C,
    *,
    context: LaplacianContext | None = None,
    threads: int = 1,
) -> ImportanceProfile:
    ctx = context or LaplacianContext(h)
    imps = importances(h, context=ctx, threads=threads)
    log_term = math.log(h.n) if h.n else 0.0
    per_rep = tuple(
        RepImportance(
            r.rep,
            imps[r.rep],
            sampling_probability(imps[r.rep], eps, big_c, log_term),
            r.is_involution,
            r.weight,
        )
        for r in ctx.reps
    )
    return ImportanceProfile(per_rep, eps, big_c, log_term)


@dataclass(frozen=True)
class SparsifierResult:
    """Kept generators with their new weights.

    Undirected results list both members of every kept pair at equal weight.
    ``certificate`` is ``(lambda_min, lambda_max)`` of the sparsifier Laplacian
    relative to the input Laplacian (for directed results, the extremes over
    the undirected sub-problems that were sparsified).
    """

    kept: tuple[tuple[int, float], ...]
    seed: int
    profile: ImportanceProfile
    certificate: tuple[float, float] | None
    directed: bool = False
    mode: str = "sparsify"
    kept_reps: tuple[int, ...] = ()
    involution_profile: ImportanceProfile | None = field(default=None, repr=False)

    @property
    def kept_generator_count(self) -> int:
        return len(self.kept)

    @property
    def kept_pair_count(self) -> int:
        return len(self.kept_reps)

    def generator_set(self, group) -> GeneratorSet:
        elems = [e for e, _ in self.kept]
        weights = [w for _, w in self.kept]
        return GeneratorSet.build(group, elems, weights, directed=self.directed)

    def graph(self, h: CayleyGraph) -> CayleyGraph:
        return h.with_gens(self.generator_set(h.group))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "directed": self.directed,
            "kept": [[e, w] for e, w in self.kept],
            "keptGenerators": self.kept_generator_count,
            "keptPairs": self.kept_pair_count,
            "certificate": list(self.certificate) if self.certificate else None,
        }


def _rep_rng(seed: int, rep: int) -> np.random.Generator:
    # one independent stream per (seed, representative): order-independent
    return np.random.default_rng([seed, rep])


def _with_inverses(h: CayleyGraph, chosen: dict[int, float]) -> tuple[tuple[int, float], ...]:
    g = h.group
    out = {}
    for rep, w in chosen.items():
        out[rep] = w
        out[g.inverse(rep)] = w
    return tuple(sorted(out.items()))


def _certify(ctx: LaplacianContext, h_tilde: CayleyGraph) -> tuple[float, float]:
    try:
        return relative_spectrum(None, graph_laplacian(h_tilde), ctx.components, ref=ctx.decomposition)
    except RangeContainmentError:
        return (0.0, math.inf)


def sample_sparsifier(
    h: CayleyGraph,
    eps: float,
    big_c: float = DEFAULT_C,
    seed: int = DEFAULT_SEED,
    *,
    profile: ImportanceProfile | None = None,
    context: LaplacianContext | None = None,
    certify: bool = True,
    threads: int = 1,
) -> SparsifierResult:
    """Keep each representative with probability ``p_s`` at weight ``1/p_s``.

    ``h`` must be undirected with unit weights.  ``profile`` and ``context``
    may be passed to reuse the importance computation across seeds.
    """
    _check_eps(eps)
    _require_undirected(h)
    if not h.gens.is_unit_weight:
        raise GeneratorSetError("sample_sparsifier needs unit weights; use sparsify_weighted")
    ctx = context or LaplacianContext(h)
    if profile is None:
        profile = importance_profile(h, eps, big_c, context=ctx, threads=threads)
    chosen = {}
    for r in profile.per_rep:
        if _rep_rng(seed, r.rep).random() < r.p:
            chosen[r.rep] = 1.0 / r.p
    kept = _with_inverses(h, chosen)
    result = SparsifierResult(kept, seed, profile, None, False, "sparsify", tuple(sorted(chosen)))
    if certify:
        cert = _certify(ctx, result.graph(h))
        result = SparsifierResult(kept, seed, profile, cert, False, "sparsify", result.kept_reps)
    return result


def _exact(x: float) -> Fraction:
    # decimal reading of the float, so 10 * 7 / 0.01 is exactly 7000
    return Fraction(repr(float(x)))


def copy_count(weight: float, eps: float) -> int:
    """``floor(10 w / eps)`` unit copies standing in for a weight ``w`` generator."""
    return math.floor(10 * _exact(weight) / _exact(eps))


def sparsify_weighted(
    h: CayleyGraph,
    eps: float,
    big_c: float = DEFAULT_C,
    seed: int = DEFAULT_SEED,
    *,
    certify: bool = True,
    threads: int = 1,
) -> SparsifierResult:
    """Sparsify a graph with weights >= 1 through unit copies.

    A representative of weight ``w`` stands for ``m = floor(10 w / eps)`` unit
    copies.  Probabilities are computed against the Laplacian of the copies for
    accuracy ``eps/10``; the number of surviving copies is drawn as
    ``Binomial(m, p)`` instead of materializing them, and the final weight is
    ``draws / p * eps / 10``.
    """
    _check_eps(eps)
    _require_undirected(h)
    g = h.group
    if any(w < 1 for _, w in h.gens.entries):
        raise GeneratorSetError("sparsify_weighted needs every weight to be at least 1")
    copies = {e: copy_count(w, eps) for e, w in h.gens.entries}
    h_copies = h.with_gens(
        GeneratorSet.build(g, list(copies), [float(m) for m in copies.values()])
    )
    ctx_copies = LaplacianContext(h_copies)
    inner_eps = eps / 10
    imps = importances(h_copies, context=ctx_copies, threads=threads)
    log_term = math.log(h.n) if h.n else 0.0
    per_rep = tuple(
        RepImportance(
            r.rep,
            imps[r.rep],
            sampling_probability(imps[r.rep], inner_eps, big_c, log_term),
            r.is_involution,
            h.gens.weight_of(r.rep),
            copies[r.rep],
        )
        for r in ctx_copies.reps
    )
    profile = ImportanceProfile(per_rep, inner_eps, big_c, log_term)
    scale = _exact(eps) / 10
    chosen = {}
    for r in per_rep:
        draws = int(_rep_rng(seed, r.rep).binomial(r.copies, r.p))
        if draws:
            if r.p == 1.0:
                chosen[r.rep] = float(draws * scale)
            else:
                chosen[r.rep] = draws / r.p * float(scale)
    result = SparsifierResult(
        _with_inverses(h, chosen), seed, profile, None, False, "sparsify-weighted", tuple(sorted(chosen))
    )
    if certify:
        cert = _certify(LaplacianContext(h), result.graph(h))
        result = SparsifierResult(
            result.kept, seed, profile, cert, False, "sparsify-weighted", result.kept_reps
        )
    return result


def _sparsify_undirected_part(h, eps, big_c, seed, threads):
    if h.gens.is_unit_weight:
        return sample_sparsifier(h, eps, big_c, seed, threads=threads)
    return sparsify_weighted(h, eps, big_c, seed, threads=threads)


def sparsify_directed(
    h: CayleyGraph,
    eps: float,
    big_c: float = DEFAULT_C,
    seed: int = DEFAULT_SEED,
    *,
    threads: int = 1,
) -> SparsifierResult:
    """Cut sparsifier for a directed generator set.

    Involutions are sparsified on their own as an undirected graph.  The other
    generators are undirectified and sparsified; from every kept pair only the
    members present in the input survive, splitting the pair weight in
    proportion to their input weights.  Directed cuts of a non-involution are
    exactly half of the undirected ones, so cut accuracy carries over.
    """
    _check_eps(eps)
    g = h.group
    if not h.directed:
        raise GeneratorSetError("sparsify_directed needs a directed generator set")
    inv_entries = [(e, w) for e, w in h.gens.entries if g.is_involution(e)]
    pair_entries = [(e, w) for e, w in h.gens.entries if not g.is_involution(e)]
    original = dict(h.gens.entries)
    kept: dict[int, float] = {}
    kept_reps: list[int] = []
    certs = []
    inv_profile = None
    pair_profile = None

    if inv_entries:
        h_inv = h.with_gens(GeneratorSet.build(g, *zip(*inv_entries), directed=False))
        res = _sparsify_undirected_part(h_inv, eps, big_c, seed, threads)
        inv_profile = res.profile
        kept.update(res.kept)
        kept_reps += res.kept_reps
        certs.append(res.certificate)

    if pair_entries:
        h_dir = h.with_gens(GeneratorSet.build(g, *zip(*pair_entries), directed=True))
        res = _sparsify_undirected_part(undirectify(h_dir), eps, big_c, seed, threads)
        pair_profile = res.profile
        kept_reps += res.kept_reps
        certs.append(res.certificate)
        sampled = dict(res.kept)
        for rep in res.kept_reps:
            members = [e for e in (rep, g.inverse(rep)) if original.get(e, 0.0) > 0]
            total = sum(original[e] for e in members)
            for e in members:
                kept[e] = sampled[rep] * original[e] / total

    profile = pair_profile or inv_profile or ImportanceProfile((), eps, big_c, math.log(h.n) if h.n else 0.0)
    cert = None
    if certs and all(c is not None for c in certs):
        cert = (min(c[0] for c in certs), max(c[1] for c in certs))
    return SparsifierResult(
        tuple(sorted(kept.items())),
        seed,
        profile,
        cert,
        True,
        "sparsify-directed",
        tuple(sorted(kept_reps)),
        inv_profile if pair_profile is not None else None,
    )


def important_count(
    h: CayleyGraph, alpha: float, *, imps: dict[int, float] | None = None
) -> int:
    """Number of representatives with importance at least ``alpha``."""
    if imps is None:
        imps = importances(h)
    # absorb eigensolver noise at exact ties such as imp == alpha == 1/2
    return sum(1 for v in imps.values() if v >= alpha - 1e-12)


@dataclass(frozen=True)
class GreedyStep:
    rep: int
    v: np.ndarray


def greedy_threshold(alpha: float, big_c: float, n: int) -> float:
    return alpha / (big_c * math.log(n) ** 2)


def upper_triangular_greedy(
    h: CayleyGraph,
    alpha: float,
    big_c: float = DEFAULT_C,
    *,
    context: LaplacianContext | None = None,
    imps: dict[int, float] | None = None,
) -> list[GreedyStep]:
    """Greedy extraction of generators in upper triangular form.

    Starting with every representative of importance ``>= alpha`` permitted,
    repeatedly take the smallest permitted one, pair it with a vector on which
    its score equals its importance, and forbid every candidate whose score on
    that vector reaches ``alpha / (C ln^2 n)``.
    """
    ctx = context or LaplacianContext(h)
    if imps is None:
        imps = importances(h, context=ctx)
    candidates = sorted(r for r, v in imps.items() if v >= alpha - 1e-12)
    if not candidates:
        return []
    thr = greedy_threshold(alpha, big_c, h.n)
    permitted = set(candidates)
    steps = []
    while permitted:
        s = min(permitted)
        v = maximizing_vector(ctx, s)
        steps.append(GreedyStep(s, v))
        sc = scores(h, v, context=ctx)
        permitted -= {r for r in permitted if sc[r] >= thr}
        permitted.discard(s)
    return steps
