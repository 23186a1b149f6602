from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cayleysparse.cayley import (
    CayleyGraph,
    GeneratorSet,
    GeneratorSetError,
    generator_laplacian,
    graph_laplacian,
    random_generators,
)
from cayleysparse.groups import (
    coset_action,
    make_cyclic,
    make_dihedral,
    make_f2k,
    make_symmetric,
    subgroup_closure,
)
from cayleysparse.sparsifier import (
    LaplacianContext,
    copy_count,
    greedy_threshold,
    importance,
    importance_profile,
    important_count,
    importances,
    maximizing_vector,
    sample_sparsifier,
    sampling_probability,
    score,
    scores,
    sparsify_directed,
    sparsify_weighted,
    upper_triangular_greedy,
)
from cayleysparse.spectral import relative_spectrum
from cayleysparse.verify import verify_cuts_exhaustive


def cay(group, elems, weights=None, directed=False):
    return CayleyGraph.cayley(group, GeneratorSet.build(group, elems, weights, directed=directed))


def complete(group):
    return CayleyGraph.cayley(group, GeneratorSet.all_nonidentity(group))


K4 = cay(make_f2k(2), [1, 2, 3])


def random_valid_vector(rng, h):
    v = rng.standard_normal(h.n)
    return v - v.mean()


# --- importance -----------------------------------------------------------------


def test_importance_examples():
    assert importance(cay(make_cyclic(2), [1]), 1) == pytest.approx(1)
    assert importance(cay(make_cyclic(9), [1, 8]), 1) == pytest.approx(1)
    for rep in (1, 2, 3):
        assert importance(K4, rep) == pytest.approx(0.5)
    assert importances(K4) == pytest.approx({1: 0.5, 2: 0.5, 3: 0.5})


def dense_oracle_importance(h, rep):
    """Generalized eigenproblem on range(L_H), via an explicit orthonormal basis."""
    lap = graph_laplacian(h)
    w, q = np.linalg.eigh(lap)
    keep = w > 1e-9
    b = q[:, keep] / np.sqrt(w[keep])
    return float(np.linalg.eigvalsh(b.T @ generator_laplacian(h, rep) @ b)[-1])


INSTANCES = [
    cay(make_cyclic(12), [1, 11, 2, 10, 6]),
    cay(make_dihedral(5), [1, 4, 5, 6, 2, 3]),
    complete(make_symmetric(4)),
    CayleyGraph.cayley(make_symmetric(4), random_generators(make_symmetric(4), 4, seed=2)),
    cay(make_cyclic(12), [3, 9, 4, 8]),  # disconnected
]


@pytest.mark.parametrize("h", INSTANCES, ids=lambda h: f"{h.group.name}-{len(h.gens)}")
def test_fast_importances_match_dense_oracle(h):
    fast = importances(h)
    threaded = importances(h, threads=3)
    for r in h.reps():
        oracle = dense_oracle_importance(h, r.rep)
        assert fast[r.rep] == pytest.approx(oracle, abs=1e-9)
        assert importance(h, r.rep) == pytest.approx(oracle, abs=1e-9)
        assert threaded[r.rep] == fast[r.rep]


@pytest.mark.parametrize("h", INSTANCES, ids=lambda h: f"{h.group.name}-{len(h.gens)}")
def test_importance_bounds(h):
    imps = importances(h)
    assert all(0 < v <= 1 + 1e-8 for v in imps.values())
    assert sum(imps.values()) >= 1 - 1e-9


def test_importances_on_schreier_graph():
    s4 = make_symmetric(4)
    action = coset_action(s4, subgroup_closure(s4, [1]))
    h = CayleyGraph.schreier(action, random_generators(s4, 4, seed=5))
    for rep, value in importances(h).items():
        assert value == pytest.approx(dense_oracle_importance(h, rep), abs=1e-9)


# --- score ------------------------------------------------------------------------


@pytest.mark.parametrize("h", INSTANCES[:4], ids=lambda h: f"{h.group.name}-{len(h.gens)}")
def test_score_sum_is_one(h):
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = random_valid_vector(rng, h)
        total = sum(r.weight * s for r, s in zip(h.reps(), scores(h, v).values()))
        assert total == pytest.approx(1, abs=1e-8)


@pytest.mark.parametrize("h", INSTANCES, ids=lambda h: f"{h.group.name}-{len(h.gens)}")
def test_maximizing_vector_attains_importance(h):
    ctx = LaplacianContext(h)
    imps = importances(h, context=ctx)
    for r in h.reps():
        v = maximizing_vector(ctx, r.rep)
        assert score(h, r.rep, v) == pytest.approx(imps[r.rep], abs=1e-9)


def test_k4_score_two_ways():
    v = np.array([1.0, -1.0, 0.0, 0.0])
    lap = graph_laplacian(K4)
    direct = (v @ generator_laplacian(K4, 1) @ v) / (v @ lap @ v)
    assert score(K4, 1, v) == pytest.approx(direct)
    # generator 1 pairs 0<->1: (v0 - v1)^2 = 4 over v^T L v = 8
    assert score(K4, 1, v) == pytest.approx(0.5)


def test_score_rejects_null_vector():
    with pytest.raises(ValueError, match="null space"):
        score(K4, 1, np.ones(4))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_scores_dominated_by_importance(seed):
    h = INSTANCES[1]
    rng = np.random.default_rng(seed)
    v = random_valid_vector(rng, h)
    imps = importances(h)
    for rep, s in scores(h, v).items():
        assert s <= imps[rep] + 1e-9


# --- sampling ----------------------------------------------------------------


def test_sampling_probability():
    assert sampling_probability(0.01, 0.5, 4, math.log(256)) == pytest.approx(4 * 0.01 * math.log(256) / 0.25)
    assert sampling_probability(0.5, 0.5, 4, 1.0) == 1.0


def test_sample_z2():
    res = sample_sparsifier(cay(make_cyclic(2), [1]), 0.5)
    assert res.kept == ((1, 1.0),)
    assert res.certificate == pytest.approx((1, 1))


def test_all_probabilities_one_reproduces_input():
    h = complete(make_f2k(4))
    res = sample_sparsifier(h, 0.5, seed=9)
    assert all(r.p == 1.0 for r in res.profile.per_rep)
    assert np.array_equal(graph_laplacian(res.graph(h)), graph_laplacian(h))


def test_sample_f2_8_example():
    h = complete(make_f2k(8))
    res = sample_sparsifier(h, 0.5, seed=1)
    lo, hi = res.certificate
    assert 0.5 <= lo and hi <= 1.5
    assert res.kept_generator_count < 255


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_output_symmetric_and_reweighted(seed):
    h = CayleyGraph.cayley(make_symmetric(4), random_generators(make_symmetric(4), 12, seed=0))
    res = sample_sparsifier(h, 0.3, big_c=0.2, seed=seed)
    kept = dict(res.kept)
    probs = {r.rep: r.p for r in res.profile.per_rep}
    g = h.group
    for e, w in kept.items():
        assert kept[g.inverse(e)] == w
        assert w == 1 / probs[min(e, g.inverse(e))]


def test_sample_sparsifier_is_deterministic():
    h = complete(make_f2k(7))
    a = sample_sparsifier(h, 0.9, seed=4, certify=False)
    b = sample_sparsifier(h, 0.9, seed=4, threads=2, certify=False)
    assert a.kept == b.kept
    assert a.kept != sample_sparsifier(h, 0.9, seed=5, certify=False).kept


def test_sample_rejects_bad_input():
    with pytest.raises(ValueError):
        sample_sparsifier(K4, 1.5)
    with pytest.raises(GeneratorSetError):
        sample_sparsifier(cay(make_cyclic(5), [1, 4], [2, 2]), 0.5)
    with pytest.raises(GeneratorSetError):
        sample_sparsifier(cay(make_cyclic(5), [1], directed=True), 0.5)


def test_expectation_identity():
    h = complete(make_f2k(7))
    ctx = LaplacianContext(h)
    eps = 0.9
    profile = importance_profile(h, eps, context=ctx)
    p = profile.per_rep[0].p
    assert 0.2 < p < 0.6
    trials = 500
    stack = np.array(
        [
            graph_laplacian(sample_sparsifier(h, eps, seed=s, profile=profile, context=ctx, certify=False).graph(h))
            for s in range(trials)
        ]
    )
    mean = stack.mean(axis=0)
    se = stack.std(axis=0, ddof=1) / math.sqrt(trials)
    assert np.all(np.abs(mean - ctx.laplacian) <= 5 * se + 1e-12)


def test_disconnected_input_is_allowed():
    h = INSTANCES[-1]
    res = sample_sparsifier(h, 0.5, seed=1)
    assert res.certificate == pytest.approx((1, 1))


# --- weighted path -----------------------------------------------------------------


def test_copy_count_exact():
    assert copy_count(7, 0.5) == 140
    assert copy_count(7, 0.01) == 7000
    assert copy_count(1, 0.3) == 33
    assert copy_count(0.7, 0.07) == 100


def test_weighted_unit_weights():
    h = complete(make_f2k(5))
    res = sparsify_weighted(h, 0.5, seed=1)
    assert all(r.copies == 20 for r in res.profile.per_rep)
    assert res.profile.eps == pytest.approx(0.05)
    lo, hi = res.certificate
    assert 0.5 <= lo and hi <= 1.5


def test_weighted_z2_reproduces_weight():
    res = sparsify_weighted(cay(make_cyclic(2), [1], [7.0]), 0.5)
    assert res.profile.per_rep[0].copies == 140
    assert res.profile.per_rep[0].p == 1.0
    assert res.kept == ((1, 7.0),)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(1, 50), min_size=3, max_size=3), st.floats(0.05, 0.95))
def test_copies_bracket_weights(weights, eps):
    h = cay(make_cyclic(7), [1, 6, 2, 5, 3, 4], [weights[0], weights[0], weights[1], weights[1], weights[2], weights[2]])
    scaled = GeneratorSet.build(h.group, h.gens.elements, [eps / 10 * copy_count(w, eps) for w in h.gens.weights])
    lo, hi = relative_spectrum(graph_laplacian(h), graph_laplacian(h.with_gens(scaled)), 1)
    assert 1 - eps / 10 - 1e-9 <= lo and hi <= 1 + 1e-9


def test_weighted_rejects_light_edges():
    with pytest.raises(GeneratorSetError):
        sparsify_weighted(cay(make_cyclic(5), [1, 4], [0.5, 0.5]), 0.5)


# --- directed path -------------------------------------------------------------------


def test_directed_z3_single_generator():
    h = cay(make_cyclic(3), [1], directed=True)
    res = sparsify_directed(h, 0.5, seed=1)
    assert res.kept == ((1, 1.0),)
    assert verify_cuts_exhaustive(h, res.graph(h), 0.0, directed=True).worst_low == 1.0


def test_directed_z16():
    h = cay(make_cyclic(16), [1, 3, 5], directed=True)
    res = sparsify_directed(h, 0.5, seed=1)
    assert verify_cuts_exhaustive(h, res.graph(h), 0.5, directed=True).passed


def test_directed_routes_involutions():
    h = cay(make_cyclic(4), [1, 2], directed=True)
    res = sparsify_directed(h, 0.5, seed=1)
    assert res.involution_profile is not None
    assert [r.rep for r in res.involution_profile.per_rep] == [2]
    assert [r.rep for r in res.profile.per_rep] == [1]
    assert dict(res.kept) == {1: 1.0, 2: 1.0}


def test_directed_splits_weight_between_present_members():
    h = cay(make_cyclic(5), [1, 4], [1.0, 3.0], directed=True)
    res = sparsify_directed(h, 0.5, seed=1)
    # the undirectified pair (weight 4) is kept with p = 1 and split 1:3 again
    assert dict(res.kept) == pytest.approx({1: 1.0, 4: 3.0})
    assert verify_cuts_exhaustive(h, res.graph(h), 1e-9, directed=True).passed


def test_directed_requires_directed_input():
    with pytest.raises(GeneratorSetError):
        sparsify_directed(K4, 0.5)


# --- important_count and greedy --------------------------------------------------------


def test_important_count_examples():
    z2 = cay(make_cyclic(2), [1])
    assert important_count(z2, 0.5) == 1
    assert important_count(z2, 1.5) == 0
    h = complete(make_f2k(5))
    counts = [important_count(h, a) for a in (0.01, 0.05, 0.1, 0.5)]
    assert counts == sorted(counts, reverse=True)


def check_greedy(h, alpha, big_c=4.0):
    ctx = LaplacianContext(h)
    imps = importances(h, context=ctx)
    steps = upper_triangular_greedy(h, alpha, big_c, context=ctx, imps=imps)
    thr = greedy_threshold(alpha, big_c, h.n)
    for i, si in enumerate(steps):
        assert score(h, si.rep, si.v) >= alpha - 1e-8  # (a)
        for sj in steps[i + 1 :]:
            assert score(h, sj.rep, si.v) < thr + 1e-8  # (b)
    big = important_count(h, alpha, imps=imps)
    assert len(steps) >= alpha / (big_c * math.log(h.n) ** 2) * big - 1e-9
    assert len(steps) <= math.ceil(math.log2(h.n))
    return steps


def test_greedy_k4():
    steps = check_greedy(K4, 0.4)
    assert 1 <= len(steps) <= 2


def test_greedy_single_important_rep():
    h = cay(make_cyclic(8), [1, 7])
    assert [s.rep for s in check_greedy(h, 0.5)] == [1]


def test_greedy_none_important():
    assert upper_triangular_greedy(complete(make_f2k(4)), 0.9) == []


@pytest.mark.parametrize("h", INSTANCES[:4], ids=lambda h: f"{h.group.name}-{len(h.gens)}")
@pytest.mark.parametrize("alpha", [0.05, 0.2, 0.5])
def test_greedy_properties(h, alpha):
    check_greedy(h, alpha)
