from __future__ import annotations

import numpy as np
import pytest

from cayleysparse.cayley import CayleyGraph, GeneratorSet, graph_laplacian
from cayleysparse.groups import make_cyclic, make_dihedral, make_f2k
from cayleysparse.sparsifier import sample_sparsifier, sparsify_directed
from cayleysparse.verify import (
    MAX_EXHAUSTIVE_VERTICES,
    cut_values_batch,
    structured_cuts,
    verify_cuts_exhaustive,
    verify_cuts_sampled,
    verify_spectral,
)


def cay(group, elems, weights=None, directed=False):
    return CayleyGraph.cayley(group, GeneratorSet.build(group, elems, weights, directed=directed))


def complete(group):
    return CayleyGraph.cayley(group, GeneratorSet.all_nonidentity(group))


def scaled(h, factor):
    return h.with_gens(GeneratorSet.build(h.group, h.gens.elements, h.gens.weights * factor, directed=h.directed))


def test_spectral_identity():
    h = complete(make_f2k(4))
    rep = verify_spectral(h, h, 0.1)
    assert rep.passed and rep.kind == "spectral"
    assert (rep.worst_low, rep.worst_high) == pytest.approx((1, 1))


def test_spectral_scaled_fails():
    h = complete(make_f2k(4))
    eps = 0.5
    rep = verify_spectral(h, scaled(h, 1 + 2 * eps), eps)
    assert not rep.passed
    assert rep.worst_high == pytest.approx(1 + 2 * eps)
    v = np.array(rep.witness)
    lap = graph_laplacian(h)
    assert (v @ (2 * lap) @ v) / (v @ lap @ v) == pytest.approx(2)


def test_spectral_algorithm_output_f2_6():
    h = complete(make_f2k(6))
    res = sample_sparsifier(h, 0.5, seed=7)
    assert verify_spectral(h, res.graph(h), 0.5).passed


def test_spectral_range_violation_reports_witness():
    z12 = make_cyclic(12)
    h = cay(z12, [3, 9])  # three components
    h_tilde = cay(z12, [1, 11])
    rep = verify_spectral(h, h_tilde, 0.5)
    assert not rep.passed and rep.worst_high == float("inf")
    assert rep.to_dict()["worstHigh"] == "inf"
    v = np.array(rep.witness)
    assert v @ graph_laplacian(h) @ v == pytest.approx(0, abs=1e-10)


def test_exhaustive_identity():
    h = cay(make_cyclic(10), [1, 9, 3, 7])
    rep = verify_cuts_exhaustive(h, h, 0.0)
    assert rep.passed and rep.trials == 1 << 10
    assert (rep.worst_low, rep.worst_high) == (1.0, 1.0)


def test_exhaustive_directed_z16():
    h = cay(make_cyclic(16), [1, 3, 5], directed=True)
    res = sparsify_directed(h, 0.5, seed=1)
    rep = verify_cuts_exhaustive(h, res.graph(h), 0.5, directed=True)
    assert rep.passed and rep.trials == 1 << 16


def test_exhaustive_drop_critical_generator():
    f8 = make_f2k(3)
    h = cay(f8, [1, 2, 4])
    rep = verify_cuts_exhaustive(h, cay(f8, [2, 4]), 0.5)
    assert not rep.passed and rep.worst_low == 0
    assert rep.witness == [0, 2, 4, 6]  # span{e2, e3}


def test_exhaustive_zero_cut_violation():
    z6 = make_cyclic(6)
    h = cay(z6, [2, 4])  # cosets of <2> have zero cut
    rep = verify_cuts_exhaustive(h, cay(z6, [1, 5]), 0.5)
    assert not rep.passed and rep.worst_high == float("inf")
    mask = np.zeros(6, dtype=bool)
    mask[rep.witness] = True
    assert cut_values_batch(np.eye(6)[[(x + 2) % 6 for x in range(6)]], mask[None])[0] == 0


def test_exhaustive_checks_direction_and_size():
    h = cay(make_cyclic(5), [1, 4])
    with pytest.raises(ValueError, match="directed"):
        verify_cuts_exhaustive(h, h, 0.5, directed=True)
    big = cay(make_cyclic(MAX_EXHAUSTIVE_VERTICES + 1), [1, MAX_EXHAUSTIVE_VERTICES])
    with pytest.raises(ValueError, match="limited"):
        verify_cuts_exhaustive(big, big, 0.5)


def test_exhaustive_matches_quadratic_form():
    h = cay(make_dihedral(5), [1, 4, 5, 7])
    h_tilde = scaled(cay(make_dihedral(5), [1, 4, 5]), 1.3)
    lap, lap_t = graph_laplacian(h), graph_laplacian(h_tilde)
    codes = np.arange(1, (1 << h.n) - 1)
    masks = ((codes[:, None] >> np.arange(h.n)) & 1).astype(float)
    q = np.einsum("ij,jk,ik->i", masks, lap, masks)
    qt = np.einsum("ij,jk,ik->i", masks, lap_t, masks)
    nz = q > 1e-12
    rep = verify_cuts_exhaustive(h, h_tilde, 0.5)
    assert rep.worst_low == pytest.approx((qt[nz] / q[nz]).min(), abs=1e-8)
    assert rep.worst_high == pytest.approx((qt[nz] / q[nz]).max(), abs=1e-8)


@pytest.mark.parametrize("seed", range(4))
def test_spectral_pass_implies_cut_pass(seed):
    h = complete(make_f2k(4))
    res = sample_sparsifier(h, 0.5, big_c=0.3, seed=seed)
    spec = verify_spectral(h, res.graph(h), 0.5)
    cuts = verify_cuts_exhaustive(h, res.graph(h), 0.5)
    assert spec.worst_low <= cuts.worst_low + 1e-9
    assert cuts.worst_high <= spec.worst_high + 1e-9
    if spec.passed:
        assert cuts.passed


def test_sampled_identity_and_zero_graph():
    h = complete(make_f2k(6))
    assert verify_cuts_sampled(h, h, 0.1, trials=200).passed
    empty = h.with_gens(GeneratorSet.build(h.group, []))
    rep = verify_cuts_sampled(h, empty, 0.5, trials=10)
    assert not rep.passed and rep.worst_low == 0


def test_sampled_f2_10():
    h = complete(make_f2k(10))
    res = sample_sparsifier(h, 0.5, seed=1, certify=False)
    rep = verify_cuts_sampled(h, res.graph(h), 0.5, trials=10_000, seed=3)
    assert rep.passed and rep.trials >= 10_000


def test_structured_cuts_are_subgroup_orbits():
    f8 = make_f2k(3)
    h = cay(f8, [1, 2, 4])
    sets = {tuple(np.flatnonzero(m)) for m in structured_cuts(h)}
    assert (0, 2, 4, 6) in sets and (0, 1) in sets


def test_report_json_keys():
    h = cay(make_cyclic(4), [1, 3])
    d = verify_cuts_exhaustive(h, h, 0.5).to_dict()
    assert set(d) == {"kind", "pass", "worstLow", "worstHigh", "eps", "trials", "witness"}
    assert d["kind"] == "cutExhaustive"
