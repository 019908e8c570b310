import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_psl
from nupilot.ambiguity import difference_multiplicity, psl
from nupilot.core import OfdmGrid, SidelobeWindow, make_anchor_set, make_pattern, make_uniform_comb
from nupilot.optimizer import (
    OptimizerConfig,
    exhaustive_oracle,
    greedy_csm,
    hybrid_design,
    sccd_refine,
)

G512 = OfdmGrid(512)


def test_config_checks():
    with pytest.raises(ValueError):
        OptimizerConfig(k=4, n_anc=5).check(OfdmGrid(16))
    with pytest.raises(ValueError):
        OptimizerConfig(k=17).check(OfdmGrid(16))
    with pytest.raises(ValueError):
        OptimizerConfig(k=4, window=SidelobeWindow(1, 9)).check(OfdmGrid(16))


def test_greedy_two_pilots_matches_brute_force():
    pattern, db = greedy_csm(OfdmGrid(16), OptimizerConfig(k=2, n_anc=1))
    scores = {n: brute_psl([0, n], 16) for n in range(1, 16)}
    best = min(scores.values())
    expected = min(n for n, v in scores.items() if v <= best + 1e-12)
    assert pattern.indices == (0, expected)
    assert db == pytest.approx(10 * math.log10(best), abs=1e-9)


def test_greedy_full_grid():
    pattern, db = greedy_csm(OfdmGrid(8), OptimizerConfig(k=8))
    assert pattern.indices == tuple(range(8))
    assert db == -math.inf


def test_greedy_beats_comb_at_512():
    pattern, db = greedy_csm(G512, OptimizerConfig(k=32, n_anc=0))
    assert pattern.k == 32
    assert db < 0.0


@pytest.mark.parametrize("n_anc", [1, 5, 12, 16])
def test_greedy_keeps_anchors(n_anc):
    pattern, _ = greedy_csm(G512, OptimizerConfig(k=32, n_anc=n_anc))
    anchors = make_anchor_set(G512, n_anc)
    assert pattern.anchors == anchors
    assert set(anchors) <= set(pattern.indices)


def test_greedy_step_is_eq23_argmin():
    # replay each greedy step against an independent max-|Psi| argmin
    grid = OfdmGrid(24)
    cfg = OptimizerConfig(k=6, n_anc=2)
    pattern, _ = greedy_csm(grid, cfg)
    chosen = list(make_anchor_set(grid, 2))
    tau = np.arange(1, 13)
    added = [i for i in pattern.indices if i not in chosen]
    while len(chosen) < 6:
        cands = [u for u in range(24) if u not in chosen]
        peaks = [np.abs(np.exp(2j * np.pi * np.outer(chosen + [u], tau) / 24).sum(0)).max() for u in cands]
        best = min(peaks)
        u_star = next(u for u, v in zip(cands, peaks) if v <= best + 1e-9)
        assert u_star in added
        chosen.append(u_star)
    assert sorted(chosen) == list(pattern.indices)


def test_sccd_keeps_global_optimum():
    p = make_pattern([0, 1, 3, 9], 13)
    out, trace = sccd_refine(p, OfdmGrid(13), OptimizerConfig(k=4, sample_size=9, max_iter=50, seed=3))
    assert out == p
    assert trace.swaps_accepted == 0
    assert trace.sweeps_executed == 1


def test_sccd_breaks_comb():
    comb = make_uniform_comb(G512, 32)
    out, trace = sccd_refine(comb, G512, OptimizerConfig(k=32, max_iter=1, seed=0))
    assert trace.sweeps_executed == 1
    assert psl(out)[1] < 0.0
    assert trace.psl_history[1][1] < 0.0


def test_sccd_max_iter_zero_is_identity():
    comb = make_uniform_comb(G512, 32)
    out, trace = sccd_refine(comb, G512, OptimizerConfig(k=32, max_iter=0))
    assert out == comb
    assert trace.sweeps_executed == 0 and trace.swaps_accepted == 0


def test_sccd_clamps_sample_size():
    grid = OfdmGrid(8)
    p = make_pattern([0, 1, 2, 3, 4, 5], 8)
    out, trace = sccd_refine(p, grid, OptimizerConfig(k=6, sample_size=64, max_iter=5, seed=1))
    assert out.k == 6


def test_sccd_never_moves_anchors():
    grid = OfdmGrid(64)
    start = make_pattern([0, 16, 32, 48, 1, 2, 3, 4], 64, anchors=[0, 16, 32, 48])
    out, trace = sccd_refine(start, grid, OptimizerConfig(k=8, n_anc=4, sample_size=20, max_iter=30, seed=9))
    assert set(start.anchors) <= set(out.indices)
    assert out.anchors == start.anchors
    assert trace.final_psl_db < trace.stage1_psl_db


def test_hybrid_monotone_chain_512():
    cfg = OptimizerConfig(k=32, n_anc=16, window=SidelobeWindow(1, 256), sample_size=64, max_iter=200, seed=1)
    pattern, trace = hybrid_design(G512, cfg)
    comb_db = psl(make_uniform_comb(G512, 32))[1]
    assert trace.final_psl_db <= trace.stage1_psl_db <= comb_db
    assert pattern.k == 32 and pattern.n_anc == 16
    dbs = [db for _, db in trace.psl_history]
    assert all(b <= a for a, b in zip(dbs, dbs[1:]))
    assert trace.final_psl_db == pytest.approx(psl(pattern)[1], abs=1e-12)


def test_hybrid_all_anchors_is_comb():
    pattern, trace = hybrid_design(OfdmGrid(64), OptimizerConfig(k=8, n_anc=8, seed=2))
    assert pattern.indices == make_uniform_comb(OfdmGrid(64), 8).indices
    assert trace.swaps_accepted == 0


def test_hybrid_near_oracle_16_4():
    grid = OfdmGrid(16)
    _, best = exhaustive_oracle(grid, 4, 0)
    _, trace = hybrid_design(grid, OptimizerConfig(k=4, sample_size=12, max_iter=50, seed=0))
    assert trace.final_psl_db <= best + 1.0


def test_hybrid_deterministic():
    cfg = OptimizerConfig(k=32, n_anc=5, seed=77)
    a, ta = hybrid_design(G512, cfg)
    b, tb = hybrid_design(G512, cfg)
    assert a == b
    assert ta == tb


def test_trace_csv(tmp_path):
    _, trace = hybrid_design(OfdmGrid(64), OptimizerConfig(k=8, n_anc=1, seed=4))
    path = tmp_path / "trace.csv"
    trace.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "sweep,psl_db,swaps_accepted"
    assert len(lines) == trace.sweeps_executed + 2
    assert lines[-1].split(",")[2] == str(trace.swaps_accepted)


def _brute_optimum(n, k, anchors):
    free = [i for i in range(n) if i not in anchors]
    vals = []
    for c in itertools.combinations(free, k - len(anchors)):
        idx = tuple(sorted(anchors + c))
        vals.append((brute_psl(idx, n), idx))
    best = min(v for v, _ in vals)
    return best, min(idx for v, idx in vals if v <= best + 1e-12)


def test_oracle_13_4_is_planar_difference_set():
    pattern, db = exhaustive_oracle(OfdmGrid(13), 4, 0)
    lam = difference_multiplicity(pattern).lam
    assert set(lam[1:].tolist()) == {1}
    assert psl(pattern)[0] == pytest.approx(3 / 16, rel=1e-12)
    best, idx = _brute_optimum(13, 4, ())
    assert best == pytest.approx(3 / 16, rel=1e-12)
    assert pattern.indices == idx == (0, 1, 3, 9)


def test_oracle_full_grid():
    pattern, db = exhaustive_oracle(OfdmGrid(8), 8, 0)
    assert pattern.indices == tuple(range(8)) and db == -math.inf


def test_oracle_16_4_anchor_regression():
    pattern, db = exhaustive_oracle(OfdmGrid(16), 4, 1)
    best, idx = _brute_optimum(16, 4, (0,))
    assert pattern.indices == idx == (0, 1, 3, 12)
    assert db == pytest.approx(10 * math.log10(best), abs=1e-9)
    assert db == pytest.approx(-4.705846002404762, abs=1e-9)


def test_oracle_size_guard():
    with pytest.raises(ValueError):
        exhaustive_oracle(G512, 8, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(6, 14), st.integers(2, 4), st.integers(0, 2), st.integers(0, 2**32))
def test_properties_small(n, k, n_anc, seed):
    if n_anc > k:
        return
    grid = OfdmGrid(n)
    cfg = OptimizerConfig(k=k, n_anc=n_anc, sample_size=n - k, max_iter=50, seed=seed)
    stage1, s1_db = greedy_csm(grid, cfg)
    out, trace = hybrid_design(grid, cfg)
    _, opt_db = exhaustive_oracle(grid, k, n_anc)
    assert set(make_anchor_set(grid, n_anc)) <= set(out.indices)
    assert opt_db - 1e-9 <= trace.final_psl_db <= s1_db + 1e-12
    assert trace.stage1_psl_db == s1_db
    dbs = [db for _, db in trace.psl_history]
    assert all(b <= a for a, b in zip(dbs, dbs[1:]))
