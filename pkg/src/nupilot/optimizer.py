"""Anchor-constrained pilot placement: greedy construction, stochastic swap refinement, brute force.

Candidate scoring works on the complex ambiguity ``Psi(tau)`` restricted to the
lower half of the sidelobe window (``|Psi(N - tau)| == |Psi(tau)|``). Adding
tone ``u`` adds the phasor ``exp(j 2 pi u tau / N)`` to every lag, so all
candidates of a step are scored in one vectorized pass. Reported PSL values
always come from :func:`nupilot.ambiguity.psl`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .ambiguity import phase_table, psl
from .core import OfdmGrid, PilotPattern, SidelobeWindow, make_anchor_set, validate_pattern

# margin on normalized PSL below which a candidate counts as an improvement; rejects float-noise ties
ACCEPT_TOL = 1e-10
# greedy ties on max |Psi| (absolute, in units of one phasor)
TIE_TOL = 1e-9
ORACLE_LIMIT = 10**7


@dataclass(frozen=True)
class OptimizerConfig:
    k: int
    n_anc: int = 0
    window: Optional[SidelobeWindow] = None
    sample_size: int = 64
    max_iter: int = 200
    seed: int = 0

    def check(self, grid: OfdmGrid) -> "OptimizerConfig":
        n = grid.n_subcarriers
        if not 0 <= self.n_anc <= self.k <= n:
            raise ValueError(f"need 0 <= n_anc <= k <= N, got n_anc={self.n_anc}, k={self.k}, N={n}")
        if self.k < 1:
            raise ValueError("k must be positive")
        if self.sample_size < 1:
            raise ValueError("sample_size must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.resolved_window(grid)
        return self

    def resolved_window(self, grid: OfdmGrid) -> SidelobeWindow:
        w = self.window or SidelobeWindow.full(grid.n_subcarriers)
        return w.check(grid.n_subcarriers)


@dataclass
class OptimizerTrace:
    stage1_psl_db: float
    final_psl_db: float
    sweeps_executed: int = 0
    swaps_accepted: int = 0
    psl_history: List[Tuple[int, float]] = field(default_factory=list)
    swaps_history: List[int] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("sweep,psl_db,swaps_accepted\n")
            for (sweep, db), swaps in zip(self.psl_history, self.swaps_history):
                fh.write(f"{sweep},{_fmt_db(db)},{swaps}\n")


def _fmt_db(x: float) -> str:
    return f"{x:.4f}" if math.isfinite(x) else "-inf"


class _Scorer:
    """Max normalized sidelobe power of pilot sets, evaluated on the half window."""

    def __init__(self, n: int, window: SidelobeWindow):
        self.n = n
        self.w = phase_table(n)
        self.lags = window.half_lags(n)

    def phasors(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        return self.w[np.multiply.outer(idx, self.lags) % self.n]

    def psi(self, idx) -> np.ndarray:
        if len(idx) == 0:
            return np.zeros(self.lags.size, dtype=complex)
        return self.phasors(idx).sum(axis=0)


def greedy_csm(grid: OfdmGrid, cfg: OptimizerConfig):
    """Stage 1: grow the anchor set one pilot at a time, each time minimizing the window peak of ``|Psi|``.

    Ties go to the smallest candidate index. Returns ``(pattern, psl_db)``.
    """
    cfg.check(grid)
    n = grid.n_subcarriers
    window = cfg.resolved_window(grid)
    anchors = make_anchor_set(grid, cfg.n_anc)
    sc = _Scorer(n, window)

    chosen = list(anchors)
    avail = np.setdiff1d(np.arange(n), chosen)
    psi = sc.psi(chosen)
    for _ in range(cfg.k - cfg.n_anc):
        peaks = np.abs(psi[None, :] + sc.phasors(avail)).max(axis=1)
        best = int(np.flatnonzero(peaks <= peaks.min() + TIE_TOL)[0])
        chosen.append(int(avail[best]))
        avail = np.delete(avail, best)
        psi = sc.psi(chosen)

    pattern = PilotPattern(tuple(chosen), n, anchors)
    return pattern, psl(pattern, window)[1]


def sccd_refine(pattern: PilotPattern, grid: OfdmGrid, cfg: OptimizerConfig):
    """Stage 2: stochastic cyclic coordinate descent over the non-anchor pilots.

    Each sweep visits the movable pilots in a seeded random order and tries a
    random subset of ``sample_size`` unused tones (clamped to the number
    available) as replacements, accepting the first one that strictly lowers
    the PSL. Stops after a sweep with no accepted swap or after ``max_iter``
    sweeps. Returns ``(pattern, trace)``.
    """
    cfg.check(grid)
    validate_pattern(pattern, grid)
    n = grid.n_subcarriers
    window = cfg.resolved_window(grid)
    sc = _Scorer(n, window)
    rng = np.random.default_rng(cfg.seed)
    k2 = float(pattern.k) ** 2
    anchors = set(pattern.anchors)

    current = list(pattern.indices)
    unused = np.setdiff1d(np.arange(n), current)
    psi = sc.psi(current)
    cur = float(np.max(np.abs(psi) ** 2)) / k2

    start_db = psl(pattern, window)[1]
    trace = OptimizerTrace(start_db, start_db, psl_history=[(0, start_db)], swaps_history=[0])
    result = pattern

    for sweep in range(1, cfg.max_iter + 1):
        improved = False
        movable = sorted(p for p in current if p not in anchors)
        for j in rng.permutation(len(movable)):
            p = movable[j]
            s = min(cfg.sample_size, unused.size)
            if s == 0:
                continue
            cand = rng.choice(unused, size=s, replace=False)
            trial = psi[None, :] - sc.phasors([p]) + sc.phasors(cand)
            vals = np.max(np.abs(trial) ** 2, axis=1) / k2
            hits = np.flatnonzero(vals < cur - ACCEPT_TOL)
            if hits.size == 0:
                continue
            u = int(cand[hits[0]])
            current[current.index(p)] = u
            unused = np.sort(np.concatenate([unused[unused != u], [p]]))
            psi = sc.psi(current)  # fresh sum, no drift from incremental updates
            cur = float(np.max(np.abs(psi) ** 2)) / k2
            trace.swaps_accepted += 1
            improved = True
        trace.sweeps_executed = sweep
        if improved:
            result = PilotPattern(tuple(current), n, pattern.anchors)
        trace.psl_history.append((sweep, psl(result, window)[1]))
        trace.swaps_history.append(trace.swaps_accepted)
        if not improved:
            break

    trace.final_psl_db = trace.psl_history[-1][1]
    return result, trace


def hybrid_design(grid: OfdmGrid, cfg: OptimizerConfig):
    """Greedy construction followed by SCCD refinement. Returns ``(pattern, trace)``."""
    stage1, stage1_db = greedy_csm(grid, cfg)
    pattern, trace = sccd_refine(stage1, grid, cfg)
    trace.stage1_psl_db = stage1_db
    return pattern, trace


def exhaustive_oracle(grid: OfdmGrid, k: int, n_anc: int = 0, window: Optional[SidelobeWindow] = None):
    """Global PSL minimum over every K-subset containing the anchor set.

    Ties resolve to the lexicographically smallest sorted index tuple. Returns
    ``(pattern, psl_db)``.
    """
    n = grid.n_subcarriers
    if not 0 <= n_anc <= k <= n:
        raise ValueError(f"need 0 <= n_anc <= k <= N, got n_anc={n_anc}, k={k}, N={n}")
    window = (window or SidelobeWindow.full(n)).check(n)
    anchors = make_anchor_set(grid, n_anc)
    free = np.setdiff1d(np.arange(n), anchors)
    m = k - n_anc
    total = math.comb(free.size, m)
    if total > ORACLE_LIMIT:
        raise ValueError(f"{total} candidate patterns exceed the enumeration limit {ORACLE_LIMIT}")

    sc = _Scorer(n, window)
    base = sc.psi(list(anchors))
    free_ph = sc.phasors(free)  # (|free|, lags)
    k2 = float(k) ** 2
    chunk = max(1, 2**21 // max(1, m * sc.lags.size))

    best_val = math.inf
    best_sets: List[tuple] = []
    combos = itertools.combinations(range(free.size), m)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)), dtype=np.int64)
        if block.size == 0 and m > 0:
            break
        block = block.reshape(-1, m) if m > 0 else np.zeros((1, 0), dtype=np.int64)
        psi = base[None, :] + free_ph[block].sum(axis=1)
        vals = np.max(np.abs(psi) ** 2, axis=1) / k2
        lo = float(vals.min())
        if lo < best_val - 1e-12:
            best_val, best_sets = lo, []
        if lo <= best_val + 1e-12:
            for row in block[vals <= best_val + 1e-12]:
                best_sets.append(tuple(sorted(anchors + tuple(int(free[i]) for i in row))))
            best_sets = [min(best_sets)]
        if m == 0:
            break

    pattern = PilotPattern(best_sets[0], n, anchors)
    return pattern, psl(pattern, window)[1]
