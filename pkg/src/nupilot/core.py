"""Grid numerology, pilot patterns, sidelobe windows and canonical pattern constructors."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from os import PathLike
from typing import Iterable, Union

import numpy as np


class PatternError(ValueError):
    """Raised when a pilot pattern violates its invariants."""


@dataclass(frozen=True)
class OfdmGrid:
    n_subcarriers: int
    cp_length: int = 0

    def __post_init__(self):
        n = int(self.n_subcarriers)
        cp = int(self.cp_length)
        if n < 2:
            raise ValueError(f"n_subcarriers must be >= 2, got {n}")
        if not 0 <= cp < n:
            raise ValueError(f"cp_length must lie in [0, {n}), got {cp}")
        object.__setattr__(self, "n_subcarriers", n)
        object.__setattr__(self, "cp_length", cp)

    @property
    def n(self) -> int:
        return self.n_subcarriers


@dataclass(frozen=True)
class SidelobeWindow:
    """Lag region ``{tau : tau_min <= min(tau, N - tau) <= tau_max}``."""

    tau_min: int
    tau_max: int

    def __post_init__(self):
        if int(self.tau_min) < 1 or int(self.tau_max) < int(self.tau_min):
            raise ValueError(
                f"need 1 <= tau_min <= tau_max, got ({self.tau_min}, {self.tau_max})"
            )
        object.__setattr__(self, "tau_min", int(self.tau_min))
        object.__setattr__(self, "tau_max", int(self.tau_max))

    @classmethod
    def full(cls, n: int) -> "SidelobeWindow":
        return cls(1, n // 2)

    def check(self, n: int) -> "SidelobeWindow":
        if self.tau_max > n // 2:
            raise ValueError(f"tau_max={self.tau_max} exceeds floor(N/2)={n // 2}")
        return self

    def lags(self, n: int) -> np.ndarray:
        """All lags in [0, N) whose cyclic distance falls inside the window, ascending."""
        self.check(n)
        tau = np.arange(n)
        d = np.minimum(tau, n - tau)
        return tau[(d >= self.tau_min) & (d <= self.tau_max)]

    def half_lags(self, n: int) -> np.ndarray:
        # |Psi(N - tau)| == |Psi(tau)|, so the lower half of the window is enough for maxima
        self.check(n)
        return np.arange(self.tau_min, self.tau_max + 1)


@dataclass(frozen=True)
class PilotPattern:
    """Pilot support ``indices`` (sorted) with a frozen ``anchors`` subset, for a grid of size ``grid_n``."""

    indices: tuple
    grid_n: int
    anchors: tuple = field(default=())

    def __post_init__(self):
        idx = [int(i) for i in self.indices]
        anc = [int(a) for a in self.anchors]
        n = int(self.grid_n)
        if n < 1:
            raise PatternError(f"grid_n must be positive, got {n}")
        if not idx:
            raise PatternError("empty pattern")
        if len(set(idx)) != len(idx):
            raise PatternError(f"duplicate pilot index in {sorted(idx)}")
        bad = [i for i in idx if not 0 <= i < n]
        if bad:
            raise PatternError(f"pilot index out of range [0, {n}): {bad}")
        if len(set(anc)) != len(anc):
            raise PatternError("duplicate anchor index")
        missing = sorted(set(anc) - set(idx))
        if missing:
            raise PatternError(f"anchors not among pilot indices: {missing}")
        object.__setattr__(self, "indices", tuple(sorted(idx)))
        object.__setattr__(self, "anchors", tuple(sorted(anc)))
        object.__setattr__(self, "grid_n", n)

    @property
    def k(self) -> int:
        return len(self.indices)

    @property
    def n_anc(self) -> int:
        return len(self.anchors)

    @property
    def free(self) -> tuple:
        anc = set(self.anchors)
        return tuple(i for i in self.indices if i not in anc)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64)

    def mask(self) -> np.ndarray:
        m = np.zeros(self.grid_n, dtype=bool)
        m[list(self.indices)] = True
        return m

    def swapped(self, remove: int, add: int) -> "PilotPattern":
        if remove not in self.indices:
            raise PatternError(f"{remove} is not a pilot")
        if add in self.indices:
            raise PatternError(f"{add} is already a pilot")
        if remove in self.anchors:
            raise PatternError(f"{remove} is an anchor and cannot be moved")
        idx = [i for i in self.indices if i != remove] + [add]
        return PilotPattern(tuple(idx), self.grid_n, self.anchors)

    def to_dict(self) -> dict:
        return {
            "n": self.grid_n,
            "k": self.k,
            "anchors": list(self.anchors),
            "pilots": list(self.indices),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PilotPattern":
        try:
            pattern = cls(tuple(d["pilots"]), int(d["n"]), tuple(d.get("anchors", ())))
        except KeyError as exc:
            raise PatternError(f"pattern file missing key {exc}") from None
        if "k" in d and int(d["k"]) != pattern.k:
            raise PatternError(f"k={d['k']} does not match {pattern.k} pilots")
        return pattern


def validate_pattern(pattern: PilotPattern, grid: OfdmGrid) -> PilotPattern:
    """Return ``pattern`` unchanged if it is consistent with ``grid``, else raise PatternError."""
    if pattern.grid_n != grid.n_subcarriers:
        raise PatternError(
            f"pattern designed for N={pattern.grid_n}, grid has N={grid.n_subcarriers}"
        )
    # the constructor enforces the remaining invariants; re-run it on the raw fields
    return PilotPattern(pattern.indices, grid.n_subcarriers, pattern.anchors)


def make_pattern(indices: Iterable[int], grid: Union[OfdmGrid, int], anchors: Iterable[int] = ()) -> PilotPattern:
    n = grid.n_subcarriers if isinstance(grid, OfdmGrid) else int(grid)
    return PilotPattern(tuple(indices), n, tuple(anchors))


def make_uniform_comb(grid: OfdmGrid, k: int) -> PilotPattern:
    """Periodic comb ``{floor(i*N/k)}``; exactly ``{0, D, ..., (k-1)D}`` when ``k`` divides ``N``."""
    n = grid.n_subcarriers
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    return PilotPattern(tuple((i * n) // k for i in range(k)), n)


def make_anchor_set(grid: OfdmGrid, n_anc: int) -> tuple:
    """Equispaced anchor tones ``round(i*N/n_anc) mod N`` (half-up rounding)."""
    n = grid.n_subcarriers
    if n_anc < 0:
        raise ValueError(f"n_anc must be nonnegative, got {n_anc}")
    if n_anc > n:
        raise ValueError(f"cannot place {n_anc} anchors on {n} subcarriers")
    if n_anc == 0:
        return ()
    anchors = tuple(sorted({((2 * i * n + n_anc) // (2 * n_anc)) % n for i in range(n_anc)}))
    assert len(anchors) == n_anc
    return anchors


def save_pattern(pattern: PilotPattern, path: Union[str, PathLike]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pattern.to_dict(), fh)
        fh.write("\n")


def load_pattern(path: Union[str, PathLike]) -> PilotPattern:
    with open(path, encoding="utf-8") as fh:
        return PilotPattern.from_dict(json.load(fh))
