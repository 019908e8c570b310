"""Delay-domain ambiguity function of a pilot set, its difference multiplicities, and PSL metrics.

The power profile ``|Psi(tau)|^2`` of a pilot set is the N-point DFT of its
cyclic difference multiplicity ``lambda(d)``. Everything here works on that
identity: ``lambda`` is an exact integer array, so incremental swaps that are
later undone restore the PSL bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import PatternError, PilotPattern, SidelobeWindow

_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class DifferenceMultiplicity:
    lam: np.ndarray
    k: int

    @property
    def n(self) -> int:
        return self.lam.shape[0]


@dataclass(frozen=True)
class AfProfile:
    power: np.ndarray
    mainlobe: float
    psl_linear: float
    psl_db: float
    argmax_tau: int

    @property
    def n(self) -> int:
        return self.power.shape[0]

    def power_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10.0 * np.log10(self.power / self.mainlobe)


def phase_table(n: int) -> np.ndarray:
    """``exp(j 2 pi m / N)`` for m in [0, N); index with ``(k * tau) % N`` for exact periodicity."""
    return np.exp(2j * np.pi * np.arange(n) / n)


def to_db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def difference_multiplicity(pattern: PilotPattern) -> DifferenceMultiplicity:
    p = pattern.as_array()
    n = pattern.grid_n
    diffs = (p[:, None] - p[None, :]) % n
    lam = np.bincount(diffs.ravel(), minlength=n).astype(np.int64)
    return DifferenceMultiplicity(lam, pattern.k)


def af_direct(pattern: PilotPattern) -> np.ndarray:
    """Pilot-only ambiguity ``Psi(tau) = sum_k exp(j 2 pi k tau / N)``, by direct phasor summation."""
    n = pattern.grid_n
    w = phase_table(n)
    tau = np.arange(n)
    return w[np.outer(pattern.as_array(), tau) % n].sum(axis=0)


def _window_max(power: np.ndarray, window: SidelobeWindow):
    lags = window.lags(power.shape[0])
    if lags.size == 0:
        raise ValueError("empty sidelobe window")
    vals = power[lags]
    i = int(np.argmax(vals))  # first occurrence == smallest lag
    return float(vals[i]), int(lags[i])


def af_power_via_dft(lam: DifferenceMultiplicity, window: Optional[SidelobeWindow] = None) -> AfProfile:
    """Power profile ``|Psi|^2`` as the DFT of ``lambda``, plus PSL over ``window`` (default: full)."""
    n = lam.n
    spec = np.fft.fft(lam.lam)
    k2 = float(lam.k) ** 2
    resid = float(np.max(np.abs(spec.imag)))
    if resid > _IMAG_TOL * k2:
        raise ArithmeticError(
            f"difference multiplicity is not symmetric (imaginary residue {resid:.3e})"
        )
    power = np.maximum(spec.real, 0.0)
    window = window or SidelobeWindow.full(n)
    peak, tau = _window_max(power, window)
    psl_lin = peak / k2
    return AfProfile(power, k2, psl_lin, to_db(psl_lin), tau)


def af_power_direct(lam: DifferenceMultiplicity) -> np.ndarray:
    """O(N^2) summation of ``sum_d lambda(d) cos(2 pi d tau / N)``; cross-check for the FFT route."""
    n = lam.n
    d = np.arange(n)
    c = np.cos(2 * np.pi * (np.outer(d, d) % n) / n)
    return lam.lam @ c


def psl(pattern: PilotPattern, window: Optional[SidelobeWindow] = None):
    """Return ``(psl_linear, psl_db, argmax_tau)`` for ``pattern`` over ``window``."""
    prof = af_power_via_dft(difference_multiplicity(pattern), window)
    return prof.psl_linear, prof.psl_db, prof.argmax_tau


def af_profile(pattern: PilotPattern, window: Optional[SidelobeWindow] = None) -> AfProfile:
    return af_power_via_dft(difference_multiplicity(pattern), window)


def delta_psl(psl_periodic_db: float, psl_evaluated_db: float) -> float:
    """Suppression gain in dB; positive when the evaluated pattern has lower sidelobes than the comb."""
    if not (math.isfinite(psl_periodic_db) and math.isfinite(psl_evaluated_db)):
        raise ValueError("delta_psl needs finite dB values")
    return psl_periodic_db - psl_evaluated_db


def psl_after_swap(
    pattern: PilotPattern,
    lam: DifferenceMultiplicity,
    remove: int,
    add: int,
    window: Optional[SidelobeWindow] = None,
):
    """PSL of ``pattern`` with ``remove`` replaced by ``add``, updating ``lam`` in O(K).

    Returns ``(psl_linear, new_lam)``; ``lam`` itself is not modified.
    """
    if remove not in pattern.indices:
        raise PatternError(f"{remove} is not a pilot")
    if add in pattern.indices:
        raise PatternError(f"{add} is already a pilot")
    n = pattern.grid_n
    if not 0 <= add < n:
        raise PatternError(f"index {add} out of range [0, {n})")
    rest = np.array([i for i in pattern.indices if i != remove], dtype=np.int64)
    new = lam.lam.copy()
    np.subtract.at(new, (remove - rest) % n, 1)
    np.subtract.at(new, (rest - remove) % n, 1)
    np.add.at(new, (add - rest) % n, 1)
    np.add.at(new, (rest - add) % n, 1)
    new_lam = DifferenceMultiplicity(new, lam.k)
    return af_power_via_dft(new_lam, window).psl_linear, new_lam


def write_af_csv(profile: AfProfile, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("tau,power,power_db_rel_mainlobe\n")
        for tau, (p, db) in enumerate(zip(profile.power, profile.power_db())):
            db_s = f"{db:.4f}" if math.isfinite(db) else "-inf"
            fh.write(f"{tau},{p:.6e},{db_s}\n")
