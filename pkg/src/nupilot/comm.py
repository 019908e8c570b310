"""Communication link over a frequency-selective multipath channel.

Pilot-based least-squares channel estimation with cyclic linear interpolation,
zero-forcing one-tap equalization and Gray-coded 16-QAM.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import PilotPattern

# 2-bit Gray label -> PAM level, per axis
_GRAY_LEVELS = {0b00: -3, 0b01: -1, 0b11: 1, 0b10: 3}
_LEVEL_LUT = np.array([_GRAY_LEVELS[i] for i in range(4)], dtype=float)
QAM16_SCALE = 1.0 / np.sqrt(10.0)
ERASURE_TOL = 1e-12


def qam16_modulate(bits: np.ndarray) -> np.ndarray:
    """Map bits (length divisible by 4) to unit-average-power 16-QAM; bits b0b1 -> I, b2b3 -> Q."""
    bits = np.asarray(bits, dtype=np.int64).reshape(-1, 4)
    i_lab = 2 * bits[:, 0] + bits[:, 1]
    q_lab = 2 * bits[:, 2] + bits[:, 3]
    return (_LEVEL_LUT[i_lab] + 1j * _LEVEL_LUT[q_lab]) * QAM16_SCALE


def _pam_bits(v: np.ndarray):
    # thresholds at 0 and +-2 are the minimum-distance regions of the Gray 4-PAM above
    first = (v > 0).astype(np.uint8)
    second = (np.abs(v) < 2).astype(np.uint8)
    return first, second


def qam16_demodulate(symbols: np.ndarray) -> np.ndarray:
    """Minimum-distance hard decisions back to a flat bit array."""
    s = np.asarray(symbols) / QAM16_SCALE
    b0, b1 = _pam_bits(s.real)
    b2, b3 = _pam_bits(s.imag)
    return np.stack([b0, b1, b2, b3], axis=1).ravel()


def random_bits(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.uint8)


def random_qam16(rng: np.random.Generator, n: int) -> np.ndarray:
    return qam16_modulate(random_bits(rng, 4 * n))


@dataclass(frozen=True)
class MultipathChannel:
    gains: tuple
    delays: tuple
    cp_length: Optional[int] = None

    def __post_init__(self):
        if len(self.gains) != len(self.delays) or not self.gains:
            raise ValueError("need matching, non-empty gains and delays")
        if any(int(d) < 0 for d in self.delays):
            raise ValueError("tap delays must be nonnegative")
        if self.cp_length is not None and max(self.delays) >= self.cp_length:
            raise ValueError(
                f"tap delay {max(self.delays)} not below cp_length={self.cp_length}; ISI-free model breaks"
            )
        object.__setattr__(self, "gains", tuple(complex(g) for g in self.gains))
        object.__setattr__(self, "delays", tuple(int(d) for d in self.delays))

    @property
    def n_paths(self) -> int:
        return len(self.gains)

    def frequency_response(self, n: int) -> np.ndarray:
        if max(self.delays) >= n:
            raise ValueError(f"tap delay {max(self.delays)} >= N={n}")
        k = np.arange(n)
        d = np.asarray(self.delays)
        return np.exp(-2j * np.pi * np.outer(k, d) / n) @ np.asarray(self.gains)


def rayleigh_channel(rng: np.random.Generator, cp_length: int, n_paths: int = 8) -> MultipathChannel:
    """i.i.d. CN(0, 1/P) taps at delays drawn uniformly from [0, cp_length)."""
    if cp_length < 1:
        raise ValueError("cp_length must be >= 1 for a multipath channel")
    delays = rng.integers(0, cp_length, size=n_paths)
    gains = (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)) * np.sqrt(0.5 / n_paths)
    return MultipathChannel(tuple(gains), tuple(delays), cp_length)


def noise_variance(x: np.ndarray, snr_db: float) -> float:
    """Per-sample noise variance for SNR = E_s / N_0, with E_s the mean sample energy of ``x``."""
    if np.isposinf(snr_db):
        return 0.0
    es = float(np.mean(np.abs(x) ** 2))
    return es / 10.0 ** (snr_db / 10.0)


def complex_noise(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


def apply_channel(
    x: np.ndarray,
    ch: MultipathChannel,
    snr_db: float,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Circular multipath plus AWGN; ``noise`` may supply the unit-variance realization."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[-1]
    if max(ch.delays) >= n:
        raise ValueError(f"tap delay {max(ch.delays)} >= N={n}")
    y = np.zeros_like(x)
    for g, d in zip(ch.gains, ch.delays):
        y += g * np.roll(x, d, axis=-1)
    var = noise_variance(x, snr_db)
    if var > 0:
        if noise is None:
            noise = complex_noise(rng, x.shape)
        y = y + np.sqrt(var) * noise
    return y


def estimate_channel(rx_freq: np.ndarray, pattern: PilotPattern, pilot_amplitude: float) -> np.ndarray:
    """LS estimates on pilot tones, linearly interpolated (re/im) across the cyclic tone axis."""
    if pattern.k < 2:
        raise ValueError("channel interpolation needs at least two pilots")
    n = pattern.grid_n
    p = pattern.as_array()
    h = np.asarray(rx_freq)[p] / pilot_amplitude
    xp = np.concatenate([p, [p[0] + n]])
    fp = np.concatenate([h, h[:1]])
    k = np.arange(n)
    k = np.where(k < p[0], k + n, k)
    return np.interp(k, xp, fp.real) + 1j * np.interp(k, xp, fp.imag)


def data_tones(pattern: PilotPattern) -> np.ndarray:
    return np.flatnonzero(~pattern.mask())


def equalize_and_demod(rx_freq: np.ndarray, channel_est: np.ndarray, pattern: PilotPattern) -> np.ndarray:
    """Zero-forcing one-tap equalization of data tones, then Gray 16-QAM hard decisions.

    Tones with ``|H| < 1e-12`` are erased: they equalize to 0 and demap to a fixed label.
    """
    dt = data_tones(pattern)
    h = np.asarray(channel_est)[dt]
    r = np.asarray(rx_freq)[dt]
    ok = np.abs(h) >= ERASURE_TOL
    eq = np.zeros(dt.size, dtype=complex)
    eq[ok] = r[ok] / h[ok]
    return qam16_demodulate(eq)


def _frame_seed(seed: int, frame: int) -> np.random.Generator:
    return np.random.default_rng([seed, frame])


def ber_experiment(
    pattern: PilotPattern,
    snr_grid_db: Sequence[float],
    n_frames: int,
    p_ratio: float = 4.0,
    seed: int = 0,
    cp_length: int = 2,
    channel_sampler: Optional[Callable[[np.random.Generator], MultipathChannel]] = None,
):
    """BER versus SNR for one pilot pattern.

    Each frame draws a channel, fresh bits and a noise realization from a
    generator seeded by ``(seed, frame)``; the same realization is reused at
    every SNR point. Returns a list of ``(snr_db, total_bits, bit_errors, ber)``.
    """
    from .sensing import build_isac_symbol

    if n_frames < 500:
        raise ValueError(f"n_frames must be >= 500, got {n_frames}")
    snrs = [float(s) for s in snr_grid_db]
    if not snrs:
        raise ValueError("empty SNR grid")
    sampler = channel_sampler or (lambda r: rayleigh_channel(r, cp_length))
    n = pattern.grid_n
    n_data = n - pattern.k
    errors = np.zeros(len(snrs), dtype=np.int64)
    for f in range(n_frames):
        rng = _frame_seed(seed, f)
        ch = sampler(rng)
        bits = random_bits(rng, 4 * n_data)
        sym = build_isac_symbol(pattern, qam16_modulate(bits), p_ratio)
        z = complex_noise(rng, n)
        for i, snr in enumerate(snrs):
            y = apply_channel(sym.time, ch, snr, noise=z)
            rx = np.fft.fft(y, norm="ortho")
            h_est = estimate_channel(rx, pattern, sym.pilot_amplitude)
            errors[i] += int(np.count_nonzero(equalize_and_demod(rx, h_est, pattern) != bits))
    total = n_frames * 4 * n_data
    return [(s, total, int(e), e / total) for s, e in zip(snrs, errors)]


def write_ber_csv(rows_by_label: dict, n_frames: int, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("snr_db,pattern_label,n_frames,total_bits,bit_errors,ber\n")
        for label, rows in rows_by_label.items():
            for snr, total, errs, ber in rows:
                fh.write(f"{snr:.4f},{label},{n_frames},{total},{errs},{ber:.6e}\n")
