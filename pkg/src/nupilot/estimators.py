"""scikit-learn style front-ends over the functional API."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_complex_array, check_positive_int
from .ambiguity import delta_psl, psl
from .comm import estimate_channel, equalize_and_demod
from .core import OfdmGrid, PilotPattern, SidelobeWindow, make_uniform_comb
from .optimizer import OptimizerConfig, greedy_csm, hybrid_design
from .sensing import build_isac_symbol, coherent_integrate, estimate_delay, matched_filter

_METHODS = ("hybrid", "greedy", "uniform")


class PilotPatternDesigner(TransformerMixin, BaseEstimator):
    """Designs a pilot pattern on ``fit``; ``transform`` maps data payloads to ISAC time-domain symbols.

    Parameters
    ----------
    n_subcarriers : int
        Grid size N.
    n_pilots : int
        Total pilots K.
    n_anchors : int
        Equispaced anchors kept fixed during optimization.
    tau_min, tau_max : int or None
        Sidelobe window; ``tau_max=None`` means ``N // 2``.
    sample_size, max_iter : int
        Candidates per swap attempt and sweep cap for the refinement stage.
    method : {"hybrid", "greedy", "uniform"}
    p_ratio : float
        Pilot-to-data power ratio used by ``transform``.
    random_state : int
    """

    def __init__(
        self,
        n_subcarriers=512,
        n_pilots=32,
        n_anchors=16,
        tau_min=1,
        tau_max=None,
        sample_size=64,
        max_iter=200,
        method="hybrid",
        p_ratio=4.0,
        random_state=0,
    ):
        self.n_subcarriers = n_subcarriers
        self.n_pilots = n_pilots
        self.n_anchors = n_anchors
        self.tau_min = tau_min
        self.tau_max = tau_max
        self.sample_size = sample_size
        self.max_iter = max_iter
        self.method = method
        self.p_ratio = p_ratio
        self.random_state = random_state

    def _config(self):
        n = check_positive_int(self.n_subcarriers, "n_subcarriers", 2)
        grid = OfdmGrid(n)
        tau_max = n // 2 if self.tau_max is None else self.tau_max
        window = SidelobeWindow(self.tau_min, tau_max).check(n)
        cfg = OptimizerConfig(
            k=check_positive_int(self.n_pilots, "n_pilots"),
            n_anc=check_positive_int(self.n_anchors, "n_anchors", 0),
            window=window,
            sample_size=check_positive_int(self.sample_size, "sample_size"),
            max_iter=check_positive_int(self.max_iter, "max_iter", 0),
            seed=int(self.random_state or 0),
        ).check(grid)
        return grid, cfg

    def fit(self, X=None, y=None):
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")
        grid, cfg = self._config()
        self.trace_ = None
        if self.method == "uniform":
            self.pattern_ = make_uniform_comb(grid, cfg.k)
        elif self.method == "greedy":
            self.pattern_, _ = greedy_csm(grid, cfg)
        else:
            self.pattern_, self.trace_ = hybrid_design(grid, cfg)
        self.window_ = cfg.window
        self.psl_db_ = psl(self.pattern_, cfg.window)[1]
        comb_db = psl(make_uniform_comb(grid, cfg.k), cfg.window)[1]
        self.delta_psl_db_ = delta_psl(comb_db, self.psl_db_) if np.isfinite(self.psl_db_) else np.inf
        return self

    @property
    def pilots_(self):
        check_is_fitted(self, "pattern_")
        return np.asarray(self.pattern_.indices)

    @property
    def anchors_(self):
        check_is_fitted(self, "pattern_")
        return np.asarray(self.pattern_.anchors)

    def transform(self, X):
        """Rows of N - K data symbols -> rows of N time-domain samples."""
        check_is_fitted(self, "pattern_")
        p = self.pattern_
        X = check_complex_array(X, p.grid_n - p.k)
        return np.stack([build_isac_symbol(p, row, self.p_ratio).time for row in X])

    def score(self, X=None, y=None):
        """PSL suppression gain over the periodic comb, in dB."""
        check_is_fitted(self, "pattern_")
        return self.delta_psl_db_


class RangeEstimator(BaseEstimator):
    """Integer-delay estimator: pilot-reference matched filter with coherent integration.

    ``predict`` takes received blocks shaped ``(n_samples, N)`` or
    ``(n_samples, M, N)``; in the latter the M symbols are integrated coherently.
    """

    def __init__(self, pattern=None, p_ratio=4.0):
        self.pattern = pattern
        self.p_ratio = p_ratio

    def fit(self, X=None, y=None):
        if not isinstance(self.pattern, PilotPattern):
            raise TypeError("pattern must be a PilotPattern")
        self.reference_ = build_isac_symbol(self.pattern, None, self.p_ratio).time
        return self

    def predict(self, X):
        check_is_fitted(self, "reference_")
        n = self.pattern.grid_n
        X = check_complex_array(X, n, ndim=(2, 3))
        if X.ndim == 2:
            X = X[:, None, :]
        return np.array([estimate_delay(coherent_integrate(matched_filter(block, self.reference_))) for block in X])


class PilotAidedReceiver(BaseEstimator):
    """Channel estimation from pilot tones, zero-forcing equalization and 16-QAM hard decisions."""

    def __init__(self, pattern=None, p_ratio=4.0):
        self.pattern = pattern
        self.p_ratio = p_ratio

    def fit(self, X=None, y=None):
        if not isinstance(self.pattern, PilotPattern):
            raise TypeError("pattern must be a PilotPattern")
        if self.pattern.k < 2:
            raise ValueError("need at least two pilots")
        self.pilot_amplitude_ = float(np.sqrt(self.p_ratio))
        return self

    def predict(self, X):
        """Time-domain received rows ``(n_frames, N)`` -> bit rows ``(n_frames, 4 (N - K))``."""
        check_is_fitted(self, "pilot_amplitude_")
        X = check_complex_array(X, self.pattern.grid_n)
        out = []
        for y in X:
            rx = np.fft.fft(y, norm="ortho")
            h = estimate_channel(rx, self.pattern, self.pilot_amplitude_)
            out.append(equalize_and_demod(rx, h, self.pattern))
        return np.stack(out)
