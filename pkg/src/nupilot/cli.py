"""Command-line front-end: design, ablation, rmse, ber, af-dump.

Settings come from defaults, then an optional flat TOML file (``--config``),
then command-line flags, later sources winning. Exit status is 0 on success,
1 for configuration errors and 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .ambiguity import af_profile, delta_psl, psl, write_af_csv
from .comm import ber_experiment, write_ber_csv
from .core import OfdmGrid, PatternError, SidelobeWindow, load_pattern, make_uniform_comb, save_pattern
from .optimizer import OptimizerConfig, greedy_csm, hybrid_design
from .sensing import measure_dpi_floor, rmse_experiment, write_rmse_csv

log = logging.getLogger("nupilot")


class ConfigError(Exception):
    pass


@dataclass
class ExperimentConfig:
    n: int = 512
    cp: int = 2
    k: int = 32
    n_anc: int = 16
    window_min: int = 1
    window_max: Optional[int] = None
    sample_size: int = 64
    max_iter: int = 200
    seed: int = 0
    snr: List[float] = field(default_factory=lambda: [float(s) for s in range(0, 41, 5)])
    trials: int = 500
    frames: int = 2000
    m_symbols: int = 4
    p_ratio: float = 4.0
    out: str = "."
    k_list: List[int] = field(default_factory=lambda: [32, 64, 128])
    n_anc_list: List[int] = field(default_factory=lambda: [1, 5, 12, 16])

    @property
    def grid(self) -> OfdmGrid:
        return OfdmGrid(self.n, self.cp)

    @property
    def window(self) -> SidelobeWindow:
        wmax = self.n // 2 if self.window_max is None else self.window_max
        return SidelobeWindow(self.window_min, wmax).check(self.n)

    def optimizer(self, k=None, n_anc=None) -> OptimizerConfig:
        return OptimizerConfig(
            k=self.k if k is None else k,
            n_anc=self.n_anc if n_anc is None else n_anc,
            window=self.window,
            sample_size=self.sample_size,
            max_iter=self.max_iter,
            seed=self.seed,
        ).check(self.grid)

    def validate(self) -> "ExperimentConfig":
        try:
            self.grid
            self.window
            self.optimizer()
        except (ValueError, PatternError) as exc:
            raise ConfigError(str(exc)) from None
        if self.p_ratio <= 0:
            raise ConfigError("p_ratio must be positive")
        if self.m_symbols < 1:
            raise ConfigError("m_symbols must be positive")
        return self


def parse_snr(text) -> List[float]:
    """``"0,5,10"`` or ``"start:stop:step"`` (stop inclusive)."""
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = str(text).strip()
    if not text:
        return []
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        if step <= 0:
            raise ConfigError("SNR step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(max(count, 0))]
    return [float(v) for v in text.split(",")]


def _int_list(text) -> List[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


_FLAGS = {
    "n": ("--n", int),
    "cp": ("--cp", int),
    "k": ("--k", int),
    "n_anc": ("--n-anc", int),
    "window_min": ("--window-min", int),
    "window_max": ("--window-max", int),
    "sample_size": ("--sample-size", int),
    "max_iter": ("--max-iter", int),
    "seed": ("--seed", int),
    "snr": ("--snr", str),
    "trials": ("--trials", int),
    "frames": ("--frames", int),
    "m_symbols": ("--m-symbols", int),
    "p_ratio": ("--p-ratio", float),
    "out": ("--out", str),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat TOML file with the same keys as the flags (underscored)")
    for key, (flag, typ) in _FLAGS.items():
        common.add_argument(flag, dest=key, type=typ, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="nupilot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("design", parents=[common], help="run the hybrid pilot design")
    ab = sub.add_parser("ablation", parents=[common], help="PSL suppression gain over (K, N_anc)")
    ab.add_argument("--k-list", dest="k_list", default=None)
    ab.add_argument("--n-anc-list", dest="n_anc_list", default=None)
    for name, helptext in (("rmse", "range RMSE versus SNR"), ("ber", "BER versus SNR")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("patterns", nargs="*", help="pattern JSON files")
        p.add_argument("--comb", action="store_true", help="also evaluate the uniform comb of --k pilots")
        p.add_argument("--labels", default=None, help="comma-separated labels, one per pattern file")
    af = sub.add_parser("af-dump", parents=[common], help="export the ambiguity power profile")
    af.add_argument("pattern")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                values.update(tomllib.load(fh))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    for key in list(_FLAGS) + ["k_list", "n_anc_list"]:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        if "snr" in values:
            values["snr"] = parse_snr(values["snr"])
        for key in ("k_list", "n_anc_list"):
            if key in values:
                values[key] = _int_list(values[key])
        cfg = replace(ExperimentConfig(), **values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def _fmt_db(x: float) -> str:
    return f"{x:.4f}" if math.isfinite(x) else "-inf"


def cmd_design(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    pattern, trace = hybrid_design(cfg.grid, cfg.optimizer())
    save_pattern(pattern, out / "pattern.json")
    trace.write_csv(out / "trace.csv")
    comb_db = psl(make_uniform_comb(cfg.grid, cfg.k), cfg.window)[1]
    print(f"psl_db={_fmt_db(trace.final_psl_db)}")
    print(f"stage1_psl_db={_fmt_db(trace.stage1_psl_db)}")
    print(f"comb_psl_db={_fmt_db(comb_db)}")
    if math.isfinite(trace.final_psl_db):
        print(f"delta_psl_db={delta_psl(comb_db, trace.final_psl_db):.4f}")
    print(f"sweeps={trace.sweeps_executed} swaps={trace.swaps_accepted}")
    return 0


def _ablation_rows(cfg: ExperimentConfig):
    grid, window = cfg.grid, cfg.window
    trials = max(cfg.trials, 100)
    for k in cfg.k_list:
        comb = make_uniform_comb(grid, k)
        comb_pilot_db = psl(comb, window)[1]
        for n_anc in cfg.n_anc_list:
            if n_anc > k:
                log.warning("skipping n_anc=%d > k=%d", n_anc, k)
                continue
            ocfg = cfg.optimizer(k=k, n_anc=n_anc)
            patterns = {
                "uniform": comb,
                "greedy": greedy_csm(grid, ocfg)[0],
                "hybrid": hybrid_design(grid, ocfg)[0],
            }
            data_db = {}
            for method, pat in patterns.items():
                # same data realizations for every method in a cell
                rng = np.random.default_rng([cfg.seed, k, n_anc])
                data_db[method] = measure_dpi_floor(pat, cfg.p_ratio, trials, rng, window)[1]
            for method, pat in patterns.items():
                pilot_db = psl(pat, window)[1]
                yield (
                    method,
                    k,
                    n_anc,
                    delta_psl(comb_pilot_db, pilot_db) if math.isfinite(pilot_db) else math.inf,
                    delta_psl(data_db["uniform"], data_db[method]),
                )


def cmd_ablation(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "ablation.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("method,k,n_anc,delta_psl_pilot_only_db,delta_psl_data_db\n")
        for method, k, n_anc, d_pilot, d_data in _ablation_rows(cfg):
            fh.write(f"{method},{k},{n_anc},{_fmt_db(d_pilot)},{_fmt_db(d_data)}\n")
    print(f"wrote {path}")
    return 0


def _patterns(cfg: ExperimentConfig, files: Sequence[str], comb: bool, labels: Optional[str]):
    grid = cfg.grid
    chosen = {}
    names = [s.strip() for s in labels.split(",")] if labels else [Path(f).stem for f in files]
    if len(names) != len(files):
        raise ConfigError("need exactly one label per pattern file")
    if comb:
        chosen["uniform"] = make_uniform_comb(grid, cfg.k)
    for name, f in zip(names, files):
        try:
            pat = load_pattern(f)
        except FileNotFoundError:
            raise ConfigError(f"pattern file not found: {f}") from None
        except (ValueError, PatternError) as exc:
            raise ConfigError(f"bad pattern file {f}: {exc}") from None
        if pat.grid_n != grid.n_subcarriers:
            raise ConfigError(f"{f} is for N={pat.grid_n}, config has N={grid.n_subcarriers}")
        chosen[name] = pat
    if not chosen:
        raise ConfigError("no patterns given")
    if not cfg.snr:
        raise ConfigError("empty SNR grid")
    return chosen


def cmd_rmse(cfg: ExperimentConfig, files, comb=False, labels=None) -> int:
    patterns = _patterns(cfg, files, comb, labels)
    if cfg.trials < 200:
        raise ConfigError(f"trials must be >= 200, got {cfg.trials}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = {
        label: rmse_experiment(pat, cfg.snr, cfg.m_symbols, cfg.trials, cfg.p_ratio, cfg.seed)
        for label, pat in patterns.items()
    }
    write_rmse_csv(rows, cfg.m_symbols, cfg.trials, out / "rmse.csv")
    print(f"wrote {out / 'rmse.csv'}")
    return 0


def cmd_ber(cfg: ExperimentConfig, files, comb=False, labels=None) -> int:
    patterns = _patterns(cfg, files, comb, labels)
    if cfg.frames < 500:
        raise ConfigError(f"frames must be >= 500, got {cfg.frames}")
    if cfg.cp < 1:
        raise ConfigError("ber needs cp >= 1 for the multipath channel")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = {
        label: ber_experiment(pat, cfg.snr, cfg.frames, cfg.p_ratio, cfg.seed, cp_length=cfg.cp)
        for label, pat in patterns.items()
    }
    write_ber_csv(rows, cfg.frames, out / "ber.csv")
    print(f"wrote {out / 'ber.csv'}")
    return 0


def cmd_af_dump(cfg: ExperimentConfig, pattern_file: str) -> int:
    try:
        pat = load_pattern(pattern_file)
    except FileNotFoundError:
        raise ConfigError(f"pattern file not found: {pattern_file}") from None
    except (ValueError, PatternError) as exc:
        raise ConfigError(f"bad pattern file {pattern_file}: {exc}") from None
    window = cfg.window if pat.grid_n == cfg.n else SidelobeWindow.full(pat.grid_n)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"af_{Path(pattern_file).stem}.csv"
    write_af_csv(af_profile(pat, window), path)
    print(f"wrote {path}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        if args.command == "design":
            return cmd_design(cfg)
        if args.command == "ablation":
            return cmd_ablation(cfg)
        if args.command == "rmse":
            return cmd_rmse(cfg, args.patterns, args.comb, args.labels)
        if args.command == "ber":
            return cmd_ber(cfg, args.patterns, args.comb, args.labels)
        return cmd_af_dump(cfg, args.pattern)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
