"""Command-line entry point: simulation studies, filtering, calibration.

Usage::

    artifact simulate  --config table1_ou.cfg --out results/ [--paths N] [--seed S]
    artifact calibrate --config calib.cfg --data quotes.csv --out results/ [--states J]
    artifact filter    --config table2_jump.cfg --data quotes.csv --out results/

Configs are flat JSON objects; unknown keys are rejected.  Rates may be
stated per hour or per second (``rate_unit``); they are normalised to
per-hour internally (rates scale by 3600, diffusion volatility by 60) and
calibration reports are converted back to the declared unit.  All CSV
output uses shortest round-trip float formatting, so identical configs
and seeds give byte-identical files.

Dataset CSV schema: header ``day,t,F`` with ``t`` in seconds on a uniform
grid per day.  Price increments larger than one tick are truncated to
one tick (the count of truncations is reported); increments off the tick
grid are rejected with their line number.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .calibration import Dataset, JumpModelCalibrator, default_init
from .control import CostParams
from .filtering import FilterState, ObservationStep, jump_filter_step, normalize
from .latent_chain import LatentChainSpec
from .simulator import JumpModel, OUModel, StudyConfig, monte_carlo_study

SECONDS_PER_HOUR = 3600.0


class ConfigError(ValueError):
    """Bad configuration file or flags."""


class DataFormatError(ValueError):
    """Malformed dataset CSV."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_SCHEMA = {
    # model selection and units
    "model": str,                 # "ou" | "jump"
    "rate_unit": str,             # "per_hour" | "per_second"
    # latent chain
    "theta": list,
    "prior": list,
    "generator": list,
    # market dynamics
    "kappa": float,
    "sigma": float,
    "mu": float,
    "b": float,
    "F0": float,
    # costs and horizon
    "a": float,
    "beta": float,
    "phi": float,
    "alpha": (float, str),        # number or "inf"
    "N_init": float,
    "T": float,
    "n_steps": int,
    # study options
    "n_paths": int,
    "seed": int,
    "n_slices": int,
    "n_bins": int,
    "n_sample_paths": int,
    "theta_true": float,
    "theta_path": list,
    # calibration options
    "states_min": int,
    "states_max": int,
    "em_tol": float,
    "em_max_iter": int,
    # output
    "out_dir": str,
}

_DEFAULTS = {
    "rate_unit": "per_hour",
    "generator": None,
    "sigma": 0.0,
    "mu": 0.0,
    "b": 0.01,
    "F0": 5.0,
    "beta": 0.0,
    "phi": 0.0,
    "alpha": "inf",
    "N_init": 0.0,
    "n_paths": 5000,
    "seed": 0,
    "n_slices": 61,
    "n_bins": 41,
    "n_sample_paths": 3,
    "theta_true": None,
    "theta_path": None,
    "states_min": 1,
    "states_max": 3,
    "em_tol": 1e-8,
    "em_max_iter": 500,
    "out_dir": ".",
}


class RunConfig:
    """Validated, unit-normalised configuration (rates per hour)."""

    def __init__(self, raw: dict):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(raw) - set(_SCHEMA))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "model" not in raw:
            raise ConfigError("config must set 'model' to 'ou' or 'jump'")
        values = dict(_DEFAULTS)
        values.update(raw)
        for key, val in values.items():
            if val is None:
                continue
            want = _SCHEMA[key]
            is_number = isinstance(val, (int, float)) and not isinstance(val, bool)
            if want is float:
                if not is_number:
                    raise ConfigError(f"config key '{key}' must be a number")
                values[key] = float(val)
            elif want is int:
                if isinstance(val, bool) or not isinstance(val, int):
                    raise ConfigError(f"config key '{key}' must be an integer")
            elif isinstance(want, tuple):                       # number or "inf"
                if val == "inf":
                    values[key] = math.inf
                elif is_number:
                    values[key] = float(val)
                else:
                    raise ConfigError(f"config key '{key}' must be a number or 'inf'")
            elif not isinstance(val, want):
                raise ConfigError(f"config key '{key}' must be of type {want.__name__}")
        if values["model"] not in ("ou", "jump"):
            raise ConfigError("'model' must be 'ou' or 'jump'")
        if values["rate_unit"] not in ("per_hour", "per_second"):
            raise ConfigError("'rate_unit' must be 'per_hour' or 'per_second'")
        if values["rate_unit"] == "per_second":
            for key in ("kappa", "mu"):
                if values.get(key) is not None:
                    values[key] = values[key] * SECONDS_PER_HOUR
            if values.get("sigma") is not None:
                values["sigma"] = values["sigma"] * math.sqrt(SECONDS_PER_HOUR)
            if values.get("generator") is not None:
                values["generator"] = [[c * SECONDS_PER_HOUR for c in row]
                                       for row in values["generator"]]
        self._v = values

    def __getitem__(self, key):
        return self._v[key]

    def get(self, key, default=None):
        return self._v.get(key, default)

    def require(self, *keys):
        missing = [k for k in keys if self._v.get(k) is None]
        if missing:
            raise ConfigError(f"missing config keys: {', '.join(missing)}")

    @property
    def rate_unit(self) -> str:
        return self._v["rate_unit"]

    def chain(self) -> LatentChainSpec:
        self.require("theta", "prior")
        theta = np.asarray(self._v["theta"], dtype=float)
        gen = self._v["generator"]
        if gen is None:
            gen = np.zeros((theta.size, theta.size))
        return LatentChainSpec(theta=theta,
                               generator=np.asarray(gen, dtype=float),
                               prior=np.asarray(self._v["prior"], dtype=float))

    def cost(self) -> CostParams:
        self.require("a", "T")
        return CostParams(a=self._v["a"], b=self._v["b"], beta=self._v["beta"],
                          phi=self._v["phi"], alpha=self._v["alpha"],
                          T=self._v["T"], N_init=self._v["N_init"])

    def study(self) -> StudyConfig:
        chain = self.chain()
        if self._v["model"] == "ou":
            self.require("kappa", "sigma", "theta_true", "n_steps")
            model = OUModel(chain=chain, kappa=self._v["kappa"],
                            sigma=self._v["sigma"])
            theta_path = None
        else:
            self.require("kappa", "mu", "b", "theta_path", "n_steps")
            model = JumpModel(chain=chain, mu=self._v["mu"],
                              kappa=self._v["kappa"], b=self._v["b"])
            theta_path = tuple((float(t), float(v)) for t, v in self._v["theta_path"])
        return StudyConfig(model=model, cost=self.cost(), F0=self._v["F0"],
                           n_steps=self._v["n_steps"], n_paths=self._v["n_paths"],
                           seed=self._v["seed"], theta_true=self._v["theta_true"],
                           theta_path=theta_path, n_slices=self._v["n_slices"],
                           n_bins=self._v["n_bins"],
                           n_sample_paths=self._v["n_sample_paths"])


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig(raw)


# ---------------------------------------------------------------------------
# CSV helpers (deterministic formatting)
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


# ---------------------------------------------------------------------------
# dataset ingestion
# ---------------------------------------------------------------------------

def read_dataset(path: str, b: float):
    """Read a ``day,t,F`` CSV; return ``(days, t_seconds, F, n_truncated)``.

    ``F`` is ``(D, K)`` with increments snapped onto the tick grid:
    increments beyond one tick are truncated to one tick (counted),
    off-grid increments raise :class:`DataFormatError` with the line
    number.  All days must share the same uniform time grid.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataFormatError(f"cannot read data {path}: {exc}") from exc
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    if lines[0].strip() != "day,t,F":
        raise DataFormatError(f"{path}:1: expected header 'day,t,F'")
    by_day: dict[int, list[tuple[float, float]]] = {}
    order: list[int] = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise DataFormatError(f"{path}:{i}: expected 3 fields, got {len(parts)}")
        try:
            day = int(parts[0])
            t = float(parts[1])
            F = float(parts[2])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{i}: {exc}") from exc
        if day not in by_day:
            by_day[day] = []
            order.append(day)
        by_day[day].append((t, F))
    if not order:
        raise DataFormatError(f"{path}: no data rows")
    lengths = {len(v) for v in by_day.values()}
    if len(lengths) != 1:
        raise DataFormatError(f"{path}: days have unequal numbers of observations")
    K = lengths.pop()
    if K < 2:
        raise DataFormatError(f"{path}: need at least 2 observations per day")
    t0 = np.array([t for t, _ in by_day[order[0]]])
    dt_grid = np.diff(t0)
    if dt_grid.size and (dt_grid.max() - dt_grid.min()) > 1e-9 * max(1.0, dt_grid.max()):
        raise DataFormatError(f"{path}: time grid is not uniform")
    raw_F = np.empty((len(order), K))
    for d, day in enumerate(order):
        rows = by_day[day]
        tt = np.array([t for t, _ in rows])
        if np.max(np.abs(tt - t0)) > 1e-9 * max(1.0, float(t0[-1]) or 1.0):
            raise DataFormatError(f"{path}: day {day} has a different time grid")
        raw_F[d] = [F for _, F in rows]
    dF = np.diff(raw_F, axis=1)
    steps = np.rint(dF / b)
    off_grid = np.abs(dF - steps * b) > 1e-9 * max(1.0, b)
    if np.any(off_grid):
        d, k = np.argwhere(off_grid)[0]
        line = 2 + d * K + (k + 1)
        raise DataFormatError(f"{path}:{line}: increment {dF[d, k]!r} is not a "
                              f"multiple of the tick {b!r}")
    n_trunc = int(np.sum(np.abs(steps) > 1))
    steps = np.clip(steps, -1, 1)
    F = np.concatenate([raw_F[:, :1], raw_F[:, :1] + np.cumsum(steps * b, axis=1)],
                       axis=1)
    return np.array(order), t0, F, n_trunc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _seconds(times_hours: np.ndarray, T: float, n_steps: int) -> np.ndarray:
    # exact k * (T*3600/n_steps) for byte-stable output
    k = np.rint(times_hours / (T / n_steps)).astype(int)
    return k * (T * SECONDS_PER_HOUR / n_steps)


def cmd_simulate(cfg: RunConfig, out_dir: str) -> int:
    study_cfg = cfg.study()
    summary = monte_carlo_study(study_cfg)
    os.makedirs(out_dir, exist_ok=True)
    T, n_steps = cfg["T"], cfg["n_steps"]

    rows = [("model", summary.model), ("n_paths", summary.n_paths),
            ("seed", summary.seed)]
    rows += [(k, v) for k, v in summary.metrics.items()]
    write_csv(os.path.join(out_dir, "summary.csv"), ("metric", "value"), rows)

    for grid in summary.grids:
        t_sec = _seconds(grid.times, T, n_steps)
        grid_rows = []
        for s in range(t_sec.size):
            for i in range(grid.edges.size - 1):
                grid_rows.append((t_sec[s], grid.edges[i], grid.edges[i + 1],
                                  int(grid.counts[s, i])))
        write_csv(os.path.join(out_dir, f"grid_{grid.name}.csv"),
                  ("t", "bin_lo", "bin_hi", "count"), grid_rows)

    hist_rows = [(summary.hist_edges[i], summary.hist_edges[i + 1],
                  int(summary.hist_counts[i]))
                 for i in range(summary.hist_edges.size - 1)]
    write_csv(os.path.join(out_dir, "histogram.csv"),
              ("bin_lo", "bin_hi", "count"), hist_rows)

    n_levels = study_cfg.model.chain.n_states
    header = ["path", "t", "F", "S", "Q", "X", "nu", "level"] \
        + [f"pi_{j + 1}" for j in range(n_levels)]
    path_rows = []
    for p, rec in enumerate(summary.sample_paths):
        t_sec = _seconds(rec.times, T, n_steps)
        n = rec.nu.size
        for k in range(t_sec.size):
            nu_k = rec.nu[k] if k < n else math.nan
            lev = rec.levels[k] if rec.levels is not None else math.nan
            row = [p, t_sec[k], rec.F[k], rec.S[k], rec.Q[k], rec.X[k], nu_k, lev]
            row += list(rec.pi[k]) if rec.pi is not None else [math.nan] * n_levels
            path_rows.append(row)
    write_csv(os.path.join(out_dir, "paths_sample.csv"), header, path_rows)

    print(f"simulate: wrote {3 + len(summary.grids)} CSV files to {out_dir} "
          f"({summary.elapsed_seconds:.1f}s, {summary.n_paths} paths)")
    return 0


def cmd_calibrate(cfg: RunConfig, data_path: str, out_dir: str,
                  states: int | None = None) -> int:
    b = cfg["b"]
    days, t_sec, F, n_trunc = read_dataset(data_path, b)
    if n_trunc:
        print(f"calibrate: truncated {n_trunc} multi-tick increments to one tick",
              file=sys.stderr)
    dt_hours = float(t_sec[1] - t_sec[0]) / SECONDS_PER_HOUR
    if states is not None:
        j_range = [states]
    else:
        j_range = list(range(cfg["states_min"], cfg["states_max"] + 1))
    if not j_range or min(j_range) < 1:
        raise ConfigError("the number of states must be at least 1")
    os.makedirs(out_dir, exist_ok=True)
    unit_scale = SECONDS_PER_HOUR if cfg.rate_unit == "per_second" else 1.0
    selection_rows = []
    for J in j_range:
        cal = JumpModelCalibrator(n_states=J, b=b, dt=dt_hours, tol=cfg["em_tol"],
                                  max_iter=cfg["em_max_iter"], seed=cfg["seed"])
        cal.fit(F)
        p = cal.params_
        gen = cal.generator_ / unit_scale
        state_rows = []
        for j in range(J):
            row = [j + 1, p.pi0[j], p.mu[j] / unit_scale, p.kappa[j] / unit_scale,
                   p.theta[j]] + [gen[j, i] for i in range(J)]
            state_rows.append(row)
        header = ["state", "pi0", "mu", "kappa", "theta"] \
            + [f"c_{i + 1}" for i in range(J)]
        write_csv(os.path.join(out_dir, f"fit_states{J}.csv"), header, state_rows)
        selection_rows.append((J, cal.loglik_, cal.n_params_, cal.bic_, cal.icl_))
        print(f"calibrate: J={J} loglik={cal.loglik_:.3f} "
              f"({cal.n_iter_} EM iterations, converged={cal.converged_})")
    write_csv(os.path.join(out_dir, "model_selection.csv"),
              ("J", "loglik", "n_params", "bic", "icl"), selection_rows)
    return 0


def cmd_filter(cfg: RunConfig, data_path: str, out_dir: str) -> int:
    chain = cfg.chain()
    b = cfg["b"]
    days, t_sec, F, n_trunc = read_dataset(data_path, b)
    if n_trunc:
        print(f"filter: truncated {n_trunc} multi-tick increments to one tick",
              file=sys.stderr)
    dt_hours = float(t_sec[1] - t_sec[0]) / SECONDS_PER_HOUR
    os.makedirs(out_dir, exist_ok=True)
    header = ["t"] + [f"pi_{j + 1}" for j in range(chain.n_states)]
    model = cfg["model"]
    if model == "ou":
        cfg.require("kappa", "sigma")
        from .filtering import ou_filter_from_path
        for d, day in enumerate(days):
            pi = ou_filter_from_path(chain, cfg["kappa"], cfg["sigma"], F[d], dt_hours)
            rows = [[t_sec[k]] + list(pi[k]) for k in range(t_sec.size)]
            write_csv(os.path.join(out_dir, f"posterior_day{day}.csv"), header, rows)
    else:
        cfg.require("kappa", "mu")
        C = chain.generator if np.max(np.abs(chain.generator)) > 0 else None
        for d, day in enumerate(days):
            state = FilterState.from_prior(chain.prior)
            rows = [[t_sec[0]] + list(normalize(state))]
            moves = np.rint(np.diff(F[d]) / b).astype(int)
            for k, mv in enumerate(moves):
                obs = ObservationStep(dt=dt_hours, dF=float(F[d, k + 1] - F[d, k]),
                                      dn_plus=int(mv > 0), dn_minus=int(mv < 0))
                state = jump_filter_step(state, obs, chain.theta, cfg["mu"],
                                         cfg["kappa"], b, float(F[d, k]), C=C)
                rows.append([t_sec[k + 1]] + list(normalize(state)))
            write_csv(os.path.join(out_dir, f"posterior_day{day}.csv"), header, rows)
    print(f"filter: wrote {len(days)} posterior files to {out_dir}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artifact",
        description="Optimal trading under latent price-pressure regimes: "
                    "simulation studies, filtering and calibration.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_data in (("simulate", False), ("calibrate", True),
                             ("filter", True)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat JSON config file")
        p.add_argument("--data", required=needs_data,
                       help="dataset CSV with header day,t,F")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--paths", type=int, default=None,
                       help="number of Monte Carlo paths override")
        p.add_argument("--states", type=int, default=None,
                       help="fit exactly this number of regimes (calibrate)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg._v["seed"] = args.seed
        if args.paths is not None:
            if args.paths < 1:
                raise ConfigError("--paths must be positive")
            cfg._v["n_paths"] = args.paths
        out_dir = args.out if args.out is not None else cfg["out_dir"]
        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir)
        if args.command == "calibrate":
            return cmd_calibrate(cfg, args.data, out_dir, states=args.states)
        return cmd_filter(cfg, args.data, out_dir)
    except (ConfigError, DataFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
