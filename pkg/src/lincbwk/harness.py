"""Batch experiment runner: configs, seeded episodes, baselines, persistence.

Configuration files are flat ``key = value`` text with dotted keys; unknown
keys are rejected so that drift is caught early.  Each experiment runs
``repeats`` independent episodes whose environments get seeds derived from
the master seed by a documented splitting rule, computes the oracle optimum
once per environment, and persists a per-round CSV per seed plus a summary
JSON.  Setting LINCBWK_THREADS > 1 runs episodes in a process pool; results
are identical to a serial run because every episode owns its seed stream.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import bootstrap, packing, policy
from .dual import DualVector
from .envs import (
    LinearEnvironment,
    export_params_text,
    make_bwk,
    make_ospp,
    make_uniform,
    realize,
    sample_slate,
)
from .errors import ConfigError
from .policy import BudgetLedger, EpisodeLog, RoundRecord

ALGORITHMS = (
    "full",
    "core-with-given-z",
    "oracle-static",
    "unconstrained-linucb",
    "uniform-random",
)
BASELINES = ("oracle-static", "unconstrained-linucb", "uniform-random")

# Seed-splitting rule: episode i uses SeedSequence((master, i)); the oracle
# and baseline-internal streams use the reserved tags below.
_ORACLE_STREAM = 2**31
_RANDOM_ARM_STREAM = 11


def derive_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1, np.uint64)[0])


@dataclass
class ExperimentConfig:
    env_kind: str = "uniform"
    m: int = 3
    d: int = 2
    K: int = 10
    param_seed: int = 0
    noise_scale: float = 1.0
    reward_means: Optional[list] = None  # bwk
    consumption_means: Optional[list] = None  # bwk, d rows of K entries
    options: Optional[list] = None  # ospp, rows of 1+d entries
    algo: str = "full"
    T: int = 1024
    B: float = 256.0
    B_rule: str = "fixed"  # "fixed" | "mT34" (B = B_mult * m * T^{3/4})
    B_mult: float = 4.0
    T0: Optional[int] = None
    delta: float = 0.05
    z: Optional[float] = None
    repeats: int = 1
    seed: int = 0
    out_dir: str = "out"

    def validate(self) -> None:
        if self.env_kind not in ("uniform", "bwk", "ospp"):
            raise ConfigError(f"unknown env.kind {self.env_kind!r}")
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"unknown algo.kind {self.algo!r}")
        if self.algo == "core-with-given-z" and self.z is None:
            raise ConfigError("algo.kind core-with-given-z requires algo.z")
        if self.T < 1 or self.repeats < 1:
            raise ConfigError("run.T and run.repeats must be positive")
        if self.budget() <= 0:
            raise ConfigError("run.B must be positive")
        if not (0 < self.delta < 1):
            raise ConfigError("run.delta must lie in (0, 1)")
        if self.B_rule not in ("fixed", "mT34"):
            raise ConfigError(f"unknown run.B_rule {self.B_rule!r}")
        if self.env_kind == "bwk" and (self.reward_means is None or self.consumption_means is None):
            raise ConfigError("env.kind bwk requires env.reward_means and env.consumption_means")
        if self.env_kind == "ospp" and self.options is None:
            raise ConfigError("env.kind ospp requires env.options")

    def budget(self) -> float:
        if self.B_rule == "mT34":
            return self.B_mult * self.m * self.T**0.75
        return self.B


_KEY_PARSERS = {
    "env.kind": ("env_kind", str),
    "env.m": ("m", int),
    "env.d": ("d", int),
    "env.K": ("K", int),
    "env.param_seed": ("param_seed", int),
    "env.noise_scale": ("noise_scale", float),
    "env.reward_means": ("reward_means", "vector"),
    "env.consumption_means": ("consumption_means", "matrix"),
    "env.options": ("options", "matrix"),
    "algo.kind": ("algo", str),
    "algo.z": ("z", float),
    "run.T": ("T", int),
    "run.B": ("B", float),
    "run.B_rule": ("B_rule", str),
    "run.B_mult": ("B_mult", float),
    "run.T0": ("T0", int),
    "run.delta": ("delta", float),
    "run.repeats": ("repeats", int),
    "run.seed": ("seed", int),
    "run.out": ("out_dir", str),
}


def _parse_vector(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip() != ""]


def _parse_matrix(text: str) -> list:
    return [_parse_vector(row) for row in text.split(";") if row.strip() != ""]


def parse_config(path: str) -> ExperimentConfig:
    """Read a flat dotted-key config file; unknown keys are errors."""
    cfg = ExperimentConfig()
    try:
        with open(path) as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEY_PARSERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        attr, kind = _KEY_PARSERS[key]
        try:
            if kind == "vector":
                parsed = _parse_vector(value)
            elif kind == "matrix":
                parsed = _parse_matrix(value)
            else:
                parsed = kind(value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
        setattr(cfg, attr, parsed)
    cfg.validate()
    return cfg


def build_env(config: ExperimentConfig, seed: int) -> LinearEnvironment:
    """Environment for one episode; ground truth depends only on the config."""
    if config.env_kind == "uniform":
        return make_uniform(
            config.m,
            config.d,
            config.K,
            param_seed=config.param_seed,
            seed=seed,
            noise_scale=config.noise_scale,
        )
    if config.env_kind == "bwk":
        return make_bwk(
            K=config.K,
            reward_means=np.asarray(config.reward_means),
            consumption_means=np.asarray(config.consumption_means),
            seed=seed,
            noise_scale=config.noise_scale,
        )
    return make_ospp(np.asarray(config.options), K=config.K, seed=seed)


@dataclass
class ExperimentSummary:
    per_seed: list[dict]
    aggregate: dict
    opt: float
    config: ExperimentConfig

    def to_json_dict(self) -> dict:
        return {
            "opt": self.opt,
            "per_seed": self.per_seed,
            "aggregate": self.aggregate,
            "config": {
                k: v for k, v in self.config.__dict__.items() if not k.startswith("_")
            },
        }


def _placeholder_theta(d: int) -> DualVector:
    return DualVector(active=np.zeros(d), dummy=1.0)


def baseline(
    name: str,
    env: LinearEnvironment,
    horizon: int,
    budget: float,
    delta: float = 0.05,
    theta_star: Optional[np.ndarray] = None,
) -> EpisodeLog:
    """Comparison policies sharing the hard budget ledger.

    oracle-static prices consumption with the oracle LP's dual multipliers
    and plays the true-parameter argmax each round; unconstrained-linucb is
    the core policy with z = 0; uniform-random picks among the real arms
    uniformly.
    """
    if name == "unconstrained-linucb":
        return policy.run_episode(env, budget, horizon, z=0.0, delta=delta)
    if name not in BASELINES:
        raise ValueError(f"unknown baseline {name!r}")
    if name == "oracle-static" and theta_star is None:
        raise ValueError("oracle-static needs the oracle dual multipliers")

    arm_rng = np.random.default_rng([env.rng_seed, _RANDOM_ARM_STREAM])
    ledger = BudgetLedger(budget=float(budget), horizon=horizon, consumed=np.zeros(env.d))
    theta0 = _placeholder_theta(env.d)
    records: list[RoundRecord] = []
    total = 0.0
    stop_reason = "horizon"
    for t in range(1, horizon + 1):
        if ledger.must_stop():
            stop_reason = "budget"
            break
        slate = sample_slate(env, t)
        scores = np.zeros(slate.shape[1] + 1)
        if name == "uniform-random":
            arm = int(arm_rng.integers(1, slate.shape[1] + 1))
        else:  # oracle-static: true-parameter dual-adjusted argmax
            adj = slate.T @ env.mu_star - (slate.T @ env.w_star) @ theta_star
            scores[1:] = adj
            arm = int(np.argmax(scores))
        if arm == 0:
            r, v = 0.0, np.zeros(env.d)
        else:
            r, v = realize(env, slate[:, arm - 1])
        ledger.charge(v)
        total += r
        records.append(
            RoundRecord(
                t=t,
                arm=arm,
                reward=r,
                consumption=v,
                theta=theta0,
                adjusted_scores=scores,
                phase="exploit",
            )
        )
    return EpisodeLog(
        records=records,
        total_reward=total,
        stop_round=len(records),
        stop_reason=stop_reason,
        z_used=math.nan,
        budget=float(budget),
        horizon=horizon,
        consumed=ledger.consumed,
    )


def run_one_episode(config: ExperimentConfig, index: int, theta_star=None) -> EpisodeLog:
    """Episode ``index`` of an experiment, on its derived seed."""
    env = build_env(config, derive_seed(config.seed, index))
    budget, horizon = config.budget(), config.T
    if config.algo == "full":
        return bootstrap.run_full(env, budget, horizon, t0=config.T0, delta=config.delta)
    if config.algo == "core-with-given-z":
        return policy.run_episode(env, budget, horizon, z=config.z, delta=config.delta)
    return baseline(config.algo, env, horizon, budget, delta=config.delta, theta_star=theta_star)


def write_round_csv(path: str, log: EpisodeLog) -> None:
    """Per-round CSV, one row per played round.

    Columns: t, phase, arm, reward, v_1..v_d, theta_1..theta_d, theta_dummy,
    cum_reward, budget_left_1..budget_left_d.  Floats carry 9 significant
    digits; budget_left is against the episode's global budget.
    """
    d = log.consumed.shape[0]
    header = (
        ["t", "phase", "arm", "reward"]
        + [f"v_{j + 1}" for j in range(d)]
        + [f"theta_{j + 1}" for j in range(d)]
        + ["theta_dummy", "cum_reward"]
        + [f"budget_left_{j + 1}" for j in range(d)]
    )
    cum_reward = 0.0
    left = np.full(d, log.budget)
    with open(path, "w", newline="") as handle:
        handle.write(",".join(header) + "\n")
        for rec in log.records:
            cum_reward += rec.reward
            left = left - rec.consumption
            row = [str(rec.t), rec.phase, str(rec.arm), f"{rec.reward:.9g}"]
            row += [f"{v:.9g}" for v in rec.consumption]
            row += [f"{v:.9g}" for v in rec.theta.active]
            row += [f"{rec.theta.dummy:.9g}", f"{cum_reward:.9g}"]
            row += [f"{v:.9g}" for v in left]
            handle.write(",".join(row) + "\n")


def _seed_row(index: int, log: EpisodeLog, opt: float) -> dict:
    return {
        "seed_index": index,
        "total_reward": log.total_reward,
        "opt": opt,
        "regret": opt - log.total_reward,
        "stop_round": log.stop_round,
        "stop_reason": log.stop_reason,
        "z_used": None if math.isnan(log.z_used) else log.z_used,
        "opt_estimate": log.opt_estimate,
        "gamma_value": log.gamma_value,
    }


def _quartiles(values: list[float]) -> dict:
    arr = np.sort(np.asarray(values, dtype=float))
    return {
        "median": float(np.median(arr)),
        "q1": float(np.quantile(arr, 0.25)),
        "q3": float(np.quantile(arr, 0.75)),
    }


def _worker(config: ExperimentConfig, index: int, theta_star, opt: float, out_dir: str) -> dict:
    log = run_one_episode(config, index, theta_star=theta_star)
    write_round_csv(os.path.join(out_dir, f"rounds_{index:03d}.csv"), log)
    return _seed_row(index, log, opt)


def thread_cap() -> int:
    raw = os.environ.get("LINCBWK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def oracle_for_config(config: ExperimentConfig) -> packing.PackingSolution:
    """The static-policy oracle LP for this experiment's environment."""
    env = build_env(config, derive_seed(config.seed, _ORACLE_STREAM))
    n_samples = max(10_000, 10 * config.T)
    return packing.oracle_solution(
        env,
        config.budget(),
        config.T,
        n_samples=n_samples,
        seed=derive_seed(config.seed, _ORACLE_STREAM),
    )


def run(config: ExperimentConfig, out_dir: Optional[str] = None) -> ExperimentSummary:
    """Execute the experiment: oracle once, then all seeded episodes.

    Writes rounds_###.csv per seed, env_params.txt, and summary.json under
    the output directory, and returns the in-memory summary.
    """
    config.validate()
    out = out_dir or config.out_dir
    os.makedirs(out, exist_ok=True)

    oracle_sol = oracle_for_config(config)
    opt = oracle_sol.value
    theta_star = oracle_sol.duals if config.algo == "oracle-static" else None

    workers = min(thread_cap(), config.repeats)
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_worker, config, i, theta_star, opt, out)
                for i in range(config.repeats)
            ]
            rows = [f.result() for f in futures]
        rows.sort(key=lambda r: r["seed_index"])
    else:
        rows = [_worker(config, i, theta_star, opt, out) for i in range(config.repeats)]

    aggregate = {
        "regret": _quartiles([r["regret"] for r in rows]),
        "total_reward": _quartiles([r["total_reward"] for r in rows]),
    }
    summary = ExperimentSummary(per_seed=rows, aggregate=aggregate, opt=opt, config=config)

    with open(os.path.join(out, "env_params.txt"), "w") as handle:
        handle.write(export_params_text(build_env(config, 0)))
    with open(os.path.join(out, "summary.json"), "w") as handle:
        json.dump(summary.to_json_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")
    return summary


def sweep(
    config: ExperimentConfig,
    axis: str,
    values: list,
    out_dir: Optional[str] = None,
) -> list[ExperimentSummary]:
    """Run the experiment across one axis (T, B or m) and combine the results.

    Emits sweep_seeds.csv (a row per seed per point), sweep_summary.csv
    (medians, quartiles and the regret ratio against the point at a quarter
    of the axis value, when present) and sweep_summary.json.
    """
    if axis not in ("T", "B", "m"):
        raise ConfigError(f"sweep axis must be T, B or m, got {axis!r}")
    out = out_dir or config.out_dir
    os.makedirs(out, exist_ok=True)

    summaries: list[ExperimentSummary] = []
    for value in values:
        if axis == "T":
            point = replace(config, T=int(value))
        elif axis == "B":
            point = replace(config, B=float(value), B_rule="fixed")
        else:
            point = replace(config, m=int(value))
        point_dir = os.path.join(out, f"{axis}_{value}")
        summaries.append(run(point, out_dir=point_dir))

    with open(os.path.join(out, "sweep_seeds.csv"), "w", newline="") as handle:
        handle.write("axis,value,seed_index,total_reward,opt,regret,stop_reason,z_used\n")
        for value, summary in zip(values, summaries):
            for row in summary.per_seed:
                z_txt = "" if row["z_used"] is None else f"{row['z_used']:.9g}"
                handle.write(
                    f"{axis},{value},{row['seed_index']},{row['total_reward']:.9g},"
                    f"{row['opt']:.9g},{row['regret']:.9g},{row['stop_reason']},{z_txt}\n"
                )

    medians = {
        float(value): summary.aggregate["regret"]["median"]
        for value, summary in zip(values, summaries)
    }
    summary_rows = []
    for value, summary in zip(values, summaries):
        quarter = float(value) / 4 if axis in ("T", "B") else None
        ratio = ""
        if quarter in medians and medians[quarter] > 0:
            ratio = f"{medians[float(value)] / medians[quarter]:.9g}"
        reg = summary.aggregate["regret"]
        summary_rows.append(
            {
                "axis": axis,
                "value": value,
                "median_regret": reg["median"],
                "q1_regret": reg["q1"],
                "q3_regret": reg["q3"],
                "opt": summary.opt,
                "ratio_vs_quarter": ratio,
            }
        )
    with open(os.path.join(out, "sweep_summary.csv"), "w", newline="") as handle:
        handle.write("axis,value,median_regret,q1_regret,q3_regret,opt,ratio_vs_quarter\n")
        for row in summary_rows:
            handle.write(
                f"{row['axis']},{row['value']},{row['median_regret']:.9g},"
                f"{row['q1_regret']:.9g},{row['q3_regret']:.9g},{row['opt']:.9g},"
                f"{row['ratio_vs_quarter']}\n"
            )
    with open(os.path.join(out, "sweep_summary.json"), "w") as handle:
        json.dump(summary_rows, handle, indent=2)
        handle.write("\n")
    return summaries
