"""Configuration-driven experiment runner with machine-readable outputs.

Experiments are described by JSON configs (see configs/ for the bundled
benchmark scenarios), validated against a strict schema: unknown keys are
rejected with their field path, so a typo cannot silently change a run.
Every run writes its artifacts (trajectory CSVs, gain/certificate/log JSON,
a config echo, and a result summary) into an output directory; re-running
the same config with the same seed reproduces the CSV bytes exactly.

Verbs:  run <config>        execute one experiment
        compare <result>... tabulate J values and gaps across finished runs
        sweep <config> --param <path> --values v1,v2,...

Exit codes: 0 ok, 2 usage/config error, 3 diverged, 4 infeasible or
non-converged learning.  A learning run never exits 0 unless the final
closed-loop linear block is Hurwitz and the iteration converged.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .carleman_lift import closed_loop_matrix, monomial_basis
from .errors import (CarlearnError, ConfigError, DivergedError,
                     IllConditionedError, InfeasibleError,
                     InvalidArgumentError, NotConvergedError)
from .noise import NoiseConfig
from .plant_sim import (CostWeights, build_model, cost_functional,
                        formation_errors, hjb_oscillator_control, integrate,
                        oscillator_plant, oscillator_weights, tugboat_basis,
                        tugboat_cost, tugboat_plant, tugboat_weights)
from .policy_iteration import (FeedbackGain, FrozenBatch, LearningConfig,
                               initial_gain, run_off_policy, run_on_policy)
from .riccati import is_hurwitz
from .serialize import (certificate_to_json, gain_to_json, log_to_json,
                        read_json, table_to_csv, trajectory_to_csv,
                        write_json)
from .sparse_synthesis import AdmmConfig, bandwidth_metric, run_sparse
from .structured_synthesis import (StructureMask, structured_model_based,
                                   structured_model_free)

CONFIG_VERSION = 1
MODES = ("on-policy", "off-policy", "structured", "sparse", "hjb-baseline",
         "open-loop")
LEARNING_MODES = ("on-policy", "off-policy", "structured", "sparse")

# allowed keys per config section; validation walks this tree
_SCHEMA = {
    "": {"version", "name", "mode", "seed", "plant", "order", "weights",
         "learning", "eval", "mask", "admm", "sweep", "output_dir"},
    "plant": {"kind", "boats"},
    "weights": {"q1", "r", "coupling", "q_scale"},
    "learning": {"t_window", "dt", "eps", "max_iters", "ridge", "noise",
                 "starts", "behavior", "method"},
    "learning.noise": {"kind", "amplitude", "seed", "n_components",
                       "freq_range", "period"},
    "learning.starts": {"explicit", "segments", "seed", "spread"},
    "learning.starts.spread": {"position", "yaw", "velocity", "yaw_rate"},
    "eval": {"states", "t_final", "dt", "j_scale"},
    "mask": {"adjacency"},
    "admm": {"gamma", "rho0", "alpha", "eps_k", "eps_l", "max_inner",
             "reweight"},
    "sweep": {"param", "values"},
}


def _check_keys(obj: dict, section: str) -> None:
    allowed = _SCHEMA[section]
    for key in obj:
        if key not in allowed:
            where = f"{section}.{key}" if section else key
            raise ConfigError(f"unknown config key: {where}")
        sub = f"{section}.{key}" if section else key
        if sub in _SCHEMA:
            if not isinstance(obj[key], dict):
                raise ConfigError(f"{sub}: expected an object")
            _check_keys(obj[key], sub)


def _require(obj: dict, key: str, section: str = ""):
    if key not in obj:
        where = f"{section}.{key}" if section else key
        raise ConfigError(f"missing config key: {where}")
    return obj[key]


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description plus the raw dict it came from."""

    raw: dict

    def __post_init__(self):
        raw = self.raw
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        _check_keys(raw, "")
        if _require(raw, "version") != CONFIG_VERSION:
            raise ConfigError(
                f"version: expected {CONFIG_VERSION}, got {raw['version']}")
        if not isinstance(_require(raw, "name"), str):
            raise ConfigError("name: expected a string")
        if _require(raw, "mode") not in MODES:
            raise ConfigError(
                f"mode: expected one of {', '.join(MODES)}, got {raw['mode']!r}")
        if not isinstance(_require(raw, "seed"), int):
            raise ConfigError("seed: expected an integer")
        plant = _require(raw, "plant")
        if _require(plant, "kind", "plant") not in ("oscillator", "tugboat"):
            raise ConfigError("plant.kind: expected 'oscillator' or 'tugboat'")
        if self.mode in LEARNING_MODES:
            order = _require(raw, "order")
            if not isinstance(order, int) or order < 1:
                raise ConfigError("order: expected a positive integer")
        if self.mode in ("on-policy", "off-policy", "sparse") or (
                self.mode == "structured"
                and raw.get("learning", {}).get("method") == "model-free"):
            _require(raw, "learning")
        if self.mode == "structured":
            _require(raw, "mask")
            adjacency = _require(raw["mask"], "adjacency", "mask")
            if not isinstance(adjacency, list):
                raise ConfigError("mask.adjacency: expected a matrix")
        if self.mode == "sparse":
            _require(raw, "admm")
            _require(raw["admm"], "gamma", "admm")
        ev = _require(raw, "eval")
        states = _require(ev, "states", "eval")
        if not isinstance(states, dict) or not states:
            raise ConfigError("eval.states: expected a non-empty object")
        _require(ev, "t_final", "eval")
        _require(ev, "dt", "eval")
        if "sweep" in raw:
            _require(raw["sweep"], "param", "sweep")
            values = _require(raw["sweep"], "values", "sweep")
            if not isinstance(values, list) or not values:
                raise ConfigError("sweep.values: expected a non-empty list")

    @property
    def name(self) -> str:
        return self.raw["name"]

    @property
    def mode(self) -> str:
        return self.raw["mode"]

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    def get(self, path: str, default=None):
        obj = self.raw
        for part in path.split("."):
            if not isinstance(obj, dict) or part not in obj:
                return default
            obj = obj[part]
        return obj


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ExperimentConfig(raw)


@dataclass
class ResultBundle:
    """Everything a finished run leaves behind, with file paths."""

    name: str
    mode: str
    output_dir: Path
    seed: int
    tool_version: str = __version__
    order: int | None = None
    j_values: dict = field(default_factory=dict)
    iterations: int | None = None
    timesteps: int | None = None
    converged: bool | None = None
    metrics: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode,
            "output_dir": str(self.output_dir),
            "seed": self.seed,
            "tool_version": self.tool_version,
            "order": self.order,
            "j_values": self.j_values,
            "iterations": self.iterations,
            "timesteps": self.timesteps,
            "converged": self.converged,
            "metrics": self.metrics,
            "files": {k: str(v) for k, v in self.files.items()},
        }


def _build_plant(config: ExperimentConfig):
    kind = config.get("plant.kind")
    if kind == "oscillator":
        return oscillator_plant()
    return tugboat_plant(int(config.get("plant.boats", 4)))


def _build_weights(config: ExperimentConfig, plant) -> CostWeights:
    w = config.get("weights", {})
    if "q1" in w or "r" in w:
        if not ("q1" in w and "r" in w):
            raise ConfigError("weights: q1 and r must be given together")
        return CostWeights(np.asarray(w["q1"], dtype=float),
                           np.asarray(w["r"], dtype=float))
    if config.get("plant.kind") == "oscillator":
        return oscillator_weights()
    return tugboat_weights(plant.boats, float(w.get("coupling", 1.0)),
                           float(w.get("q_scale", 1.0)))


def _build_basis(config: ExperimentConfig, plant):
    order = config.get("order", 1)
    if config.get("plant.kind") == "tugboat":
        return tugboat_basis(plant.boats, order)
    return monomial_basis(plant.n, order)


def _sample_starts(config: ExperimentConfig, plant) -> np.ndarray:
    starts = config.get("learning.starts")
    if starts is None:
        raise ConfigError("missing config key: learning.starts")
    if "explicit" in starts:
        return np.asarray(starts["explicit"], dtype=float)
    if config.get("plant.kind") != "tugboat":
        raise ConfigError(
            "learning.starts.spread sampling is defined for the tugboat plant;"
            " use learning.starts.explicit")
    segments = int(_require(starts, "segments", "learning.starts"))
    spread = _require(starts, "spread", "learning.starts")
    seed = int(starts.get("seed", config.seed))
    rng = np.random.default_rng(seed)
    pos = float(spread.get("position", 0.0))
    yaw = float(spread.get("yaw", 0.0))
    vel = float(spread.get("velocity", 0.0))
    rate = float(spread.get("yaw_rate", 0.0))
    n = plant.n
    out = np.zeros((segments, n))
    out[:, 0::6] = rng.uniform(-pos, pos, (segments, plant.boats))
    out[:, 1::6] = rng.uniform(-pos, pos, (segments, plant.boats))
    out[:, 2::6] = rng.uniform(-yaw, yaw, (segments, plant.boats))
    out[:, 3::6] = rng.uniform(-vel, vel, (segments, plant.boats))
    out[:, 4::6] = rng.uniform(-vel, vel, (segments, plant.boats))
    out[:, 5::6] = rng.uniform(-rate, rate, (segments, plant.boats))
    return out


def _noise_config(config: ExperimentConfig) -> NoiseConfig:
    spec = config.get("learning.noise")
    if spec is None:
        raise ConfigError("missing config key: learning.noise")
    kwargs = {"kind": _require(spec, "kind", "learning.noise"),
              "amplitude": float(_require(spec, "amplitude", "learning.noise")),
              "seed": int(spec.get("seed", config.seed))}
    if "n_components" in spec:
        kwargs["n_components"] = int(spec["n_components"])
    if "freq_range" in spec:
        kwargs["freq_range"] = tuple(spec["freq_range"])
    if "period" in spec:
        kwargs["period"] = float(spec["period"])
    return NoiseConfig(**kwargs)


def _learning_config(config: ExperimentConfig, x0: np.ndarray) -> LearningConfig:
    learn = config.get("learning", {})
    return LearningConfig(
        x0=x0,
        t_window=float(_require(learn, "t_window", "learning")),
        dt=float(_require(learn, "dt", "learning")),
        noise=_noise_config(config),
        max_iters=int(learn.get("max_iters", 20)),
        eps=float(learn.get("eps", 1e-4)),
        ridge=float(learn.get("ridge", 1e-10)),
    )


def _behavior_gain(config: ExperimentConfig, model, weights) -> FeedbackGain | None:
    kind = config.get("learning.behavior", "initial")
    if kind == "initial":
        return None
    if kind != "static-yaw":
        raise ConfigError(
            f"learning.behavior: expected 'initial' or 'static-yaw', got {kind!r}")
    if config.get("plant.kind") != "tugboat":
        raise ConfigError("learning.behavior static-yaw needs the tugboat plant")
    k = initial_gain(model, weights).k_matrix.copy()
    k[2::3, :] = 0.0
    return FeedbackGain(k, model.basis, "initial")


def _eval_states(config: ExperimentConfig, plant) -> dict[str, np.ndarray]:
    out = {}
    for name, state in config.get("eval.states").items():
        x0 = np.asarray(state, dtype=float)
        if x0.shape != (plant.n,):
            raise ConfigError(
                f"eval.states.{name}: expected {plant.n} entries, got {x0.size}")
        out[name] = x0
    return out


def _score(config: ExperimentConfig, plant, weights, traj) -> float:
    if config.get("plant.kind") == "tugboat":
        return tugboat_cost(traj, float(config.get("weights.coupling", 1.0)))
    j_scale = float(config.get("eval.j_scale", 1.0))
    return j_scale * cost_functional(traj, weights)


def _rollout_all(config: ExperimentConfig, plant, weights, controller,
                 bundle: ResultBundle) -> None:
    t_final = float(config.get("eval.t_final"))
    dt = float(config.get("eval.dt"))
    for name, x0 in _eval_states(config, plant).items():
        traj = integrate(plant, controller, x0, (0.0, t_final), dt)
        path = bundle.output_dir / f"eval_{name}.csv"
        trajectory_to_csv(traj, path)
        bundle.files[f"eval_{name}"] = path
        bundle.j_values[name] = _score(config, plant, weights, traj)
        if config.get("plant.kind") == "tugboat":
            errs = formation_errors(traj)
            bundle.metrics[f"formation_error_{name}"] = float(errs.max())


def _certify_linear(gain: FeedbackGain, model) -> None:
    n = model.n
    acl = closed_loop_matrix(model, gain.k_matrix)[1]
    if not is_hurwitz(acl[:n, :n]):
        raise NotConvergedError(
            "final closed-loop linear block is not Hurwitz")


# Excitation data depends only on these config sections, so sweeps over
# synthesis knobs (admm.gamma above all) reuse one batch per process.
_BATCH_CACHE: dict = {}


def _frozen_batch(config: ExperimentConfig, plant, model, weights,
                  learn_config: LearningConfig) -> FrozenBatch:
    key = json.dumps({
        "plant": config.get("plant"),
        "order": config.get("order"),
        "weights": config.get("weights", {}),
        "learning": {k: v for k, v in config.get("learning", {}).items()
                     if k != "method"},
        "seed": config.seed,
    }, sort_keys=True)
    if key not in _BATCH_CACHE:
        behavior = _behavior_gain(config, model, weights)
        _BATCH_CACHE[key] = FrozenBatch(plant, model, weights, learn_config,
                                        behavior)
    return _BATCH_CACHE[key]


def _write_learning_artifacts(bundle: ResultBundle, gain, cert, log) -> None:
    gpath = bundle.output_dir / "gain.json"
    write_json(gain_to_json(gain), gpath)
    bundle.files["gain"] = gpath
    if cert is not None:
        cpath = bundle.output_dir / "certificate.json"
        write_json(certificate_to_json(cert), cpath)
        bundle.files["certificate"] = cpath
    if log is not None:
        lpath = bundle.output_dir / "learning_log.json"
        write_json(log_to_json(log), lpath)
        bundle.files["learning_log"] = lpath
        bundle.iterations = log.iterations
        bundle.converged = log.converged


def _mask_from_config(config: ExperimentConfig, model, plant) -> StructureMask:
    adjacency = np.asarray(config.get("mask.adjacency"), dtype=float)
    return StructureMask.from_adjacency(adjacency, model.basis,
                                        states_per_agent=6, inputs_per_agent=3)


def _run_single(config: ExperimentConfig, out_dir: Path) -> ResultBundle:
    plant = _build_plant(config)
    weights = _build_weights(config, plant)
    bundle = ResultBundle(name=config.name, mode=config.mode,
                          output_dir=out_dir, seed=config.seed,
                          order=config.get("order"))
    out_dir.mkdir(parents=True, exist_ok=True)

    echo = out_dir / "config_echo.json"
    write_json(config.raw, echo)
    bundle.files["config_echo"] = echo

    mode = config.mode
    if mode == "open-loop":
        _rollout_all(config, plant, weights, None, bundle)
    elif mode == "hjb-baseline":
        if config.get("plant.kind") != "oscillator":
            raise ConfigError("hjb-baseline is defined for the oscillator plant")
        _rollout_all(config, plant, weights, hjb_oscillator_control, bundle)
    else:
        model = build_model(plant, _build_basis(config, plant))
        if mode == "on-policy":
            starts = _sample_starts(config, plant)
            learn_config = _learning_config(config, starts)
            gain, cert, log = run_on_policy(plant, model, weights, learn_config)
            bundle.timesteps = log.iterations * learn_config.rows_per_window
            _write_learning_artifacts(bundle, gain, cert, log)
        elif mode == "off-policy":
            starts = _sample_starts(config, plant)
            learn_config = _learning_config(config, starts)
            batch = _frozen_batch(config, plant, model, weights, learn_config)
            gain, cert, log = run_off_policy(plant, model, weights,
                                             learn_config, batch=batch)
            bundle.timesteps = (np.atleast_2d(starts).shape[0]
                                * learn_config.rows_per_window)
            _write_learning_artifacts(bundle, gain, cert, log)
        elif mode == "structured":
            mask = _mask_from_config(config, model, plant)
            has_learning = config.get("learning") is not None
            method = config.get("learning.method",
                                "model-free" if has_learning else "model-based")
            if method == "model-based":
                gain = structured_model_based(model, weights, mask)
            elif method == "model-free":
                starts = _sample_starts(config, plant)
                learn_config = _learning_config(config, starts)
                batch = _frozen_batch(config, plant, model, weights,
                                      learn_config)
                gain = structured_model_free(plant, model, weights, mask,
                                             learn_config, batch=batch)
            else:
                raise ConfigError(
                    f"learning.method: expected 'model-based' or 'model-free',"
                    f" got {method!r}")
            bundle.metrics["masked_max"] = float(
                np.abs(gain.k_matrix * mask.complement).max())
            _write_learning_artifacts(bundle, gain, None, None)
            bundle.converged = True
            log = None
        else:  # sparse
            starts = _sample_starts(config, plant)
            learn_config = _learning_config(config, starts)
            admm = _admm_config(config)
            batch = _frozen_batch(config, plant, model, weights, learn_config)
            gain, slog = run_sparse(plant, model, weights, learn_config, admm,
                                    batch=batch)
            _write_learning_artifacts(bundle, gain, None, None)
            bundle.iterations = len(slog)
            bundle.converged = True
            total, _ = bandwidth_metric(gain, 6, 3)
            bundle.metrics["bandwidth"] = total
            bundle.metrics["cardinality"] = slog[-1].cardinality
            spath = out_dir / "sparse_log.json"
            write_json({"iterations": [vars(s) for s in slog]}, spath)
            bundle.files["sparse_log"] = spath
            log = None
        if mode in ("on-policy", "off-policy") and not log.converged:
            raise NotConvergedError(
                f"learning stopped without convergence: {log.stop_reason}")
        _certify_linear(gain, model)
        _rollout_all(config, plant, weights, gain, bundle)

    rpath = out_dir / "result.json"
    write_json(bundle.to_json(), rpath)
    bundle.files["result"] = rpath
    return bundle


def _admm_config(config: ExperimentConfig) -> AdmmConfig:
    admm = config.get("admm", {})
    return AdmmConfig(
        gamma=float(_require(admm, "gamma", "admm")),
        rho0=float(admm.get("rho0", 1.0)),
        alpha=float(admm.get("alpha", 1.1)),
        eps_k=float(admm.get("eps_k", 1e-6)),
        eps_l=float(admm.get("eps_l", 1e-6)),
        max_inner=int(admm.get("max_inner", 500)),
        reweight=bool(admm.get("reweight", False)),
    )


def _set_path(raw: dict, path: str, value) -> None:
    parts = path.split(".")
    obj = raw
    for part in parts[:-1]:
        if part not in obj or not isinstance(obj[part], dict):
            raise ConfigError(f"sweep param not in config: {path}")
        obj = obj[part]
    if parts[-1] not in obj:
        raise ConfigError(f"sweep param not in config: {path}")
    obj[parts[-1]] = value


def _slug(value) -> str:
    return str(value).replace(".", "p").replace("-", "m")


def run_sweep(config: ExperimentConfig, param: str, values,
              out_dir: Path) -> list[dict]:
    """Run one experiment per value of a dotted config field.

    Returns the summary rows (written to sweep.csv): the swept value, per-run
    J values, and the scalar metrics each run reported.  A run that fails its
    feasibility or convergence gate is recorded with status instead of J.
    """
    rows = []
    failed = False
    for value in values:
        raw = copy.deepcopy(config.raw)
        _set_path(raw, param, value)
        raw["name"] = f"{config.name}_{_slug(value)}"
        sub = ExperimentConfig(raw)
        sub_dir = out_dir / f"{param.replace('.', '_')}_{_slug(value)}"
        row = {"param": param, "value": value}
        try:
            bundle = _run_single(sub, sub_dir)
        except (InfeasibleError, NotConvergedError, IllConditionedError) as exc:
            row["status"] = f"infeasible: {exc}"
            failed = True
        except DivergedError as exc:
            row["status"] = f"diverged: {exc}"
            failed = True
        else:
            row["status"] = "ok"
            for name, j in bundle.j_values.items():
                row[f"j_{name}"] = j
            for key, val in bundle.metrics.items():
                if isinstance(val, (int, float)):
                    row[key] = val
        rows.append(row)
    out_dir.mkdir(parents=True, exist_ok=True)
    fieldnames = ["param", "value", "status"]
    for row in rows:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    table_to_csv(rows, out_dir / "sweep.csv", fieldnames)
    write_json({"param": param, "values": list(values), "rows": rows},
               out_dir / "sweep.json")
    if failed:
        raise InfeasibleError(
            f"sweep over {param} had failing values; see sweep.csv")
    return rows


def run_experiment(config: ExperimentConfig,
                   out_dir=None) -> ResultBundle | list[dict]:
    """Execute a validated config; returns its ResultBundle (or sweep rows).

    Configs with a `sweep` section fan out into one run per value under the
    output directory and summarize them in sweep.csv.
    """
    base = Path(out_dir) if out_dir is not None else Path(
        config.get("output_dir", f"results/{config.name}"))
    if "sweep" in config.raw:
        sweep = config.raw["sweep"]
        inner = ExperimentConfig(
            {k: v for k, v in config.raw.items() if k != "sweep"})
        return run_sweep(inner, sweep["param"], sweep["values"], base)
    return _run_single(config, base)


def compare_runs(result_paths, out_dir=None) -> list[dict]:
    """Align J values of finished runs into one table (CSV + JSON).

    All runs must share the plant section and the eval horizon; gaps are
    relative to the first run listed.
    """
    if len(result_paths) < 1:
        raise InvalidArgumentError("compare needs at least one result")
    rows = []
    ref_plant = ref_eval = None
    ref_j = {}
    for path in result_paths:
        path = Path(path)
        if path.is_dir():
            path = path / "result.json"
        if not path.exists():
            raise InvalidArgumentError(f"result not found: {path}")
        result = read_json(path)
        echo = read_json(path.parent / "config_echo.json")
        plant_sec = echo.get("plant")
        eval_sec = {"t_final": echo["eval"]["t_final"],
                    "states": sorted(echo["eval"]["states"])}
        if ref_plant is None:
            ref_plant, ref_eval = plant_sec, eval_sec
            ref_j = result["j_values"]
        elif plant_sec != ref_plant or eval_sec != ref_eval:
            raise InvalidArgumentError(
                f"{result['name']}: plant/eval scenario differs from"
                f" {rows[0]['name']}; runs are not comparable")
        row = {"name": result["name"], "mode": result["mode"],
               "order": result["order"],
               "timesteps": result["timesteps"],
               "iterations": result["iterations"]}
        for ename, j in result["j_values"].items():
            row[f"j_{ename}"] = j
            ref = ref_j.get(ename)
            if ref:
                row[f"gap_{ename}"] = (j - ref) / ref
        rows.append(row)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        fieldnames = []
        for row in rows:
            for key in row:
                if key not in fieldnames:
                    fieldnames.append(key)
        table_to_csv(rows, out_dir / "comparison.csv", fieldnames)
        write_json({"rows": rows}, out_dir / "comparison.json")
    return rows


def _parse_values(text: str) -> list:
    values = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            values.append(json.loads(piece))
        except json.JSONDecodeError:
            raise ConfigError(f"--values: not a number: {piece!r}") from None
    if not values:
        raise ConfigError("--values: expected a comma-separated list")
    return values


def _exit_code(exc: CarlearnError) -> int:
    if isinstance(exc, DivergedError):
        return 3
    if isinstance(exc, (ConfigError, InvalidArgumentError)):
        return 2
    return 4


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="carlearn", description="benchmark experiment runner")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory override")

    p_cmp = sub.add_parser("compare", help="tabulate finished runs")
    p_cmp.add_argument("results", nargs="+",
                       help="result.json files or run directories")
    p_cmp.add_argument("--out", default=".", help="where to write the table")

    p_sweep = sub.add_parser("sweep", help="run a config across param values")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True,
                         help="dotted config path, e.g. admm.gamma")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values")
    p_sweep.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            config = load_config(args.config)
            result = run_experiment(config, args.out)
            if isinstance(result, ResultBundle):
                for name, j in sorted(result.j_values.items()):
                    print(f"{result.name}: J({name}) = {j:.6g}")
                print(f"artifacts in {result.output_dir}")
            else:
                print(f"sweep finished: {len(result)} runs")
        elif args.verb == "compare":
            rows = compare_runs(args.results, args.out)
            for row in rows:
                js = "  ".join(f"{k}={v:.6g}" for k, v in row.items()
                               if k.startswith("j_"))
                print(f"{row['name']}: {js}")
        else:
            config = load_config(args.config)
            base = Path(args.out) if args.out else Path(
                config.get("output_dir", f"results/{config.name}"))
            raw = {k: v for k, v in config.raw.items() if k != "sweep"}
            run_sweep(ExperimentConfig(raw), args.param,
                      _parse_values(args.values), base)
            print(f"sweep finished; table in {base / 'sweep.csv'}")
    except CarlearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
