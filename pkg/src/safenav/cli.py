"""Batch benchmark runner.

``safenav run config.json --out results/`` executes a seeded sweep of
scenarios, writing ``metrics.csv`` (one row per sweep point and method),
``manifest.json`` (the fully resolved configuration plus all derived seeds,
itself accepted as a config so any run can be reproduced byte-identically),
and optionally per-episode trajectory logs and SVG plots.
"""

from __future__ import annotations

import argparse
import copy
import datetime
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from ._core import BACKEND
from .dynamics import ActuationNoise, diff_drive_model
from .mppi import MppiConfig
from .perception import ObservationNoise
from .safe_sampler import SafetyConfig
from .simulator import (EpisodeResult, NoiseConfig, Scenario, SimConfig, aggregate,
                        make_circle_scenario, make_random_scenario, run_episode)


class ConfigError(ValueError):
    pass


DEFAULT_CONFIG = {
    "master_seed": 20240601,
    "dynamics": {"dt": 0.1, "v_bounds": [-1.0, 1.0], "w_bounds": [-2.0, 2.0]},
    "noise": {
        "actuation_sigma": [0.1, 0.2],
        "obs_pos_cov": [[0.01, 0.0], [0.0, 0.01]],
        "obs_vel_cov": [[0.01, 0.0], [0.0, 0.01]],
    },
    "safety": {"delta_obs": 0.9975, "delta_act": 0.999, "delta_ctrl": 0.999},
    "mppi": {
        "samples": 500, "horizon": 20, "temperature": 0.05,
        "exploration_gain": 4.0, "w_term": 20.0, "w_goal": 2.0, "w_dist": 3.0,
        "w_col": 1000.0, "w_vel": 0.1, "lookahead": 4.0, "d_th": 0.7,
        "goal_tolerance": 0.4,
    },
    "orca": {"tau": 0.5, "alpha_resp": 0.5},
    "tracker": {"process_noise": 0.5},
    "sim": {"agent_radius": 0.3, "max_steps": 1000, "goal_tolerance": 0.4},
    "scenario": {"kind": "circle", "diameter": 12.0, "extent": 20.0,
                 "instances": 1},
    "sweep": {"n_agents": [2, 4, 8, 10], "seeds": 10},
    "methods": ["ours"],
}

_METHOD_FLAGS = {
    "ours": {},
    "mppi-orca": {"use_buffers": False},
    "v-opt-zero": {"v_opt_zero": True},
}

CSV_HEADER = ("scenario,n_agents,method,episodes,success_rate,collision_rate,"
              "timeout_rate,mean_makespan_s,std_makespan_s,mean_min_dist_m,"
              "degraded_steps_mean")


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config key {path + key!r} must be a mapping")
            out[key] = _merge(base[key], val, path + key + ".")
        else:
            out[key] = val
    return out


def load_config(path: str | Path) -> dict:
    """Read a config or a previously written manifest (reproduces that run)."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    if "config" in raw and "manifest_version" in raw:
        raw = raw["config"]
    return _merge(DEFAULT_CONFIG, raw)


def _build_objects(cfg: dict, method: str):
    dyn = cfg["dynamics"]
    model = diff_drive_model(dt=dyn["dt"], v_bounds=tuple(dyn["v_bounds"]),
                             w_bounds=tuple(dyn["w_bounds"]))
    noise = NoiseConfig(
        actuation=ActuationNoise(sigma=np.asarray(cfg["noise"]["actuation_sigma"])),
        observation=ObservationNoise(
            sigma_p=np.asarray(cfg["noise"]["obs_pos_cov"]),
            sigma_v=np.asarray(cfg["noise"]["obs_vel_cov"])))
    safety = SafetyConfig(**cfg["safety"])
    mppi = MppiConfig(**cfg["mppi"])
    flags = _METHOD_FLAGS[method]
    sim = SimConfig(
        agent_radius=cfg["sim"]["agent_radius"], dt=dyn["dt"],
        max_steps=cfg["sim"]["max_steps"],
        goal_tolerance=cfg["sim"]["goal_tolerance"],
        orca_tau=cfg["orca"]["tau"], alpha_resp=cfg["orca"]["alpha_resp"],
        process_noise=cfg["tracker"]["process_noise"],
        use_buffers=flags.get("use_buffers", True),
        v_opt_zero=flags.get("v_opt_zero", False))
    return model, noise, safety, mppi, sim


def benchmark_objects(method: str = "ours", overrides: dict | None = None):
    """(model, noise, safety, mppi, sim) tuple for the shipped benchmark preset.

    ``overrides`` deep-merges into the preset with the same validation the
    config file path uses; unknown keys raise ConfigError.
    """
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if overrides:
        cfg = _merge(cfg, overrides)
    if method not in _METHOD_FLAGS:
        raise ConfigError(f"unknown method {method!r}; "
                          f"expected one of {sorted(_METHOD_FLAGS)}")
    return _build_objects(cfg, method)


def _make_scenario(cfg: dict, n: int, instance: int) -> Scenario:
    sc = cfg["scenario"]
    radius = cfg["sim"]["agent_radius"]
    if sc["kind"] == "circle":
        return make_circle_scenario(n, diameter=sc["diameter"], agent_radius=radius)
    if sc["kind"] == "random":
        rng = np.random.default_rng(
            np.random.SeedSequence([cfg["master_seed"], 0xA5, n, instance]))
        return make_random_scenario(
            n, rng, extent=sc.get("extent", 20.0), agent_radius=radius,
            goal_tolerance=cfg["sim"]["goal_tolerance"])
    raise ConfigError(f"unknown scenario kind {sc['kind']!r}")


def plan_episodes(cfg: dict, methods: list[str]) -> list[dict]:
    """Flat, ordered episode list; the seed key fixes every random stream."""
    sc = cfg["scenario"]
    instances = int(sc.get("instances", 1)) if sc["kind"] == "random" else 1
    episodes = []
    for method_idx, method in enumerate(methods):
        for point_idx, n in enumerate(cfg["sweep"]["n_agents"]):
            for instance in range(instances):
                for rep in range(cfg["sweep"]["seeds"]):
                    episodes.append({
                        "method": method,
                        "n_agents": int(n),
                        "instance": instance,
                        "rep": rep,
                        "seed_key": [int(cfg["master_seed"]), method_idx,
                                     point_idx, instance, rep],
                    })
    return episodes


def _run_one(args: tuple[dict, dict]) -> tuple[dict, EpisodeResult]:
    cfg, ep = args
    model, noise, safety, mppi, sim = _build_objects(cfg, ep["method"])
    scenario = _make_scenario(cfg, ep["n_agents"], ep["instance"])
    result = run_episode(scenario, sim, noise, safety, mppi,
                         seed=np.random.SeedSequence(ep["seed_key"]),
                         model=model, record_trajectories=ep.get("record", False))
    return ep, result


def _fmt(value: float, places: int) -> str:
    if value != value:  # NaN stays portable across rounding modes
        return "nan"
    return f"{value:.{places}f}"


def write_metrics(path: Path, cfg: dict, methods: list[str],
                  grouped: dict[tuple, list[EpisodeResult]]) -> None:
    dt = cfg["dynamics"]["dt"]
    name = cfg["scenario"]["kind"]
    lines = [CSV_HEADER]
    for method in methods:
        for n in cfg["sweep"]["n_agents"]:
            results = grouped[(method, int(n))]
            agg = aggregate(results, dt)
            lines.append(",".join([
                name, str(int(n)), method, str(agg["episodes"]),
                _fmt(agg["success_rate"], 4), _fmt(agg["collision_rate"], 4),
                _fmt(agg["timeout_rate"], 4), _fmt(agg["mean_makespan_s"], 3),
                _fmt(agg["std_makespan_s"], 3), _fmt(agg["mean_min_dist_m"], 4),
                _fmt(agg["degraded_steps_mean"], 3),
            ]))
    path.write_text("\n".join(lines) + "\n")


_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
            "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def render_trajectories_svg(result: EpisodeResult, scenario: Scenario,
                            size: int = 600) -> str:
    """Deterministic standalone SVG: paths, start markers, goal rings."""
    traj = result.trajectories
    if traj is None:
        raise ValueError("episode was run without trajectory recording")
    pts = np.concatenate([traj[:, :, :2].reshape(-1, 2), scenario.goals])
    lo = pts.min(axis=0) - 1.0
    hi = pts.max(axis=0) + 1.0
    span = float(max(hi[0] - lo[0], hi[1] - lo[1]))
    scale = (size - 20) / span

    def sx(x):
        return 10 + (x - lo[0]) * scale

    def sy(y):
        return size - 10 - (y - lo[1]) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
           f'height="{size}" viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    n = traj.shape[1]
    for i in range(n):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(f"{sx(traj[t, i, 0]):.2f},{sy(traj[t, i, 1]):.2f}"
                          for t in range(traj.shape[0]))
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        out.append(f'<circle cx="{sx(traj[0, i, 0]):.2f}" cy="{sy(traj[0, i, 1]):.2f}" '
                   f'r="4" fill="{color}"/>')
        out.append(f'<circle cx="{sx(scenario.goals[i, 0]):.2f}" '
                   f'cy="{sy(scenario.goals[i, 1]):.2f}" r="6" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_trajectory_jsonl(path: Path, result: EpisodeResult) -> None:
    with path.open("w") as fh:
        steps = 0 if result.commands is None else result.commands.shape[0]
        for t in range(steps):
            record = {
                "step": t,
                "poses": [[round(float(v), 6) for v in row]
                          for row in result.trajectories[t + 1]],
                "commands": [[round(float(v), 6) for v in row]
                             for row in result.commands[t]],
                "degraded": bool(result.degraded_flags[t]),
            }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


def _episode_stem(ep: dict) -> str:
    return (f"{ep['method']}_n{ep['n_agents']:02d}_i{ep['instance']:02d}"
            f"_r{ep['rep']:02d}")


def run_command(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.seeds is not None:
        if args.seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        cfg["sweep"]["seeds"] = args.seeds
    methods = list(cfg["methods"])
    if args.ablation is not None:
        if args.ablation not in _METHOD_FLAGS:
            raise ConfigError(
                f"unknown ablation {args.ablation!r}; options: "
                + ", ".join(sorted(set(_METHOD_FLAGS) - {"ours"})))
        if args.ablation not in methods:
            methods.append(args.ablation)
    for m in methods:
        if m not in _METHOD_FLAGS:
            raise ConfigError(f"unknown method {m!r} in config")

    # Fail fast on invalid numerics before any episode runs.
    _build_objects(cfg, methods[0])
    episodes = plan_episodes(cfg, methods)
    record = bool(args.plots or args.trajectories)
    for ep in episodes:
        ep["record"] = record

    if args.dry_run:
        print(f"config ok: {len(episodes)} episodes "
              f"({len(methods)} methods x {len(cfg['sweep']['n_agents'])} points), "
              f"backend {BACKEND}")
        return 0

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = [(cfg, ep) for ep in episodes]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            done = list(pool.map(_run_one, tasks))
    else:
        done = [_run_one(t) for t in tasks]

    grouped: dict[tuple, list[EpisodeResult]] = {}
    for ep, result in done:
        grouped.setdefault((ep["method"], ep["n_agents"]), []).append(result)

    write_metrics(out_dir / "metrics.csv", cfg, methods, grouped)

    manifest = {
        "manifest_version": 1,
        "tool_version": __version__,
        "backend": BACKEND,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": {k: v for k, v in cfg.items() if k != "methods"} | {
            "methods": methods},
        "episodes": [{k: ep[k] for k in
                      ("method", "n_agents", "instance", "rep", "seed_key")}
                     for ep in episodes],
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    if args.trajectories or args.plots:
        if args.trajectories:
            (out_dir / "trajectories").mkdir(exist_ok=True)
        if args.plots:
            (out_dir / "plots").mkdir(exist_ok=True)
        for ep, result in done:
            stem = _episode_stem(ep)
            if args.trajectories:
                write_trajectory_jsonl(out_dir / "trajectories" / f"{stem}.jsonl",
                                       result)
            if args.plots:
                scenario = _make_scenario(cfg, ep["n_agents"], ep["instance"])
                (out_dir / "plots" / f"{stem}.svg").write_text(
                    render_trajectories_svg(result, scenario))

    for method in methods:
        for n in cfg["sweep"]["n_agents"]:
            agg = aggregate(grouped[(method, int(n))], cfg["dynamics"]["dt"])
            print(f"{method} n={n}: success {agg['success_rate']:.0%} "
                  f"collision {agg['collision_rate']:.0%} "
                  f"makespan {agg['mean_makespan_s']:.1f}s")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="safenav",
        description="Batch simulator for uncertainty-aware multi-agent "
                    "collision avoidance")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute a benchmark sweep")
    runp.add_argument("config", help="JSON config or a previous manifest.json")
    runp.add_argument("--out", default="results", help="output directory")
    runp.add_argument("--seeds", type=int, default=None,
                      help="override repetitions per sweep point")
    runp.add_argument("--ablation", default=None,
                      help="also run a method variant (e.g. mppi-orca)")
    runp.add_argument("--plots", action="store_true", help="write SVG plots")
    runp.add_argument("--trajectories", action="store_true",
                      help="write per-episode JSONL logs")
    runp.add_argument("--dry-run", action="store_true",
                      help="validate config and show the plan")
    runp.add_argument("--jobs", type=int, default=1, help="parallel workers")
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            return run_command(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
