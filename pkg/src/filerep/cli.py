"""Command-line harness: scenario orchestration and reporting.

Subcommands: simulate, fluid, compare, fastchain, hitting, martingale,
diffusion, all.  Every JSON output embeds a provenance block (resolved
config plus effective seed) so results are reproducible from the config
file alone.  Exit codes: 0 all checks passed, 1 some check failed,
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, checks, fluid
from .config import ScenarioConfig, load_config
from .errors import ConfigError, FilerepError
from .model import classify_regime
from .simulate import initial_state_from_scaled, simulate_grid, simulate_path


def _provenance(cfg: ScenarioConfig) -> dict:
    return {"config": cfg.as_dict(), "seed": cfg.seed, "tool": f"filerep {__version__}"}


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _run_one_replica(args):
    cfg, replica = args
    init = initial_state_from_scaled(cfg.x1_0, cfg.x2_0, cfg.n)
    if cfg.record == "grid":
        return simulate_grid(
            cfg.params, cfg.scaled, init, cfg.horizon, cfg.seed, cfg.grid_dt, replica=replica
        )
    return simulate_path(cfg.params, cfg.scaled, init, cfg.horizon, cfg.seed, replica=replica)


def cmd_simulate(cfg: ScenarioConfig, out_dir: Path, jobs: int) -> int:
    tasks = [(cfg, r) for r in range(cfg.replicas)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            paths = list(pool.map(_run_one_replica, tasks))
    else:
        paths = [_run_one_replica(t) for t in tasks]

    summary = {"provenance": _provenance(cfg), "replicas": []}
    for r, path in enumerate(paths):
        fname = out_dir / f"path_r{r}.csv"
        with open(fname, "w", newline="") as fh:
            path.write_csv(fh, precision=cfg.precision)
        entry = {"replica": r, "file": fname.name, "n_events": int(path.n_events)}
        if cfg.record == "events":
            x1, x2 = path.scaled_state(cfg.horizon)
            entry["final_scaled_state"] = [x1, x2]
            if cfg.scaled.finite:
                t1 = path.hitting_time_T1()
                entry["T1"] = t1 if isinstance(t1, float) else None
        else:
            entry["final_scaled_state"] = [
                float(path.x1[-1]) / cfg.n,
                float(path.x2[-1]) / cfg.n,
            ]
        summary["replicas"].append(entry)
    _write_json(out_dir / "simulate_summary.json", summary)
    return 0


def cmd_fluid(cfg: ScenarioConfig, out_dir: Path, regime_tol: float) -> int:
    dt = cfg.grid_dt if cfg.grid_dt is not None else 1e-3
    traj = fluid.fluid_trajectory(
        cfg.params, (cfg.x1_0, cfg.x2_0), cfg.horizon, dt=dt, regime_tol=regime_tol
    )
    with open(out_dir / "fluid.csv", "w", newline="") as fh:
        traj.write_csv(fh, precision=cfg.precision)
    payload = {"provenance": _provenance(cfg), **traj.summary()}
    _write_json(out_dir / "fluid_summary.json", payload)
    return 0


def _verdict_exit(verdict: dict) -> int:
    if verdict.get("skipped"):
        return 0
    return 0 if verdict["passed"] else 1


def cmd_compare(cfg: ScenarioConfig, out_dir: Path) -> int:
    verdict = checks.check_compare(
        cfg.params,
        (cfg.x1_0, cfg.x2_0),
        cfg.seed,
        n=cfg.n,
        n_small=max(2, cfg.n // 100),
        horizon=cfg.horizon,
        replicas=cfg.replicas,
        grid_dt=cfg.grid_dt if cfg.grid_dt is not None else 0.01,
    )
    _write_json(out_dir / "compare.json", {"provenance": _provenance(cfg), **verdict})
    return _verdict_exit(verdict)


_BUNDLE = ("fastchain", "hitting", "martingale", "diffusion")


def _run_bundle_check(name: str, cfg: ScenarioConfig) -> dict:
    x0 = (cfg.x1_0, cfg.x2_0)
    if name == "fastchain":
        return checks.check_fastchain(cfg.params, cfg.seed)
    if name == "hitting":
        return checks.check_hitting(cfg.params, x0, cfg.seed, n=cfg.n)
    if name == "martingale":
        return checks.check_martingale(cfg.params, cfg.seed)
    if name == "diffusion":
        return checks.check_diffusion(cfg.params, cfg.seed, n=cfg.n)
    raise ValueError(f"unknown check {name}")


def cmd_bundle(cfg: ScenarioConfig, out_dir: Path, which: tuple[str, ...]) -> int:
    verdicts = [_run_bundle_check(name, cfg) for name in which]
    all_passed = all(v["passed"] for v in verdicts if not v.get("skipped"))
    payload = {
        "provenance": _provenance(cfg),
        "regime": classify_regime(cfg.params).value,
        "verdicts": verdicts,
        "all_passed": bool(all_passed),
    }
    name = which[0] if len(which) == 1 else "report"
    _write_json(out_dir / f"{name}.json", payload)
    return 0 if all_passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="filerep",
        description="Finite-capacity file-replication network laboratory",
    )
    parser.add_argument("command", choices=(
        "simulate", "fluid", "compare", "fastchain", "hitting",
        "martingale", "diffusion", "all",
    ))
    parser.add_argument("--config", required=True, help="scenario INI file")
    parser.add_argument("--seed", type=int, default=None, help="override [sim] seed")
    parser.add_argument("--replicas", type=int, default=None, help="override [sim] replicas")
    parser.add_argument("--out", default=None, help="override [output] path")
    parser.add_argument("--regime-tol", type=float, default=0.0,
                        help="half-width of the critical band around beta_bar")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for replica fan-out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.replicas is not None:
            if args.replicas < 1:
                raise ConfigError(f"--replicas must be >= 1, got {args.replicas}")
            cfg.replicas = args.replicas
        if args.out is not None:
            cfg.out_path = args.out
        out_dir = Path(cfg.out_path)
        out_dir.mkdir(parents=True, exist_ok=True)

        if args.command == "simulate":
            return cmd_simulate(cfg, out_dir, args.jobs)
        if args.command == "fluid":
            return cmd_fluid(cfg, out_dir, args.regime_tol)
        if args.command == "compare":
            return cmd_compare(cfg, out_dir)
        if args.command == "all":
            compare_rc = cmd_compare(cfg, out_dir)
            bundle_rc = cmd_bundle(cfg, out_dir, _BUNDLE)
            return max(compare_rc, bundle_rc)
        return cmd_bundle(cfg, out_dir, (args.command,))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FilerepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
