"""Command-line front end: charging runs, bound curves, onset sweeps, and
figure-reproduction presets.

All outputs are deterministic: identical configurations produce byte-identical
files.  Numbers are serialised with 12 significant digits.

Exit codes: 0 success, 2 configuration error, 3 numerical invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .bounds import (
    lossy_energy_bound_curve,
    optimal_swap_rate,
    oscillator_energy_bound,
    spin_energy_bound,
)
from .core import BatteryKind, BatteryModel, InvariantViolationError, QubitState
from .observables import SimulationRecord
from .protocols import (
    driving_limit_oscillator,
    driving_limit_spin,
    find_advantage_onset,
    fixed_schedule,
    full_swap_schedule,
    run_greedy,
    run_protocol,
)

__all__ = ["main", "ConfigError"]

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6")


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def _round12(value: float) -> float:
    return float(f"{float(value):.12g}")


def parse_theta(value) -> float:
    """Swap angle given as a number (radians) or a 'Xpi' multiple of pi."""
    if isinstance(value, (int, float)):
        theta = float(value)
    else:
        text = str(value).strip().lower()
        try:
            theta = float(text[:-2]) * math.pi if text.endswith("pi") else float(text)
        except ValueError as exc:
            raise ConfigError(f"cannot parse swap angle {value!r}") from exc
    if not (theta > 0 and math.isfinite(theta)):
        raise ConfigError(f"swap angle must be positive and finite, got {value!r}")
    return theta


def _take(mapping: dict, context: str, known: dict) -> dict:
    """Pop known keys (with defaults) from a config mapping; reject the rest."""
    out = {}
    mapping = dict(mapping)
    for key, default in known.items():
        out[key] = mapping.pop(key, default)
    if mapping:
        raise ConfigError(f"unknown {context} keys: {sorted(mapping)}")
    return out


@dataclass
class RunConfig:
    """One charging run, as parsed from a config file and/or CLI flags."""

    battery: str = "oscillator"
    dim: int | None = None
    spin_j: float | None = None
    energy: float = 1.0
    q: float = 0.5
    c: float = 1.0
    alpha: float = 0.0
    policy: str = "fixed"
    theta: float | None = None
    steps: int | None = None
    horizon: float | None = None
    gamma: float = 0.0
    deterministic: bool = True

    @classmethod
    def from_mapping(cls, raw: dict) -> "RunConfig":
        top = _take(
            raw,
            "config",
            {
                "battery": {},
                "qubit": {},
                "schedule": {},
                "gamma": 0.0,
                "horizon": None,
                "deterministic": True,
            },
        )
        battery = _take(top["battery"], "battery", {"kind": "oscillator", "dim": None, "j": None, "energy": 1.0})
        qubit = _take(top["qubit"], "qubit", {"q": 0.5, "c": 1.0, "alpha": 0.0})
        schedule = _take(top["schedule"], "schedule", {"policy": "fixed", "theta": None, "steps": None})
        if not top["deterministic"]:
            raise ConfigError("randomised runs are not supported; 'deterministic' must be true")
        return cls(
            battery=str(battery["kind"]),
            dim=None if battery["dim"] is None else int(battery["dim"]),
            spin_j=None if battery["j"] is None else float(battery["j"]),
            energy=float(battery["energy"]),
            q=float(qubit["q"]),
            c=float(qubit["c"]),
            alpha=float(qubit["alpha"]),
            policy=str(schedule["policy"]),
            theta=None if schedule["theta"] is None else parse_theta(schedule["theta"]),
            steps=None if schedule["steps"] is None else int(schedule["steps"]),
            horizon=None if top["horizon"] is None else float(top["horizon"]),
            gamma=float(top["gamma"]),
            deterministic=True,
        )

    def echo(self) -> dict:
        return {
            "battery": {"kind": self.battery, "dim": self.dim, "j": self.spin_j, "energy": self.energy},
            "qubit": {"q": self.q, "c": self.c, "alpha": self.alpha},
            "schedule": {"policy": self.policy, "theta": self.theta, "steps": self.steps},
            "gamma": self.gamma,
            "horizon": self.horizon,
            "deterministic": self.deterministic,
        }


def _build_model(cfg: RunConfig) -> BatteryModel:
    try:
        if cfg.battery == "oscillator":
            return BatteryModel.oscillator(cfg.dim or 250, cfg.energy)
        if cfg.battery == "spin":
            if cfg.spin_j is not None:
                return BatteryModel.spin(cfg.spin_j, cfg.energy)
            if cfg.dim is not None:
                return BatteryModel.spin((cfg.dim - 1) / 2.0, cfg.energy)
            raise ConfigError("spin battery needs --spin-j or --dim")
        if cfg.battery == "uniform":
            return BatteryModel.uniform_ladder(cfg.dim or 250, cfg.energy)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown battery kind {cfg.battery!r} (oscillator, spin, uniform)")


def _build_qubit(cfg: RunConfig) -> QubitState:
    try:
        return QubitState(cfg.q, cfg.c, cfg.alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _execute_run(cfg: RunConfig, distributions: bool = False) -> SimulationRecord:
    model = _build_model(cfg)
    try:
        if cfg.policy == "fixed":
            if cfg.theta is None:
                raise ConfigError("policy 'fixed' needs a swap angle (--theta)")
            steps = cfg.steps
            if steps is None:
                if cfg.horizon is None:
                    raise ConfigError("policy 'fixed' needs --steps or --horizon")
                steps = int(math.floor(cfg.horizon / cfg.theta + 1e-9))
            schedule = fixed_schedule(cfg.theta, _build_qubit(cfg), steps, cfg.gamma)
            return run_protocol(model, schedule, record_distributions=distributions)
        if cfg.policy == "fullswap":
            qubit = _build_qubit(cfg)
            if qubit.q != 0.0 or qubit.c != 0.0:
                raise ConfigError("policy 'fullswap' requires excited incoherent units (q=0, c=0)")
            steps = cfg.steps if cfg.steps is not None else model.capacity
            schedule = full_swap_schedule(model, steps, cfg.gamma)
            return run_protocol(model, schedule, record_distributions=distributions)
        if cfg.policy in ("greedy-cum", "greedy-trans"):
            qubit = _build_qubit(cfg)
            if qubit.c != 0.0:
                raise ConfigError("greedy policies use incoherent units (c=0)")
            if cfg.horizon is None:
                raise ConfigError("greedy policies need --horizon")
            objective = "cumulative" if cfg.policy == "greedy-cum" else "transient"
            record, _ = run_greedy(
                model,
                qubit.q,
                objective=objective,
                horizon=cfg.horizon,
                gamma=cfg.gamma,
                max_steps=cfg.steps,
                record_distributions=distributions,
            )
            return record
    except (ValueError,) as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"unknown policy {cfg.policy!r} (fixed, fullswap, greedy-cum, greedy-trans)")


def _write_table(path: Path, columns: list[str], rows: list, fmt: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [",".join(columns)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        path.write_text("\n".join(lines) + "\n")
    else:
        payload = {
            "columns": columns,
            "rows": [[None if v is None else _round12(v) for v in row] for row in rows],
        }
        path.write_text(json.dumps(payload, indent=1) + "\n")


def _record_rows(record: SimulationRecord) -> list:
    return [list(row) for row in record.rows()]


def _sidecar(path: Path, cfg_echo: dict, extra: dict | None = None):
    opt = optimal_swap_rate()
    meta = {
        "config": cfg_echo,
        "derived": {
            "swap_rate_constant": _round12(opt.rate),
            "swap_rate_angle": _round12(opt.angle),
        },
    }
    if extra:
        meta.update(extra)
    path.write_text(json.dumps(meta, indent=1) + "\n")


def _distribution_rows(record: SimulationRecord, snapshot_taus=None) -> list:
    rows = []
    if record.distributions is None:
        return rows
    if snapshot_taus is None:
        indices = range(len(record))
    else:
        indices = sorted({int(np.argmin(np.abs(record.omega_tau - t))) for t in snapshot_taus})
    for i in indices:
        for n, p in enumerate(record.distributions[i]):
            rows.append([record.omega_tau[i], n, p])
    return rows


def cmd_simulate(args) -> int:
    raw = json.loads(Path(args.config).read_text()) if args.config else {}
    cfg = RunConfig.from_mapping(raw)
    for name in ("battery", "dim", "spin_j", "energy", "q", "c", "alpha", "policy", "steps", "gamma", "horizon"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if args.theta is not None:
        cfg.theta = parse_theta(args.theta)
    record = _execute_run(cfg, distributions=args.distributions)
    record.check()
    out = Path(args.out)
    _write_table(out, list(SimulationRecord.COLUMNS), _record_rows(record), args.format)
    if args.distributions:
        dist_path = out.with_name(out.stem + ".distributions." + ("csv" if args.format == "csv" else "json"))
        _write_table(dist_path, ["omega_tau", "level", "population"], _distribution_rows(record), args.format)
    _sidecar(out.with_name(out.stem + ".meta.json"), cfg.echo())
    return 0


def cmd_bound(args) -> int:
    taus = np.linspace(0.0, args.tau_max, args.points)
    if args.kind == "oscillator":
        values = oscillator_energy_bound(taus, args.energy)
    elif args.kind == "spin":
        if args.spin_j is None:
            raise ConfigError("spin bound needs --spin-j")
        values = spin_energy_bound(taus, args.spin_j, args.energy)
    elif args.kind == "lossy":
        gamma = args.gamma or 0.0
        values = lossy_energy_bound_curve(taus, gamma, args.energy)
    else:
        raise ConfigError(f"unknown bound kind {args.kind!r}")
    rows = [[t, v] for t, v in zip(taus, values)]
    _write_table(Path(args.out), ["omega_tau", "energy_bound"], rows, args.format)
    return 0


def _parse_grid(text: str) -> list[float]:
    values = [v for v in (s.strip() for s in text.split(",")) if v]
    if not values:
        raise ConfigError("empty value list")
    return [parse_theta(v) if v.endswith("pi") else float(v) for v in values]


def cmd_sweep_onset(args) -> int:
    thetas = sorted(_parse_grid(args.theta))
    gammas = sorted(_parse_grid(args.gamma))
    model = BatteryModel.oscillator(args.dim or 250, args.energy)
    rows = []
    for gamma in gammas:
        if not 0.0 <= gamma < 1.0:
            raise ConfigError(f"damping parameter must lie in [0, 1), got {gamma}")
        for theta in thetas:
            onset = find_advantage_onset(theta, gamma, model, args.horizon)
            rows.append([gamma, theta, onset.tau_ad])
    _write_table(Path(args.out), ["gamma", "theta", "tau_ad"], rows, args.format)
    return 0


def _load_preset(figure: str) -> dict:
    with resources.files("qbattery.presets").joinpath(f"{figure}.json").open() as handle:
        return json.load(handle)


def _preset_curve_grid(horizon: float, points: int = 400) -> np.ndarray:
    return np.linspace(0.0, horizon, points)


def cmd_reproduce(args) -> int:
    preset = _load_preset(args.figure)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []

    if "onset_grid" in preset:
        grid = preset["onset_grid"]
        model = BatteryModel.oscillator(int(preset["battery"]["dim"]))
        rows = []
        for gamma in grid["gamma"]:
            for theta in [parse_theta(t) for t in grid["theta"]]:
                onset = find_advantage_onset(theta, float(gamma), model, float(preset["horizon"]))
                rows.append([gamma, theta, onset.tau_ad])
        path = outdir / "onsets.csv"
        _write_table(path, ["gamma", "theta", "tau_ad"], rows, "csv")
        files.append(path.name)

    snapshots = preset.get("snapshots")
    for curve in preset.get("curves", []):
        name = curve["name"]
        policy = curve["policy"]
        horizon = float(preset["horizon"])
        battery = dict(preset["battery"])
        if policy == "bound":
            taus = _preset_curve_grid(horizon)
            gamma = float(curve.get("gamma", 0.0))
            if battery["kind"] == "spin":
                j = float(battery["j"])
                values = spin_energy_bound(taus, j)
            elif gamma > 0.0:
                values = lossy_energy_bound_curve(taus, gamma)
            else:
                values = oscillator_energy_bound(taus)
            path = outdir / f"{name}.csv"
            _write_table(path, ["omega_tau", "mean_energy"], [[t, v] for t, v in zip(taus, values)], "csv")
            files.append(path.name)
            continue
        if policy == "driving-limit":
            taus = _preset_curve_grid(horizon)
            if battery["kind"] == "spin":
                model = BatteryModel.spin(float(battery["j"]))
                values = [driving_limit_spin(model, t) for t in taus]
            else:
                model = BatteryModel.oscillator(int(battery["dim"]))
                values = [driving_limit_oscillator(model, t)[0] for t in taus]
            path = outdir / f"{name}.csv"
            _write_table(path, ["omega_tau", "mean_energy"], [[t, v] for t, v in zip(taus, values)], "csv")
            files.append(path.name)
            continue
        mapping = {
            "battery": battery,
            "qubit": curve.get("qubit", {}),
            "schedule": {
                "policy": policy,
                "theta": curve.get("theta"),
                "steps": curve.get("steps"),
            },
            "gamma": curve.get("gamma", preset.get("gamma", 0.0)),
            "horizon": horizon,
        }
        cfg = RunConfig.from_mapping(mapping)
        want_snapshots = bool(snapshots) and curve.get("snapshot", False)
        record = _execute_run(cfg, distributions=want_snapshots)
        record.check()
        path = outdir / f"{name}.csv"
        _write_table(path, list(SimulationRecord.COLUMNS), _record_rows(record), "csv")
        files.append(path.name)
        if want_snapshots:
            dist_path = outdir / f"{name}.distributions.csv"
            _write_table(
                dist_path,
                ["omega_tau", "level", "population"],
                _distribution_rows(record, snapshots),
                "csv",
            )
            files.append(dist_path.name)

    _sidecar(outdir / "manifest.json", preset, extra={"files": sorted(files)})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbattery",
        description="Collisional charging of finite quantum batteries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one charging protocol")
    sim.add_argument("--config", help="JSON config file; flags override its fields")
    sim.add_argument("--battery", choices=("oscillator", "spin", "uniform"))
    sim.add_argument("--dim", type=int)
    sim.add_argument("--spin-j", dest="spin_j", type=float)
    sim.add_argument("--energy", type=float)
    sim.add_argument("--q", type=float)
    sim.add_argument("--c", type=float)
    sim.add_argument("--alpha", type=float)
    sim.add_argument("--policy", choices=("fixed", "fullswap", "greedy-cum", "greedy-trans"))
    sim.add_argument("--theta", help="swap angle in radians, or e.g. '0.01pi'")
    sim.add_argument("--steps", type=int)
    sim.add_argument("--horizon", type=float)
    sim.add_argument("--gamma", type=float)
    sim.add_argument("--distributions", action="store_true", help="also write per-step level populations")
    sim.add_argument("--out", required=True)
    sim.add_argument("--format", choices=("csv", "json"), default="csv")
    sim.set_defaults(func=cmd_simulate)

    bound = sub.add_parser("bound", help="tabulate an incoherent charging envelope")
    bound.add_argument("--kind", choices=("oscillator", "spin", "lossy"), required=True)
    bound.add_argument("--spin-j", dest="spin_j", type=float)
    bound.add_argument("--gamma", type=float)
    bound.add_argument("--energy", type=float, default=1.0)
    bound.add_argument("--tau-max", dest="tau_max", type=float, default=20.0)
    bound.add_argument("--points", type=int, default=201)
    bound.add_argument("--out", required=True)
    bound.add_argument("--format", choices=("csv", "json"), default="csv")
    bound.set_defaults(func=cmd_bound)

    sweep = sub.add_parser("sweep-onset", help="advantage-onset times over a theta x gamma grid")
    sweep.add_argument("--theta", required=True, help="comma list, e.g. '0.002pi,0.01pi'")
    sweep.add_argument("--gamma", required=True, help="comma list, e.g. '0,1e-4,1e-3'")
    sweep.add_argument("--dim", type=int, default=250)
    sweep.add_argument("--energy", type=float, default=1.0)
    sweep.add_argument("--horizon", type=float, default=60.0)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.set_defaults(func=cmd_sweep_onset)

    rep = sub.add_parser("reproduce", help="run a bundled figure preset")
    rep.add_argument("figure", choices=FIGURES)
    rep.add_argument("--out", required=True, help="output directory")
    rep.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolationError as exc:
        print(f"numerical invariant violation: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
