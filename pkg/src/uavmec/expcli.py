"""Experiment harness: config files, parameter sweeps, CSV output and the
``simulate`` command line."""

from __future__ import annotations

import argparse
import csv
import dataclasses as dc
import logging
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .baselines import equal_offloading, local_only, offload_all, uav_only
from .bsum import SolverConfig, SolverResult, bsum_solve
from .costs import residuals
from .errors import ConfigError, Infeasible, MecError, MissingInput
from .scenario import GenParams, generate_scenario, preset

log = logging.getLogger(__name__)

LOG_ENV = "UAVMEC_LOG_LEVEL"

RUN_COLUMNS = (
    "experiment", "sweep_param", "sweep_value", "seed", "scheme", "objective_j",
    "md_energy_j", "uav_energy_j", "hover_energy_j", "relay_bits", "offload_bits",
    "iters", "mu", "delta_violation", "feasible",
)
TRACE_COLUMNS = ("seed", "rule", "vartheta", "sweep", "objective_j")
METRICS = (
    "objective_j", "md_energy_j", "uav_energy_j", "hover_energy_j",
    "relay_bits", "offload_bits", "iters", "mu", "delta_violation",
)
SCHEMES = ("proposed", "local_only", "offload_all", "equal_offloading", "uav_only")
RULES = ("cyclic", "gauss_southwell", "randomized")


@dataclass(frozen=True)
class Experiment:
    param: str
    values: tuple[float, ...]
    defaults: dict[str, Any] = field(default_factory=dict)


_DEADLINES = (150.0, 200.0, 250.0, 300.0, 350.0, 400.0)
_SIZES = tuple(v * 1e6 for v in (200, 300, 400, 500, 600, 700))

EXPERIMENTS: dict[str, Experiment] = {
    "convergence": Experiment("vartheta", (0.1, 10.0)),
    "offload_vs_deadline": Experiment("deadline_s", _DEADLINES),
    "relay_vs_deadline": Experiment("deadline_s", _DEADLINES),
    "relay_vs_datasize": Experiment("input_bits", _SIZES),
    "md_energy_vs_datasize": Experiment("input_bits", _SIZES),
    "uav_energy_vs_cpu": Experiment("uav_cpu_hz", tuple(v * 1e9 for v in (1.2, 1.4, 1.6, 1.8, 2.0))),
    "energy_vs_subchannels": Experiment("num_subchannels", (6, 12, 18, 24, 30)),
    "energy_vs_users": Experiment(
        "num_devices", (10, 15, 20, 25, 30),
        {"device.deadline_min_s": 600.0, "device.deadline_max_s": 600.0},
    ),
}


# --------------------------------------------------------------------------
# parameters


def _coerce(value: Any, like: Any, key: str) -> Any:
    if not isinstance(value, str):
        return type(like)(value) if isinstance(like, (int, float)) else value
    try:
        if isinstance(like, bool):
            return value.strip().lower() in ("1", "true", "yes")
        if isinstance(like, int):
            return int(value)
        if isinstance(like, float):
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {type(like).__name__}") from None
    return value.strip()


def set_param(params: GenParams, key: str, value: Any) -> GenParams:
    """Return ``params`` with one dotted key (e.g. ``radio.n0_w``) replaced."""
    head, _, tail = key.partition(".")
    if not tail:
        if head not in {f.name for f in dc.fields(params)} or head in {"radio", "energy", "device", "uav", "tbs"}:
            raise ConfigError(f"unknown key {key!r}")
        return dc.replace(params, **{head: _coerce(value, getattr(params, head), key)})
    sub = getattr(params, head, None)
    if sub is None or not dc.is_dataclass(sub) or "." in tail:
        raise ConfigError(f"unknown key {key!r}")
    if tail not in {f.name for f in dc.fields(sub)}:
        raise ConfigError(f"unknown key {key!r}")
    new_sub = dc.replace(sub, **{tail: _coerce(value, getattr(sub, tail), key)})
    return dc.replace(params, **{head: new_sub})


def apply_sweep(params: GenParams, param: str, value: float) -> GenParams:
    if param == "deadline_s":
        params = set_param(params, "device.deadline_min_s", value)
        return set_param(params, "device.deadline_max_s", value)
    if param == "input_bits":
        params = set_param(params, "device.input_bits_min", value)
        return set_param(params, "device.input_bits_max", value)
    if param == "uav_cpu_hz":
        params = set_param(params, "uav.cpu_hz_min", value)
        return set_param(params, "uav.cpu_hz_max", value)
    if param == "num_subchannels":
        return set_param(params, "radio.num_subchannels", int(value))
    if param == "num_devices":
        return set_param(params, "num_devices", int(value))
    if param == "vartheta":
        return params
    raise ConfigError(f"unknown sweep parameter {param!r}")


_SOLVER_KEYS = {"vartheta", "epsilon", "max_outer_iters", "psi", "tau", "rule", "seed"}


def read_config(path: str | os.PathLike) -> dict[str, str]:
    """Parse a flat ``key = value`` file ('#' starts a comment)."""
    p = Path(path)
    if not p.is_file():
        raise MissingInput(f"config file {p} not found")
    out: dict[str, str] = {}
    for no, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{p}:{no}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        if not key:
            raise ConfigError(f"{p}:{no}: empty key")
        out[key] = value
    return out


def build_params(overrides: dict[str, Any], base: str = "rescaled") -> GenParams:
    overrides = dict(overrides)
    params = preset(str(overrides.pop("preset", base)))
    for key, value in overrides.items():
        if key.startswith("solver."):
            continue
        params = set_param(params, key, value)
    return params


def build_solver(overrides: dict[str, Any], base: SolverConfig | None = None) -> SolverConfig:
    cfg = base or SolverConfig()
    changes = {}
    for key, value in overrides.items():
        if not key.startswith("solver."):
            continue
        name = key.split(".", 1)[1]
        if name not in _SOLVER_KEYS:
            raise ConfigError(f"unknown key {key!r}")
        current = getattr(cfg, name)
        if name == "tau" and current is None:
            changes[name] = None if str(value).lower() == "none" else float(value)
        else:
            changes[name] = _coerce(value, current, key)
    try:
        return dc.replace(cfg, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# --------------------------------------------------------------------------
# experiment execution


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    values: tuple[float, ...]
    seeds: tuple[int, ...]
    out_dir: Path
    overrides: dict[str, Any] = field(default_factory=dict)
    solver: SolverConfig = field(default_factory=SolverConfig)
    workers: int = 1

    def __post_init__(self) -> None:
        if self.name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.name!r}; choose from {sorted(EXPERIMENTS)}")
        if not self.values:
            raise ConfigError("an experiment needs at least one sweep value")
        if not self.seeds:
            raise ConfigError("an experiment needs at least one seed")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        # fail early on bad keys
        build_params(self.overrides)
        build_solver(self.overrides)

    @classmethod
    def default(cls, name: str, out_dir, num_seeds: int = 5, **kw) -> ExperimentSpec:
        if name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
        overrides = kw.pop("overrides", {})
        first = build_params(overrides).seed
        values = kw.pop("values", None) or EXPERIMENTS[name].values
        return cls(name, tuple(values), tuple(range(first, first + num_seeds)), Path(out_dir),
                   overrides, **kw)

    def params_for(self, value: float, seed: int) -> GenParams:
        exp = EXPERIMENTS[self.name]
        merged = {**exp.defaults, **self.overrides}
        params = build_params(merged)
        params = apply_sweep(params, exp.param, value)
        return dc.replace(params, seed=seed)

    def solver_for(self) -> SolverConfig:
        return build_solver(self.overrides, self.solver)


def _row(spec, value, seed, scheme, s, x=None, cb=None, result=None) -> dict[str, Any]:
    row = {
        "experiment": spec.name, "sweep_param": EXPERIMENTS[spec.name].param,
        "sweep_value": value, "seed": seed, "scheme": scheme,
    }
    if x is None:
        row.update({c: "" for c in RUN_COLUMNS[5:]})
        row["feasible"] = 0
        return row
    bits = s.input_bits
    row.update(
        objective_j=cb.objective, md_energy_j=cb.md_energy, uav_energy_j=cb.uav_energy,
        hover_energy_j=cb.hover_energy, relay_bits=float(np.sum(x.phi * x.l * bits)),
        offload_bits=float(np.sum(x.l * bits)),
        iters=result.iterations if result is not None else "",
        mu=result.mu if result is not None else "",
        delta_violation=result.delta_violation if result is not None else "",
        feasible=int(residuals(s, x).feasible(1e-9)),
    )
    return row


def _run_point(spec: ExperimentSpec, value: float, seed: int):
    """All schemes for one (sweep value, seed); returns (rows, trace rows)."""
    params = spec.params_for(value, seed)
    s = generate_scenario(params)
    cfg = spec.solver_for()
    rows, traces = [], []

    if spec.name == "convergence":
        for rule in RULES:
            run_cfg = dc.replace(cfg, rule=rule, vartheta=value)
            try:
                res = bsum_solve(s, run_cfg)
            except Infeasible:
                rows.append(_row(spec, value, seed, rule, s))
                continue
            rows.append(_row(spec, value, seed, rule, s, res.x, res.costs, res))
            traces += [(seed, rule, value, i, v) for i, v in enumerate(res.trace)]
        return rows, traces

    def attempt(scheme, fn):
        try:
            out = fn()
        except Infeasible as exc:
            log.info("%s infeasible at %s=%s seed %d: %s", scheme, spec.name, value, seed, exc)
            rows.append(_row(spec, value, seed, scheme, s))
            return
        if isinstance(out, SolverResult):
            rows.append(_row(spec, value, seed, scheme, s, out.x, out.costs, out))
        else:
            rows.append(_row(spec, value, seed, scheme, s, *out))

    attempt("proposed", lambda: bsum_solve(s, cfg))
    attempt("local_only", lambda: local_only(s))
    attempt("offload_all", lambda: offload_all(s, cfg, strict=False))
    attempt("equal_offloading", lambda: equal_offloading(s, strict=False))
    attempt("uav_only", lambda: uav_only(s, cfg))
    return rows, traces


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict[str, Any] | Sequence]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            vals = [r[c] for c in columns] if isinstance(r, dict) else list(r)
            w.writerow([_fmt(v) for v in vals])


def run_experiment(spec: ExperimentSpec) -> list[Path]:
    """Run every (sweep value, seed) and write ``<name>.csv`` (plus
    ``<name>_trace.csv`` for the convergence experiment)."""
    jobs = [(v, sd) for v in spec.values for sd in spec.seeds]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(spec.workers) as ex:
            outputs = list(ex.map(_run_point, [spec] * len(jobs), *zip(*jobs)))
    else:
        outputs = [_run_point(spec, v, sd) for v, sd in jobs]

    order = {name: i for i, name in enumerate(SCHEMES + RULES)}
    rows = sorted(
        (r for out in outputs for r in out[0]),
        key=lambda r: (float(r["sweep_value"]), r["seed"], order[r["scheme"]]),
    )
    main = "proposed" if spec.name != "convergence" else None
    solved = [r for r in rows if (main is None or r["scheme"] == main) and r["objective_j"] != ""]
    if not solved:
        raise Infeasible(f"{spec.name}: the proposed scheme is infeasible at every sweep point")

    spec.out_dir.mkdir(parents=True, exist_ok=True)
    written = [spec.out_dir / f"{spec.name}.csv"]
    _write_csv(written[0], RUN_COLUMNS, rows)
    if spec.name == "convergence":
        traces = sorted(
            (t for out in outputs for t in out[1]),
            key=lambda t: (t[2], t[0], RULES.index(t[1]), t[3]),
        )
        written.append(spec.out_dir / f"{spec.name}_trace.csv")
        _write_csv(written[1], TRACE_COLUMNS, traces)
    return written


def read_runs(path: str | os.PathLike) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def emit_summary(results_dir: str | os.PathLike) -> Path:
    """Mean and sample standard deviation of every metric per
    (experiment, sweep point, scheme), over the rows where it is defined."""
    d = Path(results_dir)
    files = sorted(
        p for p in d.glob("*.csv") if p.name != "summary.csv" and not p.name.endswith("_trace.csv")
    ) if d.is_dir() else []
    if not files:
        raise MissingInput(f"no run CSV files in {d}")
    groups: dict[tuple, list[dict[str, str]]] = {}
    for p in files:
        for r in read_runs(p):
            key = (r["experiment"], r["sweep_param"], float(r["sweep_value"]), r["scheme"])
            groups.setdefault(key, []).append(r)

    columns = ["experiment", "sweep_param", "sweep_value", "scheme", "runs", "feasible_runs"]
    for m in METRICS:
        columns += [f"{m}_mean", f"{m}_stdev"]
    out_rows = []
    for key in sorted(groups):
        rs = groups[key]
        row = dict(zip(columns[:4], key))
        row["runs"] = len(rs)
        row["feasible_runs"] = sum(int(r["feasible"]) for r in rs)
        for m in METRICS:
            vals = [float(r[m]) for r in rs if r[m] != ""]
            row[f"{m}_mean"] = statistics.fmean(vals) if vals else ""
            row[f"{m}_stdev"] = statistics.stdev(vals) if len(vals) > 1 else (0.0 if vals else "")
        out_rows.append(row)
    target = d / "summary.csv"
    _write_csv(target, columns, out_rows)
    return target


# --------------------------------------------------------------------------
# command line


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simulate", description="Run UAV-MEC energy experiments.")
    p.add_argument("--config", help="flat key=value scenario file")
    p.add_argument("--experiment", choices=sorted(EXPERIMENTS))
    p.add_argument("--seeds", type=int, default=5, help="number of scenario seeds")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--rule", choices=("cyclic", "gs", "randomized"))
    p.add_argument("--preset", choices=("table2", "rescaled", "rescaled_psd"))
    p.add_argument("--vartheta", type=float)
    p.add_argument("--psi", type=float)
    p.add_argument("--values", help="comma-separated sweep values (default: built-in sweep)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--summary-only", action="store_true", help="only aggregate existing CSVs")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get(LOG_ENV, "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = _parser().parse_args(argv)
    try:
        if args.summary_only:
            print(emit_summary(args.out))
            return 0
        if not args.experiment:
            raise ConfigError("--experiment is required")
        if args.seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        overrides: dict[str, Any] = read_config(args.config) if args.config else {}
        if args.preset:
            overrides["preset"] = args.preset
        solver = SolverConfig()
        if args.rule:
            solver = dc.replace(solver, rule=args.rule)
        if args.vartheta is not None:
            solver = dc.replace(solver, vartheta=args.vartheta)
        if args.psi is not None:
            solver = dc.replace(solver, psi=args.psi)
        values = None
        if args.values:
            try:
                values = tuple(float(v) for v in args.values.split(","))
            except ValueError:
                raise ConfigError(f"bad --values {args.values!r}") from None
        spec = ExperimentSpec.default(
            args.experiment, args.out, args.seeds, overrides=overrides, values=values,
            solver=solver, workers=args.workers,
        )
        for path in run_experiment(spec):
            print(path)
        print(emit_summary(args.out))
        return 0
    except (MecError, ValueError) as exc:
        print(f"simulate: error: {exc}", file=sys.stderr)
        return 3 if isinstance(exc, Infeasible) else 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
