"""
Command-line front end: ``slab-soliton {barriers,solve,sweep,analyze}``.

Exit codes: 0 all checks pass, 1 a check failed, 2 bad input, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import analysis as an
from .barrier_checks import barrier_report
from .closed_forms import BarrierParams, SlabParams, epsilon0_estimate
from .grid import GridError, build_grid
from .solver import (
    Resolution,
    SolverConfig,
    SolverError,
    TranslatorSolution,
    continuation_sweep,
    solution_from_values,
    solve,
)

__all__ = ["RunConfig", "ConfigError", "main", "cmd_barriers", "cmd_solve", "cmd_sweep", "cmd_analyze"]

log = logging.getLogger("slab_soliton")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3

ALL_CHECKS = ("ordering", "height", "boundary_H", "H_over_v", "convexity", "reflection_symmetry")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int = 2
    theta: float = math.pi / 3
    R_list: tuple = ()
    nx: int = 129
    nrho: int = 129
    per_unit: Optional[float] = None
    solver: dict = field(default_factory=dict)
    checks: tuple = ALL_CHECKS
    out: str = "out"
    seed: int = 0
    epsilon: Optional[float] = None
    scan_samples: int = 100
    omega_fractions: tuple = (0.5,)
    window_halfwidth: float = 1.0
    level_fraction: float = 0.5
    convexity_threshold: float = 1e-3

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        d = dict(d)
        for key in ("R_list", "checks", "omega_fractions"):
            if key in d:
                if not isinstance(d[key], (list, tuple)):
                    raise ConfigError(f"{key} must be a list")
                d[key] = tuple(d[key])
        try:
            cfg = cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        try:
            slab = SlabParams(self.n, float(self.theta))
            for R in self.R_list:
                BarrierParams(slab, float(R))
            if self.epsilon is not None:
                BarrierParams(slab, 1.0, float(self.epsilon))
            self.solver_config()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        bad = [c for c in self.checks if c not in ALL_CHECKS]
        if bad:
            raise ConfigError(f"unknown checks: {bad}")
        if self.per_unit is None and (int(self.nx) != self.nx or int(self.nrho) != self.nrho):
            raise ConfigError("nx and nrho must be integers")
        if self.per_unit is not None and not self.per_unit > 0:
            raise ConfigError("per_unit must be positive")
        if not all(0 <= f < 1 for f in self.omega_fractions):
            raise ConfigError("omega_fractions must lie in [0, 1)")
        if not 0 < self.level_fraction < 1:
            raise ConfigError("level_fraction must lie in (0, 1)")
        if self.scan_samples < 2:
            raise ConfigError("scan_samples must be at least 2")

    @property
    def slab(self) -> SlabParams:
        return SlabParams(self.n, float(self.theta))

    def solver_config(self) -> SolverConfig:
        known = {f.name for f in dataclasses.fields(SolverConfig)}
        bad = sorted(set(self.solver) - known)
        if bad:
            raise ConfigError(f"unknown solver keys: {', '.join(bad)}")
        return SolverConfig(**self.solver)

    def resolution(self) -> Resolution:
        return Resolution(int(self.nx), int(self.nrho), self.per_unit)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ------------------------------------------------------------------ I/O


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(obj: Any, config_hash: str) -> str:
    obj = dict(an._jsonable(obj))
    obj["config_hash"] = config_hash
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def _csv(header: Sequence[str], rows: Sequence[Sequence], config_hash: str) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _tag(R: float) -> str:
    return f"R{R:g}".replace(".", "p")


def _write_solution(out: Path, sol: TranslatorSolution, report: an.VerificationReport, cfg: RunConfig, h: str) -> None:
    g = sol.grid
    gf = sol.diagnostics
    rows = zip(g.node_x, g.node_rho, sol.u.values, sol.normalized_u.values, gf.H, gf.W, gf.eigmin_hess)
    tag = _tag(g.bp.R)
    _atomic_write(out / f"solution_{tag}.csv", _csv(["x", "rho", "u", "u_normalized", "H", "W", "eigmin_hess"], list(rows), h))
    meta = sol.metadata()
    meta["config"] = cfg.to_dict()
    meta["csv"] = f"solution_{tag}.csv"
    _atomic_write(out / f"solution_{tag}.json", _dump_json(meta, h))
    _atomic_write(out / f"report_{tag}.json", _dump_json(report.to_dict(), h))


def _select(report: an.VerificationReport, checks: Sequence[str]) -> an.VerificationReport:
    return an.VerificationReport([r for r in report.records if r.name in checks], report.context)


# ------------------------------------------------------------- commands


def cmd_barriers(cfg: RunConfig, out: Path) -> int:
    rep = barrier_report(cfg.slab, seed=cfg.seed, epsilon=cfg.epsilon, m=cfg.scan_samples)
    _atomic_write(out / "barrier_report.json", _dump_json(rep.to_dict(), cfg.hash()))
    for r in rep.records:
        log.info("%s: margin=%.3e pass=%s", r.name, r.margin, r.pass_)
    return EXIT_OK if rep.passed else EXIT_CHECK


def _solve_one(args) -> tuple:
    """Worker: cold solve for one R; returns (R, solution or error text)."""
    cfg_dict, R = args
    cfg = RunConfig.from_dict(cfg_dict)
    bp = BarrierParams(cfg.slab, float(R))
    try:
        grid = cfg.resolution().build(bp)
        return R, solve(bp, grid, cfg.solver_config()), None
    except (SolverError, GridError) as exc:
        return R, None, f"{type(exc).__name__}: {exc}"


def _run_solves(cfg: RunConfig, jobs: int, continuation: bool) -> list[tuple]:
    if continuation:
        res = continuation_sweep(cfg.slab, cfg.R_list, cfg.resolution(), cfg.solver_config())
        return [(R, r, None) if isinstance(r, TranslatorSolution) else (R, None, f"{type(r).__name__}: {r}") for R, r in zip(cfg.R_list, res)]
    tasks = [(cfg.to_dict(), float(R)) for R in cfg.R_list]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_solve_one, tasks))
    return [_solve_one(t) for t in tasks]


def _solve_and_report(cfg: RunConfig, out: Path, jobs: int, continuation: bool) -> tuple[int, list]:
    if not cfg.R_list:
        raise ConfigError("R_list is empty")
    h = cfg.hash()
    eps0 = epsilon0_estimate(cfg.slab)
    results = _run_solves(cfg, jobs, continuation)
    code = EXIT_OK
    solved = []
    failures = {}
    for R, sol, err in results:
        if sol is None:
            log.error("R=%g: %s", R, err)
            failures[_tag(R)] = err
            code = EXIT_SOLVER
            continue
        rep = _select(an.verify(sol, eps0, cfg.convexity_threshold), cfg.checks)
        _write_solution(out, sol, rep, cfg, h)
        solved.append((R, sol, rep))
        if not rep.passed and code == EXIT_OK:
            code = EXIT_CHECK
    if failures:
        _atomic_write(out / "failures.json", _dump_json({"failures": failures}, h))
    return code, solved


def cmd_solve(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    return _solve_and_report(cfg, out, jobs, continuation=False)[0]


def _monotone(vals: Sequence[float], increasing: bool = True) -> bool:
    v = [x for x in vals if math.isfinite(x)]
    return all((b > a) if increasing else (b < a) for a, b in zip(v, v[1:]))


def cmd_sweep(cfg: RunConfig, out: Path, jobs: int = 1) -> int:
    """Continuation sweep (``jobs == 1``) or independent parallel solves."""
    code, solved = _solve_and_report(cfg, out, jobs, continuation=jobs <= 1)
    rows = []
    for R, sol, rep in solved:
        h = cfg.level_fraction * (-sol.origin_value)
        try:
            extent = an.level_set_width(sol, h).max_extent
        except ValueError:
            extent = math.nan
        rows.append([R, -sol.origin_value / R, an.check_H_over_v(sol).margin, an.max_axis_tilt(sol), extent])
    cols = list(zip(*rows)) if rows else [[]] * 5
    flags = {
        "height_ratio_increasing": _monotone(cols[1]),
        "omega_bar_increasing": _monotone(cols[3]),
        "max_extent_increasing": _monotone(cols[4]),
    }
    header = ["R", "height_over_R", "inf_H_over_v", "omega_bar", "max_extent"]
    _atomic_write(out / "trend.csv", _csv(header, rows, cfg.hash()))
    _atomic_write(
        out / "trend.json",
        _dump_json({"columns": header, "rows": rows, "monotone": flags, "mode": "continuation" if jobs <= 1 else "parallel"}, cfg.hash()),
    )
    return code


def _load_solution(meta_path: Path) -> TranslatorSolution:
    try:
        meta = json.loads(meta_path.read_text())
        gm = meta["grid"]
        bpd = gm["bp"]
        slab = SlabParams(int(bpd["n"]), float(bpd["theta"]))
        eps = bpd.get("epsilon")
        bp = BarrierParams(slab, float(bpd["R"]), 0.0 if eps is None else float(eps))
        grid = build_grid(bp, int(gm["nx"]), int(gm["nrho"]), float(gm["merge_threshold"]), float(gm["snap_threshold"]))
        rows = _read_csv(meta_path.parent / meta["csv"])
        if len(rows) != grid.n_unknowns:
            raise ValueError(f"{meta['csv']}: {len(rows)} rows, grid has {grid.n_unknowns} nodes")
        x = np.array([float(r["x"]) for r in rows])
        rho = np.array([float(r["rho"]) for r in rows])
        if np.abs(x - grid.node_x).max() > 1e-12 or np.abs(rho - grid.node_rho).max() > 1e-12:
            raise ValueError(f"{meta['csv']}: node coordinates do not match the grid")
        u = np.array([float(r["u"]) for r in rows])
        return solution_from_values(grid, u, int(meta.get("newton_iters", 0)))
    except (OSError, KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load {meta_path}: {exc}") from exc


def cmd_analyze(cfg: RunConfig, out: Path, files: Sequence[str]) -> int:
    paths = [Path(f) for f in files] if files else sorted(out.glob("solution_R*.json"))
    if not paths:
        raise ConfigError("no solution files to analyze")
    sols = sorted((_load_solution(p) for p in paths), key=lambda s: s.bp.R)
    h = cfg.hash()
    fit_rows, records, widths = [], [], []
    code = EXIT_OK
    for sol in sols:
        R = sol.bp.R
        theta = sol.bp.slab.theta
        for frac in cfg.omega_fractions:
            om = frac * theta
            try:
                gfit = an.grim_fit(sol, om, cfg.window_halfwidth)
                fit_rows.append([R, om, gfit.error, gfit.tip.rho, gfit.clipped, "ok"])
            except an.OmegaOutOfRange as exc:
                fit_rows.append([R, om, math.nan, math.nan, False, an.OmegaOutOfRange.code])
                log.warning("R=%g omega=%g: %s", R, om, exc)
        hl = cfg.level_fraction * (-sol.origin_value)
        try:
            wr = an.level_set_width(sol, hl)
            _atomic_write(
                out / f"level_set_{_tag(R)}.csv",
                _csv(["rho", "x_plus", "x_minus", "h"], [[r, a, b, hl] for r, a, b in zip(wr.rho, wr.x_plus, wr.x_minus)], h),
            )
            widths.append({"R": R, **wr.to_dict()})
        except ValueError as exc:
            widths.append({"R": R, "error": str(exc)})
        rec = an.check_reflection_symmetry(sol)
        records.append({"R": R, **rec.to_dict()})
        if not rec.pass_:
            code = EXIT_CHECK
    _atomic_write(out / "grim_fit.csv", _csv(["R", "omega", "error", "tip_rho", "clipped", "status"], fit_rows, h))
    trends = {}
    for frac in cfg.omega_fractions:
        errs = [r[2] for r in fit_rows if r[1] == frac * sols[0].bp.slab.theta]
        trends[f"grim_fit_decreasing_{frac:g}"] = _monotone(errs, increasing=False)
    _atomic_write(out / "analysis_report.json", _dump_json({"symmetry": records, "level_sets": widths, "trends": trends}, h))
    return code


# ------------------------------------------------------------------ main


def _setup_logging() -> None:
    level = os.environ.get("SLAB_SOLITON_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )


def _load_config(path: Optional[str], seed: Optional[int], out: Optional[str]) -> RunConfig:
    data: dict = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if seed is not None:
        data = {**data, "seed": seed}
    if out is not None:
        data = {**data, "out": out}
    return RunConfig.from_dict(data)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slab-soliton", description="Translating solitons in slabs: barriers, solves and checks.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, hlp in (
        ("barriers", "scan the barrier inequalities"),
        ("solve", "solve the Dirichlet problem for each R"),
        ("sweep", "continuation sweep over R with trend tables"),
        ("analyze", "asymptotics, level sets and symmetry of saved solutions"),
    ):
        sp_ = sub.add_parser(name, help=hlp)
        sp_.add_argument("--config", help="JSON run configuration")
        sp_.add_argument("--out", help="output directory (overrides config)")
        sp_.add_argument("--jobs", type=int, default=1, help="worker processes")
        sp_.add_argument("--seed", type=int, help="seed for sampled scans (overrides config)")
        if name == "analyze":
            sp_.add_argument("files", nargs="*", help="solution_*.json files (default: all in --out)")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = _load_config(args.config, args.seed, args.out)
        out = Path(cfg.out)
        if args.command == "barriers":
            return cmd_barriers(cfg, out)
        if args.command == "solve":
            return cmd_solve(cfg, out, args.jobs)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.jobs)
        return cmd_analyze(cfg, out, args.files)
    except ConfigError as exc:
        print(f"slab-soliton: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
