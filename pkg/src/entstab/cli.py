"""Batch driver: inequality sweeps, constant tables and flow runs.

    entstab check --suite logsob,beckner --d 1,2,3
    entstab constants --case fd --q 2 --d 2
    entstab ou --t-end 3
    entstab flow --case fd --p 0.75 --d 2
    entstab report out/check.json

Every command writes a JSON report and CSV tables into --out. Exit status:
0 all verdicts pass, 1 some verdict fails, 2 bad configuration, 3 numerical
failure (CFL violation, non-finite values, ...).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import dynamics as dyn
from . import inequalities as ineq
from .profiles import ProfileError, ProfileSpec, check_exponent, grid_for, sample

COMMANDS = ("check", "constants", "ou", "flow", "report")
FORMATS = ("json", "csv", "plot")
VERDICT_HEADER = ["suite", "profile", "d", "param", "lhs", "rhs", "margin", "residual", "pass"]
TRAJECTORY_HEADER = ["t", "value", "fisher", "sigma", "theta", "plain_bound", "improved_bound"]
CONSTANT_HEADER = ["case", "d", "q", "p", "a", "b", "zeta_or_eta", "kappa", "beta", "alpha", "theta",
                   "C_gn", "C", "B_star"]
FLOW_MASS_TOL = 1e-10
OU_TOL = 1e-6

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (exit status 2)."""


@dataclass
class RunConfig:
    command: str = "check"
    suite: list[str] = field(default_factory=lambda: list(ineq.SUITES))
    case: Optional[str] = None
    d: list[int] = field(default_factory=lambda: [1, 2, 3])
    q: list[float] = field(default_factory=list)
    p: list[float] = field(default_factory=list)
    grid_n: Optional[int] = None
    extent: Optional[float] = None
    dt: Optional[float] = None
    t_end: Optional[float] = None
    scheme: str = "semi_implicit_fv"
    corpus: str = "standard"
    out: str = "entstab-out"
    format: list[str] = field(default_factory=lambda: ["json", "csv"])
    inputs: list[str] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        bad = [s for s in self.suite if s not in ineq.SUITES]
        if bad:
            raise ConfigError(f"unknown suite(s): {', '.join(bad)}")
        if not self.d or any(d not in (1, 2, 3) for d in self.d):
            raise ConfigError(f"dimensions must be among 1, 2, 3 (got {self.d})")
        if self.case not in (None, "fd", "pm"):
            raise ConfigError(f"case must be fd or pm (got {self.case!r})")
        if self.command in ("constants", "flow") and self.case is None:
            raise ConfigError(f"{self.command} needs --case")
        bad = [f for f in self.format if f not in FORMATS]
        if bad:
            raise ConfigError(f"unknown format(s): {', '.join(bad)}")
        if self.grid_n is not None and self.grid_n < 16:
            raise ConfigError("grid-n must be at least 16")
        for name in ("extent", "dt", "t_end"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ConfigError(f"{name} must be positive")
        if self.scheme not in ("explicit_fv", "semi_implicit_fv"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        self._validate_exponents()

    def _validate_exponents(self) -> None:
        cmd = self.command
        if cmd == "flow":
            for d in self.d:
                for p in self.p:
                    try:
                        check_exponent(p, d, self.case)
                    except ProfileError as exc:
                        raise ConfigError(str(exc)) from None
        if cmd == "constants":
            for d in self.d:
                for q in self.q:
                    try:
                        case = ineq.gn_case(q, d)
                    except ineq.InequalityError as exc:
                        raise ConfigError(str(exc)) from None
                    if case != self.case:
                        raise ConfigError(f"q={q} belongs to the {case} case, not {self.case}")
        if cmd == "ou" and any(not 1 < p < 2 for p in self.p):
            raise ConfigError("ou --p values must lie in (1, 2)")
        if cmd == "check" and self.p:
            if "beckner" in self.suite and any(not 1 <= p <= 2 for p in self.p):
                if set(self.suite) == {"beckner"}:
                    raise ConfigError("Beckner exponents must lie in [1, 2]")


# --- argument parsing ---------------------------------------------------------------

def _list(conv):
    def parse(text: str):
        try:
            return [conv(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entstab", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
        sp.add_argument("--suite", type=_list(str))
        sp.add_argument("--case", choices=("fd", "pm"))
        sp.add_argument("--d", type=_list(int))
        sp.add_argument("--q", type=_list(float))
        sp.add_argument("--p", type=_list(float))
        sp.add_argument("--grid-n", dest="grid_n", type=int)
        sp.add_argument("--extent", type=float)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--t-end", dest="t_end", type=float)
        sp.add_argument("--scheme")
        sp.add_argument("--corpus", help="'standard' or a JSON file with a list of profile specs")
        sp.add_argument("--out")
        sp.add_argument("--format", type=_list(str))
        if name == "report":
            sp.add_argument("inputs", nargs="*", help="JSON reports (default: every report in --out)")
    return parser


def config_from_args(argv=None) -> RunConfig:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            raise ConfigError("could not parse the command line") from None
        raise
    data: dict = {}
    if ns.config:
        try:
            data = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    data["command"] = ns.command
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        val = getattr(ns, f.name, None)
        if val is not None and not (f.name == "inputs" and not val):
            data[f.name] = val
    cfg = RunConfig.from_dict(data)
    cfg.validate()
    return cfg


# --- corpus selection -----------------------------------------------------------------

def load_corpus(cfg: RunConfig) -> Optional[list[tuple[str, ProfileSpec]]]:
    """None for the standard corpora, otherwise the (label, spec) list of a JSON file."""
    if cfg.corpus == "standard":
        return None
    try:
        raw = json.loads(Path(cfg.corpus).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read corpus {cfg.corpus}: {exc}") from None
    if not isinstance(raw, list):
        raise ConfigError("corpus file must hold a JSON list of profile specs")
    try:
        specs = [ProfileSpec.from_dict(item) for item in raw]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad profile spec in corpus: {exc}") from None
    if not specs:
        raise ConfigError("empty corpus selection")
    return [(s.label, s) for s in specs]


# --- commands ----------------------------------------------------------------------------

def _record(suite: str, profile: str, d: int, param: str, v: ineq.Verdict) -> dict:
    return {"suite": suite, "profile": profile, "d": d, "param": param, "id": v.inequality_id,
            "lhs": v.lhs, "rhs": v.rhs, "margin": v.margin, "tolerance": v.tolerance,
            "residual": v.residual, "valid": v.valid, "pass": v.passed}


def run_check(cfg: RunConfig) -> dict:
    corpus = load_corpus(cfg)
    n = cfg.grid_n or 2048
    records = []
    for suite in cfg.suite:
        for d in cfg.d:
            exps = tuple(cfg.p) or None
            if suite == "beckner" and exps is not None:
                exps = tuple(p for p in exps if 1 <= p <= 2) or None
            recs = ineq.run_suite(suite, d, n, exponents=exps, corpus=corpus)
            records += [_record(r.suite, r.profile, r.d, r.param, r.verdict) for r in recs]
    if not records:
        raise ConfigError("empty corpus selection: no profile matches the requested suites/exponents")
    return {"records": records}


def _constants_qs(cfg: RunConfig, d: int) -> list[float]:
    if cfg.q:
        return list(cfg.q)
    from .profiles import FD_EXPONENTS, PM_EXPONENTS
    ps = cfg.p or (FD_EXPONENTS[d] if cfg.case == "fd" else PM_EXPONENTS)
    return [ineq.q_of_p(p) for p in ps]


def run_constants(cfg: RunConfig) -> dict:
    n = cfg.grid_n or 2048
    rows = []
    for d in cfg.d:
        for q in _constants_qs(cfg, d):
            s = ineq.gn_setting(q, d, n)
            if s.case != cfg.case:
                raise ConfigError(f"q={q:g} belongs to the {s.case} case")
            rows.append({"case": s.case, "d": d, "q": s.q, "p": s.p, "a": s.a, "b": s.b,
                         "zeta_or_eta": s.zeta_or_eta, "kappa": s.kappa, "beta": s.beta,
                         "alpha": s.alpha, "theta": s.theta_gn, "C_gn": float(s.C_gn),
                         "C": float(s.C), "B_star": float(s.B_star)})
    if not rows:
        raise ConfigError("no exponents selected")
    return {"constants": rows}


def _trajectory_dict(label: str, d: int, param: str, traj: dyn.Trajectory) -> dict:
    meta = {k: v for k, v in traj.meta.items() if isinstance(v, (int, float, str))}
    return {"profile": label, "d": d, "param": param, "kind": traj.kind, "meta": meta,
            "points": [pt.as_row() for pt in traj]}


def _ou_data(cfg: RunConfig):
    corpus = load_corpus(cfg)
    if corpus is None:
        return [(lab, d, f0) for lab, d, f0 in dyn.ou_corpus() if d in cfg.d]
    out = []
    for d in cfg.d:
        for lab, spec in corpus:
            g = grid_for(spec, d, cfg.grid_n or 2048)
            out.append((lab, d, dyn.ou_initial_datum(sample(spec, g))))
    return out


def run_ou(cfg: RunConfig) -> dict:
    dt = cfg.dt or 0.03
    solver = dyn.SolverConfig(dt=dt, t_end=cfg.t_end or 3.0, scheme="exact_semigroup", record_every=1)
    data = _ou_data(cfg)
    if not data:
        raise ConfigError("empty corpus selection")
    records, trajs = [], []
    for label, d, f0 in data:
        tr = dyn.ou_evolve(f0, solver)
        rep = dyn.decay_report(tr)
        v = tr.column("value")
        imp = tr.column("improved_bound")
        j = int(np.argmin(imp - v))
        tol = OU_TOL + tr.meta["quadrature_error"]
        records.append(_record("ou", label, d, "improved_bound",
                               ineq.verdict("ou.improved_bound", imp[j], v[j], tolerance=tol)))
        records.append(_record("ou", label, d, "bounds_ordered", ineq.verdict(
            "ou.bounds_ordered", float(np.min(tr.column("plain_bound") - imp)), 0.0, tolerance=1e-10)))
        M = tr.column("mass")
        records.append(_record("ou", label, d, "mass", ineq.verdict(
            "ou.mass", OU_TOL, float(np.max(np.abs(M / M[0] - 1.0))), tolerance=0.0)))
        trajs.append(_trajectory_dict(label, d, "entropy", tr) | {"report": rep.to_dict()})
        for p in cfg.p:
            # comparator steps of at most 0.01, recorded on the entropy time grid
            sub = max(1, int(round(dt / 0.01)))
            bt = dyn.ou_beckner_trace(f0, p, dyn.SolverConfig(dt=dt / sub, t_end=solver.t_end,
                                                              scheme="exact_semigroup", record_every=sub))
            gap = bt.column("improved_bound") - bt.column("value")
            records.append(_record("ou", label, d, f"p={p:g}:beckner", ineq.verdict(
                "ou.beckner_comparator", float(gap.min()), 0.0, tolerance=OU_TOL)))
            trajs.append(_trajectory_dict(label, d, f"p={p:g}", bt))
    return {"records": records, "trajectories": trajs}


def run_flow(cfg: RunConfig) -> dict:
    corpus = load_corpus(cfg)
    n = cfg.grid_n or 1024
    solver_kw = dict(dt=cfg.dt or 1e-3, t_end=cfg.t_end or 1.0, scheme=cfg.scheme, record_every=10)
    records, trajs = [], []
    for d in cfg.d:
        if corpus is None:
            entries = dyn.flow_corpus(cfg.case, d, exponents=tuple(cfg.p) or None)
        else:
            entries = [(lab, s.p, s) for lab, s in corpus if s.p is not None and (s.p < 1) == (cfg.case == "fd")]
        for label, p, spec in entries:
            g = grid_for(spec, d, n)
            if cfg.extent is not None:
                from .numerics import build_grid
                g = build_grid(g.kind, d, cfg.extent, n, stretch=g.stretch)
            u0 = sample(spec, g)
            tr = dyn.rescaled_flow_evolve(u0, p, cfg.case, dyn.SolverConfig(**solver_kw))
            rep = dyn.decay_report(tr)
            F = tr.column("value")
            imp = tr.column("improved_bound")
            scale = max(1.0, float(np.abs(F).max()))
            j = int(np.argmin(imp - F))
            rows = [
                ineq.verdict(f"flow.{cfg.case}.comparator", imp[j], F[j], tolerance=1e-12 * scale),
                ineq.verdict(f"flow.{cfg.case}.free_energy_monotone", 0.0, float(np.max(np.diff(F))),
                             tolerance=1e-12 * scale),
                ineq.verdict(f"flow.{cfg.case}.sigma_nonincreasing", 0.0,
                             float(np.max(np.diff(tr.column("sigma")))), tolerance=1e-12),
                ineq.verdict(f"flow.{cfg.case}.mass", FLOW_MASS_TOL, tr.meta["mass_drift"], tolerance=0.0),
            ]
            param = f"p={p:g}"
            records += [_record("flow", label, d, param, v) for v in rows]
            trajs.append(_trajectory_dict(label, d, param, tr) | {"report": rep.to_dict()})
    if not records:
        raise ConfigError("empty corpus selection")
    return {"records": records, "trajectories": trajs}


def run_report(cfg: RunConfig) -> dict:
    paths = [Path(p) for p in cfg.inputs] or sorted(
        p for p in Path(cfg.out).glob("*.json") if p.name != "summary.json")
    reports = []
    for path in paths:
        try:
            reports.append(json.loads(path.read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read report {path}: {exc}") from None
    if not reports:
        raise ConfigError("no reports to summarize")
    records = [r for rep in reports for r in rep.get("records", [])]
    trajs = [t for rep in reports for t in rep.get("trajectories", [])]
    return {"records": records, "trajectories": trajs, "sources": [str(p) for p in paths]}


RUNNERS = {"check": run_check, "constants": run_constants, "ou": run_ou, "flow": run_flow, "report": run_report}


# --- output -----------------------------------------------------------------------------------

def _finite_or_none(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _check_finite(body: dict) -> None:
    for rec in body.get("records", []):
        for key in ("lhs", "rhs", "margin"):
            if not math.isfinite(rec[key]):
                raise FloatingPointError(f"non-finite {key} in {rec['id']} ({rec['profile']})")
    for row in body.get("constants", []):
        for key, val in row.items():
            if isinstance(val, float) and not math.isfinite(val):
                raise FloatingPointError(f"non-finite constant {key}")
    for tr in body.get("trajectories", []):
        for row in tr["points"]:
            # sigma / fisher / theta are not defined for every flow; only t, value and bounds must be finite
            for k in (0, 1, 5, 6):
                if not math.isfinite(row[k]):
                    raise FloatingPointError(f"non-finite trajectory entry for {tr['profile']}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _finite_or_none(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in text)


def write_outputs(cfg: RunConfig, body: dict) -> list[Path]:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    stem = cfg.command if cfg.command != "report" else "summary"
    if "json" in cfg.format:
        path = out / f"{stem}.json"
        path.write_text(json.dumps(_jsonable(body), indent=1) + "\n")
        written.append(path)
    if "csv" in cfg.format:
        if body.get("records"):
            path = out / f"{stem}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(VERDICT_HEADER)
                for r in body["records"]:
                    w.writerow([r["suite"], r["profile"], r["d"], r["param"], repr(r["lhs"]), repr(r["rhs"]),
                                repr(r["margin"]), repr(r["residual"]), int(r["pass"])])
            written.append(path)
        if body.get("constants"):
            path = out / f"{stem}.csv"
            with path.open("w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=CONSTANT_HEADER)
                w.writeheader()
                for row in body["constants"]:
                    w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
            written.append(path)
        for i, tr in enumerate(body.get("trajectories", []) if cfg.command != "report" else []):
            path = out / f"traj_{i:03d}_{_slug(tr['profile'])}_d{tr['d']}_{_slug(tr['param'])}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(TRAJECTORY_HEADER)
                for row in tr["points"]:
                    w.writerow(["" if not math.isfinite(x) else repr(float(x)) for x in row])
            written.append(path)
    if "plot" in cfg.format and cfg.command != "report":
        pdir = out / "plot"
        pdir.mkdir(exist_ok=True)
        for i, tr in enumerate(body.get("trajectories", [])):
            pts = np.asarray(tr["points"], dtype=float)
            for col, name in ((1, "value"), (5, "plain_bound"), (6, "improved_bound")):
                path = pdir / f"traj_{i:03d}_{name}.dat"
                np.savetxt(path, pts[:, [0, col]], fmt="%.17g")
                written.append(path)
    return written


def emit_summary(reports: list[dict]) -> str:
    """Aligned text summary: per-suite pass counts, worst margin, residual maxima, wall clock.

    Failing verdict ids come first (sorted), then one line per suite.
    """
    if not reports:
        raise ValueError("no reports")
    records = [r for rep in reports for r in rep.get("records", [])]
    wall = sum(float(rep.get("meta", {}).get("timestamp", {}).get("wall_clock", 0.0)) for rep in reports)
    lines = []
    failing = sorted({(r["id"], r["profile"], r["param"], r["d"]) for r in records if not r["pass"]})
    for ident, prof, param, d in failing:
        lines.append(f"FAIL {ident:34s} d={d} {prof} {param}".rstrip())
    suites = sorted({r["suite"] for r in records})
    width = max([5] + [len(s) for s in suites])
    if suites:
        lines.append(f"{'suite':{width}s} {'total':>6s} {'fail':>5s} {'worst_margin':>13s} {'max_residual':>13s}")
    for s in suites:
        rs = [r for r in records if r["suite"] == s]
        fails = sum(not r["pass"] for r in rs)
        worst = min(r["margin"] for r in rs)
        resid = max(r["residual"] for r in rs)
        lines.append(f"{s:{width}s} {len(rs):6d} {fails:5d} {worst:13.3e} {resid:13.3e}")
    trajs = [t for rep in reports for t in rep.get("trajectories", [])]
    margins = []
    for tr in trajs:
        pts = np.asarray(tr["points"], dtype=float)
        if pts.size:
            margins.append(float(np.min(pts[:, 6] - pts[:, 1])))
    if margins:
        lines.append(f"trajectories {len(margins)}: min margin vs improved bound {min(margins):.3e}")
    lines.append(f"wall clock {wall:.2f}s")
    return "\n".join(lines)


def run(cfg: RunConfig) -> int:
    """Execute one configured command; returns the exit status."""
    start = time.perf_counter()
    try:
        body = RUNNERS[cfg.command](cfg)
        _check_finite(body)
    except ConfigError as exc:
        print(f"entstab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (dyn.DynamicsError, FloatingPointError, ineq.InequalityError, np.linalg.LinAlgError) as exc:
        print(f"entstab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    # everything run-dependent lives under "timestamp" so the rest is reproducible byte for byte
    stamp = {"started": time.strftime("%Y-%m-%dT%H:%M:%S"), "wall_clock": time.perf_counter() - start}
    meta = {"command": cfg.command, "version": __version__, "config": asdict(cfg), "timestamp": stamp}
    report = {"meta": meta} | body
    try:
        write_outputs(cfg, report)
    except OSError as exc:
        print(f"entstab: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(emit_summary([report]) if report.get("records") else _constants_table(report))
    failing = sorted({r["id"] for r in report.get("records", []) if not r["pass"]})
    if failing:
        print("failing ids: " + ", ".join(failing), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _constants_table(report: dict) -> str:
    rows = report.get("constants", [])
    lines = [" ".join(f"{h:>12s}" for h in CONSTANT_HEADER)]
    for row in rows:
        lines.append(" ".join(f"{row[h]:>12.6g}" if isinstance(row[h], float) else f"{row[h]!s:>12s}"
                              for h in CONSTANT_HEADER))
    return "\n".join(lines)


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
    except ConfigError as exc:
        print(f"entstab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
