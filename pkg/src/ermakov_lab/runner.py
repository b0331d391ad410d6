"""Run a scenario's check suites and write its artifacts."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import classical as cl
from . import phase as ph
from . import quantum as qm
from .errors import ConfigError, ErmakovLabError, IntegrationError, MatchingError
from .linalg import hermiticity_defect, unitarity_defect
from .manley_rowe import conservation_report, report_as_dict, to_json_value
from .scenario import CHECKS, Scenario, scenario_from_dict, set_path

REPORT_SCHEMA_VERSION = 1
SERIES_SCHEMA_VERSION = 1
OUTPUT_ENV = "ERMAKOV_LAB_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "ermakov-out"

CONVERGENCE_GRIDS = (401, 801, 1601)
CONVERGENCE_RTOL = 1e-13
CONVERGENCE_ATOL = 1e-15
# Coarse enough that the central difference dominates integration error.
SQUEEZE_STUDY_STEP = 2e-2


@dataclass
class CheckRecord:
    name: str
    group: str
    kind: str
    block: str
    value: float
    tol: float | None
    direction: str = "max"
    status: str = "documented"
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "name": self.name, "group": self.group, "kind": self.kind, "block": self.block,
            "value": _jsonable(self.value), "tol": self.tol, "direction": self.direction,
            "status": self.status, "details": _jsonable(self.details),
        }


@dataclass
class RunReport:
    scenario: str
    parameters: dict
    records: list[CheckRecord]
    manifest: list[str] = field(default_factory=list)
    wall_time: float = 0.0
    integrator: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        gated = [r for r in self.records if r.kind == "gated"]
        return "fail" if any(r.status != "pass" for r in gated) else "pass"

    @property
    def exit_code(self) -> int:
        return 0 if self.status == "pass" else 1

    def record(self, name: str) -> CheckRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "scenario": self.scenario,
            "status": self.status,
            "parameters": _jsonable(self.parameters),
            "tolerances": {r.name: r.tol for r in self.records},
            "checks": [r.as_dict() for r in self.records],
            "manifest": list(self.manifest),
            "integrator": _jsonable(self.integrator),
            "wall_time_s": self.wall_time,
        }


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return to_json_value(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _status(value, tol, direction) -> str:
    if value is None or not math.isfinite(value):
        return "fail"
    return "pass" if (value <= tol if direction == "max" else value >= tol) else "fail"


class _Context:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.traj = None
        self.series = None
        self.residual = None
        self.invariants = None
        self._space = None
        self._phi = None

    @property
    def space(self) -> qm.FockSpace:
        if self._space is None:
            self._space = qm.build_fock(self.sc.dim, self.sc.profile.omega0, self.sc.G)
        return self._space

    @property
    def phi(self) -> ph.PhaseOperator:
        if self._phi is None:
            self._phi = ph.turski_phase_matrix(self.sc.dim)
        return self._phi

    def points(self):
        return [(t, self.traj.point_at(t)) for t in self.sc.times]


def _worst(per_time: dict) -> float:
    vals = list(per_time.values())
    return max(vals) if vals else math.nan


# ---------------------------------------------------------------- classical

def _ermakov_order(ctx):
    sc = ctx.sc
    res = []
    for n in CONVERGENCE_GRIDS:
        tr = cl.integrate_tdho(sc.profile, sc.init, n_samples=n, rtol=CONVERGENCE_RTOL,
                               atol=CONVERGENCE_ATOL, method=sc.method)
        res.append(cl.ermakov_residual(cl.amplitude_phase(tr), sc.profile).max_abs)
    orders = [math.log2(a / b) for a, b in zip(res, res[1:])]
    return orders[-1], {"grids": list(CONVERGENCE_GRIDS), "max_residual": res, "orders": orders}


def _classical(ctx, name):
    inv = ctx.invariants
    if name == "wronskian_drift":
        return inv.g_drift, {"G0": inv.G0, "max_wronskian_drift": ctx.traj.meta.get("max_wronskian_drift")}
    if name == "ermakov_residual":
        return ctx.residual.max_abs, {"G": ctx.residual.G, "points": int(ctx.residual.t.size)}
    if name == "ermakov_convergence":
        return _ermakov_order(ctx)
    if name == "invariant_identity":
        return inv.identity_defect, {}
    if name == "invariant_drift":
        return inv.i_drift, {"I0": float(inv.I[0])}
    if name == "rho_omega_identity":
        return inv.rho_omega_drift, {}
    if name == "phase_consistency":
        return ctx.series.phase_mismatch, {}
    if name == "adiabatic_deviation":
        return cl.adiabatic_check(ctx.series, ctx.sc.profile), {}
    raise KeyError(name)


# ------------------------------------------------------------------ quantum

def _squeeze_times(ctx):
    tr = ctx.traj
    ok, skipped = [], []
    for t, pt in ctx.points():
        dt = qm._default_step(pt)
        (ok if tr.t[0] <= t - dt and t + dt <= tr.t[-1] else skipped).append(t)
    return ok, skipped


def _quantum(ctx, name):
    sp, tr = ctx.space, ctx.traj
    if name == "g_commutation_initial":
        c = qm.check_g_commutation(sp, tr.initial_point())
        return c.value, {"t": float(tr.t[0]), "block": c.block}
    if name == "g_commutation":
        d = {t: qm.check_g_commutation(sp, pt).value for t, pt in ctx.points()}
        return _worst(d), {"per_time": d}
    if name == "invariant_forms":
        d = {t: qm.ermakov_operator(sp, pt)[2].value for t, pt in ctx.points()}
        return _worst(d), {"per_time": d}
    if name == "invariant_constancy":
        I0, _, _ = qm.ermakov_operator(sp, tr.initial_point())
        m = sp.polynomial_block
        d = {}
        for t, pt in ctx.points():
            It, _, _ = qm.ermakov_operator(qm.heisenberg_space(sp, tr, t), pt)
            d[t] = float(np.max(np.abs((It - I0)[:m, :m])))
        return _worst(d), {"per_time": d, "picture": "heisenberg"}
    if name == "factorization":
        d = {t: max(c.value for c in qm.check_factorization(sp, pt)) for t, pt in ctx.points()}
        return _worst(d), {"per_time": d}
    if name == "conjugation":
        d = {t: qm.phase_shift_conjugation(sp, pt, tr.phase_at(t)).value for t, pt in ctx.points()}
        return _worst(d), {"per_time": d, "s_rho": {t: tr.phase_at(t) for t in ctx.sc.times}}
    if name == "squeeze_relation":
        ok, skipped = _squeeze_times(ctx)
        d = {t: qm.check_invariant_hamiltonian_relation(sp, tr, t).value for t in ok}
        return _worst(d), {"per_time": d, "skipped_boundary_times": skipped}
    if name == "squeeze_convergence":
        ok, _ = _squeeze_times(ctx)
        if not ok:
            return math.nan, {"error": "no interior sample time"}
        t = ok[-1]
        period = 2.0 * math.pi / tr.point_at(t).omega
        steps = [SQUEEZE_STUDY_STEP * period, 0.5 * SQUEEZE_STUDY_STEP * period]
        defects = [qm.check_invariant_hamiltonian_relation(sp, tr, t, dt=h).value for h in steps]
        ratio = defects[0] / defects[1] if defects[1] > 0 else math.inf
        return abs(ratio - 4.0), {"t": t, "steps": steps, "defects": defects, "ratio": ratio}
    if name == "squeeze_unitarity":
        d = {}
        for t, pt in ctx.points():
            T = qm.squeeze_transform(sp, pt.rho, pt.drho)
            d[t] = unitarity_defect(T, sp.exponential_block)
        return _worst(d), {"per_time": d}
    if name == "heisenberg_rate":
        ok, skipped = _squeeze_times(ctx)
        d = {t: qm.heisenberg_rate_probe(sp, tr, t).value for t in ok}
        return _worst(d), {"per_time": d, "skipped_boundary_times": skipped}
    raise KeyError(name)


# -------------------------------------------------------------------- phase

def _phase(ctx, name):
    sc, sp, tr = ctx.sc, ctx.space, ctx.traj
    if name == "turski_oracle":
        m = min(9, sc.dim)
        quad = ph.turski_phase_quadrature(m).matrix
        closed = ctx.phi.matrix[:m, :m]
        return float(np.max(np.abs(closed - quad))), {"block": m}
    if name == "turski_structure":
        M = ctx.phi.matrix
        h, dg = hermiticity_defect(M), float(np.max(np.abs(np.diag(M))))
        return max(h, dg), {"hermiticity": h, "max_abs_diagonal": dg, "normalization": "pi"}
    if name == "coherent_states":
        d = {}
        for a in sc.alphas:
            v1 = ph.coherent_state(sp, a).vector
            v2 = ph.coherent_by_displacement(sp, a).vector
            d[str(a)] = float(np.max(np.abs(v1 - v2)))
        return _worst(d), {"per_alpha": d}
    if name == "coordinate_identity":
        d = {}
        for t, pt in ctx.points():
            _, _, a_t, ad_t = qm.invariant_ladder(sp, pt)
            q = (a_t + ad_t) / math.sqrt(2.0 * sp.G * pt.omega)
            m = sp.polynomial_block
            d[t] = float(np.max(np.abs((sp.q - q)[:m, :m])))
        return _worst(d), {"per_time": d}
    if name == "number_identity":
        d, probes = {}, {}
        for t, pt in ctx.points():
            rep = ph.invariant_number_phase_check(sp, pt, sp.G, sc.alphas)
            pd = max(p.defect for p in rep.probes)
            d[t] = max(rep.identity.value, pd)
            probes[t] = {str(p.alpha): [p.n_omega, p.invariant_minus_half] for p in rep.probes}
        return _worst(d), {"per_time": d, "energy_probes": probes}
    if name == "number_energy":
        d = {}
        for a in sc.alphas:
            e = ph.number_energy_series(sp, tr, a, sc.times)
            ref = e[0]
            d[str(a)] = float(np.max(np.abs(e - ref)) / abs(ref)) if ref != 0 else float(np.max(np.abs(e)))
        return _worst(d), {"per_alpha": d}
    if name == "phase_commutator":
        I0, _, _ = qm.ermakov_operator(sp, tr.initial_point())
        rep = ph.check_phase_commutator(ctx.phi, I0)
        probes = {str(abs(p.alpha)): {"expectation": p.expectation, "deviation": p.deviation}
                  for p in rep.probes}
        return rep.deviation(3.0), {
            "probes": probes, "block_defect": rep.block.value,
            "decreasing_with_amplitude": rep.deviation(3.0) < rep.deviation(1.0),
        }
    if name == "phase_eom":
        per = {}
        worst = 0.0
        for a in sc.alphas:
            rep = ph.phase_eom_probe(sp, tr, a, sc.times, ctx.phi)
            rows = [{"t": r.t, "rate": r.phase_rate, "omega": r.omega,
                     "rate_deviation": r.rate_deviation, "wrapped_angle": r.wrapped_angle}
                    for r in rep.records]
            usable = [r["rate_deviation"] for r in rows
                      if math.isfinite(r["rate_deviation"]) and abs(r["wrapped_angle"]) <= math.pi / 2]
            if usable and not rep.degenerate:
                worst = max(worst, max(usable))
            per[str(a)] = {"degenerate": rep.degenerate, "records": rows}
        return worst, {"per_alpha": per, "branch_window": "|wrapped angle| <= pi/2"}
    if name == "polar_form":
        rep = ph.coordinate_polar_check(sp, tr.initial_point(), ctx.phi)
        return rep.polar.value, {"block": rep.polar.block,
                                 "conjugate_sign": rep.conjugate_polar.value}
    raise KeyError(name)


# ------------------------------------------------------------------- ledger

def _ledger(sc):
    out = []
    entry = CHECKS["ledger"]
    tol = sc.checks.get("ledger", entry.tol)
    for p in sc.processes:
        name = f"ledger[{p.name}]"
        try:
            rep = conservation_report(p)
        except MatchingError as e:
            out.append(CheckRecord(name, "ledger", "gated", "", abs(float(e.residual)), tol,
                                   status="fail", details={"error": str(e),
                                                           "matching_residual": e.residual}))
            continue
        details = report_as_dict(rep)
        if rep.relation_holds is None:
            out.append(CheckRecord(name, "ledger", "documented", "", math.nan, None,
                                   status="documented", details=details))
            continue
        value = abs(float(rep.lhs - rep.rhs))
        status = _status(value, tol, "max")
        if rep.exact and not rep.relation_holds:
            status = "fail"
        out.append(CheckRecord(name, "ledger", "gated", "", value, tol, status=status,
                               details=details))
    return out


# ---------------------------------------------------------------------- run

def _record(name, value, details, tol):
    entry = CHECKS[name]
    if entry.kind == "documented":
        return CheckRecord(name, entry.group, "documented", entry.block, value, None,
                           entry.direction, "documented", details)
    return CheckRecord(name, entry.group, "gated", entry.block, value, tol, entry.direction,
                       _status(value, tol, entry.direction), details)


def evaluate(sc: Scenario) -> tuple[list[CheckRecord], _Context]:
    ctx = _Context(sc)
    records = []
    needs_traj = any(CHECKS[c].group != "ledger" for c in sc.checks)
    if needs_traj:
        try:
            ctx.traj = cl.integrate_tdho(sc.profile, sc.init, n_samples=sc.samples,
                                         rtol=sc.rtol, atol=sc.atol, method=sc.method)
        except IntegrationError as e:
            records.append(CheckRecord("integration", "classical", "gated", "", math.nan, None,
                                       status="fail", details={"error": str(e), **e.diagnostics}))
            return records, ctx
        ctx.series = cl.amplitude_phase(ctx.traj)
        ctx.residual = cl.ermakov_residual(ctx.series, sc.profile)
        ctx.invariants = cl.classical_invariants(ctx.traj)
    groups = {"classical": _classical, "quantum": _quantum, "phase": _phase}
    for name, tol in sc.checks.items():
        entry = CHECKS[name]
        if entry.group == "ledger":
            continue
        try:
            value, details = groups[entry.group](ctx, name)
        except ErmakovLabError as e:
            value, details = math.nan, {"error": f"{type(e).__name__}: {e}"}
        records.append(_record(name, value, details, tol))
    if sc.processes:
        records.extend(_ledger(sc))
    return records, ctx


def output_dir(out_dir=None) -> Path:
    return Path(out_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT_DIR)


def atomic_write(path, data: str) -> None:
    """Write text via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x) -> str:
    """17 significant digits; round-trips every double."""
    return format(float(x), ".16e")


def series_csv(traj, series=None, residual=None) -> str:
    cols = cl.series_table(traj, series, residual)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cl.SERIES_COLUMNS)
    for row in zip(*(cols[c] for c in cl.SERIES_COLUMNS)):
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def report_json(report: RunReport) -> str:
    return json.dumps(report.as_dict(), indent=2, sort_keys=False) + "\n"


def run(sc: Scenario, out_dir=None, write: bool = True) -> RunReport:
    """Evaluate every enabled check; with ``write`` also emit CSV and JSON artifacts."""
    t0 = time.perf_counter()
    records, ctx = evaluate(sc)
    report = RunReport(sc.name, sc.echo(), records)
    if ctx.traj is not None:
        report.integrator = {k: v for k, v in ctx.traj.meta.items() if k != "init"}
    report.wall_time = time.perf_counter() - t0
    if write:
        d = output_dir(out_dir)
        if ctx.traj is not None:
            p = d / f"{sc.name}.series.csv"
            atomic_write(p, series_csv(ctx.traj, ctx.series, ctx.residual))
            report.manifest.append(str(p))
        p = d / f"{sc.name}.report.json"
        report.manifest.append(str(p))
        atomic_write(p, report_json(report))
    return report


# -------------------------------------------------------------------- sweep

def parse_grid(specs) -> dict[str, list]:
    """``["quantum.dim=32,64,128", ...]`` -> ``{"quantum.dim": [32, 64, 128]}``."""
    grid = {}
    for s in specs or ():
        if "=" not in s:
            raise ConfigError(f"grid entry {s!r} is not of the form path=v1,v2,...", field=s)
        path, vals = s.split("=", 1)
        path = path.strip()
        items = [v.strip() for v in vals.split(",") if v.strip()]
        if not path or not items:
            raise ConfigError(f"grid entry {s!r} has no values", field=path or s)
        parsed = []
        for v in items:
            try:
                parsed.append(int(v))
            except ValueError:
                try:
                    parsed.append(float(v))
                except ValueError:
                    parsed.append(v)
        grid[path] = parsed
    if not grid:
        raise ConfigError("empty parameter grid")
    return grid


@dataclass
class SweepReport:
    template: str
    grid: dict
    points: list[dict]
    reports: list[RunReport]

    @property
    def status(self) -> str:
        return "fail" if any(r.status != "pass" for r in self.reports) else "pass"

    @property
    def exit_code(self) -> int:
        return 0 if self.status == "pass" else 1

    def values(self, check: str) -> list[float]:
        return [r.record(check).value for r in self.reports]

    def as_dict(self) -> dict:
        checks = sorted({rec.name for r in self.reports for rec in r.records})
        matrix, worst = {}, {}
        for c in checks:
            row = []
            for r in self.reports:
                try:
                    row.append(r.record(c).status)
                except KeyError:
                    row.append(None)
            matrix[c] = row
            vals = [r.record(c).value for r in self.reports
                    if any(x.name == c for x in r.records)]
            vals = [v for v in vals if isinstance(v, (int, float)) and math.isfinite(v)]
            if vals:
                direction = CHECKS[c].direction if c in CHECKS else "max"
                worst[c] = max(vals) if direction == "max" else min(vals)
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "template": self.template,
            "status": self.status,
            "grid": _jsonable(self.grid),
            "points": _jsonable(self.points),
            "status_matrix": matrix,
            "worst_case": _jsonable(worst),
            "runs": [r.scenario for r in self.reports],
        }


def _child_name(base, point):
    tag = "_".join(f"{k.split('.')[-1]}-{v}" for k, v in point.items())
    return f"{base}__{tag}".replace("+", "")


def _run_child(args):
    data, out_dir, write = args
    return run(scenario_from_dict(data), out_dir, write)


def sweep(template: Scenario, grid: dict, *, out_dir=None, write: bool = True,
          jobs: int = 1) -> SweepReport:
    """Run the template once per grid point; all children are validated first."""
    if not grid or any(not v for v in grid.values()):
        raise ConfigError("empty parameter grid")
    keys = list(grid)
    points = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    children = []
    for pt in points:
        data = template.raw
        for path, v in pt.items():
            data = set_path(data, path, v)
        data = set_path(data, "name", _child_name(template.name, pt))
        scenario_from_dict(data)  # raises ConfigError before any run starts
        children.append(data)
    args = [(d, out_dir, write) for d in children]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(_run_child, args))
    else:
        reports = [_run_child(a) for a in args]
    rep = SweepReport(template.name, grid, points, reports)
    if write:
        atomic_write(output_dir(out_dir) / f"{template.name}.sweep.json",
                     json.dumps(rep.as_dict(), indent=2) + "\n")
    return rep


def phase_matrix_csv(N: int, normalization: str = "pi") -> str:
    M = ph.turski_phase_matrix(N, normalization).matrix
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "col", "re", "im"])
    for i in range(N):
        for j in range(N):
            w.writerow([i, j, fmt(M[i, j].real), fmt(M[i, j].imag)])
    return buf.getvalue()


def phase_matrix_dump(N: int, normalization: str, path) -> Path:
    path = Path(path)
    atomic_write(path, phase_matrix_csv(N, normalization))
    return path
