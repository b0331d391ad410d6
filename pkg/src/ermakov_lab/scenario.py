"""Scenario files: TOML text describing one run of the check suites.

Schema (every table is optional except ``name``; ``profile`` is required
unless only ledger checks are enabled)::

    name = "tanh-sweep-adiabatic"
    description = "free text"

    [profile]            # FrequencyProfile fields
    kind = "tanh_sweep"
    omega_start = 1.0
    omega_end = 2.0
    t_min = 0.0
    t_max = 100.0
    duration = 50.0
    center = 50.0        # default: domain midpoint

    [initial]
    pair = "default-g1"  # or "explicit" with u1 = [u, du], u2 = [u, du]

    [integrator]
    method = "DOP853"    # any solve_ivp method, or "analytic" for constant profiles
    rtol = 1e-10
    atol = 1e-12
    samples = 2001

    [quantum]
    dim = 64
    alphas = [1.0, 2.0, 3.0]
    times = [0.0, 25.0, 50.0]   # default: 5 points on [t_min, midpoint]

    [checks.<name>]      # enables the check; see CHECKS for names
    tol = 1e-8           # optional, default from the catalogue

    [[process]]          # frequency-conversion ledger
    name = "sfg"
    omega_out = "5/2"    # strings are exact rationals, floats stay floats
    [[process.mode]]
    id = "1"
    coefficient = 2
    omega = "1"
    n = "100"
"""

from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .classical import DEFAULT_ATOL, DEFAULT_RTOL, default_initial_pair
from .errors import ConfigError, DomainError
from .manley_rowe import Mode, ProcessSpec
from .profiles import FrequencyProfile
from .quantum import DEFAULT_DIM, MIN_DIM


@dataclass(frozen=True)
class CheckSpec:
    name: str
    group: str
    kind: str           # "gated" | "documented"
    direction: str      # "max": value <= tol passes; "min": value >= tol passes
    tol: float | None
    block: str = ""
    description: str = ""


def _c(name, group, tol, block="", description="", kind="gated", direction="max"):
    return CheckSpec(name, group, kind, direction, tol, block, description)


#: Every check a scenario can enable, with its default tolerance.
CHECKS: dict[str, CheckSpec] = {c.name: c for c in (
    _c("wronskian_drift", "classical", 1e-8, description="max |G(t)/G(t0) - 1|"),
    _c("ermakov_residual", "classical", 1e-5,
       description="max |rho'' + Omega^2 rho - G^2/rho^3| on the sample grid"),
    _c("ermakov_convergence", "classical", 3.9, direction="min",
       description="observed order of the residual under grid halving"),
    _c("invariant_identity", "classical", 1e-12,
       description="max relative |rho^4 s'^2/2 - G^2/2|"),
    _c("invariant_drift", "classical", 1e-8, description="max relative drift of rho^4 s'^2/2"),
    _c("rho_omega_identity", "classical", 1e-8, description="max |rho^2 omega / (rho0^2 omega0) - 1|"),
    _c("phase_consistency", "classical", 1e-8,
       description="max |s - atan2(-u1, u2)| modulo 2 pi"),
    _c("adiabatic_deviation", "classical", 1.0, description="max |rho sqrt(Omega) - rho0 sqrt(Omega0)|"),
    _c("g_commutation_initial", "quantum", 1e-12, "N-1", "[G1,G2] + iG at t0"),
    _c("g_commutation", "quantum", 1e-8, "N-1", "[G1,G2] + iG at the sample times"),
    _c("invariant_forms", "quantum", 1e-10, "N", "linear-invariant form vs amplitude form"),
    _c("invariant_constancy", "quantum", 1e-7, "N-1", "Heisenberg I(t) - I(t0)"),
    _c("factorization", "quantum", 1e-8, "N-1", "I - a+(t) a(t) - G/2 and I - A+A - G/2"),
    _c("conjugation", "quantum", 1e-6, "N/4", "e^{isI} A e^{-isI} - a(t)"),
    _c("squeeze_relation", "quantum", 1e-4, "N/4", "H - i dT+/dt T - omega I"),
    _c("squeeze_convergence", "quantum", 0.5, "N/4",
       "|defect ratio under step halving - 4|"),
    _c("squeeze_unitarity", "quantum", 1e-8, "N/4", "T+T - 1"),
    _c("heisenberg_rate", "quantum", None, "N/4", "da/dt - i omega [I, a]", kind="documented"),
    _c("turski_oracle", "phase", 1e-8, "9",
       "closed-form phase matrix vs polar quadrature, m, n <= 8"),
    _c("turski_structure", "phase", 1e-12, "N", "hermiticity and diagonal of the phase matrix"),
    _c("coherent_states", "phase", 1e-9, "N", "closed-form coefficients vs displaced vacuum"),
    _c("coordinate_identity", "phase", 1e-8, "N-1", "q - (a + a+)/sqrt(2 G omega)"),
    _c("number_identity", "phase", 1e-8, "N-1", "I - (omega n + 1/2)"),
    _c("number_energy", "phase", 1e-7, "", "relative drift of <n(t)> omega(t) for alpha probes"),
    _c("phase_commutator", "phase", None, "N/4", "<alpha|[Phi, I]|alpha> + i", kind="documented"),
    _c("phase_eom", "phase", None, "", "d<Phi>/dt vs -omega", kind="documented"),
    _c("polar_form", "phase", None, "N/4", "a - sqrt(I) e^{-i Phi}", kind="documented"),
    _c("ledger", "ledger", 1e-12, "", "sum c_k W_k(t_i) - W_out(t_f) per process"),
)}

_TOP = {"name", "description", "profile", "initial", "integrator", "quantum", "checks", "process"}
_PROFILE = {"kind", "omega_start", "omega_end", "t_min", "t_max", "center", "duration"}
_INITIAL = {"pair", "u1", "u2"}
_INTEGRATOR = {"method", "rtol", "atol", "samples"}
_QUANTUM = {"dim", "alphas", "times"}
_CHECK = {"tol"}
_PROCESS = {"name", "omega_out", "tol", "mode"}
_MODE = {"id", "coefficient", "omega", "omega_final", "n"}
# Identities stated for the unit-Wronskian normalization only.
_NEEDS_UNIT_G = {"number_identity", "number_energy", "phase_eom", "polar_form",
                 "coordinate_identity", "phase_commutator", "conjugation",
                 "squeeze_relation", "squeeze_convergence", "heisenberg_rate"}


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str = ""
    profile: FrequencyProfile | None = None
    init: tuple | None = None
    pair: str = "default-g1"
    method: str = "DOP853"
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    samples: int = 2001
    dim: int = DEFAULT_DIM
    alphas: tuple[complex, ...] = (1.0,)
    times: tuple[float, ...] = ()
    checks: dict = field(default_factory=dict)   # name -> tolerance (None for documented)
    processes: tuple[ProcessSpec, ...] = ()
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def G(self) -> float:
        (u1, du1), (u2, du2) = self.init
        return u1 * du2 - u2 * du1

    def enabled(self, group: str | None = None) -> list[str]:
        return [c for c in self.checks if group is None or CHECKS[c].group == group]

    def echo(self) -> dict:
        """Parsed parameters, for reports."""
        out = {
            "name": self.name,
            "description": self.description,
            "initial": {"pair": self.pair, "u1": list(self.init[0]) if self.init else None,
                        "u2": list(self.init[1]) if self.init else None},
            "integrator": {"method": self.method, "rtol": self.rtol, "atol": self.atol,
                           "samples": self.samples},
            "quantum": {"dim": self.dim, "alphas": [_alpha_echo(a) for a in self.alphas],
                        "times": list(self.times)},
        }
        if self.profile is not None:
            out["profile"] = self.profile.as_dict()
        return out


def _alpha_echo(a):
    a = complex(a)
    return a.real if a.imag == 0 else [a.real, a.imag]


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    leaf = re.sub(r"\[\d+\]$", "", key.split(".")[-1])
    pat = re.compile(rf"^\s*{re.escape(leaf)}\s*=")
    for i, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return i
    return None


class _Reader:
    def __init__(self, text):
        self.text = text

    def fail(self, msg, path):
        raise ConfigError(msg, field=path, line=_line_of(self.text, path))

    def table(self, d, key, allowed, path):
        t = d.get(key, {})
        if not isinstance(t, dict):
            self.fail("expected a table", path)
        for k in t:
            if k not in allowed:
                self.fail(f"unknown key {k!r}", f"{path}.{k}")
        return t

    def number(self, t, key, path, default=None, positive=False, integer=False):
        if key not in t:
            return default
        v = t[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"expected a number, got {v!r}", path)
        if integer and not (isinstance(v, int) or float(v).is_integer()):
            self.fail(f"expected an integer, got {v!r}", path)
        if not math.isfinite(v):
            self.fail(f"expected a finite number, got {v!r}", path)
        if positive and not v > 0:
            self.fail(f"must be positive, got {v!r}", path)
        return int(v) if integer else float(v)

    def string(self, t, key, path, default=None):
        if key not in t:
            return default
        v = t[key]
        if not isinstance(v, str):
            self.fail(f"expected a string, got {v!r}", path)
        return v

    def quantity(self, t, key, path, positive=False, nonneg=False):
        """Number or exact rational string such as "5/2"."""
        if key not in t:
            self.fail("missing value", path)
        v = t[key]
        if isinstance(v, bool):
            self.fail(f"expected a number, got {v!r}", path)
        if isinstance(v, str):
            try:
                v = Fraction(v.strip())
            except (ValueError, ZeroDivisionError):
                self.fail(f"malformed rational {v!r}", path)
        elif isinstance(v, int):
            v = Fraction(v)
        elif isinstance(v, float):
            if not math.isfinite(v):
                self.fail(f"expected a finite number, got {v!r}", path)
        else:
            self.fail(f"expected a number, got {v!r}", path)
        if positive and not v > 0:
            self.fail(f"must be positive, got {v}", path)
        if nonneg and v < 0:
            self.fail(f"must be nonnegative, got {v}", path)
        return v


def scenario_from_dict(data: dict, text: str | None = None) -> Scenario:
    r = _Reader(text)
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a table")
    for k in data:
        if k not in _TOP:
            r.fail(f"unknown key {k!r}", k)
    name = r.string(data, "name", "name")
    if not name:
        r.fail("a non-empty scenario name is required", "name")
    if not re.fullmatch(r"[A-Za-z0-9._-]+", name):
        r.fail("name may only contain letters, digits, '.', '_' and '-'", "name")
    description = r.string(data, "description", "description", "")

    # checks
    checks_t = r.table(data, "checks", set(CHECKS), "checks")
    checks = {}
    for cname, body in checks_t.items():
        path = f"checks.{cname}"
        if body is True:
            body = {}
        if not isinstance(body, dict):
            r.fail("expected a table or true", path)
        for k in body:
            if k not in _CHECK:
                r.fail(f"unknown key {k!r}", f"{path}.{k}")
        spec = CHECKS[cname]
        tol = r.number(body, "tol", f"{path}.tol", spec.tol, positive=True)
        if spec.kind == "documented" and "tol" in body:
            r.fail("documented probes take no tolerance", f"{path}.tol")
        checks[cname] = tol

    needs_profile = any(CHECKS[c].group != "ledger" for c in checks)

    # profile
    profile = None
    if "profile" in data or needs_profile:
        if "profile" not in data:
            r.fail("a profile is required for classical, quantum and phase checks", "profile")
        pt = r.table(data, "profile", _PROFILE, "profile")
        kind = r.string(pt, "kind", "profile.kind", "constant")
        kw = {"kind": kind}
        for k in ("omega_start", "omega_end"):
            v = r.number(pt, k, f"profile.{k}")
            if v is not None and not v > 0:
                r.fail(f"frequency must be positive, got {v!r}", f"profile.{k}")
            if v is not None:
                kw[k] = v
        for k in ("t_min", "t_max", "center", "duration"):
            v = r.number(pt, k, f"profile.{k}")
            if v is not None:
                kw[k] = v
        try:
            profile = FrequencyProfile(**kw)
        except DomainError as e:
            r.fail(str(e), "profile")

    # integrator
    it = r.table(data, "integrator", _INTEGRATOR, "integrator")
    method = r.string(it, "method", "integrator.method", "DOP853")
    if method not in ("DOP853", "RK45", "RK23", "Radau", "BDF", "LSODA", "analytic"):
        r.fail(f"unknown integrator method {method!r}", "integrator.method")
    if method == "analytic" and profile is not None and profile.kind != "constant":
        r.fail("the analytic integrator needs a constant profile", "integrator.method")
    rtol = r.number(it, "rtol", "integrator.rtol", DEFAULT_RTOL, positive=True)
    atol = r.number(it, "atol", "integrator.atol", DEFAULT_ATOL, positive=True)
    samples = r.number(it, "samples", "integrator.samples", 2001, integer=True)
    if samples < 5:
        r.fail("at least 5 samples are needed", "integrator.samples")

    # initial conditions
    init_t = r.table(data, "initial", _INITIAL, "initial")
    pair = r.string(init_t, "pair", "initial.pair", "default-g1")
    init = None
    if pair == "default-g1":
        if "u1" in init_t or "u2" in init_t:
            r.fail("u1/u2 are only allowed with pair = \"explicit\"", "initial.pair")
        if profile is not None:
            init = default_initial_pair(profile.omega0)
    elif pair == "explicit":
        vals = []
        for k in ("u1", "u2"):
            v = init_t.get(k)
            if (not isinstance(v, list) or len(v) != 2
                    or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v)):
                r.fail("expected [value, derivative]", f"initial.{k}")
            vals.append((float(v[0]), float(v[1])))
        init = tuple(vals)
        (a, da), (b, db) = init
        if a * db - b * da == 0:
            r.fail("the pair has zero Wronskian", "initial")
    else:
        r.fail(f"unknown initial pair {pair!r}", "initial.pair")

    # quantum
    qt = r.table(data, "quantum", _QUANTUM, "quantum")
    dim = r.number(qt, "dim", "quantum.dim", DEFAULT_DIM, integer=True)
    if dim < MIN_DIM:
        r.fail(f"Fock dimension must be at least {MIN_DIM}", "quantum.dim")
    alphas = []
    for i, a in enumerate(qt.get("alphas", [1.0])):
        path = f"quantum.alphas[{i}]"
        if isinstance(a, list) and len(a) == 2 and all(isinstance(x, (int, float)) for x in a):
            alphas.append(complex(a[0], a[1]))
        elif isinstance(a, (int, float)) and not isinstance(a, bool):
            alphas.append(complex(a))
        else:
            r.fail("expected a number or [re, im]", path)
    uses_alpha = {"coherent_states", "number_energy", "phase_eom"} & set(checks)
    if uses_alpha:
        for i, a in enumerate(alphas):
            if abs(a) ** 2 > dim / 4:
                r.fail(f"|alpha|^2 = {abs(a) ** 2:g} exceeds N/4 = {dim / 4:g}",
                       f"quantum.alphas[{i}]")
    if "phase_commutator" in checks and dim < 36:
        r.fail("the phase commutator probes |alpha| = 3 and need N >= 36", "quantum.dim")
    times = qt.get("times")
    if times is None:
        times = []
        if profile is not None:
            mid = 0.5 * (profile.t_min + profile.t_max)
            times = [profile.t_min + (mid - profile.t_min) * k / 4 for k in range(5)]
    else:
        if not isinstance(times, list) or not times:
            r.fail("expected a non-empty list of times", "quantum.times")
        for i, t in enumerate(times):
            if isinstance(t, bool) or not isinstance(t, (int, float)):
                r.fail(f"expected a number, got {t!r}", f"quantum.times[{i}]")
            if profile is not None and not profile.t_min <= t <= profile.t_max:
                r.fail(f"time {t} outside the profile domain", f"quantum.times[{i}]")
        times = [float(t) for t in times]

    if init is not None:
        (a, da), (b, db) = init
        if not math.isclose(a * db - b * da, 1.0, rel_tol=1e-12):
            bad = sorted(_NEEDS_UNIT_G & set(checks))
            if bad:
                r.fail(f"checks {bad} need a unit Wronskian pair", "initial")

    # ledger
    procs = []
    raw_procs = data.get("process", [])
    if not isinstance(raw_procs, list):
        r.fail("expected an array of tables", "process")
    for i, p in enumerate(raw_procs):
        path = f"process[{i}]"
        if not isinstance(p, dict):
            r.fail("expected a table", path)
        for k in p:
            if k not in _PROCESS:
                r.fail(f"unknown key {k!r}", f"{path}.{k}")
        pname = r.string(p, "name", f"{path}.name", f"process{i}")
        omega_out = r.quantity(p, "omega_out", f"{path}.omega_out", positive=True)
        ptol = r.number(p, "tol", f"{path}.tol", 1e-12, positive=True)
        modes, coeffs = [], []
        raw_modes = p.get("mode", [])
        if not isinstance(raw_modes, list) or not raw_modes:
            r.fail("at least one input mode is required", f"{path}.mode")
        for j, m in enumerate(raw_modes):
            mp = f"{path}.mode[{j}]"
            if not isinstance(m, dict):
                r.fail("expected a table", mp)
            for k in m:
                if k not in _MODE:
                    r.fail(f"unknown key {k!r}", f"{mp}.{k}")
            c = m.get("coefficient", 1)
            if isinstance(c, bool) or not isinstance(c, int) or c <= 0:
                r.fail(f"coefficient must be a positive integer, got {c!r}", f"{mp}.coefficient")
            w = r.quantity(m, "omega", f"{mp}.omega", positive=True)
            wf = r.quantity(m, "omega_final", f"{mp}.omega_final", positive=True) \
                if "omega_final" in m else omega_out
            n = r.quantity(m, "n", f"{mp}.n", nonneg=True)
            modes.append(Mode(str(m.get("id", j + 1)), w, wf, n))
            coeffs.append(c)
        try:
            procs.append(ProcessSpec(tuple(modes), tuple(coeffs), omega_out, ptol, pname))
        except ValueError as e:
            r.fail(str(e), path)
    if "ledger" in checks and not procs:
        r.fail("the ledger check needs at least one [[process]]", "checks.ledger")
    if procs and "ledger" not in checks:
        checks["ledger"] = CHECKS["ledger"].tol

    if not checks:
        r.fail("no checks enabled", "checks")

    return Scenario(
        name=name, description=description, profile=profile, init=init, pair=pair,
        method=method, rtol=rtol, atol=atol, samples=samples, dim=dim,
        alphas=tuple(alphas), times=tuple(times), checks=checks,
        processes=tuple(procs), raw=copy.deepcopy(data),
    )


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario TOML text."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        m = re.search(r"line (\d+)", str(e))
        raise ConfigError(f"malformed scenario: {e}", line=int(m.group(1)) if m else None) from None
    return scenario_from_dict(data, text)


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read scenario: {e}") from None
    return parse_scenario(text)


def set_path(data: dict, path: str, value) -> dict:
    """Copy of ``data`` with the dotted ``path`` set to ``value``."""
    out = copy.deepcopy(data)
    node = out
    keys = path.split(".")
    for k in keys[:-1]:
        nxt = node.setdefault(k, {})
        if not isinstance(nxt, dict):
            raise ConfigError("cannot descend into a non-table", field=path)
        node = nxt
    node[keys[-1]] = value
    return out


def bundled_scenarios() -> dict[str, str]:
    """Name -> TOML text of every scenario shipped with the package."""
    root = resources.files("ermakov_lab") / "scenarios"
    return {p.name[:-5]: p.read_text(encoding="utf-8")
            for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".toml")}
