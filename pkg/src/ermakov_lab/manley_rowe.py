"""Photon-number and power-density bookkeeping for frequency conversion.

Each mode carries the per-mode invariant omega * n, so a frequency change
from omega_i to omega_f rescales its photon number by omega_i / omega_f.
Values may be ``Fraction`` (exact) or ``float``; exact inputs stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from numbers import Rational

from .errors import InvalidFrequencyError, MatchingError

DEFAULT_MATCH_TOL = 1e-12

PRINTED_FORM_NOTE = (
    "the printed single-coefficient form W1 + W2 = W_f drops the stoichiometric "
    "coefficient c1 = 2; the relation checked here keeps every coefficient"
)


def _exact(*xs) -> bool:
    return all(isinstance(x, Rational) for x in xs)


def _sum(xs):
    xs = list(xs)
    if _exact(*xs):
        return sum(xs, Fraction(0))
    return math.fsum(float(x) for x in xs)


@dataclass(frozen=True)
class Mode:
    id: str
    omega_i: Fraction | float
    omega_f: Fraction | float
    n_i: Fraction | float
    n_f: Fraction | float | None = None

    def __post_init__(self):
        if not self.omega_i > 0:
            raise InvalidFrequencyError(f"mode {self.id}: omega_i must be positive, got {self.omega_i}")
        if self.n_i < 0:
            raise ValueError(f"mode {self.id}: photon number must be nonnegative, got {self.n_i}")

    @property
    def energy_i(self):
        return self.omega_i * self.n_i

    @property
    def energy_f(self):
        if self.n_f is None:
            raise ValueError(f"mode {self.id} has not been evolved")
        return self.omega_f * self.n_f


def evolve_mode(mode: Mode) -> Mode:
    """Set n_f = omega_i n_i / omega_f."""
    if not mode.omega_f > 0:
        raise InvalidFrequencyError(f"mode {mode.id}: omega_f must be positive, got {mode.omega_f}")
    if _exact(mode.omega_i, mode.omega_f, mode.n_i):
        n_f = Fraction(mode.omega_i) * Fraction(mode.n_i) / Fraction(mode.omega_f)
    else:
        n_f = float(mode.omega_i) * float(mode.n_i) / float(mode.omega_f)
    return replace(mode, n_f=n_f)


def power_density(mode: Mode, at: str = "t_i"):
    """W = omega^2 n at ``t_i`` or ``t_f``."""
    if at == "t_i":
        return mode.omega_i * mode.omega_i * mode.n_i
    if at == "t_f":
        if mode.n_f is None:
            raise ValueError(f"mode {mode.id} has no final photon number; evolve it first")
        return mode.omega_f * mode.omega_f * mode.n_f
    raise ValueError(f"'at' must be 't_i' or 't_f', got {at!r}")


@dataclass(frozen=True)
class ProcessSpec:
    """Sum over inputs of c_k omega_k = omega_out, with positive integer c_k."""

    modes: tuple[Mode, ...]
    coefficients: tuple[int, ...]
    omega_out: Fraction | float
    tol: float = DEFAULT_MATCH_TOL
    name: str = "process"

    def __post_init__(self):
        if not self.modes:
            raise ValueError("a process needs at least one input mode")
        if len(self.modes) != len(self.coefficients):
            raise ValueError("one coefficient per mode is required")
        for c in self.coefficients:
            if isinstance(c, bool) or int(c) != c or c <= 0:
                raise ValueError(f"coefficients must be positive integers, got {c!r}")
        if not self.omega_out > 0:
            raise InvalidFrequencyError(f"output frequency must be positive, got {self.omega_out}")
        if not self.tol > 0:
            raise ValueError("matching tolerance must be positive")
        ids = [m.id for m in self.modes]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate mode ids: {ids}")

    def terms(self):
        return zip(self.coefficients, self.modes)


def matching_residual(spec: ProcessSpec):
    return _sum(c * m.omega_i for c, m in spec.terms()) - spec.omega_out


def check_matching(spec: ProcessSpec, require_common_final: bool = False):
    """Return sum c_k omega_k - omega_out; raise when it exceeds the tolerance.

    With ``require_common_final`` every mode must also end at omega_out.
    """
    res = matching_residual(spec)
    if abs(res) > spec.tol:
        raise MatchingError(
            f"{spec.name}: sum c_k omega_k - omega_out = {float(res):.6g} exceeds {spec.tol:g}",
            res,
        )
    if require_common_final:
        off = [m.id for m in spec.modes if m.omega_f != spec.omega_out]
        if off:
            raise MatchingError(f"{spec.name}: modes {off} do not end at omega_out", res)
    return res


@dataclass(frozen=True)
class ModeLedger:
    id: str
    coefficient: int
    omega_i: object
    omega_f: object
    n_i: object
    n_f: object
    energy_i: object
    energy_f: object
    energy_defect: object
    W_i: object
    W_f: object


@dataclass(frozen=True)
class ConservationReport:
    name: str
    exact: bool
    residual: object
    modes: tuple[ModeLedger, ...]
    equal_energies: bool
    common_final_number: object
    lhs: object
    rhs: object
    rhs_per_mode: dict
    relation_holds: bool | None
    note: str = PRINTED_FORM_NOTE

    def mode(self, mode_id: str) -> ModeLedger:
        for m in self.modes:
            if m.id == mode_id:
                return m
        raise KeyError(mode_id)


def _equal(a, b, exact):
    if exact:
        return a == b
    return math.isclose(float(a), float(b), rel_tol=1e-12, abs_tol=0.0)


def conservation_report(spec: ProcessSpec, rel_tol: float = 1e-12) -> ConservationReport:
    """Evolve every mode (all must end at omega_out) and compare sum c_k W_k(t_i) with W_out(t_f).

    The relation follows from multiplying the matching condition by a common
    final photon number, which exists only when every input energy
    omega_k n_k is the same. Otherwise both sides are reported and
    ``relation_holds`` and ``rhs`` are None; ``rhs_per_mode`` always holds
    omega_out^2 n_f for each mode. Rows are ordered by mode id.
    """
    res = check_matching(spec, require_common_final=True)
    evolved = [evolve_mode(m) for m in spec.modes]
    exact = _exact(spec.omega_out, *(x for m in spec.modes for x in (m.omega_i, m.n_i)))
    rows = []
    for c, m in zip(spec.coefficients, evolved):
        rows.append(ModeLedger(
            id=m.id, coefficient=int(c), omega_i=m.omega_i, omega_f=m.omega_f,
            n_i=m.n_i, n_f=m.n_f, energy_i=m.energy_i, energy_f=m.energy_f,
            energy_defect=m.energy_f - m.energy_i,
            W_i=power_density(m, "t_i"), W_f=power_density(m, "t_f"),
        ))
    rows.sort(key=lambda r: r.id)
    e0 = rows[0].energy_i
    equal = all(_equal(r.energy_i, e0, exact) for r in rows)
    lhs = _sum(r.coefficient * r.W_i for r in rows)
    if equal:
        n_common = e0 / spec.omega_out if exact else float(e0) / float(spec.omega_out)
        rhs = spec.omega_out * spec.omega_out * n_common
        if exact:
            holds = lhs == rhs
        else:
            holds = math.isclose(float(lhs), float(rhs), rel_tol=rel_tol, abs_tol=0.0)
    else:
        n_common, rhs, holds = None, None, None
    rhs_per_mode = {r.id: r.W_f for r in rows}
    return ConservationReport(spec.name, exact, res, tuple(rows), equal, n_common,
                              lhs, rhs, rhs_per_mode, holds)


def to_json_value(x):
    """Fractions become [numerator, denominator]; everything else passes through."""
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    if isinstance(x, Rational):
        return [int(x), 1]
    return x


def report_as_dict(rep: ConservationReport) -> dict:
    j = to_json_value
    return {
        "name": rep.name,
        "exact": rep.exact,
        "matching_residual": j(rep.residual),
        "equal_input_energies": rep.equal_energies,
        "common_final_photon_number": j(rep.common_final_number),
        "lhs_sum_c_W_initial": j(rep.lhs),
        "rhs_W_out_final": j(rep.rhs),
        "rhs_per_mode": {k: j(v) for k, v in rep.rhs_per_mode.items()},
        "relation_holds": rep.relation_holds,
        "note": rep.note,
        "modes": [{k: (j(v) if k not in ("id", "coefficient") else v)
                   for k, v in vars(m).items()} for m in rep.modes],
    }
