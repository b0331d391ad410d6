"""Parametric frequency profiles Omega(t) for the time-dependent oscillator.

All profiles interpolate between ``omega_start`` and ``omega_end`` with a
convex weight, so positivity of the two end frequencies implies Omega > 0
everywhere on the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

KINDS = ("constant", "linear_ramp", "tanh_sweep", "piecewise_constant_smoothed")


@dataclass(frozen=True)
class FrequencyProfile:
    """Frequency of the oscillator Hamiltonian on ``[t_min, t_max]``.

    ``center`` and ``duration`` locate the transition. For ``tanh_sweep``
    the duration is the tanh width, Omega = w0 + (w1 - w0)(1 + tanh((t - c)/d))/2.
    For ``linear_ramp`` and ``piecewise_constant_smoothed`` the transition
    occupies ``[c - d/2, c + d/2]``; the smoothed kind uses the cubic
    smoothstep, which is C1.
    """

    kind: str = "constant"
    omega_start: float = 1.0
    omega_end: float | None = None
    t_min: float = 0.0
    t_max: float = 20.0
    center: float | None = None
    duration: float | None = None
    _params: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        w0 = float(self.omega_start)
        w1 = w0 if self.omega_end is None else float(self.omega_end)
        if not (math.isfinite(w0) and w0 > 0):
            raise DomainError(f"omega_start must be positive, got {self.omega_start}")
        if not (math.isfinite(w1) and w1 > 0):
            raise DomainError(f"omega_end must be positive, got {self.omega_end}")
        if not (self.t_min < self.t_max):
            raise DomainError(f"empty domain [{self.t_min}, {self.t_max}]")
        c = 0.5 * (self.t_min + self.t_max) if self.center is None else float(self.center)
        d = self.duration
        if self.kind != "constant":
            if d is None or not d > 0:
                raise DomainError(f"{self.kind} profile needs a positive duration, got {d}")
            d = float(d)
        object.__setattr__(self, "_params", (w0, w1, c, d))

    @property
    def omega0(self) -> float:
        """Frequency at the start of the domain."""
        return self.omega(self.t_min)

    def _check(self, t):
        lo, hi = np.min(t), np.max(t)
        if lo < self.t_min or hi > self.t_max or np.isnan(lo) or np.isnan(hi):
            raise DomainError(
                f"time outside profile domain [{self.t_min}, {self.t_max}]: "
                f"min={lo!r}, max={hi!r}"
            )

    def _weight(self, t):
        """Return the transition weight and its time derivative."""
        w0, w1, c, d = self._params
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(t), np.zeros_like(t)
        if self.kind == "tanh_sweep":
            th = np.tanh((t - c) / d)
            return 0.5 * (1.0 + th), 0.5 * (1.0 - th * th) / d
        x = np.clip((t - c) / d + 0.5, 0.0, 1.0)
        inside = (x > 0.0) & (x < 1.0)
        if self.kind == "linear_ramp":
            return x, np.where(inside, 1.0 / d, 0.0)
        return x * x * (3.0 - 2.0 * x), 6.0 * x * (1.0 - x) / d

    def omega(self, t):
        self._check(t)
        w0, w1, _, _ = self._params
        s, _ = self._weight(t)
        out = w0 + (w1 - w0) * s
        return float(out) if np.ndim(out) == 0 else out

    def omega_sq(self, t):
        w = self.omega(t)
        return w * w

    def domega(self, t):
        self._check(t)
        w0, w1, _, _ = self._params
        _, ds = self._weight(t)
        out = (w1 - w0) * ds
        return float(out) if np.ndim(out) == 0 else out

    def omega_sq_function(self):
        """Fast scalar ``t -> Omega(t)**2`` without domain checks, for ODE right-hand sides."""
        w0, w1, c, d = self._params
        dw = w1 - w0
        if self.kind == "constant":
            return lambda t: w0 * w0
        if self.kind == "tanh_sweep":
            def f(t):
                w = w0 + 0.5 * dw * (1.0 + math.tanh((t - c) / d))
                return w * w
            return f
        smooth = self.kind == "piecewise_constant_smoothed"

        def g(t):
            x = min(max((t - c) / d + 0.5, 0.0), 1.0)
            if smooth:
                x = x * x * (3.0 - 2.0 * x)
            w = w0 + dw * x
            return w * w
        return g

    def breakpoints(self) -> tuple[float, ...]:
        """Interior times where a derivative of Omega is discontinuous."""
        if self.kind not in ("linear_ramp", "piecewise_constant_smoothed"):
            return ()
        _, _, c, d = self._params
        return tuple(t for t in (c - d / 2, c + d / 2) if self.t_min < t < self.t_max)

    def as_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "omega_start": self.omega_start,
            "omega_end": self.omega_end,
            "t_min": self.t_min,
            "t_max": self.t_max,
            "center": self.center,
            "duration": self.duration,
        }
        return {k: v for k, v in out.items() if v is not None}


def eval_profile(profile: FrequencyProfile, t: float) -> tuple[float, float, float]:
    """Return ``(Omega, Omega**2, dOmega/dt)`` at time ``t``."""
    w = profile.omega(t)
    return w, w * w, profile.domega(t)
