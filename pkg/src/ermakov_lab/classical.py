"""Classical TDHO: integration, amplitude-phase representation and invariants.

Two real solutions u1, u2 of  u'' + Omega(t)**2 u = 0  are integrated
with an adaptive embedded Runge-Kutta pair; the phase s is then obtained by
Gauss-Legendre quadrature of (u1 u2' - u2 u1') / (u1**2 + u2**2) over every
integrator step of the dense output, so it is continuous and never wraps.
The amplitude is always reconstructed from u1, u2; the Ermakov equation is
only ever used as a residual check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegeneratePairError, InsufficientGridError, IntegrationError
from .profiles import FrequencyProfile

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12

#: Column order of the per-sample CSV series.
SERIES_COLUMNS = (
    "t", "u1", "du1", "u2", "du2", "rho", "drho", "s_rho", "omega", "G", "I",
    "ermakov_residual",
)


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    u1: float
    du1: float
    u2: float
    du2: float

    @property
    def wronskian(self) -> float:
        return self.u1 * self.du2 - self.u2 * self.du1

    @property
    def rho(self) -> float:
        return math.hypot(self.u1, self.u2)

    @property
    def drho(self) -> float:
        return (self.u1 * self.du1 + self.u2 * self.du2) / self.rho

    @property
    def omega(self) -> float:
        """Phase velocity ds/dt = W / rho**2 with W the local Wronskian."""
        return self.wronskian / (self.u1 ** 2 + self.u2 ** 2)


def default_initial_pair(omega0: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Pair with u1 = 0, u1' = -sqrt(w0), u2 = 1/sqrt(w0), u2' = 0, so that G = 1."""
    r = math.sqrt(omega0)
    return (0.0, -r), (1.0 / r, 0.0)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled pair of TDHO solutions with their accumulated phase."""

    profile: FrequencyProfile
    t: np.ndarray
    u1: np.ndarray
    du1: np.ndarray
    u2: np.ndarray
    du2: np.ndarray
    phase: np.ndarray
    G: float
    meta: dict = field(default_factory=dict)
    dense: Callable[[float], np.ndarray] | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.t)

    @property
    def wronskian(self) -> np.ndarray:
        return self.u1 * self.du2 - self.u2 * self.du1

    def point(self, i: int) -> TrajectoryPoint:
        return TrajectoryPoint(
            float(self.t[i]), float(self.u1[i]), float(self.du1[i]),
            float(self.u2[i]), float(self.du2[i]),
        )

    def points(self) -> Iterator[TrajectoryPoint]:
        for i in range(len(self.t)):
            yield self.point(i)

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.t - t)))
        if not math.isclose(self.t[i], t, rel_tol=0.0, abs_tol=1e-12 * max(1.0, abs(t))):
            raise ValueError(f"t={t} is not a sample time of the trajectory")
        return i

    def state_at(self, t: float) -> np.ndarray:
        """Dense-output state ``[u1, du1, u2, du2]`` at an arbitrary time."""
        if self.dense is None:
            raise ValueError("trajectory carries no dense output")
        if not (self.t[0] <= t <= self.t[-1]):
            raise ValueError(f"t={t} outside trajectory span [{self.t[0]}, {self.t[-1]}]")
        return self.dense(t)

    def initial_point(self) -> TrajectoryPoint:
        """State at ``profile.t_min`` (which need not be a sample time)."""
        (u1, du1), (u2, du2) = self.meta["init"]
        return TrajectoryPoint(self.profile.t_min, u1, du1, u2, du2)

    def point_at(self, t: float) -> TrajectoryPoint:
        y = self.state_at(t)
        return TrajectoryPoint(float(t), *map(float, y[:4]))

    def phase_at(self, t: float) -> float:
        """Phase at an arbitrary time: quadrature onward from the nearest earlier sample."""
        self.state_at(t)
        i = max(int(np.searchsorted(self.t, t, side="right")) - 1, 0)
        if t == self.t[i]:
            return float(self.phase[i])
        knots = np.linspace(self.t[i], t, 5)
        return float(self.phase[i] + np.sum(_phase_increments(self.dense, knots)))


def _rhs(omega_sq):
    def f(t, y):
        w2 = omega_sq(t)
        return (y[1], -w2 * y[0], y[3], -w2 * y[2])
    return f


class _PiecewiseDense:
    """Stitches the dense outputs of consecutive integration segments."""

    def __init__(self, pieces):
        self.pieces = pieces
        self.edges = np.array([p[1] for p in pieces[:-1]])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        which = np.searchsorted(self.edges, t, side="left")
        if t.ndim == 0:
            return self.pieces[int(which)][2](float(t))
        out = np.empty((4, len(t)))
        for i in np.unique(which):
            mask = which == i
            out[:, mask] = self.pieces[i][2](t[mask])
        return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _phase_rate(y):
    return (y[0] * y[3] - y[2] * y[1]) / (y[0] ** 2 + y[2] ** 2)


def _gl(dense, a, b):
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    rate = _phase_rate(dense(nodes.ravel())).reshape(nodes.shape)
    return half * (rate @ _GL_W)


def _phase_increments(dense, knots, tol=1e-14, max_depth=12):
    """Integral of W / rho**2 over each interval of ``knots``.

    Gauss-Legendre on each interval, bisected until the two halves agree
    with the whole to ``tol`` relative (eccentric pairs make the rate sharply
    peaked inside a single integrator step).
    """
    a, b = np.asarray(knots[:-1], float), np.asarray(knots[1:], float)
    owner = np.arange(len(a))
    whole = _gl(dense, a, b)
    out = np.zeros(len(a))
    for _ in range(max_depth):
        m = 0.5 * (a + b)
        left, right = _gl(dense, a, m), _gl(dense, m, b)
        split = left + right
        done = np.abs(split - whole) <= tol * np.maximum(np.abs(split), 1e-300) + 1e-300
        np.add.at(out, owner[done], split[done])
        if done.all():
            return out
        keep = ~done
        a = np.concatenate([a[keep], m[keep]])
        b = np.concatenate([m[keep], b[keep]])
        whole = np.concatenate([left[keep], right[keep]])
        owner = np.concatenate([owner[keep], owner[keep]])
    np.add.at(out, owner, whole)
    return out


def _prepare(profile, init, t_eval, n_samples):
    if init is None:
        init = default_initial_pair(profile.omega0)
    (u1, du1), (u2, du2) = init
    g0 = u1 * du2 - u2 * du1
    if g0 == 0.0 or not math.isfinite(g0):
        raise DegeneratePairError(f"initial Wronskian is {g0}; solutions are not independent")
    if t_eval is None:
        t_eval = np.linspace(profile.t_min, profile.t_max, n_samples)
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or len(t_eval) < 2 or np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_eval must be a strictly increasing sequence of at least two times")
    if t_eval[0] < profile.t_min or t_eval[-1] > profile.t_max:
        raise ValueError("t_eval must lie inside the profile domain")
    return ((float(u1), float(du1)), (float(u2), float(du2))), t_eval


def _assemble(profile, init, t_eval, dense, knots, meta, drift_tol=None):
    (u1, du1), (u2, du2) = init
    g0 = u1 * du2 - u2 * du1
    meta["init"] = init
    ys = dense(t_eval)
    # sample the exact initial state rather than the interpolant
    if t_eval[0] == profile.t_min:
        ys[:, 0] = (u1, du1, u2, du2)
    # phase: quadrature of W / rho**2 over every integrator step, split at samples
    grid = np.union1d(np.concatenate([[profile.t_min], knots]), t_eval)
    cumulative = np.concatenate([[0.0], np.cumsum(_phase_increments(dense, grid))])
    phase = math.atan2(-u1, u2) + cumulative[np.searchsorted(grid, t_eval)]
    traj = Trajectory(profile, t_eval, ys[0], ys[1], ys[2], ys[3], phase, g0, meta, dense)
    drift = float(np.max(np.abs(traj.wronskian / g0 - 1.0)))
    meta["max_wronskian_drift"] = drift
    if drift_tol is not None and drift > drift_tol:
        raise IntegrationError(
            f"Wronskian drift {drift:.3e} exceeds tolerance {drift_tol:.3e}", dict(meta)
        )
    return traj


def constant_frequency_trajectory(profile: FrequencyProfile, init=None, *,
                                  t_eval: Sequence[float] | None = None,
                                  n_samples: int = 2001) -> Trajectory:
    """Closed-form trajectory for a constant profile (cos/sin propagation)."""
    if profile.kind != "constant":
        raise ValueError("closed-form propagation needs a constant profile")
    init, t_eval = _prepare(profile, init, t_eval, n_samples)
    w = profile.omega0
    t0 = profile.t_min
    y0 = np.array([init[0][0], init[0][1], init[1][0], init[1][1]])

    def dense(t):
        t = np.asarray(t, dtype=float)
        c, s = np.cos(w * (t - t0)), np.sin(w * (t - t0))
        x1, v1, x2, v2 = y0
        return np.array([x1 * c + v1 / w * s, v1 * c - x1 * w * s,
                         x2 * c + v2 / w * s, v2 * c - x2 * w * s])

    # quadrature knots at most a tenth of a period apart
    n = max(int(math.ceil((profile.t_max - t0) * w / (0.2 * math.pi))), 1)
    knots = np.linspace(t0, profile.t_max, n + 1)
    return _assemble(profile, init, t_eval, dense, knots, {"method": "analytic"})


def integrate_tdho(
    profile: FrequencyProfile,
    init=None,
    *,
    t_eval: Sequence[float] | None = None,
    n_samples: int = 2001,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    drift_tol: float | None = None,
    method: str = "DOP853",
) -> Trajectory:
    """Integrate two TDHO solutions over the profile domain.

    ``init`` is ``((u1, du1), (u2, du2))`` at ``profile.t_min``; the default
    is the G = 1 pair from :func:`default_initial_pair`. Samples are taken
    at ``t_eval`` or on a uniform grid of ``n_samples`` points. Interior
    breakpoints of the profile restart the integrator so no step straddles
    a derivative discontinuity.
    """
    init, t_eval = _prepare(profile, init, t_eval, n_samples)
    if method == "analytic":
        return constant_frequency_trajectory(profile, init, t_eval=t_eval)
    t0, t1 = profile.t_min, profile.t_max
    rhs = _rhs(profile.omega_sq_function())
    edges = [t0, *profile.breakpoints(), t1]
    y = np.array(init, dtype=float).ravel()
    pieces, knots, nfev, nsteps = [], [], 0, 0
    for a, b in zip(edges[:-1], edges[1:]):
        sol = solve_ivp(rhs, (a, b), y, method=method, rtol=rtol, atol=atol, dense_output=True)
        nfev += sol.nfev
        nsteps += len(sol.t) - 1
        if sol.status != 0:
            raise IntegrationError(
                f"integration failed on [{a}, {b}]: {sol.message}",
                {"t_fail": float(sol.t[-1]), "nfev": nfev, "steps": nsteps,
                 "rtol": rtol, "atol": atol, "method": method},
            )
        pieces.append((a, b, sol.sol))
        knots.append(sol.t)
        y = sol.y[:, -1]

    meta = {"method": method, "rtol": rtol, "atol": atol, "nfev": nfev, "steps": nsteps,
            "segments": len(pieces)}
    return _assemble(profile, init, t_eval, _PiecewiseDense(pieces),
                     np.concatenate(knots), meta, drift_tol)


def wronskian(traj: Trajectory, t: float) -> float:
    """u1 u2' - u2 u1' at the sample time ``t``."""
    return traj.point(traj.index_of(t)).wronskian


@dataclass(frozen=True, eq=False)
class AmplitudePhaseSeries:
    t: np.ndarray
    rho: np.ndarray
    drho: np.ndarray
    s: np.ndarray
    omega: np.ndarray
    G: float
    phase_mismatch: float

    @property
    def rho0(self) -> float:
        return float(self.rho[0])

    @property
    def omega0(self) -> float:
        return float(self.omega[0])


def amplitude_phase(traj: Trajectory) -> AmplitudePhaseSeries:
    """Amplitude rho, its rate, the unwrapped phase and omega = ds/dt.

    The phase comes from the quadrature carried by the integrator;
    ``phase_mismatch`` is its largest distance, modulo 2 pi, from the
    four-quadrant arctangent of (-u1, u2).
    """
    if traj.G == 0.0:
        raise DegeneratePairError("zero Wronskian")
    rho2 = traj.u1 ** 2 + traj.u2 ** 2
    rho = np.sqrt(rho2)
    drho = (traj.u1 * traj.du1 + traj.u2 * traj.du2) / rho
    omega = traj.wronskian / rho2
    atan = np.arctan2(-traj.u1, traj.u2)
    diff = np.angle(np.exp(1j * (traj.phase - atan)))
    return AmplitudePhaseSeries(traj.t, rho, drho, traj.phase.copy(), omega, traj.G,
                                float(np.max(np.abs(diff))))


def second_derivative(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Five-point second derivative at the interior samples ``t[2:-2]``.

    Uses the classical fourth-order stencil on uniform grids and per-point
    Vandermonde weights otherwise.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 5:
        raise InsufficientGridError(f"need at least 5 samples for the stencil, got {len(t)}")
    h = np.diff(t)
    if np.allclose(h, h[0], rtol=1e-9, atol=0.0):
        hh = (t[-1] - t[0]) / (len(t) - 1)
        return (-y[:-4] + 16 * y[1:-3] - 30 * y[2:-2] + 16 * y[3:-1] - y[4:]) / (12 * hh * hh)
    idx = np.arange(2, len(t) - 2)
    offs = np.stack([t[idx + k] - t[idx] for k in range(-2, 3)], axis=1)
    scale = offs[:, -1:] - offs[:, :1]
    x = offs / scale
    V = np.stack([x ** p for p in range(5)], axis=1)
    rhs = np.zeros((len(idx), 5))
    rhs[:, 2] = 2.0
    w = np.linalg.solve(V, rhs[..., None])[..., 0] / scale ** 2
    return np.einsum("ij,ij->i", w, np.stack([y[idx + k] for k in range(-2, 3)], axis=1))


@dataclass(frozen=True, eq=False)
class ErmakovResidual:
    t: np.ndarray
    residual: np.ndarray
    G: float

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.residual)))


def ermakov_residual(series: AmplitudePhaseSeries, profile: FrequencyProfile,
                     G: float | None = None) -> ErmakovResidual:
    """rho'' + Omega**2 rho - G**2 / rho**3 at interior samples.

    ``G`` defaults to the series' Wronskian; pass ``G=1`` for the
    unit-normalised form of the auxiliary equation.
    """
    G = series.G if G is None else G
    d2 = second_derivative(series.t, series.rho)
    t = series.t[2:-2]
    rho = series.rho[2:-2]
    res = d2 + profile.omega_sq(t) * rho - G * G / rho ** 3
    return ErmakovResidual(t, res, G)


@dataclass(frozen=True, eq=False)
class InvariantReport:
    G0: float
    G: np.ndarray
    I: np.ndarray
    g_drift: float
    i_drift: float
    identity_defect: float
    rho_omega_drift: float


def classical_invariants(traj: Trajectory) -> InvariantReport:
    """Wronskian drift, Ermakov-Lewis I = rho**4 s'**2 / 2 and the defect of I = G**2/2.

    ``identity_defect`` compares I with half the square of the local
    Wronskian (an exact identity); the drifts compare with the values at
    the first sample.
    """
    series = amplitude_phase(traj)
    W = traj.wronskian
    I = 0.5 * series.rho ** 4 * series.omega ** 2
    half = 0.5 * W * W
    rw = series.rho ** 2 * series.omega
    return InvariantReport(
        G0=traj.G,
        G=W,
        I=I,
        g_drift=float(np.max(np.abs(W / traj.G - 1.0))),
        i_drift=float(np.max(np.abs(I / I[0] - 1.0))),
        identity_defect=float(np.max(np.abs(I - half) / half)),
        rho_omega_drift=float(np.max(np.abs(rw / rw[0] - 1.0))),
    )


def adiabatic_check(series: AmplitudePhaseSeries, profile: FrequencyProfile) -> float:
    """Largest deviation of rho(t) sqrt(Omega(t)) from its initial value.

    Diagnostic only: small values mean the evolution stayed adiabatic.
    """
    w = profile.omega(series.t)
    x = series.rho * np.sqrt(w)
    return float(np.max(np.abs(x - x[0])))


def series_table(traj: Trajectory, series: AmplitudePhaseSeries | None = None,
                 residual: ErmakovResidual | None = None) -> dict[str, np.ndarray]:
    """Columns of :data:`SERIES_COLUMNS`; residual is NaN on the stencil margins."""
    series = series or amplitude_phase(traj)
    if residual is None:
        residual = ermakov_residual(series, traj.profile)
    res = np.full(len(traj), np.nan)
    res[2:-2] = residual.residual
    W = traj.wronskian
    return {
        "t": traj.t, "u1": traj.u1, "du1": traj.du1, "u2": traj.u2, "du2": traj.du2,
        "rho": series.rho, "drho": series.drho, "s_rho": series.s, "omega": series.omega,
        "G": W, "I": 0.5 * series.rho ** 4 * series.omega ** 2, "ermakov_residual": res,
    }
