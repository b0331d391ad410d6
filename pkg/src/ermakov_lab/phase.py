"""Turski phase operator, coherent states and number/phase identities.

The phase operator is the coherent-state average of the polar angle,
Phi = (1/pi) Int theta |alpha><alpha| d^2 alpha with theta in (-pi, pi].
Its Fock matrix elements have a closed form (angular integral times a
Gamma-function radial moment); a direct two-dimensional quadrature of the
defining integral is provided as an independent route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .classical import Trajectory, TrajectoryPoint
from .errors import (
    DimensionError, InvalidFrequencyError, NumericalError, TruncationRiskError,
    UnsupportedNormalizationError,
)
from .linalg import (
    LowBlockComparison, commutator, compare_block, dagger, hermitian_function,
    matrix_exponential,
)
from .quantum import FockSpace, ermakov_operator, heisenberg_space, invariant_ladder

NORMALIZATIONS = ("pi", "none")


@dataclass(frozen=True, eq=False)
class PhaseOperator:
    matrix: np.ndarray
    normalization: str = "pi"
    provenance: str = "closed-form"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _check_norm(normalization):
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")
    return 1.0 / math.pi if normalization == "pi" else 1.0


def turski_phase_matrix(N: int, normalization: str = "pi") -> PhaseOperator:
    """Closed-form Fock matrix of the phase operator.

    For k = m - n != 0 the element is
    -2 pi i (-1)^k / k * Gamma((m+n)/2 + 1) / (2 sqrt(m! n!)), times 1/pi
    under the ``"pi"`` normalization; the diagonal vanishes.
    """
    if N < 4:
        raise DimensionError(f"phase matrix needs N >= 4, got {N}")
    pref = _check_norm(normalization)
    m, n = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    k = m - n
    log_radial = gammaln((m + n) / 2.0 + 1.0) - 0.5 * (gammaln(m + 1.0) + gammaln(n + 1.0))
    radial = 0.5 * np.exp(log_radial)
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        angular = np.where(k != 0, -2j * math.pi * sign / np.where(k == 0, 1, k), 0.0)
    mat = pref * angular * radial
    if not np.all(np.isfinite(mat)):
        raise NumericalError("non-finite phase matrix element", {"N": N})
    return PhaseOperator(mat, normalization, "closed-form")


def _radial_cutoff(power: int) -> float:
    """Smallest r (beyond the peak) with exp(-r^2) r^power < 1e-16."""
    r = max(math.sqrt(power / 2.0), 1.0)
    while -r * r + power * math.log(r) >= math.log(1e-16):
        r += 0.25
    return r


def turski_element_quadrature(m: int, n: int, normalization: str = "pi",
                              epsabs: float = 1e-13) -> complex:
    """<m|Phi|n> by direct quadrature of the defining integral in polar coordinates.

    Angular: Gauss-Legendre on (-pi, pi) with at least 8 (m + n + 2) nodes.
    Radial: adaptive quadrature on [0, r_max], with r_max from the Gaussian
    tail bound. The integrand is assembled from coherent-state amplitudes.
    """
    pref = _check_norm(normalization)
    n_theta = max(64, 8 * (m + n + 2))
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta, w_theta = math.pi * x, math.pi * w
    log_norm = -0.5 * (math.lgamma(m + 1) + math.lgamma(n + 1))

    def integrand(r):
        alpha = r * np.exp(1j * theta)
        # <m|alpha><alpha|n> = e^{-r^2} alpha^m conj(alpha)^n / sqrt(m! n!)
        amp = np.exp(-r * r + log_norm) * alpha ** m * np.conj(alpha) ** n
        return np.sum(w_theta * theta * amp) * r

    r_max = _radial_cutoff(m + n + 1)
    opts = dict(epsabs=epsabs, epsrel=1e-12, limit=200)
    re, _ = integrate.quad(lambda r: integrand(r).real, 0.0, r_max, **opts)
    im, _ = integrate.quad(lambda r: integrand(r).imag, 0.0, r_max, **opts)
    return pref * complex(re, im)


def turski_phase_quadrature(N: int, normalization: str = "pi") -> PhaseOperator:
    mat = np.array([[turski_element_quadrature(m, n, normalization) for n in range(N)]
                    for m in range(N)])
    return PhaseOperator(mat, normalization, "quadrature")


@dataclass(frozen=True, eq=False)
class CoherentState:
    alpha: complex
    vector: np.ndarray

    @property
    def r(self) -> float:
        return abs(self.alpha)

    @property
    def theta(self) -> float:
        return math.atan2(self.alpha.imag, self.alpha.real)

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.vdot(self.vector, op @ self.vector))


def coherent_coefficients(N: int, alpha: complex) -> np.ndarray:
    """e^{-|alpha|^2/2} alpha^n / sqrt(n!) for n < N."""
    alpha = complex(alpha)
    out = np.zeros(N, dtype=complex)
    if alpha == 0:
        out[0] = 1.0
        return out
    n = np.arange(N)
    logmag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1.0)
    return np.exp(logmag + 1j * n * np.angle(alpha))


def displacement(space: FockSpace, alpha: complex, a: np.ndarray | None = None) -> np.ndarray:
    """D(alpha) = exp(alpha a^dagger - conj(alpha) a); ``a`` defaults to the reference ladder."""
    a = space.a if a is None else a
    return matrix_exponential(alpha * dagger(a) - np.conj(alpha) * a)


def coherent_state(space: FockSpace, alpha: complex) -> CoherentState:
    alpha = complex(alpha)
    if abs(alpha) ** 2 > space.dim / 4:
        raise TruncationRiskError(
            f"|alpha|^2 = {abs(alpha) ** 2:g} exceeds N/4 = {space.dim / 4:g}"
        )
    return CoherentState(alpha, coherent_coefficients(space.dim, alpha))


def coherent_by_displacement(space: FockSpace, alpha: complex) -> CoherentState:
    """Same state, built by displacing the vacuum with a matrix exponential."""
    alpha = complex(alpha)
    return CoherentState(alpha, displacement(space, alpha) @ space.vacuum())


@dataclass(frozen=True)
class CommutatorProbe:
    alpha: complex
    expectation: complex
    deviation: float


@dataclass(frozen=True, eq=False)
class PhaseCommutatorReport:
    probes: tuple[CommutatorProbe, ...]
    block: LowBlockComparison
    diagonal: np.ndarray

    def deviation(self, r: float) -> float:
        for p in self.probes:
            if math.isclose(abs(p.alpha), r):
                return p.deviation
        raise KeyError(r)


def check_phase_commutator(phi: PhaseOperator, I_ref: np.ndarray,
                           alphas=(1.0, 2.0, 3.0), block: int | None = None
                           ) -> PhaseCommutatorReport:
    """Measure how far [Phi, I] is from -i.

    The Fock diagonal of [Phi, I] vanishes identically for diagonal I, so
    the operator relation cannot hold on the truncated space; coherent
    expectations show how closely it holds on semiclassical states.
    """
    N = phi.dim
    C = commutator(phi.matrix, I_ref)
    probes = []
    for a in alphas:
        a = complex(a)
        if abs(a) ** 2 > N / 4:
            raise TruncationRiskError(f"|alpha|^2 = {abs(a) ** 2:g} exceeds N/4")
        v = coherent_coefficients(N, a)
        e = complex(np.vdot(v, C @ v))
        probes.append(CommutatorProbe(a, e, abs(e + 1j)))
    m = N // 4 if block is None else block
    cmp = compare_block("[Phi,I] + i", C + 1j * np.eye(N), m)
    return PhaseCommutatorReport(tuple(probes), cmp, np.diag(C).copy())


def number_operator(space: FockSpace, point: TrajectoryPoint, G: float | None = None) -> np.ndarray:
    """n(t) = a^dagger(t) a(t) / (G omega(t))."""
    G = space.G if G is None else G
    omega = point.omega
    if not omega > 0:
        raise InvalidFrequencyError(f"phase velocity must be positive, got {omega}")
    _, _, a_t, ad_t = invariant_ladder(space, point)
    return ad_t @ a_t / (G * omega)


@dataclass(frozen=True)
class PhaseRecord:
    t: float
    omega: float
    s_rho: float
    wrapped_angle: float
    n_expect: float
    n_omega: float
    phase_expect: float
    phase_rate: float
    rate_deviation: float
    invariant_expect: float


@dataclass(frozen=True, eq=False)
class NumberPhaseReport:
    alpha: complex
    degenerate: bool
    records: tuple[PhaseRecord, ...] = field(default_factory=tuple)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def phase_eom_probe(space: FockSpace, traj: Trajectory, alpha: complex, times,
                    phi: PhaseOperator | None = None, dt: float | None = None
                    ) -> NumberPhaseReport:
    """Rate of <alpha|Phi(t)|alpha> with Phi(t) = e^{i s I} Phi e^{-i s I}.

    I is the invariant at the start of the trajectory (diagonal in the
    reference basis for the default pair). The rate is a central
    difference in time (NaN where the stencil leaves the trajectory); it is
    compared with -omega(t). A vacuum probe has no phase and is flagged
    degenerate. Number expectations use the Heisenberg-picture operators.
    """
    phi = phi or turski_phase_matrix(space.dim)
    cs = coherent_state(space, alpha)
    I0, _, _ = ermakov_operator(space, traj.initial_point())
    w, V = np.linalg.eigh(I0)
    Vv = dagger(V) @ cs.vector
    Vphi = dagger(V) @ phi.matrix @ V

    def phase_expect(s):
        x = np.exp(-1j * s * w) * Vv
        return float(np.real(np.vdot(x, Vphi @ x)))

    records = []
    for t in times:
        pt = traj.point_at(t)
        h = (1e-3 * 2.0 * math.pi / pt.omega) if dt is None else dt
        s = traj.phase_at(t)
        if traj.t[0] <= t - h and t + h <= traj.t[-1]:
            rate = (phase_expect(traj.phase_at(t + h))
                    - phase_expect(traj.phase_at(t - h))) / (2 * h)
        else:
            rate = math.nan
        hs = heisenberg_space(space, traj, t)
        n_op = number_operator(hs, pt)
        I_t, _, _ = ermakov_operator(hs, pt)
        n_exp = cs.expect(n_op).real
        records.append(PhaseRecord(
            t=float(t), omega=pt.omega, s_rho=s,
            wrapped_angle=float(np.angle(np.exp(1j * (cs.theta - s)))),
            n_expect=n_exp, n_omega=n_exp * pt.omega,
            phase_expect=phase_expect(s), phase_rate=rate,
            rate_deviation=abs(rate + pt.omega) / pt.omega,
            invariant_expect=cs.expect(I_t).real,
        ))
    return NumberPhaseReport(cs.alpha, cs.alpha == 0, tuple(records))


def number_energy_series(space: FockSpace, traj: Trajectory, alpha: complex, times):
    """<alpha| n_H(t) |alpha> omega(t) at each time, Heisenberg picture."""
    cs = coherent_state(space, alpha)
    out = []
    for t in times:
        pt = traj.point_at(t)
        out.append(cs.expect(number_operator(heisenberg_space(space, traj, t), pt)).real * pt.omega)
    return np.array(out)


@dataclass(frozen=True)
class PolarReport:
    coordinate: LowBlockComparison
    polar: LowBlockComparison
    conjugate_polar: LowBlockComparison


def coordinate_polar_check(space: FockSpace, point: TrajectoryPoint,
                           phi: PhaseOperator | None = None) -> PolarReport:
    """q against (a + a^dagger)/sqrt(2 G omega) and a against sqrt(I) e^{-i Phi}.

    The first is an exact identity (gated on the (N-1)-block); the second,
    the polar factorization, is only approximate on a truncated space and
    is measured on the N/4-block. ``conjugate_polar`` measures the same
    factorization with e^{+i Phi} for comparison.
    """
    phi = phi or turski_phase_matrix(space.dim)
    _, _, a_t, ad_t = invariant_ladder(space, point)
    q_rec = (a_t + ad_t) / math.sqrt(2.0 * space.G * point.omega)
    coord = compare_block("q - (a + a+)/sqrt(2 G omega)", space.q - q_rec,
                          space.polynomial_block)
    I, _, _ = ermakov_operator(space, point)
    sqrt_I = hermitian_function(I, lambda x: np.sqrt(np.clip(x, 0.0, None)))
    m = space.exponential_block
    polar = compare_block("a - sqrt(I) e^{-i Phi}",
                          a_t - sqrt_I @ matrix_exponential(-1j * phi.matrix), m)
    conj = compare_block("a - sqrt(I) e^{+i Phi}",
                         a_t - sqrt_I @ matrix_exponential(1j * phi.matrix), m)
    return PolarReport(coord, polar, conj)


@dataclass(frozen=True)
class EnergyProbe:
    alpha: complex
    n_omega: float
    invariant_minus_half: float
    defect: float


@dataclass(frozen=True)
class NumberPhaseIdentity:
    identity: LowBlockComparison
    probes: tuple[EnergyProbe, ...]


def invariant_number_phase_check(space: FockSpace, point: TrajectoryPoint, G: float = 1.0,
                                 alphas=(0.0, 1.0)) -> NumberPhaseIdentity:
    """I against omega n + 1/2, with the phase rate replaced by -omega.

    Only the unit normalization is supported. The probes compare the
    excitation energy <n> omega with <I> - 1/2 on coherent states.
    """
    if G != 1.0 or space.G != 1.0:
        raise UnsupportedNormalizationError("number/phase form of the invariant needs G = 1")
    n_op = number_operator(space, point, G)
    I, _, _ = ermakov_operator(space, point)
    ident = compare_block("I - (omega n + 1/2)",
                          I - (point.omega * n_op + 0.5 * space.identity),
                          space.polynomial_block)
    probes = []
    for a in alphas:
        cs = coherent_state(space, a)
        e = cs.expect(n_op).real * point.omega
        i_half = cs.expect(I).real - 0.5
        probes.append(EnergyProbe(cs.alpha, e, i_half, abs(e - i_half)))
    return NumberPhaseIdentity(ident, tuple(probes))
