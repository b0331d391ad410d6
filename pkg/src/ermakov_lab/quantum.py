"""Quantum TDHO operators on a truncated Fock space (hbar = 1).

Everything is a dense complex matrix in the number basis of a reference
oscillator of frequency ``omega0``. Truncation breaks the canonical
commutator only in the last diagonal entry, so polynomial identities are
compared on the leading (N-1)-block and identities involving exponentials
on the leading N/4-block.

Operators built from a :class:`TrajectoryPoint` use that point's own
Wronskian wherever the amplitude-phase form needs G (G = rho**2 ds/dt holds
pointwise), while the checks compare against the space's nominal ``G``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .classical import Trajectory, TrajectoryPoint
from .errors import DimensionError, DomainError
from .linalg import (
    LowBlockComparison, commutator, compare_block, dagger, matrix_exponential,
)

DEFAULT_DIM = 64
MIN_DIM = 4


def annihilation(n: int) -> np.ndarray:
    """Lowering operator a|k> = sqrt(k)|k-1> on an n-dimensional space."""
    if n < 1:
        raise DimensionError(f"dimension must be positive, got {n}")
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)


@dataclass(frozen=True, eq=False)
class FockSpace:
    dim: int
    omega0: float
    G: float
    a: np.ndarray
    q: np.ndarray
    p: np.ndarray
    picture: str = "schrodinger"
    time: float | None = None

    @property
    def ad(self) -> np.ndarray:
        return dagger(self.a)

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    @property
    def polynomial_block(self) -> int:
        return self.dim - 1

    @property
    def exponential_block(self) -> int:
        return max(self.dim // 4, 1)

    @cached_property
    def number(self) -> np.ndarray:
        return self.ad @ self.a

    @cached_property
    def dilation(self) -> np.ndarray:
        """qp + pq."""
        return self.q @ self.p + self.p @ self.q

    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v


def build_fock(N: int = DEFAULT_DIM, omega0: float = 1.0, G: float = 1.0) -> FockSpace:
    """Ladder, coordinate and momentum matrices of the reference oscillator."""
    if N < MIN_DIM:
        raise DimensionError(f"Fock dimension must be at least {MIN_DIM}, got {N}")
    if not omega0 > 0:
        raise DomainError(f"reference frequency must be positive, got {omega0}")
    a = annihilation(N)
    ad = dagger(a)
    q = (a + ad) / math.sqrt(2.0 * omega0)
    p = 1j * math.sqrt(omega0 / 2.0) * (ad - a)
    return FockSpace(N, float(omega0), float(G), a, q, p)


def heisenberg_space(space: FockSpace, traj: Trajectory, t: float) -> FockSpace:
    """Space whose q, p are the Heisenberg-picture operators at time ``t``.

    The oscillator is linear, so q_H(t) = f q + g p and p_H(t) = f' q + g' p
    with f, g the classical solutions for (x, v) = (1, 0) and (0, 1) at the
    start of the trajectory, assembled from the integrated pair.
    """
    first = traj.initial_point()
    pt = traj.point_at(t) if traj.dense is not None else traj.point(traj.index_of(t))
    G0 = first.wronskian
    af, bf = first.du2 / G0, -first.du1 / G0
    ag, bg = -first.u2 / G0, first.u1 / G0
    f, df = af * pt.u1 + bf * pt.u2, af * pt.du1 + bf * pt.du2
    g, dg = ag * pt.u1 + bg * pt.u2, ag * pt.du1 + bg * pt.du2
    q = f * space.q + g * space.p
    p = df * space.q + dg * space.p
    return replace(space, q=q, p=p, picture="heisenberg", time=float(t))


def hamiltonian(space: FockSpace, Omega: float) -> np.ndarray:
    """(p^2 + Omega^2 q^2) / 2."""
    if not Omega > 0:
        raise DomainError(f"frequency must be positive, got {Omega}")
    return 0.5 * (space.p @ space.p + Omega * Omega * (space.q @ space.q))


def linear_invariant_ops(space: FockSpace, point: TrajectoryPoint):
    """G1 = u1 p - u1' q and G2 = -u2 p + u2' q."""
    G1 = point.u1 * space.p - point.du1 * space.q
    G2 = -point.u2 * space.p + point.du2 * space.q
    return G1, G2


def check_g_commutation(space: FockSpace, point: TrajectoryPoint) -> LowBlockComparison:
    """[G1, G2] + iG on the leading (N-1)-block."""
    G1, G2 = linear_invariant_ops(space, point)
    diff = commutator(G1, G2) + 1j * space.G * space.identity
    return compare_block("[G1,G2] + iG", diff, space.polynomial_block)


def _amplitude_terms(space: FockSpace, point: TrajectoryPoint):
    rho = point.rho
    if not rho > 0:
        raise DomainError("amplitude rho must be positive")
    X = (point.wronskian / rho) * space.q
    Y = rho * space.p - point.drho * space.q
    return X, Y


def ermakov_operator(space: FockSpace, point: TrajectoryPoint):
    """Invariant from the linear invariants and from the amplitude form.

    Returns ``(I_from_G, I_from_rho, defect)`` where the defect is measured
    on the full matrix: the two forms are the same polynomial in q and p.
    """
    G1, G2 = linear_invariant_ops(space, point)
    I_g = 0.5 * (G1 @ G1 + G2 @ G2)
    X, Y = _amplitude_terms(space, point)
    I_rho = 0.5 * (X @ X + Y @ Y)
    return I_g, I_rho, compare_block("I(G1,G2) - I(rho)", I_g - I_rho)


def invariant_ladder(space: FockSpace, point: TrajectoryPoint):
    """``(A, A^dagger, a(t), a^dagger(t))``.

    A = (G1 - i G2)/sqrt 2 is built from the linear invariants, a(t) from
    the amplitude form (G q / rho + i (rho p - rho' q))/sqrt 2.
    """
    G1, G2 = linear_invariant_ops(space, point)
    A = (G1 - 1j * G2) / math.sqrt(2.0)
    X, Y = _amplitude_terms(space, point)
    a_t = (X + 1j * Y) / math.sqrt(2.0)
    return A, dagger(A), a_t, dagger(a_t)


def check_factorization(space: FockSpace, point: TrajectoryPoint):
    """I - a^dagger(t) a(t) - G/2 and I - A^dagger A - G/2 on the (N-1)-block.

    The third comparison measures the two factorizations against each other.
    """
    I, _, _ = ermakov_operator(space, point)
    A, Ad, a_t, ad_t = invariant_ladder(space, point)
    shift = 0.5 * space.G * space.identity
    m = space.polynomial_block
    return (
        compare_block("I - a+a - G/2", I - ad_t @ a_t - shift, m),
        compare_block("I - A+A - G/2", I - Ad @ A - shift, m),
        compare_block("a+a - A+A", ad_t @ a_t - Ad @ A, m),
    )


def phase_shift_conjugation(space: FockSpace, point: TrajectoryPoint,
                            s_rho: float) -> LowBlockComparison:
    """exp(i s I) A exp(-i s I) - a(t) on the leading N/4-block."""
    I, _, _ = ermakov_operator(space, point)
    A, _, a_t, _ = invariant_ladder(space, point)
    U = matrix_exponential(1j * s_rho * I)
    diff = U @ A @ dagger(U) - a_t
    return compare_block("e^{isI} A e^{-isI} - a(t)", diff, space.exponential_block)


def propagator(space: FockSpace, point: TrajectoryPoint, s_rho: float) -> np.ndarray:
    """U_I = exp(-i s I) in the invariant frame."""
    I, _, _ = ermakov_operator(space, point)
    return matrix_exponential(-1j * s_rho * I)


def squeeze_transform(space: FockSpace, rho: float, drho: float,
                      omega0: float | None = None) -> np.ndarray:
    """T = exp(i ln(rho sqrt w0)/2 (qp + pq)) exp(-i rho'/(2 rho) q^2), in that order."""
    if not rho > 0:
        raise DomainError("amplitude rho must be positive")
    omega0 = space.omega0 if omega0 is None else omega0
    lam = math.log(rho * math.sqrt(omega0))
    dil = matrix_exponential(0.5j * lam * space.dilation)
    chirp = matrix_exponential(-0.5j * (drho / rho) * (space.q @ space.q))
    return dil @ chirp


def _default_step(point: TrajectoryPoint) -> float:
    return 1e-4 * 2.0 * math.pi / point.omega


def check_invariant_hamiltonian_relation(
    space: FockSpace, traj: Trajectory, t: float, dt: float | None = None,
) -> LowBlockComparison:
    """H(t) - i (dT^dagger/dt) T - omega(t) I on the leading N/4-block.

    dT^dagger/dt is a central difference over the trajectory's dense output,
    so the defect carries an O(dt**2) contribution.
    """
    pt = traj.point_at(t)
    dt = _default_step(pt) if dt is None else dt
    if t - dt < traj.t[0] or t + dt > traj.t[-1]:
        raise DomainError(f"t +/- dt = {t} +/- {dt} leaves the trajectory span")
    lo, hi = traj.point_at(t - dt), traj.point_at(t + dt)
    T = squeeze_transform(space, pt.rho, pt.drho)
    Td_lo = dagger(squeeze_transform(space, lo.rho, lo.drho))
    Td_hi = dagger(squeeze_transform(space, hi.rho, hi.drho))
    dTd = (Td_hi - Td_lo) / (2.0 * dt)
    I, _, _ = ermakov_operator(space, pt)
    H = hamiltonian(space, traj.profile.omega(t))
    diff = H - 1j * dTd @ T - pt.omega * I
    return compare_block("H - i dT+/dt T - omega I", diff, space.exponential_block)


def heisenberg_rate_probe(space: FockSpace, traj: Trajectory, t: float,
                          dt: float | None = None) -> LowBlockComparison:
    """Finite-difference rate of the Heisenberg-picture a(t) against i omega [I, a].

    Reported only: the printed sign convention of this equation of motion is
    not gated.
    """
    pt = traj.point_at(t)
    dt = _default_step(pt) if dt is None else dt
    _, _, a_lo, _ = invariant_ladder(heisenberg_space(space, traj, t - dt), traj.point_at(t - dt))
    _, _, a_hi, _ = invariant_ladder(heisenberg_space(space, traj, t + dt), traj.point_at(t + dt))
    hs = heisenberg_space(space, traj, t)
    I, _, _ = ermakov_operator(hs, pt)
    _, _, a_t, _ = invariant_ladder(hs, pt)
    rate = (a_hi - a_lo) / (2.0 * dt)
    diff = rate - 1j * pt.omega * commutator(I, a_t)
    return compare_block("da/dt - i omega [I, a]", diff, space.exponential_block)
