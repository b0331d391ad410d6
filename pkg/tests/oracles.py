"""Reference implementations that share no numerical machinery with the package."""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np


def tanh_omega(t, w0, w1, c, d):
    return w0 + (w1 - w0) * (1.0 + math.tanh((t - c) / d)) / 2.0


def rk4_richardson(omega, y0, t0, t1, h):
    """Fixed-step RK4 at h and h/2, Richardson-combined.

    State: (u1, u1', u2, u2', s) with s' = W / rho^2. Returns the state at t1.
    """
    def rhs(t, y):
        w2 = omega(t) ** 2
        W = y[0] * y[3] - y[2] * y[1]
        return np.array([y[1], -w2 * y[0], y[3], -w2 * y[2], W / (y[0] ** 2 + y[2] ** 2)])

    def run(step):
        n = int(round((t1 - t0) / step))
        step = (t1 - t0) / n
        y = np.array(y0, dtype=float)
        t = t0
        for _ in range(n):
            k1 = rhs(t, y)
            k2 = rhs(t + step / 2, y + step / 2 * k1)
            k3 = rhs(t + step / 2, y + step / 2 * k2)
            k4 = rhs(t + step, y + step * k3)
            y = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += step
        return y

    coarse, fine = run(h), run(h / 2)
    return (16 * fine - coarse) / 15


def expm_series(A, terms=50, dps=40):
    """exp(A) by a truncated Taylor series in extended precision."""
    with mpmath.workdps(dps):
        M = mpmath.matrix(np.asarray(A).tolist())
        n = M.rows
        out = mpmath.eye(n)
        term = mpmath.eye(n)
        for k in range(1, terms + 1):
            term = term * M / k
            out += term
        return np.array([[complex(out[i, j]) for j in range(n)] for i in range(n)])


def turski_element_mp(m, n, dps=20):
    """<m|Phi|n> (1/pi convention) by nested mpmath quadrature in polar coordinates."""
    with mpmath.workdps(dps):
        norm = 1 / mpmath.sqrt(mpmath.factorial(m) * mpmath.factorial(n))

        def f(r, th):
            a = r * mpmath.expj(th)
            return th * mpmath.exp(-r * r) * a ** m * mpmath.conj(a) ** n * norm * r

        val = mpmath.quad(f, [0, 3, mpmath.inf], [-mpmath.pi, 0, mpmath.pi])
        return complex(val / mpmath.pi)


def ladder(n):
    a = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        a[k - 1, k] = math.sqrt(k)
    return a


def ledger(coeffs, omegas, numbers, omega_out):
    """Exact-rational sum c_k W_k(t_i) and omega_out^2 n_f for equal input energies."""
    omegas = [Fraction(w) for w in omegas]
    numbers = [Fraction(n) for n in numbers]
    lhs = sum(c * w * w * n for c, w, n in zip(coeffs, omegas, numbers))
    n_f = [w * n / Fraction(omega_out) for w, n in zip(omegas, numbers)]
    return lhs, Fraction(omega_out) ** 2 * n_f[0], n_f
