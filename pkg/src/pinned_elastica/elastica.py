"""Closed-form critical points of the bending energy with pinned endpoints.

Each critical point is a wavelike curve whose curvature is a scaled cn; the
two families differ in the sign of the x-equation (and therefore in the
modulus equation), the index n counts interior inflections, and the +/- sign
picks the half plane.  Curvature, position and tangent are all evaluated in
closed form at any arc length; the only integral term (the cn^2 primitive)
comes from the Jacobi epsilon function, so evaluation cost is O(1) per point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .elliptic import Modulus, cn_squared_antiderivative, complete_pair, jacobi_scd
from .modulus import Family, PinnedProblem, solve_modulus

_N_CAP = 10**6


class SignChoice(Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class CriticalPoint:
    """One member of the classification, fully determined at construction.

    b is the initial curvature derivative kappa'(0), lam the length
    multiplier; k and e cache K(p) and E(p) for the evaluators.
    """

    problem: PinnedProblem
    family: Family
    n: int
    sign: SignChoice
    p: Modulus
    b: float
    lam: float
    energy: float
    k: float
    e: float

    @property
    def alpha(self) -> float:
        """Argument scaling 2(n+1)K/L of the curvature's cn."""
        return 2.0 * (self.n + 1) * self.k / self.problem.L

    @property
    def phase(self) -> float:
        """cn phase offset: +K for the hat family, -K for the check family."""
        return self.k if self.family is Family.HAT else -self.k

    @property
    def orientation(self) -> float:
        return 1.0 if self.sign is SignChoice.PLUS else -1.0


def make_critical_point(problem: PinnedProblem, family: Family, n: int,
                        sign: SignChoice) -> CriticalPoint:
    """Construct the critical point (family, n, sign) for the given problem."""
    if not isinstance(n, (int, np.integer)) or n < 0:
        raise ValueError(f"inflection index n must be a nonnegative integer, got {n}")
    if n > _N_CAP:
        raise ValueError(f"n = {n} exceeds the supported cap {_N_CAP}")
    sol = solve_modulus(problem, family)
    m = sol.p
    pair = complete_pair(m)
    k, e = pair.k, pair.e
    L = problem.L
    scale = 8.0 * (n + 1) ** 2 * k * k / (L * L)
    b_mag = scale * m.p * m.pc
    one_minus_2p2 = 2.0 * m.pc * m.pc - 1.0  # stable form of 1 - 2p^2
    lam = -scale * one_minus_2p2
    if family is Family.HAT:
        b = -b_mag if sign is SignChoice.PLUS else b_mag
    else:
        b = b_mag if sign is SignChoice.PLUS else -b_mag
    energy = 16.0 * (n + 1) ** 2 * k * (e - m.pc * m.pc * k) / L
    return CriticalPoint(problem, family, int(n), sign, m, b, lam, energy, k, e)


def _validate_arclength(cp: CriticalPoint, s):
    L = cp.problem.L
    sa = np.asarray(s, dtype=float)
    slack = 1e-12 * L
    if np.any(sa < -slack) or np.any(sa > L + slack):
        raise ValueError(f"arc length outside [0, {L}]")
    return np.clip(sa, 0.0, L)


def curvature_at(cp: CriticalPoint, s):
    """Signed curvature at arc length s (scalar or array)."""
    sa = _validate_arclength(cp, s)
    amp = 4.0 * (cp.n + 1) * cp.p.p * cp.k / cp.problem.L
    cn = jacobi_scd(cp.alpha * sa + cp.phase, cp.p).cn
    out = cp.orientation * amp * cn
    return float(out) if (np.isscalar(s) or np.ndim(s) == 0) else out


def position_at(cp: CriticalPoint, s):
    """Position (x, y) at arc length s; (0,0) at s=0 and (l,0) at s=L."""
    sa = _validate_arclength(cp, s)
    m = cp.p
    alpha, beta = cp.alpha, cp.phase
    psq = 1.0 - m.pc * m.pc
    one_minus_2p2 = 2.0 * m.pc * m.pc - 1.0
    integral = (cn_squared_antiderivative(alpha * sa + beta, m)
                - cn_squared_antiderivative(beta, m)) / alpha
    y_coef = m.p * cp.problem.L / ((cp.n + 1) * cp.k)
    cn = jacobi_scd(alpha * sa + beta, m).cn
    if cp.family is Family.HAT:
        x = 2.0 * psq * integral + one_minus_2p2 * sa
        y = -y_coef * cn
    else:
        x = -2.0 * psq * integral - one_minus_2p2 * sa
        y = y_coef * cn
    y = cp.orientation * y
    if np.isscalar(s) or np.ndim(s) == 0:
        return float(x), float(y)
    return x, y


def tangent_at(cp: CriticalPoint, s):
    """Unit tangent (x'(s), y'(s)); the norm is an algebraic identity."""
    sa = _validate_arclength(cp, s)
    m = cp.p
    t = jacobi_scd(cp.alpha * sa + cp.phase, m)
    psq = 1.0 - m.pc * m.pc
    one_minus_2p2 = 2.0 * m.pc * m.pc - 1.0
    if cp.family is Family.HAT:
        tx = 2.0 * psq * t.cn * t.cn + one_minus_2p2
        ty = 2.0 * m.p * t.sn * t.dn
    else:
        tx = -2.0 * psq * t.cn * t.cn - one_minus_2p2
        ty = -2.0 * m.p * t.sn * t.dn
    ty = cp.orientation * ty
    if np.isscalar(s) or np.ndim(s) == 0:
        return float(tx), float(ty)
    return tx, ty


def bending_energy(cp: CriticalPoint) -> float:
    """Closed-form total squared curvature, 16 (n+1)^2 K (p^2 K - K + E)/L."""
    return cp.energy


@dataclass(frozen=True)
class SampledCurve:
    """Uniform arc-length samples of one critical point."""

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    kappa: np.ndarray
    tangent_x: np.ndarray
    tangent_y: np.ndarray

    @property
    def num_samples(self) -> int:
        return self.s.size

    @property
    def length(self) -> float:
        return float(self.s[-1])


def sample_curve(cp: CriticalPoint, num: int) -> SampledCurve:
    """num uniformly spaced arc-length samples of position/tangent/curvature."""
    if not isinstance(num, (int, np.integer)) or num < 2:
        raise ValueError(f"need at least 2 samples, got {num}")
    if num > 50_000_000:
        raise ValueError(f"sample count {num} is unreasonably large")
    s = np.linspace(0.0, cp.problem.L, int(num))
    x, y = position_at(cp, s)
    tx, ty = tangent_at(cp, s)
    kappa = curvature_at(cp, s)
    return SampledCurve(s, x, y, kappa, tx, ty)


def enumerate_spectrum(problem: PinnedProblem, n_max: int) -> list:
    """All 4(n_max+1) critical points, sorted by energy (plus before minus)."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    points = [
        make_critical_point(problem, family, n, sign)
        for n in range(n_max + 1)
        for family in (Family.HAT, Family.CHECK)
        for sign in (SignChoice.PLUS, SignChoice.MINUS)
    ]
    points.sort(key=lambda cp: (cp.energy, cp.family is not Family.HAT,
                                cp.sign is not SignChoice.PLUS, cp.n))
    return points
