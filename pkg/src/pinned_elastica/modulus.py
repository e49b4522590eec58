"""Moduli of the two critical-point families from the endpoint ratio l/L.

The hat family solves 2 E(p)/K(p) - 1 = l/L on (0, p0) and the check family
solves 1 - 2 E(p)/K(p) = l/L on (p0, 1), where p0 is the root of 2E/K = 1.
Both equations have unique solutions because E/K is strictly decreasing.

The check solve runs in the log-complement variable v = log(sqrt(1 - p^2)):
for l/L as small as 0.87 the solution is already within one double ulp of
p = 1, so p itself is useless as the unknown, while v stays well scaled all
the way to l/L = 1 - 1e-6 (where K ~ 2e6).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

from .elliptic import EllipticPair, Modulus, complete_pair

_RATIO_MIN = 1e-6
_RATIO_MAX = 1.0 - 1e-6
_RESIDUAL_TOL = 1e-13
_MAX_ITER = 200


class Family(Enum):
    HAT = "hat"
    CHECK = "check"


class ModulusSolveError(RuntimeError):
    """Root iteration failed to reach the residual tolerance."""


@dataclass(frozen=True)
class PinnedProblem:
    """Boundary data: endpoint distance l and curve length L, 0 < l < L."""

    l: float
    L: float

    def __post_init__(self):
        if not (0.0 < self.l < self.L) or math.isnan(self.l) or math.isnan(self.L):
            raise ValueError(f"requires 0 < l < L, got l={self.l}, L={self.L}")

    @property
    def ratio(self) -> float:
        return self.l / self.L


@dataclass(frozen=True)
class ModulusSolution:
    family: Family
    p: Modulus
    residual: float


def phi_ratio(p) -> float:
    """E(p)/K(p): strictly decreasing, 1 at p = 0, -> 0 as p -> 1."""
    m = p if isinstance(p, Modulus) else Modulus.from_p(p)
    if m.p == 0.0:
        return 1.0
    pair = complete_pair(m)
    return pair.e / pair.k


def _phi_and_derivative_p(m: Modulus):
    """(phi, dphi/dp) from the closed-form derivatives of K and E."""
    pair = complete_pair(m)
    k, e = pair.k, pair.e
    dk = e / (m.pc * m.pc * m.p) - k / m.p
    de = (e - k) / m.p
    return e / k, (de * k - e * dk) / (k * k)


def _phi_and_derivative_logpc(m: Modulus):
    """(phi, dphi/dv) with v = log pc; used by the check-family solve."""
    pair = complete_pair(m)
    k, e = pair.k, pair.e
    if m.pc < 1e-6:
        # asymptotic regime: dK/dv = -1 + O(pc^2 K), dE/dv = O(pc^2 K)
        return e / k, e / (k * k)
    phi, dphi_dp = _phi_and_derivative_p(m)
    # dp/dv = -pc^2 / p
    return phi, -dphi_dp * m.pc * m.pc / m.p


def _check_ratio(problem: PinnedProblem) -> float:
    r = problem.ratio
    if not (_RATIO_MIN <= r <= _RATIO_MAX):
        raise ValueError(
            f"ratio l/L = {r} outside the supported range "
            f"[{_RATIO_MIN}, {_RATIO_MAX}] (modulus would degenerate)"
        )
    return r


def _bracketed_newton(f_df, lo: float, hi: float, x0: float) -> float:
    """Newton with bisection fallback on a sign-changing bracket [lo, hi].

    f_df(x) -> (f, df); f must be positive at lo and negative at hi.
    """
    x = min(max(x0, lo), hi)
    for _ in range(_MAX_ITER):
        f, df = f_df(x)
        if abs(f) <= _RESIDUAL_TOL:
            return x
        if f > 0.0:
            lo = x
        else:
            hi = x
        step_ok = df != 0.0 and math.isfinite(df)
        if step_ok:
            x_new = x - f / df
            step_ok = lo < x_new < hi
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if x_new == x:
            break
        x = x_new
    f, _ = f_df(x)
    if abs(f) <= _RESIDUAL_TOL:
        return x
    raise ModulusSolveError(f"modulus iteration stalled with residual {f}")


def solve_hat_modulus(problem: PinnedProblem) -> ModulusSolution:
    """Unique p with 2 E(p)/K(p) - 1 = l/L; lies in (0, p0)."""
    r = _check_ratio(problem)

    def f_df(p):
        m = Modulus.from_p(p)
        phi, dphi = _phi_and_derivative_p(m)
        return 2.0 * phi - 1.0 - r, 2.0 * dphi

    # small-p expansion 2*phi - 1 = 1 - p^2 + O(p^4) seeds the iteration
    x0 = math.sqrt(max(1.0 - r, 1e-12))
    p = _bracketed_newton(f_df, 1e-12, p_zero().p, min(x0, p_zero().p * 0.999))
    m = Modulus.from_p(p)
    return ModulusSolution(Family.HAT, m, 2.0 * phi_ratio(m) - 1.0 - r)


def solve_check_modulus(problem: PinnedProblem) -> ModulusSolution:
    """Unique p with 1 - 2 E(p)/K(p) = l/L; lies in (p0, 1)."""
    r = _check_ratio(problem)

    def f_df(v):
        m = Modulus.from_log_complement(v)
        phi, dphi_dv = _phi_and_derivative_logpc(m)
        # phi grows with pc, so f = 1 - 2 phi - r decreases in v: the
        # bracket has f > 0 at v_lo (pc tiny) and f = -r < 0 at v_hi (p0)
        return 1.0 - 2.0 * phi - r, -2.0 * dphi_dv

    v_hi = p_zero().log_pc  # complement at p0, largest admissible
    # K ~ 2E/(1-r): generous deep end for the bracket
    v_lo = math.log(4.0) - (2.5 / (1.0 - r) + 20.0)
    v0 = math.log(4.0) - 2.0 / (1.0 - r)
    v = _bracketed_newton(f_df, v_lo, v_hi, v0)
    m = Modulus.from_log_complement(v)
    return ModulusSolution(Family.CHECK, m, 1.0 - 2.0 * phi_ratio(m) - r)


def solve_modulus(problem: PinnedProblem, family: Family) -> ModulusSolution:
    return _solve_cached(problem.l, problem.L, family)


@lru_cache(maxsize=1024)
def _solve_cached(l: float, L: float, family: Family) -> ModulusSolution:
    problem = PinnedProblem(l, L)
    if family is Family.HAT:
        return solve_hat_modulus(problem)
    return solve_check_modulus(problem)


@lru_cache(maxsize=1)
def p_zero() -> Modulus:
    """Root p0 of 2 E(p)/K(p) = 1 (= 0.908908557...)."""

    def f_df(p):
        phi, dphi = _phi_and_derivative_p(Modulus.from_p(p))
        return 2.0 * phi - 1.0, 2.0 * dphi

    p = _bracketed_newton(f_df, 0.5, 0.999, 0.9)
    return Modulus.from_p(p)


@lru_cache(maxsize=1)
def r_star() -> float:
    """Critical ratio 2 E(1/sqrt 2)/K(1/sqrt 2) - 1 = 0.456946581..."""
    return 2.0 * phi_ratio(1.0 / math.sqrt(2.0)) - 1.0


def elliptic_pair_of(solution: ModulusSolution) -> EllipticPair:
    return complete_pair(solution.p)
