"""Complete/incomplete elliptic integrals and Jacobi elliptic functions.

Everything is double precision and built on the arithmetic-geometric mean
(AGM): K and E come from the AGM value and its c-sum, the Jacobi amplitude
from the descending Landen phase back-substitution, and the Jacobi epsilon
function (integral of dn^2) from the same chain.  Moduli are carried together
with their complement pc = sqrt(1 - p^2), because near p = 1 the complement
is the only honest double-precision handle (p itself rounds to 1.0 long
before the functions degenerate).

All point evaluations accept scalars or numpy arrays in the argument `u`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

_EPS = float(np.finfo(float).eps)

# below this modulus, sn/cn/dn/am use the trigonometric limit (corrections
# are O(p^4) < eps there)
_TRIG_MODULUS = 1e-8
# below this complement, K and E switch to the log(4/pc) asymptotics
_ASYMPTOTIC_COMPLEMENT = 1e-6
# below this complement, the Landen back-substitution loses ~2*sqrt(pc)
# (the step ratio c1/a1 rounds to 1); switch sn/cn/dn to the hyperbolic
# expansion, whose error is O(pc^3) there
_HYPERBOLIC_COMPLEMENT = 1e-9
# below this modulus the closed-form cn^2 antiderivative loses ~eps/p^2 to
# cancellation; fall through to quadrature
_SMALL_P_ANTIDERIV = 1e-2

_MAX_AGM_ITER = 64


class EllipticDomainError(ValueError):
    """Modulus or argument outside the supported range."""


@dataclass(frozen=True)
class Modulus:
    """Elliptic modulus p with its complement pc = sqrt(1 - p^2).

    `log_pc` stays finite even when pc underflows, which is what the
    near-degenerate branch of K and E runs on.
    """

    p: float
    pc: float
    log_pc: float

    @staticmethod
    def from_p(p: float) -> "Modulus":
        p = float(p)
        if not 0.0 <= p <= 1.0 or math.isnan(p):
            raise EllipticDomainError(f"modulus must satisfy 0 <= p <= 1, got {p}")
        pc = math.sqrt((1.0 - p) * (1.0 + p))
        log_pc = math.log(pc) if pc > 0.0 else -math.inf
        return Modulus(p, pc, log_pc)

    @staticmethod
    def from_complement(pc: float) -> "Modulus":
        pc = float(pc)
        if not 0.0 < pc <= 1.0 or math.isnan(pc):
            raise EllipticDomainError(f"complement must satisfy 0 < pc <= 1, got {pc}")
        p = math.sqrt((1.0 - pc) * (1.0 + pc))
        return Modulus(p, pc, math.log(pc))

    @staticmethod
    def from_log_complement(log_pc: float) -> "Modulus":
        log_pc = float(log_pc)
        if not log_pc <= 0.0 or math.isnan(log_pc):
            raise EllipticDomainError(f"log-complement must be <= 0, got {log_pc}")
        pc = math.exp(log_pc)  # may underflow to 0.0; log_pc stays authoritative
        p = math.sqrt(max((1.0 - pc) * (1.0 + pc), 0.0))
        return Modulus(p, pc, log_pc)


def as_modulus(p) -> Modulus:
    """Coerce a float (or pass through a Modulus) to a Modulus."""
    if isinstance(p, Modulus):
        return p
    return Modulus.from_p(p)


@dataclass(frozen=True)
class EllipticPair:
    """Values (K(p), E(p)) of the complete elliptic integrals at one modulus."""

    k: float
    e: float
    p: Modulus


@dataclass(frozen=True)
class JacobiTriple:
    """(sn, cn, dn) at one argument/modulus pair; fields may be arrays."""

    sn: object
    cn: object
    dn: object
    u: object
    p: Modulus


def _p_squared(m: Modulus) -> float:
    # 1 - pc^2 in the stable direction: p*p loses nothing for p <= ~0.9,
    # while (1-pc)(1+pc) is the accurate form once pc is small.
    if m.p < 0.9:
        return m.p * m.p
    return (1.0 - m.pc) * (1.0 + m.pc)


def _agm_chain(m: Modulus):
    """AGM sequences a_j and c_j from (a0, b0) = (1, pc), c0 = p."""
    a, b = 1.0, m.pc
    a_seq = [a]
    c_seq = [m.p]
    for _ in range(_MAX_AGM_ITER):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        a_seq.append(a)
        c_seq.append(c)
        if abs(c) <= _EPS * a:
            return a_seq, c_seq
    raise RuntimeError("AGM did not converge (should be unreachable)")


def _complete_pair_agm(m: Modulus):
    a_seq, c_seq = _agm_chain(m)
    k = math.pi / (2.0 * a_seq[-1])
    s = 0.5 * _p_squared(m)
    for j in range(1, len(c_seq)):
        s += 2.0 ** (j - 1) * c_seq[j] * c_seq[j]
    return k, k * (1.0 - s)


def _complete_pair_asymptotic(m: Modulus):
    # K = L + (pc^2/4)(L - 1) + O(pc^4 L),  E = 1 + (pc^2/2)(L - 1/2),
    # L = log(4/pc).  Valid (to double precision) for pc < 1e-6.
    lam = math.log(4.0) - m.log_pc
    pc2 = math.exp(2.0 * m.log_pc)  # harmless underflow to 0.0
    k = lam + 0.25 * pc2 * (lam - 1.0)
    e = 1.0 + 0.5 * pc2 * (lam - 0.5)
    return k, e


def complete_pair(p) -> EllipticPair:
    """K(p) and E(p) from a single AGM chain."""
    m = as_modulus(p)
    if m.p == 0.0:
        return EllipticPair(math.pi / 2.0, math.pi / 2.0, m)
    if m.pc == 0.0 and m.log_pc == -math.inf:
        raise EllipticDomainError("K(p) diverges at p = 1")
    if m.pc < _ASYMPTOTIC_COMPLEMENT:
        k, e = _complete_pair_asymptotic(m)
    else:
        k, e = _complete_pair_agm(m)
    return EllipticPair(k, e, m)


def complete_K(p) -> float:
    """Complete elliptic integral of the first kind, 0 <= p < 1."""
    m = as_modulus(p)
    if m.pc == 0.0 and m.log_pc == -math.inf:
        raise EllipticDomainError("K(p) diverges at p = 1")
    return complete_pair(m).k


def complete_E(p) -> float:
    """Complete elliptic integral of the second kind, 0 <= p <= 1."""
    m = as_modulus(p)
    if m.pc == 0.0 and m.log_pc == -math.inf:
        return 1.0
    return complete_pair(m).e


def derivative_K(p) -> float:
    """dK/dp = E/((1-p^2) p) - K/p, for 0 < p < 1."""
    m = as_modulus(p)
    if m.p <= 0.0 or m.pc <= 0.0:
        raise EllipticDomainError("dK/dp requires 0 < p < 1")
    pair = complete_pair(m)
    return pair.e / (m.pc * m.pc * m.p) - pair.k / m.p


def derivative_E(p) -> float:
    """dE/dp = (E - K)/p, for 0 < p < 1."""
    m = as_modulus(p)
    if m.p <= 0.0 or m.pc <= 0.0:
        raise EllipticDomainError("dE/dp requires 0 < p < 1")
    pair = complete_pair(m)
    return (pair.e - pair.k) / m.p


def _reduce_argument(u, k: float):
    """Split u = 2nK + r with r in [-K, K]; returns (r, n)."""
    n = np.round(u / (2.0 * k))
    return u - 2.0 * k * n, n


def _phase_sequence(r, m: Modulus, a_seq, c_seq):
    """Back-substituted Landen phases phi_N ... phi_0 for r in [-K, K]."""
    n_steps = len(a_seq) - 1
    phi = (2.0**n_steps) * a_seq[-1] * np.asarray(r, dtype=float)
    phases = [phi]
    for j in range(n_steps, 0, -1):
        ratio = c_seq[j] / a_seq[j]
        phi = 0.5 * (phi + np.arcsin(np.clip(ratio * np.sin(phi), -1.0, 1.0)))
        phases.append(phi)
    phases.reverse()  # phases[j] = phi_j
    return phases


def _hyperbolic_triplet(r, m: Modulus, k: float):
    """(sn, cn, dn) on the reduced argument r in [-K, K] for pc < 1e-9.

    Direct expansion for |r| <= K/2; the quarter-period shift identities
    sn(K-w) = cn(w)/dn(w), cn(K-w) = pc sn(w)/dn(w), dn(K-w) = pc/dn(w)
    otherwise.  Written so that sinh is only taken at arguments <= K/2,
    where pc^2 sinh stays tiny (pc^2 e^K = 16 pc).
    """
    a = np.abs(r)
    near_quarter = a > 0.5 * k
    w = np.where(near_quarter, k - a, a)
    t = np.tanh(w)
    s = np.sinh(w)
    c = 1.0 / np.cosh(w)
    pc2 = m.pc * m.pc
    sn_w = t - 0.25 * pc2 * (w * c * c - t)
    cn_w = c + 0.25 * pc2 * t * (w * c - s)
    dn_w = c + 0.25 * pc2 * t * (w * c + s)
    sn = np.where(near_quarter, cn_w / dn_w, sn_w)
    cn = np.where(near_quarter, m.pc * sn_w / dn_w, cn_w)
    dn = np.where(near_quarter, m.pc / dn_w, dn_w)
    sn = np.where(r < 0.0, -sn, sn)
    return sn, cn, dn


def _reduced_scd(u, m: Modulus):
    """(sn, cn, dn, phi0, n) at the reduced argument r = u - 2nK."""
    k = complete_K(m)
    r, n = _reduce_argument(u, k)
    if m.pc < _HYPERBOLIC_COMPLEMENT:
        sn, cn, dn = _hyperbolic_triplet(r, m, k)
        phi0 = np.arctan2(sn, cn)
    else:
        a_seq, c_seq = _agm_chain(m)
        phi0 = _phase_sequence(r, m, a_seq, c_seq)[0]
        sn, cn = np.sin(phi0), np.cos(phi0)
        dn = np.sqrt(cn * cn + (m.pc * sn) ** 2)
    return sn, cn, dn, phi0, n


def _check_point_modulus(m: Modulus):
    if m.pc == 0.0:
        raise EllipticDomainError("Jacobi functions require p < 1 (pc > 0)")


def jacobi_am(u, p):
    """Jacobi amplitude am(u, p); strictly increasing, am(u + 2K) = am(u) + pi."""
    m = as_modulus(p)
    scalar = np.isscalar(u) or np.ndim(u) == 0
    ua = np.asarray(u, dtype=float)
    if m.p < _TRIG_MODULUS:
        psq = m.p * m.p
        out = ua - 0.25 * psq * (ua - np.sin(ua) * np.cos(ua))
    else:
        _check_point_modulus(m)
        _, _, _, phi0, n = _reduced_scd(ua, m)
        out = phi0 + n * math.pi
    return float(out) if scalar else out


def jacobi_scd(u, p) -> JacobiTriple:
    """(sn, cn, dn) at u; dn computed as sqrt(cn^2 + pc^2 sn^2) (no cancellation)."""
    m = as_modulus(p)
    scalar = np.isscalar(u) or np.ndim(u) == 0
    ua = np.asarray(u, dtype=float)
    if m.p < _TRIG_MODULUS:
        am = ua - 0.25 * (m.p * m.p) * (ua - np.sin(ua) * np.cos(ua))
        sn, cn = np.sin(am), np.cos(am)
        dn = np.sqrt(cn * cn + (m.pc * sn) ** 2)
    else:
        _check_point_modulus(m)
        sn0, cn0, dn, _, n = _reduced_scd(ua, m)
        # sn/cn flip sign with each stripped half period (exact antiperiodicity)
        flip = np.where(np.asarray(n, dtype=float) % 2.0 == 0.0, 1.0, -1.0)
        sn, cn = flip * sn0, flip * cn0
    if scalar:
        sn, cn, dn, ua = float(sn), float(cn), float(dn), float(ua)
    return JacobiTriple(sn, cn, dn, ua, m)


def cn_derivative(u, p):
    """d/du cn(u, p) = -sn(u, p) dn(u, p)."""
    t = jacobi_scd(u, p)
    return -t.sn * t.dn


def jacobi_epsilon(u, p):
    """Jacobi epsilon: integral of dn(t, p)^2 over [0, u].

    Computed from the AGM chain as (E/K) r + sum_j c_j sin(phi_j) on the
    reduced argument r, plus 2nE for the stripped half periods.
    """
    m = as_modulus(p)
    scalar = np.isscalar(u) or np.ndim(u) == 0
    ua = np.asarray(u, dtype=float)
    if m.p < _TRIG_MODULUS:
        psq = m.p * m.p
        out = ua - psq * (0.5 * ua - 0.25 * np.sin(2.0 * ua))
    else:
        _check_point_modulus(m)
        pair = complete_pair(m)
        r, n = _reduce_argument(ua, pair.k)
        if m.pc < _HYPERBOLIC_COMPLEMENT:
            # integral of the hyperbolic dn^2 expansion; valid on all of
            # [-K, K] (the error term integrates to O(pc^2))
            z = np.abs(r)
            t = np.tanh(z)
            c2 = 1.0 / np.cosh(z) ** 2
            eps_r = t + 0.5 * (m.pc * m.pc) * (z - 0.5 * (z * c2 + t))
            eps_r = np.where(r < 0.0, -eps_r, eps_r)
        else:
            a_seq, c_seq = _agm_chain(m)
            phases = _phase_sequence(r, m, a_seq, c_seq)
            eps_r = np.zeros_like(r)
            for j in range(1, len(c_seq)):
                eps_r = eps_r + c_seq[j] * np.sin(phases[j])
            eps_r = eps_r + (pair.e / pair.k) * r
        out = 2.0 * n * pair.e + eps_r
    return float(out) if scalar else out


def cn_squared_antiderivative(u, p):
    """Integral of cn(t, p)^2 over [0, u] (odd in u, additive by evaluation).

    Closed form (eps(u) - pc^2 u)/p^2 away from small p; quadrature of cn^2
    below p = 1e-2 where the closed form cancels catastrophically.
    """
    m = as_modulus(p)
    if m.p < _TRIG_MODULUS:
        ua = np.asarray(u, dtype=float)
        out = 0.5 * ua + 0.25 * np.sin(2.0 * ua)
        return float(out) if (np.isscalar(u) or np.ndim(u) == 0) else out
    if m.p < _SMALL_P_ANTIDERIV:
        return cn_squared_by_quadrature(u, m)
    psq = _p_squared(m)
    eps_u = jacobi_epsilon(u, m)
    ua = np.asarray(u, dtype=float)
    out = (np.asarray(eps_u) - (m.pc * m.pc) * ua) / psq
    return float(out) if (np.isscalar(u) or np.ndim(u) == 0) else out


def cn_squared_by_quadrature(u, p):
    """Adaptive-quadrature fallback for the cn^2 antiderivative."""
    m = as_modulus(p)
    _check_point_modulus(m)

    def one(x: float) -> float:
        if x == 0.0:
            return 0.0
        # integrate per <= half-period panel to keep the integrand tame
        k = complete_K(m) if m.p >= _TRIG_MODULUS else math.pi / 2.0
        n_panels = max(1, int(math.ceil(abs(x) / (2.0 * k))))
        edges = np.linspace(0.0, x, n_panels + 1)
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            val, _ = quad(lambda t: jacobi_scd(t, m).cn ** 2, a, b,
                          epsabs=1e-13, epsrel=1e-13, limit=200)
            total += val
        return total

    if np.isscalar(u) or np.ndim(u) == 0:
        return one(float(u))
    return np.array([one(float(x)) for x in np.asarray(u, dtype=float).ravel()]).reshape(np.shape(u))
