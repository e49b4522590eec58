"""Geometric and energetic verification of the classification.

Inflection counting, polyline self-intersection (loop) counting, graph
representability, the energy laws, and the invariant battery behind the
``verify`` command all live here.  Everything operates on immutable inputs
and returns plain results, so sweeps can run data-parallel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .elastica import (CriticalPoint, SampledCurve, SignChoice, bending_energy,
                       curvature_at, enumerate_spectrum, make_critical_point,
                       position_at, sample_curve, tangent_at)
from .modulus import Family, PinnedProblem, r_star, solve_modulus

_EPS = float(np.finfo(float).eps)
_INFLECTION_DEADBAND = 1e-10
_LOOP_DEDUP = 1e-7


class ResolutionError(RuntimeError):
    """Sampling too coarse (or degenerate) to decide a geometric count."""


@dataclass(frozen=True)
class GeometryReport:
    interior_inflections: int
    graph_representable: bool
    loop_count: int
    max_unit_speed_error: float
    max_el_residual: float


def count_interior_inflections(curve: SampledCurve) -> int:
    """Strict sign changes of the curvature strictly inside (0, L).

    Samples within 1e-10 of the curvature scale count as zero; the boundary
    zeros are excluded by construction.
    """
    kappa = curve.kappa[1:-1]
    scale = float(np.max(np.abs(curve.kappa)))
    if scale == 0.0:
        return 0
    alive = np.abs(kappa) > _INFLECTION_DEADBAND * scale
    dead_pairs = np.flatnonzero(~alive[:-1] & ~alive[1:])
    if dead_pairs.size:
        raise ResolutionError(
            f"consecutive near-zero curvature samples at indices {dead_pairs[:4] + 1}")
    signs = np.sign(kappa[alive])
    return int(np.count_nonzero(np.diff(signs) != 0))


def detect_loops(curve: SampledCurve) -> int:
    """Transverse self-intersections of the sampled polyline.

    Adjacent segments are skipped; crossings found by several neighboring
    segment pairs are merged within an epsilon ball of radius 1e-7 L.
    """
    pts = np.column_stack([curve.x, curve.y])
    d = np.diff(pts, axis=0)
    n_seg = len(d)
    L = curve.length
    geom_tol = 1e-14 * L * L
    found = []
    for i in range(n_seg - 2):
        pj = pts[i + 2:n_seg]
        dj = d[i + 2:]
        di = d[i]
        denom = di[0] * dj[:, 1] - di[1] * dj[:, 0]
        qp = pj - pts[i]
        num_t = qp[:, 0] * dj[:, 1] - qp[:, 1] * dj[:, 0]
        num_u = qp[:, 0] * di[1] - qp[:, 1] * di[0]
        degenerate = np.abs(denom) <= geom_tol
        if np.any(degenerate & (np.abs(num_t) <= geom_tol)):
            # parallel and collinear: ranges could overlap
            for j in np.flatnonzero(degenerate & (np.abs(num_t) <= geom_tol)):
                a0 = np.dot(pj[j] - pts[i], di)
                a1 = np.dot(pj[j] + dj[j] - pts[i], di)
                nd = np.dot(di, di)
                if min(a0, a1) < nd and max(a0, a1) > 0.0:
                    raise ResolutionError("collinear overlapping segments")
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num_t / denom
            u = num_u / denom
        ok = (~degenerate) & (t >= 0.0) & (t < 1.0) & (u >= 0.0) & (u < 1.0)
        # the pair (i, i+2) shares no vertex, but a crossing exactly at the
        # shared vertex of chained segments would appear at u == 0 of one
        # pair and t == 1 of another; the half-open windows count it once
        if np.any(ok):
            cross_pts = pts[i] + np.outer(t[ok], di)
            found.extend(cross_pts)
    if not found:
        return 0
    found = np.asarray(found)
    eps = _LOOP_DEDUP * L
    kept = []
    for q in found:
        if all(np.hypot(q[0] - k[0], q[1] - k[1]) > eps for k in kept):
            kept.append(q)
    return len(kept)


def classify_graph_representability(cp: CriticalPoint) -> bool:
    """True iff x(s) is strictly increasing, i.e. x'(0) = 1 - 2p^2 > 0.

    Only meaningful for the hat family; the check curves always loop.
    Equality (the ratio R*) counts as not representable.
    """
    if cp.family is not Family.HAT:
        raise ValueError("graph representability is a hat-family question")
    return 2.0 * cp.p.pc * cp.p.pc - 1.0 > 0.0


def graph_representability_boundary(L: float = 1.0, tol: float = 1e-10) -> float:
    """Ratio where the hat classifier flips, located by bisection."""
    lo, hi = 0.2, 0.7

    def representable(r: float) -> bool:
        cp = make_critical_point(PinnedProblem(r * L, L), Family.HAT, 0,
                                 SignChoice.PLUS)
        return classify_graph_representability(cp)

    assert not representable(lo) and representable(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if representable(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def max_unit_speed_error(curve: SampledCurve) -> float:
    return float(np.max(np.abs(curve.tangent_x**2 + curve.tangent_y**2 - 1.0)))


def euler_lagrange_residual(cp: CriticalPoint, s_values) -> float:
    """Max residual of kappa'' + kappa^3/2 - lambda kappa/2 over the samples.

    kappa'' comes from a 5-point central difference with the step balanced
    for a 4th-order stencil (eps^(1/6) over the curvature wavelength).
    """
    L = cp.problem.L
    h = _EPS ** (1.0 / 6.0) / cp.alpha
    s = np.clip(np.atleast_1d(np.asarray(s_values, dtype=float)),
                2.0 * h, L - 2.0 * h)
    stencil = s[None, :] + h * np.array([-2.0, -1.0, 0.0, 1.0, 2.0])[:, None]
    f = curvature_at(cp, stencil.ravel()).reshape(stencil.shape)
    kpp = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h)
    res = kpp + 0.5 * f[2] ** 3 - 0.5 * cp.lam * f[2]
    return float(np.max(np.abs(res)))


def el_residual_scale(cp: CriticalPoint) -> float:
    amp = 4.0 * (cp.n + 1) * cp.p.p * cp.k / cp.problem.L
    return max(1.0, abs(cp.lam) * amp)


def frenet_consistency_error(cp: CriticalPoint, num: int = 200) -> float:
    """Max |T'(s) - kappa N(s)| at interior samples (central differences)."""
    L = cp.problem.L
    s = np.linspace(0.05 * L, 0.95 * L, num)
    h = _EPS ** (1.0 / 3.0) / cp.alpha
    txp, typ = tangent_at(cp, s + h)
    txm, tym = tangent_at(cp, s - h)
    dtx, dty = (txp - txm) / (2 * h), (typ - tym) / (2 * h)
    tx, ty = tangent_at(cp, s)
    kap = curvature_at(cp, s)
    return float(np.max(np.hypot(dtx - kap * (-ty), dty - kap * tx)))


def bending_energy_by_quadrature(cp: CriticalPoint) -> float:
    """Adaptive quadrature of kappa^2 over [0, L] (cross-check route)."""
    L = cp.problem.L
    n_panels = 2 * (cp.n + 1)
    edges = np.linspace(0.0, L, n_panels + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(lambda s: curvature_at(cp, s) ** 2, a, b,
                      epsabs=1e-12, epsrel=1e-12, limit=200)
        total += val
    return total


def energy_ordering_violations(problem: PinnedProblem, n_max: int) -> list:
    """Violated clauses of the energy laws, first one first (empty if none)."""
    out = []
    hat0 = make_critical_point(problem, Family.HAT, 0, SignChoice.PLUS)
    check0 = make_critical_point(problem, Family.CHECK, 0, SignChoice.PLUS)
    for n in range(n_max + 1):
        hat_n = make_critical_point(problem, Family.HAT, n, SignChoice.PLUS)
        check_n = make_critical_point(problem, Family.CHECK, n, SignChoice.PLUS)
        for name, cp_n, cp_0 in (("hat", hat_n, hat0), ("check", check_n, check0)):
            rel = abs(cp_n.energy / ((n + 1) ** 2 * cp_0.energy) - 1.0)
            if rel > 1e-14:
                out.append(f"{name} scaling law off by {rel:.2e} at n={n}")
        if not hat_n.energy < check_n.energy:
            out.append(f"hat energy not below check energy at n={n}")
    return out


def verify_energy_ordering(problem: PinnedProblem, n_max: int) -> bool:
    return not energy_ordering_violations(problem, n_max)


def energy_gap_small_ratio(L: float, r_values) -> list:
    """|W(hat 0) - W(check 0)| per ratio; decays to 0 as the ratio does."""
    gaps = []
    for r in r_values:
        if not 0.0 < r < 1.0:
            raise ValueError(f"ratio {r} outside (0, 1)")
        problem = PinnedProblem(r * L, L)
        hat = make_critical_point(problem, Family.HAT, 0, SignChoice.PLUS)
        check = make_critical_point(problem, Family.CHECK, 0, SignChoice.PLUS)
        gaps.append(abs(hat.energy - check.energy))
    return gaps


def _default_samples(n: int) -> int:
    return max(1024, 512 * (n + 1))


def geometry_report(cp: CriticalPoint, num: int = None) -> GeometryReport:
    if num is None:
        num = _default_samples(cp.n)
    curve = sample_curve(cp, num)
    representable = (classify_graph_representability(cp)
                     if cp.family is Family.HAT else False)
    return GeometryReport(
        interior_inflections=count_interior_inflections(curve),
        graph_representable=representable,
        loop_count=detect_loops(curve),
        max_unit_speed_error=max_unit_speed_error(curve),
        max_el_residual=euler_lagrange_residual(
            cp, np.linspace(0.0, cp.problem.L, 16)),
    )


# --------------------------------------------------------------------------
# the invariant battery behind `verify`

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _all_points(problem, n_max):
    for n in range(n_max + 1):
        for family in (Family.HAT, Family.CHECK):
            for sign in (SignChoice.PLUS, SignChoice.MINUS):
                yield make_critical_point(problem, family, n, sign)


def run_verification(problem: PinnedProblem, n_max: int,
                     inject_failure: str = None) -> list:
    """Run every invariant for one problem; one CheckResult per check."""
    L = problem.L
    results = []
    rng = np.random.default_rng(20210516)

    def add(name, passed, detail):
        if inject_failure == name:
            passed, detail = False, "injected failure (test hook)"
        results.append(CheckResult(name, bool(passed), detail))

    sols = [solve_modulus(problem, fam) for fam in (Family.HAT, Family.CHECK)]
    worst = max(abs(s.residual) for s in sols)
    add("modulus-residual", worst <= 1e-12, f"max |residual| = {worst:.2e}")

    points = list(_all_points(problem, n_max))

    worst = max(math.hypot(px - problem.l, py) / L
                for cp in points for px, py in [position_at(cp, L)])
    add("endpoint-closure", worst <= 1e-9, f"max |pos(L)-(l,0)|/L = {worst:.2e}")

    worst = 0.0
    for cp in points:
        tx, ty = tangent_at(cp, rng.uniform(0.0, L, 32))
        worst = max(worst, float(np.max(np.abs(tx * tx + ty * ty - 1.0))))
    add("unit-speed", worst <= 1e-9, f"max |T^2-1| = {worst:.2e}")

    worst = max(max(abs(curvature_at(cp, 0.0)), abs(curvature_at(cp, L))) * L
                for cp in points)
    add("boundary-curvature", worst <= 1e-9, f"max |kappa(ends)| L = {worst:.2e}")

    worst = max(euler_lagrange_residual(cp, rng.uniform(0.0, L, 12))
                / el_residual_scale(cp) for cp in points)
    add("euler-lagrange", worst <= 1e-7, f"max scaled residual = {worst:.2e}")

    violations = energy_ordering_violations(problem, n_max)
    add("energy-laws", not violations, violations[0] if violations else
        "scaling (n+1)^2 and hat < check hold")

    worst = 0.0
    for family in (Family.HAT, Family.CHECK):
        cp = make_critical_point(problem, family, 0, SignChoice.PLUS)
        wq = bending_energy_by_quadrature(cp)
        worst = max(worst, abs(wq - cp.energy) / cp.energy)
    add("energy-quadrature", worst <= 1e-8, f"max rel diff vs quadrature = {worst:.2e}")

    worst = max(abs(cp.lam ** 2 + 4.0 * cp.b ** 2 - (2.0 * cp.alpha ** 2) ** 2)
                / (2.0 * cp.alpha ** 2) ** 2 for cp in points)
    add("multiplier-identity", worst <= 1e-12,
        f"max rel residual of lambda^2+4b^2=(2 alpha^2)^2 = {worst:.2e}")

    worst = 0.0
    s = rng.uniform(0.0, L, 24)
    for cp in points:
        if cp.sign is not SignChoice.PLUS:
            continue
        mirror = make_critical_point(problem, cp.family, cp.n, SignChoice.MINUS)
        xp, yp = position_at(cp, s)
        xm, ym = position_at(mirror, s)
        worst = max(worst, float(np.max(np.hypot(xp - xm, yp + ym))) / L)
    add("reflection-symmetry", worst <= 1e-12, f"max mirror defect/L = {worst:.2e}")

    worst = 0.0
    s = rng.uniform(L / 2.0, L, 24)
    for family in (Family.HAT, Family.CHECK):
        cp = make_critical_point(problem, family, 0, SignChoice.PLUS)
        x0, y0 = position_at(cp, s)
        x1, y1 = position_at(cp, L - s)
        worst = max(worst, float(np.max(np.hypot(x0 - (problem.l - x1), y0 - y1))) / L)
    add("midpoint-symmetry", worst <= 1e-10, f"max symmetry defect/L = {worst:.2e}")

    worst = 0.0
    for family in (Family.HAT, Family.CHECK):
        for n in range(1, min(n_max, 4) + 1):
            cp0 = make_critical_point(problem, family, 0, SignChoice.PLUS)
            cpn = make_critical_point(problem, family, n, SignChoice.PLUS)
            for shift in range(n + 1):
                s = rng.uniform(0.0, L / (n + 1), 12)
                xn, yn = position_at(cpn, s + shift * L / (n + 1))
                xb, yb = position_at(cp0, (n + 1) * s)
                ex = np.abs(xn - (xb / (n + 1) + shift * problem.l / (n + 1)))
                ey = np.abs(yn - (-1.0) ** shift * yb / (n + 1))
                worst = max(worst, float(np.max(np.hypot(ex, ey))) / L)
    add("tiling", worst <= 1e-10, f"max tiling defect/L = {worst:.2e}")

    bad = None
    for family in (Family.HAT, Family.CHECK):
        for n in range(min(n_max, 6) + 1):
            cp = make_critical_point(problem, family, n, SignChoice.PLUS)
            got = count_interior_inflections(sample_curve(cp, _default_samples(n)))
            if got != n:
                bad = f"{family.value} n={n}: counted {got}"
                break
    add("inflection-count", bad is None, bad or "count equals n for both families")

    bad = None
    for family in (Family.HAT, Family.CHECK):
        for n in range(min(n_max, 6) + 1):
            cp = make_critical_point(problem, family, n, SignChoice.PLUS)
            got = detect_loops(sample_curve(cp, _default_samples(n)))
            want = 0 if family is Family.HAT else n + 1
            if got != want:
                bad = f"{family.value} n={n}: {got} loops, expected {want}"
                break
    add("loop-count", bad is None, bad or "hat loop-free, check has n+1 loops")

    cp = make_critical_point(problem, Family.HAT, 0, SignChoice.PLUS)
    flag = classify_graph_representability(cp)
    boundary = abs(problem.ratio - r_star()) <= 1e-9
    agree = flag == (problem.ratio > r_star()) or boundary
    detail = (f"classifier = {flag}, ratio - R* = {problem.ratio - r_star():+.3e}"
              + (" (boundary case)" if boundary else ""))
    add("graph-representability", agree, detail)

    spectrum = enumerate_spectrum(problem, min(n_max, 10))
    lead = {(cp.family, cp.n) for cp in spectrum[:2]}
    signs = {cp.sign for cp in spectrum[:2]}
    ok = lead == {(Family.HAT, 0)} and signs == {SignChoice.PLUS, SignChoice.MINUS}
    add("global-minimizer", ok,
        "lowest-energy pair is the loop-free n=0 pair" if ok else
        f"unexpected leaders {[(c.family.value, c.n, c.sign.value) for c in spectrum[:2]]}")

    return results
