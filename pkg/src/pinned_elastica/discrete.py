"""Independent discrete check of the global minimizer.

Minimizes the turning-angle bending energy over inextensible polylines with
pinned endpoints.  The public surface is vertex-based (energy, exact
gradient, alternating-projection feasibility restoration, CSV I/O); the
minimizer itself descends in edge-heading space, where the uniform segment
lengths hold identically and only the two-component endpoint closure needs a
per-step Newton projection.  A fixed tridiagonal preconditioner (the heading
Laplacian of the energy) keeps the iteration count mesh-independent; plain
steepest descent needs O(m^3) iterations on this energy and is useless
beyond toy meshes.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded
from scipy.spatial import cKDTree

from .elastica import CriticalPoint, SignChoice, make_critical_point, sample_curve
from .modulus import Family, PinnedProblem

_ARMIJO_C = 1e-4
_BACKTRACK = 0.5
_MAX_BACKTRACKS = 60


class DegenerateSegmentError(ValueError):
    """A polyline segment collapsed below resolvable length."""


class ProjectionError(RuntimeError):
    """Constraint projection failed (input too far from feasibility)."""


@dataclass(frozen=True)
class DiscreteCurve:
    """Inextensible polyline: m vertices, uniform segment length."""

    vertices: np.ndarray
    segment_length: float

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise ValueError("vertices must be an (m, 2) array with m >= 2")
        object.__setattr__(self, "vertices", v)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    def edge_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self.vertices, axis=0).T)

    def constraint_violation(self, problem: PinnedProblem) -> float:
        """Max deviation from uniform edges and pinned endpoints."""
        v = self.vertices
        edge_err = float(np.max(np.abs(self.edge_lengths() - self.segment_length)))
        end_err = max(math.hypot(v[0, 0], v[0, 1]),
                      math.hypot(v[-1, 0] - problem.l, v[-1, 1]))
        return max(edge_err, end_err)


@dataclass(frozen=True)
class DescentReport:
    iterations: int
    final_energy: float
    max_constraint_violation: float
    hausdorff_to_reference: float
    converged: bool
    energy_trace: np.ndarray


def _turning_data(curve: DiscreteCurve):
    e = np.diff(curve.vertices, axis=0)
    lengths = np.hypot(e[:, 0], e[:, 1])
    if np.any(lengths < 1e-12 * curve.segment_length):
        raise DegenerateSegmentError("polyline has a collapsed segment")
    a, b = e[:-1], e[1:]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = np.einsum("ij,ij->i", a, b)
    return e, cross, dot


def discrete_energy(curve: DiscreteCurve) -> float:
    """Sum over interior vertices of (turning angle)^2 / segment length."""
    if curve.num_vertices < 3:
        raise ValueError("discrete energy needs at least 3 vertices")
    _, cross, dot = _turning_data(curve)
    theta = np.arctan2(cross, dot)
    return float(np.sum(theta * theta) / curve.segment_length)


def energy_gradient(curve: DiscreteCurve) -> np.ndarray:
    """Exact gradient of discrete_energy with respect to vertex positions."""
    if curve.num_vertices < 3:
        raise ValueError("discrete energy needs at least 3 vertices")
    e, cross, dot = _turning_data(curve)
    a, b = e[:-1], e[1:]
    theta = np.arctan2(cross, dot)
    weight = 2.0 * theta / curve.segment_length
    denom = cross * cross + dot * dot
    dth_da = (dot[:, None] * np.column_stack([b[:, 1], -b[:, 0]])
              - cross[:, None] * b) / denom[:, None]
    dth_db = (dot[:, None] * np.column_stack([-a[:, 1], a[:, 0]])
              - cross[:, None] * a) / denom[:, None]
    ga = weight[:, None] * dth_da
    gb = weight[:, None] * dth_db
    m = curve.num_vertices
    grad = np.zeros((m, 2))
    grad[0:m - 2] -= ga
    grad[1:m - 1] += ga - gb
    grad[2:m] += gb
    return grad


def _reach_double_sweep(v: np.ndarray, h: float, start, end):
    """One forward + backward edge-renormalization pass (in place)."""
    m = len(v)
    v[0] = start
    for i in range(m - 1):
        ex, ey = v[i + 1, 0] - v[i, 0], v[i + 1, 1] - v[i, 1]
        norm = math.hypot(ex, ey)
        if norm < 1e-14 * h:
            raise ProjectionError("projection hit a collapsed segment")
        f = h / norm
        v[i + 1, 0] = v[i, 0] + ex * f
        v[i + 1, 1] = v[i, 1] + ey * f
    v[-1] = end
    for i in range(m - 2, -1, -1):
        ex, ey = v[i, 0] - v[i + 1, 0], v[i, 1] - v[i + 1, 1]
        norm = math.hypot(ex, ey)
        if norm < 1e-14 * h:
            raise ProjectionError("projection hit a collapsed segment")
        f = h / norm
        v[i, 0] = v[i + 1, 0] + ex * f
        v[i, 1] = v[i + 1, 1] + ey * f


def project_constraints(curve: DiscreteCurve, problem: PinnedProblem,
                        tol: float = 1e-12,
                        max_rounds: int = 12) -> DiscreteCurve:
    """Restore uniform segment lengths and pinned endpoints.

    A reach pass (renormalize edges forward from the pinned start, then
    backward from the pinned end) makes the edge lengths exact; the leftover
    endpoint drift is then removed by a Newton projection of the two-component
    closure in heading space, which keeps the edges exact and perturbs the
    shape only to first order.  Reach alone converges too slowly on long
    chains to reach the 1e-10 L feasibility target.
    """
    h = curve.segment_length
    L = problem.L
    start = np.array([0.0, 0.0])
    end = np.array([problem.l, 0.0])
    v = curve.vertices.copy()
    for _ in range(max_rounds):
        _reach_double_sweep(v, h, start, end)
        e = np.diff(v, axis=0)
        om = np.unwrap(np.arctan2(e[:, 1], e[:, 0]))
        om, ok = _project_closure(om, h, problem.l, 0.1 * tol * L)
        if ok:
            result = DiscreteCurve(_vertices_from_headings(om, h), h)
            if result.constraint_violation(problem) <= tol * L:
                return result
            v = result.vertices.copy()
    raise ProjectionError("projection did not converge (input too infeasible)")


# --------------------------------------------------------------------------
# seeds

def _solve_polygon_halfangle(ratio: float, m: int) -> float:
    """psi with sin((m-1) psi) / ((m-1) sin psi) = ratio (inscribed polygon)."""
    lo, hi = 1e-15, math.pi / (m - 1)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.sin((m - 1) * mid) / ((m - 1) * math.sin(mid)) > ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _arc_headings(problem: PinnedProblem, m: int, up: bool) -> np.ndarray:
    psi = _solve_polygon_halfangle(problem.ratio, m)
    theta_total = (m - 1) * psi
    i = np.arange(m - 1)
    headings = theta_total - (2 * i + 1) * psi
    return headings if up else -headings


def _vertices_from_headings(headings: np.ndarray, h: float) -> np.ndarray:
    steps = h * np.column_stack([np.cos(headings), np.sin(headings)])
    return np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)])


def _seed_rng(spec: str) -> np.random.Generator:
    token = spec.split(":", 1)[1]
    try:
        key = int(token)
    except ValueError:
        key = zlib.crc32(token.encode())
    return np.random.default_rng(key)


def make_seed(problem: PinnedProblem, m: int, spec: str) -> DiscreteCurve:
    """Feasible starting polyline: 'arc-up', 'arc-down' or 'random:<seed>'."""
    h = problem.L / (m - 1)
    if spec in ("arc-up", "arc-down"):
        headings = _arc_headings(problem, m, up=(spec == "arc-up"))
        return DiscreteCurve(_vertices_from_headings(headings, h), h)
    if spec.startswith("random:"):
        rng = _seed_rng(spec)
        base = _arc_headings(problem, m, up=bool(rng.integers(0, 2)))
        amp = 0.4
        for _ in range(8):
            modes = rng.normal(0.0, 1.0, 5)
            i = np.arange(m - 1) + 0.5
            bump = sum(amp * modes[k] / (k + 1)
                       * np.sin((k + 1) * math.pi * i / (m - 1))
                       for k in range(5))
            headings = base + bump
            om, ok = _project_closure(headings, h, problem.l, 1e-12 * problem.L)
            if ok:
                return DiscreteCurve(_vertices_from_headings(om, h), h)
            amp *= 0.5
        raise ProjectionError("random seed projection failed")
    raise ValueError(f"unknown seed spec {spec!r}")


# --------------------------------------------------------------------------
# heading-space machinery

def _closure(headings: np.ndarray, h: float, l: float) -> np.ndarray:
    return np.array([h * np.sum(np.cos(headings)) - l,
                     h * np.sum(np.sin(headings))])


def _project_closure(headings, h, l, tol, max_iter=50):
    """Newton projection of the 2-component endpoint closure."""
    om = np.asarray(headings, dtype=float).copy()
    for _ in range(max_iter):
        c = _closure(om, h, l)
        if math.hypot(c[0], c[1]) <= tol:
            return om, True
        jac = np.vstack([-h * np.sin(om), h * np.cos(om)])
        gram = jac @ jac.T
        try:
            mu = np.linalg.solve(gram, c)
        except np.linalg.LinAlgError:
            return om, False
        om = om - jac.T @ mu
    c = _closure(om, h, l)
    return om, math.hypot(c[0], c[1]) <= tol


def _tangential(vec, headings, h):
    jac = np.vstack([-h * np.sin(headings), h * np.cos(headings)])
    gram = jac @ jac.T
    mu = np.linalg.solve(gram, jac @ vec)
    return vec - jac.T @ mu


def _heading_energy(headings, h):
    theta = np.diff(headings)
    return float(np.sum(theta * theta) / h)


def _heading_gradient(headings, h):
    theta = np.diff(headings)
    g = np.zeros_like(headings)
    g[1:] += 2.0 * theta / h
    g[:-1] -= 2.0 * theta / h
    return g


def _heading_preconditioner(n_edges: int, h: float) -> np.ndarray:
    """Banded (upper) form of the heading-space energy Hessian + rotation reg."""
    main = np.full(n_edges, 2.0)
    main[0] = main[-1] = 1.0
    sigma = (math.pi / (2 * n_edges)) ** 2
    ab = np.zeros((2, n_edges))
    ab[0, 1:] = -1.0
    ab[1, :] = main + sigma
    return ab * (2.0 / h)


def hausdorff_distance(points_a: np.ndarray, points_b: np.ndarray) -> float:
    """Symmetric point-set Hausdorff distance."""
    d_ab = cKDTree(points_b).query(points_a)[0].max()
    d_ba = cKDTree(points_a).query(points_b)[0].max()
    return float(max(d_ab, d_ba))


def _reference_distance(curve: DiscreteCurve, problem: PinnedProblem) -> float:
    """Hausdorff distance to the nearer of the two closed-form minimizers."""
    dense = 4 * curve.num_vertices
    best = math.inf
    for sign in (SignChoice.PLUS, SignChoice.MINUS):
        cp = make_critical_point(problem, Family.HAT, 0, sign)
        ref = sample_curve(cp, dense)
        pts = np.column_stack([ref.x, ref.y])
        best = min(best, hausdorff_distance(curve.vertices, pts))
    return best


def minimize(problem: PinnedProblem, m: int, init="arc-up",
             max_iterations: int = 2000, gradient_tol: float = 1e-8):
    """Descend the discrete bending energy from a feasible start.

    Returns (DiscreteCurve, DescentReport).  Accepted steps are monotone by
    the Armijo test; convergence means the constraint-tangential gradient
    dropped below gradient_tol times the full gradient norm (or the line
    search bottomed out at an already-stationary point).
    """
    if m < 16:
        raise ValueError(f"m >= 16 required, got {m}")
    h = problem.L / (m - 1)
    if isinstance(init, DiscreteCurve):
        if init.num_vertices != m:
            raise ValueError("init vertex count disagrees with m")
        feasible = project_constraints(init, problem)
        if hausdorff_distance(feasible.vertices, init.vertices) > 0.2 * problem.L:
            raise ProjectionError("init too far from the constraint set")
        e = np.diff(feasible.vertices, axis=0)
        om = np.unwrap(np.arctan2(e[:, 1], e[:, 0]))
    else:
        om = np.unwrap(np.arctan2(*np.diff(make_seed(problem, m, init).vertices,
                                           axis=0).T[::-1]))
    om, ok = _project_closure(om, h, problem.l, 1e-13 * problem.L)
    if not ok:
        raise ProjectionError("initial closure projection failed")

    precond = _heading_preconditioner(m - 1, h)
    energy = _heading_energy(om, h)
    trace = [energy]
    t_prev = 1.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        grad = _heading_gradient(om, h)
        grad_t = _tangential(grad, om, h)
        gnorm = float(np.linalg.norm(grad))
        gtnorm = float(np.linalg.norm(grad_t))
        if gtnorm <= gradient_tol * max(gnorm, 1e-30):
            converged = True
            break
        direction = solveh_banded(precond, grad_t, lower=False)
        direction = _tangential(direction, om, h)
        slope = -float(np.dot(grad_t, direction))
        if slope >= 0.0:  # numerically not a descent direction: stationary
            converged = gtnorm <= 1e-4 * max(gnorm, 1e-30)
            break
        t = min(1.0, 2.0 * t_prev)
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            om_trial, ok = _project_closure(om - t * direction, h, problem.l,
                                            1e-13 * problem.L)
            if ok:
                e_trial = _heading_energy(om_trial, h)
                if e_trial <= energy + _ARMIJO_C * t * slope:
                    accepted = True
                    break
            t *= _BACKTRACK
        if not accepted:
            # line search exhausted: stationary up to discretization roundoff
            converged = gtnorm <= 1e-4 * max(gnorm, 1e-30)
            break
        om, energy = om_trial, e_trial
        trace.append(energy)
        t_prev = t

    curve = DiscreteCurve(_vertices_from_headings(om, h), h)
    report = DescentReport(
        iterations=iterations,
        final_energy=discrete_energy(curve),
        max_constraint_violation=curve.constraint_violation(problem),
        hausdorff_to_reference=_reference_distance(curve, problem),
        converged=converged,
        energy_trace=np.asarray(trace),
    )
    return curve, report


def classify_by_energy(energy: float, problem: PinnedProblem,
                       n_scan: int = 6, rel_tol: float = 0.03):
    """Nearest critical-point energy within rel_tol, or None.

    Identifies which member of the spectrum a stalled descent found.
    """
    best = None
    for family in (Family.HAT, Family.CHECK):
        for n in range(n_scan + 1):
            cp = make_critical_point(problem, family, n, SignChoice.PLUS)
            rel = abs(energy - cp.energy) / cp.energy
            if rel <= rel_tol and (best is None or rel < best[2]):
                best = (family, n, rel)
    return best


# --------------------------------------------------------------------------
# CSV exchange format: header 'index,x,y'

def write_polyline_csv(path, curve: DiscreteCurve):
    lines = ["index,x,y"]
    for i, (x, y) in enumerate(curve.vertices):
        lines.append(f"{i},{x:.17g},{y:.17g}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_polyline_csv(path, segment_length: float = None) -> DiscreteCurve:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "index,x,y":
            raise ValueError(f"unexpected polyline header {header!r}")
        for line in fh:
            if line.strip():
                _, x, y = line.split(",")
                rows.append((float(x), float(y)))
    v = np.asarray(rows)
    if segment_length is None:
        segment_length = float(np.mean(np.hypot(*np.diff(v, axis=0).T)))
    return DiscreteCurve(v, segment_length)
