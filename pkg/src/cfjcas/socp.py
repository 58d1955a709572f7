"""Small dense second-order cone programs solved with a log-barrier method.

A program is

    minimize    c @ q
    subject to  ||A_j q + b_j|| <= f_j @ q + g_j    for every cone j
                q >= 0                               (optional)

The solver is a primal barrier method: an infeasible-start phase 1 finds a
point that maximizes the smallest (normalized) constraint slack, then
centering Newton steps with backtracking follow the central path while the
barrier weight grows by a fixed factor. Problems of interest have tens of
variables and tens of cones, so everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"


@dataclass
class Cone:
    """``||a @ q + b|| <= f @ q + g``."""

    a: np.ndarray
    b: np.ndarray
    f: np.ndarray
    g: float

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.f = np.asarray(self.f, dtype=float).reshape(-1)
        self.g = float(self.g)
        if self.a.shape[0] != self.b.shape[0]:
            raise ValueError(f"cone rows mismatch: a has {self.a.shape[0]}, b has {self.b.shape[0]}")
        if self.a.shape[1] != self.f.shape[0]:
            raise ValueError(f"cone columns mismatch: a has {self.a.shape[1]}, f has {self.f.shape[0]}")

    def violation(self, q) -> float:
        return float(np.linalg.norm(self.a @ q + self.b) - (self.f @ q + self.g))


@dataclass
class SocProgram:
    objective: np.ndarray
    cones: list = field(default_factory=list)
    nonneg: bool = True

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        n = self.objective.shape[0]
        for j, cone in enumerate(self.cones):
            if cone.a.shape[1] != n:
                raise ValueError(f"cone {j} has {cone.a.shape[1]} columns, program has {n} variables")
        if not self.cones and not self.nonneg:
            raise ValueError("program needs at least one cone or the nonnegativity bound")

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]


@dataclass
class SocSolution:
    q: np.ndarray
    objective_value: float
    status: str
    kkt_residual: float
    newton_steps: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class FeasibilityReport:
    cone_violations: np.ndarray
    min_entry: float | None
    worst: float


def feasibility_check(program: SocProgram, q, tol: float = 0.0) -> FeasibilityReport:
    """Worst violation of every constraint at `q` (negative means strictly satisfied)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (program.n_vars,):
        raise ValueError(f"q has shape {q.shape}, expected ({program.n_vars},)")
    viol = np.array([c.violation(q) for c in program.cones])
    worst = viol.max() if viol.size else -np.inf
    min_entry = None
    if program.nonneg:
        min_entry = float(q.min()) if q.size else np.inf
        worst = max(worst, -min_entry)
    return FeasibilityReport(cone_violations=viol, min_entry=min_entry, worst=float(worst))


def dump_program(program: SocProgram) -> str:
    """Human-readable listing, one constraint per line (debugging aid only)."""
    fmt = lambda v: "[" + " ".join(f"{x:.6g}" for x in np.ravel(v)) + "]"
    lines = [f"n_vars {program.n_vars}", f"minimize {fmt(program.objective)}"]
    for j, c in enumerate(program.cones):
        rows = "; ".join(fmt(r) for r in c.a)
        lines.append(f"cone {j}: A=[{rows}] b={fmt(c.b)} f={fmt(c.f)} g={c.g:.6g}")
    if program.nonneg:
        lines.append("q >= 0")
    return "\n".join(lines)


class _Barrier:
    """Log barrier of a set of SOC constraints plus linear inequalities ``G x + h > 0``."""

    def __init__(self, cones, lin_g=None, lin_h=None):
        groups = {}
        for c in cones:
            groups.setdefault(c.a.shape[0], []).append(c)
        self.groups = []
        for cs in groups.values():
            a = np.stack([c.a for c in cs])
            b = np.stack([c.b for c in cs])
            f = np.stack([c.f for c in cs])
            g = np.array([c.g for c in cs])
            hess_d = 2.0 * (np.einsum("ki,kj->kij", f, f) - np.einsum("kri,krj->kij", a, a))
            self.groups.append((a, b, f, g, hess_d))
        self.lin_g = lin_g
        self.lin_h = lin_h
        n_lin = 0 if lin_g is None else lin_g.shape[0]
        self.nu = 2.0 * len(cones) + n_lin

    def _cone_terms(self, x, a, b, f, g):
        u = np.einsum("kri,i->kr", a, x) + b
        s = f @ x + g
        nu = np.linalg.norm(u, axis=1)
        return u, s, (s - nu), (s + nu)

    def in_domain(self, x) -> bool:
        for a, b, f, g, _ in self.groups:
            _, _, lo, _ = self._cone_terms(x, a, b, f, g)
            if np.any(lo <= 0):
                return False
        if self.lin_g is not None and np.any(self.lin_g @ x + self.lin_h <= 0):
            return False
        return True

    def value(self, x) -> float:
        val = 0.0
        for a, b, f, g, _ in self.groups:
            _, _, lo, hi = self._cone_terms(x, a, b, f, g)
            if np.any(lo <= 0):
                return np.inf
            val -= np.sum(np.log(lo) + np.log(hi))
        if self.lin_g is not None:
            lin = self.lin_g @ x + self.lin_h
            if np.any(lin <= 0):
                return np.inf
            val -= np.sum(np.log(lin))
        return val

    def derivatives(self, x):
        n = x.shape[0]
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        for a, b, f, g, hess_d in self.groups:
            u, s, lo, hi = self._cone_terms(x, a, b, f, g)
            d = lo * hi
            grad_d = 2.0 * s[:, None] * f - 2.0 * np.einsum("kri,kr->ki", a, u)
            inv_d = 1.0 / d
            grad -= inv_d @ grad_d
            scaled = grad_d * inv_d[:, None]
            hess += scaled.T @ scaled - np.tensordot(inv_d, hess_d, axes=1)
        if self.lin_g is not None:
            inv_l = 1.0 / (self.lin_g @ x + self.lin_h)
            grad -= self.lin_g.T @ inv_l
            gl = self.lin_g * inv_l[:, None]
            hess += gl.T @ gl
        return grad, hess


def _newton_direction(hess, rhs):
    # symmetric diagonal scaling first: curvature differs by many decades across variables
    d = np.sqrt(np.maximum(np.diag(hess), 1e-300))
    scaled = hess / np.outer(d, d)
    try:
        y = scipy.linalg.cho_solve(scipy.linalg.cho_factor(scaled, check_finite=False), rhs / d,
                                   check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        y = np.linalg.lstsq(scaled + 1e-14 * np.eye(len(d)), rhs / d, rcond=None)[0]
    return y / d


def _center(barrier, c, t, x, max_newton, newton_tol=1e-10):
    """Minimize ``t c @ x + barrier(x)`` from a strictly feasible `x`."""
    steps = 0
    f_x = t * (c @ x) + barrier.value(x)
    for _ in range(max_newton):
        grad_b, hess = barrier.derivatives(x)
        grad = t * c + grad_b
        dx = _newton_direction(hess, -grad)
        dec = -(grad @ dx)
        steps += 1
        if dec / 2 <= newton_tol:
            break
        step = 1.0
        while not barrier.in_domain(x + step * dx):
            step *= 0.5
            if step < 1e-16:
                return x, steps
        while True:
            x_new = x + step * dx
            f_new = t * (c @ x_new) + barrier.value(x_new)
            if f_new <= f_x - 0.25 * step * dec:
                break
            step *= 0.5
            if step < 1e-12:
                return x, steps
        x, f_x = x_new, f_new
    return x, steps


def _normalized(cones):
    out = []
    for c in cones:
        scale = max(np.abs(c.a).max(initial=0.0), np.abs(c.b).max(initial=0.0),
                    np.abs(c.f).max(initial=0.0), abs(c.g))
        scale = 1.0 if scale == 0 else scale
        out.append(Cone(c.a / scale, c.b / scale, c.f / scale, c.g / scale))
    return out


def find_interior(program: SocProgram, x0=None, tol: float = 1e-6, max_iter: int = 60,
                  max_newton: int = 50):
    """Phase 1: approximately maximize the smallest normalized slack.

    Returns ``(x, slack)``; `x` is strictly feasible when ``slack > 0``.
    """
    n = program.n_vars
    cones = _normalized(program.cones)
    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    radius = 1e4 * (1.0 + np.abs(x).max(initial=0.0))

    aug = [Cone(np.hstack([c.a, np.zeros((c.a.shape[0], 1))]), c.b, np.append(c.f, 1.0), c.g)
           for c in cones]
    # keeps the phase-1 set bounded when the feasible set is not
    ball_a = np.hstack([np.eye(n), np.zeros((n, 1))])
    aug.append(Cone(ball_a, -x, np.zeros(n + 1), radius))
    rows = [np.append(np.zeros(n), 1.0)]
    h = [1.0]
    if program.nonneg:
        rows.extend(np.append(e, 1.0) for e in np.eye(n))
        h.extend([0.0] * n)
    lin_g = np.array(rows)
    lin_h = np.array(h)

    viol = max((c.violation(x) for c in cones), default=-np.inf)
    if program.nonneg and n:
        viol = max(viol, -x.min())
    s = max(viol, -0.5) + 1.0
    z = np.append(x, s)
    barrier = _Barrier(aug, lin_g, lin_h)
    c = np.zeros(n + 1)
    c[-1] = 1.0
    t = 1.0
    for _ in range(max_iter):
        z, _ = _center(barrier, c, t, z, max_newton)
        if barrier.nu / t <= tol or z[-1] <= -1.0 + 1e-6:
            break
        t *= 10.0
    return z[:n], float(-z[-1])


def solve(program: SocProgram, tol: float = 1e-8, max_iter: int = 200, max_newton: int = 50,
          x0=None, mu: float = 10.0) -> SocSolution:
    """Solve `program` to relative duality gap `tol`.

    `x0` is an optional starting hint; if it is strictly feasible phase 1 is
    skipped.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = program.n_vars
    cones = _normalized(program.cones)
    lin_g = np.eye(n) if program.nonneg else None
    lin_h = np.zeros(n) if program.nonneg else None
    barrier = _Barrier(cones, lin_g, lin_h)

    x = None
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (n,):
            raise ValueError(f"x0 has shape {x0.shape}, expected ({n},)")
        if barrier.in_domain(x0):
            x = x0.copy()
    if x is None:
        x, slack = find_interior(program, x0)
        if slack <= 0 or not barrier.in_domain(x):
            obj = float(program.objective @ x)
            return SocSolution(x, obj, INFEASIBLE, np.inf)

    c_norm = np.linalg.norm(program.objective)
    c = program.objective / c_norm if c_norm > 0 else np.zeros(n)
    steps = 0
    if c_norm == 0:
        x, k = _center(barrier, c, 1.0, x, max_newton)
        return SocSolution(x, 0.0, OPTIMAL, 0.0, k)

    t = 1.0
    status = MAX_ITER
    gap = np.inf
    for _ in range(max_iter):
        x, k = _center(barrier, c, t, x, max_newton)
        steps += k
        gap = barrier.nu / t / max(1.0, abs(c @ x))
        if gap <= tol:
            status = OPTIMAL
            break
        t *= mu
    return SocSolution(x, float(program.objective @ x), status, float(gap), steps)
