"""Linear and convex polynomial programs with multiplier recovery.

The LP path wraps scipy's HiGHS backend and converts its marginals to the
sign convention used across this package: stationarity reads

    c + A^T mu + E^T lam = 0,    mu >= 0.

The NLP path is a logarithmic-barrier interior point method for

    min f(x)  s.t.  A x <= b,  E x = d,  g_k(x) <= r_k  (convex polynomial)

with a presolve that makes barrier iterations well posed on problems posed
over lower-dimensional sets: negated row pairs and rows that are tight on
the whole feasible set are absorbed into the equality system, equalities
are eliminated through a null-space parameterization, and a max-slack
phase-1 locates a strictly feasible start (falling back to a tiny
documented relaxation when the nonlinear rows admit no Slater point).  The
presolve result can be reused across solves that share the constraint
system and differ only in the objective.  Multipliers come from the final
barrier stage and are refined by a sign-constrained LP when the quick
recovery leaves a residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .game import Game, IndependentConvex, Polynomial, SharedPolytope

TAU_KKT = 1e-8

# barrier parameter schedule: t <- t / BARRIER_REDUCTION each stage
BARRIER_REDUCTION = 0.05
MAX_NEWTON_PER_STAGE = 200

# initial barrier parameter when restarting near a previous optimum; skips
# the centering stages that a cold start needs
WARM_T0 = 64.0

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITERATIONS = "max_iterations"


class SolverError(Exception):
    pass


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None = None
    value: float | None = None
    ineq_multipliers: np.ndarray | None = None
    eq_multipliers: np.ndarray | None = None


def lp_solve(c, A=None, b=None, E=None, d=None, bounds=None) -> LpResult:
    """Solve min c.x s.t. A x <= b, E x = d; variables free by default."""
    if bounds is None:
        bounds = (None, None)
    res = linprog(c, A_ub=A, b_ub=b, A_eq=E, b_eq=d, bounds=bounds, method="highs")
    if res.status == 2:
        return LpResult(INFEASIBLE)
    if res.status == 3:
        return LpResult(UNBOUNDED)
    if res.status != 0:
        raise SolverError(f"LP solver failure: {res.message}")
    mu = -res.ineqlin.marginals if A is not None else np.zeros(0)
    lam = -res.eqlin.marginals if E is not None else np.zeros(0)
    return LpResult(OPTIMAL, np.asarray(res.x), float(res.fun), mu, lam)


@dataclass
class NlpProblem:
    """min objective s.t. A x <= b, E x = d, poly_k(x) <= rhs_k."""

    nvars: int
    objective_poly: Polynomial | None = None
    objective_lin: np.ndarray | None = None
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    E: np.ndarray | None = None
    d: np.ndarray | None = None
    convex: list = field(default_factory=list)


@dataclass
class NlpSolution:
    status: str
    x: np.ndarray | None = None
    value: float | None = None
    ineq_multipliers: np.ndarray | None = None  # A rows, then convex rows
    eq_multipliers: np.ndarray | None = None
    kkt_residual: float | None = None
    comp_residual: float | None = None
    relaxation: float = 0.0


class _Objective:
    """Objective restricted to x = x0 + N u."""

    def __init__(self, problem, x0, N):
        self.poly = problem.objective_poly
        self.lin = problem.objective_lin
        self.x0 = x0
        self.N = N

    def full_value(self, x):
        val = 0.0
        if self.poly is not None:
            val += self.poly(x)
        if self.lin is not None:
            val += float(self.lin @ x)
        return val

    def value(self, u):
        return self.full_value(self.x0 + self.N @ u)

    def grad_full(self, x):
        g = np.zeros(x.shape[0])
        if self.poly is not None:
            g += self.poly.gradient(x)
        if self.lin is not None:
            g += self.lin
        return g

    def grad(self, u):
        return self.N.T @ self.grad_full(self.x0 + self.N @ u)

    def hess(self, u):
        if self.poly is None:
            return np.zeros((self.N.shape[1], self.N.shape[1]))
        H = self.poly.hessian(self.x0 + self.N @ u)
        return self.N.T @ H @ self.N


class _ConvexRow:
    """One convex constraint poly(x) <= rhs in reduced coordinates."""

    def __init__(self, poly, rhs, x0, N):
        self.poly = poly
        self.rhs = float(rhs)
        self.x0 = x0
        self.N = N

    def value(self, u):
        return self.poly(self.x0 + self.N @ u) - self.rhs

    def grad(self, u):
        return self.N.T @ self.poly.gradient(self.x0 + self.N @ u)

    def hess(self, u):
        return self.N.T @ self.poly.hessian(self.x0 + self.N @ u) @ self.N


# rank cutoff for equality stacks; rows are unit-normalized, so singular
# values below this are coordinate noise, and letting lstsq keep them turns
# a 1e-10 inconsistency into an O(1) shift of the particular solution
_EQ_RCOND = 1e-8


def _nullspace(E, tol=_EQ_RCOND):
    if E.shape[0] == 0:
        return np.eye(E.shape[1])
    _, sv, vt = np.linalg.svd(E)
    rank = int(np.sum(sv > tol * max(1.0, sv[0] if sv.size else 1.0)))
    return vt[rank:].T


def _reduce_equalities(E, d, nvars):
    """Particular solution and null basis for E x = d; None if inconsistent."""
    if E.shape[0] == 0:
        return np.zeros(nvars), np.eye(nvars)
    x0, *_ = np.linalg.lstsq(E, d, rcond=_EQ_RCOND)
    if np.max(np.abs(E @ x0 - d)) > 1e-7:
        return None, None
    return x0, _nullspace(E)


def _chebyshev_direction(A, b):
    """(center, radius) of the largest ball in {u : A u <= b}; rows scaled."""
    n = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    norms[norms == 0] = 1.0
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.hstack([A, norms[:, None]]), b_ub=b,
                  bounds=[(None, None)] * n + [(0, 1e6)], method="highs")
    if res.status != 0:
        return None, -np.inf
    return res.x[:-1], float(res.x[-1])


def _quadratic_cap(g0, d1, d2):
    """Smallest step at which g0 + a*d1 + a^2*d2/2 crosses zero, if any.

    Models a constraint value along a search direction; g0 < 0 on entry.
    For quadratic rows the model is exact, otherwise it is only a guess
    and the caller must still reject steps that leave the domain.
    """
    a, bq, c = 0.5 * d2, d1, g0
    if abs(a) < 1e-14:
        if bq <= 1e-14:
            return None
        return -c / bq
    disc = bq * bq - 4 * a * c
    if disc < 0:
        return None
    sq = np.sqrt(disc)
    roots = [r for r in ((-bq - sq) / (2 * a), (-bq + sq) / (2 * a)) if r > 0]
    return min(roots) if roots else None


def _newton_minimize(fval, fgrad, fhess, u0, A, b, crows, tol=1e-11,
                     max_iter=MAX_NEWTON_PER_STAGE):
    """Damped Newton on a barrier function from a strictly feasible start.

    The step length starts at the fraction-to-boundary cap computed from
    the linear slacks, so the line search almost never leaves the domain.
    """
    u = u0.copy()
    val = fval(u)
    for _ in range(max_iter):
        s = b - A @ u if A.shape[0] else np.zeros(0)
        g = fgrad(u)
        H = fhess(u)
        reg = 0.0
        while True:
            try:
                Lc = np.linalg.cholesky(H + reg * np.eye(H.shape[0]))
                break
            except np.linalg.LinAlgError:
                scale = max(1.0, float(np.abs(H).max()))
                reg = max(1e-10 * scale, reg * 10 if reg else 1e-10 * scale)
        step = -np.linalg.solve(Lc.T, np.linalg.solve(Lc, g))
        dec = -float(g @ step)
        if dec <= 2 * tol:
            break
        if A.shape[0]:
            As = A @ step
            pos = As > 1e-300
            cap = float(np.min(s[pos] / As[pos])) if pos.any() else np.inf
            alpha = min(1.0, 0.995 * cap)
        else:
            As = np.zeros(0)
            alpha = 1.0
        for row in crows:
            cap = _quadratic_cap(float(row.value(u)),
                                 float(row.grad(u) @ step),
                                 float(step @ row.hess(u) @ step))
            if cap is not None:
                alpha = min(alpha, 0.995 * cap)
        accepted = False
        for _ in range(60):
            if alpha <= 0:
                break
            if As.size and np.min(s - alpha * As) <= 0:
                alpha *= 0.5
                continue
            cand = u + alpha * step
            if all(row.value(cand) < 0 for row in crows):
                cval = fval(cand)
                if cval <= val - 1e-4 * alpha * dec:
                    u, val = cand, cval
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break
    return u


def _barrier_stagewise(obj_val, obj_grad, obj_hess, lin_rows, convex_rows, u0,
                       n_con, tol, t0=1.0):
    """Minimize obj + barrier over the strict region, central-path style."""
    A, b = lin_rows

    def slacks(u):
        s = b - A @ u if A.shape[0] else np.zeros(0)
        gs = np.array([-row.value(u) for row in convex_rows])
        return s, gs

    t = t0
    u = u0.copy()
    while True:
        def val(uu, t=t):
            s, gs = slacks(uu)
            return t * obj_val(uu) - float(np.sum(np.log(s))) - float(np.sum(np.log(gs)))

        def grad(uu, t=t):
            s, gs = slacks(uu)
            g = t * obj_grad(uu)
            if A.shape[0]:
                g += A.T @ (1.0 / s)
            for row, gk in zip(convex_rows, gs):
                g += row.grad(uu) / gk
            return g

        def hess(uu, t=t):
            s, gs = slacks(uu)
            H = t * obj_hess(uu)
            if A.shape[0]:
                w = 1.0 / (s * s)
                H = H + (A.T * w) @ A
            for row, gk in zip(convex_rows, gs):
                gr = row.grad(uu)
                H = H + np.outer(gr, gr) / (gk * gk) + row.hess(uu) / gk
            return H

        # early stages only warm-start the next one; solve them loosely
        stage_tol = max(1e-11, 1e-3 * n_con / t)
        u = _newton_minimize(val, grad, hess, u, A, b, convex_rows,
                             tol=stage_tol)
        if n_con == 0 or n_con / t <= 0.5 * tol:
            return u, t
        t = t / BARRIER_REDUCTION


def _phase_one(Ar, br, crows, u_c, worst):
    """Minimize the max nonlinear violation; returns (point, optimal slack)."""
    m = Ar.shape[1]

    def val(w):
        return w[-1]

    def grad(w):
        g = np.zeros(m + 1)
        g[-1] = 1.0
        return g

    def hess(w):
        return np.zeros((m + 1, m + 1))

    A_ext = np.hstack([Ar, np.zeros((Ar.shape[0], 1))]) if Ar.shape[0] else np.zeros((0, m + 1))

    class _Shifted:
        def __init__(self, row):
            self.row = row

        def value(self, w):
            return self.row.value(w[:-1]) - w[-1]

        def grad(self, w):
            return np.append(self.row.grad(w[:-1]), -1.0)

        def hess(self, w):
            H = np.zeros((m + 1, m + 1))
            H[:m, :m] = self.row.hess(w[:-1])
            return H

    shifted = [_Shifted(r) for r in crows]
    w0 = np.append(u_c, worst + 1.0)
    # lower bound on the slack variable keeps the problem bounded
    A_ext = np.vstack([A_ext, np.append(np.zeros(m), -1.0)])
    b_ext = np.append(br, 1.0)
    w, _ = _barrier_stagewise(val, grad, hess, (A_ext, b_ext), shifted, w0,
                              A_ext.shape[0] + len(shifted), 1e-9)
    return w[:-1], float(w[-1])


def _kkt_newton(obj, Ar, br, crows, act, act_c, u0, lam0):
    """Newton on the optimality system with a fixed active set.

    Treats the selected rows as equalities and drives the stationarity and
    feasibility residuals to machine precision with full steps.  Returns
    (u, lam, residual) for the best iterate, None when the iteration never
    produces a usable system.
    """
    m = u0.shape[0]
    ka = len(act) + len(act_c)
    u, lam = u0.copy(), lam0.copy()
    best = None
    for _ in range(40):
        parts = []
        if act:
            parts.append(Ar[act])
        for j in act_c:
            parts.append(crows[j].grad(u)[None, :])
        J = np.vstack(parts) if parts else np.zeros((0, m))
        r_d = obj.grad(u) + (J.T @ lam if ka else np.zeros(m))
        r_p = np.concatenate([
            Ar[act] @ u - br[act] if act else np.zeros(0),
            np.array([crows[j].value(u) for j in act_c]),
        ])
        res = max(float(np.abs(r_d).max()) if m else 0.0,
                  float(np.abs(r_p).max()) if ka else 0.0)
        if best is None or res < best[0]:
            best = (res, u.copy(), lam.copy())
        if res < 1e-13:
            break
        H = obj.hess(u)
        for pos, j in enumerate(act_c):
            H = H + max(lam[len(act) + pos], 0.0) * crows[j].hess(u)
        K = np.zeros((m + ka, m + ka))
        K[:m, :m] = H
        if ka:
            K[:m, m:] = J.T
            K[m:, :m] = J
        rhs = -np.concatenate([r_d, r_p])
        try:
            step = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(K, rhs, rcond=None)
        if not np.all(np.isfinite(step)):
            break
        u = u + step[:m]
        lam = lam + step[m:]
    return best


def _polish(obj, Ar, br, crows, u0, t):
    """Active-set refinement of a barrier iterate.

    The barrier magnitudes split the rows into active and inactive; the
    active ones are then pinned and the reduced optimality system solved
    exactly.  A wrong split shows up as a negative multiplier or a violated
    inactive row, in which case the split is adjusted and retried.  Returns
    (u, mu_lin, mu_crow) only for a verified KKT point.
    """
    if not np.isfinite(t):
        return None
    s = br - Ar @ u0 if Ar.shape[0] else np.zeros(0)
    gs = np.array([-row.value(u0) for row in crows]) if crows else np.zeros(0)
    if (s.size and s.min() <= 0) or (gs.size and gs.min() <= 0):
        return None
    thr = 1.0 / np.sqrt(t)
    act = list(np.nonzero(s <= thr)[0])
    act_c = list(np.nonzero(gs <= thr)[0])
    scale = 1.0 + float(np.abs(obj.grad(u0)).max()) if u0.size else 1.0
    for _ in range(4):
        lam0 = np.concatenate([
            1.0 / (t * np.maximum(s[act], 1e-300)) if act else np.zeros(0),
            1.0 / (t * np.maximum(gs[act_c], 1e-300)) if act_c else np.zeros(0),
        ])
        out = _kkt_newton(obj, Ar, br, crows, act, act_c, u0, lam0)
        if out is None:
            return None
        res, u, lam = out
        if res > 1e-9 * scale:
            return None
        s_new = br - Ar @ u if Ar.shape[0] else np.zeros(0)
        gs_new = np.array([-row.value(u) for row in crows]) if crows else np.zeros(0)
        act_set, act_c_set = set(act), set(act_c)
        bad = [i for i in range(s_new.size)
               if i not in act_set and s_new[i] < -1e-9]
        bad_c = [j for j in range(gs_new.size)
                 if j not in act_c_set and gs_new[j] < -1e-9]
        neg = [k for k in range(lam.size) if lam[k] < -1e-8]
        if not bad and not bad_c and not neg:
            mu_lin = np.zeros(Ar.shape[0])
            mu_crow = np.zeros(len(crows))
            for pos, i in enumerate(act):
                mu_lin[i] = max(float(lam[pos]), 0.0)
            for pos, j in enumerate(act_c):
                mu_crow[j] = max(float(lam[len(act) + pos]), 0.0)
            return u, mu_lin, mu_crow
        for k in neg:
            if k < len(act):
                act_set.discard(act[k])
            else:
                act_c_set.discard(act_c[k - len(act)])
        act = sorted(act_set | set(bad))
        act_c = sorted(act_c_set | set(bad_c))
    return None


def _scan_row_pairs(A, b):
    """Indices (i, j) of exact negated row pairs a.x <= b, -a.x <= -b."""
    pairs, used = [], set()
    index = {}
    for r in range(A.shape[0]):
        key = tuple(np.round(A[r], 10)) + (round(float(b[r]), 10),)
        index.setdefault(key, []).append(r)
    for r in range(A.shape[0]):
        if r in used:
            continue
        neg = tuple(np.round(-A[r], 10)) + (round(-float(b[r]), 10),)
        for j in index.get(neg, []):
            if j != r and j not in used:
                pairs.append((r, j))
                used.add(r)
                used.add(j)
                break
    return pairs


@dataclass
class PresolvedSystem:
    """Constraint-side preprocessing shared by solves with equal systems."""

    n: int
    A: np.ndarray
    b: np.ndarray
    E_user: np.ndarray
    convex: list
    x0: np.ndarray
    N: np.ndarray
    Ar: np.ndarray
    br: np.ndarray
    lin_map: list
    implicit_single: list
    implicit_pairs: list
    crows: list
    u_start: np.ndarray
    relaxation: float
    last_u: np.ndarray | None = None


def _least_infeasibility(Al, bl):
    """Smallest s >= 0 with {u : Al u <= bl + s} nonempty; None on LP failure."""
    mrow, ncol = Al.shape
    c = np.zeros(ncol + 1)
    c[-1] = 1.0
    Ax = np.hstack([Al, -np.ones((mrow, 1))])
    res = linprog(c, A_ub=Ax, b_ub=bl,
                  bounds=[(None, None)] * ncol + [(0, None)], method="highs")
    if res.status != 0:
        return None
    return float(res.x[-1])


def presolve(problem: NlpProblem):
    """Feasibility preprocessing; returns PresolvedSystem, None if infeasible.

    The objective fields of `problem` are ignored, so the result may be
    passed to nlp_solve for any objective over the same constraint system.
    """
    n = problem.nvars
    A = np.asarray(problem.A, dtype=float).reshape(-1, n) if problem.A is not None else np.zeros((0, n))
    b = np.asarray(problem.b, dtype=float).reshape(-1) if problem.b is not None else np.zeros(0)
    E_user = np.asarray(problem.E, dtype=float).reshape(-1, n) if problem.E is not None else np.zeros((0, n))
    d_user = np.asarray(problem.d, dtype=float).reshape(-1) if problem.d is not None else np.zeros(0)
    convex = [(p, float(r)) for p, r in problem.convex]

    pairs = _scan_row_pairs(A, b)
    absorbed = set()
    E_rows, d_rows = list(E_user), list(d_user)
    for i, j in pairs:
        E_rows.append(A[i])
        d_rows.append(b[i])
        absorbed.add(i)
        absorbed.add(j)

    singles = []
    lin_relax = 0.0
    for _ in range(n + 3):
        E = np.array(E_rows) if E_rows else np.zeros((0, n))
        d = np.array(d_rows) if d_rows else np.zeros(0)
        x0, N = _reduce_equalities(E, d, n)
        if x0 is None:
            return None
        live = [r for r in range(A.shape[0]) if r not in absorbed]
        Ar = A[live] @ N if live else np.zeros((0, N.shape[1]))
        br = b[live] - A[live] @ x0 if live else np.zeros(0)
        keep = []
        for idx in range(Ar.shape[0]):
            if np.linalg.norm(Ar[idx]) <= 1e-11:
                if br[idx] < -1e-8:
                    return None
            else:
                keep.append(idx)
        if N.shape[1] == 0:
            break
        Al, bl = Ar[keep], br[keep]
        if Al.shape[0] == 0:
            break
        center, radius = _chebyshev_direction(Al, bl)
        if center is None:
            # stacked implicit equalities are reconciled by least squares,
            # and the absorption decisions themselves carry LP-level error,
            # which can shift the remaining rows infeasible by up to ~1e-6;
            # relax uniformly by the measured amount before giving up
            if lin_relax > 0.0:
                return None
            worst = _least_infeasibility(Al, bl)
            if worst is None or worst > 1e-6:
                return None
            lin_relax = 2.0 * worst + 1e-9
            b = b + lin_relax
            continue
        if radius > 1e-9:
            break
        # some rows are tight on the whole region; absorb them and rescan
        moved = False
        for idx in keep:
            r = live[idx]
            nr = np.linalg.norm(Ar[idx])
            res = linprog(Ar[idx] / nr, A_ub=Al, b_ub=bl,
                          bounds=(None, None), method="highs")
            if res.status == 0 and br[idx] / nr - res.fun <= 1e-9:
                absorbed.add(r)
                singles.append(r)
                E_rows.append(A[r])
                d_rows.append(b[r])
                moved = True
        if not moved:
            break

    E = np.array(E_rows) if E_rows else np.zeros((0, n))
    d = np.array(d_rows) if d_rows else np.zeros(0)
    x0, N = _reduce_equalities(E, d, n)
    if x0 is None:
        return None
    live = [r for r in range(A.shape[0]) if r not in absorbed]
    Ar_full = A[live] @ N if live else np.zeros((0, N.shape[1]))
    br_full = b[live] - A[live] @ x0 if live else np.zeros(0)
    lin_map, keep = [], []
    for idx, r in enumerate(live):
        if np.linalg.norm(Ar_full[idx]) > 1e-11:
            keep.append(idx)
            lin_map.append(r)
        elif br_full[idx] < -1e-8:
            return None
    Ar, br = Ar_full[keep], br_full[keep]
    crows = [_ConvexRow(p, r, x0, N) for p, r in convex]

    relaxation = 0.0
    if N.shape[1] == 0:
        u_start = np.zeros(0)
        for row in crows:
            if row.value(u_start) > 1e-7:
                return None
    else:
        if Ar.shape[0]:
            u_start, _radius = _chebyshev_direction(Ar, br)
            if u_start is None and lin_relax == 0.0:
                worst = _least_infeasibility(Ar, br)
                if worst is not None and worst <= 1e-6:
                    lin_relax = 2.0 * worst + 1e-9
                    b = b + lin_relax
                    br = br + lin_relax
                    u_start, _radius = _chebyshev_direction(Ar, br)
            if u_start is None:
                return None
        else:
            u_start = np.zeros(N.shape[1])
        if crows:
            vals = np.array([row.value(u_start) for row in crows])
            if vals.max() >= -1e-9:
                u_start, slack = _phase_one(Ar, br, crows, u_start, vals.max())
                if slack is None or slack > 1e-7:
                    return None
                if slack >= -1e-9:
                    # no Slater point: relax the nonlinear rows by a hair so
                    # the barrier has an interior; feasibility of the result
                    # stays within the KKT tolerance
                    relaxation = 2.0 * max(slack, 0.0) + 1e-9
                    for row in crows:
                        row.rhs += relaxation
    return PresolvedSystem(n, A, b, E_user, convex, x0, N, Ar, br, lin_map,
                           singles, pairs, crows, u_start,
                           relaxation + lin_relax)


def _refine_multipliers(grad_full, A_act, E_rows):
    """Sign-constrained LP polish of stationarity for degenerate actives."""
    n = grad_full.shape[0]
    ka, ke = A_act.shape[0], E_rows.shape[0]
    nv = ka + ke + 1
    c = np.zeros(nv)
    c[-1] = 1.0
    rows, rhs = [], []
    for j in range(n):
        row = np.zeros(nv)
        row[:ka] = A_act[:, j]
        row[ka:ka + ke] = E_rows[:, j]
        row[-1] = -1.0
        rows.append(row.copy())
        rhs.append(-grad_full[j])
        row[-1] = 1.0
        rows.append(-row)
        rhs.append(grad_full[j])
    bounds = [(0, None)] * ka + [(None, None)] * ke + [(0, None)]
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds,
                  method="highs")
    if res.status != 0:
        return None, None
    return res.x[:ka], res.x[ka:ka + ke]


def _warm_start(pre: PresolvedSystem) -> np.ndarray:
    """Starting point blended toward the last interior iterate, if usable."""
    if pre.last_u is None or pre.last_u.shape != pre.u_start.shape:
        return pre.u_start
    for w in (0.9, 0.5):
        cand = w * pre.last_u + (1.0 - w) * pre.u_start
        s = pre.br - pre.Ar @ cand if pre.Ar.shape[0] else np.zeros(0)
        gs = np.array([-row.value(cand) for row in pre.crows])
        if (s.size == 0 or s.min() > 1e-11) and \
                (gs.size == 0 or gs.min() > 1e-11):
            return cand
    return pre.u_start


def nlp_solve(problem: NlpProblem, tol: float = TAU_KKT,
              pre: PresolvedSystem | None = None,
              warm: bool = False) -> NlpSolution:
    """Barrier solve of a convex polynomial program with multipliers."""
    if pre is None:
        pre = presolve(problem)
        if pre is None:
            return NlpSolution(INFEASIBLE)
    n = pre.n
    A, b, convex = pre.A, pre.b, pre.convex
    obj = _Objective(problem, pre.x0, pre.N)

    polished = None
    if pre.N.shape[1] == 0:
        u_star, t_final = np.zeros(0), np.inf
    else:
        # a moderate duality gap is enough to identify the active set; the
        # polish step then supplies the accuracy the barrier would only
        # reach at badly conditioned values of t
        n_con = pre.Ar.shape[0] + len(pre.crows)
        gap = max(tol, 1e-4)
        u0, t0 = pre.u_start, 1.0
        if warm:
            cand = _warm_start(pre)
            if cand is not pre.u_start:
                u0, t0 = cand, WARM_T0
        u_star, t_final = _barrier_stagewise(
            obj.value, obj.grad, obj.hess, (pre.Ar, pre.br), pre.crows,
            u0, n_con, gap, t0=t0)
        pre.last_u = u_star.copy()
        polished = _polish(obj, pre.Ar, pre.br, pre.crows, u_star, t_final)
        if polished is None and gap > tol:
            u_star, t_final = _barrier_stagewise(
                obj.value, obj.grad, obj.hess, (pre.Ar, pre.br), pre.crows,
                u_star, n_con, tol, t0=t_final)
            pre.last_u = u_star.copy()
            polished = _polish(obj, pre.Ar, pre.br, pre.crows, u_star,
                               t_final)
        if polished is not None:
            u_star = polished[0]

    x_star = pre.x0 + pre.N @ u_star
    value = obj.full_value(x_star)
    grad_full = obj.grad_full(x_star)

    mu = np.zeros(A.shape[0] + len(convex))
    if polished is not None:
        _, mu_lin, mu_crow = polished
        for pos, r in enumerate(pre.lin_map):
            mu[r] = mu_lin[pos]
        for k in range(len(pre.crows)):
            mu[A.shape[0] + k] = mu_crow[k]
    elif np.isfinite(t_final):
        s_lin = pre.br - pre.Ar @ u_star if pre.Ar.shape[0] else np.zeros(0)
        for pos, r in enumerate(pre.lin_map):
            mu[r] = 1.0 / (t_final * max(s_lin[pos], 1e-300))
        for k, row in enumerate(pre.crows):
            mu[A.shape[0] + k] = 1.0 / (t_final * max(-row.value(u_star), 1e-300))

    # equality multipliers: user rows, absorbed single rows, absorbed pairs
    E_stack = [pre.E_user]
    for r in pre.implicit_single:
        E_stack.append(A[r][None, :])
    for i, _j in pre.implicit_pairs:
        E_stack.append(A[i][None, :])
    stacked = [M for M in E_stack if M.size]
    E_all = np.vstack(stacked) if stacked else np.zeros((0, n))
    rhs_vec = grad_full.copy()
    for r in pre.lin_map:
        rhs_vec += mu[r] * A[r]
    for k, (p, _) in enumerate(convex):
        rhs_vec += mu[A.shape[0] + k] * p.gradient(x_star)
    if E_all.shape[0]:
        lam_all, *_ = np.linalg.lstsq(E_all.T, -rhs_vec, rcond=None)
    else:
        lam_all = np.zeros(0)
    ne = pre.E_user.shape[0]
    lam_user = lam_all[:ne]
    for pos, r in enumerate(pre.implicit_single):
        mu[r] = lam_all[ne + pos]
    base = ne + len(pre.implicit_single)
    for pos, (i, j) in enumerate(pre.implicit_pairs):
        lam = lam_all[base + pos]
        mu[i] = max(lam, 0.0)
        mu[j] = max(-lam, 0.0)

    def stationarity(mu_vec, lam_vec):
        g = grad_full.copy()
        for r in range(A.shape[0]):
            g += mu_vec[r] * A[r]
        for k, (p, _) in enumerate(convex):
            g += mu_vec[A.shape[0] + k] * p.gradient(x_star)
        if ne:
            g += pre.E_user.T @ lam_vec
        return float(np.max(np.abs(g))) if g.size else 0.0

    resid = stationarity(mu, lam_user)
    if resid > 10 * tol or (mu.size and mu.min() < -10 * tol):
        # degenerate actives: polish with a sign-constrained LP
        s_full = b - A @ x_star if A.shape[0] else np.zeros(0)
        act = [r for r in range(A.shape[0]) if s_full[r] <= 1e-6]
        act_cvx = [k for k, row_ in enumerate(pre.crows)
                   if row_.value(u_star) >= -1e-6]
        A_act = np.vstack([A[act]] + [convex[k][0].gradient(x_star)[None, :]
                                      for k in act_cvx]) if (act or act_cvx) else np.zeros((0, n))
        mu_ref, lam_ref = _refine_multipliers(grad_full, A_act, pre.E_user)
        if mu_ref is not None:
            mu = np.zeros(A.shape[0] + len(convex))
            for pos, r in enumerate(act):
                mu[r] = mu_ref[pos]
            for pos, k in enumerate(act_cvx):
                mu[A.shape[0] + k] = mu_ref[len(act) + pos]
            lam_user = lam_ref
            resid = stationarity(mu, lam_user)

    s_all = np.concatenate([
        b - A @ x_star if A.shape[0] else np.zeros(0),
        np.array([r - p(x_star) for p, r in convex]),
    ])
    comp = float(np.max(np.abs(mu * s_all))) if mu.size else 0.0
    return NlpSolution(OPTIMAL, x_star, value, mu, lam_user,
                       kkt_residual=resid, comp_residual=comp,
                       relaxation=pre.relaxation)


# -- scalarization step ----------------------------------------------------


@dataclass
class ScalarSystem:
    """Linear rows plus convex rows describing one player's feasible set."""

    A: np.ndarray
    b: np.ndarray
    convex: list


def shared_system(game: Game) -> ScalarSystem:
    if isinstance(game.constraint, SharedPolytope):
        hs = game.constraint.polytope.halfspaces
        A = np.array([h.normal for h in hs])
        b = np.array([h.offset for h in hs])
        return ScalarSystem(A, b, [])
    rows, offs = [], []
    for i, pc in enumerate(game.constraint.players):
        pos = list(game.slices.block(i))
        for h in pc.box.halfspaces:
            row = np.zeros(game.nvars)
            row[pos] = h.normal
            rows.append(row)
            offs.append(h.offset)
    convex = [(p, 0.0) for p in game.lifted_player_constraints()]
    return ScalarSystem(np.array(rows), np.array(offs), convex)


@dataclass
class PsResult:
    """Scalarized step outcome: minimizer, depth and supporting weight."""

    x: np.ndarray
    z: float
    weight: np.ndarray
    solution: NlpSolution


def pascoletti_serafini(game: Game, i: int, v, system: ScalarSystem | None = None) -> PsResult:
    """Minimal cost over the slice pinned at v's opponent block.

    Solves min f_i(x) over the feasible set intersected with
    {x : x_{-i} = v_{1:a}}; the reported depth z is that minimum shifted by
    the last component of v, so z > 0 means v lies strictly below the image
    set along the last axis.  The returned weight w (nonnegative, last
    component one) supports the image set: w . y >= w . (v + z e_last) for
    every feasible image point y when the cost is jointly convex.
    """
    sys_ = system if system is not None else shared_system(game)
    v = np.asarray(v, dtype=float)
    a = game.slices.a(i)
    others = game.slices.others(i)
    E = np.zeros((a, game.nvars))
    for r, j in enumerate(others):
        E[r, j] = 1.0
    prob = NlpProblem(game.nvars, objective_poly=game.costs[i],
                      A=sys_.A, b=sys_.b, E=E, d=v[:a], convex=sys_.convex)
    sol = nlp_solve(prob)
    if sol.status != OPTIMAL:
        raise SolverError(f"scalarization infeasible at v={v!r}")
    z = sol.value - v[-1]
    lam = sol.eq_multipliers
    w = np.concatenate([np.maximum(lam, 0.0), np.maximum(-lam, 0.0), [1.0]])
    return PsResult(sol.x, float(z), w, sol)
