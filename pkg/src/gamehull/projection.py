"""Preimage region below one efficient face, approximated in strategy space.

For player i and an efficient face F of the inner image approximation, the
target set collects the strategies x whose image is dominated by some point
of F:

    {x feasible : exists y in F with x_{-i} <= y_{1:a}, -x_{-i} <= y_{a+1:2a},
                  f_i(x) <= y_m}.

The set is convex and bounded.  It is sandwiched between the convex hull of
computed support points (inner) and an intersection of supporting
halfspaces (outer); refinement picks an outer vertex farther than eps2 from
the inner hull in the L1 norm and supports along the separating direction
returned by the distance dual, until every outer vertex is within eps2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .faces import EfficientFace
from .game import Game, IndependentConvex, Polynomial, SharedPolytope
from .geometry import Halfspace, Polytope, l1_distance_dual
from .solver import OPTIMAL, NlpProblem, SolverError, nlp_solve, presolve

PROJ_MAX_SWEEPS = 200

# outward padding of support halfspaces; keeps the outer polytope feasible
# and valid under solver-level error
SUPPORT_PAD = 1e-9

_KEY_DECIMALS = 9


class ProjectionBudgetError(Exception):
    def __init__(self, achieved, result):
        super().__init__(f"projection budget exhausted at gap {achieved:.3e}")
        self.achieved = achieved
        self.result = result


@dataclass
class ProjectionInstance:
    game: Game
    player: int
    face: EfficientFace
    eps2: float


@dataclass
class ProjectionResult:
    inner_points: list
    inner_hull: Polytope
    certified_eps: float
    iterations: int = 0


class _LiftedSystem:
    """Constraint rows of the (x, y) feasibility set for one instance."""

    def __init__(self, pi: ProjectionInstance):
        g = pi.game
        i = pi.player
        n = g.nvars
        a = g.slices.a(i)
        m = 2 * a + 1
        self.n, self.m = n, m
        rows, offs = [], []
        convex = []
        if isinstance(g.constraint, SharedPolytope):
            for h in g.constraint.polytope.halfspaces:
                rows.append(np.concatenate([h.normal, np.zeros(m)]))
                offs.append(h.offset)
        else:
            for j, pc in enumerate(g.constraint.players):
                cols = list(g.slices.block(j))
                for h in pc.box.halfspaces:
                    v = np.zeros(n + m)
                    v[cols] = h.normal
                    rows.append(v)
                    offs.append(h.offset)
            for p in g.lifted_player_constraints():
                convex.append((p.lift(n + m, list(range(n))), 0.0))
        for h in pi.face.polytope.halfspaces:
            rows.append(np.concatenate([np.zeros(n), h.normal]))
            offs.append(h.offset)
        for r, j in enumerate(g.slices.others(i)):
            v = np.zeros(n + m)
            v[j], v[n + r] = 1.0, -1.0
            rows.append(v)
            offs.append(0.0)
            v = np.zeros(n + m)
            v[j], v[n + a + r] = -1.0, -1.0
            rows.append(v)
            offs.append(0.0)
        epi = g.costs[i].lift(n + m, list(range(n))).plus(
            Polynomial.from_terms(n + m, [(-1.0, tuple([0] * (n + m - 1) + [1]))]))
        convex.append((epi, 0.0))
        self.A = np.array(rows)
        self.b = np.array(offs)
        self.convex = convex
        # the constraint side is identical across all support directions;
        # presolve once and reuse
        self.pre = presolve(NlpProblem(n + m, A=self.A, b=self.b,
                                       convex=self.convex))
        if self.pre is None:
            raise SolverError("projection system infeasible; the face is "
                              "inconsistent with the constraint set")


def support_step(pi: ProjectionInstance, d, lifted: _LiftedSystem | None = None):
    """Support point and halfspace of the preimage region along -d.

    Minimizes d . x over the lifted (x, y) set; the returned halfspace
    {x : d . x >= value - pad} contains the whole region.
    """
    sys_ = lifted if lifted is not None else _LiftedSystem(pi)
    d = np.asarray(d, dtype=float)
    obj = np.concatenate([d, np.zeros(sys_.m)])
    sol = nlp_solve(NlpProblem(sys_.n + sys_.m, objective_lin=obj,
                               A=sys_.A, b=sys_.b, convex=sys_.convex),
                    pre=sys_.pre, warm=True)
    if sol.status != OPTIMAL:
        raise SolverError("projection support step infeasible; the face "
                          "is inconsistent with the constraint set")
    x_star = sol.x[:sys_.n]
    return x_star, Halfspace(-d, -(sol.value - SUPPORT_PAD))


def _outer_seed(game: Game) -> list:
    if isinstance(game.constraint, SharedPolytope):
        return list(game.constraint.polytope.halfspaces)
    rows = []
    for j, pc in enumerate(game.constraint.players):
        cols = list(game.slices.block(j))
        for h in pc.box.halfspaces:
            v = np.zeros(game.nvars)
            v[cols] = h.normal
            rows.append(Halfspace(v, h.offset))
    return rows


def approximate_projection(pi: ProjectionInstance,
                           max_sweeps: int = PROJ_MAX_SWEEPS) -> ProjectionResult:
    """Inner hull within eps2 of the preimage region, L1-certified."""
    g = pi.game
    n = g.nvars
    lifted = _LiftedSystem(pi)
    pts, keys = [], set()

    def push(x):
        k = tuple(np.round(x, _KEY_DECIMALS))
        if k not in keys:
            keys.add(k)
            pts.append(np.asarray(x, dtype=float))
            return True
        return False

    outer_rows = _outer_seed(g)
    for k in range(n):
        for sgn in (1.0, -1.0):
            d = np.zeros(n)
            d[k] = sgn
            x_star, h = support_step(pi, d, lifted)
            push(x_star)
            outer_rows.append(h)

    achieved = np.inf
    for sweep in range(max_sweeps):
        outer = Polytope.from_halfspaces(outer_rows, dim=n)
        hull = Polytope.from_vertices(np.array(pts), dim=n)
        worst = 0.0
        new_rows, grew = [], False
        for u in outer.vertices:
            dist, delta = l1_distance_dual(u, hull)
            worst = max(worst, dist)
            if dist <= pi.eps2:
                continue
            nd = np.linalg.norm(delta)
            if nd <= 1e-12:
                continue
            x_star, h = support_step(pi, -delta / nd, lifted)
            grew = push(x_star) or grew
            new_rows.append(h)
        if not new_rows:
            return ProjectionResult(pts, hull, worst, iterations=sweep)
        if not grew and worst >= achieved - 1e-12:
            break
        achieved = min(achieved, worst)
        outer_rows.extend(new_rows)
    result = ProjectionResult(pts, Polytope.from_vertices(np.array(pts), dim=n),
                              worst, iterations=max_sweeps)
    raise ProjectionBudgetError(worst, result)
