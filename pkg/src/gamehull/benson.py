"""Sandwiching a player's lifted cost image between polyhedra.

For player i the vector objective sends a joint strategy x to
(x_{-i}, -x_{-i}, f_i(x)).  The upper image of this map over the feasible
set is approximated from outside by a shrinking polytope `outer` and from
inside by conv(images of `preimages`) plus the componentwise ordering cone.
Refinement repeatedly lowers reference points (the outer vertices) onto the
image boundary along the last coordinate axis and cuts with the supporting
halfspace recovered from the scalarization multipliers, until every outer
vertex is within eps1 of the inner approximation along that axis.

Two initializations exist: the shared-constraint one seeds with the
vertices of the joint strategy polytope, and the independent-constraint one
(per-player convex sets) first builds a circumscribing polytope of the
opponents' product set by support-function sampling and works with the
relaxed feasible system from there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .game import Game, GameError, IndependentConvex, Polynomial, SharedPolytope
from .geometry import GeometryError, Halfspace, Polytope
from .solver import (
    INFEASIBLE,
    OPTIMAL,
    NlpProblem,
    ScalarSystem,
    SolverError,
    lp_solve,
    nlp_solve,
    pascoletti_serafini,
    shared_system,
)

# outward padding of every generated cut; keeps sampled feasible images on
# the inner side despite solver-level multiplier error
CUT_PAD = 1e-8

REFINE_MAX_SWEEPS = 120

_KEY_DECIMALS = 9


class BensonBudgetError(Exception):
    """Raised when refinement hits its sweep budget before certifying."""

    def __init__(self, achieved, approx):
        super().__init__(f"refinement budget exhausted at gap {achieved:.3e}")
        self.achieved = achieved
        self.approx = approx


@dataclass
class UpperImageApprox:
    """Outer polytope, preimage list and their images for one player."""

    player: int
    outer: Polytope
    preimages: list
    images: np.ndarray
    eps1: float
    system: ScalarSystem
    iterations: int = 0
    certified: float | None = None

    @property
    def m(self) -> int:
        return self.images.shape[1]

    @property
    def inner(self) -> Polytope:
        """conv(images) plus the componentwise ordering cone."""
        return Polytope.from_vertices(self.images, rays=np.eye(self.m))

    def direction(self) -> np.ndarray:
        c = np.zeros(self.m)
        c[-1] = 1.0
        return c


def _point_key(x):
    return tuple(np.round(np.asarray(x, dtype=float), _KEY_DECIMALS))


def _weight_directions(m):
    dirs = [np.eye(m)[j] for j in range(m)]
    dirs.append(np.ones(m))
    return dirs


def _scalarize_direction(game, i, w, system):
    """Minimize w . image_i(x) over the scalarization system."""
    a = game.slices.a(i)
    others = game.slices.others(i)
    lin = np.zeros(game.nvars)
    for r, j in enumerate(others):
        lin[j] += w[r] - w[a + r]
    wm = float(w[2 * a])
    if wm == 0.0 and not system.convex:
        res = lp_solve(lin, A=system.A, b=system.b)
        if res.status != OPTIMAL:
            raise SolverError(f"support direction {w} unbounded or infeasible")
        return res.value, res.x
    prob = NlpProblem(game.nvars, objective_lin=lin,
                      objective_poly=game.costs[i].scaled(wm) if wm else None,
                      A=system.A, b=system.b, convex=system.convex)
    sol = nlp_solve(prob)
    if sol.status != OPTIMAL:
        raise SolverError(f"support scalarization failed: {sol.status}")
    return sol.value, sol.x


def _structure_cuts(a, hull_points):
    """Sign-pair cuts plus the lifted hull of the opponent-block points."""
    m = 2 * a + 1
    cuts = []
    for r in range(a):
        n = np.zeros(m)
        n[r], n[a + r] = 1.0, 1.0
        cuts.append(Halfspace(n, 0.0))
        cuts.append(Halfspace(-n, 0.0))
    proj = Polytope.from_vertices(hull_points, dim=a)
    for h in proj.halfspaces:
        n = np.zeros(m)
        n[:a] = h.normal
        cuts.append(Halfspace(n, h.offset))
    return cuts


def _assemble(game, i, eps1, system, hull_points, seeds):
    a = game.slices.a(i)
    m = 2 * a + 1
    cuts = _structure_cuts(a, hull_points)
    preimages, keys = [], set()

    def push(x):
        k = _point_key(x)
        if k not in keys:
            keys.add(k)
            preimages.append(np.asarray(x, dtype=float))

    for x in seeds:
        push(x)
    for w in _weight_directions(m):
        beta, x_w = _scalarize_direction(game, i, w, system)
        cuts.append(Halfspace(-w, -(beta - CUT_PAD)))
        push(x_w)
    outer = Polytope.from_halfspaces(cuts, dim=m)
    rays = outer.rays
    c = np.zeros(m)
    c[-1] = 1.0
    if rays.shape[0] != 1 or not np.allclose(rays[0], c, atol=1e-8):
        raise GeometryError("outer approximation is not pointed along the "
                            "cost axis; structural cuts are inconsistent")
    images = game.image_many(i, np.array(preimages))
    return UpperImageApprox(i, outer, preimages, images, eps1, system)


def initialize(game: Game, i: int, eps1: float | None = None) -> UpperImageApprox:
    """Outer and inner start for a shared-constraint game.

    The outer polytope is the intersection of weighted-sum supporting
    halfspaces (one per coordinate direction plus the all-ones direction),
    the sign-pair cuts tying the duplicated opponent block together, and
    the hull of the opponent coordinates of the strategy polytope's
    vertices.  The preimage list starts from those vertices and the
    weighted-sum minimizers.
    """
    if not isinstance(game.constraint, SharedPolytope):
        raise GameError("shared-constraint initialization needs a joint "
                        "strategy polytope")
    if eps1 is None:
        eps1 = game.suggested_eps[0] if game.suggested_eps else 0.01
    system = shared_system(game)
    verts = game.constraint.polytope.vertices
    if verts.shape[0] == 0:
        raise GeometryError("strategy polytope has no vertices")
    others = game.slices.others(i)
    return _assemble(game, i, eps1, system, verts[:, others], list(verts))


def _sphere_directions(a, count):
    if a == 1:
        return [np.array([1.0]), np.array([-1.0])]
    if a == 2:
        ang = 2 * math.pi * np.arange(count) / count
        return list(np.column_stack([np.cos(ang), np.sin(ang)]))
    # Fibonacci spiral on S^{a-1} via iterated angles; adequate coverage
    # for the moderate direction counts used here
    golden = (1 + math.sqrt(5.0)) / 2
    dirs = []
    for k in range(count):
        z = 1 - 2 * (k + 0.5) / count
        r = math.sqrt(max(0.0, 1 - z * z))
        phi = 2 * math.pi * k / golden
        base = [r * math.cos(phi), r * math.sin(phi), z]
        vec = np.array(base + [0.0] * (a - 3))
        if a > 3:
            # spread the remaining coordinates deterministically
            rng = np.random.default_rng(k)
            extra = rng.standard_normal(a - 3) * 0.5
            vec[3:] = extra
            vec /= np.linalg.norm(vec)
        dirs.append(vec)
    return dirs


def _player_strict_point(pc, nvars_block):
    """Strictly feasible point of one player's convex set, or raise."""
    box = pc.box
    if pc.g is None:
        return box.interior_point()
    rows_n, rows_b = [], []
    for h in box.halfspaces:
        rows_n.append(np.append(h.normal, 0.0))
        rows_b.append(h.offset)
    rows_n.append(np.append(np.zeros(nvars_block), -1.0))
    rows_b.append(1.0)
    shifted = pc.g.lift(nvars_block + 1, list(range(nvars_block))).plus(
        Polynomial.from_terms(nvars_block + 1,
                              [(-1.0, tuple([0] * nvars_block + [1]))]))
    obj = np.zeros(nvars_block + 1)
    obj[-1] = 1.0
    sol = nlp_solve(NlpProblem(nvars_block + 1, objective_lin=obj,
                               A=np.array(rows_n), b=np.array(rows_b),
                               convex=[(shifted, 0.0)]))
    if sol.status != OPTIMAL or sol.value >= -1e-9:
        raise GameError("player constraint set has empty interior")
    return sol.x[:-1]


def _opponent_system(game, i):
    """Rows and convex terms for the stacked opponent variables."""
    others = list(game.slices.others(i))
    a = len(others)
    pos_of = {j: r for r, j in enumerate(others)}
    rows, offs, convex = [], [], []
    for j, pc in enumerate(game.constraint.players):
        if j == i:
            continue
        cols = [pos_of[k] for k in game.slices.block(j)]
        for h in pc.box.halfspaces:
            n = np.zeros(a)
            n[cols] = h.normal
            rows.append(n)
            offs.append(h.offset)
        if pc.g is not None:
            convex.append((pc.g.lift(a, cols), 0.0))
    return np.array(rows), np.array(offs), convex


def initialize_independent(game: Game, i: int, outer_dirs: int | None = None,
                           eps1: float | None = None) -> UpperImageApprox:
    """Start for per-player convex constraint sets.

    Builds a circumscribing polytope of the opponents' product set by
    support-function sampling over `outer_dirs` directions (default 4a),
    then proceeds as in the shared case with the relaxed feasible system
    {x_i in the player's set, x_{-i} in that polytope}.  The seeded
    preimages pair an interior strategy of player i with each vertex of the
    sampled polytope; such pairs may violate the opponents' true convex
    constraints and are valid seeds for the relaxed problem only.
    """
    if not isinstance(game.constraint, IndependentConvex):
        raise GameError("independent initialization needs per-player "
                        "constraint sets")
    if eps1 is None:
        eps1 = game.suggested_eps[0] if game.suggested_eps else 0.01
    a = game.slices.a(i)
    if outer_dirs is None:
        outer_dirs = 4 * a
    others = list(game.slices.others(i))

    # strict interior points double as the Remark-style arbitrary strategy
    # and as the empty-interior detector
    strict = [_player_strict_point(pc, pc.box.dim)
              for pc in game.constraint.players]

    A_opp, b_opp, convex_opp = _opponent_system(game, i)
    cuts = []
    for d in _sphere_directions(a, outer_dirs):
        d = d / np.linalg.norm(d)
        sol = nlp_solve(NlpProblem(a, objective_lin=-d, A=A_opp, b=b_opp,
                                   convex=convex_opp))
        if sol.status != OPTIMAL:
            raise SolverError("support sampling of the opponent set failed")
        cuts.append(Halfspace(d, -sol.value))
    for r, n in enumerate(A_opp):
        cuts.append(Halfspace(n, b_opp[r]))
    p_out = Polytope.from_halfspaces(cuts, dim=a)

    # relaxed scalarization system on the full variable vector
    own = list(game.slices.block(i))
    rows, offs, convex = [], [], []
    own_pc = game.constraint.players[i]
    for h in own_pc.box.halfspaces:
        n = np.zeros(game.nvars)
        n[own] = h.normal
        rows.append(n)
        offs.append(h.offset)
    if own_pc.g is not None:
        convex.append((own_pc.g.lift(game.nvars, own), 0.0))
    for h in p_out.halfspaces:
        n = np.zeros(game.nvars)
        n[others] = h.normal
        rows.append(n)
        offs.append(h.offset)
    system = ScalarSystem(np.array(rows), np.array(offs), convex)

    x_own = strict[i]
    seeds = [game.slices.join(i, x_own, p) for p in p_out.vertices]
    return _assemble(game, i, eps1, system, p_out.vertices, seeds)


def refine(ua: UpperImageApprox, game: Game,
           max_sweeps: int = REFINE_MAX_SWEEPS) -> UpperImageApprox:
    """Drive every outer vertex to within eps1 of the image boundary.

    Each sweep scalarizes all unvisited outer vertices, records their
    minimizers as preimages, and cuts off the vertices whose gap exceeds
    eps1 with the recovered supporting halfspaces (steepest gap first).
    Returns a new approximation whose certified field carries the final
    maximal gap.
    """
    cache = {}
    preimages = list(ua.preimages)
    keys = {_point_key(x) for x in preimages}
    outer = ua.outer
    c = ua.direction()
    for sweep in range(max_sweeps):
        entries = []
        for v in outer.vertices:
            k = _point_key(v)
            if k not in cache:
                cache[k] = pascoletti_serafini(game, ua.player, v, ua.system)
            r = cache[k]
            entries.append((r.z, v, r))
            xk = _point_key(r.x)
            if xk not in keys:
                keys.add(xk)
                preimages.append(r.x)
        worst = max(e[0] for e in entries)
        if worst <= ua.eps1:
            images = game.image_many(ua.player, np.array(preimages))
            return UpperImageApprox(ua.player, outer, preimages, images,
                                    ua.eps1, ua.system, iterations=sweep,
                                    certified=max(worst, 0.0))
        new_cuts = []
        for z, v, r in sorted(entries, key=lambda e: -e[0]):
            if z > ua.eps1:
                rhs = float(r.weight @ (v + z * c)) - CUT_PAD
                new_cuts.append(Halfspace(-r.weight, -rhs))
        outer = Polytope.from_halfspaces(list(outer.halfspaces) + new_cuts,
                                         dim=ua.m)
    achieved = max(e[0] for e in entries)
    images = game.image_many(ua.player, np.array(preimages))
    partial = UpperImageApprox(ua.player, outer, preimages, images, ua.eps1,
                               ua.system, iterations=max_sweeps,
                               certified=achieved)
    raise BensonBudgetError(achieved, partial)
