"""Equilibrium region assembly and independent equilibrium oracles.

Pipeline per player: approximate the image problem from outside and inside,
enumerate the bounded efficient faces of the inner approximation, collect
for every face the strategies whose image it dominates, inflate those hulls
by eps2 in the L1 norm and clip to the strategy set.  Intersecting the
per-player unions leaves a finite union of polytopes X with

    NE(f, X_set)  is a subset of  X  is a subset of  eps-NE(f, X_set)

for eps = eps1 + 2 * L * eps2, where L is the game's Lipschitz bound.

The oracles at the bottom (best response values, eps-equilibrium test,
brute-force grid search, literal grid Pareto scans) are written directly
from the definitions and share no code with the pipeline, so they can
arbitrate its output.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import benson
from .faces import maximal_efficient_faces
from .game import Game, GameError, IndependentConvex, SharedPolytope
from .geometry import Polytope, intersect, minkowski_l1_ball
from .projection import ProjectionInstance, approximate_projection
from .solver import OPTIMAL, TAU_KKT, NlpProblem, nlp_solve

_VERTEX_DECIMALS = 9
_ZERO_ROW = 1e-12

# The guarantee only needs the image approximated within eps1, but the faces
# of the inner approximation decide how the strategy-space pieces partition:
# a coarse frontier welds nearby pieces together across shallow saddles.
# Refining to a fraction of eps1 keeps them apart; certification still
# reports the achieved gap, which is at most eps1 either way.
REFINE_MARGIN = 5.0


@dataclass
class RegionUnion:
    """Finite union of bounded polytopes in strategy space."""

    pieces: list
    eps_certified: float

    def contains(self, x, tol=1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return any(p.contains(x, tol) for p in self.pieces)

    @property
    def dim(self):
        return self.pieces[0].dim if self.pieces else 0


@dataclass
class RunReport:
    """Sizes, certified errors and timings of one pipeline run."""

    eps1: float
    eps2: float
    lipschitz: float
    eps: float
    eps_certified: float
    player_faces: list = field(default_factory=list)
    player_preimages: list = field(default_factory=list)
    player_iterations: list = field(default_factory=list)
    player_seconds: list = field(default_factory=list)
    pieces: int = 0
    seconds: float = 0.0


@dataclass
class _PlayerArtifacts:
    player: int
    approx: object
    faces: list
    projections: list
    pieces: list
    seconds: float

    @property
    def eps_certified(self):
        proj = max((r.certified_eps for r in self.projections), default=0.0)
        return self.approx.certified, proj


def _strategy_shell(game: Game) -> Polytope:
    """Polyhedral part of the strategy set used for clipping pieces.

    For independent constraints only the boxes enter; a nonlinear convex
    block keeps its box shell, so pieces may slightly overhang the curved
    boundary (the relaxed-assumption mode).
    """
    if isinstance(game.constraint, SharedPolytope):
        return game.constraint.polytope
    rows = []
    from .geometry import Halfspace
    for j, pc in enumerate(game.constraint.players):
        cols = list(game.slices.block(j))
        for h in pc.box.halfspaces:
            v = np.zeros(game.nvars)
            v[cols] = h.normal
            rows.append(Halfspace(v, h.offset))
    return Polytope.from_halfspaces(rows, dim=game.nvars)


def _player_pipeline(game: Game, i: int, eps1: float, eps2: float) -> _PlayerArtifacts:
    t0 = time.perf_counter()
    try:
        target = eps1 / REFINE_MARGIN
        if isinstance(game.constraint, SharedPolytope):
            ua = benson.initialize(game, i, eps1=target)
        else:
            ua = benson.initialize_independent(game, i, eps1=target)
        ua = benson.refine(ua, game)
    except benson.BensonBudgetError as e:
        e.args = (f"player {i + 1}, image stage: {e.args[0]}",) + e.args[1:]
        raise
    effs = maximal_efficient_faces(ua.inner)
    shell = _strategy_shell(game)
    projections, pieces = [], []
    for face in effs:
        try:
            res = approximate_projection(ProjectionInstance(game, i, face, eps2))
        except Exception as e:
            e.args = (f"player {i + 1}, face stage: {e.args[0]}",) + e.args[1:]
            raise
        projections.append(res)
        ball = minkowski_l1_ball(res.inner_hull, eps2)
        piece = intersect(ball, shell)
        if piece is not None:
            pieces.append(piece)
    return _PlayerArtifacts(i, ua, effs, projections, pieces,
                            time.perf_counter() - t0)


def player_region(game: Game, i: int, eps1: float, eps2: float) -> RegionUnion:
    """Union of inflated preimage hulls for one player, clipped to the set."""
    art = _player_pipeline(game, i, eps1, eps2)
    cert1, cert2 = art.eps_certified
    return RegionUnion(_canonical_pieces(art.pieces),
                       cert1 + 2.0 * game.lipschitz * cert2)


def _piece_key(p: Polytope):
    V = np.round(p.vertices, _VERTEX_DECIMALS)
    if V.shape[0] == 0:
        return ()
    order = np.lexsort(V.T[::-1])
    return tuple(map(tuple, V[order] + 0.0))


def _canonical_pieces(pieces):
    keyed = {}
    for p in pieces:
        keyed.setdefault(_piece_key(p), p)
    return [keyed[k] for k in sorted(keyed)]


def intersect_regions(regions) -> RegionUnion:
    """Distribute intersection over the unions; prune empty combinations."""
    regions = list(regions)
    if not regions:
        raise GameError("nothing to intersect")
    dims = {r.dim for r in regions if r.pieces}
    if len(dims) > 1:
        raise GameError("region dimensions differ")
    current = list(regions[0].pieces)
    for other in regions[1:]:
        fresh = []
        for p in current:
            for q in other.pieces:
                r = intersect(p, q)
                if r is not None:
                    fresh.append(r)
        current = fresh
    cert = max(r.eps_certified for r in regions)
    return RegionUnion(_canonical_pieces(current), cert)


def solve(game: Game, eps1: float, eps2: float, threads: int | None = None):
    """Full pipeline; returns the equilibrium region and a run report."""
    if eps1 <= 0 or eps2 < 0:
        raise GameError("eps1 must be positive and eps2 nonnegative")
    t0 = time.perf_counter()
    if threads is None:
        threads = int(os.environ.get("GAMEHULL_THREADS", "1"))
    players = range(game.players)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_player_pipeline, game, i, eps1, eps2)
                       for i in players]
            arts = [f.result() for f in futures]
    else:
        arts = [_player_pipeline(game, i, eps1, eps2) for i in players]

    region = intersect_regions([
        RegionUnion(a.pieces, a.eps_certified[0]
                    + 2.0 * game.lipschitz * a.eps_certified[1])
        for a in arts])
    report = RunReport(
        eps1=eps1, eps2=eps2, lipschitz=game.lipschitz,
        eps=eps1 + 2.0 * game.lipschitz * eps2,
        eps_certified=region.eps_certified,
        player_faces=[len(a.faces) for a in arts],
        player_preimages=[sum(len(r.inner_points) for r in a.projections)
                          for a in arts],
        player_iterations=[a.approx.iterations for a in arts],
        player_seconds=[a.seconds for a in arts],
        pieces=len(region.pieces),
        seconds=time.perf_counter() - t0)
    return region, report


def sample_region(region: RegionUnion, count: int, seed: int = 0):
    """Points from the pieces: box rejection, vertex mixing for thin ones."""
    if not region.pieces:
        raise GameError("cannot sample an empty region")
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        p = region.pieces[k % len(region.pieces)]
        V = p.vertices
        lo, hi = V.min(axis=0), V.max(axis=0)
        pt = None
        if np.min(hi - lo) > 1e-9:
            for _ in range(64):
                cand = rng.uniform(lo, hi)
                if p.contains(cand, 1e-12):
                    pt = cand
                    break
        if pt is None:
            w = rng.dirichlet(np.ones(V.shape[0]))
            pt = w @ V
        out.append(pt)
    return np.array(out)


def connected_groups(pieces):
    """Partition pieces into groups linked by nonempty pairwise overlap."""
    k = len(pieces)
    parent = list(range(k))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    boxes = [(p.vertices.min(axis=0), p.vertices.max(axis=0)) for p in pieces]
    for i in range(k):
        for j in range(i + 1, k):
            if find(i) == find(j):
                continue
            lo = np.maximum(boxes[i][0], boxes[j][0])
            hi = np.minimum(boxes[i][1], boxes[j][1])
            if np.any(lo > hi + 1e-9):
                continue
            if intersect(pieces[i], pieces[j]) is not None:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


# -- oracles ----------------------------------------------------------------


def _slice_constraints(game: Game, i: int, x_rest):
    """Rows and convex parts for player i's block with opponents pinned."""
    block = game.slices.block(i)
    others = game.slices.others(i)
    if isinstance(game.constraint, SharedPolytope):
        poly = game.constraint.polytope
        A_rows, b_rows = [], []
        for h in poly.halfspaces:
            a_i = h.normal[block]
            rhs = h.offset - float(h.normal[others] @ x_rest)
            if np.max(np.abs(a_i)) <= _ZERO_ROW:
                if rhs < -1e-7:
                    raise GameError("slice through an infeasible point")
                continue
            A_rows.append(a_i)
            b_rows.append(rhs)
        return np.array(A_rows), np.array(b_rows), []
    pc = game.constraint.players[i]
    A_rows = [h.normal for h in pc.box.halfspaces]
    b_rows = [h.offset for h in pc.box.halfspaces]
    convex = [(pc.g, 0.0)] if pc.g is not None else []
    return np.array(A_rows), np.array(b_rows), convex


def best_response_value(game: Game, i: int, x) -> float:
    """Exact minimum of player i's cost over her slice through x."""
    x = np.asarray(x, dtype=float)
    others = game.slices.others(i)
    x_rest = x[others]
    fi = game.costs[i].restrict(others, x_rest)
    A, b, convex = _slice_constraints(game, i, x_rest)
    if game.dims[i] == 1 and not convex:
        return _minimize_univariate(fi, A.reshape(-1), b)
    sol = nlp_solve(NlpProblem(game.dims[i], objective_poly=fi,
                               A=A, b=b, convex=convex))
    if sol.status != OPTIMAL:
        raise GameError("slice problem unexpectedly infeasible")
    return sol.value


def _minimize_univariate(poly, a, b) -> float:
    """Minimum of a univariate polynomial over {t : a_r t <= b_r}."""
    lo, hi = -np.inf, np.inf
    for ar, br in zip(a, b):
        if ar > 0:
            hi = min(hi, br / ar)
        elif ar < 0:
            lo = max(lo, br / ar)
    if not np.isfinite(lo) or not np.isfinite(hi) or lo > hi + 1e-9:
        raise GameError("slice interval is unbounded or empty")
    lo, hi = min(lo, hi), max(lo, hi)
    cands = [lo, hi]
    deriv = poly.partial(0).merged()
    deg = deriv.degree
    if deg >= 1 and deriv.coeffs.size:
        coef = np.zeros(deg + 1)
        for c, e in zip(deriv.coeffs, deriv.exponents[:, 0]):
            coef[deg - int(e)] += c
        for r in np.roots(coef):
            if abs(r.imag) < 1e-10 and lo - 1e-12 <= r.real <= hi + 1e-12:
                cands.append(min(max(r.real, lo), hi))
    return min(poly(np.array([t])) for t in cands)


def epsilon_ne_oracle(game: Game, x, eps: float) -> bool:
    """Definition check: no player improves by more than eps by deviating."""
    x = np.asarray(x, dtype=float)
    if not game.feasible(x, tol=1e-7):
        raise GameError("oracle point lies outside the strategy set")
    for i in range(game.players):
        if game.eval_cost(i, x) > best_response_value(game, i, x) + eps + TAU_KKT:
            return False
    return True


def brute_force_ne(game: Game, grid: int = 51, eps: float = 0.0):
    """Grid points of the strategy set passing the eps-equilibrium oracle."""
    if game.nvars > 3:
        raise GameError("brute force is limited to three dimensions")
    if grid > 201:
        raise GameError("grid resolution capped at 201 per axis")
    pts = grid_points(game, grid)
    hits = [p for p in pts if epsilon_ne_oracle(game, p, eps)]
    return np.array(hits) if hits else np.zeros((0, game.nvars))


def grid_points(game: Game, k: int):
    """Feasible points of the uniform k-per-axis grid over the box."""
    lo, hi = game.bounding_box()
    axes = [np.linspace(lo[d], hi[d], k) for d in range(game.nvars)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return pts[_feasible_mask(game, pts)]


def _feasible_mask(game: Game, pts):
    tol = 1e-9
    mask = np.ones(len(pts), dtype=bool)
    if isinstance(game.constraint, SharedPolytope):
        for h in game.constraint.polytope.halfspaces:
            mask &= pts @ h.normal <= h.offset + tol
        return mask
    for j, pc in enumerate(game.constraint.players):
        cols = game.slices.block(j)
        blockpts = pts[:, cols]
        for h in pc.box.halfspaces:
            mask &= blockpts @ h.normal <= h.offset + tol
        if pc.g is not None:
            mask &= pc.g.eval_many(blockpts) <= tol
    return mask


def grid_nash(game: Game, k: int, eps: float = 0.0, pts=None):
    """Literal scan: grid points no player can improve on within the grid.

    Comparisons are plain float comparisons; restricted to one grid, the
    eps-equilibrium and eps-Pareto characterizations then agree exactly.
    """
    if pts is None:
        pts = grid_points(game, k)
    keep = np.ones(len(pts), dtype=bool)
    for i in range(game.players):
        others = game.slices.others(i)
        fvals = game.costs[i].eval_many(pts)
        slices = {}
        for idx in range(len(pts)):
            slices.setdefault(tuple(pts[idx, others]), []).append(idx)
        for idxs in slices.values():
            best = min(fvals[j] for j in idxs) + eps
            for j in idxs:
                if fvals[j] > best:
                    keep[j] = False
    return pts[keep]


def grid_pareto(game: Game, i: int, k: int, eps: float = 0.0, pts=None):
    """Literal scan: grid points whose image no other grid image dominates.

    A point is dropped when some other image, shifted by eps along the
    last coordinate, is componentwise at most its image and not equal.
    """
    if pts is None:
        pts = grid_points(game, k)
    Y = game.image_many(i, pts)
    S = Y.copy()
    S[:, -1] += eps
    dominated = np.zeros(len(pts), dtype=bool)
    chunk = 256
    for s in range(0, len(pts), chunk):
        blk = Y[s:s + chunk]
        le = (S[None, :, :] <= blk[:, None, :]).all(axis=2)
        ne = (S[None, :, :] != blk[:, None, :]).any(axis=2)
        dominated[s:s + chunk] = (le & ne).any(axis=1)
    return pts[~dominated]
