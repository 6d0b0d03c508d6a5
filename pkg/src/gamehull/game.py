"""N-player games with polynomial costs over polyhedral or box constraints.

A game bundles the per-player strategy dimensions, one polynomial cost per
player, a constraint variant (one shared polytope, or an independent bounded
box plus optional convex polynomial inequality per player) and a Lipschitz
constant for the cost vector in the L1 sense.  The Lipschitz constant is a
user input: it enters reported error levels, so the module only offers a
sampled estimator to sanity-check it, never a replacement.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import Polytope

RNG_CONVEXITY_SAMPLES = 64


class GameError(Exception):
    pass


class ConvexityWarning(UserWarning):
    """Sampled cost Hessian has a noticeably negative eigenvalue."""


class Polynomial:
    """Multivariate polynomial stored as (coefficient, exponent row) terms."""

    def __init__(self, nvars, coeffs, exponents):
        self.nvars = int(nvars)
        self.coeffs = np.asarray(coeffs, dtype=float).reshape(-1)
        self.exponents = np.asarray(exponents, dtype=np.int64).reshape(-1, self.nvars)
        if self.coeffs.shape[0] != self.exponents.shape[0]:
            raise GameError("coefficient/exponent length mismatch")
        if np.any(self.exponents < 0):
            raise GameError("negative exponent")
        self._grad_struct = None
        self._hess_struct = None
        self._grad_flat = None
        self._hess_flat = None

    @classmethod
    def from_terms(cls, nvars, terms):
        """terms: iterable of (coefficient, exponent tuple)."""
        coeffs, expo = [], []
        for c, e in terms:
            coeffs.append(float(c))
            expo.append(list(e))
        if not coeffs:
            coeffs, expo = [0.0], [[0] * nvars]
        return cls(nvars, coeffs, expo)

    @classmethod
    def zero(cls, nvars):
        return cls(nvars, [0.0], [[0] * nvars])

    def merged(self) -> "Polynomial":
        """Combine duplicate exponent rows and drop zero coefficients."""
        seen = {}
        for c, e in zip(self.coeffs, self.exponents):
            key = tuple(int(k) for k in e)
            seen[key] = seen.get(key, 0.0) + c
        terms = [(c, k) for k, c in seen.items() if c != 0.0]
        if not terms:
            return Polynomial.zero(self.nvars)
        return Polynomial.from_terms(self.nvars, [(c, k) for c, k in terms])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return float(np.dot(self.coeffs, np.prod(x[None, :] ** self.exponents, axis=1)))

    def eval_many(self, X):
        """Vectorized evaluation over rows of X."""
        X = np.asarray(X, dtype=float)
        # (npts, nterms) monomial matrix
        mono = np.prod(X[:, None, :] ** self.exponents[None, :, :], axis=2)
        return mono @ self.coeffs

    def partial(self, j) -> "Polynomial":
        """Exact partial derivative in variable j."""
        mask = self.exponents[:, j] > 0
        if not mask.any():
            return Polynomial.zero(self.nvars)
        coeffs = self.coeffs[mask] * self.exponents[mask, j]
        expo = self.exponents[mask].copy()
        expo[:, j] -= 1
        return Polynomial(self.nvars, coeffs, expo)

    @staticmethod
    def _differentiate(coeffs, expo, k):
        mask = expo[:, k] > 0
        if not mask.any():
            return np.zeros(0), np.zeros((0, expo.shape[1]), dtype=np.int64)
        e = expo[mask].copy()
        c = coeffs[mask] * e[:, k]
        e[:, k] -= 1
        return c, e

    def _gradient_structure(self):
        if self._grad_struct is None:
            self._grad_struct = [
                self._differentiate(self.coeffs, self.exponents, j)
                for j in range(self.nvars)]
        return self._grad_struct

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        coef, expo, idx = self._gradient_flat()
        out = np.zeros(self.nvars)
        if coef.size:
            mono = np.prod(x[None, :] ** expo, axis=1)
            np.add.at(out, idx, coef * mono)
        return out

    def _gradient_flat(self):
        """All gradient terms stacked into one monomial table."""
        if self._grad_flat is None:
            cs, es, idx = [], [], []
            for j, (coef, expo) in enumerate(self._gradient_structure()):
                if coef.size:
                    cs.append(coef)
                    es.append(expo)
                    idx.append(np.full(coef.shape[0], j, dtype=np.int64))
            if cs:
                self._grad_flat = (np.concatenate(cs), np.vstack(es),
                                   np.concatenate(idx))
            else:
                self._grad_flat = (np.zeros(0),
                                   np.zeros((0, self.nvars), dtype=np.int64),
                                   np.zeros(0, dtype=np.int64))
        return self._grad_flat

    def _hessian_structure(self):
        if self._hess_struct is None:
            grads = self._gradient_structure()
            struct = []
            for j in range(self.nvars):
                cj, ej = grads[j]
                struct.append([self._differentiate(cj, ej, k)
                               for k in range(j, self.nvars)])
            self._hess_struct = struct
        return self._hess_struct

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        coef, expo, jj, kk = self._hessian_flat()
        H = np.zeros((self.nvars, self.nvars))
        if coef.size:
            vals = coef * np.prod(x[None, :] ** expo, axis=1)
            np.add.at(H, (jj, kk), vals)
            np.add.at(H, (kk, jj), vals * (jj != kk))
        return H

    def _hessian_flat(self):
        """All upper-triangle Hessian terms stacked into one table."""
        if self._hess_flat is None:
            cs, es, js, ks = [], [], [], []
            for j, row in enumerate(self._hessian_structure()):
                for off, (coef, expo) in enumerate(row):
                    if coef.size:
                        cs.append(coef)
                        es.append(expo)
                        js.append(np.full(coef.shape[0], j, dtype=np.int64))
                        ks.append(np.full(coef.shape[0], j + off, dtype=np.int64))
            if cs:
                self._hess_flat = (np.concatenate(cs), np.vstack(es),
                                   np.concatenate(js), np.concatenate(ks))
            else:
                self._hess_flat = (np.zeros(0),
                                   np.zeros((0, self.nvars), dtype=np.int64),
                                   np.zeros(0, dtype=np.int64),
                                   np.zeros(0, dtype=np.int64))
        return self._hess_flat

    def lift(self, nvars_total, positions):
        """Embed into a larger variable space; positions maps old index->new."""
        expo = np.zeros((self.exponents.shape[0], nvars_total), dtype=np.int64)
        for old, new in enumerate(positions):
            expo[:, new] = self.exponents[:, old]
        return Polynomial(nvars_total, self.coeffs.copy(), expo)

    def restrict(self, positions, values):
        """Polynomial in the remaining variables after pinning `positions`."""
        pinned = {int(j): float(v) for j, v in zip(positions, values)}
        keep = [j for j in range(self.nvars) if j not in pinned]
        coeffs = self.coeffs.copy()
        for j, v in pinned.items():
            coeffs = coeffs * (v ** self.exponents[:, j])
        expo = self.exponents[:, keep]
        return Polynomial(len(keep), coeffs, expo).merged()

    @property
    def degree(self) -> int:
        return int(self.exponents.sum(axis=1).max()) if self.coeffs.size else 0

    def scaled(self, factor) -> "Polynomial":
        return Polynomial(self.nvars, self.coeffs * float(factor), self.exponents.copy())

    def plus(self, other: "Polynomial") -> "Polynomial":
        if other.nvars != self.nvars:
            raise GameError("variable count mismatch")
        return Polynomial(self.nvars,
                          np.concatenate([self.coeffs, other.coeffs]),
                          np.vstack([self.exponents, other.exponents])).merged()

    def terms(self):
        return [(float(c), tuple(int(k) for k in e))
                for c, e in zip(self.coeffs, self.exponents)]


@dataclass
class SharedPolytope:
    polytope: Polytope


@dataclass
class PlayerConstraint:
    box: Polytope
    g: Polynomial | None = None


@dataclass
class IndependentConvex:
    players: list


class SliceIndex:
    """Index bookkeeping between joint vectors and per-player blocks."""

    def __init__(self, dims):
        self.dims = [int(d) for d in dims]
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)])
        self.total = int(self.offsets[-1])

    def block(self, i):
        return np.arange(self.offsets[i], self.offsets[i + 1])

    def others(self, i):
        mask = np.ones(self.total, dtype=bool)
        mask[self.offsets[i]:self.offsets[i + 1]] = False
        return np.where(mask)[0]

    def split(self, x, i):
        x = np.asarray(x, dtype=float)
        return x[self.block(i)], x[self.others(i)]

    def join(self, i, x_i, x_rest):
        out = np.empty(self.total)
        out[self.block(i)] = x_i
        out[self.others(i)] = x_rest
        return out

    def a(self, i) -> int:
        """Number of opponent coordinates for player i."""
        return self.total - self.dims[i]

    def m(self, i) -> int:
        """Image-space dimension of player i's vector problem."""
        return 2 * self.a(i) + 1


class Game:
    """Convex game: dims, per-player polynomial costs, constraints, L."""

    def __init__(self, dims, costs, constraint, lipschitz, name="",
                 suggested_eps=None, convexity_check=True):
        self.dims = [int(d) for d in dims]
        self.costs = list(costs)
        self.constraint = constraint
        self.lipschitz = float(lipschitz)
        self.name = name
        self.suggested_eps = suggested_eps
        self.slices = SliceIndex(self.dims)
        self._validate()
        if convexity_check:
            self._convexity_probe()

    # -- validation ------------------------------------------------------

    def _validate(self):
        if len(self.dims) < 2:
            raise GameError("need at least two players")
        if any(d < 1 for d in self.dims):
            raise GameError("every player needs at least one variable")
        if len(self.costs) != len(self.dims):
            raise GameError("one cost per player required")
        for f in self.costs:
            if f.nvars != self.slices.total:
                raise GameError("cost variable count does not match dims")
        if self.lipschitz <= 0:
            raise GameError("lipschitz constant must be positive")
        if isinstance(self.constraint, SharedPolytope):
            poly = self.constraint.polytope
            if poly.dim != self.slices.total:
                raise GameError("constraint dimension mismatch")
            if not poly.is_bounded:
                raise GameError("shared constraint set must be bounded")
        elif isinstance(self.constraint, IndependentConvex):
            if len(self.constraint.players) != len(self.dims):
                raise GameError("one constraint block per player required")
            for i, pc in enumerate(self.constraint.players):
                if pc.box.dim != self.dims[i]:
                    raise GameError("box dimension mismatch")
                if not pc.box.is_bounded:
                    raise GameError("player boxes must be bounded")
                if pc.g is not None and pc.g.nvars != self.dims[i]:
                    raise GameError("player constraint variable mismatch")
        else:
            raise GameError("unknown constraint variant")

    def _convexity_probe(self):
        lo, hi = self.bounding_box()
        rng = np.random.default_rng(20240313)
        pts = rng.uniform(lo, hi, size=(RNG_CONVEXITY_SAMPLES, self.slices.total))
        worst = 0.0
        for f in self.costs:
            if f.degree <= 1:
                continue
            for x in pts:
                eig = np.linalg.eigvalsh(f.hessian(x))
                worst = min(worst, float(eig[0]))
        if worst < -1e-8:
            warnings.warn(
                f"sampled cost Hessians reach eigenvalue {worst:.3g}; "
                "results are only guaranteed for jointly convex costs",
                ConvexityWarning, stacklevel=3)

    # -- basic queries ----------------------------------------------------

    @property
    def players(self) -> int:
        return len(self.dims)

    @property
    def nvars(self) -> int:
        return self.slices.total

    def eval_cost(self, i, x) -> float:
        return self.costs[i](np.asarray(x, dtype=float))

    def cost_gradient(self, i, x):
        return self.costs[i].gradient(np.asarray(x, dtype=float))

    def objective_image(self, i, x):
        """Image vector (x_{-i}, -x_{-i}, f_i(x)) of player i's problem."""
        x = np.asarray(x, dtype=float)
        rest = x[self.slices.others(i)]
        return np.concatenate([rest, -rest, [self.eval_cost(i, x)]])

    def image_many(self, i, X):
        X = np.asarray(X, dtype=float)
        rest = X[:, self.slices.others(i)]
        vals = self.costs[i].eval_many(X)
        return np.hstack([rest, -rest, vals[:, None]])

    def bounding_box(self):
        if isinstance(self.constraint, SharedPolytope):
            V = self.constraint.polytope.vertices
            return V.min(axis=0), V.max(axis=0)
        los, his = [], []
        for pc in self.constraint.players:
            V = pc.box.vertices
            los.append(V.min(axis=0))
            his.append(V.max(axis=0))
        return np.concatenate(los), np.concatenate(his)

    def feasible(self, x, tol=1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if isinstance(self.constraint, SharedPolytope):
            return self.constraint.polytope.contains(x, tol)
        for i, pc in enumerate(self.constraint.players):
            xi = x[self.slices.block(i)]
            if not pc.box.contains(xi, tol):
                return False
            if pc.g is not None and pc.g(xi) > tol:
                return False
        return True

    def lifted_player_constraints(self):
        """Per-player convex constraints lifted to joint coordinates."""
        if not isinstance(self.constraint, IndependentConvex):
            return []
        out = []
        for i, pc in enumerate(self.constraint.players):
            if pc.g is not None:
                positions = list(self.slices.block(i))
                out.append(pc.g.lift(self.nvars, positions))
        return out


def estimate_lipschitz(game: Game, grid_density: int = 21) -> float:
    """Max sampled gradient sup-norm over a feasible grid.

    A lower estimate of the true constant; it approaches it as the grid is
    refined.  Used to sanity-check user-supplied values, not replace them.
    """
    if grid_density < 2:
        raise GameError("grid density must be at least 2")
    lo, hi = game.bounding_box()
    axes = [np.linspace(lo[k], hi[k], grid_density) for k in range(game.nvars)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    keep = np.array([game.feasible(x) for x in pts])
    pts = pts[keep]
    if pts.shape[0] == 0:
        raise GameError("no feasible grid points")
    best = 0.0
    for i in range(game.players):
        grads = np.stack([game.costs[i].partial(j).eval_many(pts)
                          for j in range(game.nvars)], axis=1)
        best = max(best, float(np.abs(grads).max()))
    return best
