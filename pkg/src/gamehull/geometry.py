"""Polyhedral calculus on dual-representation convex sets.

Every set handled here is a polyhedron {y : a_k . y <= b_k}.  Objects carry
both descriptions (halfspaces and vertex/ray generators); whichever side is
missing is produced on demand by a double description pass over the
homogenization cone.  Lower-dimensional sets (segments, flat patches, single
points embedded in R^m) are first-class: their affine hull shows up as
paired halfspaces on the H-side and as a lineality space of the dual cone
during conversion, so no code path assumes full dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linprog

# Geometric comparison tolerance: membership, tightness and vertex merging
# are all decided at this scale.
TAU_GEO = 1e-9

# Classification tolerance inside the double description pass.  Kept one
# order below TAU_GEO so ray arithmetic noise never flips a membership test.
_DD_TOL = 1e-10

_RANK_TOL = 1e-10


class GeometryError(Exception):
    """Raised for inputs outside the polytope domain (lines, bad shapes)."""


class EmptyPolytopeError(GeometryError):
    """Raised when a vertex enumeration is requested for an empty set."""


@dataclass(frozen=True)
class Halfspace:
    """One constraint normal . y <= offset."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", np.asarray(self.normal, dtype=float))
        object.__setattr__(self, "offset", float(self.offset))

    def unit(self) -> "Halfspace":
        nrm = np.linalg.norm(self.normal)
        if nrm <= _DD_TOL:
            raise GeometryError("halfspace with zero normal")
        return Halfspace(self.normal / nrm, self.offset / nrm)

    def violation(self, point) -> float:
        return float(self.normal @ np.asarray(point, dtype=float) - self.offset)

    def contains(self, point, tol: float = TAU_GEO) -> bool:
        return self.violation(point) <= tol

    def negated(self) -> "Halfspace":
        return Halfspace(-self.normal, -self.offset)


def _as_points(arr, dim=None):
    pts = np.asarray(arr, dtype=float)
    if pts.size == 0:
        return np.zeros((0, dim if dim is not None else 0))
    if pts.ndim == 1:
        pts = pts[None, :]
    return pts


def _dedupe_points(pts, tol):
    """Drop near-duplicate rows, keeping first occurrences."""
    out = []
    for row in pts:
        if any(np.max(np.abs(row - q)) <= tol for q in out):
            continue
        out.append(row)
    return np.array(out) if out else np.zeros((0, pts.shape[1]))


def _lex_sorted(pts):
    if len(pts) <= 1:
        return pts
    order = np.lexsort(pts.T[::-1])
    return pts[order]


_FRAME_FLOOR = 1e-5


def _point_frame(V, R):
    """Affine frame (center, directions, scales) aligned with a point cloud.

    Rescaling by per-direction extents keeps the cone computations well
    conditioned on very thin bodies.  Ray directions count as full-size
    extents so unbounded directions never get flattened.  Returns None for
    a cloud without spatial extent.
    """
    c = V.mean(axis=0)
    A = V - c
    _, _, vt = np.linalg.svd(A, full_matrices=True)
    U = vt.T
    proj = A @ U
    hi, lo = proj.max(axis=0), proj.min(axis=0)
    ext = hi - lo
    base = float(ext.max()) if ext.size else 0.0
    if R.shape[0]:
        if base <= 0.0:
            base = 1.0
        ray_ext = base * np.max(np.abs(_unit_rows(R) @ U), axis=0)
        ext = np.maximum(ext, ray_ext)
    if float(ext.max()) <= 0.0:
        return None
    ctr = c + U @ ((hi + lo) / 2.0)
    s = np.maximum(ext, _FRAME_FLOOR * float(ext.max())) / 2.0
    return ctr, U, s


def _hrep_frame(halfspaces, dim):
    """Center and scales of a bounded halfspace body, or None.

    Probes the extent along the eigenbasis of the normal covariance with a
    pair of linear programs per direction.  Raises EmptyPolytopeError when
    the system is infeasible; returns None when unbounded or when a probe
    fails, in which case the caller keeps the untransformed system.  A
    scales entry of None marks a body that collapses to a single point.
    """
    A = np.array([h.normal for h in halfspaces])
    b = np.array([h.offset for h in halfspaces])
    _, evecs = np.linalg.eigh(A.T @ A)
    U = evecs
    lo, hi = np.zeros(dim), np.zeros(dim)
    for k in range(dim):
        for sign in (1.0, -1.0):
            res = linprog(sign * U[:, k], A_ub=A, b_ub=b,
                          bounds=(None, None), method="highs")
            if res.status == 2:
                raise EmptyPolytopeError("halfspace system is infeasible")
            if res.status != 0:
                return None
            if sign > 0:
                lo[k] = res.fun
            else:
                hi[k] = -res.fun
    ext = hi - lo
    emax = float(ext.max())
    ctr = U @ ((hi + lo) / 2.0)
    if emax <= 1e-12:
        return ctr, U, None
    s = np.maximum(ext, _FRAME_FLOOR * emax) / 2.0
    return ctr, U, s


def _extreme_points(V, R):
    """Filter generator points down to the vertices of conv(V) + cone(R).

    Removes points one at a time whenever they are a convex combination of
    the remaining points plus a nonnegative ray combination, so the
    generated set never changes.  This works at any aspect ratio, unlike a
    round trip through the halfspace description, which loses vertices on
    very thin hulls.
    """
    n, d = V.shape
    if n <= 1:
        return V
    keep = list(range(n))
    for i in range(n):
        others = [j for j in keep if j != i]
        if not others:
            continue
        P = V[others]
        cols = P.shape[0] + R.shape[0]
        A_eq = np.zeros((d + 1, cols))
        A_eq[:d, :P.shape[0]] = P.T
        A_eq[d, :P.shape[0]] = 1.0
        if R.shape[0]:
            A_eq[:d, P.shape[0]:] = R.T
        b_eq = np.append(V[i], 1.0)
        res = linprog(np.zeros(cols), A_eq=A_eq, b_eq=b_eq,
                      bounds=(0.0, None), method="highs")
        if res.status == 0:
            keep.remove(i)
    return V[keep]


def _unit_rows(M):
    norms = np.linalg.norm(M, axis=1)
    keep = norms > _DD_TOL
    return M[keep] / norms[keep, None]


def _dd_pointed(M):
    """Extreme rays of the pointed cone {x : M x >= 0}.

    M must have unit rows and trivial null space.  Returns unit rays as rows;
    the trivial cone {0} yields an empty array.  Standard double description:
    start from a simplicial subcone picked by QR pivoting, then insert the
    remaining halfspaces one at a time, combining adjacent positive/negative
    ray pairs.  Adjacency is the combinatorial test on shared tight sets.
    """
    nrows, p = M.shape
    if nrows < p:
        raise GeometryError("cone description cannot be pointed")
    _, _, piv = scipy.linalg.qr(M.T, pivoting=True)
    base = sorted(int(k) for k in piv[:p])
    rays = np.linalg.inv(M[base]).T
    rays = rays / np.linalg.norm(rays, axis=1)[:, None]
    processed = list(base)
    rest = [k for k in range(nrows) if k not in set(base)]
    for k in rest:
        processed.append(k)
        if rays.shape[0] == 0:
            break
        s = rays @ M[k]
        pos = np.where(s > _DD_TOL)[0]
        neg = np.where(s < -_DD_TOL)[0]
        if neg.size == 0:
            continue
        keep = rays[s >= -_DD_TOL]
        new = []
        if pos.size:
            # tightness of each current ray against every processed row
            T = np.abs(rays @ M[processed].T) <= 10 * _DD_TOL
            for i in pos:
                for j in neg:
                    common = T[i] & T[j]
                    if common.sum() < p - 2:
                        continue
                    dominated = False
                    for o in range(rays.shape[0]):
                        if o == i or o == j:
                            continue
                        if np.all(T[o][common]):
                            dominated = True
                            break
                    if dominated:
                        continue
                    cand = s[i] * rays[j] - s[j] * rays[i]
                    nrm = np.linalg.norm(cand)
                    if nrm <= _DD_TOL:
                        continue
                    new.append(cand / nrm)
        rays = np.vstack([keep] + [np.array(new)]) if new else keep
        if rays.shape[0] > 1:
            # merge rays that collapsed onto the same direction; a tiny
            # angle alone is not enough, since distinct extreme rays of a
            # degenerate cone can be microradians apart and dropping one
            # loses the positive side of a later cut
            gram = rays @ rays.T
            drop = set()
            for a in range(rays.shape[0]):
                if a in drop:
                    continue
                for b in range(a + 1, rays.shape[0]):
                    if b in drop:
                        continue
                    if gram[a, b] >= 1.0 - 1e-12 and \
                            np.max(np.abs(rays[a] - rays[b])) <= 1e-10:
                        drop.add(b)
            if drop:
                rays = rays[[a for a in range(rays.shape[0]) if a not in drop]]
    return rays


def cone_generators(M):
    """Split the cone {x : M x >= 0} into (extreme rays, lineality basis).

    Rows of the returned arrays are unit vectors.  The lineality basis spans
    {x : M x = 0}; rays are the extreme rays of the pointed quotient lifted
    back to the original space.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[None, :]
    p = M.shape[1]
    M = _unit_rows(M)
    if M.shape[0] == 0:
        return np.zeros((0, p)), np.eye(p)
    _, sv, vt = np.linalg.svd(M)
    rank = int(np.sum(sv > _RANK_TOL * max(1.0, sv[0])))
    lineality = vt[rank:]
    if rank == 0:
        return np.zeros((0, p)), lineality
    basis = vt[:rank].T
    reduced = _unit_rows(M @ basis)
    rays = _dd_pointed(reduced)
    if rays.shape[0]:
        rays = rays @ basis.T
    else:
        rays = np.zeros((0, p))
    return rays, lineality


def _hrep_feasible(halfspaces, dim):
    if not halfspaces:
        return True
    A = np.array([h.normal for h in halfspaces])
    b = np.array([h.offset for h in halfspaces])
    res = linprog(np.zeros(dim), A_ub=A, b_ub=b, bounds=(None, None), method="highs")
    return res.status == 0


class Polytope:
    """A polyhedron carrying halfspace and generator descriptions.

    Construct from one side (`from_halfspaces`, `from_vertices`); the other
    side is derived lazily.  `vertices`/`rays` are always the canonical
    minimal generators (extreme points, unit extreme rays, lexicographically
    sorted), regardless of how the object was built.
    """

    def __init__(self, dim, halfspaces=None, gen_points=None, gen_rays=None):
        self.dim = int(dim)
        self._halfspaces = list(halfspaces) if halfspaces is not None else None
        self._gen_points = _as_points(gen_points, dim) if gen_points is not None else None
        self._gen_rays = _as_points(gen_rays, dim) if gen_rays is not None else None
        self._vertices = None
        self._ray_dirs = None
        if self._halfspaces is None and self._gen_points is None:
            raise GeometryError("polytope needs halfspaces or generators")
        if self._gen_points is not None and self._gen_points.shape[0] == 0:
            raise EmptyPolytopeError("no generator points")

    # -- constructors -------------------------------------------------

    @classmethod
    def from_halfspaces(cls, halfspaces, dim=None):
        hs = [h.unit() for h in halfspaces]
        if dim is None:
            if not hs:
                raise GeometryError("cannot infer dimension")
            dim = hs[0].normal.shape[0]
        for h in hs:
            if h.normal.shape[0] != dim:
                raise GeometryError("halfspace dimension mismatch")
        # parallel rows: only the tightest offset matters, and the nearly
        # coincident vertex twins the loose copies would spawn destabilize
        # the generator enumeration
        best, order = {}, []
        for h in hs:
            key = tuple(np.round(h.normal, 12))
            if key not in best:
                best[key] = h
                order.append(key)
            elif h.offset < best[key].offset:
                best[key] = h
        return cls(dim, halfspaces=[best[k] for k in order])

    @classmethod
    def from_vertices(cls, points, rays=None, dim=None):
        pts = _as_points(points, dim)
        if dim is None:
            dim = pts.shape[1]
        return cls(dim, gen_points=pts, gen_rays=rays)

    @classmethod
    def box(cls, lower, upper):
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        if lo.shape != hi.shape or np.any(hi < lo):
            raise GeometryError("invalid box bounds")
        dim = lo.shape[0]
        hs = []
        for k in range(dim):
            e = np.zeros(dim)
            e[k] = 1.0
            hs.append(Halfspace(e, hi[k]))
            hs.append(Halfspace(-e, -lo[k]))
        return cls.from_halfspaces(hs, dim=dim)

    # -- representations ----------------------------------------------

    @property
    def halfspaces(self):
        if self._halfspaces is None:
            self._compute_hrep()
        return self._halfspaces

    @property
    def vertices(self):
        if self._vertices is None:
            self._compute_vrep()
        return self._vertices

    @property
    def rays(self):
        if self._ray_dirs is None:
            self._compute_vrep()
        return self._ray_dirs

    def _compute_hrep(self):
        V = self._gen_points
        R = self._gen_rays if self._gen_rays is not None else np.zeros((0, self.dim))
        # Equality rows come from the affine hull of the generators, not from
        # the lineality space of the generator enumeration: the enumeration
        # works in a scaled frame and its back-transformed normals carry
        # coordinate noise around 1e-10, enough to wreck a later equality
        # reduction.  An orthonormal basis of the hull's complement is exact.
        ctr0 = V.mean(axis=0)
        span = np.vstack([V - ctr0, R])
        _, sv, vt = np.linalg.svd(span, full_matrices=True)
        cut = 1e-9 * max(1.0, float(sv[0]) if sv.size else 1.0)
        rank = int(np.sum(sv > cut))
        E = vt[rank:]
        eq_offsets = E @ ctr0
        hs = []
        for c, beta in zip(E, eq_offsets):
            h = Halfspace(c, float(beta))
            hs.append(h)
            hs.append(h.negated())

        frame = _point_frame(V, R)
        if frame is None:
            ctr = np.zeros(self.dim)
            U = np.eye(self.dim)
            s = np.ones(self.dim)
        else:
            ctr, U, s = frame
        Vz = ((V - ctr) @ U) / s
        rows = np.hstack([-Vz, np.ones((Vz.shape[0], 1))])
        if R.shape[0]:
            Rz = _unit_rows((R @ U) / s)
            rows = np.vstack([rows, np.hstack([-Rz, np.zeros((Rz.shape[0], 1))])])
        rays, _ = cone_generators(rows)

        def back(w):
            n = U @ (w[:-1] / s)
            return n, float(w[-1] + n @ ctr)

        for w in rays:
            c, beta = back(w)
            if np.linalg.norm(c) <= _DD_TOL:
                continue  # the trivial valid halfspace 0.y <= 1
            if E.shape[0]:
                # replace the normal by its component along the affine hull;
                # the part spanned by equality normals is already implied
                coef = E @ c
                c = c - E.T @ coef
                beta = float(beta - eq_offsets @ coef)
            nrm = np.linalg.norm(c)
            if nrm <= 1e-9:
                continue
            hs.append(Halfspace(c / nrm, beta / nrm))
        self._halfspaces = hs

    def _compute_vrep(self):
        if self._gen_points is not None:
            # Generator-built polyhedra never need the halfspace round trip:
            # minimise the point list directly, which stays exact on thin
            # hulls where the double description run merges distinct rays.
            V = _dedupe_points(self._gen_points, TAU_GEO)
            if self._gen_rays is not None and self._gen_rays.shape[0]:
                R = _dedupe_points(_unit_rows(self._gen_rays), 1e-9)
            else:
                R = np.zeros((0, self.dim))
            self._vertices = _lex_sorted(_extreme_points(V, R))
            self._ray_dirs = _lex_sorted(R)
            return
        hs = self.halfspaces
        frame = _hrep_frame(hs, self.dim) if hs else None
        if frame is not None and frame[2] is None:
            # the probes collapsed every direction: a single point
            self._vertices = frame[0][None, :].copy()
            self._ray_dirs = np.zeros((0, self.dim))
            return
        if frame is not None:
            ctr, U, s = frame
            normals = np.array([h.normal for h in hs])
            offsets = np.array([h.offset for h in hs])
            rows = np.hstack([-(normals @ U) * s,
                              (offsets - normals @ ctr)[:, None]])
        else:
            ctr = np.zeros(self.dim)
            U = np.eye(self.dim)
            s = np.ones(self.dim)
            rows = np.array([np.append(-h.normal, h.offset) for h in hs])
        t_row = np.zeros((1, self.dim + 1))
        t_row[0, -1] = 1.0
        rows = np.vstack([rows, t_row]) if rows.size else t_row
        rays, lineality = cone_generators(rows)
        if lineality.shape[0]:
            if not _hrep_feasible(hs, self.dim):
                raise EmptyPolytopeError("halfspace system is infeasible")
            raise GeometryError("polyhedron contains a line")
        verts, recs = [], []
        for w in rays:
            y, t = w[:-1], w[-1]
            if t > _DD_TOL:
                verts.append(ctr + U @ (s * (y / t)))
            else:
                recs.append(U @ (s * y))
        if not verts:
            if frame is not None:
                raise GeometryError("vertex enumeration failed on a "
                                    "feasible bounded system")
            raise EmptyPolytopeError("halfspace system is infeasible")
        V = _lex_sorted(_dedupe_points(np.array(verts), TAU_GEO))
        if recs:
            R = _lex_sorted(_dedupe_points(_unit_rows(np.array(recs)), 1e-9))
        else:
            R = np.zeros((0, self.dim))
        self._vertices = V
        self._ray_dirs = R

    # -- queries --------------------------------------------------------

    def contains(self, point, tol: float = TAU_GEO) -> bool:
        y = np.asarray(point, dtype=float)
        return all(h.contains(y, tol) for h in self.halfspaces)

    def max_violation(self, point) -> float:
        y = np.asarray(point, dtype=float)
        return max(h.violation(y) for h in self.halfspaces)

    @property
    def is_bounded(self) -> bool:
        return self.rays.shape[0] == 0

    def generator_points(self):
        """Raw generator points if the object was built from them."""
        if self._gen_points is not None:
            return self._gen_points
        return self.vertices

    def generator_rays(self):
        if self._gen_points is not None:
            if self._gen_rays is not None:
                return self._gen_rays
            return np.zeros((0, self.dim))
        return self.rays

    def equality_mask(self):
        """Boolean mask over halfspaces that occur as +/- pairs."""
        hs = self.halfspaces
        mask = np.zeros(len(hs), dtype=bool)
        for i, h in enumerate(hs):
            if mask[i]:
                continue
            for j in range(i + 1, len(hs)):
                if mask[j]:
                    continue
                g = hs[j]
                if (np.max(np.abs(h.normal + g.normal)) <= 1e-12
                        and abs(h.offset + g.offset) <= 1e-12):
                    mask[i] = mask[j] = True
                    break
        return mask

    def interior_point(self):
        """Chebyshev-style center: maximizes the minimum slack."""
        A = np.array([h.normal for h in self.halfspaces])
        b = np.array([h.offset for h in self.halfspaces])
        eq = self.equality_mask()
        c = np.zeros(self.dim + 1)
        c[-1] = -1.0
        A_ub = np.hstack([A[~eq], np.ones((int((~eq).sum()), 1))]) if (~eq).any() else None
        b_ub = b[~eq] if (~eq).any() else None
        A_eq = np.hstack([A[eq], np.zeros((int(eq.sum()), 1))]) if eq.any() else None
        b_eq = b[eq] if eq.any() else None
        bounds = [(None, None)] * self.dim + [(0, 1.0)]
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=bounds, method="highs")
        if res.status != 0:
            raise EmptyPolytopeError("no interior point: system infeasible")
        return res.x[:-1]

    def __repr__(self):
        parts = [f"dim={self.dim}"]
        if self._halfspaces is not None:
            parts.append(f"halfspaces={len(self._halfspaces)}")
        if self._vertices is not None:
            parts.append(f"vertices={len(self._vertices)}")
        return "Polytope(" + ", ".join(parts) + ")"


@dataclass(frozen=True)
class FaceDescriptor:
    """A face of `parent`: tight halfspace indices plus generator indices."""

    parent: Polytope
    active: tuple
    vertex_indices: tuple
    ray_indices: tuple = ()

    def polytope(self) -> Polytope:
        V = self.parent.vertices[list(self.vertex_indices)]
        R = self.parent.rays[list(self.ray_indices)] if self.ray_indices else None
        return Polytope.from_vertices(V, rays=R, dim=self.parent.dim)

    @property
    def dim(self) -> int:
        V = self.parent.vertices[list(self.vertex_indices)]
        R = (self.parent.rays[list(self.ray_indices)]
             if self.ray_indices else np.zeros((0, self.parent.dim)))
        span = np.vstack([V - V[0], R])
        if span.shape[0] == 0:
            return 0
        sv = np.linalg.svd(span, compute_uv=False)
        return int(np.sum(sv > _RANK_TOL * max(1.0, sv[0])))


def to_hrep(p: Polytope) -> Polytope:
    """Ensure p carries an irredundant halfspace description and return it."""
    p.halfspaces
    return p


def to_vrep(p: Polytope) -> Polytope:
    """Ensure p carries canonical vertices/rays and return it.

    Raises EmptyPolytopeError when the halfspace system is infeasible and
    GeometryError when the set contains a line.
    """
    p.vertices
    return p


def enumerate_faces(p: Polytope):
    """All nonempty proper faces of p (vertices up to facets).

    Faces are intersections of tight halfspace subsets; they are found by
    refining the generator set facet by facet, breadth first.  Each face
    reports every halfspace tight on it and the indices of the generators
    it contains.
    """
    to_vrep(to_hrep(p))
    V, R = p.vertices, p.rays
    hs = p.halfspaces
    nv, nr = V.shape[0], R.shape[0]
    tight_v = np.zeros((len(hs), nv), dtype=bool)
    tight_r = np.zeros((len(hs), nr), dtype=bool)
    for k, h in enumerate(hs):
        tight_v[k] = np.abs(V @ h.normal - h.offset) <= TAU_GEO
        if nr:
            tight_r[k] = np.abs(R @ h.normal) <= TAU_GEO
    eq_mask = p.equality_mask()
    facet_rows = [k for k in range(len(hs)) if not eq_mask[k]]

    root = (frozenset(range(nv)), frozenset(range(nr)))
    seen = {root}
    queue = [root]
    found = {}
    while queue:
        vset, rset = queue.pop()
        for k in facet_rows:
            nv_set = frozenset(i for i in vset if tight_v[k, i])
            nr_set = frozenset(i for i in rset if tight_r[k, i])
            if not nv_set:
                continue  # faces of a pointed polyhedron have vertices
            key = (nv_set, nr_set)
            if key == (vset, rset) or key in seen:
                continue
            seen.add(key)
            queue.append(key)
    out = []
    for vset, rset in seen - {root}:
        active = tuple(k for k in range(len(hs))
                       if all(tight_v[k, i] for i in vset)
                       and all(tight_r[k, j] for j in rset))
        out.append(FaceDescriptor(p, active, tuple(sorted(vset)), tuple(sorted(rset))))
    out.sort(key=lambda f: (len(f.vertex_indices), f.vertex_indices, f.ray_indices))
    return out


def intersect(a: Polytope, b: Polytope):
    """Intersection with per-halfspace LP redundancy removal.

    Returns None when the intersection is empty.
    """
    if a.dim != b.dim:
        raise GeometryError("dimension mismatch")
    dim = a.dim
    hs = [h.unit() for h in a.halfspaces] + [h.unit() for h in b.halfspaces]
    # drop exact duplicates before spending LPs
    kept = []
    for h in hs:
        dup = any(np.max(np.abs(h.normal - g.normal)) <= 1e-12
                  and abs(h.offset - g.offset) <= 1e-12 for g in kept)
        if not dup:
            kept.append(h)
    if not _hrep_feasible(kept, dim):
        return None
    idx = 0
    while idx < len(kept):
        h = kept[idx]
        others = kept[:idx] + kept[idx + 1:]
        if not others:
            break
        A = np.vstack([[g.normal for g in others], h.normal[None, :]])
        bvec = np.append([g.offset for g in others], h.offset + 1.0)
        res = linprog(-h.normal, A_ub=A, b_ub=bvec, bounds=(None, None), method="highs")
        if res.status == 0 and -res.fun <= h.offset + TAU_GEO:
            kept.pop(idx)
        else:
            idx += 1
    return Polytope.from_halfspaces(kept, dim=dim)


def minkowski_l1_ball(p: Polytope, radius: float) -> Polytope:
    """Minkowski sum of a bounded polytope with the closed l1 ball."""
    if radius < 0:
        raise GeometryError("negative radius")
    if not p.is_bounded:
        raise GeometryError("polytope must be bounded")
    V = p.vertices
    if radius == 0:
        return Polytope.from_vertices(V.copy(), dim=p.dim)
    offs = np.vstack([np.eye(p.dim), -np.eye(p.dim)]) * radius
    pts = (V[:, None, :] + offs[None, :, :]).reshape(-1, p.dim)
    return Polytope.from_vertices(pts, dim=p.dim)


def l1_distance_dual(point, p: Polytope):
    """L1 distance from point to p plus a maximizing dual direction.

    Solves max {d . point - s : d . v <= s for generators v, |d|_inf <= 1,
    d . r <= 0 for rays r}; the optimum equals min_{x in p} |point - x|_1
    and d is a separating certificate whenever the distance is positive.
    """
    q = np.asarray(point, dtype=float)
    V = p.generator_points()
    R = p.generator_rays()
    nv = V.shape[0]
    dim = p.dim
    # variables: (d, s)
    c = np.append(-q, 1.0)
    A = np.hstack([V, -np.ones((nv, 1))])
    bvec = np.zeros(nv)
    if R.shape[0]:
        A = np.vstack([A, np.hstack([R, np.zeros((R.shape[0], 1))])])
        bvec = np.append(bvec, np.zeros(R.shape[0]))
    bounds = [(-1.0, 1.0)] * dim + [(None, None)]
    res = linprog(c, A_ub=A, b_ub=bvec, bounds=bounds, method="highs")
    if res.status != 0:
        raise GeometryError(f"l1 distance LP failed with status {res.status}")
    dist = max(0.0, -res.fun)
    return dist, res.x[:dim]


def l1_distance_to_polytope(point, p: Polytope) -> float:
    """Exact L1 distance from a point to a nonempty polytope."""
    return l1_distance_dual(point, p)[0]


def support_value(p: Polytope, direction) -> float:
    """sup {direction . y : y in p} from the generator side."""
    d = np.asarray(direction, dtype=float)
    R = p.generator_rays()
    if R.shape[0] and np.max(R @ d) > TAU_GEO:
        return np.inf
    return float(np.max(p.generator_points() @ d))
