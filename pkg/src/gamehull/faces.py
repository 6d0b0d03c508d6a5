"""Maximal efficient faces of an inner image approximation.

A face of conv(V) + R^m_+ is efficient when some strictly positive weight
vector is minimized over the whole polyhedron exactly on that face; the
union of the maximal efficient faces is the set of componentwise-minimal
points.  Faces containing a recession ray can never carry such a weight
(the ray coordinate would need weight zero), so every returned face is a
bounded polytope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import FaceDescriptor, Polytope
from .solver import OPTIMAL, lp_solve

# slack allowed on vertex rows of the certificate LP; absorbs coordinate
# noise from the vertex enumeration without admitting weak faces
_CERT_SLACK = 1e-7

_TIGHT_TOL = 1e-9


@dataclass
class EfficientFace:
    face: FaceDescriptor
    polytope: Polytope
    weight: np.ndarray

    @property
    def dim(self) -> int:
        return self.face.dim


def is_efficient(face: FaceDescriptor, p: Polytope):
    """Weight certificate for a face, or None.

    Feasibility LP for w >= 1 with w.(y - y0) >= 0 over all vertices y,
    w.r >= 0 over all recession rays, constancy of w.y on the face and
    w.r = 0 on face rays; minimizing the total weight makes the returned
    certificate reproducible.
    """
    V, R = p.vertices, p.rays
    vi = list(face.vertex_indices)
    if not vi:
        return None
    y0 = V[vi[0]]
    m = p.dim
    rows, rhs = [], []
    for y in V:
        rows.append(-(y - y0))
        rhs.append(_CERT_SLACK)
    for r in R:
        rows.append(-r)
        rhs.append(0.0)
    for k in vi[1:]:
        diff = V[k] - y0
        rows.append(diff)
        rhs.append(_CERT_SLACK)
        rows.append(-diff)
        rhs.append(_CERT_SLACK)
    for k in face.ray_indices:
        rows.append(R[k])
        rhs.append(0.0)
        rows.append(-R[k])
        rhs.append(0.0)
    res = lp_solve(np.ones(m), A=np.array(rows), b=np.array(rhs),
                   bounds=(1, None))
    if res.status != OPTIMAL:
        return None
    return res.x


def _tight_sets(p: Polytope):
    """Per-halfspace tight vertex/ray index sets, skipping equality rows."""
    V, R = p.vertices, p.rays
    eq = p.equality_mask()
    out = []
    for idx, h in enumerate(p.halfspaces):
        if eq[idx]:
            continue
        tv = frozenset(k for k, y in enumerate(V)
                       if abs(h.normal @ y - h.offset) <= _TIGHT_TOL * max(1.0, abs(h.offset)))
        tr = frozenset(k for k, r in enumerate(R) if abs(h.normal @ r) <= _TIGHT_TOL)
        out.append((tv, tr))
    return out


def maximal_efficient_faces(p: Polytope):
    """All inclusion-maximal efficient faces, largest dimension first.

    Top-down search: facets are tested first; the children of a rejected
    face (its intersections with the other facet tight-sets) are queued,
    and any face inside an accepted one is skipped.
    """
    tights = _tight_sets(p)
    nv = p.vertices.shape[0]
    all_v = frozenset(range(nv))
    all_r = frozenset(range(p.rays.shape[0]))

    seen = set()
    queue = []
    for tv, tr in tights:
        if tv and (tv, tr) != (all_v, all_r) and (tv, tr) not in seen:
            seen.add((tv, tr))
            queue.append((tv, tr))

    def descriptor(tv, tr):
        active = tuple(idx for idx, h in enumerate(p.halfspaces)
                       if all(abs(h.normal @ p.vertices[k] - h.offset) <= 1e-8
                              for k in tv)
                       and all(abs(h.normal @ p.rays[k]) <= 1e-8 for k in tr))
        return FaceDescriptor(p, active, tuple(sorted(tv)), tuple(sorted(tr)))

    accepted = []

    def covered(tv, tr):
        return any(tv <= av and tr <= ar for av, ar, _ in accepted)

    while queue:
        queue.sort(key=lambda c: (-len(c[0]), sorted(c[0]), sorted(c[1])))
        tv, tr = queue.pop(0)
        if covered(tv, tr):
            continue
        fd = descriptor(tv, tr)
        w = is_efficient(fd, p)
        if w is not None:
            accepted.append((tv, tr, (fd, w)))
            continue
        for ov, orr in tights:
            cv, cr = tv & ov, tr & orr
            if cv and (cv, cr) != (tv, tr) and (cv, cr) not in seen:
                seen.add((cv, cr))
                queue.append((cv, cr))

    out = []
    for tv, tr, (fd, w) in accepted:
        out.append(EfficientFace(fd, fd.polytope(), w))
    out.sort(key=lambda ef: (-ef.dim, ef.face.vertex_indices))
    return out
