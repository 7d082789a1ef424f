"""Incremental 2D Delaunay triangulation and Voronoi-neighbor queries.

The triangulation is Bowyer-Watson with ghost triangles: every hull edge
(u, v) carries a ghost triangle (u, v, GHOST) whose "circumcircle" is the open
half-plane to the left of u->v.  Voronoi neighbors of a query point are the
vertices of its insertion cavity, which is found without modifying the index.

Predicates run on jittered coordinates: each vertex id is displaced by a
deterministic dyadic offset of magnitude below 2^-40.  Floating-point results
are trusted only outside a conservative error bound; otherwise the predicate
is re-evaluated exactly with Fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from selsample.domain import UsageError, as_point
from selsample.predictor import SampleSet

GHOST = -1
QUERY = -2

_JITTER_BITS = 20
_JITTER_SCALE = 2 ** -(40 + _JITTER_BITS - 1)  # |offset| < 2^-40
_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def jitter_offsets(vid: int) -> tuple[int, int]:
    """Integer offsets (units of 2^-59) applied to vertex `vid` inside predicates."""
    h = _splitmix64(vid & _MASK64)
    half = 1 << (_JITTER_BITS - 1)
    return ((h & ((1 << _JITTER_BITS) - 1)) - half, ((h >> 32) & ((1 << _JITTER_BITS) - 1)) - half)


class _Vertex:
    __slots__ = ("x", "y", "fx", "fy", "_exact", "jx", "jy")

    def __init__(self, vid: int, x: float, y: float):
        self.x, self.y = x, y
        self.jx, self.jy = jitter_offsets(vid)
        self.fx = x + self.jx * _JITTER_SCALE
        self.fy = y + self.jy * _JITTER_SCALE
        self._exact = None

    @property
    def exact(self) -> tuple[Fraction, Fraction]:
        if self._exact is None:
            s = Fraction(_JITTER_SCALE)
            self._exact = (Fraction(self.x) + self.jx * s, Fraction(self.y) + self.jy * s)
        return self._exact


def _orient_exact(a, b, c) -> int:
    ax, ay = a.exact
    bx, by = b.exact
    cx, cy = c.exact
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (det > 0) - (det < 0)


def orient(a: _Vertex, b: _Vertex, c: _Vertex) -> int:
    """Sign of twice the signed area of (a, b, c): +1 counter-clockwise."""
    det = (b.fx - a.fx) * (c.fy - a.fy) - (b.fy - a.fy) * (c.fx - a.fx)
    scale = 1.0 + max(abs(a.fx), abs(a.fy), abs(b.fx), abs(b.fy), abs(c.fx), abs(c.fy))
    if abs(det) > 1e-14 * scale * scale:
        return 1 if det > 0 else -1
    return _orient_exact(a, b, c)


def _incircle_exact(a, b, c, d) -> int:
    ax, ay = a.exact
    bx, by = b.exact
    cx, cy = c.exact
    dx, dy = d.exact
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    return (det > 0) - (det < 0)


def incircle(a: _Vertex, b: _Vertex, c: _Vertex, d: _Vertex) -> int:
    """+1 when d lies strictly inside the circle through counter-clockwise a, b, c."""
    adx, ady = a.fx - d.fx, a.fy - d.fy
    bdx, bdy = b.fx - d.fx, b.fy - d.fy
    cdx, cdy = c.fx - d.fx, c.fy - d.fy
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    scale = 1.0 + max(abs(v.fx) + abs(v.fy) for v in (a, b, c, d))
    if abs(det) > 1e-13 * scale**4:
        return 1 if det > 0 else -1
    return _incircle_exact(a, b, c, d)


def _raw_orient_sign(a: _Vertex, b: _Vertex, c: _Vertex) -> int:
    ax, ay, bx, by, cx, cy = (Fraction(v) for v in (a.x, a.y, b.x, b.y, c.x, c.y))
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (det > 0) - (det < 0)


def _circumcenter(a, b, c):
    d = 2.0 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
    if d == 0.0:
        return None
    b2 = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
    c2 = (c[0] - a[0]) ** 2 + (c[1] - a[1]) ** 2
    ux = a[0] + ((c[1] - a[1]) * b2 - (b[1] - a[1]) * c2) / d
    uy = a[1] + ((b[0] - a[0]) * c2 - (c[0] - a[0]) * b2) / d
    if not (math.isfinite(ux) and math.isfinite(uy)):
        return None
    return (ux, uy)


def _hits_unit_box(origin, direction, t_max, tol=1e-9) -> bool:
    """Liang-Barsky test of origin + t*direction, 0 <= t <= t_max, against the unit square."""
    t0, t1 = 0.0, t_max
    for o, dv in zip(origin, direction):
        lo, hi = -tol, 1.0 + tol
        if dv == 0.0:
            if o < lo or o > hi:
                return False
            continue
        ta, tb = (lo - o) / dv, (hi - o) / dv
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1:
            return False
    return True


class VoronoiIndex:
    """Delaunay triangulation over the points of a 2D sample set.

    Until three non-collinear samples exist the index is degenerate and
    neighbor queries report every sample.
    """

    def __init__(self):
        self.verts: list[_Vertex] = []
        self.tris: dict[int, tuple[int, int, int]] = {}
        self.edges: dict[tuple[int, int], int] = {}
        self._next_tid = 0
        self._last = None
        self._walk_turn = 0
        self.size = 0
        self.checksum = None

    @property
    def degenerate(self) -> bool:
        return not self.tris

    # construction ---------------------------------------------------------

    def _add_tri(self, a, b, c) -> int:
        tid = self._next_tid
        self._next_tid += 1
        self.tris[tid] = (a, b, c)
        self.edges[(a, b)] = tid
        self.edges[(b, c)] = tid
        self.edges[(c, a)] = tid
        if c != GHOST:
            self._last = tid
        return tid

    def _remove_tri(self, tid):
        a, b, c = self.tris.pop(tid)
        for e in ((a, b), (b, c), (c, a)):
            if self.edges.get(e) == tid:
                del self.edges[e]

    def _bootstrap(self):
        verts = self.verts
        a = 0
        b = next((i for i in range(1, len(verts)) if (verts[i].x, verts[i].y) != (verts[a].x, verts[a].y)), None)
        if b is None:
            return
        c = next((i for i in range(len(verts)) if _raw_orient_sign(verts[a], verts[b], verts[i]) != 0), None)
        if c is None:
            return
        if orient(verts[a], verts[b], verts[c]) < 0:
            a, b = b, a
        self._add_tri(b, a, GHOST)
        self._add_tri(c, b, GHOST)
        self._add_tri(a, c, GHOST)
        self._add_tri(a, b, c)
        for i in range(len(verts)):
            if i not in (a, b, c):
                self._insert(i)

    def extend(self, Z: SampleSet) -> "VoronoiIndex":
        """Insert the samples of `Z` beyond those already indexed."""
        if Z.dimension != 2:
            raise UsageError("Voronoi index requires a 2D sample set")
        if len(Z) < self.size:
            raise UsageError("sample set is shorter than the index")
        pts = Z.points
        for i in range(self.size, len(Z)):
            self.verts.append(_Vertex(i, float(pts[i, 0]), float(pts[i, 1])))
            if self.degenerate:
                self._bootstrap()
            else:
                self._insert(i)
        self.size = len(Z)
        self.checksum = Z.checksum
        return self

    def _insert(self, vid: int):
        boundary, cavity = self._cavity(self.verts[vid])
        for tid in cavity:
            self._remove_tri(tid)
        for u, v in boundary:
            if u == GHOST:
                self._add_tri(v, vid, GHOST)
            elif v == GHOST:
                self._add_tri(vid, u, GHOST)
            else:
                self._add_tri(u, v, vid)

    # queries ----------------------------------------------------------------

    def _vertex(self, vid, query):
        return query if vid == QUERY else self.verts[vid]

    def _conflict(self, tid, p: _Vertex) -> bool:
        a, b, c = self.tris[tid]
        va, vb = self.verts[a], self.verts[b]
        if c == GHOST:
            o = orient(va, vb, p)
            if o != 0:
                return o > 0
            # collinear with a hull edge: conflict only strictly between its ends
            ex, ey = p.exact
            (ax, ay), (bx, by) = va.exact, vb.exact
            dot = (ex - ax) * (bx - ax) + (ey - ay) * (by - ay)
            return 0 < dot < (bx - ax) ** 2 + (by - ay) ** 2
        return incircle(va, vb, self.verts[c], p) > 0

    def _locate(self, p: _Vertex) -> int:
        tid = self._last if self._last in self.tris else next(t for t, tri in self.tris.items() if tri[2] != GHOST)
        for _ in range(4 * len(self.tris) + 16):
            tri = self.tris[tid]
            if tri[2] == GHOST:
                return tid
            self._walk_turn = (self._walk_turn + 1) % 3
            moved = False
            for k in range(3):
                j = (k + self._walk_turn) % 3
                u, v = tri[j], tri[(j + 1) % 3]
                if orient(self.verts[u], self.verts[v], p) < 0:
                    tid = self.edges[(v, u)]
                    moved = True
                    break
            if not moved:
                return tid
        raise RuntimeError("point location did not terminate")

    def _cavity(self, p: _Vertex):
        """Triangles in conflict with `p` and the directed boundary edges of their union."""
        start = self._locate(p)
        cavity = {start}
        stack = [start]
        boundary = []
        while stack:
            tid = stack.pop()
            a, b, c = self.tris[tid]
            for u, v in ((a, b), (b, c), (c, a)):
                nb = self.edges[(v, u)]
                if nb in cavity:
                    continue
                if self._conflict(nb, p):
                    cavity.add(nb)
                    stack.append(nb)
                else:
                    boundary.append((u, v))
        return boundary, cavity

    def triangles(self) -> list[tuple[int, int, int]]:
        """Real (finite) triangles as counter-clockwise sample positions."""
        return [t for t in self.tris.values() if t[2] != GHOST]

    def neighbor_ring(self, x) -> list[int]:
        """Counter-clockwise ring of vertex ids (GHOST included) adjacent to `x` once inserted."""
        q = _Vertex(self.size, float(x[0]), float(x[1]))
        boundary, _ = self._cavity(q)
        succ = dict(boundary)
        start = boundary[0][0]
        ring = [start]
        while succ[ring[-1]] != start:
            ring.append(succ[ring[-1]])
        return ring

    def delaunay_neighbors(self, x, clip: bool = True) -> list[int]:
        x = (float(x[0]), float(x[1]))
        ring = self.neighbor_ring(x)
        if not clip:
            return sorted(v for v in ring if v != GHOST)
        out = []
        n = len(ring)
        for k, a in enumerate(ring):
            if a == GHOST:
                continue
            prev, nxt = ring[k - 1], ring[(k + 1) % n]
            if self._edge_reaches_domain(x, a, prev, nxt):
                out.append(a)
        return sorted(out)

    def _edge_reaches_domain(self, x, a, prev, nxt) -> bool:
        """Does the Voronoi edge between x and vertex a meet the unit square?"""
        pa = (self.verts[a].x, self.verts[a].y)

        def xy(v):
            return (self.verts[v].x, self.verts[v].y)

        if prev == GHOST or nxt == GHOST:
            other = nxt if prev == GHOST else prev
            cc = _circumcenter(x, pa, xy(other)) if other != GHOST else None
            if cc is None:
                return True
            nx, ny = -(pa[1] - x[1]), pa[0] - x[0]
            ox, oy = xy(other)
            if nx * (ox - x[0]) + ny * (oy - x[1]) > 0:
                nx, ny = -nx, -ny
            return _hits_unit_box(cc, (nx, ny), math.inf)
        c0 = _circumcenter(xy(prev), pa, x)
        c1 = _circumcenter(pa, xy(nxt), x)
        if c0 is None or c1 is None:
            return True
        return _hits_unit_box(c0, (c1[0] - c0[0], c1[1] - c0[1]), 1.0)


def build_index(Z: SampleSet) -> VoronoiIndex:
    return VoronoiIndex().extend(Z)


def _check_current(Z: SampleSet, geom: VoronoiIndex):
    if geom.size != len(Z) or geom.checksum != Z.checksum:
        raise UsageError("Voronoi index is stale for this sample set")


def voronoi_neighbors(x, Z: SampleSet, geom: VoronoiIndex, clip: bool = True) -> list[int]:
    """Positions of the Voronoi neighbors of `x` with respect to `Z`.

    Neighbors come from the Delaunay link of `x` after a transient insertion.
    With `clip`, a neighbor is kept only when the Voronoi edge it would share
    with `x` meets the closed unit square.  Empty when `x` is a sample.
    """
    if Z.dimension != 2:
        raise UsageError("Voronoi neighbors are computed for 2D sample sets only")
    x = as_point(x, 2)
    _check_current(Z, geom)
    if len(Z) == 0 or Z.find(x) is not None:
        return []
    if geom.degenerate:
        return list(range(len(Z)))
    return geom.delaunay_neighbors(x, clip=clip)


# certificate oracle ---------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    """A point c with d(x,c) < d(v,c) <= d(s,c) for every sample s."""

    point: tuple
    d_x: float
    d_v: float
    d_min: float


def _lattice(dim: int, resolution: int) -> np.ndarray:
    ticks = (np.arange(resolution) + 0.5) / resolution
    if dim == 1:
        return ticks[:, None]
    gx, gy = np.meshgrid(ticks, ticks, indexing="xy")
    return np.column_stack([gx.ravel(), gy.ravel()])


def _probe_points(x: np.ndarray, v: np.ndarray, dim: int, resolution: int) -> np.ndarray:
    seg = [x + t * (v - x) for t in (0.25, 0.5 - 2.0**-20, 0.5 - 2.0**-40)]
    return np.vstack([x[None, :], np.array(seg), _lattice(dim, resolution)])


def _sq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def certify_voronoi_neighbor(x, v_index: int, Z: SampleSet, grid_resolution: int = 512) -> Certificate | None:
    """Search x, a few points on the x-v segment, then a lattice for a certificate.

    None means nothing was found at this resolution, not that v is no neighbor.
    """
    x = np.asarray(as_point(x, Z.dimension))
    pts = Z.points
    v = pts[v_index]
    cand = _probe_points(x, v, Z.dimension, grid_resolution)
    inside = ((cand >= 0.0) & (cand <= 1.0)).all(axis=1)
    cand = cand[inside]
    best = np.full(len(cand), np.inf)
    for lo in range(0, len(pts), 64):
        best = np.minimum(best, _sq(cand, pts[lo : lo + 64]).min(axis=1))
    dv = _sq(cand, v[None, :])[:, 0]
    dx = _sq(cand, x[None, :])[:, 0]
    ok = np.flatnonzero((dx < dv) & (dv <= best))
    if ok.size == 0:
        return None
    i = ok[0]
    return Certificate(tuple(cand[i].tolist()), math.sqrt(dx[i]), math.sqrt(dv[i]), math.sqrt(best[i]))


def certified_neighbors(x, Z: SampleSet, grid_resolution: int = 512) -> list[int]:
    """Every sample position for which a certificate exists among the search points."""
    x = np.asarray(as_point(x, Z.dimension))
    pts = Z.points
    lattice = _lattice(Z.dimension, grid_resolution)
    found = []
    d_all = _sq(lattice, pts)
    best = d_all.min(axis=1)
    dx = _sq(lattice, x[None, :])[:, 0]
    hit = ((d_all == best[:, None]) & (dx[:, None] < d_all)).any(axis=0)
    for j in range(len(pts)):
        if hit[j] or certify_voronoi_neighbor(x, j, Z, grid_resolution=1) is not None:
            found.append(j)
    return found
