r"""
Geodesic tracing on triangulated half-translation surfaces.

Everything runs on the triangulated view of a surface: saddle connection
enumeration by cone unfolding, separatrix tracing, cylinder decompositions
in periodic directions with spines and widths, flat-geodesic and
bad-singularity tests, and the action of affine automorphisms on all of it.

All arithmetic is exact.  Directions are chart-local vectors; gluings only
flip signs, so direction classes survive chart changes and are compared
with cross products and the angular bookkeeping of the corner stars.
"""

from fractions import Fraction

from .planar import (
    cross, dot, vadd, vsub, vneg, same_ray, parallel,
    normalize_direction, seg_dist_sq_exceeds, in_halfopen_arc,
)
from .surface import InvalidSurfaceError

__all__ = [
    "Direction", "SaddleConnection", "AnnularDecomposition", "CylinderCore",
    "NotPeriodicDirectionError", "enumerate_saddle_connections",
    "cylinder_decomposition", "is_flat_geodesic", "has_bad_singularity",
    "contains_spine_component", "cores_intersect", "apply_affine",
]

TRACE_BUDGET = 10 ** 4
UNFOLD_BUDGET = 10 ** 6


class NotPeriodicDirectionError(RuntimeError):
    """Separatrix tracing exceeded its budget: not an annular decomposition
    direction (or the budget is too small)."""

    def __init__(self, direction, budget):
        super().__init__(
            "not an annular decomposition direction (budget %d)" % budget)
        self.direction = direction
        self.budget = budget


class Direction:
    """A nonzero vector up to sign and positive scale."""

    def __init__(self, vector):
        self.vector = normalize_direction(tuple(vector))

    def __repr__(self):
        return "Direction(%s, %s)" % (float(self.vector[0]),
                                      float(self.vector[1]))

    def __eq__(self, other):
        if not isinstance(other, Direction):
            return NotImplemented
        return parallel(self.vector, other.vector)

    def angle_cmp(self, other):
        """Order by angle in [0, pi): the +x axis first, then by ccw sweep."""
        u, v = self.vector, other.vector
        if parallel(u, v):
            return 0
        if u[1] == 0:
            return -1
        if v[1] == 0:
            return 1
        return -1 if cross(u, v) > 0 else 1

    def to_json(self):
        return {
            "vector": [_scalar_json(self.vector[0]), _scalar_json(self.vector[1])],
            "approx": [float(self.vector[0]), float(self.vector[1])],
        }


def _scalar_json(x):
    return [str(Fraction(c)) for c in x.coords]


def as_direction(surface, d):
    if isinstance(d, Direction):
        return d
    return Direction(tuple(surface.field.element(c) for c in d))


def rot90(u):
    return (-u[1], u[0])


# ---------------------------------------------------------------------------
# ray tracing through the triangulated complex
# ---------------------------------------------------------------------------

def _exit_from_triangle(tri, t, z, u, came_from):
    """First exit of the ray z + s*u from triangle t.

    Returns ("vertex", corner_index, t_param) or
    ("edge", edge_index, t_param, exit_point).
    """
    verts = tri.polygons[t]
    best = None
    for k in range(3):
        if k == came_from:
            continue
        A = verts[k]
        B = verts[(k + 1) % 3]
        v = vsub(B, A)
        denom = cross(u, v)
        if denom == 0:
            continue
        dvec = vsub(A, z)
        t_par = cross(dvec, v) / denom
        if not t_par > 0:
            continue
        s_par = cross(dvec, u) / denom
        if s_par < 0 or s_par > 1:
            continue
        if best is None or t_par < best[0]:
            best = (t_par, k, s_par)
    if best is None:
        raise InvalidSurfaceError("ray failed to exit a triangle", (t,))
    t_par, k, s_par = best
    if s_par == 0:
        return ("vertex", k, t_par)
    if s_par == 1:
        return ("vertex", (k + 1) % 3, t_par)
    A = verts[k]
    v = vsub(verts[(k + 1) % 3], A)
    exit_pt = vadd(A, (v[0] * s_par, v[1] * s_par))
    return ("edge", k, t_par, exit_pt)


def _cross_edge(tri, t, edge, z, u):
    """Carry a point and direction over a gluing; returns (t2, z2, u2, k2, s)."""
    (t2, k2), s, w = tri.complex.partner[(t, edge)]
    # partner stores x_mine = s * x_other + w, hence x_other = s*x - s*w
    z2 = (s * z[0] - s * w[0], s * z[1] - s * w[1])
    u2 = (s * u[0], s * u[1])
    return t2, z2, u2, k2, s


def trace_to_vertex(tri, t, z, u, budget=TRACE_BUDGET,
                    direction_for_error=None, came_from=None):
    """Trace the geodesic ray (t, z, u) until it hits a vertex.

    Returns (end_corner, incoming_dir, developed_hit, path); the path is a
    list of (triangle, seg_start, seg_end) chart segments, and developed_hit
    is the hit point in the frame where the start point is the origin.
    """
    sigma = 1
    tau = vneg(z)
    path = []
    for _ in range(budget):
        hit = _exit_from_triangle(tri, t, z, u, came_from)
        if hit[0] == "vertex":
            pt = tri.polygons[t][hit[1]]
            path.append((t, z, pt))
            return (t, hit[1]), u, _dev_apply(sigma, tau, pt), path
        _kind, k, _t_par, exit_pt = hit
        path.append((t, z, exit_pt))
        _other, s, w = tri.complex.partner[(t, k)]
        t, z, u, came_from, _s = _cross_edge(tri, t, k, exit_pt, u)
        tau = vadd((sigma * w[0], sigma * w[1]), tau)
        sigma = sigma * s
    raise NotPeriodicDirectionError(direction_for_error, budget)


def _dev_apply(sigma, tau, x):
    v = x if sigma == 1 else vneg(x)
    return vadd(v, tau)


# ---------------------------------------------------------------------------
# saddle connections
# ---------------------------------------------------------------------------

class SaddleConnection:
    """Embedded geodesic segment between singularities.

    ends[i] = (tri_corner, outgoing chart direction) for the two endpoints;
    the holonomy is the developed vector from ends[0] to ends[1], with sign
    normalized so the first nonzero coordinate is positive.  The path is a
    list of chart segments in the traced orientation, or the marker
    ("edge", edge) when the connection is a triangulation edge.  Identity
    is by the scale-free star positions of the two end rays.
    """

    def __init__(self, surface, ends, holonomy, path, flipped):
        self.surface = surface
        self.ends = ends
        self.holonomy = holonomy
        self.path = path
        self.flipped = flipped  # True when the path was traced from ends[1]
        tri = surface.tri()
        self.start_class = tri.class_of_orig(ends[0][0])
        self.end_class = tri.class_of_orig(ends[1][0])
        self.length_sq = dot(holonomy, holonomy)
        self._key = None

    def end_ray_key(self, end_idx):
        """Star position key of this endpoint's outgoing ray."""
        corner, u = self.ends[end_idx]
        star = self.surface.tri().complex.star_of(corner)
        return star.locate_ray(corner, u)

    def _end_id(self, end_idx):
        corner, _u = self.ends[end_idx]
        tri = self.surface.tri()
        cid = tri.complex.class_of[corner]
        star = tri.complex.stars[cid]
        return (cid,) + star.canonical_key(self.end_ray_key(end_idx))

    def key(self):
        if self._key is None:
            self._key = tuple(sorted([self._end_id(0), self._end_id(1)]))
        return self._key

    def __eq__(self, other):
        return isinstance(other, SaddleConnection) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return "SaddleConnection(%d->%d, hol=(%.4f, %.4f))" % (
            self.start_class, self.end_class,
            float(self.holonomy[0]), float(self.holonomy[1]))

    def sort_key(self):
        return (self.holonomy[0], self.holonomy[1]) + self.key()

    def direction(self):
        return Direction(self.holonomy)

    def is_edge(self):
        return len(self.path) == 1 and self.path[0][0] == "edge"

    def interior_segments(self):
        """Chart segments of the connection (traced orientation)."""
        if self.is_edge():
            t, e = self.path[0][1]
            a = self.surface.tri().polygons[t][e]
            b = self.surface.tri().polygons[t][(e + 1) % 3]
            return [(t, a, b)]
        return self.path

    def to_json(self):
        return {
            "start": self.start_class,
            "end": self.end_class,
            "holonomy": [_scalar_json(self.holonomy[0]),
                         _scalar_json(self.holonomy[1])],
            "holonomy_approx": [float(self.holonomy[0]),
                                float(self.holonomy[1])],
            "segments": len(self.interior_segments()),
        }


def _normalize_sc(surface, end0, end1, hol_from_0, path):
    h = hol_from_0
    if h[0] > 0 or (h[0] == 0 and h[1] > 0):
        return SaddleConnection(surface, (end0, end1), h, path, flipped=False)
    return SaddleConnection(surface, (end1, end0), vneg(h), path, flipped=True)


def _edge_sc_rep(tri, edge):
    other = tri.complex.partner[edge][0]
    return min(edge, other)


def _edge_saddle_connection(surface, rep_edge):
    tri = surface.tri()
    t, e = rep_edge
    u = vsub(tri.polygons[t][(e + 1) % 3], tri.polygons[t][e])
    end0 = ((t, e), u)
    end1 = ((t, (e + 1) % 3), vneg(u))
    return _normalize_sc(surface, end0, end1, u, [("edge", (t, e))])


def trace_saddle_connection(surface, corner, u, budget=TRACE_BUDGET,
                            direction_for_error=None):
    """Trace the separatrix leaving ``corner`` with chart direction u."""
    tri = surface.tri()
    t, v = corner
    z = tri.polygons[t][v]
    end_corner, u_in, dev, path = trace_to_vertex(
        tri, t, z, u, budget, direction_for_error)
    return _normalize_sc(surface, (corner, u), (end_corner, vneg(u_in)),
                         dev, path)


def enumerate_saddle_connections(surface, length_bound, sector=None,
                                 node_budget=UNFOLD_BUDGET):
    """All saddle connections with |holonomy| <= length_bound.

    Each connection appears once up to orientation reversal, sorted by
    holonomy and then a combinatorial key, so the order is deterministic.
    ``sector``, if given, is a pair of Directions delimiting the half-open
    ccw arc [d1, d2) of direction classes; d1 == d2 means no restriction.
    """
    field = surface.field
    bound = length_bound if hasattr(length_bound, "coords") \
        else field.element(length_bound)
    if not bound > 0:
        raise ValueError("length bound must be positive")
    bound_sq = bound * bound
    tri = surface.tri()
    found = {}

    def consider(sc):
        if sc.length_sq > bound_sq:
            return
        if sector is not None and not _in_sector(surface, sc.direction(), sector):
            return
        found.setdefault(sc.key(), sc)

    # triangulation edges are exactly the boundary-direction connections
    seen = set()
    for t in range(len(tri.polygons)):
        for e in range(3):
            rep = _edge_sc_rep(tri, (t, e))
            if rep not in seen:
                seen.add(rep)
                consider(_edge_saddle_connection(surface, rep))

    # cone unfolding from every corner; the visibility cone stays inside the
    # window's direction wedge, both spanning less than pi throughout
    nodes = 0
    for t0 in range(len(tri.polygons)):
        for v0 in range(3):
            origin = tri.polygons[t0][v0]
            a = vsub(tri.polygons[t0][(v0 + 1) % 3], origin)
            b = vsub(tri.polygons[t0][(v0 + 2) % 3], origin)
            stack = [(t0, (v0 + 1) % 3, 1, vneg(origin), a, b)]
            while stack:
                t, win, sigma, tau, L, R = stack.pop()
                nodes += 1
                if nodes > node_budget:
                    raise RuntimeError("unfolding budget exceeded")
                U = _dev_apply(sigma, tau, tri.polygons[t][win])
                W = _dev_apply(sigma, tau, tri.polygons[t][(win + 1) % 3])
                if seg_dist_sq_exceeds(U, W, bound_sq):
                    continue
                (t2, e2), s, w = tri.complex.partner[(t, win)]
                tau2 = vadd((sigma * w[0], sigma * w[1]), tau)
                sigma2 = sigma * s
                far = (e2 + 2) % 3
                C = _dev_apply(sigma2, tau2, tri.polygons[t2][far])
                before_L = not cross(L, C) > 0
                after_R = not cross(C, R) > 0
                if not before_L and not after_R:
                    if not dot(C, C) > bound_sq:
                        consider(trace_saddle_connection(surface, (t0, v0), C))
                    stack.append((t2, (e2 + 1) % 3, sigma2, tau2, L, C))
                    stack.append((t2, (e2 + 2) % 3, sigma2, tau2, C, R))
                elif before_L and not after_R:
                    stack.append((t2, (e2 + 2) % 3, sigma2, tau2, L, R))
                elif after_R and not before_L:
                    stack.append((t2, (e2 + 1) % 3, sigma2, tau2, L, R))
    return sorted(found.values(), key=lambda sc: sc.sort_key())


def _in_sector(surface, direction, sector):
    d1, d2 = sector
    d1, d2 = as_direction(surface, d1), as_direction(surface, d2)
    if d1.angle_cmp(d2) == 0:
        return True
    lo = d1.angle_cmp(direction) <= 0
    hi = direction.angle_cmp(d2) < 0
    if d1.angle_cmp(d2) < 0:
        return lo and hi
    return lo or hi


# ---------------------------------------------------------------------------
# cylinder decompositions
# ---------------------------------------------------------------------------

class CylinderCore:
    """Nonsingular closed geodesic at half height of a cylinder."""

    def __init__(self, cylinder_index, tri_index, point, direction):
        self.cylinder_index = cylinder_index
        self.tri_index = tri_index
        self.point = point
        self.direction = direction

    def __repr__(self):
        return "CylinderCore(%d)" % self.cylinder_index


class AnnularDecomposition:
    """Cylinders, core multi-curve, and spine of a periodic direction.

    Circumferences and widths are exact field elements in units of the
    direction vector's length, so moduli (circumference / width) are unit
    free and the area identity sum(C*W)*|d|^2 = area holds exactly.
    """

    def __init__(self, surface, direction, spine, components, cylinders,
                 cores, state_cycle, cycle_pair):
        self.surface = surface
        self.direction = direction
        self.spine = spine
        self.components = components
        self.cylinders = cylinders
        self.cores = cores
        self._state_cycle = state_cycle
        self._cycle_pair = cycle_pair

    def moduli(self):
        return [c / w for (c, w) in self.cylinders]

    def cylinder_of_side(self, sc_index, end):
        """Cylinder lying on the left when traveling from the given end."""
        return self._cycle_pair[self._state_cycle[(sc_index, end)]]

    def spine_keys(self):
        return {sc.key() for sc in self.spine}

    def to_json(self):
        return {
            "direction": self.direction.to_json(),
            "cylinders": [
                {"circumference": _scalar_json(c), "width": _scalar_json(w),
                 "circumference_approx": float(c), "width_approx": float(w),
                 "modulus_approx": float(c / w)}
                for (c, w) in self.cylinders
            ],
            "core_count": len(self.cores),
            "spine": [sc.to_json() for sc in self.spine],
            "spine_components": [sorted(c) for c in self.components],
        }


def _separatrix_starts(tri, star, dvec):
    """Outgoing rays in direction class +-dvec around one vertex star.

    Yields (corner, chart_dir, along_edge); the count always equals the cone
    angle multiple (one ray per half turn).
    """
    out = []
    for i, corner in enumerate(star.corners):
        for rho in (dvec, vneg(dvec)):
            if same_ray(rho, star.D[i + 1]):
                u = rho if star.sig[i] == 1 else vneg(rho)
                out.append((corner, u, True))
            elif in_halfopen_arc(star.D[i], star.D[i + 1], rho):
                u = rho if star.sig[i] == 1 else vneg(rho)
                out.append((corner, u, False))
    if len(out) != star.multiple:
        raise InvalidSurfaceError("separatrix count mismatch",
                                  (len(out), star.multiple))
    return out


def cylinder_decomposition(surface, direction, budget=TRACE_BUDGET):
    """Cylinders, core multi-curve and spine of a periodic direction.

    Raises NotPeriodicDirectionError when a separatrix fails to close up
    within the tracing budget.
    """
    direction = as_direction(surface, direction)
    dvec = direction.vector
    tri = surface.tri()
    spine = {}
    for star in tri.complex.stars:
        for (corner, u, along_edge) in _separatrix_starts(tri, star, dvec):
            if along_edge:
                t, v = corner
                e = (t, (v + 2) % 3)  # the edge from v-1 to v
                sc = _edge_saddle_connection(surface, _edge_sc_rep(tri, e))
            else:
                sc = trace_saddle_connection(surface, corner, u, budget,
                                             direction_for_error=direction)
            spine.setdefault(sc.key(), sc)
    spine = sorted(spine.values(), key=lambda sc: sc.sort_key())
    return _assemble_decomposition(surface, direction, spine)


def _assemble_decomposition(surface, direction, spine):
    """Cylinder structure from a complete spine (all critical leaves)."""
    tri = surface.tri()
    dvec = direction.vector
    for sc in spine:
        if not parallel(sc.holonomy, dvec):
            raise InvalidSurfaceError("spine connection not parallel to the "
                                      "direction", sc)

    # cyclic order of spine ends around each vertex class
    ends_by_class = {}
    for idx, sc in enumerate(spine):
        for e in (0, 1):
            cid = tri.complex.class_of[sc.ends[e][0]]
            ends_by_class.setdefault(cid, []).append(
                (sc.end_ray_key(e), idx, e))
    order = {}
    for cid, items in ends_by_class.items():
        star = tri.complex.stars[cid]
        items = star.sort_keys_with(items)
        if len(items) != star.multiple:
            raise InvalidSurfaceError("spine end count mismatch",
                                      (cid, len(items), star.multiple))
        ends_by_class[cid] = items
        for pos, (_key, idx, e) in enumerate(items):
            order[(idx, e)] = (cid, pos)

    # boundary walks: travel a connection keeping its cylinder on the left;
    # at the far vertex the boundary turns to the ccw predecessor end (the
    # gap swept clockwise from the incoming ray is the cylinder's flat pi)
    def next_state(state):
        idx, e = state
        cid, pos = order[(idx, 1 - e)]
        items = ends_by_class[cid]
        _k, idx2, e2 = items[(pos - 1) % len(items)]
        return (idx2, e2)

    cycles = []
    state_cycle = {}
    for idx in range(len(spine)):
        for e in (0, 1):
            if (idx, e) in state_cycle:
                continue
            st = (idx, e)
            cyc = []
            while st not in state_cycle:
                state_cycle[st] = len(cycles)
                cyc.append(st)
                st = next_state(st)
            cycles.append(cyc)

    dd = dot(dvec, dvec)
    t_of = [dot(sc.holonomy, dvec) / dd for sc in spine]
    cycle_len = []
    for cyc in cycles:
        total = None
        for (idx, _e) in cyc:
            term = t_of[idx] if t_of[idx] > 0 else -t_of[idx]
            total = term if total is None else total + term
        cycle_len.append(total)

    helper = _SpineGeometry(surface, spine, dvec)
    cycle_pair = {}
    cylinders = []
    cores = []
    for c0 in range(len(cycles)):
        if c0 in cycle_pair:
            continue
        idx, e = cycles[c0][0]
        width, hit_state, core_seed = helper.crossing_ray(idx, e)
        c1 = state_cycle[hit_state]
        if c1 in cycle_pair or cycle_len[c0] != cycle_len[c1]:
            raise InvalidSurfaceError("cylinder boundary walk inconsistent",
                                      (c0, c1))
        cyl = len(cylinders)
        cycle_pair[c0] = cyl
        cycle_pair[c1] = cyl
        cylinders.append((cycle_len[c0], width))
        cores.append(CylinderCore(cyl, *core_seed))

    total = None
    for (c, w) in cylinders:
        term = c * w
        total = term if total is None else total + term
    if total * dd * 2 != surface.area_twice():
        raise InvalidSurfaceError("cylinder areas do not tile the surface",
                                  float(total * dd))

    # spine components: connectivity through shared singularities
    parent = list(range(len(spine)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    seen_class = {}
    for idx, sc in enumerate(spine):
        for e in (0, 1):
            cls = tri.complex.class_of[sc.ends[e][0]]
            if cls in seen_class:
                a, b = find(seen_class[cls]), find(idx)
                if a != b:
                    parent[a] = b
            else:
                seen_class[cls] = idx
    comps = {}
    for idx in range(len(spine)):
        comps.setdefault(find(idx), []).append(idx)
    components = [sorted(v) for v in sorted(comps.values())]

    return AnnularDecomposition(surface, direction, spine, components,
                                cylinders, cores, state_cycle, cycle_pair)


class _SpineGeometry:
    """Transverse-ray plumbing shared by widths, pairing and intersections."""

    def __init__(self, surface, spine, dvec):
        self.surface = surface
        self.tri = surface.tri()
        self.spine = spine
        self.dvec = dvec
        self.dd = dot(dvec, dvec)
        self.edge_sc = {}
        for i, sc in enumerate(spine):
            if sc.is_edge():
                t, e = sc.path[0][1]
                self.edge_sc[(t, e)] = i
                self.edge_sc[self.tri.complex.partner[(t, e)][0]] = i
        self.per_tri = {}
        for i, sc in enumerate(spine):
            if sc.is_edge():
                continue
            for seg_idx, (t, a, b) in enumerate(sc.interior_segments()):
                self.per_tri.setdefault(t, []).append((i, seg_idx, a, b))

    def travel_dir(self, idx, from_end, seg_idx):
        """Chart direction of travel along spine[idx] from the given end,
        in the chart of the given interior segment."""
        sc = self.spine[idx]
        t, a, b = sc.interior_segments()[seg_idx]
        u = vsub(b, a)
        forward = (from_end == 0) != sc.flipped
        return u if forward else vneg(u)

    def edge_travel_from_end0(self, idx):
        """Travel direction from ends[0] of an edge connection, in the chart
        of its representative edge."""
        sc = self.spine[idx]
        t, e = sc.path[0][1]
        u = vsub(self.tri.polygons[t][(e + 1) % 3], self.tri.polygons[t][e])
        corner0, dir0 = sc.ends[0]
        if corner0 == (t, e) and same_ray(dir0, u):
            return u
        return vneg(u)

    # -- transverse rays -----------------------------------------------------

    def crossing_ray(self, idx, from_end, want_core=True):
        """Ray from spine[idx] into the cylinder on the left of travel.

        Returns (width, hit_state, core_seed); hit_state is the spine side
        facing back at the ray, core_seed a (tri, point, dir) at half width.
        Start points hitting a vertex are retried at other parameters.
        """
        for num, den in ((1, 2), (1, 3), (2, 3), (1, 5), (2, 5), (3, 5),
                         (1, 7), (3, 7), (1, 11), (1, 13)):
            try:
                return self._crossing_ray_from(idx, from_end,
                                               Fraction(num, den), want_core)
            except _VertexHit:
                continue
        raise InvalidSurfaceError("transverse ray kept hitting vertices", idx)

    def _crossing_ray_from(self, idx, from_end, param, want_core):
        sc = self.spine[idx]
        if sc.is_edge():
            t, e = sc.path[0][1]
            a = self.tri.polygons[t][e]
            b = self.tri.polygons[t][(e + 1) % 3]
            te0 = self.edge_travel_from_end0(idx)
            travel = te0 if from_end == 0 else vneg(te0)
            seg_dir = vsub(b, a)
            lam = param if same_ray(travel, seg_dir) else 1 - param
            z = vadd(a, (seg_dir[0] * lam, seg_dir[1] * lam))
            u = rot90(travel)
            if same_ray(travel, seg_dir):
                t0, z0, u0 = t, z, u  # ccw triangle lies left of its edges
            else:
                t0, z0, u0, _k, _s = _cross_edge(self.tri, t, e, z, u)
            return self._run_ray(t0, z0, u0, idx, want_core)
        t, z, travel = self._launch_point(sc, from_end, param)
        return self._run_ray(t, z, rot90(travel), idx, want_core)

    def _launch_point(self, sc, from_end, param):
        """Point at fraction ``param`` of the travel from the given end."""
        segs = sc.interior_segments()
        forward = (from_end == 0) != sc.flipped
        idxs = list(range(len(segs))) if forward else list(reversed(range(len(segs))))
        weights = []
        for i in idxs:
            t, a, b = segs[i]
            w = dot(vsub(b, a), self.dvec) / self.dd
            weights.append(w if w > 0 else -w)
        total = None
        for w in weights:
            total = w if total is None else total + w
        target = total * param
        acc = None
        for pos, i in enumerate(idxs):
            t, a, b = segs[i]
            w = weights[pos]
            new_acc = w if acc is None else acc + w
            if new_acc >= target:
                prev = acc if acc is not None else Fraction(0)
                lam = (target - prev) / w
                start, endp = (a, b) if forward else (b, a)
                seg_dir = vsub(endp, start)
                z = vadd(start, (seg_dir[0] * lam, seg_dir[1] * lam))
                return t, z, seg_dir
            acc = new_acc
        raise InvalidSurfaceError("parameter beyond the saddle connection",
                                  param)

    def _run_ray(self, t, z, u, start_idx, want_core):
        """Trace transversally until the first spine crossing."""
        dd = self.dd
        d_here = vneg(rot90(u))   # u was rot90(d-parallel travel)
        xi = Fraction(0)          # unsigned transverse progress, |d| units
        rate = None
        trail = []
        came_from = None
        first_leg = True
        for _ in range(TRACE_BUDGET):
            trail.append((t, z, u, d_here, xi))
            hit = _exit_from_triangle(self.tri, t, z, u, came_from)
            if hit[0] == "vertex":
                raise _VertexHit()
            _kind, k, _t_par, exit_pt = hit
            best = None
            for (j, seg_idx, a, b) in self.per_tri.get(t, ()):
                res = _seg_hit(z, exit_pt, a, b)
                if res is None:
                    continue
                lam, pt = res
                if first_leg and lam == 0:
                    continue
                if best is None or lam < best[0]:
                    best = (lam, j, seg_idx, pt)
            if best is not None:
                lam, j, seg_idx, pt = best
                step = vsub(pt, z)
                xi_hit = xi + self._abs(cross(d_here, step) / dd)
                w_from0 = self.travel_dir(j, 0, seg_idx)
                state = (j, 0) if cross(w_from0, u) < 0 else (j, 1)
                core = self._core_seed(trail, xi_hit) if want_core else None
                return xi_hit, state, core
            step = vsub(exit_pt, z)
            xi = xi + self._abs(cross(d_here, step) / dd)
            edge_hit = self.edge_sc.get((t, k))
            if edge_hit is not None:
                j = edge_hit
                w_from0 = self.edge_travel_from_end0(j)
                rep = self.spine[j].path[0][1]
                u_rep = u
                if (t, k) != rep:
                    _o, s, _w = self.tri.complex.partner[(t, k)]
                    u_rep = (s * u[0], s * u[1])
                state = (j, 0) if cross(w_from0, u_rep) < 0 else (j, 1)
                core = self._core_seed(trail + [(None, exit_pt, None, None, xi)],
                                       xi) if want_core else None
                return xi, state, core
            t2, z2, u2, k2, s = _cross_edge(self.tri, t, k, exit_pt, u)
            d_here = (s * d_here[0], s * d_here[1])
            t, z, u, came_from = t2, z2, u2, k2
            first_leg = False
        raise InvalidSurfaceError("transverse ray failed to terminate",
                                  start_idx)

    @staticmethod
    def _abs(x):
        return x if x > 0 else -x

    def _core_seed(self, trail, width):
        """Chart point at transverse height width/2 along the traced ray."""
        target = width / 2
        for i, (t, z, u, d_here, xi0) in enumerate(trail):
            if t is None:
                break
            xi1 = trail[i + 1][4] if i + 1 < len(trail) else width
            if xi1 <= target:
                continue
            if not xi0 <= target:
                raise InvalidSurfaceError("transverse progress not monotone",
                                          float(target))
            rate = self._abs(cross(d_here, u) / self.dd)
            lam = (target - xi0) / rate
            pt = vadd(z, (u[0] * lam, u[1] * lam))
            return (t, pt, d_here)
        raise InvalidSurfaceError("core seed not found", float(width))


class _VertexHit(Exception):
    pass


def _seg_hit(z, exit_pt, a, b):
    """Intersection of the leg [z, exit_pt] with segment [a, b].

    Returns (lam, point) with lam in [0, 1] along the leg, or None.
    """
    u = vsub(exit_pt, z)
    v = vsub(b, a)
    denom = cross(u, v)
    if denom == 0:
        return None
    dvec = vsub(a, z)
    lam = cross(dvec, v) / denom
    mu = cross(dvec, u) / denom
    if lam < 0 or lam > 1 or mu < 0 or mu > 1:
        return None
    return lam, vadd(z, (u[0] * lam, u[1] * lam))


# ---------------------------------------------------------------------------
# geodesic predicates
# ---------------------------------------------------------------------------

def is_flat_geodesic(surface, cycle):
    """Whether a closed edge path of saddle connections is a flat geodesic.

    ``cycle`` is a list of (SaddleConnection, from_end) pairs, consecutive
    ones sharing their junction singularity; a CylinderCore is accepted too
    (nonsingular, trivially geodesic).  At every junction the path must make
    an angle of at least pi on both sides; at marked points one side
    suffices.  Returns (ok, witness), witness naming the first bad corner.
    """
    if isinstance(cycle, CylinderCore):
        return True, None
    tri = surface.tri()
    n = len(cycle)
    if n == 0:
        raise ValueError("empty path")
    for i in range(n):
        sc, e = cycle[i]
        sc2, e2 = cycle[(i + 1) % n]
        arrive = tri.complex.class_of[sc.ends[1 - e][0]]
        depart = tri.complex.class_of[sc2.ends[e2][0]]
        if arrive != depart:
            raise ValueError("path is not closed at junction %d" % i)
    for i in range(n):
        sc, e = cycle[i]
        sc2, e2 = cycle[(i + 1) % n]
        cid = tri.complex.class_of[sc.ends[1 - e][0]]
        star = tri.complex.stars[cid]
        k_in = sc.end_ray_key(1 - e)
        k_out = sc2.end_ray_key(e2)
        marked = tri.orig_class[cid] in surface.marked
        if star.canonical_key(k_in) == star.canonical_key(k_out):
            return False, {"junction": i, "reason": "backtrack"}
        side1 = star.ccw_gap_at_least_pi(k_in, k_out)
        side2 = star.ccw_gap_at_least_pi(k_out, k_in)
        if marked:
            if not (side1 or side2):
                return False, {"junction": i, "reason": "both sides below pi"}
        elif not (side1 and side2):
            return False, {"junction": i,
                           "reason": "ccw side below pi" if not side1
                           else "cw side below pi"}
    return True, None


def has_bad_singularity(surface, sc_set):
    """Whether some singularity has all gaps between incident ends below pi.

    Returns (bad, witness); the witness lists the gap flags at the first bad
    point.  Singularities not touched by the set are not bad.
    """
    tri = surface.tri()
    ends_by_class = {}
    for sc in sc_set:
        for e in (0, 1):
            cid = tri.complex.class_of[sc.ends[e][0]]
            ends_by_class.setdefault(cid, []).append((sc.end_ray_key(e), sc, e))
    for cid in sorted(ends_by_class):
        star = tri.complex.stars[cid]
        items = star.sort_keys_with(ends_by_class[cid])
        gaps = []
        all_small = True
        for i in range(len(items)):
            k1 = items[i][0]
            k2 = items[(i + 1) % len(items)][0]
            ge_pi = star.ccw_gap_at_least_pi(k1, k2)
            gaps.append(ge_pi)
            if ge_pi:
                all_small = False
        if all_small:
            return True, {"class": tri.orig_class[cid],
                          "ends": len(items), "gaps_below_pi": len(gaps)}
    return False, None


def contains_spine_component(surface, sc_set, decomposition, j):
    """Whether sc_set contains every connection of spine component j."""
    if not 0 <= j < len(decomposition.components):
        raise IndexError("no such spine component")
    keys = {sc.key() for sc in sc_set}
    return all(decomposition.spine[i].key() in keys
               for i in decomposition.components[j])


# ---------------------------------------------------------------------------
# core intersections
# ---------------------------------------------------------------------------

def cores_intersect(surface, dec1, dec2, budget=TRACE_BUDGET):
    """Whether every core of dec2 transversely crosses the cylinders of dec1.

    Returns (ok, detail): parallel directions give (False, ...) since the
    two decompositions coincide; otherwise every core of dec2 is traced for
    one period and its passes through dec1's cylinders are counted.
    """
    if dec1.direction == dec2.direction:
        return False, {"reason": "same direction class"}
    helper = _SpineGeometry(surface, dec1.spine, dec1.direction.vector)
    tri = surface.tri()
    detail = []
    ok = True
    for core in dec2.cores:
        crossings = _trace_core_crossings(helper, tri, core, dec1, budget)
        if not crossings:
            ok = False
        counts = {}
        for cyl in crossings:
            counts[cyl] = counts.get(cyl, 0) + 1
        detail.append({"core": core.cylinder_index,
                       "passes": sorted(counts.items())})
    return ok, {"cores": detail}


def _trace_core_crossings(helper, tri, core, dec1, budget):
    """Cylinders of dec1 entered by one period of a dec2 core curve.

    The core is a closed nonsingular leaf, so the trace returns to its seed
    with the same direction after one period; crossings are counted with
    half-open leg conventions so shared leg endpoints are not double counted.
    """
    t, z, u = core.tri_index, core.point, core.direction
    # a seed on an edge must be pushed to the side its direction points into
    for k in range(3):
        A = tri.polygons[t][k]
        B = tri.polygons[t][(k + 1) % 3]
        if cross(vsub(B, A), vsub(z, A)) == 0 and cross(vsub(B, A), u) < 0:
            t, z, u, _k2, _s = _cross_edge(tri, t, k, z, u)
            break
    start = (t, z, u)
    entered = []
    first_leg = True
    for _ in range(budget):
        hit = _exit_from_triangle(tri, t, z, u, None if first_leg else came_from)
        if hit[0] == "vertex":
            raise InvalidSurfaceError("core curve hit a singularity", core)
        _kind, k, _t_par, exit_pt = hit
        # does this leg pass through the seed again (period complete)?
        lam_return = None
        if t == start[0] and not first_leg and same_ray(u, start[2]):
            res = _point_on_leg(z, exit_pt, start[1])
            if res is not None:
                lam_return = res
        hits = []
        for (j, seg_idx, a, b) in helper.per_tri.get(t, ()):
            res = _seg_hit(z, exit_pt, a, b)
            if res is None:
                continue
            lam, _pt = res
            if lam >= 1:
                continue  # counted as the next leg's lam == 0
            if lam_return is not None and lam >= lam_return:
                continue
            w_from0 = helper.travel_dir(j, 0, seg_idx)
            facing_end = 0 if cross(w_from0, u) < 0 else 1
            hits.append(dec1.cylinder_of_side(j, 1 - facing_end))
        entered.extend(hits)
        if lam_return is not None:
            return entered
        edge_hit = helper.edge_sc.get((t, k))
        if edge_hit is not None:
            j = edge_hit
            w_from0 = helper.edge_travel_from_end0(j)
            rep = helper.spine[j].path[0][1]
            u_rep = u
            if (t, k) != rep:
                _o, s, _w = tri.complex.partner[(t, k)]
                u_rep = (s * u[0], s * u[1])
            facing_end = 0 if cross(w_from0, u_rep) < 0 else 1
            entered.append(dec1.cylinder_of_side(j, 1 - facing_end))
        t, z, u, came_from, _s = _cross_edge(tri, t, k, exit_pt, u)
        first_leg = False
    raise NotPeriodicDirectionError(Direction(core.direction), budget)


def _point_on_leg(z, exit_pt, p):
    """Parameter of p on the leg [z, exit_pt), or None."""
    u = vsub(exit_pt, z)
    w = vsub(p, z)
    if cross(u, w) != 0:
        return None
    den = dot(u, u)
    lam = dot(w, u) / den
    if lam < 0 or lam >= 1:
        return None
    return lam


# ---------------------------------------------------------------------------
# affine action
# ---------------------------------------------------------------------------

def _map_tri_ray(surface, auto, corner, u):
    """Image of a ray at a triangulated corner under an automorphism."""
    tri = surface.tri()
    t, v = corner
    p = tri.tri_origin[t]
    ov = tri.tri_vertices[t][v]
    p2 = auto.poly_map[p]
    ov2 = auto.vertex_maps[p][ov]
    u2 = auto.map_direction(p, u)
    # find the triangulated corner at (p2, ov2) whose wedge holds u2
    for t2 in range(len(tri.polygons)):
        if tri.tri_origin[t2] != p2:
            continue
        for v2 in range(3):
            if tri.tri_vertices[t2][v2] != ov2:
                continue
            a = vsub(tri.polygons[t2][(v2 + 1) % 3], tri.polygons[t2][v2])
            b = vsub(tri.polygons[t2][(v2 + 2) % 3], tri.polygons[t2][v2])
            if same_ray(u2, a) or same_ray(u2, b) or \
                    (cross(a, u2) > 0 and cross(u2, b) > 0):
                return (t2, v2), u2
    raise InvalidSurfaceError("mapped ray not found in any corner",
                              (corner, p2, ov2))


def _map_saddle_connection(surface, auto, sc):
    corner, u = sc.ends[0]
    corner2, u2 = _map_tri_ray(surface, auto, corner, u)
    img = trace_saddle_connection(surface, corner2, u2)
    expect = auto.matvec(sc.holonomy)
    if not (parallel(img.holonomy, expect)
            and dot(img.holonomy, img.holonomy) == dot(expect, expect)):
        raise InvalidSurfaceError("affine image of a connection mismatched",
                                  sc)
    return img


def _map_cycle_entry(surface, auto, sc, e):
    corner, u = sc.ends[e]
    corner2, u2 = _map_tri_ray(surface, auto, corner, u)
    img = _map_saddle_connection(surface, auto, sc)
    tri = surface.tri()
    cid2 = tri.complex.class_of[corner2]
    star = tri.complex.stars[cid2]
    key2 = (cid2,) + star.canonical_key(star.locate_ray(corner2, u2))
    for e2 in (0, 1):
        if img._end_id(e2) == key2:
            return img, e2
    raise InvalidSurfaceError("mapped end not found", sc)


def apply_affine(surface, auto, x):
    """Image of saddle connections, sets, cycles or decompositions.

    Holonomies transform by the derivative; decompositions are rebuilt from
    the mapped spine and cross-checked against the unit-scaling identities.
    """
    if isinstance(x, SaddleConnection):
        return _map_saddle_connection(surface, auto, x)
    if isinstance(x, AnnularDecomposition):
        dvec = x.direction.vector
        new_dir = Direction(auto.matvec(dvec))
        spine = [_map_saddle_connection(surface, auto, sc) for sc in x.spine]
        dedup = {}
        for sc in spine:
            dedup.setdefault(sc.key(), sc)
        spine = sorted(dedup.values(), key=lambda sc: sc.sort_key())
        out = _assemble_decomposition(surface, new_dir, spine)
        # unit bookkeeping: circumferences are preserved, widths scale by
        # |d|^2 / |Md|^2 (areas are preserved, det = 1)
        scale = dot(dvec, dvec) / dot(auto.matvec(dvec), auto.matvec(dvec))
        expect = sorted([(c, w * scale) for (c, w) in x.cylinders],
                        key=lambda cw: (cw[0], cw[1]))
        got = sorted(out.cylinders, key=lambda cw: (cw[0], cw[1]))
        if expect != got:
            raise InvalidSurfaceError("mapped decomposition inconsistent",
                                      (x.direction, new_dir))
        return out
    if isinstance(x, (list, tuple, set, frozenset)):
        items = list(x)
        if items and isinstance(items[0], tuple):
            return [(lambda p: _map_cycle_entry(surface, auto, *p))(p)
                    for p in items]
        mapped = [_map_saddle_connection(surface, auto, sc) for sc in items]
        return set(mapped) if isinstance(x, (set, frozenset)) else mapped
    raise TypeError("cannot apply an automorphism to %r" % type(x))
