r"""
Half-translation surfaces from polygon gluings.

A surface is a list of planar polygons (counterclockwise vertex loops with
number field coordinates) plus a pairing of boundary edges.  Each pairing
carries a sign in {+1, -1} and a translation w, identifying the charts by
zeta = sign * zeta' + w, with the start of one edge matched to the end of
the other.  Cone points are vertex classes; their angles are integer
multiples of pi, computed exactly by walking the corner star and counting
half-plane crossings (no transcendental arithmetic anywhere).

Every unmarked cone point must have angle at least 3*pi; marked points may
be flatter.  Gauss-Bonnet is validated exactly on construction.
"""

from fractions import Fraction

from ..numfield import NumberField, NumberFieldElement, minpoly_2cos_pi_over, cos_multiple
from .planar import (
    cross, dot, vsub, vadd, vneg, same_ray, line_crossings,
    point_in_triangle, in_halfopen_arc, ccw_cmp_from,
)

__all__ = [
    "HalfTranslationSurface", "InvalidSurfaceError", "AffineAuto",
    "build_double_polygon", "unit_square_torus", "surface_invariants",
    "identity_automorphism", "rotation_automorphism",
]


class InvalidSurfaceError(ValueError):
    """Gluing data fails the half-translation axioms; carries a witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


# position keys for rays around a vertex: (arc index, 0 mid / 1 end, vector)
_MID, _END = 0, 1


class Star:
    """Cyclic corner structure around one vertex class.

    corners[i] is the i-th corner (polygon, vertex) of the ccw walk, sig[i]
    the chart-to-developed sign for that corner, and D[i] the developed
    direction separating corner i from corner i+1 (D[0] is the developed
    start direction of corner 0; D[r] closes up to +-D[0]).  The cone angle
    is multiple * pi.
    """

    def __init__(self, corners, sig, D, multiple):
        self.corners = corners
        self.sig = sig
        self.D = D
        self.multiple = multiple
        self.index = {c: i for i, c in enumerate(corners)}

    def locate_ray(self, corner, direction):
        """Position key of an outgoing ray at the given corner.

        The direction is in the corner's own chart.  Keys sort rays in ccw
        cyclic order around the vertex; a ray along the boundary between two
        corners gets the arc-end key of the earlier corner.
        """
        i = self.index[corner]
        dev = direction if self.sig[i] == 1 else vneg(direction)
        if same_ray(dev, self.D[i + 1]):
            return (i, _END, self.D[i + 1])
        if same_ray(dev, self.D[i]):
            prev = (i - 1) % len(self.corners)
            return (prev, _END, self.D[i])
        return (i, _MID, dev)

    def ccw_gap_at_least_pi(self, key_from, key_to):
        """Whether the ccw angle from ray key_from to ray key_to is >= pi.

        The sweep from one ray reaches pi exactly when it crosses the line
        of that ray, so this counts crossings of the line of key_from.
        """
        return self.crossings_between(key_from, key_to, key_from[2]) >= 1

    def crossings_between(self, key_from, key_to, line_dir):
        """Crossings of {+line_dir, -line_dir} in the ccw sweep (from, to].

        The sweep is decomposed into half-open pieces (one per corner arc
        traversed), so nothing is double counted.  Identical keys give the
        full cone circuit.
        """
        r = len(self.corners)
        ia, fa, va = key_from
        ib, fb, vb = key_to
        if ia == ib and fa == _MID and self._key_order(key_from, key_to) < 0:
            return self._count_in(va, vb, line_dir)
        count = self._count_in(va, self.D[ia + 1], line_dir)
        arc = (ia + 1) % r
        while arc != ib:
            count += self._count_in(self.D[arc], self.D[arc + 1], line_dir)
            arc = (arc + 1) % r
        count += self._count_in(self.D[ib], vb, line_dir)
        return count

    @staticmethod
    def _count_in(start, end, line_dir):
        if same_ray(start, end):
            return 0
        n = 0
        if in_halfopen_arc(start, end, line_dir):
            n += 1
        if in_halfopen_arc(start, end, vneg(line_dir)):
            n += 1
        return n

    def _key_order(self, ka, kb):
        """Cyclic walk order of two ray keys (ties are equal positions)."""
        ia, fa, va = ka
        ib, fb, vb = kb
        if (ia, fa) != (ib, fb):
            return -1 if (ia, fa) < (ib, fb) else 1
        if fa == _END:
            return 0
        return ccw_cmp_from(self.D[ia], va, vb)

    def sort_keys_with(self, items):
        """Sort (key, ...) tuples by the ray key, in ccw walk order."""
        import functools

        def cmp(a, b):
            return self._key_order(a[0], b[0])
        return sorted(items, key=functools.cmp_to_key(cmp))

    def canonical_key(self, key):
        """Hashable scale-free form of a ray position key."""
        from .planar import canonical_ray
        arc, flag, vec = key
        if flag == _END:
            return (arc, flag)
        c = canonical_ray(vec)
        return (arc, flag, c[0].coords, c[1].coords)


class PolygonComplex:
    """Validated polygon gluing: partners, vertex classes and corner stars."""

    def __init__(self, polygons, gluings):
        self.polygons = polygons
        self.gluings = list(gluings)
        self._build_partner()
        self._build_classes()
        self._build_stars()

    # -- construction plumbing ----------------------------------------------

    def edge_count(self, p):
        return len(self.polygons[p])

    def vertex(self, p, v):
        poly = self.polygons[p]
        return poly[v % len(poly)]

    def edge_vec(self, p, i):
        poly = self.polygons[p]
        a = poly[i % len(poly)]
        b = poly[(i + 1) % len(poly)]
        return vsub(b, a)

    def _build_partner(self):
        partner = {}
        for g in self.gluings:
            e1, e2, s, w = g
            e1, e2 = tuple(e1), tuple(e2)
            if s not in (1, -1):
                raise InvalidSurfaceError("gluing sign must be +1 or -1", g)
            if e1 == e2:
                raise InvalidSurfaceError("edge glued to itself", g)
            for e in (e1, e2):
                if e in partner:
                    raise InvalidSurfaceError("edge glued twice", e)
            # chart relation: zeta_{p(e1)} = s * zeta_{p(e2)} + w
            p1, i1 = e1
            p2, i2 = e2
            a1 = self.vertex(p1, i1)
            b1 = self.vertex(p1, i1 + 1)
            a2 = self.vertex(p2, i2)
            b2 = self.vertex(p2, i2 + 1)
            s_w = lambda x: (s * x[0] + w[0], s * x[1] + w[1])
            if s_w(a2) != b1 or s_w(b2) != a1:
                raise InvalidSurfaceError(
                    "glued edges have mismatched holonomy", (e1, e2))
            partner[e1] = (e2, s, w)
            partner[e2] = (e1, s, (-s * w[0], -s * w[1]))
        for p in range(len(self.polygons)):
            for i in range(self.edge_count(p)):
                if (p, i) not in partner:
                    raise InvalidSurfaceError("unglued edge", (p, i))
        self.partner = partner

    def _next_corner(self, corner):
        """Ccw neighbor of a corner around its vertex, with crossing sign."""
        p, v = corner
        n = self.edge_count(p)
        e = (p, (v - 1) % n)
        (q, j), s, _w = self.partner[e]
        return (q, j), s

    def _build_classes(self):
        ids = {}
        classes = []
        for p in range(len(self.polygons)):
            for v in range(self.edge_count(p)):
                if (p, v) in ids:
                    continue
                cid = len(classes)
                cyc = []
                c = (p, v)
                while c not in ids:
                    ids[c] = cid
                    cyc.append(c)
                    c, _ = self._next_corner(c)
                if c != (p, v):
                    raise InvalidSurfaceError("corner walk failed to close", c)
                classes.append(cyc)
        self.class_of = ids
        self.class_corners = classes

    def _corner_dirs(self, corner):
        p, v = corner
        n = self.edge_count(p)
        a = self.edge_vec(p, v)
        b = vsub(self.vertex(p, v - 1), self.vertex(p, v))
        return a, b

    def _build_stars(self):
        self.stars = []
        for cyc in self.class_corners:
            sig = []
            D = []
            s_acc = 1
            for k, corner in enumerate(cyc):
                sig.append(s_acc)
                a, b = self._corner_dirs(corner)
                if k == 0:
                    D.append(a)
                b_dev = b if s_acc == 1 else vneg(b)
                D.append(b_dev)
                _next, s = self._next_corner(corner)
                s_acc *= s
            # closure: D[r] must be +-D[0]
            if cross(D[-1], D[0]) != 0:
                raise InvalidSurfaceError("developed star fails to close", cyc[0])
            multiple = 0
            for i in range(len(cyc)):
                multiple += line_crossings(D[i], D[i + 1], D[0])
            self.stars.append(Star(cyc, sig, D, multiple))

    # -- queries -------------------------------------------------------------

    def star_of(self, corner):
        return self.stars[self.class_of[corner]]

    def total_area_twice(self):
        total = None
        for poly in self.polygons:
            for i in range(len(poly)):
                c = cross(poly[i], poly[(i + 1) % len(poly)])
                total = c if total is None else total + c
        return total


class HalfTranslationSurface:
    """Polygons with +-translation edge gluings and marked points."""

    def __init__(self, field, polygons, gluings, marked=(), meta=None):
        self.field = field
        self.polygons = [
            [(field.element(x), field.element(y)) for (x, y) in poly]
            for poly in polygons
        ]
        for poly in self.polygons:
            if len(poly) < 3:
                raise InvalidSurfaceError("polygon with fewer than 3 vertices")
        self.complex = PolygonComplex(self.polygons, gluings)
        self.gluings = self.complex.gluings
        self.marked = self._resolve_marked(marked)
        self.meta = dict(meta or {})
        self._tri = None
        self._validate_angles()

    # -- invariants ----------------------------------------------------------

    def _resolve_marked(self, marked):
        out = set()
        for m in marked:
            if isinstance(m, int):
                out.add(m)
            else:
                out.add(self.complex.class_of[tuple(m)])
        return out

    def _validate_angles(self):
        for cid, star in enumerate(self.complex.stars):
            if star.multiple < 3 and cid not in self.marked:
                raise InvalidSurfaceError(
                    "unmarked cone point with angle below 3*pi",
                    (cid, star.multiple))
            if star.multiple < 1:
                raise InvalidSurfaceError("degenerate cone point", cid)
        V = len(self.complex.stars)
        E = sum(len(p) for p in self.polygons) // 2
        F = len(self.polygons)
        chi = V - E + F
        deficit = sum(2 - s.multiple for s in self.complex.stars)
        if deficit != 2 * chi:
            raise InvalidSurfaceError(
                "Gauss-Bonnet violated", (deficit, 2 * chi))
        self.euler_char = chi

    @property
    def genus(self):
        chi = self.euler_char
        if chi % 2 != 0 or chi > 2:
            raise InvalidSurfaceError("not a closed orientable surface", chi)
        return (2 - chi) // 2

    def cone_points(self):
        return [(cid, star.multiple)
                for cid, star in enumerate(self.complex.stars)]

    def area_twice(self):
        return self.complex.total_area_twice()

    # -- triangulated view ----------------------------------------------------

    def tri(self):
        if self._tri is None:
            self._tri = TriangulatedSurface(self)
        return self._tri

    # -- serialization ---------------------------------------------------------

    def to_json(self):
        def scalar(x):
            return [_frac_str(c) for c in x.coords]
        return {
            "field": self.field.to_json(),
            "polygons": [[[scalar(x), scalar(y)] for (x, y) in poly]
                         for poly in self.polygons],
            "polygons_approx": [[[float(x), float(y)] for (x, y) in poly]
                                for poly in self.polygons],
            "gluings": [[list(e1), list(e2), s, [scalar(w[0]), scalar(w[1])]]
                        for (e1, e2, s, w) in self.gluings],
            "marked": sorted(self.marked),
        }

    @staticmethod
    def from_json(data):
        field = NumberField.from_json(data["field"])

        def scalar(lst):
            return field.element([Fraction(c) for c in lst])
        polygons = [[(scalar(x), scalar(y)) for (x, y) in poly]
                    for poly in data["polygons"]]
        gluings = [(tuple(e1), tuple(e2), s, (scalar(w[0]), scalar(w[1])))
                   for (e1, e2, s, w) in data["gluings"]]
        return HalfTranslationSurface(field, polygons, gluings,
                                      marked=data.get("marked", ()))


def _frac_str(q):
    q = Fraction(q)
    return "%d/%d" % (q.numerator, q.denominator)


def surface_invariants(surface):
    """Genus, Euler characteristic and cone points of a valid surface."""
    return {
        "genus": surface.genus,
        "euler_char": surface.euler_char,
        "cone_points": surface.cone_points(),
        "marked": sorted(surface.marked),
    }


# ---------------------------------------------------------------------------
# triangulation
# ---------------------------------------------------------------------------

def triangulate_polygon(coords):
    """Ear clipping for a simple ccw polygon; exact predicates, no new vertices."""
    n = len(coords)
    idx = list(range(n))
    tris = []
    while len(idx) > 3:
        for k in range(len(idx)):
            i0 = idx[(k - 1) % len(idx)]
            i1 = idx[k]
            i2 = idx[(k + 1) % len(idx)]
            a, b, c = coords[i0], coords[i1], coords[i2]
            turn = cross(vsub(b, a), vsub(c, b))
            if not turn > 0:
                continue
            blocked = False
            for j in idx:
                if j in (i0, i1, i2):
                    continue
                if point_in_triangle(coords[j], a, b, c) >= 0:
                    blocked = True
                    break
            if not blocked:
                tris.append((i0, i1, i2))
                idx.pop(k)
                break
        else:
            raise InvalidSurfaceError("polygon is not simple", coords)
    tris.append(tuple(idx))
    return tris


class TriangulatedSurface:
    """Triangle refinement of a surface; shares charts with the original.

    Triangles keep the coordinates of their original polygon, so no new
    charts appear: diagonals are glued by the identity, original edges keep
    their sign and translation.
    """

    def __init__(self, surface):
        self.surface = surface
        tri_polys = []
        self.tri_origin = []      # triangle -> original polygon
        self.tri_vertices = []    # triangle -> (orig vertex index) * 3
        side_of = {}              # (p, v_start, v_end) -> (tri, side)
        for p, poly in enumerate(surface.polygons):
            for t in triangulate_polygon(poly):
                tid = len(tri_polys)
                tri_polys.append([poly[t[0]], poly[t[1]], poly[t[2]]])
                self.tri_origin.append(p)
                self.tri_vertices.append(t)
                for a in range(3):
                    side_of[(p, t[a], t[(a + 1) % 3])] = (tid, a)
        gluings = []
        zero = surface.field.zero()
        seen = set()
        for key, (tid, a) in side_of.items():
            p, u, v = key
            if key in seen:
                continue
            n = len(surface.polygons[p])
            if (v - u) % n == 1:
                # original polygon boundary edge (p, u)
                (q, j), s, w = surface.complex.partner[(p, u)]
                m = len(surface.polygons[q])
                other = side_of[(q, j, (j + 1) % m)]
                gluings.append(((tid, a), other, s, w))
                seen.add(key)
                seen.add((q, j, (j + 1) % m))
            else:
                # internal diagonal: partner is the reversed side, same chart
                other = side_of[(p, v, u)]
                gluings.append(((tid, a), other, 1, (zero, zero)))
                seen.add(key)
                seen.add((p, v, u))
        self.complex = PolygonComplex(tri_polys, gluings)
        self.polygons = tri_polys
        # map triangle vertex classes back to original surface classes
        self.orig_class = {}
        for tid, t in enumerate(self.tri_vertices):
            p = self.tri_origin[tid]
            for a in range(3):
                mine = self.complex.class_of[(tid, a)]
                orig = surface.complex.class_of[(p, t[a])]
                if mine in self.orig_class and self.orig_class[mine] != orig:
                    raise InvalidSurfaceError(
                        "triangulation changed the vertex identification", tid)
                self.orig_class[mine] = orig
        # sanity: angles must agree classwise
        for mine, orig in self.orig_class.items():
            if (self.complex.stars[mine].multiple
                    != surface.complex.stars[orig].multiple):
                raise InvalidSurfaceError("triangulation changed a cone angle",
                                          (mine, orig))

    def class_of_orig(self, tri_corner):
        return self.orig_class[self.complex.class_of[tri_corner]]

    def chart_map(self, from_edge):
        """(other_edge, s, w) with points mapped x -> s*x + w into the
        neighboring triangle's chart when crossing from_edge."""
        (other, s, w) = self.complex.partner[from_edge]
        # partner stores the map INTO this chart; invert for the crossing
        return other, s, (-s * w[0], -s * w[1])


# ---------------------------------------------------------------------------
# affine automorphisms
# ---------------------------------------------------------------------------

class AffineAuto:
    """Affine self-map: polygon permutation, per-polygon sign, derivative.

    The chart map on polygon p is x -> eps_p * M x + t_p where M is the
    global derivative (determinant 1) and eps_p in {+1, -1}.  Validation
    checks every vertex image and that glued edges map to glued edges.
    """

    def __init__(self, surface, derivative, poly_map, vertex_maps, poly_signs=None):
        self.surface = surface
        self.M = tuple(tuple(surface.field.element(x) for x in row)
                       for row in derivative)
        det = self.M[0][0] * self.M[1][1] - self.M[0][1] * self.M[1][0]
        if det != surface.field.one():
            raise ValueError("derivative must have determinant 1")
        self.poly_map = list(poly_map)
        self.vertex_maps = [list(vm) for vm in vertex_maps]
        self.poly_signs = list(poly_signs) if poly_signs else [1] * len(poly_map)
        self.poly_trans = []
        self._validate()

    def matvec(self, u):
        return (self.M[0][0] * u[0] + self.M[0][1] * u[1],
                self.M[1][0] * u[0] + self.M[1][1] * u[1])

    def map_direction(self, p, u):
        v = self.matvec(u)
        return v if self.poly_signs[p] == 1 else vneg(v)

    def map_point(self, p, x):
        v = self.matvec(x)
        if self.poly_signs[p] == -1:
            v = vneg(v)
        return vadd(v, self.poly_trans[p])

    def map_corner(self, corner):
        p, v = corner
        return (self.poly_map[p], self.vertex_maps[p][v])

    def map_edge(self, edge):
        p, i = edge
        n = len(self.surface.polygons[p])
        q = self.poly_map[p]
        a = self.vertex_maps[p][i]
        b = self.vertex_maps[p][(i + 1) % n]
        m = len(self.surface.polygons[q])
        if (b - a) % m != 1:
            raise InvalidSurfaceError("vertex map does not send edges to edges",
                                      edge)
        return (q, a)

    def _validate(self):
        S = self.surface
        for p, poly in enumerate(S.polygons):
            q = self.poly_map[p]
            vm = self.vertex_maps[p]
            if len(vm) != len(poly) or len(S.polygons[q]) != len(poly):
                raise InvalidSurfaceError("polygon map changes edge counts", p)
            base = self.matvec(poly[0])
            if self.poly_signs[p] == -1:
                base = vneg(base)
            t = vsub(S.polygons[q][vm[0]], base)
            self.poly_trans.append(t)
            for v, pt in enumerate(poly):
                img = self.matvec(pt)
                if self.poly_signs[p] == -1:
                    img = vneg(img)
                img = vadd(img, t)
                if img != S.polygons[q][vm[v]]:
                    raise InvalidSurfaceError(
                        "affine map does not match the vertex map", (p, v))
        for p in range(len(S.polygons)):
            for i in range(len(S.polygons[p])):
                e = (p, i)
                (e2, _s, _w) = S.complex.partner[e]
                if S.complex.partner[self.map_edge(e)][0] != self.map_edge(e2):
                    raise InvalidSurfaceError(
                        "permutation inconsistent with gluing", e)

    def derivative_floats(self):
        return [[float(x) for x in row] for row in self.M]


def identity_automorphism(surface):
    n = len(surface.polygons)
    one = surface.field.one()
    zero = surface.field.zero()
    return AffineAuto(
        surface,
        ((one, zero), (zero, one)),
        list(range(n)),
        [list(range(len(surface.polygons[p]))) for p in range(n)],
    )


# ---------------------------------------------------------------------------
# model surfaces
# ---------------------------------------------------------------------------

def build_double_polygon(g):
    """Two regular (2g+1)-gons sharing an edge, opposite sides glued.

    Unit side length.  Coordinates live in Q(2 cos(pi / (2(2g+1)))), which
    contains every cos and sin of the polygon angles.  The result is a
    closed genus g surface with a single cone point of angle (4g-2)*pi.
    """
    if g < 2:
        raise ValueError("g must be >= 2")
    n = 2 * g + 1
    field = minpoly_2cos_pi_over(2 * n)
    half = Fraction(1, 2)

    def cosk(k):
        return cos_multiple(field, k) * half

    def unit(k):
        # (cos, sin) of angle 2*pi*k / n, as multiples of pi/(2n): 4k and n-4k
        return (cosk(4 * k), cosk(n - 4 * k))

    verts1 = [(field.zero(), field.zero())]
    for k in range(n - 1):
        e = unit(k)
        verts1.append(vadd(verts1[-1], e))
    one = field.one()
    verts2 = [(one - x, field.zero() - y) for (x, y) in verts1]
    polys = [verts1, verts2]
    gluings = []
    for j in range(n):
        e1 = (0, j)
        e2 = (1, j)
        # identification: start of e2 maps to end of e1 (sign +1)
        w = vsub(verts1[(j + 1) % n], verts2[j])
        gluings.append((e1, e2, 1, w))
    surf = HalfTranslationSurface(field, polys, gluings,
                                  meta={"kind": "double_polygon", "g": g})
    assert len(surf.complex.stars) == 1
    assert surf.complex.stars[0].multiple == 4 * g - 2
    assert surf.genus == g
    return surf


def rotation_automorphism(surface):
    """Order 2g+1 rotation of the double polygon surface.

    Rotates each polygon about its own center by 2*pi/(2g+1); this shifts
    every vertex index by one and preserves the gluing pattern.
    """
    if surface.meta.get("kind") != "double_polygon":
        raise ValueError("rotation automorphism is defined for double polygons")
    g = surface.meta["g"]
    n = 2 * g + 1
    field = surface.field
    half = Fraction(1, 2)
    c = cos_multiple(field, 4) * half          # cos(2 pi / n)
    s = cos_multiple(field, n - 4) * half      # sin(2 pi / n)
    M = ((c, field.zero() - s), (s, c))
    vm = [[(v + 1) % n for v in range(n)] for _ in range(2)]
    return AffineAuto(surface, M, [0, 1], vm)


def unit_square_torus(field=None):
    """Flat torus from the unit square; the vertex is marked (angle 2*pi)."""
    from ..numfield import rationals_field
    field = field or rationals_field()
    z, o = field.zero(), field.one()
    verts = [(z, z), (o, z), (o, o), (z, o)]
    gluings = [
        ((0, 0), (0, 2), 1, (z, z - o)),
        ((0, 1), (0, 3), 1, (o, z)),
    ]
    return HalfTranslationSurface(field, [verts], gluings, marked=[(0, 0)],
                                  meta={"kind": "square_torus"})
