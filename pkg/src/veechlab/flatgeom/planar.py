r"""
Exact planar predicates over number field scalars.

Angles are never evaluated as real numbers.  Everything reduces to signs of
cross and dot products, plus counts of how often a rotating direction
crosses a fixed line.  A counterclockwise sweep by total angle m*pi starting
on a line crosses that line exactly m times, which turns cone angles and
"is this gap at least pi" questions into integer bookkeeping.
"""

__all__ = [
    "cross", "dot", "vsub", "vadd", "vneg", "vscale",
    "angle_class", "ccw_cmp_from", "in_halfopen_arc",
    "line_crossings", "arc_contains_at_least_pi",
    "normalize_direction", "parallel", "same_ray",
]


def cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def dot(u, v):
    return u[0] * v[0] + u[1] * v[1]


def vadd(u, v):
    return (u[0] + v[0], u[1] + v[1])


def vsub(u, v):
    return (u[0] - v[0], u[1] - v[1])


def vneg(u):
    return (-u[0], -u[1])


def vscale(u, c):
    return (u[0] * c, u[1] * c)


def is_zero_vec(u):
    return u[0] == 0 and u[1] == 0


def parallel(u, v):
    return cross(u, v) == 0


def same_ray(u, v):
    """u and v point in exactly the same direction (positive multiples)."""
    return cross(u, v) == 0 and dot(u, v) > 0


def normalize_direction(u):
    """Canonical representative of the direction class {u, -u}.

    First nonzero coordinate made positive.
    """
    if is_zero_vec(u):
        raise ValueError("zero vector has no direction")
    if u[0] != 0:
        return u if u[0] > 0 else vneg(u)
    return u if u[1] > 0 else vneg(u)


def canonical_ray(u):
    """Scale-free representative of the ray through u (sign preserved)."""
    if is_zero_vec(u):
        raise ValueError("zero vector has no ray")
    a = abs(u[0]) if u[0] != 0 else abs(u[1])
    return (u[0] / a, u[1] / a)


def angle_class(base, x):
    """Quadrant-free class of the ccw angle from base to x.

    0: angle 0, 1: in (0, pi), 2: exactly pi, 3: in (pi, 2pi).
    """
    c = cross(base, x)
    if c > 0:
        return 1
    if c < 0:
        return 3
    return 0 if dot(base, x) > 0 else 2


def ccw_cmp_from(base, x, y):
    """Compare ccw angles of x and y measured from base; -1, 0 or +1."""
    cx, cy = angle_class(base, x), angle_class(base, y)
    if cx != cy:
        return -1 if cx < cy else 1
    if cx in (0, 2):
        return 0
    c = cross(x, y)
    if c > 0:
        return -1
    if c < 0:
        return 1
    return 0


def in_halfopen_arc(start, end, x):
    """x lies in the ccw arc (start, end], where the arc angle is in (0, 2pi).

    ``end`` parallel-and-equal to ``start`` is not supported (the arc angle
    must be strictly less than a full turn).
    """
    if angle_class(start, x) == 0:
        return False
    return ccw_cmp_from(start, x, end) <= 0


def line_crossings(start, end, line_dir):
    """How many of the rays {+line_dir, -line_dir} lie in the arc (start, end].

    The arc is the ccw sweep from start to end, of angle in (0, 2pi).
    Summing this over consecutive direction pairs of a full cone walk gives
    the cone angle as a multiple of pi.
    """
    n = 0
    if in_halfopen_arc(start, end, line_dir):
        n += 1
    if in_halfopen_arc(start, end, vneg(line_dir)):
        n += 1
    return n


def arc_contains_at_least_pi(start, end):
    """Whether the ccw angle from start to end is at least pi.

    The sweep reaches pi exactly when it crosses the line of ``start``, so
    this is a single crossing test of the ray -start.
    """
    return in_halfopen_arc(start, end, vneg(start))


def segments_cross(a, b, c, d, include_endpoints=False):
    """Exact test whether open segments (a,b) and (c,d) intersect.

    With include_endpoints, closed segments are tested instead.
    """
    d1 = cross(vsub(b, a), vsub(c, a))
    d2 = cross(vsub(b, a), vsub(d, a))
    d3 = cross(vsub(d, c), vsub(a, c))
    d4 = cross(vsub(d, c), vsub(b, c))
    if include_endpoints:
        # closed-segment logic including collinear overlap
        def on_seg(p, q, r):
            return (cross(vsub(q, p), vsub(r, p)) == 0
                    and min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
                    and min(p[1], q[1]) <= r[1] <= max(p[1], q[1]))
        if ((d1 > 0) != (d2 > 0) and (d1 != 0 or d2 != 0)
                and (d3 > 0) != (d4 > 0) and (d3 != 0 or d4 != 0)):
            return True
        return (on_seg(a, b, c) or on_seg(a, b, d)
                or on_seg(c, d, a) or on_seg(c, d, b))
    # open segments: strict sign alternation only
    return ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0
            and (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0)


def point_in_triangle(p, a, b, c):
    """-1 outside, 0 on the boundary, +1 strictly inside triangle abc (ccw)."""
    s1 = cross(vsub(b, a), vsub(p, a))
    s2 = cross(vsub(c, b), vsub(p, b))
    s3 = cross(vsub(a, c), vsub(p, c))
    if s1 < 0 or s2 < 0 or s3 < 0:
        return -1
    if s1 == 0 or s2 == 0 or s3 == 0:
        return 0
    return 1


def seg_dist_sq_exceeds(a, b, bound_sq):
    """Whether the squared distance from the origin to segment [a, b] exceeds bound_sq."""
    ab = vsub(b, a)
    denom = dot(ab, ab)
    # projection parameter of the origin onto the line, times denom
    t_num = -dot(a, ab)
    if denom == 0:
        return dot(a, a) > bound_sq
    if t_num <= 0:
        return dot(a, a) > bound_sq
    if t_num >= denom:
        return dot(b, b) > bound_sq
    # perpendicular distance^2 = cross(a, b)^2 / |ab|^2
    c = cross(a, b)
    return c * c > bound_sq * denom


__all__ += ["segments_cross", "point_in_triangle", "seg_dist_sq_exceeds",
            "is_zero_vec", "canonical_ray"]
