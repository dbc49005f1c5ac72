r"""
Exact arithmetic in real algebraic number fields Q(alpha).

A field is described by a monic squarefree integer polynomial together with
a rational interval isolating exactly one real root alpha.  Elements are
rational coordinate vectors in the power basis 1, alpha, ..., alpha^(d-1).
Arithmetic is exact; the sign of a nonzero element is decided by refining
the isolating interval (bisection), falling back to a gcd test against the
modulus to certify exact zeroes.

The only transcendental-looking constructor is ``minpoly_2cos_pi_over``,
which returns the minimal polynomial of 2*cos(pi/n).  These are the fields
that carry all flat-surface coordinates and Hecke-type matrix entries.
"""

import math
import os
from fractions import Fraction

__all__ = [
    "NumberField",
    "NumberFieldElement",
    "field_ops",
    "compare",
    "minpoly_2cos_pi_over",
    "rationals_field",
    "FieldMismatchError",
]

# Bisection rounds before switching to the exact gcd zero-test.
DEFAULT_REFINE_CAP = int(os.environ.get("VEECHLAB_REFINE_CAP", "256"))


class FieldMismatchError(ValueError):
    """Raised when combining elements of different number fields."""


# ---------------------------------------------------------------------------
# rational polynomial helpers (dense coefficient lists, low degree first)
# ---------------------------------------------------------------------------

def _poly_trim(p):
    while p and p[-1] == 0:
        p = p[:-1]
    return p


def _poly_add(p, q):
    n = max(len(p), len(q))
    return _poly_trim([
        (p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0)
        for i in range(n)
    ])


def _poly_scale(p, c):
    if c == 0:
        return []
    return [c * a for a in p]


def _poly_mul(p, q):
    if not p or not q:
        return []
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _poly_trim(out)


def _poly_divmod(p, q):
    # q must be nonzero
    q = _poly_trim(list(q))
    r = list(p)
    out = [Fraction(0)] * max(0, len(r) - len(q) + 1)
    inv = Fraction(1, 1) / Fraction(q[-1])
    while len(_poly_trim(r)) >= len(q):
        r = _poly_trim(r)
        shift = len(r) - len(q)
        c = r[-1] * inv
        out[shift] = c
        for i, b in enumerate(q):
            r[shift + i] -= c * b
        r = r[:-1]
    return _poly_trim(out), _poly_trim(r)


def _poly_gcd(p, q):
    a, b = _poly_trim(list(p)), _poly_trim(list(q))
    while b:
        a, b = b, _poly_divmod(a, b)[1]
    if a:
        lead = a[-1]
        a = [c / lead for c in a]
    return a


def _poly_eval(p, x):
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def _poly_deriv(p):
    return [i * c for i, c in enumerate(p)][1:]


def _sturm_chain(p):
    chain = [_poly_trim(list(p)), _poly_trim(_poly_deriv(p))]
    while chain[-1]:
        rem = _poly_divmod(chain[-2], chain[-1])[1]
        if not rem:
            break
        chain.append(_poly_scale(rem, -1))
    return [c for c in chain if c]


def _sign_variations(chain, x):
    signs = []
    for p in chain:
        v = _poly_eval(p, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_real_roots(p, lo, hi):
    """Number of distinct real roots of p in (lo, hi], by Sturm's theorem."""
    chain = _sturm_chain(p)
    return _sign_variations(chain, lo) - _sign_variations(chain, hi)


# ---------------------------------------------------------------------------
# rational interval arithmetic (for sign decisions via the embedding)
# ---------------------------------------------------------------------------

def _iv_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _iv_mul(a, b):
    ps = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return (min(ps), max(ps))


def _iv_eval(coeffs, iv):
    # Horner on the interval; coeffs are exact rationals
    acc = (Fraction(0), Fraction(0))
    for c in reversed(coeffs):
        acc = _iv_add(_iv_mul(acc, iv), (c, c))
    return acc


# ---------------------------------------------------------------------------
# fields and elements
# ---------------------------------------------------------------------------

class NumberField:
    """Q(alpha) for alpha the unique root of ``minpoly`` in the interval.

    ``minpoly`` is a monic squarefree integer polynomial (coefficient list,
    constant term first).  The interval endpoints must not be roots.
    """

    def __init__(self, minpoly, interval):
        minpoly = [Fraction(c) for c in _poly_trim(list(minpoly))]
        if len(minpoly) < 2:
            raise ValueError("minpoly must have degree >= 1")
        if minpoly[-1] != 1:
            raise ValueError("minpoly must be monic")
        for c in minpoly:
            if c.denominator != 1:
                raise ValueError("minpoly must have integer coefficients")
        g = _poly_gcd(minpoly, _poly_deriv(minpoly))
        if len(g) > 1:
            raise ValueError("minpoly must be squarefree")
        lo, hi = Fraction(interval[0]), Fraction(interval[1])
        if not lo < hi:
            raise ValueError("empty isolating interval")
        if _poly_eval(minpoly, lo) == 0 or _poly_eval(minpoly, hi) == 0:
            raise ValueError("interval endpoints must not be roots")
        if count_real_roots(minpoly, lo, hi) != 1:
            raise ValueError("interval must isolate exactly one real root")
        self.minpoly = tuple(minpoly)
        self.interval = (lo, hi)
        self.degree = len(minpoly) - 1
        # x^(degree+k) reduced mod minpoly, k = 0 .. degree-2
        self._red = []
        rem = [-c for c in minpoly[:-1]]
        for _ in range(max(0, self.degree - 1)):
            self._red.append(tuple(rem) + (Fraction(0),) * (self.degree - len(rem)))
            rem = [Fraction(0)] + rem
            if len(rem) > self.degree:
                lead = rem.pop()
                if lead:
                    rem = _poly_add(rem, [lead * c for c in self._red[0]])
            rem = list(rem) + [Fraction(0)] * (self.degree - len(rem))

    def __repr__(self):
        return "NumberField(minpoly=%s)" % ([str(c) for c in self.minpoly],)

    def __eq__(self, other):
        return (isinstance(other, NumberField)
                and self.minpoly == other.minpoly
                and self.interval == other.interval)

    def __hash__(self):
        return hash((self.minpoly, self.interval))

    def element(self, coords):
        if isinstance(coords, NumberFieldElement):
            if not self.compatible(coords.field):
                raise FieldMismatchError("element from a different field")
            return coords
        if isinstance(coords, (int, Fraction)):
            coords = [coords] + [0] * (self.degree - 1)
        coords = [Fraction(c) for c in coords]
        if len(coords) > self.degree:
            raise ValueError("coordinate vector too long")
        coords += [Fraction(0)] * (self.degree - len(coords))
        return NumberFieldElement(self, tuple(coords))

    def zero(self):
        return self.element(0)

    def one(self):
        return self.element(1)

    def gen(self):
        """The distinguished root alpha (requires degree >= 2... degree 1 ok)."""
        if self.degree == 1:
            return self.element(-self.minpoly[0])
        return self.element([0, 1])

    def compatible(self, other):
        return self is other or self == other

    def refine_interval(self, interval=None, rounds=1):
        """Bisect the isolating interval; returns a new (lo, hi) pair."""
        lo, hi = interval if interval is not None else self.interval
        for _ in range(rounds):
            mid = (lo + hi) / 2
            v = _poly_eval(self.minpoly, mid)
            if v == 0:
                # the root is exactly rational; pin it in a thin interval
                eps = (hi - lo) / 4
                return (mid - eps / 2, mid + eps / 2) if eps else (lo, hi)
            if (_poly_eval(self.minpoly, lo) > 0) != (v > 0):
                hi = mid
            else:
                lo = mid
        return (lo, hi)

    def root_if_rational(self, interval=None):
        """Exact rational value of alpha if the bisection lands on it."""
        lo, hi = interval if interval is not None else self.interval
        mid = (lo + hi) / 2
        if _poly_eval(self.minpoly, mid) == 0:
            return mid
        return None

    def to_json(self):
        return {
            "minpoly": [int(c) for c in self.minpoly],
            "interval": [_frac_str(self.interval[0]), _frac_str(self.interval[1])],
        }

    @staticmethod
    def from_json(data):
        return NumberField(
            [Fraction(c) for c in data["minpoly"]],
            [_frac_parse(data["interval"][0]), _frac_parse(data["interval"][1])],
        )


def _frac_str(q):
    q = Fraction(q)
    return "%d/%d" % (q.numerator, q.denominator)


def _frac_parse(s):
    return Fraction(s)


class NumberFieldElement:
    """Immutable element of a NumberField in the power basis."""

    __slots__ = ("field", "coords")

    def __init__(self, field, coords):
        self.field = field
        self.coords = coords

    # -- basic protocol ----------------------------------------------------

    def __repr__(self):
        return "NFE(%s)" % (" + ".join(
            "%s*a^%d" % (c, i) for i, c in enumerate(self.coords) if c != 0
        ) or "0")

    def __eq__(self, other):
        if isinstance(other, NumberFieldElement):
            if not self.field.compatible(other.field):
                return False
            return self.coords == other.coords
        if isinstance(other, (int, Fraction)):
            return self.coords == self.field.element(other).coords
        return NotImplemented

    def __hash__(self):
        return hash((self.field.minpoly, self.coords))

    def _coerce(self, other):
        if isinstance(other, NumberFieldElement):
            if not self.field.compatible(other.field):
                raise FieldMismatchError("elements of different fields")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.element(other)
        return NotImplemented

    def is_zero(self):
        return all(c == 0 for c in self.coords)

    def is_rational(self):
        return all(c == 0 for c in self.coords[1:])

    def rational_value(self):
        if not self.is_rational():
            raise ValueError("element is irrational")
        return self.coords[0]

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return NumberFieldElement(
            self.field, tuple(a + b for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return NumberFieldElement(self.field, tuple(-a for a in self.coords))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return NumberFieldElement(
            self.field, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        d = self.field.degree
        prod = [Fraction(0)] * (2 * d - 1) if d > 1 else [Fraction(0)]
        for i, a in enumerate(self.coords):
            if a == 0:
                continue
            for j, b in enumerate(other.coords):
                if b == 0:
                    continue
                prod[i + j] += a * b
        out = list(prod[:d]) + [Fraction(0)] * (d - len(prod[:d]))
        for k in range(d, len(prod)):
            c = prod[k]
            if c == 0:
                continue
            red = self.field._red[k - d]
            for i in range(d):
                out[i] += c * red[i]
        return NumberFieldElement(self.field, tuple(out))

    __rmul__ = __mul__

    def inverse(self):
        if self.is_zero():
            raise ZeroDivisionError("division by zero in number field")
        if self.is_rational():
            return self.field.element(1 / self.coords[0])
        # extended Euclid: u*self + v*minpoly = g
        p = _poly_trim(list(self.coords))
        m = list(self.field.minpoly)
        r0, r1 = m, p
        s0, s1 = [], [Fraction(1)]
        while r1:
            q, r = _poly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _poly_add(s0, _poly_scale(_poly_mul(q, s1), -1))
        g = r0
        if len(g) > 1:
            # modulus reducible: invertibility fails for zero divisors even
            # when the embedded value is nonzero
            if self.sign() != 0:
                raise ZeroDivisionError(
                    "element is a zero divisor modulo a reducible modulus")
            raise ZeroDivisionError("division by zero in number field")
        inv = _poly_scale(s0, Fraction(1) / g[0])
        return self.field.element(inv)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * self._coerce(other)

    def __pow__(self, n):
        if n < 0:
            return self.inverse() ** (-n)
        out = self.field.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- order and embedding -----------------------------------------------

    def sign(self, cap=None):
        """Sign of the real embedding: -1, 0 or +1.  Always terminates."""
        if self.is_rational():
            c = self.coords[0]
            return 0 if c == 0 else (1 if c > 0 else -1)
        cap = DEFAULT_REFINE_CAP if cap is None else cap
        iv = self.field.interval
        poly = _poly_trim(list(self.coords))
        rounds = 0
        gcd_checked = False
        while True:
            r = self.field.root_if_rational(iv)
            if r is not None:
                v = _poly_eval(poly, r)
                return 0 if v == 0 else (1 if v > 0 else -1)
            val = _iv_eval(poly, iv)
            if val[0] > 0:
                return 1
            if val[1] < 0:
                return -1
            rounds += 1
            if rounds > cap and not gcd_checked:
                gcd_checked = True
                g = _poly_gcd(poly, list(self.field.minpoly))
                if len(g) > 1:
                    glo = _poly_eval(g, iv[0])
                    ghi = _poly_eval(g, iv[1])
                    if glo == 0 or ghi == 0 or (glo > 0) != (ghi > 0):
                        return 0
                # certified nonzero: keep bisecting, it must resolve
            iv = self.field.refine_interval(iv, 1)

    def __lt__(self, other):
        other = self._coerce(other)
        return (self - other).sign() < 0

    def __le__(self, other):
        other = self._coerce(other)
        return (self - other).sign() <= 0

    def __gt__(self, other):
        other = self._coerce(other)
        return (self - other).sign() > 0

    def __ge__(self, other):
        other = self._coerce(other)
        return (self - other).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def enclosure(self, width=Fraction(1, 2 ** 30)):
        """A rational interval of at most the given width containing the value."""
        if self.is_rational():
            c = self.coords[0]
            return (c, c)
        iv = self.field.interval
        poly = _poly_trim(list(self.coords))
        while True:
            r = self.field.root_if_rational(iv)
            if r is not None:
                v = _poly_eval(poly, r)
                return (v, v)
            val = _iv_eval(poly, iv)
            if val[1] - val[0] <= width:
                return val
            iv = self.field.refine_interval(iv, 1)

    def __float__(self):
        lo, hi = self.enclosure()
        return float((lo + hi) / 2)

    def to_json(self):
        return {"coords": [_frac_str(c) for c in self.coords]}

    @staticmethod
    def from_json(field, data):
        return field.element([_frac_parse(c) for c in data["coords"]])


# ---------------------------------------------------------------------------
# spec-level operation entry points
# ---------------------------------------------------------------------------

def field_ops(a, b, op):
    """Exact field arithmetic dispatch: op in add|sub|mul|div."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError("unknown op %r" % (op,))


def compare(a, b):
    """Total order of the real embedding: one of 'lt', 'eq', 'gt'."""
    s = (a - b).sign()
    return "eq" if s == 0 else ("lt" if s < 0 else "gt")


def rationals_field():
    """Q itself, presented as Q[x]/(x) with alpha = 0."""
    return NumberField([0, 1], (Fraction(-1, 2), Fraction(1, 2)))


# ---------------------------------------------------------------------------
# 2*cos(pi/n) minimal polynomials
# ---------------------------------------------------------------------------

def _cyclotomic(m, cache={}):
    """Integer coefficient list of the m-th cyclotomic polynomial."""
    if m in cache:
        return cache[m]
    # Phi_m = (x^m - 1) / prod_{d | m, d < m} Phi_d
    poly = [Fraction(-1)] + [Fraction(0)] * (m - 1) + [Fraction(1)]
    for d in range(1, m):
        if m % d == 0:
            poly = _poly_divmod(poly, [Fraction(c) for c in _cyclotomic(d)])[0]
    out = [int(c) for c in poly]
    cache[m] = out
    return out


def _halfturn_basis(k, cache={0: [2], 1: [0, 1]}):
    """Polynomial p_k with p_k(2*cos t) = 2*cos(k*t)."""
    if k not in cache:
        p = _poly_add(_poly_mul([0, 1], _halfturn_basis(k - 1)),
                      _poly_scale(_halfturn_basis(k - 2), -1))
        cache[k] = [int(c) for c in p]
    return cache[k]


def minpoly_2cos_pi_over(n):
    """Minimal polynomial of 2*cos(pi/n) plus an isolating interval.

    Returns the NumberField hosting 2*cos(pi/n) as its distinguished root.
    Uses the palindromic factorization Phi_2n(x) = x^(D/2) * g(x + 1/x).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    phi = _cyclotomic(2 * n)
    deg = len(phi) - 1
    half = deg // 2
    # g(y) = a_half + sum_k a_{half+k} * p_k(y), using a_{half-k} = a_{half+k}
    g = [Fraction(phi[half])]
    for k in range(1, half + 1):
        g = _poly_add(g, _poly_scale(_halfturn_basis(k), phi[half + k]))
    # isolate the root near the numeric value
    v = 2.0 * math.cos(math.pi / n)
    w = Fraction(1, 64)
    center = Fraction(v).limit_denominator(1 << 20)
    while True:
        lo, hi = center - w, center + w
        if (_poly_eval(g, lo) != 0 and _poly_eval(g, hi) != 0
                and count_real_roots(g, lo, hi) == 1):
            break
        w /= 2
        if w < Fraction(1, 2 ** 200):
            raise RuntimeError("failed to isolate 2*cos(pi/%d)" % n)
    return NumberField([Fraction(c) for c in g], (lo, hi))


def cos_multiple(field, k):
    """2*cos(k*pi/n) as an element, for field = minpoly_2cos_pi_over(n).

    Evaluates the half-angle basis polynomial at the field generator, so it
    stays exact even when the polynomial degree exceeds the field degree.
    """
    out = field.zero()
    alpha = field.gen()
    power = field.one()
    for c in _halfturn_basis(abs(k)):
        if c:
            out = out + power * Fraction(c)
        power = power * alpha
    return out


__all__.append("cos_multiple")
__all__.append("count_real_roots")
