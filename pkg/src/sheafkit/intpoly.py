"""Dense univariate integer polynomials and exact real-root machinery.

A polynomial is a tuple of int coefficients from the constant term up, with
no trailing zeros; the zero polynomial is the empty tuple.  Rational
arithmetic uses fractions.Fraction throughout, so every answer is exact:
Sturm sequences count real roots in half-open intervals, bisection against
those counts isolates the roots, and characteristic polynomials of
multiplication operators produce defining polynomials of polynomial images
of algebraic numbers.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as int_gcd


class ZeroPolynomial(Exception):
    pass


def normalize(coeffs) -> tuple:
    c = list(coeffs)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def degree(p) -> int:
    """Degree; -1 for the zero polynomial."""
    return len(p) - 1


def lead(p):
    if not p:
        raise ZeroPolynomial("leading coefficient of 0")
    return p[-1]


def constant(c) -> tuple:
    return normalize([c])


X = (0, 1)


def add(p, q) -> tuple:
    n = max(len(p), len(q))
    return normalize([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0)
                      for i in range(n)])


def neg(p) -> tuple:
    return tuple(-c for c in p)


def sub(p, q) -> tuple:
    return add(p, neg(q))


def mul(p, q) -> tuple:
    if not p or not q:
        return ()
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return normalize(out)


def scale(p, c) -> tuple:
    return normalize([c * a for a in p])


def power(p, k: int) -> tuple:
    out = (1,)
    for _ in range(k):
        out = mul(out, p)
    return out


def compose(p, q) -> tuple:
    """p(q(t)) by Horner."""
    out = ()
    for c in reversed(p):
        out = add(mul(out, q), constant(c))
    return out


def deriv(p) -> tuple:
    return normalize([i * p[i] for i in range(1, len(p))])


def evaluate(p, x):
    """Exact evaluation; x may be int or Fraction."""
    acc = Fraction(0) if isinstance(x, Fraction) else 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def content(p) -> int:
    g = 0
    for c in p:
        g = int_gcd(g, abs(c))
    return g


def primitive(p) -> tuple:
    """Primitive part with positive leading coefficient."""
    if not p:
        return ()
    g = content(p)
    q = tuple(c // g for c in p)
    return q if q[-1] > 0 else neg(q)


def _frac(p):
    return tuple(Fraction(c) for c in p)


def _frac_divmod(a, b):
    """Polynomial division over Q."""
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    inv = Fraction(1) / b[-1]
    while len(a) >= len(b) and any(a):
        while a and a[-1] == 0:
            a.pop()
        if len(a) < len(b):
            break
        f = a[-1] * inv
        k = len(a) - len(b)
        q[k] = f
        for i, c in enumerate(b):
            a[k + i] -= f * c
        a.pop()
    return tuple(q), normalize(a)


def gcd(p, q) -> tuple:
    """Primitive gcd with positive leading coefficient."""
    a, b = _frac(p), _frac(q)
    while b:
        _, r = _frac_divmod(a, b)
        a, b = b, r
    if not a:
        return ()
    lcm_den = 1
    for c in a:
        lcm_den = lcm_den * c.denominator // int_gcd(lcm_den, c.denominator)
    return primitive(tuple(int(c * lcm_den) for c in a))


def divexact(p, q) -> tuple:
    """p / q when q divides p over Q, integer-primitive result assumed exact."""
    quo, rem = _frac_divmod(_frac(p), _frac(q))
    if rem:
        raise ValueError("division is not exact")
    den = 1
    for c in quo:
        den = den * c.denominator // int_gcd(den, c.denominator)
    return normalize([int(c * den) for c in quo]) if den == 1 else _int_or_fail(quo)


def _int_or_fail(quo):
    if any(c.denominator != 1 for c in quo):
        raise ValueError("quotient is not integral")
    return normalize([int(c) for c in quo])


def squarefree(p) -> tuple:
    """The squarefree primitive part (same real roots, all simple)."""
    if not p:
        raise ZeroPolynomial("squarefree part of 0")
    if degree(p) == 0:
        return (1,)
    g = gcd(p, deriv(p))
    if degree(g) == 0:
        return primitive(p)
    return primitive(divexact(primitive(p), g))


# ---------------------------------------------------------------------------
# Sturm sequences and root counting


def sturm_sequence(p):
    """Signed-remainder sequence of a squarefree polynomial, over Q."""
    seq = [_frac(p)]
    d = _frac(deriv(p))
    if d:
        seq.append(d)
        while True:
            _, r = _frac_divmod(seq[-2], seq[-1])
            if not r:
                break
            seq.append(tuple(-c for c in r))
    return seq


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def _variations(signs) -> int:
    nz = [s for s in signs if s != 0]
    return sum(1 for a, b in zip(nz, nz[1:]) if a * b < 0)


def variations_at(seq, x) -> int:
    return _variations([_sign(evaluate(q, x)) for q in seq])


def variations_at_neg_inf(seq) -> int:
    return _variations([_sign(q[-1]) * (-1) ** (len(q) - 1 & 1) if q else 0 for q in seq])


def variations_at_pos_inf(seq) -> int:
    return _variations([_sign(q[-1]) if q else 0 for q in seq])


def count_roots_halfopen(seq, a, b) -> int:
    """Number of roots in (a, b]; a, b rational or None for the infinities."""
    va = variations_at_neg_inf(seq) if a is None else variations_at(seq, a)
    vb = variations_at_pos_inf(seq) if b is None else variations_at(seq, b)
    return va - vb


def count_real_roots(seq) -> int:
    return variations_at_neg_inf(seq) - variations_at_pos_inf(seq)


def root_bound(p) -> Fraction:
    """Cauchy bound: every real root lies in (-B, B)."""
    if degree(p) < 1:
        raise ZeroPolynomial("root bound needs degree >= 1")
    lc = abs(p[-1])
    return Fraction(1) + max(Fraction(abs(c), lc) for c in p[:-1]) if len(p) > 1 else Fraction(1)


def isolate_real_roots(p):
    """Disjoint isolating data for the real roots of p (any nonzero p).

    Returns a sorted list of ('rational', r) and ('interval', lo, hi)
    entries; each interval has rational non-root endpoints and contains
    exactly one root of the squarefree part of p.
    """
    if not p:
        raise ZeroPolynomial("cannot isolate roots of 0")
    sf = squarefree(p)
    if degree(sf) < 1:
        return []
    seq = sturm_sequence(sf)
    bound = root_bound(sf)
    out = []

    def count(a, b):
        return count_roots_halfopen(seq, a, b)

    def refine(lo, hi, n):
        # invariant: lo, hi are not roots, (lo, hi] = (lo, hi) holds n roots
        if n == 0:
            return
        if n == 1:
            out.append(("interval", lo, hi))
            return
        mid = (lo + hi) / 2
        if evaluate(sf, mid) == 0:
            out.append(("rational", mid))
            # shrink around mid until the point is isolated away
            eps = (hi - lo) / 4
            while count(mid - eps, mid + eps) != 1 or evaluate(sf, mid - eps) == 0 \
                    or evaluate(sf, mid + eps) == 0:
                eps /= 2
            refine(lo, mid - eps, count(lo, mid - eps))
            refine(mid + eps, hi, count(mid + eps, hi))
        else:
            refine(lo, mid, count(lo, mid))
            refine(mid, hi, count(mid, hi))

    lo, hi = -bound, bound
    while evaluate(sf, lo) == 0:
        lo -= 1
    while evaluate(sf, hi) == 0:
        hi += 1
    refine(lo, hi, count(lo, hi))
    out.sort(key=lambda e: e[1])
    return out


# ---------------------------------------------------------------------------
# exact linear algebra over Q for defining polynomials of images


def companion(p):
    """Companion matrix (over Q) of the monic normalization of p."""
    n = degree(p)
    if n < 1:
        raise ZeroPolynomial("companion needs degree >= 1")
    lc = Fraction(p[-1])
    m = [[Fraction(0)] * n for _ in range(n)]
    for i in range(1, n):
        m[i][i - 1] = Fraction(1)
    for i in range(n):
        m[i][n - 1] = -Fraction(p[i]) / lc
    return m


def mat_poly(p, m):
    """p evaluated at a square Fraction matrix."""
    n = len(m)
    out = [[Fraction(0)] * n for _ in range(n)]
    acc = [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    for c in p:
        if c:
            for i in range(n):
                for j in range(n):
                    out[i][j] += c * acc[i][j]
        acc = _mat_mul(acc, m)
    return out


def _mat_mul(a, b):
    n = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def charpoly(m):
    """Characteristic polynomial det(t I - m) by Faddeev-LeVerrier, exact."""
    n = len(m)
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    mk = [[Fraction(0)] * n for _ in range(n)]
    c = Fraction(1)
    for k in range(1, n + 1):
        for i in range(n):
            mk[i][i] += c
        mk = _mat_mul(m, mk)
        tr = sum(mk[i][i] for i in range(n))
        c = -tr / k
        coeffs[n - k] = c
    return tuple(coeffs)


def clear_denominators(p) -> tuple:
    """Integer multiple of a Fraction polynomial, primitive, positive lead."""
    den = 1
    for c in p:
        f = Fraction(c)
        den = den * f.denominator // int_gcd(den, f.denominator)
    return primitive(normalize([int(Fraction(c) * den) for c in p]))


def image_defining_poly(a_poly, p) -> tuple:
    """A squarefree integer polynomial vanishing on p(alpha) for every root
    alpha of a_poly: the characteristic polynomial of multiplication by p
    on Q[t]/(a_poly)."""
    cp = charpoly(mat_poly(p, companion(a_poly)))
    return squarefree(clear_denominators(cp))


def eval_interval(p, lo: Fraction, hi: Fraction):
    """Rational bounds [m, M] enclosing p([lo, hi]) by interval Horner."""
    m, M = Fraction(0), Fraction(0)
    for c in reversed(p):
        cands = (m * lo, m * hi, M * lo, M * hi)
        m, M = min(cands) + c, max(cands) + c
    return m, M


# ---------------------------------------------------------------------------
# printing


def to_str(p) -> str:
    """Canonical human form: descending powers of t, '^' only for exponents
    >= 2, unit coefficients omitted; parses back to the same polynomial."""
    if not p:
        return "0"
    parts = []
    for i in range(len(p) - 1, -1, -1):
        c = p[i]
        if c == 0:
            continue
        mag = abs(c)
        if i == 0:
            term = str(mag)
        else:
            t = "t" if i == 1 else f"t^{i}"
            term = t if mag == 1 else f"{mag}*{t}"
        if not parts:
            parts.append(term if c > 0 else f"-{term}")
        else:
            parts.append(f"+ {term}" if c > 0 else f"- {term}")
    return " ".join(parts)


def frac_str(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
