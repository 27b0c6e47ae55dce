"""An exact model of the real spectrum of the rational affine line.

Points are real algebraic numbers, cuts infinitesimally left or right of
them, and the two infinite ends; the cuts specialize to their centers.
Constructible subsets are kept in canonical cell form over a finite sorted
set of algebraic numbers: an alternating list of intervals and points with
a membership flag per cell, normalized so that no boundary point is
removable.  Transcendental cuts are never represented individually; they
live inside their interval cell, which is as fine as constructible data
can distinguish.

Everything is exact: algebraic numbers are squarefree integer polynomials
with isolating rational intervals, signs are decided by Sturm counts and
gcds, and images under polynomial maps come from characteristic
polynomials of multiplication operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import intpoly as ip
from .k0 import ConsFunction
from .space import FinSpec
from .intpoly import ZeroPolynomial


class SperError(Exception):
    pass


class ConstantMap(SperError):
    pass


class InconsistentSamples(SperError):
    """Cell values disagreeing between samples; an implementation bug."""


class AlgNumber:
    """A real algebraic number: squarefree defining polynomial plus an
    isolating open rational interval with non-root endpoints."""

    __slots__ = ("poly", "lo", "hi", "_sturm")

    def __init__(self, poly, lo, hi, check=True):
        self.poly = tuple(poly)
        self.lo = Fraction(lo)
        self.hi = Fraction(hi)
        self._sturm = None
        if check:
            if ip.degree(self.poly) < 1:
                raise SperError("defining polynomial must be nonconstant")
            if ip.degree(ip.gcd(self.poly, ip.deriv(self.poly))) != 0:
                raise SperError("defining polynomial is not squarefree")
            if not self.lo < self.hi:
                raise SperError("empty isolating interval")
            if ip.evaluate(self.poly, self.lo) == 0 or ip.evaluate(self.poly, self.hi) == 0:
                raise SperError("interval endpoints must not be roots")
            if ip.count_roots_halfopen(self.sturm(), self.lo, self.hi) != 1:
                raise SperError("interval does not isolate exactly one root")

    def sturm(self):
        if self._sturm is None:
            self._sturm = ip.sturm_sequence(self.poly)
        return self._sturm

    @classmethod
    def from_rational(cls, r) -> "AlgNumber":
        r = Fraction(r)
        poly = ip.primitive((-r.numerator, r.denominator))
        return cls(poly, r - 1, r + 1, check=False)

    def is_rational(self) -> bool:
        return ip.degree(self.poly) == 1

    def as_rational(self) -> Fraction:
        if not self.is_rational():
            raise SperError("not represented by a linear polynomial")
        return Fraction(-self.poly[0], self.poly[1])

    def refined(self) -> "AlgNumber":
        """Halve the isolating interval (exact rational detection included)."""
        mid = (self.lo + self.hi) / 2
        if ip.evaluate(self.poly, mid) == 0:
            poly = ip.primitive((-mid.numerator, mid.denominator))
            return AlgNumber(poly, (self.lo + mid) / 2, (mid + self.hi) / 2,
                             check=False)
        if ip.count_roots_halfopen(self.sturm(), self.lo, mid) == 1:
            return AlgNumber(self.poly, self.lo, mid, check=False)
        return AlgNumber(self.poly, mid, self.hi, check=False)

    def compare(self, other) -> int:
        """-1, 0 or 1 against another AlgNumber or a rational."""
        if isinstance(other, (int, Fraction)):
            r = Fraction(other)
            if self.is_rational():
                v = self.as_rational()
                return (v > r) - (v < r)
            if self.lo < r < self.hi and ip.evaluate(self.poly, r) == 0:
                return 0
            me = self
            while me.lo < r < me.hi:
                me = me.refined()
            return -1 if me.hi <= r else 1
        if not isinstance(other, AlgNumber):
            raise TypeError(f"cannot compare with {type(other).__name__}")
        if other.is_rational():
            return self.compare(other.as_rational())
        if self.is_rational():
            return -other.compare(self.as_rational())
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo < hi:
            g = ip.gcd(self.poly, other.poly)
            if ip.degree(g) >= 1 and ip.count_roots_halfopen(ip.sturm_sequence(g), lo, hi) == 1:
                return 0
        a, b = self, other
        while not (a.hi <= b.lo or b.hi <= a.lo):
            a, b = a.refined(), b.refined()
        return -1 if a.hi <= b.lo else 1

    def __eq__(self, other):
        if isinstance(other, (AlgNumber, int, Fraction)):
            return self.compare(other) == 0
        return NotImplemented

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __str__(self):
        return f"root({ip.to_str(self.poly)}, {ip.frac_str(self.lo)}, {ip.frac_str(self.hi)})"

    def __repr__(self):
        return str(self)


@dataclass(frozen=True)
class SperPoint:
    """A point of the real spectrum of the affine line.

    kind is one of "alg" (a closed algebraic point), "cut-" / "cut+" (the
    orderings placing t infinitesimally left / right of the center, which
    specialize to it), "-inf" and "+inf" (closed ends).
    """

    kind: str
    center: AlgNumber | None = None

    def __post_init__(self):
        if self.kind not in ("alg", "cut-", "cut+", "-inf", "+inf"):
            raise SperError(f"unknown point kind {self.kind!r}")
        if self.kind in ("alg", "cut-", "cut+") and self.center is None:
            raise SperError("this kind of point needs a center")

    @classmethod
    def alg(cls, a):
        if isinstance(a, (int, Fraction)):
            a = AlgNumber.from_rational(a)
        return cls("alg", a)

    @classmethod
    def cut_minus(cls, a):
        if isinstance(a, (int, Fraction)):
            a = AlgNumber.from_rational(a)
        return cls("cut-", a)

    @classmethod
    def cut_plus(cls, a):
        if isinstance(a, (int, Fraction)):
            a = AlgNumber.from_rational(a)
        return cls("cut+", a)

    @classmethod
    def neg_inf(cls):
        return cls("-inf")

    @classmethod
    def pos_inf(cls):
        return cls("+inf")

    def specializes_to(self, other: "SperPoint") -> bool:
        """Whether this point lies in every neighbourhood closure: cuts
        specialize to their centers, everything to itself."""
        if same_point(self, other):
            return True
        return (other.kind == "alg" and self.kind in ("cut-", "cut+")
                and self.center.compare(other.center) == 0)

    def __str__(self):
        if self.kind == "alg":
            return str(self.center)
        if self.kind == "cut-":
            return f"{self.center}^-"
        if self.kind == "cut+":
            return f"{self.center}^+"
        return self.kind


def same_point(x: SperPoint, y: SperPoint) -> bool:
    if x.kind != y.kind:
        return False
    if x.kind in ("-inf", "+inf"):
        return True
    return x.center.compare(y.center) == 0


def real_roots(f) -> list:
    """All real roots of a nonzero integer polynomial, sorted, exact."""
    f = ip.normalize(f)
    if not f:
        raise ZeroPolynomial("real_roots of the zero polynomial")
    sf = ip.squarefree(f)
    out = []
    for entry in ip.isolate_real_roots(f):
        if entry[0] == "rational":
            out.append(AlgNumber.from_rational(entry[1]))
        else:
            out.append(AlgNumber(sf, entry[1], entry[2], check=False))
    return out


def _sign_of_fraction(x) -> int:
    return (x > 0) - (x < 0)


def _vanishes_at(f, a: AlgNumber) -> bool:
    """Whether f(alpha) = 0, by a gcd against the defining polynomial."""
    f = ip.normalize(f)
    if not f:
        return True
    g = ip.gcd(f, a.poly)
    if ip.degree(g) < 1:
        return False
    return ip.count_roots_halfopen(ip.sturm_sequence(g), a.lo, a.hi) == 1


def sign_at(f, x: SperPoint) -> int:
    """The sign of the polynomial f at a point of the real spectrum."""
    f = ip.normalize(f)
    if not f:
        return 0
    if x.kind == "+inf":
        return _sign_of_fraction(ip.lead(f))
    if x.kind == "-inf":
        return _sign_of_fraction(ip.lead(f)) * (-1 if ip.degree(f) % 2 else 1)
    a = x.center
    if a.is_rational() and x.kind == "alg":
        return _sign_of_fraction(ip.evaluate(f, a.as_rational()))
    vanishes = _vanishes_at(f, a)
    if x.kind == "alg" and vanishes:
        return 0
    if ip.degree(f) == 0:
        return _sign_of_fraction(f[0])
    sf = ip.squarefree(f)
    seq = ip.sturm_sequence(sf)
    want = 1 if vanishes else 0
    while True:
        if ip.count_roots_halfopen(seq, a.lo, a.hi) == want:
            if x.kind in ("alg", "cut+"):
                # no roots of f in (alpha, hi], so the sign at hi rules
                return _sign_of_fraction(ip.evaluate(f, a.hi))
            if ip.evaluate(sf, a.lo) != 0:
                return _sign_of_fraction(ip.evaluate(f, a.lo))
        a = a.refined()
        if a.is_rational() and x.kind == "alg":
            return _sign_of_fraction(ip.evaluate(f, a.as_rational()))


# ---------------------------------------------------------------------------
# constructible sets in cell form


def locate_cell(roots, x) -> int:
    """Cell position of a value among sorted roots: 2j for the j-th open
    interval (0 = leftmost), 2j+1 for the (j+1)-st root."""
    for j, r in enumerate(roots):
        c = r.compare(x)
        if c == 0:
            return 2 * j + 1
        if c > 0:
            return 2 * j
    return 2 * len(roots)


def _cell_of_sper_point(roots, pt: SperPoint) -> int:
    if pt.kind == "-inf":
        return 0
    if pt.kind == "+inf":
        return 2 * len(roots)
    pos = locate_cell(roots, pt.center)
    if pt.kind == "alg" or pos % 2 == 0:
        return pos
    return pos + 1 if pt.kind == "cut+" else pos - 1


def merge_roots(a, b) -> list:
    """Sorted union of two sorted AlgNumber lists, without duplicates."""
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        c = a[i].compare(b[j])
        if c < 0:
            out.append(a[i])
            i += 1
        elif c > 0:
            out.append(b[j])
            j += 1
        else:
            out.append(a[i])
            i += 1
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return out


def dedupe_roots(roots) -> list:
    """Sorted distinct copy of a list of AlgNumbers (exact comparisons)."""
    out = []
    for r in roots:
        k = len(out)
        while k > 0 and out[k - 1].compare(r) > 0:
            k -= 1
        if k < len(out) and out[k].compare(r) == 0:
            continue
        out.insert(k, r)
    return out


class SperConstructible:
    """A constructible subset of the real spectrum of the line, in canonical
    cell form: sorted distinct roots a_1 < ... < a_k and one membership flag
    for each of the 2k+1 cells I_0, {a_1}, I_1, ..., {a_k}, I_k."""

    __slots__ = ("roots", "mask")

    def __init__(self, roots, mask, normalize=True):
        roots = list(roots)
        mask = list(mask)
        if len(mask) != 2 * len(roots) + 1:
            raise SperError("mask length must be 2k+1")
        if normalize:
            j = 0
            while j < len(roots):
                if mask[2 * j] == mask[2 * j + 1] == mask[2 * j + 2]:
                    del roots[j]
                    del mask[2 * j + 1:2 * j + 3]
                else:
                    j += 1
        self.roots = tuple(roots)
        self.mask = tuple(bool(b) for b in mask)

    @classmethod
    def whole(cls) -> "SperConstructible":
        return cls((), (True,), normalize=False)

    @classmethod
    def empty(cls) -> "SperConstructible":
        return cls((), (False,), normalize=False)

    def is_empty(self) -> bool:
        return not any(self.mask)

    def is_whole(self) -> bool:
        return all(self.mask)

    def contains(self, pt: SperPoint) -> bool:
        return self.mask[_cell_of_sper_point(self.roots, pt)]

    def contains_value(self, x) -> bool:
        """Membership of an algebraic point given as AlgNumber or rational."""
        return self.mask[locate_cell(self.roots, x)]

    def cell_count(self) -> int:
        return len(self.mask)

    def membership_on(self, roots) -> list:
        """Membership of each cell of a refinement (roots must contain ours)."""
        out = []
        k = len(roots)
        for pos in range(2 * k + 1):
            if pos % 2 == 1:
                out.append(self.contains_value(roots[(pos - 1) // 2]))
            elif pos == 0:
                out.append(self.mask[0])
            else:
                b = roots[pos // 2 - 1]  # left endpoint; take the cell right of it
                c = locate_cell(self.roots, b)
                out.append(self.mask[c + 1] if c % 2 == 1 else self.mask[c])
        return out

    def complement(self) -> "SperConstructible":
        return SperConstructible(self.roots, tuple(not b for b in self.mask),
                                 normalize=False)

    def union(self, other: "SperConstructible") -> "SperConstructible":
        roots = merge_roots(list(self.roots), list(other.roots))
        a = self.membership_on(roots)
        b = other.membership_on(roots)
        return SperConstructible(roots, [x or y for x, y in zip(a, b)])

    def intersect(self, other: "SperConstructible") -> "SperConstructible":
        roots = merge_roots(list(self.roots), list(other.roots))
        a = self.membership_on(roots)
        b = other.membership_on(roots)
        return SperConstructible(roots, [x and y for x, y in zip(a, b)])

    def __eq__(self, other):
        if not isinstance(other, SperConstructible):
            return NotImplemented
        if self.mask != other.mask or len(self.roots) != len(other.roots):
            return False
        return all(a.compare(b) == 0 for a, b in zip(self.roots, other.roots))

    def __str__(self):
        return " ".join(f"{m}:{'in' if b else 'out'}"
                        for m, b in zip(cell_markers(self.roots), self.mask))

    def __repr__(self):
        return f"SperConstructible({self})"


def cell_markers(roots) -> list:
    """Printable cell markers left to right: (-inf,a1) {a1} (a1,a2) ... ."""
    k = len(roots)
    if k == 0:
        return ["(-inf,inf)"]
    out = [f"(-inf,{roots[0]})"]
    for j, r in enumerate(roots):
        out.append(f"{{{r}}}")
        right = str(roots[j + 1]) if j + 1 < k else "inf"
        out.append(f"({r},{right})")
    return out


def set_algebra(op: str, *args) -> SperConstructible:
    """Boolean algebra on canonical cell forms."""
    if op == "union":
        a, b = args
        return a.union(b)
    if op == "intersect":
        a, b = args
        return a.intersect(b)
    if op == "complement":
        (a,) = args
        return a.complement()
    raise SperError(f"unknown operation {op!r}")


def closure(s: SperConstructible) -> SperConstructible:
    """Add to every included interval cell its finite endpoints (the cuts in
    the interval specialize to them); idempotent."""
    mask = list(s.mask)
    k = len(s.roots)
    for j in range(0, 2 * k + 1, 2):
        if mask[j]:
            if j > 0:
                mask[j - 1] = True
            if j < 2 * k:
                mask[j + 1] = True
    return SperConstructible(s.roots, mask)


def interior(s: SperConstructible) -> SperConstructible:
    return closure(s.complement()).complement()


def is_closed_set(s: SperConstructible) -> bool:
    return closure(s) == s


# ---------------------------------------------------------------------------
# sign-condition formulas


@dataclass(frozen=True)
class Atom:
    """A sign condition 'poly op 0'."""

    poly: tuple
    op: str

    def __post_init__(self):
        if self.op not in ("<", "<=", "=", "!=", ">=", ">"):
            raise SperError(f"unknown relation {self.op!r}")

    def holds(self, sign: int) -> bool:
        return {
            "<": sign < 0, "<=": sign <= 0, "=": sign == 0,
            "!=": sign != 0, ">=": sign >= 0, ">": sign > 0,
        }[self.op]


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


@dataclass(frozen=True)
class Not:
    child: object


FORMULA_TRUE = Atom((), "=")
FORMULA_FALSE = Atom((), "!=")


def formula_atoms(phi) -> list:
    if isinstance(phi, Atom):
        return [phi]
    if isinstance(phi, Not):
        return formula_atoms(phi.child)
    out = []
    for c in phi.children:
        out.extend(formula_atoms(c))
    return out


def _eval_formula(phi, sign_of) -> bool:
    if isinstance(phi, Atom):
        return phi.holds(sign_of(phi.poly))
    if isinstance(phi, Not):
        return not _eval_formula(phi.child, sign_of)
    if isinstance(phi, And):
        return all(_eval_formula(c, sign_of) for c in phi.children)
    if isinstance(phi, Or):
        return any(_eval_formula(c, sign_of) for c in phi.children)
    raise SperError(f"not a formula: {phi!r}")


def substitute(phi, p):
    """Replace t by p(t) in every atom."""
    if isinstance(phi, Atom):
        return Atom(ip.compose(phi.poly, p), phi.op)
    if isinstance(phi, Not):
        return Not(substitute(phi.child, p))
    if isinstance(phi, And):
        return And(tuple(substitute(c, p) for c in phi.children))
    return Or(tuple(substitute(c, p) for c in phi.children))


def refine_disjoint(roots) -> list:
    """Refined copies of sorted roots with pairwise disjoint intervals."""
    roots = list(roots)
    for i in range(len(roots) - 1):
        while roots[i].hi > roots[i + 1].lo:
            roots[i] = roots[i].refined()
            roots[i + 1] = roots[i + 1].refined()
    return roots


def cell_samples(roots):
    """(refined roots, one evaluation point per cell): rational samples in
    the interval cells, the algebraic points themselves in the point cells."""
    if not roots:
        return [], [Fraction(0)]
    roots = refine_disjoint(roots)
    samples = [roots[0].lo]
    for j, r in enumerate(roots):
        samples.append(r)
        if j + 1 < len(roots):
            samples.append((r.hi + roots[j + 1].lo) / 2)
        else:
            samples.append(r.hi)
    return roots, samples


def _sign_at_sample(f, sample) -> int:
    if isinstance(sample, AlgNumber):
        return sign_at(f, SperPoint.alg(sample))
    return _sign_of_fraction(ip.evaluate(f, sample))


def from_formula(phi) -> SperConstructible:
    """The solution set of a Boolean combination of sign conditions.

    Roots of the atom polynomials cut the line into cells on which every
    atom is sign-constant, so one sample per cell decides membership.
    """
    atoms = formula_atoms(phi)
    roots = []
    for a in atoms:
        poly = ip.normalize(a.poly)
        if poly and ip.degree(poly) >= 1:
            roots = merge_roots(roots, real_roots(poly))
    roots, samples = cell_samples(roots)
    mask = []
    for sample in samples:
        mask.append(_eval_formula(phi, lambda f: _sign_at_sample(f, sample)))
    return SperConstructible(roots, mask)


def _rational_atom(r: Fraction, op: str) -> Atom:
    # t op r  <=>  den*t - num op 0
    r = Fraction(r)
    return Atom((-r.numerator, r.denominator), op)


def _atom_gt_root(r: AlgNumber):
    """A formula for t > r."""
    if r.is_rational():
        return _rational_atom(r.as_rational(), ">")
    sigma = sign_at(r.poly, SperPoint.cut_plus(r))
    return Or((
        _rational_atom(r.hi, ">="),
        And((_rational_atom(r.lo, ">"), Atom(ip.scale(r.poly, sigma), ">"))),
    ))


def _atom_lt_root(r: AlgNumber):
    """A formula for t < r."""
    if r.is_rational():
        return _rational_atom(r.as_rational(), "<")
    sigma = sign_at(r.poly, SperPoint.cut_minus(r))
    return Or((
        _rational_atom(r.lo, "<="),
        And((_rational_atom(r.hi, "<"), Atom(ip.scale(r.poly, sigma), ">"))),
    ))


def _atom_eq_root(r: AlgNumber):
    if r.is_rational():
        return _rational_atom(r.as_rational(), "=")
    return And((
        Atom(r.poly, "="),
        _rational_atom(r.lo, ">"),
        _rational_atom(r.hi, "<"),
    ))


def defining_formula(s: SperConstructible):
    """A sign-condition formula whose solution set is s, synthesized cell by
    cell from the canonical form."""
    if s.is_empty():
        return FORMULA_FALSE
    if s.is_whole():
        return FORMULA_TRUE
    roots = refine_disjoint(list(s.roots))
    k = len(roots)
    pieces = []
    for pos, included in enumerate(s.mask):
        if not included:
            continue
        if pos % 2 == 1:
            pieces.append(_atom_eq_root(roots[(pos - 1) // 2]))
            continue
        conds = []
        if pos > 0:
            conds.append(_atom_gt_root(roots[pos // 2 - 1]))
        if pos < 2 * k:
            conds.append(_atom_lt_root(roots[pos // 2]))
        pieces.append(And(tuple(conds)) if len(conds) > 1 else conds[0])
    return Or(tuple(pieces)) if len(pieces) > 1 else pieces[0]


# ---------------------------------------------------------------------------
# the finite cell poset


@dataclass(frozen=True)
class CellPoset:
    """The finite spectral space of cells over a root set, with labels.

    Interval cells are the generic points and each algebraic point cell
    sits under (specializes from) its two neighbouring interval cells, so
    the dimension is 1 as soon as there is at least one root.
    """

    roots: tuple
    space: FinSpec
    cells: tuple  # position -> point identifier

    def position_of(self, name) -> int:
        return self.cells.index(name)

    def point_at(self, pos: int):
        return self.cells[pos]

    def marker(self, pos: int) -> str:
        return cell_markers(self.roots)[pos]


def cell_poset(arg) -> CellPoset:
    """The cell poset of a constructible set or of a root list."""
    if isinstance(arg, SperConstructible):
        roots = list(arg.roots)
    else:
        roots = dedupe_roots(list(arg))
    k = len(roots)
    n = 2 * k + 1
    width = max(2, len(str(n - 1)))
    names = [f"c{pos:0{width}d}" for pos in range(n)]
    covers = []
    for j in range(k):
        pt = names[2 * j + 1]
        covers.append((pt, names[2 * j]))
        covers.append((pt, names[2 * j + 2]))
    return CellPoset(tuple(roots), FinSpec(names, covers), tuple(names))


# ---------------------------------------------------------------------------
# polynomial maps


@dataclass(frozen=True)
class PolyMap:
    """A nonconstant integer polynomial as a map of the affine line."""

    poly: tuple

    def __init__(self, poly):
        poly = ip.normalize(poly)
        if ip.degree(poly) < 1:
            raise ConstantMap("the map must be a nonconstant polynomial")
        object.__setattr__(self, "poly", poly)

    def __call__(self, x):
        return ip.evaluate(self.poly, x)

    def __str__(self):
        return ip.to_str(self.poly)


def _push_alg(p: PolyMap, a: AlgNumber) -> AlgNumber:
    if a.is_rational():
        return AlgNumber.from_rational(ip.evaluate(p.poly, a.as_rational()))
    q = ip.image_defining_poly(a.poly, p.poly)
    seq = ip.sturm_sequence(q)
    while True:
        if a.is_rational():
            return AlgNumber.from_rational(ip.evaluate(p.poly, a.as_rational()))
        lo, hi = ip.eval_interval(p.poly, a.lo, a.hi)
        for endpoint in (lo, hi):
            if ip.evaluate(q, endpoint) == 0:
                # is the image exactly this rational?
                h = ip.sub(ip.scale(p.poly, endpoint.denominator),
                           ip.constant(endpoint.numerator))
                if _vanishes_at(h, a):
                    return AlgNumber.from_rational(endpoint)
        if (ip.evaluate(q, lo) != 0 and ip.evaluate(q, hi) != 0
                and ip.count_roots_halfopen(seq, lo, hi) == 1):
            return AlgNumber(q, lo, hi, check=False)
        a = a.refined()


def push_point(p: PolyMap, x: SperPoint) -> SperPoint:
    """The image of a point of the real spectrum under a polynomial map."""
    d = ip.degree(p.poly)
    lead_sign = _sign_of_fraction(ip.lead(p.poly))
    if x.kind == "+inf":
        return SperPoint.pos_inf() if lead_sign > 0 else SperPoint.neg_inf()
    if x.kind == "-inf":
        s = lead_sign * (-1 if d % 2 else 1)
        return SperPoint.pos_inf() if s > 0 else SperPoint.neg_inf()
    center = _push_alg(p, x.center)
    if x.kind == "alg":
        return SperPoint.alg(center)
    # sign of p(t) - p(alpha) on the cut side, by the first nonvanishing
    # derivative at the center
    k = 1
    dk = ip.deriv(p.poly)
    while _vanishes_at(dk, x.center):
        dk = ip.deriv(dk)
        k += 1
    s = sign_at(dk, SperPoint.alg(x.center))
    if x.kind == "cut-":
        s = s * (-1 if k % 2 else 1)
    return SperPoint.cut_plus(center) if s > 0 else SperPoint.cut_minus(center)


def preimage_set(p: PolyMap, s: SperConstructible) -> SperConstructible:
    """Preimage by substituting p into every atom of a defining formula."""
    return from_formula(substitute(defining_formula(s), p.poly))


def _fiber(p: PolyMap, b) -> list:
    """All t with p(t) = b, for b rational or algebraic; exact."""
    if isinstance(b, AlgNumber) and b.is_rational():
        b = b.as_rational()
    if isinstance(b, (int, Fraction)):
        b = Fraction(b)
        h = ip.sub(ip.scale(p.poly, b.denominator), ip.constant(b.numerator))
        return real_roots(h)
    comp = ip.compose(b.poly, p.poly)
    out = []
    for tau in real_roots(comp):
        if _push_alg(p, tau).compare(b) == 0:
            out.append(tau)
    return out


def refine_cells(cells: CellPoset, extra_roots) -> CellPoset:
    """The cell poset over the union of the given roots with extra ones."""
    return cell_poset(merge_roots(list(cells.roots), dedupe_roots(list(extra_roots))))


def transfer_cons(phi: ConsFunction, src: CellPoset, dst: CellPoset) -> ConsFunction:
    """Reindex a function along a refinement (dst roots contain src roots)."""
    values = {}
    for pos in range(len(dst.cells)):
        if pos % 2 == 1:
            spos = locate_cell(src.roots, dst.roots[(pos - 1) // 2])
        elif pos == 0:
            spos = 0
        else:
            b = dst.roots[pos // 2 - 1]
            c = locate_cell(src.roots, b)
            spos = c + 1 if c % 2 == 1 else c
        values[dst.point_at(pos)] = phi(src.point_at(spos))
    return ConsFunction(dst.space, values)


def pull_cons(p: PolyMap, psi: ConsFunction, cells: CellPoset):
    """The composite psi . p as a constructible function.

    The carrier is cut at the preimages of the downstream roots, which makes
    the composite cell-constant; returns (function, its cell poset).
    """
    if psi.space != cells.space:
        raise SperError("function does not live on the given cell poset")
    roots = []
    for b in cells.roots:
        comp = ip.compose(b.poly, p.poly)
        if ip.degree(comp) >= 1:
            roots = merge_roots(roots, real_roots(comp))
    up_cells = cell_poset(roots)

    def psi_at(y) -> int:
        return psi(cells.point_at(locate_cell(cells.roots, y)))

    refined, samples = cell_samples(list(up_cells.roots))
    values = {}
    for pos, sample in enumerate(samples):
        if isinstance(sample, AlgNumber):
            img = _push_alg(p, sample)
        else:
            img = ip.evaluate(p.poly, sample)
        values[up_cells.point_at(pos)] = psi_at(img)
    return ConsFunction(up_cells.space, values), up_cells


def push_cons(p: PolyMap, phi: ConsFunction, cells: CellPoset):
    """Fiberwise-sum pushforward of a constructible function on cells.

    The downstream root set contains the images of the upstream roots and
    of the critical points of the map, which makes the fiber sums constant
    on the downstream cells; each interval cell is evaluated at three
    rational samples and disagreements raise InconsistentSamples.
    """
    if phi.space != cells.space:
        raise SperError("function does not live on the given cell poset")
    downstream_polys = []
    for a in cells.roots:
        downstream_polys.append(_push_alg(p, a).poly)
    dp = ip.deriv(p.poly)
    if ip.degree(dp) >= 1:
        for c in real_roots(dp):
            downstream_polys.append(_push_alg(p, c).poly)
    new_roots = []
    for q in downstream_polys:
        new_roots = merge_roots(new_roots, real_roots(q))
    out_cells = cell_poset(new_roots)

    def value_at(y) -> int:
        total = 0
        for tau in _fiber(p, y):
            pos = locate_cell(cells.roots, tau)
            total += phi(cells.point_at(pos))
        return total

    refined, samples = cell_samples(list(out_cells.roots))
    values = {}
    for pos, sample in enumerate(samples):
        if isinstance(sample, AlgNumber):
            values[out_cells.point_at(pos)] = value_at(sample)
            continue
        # interval cell: three rational samples must agree
        if not refined:
            extras = [Fraction(0), Fraction(1), Fraction(-1)]
        elif pos == 0:
            extras = [sample, sample - 1, sample - 2]
        elif pos == len(samples) - 1:
            extras = [sample, sample + 1, sample + 2]
        else:
            left = refined[pos // 2 - 1].hi
            right = refined[pos // 2].lo
            extras = [sample, (left + sample) / 2, (sample + right) / 2]
        vals = [value_at(e) for e in extras]
        if len(set(vals)) != 1:
            raise InconsistentSamples(
                f"cell {out_cells.marker(pos)} sampled values {vals}")
        values[out_cells.point_at(pos)] = vals[0]
    return ConsFunction(out_cells.space, values), out_cells
