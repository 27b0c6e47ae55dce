"""Exact linear algebra over Z, Q and F_p.

Scalars are plain ints (Z, residues mod p) or fractions.Fraction (Q); every
matrix entry is kept as a reduced canonical representative.  Smith normal form
over Z is the classification engine for everything else: kernels, integer
linear solving, homology of complexes and invariant factors all route through
it.  Over Q and F_p the same interface degenerates to rank normal form.

Complexes are cohomological: the differential d_n raises degree n -> n+1 and
shifts follow C[k]^n = C^{n+k} with differential (-1)^k d.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

# Degree window for all chain complexes; operations that would leave it raise
# DegreeOverflow instead of truncating.
DEGREE_MIN = -16
DEGREE_MAX = 16


class LinalgError(Exception):
    pass


class RingMismatch(LinalgError):
    pass


class DegreeOverflow(LinalgError):
    pass


@dataclass(frozen=True)
class ScalarRing:
    """The coefficient ring: Z, Q or F_p (p prime)."""

    kind: str  # "Z" | "Q" | "Fp"
    p: int | None = None

    def __post_init__(self):
        if self.kind not in ("Z", "Q", "Fp"):
            raise ValueError(f"unknown ring kind {self.kind!r}")
        if self.kind == "Fp":
            if self.p is None or self.p < 2 or not _is_prime(self.p):
                raise ValueError(f"F_p needs a prime p, got {self.p!r}")
        elif self.p is not None:
            raise ValueError("p only makes sense for F_p")

    @property
    def is_field(self) -> bool:
        return self.kind != "Z"

    def normalize(self, x):
        if self.kind == "Z":
            if isinstance(x, Fraction):
                if x.denominator != 1:
                    raise ValueError(f"{x} is not an integer")
                return int(x)
            return int(x)
        if self.kind == "Q":
            return Fraction(x)
        return int(x) % self.p

    def zero(self):
        return Fraction(0) if self.kind == "Q" else 0

    def one(self):
        return Fraction(1) if self.kind == "Q" else 1

    def add(self, a, b):
        return self.normalize(a + b)

    def sub(self, a, b):
        return self.normalize(a - b)

    def mul(self, a, b):
        return self.normalize(a * b)

    def neg(self, a):
        return self.normalize(-a)

    def is_zero(self, a) -> bool:
        return a == 0

    def is_unit(self, a) -> bool:
        if self.is_zero(a):
            return False
        if self.kind == "Z":
            return a in (1, -1)
        return True

    def inv(self, a):
        if self.kind == "Z":
            if a in (1, -1):
                return a
            raise ValueError(f"{a} is not a unit in Z")
        if self.kind == "Q":
            return Fraction(1) / Fraction(a)
        return pow(a, -1, self.p)

    def divides(self, a, b) -> bool:
        """Whether a | b.  Zero divides only zero."""
        if self.is_zero(a):
            return self.is_zero(b)
        if self.kind == "Z":
            return b % a == 0
        return True

    def exact_div(self, b, a):
        """b / a when a | b."""
        if self.kind == "Z":
            q, r = divmod(b, a)
            if r != 0:
                raise ValueError(f"{a} does not divide {b}")
            return q
        return self.mul(b, self.inv(a))

    def __str__(self):
        if self.kind == "Fp":
            return f"F_{self.p}"
        return self.kind


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in range(2, int(n ** 0.5) + 1):
        if n % q == 0:
            return False
    return True


ZZ = ScalarRing("Z")
QQ = ScalarRing("Q")


def GF(p: int) -> ScalarRing:
    return ScalarRing("Fp", p)


class Matrix:
    """Immutable exact matrix over a ScalarRing.

    Represents a linear map on column vectors: an r x c matrix maps R^c -> R^r.
    """

    __slots__ = ("ring", "rows", "cols", "entries")

    def __init__(self, ring: ScalarRing, entries, rows=None, cols=None):
        self.ring = ring
        ent = tuple(tuple(ring.normalize(x) for x in row) for row in entries)
        if rows is None:
            rows = len(ent)
        if cols is None:
            cols = len(ent[0]) if ent else 0
        if len(ent) != rows or any(len(r) != cols for r in ent):
            raise ValueError("ragged or mis-sized entry data")
        self.rows = rows
        self.cols = cols
        self.entries = ent

    @classmethod
    def zeros(cls, ring, rows, cols):
        z = ring.zero()
        return cls(ring, [[z] * cols for _ in range(rows)], rows, cols)

    @classmethod
    def identity(cls, ring, n):
        z, o = ring.zero(), ring.one()
        return cls(ring, [[o if i == j else z for j in range(n)] for i in range(n)], n, n)

    @classmethod
    def from_rows(cls, ring, rows, ncols=None):
        if not rows and ncols is None:
            ncols = 0
        return cls(ring, rows, len(rows), ncols if ncols is not None else len(rows[0]))

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __eq__(self, other):
        return (isinstance(other, Matrix) and self.ring == other.ring
                and self.rows == other.rows and self.cols == other.cols
                and self.entries == other.entries)

    def __hash__(self):
        return hash((self.ring, self.rows, self.cols, self.entries))

    def __repr__(self):
        return f"Matrix({self.ring}, {self.rows}x{self.cols}, {list(map(list, self.entries))})"

    def is_zero(self) -> bool:
        return all(self.ring.is_zero(x) for row in self.entries for x in row)

    def __add__(self, other):
        self._check(other)
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch in addition")
        R = self.ring
        return Matrix(R, [[R.add(a, b) for a, b in zip(r1, r2)]
                          for r1, r2 in zip(self.entries, other.entries)],
                      self.rows, self.cols)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        R = self.ring
        return Matrix(R, [[R.neg(a) for a in row] for row in self.entries],
                      self.rows, self.cols)

    def scale(self, c):
        R = self.ring
        c = R.normalize(c)
        return Matrix(R, [[R.mul(c, a) for a in row] for row in self.entries],
                      self.rows, self.cols)

    def __matmul__(self, other):
        self._check(other)
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        R = self.ring
        z = R.zero()
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = z
                for k in range(self.cols):
                    acc = acc + self.entries[i][k] * other.entries[k][j]
                row.append(R.normalize(acc))
            out.append(row)
        return Matrix(R, out, self.rows, other.cols)

    def transpose(self):
        return Matrix(self.ring, list(zip(*self.entries)) if self.entries else [],
                      self.cols, self.rows)

    def column(self, j):
        return [self.entries[i][j] for i in range(self.rows)]

    def hstack(self, other):
        self._check(other)
        if self.rows != other.rows:
            raise ValueError("row mismatch in hstack")
        return Matrix(self.ring,
                      [list(a) + list(b) for a, b in zip(self.entries, other.entries)],
                      self.rows, self.cols + other.cols)

    def submatrix(self, row_idx, col_idx):
        return Matrix(self.ring,
                      [[self.entries[i][j] for j in col_idx] for i in row_idx],
                      len(row_idx), len(col_idx))

    def _check(self, other):
        if self.ring != other.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")


def det(m: Matrix):
    """Exact determinant.  Bareiss over Z, Gaussian elimination over fields."""
    if m.rows != m.cols:
        raise ValueError("determinant of a non-square matrix")
    n = m.rows
    if n == 0:
        return m.ring.one()
    R = m.ring
    if R.kind == "Z":
        a = [list(r) for r in m.entries]
        sign = 1
        prev = 1
        for k in range(n - 1):
            if a[k][k] == 0:
                for i in range(k + 1, n):
                    if a[i][k] != 0:
                        a[k], a[i] = a[i], a[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            prev = a[k][k]
        return sign * a[n - 1][n - 1]
    a = [[Fraction(x) if R.kind == "Q" else x for x in row] for row in m.entries]
    d = R.one()
    for k in range(n):
        piv = None
        for i in range(k, n):
            if not R.is_zero(a[i][k]):
                piv = i
                break
        if piv is None:
            return R.zero()
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            d = R.neg(d)
        d = R.mul(d, a[k][k])
        inv = R.inv(a[k][k])
        for i in range(k + 1, n):
            f = R.mul(a[i][k], inv)
            if R.is_zero(f):
                continue
            for j in range(k, n):
                a[i][j] = R.sub(a[i][j], R.mul(f, a[k][j]))
    return d


def snf(m: Matrix):
    """Smith normal form: returns (s, u, v) with u @ m @ v = s.

    u, v are invertible over the ring and s is diagonal with d_1 | d_2 | ...
    (nonnegative over Z).  Over Q and F_p this is rank normal form with unit
    diagonal entries.
    """
    if m.ring.kind == "Z":
        return _snf_int(m)
    return _rank_normal_form(m)


def _snf_int(m: Matrix):
    rows, cols = m.rows, m.cols
    a = [list(r) for r in m.entries]
    u = [[1 if i == j else 0 for j in range(rows)] for i in range(rows)]
    v = [[1 if i == j else 0 for j in range(cols)] for i in range(cols)]
    t = 0
    while t < min(rows, cols):
        piv = None
        best = None
        for i in range(t, rows):
            for j in range(t, cols):
                x = a[i][j]
                if x != 0 and (best is None or abs(x) < best):
                    best = abs(x)
                    piv = (i, j)
        if piv is None:
            break
        pi, pj = piv
        if pi != t:
            a[t], a[pi] = a[pi], a[t]
            u[t], u[pi] = u[pi], u[t]
        if pj != t:
            for row in a:
                row[t], row[pj] = row[pj], row[t]
            for row in v:
                row[t], row[pj] = row[pj], row[t]
        pivot = a[t][t]
        dirty = False
        for i in range(t + 1, rows):
            if a[i][t] != 0:
                q = a[i][t] // pivot
                if q:
                    for j in range(t, cols):
                        a[i][j] -= q * a[t][j]
                    for j in range(rows):
                        u[i][j] -= q * u[t][j]
                if a[i][t] != 0:
                    dirty = True
        for j in range(t + 1, cols):
            if a[t][j] != 0:
                q = a[t][j] // pivot
                if q:
                    for i in range(rows):
                        a[i][j] -= q * a[i][t]
                    for i in range(cols):
                        v[i][j] -= q * v[i][t]
                if a[t][j] != 0:
                    dirty = True
        if dirty:
            continue
        # pivot row/col clear; enforce divisibility into the rest
        bad = None
        for i in range(t + 1, rows):
            for j in range(t + 1, cols):
                if a[i][j] % pivot != 0:
                    bad = i
                    break
            if bad is not None:
                break
        if bad is not None:
            for j in range(cols):
                a[t][j] += a[bad][j]
            for j in range(rows):
                u[t][j] += u[bad][j]
            continue
        t += 1
    for i in range(min(rows, cols)):
        if a[i][i] < 0:
            for j in range(cols):
                a[i][j] = -a[i][j]
            for j in range(rows):
                u[i][j] = -u[i][j]
    R = m.ring
    return (Matrix(R, a, rows, cols),
            Matrix(R, u, rows, rows),
            Matrix(R, v, cols, cols))


def _rank_normal_form(m: Matrix):
    R = m.ring
    rows, cols = m.rows, m.cols
    a = [[R.normalize(x) for x in row] for row in m.entries]
    u = [[R.one() if i == j else R.zero() for j in range(rows)] for i in range(rows)]
    v = [[R.one() if i == j else R.zero() for j in range(cols)] for i in range(cols)]
    t = 0
    while t < min(rows, cols):
        piv = None
        for i in range(t, rows):
            for j in range(t, cols):
                if not R.is_zero(a[i][j]):
                    piv = (i, j)
                    break
            if piv:
                break
        if piv is None:
            break
        pi, pj = piv
        if pi != t:
            a[t], a[pi] = a[pi], a[t]
            u[t], u[pi] = u[pi], u[t]
        if pj != t:
            for row in a:
                row[t], row[pj] = row[pj], row[t]
            for row in v:
                row[t], row[pj] = row[pj], row[t]
        inv = R.inv(a[t][t])
        for j in range(cols):
            a[t][j] = R.mul(a[t][j], inv)
        for j in range(rows):
            u[t][j] = R.mul(u[t][j], inv)
        for i in range(rows):
            if i != t and not R.is_zero(a[i][t]):
                f = a[i][t]
                for j in range(cols):
                    a[i][j] = R.sub(a[i][j], R.mul(f, a[t][j]))
                for j in range(rows):
                    u[i][j] = R.sub(u[i][j], R.mul(f, u[t][j]))
        for j in range(cols):
            if j != t and not R.is_zero(a[t][j]):
                f = a[t][j]
                for i in range(rows):
                    a[i][j] = R.sub(a[i][j], R.mul(f, a[i][t]))
                for i in range(cols):
                    v[i][j] = R.sub(v[i][j], R.mul(f, v[i][t]))
        t += 1
    return (Matrix(R, a, rows, cols),
            Matrix(R, u, rows, rows),
            Matrix(R, v, cols, cols))


def kernel_basis(m: Matrix) -> Matrix:
    """Columns form a basis of ker(m); over Z, a basis of the full kernel lattice."""
    s, u, v = snf(m)
    zero_cols = [j for j in range(m.cols)
                 if j >= m.rows or m.ring.is_zero(s[j, j])]
    return v.submatrix(range(m.cols), zero_cols)


def solve_right(a: Matrix, b: Matrix):
    """X with a @ X = b, or None when no solution exists over the ring."""
    if a.ring != b.ring:
        raise RingMismatch(f"{a.ring} vs {b.ring}")
    if a.rows != b.rows:
        raise ValueError("row mismatch in solve")
    R = a.ring
    s, u, v = snf(a)
    ub = u @ b
    rank = sum(1 for i in range(min(a.rows, a.cols)) if not R.is_zero(s[i, i]))
    y = [[R.zero()] * b.cols for _ in range(a.cols)]
    for i in range(rank):
        d = s[i, i]
        for j in range(b.cols):
            if not R.divides(d, ub[i, j]):
                return None
            y[i][j] = R.exact_div(ub[i, j], d)
    for i in range(rank, a.rows):
        for j in range(b.cols):
            if not R.is_zero(ub[i, j]):
                return None
    return v @ Matrix(R, y, a.cols, b.cols)


def rank(m: Matrix) -> int:
    s, _, _ = snf(m)
    return sum(1 for i in range(min(m.rows, m.cols)) if not m.ring.is_zero(s[i, i]))


@dataclass(frozen=True)
class FGModule:
    """A finitely generated module in invariant-factor form.

    Isomorphic to R^free_rank + R/d_1 + ... + R/d_k with d_1 | d_2 | ... and
    no d_i zero or a unit.  Over a field the factor list is always empty.
    """

    ring: ScalarRing
    invariant_factors: tuple
    free_rank: int

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("negative free rank")
        prev = None
        for d in self.invariant_factors:
            if self.ring.is_zero(d) or self.ring.is_unit(d):
                raise ValueError(f"invariant factor {d} is zero or a unit")
            if prev is not None and not self.ring.divides(prev, d):
                raise ValueError(f"invariant factors must divide in order: {prev}, {d}")
            prev = d

    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.invariant_factors

    def __str__(self):
        if self.is_zero():
            return "0"
        parts = []
        if self.free_rank == 1:
            parts.append(str(self.ring))
        elif self.free_rank > 1:
            parts.append(f"{self.ring}^{self.free_rank}")
        parts.extend(f"{self.ring}/{d}" for d in self.invariant_factors)
        return " + ".join(parts)


@dataclass(frozen=True)
class K0Class:
    """An element of K_0 of the coefficient ring, identified with its rank in Z."""

    value: int

    def __add__(self, other):
        return K0Class(self.value + other.value)

    def __sub__(self, other):
        return K0Class(self.value - other.value)

    def __neg__(self):
        return K0Class(-self.value)


def cokernel_module(ring: ScalarRing, ambient_rank: int, relations: Matrix) -> FGModule:
    """R^ambient_rank / column span of relations, in invariant-factor form."""
    s, _, _ = snf(relations)
    factors = []
    nonzero = 0
    for i in range(min(relations.rows, relations.cols)):
        d = s[i, i]
        if ring.is_zero(d):
            continue
        nonzero += 1
        if not ring.is_unit(d):
            factors.append(d)
    return FGModule(ring, tuple(factors), ambient_rank - nonzero)


class FreeChainComplex:
    """A bounded complex of finitely generated free modules.

    ranks maps degree -> rank (> 0 entries only); diffs maps degree n to the
    matrix of d_n : C^n -> C^{n+1} (so diffs[n] is rank(n+1) x rank(n)).
    """

    __slots__ = ("ring", "ranks", "diffs")

    def __init__(self, ring: ScalarRing, ranks: dict, diffs: dict, check: bool = True):
        self.ring = ring
        self.ranks = {n: r for n, r in ranks.items() if r > 0}
        self.diffs = {}
        for n, d in diffs.items():
            if d.rows == 0 or d.cols == 0 or d.is_zero():
                continue
            self.diffs[n] = d
        # the degree window is enforced unconditionally: shifted or totalized
        # complexes must report overflow rather than truncate
        for n in self.ranks:
            if not (DEGREE_MIN <= n <= DEGREE_MAX):
                raise DegreeOverflow(f"degree {n} outside [{DEGREE_MIN}, {DEGREE_MAX}]")
        if check:
            self._validate()

    def _validate(self):
        for n, r in self.ranks.items():
            if r < 0:
                raise ValueError("negative rank")
        for n, d in self.diffs.items():
            if d.ring != self.ring:
                raise RingMismatch("differential over the wrong ring")
            if d.cols != self.rank(n) or d.rows != self.rank(n + 1):
                raise ValueError(f"d_{n} has shape {d.rows}x{d.cols}, "
                                 f"expected {self.rank(n + 1)}x{self.rank(n)}")
        for n in self.diffs:
            if n + 1 in self.diffs:
                if not (self.diffs[n + 1] @ self.diffs[n]).is_zero():
                    raise ValueError(f"d_{n + 1} . d_{n} != 0")

    @classmethod
    def zero(cls, ring):
        return cls(ring, {}, {})

    @classmethod
    def free_module(cls, ring, rank_: int, degree: int = 0):
        return cls(ring, {degree: rank_}, {})

    @classmethod
    def from_diff(cls, ring, degree: int, matrix: Matrix):
        """Two-term complex [R^cols -> R^rows] in degrees degree, degree+1."""
        return cls(ring, {degree: matrix.cols, degree + 1: matrix.rows},
                   {degree: matrix})

    def rank(self, n: int) -> int:
        return self.ranks.get(n, 0)

    def diff(self, n: int) -> Matrix:
        d = self.diffs.get(n)
        if d is not None:
            return d
        return Matrix.zeros(self.ring, self.rank(n + 1), self.rank(n))

    def degrees(self):
        return sorted(self.ranks)

    def is_zero(self) -> bool:
        return not self.ranks

    def total_rank(self) -> int:
        return sum(self.ranks.values())

    def min_degree(self):
        return min(self.ranks) if self.ranks else None

    def max_degree(self):
        return max(self.ranks) if self.ranks else None

    def shift(self, k: int) -> "FreeChainComplex":
        """C[k]^n = C^{n+k}, differential scaled by (-1)^k."""
        sign = self.ring.one() if k % 2 == 0 else self.ring.neg(self.ring.one())
        return FreeChainComplex(
            self.ring,
            {n - k: r for n, r in self.ranks.items()},
            {n - k: d.scale(sign) for n, d in self.diffs.items()},
            check=False)

    def direct_sum(self, other: "FreeChainComplex") -> "FreeChainComplex":
        if self.ring != other.ring:
            raise RingMismatch("direct sum over different rings")
        ranks = {}
        for n in set(self.ranks) | set(other.ranks):
            ranks[n] = self.rank(n) + other.rank(n)
        diffs = {}
        for n in set(self.diffs) | set(other.diffs):
            a, b = self.diff(n), other.diff(n)
            rows, cols = a.rows + b.rows, a.cols + b.cols
            m = [[self.ring.zero()] * cols for _ in range(rows)]
            for i in range(a.rows):
                for j in range(a.cols):
                    m[i][j] = a[i, j]
            for i in range(b.rows):
                for j in range(b.cols):
                    m[a.rows + i][a.cols + j] = b[i, j]
            diffs[n] = Matrix(self.ring, m, rows, cols)
        return FreeChainComplex(self.ring, ranks, diffs, check=False)

    def __eq__(self, other):
        return (isinstance(other, FreeChainComplex) and self.ring == other.ring
                and self.ranks == other.ranks
                and {n: d for n, d in self.diffs.items()} == {n: d for n, d in other.diffs.items()})

    def __hash__(self):
        return hash((self.ring, tuple(sorted(self.ranks.items())),
                     tuple(sorted(self.diffs.items()))))

    def __repr__(self):
        return f"FreeChainComplex({self.ring}, ranks={self.ranks})"


class ChainMap:
    """A degreewise map of complexes commuting with the differentials."""

    __slots__ = ("source", "target", "mats")

    def __init__(self, source: FreeChainComplex, target: FreeChainComplex,
                 mats: dict, check: bool = True):
        if source.ring != target.ring:
            raise RingMismatch("chain map between different rings")
        self.source = source
        self.target = target
        self.mats = {}
        for n, m in mats.items():
            if m.rows == 0 or m.cols == 0 or m.is_zero():
                continue
            self.mats[n] = m
        if check:
            self._validate()

    def _validate(self):
        for n, m in self.mats.items():
            if m.cols != self.source.rank(n) or m.rows != self.target.rank(n):
                raise ValueError(f"component {n} has wrong shape")
        degs = set(self.source.ranks) | set(self.target.ranks)
        for n in degs:
            lhs = self.target.diff(n) @ self.component(n)
            rhs = self.component(n + 1) @ self.source.diff(n)
            if lhs != rhs:
                raise ValueError(f"does not commute with d in degree {n}")

    @classmethod
    def zero(cls, source, target):
        return cls(source, target, {}, check=False)

    @classmethod
    def identity(cls, c: FreeChainComplex):
        return cls(c, c, {n: Matrix.identity(c.ring, r) for n, r in c.ranks.items()},
                   check=False)

    def component(self, n: int) -> Matrix:
        m = self.mats.get(n)
        if m is not None:
            return m
        return Matrix.zeros(self.source.ring, self.target.rank(n), self.source.rank(n))

    def compose(self, other: "ChainMap") -> "ChainMap":
        """self after other."""
        if other.target is not self.source and other.target != self.source:
            raise ValueError("composition mismatch")
        mats = {}
        for n in set(self.mats) | set(other.mats):
            mats[n] = self.component(n) @ other.component(n)
        return ChainMap(other.source, self.target, mats, check=False)

    def __add__(self, other):
        mats = {}
        for n in set(self.mats) | set(other.mats):
            mats[n] = self.component(n) + other.component(n)
        return ChainMap(self.source, self.target, mats, check=False)

    def __neg__(self):
        return ChainMap(self.source, self.target,
                        {n: -m for n, m in self.mats.items()}, check=False)

    def shift(self, k: int) -> "ChainMap":
        return ChainMap(self.source.shift(k), self.target.shift(k),
                        {n - k: m for n, m in self.mats.items()}, check=False)

    def is_zero(self) -> bool:
        return not self.mats

    def __eq__(self, other):
        return (isinstance(other, ChainMap) and self.source == other.source
                and self.target == other.target and self.mats == other.mats)

    def __repr__(self):
        return f"ChainMap(degrees={sorted(self.mats)})"


def homology(c: FreeChainComplex) -> dict:
    """Degree -> FGModule with H^n = ker d_n / im d_{n-1}."""
    out = {}
    degs = set(c.ranks)
    for n in sorted(degs):
        k = kernel_basis(c.diff(n))
        if k.cols == 0:
            continue
        prev = c.diff(n - 1)
        if prev.cols == 0:
            rel = Matrix.zeros(c.ring, k.cols, 0)
        else:
            x = solve_right(k, prev)
            if x is None:
                raise LinalgError("image does not lie in the kernel; d^2 != 0?")
            rel = x
        mod = cokernel_module(c.ring, k.cols, rel)
        if not mod.is_zero():
            out[n] = mod
    return out


def is_acyclic(c: FreeChainComplex) -> bool:
    return not homology(c)


def k0_rank(c: FreeChainComplex) -> K0Class:
    """Alternating sum of ranks; a quasi-isomorphism invariant."""
    return K0Class(sum((-1) ** (n % 2) * r for n, r in c.ranks.items()))


def cone(f: ChainMap) -> tuple:
    """Mapping cone of f : A -> B.

    cone^n = A^{n+1} (+) B^n with d(a, b) = (-d_A a, f a + d_B b).
    Returns (cone, include : B -> cone, project : cone -> A[1]).
    """
    a, b = f.source, f.target
    R = a.ring
    ranks = {}
    for n in set(x - 1 for x in a.ranks) | set(b.ranks):
        r = a.rank(n + 1) + b.rank(n)
        if r:
            ranks[n] = r
    diffs = {}
    for n in ranks:
        ra1, rb = a.rank(n + 1), b.rank(n)
        ra2, rb1 = a.rank(n + 2), b.rank(n + 1)
        rows, cols = ra2 + rb1, ra1 + rb
        if rows == 0 or cols == 0:
            continue
        m = [[R.zero()] * cols for _ in range(rows)]
        da = a.diff(n + 1)
        for i in range(ra2):
            for j in range(ra1):
                m[i][j] = R.neg(da[i, j])
        fc = f.component(n + 1)
        for i in range(rb1):
            for j in range(ra1):
                m[ra2 + i][j] = fc[i, j]
        db = b.diff(n)
        for i in range(rb1):
            for j in range(rb):
                m[ra2 + i][ra1 + j] = db[i, j]
        diffs[n] = Matrix(R, m, rows, cols)
    cn = FreeChainComplex(R, ranks, diffs, check=False)
    inc = {}
    for n, rb in b.ranks.items():
        ra1 = a.rank(n + 1)
        m = Matrix.zeros(R, ra1 + rb, rb).entries
        m = [list(r) for r in m]
        for i in range(rb):
            m[ra1 + i][i] = R.one()
        inc[n] = Matrix(R, m, ra1 + rb, rb)
    include = ChainMap(b, cn, inc, check=False)
    shifted = a.shift(1)
    proj = {}
    for n in cn.ranks:
        ra1, rb = a.rank(n + 1), b.rank(n)
        if ra1 == 0:
            continue
        m = [[R.zero()] * (ra1 + rb) for _ in range(ra1)]
        for i in range(ra1):
            m[i][i] = R.one()
        proj[n] = Matrix(R, m, ra1, ra1 + rb)
    project = ChainMap(cn, shifted, proj, check=False)
    return cn, include, project


def _tensor_basis(c1: FreeChainComplex, c2: FreeChainComplex):
    """Ordered basis labels (p, q, i, j) of the total tensor complex per degree."""
    basis = {}
    for p, r1 in sorted(c1.ranks.items()):
        for q, r2 in sorted(c2.ranks.items()):
            lab = basis.setdefault(p + q, [])
            for i in range(r1):
                for j in range(r2):
                    lab.append((p, q, i, j))
    return basis


def complex_from_basis(ring, basis: dict, entry_fn) -> tuple:
    """Build a complex from labelled bases.

    basis: degree -> ordered label list.  entry_fn(degree, label) yields
    (target_label, coefficient) pairs in degree+1.  Returns (complex, index)
    where index maps (degree, label) -> position.
    """
    index = {}
    for n, labels in basis.items():
        for pos, lab in enumerate(labels):
            index[(n, lab)] = pos
    ranks = {n: len(labels) for n, labels in basis.items() if labels}
    diffs = {}
    for n, labels in basis.items():
        tgt = basis.get(n + 1, [])
        if not labels or not tgt:
            continue
        m = [[ring.zero()] * len(labels) for _ in range(len(tgt))]
        touched = False
        for col, lab in enumerate(labels):
            for tlab, coeff in entry_fn(n, lab):
                if ring.is_zero(coeff):
                    continue
                m[index[(n + 1, tlab)]][col] = ring.add(m[index[(n + 1, tlab)]][col], coeff)
                touched = True
        if touched:
            diffs[n] = Matrix(ring, m, len(tgt), len(labels))
    return FreeChainComplex(ring, ranks, diffs, check=False), index


def tensor_total(c1: FreeChainComplex, c2: FreeChainComplex) -> FreeChainComplex:
    cx, _ = tensor_with_basis(c1, c2)
    return cx


def tensor_with_basis(c1: FreeChainComplex, c2: FreeChainComplex):
    """Total complex of the double complex c1 (x) c2 with Koszul signs.

    d(x (x) y) = dx (x) y + (-1)^p x (x) dy for x in degree p.
    """
    if c1.ring != c2.ring:
        raise RingMismatch("tensor over different rings")
    R = c1.ring
    basis = _tensor_basis(c1, c2)
    one = R.one()
    neg = R.neg(one)

    def entries(n, lab):
        p, q, i, j = lab
        d1 = c1.diff(p)
        for i2 in range(c1.rank(p + 1)):
            co = d1[i2, i]
            if not R.is_zero(co):
                yield (p + 1, q, i2, j), co
        sign = one if p % 2 == 0 else neg
        d2 = c2.diff(q)
        for j2 in range(c2.rank(q + 1)):
            co = d2[j2, j]
            if not R.is_zero(co):
                yield (p, q + 1, i, j2), R.mul(sign, co)

    return complex_from_basis(R, basis, entries)


def tensor_chain_maps(f: ChainMap, g: ChainMap) -> ChainMap:
    """f (x) g on the total tensor complexes (no extra signs for degree-0 maps)."""
    src, src_idx = tensor_with_basis(f.source, g.source)
    tgt, tgt_idx = tensor_with_basis(f.target, g.target)
    R = src.ring
    mats = {}
    src_basis = _tensor_basis(f.source, g.source)
    for n, labels in src_basis.items():
        rows = tgt.rank(n)
        if rows == 0 or not labels:
            continue
        m = [[R.zero()] * len(labels) for _ in range(rows)]
        touched = False
        for col, (p, q, i, j) in enumerate(labels):
            fm = f.component(p)
            gm = g.component(q)
            for i2 in range(f.target.rank(p)):
                a = fm[i2, i]
                if R.is_zero(a):
                    continue
                for j2 in range(g.target.rank(q)):
                    b = gm[j2, j]
                    if R.is_zero(b):
                        continue
                    m[tgt_idx[(n, (p, q, i2, j2))]][col] = R.mul(a, b)
                    touched = True
        if touched:
            mats[n] = Matrix(R, m, rows, len(labels))
    return ChainMap(src, tgt, mats, check=False)


def tor_amplitude(c: FreeChainComplex):
    """Smallest [a, b] with H^n(c (x)^L N) = 0 outside for every module N.

    Exact over a PID or a field: complexes of frees split into their homology,
    and torsion in the lowest nonzero homology widens the window one step
    down.  Returns None for an acyclic complex.
    """
    h = homology(c)
    if not h:
        return None
    degs = sorted(h)
    a, b = degs[0], degs[-1]
    if h[a].invariant_factors:
        a -= 1
    return (a, b)


def hom_basis(c1: FreeChainComplex, c2: FreeChainComplex):
    """Ordered basis labels (t, i, j) of the Hom complex per degree.

    Degree-n part is prod_t Hom(c1^t, c2^{t+n}); label (t, i, j) is the matrix
    unit sending basis vector i of c1^t to basis vector j of c2^{t+n}.
    """
    basis = {}
    for t, r1 in sorted(c1.ranks.items()):
        for s, r2 in sorted(c2.ranks.items()):
            lab = basis.setdefault(s - t, [])
            for i in range(r1):
                for j in range(r2):
                    lab.append((t, i, j))
    for lab in basis.values():
        lab.sort()
    return basis


def hom_complex(c1: FreeChainComplex, c2: FreeChainComplex):
    """Total Hom complex with d(f) = d_2 . f - (-1)^n f . d_1."""
    if c1.ring != c2.ring:
        raise RingMismatch("hom over different rings")
    R = c1.ring
    basis = hom_basis(c1, c2)
    one, neg = R.one(), R.neg(R.one())

    def entries(n, lab):
        t, i, j = lab
        d2 = c2.diff(t + n)
        for j2 in range(c2.rank(t + n + 1)):
            co = d2[j2, j]
            if not R.is_zero(co):
                yield (t, i, j2), co
        # -(-1)^n f . d_1 : component at source degree t-1 uses f at degree t
        sign = neg if n % 2 == 0 else one
        d1 = c1.diff(t - 1)
        for i2 in range(c1.rank(t - 1)):
            co = d1[i, i2]
            if not R.is_zero(co):
                yield (t - 1, i2, j), R.mul(sign, co)

    return complex_from_basis(R, basis, entries)
