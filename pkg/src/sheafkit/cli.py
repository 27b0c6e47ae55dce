"""Input languages, command dispatch and deterministic reports.

Text formats:

* polynomials: integer coefficients, variable t, operators + - * ^ with ^
  applied only to literal nonnegative integer exponents, parentheses;
* formulas: atoms "<poly> (<|<=|=|!=|>=|>) 0" combined with & | ! and
  parentheses;
* spaces: "space NAME" / "points: a b c" / "covers: a<b b<c";
* sheaves: "ring Z|Q|F p" / "space NAME" / per point
  "stalk x: deg d rank r; d_d = [[..],[..]]" / per cover
  "gen x<y: deg d = [[..]]" with row-major matrices, rationals as p/q;
* maps: "map NAME" / "target NAME" / "points: ..." / "covers: ..." (the
  embedded target space) / "sends: a->x b->y";
* constructible functions: "phi: s=1 eta=0".

Every command parses all of its inputs before computing anything, writes a
byte-deterministic report, and exits 0 on success, 1 on a validation
error, 2 on an internal invariant failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import intpoly as ip
from .k0 import ConsFunction, ConsFunctionError, chi, realize
from .linalg import (
    ChainMap, FGModule, FreeChainComplex, Matrix, ScalarRing, ZZ, QQ, GF,
    homology,
)
from .sheaf import (
    SheafComplex, base_change_locus, cell_decompose, pushforward, rgamma,
    SheafError,
)
from .space import FinSpec, MonotoneMap, SpaceError, build_space, krull_dim
from .sper import (
    And, Atom, Not, Or, PolyMap, SperError, InconsistentSamples,
    cell_poset, from_formula, push_cons, real_roots,
)


class ParseError(Exception):
    pass


# ---------------------------------------------------------------------------
# tokenizers


class _Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}({self.value!r})"


_RELOPS = ("<=", ">=", "!=", "<", ">", "=")


def _tokenize(text, formula=False):
    toks = []
    line, col, i = 1, 1, 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        start = (line, col)
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            toks.append(_Token("num", int(text[i:j]), *start))
            col += j - i
            i = j
            continue
        if ch == "t":
            toks.append(_Token("t", "t", *start))
            i += 1
            col += 1
            continue
        if formula:
            two = text[i:i + 2]
            if two in ("<=", ">=", "!="):
                toks.append(_Token("relop", two, *start))
                i += 2
                col += 2
                continue
            if ch in "<>=":
                toks.append(_Token("relop", ch, *start))
                i += 1
                col += 1
                continue
            if ch in "&|!":
                toks.append(_Token(ch, ch, *start))
                i += 1
                col += 1
                continue
        if ch in "+-*^()":
            toks.append(_Token(ch, ch, *start))
            i += 1
            col += 1
            continue
        raise ParseError(f"syntax error at line {line}, column {col}: "
                         f"unexpected character {ch!r}")
    toks.append(_Token("end", None, line, col))
    return toks


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind):
        t = self.next()
        if t.kind != kind:
            raise ParseError(f"syntax error at line {t.line}, column {t.col}: "
                             f"expected {kind!r}, found {t.value!r}")
        return t

    def fail(self, msg):
        t = self.peek()
        raise ParseError(f"syntax error at line {t.line}, column {t.col}: {msg}")


def _parse_poly_expr(p: _Parser):
    out = _parse_poly_term(p)
    while p.peek().kind in ("+", "-"):
        op = p.next().kind
        rhs = _parse_poly_term(p)
        out = ip.add(out, rhs) if op == "+" else ip.sub(out, rhs)
    return out


def _parse_poly_term(p: _Parser):
    out = _parse_poly_factor(p)
    while p.peek().kind == "*":
        p.next()
        out = ip.mul(out, _parse_poly_factor(p))
    return out


def _parse_poly_factor(p: _Parser):
    base = _parse_poly_atom(p)
    if p.peek().kind == "^":
        caret = p.next()
        t = p.peek()
        if t.kind != "num":
            raise ParseError(f"syntax error at line {caret.line}, column "
                             f"{caret.col}: exponent must be a nonnegative "
                             f"integer literal")
        p.next()
        return ip.power(base, t.value)
    return base


def _parse_poly_atom(p: _Parser):
    t = p.peek()
    if t.kind == "num":
        p.next()
        return ip.constant(t.value)
    if t.kind == "t":
        p.next()
        return ip.X
    if t.kind == "-":
        p.next()
        return ip.neg(_parse_poly_atom_or_factor(p))
    if t.kind == "(":
        p.next()
        inner = _parse_poly_expr(p)
        p.expect(")")
        return inner
    p.fail("expected a polynomial")


def _parse_poly_atom_or_factor(p: _Parser):
    atom = _parse_poly_atom(p)
    if p.peek().kind == "^":
        caret = p.next()
        t = p.peek()
        if t.kind != "num":
            raise ParseError(f"syntax error at line {caret.line}, column "
                             f"{caret.col}: exponent must be a nonnegative "
                             f"integer literal")
        p.next()
        return ip.power(atom, t.value)
    return atom


def parse_poly(text: str):
    """Parse the polynomial grammar into dense integer coefficients."""
    p = _Parser(_tokenize(text))
    out = _parse_poly_expr(p)
    p.expect("end")
    return out


def _parse_formula_disj(p: _Parser):
    out = [_parse_formula_conj(p)]
    while p.peek().kind == "|":
        p.next()
        out.append(_parse_formula_conj(p))
    return out[0] if len(out) == 1 else Or(tuple(out))


def _parse_formula_conj(p: _Parser):
    out = [_parse_formula_unary(p)]
    while p.peek().kind == "&":
        p.next()
        out.append(_parse_formula_unary(p))
    return out[0] if len(out) == 1 else And(tuple(out))


def _parse_formula_unary(p: _Parser):
    if p.peek().kind == "!":
        p.next()
        return Not(_parse_formula_unary(p))
    return _parse_formula_primary(p)


def _parse_formula_primary(p: _Parser):
    if p.peek().kind == "(":
        saved = p.pos
        try:
            p.next()
            inner = _parse_formula_disj(p)
            p.expect(")")
            return inner
        except ParseError:
            p.pos = saved
    return _parse_formula_atom(p)


def _parse_formula_atom(p: _Parser):
    poly = _parse_poly_expr(p)
    t = p.next()
    if t.kind != "relop":
        raise ParseError(f"syntax error at line {t.line}, column {t.col}: "
                         f"expected a relation, found {t.value!r}")
    z = p.next()
    if z.kind != "num" or z.value != 0:
        raise ParseError(f"syntax error at line {z.line}, column {z.col}: "
                         f"the right side of a relation must be the literal 0")
    return Atom(poly, t.value)


def parse_formula(text: str):
    """Parse a Boolean combination of sign conditions."""
    p = _Parser(_tokenize(text, formula=True))
    out = _parse_formula_disj(p)
    p.expect("end")
    return out


# ---------------------------------------------------------------------------
# file formats


def _content_lines(text: str):
    for idx, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield idx, line


def parse_space(text: str):
    """Parse a space file; returns (name, FinSpec)."""
    name = None
    points = None
    covers = []
    for idx, line in _content_lines(text):
        if line.startswith("space "):
            name = line.split(None, 1)[1].strip()
        elif line.startswith("points:"):
            points = line[len("points:"):].split()
        elif line.startswith("covers:"):
            for tok in line[len("covers:"):].split():
                if "<" not in tok:
                    raise ParseError(f"line {idx}: cover {tok!r} must look like a<b")
                x, y = tok.split("<", 1)
                covers.append((x, y))
        else:
            raise ParseError(f"line {idx}: unrecognized directive {line!r}")
    if name is None:
        raise ParseError("missing 'space NAME' line")
    if points is None:
        raise ParseError("missing 'points:' line")
    return name, build_space(points, covers)


def space_to_text(name: str, m: FinSpec) -> str:
    lines = [f"space {name}", "points: " + " ".join(m.points)]
    lines.append("covers: " + " ".join(f"{x}<{y}" for x, y in m.covers))
    return "\n".join(lines) + "\n"


def _parse_scalar(tok: str, ring: ScalarRing):
    try:
        if "/" in tok:
            num, den = tok.split("/", 1)
            return ring.normalize(Fraction(int(num), int(den)))
        return ring.normalize(int(tok))
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(f"bad scalar {tok!r}: {e}")


def _scalar_str(x) -> str:
    if isinstance(x, Fraction) and x.denominator != 1:
        return f"{x.numerator}/{x.denominator}"
    return str(int(x))


def _parse_matrix(text: str, ring: ScalarRing):
    """Parse row-major [[a,b],[c,d]]; [] is the empty matrix."""
    s = text.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ParseError(f"matrix literal must be bracketed, got {text!r}")
    body = s[1:-1].strip()
    rows = []
    depth = 0
    cur = ""
    for ch in body:
        if ch == "[":
            depth += 1
            cur = ""
        elif ch == "]":
            depth -= 1
            rows.append([_parse_scalar(t, ring) for t in cur.split(",") if t.strip()])
        elif depth == 1:
            cur += ch
        elif ch in ", \t":
            continue
        elif depth == 0:
            raise ParseError(f"unexpected {ch!r} in matrix literal")
    if depth != 0:
        raise ParseError(f"unbalanced brackets in matrix literal {text!r}")
    if not rows:
        return None
    ncols = len(rows[0])
    if any(len(r) != ncols for r in rows):
        raise ParseError(f"ragged matrix literal {text!r}")
    return rows


def _matrix_str(m: Matrix) -> str:
    return "[" + ",".join("[" + ",".join(_scalar_str(x) for x in row) + "]"
                          for row in m.entries) + "]"


def parse_ring(tokens) -> ScalarRing:
    if tokens == ["Z"]:
        return ZZ
    if tokens == ["Q"]:
        return QQ
    if len(tokens) == 2 and tokens[0] == "F":
        try:
            return GF(int(tokens[1]))
        except ValueError as e:
            raise ParseError(f"bad prime for F: {e}")
    raise ParseError(f"unknown ring {' '.join(tokens)!r} (expected Z, Q or F p)")


def parse_sheaf(text: str, space_name: str, m: FinSpec) -> SheafComplex:
    """Parse a sheaf file against an already-parsed space."""
    ring = None
    declared_space = None
    ranks = {}   # point -> {deg: rank}
    diffs = {}   # point -> {deg: rows}
    gen_mats = {}  # (x, y) -> {deg: rows}
    for idx, line in _content_lines(text):
        if line.startswith("ring "):
            ring = parse_ring(line.split()[1:])
        elif line.startswith("space "):
            declared_space = line.split(None, 1)[1].strip()
        elif line.startswith("stalk "):
            if ring is None:
                raise ParseError(f"line {idx}: 'ring' must come before stalk data")
            head, _, rest = line[len("stalk "):].partition(":")
            pt = head.strip()
            if pt not in set(m.points):
                raise ParseError(f"line {idx}: unknown point {pt!r}")
            ranks.setdefault(pt, {})
            diffs.setdefault(pt, {})
            for item in rest.split(";"):
                item = item.strip()
                if not item:
                    continue
                toks = item.split()
                if toks[0] == "deg":
                    if len(toks) != 4 or toks[2] != "rank":
                        raise ParseError(f"line {idx}: malformed rank item {item!r}")
                    ranks[pt][int(toks[1])] = int(toks[3])
                elif toks[0].startswith("d_"):
                    deg = int(toks[0][2:])
                    _, _, mat = item.partition("=")
                    rows = _parse_matrix(mat, ring)
                    if rows is not None:
                        diffs[pt][deg] = rows
                else:
                    raise ParseError(f"line {idx}: malformed stalk item {item!r}")
        elif line.startswith("gen "):
            if ring is None:
                raise ParseError(f"line {idx}: 'ring' must come before gen data")
            head, _, rest = line[len("gen "):].partition(":")
            head = head.strip()
            if "<" not in head:
                raise ParseError(f"line {idx}: gen needs a cover like x<y")
            x, y = head.split("<", 1)
            if (x, y) not in set(m.covers):
                raise ParseError(f"line {idx}: {x!r}<{y!r} is not a cover relation "
                                 f"of space {space_name!r}")
            gen_mats.setdefault((x, y), {})
            for item in rest.split(";"):
                item = item.strip()
                if not item:
                    continue
                toks = item.split()
                if toks[0] != "deg":
                    raise ParseError(f"line {idx}: malformed gen item {item!r}")
                deg = int(toks[1])
                _, _, mat = item.partition("=")
                rows = _parse_matrix(mat, ring)
                if rows is not None:
                    gen_mats[(x, y)][deg] = rows
        else:
            raise ParseError(f"line {idx}: unrecognized directive {line!r}")
    if ring is None:
        raise ParseError("missing 'ring' line")
    if declared_space != space_name:
        raise ParseError(f"sheaf is declared on space {declared_space!r}, "
                         f"but the space file defines {space_name!r}")
    stalks = {}
    for pt in m.points:
        rk = ranks.get(pt, {})
        dd = {}
        for deg, rows in diffs.get(pt, {}).items():
            want_rows, want_cols = rk.get(deg + 1, 0), rk.get(deg, 0)
            if len(rows) != want_rows or (rows and len(rows[0]) != want_cols):
                raise ParseError(
                    f"stalk {pt!r}: d_{deg} must be {want_rows}x{want_cols}")
            dd[deg] = Matrix(ring, rows, want_rows, want_cols)
        try:
            stalks[pt] = FreeChainComplex(ring, rk, dd)
        except ValueError as e:
            raise ParseError(f"stalk {pt!r}: {e}")
    gens = {}
    for (x, y), per_deg in gen_mats.items():
        mats = {}
        for deg, rows in per_deg.items():
            want_rows = stalks[y].rank(deg)
            want_cols = stalks[x].rank(deg)
            if len(rows) != want_rows or (rows and len(rows[0]) != want_cols):
                raise ParseError(
                    f"gen {x}<{y}: deg {deg} matrix must be {want_rows}x{want_cols}")
            mats[deg] = Matrix(ring, rows, want_rows, want_cols)
        try:
            gens[(x, y)] = ChainMap(stalks[x], stalks[y], mats)
        except ValueError as e:
            raise ParseError(f"gen {x}<{y}: {e}")
    return SheafComplex(m, ring, stalks, gens)


def ring_to_tokens(ring: ScalarRing) -> str:
    if ring.kind == "Fp":
        return f"F {ring.p}"
    return ring.kind


def sheaf_to_text(k: SheafComplex, space_name: str) -> str:
    lines = [f"ring {ring_to_tokens(k.ring)}", f"space {space_name}"]
    for pt in k.space.points:
        c = k.stalks[pt]
        if c.is_zero():
            continue
        items = [f"deg {n} rank {r}" for n, r in sorted(c.ranks.items())]
        items += [f"d_{n} = {_matrix_str(d)}" for n, d in sorted(c.diffs.items())]
        lines.append(f"stalk {pt}: " + "; ".join(items))
    for (x, y) in k.space.covers:
        g = k.gens[(x, y)]
        if g.is_zero():
            continue
        items = [f"deg {n} = {_matrix_str(mm)}" for n, mm in sorted(g.mats.items())]
        lines.append(f"gen {x}<{y}: " + "; ".join(items))
    return "\n".join(lines) + "\n"


def parse_phi(text: str, m: FinSpec) -> ConsFunction:
    body = text.strip()
    if body.startswith("phi:"):
        body = body[len("phi:"):]
    values = {}
    for tok in body.split():
        if "=" not in tok:
            raise ParseError(f"constructible function entry {tok!r} must be point=value")
        pt, val = tok.split("=", 1)
        if pt not in set(m.points):
            raise ParseError(f"unknown point {pt!r}")
        try:
            values[pt] = int(val)
        except ValueError:
            raise ParseError(f"value {val!r} for {pt!r} is not an integer")
    missing = set(m.points) - set(values)
    if missing:
        raise ParseError(f"missing values for {sorted(missing, key=str)}")
    return ConsFunction(m, values)


def parse_map(text: str, source: FinSpec):
    """Parse a map file (with its embedded target space) against a source."""
    name = None
    tgt_name = None
    points = None
    covers = []
    sends = {}
    for idx, line in _content_lines(text):
        if line.startswith("map "):
            name = line.split(None, 1)[1].strip()
        elif line.startswith("target "):
            tgt_name = line.split(None, 1)[1].strip()
        elif line.startswith("points:"):
            points = line[len("points:"):].split()
        elif line.startswith("covers:"):
            for tok in line[len("covers:"):].split():
                if "<" not in tok:
                    raise ParseError(f"line {idx}: cover {tok!r} must look like a<b")
                x, y = tok.split("<", 1)
                covers.append((x, y))
        elif line.startswith("sends:"):
            for tok in line[len("sends:"):].split():
                if "->" not in tok:
                    raise ParseError(f"line {idx}: assignment {tok!r} must look like a->x")
                x, y = tok.split("->", 1)
                sends[x] = y
        else:
            raise ParseError(f"line {idx}: unrecognized directive {line!r}")
    if name is None:
        raise ParseError("missing 'map NAME' line")
    if tgt_name is None or points is None:
        raise ParseError("map file must declare its target space "
                         "(target/points/covers lines)")
    target = build_space(points, covers)
    return name, tgt_name, MonotoneMap(source, target, list(sends.items()))


# ---------------------------------------------------------------------------
# reports


def _module_json(mod: FGModule):
    return {"free_rank": mod.free_rank,
            "invariant_factors": [str(d) for d in mod.invariant_factors]}


def _report_cohomology(k: SheafComplex, as_json: bool):
    h = homology(rgamma(k))
    if as_json:
        return json.dumps({"cohomology": {str(n): _module_json(mod)
                                          for n, mod in sorted(h.items())}},
                          sort_keys=True)
    return "\n".join(f"H^{n}: {mod}" for n, mod in sorted(h.items()))


def _phi_json(phi: ConsFunction):
    return {str(p): v for p, v in phi.values}


def cmd_cohomology(args):
    name, m = parse_space(_read(args.space))
    k = parse_sheaf(_read(args.sheaf), name, m)
    return _report_cohomology(k, args.json), 0


def cmd_pushforward(args):
    name, m = parse_space(_read(args.space))
    k = parse_sheaf(_read(args.sheaf), name, m)
    _, tgt_name, f = parse_map(_read(args.map), m)
    out = pushforward(f, k)
    if args.json:
        stalk = {str(p): {str(n): _module_json(mod)
                          for n, mod in sorted(homology(c).items())}
                 for p, c in out.stalks.items()}
        return json.dumps({"pushforward_stalk_cohomology": stalk}, sort_keys=True), 0
    return sheaf_to_text(out, tgt_name).rstrip("\n"), 0


def cmd_chi(args):
    name, m = parse_space(_read(args.space))
    k = parse_sheaf(_read(args.sheaf), name, m)
    phi = chi(k)
    if args.json:
        return json.dumps({"chi": _phi_json(phi)}, sort_keys=True), 0
    return str(phi), 0


def cmd_realize(args):
    name, m = parse_space(_read(args.space))
    phi = parse_phi(args.phi, m)
    back = chi(realize(phi))
    if back != phi:
        return "internal invariant failure: chi(realize(phi)) != phi", 2
    if args.json:
        return json.dumps({"chi_of_realization": _phi_json(back)}, sort_keys=True), 0
    return str(back), 0


def cmd_decompose(args):
    name, m = parse_space(_read(args.space))
    k = parse_sheaf(_read(args.sheaf), name, m)
    pieces, _ = cell_decompose(k)
    total = chi(k)
    acc = ConsFunction.zero(m)
    lines = []
    for pt, c in pieces:
        piece_chi = sum((-1) ** (n % 2) * r for n, r in c.ranks.items())
        lines.append(f"piece {pt}: chi={piece_chi}")
        acc = acc + ConsFunction(m, {q: (piece_chi if q == pt else 0) for q in m.points})
    ok = acc == total
    lines.append(f"chi check: {'ok' if ok else 'FAILED'}")
    if args.json:
        return json.dumps({"pieces": [{"point": str(pt),
                                       "chi": sum((-1) ** (n % 2) * r
                                                  for n, r in c.ranks.items())}
                                      for pt, c in pieces],
                           "chi_check": ok}, sort_keys=True), 0 if ok else 2
    return "\n".join(lines), 0 if ok else 2


def cmd_basechange(args):
    name, m = parse_space(_read(args.space))
    k = parse_sheaf(_read(args.sheaf), name, m)
    _, _, f = parse_map(_read(args.map), m)
    # here the sheaf lives on the source of f: the space file is the source
    locus, flags = base_change_locus(f, k)
    verdicts = {q: (q in locus) for q in f.target.points}
    if args.json:
        return json.dumps({"points": {str(q): v for q, v in verdicts.items()},
                           "locus": sorted(str(q) for q in locus),
                           "open": flags["open"], "closed": flags["closed"]},
                          sort_keys=True), 0
    lines = [f"point {q}: {'iso' if v else 'not iso'}" for q, v in verdicts.items()]
    lines.append("locus: " + " ".join(str(q) for q in sorted(locus, key=str)))
    lines.append(f"locus open: {'yes' if flags['open'] else 'no'}")
    lines.append(f"locus closed: {'yes' if flags['closed'] else 'no'}")
    return "\n".join(lines), 0


def cmd_sper_roots(args):
    roots = real_roots(parse_poly(args.poly))
    if args.json:
        return json.dumps({"roots": [str(r) for r in roots]}), 0
    lines = [f"roots: {len(roots)}"]
    lines.extend(str(r) for r in roots)
    return "\n".join(lines), 0


def cmd_sper_set(args):
    s = from_formula(parse_formula(args.formula))
    from .sper import cell_markers
    markers = cell_markers(s.roots)
    if args.json:
        return json.dumps({"cells": [{"cell": mk, "in": bool(b)}
                                     for mk, b in zip(markers, s.mask)]}), 0
    lines = [f"cells: {len(s.mask)}"]
    lines.extend(f"{mk} {'in' if b else 'out'}" for mk, b in zip(markers, s.mask))
    return "\n".join(lines), 0


def cmd_sper_cells(args):
    s = from_formula(parse_formula(args.formula))
    cp = cell_poset(s)
    dim = krull_dim(cp.space)
    if args.json:
        return json.dumps({"points": list(cp.space.points),
                           "covers": [[x, y] for x, y in cp.space.covers],
                           "cells": {cp.point_at(i): cp.marker(i)
                                     for i in range(len(cp.cells))},
                           "dim": dim if cp.space.points else None}), 0
    lines = [space_to_text("cells", cp.space).rstrip("\n")]
    for i in range(len(cp.cells)):
        lines.append(f"{cp.point_at(i)} = {cp.marker(i)}")
    lines.append(f"dim: {dim}")
    return "\n".join(lines), 0


def cmd_sper_push(args):
    p = PolyMap(parse_poly(args.poly))
    if args.formula:
        cp = cell_poset(from_formula(parse_formula(args.formula)))
    else:
        cp = cell_poset([])
    if args.phi:
        phi = parse_phi(args.phi, cp.space)
    else:
        phi = ConsFunction(cp.space, {q: 1 for q in cp.space.points})
    out, out_cells = push_cons(p, phi, cp)
    if args.json:
        return json.dumps({"cells": [{"cell": out_cells.marker(i),
                                      "point": out_cells.point_at(i),
                                      "value": out(out_cells.point_at(i))}
                                     for i in range(len(out_cells.cells))]}), 0
    lines = [f"{out_cells.marker(i)} = {out(out_cells.point_at(i))}"
             for i in range(len(out_cells.cells))]
    return "\n".join(lines), 0


def cmd_selftest(args):
    from .selftest import run_suites
    results = run_suites(seed=args.seed)
    lines = []
    total_pass = total_fail = 0
    for name, npass, nfail in results:
        lines.append(f"{name}: {npass} pass, {nfail} fail")
        total_pass += npass
        total_fail += nfail
    lines.append(f"total: {total_pass} pass, {total_fail} fail")
    code = 0 if total_fail == 0 else 2
    if args.json:
        return json.dumps({"suites": [{"name": n, "pass": p, "fail": f}
                                      for n, p, f in results],
                           "total_pass": total_pass,
                           "total_fail": total_fail}, sort_keys=True), code
    return "\n".join(lines), code


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}")


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sheafkit",
        description="constructible sheaf complexes on finite spectral spaces "
                    "and the real spectrum of the affine line")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **needs):
        sp = sub.add_parser(name)
        if needs.get("space"):
            sp.add_argument("--space", required=True, metavar="FILE")
        if needs.get("sheaf"):
            sp.add_argument("--sheaf", required=True, metavar="FILE")
        if needs.get("map"):
            sp.add_argument("--map", required=True, metavar="FILE")
        if needs.get("phi") == "required":
            sp.add_argument("--phi", required=True, metavar="STRING")
        elif needs.get("phi"):
            sp.add_argument("--phi", metavar="STRING")
        if needs.get("formula") == "required":
            sp.add_argument("--formula", required=True, metavar="STRING")
        elif needs.get("formula"):
            sp.add_argument("--formula", metavar="STRING")
        if needs.get("poly"):
            sp.add_argument("--poly", required=True, metavar="STRING")
        if needs.get("seed"):
            sp.add_argument("--seed", type=int, default=0, metavar="N")
        sp.add_argument("--json", action="store_true")
        sp.set_defaults(fn=fn)
        return sp

    add("cohomology", cmd_cohomology, space=True, sheaf=True)
    add("pushforward", cmd_pushforward, space=True, sheaf=True, map=True)
    add("chi", cmd_chi, space=True, sheaf=True)
    add("realize", cmd_realize, space=True, phi="required")
    add("decompose", cmd_decompose, space=True, sheaf=True)
    add("basechange", cmd_basechange, space=True, sheaf=True, map=True)
    add("sper-roots", cmd_sper_roots, poly=True)
    add("sper-set", cmd_sper_set, formula="required")
    add("sper-cells", cmd_sper_cells, formula="required")
    add("sper-push", cmd_sper_push, poly=True, formula=True, phi=True)
    add("selftest", cmd_selftest, seed=True)
    return ap


def run(argv):
    """Dispatch a command line; returns (report text, exit code)."""
    ap = build_arg_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors; that is a validation failure here
        code = int(e.code or 0)
        return "", (1 if code == 2 else code)
    try:
        return args.fn(args)
    except (ParseError, SpaceError, ConsFunctionError, ip.ZeroPolynomial) as e:
        return f"error: {e}", 1
    except InconsistentSamples as e:
        return f"internal invariant failure: {e}", 2
    except (SheafError, SperError) as e:
        return f"error: {e}", 1


def main():
    text, code = run(sys.argv[1:])
    if text:
        print(text)
    sys.exit(code)


if __name__ == "__main__":
    main()
