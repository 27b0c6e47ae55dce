import math
from itertools import product
from random import Random

import pytest

from sheafkit.randgen import random_monotone_map, random_poset
from sheafkit.space import (
    CycleDetected, DuplicatePoint, MonotoneMap, Stratification,
    UnknownPoint, admissible_order, build_space, classify_subset,
    fiber_product, fibers_discrete, krull_dim, subspace,
)


def sierpinski():
    return build_space(["s", "eta"], [("s", "eta")])


def pseudo_circle():
    return build_space(["a", "b", "x", "y"],
                       [("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")])


class TestBuildSpace:
    def test_sierpinski_opens(self):
        m = sierpinski()
        opens = [s for s in _subsets(m.points) if m.is_open(s)]
        assert sorted(map(sorted, opens)) == [[], ["eta"], ["eta", "s"]]

    def test_one_point(self):
        m = build_space(["x"], [])
        assert m.points == ("x",) and m.covers == ()

    def test_cycle_rejected(self):
        with pytest.raises(CycleDetected):
            build_space(["a", "b"], [("a", "b"), ("b", "a")])
        with pytest.raises(CycleDetected):
            build_space(["a"], [("a", "a")])

    def test_duplicates_rejected(self):
        with pytest.raises(DuplicatePoint):
            build_space(["a", "a"], [])

    def test_transitive_edges_reduce_to_hasse(self):
        m = build_space(["a", "b", "c"], [("a", "b"), ("b", "c"), ("a", "c")])
        assert m.covers == (("a", "b"), ("b", "c"))
        assert m.le("a", "c")

    def test_unknown_point_in_cover(self):
        with pytest.raises(UnknownPoint):
            build_space(["a"], [("a", "z")])


def _subsets(points):
    out = []
    for bits in product([0, 1], repeat=len(points)):
        out.append(frozenset(p for p, b in zip(points, bits) if b))
    return out


class TestClassify:
    def test_sierpinski(self):
        m = sierpinski()
        c = classify_subset(m, {"eta"})
        assert (c["open"], c["closed"], c["locally_closed"]) == (True, False, True)
        c = classify_subset(m, {"s"})
        assert (c["open"], c["closed"], c["locally_closed"]) == (False, True, True)

    def test_empty_subset(self):
        m = sierpinski()
        c = classify_subset(m, set())
        assert c == {"open": True, "closed": True, "locally_closed": True}

    def test_not_locally_closed(self):
        # in a 3-chain the two ends are neither open nor closed nor
        # open-in-their-closure
        m = build_space(["a", "b", "c"], [("a", "b"), ("b", "c")])
        c = classify_subset(m, {"a", "c"})
        assert not c["locally_closed"]

    def test_unknown_point(self):
        with pytest.raises(UnknownPoint):
            classify_subset(sierpinski(), {"zz"})


class TestKrullDim:
    def test_examples(self):
        assert krull_dim(sierpinski()) == 1
        assert krull_dim(build_space(list("abcde"), [])) == 0
        chain = build_space(list("wxyz"), [("w", "x"), ("x", "y"), ("y", "z")])
        assert krull_dim(chain) == 3
        assert krull_dim(build_space([], [])) == -math.inf


class TestFiberProduct:
    def test_disjoint_opens(self):
        m = sierpinski()
        u, ju = subspace(m, {"eta"})
        z, jz = subspace(m, {"s"})
        w, _, _ = fiber_product(ju, jz)
        assert w.points == ()

    def test_diagonal(self):
        m = sierpinski()
        idm = MonotoneMap.identity(m)
        w, p1, p2 = fiber_product(idm, idm)
        assert len(w.points) == 2
        assert krull_dim(w) == krull_dim(m)

    def test_antichain_over_point(self):
        ab = build_space(["a", "b"], [])
        pt = build_space(["*"], [])
        f = MonotoneMap.constant(ab, pt, "*")
        w, p1, _ = fiber_product(f, MonotoneMap.identity(pt))
        assert len(w.points) == 2 and krull_dim(w) == 0

    def test_universal_property_exhaustive(self):
        # over a family of small cospans, enumerate every cone (all pairs of
        # compatible maps from every shape) and check the mediating map into
        # the fiber product exists and is unique
        shapes = [
            build_space(["0"], []),
            build_space(["0", "1"], []),
            build_space(["0", "1"], [("0", "1")]),
            build_space(["0", "1", "2"], [("0", "1"), ("0", "2")]),
        ]
        cospans = []
        si = sierpinski()
        v = build_space(["m", "l", "r"], [("m", "l"), ("m", "r")])
        cospans.append((MonotoneMap(v, si, [("m", "s"), ("l", "eta"), ("r", "eta")]),
                        MonotoneMap.identity(si)))
        cospans.append((MonotoneMap(si, si, [("s", "s"), ("eta", "eta")]),
                        MonotoneMap(v, si, [("m", "s"), ("l", "s"), ("r", "eta")])))
        ab = build_space(["a", "b"], [])
        pt = build_space(["*"], [])
        cospans.append((MonotoneMap.constant(ab, pt, "*"),
                        MonotoneMap.constant(si, pt, "*")))
        for f, p in cospans:
            w, pr_x, pr_t = fiber_product(f, p)
            for cone_space in shapes:
                for q1 in _all_monotone(cone_space, f.source):
                    for q2 in _all_monotone(cone_space, p.source):
                        if any(f(q1(c)) != p(q2(c)) for c in cone_space.points):
                            continue
                        med = {c: (q1(c), q2(c)) for c in cone_space.points}
                        mm = MonotoneMap(cone_space, w, list(med.items()))
                        assert all(pr_x(mm(c)) == q1(c) for c in cone_space.points)
                        assert all(pr_t(mm(c)) == q2(c) for c in cone_space.points)
                        others = [v2 for v2 in _all_monotone(cone_space, w)
                                  if all(pr_x(v2(c)) == q1(c) and pr_t(v2(c)) == q2(c)
                                         for c in cone_space.points)]
                        assert len(others) == 1

    def test_dim_bound_sanity(self):
        rng = Random(12)
        for _ in range(20):
            s = random_poset(rng, 4)
            x = random_poset(rng, 4)
            t = random_poset(rng, 4)
            f = random_monotone_map(rng, x, s)
            p = random_monotone_map(rng, t, s)
            w, _, _ = fiber_product(f, p)
            if w.points:
                assert krull_dim(w) <= krull_dim(x) + krull_dim(t)


def _all_monotone(src, tgt):
    if not src.points:
        return [MonotoneMap(src, tgt, [])]
    out = []
    for images in product(tgt.points, repeat=len(src.points)):
        mapping = dict(zip(src.points, images))
        if all(tgt.le(mapping[a], mapping[b]) for a, b in src.covers):
            out.append(MonotoneMap(src, tgt, list(mapping.items())))
    return out


class TestAdmissibleOrder:
    def test_examples(self):
        assert [sorted(s) for s in admissible_order(sierpinski()).strata] == [["s"], ["eta"]]
        ab = build_space(["a", "b"], [])
        assert [sorted(s) for s in admissible_order(ab).strata] == [["a"], ["b"]]
        chain = build_space(["x", "y", "z"], [("x", "y"), ("y", "z")])
        assert [sorted(s) for s in admissible_order(chain).strata] == [["x"], ["y"], ["z"]]

    def test_prefixes_closed_and_singletons_locally_closed(self):
        rng = Random(13)
        for _ in range(40):
            m = random_poset(rng, 6)
            strat = admissible_order(m)
            prefix = set()
            for s in strat.strata:
                prefix |= s
                assert m.is_closed(prefix)
                assert classify_subset(m, s)["locally_closed"]


class TestFibersDiscrete:
    def test_examples(self):
        m = sierpinski()
        ab = build_space(["a", "b"], [])
        g = MonotoneMap(ab, m, [("a", "s"), ("b", "eta")])
        assert fibers_discrete(g)
        pt = build_space(["*"], [])
        assert not fibers_discrete(MonotoneMap.constant(m, pt, "*"))
        assert fibers_discrete(MonotoneMap.identity(m))


class TestBooleanAlgebra:
    def test_up_sets_generate_power_set(self):
        # every subset is a boolean combination of basic opens, checked
        # exhaustively: points are separated by their basic-open fingerprints
        rng = Random(14)
        for _ in range(30):
            m = random_poset(rng, 6)
            algebra = {frozenset(m.points), frozenset()}
            for p in m.points:
                algebra.add(m.up_set(p))
            # close under the operations
            while True:
                new = set()
                for a in algebra:
                    new.add(frozenset(m.points) - a)
                    for b in algebra:
                        new.add(a | b)
                        new.add(a & b)
                if new <= algebra:
                    break
                algebra |= new
            assert algebra == set(_subsets(m.points))


class TestStratification:
    def test_rejects_non_closed_prefix(self):
        m = sierpinski()
        with pytest.raises(Exception):
            Stratification(m, (frozenset({"eta"}), frozenset({"s"})))
        Stratification(m, (frozenset({"s"}), frozenset({"eta"})))
