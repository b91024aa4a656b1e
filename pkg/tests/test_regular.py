"""Recursive path blocks: junctions, exact evaluation, profiles, unrolling.

The six-point space with a self-similar schedule and the two-cell
accumulation loop over the two-petal cone are worked through by hand;
their evaluations, profiles, and unrollings here are frozen expected
values computed independently of the implementation.
"""

from fractions import Fraction

import pytest

from poset_pursuit.errors import InvalidPathError
from poset_pursuit.regular import (
    Boundary,
    Profile,
    RConcat,
    RConst,
    RInstant,
    ROmega,
    RSelfSimilar,
    RSlot,
    RegularPath,
    resolve_junction,
)
from poset_pursuit.spaces import MonotoneMap, catalog


def selfsim_schedule() -> RegularPath:
    """Self-similar schedule over the six-point two-level space."""
    X = catalog("Fractal6")
    skeleton = (
        RInstant("d"),
        RConst("f", Fraction(1, 4)),
        RSlot(Fraction(1, 4)),
        RConst("e", Fraction(1, 4)),
        RInstant("d"),
        RSlot(Fraction(1, 4)),
        RInstant("b"),
    )
    root = RSelfSimilar(items=skeleton, limit="b", duration=Fraction(1))
    path = RegularPath(space=X, t0=Fraction(0), root=root)
    path.validate()
    return path


def loop_schedule() -> RegularPath:
    """Left-accumulating two-cell loop over the two-petal cone."""
    X = catalog("ConeV(2)")
    cells = (
        RConcat((RConst("c1", 1), RInstant("a"), RConst("c0", 1))),
        RConcat((RConst("c0", 1), RInstant("a"), RConst("c1", 1))),
    )
    root = ROmega(cells=cells, limit="a", side="left", duration=Fraction(1, 2))
    path = RegularPath(space=X, t0=Fraction(0), root=root)
    path.validate()
    return path


# -- junction rules ------------------------------------------------------------


def test_junction_resolution_rules():
    X = catalog("Fractal6")
    assert resolve_junction(Boundary("d", True), Boundary("d", True)) == "d"
    with pytest.raises(InvalidPathError):
        resolve_junction(Boundary("d", True), Boundary("b", True))
    assert resolve_junction(Boundary("e", False), Boundary("d", True), X) == "d"
    with pytest.raises(InvalidPathError):
        resolve_junction(Boundary("a", False), Boundary("d", True), X)
    assert resolve_junction(Boundary("e", False), Boundary("e", False)) == "e"
    with pytest.raises(InvalidPathError):
        resolve_junction(Boundary("e", False), Boundary("f", False))


# -- self-similar block -----------------------------------------------------------


def test_selfsim_frozen_evaluations():
    s = selfsim_schedule()
    expect = {
        Fraction(0): "d",
        Fraction(1, 8): "f",
        Fraction(1, 4): "d",
        Fraction(5, 16): "d",   # depth-1 copy's first junction
        Fraction(1, 3): "b",    # infinitely deep fixed point
        Fraction(21, 64): "d",  # depth-2 junction
        Fraction(1, 2): "b",
        Fraction(5, 8): "e",
        Fraction(3, 4): "d",
        Fraction(1): "b",
    }
    for t, v in expect.items():
        assert s.value_at(t) == v, t


def test_selfsim_deep_window_profile():
    s = selfsim_schedule()
    p = s.profile(Fraction(1, 4), Fraction(1, 2))
    assert p.positive == frozenset({"e", "f"})
    assert p.dense == frozenset({"d", "b"})
    assert p.instants == frozenset()


def test_selfsim_shallow_window_profile():
    s = selfsim_schedule()
    p = s.profile(Fraction(0), Fraction(1, 4))
    assert p.positive == frozenset({"f"})
    assert p.dense == frozenset()
    assert p.instants == frozenset()
    q = s.profile(Fraction(1, 2), Fraction(3, 4))
    assert q.positive == frozenset({"e"})
    assert q.union == frozenset({"e"})


def test_selfsim_witness_times():
    s = selfsim_schedule()
    t = s.find_value_time("b", Fraction(1, 4), Fraction(1, 2))
    assert t == Fraction(1, 3)
    assert s.value_at(t) == "b"
    t2 = s.find_value_time("d", Fraction(5, 16), Fraction(3, 8))
    assert t2 is not None and Fraction(5, 16) < t2 < Fraction(3, 8)
    assert s.value_at(t2) == "d"
    assert s.find_value_time("e", Fraction(0), Fraction(1, 4)) is None
    assert s.find_value_time("a", Fraction(0), Fraction(1)) is None


def test_selfsim_unroll_one_layer():
    s = selfsim_schedule()
    p = s.unroll(1)
    assert p.times == (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))
    assert p.breakpoints == ("d", "d", "b", "d", "b")
    assert p.intervals == ("f", "e", "e", "e")


def test_selfsim_unroll_agrees_at_kept_instants():
    s = selfsim_schedule()
    for k in (1, 2, 3):
        p = s.unroll(k)
        for t in p.times:
            assert p.value_at(t) == s.value_at(t), (k, t)


def test_selfsim_mapped_and_reversed():
    s = selfsim_schedule()
    X = s.space
    C = catalog("Chain(2)")
    f = MonotoneMap(
        source=X,
        target=C,
        mapping={"e": "x0", "f": "x0", "d": "x1", "a": "x1", "b": "x1", "c": "x1"},
    )
    m = s.mapped(f)
    m.validate()
    r = s.reversed()
    r.validate()
    grid = [Fraction(n, 16) for n in range(17)] + [Fraction(1, 3), Fraction(21, 64)]
    for t in grid:
        assert m.value_at(t) == f(s.value_at(t))
        assert r.value_at(t) == s.value_at(1 - t)


def test_selfsim_validation_rejects_bad_limit():
    X = catalog("Fractal6")
    skeleton = (
        RInstant("d"),
        RConst("f", Fraction(1, 2)),
        RSlot(Fraction(1, 2)),
        RInstant("d"),
    )
    # limit e sits below the skeleton values, not above them
    bad = RSelfSimilar(items=skeleton, limit="e", duration=Fraction(1))
    with pytest.raises(InvalidPathError):
        RegularPath(space=X, t0=0, root=bad).validate()


def test_skeleton_shape_rules():
    with pytest.raises(InvalidPathError):
        RSelfSimilar(items=(RSlot(1), RInstant("d")), limit="b", duration=1)
    with pytest.raises(InvalidPathError):
        RSelfSimilar(items=(RInstant("d"), RConst("f", 1)), limit="b", duration=2)


# -- accumulation block ---------------------------------------------------------------


def test_loop_frozen_evaluations():
    w = loop_schedule()
    expect = {
        Fraction(0): "a",        # accumulation instant
        Fraction(1, 4): "c1",    # junction between copies 2 and 1
        Fraction(5, 16): "c1",   # inside copy 1's first stretch
        Fraction(3, 8): "a",     # copy 1's pinned instant
        Fraction(7, 16): "c0",
        Fraction(1, 2): "c0",    # block end
        Fraction(1, 6): "c0",    # junction between copies 3 and 2
    }
    for t, v in expect.items():
        assert w.value_at(t) == v, t


def test_loop_profile_touching_accumulation():
    w = loop_schedule()
    p = w.profile(Fraction(0), Fraction(1, 8))
    assert p.positive == frozenset({"c0", "c1"})
    assert p.dense == frozenset({"a"})
    assert p.instants == frozenset()


def test_loop_profile_away_from_accumulation():
    w = loop_schedule()
    # window strictly inside copy 1's first stretch
    p = w.profile(Fraction(9, 32), Fraction(11, 32))
    assert p.union == frozenset({"c1"})
    # window spanning copy 1's pinned instant
    q = w.profile(Fraction(5, 16), Fraction(7, 16))
    assert q.positive == frozenset({"c0", "c1"})
    assert q.instants == frozenset({"a"})
    assert q.dense == frozenset()


def test_loop_witness_time_near_accumulation():
    w = loop_schedule()
    t = w.find_value_time("a", Fraction(0), Fraction(1, 8))
    assert t is not None and Fraction(0) < t < Fraction(1, 8)
    assert w.value_at(t) == "a"
    assert w.find_value_time("a", Fraction(9, 32), Fraction(11, 32)) is None


def test_loop_unroll_shape():
    w = loop_schedule()
    for k in (1, 2, 4):
        p = w.unroll(k)
        cut = Fraction(1, 2) / (k + 1)
        assert p.value_at(cut) == "a"
        assert p.value_at(cut / 2) == "a"
        # at the cut instant itself the unrolling pins the limit value
        for t in p.times:
            if t > cut:
                assert p.value_at(t) == w.value_at(t), (k, t)


def test_omega_validation_rules():
    X = catalog("ConeV(2)")
    # c1 does not sit below limit c0; only validation can see the order
    bad = ROmega(cells=(RConst("c1", 1),), limit="c0", side="left", duration=1)
    with pytest.raises(InvalidPathError):
        RegularPath(space=X, t0=0, root=bad).validate()
    # cyclic junction mismatch: cell ends at c0, next copy starts at c1
    bad2 = ROmega(
        cells=(RConcat((RConst("c0", 1), RInstant("a"), RConst("c1", 1))),),
        limit="a",
        side="left",
        duration=1,
    )
    with pytest.raises(InvalidPathError):
        RegularPath(space=X, t0=0, root=bad2).validate()


def test_omega_nesting_depth_capped_by_height():
    X = catalog("ConeV(2)")
    lvl1 = ROmega(cells=(RConst("c0", 1),), limit="c0", side="left", duration=1)
    lvl2 = ROmega(cells=(lvl1,), limit="c0", side="left", duration=1)
    lvl3 = ROmega(cells=(lvl2,), limit="a", side="left", duration=1)
    RegularPath(space=X, t0=0, root=lvl2).validate()
    with pytest.raises(InvalidPathError):
        RegularPath(space=X, t0=0, root=lvl3).validate()


def test_omega_reversed_mirrors_evaluations():
    w = loop_schedule()
    r = w.reversed()
    r.validate()
    grid = [Fraction(n, 32) for n in range(17)] + [Fraction(1, 6), Fraction(1, 12)]
    for t in grid:
        assert r.value_at(Fraction(1, 2) - t) == w.value_at(t), t


def test_concat_rejects_disagreeing_junction():
    X = catalog("ConeV(2)")
    bad = RConcat((RConst("c0", 1), RConst("c1", 1)))
    with pytest.raises(InvalidPathError):
        RegularPath(space=X, t0=0, root=bad).validate()
