"""Step paths: construction rules, evaluation, edits, subdivisions."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poset_pursuit.errors import InvalidPathError, NotApplicableError
from poset_pursuit.spaces import catalog, closest_point_retraction, poset
from poset_pursuit.steppaths import (
    StepPath,
    concat_paths,
    constant_path,
    include_path,
    map_path,
    minimal_admissible_subdivision,
    SubdivisionRun,
)


def fence_path():
    # f1 at 0, f2 on (0,1), f3 at 1 over Fence(5)
    X = catalog("Fence(5)")
    return StepPath(
        space=X,
        times=(Fraction(0), Fraction(1)),
        breakpoints=("f1", "f3"),
        intervals=("f2",),
    )


def test_interval_value_must_sit_below_neighbors():
    X = catalog("Fence(3)")
    # f1 is maximal, so it cannot be an interval value between f0 and f2
    with pytest.raises(InvalidPathError):
        StepPath(X, (0, 1), ("f0", "f2"), ("f1",))
    ok = StepPath(X, (0, 1), ("f1", "f1"), ("f0",))
    assert ok.value_at(Fraction(1, 2)) == "f0"


def test_time_and_shape_validation():
    X = catalog("Chain(2)")
    with pytest.raises(InvalidPathError):
        StepPath(X, (0,), ("x0",), ())
    with pytest.raises(InvalidPathError):
        StepPath(X, (1, 0), ("x0", "x0"), ("x0",))
    with pytest.raises(InvalidPathError):
        StepPath(X, (0, 1), ("x0", "x0"), ("x0", "x0"))
    with pytest.raises(InvalidPathError):
        StepPath(X, (0, 1), ("x0", "zzz"), ("x0",))


def test_value_at_and_domain_checks():
    p = fence_path()
    assert p.value_at(0) == "f1"
    assert p.value_at(Fraction(1, 3)) == "f2"
    assert p.value_at(1) == "f3"
    with pytest.raises(InvalidPathError):
        p.value_at(2)


def test_value_sequence_alternates():
    X = catalog("S30op")
    p = StepPath(X, (0, 1, 2, 3), ("1'", "1", "2", "2'"), ("1'", "0", "2'"))
    assert p.value_sequence() == ("1'", "1'", "1", "0", "2", "2'", "2'")


def test_normalize_drops_invisible_instants_only():
    X = catalog("ConeV(2)")
    p = StepPath(
        X,
        (0, 1, 2, 3),
        ("c0", "c0", "a", "c1"),
        ("c0", "c0", "c1"),
    )
    q = p.normalize()
    assert q.times == (Fraction(0), Fraction(2), Fraction(3))
    assert q.breakpoints == ("c0", "a", "c1")
    for t in [Fraction(0), Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(5, 2), Fraction(3)]:
        assert q.value_at(t) == p.value_at(t)


def test_concat_requires_matching_junction():
    X = catalog("ConeV(2)")
    p1 = constant_path(X, "c0", 0, 1)
    p2 = StepPath(X, (1, 2), ("c0", "a"), ("c0",))
    joined = concat_paths(p1, p2)
    assert joined.value_at(Fraction(3, 2)) == "c0"
    assert joined.end == 2
    p3 = constant_path(X, "c1", 1, 2)
    with pytest.raises(InvalidPathError):
        concat_paths(p1, p3)
    with pytest.raises(InvalidPathError):
        concat_paths(p1, constant_path(X, "c0", 5, 6))


def test_shift_and_reverse():
    p = fence_path()
    s = p.shifted(10)
    assert s.start == 10 and s.end == 11
    r = p.reversed()
    assert r.value_at(0) == "f3"
    assert r.value_at(1) == "f1"
    assert r.value_at(Fraction(1, 2)) == "f2"


def test_map_and_include_round_trip():
    X = catalog("S21op")
    r = closest_point_retraction(X, ["0", "1", "1'"])
    p = StepPath(X, (0, 1, 2), ("2'", "2", "0"), ("2'", "0"))
    q = map_path(p, r)
    assert q.space.points == ("0", "1", "1'")
    assert q.breakpoints == ("0", "0", "0")
    back = include_path(q, X)
    assert back.space == X
    assert back.value_at(Fraction(1, 2)) == "0"
    with pytest.raises(InvalidPathError):
        include_path(q, catalog("Yoke"))


# -- subdivision ----------------------------------------------------------------


def test_subdivision_frozen_claw_walk():
    X = catalog("S30op")
    p = StepPath(X, (0, 1, 2, 3), ("1'", "1", "2", "2'"), ("1'", "0", "2'"))
    members = [
        frozenset(X.down_set("1")),
        frozenset(X.down_set("2")),
        frozenset(X.down_set("3")),
    ]
    runs = minimal_admissible_subdivision(p, members)
    assert runs == (
        SubdivisionRun(Fraction(0), Fraction(3, 2), 0),
        SubdivisionRun(Fraction(3, 2), Fraction(3), 1),
    )


def test_subdivision_impossible_pair_raises():
    X = catalog("S30op")
    p = StepPath(X, (0, 1), ("1", "1"), ("1'",))
    with pytest.raises(NotApplicableError):
        minimal_admissible_subdivision(p, [frozenset(X.down_set("2"))])


def test_subdivision_single_member_whole_domain():
    X = catalog("S30op")
    p = StepPath(X, (0, 1, 2), ("1'", "1", "0"), ("1'", "0"))
    runs = minimal_admissible_subdivision(p, [frozenset(X.down_set("1"))])
    assert runs == (SubdivisionRun(Fraction(0), Fraction(2), 0),)


def random_walk_path(X, rng, nseg):
    # random continuous step path: alternate instants and lower interval values
    bps = [rng.choice(X.points)]
    ivs = []
    for _ in range(nseg):
        v = rng.choice(X.down_set(bps[-1]))
        candidates = [w for w in X.points if X.leq(v, w)]
        w = rng.choice(candidates)
        ivs.append(v)
        bps.append(w)
    times = sorted(rng.sample(range(100), nseg + 1))
    return StepPath(X, tuple(Fraction(t) for t in times), tuple(bps), tuple(ivs))


def test_subdivision_runs_are_sound_on_random_walks():
    X = catalog("S30op")
    members = [frozenset(X.down_set(p)) for p in ("1", "2", "3")]
    rng = random.Random(7)
    built = 0
    for _ in range(300):
        p = random_walk_path(X, rng, rng.randint(1, 6))
        try:
            runs = minimal_admissible_subdivision(p, members)
        except NotApplicableError:
            continue
        built += 1
        assert runs[0].start == p.start
        assert runs[-1].end == p.end
        for r1, r2 in zip(runs, runs[1:]):
            assert r1.end == r2.start
            assert r1.member != r2.member
        for r in runs:
            M = members[r.member]
            # closed-run image check on a fine probe grid
            probes = {r.start, r.end}
            for t in p.times:
                if r.start <= t <= r.end:
                    probes.add(t)
                    for u in (t - Fraction(1, 7), t + Fraction(1, 7)):
                        if r.start <= u <= r.end:
                            probes.add(u)
            probes.add((r.start + r.end) / 2)
            for t in probes:
                assert p.value_at(t) in M
    assert built > 30


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**30))
def test_normalization_preserves_function(seed):
    rng = random.Random(seed)
    X = catalog("S21")
    p = random_walk_path(X, rng, rng.randint(1, 5))
    q = p.normalize()
    probes = set(p.times) | set(q.times)
    for t in list(probes):
        for u in (t - Fraction(1, 3), t + Fraction(1, 3)):
            if p.start <= u <= p.end:
                probes.add(u)
    for t in probes:
        assert p.value_at(t) == q.value_at(t)
