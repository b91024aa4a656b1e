"""Piecewise constant paths with rational breakpoint times.

A continuous map from a real interval into a finite T0 space is, away
from finitely many accumulation patterns, a step function: constant
values on open intervals, arbitrary values at the separating instants.
Continuity at an instant t with value w and neighboring interval value
v forces v <= w, because every open set containing w must contain the
nearby values.

This module is the finite, exactly-representable fragment: finitely
many pieces, all times `fractions.Fraction`.  Paths with genuinely
infinite structure live in `regular`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .errors import InvalidPathError, NotApplicableError
from .spaces import FinitePoset, MonotoneMap, Point


def as_time(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class StepPath:
    """A finitely-piecewise-constant path.

    times t_0 < ... < t_k carry the instant values ``breakpoints``
    w_0..w_k; the open interval (t_{i-1}, t_i) carries ``intervals``
    value v_i.  Continuity amounts to v_i <= w_{i-1} and v_i <= w_i.
    ``constant_tail`` marks a path meant to sit at w_k forever after
    t_k; it changes nothing about the domain [t_0, t_k] itself.
    """

    space: FinitePoset
    times: tuple[Fraction, ...]
    breakpoints: tuple[Point, ...]
    intervals: tuple[Point, ...]
    constant_tail: bool = False

    def __post_init__(self):
        times = tuple(as_time(t) for t in self.times)
        object.__setattr__(self, "times", times)
        k = len(times) - 1
        if k < 1:
            raise InvalidPathError("a path needs at least two instants")
        if len(self.breakpoints) != k + 1 or len(self.intervals) != k:
            raise InvalidPathError(
                f"expected {k + 1} breakpoint and {k} interval values, "
                f"got {len(self.breakpoints)} and {len(self.intervals)}"
            )
        for a, b in zip(times, times[1:]):
            if not a < b:
                raise InvalidPathError("instants must strictly increase")
        for p in self.breakpoints + self.intervals:
            if p not in self.space:
                raise InvalidPathError(f"value {p!r} is not a point of the space")
        for i, v in enumerate(self.intervals):
            for w in (self.breakpoints[i], self.breakpoints[i + 1]):
                if not self.space.leq(v, w):
                    raise InvalidPathError(
                        f"interval value {v!r} not below adjacent instant value {w!r}"
                    )

    # -- basic queries -------------------------------------------------------

    @property
    def start(self) -> Fraction:
        return self.times[0]

    @property
    def end(self) -> Fraction:
        return self.times[-1]

    @property
    def segments(self) -> int:
        return len(self.intervals)

    def value_at(self, t) -> Point:
        t = as_time(t)
        if t < self.start or t > self.end:
            raise InvalidPathError(f"time {t} outside domain [{self.start}, {self.end}]")
        lo, hi = 0, len(self.times) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.times[mid] <= t:
                lo = mid
            else:
                hi = mid - 1
        if self.times[lo] == t:
            return self.breakpoints[lo]
        return self.intervals[lo]

    def value_sequence(self) -> tuple[Point, ...]:
        """Alternating instant and interval values w_0, v_1, w_1, ..., w_k."""
        out = [self.breakpoints[0]]
        for v, w in zip(self.intervals, self.breakpoints[1:]):
            out.append(v)
            out.append(w)
        return tuple(out)

    def pieces(self):
        """Yield ('bp', t_i, w_i) and ('iv', (t_{i-1}, t_i), v_i) in time order."""
        yield ("bp", self.times[0], self.breakpoints[0])
        for i, v in enumerate(self.intervals):
            yield ("iv", (self.times[i], self.times[i + 1]), v)
            yield ("bp", self.times[i + 1], self.breakpoints[i + 1])

    def image(self) -> tuple[Point, ...]:
        return tuple(sorted(set(self.breakpoints) | set(self.intervals)))

    # -- structural edits -------------------------------------------------------

    def normalize(self) -> "StepPath":
        """Drop instants whose value equals both neighboring interval values.

        Such an instant is invisible: the function is unchanged.  The
        two-instant minimum is kept even for constant paths.
        """
        times = list(self.times)
        bps = list(self.breakpoints)
        ivs = list(self.intervals)
        i = 1
        while i < len(times) - 1:
            if bps[i] == ivs[i - 1] == ivs[i]:
                del times[i], bps[i], ivs[i]
            else:
                i += 1
        return replace(
            self,
            times=tuple(times),
            breakpoints=tuple(bps),
            intervals=tuple(ivs),
        )

    def shifted(self, delta) -> "StepPath":
        delta = as_time(delta)
        return replace(self, times=tuple(t + delta for t in self.times))

    def reversed(self) -> "StepPath":
        """Time reversal about the domain midpoint."""
        s, e = self.start, self.end
        return replace(
            self,
            times=tuple(s + e - t for t in reversed(self.times)),
            breakpoints=tuple(reversed(self.breakpoints)),
            intervals=tuple(reversed(self.intervals)),
        )


def constant_path(X: FinitePoset, x: Point, a, b, constant_tail: bool = False) -> StepPath:
    return StepPath(
        space=X,
        times=(as_time(a), as_time(b)),
        breakpoints=(x, x),
        intervals=(x,),
        constant_tail=constant_tail,
    )


def concat_paths(first: StepPath, second: StepPath) -> StepPath:
    """Join two paths sharing an endpoint instant with equal value there."""
    if first.space != second.space:
        raise InvalidPathError("cannot concatenate paths over different spaces")
    if first.end != second.start:
        raise InvalidPathError("domains do not abut")
    if first.breakpoints[-1] != second.breakpoints[0]:
        raise InvalidPathError("junction values disagree")
    return StepPath(
        space=first.space,
        times=first.times + second.times[1:],
        breakpoints=first.breakpoints + second.breakpoints[1:],
        intervals=first.intervals + second.intervals,
        constant_tail=second.constant_tail,
    )


def map_path(path: StepPath, f: MonotoneMap) -> StepPath:
    """Push a path forward along a continuous map."""
    if f.source != path.space:
        raise InvalidPathError("map source does not match the path's space")
    return StepPath(
        space=f.target,
        times=path.times,
        breakpoints=tuple(f(w) for w in path.breakpoints),
        intervals=tuple(f(v) for v in path.intervals),
        constant_tail=path.constant_tail,
    )


def include_path(path: StepPath, X: FinitePoset) -> StepPath:
    """View a path in a subspace as a path in the ambient space."""
    for p in path.image():
        if p not in X:
            raise InvalidPathError(f"value {p!r} not a point of the ambient space")
    return replace(path, space=X)


# -- admissible subdivisions -------------------------------------------------------


@dataclass(frozen=True)
class SubdivisionRun:
    start: Fraction
    end: Fraction
    member: int


def minimal_admissible_subdivision(
    path: StepPath, members: list[frozenset[Point] | set[Point]]
) -> tuple[SubdivisionRun, ...]:
    """Greedy coarsest subdivision with each closed run inside one member.

    Produces times t_0 = s_0 < ... < s_m = t_k and member indices so the
    path's closed image on [s_i, s_{i+1}] lies in the chosen member.
    Each step extends as far as any member allows, so consecutive runs
    use distinct members.  Raises NotApplicableError when two adjacent
    values of the path fit in no member together, which makes any
    subdivision impossible.
    """
    mem = [frozenset(m) for m in members]
    seq = path.value_sequence()
    for a, b in zip(seq, seq[1:]):
        if not any(a in M and b in M for M in mem):
            raise NotApplicableError(
                f"adjacent values {a!r}, {b!r} fit in no member together"
            )

    pieces = list(path.pieces())

    def reach(a: Fraction, M: frozenset) -> tuple[Fraction, bool] | None:
        """Largest run start point: (tau, attained).

        attained means gamma([a, tau]) lies in M; otherwise the first
        violation is the instant at tau and any right end strictly
        inside the preceding interval works.  None means no progress.
        """
        progressed = False
        for kind, span, val in pieces:
            if kind == "bp":
                t = span
                if t < a:
                    continue
                if val not in M:
                    if not progressed:
                        return None
                    return (t, False)
                if t > a:
                    progressed = True
            else:
                lo, hi = span
                if hi <= a:
                    continue
                if val not in M:
                    if lo <= a:
                        return None
                    return (lo, True)
                progressed = True
        return (path.end, True)

    runs: list[SubdivisionRun] = []
    a = path.start
    while a < path.end:
        best: tuple[Fraction, bool] | None = None
        for M in mem:
            r = reach(a, M)
            if r is None:
                continue
            if best is None or (r[0], r[1]) > (best[0], best[1]):
                best = r
        if best is None:
            raise NotApplicableError(f"no member contains the path just after {a}")
        tau, attained = best
        if attained:
            cut = tau
        else:
            # tau is a violating instant; the interval before it is fine.
            prev_t = max(t for t in path.times if t < tau)
            cut = (max(a, prev_t) + tau) / 2
        if not cut > a:
            raise NotApplicableError(f"no member makes progress at {a}")
        closed_values = _closed_run_values(path, a, cut)
        member_idx = None
        for idx, M in enumerate(mem):
            if closed_values <= M:
                member_idx = idx
                break
        if member_idx is None:
            raise NotApplicableError("internal: greedy run fits no member")
        runs.append(SubdivisionRun(start=a, end=cut, member=member_idx))
        a = cut
    for r1, r2 in zip(runs, runs[1:]):
        if r1.member == r2.member:
            raise NotApplicableError("internal: greedy produced equal adjacent members")
    return tuple(runs)


def _closed_run_values(path: StepPath, a: Fraction, b: Fraction) -> frozenset[Point]:
    vals = {path.value_at(a), path.value_at(b)}
    for kind, span, val in path.pieces():
        if kind == "bp":
            if a <= span <= b:
                vals.add(val)
        else:
            lo, hi = span
            if lo < b and hi > a:
                vals.add(val)
    return frozenset(vals)
