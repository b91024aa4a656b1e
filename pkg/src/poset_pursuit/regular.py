"""Paths with infinitely many pieces in closed recursive form.

Step paths cannot express a pursuer schedule that visits infinitely
many values in finite time.  The winning schedules this engine builds
need exactly two infinite patterns:

* an accumulation block: countably many copies of a finite cell loop,
  shrinking geometrically toward one end of the block, with a declared
  value at the accumulation instant; and

* a self-similar block: a finite skeleton containing slots, each slot
  holding a scaled copy of the whole block, with a declared value at
  the infinitely-deep points.

Both patterns keep every time coordinate rational, so evaluation,
value profiles over open windows, and witness-time searches are exact.
Continuity is enforced locally: where two pieces meet, a piece pinned
to an instant keeps its value and its neighbor must sit below it;
where nothing is pinned the values must agree.  At an accumulation or
self-similar limit, every value occurring arbitrarily close must sit
below the declared limit value.
"""

from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import InvalidPathError, VerificationError
from .spaces import FinitePoset, MonotoneMap, Point
from .steppaths import StepPath, as_time

Boundary = namedtuple("Boundary", "value pinned")

_EVAL_CAP = 10000
_DESCENT_CAP = 500


def resolve_junction(left: Boundary, right: Boundary, space: FinitePoset | None = None) -> Point:
    """Value at an instant where two pieces meet.

    A pinned side keeps its value; an unpinned neighbor must then sit
    below it (checked when a space is supplied).  Two pinned sides must
    agree, and two unpinned sides must carry the same value.
    """
    if left.pinned and right.pinned:
        if left.value != right.value:
            raise InvalidPathError(
                f"pinned junction values {left.value!r} and {right.value!r} disagree"
            )
        return left.value
    if left.pinned or right.pinned:
        pinned, free = (left, right) if left.pinned else (right, left)
        if space is not None and not space.leq(free.value, pinned.value):
            raise InvalidPathError(
                f"value {free.value!r} not below pinned junction value {pinned.value!r}"
            )
        return pinned.value
    if left.value != right.value:
        raise InvalidPathError(
            f"unpinned junction values {left.value!r} and {right.value!r} disagree"
        )
    return left.value


@dataclass(frozen=True)
class RInstant:
    """A single pinned instant."""

    value: Point

    @property
    def duration(self) -> Fraction:
        return Fraction(0)

    def start_boundary(self) -> Boundary:
        return Boundary(self.value, True)

    def end_boundary(self) -> Boundary:
        return Boundary(self.value, True)

    def values(self) -> frozenset:
        return frozenset({self.value})

    def mapped(self, f) -> "RInstant":
        return RInstant(f(self.value))

    def reversed(self) -> "RInstant":
        return self

    def scaled(self, factor) -> "RInstant":
        return self


@dataclass(frozen=True)
class RConst:
    """A constant stretch of positive length; its endpoints are unpinned."""

    value: Point
    duration: Fraction

    def __post_init__(self):
        object.__setattr__(self, "duration", as_time(self.duration))
        if self.duration <= 0:
            raise InvalidPathError("constant stretch needs positive duration")

    def start_boundary(self) -> Boundary:
        return Boundary(self.value, False)

    def end_boundary(self) -> Boundary:
        return Boundary(self.value, False)

    def values(self) -> frozenset:
        return frozenset({self.value})

    def mapped(self, f) -> "RConst":
        return RConst(f(self.value), self.duration)

    def reversed(self) -> "RConst":
        return self

    def scaled(self, factor) -> "RConst":
        return RConst(self.value, self.duration * factor)


@dataclass(frozen=True)
class RConcat:
    """Pieces laid end to end."""

    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise InvalidPathError("concatenation needs at least one piece")
        if any(isinstance(p, RSlot) for p in self.parts):
            raise InvalidPathError("slots live only inside self-similar skeletons")
        if self.duration <= 0:
            raise InvalidPathError("concatenation needs positive total duration")

    @property
    def duration(self) -> Fraction:
        return sum((p.duration for p in self.parts), Fraction(0))

    def positions(self):
        t = Fraction(0)
        out = []
        for p in self.parts:
            out.append((t, p))
            t += p.duration
        return out

    def start_boundary(self) -> Boundary:
        return self.parts[0].start_boundary()

    def end_boundary(self) -> Boundary:
        return self.parts[-1].end_boundary()

    def values(self) -> frozenset:
        out = frozenset()
        for p in self.parts:
            out |= p.values()
        return out

    def mapped(self, f) -> "RConcat":
        return RConcat(tuple(p.mapped(f) for p in self.parts))

    def reversed(self) -> "RConcat":
        return RConcat(tuple(p.reversed() for p in reversed(self.parts)))

    def scaled(self, factor) -> "RConcat":
        return RConcat(tuple(p.scaled(factor) for p in self.parts))


@dataclass(frozen=True)
class ROmega:
    """Countably many cell copies accumulating at one end.

    With total length D and accumulation on the left, copy j occupies
    [D/(j+1), D/j (within the block), so copy 1 is the outermost; copy
    j plays cells[(j-1) mod p] rescaled.  The value at the accumulation
    instant is ``limit`` and is pinned; every value played inside the
    cells must sit below it, because each neighborhood of the
    accumulation instant contains whole copies of every cell.
    """

    cells: tuple
    limit: Point
    side: str
    duration: Fraction

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        object.__setattr__(self, "duration", as_time(self.duration))
        if self.side not in ("left", "right"):
            raise InvalidPathError("accumulation side must be 'left' or 'right'")
        if not self.cells:
            raise InvalidPathError("accumulation block needs at least one cell")
        if self.duration <= 0:
            raise InvalidPathError("accumulation block needs positive duration")
        for c in self.cells:
            if isinstance(c, RSlot):
                raise InvalidPathError("slots live only inside self-similar skeletons")
            if c.duration <= 0:
                raise InvalidPathError("cells need positive duration")

    def start_boundary(self) -> Boundary:
        if self.side == "left":
            return Boundary(self.limit, True)
        return self.cells[0].start_boundary()

    def end_boundary(self) -> Boundary:
        if self.side == "left":
            return self.cells[0].end_boundary()
        return Boundary(self.limit, True)

    def values(self) -> frozenset:
        out = frozenset({self.limit})
        for c in self.cells:
            out |= c.values()
        return out

    def cell_for_copy(self, j: int):
        return self.cells[(j - 1) % len(self.cells)]

    def copy_junction_value(self, j: int, space=None) -> Point:
        """Value where copy j and copy j-1 meet (j >= 2)."""
        if self.side == "left":
            left = self.cell_for_copy(j).end_boundary()
            right = self.cell_for_copy(j - 1).start_boundary()
        else:
            left = self.cell_for_copy(j - 1).end_boundary()
            right = self.cell_for_copy(j).start_boundary()
        return resolve_junction(left, right, space)

    def mapped(self, f) -> "ROmega":
        return ROmega(
            tuple(c.mapped(f) for c in self.cells), f(self.limit), self.side, self.duration
        )

    def reversed(self) -> "ROmega":
        side = "right" if self.side == "left" else "left"
        return ROmega(tuple(c.reversed() for c in self.cells), self.limit, side, self.duration)

    def scaled(self, factor) -> "ROmega":
        return ROmega(self.cells, self.limit, self.side, self.duration * factor)


@dataclass(frozen=True)
class RSlot:
    """Placeholder inside a self-similar skeleton."""

    duration: Fraction

    def __post_init__(self):
        object.__setattr__(self, "duration", as_time(self.duration))
        if self.duration <= 0:
            raise InvalidPathError("slot needs positive duration")

    def values(self) -> frozenset:
        return frozenset()

    def mapped(self, f) -> "RSlot":
        return self

    def reversed(self) -> "RSlot":
        return self

    def scaled(self, factor) -> "RSlot":
        return RSlot(self.duration * factor)


@dataclass(frozen=True)
class RSelfSimilar:
    """A skeleton whose slots hold scaled copies of the whole block.

    Points lying inside slots at every depth take the ``limit`` value;
    every skeleton value must sit below it, since deep copies of the
    whole skeleton appear in every neighborhood of such a point.
    """

    items: tuple
    limit: Point
    duration: Fraction

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "duration", as_time(self.duration))
        if len(self.items) < 2:
            raise InvalidPathError("skeleton needs at least two items")
        if isinstance(self.items[0], RSlot) or isinstance(self.items[-1], RSlot):
            raise InvalidPathError("skeleton must not start or end with a slot")
        total = sum((it.duration for it in self.items), Fraction(0))
        if total != self.duration:
            raise InvalidPathError("item durations must sum to the block duration")
        if self.duration <= 0:
            raise InvalidPathError("self-similar block needs positive duration")

    def positions(self):
        t = Fraction(0)
        out = []
        for it in self.items:
            out.append((t, it))
            t += it.duration
        return out

    def slot_spans(self):
        return [
            (t, t + it.duration) for t, it in self.positions() if isinstance(it, RSlot)
        ]

    def item_boundary(self, it, which: str) -> Boundary:
        if isinstance(it, RSlot):
            return self.start_boundary() if which == "start" else self.end_boundary()
        return it.start_boundary() if which == "start" else it.end_boundary()

    def start_boundary(self) -> Boundary:
        return self.items[0].start_boundary()

    def end_boundary(self) -> Boundary:
        return self.items[-1].end_boundary()

    def values(self) -> frozenset:
        out = frozenset({self.limit})
        for it in self.items:
            out |= it.values()
        return out

    def mapped(self, f) -> "RSelfSimilar":
        return RSelfSimilar(
            tuple(it.mapped(f) for it in self.items), f(self.limit), self.duration
        )

    def reversed(self) -> "RSelfSimilar":
        return RSelfSimilar(
            tuple(it.reversed() for it in reversed(self.items)), self.limit, self.duration
        )

    def scaled(self, factor) -> "RSelfSimilar":
        return RSelfSimilar(
            tuple(it.scaled(factor) for it in self.items), self.limit, self.duration * factor
        )


# -- validation ------------------------------------------------------------------


def validate_node(node, space: FinitePoset, omega_depth: int = 0) -> None:
    for v in node.values():
        if v not in space:
            raise InvalidPathError(f"value {v!r} is not a point of the space")
    if isinstance(node, (RInstant, RConst)):
        return
    if isinstance(node, RConcat):
        for p in node.parts:
            validate_node(p, space, omega_depth)
        chain = []
        for p in node.parts:
            chain.append((p.start_boundary(), p.end_boundary()))
        for (_, left_end), (right_start, _) in zip(chain, chain[1:]):
            resolve_junction(left_end, right_start, space)
        return
    if isinstance(node, ROmega):
        depth = omega_depth + 1
        if depth > space.height() + 1:
            raise InvalidPathError(
                f"accumulation blocks nest {depth} deep; the space only supports "
                f"{space.height() + 1}"
            )
        for c in node.cells:
            validate_node(c, space, depth)
            for v in c.values():
                if not space.leq(v, node.limit):
                    raise InvalidPathError(
                        f"cell value {v!r} not below accumulation value {node.limit!r}"
                    )
        p = len(node.cells)
        for i in range(p):
            node.copy_junction_value(i + 2, space)
        return
    if isinstance(node, RSelfSimilar):
        for it in node.items:
            if isinstance(it, RSlot):
                continue
            validate_node(it, space, omega_depth)
        for v in node.values():
            if not space.leq(v, node.limit):
                raise InvalidPathError(
                    f"skeleton value {v!r} not below deep-limit value {node.limit!r}"
                )
        items = node.items
        for a, b in zip(items, items[1:]):
            resolve_junction(
                node.item_boundary(a, "end"), node.item_boundary(b, "start"), space
            )
        return
    raise InvalidPathError(f"unknown path node {type(node).__name__}")


# -- exact evaluation --------------------------------------------------------------


def _junction_at(node, tau: Fraction) -> Point | None:
    """Resolved instant value when tau is an internal junction of node."""
    if isinstance(node, RConcat) or isinstance(node, RSelfSimilar):
        if isinstance(node, RConcat):
            positions = node.positions()
            bound = lambda it, which: (
                it.start_boundary() if which == "start" else it.end_boundary()
            )
        else:
            positions = node.positions()
            bound = node.item_boundary
        touching = []
        for t, it in positions:
            if t == tau and it.duration == 0:
                touching.append(("pin", it))
            elif t == tau:
                touching.append(("start", it))
            elif t + it.duration == tau:
                touching.append(("end", it))
        if len(touching) < 2:
            return None
        value = None
        pinned_value = None
        for kind, it in touching:
            b = bound(it, "start") if kind in ("pin", "start") else bound(it, "end")
            if b.pinned:
                pinned_value = b.value
            value = b.value
        return pinned_value if pinned_value is not None else value
    return None


def eval_node(node, tau: Fraction) -> Point:
    steps = 0
    while True:
        steps += 1
        if steps > _EVAL_CAP:
            raise VerificationError("evaluation did not resolve; structure too deep")
        if isinstance(node, RInstant):
            return node.value
        if isinstance(node, RConst):
            return node.value
        if isinstance(node, RConcat):
            j = _junction_at(node, tau)
            if j is not None:
                return j
            for t, it in node.positions():
                if t <= tau <= t + it.duration and it.duration > 0:
                    if tau == t or tau == t + it.duration:
                        # domain endpoint of the whole concat
                        node, tau = it, tau - t
                        break
                    node, tau = it, tau - t
                    break
            else:
                raise InvalidPathError(f"time {tau} outside the block")
            continue
        if isinstance(node, ROmega):
            D = node.duration
            if node.side == "left":
                if tau == 0:
                    return node.limit
                if tau == D:
                    node, tau = node.cells[0], node.cells[0].duration
                    continue
                q = D / tau
                j = math.floor(q)
                if q == j and j >= 2:
                    return node.copy_junction_value(j)
                cell = node.cell_for_copy(j)
                lo = D / (j + 1)
                length = D / j - lo
                node, tau = cell, (tau - lo) * cell.duration / length
                continue
            else:
                if tau == D:
                    return node.limit
                if tau == 0:
                    node, tau = node.cells[0], Fraction(0)
                    continue
                rho = D - tau
                q = D / rho
                j = math.floor(q)
                if q == j and j >= 2:
                    return node.copy_junction_value(j)
                cell = node.cell_for_copy(j)
                lo = D - D / j
                length = D / j - D / (j + 1)
                node, tau = cell, (tau - lo) * cell.duration / length
                continue
        if isinstance(node, RSelfSimilar):
            seen = set()
            while True:
                steps += 1
                if steps > _EVAL_CAP:
                    raise VerificationError(
                        "evaluation did not resolve; structure too deep"
                    )
                j = _junction_at(node, tau)
                if j is not None:
                    return j
                placed = False
                for t, it in node.positions():
                    if it.duration > 0 and t <= tau <= t + it.duration:
                        if isinstance(it, RSlot):
                            tau = (tau - t) * node.duration / it.duration
                            if tau in seen:
                                return node.limit
                            seen.add(tau)
                            placed = True
                            break
                        inner = it
                        return eval_node(inner, tau - t)
                if not placed:
                    raise InvalidPathError(f"time {tau} outside the block")
        else:
            raise InvalidPathError(f"unknown path node {type(node).__name__}")


# -- value profiles -----------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """Values taken on an open time window, by how they occur.

    positive: on a sub-interval of positive length; dense: at instants
    accumulating inside the window; instants: at finitely many isolated
    instants.  The three sets are made disjoint (positive dominates
    dense dominates instants); ``union`` restores the full value set.
    """

    positive: frozenset
    dense: frozenset
    instants: frozenset

    @property
    def union(self) -> frozenset:
        return self.positive | self.dense | self.instants

    @staticmethod
    def make(positive, dense, instants) -> "Profile":
        positive = frozenset(positive)
        dense = frozenset(dense) - positive
        instants = frozenset(instants) - positive - dense
        return Profile(positive, dense, instants)


def _merge(parts) -> tuple[set, set, set]:
    pos, dense, inst = set(), set(), set()
    for p, d, i in parts:
        pos |= p
        dense |= d
        inst |= i
    return pos, dense, inst


@lru_cache(maxsize=200000)
def _profile(node, a: Fraction, b: Fraction) -> tuple[frozenset, frozenset, frozenset]:
    """Raw (positive, dense, instants) of node on the open window (a, b)."""
    if not 0 <= a < b <= node.duration:
        raise InvalidPathError("window must be open, nonempty, inside the block")
    if isinstance(node, RInstant):
        return frozenset(), frozenset(), frozenset()
    if isinstance(node, RConst):
        return frozenset({node.value}), frozenset(), frozenset()
    if isinstance(node, RConcat):
        parts = []
        inst = set()
        for t, it in node.positions():
            if 0 < t < node.duration and a < t < b:
                j = _junction_at(node, t)
                if j is not None:
                    inst.add(j)
            lo, hi = max(a, t), min(b, t + it.duration)
            if lo < hi:
                parts.append(_profile(it, lo - t, hi - t))
        pos, dense, inst2 = _merge(parts)
        return frozenset(pos), frozenset(dense), frozenset(inst | inst2)
    if isinstance(node, ROmega):
        D = node.duration
        p = len(node.cells)
        touching = a == 0 if node.side == "left" else b == D
        if touching:
            pos, dense = set(), set()
            for c in node.cells:
                cp, cd, ci = _profile(c, Fraction(0), c.duration)
                pos |= cp
                dense |= cd | ci
                dense.add(c.start_boundary().value)
                dense.add(c.end_boundary().value)
            for j in range(2, 2 + p):
                dense.add(node.copy_junction_value(j))
            return frozenset(pos), frozenset(dense), frozenset()
        parts = []
        inst = set()
        if node.side == "left":
            # copy j sits on [D/(j+1), D/j]
            j_min = math.floor(D / b - 1) + 1
            j_max = math.ceil(D / a) - 1
            for j in range(max(1, j_min), j_max + 1):
                lo, hi = D / (j + 1), D / j
                wl, wh = max(a, lo), min(b, hi)
                cell = node.cell_for_copy(j)
                if wl < wh:
                    parts.append(
                        _profile(
                            cell,
                            (wl - lo) * cell.duration / (hi - lo),
                            (wh - lo) * cell.duration / (hi - lo),
                        )
                    )
                if j >= 2 and a < hi < b:
                    inst.add(node.copy_junction_value(j))
        else:
            # copy j sits on [D - D/j, D - D/(j+1)]
            j_min = math.floor(D / (D - a) - 1) + 1
            j_max = math.ceil(D / (D - b)) - 1
            for j in range(max(1, j_min), j_max + 1):
                lo, hi = D - D / j, D - D / (j + 1)
                wl, wh = max(a, lo), min(b, hi)
                cell = node.cell_for_copy(j)
                if wl < wh:
                    parts.append(
                        _profile(
                            cell,
                            (wl - lo) * cell.duration / (hi - lo),
                            (wh - lo) * cell.duration / (hi - lo),
                        )
                    )
                if j >= 2 and a < lo < b:
                    inst.add(node.copy_junction_value(j))
        pos, dense, inst2 = _merge(parts)
        return frozenset(pos), frozenset(dense), frozenset(inst | inst2)
    if isinstance(node, RSelfSimilar):
        for lo, hi in node.slot_spans():
            if a <= lo and hi <= b:
                return _closure_profile(node)
        parts = []
        inst = set()
        for t, it in node.positions():
            if 0 < t < node.duration and a < t < b:
                j = _junction_at(node, t)
                if j is not None:
                    inst.add(j)
            lo, hi = max(a, t), min(b, t + it.duration)
            if lo < hi:
                if isinstance(it, RSlot):
                    scale = node.duration / it.duration
                    parts.append(_profile(node, (lo - t) * scale, (hi - t) * scale))
                else:
                    parts.append(_profile(it, lo - t, hi - t))
        pos, dense, inst2 = _merge(parts)
        return frozenset(pos), frozenset(dense), frozenset(inst | inst2)
    raise InvalidPathError(f"unknown path node {type(node).__name__}")


@lru_cache(maxsize=4096)
def _closure_profile(node: RSelfSimilar) -> tuple[frozenset, frozenset, frozenset]:
    """Profile of any window containing a whole slot: everything occurs."""
    pos, dense = set(), {node.limit}
    for t, it in node.positions():
        if isinstance(it, RSlot):
            continue
        if it.duration > 0:
            p, d, i = _profile(it, Fraction(0), it.duration)
            pos |= p
            dense |= d | i
        dense.add(node.item_boundary(it, "start").value)
        dense.add(node.item_boundary(it, "end").value)
    items = node.items
    for x, y in zip(items, items[1:]):
        dense.add(
            resolve_junction(node.item_boundary(x, "end"), node.item_boundary(y, "start"))
        )
    return frozenset(pos), frozenset(dense), frozenset()


# -- witness times ---------------------------------------------------------------------


def find_time_local(node, value: Point, a: Fraction, b: Fraction, depth: int = 0):
    """Some tau in the open window (a, b) with node(tau) == value, or None.

    The witness is exact but not guaranteed to be the earliest such
    time in the window.
    """
    if depth > _DESCENT_CAP:
        raise VerificationError("witness search descended too deep")
    pos, dense, inst = _profile(node, a, b)
    if value not in (pos | dense | inst):
        return None
    if isinstance(node, RConst):
        return (a + b) / 2
    if isinstance(node, RConcat):
        for t, it in node.positions():
            if 0 < t < node.duration and a < t < b:
                if _junction_at(node, t) == value:
                    return t
            lo, hi = max(a, t), min(b, t + it.duration)
            if lo < hi:
                got = find_time_local(it, value, lo - t, hi - t, depth + 1)
                if got is not None:
                    return t + got
        return None
    if isinstance(node, ROmega):
        D = node.duration
        p = len(node.cells)
        if node.side == "left":
            touching = a == 0
            if touching:
                j0 = max(2, math.floor(D / b) + 1)
                for j in range(j0, j0 + p + 1):
                    lo, hi = D / (j + 1), D / j
                    cell = node.cell_for_copy(j)
                    got = find_time_local(cell, value, Fraction(0), cell.duration, depth + 1)
                    if got is not None:
                        return lo + got * (hi - lo) / cell.duration
                    if node.copy_junction_value(j) == value and a < hi < b:
                        return hi
                return None
            j_min = max(1, math.floor(D / b - 1) + 1)
            j_max = math.ceil(D / a) - 1
            for j in range(j_min, j_max + 1):
                lo, hi = D / (j + 1), D / j
                wl, wh = max(a, lo), min(b, hi)
                cell = node.cell_for_copy(j)
                if wl < wh:
                    got = find_time_local(
                        cell,
                        value,
                        (wl - lo) * cell.duration / (hi - lo),
                        (wh - lo) * cell.duration / (hi - lo),
                        depth + 1,
                    )
                    if got is not None:
                        return lo + got * (hi - lo) / cell.duration
                if j >= 2 and a < hi < b and node.copy_junction_value(j) == value:
                    return hi
            return None
        else:
            touching = b == D
            if touching:
                j0 = max(2, math.floor(D / (D - a)) + 1)
                for j in range(j0, j0 + p + 1):
                    lo = D - D / j
                    hi = D - D / (j + 1)
                    cell = node.cell_for_copy(j)
                    got = find_time_local(cell, value, Fraction(0), cell.duration, depth + 1)
                    if got is not None:
                        return lo + got * (hi - lo) / cell.duration
                    if node.copy_junction_value(j) == value and a < lo < b:
                        return lo
                return None
            j_min = max(1, math.floor(D / (D - a) - 1) + 1)
            j_max = math.ceil(D / (D - b)) - 1
            for j in range(j_min, j_max + 1):
                lo = D - D / j
                hi = D - D / (j + 1)
                wl, wh = max(a, lo), min(b, hi)
                cell = node.cell_for_copy(j)
                if wl < wh:
                    got = find_time_local(
                        cell,
                        value,
                        (wl - lo) * cell.duration / (hi - lo),
                        (wh - lo) * cell.duration / (hi - lo),
                        depth + 1,
                    )
                    if got is not None:
                        return lo + got * (hi - lo) / cell.duration
                if j >= 2 and a < lo < b and node.copy_junction_value(j) == value:
                    return lo
            return None
    if isinstance(node, RSelfSimilar):
        if value == node.limit:
            # fixed point of a slot's rescaling map is infinitely deep
            for lo, hi in node.slot_spans():
                ell = hi - lo
                star = lo * node.duration / (node.duration - ell)
                if a < star < b:
                    return star
            # descend into a slot part and search there
            for t, it in node.positions():
                if not isinstance(it, RSlot):
                    continue
                lo, hi = max(a, t), min(b, t + it.duration)
                if lo < hi:
                    scale = node.duration / it.duration
                    got = find_time_local(
                        node, value, (lo - t) * scale, (hi - t) * scale, depth + 1
                    )
                    if got is not None:
                        return t + got / scale
            return None
        for t, it in node.positions():
            if 0 < t < node.duration and a < t < b:
                if _junction_at(node, t) == value:
                    return t
            lo, hi = max(a, t), min(b, t + it.duration)
            if lo < hi:
                if isinstance(it, RSlot):
                    scale = node.duration / it.duration
                    got = find_time_local(
                        node, value, (lo - t) * scale, (hi - t) * scale, depth + 1
                    )
                    if got is not None:
                        return t + got / scale
                else:
                    got = find_time_local(it, value, lo - t, hi - t, depth + 1)
                    if got is not None:
                        return t + got
        return None
    return None


# -- unrolling to step paths ---------------------------------------------------------


def _put_bp(bps: dict, t: Fraction, v: Point):
    old = bps.get(t)
    if old is not None and old != v:
        raise VerificationError(f"conflicting instant values {old!r}, {v!r} at {t}")
    bps[t] = v


def _emit(node, a: Fraction, b: Fraction, k: int, space, bps: dict, ivs: list):
    if isinstance(node, RInstant):
        _put_bp(bps, a, node.value)
        return
    if isinstance(node, RConst):
        if a < b:
            ivs.append((a, b, node.value))
        return
    if isinstance(node, RConcat):
        scale = (b - a) / node.duration
        for t, it in node.positions():
            gt = a + t * scale
            if 0 < t < node.duration:
                j = _junction_at(node, t)
                if j is not None:
                    _put_bp(bps, gt, j)
            _emit(it, gt, gt + it.duration * scale, k, space, bps, ivs)
        return
    if isinstance(node, ROmega):
        D = node.duration
        scale = (b - a) / D
        if node.side == "left":
            for j in range(1, k + 1):
                lo, hi = a + scale * D / (j + 1), a + scale * D / j
                _emit(node.cell_for_copy(j), lo, hi, k, space, bps, ivs)
                if j >= 2:
                    _put_bp(bps, hi, node.copy_junction_value(j))
            cut = a + scale * D / (k + 1)
            # the truncation instant deliberately overrides whatever copy
            # k starts with; cell values sit below the limit, so the
            # step-path continuity checks still pass
            bps[cut] = node.limit
            if a < cut:
                ivs.append((a, cut, node.limit))
        else:
            for j in range(1, k + 1):
                lo = a + scale * (D - D / j)
                hi = a + scale * (D - D / (j + 1))
                _emit(node.cell_for_copy(j), lo, hi, k, space, bps, ivs)
                if j >= 2:
                    _put_bp(bps, lo, node.copy_junction_value(j))
            cut = a + scale * (D - D / (k + 1))
            bps[cut] = node.limit
            if cut < b:
                ivs.append((cut, b, node.limit))
        return
    if isinstance(node, RSelfSimilar):
        scale = (b - a) / node.duration
        for t, it in node.positions():
            gt = a + t * scale
            if 0 < t < node.duration:
                j = _junction_at(node, t)
                if j is not None:
                    _put_bp(bps, gt, j)
            ge = gt + it.duration * scale
            if isinstance(it, RSlot):
                if k > 1:
                    _emit(node, gt, ge, k - 1, space, bps, ivs)
                else:
                    fill = _slot_fill(node, space)
                    ivs.append((gt, ge, fill))
            else:
                _emit(it, gt, ge, k, space, bps, ivs)
        return
    raise InvalidPathError(f"unknown path node {type(node).__name__}")


def _slot_fill(node: RSelfSimilar, space: FinitePoset) -> Point:
    """Constant standing in for a truncated slot: a minimal point below
    both of the block's boundary values."""
    s = node.start_boundary().value
    e = node.end_boundary().value
    for m in space.minimal_points():
        if space.leq(m, s) and space.leq(m, e):
            return m
    raise VerificationError(
        f"no minimal point below both {s!r} and {e!r}; cannot truncate"
    )


# -- public wrapper -------------------------------------------------------------------


@dataclass(frozen=True)
class RegularPath:
    """A recursively structured path over a finite space.

    The root node fixes the shape; the path occupies global time
    [t0, t0 + root.duration].
    """

    space: FinitePoset
    t0: Fraction
    root: object

    def __post_init__(self):
        object.__setattr__(self, "t0", as_time(self.t0))

    @property
    def start(self) -> Fraction:
        return self.t0

    @property
    def end(self) -> Fraction:
        return self.t0 + self.root.duration

    def validate(self) -> None:
        validate_node(self.root, self.space)

    def value_at(self, t) -> Point:
        t = as_time(t)
        if not self.start <= t <= self.end:
            raise InvalidPathError(f"time {t} outside domain [{self.start}, {self.end}]")
        if t == self.start:
            return self.root.start_boundary().value
        if t == self.end:
            return self.root.end_boundary().value
        return eval_node(self.root, t - self.t0)

    def profile(self, a, b) -> Profile:
        a, b = as_time(a), as_time(b)
        if not self.start <= a < b <= self.end:
            raise InvalidPathError("window must be nonempty and inside the domain")
        pos, dense, inst = _profile(self.root, a - self.t0, b - self.t0)
        return Profile.make(pos, dense, inst)

    def find_value_time(self, value: Point, a, b):
        a, b = as_time(a), as_time(b)
        if not self.start <= a < b <= self.end:
            raise InvalidPathError("window must be nonempty and inside the domain")
        got = find_time_local(self.root, value, a - self.t0, b - self.t0)
        return None if got is None else self.t0 + got

    def values(self) -> frozenset:
        return self.root.values()

    def unroll(self, k: int) -> StepPath:
        """Step path agreeing with this one away from truncated regions.

        Each accumulation block keeps its outermost k copies and sits at
        its limit value across the rest; each self-similar block expands
        k layers and fills the deepest slots with a constant minimal
        point below the block's boundary values.
        """
        if k < 1:
            raise InvalidPathError("unroll depth must be at least 1")
        bps: dict = {}
        ivs: list = []
        _put_bp(bps, self.start, self.root.start_boundary().value)
        _put_bp(bps, self.end, self.root.end_boundary().value)
        _emit(self.root, self.start, self.end, k, self.space, bps, ivs)
        times = sorted(bps)
        spans = {(lo, hi): v for lo, hi, v in ivs if lo < hi}
        intervals = []
        span_list = sorted(spans)
        si = 0
        for t1, t2 in zip(times, times[1:]):
            while si < len(span_list) and span_list[si][1] <= t1:
                si += 1
            if si >= len(span_list) or not (
                span_list[si][0] <= t1 and t2 <= span_list[si][1]
            ):
                raise VerificationError(f"no constant stretch covers ({t1}, {t2})")
            intervals.append(spans[span_list[si]])
        path = StepPath(
            space=self.space,
            times=tuple(times),
            breakpoints=tuple(bps[t] for t in times),
            intervals=tuple(intervals),
        )
        return path.normalize()

    def mapped(self, f: MonotoneMap) -> "RegularPath":
        if f.source != self.space:
            raise InvalidPathError("map source does not match the path's space")
        return RegularPath(space=f.target, t0=self.t0, root=self.root.mapped(f))

    def reversed(self) -> "RegularPath":
        return RegularPath(space=self.space, t0=self.t0, root=self.root.reversed())

    def shifted(self, delta) -> "RegularPath":
        return RegularPath(space=self.space, t0=self.t0 + as_time(delta), root=self.root)
