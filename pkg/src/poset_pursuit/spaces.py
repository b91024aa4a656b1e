"""Finite T0 spaces represented as partial orders.

A finite T0 topological space is the same data as a finite poset: open
sets are the down-closed ones, the minimal open neighborhood of x is the
principal down-set U(x) = {y : y <= x}, and the closure of {x} is the
principal up-set F(x) = {y : y >= x}.  Maps are continuous exactly when
they preserve the order, and the space is (path) connected exactly when
the comparability graph is connected.

Points are named by strings.  Orders are stored as bitmask rows over the
sorted point tuple, which keeps the many reachability and embedding
searches in this module cheap for the sizes the engine works at.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from functools import cached_property

from .errors import NotApplicableError

Point = str

DEFAULT_ENUMERATION_CAP = 6
DEFAULT_FPF_CAP = 8


def _iter_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(frozen=True)
class NonT0Report:
    """Witness that a preorder is not T0.

    Two distinct points with identical principal down-sets make the map
    sending ``pair[0]`` to ``pair[1]`` and every other point to
    ``pair[0]`` continuous and fixed point free, so the evader wins on
    such a space outright.
    """

    points: tuple[Point, ...]
    pair: tuple[Point, Point]
    mapping: dict[Point, Point]

    def apply(self, p: Point) -> Point:
        return self.mapping[p]


class FinitePoset:
    """Immutable finite poset on named points.

    Use :func:`poset` or :func:`from_relations` to build one; the
    constructor trusts its arguments.
    """

    def __init__(self, points: tuple[Point, ...], down: tuple[int, ...]):
        self.points = tuple(points)
        self._idx = {p: i for i, p in enumerate(self.points)}
        self._down = tuple(down)
        n = len(self.points)
        up = [0] * n
        for i in range(n):
            for j in _iter_bits(down[i]):
                up[j] |= 1 << i
        self._up = tuple(up)

    # -- basic order queries ------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.points)

    def index(self, p: Point) -> int:
        return self._idx[p]

    def __contains__(self, p: Point) -> bool:
        return p in self._idx

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FinitePoset)
            and self.points == other.points
            and self._down == other._down
        )

    def __hash__(self) -> int:
        return hash((self.points, self._down))

    def __repr__(self) -> str:
        rels = ", ".join(f"{a}<{b}" for a, b in self.cover_pairs())
        return f"FinitePoset({self.n} points: {rels})"

    def leq(self, p: Point, q: Point) -> bool:
        return bool(self._down[self._idx[q]] >> self._idx[p] & 1)

    def lt(self, p: Point, q: Point) -> bool:
        return p != q and self.leq(p, q)

    def comparable(self, p: Point, q: Point) -> bool:
        return self.leq(p, q) or self.leq(q, p)

    def down_mask(self, p: Point) -> int:
        return self._down[self._idx[p]]

    def up_mask(self, p: Point) -> int:
        return self._up[self._idx[p]]

    def points_of(self, mask: int) -> tuple[Point, ...]:
        return tuple(self.points[i] for i in _iter_bits(mask))

    def mask_of(self, pts) -> int:
        m = 0
        for p in pts:
            m |= 1 << self._idx[p]
        return m

    def down_set(self, p: Point) -> tuple[Point, ...]:
        """Minimal open neighborhood U(p)."""
        return self.points_of(self.down_mask(p))

    def up_set(self, p: Point) -> tuple[Point, ...]:
        """Closure F(p)."""
        return self.points_of(self.up_mask(p))

    # -- extremal structure --------------------------------------------------

    @cached_property
    def _maximal_mask(self) -> int:
        m = 0
        for i in range(self.n):
            if self._up[i] == 1 << i:
                m |= 1 << i
        return m

    @cached_property
    def _minimal_mask(self) -> int:
        m = 0
        for i in range(self.n):
            if self._down[i] == 1 << i:
                m |= 1 << i
        return m

    def maximal_points(self) -> tuple[Point, ...]:
        return self.points_of(self._maximal_mask)

    def minimal_points(self) -> tuple[Point, ...]:
        return self.points_of(self._minimal_mask)

    def extremal_points(self) -> tuple[Point, ...]:
        return self.points_of(self._maximal_mask | self._minimal_mask)

    def is_maximal(self, p: Point) -> bool:
        return bool(self._maximal_mask >> self._idx[p] & 1)

    def is_minimal(self, p: Point) -> bool:
        return bool(self._minimal_mask >> self._idx[p] & 1)

    def maximum(self) -> Point | None:
        full = (1 << self.n) - 1
        for i in _iter_bits(self._maximal_mask):
            if self._down[i] == full:
                return self.points[i]
        return None

    def minimum(self) -> Point | None:
        full = (1 << self.n) - 1
        for i in _iter_bits(self._minimal_mask):
            if self._up[i] == full:
                return self.points[i]
        return None

    # -- covers and height ----------------------------------------------------

    @cached_property
    def _cover_masks(self) -> tuple[int, ...]:
        """upper_cover_mask[i] = points covering points[i]."""
        out = []
        for i in range(self.n):
            strict_up = self._up[i] & ~(1 << i)
            cov = 0
            for j in _iter_bits(strict_up):
                between = self._up[i] & self._down[j] & ~(1 << i) & ~(1 << j)
                if not between:
                    cov |= 1 << j
            out.append(cov)
        return tuple(out)

    def upper_covers(self, p: Point) -> tuple[Point, ...]:
        return self.points_of(self._cover_masks[self._idx[p]])

    def lower_covers(self, p: Point) -> tuple[Point, ...]:
        i = self._idx[p]
        m = 0
        for j in range(self.n):
            if self._cover_masks[j] >> i & 1:
                m |= 1 << j
        return self.points_of(m)

    def cover_pairs(self) -> tuple[tuple[Point, Point], ...]:
        out = []
        for i in range(self.n):
            for j in _iter_bits(self._cover_masks[i]):
                out.append((self.points[i], self.points[j]))
        return tuple(sorted(out))

    @cached_property
    def _heights(self) -> tuple[int, ...]:
        h = [0] * self.n
        order = sorted(range(self.n), key=lambda i: self._down[i].bit_count())
        for i in order:
            below = self._down[i] & ~(1 << i)
            h[i] = 1 + max((h[j] for j in _iter_bits(below)), default=-1)
        return tuple(h)

    def height_of(self, p: Point) -> int:
        return self._heights[self._idx[p]]

    def height(self) -> int:
        return max(self._heights, default=0)

    # -- connectivity -----------------------------------------------------------

    def comparability_mask(self, p: Point) -> int:
        i = self._idx[p]
        return (self._down[i] | self._up[i]) & ~(1 << i)

    def comparability_neighbors(self, p: Point) -> tuple[Point, ...]:
        return self.points_of(self.comparability_mask(p))

    @cached_property
    def _component_masks(self) -> tuple[int, ...]:
        seen = 0
        comps = []
        for i in range(self.n):
            if seen >> i & 1:
                continue
            comp = 1 << i
            frontier = 1 << i
            while frontier:
                nxt = 0
                for j in _iter_bits(frontier):
                    nxt |= (self._down[j] | self._up[j]) & ~comp
                comp |= nxt
                frontier = nxt
            comps.append(comp)
            seen |= comp
        return tuple(comps)

    def components(self) -> tuple[frozenset[Point], ...]:
        return tuple(frozenset(self.points_of(m)) for m in self._component_masks)

    def is_connected(self) -> bool:
        return len(self._component_masks) <= 1

    def component_mask_of(self, p: Point) -> int:
        i = self._idx[p]
        for m in self._component_masks:
            if m >> i & 1:
                return m
        raise KeyError(p)

    def fence_between(self, x: Point, y: Point) -> tuple[Point, ...] | None:
        """Shortest walk from x to y along comparabilities, lex tie-break."""
        if x == y:
            return (x,)
        prev: dict[Point, Point] = {x: x}
        frontier = [x]
        while frontier:
            nxt = []
            for p in sorted(frontier):
                for q in self.comparability_neighbors(p):
                    if q not in prev:
                        prev[q] = p
                        nxt.append(q)
            if y in prev:
                path = [y]
                while path[-1] != x:
                    path.append(prev[path[-1]])
                return tuple(reversed(path))
            frontier = nxt
        return None

    # -- derived spaces ---------------------------------------------------------

    def subspace(self, pts) -> "FinitePoset":
        keep = sorted(set(pts), key=self._idx.__getitem__)
        for p in keep:
            if p not in self._idx:
                raise KeyError(p)
        sel = {p: k for k, p in enumerate(sorted(keep))}
        down = [0] * len(sel)
        for p, k in sel.items():
            for q in sel:
                if self.leq(q, p):
                    down[k] |= 1 << sel[q]
        return FinitePoset(tuple(sorted(keep)), tuple(down))

    def without(self, p: Point) -> "FinitePoset":
        return self.subspace(q for q in self.points if q != p)

    def opposite(self) -> "FinitePoset":
        down = []
        for i in range(self.n):
            down.append(self._up[i])
        return FinitePoset(self.points, tuple(down))

    def relabel(self, mapping: dict[Point, Point]) -> "FinitePoset":
        new_names = sorted(mapping[p] for p in self.points)
        if len(set(new_names)) != self.n:
            raise ValueError("relabeling must be injective")
        pos = {name: k for k, name in enumerate(new_names)}
        down = [0] * self.n
        for i, p in enumerate(self.points):
            k = pos[mapping[p]]
            for j in _iter_bits(self._down[i]):
                down[k] |= 1 << pos[mapping[self.points[j]]]
        return FinitePoset(tuple(new_names), tuple(down))

    def extrema_subspace(self) -> "FinitePoset":
        """Subspace of maximal and minimal points; always has height <= 1."""
        return self.subspace(self.extremal_points())

    def is_down_closed(self, pts) -> bool:
        m = self.mask_of(pts)
        for i in _iter_bits(m):
            if self._down[i] & ~m:
                return False
        return True

    def add_point_below(self, name: Point, above: Point) -> "FinitePoset":
        """Scratch copy with a new minimal point comparable to `above` only."""
        if name in self._idx:
            raise ValueError(f"point {name!r} already present")
        pts = list(self.points) + [name]
        rels = list(self.cover_pairs()) + [(name, above)]
        return poset(pts, rels)


# -- construction ------------------------------------------------------------


def from_relations(points, relations) -> FinitePoset | NonT0Report:
    """Build the T0 space of a preorder, or report the T0 failure.

    ``relations`` lists pairs (a, b) meaning a <= b; reflexivity and
    transitivity are supplied here.  If two distinct points end up
    order-equivalent the specialization preorder is not T0 and a
    :class:`NonT0Report` is returned instead of a poset.
    """
    pts = tuple(sorted(points))
    if len(set(pts)) != len(pts):
        raise ValueError("duplicate point names")
    if not pts:
        raise ValueError("a space needs at least one point")
    idx = {p: i for i, p in enumerate(pts)}
    n = len(pts)
    down = [1 << i for i in range(n)]
    for a, b in relations:
        if a not in idx or b not in idx:
            raise ValueError(f"relation ({a!r}, {b!r}) names unknown points")
        down[idx[b]] |= 1 << idx[a]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            acc = down[i]
            for j in _iter_bits(down[i]):
                acc |= down[j]
            if acc != down[i]:
                down[i] = acc
                changed = True
    for i in range(n):
        for j in _iter_bits(down[i]):
            if j != i and down[j] >> i & 1:
                x, y = pts[i], pts[j]
                mapping = {p: x for p in pts}
                mapping[x] = y
                return NonT0Report(points=pts, pair=(x, y), mapping=mapping)
    return FinitePoset(pts, tuple(down))


def poset(points, relations) -> FinitePoset:
    """Like :func:`from_relations` but raises when the input is not T0."""
    built = from_relations(points, relations)
    if isinstance(built, NonT0Report):
        raise NotApplicableError(
            f"points {built.pair[0]!r} and {built.pair[1]!r} are order-equivalent"
        )
    return built


# -- catalog -------------------------------------------------------------------


def _claw_hub(n_claws: int, extra: int) -> FinitePoset:
    # hub "0" above minimal points 1..3, with claws i < i' for i <= extra
    pts = ["0"] + [str(i) for i in range(1, n_claws + 1)]
    rels = [(str(i), "0") for i in range(1, n_claws + 1)]
    for i in range(1, extra + 1):
        pts.append(f"{i}'")
        rels.append((str(i), f"{i}'"))
    return poset(pts, rels)


def catalog(name: str) -> FinitePoset:
    """Named example spaces used throughout the engine and its tests.

    Parametric names take an integer argument, e.g. ``ConeV(3)``,
    ``ConeOpW(2)``, ``Fence(5)``, ``Chain(4)``.
    """
    name = name.strip()
    if name == "S21":
        return _claw_hub(3, 2)
    if name == "S30":
        return _claw_hub(3, 3)
    if name == "S21op":
        return _claw_hub(3, 2).opposite()
    if name == "S30op":
        return _claw_hub(3, 3).opposite()
    if name == "Yoke":
        return poset("abcd", [("d", "c"), ("c", "a"), ("c", "b")])
    if name == "YokeOp":
        return catalog("Yoke").opposite()
    if name == "Fractal6":
        return poset(
            "abcdef",
            [("e", "d"), ("f", "d"), ("e", "a"), ("f", "c"), ("d", "b")],
        )
    if name == "Pseudocircle":
        return poset("abcd", [("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")])
    if "(" in name and name.endswith(")"):
        base, arg = name[:-1].split("(", 1)
        m = int(arg)
        if base == "ConeV":
            if m < 1:
                raise ValueError("ConeV needs m >= 1")
            return poset(
                ["a"] + [f"c{i}" for i in range(m)],
                [(f"c{i}", "a") for i in range(m)],
            )
        if base == "ConeOpW":
            if m < 1:
                raise ValueError("ConeOpW needs m >= 1")
            return poset(
                ["a"] + [f"b{i}" for i in range(m + 1)],
                [("a", f"b{i}") for i in range(m + 1)],
            )
        if base == "Fence":
            if m < 1:
                raise ValueError("Fence needs at least one point")
            pts = [f"f{i}" for i in range(m)]
            rels = []
            for i in range(0, m - 1, 2):
                rels.append((f"f{i}", f"f{i + 1}"))
                if i + 2 < m:
                    rels.append((f"f{i + 2}", f"f{i + 1}"))
            return poset(pts, rels)
        if base == "Chain":
            if m < 1:
                raise ValueError("Chain needs at least one point")
            pts = [f"x{i}" for i in range(m)]
            rels = [(f"x{i}", f"x{i + 1}") for i in range(m - 1)]
            return poset(pts, rels)
    raise ValueError(f"unknown catalog space {name!r}")


# -- monotone maps ---------------------------------------------------------------


@dataclass(frozen=True)
class MonotoneMap:
    """A continuous (= order preserving) map between finite spaces.

    Monotonicity is checked exhaustively at construction time.
    """

    source: FinitePoset
    target: FinitePoset
    mapping: dict[Point, Point]

    def __post_init__(self):
        for p in self.source.points:
            if p not in self.mapping:
                raise NotApplicableError(f"map undefined at {p!r}")
            if self.mapping[p] not in self.target:
                raise NotApplicableError(f"image {self.mapping[p]!r} outside target")
        for p in self.source.points:
            for q in self.source.points:
                if self.source.leq(p, q) and not self.target.leq(
                    self.mapping[p], self.mapping[q]
                ):
                    raise NotApplicableError(
                        f"map not monotone at {p!r} <= {q!r}"
                    )

    def __call__(self, p: Point) -> Point:
        return self.mapping[p]

    def image(self) -> tuple[Point, ...]:
        return tuple(sorted(set(self.mapping.values())))

    def is_retraction(self) -> bool:
        """True when the map fixes its image pointwise."""
        return all(self.mapping[v] == v for v in set(self.mapping.values()))

    def compose(self, inner: "MonotoneMap") -> "MonotoneMap":
        return MonotoneMap(
            source=inner.source,
            target=self.target,
            mapping={p: self.mapping[inner.mapping[p]] for p in inner.source.points},
        )


# -- fixed point free self-maps ---------------------------------------------------


@dataclass(frozen=True)
class FPFOutcome:
    """Result of searching for a continuous fixed point free self-map."""

    attempted: bool
    mapping: dict[Point, Point] | None

    @property
    def found(self) -> bool:
        return self.mapping is not None


def find_fixed_point_free_map(X: FinitePoset, cap: int = DEFAULT_FPF_CAP) -> FPFOutcome:
    """Exhaustive backtracking search for a monotone self-map without fixed points.

    Points are assigned in a comparability-first order so monotonicity
    prunes early.  Spaces larger than ``cap`` are not attempted.
    """
    if X.n > cap:
        return FPFOutcome(attempted=False, mapping=None)
    pts = X.points
    # BFS order from the highest-degree point, walking comparabilities.
    start = max(pts, key=lambda p: (len(X.comparability_neighbors(p)), p))
    order: list[Point] = []
    seen = set()
    frontier = [start]
    while frontier or len(order) < X.n:
        if not frontier:
            rest = [p for p in pts if p not in seen]
            frontier = [max(rest, key=lambda p: (len(X.comparability_neighbors(p)), p))]
        p = frontier.pop(0)
        if p in seen:
            continue
        seen.add(p)
        order.append(p)
        nbrs = sorted(X.comparability_neighbors(p), key=lambda q: -len(X.comparability_neighbors(q)))
        frontier.extend(q for q in nbrs if q not in seen)

    assign: dict[Point, Point] = {}

    def consistent(p: Point, v: Point) -> bool:
        for q, w in assign.items():
            if X.leq(p, q) and not X.leq(v, w):
                return False
            if X.leq(q, p) and not X.leq(w, v):
                return False
        return True

    def search(k: int) -> bool:
        if k == len(order):
            return True
        p = order[k]
        for v in pts:
            if v == p:
                continue
            if consistent(p, v):
                assign[p] = v
                if search(k + 1):
                    return True
                del assign[p]
        return False

    if search(0):
        return FPFOutcome(attempted=True, mapping=dict(assign))
    return FPFOutcome(attempted=True, mapping=None)


# -- isomorphism and embeddings -----------------------------------------------------


def _refined_invariants(X: FinitePoset) -> list[tuple]:
    base = [
        (X.height_of(p), X.down_mask(p).bit_count(), X.up_mask(p).bit_count())
        for p in X.points
    ]
    idx = {p: i for i, p in enumerate(X.points)}
    out = []
    for p in X.points:
        below = tuple(sorted(base[idx[q]] for q in X.points if X.lt(q, p)))
        above = tuple(sorted(base[idx[q]] for q in X.points if X.lt(p, q)))
        out.append((base[idx[p]], below, above))
    return out


def canonical_key(X: FinitePoset) -> bytes:
    """Isomorphism-invariant canonical form of the order relation."""
    inv = _refined_invariants(X)
    classes: dict[tuple, list[int]] = {}
    for i, v in enumerate(inv):
        classes.setdefault(v, []).append(i)
    class_items = sorted(classes.items())
    best: int | None = None
    n = X.n
    for perm_parts in itertools.product(
        *[itertools.permutations(ids) for _, ids in class_items]
    ):
        perm = [i for part in perm_parts for i in part]
        word = 0
        for a in range(n):
            for b in range(n):
                word = (word << 1) | (X._down[perm[b]] >> perm[a] & 1)
        if best is None or word < best:
            best = word
    size = (n * n + 7) // 8
    return bytes([n]) + best.to_bytes(size, "big")


def is_isomorphic(X: FinitePoset, Y: FinitePoset) -> dict[Point, Point] | None:
    """An order isomorphism X -> Y as a dict, or None."""
    if X.n != Y.n:
        return None
    inv_x = _refined_invariants(X)
    inv_y = _refined_invariants(Y)
    if sorted(inv_x) != sorted(inv_y):
        return None
    candidates = {
        p: [q for j, q in enumerate(Y.points) if inv_y[j] == inv_x[i]]
        for i, p in enumerate(X.points)
    }
    order = sorted(X.points, key=lambda p: (len(candidates[p]), p))
    assign: dict[Point, Point] = {}
    used: set[Point] = set()

    def ok(p: Point, v: Point) -> bool:
        for q, w in assign.items():
            if X.leq(p, q) != Y.leq(v, w) or X.leq(q, p) != Y.leq(w, v):
                return False
        return True

    def search(k: int) -> bool:
        if k == len(order):
            return True
        p = order[k]
        for v in candidates[p]:
            if v in used or not ok(p, v):
                continue
            assign[p] = v
            used.add(v)
            if search(k + 1):
                return True
            del assign[p]
            used.discard(v)
        return False

    return dict(assign) if search(0) else None


def find_order_embedding(
    small: FinitePoset,
    big: FinitePoset,
    *,
    must_be_maximal=(),
    must_be_minimal=(),
    no_common_upper_bound: tuple[Point, Point] | None = None,
) -> dict[Point, Point] | None:
    """An injection small -> big inducing the order of `small` on its image.

    Both directions of comparability must match, so the image is a
    subspace homeomorphic to ``small``.  Optional constraints pin chosen
    source points to maximal / minimal targets, or require a source pair
    to land on points with no common upper bound in ``big``.  The search
    is exhaustive: a ``None`` answer proves there is no such embedding.
    """
    if small.n > big.n:
        return None
    need_max = set(must_be_maximal)
    need_min = set(must_be_minimal)

    def candidates(s: Point) -> list[Point]:
        sd = small.down_mask(s).bit_count()
        su = small.up_mask(s).bit_count()
        out = []
        for v in big.points:
            if big.down_mask(v).bit_count() < sd or big.up_mask(v).bit_count() < su:
                continue
            if s in need_max and not big.is_maximal(v):
                continue
            if s in need_min and not big.is_minimal(v):
                continue
            out.append(v)
        return out

    cand = {s: candidates(s) for s in small.points}
    order = sorted(small.points, key=lambda s: (len(cand[s]), s))
    assign: dict[Point, Point] = {}
    used: set[Point] = set()

    def ok(s: Point, v: Point) -> bool:
        for t, w in assign.items():
            if small.leq(s, t) != big.leq(v, w) or small.leq(t, s) != big.leq(w, v):
                return False
        if no_common_upper_bound is not None:
            a, b = no_common_upper_bound
            other = None
            if s == a and b in assign:
                other = assign[b]
            elif s == b and a in assign:
                other = assign[a]
            if other is not None and big.up_mask(v) & big.up_mask(other):
                return False
        return True

    def search(k: int) -> bool:
        if k == len(order):
            return True
        s = order[k]
        for v in cand[s]:
            if v in used or not ok(s, v):
                continue
            assign[s] = v
            used.add(v)
            if search(k + 1):
                return True
            del assign[s]
            used.discard(v)
        return False

    return dict(assign) if search(0) else None


# -- cycles and retractions -----------------------------------------------------------


def minimal_cycle(X: FinitePoset) -> tuple[Point, ...] | None:
    """Shortest cycle of the comparability graph of a height <= 1 space.

    Returned as an alternating fence x0 < x1 > x2 < ... closing back on
    x0, starting at a minimal point, canonicalized over rotations and
    reflections.  Returns None when the graph is a forest.
    """
    if X.height() > 1:
        raise NotApplicableError("cycle search expects a space of height <= 1")
    edges = X.cover_pairs()
    adj: dict[Point, list[Point]] = {p: [] for p in X.points}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    for p in adj:
        adj[p].sort()
    best: tuple[Point, ...] | None = None
    for a, b in edges:
        # shortest a..b walk avoiding the edge (a, b) itself
        prev = {a: a}
        frontier = [a]
        while frontier and b not in prev:
            nxt = []
            for p in frontier:
                for q in adj[p]:
                    if p == a and q == b:
                        continue
                    if q not in prev:
                        prev[q] = p
                        nxt.append(q)
            frontier = nxt
        if b not in prev:
            continue
        walk = [b]
        while walk[-1] != a:
            walk.append(prev[walk[-1]])
        cycle = tuple(reversed(walk))
        if best is None or len(cycle) < len(best):
            best = cycle
    if best is None:
        return None
    # canonicalize: all rotations in both directions, starting minimal, lex least
    n = len(best)
    options = []
    doubled = best + best
    for start in range(n):
        fwd = doubled[start : start + n]
        rev = tuple(reversed(fwd))
        rev = (rev[-1],) + rev[:-1]
        for cyc in (fwd, rev):
            if X.is_minimal(cyc[0]):
                options.append(cyc)
    return min(options)


def cycle_retraction(X: FinitePoset, cycle: tuple[Point, ...]) -> MonotoneMap:
    """Retraction of a height-1 space onto a minimal-length cycle.

    Cut the cycle between its first and last points; every point maps to
    the cycle point indexed by its graph distance from ``cycle[0]`` in
    the cut comparability graph, clipped at the far end.
    """
    n = len(cycle)
    if n < 4 or n % 2 != 0:
        raise NotApplicableError("a cycle alternates and has even length >= 4")
    for i, p in enumerate(cycle):
        q = cycle[(i + 1) % n]
        if not X.comparable(p, q):
            raise NotApplicableError("cycle points must be consecutively comparable")
    ref = minimal_cycle(X)
    if ref is None or len(ref) != n:
        raise NotApplicableError("cycle is not of minimal length")
    adj: dict[Point, set[Point]] = {p: set() for p in X.points}
    for a, b in X.cover_pairs():
        adj[a].add(b)
        adj[b].add(a)
    adj[cycle[0]].discard(cycle[-1])
    adj[cycle[-1]].discard(cycle[0])
    dist = {cycle[0]: 0}
    frontier = [cycle[0]]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for p in frontier:
            for q in adj[p]:
                if q not in dist:
                    dist[q] = d
                    nxt.append(q)
        frontier = nxt
    mapping = {
        p: cycle[min(n - 1, dist.get(p, n - 1))] for p in X.points
    }
    target = X.subspace(cycle)
    r = MonotoneMap(source=X, target=target, mapping=mapping)
    for p in cycle:
        if mapping[p] != p:
            raise NotApplicableError("retraction does not fix the cycle")
    return r


def cycle_rotation_map(X: FinitePoset, cycle: tuple[Point, ...]) -> dict[Point, Point]:
    """Fixed point free self-map from a minimal cycle: rotate by two steps.

    Composing the rotation of the cycle with :func:`cycle_retraction`
    gives a continuous self-map of the whole space with no fixed point.
    """
    r = cycle_retraction(X, cycle)
    n = len(cycle)
    pos = {p: i for i, p in enumerate(cycle)}
    rot = {p: cycle[(pos[p] + 2) % n] for p in cycle}
    return {p: rot[r(p)] for p in X.points}


def closest_point_retraction(X: FinitePoset, sub_points) -> MonotoneMap:
    """Retraction of an acyclic height <= 1 space onto a connected subspace.

    Maps each point to the unique nearest subspace point in the
    comparability graph; components not meeting the subspace collapse to
    its least-named point.
    """
    A = sorted(set(sub_points))
    if X.height() > 1:
        raise NotApplicableError("closest-point retraction expects height <= 1")
    if minimal_cycle(X) is not None:
        raise NotApplicableError("closest-point retraction expects an acyclic space")
    sub = X.subspace(A)
    if not sub.is_connected():
        raise NotApplicableError("subspace must be connected")
    gate: dict[Point, Point] = {p: p for p in A}
    dist: dict[Point, int] = {p: 0 for p in A}
    frontier = list(A)
    d = 0
    while frontier:
        d += 1
        nxt = []
        for p in sorted(frontier):
            for q in X.comparability_neighbors(p):
                if q not in dist:
                    dist[q] = d
                    gate[q] = gate[p]
                    nxt.append(q)
                elif dist[q] == d and gate[q] != gate[p]:
                    raise NotApplicableError(f"nearest subspace point ambiguous at {q!r}")
        frontier = nxt
    fallback = A[0]
    mapping = {p: gate.get(p, fallback) for p in X.points}
    r = MonotoneMap(source=X, target=sub, mapping=mapping)
    return r


def yoke_retraction(X: FinitePoset, witness: dict[Point, Point]) -> MonotoneMap:
    """Retraction onto an embedded 4-point yoke d < c < a, b.

    ``witness`` maps the roles 'a', 'b', 'c', 'd' to points of X.  The
    two top points must have no common upper bound; everything above a
    goes to a, above b to b, below d to d, and the rest to c.
    """
    pa, pb, pc, pd = (witness[k] for k in "abcd")
    for lo, hi in ((pd, pc), (pc, pa), (pc, pb)):
        if not X.lt(lo, hi):
            raise NotApplicableError("witness does not span a yoke")
    if X.comparable(pa, pb):
        raise NotApplicableError("top pair of a yoke must be incomparable")
    if X.up_mask(pa) & X.up_mask(pb):
        raise NotApplicableError("top pair must have no common upper bound")
    mapping = {}
    for p in X.points:
        if X.leq(pa, p):
            mapping[p] = pa
        elif X.leq(pb, p):
            mapping[p] = pb
        elif X.leq(p, pd):
            mapping[p] = pd
        else:
            mapping[p] = pc
    target = X.subspace([pa, pb, pc, pd])
    return MonotoneMap(source=X, target=target, mapping=mapping)


def fence_order(X: FinitePoset) -> tuple[Point, ...] | None:
    """Point order when X is a fence: height <= 1 and the comparability
    graph is a simple path.  Returns None otherwise."""
    if X.n == 1:
        return (X.points[0],)
    if X.height() > 1 or not X.is_connected():
        return None
    degs = {p: len(X.comparability_neighbors(p)) for p in X.points}
    ends = sorted(p for p, d in degs.items() if d == 1)
    if any(d > 2 for d in degs.values()) or len(ends) != 2:
        return None
    walk = [ends[0]]
    prev = None
    while len(walk) < X.n:
        nxt = [q for q in X.comparability_neighbors(walk[-1]) if q != prev]
        if len(nxt) != 1:
            return None
        prev = walk[-1]
        walk.append(nxt[0])
    return tuple(walk)


def maximal_fence(X: FinitePoset) -> tuple[Point, ...]:
    """A longest induced-by-walk fence of a connected space, lex least.

    Fences are walks in the comparability graph with no repeated points.
    Exhaustive DFS; intended for the small spaces the engine handles.
    """
    if not X.is_connected():
        raise NotApplicableError("maximal fence needs a connected space")
    best: tuple[Point, ...] = (min(X.points),)

    def extend(walk: list[Point], used: set[Point]):
        nonlocal best
        cur = tuple(walk)
        if len(cur) > len(best) or (len(cur) == len(best) and cur < best):
            best = cur
        for q in sorted(X.comparability_neighbors(walk[-1])):
            if q not in used:
                walk.append(q)
                used.add(q)
                extend(walk, used)
                used.discard(q)
                walk.pop()

    for start in sorted(X.points):
        extend([start], {start})
    return best


# -- enumeration ------------------------------------------------------------------


def enumeration_cap() -> int:
    raw = os.environ.get("POSET_PURSUIT_CAP")
    if raw is None:
        return DEFAULT_ENUMERATION_CAP
    return int(raw)


def enumerate_posets(n: int, cap: int | None = None) -> tuple[FinitePoset, ...]:
    """All posets on n points up to isomorphism, in canonical order.

    Grown by repeatedly attaching a new maximal point above each
    down-closed subset and deduplicating by canonical form, so the
    output order is deterministic and restartable.
    """
    if cap is None:
        cap = enumeration_cap()
    if n < 1:
        raise ValueError("n must be positive")
    if n > cap:
        raise NotApplicableError(
            f"enumeration of {n}-point spaces exceeds the cap {cap}"
        )
    level: dict[bytes, FinitePoset] = {}
    single = poset(["p0"], [])
    level[canonical_key(single)] = single
    for k in range(2, n + 1):
        nxt: dict[bytes, FinitePoset] = {}
        new_pt = f"p{k - 1}"
        for X in level.values():
            full = (1 << X.n) - 1
            for ideal in range(full + 1):
                if any(X._down[i] & ~ideal for i in _iter_bits(ideal)):
                    continue
                pts = X.points + (new_pt,)
                down = list(X._down) + [ideal | (1 << X.n)]
                Y = FinitePoset(pts, tuple(down))
                key = canonical_key(Y)
                if key not in nxt:
                    nxt[key] = Y
        level = nxt
    return tuple(level[k] for k in sorted(level))
