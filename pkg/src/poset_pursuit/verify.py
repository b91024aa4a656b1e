"""Certificate checking: does a pursuer schedule actually corner every evader?

The evader is invisible, so a schedule wins exactly when NO continuous
evader path avoids it for the whole duration.  Against a step path the
question is decidable by a reachability sweep: between two pursuer
instants the evader roams a punctured subspace, and only the component
structure of that subspace matters.  Against a recursively structured
schedule the sweep does not terminate, so the engine offers a bounded
refutation search on a canonical time grid instead: it can prove a
schedule BAD by exhibiting an evader, and can report that no evader
with a given breakpoint budget on the grid survives.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import NotApplicableError, VerificationError
from .regular import RegularPath
from .spaces import FinitePoset, Point, _iter_bits
from .steppaths import StepPath

# -- link structure of a punctured space ------------------------------------------


@lru_cache(maxsize=65536)
def _component_reach(X: FinitePoset, v: Point) -> dict[Point, int]:
    """For each point x, the set of components of X minus v that the
    punctured neighborhood U(x) minus v touches, as a bitmask."""
    sub = X.without(v) if X.n > 1 else None
    comp_id: dict[Point, int] = {}
    if sub is not None:
        for idx, comp in enumerate(sub.components()):
            for p in comp:
                comp_id[p] = idx
    out = {}
    for x in X.points:
        mask = 0
        for y in X.down_set(x):
            if y != v:
                mask |= 1 << comp_id[y]
        out[x] = mask
    return out


def can_link(X: FinitePoset, v: Point, x: Point, y: Point) -> bool:
    """Can an evader at x slide to y while the pursuer sits at v?

    True when the punctured neighborhoods of x and y meet a common
    component of the space without v: the evader drops into its
    neighborhood, walks the component, and climbs out under y.
    """
    reach = _component_reach(X, v)
    return bool(reach[x] & reach[y])


# -- escape decision against a step path --------------------------------------------


@dataclass(frozen=True)
class EscapeOutcome:
    escapes: bool
    breakpoint_values: tuple[Point, ...] | None


def escape_exists(cop: StepPath) -> EscapeOutcome:
    """Decide whether any evader avoids the given pursuer step path.

    Sweeps the set of evader positions possible at each pursuer
    instant.  Only the value sequence of the path matters.  When an
    escape exists, a witness value sequence (evader position at each
    pursuer instant) is extracted, preferring the least-named point at
    every choice.
    """
    X = cop.space
    w, v = cop.breakpoints, cop.intervals
    layers = [frozenset(x for x in X.points if x != w[0])]
    for i, vi in enumerate(v):
        reach = _component_reach(X, vi)
        prev_mask = 0
        for x in layers[-1]:
            prev_mask |= reach[x]
        layers.append(
            frozenset(
                y for y in X.points if y != w[i + 1] and reach[y] & prev_mask
            )
        )
    if not layers[-1]:
        return EscapeOutcome(escapes=False, breakpoint_values=None)
    seq = [min(layers[-1])]
    for i in range(len(v) - 1, -1, -1):
        reach = _component_reach(X, v[i])
        tail = reach[seq[-1]]
        seq.append(min(x for x in layers[i] if reach[x] & tail))
    seq.reverse()
    return EscapeOutcome(escapes=True, breakpoint_values=tuple(seq))


def realize_escape(cop: StepPath, values: tuple[Point, ...]) -> StepPath:
    """Concrete evader path visiting the witness values at the pursuer's
    instants, sliding through punctured components in between."""
    X = cop.space
    if len(values) != len(cop.times):
        raise NotApplicableError("need one evader value per pursuer instant")
    times = [cop.times[0]]
    bps = [values[0]]
    ivs: list[Point] = []
    for i, vi in enumerate(cop.intervals):
        x, y = values[i], values[i + 1]
        sub = X.without(vi)
        pair = None
        for xp in X.down_set(x):
            if xp == vi:
                continue
            for yp in X.down_set(y):
                if yp == vi:
                    continue
                fence = sub.fence_between(xp, yp)
                if fence is not None and (
                    pair is None or len(fence) < len(pair)
                ):
                    pair = fence
        if pair is None:
            raise VerificationError(f"witness values {x!r}..{y!r} cannot be linked")
        q = len(pair) - 1
        dt = (cop.times[i + 1] - cop.times[i]) / (q + 1)
        for j, z in enumerate(pair):
            ivs.append(z)
            if j < q:
                nxt = pair[j + 1]
                upper = z if X.leq(nxt, z) else nxt
                bps.append(upper)
                times.append(cop.times[i] + dt * (j + 1))
        bps.append(y)
        times.append(cop.times[i + 1])
    path = StepPath(
        space=X, times=tuple(times), breakpoints=tuple(bps), intervals=tuple(ivs)
    ).normalize()
    hit = coincidence_step(cop, path)
    if hit is not None:
        raise VerificationError(f"realized evader meets the pursuer at t={hit}")
    return path


# -- coincidence checks ----------------------------------------------------------------


def coincidence_step(cop: StepPath, other: StepPath) -> Fraction | None:
    """Earliest time two step paths on the same domain agree, or None."""
    if (cop.start, cop.end) != (other.start, other.end):
        raise NotApplicableError("paths must share their time domain")
    merged = sorted(set(cop.times) | set(other.times))
    for t1, t2 in zip(merged, merged[1:]):
        if cop.value_at(t1) == other.value_at(t1):
            return t1
        mid = (t1 + t2) / 2
        if cop.value_at(mid) == other.value_at(mid):
            return mid
    if cop.value_at(merged[-1]) == other.value_at(merged[-1]):
        return merged[-1]
    return None


def coincidence_regular_step(cop: RegularPath, other: StepPath) -> Fraction | None:
    """A time where a recursive pursuer path meets a step path, or None.

    Instants are compared exactly; on each open stretch the stretch
    value is looked up in the pursuer's window profile, and a witness
    time is produced when it occurs.  The witness inside a stretch is
    exact but not necessarily the earliest such time overall.
    """
    if (cop.start, cop.end) != (other.start, other.end):
        raise NotApplicableError("paths must share their time domain")
    for kind, span, val in other.pieces():
        if kind == "bp":
            if cop.value_at(span) == val:
                return span
        else:
            lo, hi = span
            if val in cop.profile(lo, hi).union:
                t = cop.find_value_time(val, lo, hi)
                if t is None:
                    raise VerificationError(
                        f"profile reports {val!r} on ({lo}, {hi}) but no witness found"
                    )
                return t
    return None


# -- independent bounded enumeration against step paths ----------------------------------


def _segment_shapes(X: FinitePoset, forbidden: Point, x: Point, y: Point, max_interior: int):
    """Evader value shapes crossing one pursuer stretch: alternating
    stretch and instant values, all avoiding the pursuer's value, with
    at most max_interior instants.  Yields shapes (u0, m1, u1, ..., ur).
    """
    for r in range(max_interior + 1):
        stretch_opts = [p for p in X.points if p != forbidden]
        for us in itertools.product(stretch_opts, repeat=r + 1):
            if not (X.leq(us[0], x) and X.leq(us[-1], y)):
                continue
            if r == 0:
                yield (us[0],)
                continue
            m_opts = []
            ok = True
            for ua, ub in zip(us, us[1:]):
                opts = [
                    m
                    for m in X.points
                    if m != forbidden and X.leq(ua, m) and X.leq(ub, m)
                ]
                if not opts:
                    ok = False
                    break
                m_opts.append(opts)
            if not ok:
                continue
            for ms in itertools.product(*m_opts):
                shape = [us[0]]
                for m, u in zip(ms, us[1:]):
                    shape.append(m)
                    shape.append(u)
                yield tuple(shape)


def exhaustive_escape_search(
    cop: StepPath, max_interior: int = 2
) -> StepPath | None:
    """Brute-force evader search with bounded breakpoints per stretch.

    Independent of the component sweep: enumerates evader value shapes
    across each pursuer stretch directly, chains them at the pursuer's
    instants, and assembles a concrete path.  Sound but only complete
    up to the per-stretch interior budget.
    """
    X = cop.space
    w, v = cop.breakpoints, cop.intervals

    @lru_cache(maxsize=None)
    def seg(vi: Point, x: Point, y: Point):
        for shape in _segment_shapes(X, vi, x, y, max_interior):
            return shape
        return None

    layers = [frozenset(x for x in X.points if x != w[0])]
    for i, vi in enumerate(v):
        layers.append(
            frozenset(
                y
                for y in X.points
                if y != w[i + 1] and any(seg(vi, x, y) for x in layers[-1])
            )
        )
    if not layers[-1]:
        return None
    seq = [min(layers[-1])]
    for i in range(len(v) - 1, -1, -1):
        seq.append(min(x for x in layers[i] if seg(v[i], x, seq[-1])))
    seq.reverse()

    times = [cop.times[0]]
    bps = [seq[0]]
    ivs: list[Point] = []
    for i, vi in enumerate(v):
        shape = seg(vi, seq[i], seq[i + 1])
        stretches = shape[0::2]
        instants = shape[1::2]
        dt = (cop.times[i + 1] - cop.times[i]) / len(stretches)
        for j, u in enumerate(stretches):
            ivs.append(u)
            if j < len(instants):
                bps.append(instants[j])
                times.append(cop.times[i] + dt * (j + 1))
        bps.append(seq[i + 1])
        times.append(cop.times[i + 1])
    path = StepPath(
        space=X, times=tuple(times), breakpoints=tuple(bps), intervals=tuple(ivs)
    ).normalize()
    if coincidence_step(cop, path) is not None:
        raise VerificationError("assembled evader path meets the pursuer")
    return path


# -- bounded refutation search against recursive paths -----------------------------------


def _collect_slot_stars(node, a: Fraction, b: Fraction, k: int, out: set) -> None:
    from .regular import RConcat, ROmega, RSelfSimilar

    if isinstance(node, RConcat):
        scale = (b - a) / node.duration
        for t, it in node.positions():
            gt = a + t * scale
            _collect_slot_stars(it, gt, gt + it.duration * scale, k, out)
        return
    if isinstance(node, ROmega):
        D = node.duration
        scale = (b - a) / D
        for j in range(1, k + 1):
            if node.side == "left":
                lo, hi = a + scale * D / (j + 1), a + scale * D / j
            else:
                lo, hi = a + scale * (D - D / j), a + scale * (D - D / (j + 1))
            _collect_slot_stars(node.cell_for_copy(j), lo, hi, k, out)
        return
    if isinstance(node, RSelfSimilar):
        scale = (b - a) / node.duration
        for lo, hi in node.slot_spans():
            ell = hi - lo
            star = lo * node.duration / (node.duration - ell)
            if 0 < star < node.duration:
                out.add(a + star * scale)
        for t, it in node.positions():
            if isinstance(it, RSlot := type(None)):  # placeholder, never true
                continue
            gt = a + t * scale
            _collect_slot_stars(it, gt, gt + it.duration * scale, k, out)
        return


def canonical_grid(cop: RegularPath, k: int) -> tuple[Fraction, ...]:
    """Unrolled instants, their midpoints, and self-similar fixed points."""
    base = list(cop.unroll(k).times)
    grid = set(base)
    for t1, t2 in zip(base, base[1:]):
        grid.add((t1 + t2) / 2)
    stars: set = set()
    _collect_slot_stars(cop.root, cop.start, cop.end, k, stars)
    grid |= {s for s in stars if cop.start < s < cop.end}
    return tuple(sorted(grid))


@dataclass(frozen=True)
class BoundedEscapeOutcome:
    found: StepPath | None
    budget: int
    depth: int
    stabilized: bool


def _bounded_search_core(cop: RegularPath, budget: int, depth: int) -> StepPath | None:
    X = cop.space
    grid = canonical_grid(cop, depth)
    m = len(grid) - 1
    window_union = [cop.profile(grid[i], grid[i + 1]).union for i in range(m)]
    at_instant = [cop.value_at(t) for t in grid]

    # states per window index: (breakpoints used, stretch value) -> parent
    # parent = (prev state, instant value placed at the left grid point or None)
    states: list[dict] = [dict() for _ in range(m)]
    for u in X.points:
        if u in window_union[0]:
            continue
        caps = [z for z in X.points if X.leq(u, z) and z != at_instant[0]]
        if caps etc := None:
            pass
        if caps:
            states[0][(0, u)] = (None, caps[0])
    for i in range(1, m):
        gi = at_instant[i]
        for (r, u), parent in states[i - 1].items():
            if u not in window_union[i] and u != gi:
                key = (r, u)
                if key not in states[i]:
                    states[i][key] = ((i - 1, r, u), None)
            if r < budget:
                for u2 in X.points:
                    if u2 in window_union[i]:
                        continue
                    key = (r + 1, u2)
                    if key in states[i]:
                        continue
                    caps = [
                        z
                        for z in X.points
                        if z != gi and X.leq(u, z) and X.leq(u2, z)
                    ]
                    if caps:
                        states[i][key] = ((i - 1, r, u), caps[0])
    final = None
    for (r, u), parent in sorted(states[m - 1].items()):
        caps = [z for z in X.points if X.leq(u, z) and z != at_instant[m]]
        if caps:
            final = ((m - 1, r, u), caps[0])
            break
    if final is None:
        return None

    # reconstruct: walk parents, collecting breakpoints
    (idx, r, u), last_cap = final
    times = [grid[m]]
    bps = [last_cap]
    ivs = [u]
    while True:
        parent, placed = states[idx][(r, u)]
        if parent is None:
            times.append(grid[0])
            bps.append(placed)
            break
        pidx, pr, pu = parent
        if placed is not None:
            times.append(grid[idx])
            bps.append(placed)
            ivs.append(pu)
        idx, r, u = pidx, pr, pu
    times.reverse()
    bps.reverse()
    ivs.reverse()
    path = StepPath(
        space=X, times=tuple(times), breakpoints=tuple(bps), intervals=tuple(ivs)
    ).normalize()
    hit = coincidence_regular_step(cop, path)
    if hit is not None:
        raise VerificationError(f"grid evader actually meets the pursuer at t={hit}")
    return path


def bounded_escape_search(
    cop: RegularPath, budget: int = 3, depth: int = 4
) -> BoundedEscapeOutcome:
    """Search for an evader with at most ``budget`` interior breakpoints
    placed on the canonical grid at unrolling ``depth``.

    A found evader refutes the schedule outright.  Finding none is
    evidence bounded by (budget, depth); the ``stabilized`` flag
    reports whether depth+1 gives the same verdict.
    """
    found = _bounded_search_core(cop, budget, depth)
    found_next = _bounded_search_core(cop, budget, depth + 1)
    return BoundedEscapeOutcome(
        found=found,
        budget=budget,
        depth=depth,
        stabilized=(found is None) == (found_next is None),
    )


def check_cop_path(path, budget: int = 3, depth: int = 4):
    """Re-verify a pursuer schedule: step paths get the exact decision,
    recursive paths get the bounded refutation search."""
    if isinstance(path, StepPath):
        out = escape_exists(path)
        return ("proven", None) if not out.escapes else ("refuted", out)
    if isinstance(path, RegularPath):
        path.validate()
        out = bounded_escape_search(path, budget, depth)
        if out.found is not None:
            return ("refuted", out)
        return ("bounded-no-escape", out)
    raise NotApplicableError(f"unknown certificate payload {type(path).__name__}")
