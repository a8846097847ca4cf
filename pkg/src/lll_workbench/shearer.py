"""Exact Shearer-region computations.

Everything here is exact rational arithmetic: the alternating sums over
independent sets cancel catastrophically in floating point, so q-values,
membership verdicts, boundary scalings and L1-gap bounds are all Fractions.
Pure functions over immutable inputs.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

from .graphs import DependencyGraph, InputError


class CapExceeded(RuntimeError):
    """A configured enumeration or search cap was hit."""


#: graphs larger than this are refused by full independent-set enumeration
DEFAULT_ENUMERATION_CAP = 30


@dataclass(frozen=True)
class ProbabilityVector:
    """Per-event probabilities, exact rationals in (0, 1]."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(Fraction(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        for k, v in enumerate(vals):
            if not 0 < v <= 1:
                raise InputError(f"probability p_{k + 1}={v} outside (0,1]")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> Fraction:
        """1-based access, matching vertex indices."""
        return self.values[i - 1]

    @staticmethod
    def uniform(m: int, p) -> "ProbabilityVector":
        return ProbabilityVector((Fraction(p),) * m)

    def scaled(self, factor) -> "ProbabilityVector":
        return ProbabilityVector(tuple(Fraction(factor) * v for v in self.values))


@dataclass(frozen=True)
class ShearerReport:
    in_bound: bool
    q_values: dict[tuple[int, ...], Fraction]
    witness: tuple[int, ...] | None


@dataclass(frozen=True)
class GapEstimate:
    """Certified bounds on the maximum L1-gap d(p, G).

    lower == upper == -1 encodes the in-bound marker value.
    """

    lower: Fraction
    upper: Fraction
    resolution: Fraction


@dataclass(frozen=True)
class BoundaryScale:
    lo: Fraction
    hi: Fraction
    clamped: bool


@lru_cache(maxsize=None)
def _closed_neighborhood_masks(g: DependencyGraph) -> tuple[int, ...]:
    masks = []
    for v in g.vertices:
        mask = 1 << (v - 1)
        for w in g.neighbors(v):
            mask |= 1 << (w - 1)
        masks.append(mask)
    return tuple(masks)


def _check_size(g: DependencyGraph, cap: int | None) -> None:
    limit = DEFAULT_ENUMERATION_CAP if cap is None else cap
    if g.m > limit:
        raise CapExceeded(
            f"graph has {g.m} vertices; enumeration capped at {limit}"
        )


def independent_sets(
    g: DependencyGraph, max_vertices: int | None = None
) -> Iterator[tuple[int, ...]]:
    """All independent sets including (), in nondecreasing size order,
    lexicographic within each size.
    """
    _check_size(g, max_vertices)
    nbr = _closed_neighborhood_masks(g)
    current: list[tuple[tuple[int, ...], int]] = [((), 0)]
    yield ()
    while current:
        nxt: list[tuple[tuple[int, ...], int]] = []
        for vs, mask in current:
            start = vs[-1] + 1 if vs else 1
            for v in range(start, g.m + 1):
                if mask & (1 << (v - 1)):
                    continue
                nxt.append((vs + (v,), mask | nbr[v - 1]))
        nxt.sort(key=lambda t: t[0])
        for vs, _ in nxt:
            yield vs
        current = nxt


def _q_empty_masked(
    g: DependencyGraph, values: Sequence[Fraction], mask: int, memo: dict[int, Fraction]
) -> Fraction:
    """Independence polynomial of the induced subgraph `mask` at negated
    weights: sum over independent J within mask of (-1)^|J| prod values.
    """
    if mask == 0:
        return Fraction(1)
    cached = memo.get(mask)
    if cached is not None:
        return cached
    v_bit = mask & -mask
    v = v_bit.bit_length() - 1
    nbr = _closed_neighborhood_masks(g)
    without_v = _q_empty_masked(g, values, mask & ~v_bit, memo)
    without_nv = _q_empty_masked(g, values, mask & ~nbr[v], memo)
    out = without_v - values[v] * without_nv
    memo[mask] = out
    return out


def q_polynomial(
    g: DependencyGraph, p: ProbabilityVector, independent: Sequence[int]
) -> Fraction:
    """q_I: alternating sum over independent supersets J of I of prod p.

    Factorizes as (prod_{i in I} p_i) * q_0 on the graph minus N[I].
    """
    if len(p) != g.m:
        raise InputError("probability vector length mismatch")
    iset = tuple(sorted(set(independent)))
    for u in iset:
        if not 1 <= u <= g.m:
            raise InputError(f"vertex {u} out of range")
    for a in iset:
        for b in iset:
            if a < b and g.has_edge(a, b):
                raise InputError(f"set not independent: edge ({a},{b})")
    nbr = _closed_neighborhood_masks(g)
    mask = (1 << g.m) - 1
    coeff = Fraction(1)
    for u in iset:
        mask &= ~nbr[u - 1]
        coeff *= p[u]
    return coeff * _q_empty_masked(g, p.values, mask, {})


def q_empty(g: DependencyGraph, p: ProbabilityVector) -> Fraction:
    return q_polynomial(g, p, ())


def shearer_membership(g: DependencyGraph, values: Sequence[Fraction]) -> bool:
    """Strict membership test, extended to vectors with zero entries by
    restricting to the support (an event of probability zero never fires).
    """
    vals = [Fraction(v) for v in values]
    if len(vals) != g.m:
        raise InputError("vector length mismatch")
    for v in vals:
        if not 0 <= v <= 1:
            raise InputError(f"entry {v} outside [0,1]")
    support_mask = 0
    for k, v in enumerate(vals):
        if v > 0:
            support_mask |= 1 << k
    nbr = _closed_neighborhood_masks(g)
    memo: dict[int, Fraction] = {}
    # q_I > 0 for every independent I inside the support
    for iset in independent_sets(g):
        if any(not support_mask >> (u - 1) & 1 for u in iset):
            continue
        mask = support_mask
        coeff = Fraction(1)
        for u in iset:
            mask &= ~nbr[u - 1]
            coeff *= vals[u - 1]
        if coeff * _q_empty_masked(g, vals, mask, memo) <= 0:
            return False
    return True


def in_shearer_bound(g: DependencyGraph, p: ProbabilityVector) -> ShearerReport:
    """Check q_I > 0 for every independent set I; exact, with first failing
    set (size order, then lexicographic) as witness.
    """
    if len(p) != g.m:
        raise InputError("probability vector length mismatch")
    nbr = _closed_neighborhood_masks(g)
    memo: dict[int, Fraction] = {}
    full = (1 << g.m) - 1

    def q_of(iset: tuple[int, ...]) -> Fraction:
        mask = full
        coeff = Fraction(1)
        for u in iset:
            mask &= ~nbr[u - 1]
            coeff *= p[u]
        return coeff * _q_empty_masked(g, p.values, mask, memo)

    q_values = {(): q_of(())}
    for v in g.vertices:
        q_values[(v,)] = q_of((v,))
    witness = None
    for iset in independent_sets(g):
        if q_of(iset) <= 0:
            witness = iset
            break
    return ShearerReport(witness is None, q_values, witness)


def boundary_scale(
    g: DependencyGraph,
    direction: ProbabilityVector,
    resolution: Fraction,
) -> BoundaryScale:
    """Bisection bracket [lo, hi] with hi-lo <= resolution such that
    lo*direction is in the bound (lo=0 counts trivially) and hi*direction is
    not. clamped flags a boundary sitting at the clamp scale, the largest
    scale keeping every entry <= 1 (a vector with a unit entry is never
    strictly inside, so the clamp point itself always fails membership).
    """
    resolution = Fraction(resolution)
    if resolution <= 0:
        raise InputError("resolution must be positive")
    t_max = min(Fraction(1) / d for d in direction.values)
    if shearer_membership(g, [t_max * d for d in direction.values]):
        return BoundaryScale(t_max, t_max, clamped=True)
    lo, hi = Fraction(0), t_max
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        if shearer_membership(g, [mid * d for d in direction.values]):
            lo = mid
        else:
            hi = mid
    return BoundaryScale(lo, hi, clamped=hi == t_max)


def _norm1(vec: tuple[Fraction, ...]) -> Fraction:
    return sum(vec, Fraction(0))


def l1_gap(
    g: DependencyGraph,
    p: ProbabilityVector,
    resolution: Fraction,
    max_boxes: int = 500_000,
) -> GapEstimate:
    """Certified bounds on d(p, G) = sup ||q||_1 over 0 <= q <= p with p-q
    outside the region. Returns the -1 marker when p is in the bound.

    Equivalent form used here: minimize ||r||_1 over out-of-bound r <= p
    (the out-region is up-closed since the region is down-closed), then
    d = ||p||_1 - min. Branch-and-bound over boxes [a, b] in [0, p]:
    a box with in-bound upper corner contains no out point; a box with
    out-of-bound lower corner achieves exactly ||a||_1.
    """
    resolution = Fraction(resolution)
    if resolution <= 0:
        raise InputError("resolution must be positive")
    if len(p) != g.m:
        raise InputError("probability vector length mismatch")
    if shearer_membership(g, p.values):
        return GapEstimate(Fraction(-1), Fraction(-1), resolution)

    total = _norm1(p.values)
    zero = tuple(Fraction(0) for _ in p.values)
    member_cache: dict[tuple[Fraction, ...], bool] = {}

    def member(vec: tuple[Fraction, ...]) -> bool:
        got = member_cache.get(vec)
        if got is None:
            got = shearer_membership(g, vec)
            member_cache[vec] = got
        return got

    # every box on the heap straddles the boundary: lower corner in bound,
    # upper corner out of bound; its min-norm lower bound is ||a||_1
    upper_best = total  # ||p||_1 itself is achievable (p is out of bound)
    counter = 0
    heap: list[tuple[Fraction, int, tuple[Fraction, ...], tuple[Fraction, ...]]] = []

    def offer(a: tuple[Fraction, ...], b: tuple[Fraction, ...], a_known_in: bool):
        nonlocal upper_best, counter
        lb = _norm1(a)
        if lb >= upper_best:
            return
        if not a_known_in and not member(a):
            upper_best = min(upper_best, lb)  # a itself is an out point
            return
        counter += 1
        heapq.heappush(heap, (lb, counter, a, b))

    if member(zero):
        offer(zero, p.values, True)
    else:
        upper_best = Fraction(0)
    boxes_seen = 0
    while heap:
        lb, _, a, b = heapq.heappop(heap)
        if upper_best - lb <= resolution:
            heapq.heappush(heap, (lb, counter, a, b))
            break
        if lb >= upper_best:
            continue
        boxes_seen += 1
        if boxes_seen > max_boxes:
            raise CapExceeded(f"l1_gap exceeded {max_boxes} boxes")
        axis = max(range(len(a)), key=lambda k: (b[k] - a[k], -k))
        mid = (a[axis] + b[axis]) / 2
        b_low = tuple(mid if k == axis else b[k] for k in range(len(b)))
        a_high = tuple(mid if k == axis else a[k] for k in range(len(a)))
        if not member(b_low):
            offer(a, b_low, True)  # still straddling
        offer(a_high, b, False)
    lower_min = min((item[0] for item in heap), default=upper_best)
    lower_min = min(lower_min, upper_best)
    return GapEstimate(total - upper_best, total - lower_min, resolution)


def descent_gap_lower(
    g: DependencyGraph,
    p: ProbabilityVector,
    tolerance: Fraction = Fraction(1, 1 << 40),
    max_passes: int = 8,
) -> Fraction:
    """Cheap certified lower bound on d(p, G) for an out-of-bound p.

    Coordinate descent from r = p: per coordinate, bisect the smallest value
    keeping r out of the region; every intermediate r stays a witness, so
    ||p||_1 - ||r||_1 is always a valid lower bound. Returns -1 when p is in
    the region.
    """
    if shearer_membership(g, p.values):
        return Fraction(-1)
    r = list(p.values)
    for _ in range(max_passes):
        improved = False
        for k in range(len(r)):
            if r[k] == 0:
                continue
            lo, hi = Fraction(0), r[k]
            probe = list(r)
            probe[k] = Fraction(0)
            if not shearer_membership(g, probe):
                r[k] = Fraction(0)
                improved = True
                continue
            while hi - lo > tolerance:
                mid = (lo + hi) / 2
                probe[k] = mid
                if shearer_membership(g, probe):
                    lo = mid
                else:
                    hi = mid
            if hi < r[k]:
                r[k] = hi
                improved = True
        if not improved:
            break
    return _norm1(p.values) - _norm1(tuple(r))


def expected_resample_bound(g: DependencyGraph, p: ProbabilityVector) -> Fraction:
    """Exact value of sum_i q_{i}/q_0, the resampling-count bound valid
    whenever p lies in the Shearer region.
    """
    report = in_shearer_bound(g, p)
    if not report.in_bound:
        raise InputError(f"vector out of bound, witness {report.witness}")
    q0 = report.q_values[()]
    return sum(report.q_values[(i,)] for i in g.vertices) / q0
