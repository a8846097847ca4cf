"""Variable-generated event systems and the resampling algorithm.

A system is a list of independent variables (uniform on [0,1) with exact
dyadic samples, or finite with rational masses) plus events that are
deterministic functions of their variables. Elementary events are boxes:
one allowed set per variable, conjunctively. The engine runs the resampling
algorithm against a seeded lazy table, so identical (system, rule, seed)
always reproduce the identical run, and batches can be farmed out to
workers without changing results.
"""

from __future__ import annotations

import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Callable, Mapping

from .graphs import BipartiteEventVariableGraph, DependencyGraph, InputError, base_graph
from .shearer import CapExceeded
from .tables import ResamplingTable, unit_fraction
from .wdag import WDag


# ---------------------------------------------------------------------------
# variables

@dataclass(frozen=True)
class Uniform01:
    """Uniform on [0,1); samples are exact dyadic rationals k / 2^64."""

    def value_from_unit(self, u: Fraction) -> Fraction:
        return u

    def total_measure(self) -> Fraction:
        return Fraction(1)


@dataclass(frozen=True)
class FiniteVariable:
    """Finite domain 0..k-1 with exact rational masses summing to one."""

    masses: tuple[Fraction, ...]

    def __post_init__(self):
        ms = tuple(Fraction(x) for x in self.masses)
        object.__setattr__(self, "masses", ms)
        if any(x < 0 for x in ms) or sum(ms) != 1:
            raise InputError("finite masses must be nonnegative and sum to 1")

    def value_from_unit(self, u: Fraction) -> int:
        acc = Fraction(0)
        for idx, mass in enumerate(self.masses):
            acc += mass
            if u < acc:
                return idx
        return len(self.masses) - 1


# ---------------------------------------------------------------------------
# allowed sets for elementary events

@dataclass(frozen=True)
class IntervalUnion:
    """Disjoint union of half-open rational intervals within [0, 1)."""

    intervals: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        ivs = sorted((Fraction(a), Fraction(b)) for a, b in self.intervals)
        for a, b in ivs:
            if not (0 <= a <= b <= 1):
                raise InputError(f"interval [{a},{b}) outside [0,1)")
        merged: list[tuple[Fraction, Fraction]] = []
        for a, b in ivs:
            if a >= b:
                continue
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(b, merged[-1][1]))
            else:
                merged.append((a, b))
        object.__setattr__(self, "intervals", tuple(merged))

    def contains(self, x: Fraction) -> bool:
        return any(a <= x < b for a, b in self.intervals)

    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), Fraction(0))

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        for a, b in self.intervals:
            for c, d in other.intervals:
                lo, hi = max(a, c), min(b, d)
                if lo < hi:
                    out.append((lo, hi))
        return IntervalUnion(tuple(out))


@dataclass(frozen=True)
class ValueSet:
    """Allowed values of a finite variable."""

    values: frozenset[int]

    def contains(self, x: int) -> bool:
        return x in self.values

    def intersect(self, other: "ValueSet") -> "ValueSet":
        return ValueSet(self.values & other.values)


def _allowed_measure(var, allowed) -> Fraction:
    if isinstance(var, Uniform01):
        return allowed.measure()
    return sum((var.masses[v] for v in allowed.values), Fraction(0))


def _full_allowed(var):
    if isinstance(var, Uniform01):
        return IntervalUnion(((Fraction(0), Fraction(1)),))
    return ValueSet(frozenset(range(len(var.masses))))


# ---------------------------------------------------------------------------
# events and systems

@dataclass(frozen=True)
class Event:
    """An event over its variable set: either an explicit predicate over
    assignments, or an elementary box (allowed set per variable)."""

    vbl: tuple[int, ...]
    allowed: tuple[tuple[int, object], ...] | None = None
    predicate: Callable[[Mapping[int, object]], bool] | None = None

    def __post_init__(self):
        if not self.vbl:
            raise InputError("event must depend on at least one variable")
        object.__setattr__(self, "vbl", tuple(sorted(set(self.vbl))))
        if self.allowed is not None:
            boxes = tuple(sorted((int(j), s) for j, s in self.allowed))
            if tuple(j for j, _ in boxes) != self.vbl:
                raise InputError("elementary form must cover exactly vbl")
            object.__setattr__(self, "allowed", boxes)
        elif self.predicate is None:
            raise InputError("event needs an elementary form or a predicate")

    @property
    def is_elementary(self) -> bool:
        return self.allowed is not None

    def allowed_for(self, j: int):
        for jj, s in self.allowed:
            if jj == j:
                return s
        raise InputError(f"variable {j} not in event")

    def holds(self, assignment: Mapping[int, object]) -> bool:
        if self.allowed is not None:
            return all(s.contains(assignment[j]) for j, s in self.allowed)
        return self.predicate(assignment)


@dataclass(frozen=True)
class EventSystem:
    variables: tuple[object, ...]
    events: tuple[Event, ...]

    def __post_init__(self):
        n = len(self.variables)
        for ev in self.events:
            for j in ev.vbl:
                if not 1 <= j <= n:
                    raise InputError(f"event variable {j} out of range")

    @property
    def m(self) -> int:
        return len(self.events)

    def holds(self, i: int, assignment: Mapping[int, object]) -> bool:
        return self.events[i - 1].holds(assignment)

    def bipartite(self) -> BipartiteEventVariableGraph:
        edges = frozenset(
            (i, j) for i, ev in enumerate(self.events, 1) for j in ev.vbl
        )
        return BipartiteEventVariableGraph(self.m, len(self.variables), edges)

    def dependency_graph(self) -> DependencyGraph:
        return base_graph(self.bipartite())

    def event_probability(self, i: int) -> Fraction:
        ev = self.events[i - 1]
        if ev.is_elementary:
            out = Fraction(1)
            for j, s in ev.allowed:
                out *= _allowed_measure(self.variables[j - 1], s)
            return out
        return self._exhaustive_probability((i,))

    def _exhaustive_probability(self, which: tuple[int, ...], cap: int = 1_000_000) -> Fraction:
        """Joint probability of the given events by summing over all finite
        outcome tuples; every involved variable must be finite."""
        vbls = sorted({j for i in which for j in self.events[i - 1].vbl})
        domains = []
        size = 1
        for j in vbls:
            var = self.variables[j - 1]
            if isinstance(var, Uniform01):
                raise InputError("exhaustive probability needs finite variables")
            domains.append(range(len(var.masses)))
            size *= len(var.masses)
            if size > cap:
                raise CapExceeded(f"outcome space beyond {cap}")
        total = Fraction(0)
        from itertools import product as iproduct

        for combo in iproduct(*domains):
            assignment = dict(zip(vbls, combo))
            if all(self.holds(i, assignment) for i in which):
                weight = Fraction(1)
                for j, v in assignment.items():
                    weight *= self.variables[j - 1].masses[v]
                total += weight
        return total


def pair_intersection(system: EventSystem, i: int, i2: int) -> Fraction:
    """Exact Pr(A_i and A_i2); box product for elementary events, exhaustive
    summation otherwise."""
    a, b = system.events[i - 1], system.events[i2 - 1]
    if a.is_elementary and b.is_elementary:
        out = Fraction(1)
        for j in sorted(set(a.vbl) | set(b.vbl)):
            var = system.variables[j - 1]
            sa = a.allowed_for(j) if j in a.vbl else _full_allowed(var)
            sb = b.allowed_for(j) if j in b.vbl else _full_allowed(var)
            out *= _allowed_measure(var, sa.intersect(sb))
        return out
    return system._exhaustive_probability((i, i2))


def measure_pair_intersections(system: EventSystem) -> dict[tuple[int, int], Fraction]:
    """Exact pairwise intersection probabilities over base-graph edges."""
    g = system.dependency_graph()
    return {e: pair_intersection(system, *e) for e in sorted(g.edges)}


# ---------------------------------------------------------------------------
# selection rules

def _rule_lowest_index(violated, history, rng):
    return violated[0]


def _rule_uniform_random(violated, history, rng):
    return violated[rng.randrange(len(violated))]


def _rule_recent_neighbor(system_graph: DependencyGraph):
    """Prefer violated events adjacent to (or equal to) the most recently
    resampled event; falls back to lowest index."""

    def rule(violated, history, rng):
        for past in reversed(history):
            near = [
                i for i in violated
                if i == past or system_graph.has_edge(i, past)
            ]
            if near:
                return near[0]
        return violated[0]

    return rule


SELECTION_RULES = ("lowest-index", "uniform-violated", "recent-neighbor")


def make_rule(name: str, system: EventSystem):
    if name == "lowest-index":
        return _rule_lowest_index
    if name == "uniform-violated":
        return _rule_uniform_random
    if name == "recent-neighbor":
        return _rule_recent_neighbor(system.dependency_graph())
    raise InputError(f"unknown selection rule {name!r}; choose from {SELECTION_RULES}")


# ---------------------------------------------------------------------------
# runs

DEFAULT_STEP_CAP = 1_000_000


@dataclass(frozen=True)
class RunStats:
    sequence: tuple[int, ...]
    truncated: bool
    final_assignment: dict[int, object]
    per_event_counts: dict[int, int]

    @property
    def t(self) -> int:
        return len(self.sequence)


def run_mt(
    system: EventSystem,
    rule: str | Callable,
    seed: int | str,
    step_cap: int = DEFAULT_STEP_CAP,
    table=None,
) -> RunStats:
    """Run the resampling algorithm from a seeded table.

    The initial assignment is column 1 of the table; resampling a variable
    advances that variable's cursor one column to the right. Stops when no
    event holds, or flags truncation at the step cap.
    """
    if step_cap < 1:
        raise InputError("step_cap must be positive")
    rule_fn = make_rule(rule, system) if isinstance(rule, str) else rule
    if table is None:
        table = ResamplingTable(system.variables, seed)
    rng = random.Random(int(unit_fraction(seed, "rule") * (1 << 64)))
    cursor = {j: 1 for j in range(1, len(system.variables) + 1)}
    assignment = {j: table.entry(j, 1) for j in cursor}
    sequence: list[int] = []
    counts: dict[int, int] = {}
    truncated = False
    while True:
        violated = [i for i in range(1, system.m + 1) if system.holds(i, assignment)]
        if not violated:
            break
        if len(sequence) >= step_cap:
            truncated = True
            break
        pick = rule_fn(violated, sequence, rng)
        if pick not in violated:
            raise InputError("selection rule chose a non-violated event")
        sequence.append(pick)
        counts[pick] = counts.get(pick, 0) + 1
        for j in system.events[pick - 1].vbl:
            cursor[j] += 1
            assignment[j] = table.entry(j, cursor[j])
    return RunStats(tuple(sequence), truncated, dict(assignment), counts)


def witness_dag_of_run(system: EventSystem, stats: RunStats) -> WDag:
    """The wdag of a resample sequence: nodes in time order, arcs forward in
    time between equal or dependency-adjacent labels."""
    g = system.dependency_graph()
    seq = stats.sequence
    arcs = set()
    for k in range(len(seq)):
        for l in range(k + 1, len(seq)):
            if seq[k] == seq[l] or g.has_edge(seq[k], seq[l]):
                arcs.add((k + 1, l + 1))
    return WDag(tuple(seq), frozenset(arcs))


def extremal_cycle_instance(length: int, threshold: Fraction = Fraction(1, 2)) -> EventSystem:
    """Cyclic system on uniform variables where event i wants variable i
    below the threshold and variable i+1 at or above it. Adjacent events are
    mutually exclusive and each has probability a*(1-a).
    """
    if length < 4:
        raise InputError("cycle instances need length >= 4")
    a = Fraction(threshold)
    if not 0 < a < 1:
        raise InputError("threshold must lie strictly inside (0,1)")
    low = IntervalUnion(((Fraction(0), a),))
    high = IntervalUnion(((a, Fraction(1)),))
    events = []
    for i in range(1, length + 1):
        nxt = i % length + 1
        events.append(Event(vbl=(i, nxt), allowed=((i, low), (nxt, high))))
    return EventSystem(tuple(Uniform01() for _ in range(length)), tuple(events))


# ---------------------------------------------------------------------------
# batch estimation

@dataclass(frozen=True)
class StepEstimate:
    mean: float
    stderr: float
    trials: int
    truncated_runs: int
    per_trial: tuple[tuple[int, int, bool], ...]


def _trial_seed(seed: int | str, index: int) -> str:
    return f"{seed}/{index}"


def _run_chunk(args) -> list[tuple[int, int, bool]]:
    system, rule_name, seed, step_cap, indices = args
    out = []
    for t in indices:
        stats = run_mt(system, rule_name, _trial_seed(seed, t), step_cap)
        out.append((t, stats.t, stats.truncated))
    return out


def estimate_expected_steps(
    system: EventSystem,
    rule: str,
    trials: int,
    seed: int | str,
    step_cap: int = DEFAULT_STEP_CAP,
    workers: int | None = None,
) -> StepEstimate:
    """Sample mean and standard error of the resample count over independent
    seeded runs. Truncated runs are excluded from the mean and reported.
    Per-trial seeds derive from (seed, index), so results do not depend on
    the worker count.
    """
    if trials < 1:
        raise InputError("trials must be positive")
    if workers is None:
        workers = int(os.environ.get("LLL_WORKBENCH_THREADS", "1"))
    indices = list(range(trials))
    rows: list[tuple[int, int, bool]] = []
    if workers > 1 and all(ev.is_elementary for ev in system.events):
        chunk = max(1, trials // (workers * 8))
        jobs = [
            (system, rule, seed, step_cap, indices[k : k + chunk])
            for k in range(0, trials, chunk)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_run_chunk, jobs):
                rows.extend(part)
    else:
        rows = _run_chunk((system, rule, seed, step_cap, indices))
    rows.sort()
    per_trial = tuple(rows)
    counts = [t for _, t, trunc in rows if not trunc]
    truncated = sum(1 for _, _, trunc in rows if trunc)
    if not counts:
        return StepEstimate(float("nan"), float("nan"), trials, truncated, per_trial)
    mean = sum(counts) / len(counts)
    if len(counts) > 1:
        var = sum((c - mean) ** 2 for c in counts) / (len(counts) - 1)
        stderr = sqrt(var / len(counts))
    else:
        stderr = float("nan")
    return StepEstimate(mean, stderr, trials, truncated, per_trial)
