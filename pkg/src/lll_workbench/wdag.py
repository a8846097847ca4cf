"""Witness-DAG calculus.

Labeled DAGs recording resampling histories: validity, prefixes, exhaustive
enumeration of single-sink wdags up to structural equivalence, reversible
arcs, consistency with resampling/auxiliary tables, the repair procedure that
realigns a wdag with an auxiliary table, label splitting into the matched
double-cover graph, and exact weight sums.

Node identity convention: a wdag on n nodes uses ids 1..n and `labels[k-1]`
is the label of node k. Nodes sharing a label are pairwise arc-connected, so
they are totally ordered; the canonical form renames node v to its pair
(label, rank-within-label) and sorts. Two wdags are structurally equal iff
their canonical encodings coincide.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, combinations_with_replacement, product
from typing import Iterator, Mapping, Sequence

from .graphs import DependencyGraph, InputError, Matching
from .shearer import CapExceeded, ProbabilityVector


@dataclass(frozen=True)
class WDag:
    labels: tuple[int, ...]
    arcs: frozenset[tuple[int, int]]

    def __post_init__(self):
        n = len(self.labels)
        for u, v in self.arcs:
            if not (1 <= u <= n and 1 <= v <= n) or u == v:
                raise InputError(f"arc ({u},{v}) out of range")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def nodes(self) -> range:
        return range(1, self.n + 1)

    def label(self, v: int) -> int:
        return self.labels[v - 1]

    def sinks(self) -> tuple[int, ...]:
        with_out = {u for u, _ in self.arcs}
        return tuple(v for v in self.nodes if v not in with_out)


@lru_cache(maxsize=None)
def _parents(d: WDag) -> dict[int, frozenset[int]]:
    par: dict[int, set[int]] = {v: set() for v in d.nodes}
    for u, v in d.arcs:
        par[v].add(u)
    return {v: frozenset(s) for v, s in par.items()}


@lru_cache(maxsize=None)
def _children(d: WDag) -> dict[int, frozenset[int]]:
    ch: dict[int, set[int]] = {v: set() for v in d.nodes}
    for u, v in d.arcs:
        ch[u].add(v)
    return {v: frozenset(s) for v, s in ch.items()}


@lru_cache(maxsize=None)
def _ancestors(d: WDag) -> dict[int, frozenset[int]]:
    """Strict ancestors (nonempty directed path into the node)."""
    order = topological_order(d)
    anc: dict[int, set[int]] = {v: set() for v in d.nodes}
    for v in order:
        for u in _parents(d)[v]:
            anc[v].add(u)
            anc[v] |= anc[u]
    return {v: frozenset(s) for v, s in anc.items()}


def is_acyclic(labels: Sequence[int], arcs: set[tuple[int, int]]) -> bool:
    n = len(labels)
    indeg = [0] * (n + 1)
    ch: list[list[int]] = [[] for _ in range(n + 1)]
    for u, v in arcs:
        indeg[v] += 1
        ch[u].append(v)
    stack = [v for v in range(1, n + 1) if indeg[v] == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for w in ch[u]:
            indeg[w] -= 1
            if indeg[w] == 0:
                stack.append(w)
    return seen == n


@lru_cache(maxsize=None)
def topological_order(d: WDag) -> tuple[int, ...]:
    """Lexicographic-minimal topological order (deterministic pi_D)."""
    import heapq

    indeg = {v: len(_parents(d)[v]) for v in d.nodes}
    ready = [v for v in d.nodes if indeg[v] == 0]
    heapq.heapify(ready)
    out: list[int] = []
    while ready:
        u = heapq.heappop(ready)
        out.append(u)
        for w in sorted(_children(d)[u]):
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, w)
    if len(out) != d.n:
        raise InputError("wdag contains a cycle")
    return tuple(out)


def validate_wdag(d: WDag, g: DependencyGraph) -> bool:
    """Acyclic, and for every node pair exactly one arc exists iff their
    labels are equal or adjacent (no arc otherwise).
    """
    for v in d.nodes:
        if not 1 <= d.label(v) <= g.m:
            return False
    if not is_acyclic(d.labels, set(d.arcs)):
        return False
    for u, v in combinations(d.nodes, 2):
        lu, lv = d.label(u), d.label(v)
        need = lu == lv or g.has_edge(lu, lv)
        fwd = (u, v) in d.arcs
        bwd = (v, u) in d.arcs
        if need != (fwd != bwd) or (fwd and bwd):
            return False
    return True


def canonical_key(d: WDag):
    """Structure-invariant encoding: rename nodes to (label, within-label
    rank) and sort. Same-label nodes are totally ordered in a valid wdag.
    """
    rank: dict[int, tuple[int, int]] = {}
    by_label: dict[int, list[int]] = {}
    for v in d.nodes:
        by_label.setdefault(d.label(v), []).append(v)
    for lab, vs in by_label.items():
        vs_set = set(vs)
        vs_sorted = sorted(vs, key=lambda v: len(_ancestors(d)[v] & vs_set))
        for k, v in enumerate(vs_sorted):
            rank[v] = (lab, k + 1)
    arcs = tuple(sorted((rank[u], rank[v]) for u, v in d.arcs))
    return (tuple(sorted(rank.values())), arcs)


def canonical_form(d: WDag) -> WDag:
    """Renumber nodes so sorted (label, rank) pairs become ids 1..n."""
    key_nodes, key_arcs = canonical_key(d)
    ids = {pair: k + 1 for k, pair in enumerate(key_nodes)}
    labels = tuple(pair[0] for pair in key_nodes)
    arcs = frozenset((ids[a], ids[b]) for a, b in key_arcs)
    return WDag(labels, arcs)


# ---------------------------------------------------------------------------
# prefixes

def closure(d: WDag, nodes: Sequence[int]) -> frozenset[int]:
    """All nodes with a directed path to some u in nodes (each node reaches
    itself)."""
    out: set[int] = set()
    for u in nodes:
        out.add(u)
        out |= _ancestors(d)[u]
    return frozenset(out)


def prefix(d: WDag, nodes: Sequence[int]) -> WDag:
    """Induced sub-wdag on closure(nodes); node ids renumbered ascending."""
    keep = sorted(closure(d, nodes))
    new_id = {v: k + 1 for k, v in enumerate(keep)}
    labels = tuple(d.label(v) for v in keep)
    arcs = frozenset(
        (new_id[u], new_id[v]) for u, v in d.arcs if u in new_id and v in new_id
    )
    return WDag(labels, arcs)


def is_prefix(h: WDag, d: WDag) -> bool:
    """True iff h equals some prefix of d, up to canonical renaming."""
    want = canonical_key(h)
    for keep in _distinct_closures(d):
        if len(keep) != h.n:
            continue
        if canonical_key(prefix(d, tuple(keep))) == want:
            return True
    return False


def _distinct_closures(d: WDag) -> set[frozenset[int]]:
    outs: set[frozenset[int]] = set()
    node_list = list(d.nodes)
    for r in range(len(node_list) + 1):
        for combo in combinations(node_list, r):
            outs.add(closure(d, combo))
    return outs


def single_sink_prefix_count(d: WDag) -> int:
    """Number of distinct prefixes of d having exactly one sink."""
    count = 0
    for keep in _distinct_closures(d):
        if not keep:
            continue
        sub = prefix(d, tuple(keep))
        if len(sub.sinks()) == 1:
            count += 1
    return count


# ---------------------------------------------------------------------------
# enumeration of proper wdags

def enumerate_pwdags(g: DependencyGraph, node_cap: int) -> Iterator[WDag]:
    """All single-sink wdags of g with at most node_cap nodes, one
    representative per structural class, in deterministic order.

    Nodes of equal label are emitted already in chain order, so every
    orientation of the cross-label conflict pairs yields a distinct class.
    """
    if node_cap < 1:
        raise InputError("node_cap must be positive")
    if node_cap > 8:
        raise CapExceeded("pwdag enumeration capped at 8 nodes")
    for n in range(1, node_cap + 1):
        for labels in combinations_with_replacement(range(1, g.m + 1), n):
            yield from _pwdags_for_multiset(g, labels)


def _pwdags_for_multiset(g: DependencyGraph, labels: tuple[int, ...]) -> Iterator[WDag]:
    n = len(labels)
    fixed: list[tuple[int, int]] = []   # same-label chain arcs, position order
    free: list[tuple[int, int]] = []    # cross-label conflict pairs
    conflict_adj: dict[int, set[int]] = {v: set() for v in range(1, n + 1)}
    for a, b in combinations(range(1, n + 1), 2):
        la, lb = labels[a - 1], labels[b - 1]
        if la == lb:
            fixed.append((a, b))
        elif g.has_edge(la, lb):
            free.append((a, b))
        else:
            continue
        conflict_adj[a].add(b)
        conflict_adj[b].add(a)
    # single sink needs a connected conflict graph
    seen = {1}
    stack = [1]
    while stack:
        u = stack.pop()
        for w in conflict_adj[u]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    if len(seen) != n:
        return
    results = []
    for bits in range(1 << len(free)):
        arcs = set(fixed)
        for k, (a, b) in enumerate(free):
            arcs.add((a, b) if not bits >> k & 1 else (b, a))
        if not is_acyclic(labels, arcs):
            continue
        d = WDag(labels, frozenset(arcs))
        if len(d.sinks()) != 1:
            continue
        results.append(canonical_form(d))
    results.sort(key=canonical_key)
    yield from results


def group_pwdags(
    g: DependencyGraph, node_cap: int
) -> dict[tuple[int, int], list[WDag]]:
    """Group enumerated pwdags by (sink label i, count of nodes labelled i)."""
    groups: dict[tuple[int, int], list[WDag]] = {}
    for d in enumerate_pwdags(g, node_cap):
        (w,) = d.sinks()
        i = d.label(w)
        r = sum(1 for v in d.nodes if d.label(v) == i)
        groups.setdefault((i, r), []).append(d)
    return groups


# ---------------------------------------------------------------------------
# reversible arcs

def _path_exists_avoiding_arc(d: WDag, u: int, v: int) -> bool:
    """Directed path u -> v that does not use the arc (u, v) itself."""
    stack = [w for w in _children(d)[u] if w != v]
    seen = set(stack)
    while stack:
        x = stack.pop()
        if x == v:
            return True
        for w in _children(d)[x]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def is_reversible(d: WDag, u: int, v: int) -> bool:
    """An arc is reversible iff it is the unique directed path u -> v."""
    if (u, v) not in d.arcs:
        raise InputError(f"({u},{v}) is not an arc")
    return not _path_exists_avoiding_arc(d, u, v)


def _m_reversible_arcs(d: WDag, m: Matching) -> list[tuple[int, int]]:
    out = []
    for u, v in sorted(d.arcs):
        pair = (min(d.label(u), d.label(v)), max(d.label(u), d.label(v)))
        if pair in m.pairs and is_reversible(d, u, v):
            out.append((u, v))
    return out


def m_reversible_nodes(
    d: WDag, m: Matching
) -> tuple[frozenset[int], dict[int, frozenset[int]]]:
    """Nodes participating in matched reversible arcs, total and per label."""
    nodes: set[int] = set()
    for u, v in _m_reversible_arcs(d, m):
        nodes.update((u, v))
    per_label: dict[int, set[int]] = {}
    for v in nodes:
        per_label.setdefault(d.label(v), set()).add(v)
    return frozenset(nodes), {k: frozenset(s) for k, s in per_label.items()}


def node_list_for_pair(d: WDag, i: int, j: int) -> list[int]:
    """All nodes labelled i or j in topological order (unique: such nodes are
    pairwise arc-connected)."""
    member_set = {v for v in d.nodes if d.label(v) in (i, j)}
    return sorted(member_set, key=lambda v: len(_ancestors(d)[v] & member_set))


def lambda_order(d: WDag, v: int, pair: tuple[int, int]) -> int:
    """1-based position of v in the pair's topological node list."""
    lst = node_list_for_pair(d, *pair)
    return lst.index(v) + 1


def disjoint_reversible_pairs(d: WDag, m: Matching) -> frozenset[tuple[int, int]]:
    """Greedy scan of each matched pair's node list, taking a reversible
    consecutive matched arc and skipping past it. Covers, per matched label,
    at least half the nodes participating in matched reversible arcs.
    """
    chosen: set[tuple[int, int]] = set()
    for i, j in sorted(m.pairs):
        lst = node_list_for_pair(d, i, j)
        k = 0
        while k < len(lst) - 1:
            u, v = lst[k], lst[k + 1]
            if d.label(u) != d.label(v) and (u, v) in d.arcs and is_reversible(d, u, v):
                chosen.add((u, v))
                k += 2
            else:
                k += 1
    return frozenset(chosen)


def reverse_arc(d: WDag, u: int, v: int) -> WDag:
    """phi(D, u, v): reverse a reversible arc, then take the prefix at the
    original sink. Nodes that lose their path to the sink are dropped.
    """
    sinks = d.sinks()
    if len(sinks) != 1:
        raise InputError("reverse_arc requires a single-sink wdag")
    if not is_reversible(d, u, v):
        raise InputError(f"arc ({u},{v}) is not reversible")
    (w,) = sinks
    arcs = set(d.arcs)
    arcs.discard((u, v))
    arcs.add((v, u))
    flipped = WDag(d.labels, frozenset(arcs))
    return prefix(flipped, (w,))


# ---------------------------------------------------------------------------
# consistency with tables

def sample_indices(d: WDag, v: int, vbl: Mapping[int, Sequence[int]]) -> dict[int, int]:
    """For node v, the resampling-table column per variable of its event:
    one plus the number of ancestors whose event also touches the variable.
    """
    out: dict[int, int] = {}
    anc = _ancestors(d)[v]
    for j in vbl[d.label(v)]:
        out[j] = 1 + sum(1 for u in anc if j in vbl[d.label(u)])
    return out


def consistent_with_table(d: WDag, system, table) -> bool:
    """Every node's event holds on the table entries read just before the
    corresponding resampling would happen.
    """
    vbl = {i: system.events[i - 1].vbl for i in range(1, len(system.events) + 1)}
    for v in d.nodes:
        cols = sample_indices(d, v, vbl)
        assignment = {j: table.entry(j, k) for j, k in cols.items()}
        if not system.holds(d.label(v), assignment):
            return False
    return True


def consistent_with_tables(d: WDag, system, x_table, y_table, m: Matching) -> bool:
    """Consistent with the resampling table, and every matched reversible arc
    that disagrees with the auxiliary table has an inconsistent reversal."""
    if not consistent_with_table(d, system, x_table):
        return False
    for u, v in _m_reversible_arcs(d, m):
        lu, lv = d.label(u), d.label(v)
        pair = (min(lu, lv), max(lu, lv))
        lam = lambda_order(d, u, pair)
        if y_table.entry(pair, lam) == lv:
            if consistent_with_table(reverse_arc(d, u, v), system, x_table):
                return False
    return True


def repair_to_consistent(
    d0: WDag, system, x_table, y_table, m: Matching, check_no_revisit: bool = True
) -> WDag:
    """Repeatedly reverse an auxiliary-table-inconsistent matched reversible
    arc whose reversal stays consistent with the resampling table. Terminates
    (no wdag ever repeats) and returns a wdag consistent with both tables,
    in the same (sink label, label count) class as d0.
    """
    if not consistent_with_table(d0, system, x_table):
        raise InputError("repair requires a resampling-table-consistent start")
    d = d0
    visited = {canonical_key(d)}
    while True:
        successor = None
        for u, v in _m_reversible_arcs(d, m):
            lu, lv = d.label(u), d.label(v)
            pair = (min(lu, lv), max(lu, lv))
            if y_table.entry(pair, lambda_order(d, u, pair)) != lv:
                continue
            candidate = reverse_arc(d, u, v)
            if consistent_with_table(candidate, system, x_table):
                successor = candidate
                break
        if successor is None:
            return d
        d = successor
        if check_no_revisit:
            key = canonical_key(d)
            if key in visited:
                raise AssertionError("repair revisited a wdag")
            visited.add(key)


# ---------------------------------------------------------------------------
# matched double cover and the label-splitting maps

@dataclass(frozen=True)
class HomomorphicGraph:
    """Dependency graph after splitting each matched vertex i into i+ / i-.

    Vertex names: "k" for unmatched original k, "k+" (weight p'_k) and "k-"
    (weight p-_k - p'_k) for matched k. The probability of an unmatched
    vertex is p-_k.
    """

    graph: DependencyGraph
    names: tuple[str, ...]
    p_m: ProbabilityVector
    index: dict[str, int]

    def up(self, i: int) -> int:
        return self.index[f"{i}+"]

    def down(self, i: int) -> int:
        return self.index[f"{i}-"]

    def plain(self, i: int) -> int:
        return self.index[str(i)]


def homomorphic_graph(
    g: DependencyGraph,
    m: Matching,
    p: ProbabilityVector,
    p_minus: ProbabilityVector,
    p_prime: ProbabilityVector,
) -> HomomorphicGraph:
    m.validate_against(g)
    names: list[str] = []
    weights: list[Fraction] = []
    for i in g.vertices:
        if m.covers(i):
            if p_minus[i] < p_prime[i]:
                raise InputError(f"p-_{i} < p'_{i} gives negative split mass")
            names.append(f"{i}+")
            weights.append(p_prime[i])
            names.append(f"{i}-")
            weights.append(p_minus[i] - p_prime[i])
        else:
            names.append(str(i))
            weights.append(p_minus[i])
    index = {nm: k + 1 for k, nm in enumerate(names)}

    def splits(i: int) -> list[str]:
        return [f"{i}+", f"{i}-"] if m.covers(i) else [str(i)]

    edges: set[tuple[int, int]] = set()
    for i0, i1 in g.edges:
        group = [index[nm] for nm in splits(i0) + splits(i1)]
        for a, b in combinations(sorted(group), 2):
            edges.add((a, b))
    graph = DependencyGraph(len(names), frozenset(edges))
    return HomomorphicGraph(graph, tuple(names), ProbabilityVector(tuple(weights)), index)


@dataclass(frozen=True)
class Partition4:
    """Ordered 4-way partition of the matched-label nodes of a wdag, with
    every matched-reversible node forced into the first block."""

    s1: frozenset[int]
    s2: frozenset[int]
    s3: frozenset[int]
    s4: frozenset[int]


def matched_nodes(d: WDag, m: Matching) -> frozenset[int]:
    return frozenset(v for v in d.nodes if m.covers(d.label(v)))


def partitions_psi(d: WDag, m: Matching) -> Iterator[Partition4]:
    """All 4^|free| ordered partitions, where free nodes are the matched
    nodes not participating in any matched reversible arc."""
    reversible, _ = m_reversible_nodes(d, m)
    free = sorted(matched_nodes(d, m) - reversible)
    for assign in product((1, 2, 3, 4), repeat=len(free)):
        blocks: dict[int, set[int]] = {1: set(reversible), 2: set(), 3: set(), 4: set()}
        for v, b in zip(free, assign):
            blocks[b].add(v)
        yield Partition4(*(frozenset(blocks[b]) for b in (1, 2, 3, 4)))


def map_h(d: WDag, s: Partition4, m: Matching, hom: HomomorphicGraph) -> WDag:
    """Image wdag over the split graph: every original node keeps a copy with
    an up/down label, and each node of the third/fourth blocks additionally
    spawns a partner-labelled companion arced into its copy. Cross arcs follow
    the canonical topological order of the original wdag.
    """
    pi = topological_order(d)
    pos = {v: k for k, v in enumerate(pi)}
    n = d.n
    extra = sorted(s.s3 | s.s4)
    star = {v: n + k + 1 for k, v in enumerate(extra)}

    labels: list[int] = [0] * (n + len(extra))
    for v in d.nodes:
        lab = d.label(v)
        if v in s.s1:
            labels[v - 1] = hom.up(lab)
        elif v in s.s2 or v in s.s3 or v in s.s4:
            labels[v - 1] = hom.down(lab)
        else:
            labels[v - 1] = hom.plain(lab)
    for v in extra:
        partner = m.partner(d.label(v))
        labels[star[v] - 1] = hom.up(partner) if v in s.s3 else hom.down(partner)

    def origin(node: int) -> int:
        return node if node <= n else extra[node - n - 1]

    new_nodes = list(range(1, n + len(extra) + 1))
    arcs: set[tuple[int, int]] = {(star[v], v) for v in extra}
    hom_g = hom.graph
    for a in new_nodes:
        for b in new_nodes:
            ga, gb = origin(a), origin(b)
            if ga == gb:
                continue
            la, lb = labels[a - 1], labels[b - 1]
            if (la == lb or hom_g.has_edge(la, lb)) and pos[ga] < pos[gb]:
                arcs.add((a, b))
    return WDag(tuple(labels), frozenset(arcs))


def split_labels(d: WDag, bits: Sequence[int], m: Matching, hom: HomomorphicGraph) -> WDag:
    """Rewrite matched labels to up (bit 0) or down (bit 1) copies, keeping
    nodes and arcs; ranges over all bit strings, this bijects onto the split
    graph's pwdags."""
    matched = sorted(matched_nodes(d, m))
    if len(bits) != len(matched):
        raise InputError("one bit per matched node required")
    labels = []
    bit_of = dict(zip(matched, bits))
    for v in d.nodes:
        lab = d.label(v)
        if v in bit_of:
            labels.append(hom.down(lab) if bit_of[v] else hom.up(lab))
        elif m.covers(lab):
            raise AssertionError("matched node missed")
        else:
            labels.append(hom.plain(lab))
    return WDag(tuple(labels), d.arcs)


# ---------------------------------------------------------------------------
# weights

@dataclass(frozen=True)
class WeightSums:
    by_size: dict[int, Fraction]
    cumulative: Fraction
    node_cap: int


def wdag_weight(d: WDag, p: ProbabilityVector) -> Fraction:
    out = Fraction(1)
    for v in d.nodes:
        out *= p[d.label(v)]
    return out


def weight_sums(g: DependencyGraph, p: ProbabilityVector, node_cap: int) -> WeightSums:
    """Exact per-size partial sums of pwdag weights."""
    by_size: dict[int, Fraction] = {k: Fraction(0) for k in range(1, node_cap + 1)}
    for d in enumerate_pwdags(g, node_cap):
        by_size[d.n] += wdag_weight(d, p)
    return WeightSums(by_size, sum(by_size.values(), Fraction(0)), node_cap)


def tighter_weight(
    d: WDag, p: ProbabilityVector, p_prime: ProbabilityVector, m: Matching
) -> Fraction:
    """Weight with matched-reversible nodes priced at p' instead of p."""
    reversible, _ = m_reversible_nodes(d, m)
    out = Fraction(1)
    for v in d.nodes:
        out *= p_prime[d.label(v)] if v in reversible else p[d.label(v)]
    return out
