import random
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from lll_workbench.graphs import DependencyGraph, InputError
from lll_workbench.shearer import (
    CapExceeded,
    ProbabilityVector,
    boundary_scale,
    descent_gap_lower,
    expected_resample_bound,
    in_shearer_bound,
    independent_sets,
    l1_gap,
    q_empty,
    q_polynomial,
    shearer_membership,
)


def cycle(n):
    return DependencyGraph.from_edges(n, [(k, k % n + 1) for k in range(1, n + 1)])


K1 = DependencyGraph(1, frozenset())
K3 = DependencyGraph.from_edges(3, [(1, 2), (2, 3), (1, 3)])
C4 = cycle(4)


def brute_q(g, p, iset):
    """Independent oracle: literal alternating sum over independent supersets."""
    iset = frozenset(iset)
    total = Fraction(0)
    for size in range(g.m + 1):
        for sub in combinations(g.vertices, size):
            s = frozenset(sub)
            if not iset <= s:
                continue
            if any(g.has_edge(a, b) for a, b in combinations(sorted(s), 2)):
                continue
            term = Fraction((-1) ** (len(s) - len(iset)))
            for v in s:
                term *= p[v]
            total += term
    return total


class TestIndependentSets:
    def test_triangle(self):
        assert list(independent_sets(K3)) == [(), (1,), (2,), (3,)]

    def test_c4(self):
        assert list(independent_sets(C4)) == [
            (), (1,), (2,), (3,), (4,), (1, 3), (2, 4),
        ]

    def test_edgeless(self):
        got = list(independent_sets(DependencyGraph(3, frozenset())))
        assert len(got) == 8
        sizes = [len(s) for s in got]
        assert sizes == sorted(sizes)

    def test_enumeration_cap(self):
        with pytest.raises(CapExceeded):
            list(independent_sets(DependencyGraph(31, frozenset())))


class TestQValues:
    def test_single_vertex(self):
        p = ProbabilityVector((Fraction(2, 7),))
        assert q_polynomial(K1, p, ()) == Fraction(5, 7)
        assert q_polynomial(K1, p, (1,)) == Fraction(2, 7)

    def test_c4_quarter(self):
        assert q_empty(C4, ProbabilityVector.uniform(4, Fraction(1, 4))) == Fraction(1, 8)

    def test_k3_third_is_zero(self):
        assert q_empty(K3, ProbabilityVector.uniform(3, Fraction(1, 3))) == 0

    def test_dependent_set_rejected(self):
        with pytest.raises(InputError):
            q_polynomial(K3, ProbabilityVector.uniform(3, Fraction(1, 4)), (1, 2))

    def test_matches_brute_force(self):
        rng = random.Random(17)
        graphs = [K3, C4, cycle(5), DependencyGraph.from_edges(4, [(1, 2), (2, 3)])]
        for g in graphs:
            p = ProbabilityVector(
                tuple(Fraction(rng.randint(1, 9), 20) for _ in range(g.m))
            )
            for iset in independent_sets(g):
                assert q_polynomial(g, p, iset) == brute_q(g, p, iset)


class TestMembership:
    def test_k3_inside(self):
        p = ProbabilityVector.uniform(3, Fraction(1, 3) - Fraction(1, 100))
        assert in_shearer_bound(K3, p).in_bound

    def test_k3_boundary_witness_is_empty_set(self):
        report = in_shearer_bound(K3, ProbabilityVector.uniform(3, Fraction(1, 3)))
        assert not report.in_bound
        assert report.witness == ()

    def test_c4_quarter_inside(self):
        assert in_shearer_bound(C4, ProbabilityVector.uniform(4, Fraction(1, 4))).in_bound

    def test_down_closed(self):
        rng = random.Random(23)
        for g in (K3, C4, cycle(5)):
            for _ in range(40):
                p = tuple(Fraction(rng.randint(1, 12), 48) for _ in range(g.m))
                if not shearer_membership(g, p):
                    continue
                q = tuple(x * Fraction(rng.randint(1, 8), 8) for x in p)
                if any(x == 0 for x in q):
                    continue
                assert shearer_membership(g, q)

    def test_zero_entries_restrict_to_support(self):
        # (1, 0, 0) on the triangle sits outside: the support subsystem fails
        assert not shearer_membership(K3, (Fraction(1), Fraction(0), Fraction(0)))
        assert shearer_membership(K3, (Fraction(1, 2), Fraction(0), Fraction(0)))


class TestBoundaryScale:
    def test_k3_boundary_third(self):
        res = boundary_scale(K3, ProbabilityVector.uniform(3, 1), Fraction(1, 1024))
        assert res.lo <= Fraction(1, 3) <= res.hi
        assert res.hi - res.lo <= Fraction(1, 1024)
        assert not res.clamped

    def test_k1_boundary_at_one_is_clamped(self):
        res = boundary_scale(K1, ProbabilityVector.uniform(1, 1), Fraction(1, 1024))
        assert res.hi == 1
        assert res.clamped

    def test_c4_boundary(self):
        res = boundary_scale(C4, ProbabilityVector.uniform(4, 1), Fraction(1, 1 << 20))
        # smallest positive root of 1 - 4t + 2t^2
        assert abs(float(res.hi) - (2 - 2**0.5) / 2) < 2e-6

    def test_monotone_consistency(self):
        res = boundary_scale(C4, ProbabilityVector.uniform(4, 1), Fraction(1, 4096))
        assert shearer_membership(C4, [res.lo] * 4)
        assert not shearer_membership(C4, [res.hi] * 4)

    def test_clamped_flag_on_edgeless_pair(self):
        # the region of the edgeless pair is the whole open box, so the
        # boundary along any direction sits exactly at the clamp scale
        g = DependencyGraph(2, frozenset())
        res = boundary_scale(
            g, ProbabilityVector((Fraction(1, 2), Fraction(1, 4))), Fraction(1, 64)
        )
        assert res.clamped
        assert res.hi == 2


class TestGap:
    def test_marker_for_inside_vectors(self):
        gap = l1_gap(K3, ProbabilityVector.uniform(3, Fraction(1, 4)), Fraction(1, 256))
        assert gap.lower == gap.upper == Fraction(-1)

    def test_k3_example_contains_one_sixth(self):
        p = ProbabilityVector((Fraction(1, 2), Fraction(1, 3), Fraction(1, 3)))
        gap = l1_gap(K3, p, Fraction(1, 256))
        assert gap.lower <= Fraction(1, 6) <= gap.upper
        assert gap.upper - gap.lower <= Fraction(1, 256)

    def test_interval_well_formed_beyond(self):
        # certified search stays cheap when the out-region is shallow, so use
        # a mildly-beyond vector at a matching resolution
        gap = l1_gap(C4, ProbabilityVector.uniform(4, Fraction(31, 100)), Fraction(1, 64))
        assert Fraction(0) <= gap.lower <= gap.upper
        assert gap.upper - gap.lower <= Fraction(1, 64)

    def test_descent_bound_is_consistent(self):
        p = ProbabilityVector((Fraction(1, 2), Fraction(1, 3), Fraction(1, 3)))
        quick = descent_gap_lower(K3, p)
        gap = l1_gap(K3, p, Fraction(1, 256))
        assert quick <= gap.upper
        assert quick >= gap.lower - Fraction(1, 256)

    def test_descent_marker_inside(self):
        assert descent_gap_lower(K3, ProbabilityVector.uniform(3, Fraction(1, 4))) == -1


class TestExpectedResampleBound:
    def test_single_event_half(self):
        assert expected_resample_bound(K1, ProbabilityVector.uniform(1, Fraction(1, 2))) == 1

    def test_single_event_scaled(self):
        # p = 1/(1+eps) gives exactly 1/eps, the m/eps form with m = 1
        eps = Fraction(1, 4)
        p = ProbabilityVector.uniform(1, 1 / (1 + eps))
        assert expected_resample_bound(K1, p) == 1 / eps

    def test_c4_eighth_matches_enumeration(self):
        p = ProbabilityVector.uniform(4, Fraction(1, 8))
        got = expected_resample_bound(C4, p)
        want = sum(brute_q(C4, p, (i,)) for i in C4.vertices) / brute_q(C4, p, ())
        assert got == want

    def test_out_of_bound_rejected(self):
        with pytest.raises(InputError):
            expected_resample_bound(K3, ProbabilityVector.uniform(3, Fraction(1, 2)))


class TestCycleSlope:
    def test_exact_slope_is_path_avoidance_probability(self):
        # d q_0 / d p_last at the symmetric quarter point: the multilinear
        # alternating sum differentiates to minus the q-value of the graph
        # with the last vertex's closed neighbourhood removed, which for the
        # cycle is a path system with avoidance probability (l-1)/2^(l-2)
        step = Fraction(1, 10**6)
        for length in range(4, 8):
            g = cycle(length)
            base = ProbabilityVector.uniform(length, Fraction(1, 4))
            bumped = list(base.values)
            bumped[-1] += step
            slope = (q_empty(g, ProbabilityVector(tuple(bumped))) - q_empty(g, base)) / step
            assert slope == -Fraction(length - 1, 2 ** (length - 2))

    def test_perturbed_vector_stays_inside(self):
        for length in range(4, 8):
            vals = [Fraction(1, 4)] * length
            vals[-1] += Fraction(1, 4 * (length - 1))
            assert in_shearer_bound(cycle(length), ProbabilityVector(tuple(vals))).in_bound


@settings(max_examples=40, deadline=None)
@given(
    scale=st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100)),
    shrink=st.fractions(min_value=Fraction(1, 10), max_value=1),
)
def test_down_closedness_property(scale, shrink):
    boundary = Fraction(1, 3)  # triangle boundary along the symmetric ray
    p = boundary * scale
    assert shearer_membership(K3, [p] * 3)
    assert shearer_membership(K3, [p * shrink] * 3)
