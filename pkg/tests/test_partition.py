import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randsys import psd_identity, rank_one_identity
from interlace.errors import BoundNotCertified, BudgetExceeded, NotRankOne, PreconditionFailed
from interlace.partition import (
    EXHAUSTIVE,
    LOCAL,
    Assignment,
    LiftedSystem,
    enumerate_assignments,
    expectation_theorem_check,
    expected_lift,
    lift,
    norm_corollary_check,
    objective,
    partition_bound,
    partition_search,
    root_sandwich_check,
)
from interlace.realstable import PSDSystem

E1 = np.diag([1.0, 0.0])
E2 = np.diag([0.0, 1.0])
# A_i = u_i u_i^* / 2 with u = (e1, e1, e2, e2)
U_SYSTEM = PSDSystem.from_matrices([E1 / 2, E1 / 2, E2 / 2, E2 / 2])


def brute_force(S, r):
    """Global minimum of the objective with lexicographic tie-break."""
    best = None
    for omega in itertools.product(range(r), repeat=S.m):
        v = objective(S, omega, r)
        if best is None or v < best[0]:
            best = (v, omega)
    return best


def test_enumerate_examples():
    assert list(enumerate_assignments(2, 2)) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert len(list(enumerate_assignments(1, 3))) == 3
    with pytest.raises(BudgetExceeded):
        enumerate_assignments(8, 12)


def test_lift_examples():
    L = LiftedSystem(PSDSystem.from_matrices([np.array([[1.0]])]), 2)
    assert np.allclose(lift(L, (1,)), np.diag([0, 2]))
    L2 = LiftedSystem(PSDSystem.from_matrices([np.array([[0.5]]), np.array([[0.5]])]), 2)
    assert np.allclose(lift(L2, (0, 1)), np.eye(2))
    L3 = LiftedSystem(U_SYSTEM, 3)
    M = lift(L3, (0, 0, 0, 0))
    assert np.allclose(M[:2, :2], 3 * np.eye(2)) and np.allclose(M[2:, 2:], 0)


def test_expected_lift_examples():
    L = LiftedSystem(PSDSystem.from_matrices([np.array([[1.0]])]), 2)
    assert np.allclose(expected_lift(L)[0], np.eye(2))
    L = LiftedSystem(U_SYSTEM, 3)
    assert np.allclose(sum(expected_lift(L)), np.eye(6))
    (E,) = expected_lift(LiftedSystem(PSDSystem.from_matrices([E1]), 3))
    assert np.allclose(E, np.kron(np.eye(3), E1))


def test_lift_average_equals_expectation():
    rng = np.random.default_rng(0)
    L = LiftedSystem(PSDSystem.from_matrices(rank_one_identity(rng, 2, 3)), 2)
    avg = sum(lift(L, w) for w in enumerate_assignments(3, 2)) / 8
    assert np.max(np.abs(avg - sum(expected_lift(L)))) <= 1e-12


def test_expectation_examples():
    L = LiftedSystem(PSDSystem.from_matrices([E1, E2]), 2)
    assert expectation_theorem_check(L) <= 1e-8
    L = LiftedSystem(PSDSystem.from_matrices([E1]), 2)
    assert expectation_theorem_check(L) <= 1e-10
    with pytest.raises(NotRankOne):
        expectation_theorem_check(LiftedSystem(PSDSystem.from_matrices([np.eye(2)]), 2))


def test_sandwich_examples():
    L = LiftedSystem(PSDSystem.from_matrices([np.array([[1.0]])]), 2)
    sw = root_sandwich_check(L)
    # lifts diag(2, 0) and diag(0, 2); mu[diag(1, 1)] = z^2 - 2z
    assert np.allclose(sw.lower, [2, 0]) and np.allclose(sw.upper, [2, 0])
    assert np.allclose(sw.middle, [2, 0])
    assert sw.holds
    L = LiftedSystem(PSDSystem.from_matrices([np.zeros((2, 2)), np.zeros((2, 2))]), 2)
    sw = root_sandwich_check(L)
    assert np.allclose(sw.lower, 0) and np.allclose(sw.middle, 0) and np.allclose(sw.upper, 0)
    rng = np.random.default_rng(1)
    L = LiftedSystem(PSDSystem.from_matrices(rank_one_identity(rng, 2, 3)), 2)
    assert root_sandwich_check(L).holds


def test_partition_search_u_example():
    res = partition_search(U_SYSTEM, 2)
    assert res.objective == pytest.approx(0.5)
    assert res.best.blocks() == [[0, 2], [1, 3]]
    assert res.bound == pytest.approx(2.0)
    assert res.certified and res.check() is res
    d = res.to_dict()
    assert d["blocks"] == [[1, 3], [2, 4]] and d["assignment"] == [1, 2, 1, 2]


def test_partition_search_trivial_cases():
    res = partition_search(U_SYSTEM, 1)
    assert res.objective == pytest.approx(1.0)
    assert res.bound == pytest.approx((1 + math.sqrt(0.5)) ** 2)
    S = PSDSystem.from_matrices([np.eye(2)])
    for r in (1, 2, 3):
        res = partition_search(S, r)
        assert res.objective == pytest.approx(1.0) and res.objective <= res.bound


def test_partition_search_preconditions():
    with pytest.raises(PreconditionFailed):
        partition_search(PSDSystem.from_matrices([E1]), 2)
    with pytest.raises(BudgetExceeded):
        partition_search(U_SYSTEM, 2, budget=10)


def test_uncertified_result_raises_on_check():
    res = partition_search(U_SYSTEM, 2)
    res.bound = 0.1
    assert not res.certified and res.status == "bound_not_certified"
    with pytest.raises(BoundNotCertified):
        res.check()


def test_norm_corollary_examples():
    nc = norm_corollary_check(LiftedSystem(U_SYSTEM, 2))
    assert nc.min_norm == pytest.approx(1.0)
    assert nc.bound == pytest.approx(4.0) and nc.holds
    A = np.array([[1.0]])
    nc = norm_corollary_check(LiftedSystem(PSDSystem.from_matrices([A]), 1))
    assert nc.min_norm == pytest.approx(1.0) and nc.bound == pytest.approx(4.0)
    rng = np.random.default_rng(2)
    assert norm_corollary_check(LiftedSystem(PSDSystem.from_matrices(rank_one_identity(rng, 2, 4)), 2)).holds


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), r=st.integers(2, 3))
def test_exhaustive_is_global_lexicographic_minimum(seed, r):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    m = int(rng.integers(d, 7))
    S = PSDSystem.from_matrices(rank_one_identity(rng, d, m))
    res = partition_search(S, r)
    want, omega = brute_force(S, r)
    assert res.objective == pytest.approx(want, abs=1e-12)
    assert res.best.omega == omega
    assert res.objective <= partition_bound(r, S.norm_bound) + 1e-9
    # relabeling blocks leaves the optimum unchanged
    perm = rng.permutation(r)
    assert objective(S, [perm[w] for w in res.best.omega], r) == pytest.approx(res.objective)


def test_exhaustive_is_schedule_independent():
    rng = np.random.default_rng(3)
    S = PSDSystem.from_matrices(rank_one_identity(rng, 3, 8))
    runs = [partition_search(S, 3, workers=w) for w in (1, 2, 8)]
    assert len({r.best.omega for r in runs}) == 1
    assert len({r.objective for r in runs}) == 1


def test_local_search_is_seeded_and_honest():
    rng = np.random.default_rng(4)
    S = PSDSystem.from_matrices(rank_one_identity(rng, 3, 10))
    a = partition_search(S, 2, strategy=LOCAL, seed=7)
    b = partition_search(S, 2, strategy=LOCAL, seed=7)
    assert a.best == b.best and a.objective == b.objective
    assert a.certified == (a.objective <= a.bound + 1e-9)
    assert a.strategy == LOCAL
    assert partition_search(S, 2, strategy=EXHAUSTIVE).objective <= a.objective + 1e-12


def test_general_psd_base_is_allowed():
    rng = np.random.default_rng(5)
    S = PSDSystem.from_matrices(psd_identity(rng, 2, 4))
    res = partition_search(S, 2)
    assert res.objective == pytest.approx(brute_force(S, 2)[0])
    assert res.objective <= res.bound
