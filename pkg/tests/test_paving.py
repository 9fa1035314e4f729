import math

import numpy as np
import pytest

from randsys import contraction, projection, zero_diag_general, zero_diag_hermitian
from interlace.errors import (
    BadEpsilon,
    BadPartition,
    NonzeroDiagonal,
    NotContraction,
    NotProjection,
    NotSelfAdjoint,
)
from interlace.linalg import spectral_norm
from interlace.paving import (
    choose_r,
    compression_norm,
    dilate,
    pave_general,
    pave_projection,
    pave_selfadjoint,
    r_criterion,
    sandwich_margin,
    verify_paving,
)
from interlace.partition import LOCAL

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def assert_partition(blocks, m):
    assert sorted(i for b in blocks for i in b) == list(range(m))


def test_pave_projection_examples():
    res = pave_projection(0.5 * np.ones((2, 2)), 2)
    assert [b for b in res.blocks if b] == [[0], [1]]
    assert res.norms == pytest.approx([0.5, 0.5])
    assert res.bound == pytest.approx(2.0) and res.certified
    for r in (1, 2, 3):
        res = pave_projection(np.eye(4), r)
        assert all(v == pytest.approx(1) for b, v in zip(res.blocks, res.norms) if b)
        assert res.bound == pytest.approx((1 / math.sqrt(r) + 1) ** 2)
    res = pave_projection(np.zeros((3, 3)), 2)
    assert res.norms == [0.0, 0.0] and res.certified
    with pytest.raises(NotProjection):
        pave_projection(np.ones((2, 2)), 2)


def test_dilation_examples():
    P = dilate(SWAP).P
    half = 0.5 * np.ones((2, 2))
    want = np.block([[half, np.zeros((2, 2))], [np.zeros((2, 2)), 0.5 * np.array([[1, -1], [-1, 1]])]])
    assert np.allclose(P, want)
    assert np.allclose(P @ P, P)
    assert np.allclose(dilate(np.zeros((2, 2))).P, 0.5 * np.ones((4, 4)) * np.kron(np.ones((2, 2)), np.eye(2)))
    assert np.allclose(dilate(np.eye(3)).P, np.diag([1, 1, 1, 0, 0, 0]))
    with pytest.raises(NotSelfAdjoint):
        dilate([[0, 1], [0, 0]])
    with pytest.raises(NotContraction):
        dilate(2 * SWAP)


def test_dilation_invariants():
    rng = np.random.default_rng(0)
    for _ in range(500):
        d = int(rng.integers(1, 9))
        T = contraction(rng, d)
        T = T - np.diag(np.diag(T))
        T = T / max(1.0, spectral_norm(T))
        P = dilate(T).P
        assert np.max(np.abs(P @ P - P)) <= 1e-8
        assert np.max(np.abs(np.diag(P) - 0.5)) <= 1e-10


def test_dilation_diagonal_tracks_t():
    rng = np.random.default_rng(6)
    for _ in range(100):
        T = contraction(rng, int(rng.integers(1, 9)))
        P = dilate(T).P
        m = T.shape[0]
        assert np.max(np.abs(P @ P - P)) <= 1e-8
        assert np.allclose(np.diag(P)[:m], (1 + np.diag(T)) / 2, atol=1e-10)
        assert np.allclose(np.diag(P)[m:], (1 - np.diag(T)) / 2, atol=1e-10)


def test_choose_r_examples():
    assert choose_r(1.0) == 12 and choose_r(0.5) == 40 and choose_r(3.0) == 2
    for eps in (1.0, 0.5, 3.0, 0.99, 0.3):
        r = choose_r(eps)
        assert r_criterion(r) <= eps + 1e-12
        assert r == 1 or r_criterion(r - 1) > eps
    assert r_criterion(11) == pytest.approx(1.0346, abs=1e-4)
    assert r_criterion(12) == pytest.approx(0.9832, abs=1e-4)
    with pytest.raises(BadEpsilon):
        choose_r(0.0)


def test_pave_selfadjoint_examples():
    res = pave_selfadjoint(SWAP, 0.99)
    assert res.r == 12 and len(res.blocks) == 144
    assert res.certified and res.max_norm == 0.0
    assert_partition(res.blocks, 2)
    assert all(len(b) <= 1 for b in res.blocks)
    res = pave_selfadjoint(np.zeros((3, 3)), 0.99)
    assert res.certified and res.max_norm == 0.0


def test_pave_selfadjoint_nonzero_diagonal_is_recorded():
    # a 1x1 block of diag(1, 0.5) already has norm 1 > 0.99 ||T||; the
    # result must say so instead of claiming a certificate
    res = pave_selfadjoint(np.diag([1.0, 0.5]), 0.99)
    assert_partition(res.blocks, 2)
    assert not res.certified and res.status == "bound_not_certified"
    assert res.details["projection_status"] in ("certified", "bound_not_certified")


def test_pave_selfadjoint_sandwich():
    rng = np.random.default_rng(1)
    for _ in range(20):
        m = int(rng.integers(2, 4))
        T = zero_diag_hermitian(rng, m)
        res = pave_selfadjoint(T, 0.99)
        assert res.certified
        for b in res.blocks:
            assert sandwich_margin(T, b, 0.99) >= -1e-9


def test_pave_general_examples():
    T = np.array([[0, 1j], [-1j, 0]])
    res = pave_general(T, 0.99)
    assert res.certified and res.max_norm == 0.0
    T = np.array([[0, 1 + 1j], [0, 0]]) / abs(1 + 1j)
    res = pave_general(T, 0.99)
    assert res.certified and res.max_norm == 0.0
    assert pave_general(np.zeros((3, 3)), 0.99).certified
    with pytest.raises(NonzeroDiagonal):
        pave_general(np.eye(2), 0.99)


def test_pave_general_random():
    rng = np.random.default_rng(2)
    for _ in range(3):
        T = zero_diag_general(rng, 3)
        res = pave_general(T, 0.99)
        assert_partition(res.blocks, 3)
        rep = verify_paving(T, res.blocks, 0.99)
        assert rep.holds == res.certified
        assert rep.max_ratio <= 0.99 + 1e-9


def test_verify_paving_examples():
    T = SWAP
    rep = verify_paving(T, [[0, 1]], 2.0)
    assert rep.max_ratio == pytest.approx(1.0) and rep.holds
    with pytest.raises(BadPartition):
        verify_paving(T, [[0, 1], [1]], 2.0)
    with pytest.raises(BadPartition):
        verify_paving(T, [[0]], 2.0)


def test_projection_paving_bound_sweep():
    rng = np.random.default_rng(3)
    for _ in range(200):
        d = int(rng.integers(1, 9))
        rank = int(rng.integers(1, min(d, 4) + 1))
        r = int(rng.integers(2, 4))
        P = projection(rng, d, rank)
        res = pave_projection(P, r, strategy="exhaustive")
        assert_partition(res.blocks, d)
        diag = float(np.max(np.abs(np.diag(P))))
        bound = (1 / math.sqrt(r) + math.sqrt(diag)) ** 2
        for b in res.blocks:
            assert compression_norm(P, b) <= bound + 1e-9


def test_local_paving_reports_status():
    rng = np.random.default_rng(4)
    T = zero_diag_hermitian(rng, 6)
    res = pave_selfadjoint(T, 0.99, strategy=LOCAL, seed=3)
    assert_partition(res.blocks, 6)
    assert res.certified == (res.max_norm <= 0.99 * spectral_norm(T) + 1e-9)
    again = pave_selfadjoint(T, 0.99, strategy=LOCAL, seed=3)
    assert again.blocks == res.blocks
