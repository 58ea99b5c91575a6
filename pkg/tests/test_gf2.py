import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from teebound import gf2


def brute_rank(m: np.ndarray) -> int:
    """Rank as log2 of the size of the row span, by enumeration."""
    rows = [tuple(r) for r in m]
    span = {tuple(np.zeros(m.shape[1], dtype=np.uint8))}
    for r in rows:
        span |= {tuple(np.bitwise_xor(np.array(s, dtype=np.uint8), np.array(r, dtype=np.uint8))) for s in span}
    return int(np.log2(len(span)))


matrices = st.tuples(st.integers(1, 7), st.integers(1, 70), st.integers(0, 2**32 - 1)).map(
    lambda t: np.random.default_rng(t[2]).integers(0, 2, size=(t[0], t[1]), dtype=np.uint8)
)


@given(matrices)
@settings(max_examples=60, deadline=None)
def test_rank_matches_enumeration(m):
    assert gf2.rank(m) == brute_rank(m)


@given(matrices)
@settings(max_examples=40, deadline=None)
def test_pack_roundtrip(m):
    assert np.array_equal(gf2.unpack(gf2.pack(m), m.shape[1]), m)


@given(matrices)
@settings(max_examples=40, deadline=None)
def test_left_kernel_annihilates(m):
    k = gf2.left_kernel(m)
    assert len(k) == m.shape[0] - gf2.rank(m)
    if len(k):
        assert not np.any((k.astype(int) @ m) % 2)
        assert gf2.rank(k) == len(k)


@given(matrices)
@settings(max_examples=40, deadline=None)
def test_solve_left_in_and_out_of_span(m):
    rng = np.random.default_rng(m.size)
    c = rng.integers(0, 2, size=m.shape[0])
    target = (c @ m) % 2
    sol = gf2.solve_left(m, target)
    assert sol is not None and np.array_equal((sol.astype(int) @ m) % 2, target)
    if gf2.rank(m) < m.shape[1]:
        # some unit vector must fall outside the span
        outside = [e for e in np.eye(m.shape[1], dtype=np.uint8)
                   if gf2.rank(np.vstack([m, e])) > gf2.rank(m)]
        assert gf2.solve_left(m, outside[0]) is None


def test_row_reduce_pivots():
    m = np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]], dtype=np.uint8)
    rref, piv = gf2.row_reduce(m)
    assert piv == [0, 1]
    assert gf2.same_row_space(rref, m)


@pytest.mark.parametrize("n", [1, 63, 64, 65, 130])
def test_identity_rank(n):
    assert gf2.rank(np.eye(n, dtype=np.uint8)) == n


def test_same_row_space_detects_difference():
    a = np.array([[1, 0, 0], [0, 1, 0]], dtype=np.uint8)
    b = np.array([[1, 1, 0], [0, 1, 0]], dtype=np.uint8)
    c = np.array([[1, 0, 1], [0, 1, 0]], dtype=np.uint8)
    assert gf2.same_row_space(a, b)
    assert not gf2.same_row_space(a, c)


def test_all_small_matrices_exhaustive():
    for bits in itertools.product([0, 1], repeat=6):
        m = np.array(bits, dtype=np.uint8).reshape(2, 3)
        assert gf2.rank(m) == brute_rank(m)
