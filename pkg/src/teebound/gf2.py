"""Bit-packed GF(2) linear algebra on rows of 64-bit words."""

from __future__ import annotations

import numpy as np

_ONE = np.uint64(1)


def pack(bits: np.ndarray) -> np.ndarray:
    """Pack a (rows, cols) 0/1 array into (rows, ceil(cols/64)) uint64 words.

    Column ``j`` lives in word ``j // 64`` at bit ``j % 64``.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim == 1:
        bits = bits[None, :]
    rows, cols = bits.shape
    n_words = max(1, (cols + 63) // 64)
    padded = np.zeros((rows, n_words * 64), dtype=np.uint8)
    padded[:, :cols] = bits
    as_bytes = np.packbits(padded, axis=1, bitorder="little")
    return as_bytes.view("<u8").reshape(rows, n_words).astype(np.uint64, copy=False)


def unpack(words: np.ndarray, cols: int) -> np.ndarray:
    words = np.ascontiguousarray(words, dtype="<u8")
    if words.shape[0] == 0:
        return np.zeros((0, cols), dtype=np.uint8)
    as_bytes = words.view(np.uint8).reshape(words.shape[0], -1)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :cols]


def _bit(words: np.ndarray, col: int) -> np.ndarray:
    w, b = divmod(col, 64)
    return (words[:, w] >> np.uint64(b)) & _ONE


def rank(bits: np.ndarray) -> int:
    """Rank over GF(2) of a 0/1 matrix (unpacked)."""
    bits = np.asarray(bits)
    if bits.size == 0:
        return 0
    return rank_packed(pack(bits), bits.shape[1])


def rank_packed(words: np.ndarray, cols: int) -> int:
    work = words.copy()
    n_rows = work.shape[0]
    r = 0
    for col in range(cols):
        if r == n_rows:
            break
        hits = np.flatnonzero(_bit(work[r:], col)) + r
        if hits.size == 0:
            continue
        p = hits[0]
        if p != r:
            work[[r, p]] = work[[p, r]]
        below = np.flatnonzero(_bit(work[r + 1:], col)) + r + 1
        if below.size:
            work[below] ^= work[r]
        r += 1
    return r


def row_reduce(bits: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2); returns (rref bits, pivot columns)."""
    bits = np.asarray(bits, dtype=np.uint8)
    cols = bits.shape[1]
    work = pack(bits)
    pivots: list[int] = []
    r = 0
    for col in range(cols):
        if r == work.shape[0]:
            break
        column = _bit(work, col)
        cand = np.flatnonzero(column[r:]) + r
        if cand.size == 0:
            continue
        p = cand[0]
        if p != r:
            work[[r, p]] = work[[p, r]]
            column = _bit(work, col)
        others = np.flatnonzero(column)
        others = others[others != r]
        if others.size:
            work[others] ^= work[r]
        pivots.append(col)
        r += 1
    return unpack(work, cols), pivots


def left_kernel(bits: np.ndarray) -> np.ndarray:
    """Basis (as rows) of {c : c @ M = 0 mod 2} for a (rows, cols) matrix M."""
    bits = np.asarray(bits, dtype=np.uint8)
    n_rows, cols = bits.shape
    aug = np.concatenate([bits, np.eye(n_rows, dtype=np.uint8)], axis=1)
    work = pack(aug)
    r = 0
    for col in range(cols):
        if r == n_rows:
            break
        column = _bit(work, col)
        cand = np.flatnonzero(column[r:]) + r
        if cand.size == 0:
            continue
        p = cand[0]
        if p != r:
            work[[r, p]] = work[[p, r]]
            column = _bit(work, col)
        below = np.flatnonzero(column[r + 1:]) + r + 1
        if below.size:
            work[below] ^= work[r]
        r += 1
    return unpack(work[r:], cols + n_rows)[:, cols:]


def solve_left(bits: np.ndarray, target: np.ndarray) -> np.ndarray | None:
    """Find c with c @ M = target (mod 2), or None if target is outside the row space."""
    bits = np.asarray(bits, dtype=np.uint8)
    target = np.asarray(target, dtype=np.uint8).reshape(1, -1)
    stacked = np.concatenate([bits, target], axis=0)
    kernel = left_kernel(stacked)
    hits = np.flatnonzero(kernel[:, -1])
    if hits.size == 0:
        return None
    return kernel[hits[0], :-1].copy()


def same_row_space(a: np.ndarray, b: np.ndarray) -> bool:
    ra, rb = rank(a), rank(b)
    return ra == rb == rank(np.concatenate([a, b], axis=0))
