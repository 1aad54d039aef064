"""Exact combinatorial matrix kernels: hafnian, loop hafnian, permanent.

The hafnian of a symmetric 2m x 2m matrix is the sum over perfect matchings
of products of matched entries; the loop variant additionally allows indices
to match themselves with the diagonal entry as weight.  Both are computed by
an inclusion-exclusion over index pairs with power traces of the pair-swapped
submatrix supplying the matching polynomial, which costs O(2^(n/2) n^3).
Brute-force enumeration of matchings is kept alongside as the reference
oracle for small dimensions.

All functions are pure; the subset loop of the hafnian is evaluated in
independent chunks (optionally on a thread pool) and the per-subset terms are
combined with a fixed pairwise tree reduction, so results are reproducible
bit-for-bit regardless of worker count.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import (
    DimensionTooLargeError,
    NonSquareError,
    NonSymmetricError,
    OddDimensionWarning,
)

SYMMETRY_ATOL = 1e-12

__all__ = [
    "hafnian",
    "loop_hafnian",
    "permanent",
    "brute_force_matching_sum",
    "pairwise_sum",
]


def _as_square(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSquareError(f"expected a square matrix, got shape {m.shape}")
    return m


def _check_symmetric(m: np.ndarray) -> None:
    if m.size == 0:
        return
    asym = np.max(np.abs(m - m.T))
    if asym > SYMMETRY_ATOL:
        raise NonSymmetricError(
            f"matrix asymmetry {asym:.3e} exceeds tolerance {SYMMETRY_ATOL:.0e}"
        )


def pairwise_sum(values: np.ndarray) -> complex:
    """Sum with a fixed pairwise tree, independent of chunked evaluation."""
    vals = np.asarray(values, dtype=np.complex128)
    if vals.size == 0:
        return 0.0 + 0.0j
    while vals.size > 1:
        half = vals.size // 2
        head = vals[: 2 * half : 2] + vals[1 : 2 * half : 2]
        if vals.size % 2:
            head = np.concatenate([head, vals[-1:]])
        vals = head
    return complex(vals[0])


def _poly_exp(coeffs: np.ndarray, order: int) -> np.ndarray:
    """Coefficients of exp(p(x)) mod x^(order+1) for p with p[0] == 0."""
    out = np.zeros(order + 1, dtype=np.complex128)
    out[0] = 1.0
    term = np.zeros(order + 1, dtype=np.complex128)
    term[0] = 1.0
    for j in range(1, order + 1):
        nxt = np.zeros(order + 1, dtype=np.complex128)
        for a in range(order + 1):
            if term[a] == 0:
                continue
            upper = order - a
            nxt[a + 1 : a + 1 + upper] += term[a] * coeffs[1 : 1 + upper]
        term = nxt / j
        out += term
    return out


def _subset_term(a: np.ndarray, diag: np.ndarray | None, subset: int, m_pairs: int) -> complex:
    """One inclusion-exclusion term of the pair-subset hafnian formula."""
    pairs = [i for i in range(m_pairs) if (subset >> i) & 1]
    if not pairs:
        return 1.0 + 0.0j if m_pairs == 0 else 0.0 + 0.0j
    idx = np.array([j for i in pairs for j in (2 * i, 2 * i + 1)])
    sub = a[np.ix_(idx, idx)]
    swap = np.arange(sub.shape[0]).reshape(-1, 2)[:, ::-1].ravel()
    b = sub[swap, :]  # X @ A_S with X the pair-swap matrix

    powers = np.zeros(m_pairs + 1, dtype=np.complex128)
    if diag is not None:
        d = diag[idx]
        v = d[swap]  # B^0 (X d)
    cur = b
    for k in range(1, m_pairs + 1):
        powers[k] = np.trace(cur) / (2 * k)
        if diag is not None:
            # loop (mean) contribution: 0.5 * d^T B^(k-1) X d
            powers[k] += 0.5 * (d @ v)
            v = b @ v
        if k < m_pairs:
            cur = cur @ b
    sign = 1.0 if ((m_pairs - len(pairs)) % 2 == 0) else -1.0
    return sign * _poly_exp(powers, m_pairs)[m_pairs]


def _matching_sum(a: np.ndarray, diag: np.ndarray | None, workers: int) -> complex:
    n = a.shape[0]
    m_pairs = n // 2
    n_subsets = 1 << m_pairs
    terms = np.empty(n_subsets, dtype=np.complex128)

    def fill(lo: int, hi: int) -> None:
        for s in range(lo, hi):
            terms[s] = _subset_term(a, diag, s, m_pairs)

    if workers > 1 and n_subsets >= 64:
        chunk = (n_subsets + workers - 1) // workers
        bounds = [(i, min(i + chunk, n_subsets)) for i in range(0, n_subsets, chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda b: fill(*b), bounds))
    else:
        fill(0, n_subsets)
    return pairwise_sum(terms)


def hafnian(matrix, workers: int = 1) -> complex:
    """Hafnian of a symmetric complex matrix.

    Parameters
    ----------
    matrix : array_like
        Symmetric (n x n) matrix; symmetry is checked to 1e-12 absolute.
    workers : int
        Number of threads over which the 2^(n/2) subset terms may be
        evaluated.  The reduction order is fixed, so the result does not
        depend on this value.

    Returns
    -------
    complex
        Sum over perfect matchings.  Odd-dimension input returns 0 with an
        :class:`OddDimensionWarning` (there are no perfect matchings).
    """
    m = _as_square(matrix)
    _check_symmetric(m)
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n % 2:
        warnings.warn("hafnian of an odd-dimension matrix is 0", OddDimensionWarning)
        return 0.0 + 0.0j
    return _matching_sum(m, None, workers)


def loop_hafnian(matrix, workers: int = 1) -> complex:
    """Loop hafnian: perfect matchings with self-loops weighted by the diagonal.

    Defined for any dimension; odd dimensions are reduced to even ones by
    appending an index that can only take a unit-weight self-loop.
    """
    m = _as_square(matrix)
    _check_symmetric(m)
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n % 2:
        padded = np.zeros((n + 1, n + 1), dtype=np.complex128)
        padded[:n, :n] = m
        padded[n, n] = 1.0
        m = padded
        n += 1
    diag = np.diag(m).copy()
    off = m.copy()
    np.fill_diagonal(off, 0.0)
    return _matching_sum(off, diag, workers)


def permanent(matrix) -> complex:
    """Permanent via Ryser's inclusion-exclusion with Gray-code updates."""
    m = _as_square(matrix)
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    row_sums = np.zeros(n, dtype=np.complex128)
    total = 0.0 + 0.0j
    sign = -1.0 if n % 2 else 1.0
    gray = 0
    for k in range(1, 1 << n):
        bit = (k & -k).bit_length() - 1
        gray ^= 1 << bit
        if gray & (1 << bit):
            row_sums += m[:, bit]
        else:
            row_sums -= m[:, bit]
        parity = -1.0 if (gray.bit_count() % 2) else 1.0
        total += parity * np.prod(row_sums)
    return sign * total


def brute_force_matching_sum(matrix, loops: bool = False) -> complex:
    """Direct enumeration of (loop-)perfect matchings; the test oracle.

    Refuses dimensions above 12, where enumeration stops being instant.
    """
    m = _as_square(matrix)
    n = m.shape[0]
    if n > 12:
        raise DimensionTooLargeError(f"dimension {n} exceeds the enumeration guard (12)")
    _check_symmetric(m)

    def recurse(remaining: tuple[int, ...]) -> complex:
        if not remaining:
            return 1.0 + 0.0j
        i, rest = remaining[0], remaining[1:]
        acc = 0.0 + 0.0j
        if loops:
            acc += m[i, i] * recurse(rest)
        for pos, j in enumerate(rest):
            acc += m[i, j] * recurse(rest[:pos] + rest[pos + 1 :])
        return acc

    return recurse(tuple(range(n)))
