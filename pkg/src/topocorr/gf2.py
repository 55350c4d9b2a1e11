"""Bit-packed GF(2) linear algebra.

Rows are Python ints used as bit sets (bit j = column j), which keeps
Gaussian elimination exact and fast for the matrix sizes produced by
stabilizer tableaux (a few hundred columns).
"""

from __future__ import annotations

from typing import List, Sequence, Tuple


def rank(rows: Sequence[int]) -> int:
    """Rank over GF(2) of the span of ``rows``."""
    basis: List[int] = []
    for row in rows:
        row = _reduce(row, basis)
        if row:
            basis.append(row)
    return len(basis)


def _reduce(row: int, basis: List[int]) -> int:
    for b in basis:
        if row & (b & -b):  # shares the pivot bit of b
            row ^= b
    return row


def row_echelon(rows: Sequence[int]) -> List[int]:
    """Reduced basis (lowest set bit of each row is a unique pivot)."""
    basis: List[int] = []
    for row in rows:
        row = _reduce(row, basis)
        if row:
            basis.append(row)
            # keep earlier rows reduced against the new pivot
            pivot = row & -row
            for i in range(len(basis) - 1):
                if basis[i] & pivot:
                    basis[i] ^= row
    return basis


def in_rowspan(vec: int, rows: Sequence[int]) -> bool:
    basis = row_echelon(rows)
    return _reduce(vec, basis) == 0


def kernel_basis(rows: Sequence[int], n_cols: int) -> List[int]:
    """Basis of {x : sum_i x_i * rows[i] = 0 over GF(2)}.

    ``x`` is returned as a bit set over the row indices.  Computed by
    eliminating the augmented rows ``rows[i] | (1 << (n_cols + i))`` and
    collecting combinations whose data part vanished.
    """
    tagged = [rows[i] | (1 << (n_cols + i)) for i in range(len(rows))]
    data_mask = (1 << n_cols) - 1
    basis: List[int] = []
    kernel: List[int] = []
    for row in tagged:
        for b in basis:
            low = b & data_mask
            if low and (row & (low & -low)):
                row ^= b
        if row & data_mask:
            basis.append(row)
        else:
            kernel.append(row >> n_cols)
    return kernel


def solve(rows: Sequence[int], n_cols: int, target: int) -> Tuple[bool, int]:
    """Express ``target`` as a GF(2) combination of ``rows``.

    Returns ``(ok, coeffs)`` where ``coeffs`` is a bit set over row indices.
    """
    tagged = [rows[i] | (1 << (n_cols + i)) for i in range(len(rows))]
    data_mask = (1 << n_cols) - 1
    basis: List[int] = []
    for row in tagged:
        for b in basis:
            low = b & data_mask
            if low and (row & (low & -low)):
                row ^= b
        if row & data_mask:
            basis.append(row)
    acc = target
    coeffs = 0
    for b in basis:
        low = b & data_mask
        if acc & (low & -low):
            acc ^= low
            coeffs ^= b >> n_cols
    return acc == 0, coeffs


def popcount(x: int) -> int:
    return x.bit_count()
