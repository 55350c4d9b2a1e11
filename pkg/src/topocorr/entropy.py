"""Entropies, correlation measures, distances, and spectral grouping.

Everything is in nats; divide by ln 2 for bits.  Eigenvalues below
EIG_CUTOFF (relative to the largest) are treated as exact zeros under the
0 log 0 = 0 convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import OverlappingRegions, SupportMismatch
from .states import DensityMatrix, EIG_CUTOFF, partial_trace

LN2 = math.log(2.0)

GROUP_REL_TOL = 1e-9  # default degeneracy-grouping tolerance


def shannon(probs: Iterable[float]) -> float:
    """Shannon entropy in nats with the same cutoff convention."""
    p = np.asarray(list(probs), dtype=float)
    top = p.max(initial=0.0)
    if top <= 0.0:
        return 0.0
    keep = p > EIG_CUTOFF * top
    q = p[keep]
    return float(-np.sum(q * np.log(q)))


def eta(x: float) -> float:
    """-x ln x, clamped to 0 below the cutoff."""
    if x <= EIG_CUTOFF:
        return 0.0
    return -x * math.log(x)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    return shannon(rho.eigenvalues)


def _log_psd(evals: np.ndarray, evecs: np.ndarray) -> np.ndarray:
    """log on the support; kernel eigenvalues are left at 0 in the log."""
    top = evals.max(initial=0.0)
    cut = EIG_CUTOFF * max(top, 1.0)
    logs = np.where(evals > cut, np.log(np.maximum(evals, cut)), 0.0)
    return (evecs * logs) @ evecs.conj().T


def matrix_log(rho: DensityMatrix) -> np.ndarray:
    return _log_psd(rho.eigenvalues, rho.eigenvectors)


def log_eps(mat: np.ndarray, eps: float) -> np.ndarray:
    """log with zero eigenvalues replaced by ``eps`` (Hermitian input)."""
    evals, evecs = np.linalg.eigh(mat)
    clamped = np.maximum(evals, eps)
    return (evecs * np.log(clamped)) @ evecs.conj().T


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """S(rho || sigma) = tr rho log rho - tr rho log sigma, nats.

    Raises SupportMismatch when rho leaks outside sigma's support (the
    divergence is +inf there).
    """
    if rho.layout != sigma.layout:
        raise OverlappingRegions("relative entropy needs identical layouts")
    sv, su = sigma.eigenvalues, sigma.eigenvectors
    cut = EIG_CUTOFF * max(sv.max(initial=0.0), 1.0)
    kernel = sv <= cut
    if kernel.any():
        k = su[:, kernel]
        leak = float(np.real(np.trace(k.conj().T @ rho.data @ k)))
        if leak > 1e-10:
            raise SupportMismatch(f"support leak {leak:.3e}")
    term1 = float(np.real(np.trace(rho.data @ matrix_log(rho))))
    term2 = float(np.real(np.trace(rho.data @ _log_psd(sv, su))))
    return term1 - term2


def mutual_information(rho: DensityMatrix, A: Sequence[str], B: Sequence[str]) -> float:
    A, B = list(A), list(B)
    if set(A) & set(B):
        raise OverlappingRegions("A and B overlap")
    s = lambda labs: von_neumann_entropy(partial_trace(rho, labs))
    return s(A) + s(B) - s(A + B)


def conditional_mutual_information(rho: DensityMatrix, A: Sequence[str],
                                   B: Sequence[str], C: Sequence[str]) -> float:
    """I(A:C|B) = S(AB) + S(BC) - S(B) - S(ABC); >= 0 by strong subadditivity."""
    A, B, C = list(A), list(B), list(C)
    sets = [set(A), set(B), set(C)]
    if sets[0] & sets[1] or sets[1] & sets[2] or sets[0] & sets[2]:
        raise OverlappingRegions("A, B, C must be disjoint")
    s = lambda labs: von_neumann_entropy(partial_trace(rho, labs))
    return s(A + B) + s(B + C) - s(B) - s(A + B + C)


def total_correlation(rho: DensityMatrix, parts: Sequence[Sequence[str]]) -> float:
    """sum_i S(rho_i) - S(rho) over a partition of the layout."""
    flat = [lab for part in parts for lab in part]
    if sorted(flat) != sorted(rho.layout.labels):
        raise OverlappingRegions("parts must partition the layout")
    s = von_neumann_entropy
    return sum(s(partial_trace(rho, part)) for part in parts) - s(rho)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Unnormalized trace norm ||a - b||_1 in [0, 2]."""
    if a.layout != b.layout:
        raise OverlappingRegions("trace distance needs identical layouts")
    return trace_norm(a.data - b.data)


def trace_norm(m: np.ndarray) -> float:
    evals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(np.sum(np.abs(evals)))


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """F(a, b) = tr sqrt(sqrt(a) b sqrt(a)), in [0, 1]."""
    if a.layout != b.layout:
        raise OverlappingRegions("fidelity needs identical layouts")
    ev, eu = a.eigenvalues, a.eigenvectors
    sq = (eu * np.sqrt(np.clip(ev, 0.0, None))) @ eu.conj().T
    inner = sq @ b.data @ sq
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(vals, 0.0, None))))


# ----------------------------------------------------------------------
# grouped spectral decomposition

@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues grouped into (near-)degenerate eigenspaces.

    ``eigenvalues`` are the distinct values in descending order,
    ``projectors`` the matching orthogonal projectors, ``degeneracies``
    their ranks, ``distinct_count`` the number of groups.
    """

    eigenvalues: Tuple[float, ...]
    projectors: Tuple[np.ndarray, ...]
    degeneracies: Tuple[int, ...]
    distinct_count: int

    def isometries(self) -> List[np.ndarray]:
        """Column isometries onto each eigenspace (from the projectors)."""
        out = []
        for p, d in zip(self.projectors, self.degeneracies):
            vals, vecs = np.linalg.eigh(p)
            out.append(vecs[:, vals > 0.5][:, :d])
        return out


def spectral(mat, rel_tol: float = GROUP_REL_TOL) -> Spectrum:
    """Group eigenvalues whose spacing is within rel_tol * lambda_max.

    Accepts a DensityMatrix or a raw Hermitian ndarray.  Grouping is by
    chaining adjacent gaps, so exactly-flat toric spectra always merge.
    """
    if isinstance(mat, DensityMatrix):
        evals, evecs = mat.eigenvalues, mat.eigenvectors
    else:
        evals, evecs = np.linalg.eigh(np.asarray(mat))
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    scale = max(abs(evals[0]), abs(evals[-1]), 1e-300)
    groups: List[List[int]] = [[0]]
    for i in range(1, len(evals)):
        if abs(evals[i - 1] - evals[i]) <= rel_tol * scale:
            groups[-1].append(i)
        else:
            groups.append([i])
    values, projs, degs = [], [], []
    for g in groups:
        vecs = evecs[:, g]
        projs.append(vecs @ vecs.conj().T)
        degs.append(len(g))
        values.append(float(np.mean(evals[g])))
    return Spectrum(tuple(values), tuple(projs), tuple(degs), len(groups))
