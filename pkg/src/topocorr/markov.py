"""Quantum Markov states: detection, block decomposition, Petz recovery.

The block decomposition splits the conditioning system B into a direct sum
of left/right tensor factors such that the state is a weighted direct sum
of products across them.  It is computed from the *-algebra generated by
the A-conditional operators on B, closed under products and under
commutation with log(rho_B); the closure under the modular generator is
what keeps the detected blocks compatible with rho_B itself.  Every
decomposition is validated by reassembling the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .entropy import conditional_mutual_information, trace_distance, trace_norm
from .errors import (DecompositionFailed, InconsistentMarginal, NotMarkov,
                     UnknownSubsystem)
from .layout import FactorLayout, partial_trace_matrix, permute_matrix
from .states import DensityMatrix, EIG_CUTOFF, partial_trace

SPAN_TOL = 1e-9
GAP_TOL = 1e-7
RECONSTRUCT_TOL = 1e-7


# ----------------------------------------------------------------------
# channels

@dataclass
class RecoveryMap:
    """CPTP map from ``in_labels`` to ``out_sites`` in Kraus form."""

    in_labels: Tuple[str, ...]
    in_dims: Tuple[int, ...]
    out_sites: Tuple[Tuple[str, int], ...]
    kraus: Tuple[np.ndarray, ...]
    _choi: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def in_dim(self) -> int:
        return math.prod(self.in_dims)

    @property
    def out_dim(self) -> int:
        return math.prod(d for _, d in self.out_sites)

    def choi(self) -> np.ndarray:
        """J = sum_ij |i><j| (x) Lambda(|i><j|), cached."""
        if self._choi is None:
            d_in, d_out = self.in_dim, self.out_dim
            j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
            for k in self.kraus:
                vec = k.T.reshape(-1, 1)  # |i> (x) K|i>, stacked
                j += vec @ vec.conj().T
            self._choi = j
        return self._choi

    def is_trace_preserving(self, tol: float = 1e-9) -> bool:
        acc = sum(k.conj().T @ k for k in self.kraus)
        return bool(np.max(np.abs(acc - np.eye(self.in_dim))) <= tol)

    def is_completely_positive(self, tol: float = 1e-9) -> bool:
        return bool(np.linalg.eigvalsh(self.choi())[0] >= -tol)

    def apply_matrix(self, mat: np.ndarray) -> np.ndarray:
        return sum(k @ mat @ k.conj().T for k in self.kraus)


def apply_channel(rho: DensityMatrix, kraus: Sequence[np.ndarray],
                  in_labels: Sequence[str],
                  out_sites: Sequence[Tuple[str, int]]) -> DensityMatrix:
    """Apply a channel on ``in_labels``; outputs replace them at the end.

    The result carries the untouched labels (layout order) followed by
    ``out_sites``.
    """
    in_labels = list(in_labels)
    missing = [lab for lab in in_labels if lab not in rho.layout.labels]
    if missing:
        raise UnknownSubsystem(f"labels {missing} not in state")
    rest = [lab for lab in rho.layout.labels if lab not in set(in_labels)]
    work = permute_matrix(rho.data, rho.layout, rest + in_labels)
    d_rest = math.prod(rho.layout.dims[rho.layout.position(l)] for l in rest)
    d_in = math.prod(rho.layout.dims[rho.layout.position(l)] for l in in_labels)
    d_out = math.prod(d for _, d in out_sites)
    t = work.reshape(d_rest, d_in, d_rest, d_in)
    out = np.zeros((d_rest, d_out, d_rest, d_out), dtype=complex)
    for k in kraus:
        out += np.einsum("oi,aibj,pj->aobp", k, t, k.conj(), optimize=True)
    sites = [(lab, rho.layout.dims[rho.layout.position(lab)]) for lab in rest]
    layout = FactorLayout.of(sites + list(out_sites))
    return DensityMatrix(layout, out.reshape(d_rest * d_out, d_rest * d_out))


# ----------------------------------------------------------------------
# Petz recovery

def petz_recovery(rho_BC: DensityMatrix, rho_B: DensityMatrix,
                  b_labels: Optional[Sequence[str]] = None) -> RecoveryMap:
    """Canonical recovery map rebuilding rho_BC from its B marginal.

    Lambda(X) = rho_BC^{1/2} (rho_B^{-1/2} X rho_B^{-1/2} (x) I_C) rho_BC^{1/2}
    with pseudo-inverses on the support of rho_B.  Off the support the map
    is completed with X -> tr[(1-P)X] rho_BC so it is CPTP on the whole
    input space.
    """
    b_labels = list(b_labels) if b_labels is not None else list(rho_B.layout.labels)
    if set(b_labels) != set(rho_B.layout.labels):
        raise UnknownSubsystem("b_labels must match rho_B's layout")
    marg = partial_trace(rho_BC, b_labels)
    err = trace_distance(marg.permuted(rho_B.layout.labels), rho_B)
    if err > 1e-9:
        raise InconsistentMarginal(f"rho_B differs from tr_C rho_BC by {err:.3e}")

    # order BC as (B..., C...)
    c_labels = [lab for lab in rho_BC.layout.labels if lab not in set(b_labels)]
    bc = rho_BC.permuted(b_labels + c_labels)
    d_b = rho_B.dim
    d_c = bc.dim // d_b

    ev_b, u_b = rho_B.eigenvalues, rho_B.eigenvectors
    cut = EIG_CUTOFF * max(ev_b.max(initial=0.0), 1.0)
    inv_sqrt = np.where(ev_b > cut, 1.0 / np.sqrt(np.maximum(ev_b, cut)), 0.0)
    b_inv_half = (u_b * inv_sqrt) @ u_b.conj().T

    ev_bc, u_bc = bc.eigenvalues, bc.eigenvectors
    bc_half = (u_bc * np.sqrt(np.clip(ev_bc, 0.0, None))) @ u_bc.conj().T

    kraus: List[np.ndarray] = []
    for e in range(d_c):
        emb = np.zeros((d_b * d_c, d_b), dtype=complex)
        emb[e::d_c, :] = b_inv_half  # (M (x) |e>_C) with C as the fast index
        kraus.append(bc_half @ emb)
    # completion on ker(rho_B): X -> tr[(1-P)X] rho_BC
    kernel_vecs = u_b[:, ev_b <= cut]
    if kernel_vecs.shape[1]:
        for f in range(kernel_vecs.shape[1]):
            bra = kernel_vecs[:, f].conj()
            for g in range(d_b * d_c):
                col = bc_half[:, g].reshape(-1, 1)
                kraus.append(col @ bra.reshape(1, -1))
    out_sites = tuple(bc.layout.sites)
    rm = RecoveryMap(tuple(b_labels), tuple(rho_B.layout.dims), out_sites,
                     tuple(kraus))
    if not rm.is_trace_preserving(1e-9):
        raise DecompositionFailed("recovery map failed the TP check")
    return rm


def apply_recovery(rmap: RecoveryMap, rho: DensityMatrix) -> DensityMatrix:
    """(id (x) Lambda) rho; new output labels are appended to the layout."""
    out = apply_channel(rho, rmap.kraus, rmap.in_labels, rmap.out_sites)
    original = [lab for lab in rho.layout.labels]
    new = [lab for lab, _ in rmap.out_sites if lab not in set(original)]
    return out.permuted(original + new)


# ----------------------------------------------------------------------
# QMS detection

def _contiguous_split(layout: FactorLayout, b_labels: Sequence[str]):
    labels = list(layout.labels)
    pos = sorted(layout.position(lab) for lab in b_labels)
    if pos != list(range(pos[0], pos[0] + len(pos))):
        raise UnknownSubsystem("B must be a contiguous block of the layout "
                               "(or pass A and C explicitly)")
    a = labels[:pos[0]]
    c = labels[pos[-1] + 1:]
    return a, c


def is_qms(rho: DensityMatrix, b_labels: Sequence[str], tol: float = 1e-9,
           a_labels: Optional[Sequence[str]] = None,
           c_labels: Optional[Sequence[str]] = None) -> Tuple[bool, float]:
    """Test I(A:C|B) <= tol (equivalently, strong-subadditivity saturation)."""
    if a_labels is None or c_labels is None:
        a_labels, c_labels = _contiguous_split(rho.layout, b_labels)
    cmi = conditional_mutual_information(rho, a_labels, b_labels, c_labels)
    return cmi <= tol, cmi


# ----------------------------------------------------------------------
# block decomposition

@dataclass
class MarkovBlock:
    prob: float
    iso: np.ndarray            # d_B x (dl*dr), isometry into H_B
    dl: int
    dr: int
    left: DensityMatrix        # on A (x) L
    right: DensityMatrix       # on R (x) C


@dataclass
class MarkovDecomposition:
    """rho = directsum_i p_i left_i (x) right_i through the block isometries."""

    a_sites: Tuple[Tuple[str, int], ...]
    b_sites: Tuple[Tuple[str, int], ...]
    c_sites: Tuple[Tuple[str, int], ...]
    blocks: List[MarkovBlock]

    @property
    def block_dims(self) -> List[Tuple[int, int]]:
        return [(blk.dl, blk.dr) for blk in self.blocks]

    @property
    def probs(self) -> np.ndarray:
        return np.array([blk.prob for blk in self.blocks])

    def layout(self) -> FactorLayout:
        return FactorLayout(self.a_sites + self.b_sites + self.c_sites)


def reconstruct(dec: MarkovDecomposition) -> DensityMatrix:
    """Reassemble the direct sum; result is on the (A..., B..., C...) layout."""
    d_a = math.prod(d for _, d in dec.a_sites)
    d_b = math.prod(d for _, d in dec.b_sites)
    d_c = math.prod(d for _, d in dec.c_sites)
    total = d_a * d_b * d_c
    acc = np.zeros((total, total), dtype=complex)
    for blk in dec.blocks:
        emb = np.kron(np.kron(np.eye(d_a), blk.iso), np.eye(d_c))
        prod = np.kron(blk.left.data, blk.right.data)
        acc += blk.prob * (emb @ prod @ emb.conj().T)
    return DensityMatrix(dec.layout(), acc)


def _hermitian_basis(d: int) -> List[np.ndarray]:
    basis = []
    for i in range(d):
        m = np.zeros((d, d), dtype=complex)
        m[i, i] = 1.0
        basis.append(m)
    for i in range(d):
        for j in range(i + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = m[j, i] = 1.0 / math.sqrt(2)
            basis.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = -1j / math.sqrt(2)
            m[j, i] = 1j / math.sqrt(2)
            basis.append(m)
    return basis


class _Span:
    """Orthonormal span of operators, kept as rows of vectorized matrices."""

    def __init__(self, dim: int):
        self.dim = dim
        self.rows = np.zeros((0, dim * dim), dtype=complex)

    def add(self, mats: np.ndarray) -> int:
        """Add candidates (k, d, d); returns how many were new."""
        if mats.size == 0:
            return 0
        cand = mats.reshape(len(mats), -1)
        norms = np.linalg.norm(cand, axis=1)
        cand = cand[norms > SPAN_TOL]
        added = 0
        for row in cand:
            if len(self.rows):
                row = row - (row @ self.rows.conj().T) @ self.rows
                # second pass for numerical orthogonality
                row = row - (row @ self.rows.conj().T) @ self.rows
            nrm = np.linalg.norm(row)
            if nrm > SPAN_TOL:
                self.rows = np.vstack([self.rows, row / nrm])
                added += 1
        return added

    @property
    def matrices(self) -> np.ndarray:
        return self.rows.reshape(-1, self.dim, self.dim)

    def __len__(self):
        return len(self.rows)


def _close_algebra(generators: np.ndarray, modular: np.ndarray) -> np.ndarray:
    """Close under products, adjoints, and [modular, .] until dim stabilizes."""
    d = generators.shape[1]
    span = _Span(d)
    span.add(np.eye(d)[None])
    new = list(generators) + [g.conj().T for g in generators]
    span.add(np.array(new))
    fresh = span.matrices
    while True:
        basis = span.matrices
        cands = []
        for f in fresh:
            cands.append(np.einsum("ij,ajk->aik", f, basis))
            cands.append(np.einsum("aij,jk->aik", basis, f))
            cands.append((modular @ f - f @ modular)[None])
            cands.append(f.conj().T[None])
        before = len(span)
        span.add(np.concatenate(cands, axis=0))
        if len(span) == before:
            return span.matrices
        fresh = span.matrices[before:]


def _nullspace(mat: np.ndarray, tol: float = SPAN_TOL) -> np.ndarray:
    if mat.size == 0:
        return np.eye(mat.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    rank = int(np.sum(s > tol * max(s[0], 1.0))) if len(s) else 0
    return vh[rank:].conj().T


def _center(basis: np.ndarray) -> np.ndarray:
    """Coefficient basis of the center of span(basis) (as an algebra)."""
    m, d, _ = basis.shape
    rows = []
    for b in basis:
        comm = np.einsum("aij,jk->aik", basis, b) - np.einsum("ij,ajk->aik", b, basis)
        rows.append(comm.reshape(m, d * d))
    stacked = np.concatenate(rows, axis=1)  # row k = all [b_k, b_j], stacked
    return _nullspace(stacked.T)            # columns: center coefficient vectors


def _group_eigs(evals: np.ndarray, gap: float) -> List[np.ndarray]:
    order = np.argsort(evals)
    groups = [[order[0]]]
    for idx in order[1:]:
        if evals[idx] - evals[groups[-1][-1]] <= gap:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    return [np.array(g) for g in groups]


def _random_hermitian_in(basis: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    c = rng.standard_normal(len(basis)) + 1j * rng.standard_normal(len(basis))
    m = np.tensordot(c, basis, axes=(0, 0))
    return m + m.conj().T


def _factor_block(sub_basis: np.ndarray, rng: np.random.Generator,
                  max_tries: int = 8) -> Tuple[np.ndarray, int, int]:
    """Unitary W on the block with W^dag M W = B(L) (x) I_R for all M."""
    dim = sub_basis.shape[1]
    m_dim = _algebra_dim(sub_basis)
    l = int(round(math.sqrt(m_dim)))
    if l * l != m_dim or dim % l != 0:
        raise DecompositionFailed(f"block algebra dim {m_dim} is not a square "
                                  f"compatible with block dim {dim}")
    r = dim // l
    if l == 1:
        return np.eye(dim, dtype=complex), 1, dim
    for _ in range(max_tries):
        s = _random_hermitian_in(sub_basis, rng)
        evals, evecs = np.linalg.eigh(s)
        scale = max(np.abs(evals).max(), 1.0)
        groups = _group_eigs(evals, GAP_TOL * scale)
        if len(groups) != l or any(len(g) != r for g in groups):
            continue
        q = [evecs[:, g] for g in groups]           # each dim x r
        g_rand = np.tensordot(
            rng.standard_normal(len(sub_basis)) + 1j * rng.standard_normal(len(sub_basis)),
            sub_basis, axes=(0, 0))
        cols = [q[0]]
        ok = True
        for alpha in range(1, l):
            v = q[alpha].conj().T @ g_rand @ q[0]    # r x r, should be c * unitary-ish
            # v = c_alpha * <l_a|G|l_0> acting as identity on R coordinates
            target = q[alpha] @ v                    # dim x r
            nrm = np.linalg.norm(target[:, 0])
            if nrm < 1e-8:
                ok = False
                break
            cols.append(target / np.linalg.norm(v[:, 0]))
        if not ok:
            continue
        w = np.concatenate(cols, axis=1)             # dim x (l*r), order (alpha, beta)
        if np.max(np.abs(w.conj().T @ w - np.eye(l * r))) > 1e-7:
            continue
        # verify every algebra element factorizes as L (x) I_r
        good = True
        for m in sub_basis:
            t = (w.conj().T @ m @ w).reshape(l, r, l, r)
            l_part = np.trace(t, axis1=1, axis2=3) / r
            resid = t - np.einsum("ac,bd->abcd", l_part, np.eye(r))
            if np.max(np.abs(resid)) > 1e-7:
                good = False
                break
        if good:
            return w, l, r
    raise DecompositionFailed("could not factorize a block into L (x) R")


def _algebra_dim(basis: np.ndarray) -> int:
    flat = basis.reshape(len(basis), -1)
    s = np.linalg.svd(flat, compute_uv=False)
    return int(np.sum(s > SPAN_TOL * max(s[0], 1.0)))


def _detect_blocks(t_ops: List[np.ndarray], log_b: np.ndarray,
                   rng: np.random.Generator):
    """Return per-block (isometry-in-support, sub_basis) pairs."""
    algebra = _close_algebra(np.array(t_ops), log_b)
    center = _center(algebra)
    zc = center.T @ algebra.reshape(len(algebra), -1)
    z_mats = zc.reshape(-1, algebra.shape[1], algebra.shape[1])
    z = _random_hermitian_in(z_mats, rng)
    evals, evecs = np.linalg.eigh(z)
    scale = max(np.abs(evals).max(), 1.0)
    groups = _group_eigs(evals, GAP_TOL * scale)
    out = []
    for g in groups:
        w_blk = evecs[:, g]
        sub = np.einsum("pi,aij,jq->apq", w_blk.conj().T, algebra, w_blk,
                        optimize=True)
        span = _Span(len(g))
        span.add(sub)
        out.append((w_blk, span.matrices))
    return out


def markov_decompose(rho: DensityMatrix, b_labels: Sequence[str],
                     rng: Optional[np.random.Generator] = None,
                     tol: float = 1e-7,
                     a_labels: Optional[Sequence[str]] = None,
                     c_labels: Optional[Sequence[str]] = None) -> MarkovDecomposition:
    """Block decomposition of a QMS conditioned on B.

    Raises NotMarkov if I(A:C|B) > tol, DecompositionFailed if block
    detection cannot be validated (two independent seeds must agree on the
    block dimensions, and the reassembled state must match).
    """
    rng = rng or np.random.default_rng(0)
    if a_labels is None or c_labels is None:
        a_labels, c_labels = _contiguous_split(rho.layout, b_labels)
    ok, cmi = is_qms(rho, b_labels, tol, a_labels, c_labels)
    if not ok:
        raise NotMarkov(f"I(A:C|B) = {cmi:.3e} exceeds tol {tol:.1e}")

    canon = rho.permuted(list(a_labels) + list(b_labels) + list(c_labels))
    a_sites = tuple((lab, rho.layout.dims[rho.layout.position(lab)]) for lab in a_labels)
    b_sites = tuple((lab, rho.layout.dims[rho.layout.position(lab)]) for lab in b_labels)
    c_sites = tuple((lab, rho.layout.dims[rho.layout.position(lab)]) for lab in c_labels)
    d_a = math.prod(d for _, d in a_sites)
    d_b = math.prod(d for _, d in b_sites)
    d_c = math.prod(d for _, d in c_sites)

    rho_ab, _ = partial_trace_matrix(canon.data, canon.layout, list(a_labels) + list(b_labels))
    rho_bc, _ = partial_trace_matrix(canon.data, canon.layout, list(b_labels) + list(c_labels))
    rho_b, _ = partial_trace_matrix(canon.data, canon.layout, list(b_labels))

    # support of rho_B
    ev, u = np.linalg.eigh(rho_b)
    cut = EIG_CUTOFF * max(ev.max(initial=0.0), 1.0)
    keep = ev > cut
    v_supp = u[:, keep]                       # d_b x s
    s_vals = ev[keep]
    s_dim = v_supp.shape[1]
    inv_sqrt = 1.0 / np.sqrt(s_vals)
    log_b = np.diag(np.log(s_vals))

    # conditional operators on B, normalized on the support
    rho4 = rho_ab.reshape(d_a, d_b, d_a, d_b)
    t_ops = []
    for x in _hermitian_basis(d_a):
        t = np.einsum("ac,cbad->bd", x, rho4, optimize=True)
        ts = v_supp.conj().T @ t @ v_supp
        t_ops.append((inv_sqrt[:, None] * ts) * inv_sqrt[None, :])

    dims_seen = []
    results = []
    seeds = rng.integers(0, 2 ** 63 - 1, size=2)
    for seed in seeds:
        sub_rng = np.random.default_rng(seed)
        blocks = _detect_blocks(t_ops, log_b, sub_rng)
        facts = []
        for w_blk, sub_basis in blocks:
            w, l, r = _factor_block(sub_basis, sub_rng)
            facts.append((w_blk @ w, l, r))
        dims_seen.append(sorted((l, r) for _, l, r in facts))
        results.append(facts)
    if dims_seen[0] != dims_seen[1]:
        raise DecompositionFailed(
            f"block dims disagree across seeds: {dims_seen[0]} vs {dims_seen[1]}")

    blocks: List[MarkovBlock] = []
    for w, l, r in results[0]:
        iso = v_supp @ w                       # d_b x (l*r)
        p = float(np.real(np.trace(iso.conj().T @ rho_b @ iso)))
        emb_ab = np.kron(np.eye(d_a), iso)
        sub_ab = emb_ab.conj().T @ rho_ab @ emb_ab      # on A (x) L (x) R
        t = sub_ab.reshape(d_a * l, r, d_a * l, r)
        left_m = np.trace(t, axis1=1, axis2=3) / p
        emb_bc = np.kron(iso, np.eye(d_c))
        sub_bc = emb_bc.conj().T @ rho_bc @ emb_bc      # on L (x) R (x) C
        t2 = sub_bc.reshape(l, r * d_c, l, r * d_c)
        right_m = np.trace(t2, axis1=0, axis2=2) / p
        i = len(blocks)
        left_layout = FactorLayout(a_sites + ((f"_L{i}", l),))
        right_layout = FactorLayout(((f"_R{i}", r),) + c_sites)
        try:
            left = DensityMatrix(left_layout, left_m)
            right = DensityMatrix(right_layout, right_m)
        except Exception as exc:
            raise DecompositionFailed(f"block state invalid: {exc}") from exc
        blocks.append(MarkovBlock(prob=p, iso=iso, dl=l, dr=r, left=left, right=right))

    dec = MarkovDecomposition(a_sites, b_sites, c_sites, blocks)
    rebuilt = reconstruct(dec)
    err = trace_distance(rebuilt, canon)
    if err > max(RECONSTRUCT_TOL, 10 * tol):
        raise DecompositionFailed(f"reconstruction error {err:.3e}")
    return dec


# ----------------------------------------------------------------------
# conditional refinement across two overlapping decompositions

@dataclass
class RefinedDecomposition:
    """Doubly indexed structure over B1-blocks i and B2-blocks j.

    Holds the conditional weights q[j|i] of the B2 blocks given the B1
    block, and the middle factors on B1_i^R (x) B2_j^L.
    """

    p: np.ndarray                      # B1 block probabilities
    q_cond: np.ndarray                 # q[i, j] = q(j | i)
    left: List[DensityMatrix]          # on A (x) B1_i^L
    middle: List[List[DensityMatrix]]  # on B1_i^R (x) B2_j^L
    right: List[DensityMatrix]         # on B2_j^R (x) C


def refine_block(dec1: MarkovDecomposition, dec2: MarkovDecomposition,
                 rho: DensityMatrix) -> RefinedDecomposition:
    """Refine dec1's right factors along dec2's B2 blocks.

    ``dec1`` decomposes rho_{A B1 B2} over B1 (with C traced out),
    ``dec2`` decomposes rho_{B1 B2 C} over B2 (with A traced out), and
    ``rho`` is the full state used for the joint weights.
    """
    b1_labels = [lab for lab, _ in dec1.b_sites]
    b2_labels = [lab for lab, _ in dec2.b_sites]
    d_b1 = math.prod(d for _, d in dec1.b_sites)
    d_b2 = math.prod(d for _, d in dec2.b_sites)

    canon = rho.permuted([lab for lab, _ in dec1.a_sites] + b1_labels + b2_labels
                         + [lab for lab, _ in dec2.c_sites])
    rho_b1b2, _ = partial_trace_matrix(canon.data, canon.layout, b1_labels + b2_labels)

    p = dec1.probs
    n1, n2 = len(dec1.blocks), len(dec2.blocks)
    q_cond = np.zeros((n1, n2))
    middle: List[List[DensityMatrix]] = []
    for i, blk1 in enumerate(dec1.blocks):
        # rho_{B1i^R B2}: strip A from dec1's right factor (right = R (x) B2)
        r_label = f"_R{i}"
        rb2 = blk1.right  # on R_i (x) B2-as-C of dec1
        row: List[DensityMatrix] = []
        for j, blk2 in enumerate(dec2.blocks):
            # project B2 onto block j and trace out its right factor
            emb = np.kron(np.eye(blk1.dr), blk2.iso)
            sub = emb.conj().T @ rb2.data @ emb    # on R_i (x) L_j (x) R_j
            q = float(np.real(np.trace(sub)))
            q_cond[i, j] = q
            t = sub.reshape(blk1.dr * blk2.dl, blk2.dr, blk1.dr * blk2.dl, blk2.dr)
            mid = np.trace(t, axis1=1, axis2=3)
            if q > 1e-12:
                layout = FactorLayout.of([(r_label, blk1.dr), (f"_L{j}'", blk2.dl)])
                row.append(DensityMatrix(layout, mid / q))
            else:
                layout = FactorLayout.of([(r_label, blk1.dr), (f"_L{j}'", blk2.dl)])
                eye = np.eye(blk1.dr * blk2.dl)
                row.append(DensityMatrix(layout, eye / eye.shape[0]))
        middle.append(row)
    if np.max(np.abs(q_cond.sum(axis=1) - 1.0)) > 1e-8:
        raise DecompositionFailed("conditional weights do not normalize")
    return RefinedDecomposition(
        p=p, q_cond=q_cond,
        left=[blk.left for blk in dec1.blocks],
        middle=middle,
        right=[blk.right for blk in dec2.blocks],
    )


def pinching_map(dec: MarkovDecomposition, mat: np.ndarray) -> np.ndarray:
    """P(X) = directsum_j tr_{R_j}[Pi_j X Pi_j] (x) right-marginal_j on B."""
    d_b = math.prod(d for _, d in dec.b_sites)
    out = np.zeros((d_b, d_b), dtype=complex)
    for j, blk in enumerate(dec.blocks):
        sub = blk.iso.conj().T @ mat @ blk.iso
        t = sub.reshape(blk.dl, blk.dr, blk.dl, blk.dr)
        l_part = np.trace(t, axis1=1, axis2=3)
        c_dims = math.prod(d for _, d in dec.c_sites)
        rr = blk.right.data.reshape(blk.dr, c_dims, blk.dr, c_dims)
        r_marg = np.trace(rr, axis1=1, axis2=3)
        out += blk.iso @ np.kron(l_part, r_marg) @ blk.iso.conj().T
    return out


# ----------------------------------------------------------------------
# serialization for fixture reuse

def decomposition_to_json_dict(dec: MarkovDecomposition) -> dict:
    from .states import matrix_to_b64
    return {
        "a_sites": [list(s) for s in dec.a_sites],
        "b_sites": [list(s) for s in dec.b_sites],
        "c_sites": [list(s) for s in dec.c_sites],
        "blocks": [{
            "prob": blk.prob, "dl": blk.dl, "dr": blk.dr,
            "iso": matrix_to_b64(blk.iso),
            "left": matrix_to_b64(blk.left.data),
            "right": matrix_to_b64(blk.right.data),
        } for blk in dec.blocks],
    }


def decomposition_from_json_dict(obj: dict) -> MarkovDecomposition:
    from .states import matrix_from_b64
    a_sites = tuple((lab, d) for lab, d in obj["a_sites"])
    b_sites = tuple((lab, d) for lab, d in obj["b_sites"])
    c_sites = tuple((lab, d) for lab, d in obj["c_sites"])
    blocks = []
    for i, b in enumerate(obj["blocks"]):
        left_layout = FactorLayout(a_sites + ((f"_L{i}", b["dl"]),))
        right_layout = FactorLayout(((f"_R{i}", b["dr"]),) + c_sites)
        blocks.append(MarkovBlock(
            prob=b["prob"], iso=matrix_from_b64(b["iso"]),
            dl=b["dl"], dr=b["dr"],
            left=DensityMatrix(left_layout, matrix_from_b64(b["left"])),
            right=DensityMatrix(right_layout, matrix_from_b64(b["right"]))))
    return MarkovDecomposition(a_sites, b_sites, c_sites, blocks)


# ----------------------------------------------------------------------
# random QMS construction

def random_qms(rng: np.random.Generator,
               d_a: int = 2, d_c: int = 2,
               block_dims: Sequence[Tuple[int, int]] = ((2, 1), (1, 2)),
               d_b: Optional[int] = None,
               a_label: str = "A", b_label: str = "B", c_label: str = "C",
               ) -> Tuple[DensityMatrix, MarkovDecomposition]:
    """Random state of the direct-sum product form, with its decomposition.

    ``block_dims`` lists (dl, dr) per block; ``d_b`` defaults to the exact
    packing sum(dl*dr).
    """
    need = sum(l * r for l, r in block_dims)
    d_b = d_b or need
    if d_b < need:
        raise ValueError("d_b too small for the requested blocks")
    g = rng.standard_normal((d_b, d_b)) + 1j * rng.standard_normal((d_b, d_b))
    u, _ = np.linalg.qr(g)
    p = rng.dirichlet(np.ones(len(block_dims)))
    a_sites = ((a_label, d_a),)
    b_sites = ((b_label, d_b),)
    c_sites = ((c_label, d_c),)
    blocks = []
    off = 0
    from .states import random_density_matrix
    for i, (l, r) in enumerate(block_dims):
        iso = u[:, off:off + l * r]
        off += l * r
        left = random_density_matrix(FactorLayout.of([(a_label, d_a), (f"_L{i}", l)]), rng)
        right = random_density_matrix(FactorLayout.of([(f"_R{i}", r), (c_label, d_c)]), rng)
        blocks.append(MarkovBlock(prob=float(p[i]), iso=iso, dl=l, dr=r,
                                  left=left, right=right))
    dec = MarkovDecomposition(a_sites, b_sites, c_sites, blocks)
    return reconstruct(dec), dec


def random_chain_qms(rng: np.random.Generator,
                     d_a: int = 2, d_b1a: int = 2,
                     block_dims: Sequence[Tuple[int, int]] = ((1, 1), (1, 1)),
                     d_b1b: int = 2, d_b2: Optional[int] = None,
                     d_c: int = 2):
    """Random state satisfying the annulus-merge preconditions exactly.

    rho = rho_{A B1a} (x) qms(B1b | B2 | C): A couples only to the first
    half of B1, and the second half chains to C through B2, so
    I(A:B2C) = I(A:B2|B1) = I(B1:C|B2) = 0 while the B1-B2-C correlations
    are generically nontrivial.  Returns (rho, b1, b2, a, c) label lists.
    """
    from .states import random_density_matrix, tensor
    rho_ab1a = random_density_matrix(
        FactorLayout.of([("A", d_a), ("B1a", d_b1a)]), rng)
    chain, _ = random_qms(rng, d_a=d_b1b, d_c=d_c, block_dims=block_dims,
                          d_b=d_b2, a_label="B1b", b_label="B2", c_label="C")
    rho = tensor(rho_ab1a, chain)
    return rho, ["B1a", "B1b"], ["B2"], ["A"], ["C"]
