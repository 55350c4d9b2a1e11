"""Rate machinery: eigenspace twirls, averaged states, and the slack bound.

The code book conjugates the input state by block unitaries that act
inside eigenspaces of the left factors of the maximum-entropy state's
block decomposition, so every member preserves the two-region marginals.
Per eigenspace the exact unitary 1-design is the phase-augmented
Weyl-Heisenberg group; the ensemble average over independent per-block
draws is composed analytically and cross-checked by Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .entropy import Spectrum, shannon, spectral, von_neumann_entropy
from .errors import AssumptionViolated, DegeneracyAmbiguous, NotMarkov
from .layout import FactorLayout
from .markov import MarkovDecomposition, markov_decompose
from .maxent import MarginalConstraintSet, iterative_maxent, merge_annulus
from .states import DensityMatrix, partial_trace

LN2 = math.log(2.0)


def weyl_ops(d: int) -> List[np.ndarray]:
    """Generalized Pauli (shift/clock) unitaries on C^d, with enough phases
    that the plain ensemble average of U itself vanishes."""
    if d == 1:
        return [np.array([[1.0 + 0j]]), np.array([[-1.0 + 0j]])]
    omega = np.exp(2j * np.pi / d)
    shift = np.zeros((d, d), dtype=complex)
    for i in range(d):
        shift[(i + 1) % d, i] = 1.0
    clock = np.diag(omega ** np.arange(d))
    ops = []
    for c in range(d):
        for a in range(d):
            for b in range(d):
                ops.append((omega ** c) * np.linalg.matrix_power(shift, a)
                           @ np.linalg.matrix_power(clock, b))
    return ops


@dataclass
class _EigenBlock:
    block: int
    eigenvalue: float
    dim: int
    iso_ab: np.ndarray   # (d_A*d_B) x (dim * dr): eigenspace (x) R_block in H_AB


@dataclass
class TwirlEnsemble:
    """Marginal-preserving block-unitary ensemble on the A+B cut."""

    a_sites: Tuple[Tuple[str, int], ...]
    b_sites: Tuple[Tuple[str, int], ...]
    c_sites: Tuple[Tuple[str, int], ...]
    dec: MarkovDecomposition
    spectra: List[Spectrum]              # one per block, of the left factor
    eigenblocks: List[_EigenBlock]
    d_abl: int                           # dim of A (x) directsum_i B_i^L

    @property
    def d_a(self) -> int:
        return math.prod(d for _, d in self.a_sites)

    @property
    def d_b(self) -> int:
        return math.prod(d for _, d in self.b_sites)

    @property
    def d_c(self) -> int:
        return math.prod(d for _, d in self.c_sites)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One joint draw: a unitary on A (x) B (identity off the support)."""
        d_ab = self.d_a * self.d_b
        u = np.eye(d_ab, dtype=complex)
        covered = np.zeros((d_ab, d_ab), dtype=complex)
        for eb in self.eigenblocks:
            fam = weyl_ops(eb.dim)
            w = fam[rng.integers(len(fam))]
            blk = self.dec.blocks[eb.block]
            w_full = np.kron(w, np.eye(blk.dr))
            u = u + eb.iso_ab @ (w_full - np.eye(eb.dim * blk.dr)) @ eb.iso_ab.conj().T
            covered += eb.iso_ab @ eb.iso_ab.conj().T
        return u

    def members_exact(self) -> List[np.ndarray]:
        """Full enumeration of the joint ensemble (small cases only)."""
        from itertools import product
        fams = [weyl_ops(eb.dim) for eb in self.eigenblocks]
        total = math.prod(len(f) for f in fams)
        if total > 4096:
            raise DegeneracyAmbiguous(f"ensemble of {total} members too large "
                                      "to enumerate; use sampling")
        d_ab = self.d_a * self.d_b
        out = []
        for combo in product(*fams):
            u = np.eye(d_ab, dtype=complex)
            for eb, w in zip(self.eigenblocks, combo):
                blk = self.dec.blocks[eb.block]
                w_full = np.kron(w, np.eye(blk.dr))
                u = u + eb.iso_ab @ (w_full - np.eye(eb.dim * blk.dr)) @ eb.iso_ab.conj().T
            out.append(u)
        return out


def build_twirl(dec: MarkovDecomposition, rel_tol: float = 1e-9) -> TwirlEnsemble:
    """Eigenspace twirl of the decomposition's left factors.

    Raises DegeneracyAmbiguous when two eigenvalue groups of a left factor
    sit closer than 10x the grouping tolerance (the caller should loosen
    rel_tol rather than trust an arbitrary split).
    """
    d_a = math.prod(d for _, d in dec.a_sites)
    spectra = []
    eigenblocks = []
    d_abl = 0
    for i, blk in enumerate(dec.blocks):
        spec = spectral(blk.left, rel_tol)
        vals = np.array(spec.eigenvalues)
        scale = max(abs(vals[0]), 1e-300)
        gaps = np.abs(np.diff(vals))
        if len(gaps) and gaps.min() <= 10 * rel_tol * scale:
            raise DegeneracyAmbiguous(
                f"block {i}: eigenvalue gap {gaps.min():.3e} is within 10x "
                f"the grouping tolerance; loosen rel_tol")
        spectra.append(spec)
        d_abl += d_a * blk.dl
        isos = spec.isometries()
        for k, (lam, v_k) in enumerate(zip(spec.eigenvalues, isos)):
            # embed (eigenspace of A (x) L_i) (x) R_i into H_AB
            emb_b = np.kron(np.eye(d_a), blk.iso)          # AB <- A (x) (L,R)
            # reorder (A, L, R): V acts on (A, L); build (V (x) I_R)
            v_full = np.kron(v_k, np.eye(blk.dr))          # (dA*l*r) x (dim*r)
            eigenblocks.append(_EigenBlock(
                block=i, eigenvalue=float(lam), dim=v_k.shape[1],
                iso_ab=emb_b @ v_full))
    return TwirlEnsemble(dec.a_sites, dec.b_sites, dec.c_sites, dec,
                         spectra, eigenblocks, d_abl)


def averaged_state(rho: DensityMatrix, ens: TwirlEnsemble) -> DensityMatrix:
    """Exact ensemble average of U rho U^dag, composed block by block.

    rho must be on the decomposition's canonical (A..., B..., C...) layout.
    """
    canon_labels = [lab for lab, _ in ens.a_sites + ens.b_sites + ens.c_sites]
    canon = rho.permuted(canon_labels)
    d_c = ens.d_c
    acc = np.zeros_like(canon.data)
    covered = np.zeros((ens.d_a * ens.d_b,) * 2, dtype=complex)
    for eb in ens.eigenblocks:
        blk = ens.dec.blocks[eb.block]
        y = eb.iso_ab                                  # (dA dB) x (dim * r)
        y_c = np.kron(y, np.eye(d_c))
        z = y_c.conj().T @ canon.data @ y_c            # on (dim, r, C)^2
        m = eb.dim
        t = z.reshape(m, blk.dr * d_c, m, blk.dr * d_c)
        sigma = np.trace(t, axis1=0, axis2=2)          # on (r, C)
        block_out = np.kron(np.eye(m) / m, sigma)
        acc += y_c @ block_out @ y_c.conj().T
        covered += y @ y.conj().T
    # off-support weight (zero for states matching the decomposition)
    rest = np.eye(covered.shape[0]) - covered
    rest_c = np.kron(rest, np.eye(d_c))
    leak = rest_c @ canon.data @ rest_c.conj().T
    acc += leak
    out = DensityMatrix(canon.layout, acc)
    return out.permuted(list(rho.layout.labels))


def averaged_state_mc(rho: DensityMatrix, ens: TwirlEnsemble, n_samples: int,
                      rng: np.random.Generator) -> DensityMatrix:
    """Monte Carlo estimate of the ensemble average (cross-check only)."""
    canon_labels = [lab for lab, _ in ens.a_sites + ens.b_sites + ens.c_sites]
    canon = rho.permuted(canon_labels)
    d_c = ens.d_c
    acc = np.zeros_like(canon.data)
    for _ in range(n_samples):
        u = ens.sample(rng)
        u_c = np.kron(u, np.eye(d_c))
        acc += u_c @ canon.data @ u_c.conj().T
    out = DensityMatrix(canon.layout, acc / n_samples)
    return out.permuted(list(rho.layout.labels))


# ----------------------------------------------------------------------
# rate report

@dataclass
class RateReport:
    S_bar: float
    S_tilde: float
    S_rho: float
    C3: float
    logD: float
    D: int
    slack: float
    entbar_closed_form: float
    entmax_closed_form: float
    N_bounds: List[Dict[str, float]]
    method: str
    assumption_residuals: Dict[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "S_bar": self.S_bar, "S_tilde": self.S_tilde, "S_rho": self.S_rho,
            "C3": self.C3, "logD": self.logD, "D": self.D, "slack": self.slack,
            "entbar_closed_form": self.entbar_closed_form,
            "entmax_closed_form": self.entmax_closed_form,
            "N_bounds": self.N_bounds, "method": self.method,
            "assumption_residuals": self.assumption_residuals,
        }


def _distinct_count(values: np.ndarray, rel_tol: float = 1e-9) -> int:
    vals = np.sort(values)[::-1]
    scale = max(abs(vals[0]), 1e-300)
    count = 1
    for i in range(1, len(vals)):
        if abs(vals[i - 1] - vals[i]) > rel_tol * scale:
            count += 1
    return count


def rate_report(rho: DensityMatrix, b_labels: Sequence[str],
                split: Optional[Tuple[Sequence[str], Sequence[str]]] = None,
                a_labels: Optional[Sequence[str]] = None,
                c_labels: Optional[Sequence[str]] = None,
                rng: Optional[np.random.Generator] = None,
                rel_tol: float = 1e-9, tol: float = 1e-7,
                solver_tol: float = 1e-9, max_iter: int = 5000) -> RateReport:
    """Achievable-rate bookkeeping for one tripartition.

    The maximum-entropy state comes from the annulus merge when a B1|B2
    split is supplied (and its preconditions hold), otherwise from the
    iterative solver; it must be a Markov state conditioned on B so the
    block twirl exists.
    """
    rng = rng or np.random.default_rng(0)
    b_labels = list(b_labels)
    if a_labels is None or c_labels is None:
        from .maxent import _infer_abc
        a_labels, c_labels = _infer_abc(rho.layout, b_labels)
    a_labels, c_labels = list(a_labels), list(c_labels)

    residuals: Dict[str, float] = {}
    method = "solver"
    tilde = None
    if split is not None:
        try:
            tilde = merge_annulus(rho, list(split[0]), list(split[1]),
                                  a_labels=a_labels, c_labels=c_labels, tol=tol)
            method = "merge-annulus"
        except AssumptionViolated as exc:
            residuals.update(exc.quantities)
    if tilde is None:
        cons = MarginalConstraintSet.from_state(
            rho, 2, parts=[a_labels, b_labels, c_labels])
        tilde = iterative_maxent(cons, tol=solver_tol, max_iter=max_iter)
        method = "solver"
    try:
        dec = markov_decompose(tilde, b_labels, rng=rng,
                               a_labels=a_labels, c_labels=c_labels)
    except NotMarkov as exc:
        raise AssumptionViolated(
            f"maximum-entropy state is not Markov conditioned on B: {exc}",
            quantities=residuals) from exc
    ens = build_twirl(dec, rel_tol)
    bar = averaged_state(rho, ens)

    s_bar = von_neumann_entropy(bar)
    s_tilde = von_neumann_entropy(tilde)
    s_rho = von_neumann_entropy(rho)

    # closed forms from the block data
    p = dec.probs
    h_p = shannon(p)
    entbar = h_p
    entmax = h_p
    canon_labels = a_labels + b_labels + c_labels
    canon = rho.permuted(canon_labels)
    d_c = ens.d_c
    for i, (blk, spec) in enumerate(zip(dec.blocks, ens.spectra)):
        q = np.array([lam * d for lam, d in zip(spec.eigenvalues, spec.degeneracies)])
        entbar += p[i] * shannon(q)
        entmax += p[i] * shannon(q)
        entmax += p[i] * float(np.dot(q, np.log(spec.degeneracies)))
        entmax += p[i] * von_neumann_entropy(blk.right)
        # conditional states of B^R C given the eigenvalue sector
        for eb in [e for e in ens.eigenblocks if e.block == i]:
            y_c = np.kron(eb.iso_ab, np.eye(d_c))
            z = y_c.conj().T @ canon.data @ y_c
            t = z.reshape(eb.dim, blk.dr * d_c, eb.dim, blk.dr * d_c)
            sigma = np.trace(t, axis1=0, axis2=2)
            w = float(np.real(np.trace(sigma)))
            q_k = eb.eigenvalue * eb.dim
            if w > 1e-14:
                sig_layout = FactorLayout.of([("R", blk.dr)] + list(dec.c_sites))
                rho_k = DensityMatrix(sig_layout, sigma / w)
                entbar += p[i] * q_k * (math.log(eb.dim)
                                        + von_neumann_entropy(rho_k))
    d_vals = np.array([p[i] * lam for i, spec in enumerate(ens.spectra)
                       for lam in spec.eigenvalues])
    D = _distinct_count(d_vals, rel_tol)
    n_bounds = []
    d_abl = ens.d_abl
    base = np.array(sorted(d_vals))
    for n_copies in (1, 2, 3):
        from itertools import combinations_with_replacement
        prods = sorted(set(
            round(float(np.prod(combo)), 15)
            for combo in combinations_with_replacement(base, n_copies)))
        cnt = _distinct_count(np.array(prods)) if prods else 0
        n_bounds.append({
            "N": n_copies,
            "distinct_eigenvalues": cnt,
            "poly_count_bound": float((n_copies + 1) ** d_abl),
            "log_reading_bound": d_abl * math.log2(n_copies + 1),
        })
    return RateReport(
        S_bar=s_bar, S_tilde=s_tilde, S_rho=s_rho,
        C3=s_tilde - s_rho, logD=math.log(D), D=D,
        slack=s_tilde - s_bar,
        entbar_closed_form=entbar, entmax_closed_form=entmax,
        N_bounds=n_bounds, method=method, assumption_residuals=residuals)
