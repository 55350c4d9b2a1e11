"""Maximum-entropy states over marginal constraints and derived measures.

Two routes to the entropy maximizer with fixed two-region marginals:

* closed-form merges built from recovery maps (annulus and six-fold ring
  constructions), valid when the zero-correlation preconditions hold;
* an iterative information-projection solver that works for any
  compatible constraint set and doubles as the independent oracle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .entropy import (conditional_mutual_information, mutual_information,
                      log_eps, matrix_log, shannon, total_correlation,
                      trace_distance, trace_norm, von_neumann_entropy)
from .errors import (AssumptionViolated, ConvergenceFailure,
                     DecompositionFailed, InconsistentMarginal,
                     OverlappingRegions)
from .layout import FactorLayout, embed_operator, partial_trace_matrix
from .markov import (MarkovDecomposition, apply_recovery, markov_decompose,
                     petz_recovery, reconstruct)
from .states import DensityMatrix, EIG_CUTOFF, partial_trace

LN2 = math.log(2.0)


# ----------------------------------------------------------------------
# constraints

@dataclass
class MarginalConstraintSet:
    """Target RDMs on a family of label sets, checked for compatibility."""

    layout: FactorLayout
    targets: List[Tuple[Tuple[str, ...], DensityMatrix]]
    k: Optional[int] = None

    def __post_init__(self):
        for labs, t in self.targets:
            expect = self.layout.subset(labs)
            if t.layout != expect:
                raise InconsistentMarginal(
                    f"target on {labs} has layout {t.layout.sites}, "
                    f"expected {expect.sites}")
        for i, (labs1, t1) in enumerate(self.targets):
            for labs2, t2 in self.targets[i + 1:]:
                common = [lab for lab in labs1 if lab in set(labs2)]
                if not common:
                    continue
                m1 = partial_trace(t1, common)
                m2 = partial_trace(t2, common)
                gap = trace_distance(m1, m2)
                if gap > 1e-9:
                    raise InconsistentMarginal(
                        f"targets on {labs1} and {labs2} disagree on "
                        f"{common} by {gap:.3e}")

    @classmethod
    def from_state(cls, rho: DensityMatrix, k: int,
                   parts: Optional[Sequence[Sequence[str]]] = None
                   ) -> "MarginalConstraintSet":
        """All k-subsets of the parties of ``rho`` (parties default to sites)."""
        from itertools import combinations
        parts = [list(p) for p in (parts or [[lab] for lab in rho.layout.labels])]
        targets = []
        for combo in combinations(range(len(parts)), k):
            labs = [lab for i in combo for lab in parts[i]]
            labs = [lab for lab in rho.layout.labels if lab in set(labs)]
            targets.append((tuple(labs), partial_trace(rho, labs)))
        return cls(rho.layout, targets, k=k)


def _expm_normalized(h: np.ndarray, layout: FactorLayout,
                     support: Optional[np.ndarray] = None) -> DensityMatrix:
    if support is not None:
        h = support.conj().T @ h @ support
    evals, evecs = np.linalg.eigh(h)
    w = np.exp(evals - evals.max())
    mat = (evecs * w) @ evecs.conj().T
    mat /= np.trace(mat).real
    if support is not None:
        mat = support @ mat @ support.conj().T
    return DensityMatrix(layout, mat)


def _forced_support(constraints: MarginalConstraintSet) -> Optional[np.ndarray]:
    """Isometry onto the intersection of the lifted target supports.

    Every state with the target marginals is supported inside
    supp(target_S) (x) H_rest for each S, so the entropy maximizer lives in
    the intersection; compressing onto it turns boundary maximizers
    (reached only logarithmically by the unrestricted Gibbs family) into
    interior ones.
    """
    layout = constraints.layout
    d = layout.total_dim
    acc = np.zeros((d, d), dtype=complex)
    compressed = False
    for labs, t in constraints.targets:
        ev, u = t.eigenvalues, t.eigenvectors
        cut = EIG_CUTOFF * max(ev.max(), 1e-300)
        kernel = u[:, ev <= cut]
        if kernel.shape[1]:
            compressed = True
            acc += embed_operator(kernel @ kernel.conj().T, list(labs), layout)
    if not compressed:
        return None
    evals, evecs = np.linalg.eigh(acc)
    keep = evals < 1e-9
    if not keep.any() or keep.all():
        return None
    return evecs[:, keep]


def iterative_maxent(constraints: MarginalConstraintSet,
                     tol: float = 1e-9, max_iter: int = 5000,
                     damping: float = 0.5,
                     return_hamiltonian: bool = False,
                     init_rng: Optional[np.random.Generator] = None,
                     init_noise: float = 0.0):
    """Entropy maximizer over states matching the target marginals.

    Multiplicative information projection: the log of the iterate is a sum
    of one term per constraint region, so every iterate is a Gibbs state of
    a constraint-local Hamiltonian and the converged state is the
    information projection onto that family.  The step is damped, and the
    damping is halved whenever the worst marginal residual fails to
    decrease (entropy itself is not monotone along the approach).

    ``init_noise`` > 0 perturbs the starting Hamiltonian (used to probe
    uniqueness of the maximizer from independent starting points).
    """
    layout = constraints.layout
    terms: Dict[Tuple[str, ...], np.ndarray] = {}
    target_logs: Dict[Tuple[str, ...], np.ndarray] = {}
    for labs, t in constraints.targets:
        eps = EIG_CUTOFF * max(t.eigenvalues.max(), 1e-300)
        target_logs[labs] = log_eps(t.data, eps)
        terms[labs] = target_logs[labs].copy()
        if init_noise > 0.0 and init_rng is not None:
            d = terms[labs].shape[0]
            g = init_rng.standard_normal((d, d)) \
                + 1j * init_rng.standard_normal((d, d))
            terms[labs] = terms[labs] + init_noise * (g + g.conj().T)

    def assemble(ts):
        h = np.zeros((layout.total_dim, layout.total_dim), dtype=complex)
        for labs, m in ts.items():
            h += embed_operator(m, list(labs), layout)
        return h

    def residual_and_deltas(state):
        deltas = {}
        worst = 0.0
        for labs, t in constraints.targets:
            cur, _ = partial_trace_matrix(state.data, layout, list(labs))
            worst = max(worst, trace_norm(cur - t.data))
            eps = EIG_CUTOFF * max(np.linalg.eigvalsh(cur).max(), 1e-300)
            deltas[labs] = target_logs[labs] - log_eps(cur, eps)
        return worst, deltas

    support = _forced_support(constraints)
    lam = damping
    rho = _expm_normalized(assemble(terms), layout, support)
    residual, deltas = residual_and_deltas(rho)
    best = (residual, rho, {k: v.copy() for k, v in terms.items()})
    history: List[float] = [residual]
    stall = 0
    for it in range(max_iter):
        if residual < tol:
            if return_hamiltonian:
                return rho, terms
            return rho
        if residual < best[0] * (1.0 - 1e-4):
            stall = 0
            # boundary maximizers need diverging coefficients, so the step
            # scale may grow well beyond the initial damping while progress
            # is sustained; the stall logic below reins it back in
            lam = min(lam * 1.3, 1e6)
        else:
            stall += 1
        if residual < best[0]:
            best = (residual, rho, {k: v.copy() for k, v in terms.items()})
        if stall >= 8:
            # sustained non-improvement: restart from the best iterate
            # with a smaller step
            terms = {k: v.copy() for k, v in best[2].items()}
            rho = best[1]
            residual, deltas = best[0], None
            lam = max(lam * 0.5, 1e-4)
            stall = 0
            _, deltas = residual_and_deltas(rho)
        for labs in terms:
            terms[labs] = terms[labs] + lam * deltas[labs]
        rho = _expm_normalized(assemble(terms), layout, support)
        residual, deltas = residual_and_deltas(rho)
        history.append(residual)
    if best[0] < tol:
        if return_hamiltonian:
            return best[1], best[2]
        return best[1]
    raise ConvergenceFailure(
        f"residual {best[0]:.3e} after {max_iter} iterations (tol {tol:.1e})",
        best_state=best[1],
        diagnostics={"residual": best[0], "iterations": max_iter,
                     "history_tail": history[-10:], "damping": lam})


# ----------------------------------------------------------------------
# closed-form merges

def _infer_abc(layout: FactorLayout, b_labels: Sequence[str]):
    labels = list(layout.labels)
    pos = sorted(layout.position(lab) for lab in b_labels)
    a = labels[:pos[0]]
    c = labels[pos[-1] + 1:]
    return a, c


def merge_annulus(rho: DensityMatrix, b1_labels: Sequence[str],
                  b2_labels: Sequence[str],
                  a_labels: Optional[Sequence[str]] = None,
                  c_labels: Optional[Sequence[str]] = None,
                  tol: float = 1e-7) -> DensityMatrix:
    """Maximum-entropy extension over the B1|B2 split of the middle region.

    Rebuilds the C side from rho_B2 with the canonical recovery map and
    applies it to rho_{A B1 B2}.  Preconditions (checked at ``tol``):
    I(A:B2|B1) = 0, I(B1:C|B2) = 0, and I(A:B2C) = 0.
    """
    b1_labels, b2_labels = list(b1_labels), list(b2_labels)
    if a_labels is None or c_labels is None:
        a_labels, c_labels = _infer_abc(rho.layout, b1_labels + b2_labels)
    a_labels, c_labels = list(a_labels), list(c_labels)
    res = {
        "I(A:B2|B1)": conditional_mutual_information(rho, a_labels, b1_labels, b2_labels),
        "I(B1:C|B2)": conditional_mutual_information(rho, b1_labels, b2_labels, c_labels),
        "I(A:B2C)": mutual_information(rho, a_labels, b2_labels + c_labels),
    }
    bad = {k: v for k, v in res.items() if v > tol}
    if bad:
        raise AssumptionViolated(f"merge preconditions exceed {tol:.1e}: {bad}",
                                 quantities=res)
    rho_ab = partial_trace(rho, a_labels + b1_labels + b2_labels)
    rho_b2c = partial_trace(rho, b2_labels + c_labels)
    rho_b2 = partial_trace(rho, b2_labels)
    recovery = petz_recovery(rho_b2c, rho_b2)
    merged = apply_recovery(recovery, rho_ab)
    return merged.permuted(list(rho.layout.labels))


@dataclass
class RingMerge:
    """Six-fold cyclic merge output with its direct-sum bookkeeping."""

    state: DensityMatrix
    parts: List[Tuple[str, ...]]               # the six label groups
    decs: List[MarkovDecomposition]            # one per part (conditioned on it)
    pair_weights: List[np.ndarray]             # w[k][a, b] over blocks of k, k+1
    single_weights: List[np.ndarray]           # w1[k][a]
    middles: List[Dict[Tuple[int, int], DensityMatrix]]  # on R_k (x) L_{k+1}
    weight_sum: float


def merge_ring(rho: DensityMatrix, ring_parts: Sequence[Sequence[str]],
               rng: Optional[np.random.Generator] = None,
               tol: float = 1e-7) -> RingMerge:
    """Cyclic merge of six overlapping conditional decompositions.

    Every consecutive triple must be a Markov state conditioned on its
    middle part, and parts at circular distance >= 2 must be uncorrelated.
    The output is assembled block by block with cyclic conditional weights.
    """
    rng = rng or np.random.default_rng(0)
    parts = [tuple(p) for p in ring_parts]
    if len(parts) != 6:
        raise OverlappingRegions("ring merge needs exactly six parts")
    res = {}
    for i in range(6):
        prev_p, cur, nxt = parts[(i - 1) % 6], parts[i], parts[(i + 1) % 6]
        res[f"I({i-1 if i else 5}:{(i+1) % 6}|{i})"] = \
            conditional_mutual_information(rho, list(prev_p), list(cur), list(nxt))
    for i in range(6):
        far = [lab for d in (2, 3, 4) for lab in parts[(i + d) % 6]]
        res[f"I({i}:far)"] = mutual_information(rho, list(parts[i]), far)
    bad = {k: v for k, v in res.items() if v > tol}
    if bad:
        raise AssumptionViolated(f"ring preconditions exceed {tol:.1e}: {bad}",
                                 quantities=res)

    decs = []
    for i in range(6):
        prev_p, cur, nxt = parts[(i - 1) % 6], parts[i], parts[(i + 1) % 6]
        triple = partial_trace(rho, list(prev_p) + list(cur) + list(nxt))
        decs.append(markov_decompose(triple, list(cur), rng=rng, tol=10 * tol,
                                     a_labels=list(prev_p), c_labels=list(nxt)))

    single_weights = []
    for i in range(6):
        cur, _ = partial_trace_matrix(rho.data, rho.layout, list(parts[i]))
        single_weights.append(np.array([
            float(np.real(np.trace(blk.iso.conj().T @ cur @ blk.iso)))
            for blk in decs[i].blocks]))

    pair_weights = []
    middles: List[Dict[Tuple[int, int], DensityMatrix]] = []
    for k in range(6):
        k2 = (k + 1) % 6
        pair = rho.permuted([lab for lab in rho.layout.labels]).data
        pair, sub = partial_trace_matrix(rho.data, rho.layout,
                                         list(parts[k]) + list(parts[k2]))
        pair = DensityMatrix(sub, pair).permuted(list(parts[k]) + list(parts[k2])).data
        w = np.zeros((len(decs[k].blocks), len(decs[k2].blocks)))
        mids: Dict[Tuple[int, int], DensityMatrix] = {}
        for a, blk_a in enumerate(decs[k].blocks):
            for b, blk_b in enumerate(decs[k2].blocks):
                emb = np.kron(blk_a.iso, blk_b.iso)
                sub_m = emb.conj().T @ pair @ emb   # on L_a R_a L_b R_b
                wt = float(np.real(np.trace(sub_m)))
                w[a, b] = wt
                t = sub_m.reshape(blk_a.dl, blk_a.dr * blk_b.dl, blk_b.dr,
                                  blk_a.dl, blk_a.dr * blk_b.dl, blk_b.dr)
                mid = np.einsum("xayxby->ab", t, optimize=True)
                layout = FactorLayout.of([(f"R{k}", blk_a.dr), (f"L{k2}", blk_b.dl)])
                if wt > 1e-14:
                    mids[(a, b)] = DensityMatrix(layout, mid / wt)
                else:
                    d = blk_a.dr * blk_b.dl
                    mids[(a, b)] = DensityMatrix(layout, np.eye(d) / d)
        pair_weights.append(w)
        middles.append(mids)

    # assemble the direct sum over block tuples
    order = [lab for p in parts for lab in p]
    canon = rho.permuted(order)
    dims = [math.prod(canon.layout.dims[canon.layout.position(lab)] for lab in p)
            for p in parts]
    total = int(np.prod(dims))
    acc = np.zeros((total, total), dtype=complex)
    from itertools import product as iproduct
    weight_sum = 0.0
    n_blocks = [len(d.blocks) for d in decs]
    for tup in iproduct(*[range(n) for n in n_blocks]):
        wt = 1.0
        for k in range(6):
            prev_b = tup[(k - 1) % 6]
            denom = single_weights[(k - 1) % 6][prev_b]
            wt *= pair_weights[(k - 1) % 6][prev_b, tup[k]] / max(denom, 1e-300)
        if wt <= 1e-16:
            continue
        weight_sum += wt
        # chain state on (R0 L1)(R1 L2)...(R5 L0) -> reorder to (L0 R0)...(L5 R5)
        chain = None
        for k in range(6):
            m = middles[k][(tup[k], tup[(k + 1) % 6])]
            chain = m if chain is None else _kron_dm(chain, m)
        target_order = []
        for k in range(6):
            target_order.extend([f"L{k}", f"R{k}"])
        chain = chain.permuted(target_order)
        emb = np.array([[1.0]])
        for k in range(6):
            emb = np.kron(emb, decs[k].blocks[tup[k]].iso)
        acc += wt * (emb @ chain.data @ emb.conj().T)

    if abs(weight_sum - 1.0) > 1e-9:
        raise DecompositionFailed(
            f"cyclic weights sum to {weight_sum!r}, expected 1")
    merged = DensityMatrix(canon.layout, acc).permuted(list(rho.layout.labels))
    return RingMerge(state=merged, parts=parts, decs=decs,
                     pair_weights=pair_weights, single_weights=single_weights,
                     middles=middles, weight_sum=weight_sum)


def _kron_dm(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    from .states import tensor
    return tensor(a, b)


# ----------------------------------------------------------------------
# correlation measures

def distance_Dk(rho: DensityMatrix, k: int,
                parts: Optional[Sequence[Sequence[str]]] = None,
                tol: float = 1e-8, max_iter: int = 5000) -> float:
    """Entropy gap S(maxent with k-party marginals) - S(rho), nats."""
    parts = [list(p) for p in (parts or [[lab] for lab in rho.layout.labels])]
    n = len(parts)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    if k == n:
        return 0.0
    if k == 1:
        s_parts = sum(von_neumann_entropy(partial_trace(rho, p)) for p in parts)
        return s_parts - von_neumann_entropy(rho)
    cons = MarginalConstraintSet.from_state(rho, k, parts)
    tilde = iterative_maxent(cons, tol=tol, max_iter=max_iter)
    return von_neumann_entropy(tilde) - von_neumann_entropy(rho)


def irreducible_correlation(rho: DensityMatrix, k: int,
                            parts: Optional[Sequence[Sequence[str]]] = None,
                            tol: float = 1e-8, max_iter: int = 5000) -> float:
    """D^(k-1) - D^(k); correlation present in k-RDMs but not (k-1)-RDMs."""
    val = (distance_Dk(rho, k - 1, parts, tol, max_iter)
           - distance_Dk(rho, k, parts, tol, max_iter))
    if -1e-6 <= val < 0.0:
        warnings.warn(f"clamping small negative correlation {val:.2e} to 0")
        return 0.0
    return val


@dataclass
class CorrelationReport:
    """All correlation measures of one tripartition, plus bookkeeping."""

    S_values: Dict[str, float]
    gamma: float
    C3: float
    C2: float
    CT: float
    D_k: List[float]
    verdict: float                      # |gamma - C3|
    method: str                         # "merge-annulus" | "merge-ring" | "solver"
    assumption_residuals: Dict[str, float] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "S_values": self.S_values, "gamma": self.gamma, "C3": self.C3,
            "C2": self.C2, "CT": self.CT, "D_k": self.D_k,
            "verdict": self.verdict, "method": self.method,
            "assumption_residuals": self.assumption_residuals,
            "warnings": self.warnings,
        }

    CSV_FIELDS = ("gamma", "C3", "C2", "CT", "verdict", "method", "max_residual")

    def csv_row(self) -> List[str]:
        mr = max(self.assumption_residuals.values(), default=0.0)
        return [f"{self.gamma!r}", f"{self.C3!r}", f"{self.C2!r}",
                f"{self.CT!r}", f"{self.verdict!r}", self.method, f"{mr!r}"]


def tee_dense(rho: DensityMatrix, regions: Dict[str, Sequence[str]],
              split: Optional[Tuple[Sequence[str], Sequence[str]]] = None,
              ring: Optional[Sequence[Sequence[str]]] = None,
              rng: Optional[np.random.Generator] = None,
              tol: float = 1e-7, solver_tol: float = 1e-9,
              max_iter: int = 5000) -> CorrelationReport:
    """Full dense correlation report for a tripartition.

    C3 is computed through the annulus merge (if ``split`` is given), the
    six-fold ring merge (if ``ring`` is given), or the iterative solver as
    a fallback when merge preconditions fail.
    """
    a, b, c = [list(regions[x]) for x in "ABC"]
    s = lambda labs: von_neumann_entropy(partial_trace(rho, labs))
    S = {
        "A": s(a), "B": s(b), "C": s(c),
        "AB": s(a + b), "BC": s(b + c), "CA": s(c + a),
        "ABC": von_neumann_entropy(rho),
    }
    gamma = (S["AB"] + S["BC"] + S["CA"]
             - S["A"] - S["B"] - S["C"] - S["ABC"])
    mi_ab = mutual_information(rho, a, b)
    mi_bc = mutual_information(rho, b, c)
    mi_ca = mutual_information(rho, c, a)
    c2 = mi_ab + mi_bc + mi_ca
    ct = total_correlation(rho, [a, b, c])

    parts = [a, b, c]
    notes: List[str] = []
    residuals: Dict[str, float] = {
        "I(A:C)": mutual_information(rho, a, c),
        "I(A:C|B)": conditional_mutual_information(rho, a, b, c),
    }
    if residuals["I(A:C)"] > tol:
        notes.append("A and C are correlated; the annulus merge assumptions "
                     "do not apply as stated")
    tilde_entropy = None
    method = "solver"
    if split is not None:
        try:
            merged = merge_annulus(rho, list(split[0]), list(split[1]),
                                   a_labels=a, c_labels=c, tol=tol)
            tilde_entropy = von_neumann_entropy(merged)
            method = "merge-annulus"
        except AssumptionViolated as exc:
            residuals.update(exc.quantities)
            notes.append(f"annulus merge preconditions failed: {exc}")
    elif ring is not None:
        try:
            rm = merge_ring(rho, ring, rng=rng, tol=tol)
            tilde_entropy = von_neumann_entropy(rm.state)
            method = "merge-ring"
        except AssumptionViolated as exc:
            residuals.update(exc.quantities)
            notes.append(f"ring merge preconditions failed: {exc}")
    if tilde_entropy is None:
        cons = MarginalConstraintSet.from_state(rho, 2, parts)
        tilde = iterative_maxent(cons, tol=solver_tol, max_iter=max_iter)
        tilde_entropy = von_neumann_entropy(tilde)
        method = "solver"
    c3 = tilde_entropy - S["ABC"]
    if -1e-6 <= c3 < 0.0:
        notes.append(f"clamped C3 {c3:.2e} to 0")
        c3 = 0.0

    d1 = (S["A"] + S["B"] + S["C"]) - S["ABC"]
    d2 = c3  # S(tilde) - S(rho)
    d_k = [d1, d2, 0.0]
    return CorrelationReport(
        S_values=S, gamma=gamma, C3=c3, C2=c2, CT=ct, D_k=d_k,
        verdict=abs(gamma - c3), method=method,
        assumption_residuals=residuals, warnings=notes)


# ----------------------------------------------------------------------
# explicit two-region Hamiltonians

@dataclass
class TwoLocalHamiltonian:
    """Sum of terms acting on pairs of regions; log-arguments are stored
    and the epsilon regularization happens at exponentiation time."""

    layout: FactorLayout
    terms: List[Tuple[Tuple[str, ...], np.ndarray]]

    def gibbs(self, eps: float) -> DensityMatrix:
        """normalize(exp(sum log_eps(term)))."""
        h = np.zeros((self.layout.total_dim,) * 2, dtype=complex)
        for labs, m in self.terms:
            h += embed_operator(log_eps(m, eps), list(labs), self.layout)
        return _expm_normalized(h, self.layout)


def two_local_hamiltonian(rho_tilde: DensityMatrix, b_labels: Sequence[str],
                          rng: Optional[np.random.Generator] = None,
                          a_labels: Optional[Sequence[str]] = None,
                          c_labels: Optional[Sequence[str]] = None,
                          dec: Optional[MarkovDecomposition] = None
                          ) -> TwoLocalHamiltonian:
    """Two-region Hamiltonian whose regularized Gibbs states converge to
    a merged (direct-sum product) state as eps -> 0.

    The AB term is the direct sum of p_i * left_i on A (x) B_i^L, the BC
    term the direct sum of right_i on B_i^R (x) C.
    """
    b_labels = list(b_labels)
    if a_labels is None or c_labels is None:
        a_labels, c_labels = _infer_abc(rho_tilde.layout, b_labels)
    if dec is None:
        dec = markov_decompose(rho_tilde, b_labels, rng=rng,
                               a_labels=a_labels, c_labels=c_labels)
    d_a = math.prod(d for _, d in dec.a_sites)
    d_b = math.prod(d for _, d in dec.b_sites)
    d_c = math.prod(d for _, d in dec.c_sites)
    m_ab = np.zeros((d_a * d_b, d_a * d_b), dtype=complex)
    m_bc = np.zeros((d_b * d_c, d_b * d_c), dtype=complex)
    for blk in dec.blocks:
        emb_ab = np.kron(np.eye(d_a), blk.iso)
        l_op = np.kron(blk.prob * blk.left.data, np.eye(blk.dr))
        m_ab += emb_ab @ l_op @ emb_ab.conj().T
        emb_bc = np.kron(blk.iso, np.eye(d_c))
        r_op = np.kron(np.eye(blk.dl), blk.right.data)
        m_bc += emb_bc @ r_op @ emb_bc.conj().T
    order = list(a_labels) + b_labels + list(c_labels)
    layout = rho_tilde.layout.reordered(order) if list(rho_tilde.layout.labels) != order \
        else rho_tilde.layout
    return TwoLocalHamiltonian(
        layout=rho_tilde.layout,
        terms=[(tuple(a_labels) + tuple(b_labels), m_ab),
               (tuple(b_labels) + tuple(c_labels), m_bc)])
