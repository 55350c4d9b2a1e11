"""Approximate merges and the delta-relaxed correlation bracket.

When the zero-correlation assumptions only hold up to a residual eps, the
recovery-map merge still lands delta-close to the constrained marginal set
(delta = 6 sqrt(1 - 2^-eps) with eps in bits), and the entropy gap of the
merged state brackets the smoothed third-order correlation against the
conditional mutual information through an explicit f(delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .entropy import (conditional_mutual_information, eta,
                      mutual_information, trace_distance,
                      von_neumann_entropy)
from .errors import AssumptionViolated
from .markov import apply_channel, apply_recovery, petz_recovery
from .maxent import _infer_abc
from .states import DensityMatrix, partial_trace

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ApproxParams:
    """eps -> delta -> f(delta) bookkeeping for one split geometry.

    ``epsilon`` is the worst assumption residual in nats; the delta
    formula exponentiates in bits (2^-eps_bits = e^-eps_nats).
    f(delta) = 2 * (2 delta ln(dA dB^2 dC) + 3 eta(2 delta)
               + 7 sqrt(delta) ln dA), all in nats.
    """

    epsilon: float
    delta: float
    d_a: int
    d_b: int
    d_c: int
    f_delta: float

    @classmethod
    def from_epsilon(cls, eps_nats: float, d_a: int, d_b: int, d_c: int
                     ) -> "ApproxParams":
        eps_nats = max(eps_nats, 0.0)
        delta = 6.0 * math.sqrt(max(1.0 - math.exp(-eps_nats), 0.0))
        return cls(epsilon=eps_nats, delta=delta, d_a=d_a, d_b=d_b, d_c=d_c,
                   f_delta=cls.f_of_delta(delta, d_a, d_b, d_c))

    @staticmethod
    def f_of_delta(delta: float, d_a: int, d_b: int, d_c: int) -> float:
        if delta <= 0.0:
            return 0.0
        return 2.0 * (2.0 * delta * math.log(d_a * d_b ** 2 * d_c)
                      + 3.0 * eta(2.0 * delta)
                      + 7.0 * math.sqrt(delta) * math.log(d_a))


def assumption_residuals(rho: DensityMatrix, b1_labels: Sequence[str],
                         b2_labels: Sequence[str],
                         a_labels: Optional[Sequence[str]] = None,
                         c_labels: Optional[Sequence[str]] = None
                         ) -> Tuple[float, float, float]:
    """(I(A:B2C), I(A:B2|B1), I(B1:C|B2)) in nats, clamped at 0."""
    b1_labels, b2_labels = list(b1_labels), list(b2_labels)
    if a_labels is None or c_labels is None:
        a_labels, c_labels = _infer_abc(rho.layout, b1_labels + b2_labels)
    a_labels, c_labels = list(a_labels), list(c_labels)
    r1 = mutual_information(rho, a_labels, b2_labels + c_labels)
    r2 = conditional_mutual_information(rho, a_labels, b1_labels, b2_labels)
    r3 = conditional_mutual_information(rho, b1_labels, b2_labels, c_labels)
    return (max(r1, 0.0), max(r2, 0.0), max(r3, 0.0))


def approx_merge(rho: DensityMatrix, b1_labels: Sequence[str],
                 b2_labels: Sequence[str],
                 a_labels: Optional[Sequence[str]] = None,
                 c_labels: Optional[Sequence[str]] = None,
                 ) -> Tuple[DensityMatrix, float]:
    """Recovery-map merge without the exactness gate.

    Returns the merged state and the worst two-region marginal deviation;
    raises if that deviation exceeds the analytic delta (which would mean
    the recovery map underperformed the guarantee on this input).
    """
    b1_labels, b2_labels = list(b1_labels), list(b2_labels)
    if a_labels is None or c_labels is None:
        a_labels, c_labels = _infer_abc(rho.layout, b1_labels + b2_labels)
    a_labels, c_labels = list(a_labels), list(c_labels)
    res = assumption_residuals(rho, b1_labels, b2_labels, a_labels, c_labels)
    eps = max(res)
    params = ApproxParams.from_epsilon(eps, rho.layout.dim_of(a_labels),
                                       rho.layout.dim_of(b1_labels + b2_labels),
                                       rho.layout.dim_of(c_labels))
    rho_ab = partial_trace(rho, a_labels + b1_labels + b2_labels)
    rho_b2c = partial_trace(rho, b2_labels + c_labels)
    rho_b2 = partial_trace(rho, b2_labels)
    merged = apply_recovery(petz_recovery(rho_b2c, rho_b2), rho_ab)
    merged = merged.permuted(list(rho.layout.labels))
    b_labels = b1_labels + b2_labels
    deltas = []
    for labs in (a_labels + b_labels, b_labels + c_labels, a_labels + c_labels):
        deltas.append(trace_distance(partial_trace(merged, labs),
                                     partial_trace(rho, labs)))
    achieved = max(deltas)
    if achieved > params.delta + 1e-9:
        raise AssumptionViolated(
            f"merged marginals deviate by {achieved:.3e} > delta "
            f"{params.delta:.3e}",
            quantities={"delta_achieved": achieved, "delta": params.delta})
    return merged, achieved


@dataclass
class BoundReport:
    """One point of the delta bracket, with every intermediate term."""

    residuals: Dict[str, float]
    epsilon: float
    delta: float
    delta_achieved: float
    f_delta: float
    fannes_term: float
    eta_term: float
    recovery_term: float
    C_hat: float                 # S(merged) - S(rho), lower bound on C3_delta
    cmi: float                   # I(A:C|B) of the input
    cmi_merged: float            # I(A:C|B) of the merged state
    cmi_merged_bound: float      # 7 ln(d_A) sqrt(delta)
    lower_ok: bool               # C_hat >= cmi - f/2
    upper_ok: bool               # cmi >= C_hat - f
    recovery_cmi_ok: bool        # flagged, not asserted

    def to_json_dict(self) -> dict:
        return {
            "residuals": self.residuals, "epsilon": self.epsilon,
            "delta": self.delta, "delta_achieved": self.delta_achieved,
            "f_delta": self.f_delta, "fannes_term": self.fannes_term,
            "eta_term": self.eta_term, "recovery_term": self.recovery_term,
            "C_hat": self.C_hat, "cmi": self.cmi,
            "cmi_merged": self.cmi_merged,
            "cmi_merged_bound": self.cmi_merged_bound,
            "lower_ok": self.lower_ok, "upper_ok": self.upper_ok,
            "recovery_cmi_ok": self.recovery_cmi_ok,
        }


def bound_check(rho: DensityMatrix, b1_labels: Sequence[str],
                b2_labels: Sequence[str],
                a_labels: Optional[Sequence[str]] = None,
                c_labels: Optional[Sequence[str]] = None) -> BoundReport:
    """Evaluate both one-sided inequalities of the delta bracket."""
    b1_labels, b2_labels = list(b1_labels), list(b2_labels)
    if a_labels is None or c_labels is None:
        a_labels, c_labels = _infer_abc(rho.layout, b1_labels + b2_labels)
    a_labels, c_labels = list(a_labels), list(c_labels)
    r = assumption_residuals(rho, b1_labels, b2_labels, a_labels, c_labels)
    residuals = {"I(A:B2C)": r[0], "I(A:B2|B1)": r[1], "I(B1:C|B2)": r[2]}
    eps = max(r)
    d_a = rho.layout.dim_of(a_labels)
    d_b = rho.layout.dim_of(b1_labels + b2_labels)
    d_c = rho.layout.dim_of(c_labels)
    params = ApproxParams.from_epsilon(eps, d_a, d_b, d_c)
    merged, achieved = approx_merge(rho, b1_labels, b2_labels,
                                    a_labels, c_labels)
    c_hat = von_neumann_entropy(merged) - von_neumann_entropy(rho)
    b_labels = b1_labels + b2_labels
    cmi = conditional_mutual_information(rho, a_labels, b_labels, c_labels)
    cmi_merged = conditional_mutual_information(merged, a_labels, b_labels,
                                                c_labels)
    cmi_bound = 7.0 * math.log(d_a) * math.sqrt(params.delta)
    f = params.f_delta
    delta = params.delta
    return BoundReport(
        residuals=residuals, epsilon=eps, delta=delta,
        delta_achieved=achieved, f_delta=f,
        fannes_term=2.0 * delta * math.log(d_a * d_b ** 2 * d_c),
        eta_term=3.0 * eta(2.0 * delta),
        recovery_term=7.0 * math.sqrt(delta) * math.log(d_a),
        C_hat=c_hat, cmi=cmi, cmi_merged=cmi_merged,
        cmi_merged_bound=cmi_bound,
        lower_ok=bool(c_hat >= cmi - 0.5 * f - 1e-9),
        upper_ok=bool(cmi >= c_hat - f - 1e-9),
        recovery_cmi_ok=bool(cmi_merged <= cmi_bound + 1e-9),
    )


def depolarize(rho: DensityMatrix, p: float,
               labels: Optional[Sequence[str]] = None) -> DensityMatrix:
    """Independent single-qubit depolarizing noise on each label."""
    labels = list(labels) if labels is not None else list(rho.layout.labels)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]])
    z = np.array([[1, 0], [0, -1]], dtype=complex)
    kraus = [math.sqrt(1 - p) * np.eye(2), math.sqrt(p / 3) * x,
             math.sqrt(p / 3) * y, math.sqrt(p / 3) * z]
    out = rho
    original = list(rho.layout.labels)
    for lab in labels:
        if rho.layout.dims[rho.layout.position(lab)] != 2:
            raise ValueError("depolarize expects qubit factors")
        out = apply_channel(out, kraus, [lab], [(lab, 2)])
    return out.permuted(original)
