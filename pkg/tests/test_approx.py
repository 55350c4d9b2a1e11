import math

import numpy as np
import pytest

from topocorr.approx import (ApproxParams, approx_merge, assumption_residuals,
                             bound_check, depolarize)
from topocorr.entropy import trace_distance, von_neumann_entropy
from topocorr.layout import FactorLayout, embed_operator
from topocorr.markov import apply_recovery, petz_recovery
from topocorr.maxent import merge_annulus
from topocorr.states import (DensityMatrix, partial_trace,
                             random_density_matrix, tensor)

LN2 = math.log(2.0)


def _split_qms(rng):
    from topocorr.markov import random_chain_qms
    rho, *_ = random_chain_qms(rng)
    return rho


def _rotated(rho, strength, rng):
    """Weak global rotation by a random two-region Hamiltonian: creates
    genuinely positive assumption residuals, unlike strictly local noise."""
    d = rho.dim
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = strength * (g + g.conj().T)
    evals, evecs = np.linalg.eigh(h)
    u = (evecs * np.exp(1j * evals)) @ evecs.conj().T
    return DensityMatrix(rho.layout, u @ rho.data @ u.conj().T)


def test_params_delta_formula():
    p = ApproxParams.from_epsilon(0.0, 2, 4, 2)
    assert p.delta == 0.0 and p.f_delta == 0.0
    eps = 0.01
    p = ApproxParams.from_epsilon(eps, 2, 4, 2)
    # exponentiating in bits: 2^(-eps/ln 2) = e^(-eps)
    assert abs(p.delta - 6 * math.sqrt(1 - 2 ** (-eps / LN2))) < 1e-15
    assert abs(p.delta - 6 * math.sqrt(1 - math.exp(-eps))) < 1e-15


def test_f_delta_terms():
    d_a, d_b, d_c = 2, 4, 2
    delta = 0.05
    f = ApproxParams.f_of_delta(delta, d_a, d_b, d_c)
    expect = 2 * (2 * delta * math.log(d_a * d_b ** 2 * d_c)
                  + 3 * (-2 * delta * math.log(2 * delta))
                  + 7 * math.sqrt(delta) * math.log(d_a))
    assert abs(f - expect) < 1e-12


def test_f_delta_monotone_and_vanishing():
    grid = np.linspace(1e-6, 0.1, 80)
    vals = [ApproxParams.f_of_delta(d, 2, 16, 2) for d in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert ApproxParams.f_of_delta(1e-12, 2, 16, 2) < 1e-4


def test_residuals_product_zero():
    rng = np.random.default_rng(0)
    rho = tensor(tensor(random_density_matrix(FactorLayout.qubits(["A"]), rng),
                        tensor(random_density_matrix(FactorLayout.qubits(["B1"]), rng),
                               random_density_matrix(FactorLayout.qubits(["B2"]), rng))),
                 random_density_matrix(FactorLayout.qubits(["C"]), rng))
    r = assumption_residuals(rho, ["B1"], ["B2"])
    assert max(r) < 1e-9


def test_residuals_toric_exact_zero(lw_dense):
    rho, regions, split = lw_dense
    r = assumption_residuals(rho, split[0], split[1],
                             a_labels=regions["A"], c_labels=regions["C"])
    assert max(r) < 1e-9


def test_residuals_positive_under_perturbation(lw_dense):
    # strictly local depolarization cannot break a product split, so the
    # positive-residual check uses a weak global rotation and a noisy chain
    rho, regions, split = lw_dense
    rng = np.random.default_rng(1)
    rot = _rotated(rho, 0.02, rng)
    r = assumption_residuals(rot, split[0], split[1],
                             a_labels=regions["A"], c_labels=regions["C"])
    assert all(v > 1e-8 for v in r)
    # depolarizing the conditioning system of a Markov chain breaks it too
    chain = _split_qms(rng)
    noisy = depolarize(chain, 1e-3, labels=["B2"])
    r2 = assumption_residuals(noisy, ["B1a", "B1b"], ["B2"])
    assert r2[2] > 1e-9  # I(B1:C|B2) strictly positive


def test_depolarize_basics(lw_dense):
    rho, _, _ = lw_dense
    out = depolarize(rho, 0.01)
    assert out.layout == rho.layout
    assert von_neumann_entropy(out) > von_neumann_entropy(rho)
    with pytest.raises(ValueError):
        depolarize(random_density_matrix(FactorLayout.of([("X", 3)]),
                                         np.random.default_rng(0)), 0.01)


def test_approx_merge_exact_case(lw_dense):
    rho, regions, split = lw_dense
    merged, achieved = approx_merge(rho, split[0], split[1],
                                    a_labels=regions["A"],
                                    c_labels=regions["C"])
    assert achieved <= 1e-8
    exact = merge_annulus(rho, split[0], split[1], a_labels=regions["A"],
                          c_labels=regions["C"])
    assert trace_distance(merged, exact) < 1e-10


def test_approx_merge_product_ac():
    rng = np.random.default_rng(2)
    rho_a = random_density_matrix(FactorLayout.qubits(["A"]), rng)
    rho_bc = random_density_matrix(
        FactorLayout.of([("B1", 2), ("B2", 2), ("C", 2)]), rng)
    rho = tensor(rho_a, rho_bc)
    merged, achieved = approx_merge(rho, ["B1"], ["B2"])
    # rho_A (x) rho_B1B2C is recoverable from B2 only if the chain holds;
    # here we only assert the guarantee: deviation within the analytic delta
    r = assumption_residuals(rho, ["B1"], ["B2"])
    params = ApproxParams.from_epsilon(max(r), 2, 4, 2)
    assert achieved <= params.delta + 1e-9


def test_approx_merge_trivial_product():
    rng = np.random.default_rng(3)
    rho = tensor(tensor(random_density_matrix(FactorLayout.qubits(["A"]), rng),
                        tensor(random_density_matrix(FactorLayout.qubits(["B1"]), rng),
                               random_density_matrix(FactorLayout.qubits(["B2"]), rng))),
                 random_density_matrix(FactorLayout.qubits(["C"]), rng))
    merged, achieved = approx_merge(rho, ["B1"], ["B2"])
    assert achieved < 1e-9
    assert trace_distance(merged, rho) < 1e-9


def test_bound_check_exact_point(lw_dense):
    rho, regions, split = lw_dense
    br = bound_check(rho, split[0], split[1], a_labels=regions["A"],
                     c_labels=regions["C"])
    assert br.epsilon < 1e-9
    assert br.f_delta < 1e-3
    assert abs(br.C_hat - 2 * LN2) < 1e-8
    assert abs(br.cmi - 2 * LN2) < 1e-8
    assert br.lower_ok and br.upper_ok and br.recovery_cmi_ok


def test_bound_check_product_all_zero():
    rng = np.random.default_rng(4)
    rho = tensor(tensor(random_density_matrix(FactorLayout.qubits(["A"]), rng),
                        tensor(random_density_matrix(FactorLayout.qubits(["B1"]), rng),
                               random_density_matrix(FactorLayout.qubits(["B2"]), rng))),
                 random_density_matrix(FactorLayout.qubits(["C"]), rng))
    br = bound_check(rho, ["B1"], ["B2"])
    assert abs(br.C_hat) < 1e-8
    assert abs(br.cmi) < 1e-8
    assert br.lower_ok and br.upper_ok


def test_bound_check_depolarizing_sweep(lw_dense):
    rho, regions, split = lw_dense
    prev_chat = None
    for p in (0.0, 1e-4, 1e-3):
        noisy = depolarize(rho, p) if p else rho
        br = bound_check(noisy, split[0], split[1], a_labels=regions["A"],
                         c_labels=regions["C"])
        assert br.lower_ok and br.upper_ok
        assert br.delta_achieved <= br.delta + 1e-9
        if prev_chat is not None:
            assert br.C_hat <= prev_chat + 1e-12
        prev_chat = br.C_hat
    assert abs(prev_chat - 2 * LN2) < 0.1


def test_bound_check_rotated_family(lw_dense):
    # genuinely positive epsilon: the bracket must still close
    rho, regions, split = lw_dense
    rng = np.random.default_rng(5)
    for strength in (0.005, 0.02):
        rot = _rotated(rho, strength, rng)
        br = bound_check(rot, split[0], split[1], a_labels=regions["A"],
                         c_labels=regions["C"])
        assert br.epsilon > 1e-8
        assert br.delta > 0
        assert br.delta_achieved <= br.delta + 1e-9
        assert br.lower_ok and br.upper_ok
        # the merged-state CMI bound is checked with the Petz map and
        # flagged rather than asserted; record that the flag is present
        assert isinstance(br.recovery_cmi_ok, bool)


def test_bound_check_chain_family():
    rng = np.random.default_rng(6)
    chain = _split_qms(rng)
    for p in (1e-4, 1e-3):
        noisy = depolarize(chain, p)
        br = bound_check(noisy, ["B1a", "B1b"], ["B2"])
        assert br.lower_ok and br.upper_ok
        assert br.delta_achieved <= br.delta + 1e-9
