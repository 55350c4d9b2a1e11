import math

import numpy as np
import pytest

from topocorr.entropy import (Spectrum, conditional_mutual_information,
                              fidelity, mutual_information, relative_entropy,
                              spectral, total_correlation, trace_distance,
                              von_neumann_entropy)
from topocorr.errors import OverlappingRegions, SupportMismatch
from topocorr.layout import FactorLayout
from topocorr.states import (DensityMatrix, bell_pair, ghz, maximally_mixed,
                             pure, random_density_matrix, tensor)

LN2 = math.log(2.0)


def _diag(*p, labels=None):
    n = int(math.log2(len(p))) if labels is None else None
    lay = FactorLayout.of([("X", len(p))]) if labels is None \
        else FactorLayout.qubits(labels)
    return DensityMatrix(lay, np.diag(np.array(p, dtype=complex)))


def test_entropy_pure_state():
    assert von_neumann_entropy(pure(FactorLayout.qubits(["A"]), [1, 1])) < 1e-12


def test_entropy_maximally_mixed():
    assert abs(von_neumann_entropy(maximally_mixed(FactorLayout.qubits(["A"])))
               - LN2) < 1e-12


def test_entropy_hand_value():
    # -0.5 ln 0.5 - 2 * 0.25 ln 0.25 = 1.5 ln 2
    rho = _diag(0.5, 0.25, 0.25, 0.0, labels=["A", "B"])
    assert abs(von_neumann_entropy(rho) - 1.5 * LN2) < 1e-12


def test_relative_entropy_self():
    rng = np.random.default_rng(0)
    rho = random_density_matrix(FactorLayout.qubits(["A", "B"]), rng)
    assert abs(relative_entropy(rho, rho)) < 1e-10


def test_relative_entropy_pure_vs_mixed():
    zero = pure(FactorLayout.qubits(["A"]), [1, 0])
    mixed = maximally_mixed(FactorLayout.qubits(["A"]))
    assert abs(relative_entropy(zero, mixed) - LN2) < 1e-12


def test_relative_entropy_support_mismatch():
    zero = pure(FactorLayout.qubits(["A"]), [1, 0])
    one = pure(FactorLayout.qubits(["A"]), [0, 1])
    with pytest.raises(SupportMismatch):
        relative_entropy(zero, one)


def test_relative_entropy_nonnegative():
    rng = np.random.default_rng(1)
    lay = FactorLayout.qubits(["A", "B"])
    for _ in range(20):
        r, s = (random_density_matrix(lay, rng) for _ in range(2))
        assert relative_entropy(r, s) >= -1e-9


def test_pinsker():
    # S(rho||sigma) >= ||rho - sigma||_1^2 / 4 with the unnormalized norm
    rng = np.random.default_rng(2)
    lay = FactorLayout.qubits(["A", "B"])
    for _ in range(50):
        r, s = (random_density_matrix(lay, rng) for _ in range(2))
        assert relative_entropy(r, s) >= 0.25 * trace_distance(r, s) ** 2 - 1e-9


def test_mutual_information_bell():
    assert abs(mutual_information(bell_pair(), ["A"], ["B"]) - 2 * LN2) < 1e-12


def test_mutual_information_product_and_classical():
    rng = np.random.default_rng(3)
    prod = tensor(random_density_matrix(FactorLayout.qubits(["A"]), rng),
                  random_density_matrix(FactorLayout.qubits(["B"]), rng))
    assert abs(mutual_information(prod, ["A"], ["B"])) < 1e-9
    corr = _diag(0.5, 0.0, 0.0, 0.5, labels=["A", "B"])
    assert abs(mutual_information(corr, ["A"], ["B"]) - LN2) < 1e-12
    with pytest.raises(OverlappingRegions):
        mutual_information(corr, ["A"], ["A"])


def test_cmi_ghz():
    val = conditional_mutual_information(ghz(3), ["A"], ["B"], ["C"])
    assert abs(val - LN2) < 1e-12


def test_cmi_product():
    rng = np.random.default_rng(4)
    rho = tensor(tensor(random_density_matrix(FactorLayout.qubits(["A"]), rng),
                        random_density_matrix(FactorLayout.qubits(["B"]), rng)),
                 random_density_matrix(FactorLayout.qubits(["C"]), rng))
    assert abs(conditional_mutual_information(rho, ["A"], ["B"], ["C"])) < 1e-9


def test_cmi_markov_form():
    # direct-sum product states have exactly zero conditional MI
    from topocorr.markov import random_qms
    rng = np.random.default_rng(5)
    rho, _ = random_qms(rng, block_dims=((2, 1), (1, 2)))
    val = conditional_mutual_information(rho, ["A"], ["B"], ["C"])
    assert abs(val) < 1e-9


def test_strong_subadditivity_sample():
    rng = np.random.default_rng(6)
    lay = FactorLayout.qubits(["A", "B", "C"])
    for _ in range(100):
        rho = random_density_matrix(lay, rng)
        assert conditional_mutual_information(rho, ["A"], ["B"], ["C"]) >= -1e-9


def test_entropy_additivity():
    rng = np.random.default_rng(7)
    for _ in range(10):
        a = random_density_matrix(FactorLayout.qubits(["A"]), rng)
        b = random_density_matrix(FactorLayout.of([("B", 3)]), rng)
        s = von_neumann_entropy(tensor(a, b))
        assert abs(s - von_neumann_entropy(a) - von_neumann_entropy(b)) < 1e-9


def test_total_correlation_values():
    rng = np.random.default_rng(8)
    prod = tensor(tensor(random_density_matrix(FactorLayout.qubits(["A"]), rng),
                         random_density_matrix(FactorLayout.qubits(["B"]), rng)),
                  random_density_matrix(FactorLayout.qubits(["C"]), rng))
    assert abs(total_correlation(prod, [["A"], ["B"], ["C"]])) < 1e-9
    assert abs(total_correlation(ghz(3), [["A"], ["B"], ["C"]]) - 3 * LN2) < 1e-12
    assert abs(total_correlation(bell_pair(), [["A"], ["B"]]) - 2 * LN2) < 1e-12


def test_trace_distance_and_fidelity_extremes():
    zero = pure(FactorLayout.qubits(["A"]), [1, 0])
    one = pure(FactorLayout.qubits(["A"]), [0, 1])
    assert abs(trace_distance(zero, zero)) < 1e-12
    assert abs(fidelity(zero, zero) - 1.0) < 1e-12
    assert abs(trace_distance(zero, one) - 2.0) < 1e-12
    assert abs(fidelity(zero, one)) < 1e-12


def test_trace_distance_fidelity_hand_value():
    zero = pure(FactorLayout.qubits(["A"]), [1, 0])
    mixed = maximally_mixed(FactorLayout.qubits(["A"]))
    # eigenvalues of the difference are +-1/2
    assert abs(trace_distance(zero, mixed) - 1.0) < 1e-12
    assert abs(fidelity(zero, mixed) - 1 / math.sqrt(2)) < 1e-12


def test_fuchs_van_de_graaf():
    rng = np.random.default_rng(9)
    lay = FactorLayout.qubits(["A", "B"])
    for _ in range(25):
        r, s = (random_density_matrix(lay, rng) for _ in range(2))
        f = fidelity(r, s)
        assert trace_distance(r, s) <= 2 * math.sqrt(1 - f ** 2) + 1e-9


def test_spectral_flat():
    spec = spectral(maximally_mixed(FactorLayout.of([("X", 5)])))
    assert spec.distinct_count == 1
    assert spec.degeneracies == (5,)


def test_spectral_three_groups():
    rho = _diag(0.5, 0.3, 0.2, 0.0)
    spec = spectral(np.diag([0.5, 0.3, 0.2]), rel_tol=1e-8)
    assert spec.distinct_count == 3
    assert spec.degeneracies == (1, 1, 1)


def test_spectral_merges_near_degenerate():
    m = np.diag([0.4, 0.4 + 1e-12, 0.2])
    spec = spectral(m, rel_tol=1e-9)
    assert spec.distinct_count == 2
    assert spec.degeneracies[0] == 2
    # reconstruction from grouped projectors
    rebuilt = sum(lam * p for lam, p in zip(spec.eigenvalues, spec.projectors))
    assert np.max(np.abs(rebuilt - m)) < 1e-9


def test_spectrum_trace_identity():
    rng = np.random.default_rng(10)
    rho = random_density_matrix(FactorLayout.qubits(["A", "B"]), rng)
    spec = spectral(rho)
    total = sum(lam * d for lam, d in zip(spec.eigenvalues, spec.degeneracies))
    assert abs(total - 1.0) < 1e-9
    for p in spec.projectors:
        assert np.max(np.abs(p @ p - p)) < 1e-9
