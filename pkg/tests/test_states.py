import math

import numpy as np
import pytest

from topocorr.errors import (DuplicateLabel, InvalidState, OverlappingRegions,
                             UnknownSubsystem)
from topocorr.layout import FactorLayout, embed_operator, permute_matrix
from topocorr.states import (DensityMatrix, bell_pair, from_json_dict, ghz,
                             maximally_mixed, partial_trace, pure,
                             random_density_matrix, tensor, to_json_dict,
                             w_state)
from topocorr.entropy import trace_distance

LN2 = math.log(2.0)


def test_layout_invariants():
    lay = FactorLayout.of([("A", 2), ("B", 3), ("C", 2)])
    assert lay.total_dim == 12
    assert lay.labels == ("A", "B", "C")
    with pytest.raises(DuplicateLabel):
        FactorLayout.of([("A", 2), ("A", 2)])
    with pytest.raises(UnknownSubsystem):
        lay.position("X")


def test_density_matrix_validation():
    lay = FactorLayout.qubits(["A"])
    with pytest.raises(InvalidState):
        DensityMatrix(lay, np.array([[1.0, 1.0], [0.0, 0.0]]))  # not hermitian
    with pytest.raises(InvalidState):
        DensityMatrix(lay, np.diag([0.9, 0.2]))  # trace != 1
    with pytest.raises(InvalidState):
        DensityMatrix(lay, np.diag([1.5, -0.5]))  # negative eigenvalue
    rho = DensityMatrix(lay, np.diag([0.5, 0.5]))
    with pytest.raises(AttributeError):
        rho.data = np.eye(2)


def test_tensor_identity_case():
    a = maximally_mixed(FactorLayout.qubits(["A"]))
    b = maximally_mixed(FactorLayout.qubits(["B"]))
    ab = tensor(a, b)
    assert np.allclose(ab.data, np.eye(4) / 4)


def test_tensor_pure_states():
    zero = pure(FactorLayout.qubits(["A"]), [1, 0])
    one = pure(FactorLayout.qubits(["B"]), [0, 1])
    prod = tensor(zero, one)
    expect = np.zeros((4, 4))
    expect[1, 1] = 1.0
    assert np.allclose(prod.data, expect)


def test_tensor_trace_and_collision():
    rng = np.random.default_rng(0)
    a = random_density_matrix(FactorLayout.qubits(["A"]), rng)
    b = random_density_matrix(FactorLayout.of([("B", 3)]), rng)
    ab = tensor(a, b)
    assert abs(np.trace(ab.data) - 1.0) < 1e-12
    with pytest.raises(DuplicateLabel):
        tensor(a, random_density_matrix(FactorLayout.qubits(["A"]), rng))


def test_partial_trace_bell():
    rho = bell_pair()
    a = partial_trace(rho, ["A"])
    assert np.allclose(a.data, np.eye(2) / 2)


def test_partial_trace_product():
    rng = np.random.default_rng(1)
    a = random_density_matrix(FactorLayout.qubits(["A"]), rng)
    b = random_density_matrix(FactorLayout.qubits(["B"]), rng)
    ab = tensor(a, b)
    assert trace_distance(partial_trace(ab, ["A"]), a) < 1e-12


def test_nested_partial_trace_consistency():
    # tracing in two steps equals tracing in one, on random 3-qubit states
    rng = np.random.default_rng(2)
    lay = FactorLayout.qubits(["A", "B", "C"])
    for _ in range(10):
        rho = random_density_matrix(lay, rng)
        two_step = partial_trace(partial_trace(rho, ["A", "B"]), ["A"])
        one_step = partial_trace(rho, ["A"])
        assert trace_distance(two_step, one_step) < 1e-12


def test_partial_trace_tensor_roundtrip():
    rng = np.random.default_rng(3)
    a = random_density_matrix(FactorLayout.of([("A", 3)]), rng)
    b = random_density_matrix(FactorLayout.qubits(["B"]), rng)
    back = partial_trace(tensor(a, b), ["A"])
    assert np.max(np.abs(back.data - a.data)) < 1e-12


def test_partial_trace_unknown_label():
    with pytest.raises(UnknownSubsystem):
        partial_trace(bell_pair(), ["Z"])


def test_permute_and_embed():
    rng = np.random.default_rng(4)
    lay = FactorLayout.of([("A", 2), ("B", 3), ("C", 2)])
    rho = random_density_matrix(lay, rng)
    back = rho.permuted(["C", "A", "B"]).permuted(["A", "B", "C"])
    assert np.allclose(back.data, rho.data)
    # embedding is consistent with expectation values
    op = rng.standard_normal((3, 3))
    op = op + op.T
    full = embed_operator(op, ["B"], lay)
    direct = np.trace(full @ rho.data)
    marg = partial_trace(rho, ["B"])
    assert abs(direct - np.trace(op @ marg.data)) < 1e-10


def test_grouped_sites():
    g6 = tensor(ghz(3, ["a1", "b1", "c1"]), ghz(3, ["a2", "b2", "c2"]))
    grouped = g6.grouped({"A": ["a1", "a2"], "B": ["b1", "b2"],
                          "C": ["c1", "c2"]})
    assert grouped.layout.dims == (4, 4, 4)
    assert abs(np.trace(grouped.data) - 1) < 1e-12


def test_ghz_and_w():
    g = ghz(3)
    assert abs(g.data[0, 0] - 0.5) < 1e-12 and abs(g.data[7, 7] - 0.5) < 1e-12
    w = w_state(3)
    diag = np.diag(w.data).real
    assert np.allclose(sorted(diag)[-3:], [1 / 3] * 3)


def test_json_roundtrip():
    rng = np.random.default_rng(5)
    rho = random_density_matrix(FactorLayout.of([("A", 2), ("B", 3)]), rng)
    back = from_json_dict(to_json_dict(rho))
    assert back.layout == rho.layout
    assert np.max(np.abs(back.data - rho.data)) < 1e-14
