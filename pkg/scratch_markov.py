import numpy as np
from topocorr.layout import FactorLayout
from topocorr.states import DensityMatrix, random_density_matrix, tensor, ghz
from topocorr.markov import (petz_recovery, apply_recovery, is_qms,
                             markov_decompose, reconstruct, random_qms)
from topocorr.entropy import trace_distance

rng = np.random.default_rng(42)

# 1. Petz on random two-qubit rho_BC
rho_bc = random_density_matrix(FactorLayout.qubits(["B", "C"]), rng)
rho_b = random_density_matrix(FactorLayout.qubits(["B"]), rng)
from topocorr.states import partial_trace
rb = partial_trace(rho_bc, ["B"])
rm = petz_recovery(rho_bc, rb)
print("TP:", rm.is_trace_preserving(), "CP:", rm.is_completely_positive())
rec = apply_recovery(rm, rb)
print("Lambda(rho_B) = rho_BC err:", trace_distance(rec, rho_bc))

# product recovery: rho_BC = rho_B (x) rho_C -> Lambda(X) = X (x) rho_C
rc = random_density_matrix(FactorLayout.qubits(["C"]), rng)
prod = tensor(rho_b, rc)
rm2 = petz_recovery(prod, rho_b)
x = random_density_matrix(FactorLayout.qubits(["B"]), rng)
out = apply_recovery(rm2, x)
expect = tensor(x, rc)
print("product recovery err:", trace_distance(out, expect))

# 2. random QMS decompose round trip
rho, dec_truth = random_qms(rng, block_dims=((2, 1), (1, 2)))
ok, cmi = is_qms(rho, ["B"])
print("QMS cmi:", cmi, "ok:", ok)
dec = markov_decompose(rho, ["B"], rng=rng)
print("block dims:", sorted(dec.block_dims), "truth:", sorted(dec_truth.block_dims))
print("round trip err:", trace_distance(reconstruct(dec), rho))

# recovery on QMS: (id (x) Lambda)(rho_AB) = rho
rho_ab = partial_trace(rho, ["A", "B"])
rho_bc2 = partial_trace(rho, ["B", "C"])
rb2 = partial_trace(rho, ["B"])
rm3 = petz_recovery(rho_bc2, rb2)
rec3 = apply_recovery(rm3, rho_ab)
print("QMS petz merge err:", trace_distance(rec3, rho))

# GHZ is not QMS; recovery fails by >= 0.1
g = ghz(3)
gab = partial_trace(g, ["A", "B"])
gbc = partial_trace(g, ["B", "C"])
gb = partial_trace(g, ["B"])
rm4 = petz_recovery(gbc, gb)
rec4 = apply_recovery(rm4, gab)
print("GHZ recovery error:", trace_distance(rec4, g))

# classical middle: 1-dim blocks
probs = rng.dirichlet(np.ones(2))
rho_cl = None
from topocorr.states import classical_state
import itertools
# p(a) * delta_b * p(c|b): build sum_b p_b rho_A^b (x) |b><b| (x) rho_C^b
acc = np.zeros((8, 8), dtype=complex)
for b in range(2):
    ra = random_density_matrix(FactorLayout.qubits(["A"]), rng)
    rc2 = random_density_matrix(FactorLayout.qubits(["C"]), rng)
    eb = np.zeros((2, 2)); eb[b, b] = 1
    acc += probs[b] * np.kron(np.kron(ra.data, eb), rc2.data)
rho_cl = DensityMatrix(FactorLayout.qubits(["A", "B", "C"]), acc)
dec_cl = markov_decompose(rho_cl, ["B"], rng=rng)
print("classical middle dims:", sorted(dec_cl.block_dims))

# rho_AB (x) rho_C: single block d_r = 1
rab = random_density_matrix(FactorLayout.qubits(["A", "B"]), rng)
rc3 = random_density_matrix(FactorLayout.qubits(["C"]), rng)
rho_p = tensor(rab, rc3)
dec_p = markov_decompose(rho_p, ["B"], rng=rng)
print("rho_AB (x) rho_C dims:", dec_p.block_dims)

# rho_A (x) rho_BC: single block d_l = 1
rbc = random_density_matrix(FactorLayout.qubits(["B", "C"]), rng)
ra4 = random_density_matrix(FactorLayout.qubits(["A"]), rng)
rho_q = tensor(ra4, rbc)
dec_q = markov_decompose(rho_q, ["B"], rng=rng)
print("rho_A (x) rho_BC dims:", dec_q.block_dims)

# adversarial: rho_AL classically correlated in a basis skew to rho_L
# rho_AL = sum_m G_m (x) sqrt(rho_L)|e_m><e_m|sqrt(rho_L) with rho_L non-diagonal
theta = 0.7
u = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
rho_l = u @ np.diag([0.7, 0.3]) @ u.T
sq = u @ np.diag(np.sqrt([0.7, 0.3])) @ u.T
acc = np.zeros((4, 4), dtype=complex)
for m in range(2):
    gm = random_density_matrix(FactorLayout.qubits(["A"]), rng)
    em = np.zeros((2, 2)); em[m, m] = 1.0
    acc += np.kron(gm.data, sq @ em @ sq)
rho_al = DensityMatrix(FactorLayout.of([("A", 2), ("B", 2)]), acc)
rho_adv = tensor(rho_al, random_density_matrix(FactorLayout.qubits(["C"]), rng))
dec_adv = markov_decompose(rho_adv, ["B"], rng=rng)
print("adversarial dims:", dec_adv.block_dims,
      "err:", trace_distance(reconstruct(dec_adv), rho_adv))
