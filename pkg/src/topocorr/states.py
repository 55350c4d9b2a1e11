"""Dense density matrices with validated invariants, plus standard states."""

from __future__ import annotations

import base64
import json
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DuplicateLabel, InvalidState, UnknownSubsystem
from .layout import FactorLayout, partial_trace_matrix, permute_matrix

TOL_HERM = 1e-10
TOL_TRACE = 1e-10
TOL_PSD = 1e-10
EIG_CUTOFF = 1e-12  # relative spectral cutoff shared across the package


class DensityMatrix:
    """Hermitian, PSD, unit-trace matrix tied to a FactorLayout.

    Constructors symmetrize (M + M^dag)/2 before validating, to absorb the
    roundoff left by Kraus applications.  Instances are immutable; the
    eigendecomposition is computed once and cached.
    """

    __slots__ = ("layout", "data", "_eig")

    def __init__(self, layout: FactorLayout, data: np.ndarray):
        data = np.asarray(data, dtype=complex)
        d = layout.total_dim
        if data.shape != (d, d):
            raise InvalidState(f"shape {data.shape} != layout dim {d}")
        herm_defect = np.max(np.abs(data - data.conj().T)) if d else 0.0
        if herm_defect > TOL_HERM:
            raise InvalidState(f"not Hermitian: defect {herm_defect:.3e}")
        data = 0.5 * (data + data.conj().T)
        tr = np.trace(data).real
        if abs(tr - 1.0) > TOL_TRACE:
            raise InvalidState(f"trace {tr!r} != 1")
        evals, evecs = np.linalg.eigh(data)
        if evals[0] < -TOL_PSD:
            raise InvalidState(f"negative eigenvalue {evals[0]:.3e}")
        data.flags.writeable = False
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "_eig", (evals, evecs))

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eig[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eig[1]

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def __repr__(self):
        sites = ", ".join(f"{lab}:{d}" for lab, d in self.layout.sites)
        return f"DensityMatrix({sites})"

    # ------------------------------------------------------------------
    @classmethod
    def from_vector(cls, layout: FactorLayout, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(layout, np.outer(psi, psi.conj()))

    def permuted(self, new_order: Sequence[str]) -> "DensityMatrix":
        return DensityMatrix(self.layout.reordered(new_order),
                             permute_matrix(self.data, self.layout, new_order))

    def grouped(self, groups: Dict[str, Sequence[str]]) -> "DensityMatrix":
        """Merge labels into composite sites (e.g. pair qubits into parties).

        ``groups`` maps new labels to ordered lists of existing labels; the
        groups must cover the layout exactly.
        """
        flat = [lab for labs in groups.values() for lab in labs]
        if sorted(flat) != sorted(self.layout.labels):
            raise UnknownSubsystem("groups must cover the layout exactly")
        reordered = self.permuted(flat)
        sites = []
        for new_lab, labs in groups.items():
            d = math.prod(self.layout.dims[self.layout.position(l)] for l in labs)
            sites.append((new_lab, d))
        return DensityMatrix(FactorLayout.of(sites), reordered.data)


def tensor(a: DensityMatrix, b: DensityMatrix) -> DensityMatrix:
    """Kronecker product; layouts concatenate, labels must not collide."""
    if set(a.layout.labels) & set(b.layout.labels):
        raise DuplicateLabel("tensor factors share labels")
    return DensityMatrix(a.layout.concat(b.layout), np.kron(a.data, b.data))


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """RDM on ``keep`` (sites stay in layout order)."""
    data, sub = partial_trace_matrix(rho.data, rho.layout, keep)
    return DensityMatrix(sub, data)


# ----------------------------------------------------------------------
# standard states

def maximally_mixed(layout: FactorLayout) -> DensityMatrix:
    d = layout.total_dim
    return DensityMatrix(layout, np.eye(d) / d)


def pure(layout: FactorLayout, amplitudes: Sequence[complex]) -> DensityMatrix:
    return DensityMatrix.from_vector(layout, np.asarray(amplitudes))


def ghz(n: int = 3, labels: Optional[Sequence[str]] = None) -> DensityMatrix:
    labels = labels or [chr(ord("A") + i) for i in range(n)]
    layout = FactorLayout.qubits(labels)
    psi = np.zeros(2 ** n)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return DensityMatrix.from_vector(layout, psi)


def w_state(n: int = 3, labels: Optional[Sequence[str]] = None) -> DensityMatrix:
    labels = labels or [chr(ord("A") + i) for i in range(n)]
    layout = FactorLayout.qubits(labels)
    psi = np.zeros(2 ** n)
    for i in range(n):
        psi[1 << (n - 1 - i)] = 1 / math.sqrt(n)
    return DensityMatrix.from_vector(layout, psi)


def bell_pair(labels: Sequence[str] = ("A", "B")) -> DensityMatrix:
    layout = FactorLayout.qubits(labels)
    return DensityMatrix.from_vector(layout, np.array([1, 0, 0, 1]) / math.sqrt(2))


def classical_state(layout: FactorLayout, probs: np.ndarray) -> DensityMatrix:
    """Diagonal state from a joint probability table over the sites."""
    p = np.asarray(probs, dtype=float).reshape(-1)
    if abs(p.sum() - 1.0) > 1e-12 or (p < -1e-15).any():
        raise InvalidState("probabilities must be nonnegative and sum to 1")
    return DensityMatrix(layout, np.diag(p.astype(complex)))


def parity_flux_state(q0: float = 0.7,
                      mu0: Tuple[float, float] = (0.9, 0.1),
                      mu1: Tuple[float, float] = (0.2, 0.8)) -> DensityMatrix:
    """Three-bit state whose hidden parity a XOR b carries weight q0/1-q0
    and steers C's conditional distribution.

    All three 2-RDMs factor through p(a,b) alone, so the entropy maximizer
    with those marginals is rho_AB (x) rho_C; the gap to the actual state is
    the Holevo quantity of {mu0, mu1} with weights {q0, 1-q0}.  Used as the
    two-eigenvalue benchmark for the rate bound.
    """
    p = np.zeros((2, 2, 2))
    lam = {0: q0 / 2.0, 1: (1.0 - q0) / 2.0}
    mus = {0: mu0, 1: mu1}
    for a in range(2):
        for b in range(2):
            k = a ^ b
            for c in range(2):
                p[a, b, c] = lam[k] * mus[k][c]
    return classical_state(FactorLayout.qubits(["A", "B", "C"]), p)


def random_density_matrix(layout: FactorLayout, rng: np.random.Generator,
                          rank: Optional[int] = None) -> DensityMatrix:
    """Hilbert-Schmidt-style random state G G^dag / tr."""
    d = layout.total_dim
    r = rank or d
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    m = g @ g.conj().T
    return DensityMatrix(layout, m / np.trace(m).real)


def random_pure(layout: FactorLayout, rng: np.random.Generator) -> DensityMatrix:
    d = layout.total_dim
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return DensityMatrix.from_vector(layout, psi)


# ----------------------------------------------------------------------
# serialization: layout header + row-major (re, im) pairs

def to_json_dict(rho: DensityMatrix) -> dict:
    flat = rho.data.reshape(-1)
    return {
        "layout": [[lab, d] for lab, d in rho.layout.sites],
        "data": [[z.real, z.imag] for z in flat],
    }


def from_json_dict(obj: dict) -> DensityMatrix:
    layout = FactorLayout.of((lab, d) for lab, d in obj["layout"])
    d = layout.total_dim
    flat = np.array([complex(re, im) for re, im in obj["data"]])
    return DensityMatrix(layout, flat.reshape(d, d))


def save_json(rho: DensityMatrix, path: str) -> None:
    with open(path, "w") as f:
        json.dump(to_json_dict(rho), f)


def load_json(path: str) -> DensityMatrix:
    with open(path) as f:
        return from_json_dict(json.load(f))


def matrix_to_b64(m: np.ndarray) -> dict:
    """Compact base64 container used inside decomposition fixtures."""
    m = np.ascontiguousarray(m, dtype=np.complex128)
    return {"shape": list(m.shape), "b64": base64.b64encode(m.tobytes()).decode()}


def matrix_from_b64(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["b64"])
    return np.frombuffer(raw, dtype=np.complex128).reshape(obj["shape"]).copy()
