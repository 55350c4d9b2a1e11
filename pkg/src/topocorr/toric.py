"""Exact stabilizer engine for the toric code.

Generators are stored bit-packed ((X|Z) halves of a 2n-bit int), so region
entropies reduce to GF(2) ranks and are exact integer multiples of ln 2.
This module is the ground-truth oracle for every dense computation in the
package.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import gf2
from .errors import DenseLimitExceeded, InvalidLattice, OverlappingRegions
from .layout import FactorLayout
from .states import DensityMatrix

LN2 = math.log(2.0)

DENSE_QUBIT_LIMIT = 12

_GEOMETRIES = ("KP-disk", "KP-annulus", "LW-annulus")

_PAULI_2X2 = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
    (1, 1): np.array([[0, -1], [1, 0]], dtype=complex),  # X @ Z
}


@dataclass(frozen=True)
class StabilizerTableau:
    """Commuting, independent Pauli generators of a stabilizer group.

    ``generators[i]`` packs the X half in bits [0, n) and the Z half in bits
    [n, 2n).  ``phases[i]`` is the exponent e of the i^e prefactor (0 for
    every toric-code generator used here).
    """

    n_qubits: int
    generators: Tuple[int, ...]
    phases: Tuple[int, ...]

    def __post_init__(self):
        n = self.n_qubits
        for i, g in enumerate(self.generators):
            for j in range(i + 1, len(self.generators)):
                if _symplectic(g, self.generators[j], n):
                    raise InvalidLattice(f"generators {i} and {j} anticommute")
        if gf2.rank(self.generators) != len(self.generators):
            raise InvalidLattice("generators are linearly dependent over GF(2)")

    @property
    def k(self) -> int:
        return len(self.generators)


def _symplectic(a: int, b: int, n: int) -> int:
    mask = (1 << n) - 1
    ax, az = a & mask, a >> n
    bx, bz = b & mask, b >> n
    return (gf2.popcount(ax & bz) + gf2.popcount(az & bx)) & 1


@dataclass(frozen=True)
class ToricCodeSpec:
    """Lx x Ly torus; qubits on edges (2*Lx*Ly of them).

    Horizontal edge h(x,y) has index y*Lx + x and joins vertices (x,y) and
    (x+1,y); vertical edge v(x,y) has index Lx*Ly + y*Lx + x and joins
    (x,y) and (x,y+1).  All coordinates are periodic.
    """

    Lx: int
    Ly: int

    def __post_init__(self):
        if self.Lx < 2 or self.Ly < 2:
            raise InvalidLattice("torus needs Lx, Ly >= 2")

    @property
    def n_qubits(self) -> int:
        return 2 * self.Lx * self.Ly

    def h(self, x: int, y: int) -> int:
        return (y % self.Ly) * self.Lx + (x % self.Lx)

    def v(self, x: int, y: int) -> int:
        return self.Lx * self.Ly + (y % self.Ly) * self.Lx + (x % self.Lx)

    def edge_endpoints(self, q: int) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        n = self.Lx * self.Ly
        if q < n:
            x, y = q % self.Lx, q // self.Lx
            return (x, y), ((x + 1) % self.Lx, y)
        q -= n
        x, y = q % self.Lx, q // self.Lx
        return (x, y), (x, (y + 1) % self.Ly)

    def star_edges(self, x: int, y: int) -> List[int]:
        return [self.h(x, y), self.h(x - 1, y), self.v(x, y), self.v(x, y - 1)]

    def plaquette_edges(self, x: int, y: int) -> List[int]:
        return [self.h(x, y), self.h(x, y + 1), self.v(x, y), self.v(x + 1, y)]


def toric_ground_state(spec: ToricCodeSpec) -> StabilizerTableau:
    """Tableau of the ground state fixed by two horizontal/vertical Z loops.

    Star (X) and plaquette (Z) generators each carry one global dependency,
    so one of each is dropped; the two logical Z strings on row 0 and
    column 0 complete a pure-state tableau of 2*Lx*Ly generators.
    """
    n = spec.n_qubits
    gens: List[int] = []
    for y in range(spec.Ly):
        for x in range(spec.Lx):
            if (x, y) == (0, 0):
                continue  # product of all stars is identity
            g = 0
            for q in spec.star_edges(x, y):
                g |= 1 << q  # X bits
            gens.append(g)
    for y in range(spec.Ly):
        for x in range(spec.Lx):
            if (x, y) == (0, 0):
                continue  # product of all plaquettes is identity
            g = 0
            for q in spec.plaquette_edges(x, y):
                g |= 1 << (n + q)  # Z bits
            gens.append(g)
    z1 = 0
    for x in range(spec.Lx):
        z1 |= 1 << (n + spec.h(x, 0))
    z2 = 0
    for y in range(spec.Ly):
        z2 |= 1 << (n + spec.v(0, y))
    gens.extend([z1, z2])
    tab = StabilizerTableau(n_qubits=n, generators=tuple(gens), phases=(0,) * len(gens))
    assert tab.k == n
    return tab


def _restrict_to_complement(tab: StabilizerTableau, region: Sequence[int]) -> List[int]:
    """Drop the region's X and Z columns from every generator row."""
    n = tab.n_qubits
    comp = [q for q in range(n) if q not in set(region)]
    rows = []
    for g in tab.generators:
        row = 0
        for j, q in enumerate(comp):
            if g & (1 << q):
                row |= 1 << j
            if g & (1 << (n + q)):
                row |= 1 << (len(comp) + j)
        rows.append(row)
    return rows


def in_region_subgroup_dim(tab: StabilizerTableau, region: Sequence[int]) -> int:
    """dim of the subgroup supported entirely inside ``region``."""
    rows = _restrict_to_complement(tab, region)
    return tab.k - gf2.rank(rows)


def region_entropy(tab: StabilizerTableau, region: Sequence[int]) -> float:
    """Entanglement entropy of ``region`` in nats: (|R| - dim G_R) ln 2."""
    region = list(region)
    if not region:
        return 0.0
    return (len(region) - in_region_subgroup_dim(tab, region)) * LN2


def region_entropy_bits(tab: StabilizerTableau, region: Sequence[int]) -> int:
    region = list(region)
    if not region:
        return 0
    return len(region) - in_region_subgroup_dim(tab, region)


@dataclass(frozen=True)
class RegionMask:
    """Disjoint qubit sets A, B, C with a declared geometry.

    Masks are always supplied as explicit qubit lists (never inferred from
    the figure geometry); the tag is validated against connectivity of the
    declared components.  ``split`` optionally names the two halves of B
    used by the annulus merge, ``ring`` the six-fold subdivision used by
    the cyclic merge.
    """

    lattice: ToricCodeSpec
    A: Tuple[int, ...]
    B: Tuple[int, ...]
    C: Tuple[int, ...]
    geometry: str
    split: Optional[Dict[str, Tuple[int, ...]]] = None
    ring: Optional[Tuple[Tuple[int, ...], ...]] = None
    components: Optional[Dict[str, int]] = field(default=None)

    def __post_init__(self):
        if self.geometry not in _GEOMETRIES:
            raise InvalidLattice(f"unknown geometry tag {self.geometry!r}")
        sets = [set(self.A), set(self.B), set(self.C)]
        if any(s1 & s2 for i, s1 in enumerate(sets) for s2 in sets[i + 1:]):
            raise OverlappingRegions("regions A, B, C must be disjoint")
        n = self.lattice.n_qubits
        for s in sets:
            if not s:
                raise InvalidLattice("regions must be nonempty")
            if any(q < 0 or q >= n for q in s):
                raise InvalidLattice("qubit index outside the lattice")
        expected = {"KP-disk": (1, 1, 1), "KP-annulus": (1, 1, 1),
                    "LW-annulus": (1, None, 1)}[self.geometry]
        declared = self.components or {}
        for name, qs, want in zip("ABC", (self.A, self.B, self.C), expected):
            want = declared.get(name, want)
            if want is None:
                continue
            got = _n_components(self.lattice, qs)
            if got != want:
                raise InvalidLattice(
                    f"region {name} has {got} components, geometry "
                    f"{self.geometry} declares {want}")
        if self.split is not None:
            b1, b2 = set(self.split["B1"]), set(self.split["B2"])
            if b1 | b2 != set(self.B) or b1 & b2:
                raise InvalidLattice("split must partition B into B1, B2")
        if self.ring is not None:
            flat = [q for part in self.ring for q in part]
            if len(self.ring) != 6 or set(flat) != set(self.A) | set(self.B) | set(self.C) \
                    or len(flat) != len(set(flat)):
                raise InvalidLattice("ring must partition ABC into six parts")

    @property
    def abc(self) -> List[int]:
        return list(self.A) + list(self.B) + list(self.C)


def _n_components(spec: ToricCodeSpec, qubits: Sequence[int]) -> int:
    qubits = list(qubits)
    vertex_sets = {q: set(spec.edge_endpoints(q)) for q in qubits}
    seen = set()
    comps = 0
    for q0 in qubits:
        if q0 in seen:
            continue
        comps += 1
        stack = [q0]
        seen.add(q0)
        while stack:
            q = stack.pop()
            for p in qubits:
                if p not in seen and vertex_sets[q] & vertex_sets[p]:
                    seen.add(p)
                    stack.append(p)
    return comps


def tee(tab: StabilizerTableau, mask: RegionMask) -> float:
    """Topological entanglement entropy of the mask, in nats."""
    A, B, C = list(mask.A), list(mask.B), list(mask.C)
    s = region_entropy_bits
    bits = (s(tab, A + B) + s(tab, B + C) + s(tab, C + A)
            - s(tab, A) - s(tab, B) - s(tab, C) - s(tab, A + B + C))
    return bits * LN2


def mutual_information_bits(tab: StabilizerTableau, X: Sequence[int], Y: Sequence[int]) -> int:
    X, Y = list(X), list(Y)
    return (region_entropy_bits(tab, X) + region_entropy_bits(tab, Y)
            - region_entropy_bits(tab, X + Y))


def cmi_bits(tab: StabilizerTableau, X: Sequence[int], Y: Sequence[int],
             Z: Sequence[int]) -> int:
    """I(X:Z|Y) in units of ln 2 (integer for stabilizer states)."""
    X, Y, Z = list(X), list(Y), list(Z)
    s = region_entropy_bits
    return s(tab, X + Y) + s(tab, Y + Z) - s(tab, Y) - s(tab, X + Y + Z)


def in_region_subgroup(tab: StabilizerTableau, region: Sequence[int]) -> List[Tuple[int, int]]:
    """Basis of the in-region subgroup as (packed Pauli, phase exponent)."""
    rows = _restrict_to_complement(tab, region)
    coeff_vectors = gf2.kernel_basis(rows, 2 * (tab.n_qubits - len(list(region))))
    elems = []
    for coeffs in coeff_vectors:
        elems.append(_generator_product(tab, coeffs))
    return elems


def _generator_product(tab: StabilizerTableau, coeffs: int) -> Tuple[int, int]:
    n = tab.n_qubits
    mask = (1 << n) - 1
    x_acc = z_acc = 0
    e_acc = 0
    i = 0
    c = coeffs
    while c:
        if c & 1:
            g = tab.generators[i]
            gx, gz = g & mask, g >> n
            # X^x Z^z ordering: moving Z past X flips sign per overlap
            e_acc = (e_acc + tab.phases[i] + 2 * gf2.popcount(z_acc & gx)) % 4
            x_acc ^= gx
            z_acc ^= gz
        c >>= 1
        i += 1
    return x_acc | (z_acc << n), e_acc


def _pauli_matrix(packed: int, phase_exp: int, region: Sequence[int], n: int) -> np.ndarray:
    x, z = packed & ((1 << n) - 1), packed >> n
    mat = np.array([[1.0 + 0j]])
    for q in region:
        mat = np.kron(mat, _PAULI_2X2[((x >> q) & 1, (z >> q) & 1)])
    return (1j ** phase_exp) * mat


def rdm_dense(tab: StabilizerTableau, region: Sequence[int],
              labels: Optional[Sequence[str]] = None) -> DensityMatrix:
    """Dense reduced density matrix 2^-|R| * sum of in-region group elements.

    The bridge from the exact oracle to the dense path; limited to
    DENSE_QUBIT_LIMIT qubits.  Factor labels default to "q<index>".
    """
    region = list(region)
    if len(region) > DENSE_QUBIT_LIMIT:
        raise DenseLimitExceeded(
            f"{len(region)} qubits exceeds dense limit {DENSE_QUBIT_LIMIT}")
    basis = in_region_subgroup(tab, region)
    dim = 2 ** len(region)
    acc = np.zeros((dim, dim), dtype=complex)
    n_elems = 2 ** len(basis)
    for bits in range(n_elems):
        x_acc = z_acc = 0
        e_acc = 0
        n = tab.n_qubits
        mask = (1 << n) - 1
        for j in range(len(basis)):
            if bits & (1 << j):
                g, e = basis[j]
                gx, gz = g & mask, g >> n
                e_acc = (e_acc + e + 2 * gf2.popcount(z_acc & gx)) % 4
                x_acc ^= gx
                z_acc ^= gz
        acc += _pauli_matrix(x_acc | (z_acc << n), e_acc, region, tab.n_qubits)
    acc /= dim
    if labels is None:
        labels = [f"q{q}" for q in region]
    layout = FactorLayout.of([(lab, 2) for lab in labels])
    return DensityMatrix(layout, acc)


def load_mask(path_or_dict, spec: Optional[ToricCodeSpec] = None) -> RegionMask:
    """Build a RegionMask from the JSON mask schema.

    Schema: {"lattice": {"Lx": 4, "Ly": 4},
             "regions": {"A": [...], "B": [...], "C": [...]},
             "geometry": "KP-disk",
             "split": {"B1": [...], "B2": [...]},        # optional
             "ring": [[...], ..., [...]],                # optional, 6 parts
             "components": {"B": 4}}                     # optional override
    """
    if isinstance(path_or_dict, dict):
        data = path_or_dict
    else:
        with open(path_or_dict) as f:
            data = json.load(f)
    lat = data["lattice"]
    spec = spec or ToricCodeSpec(lat["Lx"], lat["Ly"])
    regions = data["regions"]
    split = None
    if "split" in data:
        split = {k: tuple(v) for k, v in data["split"].items()}
    ring = None
    if "ring" in data:
        ring = tuple(tuple(part) for part in data["ring"])
    return RegionMask(
        lattice=spec,
        A=tuple(regions["A"]), B=tuple(regions["B"]), C=tuple(regions["C"]),
        geometry=data["geometry"],
        split=split, ring=ring,
        components=data.get("components"),
    )
