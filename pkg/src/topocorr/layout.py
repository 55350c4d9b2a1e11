"""Tensor-factor layouts and the index arithmetic built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import DuplicateLabel, UnknownSubsystem


@dataclass(frozen=True)
class FactorLayout:
    """Ordered subsystem labels with local dimensions.

    The layout fixes how a total_dim x total_dim matrix is interpreted as a
    multipartite operator; every partial trace, embedding, and permutation
    goes through it.
    """

    sites: Tuple[Tuple[str, int], ...]

    def __post_init__(self):
        labels = [lab for lab, _ in self.sites]
        if len(set(labels)) != len(labels):
            raise DuplicateLabel(f"duplicate labels in {labels}")
        if any(d < 1 for _, d in self.sites):
            raise ValueError("local dimensions must be >= 1")

    @classmethod
    def of(cls, sites: Iterable[Tuple[str, int]]) -> "FactorLayout":
        return cls(tuple((str(lab), int(d)) for lab, d in sites))

    @classmethod
    def qubits(cls, labels: Iterable[str]) -> "FactorLayout":
        return cls.of((lab, 2) for lab in labels)

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(lab for lab, _ in self.sites)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(d for _, d in self.sites)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def dim_of(self, labels: Iterable[str]) -> int:
        idx = self.positions(labels)
        return math.prod(self.dims[i] for i in idx)

    def position(self, label: str) -> int:
        for i, (lab, _) in enumerate(self.sites):
            if lab == label:
                return i
        raise UnknownSubsystem(f"label {label!r} not in layout {self.labels}")

    def positions(self, labels: Iterable[str]) -> List[int]:
        return [self.position(lab) for lab in labels]

    def subset(self, labels: Iterable[str]) -> "FactorLayout":
        """Sub-layout of ``labels`` in *layout* order."""
        pos = sorted(self.positions(labels))
        return FactorLayout(tuple(self.sites[i] for i in pos))

    def reordered(self, labels: Sequence[str]) -> "FactorLayout":
        if set(labels) != set(self.labels) or len(labels) != len(self.labels):
            raise UnknownSubsystem("reorder must use exactly the layout labels")
        return FactorLayout(tuple(self.sites[self.position(lab)] for lab in labels))

    def concat(self, other: "FactorLayout") -> "FactorLayout":
        return FactorLayout(self.sites + other.sites)

    def basis_permutation(self, new_order: Sequence[str]) -> np.ndarray:
        """Index array pi with value pi[j] = old flat index of new index j."""
        perm = self.positions(new_order)
        idx = np.arange(self.total_dim).reshape(self.dims)
        return np.transpose(idx, perm).reshape(-1)


def permute_matrix(data: np.ndarray, layout: FactorLayout,
                   new_order: Sequence[str]) -> np.ndarray:
    pi = layout.basis_permutation(new_order)
    return data[np.ix_(pi, pi)]


def embed_operator(op: np.ndarray, op_labels: Sequence[str],
                   layout: FactorLayout) -> np.ndarray:
    """Lift ``op`` (acting on op_labels, in that order) to the full layout."""
    rest = [lab for lab in layout.labels if lab not in set(op_labels)]
    d_rest = math.prod(layout.dims[layout.position(lab)] for lab in rest)
    big = np.kron(op, np.eye(d_rest))
    order = list(op_labels) + rest
    # big is laid out in `order`; permute back to the layout order
    interim = layout.reordered(order)
    return permute_matrix(big, interim, layout.labels)


def partial_trace_matrix(data: np.ndarray, layout: FactorLayout,
                         keep: Iterable[str]) -> Tuple[np.ndarray, FactorLayout]:
    """Trace out everything but ``keep`` (result in layout order)."""
    keep = list(keep)
    if not keep:
        raise UnknownSubsystem("keep must be nonempty")
    keep_pos = sorted(layout.positions(keep))
    dims = layout.dims
    n = len(dims)
    tensor = data.reshape(dims + dims)
    drop = [i for i in range(n) if i not in keep_pos]
    for off, ax in enumerate(drop):
        tensor = np.trace(tensor, axis1=ax - off, axis2=ax - off + n - off)
    sub = FactorLayout(tuple(layout.sites[i] for i in keep_pos))
    d = sub.total_dim
    return tensor.reshape(d, d), sub
