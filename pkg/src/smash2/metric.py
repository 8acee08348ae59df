"""Smash2.0 coordinates and distances.

A sequence's coordinate is its vector of per-symbol log-likelihoods under a
fixed base set of PFSA; the distance between two sequences is a norm of the
difference of their coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measures import log_likelihood_detail
from .pfsa import Pfsa, load_pfsa, validate

NORMS = ("l1", "linf", "l2")


@dataclass(frozen=True)
class BaseSet:
    machines: tuple[Pfsa, ...]

    def __post_init__(self):
        object.__setattr__(self, "machines", tuple(self.machines))
        if not self.machines:
            raise ValueError("base set is empty")
        sizes = {m.alphabet_size for m in self.machines}
        if len(sizes) != 1:
            raise ValueError(f"base machines disagree on alphabet size: {sorted(sizes)}")
        for i, m in enumerate(self.machines):
            problems = validate(m)
            if problems:
                raise ValueError(f"base machine {i} is invalid: {problems}")
            if min(min(st.probs) for st in m.states) <= 0:
                raise ValueError(f"base machine {i} lacks full support")

    @property
    def alphabet_size(self) -> int:
        return self.machines[0].alphabet_size

    def __len__(self) -> int:
        return len(self.machines)


def default_base_set() -> BaseSet:
    """The four binary machines used as the default coordinate system."""
    lo, hi = (0.3, 0.7), (0.7, 0.3)
    m0 = Pfsa.from_rows([lo, hi], [[0, 1], [0, 1]])
    m1 = Pfsa.from_rows([lo, hi], [[0, 1], [1, 0]])
    m2 = Pfsa.from_rows([lo, hi, (0.6, 0.4)], [[1, 2], [2, 0], [0, 1]])
    m3 = Pfsa.from_rows([lo, hi, (0.8, 0.2), (0.2, 0.8)], [[0, 1], [2, 3], [0, 1], [2, 3]])
    return BaseSet((m0, m1, m2, m3))


def load_base_set(paths: Sequence[str]) -> BaseSet:
    return BaseSet(tuple(load_pfsa(p) for p in paths))


def featurize(x: Sequence[int], bases: BaseSet) -> np.ndarray:
    """Log-likelihood of ``x`` under each base machine, in bits per symbol."""
    if len(x) == 0:
        raise ValueError("cannot featurize an empty sequence")
    k = bases.alphabet_size
    if min(x) < 0 or max(x) >= k:
        raise ValueError(f"sequence uses symbols outside the base alphabet of size {k}")
    return np.array([log_likelihood_detail(x, m)[0] for m in bases.machines])


def coord_distance(a: np.ndarray, b: np.ndarray, norm: str = "l1") -> float:
    diff = np.abs(np.asarray(a) - np.asarray(b))
    if norm == "l1":
        return float(diff.sum())
    if norm == "linf":
        return float(diff.max())
    if norm == "l2":
        return float(np.sqrt((diff**2).sum()))
    raise ValueError(f"unknown coordinate norm {norm!r}; choose from {NORMS}")


def distance(x: Sequence[int], y: Sequence[int], bases: BaseSet, norm: str = "l1") -> float:
    return coord_distance(featurize(x, bases), featurize(y, bases), norm)


def pairwise(features: np.ndarray, norm: str = "l1") -> np.ndarray:
    F = np.asarray(features, dtype=float)
    diff = np.abs(F[:, None, :] - F[None, :, :])
    if norm == "l1":
        D = diff.sum(axis=2)
    elif norm == "linf":
        D = diff.max(axis=2)
    elif norm == "l2":
        D = np.sqrt((diff**2).sum(axis=2))
    else:
        raise ValueError(f"unknown coordinate norm {norm!r}; choose from {NORMS}")
    np.fill_diagonal(D, 0.0)
    return D


def distance_matrix(seqs: Sequence[Sequence[int]], bases: BaseSet, norm: str = "l1") -> np.ndarray:
    """Symmetric zero-diagonal matrix of coordinate distances.

    Each sequence is featurized once, so cost is linear in total symbol count.
    """
    if len(seqs) == 0:
        return np.zeros((0, 0))
    F = np.vstack([featurize(x, bases) for x in seqs])
    return pairwise(F, norm)
