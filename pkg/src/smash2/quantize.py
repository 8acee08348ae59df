"""Continuous-to-symbolic quantization and scheme scoring.

A scheme ``D<d>N<0|1>[p1 p2 ...]`` differences a series ``d`` times,
optionally standardizes it, and maps each value ``v`` to the symbol ``i``
with ``p_i <= v < p_{i+1}`` (``p_0 = -inf``, ``p_k = +inf``).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)


class SchemeParseError(ValueError):
    pass


class DegenerateSignalError(ValueError):
    pass


class DegeneratePartitionError(ValueError):
    pass


@dataclass(frozen=True)
class QuantScheme:
    detrend: int
    normalize: bool
    cutoffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "cutoffs", tuple(float(c) for c in self.cutoffs))
        if self.detrend < 0:
            raise ValueError("detrend count must be nonnegative")
        if not self.cutoffs:
            raise ValueError("a scheme needs at least one cut-off")
        if any(b <= a for a, b in zip(self.cutoffs, self.cutoffs[1:])):
            raise ValueError("cut-offs must be strictly increasing")
        if not all(np.isfinite(self.cutoffs)):
            raise ValueError("cut-offs must be finite")

    @property
    def alphabet_size(self) -> int:
        return len(self.cutoffs) + 1

    def __str__(self) -> str:
        return format_scheme(self)


_FLOAT = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_HEAD = re.compile(r"D(\d+)N([01])\[")
_FLOAT_RE = re.compile(_FLOAT + r"$")


def parse_scheme(text: str) -> QuantScheme:
    """Parse ``D<uint>N<0|1>[<float> <float> ...]``.

    Whitespace inside the brackets is free-form; the rest of the string must
    match exactly.
    """
    t = text.strip()
    m = _HEAD.match(t)
    if not m:
        head = t[:6] or "<empty>"
        raise SchemeParseError(f"expected 'D<uint>N<0|1>[' at the start, got {head!r}")
    if not t.endswith("]"):
        raise SchemeParseError(f"missing closing ']' in {t!r}")
    body = t[m.end() : -1]
    if "[" in body or "]" in body:
        raise SchemeParseError(f"unbalanced brackets in {t!r}")
    tokens = body.split()
    if not tokens:
        raise SchemeParseError("empty partition: at least one cut-off is required")
    cuts = []
    for tok in tokens:
        if not _FLOAT_RE.match(tok):
            raise SchemeParseError(f"bad cut-off token {tok!r}")
        cuts.append(float(tok))
    try:
        return QuantScheme(int(m.group(1)), m.group(2) == "1", tuple(cuts))
    except ValueError as exc:
        raise SchemeParseError(f"{t!r}: {exc}") from exc


def format_scheme(s: QuantScheme) -> str:
    cuts = " ".join(repr(c) for c in s.cutoffs)
    return f"D{s.detrend}N{int(s.normalize)}[{cuts}]"


def transform(x: Sequence[float], detrend: int, normalize: bool) -> np.ndarray:
    """Difference ``detrend`` times, then standardize to mean 0, variance 1 if asked."""
    v = np.asarray(x, dtype=float)
    if v.size <= detrend:
        raise DegenerateSignalError(f"series of length {v.size} is too short to detrend {detrend} times")
    if detrend:
        v = np.diff(v, n=detrend)
    if normalize:
        sd = v.std()
        if not sd > 0:
            raise DegenerateSignalError("cannot normalize a series with zero variance")
        v = (v - v.mean()) / sd
    return v


def apply_scheme(x: Sequence[float], s: QuantScheme) -> list[int]:
    v = transform(x, s.detrend, s.normalize)
    return np.searchsorted(np.asarray(s.cutoffs), v, side="right").tolist()


@dataclass
class LabeledDataset:
    series: list[Sequence[float]]
    labels: list | None = None

    def __post_init__(self):
        if self.labels is not None and len(self.labels) != len(self.series):
            raise ValueError(f"{len(self.labels)} labels for {len(self.series)} series")


def maxent_partition(data: LabeledDataset | Sequence[Sequence[float]], detrend: int, normalize: bool, k: int) -> tuple[float, ...]:
    """Cut-offs that split the pooled transformed values into ``k`` near-equal bins.

    Each cut-off sits halfway between two adjacent distinct pooled values,
    at the boundary whose count below is closest to ``i*N/k``. On continuous
    data this is the empirical ``i/k`` quantile; on discrete data it keeps
    tied values in one bin.
    """
    if k < 2:
        raise ValueError("alphabet size must be >= 2")
    series = data.series if isinstance(data, LabeledDataset) else data
    pooled = np.concatenate([transform(x, detrend, normalize) for x in series]) if len(series) else np.empty(0)
    if pooled.size == 0:
        raise DegeneratePartitionError("no data to partition")
    vals, counts = np.unique(pooled, return_counts=True)
    if vals.size < k:
        raise DegeneratePartitionError(f"only {vals.size} distinct values for {k} symbols")
    below = np.cumsum(counts)[:-1]  # below[j] = count of values < vals[j+1]
    n = pooled.size
    cuts = []
    prev = -1
    for i in range(1, k):
        j = int(np.argmin(np.abs(below - i * n / k)))
        if j <= prev:
            j = prev + 1
        if j >= below.size:
            raise DegeneratePartitionError(f"cannot place {k - 1} distinct cut-offs")
        cuts.append(0.5 * (vals[j] + vals[j + 1]))
        prev = j
    return tuple(float(c) for c in cuts)


@dataclass(frozen=True)
class Separation:
    same: float
    cross: float
    ratio: float
    diagonal_only: bool = False


def class_separation(D: np.ndarray, labels: Sequence) -> Separation:
    """Mean same-label distance ``s``, mean cross-label distance ``d`` and ``r = s/d``.

    Both means run over all ordered pairs, the diagonal included.
    """
    D = np.asarray(D, dtype=float)
    labels = list(labels)
    if D.shape != (len(labels), len(labels)):
        raise ValueError("distance matrix and labels disagree in size")
    lab = np.asarray([str(v) for v in labels])
    same = lab[:, None] == lab[None, :]
    if same.all():
        raise ValueError("class separation needs at least two classes")
    s = float(D[same].sum() / same.sum())
    d = float(D[~same].sum() / (~same).sum())
    diag_only = len(set(labels)) == len(labels)
    if d <= 0:
        raise ValueError("all cross-class distances are zero")
    return Separation(s, d, s / d, diag_only)


@dataclass(frozen=True)
class SearchGrid:
    detrend: tuple[int, ...] = (0, 1)
    normalize: tuple[bool, ...] = (False, True)
    alphabet_sizes: tuple[int, ...] = (2,)
    perturb_step: float = 0.0
    perturb_count: int = 0
    extra_schemes: tuple[QuantScheme, ...] = ()


@dataclass(frozen=True)
class SchemeScore:
    scheme: QuantScheme
    ratio: float
    separation: Separation


def _perturbed_levels(k: int, step: float, count: int) -> list[float]:
    return [j * step for j in range(-count, count + 1)] if step > 0 else [0.0]


def quantile_cutoffs(data: LabeledDataset, detrend: int, normalize: bool, k: int, shift: float) -> tuple[float, ...]:
    """Maxent cut-offs with every quantile level moved by ``shift``."""
    if shift == 0.0:
        return maxent_partition(data, detrend, normalize, k)
    pooled = np.concatenate([transform(x, detrend, normalize) for x in data.series])
    levels = np.arange(1, k) / k + shift
    if levels[0] <= 0 or levels[-1] >= 1:
        raise DegeneratePartitionError(f"shift {shift} pushes quantile levels outside (0, 1)")
    cuts = np.quantile(pooled, levels)
    if np.any(np.diff(cuts) <= 0):
        raise DegeneratePartitionError("shifted quantiles are not distinct")
    return tuple(float(c) for c in cuts)


def scheme_grid(data: LabeledDataset, grid: SearchGrid) -> tuple[list[QuantScheme], list[str]]:
    """Expand a grid into concrete schemes; also returns notes on skipped cells."""
    out: list[QuantScheme] = list(grid.extra_schemes)
    notes = []
    for d in grid.detrend:
        for nz in grid.normalize:
            for k in grid.alphabet_sizes:
                for shift in _perturbed_levels(k, grid.perturb_step, grid.perturb_count):
                    try:
                        cuts = quantile_cutoffs(data, d, nz, k, shift)
                    except (DegenerateSignalError, DegeneratePartitionError) as exc:
                        notes.append(f"D{d}N{int(nz)} k={k} shift={shift:+g}: {exc}")
                        continue
                    s = QuantScheme(d, nz, cuts)
                    if s not in out:
                        out.append(s)
    return out, notes


def scheme_search(data: LabeledDataset, grid: SearchGrid, bases=None, coord_norm: str = "l1") -> tuple[list[SchemeScore], list[str]]:
    """Score every scheme in ``grid`` by ``r`` (ascending; smaller separates better).

    ``bases`` defaults to the built-in four-machine binary base set. Schemes
    whose alphabet differs from the base set's, or that fail on some series,
    are skipped with a note; only an all-failed grid raises.
    """
    from .metric import default_base_set, distance_matrix

    if data.labels is None:
        raise ValueError("scheme search needs labels")
    if bases is None:
        bases = default_base_set()
    schemes, notes = scheme_grid(data, grid)
    results = []
    for s in schemes:
        try:
            seqs = [apply_scheme(x, s) for x in data.series]
            if any(len(q) == 0 for q in seqs):
                raise DegenerateSignalError("a series quantizes to an empty sequence")
            D = distance_matrix(seqs, bases, coord_norm)
            sep = class_separation(D, data.labels)
        except ValueError as exc:
            notes.append(f"{format_scheme(s)}: {exc}")
            continue
        results.append(SchemeScore(s, sep.ratio, sep))
    if not results:
        raise ValueError("every scheme failed: " + "; ".join(notes))
    results.sort(key=lambda r: (r.ratio, format_scheme(r.scheme)))
    return results, notes
