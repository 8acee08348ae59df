"""GenESeSS: infer a PFSA from one long symbol sequence.

1. pick an approximately synchronizing history ``x_eps`` whose empirical
   next-symbol distribution is an extreme point of all short-history
   distributions;
2. grow states breadth-first from ``x_eps``, matching each extended history
   to an existing state when their next-symbol distributions agree within
   ``epsilon`` in sup norm, and keep a closed strongly connected component;
3. re-estimate the observation rows by running the sequence through the
   graph and counting.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .pfsa import Pfsa, State, validate

log = logging.getLogger(__name__)

_CODE_LIMIT = 2**62
_BINCOUNT_LIMIT = 2**22


class InputTooShortError(ValueError):
    """No candidate history has enough support to start inference."""


@dataclass(frozen=True)
class InferParams:
    epsilon: float = 0.05
    min_count: int = 5
    max_states: int = 64
    smoothing_alpha: float = 0.5

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if self.max_states < 1:
            raise ValueError("max_states must be >= 1")
        if self.smoothing_alpha < 0:
            raise ValueError("smoothing_alpha must be >= 0")


@dataclass(frozen=True)
class EmpiricalDerivative:
    counts: tuple[int, ...]

    @property
    def support_count(self) -> int:
        return sum(self.counts)

    @property
    def defined(self) -> bool:
        return self.support_count > 0

    @property
    def dist(self) -> np.ndarray:
        if not self.defined:
            raise ValueError("empirical derivative of an unseen history is undefined")
        c = np.asarray(self.counts, dtype=float)
        return c / c.sum()


class NgramCounter:
    """Cached counts of ``y`` followed by each symbol, over one sequence."""

    def __init__(self, x: Sequence[int], alphabet_size: int):
        self.x = np.asarray(x, dtype=np.int64)
        self.k = alphabet_size
        if self.x.size and (self.x.min() < 0 or self.x.max() >= alphabet_size):
            raise ValueError("sequence has symbols outside the alphabet")
        self._tables: dict[int, object] = {}

    def _table(self, length: int):
        # counts of all (length)-grams that start at i with i + length <= n
        if length in self._tables:
            return self._tables[length]
        n = self.x.size
        if length > n:
            tab = None
        elif self.k**length >= _CODE_LIMIT:
            tab = "scan"
        else:
            codes = np.zeros(n - length + 1, dtype=np.int64)
            for j in range(length):
                codes = codes * self.k + self.x[j : n - length + 1 + j]
            if self.k**length <= _BINCOUNT_LIMIT:
                tab = np.bincount(codes, minlength=self.k**length)
            else:
                vals, cnt = np.unique(codes, return_counts=True)
                tab = dict(zip(vals.tolist(), cnt.tolist()))
        self._tables[length] = tab
        return tab

    def derivative(self, y: Sequence[int]) -> EmpiricalDerivative:
        y = list(y)
        L = len(y) + 1
        tab = self._table(L)
        if tab is None:
            return EmpiricalDerivative((0,) * self.k)
        if isinstance(tab, str):
            n = self.x.size
            win = np.lib.stride_tricks.sliding_window_view(self.x[: n - 1], len(y))
            hits = np.flatnonzero(np.all(win == np.asarray(y), axis=1))
            return EmpiricalDerivative(tuple(int(v) for v in np.bincount(self.x[hits + len(y)], minlength=self.k)))
        base = 0
        for s in y:
            base = base * self.k + s
        base *= self.k
        if isinstance(tab, dict):
            return EmpiricalDerivative(tuple(int(tab.get(base + s, 0)) for s in range(self.k)))
        return EmpiricalDerivative(tuple(int(v) for v in tab[base : base + self.k]))


def empirical_derivative(x: Sequence[int], y: Sequence[int], alphabet_size: int | None = None) -> EmpiricalDerivative:
    """Next-symbol counts after every occurrence of ``y`` in ``x`` that has a follower."""
    if alphabet_size is None:
        alphabet_size = max(max(x, default=0), max(y, default=0)) + 1
        alphabet_size = max(alphabet_size, 2)
    return NgramCounter(x, alphabet_size).derivative(y)


def candidate_length(epsilon: float, alphabet_size: int) -> int:
    # floor(log_k(1/eps)) with a nudge so exact powers are not lost to rounding
    return max(0, math.floor(math.log(1.0 / epsilon) / math.log(alphabet_size) + 1e-12))


def select_from_derivatives(cands: dict[tuple[int, ...], EmpiricalDerivative], tie_radius: float = 0.0) -> tuple[int, ...]:
    """Pick the history whose distribution lies farthest from the centroid.

    The farthest point of a finite set from any interior point is a vertex of
    its convex hull, so this picks a hull vertex without building the hull.
    Candidates whose distribution is within ``tie_radius`` (sup norm) of the
    farthest one count as ties; ties go to shorter histories, then higher
    support, then lexicographic order.
    """
    if not cands:
        raise InputTooShortError("no candidate history has enough support")
    keys = list(cands)
    pts = np.array([cands[y].dist for y in keys])
    centroid = pts.mean(axis=0)
    dist = np.round(np.linalg.norm(pts - centroid, axis=1), 12)
    far = pts[int(np.argmax(dist))]
    tied = [i for i in range(len(keys)) if dist[i] == dist.max() or np.max(np.abs(pts[i] - far)) <= tie_radius]
    best = min(tied, key=lambda i: (len(keys[i]), -cands[keys[i]].support_count, keys[i]))
    return keys[best]


def _candidates(counter: NgramCounter, params: InferParams) -> dict[tuple[int, ...], EmpiricalDerivative]:
    k = counter.k
    max_len = candidate_length(params.epsilon, k)
    out = {}
    frontier = [()]
    for _length in range(max_len + 1):
        nxt = []
        for y in frontier:
            d = counter.derivative(y)
            if d.support_count >= params.min_count:
                out[y] = d
                nxt.extend(y + (s,) for s in range(k))
        frontier = nxt
    return out


def select_sync_sequence(x: Sequence[int], params: InferParams, alphabet_size: int | None = None) -> tuple[int, ...]:
    """Approximate epsilon-synchronizing history for ``x``."""
    k = alphabet_size or max(2, max(x, default=0) + 1)
    return select_from_derivatives(_candidates(NgramCounter(x, k), params), params.epsilon)


def scc_terminal(succ: Sequence[Sequence[int]], mass: Sequence[float] | None = None) -> list[int]:
    """A closed strongly connected component of the digraph ``succ``.

    ``succ[v]`` lists the successors of ``v``. Among several closed components
    the one with the largest total ``mass`` wins (first by lowest vertex on ties).
    """
    n = len(succ)
    if n == 0:
        raise ValueError("empty graph")
    rows = [v for v in range(n) for _ in succ[v]]
    cols = [w for v in range(n) for w in succ[v]]
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    closed = [True] * n_comp
    for v in range(n):
        for w in succ[v]:
            if labels[v] != labels[w]:
                closed[labels[v]] = False
    mass = [0.0] * n if mass is None else list(mass)
    best = None
    for c in range(n_comp):
        if not closed[c]:
            continue
        members = [v for v in range(n) if labels[v] == c]
        key = (sum(mass[v] for v in members), -members[0])
        if best is None or key > best[0]:
            best = (key, members)
    return best[1]


@dataclass
class InferReport:
    sync_sequence: tuple[int, ...]
    n_states: int
    n_discovered: int
    capped_edges: int = 0
    low_support_edges: int = 0
    coarse_merge: bool = False
    visit_counts: list[int] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "sync_sequence": "".join(map(str, self.sync_sequence)),
            "n_states": self.n_states,
            "n_discovered": self.n_discovered,
            "capped_edges": self.capped_edges,
            "low_support_edges": self.low_support_edges,
            "coarse_merge": self.coarse_merge,
            "visit_counts": self.visit_counts,
            "notes": self.notes,
        }


def _sup(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)))


def _backoff(counter: NgramCounter, y: tuple[int, ...], min_count: int) -> np.ndarray:
    # drop the oldest symbols until the history is seen often enough
    for i in range(len(y) + 1):
        d = counter.derivative(y[i:])
        if d.support_count >= min_count:
            return d.dist
    d = counter.derivative(())
    return d.dist


def infer(x: Sequence[int], params: InferParams = InferParams(), alphabet_size: int | None = None) -> tuple[Pfsa, InferReport]:
    """Infer a PFSA from ``x``; returns the machine and a diagnostic report."""
    k = alphabet_size or max(2, max(x, default=0) + 1)
    if len(x) < 100:
        log.warning("inferring from only %d symbols; estimates will be noisy", len(x))
    counter = NgramCounter(x, k)
    cands = _candidates(counter, params)
    sync = select_from_derivatives(cands, params.epsilon)
    report = InferReport(sync, 0, 0)
    if candidate_length(params.epsilon, k) == 0:
        report.coarse_merge = True
        report.notes.append(f"epsilon={params.epsilon:g} exceeds 1/|alphabet|; only the empty history is a candidate")

    ids: list[tuple[int, ...]] = [sync]
    dists: list[np.ndarray] = [cands[sync].dist]
    succ: list[list[int]] = []
    queue = deque([0])
    while queue:
        q = queue.popleft()
        row = []
        for s in range(k):
            y = ids[q] + (s,)
            d = counter.derivative(y)
            if d.support_count < params.min_count:
                target = _backoff(counter, y, params.min_count)
                row.append(min(range(len(dists)), key=lambda j: _sup(target, dists[j])))
                report.low_support_edges += 1
                continue
            phi = d.dist
            gaps = [_sup(phi, dq) for dq in dists]
            best = min(range(len(gaps)), key=gaps.__getitem__)
            if gaps[best] <= params.epsilon:
                row.append(best)
            elif len(ids) < params.max_states:
                ids.append(y)
                dists.append(phi)
                row.append(len(ids) - 1)
                queue.append(len(ids) - 1)
            else:
                row.append(best)
                report.capped_edges += 1
        succ.append(row)
        # new states are appended to succ in discovery order, matching queue order
    report.n_discovered = len(ids)
    if report.capped_edges:
        report.notes.append(f"max_states={params.max_states} reached; {report.capped_edges} edges routed to closest state")
    if report.n_discovered > 1 and params.epsilon >= 0.5:
        report.coarse_merge = True

    # Step 3 over the full graph; visit mass also picks the closed component
    xs = np.asarray(x, dtype=np.int64).tolist()
    n_all = len(ids)
    full = np.zeros((n_all, k))
    q = 0
    for s in xs:
        full[q, s] += 1
        q = succ[q][s]
    keep = scc_terminal(succ, full.sum(axis=1).tolist())
    if len(keep) < n_all:
        report.notes.append(f"dropped {n_all - len(keep)} transient states outside the closed component")
    index = {old: new for new, old in enumerate(keep)}
    counts = full[keep]
    if counts.sum() == 0:
        report.notes.append("sequence never entered the closed component; counted from its first state")
        q = keep[0]
        for s in xs:
            counts[index[q], s] += 1
            q = succ[q][s]

    states = []
    visit_counts = []
    for new, old in enumerate(keep):
        c = counts[new] + params.smoothing_alpha
        visit_counts.append(int(counts[new].sum()))
        if c.sum() == 0:
            c = np.ones(k)
        row = c / c.sum()
        nxt = {s: index[succ[old][s]] for s in range(k) if row[s] > 0}
        states.append(State(tuple(row.tolist()), nxt))
    m = Pfsa(k, tuple(states))
    report.n_states = m.n_states
    report.visit_counts = visit_counts
    problems = validate(m)
    if problems:
        # only reachable with smoothing_alpha = 0 and unvisited symbols
        raise ValueError("inferred machine failed validation: " + "; ".join(problems))
    return m, report
