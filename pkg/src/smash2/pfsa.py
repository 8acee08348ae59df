"""Probabilistic finite-state automata: construction, validation, stationary
distributions, sampling and minimization.

A machine over the alphabet ``{0, ..., k-1}`` is a list of states. Each state
carries a distribution over the next symbol and a partial map from symbols to
successor states; the map is defined exactly where the symbol has positive
probability. Generation is emit-then-move: in state ``q`` draw ``s`` from
``probs[q]`` and jump to ``next[q][s]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

ROW_TOL = 1e-9
EQUIV_TOL = 1e-9
DIRECT_SOLVE_MAX = 512


class InvalidPfsaError(ValueError):
    """Raised when a machine fails validation at a boundary that requires it."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid PFSA: " + "; ".join(violations))


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class State:
    probs: tuple[float, ...]
    next: Mapping[int, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Pfsa:
    """Immutable PFSA ``(alphabet, states, transition map, observation probs)``."""

    alphabet_size: int
    states: tuple[State, ...]

    def __post_init__(self):
        states = tuple(
            State(tuple(float(v) for v in s.probs), dict((int(a), int(b)) for a, b in s.next.items()))
            for s in self.states
        )
        object.__setattr__(self, "states", states)

    @classmethod
    def from_rows(cls, probs: Sequence[Sequence[float]], next: Sequence[Mapping[int, int] | Sequence[int | None]]) -> Pfsa:
        """Build from observation rows and successor tables.

        ``next[q]`` may be a dict ``{symbol: state}`` or a list indexed by symbol
        with ``None`` for undefined transitions.
        """
        if len(probs) != len(next):
            raise ValueError("probs and next must have one entry per state")
        states = []
        for row, nxt in zip(probs, next):
            if not isinstance(nxt, Mapping):
                nxt = {s: t for s, t in enumerate(nxt) if t is not None}
            states.append(State(tuple(row), nxt))
        k = len(probs[0]) if probs else 0
        return cls(k, tuple(states))

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def obs_matrix(self) -> np.ndarray:
        """The |Q| x |Σ| observation matrix."""
        return np.array([s.probs for s in self.states], dtype=float)

    def successor(self, q: int, symbol: int) -> int | None:
        return self.states[q].next.get(symbol)

    def to_dict(self) -> dict:
        return {
            "alphabet_size": self.alphabet_size,
            "states": [
                {"probs": list(s.probs), "next": {str(k): v for k, v in sorted(s.next.items())}}
                for s in self.states
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> Pfsa:
        try:
            k = int(data["alphabet_size"])
            states = tuple(
                State(tuple(st["probs"]), {int(a): int(b) for a, b in st.get("next", {}).items()})
                for st in data["states"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidPfsaError([f"malformed PFSA document: {exc!r}"]) from exc
        return cls(k, states)


def load_pfsa(path: str | Path) -> Pfsa:
    """Read a machine from JSON and reject it unless it validates."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidPfsaError([f"{path}: not JSON ({exc})"]) from exc
    m = Pfsa.from_dict(data)
    problems = validate(m)
    if problems:
        raise InvalidPfsaError(problems)
    return m


def save_pfsa(m: Pfsa, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(m.to_dict(), fh, indent=2)
        fh.write("\n")


def _adjacency(m: Pfsa) -> csr_matrix:
    n = m.n_states
    rows, cols = [], []
    for q, st in enumerate(m.states):
        for t in st.next.values():
            if 0 <= t < n:
                rows.append(q)
                cols.append(t)
    return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


def validate(m: Pfsa) -> list[str]:
    """Return every invariant violation of ``m``; an empty list means valid."""
    out = []
    k = m.alphabet_size
    if k < 2:
        out.append(f"alphabet_size {k} < 2")
    if m.n_states < 1:
        out.append("machine has no states")
        return out
    n = m.n_states
    for q, st in enumerate(m.states):
        if len(st.probs) != k:
            out.append(f"state {q}: probs has length {len(st.probs)}, expected {k}")
            continue
        row = np.asarray(st.probs)
        if not np.all(np.isfinite(row)) or np.any(row < 0):
            out.append(f"state {q}: probs must be finite and nonnegative")
        elif abs(row.sum() - 1.0) > ROW_TOL:
            out.append(f"state {q}: probs sum to {row.sum():.12g}, not 1")
        for s in range(k):
            has_edge = s in st.next
            if row[s] > 0 and not has_edge:
                out.append(f"state {q}: symbol {s} has probability {row[s]:g} but no transition")
            elif row[s] <= 0 and has_edge:
                out.append(f"state {q}: transition on symbol {s} has zero probability")
        for s, t in st.next.items():
            if not 0 <= s < k:
                out.append(f"state {q}: transition on out-of-range symbol {s}")
            if not 0 <= t < n:
                out.append(f"state {q}: transition to nonexistent state {t}")
    n_comp, _ = connected_components(_adjacency(m), directed=True, connection="strong")
    if n_comp != 1:
        out.append(f"graph is not strongly connected ({n_comp} components)")
    return out


def transition_matrix(m: Pfsa) -> np.ndarray:
    """State-to-state matrix: entry (q, q') sums the symbol probabilities leading q -> q'."""
    n = m.n_states
    out = np.zeros((n, n))
    for q, st in enumerate(m.states):
        for s, t in st.next.items():
            out[q, t] += st.probs[s]
    return out


def _lazy_limit(p0: np.ndarray, T: np.ndarray, tol: float, max_doublings: int = 200) -> np.ndarray:
    # Limit of p0 (I+T)^n / 2^n, i.e. the Cesaro limit of p0 T^n; the lazy chain is
    # aperiodic, so repeated squaring converges geometrically even for periodic T.
    n = T.shape[0]
    M = 0.5 * (np.eye(n) + T)
    p = p0
    for _ in range(max_doublings):
        p = p @ M
        p = p / p.sum()
        if np.max(np.abs(p @ T - p)) <= tol:
            return p
        M = M @ M
        M /= M.sum(axis=1, keepdims=True)
    raise ConvergenceError(f"stationary iteration did not reach residual {tol:g}")


def _lazy_limit_iter(p0: np.ndarray, T, tol: float, max_iter: int = 1_000_000) -> np.ndarray:
    p = p0
    for _ in range(max_iter):
        q = 0.5 * (p + p @ T)
        q /= q.sum()
        if np.max(np.abs(q @ T - q)) <= tol:
            return q
        p = q
    raise ConvergenceError(f"stationary iteration did not reach residual {tol:g} in {max_iter} steps")


def stationary_from_matrix(T: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    n = T.shape[0]
    if n == 1:
        return np.ones(1)
    if n <= DIRECT_SOLVE_MAX:
        A = np.vstack([T.T - np.eye(n), np.ones((1, n))])
        b = np.zeros(n + 1)
        b[-1] = 1.0
        p = np.linalg.lstsq(A, b, rcond=None)[0]
        p = np.clip(p, 0.0, None)
        p /= p.sum()
        # one polishing step through the lazy chain keeps the residual tight
        for _ in range(50):
            if np.max(np.abs(p @ T - p)) <= tol:
                return p
            p = 0.5 * (p + p @ T)
            p /= p.sum()
        raise ConvergenceError("direct stationary solve is numerically degenerate")
    return _lazy_limit_iter(np.full(n, 1.0 / n), csr_matrix(T), tol)


def stationary_distribution(m: Pfsa) -> np.ndarray:
    """Unique stationary distribution ``p`` with ``p Π = p`` (residual <= 1e-12)."""
    return stationary_from_matrix(transition_matrix(m))


def sample(m: Pfsa, length: int, seed: int, start: str | int = "stationary") -> list[int]:
    """Draw ``length`` symbols from ``m``.

    ``start`` is ``"stationary"`` (initial state drawn from the stationary
    distribution) or a state index.
    """
    if length < 0:
        raise ValueError("length must be nonnegative")
    rng = np.random.default_rng(seed)
    if start == "stationary":
        p = stationary_distribution(m)
        q = int(min(np.searchsorted(np.cumsum(p), rng.random(), side="right"), m.n_states - 1))
    else:
        q = int(start)
        if not 0 <= q < m.n_states:
            raise ValueError(f"start state {q} out of range")
    if length == 0:
        return []
    cum = [np.cumsum(st.probs).tolist() for st in m.states]
    nxt = [[st.next.get(s, -1) for s in range(m.alphabet_size)] for st in m.states]
    last = m.alphabet_size - 1
    u = rng.random(length).tolist()
    out = [0] * length
    for i, r in enumerate(u):
        c = cum[q]
        s = 0
        while s < last and r >= c[s]:
            s += 1
        # float slop at the top of the cdf must not land on a forbidden symbol
        while nxt[q][s] < 0:
            s -= 1
        out[i] = s
        q = nxt[q][s]
    return out


def minimize(m: Pfsa, tol: float = EQUIV_TOL) -> Pfsa:
    """Collapse equivalent states by partition refinement.

    Initial blocks group states whose observation rows agree within ``tol``
    (sup norm); blocks are split until every member maps each symbol into the
    same block. The quotient machine generates the same process.
    """
    n = m.n_states
    rows = m.obs_matrix
    block = [-1] * n
    reps: list[int] = []
    for q in range(n):
        for b, r in enumerate(reps):
            if np.max(np.abs(rows[q] - rows[r])) <= tol:
                block[q] = b
                break
        else:
            block[q] = len(reps)
            reps.append(q)
    k = m.alphabet_size
    while True:
        sig: dict[tuple, int] = {}
        new = [0] * n
        for q in range(n):
            key = (block[q],) + tuple(block[m.states[q].next[s]] if s in m.states[q].next else -1 for s in range(k))
            new[q] = sig.setdefault(key, len(sig))
        if len(sig) == len(set(block)):
            block = new
            break
        block = new
    n_blocks = max(block) + 1
    members: list[list[int]] = [[] for _ in range(n_blocks)]
    for q, b in enumerate(block):
        members[b].append(q)
    states = []
    for b in range(n_blocks):
        rep = members[b][0]
        row = rows[members[b]].mean(axis=0)
        nxt = {s: block[t] for s, t in m.states[rep].next.items()}
        states.append(State(tuple(row.tolist()), nxt))
    return Pfsa(k, tuple(states))


def relabel(m: Pfsa, perm: Sequence[int]) -> Pfsa:
    """Copy of ``m`` where old state ``q`` becomes ``perm[q]``."""
    inv = [0] * m.n_states
    for old, new in enumerate(perm):
        inv[new] = old
    states = []
    for new in range(m.n_states):
        st = m.states[inv[new]]
        states.append(State(st.probs, {s: perm[t] for s, t in st.next.items()}))
    return Pfsa(m.alphabet_size, tuple(states))
