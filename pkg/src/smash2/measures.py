"""Entropy rate, KL divergence rate, sequence probabilities and log-likelihood
for PFSA. All logarithms are base 2, so every rate is in bits per symbol."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .pfsa import Pfsa, stationary_distribution, _lazy_limit, _lazy_limit_iter, DIRECT_SOLVE_MAX

log = logging.getLogger(__name__)

CLAMP = 1e-12
JOINT_TOL = 1e-10


def _entropy_bits(p) -> float:
    return -sum(v * math.log2(v) for v in p if v > 0)


def entropy_rate(m: Pfsa) -> float:
    """Sum over states of stationary weight times the entropy of the state's row."""
    p = stationary_distribution(m)
    return float(sum(w * _entropy_bits(st.probs) for w, st in zip(p, m.states)))


@dataclass(frozen=True)
class JointStationary:
    probs: np.ndarray  # |Q_g| x |Q_h|
    smoothed: frozenset  # (h_state, symbol) pairs where h forbids a symbol g emits


def _joint_transitions(g: Pfsa, h: Pfsa, p_h: np.ndarray):
    a, b = g.n_states, h.n_states
    T = np.zeros((a * b, a * b))
    smoothed = set()
    for q, gs in enumerate(g.states):
        for r, hs in enumerate(h.states):
            i = q * b + r
            for s, t in gs.next.items():
                w = gs.probs[s]
                u = hs.next.get(s)
                if u is None:
                    # h cannot follow this symbol; its filter resets to stationary
                    smoothed.add((r, s))
                    T[i, t * b : (t + 1) * b] += w * p_h
                else:
                    T[i, t * b + u] += w
    return T, smoothed


def joint_stationary(g: Pfsa, h: Pfsa) -> JointStationary:
    """Stationary frequency of the state pair when a g-generated path drives both machines.

    Computed as the Cesaro limit of the pair chain started from
    ``p_g (x) uniform``. When the pair chain does not synchronize (e.g. h is a
    parity machine) the limit depends on that starting point.
    """
    if g.alphabet_size != h.alphabet_size:
        raise ValueError("machines have different alphabet sizes")
    a, b = g.n_states, h.n_states
    p_h = stationary_distribution(h)
    T, smoothed = _joint_transitions(g, h, p_h)
    p0 = np.kron(stationary_distribution(g), np.full(b, 1.0 / b))
    if a * b <= DIRECT_SOLVE_MAX:
        p = _lazy_limit(p0, T, JOINT_TOL)
    else:
        from scipy.sparse import csr_matrix

        p = _lazy_limit_iter(p0, csr_matrix(T), JOINT_TOL)
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    # drop the smoothing events that live on pairs the chain never visits
    reach = {(r, s) for (r, s) in smoothed if any(p[q * b + r] > 0 and g.states[q].probs[s] > 0 for q in range(a))}
    return JointStationary(p.reshape(a, b), frozenset(reach))


def _smoothed_row(row: Sequence[float]) -> np.ndarray:
    r = np.maximum(np.asarray(row, dtype=float), CLAMP)
    return r / r.sum()


class KLResult(NamedTuple):
    value: float
    smoothing_events: int


def kl_divergence_detail(g: Pfsa, h: Pfsa) -> KLResult:
    """KL divergence rate of h from g plus the number of smoothed (state, symbol) cells."""
    js = joint_stationary(g, h)
    bad_states = {r for r, _ in js.smoothed}
    total = 0.0
    for q, gs in enumerate(g.states):
        pg = np.asarray(gs.probs)
        for r, hs in enumerate(h.states):
            w = js.probs[q, r]
            if w <= 0:
                continue
            ph = _smoothed_row(hs.probs) if r in bad_states else np.asarray(hs.probs)
            mask = pg > 0
            total += w * float(np.sum(pg[mask] * np.log2(pg[mask] / ph[mask])))
    if js.smoothed:
        log.warning("KL divergence smoothed %d forbidden (state, symbol) cells", len(js.smoothed))
    return KLResult(max(total, 0.0), len(js.smoothed))


def kl_divergence(g: Pfsa, h: Pfsa) -> float:
    """Closed-form KL divergence rate D(g || h) in bits per symbol."""
    return kl_divergence_detail(g, h).value


class FilterStep(NamedTuple):
    probs: np.ndarray
    step_prob: float
    clamped: bool


def filter_update(m: Pfsa, p: np.ndarray, symbol: int) -> FilterStep:
    """One step of the forward filter on observing ``symbol``.

    Returns the posterior over states, the predictive probability of the
    symbol, and whether that probability fell below the clamp floor (in which
    case the posterior is reset to the stationary distribution).
    """
    new = np.zeros(m.n_states)
    for q, st in enumerate(m.states):
        t = st.next.get(symbol)
        if t is not None and p[q] > 0:
            new[t] += p[q] * st.probs[symbol]
    z = float(new.sum())
    if z < CLAMP:
        return FilterStep(stationary_distribution(m), CLAMP, True)
    return FilterStep(new / z, z, False)


def _transition_lists(m: Pfsa):
    lists = [[] for _ in range(m.alphabet_size)]
    for q, st in enumerate(m.states):
        for s, t in st.next.items():
            lists[s].append((q, t, st.probs[s]))
    return lists


def log_likelihood_detail(x: Sequence[int], m: Pfsa) -> tuple[float, int]:
    """Per-symbol negative log2-likelihood of ``x`` under ``m`` and the clamp count."""
    n = len(x)
    if n == 0:
        raise ValueError("log-likelihood needs a nonempty sequence")
    stat = stationary_distribution(m).tolist()
    k = m.alphabet_size
    trans = _transition_lists(m)
    nq = m.n_states
    if nq == 1:
        row = m.states[0].probs
        total = 0.0
        clamps = 0
        for s in x:
            if not 0 <= s < k:
                raise ValueError(f"symbol {s} outside alphabet of size {k}")
            v = row[s]
            if v < CLAMP:
                v = CLAMP
                clamps += 1
            total += math.log2(v)
        return -total / n, clamps
    p = list(stat)
    total = 0.0
    clamps = 0
    log2 = math.log2
    for s in x:
        if not 0 <= s < k:
            raise ValueError(f"symbol {s} outside alphabet of size {k}")
        new = [0.0] * nq
        for q, t, w in trans[s]:
            new[t] += p[q] * w
        z = sum(new)
        if z < CLAMP:
            clamps += 1
            total += log2(CLAMP)
            p = list(stat)
            continue
        total += log2(z)
        inv = 1.0 / z
        p = [v * inv for v in new]
    return -total / n, clamps


def log_likelihood(x: Sequence[int], m: Pfsa) -> float:
    """``-(1/|x|) log2 Pr_m(x)`` by streaming the forward filter from stationarity."""
    return log_likelihood_detail(x, m)[0]


def seq_probability(m: Pfsa, x: Sequence[int]) -> float:
    """Probability that ``m`` (started at stationarity) emits ``x`` as a prefix."""
    p = stationary_distribution(m)
    prob = 1.0
    for s in x:
        new = np.zeros(m.n_states)
        for q, st in enumerate(m.states):
            t = st.next.get(s)
            if t is not None:
                new[t] += p[q] * st.probs[s]
        z = new.sum()
        if z == 0.0:
            return 0.0
        prob *= z
        p = new / z
    return float(prob)
