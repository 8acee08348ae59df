"""Acceptance criteria. Each test prints one PASS/FAIL line in the terminal summary."""

import time

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import ACCEPTANCE_LINES, all_words, duplicated_g, machine_g, machine_h
from smash2.genesess import InferParams, infer
from smash2.measures import entropy_rate, kl_divergence, log_likelihood, seq_probability
from smash2.metric import default_base_set, distance, distance_matrix
from smash2.pfsa import minimize, sample, stationary_distribution
from smash2.quantize import (
    LabeledDataset,
    QuantScheme,
    SearchGrid,
    class_separation,
    format_scheme,
    parse_scheme,
    scheme_search,
)

G, H = machine_g(), machine_h()


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    assert ok, detail


def test_criterion_01_entropy():
    hg, hh = entropy_rate(G), entropy_rate(H)
    ok = abs(hg - 0.9710) <= 5e-4 and abs(hh - 0.8069) <= 5e-4
    record(1, ok, f"entropy_rate G={hg:.5f} (0.9710) H={hh:.5f} (0.8069), tol 5e-4")


def test_criterion_02_kl():
    gh, hg = kl_divergence(G, H), kl_divergence(H, G)
    ok = abs(gh - 0.2266) <= 5e-4 and abs(hg - 0.2030) <= 5e-4
    record(2, ok, f"KL(G||H)={gh:.5f} (0.2266) KL(H||G)={hg:.5f} (0.2030), tol 5e-4")


def test_criterion_03_loglik_convergence():
    t0 = time.perf_counter()
    worst = 0.0
    ms = {"G": G, "H": H}
    for g in ms.values():
        for h in ms.values():
            limit = entropy_rate(g) + kl_divergence(g, h)
            for seed in range(3):
                worst = max(worst, abs(log_likelihood(sample(g, 50_000, seed), h) - limit))
    dt = time.perf_counter() - t0
    record(3, worst <= 0.02 and dt < 10, f"max |L - (H+D)| = {worst:.4f} <= 0.02 over 4 pairs x 3 seeds, {dt:.1f}s < 10s")


def test_criterion_04_normalization():
    t0 = time.perf_counter()
    worst = 0.0
    for m in [G, H, *default_base_set().machines]:
        for d in range(11):
            worst = max(worst, abs(sum(seq_probability(m, w) for w in all_words(2, d)) - 1))
    dt = time.perf_counter() - t0
    record(4, worst <= 1e-9 and dt < 5, f"max |sum P(x) - 1| = {worst:.1e} <= 1e-9 for d <= 10 on 6 machines, {dt:.1f}s < 5s")


def test_criterion_05_recovery():
    t0 = time.perf_counter()
    rows = []
    ok = True
    for name, m, n in (("G", G, 100_000), ("H", H, 200_000)):
        for seed in range(3):
            inferred, _ = infer(sample(m, n, seed), InferParams(epsilon=0.05))
            kl = kl_divergence(m, inferred)
            ok &= inferred.n_states == m.n_states and kl <= 0.01
            rows.append(f"{name}/{seed}:{inferred.n_states}st,KL={kl:.1e}")
    dt = time.perf_counter() - t0
    record(5, ok and dt < 60, f"{' '.join(rows)}, {dt:.1f}s < 60s")


def test_criterion_06_minimization():
    big = duplicated_g()
    small = minimize(big)

    def path_prob(m, w):
        p = stationary_distribution(m)
        total = 0.0
        for q, weight in enumerate(p):
            for s in w:
                weight *= m.states[q].probs[s]
                q = m.states[q].next[s]
            total += weight
        return total

    worst = max(abs(path_prob(small, w) - path_prob(G, w)) for d in range(1, 9) for w in all_words(2, d))
    ok = small.n_states == 2 and worst <= 1e-9
    record(6, ok, f"3 -> {small.n_states} states, max d<=8 probability gap {worst:.1e} <= 1e-9")


def loo_1nn(D, labels):
    D = D + np.diag(np.full(len(labels), np.inf))
    return float(np.mean([labels[int(np.argmin(row))] == lab for row, lab in zip(D, labels)]))


def test_criterion_07_two_class():
    t0 = time.perf_counter()
    seqs = [sample(G, 500, s) for s in range(20)] + [sample(H, 500, 1000 + s) for s in range(20)]
    labels = ["G"] * 20 + ["H"] * 20
    D = distance_matrix(seqs, default_base_set())
    r = class_separation(D, labels).ratio
    acc = loo_1nn(D, labels)
    dt = time.perf_counter() - t0
    record(7, r < 0.5 and acc >= 0.95 and dt < 10, f"r(D)={r:.3f} < 0.5, 1-NN accuracy {acc:.3f} >= 0.95, {dt:.1f}s < 10s")


def test_criterion_08_metric_axioms():
    bases = default_base_set()
    rng = np.random.default_rng(8)
    sym_ok, diag_ok, worst = True, True, -np.inf
    for _ in range(100):
        x, y, z = (rng.integers(0, 2, rng.integers(1, 300)).tolist() for _ in range(3))
        dxy = distance(x, y, bases)
        sym_ok &= dxy == distance(y, x, bases)
        diag_ok &= distance(x, x, bases) == 0.0
        worst = max(worst, dxy - distance(x, z, bases) - distance(z, y, bases))
    ok = sym_ok and diag_ok and worst <= 1e-9
    record(8, ok, f"symmetry {sym_ok}, zero diagonal {diag_ok}, max triangle excess {worst:.2e} <= 1e-9 on 100 triples")


finite = st.floats(min_value=-1e9, max_value=1e9, allow_nan=False, allow_infinity=False)
schemes = st.builds(
    lambda d, nz, cuts: QuantScheme(d, nz, tuple(sorted(set(cuts)))),
    st.integers(0, 20),
    st.booleans(),
    st.lists(finite, min_size=1, max_size=8),
)


def test_criterion_09_grammar():
    failures = []

    @settings(max_examples=500, deadline=None, database=None, suppress_health_check=[HealthCheck.too_slow])
    @given(schemes)
    def roundtrip(s):
        text = format_scheme(s)
        if parse_scheme(text) != s or format_scheme(parse_scheme(text)) != text:
            failures.append(text)

    roundtrip()
    lit = parse_scheme("D1N1[3.]") == QuantScheme(1, True, (3.0,)) and parse_scheme("D0N0[-15.]") == QuantScheme(
        0, False, (-15.0,)
    )
    ok = not failures and lit
    record(9, ok, f"500-case round trip failures={len(failures)}, literal schemes parse={lit}")


def test_criterion_10_permutation_control():
    series = [[float(v) for v in sample(G, 500, s)] for s in range(20)]
    series += [[float(v) for v in sample(H, 500, 1000 + s)] for s in range(20)]
    labels = ["G"] * 20 + ["H"] * 20
    grid = SearchGrid(extra_schemes=(QuantScheme(0, False, (0.5,)),))
    best = scheme_search(LabeledDataset(series, labels), grid)[0][0].ratio
    rng = np.random.default_rng(10)
    shuffled = [
        scheme_search(LabeledDataset(series, list(rng.permutation(labels))), grid)[0][0].ratio for _ in range(5)
    ]
    med = float(np.median(shuffled))
    record(10, med > best, f"best r true labels {best:.3f} < median over 5 shuffles {med:.3f}")
