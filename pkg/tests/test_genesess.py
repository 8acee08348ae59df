import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smash2.genesess import (
    EmpiricalDerivative,
    InferParams,
    InputTooShortError,
    NgramCounter,
    empirical_derivative,
    infer,
    scc_terminal,
    select_from_derivatives,
    select_sync_sequence,
)
from smash2.measures import kl_divergence
from smash2.pfsa import sample, validate


def naive_derivative(x, y, k):
    """Oracle: direct O(|x| |y|) scan."""
    counts = [0] * k
    for i in range(len(x) - len(y)):
        if list(x[i : i + len(y)]) == list(y):
            counts[x[i + len(y)]] += 1
    return counts


def deriv(p, support=1000):
    return EmpiricalDerivative(tuple(int(round(v * support)) for v in p))


def test_empirical_derivative_examples():
    d = empirical_derivative([0, 0, 1, 1], [0])
    assert d.support_count == 2
    np.testing.assert_allclose(d.dist, [0.5, 0.5])
    d = empirical_derivative([0, 0, 1, 1], [1])
    assert d.support_count == 1
    np.testing.assert_allclose(d.dist, [0.0, 1.0])
    d = empirical_derivative([0, 1] * 10_000, [0])
    np.testing.assert_allclose(d.dist, [0.0, 1.0])


def test_empirical_derivative_empty_history():
    # every index has the empty history as an occurrence, followed by x[i]
    d = empirical_derivative([0, 0, 1, 1, 0], [])
    assert d.counts == (3, 2)


def test_unseen_history_is_flagged():
    d = empirical_derivative([0, 0, 0], [1], alphabet_size=2)
    assert not d.defined
    with pytest.raises(ValueError):
        d.dist


@settings(max_examples=150, deadline=None)
@given(
    st.integers(2, 4).flatmap(
        lambda k: st.tuples(
            st.just(k),
            st.lists(st.integers(0, k - 1), max_size=60),
            st.lists(st.integers(0, k - 1), max_size=5),
        )
    )
)
def test_empirical_derivative_matches_scan(case):
    k, x, y = case
    assert list(NgramCounter(x, k).derivative(y).counts) == naive_derivative(x, y, k)


def test_long_history_scan_path():
    # 2**63 > code limit forces the sliding-window path
    x = sample_binary(5000, seed=3)
    y = x[100:162]
    assert list(NgramCounter(x, 2).derivative(y).counts) == naive_derivative(x, y, 2)


def sample_binary(n, seed):
    return np.random.default_rng(seed).integers(0, 2, n).tolist()


def test_select_from_derivatives_example():
    cands = {(): deriv((0.5, 0.5)), (0, 0): deriv((0.9, 0.1)), (1,): deriv((0.2, 0.8))}
    assert select_from_derivatives(cands) == (0, 0)
    assert select_from_derivatives(cands, tie_radius=0.05) == (0, 0)


def test_select_tie_prefers_short_history():
    cands = {
        (0, 1, 0, 1): deriv((0.19, 0.81), 100),
        (0, 1): deriv((0.2, 0.8), 5000),
        (): deriv((0.5, 0.5)),
        (0,): deriv((0.52, 0.48)),
        (1,): deriv((0.55, 0.45)),
    }
    assert select_from_derivatives(cands) == (0, 1, 0, 1)
    assert select_from_derivatives(cands, tie_radius=0.05) == (0, 1)


def test_select_empty_candidates():
    with pytest.raises(InputTooShortError):
        select_from_derivatives({})
    with pytest.raises(InputTooShortError):
        select_sync_sequence([0, 1, 0], InferParams())


def test_select_one_state_machine(coin):
    x = [0] * 5000
    assert select_sync_sequence(x, InferParams(), alphabet_size=2) == ()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_select_binary_extreme(G, seed):
    x = sample(G, 20_000, seed)
    params = InferParams(epsilon=0.1)
    y = select_sync_sequence(x, params)
    counter = NgramCounter(x, 2)
    phi0 = []
    for n in range(4):
        for code in range(2**n):
            h = tuple((code >> (n - 1 - j)) & 1 for j in range(n))
            d = counter.derivative(h)
            if d.support_count >= params.min_count:
                phi0.append(d.dist[0])
    chosen = counter.derivative(y).dist[0]
    # within the tie radius of the farthest extreme of the 1-simplex
    assert min(abs(chosen - max(phi0)), abs(chosen - min(phi0))) <= params.epsilon


def test_scc_terminal_drops_transient_root():
    # q_lambda (0) feeds q0 (1) and q1 (2); q0 and q1 are closed
    succ = [[1, 2], [1, 2], [1, 2]]
    assert scc_terminal(succ) == [1, 2]


def test_scc_terminal_connected():
    succ = [[1], [2], [0]]
    assert scc_terminal(succ) == [0, 1, 2]


def test_scc_terminal_visit_mass():
    succ = [[1, 3], [2], [1], [4], [3]]
    assert scc_terminal(succ, [0, 45, 45, 5, 5]) == [1, 2]
    assert scc_terminal(succ, [0, 5, 5, 45, 45]) == [3, 4]


def best_row_error(true, inferred):
    rows = sorted(map(tuple, inferred.obs_matrix))
    ref = sorted(map(tuple, true.obs_matrix))
    return max(abs(a - b) for r, s in zip(rows, ref) for a, b in zip(r, s))


def test_infer_g(G):
    m, report = infer(sample(G, 100_000, seed=5), InferParams(epsilon=0.05))
    assert validate(m) == []
    assert m.n_states == 2
    assert best_row_error(G, m) <= 0.02
    assert kl_divergence(G, m) <= 0.01
    assert report.n_states == 2
    assert sum(report.visit_counts) == 100_000


def test_infer_coin(coin):
    m, _ = infer(sample(coin, 10_000, seed=1))
    assert m.n_states == 1
    np.testing.assert_allclose(m.states[0].probs, [0.5, 0.5], atol=0.02)


def test_infer_h(H):
    m, _ = infer(sample(H, 200_000, seed=8), InferParams(epsilon=0.05))
    assert validate(m) == []
    assert m.n_states == 4
    assert kl_divergence(H, m) <= 0.01


def test_infer_constant_sequence():
    m, report = infer([0] * 500, alphabet_size=2)
    assert m.n_states == 1
    assert validate(m) == []
    assert m.states[0].probs[0] > 0.99
    assert report.low_support_edges == 1


def test_infer_coarse_epsilon(H):
    m, report = infer(sample(H, 20_000, seed=2), InferParams(epsilon=0.9))
    assert validate(m) == []
    assert report.coarse_merge
    assert m.n_states == 1


def test_infer_state_cap(H):
    m, report = infer(sample(H, 50_000, seed=4), InferParams(max_states=2))
    assert validate(m) == []
    assert m.n_states <= 2
    assert report.capped_edges > 0


def test_infer_too_short():
    with pytest.raises(InputTooShortError):
        infer([0, 1, 1], InferParams(min_count=5))


def test_infer_params_validation():
    for kw in ({"epsilon": 0}, {"epsilon": 1.5}, {"min_count": 0}, {"max_states": 0}, {"smoothing_alpha": -1}):
        with pytest.raises(ValueError):
            InferParams(**kw)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([0.02, 0.05, 0.1, 0.3]), st.integers(200, 3000))
def test_infer_output_is_valid(seed, eps, n):
    rng = np.random.default_rng(seed)
    x = (rng.random(n) < rng.random()).astype(int).tolist()
    m, _ = infer(x, InferParams(epsilon=eps), alphabet_size=2)
    assert validate(m) == []


@pytest.mark.parametrize(
    "name,sizes",
    [("G", [5_000, 10_000, 20_000, 40_000]), ("H", [10_000, 20_000, 40_000, 80_000])],
)
def test_more_data_does_not_hurt(name, sizes, G, H):
    true = {"G": G, "H": H}[name]
    medians = []
    for n in sizes:
        medians.append(np.median([kl_divergence(true, infer(sample(true, n, s))[0]) for s in range(5)]))
    # 2e-5 bits is the sampling-noise floor left by the smoothing pseudo-counts
    for a, b in zip(medians, medians[1:]):
        assert b <= a + 2e-5
