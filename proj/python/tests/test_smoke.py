"""Smoke tests for the _seqpred extension module.

These only check that the bindings are importable and numerically sane;
the heavy correctness testing lives in the C++ suites.
"""

import math

import pytest

import _seqpred as sp


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def test_hmm_roundtrip():
    hmm = sp.Hmm([[0.9, 0.1], [0.2, 0.8]], [[1.0, 0.0], [0.0, 1.0]])
    assert hmm.k == 2 and hmm.l == 2
    assert close(sum(hmm.stationary), 1.0)
    assert close(hmm.stationary[0], 2.0 / 3.0)

    x, z = hmm.sample(20, seed=7)
    assert len(x) == 20 and len(z) == 20
    assert x == z  # identity emission

    d = hmm.next_dist(x)
    assert close(sum(d), 1.0)


def test_hmm_sampling_deterministic():
    hmm = sp.Hmm([[0.5, 0.5], [0.3, 0.7]], [[0.8, 0.2], [0.1, 0.9]])
    assert hmm.sample(50, seed=3) == hmm.sample(50, seed=3)
    assert hmm.sample(50, seed=3) != hmm.sample(50, seed=4)


def test_sequence_log_prob_normalizes():
    hmm = sp.Hmm([[0.6, 0.4], [0.25, 0.75]], [[0.7, 0.3], [0.2, 0.8]])
    total = 0.0
    for idx in range(16):
        x = [(idx >> (3 - t)) & 1 for t in range(4)]
        total += math.exp(hmm.sequence_log_prob(x))
    assert close(total, 1.0, 1e-12)


def test_renewal_basics():
    law = sp.Renewal([0.0, 1.0])  # every gap is exactly 2
    x = law.sample(10, seed=1)
    ones = [i for i, s in enumerate(x) if s == 1]
    assert all(b - a == 2 for a, b in zip(ones, ones[1:]))

    d = law.next_dist([0, 1])
    assert close(d[0], 1.0)  # a one can never follow a one at gap 2

    hmm = law.as_hmm()
    assert hmm.k == 2 and hmm.l == 2


def test_marginal_matches_average_at_n1():
    # With an empty history both routes reduce to the same one-step mixture.
    lp0 = sp.marginal_log_prob(2, 2, [0])
    lp1 = sp.marginal_log_prob(2, 2, [1])
    assert close(math.exp(lp0) + math.exp(lp1), 1.0)

    d = sp.average_next_dist(2, 2, [0])
    assert close(sum(d), 1.0)


def test_markov_predictor_uniform_start():
    d = sp.markov_next_dist([], 2)
    assert close(d[0], 0.5) and close(d[1], 0.5)


def test_count_trajectories_string():
    # Single symbol, one state: exactly one paired path.
    n = sp.count_trajectories([0], 1, 2, [[0]], [[1, 0]])
    assert n == "1"


def test_shtarkov_iid_tiny():
    # Binary length-2: sum of max-likelihoods is 1 + 1 + 1/4*2 = 2.5.
    assert close(sp.shtarkov_iid(2, 2), math.log(2.5))


def test_latent_info_bounded():
    hmm = sp.Hmm([[0.9, 0.1], [0.2, 0.8]], [[0.95, 0.05], [0.05, 0.95]])
    v = sp.latent_info(hmm, 5)
    assert 0.0 <= v <= math.log(2) + 1e-12


def test_budget_error_raised():
    with pytest.raises(sp.BudgetExceededError):
        sp.marginal_log_prob(4, 4, [0, 1, 2, 3] * 6, budget=10.0)
