import numpy as np
import pytest

from dtsmc.chain import PartitionUD, SemiMarkovKernel, StateSpace, random_kernel
from dtsmc.errors import EmptyTrajectory, UnvisitedState
from dtsmc.estimators import (
    bundle_to_dict,
    default_horizon,
    estimate_all,
    estimate_distribution,
    estimate_kernel,
    estimate_psi,
    estimate_reliability,
)
from dtsmc.renewal import distribution_sequence, markov_renewal_function, reliability_sequence
from dtsmc.simulate import simulate, trajectory_from_csv

from oracles import path_distribution, path_reliability


def _traj(rows, states="ab"):
    text = "n,state,sojourn,cumtime\n" + "\n".join(
        f"{n},{s},{x},{c}" for n, (s, x, c) in enumerate(rows)
    )
    return trajectory_from_csv(text, StateSpace(tuple(states)))


def test_kernel_estimate_counts_transitions():
    # a -1-> b -2-> a -2-> b -1-> a
    t = _traj([("a", 0, 0), ("b", 1, 1), ("a", 2, 3), ("b", 2, 5), ("a", 1, 6)])
    est = estimate_kernel(t)
    np.testing.assert_array_equal(est.counts.N_i, [2, 2])
    assert est.q[1, 0, 1] == 0.5 and est.q[2, 0, 1] == 0.5
    assert est.q[2, 1, 0] == 0.5 and est.q[1, 1, 0] == 0.5
    assert est.q.shape[0] == 3
    np.testing.assert_allclose(est.mu_hat, [3.0, 3.0])


def test_deterministic_kernel_is_recovered_exactly(alternating):
    t = simulate(alternating, "a", 30, seed=0)
    est = estimate_kernel(t)
    np.testing.assert_array_equal(est.q, alternating.q)
    K = 12
    b = estimate_all(t, K, PartitionUD(alternating.states, ("a",)))
    np.testing.assert_array_equal(b.psi, markov_renewal_function(alternating.q, K))
    np.testing.assert_array_equal(b.P, distribution_sequence(alternating.q, K))
    np.testing.assert_array_equal(b.R, reliability_sequence(alternating.q, [0], K))


def test_empty_trajectory(two_state):
    with pytest.raises(EmptyTrajectory):
        estimate_kernel(simulate(two_state, "a", 0, seed=0))


def test_unvisited_states_are_flagged():
    t = _traj([("a", 0, 0), ("b", 1, 1), ("a", 1, 2)], states="abc")
    est = estimate_kernel(t)
    np.testing.assert_array_equal(est.visited, [True, True, False])
    assert not est.q[:, 2].any()
    assert est.mu_hat[2] == np.inf
    psi = estimate_psi(est, 5)
    with pytest.raises(UnvisitedState) as info:
        estimate_distribution(est, psi, 5)
    assert info.value.states == ["c"]
    with pytest.raises(UnvisitedState):
        est.as_kernel()


def test_reliability_with_unreachable_down_set():
    # c is never entered, so the observed up set {a, b} never fails
    t = _traj([("a", 0, 0), ("b", 1, 1), ("a", 2, 3), ("b", 1, 4)], states="abc")
    est = estimate_kernel(t)
    R = estimate_reliability(est, PartitionUD(t.states, ("a", "b")), 10)
    np.testing.assert_allclose(R, 1.0, atol=1e-15)
    with pytest.raises(UnvisitedState):
        estimate_reliability(est, PartitionUD(t.states, ("c",)), 10)


def test_estimates_match_enumeration_on_the_empirical_kernel(rng):
    kernel = random_kernel(3, 3, rng, density=0.8)
    t = simulate(kernel, "a", 400, seed=11)
    part = PartitionUD(kernel.states, ("a", "b"))
    K = 8
    b = estimate_all(t, K, part)
    q_hat = b.kernel.q
    np.testing.assert_allclose(b.P, path_distribution(q_hat, K), atol=1e-12)
    np.testing.assert_allclose(b.R, path_reliability(q_hat, part.up_index, K), atol=1e-12)
    np.testing.assert_allclose(b.P.sum(axis=2), 1.0, atol=1e-12)


def test_estimates_converge(rng):
    kernel = random_kernel(3, 3, rng)
    errs = []
    for M in (1_000, 100_000):
        est = estimate_kernel(simulate(kernel, "a", M, seed=M))
        L = max(est.q.shape[0], kernel.q.shape[0])
        pad = lambda a: np.concatenate([a, np.zeros((L - a.shape[0],) + a.shape[1:])])  # noqa: E731
        errs.append(np.abs(pad(est.q) - pad(kernel.q)).max())
    assert errs[1] < errs[0]
    assert errs[1] < 0.02


def test_kernel_only_skips_distribution(two_state):
    b = estimate_all(simulate(two_state, "a", 50, seed=0), 6, distribution=False)
    assert b.P is None and b.R is None


def test_bundle_dump(two_state):
    t = simulate(two_state, "a", 50, seed=4)
    b = estimate_all(t, 6, PartitionUD(two_state.states, ("a",)))
    doc = bundle_to_dict(b)
    assert doc["M"] == 50 and doc["K"] == 6
    assert sum(d["p"] for d in doc["q_hat"] if d["from"] == "a") == pytest.approx(1.0)
    assert len(doc["R_hat"]["a"]) == 7
    assert doc["partition"] == {"up": ["a"], "down": ["b"]}


def test_default_horizon(two_state):
    assert default_horizon(two_state) == 8
    assert default_horizon(4, 3) == 24


def test_partition_order_does_not_matter():
    q = np.zeros((2, 3, 3))
    q[1] = 1 / 3
    kernel = SemiMarkovKernel(StateSpace(("a", "b", "c")), q)
    t = simulate(kernel, "a", 300, seed=8)
    est = estimate_kernel(t)
    r1 = estimate_reliability(est, PartitionUD(kernel.states, ("c", "a")), 6)
    r2 = estimate_reliability(est, PartitionUD(kernel.states, ("a", "c")), 6)
    np.testing.assert_array_equal(r1, r2)
