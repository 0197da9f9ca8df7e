import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtsmc.chain import random_kernel
from dtsmc.errors import DimensionMismatch, EmptySubset, NegativeTail, NonzeroAtZero
from dtsmc.renewal import (
    distribution_sequence,
    markov_renewal_function,
    reliability_sequence,
    restricted_renewal_function,
)
from dtsmc.seqalg import (
    as_horizon,
    conv_inverse_of_delta_minus,
    convolve,
    convolve_vec,
    cumulative,
    delta_identity,
    diag_restrict,
    n_fold,
    neumann_inverse,
    restrict,
    survival,
)

from oracles import brute_convolve, path_distribution, path_nfold, path_reliability

kernels = st.builds(
    lambda seed, n, k_max: random_kernel(n, k_max, np.random.default_rng(seed), density=0.7),
    st.integers(0, 2**32 - 1),
    st.integers(2, 3),
    st.integers(1, 4),
)


def _seq(rng, K, n, m):
    return rng.standard_normal((K + 1, n, m))


def test_delta_is_two_sided_identity(rng):
    A = _seq(rng, 6, 3, 3)
    d = delta_identity(3, 6)
    np.testing.assert_array_equal(convolve(d, A), A)
    np.testing.assert_array_equal(convolve(A, d), A)


def test_convolve_matches_triple_loop(rng):
    A, B = _seq(rng, 5, 2, 3), _seq(rng, 7, 3, 4)
    np.testing.assert_allclose(convolve(A, B, 5), brute_convolve(A, B, 5), atol=1e-12)
    np.testing.assert_allclose(convolve(A, B, 9), brute_convolve(A, B, 9), atol=1e-12)


def test_convolve_default_horizon_is_shorter(rng):
    assert convolve(_seq(rng, 3, 2, 2), _seq(rng, 8, 2, 2)).shape == (4, 2, 2)


def test_convolve_rejects_mismatched_inner_dimension(rng):
    with pytest.raises(DimensionMismatch):
        convolve(_seq(rng, 3, 2, 3), _seq(rng, 3, 2, 2))


def test_convolve_is_associative(rng):
    A, B, C = _seq(rng, 6, 2, 3), _seq(rng, 6, 3, 3), _seq(rng, 6, 3, 2)
    np.testing.assert_allclose(
        convolve(convolve(A, B), C), convolve(A, convolve(B, C)), atol=1e-10
    )


def test_as_horizon_pads_and_truncates(rng):
    A = _seq(rng, 2, 2, 2)
    assert as_horizon(A, 5).shape[0] == 6
    assert not as_horizon(A, 5)[3:].any()
    np.testing.assert_array_equal(as_horizon(A, 1), A[:2])


@settings(max_examples=25, deadline=None)
@given(kernel=kernels)
def test_n_fold_matches_path_enumeration(kernel):
    K = 8
    for n_jumps in range(4):
        np.testing.assert_allclose(
            n_fold(kernel.q, n_jumps, K), path_nfold(kernel.q, n_jumps, K), atol=1e-12
        )


@settings(max_examples=25, deadline=None)
@given(kernel=kernels)
def test_inverse_solves_both_renewal_equations(kernel):
    K = 10
    q = kernel.q
    psi = markov_renewal_function(q, K)
    d = delta_identity(kernel.n, K)
    np.testing.assert_allclose(psi, d + convolve(q, psi, K), atol=1e-12)
    np.testing.assert_allclose(psi, d + convolve(psi, q, K), atol=1e-12)
    np.testing.assert_allclose(psi, neumann_inverse(q, K), atol=1e-12)


def test_inverse_requires_zero_at_lag_zero(two_state):
    q = two_state.q.copy()
    q[0, 0, 0] = 0.1
    with pytest.raises(NonzeroAtZero):
        conv_inverse_of_delta_minus(q, 4)


def test_psi_counts_visits(alternating):
    psi = markov_renewal_function(alternating.q, 6)
    # a is re-entered at 3 and 6, b at 1 and 4
    np.testing.assert_array_equal(psi[:, 0, 0], [1, 0, 0, 1, 0, 0, 1])
    np.testing.assert_array_equal(psi[:, 0, 1], [0, 1, 0, 0, 1, 0, 0])
    np.testing.assert_array_equal(cumulative(psi)[6, 0], [3, 2])


def test_survival_forms_agree(two_state):
    q = two_state.q
    direct = survival(q, K=5)
    by_mass = survival(q, row_mass=np.ones(2), K=5)
    np.testing.assert_allclose(direct, by_mass, atol=1e-15)
    np.testing.assert_allclose(direct[:, 0, 0], [1, 0.5, 0, 0, 0, 0])
    np.testing.assert_allclose(direct[:, 1, 1], [1, 0, 0, 0, 0, 0])
    assert not direct[:, 0, 1].any()


def test_survival_rejects_too_small_mass(two_state):
    with pytest.raises(NegativeTail):
        survival(two_state.q, row_mass=[0.5, 1.0])


def test_restrict_before_inverting(alternating):
    psi = markov_renewal_function(alternating.q, 6)
    psi_uu = restricted_renewal_function(alternating.q, [0], 6)
    assert psi[3, 0, 0] == 1.0
    np.testing.assert_array_equal(psi_uu, delta_identity(1, 6))
    np.testing.assert_array_equal(restrict(psi, [0])[:, 0, 0], psi[:, 0, 0])


def test_restrict_empty_subset(alternating):
    with pytest.raises(EmptySubset):
        restrict(alternating.q, [])
    with pytest.raises(EmptySubset):
        diag_restrict(alternating.q, [])


def test_convolve_vec_matches_matrix_form(rng):
    A, v = _seq(rng, 5, 3, 3), rng.standard_normal((6, 3))
    np.testing.assert_allclose(convolve_vec(A, v), brute_convolve(A, v[:, :, None], 5)[:, :, 0])


def test_distribution_examples(alternating):
    P = distribution_sequence(alternating.q, 6)
    np.testing.assert_array_equal(P[:, 0, 0], [1, 0, 0, 1, 0, 0, 1])
    np.testing.assert_array_equal(P[:, 1, 0], [0, 0, 1, 0, 0, 1, 0])
    np.testing.assert_array_equal(P.sum(axis=2), 1.0)


def test_reliability_examples(alternating, two_state):
    np.testing.assert_array_equal(reliability_sequence(alternating.q, [0], 4)[:, 0], [1, 0, 0, 0, 0])
    np.testing.assert_allclose(reliability_sequence(two_state.q, [0], 3)[:, 0], [1, 0.5, 0, 0])


@settings(max_examples=20, deadline=None)
@given(kernel=kernels, data=st.data())
def test_distribution_and_reliability_match_enumeration(kernel, data):
    K = 8
    q = kernel.q
    P = distribution_sequence(q, K)
    np.testing.assert_allclose(P, path_distribution(q, K), atol=1e-12)
    np.testing.assert_allclose(P.sum(axis=2), 1.0, atol=1e-12)
    up = sorted(data.draw(st.sets(st.integers(0, kernel.n - 1), min_size=1, max_size=kernel.n - 1)))
    R = reliability_sequence(q, up, K)
    np.testing.assert_allclose(R, path_reliability(q, up, K), atol=1e-12)
    assert np.all(np.diff(R, axis=0) <= 1e-15)
