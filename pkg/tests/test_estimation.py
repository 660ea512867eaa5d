import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fqkd.estimation import (
    DataError,
    alpha_coefficient,
    beta,
    dimension_of,
    dit_error_rate,
    fit_physical_transition,
    forward_map,
    invert_map,
    is_physical,
    normalize_counts,
    phase_error_rate,
    phase_error_standard_error,
    project_simplex_rows,
    secret_key_rate,
    shannon_entropy_d,
)
from fqkd.hilbert import DomainError, enumerate_fqubit_labels

from conftest import random_stochastic


def alpha_psum(d, j, k, m, ell):
    """Inversion weight with the explicit root-of-unity sum."""
    s = sum(cmath.exp(2j * cmath.pi * p * (m - (k - j) * ell) / d) for p in range(d))
    return 2 / d**2 * ((2 - d) / (d - 1) + s)


def forward_bruteforce(P):
    d = len(P)
    labels = enumerate_fqubit_labels(d)
    out = np.zeros((len(labels), len(labels)))
    for x, (j, k, m) in enumerate(labels):
        for y, (j2, k2, m2) in enumerate(labels):
            out[x, y] = 4 / d**2 * sum(
                math.cos(math.pi * (m - (k - j) * l) / d) ** 2
                * math.cos(math.pi * (m2 - (k2 - j2) * n) / d) ** 2
                * P[l][n]
                for l in range(d)
                for n in range(d)
            )
    return out


# --- entropy / key rate


def test_entropy_examples():
    assert shannon_entropy_d(0, 4) == 0
    assert shannon_entropy_d(0.5, 2) == pytest.approx(1)
    assert shannon_entropy_d(1, 4) == pytest.approx(math.log2(3))
    x = 0.0289
    direct = -x * math.log2(x / 3) - (1 - x) * math.log2(1 - x)
    assert shannon_entropy_d(x, 4) == pytest.approx(direct, abs=1e-15)
    for bad in (-0.1, 1.1):
        with pytest.raises(DomainError):
            shannon_entropy_d(bad, 4)


def test_key_rate_examples():
    assert secret_key_rate(4, 0, 0).key_rate == 2
    rep = secret_key_rate(4, 0.0289, 0.0691)
    assert rep.key_rate == pytest.approx(1.28, abs=0.02)
    assert rep.leak_bound == shannon_entropy_d(0.0691, 4)
    assert rep.key_rate == pytest.approx(
        2 - shannon_entropy_d(0.0289, 4) - shannon_entropy_d(0.0691, 4), abs=1e-12
    )
    zero = secret_key_rate(2, 0.5, 0)
    assert zero.key_rate == pytest.approx(0, abs=1e-15) and zero.insecure
    assert secret_key_rate(4, 0.3, 0.4).insecure
    with pytest.raises(DomainError):
        secret_key_rate(4, 0.1, 1.5)


@pytest.mark.parametrize("d", [2, 4, 8])
def test_key_rate_monotone(d):
    grid = np.linspace(0, 1, 41)
    for fixed in (0.0, 0.05, 0.3):
        r1 = [secret_key_rate(d, e, fixed).key_rate for e in grid]
        r2 = [secret_key_rate(d, fixed, e).key_rate for e in grid]
        # h_d rises on [0, (d-1)/d] only; the rate is non-increasing there
        upto = grid <= (d - 1) / d
        assert np.all(np.diff(np.array(r1)[upto]) <= 1e-12)
        assert np.all(np.diff(np.array(r2)[upto]) <= 1e-12)


# --- alpha / beta


def test_beta_examples():
    assert beta(2) == 0
    assert beta(4) == pytest.approx(-2 / 3)
    assert beta(3) == pytest.approx(-1 / 2)


def test_alpha_examples():
    assert alpha_coefficient(4, 0, 1, 0, 0) == pytest.approx(5 / 12)
    assert alpha_coefficient(4, 0, 1, 1, 0) == pytest.approx(-1 / 12)
    assert alpha_psum(4, 0, 1, 0, 0).real == pytest.approx(5 / 12)
    assert alpha_psum(4, 0, 1, 1, 0).real == pytest.approx(-1 / 12)
    assert alpha_coefficient(2, 0, 1, 1, 1) == 1
    with pytest.raises(DomainError):
        alpha_coefficient(4, 0, 1, 0, 4)
    with pytest.raises(DomainError):
        alpha_coefficient(4, 1, 0, 0, 0)


@pytest.mark.parametrize("d", range(2, 9))
def test_alpha_closed_form_matches_psum(d):
    for j, k, m in enumerate_fqubit_labels(d):
        for ell in range(d):
            ref = alpha_psum(d, j, k, m, ell)
            assert abs(ref.imag) < 1e-12
            assert alpha_coefficient(d, j, k, m, ell) == pytest.approx(ref.real, abs=1e-12)


@pytest.mark.parametrize("d", range(2, 13))
def test_alpha_beta_orthogonality(d):
    labels = enumerate_fqubit_labels(d)
    G = np.zeros((d, d))
    for ell_a in range(d):
        for ell in range(d):
            G[ell_a, ell] = sum(
                alpha_coefficient(d, j, k, m, ell_a) * 2 / d * math.cos(math.pi * (m - (k - j) * ell) / d) ** 2
                for j, k, m in labels
            )
    np.testing.assert_allclose(G, np.eye(d), atol=1e-10)


# --- forward / inverse maps


def test_forward_map_matches_bruteforce(rng):
    for d in (2, 3, 4):
        P = random_stochastic(rng, d)
        np.testing.assert_allclose(forward_map(P), forward_bruteforce(P), atol=1e-12)


def test_forward_map_d2_identity():
    np.testing.assert_allclose(forward_map(np.eye(2)), np.eye(2), atol=1e-15)


def test_forward_map_d4_identity_structure():
    M = forward_map(np.eye(4))
    np.testing.assert_allclose(M, forward_bruteforce(np.eye(4)), atol=1e-12)
    # Fourier dephasing: sum_l (2/d)^2 cos^4 terms, never the noiseless value 1
    for i, (j, k, m) in enumerate(enumerate_fqubit_labels(4)):
        expected = 0.375 if (k - j) % 2 else (0.5 if m % 2 == 0 else 0.25)
        assert M[i, i] == pytest.approx(expected)


def test_forward_map_uniform_rows_constant():
    M = forward_map(np.full((4, 4), 0.25))
    np.testing.assert_allclose(M, 0.25, atol=1e-12)
    np.testing.assert_allclose(M.sum(axis=1), 6)


@pytest.mark.parametrize("d", range(2, 9))
def test_forward_rows_sum(rng, d):
    M = forward_map(random_stochastic(rng, d))
    np.testing.assert_allclose(M.sum(axis=1), d * (d - 1) / 2, atol=1e-8)


@pytest.mark.parametrize("d", range(2, 9))
def test_roundtrip(rng, d):
    for _ in range(20):
        P = random_stochastic(rng, d)
        assert np.abs(invert_map(forward_map(P)) - P).max() < 1e-10


def test_invert_identity():
    np.testing.assert_allclose(invert_map(forward_map(np.eye(4))), np.eye(4), atol=1e-12)


def test_invert_noisy_input_can_be_unphysical(rng):
    M = forward_map(np.eye(4))
    noisy = M + 0.01 * rng.choice([-1, 1], size=M.shape)
    P = invert_map(noisy)
    assert not is_physical(P)
    assert np.isfinite(P).all()


@pytest.mark.parametrize("d", [2, 3, 5, 7])
def test_invert_rows_sum_to_one_for_normalized_input_prime_d(rng, d):
    D = d * d * (d - 1) // 2
    M = normalize_counts(rng.integers(1, 100, size=(D, D)))
    np.testing.assert_allclose(invert_map(M).sum(axis=1), 1, atol=1e-6)


def test_invert_row_sums_composite_d_need_consistent_input(rng):
    # for d=4 the alpha row sums depend on gcd(k-j, d), so an arbitrary
    # normalized matrix does not give stochastic rows
    M = normalize_counts(rng.integers(1, 100, size=(24, 24)))
    assert np.abs(invert_map(M).sum(axis=1) - 1).max() > 1e-3
    M = normalize_counts(rng.binomial(10**5, forward_map(random_stochastic(rng, 4)) / 6))
    np.testing.assert_allclose(invert_map(M).sum(axis=1), 1, atol=0.02)


def test_dimension_of():
    assert dimension_of(np.zeros((24, 24))) == 4
    assert dimension_of(np.zeros((2, 2))) == 2
    with pytest.raises(DomainError):
        dimension_of(np.zeros((10, 10)))
    with pytest.raises(DomainError):
        forward_map(np.array([[0.5, 0.6], [0.5, 0.5]]))


# --- simplex projection and fit


def project_one_bruteforce(v):
    """Reference projection: bisection on the threshold."""
    lo, hi = v.min() - 1, v.max()
    for _ in range(200):
        mid = (lo + hi) / 2
        if np.maximum(v - mid, 0).sum() > 1:
            lo = mid
        else:
            hi = mid
    return np.maximum(v - (lo + hi) / 2, 0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=8))
def test_simplex_projection(values):
    v = np.array(values)
    p = project_simplex_rows(v)[0]
    assert p.min() >= 0 and abs(p.sum() - 1) < 1e-12
    np.testing.assert_allclose(p, project_one_bruteforce(v), atol=1e-9)


def test_fit_noiseless_recovery(rng):
    for _ in range(5):
        P = random_stochastic(rng, 4)
        fit = fit_physical_transition(forward_map(P))
        assert np.abs(fit.transition - P).max() < 1e-6
        assert fit.phase_error == pytest.approx(phase_error_rate(P), abs=1e-6)


def test_fit_identity():
    fit = fit_physical_transition(forward_map(np.eye(4)))
    np.testing.assert_allclose(fit.transition, np.eye(4), atol=1e-8)
    assert fit.phase_error == pytest.approx(0, abs=1e-8)
    assert fit.converged


def test_fit_is_stochastic_and_monotone(rng):
    M = forward_map(random_stochastic(rng, 4, 0.3)) + rng.normal(0, 0.02, size=(24, 24))
    fit = fit_physical_transition(np.clip(M, 0, None), keep_history=True)
    assert fit.transition.min() >= 0
    np.testing.assert_allclose(fit.transition.sum(axis=1), 1, atol=1e-12)
    h = np.array(fit.history)
    assert np.all(np.diff(h) <= 1e-12 * max(1.0, h[0]))


def test_fit_reports_nonconvergence():
    M = forward_map(np.full((4, 4), 0.25)) + 0.05 * np.eye(24)
    fit = fit_physical_transition(M, tol=1e-30, max_iter=3)
    assert not fit.converged and fit.iterations == 3
    assert 0 <= fit.phase_error <= 1


def test_fit_rejects_bad_tol():
    with pytest.raises(DomainError):
        fit_physical_transition(forward_map(np.eye(2)), tol=0)


# --- error rates and counts


def test_phase_error_examples():
    assert phase_error_rate(np.eye(4)) == 0
    assert phase_error_rate(np.full((4, 4), 0.25)) == pytest.approx(0.75)
    assert phase_error_rate(np.full((6, 6), 1 / 6)) == pytest.approx(5 / 6)
    assert phase_error_rate(np.roll(np.eye(4), 1, axis=1)) == 1


def symmetric_confusion(d, e):
    return np.full((d, d), e / (d - 1)) + (1 - e - e / (d - 1)) * np.eye(d)


def test_dit_error_examples():
    assert dit_error_rate(np.eye(3)) == 0
    assert dit_error_rate(symmetric_confusion(5, 0.2)) == pytest.approx(0.2)
    assert dit_error_rate(symmetric_confusion(4, 0.0289)) == pytest.approx(0.0289)
    with pytest.raises(DomainError):
        dit_error_rate(np.array([[0.9, 0.2], [0, 1]]))


def test_normalize_counts_examples():
    np.testing.assert_allclose(normalize_counts(np.ones((24, 24)))[0], 0.25)
    np.testing.assert_allclose(normalize_counts(np.array([[30, 10], [5, 15]])), [[0.75, 0.25], [0.25, 0.75]])
    raw = np.ones((24, 24))
    raw[5] = 0
    with pytest.raises(DataError, match="0-2-1"):
        normalize_counts(raw)


def test_counts_to_fit_composition(rng):
    P = random_stochastic(rng, 4)
    M = forward_map(P)
    counts = rng.binomial(10**6, M)
    fit = fit_physical_transition(normalize_counts(counts))
    assert np.abs(fit.transition - P).max() < 0.05
    assert fit.phase_error == pytest.approx(phase_error_rate(P), abs=0.01)


def test_phase_error_standard_error_tracks_spread(rng):
    """Delta-method SE agrees with the Monte Carlo spread of the linear estimate."""
    P = 0.8 * np.eye(4) + 0.2 * random_stochastic(rng, 4)
    probs = forward_map(P) / 6
    estimates, ses = [], []
    for _ in range(300):
        counts = np.array([rng.multinomial(2000, row) for row in probs])
        estimates.append(phase_error_rate(invert_map(normalize_counts(counts))))
        ses.append(phase_error_standard_error(counts))
    assert np.std(estimates) == pytest.approx(np.mean(ses), rel=0.15)
