import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rirs6dma import rng as rngmod
from rirs6dma.beamforming import Precoder, mrt, sinr_and_rate, wmmse


def test_mrt_examples():
    assert np.allclose(mrt(np.array([1.0, 0.0]), 4.0), [2.0, 0.0])
    assert np.allclose(mrt(np.array([1j, 1j]), 2.0), [1j, 1j])
    with pytest.raises(ValueError):
        mrt(np.zeros(3), 1.0)


def test_mrt_rate_matches_snr_formula():
    rng = rngmod.stream(0, "mrt")
    for _ in range(5):
        h = rng.normal(size=4) + 1j * rng.normal(size=4)
        p_t, sigma2 = 2.5, 0.7
        w = mrt(h, p_t)
        gamma, rate = sinr_and_rate(h[None, :], w[:, None], sigma2)
        expect = np.log2(1 + p_t * np.linalg.norm(h) ** 2 / sigma2)
        assert rate == pytest.approx(expect, rel=1e-12)
        assert gamma[0] == pytest.approx(p_t * np.linalg.norm(h) ** 2 / sigma2, rel=1e-12)


def test_sinr_orthogonal_equal_power():
    k, g, p_t, sigma2 = 3, 2.0, 6.0, 0.5
    h = np.sqrt(g) * np.eye(k, dtype=complex)  # orthogonal users, equal gains
    w = np.sqrt(p_t / k) * np.eye(k, dtype=complex)
    gamma, rate = sinr_and_rate(h, w, sigma2)
    assert np.allclose(gamma, (p_t / k) * g / sigma2)
    assert rate == pytest.approx(k * np.log2(1 + (p_t / k) * g / sigma2))


def test_sinr_matches_scalar_reimplementation():
    rng = rngmod.stream(1, "sinr")
    K, M = 3, 5
    h = rng.normal(size=(K, M)) + 1j * rng.normal(size=(K, M))
    w = rng.normal(size=(M, K)) + 1j * rng.normal(size=(M, K))
    sigma2 = 0.9
    gamma, rate = sinr_and_rate(h, w, sigma2)
    for k in range(K):
        p = np.abs(h[k].conj() @ w) ** 2
        expect = p[k] / (p.sum() - p[k] + sigma2)
        assert gamma[k] == pytest.approx(expect, rel=1e-12)
    assert rate == pytest.approx(np.sum(np.log2(1 + gamma)), rel=1e-12)


@given(st.floats(0.1, 10.0))
def test_sinr_scale_covariance(c):
    rng = rngmod.stream(2, "scale")
    K, M = 2, 4
    h = rng.normal(size=(K, M)) + 1j * rng.normal(size=(K, M))
    w = rng.normal(size=(M, K)) + 1j * rng.normal(size=(M, K))
    sigma = 0.8
    g1, _ = sinr_and_rate(h, w, sigma**2)
    g2, _ = sinr_and_rate(c * h, w, (c * sigma) ** 2)
    assert np.allclose(g1, g2, rtol=1e-10)


def test_precoder_power_budget_enforced():
    with pytest.raises(ValueError):
        Precoder(np.ones((2, 2), complex), 1.0)
    Precoder(np.sqrt(0.25) * np.ones((2, 2), complex), 1.0)  # exactly at budget


def test_wmmse_monotone_and_feasible():
    rng = rngmod.stream(3, "w")
    for trial in range(6):
        K, M = 3, 6
        h = rng.normal(size=(K, M)) + 1j * rng.normal(size=(K, M))
        res = wmmse(h, 2.0, 0.4)
        assert np.all(np.diff(res.rate_trace) >= -1e-9), "sum rate must not decrease"
        used = res.precoder.power_used
        assert used <= 2.0 * (1 + 1e-9)
        # full-power optimum: the constraint is active
        assert abs(used - 2.0) <= 1e-6 * 2.0


def test_wmmse_k1_matches_mrt():
    rng = rngmod.stream(4, "w1")
    for _ in range(5):
        h = rng.normal(size=(1, 5)) + 1j * rng.normal(size=(1, 5))
        res = wmmse(h, 3.0, 0.2)
        w_ref = mrt(h[0], 3.0)
        _, rate_ref = sinr_and_rate(h, w_ref[:, None], 0.2)
        assert abs(res.sum_rate - rate_ref) < 1e-6
        # direction matches MRT up to a complex scale
        w = res.precoder.w[:, 0]
        corr = abs(np.vdot(w, w_ref)) / (np.linalg.norm(w) * np.linalg.norm(w_ref))
        assert corr == pytest.approx(1.0, abs=1e-8)


def test_wmmse_orthogonal_symmetric_case():
    K = 3
    g = 1.7
    h = np.sqrt(g) * np.eye(K, dtype=complex)
    res = wmmse(h, 3.0, 0.5)
    w = res.precoder.w
    # beams align with their own channels and split power equally
    for k in range(K):
        col = w[:, k]
        assert abs(col[k]) ** 2 == pytest.approx(np.sum(np.abs(col) ** 2), rel=1e-9)
        assert np.sum(np.abs(col) ** 2) == pytest.approx(1.0, rel=1e-6)


def test_wmmse_accepts_warm_start_and_never_regresses():
    rng = rngmod.stream(5, "warm")
    h = rng.normal(size=(2, 4)) + 1j * rng.normal(size=(2, 4))
    base = wmmse(h, 1.0, 0.3)
    warm = wmmse(h, 2.0, 0.3, w_init=base.precoder.w)
    assert warm.sum_rate >= base.sum_rate - 1e-9


def test_wmmse_state_invariants():
    # recompute the receive scalars and MSE weights at the converged precoder:
    # weights never fall below one and the power dual is non-negative
    rng = rngmod.stream(6, "state")
    for _ in range(5):
        K, M = 3, 5
        h = rng.normal(size=(K, M)) + 1j * rng.normal(size=(K, M))
        res = wmmse(h, 2.0, 0.4)
        assert res.mu >= 0.0
        W = res.precoder.w
        for k in range(K):
            products = h[k].conj() @ W
            den = 0.4 + np.sum(np.abs(products) ** 2)
            chi = products[k] / den
            kappa = 1.0 / (1.0 - np.real(np.conj(chi) * products[k]))
            assert kappa >= 1.0
