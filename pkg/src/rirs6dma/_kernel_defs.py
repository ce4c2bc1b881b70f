"""Kernel definitions shared by the compiled and pure-numpy paths.

This module holds the plain-python implementations; :mod:`rirs6dma.kernels`
re-binds clones of these functions to their numba-compiled forms when the
compiled backend is active. Functions here call each other through module
globals, so importing this module directly always yields the pure path.
"""

from __future__ import annotations

import numpy as np

KERNEL_ORDER = (
    "sum_rate_kernel",
    "_power_at_mu",
    "wmmse_kernel",
    "_mrt_init",
    "wmmse_rate_batch_kernel",
    "rate_jacobian_kernel",
    "ssca_batch_kernel",
)

def sum_rate_kernel(H, W, sigma2):
    """SINRs and log2 sum rate for effective channels H (K, M) and precoder W (M, K)."""
    K = H.shape[0]
    gamma = np.zeros(K)
    rsum = 0.0
    for k in range(K):
        sig = 0.0
        interf = 0.0
        for i in range(K):
            s = 0.0 + 0.0j
            for m in range(H.shape[1]):
                s += np.conj(H[k, m]) * W[m, i]
            p = s.real * s.real + s.imag * s.imag
            if i == k:
                sig = p
            else:
                interf += p
        gamma[k] = sig / (interf + sigma2)
        rsum += np.log2(1.0 + gamma[k])
    return gamma, rsum


def _power_at_mu(lam, y2, coef, mu):
    # total transmit power of the closed-form precoder at dual value mu
    total = 0.0
    for k in range(coef.size):
        acc = 0.0
        for i in range(lam.size):
            den = lam[i] + mu
            if den < 1e-30:
                den = 1e-30
            acc += y2[i, k] / (den * den)
        total += coef[k] * acc
    return total


def wmmse_kernel(H, p_t, sigma2, tol, max_iter, power_rtol, W0):
    """Iterate the closed-form MMSE receive/weight/precoder updates.

    H holds the effective channels as rows h_k; W0 is the starting precoder
    (columns w_k). Returns (W, rate_trace, n_iter, mu, status) where status is
    0 on convergence, 1 at the iteration cap, 2 if the dual bracket for the
    power constraint could not be established.
    """
    K, M = H.shape
    W = W0.copy()
    rate_trace = np.zeros(max_iter + 1)
    _, r_prev = sum_rate_kernel(H, W, sigma2)
    rate_trace[0] = r_prev
    mu = 0.0
    status = 1
    n_iter = 0
    chi = np.zeros(K, np.complex128)
    kappa = np.zeros(K)
    for it in range(1, max_iter + 1):
        n_iter = it
        # receive scalars and MSE weights
        for k in range(K):
            den = sigma2
            pkk = 0.0 + 0.0j
            for i in range(K):
                s = 0.0 + 0.0j
                for m in range(M):
                    s += np.conj(H[k, m]) * W[m, i]
                den += s.real * s.real + s.imag * s.imag
                if i == k:
                    pkk = s
            chi[k] = pkk / den
            e = 1.0 - (np.conj(chi[k]) * pkk).real
            if e < 1e-300:
                e = 1e-300
            kappa[k] = 1.0 / e

        # shared precoder matrix mu I + sum_i |chi_i|^2 kappa_i h_i h_i^H
        A0 = np.zeros((M, M), np.complex128)
        for i in range(K):
            c = (chi[i].real * chi[i].real + chi[i].imag * chi[i].imag) * kappa[i]
            if c == 0.0:
                continue
            for a in range(M):
                for b in range(M):
                    A0[a, b] += c * H[i, a] * np.conj(H[i, b])
        lam, Q = np.linalg.eigh(A0)
        for i in range(M):
            if lam[i] < 0.0:
                lam[i] = 0.0
        # spectral coefficients: y_k = Q^H h_k, scaled per user by |chi_k kappa_k|^2
        Y = np.conj(Q.T) @ H.T
        y2 = (Y.real * Y.real + Y.imag * Y.imag)
        coef = np.zeros(K)
        for k in range(K):
            coef[k] = (chi[k].real * chi[k].real + chi[k].imag * chi[k].imag) * kappa[k] * kappa[k]

        if _power_at_mu(lam, y2, coef, 0.0) <= p_t:
            mu = 0.0
        else:
            mu_hi = lam[M - 1] + sigma2 + 1e-12
            ok = False
            for _ in range(400):
                if _power_at_mu(lam, y2, coef, mu_hi) <= p_t:
                    ok = True
                    break
                mu_hi *= 2.0
            if not ok:
                status = 2
                n_iter = it - 1
                break
            mu_lo = 0.0
            mu = mu_hi
            for _ in range(200):
                mid = 0.5 * (mu_lo + mu_hi)
                pw = _power_at_mu(lam, y2, coef, mid)
                # one-sided acceptance keeps the precoder at or under budget
                if pw <= p_t and p_t - pw <= power_rtol * p_t:
                    mu = mid
                    break
                if pw > p_t:
                    mu_lo = mid
                else:
                    mu_hi = mid
                mu = mu_hi

        for k in range(K):
            ck = chi[k] * kappa[k]
            for m in range(M):
                acc = 0.0 + 0.0j
                for i in range(M):
                    den = lam[i] + mu
                    if den < 1e-30:
                        den = 1e-30
                    acc += Q[m, i] * (Y[i, k] / den)
                W[m, k] = ck * acc

        _, r_now = sum_rate_kernel(H, W, sigma2)
        rate_trace[it] = r_now
        if abs(r_now - r_prev) < tol:
            status = 0
            break
        r_prev = r_now
    return W, rate_trace[: n_iter + 1], n_iter, mu, status


def _mrt_init(H, p_t):
    K, M = H.shape
    W = np.zeros((M, K), np.complex128)
    per = p_t / K
    for k in range(K):
        nrm = 0.0
        for m in range(M):
            nrm += H[k, m].real * H[k, m].real + H[k, m].imag * H[k, m].imag
        if nrm > 0.0:
            scale = np.sqrt(per / nrm)
            for m in range(M):
                W[m, k] = scale * H[k, m]
    return W




def wmmse_rate_batch_kernel(H_batch, p_t, sigma2, tol, max_iter, power_rtol, W_init):
    """Per-sample WMMSE rates for a channel batch, warm-startable via W_init."""
    T, K, M = H_batch.shape
    rates = np.zeros(T)
    per_user = np.zeros((T, K))
    W_out = np.zeros((T, M, K), np.complex128)
    statuses = np.zeros(T, np.int64)
    for t in range(T):
        W, _, _, _, status = wmmse_kernel(
            H_batch[t], p_t, sigma2, tol, max_iter, power_rtol, W_init[t]
        )
        gamma, rsum = sum_rate_kernel(H_batch[t], W, sigma2)
        rates[t] = rsum
        for k in range(K):
            per_user[t, k] = np.log2(1.0 + gamma[k])
        W_out[t] = W
        statuses[t] = status
    return rates, per_user, W_out, statuses


def rate_jacobian_kernel(h, r, G, W, v, sigma2):
    """Gradient of the natural-log sum rate with respect to conj(v).

    h (K, M), r (K, N), G (N, M), W (M, K). The returned complex vector f
    satisfies dR = 2 Re{f^H dv} for the sum of ln(1 + SINR_k).
    """
    K, M = h.shape
    N = v.size
    J = np.zeros(N, np.complex128)
    Gw = G @ W  # (N, K)
    s = np.zeros(K, np.complex128)
    for k in range(K):
        # c_j = diag(r_k^H) G w_j ; s_j = v^T c_j + h_k^H w_j
        gamma_k = sigma2
        for j in range(K):
            acc = 0.0 + 0.0j
            for m in range(M):
                acc += np.conj(h[k, m]) * W[m, j]
            for n in range(N):
                acc += v[n] * np.conj(r[k, n]) * Gw[n, j]
            s[j] = acc
            gamma_k += acc.real * acc.real + acc.imag * acc.imag
        skk = s[k]
        gamma_mk = gamma_k - (skk.real * skk.real + skk.imag * skk.imag)
        for n in range(N):
            dk = 0.0 + 0.0j
            for j in range(K):
                cnj = np.conj(r[k, n]) * Gw[n, j]
                dk += np.conj(cnj) * s[j]
            ckn = np.conj(np.conj(r[k, n]) * Gw[n, k]) * skk
            J[n] += dk / gamma_k - (dk - ckn) / gamma_mk
    return J


def ssca_batch_kernel(G_b, r_b, h_b, v, p_t, sigma2, wm_tol, wm_max_iter, power_rtol):
    """One stochastic-approximation batch: WMMSE per sample, rates and gradient.

    Returns ((T, K) per-user log2 rates, summed natural-log Jacobian, statuses).
    """
    T = G_b.shape[0]
    K, M = h_b.shape[1], h_b.shape[2]
    N = v.size
    per_user = np.zeros((T, K))
    jac = np.zeros(N, np.complex128)
    statuses = np.zeros(T, np.int64)
    Heff = np.zeros((K, M), np.complex128)
    for t in range(T):
        for k in range(K):
            for m in range(M):
                acc = h_b[t, k, m]
                for n in range(N):
                    acc += np.conj(G_b[t, n, m]) * np.conj(v[n]) * r_b[t, k, n]
                Heff[k, m] = acc
        W0 = _mrt_init(Heff, p_t)
        W, _, _, _, status = wmmse_kernel(Heff, p_t, sigma2, wm_tol, wm_max_iter, power_rtol, W0)
        gamma, _ = sum_rate_kernel(Heff, W, sigma2)
        for k in range(K):
            per_user[t, k] = np.log2(1.0 + gamma[k])
        jac += rate_jacobian_kernel(h_b[t], r_b[t], G_b[t], W, v, sigma2)
        statuses[t] = status
    return per_user, jac, statuses
