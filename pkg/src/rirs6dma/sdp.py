"""Diagonal-constrained complex trace maximization via operator splitting.

Solves ``max Tr(H V)`` over Hermitian PSD V with ``V[n, n] <= 1`` for the first
N diagonal entries and ``V[N, N] = 1`` fixed, by alternating a PSD-cone
projection (eigendecomposition) with the diagonal box/affine projection. A
Gaussian-randomization step extracts unit-modulus reflection vectors from the
relaxed solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SdpSolution",
    "solve_diag_trace_sdp",
    "extract_rank_one",
    "polish_phases",
    "lifted_objective",
    "lift",
    "save_hermitian",
    "load_hermitian",
]


def lift(v: np.ndarray) -> np.ndarray:
    """Augmented column [conj(v); 1] whose outer product lifts the quadratic form."""
    return np.concatenate([np.conj(np.asarray(v, complex)), [1.0 + 0.0j]])


def lifted_objective(H: np.ndarray, v: np.ndarray) -> float:
    """Quadratic-form value [v^T, 1] H [conj(v); 1] (real for Hermitian H)."""
    u = lift(v)
    return float(np.real(np.vdot(u, H @ u)))


@dataclass(frozen=True)
class SdpSolution:
    V: np.ndarray
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    diag_cap_residual: float
    fixed_entry_residual: float
    converged: bool


def _psd_project(A: np.ndarray) -> np.ndarray:
    w, Q = np.linalg.eigh(A)
    pos = w > 0
    if not np.any(pos):
        return np.zeros_like(A)
    Qp = Q[:, pos]
    return (Qp * w[pos]) @ Qp.conj().T


def _diag_project(A: np.ndarray) -> np.ndarray:
    Z = A.copy()
    n = A.shape[0] - 1
    d = np.real(np.diag(Z)).copy()
    d[:n] = np.minimum(d[:n], 1.0)
    d[n] = 1.0
    np.fill_diagonal(Z, d)
    return Z


def solve_diag_trace_sdp(
    H: np.ndarray,
    tol: float = 1e-6,
    max_iter: int = 5000,
    rho: float | None = None,
    warm: tuple[np.ndarray, np.ndarray] | None = None,
) -> SdpSolution:
    """ADMM splitting between the PSD cone and the diagonal constraint set.

    The objective matrix is normalized to unit Frobenius norm internally, so the
    stopping test is scale-invariant; the reported objective is rescaled.
    Returns the PSD-side iterate, so the PSD residual is exactly zero and the
    diagonal violations are bounded by the primal residual. At the iteration
    cap the best available iterate is returned flagged ``converged=False``.
    """
    H_in = np.asarray(H, complex)
    n1 = H_in.shape[0]
    H_in = 0.5 * (H_in + H_in.conj().T)
    scale = float(np.linalg.norm(H_in)) or 1.0
    H = H_in / scale
    if rho is None:
        rho = 1.0 / n1

    if warm is not None:
        Z, U = warm[0].copy(), warm[1].copy()
    else:
        Z = np.eye(n1, dtype=complex)
        U = np.zeros_like(Z)

    sqrt_n = np.sqrt(float(n1 * n1))
    it = 0
    X = Z
    r_norm = s_norm = np.inf
    converged = False
    for it in range(1, max_iter + 1):
        X = _psd_project(Z - U + H / rho)
        Z_old = Z
        Z = _diag_project(X + U)
        U = U + X - Z
        r_norm = float(np.linalg.norm(X - Z))
        s_norm = float(rho * np.linalg.norm(Z - Z_old))
        eps_pri = sqrt_n * tol + tol * max(np.linalg.norm(X), np.linalg.norm(Z))
        eps_dual = sqrt_n * tol + tol * rho * float(np.linalg.norm(U))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break
        # residual balancing keeps the two projections progressing together
        if it % 25 == 0:
            if r_norm > 10 * s_norm:
                rho *= 2.0
                U /= 2.0
            elif s_norm > 10 * r_norm:
                rho /= 2.0
                U *= 2.0

    d = np.real(np.diag(X))
    cap = float(max(np.max(d[:-1] - 1.0, initial=0.0), 0.0))
    fixed = float(abs(d[-1] - 1.0))
    return SdpSolution(
        V=X,
        objective=float(np.real(np.trace(H_in @ X))),
        iterations=it,
        primal_residual=r_norm,
        dual_residual=s_norm,
        diag_cap_residual=cap,
        fixed_entry_residual=fixed,
        converged=converged,
    )


def _phases_candidate(u: np.ndarray) -> np.ndarray:
    """Unit-modulus reflection vector from an augmented sample, last entry phase-fixed."""
    last = u[-1]
    if last != 0:
        u = u * np.exp(-1j * np.angle(last))
    head = u[:-1]
    mag = np.abs(head)
    phased = np.where(mag > 0, head / np.where(mag > 0, mag, 1.0), 1.0 + 0.0j)
    return np.conj(phased)


def extract_rank_one(
    V: np.ndarray,
    H: np.ndarray,
    n_randomizations: int = 100,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Best unit-modulus vector among the leading-eigenvector projection and
    Gaussian randomizations drawn from the relaxed solution.

    With ``n_randomizations=0`` the extraction is the deterministic eigenvector
    projection.
    """
    V = np.asarray(V, complex)
    w, Q = np.linalg.eigh(0.5 * (V + V.conj().T))
    best_v = _phases_candidate(Q[:, -1])
    best_obj = lifted_objective(H, best_v)
    if n_randomizations > 0:
        if rng is None:
            rng = np.random.default_rng()
        wpos = np.sqrt(np.maximum(w, 0.0))
        L = Q * wpos
        g = rng.normal(size=(n_randomizations, V.shape[0])) + 1j * rng.normal(
            size=(n_randomizations, V.shape[0])
        )
        samples = (g * np.sqrt(0.5)) @ L.T
        for u in samples:
            v = _phases_candidate(u)
            obj = lifted_objective(H, v)
            if obj > best_obj:
                best_obj = obj
                best_v = v
    return best_v


def polish_phases(H: np.ndarray, v: np.ndarray, max_sweeps: int = 200, tol: float = 1e-13) -> np.ndarray:
    """Monotone per-element phase ascent on the lifted quadratic form.

    Cycles over the elements, setting each phase to the closed-form maximizer
    given all the others, until the objective stops improving.
    """
    H = np.asarray(H, complex)
    u = lift(v)
    n = u.size - 1
    obj = float(np.real(np.vdot(u, H @ u)))
    for _ in range(max_sweeps):
        for i in range(n):
            g = H[i] @ u - H[i, i] * u[i]
            if g != 0:
                u[i] = np.exp(1j * np.angle(g))
        new_obj = float(np.real(np.vdot(u, H @ u)))
        if new_obj - obj <= tol * max(1.0, abs(obj)):
            obj = new_obj
            break
        obj = new_obj
    return np.conj(u[:-1])


def save_hermitian(path, H: np.ndarray):
    """Persist a complex Hermitian matrix; ``.npy`` binary or whitespace text.

    The text format is one header line ``# hermitian n`` then n rows of
    alternating real/imaginary entries.
    """
    H = np.asarray(H, complex)
    path = str(path)
    if path.endswith(".npy"):
        np.save(path, H)
        return
    n = H.shape[0]
    flat = np.empty((n, 2 * n))
    flat[:, 0::2] = H.real
    flat[:, 1::2] = H.imag
    np.savetxt(path, flat, header=f"hermitian {n}")


def load_hermitian(path) -> np.ndarray:
    path = str(path)
    if path.endswith(".npy"):
        return np.asarray(np.load(path), complex)
    flat = np.atleast_2d(np.loadtxt(path))
    return flat[:, 0::2] + 1j * flat[:, 1::2]
