"""Quick oracle suite behind the ``validate`` CLI subcommand.

Each check recomputes a quantity along an independent route (Monte Carlo,
finite differences, brute-force enumeration, closed forms) and compares; one
PASS/FAIL line per check, nonzero exit on any failure. This is a smoke-level
subset of the full acceptance test suite.
"""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np

from . import kernels
from . import rng as rngmod
from .beamforming import mrt, sinr_and_rate, wmmse
from .channel import sample_scsi
from .config import ExperimentConfig, dbm_to_watts
from .geometry import IrsLayout, NodeGeometry, sample_user_positions, ula_positions
from .sdp import extract_rank_one, lifted_objective, polish_phases, solve_diag_trace_sdp
from .single_user import array_gain, sparse_array_positions
from .stats import expected_gain, gain_terms, heff_matrix, mc_gain_oracle

__all__ = ["run_validation"]


def _scene(config: ExperimentConfig, seed: int):
    radio = config.radio()
    layout = IrsLayout(4, 4, radio.min_spacing)
    users = sample_user_positions(config.user_center, config.user_radius, 1, rngmod.stream(seed, "scene"))
    geometry = NodeGeometry(config.bs_position, config.irs_position, users, config.user_center, config.user_radius)
    scsi = sample_scsi(geometry, radio, 3, 3, 3, rngmod.stream(seed, "scsi"), config.nlos_power_ratio)
    m = 6
    placement = SimpleNamespace(q=ula_positions(m, radio.min_spacing), psi=0.03, phi=-0.05, m=m)
    return radio, layout, scsi, placement


def run_validation(config: ExperimentConfig, log=print) -> int:
    checks = []

    def check(name, ok, detail=""):
        checks.append(ok)
        log(f"[{'PASS' if ok else 'FAIL'}] {name}{(': ' + detail) if detail else ''}")

    # exact dBm decades
    check("dbm-conversion", dbm_to_watts(30.0) == 1.0 and dbm_to_watts(-40.0) == 1e-7)

    # closed-form expected gain vs Monte Carlo
    radio, layout, scsi, placement = _scene(config, seed=101)
    terms = gain_terms(scsi, placement, layout, radio, 0)
    v = np.exp(1j * rngmod.stream(101, "v").uniform(0, 2 * np.pi, layout.n_elements))
    cf = expected_gain(terms, v)
    mc = mc_gain_oracle(scsi, placement, layout, radio, v, 100_000, rngmod.stream(101, "mc"))
    rel = abs(cf - mc) / cf
    check("expected-gain-vs-monte-carlo", rel < 0.01, f"rel err {rel:.2e}")

    # lifted-matrix trace identity
    h = heff_matrix(terms, compensated=False).matrix
    ident = abs(lifted_objective(h, v) - cf)
    check("lifted-trace-identity", ident < 1e-9, f"abs err {ident:.1e}")

    # sparse-array optimality
    q = sparse_array_positions(0.05, 1.1, 1.9, 8, -0.2, radio.wavelength)
    gain = array_gain(q, 0.05, 1.1, 1.9, radio.wavelength)
    check("sparse-array-gain", abs(gain - 8) < 1e-9, f"|a| = {gain:.12f}")

    # WMMSE: monotone trace, K=1 equals MRT
    g = rngmod.stream(103, "wmmse")
    ok_mono, ok_mrt = True, True
    for _ in range(5):
        heff = g.normal(size=(3, 6)) + 1j * g.normal(size=(3, 6))
        res = wmmse(heff, 2.0, 0.3)
        ok_mono &= bool(np.all(np.diff(res.rate_trace) >= -1e-9))
        h1 = g.normal(size=(1, 6)) + 1j * g.normal(size=(1, 6))
        r1 = wmmse(h1, 2.0, 0.3)
        _, r_mrt = sinr_and_rate(h1, mrt(h1[0], 2.0)[:, None], 0.3)
        ok_mrt &= abs(r1.sum_rate - r_mrt) < 1e-6
    check("wmmse-monotone", ok_mono)
    check("wmmse-k1-equals-mrt", ok_mrt)

    # reflection-gradient vs central differences
    gj = rngmod.stream(104, "jac")
    max_rel = 0.0
    for _ in range(3):
        K, M, N = 2, 4, 8
        hh = gj.normal(size=(K, M)) + 1j * gj.normal(size=(K, M))
        rr = gj.normal(size=(K, N)) + 1j * gj.normal(size=(K, N))
        G = gj.normal(size=(N, M)) + 1j * gj.normal(size=(N, M))
        W = gj.normal(size=(M, K)) + 1j * gj.normal(size=(M, K))
        vv = np.exp(1j * gj.uniform(0, 2 * np.pi, N))
        J = kernels.rate_jacobian_kernel(hh, rr, G, np.ascontiguousarray(W), vv, 0.5)
        fd = _fd_gradient(hh, rr, G, W, vv, 0.5)
        max_rel = max(max_rel, float(np.abs(J - fd).max() / np.abs(fd).max()))
    check("rate-gradient-vs-fd", max_rel < 1e-4, f"max rel {max_rel:.1e}")

    # relaxation + extraction vs brute-force grid (N = 2)
    gs = rngmod.stream(105, "sdp")
    worst = np.inf
    for _ in range(3):
        A = gs.normal(size=(3, 3)) + 1j * gs.normal(size=(3, 3))
        H = (A + A.conj().T) * 1e-5
        sol = solve_diag_trace_sdp(H)
        vx = extract_rank_one(sol.V, H, 100, gs)
        vx = polish_phases(H, vx)
        grid = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        best = max(
            lifted_objective(H, np.array([np.exp(1j * a), np.exp(1j * b)]))
            for a in grid
            for b in grid
        )
        worst = min(worst, lifted_objective(H, vx) / best)
    check("sdp-extraction-vs-grid", worst >= 0.98, f"worst ratio {worst:.4f}")

    failed = sum(not ok for ok in checks)
    log(f"{len(checks) - failed}/{len(checks)} validation checks passed")
    return 0 if failed == 0 else 1


def _fd_gradient(h, r, G, W, v, sigma2, eps=1e-6):
    def rate_nats(vv):
        tot = 0.0
        for k in range(h.shape[0]):
            heff = h[k] + G.conj().T @ (np.conj(vv) * r[k])
            s = np.conj(heff) @ W
            p = np.abs(s) ** 2
            tot += np.log(1 + p[k] / (p.sum() - p[k] + sigma2))
        return tot

    n = v.size
    out = np.empty(n, complex)
    for i in range(n):
        e = np.zeros(n, complex)
        e[i] = eps
        dre = (rate_nats(v + e) - rate_nats(v - e)) / (2 * eps)
        dim = (rate_nats(v + 1j * e) - rate_nats(v - 1j * e)) / (2 * eps)
        out[i] = 0.5 * dre + 0.5j * dim
    return out
