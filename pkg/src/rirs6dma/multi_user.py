"""Multi-user long-timescale design: stochastic surrogate reflection optimization
inside an extended differential-evolution search over positions and rotations.

The inner problem tunes the reflection vector for fixed antenna/surface
placement, either by stochastic successive convex approximation (sample-built
concave surrogates with the closed-form per-element disk update) or by a single
relaxed trace maximization of the summed expected channel gains (the
low-complexity route). The outer search evolves the stacked vector
[q, psi, phi] with per-block clamping and a spacing penalty.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from . import kernels
from . import rng as rngmod
from .channel import InstantaneousChannels, StatisticalCsi, effective_channel_batch, sample_icsi_batch
from .geometry import IrsLayout, RadioContext, ula_positions
from .sdp import extract_rank_one, polish_phases, solve_diag_trace_sdp
from .single_user import DeParams, ReflectionOptions, _spacing_penalty, repair_spacing
from .stats import expected_gain, gain_terms, heff_matrix

LN2 = float(np.log(2.0))

__all__ = [
    "SscaParams",
    "SscaState",
    "SscaResult",
    "OuterResult",
    "rate_jacobian",
    "surrogate_disk_update",
    "ssca_surrogate_update",
    "ssca_inner",
    "scg_inner",
    "outer_fitness",
    "extended_de",
    "wmmse_rate_stats",
    "project_unit_modulus",
]


@dataclass(frozen=True)
class SscaParams:
    """Stochastic surrogate optimization knobs; step sizes follow 1/(1+i)^0.8 and 2/(2+i)."""

    batch_size: int = 50
    tau: float = 0.015
    max_iter: int = 300
    window: int = 10
    rel_tol: float = 1e-3
    wmmse_tol: float = 1e-4
    wmmse_max_iter: int = 100
    power_rtol: float = 1e-10

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("surrogate curvature tau must be positive")
        if self.batch_size < 1:
            raise ValueError("need at least one channel sample per iteration")


@dataclass(frozen=True)
class SscaState:
    """Iterate of the surrogate recursion: averaged rates, gradient, reflection.

    ``iteration`` counts completed batch updates; ``rho`` and ``delta`` are the
    step sizes the *next* update will use, so the first batch is folded in with
    full weight.
    """

    iteration: int
    v: np.ndarray
    r_hat: np.ndarray
    f: np.ndarray

    @property
    def rho(self) -> float:
        return 1.0 / (1.0 + self.iteration) ** 0.8

    @property
    def delta(self) -> float:
        return 2.0 / (2.0 + self.iteration)


def initial_state(n_elements: int, k_users: int, v_init: np.ndarray | None = None) -> SscaState:
    v = np.ones(n_elements, complex) if v_init is None else np.asarray(v_init, complex).copy()
    return SscaState(0, v, np.zeros(k_users), np.zeros(n_elements, complex))


def rate_jacobian(channels: InstantaneousChannels, W: np.ndarray, v: np.ndarray, sigma2: float) -> np.ndarray:
    """Gradient of the natural-log sum rate with respect to conj(v).

    The per-user terms are the signal-plus-interference and interference-only
    quadratic forms; callers mixing this with log2 rates must scale by 1/ln 2.
    """
    if sigma2 <= 0:
        raise ValueError("noise power must be positive")
    return kernels.rate_jacobian_kernel(
        np.ascontiguousarray(channels.h),
        np.ascontiguousarray(channels.r),
        np.ascontiguousarray(channels.G),
        np.ascontiguousarray(W),
        np.ascontiguousarray(v),
        float(sigma2),
    )


def surrogate_disk_update(v_prev: complex, f_n: complex, tau: float) -> complex:
    """Closed-form maximizer of the per-element concave surrogate on the unit disk.

    Interior candidate v_prev + f/tau, else its Euclidean projection onto the
    disk boundary.
    """
    cand = v_prev + f_n / tau
    mag = abs(cand)
    return cand if mag <= 1.0 else cand / mag


def _surrogate_disk_update_vec(v_prev: np.ndarray, f: np.ndarray, tau: float) -> np.ndarray:
    cand = v_prev + f / tau
    mag = np.abs(cand)
    return np.where(mag <= 1.0, cand, cand / np.where(mag > 0, mag, 1.0))


def project_unit_modulus(v: np.ndarray) -> np.ndarray:
    """Elementwise phase projection; zero entries map to +1."""
    mag = np.abs(v)
    return np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 1.0 + 0.0j)


def ssca_surrogate_update(
    state: SscaState,
    batch,
    p_t: float,
    sigma2: float,
    params: SscaParams,
) -> SscaState:
    """Fold one channel batch into the averaged rates and surrogate gradient.

    ``batch`` is the (G, r, h) array triple of ``sample_icsi_batch``; every
    sample is solved by WMMSE at the current reflection before averaging. The
    gradient accumulates in log2 units to match the rates.
    """
    G_b, r_b, h_b = batch
    per_user, jac_sum, statuses = kernels.ssca_batch_kernel(
        np.ascontiguousarray(G_b),
        np.ascontiguousarray(r_b),
        np.ascontiguousarray(h_b),
        np.ascontiguousarray(state.v),
        float(p_t),
        float(sigma2),
        float(params.wmmse_tol),
        int(params.wmmse_max_iter),
        float(params.power_rtol),
    )
    bad = np.nonzero(statuses == 2)[0]
    if bad.size:
        raise RuntimeError(f"WMMSE power bisection failed on batch sample {int(bad[0])}")
    rho = state.rho
    t_h = per_user.shape[0]
    r_hat = (1.0 - rho) * state.r_hat + rho * per_user.mean(axis=0)
    f = (1.0 - rho) * state.f + rho * (jac_sum / t_h) / LN2
    return SscaState(state.iteration + 1, state.v, r_hat, f)


def surrogate_value(state: SscaState, v_new: np.ndarray, tau: float) -> float:
    """Concave surrogate at v_new around the state's expansion point."""
    dv = v_new - state.v
    return float(
        state.r_hat.sum()
        + 2.0 * np.real(np.vdot(state.f, dv))
        - tau * float(np.real(np.vdot(dv, dv)))
    )


@dataclass(frozen=True)
class SscaResult:
    v: np.ndarray
    avg_rate: float
    rate_stderr: float
    surrogate_trace: np.ndarray
    iterations: int
    stabilized: bool
    stabilized_at: int | None
    projection_rate_delta: float


def ssca_inner(
    scsi: StatisticalCsi,
    placement,
    layout: IrsLayout,
    radio: RadioContext,
    p_t: float,
    sigma2: float,
    seed: int,
    params: SscaParams = SscaParams(),
    v_init: np.ndarray | None = None,
    eval_stream: tuple | None = None,
    eval_draws: int | None = None,
) -> SscaResult:
    """Stochastic surrogate loop for the reflection vector at a fixed placement.

    Each iteration draws a fresh channel batch, updates the averaged rates and
    gradient, solves the per-element disk maximization, and blends the iterate.
    Stops when the trailing-window relative variation of the surrogate value
    drops below ``rel_tol`` or at the iteration cap. The reported reflection is
    the exact unit-modulus projection of the final iterate.
    """
    state = initial_state(layout.n_elements, scsi.n_users, v_init)
    batch_rng = rngmod.stream(seed, "ssca-batch")
    trace = np.empty(params.max_iter)
    stabilized_at = None
    it = 0
    for it in range(1, params.max_iter + 1):
        delta = state.delta  # step sizes indexed by the update about to happen
        batch = sample_icsi_batch(scsi, placement, layout, radio, params.batch_size, batch_rng)
        state = ssca_surrogate_update(state, batch, p_t, sigma2, params)
        v_bar = _surrogate_disk_update_vec(state.v, state.f, params.tau)
        v_new = (1.0 - delta) * state.v + delta * v_bar
        if np.any(np.abs(v_new) > 1.0 + 1e-12):
            raise AssertionError("reflection iterate left the unit polydisk")
        trace[it - 1] = surrogate_value(state, v_new, params.tau)
        state = SscaState(state.iteration, v_new, state.r_hat, state.f)
        if it >= params.window:
            win = trace[it - params.window : it]
            scale = max(abs(float(win.mean())), 1e-12)
            if (win.max() - win.min()) / scale < params.rel_tol:
                stabilized_at = it
                break
    trace = trace[:it]

    v_final = project_unit_modulus(state.v)
    if eval_stream is None:
        eval_stream = (seed, "ssca-eval")
    n_eval = params.batch_size if eval_draws is None else eval_draws
    h_eff = effective_channel_batch(
        scsi, placement, layout, radio, v_final, n_eval, rngmod.stream(*eval_stream)
    )
    rates, _, _, _ = _wmmse_batch(h_eff, p_t, sigma2, params)
    # same draws through the unprojected iterate to bound the projection effect
    h_eff_raw = effective_channel_batch(
        scsi, placement, layout, radio, state.v, n_eval, rngmod.stream(*eval_stream)
    )
    rates_raw, _, _, _ = _wmmse_batch(h_eff_raw, p_t, sigma2, params)
    raw_mean = float(rates_raw.mean())
    proj_delta = abs(float(rates.mean()) - raw_mean) / max(abs(raw_mean), 1e-12)
    return SscaResult(
        v=v_final,
        avg_rate=float(rates.mean()),
        rate_stderr=float(rates.std(ddof=1) / np.sqrt(rates.size)) if rates.size > 1 else 0.0,
        surrogate_trace=trace,
        iterations=it,
        stabilized=stabilized_at is not None,
        stabilized_at=stabilized_at,
        projection_rate_delta=proj_delta,
    )


def _wmmse_batch(h_eff: np.ndarray, p_t: float, sigma2: float, params: SscaParams, w_init=None):
    if w_init is None:
        w_init = kernels.mrt_init_batch(h_eff, p_t)
    rates, per_user, w_out, statuses = kernels.wmmse_rate_batch_kernel(
        np.ascontiguousarray(h_eff),
        float(p_t),
        float(sigma2),
        float(params.wmmse_tol),
        int(params.wmmse_max_iter),
        float(params.power_rtol),
        np.ascontiguousarray(w_init),
    )
    bad = np.nonzero(statuses == 2)[0]
    if bad.size:
        raise RuntimeError(f"WMMSE power bisection failed on evaluation sample {int(bad[0])}")
    return rates, per_user, w_out, statuses


def wmmse_rate_stats(
    scsi: StatisticalCsi,
    placement,
    layout: IrsLayout,
    radio: RadioContext,
    v: np.ndarray,
    p_t: float,
    sigma2: float,
    n_samples: int,
    rng: np.random.Generator,
    params: SscaParams = SscaParams(),
    w_init: np.ndarray | None = None,
):
    """Mean/stderr of the per-sample WMMSE sum rate on fresh draws.

    Also returns the per-sample rates and final precoders so callers can chain
    warm starts across increasing power budgets.
    """
    h_eff = effective_channel_batch(scsi, placement, layout, radio, v, n_samples, rng)
    rates, _, w_out, _ = _wmmse_batch(h_eff, p_t, sigma2, params, w_init)
    stderr = float(rates.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return float(rates.mean()), stderr, rates, w_out


def scg_inner(
    scsi: StatisticalCsi,
    placement,
    layout: IrsLayout,
    radio: RadioContext,
    p_t: float,
    sigma2: float,
    seed: int,
    params: SscaParams = SscaParams(),
    options: ReflectionOptions = ReflectionOptions(),
    eval_stream: tuple | None = None,
    eval_draws: int | None = None,
):
    """Low-complexity inner solve: one relaxed trace maximization of the summed
    expected channel gains, then a sample-average rate readout.

    Returns (v, avg_rate, info) where info carries the relaxed objective, the
    per-user expected gains at v, and the rate standard error.
    """
    terms = [gain_terms(scsi, placement, layout, radio, k) for k in range(scsi.n_users)]
    h = sum(heff_matrix(t, compensated=False).matrix for t in terms)
    sol = solve_diag_trace_sdp(h, tol=options.sdp_tol, max_iter=options.sdp_max_iter)
    v = extract_rank_one(sol.V, h, options.n_randomizations, rngmod.stream(seed, "scg-extract"))
    v = polish_phases(h, v, max_sweeps=options.polish_sweeps)
    if eval_stream is None:
        eval_stream = (seed, "scg-eval")
    n_eval = params.batch_size if eval_draws is None else eval_draws
    rate, stderr, _, _ = wmmse_rate_stats(
        scsi, placement, layout, radio, v, p_t, sigma2, n_eval,
        rngmod.stream(*eval_stream), params,
    )
    info = SimpleNamespace(
        sdp=sol,
        expected_gains=np.array([expected_gain(t, v) for t in terms]),
        rate_stderr=stderr,
    )
    return v, rate, info


def outer_fitness(inner_rate: float, q: np.ndarray, penalty: float, min_spacing: float) -> float:
    """Inner average sum rate minus the spacing-violation penalty eta B1 |B2|."""
    return inner_rate - penalty * float(_spacing_penalty(np.asarray(q, float)[None, :], min_spacing)[0])


@dataclass(frozen=True)
class OuterResult:
    q: np.ndarray
    psi: float
    phi: float
    v: np.ndarray
    avg_rate: float
    rate_stderr: float
    fitness_trace: np.ndarray
    inner_label: str
    best_fitness: float
    converged: bool = True


def extended_de(
    scsi: StatisticalCsi,
    m: int,
    layout: IrsLayout,
    radio: RadioContext,
    q_bounds: tuple[float, float],
    psi_bounds: tuple[float, float],
    phi_bounds: tuple[float, float],
    p_t: float,
    sigma2: float,
    seed: int,
    de_params: DeParams = DeParams(),
    ssca_params: SscaParams = SscaParams(),
    options: ReflectionOptions = ReflectionOptions(),
    final_options: ReflectionOptions | None = None,
    inner: str = "scg",
    optimize_q: bool = True,
    optimize_psi: bool = True,
    optimize_phi: bool = True,
    warm_start: bool = False,
    fitness_draws: int | None = None,
) -> OuterResult:
    """DE/best/1 over the stacked placement vector with per-block clamping.

    Pinned blocks collapse their bounds to the default placement (centered
    half-wavelength array, zero rotations), so restricted benchmark schemes run
    through the same machinery. The first individual is always that default.
    Every fitness readout reuses one common evaluation stream (common random
    numbers), so selection compares placements on identical channel draws
    rather than on batch noise. The best raw placement is spacing-repaired,
    then re-solved for the final reflection and rate.
    """
    if inner not in ("scg", "ssca"):
        raise ValueError("inner solver must be 'scg' or 'ssca'")
    d = radio.min_spacing
    pinned_q = ula_positions(m, d)
    dim = m + 2
    lo = np.empty(dim)
    hi = np.empty(dim)
    lo[:m] = q_bounds[0] if optimize_q else pinned_q
    hi[:m] = q_bounds[1] if optimize_q else pinned_q
    lo[m], hi[m] = (psi_bounds if optimize_psi else (0.0, 0.0))
    lo[m + 1], hi[m + 1] = (phi_bounds if optimize_phi else (0.0, 0.0))

    rng = rngmod.stream(seed, "outer-de")
    pop = rng.uniform(lo, hi, size=(de_params.population, dim))
    pop[:, :m].sort(axis=1)
    pop[0, :m] = pinned_q
    pop[0, m:] = 0.0

    best_v = {"v": None}
    crn_stream = (seed, "outer-batch")  # common draws for every fitness readout

    def solve(vec, label) -> tuple[float, np.ndarray]:
        placement = SimpleNamespace(q=vec[:m], psi=float(vec[m]), phi=float(vec[m + 1]))
        inner_seed = rngmod.stream(seed, "inner", *label).integers(2**63)
        v_init = best_v["v"] if (warm_start and inner == "ssca") else None
        if inner == "scg":
            v, rate, _info = scg_inner(
                scsi, placement, layout, radio, p_t, sigma2, inner_seed, ssca_params, options,
                eval_stream=crn_stream, eval_draws=fitness_draws,
            )
        else:
            res = ssca_inner(
                scsi, placement, layout, radio, p_t, sigma2, inner_seed, ssca_params,
                v_init=v_init, eval_stream=crn_stream, eval_draws=fitness_draws,
            )
            v, rate = res.v, res.avg_rate
        return outer_fitness(rate, vec[:m], de_params.penalty, d), v

    fitness = np.empty(de_params.population)
    vs = [None] * de_params.population
    for p in range(de_params.population):
        fitness[p], vs[p] = solve(pop[p], ("init", p))
    trace = np.empty(de_params.iterations + 1)
    trace[0] = fitness.max()
    best_v["v"] = vs[int(np.argmax(fitness))]

    for s in range(1, de_params.iterations + 1):
        best = pop[int(np.argmax(fitness))]
        for p in range(de_params.population):
            choices = np.delete(np.arange(de_params.population), p)
            r1, r2 = rng.choice(choices, size=2, replace=False)
            mutant = best + de_params.mutation * (pop[r1] - pop[r2])
            take = rng.uniform(size=dim) < de_params.crossover
            take[rng.integers(dim)] = True
            trial = np.where(take, mutant, pop[p])
            np.clip(trial, lo, hi, out=trial)
            trial[:m].sort()
            tfit, tv = solve(trial, (s, p))
            if tfit > fitness[p]:
                pop[p] = trial
                fitness[p] = tfit
                vs[p] = tv
        trace[s] = fitness.max()
        best_v["v"] = vs[int(np.argmax(fitness))]

    b = int(np.argmax(fitness))
    q = repair_spacing(pop[b, :m], d, q_bounds) if optimize_q else pinned_q.copy()
    placement = SimpleNamespace(q=q, psi=float(pop[b, m]), phi=float(pop[b, m + 1]))
    final_seed = rngmod.stream(seed, "inner", "final").integers(2**63)
    if final_options is None:
        final_options = ReflectionOptions(sdp_tol=options.sdp_tol)
    if inner == "scg":
        v, rate, info = scg_inner(scsi, placement, layout, radio, p_t, sigma2, final_seed,
                                  ssca_params, final_options, eval_stream=crn_stream,
                                  eval_draws=fitness_draws)
        stderr = info.rate_stderr
        converged = info.sdp.converged
    else:
        res = ssca_inner(scsi, placement, layout, radio, p_t, sigma2, final_seed, ssca_params,
                         v_init=best_v["v"] if warm_start else None, eval_stream=crn_stream,
                         eval_draws=fitness_draws)
        v, rate, stderr = res.v, res.avg_rate, res.rate_stderr
        converged = res.stabilized
    return OuterResult(
        q=q,
        psi=placement.psi,
        phi=placement.phi,
        v=v,
        avg_rate=rate,
        rate_stderr=stderr,
        fitness_trace=trace,
        inner_label=inner,
        best_fitness=float(fitness[b]),
        converged=converged,
    )
