"""Single-user long-timescale design: antenna placement, rotations, reflection.

Subproblem 1 maximizes the LoS correlation magnitude ``|ahat_bs(q, psi)|`` via
either the closed-form uniform sparse array (wide movement region) or a
differential-evolution search (narrow region), with an exhaustive scan over the
6DMA rotation. Subproblem 2 scans the surface rotation and solves a relaxed
trace-maximization for the reflection vector at each angle. The two are
decoupled, so they run independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .channel import StatisticalCsi, effective_channel_batch
from .geometry import ArraySurfaceConfig, IrsLayout, RadioContext, ula_positions
from .sdp import extract_rank_one, polish_phases, solve_diag_trace_sdp
from .stats import expected_equivalent_gain, gain_terms, heff_matrix

__all__ = [
    "DeParams",
    "DePopulation",
    "ReflectionOptions",
    "SingleUserResult",
    "signed_delta",
    "delta_factor",
    "array_gain",
    "de_fitness",
    "de_init",
    "de_step",
    "run_position_de",
    "repair_spacing",
    "sparse_array_positions",
    "design_positions",
    "search_array_rotation",
    "design_reflection",
    "search_surface_rotation",
    "single_user_pipeline",
    "mrt_rate_stats",
]


@dataclass(frozen=True)
class DeParams:
    """Differential-evolution hyperparameters (DE/best/1 with penalty fitness)."""

    population: int = 50
    iterations: int = 50
    mutation: float = 0.6
    crossover: float = 0.9
    penalty: float = 1000.0

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be at least 4")
        if not 0.0 < self.mutation <= 2.0:
            raise ValueError("mutation factor must lie in (0, 2]")
        if not 0.0 <= self.crossover <= 1.0:
            raise ValueError("crossover rate must lie in [0, 1]")
        if self.penalty <= 0:
            raise ValueError("penalty scale must be positive")


@dataclass
class DePopulation:
    individuals: np.ndarray  # (P, dim)
    fitness: np.ndarray

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.fitness))

    @property
    def best_individual(self) -> np.ndarray:
        return self.individuals[self.best_index]

    @property
    def best_fitness(self) -> float:
        return float(self.fitness[self.best_index])


def signed_delta(phi0_t: float, phi1_t: float, psi: float) -> float:
    """cos(phi0 + psi) + cos(phi1 - psi): the LoS phase-gradient sum."""
    return np.cos(phi0_t + psi) + np.cos(phi1_t - psi)


def delta_factor(phi0_t: float, phi1_t: float, psi: float) -> float:
    """|cos(phi0 + psi) + cos(phi1 - psi)|, the alignment pitch factor."""
    return abs(signed_delta(phi0_t, phi1_t, psi))


def array_gain(q: np.ndarray, psi: float, phi0_t: float, phi1_t: float, wavelength: float) -> float:
    """|ahat_bs(q, psi)| = |sum_m exp(-j 2pi/lam q_m (cos(phi0+psi) + cos(phi1-psi)))|."""
    sd = signed_delta(phi0_t, phi1_t, psi)
    return float(np.abs(np.sum(np.exp(-2j * np.pi / wavelength * sd * np.asarray(q, float)))))


def _gain_many(Q: np.ndarray, sd: float, wavelength: float) -> np.ndarray:
    return np.abs(np.exp(-2j * np.pi / wavelength * sd * Q).sum(axis=1))


def _spacing_penalty(Q: np.ndarray, d: float) -> np.ndarray:
    """eta-free penalty core B1 * |B2| for each row of positions."""
    diff = np.abs(Q[:, :, None] - Q[:, None, :])
    iu = np.triu_indices(Q.shape[1], k=1)
    gaps = diff[:, iu[0], iu[1]]
    deficit = np.maximum(d - gaps, 0.0)
    b1 = deficit.sum(axis=1)
    count = (deficit > 0).sum(axis=1)
    return b1 * count


def de_fitness(
    q: np.ndarray,
    psi: float,
    phi0_t: float,
    phi1_t: float,
    penalty: float,
    min_spacing: float,
    wavelength: float,
) -> float:
    """Array-gain fitness minus the spacing-violation penalty eta * B1 * |B2|."""
    Q = np.asarray(q, float)[None, :]
    sd = signed_delta(phi0_t, phi1_t, psi)
    return float(_gain_many(Q, sd, wavelength)[0] - penalty * _spacing_penalty(Q, min_spacing)[0])


def de_init(
    m: int,
    bounds: tuple[float, float],
    params: DeParams,
    rng: np.random.Generator,
    fitness_fn,
) -> DePopulation:
    """Uniform random population, each individual sorted ascending."""
    Q = rng.uniform(bounds[0], bounds[1], size=(params.population, m))
    Q.sort(axis=1)
    return DePopulation(Q, fitness_fn(Q))


def de_step(
    pop: DePopulation,
    params: DeParams,
    rng: np.random.Generator,
    bounds: tuple[float, float],
    fitness_fn,
    sort_trials: bool = True,
) -> DePopulation:
    """One DE/best/1 generation: mutate around the best, crossover, clamp, select.

    Binomial crossover mixes mutant and parent coordinates with one forced
    mutant gene per trial. Trials are kept in ascending coordinate order (the
    fitness is permutation-invariant, so sorting only removes duplicate
    orderings from the search space). Selection keeps the incumbent unless
    strictly improved, so the best fitness never decreases.
    """
    P, dim = pop.individuals.shape
    best = pop.best_individual
    mutants = np.empty_like(pop.individuals)
    for p in range(P):
        choices = np.delete(np.arange(P), p)
        r1, r2 = rng.choice(choices, size=2, replace=False)
        mutants[p] = best + params.mutation * (pop.individuals[r1] - pop.individuals[r2])
    take = rng.uniform(size=(P, dim)) < params.crossover
    take[np.arange(P), rng.integers(dim, size=P)] = True
    trials = np.where(take, mutants, pop.individuals)
    np.clip(trials, bounds[0], bounds[1], out=trials)
    if sort_trials:
        trials.sort(axis=1)
    trial_fit = fitness_fn(trials)
    keep = trial_fit > pop.fitness
    new_inds = np.where(keep[:, None], trials, pop.individuals)
    new_fit = np.where(keep, trial_fit, pop.fitness)
    return DePopulation(new_inds, new_fit)


def run_position_de(
    psi: float,
    phi0_t: float,
    phi1_t: float,
    m: int,
    bounds: tuple[float, float],
    min_spacing: float,
    wavelength: float,
    params: DeParams,
    rng: np.random.Generator,
):
    """Full DE run on antenna positions; returns (best q, best-fitness trace)."""
    sd = signed_delta(phi0_t, phi1_t, psi)

    def fitness_fn(Q):
        return _gain_many(Q, sd, wavelength) - params.penalty * _spacing_penalty(Q, min_spacing)

    pop = de_init(m, bounds, params, rng, fitness_fn)
    trace = np.empty(params.iterations + 1)
    trace[0] = pop.best_fitness
    for s in range(1, params.iterations + 1):
        pop = de_step(pop, params, rng, bounds, fitness_fn)
        trace[s] = pop.best_fitness
    return pop.best_individual.copy(), trace


def repair_spacing(q: np.ndarray, min_spacing: float, bounds: tuple[float, float]) -> np.ndarray:
    """Greedy projection onto the spacing-feasible box: sort, push gaps open, re-clamp."""
    q_min, q_max = bounds
    if (q.size - 1) * min_spacing > (q_max - q_min) * (1 + 1e-12):
        raise ValueError("movement region cannot hold all antennas at minimum spacing")
    out = np.sort(np.asarray(q, float))
    out[0] = max(out[0], q_min)
    for i in range(1, out.size):
        out[i] = max(out[i], out[i - 1] + min_spacing)
    if out[-1] > q_max:
        out[-1] = q_max
        for i in range(out.size - 2, -1, -1):
            out[i] = min(out[i], out[i + 1] - min_spacing)
    return out


def sparse_array_positions(
    psi: float,
    phi0_t: float,
    phi1_t: float,
    m: int,
    q_min: float,
    wavelength: float,
) -> np.ndarray:
    """Uniform sparse array q_m = q_min + (m-1) lam / Delta that aligns both LoS beams."""
    delta = delta_factor(phi0_t, phi1_t, psi)
    if delta == 0:
        raise ValueError("alignment factor is zero; sparse-array pitch undefined")
    return q_min + np.arange(m) * wavelength / delta


def design_positions(
    psi: float,
    scsi: StatisticalCsi,
    m: int,
    bounds: tuple[float, float],
    min_spacing: float,
    wavelength: float,
    params: DeParams,
    seed: int,
    user: int = 0,
):
    """Position design at a fixed 6DMA rotation.

    Takes the closed-form sparse array whenever its aperture fits the movement
    region (boundary inclusive) and its pitch respects the minimum spacing;
    otherwise falls back to the penalized DE search followed by a feasibility
    repair. Returns (q, |ahat_bs|, branch, trace) with branch "sparse" or "de".
    """
    phi0_t = scsi.bs_irs.departure_angles[0]
    phi1_t = scsi.bs_user[user].departure_angles[0]
    return _design_positions_impl(psi, phi0_t, phi1_t, m, bounds, min_spacing, wavelength, params, seed)


def search_array_rotation(
    scsi: StatisticalCsi,
    m: int,
    bounds: tuple[float, float],
    psi_bounds: tuple[float, float],
    min_spacing: float,
    wavelength: float,
    params: DeParams,
    seed: int,
    grid_points: int = 61,
    optimize_q: bool = True,
    pinned_q: np.ndarray | None = None,
    user: int = 0,
):
    """Exhaustive scan of the 6DMA rotation; ties break toward the smallest angle.

    With ``optimize_q=False`` the positions stay pinned and only the rotation is
    scanned. Returns (psi, q, value, trace-of-best-psi).
    """
    phi0_t = scsi.bs_irs.departure_angles[0]
    phi1_t = scsi.bs_user[user].departure_angles[0]
    grid = np.linspace(psi_bounds[0], psi_bounds[1], grid_points)
    best = (-np.inf, None, None, None)
    for psi in grid:
        psi = float(psi)
        if optimize_q:
            q, value, _branch, trace = _design_positions_impl(
                psi, phi0_t, phi1_t, m, bounds, min_spacing, wavelength, params, seed
            )
        else:
            q = np.asarray(pinned_q, float)
            value = array_gain(q, psi, phi0_t, phi1_t, wavelength)
            trace = None
        if value > best[0]:
            best = (value, psi, q, trace)
    value, psi, q, trace = best
    return psi, q, value, trace


def _design_positions_impl(psi, phi0_t, phi1_t, m, bounds, min_spacing, wavelength, params, seed):
    delta = delta_factor(phi0_t, phi1_t, psi)
    width = bounds[1] - bounds[0]
    if delta > 0 and delta >= (m - 1) * wavelength / width and wavelength / delta >= min_spacing:
        q = sparse_array_positions(psi, phi0_t, phi1_t, m, bounds[0], wavelength)
        return q, array_gain(q, psi, phi0_t, phi1_t, wavelength), "sparse", None
    rng = rngmod.stream(seed, "pos-de", rngmod.float_key(psi))
    q, trace = run_position_de(psi, phi0_t, phi1_t, m, bounds, min_spacing, wavelength, params, rng)
    q = repair_spacing(q, min_spacing, bounds)
    return q, array_gain(q, psi, phi0_t, phi1_t, wavelength), "de", trace


@dataclass(frozen=True)
class ReflectionOptions:
    """Knobs for the relaxed reflection solve and rank-one extraction."""

    sdp_tol: float = 1e-6
    sdp_max_iter: int = 5000
    n_randomizations: int = 100
    polish_sweeps: int = 200


def design_reflection(
    scsi: StatisticalCsi,
    config: ArraySurfaceConfig,
    layout: IrsLayout,
    radio: RadioContext,
    seed: int,
    options: ReflectionOptions = ReflectionOptions(),
    user: int = 0,
):
    """Reflection design at a fixed surface rotation: relax, solve, extract, polish.

    Returns (v, expected equivalent gain, terms, sdp solution).
    """
    terms = gain_terms(scsi, config, layout, radio, user)
    h = heff_matrix(terms, compensated=True).matrix
    sol = solve_diag_trace_sdp(h, tol=options.sdp_tol, max_iter=options.sdp_max_iter)
    rng = rngmod.stream(seed, "refl", rngmod.float_key(config.phi))
    v = extract_rank_one(sol.V, h, options.n_randomizations, rng)
    v = polish_phases(h, v, max_sweeps=options.polish_sweeps)
    return v, expected_equivalent_gain(terms, v), terms, sol


def search_surface_rotation(
    scsi: StatisticalCsi,
    q: np.ndarray,
    psi: float,
    layout: IrsLayout,
    radio: RadioContext,
    phi_bounds: tuple[float, float],
    config_template: ArraySurfaceConfig,
    seed: int,
    grid_points: int = 61,
    options: ReflectionOptions = ReflectionOptions(),
    user: int = 0,
):
    """Exhaustive surface-rotation scan with a reflection solve per grid angle.

    Returns (phi, v, value, per-angle values).
    """
    grid = np.linspace(phi_bounds[0], phi_bounds[1], grid_points)
    values = np.empty(grid.size)
    best = (-np.inf, None, None, True)
    for i, phi in enumerate(grid):
        cfg = _with_rotation(config_template, q, psi, float(phi))
        v, value, _terms, sol = design_reflection(scsi, cfg, layout, radio, seed, options, user)
        values[i] = value
        if value > best[0]:
            best = (value, float(phi), v, sol.converged)
    value, phi, v, converged = best
    return phi, v, value, values, converged


def _with_rotation(template: ArraySurfaceConfig, q, psi, phi) -> ArraySurfaceConfig:
    return ArraySurfaceConfig(
        q=q,
        psi=psi,
        phi=phi,
        q_bounds=template.q_bounds,
        psi_bounds=template.psi_bounds,
        phi_bounds=template.phi_bounds,
        min_spacing=template.min_spacing,
    )


def mrt_rate_stats(
    scsi: StatisticalCsi,
    config: ArraySurfaceConfig,
    layout: IrsLayout,
    radio: RadioContext,
    v: np.ndarray,
    p_t: float,
    sigma2: float,
    n_samples: int,
    rng: np.random.Generator,
    user: int = 0,
):
    """Mean and standard error of the MRT rate log2(1 + P ||h_eff||^2 / sigma^2)."""
    h_eff = effective_channel_batch(scsi, config, layout, radio, v, n_samples, rng)
    gains = np.sum(np.abs(h_eff[:, user, :]) ** 2, axis=1)
    rates = np.log2(1.0 + p_t * gains / sigma2)
    return float(rates.mean()), float(rates.std(ddof=1) / np.sqrt(n_samples))


@dataclass(frozen=True)
class SingleUserResult:
    config: ArraySurfaceConfig
    v: np.ndarray
    predicted_gain: float
    position_gain: float
    mc_rate: float
    rate_stderr: float
    de_trace: np.ndarray | None
    phi_values: np.ndarray | None = None
    converged: bool = True


def single_user_pipeline(
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
    options: ReflectionOptions = ReflectionOptions(),
    psi_grid: int = 61,
    phi_grid: int = 61,
    eval_draws: int = 500,
    eval_rng: np.random.Generator | None = None,
    optimize_q: bool = True,
    optimize_psi: bool = True,
    optimize_phi: bool = True,
) -> SingleUserResult:
    """Run both decoupled subproblems and evaluate the MRT rate on fresh draws.

    Restricted benchmark variants pin any of q (centered half-wavelength array),
    the 6DMA rotation, or the surface rotation to their defaults; the reflection
    vector is always optimized.
    """
    d = radio.min_spacing
    pinned_q = ula_positions(m, d)

    if optimize_psi:
        psi, q, pos_gain, trace = search_array_rotation(
            scsi, m, q_bounds, psi_bounds, d, radio.wavelength, de_params, seed,
            grid_points=psi_grid, optimize_q=optimize_q, pinned_q=pinned_q,
        )
    elif optimize_q:
        phi0_t = scsi.bs_irs.departure_angles[0]
        phi1_t = scsi.bs_user[0].departure_angles[0]
        q, pos_gain, _branch, trace = _design_positions_impl(
            0.0, phi0_t, phi1_t, m, q_bounds, d, radio.wavelength, de_params, seed
        )
        psi = 0.0
    else:
        psi, q, trace = 0.0, pinned_q, None
        phi0_t = scsi.bs_irs.departure_angles[0]
        phi1_t = scsi.bs_user[0].departure_angles[0]
        pos_gain = array_gain(q, psi, phi0_t, phi1_t, radio.wavelength)

    template = ArraySurfaceConfig(
        q=q, psi=psi, phi=0.0, q_bounds=q_bounds, psi_bounds=psi_bounds,
        phi_bounds=phi_bounds, min_spacing=d,
    )
    phi_values = None
    if optimize_phi:
        phi, v, value, phi_values, converged = search_surface_rotation(
            scsi, q, psi, layout, radio, phi_bounds, template, seed,
            grid_points=phi_grid, options=options,
        )
    else:
        phi = 0.0
        v, value, _terms, sol = design_reflection(scsi, template, layout, radio, seed, options)
        converged = sol.converged

    config = _with_rotation(template, q, psi, phi)
    if eval_rng is None:
        eval_rng = rngmod.stream(seed, "eval")
    rate, stderr = mrt_rate_stats(
        scsi, config, layout, radio, v, p_t, sigma2, eval_draws, eval_rng
    )
    return SingleUserResult(
        config=config,
        v=v,
        predicted_gain=value,
        position_gain=pos_gain,
        mc_rate=rate,
        rate_stderr=stderr,
        de_trace=trace,
        phi_values=phi_values,
        converged=converged,
    )
