"""Scenario and benchmark-scheme runners with CSV/JSON persistence.

Each run draws one statistical-CSI realization from a named seed, optimizes the
long-timescale variables under the scheme's restriction, and reports the
average rate over an independent test batch whose random stream depends only on
the seed, so schemes are compared on common channel draws. Output files:

``results.csv``
    One row per (scheme, axis value, seed); columns, in order:
    scheme, axis, axis_value, seed, k_users, m_antennas, n_elements, rate,
    rate_stderr, objective, converged, psi, phi, q, config_hash.
    ``q`` joins the antenna coordinates with ``;``. Rows are sorted by
    (scheme, axis_value, seed).

``summary.csv``
    One row per (scheme, axis value): scheme, axis, axis_value, n_seeds, rate
    (mean over seeds), rate_stderr (standard error over seeds).

``trace.csv``
    Per-iteration optimizer traces: kind, scheme, seed, iteration, value.

``manifest.json``
    Seeds, full config, config hash, package version, kernel backend.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from types import SimpleNamespace

import numpy as np

from . import __version__, kernels
from . import rng as rngmod
from .channel import sample_scsi
from .config import ExperimentConfig, dbm_to_watts
from .geometry import IrsLayout, NodeGeometry, sample_user_positions, ula_positions
from .multi_user import SscaParams, extended_de, scg_inner, ssca_inner, wmmse_rate_stats
from .single_user import DeParams, ReflectionOptions, run_position_de, single_user_pipeline
from .channel import effective_channel_batch

__all__ = [
    "Scheme",
    "SCHEMES",
    "ResultRecord",
    "build_scene",
    "run_scheme",
    "run_sweep",
    "convergence_traces",
    "write_results_csv",
    "write_summary_csv",
    "write_trace_csv",
    "write_manifest",
]


@dataclass(frozen=True)
class Scheme:
    """Which long-timescale variables a benchmark scheme may optimize."""

    name: str
    optimize_q: bool
    optimize_psi: bool
    optimize_phi: bool
    inner: str | None = None  # None picks scg for K > 1


SCHEMES = {
    "proposed": Scheme("proposed", True, True, True),
    "fixed_configuration": Scheme("fixed_configuration", False, False, False),
    "sixdma_firs": Scheme("sixdma_firs", True, True, False),
    "rirs_only": Scheme("rirs_only", False, False, True),
    "rotatable_firs": Scheme("rotatable_firs", False, True, False),
    "positionable_firs": Scheme("positionable_firs", True, False, False),
    "de_ssca": Scheme("de_ssca", True, True, True, inner="ssca"),
    "low_complexity": Scheme("low_complexity", True, True, True, inner="scg"),
}

AXES = ("power", "elements", "paths", "aperture")


@dataclass(frozen=True)
class ResultRecord:
    scheme: str
    axis: str
    axis_value: float | str
    seed: int
    k_users: int
    m_antennas: int
    n_elements: int
    rate: float
    rate_stderr: float
    objective: float
    converged: bool
    psi: float
    phi: float
    q: np.ndarray
    config_hash: str


def build_scene(config: ExperimentConfig, seed: int):
    """Draw the scene and S-CSI for one seed: (geometry, scsi, layout, radio)."""
    radio = config.radio()
    layout = IrsLayout(config.irs_rows, config.irs_cols, radio.min_spacing)
    users = sample_user_positions(
        config.user_center, config.user_radius, config.n_users, rngmod.stream(seed, "scene")
    )
    geometry = NodeGeometry(
        config.bs_position, config.irs_position, users, config.user_center, config.user_radius
    )
    scsi = sample_scsi(
        geometry,
        radio,
        config.l_bs_irs,
        config.l_irs_user,
        config.l_bs_user,
        rngmod.stream(seed, "scsi"),
        config.nlos_power_ratio,
    )
    return geometry, scsi, layout, radio


def _de_params(config: ExperimentConfig, outer: bool) -> DeParams:
    return DeParams(
        population=config.outer_pop if outer else config.de_population,
        iterations=config.outer_gens if outer else config.de_generations,
        mutation=config.de_mutation,
        crossover=config.de_crossover,
        penalty=config.de_penalty,
    )


def _refl_options(config: ExperimentConfig, de_stage: bool = False) -> ReflectionOptions:
    return ReflectionOptions(
        sdp_tol=config.sdp_tol,
        sdp_max_iter=config.sdp_de_max_iter if de_stage else config.sdp_max_iter,
        n_randomizations=config.n_randomizations,
    )


def _ssca_params(config: ExperimentConfig) -> SscaParams:
    return SscaParams(
        batch_size=config.ssca_batch,
        tau=config.ssca_tau,
        max_iter=config.ssca_max_iter,
        window=config.ssca_window,
        rel_tol=config.ssca_rel_tol,
        wmmse_tol=config.wmmse_tol,
        wmmse_max_iter=config.wmmse_max_iter,
    )


def _optimize(config: ExperimentConfig, scheme: Scheme, seed: int):
    """Long-timescale optimization under a scheme restriction.

    Returns (placement, v, objective, converged, scsi, layout, radio).
    """
    _, scsi, layout, radio = build_scene(config, seed)
    p_t, sigma2 = config.p_t_watts, config.noise_watts
    if config.n_users == 1:
        res = single_user_pipeline(
            scsi,
            config.m_antennas,
            layout,
            radio,
            config.q_bounds(),
            config.psi_bounds(),
            config.phi_bounds(),
            p_t,
            sigma2,
            seed,
            de_params=_de_params(config, outer=False),
            options=_refl_options(config),
            psi_grid=config.psi_grid,
            phi_grid=config.phi_grid,
            eval_draws=2,  # the harness re-evaluates on its own stream
            eval_rng=rngmod.stream(seed, "pipeline-probe"),
            optimize_q=scheme.optimize_q,
            optimize_psi=scheme.optimize_psi,
            optimize_phi=scheme.optimize_phi,
        )
        placement = SimpleNamespace(q=res.config.q, psi=res.config.psi, phi=res.config.phi)
        return placement, res.v, res.predicted_gain, res.converged, scsi, layout, radio

    inner = scheme.inner or "scg"
    if not (scheme.optimize_q or scheme.optimize_psi or scheme.optimize_phi):
        placement = SimpleNamespace(
            q=ula_positions(config.m_antennas, radio.min_spacing), psi=0.0, phi=0.0
        )
        inner_seed = rngmod.stream(seed, "inner", "fixed").integers(2**63)
        if inner == "scg":
            v, rate, info = scg_inner(
                scsi, placement, layout, radio, p_t, sigma2, inner_seed,
                _ssca_params(config), _refl_options(config),
                eval_draws=config.outer_eval_draws,
            )
            return placement, v, rate, info.sdp.converged, scsi, layout, radio
        res = ssca_inner(
            scsi, placement, layout, radio, p_t, sigma2, inner_seed, _ssca_params(config),
            eval_draws=config.outer_eval_draws,
        )
        return placement, res.v, res.avg_rate, res.stabilized, scsi, layout, radio

    out = extended_de(
        scsi,
        config.m_antennas,
        layout,
        radio,
        config.q_bounds(),
        config.psi_bounds(),
        config.phi_bounds(),
        p_t,
        sigma2,
        seed,
        de_params=_de_params(config, outer=True),
        ssca_params=_ssca_params(config),
        options=_refl_options(config, de_stage=True),
        final_options=_refl_options(config),
        inner=inner,
        optimize_q=scheme.optimize_q,
        optimize_psi=scheme.optimize_psi,
        optimize_phi=scheme.optimize_phi,
        warm_start=config.ssca_warm_start,
        fitness_draws=config.outer_eval_draws,
    )
    placement = SimpleNamespace(q=out.q, psi=out.psi, phi=out.phi)
    return placement, out.v, out.best_fitness, out.converged, scsi, layout, radio


def _evaluate(config, scsi, layout, radio, placement, v, seed):
    """Test-batch rate on the evaluation stream (disjoint from optimization)."""
    p_t, sigma2 = config.p_t_watts, config.noise_watts
    eval_rng = rngmod.stream(seed, "eval")
    if config.n_users == 1:
        h_eff = effective_channel_batch(scsi, placement, layout, radio, v, config.eval_draws, eval_rng)
        gains = np.sum(np.abs(h_eff[:, 0, :]) ** 2, axis=1)
        rates = np.log2(1.0 + p_t * gains / sigma2)
        return float(rates.mean()), float(rates.std(ddof=1) / np.sqrt(rates.size))
    rate, stderr, _, _ = wmmse_rate_stats(
        scsi, placement, layout, radio, v, p_t, sigma2, config.eval_draws, eval_rng,
        _ssca_params(config),
    )
    return rate, stderr


def _record(config, scheme_name, seed, placement, v, objective, converged, rate, stderr, axis="", axis_value=""):
    return ResultRecord(
        scheme=scheme_name,
        axis=axis,
        axis_value=axis_value,
        seed=seed,
        k_users=config.n_users,
        m_antennas=config.m_antennas,
        n_elements=config.n_elements,
        rate=rate,
        rate_stderr=stderr,
        objective=objective,
        converged=converged,
        psi=placement.psi,
        phi=placement.phi,
        q=np.asarray(placement.q, float),
        config_hash=config.config_hash(),
    )


def run_scheme(
    config: ExperimentConfig,
    scheme_name: str,
    seed: int | None = None,
    axis: str = "",
    axis_value="",
) -> ResultRecord:
    """Optimize one scheme on one S-CSI seed and evaluate on the test batch."""
    if scheme_name not in SCHEMES:
        raise KeyError(f"unknown scheme: {scheme_name}")
    scheme = SCHEMES[scheme_name]
    seed = config.seed if seed is None else seed
    placement, v, objective, converged, scsi, layout, radio = _optimize(config, scheme, seed)
    rate, stderr = _evaluate(config, scsi, layout, radio, placement, v, seed)
    return _record(config, scheme_name, seed, placement, v, objective, converged, rate, stderr, axis, axis_value)


def _power_rows(config: ExperimentConfig, scheme_name: str, seed: int, points) -> list:
    """Rate rows across transmit powers for a configuration optimized at the
    reference budget; per-sample beamforming warm-starts up the power axis so
    each sample's rate is non-decreasing in the budget."""
    scheme = SCHEMES[scheme_name]
    placement, v, objective, converged, scsi, layout, radio = _optimize(config, scheme, seed)
    sigma2 = config.noise_watts
    eval_rng = rngmod.stream(seed, "eval")
    h_eff = effective_channel_batch(scsi, placement, layout, radio, v, config.eval_draws, eval_rng)
    order = np.argsort(np.asarray(points, float))
    rows = [None] * len(points)
    if config.n_users == 1:
        gains = np.sum(np.abs(h_eff[:, 0, :]) ** 2, axis=1)
        for i in order:
            p = dbm_to_watts(float(points[i]))
            rates = np.log2(1.0 + p * gains / sigma2)
            rows[i] = _record(
                config, scheme_name, seed, placement, v, objective, converged,
                float(rates.mean()), float(rates.std(ddof=1) / np.sqrt(rates.size)),
                "power", float(points[i]),
            )
        return rows
    params = _ssca_params(config)
    w_init = None
    for i in order:
        p = dbm_to_watts(float(points[i]))
        if w_init is None:
            w_init = kernels.mrt_init_batch(h_eff, p)
        rates, _, w_out, statuses = kernels.wmmse_rate_batch_kernel(
            np.ascontiguousarray(h_eff), float(p), float(sigma2),
            float(params.wmmse_tol), int(params.wmmse_max_iter), float(params.power_rtol),
            np.ascontiguousarray(w_init),
        )
        if np.any(statuses == 2):
            raise RuntimeError("WMMSE power bisection failed during power sweep")
        w_init = w_out  # feasible start for the next (larger) budget
        rows[i] = _record(
            config, scheme_name, seed, placement, v, objective, converged,
            float(rates.mean()), float(rates.std(ddof=1) / np.sqrt(rates.size)),
            "power", float(points[i]),
        )
    return rows


def _config_at(config: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    if axis == "elements":
        n = int(value)
        if n % config.irs_cols:
            raise ValueError(f"element count {n} not divisible by {config.irs_cols} columns")
        return config.replace(irs_rows=n // config.irs_cols)
    if axis == "paths":
        l = int(value)
        return config.replace(l_bs_irs=l, l_irs_user=l, l_bs_user=l)
    if axis == "aperture":
        return config.replace(aperture_factor=float(value))
    raise ValueError(f"unknown sweep axis: {axis}")


def run_sweep(
    config: ExperimentConfig,
    scheme_names,
    axis: str,
    points,
    seeds=None,
    threads: int | None = None,
):
    """Run a scheme comparison along one axis; returns sorted ResultRecords."""
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}")
    for name in scheme_names:
        if name not in SCHEMES:
            raise KeyError(f"unknown scheme: {name}")
    if seeds is None:
        seeds = list(range(config.seed, config.seed + config.n_seeds))
    threads = config.threads if threads is None else threads

    tasks = []
    if axis == "power":
        for name in scheme_names:
            for seed in seeds:
                tasks.append((_power_rows, (config, name, seed, list(points))))
    else:
        for name in scheme_names:
            for value in points:
                cfg = _config_at(config, axis, value)
                for seed in seeds:
                    tasks.append((_sweep_row, (cfg, name, seed, axis, value)))

    if threads > 1:
        # processes, not threads: the optimizer loops are GIL-bound numpy
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(fn, *args) for fn, args in tasks]
            chunks = [f.result() for f in futures]
    else:
        chunks = [fn(*args) for fn, args in tasks]
    records = [r for chunk in chunks for r in (chunk if isinstance(chunk, list) else [chunk])]
    records.sort(key=lambda r: (r.scheme, float(r.axis_value), r.seed))
    return records


def _sweep_row(cfg, name, seed, axis, value):
    return run_scheme(cfg, name, seed, axis=axis, axis_value=float(value))


def summarize(records) -> list[dict]:
    """Aggregate per-seed rows into per-(scheme, axis value) means."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.scheme, r.axis, r.axis_value), []).append(r.rate)
    rows = []
    for (scheme, axis, value), rates in sorted(groups.items(), key=lambda kv: (kv[0][0], float(kv[0][2] or 0))):
        arr = np.asarray(rates)
        stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        rows.append(
            {
                "scheme": scheme,
                "axis": axis,
                "axis_value": value,
                "n_seeds": arr.size,
                "rate": float(arr.mean()),
                "rate_stderr": stderr,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# convergence traces


def convergence_traces(config: ExperimentConfig, single_user: bool, seed: int | None = None, inner: str = "scg"):
    """Per-iteration optimizer traces as (kind, scheme, seed, iteration, value) rows.

    Single-user mode emits the position-DE best-fitness trajectory (one row per
    generation, the DE solver run regardless of which branch the pipeline would
    pick). Multi-user mode emits the stochastic-surrogate trajectory at the
    default placement plus the joint-search best-fitness trajectory.
    """
    seed = config.seed if seed is None else seed
    rows = []
    _, scsi, layout, radio = build_scene(config, seed)
    if single_user:
        phi0 = scsi.bs_irs.departure_angles[0]
        phi1 = scsi.bs_user[0].departure_angles[0]
        _, trace = run_position_de(
            0.0, phi0, phi1, config.m_antennas, config.q_bounds(), radio.min_spacing,
            radio.wavelength, _de_params(config, outer=False), rngmod.stream(seed, "pos-de", rngmod.float_key(0.0)),
        )
        for i, value in enumerate(trace[1:], start=1):
            rows.append(("de_single", "proposed", seed, i, float(value)))
        return rows

    placement = SimpleNamespace(q=ula_positions(config.m_antennas, radio.min_spacing), psi=0.0, phi=0.0)
    res = ssca_inner(
        scsi, placement, layout, radio, config.p_t_watts, config.noise_watts,
        rngmod.stream(seed, "trace-ssca").integers(2**63), _ssca_params(config),
    )
    for i, value in enumerate(res.surrogate_trace, start=1):
        rows.append(("ssca", "de_ssca", seed, i, float(value)))
    out = extended_de(
        scsi, config.m_antennas, layout, radio,
        config.q_bounds(), config.psi_bounds(), config.phi_bounds(),
        config.p_t_watts, config.noise_watts, seed,
        de_params=_de_params(config, outer=True),
        ssca_params=_ssca_params(config),
        options=_refl_options(config, de_stage=True),
        final_options=_refl_options(config),
        inner=inner,
    )
    for i, value in enumerate(out.fitness_trace[1:], start=1):
        rows.append(("de_outer", "low_complexity" if inner == "scg" else "de_ssca", seed, i, float(value)))
    return rows


# ---------------------------------------------------------------------------
# persistence

RESULT_COLUMNS = (
    "scheme,axis,axis_value,seed,k_users,m_antennas,n_elements,rate,rate_stderr,"
    "objective,converged,psi,phi,q,config_hash"
)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.12g" % float(x)
    return str(x)


def write_results_csv(path, records):
    lines = [RESULT_COLUMNS]
    for r in records:
        q = ";".join("%.9g" % float(x) for x in r.q)
        lines.append(
            ",".join(
                [
                    r.scheme,
                    r.axis,
                    _fmt(r.axis_value) if r.axis_value != "" else "",
                    _fmt(r.seed),
                    _fmt(r.k_users),
                    _fmt(r.m_antennas),
                    _fmt(r.n_elements),
                    _fmt(r.rate),
                    _fmt(r.rate_stderr),
                    _fmt(r.objective),
                    _fmt(r.converged),
                    _fmt(r.psi),
                    _fmt(r.phi),
                    q,
                    r.config_hash,
                ]
            )
        )
    _write_lines(path, lines)


def write_summary_csv(path, rows):
    lines = ["scheme,axis,axis_value,n_seeds,rate,rate_stderr"]
    for row in rows:
        lines.append(
            ",".join(
                [
                    row["scheme"],
                    row["axis"],
                    _fmt(row["axis_value"]) if row["axis_value"] != "" else "",
                    _fmt(row["n_seeds"]),
                    _fmt(row["rate"]),
                    _fmt(row["rate_stderr"]),
                ]
            )
        )
    _write_lines(path, lines)


def write_trace_csv(path, rows):
    lines = ["kind,scheme,seed,iteration,value"]
    for kind, scheme, seed, iteration, value in rows:
        lines.append(f"{kind},{scheme},{_fmt(seed)},{_fmt(iteration)},{_fmt(value)}")
    _write_lines(path, lines)


def write_manifest(path, config: ExperimentConfig, seeds, schemes, axis="", points=()):
    payload = {
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "seeds": list(map(int, seeds)),
        "schemes": list(schemes),
        "axis": axis,
        "points": [float(p) for p in points],
        "package_version": __version__,
        "kernel_backend": kernels.backend(),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
