"""Deterministic experiment pipelines and machine-readable run reports.

Every pipeline follows the same discipline:

* all randomness comes from :func:`tritail.streams.substream` keyed on the
  config's base seed, a fixed purpose tag, and (for bulk sampling) a chunk
  index — never from shared mutable generator state;
* bulk samples are assembled from fixed-size chunks whose content is a pure
  function of the chunk index, fanned out over a thread pool and merged in
  index order — so the merged sample, and therefore every downstream record,
  is byte-identical for any worker count;
* failures degrade to ``passed=False`` records instead of aborting sibling
  steps, so a full sweep always yields a complete scorecard.

Reports serialize to JSON with sorted keys; the canonical byte form (identity
and hashing) excludes the one volatile field, ``wall_time``.
"""

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import engine, renewal, spectral, tailstats
from .config import ExperimentConfig, canonical_json
from .engine import PathSample, SimConfig
from .errors import PipelineMismatch, TritailError
from .garch import GarchLaw, GarchPath, stationary_garch_sample, verify_tail_relations, return_spectral_check
from .laws import (
    REGIME_A1_DOMINANT,
    REGIME_A2_DOMINANT,
    check_stationarity,
    classify_regime,
    solve_tail_index,
)
from .streams import substream

__all__ = [
    "ResultRecord",
    "RunReport",
    "DiffEntry",
    "run",
    "compare_reports",
]

_CHUNK_DRAWS = 200_000
_CHUNK_CHAIN_LEN = 500


# ============================================================================
# Report containers
# ============================================================================

def _json_num(v: Optional[float]):
    """JSON-safe number: None passes through, non-finite becomes its repr string."""
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else repr(v)


@dataclass(frozen=True)
class ResultRecord:
    """One named scorecard entry.

    ``passed`` is None for purely informational values (nothing to gate).
    Bounds are the accepted interval when a gate exists.
    """

    name: str
    value: Optional[float] = None
    std_error: float = 0.0
    bound_low: Optional[float] = None
    bound_high: Optional[float] = None
    passed: Optional[bool] = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": _json_num(self.value),
            "std_error": _json_num(self.std_error),
            "bound_low": _json_num(self.bound_low),
            "bound_high": _json_num(self.bound_high),
            "pass": self.passed,
            "note": self.note,
        }


def _record_from_dict(d: dict) -> ResultRecord:
    def num(x):
        return None if x is None else float(x)

    return ResultRecord(
        name=d["name"],
        value=num(d["value"]),
        std_error=float(d["std_error"]) if d["std_error"] is not None else 0.0,
        bound_low=num(d["bound_low"]),
        bound_high=num(d["bound_high"]),
        passed=d["pass"],
        note=d.get("note", ""),
    )


@dataclass(eq=False)
class RunReport:
    """The outcome of one pipeline run: scorecard, artifacts, identity."""

    name: str
    pipeline: str
    config_digest: str
    results: tuple
    artifacts: tuple
    wall_time: float

    def to_dict(self, include_wall_time: bool = True) -> dict:
        d = {
            "name": self.name,
            "pipeline": self.pipeline,
            "config_digest": self.config_digest,
            "results": [r.to_dict() for r in self.results],
            "artifacts": list(self.artifacts),
        }
        if include_wall_time:
            d["wall_time"] = self.wall_time
        return d

    def canonical_bytes(self) -> bytes:
        """Identity bytes: everything except the volatile wall time."""
        return canonical_json(self.to_dict(include_wall_time=False)).encode("utf-8")

    @property
    def all_passed(self) -> bool:
        return all(r.passed is not False for r in self.results)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, sort_keys=True, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "RunReport":
        with open(path, "r", encoding="utf-8") as f:
            d = json.load(f)
        return cls(
            name=d["name"],
            pipeline=d["pipeline"],
            config_digest=d["config_digest"],
            results=tuple(_record_from_dict(r) for r in d["results"]),
            artifacts=tuple(d["artifacts"]),
            wall_time=float(d.get("wall_time", 0.0)),
        )


# ============================================================================
# Deterministic chunked sampling
# ============================================================================

def _chunk_sizes(n: int) -> list:
    sizes = [_CHUNK_DRAWS] * (n // _CHUNK_DRAWS)
    if n % _CHUNK_DRAWS:
        sizes.append(n % _CHUNK_DRAWS)
    return sizes


def _map_chunks(fn: Callable, sizes: list, workers: int) -> list:
    if workers <= 1 or len(sizes) <= 1:
        return [fn(i, s) for i, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def _stationary_chunked(law, sim: SimConfig, workers: int, purpose: str = "stationary") -> PathSample:
    """Chain-major stationary sample built from order-merged fixed chunks.

    Every chunk runs ceil(size/500) chains of exactly 500 kept states and trims
    to its size; only the final chunk can be a non-multiple, so the merged
    array keeps the chain-major invariant with ``chain_len=500``.
    """
    n = sim.n_draws

    def one(i: int, size: int):
        n_chains = -(-size // _CHUNK_CHAIN_LEN)
        cfg = replace(sim, n_draws=n_chains * _CHUNK_CHAIN_LEN)
        s = engine.stationary_sample(
            law, cfg, substream(sim.base_seed, purpose, i), n_chains=n_chains
        )
        return s.w1[:size], s.w2[:size]

    parts = _map_chunks(one, _chunk_sizes(n), workers)
    return PathSample(
        w1=np.concatenate([p[0] for p in parts]),
        w2=np.concatenate([p[1] for p in parts]),
        mode="forward_burnin",
        config=sim,
        chain_len=min(_CHUNK_CHAIN_LEN, n),
    )


def _backward_chunked(law, sim: SimConfig, workers: int) -> PathSample:
    def one(i: int, size: int):
        cfg = replace(sim, n_draws=size)
        s = engine.backward_truncated(law, cfg, substream(sim.base_seed, "backward", i))
        return s.w1, s.w2

    parts = _map_chunks(one, _chunk_sizes(sim.n_draws), workers)
    return PathSample(
        w1=np.concatenate([p[0] for p in parts]),
        w2=np.concatenate([p[1] for p in parts]),
        mode="backward_truncated",
        config=sim,
        chain_len=1,
    )


def _garch_chunked(params, sim: SimConfig, workers: int) -> GarchPath:
    n = sim.n_draws

    def one(i: int, size: int):
        n_chains = -(-size // _CHUNK_CHAIN_LEN)
        cfg = replace(sim, n_draws=n_chains * _CHUNK_CHAIN_LEN)
        p = stationary_garch_sample(
            params, cfg, substream(sim.base_seed, "garch", i), n_chains=n_chains
        )
        return tuple(
            arr[:size] for arr in (p.x1, p.x2, p.sigma1_sq, p.sigma2_sq, p.z1, p.z2)
        )

    parts = _map_chunks(one, _chunk_sizes(n), workers)
    merged = [np.concatenate([p[j] for p in parts]) for j in range(6)]
    return GarchPath(
        x1=merged[0],
        x2=merged[1],
        sigma1_sq=merged[2],
        sigma2_sq=merged[3],
        z1=merged[4],
        z2=merged[5],
        params=params,
        config=sim,
        chain_len=min(_CHUNK_CHAIN_LEN, n),
    )


# ============================================================================
# Pipeline context and helpers
# ============================================================================

@dataclass(eq=False)
class _Ctx:
    cfg: ExperimentConfig
    workers: int
    outdir: Path
    records: list
    artifacts: list
    cache: dict

    @property
    def seed(self) -> int:
        return self.cfg.sim.base_seed

    def tol(self, name: str, default: float) -> float:
        return self.cfg.tolerances.get(name, default)

    def param(self, name: str, default):
        return self.cfg.params.get(name, default)

    def add(self, **kwargs) -> None:
        self.records.append(ResultRecord(**kwargs))

    def is_garch(self) -> bool:
        return isinstance(self.cfg.law, GarchLaw)

    def garch_path(self) -> GarchPath:
        if "garch_path" not in self.cache:
            self.cache["garch_path"] = _garch_chunked(
                self.cfg.law.params, self.cfg.sim, self.workers
            )
        return self.cache["garch_path"]

    def path_sample(self) -> PathSample:
        """The stationary state sample (squared volatilities for GARCH laws)."""
        if self.is_garch():
            return self.garch_path().vol_sample()
        if "path_sample" not in self.cache:
            self.cache["path_sample"] = _stationary_chunked(
                self.cfg.law, self.cfg.sim, self.workers
            )
        return self.cache["path_sample"]

    def regime(self):
        if "regime" not in self.cache:
            self.cache["regime"] = classify_regime(
                self.cfg.law, rng=substream(self.seed, "regime")
            )
        return self.cache["regime"]

    def write_csv(self, filename: str, header, rows) -> None:
        with open(self.outdir / filename, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        self.artifacts.append(filename)


def _solution_record(ctx: _Ctx, name: str, sol) -> None:
    deterministic = sol.method in ("closed_form", "quadrature")
    tol = ctx.tol("alpha_residual", 1e-8)
    ctx.add(
        name=name,
        value=sol.alpha,
        std_error=sol.std_error,
        bound_low=-tol if deterministic else None,
        bound_high=tol if deterministic else None,
        passed=bool(abs(sol.residual) <= tol) if deterministic else None,
        note=f"method={sol.method} residual={sol.residual:.3g} "
             f"bracket=({sol.bracket[0]:.4g}, {sol.bracket[1]:.4g})",
    )


# ============================================================================
# Pipeline steps
# ============================================================================

def _step_solve_index(ctx: _Ctx) -> None:
    rep = ctx.regime()
    _solution_record(ctx, "alpha1", rep.alpha1)
    _solution_record(ctx, "alpha2", rep.alpha2)
    cross = rep.cross_moment
    ctx.add(
        name="cross_moment_finite",
        value=1.0 if rep.cross_moment_ok else 0.0,
        passed=rep.cross_moment_ok,
        note=f"E A2^min(alpha) = {cross.value:.6g}" if cross is not None else "divergent",
    )
    ctx.add(name="regime", value=None, passed=None, note=rep.regime)


def _step_stationarity(ctx: _Ctx) -> None:
    rep = check_stationarity(ctx.cfg.law)
    ctx.add(
        name="stationarity_holds",
        value=1.0 if rep.holds else 0.0,
        passed=rep.holds,
        note=f"witness_eps={rep.witness_eps} rho={rep.rho:.6g}",
    )
    steps = int(ctx.param("lyapunov_steps", 20_000))
    chains = int(ctx.param("lyapunov_chains", 200))
    est = engine.lyapunov_estimate(
        ctx.cfg.law, steps, chains, substream(ctx.seed, "lyapunov")
    )
    ctx.add(
        name="lyapunov_gamma",
        value=est.gamma_hat,
        std_error=est.std_error,
        bound_low=None,
        bound_high=0.0,
        passed=bool(est.gamma_hat < 0.0),
        note=f"n={est.n_steps} chains={est.n_chains}",
    )
    if math.isfinite(est.upper_bound):
        slack = est.upper_bound + 3.0 * est.std_error - est.gamma_hat
        ctx.add(
            name="lyapunov_bound_slack",
            value=slack,
            std_error=est.std_error,
            bound_low=0.0,
            bound_high=None,
            passed=bool(slack >= 0.0),
            note=f"bound={est.upper_bound:.6g}",
        )
    else:
        ctx.add(name="lyapunov_bound_slack", value=None, passed=None,
                note="no small-moment witness on the default grid")


def _summary_stats(ctx: _Ctx, name: str, series: np.ndarray) -> None:
    ctx.add(name=f"{name}_mean", value=float(series.mean()), passed=None)
    ctx.add(name=f"{name}_q999", value=float(np.quantile(series, 0.999)), passed=None)


def _step_simulate(ctx: _Ctx) -> None:
    rows = int(ctx.param("csv_rows", 100_000))
    if ctx.is_garch():
        path = ctx.garch_path()
        m = min(rows, len(path))
        ctx.write_csv(
            "garch_path.csv",
            ("t", "x1", "x2", "sigma1_sq", "sigma2_sq"),
            zip(range(m), path.x1[:m], path.x2[:m], path.sigma1_sq[:m], path.sigma2_sq[:m]),
        )
        ctx.add(name="n_draws", value=float(len(path)), passed=None)
        _summary_stats(ctx, "sigma1_sq", path.sigma1_sq)
        _summary_stats(ctx, "sigma2_sq", path.sigma2_sq)
    else:
        sample = ctx.path_sample()
        m = min(rows, len(sample))
        ctx.write_csv(
            "path.csv",
            ("t", "w1", "w2"),
            zip(range(m), sample.w1[:m], sample.w2[:m]),
        )
        ctx.add(name="n_draws", value=float(len(sample)), passed=None)
        _summary_stats(ctx, "w1", sample.w1)
        _summary_stats(ctx, "w2", sample.w2)


def _hill_record(ctx: _Ctx, name: str, series, target: Optional[float]) -> None:
    k = int(ctx.param("hill_k", 0))
    est = tailstats.hill(series, k=k)
    if target is None:
        ctx.add(name=name, value=est.alpha_hat, std_error=est.std_error,
                passed=None, note=f"k={est.k}")
        return
    half = ctx.tol("se_mult", 4.0) * est.std_error
    ctx.add(
        name=name,
        value=est.alpha_hat,
        std_error=est.std_error,
        bound_low=target - half,
        bound_high=target + half,
        passed=bool(abs(est.alpha_hat - target) <= half),
        note=f"k={est.k} target={target:.6g}",
    )


def _plateau_record(ctx: _Ctx, name: str, series, alpha: float,
                    reference: Optional[float] = None, rel_tol: Optional[float] = None,
                    csv_name: Optional[str] = None) -> None:
    est = tailstats.tail_constant(series, alpha)
    disp_max = ctx.tol("dispersion_max", 0.15)
    ctx.add(
        name=f"{name}_dispersion",
        value=est.dispersion,
        bound_low=0.0,
        bound_high=disp_max,
        passed=bool(est.dispersion < disp_max),
        note=f"alpha={alpha:.6g}",
    )
    if reference is None:
        ctx.add(name=name, value=est.c_hat, passed=None, note=f"alpha={alpha:.6g}")
    else:
        rel = abs(est.c_hat - reference) / abs(reference)
        ctx.add(
            name=name,
            value=est.c_hat,
            bound_low=reference * (1.0 - rel_tol),
            bound_high=reference * (1.0 + rel_tol),
            passed=bool(rel <= rel_tol),
            note=f"reference={reference:.6g} rel={rel:.4g}",
        )
    if csv_name:
        ctx.write_csv(csv_name, ("x", "plateau"), zip(est.x_grid, est.plateau_values))


def _step_tails(ctx: _Ctx) -> None:
    rep = ctx.regime()
    a1, a2 = rep.alpha1.alpha, rep.alpha2.alpha
    a_min = min(a1, a2)
    if ctx.is_garch():
        path = ctx.garch_path()
        _hill_record(ctx, "hill_sigma1_sq", path.sigma1_sq, a_min)
        _hill_record(ctx, "hill_sigma2_sq", path.sigma2_sq, a2)
        _hill_record(ctx, "hill_abs_x1", np.abs(path.x1), 2.0 * a_min)
        _hill_record(ctx, "hill_abs_x2", np.abs(path.x2), 2.0 * a2)
        _plateau_record(ctx, "plateau_sigma1_sq", path.sigma1_sq, a_min)
        _plateau_record(ctx, "plateau_sigma2_sq", path.sigma2_sq, a2)
    else:
        sample = ctx.path_sample()
        _hill_record(ctx, "hill_w1", sample.w1, a_min)
        _hill_record(ctx, "hill_w2", sample.w2, a2)
        _plateau_record(ctx, "plateau_w1", sample.w1, a_min, csv_name="plateau_w1.csv")
        _plateau_record(ctx, "plateau_w2", sample.w2, a2, csv_name="plateau_w2.csv")


def _step_constants(ctx: _Ctx) -> None:
    rep = ctx.regime()
    a1, a2 = rep.alpha1.alpha, rep.alpha2.alpha
    law = ctx.cfg.law
    sample = ctx.path_sample()
    rel_tol = ctx.tol("c2_rel_tol", 0.2)

    cap = int(ctx.param("constant_draws", min(len(sample), 1_000_000)))
    c2 = renewal.univariate_constant(
        law.marginal("a4"), law.marginal("b2"), a2,
        sample.w2[:cap], substream(ctx.seed, "c2"),
    )
    ctx.add(
        name="c2_renewal",
        value=c2.c_hat,
        std_error=c2.std_error,
        passed=None,
        note=f"m_alpha={c2.m_alpha:.6g} cramer_residual={c2.cramer_residual:.3g}",
    )
    _plateau_record(ctx, "c2_plateau", sample.w2, a2, reference=c2.c_hat, rel_tol=rel_tol)

    rel_tol1 = ctx.tol("c1_rel_tol", 0.25)
    if rep.regime == REGIME_A2_DOMINANT:
        try:
            bounds = renewal.series_weight_bounds(law, a2)
            bounds_note = f"[{bounds.lower:.6g}, {bounds.upper:.6g}] tau={bounds.tau:.6g}"
        except TritailError as e:
            bounds, bounds_note = None, f"bounds unavailable: {e}"
        schedule = [int(s) for s in ctx.param("s_schedule", [1, 2, 4, 8, 16, 32, 64])]
        coupled = renewal.coupled_component_constant(
            law, a2, c2, schedule,
            int(ctx.param("weight_draws", 200_000)),
            substream(ctx.seed, "weight"),
        )
        in_bounds = None
        if bounds is not None:
            w, se = coupled.weight, coupled.weight_std_error
            in_bounds = bool(bounds.lower - 3 * se <= w <= bounds.upper + 3 * se)
        ctx.add(
            name="series_weight",
            value=coupled.weight,
            std_error=coupled.weight_std_error,
            bound_low=bounds.lower if bounds else None,
            bound_high=bounds.upper if bounds else None,
            passed=in_bounds if bounds else None,
            note=f"converged={coupled.converged} {bounds_note}",
        )
        ctx.write_csv(
            "weight_trace.csv",
            ("s", "value", "std_error"),
            ((t.s, t.value, t.std_error) for t in coupled.trace),
        )
        ctx.add(
            name="c1_inherited",
            value=coupled.constant.c_hat,
            std_error=coupled.constant.std_error,
            passed=bool(coupled.converged),
            note="c2 * series weight; gate is weight convergence",
        )
        _plateau_record(ctx, "c1_plateau", sample.w1, a2,
                        reference=coupled.constant.c_hat, rel_tol=rel_tol1)
    elif rep.regime == REGIME_A1_DOMINANT:
        goldie = renewal.first_component_constant(
            law, a1, a2, sample, substream(ctx.seed, "c1")
        )
        ctx.add(
            name="c1_renewal",
            value=goldie.c_hat,
            std_error=goldie.std_error,
            passed=None,
            note=f"m_alpha={goldie.m_alpha:.6g} cramer_residual={goldie.cramer_residual:.3g}",
        )
        ctx.add(
            name="c1_flat_prefactor",
            value=goldie.naive_value,
            passed=None,
            note="literal 2/alpha1 prefactor; informational — plateau adjudicates",
        )
        _plateau_record(ctx, "c1_plateau", sample.w1, a1,
                        reference=goldie.c_hat, rel_tol=rel_tol1)
    else:
        ctx.add(name="c1_skipped", value=None, passed=None,
                note=f"regime {rep.regime}: no first-component constant defined")


def _write_angular_csv(ctx: _Ctx, filename: str, ang: spectral.AngularSample) -> None:
    header = tuple(f"theta{j + 1}" for j in range(ang.dim)) + ("weight",)
    rows = (tuple(p) + (w,) for p, w in zip(ang.points, ang.weights))
    ctx.write_csv(filename, header, rows)


def _step_spectral(ctx: _Ctx) -> None:
    rep = ctx.regime()
    a1, a2 = rep.alpha1.alpha, rep.alpha2.alpha
    law = ctx.cfg.law
    sample = ctx.path_sample()
    u_quantile = float(ctx.param("u_quantile", 0.999))
    ks_bound = ctx.tol("ks_bound", 0.05)
    n_limit = int(ctx.param("limit_draws", 200_000))

    if rep.regime == REGIME_A2_DOMINANT:
        h = int(ctx.param("h", 3))
        ang = spectral.angular_measure_threshold(sample, u_quantile)
        _write_angular_csv(ctx, "angular.csv", ang)
        cond = spectral.conditional_exceedance_windows(sample, h, u_quantile)
        limit = spectral.spectral_process_draws(
            law, a2, h, n_limit, ang, substream(ctx.seed, "limit"), alpha1=a1
        )
        stat, pvalue = spectral.pareto_gof(limit.y0, a2)
        ctx.add(
            name="pareto_norm_pvalue",
            value=pvalue,
            bound_low=ctx.tol("pareto_level", 0.01),
            bound_high=None,
            passed=bool(pvalue >= ctx.tol("pareto_level", 0.01)),
            note=f"ks_stat={stat:.4g}",
        )
        for fname, stat in spectral.forward_limit_ks(cond, limit).items():
            ctx.add(
                name=f"ks_{fname}",
                value=stat,
                bound_low=0.0,
                bound_high=ks_bound,
                passed=bool(stat <= ks_bound),
                note=f"exceedances={cond.n_exceedances}",
            )
        m = min(len(limit), 10_000)
        paths = limit.limit_paths()
        ctx.write_csv(
            "spectral_draws.csv",
            ("draw_id", "t", "y1", "y2"),
            (
                (k, t + 1, paths[k, t, 0], paths[k, t, 1])
                for k in range(m)
                for t in range(h)
            ),
        )
    elif rep.regime == REGIME_A1_DOMINANT:
        h = int(ctx.param("h", 2))
        for component, alpha_i in ((1, a1), (2, a2)):
            weighted = spectral.componentwise_spectral(
                law, alpha_i, h, n_limit,
                substream(ctx.seed, f"xi_{component}"), component=component,
            )
            thresholded = spectral.window_angles(sample, component, h, u_quantile)
            stat = spectral.angular_ks(weighted, thresholded)
            ctx.add(
                name=f"ks_angular_w{component}",
                value=stat,
                bound_low=0.0,
                bound_high=ks_bound,
                passed=bool(stat <= ks_bound),
                note=f"h={h} exceedances={thresholded.n_exceedances}",
            )
            if component == 1:
                _write_angular_csv(ctx, "angular.csv", weighted)
    else:
        ctx.add(name="spectral_skipped", value=None, passed=None,
                note=f"regime {rep.regime}: no spectral construction defined")


def _garch_check_records(ctx: _Ctx, prefix: str, records) -> None:
    for r in records:
        ctx.add(
            name=f"{prefix}{r.name}",
            value=r.value,
            std_error=r.std_error,
            bound_low=r.low,
            bound_high=r.high,
            passed=r.passed,
            note=r.note,
        )


def _step_garch_verify(ctx: _Ctx) -> None:
    path = ctx.garch_path()
    params = ctx.cfg.law.params
    verify = verify_tail_relations(
        params,
        len(path),
        substream(ctx.seed, "verify"),
        se_mult=ctx.tol("se_mult", 4.0),
        rel_tol=ctx.tol("c2_rel_tol", 0.25),
        k=int(ctx.param("hill_k", 0)),
        k_x=int(ctx.param("hill_k_x", 0)),
        path=path,
    )
    # Prefixed so a full report keeps unique record names next to the
    # solve-index and tails steps (diff matches records by name).
    ctx.add(name="verify_alpha1", value=verify.alpha1, passed=None, note="quadrature root")
    ctx.add(name="verify_alpha2", value=verify.alpha2, passed=None, note="quadrature root")
    ctx.add(name="verify_regime", value=None, passed=None, note=verify.regime)
    _garch_check_records(ctx, "verify_", verify.records)

    spect = return_spectral_check(
        params,
        int(ctx.param("h", 2)),
        len(path),
        substream(ctx.seed, "garch_spectral"),
        u_quantile=float(ctx.param("u_quantile", 0.999)),
        n_limit=int(ctx.param("limit_draws", 200_000)),
        ks_bound=ctx.tol("ks_bound", 0.05),
        path=path,
    )
    ctx.add(name="spectral_branch", value=None, passed=None, note=spect.branch)
    _garch_check_records(ctx, "spectral_", spect.records)


def _step_cross_validate(ctx: _Ctx) -> None:
    """Forward vs backward marginals (independent laws only).

    The forward side is drawn fresh with heavy thinning so consecutive kept
    states are nearly independent — the KS p-value assumes i.i.d. samples, and
    raw chain output would fail that assumption, not the distributional claim.
    """
    if ctx.is_garch():
        return
    n = int(ctx.param("crossval_draws", 100_000))
    thinning = max(ctx.cfg.sim.thinning, int(ctx.param("crossval_thinning", 20)))
    fwd = _stationary_chunked(
        ctx.cfg.law,
        replace(ctx.cfg.sim, n_draws=n, thinning=thinning),
        ctx.workers,
        purpose="crossval",
    )
    back = _backward_chunked(ctx.cfg.law, replace(ctx.cfg.sim, n_draws=n), ctx.workers)
    level = ctx.tol("ks_level", 0.01)
    for name, f, b in (("w1", fwd.w1, back.w1), ("w2", fwd.w2, back.w2)):
        stat, pvalue = tailstats.ks_2sample(f, b)
        ctx.add(
            name=f"crossval_{name}_pvalue",
            value=pvalue,
            bound_low=level,
            bound_high=None,
            passed=bool(pvalue >= level),
            note=f"ks_stat={stat:.4g} n={n}",
        )


_PIPELINE_STEPS = {
    "solve_index": (("solve_index", _step_solve_index),),
    "stationarity": (("stationarity", _step_stationarity),),
    "simulate": (("simulate", _step_simulate),),
    "tails": (("tails", _step_tails),),
    "constants": (("constants", _step_constants),),
    "spectral": (("spectral", _step_spectral),),
    "garch_verify": (("garch_verify", _step_garch_verify),),
}
_PIPELINE_STEPS["full_report"] = (
    ("solve_index", _step_solve_index),
    ("stationarity", _step_stationarity),
    ("simulate", _step_simulate),
    ("tails", _step_tails),
    ("constants", _step_constants),
    ("cross_validate", _step_cross_validate),
    ("spectral", _step_spectral),
)


def _full_report_steps(cfg: ExperimentConfig):
    if isinstance(cfg.law, GarchLaw):
        return (
            ("solve_index", _step_solve_index),
            ("stationarity", _step_stationarity),
            ("simulate", _step_simulate),
            ("tails", _step_tails),
            ("garch_verify", _step_garch_verify),
        )
    return _PIPELINE_STEPS["full_report"]


def run(config: ExperimentConfig, workers: Optional[int] = None) -> RunReport:
    """Execute one pipeline and write its artifacts and report.

    Every step's failure is captured as a ``passed=False`` record named
    ``<step>_error``; sibling steps still run.  The report is saved as
    ``report.json`` in the output directory and returned.
    """
    t0 = time.perf_counter()
    workers = workers if workers is not None else config.workers
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    ctx = _Ctx(
        cfg=config, workers=workers, outdir=outdir,
        records=[], artifacts=[], cache={},
    )
    steps = (
        _full_report_steps(config)
        if config.pipeline == "full_report"
        else _PIPELINE_STEPS[config.pipeline]
    )
    for step_name, step_fn in steps:
        try:
            step_fn(ctx)
        except (TritailError, ArithmeticError, ValueError, FloatingPointError) as e:
            ctx.records.append(
                ResultRecord(
                    name=f"{step_name}_error",
                    value=None,
                    passed=False,
                    note=f"{type(e).__name__}: {e}",
                )
            )
    report = RunReport(
        name=config.name,
        pipeline=config.pipeline,
        config_digest=config.digest,
        results=tuple(ctx.records),
        artifacts=tuple(ctx.artifacts),
        wall_time=time.perf_counter() - t0,
    )
    report.save(outdir / "report.json")
    return report


# ============================================================================
# Report comparison
# ============================================================================

@dataclass(frozen=True)
class DiffEntry:
    """One differing field between two reports."""

    record: str
    field: str
    a: Optional[float]
    b: Optional[float]
    status: str  # "within_tol" or "differs"

    def __str__(self) -> str:
        return f"{self.record}.{self.field}: {self.a!r} vs {self.b!r} [{self.status}]"


def _num_close(a: Optional[float], b: Optional[float], rel_tol: float) -> str:
    if a is None or b is None:
        return "identical" if a is b else "differs"
    if a == b:
        return "identical"
    scale = max(abs(a), abs(b))
    if abs(a - b) <= rel_tol * max(scale, 1.0):
        return "within_tol"
    return "differs"


def compare_reports(a: RunReport, b: RunReport, rel_tol: float = 1e-9) -> list:
    """Field-by-field numeric diff of two same-pipeline reports.

    Returns only the entries that are not exactly identical; each is tagged
    ``within_tol`` or ``differs`` against the relative tolerance.  Records
    missing on one side always count as differing.
    """
    if a.pipeline != b.pipeline:
        raise PipelineMismatch(f"cannot diff {a.pipeline!r} against {b.pipeline!r}")
    diffs: list = []
    a_map = {r.name: r for r in a.results}
    b_map = {r.name: r for r in b.results}
    for name in sorted(set(a_map) | set(b_map)):
        ra, rb = a_map.get(name), b_map.get(name)
        if ra is None or rb is None:
            diffs.append(DiffEntry(record=name, field="(record)",
                                   a=None if ra is None else 1.0,
                                   b=None if rb is None else 1.0,
                                   status="differs"))
            continue
        for field in ("value", "std_error", "bound_low", "bound_high"):
            status = _num_close(getattr(ra, field), getattr(rb, field), rel_tol)
            if status != "identical":
                diffs.append(DiffEntry(record=name, field=field,
                                       a=getattr(ra, field), b=getattr(rb, field),
                                       status=status))
        if ra.passed is not rb.passed:
            diffs.append(DiffEntry(record=name, field="pass",
                                   a=None if ra.passed is None else float(ra.passed),
                                   b=None if rb.passed is None else float(rb.passed),
                                   status="differs"))
    return diffs
