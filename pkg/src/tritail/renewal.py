"""Monte Carlo tail constants via the implicit renewal method.

For a contracting scalar recursion X = A X' + B with Cramer root alpha
(E A^alpha = 1) the tail satisfies P(X > x) ~ c x^-alpha with

    c = E[(A X + B)^alpha - (A X)^alpha] / (alpha * E A^alpha log A),

an expectation over an independent pairing of a stationary X with a fresh
coefficient draw.  This module computes that constant for the autonomous second
coordinate, for the first coordinate when its own multiplier dominates
(alpha1 < alpha2, with the additive term assembled as B1 + A2 W2), and — in the
opposite regime alpha1 > alpha2 — the inherited constant c2 * w, where w is the
limit of the truncated coupling-series moments

    w_s = E( sum_{i=1..s} [A1 at strip slots 1..i-1] * A2_i * [A4 at slots i+1..s] )^alpha2

together with the analytic bracket for w derived from tau = E A1^alpha2 < 1.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import PathSample
from .errors import NonPositiveM, RegimeMismatch, TauNotContracting
from .laws import (
    CoefficientLaw,
    PositiveDistribution,
    log_weighted_moment,
    moment,
)

__all__ = [
    "RenewalConstant",
    "SeriesWeightEstimate",
    "SeriesWeightBounds",
    "CoupledConstantResult",
    "univariate_constant",
    "first_component_constant",
    "series_weight",
    "series_weight_bounds",
    "coupled_component_constant",
]


@dataclass(frozen=True)
class RenewalConstant:
    """A Monte Carlo renewal-form tail constant.

    ``m_alpha`` is the normalizer E A^alpha log A (must be positive at the
    Cramer root); ``cramer_residual`` is the sample estimate of E A^alpha - 1
    under the fed draws (should be ~0 when alpha is right); ``naive_value``,
    when set, is the alternative constant that replaces 1/m_alpha with the flat
    prefactor 2/alpha (kept for side-by-side comparison against the simulated
    plateau — the two differ unless 2/alpha happens to equal 1/(alpha*m_alpha));
    ``tail_moment_ok`` is a finiteness heuristic for E A^alpha log+ A (running
    means across doubling subsamples stay Cauchy), not a proof.
    """

    c_hat: float
    std_error: float
    m_alpha: float
    alpha: float
    n_samples: int
    cramer_residual: float = 0.0
    naive_value: Optional[float] = None
    tail_moment_ok: bool = True


@dataclass(frozen=True)
class SeriesWeightEstimate:
    """MC estimate of one truncated coupling-series moment w_s."""

    s: int
    value: float
    std_error: float
    n_samples: int


@dataclass(frozen=True)
class SeriesWeightBounds:
    """Analytic bracket for the limiting series weight w = lim_s w_s.

    With tau = E A1^alpha2 < 1 and ea2 = E A2^alpha2:
    alpha2 > 1 branch:  ea2 <= w <= (1 - tau^(1/alpha2))^-alpha2 * ea2;
    alpha2 <= 1 branch: (1 - tau^(1/alpha2))^-alpha2 * ea2 <= w <= (1-tau)^-1 * ea2.
    The two branches coincide at alpha2 = 1.
    """

    lower: float
    upper: float
    tau: float
    alpha2: float
    branch: str
    ea2: float

    def finite_s_upper(self, s: int) -> float:
        """Upper bound valid for w_s at finite s (alpha2 > 1 branch argument)."""
        if s < 1:
            raise ValueError("s must be >= 1")
        r = self.tau ** (1.0 / self.alpha2)
        return self.ea2 * ((1.0 - r**s) / (1.0 - r)) ** self.alpha2


def _tail_moment_heuristic(values: np.ndarray) -> bool:
    """Cauchy check of running means across doubling prefixes (finiteness flag)."""
    n = values.size
    if n < 64:
        return True
    half = values[: n // 2]
    m_half, m_full = float(half.mean()), float(values.mean())
    spread = float(values.std(ddof=1)) / math.sqrt(n // 2)
    return abs(m_full - m_half) <= 6.0 * spread + 1e-12


def _ratio_constant(
    numerator: np.ndarray,
    alpha: float,
    a_draws: np.ndarray,
    a_dist: PositiveDistribution,
    m_alpha_method: str,
) -> tuple[float, float, float, bool]:
    """Shared core: c = mean(numerator) / (alpha * m_alpha) with its SE.

    Returns (c_hat, std_error, m_alpha, tail_moment_ok).  With the
    deterministic m_alpha path the SE comes from the numerator alone; on the
    Monte Carlo path m_alpha is estimated from the same coefficient draws and
    the delta method propagates both variances and their covariance.
    """
    n = numerator.size
    num_mean = float(numerator.mean())
    num_var = float(numerator.var(ddof=1))

    log_a = np.log(a_draws)
    powers = a_draws**alpha
    tail_ok = _tail_moment_heuristic(powers * np.maximum(log_a, 0.0))

    if m_alpha_method == "auto":
        m_alpha = log_weighted_moment(a_dist, alpha)
        if m_alpha <= 0.0:
            raise NonPositiveM(f"E A^alpha log A = {m_alpha:.6g} <= 0: alpha is wrong")
        c_hat = num_mean / (alpha * m_alpha)
        se = math.sqrt(num_var / n) / (alpha * m_alpha)
        return c_hat, se, m_alpha, tail_ok

    if m_alpha_method != "monte_carlo":
        raise ValueError(f"unknown m_alpha_method {m_alpha_method!r}")
    m_draws = powers * log_a
    m_alpha = float(m_draws.mean())
    se_m = float(m_draws.std(ddof=1)) / math.sqrt(n)
    if m_alpha <= 3.0 * se_m:
        raise NonPositiveM(
            f"E A^alpha log A = {m_alpha:.6g} (SE {se_m:.2g}) is not positive "
            "beyond 3 SE: alpha is wrong"
        )
    c_hat = num_mean / (alpha * m_alpha)
    # Delta method on the ratio N / (alpha M), using Cov(N, M) from the pairing.
    cov = float(np.cov(numerator, m_draws, ddof=1)[0, 1])
    var_m = float(m_draws.var(ddof=1))
    grad_sq = (
        num_var / (alpha * m_alpha) ** 2
        - 2.0 * num_mean * cov / (alpha**2 * m_alpha**3)
        + num_mean**2 * var_m / (alpha**2 * m_alpha**4)
    )
    se = math.sqrt(max(grad_sq, 0.0) / n)
    return c_hat, se, m_alpha, tail_ok


def univariate_constant(
    a_dist: PositiveDistribution,
    b_dist: PositiveDistribution,
    alpha: float,
    stationary_w,
    rng: np.random.Generator,
    m_alpha_method: str = "auto",
) -> RenewalConstant:
    """Renewal constant for the scalar recursion X = A X' + B at the root alpha.

    ``stationary_w`` must be (approximately) stationary draws independent of
    the fresh (A, B) pairs sampled here, one pair per draw.

    Raises :class:`NonPositiveM` when the normalizer E A^alpha log A is not
    positive (the unmistakable sign that alpha does not solve E A^alpha = 1).
    """
    w = np.asarray(stationary_w, dtype=float).reshape(-1)
    if w.size < 2:
        raise ValueError("need at least 2 stationary draws")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    a = np.asarray(a_dist.sample(rng, w.size), dtype=float)
    b = np.asarray(b_dist.sample(rng, w.size), dtype=float)
    aw = a * w
    numerator = (aw + b) ** alpha - aw**alpha
    c_hat, se, m_alpha, tail_ok = _ratio_constant(
        numerator, alpha, a, a_dist, m_alpha_method
    )
    return RenewalConstant(
        c_hat=c_hat,
        std_error=se,
        m_alpha=m_alpha,
        alpha=alpha,
        n_samples=w.size,
        cramer_residual=float((a**alpha).mean() - 1.0),
        tail_moment_ok=tail_ok,
    )


def first_component_constant(
    law: CoefficientLaw,
    alpha1: float,
    alpha2: float,
    draws: PathSample,
    rng: np.random.Generator,
    m_alpha_method: str = "auto",
) -> RenewalConstant:
    """Tail constant of the first coordinate when its own multiplier dominates.

    Valid in the regime alpha1 < alpha2 only.  The first coordinate follows
    W1 = A1 W1' + D with D = B1 + A2 W2', so the renewal constant uses fresh
    joint tuples (A1, A2, B1) paired with stationary (W1', W2') pairs; the
    tuple is drawn jointly so coupled laws keep their dependence.

    The returned constant carries the renewal-form value in ``c_hat`` and the
    flat-prefactor alternative (2/alpha1 times the same expectation) in
    ``naive_value``; the simulated tail plateau adjudicates between them.
    """
    if not alpha1 < alpha2:
        raise RegimeMismatch(
            f"first-component constant needs alpha1 < alpha2, got {alpha1:.4g} >= {alpha2:.4g}"
        )
    w1 = np.asarray(draws.w1, dtype=float).reshape(-1)
    w2 = np.asarray(draws.w2, dtype=float).reshape(-1)
    d = law.sample(rng, w1.size)
    dd = d.b1 + d.a2 * w2
    aw = d.a1 * w1
    numerator = (aw + dd) ** alpha1 - aw**alpha1
    c_hat, se, m_alpha, tail_ok = _ratio_constant(
        numerator, alpha1, d.a1, law.marginal("a1"), m_alpha_method
    )
    num_mean = float(numerator.mean())
    return RenewalConstant(
        c_hat=c_hat,
        std_error=se,
        m_alpha=m_alpha,
        alpha=alpha1,
        n_samples=w1.size,
        cramer_residual=float((d.a1**alpha1).mean() - 1.0),
        naive_value=(2.0 / alpha1) * num_mean,
        tail_moment_ok=tail_ok,
    )


_STRIP_CHUNK = 50_000


def series_weight(
    law: CoefficientLaw,
    alpha2: float,
    s: int,
    n: int,
    rng: np.random.Generator,
) -> SeriesWeightEstimate:
    """MC estimate of the s-term coupling-series moment w_s.

    Each of the n strips draws s fresh joint coefficient tuples; term i of the
    inner sum multiplies the A1 draws at strip slots 1..i-1, the A2 draw at
    slot i, and the A4 draws at slots i+1..s, exactly the layout of the
    truncated transfer series.  Fresh strips per call keep the estimates
    unbiased and their variances independent across s.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    if n < 2:
        raise ValueError("n must be >= 2")
    if alpha2 <= 0:
        raise ValueError("alpha2 must be positive")
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n:
        m = min(_STRIP_CHUNK, n - done)
        d = law.sample(rng, (m, s))
        prefix1 = np.ones((m, s))
        if s > 1:
            np.cumprod(d.a1[:, :-1], axis=1, out=prefix1[:, 1:])
        suffix4 = np.ones((m, s))
        if s > 1:
            suffix4[:, :-1] = np.cumprod(d.a4[:, :0:-1], axis=1)[:, ::-1]
        vals = (prefix1 * d.a2 * suffix4).sum(axis=1) ** alpha2
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += m
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / (n - 1)
    return SeriesWeightEstimate(
        s=s, value=mean, std_error=math.sqrt(var / n), n_samples=n
    )


def series_weight_bounds(law: CoefficientLaw, alpha2: float) -> SeriesWeightBounds:
    """Analytic bracket for the limiting series weight (see class docstring).

    Requires tau = E A1^alpha2 < 1 (raises :class:`TauNotContracting`) and a
    finite E A2^alpha2 (a divergent cross moment propagates).
    """
    if alpha2 <= 0:
        raise ValueError("alpha2 must be positive")
    tau = moment(law.marginal("a1"), alpha2).value
    if not tau < 1.0:
        raise TauNotContracting(f"E A1^alpha2 = {tau:.6g} >= 1")
    ea2 = moment(law.marginal("a2"), alpha2).value
    pinch = (1.0 - tau ** (1.0 / alpha2)) ** (-alpha2)
    if alpha2 > 1.0:
        lower, upper, branch = ea2, pinch * ea2, "alpha2_gt_1"
    else:
        lower, upper, branch = pinch * ea2, ea2 / (1.0 - tau), "alpha2_le_1"
    return SeriesWeightBounds(
        lower=lower, upper=upper, tau=tau, alpha2=alpha2, branch=branch, ea2=ea2
    )


@dataclass(frozen=True)
class CoupledConstantResult:
    """Inherited first-coordinate constant c2 * w with its convergence trace."""

    constant: RenewalConstant
    trace: tuple[SeriesWeightEstimate, ...]
    converged: bool
    weight: float
    weight_std_error: float


def coupled_component_constant(
    law: CoefficientLaw,
    alpha2: float,
    c2: RenewalConstant,
    s_schedule: Sequence[int],
    n: int,
    rng: np.random.Generator,
    rel_tol: float = 0.05,
    alpha1: Optional[float] = None,
) -> CoupledConstantResult:
    """Tail constant of the first coordinate in the regime alpha1 > alpha2.

    Evaluates the series weights along ``s_schedule`` (at least 3 increasing
    entries, typically doubling) and declares convergence when the last two
    stabilize within ``rel_tol`` relative plus a 3-SE Monte Carlo allowance.
    The constant is c2.c_hat times the last weight; never a hard error on a
    non-converged schedule — the flag is the answer.
    """
    schedule = [int(s) for s in s_schedule]
    if len(schedule) < 3 or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("s_schedule needs >= 3 strictly increasing entries")
    if alpha1 is not None and not alpha1 > alpha2:
        raise RegimeMismatch(
            f"inherited constant needs alpha1 > alpha2, got {alpha1:.4g} <= {alpha2:.4g}"
        )
    trace = tuple(series_weight(law, alpha2, s, n, rng) for s in schedule)
    last, prev = trace[-1], trace[-2]
    allowance = 3.0 * (last.std_error + prev.std_error)
    converged = abs(last.value - prev.value) < rel_tol * abs(last.value) + allowance
    c_hat = c2.c_hat * last.value
    se = math.sqrt(
        (last.value * c2.std_error) ** 2 + (c2.c_hat * last.std_error) ** 2
    )
    constant = RenewalConstant(
        c_hat=c_hat,
        std_error=se,
        m_alpha=c2.m_alpha,
        alpha=alpha2,
        n_samples=n,
        cramer_residual=c2.cramer_residual,
        tail_moment_ok=c2.tail_moment_ok,
    )
    return CoupledConstantResult(
        constant=constant,
        trace=trace,
        converged=converged,
        weight=last.value,
        weight_std_error=last.std_error,
    )
