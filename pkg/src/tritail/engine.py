"""Simulators for the bivariate triangular recursion W_t = A_t W_{t-1} + B_t.

Componentwise the recursion reads

    W1_t = A1_t * W1_{t-1} + A2_t * W2_{t-1} + B1_t
    W2_t = A4_t * W2_{t-1} + B2_t

so the second coordinate runs autonomously and feeds the first through the
coupling entry A2.  This module provides two independent routes to the
stationary law (forward iteration past a burn-in, and the truncated backward
series), running coefficient products with overflow-safe renormalization, and a
top-Lyapunov-exponent estimator with its analytic upper bound.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NonFiniteState, NotContracting
from .laws import CoefficientLaw, check_stationarity

__all__ = [
    "SimConfig",
    "PathSample",
    "ProductChain",
    "LyapunovEstimate",
    "iterate_forward",
    "stationary_sample",
    "backward_truncated",
    "product_chain",
    "product_chain_batch",
    "lyapunov_estimate",
    "triangular_opnorm",
]

_RENORM_EVERY = 64       # a^n underflows doubles near n ~ 1500 for a = 0.5
_FINITE_CHECK_EVERY = 64
_TAIL_MASS_TARGET = 1e-8  # (E A^eps)^depth below this picks the auto truncation depth


@dataclass(frozen=True)
class SimConfig:
    """Simulation plan: sizes, thinning, truncation, and the base seed.

    ``truncation_depth=0`` means "derive it from the stationarity witness" in
    :func:`backward_truncated`; ``burn_in`` is always literal here (pipeline
    configs may resolve their own defaults before building one of these).
    """

    burn_in: int
    n_draws: int
    thinning: int = 1
    truncation_depth: int = 0
    base_seed: int = 0

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.n_draws < 1:
            raise ValueError("n_draws must be >= 1")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.truncation_depth < 0:
            raise ValueError("truncation_depth must be >= 0")


@dataclass(eq=False)
class PathSample:
    """Simulated states of (W1, W2).

    ``chain_len`` is the nominal per-chain length of a batch sample (the last
    chain may be shorter when the requested size does not fill it); consumers
    that slide windows over the sample must not cross chain boundaries.  A
    single forward path has ``chain_len == len(sample)``; backward draws are
    independent, ``chain_len == 1``.
    """

    w1: np.ndarray
    w2: np.ndarray
    mode: str
    config: SimConfig
    chain_len: int

    def __post_init__(self):
        if self.w1.shape != self.w2.shape:
            raise ValueError("w1 and w2 must have identical shapes")
        if self.chain_len < 1:
            raise ValueError("chain_len must be >= 1")

    def __len__(self) -> int:
        return self.w1.size

    @property
    def n_chains(self) -> int:
        return -(-self.w1.size // self.chain_len)


@dataclass(eq=False)
class ProductChain:
    """Running coefficient-matrix products Pi_t = A_t ... A_1, t = 0..h.

    Index 0 is the empty product (identity).  ``pi1`` and ``pi4`` are the
    diagonal scalar products; ``pi_mat[t]`` is the full upper-triangular matrix.
    """

    pi1: np.ndarray
    pi4: np.ndarray
    pi_mat: np.ndarray


def _check_state_finite(w1: np.ndarray, w2: np.ndarray, t: int) -> None:
    if not (np.isfinite(w1).all() and np.isfinite(w2).all()):
        raise NonFiniteState(
            f"state overflowed by step {t}; configuration is not stationary"
        )


# ============================================================================
# Forward simulation
# ============================================================================

def iterate_forward(
    law: CoefficientLaw,
    w0: tuple[float, float],
    config: SimConfig,
    rng: np.random.Generator,
) -> PathSample:
    """Run one chain of the exact recursion and keep thinned post-burn-in states.

    Keeps ``config.n_draws`` states, one every ``config.thinning`` steps after
    discarding ``config.burn_in`` steps.  Raises :class:`NonFiniteState` as
    soon as the state overflows (the tell-tale of a non-contracting law).
    """
    if not (w0[0] >= 0 and w0[1] >= 0):
        raise ValueError("w0 must be componentwise nonnegative")

    total = config.burn_in + config.n_draws * config.thinning
    out1 = np.empty(config.n_draws)
    out2 = np.empty(config.n_draws)
    w1, w2 = float(w0[0]), float(w0[1])
    kept = 0
    step = 0
    chunk = 8192
    while step < total:
        width = min(chunk, total - step)
        d = law.sample(rng, width)
        # Python-scalar inner loop: lists beat per-element ndarray indexing.
        a1l, a2l, a4l = d.a1.tolist(), d.a2.tolist(), d.a4.tolist()
        b1l, b2l = d.b1.tolist(), d.b2.tolist()
        for i in range(width):
            w1 = a1l[i] * w1 + a2l[i] * w2 + b1l[i]
            w2 = a4l[i] * w2 + b2l[i]
            step += 1
            if step > config.burn_in and (step - config.burn_in) % config.thinning == 0:
                out1[kept] = w1
                out2[kept] = w2
                kept += 1
        if not (math.isfinite(w1) and math.isfinite(w2)):
            raise NonFiniteState(
                f"state overflowed by step {step}; configuration is not stationary"
            )
    return PathSample(
        w1=out1, w2=out2, mode="forward_burnin", config=config, chain_len=config.n_draws
    )


def stationary_sample(
    law: CoefficientLaw,
    config: SimConfig,
    rng: np.random.Generator,
    n_chains: int = 0,
) -> PathSample:
    """Draw a large batch of approximately stationary states via parallel chains.

    Runs ``n_chains`` independent chains (auto: about one chain per thousand
    draws), each burnt in for ``config.burn_in`` steps, then keeps one state
    every ``config.thinning`` steps per chain until ``config.n_draws`` states
    exist in total.  The result is chain-major: draws ``[c*chain_len, (c+1)*chain_len)``
    are consecutive states of chain ``c``, so windowed estimators can respect
    boundaries via ``PathSample.chain_len``.
    """
    n = config.n_draws
    if n_chains < 0:
        raise ValueError("n_chains must be >= 0")
    if n_chains == 0:
        n_chains = min(-(-n // 1000), 65536)
    n_chains = min(n_chains, n)
    per_chain = -(-n // n_chains)

    total_steps = config.burn_in + per_chain * config.thinning
    out1 = np.empty((n_chains, per_chain))
    out2 = np.empty((n_chains, per_chain))
    w1 = np.zeros(n_chains)
    w2 = np.zeros(n_chains)
    kept = 0
    for t in range(1, total_steps + 1):
        d = law.sample(rng, n_chains)
        w1 = d.a1 * w1 + d.a2 * w2 + d.b1
        w2 = d.a4 * w2 + d.b2
        if t % _FINITE_CHECK_EVERY == 0:
            _check_state_finite(w1, w2, t)
        if t > config.burn_in and (t - config.burn_in) % config.thinning == 0:
            out1[:, kept] = w1
            out2[:, kept] = w2
            kept += 1
    _check_state_finite(out1, out2, total_steps)
    return PathSample(
        w1=out1.reshape(-1)[:n].copy(),
        w2=out2.reshape(-1)[:n].copy(),
        mode="forward_burnin",
        config=config,
        chain_len=per_chain,
    )


# ============================================================================
# Backward (truncated series) simulation
# ============================================================================

def default_truncation_depth(law: CoefficientLaw) -> int:
    """Depth making the neglected tail's eps-moment below 1e-8 at the witness."""
    report = check_stationarity(law)
    if not report.holds:
        raise NotContracting(
            "no stationarity witness on the default grid; cannot pick a depth"
        )
    return max(1, math.ceil(math.log(_TAIL_MASS_TARGET) / math.log(report.rho)))


def backward_truncated(
    law: CoefficientLaw,
    config: SimConfig,
    rng: np.random.Generator,
) -> PathSample:
    """Draw independent stationary states from the truncated backward series.

    The stationary vector is the series  B_0 + A_0 B_{-1} + A_0 A_{-1} B_{-2} + ...
    truncated at ``config.truncation_depth`` terms (0 = derive the depth from
    the stationarity witness).  Accumulation runs deepest-term-first (Horner
    form), so the smallest contributions are summed before the large ones and
    no term is lost to floating-point absorption.

    All ``config.n_draws`` draws are mutually independent (``chain_len == 1``).
    """
    depth = config.truncation_depth or default_truncation_depth(law)
    n = config.n_draws
    acc1 = np.zeros(n)
    acc2 = np.zeros(n)
    # Horner: acc <- A_j acc + B_j walking j from the deepest level to 0.  The
    # deepest level multiplies A into zero, which is the truncation itself.
    for _ in range(depth):
        d = law.sample(rng, n)
        acc1 = d.a1 * acc1 + d.a2 * acc2 + d.b1
        acc2 = d.a4 * acc2 + d.b2
    _check_state_finite(acc1, acc2, depth)
    return PathSample(
        w1=acc1, w2=acc2, mode="backward_truncated", config=config, chain_len=1
    )


# ============================================================================
# Coefficient products
# ============================================================================

def product_chain(law: CoefficientLaw, h: int, rng: np.random.Generator) -> ProductChain:
    """Running products of h fresh coefficient matrices (index 0 = identity)."""
    if h < 1:
        raise ValueError("h must be >= 1")
    p1, u, p4 = product_chain_batch(law, h, 1, rng)
    p1, u, p4 = p1[0], u[0], p4[0]
    mats = np.zeros((h + 1, 2, 2))
    mats[:, 0, 0] = p1
    mats[:, 0, 1] = u
    mats[:, 1, 1] = p4
    return ProductChain(pi1=p1, pi4=p4, pi_mat=mats)


def product_chain_batch(
    law: CoefficientLaw, h: int, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """n independent product chains of length h, as (pi1, upper, pi4) arrays.

    Each array has shape (n, h+1) with column t holding the entry of
    Pi_t = A_t ... A_1 (column 0 is the identity).  The top-right entry obeys
    u_t = a1_t * u_{t-1} + a2_t * pi4_{t-1}.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    p1 = np.empty((n, h + 1))
    u = np.empty((n, h + 1))
    p4 = np.empty((n, h + 1))
    p1[:, 0] = 1.0
    u[:, 0] = 0.0
    p4[:, 0] = 1.0
    for t in range(1, h + 1):
        d = law.sample(rng, n)
        p1[:, t] = d.a1 * p1[:, t - 1]
        u[:, t] = d.a1 * u[:, t - 1] + d.a2 * p4[:, t - 1]
        p4[:, t] = d.a4 * p4[:, t - 1]
    return p1, u, p4


def triangular_opnorm(p: np.ndarray, u: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Operator 2-norm of [[p, u], [0, q]], elementwise over arrays.

    Uses the stable factorization of the discriminant,
    (p^2+u^2+q^2)^2 - 4 p^2 q^2 = ((p-q)^2 + u^2) ((p+q)^2 + u^2),
    which avoids cancellation when u is small and p is close to q.
    """
    p = np.asarray(p, dtype=float)
    u = np.asarray(u, dtype=float)
    q = np.asarray(q, dtype=float)
    s = p * p + u * u + q * q
    disc = ((p - q) ** 2 + u * u) * ((p + q) ** 2 + u * u)
    return np.sqrt(0.5 * (s + np.sqrt(disc)))


# ============================================================================
# Lyapunov exponent
# ============================================================================

@dataclass(frozen=True)
class LyapunovEstimate:
    """Chain-averaged n^-1 log ||Pi_n|| plus the small-moment upper bound."""

    gamma_hat: float
    std_error: float
    upper_bound: float
    n_steps: int
    n_chains: int


def lyapunov_estimate(
    law: CoefficientLaw,
    n: int,
    n_chains: int,
    rng: np.random.Generator,
    eps_grid=None,
) -> LyapunovEstimate:
    """Estimate the top Lyapunov exponent of the coefficient products.

    Each chain accumulates ``log ||Pi_n||`` with the product renormalized every
    64 steps (the running log-scale is carried separately, so neither entry
    ever under- or overflows).  ``upper_bound`` is ``log(rho)/eps`` from the
    stationarity witness, or +inf when no grid point qualifies; for any witness
    eps in (0, 1] the bound dominates the true exponent.
    """
    if n < 100:
        raise ValueError("n must be >= 100")
    if n_chains < 1:
        raise ValueError("n_chains must be >= 1")

    p1 = np.ones(n_chains)
    u = np.zeros(n_chains)
    p4 = np.ones(n_chains)
    log_scale = np.zeros(n_chains)
    for t in range(1, n + 1):
        d = law.sample(rng, n_chains)
        u = d.a1 * u + d.a2 * p4
        p1 = d.a1 * p1
        p4 = d.a4 * p4
        if t % _RENORM_EVERY == 0 or t == n:
            scale = triangular_opnorm(p1, u, p4)
            if not np.isfinite(scale).all() or (scale <= 0.0).any():
                raise NonFiniteState(f"matrix product degenerated by step {t}")
            log_scale += np.log(scale)
            p1 /= scale
            u /= scale
            p4 /= scale
    # After the final renormalization the matrix has unit norm: log||Pi_n|| is
    # exactly the accumulated log-scale.
    per_chain = log_scale / n
    gamma_hat = float(per_chain.mean())
    se = float(per_chain.std(ddof=1) / math.sqrt(n_chains)) if n_chains > 1 else 0.0

    report = check_stationarity(law, eps_grid)
    if report.holds:
        bound = math.log(report.rho) / report.witness_eps
    else:
        bound = math.inf
    return LyapunovEstimate(
        gamma_hat=gamma_hat,
        std_error=se,
        upper_bound=bound,
        n_steps=n,
        n_chains=n_chains,
    )
