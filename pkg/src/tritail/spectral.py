"""Angular measures and forward spectral processes of the stationary solution.

Two estimators of the same angular object are kept deliberately separate so
they can cross-validate each other:

* the threshold estimator — normalized exceedances ``W/|W|`` above a high
  norm quantile of a simulated stationary sample, and
* the weighted product-chain estimator — in the regime where each coordinate's
  own multiplier dominates (alpha1 < alpha2), the angular law of the window
  ``(W_{i,1..h})`` equals the law of the normalized running scalar products
  ``Xi_h = (Pi_1, ..., Pi_h)`` reweighted by ``|Xi_h|^alpha_i``.

In the opposite regime (alpha1 > alpha2) the module builds draws from the
forward limit of scaled post-exceedance windows: an exact unit-Pareto norm
factor, an angle resampled from an angular sample, and an independent
coefficient product chain pushed through the angle.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import stats

from .engine import PathSample, product_chain_batch
from .errors import RegimeMismatch, TooFewExceedances
from .laws import CoefficientLaw
from .tailstats import ks_2sample, ks_distance

__all__ = [
    "AngularSample",
    "SpectralProcessDraw",
    "SpectralProcessSample",
    "ConditionalWindows",
    "MIN_EXCEEDANCES",
    "angular_measure_threshold",
    "valid_window_starts",
    "sliding_windows",
    "window_angles",
    "conditional_exceedance_windows",
    "componentwise_spectral",
    "spectral_process_draws",
    "unit_pareto",
    "pareto_gof",
    "forward_limit_ks",
    "angular_ks",
]

MIN_EXCEEDANCES = 200
_UNIT_NORM_TOL = 1e-12


@dataclass(eq=False)
class AngularSample:
    """A weighted empirical angular law on the nonnegative part of a sphere.

    ``points`` has one unit vector per row (any dimension: pairs for the
    stationary vector itself, h-vectors for window angles).  ``threshold_u``
    is the norm threshold for threshold-based estimates and None for weighted
    product-chain estimates, which have no threshold.
    """

    points: np.ndarray
    weights: np.ndarray
    threshold_u: Optional[float]
    n_exceedances: int

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.points.shape[0] != self.weights.size:
            raise ValueError("one weight per angular point required")
        if self.points.shape[0] == 0:
            raise ValueError("empty angular sample")
        if (self.weights < 0).any():
            raise ValueError("weights must be nonnegative")
        total = self.weights.sum()
        if not (total > 0 and np.isfinite(total)):
            raise ValueError("weights must have positive finite mass")
        self.weights = self.weights / total
        norms = np.linalg.norm(self.points, axis=1)
        if np.abs(norms - 1.0).max() > _UNIT_NORM_TOL:
            raise ValueError("angular points must have unit norm within 1e-12")
        if self.points.min() < -_UNIT_NORM_TOL:
            raise ValueError("angular points must be componentwise nonnegative")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def mean_direction(self) -> np.ndarray:
        """Weighted mean of the angular points (not renormalized)."""
        return self.weights @ self.points


def _normalize_rows(points: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(points, axis=1, keepdims=True)
    return points / norms


def angular_measure_threshold(
    draws: PathSample, u_quantile: float = 0.999
) -> AngularSample:
    """Threshold estimate of the angular law of the stationary pair.

    Keeps every draw whose Euclidean norm exceeds the empirical ``u_quantile``
    norm quantile and returns the normalized exceedances with uniform weights.
    Raises :class:`TooFewExceedances` below 200 exceedances — angular CDFs
    from fewer points are too noisy to compare against anything.
    """
    if not 0.0 < u_quantile < 1.0:
        raise ValueError("u_quantile must lie in (0, 1)")
    r = np.hypot(draws.w1, draws.w2)
    x = float(np.quantile(r, u_quantile))
    idx = np.nonzero(r > x)[0]
    if idx.size < MIN_EXCEEDANCES:
        raise TooFewExceedances(
            f"{idx.size} norm exceedances above the {u_quantile:.4%} quantile; "
            f"need at least {MIN_EXCEEDANCES}"
        )
    points = np.column_stack((draws.w1[idx], draws.w2[idx])) / r[idx][:, None]
    weights = np.full(idx.size, 1.0 / idx.size)
    return AngularSample(
        points=points, weights=weights, threshold_u=x, n_exceedances=idx.size
    )


# ============================================================================
# Window extraction (chain-boundary aware)
# ============================================================================

def valid_window_starts(n: int, chain_len: int, h: int, offset: int = 0) -> np.ndarray:
    """Mask of starts g whose positions g+offset .. g+offset+h-1 stay in g's chain.

    Chain-major layout: position p belongs to chain p // chain_len.  The mask
    also cuts windows that would run past the end of the (possibly short) last
    chain.
    """
    g = np.arange(n)
    local = g % chain_len
    return (local + offset + h <= chain_len) & (g + offset + h <= n)


def sliding_windows(series: np.ndarray, chain_len: int, h: int) -> np.ndarray:
    """All length-h windows of a chain-major series that stay inside one chain.

    Returns a (m, h) copy; the caller owns it.  The last (possibly short)
    chain contributes only windows that fit before the series ends.
    """
    series = np.asarray(series, dtype=float).reshape(-1)
    if h < 1:
        raise ValueError("h must be >= 1")
    if series.size < h:
        return np.empty((0, h))
    wins = sliding_window_view(series, h)
    mask = valid_window_starts(series.size, chain_len, h)[: wins.shape[0]]
    return wins[mask].copy()


def window_angles(
    draws: PathSample, component: int, h: int, u_quantile: float = 0.999
) -> AngularSample:
    """Threshold estimate of the angular law of one coordinate's length-h window.

    Slides windows ``(W_{i,t}, ..., W_{i,t+h-1})`` within chains, keeps those
    whose norm exceeds the empirical ``u_quantile`` window-norm quantile, and
    returns them normalized with uniform weights.  This is the brute-force
    counterpart of :func:`componentwise_spectral`.
    """
    if component not in (1, 2):
        raise ValueError("component must be 1 or 2")
    if not 0.0 < u_quantile < 1.0:
        raise ValueError("u_quantile must lie in (0, 1)")
    series = draws.w1 if component == 1 else draws.w2
    wins = sliding_windows(series, draws.chain_len, h)
    if wins.shape[0] < MIN_EXCEEDANCES:
        raise TooFewExceedances(
            f"only {wins.shape[0]} windows of length {h} fit within chains"
        )
    r = np.linalg.norm(wins, axis=1)
    x = float(np.quantile(r, u_quantile))
    keep = r > x
    m = int(keep.sum())
    if m < MIN_EXCEEDANCES:
        raise TooFewExceedances(
            f"{m} window-norm exceedances; need at least {MIN_EXCEEDANCES}"
        )
    points = wins[keep] / r[keep][:, None]
    return AngularSample(
        points=points,
        weights=np.full(m, 1.0 / m),
        threshold_u=x,
        n_exceedances=m,
    )


@dataclass(eq=False)
class ConditionalWindows:
    """Post-exceedance windows W_{t+1..t+h}/x given |W_t| > x.

    ``windows`` has shape (m, h, 2); every window is scaled by the fixed
    threshold ``threshold`` (not by the exceedance norm itself).
    """

    windows: np.ndarray
    threshold: float
    n_exceedances: int

    def __len__(self) -> int:
        return self.windows.shape[0]

    def norms(self) -> np.ndarray:
        """Euclidean norm over both coordinates and all h steps, per window."""
        return np.linalg.norm(self.windows.reshape(len(self), -1), axis=1)


def conditional_exceedance_windows(
    draws: PathSample, h: int, u_quantile: float = 0.999
) -> ConditionalWindows:
    """Brute-force conditional law of the h steps after a norm exceedance.

    The conditioning event is |W_t| > x with x the empirical ``u_quantile``
    quantile of |W| over the whole sample; the window is the next h states of
    the same chain, scaled by 1/x.
    """
    if h < 1:
        raise ValueError("h must be >= 1")
    if not 0.0 < u_quantile < 1.0:
        raise ValueError("u_quantile must lie in (0, 1)")
    n = len(draws)
    r = np.hypot(draws.w1, draws.w2)
    x = float(np.quantile(r, u_quantile))
    valid = valid_window_starts(n, draws.chain_len, h, offset=1)
    idx = np.nonzero(valid & (r > x))[0]
    if idx.size < MIN_EXCEEDANCES:
        raise TooFewExceedances(
            f"{idx.size} in-chain exceedances above the {u_quantile:.4%} "
            f"quantile; need at least {MIN_EXCEEDANCES}"
        )
    steps = idx[:, None] + np.arange(1, h + 1)[None, :]
    windows = np.stack((draws.w1[steps], draws.w2[steps]), axis=2) / x
    return ConditionalWindows(windows=windows, threshold=x, n_exceedances=idx.size)


# ============================================================================
# Weighted product-chain estimator (dominant own multiplier)
# ============================================================================

def componentwise_spectral(
    law: CoefficientLaw,
    alpha_i: float,
    h: int,
    n: int,
    rng: np.random.Generator,
    component: int = 1,
) -> AngularSample:
    """Weighted product-chain estimate of one coordinate's window angular law.

    Draws n runs of the scalar diagonal products Pi_1..Pi_h of the chosen
    component's multiplier, normalizes each vector of running products, and
    weights it by its norm to the power ``alpha_i`` (self-normalized).  Valid
    as the window angular law when the component's own multiplier dominates
    its tail (for the first coordinate: alpha1 < alpha2).
    """
    if component not in (1, 2):
        raise ValueError("component must be 1 or 2")
    if h < 1:
        raise ValueError("h must be >= 1")
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha_i <= 0:
        raise ValueError("alpha_i must be positive")
    a = law.marginal("a1" if component == 1 else "a4").sample(rng, (n, h))
    xi = np.cumprod(a, axis=1)
    norms = np.linalg.norm(xi, axis=1)
    weights = norms**alpha_i
    return AngularSample(
        points=xi / norms[:, None],
        weights=weights / weights.sum(),
        threshold_u=None,
        n_exceedances=n,
    )


# ============================================================================
# Forward spectral process (dominant cross-feed)
# ============================================================================

def unit_pareto(alpha: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exact draws with P(Y > y) = y^-alpha for y > 1 (inverse transform)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    # 1 - U lies in (0, 1]: y = 1 is attainable, y = inf is not.
    return (1.0 - rng.random(n)) ** (-1.0 / alpha)


@dataclass(frozen=True)
class SpectralProcessDraw:
    """One draw of the forward limit: norm factor, angle, and pushed path."""

    y0_norm: float
    theta0: np.ndarray
    path: np.ndarray  # (h, 2): row t-1 holds Pi_t . theta0


@dataclass(eq=False)
class SpectralProcessSample:
    """n draws of the forward limit of scaled post-exceedance windows.

    ``path[k, t-1] = Pi_t . theta0[k]`` exactly for the k-th drawn coefficient
    chain; the limiting window itself is ``y0`` times the path (see
    :meth:`limit_paths`), matching windows scaled by the conditioning
    threshold.
    """

    y0: np.ndarray
    theta0: np.ndarray
    path: np.ndarray  # (n, h, 2)

    def __len__(self) -> int:
        return self.y0.size

    def __getitem__(self, k: int) -> SpectralProcessDraw:
        return SpectralProcessDraw(
            y0_norm=float(self.y0[k]), theta0=self.theta0[k], path=self.path[k]
        )

    def limit_paths(self) -> np.ndarray:
        """The limit windows y0 * (Pi_t theta0)_t, shape (n, h, 2)."""
        return self.y0[:, None, None] * self.path

    def norms(self) -> np.ndarray:
        """Euclidean norm of each limit window (both coordinates, all steps)."""
        return np.linalg.norm(self.limit_paths().reshape(len(self), -1), axis=1)


def spectral_process_draws(
    law: CoefficientLaw,
    alpha2: float,
    h: int,
    n: int,
    angular: AngularSample,
    rng: np.random.Generator,
    alpha1: Optional[float] = None,
) -> SpectralProcessSample:
    """Draw from the forward limit law: Y0 Pareto(alpha2), Theta0 ~ angular, Pi fresh.

    Requires the cross-feed-dominant regime alpha1 > alpha2 (pass ``alpha1``
    to have the precondition checked; the construction itself only needs
    ``alpha2``).  The three ingredients are mutually independent; ``path``
    stores the bare products ``Pi_t theta0`` and :meth:`limit_paths` applies
    the Pareto factor.
    """
    if h < 0:
        raise ValueError("h must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha2 <= 0:
        raise ValueError("alpha2 must be positive")
    if angular.dim != 2:
        raise ValueError("angular sample must hold 2-vectors")
    if alpha1 is not None and not alpha1 > alpha2:
        raise RegimeMismatch(
            f"forward spectral limit needs alpha1 > alpha2, got {alpha1:.4g} <= {alpha2:.4g}"
        )
    y0 = unit_pareto(alpha2, n, rng)
    pick = rng.choice(len(angular), size=n, p=angular.weights)
    theta0 = angular.points[pick]
    if h == 0:
        path = np.empty((n, 0, 2))
    else:
        p1, u, p4 = product_chain_batch(law, h, n, rng)
        path = np.empty((n, h, 2))
        # Pi_t theta = (p1 theta1 + u theta2, p4 theta2); columns 1..h of the chain.
        path[:, :, 0] = p1[:, 1:] * theta0[:, 0, None] + u[:, 1:] * theta0[:, 1, None]
        path[:, :, 1] = p4[:, 1:] * theta0[:, 1, None]
    return SpectralProcessSample(y0=y0, theta0=theta0, path=path)


def pareto_gof(sample, alpha: float) -> tuple[float, float]:
    """One-sample KS statistic and p-value against P(Y > y) = y^-alpha, y > 1."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    result = stats.kstest(np.asarray(sample, dtype=float), "pareto", args=(alpha,))
    return float(result.statistic), float(result.pvalue)


def forward_limit_ks(
    cond: ConditionalWindows, limit: SpectralProcessSample
) -> dict[str, float]:
    """Two-sample KS per scalar functional between windows and their limit law.

    Functionals: each coordinate at each step (keys ``w{i}_t{t}``) and the
    whole-window Euclidean norm (key ``norm``).
    """
    paths = limit.limit_paths()
    h = cond.windows.shape[1]
    if paths.shape[1] != h:
        raise ValueError(f"window length mismatch: {h} vs {paths.shape[1]}")
    out: dict[str, float] = {}
    for t in range(h):
        for i in range(2):
            out[f"w{i + 1}_t{t + 1}"] = ks_2sample(
                cond.windows[:, t, i], paths[:, t, i]
            )[0]
    out["norm"] = ks_2sample(cond.norms(), limit.norms())[0]
    return out


def angular_ks(a: AngularSample, b: AngularSample) -> float:
    """Largest per-coordinate weighted KS distance between two angular laws."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return max(
        ks_distance(a.points[:, j], b.points[:, j], a.weights, b.weights)
        for j in range(a.dim)
    )
