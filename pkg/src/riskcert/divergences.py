"""KL divergences and complexity terms between the distribution families the
certificates use: diagonal Gaussians as posteriors and a heavy-tailed
rotation-invariant prior with closed-form KL bounds.

The prior is never sampled; it enters only through its KL bounds and, for the
one-dimensional oracle tests, its log-density.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "DiagonalGaussian",
    "GeneralizedCauchyPrior",
    "Complexity",
    "kl_gaussian_gaussian",
    "kl_gaussian_cauchy_bound",
    "cauchy_prior_log_density",
    "complexity_term",
]


@dataclass(frozen=True)
class DiagonalGaussian:
    """Gaussian with diagonal covariance, stored as mean and per-coordinate
    standard deviation. Zero standard deviations are allowed and represent
    the degenerate point-mass limit in those coordinates."""

    mean: np.ndarray
    stddev: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        stddev = np.atleast_1d(np.asarray(self.stddev, dtype=float))
        if mean.ndim != 1 or stddev.ndim != 1:
            raise InvalidInputError("mean and stddev must be vectors")
        if mean.shape != stddev.shape:
            raise InvalidInputError(
                f"mean dimension {mean.shape[0]} != stddev dimension {stddev.shape[0]}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(stddev))):
            raise InvalidInputError("non-finite mean or stddev")
        if np.any(stddev < 0):
            raise InvalidInputError("stddev entries must be >= 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "stddev", stddev)

    @property
    def dimension(self):
        return self.mean.shape[0]

    def sample(self, count, rng):
        """Draw ``count`` vectors, shape (count, dimension)."""
        return self.mean + self.stddev * rng.standard_normal((count, self.dimension))


@dataclass(frozen=True)
class GeneralizedCauchyPrior:
    """Rotation-invariant prior on R^d with density proportional to
    1 / (|x|^(d-1) + |x|^(d+1)); reduces to the standard Cauchy at d = 1."""

    dimension: int

    def __post_init__(self):
        if not isinstance(self.dimension, (int, np.integer)) or self.dimension < 1:
            raise InvalidInputError("dimension must be an integer >= 1")

    @property
    def unit_sphere_area(self):
        d = self.dimension
        return d * math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


@dataclass(frozen=True)
class Complexity:
    """KL divergence plus the confidence charge ln(1/delta)."""

    kl: float
    delta: float
    total: float = field(default=None)

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise InvalidInputError("delta must lie in (0, 1)")
        if not (self.kl >= 0.0 or math.isinf(self.kl)):
            raise InvalidInputError("kl must be >= 0 (or +inf)")
        expected = self.kl + math.log(1.0 / self.delta)
        if self.total is None:
            object.__setattr__(self, "total", expected)
        elif not (
            self.total == expected
            or (math.isinf(self.total) and math.isinf(expected))
            or abs(self.total - expected) <= 1e-12 * max(1.0, abs(expected))
        ):
            raise InvalidInputError("total must equal kl + ln(1/delta)")


def complexity_term(kl, delta):
    """Assemble the complexity Complexity(kl, delta) with total = kl + ln(1/delta).

    A +inf ``kl`` (point-mass posterior against a continuous prior)
    propagates to a +inf total.
    """
    return Complexity(kl=float(kl), delta=float(delta))


def kl_gaussian_gaussian(q, u):
    """KL divergence between diagonal Gaussians of equal dimension.

    Requires every ``u`` standard deviation to be strictly positive. If a
    ``q`` coordinate is degenerate (zero standard deviation) the divergence
    is +inf.
    """
    if not isinstance(q, DiagonalGaussian) or not isinstance(u, DiagonalGaussian):
        raise InvalidInputError("arguments must be DiagonalGaussian")
    if q.dimension != u.dimension:
        raise InvalidInputError(
            f"dimension mismatch: {q.dimension} vs {u.dimension}"
        )
    if np.any(u.stddev <= 0):
        raise InvalidInputError("reference stddev must be entrywise > 0")
    if np.any(q.stddev == 0):
        return math.inf
    ratio = q.stddev / u.stddev
    shift = (q.mean - u.mean) / u.stddev
    return float(np.sum(-np.log(ratio) + 0.5 * (ratio**2 + shift**2) - 0.5))


def kl_gaussian_cauchy_bound(mu, rho, mode="tight"):
    """Closed-form upper bound on the KL divergence from a spherical Gaussian
    N(mu, rho^2 I_d) to the generalized Cauchy prior in the same dimension.

    Parameters
    ----------
    mu : array_like
        Gaussian mean; its length fixes the dimension d.
    rho : float
        Gaussian scale, > 0.
    mode : {"tight", "quadratic"}
        "tight" uses the logarithmic mean term
        (d+1)/2 * ln(1 + |mu|^2/(d rho^2)) + ln((1 + d rho^2)/rho);
        "quadratic" uses |mu|^2/(2 rho^2) + ln((1 + 2 d rho^2)/rho).
        Both are valid upper bounds; neither dominates the other everywhere.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if mu.ndim != 1 or not np.all(np.isfinite(mu)):
        raise InvalidInputError("mu must be a finite vector")
    if not (isinstance(rho, (int, float)) and rho > 0 and math.isfinite(rho)):
        raise InvalidInputError("rho must be positive and finite")
    d = mu.shape[0]
    sq = float(mu @ mu)
    if mode == "tight":
        return (d + 1) / 2.0 * math.log1p(sq / (d * rho * rho)) + math.log(
            (1.0 + d * rho * rho) / rho
        )
    if mode == "quadratic":
        return sq / (2.0 * rho * rho) + math.log((1.0 + 2.0 * d * rho * rho) / rho)
    raise InvalidInputError(f"unknown mode {mode!r}; expected 'tight' or 'quadratic'")


def cauchy_prior_log_density(x):
    """Log-density of the generalized Cauchy prior at ``x``.

    ln( 2 / (pi * S_{d-1} * (|x|^(d-1) + |x|^(d+1))) ) with S_{d-1} the unit
    sphere area. For d >= 2 the density diverges (integrably) at the origin;
    +inf is returned there and callers must guard it.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise InvalidInputError("x must be a finite vector")
    d = x.shape[0]
    area = GeneralizedCauchyPrior(d).unit_sphere_area
    r = float(np.linalg.norm(x))
    if r == 0.0:
        if d >= 2:
            return math.inf
        return math.log(2.0 / (math.pi * area))
    # log(r^(d-1) + r^(d+1)) = (d-1) log r + log1p(r^2), stable for r far from 1
    log_denom = (d - 1) * math.log(r) + math.log1p(r * r)
    return math.log(2.0 / (math.pi * area)) - log_denom
