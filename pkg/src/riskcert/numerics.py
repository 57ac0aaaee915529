"""Shared numerical kernels: spectral and group norms, the two special
integrals appearing in the certificate formulas, and the scalar factors that
depend only on sample size or layer width.

All functions are pure; the only randomness (the power-iteration start
vector) comes from an explicitly passed generator.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import AccuracyError, InvalidInputError, UnsupportedNormError

__all__ = [
    "QuadratureSpec",
    "DEFAULT_QUAD",
    "spectral_norm",
    "group_norm_pq",
    "entropy_integral",
    "complexity_tail_bound",
    "complexity_tail_integral",
    "chaining_constant",
    "gaussian_spectral_factor",
]

_SVD_CUTOFF = 32


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance budget for the adaptive quadratures.

    Parameters
    ----------
    abs_tol, rel_tol : float
        Absolute and relative tolerance targets, both > 0.
    max_subdivisions : int
        Limit on adaptive interval splits, >= 1.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and math.isfinite(self.abs_tol)):
            raise InvalidInputError("abs_tol must be positive and finite")
        if not (self.rel_tol > 0 and math.isfinite(self.rel_tol)):
            raise InvalidInputError("rel_tol must be positive and finite")
        if self.max_subdivisions < 1:
            raise InvalidInputError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()


def _as_matrix(a):
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise InvalidInputError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix has non-finite entries")
    return m


def spectral_norm(a, tol=1e-12, rng=None):
    """Largest singular value of a dense matrix.

    Small matrices (max dimension <= 32) go through a full SVD. Larger ones
    use power iteration on the Gram matrix with a random unit start and a
    relative Rayleigh-quotient stopping rule at ``tol``.

    Parameters
    ----------
    a : array_like
        Matrix with finite entries.
    tol : float
        Relative accuracy target for the iterative path.
    rng : numpy.random.Generator, optional
        Source for the start vector; a fixed-seed generator is used when
        omitted so results are reproducible.
    """
    m = _as_matrix(a)
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    if max(m.shape) <= _SVD_CUTOFF:
        return float(np.linalg.svd(m, compute_uv=False)[0])

    if rng is None:
        rng = np.random.default_rng(0)
    gram = m.T @ m if m.shape[0] >= m.shape[1] else m @ m.T
    dim = gram.shape[0]
    v = rng.normal(size=dim)
    v /= np.linalg.norm(v)
    rayleigh = 0.0
    for _ in range(10_000):
        w = gram @ v
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        new_rayleigh = float(v @ w)
        v = w / norm_w
        if abs(new_rayleigh - rayleigh) <= tol * abs(new_rayleigh):
            rayleigh = new_rayleigh
            break
        rayleigh = new_rayleigh
    return math.sqrt(max(rayleigh, 0.0))


def _validate_exponent(p, name):
    if isinstance(p, (int, float)):
        if math.isnan(p) or p < 1:
            raise UnsupportedNormError(f"{name} must be >= 1 (got {p})")
        return float(p)
    raise UnsupportedNormError(f"{name} must be a real number or inf")


def group_norm_pq(a, p, q):
    """(p, q) group norm: inner p-norm over each row, outer q-norm across rows.

    Computes ``( sum_i ( sum_j |a_ij|^p )^(q/p) )^(1/q)`` with the usual
    supremum interpretation when an exponent is infinite. The (2, 2) pair is
    the Frobenius norm; (2, inf) is the largest row 2-norm.
    """
    m = _as_matrix(a)
    p = _validate_exponent(p, "p")
    q = _validate_exponent(q, "q")
    if math.isinf(p):
        inner = np.max(np.abs(m), axis=1)
    else:
        inner = np.sum(np.abs(m) ** p, axis=1) ** (1.0 / p)
    if math.isinf(q):
        return float(np.max(inner))
    return float(np.sum(inner**q) ** (1.0 / q))


def _entropy_integrand(s):
    # sqrt(ln(1 + 1/s^2)) in a form stable near both 0 and infinity
    s = np.asarray(s, dtype=float)
    small = s < 1.0
    safe_small = np.where(small, s, 1.0)
    safe_large = np.where(small, 1.0, s)
    val = np.where(
        small,
        np.log1p(s * s) - 2.0 * np.log(safe_small),
        np.log1p(1.0 / (safe_large * safe_large)),
    )
    return np.sqrt(val)


def _quad_or_raise(f, lo, hi, quad, label):
    val, err, info, *rest = integrate.quad(
        f,
        lo,
        hi,
        epsabs=quad.abs_tol,
        epsrel=quad.rel_tol,
        limit=quad.max_subdivisions,
        full_output=True,
    )
    if rest:
        raise AccuracyError(f"{label}: {rest[0]}", best_estimate=val)
    return val


def entropy_integral(a, quad=DEFAULT_QUAD):
    """Integral of sqrt(ln(1 + 1/s^2)) for s from 0 to ``a``.

    The integrand blows up like sqrt(2 ln(1/s)) at the origin but stays
    integrable. The head piece over (0, min(a, 1e-3)] is mapped by
    s = exp(-u) onto a semi-infinite smooth integral; the remainder is
    integrated directly. Non-convergence raises AccuracyError carrying the
    best estimate.
    """
    if not (isinstance(a, (int, float)) and math.isfinite(a)):
        raise InvalidInputError("a must be finite")
    if a < 0:
        raise InvalidInputError("a must be >= 0")
    if a == 0:
        return 0.0
    split = min(a, 1e-3)

    def head_integrand(u):
        return math.exp(-u) * math.sqrt(math.log1p(math.exp(-2.0 * u)) + 2.0 * u)

    total = _quad_or_raise(head_integrand, -math.log(split), np.inf, quad, "entropy integral head")
    if a > split:
        total += _quad_or_raise(_entropy_integrand, split, a, quad, "entropy integral body")
    return total


def complexity_tail_bound(a, b):
    """Closed-form upper bound a*sqrt(ln(a + 1/a) + 1 + b) for the tail integral."""
    if not (a > 0 and math.isfinite(a)):
        raise InvalidInputError("a must be positive and finite")
    if not (b >= 0 and math.isfinite(b)):
        raise InvalidInputError("b must be >= 0 and finite")
    return a * math.sqrt(math.log(a + 1.0 / a) + 1.0 + b)


def complexity_tail_integral(a, b, quad=DEFAULT_QUAD):
    """Quadrature value of the integral of sqrt(ln(s + 1/s) + b), s in (0, a].

    Exposed so the closed-form bound can be checked against the quantity it
    bounds; certificates only ever use the closed form.
    """
    if not (a > 0 and math.isfinite(a)):
        raise InvalidInputError("a must be positive and finite")
    if not (b >= 0 and math.isfinite(b)):
        raise InvalidInputError("b must be >= 0 and finite")
    split = min(a, 1e-3)

    def head_integrand(u):
        # s = exp(-u); ln(s + 1/s) = u + log1p(exp(-2u))
        return math.exp(-u) * math.sqrt(u + math.log1p(math.exp(-2.0 * u)) + b)

    def body_integrand(s):
        return math.sqrt(math.log(s + 1.0 / s) + b)

    total = _quad_or_raise(head_integrand, -math.log(split), np.inf, quad, "tail integral head")
    if a > split:
        total += _quad_or_raise(body_integrand, split, a, quad, "tail integral body")
    return total


def chaining_constant(n):
    """Sample-size constant ln(e + ln^2(2 n^2)) charged per unit time by the
    increment bound; always > 1 and nondecreasing in n."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidInputError("n must be an integer >= 1")
    return math.log(math.e + math.log(2.0 * float(n) ** 2) ** 2)


def gaussian_spectral_factor(m):
    """Scale factor sqrt(2 ln(2 e m)) for the expected spectral norm of an
    m x m Gaussian matrix; >= sqrt(2) and nondecreasing in m."""
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidInputError("m must be an integer >= 1")
    return math.sqrt(2.0 * math.log(2.0 * math.e * float(m)))
