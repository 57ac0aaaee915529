"""Certificates for layered ReLU networks: spectral statistics, the
scale-corrected stochastic predictor, layerwise metric norm bounds, the
contraction-velocity bounds feeding the transport machinery, the closed-form
de-randomization cost, and the final deterministic risk certificate.

Dimension conventions: K square layers of width m, total parameter dimension
d = m^2 K. All products of per-layer spectral norms run in the log domain so
deep or badly scaled nets cannot overflow before the final exponentiation.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .divergences import DiagonalGaussian, kl_gaussian_cauchy_bound
from .errors import AccuracyError, InvalidInputError
from .numerics import (
    DEFAULT_QUAD,
    chaining_constant,
    entropy_integral,
    gaussian_spectral_factor,
    group_norm_pq,
    spectral_norm,
)
from .pac_core import subgaussian_pac_bound
from .transport import BoundBreakdown

__all__ = [
    "NetworkWeights",
    "SpectralStats",
    "StochasticPredictor",
    "ContractionVelocityBounds",
    "DerandCertificate",
    "spectral_stats",
    "rebalance",
    "stochastic_predictor",
    "layerwise_metric_scalars",
    "metric_norm_bound",
    "gradient_norm_bound",
    "gaussian_spectral_bound",
    "contraction_velocity_bounds",
    "derand_cost",
    "risk_certificate",
    "vc_baseline",
]


@dataclass(frozen=True)
class NetworkWeights:
    """K same-width square layers with the loss Lipschitz constant and the
    input radius that scale every certificate."""

    layers: tuple
    lipschitz_loss: float = 1.0
    input_radius: float = 1.0

    def __post_init__(self):
        layers = tuple(np.asarray(w, dtype=float) for w in self.layers)
        if len(layers) < 1:
            raise InvalidInputError("need at least one layer")
        m = layers[0].shape[0] if layers[0].ndim == 2 else -1
        for idx, w in enumerate(layers):
            if w.ndim != 2 or w.shape != (m, m):
                raise InvalidInputError(
                    f"layer {idx} must be a square {m}x{m} matrix, got {w.shape}"
                )
            if not np.all(np.isfinite(w)):
                raise InvalidInputError(f"layer {idx} has non-finite entries")
        if not (self.lipschitz_loss > 0 and math.isfinite(self.lipschitz_loss)):
            raise InvalidInputError("lipschitz_loss must be positive and finite")
        if not (self.input_radius > 0 and math.isfinite(self.input_radius)):
            raise InvalidInputError("input_radius must be positive and finite")
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self):
        return len(self.layers)

    @property
    def width(self):
        return self.layers[0].shape[0]

    @property
    def dimension(self):
        return self.width * self.width * self.depth

    def flatten(self):
        """Parameter vector, layer-major and row-major within each layer."""
        return np.concatenate([w.reshape(-1) for w in self.layers])


@dataclass(frozen=True)
class SpectralStats:
    """Per-layer and aggregate spectral quantities of one weight setting.

    depth_normalized_radius is the geometric mean of the layer spectral
    norms; total_radius multiplies in the loss Lipschitz constant and input
    radius. weight_norm is the Euclidean norm of the whole parameter vector,
    so weight_norm^2 = sum of squared per-layer Frobenius norms.
    """

    layer_norms: tuple
    layer_frobenius: tuple
    depth_normalized_radius: float
    total_radius: float
    log_total_radius: float
    weight_norm: float
    degenerate: bool
    depth: int
    width: int
    dimension: int
    lipschitz_loss: float
    input_radius: float


def spectral_stats(w, tol=1e-12):
    """Compute SpectralStats; a zero layer collapses the radius to 0 and the
    result is flagged degenerate rather than rejected."""
    if not isinstance(w, NetworkWeights):
        raise InvalidInputError("w must be NetworkWeights")
    lams = tuple(spectral_norm(layer, tol=tol) for layer in w.layers)
    frobs = tuple(float(np.linalg.norm(layer)) for layer in w.layers)
    for lam, phi in zip(lams, frobs):
        if lam > phi * (1 + 1e-9) + 1e-300:
            raise AccuracyError(
                f"spectral norm {lam} exceeds Frobenius norm {phi}",
            )
    weight_norm = math.sqrt(sum(phi * phi for phi in frobs))
    degenerate = any(lam == 0.0 for lam in lams)
    if degenerate:
        lbar, radius, log_radius = 0.0, 0.0, -math.inf
    else:
        log_lbar = sum(math.log(lam) for lam in lams) / w.depth
        lbar = math.exp(log_lbar)
        log_radius = (
            math.log(w.lipschitz_loss)
            + math.log(w.input_radius)
            + w.depth * log_lbar
        )
        radius = math.exp(log_radius)
    return SpectralStats(
        layer_norms=lams,
        layer_frobenius=frobs,
        depth_normalized_radius=lbar,
        total_radius=radius,
        log_total_radius=log_radius,
        weight_norm=weight_norm,
        degenerate=degenerate,
        depth=w.depth,
        width=w.width,
        dimension=w.dimension,
        lipschitz_loss=w.lipschitz_loss,
        input_radius=w.input_radius,
    )


def rebalance(w, enabled=True, tol=1e-10):
    """Rescale each layer to the common spectral norm while keeping their
    product, which leaves the network function unchanged for positively
    homogeneous activations. With enabled=False the weights pass through
    untouched and a warning notes that downstream formulas assume balance.
    """
    stats = spectral_stats(w)
    if stats.degenerate:
        raise InvalidInputError("cannot rebalance a network with a zero layer")
    if not enabled:
        warnings.warn(
            "rebalancing disabled: certificate formulas assume equal layer "
            "spectral norms",
            stacklevel=2,
        )
        return w
    lbar = stats.depth_normalized_radius
    scaled = tuple(
        layer * (lbar / lam) for layer, lam in zip(w.layers, stats.layer_norms)
    )
    out = NetworkWeights(scaled, w.lipschitz_loss, w.input_radius)
    check = spectral_stats(out)
    worst = max(abs(lam - check.depth_normalized_radius) for lam in check.layer_norms)
    if worst > tol * check.depth_normalized_radius:
        raise AccuracyError(
            f"rebalancing left spectral norms {worst} apart",
        )
    return out


@dataclass(frozen=True)
class StochasticPredictor:
    """Spherical Gaussian over the parameter vector, centered at the
    weights, with the scale correction stddev = rho * lbar / (sqrt(m) K
    gamma_m); rho = 0 degenerates to the deterministic predictor."""

    center: NetworkWeights
    rho: float
    stats: SpectralStats

    @property
    def stddev(self):
        m, depth = self.stats.width, self.stats.depth
        return (
            self.rho
            * self.stats.depth_normalized_radius
            / (math.sqrt(m) * depth * gaussian_spectral_factor(m))
        )

    def distribution(self):
        flat = self.center.flatten()
        return DiagonalGaussian(flat, np.full(flat.shape, self.stddev))


def stochastic_predictor(w, rho):
    if not (rho >= 0 and math.isfinite(rho)):
        raise InvalidInputError("rho must be finite and >= 0")
    stats = spectral_stats(w)
    if stats.degenerate and rho > 0:
        raise InvalidInputError(
            "noise scale is undefined for a degenerate (zero-layer) network"
        )
    return StochasticPredictor(center=w, rho=float(rho), stats=stats)


def layerwise_metric_scalars(stats):
    """The K scalars lambda_k^2 / (4 K R^2) defining the layerwise diagonal
    metric; its deviation-smoothness constant is at most 1, so the
    transport increments run with unit Lipschitz constant."""
    if stats.degenerate:
        raise InvalidInputError("metric undefined for degenerate stats")
    lams = np.asarray(stats.layer_norms)
    return lams**2 / (4.0 * stats.depth * stats.total_radius**2)


def _direction_layers(direction):
    if isinstance(direction, NetworkWeights):
        return direction.layers
    layers = tuple(np.asarray(v, dtype=float) for v in direction)
    if not layers:
        raise InvalidInputError("direction must have at least one layer")
    return layers


def metric_norm_bound(stats, direction):
    """Upper bound 2 R sqrt(K sum phi_k(v)^2 / lambda_k^2) on the parameter
    direction's length in the inverse layerwise metric; a zero layer norm
    makes it +inf."""
    layers = _direction_layers(direction)
    if len(layers) != stats.depth:
        raise InvalidInputError("direction depth mismatch")
    if any(lam == 0.0 for lam in stats.layer_norms):
        return math.inf
    acc = sum(
        float(np.sum(np.square(v))) / (lam * lam)
        for v, lam in zip(layers, stats.layer_norms)
    )
    return 2.0 * stats.total_radius * math.sqrt(stats.depth * acc)


def gradient_norm_bound(stats, direction_spectral_norms):
    """Upper bound 2 R sqrt(K sum lambda_k(v)^2 / lambda_k^2) on the
    direction's length in the empirical gradient metric."""
    norms = np.asarray(direction_spectral_norms, dtype=float)
    if norms.ndim != 1 or norms.size != stats.depth:
        raise InvalidInputError("need one spectral norm per layer")
    if np.any(norms < 0) or not np.all(np.isfinite(norms)):
        raise InvalidInputError("direction spectral norms must be finite and >= 0")
    if any(lam == 0.0 for lam in stats.layer_norms):
        return math.inf
    acc = sum(
        float(nv * nv) / (lam * lam) for nv, lam in zip(norms, stats.layer_norms)
    )
    return 2.0 * stats.total_radius * math.sqrt(stats.depth * acc)


def gaussian_spectral_bound(mean_matrix, variances):
    """Upper bound on sqrt(E of squared spectral norm) of a Gaussian random
    matrix with independent entries: spectral norm of the mean plus gamma_m
    times sqrt of the worst row or column variance sum."""
    mean_matrix = np.asarray(mean_matrix, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if mean_matrix.ndim != 2 or mean_matrix.shape[0] != mean_matrix.shape[1]:
        raise InvalidInputError("mean matrix must be square")
    if variances.shape != mean_matrix.shape:
        raise InvalidInputError("variance profile must match the mean's shape")
    if np.any(variances < 0) or not np.all(np.isfinite(variances)):
        raise InvalidInputError("variances must be finite and >= 0")
    worst = max(
        float(np.max(variances.sum(axis=1))), float(np.max(variances.sum(axis=0)))
    )
    m = mean_matrix.shape[0]
    return spectral_norm(mean_matrix) + gaussian_spectral_factor(m) * math.sqrt(worst)


@dataclass(frozen=True)
class ContractionVelocityBounds:
    """Closed-form upper bounds on the two velocities of a layerwise
    contraction flow at one time: metric_route bounds the Wasserstein
    velocity (inverse-metric norm of the mean flow), gradient_route bounds
    the deviation-based velocity (empirical gradient metric norm)."""

    t: float
    metric_route: float
    gradient_route: float
    per_layer_radii: tuple

    def __post_init__(self):
        if self.gradient_route > self.metric_route * (1 + 1e-9):
            raise InvalidInputError(
                "gradient-route bound cannot exceed the metric-route bound"
            )


def _noise_layers(noise, depth, width):
    layers = tuple(np.asarray(s, dtype=float) for s in noise)
    if len(layers) != depth:
        raise InvalidInputError("noise must provide one stddev matrix per layer")
    for idx, s in enumerate(layers):
        if s.shape != (width, width):
            raise InvalidInputError(f"noise layer {idx} has shape {s.shape}")
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise InvalidInputError("noise stddevs must be finite and >= 0")
    return layers


def contraction_velocity_bounds(initial, attractor, noise, t, envelope=False):
    """Velocity bounds along the contraction flow from `initial` toward
    `attractor` with initial per-entry noise stddevs `noise` (one matrix per
    layer), evaluated at time t.

    The per-layer effective radii combine the drifted center's spectral
    norm with the decayed noise term gamma_m * psi_k; both routes then
    aggregate drift and noise layer by layer.

    envelope=True evaluates the loosened closed form the de-randomization
    cost is assembled from: it requires the stationary specialization
    (initial center equal to the attractor, constant isotropic noise,
    balanced layer norms), replaces each per-layer radius by the
    t-independent envelope lbar * e^(rho/depth) in the numerator and by
    lbar in the denominator, and runs through the same aggregation code.
    """
    if not isinstance(initial, NetworkWeights) or not isinstance(
        attractor, NetworkWeights
    ):
        raise InvalidInputError("initial and attractor must be NetworkWeights")
    if (initial.depth, initial.width) != (attractor.depth, attractor.width):
        raise InvalidInputError("initial and attractor shapes differ")
    if not (t >= 0 and math.isfinite(t)):
        raise InvalidInputError("t must be finite and >= 0")
    depth, width = initial.depth, initial.width
    noise_layers = _noise_layers(noise, depth, width)
    decay = math.exp(-t)
    gamma = gaussian_spectral_factor(width)

    drift_layers = tuple(
        a - b for a, b in zip(attractor.layers, initial.layers)
    )
    center_layers = tuple(
        a + decay * (b - a) for a, b in zip(attractor.layers, initial.layers)
    )
    center_norms = tuple(spectral_norm(c) for c in center_layers)
    psis = tuple(
        max(group_norm_pq(s, 2, math.inf), group_norm_pq(s.T, 2, math.inf))
        for s in noise_layers
    )

    if envelope:
        if any(float(np.max(np.abs(dl))) != 0.0 for dl in drift_layers):
            raise InvalidInputError(
                "envelope form requires the initial center to equal the attractor"
            )
        flat_noise = np.concatenate([s.reshape(-1) for s in noise_layers])
        sigma = float(flat_noise[0])
        if sigma <= 0 or float(np.max(np.abs(flat_noise - sigma))) > 1e-12 * sigma:
            raise InvalidInputError(
                "envelope form requires constant positive isotropic noise"
            )
        stats = spectral_stats(initial)
        lbar = stats.depth_normalized_radius
        if stats.degenerate or max(
            abs(lam - lbar) for lam in stats.layer_norms
        ) > 1e-8 * lbar:
            raise InvalidInputError(
                "envelope form requires balanced layer spectral norms"
            )
        rho = sigma * math.sqrt(width) * depth * gamma / lbar
        radii = tuple(lbar * math.exp(rho / depth) for _ in range(depth))
        denominators = tuple(center_norms)
    else:
        radii = tuple(
            lam + decay * gamma * psi for lam, psi in zip(center_norms, psis)
        )
        denominators = radii

    if any(r == 0.0 for r in denominators):
        raise InvalidInputError("degenerate per-layer radius along the flow")
    log_radius = (
        math.log(initial.lipschitz_loss)
        + math.log(initial.input_radius)
        + sum(math.log(r) for r in radii)
    )
    total = math.exp(log_radius)

    metric_acc = 0.0
    gradient_acc = 0.0
    for drift, s, lam_den in zip(drift_layers, noise_layers, denominators):
        frob_drift = float(np.sum(np.square(drift)))
        frob_noise = float(np.sum(np.square(s)))
        spec_drift = spectral_norm(drift) if frob_drift > 0 else 0.0
        col_max_sq = float(group_norm_pq(s, math.inf, 2)) ** 2
        metric_acc += (frob_drift + frob_noise) / (lam_den * lam_den)
        gradient_acc += (spec_drift**2 + col_max_sq) / (lam_den * lam_den)
    metric_route = 2.0 * decay * total * math.sqrt(depth * metric_acc)
    gradient_route = 2.0 * decay * total * math.sqrt(depth * gradient_acc)
    return ContractionVelocityBounds(
        t=float(t),
        metric_route=metric_route,
        gradient_route=gradient_route,
        per_layer_radii=radii,
    )


@dataclass(frozen=True)
class DerandCertificate:
    """De-randomization cost with its breakdown: the entropy term carries
    the noise-entropy integral, the residual term the complexity constant
    c2; transport_part isolates the residual's complexity-free piece, which
    is the pure transportation share of the cost."""

    derand_cost: float
    entropy_term: float
    residual_term: float
    transport_part: float
    rho: float
    n: int
    delta: float
    mode: str

    def __post_init__(self):
        if self.derand_cost < 0:
            raise InvalidInputError("derand_cost must be >= 0")
        expected = self.entropy_term + self.residual_term
        if abs(self.derand_cost - expected) > 1e-9 * max(1.0, expected):
            raise InvalidInputError("cost must equal entropy + residual terms")
        if self.transport_part > self.residual_term * (1 + 1e-12):
            raise InvalidInputError("transport part cannot exceed the residual")


_DERAND_MODES = ("standard", "tight")


def _derand_from_stats(stats, rho, n, delta, mode, quad):
    m, depth, d = stats.width, stats.depth, stats.dimension
    gamma = gaussian_spectral_factor(m)
    lbar = stats.depth_normalized_radius
    weight = stats.weight_norm
    rho0 = math.sqrt(depth / m) * gamma / lbar
    u = rho / rho0
    c1 = chaining_constant(n) + math.log(math.sqrt(d) / delta)
    c2 = c1 + 1.0 + math.log(u + 1.0 / u)

    scale = (
        4.0
        * math.exp(rho + stats.log_total_radius)
        * math.sqrt(m * depth * depth / n)
    )
    if mode == "standard":
        entropy_arg = math.sqrt(m) * rho / (depth * gamma)
        entropy_weight = weight / lbar
    else:
        entropy_arg = rho / (rho0 * weight)
        entropy_weight = (weight / lbar) * math.sqrt((1.0 + 1.0 / d) / 2.0)
    entropy_term = scale * entropy_weight * entropy_integral(entropy_arg, quad)
    transport_part = scale * rho / (depth * gamma)
    residual_term = transport_part * (1.0 + math.sqrt(c2 / m))
    return DerandCertificate(
        derand_cost=entropy_term + residual_term,
        entropy_term=entropy_term,
        residual_term=residual_term,
        transport_part=transport_part,
        rho=float(rho),
        n=int(n),
        delta=float(delta),
        mode=mode,
    )


def derand_cost(
    w,
    rho,
    n,
    delta,
    mode="standard",
    quad=DEFAULT_QUAD,
    rebalance_layers=True,
):
    """Cost of replacing the scale-corrected Gaussian predictor of scale rho
    by its deterministic center, as a high-probability bound holding
    simultaneously for the whole contraction path.

    mode="standard" evaluates the headline closed form; mode="tight"
    evaluates the sharper pre-loosening variant whose entropy integral sees
    the dimension-corrected weight and whose integral argument shrinks by
    the factor lbar sqrt(K) / |w| <= 1. tight <= standard always.
    """
    if mode not in _DERAND_MODES:
        raise InvalidInputError(f"mode must be one of {_DERAND_MODES}")
    if not (isinstance(rho, (int, float)) and rho > 0 and math.isfinite(rho)):
        raise InvalidInputError("rho must be positive and finite")
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidInputError("n must be an integer >= 1")
    if not 0.0 < delta < 1.0:
        raise InvalidInputError("delta must be in (0, 1)")
    w = rebalance(w, enabled=rebalance_layers)
    stats = spectral_stats(w)
    if stats.degenerate:
        raise InvalidInputError("cost undefined for a degenerate network")
    return _derand_from_stats(stats, float(rho), int(n), float(delta), mode, quad)


def risk_certificate(
    w,
    n,
    delta,
    emp_risk,
    mode="standard",
    quad=DEFAULT_QUAD,
    rebalance_layers=True,
):
    """Deterministic risk certificate for a [0,1]-bounded loss: empirical
    risk plus the unit-scale de-randomization cost plus the reference
    deviation of the scale-corrected Gaussian predictor against the
    heavy-tailed prior, with the confidence budget split evenly between the
    two probabilistic events."""
    if mode not in _DERAND_MODES:
        raise InvalidInputError(f"mode must be one of {_DERAND_MODES}")
    if not isinstance(n, (int, np.integer)) or n < 3:
        raise InvalidInputError("n must be an integer >= 3")
    if not 0.0 < delta < 1.0:
        raise InvalidInputError("delta must be in (0, 1)")
    if not (0.0 <= emp_risk <= 1.0):
        raise InvalidInputError("emp_risk must lie in [0, 1] for a bounded loss")
    w = rebalance(w, enabled=rebalance_layers)
    stats = spectral_stats(w)
    if stats.degenerate:
        raise InvalidInputError("certificate undefined for a degenerate network")
    half = delta / 2.0
    cert = _derand_from_stats(stats, 1.0, int(n), half, mode, quad)
    predictor = StochasticPredictor(center=w, rho=1.0, stats=stats)
    kl_bound = kl_gaussian_cauchy_bound(
        w.flatten(), predictor.stddev, mode="quadratic"
    )
    h_half = kl_bound + math.log(1.0 / half)
    reference = subgaussian_pac_bound(0.5, h_half, int(n))
    chaining_part = cert.derand_cost - cert.transport_part
    return BoundBreakdown(
        chaining_cost=chaining_part,
        transport_cost=cert.transport_part,
        reference_deviation=reference,
        total=float(emp_risk) + cert.derand_cost + reference,
        empirical_risk=float(emp_risk),
        delta_budget=(half, half),
    )


def vc_baseline(d, depth, n):
    """Rate-only comparator sqrt(d K / n) for the dimension-counting route;
    no constants or log factors."""
    if d < 1 or depth < 1 or n < 1:
        raise InvalidInputError("arguments must be positive")
    return math.sqrt(d * depth / n)
