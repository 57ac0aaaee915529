"""Runtime verifier battery.

Every certified inequality in the library is re-validated here against an
independent route: Monte Carlo resampling, scipy quadrature, closed forms,
high-precision arithmetic, or finite differences. ``run_verify_suite``
runs the whole battery and returns a report with one row per verifier.

The battery itself is pinned; the experiment config contributes the seed
(expanded into one child stream per verifier) and the output options.
With a fixed seed every ``observed`` number is reproducible exactly; the
wall-clock runtime column is the only field that varies between runs.
"""

from __future__ import annotations

import math
import time

import numpy as np
from scipy import integrate

from .divergences import DiagonalGaussian, kl_gaussian_cauchy_bound
from .errors import VerificationError
from .harness import _child_rng, _timestamp
from .highprec import high_precision_derand_cost
from .mlp import (
    gradient_from_signals,
    network_output,
    per_example_gradient,
    per_example_gradients,
    signal_decomposition,
    train_toy_mlp,
)
from .nn_cert import (
    NetworkWeights,
    contraction_velocity_bounds,
    derand_cost,
    gaussian_spectral_bound,
    gradient_norm_bound,
    risk_certificate,
    spectral_stats,
)
from .numerics import gaussian_spectral_factor
from .pac_core import (
    centrality_bennett,
    centrality_hoeffding,
    centrality_rademacher,
    subgaussian_pac_bound,
)
from .reports import Report, Table, config_hash
from .transport import ContractionFlow, increment_coverage_check, time_grid
from .worlds import GaussianBlobTask, SquaredLossUniformWorld, make_coin_world

__all__ = ["run_verify_suite", "VERIFIER_NAMES"]

# child streams 1 and 2 belong to the experiment runners; verifier streams
# start here and follow registry order
_STREAM_BASE = 16


def _reference_net(m=16, depth=3):
    return NetworkWeights(layers=tuple(np.eye(m) for _ in range(depth)))


def _exp_moment(values, eta):
    """Estimate E[exp(X - eta)] and return it with the 1 + 3 SE threshold."""
    samples = np.exp(np.asarray(values, dtype=float) - eta)
    estimate = float(samples.mean())
    se = float(samples.std(ddof=1)) / math.sqrt(samples.size)
    return estimate, 1.0 + 3.0 * se


def _rel_err(value, reference):
    return abs(value - reference) / max(abs(reference), 1e-300)


def _verify_increment_coverage(rng):
    # scalar squared-loss world with closed-form derivative: resample the
    # data 500 times and count trials where the exact deviation derivative
    # escapes the increment bound anywhere on the 64-point grid
    world = SquaredLossUniformWorld()
    flow = ContractionFlow(DiagonalGaussian([1.0], [1.0]), np.array([0.0]))
    report = increment_coverage_check(
        world, flow, time_grid(8.0, 64), n=100, trials=500, delta=0.1, seed=rng
    )
    detail = (
        f"{report.violations}/{report.trials} trials violated; "
        f"max derivative/bound ratio {report.max_bound_ratio:.4f}"
    )
    return report.violation_fraction, 0.15, "<=", detail


def _verify_hoeffding_moment(rng):
    x = rng.uniform(-1.0, 1.0, size=1_000_000)
    eta = centrality_hoeffding(-1.0, 1.0)
    estimate, threshold = _exp_moment(x, eta)
    return estimate, threshold, "<=", f"X uniform on [-1,1], range budget {eta}"


def _verify_bennett_moment(rng):
    p = 0.3
    x = (rng.random(1_000_000) < p).astype(float) - p
    eta = centrality_bennett(1.0 - p, p * (1.0 - p))
    estimate, threshold = _exp_moment(x, eta)
    return estimate, threshold, "<=", f"X = Bernoulli(0.3) - 0.3, budget {eta:.6f}"


def _verify_rademacher_moment_gaussian(rng):
    x = rng.standard_normal(1_000_000)
    estimate, threshold = _exp_moment(x, centrality_rademacher(x, 1.0))
    return estimate, threshold, "<=", "X standard normal, pointwise budget"


def _verify_rademacher_moment_bounded(rng):
    x = rng.uniform(-1.0, 1.0, size=1_000_000)
    estimate, threshold = _exp_moment(x, centrality_rademacher(x, 1.0 / 3.0))
    return estimate, threshold, "<=", "X centered uniform, second moment 1/3"


def _verify_finite_world_coverage(rng):
    # uniform posterior over 8 biased coins: the subgaussian deviation bound
    # at delta = 0.1 should fail on at most ~a-tenth of resamples
    world = make_coin_world((np.arange(8) + 1) / 9.0)
    n, delta, trials = 200, 0.1, 2000
    bound = subgaussian_pac_bound(0.5, math.log(1.0 / delta), n)
    risks = world.risks()
    violations = 0
    for _ in range(trials):
        emp = world.empirical_risks(world.sample_outcomes(n, rng))
        if float(np.mean(risks - emp)) > bound:
            violations += 1
    detail = f"{violations}/{trials} resamples exceeded the deviation bound {bound:.4f}"
    return violations / trials, 0.13, "<=", detail


def _quadrature_kl_gaussian_cauchy(mu, rho):
    """1-D oracle via direct quadrature against the density 1/(pi(1+x^2));
    the Gaussian entropy term has a closed form."""

    def cross(x):
        q = math.exp(-((x - mu) ** 2) / (2.0 * rho * rho)) / (
            math.sqrt(2.0 * math.pi) * rho
        )
        return q * math.log(math.pi * (1.0 + x * x))

    val, _ = integrate.quad(
        cross, mu - 60.0 * rho, mu + 60.0 * rho, epsabs=1e-12, epsrel=1e-12, limit=400
    )
    return val - 0.5 - math.log(math.sqrt(2.0 * math.pi) * rho)


def _verify_kl_cauchy_domination(rng):
    worst, worst_case = -math.inf, ""
    for mu in (0.0, 1.0, 5.0):
        for rho in (0.1, 1.0, 10.0):
            truth = _quadrature_kl_gaussian_cauchy(mu, rho)
            for mode in ("quadratic", "tight"):
                excess = truth - kl_gaussian_cauchy_bound(np.array([mu]), rho, mode)
                if excess > worst:
                    worst, worst_case = excess, f"mu={mu} rho={rho} mode={mode}"
    detail = f"largest true-KL excess over the bound at {worst_case}"
    return worst, 1e-6, "<=", detail


def _verify_matrix_norm_domination(rng):
    worst, worst_case = 0.0, ""
    for m in (4, 8, 16):
        profiles = (
            ("zero mean, unit variances", np.zeros((m, m)), np.ones((m, m))),
            (
                "random mean, mixed variances",
                rng.standard_normal((m, m)),
                rng.uniform(0.1, 2.0, size=(m, m)),
            ),
            (
                "identity mean, row-skewed variances",
                2.0 * np.eye(m),
                np.tile(np.linspace(0.05, 1.0, m)[:, None], (1, m)),
            ),
        )
        for label, mean, var in profiles:
            bound = gaussian_spectral_bound(mean, var)
            draws = mean + np.sqrt(var) * rng.standard_normal((10_000, m, m))
            sq = np.linalg.norm(draws, ord=2, axis=(1, 2)) ** 2
            se = float(sq.std(ddof=1)) / math.sqrt(sq.size)
            ratio = math.sqrt(float(sq.mean()) + 3.0 * se) / bound
            if ratio > worst:
                worst, worst_case = ratio, f"m={m}, {label}"
    return worst, 1.0, "<=", f"tightest case {worst_case}"


def _verify_gradient_metric_domination(rng):
    # sample estimate of a direction's length in the centered-gradient
    # metric (half population, half training sample) against the
    # spectral-norm upper bound, over 10 random directions
    seed = int(rng.integers(2**32))
    net = train_toy_mlp(16, 3, seed=seed)
    stats = spectral_stats(net)
    task = GaussianBlobTask(16)

    # the trainer draws its data before initializing weights, so the same
    # seed reproduces the training sample
    train_rng = np.random.default_rng(seed)
    xs_s, ys_s = task.sample(256, train_rng)

    pop_count, chunk = 20_000, 4_000
    pop_x, pop_y = task.sample(pop_count, rng)
    grad_sum = np.zeros((3, 16, 16))
    for lo in range(0, pop_count, chunk):
        grads = per_example_gradients(
            net, pop_x[lo : lo + chunk], pop_y[lo : lo + chunk], loss="hinge"
        )
        grad_sum += grads.sum(axis=0)
    mean_grad = grad_sum / pop_count

    directions = np.array([rng.standard_normal((3, 16, 16)) for _ in range(10)])
    pop_sq = []
    for lo in range(0, pop_count, chunk):
        grads = per_example_gradients(
            net, pop_x[lo : lo + chunk], pop_y[lo : lo + chunk], loss="hinge"
        )
        inner = np.einsum("bkij,dkij->bd", grads - mean_grad, directions)
        pop_sq.append(inner**2)
    pop_sq = np.concatenate(pop_sq, axis=0)
    grads_s = per_example_gradients(net, xs_s, ys_s, loss="hinge")
    s_sq = np.einsum("bkij,dkij->bd", grads_s - mean_grad, directions) ** 2

    worst, worst_case = 0.0, ""
    for d in range(10):
        mixed = 0.5 * float(pop_sq[:, d].mean()) + 0.5 * float(s_sq[:, d].mean())
        estimate = math.sqrt(mixed)
        # the training-sample half is exact given the net; only the
        # population half carries sampling error
        se_mixed = 0.5 * float(pop_sq[:, d].std(ddof=1)) / math.sqrt(pop_count)
        se = se_mixed / (2.0 * estimate) if estimate > 0 else 0.0
        direction_norms = [
            float(np.linalg.norm(directions[d, k], ord=2)) for k in range(3)
        ]
        bound = gradient_norm_bound(stats, direction_norms)
        ratio = estimate / (bound + 3.0 * se)
        if ratio > worst:
            worst, worst_case = (
                ratio,
                f"direction {d}: estimate {estimate:.4f} vs bound {bound:.4f}",
            )
    return worst, 1.0, "<=", worst_case


def _verify_contraction_closed_forms(rng):
    w = _reference_net()
    gamma = gaussian_spectral_factor(16)
    worst = 0.0
    for rho in (0.5, 1.0, 2.0):
        sigma = rho / (math.sqrt(16.0) * 3 * gamma)
        noise = tuple(np.full((16, 16), sigma) for _ in range(3))
        for t in (0.0, 1.0, 3.0):
            bounds = contraction_velocity_bounds(w, w, noise, t, envelope=True)
            base = rho * math.exp(-t) * 2.0 * math.exp(rho) / gamma
            worst = max(
                worst,
                _rel_err(bounds.metric_route, base * math.sqrt(16.0)),
                _rel_err(bounds.gradient_route, base),
            )
    detail = "stationary isotropic specialization at t in {0,1,3}, both routes"
    return worst, 1e-10, "<=", detail


def _verify_derand_dual_route(rng):
    w = _reference_net()
    stats = spectral_stats(w)
    worst, worst_case = 0.0, ""
    for mode in ("standard", "tight"):
        cert = derand_cost(w, 1.0, 10_000, 0.1, mode=mode)
        oracle = float(
            high_precision_derand_cost(
                stats.width,
                list(stats.layer_norms),
                list(stats.layer_frobenius),
                1.0,
                1.0,
                1.0,
                10_000,
                0.1,
                mode=mode,
            )
        )
        err = _rel_err(cert.derand_cost, oracle)
        if err > worst:
            worst, worst_case = err, f"{mode}: {cert.derand_cost} vs oracle {oracle}"
    return worst, 1e-8, "<=", worst_case


def _verify_derand_vanishing_noise(rng):
    w = _reference_net()
    tiny = derand_cost(w, 1e-6, 10_000, 0.1).derand_cost
    unit = derand_cost(w, 1.0, 10_000, 0.1).derand_cost
    detail = f"cost {tiny:.3e} at rho=1e-6 vs {unit:.4f} at rho=1"
    return tiny / unit, 1e-4, "<", detail


def _verify_rate_scaling(rng):
    w = _reference_net()
    n = 10_000
    gap_small = risk_certificate(w, n, 0.1, 0.0).total
    gap_large = risk_certificate(w, 4 * n, 0.1, 0.0).total
    factor = gap_small / gap_large
    detail = f"certificate gap shrink factor {factor:.4f} for n -> 4n"
    return abs(factor - 2.0), 0.2, "<=", detail


def _verify_gradient_finite_difference(rng):
    seed = int(rng.integers(2**32))
    net = train_toy_mlp(16, 3, seed=seed)
    x, y = GaussianBlobTask(16).sample(1, rng)
    x, y = x[0], float(y[0])
    grads = per_example_gradient(net, x, y, loss="logistic")
    flat = np.concatenate([g.ravel() for g in grads])
    base = [np.array(layer) for layer in net.layers]

    def loss_at(vector):
        mats = tuple(
            vector[k * 256 : (k + 1) * 256].reshape(16, 16) for k in range(3)
        )
        score = float(network_output(NetworkWeights(layers=mats), x)[0])
        return float(np.logaddexp(0.0, -y * score))

    theta = np.concatenate([m.ravel() for m in base])
    coords = rng.choice(theta.size, size=10, replace=False)
    step = 1e-6
    worst, worst_case = 0.0, ""
    for coord in coords:
        bumped = theta.copy()
        bumped[coord] += step
        up = loss_at(bumped)
        bumped[coord] -= 2.0 * step
        down = loss_at(bumped)
        fd = (up - down) / (2.0 * step)
        err = abs(fd - flat[coord]) / max(abs(flat[coord]), 1e-12)
        if err > worst:
            worst, worst_case = err, f"coordinate {int(coord)}"
    return worst, 1e-5, "<=", f"worst of 10 coordinates at {worst_case}"


def _verify_signal_reconstruction(rng):
    seed = int(rng.integers(2**32))
    net = train_toy_mlp(16, 3, seed=seed)
    stats = spectral_stats(net)
    xs, ys = GaussianBlobTask(16).sample(10, rng)
    worst = 0.0
    for x, y in zip(xs, ys):
        direct = per_example_gradient(net, x, float(y), loss="hinge")
        signals = signal_decomposition(net, x, float(y), loss="hinge")
        rebuilt = gradient_from_signals(stats, signals)
        for d, r in zip(direct, rebuilt):
            scale = max(float(np.linalg.norm(d)), 1e-12)
            worst = max(worst, float(np.linalg.norm(r - d)) / scale)
    return worst, 1e-8, "<=", "outer-product rebuild vs backprop on 10 examples"


_REGISTRY = (
    ("increment_coverage", _verify_increment_coverage),
    ("hoeffding_moment", _verify_hoeffding_moment),
    ("bennett_moment", _verify_bennett_moment),
    ("rademacher_moment_gaussian", _verify_rademacher_moment_gaussian),
    ("rademacher_moment_bounded", _verify_rademacher_moment_bounded),
    ("finite_world_coverage", _verify_finite_world_coverage),
    ("kl_cauchy_domination", _verify_kl_cauchy_domination),
    ("matrix_norm_domination", _verify_matrix_norm_domination),
    ("gradient_metric_domination", _verify_gradient_metric_domination),
    ("contraction_closed_forms", _verify_contraction_closed_forms),
    ("derand_dual_route", _verify_derand_dual_route),
    ("derand_vanishing_noise", _verify_derand_vanishing_noise),
    ("rate_scaling", _verify_rate_scaling),
    ("gradient_finite_difference", _verify_gradient_finite_difference),
    ("signal_reconstruction", _verify_signal_reconstruction),
)

VERIFIER_NAMES = tuple(name for name, _ in _REGISTRY)


def _holds(observed, threshold, comparison):
    if comparison == "<=":
        return bool(observed <= threshold)
    if comparison == "<":
        return bool(observed < threshold)
    raise ValueError(f"unknown comparison {comparison!r}")


def run_verify_suite(config):
    """Run the full verifier battery under config.seed.

    Returns a report whose "verifiers" table has one row per verifier:
    name, passed (0/1), observed, threshold, comparison, runtime_seconds,
    detail. A verifier whose internal deterministic cross-check raises is
    recorded as failed with an infinite observed value rather than
    aborting the suite.
    """
    rows = []
    failed = []
    for index, (name, fn) in enumerate(_REGISTRY):
        rng = _child_rng(config.seed, _STREAM_BASE + index)
        start = time.perf_counter()
        try:
            observed, threshold, comparison, detail = fn(rng)
            passed = _holds(observed, threshold, comparison)
        except VerificationError as exc:
            observed, threshold, comparison = math.inf, 0.0, "<="
            detail, passed = f"deterministic cross-check raised: {exc}", False
        runtime = time.perf_counter() - start
        if not passed:
            failed.append(name)
        rows.append(
            [
                name,
                int(passed),
                float(observed),
                float(threshold),
                comparison,
                runtime,
                detail,
            ]
        )
    table = Table(
        columns=[
            "name",
            "passed",
            "observed",
            "threshold",
            "comparison",
            "runtime_seconds",
            "detail",
        ],
        rows=rows,
    )
    return Report(
        command="verify",
        seed=config.seed,
        config_hash=config_hash(config.to_mapping()),
        timestamp=_timestamp(config),
        scalars={
            "verifier_count": len(rows),
            "failed_count": len(failed),
            "total_runtime_seconds": float(sum(r[5] for r in rows)),
        },
        tables={"verifiers": table},
        warnings=tuple(f"verifier failed: {name}" for name in failed),
    )
