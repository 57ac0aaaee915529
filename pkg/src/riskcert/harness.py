"""Experiment runners behind the CLI: certification, flow simulation, and
toy training, each producing a deterministic Report plus rendered figures.

Randomness discipline: every runner derives independent child generators
from the single config seed, so reports are byte-identical across runs and
no runner perturbs another's stream.
"""

import datetime
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import mlp, nn_cert, weights_io
from .divergences import (
    DiagonalGaussian,
    kl_gaussian_cauchy_bound,
    kl_gaussian_gaussian,
)
from .errors import InvalidInputError
from .figures import save_bar_figure, save_line_figure
from .pac_core import subgaussian_pac_bound
from .reports import Report, Table, config_hash, write_report
from .transport import (
    ContractionFlow,
    VelocityPair,
    ot_distance_upper,
    snapshot,
    wasserstein_velocity,
)
from .worlds import GaussianBlobTask, SquaredLossUniformWorld

__all__ = [
    "ExperimentConfig",
    "run_certify",
    "run_derand_cost",
    "run_flow_sim",
    "run_train_toy",
    "emit_report",
]

_TRAIN_KEYS = ("width", "depth", "epochs", "count", "learning_rate", "loss")


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of one run; everything is explicit so the config hash
    pins the experiment exactly."""

    seed: int = 0
    n: int = 10_000
    delta: float = 0.1
    rho_grid: tuple = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0)
    t_max: float = 8.0
    steps: int = 64
    mc_samples: int = 4_000
    mode: str = "standard"
    weights_path: str = None
    train: dict = field(default_factory=dict)
    out_dir: str = None
    stamp: bool = False

    def __post_init__(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidInputError("seed must be a nonnegative integer")
        if not isinstance(self.n, int) or self.n < 1:
            raise InvalidInputError("n must be an integer >= 1")
        if not 0.0 < self.delta < 1.0:
            raise InvalidInputError("delta must be in (0, 1)")
        grid = tuple(float(r) for r in self.rho_grid)
        if not grid or any(not (r > 0 and math.isfinite(r)) for r in grid):
            raise InvalidInputError("rho_grid must be nonempty with entries > 0")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise InvalidInputError("t_max must be positive and finite")
        if not isinstance(self.steps, int) or self.steps < 1:
            raise InvalidInputError("steps must be an integer >= 1")
        if not isinstance(self.mc_samples, int) or self.mc_samples < 1:
            raise InvalidInputError("mc_samples must be an integer >= 1")
        if self.mode not in ("standard", "tight"):
            raise InvalidInputError("mode must be 'standard' or 'tight'")
        unknown = set(self.train) - set(_TRAIN_KEYS)
        if unknown:
            raise InvalidInputError(
                f"unknown train keys {sorted(unknown)}; allowed {_TRAIN_KEYS}"
            )
        object.__setattr__(self, "rho_grid", grid)
        object.__setattr__(self, "train", dict(self.train))

    @classmethod
    def from_mapping(cls, mapping, **overrides):
        if not isinstance(mapping, dict):
            raise InvalidInputError("config must be a JSON object")
        unknown = set(mapping) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise InvalidInputError(f"unknown config keys {sorted(unknown)}")
        merged = dict(mapping)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        if "rho_grid" in merged:
            merged["rho_grid"] = tuple(merged["rho_grid"])
        return cls(**merged)

    def to_mapping(self):
        return {
            "seed": self.seed,
            "n": self.n,
            "delta": self.delta,
            "rho_grid": list(self.rho_grid),
            "t_max": self.t_max,
            "steps": self.steps,
            "mc_samples": self.mc_samples,
            "mode": self.mode,
            "weights_path": self.weights_path,
            "train": dict(self.train),
            "stamp": self.stamp,
        }


def _child_rng(seed, stream):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def _timestamp(config):
    if not config.stamp:
        return None
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _resolve_weights(config, loss_history=None):
    """Weights from file when a path is given, otherwise a freshly trained
    toy network at the configured seed."""
    if config.weights_path:
        return weights_io.load_weights(config.weights_path), "file"
    spec = {"width": 16, "depth": 3}
    spec.update(config.train)
    return (
        mlp.train_toy_mlp(
            seed=config.seed, loss_history=loss_history, **spec
        ),
        "trained",
    )


def run_certify(config):
    """The full certificate pipeline: empirical risk of the deterministic
    center, the noise-scale-1 de-randomization cost, the heavy-tailed
    reference deviation, and the noise-scale sweep showing the trade-off
    between certificate terms."""
    w, source = _resolve_weights(config)
    w = nn_cert.rebalance(w)
    stats = nn_cert.spectral_stats(w)

    eval_rng = _child_rng(config.seed, 1)
    task = GaussianBlobTask(w.width)
    xs, ys = task.sample(config.mc_samples, eval_rng)
    emp = mlp.zero_one_risk(w, xs, ys)

    breakdown = nn_cert.risk_certificate(
        w, config.n, config.delta, emp, mode=config.mode, rebalance_layers=True
    )
    baseline = nn_cert.vc_baseline(stats.dimension, stats.depth, config.n)

    half = config.delta / 2.0
    rows = []
    for rho in config.rho_grid:
        cert = nn_cert.derand_cost(w, rho, config.n, half, mode=config.mode)
        predictor = nn_cert.stochastic_predictor(w, rho)
        kl = kl_gaussian_cauchy_bound(
            w.flatten(), predictor.stddev, mode="quadratic"
        )
        reference = subgaussian_pac_bound(
            0.5, kl + math.log(1.0 / half), config.n
        )
        total = emp + cert.derand_cost + reference
        rows.append(
            (
                rho,
                cert.entropy_term,
                cert.residual_term,
                cert.derand_cost,
                reference,
                total,
            )
        )

    warnings = []
    if breakdown.total >= 1.0:
        warnings.append(
            "certificate total >= 1: vacuous at this scale, as expected for "
            "desk-size samples"
        )

    scalars = {
        "empirical_risk": emp,
        "derand_cost": breakdown.chaining_cost + breakdown.transport_cost,
        "chaining_cost": breakdown.chaining_cost,
        "transport_cost": breakdown.transport_cost,
        "reference_deviation": breakdown.reference_deviation,
        "total": breakdown.total,
        "vc_baseline": baseline,
        "depth_normalized_radius": stats.depth_normalized_radius,
        "total_radius": stats.total_radius,
        "weight_norm": stats.weight_norm,
        "width": stats.width,
        "depth": stats.depth,
        "dimension": stats.dimension,
        "n": config.n,
        "delta": config.delta,
        "weights_source": source,
    }
    return Report(
        command="certify",
        seed=config.seed,
        config_hash=config_hash(config.to_mapping()),
        timestamp=_timestamp(config),
        scalars=scalars,
        tables={
            "rho_sweep": Table(
                columns=(
                    "rho",
                    "entropy_term",
                    "residual_term",
                    "derand_cost",
                    "reference_deviation",
                    "total",
                ),
                rows=tuple(rows),
            )
        },
        warnings=tuple(warnings),
    )


def run_derand_cost(config, rho=1.0):
    """De-randomization cost of the resolved network at one noise scale:
    the term breakdown at the requested scale in both entropy flavors,
    plus a log-spaced scale sweep around it for the report figure."""
    if not (isinstance(rho, (int, float)) and rho > 0 and math.isfinite(rho)):
        raise InvalidInputError("rho must be positive and finite")
    rho = float(rho)
    w, source = _resolve_weights(config)
    w = nn_cert.rebalance(w)
    stats = nn_cert.spectral_stats(w)
    cert = nn_cert.derand_cost(w, rho, config.n, config.delta, mode=config.mode)
    other_mode = "tight" if config.mode == "standard" else "standard"
    other = nn_cert.derand_cost(w, rho, config.n, config.delta, mode=other_mode)

    rows = []
    for scale in np.geomspace(rho / 16.0, rho * 16.0, 9):
        c = nn_cert.derand_cost(
            w, float(scale), config.n, config.delta, mode=config.mode
        )
        rows.append((float(scale), c.entropy_term, c.residual_term, c.derand_cost))

    scalars = {
        "rho": rho,
        "mode": config.mode,
        "derand_cost": cert.derand_cost,
        "entropy_term": cert.entropy_term,
        "residual_term": cert.residual_term,
        "transport_part": cert.transport_part,
        f"derand_cost_{other_mode}": other.derand_cost,
        "noise_stddev": nn_cert.stochastic_predictor(w, rho).stddev,
        "depth_normalized_radius": stats.depth_normalized_radius,
        "total_radius": stats.total_radius,
        "width": stats.width,
        "depth": stats.depth,
        "n": config.n,
        "delta": config.delta,
        "weights_source": source,
    }
    return Report(
        command="derand-cost",
        seed=config.seed,
        # rho is a per-invocation argument, not a config field, but it
        # changes the report content, so it joins the hashed mapping
        config_hash=config_hash({**config.to_mapping(), "rho": rho}),
        timestamp=_timestamp(config),
        scalars=scalars,
        tables={
            "cost_vs_rho": Table(
                columns=("rho", "entropy_term", "residual_term", "derand_cost"),
                rows=tuple(rows),
            )
        },
    )


def run_flow_sim(config):
    """Contraction-flow simulation on the closed-form scalar world: the
    increment bound along a decay-uniform grid and its time integral."""
    world = SquaredLossUniformWorld()
    flow = ContractionFlow(
        initial=DiagonalGaussian(np.array([1.0]), np.array([1.0])),
        attractor=np.array([0.0]),
    )
    sample_rng = _child_rng(config.seed, 2)
    sample = world.sample(config.n, sample_rng)
    mixed_second = 0.5 * (
        world.gradient_second_moment + float(np.mean(sample**2))
    )

    def h_delta_fn(t):
        q_t = snapshot(flow, t).posterior
        return kl_gaussian_gaussian(q_t, flow.initial) + math.log(
            1.0 / config.delta
        )

    def velocity_fn(t):
        wass = wasserstein_velocity(flow, t)
        return VelocityPair(
            wasserstein=wass,
            deviation_based=wass * math.sqrt(mixed_second),
            lipschitz=world.lipschitz_deviation,
        )

    breakdown = ot_distance_upper(
        flow,
        config.t_max,
        config.steps,
        h_delta_fn,
        velocity_fn,
        config.n,
    )
    rows = []
    for t, increment in breakdown.grid:
        pair = velocity_fn(t)
        rows.append(
            (t, h_delta_fn(t), pair.wasserstein, pair.deviation_based, increment)
        )
    scalars = {
        "chaining_cost": breakdown.chaining_cost,
        "transport_cost": breakdown.transport_cost,
        "total": breakdown.total,
        "tail_estimate": breakdown.tail_estimate,
        "monotone": int(breakdown.monotone),
        "rule": breakdown.rule,
        "steps": config.steps,
        "t_max": config.t_max,
        "n": config.n,
        "delta": config.delta,
    }
    return Report(
        command="flow-sim",
        seed=config.seed,
        config_hash=config_hash(config.to_mapping()),
        timestamp=_timestamp(config),
        scalars=scalars,
        tables={
            "increments": Table(
                columns=(
                    "t",
                    "h_delta",
                    "wasserstein_velocity",
                    "deviation_velocity",
                    "increment",
                ),
                rows=tuple(rows),
            )
        },
    )


def run_train_toy(config):
    """Train the toy network, evaluate it, and report spectral statistics
    alongside the loss curve; the trained weights are saved next to the
    report when an output directory is set."""
    if config.weights_path:
        raise InvalidInputError(
            "train-toy trains a fresh network; drop weights_path"
        )
    history = []
    w, _ = _resolve_weights(config, loss_history=history)
    stats = nn_cert.spectral_stats(w)
    eval_rng = _child_rng(config.seed, 1)
    task = GaussianBlobTask(w.width)
    xs, ys = task.sample(config.mc_samples, eval_rng)
    loss_name = config.train.get("loss", "hinge")

    artifacts = []
    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        weights_name = "train-toy.weights.nnw"
        weights_io.save_weights(
            w, os.path.join(config.out_dir, weights_name), fmt="binary"
        )
        # recorded relative to the report directory so the report bytes do
        # not depend on where the run landed
        artifacts.append(("weights_binary", weights_name))

    scalars = {
        "final_train_loss": history[-1],
        "epochs": len(history),
        "holdout_zero_one_risk": mlp.zero_one_risk(w, xs, ys),
        "holdout_loss": mlp.empirical_loss(w, xs, ys, loss=loss_name),
        "lipschitz_loss": w.lipschitz_loss,
        "input_radius": w.input_radius,
        "depth_normalized_radius": stats.depth_normalized_radius,
        "total_radius": stats.total_radius,
        "weight_norm": stats.weight_norm,
        "width": stats.width,
        "depth": stats.depth,
    }
    tables = {
        "loss_curve": Table(
            columns=("epoch", "train_loss"),
            rows=tuple(
                (epoch, value) for epoch, value in enumerate(history, start=1)
            ),
        )
    }
    if artifacts:
        tables["artifacts"] = Table(columns=("name", "path"), rows=tuple(artifacts))
    return Report(
        command="train-toy",
        seed=config.seed,
        config_hash=config_hash(config.to_mapping()),
        timestamp=_timestamp(config),
        scalars=scalars,
        tables=tables,
    )


def _render_figures(report, out_dir, basename):
    paths = []
    if "rho_sweep" in report.tables:
        t = report.tables["rho_sweep"]
        cols = {name: idx for idx, name in enumerate(t.columns)}
        x = [row[cols["rho"]] for row in t.rows]
        series = {
            name: [row[cols[name]] for row in t.rows]
            for name in ("derand_cost", "reference_deviation", "total")
        }
        paths.append(
            save_line_figure(
                os.path.join(out_dir, f"{basename}.rho_sweep.png"),
                x,
                series,
                xlabel="noise scale rho",
                ylabel="certificate terms",
                title="Certificate terms vs noise scale",
                logx=True,
                logy=True,
            )
        )
    if "increments" in report.tables:
        t = report.tables["increments"]
        cols = {name: idx for idx, name in enumerate(t.columns)}
        x = [row[cols["t"]] for row in t.rows]
        series = {
            "increment": [row[cols["increment"]] for row in t.rows],
            "wasserstein_velocity": [
                row[cols["wasserstein_velocity"]] for row in t.rows
            ],
        }
        paths.append(
            save_line_figure(
                os.path.join(out_dir, f"{basename}.increments.png"),
                x,
                series,
                xlabel="flow time t",
                ylabel="increment bound",
                title="Increment bound along the contraction flow",
                logy=True,
            )
        )
    if "cost_vs_rho" in report.tables:
        t = report.tables["cost_vs_rho"]
        cols = {name: idx for idx, name in enumerate(t.columns)}
        x = [row[cols["rho"]] for row in t.rows]
        series = {
            name: [row[cols[name]] for row in t.rows]
            for name in ("entropy_term", "residual_term", "derand_cost")
        }
        paths.append(
            save_line_figure(
                os.path.join(out_dir, f"{basename}.cost_vs_rho.png"),
                x,
                series,
                xlabel="noise scale rho",
                ylabel="cost terms",
                title="De-randomization cost vs noise scale",
                logx=True,
                logy=True,
            )
        )
    if "verifiers" in report.tables:
        t = report.tables["verifiers"]
        cols = {name: idx for idx, name in enumerate(t.columns)}
        ratios = [
            row[cols["observed"]] / row[cols["threshold"]]
            if row[cols["threshold"]] > 0
            else row[cols["observed"]]
            for row in t.rows
        ]
        # a failed deterministic cross-check records an infinite observed
        # value; the chart only makes sense on finite ratios
        if all(math.isfinite(r) for r in ratios):
            paths.append(
                save_bar_figure(
                    os.path.join(out_dir, f"{basename}.verifiers.png"),
                    [row[cols["name"]] for row in t.rows],
                    ratios,
                    [1.0] * len(ratios),
                    title="Verifier margins (observed / threshold)",
                )
            )
    if "loss_curve" in report.tables:
        t = report.tables["loss_curve"]
        cols = {name: idx for idx, name in enumerate(t.columns)}
        x = [row[cols["epoch"]] for row in t.rows]
        series = {"train_loss": [row[cols["train_loss"]] for row in t.rows]}
        paths.append(
            save_line_figure(
                os.path.join(out_dir, f"{basename}.loss_curve.png"),
                x,
                series,
                xlabel="epoch",
                ylabel="training loss",
                title="Toy training loss",
            )
        )
    return paths


def emit_report(report, out_dir, basename=None, figures=True):
    """Write the JSON report, its CSV tables, and the figures for its
    tables; returns every path written."""
    basename = basename or report.command
    paths = write_report(report, out_dir, basename=basename)
    if figures:
        paths.extend(_render_figures(report, out_dir, basename))
    return paths
