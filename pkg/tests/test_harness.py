"""Experiment harness: config handling, runners, determinism, emission."""

import json

import numpy as np
import pytest

from riskcert import weights_io
from riskcert.errors import InvalidInputError
from riskcert.mlp import train_toy_mlp
from riskcert.harness import (
    ExperimentConfig,
    _child_rng,
    emit_report,
    run_certify,
    run_derand_cost,
    run_flow_sim,
    run_train_toy,
)


def fast_config(**overrides):
    fields = dict(
        seed=3,
        n=400,
        mc_samples=200,
        steps=16,
        rho_grid=(0.5, 1.0),
        train={"epochs": 8, "count": 64},
    )
    fields.update(overrides)
    return ExperimentConfig(**fields)


def column(report, table, name):
    t = report.tables[table]
    idx = t.columns.index(name)
    return [row[idx] for row in t.rows]


class TestExperimentConfig:
    def test_defaults_construct(self):
        config = ExperimentConfig()
        assert config.n == 10_000
        assert config.mode == "standard"
        assert config.stamp is False

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"seed": -1},
            {"seed": 1.5},
            {"n": 0},
            {"delta": 0.0},
            {"delta": 1.0},
            {"rho_grid": ()},
            {"rho_grid": (0.0,)},
            {"t_max": 0.0},
            {"steps": 0},
            {"mc_samples": 0},
            {"mode": "loose"},
            {"train": {"widht": 4}},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(InvalidInputError):
            ExperimentConfig(**kwargs)

    def test_rho_grid_normalized(self):
        config = ExperimentConfig(rho_grid=[1, 2])
        assert config.rho_grid == (1.0, 2.0)

    def test_from_mapping_rejects_unknown_keys(self):
        with pytest.raises(InvalidInputError, match="unknown config keys"):
            ExperimentConfig.from_mapping({"dleta": 0.05})

    def test_from_mapping_rejects_non_dict(self):
        with pytest.raises(InvalidInputError):
            ExperimentConfig.from_mapping([1, 2])

    def test_overrides_beat_mapping(self):
        config = ExperimentConfig.from_mapping({"seed": 1, "n": 50}, seed=9)
        assert config.seed == 9
        assert config.n == 50

    def test_none_overrides_skipped(self):
        config = ExperimentConfig.from_mapping({"seed": 4}, seed=None, n=None)
        assert config.seed == 4
        assert config.n == 10_000

    def test_mapping_roundtrip(self):
        config = fast_config()
        rebuilt = ExperimentConfig.from_mapping(config.to_mapping())
        assert rebuilt == config

    def test_out_dir_not_hashed(self):
        # where the report lands must not change what the report says
        assert "out_dir" not in fast_config().to_mapping()


class TestChildStreams:
    def test_reproducible(self):
        assert _child_rng(7, 1).random() == _child_rng(7, 1).random()

    def test_streams_independent(self):
        assert _child_rng(7, 1).random() != _child_rng(7, 2).random()


@pytest.fixture(scope="module")
def certify_report():
    return run_certify(fast_config())


@pytest.fixture(scope="module")
def derand_report():
    return run_derand_cost(fast_config(), rho=0.5)


@pytest.fixture(scope="module")
def flow_report():
    return run_flow_sim(fast_config())


class TestRunCertify:
    @pytest.fixture
    def report(self, certify_report):
        return certify_report

    def test_metadata(self, report):
        assert report.command == "certify"
        assert report.seed == 3
        assert len(report.config_hash) == 16
        assert report.timestamp is None

    def test_total_dominates_empirical_risk_in_every_row(self, report):
        emp = report.scalars["empirical_risk"]
        for total in column(report, "rho_sweep", "total"):
            assert total >= emp

    def test_breakdown_additive(self, report):
        s = report.scalars
        assert s["derand_cost"] == pytest.approx(
            s["chaining_cost"] + s["transport_cost"]
        )
        assert s["total"] == pytest.approx(
            s["empirical_risk"] + s["derand_cost"] + s["reference_deviation"]
        )

    def test_sweep_follows_rho_grid(self, report):
        assert column(report, "rho_sweep", "rho") == [0.5, 1.0]

    def test_derand_cost_increases_with_rho(self, report):
        costs = column(report, "rho_sweep", "derand_cost")
        assert costs == sorted(costs)

    def test_vacuous_certificate_warns(self, report):
        assert report.scalars["total"] >= 1.0
        assert any("vacuous" in w for w in report.warnings)

    def test_deterministic_bytes(self, report):
        again = run_certify(fast_config())
        assert again.to_json_bytes() == report.to_json_bytes()

    def test_seed_changes_content(self, report):
        other = run_certify(fast_config(seed=4))
        assert other.to_json_bytes() != report.to_json_bytes()

    def test_weights_file_source(self, tmp_path):
        w = train_toy_mlp(16, 3, epochs=8, count=64, seed=3)
        path = tmp_path / "net.nnw"
        weights_io.save_weights(w, path)
        report = run_certify(fast_config(weights_path=str(path)))
        assert report.scalars["weights_source"] == "file"


class TestRunDerandCost:
    @pytest.fixture
    def report(self, derand_report):
        return derand_report

    def test_scalars(self, report):
        s = report.scalars
        assert s["rho"] == 0.5
        assert s["mode"] == "standard"
        assert s["derand_cost"] == pytest.approx(
            s["entropy_term"] + s["residual_term"]
        )
        assert s["derand_cost_tight"] <= s["derand_cost"]

    def test_sweep_table(self, report):
        rhos = column(report, "cost_vs_rho", "rho")
        costs = column(report, "cost_vs_rho", "derand_cost")
        assert len(rhos) == 9
        assert rhos == sorted(rhos)
        assert rhos[0] == pytest.approx(0.5 / 16)
        assert rhos[-1] == pytest.approx(0.5 * 16)
        assert costs == sorted(costs)

    def test_rho_in_config_hash(self, report):
        other = run_derand_cost(fast_config(), rho=1.0)
        assert other.config_hash != report.config_hash

    def test_rejects_bad_rho(self):
        for rho in (0.0, -1.0, float("inf")):
            with pytest.raises(InvalidInputError):
                run_derand_cost(fast_config(), rho=rho)

    def test_deterministic_bytes(self, report):
        assert (
            run_derand_cost(fast_config(), rho=0.5).to_json_bytes()
            == report.to_json_bytes()
        )


class TestRunFlowSim:
    @pytest.fixture
    def report(self, flow_report):
        return flow_report

    def test_table_matches_steps(self, report):
        assert len(report.tables["increments"].rows) == 16

    def test_total_is_chaining_plus_transport(self, report):
        s = report.scalars
        assert s["total"] == pytest.approx(s["chaining_cost"] + s["transport_cost"])

    def test_increments_positive(self, report):
        assert all(v > 0 for v in column(report, "increments", "increment"))

    def test_velocity_ordering(self, report):
        # deviation velocity pairs the flow with gradients of a 1-bounded
        # deviation, so it cannot exceed the metric-only speed by much;
        # on this world it stays below it
        ws = column(report, "increments", "wasserstein_velocity")
        vs = column(report, "increments", "deviation_velocity")
        assert all(v <= w * (1 + 1e-12) for v, w in zip(vs, ws))

    def test_deterministic_bytes(self, report):
        assert run_flow_sim(fast_config()).to_json_bytes() == report.to_json_bytes()

    def test_seed_changes_content(self, report):
        assert (
            run_flow_sim(fast_config(seed=5)).to_json_bytes()
            != report.to_json_bytes()
        )


class TestRunTrainToy:
    def test_rejects_weights_path(self, tmp_path):
        with pytest.raises(InvalidInputError, match="drop weights_path"):
            run_train_toy(fast_config(weights_path=str(tmp_path / "w.nnw")))

    def test_loss_curve_and_scalars(self):
        report = run_train_toy(fast_config())
        curve = column(report, "loss_curve", "train_loss")
        assert len(curve) == 8
        assert report.scalars["final_train_loss"] == curve[-1]
        assert 0.0 <= report.scalars["holdout_zero_one_risk"] <= 1.0

    def test_saves_weights_artifact(self, tmp_path):
        report = run_train_toy(fast_config(out_dir=str(tmp_path)))
        names = dict(report.tables["artifacts"].rows)
        loaded = weights_io.load_weights(tmp_path / names["weights_binary"])
        assert loaded.width == 16
        assert len(loaded.layers) == 3


class TestEmitReport:
    def test_certify_files(self, tmp_path):
        report = run_certify(fast_config())
        paths = emit_report(report, tmp_path)
        names = sorted(p.split("/")[-1] for p in paths)
        assert names == [
            "certify.json",
            "certify.rho_sweep.csv",
            "certify.rho_sweep.png",
        ]

    def test_figures_off(self, tmp_path):
        report = run_flow_sim(fast_config())
        paths = emit_report(report, tmp_path, figures=False)
        assert all(not p.endswith(".png") for p in paths)

    def test_byte_identical_emissions(self, tmp_path):
        report = run_certify(fast_config())
        emit_report(report, tmp_path / "a")
        emit_report(report, tmp_path / "b")
        for name in ("certify.json", "certify.rho_sweep.csv", "certify.rho_sweep.png"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_stamped_report_carries_timestamp(self):
        report = run_flow_sim(fast_config(stamp=True))
        assert report.timestamp is not None
        doc = json.loads(report.to_json_bytes())
        assert doc["timestamp"] == report.timestamp
