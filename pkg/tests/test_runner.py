import json

import numpy as np
import pytest

from kurasync.analysis import classify
from kurasync.integrator import IntegratorConfig, integrate
from kurasync.model import OscillatorSystem, normalize_frequencies, validate
from kurasync.runner import (
    ConfigError,
    ExperimentConfig,
    box_muller,
    derive_seed,
    load_system_json,
    read_trajectory_csv,
    run_experiment,
    sample_system,
    stream,
    sweep_coupling,
    sweep_table,
    system_stats,
    trajectory_header,
    verdict_dict,
    write_trajectory_csv,
)

from conftest import random_system


def small_config(tmp_path=None, **overrides):
    data = {
        "seed": 7,
        "n": 5,
        "omega_spec": {"kind": "normal", "mean": 1.0, "variance": 0.25, "centered": True},
        "coupling_spec": {"kind": "uniform", "lambda": 2.0},
        "integrator": {"t_end": 60.0},
    }
    if tmp_path is not None:
        data["outputs"] = {
            "trajectory_csv": str(tmp_path / "run.csv"),
            "summary_json": str(tmp_path / "run.summary.json"),
            "system_json": str(tmp_path / "run.system.json"),
        }
    data.update(overrides)
    return data


class TestConfig:
    def test_roundtrip(self):
        cfg = ExperimentConfig.from_dict(small_config())
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    @pytest.mark.parametrize(
        "patch",
        [
            {"extra": 1},
            {"omega_spec": {"kind": "normal", "mean": 0, "variance": 1, "sigma": 2}},
            {"coupling_spec": {"kind": "ring", "lambda": 1}},
            {"integrator": {"t_end": 10, "order": 4}},
            {"classifier": {"eps": 1}},
            {"outputs": {"plot_png": "x.png"}},
        ],
    )
    def test_unknown_keys_rejected(self, patch):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({**small_config(), **patch})

    @pytest.mark.parametrize(
        "patch",
        [
            {"n": 1},
            {"seed": -1},
            {"seed": 2**64},
            {"omega_spec": {"kind": "normal", "mean": 0, "variance": -1}},
            {"omega_spec": {"kind": "explicit", "values": [0, 1]}},
            {"coupling_spec": {"kind": "explicit", "matrix": [[0, 1], [1, 0]]}},
            {"integrator": {"dt": -1}},
        ],
    )
    def test_invalid_values_rejected(self, patch):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({**small_config(), **patch})

    def test_missing_required(self):
        data = small_config()
        del data["coupling_spec"]
        with pytest.raises(ConfigError, match="missing"):
            ExperimentConfig.from_dict(data)

    def test_asymmetric_explicit_matrix(self):
        data = small_config(n=2, coupling_spec={"kind": "explicit", "matrix": [[0, 1], [2, 0]]})
        with pytest.raises(ConfigError, match="asymmetric"):
            sample_system(ExperimentConfig.from_dict(data))

    def test_with_lambda_needs_uniform(self):
        cfg = ExperimentConfig.from_dict(small_config(coupling_spec={"kind": "gaussian_symmetric", "mean": 2, "variance": 0.5}))
        with pytest.raises(ConfigError):
            cfg.with_lambda(1.0)


class TestSampling:
    def test_centered(self):
        for seed in range(10):
            system, _ = sample_system(ExperimentConfig.from_dict(small_config(seed=seed, n=50)))
            assert abs(system.omega.sum()) <= 1e-12 * 50

    def test_gaussian_symmetric_is_valid(self):
        data = small_config(n=30, coupling_spec={"kind": "gaussian_symmetric", "mean": 2.0, "variance": 0.5})
        system, _ = sample_system(ExperimentConfig.from_dict(data))
        validate(system)
        assert not system.is_uniform()

    def test_same_seed_bit_identical(self):
        data = small_config(n=20, coupling_spec={"kind": "gaussian_symmetric", "mean": 0.0, "variance": 0.5})
        a, ta = sample_system(ExperimentConfig.from_dict(data))
        b, tb = sample_system(ExperimentConfig.from_dict(data))
        assert a == b and np.array_equal(ta, tb)

    def test_streams_are_independent(self):
        # changing the coupling spec must not disturb ω or θ0
        a, ta = sample_system(ExperimentConfig.from_dict(small_config()))
        b, tb = sample_system(
            ExperimentConfig.from_dict(small_config(coupling_spec={"kind": "gaussian_symmetric", "mean": 1, "variance": 1}))
        )
        assert np.array_equal(a.omega, b.omega) and np.array_equal(ta, tb)

    def test_theta0_on_circle(self):
        _, theta0 = sample_system(ExperimentConfig.from_dict(small_config(n=200)))
        assert np.all((theta0 >= 0) & (theta0 < 2 * np.pi))

    def test_box_muller_moments(self):
        z = box_muller(stream(1, 0), 200_001)
        assert z.size == 200_001
        assert abs(z.mean()) < 0.01 and abs(z.var() - 1) < 0.01

    def test_box_muller_pairs(self):
        # each uniform pair (u1, u2) gives r cos(2πu2), r sin(2πu2)
        u = stream(3, 0).random(2)
        z = box_muller(stream(3, 0), 2)
        r = np.sqrt(-2 * np.log(1 - u[0]))
        np.testing.assert_allclose(z, [r * np.cos(2 * np.pi * u[1]), r * np.sin(2 * np.pi * u[1])], rtol=1e-15)

    def test_variance_scaling(self):
        # the config field is a variance: N(1, 0.25) has standard deviation 0.5 (tolerances ≈ 5σ at n = 2000)
        data = small_config(n=2000, omega_spec={"kind": "normal", "mean": 1.0, "variance": 0.25})
        system, _ = sample_system(ExperimentConfig.from_dict(data))
        assert system.omega.mean() == pytest.approx(1.0, abs=0.06)
        assert system.omega.std() == pytest.approx(0.5, abs=0.04)

    def test_derive_seed(self):
        seeds = [derive_seed(5, i) for i in range(100)]
        assert len(set(seeds)) == 100
        assert derive_seed(5, 3) == derive_seed(5, 3)
        assert all(0 <= s < 2**64 for s in seeds)


class TestTrajectoryCsv:
    def test_header(self):
        assert trajectory_header(2) == ["t", "theta_1", "theta_2", "dtheta_1", "dtheta_2", "R", "Phi"]

    def test_roundtrip_exact(self, tmp_path):
        s = random_system(np.random.default_rng(4), 4)
        tr = integrate(s, [0.0, 1.0, 2.0, 3.0], IntegratorConfig(t_end=5.0))
        path = tmp_path / "t.csv"
        write_trajectory_csv(tr, path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(trajectory_header(4))
        assert path.read_text().endswith("\n")
        back = read_trajectory_csv(path, s)
        for name in ("times", "thetas", "theta_dots", "r_values", "phi_values"):
            assert np.array_equal(getattr(back, name), getattr(tr, name))

    def test_header_mismatch(self, tmp_path):
        s = OscillatorSystem.uniform([0.5, -0.5], 2.0)
        tr = integrate(s, [0, 0], IntegratorConfig(t_end=1.0))
        write_trajectory_csv(tr, tmp_path / "t.csv")
        with pytest.raises(ConfigError):
            read_trajectory_csv(tmp_path / "t.csv", OscillatorSystem.uniform([0, 0, 0], 1.0))


class TestRunExperiment:
    def test_outputs_written(self, tmp_path):
        summary = run_experiment(ExperimentConfig.from_dict(small_config(tmp_path)))
        data = json.loads((tmp_path / "run.summary.json").read_text())
        assert set(data) == {"config", "system_stats", "thresholds", "verdict", "r_final", "runtime_seconds"}
        assert data["r_final"] == summary.r_final
        assert (tmp_path / "run.csv").exists() and (tmp_path / "run.system.json").exists()

    def test_reproducible_summary(self, tmp_path):
        a = run_experiment(ExperimentConfig.from_dict(small_config()), write=False).to_dict()
        b = run_experiment(ExperimentConfig.from_dict(small_config()), write=False).to_dict()
        a.pop("runtime_seconds"), b.pop("runtime_seconds")
        assert json.dumps(a) == json.dumps(b)

    def test_stats_echo(self, tmp_path):
        run_experiment(ExperimentConfig.from_dict(small_config(tmp_path)))
        data = json.loads((tmp_path / "run.summary.json").read_text())
        system = load_system_json(tmp_path / "run.system.json")
        stats = system_stats(system)
        assert data["system_stats"]["omega_max_abs"] == stats["omega_max_abs"]
        assert data["system_stats"]["omega_range"] == stats["omega_range"]

    def test_classify_on_csv_reproduces_witnesses(self, tmp_path):
        run_experiment(ExperimentConfig.from_dict(small_config(tmp_path)))
        data = json.loads((tmp_path / "run.summary.json").read_text())
        system = load_system_json(tmp_path / "run.system.json")
        traj = read_trajectory_csv(tmp_path / "run.csv", system)
        again = verdict_dict(classify(traj), system)
        assert json.dumps(again, sort_keys=True) == json.dumps(data["verdict"], sort_keys=True)

    def test_summary_system_is_normalized(self, tmp_path):
        run_experiment(ExperimentConfig.from_dict(small_config(tmp_path, d_spec={"kind": "explicit", "values": [1, 2, 3, 1, 1]})))
        system = load_system_json(tmp_path / "run.system.json")
        assert system == normalize_frequencies(system)

    def test_locked_small_run(self):
        s = run_experiment(ExperimentConfig.from_dict(small_config()), write=False)
        assert s.verdict["fss"] == "true" and s.verdict["disagreements"] == []
        assert s.thresholds["conclusion"] == "not excluded"


PAIR = {
    "seed": 1,
    "n": 2,
    "omega_spec": {"kind": "explicit", "values": [0.5, -0.5]},
    "coupling_spec": {"kind": "uniform", "lambda": 1.0},
    "theta0_spec": {"kind": "explicit", "values": [0.0, 0.0]},
}


class TestSweep:
    def test_two_oscillator_threshold(self):
        grid = [0.5, 0.8, 0.95, 1.05, 1.2, 2.0]
        summaries = sweep_coupling(ExperimentConfig.from_dict(PAIR), grid)
        flags = [s.verdict["fss"] for s in summaries]
        for lam, flag in zip(grid, flags):
            if abs(lam - 1.0) <= 0.05:
                continue
            assert flag == ("true" if lam > 1 else "false"), (lam, flag)

    def test_table_and_order(self):
        grid = [2.0, 0.5]
        summaries = sweep_coupling(ExperimentConfig.from_dict(PAIR), grid)
        table = sweep_table(grid, summaries)
        lines = table.splitlines()
        assert lines[0] == "lambda,fss_flag,r_final"
        assert lines[1].startswith("2.0,true,") and lines[2].startswith("0.5,false,")

    def test_parallel_matches_serial(self):
        grid = [0.5, 2.0]
        serial = sweep_coupling(ExperimentConfig.from_dict(PAIR), grid)
        parallel = sweep_coupling(ExperimentConfig.from_dict(PAIR), grid, jobs=2)
        assert [s.r_final for s in serial] == [p.r_final for p in parallel]
        assert [s.verdict for s in serial] == [p.verdict for p in parallel]
