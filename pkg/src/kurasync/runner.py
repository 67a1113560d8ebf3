"""Experiment configs, seeded sampling and the simulate/classify pipeline."""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import analysis
from .analysis import ClassifierConfig, SyncVerdict
from .integrator import IntegratorConfig, Trajectory, integrate
from .model import FloatArray, OscillatorSystem, TWO_PI, ValidationError, normalize_frequencies, validate
from .thresholds import critical_coupling, r_upper_bound

log = logging.getLogger(__name__)

STREAM_OMEGA, STREAM_COUPLING, STREAM_THETA0 = 0, 1, 2


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _check_keys(obj: Any, where: str, required: Sequence[str], optional: Sequence[str] = ()) -> None:
    if not isinstance(obj, Mapping):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ConfigError(f"{where}: missing keys {missing}")


_SPEC_KEYS = {
    "omega_spec": {
        "normal": (("kind", "mean", "variance"), ("centered",)),
        "explicit": (("kind", "values"), ()),
    },
    "coupling_spec": {
        "uniform": (("kind", "lambda"), ()),
        "gaussian_symmetric": (("kind", "mean", "variance"), ()),
        "explicit": (("kind", "matrix"), ()),
    },
    "d_spec": {"ones": (("kind",), ()), "explicit": (("kind", "values"), ())},
    "theta0_spec": {"uniform_circle": (("kind",), ()), "explicit": (("kind", "values"), ())},
}


def _check_spec(name: str, spec: Any, n: int) -> dict:
    if not isinstance(spec, Mapping) or "kind" not in spec:
        raise ConfigError(f"{name}: expected an object with a 'kind'")
    kinds = _SPEC_KEYS[name]
    if spec["kind"] not in kinds:
        raise ConfigError(f"{name}: unknown kind {spec['kind']!r}")
    required, optional = kinds[spec["kind"]]
    _check_keys(spec, name, required, optional)
    if "variance" in spec and not float(spec["variance"]) >= 0:
        raise ConfigError(f"{name}: variance must be >= 0")
    if "values" in spec and len(spec["values"]) != n:
        raise ConfigError(f"{name}: {len(spec['values'])} values for n={n}")
    if "matrix" in spec and np.shape(spec["matrix"]) != (n, n):
        raise ConfigError(f"{name}: matrix shape {np.shape(spec['matrix'])} for n={n}")
    return dict(spec)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    n: int
    omega_spec: dict
    coupling_spec: dict
    d_spec: dict = field(default_factory=lambda: {"kind": "ones"})
    theta0_spec: dict = field(default_factory=lambda: {"kind": "uniform_circle"})
    integrator: IntegratorConfig = IntegratorConfig()
    classifier: ClassifierConfig = ClassifierConfig()
    outputs: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        _check_keys(
            data,
            "config",
            ("seed", "n", "omega_spec", "coupling_spec"),
            ("d_spec", "theta0_spec", "integrator", "classifier", "outputs"),
        )
        seed, n = data["seed"], data["n"]
        if not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not isinstance(n, int) or n < 2:
            raise ConfigError("n must be an integer >= 2")
        specs = {
            name: _check_spec(name, data.get(name, default), n)
            for name, default in (
                ("omega_spec", None),
                ("coupling_spec", None),
                ("d_spec", {"kind": "ones"}),
                ("theta0_spec", {"kind": "uniform_circle"}),
            )
        }
        integ = data.get("integrator", {})
        _check_keys(integ, "integrator", (), IntegratorConfig.__dataclass_fields__)
        clf = data.get("classifier", {})
        _check_keys(clf, "classifier", (), ClassifierConfig.__dataclass_fields__)
        outputs = data.get("outputs", {})
        _check_keys(outputs, "outputs", (), ("trajectory_csv", "summary_json", "system_json"))
        try:
            return cls(
                seed=seed,
                n=n,
                integrator=IntegratorConfig(**integ),
                classifier=ClassifierConfig(**clf),
                outputs={k: v for k, v in outputs.items() if v is not None},
                **specs,
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n": self.n,
            "omega_spec": self.omega_spec,
            "coupling_spec": self.coupling_spec,
            "d_spec": self.d_spec,
            "theta0_spec": self.theta0_spec,
            "integrator": asdict(self.integrator),
            "classifier": asdict(self.classifier),
            "outputs": dict(self.outputs),
        }

    def with_lambda(self, lam: float) -> "ExperimentConfig":
        if self.coupling_spec["kind"] != "uniform":
            raise ConfigError("lambda sweeps need a uniform coupling spec")
        return replace(self, coupling_spec={"kind": "uniform", "lambda": float(lam)}, outputs={})


def stream(seed: int, stream_id: int) -> np.random.Generator:
    """Independent counter-based (Philox) stream keyed by (seed, stream_id)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream_id,))))


def derive_seed(master: int, index: int) -> int:
    """Per-run seed for ensemble member ``index``."""
    return int(np.random.SeedSequence(master, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def box_muller(rng: np.random.Generator, count: int) -> FloatArray:
    """Standard normals from consecutive uniform pairs (u1, u2)."""
    pairs = (count + 1) // 2
    u = rng.random(2 * pairs).reshape(pairs, 2)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 − u1 ∈ (0, 1]
    angle = TWO_PI * u[:, 1]
    z = np.column_stack((radius * np.cos(angle), radius * np.sin(angle))).ravel()
    return z[:count]


def sample_system(config: ExperimentConfig) -> tuple[OscillatorSystem, FloatArray]:
    """Realize (system, θ0) from the config; deterministic in the seed."""
    n = config.n
    om = config.omega_spec
    if om["kind"] == "normal":
        z = box_muller(stream(config.seed, STREAM_OMEGA), n)
        omega = om["mean"] + np.sqrt(om["variance"]) * z
        if om.get("centered", False):
            omega = omega - omega.mean()
    else:
        omega = np.asarray(om["values"], dtype=np.float64)

    cp = config.coupling_spec
    if cp["kind"] == "uniform":
        coupling = cp["lambda"] * (np.ones((n, n)) - np.eye(n))
    elif cp["kind"] == "gaussian_symmetric":
        rows, cols = np.tril_indices(n, k=-1)
        vals = cp["mean"] + np.sqrt(cp["variance"]) * box_muller(stream(config.seed, STREAM_COUPLING), rows.size)
        coupling = np.zeros((n, n))
        coupling[rows, cols] = vals
        coupling[cols, rows] = vals
    else:
        coupling = np.asarray(cp["matrix"], dtype=np.float64)

    d = np.ones(n) if config.d_spec["kind"] == "ones" else np.asarray(config.d_spec["values"], dtype=np.float64)

    if config.theta0_spec["kind"] == "uniform_circle":
        theta0 = TWO_PI * stream(config.seed, STREAM_THETA0).random(n)
    else:
        theta0 = np.asarray(config.theta0_spec["values"], dtype=np.float64)

    system = OscillatorSystem(d=d, omega=omega, coupling=coupling)
    try:
        validate(system)
    except ValidationError as exc:
        raise ConfigError(f"sampled system is invalid: {exc}") from exc
    return system, theta0


def system_stats(system: OscillatorSystem) -> dict:
    iu = np.triu_indices(system.n, k=1)
    lam = system.coupling[iu]
    return {
        "omega_max_abs": float(np.max(np.abs(system.omega))),
        "omega_range": float(np.ptp(system.omega)),
        "lambda_stats": {
            "mean": float(lam.mean()),
            "std": float(lam.std()),
            "min": float(lam.min()),
            "max": float(lam.max()),
            "uniform": system.is_uniform(),
            "sign_mixed": bool(lam.min() < 0 < lam.max()),
        },
    }


def threshold_summary(system: OscillatorSystem, raw: OscillatorSystem | None = None) -> dict:
    """Threshold report for the normalized frequencies, plus the raw ones when given."""
    norm = normalize_frequencies(system)
    report = critical_coupling(norm.omega)
    out = report.to_dict()
    lam = system.uniform_strength()
    out["lambda"] = lam
    if lam is not None:
        out["below_lambda_c"] = bool(lam < report.lambda_c)
        out["conclusion"] = report.verdict_for(lam)
        if report.omega_max_abs > 0:
            out["omega_over_lambda"] = report.omega_max_abs / abs(lam)
        if lam > report.omega_max_abs > 0:
            out["r_upper_bound"] = r_upper_bound(report.omega_max_abs, lam, system.n)
    else:
        out["notes"].append("coupling is not uniform: the threshold is not a theorem for this system")
    if raw is not None:
        out["raw_omega"] = critical_coupling(raw.omega).to_dict()
    return out


@dataclass
class RunSummary:
    config: dict
    system_stats: dict
    thresholds: dict
    verdict: dict
    r_final: float
    runtime_seconds: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def verdict_dict(verdict: SyncVerdict, system: OscillatorSystem) -> dict:
    out = verdict.to_dict()
    out["disagreements"] = [list(p) for p in analysis.equivalence_report(verdict, system)]
    return out


def execute(config: ExperimentConfig) -> tuple[RunSummary, Trajectory]:
    """sample → normalize → integrate → classify → thresholds, in memory."""
    started = time.perf_counter()
    raw, theta0 = sample_system(config)
    system = normalize_frequencies(raw)
    traj = integrate(system, theta0, config.integrator)
    verdict = analysis.classify(traj, config.classifier)
    summary = RunSummary(
        config=config.to_dict(),
        system_stats=system_stats(system),
        thresholds=threshold_summary(system, raw),
        verdict=verdict_dict(verdict, system),
        r_final=float(traj.r_values[-1]),
        runtime_seconds=time.perf_counter() - started,
    )
    return summary, traj


def run_experiment(config: ExperimentConfig, write: bool = True) -> RunSummary:
    """Run the pipeline and write the configured outputs."""
    summary, traj = execute(config)
    system = traj.system
    if write:
        outputs = config.outputs
        if outputs.get("trajectory_csv"):
            write_trajectory_csv(traj, outputs["trajectory_csv"])
        if outputs.get("system_json"):
            write_system_json(system, outputs["system_json"])
        if outputs.get("summary_json"):
            _ensure_parent(outputs["summary_json"])
            Path(outputs["summary_json"]).write_text(summary.to_json() + "\n")
    log.info("run seed=%d n=%d done in %.2fs", config.seed, config.n, summary.runtime_seconds)
    return summary


def _run_quiet(config: ExperimentConfig) -> RunSummary:
    return run_experiment(config, write=False)


def sweep_coupling(config: ExperimentConfig, lambdas: Sequence[float], jobs: int = 1) -> list[RunSummary]:
    """Rerun the experiment for each uniform λ, everything else (seed included) fixed.

    Results are ordered as ``lambdas`` regardless of completion order.
    """
    configs = [config.with_lambda(lam) for lam in lambdas]
    if jobs <= 1:
        return [_run_quiet(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_quiet, configs))


def sweep_table(lambdas: Sequence[float], summaries: Sequence[RunSummary]) -> str:
    lines = ["lambda,fss_flag,r_final"]
    for lam, s in zip(lambdas, summaries):
        lines.append(f"{float(lam)!r},{s.verdict['fss']},{s.r_final!r}")
    return "\n".join(lines) + "\n"


def _ensure_parent(path: str | os.PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)


def trajectory_header(n: int) -> list[str]:
    return ["t", *(f"theta_{j}" for j in range(1, n + 1)), *(f"dtheta_{j}" for j in range(1, n + 1)), "R", "Phi"]


def write_trajectory_csv(traj: Trajectory, path: str | os.PathLike) -> None:
    _ensure_parent(path)
    table = np.column_stack((traj.times, traj.thetas, traj.theta_dots, traj.r_values, traj.phi_values))
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(trajectory_header(traj.system.n)), comments="")


def read_trajectory_csv(path: str | os.PathLike, system: OscillatorSystem) -> Trajectory:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    n = system.n
    if header != trajectory_header(n):
        raise ConfigError(f"{path}: header does not match a {n}-oscillator trajectory")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trajectory(
        times=table[:, 0],
        thetas=table[:, 1 : n + 1],
        theta_dots=table[:, n + 1 : 2 * n + 1],
        r_values=table[:, 2 * n + 1],
        phi_values=table[:, 2 * n + 2],
        system=system,
    )


def write_system_json(system: OscillatorSystem, path: str | os.PathLike) -> None:
    _ensure_parent(path)
    Path(path).write_text(json.dumps(system.to_dict()) + "\n")


def load_system_json(path: str | os.PathLike) -> OscillatorSystem:
    with open(path) as fh:
        return OscillatorSystem.from_dict(json.load(fh))
