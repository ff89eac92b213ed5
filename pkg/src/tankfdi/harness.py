"""Experiment orchestration: configuration, truth generation, Monte Carlo
filter comparison, fault detection, and CSV/SVG artifact emission.

Two lanes share each scenario. The detection lane runs plant and observer
jointly at the fine grid with no noise, because the analytic threshold
sits around 1e-5 where any integration bias would masquerade as a fault.
The comparison lane runs at the filter sampling period with seeded noise:
one truth sequence per (scenario, repetition) feeds the observer and both
filters, so every estimator sees identical data. Noise enters the truth
through the same channel the filters assume: the held input plus one
direct channel per state, which keeps the scaling recursion identifiable
(through the input channel alone the output would carry no usable
process-noise signature).

All randomness derives from numpy SeedSequence([seed, scenario_index,
repetition]); within a stream the process-noise block is drawn first,
then the measurement-noise block. Identical (config, seed) therefore
reproduce artifacts byte for byte.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from .askf import DiscreteModel, ScalingParams, run_askf
from .consensus import SensorNetwork, run_consensus
from .detect import build_threshold, detect, initial_error_bound, residual
from .errors import DivergenceError, NumericalError, ValidationError
from .model import (
    FaultProfile,
    PiecewiseConstantSignal,
    TankParams,
    build_faulty,
    build_healthy,
    discretize_zoh,
)
from .observer import co_simulate, place_observer_poles

__all__ = [
    "ExperimentConfig",
    "RunArtifacts",
    "default_config",
    "load_config",
    "run_experiment",
    "emit_csv",
    "emit_plots",
    "calibrate_delta_bar",
]

ESTIMATORS = ("luenberger", "askf", "consensus")

CSV_HEADER = "t,x1,x2,x3,y,u,f,xhat1,xhat2,xhat3,yhat,eps,eps_bar,phi"


@dataclass
class ExperimentConfig:
    """Declarative scenario description; every field has a default.

    truth_process_noise / truth_measurement_noise override the noise
    actually injected into the generated data; left at None they follow
    the filter design values, which is the standard consistent setup.
    filter_init chooses the filters' initial mean: "config" starts from
    xhat0 (a cold start shared with the observer), "truth" from the
    scenario's true x0.
    """

    psi: tuple = (2.0, 1.0, 2.0)
    delta: tuple = (1.0, 1.5, 1.0)
    input_breakpoints: tuple = (0.0, 1.0)
    input_values: tuple = (2.0, 1.0)
    t_f: float = 2.0
    delta_bar: float = 0.5
    initial_conditions: tuple = ((0.26, 0.26, 0.26), (4.0, 4.0, 4.0), (2.4, 3.6, 1.8))
    poles: tuple = (-5.0, -8.0, -10.0)
    xhat0: tuple = (0.25, 0.25, 0.25)
    x_lo: tuple = (0.25, 0.25, 0.25)
    x_hi: tuple = (4.0, 4.0, 4.0)
    a: float = 1.0 / 3.0
    b: float = 1.0 / 3.0
    c: float = 1.0 / 3.0
    phi0: float = 1.0
    sensors: int = 1
    prior_scaling: object = 1
    include_input: bool = True
    dt: float = 1e-3
    horizon: float = 4.0
    seed: int = 12345
    kappa: int = 20
    sampling_period: float = 0.01
    process_noise: float = 1e-4
    measurement_noise: float = 1e-4
    truth_process_noise: float = None
    truth_measurement_noise: float = None
    prior_covariance: float = 0.1
    filter_init: str = "config"
    out_dir: str = "artifacts"

    def __post_init__(self):
        self.psi = tuple(float(v) for v in self.psi)
        self.delta = tuple(float(v) for v in self.delta)
        if len(self.psi) != 3 or len(self.delta) != 3:
            raise ValidationError("psi and delta must each hold 3 values")
        if min(self.psi) <= 0 or min(self.delta) <= 0:
            raise ValidationError("psi and delta must be positive")
        self.input_breakpoints = tuple(float(v) for v in self.input_breakpoints)
        self.input_values = tuple(float(v) for v in self.input_values)
        self.t_f = float(self.t_f)
        self.delta_bar = float(self.delta_bar)
        if self.delta_bar < 0:
            raise ValidationError("delta_bar must be nonnegative")
        self.initial_conditions = tuple(tuple(float(v) for v in ic) for ic in self.initial_conditions)
        if any(len(ic) != 3 for ic in self.initial_conditions):
            raise ValidationError("each initial condition needs 3 components")
        self.poles = tuple(complex(v) if isinstance(v, complex) else float(v) for v in self.poles)
        self.xhat0 = tuple(float(v) for v in self.xhat0)
        self.x_lo = tuple(float(v) for v in self.x_lo)
        self.x_hi = tuple(float(v) for v in self.x_hi)
        for name in ("a", "b", "c", "phi0", "dt", "horizon", "sampling_period",
                     "process_noise", "measurement_noise", "prior_covariance"):
            setattr(self, name, float(getattr(self, name)))
        if self.dt <= 0 or self.horizon <= 0 or self.sampling_period <= 0:
            raise ValidationError("dt, horizon, sampling_period must be positive")
        if self.process_noise < 0 or self.measurement_noise <= 0:
            raise ValidationError("process_noise must be >= 0 and measurement_noise > 0")
        for name in ("truth_process_noise", "truth_measurement_noise"):
            v = getattr(self, name)
            if v is not None:
                v = float(v)
                if v < 0:
                    raise ValidationError(f"{name} must be nonnegative")
                setattr(self, name, v)
        if self.prior_covariance <= 0:
            raise ValidationError("prior_covariance must be positive")
        self.sensors = int(self.sensors)
        if self.sensors < 1:
            raise ValidationError("sensors must be >= 1")
        if self.prior_scaling not in (1, "n", "1"):
            raise ValidationError("prior_scaling must be 1 or 'n'")
        if self.prior_scaling == "1":
            self.prior_scaling = 1
        self.seed = int(self.seed)
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative")
        self.kappa = int(self.kappa)
        if self.kappa < 1:
            raise ValidationError("kappa must be >= 1")
        if self.filter_init not in ("config", "truth"):
            raise ValidationError("filter_init must be 'config' or 'truth'")
        self.out_dir = str(self.out_dir)


def default_config(**overrides):
    """The benchmark configuration; keyword overrides are applied on top."""
    return replace(ExperimentConfig(), **overrides) if overrides else ExperimentConfig()


def _parse_floats(text):
    return tuple(float(v.strip()) for v in text.split(",") if v.strip() != "")


def _parse_ic(text):
    return tuple(_parse_floats(chunk) for chunk in text.split(";") if chunk.strip() != "")


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {text!r}")


def _parse_prior_scaling(text):
    t = text.strip().lower()
    if t == "n":
        return "n"
    if t == "1":
        return 1
    raise ValidationError(f"prior_scaling must be 1 or n, got {text!r}")


_SCHEMA = {
    "plant": {"psi": _parse_floats, "delta": _parse_floats},
    "input": {"breakpoints": _parse_floats, "values": _parse_floats},
    "fault": {"t_f": float, "delta_bar": float},
    "observer": {
        "poles": _parse_floats,
        "xhat0": _parse_floats,
        "x_lo": _parse_floats,
        "x_hi": _parse_floats,
    },
    "askf": {"a": float, "b": float, "c": float, "phi0": float},
    "consensus": {
        "sensors": int,
        "prior_scaling": _parse_prior_scaling,
        "include_input": _parse_bool,
    },
    "run": {
        "dt": float,
        "horizon": float,
        "seed": int,
        "kappa": int,
        "sampling_period": float,
        "process_noise": float,
        "measurement_noise": float,
        "truth_process_noise": float,
        "truth_measurement_noise": float,
        "prior_covariance": float,
        "filter_init": str.strip,
        "out_dir": str.strip,
        "initial_conditions": _parse_ic,
    },
}

_KEY_RENAMES = {("input", "breakpoints"): "input_breakpoints", ("input", "values"): "input_values"}


def load_config(path):
    """Parse an INI-style experiment file; unknown sections or keys fail.

    An empty file yields the benchmark defaults.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh, source=str(path))
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ValidationError(f"config parse error in {path}: {exc}") from exc

    overrides = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValidationError(f"{path}: unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ValidationError(f"{path}: unknown key '{key}' in section [{section}]")
            try:
                value = _SCHEMA[section][key](raw)
            except ValidationError:
                raise
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{path}: bad value for [{section}] {key} = {raw!r}: {exc}") from exc
            overrides[_KEY_RENAMES.get((section, key), key)] = value
    try:
        return default_config(**overrides)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


@dataclass
class RunArtifacts:
    """Everything a run produced, both in memory and on disk."""

    config: ExperimentConfig
    detection_reports: list = field(default_factory=list)
    mse_table: dict = field(default_factory=dict)
    scenario_csvs: list = field(default_factory=list)
    mse_csv: str = None
    plot_paths: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    detection_data: list = field(default_factory=list, repr=False)
    trace_data: list = field(default_factory=list, repr=False)


def _tank_params(cfg):
    return TankParams(psi=cfg.psi, delta=cfg.delta, delta_bar=cfg.delta_bar)


def _input_signal(cfg):
    return PiecewiseConstantSignal(cfg.input_breakpoints, cfg.input_values)


def _truth_noise(cfg):
    q = cfg.process_noise if cfg.truth_process_noise is None else cfg.truth_process_noise
    r = cfg.measurement_noise if cfg.truth_measurement_noise is None else cfg.truth_measurement_noise
    return q, r


def _filter_model(cfg):
    """Exact ZOH discretization at the sampling period with the augmented
    noise channel [Bd | I]: column 0 carries the pump input, columns 1-3
    inject noise directly per state. Q is sized accordingly."""
    params = _tank_params(cfg)
    healthy = build_healthy(params)
    Ad, Bd = discretize_zoh(healthy.A, healthy.B, cfg.sampling_period)
    Bn = np.hstack([Bd, np.eye(3)])
    Q = np.eye(4) * cfg.process_noise
    R = np.array([[cfg.measurement_noise]])
    return DiscreteModel(A_k=Ad, B_k=Bn, Theta_k=healthy.C, Q_k=Q, R_k=R)


def _truth_matrices(cfg):
    params = _tank_params(cfg)
    healthy = build_healthy(params)
    faulty = build_faulty(params)
    Ts = cfg.sampling_period
    AdH, BdH = discretize_zoh(healthy.A, healthy.B, Ts)
    AdF, BdF = discretize_zoh(faulty.A, faulty.B, Ts)
    Bn = np.hstack([BdH, np.eye(3)])
    return AdH, BdH, AdF, BdF, Bn, healthy


def _generate_truth(cfg, x0, rng, mats):
    """Sampled truth with seeded noise; returns (x, y, u_samples, w, chi)."""
    AdH, BdH, AdF, BdF, Bn, healthy = mats
    Ts = cfg.sampling_period
    N = int(round(cfg.horizon / Ts))
    times = np.arange(N + 1) * Ts
    u_samples = _input_signal(cfg).sample(times)
    q, r = _truth_noise(cfg)
    w = rng.normal(0.0, np.sqrt(q), size=(N, 4))
    chi = rng.normal(0.0, np.sqrt(r), size=N + 1)

    x = np.empty((N + 1, 3))
    x[0] = np.asarray(x0, dtype=float)
    for k in range(N):
        if times[k] >= cfg.t_f - 1e-12:
            x[k + 1] = AdF @ x[k] + BdF[:, 0] * u_samples[k] + Bn @ w[k]
        else:
            x[k + 1] = AdH @ x[k] + BdH[:, 0] * u_samples[k] + Bn @ w[k]
    y = x @ healthy.C[0] + chi
    return times, x, y, u_samples, w, chi


def _observer_step_blocks(cfg, Psi):
    """Exact one-step maps of the observer coupled to the in-step truth
    flow, for both plant regimes. The observer sees y(t) = C x(t) + chi_k
    with chi held over the step; returns per regime the blocks (T, O, bu,
    bchi) of xhat' = T x + O xhat + bu u + bchi chi."""
    params = _tank_params(cfg)
    healthy = build_healthy(params)
    faulty = build_faulty(params)
    A = healthy.A
    b = healthy.B[:, 0]
    c = healthy.C[0]
    Gd = A - np.outer(Psi, c)
    Ts = cfg.sampling_period

    def blocks(Ap):
        G = np.zeros((8, 8))
        G[0:3, 0:3] = Ap * Ts
        G[3:6, 0:3] = np.outer(Psi, c) * Ts
        G[3:6, 3:6] = Gd * Ts
        G[0:3, 6] = b * Ts
        G[3:6, 6] = b * Ts
        G[3:6, 7] = Psi * Ts
        E = expm(G)
        return E[3:6, 0:3], E[3:6, 3:6], E[3:6, 6], E[3:6, 7]

    return blocks(A), blocks(faulty.A)


def _run_observer_sampled(cfg, blocks_h, blocks_f, times, x, u_samples, chi, xhat0):
    """Observer estimates on the sampled grid, exact within each step."""
    N = len(times) - 1
    xhat = np.empty((N + 1, 3))
    xhat[0] = xhat0
    for k in range(N):
        T, O, bu, bchi = blocks_f if times[k] >= cfg.t_f - 1e-12 else blocks_h
        xhat[k + 1] = T @ x[k] + O @ xhat[k] + bu * u_samples[k] + bchi * chi[k]
        if not np.isfinite(xhat[k + 1]).all():
            raise DivergenceError(f"observer diverged at t={times[k + 1]:.6g}")
    return xhat


def run_experiment(cfg, emit=True):
    """Execute both lanes for every scenario and (optionally) write files.

    A failing estimator marks its (estimator, scenario) cell with an
    error and NaN MSEs instead of aborting the whole run.
    """
    params = _tank_params(cfg)
    u = _input_signal(cfg)
    fault = FaultProfile(cfg.t_f, cfg.delta_bar)
    healthy = build_healthy(params)
    design = place_observer_poles(healthy, cfg.poles)
    e_hat = initial_error_bound(cfg.x_lo, cfg.x_hi, cfg.xhat0)
    thr = build_threshold(design.Gamma_d, healthy.C, e_hat)

    artifacts = RunArtifacts(config=cfg)

    # Detection lane: exact joint propagation, no noise.
    for x0 in cfg.initial_conditions:
        truth, estimate = co_simulate(
            params, design.Psi, u, fault, x0, cfg.xhat0, dt=cfg.dt, horizon=cfg.horizon
        )
        res = residual(truth, estimate)
        report = detect(res, thr, t_f_hint=cfg.t_f)
        artifacts.detection_reports.append(report)
        artifacts.detection_data.append(
            {
                "truth": truth,
                "estimate": estimate,
                "residual": res,
                "eps_bar": thr(truth.times),
                "report": report,
            }
        )

    # Comparison lane: sampled truth with seeded noise, three estimators.
    fm = _filter_model(cfg)
    mats = _truth_matrices(cfg)
    blocks_h, blocks_f = _observer_step_blocks(cfg, design.Psi)
    scaling = ScalingParams(a=cfg.a, b=cfg.b, c=cfg.c, phi0=cfg.phi0)
    net = SensorNetwork([(fm.Theta_k, fm.R_k) for _ in range(cfg.sensors)])
    P0 = np.eye(3) * cfg.prior_covariance

    sq_err = {name: np.zeros((len(cfg.initial_conditions), 3)) for name in ESTIMATORS}
    failed = {name: set() for name in ESTIMATORS}

    for si, x0 in enumerate(cfg.initial_conditions):
        xbar0 = np.asarray(x0 if cfg.filter_init == "truth" else cfg.xhat0, dtype=float)
        for rep in range(cfg.kappa):
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, si, rep]))
            times, x, y, u_samples, w, chi = _generate_truth(cfg, x0, rng, mats)
            N = len(times) - 1
            u4 = np.zeros((N + 1, 4))
            u4[:, 0] = u_samples

            trace = {"times": times, "x": x} if rep == 0 else None

            if si not in failed["luenberger"]:
                try:
                    xhat_lu = _run_observer_sampled(
                        cfg, blocks_h, blocks_f, times, x, u_samples, chi, xbar0
                    )
                    sq_err["luenberger"][si] += np.mean((x - xhat_lu) ** 2, axis=0)
                    if trace is not None:
                        trace["luenberger"] = xhat_lu
                except (NumericalError, DivergenceError) as exc:
                    failed["luenberger"].add(si)
                    artifacts.errors[("luenberger", si)] = str(exc)

            if si not in failed["askf"]:
                try:
                    states = run_askf(fm, scaling, (xbar0, P0), list(u4[:N]), list(y[1:]))
                    xhat_a = np.array([s.xhat for s in states])
                    sq_err["askf"][si] += np.mean((x - xhat_a) ** 2, axis=0)
                    if trace is not None:
                        trace["askf"] = xhat_a
                        trace["phi"] = np.array([s.phi for s in states])
                except (NumericalError, DivergenceError) as exc:
                    failed["askf"].add(si)
                    artifacts.errors[("askf", si)] = str(exc)

            if si not in failed["consensus"]:
                try:
                    cstates = run_consensus(
                        fm,
                        net,
                        (xbar0, P0),
                        list(u4[: N + 1]),
                        [(yk,) * cfg.sensors for yk in y],
                        prior_scaling=cfg.prior_scaling,
                        include_input=cfg.include_input,
                    )
                    # Forecast aimed at sample k (initial belief for k=0).
                    xbar_c = np.array([s.xbar for s in cstates[: N + 1]])
                    sq_err["consensus"][si] += np.mean((x - xbar_c) ** 2, axis=0)
                    if trace is not None:
                        trace["consensus"] = xbar_c
                except (NumericalError, DivergenceError) as exc:
                    failed["consensus"].add(si)
                    artifacts.errors[("consensus", si)] = str(exc)

            if trace is not None:
                artifacts.trace_data.append(trace)

    table = {}
    for name in ESTIMATORS:
        per_scen = sq_err[name] / cfg.kappa
        for si in range(len(cfg.initial_conditions)):
            if si in failed[name]:
                per_scen[si] = np.nan
        table[name] = {
            "per_state": per_scen,
            "aggregate": per_scen.sum(axis=1),
            "total": float(per_scen.sum()),
        }
    artifacts.mse_table = table

    if emit:
        emit_csv(artifacts)
        emit_plots(artifacts)
    return artifacts


def _fmt(v):
    return format(float(v), ".17g")


def emit_csv(artifacts):
    """Write one CSV per scenario (detection lane) plus the MSE table."""
    cfg = artifacts.config
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts.scenario_csvs = []
    for si, data in enumerate(artifacts.detection_data):
        truth = data["truth"]
        est = data["estimate"]
        eps = data["residual"].residuals
        eps_bar = data["eps_bar"]
        path = out / f"scenario{si + 1}.csv"
        lines = [CSV_HEADER]
        for k in range(len(truth.times)):
            row = [
                _fmt(truth.times[k]),
                _fmt(truth.states[k, 0]),
                _fmt(truth.states[k, 1]),
                _fmt(truth.states[k, 2]),
                _fmt(truth.outputs[k]),
                _fmt(truth.inputs[k]),
                _fmt(truth.fault_flows[k]),
                _fmt(est.states[k, 0]),
                _fmt(est.states[k, 1]),
                _fmt(est.states[k, 2]),
                _fmt(est.outputs[k]),
                _fmt(eps[k]),
                _fmt(eps_bar[k]),
                "",
            ]
            lines.append(",".join(row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        artifacts.scenario_csvs.append(str(path))

    mse_path = out / "mse_table.csv"
    lines = ["estimator,scenario,mse_x1,mse_x2,mse_x3,aggregate"]
    for name in ESTIMATORS:
        entry = artifacts.mse_table[name]
        for si in range(entry["per_state"].shape[0]):
            row = [name, str(si + 1)]
            row += [_fmt(v) for v in entry["per_state"][si]]
            row.append(_fmt(entry["aggregate"][si]))
            lines.append(",".join(row))
        lines.append(",".join([name, "all", "", "", "", _fmt(entry["total"])]))
    mse_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    artifacts.mse_csv = str(mse_path)
    return artifacts.scenario_csvs + [artifacts.mse_csv]


def emit_plots(artifacts):
    """Render the three figure families per scenario as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "tankfdi"

    cfg = artifacts.config
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts.plot_paths = []

    def save(fig, name):
        path = out / name
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        artifacts.plot_paths.append(str(path))

    for si, data in enumerate(artifacts.detection_data):
        truth = data["truth"]
        fig, ax = plt.subplots(figsize=(7, 4))
        for j in range(3):
            ax.plot(truth.times, truth.states[:, j], label=f"x{j + 1}")
        ax.plot(truth.times, truth.inputs, linestyle="--", color="gray", label="u")
        ax.set_xlabel("t (s)")
        ax.set_ylabel("volume")
        ax.set_title(f"Scenario {si + 1}: plant response")
        ax.legend(loc="best")
        save(fig, f"states_scenario{si + 1}.svg")

        report = data["report"]
        res = data["residual"]
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.semilogy(res.times, np.abs(res.residuals) + 1e-30, label="|eps|")
        ax.semilogy(res.times, data["eps_bar"] + 1e-30, label="eps_bar")
        ax.axvline(cfg.t_f, color="gray", linestyle=":", label="t_f")
        if report.detected:
            ax.axvline(report.t_d, color="red", linestyle="--", label=f"t_d={report.t_d:.4f}")
        ax.set_xlabel("t (s)")
        ax.set_ylabel("residual")
        ax.set_title(f"Scenario {si + 1}: detection")
        ax.legend(loc="best")
        save(fig, f"detection_scenario{si + 1}.svg")

    for si, trace in enumerate(artifacts.trace_data):
        fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
        for ax, name in zip(axes, ESTIMATORS):
            for j in range(3):
                ax.plot(trace["times"], trace["x"][:, j], color="black", linewidth=0.8)
            if name in trace:
                for j in range(3):
                    ax.plot(trace["times"], trace[name][:, j], linestyle="--")
            ax.set_ylabel(name)
        axes[-1].set_xlabel("t (s)")
        axes[0].set_title(f"Scenario {si + 1}: truth (solid) vs estimates (dashed)")
        save(fig, f"estimates_scenario{si + 1}.svg")

    return artifacts.plot_paths


def calibrate_delta_bar(cfg, targets=(2.0235, 2.015, 2.0165), candidates=None):
    """Sweep the leak coefficient and score detection times per scenario.

    Returns (best_delta_bar, report) where report rows hold the
    candidate, its three detection times, and the worst absolute
    deviation from the targets. Undetected scenarios score infinity.
    """
    if candidates is None:
        candidates = np.round(np.arange(0.1, 1.01, 0.05), 10)
    params_base = _tank_params(cfg)
    u = _input_signal(cfg)
    healthy = build_healthy(params_base)
    design = place_observer_poles(healthy, cfg.poles)
    e_hat = initial_error_bound(cfg.x_lo, cfg.x_hi, cfg.xhat0)
    thr = build_threshold(design.Gamma_d, healthy.C, e_hat)

    report = []
    best = None
    for cand in candidates:
        fault = FaultProfile(cfg.t_f, float(cand))
        t_ds = []
        for x0 in cfg.initial_conditions:
            truth, estimate = co_simulate(
                params_base, design.Psi, u, fault, x0, cfg.xhat0, dt=cfg.dt, horizon=cfg.horizon
            )
            rep = detect(residual(truth, estimate), thr, t_f_hint=cfg.t_f)
            t_ds.append(rep.t_d if rep.detected else None)
        if any(td is None for td in t_ds):
            score = np.inf
        else:
            score = max(abs(td - tg) for td, tg in zip(t_ds, targets))
        report.append({"delta_bar": float(cand), "t_d": tuple(t_ds), "score": float(score)})
        if best is None or score < best[1]:
            best = (float(cand), score)
    return best[0], report
