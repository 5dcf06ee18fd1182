"""Scenario presets, ensembles over random true states, and scaling fits."""
from __future__ import annotations

import dataclasses
import io
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from sgqt.errors import ConfigError, DomainError, FitError, ParameterError
from sgqt.measurement import INFINITE, FidelityOracle, OracleConfig, TrueStateModel
from sgqt.spsa import (
    ASYMPTOTIC_EXPONENTS,
    MULTI_QUBIT_GAINS,
    SINGLE_QUBIT_GAINS,
    GainSchedule,
    Trajectory,
    run,
)
from sgqt.states import (
    Parametrization,
    haar_random_state,
    haar_random_w_state,
    params_of,
    perturb_params,
    physical_dim,
)

#: Largest qubit counts run without ``allow_large``.
DESK_MAX_QUBITS = {Parametrization.FULL: 6, Parametrization.W_CLASS: 8}


def _scenario(value) -> "Scenario":
    try:
        return Scenario(value)
    except ValueError as exc:
        raise ConfigError(f"unknown scenario {value!r}") from exc


class Scenario(str, Enum):
    SINGLE_QUBIT = "single-qubit"
    MULTI_QUBIT = "multi-qubit"
    W_DEPOLARIZED = "w-depolarized"
    NOISY_MEASUREMENT = "noisy-measurement"

    @property
    def tag(self) -> Parametrization:
        if self in (Scenario.W_DEPOLARIZED, Scenario.NOISY_MEASUREMENT):
            return Parametrization.W_CLASS
        return Parametrization.FULL


@dataclass(frozen=True)
class InitMode:
    """Initial guess: an independent Haar state, or the true state's
    parameters plus Gaussian noise of standard deviation ``std``."""

    kind: str = "haar"
    std: float = 0.0

    def __post_init__(self):
        if self.kind not in ("haar", "perturbed"):
            raise ConfigError(f"unknown init mode {self.kind!r}")
        if self.std < 0 or (self.kind == "haar" and self.std != 0):
            raise ConfigError(f"invalid init std {self.std!r} for {self.kind}")

    @classmethod
    def parse(cls, text: str) -> "InitMode":
        if text == "haar":
            return cls("haar")
        kind, _, std = text.partition(":")
        if kind != "perturbed" or not std:
            raise ConfigError(f"init must be 'haar' or 'perturbed:STD', got {text!r}")
        try:
            return cls("perturbed", float(std))
        except ValueError as exc:
            raise ConfigError(f"bad perturbation std in {text!r}") from exc

    def __str__(self) -> str:
        return "haar" if self.kind == "haar" else f"perturbed:{self.std!r}"


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    n_qubits: tuple[int, ...]
    shots_N: int | None
    iterations_k: int
    n_trials: int
    gains: GainSchedule
    init_mode: InitMode = InitMode()
    depolarizing_p: float = 0.0
    measurement_noise_std: float = 0.0
    base_seed: int = 0
    allow_large: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scenario", _scenario(self.scenario))
        qubits = (self.n_qubits,) if isinstance(self.n_qubits, (int, np.integer)) else tuple(self.n_qubits)
        object.__setattr__(self, "n_qubits", tuple(int(n) for n in qubits))
        if isinstance(self.init_mode, str):
            object.__setattr__(self, "init_mode", InitMode.parse(self.init_mode))
        self._validate()

    def _validate(self):
        if not self.n_qubits or len(set(self.n_qubits)) != len(self.n_qubits):
            raise ConfigError(f"n_qubits must be non-empty and distinct, got {self.n_qubits}")
        min_n = 2 if self.tag is Parametrization.W_CLASS else 1
        if min(self.n_qubits) < min_n:
            raise ConfigError(f"{self.scenario.value} needs n_qubits >= {min_n}")
        if self.scenario is Scenario.SINGLE_QUBIT and self.n_qubits != (1,):
            raise ConfigError("single-qubit scenario requires n_qubits == 1")
        if self.shots_N is not INFINITE and (int(self.shots_N) != self.shots_N or self.shots_N < 1):
            raise ConfigError(f"shots_N must be a positive integer or null, got {self.shots_N!r}")
        if self.iterations_k < 1 or self.n_trials < 1:
            raise ConfigError("iterations_k and n_trials must be >= 1")
        if self.base_seed < 0:
            raise ConfigError("base_seed must be non-negative")
        if not 0.0 <= self.depolarizing_p <= 1.0:
            raise ConfigError(f"depolarizing_p must lie in [0, 1], got {self.depolarizing_p}")
        if self.measurement_noise_std < 0:
            raise ConfigError("measurement_noise_std must be >= 0")
        if self.scenario is not Scenario.W_DEPOLARIZED and self.depolarizing_p != 0:
            raise ConfigError(f"depolarizing_p is unused by {self.scenario.value} and must be 0")
        if self.scenario is not Scenario.NOISY_MEASUREMENT and self.measurement_noise_std != 0:
            raise ConfigError(f"measurement_noise_std is unused by {self.scenario.value} and must be 0")
        cap = DESK_MAX_QUBITS[self.tag]
        if max(self.n_qubits) > cap:
            if not self.allow_large:
                raise ConfigError(
                    f"n_qubits above {cap} for {self.scenario.value} needs allow_large (slow)"
                )
            warnings.warn(f"running {max(self.n_qubits)} qubits; expect long runtimes", RuntimeWarning, stacklevel=3)

    @property
    def tag(self) -> Parametrization:
        return self.scenario.tag

    def for_qubits(self, n: int) -> "ExperimentConfig":
        if n not in self.n_qubits:
            raise ConfigError(f"{n} qubits not in this config's sweep {self.n_qubits}")
        return dataclasses.replace(self, n_qubits=(n,))

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.value,
            "n_qubits": list(self.n_qubits),
            "shots_N": self.shots_N,
            "iterations_k": self.iterations_k,
            "n_trials": self.n_trials,
            "gains": dataclasses.asdict(self.gains),
            "init_mode": str(self.init_mode),
            "depolarizing_p": self.depolarizing_p,
            "measurement_noise_std": self.measurement_noise_std,
            "base_seed": self.base_seed,
            "allow_large": self.allow_large,
        }

    @classmethod
    def from_dict(cls, data: Mapping, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        """Build a config from JSON-style data; missing fields come from
        ``base`` or, failing that, the scenario preset."""
        data = dict(data)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if base is None:
            if "scenario" not in data:
                raise ConfigError("config needs a scenario")
            base = preset(data["scenario"])
        elif "scenario" in data and _scenario(data["scenario"]) is not base.scenario:
            base = preset(data["scenario"])
        try:
            if "gains" in data:
                g = data["gains"]
                data["gains"] = GainSchedule(**g) if isinstance(g, Mapping) else GainSchedule.parse(str(g))
            if "init_mode" in data and not isinstance(data["init_mode"], InitMode):
                data["init_mode"] = InitMode.parse(str(data["init_mode"]))
            if data.get("shots_N") in ("inf", "INFINITE"):
                data["shots_N"] = INFINITE
            return dataclasses.replace(base, **data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def preset(scenario) -> ExperimentConfig:
    """Default configuration for each scenario at desk scale.

    The single-qubit preset uses the standard exponents; the multi-qubit and
    W-class presets share one schedule with the asymptotic exponents and a
    small perturbation of the true state as the starting point.
    """
    scenario = _scenario(scenario)
    if scenario is Scenario.SINGLE_QUBIT:
        return ExperimentConfig(scenario, (1,), 100, 1000, 100, SINGLE_QUBIT_GAINS, InitMode("haar"))
    common = dict(shots_N=10_000, iterations_k=10_000, n_trials=50,
                  gains=MULTI_QUBIT_GAINS.with_exponents(*ASYMPTOTIC_EXPONENTS),
                  init_mode=InitMode("perturbed", 0.01))
    if scenario is Scenario.MULTI_QUBIT:
        return ExperimentConfig(scenario, (2, 3, 4, 5, 6), **common)
    if scenario is Scenario.W_DEPOLARIZED:
        return ExperimentConfig(scenario, (2, 4, 6, 8), depolarizing_p=0.05, **common)
    return ExperimentConfig(scenario, (2, 4, 6, 8), measurement_noise_std=0.1, **common)


def trial_rng(base_seed: int, n_qubits: int, trial_index: int) -> np.random.Generator:
    """Independent stream for one trial, keyed by (seed, qubits, index)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([base_seed, n_qubits, trial_index])))


def _single_n(cfg: ExperimentConfig, n_qubits: int | None) -> int:
    if n_qubits is None:
        if len(cfg.n_qubits) != 1:
            raise ConfigError(f"config sweeps {cfg.n_qubits}; pass n_qubits explicitly")
        return cfg.n_qubits[0]
    if n_qubits not in cfg.n_qubits:
        raise ConfigError(f"{n_qubits} qubits not in this config's sweep {cfg.n_qubits}")
    return n_qubits


def run_trial(cfg: ExperimentConfig, trial_index: int, n_qubits: int | None = None) -> Trajectory:
    """Sample a true state and an initial guess, then run SPSA for one trial."""
    n = _single_n(cfg, n_qubits)
    rng = trial_rng(cfg.base_seed, n, trial_index)
    tag = cfg.tag
    if tag is Parametrization.W_CLASS:
        truth = haar_random_w_state(n, rng).to_state()
    else:
        truth = haar_random_state(n, rng)
    if cfg.depolarizing_p > 0:
        model = TrueStateModel.depolarized(truth, cfg.depolarizing_p)
    else:
        model = TrueStateModel.pure(truth)
    if cfg.init_mode.kind == "haar":
        if tag is Parametrization.W_CLASS:
            initial = haar_random_w_state(n, rng).to_params()
        else:
            initial = params_of(haar_random_state(n, rng), tag)
    else:
        initial = perturb_params(params_of(truth, tag), cfg.init_mode.std, rng)
    oracle = FidelityOracle(model, OracleConfig(cfg.shots_N, cfg.measurement_noise_std), tag)
    return run(initial, cfg.iterations_k, oracle, cfg.gains, rng)


@dataclass(frozen=True, eq=False)
class EnsembleSummary:
    """Per-iteration median and quartiles of the true infidelity over trials.

    After :func:`rescale_infidelity` the statistics are signed differences
    from ``floor``; ``below_floor`` marks iterations where any of them is
    negative.
    """

    k: np.ndarray
    median: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    n_qubits: int
    config: ExperimentConfig
    initial_median: float
    total_shots: int
    trial_min: float
    floor: float = 0.0
    below_floor: np.ndarray | None = field(default=None, repr=False)

    COLUMNS = ("k", "median", "q25", "q75")

    @property
    def dim(self) -> int:
        return physical_dim(self.n_qubits, self.config.tag)

    def at(self, k: int) -> float:
        """Median at iteration ``k``."""
        idx = np.searchsorted(self.k, k)
        if idx >= self.k.size or self.k[idx] != k:
            raise ParameterError(f"iteration {k} not recorded")
        return float(self.median[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.COLUMNS) + "\n")
        for k, m, lo, hi in zip(self.k.tolist(), self.median.tolist(), self.q25.tolist(), self.q75.tolist()):
            buf.write(f"{k},{m!r},{lo!r},{hi!r}\n")
        return buf.getvalue()


def summarize(trajectories: Sequence[Trajectory], cfg: ExperimentConfig, n_qubits: int) -> EnsembleSummary:
    curves = np.vstack([t.infidelity for t in trajectories])
    q25, median, q75 = np.percentile(curves, [25, 50, 75], axis=0)
    return EnsembleSummary(
        k=trajectories[0].k.copy(),
        median=median,
        q25=q25,
        q75=q75,
        n_qubits=n_qubits,
        config=cfg,
        initial_median=float(np.median([t.initial_infidelity for t in trajectories])),
        total_shots=int(sum(t.shots for t in trajectories)),
        trial_min=float(curves.min()),
    )


def _trial_job(args) -> Trajectory:
    cfg, n, i = args
    return run_trial(cfg, i, n)


def run_trials(cfg: ExperimentConfig, n_qubits: int | None = None, threads: int = 1) -> list[Trajectory]:
    """All trajectories for one qubit count, in trial-index order."""
    n = _single_n(cfg, n_qubits)
    jobs = [(cfg, n, i) for i in range(cfg.n_trials)]
    if threads <= 1 or cfg.n_trials == 1:
        return [_trial_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * threads))))


def run_ensemble(cfg: ExperimentConfig, n_qubits: int | None = None, threads: int = 1) -> EnsembleSummary:
    n = _single_n(cfg, n_qubits)
    return summarize(run_trials(cfg, n, threads), cfg, n)


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> dict[int, EnsembleSummary]:
    return {n: run_ensemble(cfg, n, threads) for n in cfg.n_qubits}


@dataclass(frozen=True)
class ScalingFit:
    """``y ~ 10**intercept * x**(-exponent)`` for decay fits, ``x**exponent`` for growth."""

    exponent: float
    intercept: float
    stderr: float
    fit_window: tuple[float, float]
    n_points: int

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "stderr": self.stderr,
            "intercept": self.intercept,
            "fit_window": list(self.fit_window),
            "n_points": self.n_points,
        }


def fit_power_law(xs, ys, window: tuple[float, float] | None = None, decay: bool = True) -> ScalingFit:
    """Least-squares line through ``(log10 x, log10 y)`` for points with x in ``window``.

    The exponent is minus the slope when ``decay`` is set, else the slope.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise FitError("xs and ys must be 1-D arrays of equal length")
    if window is None:
        window = (float(xs.min()), float(xs.max())) if xs.size else (np.nan, np.nan)
    lo, hi = window
    mask = (xs >= lo) & (xs <= hi)
    if mask.sum() < 3:
        raise FitError(f"window [{lo}, {hi}] holds {int(mask.sum())} points; need at least 3")
    x, y = xs[mask], ys[mask]
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("power-law fit needs strictly positive data inside the window")
    lx, ly = np.log10(x), np.log10(y)
    if np.ptp(lx) == 0:
        raise FitError("all x values in the window are equal")
    res = stats.linregress(lx, ly)
    slope = float(res.slope)
    return ScalingFit(
        exponent=-slope if decay else slope,
        intercept=float(res.intercept),
        stderr=float(res.stderr),
        fit_window=(float(lo), float(hi)),
        n_points=int(mask.sum()),
    )


def default_window(k_max: int) -> tuple[float, float]:
    """Last decade of iterations."""
    return (k_max / 10.0, float(k_max))


def fit_gamma(summary: EnsembleSummary, window: tuple[float, float] | None = None) -> ScalingFit:
    if window is None:
        window = default_window(int(summary.k[-1]))
    return fit_power_law(summary.k, summary.median, window, decay=True)


def min_infidelity_depolarized(p: float, n_qubits: int) -> float:
    """Smallest infidelity any pure state can reach against the depolarized model."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    return p * (1.0 - 1.0 / 2**n_qubits)


def rescale_infidelity(summary: EnsembleSummary, floor: float) -> EnsembleSummary:
    """Subtract ``floor`` from every statistic; negative results are kept
    signed and flagged in ``below_floor``."""
    if not 0.0 <= floor < 1.0:
        raise ParameterError(f"floor must lie in [0, 1), got {floor}")
    med = summary.median - floor
    lo = summary.q25 - floor
    hi = summary.q75 - floor
    return dataclasses.replace(
        summary,
        median=med,
        q25=lo,
        q75=hi,
        initial_median=summary.initial_median - floor,
        trial_min=summary.trial_min - floor,
        floor=summary.floor + floor,
        below_floor=(lo < 0) | (med < 0) | (hi < 0),
    )


def floor_for(summary: EnsembleSummary) -> float:
    cfg = summary.config
    return min_infidelity_depolarized(cfg.depolarizing_p, summary.n_qubits)


def dimension_sweep(summaries: Mapping[int, EnsembleSummary], fixed_k: Sequence[int]) -> list[ScalingFit]:
    """For each fixed k, fit the median infidelity against the physical
    dimension of each qubit count (growth exponent)."""
    if len(summaries) < 3:
        raise FitError(f"dimension sweep needs at least 3 qubit counts, got {len(summaries)}")
    ns = sorted(summaries)
    dims = np.array([summaries[n].dim for n in ns], dtype=np.float64)
    fits = []
    for k in fixed_k:
        ys = np.array([summaries[n].at(k) for n in ns])
        fits.append(fit_power_law(dims, ys, (dims.min(), dims.max()), decay=False))
    return fits


@dataclass(frozen=True)
class ScalingReport:
    gamma: dict[int, ScalingFit]
    eta: ScalingFit | None
    eta_k: int | None
    rescaled: dict[int, EnsembleSummary]

    def to_dict(self) -> dict:
        return {
            "gamma": {str(n): f.to_dict() for n, f in self.gamma.items()},
            "eta": None if self.eta is None else {**self.eta.to_dict(), "k": self.eta_k},
        }


def scaling_report(summaries: Mapping[int, EnsembleSummary], window: tuple[float, float] | None = None,
                   eta_k: int | None = None) -> ScalingReport:
    """gamma per qubit count (after subtracting the depolarizing floor) and,
    with three or more qubit counts, eta at ``eta_k`` (default: last iteration)."""
    rescaled = {}
    gammas = {}
    for n, s in sorted(summaries.items()):
        floor = floor_for(s)
        r = rescale_infidelity(s, floor) if floor > 0 else s
        rescaled[n] = r
        gammas[n] = fit_gamma(r, window)
    eta = None
    if len(rescaled) >= 3:
        if eta_k is None:
            eta_k = int(min(int(s.k[-1]) for s in rescaled.values()))
        eta = dimension_sweep(rescaled, [eta_k])[0]
    else:
        eta_k = None
    return ScalingReport(gammas, eta, eta_k, rescaled)
