"""Simultaneous perturbation stochastic approximation over state parameters.

Each iteration draws a Rademacher direction, spends two infidelity
estimates at ``sigma +/- beta_k * delta`` and steps downhill:

    g_k = (f_plus - f_minus) / (2 beta_k) * delta
    sigma_{k+1} = sigma_k - alpha_k g_k

with ``alpha_k = a / (k + 1 + A)**s`` and ``beta_k = b / (k + 1)**t``.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from sgqt.errors import ParameterError
from sgqt.measurement import FidelityOracle
from sgqt.states import ParamVector


@dataclass(frozen=True)
class GainSchedule:
    a: float
    A: float
    b: float
    s: float = 0.602
    t: float = 0.101

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0 or self.s <= 0 or self.t <= 0:
            raise ParameterError(f"a, b, s, t must be positive: {self}")
        if self.A < 0:
            raise ParameterError(f"A must be non-negative, got {self.A}")

    @classmethod
    def parse(cls, text: str) -> "GainSchedule":
        """Parse ``"a,A,b"`` or ``"a,A,b,s,t"``."""
        try:
            parts = [float(x) for x in text.split(",")]
        except ValueError as exc:
            raise ParameterError(f"bad gain schedule {text!r}") from exc
        if len(parts) not in (3, 5):
            raise ParameterError(f"gain schedule needs 3 or 5 values, got {text!r}")
        return cls(*parts)

    def with_exponents(self, s: float, t: float) -> "GainSchedule":
        return GainSchedule(self.a, self.A, self.b, s, t)

    def alpha(self, k: int) -> float:
        return self.a / (k + 1 + self.A) ** self.s

    def beta(self, k: int) -> float:
        return self.b / (k + 1) ** self.t


#: Widely used exponents (the class default).
STANDARD_EXPONENTS = (0.602, 0.101)
#: Asymptotically optimal exponents.
ASYMPTOTIC_EXPONENTS = (1.0, 1.0 / 6.0)

SINGLE_QUBIT_GAINS = GainSchedule(a=3.0, A=0.0, b=0.1)
MULTI_QUBIT_GAINS = GainSchedule(a=0.3, A=1000.0, b=0.1)

PRESETS = {
    "single-qubit": SINGLE_QUBIT_GAINS,
    "multi-qubit": MULTI_QUBIT_GAINS,
    "single-qubit-asymptotic": SINGLE_QUBIT_GAINS.with_exponents(*ASYMPTOTIC_EXPONENTS),
    "multi-qubit-asymptotic": MULTI_QUBIT_GAINS.with_exponents(*ASYMPTOTIC_EXPONENTS),
}


def alpha(k: int, g: GainSchedule) -> float:
    if k < 0:
        raise ParameterError(f"iteration index must be >= 0, got {k}")
    return g.alpha(k)


def beta(k: int, g: GainSchedule) -> float:
    if k < 0:
        raise ParameterError(f"iteration index must be >= 0, got {k}")
    return g.beta(k)


def sample_direction(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Vector of independent fair +/-1 signs."""
    if dim < 1:
        raise ParameterError(f"direction dimension must be >= 1, got {dim}")
    return 2.0 * rng.integers(0, 2, size=dim) - 1.0


def gradient_estimate(f_plus: float, f_minus: float, beta_k: float, delta: np.ndarray) -> np.ndarray:
    if beta_k <= 0:
        raise ParameterError(f"perturbation size must be positive, got {beta_k}")
    return (f_plus - f_minus) / (2.0 * beta_k) * np.asarray(delta, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class SpsaIterate:
    """``sigma`` after ``k`` completed iterations, plus the two estimates
    that produced it (NaN at k=0)."""

    k: int
    sigma: ParamVector
    f_plus: float = float("nan")
    f_minus: float = float("nan")


@dataclass(eq=False)
class Trajectory:
    """Per-iteration record; row ``i`` describes the iterate after ``k[i]`` steps.

    ``infidelity`` is the exact infidelity read from the hidden model for
    diagnostics; the optimizer never sees it.
    """

    k: np.ndarray
    infidelity: np.ndarray
    f_plus: np.ndarray
    f_minus: np.ndarray
    initial_infidelity: float = float("nan")
    shots: int = 0
    final: np.ndarray | None = field(default=None, repr=False)

    COLUMNS = ("k", "infidelity", "f_plus", "f_minus")

    def __len__(self) -> int:
        return self.k.size

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.COLUMNS) + "\n")
        for row in zip(self.k.tolist(), self.infidelity.tolist(), self.f_plus.tolist(), self.f_minus.tolist()):
            buf.write(f"{row[0]},{row[1]!r},{row[2]!r},{row[3]!r}\n")
        return buf.getvalue()


def _step_values(values: np.ndarray, k: int, oracle: FidelityOracle, g: GainSchedule,
                 rng: np.random.Generator):
    delta = 2.0 * rng.integers(0, 2, size=values.size) - 1.0
    bk = g.b / (k + 1) ** g.t
    f_plus = oracle.estimate(values + bk * delta, rng)
    f_minus = oracle.estimate(values - bk * delta, rng)
    ak = g.a / (k + 1 + g.A) ** g.s
    return values - (ak * (f_plus - f_minus) / (2.0 * bk)) * delta, f_plus, f_minus


def step(it: SpsaIterate, oracle: FidelityOracle, g: GainSchedule, rng: np.random.Generator) -> SpsaIterate:
    """Advance one iteration. The perturbed points are only measured; the
    stored iterate is updated from ``sigma_k`` itself."""
    values, fp, fm = _step_values(np.asarray(it.sigma.values), it.k, oracle, g, rng)
    return SpsaIterate(it.k + 1, ParamVector(values, it.sigma.tag), fp, fm)


def run(initial: ParamVector, iterations: int, oracle: FidelityOracle, g: GainSchedule,
        rng: np.random.Generator) -> Trajectory:
    """Run ``iterations`` SPSA steps from ``initial`` and record each iterate."""
    if iterations < 1:
        raise ParameterError(f"iterations must be >= 1, got {iterations}")
    if initial.tag is not oracle.tag:
        raise ParameterError(f"initial guess is {initial.tag.value}, oracle expects {oracle.tag.value}")
    values = np.array(initial.values, dtype=np.float64)
    infid = np.empty(iterations)
    fps = np.empty(iterations)
    fms = np.empty(iterations)
    shots0 = oracle.shots
    initial_infid = oracle.true_infidelity(values)
    for k in range(iterations):
        values, fps[k], fms[k] = _step_values(values, k, oracle, g, rng)
        infid[k] = oracle.true_infidelity(values)
    return Trajectory(
        k=np.arange(1, iterations + 1),
        infidelity=infid,
        f_plus=fps,
        f_minus=fms,
        initial_infidelity=initial_infid,
        shots=oracle.shots - shots0,
        final=values,
    )
