"""Shot-noise limited infidelity estimates against a hidden true state.

A measurement "in the basis containing the target" is a two-outcome trial
whose success probability is the fidelity ``F`` between the true state and
the target. ``N`` repetitions are simulated as one ``Binomial(N, F)`` draw.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from sgqt.errors import DegenerateParametrizationError, DimensionError, ParameterError
from sgqt.states import (
    DepolarizedTrueState,
    ParamVector,
    Parametrization,
    StateVector,
    expected_length,
    w_indices,
)

#: Sentinel for ``OracleConfig.shots``: return the exact expectation.
INFINITE = None


class ModelKind(str, Enum):
    PURE = "pure"
    DEPOLARIZED = "depolarized"


@dataclass(frozen=True, eq=False)
class TrueStateModel:
    """The state the experiment actually prepares. Only this module reads it."""

    kind: ModelKind
    pure_part: StateVector
    p: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"depolarizing probability must lie in [0, 1], got {self.p}")
        if self.kind is ModelKind.PURE and self.p != 0.0:
            raise ParameterError("a PURE model must have p == 0")

    @classmethod
    def pure(cls, state: StateVector) -> "TrueStateModel":
        return cls(ModelKind.PURE, state, 0.0)

    @classmethod
    def depolarized(cls, state: StateVector, p: float) -> "TrueStateModel":
        return cls(ModelKind.DEPOLARIZED, state, float(p))

    @property
    def n_qubits(self) -> int:
        return self.pure_part.n_qubits

    def as_depolarized(self) -> DepolarizedTrueState:
        return DepolarizedTrueState(self.pure_part, self.p)


@dataclass(frozen=True)
class OracleConfig:
    """``shots=INFINITE`` (None) gives exact expectations, for testing."""

    shots: int | None = 10_000
    measurement_noise_std: float = 0.0

    def __post_init__(self):
        if self.shots is not INFINITE:
            if int(self.shots) != self.shots or self.shots < 1:
                raise ParameterError(f"shots must be a positive integer or INFINITE, got {self.shots!r}")
            object.__setattr__(self, "shots", int(self.shots))
        if self.measurement_noise_std < 0:
            raise ParameterError(f"measurement noise std must be >= 0, got {self.measurement_noise_std}")

    @property
    def exact(self) -> bool:
        return self.shots is INFINITE


@dataclass(frozen=True)
class InfidelityEstimate:
    value: float
    shots_used: int


class FidelityOracle:
    """A measurement session: hidden model, shot budget and usage counters.

    Parameter vectors are passed as raw float arrays in the coordinates of
    ``tag``. For ``W_CLASS`` targets only the single-excitation components of
    the true state contribute to the overlap, so the fidelity is computed in
    O(n) without building ``2**n`` amplitudes.
    """

    def __init__(self, model: TrueStateModel, cfg: OracleConfig, tag=Parametrization.FULL):
        self.model = model
        self.cfg = cfg
        self.tag = Parametrization(tag)
        n = model.n_qubits
        amps = model.pure_part.amplitudes
        self._ref = np.ascontiguousarray(amps[w_indices(n)] if self.tag is Parametrization.W_CLASS else amps)
        self._length = expected_length(n, self.tag)
        self._keep = 1.0 - model.p
        self._mixed = model.p / 2**n
        self.calls = 0
        self.shots = 0

    @property
    def dim(self) -> int:
        """Length of the real parameter vectors this oracle accepts."""
        return self._length

    def fidelity(self, values: np.ndarray) -> float:
        """Exact fidelity between the true state and the normalized target."""
        if values.shape != (self._length,):
            raise DimensionError(f"expected {self._length} parameters, got shape {values.shape}")
        z = values.view(np.complex128)
        norm2 = np.dot(values, values)
        if norm2 == 0.0:
            raise DegenerateParametrizationError("parameter vector is all zeros")
        ov = np.vdot(self._ref, z)
        f = self._keep * (ov.real * ov.real + ov.imag * ov.imag) / norm2 + self._mixed
        return 1.0 if f > 1.0 else (0.0 if f < 0.0 else float(f))

    def true_infidelity(self, values: np.ndarray) -> float:
        """Diagnostic only: exact infidelity, no shots consumed."""
        return 1.0 - self.fidelity(values)

    def estimate(self, values: np.ndarray, rng: np.random.Generator) -> float:
        """One noisy estimate of the infidelity; consumes ``shots`` repetitions."""
        std = self.cfg.measurement_noise_std
        if std > 0.0:
            values = values + rng.normal(0.0, std, size=values.shape)
        f = self.fidelity(values)
        self.calls += 1
        n = self.cfg.shots
        if n is INFINITE:
            return 1.0 - f
        self.shots += n
        return 1.0 - rng.binomial(n, f) / n


def estimate_infidelity(model: TrueStateModel, target: ParamVector, cfg: OracleConfig, rng,
                        session: FidelityOracle | None = None) -> InfidelityEstimate:
    """Estimate ``1 - F(model, target)`` from ``cfg.shots`` simulated measurements.

    When ``session`` is given its counters are advanced; otherwise a
    throwaway session is used.
    """
    if session is None:
        session = FidelityOracle(model, cfg, target.tag)
    elif session.model is not model or session.cfg != cfg or session.tag is not target.tag:
        raise ParameterError("session was opened for a different model, config or parametrization")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    value = session.estimate(np.asarray(target.values), rng)
    return InfidelityEstimate(value, 0 if cfg.exact else cfg.shots)


def oracle_call_count(session: FidelityOracle) -> int:
    """Cumulative shots consumed by ``session``.

    Exact (INFINITE-shot) calls consume no shots; they are still counted in
    ``session.calls``.
    """
    return session.shots
