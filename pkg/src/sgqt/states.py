"""Pure-state representation, parametrizations and fidelities.

Two parametrizations are supported. ``FULL`` stores the real and imaginary
part of every one of the ``2**n`` amplitudes; ``W_CLASS`` stores only the
``n`` single-excitation amplitudes ``alpha_i``, where ``alpha_i`` multiplies
the basis state with a single 1 on qubit ``i`` (qubit 0 is the leftmost
label, i.e. basis index ``2**(n - 1 - i)``). Parameter vectors are kept
unnormalized; :func:`to_state` normalizes on every use.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from sgqt.errors import DegenerateParametrizationError, DimensionError, ParameterError

NORM_TOL = 1e-12


class Parametrization(str, Enum):
    FULL = "full"
    W_CLASS = "w_class"


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm amplitude vector over ``2**n_qubits`` basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ParameterError(f"n_qubits must be >= 1, got {self.n_qubits}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.n_qubits,):
            raise DimensionError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, got shape {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ParameterError(f"amplitudes must have unit norm, got {norm!r}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @classmethod
    def from_amplitudes(cls, amplitudes, n_qubits: int | None = None) -> "StateVector":
        """Build a state from arbitrary nonzero amplitudes, normalizing them."""
        amps = np.asarray(amplitudes, dtype=np.complex128)
        if n_qubits is None:
            n_qubits = int(round(np.log2(amps.size)))
        norm = np.linalg.norm(amps)
        if norm == 0.0:
            raise DegenerateParametrizationError("cannot normalize the zero vector")
        return cls(n_qubits, amps / norm)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def with_phase(self, theta: float) -> "StateVector":
        return StateVector(self.n_qubits, np.exp(1j * theta) * self.amplitudes)


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Flat real vector parametrizing a state; interleaved (re, im) pairs."""

    values: np.ndarray
    tag: Parametrization = Parametrization.FULL

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size % 2:
            raise DimensionError(f"parameter vector must be 1-D of even length, got shape {vals.shape}")
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "tag", Parametrization(self.tag))

    def __len__(self) -> int:
        return self.values.size

    def n_qubits(self) -> int:
        """Qubit count implied by the vector length."""
        half = self.values.size // 2
        if self.tag is Parametrization.W_CLASS:
            return half
        return int(round(np.log2(half)))

    def as_complex(self) -> np.ndarray:
        return self.values.view(np.complex128)

    @classmethod
    def from_complex(cls, amplitudes, tag=Parametrization.FULL) -> "ParamVector":
        amps = np.ascontiguousarray(amplitudes, dtype=np.complex128)
        return cls(amps.view(np.float64).copy(), tag)


@dataclass(frozen=True, eq=False)
class WClassParams:
    """Normalized single-excitation amplitudes of an n-qubit W-class state."""

    n_qubits: int
    alphas: np.ndarray

    def __post_init__(self):
        alphas = np.asarray(self.alphas, dtype=np.complex128)
        if alphas.shape != (self.n_qubits,):
            raise DimensionError(f"expected {self.n_qubits} W-class amplitudes, got shape {alphas.shape}")
        norm = np.linalg.norm(alphas)
        if norm == 0.0:
            raise DegenerateParametrizationError("W-class amplitudes are all zero")
        object.__setattr__(self, "alphas", _frozen(alphas / norm))

    def to_state(self) -> StateVector:
        return to_state(self.to_params(), self.n_qubits)

    def to_params(self) -> ParamVector:
        return ParamVector.from_complex(self.alphas, Parametrization.W_CLASS)


@dataclass(frozen=True, eq=False)
class DepolarizedTrueState:
    """``(1 - p) |psi><psi| + p I / 2**n``, kept as its pure part and ``p``."""

    pure_part: StateVector
    p: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"depolarizing probability must lie in [0, 1], got {self.p}")

    @property
    def n_qubits(self) -> int:
        return self.pure_part.n_qubits


def w_indices(n_qubits: int) -> np.ndarray:
    """Basis indices of the single-excitation states, ordered by qubit."""
    return 2 ** (n_qubits - 1 - np.arange(n_qubits))


def expected_length(n_qubits: int, tag: Parametrization) -> int:
    if Parametrization(tag) is Parametrization.W_CLASS:
        return 2 * n_qubits
    return 2 * 2**n_qubits


def to_state(params: ParamVector, n_qubits: int) -> StateVector:
    """Normalize a parameter vector into a :class:`StateVector`."""
    want = expected_length(n_qubits, params.tag)
    if len(params) != want:
        raise DimensionError(
            f"{params.tag.value} parameters for {n_qubits} qubits need length {want}, got {len(params)}"
        )
    z = params.as_complex()
    if params.tag is Parametrization.W_CLASS:
        amps = np.zeros(2**n_qubits, dtype=np.complex128)
        amps[w_indices(n_qubits)] = z
    else:
        amps = np.array(z)
    norm = np.linalg.norm(amps)
    if norm == 0.0:
        raise DegenerateParametrizationError("parameter vector is all zeros")
    return StateVector(n_qubits, amps / norm)


def params_of(state: StateVector, tag=Parametrization.FULL) -> ParamVector:
    """Parameter vector of ``state``; for ``W_CLASS`` this keeps only the
    single-excitation amplitudes."""
    tag = Parametrization(tag)
    if tag is Parametrization.W_CLASS:
        return ParamVector.from_complex(state.amplitudes[w_indices(state.n_qubits)], tag)
    return ParamVector.from_complex(state.amplitudes, tag)


def _check_same(a: int, b: int):
    if a != b:
        raise DimensionError(f"qubit counts differ: {a} vs {b}")


def fidelity_pure(psi: StateVector, phi: StateVector) -> float:
    """``|<psi|phi>|**2``."""
    _check_same(psi.n_qubits, phi.n_qubits)
    overlap = np.vdot(psi.amplitudes, phi.amplitudes)
    return float(min(1.0, overlap.real**2 + overlap.imag**2))


def fidelity_depolarized(model: DepolarizedTrueState, phi: StateVector) -> float:
    """``<phi| rho |phi>`` for the depolarized state, evaluated analytically."""
    _check_same(model.n_qubits, phi.n_qubits)
    f = (1.0 - model.p) * fidelity_pure(model.pure_part, phi) + model.p / 2**model.n_qubits
    return float(min(1.0, max(0.0, f)))


def w_fidelity(a: WClassParams, b: WClassParams) -> float:
    """Fidelity of two W-class states in O(n)."""
    _check_same(a.n_qubits, b.n_qubits)
    overlap = np.vdot(a.alphas, b.alphas)
    return float(min(1.0, overlap.real**2 + overlap.imag**2))


def _check_rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def haar_random_state(n_qubits: int, rng) -> StateVector:
    """Haar-random pure state: normalized vector of standard complex Gaussians."""
    if n_qubits < 1:
        raise ParameterError(f"n_qubits must be >= 1, got {n_qubits}")
    rng = _check_rng(rng)
    d = 2**n_qubits
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return StateVector(n_qubits, z / np.linalg.norm(z))


def haar_random_w_state(n_qubits: int, rng) -> WClassParams:
    """Unitarily invariant random state on the n-dimensional W-class subspace."""
    if n_qubits < 1:
        raise ParameterError(f"n_qubits must be >= 1, got {n_qubits}")
    rng = _check_rng(rng)
    z = rng.standard_normal(n_qubits) + 1j * rng.standard_normal(n_qubits)
    return WClassParams(n_qubits, z)


def perturb_params(params: ParamVector, std: float, rng) -> ParamVector:
    """Add independent N(0, std**2) noise to every real entry."""
    if std < 0:
        raise ParameterError(f"perturbation std must be >= 0, got {std}")
    if std == 0:
        return params
    rng = _check_rng(rng)
    return ParamVector(params.values + rng.normal(0.0, std, size=len(params)), params.tag)


def physical_dim(n_qubits: int, tag=Parametrization.FULL) -> int:
    """Real dimension ``d`` of the state manifold used for scaling fits."""
    tag = Parametrization(tag)
    if n_qubits < 1:
        raise ParameterError(f"n_qubits must be >= 1, got {n_qubits}")
    if tag is Parametrization.W_CLASS:
        if n_qubits < 2:
            raise ParameterError("W-class dimension needs n_qubits >= 2")
        return 2 * (n_qubits - 1)
    return 2 * (2**n_qubits - 1)
