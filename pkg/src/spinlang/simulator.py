"""Statevector execution of circuits plus the dense-matrix reference evolution.

Amplitude index ``b`` has qubit 0 in its most significant bit. Gates are
applied by reshaping the amplitude array to one axis per qubit, so no
full-size matrices are formed; ``exact_evolution`` is the dense oracle.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .pauli import (PauliString, PauliSum, SINGLE_QUBIT_MATRICES, DimensionError,
                    _check_oracle, apply_string)
from .synthesis import CPauliExp, Circuit, PhaseOnControl, Rx, Ry, Rz, ZZ

NORM_TOL = 1e-10


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise DimensionError(f"expected {1 << self.num_qubits} amplitudes, got {self.amplitudes.shape}")

    @classmethod
    def basis(cls, num_qubits: int, index: int = 0) -> StateVector:
        amps = np.zeros(1 << num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_bits(cls, bits: str) -> StateVector:
        """``"0110"`` with the leftmost character for qubit 0."""
        return cls.basis(len(bits), int(bits, 2) if bits else 0)

    @classmethod
    def all_down(cls, num_qubits: int) -> StateVector:
        """``|1...1>``: the fermion vacuum and the starting point of preparation circuits."""
        return cls.basis(num_qubits, (1 << num_qubits) - 1)

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = True) -> StateVector:
        amps = np.asarray(amps, dtype=complex)
        n = int(round(math.log2(amps.size)))
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(n, amps)

    @classmethod
    def random(cls, num_qubits: int, seed=None) -> StateVector:
        rng = np.random.default_rng(seed)
        v = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
        return cls.from_amplitudes(v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> StateVector:
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def overlap(self, other: StateVector) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: StateVector) -> float:
        return abs(self.overlap(other)) ** 2

    def tensor(self, other: StateVector) -> StateVector:
        """``self`` on the leading qubits, ``other`` after them."""
        return StateVector(self.num_qubits + other.num_qubits, np.kron(self.amplitudes, other.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_csv(self, threshold: float = 1e-12) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "real", "imag"])
        for i, a in enumerate(self.amplitudes):
            if abs(a) >= threshold:
                w.writerow([i, f"{a.real:.17g}", f"{a.imag:.17g}"])
        return buf.getvalue()


# --- gate kernels -----------------------------------------------------------

def _apply_1q(tensor: np.ndarray, q: int, m: np.ndarray) -> np.ndarray:
    t = np.moveaxis(tensor, q, 0)
    shape = t.shape
    t = (m @ t.reshape(2, -1)).reshape(shape)
    return np.moveaxis(t, 0, q)


def _rotation_matrix(letter: str, angle: float) -> np.ndarray:
    return (math.cos(angle / 2) * SINGLE_QUBIT_MATRICES["I"]
            - 1j * math.sin(angle / 2) * SINGLE_QUBIT_MATRICES[letter])


def _zz_phases(n: int, a: int, b: int, angle: float) -> np.ndarray:
    idx = np.arange(1 << n)
    za = 1 - 2 * ((idx >> (n - 1 - a)) & 1)
    zb = 1 - 2 * ((idx >> (n - 1 - b)) & 1)
    return np.exp(1j * angle * za * zb)


def _branch_mask(n: int, control: int, value: int) -> np.ndarray:
    idx = np.arange(1 << n)
    return ((idx >> (n - 1 - control)) & 1) == value


def apply_gate(n: int, g, amps: np.ndarray) -> np.ndarray:
    """Apply one gate to ``amps`` of shape ``(2**n,)`` or ``(2**n, k)``."""
    extra = amps.shape[1:]
    if isinstance(g, (Rx, Ry, Rz)):
        letter = type(g).__name__[1].upper()
        t = amps.reshape((2,) * n + extra)
        return _apply_1q(t, g.qubit, _rotation_matrix(letter, g.angle)).reshape(amps.shape)
    if isinstance(g, ZZ):
        ph = _zz_phases(n, g.qubit_a, g.qubit_b, g.angle)
        return amps * ph.reshape((-1,) + (1,) * len(extra))
    if isinstance(g, CPauliExp):
        mask = _branch_mask(n, g.control, g.control_value).reshape((-1,) + (1,) * len(extra))
        rotated = math.cos(g.angle) * amps + 1j * math.sin(g.angle) * apply_string(g.string, amps)
        return np.where(mask, rotated, amps)
    if isinstance(g, PhaseOnControl):
        mask = _branch_mask(n, g.control, g.control_value).reshape((-1,) + (1,) * len(extra))
        return np.where(mask, np.exp(1j * g.phase) * amps, amps)
    raise TypeError(f"unknown gate {g!r}")


def apply_circuit(c: Circuit, amps: np.ndarray) -> np.ndarray:
    out = np.asarray(amps, dtype=complex)
    for g in c.gates:
        out = apply_gate(c.num_qubits, g, out)
    if c.global_phase:
        out = out * np.exp(1j * c.global_phase)
    return out


def run(c: Circuit, initial: StateVector) -> StateVector:
    if c.num_qubits != initial.num_qubits:
        raise DimensionError(f"circuit has {c.num_qubits} qubits, state has {initial.num_qubits}")
    return StateVector(c.num_qubits, apply_circuit(c, initial.amplitudes))


def circuit_unitary(c: Circuit, limit: int | None = None) -> np.ndarray:
    _check_oracle(c.num_qubits, limit)
    return apply_circuit(c, np.eye(1 << c.num_qubits, dtype=complex))


# --- dense oracle -------------------------------------------------------------

def evolution_operator(h: PauliSum, t: float, limit: int | None = None) -> np.ndarray:
    """``exp(i h t)`` by diagonalizing the Hermitian matrix of ``h``."""
    m = h.to_matrix(limit)
    if not h.is_hermitian():
        from scipy.linalg import expm
        return expm(1j * t * m)
    w, v = np.linalg.eigh(m)
    return (v * np.exp(1j * t * w)) @ v.conj().T


def exact_evolution(h: PauliSum, t: float, initial: StateVector, limit: int | None = None) -> StateVector:
    """Apply ``exp(i h t)``; this is the oracle every circuit is checked against."""
    if h.num_qubits != initial.num_qubits:
        raise DimensionError("operator and state sizes differ")
    if h.is_zero():
        return initial.copy()
    return StateVector(initial.num_qubits, evolution_operator(h, t, limit) @ initial.amplitudes)


def unitary_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Spectral-norm distance after the best global phase alignment."""
    tr = np.trace(u.conj().T @ v)
    phase = tr / abs(tr) if abs(tr) > 1e-300 else 1.0
    return float(np.linalg.norm(u * phase - v, 2))


# --- measurement --------------------------------------------------------------

def expectation(obs: PauliSum | PauliString, s: StateVector) -> complex:
    if isinstance(obs, PauliString):
        obs = PauliSum.from_string(obs)
    if obs.num_qubits != s.num_qubits:
        raise DimensionError("observable and state sizes differ")
    total = 0j
    for string, c in obs.items():
        total += c * np.vdot(s.amplitudes, apply_string(string, s.amplitudes))
    return complex(total)


@dataclass
class PostSelection:
    probability: float
    state: StateVector | None

    @property
    def empty(self) -> bool:
        return self.state is None

    def __iter__(self):
        yield self.probability
        yield self.state


def post_select(s: StateVector, qubit_outcomes: Mapping[int, int], tol: float = 1e-14) -> PostSelection:
    """Born probability of the outcome pattern and the renormalized conditional state.

    A zero-probability pattern yields ``state=None`` (``.empty`` is true).
    """
    n = s.num_qubits
    mask = np.ones(1 << n, dtype=bool)
    for q, v in qubit_outcomes.items():
        mask &= _branch_mask(n, q, int(v))
    amps = np.where(mask, s.amplitudes, 0)
    p = float(np.vdot(amps, amps).real)
    if p <= tol:
        return PostSelection(p, None)
    return PostSelection(p, StateVector(n, amps / math.sqrt(p)))


def reduced_state(s: StateVector, keep: list[int]) -> StateVector:
    """Factor out the other qubits of a product state; raises if they are entangled."""
    n = s.num_qubits
    drop = [q for q in range(n) if q not in keep]
    t = np.moveaxis(s.amplitudes.reshape((2,) * n), keep + drop, list(range(n)))
    mat = t.reshape(1 << len(keep), 1 << len(drop))
    u, sv, vh = np.linalg.svd(mat, full_matrices=False)
    if sv.size > 1 and sv[1] > 1e-8:
        raise ValueError("kept qubits are entangled with the rest")
    # fix the phase so that the dropped register carries a positive largest amplitude
    k = np.argmax(np.abs(vh[0]))
    ph = vh[0, k] / abs(vh[0, k])
    return StateVector(len(keep), u[:, 0] * sv[0] * ph)


@dataclass
class MeasurementRecord:
    observable: str
    value: complex
    shots: int | str


_BASIS_CHANGE = {
    "Z": np.eye(2, dtype=complex),
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "Y": np.array([[1, -1j], [1, 1j]], dtype=complex) / math.sqrt(2),
}


def sample(obs: str | PauliString, s: StateVector, shots: int, seed=None) -> MeasurementRecord:
    """Sampled mean of a single-qubit Pauli (``"X3"`` or a weight-1 string)."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    if isinstance(obs, str):
        obs = PauliString.from_label(obs, s.num_qubits)
    (q, letter), = obs.letters.items()
    t = _apply_1q(s.amplitudes.reshape((2,) * s.num_qubits), q, _BASIS_CHANGE[letter])
    p_up = float(np.sum(np.abs(np.take(t, 0, axis=q)) ** 2))
    p_up = min(max(p_up, 0.0), 1.0)
    rng = np.random.default_rng(seed)
    ups = rng.binomial(shots, p_up)
    mean = (2 * ups - shots) / shots
    return MeasurementRecord(f"{letter}{q}", complex(mean * obs.phase), shots)


__all__ = [
    "MeasurementRecord", "PostSelection", "StateVector", "apply_circuit", "circuit_unitary",
    "evolution_operator", "exact_evolution", "expectation", "post_select", "reduced_state",
    "run", "sample", "unitary_distance",
]
