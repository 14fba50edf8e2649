"""Circuits preparing fermion determinants, rotated determinants, post-selected
superpositions and one-hot boson product states.

Every preparation circuit starts from the all-down register ``|1...1>``, which
is the fermion vacuum. Circuits carry compensating global phases, so the
prepared states are exact (not only up to a phase).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mappings import BosonLayout, Fermion, jordan_wigner, quadratic_form
from .pauli import PauliString, PauliSum
from .synthesis import (Circuit, NonHermitianError, PhaseOnControl, Rx, TrotterPlan,
                        controlled_circuit, synthesize_pauli_exponential, trotterize)


@dataclass(frozen=True)
class SlaterSpec:
    """Determinant ``c+_{o[0]} c+_{o[1]} ... c+_{o[-1]} |vac>``."""

    num_modes: int
    occupied: tuple[int, ...] = ()

    def __post_init__(self):
        occ = tuple(int(j) for j in self.occupied)
        if len(set(occ)) != len(occ):
            raise ValueError("occupied modes must be distinct")
        if any(not 0 <= j < self.num_modes for j in occ):
            raise ValueError("occupied mode out of range")
        object.__setattr__(self, "occupied", occ)


@dataclass(frozen=True)
class ThoulessSpec:
    base: SlaterSpec
    M: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.M, dtype=complex)
        if m.shape != (self.base.num_modes, self.base.num_modes):
            raise ValueError("M must be num_modes x num_modes")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-12:
            raise NonHermitianError("Thouless generator M must be Hermitian")
        object.__setattr__(self, "M", m)


@dataclass(frozen=True)
class LinearCombinationSpec:
    amplitudes: tuple[complex, ...]
    branch_preps: tuple[Circuit, ...]

    def __post_init__(self):
        g = np.asarray(self.amplitudes, dtype=complex)
        if g.size < 1 or g.size != len(self.branch_preps):
            raise ValueError("one amplitude per branch circuit is required")
        norm = np.linalg.norm(g)
        if norm == 0:
            raise ValueError("amplitudes are all zero")
        sizes = {c.num_qubits for c in self.branch_preps}
        if len(sizes) != 1:
            raise ValueError("branch circuits must act on the same register")
        object.__setattr__(self, "amplitudes", tuple(complex(x) for x in g / norm))
        object.__setattr__(self, "branch_preps", tuple(self.branch_preps))

    @property
    def num_branches(self) -> int:
        return len(self.amplitudes)

    @property
    def num_system_qubits(self) -> int:
        return self.branch_preps[0].num_qubits


@dataclass(frozen=True)
class BosonProductSpec:
    layout: BosonLayout
    occupations: tuple[int, ...]
    total: int | None = None

    def __post_init__(self):
        occ = tuple(int(x) for x in self.occupations)
        if len(occ) != self.layout.num_sites:
            raise ValueError("one occupation per site expected")
        if any(not 0 <= x <= self.layout.n_max for x in occ):
            raise ValueError(f"occupations must lie in 0..{self.layout.n_max}")
        if self.total is not None and sum(occ) != self.total:
            raise ValueError(f"occupations sum to {sum(occ)}, declared total is {self.total}")
        object.__setattr__(self, "occupations", occ)


def _flip(q: int, n: int) -> Circuit:
    """Exact ``X`` on qubit ``q``: ``X = i Rx(pi)``."""
    return Circuit(n, (Rx(q, math.pi),), math.pi / 2)


def majorana_string(num_modes: int, m: int) -> tuple[PauliString, int]:
    """``c_m + c+_m = X_m prod_{j<m}(-Z_j)`` as (phase-free string, sign)."""
    letters = {j: "Z" for j in range(m)}
    letters[m] = "X"
    return PauliString.from_dict(num_modes, letters), (-1) ** m


def prepare_slater(spec: SlaterSpec) -> Circuit:
    """Apply ``U_m = exp(i pi/2 (c_m + c+_m))`` for each occupied mode, last first.

    On a state where mode ``m`` is empty, ``U_m`` acts as ``i c+_m``; the
    accumulated ``i**N_e`` is removed through the global phase.
    """
    n = spec.num_modes
    circ = Circuit(n)
    for m in reversed(spec.occupied):
        s, sign = majorana_string(n, m)
        circ = circ.then(synthesize_pauli_exponential(s.with_phase(sign), math.pi / 2))
    return Circuit(n, circ.gates, circ.global_phase - len(spec.occupied) * math.pi / 2)


def thouless_generator(spec: ThoulessSpec) -> PauliSum:
    """Qubit image of ``-c+ M c`` so that ``exp(i * generator)`` is ``exp(-i c+ M c)``."""
    return -jordan_wigner(quadratic_form(Fermion(), spec.M))


def thouless_rotate(spec: ThoulessSpec, steps: int = 64) -> Circuit:
    """``prepare_slater(base)`` followed by the Trotterized ``exp(-i c+ M c)``."""
    base = prepare_slater(spec.base)
    gen = thouless_generator(spec)
    if gen.is_zero():
        return base
    return base.then(trotterize(TrotterPlan(gen, 1.0, steps)))


def thouless_converged(spec: ThoulessSpec, steps: int = 64, tol: float = 1e-8) -> bool:
    """True if doubling ``steps`` changes the prepared state's fidelity by less than ``tol``."""
    from .simulator import StateVector, exact_evolution, run

    vac = StateVector.all_down(spec.base.num_modes)
    target = exact_evolution(thouless_generator(spec), 1.0, run(prepare_slater(spec.base), vac))
    f1 = run(thouless_rotate(spec, steps), vac).fidelity(target)
    f2 = run(thouless_rotate(spec, 2 * steps), vac).fidelity(target)
    return f2 - f1 < tol


# --- post-selected superpositions ---------------------------------------------

def _exchange(n: int, a: int, b: int, phi: float) -> Circuit:
    """``exp(i phi (X_a X_b + Y_a Y_b)/2)``; on ``|10>`` gives ``cos|10> + i sin|01>``."""
    xx = PauliString.from_dict(n, {a: "X", b: "X"})
    yy = PauliString.from_dict(n, {a: "Y", b: "Y"})
    return synthesize_pauli_exponential(xx, phi / 2).then(synthesize_pauli_exponential(yy, phi / 2))


def one_hot_amplitude_circuit(amplitudes: Sequence[complex], num_qubits: int, offset: int = 0) -> Circuit:
    """From ``|0...0>`` on ``L`` ancillas, prepare ``sum_a g_a |e_a>`` exactly.

    ``|e_a>`` has ancilla ``a`` in ``|1>`` and the others in ``|0>``. The
    excitation is injected on the first ancilla and passed down the chain by
    exchange rotations; a final phase gate per ancilla fixes the complex phases.
    """
    g = np.asarray(amplitudes, dtype=complex)
    g = g / np.linalg.norm(g)
    L = g.size
    anc = [offset + a for a in range(L)]
    circ = _flip(anc[0], num_qubits)
    # amplitude currently on ancilla a (before passing on) is `rest`, with phase `phase[a]`
    rest = 1.0
    carried = np.zeros(L, dtype=complex)
    carried[0] = 1.0
    for a in range(L - 1):
        keep = abs(g[a])
        ratio = 0.0 if rest <= 1e-15 else min(1.0, keep / rest)
        phi = math.acos(ratio)
        circ = circ.then(_exchange(num_qubits, anc[a], anc[a + 1], phi))
        carried[a + 1] = carried[a] * 1j * math.sin(phi)
        carried[a] = carried[a] * math.cos(phi)
        rest = math.sqrt(max(rest ** 2 - keep ** 2, 0.0))
    gates = []
    for a in range(L):
        if abs(g[a]) > 1e-15:
            fix = np.angle(g[a]) - np.angle(carried[a])
            if abs(fix) > 0:
                gates.append(PhaseOnControl(anc[a], 1, float(fix)))
    return circ.then(Circuit(num_qubits, tuple(gates)))


@dataclass(frozen=True)
class PostSelectedPrep:
    circuit: Circuit
    ancilla_indices: tuple[int, ...]
    accept_pattern: dict
    predicted_success_probability: float | None
    num_system_qubits: int


def prepare_linear_combination(spec: LinearCombinationSpec) -> PostSelectedPrep:
    """Prepare ``sum_a g_a |phi_a>`` with ``L`` ancillas and post-selection.

    Layout: system qubits first, ancillas ``n .. n+L-1``. The ancillas carry
    ``sum_a g_a |e_a>``; branch ``a`` is prepared under control of ancilla
    ``a``; the uniform one-hot preparation is then undone, so finding every
    ancilla in ``|0>`` projects the ancillas onto the uniform superposition of
    ``|e_a>``. The system is left in the normalized target state with
    probability ``||sum_a g_a phi_a||^2 / L``, i.e. ``1/L`` for orthonormal branches.
    """
    n = spec.num_system_qubits
    L = spec.num_branches
    total = n + L
    circ = one_hot_amplitude_circuit(spec.amplitudes, total, offset=n)
    for a, branch in enumerate(spec.branch_preps):
        circ = circ.then(controlled_circuit(branch.embed(total), n + a, 1))
    circ = circ.then(one_hot_amplitude_circuit([1.0] * L, total, offset=n).inverse())
    ancillas = tuple(range(n, total))
    return PostSelectedPrep(
        circuit=circ,
        ancilla_indices=ancillas,
        accept_pattern={q: 0 for q in ancillas},
        predicted_success_probability=1.0 / L,
        num_system_qubits=n,
    )


def linear_combination_initial_state(prep: PostSelectedPrep):
    """System all-down, ancillas ``|0>``: the input the LCU circuit expects."""
    from .simulator import StateVector

    sys = StateVector.all_down(prep.num_system_qubits)
    anc = StateVector.basis(len(prep.ancilla_indices), 0)
    return sys.tensor(anc)


def run_linear_combination(prep: PostSelectedPrep):
    """Execute and post-select; returns ``(probability, system state or None)``."""
    from .simulator import post_select, reduced_state, run

    out = run(prep.circuit, linear_combination_initial_state(prep))
    sel = post_select(out, prep.accept_pattern)
    if sel.empty:
        return sel.probability, None
    return sel.probability, reduced_state(sel.state, list(range(prep.num_system_qubits)))


def prepare_boson_product(spec: BosonProductSpec) -> Circuit:
    """Flip qubit ``(n_i, i)`` of every site up, starting from all spins down."""
    n = spec.layout.num_qubits
    circ = Circuit(n)
    for site, occ in enumerate(spec.occupations):
        circ = circ.then(_flip(spec.layout.qubit_index(site, occ), n))
    return circ


__all__ = [
    "BosonProductSpec", "LinearCombinationSpec", "PostSelectedPrep", "SlaterSpec", "ThoulessSpec",
    "linear_combination_initial_state", "majorana_string", "one_hot_amplitude_circuit",
    "prepare_boson_product", "prepare_linear_combination", "prepare_slater", "run_linear_combination",
    "thouless_converged", "thouless_generator", "thouless_rotate",
]
