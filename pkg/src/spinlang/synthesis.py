"""Compilation of Pauli exponentials into single-qubit rotations and Ising gates.

Gate conventions:

* ``Rx/Ry/Rz(q, a)`` is ``exp(-i a/2 sigma)`` on qubit ``q``;
* ``ZZ(a, b, w)`` is ``exp(i w Z_a Z_b)``;
* ``CPauliExp(c, v, P, t)`` applies ``exp(i t P)`` when qubit ``c`` is ``|v>``;
* ``PhaseOnControl(c, v, phi)`` multiplies the ``|v>`` branch of qubit ``c`` by
  ``exp(i phi)``.

A :class:`Circuit` also carries a ``global_phase``; the circuit unitary is
``exp(i global_phase)`` times the ordered gate product, so synthesis is exact
rather than "up to a phase".
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .pauli import PauliString, PauliSum, commutes, multiply


@dataclass(frozen=True)
class Rx:
    qubit: int
    angle: float

    def qubits(self):
        return (self.qubit,)


@dataclass(frozen=True)
class Ry:
    qubit: int
    angle: float

    def qubits(self):
        return (self.qubit,)


@dataclass(frozen=True)
class Rz:
    qubit: int
    angle: float

    def qubits(self):
        return (self.qubit,)


@dataclass(frozen=True)
class ZZ:
    qubit_a: int
    qubit_b: int
    angle: float

    def __post_init__(self):
        if self.qubit_a == self.qubit_b:
            raise ValueError("ZZ needs two distinct qubits")

    def qubits(self):
        return (self.qubit_a, self.qubit_b)


@dataclass(frozen=True)
class CPauliExp:
    control: int
    control_value: int
    string: PauliString
    angle: float

    def __post_init__(self):
        if self.control_value not in (0, 1):
            raise ValueError("control_value must be 0 or 1")
        if self.string.phase != 1:
            if self.string.phase == -1:
                object.__setattr__(self, "string", self.string.canonical())
                object.__setattr__(self, "angle", -self.angle)
            else:
                raise ValueError("controlled string must carry a real phase")
        if self.string.ops[self.control] != "I":
            raise ValueError(f"control qubit {self.control} lies in the string support")

    def qubits(self):
        return (self.control,) + self.string.support()


@dataclass(frozen=True)
class PhaseOnControl:
    control: int
    control_value: int
    phase: float

    def __post_init__(self):
        if self.control_value not in (0, 1):
            raise ValueError("control_value must be 0 or 1")

    def qubits(self):
        return (self.control,)


Gate = Union[Rx, Ry, Rz, ZZ, CPauliExp, PhaseOnControl]
ELEMENTARY = (Rx, Ry, Rz, ZZ)
_ROT = {"X": Rx, "Y": Ry, "Z": Rz}


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: tuple = ()
    global_phase: float = 0.0

    def __post_init__(self):
        gates = tuple(self.gates)
        for g in gates:
            for q in g.qubits():
                if not 0 <= q < self.num_qubits:
                    raise ValueError(f"gate {g} touches qubit {q} outside a {self.num_qubits}-qubit circuit")
            if isinstance(g, CPauliExp) and g.string.num_qubits != self.num_qubits:
                raise ValueError("controlled string size differs from circuit size")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "global_phase", float(self.global_phase))

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def then(self, other: Circuit) -> Circuit:
        """``other`` applied after ``self``."""
        if other.num_qubits != self.num_qubits:
            raise ValueError("circuit sizes differ")
        return Circuit(self.num_qubits, self.gates + other.gates, self.global_phase + other.global_phase)

    def __add__(self, other: Circuit) -> Circuit:
        return self.then(other)

    def repeat(self, times: int) -> Circuit:
        return Circuit(self.num_qubits, self.gates * times, self.global_phase * times)

    def inverse(self) -> Circuit:
        return Circuit(self.num_qubits, tuple(_invert(g) for g in reversed(self.gates)), -self.global_phase)

    def embed(self, num_qubits: int, offset: int = 0) -> Circuit:
        """Relabel qubit ``q`` as ``q + offset`` in a ``num_qubits`` register."""
        if offset < 0 or offset + self.num_qubits > num_qubits:
            raise ValueError("embedding does not fit")
        return Circuit(num_qubits, tuple(_shift(g, offset, num_qubits) for g in self.gates), self.global_phase)

    def is_elementary(self) -> bool:
        return all(isinstance(g, ELEMENTARY) for g in self.gates)

    def to_text(self) -> str:
        return circuit_to_text(self)


def _invert(g: Gate) -> Gate:
    if isinstance(g, (Rx, Ry, Rz, ZZ, CPauliExp)):
        return replace(g, angle=-g.angle)
    return replace(g, phase=-g.phase)


def _shift(g: Gate, k: int, n: int) -> Gate:
    if isinstance(g, (Rx, Ry, Rz)):
        return replace(g, qubit=g.qubit + k)
    if isinstance(g, ZZ):
        return ZZ(g.qubit_a + k, g.qubit_b + k, g.angle)
    if isinstance(g, CPauliExp):
        ops = ["I"] * n
        ops[k:k + g.string.num_qubits] = g.string.ops
        return CPauliExp(g.control + k, g.control_value, PauliString(tuple(ops)), g.angle)
    return replace(g, control=g.control + k)


# --- Pauli exponential synthesis --------------------------------------------

def _rotation_gate(q: int, letter: str, phi: float) -> Gate:
    """``exp(i phi sigma_letter)`` on qubit ``q``."""
    return _ROT[letter](q, -2.0 * phi)


@dataclass(frozen=True)
class _Clifford:
    """``exp(i phi Q)`` for a one- or two-qubit string ``Q`` and ``phi = +-pi/4``."""
    string: PauliString
    phi: float

    def conjugate(self, p: PauliString) -> PauliString:
        # G^dag P G with G = exp(i phi Q): unchanged if [P,Q]=0, else P exp(2 i phi Q)
        if commutes(p, self.string):
            return p
        s = 1 if self.phi > 0 else -1
        return multiply(p, self.string.with_phase(1j * s * self.string.phase))

    def gate(self) -> Gate:
        sup = self.string.support()
        if len(sup) == 1:
            return _rotation_gate(sup[0], self.string.ops[sup[0]], self.phi)
        return ZZ(sup[0], sup[1], self.phi)


def synthesize_pauli_exponential(string: PauliString, angle: float) -> Circuit:
    """Circuit for ``exp(i angle string)`` built from rotations and ZZ gates.

    The first support qubit acts as a pivot. Every other letter except one
    partner is turned into ``Z`` by a single-qubit basis change and then
    absorbed into the pivot by a ``ZZ(pi/4)`` conjugation; the pivot and partner
    are rotated to ``Z`` so that the core is one ``ZZ`` gate (or one ``Rz`` for a
    single-qubit string). For ``X1 Z2 X3`` this yields the familiar seven-gate
    network. Gate count is at most ``4k - 1`` for support size ``k >= 2``.
    """
    n = string.num_qubits
    if string.phase not in (1, -1):
        raise ValueError("string phase must be +-1; fold other phases into the angle")
    angle = float(angle) * string.phase.real
    p = string.canonical()
    support = p.support()
    if not support:
        return Circuit(n, (), angle)

    cliffords: list[_Clifford] = []

    def push(c: _Clifford):
        nonlocal p
        cliffords.append(c)
        p = c.conjugate(p)

    def to_z(q: int):
        letter = p.ops[q]
        if letter == "X":
            push(_Clifford(PauliString.from_dict(n, {q: "Y"}), -math.pi / 4))
        elif letter == "Y":
            push(_Clifford(PauliString.from_dict(n, {q: "X"}), math.pi / 4))

    pivot = support[0]
    others = support[1:]
    if len(others) > 1:
        eliminate = others[1:]
        if p.ops[pivot] == "Z":
            push(_Clifford(PauliString.from_dict(n, {pivot: "Y"}), math.pi / 4))
        for q in eliminate:
            to_z(q)
            push(_Clifford(PauliString.from_dict(n, {pivot: "Z", q: "Z"}), math.pi / 4))
    for q in others[:1]:
        to_z(q)
    to_z(pivot)

    sign = p.phase.real
    assert p.weight == len(support) - len(others[1:]) and p.phase in (1, -1)
    if others:
        core: Gate = ZZ(pivot, others[0], sign * angle)
    else:
        core = Rz(pivot, -2.0 * sign * angle)

    # exp(i a P) = G1 G2 ... Gm exp(i a P') Gm^dag ... G1^dag; time runs left to right
    pre = [_invert(c.gate()) for c in cliffords]
    post = [c.gate() for c in reversed(cliffords)]
    return Circuit(n, tuple(pre) + (core,) + tuple(post))


# --- Trotterization -----------------------------------------------------------

class NonHermitianError(ValueError):
    """A Hamiltonian or generator is not Hermitian."""


def canonical_term_order(h: PauliSum) -> list[tuple[PauliString, float]]:
    """Terms sorted by support, then lexicographically by letters."""
    terms = [(s, c) for s, c in h.items()]
    terms.sort(key=lambda sc: (sc[0].support(), "".join(sc[0].ops)))
    return [(s, float(c.real)) for s, c in terms]


@dataclass
class TrotterPlan:
    hamiltonian: PauliSum
    total_time: float
    steps: int = 1
    term_order: list | None = None
    order: int = 1

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.order != 1:
            raise NotImplementedError("only the first-order product formula is implemented")
        if not self.hamiltonian.is_hermitian():
            raise NonHermitianError("Trotterization needs a Hermitian Hamiltonian")
        if self.term_order is None:
            self.term_order = canonical_term_order(self.hamiltonian)
        else:
            keys = sorted(s.ops for s, _ in self.term_order)
            if keys != sorted(s.ops for s, _ in self.hamiltonian.items()):
                raise ValueError("term_order must be a permutation of the Hamiltonian terms")

    @property
    def dt(self) -> float:
        return self.total_time / self.steps


def trotterize(plan: TrotterPlan) -> Circuit:
    """First-order product formula for ``exp(i H t)`` with ``plan.steps`` steps."""
    n = plan.hamiltonian.num_qubits
    step = Circuit(n)
    for s, c in plan.term_order:
        step = step.then(synthesize_pauli_exponential(s, c * plan.dt))
    return step.repeat(plan.steps)


def evolution_circuit(h: PauliSum, t: float, steps: int = 1) -> Circuit:
    return trotterize(TrotterPlan(h, t, steps))


# --- controlled operations ------------------------------------------------------

def expand_phase(g: PhaseOnControl, num_qubits: int) -> Circuit:
    """``diag`` phase on one control branch as ``Rz`` plus global phase."""
    sign = 1.0 if g.control_value == 1 else -1.0
    return Circuit(num_qubits, (Rz(g.control, sign * g.phase),), g.phase / 2)


def expand_controlled(g: CPauliExp) -> Circuit:
    """Compile a controlled Pauli exponential into elementary gates.

    With ``Pi_v = (1 + (-1)^v Z_c)/2``,
    ``exp(i t P Pi_v) = exp(i t/2 P) exp(+-i t/2 Z_c P)``; the two factors
    commute, so the decomposition is exact including relative phases.
    An identity string reduces to a phase on the control branch.
    """
    n = g.string.num_qubits
    if g.string.ops[g.control] != "I":
        raise ValueError("control qubit overlaps the string support")
    if g.string.weight == 0:
        return expand_phase(PhaseOnControl(g.control, g.control_value, g.angle), n)
    sign = 1.0 if g.control_value == 0 else -1.0
    zp = multiply(PauliString.from_dict(n, {g.control: "Z"}), g.string)
    return (synthesize_pauli_exponential(g.string, g.angle / 2)
            .then(synthesize_pauli_exponential(zp, sign * g.angle / 2)))


def to_elementary(c: Circuit) -> Circuit:
    """Expand every controlled gate so only ``Rx, Ry, Rz, ZZ`` remain."""
    out = Circuit(c.num_qubits, (), c.global_phase)
    for g in c.gates:
        if isinstance(g, CPauliExp):
            out = out.then(expand_controlled(g))
        elif isinstance(g, PhaseOnControl):
            out = out.then(expand_phase(g, c.num_qubits))
        else:
            out = out.then(Circuit(c.num_qubits, (g,)))
    return out


def controlled_circuit(c: Circuit, control: int, control_value: int = 1) -> Circuit:
    """Wrap ``c`` so it only acts on the ``|control_value>`` branch of ``control``.

    ``c`` must already live on a register containing ``control`` and must not
    touch it. The global phase of ``c`` becomes a relative phase on the branch.
    """
    flat = to_elementary(c)
    n = c.num_qubits
    gates: list[Gate] = []
    for g in flat.gates:
        if control in g.qubits():
            raise ValueError("controlled circuit acts on its own control qubit")
        if isinstance(g, (Rx, Ry, Rz)):
            s = PauliString.from_dict(n, {g.qubit: type(g).__name__[1].upper()})
            gates.append(CPauliExp(control, control_value, s, -g.angle / 2))
        else:
            s = PauliString.from_dict(n, {g.qubit_a: "Z", g.qubit_b: "Z"})
            gates.append(CPauliExp(control, control_value, s, g.angle))
    if flat.global_phase:
        gates.append(PhaseOnControl(control, control_value, flat.global_phase))
    return Circuit(n, tuple(gates))


def controlled_unitary_string(control: int, control_value: int, string: PauliString) -> Circuit:
    """Controlled application of a phased Pauli string ``e^{i phi} S``.

    Uses ``S = -i exp(i pi/2 S)`` so the result is exact, relative phase included.
    """
    n = string.num_qubits
    phase = complex(string.phase)
    if not np.isclose(abs(phase), 1.0, atol=1e-12):
        raise ValueError("controlled operator must have unit-modulus coefficient")
    rel = math.atan2(phase.imag, phase.real)
    s = string.canonical()
    if s.weight == 0:
        gates = (PhaseOnControl(control, control_value, rel),) if rel else ()
        return Circuit(n, gates)
    gates = [CPauliExp(control, control_value, s, math.pi / 2)]
    if rel - math.pi / 2:
        gates.append(PhaseOnControl(control, control_value, rel - math.pi / 2))
    return Circuit(n, tuple(gates))


# --- census and text form -----------------------------------------------------

FAMILIES = ("Rx", "Ry", "Rz", "ZZ", "CPauliExp", "PhaseOnControl")


def gate_census(c: Circuit) -> dict[str, int]:
    counts = Counter(type(g).__name__ for g in c.gates)
    out = {name: counts.get(name, 0) for name in FAMILIES}
    out["total"] = len(c.gates)
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def circuit_to_text(c: Circuit) -> str:
    lines = [f"QUBITS {c.num_qubits}"]
    if c.global_phase:
        lines.append(f"GPHASE {_fmt(c.global_phase)}")
    for g in c.gates:
        if isinstance(g, (Rx, Ry, Rz)):
            lines.append(f"{type(g).__name__.upper()} q{g.qubit} {_fmt(g.angle)}")
        elif isinstance(g, ZZ):
            lines.append(f"ZZ q{g.qubit_a} q{g.qubit_b} {_fmt(g.angle)}")
        elif isinstance(g, CPauliExp):
            lines.append(f"CPEXP c:q{g.control} v:{g.control_value} P:{g.string.label()} theta:{_fmt(g.angle)}")
        else:
            lines.append(f"CPHASE c:q{g.control} v:{g.control_value} phi:{_fmt(g.phase)}")
    return "\n".join(lines) + "\n"


class CircuitParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_Q = r"q(\d+)"
_NUM = r"([-+0-9.eEinfa]+)"
_PATTERNS = {
    "RX": re.compile(rf"^RX {_Q} {_NUM}$"),
    "RY": re.compile(rf"^RY {_Q} {_NUM}$"),
    "RZ": re.compile(rf"^RZ {_Q} {_NUM}$"),
    "ZZ": re.compile(rf"^ZZ {_Q} {_Q} {_NUM}$"),
    "CPEXP": re.compile(rf"^CPEXP c:{_Q} v:([01]) P:(\S+) theta:{_NUM}$"),
    "CPHASE": re.compile(rf"^CPHASE c:{_Q} v:([01]) phi:{_NUM}$"),
    "GPHASE": re.compile(rf"^GPHASE {_NUM}$"),
    "QUBITS": re.compile(r"^QUBITS (\d+)$"),
}


def circuit_from_text(text: str, num_qubits: int | None = None) -> Circuit:
    """Parse the one-gate-per-line format written by :func:`circuit_to_text`."""
    gates: list[Gate] = []
    phase = 0.0
    n = num_qubits
    parsed = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head = line.split()[0]
        pat = _PATTERNS.get(head)
        m = pat.match(line) if pat else None
        if m is None:
            raise CircuitParseError(f"cannot parse {line!r}", lineno, raw.find(line) + 1)
        parsed.append((lineno, head, m.groups()))
    for lineno, head, grp in parsed:
        if head == "QUBITS":
            n = int(grp[0])
    if n is None:
        qs = [int(x) for _, h, grp in parsed if h in ("RX", "RY", "RZ", "ZZ") for x in grp[:-1]]
        if qs:
            n = max(qs) + 1
        else:
            raise CircuitParseError("qubit count unknown; add a QUBITS line", 1)
    try:
        for lineno, head, grp in parsed:
            if head in ("RX", "RY", "RZ"):
                gates.append(_ROT[head[1]](int(grp[0]), float(grp[1])))
            elif head == "ZZ":
                gates.append(ZZ(int(grp[0]), int(grp[1]), float(grp[2])))
            elif head == "CPEXP":
                s = PauliString.from_label(grp[2], n)
                gates.append(CPauliExp(int(grp[0]), int(grp[1]), s, float(grp[3])))
            elif head == "CPHASE":
                gates.append(PhaseOnControl(int(grp[0]), int(grp[1]), float(grp[2])))
            elif head == "GPHASE":
                phase += float(grp[0])
        return Circuit(n, tuple(gates), phase)
    except ValueError as exc:
        if isinstance(exc, CircuitParseError):
            raise
        raise CircuitParseError(str(exc), lineno) from exc


__all__ = [
    "CPauliExp", "Circuit", "Gate", "NonHermitianError", "PhaseOnControl", "Rx", "Ry", "Rz",
    "TrotterPlan", "ZZ", "canonical_term_order", "circuit_from_text", "circuit_to_text",
    "controlled_circuit", "controlled_unitary_string", "evolution_circuit", "expand_controlled",
    "gate_census", "synthesize_pauli_exponential", "to_elementary", "trotterize",
]
