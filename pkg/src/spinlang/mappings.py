"""Second-quantized operators and their qubit images.

Three encodings are provided:

* :func:`jordan_wigner` for spinless fermions,
* :func:`anyon_map` for hard-core anyons with statistical angle ``theta``
  (``theta = pi`` reproduces the fermion image, ``theta = 0`` hard-core bosons),
* :func:`boson_map` for bosons capped at ``n_max`` per site, using the one-hot
  state map of ``n_max + 1`` qubits per site.

An occupied fermion/anyon mode is spin up (``|0>``), the vacuum is all spins
down, and the number operator maps to ``(1 + Z)/2``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .pauli import PauliString, PauliSum, sigma_minus, sigma_plus, single

KINDS = ("create", "annihilate", "number")
_DAGGER = {"create": "annihilate", "annihilate": "create", "number": "number"}


class StatisticsError(TypeError):
    """Operator statistics do not match the requested mapping."""


@dataclass(frozen=True)
class Fermion:
    name = "fermion"


@dataclass(frozen=True)
class Anyon:
    theta: float

    name = "anyon"

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))


@dataclass(frozen=True)
class Boson:
    n_max: int

    name = "boson"

    def __post_init__(self):
        if int(self.n_max) < 1:
            raise ValueError("n_max must be a positive count")
        object.__setattr__(self, "n_max", int(self.n_max))


Statistics = Union[Fermion, Anyon, Boson]


@dataclass(frozen=True)
class LadderFactor:
    mode: int
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ladder kind {self.kind!r}")
        if int(self.mode) < 0:
            raise ValueError("mode index must be nonnegative")

    def dagger(self) -> LadderFactor:
        return LadderFactor(self.mode, _DAGGER[self.kind])

    def __str__(self):
        sym = {"create": "a+", "annihilate": "a", "number": "n"}[self.kind]
        return f"{sym}{self.mode}"


def create(mode: int) -> LadderFactor:
    return LadderFactor(mode, "create")


def annihilate(mode: int) -> LadderFactor:
    return LadderFactor(mode, "annihilate")


def number(mode: int) -> LadderFactor:
    return LadderFactor(mode, "number")


Term = tuple[complex, tuple[LadderFactor, ...]]


@dataclass(frozen=True)
class SecondQuantizedOperator:
    """Sum of ordered ladder-operator monomials with complex coefficients."""

    statistics: Statistics
    num_modes: int
    terms: tuple[Term, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.num_modes < 1:
            raise ValueError("num_modes must be at least 1")
        terms = []
        for coeff, factors in self.terms:
            factors = tuple(factors)
            for f in factors:
                if f.mode >= self.num_modes:
                    raise ValueError(f"mode {f.mode} out of range for {self.num_modes} modes")
            terms.append((complex(coeff), factors))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def from_terms(cls, statistics: Statistics, num_modes: int,
                   terms: Iterable[tuple[complex, Sequence[LadderFactor]]]) -> SecondQuantizedOperator:
        return cls(statistics, num_modes, tuple((c, tuple(f)) for c, f in terms))

    def __add__(self, other: SecondQuantizedOperator) -> SecondQuantizedOperator:
        if other.statistics != self.statistics or other.num_modes != self.num_modes:
            raise StatisticsError("cannot add operators of different statistics or sizes")
        return SecondQuantizedOperator(self.statistics, self.num_modes, self.terms + other.terms)

    def adjoint(self) -> SecondQuantizedOperator:
        terms = tuple(
            (complex(np.conj(c)), tuple(f.dagger() for f in reversed(fs))) for c, fs in self.terms
        )
        return SecondQuantizedOperator(self.statistics, self.num_modes, terms)

    def is_formally_hermitian(self) -> bool:
        """True if the term multiset is closed under conjugate transpose."""
        def key(t):
            c, fs = t
            return (round(c.real, 12), round(c.imag, 12), tuple((f.mode, f.kind) for f in fs))
        return sorted(map(key, self.terms)) == sorted(map(key, self.adjoint().terms))


def hopping(statistics: Statistics, num_modes: int, i: int, j: int, amplitude: complex = 1.0) -> SecondQuantizedOperator:
    """``amplitude * a+_i a_j + conj(amplitude) * a+_j a_i``."""
    return SecondQuantizedOperator.from_terms(statistics, num_modes, [
        (amplitude, (create(i), annihilate(j))),
        (np.conj(amplitude), (create(j), annihilate(i))),
    ])


def quadratic_form(statistics: Statistics, matrix: np.ndarray) -> SecondQuantizedOperator:
    """``sum_ij M_ij a+_i a_j``."""
    matrix = np.asarray(matrix, dtype=complex)
    n = matrix.shape[0]
    terms = []
    for i in range(n):
        for j in range(n):
            if matrix[i, j] != 0:
                fs = (number(i),) if i == j else (create(i), annihilate(j))
                terms.append((matrix[i, j], fs))
    return SecondQuantizedOperator.from_terms(statistics, n, terms)


# --- factor images -----------------------------------------------------------

def _string_factor(num_qubits: int, mode: int, a: complex, b: complex) -> PauliSum:
    """``prod_{l < mode} (a + b Z_l)``, dropping zero branches as it goes."""
    out = PauliSum.identity(num_qubits)
    for l in range(mode):
        out = out * (PauliSum.identity(num_qubits, a) + single(num_qubits, l, "Z", b))
    return out


def _exact_unit(theta: float) -> complex:
    """``exp(i theta)`` with exact values at multiples of pi/2."""
    q = theta / (math.pi / 2)
    if abs(q - round(q)) < 1e-12:
        return (1, 1j, -1, -1j)[int(round(q)) % 4]
    return cmath.exp(1j * theta)


def _exclusion_factor(num_qubits: int, f: LadderFactor, theta: float) -> PauliSum:
    u = _exact_unit(theta)
    if f.kind == "number":
        return 0.5 * (PauliSum.identity(num_qubits) + single(num_qubits, f.mode, "Z"))
    if f.kind == "create":
        w = np.conj(u)
        ladder = sigma_plus(num_qubits, f.mode)
    else:
        w = u
        ladder = sigma_minus(num_qubits, f.mode)
    return _string_factor(num_qubits, f.mode, (w + 1) / 2, (w - 1) / 2) * ladder


def _map_terms(op: SecondQuantizedOperator, num_qubits: int, factor_image) -> PauliSum:
    total = PauliSum.zero(num_qubits)
    cache: dict[LadderFactor, PauliSum] = {}
    for coeff, factors in op.terms:
        prod = PauliSum.identity(num_qubits, coeff)
        for f in factors:
            if f not in cache:
                cache[f] = factor_image(f)
            prod = prod * cache[f]
        total = total + prod
    return total


def jordan_wigner(op: SecondQuantizedOperator) -> PauliSum:
    """Map a fermionic operator: ``c+_j -> prod_{l<j}(-Z_l) sigma_+^j``."""
    if not isinstance(op.statistics, Fermion):
        raise StatisticsError(f"jordan_wigner needs fermionic statistics, got {op.statistics!r}")
    n = op.num_modes
    return _map_terms(op, n, lambda f: _exclusion_factor(n, f, math.pi))


def anyon_map(op: SecondQuantizedOperator) -> PauliSum:
    """Map a hard-core anyon operator with statistical angle ``op.statistics.theta``.

    ``a+_j -> prod_{i<j}[(e^{-i theta}+1)/2 + (e^{-i theta}-1)/2 Z_i] sigma_+^j``
    and ``a_j`` with ``theta -> -theta`` and ``sigma_-``. The string factor is
    expanded explicitly, so the image of ``a+_j`` has up to ``2**(j+1)`` terms
    for generic angles.
    """
    if not isinstance(op.statistics, Anyon):
        raise StatisticsError(f"anyon_map needs anyonic statistics, got {op.statistics!r}")
    n = op.num_modes
    theta = op.statistics.theta
    return _map_terms(op, n, lambda f: _exclusion_factor(n, f, theta))


@dataclass(frozen=True)
class BosonLayout:
    """One-hot layout: site ``i`` owns qubits ``i*(n_max+1) ... i*(n_max+1)+n_max``."""

    num_sites: int
    n_max: int

    def __post_init__(self):
        if self.num_sites < 1 or self.n_max < 1:
            raise ValueError("num_sites and n_max must be positive")

    @property
    def block(self) -> int:
        return self.n_max + 1

    @property
    def num_qubits(self) -> int:
        return self.num_sites * self.block

    def qubit_index(self, site: int, level: int) -> int:
        if not 0 <= site < self.num_sites:
            raise ValueError(f"site {site} out of range")
        if not 0 <= level <= self.n_max:
            raise ValueError(f"level {level} outside 0..{self.n_max}")
        return site * self.block + level

    def site_qubits(self, site: int) -> range:
        return range(site * self.block, (site + 1) * self.block)

    def one_hot_index(self, occupations: Sequence[int]) -> int:
        """Basis index of the one-hot image of ``|n_0, n_1, ...>``."""
        if len(occupations) != self.num_sites:
            raise ValueError("one occupation per site expected")
        n = self.num_qubits
        idx = (1 << n) - 1  # all down
        for site, occ in enumerate(occupations):
            q = self.qubit_index(site, occ)
            idx &= ~(1 << (n - 1 - q))
        return idx

    def one_hot_basis(self) -> tuple[list[tuple[int, ...]], np.ndarray]:
        """All occupation tuples (site 0 slowest) and the matching qubit basis indices."""
        occs = list(np.ndindex(*([self.block] * self.num_sites)))
        idx = np.array([self.one_hot_index(o) for o in occs], dtype=np.int64)
        return [tuple(int(v) for v in o) for o in occs], idx

    def total_z(self, site: int) -> PauliSum:
        out = PauliSum.zero(self.num_qubits)
        for q in self.site_qubits(site):
            out = out + single(self.num_qubits, q, "Z")
        return out


def _boson_factor(layout: BosonLayout, f: LadderFactor) -> PauliSum:
    n = layout.num_qubits
    out = PauliSum.zero(n)
    if f.kind == "number":
        for level in range(1, layout.n_max + 1):
            q = layout.qubit_index(f.mode, level)
            out = out + (level / 2) * (PauliSum.identity(n) + single(n, q, "Z"))
        return out
    for level in range(layout.n_max):
        lo = layout.qubit_index(f.mode, level)
        hi = layout.qubit_index(f.mode, level + 1)
        amp = math.sqrt(level + 1)
        if f.kind == "create":
            out = out + amp * (sigma_minus(n, lo) * sigma_plus(n, hi))
        else:
            out = out + amp * (sigma_plus(n, lo) * sigma_minus(n, hi))
    return out


def boson_map(op: SecondQuantizedOperator, layout: BosonLayout | None = None) -> PauliSum:
    """Map a capped-boson operator onto ``num_sites * (n_max + 1)`` qubits.

    ``b+_i -> sum_{n<n_max} sqrt(n+1) sigma_-^{(n,i)} sigma_+^{(n+1,i)}`` and
    ``n_i -> sum_n n (Z^{(n,i)} + 1)/2``.
    """
    if not isinstance(op.statistics, Boson):
        raise StatisticsError(f"boson_map needs bosonic statistics, got {op.statistics!r}")
    if layout is None:
        layout = BosonLayout(op.num_modes, op.statistics.n_max)
    if layout.n_max != op.statistics.n_max:
        raise ValueError("layout n_max disagrees with operator statistics")
    if op.num_modes > layout.num_sites:
        raise ValueError(f"operator has {op.num_modes} modes but layout only {layout.num_sites} sites")
    return _map_terms(op, layout.num_qubits, lambda f: _boson_factor(layout, f))


def map_operator(op: SecondQuantizedOperator, layout: BosonLayout | None = None) -> PauliSum:
    """Dispatch on the operator statistics."""
    if isinstance(op.statistics, Fermion):
        return jordan_wigner(op)
    if isinstance(op.statistics, Anyon):
        return anyon_map(op)
    return boson_map(op, layout)


def num_qubits_for(statistics: Statistics, num_modes: int) -> int:
    if isinstance(statistics, Boson):
        return num_modes * (statistics.n_max + 1)
    return num_modes


# --- dense truncated-boson reference and algebra reports --------------------

def truncated_creation(n_max: int) -> np.ndarray:
    """``(n_max+1)``-dimensional creation matrix with subdiagonal ``1, sqrt2, ...``."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=-1).astype(complex)


@dataclass
class RelationCheck:
    relation: str
    max_error: float
    passed: bool


@dataclass
class ValidationReport:
    title: str
    checks: list[RelationCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, relation: str, error: float, tol: float) -> None:
        self.checks.append(RelationCheck(relation, float(error), bool(error <= tol)))

    def failures(self) -> list[RelationCheck]:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        out = [self.title]
        for c in self.checks:
            out.append(f"  {'PASS' if c.passed else 'FAIL'}  {c.relation}  (max error {c.max_error:.2e})")
        return out

    def __str__(self):
        return "\n".join(self.lines())


def _err(m: np.ndarray) -> float:
    return float(np.max(np.abs(m))) if m.size else 0.0


def _mode_matrices(statistics: Statistics, num_modes: int):
    def mat(kind, j):
        op = SecondQuantizedOperator.from_terms(statistics, num_modes, [(1.0, (LadderFactor(j, kind),))])
        return map_operator(op).to_matrix()
    return ([mat("create", j) for j in range(num_modes)],
            [mat("annihilate", j) for j in range(num_modes)],
            [mat("number", j) for j in range(num_modes)])


def validate_fermion_algebra(num_modes: int, tol: float = 1e-12) -> ValidationReport:
    """Canonical anticommutators of the Jordan-Wigner images on dense matrices."""
    cd, c, _ = _mode_matrices(Fermion(), num_modes)
    dim = cd[0].shape[0]
    eye = np.eye(dim)
    rep = ValidationReport(f"fermion algebra, {num_modes} modes")
    e1 = e2 = e3 = 0.0
    for i in range(num_modes):
        for j in range(num_modes):
            e1 = max(e1, _err(c[i] @ c[j] + c[j] @ c[i]))
            e2 = max(e2, _err(cd[i] @ cd[j] + cd[j] @ cd[i]))
            e3 = max(e3, _err(cd[i] @ c[j] + c[j] @ cd[i] - (i == j) * eye))
    rep.add("{c_i, c_j} = 0", e1, tol)
    rep.add("{c+_i, c+_j} = 0", e2, tol)
    rep.add("{c+_i, c_j} = delta_ij", e3, tol)
    return rep


def validate_anyon_algebra(theta: float, num_modes: int, tol: float = 1e-12) -> ValidationReport:
    """Theta-deformed relations for ``i <= j``; ``[A,B]_t = AB - e^{it} BA``."""
    ad, a, n = _mode_matrices(Anyon(theta), num_modes)
    dim = ad[0].shape[0]
    eye = np.eye(dim)
    u = _exact_unit(theta)
    uc = np.conj(u)
    rep = ValidationReport(f"anyon algebra, theta={theta:.6g}, {num_modes} modes (i <= j)")
    e = [0.0] * 4
    for i in range(num_modes):
        for j in range(i, num_modes):
            e[0] = max(e[0], _err(a[i] @ a[j] - u * a[j] @ a[i]))
            e[1] = max(e[1], _err(ad[i] @ ad[j] - u * ad[j] @ ad[i]))
            rhs = (i == j) * (eye - (uc + 1) * n[j])
            e[2] = max(e[2], _err(a[i] @ ad[j] - uc * ad[j] @ a[i] - rhs))
            e[3] = max(e[3], _err(n[i] @ ad[j] - ad[j] @ n[i] - (i == j) * ad[j]))
    rep.add("[a_i, a_j]_theta = 0", e[0], tol)
    rep.add("[a+_i, a+_j]_theta = 0", e[1], tol)
    rep.add("[a_i, a+_j]_-theta = delta_ij (1 - (e^-i theta + 1) n_j)", e[2], tol)
    rep.add("[n_i, a+_j] = delta_ij a+_j", e[3], tol)
    return rep


def validate_modified_commutators(n_max: int, num_sites: int = 2, tol: float = 1e-12) -> ValidationReport:
    """Truncated-boson commutators and nilpotency, for the matrices and their spin images.

    The spin images are compared on the one-hot subspace, where they must
    reproduce the truncated matrices exactly; the relations are then checked on
    both representations.
    """
    rep = ValidationReport(f"truncated boson algebra, n_max={n_max}, {num_sites} sites")
    d = n_max + 1
    bd1 = truncated_creation(n_max)
    eye1 = np.eye(d)

    def site_op(m, i):
        out = np.eye(1)
        for s in range(num_sites):
            out = np.kron(out, m if s == i else eye1)
        return out

    bd_trunc = [site_op(bd1, i) for i in range(num_sites)]

    layout = BosonLayout(num_sites, n_max)
    _, idx = layout.one_hot_basis()
    stats = Boson(n_max)
    bd_spin_full = []
    for i in range(num_sites):
        op = SecondQuantizedOperator.from_terms(stats, num_sites, [(1.0, (create(i),))])
        bd_spin_full.append(boson_map(op, layout).to_matrix())
    bd_spin = [m[np.ix_(idx, idx)] for m in bd_spin_full]

    rep.add("spin image of b+ on one-hot subspace = truncated matrix",
            max(_err(x - y) for x, y in zip(bd_spin, bd_trunc)), tol)

    zcons = 0.0
    for i in range(num_sites):
        sz = layout.total_z(i).to_matrix()
        zcons = max(zcons, _err(bd_spin_full[i] @ sz - sz @ bd_spin_full[i]))
    rep.add("[b+_i, sum_n Z^(n,i)] = 0", zcons, tol)

    pref = (n_max + 1) / math.factorial(n_max)
    for label, bds in (("truncated", bd_trunc), ("spin", bd_spin)):
        bs = [m.conj().T for m in bds]
        eye = np.eye(bds[0].shape[0])
        e_bb = e_bbd = e_nil = 0.0
        for i in range(num_sites):
            for j in range(num_sites):
                e_bb = max(e_bb, _err(bs[i] @ bs[j] - bs[j] @ bs[i]))
                lhs = bs[i] @ bds[j] - bds[j] @ bs[i]
                rhs = np.zeros_like(lhs)
                if i == j:
                    rhs = eye - pref * (np.linalg.matrix_power(bds[i], n_max)
                                        @ np.linalg.matrix_power(bs[i], n_max))
                e_bbd = max(e_bbd, _err(lhs - rhs))
            e_nil = max(e_nil, _err(np.linalg.matrix_power(bds[i], n_max + 1)))
        rep.add(f"[b_i, b_j] = 0 ({label})", e_bb, tol)
        rep.add(f"[b_i, b+_j] = delta_ij [1 - (N+1)/N! b+^N b^N] ({label})", e_bbd, tol)
        rep.add(f"(b+)^(N+1) = 0 ({label})", e_nil, tol)
    return rep


def validate_anyon_limits(num_modes: int) -> ValidationReport:
    """Fermion limit (theta = pi) and hard-core boson limit (theta = 0), term by term."""
    rep = ValidationReport(f"anyon limits, {num_modes} modes")
    mismatch_pi = 0
    mismatch_0 = 0
    n = num_modes
    for j in range(n):
        for kind in ("create", "annihilate", "number"):
            f = LadderFactor(j, kind)
            a_pi = anyon_map(SecondQuantizedOperator.from_terms(Anyon(math.pi), n, [(1.0, (f,))]))
            c = jordan_wigner(SecondQuantizedOperator.from_terms(Fermion(), n, [(1.0, (f,))]))
            mismatch_pi += a_pi != c
            a_0 = anyon_map(SecondQuantizedOperator.from_terms(Anyon(0.0), n, [(1.0, (f,))]))
            bare = {"create": sigma_plus(n, j), "annihilate": sigma_minus(n, j),
                    "number": 0.5 * (PauliSum.identity(n) + single(n, j, "Z"))}[kind]
            mismatch_0 += a_0 != bare
    rep.add("anyon(theta=pi) == jordan_wigner, term by term", mismatch_pi, 0)
    rep.add("anyon(theta=0) == bare sigma_+/sigma_- (no string)", mismatch_0, 0)
    return rep


__all__ = [
    "Anyon", "Boson", "BosonLayout", "Fermion", "LadderFactor", "PauliString",
    "SecondQuantizedOperator", "StatisticsError", "ValidationReport",
    "annihilate", "anyon_map", "boson_map", "create", "hopping", "jordan_wigner",
    "map_operator", "number", "quadratic_form", "truncated_creation",
    "validate_anyon_algebra", "validate_anyon_limits", "validate_fermion_algebra",
    "validate_modified_commutators",
]
