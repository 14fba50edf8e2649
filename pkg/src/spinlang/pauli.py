"""Multi-qubit Pauli strings, their linear combinations and dense matrices.

Conventions used throughout the package:

* qubit 0 is the most significant tensor factor (and the highest bit of a
  basis-state index);
* ``|0> = |up>`` with ``Z|0> = +|0>``;
* raising/lowering operators are ``sigma_+ = (X + iY)/2`` and
  ``sigma_- = (X - iY)/2``, so ``sigma_+ |1> = |0>``.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

LETTERS = ("I", "X", "Y", "Z")

# (a, b) -> (phase, letter) with a*b = phase * letter
_PRODUCT = {}
for _p in LETTERS:
    _PRODUCT[("I", _p)] = (1, _p)
    _PRODUCT[(_p, "I")] = (1, _p)
    _PRODUCT[(_p, _p)] = (1, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _PRODUCT[(_a, _b)] = (1j, _c)
    _PRODUCT[(_b, _a)] = (-1j, _c)

SINGLE_QUBIT_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# coefficients whose real or imaginary part falls below this are snapped to 0
ATOL = 1e-14
DEFAULT_ORACLE_LIMIT = 14
ORACLE_LIMIT_ENV = "SPINLANG_ORACLE_LIMIT"

_LABEL_RE = re.compile(r"([IXYZ])(\d+)")


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class OracleLimitError(RuntimeError):
    """A dense representation was requested above the configured qubit limit."""


def oracle_limit(limit: int | None = None) -> int:
    if limit is not None:
        return int(limit)
    return int(os.environ.get(ORACLE_LIMIT_ENV, DEFAULT_ORACLE_LIMIT))


def _check_oracle(num_qubits: int, limit: int | None) -> None:
    lim = oracle_limit(limit)
    if num_qubits > lim:
        raise OracleLimitError(
            f"dense representation of {num_qubits} qubits refused "
            f"(oracle limit is {lim}; raise it with --oracle-limit or {ORACLE_LIMIT_ENV})"
        )


def _snap(z: complex) -> complex:
    z = complex(z)
    re_, im_ = z.real, z.imag
    if abs(re_) < ATOL:
        re_ = 0.0
    if abs(im_) < ATOL:
        im_ = 0.0
    return complex(re_, im_)


@dataclass(frozen=True)
class PauliString:
    """A phase times a tensor product of single-qubit Pauli letters."""

    ops: tuple[str, ...]
    phase: complex = 1.0

    def __post_init__(self):
        ops = tuple(self.ops)
        if any(o not in LETTERS for o in ops):
            raise ValueError(f"invalid Pauli letters {ops!r}")
        if not np.isclose(abs(self.phase), 1.0, atol=1e-12):
            raise ValueError(f"phase must have unit modulus, got {self.phase!r}")
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "phase", _snap(self.phase))

    @classmethod
    def identity(cls, num_qubits: int) -> PauliString:
        return cls(("I",) * num_qubits)

    @classmethod
    def from_dict(cls, num_qubits: int, letters: Mapping[int, str], phase: complex = 1.0) -> PauliString:
        ops = ["I"] * num_qubits
        for q, letter in letters.items():
            if not 0 <= q < num_qubits:
                raise ValueError(f"qubit index {q} out of range for {num_qubits} qubits")
            ops[q] = letter
        return cls(tuple(ops), phase)

    @classmethod
    def from_label(cls, label: str, num_qubits: int, phase: complex = 1.0) -> PauliString:
        """Parse ``"X0 Z1 X2"`` (or ``"X0Z1X2"``); absent qubits are identity."""
        label = label.strip()
        letters = {}
        if label not in ("", "I"):
            pos = 0
            for m in _LABEL_RE.finditer(label):
                if label[pos:m.start()].strip():
                    raise ValueError(f"cannot parse Pauli label {label!r}")
                q = int(m.group(2))
                if q in letters:
                    raise ValueError(f"qubit {q} repeated in {label!r}")
                letters[q] = m.group(1)
                pos = m.end()
            if label[pos:].strip() or not letters:
                raise ValueError(f"cannot parse Pauli label {label!r}")
        return cls.from_dict(num_qubits, letters, phase)

    @property
    def num_qubits(self) -> int:
        return len(self.ops)

    @property
    def letters(self) -> dict[int, str]:
        return {q: o for q, o in enumerate(self.ops) if o != "I"}

    def support(self) -> tuple[int, ...]:
        return tuple(q for q, o in enumerate(self.ops) if o != "I")

    @property
    def weight(self) -> int:
        return len(self.support())

    def canonical(self) -> PauliString:
        return PauliString(self.ops)

    def with_phase(self, phase: complex) -> PauliString:
        return PauliString(self.ops, phase)

    def label(self) -> str:
        """Compact letter+index label without phase, e.g. ``X0Z1``; ``I`` for identity."""
        return "".join(f"{o}{q}" for q, o in self.letters.items()) or "I"

    def __mul__(self, other):
        if isinstance(other, PauliString):
            return multiply(self, other)
        return NotImplemented

    def __str__(self):
        body = " ".join(f"{o}{q}" for q, o in self.letters.items()) or "I"
        return f"{_format_coeff(self.phase)} {body}"

    def to_matrix(self, limit: int | None = None) -> np.ndarray:
        return PauliSum.from_string(self).to_matrix(limit)


def _format_coeff(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return f"{c.real:+}"
    if c.real == 0:
        return f"{c.imag:+}j"
    return f"({c.real}{c.imag:+}j)"


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Product ``a @ b`` with accumulated phase."""
    if a.num_qubits != b.num_qubits:
        raise DimensionError(f"cannot multiply strings on {a.num_qubits} and {b.num_qubits} qubits")
    phase = a.phase * b.phase
    ops = []
    for x, y in zip(a.ops, b.ops):
        p, z = _PRODUCT[(x, y)]
        phase *= p
        ops.append(z)
    return PauliString(tuple(ops), phase)


def commutes(a: PauliString, b: PauliString) -> bool:
    if a.num_qubits != b.num_qubits:
        raise DimensionError(f"cannot compare strings on {a.num_qubits} and {b.num_qubits} qubits")
    clashes = sum(1 for x, y in zip(a.ops, b.ops) if x != "I" and y != "I" and x != y)
    return clashes % 2 == 0


def _masks(ops: tuple[str, ...]) -> tuple[int, int, int]:
    n = len(ops)
    xmask = zmask = 0
    ny = 0
    for q, o in enumerate(ops):
        bit = 1 << (n - 1 - q)
        if o in ("X", "Y"):
            xmask |= bit
        if o in ("Z", "Y"):
            zmask |= bit
        if o == "Y":
            ny += 1
    return xmask, zmask, ny


def _parity(values: np.ndarray) -> np.ndarray:
    """Bit parity of each nonnegative integer in ``values``."""
    v = values.copy()
    out = np.zeros_like(v)
    while np.any(v):
        out ^= v & 1
        v >>= 1
    return out


def string_action(ops: tuple[str, ...], num_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(perm, factor)`` with ``(P v)[perm[b]] = factor[b] * v[b]`` for the phase-free string."""
    xmask, zmask, ny = _masks(ops)
    b = np.arange(1 << num_qubits, dtype=np.int64)
    sign = 1 - 2 * _parity(b & zmask)
    factor = (1j ** ny) * sign.astype(complex)
    return b ^ xmask, factor


def apply_string(s: PauliString, vec: np.ndarray) -> np.ndarray:
    """Apply ``s`` to a state (or a stack of states along axis 0)."""
    perm, factor = string_action(s.ops, s.num_qubits)
    out = np.empty_like(vec, dtype=complex)
    if vec.ndim == 1:
        out[perm] = factor * vec
    else:
        out[perm] = factor[:, None] * vec
    return s.phase * out


class PauliSum:
    """Complex-weighted sum of phase-free Pauli strings.

    Terms are kept in a dict keyed by the letter tuple; phases of input strings
    are folded into the coefficients and near-zero coefficients are dropped.
    """

    __slots__ = ("num_qubits", "_terms")

    def __init__(self, num_qubits: int, terms: Mapping[tuple[str, ...], complex] | Iterable = ()):
        self.num_qubits = int(num_qubits)
        acc: dict[tuple[str, ...], complex] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for key, coeff in items:
            if isinstance(key, PauliString):
                coeff = coeff * key.phase
                key = key.ops
            key = tuple(key)
            if len(key) != self.num_qubits:
                raise DimensionError(f"term {key!r} does not act on {self.num_qubits} qubits")
            acc[key] = acc.get(key, 0) + complex(coeff)
        cleaned = {}
        for key, coeff in acc.items():
            c = _snap(coeff)
            if c != 0:
                cleaned[key] = c
        self._terms = dict(sorted(cleaned.items(), key=lambda kv: _sort_key(kv[0])))

    @classmethod
    def zero(cls, num_qubits: int) -> PauliSum:
        return cls(num_qubits)

    @classmethod
    def identity(cls, num_qubits: int, coeff: complex = 1.0) -> PauliSum:
        return cls(num_qubits, {("I",) * num_qubits: coeff})

    @classmethod
    def from_string(cls, s: PauliString, coeff: complex = 1.0) -> PauliSum:
        return cls(s.num_qubits, [(s, coeff)])

    @classmethod
    def from_labels(cls, num_qubits: int, pairs: Iterable[tuple[complex, str]]) -> PauliSum:
        return cls(num_qubits, [(PauliString.from_label(lbl, num_qubits), c) for c, lbl in pairs])

    @property
    def terms(self) -> dict[tuple[str, ...], complex]:
        return dict(self._terms)

    def items(self):
        """Iterate ``(PauliString, coefficient)`` in canonical order."""
        for key, c in self._terms.items():
            yield PauliString(key), c

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return self.items()

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.num_qubits == other.num_qubits and self._terms == other._terms

    def __hash__(self):
        return hash((self.num_qubits, tuple(self._terms.items())))

    def _coerce(self, other) -> PauliSum:
        if isinstance(other, PauliSum):
            if other.num_qubits != self.num_qubits:
                raise DimensionError(f"{self.num_qubits} vs {other.num_qubits} qubits")
            return other
        if isinstance(other, PauliString):
            if other.num_qubits != self.num_qubits:
                raise DimensionError(f"{self.num_qubits} vs {other.num_qubits} qubits")
            return PauliSum.from_string(other)
        if np.isscalar(other):
            return PauliSum.identity(self.num_qubits, other)
        raise TypeError(f"cannot combine PauliSum with {type(other).__name__}")

    def __add__(self, other):
        other = self._coerce(other)
        return PauliSum(self.num_qubits, list(self._terms.items()) + list(other._terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if np.isscalar(other):
            return PauliSum(self.num_qubits, {k: v * other for k, v in self._terms.items()})
        other = self._coerce(other)
        out = []
        for ka, ca in self._terms.items():
            pa = PauliString(ka)
            for kb, cb in other._terms.items():
                p = multiply(pa, PauliString(kb))
                out.append((p.ops, ca * cb * p.phase))
        return PauliSum(self.num_qubits, out)

    def __rmul__(self, other):
        if np.isscalar(other):
            return self * other
        return self._coerce(other) * self

    def __matmul__(self, other):
        return self * other

    def adjoint(self) -> PauliSum:
        return PauliSum(self.num_qubits, {k: np.conj(v) for k, v in self._terms.items()})

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return hermitian_check(self, tol)

    def is_zero(self) -> bool:
        return not self._terms

    def one_norm(self) -> float:
        """Sum of absolute coefficients, an upper bound on the operator norm."""
        return float(sum(abs(c) for c in self._terms.values()))

    def identity_coefficient(self) -> complex:
        return self._terms.get(("I",) * self.num_qubits, 0j)

    def embed(self, num_qubits: int, offset: int = 0) -> PauliSum:
        """The same operator on a larger register, its qubit 0 placed at ``offset``."""
        if offset < 0 or offset + self.num_qubits > num_qubits:
            raise DimensionError("embedding does not fit")
        pad_l = ("I",) * offset
        pad_r = ("I",) * (num_qubits - offset - self.num_qubits)
        return PauliSum(num_qubits, {pad_l + k + pad_r: v for k, v in self._terms.items()})

    def to_matrix(self, limit: int | None = None) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix, qubit 0 most significant."""
        n = self.num_qubits
        _check_oracle(n, limit)
        dim = 1 << n
        mat = np.zeros((dim, dim), dtype=complex)
        cols = np.arange(dim)
        for key, coeff in self._terms.items():
            perm, factor = string_action(key, n)
            mat[perm, cols] += coeff * factor
        return mat

    def __repr__(self):
        return f"PauliSum({self.num_qubits}, {len(self)} terms)"

    def __str__(self):
        if not self._terms:
            return "0"
        lines = []
        for s, c in self.items():
            body = " ".join(f"{o}{q}" for q, o in s.letters.items()) or "I"
            lines.append(f"{_format_coeff(c)} {body}")
        return "\n".join(lines)


def _sort_key(ops: tuple[str, ...]):
    support = tuple(q for q, o in enumerate(ops) if o != "I")
    return (len(support), support, "".join(ops))


def to_matrix(s: PauliSum | PauliString, limit: int | None = None) -> np.ndarray:
    if isinstance(s, PauliString):
        s = PauliSum.from_string(s)
    return s.to_matrix(limit)


def hermitian_check(s: PauliSum, tol: float = 1e-12) -> bool:
    return all(abs(c.imag) <= tol for c in s.terms.values())


def sigma_plus(num_qubits: int, q: int) -> PauliSum:
    """``(X_q + i Y_q)/2``, i.e. ``|0><1|`` on qubit ``q``."""
    return PauliSum(num_qubits, [
        (PauliString.from_dict(num_qubits, {q: "X"}), 0.5),
        (PauliString.from_dict(num_qubits, {q: "Y"}), 0.5j),
    ])


def sigma_minus(num_qubits: int, q: int) -> PauliSum:
    """``(X_q - i Y_q)/2``, i.e. ``|1><0|`` on qubit ``q``."""
    return PauliSum(num_qubits, [
        (PauliString.from_dict(num_qubits, {q: "X"}), 0.5),
        (PauliString.from_dict(num_qubits, {q: "Y"}), -0.5j),
    ])


def single(num_qubits: int, q: int, letter: str, coeff: complex = 1.0) -> PauliSum:
    return PauliSum(num_qubits, [(PauliString.from_dict(num_qubits, {q: letter}), coeff)])
