"""Ancilla-assisted measurement networks.

Correlation network (ancilla is the last qubit, index ``n``)::

    |+>_a |psi>  ->  C-B (on a=1)  ->  T = exp(-iHt)  ->  C-A (on a=0)

after which ``<X_a> + i<Y_a> = <psi| T^dag A^dag T B |psi>``. The operator
``A`` itself (not its adjoint) is applied on the ``|0>`` branch; the adjoint
appears because the ``|0>`` branch is the bra side of ``2 sigma_+ = 2|0><1|``.

Spectrum network: ``|+>_a |phi>`` evolved by ``exp(i Q Z_a t/2)`` gives
``<2 sigma_+^a> = <phi| exp(-iQt) |phi>``; a Fourier transform of that series
locates the eigenvalues of ``Q`` weighted by ``|<psi_n|phi>|^2``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.signal import get_window

from .pauli import PauliString, PauliSum
from .simulator import (StateVector, apply_circuit, exact_evolution, expectation, run,
                        sample)
from .synthesis import (Circuit, NonHermitianError, Ry, TrotterPlan, controlled_unitary_string,
                        trotterize)

BACKENDS = ("exact", "trotter")


class AliasingError(ValueError):
    """The time step is too coarse for the observable's spectral range."""


@dataclass
class CorrelationSpec:
    """Inputs for ``G(t) = <psi| T^dag A^dag T B |psi>``, ``T = exp(-iHt)``.

    ``A`` and ``B`` are Pauli strings on the system register whose (unit
    modulus) phase is part of the operator. ``prep`` maps the all-down system
    register to ``|psi>``. ``trotter_steps`` is the total step count used for
    each time point by the Trotter backend.
    """

    A: PauliString
    B: PauliString
    H: PauliSum
    prep: Circuit
    times: Sequence[float] = (0.0,)
    trotter_steps: int = 64

    def __post_init__(self):
        n = self.H.num_qubits
        for name, op in (("A", self.A), ("B", self.B)):
            if op.num_qubits != n:
                raise ValueError(f"{name} acts on {op.num_qubits} qubits, H on {n}")
            if not np.isclose(abs(op.phase), 1.0, atol=1e-12):
                raise ValueError(f"{name} must have a unit-modulus coefficient")
        if not self.H.is_hermitian():
            raise NonHermitianError("H must be Hermitian")
        if self.prep.num_qubits != n:
            raise ValueError("prep circuit size differs from H")

    @property
    def num_system_qubits(self) -> int:
        return self.H.num_qubits


def _plus_on(q: int, n: int) -> Circuit:
    """``|0> -> |+>`` on qubit ``q``: ``Ry(pi/2)``."""
    return Circuit(n, (Ry(q, math.pi / 2),))


def _initial(n_sys: int) -> StateVector:
    return StateVector.all_down(n_sys).tensor(StateVector.basis(1, 0))


def _ancilla_sigma_plus(n_total: int) -> PauliSum:
    a = n_total - 1
    return PauliSum.from_labels(n_total, [(1.0, f"X{a}"), (1j, f"Y{a}")])


def _correlation_stages(spec: CorrelationSpec) -> tuple[Circuit, Circuit]:
    n = spec.num_system_qubits
    total = n + 1
    anc = n
    head = (spec.prep.embed(total)
            .then(_plus_on(anc, total))
            .then(controlled_unitary_string(anc, 1, _embed_string(spec.B, total))))
    tail = controlled_unitary_string(anc, 0, _embed_string(spec.A, total))
    return head, tail


def _embed_string(s: PauliString, total: int) -> PauliString:
    return PauliString(s.ops + ("I",) * (total - s.num_qubits), s.phase)


def build_correlation_network(spec: CorrelationSpec, t: float, steps: int | None = None) -> Circuit:
    """Full network with the Trotterized ``exp(-iHt)``; acts on all-down system plus ancilla ``|0>``."""
    head, tail = _correlation_stages(spec)
    total = head.num_qubits
    steps = spec.trotter_steps if steps is None else steps
    h = (-spec.H).embed(total)
    evo = trotterize(TrotterPlan(h, t, steps)) if not h.is_zero() else Circuit(total)
    return head.then(evo).then(tail)


def _ancilla_readout(state: StateVector, shots: int | None, seed) -> complex:
    n = state.num_qubits
    if shots is None:
        return expectation(_ancilla_sigma_plus(n), state)
    rng = np.random.default_rng(seed)
    sx, sy = rng.integers(0, 2**63, size=2)
    x = sample(f"X{n - 1}", state, shots, seed=int(sx)).value.real
    y = sample(f"Y{n - 1}", state, shots, seed=int(sy)).value.real
    return complex(x, y)


def correlation_at(spec: CorrelationSpec, t: float, backend: str = "exact",
                   shots: int | None = None, seed=None, limit: int | None = None) -> complex:
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    n = spec.num_system_qubits
    if backend == "trotter":
        state = run(build_correlation_network(spec, t), _initial(n))
    else:
        head, tail = _correlation_stages(spec)
        state = run(head, _initial(n))
        state = exact_evolution((-spec.H).embed(n + 1), t, state, limit)
        state = run(tail, state)
    return _ancilla_readout(state, shots, seed)


def measure_correlation(spec: CorrelationSpec, backend: str = "exact", shots: int | None = None,
                        seed=None, limit: int | None = None) -> list[tuple[float, complex]]:
    """``[(t, G(t))]`` over ``spec.times``, sorted by ``t``."""
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63, size=len(spec.times))
    out = [(float(t), correlation_at(spec, t, backend, shots, int(s), limit))
           for t, s in zip(spec.times, seeds)]
    return sorted(out, key=lambda p: p[0])


def direct_correlation(spec: CorrelationSpec, t: float, limit: int | None = None) -> complex:
    """Dense evaluation of ``<psi| T^dag A^dag T B |psi>`` (reference value)."""
    from .simulator import evolution_operator

    n = spec.num_system_qubits
    psi = run(spec.prep, StateVector.all_down(n)).amplitudes
    T = evolution_operator(spec.H, -t, limit)
    A = spec.A.to_matrix(limit)
    B = spec.B.to_matrix(limit)
    return complex(np.vdot(psi, T.conj().T @ A.conj().T @ T @ B @ psi))


# --- spectrum -------------------------------------------------------------------

@dataclass
class SpectrumSpec:
    Q: PauliSum
    prep: Circuit
    dt: float
    num_samples: int = 512

    def __post_init__(self):
        if not self.Q.is_hermitian():
            raise NonHermitianError("Q must be Hermitian")
        if self.prep.num_qubits != self.Q.num_qubits:
            raise ValueError("prep circuit size differs from Q")
        if self.num_samples < 1 or self.dt <= 0:
            raise ValueError("dt must be positive and num_samples at least 1")

    def norm_bound(self) -> float:
        return self.Q.one_norm()

    def check_aliasing(self) -> None:
        bound = self.norm_bound()
        if self.dt * bound >= math.pi:
            raise AliasingError(
                f"dt * ||Q|| = {self.dt} * {bound:.6g} = {self.dt * bound:.6g} >= pi; "
                f"use dt < {math.pi / bound:.6g}"
            )


def spectrum_time_series(spec: SpectrumSpec, backend: str = "exact", steps_per_sample: int = 1,
                         limit: int | None = None) -> np.ndarray:
    """``s_k = <2 sigma_+^a (k dt)>`` for ``k = 0 .. M-1``.

    The exact backend applies ``exp(i Q Z_a dt/2)`` once per sample through the
    dense oracle; the Trotter backend repeats a compiled step circuit.
    """
    spec.check_aliasing()
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}")
    n = spec.Q.num_qubits
    total = n + 1
    gen = spec.Q.embed(total) * PauliSum.from_labels(total, [(0.5, f"Z{n}")])
    state = run(spec.prep.embed(total).then(_plus_on(n, total)), _initial(n))
    readout = _ancilla_sigma_plus(total)
    if backend == "exact":
        from .simulator import evolution_operator
        step_op = evolution_operator(gen, spec.dt, limit) if not gen.is_zero() else None
        advance = (lambda v: step_op @ v) if step_op is not None else (lambda v: v)
    else:
        step_circ = trotterize(TrotterPlan(gen, spec.dt, steps_per_sample)) if not gen.is_zero() else Circuit(total)
        advance = lambda v: apply_circuit(step_circ, v)
    amps = state.amplitudes
    out = np.empty(spec.num_samples, dtype=complex)
    for k in range(spec.num_samples):
        out[k] = expectation(readout, StateVector(total, amps))
        amps = advance(amps)
    return out


@dataclass
class SpectralPeak:
    lam: float
    weight: float


def _wrap(lam: np.ndarray, dt: float) -> np.ndarray:
    """Map into ``(-pi/dt, pi/dt]``."""
    period = 2 * math.pi / dt
    out = np.mod(lam + math.pi / dt, period) - math.pi / dt
    out = np.where(out <= -math.pi / dt, out + period, out)
    return out


def spectral_peaks(series: Sequence[complex], dt: float, floor: float = 1e-3,
                   window: str = "blackmanharris", refine: bool = True) -> list[SpectralPeak]:
    """Eigenvalue estimates and weights from ``s_k = sum_n w_n exp(-i lam_n k dt)``.

    The tapered series is transformed with an FFT; local maxima above
    ``floor * |s_0|`` are peaks. Each peak is located by parabolic
    interpolation of the log-magnitude and, with ``refine``, polished to the
    stationary point of the windowed transform. Weights come from a
    least-squares fit of the series to the located exponentials.
    """
    s = np.asarray(series, dtype=complex)
    M = s.size
    if M < 8:
        raise ValueError("at least 8 samples are needed")
    t = np.arange(M) * dt
    w = get_window(window, M, fftbins=False) if window else np.ones(M)
    ws = w * s
    spec = np.fft.ifft(ws) * (M / np.sum(w))
    mag = np.abs(spec)
    scale = abs(s[0]) if abs(s[0]) > 0 else float(np.max(mag))
    bin_width = 2 * math.pi / (M * dt)

    def slope(lam: float) -> float:
        e = np.exp(1j * lam * t)
        d0 = np.sum(ws * e)
        d1 = np.sum(ws * (1j * t) * e)
        return float((np.conj(d0) * d1).real)

    found = []
    for m in range(M):
        a, b, c = mag[(m - 1) % M], mag[m], mag[(m + 1) % M]
        if not (b >= a and b > c and b >= floor * scale):
            continue
        la, lb, lc = (math.log(max(x, 1e-300)) for x in (a, b, c))
        den = la - 2 * lb + lc
        delta = 0.5 * (la - lc) / den if den < 0 else 0.0
        lam = bin_width * (m + delta)
        if refine:
            lo, hi = bin_width * (m - 1), bin_width * (m + 1)
            f_lo, f_hi = slope(lo), slope(hi)
            if f_lo > 0 > f_hi:
                lam = brentq(slope, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
        found.append(lam)

    if not found:
        return [SpectralPeak(0.0, float(min(max(abs(s[0]), 0.0), 1.0)))]
    lams = np.asarray(found)
    basis = np.exp(-1j * np.outer(t, lams))
    coef, *_ = np.linalg.lstsq(basis, s, rcond=None)
    lams = _wrap(lams, dt)
    peaks = [SpectralPeak(float(l), float(min(abs(c), 1.0)))
             for l, c in zip(lams, coef) if abs(c) >= floor * scale]
    peaks.sort(key=lambda p: p.lam)
    return peaks


def measure_spectrum(spec: SpectrumSpec, backend: str = "exact", floor: float = 1e-3,
                     limit: int | None = None) -> list[SpectralPeak]:
    return spectral_peaks(spectrum_time_series(spec, backend, limit=limit), spec.dt, floor)


def exact_spectral_weights(Q: PauliSum, phi: StateVector, tol: float = 1e-9,
                           limit: int | None = None) -> list[SpectralPeak]:
    """Dense-diagonalization reference: distinct eigenvalues and ``|gamma_n|^2``."""
    evals, evecs = np.linalg.eigh(Q.to_matrix(limit))
    amps = np.abs(evecs.conj().T @ phi.amplitudes) ** 2
    peaks: list[SpectralPeak] = []
    for lam, wgt in zip(evals, amps):
        if peaks and abs(lam - peaks[-1].lam) < tol:
            peaks[-1].weight += float(wgt)
        else:
            peaks.append(SpectralPeak(float(lam), float(wgt)))
    return [p for p in peaks if p.weight > tol]


# --- CSV ------------------------------------------------------------------------

def _g(x: float) -> str:
    return f"{x:.17g}"


def correlation_csv(rows: Sequence[tuple[float, complex]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "re", "im"])
    for t, g in rows:
        w.writerow([_g(t), _g(g.real), _g(g.imag)])
    return buf.getvalue()


def spectrum_csv(peaks: Sequence[SpectralPeak]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "weight"])
    for p in peaks:
        w.writerow([_g(p.lam), _g(p.weight)])
    return buf.getvalue()


__all__ = [
    "AliasingError", "CorrelationSpec", "SpectralPeak", "SpectrumSpec", "build_correlation_network",
    "correlation_at", "correlation_csv", "direct_correlation", "exact_spectral_weights",
    "measure_correlation", "measure_spectrum", "spectral_peaks", "spectrum_csv",
    "spectrum_time_series",
]
