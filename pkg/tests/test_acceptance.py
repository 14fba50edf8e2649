"""End-to-end exit criteria.

Every test records one PASS/FAIL line through the ``verdict`` fixture; the
lines are printed as they happen and again in the terminal summary.
Reference values come from ``oracles`` (entry-by-entry Fock matrices and
scipy's expm) rather than from the package's own dense helpers.
"""
import itertools
import math
import time

import numpy as np
import pytest

from spinlang.mappings import (Anyon, Boson, BosonLayout, Fermion, LadderFactor,
                               SecondQuantizedOperator, anyon_map, boson_map, hopping,
                               jordan_wigner, number, quadratic_form, validate_anyon_algebra,
                               validate_anyon_limits, validate_fermion_algebra,
                               validate_modified_commutators)
from spinlang.measurement import (CorrelationSpec, SpectrumSpec, correlation_at,
                                  direct_correlation, measure_spectrum)
from spinlang.pauli import PauliString, PauliSum, commutes, sigma_minus, sigma_plus, single
from spinlang.simulator import StateVector, circuit_unitary, expectation, run
from spinlang.stateprep import (BosonProductSpec, LinearCombinationSpec, SlaterSpec, ThoulessSpec,
                                prepare_boson_product, prepare_linear_combination, prepare_slater,
                                run_linear_combination, thouless_generator, thouless_rotate)
from spinlang.synthesis import (Circuit, Rx, Ry, TrotterPlan, gate_census,
                                synthesize_pauli_exponential, trotterize)

from oracles import (anyon_create, dense_exp, fermion_create, one_hot_indices, pauli_matrix,
                     phase_aligned_distance, site_operator, slater_vector, truncated_boson_create)

pytestmark = pytest.mark.acceptance

F = Fermion()
UP = Circuit(1, (Rx(0, math.pi),), math.pi / 2)
PLUS = Circuit(1, (Ry(0, -math.pi / 2),))


def sq(stats, n, *terms):
    return SecondQuantizedOperator.from_terms(stats, n, terms)


def prepared(circ):
    return run(circ, StateVector.all_down(circ.num_qubits)).amplitudes


def hop_total(h):
    return gate_census(trotterize(TrotterPlan(h, 1.0, 1)))["total"]


def test_criterion_01_three_qubit_gate_list(verdict):
    start = time.perf_counter()
    checks = {}
    worst = 0.0
    for angle in (0.3, 1.0, math.pi / 2):
        c = synthesize_pauli_exponential(PauliString.from_label("X0 Z1 X2", 3), angle)
        census = gate_census(c)
        checks[f"7 gates at {angle:.4g}"] = len(c.gates) == 7
        checks[f"census at {angle:.4g}"] = (census["Ry"], census["Rx"], census["ZZ"], census["total"]) == (2, 2, 3, 7)
        d = phase_aligned_distance(circuit_unitary(c), dense_exp(pauli_matrix("X0 Z1 X2", 3), angle))
        worst = max(worst, d)
    checks["distance <= 1e-10"] = worst <= 1e-10
    elapsed = time.perf_counter() - start
    checks["runtime < 1 s"] = elapsed < 1
    verdict(1, "three-qubit exponential: 7 gates, census, unitary", checks,
            f"max distance {worst:.1e}, {elapsed:.2f} s")


def test_criterion_02_four_qubit_network_and_boson_hopping(verdict):
    start = time.perf_counter()
    checks = {}
    c = synthesize_pauli_exponential(PauliString.from_label("X0 Y1 Y2 X3", 4), 1 / 8)
    d4 = phase_aligned_distance(circuit_unitary(c), dense_exp(pauli_matrix("X0 Y1 Y2 X3", 4), 1 / 8))
    checks["X0Y1Y2X3 distance <= 1e-10"] = d4 <= 1e-10

    t = 1.0
    layout = BosonLayout(2, 1)
    h = boson_map(hopping(Boson(1), 2, 0, 1), layout)
    strings = [s for s, _ in h.items()]
    checks["8 factors on 4 qubits"] = len(strings) == 8 and layout.num_qubits == 4
    pairs = list(itertools.combinations(strings, 2))
    checks["28 pairs commute"] = len(pairs) == 28 and all(commutes(a, b) for a, b in pairs)

    bd = truncated_boson_create(1)
    dense_h = site_operator(bd, 0, 2) @ site_operator(bd.conj().T, 1, 2)
    dense_h = dense_h + dense_h.conj().T
    u = circuit_unitary(trotterize(TrotterPlan(h, t, 1)))
    idx = one_hot_indices(2, 1)
    block = u[np.ix_(idx, idx)]
    d_boson = float(np.max(np.abs(block - dense_exp(dense_h, t))))
    checks["one-hot block within 1e-8"] = d_boson <= 1e-8
    elapsed = time.perf_counter() - start
    checks["runtime < 5 s"] = elapsed < 5
    verdict(2, "four-qubit network and commuting boson hopping factors", checks,
            f"distances {d4:.1e} / {d_boson:.1e}, {elapsed:.2f} s")


def _err(m):
    return float(np.max(np.abs(m)))


def test_criterion_03_algebra_suites(verdict):
    start = time.perf_counter()
    checks = {}

    # fermions, N = 5: images agree with the Fock oracle and anticommute canonically
    n = 5
    cd = [jordan_wigner(sq(F, n, (1.0, (LadderFactor(j, "create"),)))).to_matrix() for j in range(n)]
    c = [m.conj().T for m in cd]
    eye = np.eye(1 << n)
    e_f = max(_err(cd[j] - fermion_create(n, j)) for j in range(n))
    for i in range(n):
        for j in range(n):
            e_f = max(e_f, _err(c[i] @ c[j] + c[j] @ c[i]), _err(cd[i] @ cd[j] + cd[j] @ cd[i]),
                      _err(c[i] @ cd[j] + cd[j] @ c[i] - (i == j) * eye))
    checks["fermion N=5"] = e_f <= 1e-12 and validate_fermion_algebra(5).passed

    # anyons, N = 4, i <= j
    n = 4
    eye = np.eye(1 << n)
    e_a = 0.0
    for theta in (0.0, math.pi / 3, math.pi / 2, math.pi, 3 * math.pi / 2):
        stats = Anyon(theta)
        ad = [anyon_map(sq(stats, n, (1.0, (LadderFactor(j, "create"),)))).to_matrix() for j in range(n)]
        a = [m.conj().T for m in ad]
        num = [anyon_map(sq(stats, n, (1.0, (number(j),)))).to_matrix() for j in range(n)]
        u = np.exp(1j * theta)
        e_a = max(e_a, max(_err(ad[j] - anyon_create(n, j, theta)) for j in range(n)))
        for i in range(n):
            for j in range(i, n):
                e_a = max(e_a,
                          _err(a[i] @ a[j] - u * a[j] @ a[i]),
                          _err(ad[i] @ ad[j] - u * ad[j] @ ad[i]),
                          _err(a[i] @ ad[j] - np.conj(u) * ad[j] @ a[i]
                               - (i == j) * (eye - (np.conj(u) + 1) * num[j])),
                          _err(num[i] @ ad[j] - ad[j] @ num[i] - (i == j) * ad[j]))
        checks[f"anyon validator theta={theta:.3g}"] = validate_anyon_algebra(theta, n).passed
    checks["anyon N=4 relations"] = e_a <= 1e-12

    # truncated bosons, two sites, on the one-hot subspace
    e_b = 0.0
    for n_max in (1, 2, 3):
        idx = one_hot_indices(2, n_max)
        bd = [boson_map(sq(Boson(n_max), 2, (1.0, (LadderFactor(s, "create"),)))).to_matrix()[np.ix_(idx, idx)]
              for s in range(2)]
        b = [m.conj().T for m in bd]
        ref = truncated_boson_create(n_max)
        e_b = max(e_b, max(_err(bd[s] - site_operator(ref, s, 2)) for s in range(2)))
        eye = np.eye(len(idx))
        pref = (n_max + 1) / math.factorial(n_max)
        for i in range(2):
            e_b = max(e_b, _err(np.linalg.matrix_power(bd[i], n_max + 1)))
            for j in range(2):
                rhs = (i == j) * (eye - pref * np.linalg.matrix_power(bd[i], n_max)
                                  @ np.linalg.matrix_power(b[i], n_max))
                e_b = max(e_b, _err(b[i] @ b[j] - b[j] @ b[i]), _err(b[i] @ bd[j] - bd[j] @ b[i] - rhs))
        checks[f"boson validator n_max={n_max}"] = validate_modified_commutators(n_max).passed
    checks["boson relations and nilpotency"] = e_b <= 1e-12

    elapsed = time.perf_counter() - start
    checks["runtime < 30 s"] = elapsed < 30
    verdict(3, "fermion, anyon and truncated boson algebras", checks,
            f"max errors {e_f:.1e} / {e_a:.1e} / {e_b:.1e}, {elapsed:.2f} s")


def test_criterion_04_anyon_limits(verdict):
    n = 4
    checks = {"validator": validate_anyon_limits(n).passed}
    pi_ok = zero_ok = True
    for j in range(n):
        for kind in ("create", "annihilate", "number"):
            f = LadderFactor(j, kind)
            pi_ok &= anyon_map(sq(Anyon(math.pi), n, (1.0, (f,)))) == jordan_wigner(sq(F, n, (1.0, (f,))))
            bare = {"create": sigma_plus(n, j), "annihilate": sigma_minus(n, j),
                    "number": 0.5 * (PauliSum.identity(n) + single(n, j, "Z"))}[kind]
            zero_ok &= anyon_map(sq(Anyon(0.0), n, (1.0, (f,)))) == bare
    for i, j in ((0, 1), (0, 3), (1, 3)):
        pi_ok &= anyon_map(hopping(Anyon(math.pi), n, i, j)) == jordan_wigner(hopping(F, n, i, j))
    checks["theta=pi equals Jordan-Wigner"] = pi_ok
    checks["theta=0 is the bare ladder"] = zero_ok
    verdict(4, "anyon limits are exact", checks)


def four_mode_hamiltonian():
    n = [number(j) for j in range(4)]
    op = hopping(F, 4, 0, 1) + hopping(F, 4, 1, 2) + hopping(F, 4, 2, 3) + sq(
        F, 4, (2.0, (n[0], n[1])), (2.0, (n[1], n[2])), (2.0, (n[2], n[3])), (0.5, (n[0],)), (-0.3, (n[3],)))
    return jordan_wigner(op)


def test_criterion_05_trotter_convergence(verdict):
    start = time.perf_counter()
    h = four_mode_hamiltonian()
    t = 1.0
    exact = dense_exp(h.to_matrix(), t)
    errors = [float(np.linalg.norm(circuit_unitary(trotterize(TrotterPlan(h, t, steps))) - exact, 2))
              for steps in (8, 16, 32, 64)]
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    checks = {f"ratio {k}": 1.6 <= r <= 2.4 for k, r in enumerate(ratios)}
    elapsed = time.perf_counter() - start
    checks["runtime < 60 s"] = elapsed < 60
    verdict(5, "first-order Trotter error on a 4-mode hopping + interaction model", checks,
            "ratios " + ", ".join(f"{r:.3f}" for r in ratios) + f", {elapsed:.2f} s")


def test_criterion_06_slater_and_thouless(verdict):
    checks = {}
    worst = 1.0
    for n in range(1, 6):
        for k in range(n + 1):
            for occ in itertools.permutations(range(n), k):
                fid = abs(np.vdot(slater_vector(n, occ), prepared(prepare_slater(SlaterSpec(n, occ))))) ** 2
                worst = min(worst, fid)
    checks["fidelity >= 1-1e-10"] = worst >= 1 - 1e-10

    sign_ok = True
    for n in range(2, 6):
        for a, b in itertools.combinations(range(n), 2):
            x = prepared(prepare_slater(SlaterSpec(n, (a, b))))
            y = prepared(prepare_slater(SlaterSpec(n, (b, a))))
            sign_ok &= abs(np.vdot(x, y) + 1) < 1e-10
    checks["transposition flips sign"] = sign_ok

    phi = 0.6
    spec = ThoulessSpec(SlaterSpec(2, (0,)), phi * np.array([[0.0, 1.0], [1.0, 0.0]]))
    cd = [fermion_create(2, j) for j in range(2)]
    k = sum(spec.M[i, j] * cd[i] @ cd[j].conj().T for i in range(2) for j in range(2))
    want = dense_exp(-k, 1.0) @ slater_vector(2, (0,))
    fid_t = abs(np.vdot(want, prepared(thouless_rotate(spec, 64)))) ** 2
    checks["Thouless fidelity >= 1-1e-6"] = fid_t >= 1 - 1e-6
    verdict(6, "Slater determinants and Thouless rotation", checks,
            f"worst Slater infidelity {1 - worst:.1e}, Thouless infidelity {1 - fid_t:.1e}")


def test_criterion_07_linear_combination_success(verdict):
    cases = {1: (3, [(0, 2)]), 2: (2, [(0,), (1,)]), 4: (4, [(0, 1), (2, 3), (0, 3), (1, 2)])}
    checks = {}
    detail = []
    for L, (n, occs) in cases.items():
        branches = tuple(prepare_slater(SlaterSpec(n, o)) for o in occs)
        p, state = run_linear_combination(prepare_linear_combination(LinearCombinationSpec((1.0,) * L, branches)))
        want = sum(slater_vector(n, o) for o in occs)
        want = want / np.linalg.norm(want)
        fid = abs(np.vdot(want, state.amplitudes)) ** 2
        checks[f"L={L} probability 1/L"] = abs(p - 1 / L) <= 1e-10
        checks[f"L={L} fidelity"] = fid >= 1 - 1e-10
        detail.append(f"L={L}: p={p:.12f}")
    verdict(7, "post-selected linear combinations succeed with probability 1/L", checks, "; ".join(detail))


def test_criterion_08_correlation_network(verdict):
    checks = {}
    x = PauliString.from_label("X0", 1)
    worked = CorrelationSpec(x, x, PauliSum.from_labels(1, [(1.0, "Z0")]), UP, (0.0, 0.25, 0.5, 0.75, 1.0))
    e1 = max(abs(correlation_at(worked, t) - np.exp(2j * t)) for t in worked.times)
    checks["single qubit e^{2it}"] = e1 <= 1e-10

    # two-mode hopping, one particle in mode 0; A and B are Majorana images
    h = jordan_wigner(hopping(F, 2, 0, 1))
    a = PauliString.from_label("Z0 X1", 2, -1)
    b = PauliString.from_label("X0", 2)
    times = tuple(np.linspace(0.0, 1.0, 5))
    spec = CorrelationSpec(a, b, h, prepare_slater(SlaterSpec(2, (0,))), times, 256)
    psi = slater_vector(2, (0,))
    am, bm = -pauli_matrix("Z0 X1", 2), pauli_matrix("X0", 2)
    e_exact = e_trot = e_direct = 0.0
    mod = abs(correlation_at(worked, 0.3))
    for t in times:
        u = dense_exp(h.to_matrix(), -t)
        ref = np.vdot(psi, u.conj().T @ am.conj().T @ u @ bm @ psi)
        g = correlation_at(spec, t)
        e_exact = max(e_exact, abs(g - ref))
        e_direct = max(e_direct, abs(direct_correlation(spec, t) - ref))
        e_trot = max(e_trot, abs(correlation_at(spec, t, "trotter") - ref))
        mod = max(mod, abs(g))
    checks["two-mode exact backend 1e-10"] = e_exact <= 1e-10 and e_direct <= 1e-10
    checks["two-mode Trotter at 256 steps 1e-4"] = e_trot <= 1e-4
    checks["|G| <= 1"] = mod <= 1 + 1e-12
    verdict(8, "correlation network", checks,
            f"errors {e1:.1e} / {e_exact:.1e} / {e_trot:.1e}, max |G| {mod:.6f}")


def _spectrum_errors(q, prep, dense_h, phi, dt, M):
    w, v = np.linalg.eigh(dense_h)
    gam = np.abs(v.conj().T @ phi) ** 2
    lam = {}
    for wi, gi in zip(w, gam):
        key = round(float(wi), 9)
        lam[key] = lam.get(key, 0.0) + gi
    exact = sorted((k, g) for k, g in lam.items() if g > 1e-6)
    peaks = measure_spectrum(SpectrumSpec(q, prep, dt, M))
    if len(peaks) != len(exact):
        return math.inf, math.inf
    pos = max(abs(p.lam - e) for p, (e, _) in zip(peaks, exact))
    weight = max(abs(p.weight - g) / g for p, (_, g) in zip(peaks, exact))
    return pos, weight


def test_criterion_09_spectrum(verdict):
    start = time.perf_counter()
    dt = 0.1
    checks = {}
    detail = []
    layout = BosonLayout(2, 1)
    bd = truncated_boson_create(1)
    dense_b = site_operator(bd, 0, 2) @ site_operator(bd.conj().T, 1, 2)
    dense_b = dense_b + dense_b.conj().T
    phi_b = np.zeros(4, dtype=complex)
    phi_b[2] = 1.0  # occupations (1, 0) in the truncated product basis
    cases = {
        "a": (PauliSum.from_labels(1, [(1.0, "Z0")]), PLUS, np.diag([1.0, -1.0]), np.array([1, 1]) / math.sqrt(2)),
        "b": (boson_map(hopping(Boson(1), 2, 0, 1), layout),
              prepare_boson_product(BosonProductSpec(layout, (1, 0))), dense_b, phi_b),
    }
    for name, (q, prep, dense_h, phi) in cases.items():
        p512, w512 = _spectrum_errors(q, prep, dense_h, phi, dt, 512)
        p1024, _ = _spectrum_errors(q, prep, dense_h, phi, dt, 1024)
        checks[f"({name}) positions within grid"] = p512 <= 2 * math.pi / (512 * dt)
        checks[f"({name}) weights within 5%"] = w512 <= 0.05
        checks[f"({name}) doubling M halves error"] = p1024 <= 0.5 * p512
        detail.append(f"({name}) pos {p512:.1e} -> {p1024:.1e}, weight {w512:.1e}")
    elapsed = time.perf_counter() - start
    checks["runtime < 120 s"] = elapsed < 120
    verdict(9, "spectral peaks from the time series", checks, "; ".join(detail) + f", {elapsed:.2f} s")


def _step_boundary_drift(h, prep, steps, dt, observables):
    """Largest drift of each observable, checked after every full Trotter step."""
    step = trotterize(TrotterPlan(h, dt, 1))
    state = run(prep, StateVector.all_down(prep.num_qubits))
    start = [expectation(o, state) for o in observables]
    drift = 0.0
    for _ in range(steps):
        state = run(step, state)
        drift = max(drift, max(abs(expectation(o, state) - s0) for o, s0 in zip(observables, start)))
    return drift


def test_criterion_10_conservation(verdict):
    checks = {}
    n_total = lambda n: jordan_wigner(quadratic_form(F, np.eye(n)))  # noqa: E731

    four = _step_boundary_drift(four_mode_hamiltonian(), prepare_slater(SlaterSpec(4, (0, 2))), 64, 1 / 64,
                                [n_total(4)])
    two = _step_boundary_drift(jordan_wigner(hopping(F, 2, 0, 1)), prepare_slater(SlaterSpec(2, (0,))), 256,
                               1 / 256, [n_total(2)])
    rng = np.random.default_rng(3)
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    th = ThoulessSpec(SlaterSpec(3, (0, 2)), 0.4 * (m + m.conj().T))
    thouless = _step_boundary_drift(thouless_generator(th), prepare_slater(th.base), 64, 1 / 64, [n_total(3)])
    checks["fermion number"] = max(four, two, thouless) <= 1e-8

    boson_drift = 0.0
    for n_sites, n_max, occ in ((2, 1, (1, 0)), (3, 2, (2, 0, 1))):
        layout = BosonLayout(n_sites, n_max)
        stats = Boson(n_max)
        op = hopping(stats, n_sites, 0, 1)
        if n_sites == 3:
            op = op + hopping(stats, n_sites, 1, 2) + sq(stats, n_sites, (0.3, (number(0),)),
                                                          (0.7, (number(1), number(1))))
        h = boson_map(op, layout)
        obs = [layout.total_z(s) for s in range(n_sites)]
        obs.append(boson_map(sq(stats, n_sites, *[(1.0, (number(s),)) for s in range(n_sites)]), layout))
        prep = prepare_boson_product(BosonProductSpec(layout, occ))
        boson_drift = max(boson_drift, _step_boundary_drift(h, prep, 32, 1 / 32, obs))
        # the one-hot weight itself
        state = run(prep, StateVector.all_down(layout.num_qubits))
        step = trotterize(TrotterPlan(h, 1 / 32, 1))
        idx = one_hot_indices(n_sites, n_max)
        for _ in range(32):
            state = run(step, state)
            boson_drift = max(boson_drift, abs(np.sum(np.abs(state.amplitudes[idx]) ** 2) - 1))
    checks["boson per-site total Z and one-hot weight"] = boson_drift <= 1e-8
    verdict(10, "conservation at every Trotter step", checks,
            f"fermion drift {max(four, two, thouless):.1e}, boson drift {boson_drift:.1e}")


def test_criterion_11_gate_count_scaling(verdict):
    totals = [hop_total(jordan_wigner(hopping(F, 8, 0, d))) for d in range(1, 8)]
    diffs = np.diff(totals)
    checks = {"JW totals affine in distance": bool(np.all(diffs == diffs[0]) and diffs[0] > 0)}
    boson = {}
    for n_max in (1, 2):
        boson[n_max] = sorted({hop_total(boson_map(hopping(Boson(n_max), 5, 0, j))) for j in range(1, 5)})
        checks[f"boson n_max={n_max} independent of distance"] = len(boson[n_max]) == 1
    verdict(11, "gate-count scaling with hopping distance", checks,
            f"JW totals {totals}, boson totals {boson}")
