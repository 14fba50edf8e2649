"""Command-line driver.

Model files are JSON. A minimal fermion model::

    {
      "statistics": {"type": "fermion"},
      "num_modes": 2,
      "hamiltonian": [
        {"coefficient": 1.0, "factors": [{"kind": "create", "mode": 0}, {"kind": "annihilate", "mode": 1}]},
        {"coefficient": 1.0, "factors": [{"kind": "create", "mode": 1}, {"kind": "annihilate", "mode": 0}]}
      ],
      "initial_state": {"type": "slater", "occupied": [0]},
      "run": {"times": [0.0, 0.5, 1.0], "trotter_steps": 64}
    }

Coefficients are numbers or ``[re, im]`` pairs. A term may give ``"pauli":
"X0 Z1"`` instead of ``"factors"`` to act directly on the qubit register.
Statistics are ``fermion``, ``anyon`` (with ``theta``), ``boson`` (with
``n_max``, sizes given by ``num_sites``) or ``qubit`` (``num_qubits``, Pauli
terms only). See the README for every section.

Exit codes: 0 success, 2 parse error, 3 invalid model, 4 validation failure,
5 resource limit.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .mappings import (Anyon, Boson, BosonLayout, Fermion, LadderFactor, SecondQuantizedOperator,
                       StatisticsError, ValidationReport, map_operator, num_qubits_for,
                       validate_anyon_algebra, validate_anyon_limits, validate_fermion_algebra,
                       validate_modified_commutators)
from .measurement import (AliasingError, CorrelationSpec, SpectrumSpec, correlation_csv,
                          measure_correlation, spectral_peaks, spectrum_csv, spectrum_time_series)
from .pauli import ORACLE_LIMIT_ENV, OracleLimitError, PauliString, PauliSum, _check_oracle
from .simulator import StateVector, run
from .stateprep import (BosonProductSpec, LinearCombinationSpec, PostSelectedPrep, SlaterSpec,
                        ThoulessSpec, _flip, prepare_boson_product, prepare_linear_combination,
                        prepare_slater, run_linear_combination, thouless_rotate)
from .synthesis import (Circuit, CircuitParseError, NonHermitianError, TrotterPlan,
                        circuit_from_text, circuit_to_text, gate_census, trotterize)

EXIT_OK, EXIT_PARSE, EXIT_MODEL, EXIT_VALIDATION, EXIT_RESOURCE = 0, 2, 3, 4, 5

STAT_TYPES = ("fermion", "anyon", "boson", "qubit")
STATE_TYPES = ("vacuum", "basis", "slater", "thouless", "linear_combination", "boson_product", "circuit")
_SIZE_KEY = {"fermion": "num_modes", "anyon": "num_modes", "boson": "num_sites", "qubit": "num_qubits"}
RUN_DEFAULTS = {
    "times": [0.0], "total_time": 1.0, "trotter_steps": 64, "backend": "exact",
    "seed": None, "shots": None, "oracle_limit": None,
}


class ModelError(ValueError):
    """The model parsed as JSON but does not describe a valid run."""


class ModelParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


# --- value helpers ------------------------------------------------------------

def _complex(v, where: str) -> complex:
    if isinstance(v, bool):
        raise ModelError(f"{where}: expected a number or [re, im]")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ModelError(f"{where}: expected a number or [re, im], got {v!r}")


def _render_complex(c: complex):
    return float(c.real) if c.imag == 0 else [float(c.real), float(c.imag)]


def _int(v, where: str, minimum: int | None = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ModelError(f"{where}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ModelError(f"{where}: must be at least {minimum}")
    return v


def _float(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ModelError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ModelError(f"{where}: expected an object")
    if key not in d:
        raise ModelError(f"{where}: missing key {key!r}")
    return d[key]


# --- model --------------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    coefficient: complex
    factors: tuple[LadderFactor, ...] = ()
    pauli: str | None = None

    @classmethod
    def from_dict(cls, d: dict, where: str) -> Term:
        coeff = _complex(d.get("coefficient", 1.0) if isinstance(d, dict) else None, where + ".coefficient")
        if "pauli" in d:
            if "factors" in d:
                raise ModelError(f"{where}: give either 'pauli' or 'factors', not both")
            if not isinstance(d["pauli"], str):
                raise ModelError(f"{where}.pauli: expected a string such as 'X0 Z1'")
            return cls(coeff, (), d["pauli"])
        factors = []
        for k, f in enumerate(_require(d, "factors", where)):
            fw = f"{where}.factors[{k}]"
            try:
                factors.append(LadderFactor(_int(_require(f, "mode", fw), fw + ".mode", 0),
                                            _require(f, "kind", fw)))
            except ValueError as exc:
                raise ModelError(f"{fw}: {exc}") from exc
        return cls(coeff, tuple(factors))

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"coefficient": _render_complex(self.coefficient)}
        if self.pauli is not None:
            out["pauli"] = self.pauli
        else:
            out["factors"] = [{"kind": f.kind, "mode": f.mode} for f in self.factors]
        return out


def _terms(raw, where: str) -> tuple[Term, ...]:
    if not isinstance(raw, list):
        raise ModelError(f"{where}: expected a list of terms")
    return tuple(Term.from_dict(t, f"{where}[{k}]") for k, t in enumerate(raw))


def _normalize_state(d, where: str) -> dict:
    kind = _require(d, "type", where)
    if kind not in STATE_TYPES:
        raise ModelError(f"{where}.type: unknown state type {kind!r}; expected one of {STATE_TYPES}")
    if kind == "vacuum":
        return {"type": kind}
    if kind == "basis":
        bits = _require(d, "bits", where)
        if not isinstance(bits, str) or set(bits) - {"0", "1"}:
            raise ModelError(f"{where}.bits: expected a string of 0/1, qubit 0 first")
        return {"type": kind, "bits": bits}
    if kind in ("slater", "thouless"):
        occ = [_int(x, f"{where}.occupied", 0) for x in _require(d, "occupied", where)]
        out: dict[str, Any] = {"type": kind, "occupied": occ}
        if kind == "thouless":
            rows = _require(d, "M", where)
            if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
                raise ModelError(f"{where}.M: expected a matrix (list of rows)")
            out["M"] = [[_render_complex(_complex(x, f"{where}.M")) for x in r] for r in rows]
            out["steps"] = _int(d.get("steps", 64), f"{where}.steps", 1)
        return out
    if kind == "linear_combination":
        amps = [_render_complex(_complex(x, f"{where}.amplitudes")) for x in _require(d, "amplitudes", where)]
        branches = [_normalize_state(b, f"{where}.branches[{k}]")
                    for k, b in enumerate(_require(d, "branches", where))]
        if any(b["type"] == "linear_combination" for b in branches):
            raise ModelError(f"{where}: branches must be unitary preparations")
        return {"type": kind, "amplitudes": amps, "branches": branches}
    if kind == "boson_product":
        occ = [_int(x, f"{where}.occupations", 0) for x in _require(d, "occupations", where)]
        out = {"type": kind, "occupations": occ}
        if d.get("total") is not None:
            out["total"] = _int(d["total"], f"{where}.total", 0)
        return out
    lines = _require(d, "lines", where)
    if not isinstance(lines, list) or not all(isinstance(x, str) for x in lines):
        raise ModelError(f"{where}.lines: expected a list of circuit text lines")
    return {"type": kind, "lines": list(lines)}


def _normalize_run(d, where: str = "run") -> dict:
    if d is None:
        d = {}
    if not isinstance(d, dict):
        raise ModelError(f"{where}: expected an object")
    unknown = set(d) - set(RUN_DEFAULTS)
    if unknown:
        raise ModelError(f"{where}: unknown keys {sorted(unknown)}")
    out = dict(RUN_DEFAULTS)
    out.update(d)
    out["times"] = [_float(t, f"{where}.times") for t in out["times"]]
    out["total_time"] = _float(out["total_time"], f"{where}.total_time")
    out["trotter_steps"] = _int(out["trotter_steps"], f"{where}.trotter_steps", 1)
    if out["backend"] not in ("exact", "trotter"):
        raise ModelError(f"{where}.backend: expected 'exact' or 'trotter'")
    for key, lo in (("seed", 0), ("shots", 1), ("oracle_limit", 1)):
        if out[key] is not None:
            out[key] = _int(out[key], f"{where}.{key}", lo)
    return out


@dataclass(frozen=True)
class ModelFile:
    statistics: dict
    size: int
    hamiltonian: tuple[Term, ...] = ()
    initial_state: dict | None = None
    correlation: dict | None = None
    spectrum: dict | None = None
    run: dict = field(default_factory=lambda: dict(RUN_DEFAULTS))

    @classmethod
    def from_dict(cls, d: dict) -> ModelFile:
        if not isinstance(d, dict):
            raise ModelError("model: expected a JSON object at top level")
        st = _require(d, "statistics", "model")
        kind = _require(st, "type", "statistics")
        if kind not in STAT_TYPES:
            raise ModelError(f"statistics.type: unknown {kind!r}; expected one of {STAT_TYPES}")
        stats: dict[str, Any] = {"type": kind}
        if kind == "anyon":
            stats["theta"] = _float(_require(st, "theta", "statistics"), "statistics.theta")
        if kind == "boson":
            stats["n_max"] = _int(_require(st, "n_max", "statistics"), "statistics.n_max", 1)
        size_key = _SIZE_KEY[kind]
        size = _int(_require(d, size_key, "model"), size_key, 1)
        ham = _terms(d.get("hamiltonian", []), "hamiltonian")
        state = None if d.get("initial_state") is None else _normalize_state(d["initial_state"], "initial_state")
        corr = None
        if d.get("correlation") is not None:
            c = d["correlation"]
            corr = {"A": _terms(_require(c, "A", "correlation"), "correlation.A"),
                    "B": _terms(_require(c, "B", "correlation"), "correlation.B")}
        spec = None
        if d.get("spectrum") is not None:
            s = d["spectrum"]
            spec = {
                "observable": None if s.get("observable") is None else _terms(s["observable"], "spectrum.observable"),
                "dt": _float(_require(s, "dt", "spectrum"), "spectrum.dt"),
                "num_samples": _int(s.get("num_samples", 512), "spectrum.num_samples", 8),
                "steps_per_sample": _int(s.get("steps_per_sample", 1), "spectrum.steps_per_sample", 1),
            }
        model = cls(stats, size, ham, state, corr, spec, _normalize_run(d.get("run")))
        if kind == "qubit" and any(t.pauli is None for t in model.all_terms()):
            raise ModelError("qubit models accept only 'pauli' terms")
        return model

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"statistics": dict(self.statistics),
                               _SIZE_KEY[self.statistics["type"]]: self.size,
                               "hamiltonian": [t.to_dict() for t in self.hamiltonian]}
        if self.initial_state is not None:
            out["initial_state"] = json.loads(json.dumps(self.initial_state))
        if self.correlation is not None:
            out["correlation"] = {k: [t.to_dict() for t in v] for k, v in self.correlation.items()}
        if self.spectrum is not None:
            s = dict(self.spectrum)
            s["observable"] = None if s["observable"] is None else [t.to_dict() for t in s["observable"]]
            out["spectrum"] = s
        out["run"] = dict(self.run)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def all_terms(self):
        yield from self.hamiltonian
        if self.correlation:
            yield from self.correlation["A"]
            yield from self.correlation["B"]
        if self.spectrum and self.spectrum["observable"]:
            yield from self.spectrum["observable"]

    # derived objects

    @property
    def statistics_obj(self):
        kind = self.statistics["type"]
        if kind == "fermion":
            return Fermion()
        if kind == "anyon":
            return Anyon(self.statistics["theta"])
        if kind == "boson":
            return Boson(self.statistics["n_max"])
        return None

    @property
    def layout(self) -> BosonLayout | None:
        if self.statistics["type"] != "boson":
            return None
        return BosonLayout(self.size, self.statistics["n_max"])

    @property
    def num_qubits(self) -> int:
        stats = self.statistics_obj
        return self.size if stats is None else num_qubits_for(stats, self.size)

    def operator(self, terms: Sequence[Term]) -> PauliSum:
        """Qubit image of a term list; ladder terms go through the statistics' mapping."""
        n = self.num_qubits
        out = PauliSum.zero(n)
        ladder = []
        for t in terms:
            if t.pauli is not None:
                try:
                    out = out + PauliSum.from_string(PauliString.from_label(t.pauli, n), t.coefficient)
                except ValueError as exc:
                    raise ModelError(f"pauli term {t.pauli!r}: {exc}") from exc
            else:
                ladder.append((t.coefficient, t.factors))
        if ladder:
            try:
                op = SecondQuantizedOperator.from_terms(self.statistics_obj, self.size, ladder)
            except ValueError as exc:
                raise ModelError(str(exc)) from exc
            out = out + map_operator(op, self.layout)
        return out

    def hamiltonian_sum(self) -> PauliSum:
        h = self.operator(self.hamiltonian)
        if not h.is_hermitian():
            raise NonHermitianError("the mapped Hamiltonian is not Hermitian")
        return h

    def _state_circuit(self, st: dict) -> Circuit:
        n = self.num_qubits
        kind = st["type"]
        if kind == "vacuum":
            return Circuit(n)
        if kind == "basis":
            if len(st["bits"]) != n:
                raise ModelError(f"basis state needs {n} bits, got {len(st['bits'])}")
            c = Circuit(n)
            for q, b in enumerate(st["bits"]):
                if b == "0":
                    c = c.then(_flip(q, n))
            return c
        if kind == "circuit":
            c = circuit_from_text("\n".join(st["lines"]), n)
            if c.num_qubits != n:
                raise ModelError(f"circuit acts on {c.num_qubits} qubits, model has {n}")
            return c
        if kind == "boson_product":
            if self.layout is None:
                raise ModelError("boson_product needs boson statistics")
            return prepare_boson_product(BosonProductSpec(self.layout, tuple(st["occupations"]), st.get("total")))
        if self.statistics["type"] not in ("fermion", "anyon"):
            raise ModelError(f"{kind} preparation needs fermionic modes")
        base = SlaterSpec(n, tuple(st["occupied"]))
        if kind == "slater":
            return prepare_slater(base)
        m = np.array([[_complex(x, "M") for x in r] for r in st["M"]])
        return thouless_rotate(ThoulessSpec(base, m), st["steps"])

    def prep(self) -> Circuit | PostSelectedPrep:
        st = self.initial_state or {"type": "vacuum"}
        try:
            if st["type"] == "linear_combination":
                branches = tuple(self._state_circuit(b) for b in st["branches"])
                amps = tuple(_complex(a, "amplitudes") for a in st["amplitudes"])
                return prepare_linear_combination(LinearCombinationSpec(amps, branches))
            return self._state_circuit(st)
        except (ModelError, CircuitParseError, NonHermitianError):
            raise
        except ValueError as exc:
            raise ModelError(f"initial_state: {exc}") from exc

    def unitary_prep(self) -> Circuit:
        p = self.prep()
        if isinstance(p, PostSelectedPrep):
            raise ModelError("linear_combination states are post-selected; "
                             "correlate and spectrum need a unitary preparation")
        return p


def parse_model(text: str) -> ModelFile:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(exc.msg, exc.lineno, exc.colno) from exc
    return ModelFile.from_dict(d)


def load_model(path: str) -> ModelFile:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


# --- commands -----------------------------------------------------------------

def _census_lines(c: Circuit) -> list[str]:
    census = gate_census(c)
    return ["# census " + " ".join(f"{k}={v}" for k, v in census.items())]


def cmd_compile(model: ModelFile, args) -> str:
    h = model.hamiltonian_sum()
    steps = args.steps or model.run["trotter_steps"]
    t = model.run["total_time"]
    circ = trotterize(TrotterPlan(h, t, steps)) if not h.is_zero() else Circuit(model.num_qubits)
    return circuit_to_text(circ) + "\n".join(_census_lines(circ)) + "\n"


def cmd_prep(model: ModelFile, args) -> str:
    p = model.prep()
    if isinstance(p, PostSelectedPrep):
        if args.state:
            prob, state = run_linear_combination(p)
            if state is None:
                raise ModelError("post-selection branch has zero probability")
            return f"# success_probability {prob!r}\n" + state.to_csv()
        header = [f"# system_qubits {p.num_system_qubits}",
                  "# ancillas " + " ".join(f"q{q}" for q in p.ancilla_indices),
                  "# accept " + " ".join(f"q{q}={v}" for q, v in sorted(p.accept_pattern.items())),
                  f"# predicted_success_probability {p.predicted_success_probability!r}"]
        return "\n".join(header) + "\n" + circuit_to_text(p.circuit) + "\n".join(_census_lines(p.circuit)) + "\n"
    if args.state:
        return run(p, StateVector.all_down(p.num_qubits)).to_csv()
    return circuit_to_text(p) + "\n".join(_census_lines(p)) + "\n"


def _unitary_terms(ps: PauliSum) -> list[tuple[complex, PauliString]]:
    return [(complex(c), PauliString(s.ops)) for s, c in ps.items()]


def cmd_correlate(model: ModelFile, args) -> str:
    if model.correlation is None:
        raise ModelError("model has no 'correlation' section")
    h = model.hamiltonian_sum()
    prep = model.unitary_prep()
    a_terms = _unitary_terms(model.operator(model.correlation["A"]))
    b_terms = _unitary_terms(model.operator(model.correlation["B"]))
    times = model.run["times"]
    steps = args.steps or model.run["trotter_steps"]
    backend = args.backend or model.run["backend"]
    seed = args.seed if args.seed is not None else model.run["seed"]
    limit = _limit(args, model)
    seeds = np.random.SeedSequence(seed).spawn(max(1, len(a_terms) * len(b_terms)))
    total = np.zeros(len(times), dtype=complex)
    k = 0
    for alpha, a in a_terms:
        for beta, b in b_terms:
            spec = CorrelationSpec(a, b, h, prep, times, steps)
            rows = measure_correlation(spec, backend, model.run["shots"], seeds[k], limit)
            total += np.conj(alpha) * beta * np.array([g for _, g in rows])
            k += 1
    order = sorted(range(len(times)), key=lambda i: times[i])
    return correlation_csv([(times[i], complex(total[i])) for i in order])


def cmd_spectrum(model: ModelFile, args) -> str:
    if model.spectrum is None:
        raise ModelError("model has no 'spectrum' section")
    s = model.spectrum
    q = model.hamiltonian_sum() if s["observable"] is None else model.operator(s["observable"])
    prep = model.unitary_prep()
    spec = SpectrumSpec(q, prep, s["dt"], s["num_samples"])
    backend = args.backend or model.run["backend"]
    series = spectrum_time_series(spec, backend, args.steps or s["steps_per_sample"], _limit(args, model))
    return spectrum_csv(spectral_peaks(series, spec.dt))


def cmd_validate(model: ModelFile, args) -> tuple[str, bool]:
    kind = model.statistics["type"]
    _check_oracle(model.num_qubits, _limit(args, model))
    reports: list[ValidationReport] = []
    if kind == "fermion":
        reports.append(validate_fermion_algebra(model.size))
    elif kind == "anyon":
        reports.append(validate_anyon_algebra(model.statistics["theta"], model.size))
        reports.append(validate_anyon_limits(model.size))
    elif kind == "boson":
        reports.append(validate_modified_commutators(model.statistics["n_max"], model.size))
    h = model.operator(model.hamiltonian)
    herm = ValidationReport("mapped Hamiltonian")
    herm.add("H = H^dagger", (h - h.adjoint()).one_norm(), 1e-12)
    reports.append(herm)
    text = "\n".join(str(r) for r in reports) + "\n"
    return text, all(r.passed for r in reports)


# --- entry point --------------------------------------------------------------

def _limit(args, model: ModelFile) -> int | None:
    return args.oracle_limit if args.oracle_limit is not None else model.run["oracle_limit"]


@contextlib.contextmanager
def _oracle_env(limit: int | None):
    """Make ``limit`` the process default while a command runs."""
    if limit is None:
        yield
        return
    old = os.environ.get(ORACLE_LIMIT_ENV)
    os.environ[ORACLE_LIMIT_ENV] = str(limit)
    try:
        yield
    finally:
        if old is None:
            os.environ.pop(ORACLE_LIMIT_ENV, None)
        else:
            os.environ[ORACLE_LIMIT_ENV] = old


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinlang", description="Compile and simulate lattice models on qubits.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("compile", "Trotterized evolution circuit and gate census"),
                        ("prep", "initial-state preparation circuit"),
                        ("correlate", "G(t) from the ancilla network, as CSV"),
                        ("spectrum", "spectral peaks of an observable, as CSV"),
                        ("validate", "algebra checks of the mapping")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--model", required=True, help="path to the JSON model file")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--backend", choices=("exact", "trotter"), help="evolution backend")
        sp.add_argument("--steps", type=int, help="Trotter steps (overrides the model)")
        sp.add_argument("--seed", type=int, help="seed for shot sampling")
        sp.add_argument("--oracle-limit", type=int,
                        help=f"largest qubit count for dense matrices (env {ORACLE_LIMIT_ENV}, default 14)")
        if name == "prep":
            sp.add_argument("--state", action="store_true", help="emit the prepared state as CSV")
    return p


COMMANDS = {"compile": cmd_compile, "prep": cmd_prep, "correlate": cmd_correlate,
            "spectrum": cmd_spectrum, "validate": cmd_validate}


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.steps is not None and args.steps < 1:
        print("error: --steps must be at least 1", file=sys.stderr)
        return EXIT_MODEL
    try:
        model = load_model(args.model)
    except OSError as exc:
        print(f"error: cannot read model: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ModelParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ModelError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    try:
        with _oracle_env(_limit(args, model)):
            result = COMMANDS[args.command](model, args)
    except CircuitParseError as exc:
        print(f"parse error in circuit text: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OracleLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ModelError, NonHermitianError, StatisticsError, AliasingError, ValueError) as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    if args.command == "validate":
        text, ok = result
        _emit(text, args.out)
        if not ok:
            failed = [line.strip() for line in text.splitlines() if line.strip().startswith("FAIL")]
            print("validation failed:\n  " + "\n  ".join(failed), file=sys.stderr)
            return EXIT_VALIDATION
        return EXIT_OK
    _emit(result, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
