import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from spinlang.cli import ModelError, ModelFile, main, parse_model
from spinlang.synthesis import circuit_from_text, gate_census

HOP = [
    {"coefficient": 1.0, "factors": [{"kind": "create", "mode": 0}, {"kind": "annihilate", "mode": 1}]},
    {"coefficient": 1.0, "factors": [{"kind": "create", "mode": 1}, {"kind": "annihilate", "mode": 0}]},
]

WORKED = {
    "statistics": {"type": "qubit"}, "num_qubits": 1,
    "hamiltonian": [{"coefficient": 1.0, "pauli": "Z0"}],
    "initial_state": {"type": "basis", "bits": "0"},
    "correlation": {"A": [{"coefficient": 1.0, "pauli": "X0"}], "B": [{"coefficient": 1.0, "pauli": "X0"}]},
    "run": {"times": [0.0, 0.3, 1.0]},
}

FERMION = {
    "statistics": {"type": "fermion"}, "num_modes": 2,
    "hamiltonian": HOP + [{"coefficient": 0.4, "factors": [{"kind": "number", "mode": 0}]}],
    "initial_state": {"type": "slater", "occupied": [0]},
    "correlation": {"A": [{"coefficient": 1.0, "factors": [{"kind": "create", "mode": 1}]}],
                    "B": [{"coefficient": 1.0, "factors": [{"kind": "create", "mode": 1}]}]},
    "spectrum": {"dt": 0.1, "num_samples": 256},
    "run": {"times": [0.0, 0.5, 1.0], "trotter_steps": 64, "seed": 3},
}


def write(tmp_path, model, name="model.json"):
    p = tmp_path / name
    p.write_text(json.dumps(model) if not isinstance(model, str) else model)
    return str(p)


def call(tmp_path, *args):
    out = tmp_path / "out.txt"
    code = main(list(args) + ["--out", str(out)])
    return code, out.read_text() if out.exists() else ""


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_worked_case_csv(tmp_path):
    code, text = call(tmp_path, "correlate", "--model", write(tmp_path, WORKED))
    assert code == 0
    table = rows(text)
    assert table[0] == ["t", "re", "im"]
    for t, re, im in table[1:]:
        assert abs(float(re) - math.cos(2 * float(t))) < 1e-10
        assert abs(float(im) - math.sin(2 * float(t))) < 1e-10


def test_identity_correlation(tmp_path):
    model = dict(FERMION, correlation={"A": [{"coefficient": 1.0, "pauli": "I"}],
                                       "B": [{"coefficient": 1.0, "pauli": "I"}]})
    code, text = call(tmp_path, "correlate", "--model", write(tmp_path, model))
    assert code == 0
    for _, re, im in rows(text)[1:]:
        assert abs(float(re) - 1) < 1e-12 and abs(float(im)) < 1e-12


def test_linear_recombination_matches_dense(tmp_path):
    from spinlang.mappings import Fermion, SecondQuantizedOperator, create, jordan_wigner
    model = parse_model(json.dumps(FERMION))
    code, text = call(tmp_path, "correlate", "--model", write(tmp_path, FERMION))
    assert code == 0
    # dense G(t) = <psi| T^dag A^dag T B |psi> with A = B = c+_1
    h = model.hamiltonian_sum().to_matrix()
    cd1 = jordan_wigner(SecondQuantizedOperator.from_terms(Fermion(), 2, [(1.0, (create(1),))])).to_matrix()
    psi = np.zeros(4, dtype=complex)
    psi[0b01] = 1.0
    for t, re, im in rows(text)[1:]:
        w, v = np.linalg.eigh(h)
        T = (v * np.exp(-1j * float(t) * w)) @ v.conj().T
        g = np.vdot(psi, T.conj().T @ cd1.conj().T @ T @ cd1 @ psi)
        assert abs(complex(float(re), float(im)) - g) < 1e-10


def test_trotter_backend_close_to_exact(tmp_path):
    path = write(tmp_path, FERMION)
    _, exact = call(tmp_path, "correlate", "--model", path)
    gaps = []
    for steps in (32, 64):
        code, trot = call(tmp_path, "correlate", "--model", path, "--backend", "trotter", "--steps", str(steps))
        assert code == 0
        gaps.append(max(abs(complex(float(a[1]), float(a[2])) - complex(float(b[1]), float(b[2])))
                        for a, b in zip(rows(exact)[1:], rows(trot)[1:])))
    assert gaps[1] < gaps[0] and gaps[1] * 64 < 1.0


def test_compile_three_qubit_example(tmp_path):
    model = {"statistics": {"type": "qubit"}, "num_qubits": 3,
             "hamiltonian": [{"coefficient": 0.3, "pauli": "X0 Z1 X2"}], "run": {"trotter_steps": 1}}
    code, text = call(tmp_path, "compile", "--model", write(tmp_path, model))
    assert code == 0
    c = circuit_from_text(text)
    assert gate_census(c) == {"Rx": 2, "Ry": 2, "Rz": 0, "ZZ": 3, "CPauliExp": 0, "PhaseOnControl": 0, "total": 7}
    assert "# census Rx=2 Ry=2 Rz=0 ZZ=3" in text


def test_compile_empty_hamiltonian(tmp_path):
    model = {"statistics": {"type": "fermion"}, "num_modes": 3, "hamiltonian": []}
    code, text = call(tmp_path, "compile", "--model", write(tmp_path, model))
    assert code == 0
    assert gate_census(circuit_from_text(text))["total"] == 0


def test_compile_hopping_ring(tmp_path):
    ham = []
    for i in range(4):
        j = (i + 1) % 4
        ham += [{"coefficient": 1.0, "factors": [{"kind": "create", "mode": i}, {"kind": "annihilate", "mode": j}]},
                {"coefficient": 1.0, "factors": [{"kind": "create", "mode": j}, {"kind": "annihilate", "mode": i}]}]
    model = {"statistics": {"type": "fermion"}, "num_modes": 4, "hamiltonian": ham, "run": {"trotter_steps": 1}}
    code, text = call(tmp_path, "compile", "--model", write(tmp_path, model))
    assert code == 0
    # three nearest-neighbour bonds (two weight-2 strings, 5 gates each)
    # and one wrap-around bond (two weight-4 strings, 9 gates each)
    assert gate_census(circuit_from_text(text))["total"] == 3 * 10 + 18


def test_spectrum_two_level(tmp_path):
    model = {"statistics": {"type": "qubit"}, "num_qubits": 1,
             "hamiltonian": [{"coefficient": 1.0, "pauli": "Z0"}],
             "initial_state": {"type": "circuit", "lines": ["RY q0 -1.5707963267948966"]},
             "spectrum": {"dt": 0.1, "num_samples": 512}}
    code, text = call(tmp_path, "spectrum", "--model", write(tmp_path, model))
    assert code == 0
    table = [(float(a), float(b)) for a, b in rows(text)[1:]]
    assert len(table) == 2
    assert abs(table[0][0] + 1) < 0.12 and abs(table[1][0] - 1) < 0.12
    assert all(abs(w - 0.5) < 0.025 for _, w in table)


def test_spectrum_eigenstate(tmp_path):
    model = {"statistics": {"type": "qubit"}, "num_qubits": 1,
             "hamiltonian": [{"coefficient": 1.0, "pauli": "Z0"}],
             "initial_state": {"type": "basis", "bits": "0"}, "spectrum": {"dt": 0.1, "num_samples": 128}}
    code, text = call(tmp_path, "spectrum", "--model", write(tmp_path, model))
    assert code == 0
    assert len(rows(text)) == 2


def test_spectrum_boson_hopping(tmp_path):
    model = {"statistics": {"type": "boson", "n_max": 1}, "num_sites": 2, "hamiltonian": HOP,
             "initial_state": {"type": "boson_product", "occupations": [1, 0]},
             "spectrum": {"dt": 0.1, "num_samples": 512}}
    code, text = call(tmp_path, "spectrum", "--model", write(tmp_path, model))
    assert code == 0
    lams = [float(r[0]) for r in rows(text)[1:]]
    grid = 2 * math.pi / (512 * 0.1)
    assert len(lams) == 2 and abs(lams[0] + 1) < grid and abs(lams[1] - 1) < grid


def test_validate_suites(tmp_path):
    for model in ({"statistics": {"type": "fermion"}, "num_modes": 4},
                  {"statistics": {"type": "anyon", "theta": math.pi}, "num_modes": 3},
                  {"statistics": {"type": "boson", "n_max": 2}, "num_sites": 2}):
        code, text = call(tmp_path, "validate", "--model", write(tmp_path, model))
        assert code == 0, text
        assert "FAIL" not in text and "PASS" in text


def test_prep_outputs(tmp_path):
    code, text = call(tmp_path, "prep", "--model", write(tmp_path, FERMION), "--state")
    assert code == 0
    assert rows(text)[1][0] == str(0b01)
    lcu = dict(FERMION, initial_state={"type": "linear_combination", "amplitudes": [1, 1],
                                       "branches": [{"type": "slater", "occupied": [0]},
                                                    {"type": "slater", "occupied": [1]}]})
    path = write(tmp_path, lcu)
    code, text = call(tmp_path, "prep", "--model", path)
    assert code == 0 and "# predicted_success_probability 0.5" in text
    circuit_from_text(text)
    code, text = call(tmp_path, "prep", "--model", path, "--state")
    assert code == 0
    assert abs(float(text.splitlines()[0].split()[-1]) - 0.5) < 1e-10
    assert call(tmp_path, "correlate", "--model", path)[0] == 3


def test_round_trip():
    for model in (WORKED, FERMION, {"statistics": {"type": "anyon", "theta": 0.5}, "num_modes": 2,
                                    "hamiltonian": [{"coefficient": [0.5, -0.25], "factors": HOP[0]["factors"]}],
                                    "initial_state": {"type": "thouless", "occupied": [0],
                                                      "M": [[0, [0.1, 0.2]], [[0.1, -0.2], 0]]}}):
        m = parse_model(json.dumps(model))
        again = ModelFile.from_dict(json.loads(m.to_json()))
        assert again == m
        assert again.to_json() == m.to_json()


def test_deterministic_output(tmp_path):
    model = dict(FERMION, run=dict(FERMION["run"], shots=500))
    path = write(tmp_path, model)
    outs = []
    for k in range(2):
        out = tmp_path / f"o{k}.csv"
        assert main(["correlate", "--model", path, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    out = tmp_path / "other.csv"
    main(["correlate", "--model", path, "--out", str(out), "--seed", "99"])
    assert out.read_bytes() != outs[0]


def test_exit_codes(tmp_path, capsys):
    bad_json = write(tmp_path, '{"statistics": {"type": "fermion"},\n  "num_modes": 2,,\n}', "bad.json")
    assert main(["compile", "--model", bad_json]) == 2
    assert "line 2, column 18" in capsys.readouterr().err
    assert main(["compile", "--model", str(tmp_path / "missing.json")]) == 2

    non_herm = dict(FERMION, hamiltonian=HOP[:1])
    assert main(["compile", "--model", write(tmp_path, non_herm)]) == 3
    unknown = {"statistics": {"type": "parafermion"}, "num_modes": 2}
    assert main(["compile", "--model", write(tmp_path, unknown)]) == 3
    alias = dict(FERMION, spectrum={"dt": 10.0, "num_samples": 64})
    assert main(["spectrum", "--model", write(tmp_path, alias)]) == 3
    bad_circuit = dict(WORKED, initial_state={"type": "circuit", "lines": ["RX q0 0.1", "NOPE"]})
    assert main(["correlate", "--model", write(tmp_path, bad_circuit)]) == 2

    big = {"statistics": {"type": "fermion"}, "num_modes": 6}
    assert main(["validate", "--model", write(tmp_path, big), "--oracle-limit", "4"]) == 5


def test_validation_failure_exit_code(tmp_path, monkeypatch):
    from spinlang import cli
    from spinlang.mappings import ValidationReport

    def broken(n):
        rep = ValidationReport("broken")
        rep.add("{c_i, c_j} = 0", 1.0, 1e-12)
        return rep

    monkeypatch.setattr(cli, "validate_fermion_algebra", broken)
    path = write(tmp_path, {"statistics": {"type": "fermion"}, "num_modes": 2})
    assert main(["validate", "--model", path]) == 4


def test_oracle_limit_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SPINLANG_ORACLE_LIMIT", "3")
    path = write(tmp_path, {"statistics": {"type": "fermion"}, "num_modes": 4})
    assert main(["validate", "--model", path]) == 5
    assert main(["validate", "--model", path, "--oracle-limit", "8"]) == 0


def test_model_errors():
    with pytest.raises(ModelError):
        ModelFile.from_dict({"statistics": {"type": "qubit"}, "num_qubits": 1,
                             "hamiltonian": [{"factors": [{"kind": "create", "mode": 0}]}]})
    with pytest.raises(ModelError):
        ModelFile.from_dict({"statistics": {"type": "fermion"}, "num_modes": 2, "run": {"bogus": 1}})


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "spinlang.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("compile", "prep", "correlate", "spectrum", "validate"):
        assert cmd in out.stdout
