"""Lattice models (fermions, anyons, capped bosons) compiled to qubit circuits.

Second-quantized operators are mapped to Pauli sums, exponentiated into
single-qubit rotations and Ising ``ZZ`` gates, and executed on a statevector
simulator together with state preparation and ancilla-based measurement.
"""
from .mappings import (Anyon, Boson, BosonLayout, Fermion, SecondQuantizedOperator, annihilate,
                       anyon_map, boson_map, create, hopping, jordan_wigner, map_operator, number,
                       quadratic_form)
from .measurement import (CorrelationSpec, SpectrumSpec, build_correlation_network,
                          measure_correlation, measure_spectrum, spectral_peaks,
                          spectrum_time_series)
from .pauli import PauliString, PauliSum, commutes, multiply
from .simulator import StateVector, exact_evolution, expectation, post_select, run, sample
from .stateprep import (BosonProductSpec, LinearCombinationSpec, SlaterSpec, ThoulessSpec,
                        prepare_boson_product, prepare_linear_combination, prepare_slater,
                        thouless_rotate)
from .synthesis import (Circuit, TrotterPlan, gate_census, synthesize_pauli_exponential,
                        trotterize)

__version__ = "0.1.0"

__all__ = [
    "Anyon", "Boson", "BosonLayout", "BosonProductSpec", "Circuit", "CorrelationSpec",
    "Fermion", "LinearCombinationSpec", "PauliString", "PauliSum", "SecondQuantizedOperator",
    "SlaterSpec", "SpectrumSpec", "StateVector", "ThoulessSpec", "TrotterPlan", "annihilate",
    "anyon_map", "boson_map", "build_correlation_network", "commutes", "create",
    "exact_evolution", "expectation", "gate_census", "hopping", "jordan_wigner", "map_operator",
    "measure_correlation", "measure_spectrum", "multiply", "number", "post_select",
    "prepare_boson_product", "prepare_linear_combination", "prepare_slater", "quadratic_form",
    "run", "sample", "spectral_peaks", "spectrum_time_series", "synthesize_pauli_exponential",
    "thouless_rotate", "trotterize",
]
