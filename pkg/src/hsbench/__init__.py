"""Hamiltonian-simulation benchmark toolkit.

Builds random block-encoded Hamiltonians, runs the minimal-QSVT simulation
circuit for them (exactly and under depolarizing noise), and evaluates the
benchmark metrics (QUES, sXES, fidelity estimates) together with the
semi-analytic random-matrix curves that locate the classically hard regime.

The subpackages split along those lines: ``qsp`` solves and manipulates
phase factors, ``mqsvt`` assembles and runs the simulation circuit,
``noise`` adds depolarizing errors and shot sampling, ``circuits`` covers
the generic random-circuit baselines, ``haar_analytics`` holds the
ensemble-averaged curves, ``metrics`` turns measured bitstrings into
fidelity estimates, and ``linalg`` carries the shared primitives. The
names re-exported here are the usual entry points; everything else is
reachable through the submodules.
"""

from hsbench.circuits import (
    circuit_unitary,
    column_stats,
    generate_qv,
    generate_rqc,
    haar_reference,
    make_coupling,
)
from hsbench.haar_analytics import (
    critical_times,
    expected_bitstring_moments,
    h_moment,
    level_density_check,
    mc_h_oracle,
)
from hsbench.linalg import RandomSource, block_and_spectrum, haar_unitary, spectral_norm
from hsbench.metrics import (
    alpha_from_ques,
    alpha_from_sxes_empirical,
    ques,
    sxes,
)
from hsbench.mqsvt import (
    MqsvtInstance,
    encoded_block,
    exact_evolution,
    output_distribution,
)
from hsbench.noise import MqsvtNoisySampler, NoiseModel, alpha_ref
from hsbench.qsp import (
    bundled_phase_sets,
    concatenate,
    convert_convention,
    measured_sup_error,
    solve_phases,
)

__version__ = "0.1.0"

__all__ = [
    "MqsvtInstance",
    "MqsvtNoisySampler",
    "NoiseModel",
    "RandomSource",
    "alpha_from_ques",
    "alpha_from_sxes_empirical",
    "alpha_ref",
    "block_and_spectrum",
    "bundled_phase_sets",
    "circuit_unitary",
    "column_stats",
    "concatenate",
    "convert_convention",
    "critical_times",
    "encoded_block",
    "exact_evolution",
    "expected_bitstring_moments",
    "generate_qv",
    "generate_rqc",
    "h_moment",
    "haar_reference",
    "haar_unitary",
    "level_density_check",
    "make_coupling",
    "mc_h_oracle",
    "measured_sup_error",
    "output_distribution",
    "ques",
    "solve_phases",
    "spectral_norm",
    "sxes",
    "__version__",
]
