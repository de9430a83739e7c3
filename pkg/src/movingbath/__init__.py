"""Thermodynamics of a multilevel system in uniform motion through a thermal bath."""

from .bath import BathParams, beta_eff, doppler_factors, occupation, occupation_quadrature, spectral_rate
from .counting import ClockStats, CountingSpec, clock_stats, gillespie_count, scaled_cumulant_rate
from .dynamics import coherence_decay_rate, gksl_evolve, pauli_evolve
from .steady_state import (
    Classification,
    SteadyStateReport,
    affinity_small_u,
    analyze,
    classify,
    currents,
    cycle_affinity_delta,
    entropy_production,
    potential_form,
    solve_steady,
)
from .system import (
    LevelSystem,
    RateMatrix,
    battery_three_level,
    bohr_frequencies,
    delta_three_level,
    rate_matrix,
    two_level,
    validate_secular,
)
from .thermo import WorkReport, battery_potentials, ergotropy_diagonal, free_energy, max_work

__version__ = "0.1.0"
