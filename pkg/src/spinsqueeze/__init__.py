"""Dissipative one-axis twisting of SiV ensembles in a diamond phonon waveguide."""
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .dicke import (DickeOperators, SpinState, align_mean_spin_x, build_dicke_operators,
                    coherent_spin_state_x, dicke_state, expect)
from .lindblad import (DensityMatrix, LindbladSpec, Trajectory, TruncationError,
                       evolve_lindblad, evolve_tavis_cummings, fidelity, make_oat_spec,
                       trace_distance)
from .moments import MomentParams, MomentVector, evolve_moments, initial_moments
from .runner import RunReport, run
from .siv import SiVParams, closed_form_energies, diagonalize_ground, mixing_angles
from .squeezing import (dissipative_estimate, fig3b_rows, ideal_optimum, short_time_variance,
                        trace_from_expectations, trace_from_moments, xi_from_density,
                        xi_squared)
from .waveguide import (CouplingBudget, WaveguideSpec, compression_mode_spectrum, guide_coupling,
                        lame_constants, make_budget, single_spin_coupling, thermal_occupation)

__version__ = "0.1.0"
