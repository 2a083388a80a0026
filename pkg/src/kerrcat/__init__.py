"""Floquet analysis of the driven Kerr-cat qubit.

Static effective-Hamiltonian spectra, lab-frame period propagators and
their Floquet modes, drive calibration against the effective ladder,
phase-space localization measures, classical island geometry, and the
chaos-assisted tunneling diagnostics built on top of them.
"""

from .errors import (CalibrationError, ClassificationError, ConfigError,
                     FitError, KerrcatError, PropagationError, QualityError,
                     RegimeError, TruncationError, WindowError)
from .fockspace import (EffectiveParams, FockOperator, Spectrum, annihilation,
                        build_effective_hamiltonian, coherent_state,
                        displacement_operator, eigendecompose, parity_operator)
from .floquet import (DriveParams, FloquetSpectrum, FrameMap,
                      PropagatorOptions, circle_diff, floquet_spectrum,
                      lab_hamiltonian, match_states, propagate_period,
                      quasienergy_splitting)
from .calibration import CalibrationReport, calibrate_drive, model_gaps, \
    seed_drive
from .phasespace import (GridSpec, HusimiGrid, LocalizationReport, husimi,
                         ipn, localization_compare, wehrl_entropy)
from .classical import (ClassicalOptions, IslandGeometry, PoincareSection,
                        count_well_states, effective_classical_hamiltonian,
                        find_well_center, island_area, island_rotation_rate,
                        lobe_area, poincare_section, separatrix,
                        stationary_points)
from .cat import (ChaoticClassification, ChaoticProjector, SemiclassicalModel,
                  build_projector, classify_states, fgr_rate, fit_c0,
                  heisenberg_flag, retained_count, semiclassical_splitting,
                  splitting_from_rate)
from .config import RunConfig, fock_bound, load_config, validate_config
from .sweep import run, run_classify, run_curve, run_husimi, run_poincare, \
    run_sweep

__version__ = "0.1.0"
