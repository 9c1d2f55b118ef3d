"""Small-noise limit measures, quasipotentials and action minimization."""
from .action import (ActionValue, Path, action, action_and_gradient, chain, extend_by_flow,
                     flow_path, lif_path, link)
from .corpus import builtin_corpus, get_system
from .errors import EscapeError, InvalidSystemError, LimitCheckError
from .export import export_csv
from .flow import (RegionClassification, Trajectory, alpha_limit_estimate, classify_region,
                   euler_integrate, integrate_ode, omega_limit_estimate, reverse_integrate)
from .montecarlo import (DecayFit, DensityComparison, OccupationHistogram, SimConfig,
                         compare_to_density, concentration_scan, em_simulate, em_stream,
                         fit_decay, occupation_histogram, region_mass)
from .quasipotential import (OptimizerOptions, PRWitness, QuasipotentialResult, ShellResult,
                             chain_zero_action_path, hamiltonian_drift_path, is_equivalent,
                             minimize_action, pr_probe, quasipotential, shell_quasipotential)
from .regions import Annulus, Ball, CircleShell, Region, Sublevel, Union
from .systems import (ClassifyHint, CycleMass, KnownStructure, LabeledRegion,
                      LimitMeasureDescriptor, PointMass, SystemSpec, check_system,
                      gradient_system, hamiltonian_system, identity_diffusion, make_system)

__version__ = "0.1.0"
