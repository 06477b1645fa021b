"""squeezelab: a numerical laboratory for generalized coherent and squeezed
states with time-dependent dispersion.

Subsystems:
    grid        uniform grid, wavefunctions, spectral calculus, observables
    hydro       Madelung decomposition and hydrodynamic residuals
    profiles    coherent-state shape families and model-state assembly
    potentials  evaluable external potentials with profile moments
    dynamics    coupled center/dispersion integrator, potential synthesis
    operators   displacement + dynamical squeeze, dense matrix oracle
    sampler     Euler-Maruyama path ensembles of the underlying diffusion
    propagator  split-step Fourier PDE oracle
    reference   closed-form solutions for cross-checks
    checks      invariant sweeps shared by the CLI and the test suite
    scenarios   end-to-end scenario runner behind the CLI
"""

from .grid import (Grid1D, Observables, PhysConstants, WaveFunction,
                   derivative, gaussian_state, harmonic_ground_state,
                   observables, overlap, quadrature, resample, wavefunction)
from .hydro import HydroFields, chain_report, decompose, drifts, hjm_residual
from .profiles import (StateProfile, TrajectoryState, assemble_state,
                       gaussian_profile, profile_by_name,
                       profile_from_ground_state, profile_from_table,
                       sech2_profile, uncertainty_identity)
from .potentials import (HarmonicPotential, PolynomialPotential,
                         TimeHarmonicPotential, free_potential,
                         quench_potential)
from .dynamics import (DispersionLaw, SingularDispersionError,
                       TrajectoryRecord, integrate, kinematic_record,
                       potential_expectations, synthesize_potential,
                       trajectory_rhs)
from .operators import (SqueezeParams, displace, squeeze_closed_form,
                        squeeze_matrix_oracle, squeezed_state)
from .propagator import (PropagatorConfig, compare_with_model,
                         imaginary_time_ground_state, propagate)
from .sampler import EnsembleConfig, PathEnsemble, sample_forward

__version__ = "0.1.0"
