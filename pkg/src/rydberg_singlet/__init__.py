"""Dissipative preparation of the two-atom Rydberg singlet with Lyapunov control."""
from .control import ControlConfig, control_hamiltonians, control_law, controlled_generator, lyapunov_diagnostics
from .dynamics import (
    DensityMatrix,
    IntegrationError,
    LindbladGenerator,
    Trajectory,
    initial_for,
    integrate,
    integrate_many,
    lindblad_rhs,
    observables,
)
from .model import (
    SystemParams,
    analytic_eigensystem,
    build_collapse_ops,
    build_effective_hamiltonian,
    build_full_hamiltonian,
    coherent_evolve_analytic,
    named_state,
)
from .noise import averaged_dissipator, build_noise_hamiltonians, noisy_controlled_generator, stochastic_trajectory
from .qops import commutator, hermitian_eigen, tensor

__version__ = "0.1.0"
