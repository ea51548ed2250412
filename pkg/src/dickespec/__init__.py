"""Liouvillian spectra of the dissipative Dicke model and their complex
spacing statistics."""
from .eig import SolverError, Spectrum, eigenvalues, read_spectrum, window_filter, write_spectrum
from .liouville import (
    DimensionError,
    LiouvilleBasis,
    LiouvillianMatrix,
    assemble_liouvillian,
    enumerate_liouville_basis,
    project_sector,
    trace_defect,
    verify_weak_symmetry,
)
from .model import (
    HilbertBasis,
    ModelParams,
    build_hamiltonian,
    critical_coupling,
    enumerate_basis,
    op_cavity_annihilation,
    op_spin,
)
from .pipeline import RunConfig, analyze_spectrum, run_convergence, run_point, run_sweep

__version__ = "0.1.0"
