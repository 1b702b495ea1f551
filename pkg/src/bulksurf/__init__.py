"""Structure-preserving bulk-surface phase-field simulator.

Cahn-Hilliard dynamics in a rectangle coupled through a Robin exchange
condition to relaxation/transport dynamics on one dynamic boundary edge, with
four mobility variants (Models A-D), energy-quadratized time stepping and
built-in verification of the discrete conservation and dissipation laws.
"""

from .core import (
    Grid,
    ModelKind,
    PhysicalParams,
    SimState,
    ValidationReport,
    initial_condition,
    validate_params,
)
from .diagnostics import MassTriple, dissipation_residual, limit_behavior_probe, mass_report
from .energy import (
    ChemicalPotentials,
    EnergyParts,
    bulk_potential,
    bulk_potential_deriv,
    chemical_potentials,
    surface_potential,
    surface_potential_deriv,
    total_energy,
    variational_consistency_check,
)
from .integrator import (
    QuadratizationError,
    ReportRecorder,
    SchemeConfig,
    SolverError,
    StepReport,
    Stepper,
    quadratize,
    quadratized_energy,
    run,
    step,
)
from .mobility import (
    OperatorEntry,
    SurfaceMobility,
    antisymmetric_dissipation_check,
    assemble_surface_mobility,
    check_conservation_compat,
    check_onsager_psd,
    operator_matrix,
)

__all__ = [
    "Grid",
    "ModelKind",
    "PhysicalParams",
    "SimState",
    "ValidationReport",
    "initial_condition",
    "validate_params",
    "MassTriple",
    "dissipation_residual",
    "limit_behavior_probe",
    "mass_report",
    "ChemicalPotentials",
    "EnergyParts",
    "bulk_potential",
    "bulk_potential_deriv",
    "chemical_potentials",
    "surface_potential",
    "surface_potential_deriv",
    "total_energy",
    "variational_consistency_check",
    "QuadratizationError",
    "ReportRecorder",
    "SchemeConfig",
    "SolverError",
    "StepReport",
    "Stepper",
    "quadratize",
    "quadratized_energy",
    "run",
    "step",
    "OperatorEntry",
    "SurfaceMobility",
    "antisymmetric_dissipation_check",
    "assemble_surface_mobility",
    "check_conservation_compat",
    "check_onsager_psd",
    "operator_matrix",
]

__version__ = "0.1.0"
