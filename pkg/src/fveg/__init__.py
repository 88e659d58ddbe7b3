"""Well-balanced finite volume evolution Galerkin solver for rotating shallow water flow."""
from .core import (ConfigurationError, ConservedField, DryStateError, Grid, PhysicalParams,
                   compute_dt, to_conserved, to_primitive)
from .fv_scheme import BoundaryCondition, SchemeConfig, evolve, step
from .scenarios import SCENARIOS, discrete_jet_equilibrium, make_scenario

__all__ = ["ConfigurationError", "ConservedField", "DryStateError", "Grid", "PhysicalParams",
           "compute_dt", "to_conserved", "to_primitive", "BoundaryCondition", "SchemeConfig",
           "evolve", "step", "SCENARIOS", "discrete_jet_equilibrium", "make_scenario"]
