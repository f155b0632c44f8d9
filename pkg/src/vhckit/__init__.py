"""vhckit: geometry of virtual holonomic constraints.

Induced connections on constraint manifolds of underactuated mechanical
systems, metrizability and Lagrangian-structure decisions, reconstruction of
reduced metrics and potentials, and simulation of the resulting dynamics.
"""

__version__ = "0.1.0"

from .dual import Dual
from .manifold import Chart, ConnectionCoeffs, Tensor02Field
from .models import (MODEL_BUILDERS, ModelBundle, circle_particle,
                     double_pendulum_cart, get_model, sphere_mass)
from .pipeline import AnalysisResult, analyze
from .vhc import (ConstraintParametrization, InducedConnection,
                  LagrangianControlSystem, check_regularity,
                  constrained_rhs, induced_connection, psi_functions,
                  stabilizing_feedback)

__all__ = [
    "Dual", "Chart", "ConnectionCoeffs", "Tensor02Field",
    "ModelBundle", "MODEL_BUILDERS", "get_model",
    "circle_particle", "sphere_mass", "double_pendulum_cart",
    "AnalysisResult", "analyze",
    "LagrangianControlSystem", "ConstraintParametrization",
    "InducedConnection", "check_regularity", "induced_connection",
    "constrained_rhs", "psi_functions", "stabilizing_feedback",
    "__version__",
]
