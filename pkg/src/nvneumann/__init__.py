"""Planar potential theory for the Neumann problem Δu = f, ∂_ν u = g with
data in negative Hölder spaces."""
from .bie import assemble, dirichlet_solve, projected_condition, steklov
from .fieldexpr import ScalarField, from_expr, hadamard_trace, parse
from .geometry import Circle, CurveSpec, Domain, Ellipse, TrigCurve, build_domain, nodes
from .kernels import eval_N, eval_S, grad_S, hessian_S
from .neumann import (IncompatibleDataError, NeumannProblem, NeumannSolution, check_compatibility,
                      dirichlet_energy, solve, uniqueness_certificate)
from .normal_derivative import pair_normal_derivative, v1alpha_representation
from .potentials import PotentialField, dist_volume_potential, infinity_behavior, newtonian
from .quadrature import Discretization, volume_grid
from .schauder import BoundaryDist, DensityRep, HolderSolution, TestField
from .workspace import Workspace

__version__ = "0.1.0"
