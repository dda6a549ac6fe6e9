"""Control invariant sets of linear and switched systems with piecewise semi-ellipsoids."""

from .errors import (ComplexityBudgetExceeded, DimensionMismatch, EmptyPolyhedron, Infeasible,
                     InvkitError, NoPieceContains, NotCovering, NumericalFailure, OriginNotContained,
                     OverlappingPieces, SolverError, Unbounded, UnboundedNonCone)
from .kernels import BACKEND
from .partition import ConicPartition, build_partition, facet_cones, orthant_partition, single_piece
from .polyhedra import HPolyhedron, VPolyhedron, polar_polytope
from .pwse import PiecewiseSemiEllipsoid, from_ellipsoid, from_polytope
from .synth import SynthesisProblem, assemble, partition_from_iterate, solve
from .systems import (AlgebraicSystem, LinearControlSystem, SwitchedControlSystem,
                      check_control_invariance, reduce_to_algebraic, viability_kernel, viability_step)

__version__ = "0.1.0"
