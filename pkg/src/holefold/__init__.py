"""Fill a polygon with a piecewise-affine isometry that matches a folded boundary."""
from .geom import GeometryError, PairClass, Tolerance, classify_pair
from .model import (BoundaryMapping, InstanceFormatError, Violation, ViolationKind, is_valid,
                    parse_instance, read_instance, validate, write_instance)
from .solver import (ExistenceViolation, InvalidBoundary, SolutionMesh, SolverError, SolveTrace,
                     find_double_contractive_vertex, find_visible_critical_pair, read_solution,
                     routine1, routine2, solve, triangle_map)
from .verify import OutsideDomain, VerifyReport, evaluate, property_suite, verify
from .gen import FoldStep, generate, load_corpus, random_instance

__version__ = "0.1.0"

__all__ = [
    "BoundaryMapping", "ExistenceViolation", "FoldStep", "GeometryError", "InstanceFormatError",
    "InvalidBoundary", "OutsideDomain", "PairClass", "SolutionMesh", "SolveTrace", "SolverError",
    "Tolerance", "VerifyReport", "Violation", "ViolationKind", "classify_pair", "evaluate",
    "find_double_contractive_vertex", "find_visible_critical_pair", "generate", "is_valid",
    "load_corpus", "parse_instance", "property_suite", "random_instance", "read_instance",
    "read_solution", "routine1", "routine2", "solve", "triangle_map", "validate", "verify",
    "write_instance",
]
