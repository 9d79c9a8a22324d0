"""One-sided crossing minimization: exact, heuristic and parameterized solvers."""

from .budget import Budget, BudgetExceeded
from .crossings import (
    CrossingMatrix,
    CrossingsBudget,
    InstanceTooLarge,
    build_crossing_matrix,
    count_crossings_fast,
    count_crossings_naive,
    crossing_number_pair,
    trivial_lower_bound,
)
from .heuristic import HeuristicParams, barycenter_order, local_search, median_order
from .instance import (
    BipartiteInstance,
    Numbering,
    ParseError,
    Solution,
    numbering_width,
    parse_instance,
    parse_solution,
    verify_solution,
    write_solution,
)
from .penalty import build_penalty_graph, merge_solutions, split_by_intervals, split_by_scc
from .reductions import reduce_pipeline
from .solve import IncompleteSolve, RunStats, SolverConfig, exact_solve, heuristic_solve, parameterized_solve

__version__ = "0.1.0"
