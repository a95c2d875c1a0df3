"""Client-to-helper assignment and slot scheduling for parallel split learning.

The package minimizes per-batch makespan: an exact time-indexed integer
program, a dual-decomposition heuristic with an optimal preemptive backward
scheduler, greedy and random baselines, schedule validation, and instance
generation from a measured device catalog.
"""

from .model import (Assignment, Completion, DegenerateInstanceError,
                    DeviceProfile, EdgeTiming, IncompleteScheduleError,
                    InfeasibleError, ProblemInstance, Schedule,
                    SchedulingError, SolveOutcome, SolveStats, UnboundedError,
                    completion_from_schedule, compute_fwd_horizon,
                    compute_horizon, count_switches, discretize,
                    instance_from_json, instance_to_json, outcome_from_json,
                    outcome_to_json)
from .validate import (OracleCapError, Violation, brute_force_optimum,
                       validate, violations_to_jsonl)
from .ilp import (IlpModel, VarIndex, add_switching_cost, build_full,
                  build_fwd, build_feasibility_correction,
                  build_w_subproblem, build_y_subproblem, decode_assignment,
                  decode_slots, to_lp_format)
from .solver import (SolverConfig, SolverResult, lp_bound,
                     makespan_release_bound, solve, solve_exact)
from .admm import (AdmmConfig, AdmmError, AdmmResult, AdmmTrace, WPoint,
                   lagrangian_value, run_admm, solve_admm)
from .bwd import (BlockRecord, BwdResult, BwdTask, NotEnoughSlotsError,
                  assemble_outcome, eligible_slots, schedule_bwd,
                  schedule_tasks)
from .heuristics import balanced_greedy, baseline_random_fcfs
from .scenarios import (CatalogError, DEFAULT_CUTS, DEFAULT_SLOT_MS,
                        MODEL_LAYERS, ScenarioSpec, generate,
                        generate_reduction_family, heterogeneity,
                        load_catalog)
from .gantt import render_gantt
from .cli import main as cli_main, recommend_method

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
