"""Single-server queue with single vacations and impatient (balking)
customers: workload recursion and event-driven simulation, constructive
stability diagnostics, a stationary Volterra solver with transform series,
and heavy-tail asymptotics checks, each cross-validating the others.
"""

from .dist import DistSpec, Family, QueueModel
from .errors import (DomainError, GridTooShort, InfiniteDeadline,
                     InsufficientTailData, NoConvergence, NoDensity,
                     NoFiniteMean, NotPoissonArrivals, ParseError,
                     PatienceNotExponential, SeriesDiverges, TailMassTooLarge,
                     UnstableModel, VacqueueError, ValidationError)
from .recursion import (PathState, SequenceTrace, StepInput, draw_inputs,
                        run_sequences, step_w, step_y, step_z, write_trace_csv, x_of)
from .simulate import (EcdfSummary, LossAndAtom, des_oracle,
                       estimate_loss_and_fzero, estimate_stationary)
from .solve import (SolveConfig, SolveResult, f0_from_series, lst_series,
                    solve_exponential_patience, solve_stationary,
                    vacation_empty_probability)
from .stability import (StabilityReport, Verdict, check_stability,
                        fixed_point_ks, loynes_m)
from .tail import (AssumptionRatios, TailReport, check_long_tail,
                   default_quantile_grid, verify_assumptions,
                   verify_theorem_ratio)

__version__ = "0.1.0"
