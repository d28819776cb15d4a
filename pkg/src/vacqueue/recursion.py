"""Stochastic recursive sequences for the workload process.

The per-arrival workload W follows a five-branch Lindley-type update.  With
X_n = W_n + sigma_n * 1{W_n < D_n} - tau_n (the workload the next customer
would meet if the server never vacationed):

  B1: W + sigma - tau > 0, W <= D           -> W + sigma - tau
  B2: W - tau > 0,         W >  D           -> W - tau
  B3: W + sigma - tau <= 0, W <= D          -> [W + sigma + V - tau]+
  B4: W - tau <= 0, W > D, N > 0            -> [W + V - tau]+
  B5: W - tau <= 0, W > D, N = 0            -> 0

N counts the customers served since the current service family began (a
family starts at the first arrival after an index with X <= 0).  Two
indicator conventions are deliberately different and kept literally: X uses
the strict comparison W < D, while the branch split and the served counter
use W <= D.  They disagree only on the tie {W = D}, which has probability
zero under continuous laws but matters for deterministic inputs.

Two companion sequences support stability analysis: Z drops the two
past-dependent branches (its leftover case {Z - tau <= 0, Z > D} is mapped
to 0, matching B5), and Y is the monotone majorant
[max(Y + V, sigma + D + V) - tau]+ that admits a backward (Loynes) scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, streams
from .dist import DistSpec, QueueModel, sample_indexed
from .errors import DomainError, InfiniteDeadline

__all__ = [
    "StepInput",
    "PathState",
    "SequenceTrace",
    "x_of",
    "step_w",
    "step_z",
    "step_y",
    "draw_inputs",
    "run_sequences",
    "write_trace_csv",
]

BRANCH_NAMES = {1: "B1", 2: "B2", 3: "B3", 4: "B4", 5: "B5"}


@dataclass(frozen=True)
class StepInput:
    """One customer's driving variates: inter-arrival gap after it, its
    service requirement and deadline, and the vacation attached to its index."""

    tau: float
    sigma: float
    deadline: float
    vacation: float

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError("tau must be strictly positive")
        if self.sigma < 0 or self.deadline < 0 or self.vacation < 0:
            raise DomainError("sigma, deadline and vacation must be nonnegative")
        if math.isinf(self.vacation) or math.isinf(self.sigma):
            raise DomainError("sigma and vacation must be finite")


@dataclass
class PathState:
    """Workload state before arrival n, plus family bookkeeping.

    served_in_family accumulates 1{W_k <= D_k} since family_start;
    prev_x_nonpositive records whether X_{n-1} <= 0, which is what starts a
    new family at n.
    """

    n: int = 0
    w: float = 0.0
    served_in_family: int = 0
    family_start: int = 0
    prev_x_nonpositive: bool = True
    last_branch: str | None = None


def x_of(state: PathState, inp: StepInput) -> float:
    """W + sigma * 1{W < D} - tau with the strict admission indicator."""
    w = state.w
    return w + (inp.sigma if w < inp.deadline else 0.0) - inp.tau


def step_w(state: PathState, inp: StepInput) -> PathState:
    """Advance the workload one arrival through the five-branch update."""
    w = state.w
    if state.prev_x_nonpositive:
        family_start, served = state.n, 0
    else:
        family_start, served = state.family_start, state.served_in_family
    if w <= inp.deadline:
        served += 1
        drained = w + inp.sigma - inp.tau
        if drained > 0.0:
            w_next, branch = drained, 1
        else:
            w_next, branch = max(drained + inp.vacation, 0.0), 3
    else:
        drained = w - inp.tau
        if drained > 0.0:
            w_next, branch = drained, 2
        elif served > 0:
            w_next, branch = max(w + inp.vacation - inp.tau, 0.0), 4
        else:
            w_next, branch = 0.0, 5
    x = x_of(state, inp)
    return PathState(
        n=state.n + 1,
        w=w_next,
        served_in_family=served,
        family_start=family_start,
        prev_x_nonpositive=x <= 0.0,
        last_branch=BRANCH_NAMES[branch],
    )


def step_z(z: float, inp: StepInput) -> float:
    """One step of the past-free comparison sequence Z."""
    if z < 0:
        raise DomainError("z must be nonnegative")
    if z <= inp.deadline:
        drained = z + inp.sigma - inp.tau
        if drained > 0.0:
            return drained
        return max(drained + inp.vacation, 0.0)
    drained = z - inp.tau
    if drained > 0.0:
        return drained
    return 0.0


def step_y(y: float, inp: StepInput) -> float:
    """One step of the monotone majorant Y; needs a finite deadline."""
    if y < 0:
        raise DomainError("y must be nonnegative")
    if math.isinf(inp.deadline):
        raise InfiniteDeadline("Y diverges when the deadline is infinite")
    return max(max(y + inp.vacation, inp.sigma + inp.deadline + inp.vacation) - inp.tau, 0.0)


# ---------------------------------------------------------------------------
# path generation

@dataclass
class InputBundle:
    """Arrays of per-customer variates drawn from the four kind streams."""

    tau: np.ndarray
    sigma: np.ndarray
    deadline: np.ndarray
    vacation: np.ndarray

    def __len__(self):
        return len(self.tau)

    def step_input(self, k: int) -> StepInput:
        return StepInput(float(self.tau[k]), float(self.sigma[k]),
                         float(self.deadline[k]), float(self.vacation[k]))


def draw_inputs(model: QueueModel, n: int, seed: int, path: int = 0, start: int = 0) -> InputBundle:
    """Variates for customers [start, start+n) of one path.

    Every consumer addressing the same (seed, path, start) window sees the
    same numbers, which is what makes independently coded simulators
    comparable pathwise.
    """
    return InputBundle(
        tau=sample_indexed(model.arrival, seed, path, streams.KIND_TAU, start, n),
        sigma=sample_indexed(model.service, seed, path, streams.KIND_SIGMA, start, n),
        deadline=sample_indexed(model.patience, seed, path, streams.KIND_DEADLINE, start, n),
        vacation=sample_indexed(model.vacation, seed, path, streams.KIND_VACATION, start, n),
    )


@dataclass
class SequenceTrace:
    """Per-step record of a joint W/Z/Y run on shared variates.

    w, z, y hold the pre-arrival values for steps 0..n_steps (one longer than
    the input arrays); branch, family_start and served_in_family describe the
    transition taken at each step.
    """

    inputs: InputBundle
    x: np.ndarray
    w: np.ndarray
    z: np.ndarray
    y: np.ndarray | None
    branch: np.ndarray
    family_start: np.ndarray
    served_in_family: np.ndarray

    @property
    def n_steps(self) -> int:
        return len(self.inputs)

    def branch_counts(self) -> dict[str, int]:
        return {BRANCH_NAMES[b]: int(np.sum(self.branch == b)) for b in range(1, 6)}


def run_sequences(model: QueueModel, n_steps: int, seed: int, w0: float = 0.0,
                  y0: float = 0.0, include_y: bool = True, path: int = 0) -> SequenceTrace:
    """Drive W, Z and Y over the same variates from one path's streams.

    Z starts at w0 (it shadows W); the pathwise comparison Z <= Y needs
    w0 <= y0, enforced when include_y is set.  Requesting Y under an
    infinite-deadline patience law raises InfiniteDeadline.
    """
    if w0 < 0 or y0 < 0:
        raise DomainError("initial workloads must be nonnegative")
    if include_y:
        if model.no_balking:
            raise InfiniteDeadline("Y is undefined for infinitely patient customers")
        if w0 > y0:
            raise DomainError("the Z <= Y comparison requires w0 <= y0")
    inputs = draw_inputs(model, n_steps, seed, path=path)
    w, x, branch, fam, served = _kernels.srs_trace(
        float(w0), inputs.tau, inputs.sigma, inputs.deadline, inputs.vacation)
    z = _kernels.z_path(float(w0), inputs.tau, inputs.sigma, inputs.deadline, inputs.vacation)
    y = None
    if include_y:
        y = _kernels.y_path(float(y0), inputs.tau, inputs.sigma, inputs.deadline, inputs.vacation)
    return SequenceTrace(inputs=inputs, x=x, w=w, z=z, y=y, branch=branch,
                         family_start=fam, served_in_family=served)


def write_trace_csv(trace: SequenceTrace, path) -> None:
    """Emit the per-step trace as CSV (17 significant digits)."""
    cols = "n,tau,sigma,deadline,vacation,x,w,z,y,branch,family_start,served_in_family"
    inp = trace.inputs
    with open(path, "w", newline="") as fh:
        fh.write(cols + "\n")
        for k in range(trace.n_steps):
            y_val = "" if trace.y is None else f"{trace.y[k]:.17g}"
            fh.write(
                f"{k},{inp.tau[k]:.17g},{inp.sigma[k]:.17g},{inp.deadline[k]:.17g},"
                f"{inp.vacation[k]:.17g},{trace.x[k]:.17g},{trace.w[k]:.17g},"
                f"{trace.z[k]:.17g},{y_val},{BRANCH_NAMES[int(trace.branch[k])]},"
                f"{trace.family_start[k]},{trace.served_in_family[k]}\n"
            )
