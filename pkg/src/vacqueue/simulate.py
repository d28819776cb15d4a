"""Monte Carlo estimation of the stationary per-arrival workload law.

Two simulators live here on purpose.  The fast path iterates the five-branch
workload recursion (compiled, chunked, streaming tallies).  The oracle path
is an event-driven continuous-time simulation of the physical station:
arrivals, balking against the workload in sight, service to completion, and
a single vacation begun at every instant the admitted work drains to zero;
a server returning to an empty room waits for the next arrival instead of
leaving again.  Both consume identical variates from the counter-based
streams, so their per-arrival workloads must agree pathwise; that agreement
is the semantic check of the recursion.

Workload-at-arrival is recorded as the left limit just before the arrival
instant, with simultaneous events ordered service-completion, vacation-end,
arrival (so a queue that drains exactly at an arrival epoch starts its
vacation first).
"""

from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dist import Family, QueueModel, mean
from .errors import NoFiniteMean, UnstableModel
from .recursion import draw_inputs

__all__ = [
    "EcdfSummary",
    "LossAndAtom",
    "estimate_stationary",
    "des_oracle",
    "estimate_loss_and_fzero",
    "stability_gate",
]

_CHUNK = 2_000_000
_DKW_ALPHA = 0.05


def dkw_halfwidth(n: int, alpha: float = _DKW_ALPHA) -> float:
    """Uniform 95% confidence band half-width for an empirical cdf."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


@dataclass
class EcdfSummary:
    """Estimated stationary law on a grid, with the exact atom at zero, the
    balking fraction, and a distribution-free uniform confidence band."""

    grid: np.ndarray
    cdf: np.ndarray
    atom_at_zero: float
    loss_fraction: float
    n_effective: int
    ci_halfwidth: float
    seed: int | None = None
    burn_in: int | None = None

    def cdf_at(self, x):
        """Step interpolation of the gridded cdf (right-continuous)."""
        x = np.asarray(x, dtype=np.float64)
        idx = np.searchsorted(self.grid, x, side="right") - 1
        out = np.where(idx < 0, 0.0, self.cdf[np.clip(idx, 0, len(self.grid) - 1)])
        out = np.where(x >= self.grid[-1], self.cdf[-1], out)
        return float(out) if out.ndim == 0 else out

    def tail_at(self, x):
        return 1.0 - self.cdf_at(x)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("grid,cdf\n")
            for g, c in zip(self.grid, self.cdf):
                fh.write(f"{g:.17g},{c:.17g}\n")

    def header_dict(self) -> dict:
        return {
            "atom_at_zero": self.atom_at_zero,
            "loss_fraction": self.loss_fraction,
            "n_effective": self.n_effective,
            "ci_halfwidth": self.ci_halfwidth,
            "seed": self.seed,
            "burn_in": self.burn_in,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.header_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass
class LossAndAtom:
    """Balking fraction and empty-system probability with normal CIs, plus a
    Monte Carlo estimate of E[exp(-gamma W)] under exponential patience."""

    loss_fraction: float
    loss_ci_halfwidth: float
    atom_at_zero: float
    atom_ci_halfwidth: float
    f_star_gamma: float | None
    f_star_ci_halfwidth: float | None
    n_effective: int


def default_burn_in(n_customers: int) -> int:
    """10% of the run, at least 1e4, always below the run length."""
    return min(max(n_customers // 10, 10_000), n_customers - 1)


def stability_gate(model: QueueModel) -> None:
    """Cheap analytic precondition check; raises UnstableModel.

    With balking, the sufficient-direction drift condition E(V - tau) < 0 is
    required.  Without balking the vacation majorant does not apply, so the
    classical utilization condition E(sigma) < E(tau) is used instead.  This
    is a guardrail, not a verdict; see vacqueue.stability for diagnostics.
    """
    try:
        e_tau = mean(model.arrival)
        e_sigma = mean(model.service)
        e_vac = mean(model.vacation)
    except NoFiniteMean as exc:
        raise UnstableModel(f"stability gate needs finite input means: {exc}") from exc
    if model.no_balking:
        if e_sigma >= e_tau:
            raise UnstableModel(
                f"no-balking load E(sigma)={e_sigma:.4g} >= E(tau)={e_tau:.4g}")
    elif e_vac - e_tau >= 0:
        raise UnstableModel(
            f"drift E(V - tau) = {e_vac - e_tau:.4g} is nonnegative")


def _iter_chunks(model: QueueModel, n: int, seed: int, w0: float, path: int,
                 gamma: float, collect_from: int, chunk: int):
    """Yield (start, w_array, tallies) over the path, restarting tallies at
    collect_from (the burn-in boundary never splits a tally)."""
    w = float(w0)
    prev_x = True
    served = 0
    start = 0
    while start < n:
        count = min(chunk, n - start)
        if start < collect_from < start + count:
            count = collect_from - start
        inputs = draw_inputs(model, count, seed, path=path, start=start)
        collect = start >= collect_from
        w_out, w, prev_x, served, n_zero, n_loss, s1, s2 = _kernels.srs_chunk(
            w, prev_x, served, inputs.tau, inputs.sigma, inputs.deadline,
            inputs.vacation, gamma, collect)
        yield start, w_out, (n_zero, n_loss, s1, s2)
        start += count


def estimate_stationary(model: QueueModel, n_customers: int, burn_in: int | None = None,
                        seed: int = 0, w0: float = 0.0, grid_points: int = 4096,
                        force: bool = False, path: int = 0,
                        chunk: int = _CHUNK) -> EcdfSummary:
    """Empirical cdf of the post-burn-in workloads W_n.

    The atom at zero counts exact floating zeros (the recursion produces
    them exactly); the loss fraction counts arrivals with W_n >= D_n.  The
    returned band is the two-sided 95% DKW half-width.  Models failing the
    analytic stability gate raise UnstableModel unless force is set.
    """
    if n_customers <= 0:
        raise ValueError("n_customers must be positive")
    if burn_in is None:
        burn_in = default_burn_in(n_customers)
    if not 0 <= burn_in < n_customers:
        raise ValueError("burn_in must satisfy 0 <= burn_in < n_customers")
    if not force:
        stability_gate(model)
    gamma = 0.0
    n_eff = n_customers - burn_in

    # pass 1: range and tallies
    w_max = 0.0
    n_zero = n_loss = 0
    for start, w_out, (z, l, _, _) in _iter_chunks(model, n_customers, seed, w0,
                                                   path, gamma, burn_in, chunk):
        if start + len(w_out) > burn_in:
            w_max = max(w_max, float(np.max(w_out)))
            n_zero += z
            n_loss += l
    if w_max == 0.0:
        w_max = 1.0
    grid = np.linspace(0.0, w_max, grid_points)

    # pass 2: histogram with edges just above the grid points, so the
    # cumulative count at index i is exactly #{W <= grid[i]}
    counts = np.zeros(grid_points, dtype=np.int64)
    edges = np.concatenate([[-np.inf], np.nextafter(grid, np.inf)])
    for start, w_out, _ in _iter_chunks(model, n_customers, seed, w0,
                                        path, gamma, burn_in, chunk):
        if start + len(w_out) > burn_in:
            hist, _ = np.histogram(w_out, bins=edges)
            counts += hist
    cdf_vals = np.cumsum(counts) / n_eff

    return EcdfSummary(
        grid=grid,
        cdf=cdf_vals,
        atom_at_zero=n_zero / n_eff,
        loss_fraction=n_loss / n_eff,
        n_effective=n_eff,
        ci_halfwidth=dkw_halfwidth(n_eff),
        seed=seed,
        burn_in=burn_in,
    )


def estimate_loss_and_fzero(model: QueueModel, n: int, seed: int = 0,
                            burn_in: int | None = None, force: bool = False,
                            path: int = 0, chunk: int = _CHUNK) -> LossAndAtom:
    """Balking fraction, empty-system probability, and (for exponential
    patience) the transform estimate E[exp(-gamma W)], all with 95% CIs."""
    if burn_in is None:
        burn_in = default_burn_in(n)
    if not 0 <= burn_in < n:
        raise ValueError("burn_in must satisfy 0 <= burn_in < n")
    if not force:
        stability_gate(model)
    gamma = (model.patience.params[0]
             if model.patience.family is Family.EXPONENTIAL else 0.0)
    want_fstar = gamma > 0.0
    n_eff = n - burn_in
    n_zero = n_loss = 0
    s1 = s2 = 0.0
    for start, w_out, (z, l, a, b) in _iter_chunks(model, n, seed, 0.0, path,
                                                   gamma if want_fstar else 0.0,
                                                   burn_in, chunk):
        if start + len(w_out) > burn_in:
            n_zero += z
            n_loss += l
            s1 += a
            s2 += b
    p_loss = n_loss / n_eff
    p_zero = n_zero / n_eff
    z95 = 1.959963984540054
    loss_ci = z95 * math.sqrt(max(p_loss * (1 - p_loss), 0.0) / n_eff)
    atom_ci = z95 * math.sqrt(max(p_zero * (1 - p_zero), 0.0) / n_eff)
    f_star = f_ci = None
    if want_fstar:
        f_star = s1 / n_eff
        var = max(s2 / n_eff - f_star**2, 0.0)
        f_ci = z95 * math.sqrt(var / n_eff)
    return LossAndAtom(p_loss, loss_ci, p_zero, atom_ci, f_star, f_ci, n_eff)


# ---------------------------------------------------------------------------
# event-driven oracle

_EV_SERVICE_END = 0
_EV_VACATION_END = 1
_EV_ARRIVAL = 2


def des_oracle(model: QueueModel, n_customers: int, seed: int, path: int = 0) -> np.ndarray:
    """Continuous-time simulation of the physical station; returns the
    workload found by each of the first n_customers arrivals.

    Independent implementation: a heap of timestamped events and explicit
    server states (serving / on vacation / idle), with the workload in sight
    computed from remaining service, remaining vacation and queued work.
    Variates come from the same addressed streams as the recursion path.
    """
    inp = draw_inputs(model, n_customers, seed, path=path)
    arrival_times = np.concatenate([[0.0], np.cumsum(inp.tau[:-1])])

    heap: list[tuple[float, int, int]] = [(0.0, _EV_ARRIVAL, 0)]
    queue: deque[float] = deque()
    queued_work = 0.0
    service_end: float | None = None
    vacation_end: float | None = None
    pending_vacation = 0.0
    w_out = np.empty(n_customers, dtype=np.float64)
    recorded = 0

    while recorded < n_customers:
        t, ev, idx = heapq.heappop(heap)
        if ev == _EV_SERVICE_END:
            if queue:
                s = queue.popleft()
                queued_work -= s
                service_end = t + s
                heapq.heappush(heap, (service_end, _EV_SERVICE_END, 0))
            else:
                service_end = None
                vacation_end = t + pending_vacation
                heapq.heappush(heap, (vacation_end, _EV_VACATION_END, 0))
        elif ev == _EV_VACATION_END:
            vacation_end = None
            if queue:
                s = queue.popleft()
                queued_work -= s
                service_end = t + s
                heapq.heappush(heap, (service_end, _EV_SERVICE_END, 0))
        else:  # arrival of customer idx
            w = queued_work
            if service_end is not None:
                w += service_end - t
            if vacation_end is not None:
                w += vacation_end - t
            w_out[idx] = w
            recorded += 1
            pending_vacation = float(inp.vacation[idx])
            if w < inp.deadline[idx]:
                s = float(inp.sigma[idx])
                if service_end is None and vacation_end is None:
                    service_end = t + s
                    heapq.heappush(heap, (service_end, _EV_SERVICE_END, 0))
                else:
                    queue.append(s)
                    queued_work += s
            if idx + 1 < n_customers:
                heapq.heappush(heap, (float(arrival_times[idx + 1]), _EV_ARRIVAL, idx + 1))
    return w_out
