"""Heavy-tail behaviour of the stationary waiting time.

For long-tailed integrated service tails, the waiting-time tail is
asymptotically a constant multiple of the integrated service tail:

    Fbar(x) ~ rho1 * fstar(gamma) * Brbar(x),   x -> inf,

with rho1 the service load and fstar(gamma) the workload transform at the
patience rate.  Everything here verifies finite-x proxies of that statement:
class membership of the integrated tail, the lightness assumptions on the
vacation law, and the ratio of a Monte Carlo waiting-time tail to the
analytic integrated service tail against the solver's constant.

Asymptotic statements are not observable in finite samples; the checks are
trend checks with explicit tolerances, and the hazard-integral regularity
condition is realized through the only computable proxy, the cumulative
hazard Lambda(x) = -log tail(x).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dist import DistSpec, QueueModel, integrated_tail_quantile, integrated_tail_tail
from .dist import tail as dist_tail
from .errors import GridTooShort, InsufficientTailData, PatienceNotExponential
from .simulate import EcdfSummary
from .solve import SolveResult

__all__ = [
    "TailReport",
    "AssumptionRatios",
    "default_quantile_grid",
    "integrated_tail_fn",
    "check_long_tail",
    "verify_assumptions",
    "verify_theorem_ratio",
    "write_ratio_csv",
]

_MIN_USABLE_POINTS = 16
_LONG_TAIL_SHIFTS = (1.0, 5.0)
_LONG_TAIL_RTOL = 0.05


def integrated_tail_fn(d: DistSpec):
    """Callable x -> complementary integrated tail of d."""
    return lambda x: integrated_tail_tail(d, x)


def default_quantile_grid(d: DistSpec, n_points: int = 24,
                          lo_prob: float = 0.9, hi_prob: float = 1.0 - 1e-4) -> np.ndarray:
    """Geometric grid between integrated-tail quantiles of d (0.9 to
    1-1e-4 by default): dense enough to resolve the asymptotic regime
    without starving exceedance counts at the top."""
    lo = integrated_tail_quantile(d, lo_prob)
    hi = integrated_tail_quantile(d, hi_prob)
    if not hi > lo > 0:
        raise GridTooShort("degenerate quantile range for the tail grid")
    return np.geomspace(lo, hi, n_points)


def _tail_callable(source):
    """Normalize a tail source: DistSpec, solver result, Monte Carlo summary,
    callable, or an array aligned with the evaluation grid."""
    if isinstance(source, DistSpec):
        return lambda x: dist_tail(source, x)
    if isinstance(source, SolveResult):
        grid, cdf = source.grid, source.cdf()
        return lambda x: 1.0 - np.interp(x, grid, cdf)
    if isinstance(source, EcdfSummary):
        return source.tail_at
    if callable(source):
        return source
    raise TypeError(f"cannot interpret {type(source).__name__} as a tail")


def check_long_tail(source, grid) -> tuple[bool, float]:
    """Long-tail membership proxy plus the hazard-regularity supremum.

    Membership: tail(x - y)/tail(x) within 5% of 1 for y in {1, 5} at the
    largest grid points.  Regularity: max over the grid of
    Lambda(2x)/Lambda(x) with Lambda = -log tail, which must stay below 2.
    `source` may be a DistSpec, a callable tail, or tail values on `grid`
    (then 2x is evaluated by log-log interpolation within the grid).
    """
    grid = np.asarray(grid, dtype=np.float64)
    from_values = isinstance(source, np.ndarray) or (
        isinstance(source, (list, tuple)) and not callable(source))
    if from_values:
        values = np.asarray(source, dtype=np.float64)
        if values.shape != grid.shape:
            raise GridTooShort("tail values must align with the grid")
        usable = values > 0.0
        if int(np.sum(usable)) < _MIN_USABLE_POINTS:
            raise GridTooShort(f"need at least {_MIN_USABLE_POINTS} positive tail points")
        g, t = grid[usable], values[usable]
        log_t = np.log(t)
        log_g = np.log(np.maximum(g, 1e-300))

        def tail_at(x):
            x = np.asarray(x, dtype=np.float64)
            return np.exp(np.interp(np.log(np.maximum(x, 1e-300)), log_g, log_t))
        eval_max = g[-1] / 2.0
        base = g
    else:
        tail_at = _tail_callable(source)
        vals = np.asarray(tail_at(grid), dtype=np.float64)
        usable = vals > 0.0
        if int(np.sum(usable)) < _MIN_USABLE_POINTS:
            if np.all(vals == 0.0):
                return False, math.inf
            raise GridTooShort(f"need at least {_MIN_USABLE_POINTS} positive tail points")
        base = grid[usable]
        eval_max = base[-1]

    # membership: shift-insensitivity at the two largest grid points
    top = base[-2:] if len(base) >= 2 else base
    member = True
    for y in _LONG_TAIL_SHIFTS:
        xs = top[top > y]
        if xs.size == 0:
            member = False
            break
        num = np.asarray(tail_at(xs - y), dtype=np.float64)
        den = np.asarray(tail_at(xs), dtype=np.float64)
        if np.any(den <= 0.0):
            member = False
            break
        if np.any(np.abs(num / den - 1.0) > _LONG_TAIL_RTOL):
            member = False
            break

    # regularity: cumulative-hazard doubling ratio
    xs = base[base <= eval_max]
    xs = xs[np.asarray(tail_at(xs), dtype=np.float64) < 1.0]
    if xs.size == 0:
        return False, math.inf
    lam_x = -np.log(np.asarray(tail_at(xs), dtype=np.float64))
    t2 = np.asarray(tail_at(2.0 * xs), dtype=np.float64)
    if np.any(t2 <= 0.0):
        return False, math.inf
    lam_2x = -np.log(t2)
    sup = float(np.max(lam_2x / lam_x))
    return bool(member and sup < 2.0), sup


@dataclass
class AssumptionRatios:
    """Maxima and trend flags for the lightness/boundedness ratios on a
    high-quantile grid: vacation-vs-service integrated tails, vacation
    integrated tail vs waiting tail, and waiting tail vs service tail."""

    h1_ratio_max: float
    h2_ratio_max: float
    h3_ratio_max: float
    h1_trend_decreasing: bool
    h2_trend_decreasing: bool
    h3_trend_decreasing: bool
    grid: np.ndarray


def _trend_decreasing(values: np.ndarray) -> bool:
    """Mean of the last third below the mean of the first third."""
    k = max(len(values) // 3, 1)
    return bool(np.mean(values[-k:]) < np.mean(values[:k]))


def verify_assumptions(model: QueueModel, waiting_tail_source, grid=None) -> AssumptionRatios:
    """Observed maxima of the three tail-comparison ratios.

    Limits are not observable, so no pass/fail verdict is attached; the
    trend flags report whether each ratio is falling across the grid.
    """
    if grid is None:
        grid = default_quantile_grid(model.service)
    grid = np.asarray(grid, dtype=np.float64)
    wait_tail = _tail_callable(waiting_tail_source)
    vr = np.asarray(integrated_tail_tail(model.vacation, grid), dtype=np.float64)
    br = np.asarray(integrated_tail_tail(model.service, grid), dtype=np.float64)
    b = np.asarray(dist_tail(model.service, grid), dtype=np.float64)
    fbar = np.maximum(np.asarray(wait_tail(grid), dtype=np.float64), 0.0)
    tiny = 1e-300
    h1 = vr / np.maximum(br, tiny)
    h2 = vr / np.maximum(fbar, tiny)
    h3 = fbar / np.maximum(b, tiny)
    return AssumptionRatios(
        h1_ratio_max=float(np.max(h1)),
        h2_ratio_max=float(np.max(h2)),
        h3_ratio_max=float(np.max(h3)),
        h1_trend_decreasing=_trend_decreasing(h1),
        h2_trend_decreasing=_trend_decreasing(h2),
        h3_trend_decreasing=_trend_decreasing(h3),
        grid=grid,
    )


@dataclass
class TailReport:
    """Monte Carlo waiting-time tail against the integrated service tail.

    ratio_estimates holds Fbar(x)/Brbar(x) on the quantile grid;
    target_constant is rho1 * fstar(gamma) from the solver.  The reverse
    fields report the converse direction (integrated service tail over the
    waiting tail) when the Monte Carlo tail itself looks long-tailed.
    """

    quantile_grid: np.ndarray
    ratio_estimates: np.ndarray
    target_constant: float
    lambda_regularity_sup: float
    h1_ratio_max: float
    h2_ratio_max: float
    h3_ratio_max: float
    in_long_tail_class: bool
    relative_gap: np.ndarray
    gap_trend_decreasing: bool
    exceedances_at_top: int
    f_in_long_tail_class: bool
    reverse_gap_decreasing: bool | None
    mc_tail: np.ndarray
    br_tail: np.ndarray

    def to_dict(self) -> dict:
        return {
            "quantile_grid": [float(v) for v in self.quantile_grid],
            "ratio_estimates": [float(v) for v in self.ratio_estimates],
            "target_constant": self.target_constant,
            "lambda_regularity_sup": self.lambda_regularity_sup,
            "h1_ratio_max": self.h1_ratio_max,
            "h2_ratio_max": self.h2_ratio_max,
            "h3_ratio_max": self.h3_ratio_max,
            "in_long_tail_class": self.in_long_tail_class,
            "relative_gap": [float(v) for v in self.relative_gap],
            "gap_trend_decreasing": self.gap_trend_decreasing,
            "exceedances_at_top": self.exceedances_at_top,
            "f_in_long_tail_class": self.f_in_long_tail_class,
            "reverse_gap_decreasing": self.reverse_gap_decreasing,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def verify_theorem_ratio(model: QueueModel, mc: EcdfSummary, sr: SolveResult,
                         grid=None, min_exceedances: int = 200) -> TailReport:
    """Compare the Monte Carlo waiting tail with its predicted asymptote.

    Needs exponential patience (for the constant), a converged solve, and
    enough exceedances at the top grid point to make the top ratio
    meaningful; raises InsufficientTailData otherwise.
    """
    if sr.gamma is None or sr.gamma <= 0.0:
        raise PatienceNotExponential("the tail constant needs exponential patience")
    if grid is None:
        grid = default_quantile_grid(model.service)
    grid = np.asarray(grid, dtype=np.float64)
    target = sr.rho1 * sr.f_star_gamma

    mc_tail = np.asarray(mc.tail_at(grid), dtype=np.float64)
    exceed_top = int(round(mc_tail[-1] * mc.n_effective))
    if exceed_top < min_exceedances:
        raise InsufficientTailData(
            f"only {exceed_top} exceedances at the top grid point (need {min_exceedances})")
    br_tail = np.asarray(integrated_tail_tail(model.service, grid), dtype=np.float64)
    ratios = mc_tail / np.maximum(br_tail, 1e-300)
    rel_gap = np.abs(ratios - target) / target

    # class membership is a property of the laws, judged on their own
    # canonical quantile grid rather than on the (possibly narrow) ratio grid
    class_grid = default_quantile_grid(model.service)
    in_class, reg_sup = check_long_tail(integrated_tail_fn(model.service), class_grid)
    assumptions = verify_assumptions(model, mc, grid)

    f_in_class = False
    reverse_trend = None
    try:
        f_in_class, _ = check_long_tail(mc.tail_at, class_grid)
    except GridTooShort:
        pass
    if f_in_class:
        reverse = br_tail / np.maximum(mc_tail, 1e-300)
        reverse_trend = _trend_decreasing(np.abs(reverse - 1.0 / target) * target)

    return TailReport(
        quantile_grid=grid,
        ratio_estimates=ratios,
        target_constant=float(target),
        lambda_regularity_sup=reg_sup,
        h1_ratio_max=assumptions.h1_ratio_max,
        h2_ratio_max=assumptions.h2_ratio_max,
        h3_ratio_max=assumptions.h3_ratio_max,
        in_long_tail_class=in_class,
        relative_gap=rel_gap,
        gap_trend_decreasing=_trend_decreasing(rel_gap),
        exceedances_at_top=exceed_top,
        f_in_long_tail_class=f_in_class,
        reverse_gap_decreasing=reverse_trend,
        mc_tail=mc_tail,
        br_tail=br_tail,
    )


def write_ratio_csv(report: TailReport, path) -> None:
    """Plot-ready series: x, waiting tail, integrated service tail, their
    ratio, and the predicted constant."""
    with open(path, "w", newline="") as fh:
        fh.write("x,F_bar,Br_bar,ratio,target\n")
        for x, fb, br, r in zip(report.quantile_grid, report.mc_tail,
                                report.br_tail, report.ratio_estimates):
            fh.write(f"{x:.17g},{fb:.17g},{br:.17g},{r:.17g},{report.target_constant:.17g}\n")
