"""Stationary workload analysis for Poisson arrivals.

The per-arrival (equals time-stationary, by PASTA) workload law of the
queue with balking and single vacations has an atom P(0) at zero and a
density f on (0, inf) solving the second-kind Volterra equation

    f(x) = lam * P(0) * Bbar(x) + lam2 * Vbar(x)
           + lam * int_0^x Gbar(u) Bbar(x - u) f(u) du,

normalized by P(0) + int_0^inf f = 1.  Here Bbar, Vbar, Gbar are the
service, vacation and patience tails and lam2 is the rate of vacation
starts (one vacation begins whenever the admitted work drains to zero).

lam2 convention.  Level-crossing balance gives the exact renewal identity
lam * P(0) = lam2 * q0, with q0 the probability that a vacation ends with
no admitted customer waiting.  Conditioning on the vacation length and
thinning the Poisson stream by the admission probability Gbar(remaining
vacation) yields the closed form

    q0 = E[ exp( -lam * int_0^V Gbar(u) du ) ],

valid for every patience law (the inner integral is E[min(D, v)]); for
exponential patience it is E[exp(-(lam/gamma)(1 - e^{-gamma V}))] and it
reduces to the plain vacation transform V*(lam) = E[exp(-lam V)] when
customers never balk.  Using V*(lam) under balking ignores the customers
who balk during the vacation and leave nothing behind, and overestimates
lam2; both conventions are implemented, with the balk-adjusted one the
default (it is the one that survives Monte Carlo cross-validation).  An
alternative route recomputes lam2 from transform integrals of the
drain-to-empty events; its balked-drain term cannot see whether anyone was
served since the last idle spell, so it overcounts vacation starts by the
all-balk drains.  It is reported as a diagnostic (meta["lambda2_drain_sums"])
but not used.

Transform series.  Substituting the tail transform
T_X(s) = int e^{-sx} Xbar(x) dx = (1 - X*(s))/s into the equation and
unrolling the shift s -> s + gamma produces the ladder series

    phi(theta) = sum_j ( P(0) + lam2 T_V(theta_j) / (lam T_B(theta_j)) )
                 * prod_{m=0..j} lam T_B(theta + m gamma),

with theta_j = theta + j*gamma, for phi(theta) = int e^{-theta x} f(x) dx
(the transform of the density part, so phi(0) = 1 - P(0)).  The product
convention (whether the ladder factor at rank j is included) is selectable
and calibrated against the Volterra solution; letting theta -> 0 and using
the renewal identity turns the series into a closed-form equation for P(0).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import _kernels, simulate
from .dist import DistSpec, Family, QueueModel
from .dist import density as dist_density
from .dist import integrated_tail_tail, lst, mean, quantile
from .dist import tail as dist_tail
from .errors import (DomainError, NoConvergence, NoFiniteMean,
                     NotPoissonArrivals, PatienceNotExponential,
                     SeriesDiverges, TailMassTooLarge)

__all__ = [
    "SolveConfig",
    "SolveResult",
    "solve_stationary",
    "solve_exponential_patience",
    "lst_series",
    "f0_from_series",
    "vacation_empty_probability",
    "calibrate_product_convention",
    "OMEGA2_BINDING",
]

# The ladder shift is bound to the exponential patience rate: it is the only
# rate that enters the integral kernel, and the binding is validated by the
# transform-consistency checks against the Volterra solution.
OMEGA2_BINDING = "patience_rate"

_PILOT_PATH = 977
_TAIL_MASS_LIMIT = 1e-4


@dataclass(frozen=True)
class SolveConfig:
    """Grid and iteration controls for the stationary solver.

    x_max None means: take 1.25x the largest workload seen in a short pilot
    simulation (a stand-in for the extreme quantile of the law).  n_grid is
    the number of grid intervals; the step is h = x_max / n_grid.
    """

    x_max: float | None = None
    n_grid: int = 8192
    fp_tol: float = 1e-8
    fp_max_iter: int = 200
    series_trunc_tol: float = 1e-14

    def __post_init__(self):
        if self.x_max is not None and self.x_max <= 0:
            raise DomainError("x_max must be positive")
        if self.n_grid < 64:
            raise DomainError("n_grid must be at least 64")
        if self.fp_tol <= 0 or self.series_trunc_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.fp_max_iter < 1:
            raise DomainError("fp_max_iter must be at least 1")


@dataclass
class SolveResult:
    """Converged stationary solution on a grid, with diagnostics.

    f_star_gamma is E[exp(-gamma W)] (atom included) for exponential
    patience, 1.0 in the no-balking limit, None otherwise.  rho_sum_ok flags
    rho1 + rho2 < 1.  residual is the sup-norm equation defect measured with
    an independent (Simpson) quadrature, so it tracks discretization error.
    """

    grid: np.ndarray
    f: np.ndarray
    p0: float
    lambda2: float
    rho1: float
    rho2: float
    f_star_gamma: float | None
    residual: float
    normalization_error: float
    gamma: float | None
    iterations: int
    clip_magnitude: float
    residual_grid_constant: float
    rho_sum_ok: bool
    tail_mass_estimate: float
    omega2_binding: str = OMEGA2_BINDING
    product_convention: str = "inclusive"
    lambda2_convention: str = "empty-return-rate"
    meta: dict = field(default_factory=dict)

    def cdf(self) -> np.ndarray:
        """P(0) + cumulative trapezoid of the density along the grid."""
        h = self.grid[1] - self.grid[0]
        csum = np.concatenate([[0.0], np.cumsum(0.5 * h * (self.f[1:] + self.f[:-1]))])
        return np.minimum(self.p0 + csum, 1.0)

    def density_transform(self, s: float) -> float:
        """Trapezoid transform int e^{-s x} f(x) dx of the gridded density."""
        return float(np.trapezoid(np.exp(-s * self.grid) * self.f, self.grid))

    def header_dict(self) -> dict:
        return {
            "p0": self.p0,
            "lambda2": self.lambda2,
            "rho1": self.rho1,
            "rho2": self.rho2,
            "f_star_gamma": self.f_star_gamma,
            "residual": self.residual,
            "normalization_error": self.normalization_error,
            "gamma": self.gamma,
            "iterations": self.iterations,
            "clip_magnitude": self.clip_magnitude,
            "residual_grid_constant": self.residual_grid_constant,
            "rho_sum_ok": self.rho_sum_ok,
            "tail_mass_estimate": self.tail_mass_estimate,
            "omega2_binding": self.omega2_binding,
            "product_convention": self.product_convention,
            "lambda2_convention": self.lambda2_convention,
            "x_max": float(self.grid[-1]),
            "n_grid": int(len(self.grid) - 1),
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("grid,f\n")
            for g, v in zip(self.grid, self.f):
                fh.write(f"{g:.17g},{v:.17g}\n")

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.header_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# helpers

def _require_poisson(model: QueueModel) -> float:
    if model.poisson_rate is None:
        raise NotPoissonArrivals("the stationary solver needs exponential inter-arrival times")
    return float(model.poisson_rate)


def _patience_gamma(model: QueueModel) -> float | None:
    """Exponential patience rate, 0.0 for no balking, None otherwise."""
    if model.no_balking:
        return 0.0
    if model.patience.family is Family.EXPONENTIAL:
        return float(model.patience.params[0])
    return None


def _expect(d: DistSpec, fn) -> float:
    """E[fn(X)] for bounded smooth fn via the density (or directly for a
    point mass), capped at an extreme quantile."""
    if d.family is Family.DETERMINISTIC:
        return float(fn(d.params[0]))
    hi = float(quantile(d, 1.0 - 1e-12))
    lo = d.params[1] if d.family is Family.PARETO else 0.0
    val, _ = integrate.quad(lambda v: fn(v) * dist_density(d, v), lo, hi,
                            epsabs=1e-12, epsrel=1e-10, limit=200)
    return float(val)


def _patience_min_mean(model: QueueModel):
    """Callable v -> int_0^v Gbar(u) du = E[min(D, v)]."""
    patience = model.patience
    if model.no_balking:
        return lambda v: v
    if patience.family is Family.EXPONENTIAL:
        gamma = patience.params[0]
        return lambda v: -math.expm1(-gamma * v) / gamma
    try:
        m = mean(patience)
    except NoFiniteMean:
        return lambda v: integrate.quad(lambda u: dist_tail(patience, u), 0.0, v,
                                        epsabs=1e-12, limit=200)[0]
    from .dist import integrated_tail
    return lambda v: m * integrated_tail(patience, v)


def vacation_empty_probability(model: QueueModel, adjust_for_balking: bool = True) -> float:
    """Probability that a vacation ends with no admitted customer waiting.

    With adjust_for_balking, arrivals during the vacation are thinned by
    their admission probability Gbar(remaining vacation); without it the
    plain no-arrival transform E[exp(-lam V)] is returned (exact only when
    customers never balk).
    """
    lam = _require_poisson(model)
    if not adjust_for_balking or model.no_balking:
        return lst(model.vacation, lam)
    min_mean = _patience_min_mean(model)
    return _expect(model.vacation, lambda v: math.exp(-lam * min_mean(v)))


def _pilot_x_max(model: QueueModel, seed: int = 20_177) -> float:
    n, burn = 200_000, 20_000
    w_max = 0.0
    for start, w_out, _ in simulate._iter_chunks(model, n, seed, 0.0, _PILOT_PATH,
                                                 0.0, burn, 500_000):
        if start + len(w_out) > burn:
            w_max = max(w_max, float(np.max(w_out)))
    scale = mean(model.service) + mean(model.vacation)
    return max(1.25 * w_max, 8.0 * scale, 1.0)


def _tail_mass_estimate(model: QueueModel, lam: float, p0: float, lambda2: float,
                        grid: np.ndarray, f: np.ndarray, gbar: np.ndarray) -> float:
    """First-order mass of the solution beyond the grid: integrate the
    equation over (x_max, inf), dropping the (second-order) contribution of
    f itself beyond the grid."""
    x_max = grid[-1]
    beta = mean(model.service)
    theta_v = mean(model.vacation)
    br_beyond = beta * float(integrated_tail_tail(model.service, x_max))
    vr_beyond = 0.0
    if theta_v > 0:
        vr_beyond = theta_v * float(integrated_tail_tail(model.vacation, x_max))
    conv = float(np.trapezoid(gbar * f * beta
                              * integrated_tail_tail(model.service, x_max - grid), grid))
    return lam * p0 * br_beyond + lambda2 * vr_beyond + lam * conv


# ---------------------------------------------------------------------------
# the solver

def _solve_impl(model: QueueModel, cfg: SolveConfig) -> SolveResult:
    lam = _require_poisson(model)
    beta = mean(model.service)
    theta_v = mean(model.vacation)
    gamma = _patience_gamma(model)
    if float(dist_tail(model.patience, 0.0)) < 1.0:
        raise DomainError("patience laws with an atom at zero are not supported: "
                          "the admitted-from-empty term assumes P(D > 0) = 1")

    x_max = cfg.x_max if cfg.x_max is not None else _pilot_x_max(model)
    n = cfg.n_grid
    grid = np.linspace(0.0, x_max, n + 1)
    h = x_max / n
    gbar = np.asarray(dist_tail(model.patience, grid), dtype=np.float64)
    bbar = np.asarray(dist_tail(model.service, grid), dtype=np.float64)
    vbar = np.asarray(dist_tail(model.vacation, grid), dtype=np.float64)

    q0 = vacation_empty_probability(model)
    k2 = lam / q0

    p0 = min(max(1.0 - lam * beta, 0.05), 0.95)
    lam2 = k2 * p0
    f_prev = None
    iterations = 0
    converged = False
    f = np.zeros(n + 1)
    for iterations in range(1, cfg.fp_max_iter + 1):
        rhs = lam * p0 * bbar + lam2 * vbar
        f = _kernels.volterra_march(rhs, gbar, bbar, lam, h)
        total = p0 + float(np.trapezoid(f, grid))
        p0_target = p0 / total
        f_scaled = f / total
        lam2_target = k2 * p0_target
        dp = p0_target - p0
        dl = lam2_target - lam2
        df = np.inf if f_prev is None else float(np.max(np.abs(f_scaled - f_prev)))
        f_prev = f_scaled
        p0 += 0.5 * dp
        lam2 += 0.5 * dl
        if max(abs(dp), abs(dl), df) < cfg.fp_tol:
            converged = True
            break
    if not converged:
        raise NoConvergence(iterations)

    rhs = lam * p0 * bbar + lam2 * vbar
    f = _kernels.volterra_march(rhs, gbar, bbar, lam, h)
    clip = max(0.0, -float(np.min(f)))
    f = np.maximum(f, 0.0)

    tail_mass = _tail_mass_estimate(model, lam, p0, lam2, grid, f, gbar)
    if tail_mass > _TAIL_MASS_LIMIT:
        raise TailMassTooLarge(
            f"estimated mass {tail_mass:.3g} beyond x_max={x_max:.6g}; increase x_max")

    residual = float(_kernels.volterra_residual(f, rhs, gbar, bbar, lam, h))
    # analytic trapezoid-error scale from second differences of the integrand
    gf = gbar * f
    if n >= 2:
        d2 = float(np.max(np.abs(gf[2:] - 2.0 * gf[1:-1] + gf[:-2]))) / h**2
    else:  # pragma: no cover
        d2 = 0.0
    est_resid = lam * x_max * h**2 / 12.0 * max(d2, 1e-300)
    grid_constant = max(1.0, 4.0 * est_resid / (10.0 * cfg.fp_tol))

    norm_err = abs(p0 + float(np.trapezoid(f, grid)) - 1.0)
    rho1 = lam * beta
    rho2 = lam2 * theta_v
    if gamma is None:
        f_star = None
    elif gamma == 0.0:
        f_star = 1.0
    else:
        f_star = p0 + float(np.trapezoid(np.exp(-gamma * grid) * f, grid))

    # diagnostic: the drain-transform route to lam2 (overcounts vacation
    # starts by the all-balk drains; reported, never used)
    b_lst = lst(model.service, lam)
    exp_lam = np.exp(-lam * grid)
    drain_sums = (lam * p0 * b_lst
                  + lam * b_lst * float(np.trapezoid(exp_lam * gbar * f, grid))
                  + lam * float(np.trapezoid(exp_lam * (1.0 - gbar) * f, grid)))

    result = SolveResult(
        grid=grid, f=f, p0=p0, lambda2=lam2, rho1=rho1, rho2=rho2,
        f_star_gamma=f_star, residual=residual, normalization_error=norm_err,
        gamma=gamma, iterations=iterations, clip_magnitude=clip,
        residual_grid_constant=grid_constant, rho_sum_ok=(rho1 + rho2 < 1.0),
        tail_mass_estimate=tail_mass,
        meta={"q0": q0, "lambda2_drain_sums": drain_sums},
    )
    if gamma is not None and gamma > 0.0:
        result.product_convention = calibrate_product_convention(
            model, cfg, p0=p0, lambda2=lam2, reference=result)
    return result


def solve_stationary(model: QueueModel, cfg: SolveConfig | None = None) -> SolveResult:
    """Solve the stationary equation for any patience law.

    The vacation-start rate is tied to P(0) through the renewal identity
    lam2 = lam * P(0) / q0, so the damped sweep only has to find the pair
    (P(0), f) consistent with the normalization.
    """
    return _solve_impl(model, cfg or SolveConfig())


def solve_exponential_patience(model: QueueModel, cfg: SolveConfig | None = None) -> SolveResult:
    """Same machinery restricted to exponential patience (kernel e^{-gamma u})."""
    if model.no_balking or model.patience.family is not Family.EXPONENTIAL:
        raise PatienceNotExponential("this entry point needs Exponential patience")
    return _solve_impl(model, cfg or SolveConfig())


# ---------------------------------------------------------------------------
# transform ladder series

def _tail_transform(d: DistSpec, s: float) -> float:
    """int_0^inf e^{-sx} tail(x) dx = (1 - lst(d, s)) / s, with the s -> 0
    limit equal to the mean."""
    if s == 0.0:
        return mean(d)
    return (1.0 - lst(d, s)) / s


def _series_sum(theta: float, lam: float, gamma: float, trunc_tol: float,
                coeff, tb, convention: str, max_terms: int = 100_000) -> float:
    """Sum coeff(theta_j) * prod lam*T_B(theta_m) over the ladder, truncated
    when the running product decays below trunc_tol.  The inclusive
    convention carries the rank-j factor inside term j; exclusive stops at
    rank j-1.  With a zero shift the ladder is geometric and summed in
    closed form."""
    if convention not in ("inclusive", "exclusive"):
        raise DomainError(f"unknown product convention {convention!r}")
    inclusive = convention == "inclusive"
    if gamma == 0.0:
        b = lam * tb(theta)
        if b >= 1.0:
            raise SeriesDiverges(
                "ladder factor lam*T_B >= 1: the geometric ladder does not decay")
        c = coeff(theta)
        return c * b / (1.0 - b) if inclusive else c / (1.0 - b)
    total = 0.0
    prod = 1.0
    for j in range(max_terms):
        s_j = theta + j * gamma
        b_j = lam * tb(s_j)
        term_prod = prod * b_j if inclusive else prod
        total += coeff(s_j) * term_prod
        prod *= b_j
        if prod < trunc_tol:
            return total
        if not math.isfinite(prod) or prod > 1e300:
            break
    raise SeriesDiverges(
        "ladder product failed to decay (service load too high for the series)")


def _series_context(model: QueueModel, cfg: SolveConfig | None):
    cfg = cfg or SolveConfig()
    lam = _require_poisson(model)
    gamma = _patience_gamma(model)
    if gamma is None:
        raise PatienceNotExponential("the transform series needs exponential or infinite patience")
    tb = lambda s: _tail_transform(model.service, s)
    tv = lambda s: _tail_transform(model.vacation, s)
    return cfg, lam, gamma, tb, tv


def lst_series(model: QueueModel, theta: float, cfg: SolveConfig | None = None, *,
               p0: float | None = None, lambda2: float | None = None,
               convention: str = "inclusive") -> float:
    """Ladder-series value of phi(theta) = int e^{-theta x} f(x) dx.

    This is the transform of the density part alone (no atom), so
    phi(0) = 1 - P(0).  P(0) and the vacation-start rate may be supplied
    from a Volterra solve; otherwise they come from the series' own
    closed-form P(0) and the renewal identity.
    """
    if theta < 0:
        raise DomainError("theta must be nonnegative")
    cfg, lam, gamma, tb, tv = _series_context(model, cfg)
    if p0 is None:
        p0 = f0_from_series(model, cfg, convention=convention)
    if lambda2 is None:
        lambda2 = lam * p0 / vacation_empty_probability(model)
    coeff = lambda s: p0 + lambda2 * tv(s) / (lam * tb(s))
    return _series_sum(theta, lam, gamma, cfg.series_trunc_tol, coeff, tb, convention)


def f0_from_series(model: QueueModel, cfg: SolveConfig | None = None, *,
                   convention: str = "inclusive") -> float:
    """Closed-form empty-system probability from the theta -> 0 ladder:
    P(0) = 1 / (1 + S) with S the series evaluated at zero after dividing
    out P(0) through the renewal identity."""
    cfg, lam, gamma, tb, tv = _series_context(model, cfg)
    q0 = vacation_empty_probability(model)
    coeff = lambda s: 1.0 + tv(s) / (q0 * tb(s))
    s_sum = _series_sum(0.0, lam, gamma, cfg.series_trunc_tol, coeff, tb, convention)
    return 1.0 / (1.0 + s_sum)


def calibrate_product_convention(model: QueueModel, cfg: SolveConfig | None = None, *,
                                 p0: float, lambda2: float,
                                 reference: SolveResult, theta: float = 1.0) -> str:
    """Pick the ladder-product convention that matches the numeric transform
    of the Volterra solution at a probe point; recorded in result metadata."""
    target = reference.density_transform(theta)
    best, best_err = "inclusive", math.inf
    for convention in ("inclusive", "exclusive"):
        try:
            val = lst_series(model, theta, cfg, p0=p0, lambda2=lambda2,
                             convention=convention)
        except SeriesDiverges:  # pragma: no cover
            continue
        err = abs(val - target)
        if err < best_err:
            best, best_err = convention, err
    return best
