"""Parametric nonnegative laws and the queue input model.

Families cover the usual service/vacation/patience choices: light tails
(Exponential, Deterministic, Uniform, HyperExponential), stretched or heavy
tails (Weibull, Lognormal, Pareto), and a point mass at infinity that encodes
"infinitely patient customers".  Each law exposes sampling, cdf/tail/density,
mean, the Laplace-Stieltjes transform, the integrated-tail (equilibrium)
distribution, and quantiles.

Conventions:
  * tail(x) is computed analytically and cdf(x) := 1 - tail(x), so the two
    are exact complements.
  * Sampling is inverse-transform from the counter-based uniform streams in
    :mod:`vacqueue.streams`, one uniform per draw.
  * Deterministic(0) is allowed (it encodes "no vacations"); its integrated
    tail is taken as the point mass at zero, the natural limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize, special

from . import streams
from .errors import DomainError, NoDensity, NoFiniteMean

__all__ = [
    "Family",
    "DistSpec",
    "QueueModel",
    "sample",
    "sample_indexed",
    "cdf",
    "tail",
    "density",
    "mean",
    "lst",
    "integrated_tail",
    "integrated_tail_tail",
    "quantile",
]


class Family(str, Enum):
    EXPONENTIAL = "Exponential"
    DETERMINISTIC = "Deterministic"
    UNIFORM = "Uniform"
    PARETO = "Pareto"
    LOGNORMAL = "Lognormal"
    WEIBULL = "Weibull"
    HYPEREXPONENTIAL = "HyperExponential"
    POINT_MASS_AT_INFINITY = "PointMassAtInfinity"


_PARAM_COUNT = {
    Family.EXPONENTIAL: 1,
    Family.DETERMINISTIC: 1,
    Family.UNIFORM: 2,
    Family.PARETO: 2,
    Family.LOGNORMAL: 2,
    Family.WEIBULL: 2,
    Family.POINT_MASS_AT_INFINITY: 0,
}

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class DistSpec:
    """A parametric law on [0, inf), immutable and freely shareable.

    params by family:
      Exponential(rate), Deterministic(value), Uniform(lo, hi),
      Pareto(shape, scale), Lognormal(mu_log, sigma_log),
      Weibull(shape, scale), HyperExponential(w_1..w_k, rate_1..rate_k),
      PointMassAtInfinity().
    """

    family: Family
    params: tuple[float, ...] = ()

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        if fam is Family.HYPEREXPONENTIAL:
            if len(p) < 2 or len(p) % 2 != 0:
                raise DomainError("HyperExponential needs k weights followed by k rates")
            k = len(p) // 2
            w, r = p[:k], p[k:]
            if any(wi < 0 for wi in w):
                raise DomainError("HyperExponential weights must be nonnegative")
            if abs(sum(w) - 1.0) > _WEIGHT_TOL:
                raise DomainError("HyperExponential weights must sum to 1")
            if any(ri <= 0 for ri in r):
                raise DomainError("HyperExponential rates must be strictly positive")
            return
        if len(p) != _PARAM_COUNT[fam]:
            raise DomainError(f"{fam.value} takes {_PARAM_COUNT[fam]} parameters, got {len(p)}")
        if fam is Family.EXPONENTIAL and p[0] <= 0:
            raise DomainError("Exponential rate must be strictly positive")
        if fam is Family.DETERMINISTIC and p[0] < 0:
            raise DomainError("Deterministic value must be nonnegative")
        if fam is Family.UNIFORM and not (0 <= p[0] < p[1]):
            raise DomainError("Uniform needs 0 <= lo < hi")
        if fam is Family.PARETO and (p[0] <= 0 or p[1] <= 0):
            raise DomainError("Pareto shape and scale must be strictly positive")
        if fam is Family.LOGNORMAL and p[1] <= 0:
            raise DomainError("Lognormal sigma_log must be strictly positive")
        if fam is Family.WEIBULL and (p[0] <= 0 or p[1] <= 0):
            raise DomainError("Weibull shape and scale must be strictly positive")

    # -- constructors ------------------------------------------------------

    @classmethod
    def exponential(cls, rate: float) -> "DistSpec":
        return cls(Family.EXPONENTIAL, (rate,))

    @classmethod
    def deterministic(cls, value: float) -> "DistSpec":
        return cls(Family.DETERMINISTIC, (value,))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "DistSpec":
        return cls(Family.UNIFORM, (lo, hi))

    @classmethod
    def pareto(cls, shape: float, scale: float) -> "DistSpec":
        return cls(Family.PARETO, (shape, scale))

    @classmethod
    def lognormal(cls, mu_log: float, sigma_log: float) -> "DistSpec":
        return cls(Family.LOGNORMAL, (mu_log, sigma_log))

    @classmethod
    def weibull(cls, shape: float, scale: float) -> "DistSpec":
        return cls(Family.WEIBULL, (shape, scale))

    @classmethod
    def hyperexponential(cls, weights, rates) -> "DistSpec":
        return cls(Family.HYPEREXPONENTIAL, tuple(weights) + tuple(rates))

    @classmethod
    def point_mass_at_infinity(cls) -> "DistSpec":
        return cls(Family.POINT_MASS_AT_INFINITY, ())

    # -- convenience forwarding -------------------------------------------

    def mean(self) -> float:
        return mean(self)

    def cdf(self, x):
        return cdf(self, x)

    def tail(self, x):
        return tail(self, x)

    def density(self, x):
        return density(self, x)

    def lst(self, s):
        return lst(self, s)

    def integrated_tail(self, x):
        return integrated_tail(self, x)

    def integrated_tail_tail(self, x):
        return integrated_tail_tail(self, x)

    def quantile(self, p):
        return quantile(self, p)

    def _weights_rates(self):
        k = len(self.params) // 2
        return np.asarray(self.params[:k]), np.asarray(self.params[k:])


def _is_inf_point_mass(d: DistSpec) -> bool:
    return d.family is Family.POINT_MASS_AT_INFINITY


# ---------------------------------------------------------------------------
# moments

def mean(d: DistSpec) -> float:
    """First moment; raises NoFiniteMean when it does not exist."""
    f, p = d.family, d.params
    if f is Family.EXPONENTIAL:
        return 1.0 / p[0]
    if f is Family.DETERMINISTIC:
        return p[0]
    if f is Family.UNIFORM:
        return 0.5 * (p[0] + p[1])
    if f is Family.PARETO:
        alpha, xm = p
        if alpha <= 1.0:
            raise NoFiniteMean(f"Pareto with shape {alpha} <= 1 has no finite mean")
        return alpha * xm / (alpha - 1.0)
    if f is Family.LOGNORMAL:
        return math.exp(p[0] + 0.5 * p[1] ** 2)
    if f is Family.WEIBULL:
        k, lam = p
        return lam * math.gamma(1.0 + 1.0 / k)
    if f is Family.HYPEREXPONENTIAL:
        w, r = d._weights_rates()
        return float(np.sum(w / r))
    raise NoFiniteMean("point mass at infinity has no finite mean")


# ---------------------------------------------------------------------------
# cdf / tail / density

def tail(d: DistSpec, x):
    """P(X > x) for x >= 0, vectorized over x."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise DomainError("tail requires x >= 0")
    f, p = d.family, d.params
    if f is Family.EXPONENTIAL:
        out = np.exp(-p[0] * x)
    elif f is Family.DETERMINISTIC:
        out = np.where(x < p[0], 1.0, 0.0)
    elif f is Family.UNIFORM:
        lo, hi = p
        out = np.clip((hi - x) / (hi - lo), 0.0, 1.0)
    elif f is Family.PARETO:
        alpha, xm = p
        with np.errstate(divide="ignore"):
            out = np.where(x < xm, 1.0, (xm / np.maximum(x, xm)) ** alpha)
    elif f is Family.LOGNORMAL:
        mu, sig = p
        out = np.ones_like(x, dtype=np.float64)
        pos = x > 0
        out = np.where(pos, 0.5 * special.erfc((np.log(np.where(pos, x, 1.0)) - mu) / (sig * math.sqrt(2.0))), out)
    elif f is Family.WEIBULL:
        k, lam = p
        out = np.exp(-((x / lam) ** k))
    elif f is Family.HYPEREXPONENTIAL:
        w, r = d._weights_rates()
        out = np.exp(-np.multiply.outer(x, r)) @ w
    elif f is Family.POINT_MASS_AT_INFINITY:
        out = np.ones_like(x, dtype=np.float64)
    else:  # pragma: no cover
        raise DomainError(f"unknown family {f}")
    return float(out) if out.ndim == 0 else out


def cdf(d: DistSpec, x):
    """P(X <= x); exact complement of tail()."""
    t = tail(d, x)
    return 1.0 - t


def density(d: DistSpec, x):
    """Analytic pdf where one exists; NoDensity for point masses."""
    f, p = d.family, d.params
    if f is Family.DETERMINISTIC:
        raise NoDensity("Deterministic law has no density")
    if f is Family.POINT_MASS_AT_INFINITY:
        raise NoDensity("point mass at infinity has no density")
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise DomainError("density requires x >= 0")
    if f is Family.EXPONENTIAL:
        out = p[0] * np.exp(-p[0] * x)
    elif f is Family.UNIFORM:
        lo, hi = p
        out = np.where((x >= lo) & (x <= hi), 1.0 / (hi - lo), 0.0)
    elif f is Family.PARETO:
        alpha, xm = p
        with np.errstate(divide="ignore"):
            out = np.where(x < xm, 0.0, alpha * xm**alpha / np.maximum(x, xm) ** (alpha + 1.0))
    elif f is Family.LOGNORMAL:
        mu, sig = p
        out = np.zeros_like(x, dtype=np.float64)
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        out = np.where(
            pos,
            np.exp(-((np.log(xs) - mu) ** 2) / (2.0 * sig**2)) / (xs * sig * math.sqrt(2.0 * math.pi)),
            out,
        )
    elif f is Family.WEIBULL:
        k, lam = p
        xs = np.maximum(x, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(xs > 0, (k / lam) * (xs / lam) ** (k - 1.0) * np.exp(-((xs / lam) ** k)), 0.0)
        if k >= 1.0:
            out = np.where(xs == 0, (k / lam) if k == 1.0 else 0.0, out)
    else:  # hyperexponential
        w, r = d._weights_rates()
        out = np.exp(-np.multiply.outer(x, r)) @ (w * r)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# quantiles and sampling

def quantile(d: DistSpec, prob):
    """Generalized inverse cdf for prob in [0, 1)."""
    prob = np.asarray(prob, dtype=np.float64)
    if np.any((prob < 0) | (prob >= 1)):
        raise DomainError("quantile requires 0 <= p < 1")
    f, p = d.family, d.params
    if f is Family.EXPONENTIAL:
        out = -np.log1p(-prob) / p[0]
    elif f is Family.DETERMINISTIC:
        out = np.full_like(prob, p[0])
    elif f is Family.UNIFORM:
        out = p[0] + (p[1] - p[0]) * prob
    elif f is Family.PARETO:
        alpha, xm = p
        out = xm * (1.0 - prob) ** (-1.0 / alpha)
    elif f is Family.LOGNORMAL:
        mu, sig = p
        out = np.exp(mu + sig * special.ndtri(prob))
    elif f is Family.WEIBULL:
        k, lam = p
        out = lam * (-np.log1p(-prob)) ** (1.0 / k)
    elif f is Family.HYPEREXPONENTIAL:
        _, r = d._weights_rates()
        hi0 = 10.0 / np.min(r)
        def solve_one(q):
            if q <= 0.0:
                return 0.0
            hi = hi0
            while cdf(d, hi) < q:
                hi *= 2.0
            return optimize.brentq(lambda x: cdf(d, x) - q, 0.0, hi, xtol=1e-14)
        out = np.vectorize(solve_one)(prob).astype(np.float64)
    elif f is Family.POINT_MASS_AT_INFINITY:
        out = np.full_like(prob, np.inf)
    else:  # pragma: no cover
        raise DomainError(f"unknown family {f}")
    return float(out) if out.ndim == 0 else out


def _sample_transform(d: DistSpec, u: np.ndarray) -> np.ndarray:
    """Map uniforms to samples. Equals quantile() except for the
    hyperexponential, which picks a component and reuses the residual."""
    if d.family is Family.HYPEREXPONENTIAL:
        w, r = d._weights_rates()
        edges = np.concatenate([[0.0], np.cumsum(w)])
        edges[-1] = 1.0
        idx = np.clip(np.searchsorted(edges, u, side="right") - 1, 0, len(r) - 1)
        resid = (u - edges[idx]) / np.maximum(w[idx], 1e-300)
        resid = np.clip(resid, 0.0, np.nextafter(1.0, 0.0))
        return -np.log1p(-resid) / r[idx]
    return np.asarray(quantile(d, u), dtype=np.float64)


def sample_indexed(d: DistSpec, seed: int, path: int, kind: int, start: int, count: int) -> np.ndarray:
    """Draws with absolute stream indices [start, start+count)."""
    u = streams.uniforms(seed, path, kind, start, count)
    return _sample_transform(d, u)


def sample(d: DistSpec, stream: streams.RandomStream) -> float:
    """One draw from d, advancing the stream handle.

    PointMassAtInfinity returns the +inf sentinel (legal only as a patience
    value downstream).
    """
    u = stream.next_uniform()
    return float(_sample_transform(d, np.asarray([u]))[0])


# ---------------------------------------------------------------------------
# Laplace-Stieltjes transform

_LST_QUAD_TOL = 1e-10
_LST_CAP_PROB = 1.0 - 1e-9


def lst(d: DistSpec, s) -> float:
    """E[exp(-s X)] for s >= 0.

    Closed forms for Exponential, Deterministic, Uniform, HyperExponential;
    adaptive quadrature (absolute tolerance 1e-10, integration capped at the
    1-1e-9 quantile with the remainder bounded by the tail mass) otherwise.
    """
    s = float(s)
    if s < 0:
        raise DomainError("lst requires s >= 0")
    f, p = d.family, d.params
    if s == 0.0:
        return 1.0
    if f is Family.EXPONENTIAL:
        return p[0] / (p[0] + s)
    if f is Family.DETERMINISTIC:
        return math.exp(-s * p[0])
    if f is Family.UNIFORM:
        lo, hi = p
        width = s * (hi - lo)
        return math.exp(-s * lo) * (-math.expm1(-width)) / width
    if f is Family.HYPEREXPONENTIAL:
        w, r = d._weights_rates()
        return float(np.sum(w * r / (r + s)))
    if f is Family.POINT_MASS_AT_INFINITY:
        return 0.0
    # numeric families: integrate e^{-sx} pdf piecewise between quantile
    # breakpoints (keeps the adaptive rule from losing heavy-tailed mass),
    # capped where the exponential weight is negligible
    lo = p[1] if f is Family.PARETO else 0.0
    cap = float(quantile(d, _LST_CAP_PROB))
    cap = min(cap, lo + 60.0 / s)
    probs = (0.1, 0.5, 0.9, 0.99, 1.0 - 1e-4, 1.0 - 1e-6)
    pts = sorted({lo, cap, *(min(max(float(quantile(d, q)), lo), cap) for q in probs)})
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            total += integrate.quad(lambda x: math.exp(-s * x) * density(d, x),
                                    a, b, epsabs=_LST_QUAD_TOL / 8.0,
                                    epsrel=1e-12, limit=200)[0]
    return min(float(total), 1.0)


# ---------------------------------------------------------------------------
# integrated tail (equilibrium) distribution

def integrated_tail_tail(d: DistSpec, x):
    """Complement of the integrated-tail cdf: 1 - (1/E X) * int_0^x tail(y) dy.

    Closed forms throughout; requires a finite, positive mean.  The special
    case Deterministic(0) is the point mass at zero (its equilibrium law in
    the limit), giving an identically zero integrated-tail tail.
    """
    f, p = d.family, d.params
    if f is Family.DETERMINISTIC and p[0] == 0.0:
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros_like(x)
        return float(out) if out.ndim == 0 else out
    m = mean(d)  # raises NoFiniteMean where appropriate
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise DomainError("integrated_tail requires x >= 0")
    if f is Family.EXPONENTIAL:
        out = np.exp(-p[0] * x)  # memoryless: equilibrium law equals the law itself
    elif f is Family.DETERMINISTIC:
        out = np.clip(1.0 - x / p[0], 0.0, 1.0)
    elif f is Family.UNIFORM:
        lo, hi = p
        below = 1.0 - x / m
        mid_x = np.clip(x, lo, hi)
        mid = 1.0 - (lo + (hi * (mid_x - lo) - 0.5 * (mid_x**2 - lo**2)) / (hi - lo)) / m
        out = np.where(x <= lo, below, np.where(x >= hi, 0.0, mid))
        out = np.clip(out, 0.0, 1.0)
    elif f is Family.PARETO:
        alpha, xm = p
        with np.errstate(divide="ignore"):
            above = (np.maximum(x, xm) / xm) ** (1.0 - alpha) / alpha
        out = np.where(x < xm, 1.0 - x / m, above)
    elif f is Family.WEIBULL:
        k, lam = p
        out = special.gammaincc(1.0 / k, (x / lam) ** k)
    elif f is Family.LOGNORMAL:
        mu, sig = p
        # int_0^x tail = x*tail(x) + m*Phi((ln x - mu - sig^2)/sig)
        out = np.ones_like(x, dtype=np.float64)
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        z = (np.log(xs) - mu - sig**2) / sig
        out = np.where(pos, special.ndtr(-z) - xs * tail(d, np.where(pos, x, 0.0)) / m, out)
        out = np.clip(out, 0.0, 1.0)
    elif f is Family.HYPEREXPONENTIAL:
        w, r = d._weights_rates()
        out = (np.exp(-np.multiply.outer(x, r)) @ (w / r)) / m
    else:  # pragma: no cover
        raise DomainError(f"unknown family {f}")
    return float(out) if out.ndim == 0 else out


def integrated_tail(d: DistSpec, x):
    """Integrated-tail (equilibrium) cdf: (1/E X) * int_0^x tail(y) dy."""
    t = integrated_tail_tail(d, x)
    return 1.0 - t


def integrated_tail_quantile(d: DistSpec, prob: float) -> float:
    """Inverse of the integrated-tail cdf by bracketing and brentq."""
    prob = float(prob)
    if not 0.0 <= prob < 1.0:
        raise DomainError("integrated_tail_quantile requires 0 <= p < 1")
    if prob == 0.0:
        return 0.0
    hi = max(mean(d), 1.0)
    while integrated_tail(d, hi) < prob:
        hi *= 2.0
        if hi > 1e300:  # pragma: no cover
            raise DomainError("integrated-tail quantile bracket overflow")
    return float(optimize.brentq(lambda x: integrated_tail(d, x) - prob, 0.0, hi, xtol=1e-12, rtol=1e-12))


# ---------------------------------------------------------------------------
# queue model

@dataclass(frozen=True)
class QueueModel:
    """Input quadruple of a single-server queue with single vacations and
    impatient customers: inter-arrival, service, patience and vacation laws.

    poisson_rate is derived (and checked) from the arrival law: it is set
    exactly when arrivals are exponential, in which case it equals the rate.
    Patience PointMassAtInfinity encodes "no balking"; vacation
    Deterministic(0) encodes "no vacations".
    """

    arrival: DistSpec
    service: DistSpec
    patience: DistSpec
    vacation: DistSpec
    poisson_rate: float | None = None

    def __post_init__(self):
        for name in ("arrival", "service", "vacation"):
            d = getattr(self, name)
            if _is_inf_point_mass(d):
                raise DomainError(f"{name} law must be a proper distribution")
        if self.arrival.family is Family.DETERMINISTIC and self.arrival.params[0] <= 0:
            raise DomainError("inter-arrival times must be strictly positive")
        if self.arrival.family is Family.UNIFORM and self.arrival.params[0] < 0:
            raise DomainError("inter-arrival times must be strictly positive")
        if self.arrival.family is Family.EXPONENTIAL:
            rate = self.arrival.params[0]
            if self.poisson_rate is not None and not math.isclose(self.poisson_rate, rate, rel_tol=1e-12):
                raise DomainError("poisson_rate must equal the exponential arrival rate")
            object.__setattr__(self, "poisson_rate", rate)
        elif self.poisson_rate is not None:
            raise DomainError("poisson_rate is only meaningful for exponential arrivals")

    @property
    def no_balking(self) -> bool:
        return _is_inf_point_mass(self.patience)

    @property
    def no_vacations(self) -> bool:
        return self.vacation.family is Family.DETERMINISTIC and self.vacation.params[0] == 0.0

    def patience_rate(self) -> float:
        """Rate of exponential patience; 0.0 for infinitely patient customers."""
        if self.no_balking:
            return 0.0
        if self.patience.family is not Family.EXPONENTIAL:
            raise DomainError("patience_rate requires exponential (or infinite) patience")
        return self.patience.params[0]
