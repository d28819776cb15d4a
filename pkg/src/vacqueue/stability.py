"""Constructive stability diagnostics for the vacation queue with balking.

The majorant sequence Y_{n+1} = [max(Y_n + V, sigma + D + V) - tau]+ is
monotone in its state, so it admits a backward (Loynes) construction: with
variates re-indexed into the past,

    M_n = [ max_{1<=j<=n} ( sigma_j + D_j + sum_{i<=j} (V_i - tau_i) ) ]+

is nondecreasing in n and its a.s. limit is the minimal stationary workload
of Y.  Two empirical hypotheses back the stability verdict: the drift
E(V - tau) must be negative, and the regeneration event {M stays at 0} must
have positive probability.  The latter is only observable up to a finite
horizon, which OVERestimates the infinite-horizon probability; the verdict
therefore also leans on the distributional fixed-point check (advancing the
horizon-n law one step through the Y update should barely move it).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dist import QueueModel, mean
from .errors import InfiniteDeadline, NoFiniteMean
from .recursion import draw_inputs

__all__ = [
    "Verdict",
    "StabilityReport",
    "loynes_m",
    "loynes_sample",
    "fixed_point_ks",
    "check_stability",
]

_Z95 = 1.959963984540054


class Verdict(str, Enum):
    STABLE_SUFFICIENT = "StableSufficient"
    INCONCLUSIVE = "Inconclusive"
    DRIFT_NONNEGATIVE = "DriftNonnegative"


@dataclass
class StabilityReport:
    """Monte Carlo evidence for the two stability hypotheses.

    p_renovation is the finite-horizon fraction of paths whose backward
    maximum never left 0; it upper-bounds the infinite-horizon event, which
    is why the verdict also requires the drift CI to clear zero.
    """

    mean_drift: float
    drift_ci_halfwidth: float
    p_renovation: float
    p_renovation_ci: float
    loynes_horizon: int
    fixed_point_ks_distance: float
    verdict: Verdict

    def to_dict(self) -> dict:
        return {
            "mean_drift": self.mean_drift,
            "drift_ci_halfwidth": self.drift_ci_halfwidth,
            "p_renovation": self.p_renovation,
            "p_renovation_ci": self.p_renovation_ci,
            "loynes_horizon": self.loynes_horizon,
            "fixed_point_ks_distance": self.fixed_point_ks_distance,
            "verdict": self.verdict.value,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _check_inputs(model: QueueModel) -> None:
    if model.no_balking:
        raise InfiniteDeadline("the backward construction needs a finite deadline law")
    for name in ("arrival", "service", "patience", "vacation"):
        try:
            mean(getattr(model, name))
        except NoFiniteMean as exc:
            raise NoFiniteMean(f"{name} law needs a finite mean: {exc}") from exc


def loynes_m(model: QueueModel, j_max: int, seed: int, path: int = 0) -> np.ndarray:
    """The backward maxima M_0..M_{j_max} for one path.

    Computed incrementally (running sum and running max of the inner terms),
    never by re-evaluating all prefixes.  Nondecreasing, M_0 = 0.
    """
    _check_inputs(model)
    inp = draw_inputs(model, j_max, seed, path=path)
    terms = inp.sigma + inp.deadline + np.cumsum(inp.vacation - inp.tau)
    m = np.empty(j_max + 1, dtype=np.float64)
    m[0] = 0.0
    np.maximum.accumulate(terms, out=terms)
    np.maximum(terms, 0.0, out=terms)
    m[1:] = terms
    return m


@dataclass
class LoynesSample:
    """Per-path backward maxima at a fixed horizon plus their one-step
    advance through the Y update with fresh variates."""

    finals: np.ndarray
    advanced: np.ndarray
    stayed_zero: int
    last_increase: int
    drift_mean: float
    drift_ci: float


def loynes_sample(model: QueueModel, n_paths: int, horizon: int, seed: int) -> LoynesSample:
    """Run n_paths independent backward constructions to `horizon`.

    Each path draws horizon+1 variates per kind; the first `horizon` drive
    the maxima, the last one drives the fixed-point advance.
    """
    _check_inputs(model)
    finals = np.empty(n_paths, dtype=np.float64)
    advanced = np.empty(n_paths, dtype=np.float64)
    stayed_zero = 0
    last_increase = 0
    drift_sum = 0.0
    drift_sq = 0.0
    for p in range(n_paths):
        inp = draw_inputs(model, horizon + 1, seed, path=p)
        diffs = inp.vacation[:horizon] - inp.tau[:horizon]
        drift_sum += float(np.sum(diffs))
        drift_sq += float(np.dot(diffs, diffs))
        terms = inp.sigma[:horizon] + inp.deadline[:horizon] + np.cumsum(diffs)
        running = np.maximum.accumulate(terms)
        m_final = max(float(running[-1]), 0.0)
        finals[p] = m_final
        if m_final == 0.0:
            stayed_zero += 1
        else:
            positive = np.maximum(running, 0.0)
            increases = np.flatnonzero(np.diff(np.concatenate([[0.0], positive])) > 0)
            if increases.size:
                last_increase = max(last_increase, int(increases[-1]) + 1)
        adv = max(max(m_final + inp.vacation[horizon],
                      inp.sigma[horizon] + inp.deadline[horizon] + inp.vacation[horizon])
                  - inp.tau[horizon], 0.0)
        advanced[p] = adv
    n_draws = n_paths * horizon
    drift_mean = drift_sum / n_draws
    drift_var = max(drift_sq / n_draws - drift_mean**2, 0.0)
    drift_ci = _Z95 * math.sqrt(drift_var / n_draws)
    return LoynesSample(finals, advanced, stayed_zero, last_increase, drift_mean, drift_ci)


def _ks_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance between two empirical cdfs."""
    a = np.sort(a)
    b = np.sort(b)
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / len(a)
    fb = np.searchsorted(b, pooled, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


def fixed_point_ks(model: QueueModel, n_paths: int, horizon: int, seed: int) -> float:
    """KS distance between the law of M_horizon and its one-step advance.

    Small distance is the empirical signature of the distributional fixed
    point [max(M + V, sigma + D + V) - tau]+ =d= M.
    """
    sample = loynes_sample(model, n_paths, horizon, seed)
    return _ks_two_sample(sample.finals, sample.advanced)


def check_stability(model: QueueModel, n_paths: int, horizon: int, seed: int) -> StabilityReport:
    """Monte Carlo stability diagnosis.

    StableSufficient requires the drift CI entirely below zero AND the
    renovation CI entirely above zero; a drift CI entirely at or above zero
    gives DriftNonnegative; anything else is Inconclusive.
    """
    if n_paths < 100:
        raise ValueError("check_stability needs n_paths >= 100")
    sample = loynes_sample(model, n_paths, horizon, seed)
    p_ren = sample.stayed_zero / n_paths
    p_ci = _Z95 * math.sqrt(max(p_ren * (1 - p_ren), 0.0) / n_paths)
    ks = _ks_two_sample(sample.finals, sample.advanced)
    if sample.drift_mean - sample.drift_ci >= 0:
        verdict = Verdict.DRIFT_NONNEGATIVE
    elif sample.drift_mean + sample.drift_ci < 0 and p_ren - p_ci > 0:
        verdict = Verdict.STABLE_SUFFICIENT
    else:
        verdict = Verdict.INCONCLUSIVE
    return StabilityReport(
        mean_drift=sample.drift_mean,
        drift_ci_halfwidth=sample.drift_ci,
        p_renovation=p_ren,
        p_renovation_ci=p_ci,
        loynes_horizon=sample.last_increase,
        fixed_point_ks_distance=ks,
        verdict=verdict,
    )
