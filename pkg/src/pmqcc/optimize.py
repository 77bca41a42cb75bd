"""Protocol-parameter optimization at fixed channel parameters.

``optimize_signal`` runs a deterministic coordinate search: an exhaustive
integer grid over the slice count M (all integers, since the analytic
prefactor and misalignment accept odd M) and, per M, a coarse log grid
over the signal intensity followed by golden-section refinement.  The
coarse grid protects the refinement from the zero-rate plateaus that
surround the feasible window.

``optimize_decoys`` maximizes the certified rate lower bound over the
decoy intensity triple-or-more in log space by coordinate descent from a
few fixed starting points; configurations rejected by the estimator as
degenerate count as rate 0 and are never returned as optima.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChannelParams, ProtocolParams
from .decoy import n_cut_for, rate_lower
from .errors import DegenerateGeometryError, ParameterError
from .keyrate import rate_pmqcc, rate_pmqcc_star, rate_reduced

__all__ = ["OptimizationResult", "optimize_signal", "optimize_decoys"]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

OBJECTIVES = ("pmqcc", "pmqcc-star", "reduced")


@dataclass(frozen=True)
class OptimizationResult:
    """Best parameters found, the rate re-evaluated exactly there, and
    the number of objective evaluations.  ``flagged_zero`` marks a search
    that found no positive rate (``best_params`` is then None)."""

    best_params: ProtocolParams | None
    best_rate: float
    evaluations: int
    flagged_zero: bool = False
    trace: tuple | None = None


def _golden_refine(obj, lo: float, hi: float, tol: float):
    """Golden-section maximization on [lo, hi]; returns (x, f(x), evals)."""
    evals = 0
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = obj(c), obj(d)
    evals += 2
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = obj(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = obj(d)
        evals += 1
    x = (a + b) / 2.0
    return x, obj(x), evals + 1


def _maximize_scalar(obj, lo: float, hi: float, tol: float, coarse: int = 40):
    """Coarse geometric bracket followed by golden-section refinement."""
    grid = np.geomspace(lo, hi, coarse)
    vals = [obj(x) for x in grid]
    evals = coarse
    i = int(np.argmax(vals))
    if vals[i] <= 0.0:
        return None, 0.0, evals
    left = grid[max(i - 1, 0)]
    right = grid[min(i + 1, coarse - 1)]
    x, fx, extra = _golden_refine(obj, left, right, tol)
    if vals[i] > fx:
        x, fx = float(grid[i]), vals[i]
    return float(x), float(fx), evals + extra


def optimize_signal(
    ch: ChannelParams,
    n_parties: int,
    objective: str = "pmqcc",
    *,
    ec_efficiency: float = 1.16,
    signal_phase_misalignment: float = 0.0,
    boundaries: tuple = (False, True),
    m_values=range(4, 65),
    mu_bounds: tuple = (1e-3, 1.0),
    mu_tol: float = 1e-4,
    keep_trace: bool = False,
) -> OptimizationResult:
    """Maximize the key rate over (signal intensity, slice count).

    For the starred objective the slice count is irrelevant (prefactor 1,
    misalignment from the signal-mode parameter), so only the intensity
    is searched.
    """
    if objective not in OBJECTIVES:
        raise ParameterError(f"objective must be one of {OBJECTIVES}, got {objective!r}")

    def params(mu: float, m: int) -> ProtocolParams:
        return ProtocolParams(
            n_parties=n_parties,
            signal_intensity=mu,
            slice_count=m,
            ec_efficiency=ec_efficiency,
            signal_phase_misalignment=signal_phase_misalignment,
        )

    def rate_at(mu: float, m: int) -> float:
        pp = params(mu, m)
        if objective == "pmqcc":
            return rate_pmqcc(pp, ch).rate
        if objective == "pmqcc-star":
            return rate_pmqcc_star(pp, ch).rate
        return rate_reduced(pp, ch, boundaries).rate

    evaluations = 0
    trace = [] if keep_trace else None
    best = (0.0, None, None)  # rate, mu, M

    slice_grid = [13] if objective == "pmqcc-star" else list(m_values)
    for m in slice_grid:
        mu, rate, used = _maximize_scalar(
            lambda x: rate_at(x, m), mu_bounds[0], mu_bounds[1], mu_tol
        )
        evaluations += used
        if trace is not None and mu is not None:
            trace.append(((mu, m), rate))
        if mu is not None and rate > best[0]:
            best = (rate, mu, m)

    if best[1] is None:
        return OptimizationResult(
            best_params=None, best_rate=0.0, evaluations=evaluations, flagged_zero=True,
            trace=tuple(trace) if trace is not None else None,
        )
    best_pp = params(best[1], best[2])
    return OptimizationResult(
        best_params=best_pp,
        best_rate=rate_at(best[1], best[2]),
        evaluations=evaluations,
        trace=tuple(trace) if trace is not None else None,
    )


def optimize_decoys(
    ch: ChannelParams,
    n_parties: int,
    signal_intensity: float,
    slice_count: int,
    *,
    ec_efficiency: float = 1.16,
    restarts: int = 3,
    sweeps: int = 25,
    keep_trace: bool = False,
) -> OptimizationResult:
    """Maximize the certified rate lower bound over the decoy intensities
    (ordering constraints enforced, vacuum always appended).

    Log-space coordinate descent with shrinking line searches, restarted
    from fixed seed-derived starting points; deterministic.
    """
    n_decoys = n_cut_for(n_parties) + 1

    def params(decoys) -> ProtocolParams:
        return ProtocolParams(
            n_parties=n_parties,
            signal_intensity=signal_intensity,
            slice_count=slice_count,
            ec_efficiency=ec_efficiency,
            decoy_intensities=tuple(decoys) + (0.0,),
        )

    evaluations = 0

    def objective(log_xs) -> float:
        nonlocal evaluations
        xs = np.exp(log_xs)
        if np.any(xs[:-1] <= xs[1:] * (1.0 + 2e-3)) or xs[0] >= signal_intensity:
            return 0.0
        evaluations += 1
        try:
            return rate_lower(params(xs), ch).rate
        except DegenerateGeometryError:
            return 0.0

    def starting_points():
        mu = signal_intensity
        for r in range(restarts):
            rng = np.random.default_rng(1000 + r)
            top = mu / rng.uniform(2.0, 8.0)
            ratios = rng.uniform(1.3, 3.0, n_decoys - 2)
            xs = [top]
            for q in ratios:
                xs.append(xs[-1] / q)
            xs.append(xs[-1] / rng.uniform(20.0, 400.0))
            yield np.log(np.array(xs[:n_decoys]))

    trace = [] if keep_trace else None
    best_rate, best_xs = 0.0, None
    for start in starting_points():
        log_xs = start.copy()
        current = objective(log_xs)
        step = 0.5
        for _ in range(sweeps):
            improved = False
            for i in range(n_decoys):
                for delta in (step, -step):
                    trial = log_xs.copy()
                    trial[i] += delta
                    val = objective(trial)
                    if val > current:
                        log_xs, current = trial, val
                        improved = True
            if not improved:
                step /= 2.0
                if step < 1e-4:
                    break
        if trace is not None:
            trace.append((tuple(np.exp(log_xs)), current))
        if current > best_rate:
            best_rate, best_xs = current, np.exp(log_xs)

    if best_xs is None:
        return OptimizationResult(
            best_params=None, best_rate=0.0, evaluations=evaluations, flagged_zero=True,
            trace=tuple(trace) if trace is not None else None,
        )
    best_pp = params(best_xs)
    return OptimizationResult(
        best_params=best_pp,
        best_rate=rate_lower(best_pp, ch).rate,
        evaluations=evaluations,
        trace=tuple(trace) if trace is not None else None,
    )
