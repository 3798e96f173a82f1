"""
Centralized solvers for the fractional user association (FUA) relaxation.

``solve_fua`` runs pairwise conditional-gradient (Frank-Wolfe) ascent over the
product of per-user simplices; its linear oracle is the same per-user argmax
the distributed algorithm uses. ``brute_force_optimal`` enumerates every integer
association and is the exact oracle for small instances.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, xlogy

from .association import (
    Association,
    argmax_association,
    fua_gradient,
    fua_objective,
    max_sinr_assoc,
)
from .conf import get_setting
from .exceptions import ProblemTooLargeError
from .validators import validate_count, validate_positive_number

logger = logging.getLogger(__name__)

# Smallest step at which the slope near 0 is checked.
MIN_STEP = 1e-14


@dataclass(frozen=True)
class FrankWolfeStep:
    iteration: int
    utility: float
    gap: float
    step: float


@dataclass(frozen=True, eq=False)
class FuaSolution:
    association: Association
    utility: float
    gap: float
    iterations: int
    converged: bool
    trace: tuple = ()


@dataclass(frozen=True, eq=False)
class BruteForceSolution:
    association: Association
    utility: float
    n_enumerated: int


@dataclass(frozen=True)
class GapReport:
    fua_utility: float
    integer_utility: float
    gap: float
    rate_ratio: float


def default_tolerance(n_users):
    return float(get_setting('FUA_TOL_PER_USER')) * n_users


def concave_line_search(slope, upper=1.0):
    """
    Exact maximizer on [0, upper] of a concave 1-D function given its derivative.

    Returns ``upper`` when the function still rises there, 0 when it already
    falls at 0, otherwise the root of the (decreasing) derivative.
    """
    if slope(upper) >= 0.0:
        return upper
    if slope(MIN_STEP) <= 0.0:
        return 0.0
    return float(brentq(slope, MIN_STEP, upper, xtol=1e-15, rtol=1e-12))


def fw_linear_oracle(gradient):
    """Full weight on each row's largest gradient entry (lowest id on ties)."""
    return argmax_association(gradient)


def pairwise_transfer(log_ratio, load_to, load_from):
    """
    Weight t maximizing the objective when one user moves t from BS ``from``
    to BS ``to``: the root of ln(c_to / c_from) = ln((K_to + t) / (K_from - t)).

    ``log_ratio`` is ln(c_to / c_from). The result is not clipped to the
    user's own weight.
    """
    return float(expit(log_ratio) * load_from - expit(-log_ratio) * load_to)


def pairwise_sweep(x, log_rate, empty_load):
    """
    One pass over the users in id order, updating ``x`` in place.

    Each user moves weight from its away BS (the active BS with the smallest
    gradient entry) to the BS with the largest entry, by the exact maximizing
    amount or all of its away weight, whichever is smaller. Returns the
    largest weight moved.
    """
    load = x.sum(axis=0)
    log_load = np.log(np.maximum(load, empty_load))
    largest = 0.0
    for i in range(x.shape[0]):
        score = log_rate[i] - log_load
        toward = int(np.argmax(score))
        active = np.flatnonzero(x[i])
        away = int(active[np.argmin(score[active])])
        if away == toward:
            continue
        amount = pairwise_transfer(log_rate[i, toward] - log_rate[i, away], load[toward], load[away])
        if amount <= 0.0:
            continue
        if amount >= x[i, away]:
            amount = x[i, away]
            x[i, away] = 0.0
        else:
            x[i, away] -= amount
        x[i, toward] += amount
        load[toward] += amount
        load[away] = max(load[away] - amount, 0.0)
        pair = [toward, away]
        log_load[pair] = np.log(np.maximum(load[pair], empty_load))
        largest = max(largest, amount)
    return largest


def solve_fua(links, tol=None, max_iter=None, init=None):
    """
    Maximize sum_ij x_ij ln(c_ij / K_j) over row-stochastic x.

    Every iteration measures the Frank-Wolfe gap against the oracle vertex and
    then runs one ``pairwise_sweep``. A pairwise step can empty a user's away
    BS outright, so weight left on a bad BS by the starting point is removed
    in one move instead of decaying geometrically as under plain Frank-Wolfe
    steps.

    Starts from ``init`` (default: the max-SINR association) and stops when the
    gap drops to ``tol`` (default 1e-6 per user) or after ``max_iter``
    sweeps. The returned gap bounds the remaining suboptimality.
    """
    n_users = links.n_users
    tol = default_tolerance(n_users) if tol is None else validate_positive_number(tol, 'tol')
    max_iter = int(get_setting('FUA_MAX_ITER')) if max_iter is None else validate_count(max_iter, 'max_iter')
    x = (max_sinr_assoc(links) if init is None else init).weights.copy()
    log_rate = links.log_rate
    empty_load = float(get_setting('EMPTY_LOAD'))

    trace = []
    iteration = 0
    converged = False
    while True:
        value = fua_objective(x, links)
        gradient = fua_gradient(x, links)
        vertex = fw_linear_oracle(gradient)
        gap = float((gradient * (vertex.weights - x)).sum())
        if gap <= tol:
            converged = True
            trace.append(FrankWolfeStep(iteration, value, gap, 0.0))
            break
        if iteration >= max_iter:
            trace.append(FrankWolfeStep(iteration, value, gap, 0.0))
            break

        moved = pairwise_sweep(x, log_rate, empty_load)
        trace.append(FrankWolfeStep(iteration, value, gap, moved))
        if moved == 0.0:
            logger.warning("FUA sweep moved no weight at iteration %s (gap %.3g)", iteration, gap)
            break
        iteration += 1
        logger.debug("FUA iteration %s: utility %.6f gap %.3g largest move %.3g", iteration, value, gap, moved)

    # Undo rounding drift before the row-sum check.
    x /= x.sum(axis=1, keepdims=True)
    solution = FuaSolution(
        association=Association(x),
        utility=fua_objective(x, links),
        gap=max(gap, 0.0),
        iterations=iteration,
        converged=converged,
        trace=tuple(trace),
    )
    log = logger.info if converged else logger.warning
    log("FUA %s after %s iterations: utility %.6f, gap %.3g (tol %.3g)",
        'converged' if converged else 'stopped', iteration, solution.utility, solution.gap, tol)
    return solution


def brute_force_optimal(links, cap=None):
    """
    Exact integer optimum of sum_i ln(c_i,a(i) / K_a(i)) by full enumeration.

    Assignments are visited in lexicographic order (user 0 most significant)
    and the first maximizer wins.
    """
    n_users, n_bs = links.n_users, links.n_bs
    cap = int(get_setting('ENUMERATION_CAP')) if cap is None else int(cap)
    total = n_bs ** n_users
    if total > cap:
        raise ProblemTooLargeError(
            f"Brute force needs {n_bs}^{n_users} = {total} assignments, above the cap of {cap}."
        )
    log_rate = links.log_rate
    powers = n_bs ** np.arange(n_users - 1, -1, -1, dtype=np.int64)
    users = np.arange(n_users)
    chunk = 1 << 16

    best_utility = -math.inf
    best_code = 0
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (codes[:, None] // powers[None, :]) % n_bs
        counts = np.zeros((codes.size, n_bs))
        for u in users:
            counts[np.arange(codes.size), digits[:, u]] += 1
        values = log_rate[users[None, :], digits].sum(axis=1) - xlogy(counts, counts).sum(axis=1)
        k = int(np.argmax(values))
        if values[k] > best_utility:
            best_utility = float(values[k])
            best_code = int(codes[k])

    choices = (best_code // powers) % n_bs
    return BruteForceSolution(
        association=Association.from_choices(choices, n_bs),
        utility=best_utility,
        n_enumerated=total,
    )


def fua_gap_report(sol, integer, links):
    """Utility gap between the FUA value and an integer association, plus the per-user rate ratio."""
    integer_utility = fua_objective(integer, links)
    gap = sol.utility - integer_utility
    return GapReport(
        fua_utility=sol.utility,
        integer_utility=integer_utility,
        gap=gap,
        rate_ratio=math.exp(gap / links.n_users),
    )
