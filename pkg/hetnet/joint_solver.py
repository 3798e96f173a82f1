"""
Joint association upper bound: a user may draw resources from several BSs.

Maximizes sum_i ln(sum_j y_ij c_ij) subject to sum_i y_ij <= 1 per BS with
Frank-Wolfe over the product of per-BS capped simplices.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .association import Association, loads, max_sinr_assoc
from .conf import get_setting
from .exceptions import InvariantViolationError
from .fua_solver import FrankWolfeStep, concave_line_search, default_tolerance
from .validators import validate_count, validate_positive_number

logger = logging.getLogger(__name__)

REPAIR_EPSILON = 1e-6
CAPACITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class JointSolution:
    allocation: np.ndarray
    rates: np.ndarray
    utility: float
    gap: float
    iterations: int
    converged: bool
    trace: tuple = ()

    @property
    def n_users(self):
        return self.allocation.shape[0]

    def rows(self):
        """(user_id, bs_id, y, user_rate) for every nonzero share."""
        users, bss = np.nonzero(self.allocation)
        for i, j in zip(users, bss):
            yield int(i), int(j), float(self.allocation[i, j]), float(self.rates[i])


@dataclass(frozen=True)
class BoundReport:
    joint_utility: float
    fua_utility: float
    gap: float
    rate_ratio: float


def joint_rates(allocation, links):
    """R_i = sum_j y_ij c_ij."""
    return (np.asarray(allocation, dtype=float) * links.rate).sum(axis=1)


def joint_objective(allocation, links):
    with np.errstate(divide='ignore'):
        return float(np.log(joint_rates(allocation, links)).sum())


def joint_gradient(allocation, links):
    """d/dy_ij = c_ij / R_i."""
    return links.rate / joint_rates(allocation, links)[:, None]


def allocation_from_association(assoc):
    """y_ij = x_ij / K_j: every BS splits its resource in proportion to the association."""
    load = loads(assoc)
    weights = assoc.weights
    return np.divide(weights, load[None, :], out=np.zeros_like(weights), where=load[None, :] > 0)


def repair_allocation(allocation):
    """Give every user a small share of every BS, then scale overfull BSs back to capacity."""
    allocation = np.asarray(allocation, dtype=float) + REPAIR_EPSILON
    column = allocation.sum(axis=0)
    return allocation / np.maximum(column, 1.0)[None, :]


def solve_joint(links, tol=None, max_iter=None, init=None):
    """
    Joint-association optimum by conditional-gradient ascent.

    ``init`` is an ``Association`` (mapped to y = x / K) or a feasible
    allocation array; the default is the max-SINR association. Starting from
    the FUA solution makes the returned utility at least the FUA value.
    """
    n_users, n_bs = links.n_users, links.n_bs
    tol = default_tolerance(n_users) if tol is None else validate_positive_number(tol, 'tol')
    max_iter = int(get_setting('FUA_MAX_ITER')) if max_iter is None else validate_count(max_iter, 'max_iter')
    if init is None:
        init = max_sinr_assoc(links)
    y = allocation_from_association(init) if isinstance(init, Association) else np.array(init, dtype=float)
    if y.shape != (n_users, n_bs):
        raise ValueError(f"Initial allocation has shape {y.shape}, expected {(n_users, n_bs)}.")
    if np.any(joint_rates(y, links) <= 0):
        logger.info("Initial allocation leaves users without rate; applying the epsilon repair")
        y = repair_allocation(y)

    columns = np.arange(n_bs)
    trace = []
    iteration = 0
    converged = False
    while True:
        rates = joint_rates(y, links)
        value = float(np.log(rates).sum())
        gradient = links.rate / rates[:, None]
        target = np.argmax(gradient, axis=0)
        s = np.zeros_like(y)
        s[target, columns] = 1.0
        delta_rate = joint_rates(s - y, links)
        gap = float((delta_rate / rates).sum())
        if gap <= tol or iteration >= max_iter:
            converged = gap <= tol
            trace.append(FrankWolfeStep(iteration, value, gap, 0.0))
            break

        # Users that no BS targets lose all rate at a full step.
        upper = 1.0 if np.all(rates + delta_rate > 0) else 1.0 - 1e-12

        def slope(a):
            return float((delta_rate / (rates + a * delta_rate)).sum())

        step = concave_line_search(slope, upper=upper)
        trace.append(FrankWolfeStep(iteration, value, gap, step))
        if step == 0.0:
            logger.warning("Joint line search stalled at iteration %s (gap %.3g)", iteration, gap)
            break
        y = (1.0 - step) * y + step * s
        iteration += 1
        logger.debug("Joint iteration %s: utility %.6f gap %.3g step %.3g", iteration, value, gap, step)

    y = np.clip(y, 0.0, 1.0)
    if np.any(y.sum(axis=0) > 1.0 + CAPACITY_TOL):
        raise InvariantViolationError("Joint allocation exceeds a BS budget.")
    rates = joint_rates(y, links)
    solution = JointSolution(
        allocation=y,
        rates=rates,
        utility=float(np.log(rates).sum()),
        gap=max(gap, 0.0),
        iterations=iteration,
        converged=converged,
        trace=tuple(trace),
    )
    log = logger.info if converged else logger.warning
    log("Joint bound %s after %s iterations: utility %.6f, gap %.3g",
        'converged' if converged else 'stopped', iteration, solution.utility, solution.gap)
    return solution


def joint_dominates(joint, fua):
    """
    Check U_joint >= U_FUA up to 1e-6 per user and report the gap.

    Raises:
        InvariantViolationError: When the joint bound falls below the FUA value
    """
    n_users = joint.n_users
    gap = joint.utility - fua.utility
    if gap < -1e-6 * n_users:
        raise InvariantViolationError(
            f"Joint utility {joint.utility:.6f} is below the FUA utility {fua.utility:.6f}."
        )
    return BoundReport(
        joint_utility=joint.utility,
        fua_utility=fua.utility,
        gap=gap,
        rate_ratio=math.exp(gap / n_users),
    )
