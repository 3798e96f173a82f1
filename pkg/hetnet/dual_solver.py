"""
Distributed primal-dual association.

Each round every user best-responds to the BS prices mu_j, then every BS
compares its supply K_j with the demand it received and moves its price by a
subgradient step. The step size follows a target-level rule: aim eps(t) below
the best dual value seen so far, grow eps after an improving round and shrink
it (down to eps_min) otherwise. eps is also capped by the gap between the best
dual and primal values seen. Prices start from the max-SINR loads the BSs
serve when the algorithm is switched on.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .association import Association, argmax_association, fua_objective, loads, max_sinr_assoc
from .conf import get_setting
from .exceptions import InvalidConfigError
from .validators import validate_count, validate_positive_number

logger = logging.getLogger(__name__)

STOP_BALANCED = 'balanced'
STOP_ZERO_GRADIENT = 'zero-gradient'
STOP_PLATEAU = 'plateau'
STOP_MAX_ITER = 'max-iter'


@dataclass(frozen=True)
class StepsizeParams:
    """
    gamma scales the target-level step; eps shrinks by beta on a failed round
    (floored at eps_min) and grows by rho on an improving one. ``None`` for
    eps_init / eps_min means: derive from the instance when the run starts.
    """
    gamma: float = 1.0
    eps_init: float = None
    eps_min: float = None
    beta: float = 0.5
    rho: float = 1.5

    def __post_init__(self):
        if not 0 < self.gamma < 2:
            raise InvalidConfigError(f"gamma must lie in (0, 2), got {self.gamma}.")
        if not 0 < self.beta < 1:
            raise InvalidConfigError(f"beta must lie in (0, 1), got {self.beta}.")
        if not self.rho > 1:
            raise InvalidConfigError(f"rho must be greater than 1, got {self.rho}.")
        if self.eps_min is not None:
            validate_positive_number(self.eps_min, 'eps_min')
        if self.eps_init is not None:
            validate_positive_number(self.eps_init, 'eps_init')
        if self.eps_min is not None and self.eps_init is not None and self.eps_min > self.eps_init:
            raise InvalidConfigError("eps_min must not exceed eps_init.")

    @classmethod
    def from_settings(cls, **overrides):
        conf = get_setting('STEPSIZE')
        params = {'gamma': conf['gamma'], 'beta': conf['beta'], 'rho': conf['rho']}
        params.update(overrides)
        return cls(**params)

    def resolved(self, n_users, initial_dual):
        """Concrete copy with eps_min = 1e-3 N_U and eps_init = max(0.1 |D(mu0)|, 1)."""
        conf = get_setting('STEPSIZE')
        eps_min = self.eps_min if self.eps_min is not None else conf['eps_min_per_user'] * n_users
        eps_init = self.eps_init
        if eps_init is None:
            eps_init = max(conf['eps_init_fraction'] * abs(initial_dual), conf['eps_init_floor'])
        return StepsizeParams(
            gamma=self.gamma,
            eps_init=max(eps_init, eps_min),
            eps_min=eps_min,
            beta=self.beta,
            rho=self.rho,
        )


@dataclass
class DualState:
    mu: np.ndarray
    supply: np.ndarray
    iteration: int = 0
    epsilon: float = 1.0
    best_dual: float = math.inf
    demand: np.ndarray = None
    floored: np.ndarray = None
    best_mu: np.ndarray = None
    best_demand: np.ndarray = None


@dataclass(frozen=True)
class DualRecord:
    iteration: int
    dual_value: float
    stepsize: float
    epsilon: float
    max_imbalance: float
    primal_utility: float
    mu: tuple
    supply: tuple
    demand: tuple
    messages: int


@dataclass
class DualTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def best_dual(self):
        return min(r.dual_value for r in self.records)

    @property
    def messages(self):
        return sum(r.messages for r in self.records)


@dataclass(frozen=True, eq=False)
class DualResult:
    association: Association
    state: DualState
    trace: DualTrace
    converged: bool
    reason: str
    unbalanced: tuple
    reference_value: float = None
    dual_bound_met: bool = None
    balanced_at: int = None

    def __iter__(self):
        # Unpacks as (association, state, trace).
        return iter((self.association, self.state, self.trace))


def user_step(links, mu):
    """Each user requests argmax_j (ln c_ij - mu_j), lowest id on ties."""
    mu = np.asarray(mu, dtype=float)
    return argmax_association(links.log_rate - mu[None, :])


def bs_supply_step(mu_j, n_users):
    """K_j = min(N_U, e^(mu_j - 1))."""
    return np.minimum(float(n_users), np.exp(np.asarray(mu_j, dtype=float) - 1.0))


def bs_price_step(mu_j, delta, K_j, demand_j):
    """mu_j - delta (K_j - demand_j): the price rises when demand exceeds supply."""
    return np.asarray(mu_j, dtype=float) - delta * (np.asarray(K_j, dtype=float) - np.asarray(demand_j, dtype=float))


def dual_objective(links, mu, n_users=None):
    """
    D(mu) = sum_i max_j (ln c_ij - mu_j) + sum_j K*_j (mu_j - ln K*_j),
    K*_j = min(N_U, e^(mu_j - 1)).
    """
    n_users = links.n_users if n_users is None else n_users
    mu = np.asarray(mu, dtype=float)
    user_part = float((links.log_rate - mu[None, :]).max(axis=1).sum())
    supply = bs_supply_step(mu, n_users)
    bs_part = float((supply * (mu - np.log(supply))).sum())
    return user_part + bs_part


def dual_subgradient(links, mu, n_users=None):
    """K*_j(mu) - sum_i x_ij(mu) for the user best responses at mu."""
    n_users = links.n_users if n_users is None else n_users
    demand = user_step(links, mu).weights.sum(axis=0)
    return bs_supply_step(mu, n_users) - demand


def dynamic_stepsize(state, params, grad_norm_sq, D_now):
    """
    gamma (D_now - D_target) / ||g||^2 with D_target = min(best so far, D_now) - eps.

    Returns None for a zero subgradient, which means the current prices are optimal.
    """
    if grad_norm_sq <= 0.0:
        return None
    target = min(state.best_dual, D_now) - state.epsilon
    return params.gamma * (D_now - target) / grad_norm_sq


def epsilon_update(eps, improved, params):
    if improved:
        return params.rho * eps
    return max(params.beta * eps, params.eps_min)


def initial_prices(n_users, n_bs, load=None):
    """
    mu_j = 1 + ln(max(load_j, N_U / N_B)).

    ``load`` is the association already in force when the algorithm starts
    (max-SINR). Without it every BS starts with supply N_U / N_B.
    """
    even = n_users / n_bs
    if load is None:
        return np.full(n_bs, 1.0 + math.log(even))
    return 1.0 + np.log(np.maximum(np.asarray(load, dtype=float), even))


def run_dual(links, params=None, max_iter=None, balance_tol=None, plateau_window=None, reference_value=None):
    """
    Run synchronous rounds until every BS is balanced (|K_j - demand_j| within
    ``balance_tol``), the best dual value stops improving by more than eps_min
    over ``plateau_window`` rounds, or ``max_iter`` rounds.

    ``reference_value`` is an upper bound on the optimal dual value (for
    instance U_FUA plus its Frank-Wolfe gap). When it is given, a balanced
    round only ends the run once D(mu) <= reference + eps_min + 1e-6 N_U as
    well, so a converged run always meets the bound. The result records
    whether the best dual value met it.
    """
    n_users, n_bs = links.n_users, links.n_bs
    params = StepsizeParams.from_settings() if params is None else params
    max_iter = int(get_setting('DUAL_MAX_ITER')) if max_iter is None else validate_count(max_iter, 'max_iter', 1)
    balance_tol = float(get_setting('BALANCE_TOL')) if balance_tol is None else balance_tol
    plateau_window = int(get_setting('PLATEAU_WINDOW')) if plateau_window is None else plateau_window
    mu_floor = 1.0 + math.log(float(get_setting('MU_FLOOR_LOAD')))

    mu = initial_prices(n_users, n_bs, load=loads(max_sinr_assoc(links)))
    params = params.resolved(n_users, dual_objective(links, mu, n_users))
    bound = None if reference_value is None else reference_value + params.eps_min + 1e-6 * n_users
    state = DualState(mu=mu, supply=bs_supply_step(mu, n_users), epsilon=params.eps_init,
                      floored=np.zeros(n_bs, dtype=bool))
    trace = DualTrace()
    best_primal = (-math.inf, None, None)
    plateau_level = math.inf
    best_at = 0
    balanced_at = None
    previous_dual = None
    reason = STOP_MAX_ITER
    messages = n_bs + n_users

    for t in range(max_iter):
        state.iteration = t
        # Users: best response to the broadcast prices.
        assoc = user_step(links, state.mu)
        demand = assoc.weights.sum(axis=0)
        state.demand = demand
        dual_value = dual_objective(links, state.mu, n_users)
        gradient = state.supply - demand
        imbalance = float(np.abs(gradient).max())
        primal = fua_objective(assoc, links)
        if primal > best_primal[0]:
            best_primal = (primal, assoc, demand)

        if dual_value < state.best_dual:
            state.best_dual = dual_value
            state.best_mu = state.mu.copy()
            state.best_demand = demand
        # Plateau: the best value has to drop by eps_min in total, not per round.
        if state.best_dual < plateau_level - params.eps_min:
            plateau_level = state.best_dual
            best_at = t
        if previous_dual is not None:
            state.epsilon = epsilon_update(state.epsilon, dual_value <= previous_dual, params)
        # The target level stays at or above the best primal value, a lower bound on D*.
        state.epsilon = min(state.epsilon, max(state.best_dual - best_primal[0], params.eps_min))
        previous_dual = dual_value

        balanced = imbalance <= balance_tol
        if balanced and balanced_at is None:
            balanced_at = t
        grad_norm_sq = float(gradient @ gradient)
        stepsize = 0.0
        if balanced and (bound is None or dual_value <= bound):
            reason = STOP_BALANCED
        elif grad_norm_sq == 0.0:
            reason = STOP_ZERO_GRADIENT
        elif t - best_at >= plateau_window:
            reason = STOP_PLATEAU
        else:
            stepsize = dynamic_stepsize(state, params, grad_norm_sq, dual_value)

        trace.records.append(DualRecord(
            iteration=t,
            dual_value=dual_value,
            stepsize=stepsize,
            epsilon=state.epsilon,
            max_imbalance=imbalance,
            primal_utility=primal,
            mu=tuple(state.mu.tolist()),
            supply=tuple(state.supply.tolist()),
            demand=tuple(demand.tolist()),
            messages=messages,
        ))
        logger.debug("Dual round %s: D=%.6f U=%.6f imbalance=%.3f step=%.4g eps=%.4g",
                     t, dual_value, primal, imbalance, stepsize, state.epsilon)
        if reason != STOP_MAX_ITER:
            break

        # BSs: price update, then supply from the new price.
        mu = bs_price_step(state.mu, stepsize, state.supply, demand)
        state.floored = mu < mu_floor
        state.mu = np.maximum(mu, mu_floor)
        state.supply = bs_supply_step(state.mu, n_users)

    bound_met = None
    if bound is not None:
        bound_met = bool(trace.best_dual <= bound)
        if not bound_met:
            logger.warning("Best dual value %.6f exceeds reference %.6f by more than %.3g",
                           trace.best_dual, reference_value, bound - reference_value)

    converged = reason in (STOP_BALANCED, STOP_ZERO_GRADIENT) and bound_met is not False
    if converged:
        final_assoc, final_demand = assoc, demand
    else:
        _, final_assoc, final_demand = best_primal
    unbalanced = tuple(int(j) for j in np.nonzero(np.abs(state.supply - final_demand) > balance_tol)[0])

    log = logger.info if converged else logger.warning
    log("Dual algorithm stopped (%s) after %s rounds, first balanced at %s: best D=%.6f, "
        "%s unbalanced BSs, %s messages",
        reason, len(trace), balanced_at, trace.best_dual, len(unbalanced), trace.messages)
    if state.floored is not None and state.floored.any():
        logger.info("%s BS prices hit the lower floor", int(state.floored.sum()))

    return DualResult(
        association=final_assoc,
        state=state,
        trace=trace,
        converged=converged,
        reason=reason,
        unbalanced=unbalanced,
        reference_value=reference_value,
        dual_bound_met=bound_met,
        balanced_at=balanced_at,
    )
