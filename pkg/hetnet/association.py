"""
User association tables, loads, long-term rates and the closed-form rules
(max-SINR, SINR bias, rate bias, minimum path loss, fractional rounding).
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import xlogy

from .conf import get_setting
from .exceptions import InvalidBiasError
from .validators import parse_factor, validate_bias_factors, validate_row_stochastic

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Association:
    """Row-stochastic N_U x N_B table x_ij; integer when every row is one-hot."""
    weights: np.ndarray

    def __post_init__(self):
        weights = validate_row_stochastic(self.weights)
        object.__setattr__(self, 'weights', np.clip(weights, 0.0, 1.0))

    @classmethod
    def from_choices(cls, choices, n_bs):
        """Integer association putting user i on BS ``choices[i]``."""
        choices = np.asarray(choices, dtype=int)
        weights = np.zeros((choices.size, n_bs))
        weights[np.arange(choices.size), choices] = 1.0
        return cls(weights)

    @property
    def n_users(self):
        return self.weights.shape[0]

    @property
    def n_bs(self):
        return self.weights.shape[1]

    @cached_property
    def is_integer(self):
        return bool(np.all((self.weights == 0.0) | (self.weights == 1.0)))

    @cached_property
    def choices(self):
        """Per-user argmax BS, lowest id on ties."""
        return np.argmax(self.weights, axis=1)

    def rows(self):
        """(user_id, bs_id, weight) for every nonzero entry."""
        users, bss = np.nonzero(self.weights)
        for i, j in zip(users, bss):
            yield int(i), int(j), float(self.weights[i, j])


@dataclass(frozen=True, eq=False)
class RateOutcome:
    rates: np.ndarray
    utility: float


@dataclass(frozen=True)
class BiasConfig:
    """Per-tier SINR factors A and rate factors B, linear units."""
    sinr_factors: tuple = (1.0,)
    rate_factors: tuple = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, 'sinr_factors', validate_bias_factors(self.sinr_factors, 'sinr_factors'))
        object.__setattr__(self, 'rate_factors', validate_bias_factors(self.rate_factors, 'rate_factors'))

    @classmethod
    def from_sinr_db(cls, sinr_db, rate_factors=None):
        factors = tuple(10.0 ** (float(db) / 10.0) for db in sinr_db)
        return cls(sinr_factors=factors, rate_factors=rate_factors or (1.0,) * len(factors))

    @classmethod
    def from_config(cls, data):
        """Parse ``{'sinr': [...], 'rate': [...]}``; entries may carry a dB suffix."""
        if not isinstance(data, dict):
            raise InvalidBiasError("Bias config must be an object with 'sinr' and/or 'rate' lists.")
        sinr = [parse_factor(f) for f in data.get('sinr') or ()]
        rate = [parse_factor(f) for f in data.get('rate') or ()]
        n_tiers = max(len(sinr), len(rate))
        if n_tiers == 0:
            raise InvalidBiasError("Bias config lists no factors.")
        return cls(sinr_factors=tuple(sinr) or (1.0,) * n_tiers, rate_factors=tuple(rate) or (1.0,) * n_tiers)

    def normalized(self):
        """Both factor lists scaled so the first (macro) tier is 1."""
        return BiasConfig(
            sinr_factors=tuple(a / self.sinr_factors[0] for a in self.sinr_factors),
            rate_factors=tuple(b / self.rate_factors[0] for b in self.rate_factors),
        )

    @property
    def sinr_db(self):
        return tuple(float(10.0 * np.log10(a)) for a in self.sinr_factors)


def _per_bs(factors, bs_tiers, name):
    factors = np.asarray(factors, dtype=float)
    if bs_tiers.max() >= factors.size:
        raise InvalidBiasError(f"{name} lists {factors.size} tiers but the network has {bs_tiers.max() + 1}.")
    if np.any(factors <= 0):
        raise InvalidBiasError(f"{name} must all be positive.")
    return factors[bs_tiers]


def argmax_association(scores):
    """One-hot association on each row's argmax (lowest id on ties)."""
    scores = np.asarray(scores, dtype=float)
    return Association.from_choices(np.argmax(scores, axis=1), scores.shape[1])


def max_sinr_assoc(links):
    return argmax_association(links.sinr)


def biased_sinr_assoc(links, bias):
    """Each user picks argmax_j A_tier(j) * SINR_ij."""
    return argmax_association(links.sinr * _per_bs(bias.sinr_factors, links.bs_tiers, 'SINR factors')[None, :])


def biased_rate_assoc(links, bias):
    """Each user picks argmax_j B_tier(j) * c_ij."""
    return argmax_association(links.rate * _per_bs(bias.rate_factors, links.bs_tiers, 'Rate factors')[None, :])


def min_path_loss_assoc(links):
    """Each user picks the BS with the largest channel gain."""
    return argmax_association(links.gain)


def loads(assoc):
    """K_j = sum_i x_ij."""
    return assoc.weights.sum(axis=0)


def long_term_rates(assoc, links):
    """
    R_i = sum_j x_ij c_ij / K_j (equal resource split inside each BS) and the
    log utility sum_i ln R_i. Empty BSs contribute nothing.
    """
    load = loads(assoc)
    empty = float(get_setting('EMPTY_LOAD'))
    share = np.divide(assoc.weights, load[None, :], out=np.zeros_like(assoc.weights), where=load[None, :] > empty)
    rates = (share * links.rate).sum(axis=1)
    with np.errstate(divide='ignore'):
        utility = float(np.log(rates).sum())
    return RateOutcome(rates=rates, utility=utility)


def utility(assoc, links):
    return long_term_rates(assoc, links).utility


def fua_objective(weights, links):
    """
    sum_ij x_ij ln(c_ij / K_j), written as sum_ij x_ij ln c_ij - sum_j K_j ln K_j
    with K ln K = 0 at K = 0. Equals the log utility for integer associations.
    """
    weights = np.asarray(getattr(weights, 'weights', weights), dtype=float)
    load = weights.sum(axis=0)
    return float((weights * links.log_rate).sum() - xlogy(load, load).sum())


def fua_gradient(weights, links):
    """d/dx_ij = ln c_ij - ln K_j - 1, with near-empty loads floored."""
    weights = np.asarray(getattr(weights, 'weights', weights), dtype=float)
    load = np.maximum(weights.sum(axis=0), float(get_setting('EMPTY_LOAD')))
    return links.log_rate - np.log(load)[None, :] - 1.0


def round_fractional(assoc):
    """Each user goes to its largest weight, lowest id on ties."""
    if assoc.is_integer:
        return assoc
    return Association.from_choices(assoc.choices, assoc.n_bs)


def greedy_improve(assoc, links, max_passes=10):
    """
    Single-user moves that strictly raise the log utility, applied in user
    order until a pass moves nobody or ``max_passes`` is reached.
    """
    choices = np.array(assoc.choices if assoc.is_integer else round_fractional(assoc).choices)
    load = np.bincount(choices, minlength=links.n_bs).astype(float)
    log_rate = links.log_rate
    moves = 0
    for _ in range(max_passes):
        moved = False
        for i in range(links.n_users):
            current = choices[i]
            # U = sum_i ln c_i,a(i) - sum_j K_j ln K_j, so a move only touches two K ln K terms.
            k_from = load[current]
            leave = xlogy(k_from, k_from) - xlogy(k_from - 1, k_from - 1) - log_rate[i, current]
            join = log_rate[i] - xlogy(load + 1, load + 1) + xlogy(load, load)
            delta = leave + join
            delta[current] = 0.0
            target = int(np.argmax(delta))
            if delta[target] > 1e-12:
                load[current] -= 1
                load[target] += 1
                choices[i] = target
                moved = True
                moves += 1
        if not moved:
            break
    logger.debug("Greedy improvement applied %s moves", moves)
    return Association.from_choices(choices, links.n_bs)
