"""
Multi-trial comparisons of the association schemes, the reported metrics,
and the bias-factor searches and sweeps.

Trial ``t`` draws its scenario from seed ``seed_base + t``; trials run in
index order and every aggregate is a fold over that order, so a report is a
pure function of (config, seed base).
"""

import itertools
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .association import (
    BiasConfig,
    biased_rate_assoc,
    biased_sinr_assoc,
    fua_objective,
    greedy_improve,
    long_term_rates,
    max_sinr_assoc,
    min_path_loss_assoc,
    round_fractional,
    utility,
)
from .conf import get_setting
from .dual_solver import run_dual
from .exceptions import (
    EmptySampleError,
    InvalidConfigError,
    InvariantViolationError,
    UndefinedRatioError,
)
from .exporters import write_csv, write_json, write_workbook
from .forms import clean_experiment_scalars
from .fua_solver import solve_fua
from .joint_solver import joint_dominates, solve_joint
from .topology import (
    ScenarioConfig,
    compute_link_table,
    generate_scenario,
    linear_to_db,
    three_tier_scenario_config,
)
from .validators import validate_count, validate_positive_number

logger = logging.getLogger(__name__)

MAX_SINR = 'max_sinr'
FUA = 'fua'
FUA_ROUNDED = 'fua_rounded'
DUAL = 'dual'
JOINT = 'joint'
SINR_BIAS = 'sinr_bias'
RATE_BIAS = 'rate_bias'
MIN_PATH_LOSS = 'min_path_loss'

SCHEMES = (MAX_SINR, FUA, FUA_ROUNDED, DUAL, JOINT, SINR_BIAS, RATE_BIAS, MIN_PATH_LOSS)
DEFAULT_SCHEMES = (MAX_SINR, FUA, FUA_ROUNDED, DUAL, JOINT)
BASELINE_SCHEME = MAX_SINR

SWEEP_DENSITY = 'density'
SWEEP_POWER = 'power'
SWEEP_PARAMETERS = {SWEEP_DENSITY: 'count_per_macro', SWEEP_POWER: 'power_dbm'}

DEFAULT_GRID_DB = (0.0, 18.0, 0.5)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=three_tier_scenario_config)
    schemes: tuple = DEFAULT_SCHEMES
    trials: int = 1
    seed_base: int = 0
    fua_tol: float = None
    fua_max_iter: int = None
    dual_max_iter: int = None
    grid_db: tuple = DEFAULT_GRID_DB
    out_dir: str = None
    greedy_rounding: bool = False
    bias: BiasConfig = None

    def __post_init__(self):
        schemes = tuple(self.schemes)
        unknown = [s for s in schemes if s not in SCHEMES]
        if unknown:
            raise InvalidConfigError(f"Unknown schemes {unknown}; choose from {list(SCHEMES)}.")
        if len(set(schemes)) != len(schemes):
            raise InvalidConfigError("Each scheme may be listed only once.")
        object.__setattr__(self, 'schemes', schemes)
        validate_count(self.trials, 'trials', minimum=1)
        validate_count(self.seed_base, 'seed_base')
        if self.fua_tol is not None:
            validate_positive_number(self.fua_tol, 'fua_tol')
        low, high, step = (float(v) for v in self.grid_db)
        validate_positive_number(step, 'bias_grid.db_step')
        if high < low:
            raise InvalidConfigError("bias_grid.db_max must not be below db_min.")
        object.__setattr__(self, 'grid_db', (low, high, step))

    @property
    def grid_values(self):
        """Bias grid in dB: db_min, db_min + step, ... up to db_max."""
        low, high, step = self.grid_db
        count = int(math.floor((high - low) / step + 1e-9)) + 1
        return np.round(low + step * np.arange(count), 10)

    def trial_seed(self, trial):
        return self.seed_base + trial

    def with_scenario(self, scenario):
        return replace(self, scenario=scenario)

    @classmethod
    def from_dict(cls, data, base_dir=None):
        """
        Build an experiment config from its JSON form.

        ``scenario`` may be an inline object or a path (relative to
        ``base_dir``) to a scenario JSON file; when absent the three-tier
        default scenario is used.
        """
        if not isinstance(data, dict):
            raise InvalidConfigError("Experiment config must be a JSON object.")
        scalars = clean_experiment_scalars(data)
        scenario_data = data.get('scenario')
        if isinstance(scenario_data, str):
            scenario = ScenarioConfig.from_dict(_read_json(Path(base_dir or '.') / scenario_data))
        elif scenario_data is not None:
            scenario = ScenarioConfig.from_dict(scenario_data)
        else:
            scenario = three_tier_scenario_config()
        bias = BiasConfig.from_config(data['bias']) if data.get('bias') else None
        grid = (
            DEFAULT_GRID_DB[0] if scalars['grid_db_min'] is None else scalars['grid_db_min'],
            DEFAULT_GRID_DB[1] if scalars['grid_db_max'] is None else scalars['grid_db_max'],
            DEFAULT_GRID_DB[2] if scalars['grid_db_step'] is None else scalars['grid_db_step'],
        )
        return cls(
            scenario=scenario,
            schemes=tuple(data.get('schemes', DEFAULT_SCHEMES)),
            trials=scalars['trials'] or 1,
            seed_base=scalars['seed_base'] or 0,
            fua_tol=scalars['fua_tol'],
            fua_max_iter=scalars['fua_max_iter'],
            dual_max_iter=scalars['dual_max_iter'],
            grid_db=grid,
            out_dir=scalars['out_dir'] or None,
            greedy_rounding=bool(scalars['greedy_rounding']),
            bias=bias,
        )

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_dict(_read_json(path), base_dir=path.parent)

    def to_dict(self):
        data = {
            'scenario': self.scenario.to_dict(),
            'schemes': list(self.schemes),
            'trials': self.trials,
            'seed_base': self.seed_base,
            'fua_tol': self.fua_tol,
            'fua_max_iter': self.fua_max_iter,
            'dual_max_iter': self.dual_max_iter,
            'bias_grid': dict(zip(('db_min', 'db_max', 'db_step'), self.grid_db)),
            'greedy_rounding': self.greedy_rounding,
        }
        if self.bias is not None:
            data['bias'] = {'sinr': list(self.bias.sinr_factors), 'rate': list(self.bias.rate_factors)}
        return data


def _read_json(path):
    try:
        with Path(path).open(encoding='utf-8') as handle:
            return json.load(handle)
    except OSError as exc:
        raise InvalidConfigError(f"Cannot read config file {path}: {exc.strerror}.")
    except json.JSONDecodeError as exc:
        raise InvalidConfigError(f"{path} is not valid JSON: {exc.msg} (line {exc.lineno}).")


# ---------------------------------------------------------------------------
# Report types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SchemeOutcome:
    """One scheme on one trial."""
    scheme: str
    utility: float
    rates: np.ndarray
    tier_loads: np.ndarray
    converged: bool = True


@dataclass(frozen=True, eq=False)
class TrialResult:
    trial: int
    seed: int
    n_users: int
    outcomes: dict
    fua: object = None
    dual: object = None
    joint: object = None
    violations: tuple = ()


@dataclass(frozen=True)
class ConvergenceRow:
    trial: int
    solver: str
    iteration: int
    value: float
    gap: float
    step: float


@dataclass(frozen=True, eq=False)
class SchemeMetrics:
    name: str
    utilities: tuple
    tier_loads: tuple
    rates: np.ndarray
    cdf: np.ndarray
    ratios: dict
    not_converged: int = 0

    @property
    def mean_utility(self):
        return float(np.mean(self.utilities))


@dataclass(frozen=True, eq=False)
class BiasSearchResult:
    bias: BiasConfig
    mean_utility: float
    baseline_utility: float
    fua_gap: float = None
    n_candidates: int = 0


@dataclass(frozen=True, eq=False)
class MetricsReport:
    schemes: tuple
    tier_names: tuple
    trials: int
    seed_base: int
    n_users: tuple
    quantiles: tuple
    ratio_percentiles: tuple
    convergence: tuple = ()
    sinr_bias: BiasSearchResult = None
    rate_bias: BiasConfig = None
    violations: tuple = ()
    dual_iterations: tuple = ()
    dual_messages: tuple = ()
    dual_bound_met: tuple = ()

    def scheme(self, name):
        for metrics in self.schemes:
            if metrics.name == name:
                return metrics
        raise KeyError(name)

    @property
    def scheme_names(self):
        return tuple(m.name for m in self.schemes)

    @property
    def not_converged(self):
        return sum(m.not_converged for m in self.schemes)

    def summary(self):
        """Plain-data digest written as summary.json."""
        bias = {}
        if self.sinr_bias is not None:
            bias['sinr_db'] = list(self.sinr_bias.bias.sinr_db)
            bias['sinr_search_utility'] = self.sinr_bias.mean_utility
            bias['sinr_search_fua_gap'] = self.sinr_bias.fua_gap
        if self.rate_bias is not None:
            bias['rate'] = list(self.rate_bias.rate_factors)
        return {
            'trials': self.trials,
            'seed_base': self.seed_base,
            'n_users': list(self.n_users),
            'tiers': list(self.tier_names),
            'schemes': {
                m.name: {
                    'mean_utility': m.mean_utility,
                    'utilities': list(m.utilities),
                    'tier_loads': list(m.tier_loads),
                    'ratios': {str(p): r for p, r in m.ratios.items()},
                    'not_converged': m.not_converged,
                }
                for m in self.schemes
            },
            'bias': bias,
            'dual': {
                'iterations': list(self.dual_iterations),
                'messages': list(self.dual_messages),
                'bound_met': list(self.dual_bound_met),
            },
            'violations': list(self.violations),
        }


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def rate_cdf(samples, quantiles=None):
    """
    Empirical rate quantiles at ``quantiles`` (percent, default 1..99), linear
    interpolation between order statistics.

    Raises:
        EmptySampleError: If there are no samples
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise EmptySampleError("Cannot build a rate CDF from an empty sample.")
    quantiles = get_setting('QUANTILES') if quantiles is None else quantiles
    return np.percentile(samples, np.asarray(quantiles, dtype=float), method='linear')


def rate_ratio_at_percentile(scheme, baseline, p):
    """
    quantile_p(scheme) / quantile_p(baseline).

    Raises:
        EmptySampleError: If either sample is empty
        UndefinedRatioError: If the baseline quantile is zero
    """
    top = float(rate_cdf(scheme, [p])[0])
    bottom = float(rate_cdf(baseline, [p])[0])
    if bottom == 0.0:
        raise UndefinedRatioError(f"Baseline rate at the {p}th percentile is zero.")
    return top / bottom


def tier_loads(weights, links, n_tiers):
    """Users (or user mass) per tier; sums to N_U."""
    load = np.asarray(weights, dtype=float).sum(axis=0)
    return np.bincount(links.bs_tiers, weights=load, minlength=n_tiers)


def _outcome(scheme, assoc, links, n_tiers, value=None, converged=True):
    outcome = long_term_rates(assoc, links)
    return SchemeOutcome(
        scheme=scheme,
        utility=outcome.utility if value is None else value,
        rates=outcome.rates,
        tier_loads=tier_loads(assoc.weights, links, n_tiers),
        converged=converged,
    )


def _joint_outcome(solution, links, n_tiers):
    # Each user's load is split across BSs by the share of its rate they carry.
    shares = solution.allocation * links.rate / solution.rates[:, None]
    return SchemeOutcome(
        scheme=JOINT,
        utility=solution.utility,
        rates=solution.rates,
        tier_loads=tier_loads(shares, links, n_tiers),
        converged=solution.converged,
    )


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------

def trial_links(config, trial):
    scenario = generate_scenario(config.scenario, seed=config.trial_seed(trial))
    return compute_link_table(scenario)


def _needs_dual(config):
    fixed_rate = config.bias is not None and any(b != 1.0 for b in config.bias.rate_factors)
    return DUAL in config.schemes or (RATE_BIAS in config.schemes and not fixed_rate)


def run_trial(config, trial, links=None):
    """Solve every configured scheme on one trial and check the bound chain."""
    links = trial_links(config, trial) if links is None else links
    n_tiers = config.scenario.n_tiers
    n_users = links.n_users
    slack = 1e-6 * n_users
    schemes = config.schemes
    outcomes = {}
    violations = []

    fua = None
    if {FUA, FUA_ROUNDED, JOINT, DUAL} & set(schemes):
        fua = solve_fua(links, tol=config.fua_tol, max_iter=config.fua_max_iter)

    baseline = max_sinr_assoc(links)
    if MAX_SINR in schemes:
        outcomes[MAX_SINR] = _outcome(MAX_SINR, baseline, links, n_tiers)
    if MIN_PATH_LOSS in schemes:
        outcomes[MIN_PATH_LOSS] = _outcome(MIN_PATH_LOSS, min_path_loss_assoc(links), links, n_tiers)
    if FUA in schemes:
        outcomes[FUA] = _outcome(FUA, fua.association, links, n_tiers, value=fua.utility, converged=fua.converged)
    if FUA_ROUNDED in schemes:
        rounded = round_fractional(fua.association)
        if config.greedy_rounding:
            rounded = greedy_improve(rounded, links)
        outcomes[FUA_ROUNDED] = _outcome(FUA_ROUNDED, rounded, links, n_tiers)

    dual = None
    if _needs_dual(config):
        reference = fua.utility + fua.gap if fua is not None else None
        dual = run_dual(links, max_iter=config.dual_max_iter, reference_value=reference)
        if DUAL in schemes:
            outcomes[DUAL] = _outcome(DUAL, dual.association, links, n_tiers, converged=dual.converged)
        for record in dual.trace:
            if record.dual_value < record.primal_utility - slack:
                violations.append(f"trial {trial}: dual value below primal utility at round {record.iteration}")
                break

    joint = None
    if JOINT in schemes:
        joint = solve_joint(links, tol=config.fua_tol, max_iter=config.fua_max_iter, init=fua.association)
        outcomes[JOINT] = _joint_outcome(joint, links, n_tiers)
        try:
            joint_dominates(joint, fua)
        except InvariantViolationError as exc:
            violations.append(f"trial {trial}: {exc}")

    if fua is not None:
        if FUA_ROUNDED in outcomes and outcomes[FUA_ROUNDED].utility > fua.utility + fua.gap + slack:
            violations.append(f"trial {trial}: rounded utility exceeds the FUA bound")
        if fua_objective(baseline, links) > fua.utility + slack:
            violations.append(f"trial {trial}: max-SINR utility exceeds the FUA utility")

    for message in violations:
        logger.warning("Invariant violation: %s", message)
    return TrialResult(
        trial=trial,
        seed=config.trial_seed(trial),
        n_users=n_users,
        outcomes=outcomes,
        fua=fua,
        dual=dual,
        joint=joint,
        violations=tuple(violations),
    )


def _convergence_rows(result):
    if result.fua is not None:
        for step in result.fua.trace:
            yield ConvergenceRow(result.trial, FUA, step.iteration, step.utility, step.gap, step.step)
    if result.dual is not None:
        for record in result.dual.trace:
            yield ConvergenceRow(result.trial, DUAL, record.iteration, record.dual_value,
                                 record.max_imbalance, record.stepsize)
    if result.joint is not None:
        for step in result.joint.trace:
            yield ConvergenceRow(result.trial, JOINT, step.iteration, step.utility, step.gap, step.step)


def run_comparison(config):
    """
    Run every trial and aggregate per-scheme metrics.

    Bias schemes without fixed factors are tuned on the same trials first:
    rate factors from the pooled dual prices, SINR factors by grid search.
    """
    logger.info("Running %s trials (seed base %s) for schemes %s",
                config.trials, config.seed_base, ', '.join(config.schemes))
    links_list = [trial_links(config, t) for t in range(config.trials)]
    results = [run_trial(config, t, links) for t, links in enumerate(links_list)]
    n_tiers = config.scenario.n_tiers

    rate_bias = None
    if RATE_BIAS in config.schemes:
        if config.bias is not None and any(b != 1.0 for b in config.bias.rate_factors):
            rate_bias = config.bias
        else:
            rate_bias = rate_bias_from_duals([r.dual for r in results], links_list, n_tiers)
        for result, links in zip(results, links_list):
            result.outcomes[RATE_BIAS] = _outcome(RATE_BIAS, biased_rate_assoc(links, rate_bias), links, n_tiers)

    sinr_bias = None
    if SINR_BIAS in config.schemes:
        fua_reference = None
        if all(r.fua is not None for r in results):
            fua_reference = float(np.mean([r.fua.utility for r in results]))
        if config.bias is not None and any(a != 1.0 for a in config.bias.sinr_factors):
            bias = config.bias
            mean = float(np.mean([utility(biased_sinr_assoc(l, bias), l) for l in links_list]))
            baseline = float(np.mean([utility(max_sinr_assoc(l), l) for l in links_list]))
            gap = None if fua_reference is None else fua_reference - mean
            sinr_bias = BiasSearchResult(bias, mean, baseline, gap, 1)
        else:
            sinr_bias = sinr_bias_search(config, fua_utility=fua_reference, links=links_list)
        for result, links in zip(results, links_list):
            result.outcomes[SINR_BIAS] = _outcome(
                SINR_BIAS, biased_sinr_assoc(links, sinr_bias.bias), links, n_tiers)

    report = aggregate(config, results, sinr_bias=sinr_bias, rate_bias=rate_bias)
    logger.info("Comparison finished: %s", ', '.join(
        f"{m.name} U={m.mean_utility:.3f}" for m in report.schemes))
    return report


def aggregate(config, results, sinr_bias=None, rate_bias=None):
    """Fold trial results, in trial order, into a ``MetricsReport``."""
    quantiles = tuple(get_setting('QUANTILES'))
    percentiles = tuple(get_setting('RATIO_PERCENTILES'))
    pooled = {}
    schemes = []
    for name in config.schemes:
        outcomes = [r.outcomes[name] for r in results]
        rates = np.concatenate([o.rates for o in outcomes])
        pooled[name] = rates
        schemes.append(dict(
            name=name,
            utilities=tuple(float(o.utility) for o in outcomes),
            tier_loads=tuple(float(v) for v in np.mean([o.tier_loads for o in outcomes], axis=0)),
            rates=rates,
            cdf=rate_cdf(rates, quantiles),
            not_converged=sum(1 for o in outcomes if not o.converged),
        ))

    metrics = []
    for entry in schemes:
        ratios = {}
        if BASELINE_SCHEME in pooled:
            for p in percentiles:
                try:
                    ratios[p] = rate_ratio_at_percentile(entry['rates'], pooled[BASELINE_SCHEME], p)
                except UndefinedRatioError:
                    logger.warning("Rate ratio of %s at the %sth percentile is undefined", entry['name'], p)
                    ratios[p] = None
        metrics.append(SchemeMetrics(ratios=ratios, **entry))

    duals = [r.dual for r in results if r.dual is not None]
    return MetricsReport(
        schemes=tuple(metrics),
        tier_names=tuple(t.name for t in config.scenario.tiers),
        trials=config.trials,
        seed_base=config.seed_base,
        n_users=tuple(r.n_users for r in results),
        quantiles=quantiles,
        ratio_percentiles=percentiles,
        convergence=tuple(row for r in results for row in _convergence_rows(r)),
        sinr_bias=sinr_bias,
        rate_bias=rate_bias,
        violations=tuple(v for r in results for v in r.violations),
        dual_iterations=tuple(len(d.trace) for d in duals),
        dual_messages=tuple(d.trace.messages for d in duals),
        dual_bound_met=tuple(d.dual_bound_met for d in duals),
    )


# ---------------------------------------------------------------------------
# Biasing factors
# ---------------------------------------------------------------------------

def sinr_bias_search(config, fua_utility=None, links=None):
    """
    Grid search over per-tier SINR factors, the macro tier pinned at 0 dB.

    Every combination of the configured dB grid over the small-cell tiers is
    scored by its mean log utility across trials; the first best tuple in grid
    order wins, so an all-zero grid returns the max-SINR rule.
    """
    links = [trial_links(config, t) for t in range(config.trials)] if links is None else links
    n_tiers = config.scenario.n_tiers
    grid = config.grid_values
    rate_ones = (1.0,) * n_tiers

    best_db, best_utility = None, -math.inf
    evaluated = 0
    for combo in itertools.product(grid, repeat=n_tiers - 1):
        sinr_db = (0.0,) + tuple(float(v) for v in combo)
        bias = BiasConfig.from_sinr_db(sinr_db, rate_factors=rate_ones)
        mean = float(np.mean([utility(biased_sinr_assoc(l, bias), l) for l in links]))
        evaluated += 1
        if mean > best_utility:
            best_db, best_utility = sinr_db, mean

    baseline = float(np.mean([utility(max_sinr_assoc(l), l) for l in links]))
    gap = None if fua_utility is None else fua_utility - best_utility
    logger.info("SINR bias search over %s candidates: best %s dB, utility %.4f (max-SINR %.4f)",
                evaluated, best_db, best_utility, baseline)
    return BiasSearchResult(
        bias=BiasConfig.from_sinr_db(best_db, rate_factors=rate_ones),
        mean_utility=best_utility,
        baseline_utility=baseline,
        fua_gap=gap,
        n_candidates=evaluated,
    )


def rate_bias_from_dual(dual_mu, tiers, n_tiers=None, serving=None):
    """
    Per-tier rate factor B = mean of e^(-mu) over the tier's BSs, normalized
    so the macro tier has B = 1. Tiers without BSs get B = 1.

    With a ``serving`` mask only BSs that served demand are averaged; a tier
    where none did falls back to all of its BSs.
    """
    mu = np.asarray(dual_mu, dtype=float)
    tiers = np.asarray(tiers, dtype=int)
    n_tiers = int(tiers.max()) + 1 if n_tiers is None else n_tiers
    if serving is not None:
        serving = np.asarray(serving, dtype=bool)
        keep = serving | ~np.isin(tiers, tiers[serving])
        mu, tiers = mu[keep], tiers[keep]
    sums = np.bincount(tiers, weights=np.exp(-mu), minlength=n_tiers)
    counts = np.bincount(tiers, minlength=n_tiers)
    if counts[0] == 0:
        raise InvalidConfigError("The macro tier has no base stations to normalize against.")
    present = counts > 0
    factors = np.ones(n_tiers)
    factors[present] = sums[present] / counts[present]
    factors[present] /= factors[0]
    if not present.all():
        logger.warning("Tiers %s have no base stations; their rate factor defaults to 1",
                       np.nonzero(~present)[0].tolist())
    return BiasConfig(sinr_factors=(1.0,) * n_tiers, rate_factors=tuple(float(b) for b in factors))


def rate_bias_from_duals(duals, links_list, n_tiers):
    """
    Pool several dual runs before averaging per tier. Each run contributes
    its prices at its best dual value, restricted to the BSs serving demand
    there.
    """
    mu = np.concatenate([d.state.best_mu for d in duals])
    serving = np.concatenate([d.state.best_demand > 0 for d in duals])
    tiers = np.concatenate([l.bs_tiers for l in links_list])
    return rate_bias_from_dual(mu, tiers, n_tiers, serving=serving)


def rate_bias_for_config(config, links=None):
    """Rate factors from the dual prices of every trial of ``config``."""
    links = [trial_links(config, t) for t in range(config.trials)] if links is None else links
    duals = [run_dual(l, max_iter=config.dual_max_iter) for l in links]
    bias = rate_bias_from_duals(duals, links, config.scenario.n_tiers)
    logger.info("Rate bias factors %s from %s trials", [round(b, 4) for b in bias.rate_factors], len(links))
    return bias


@dataclass(frozen=True, eq=False)
class SweepPoint:
    value: float
    rate_bias: BiasConfig
    sinr_bias: BiasConfig = None


@dataclass(frozen=True, eq=False)
class SweepReport:
    parameter: str
    tier: int
    points: tuple

    def factor_trajectory(self, tier, kind='rate'):
        """One tier's factor across the sweep."""
        if kind == 'rate':
            return [p.rate_bias.rate_factors[tier] for p in self.points]
        return [p.sinr_bias.sinr_factors[tier] for p in self.points if p.sinr_bias is not None]


def bias_sweep(config, parameter, tier, values, with_sinr_search=False):
    """
    Re-derive biasing factors while one tier's density (count per macro cell)
    or transmit power (dBm) takes each of ``values``.
    """
    if parameter not in SWEEP_PARAMETERS:
        raise InvalidConfigError(f"Sweep parameter must be one of {list(SWEEP_PARAMETERS)}, got '{parameter}'.")
    n_tiers = config.scenario.n_tiers
    lowest = 1 if parameter == SWEEP_DENSITY else 0
    if not lowest <= tier < n_tiers:
        raise InvalidConfigError(f"Cannot sweep the {parameter} of tier {tier}.")
    values = tuple(float(v) for v in values)
    if not values:
        raise InvalidConfigError("A sweep needs at least one value.")

    points = []
    for value in values:
        scenario = config.scenario.with_tier(tier, **{SWEEP_PARAMETERS[parameter]: value})
        point_config = config.with_scenario(scenario)
        links = [trial_links(point_config, t) for t in range(point_config.trials)]
        rate = rate_bias_for_config(point_config, links=links)
        sinr = sinr_bias_search(point_config, links=links).bias if with_sinr_search else None
        points.append(SweepPoint(value=value, rate_bias=rate, sinr_bias=sinr))
        logger.info("Sweep %s of tier %s = %s: rate factors %s", parameter, tier, value, rate.rate_factors)
    return SweepReport(parameter=parameter, tier=tier, points=tuple(points))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def _report_tables(report):
    names = report.scheme_names
    tables = {}
    tables['loads'] = (
        ['scheme', 'tier', 'tier_name', 'mean_load'],
        [(m.name, k, report.tier_names[k], load) for m in report.schemes for k, load in enumerate(m.tier_loads)],
    )
    tables['cdf'] = (
        ['percentile'] + list(names),
        [(q,) + tuple(float(m.cdf[k]) for m in report.schemes) for k, q in enumerate(report.quantiles)],
    )
    tables['ratios'] = (
        ['scheme', 'percentile', 'ratio_vs_max_sinr'],
        [(m.name, p, '' if r is None else r) for m in report.schemes for p, r in m.ratios.items()],
    )
    tables['convergence'] = (
        ['trial', 'solver', 'iteration', 'value', 'gap', 'step'],
        [(c.trial, c.solver, c.iteration, c.value, c.gap, c.step) for c in report.convergence],
    )
    bias_rows = []
    if report.sinr_bias is not None:
        bias = report.sinr_bias.bias
        bias_rows += [('sinr', k, a, float(linear_to_db(a))) for k, a in enumerate(bias.sinr_factors)]
    if report.rate_bias is not None:
        bias_rows += [('rate', k, b, float(linear_to_db(b))) for k, b in enumerate(report.rate_bias.rate_factors)]
    tables['bias'] = (['kind', 'tier', 'factor', 'factor_db'], bias_rows)
    return tables


def export_report(report, out_dir, xlsx=False):
    """
    Write the report's CSV files and summary.json into ``out_dir``.

    A report without schemes only gets the summary. ``xlsx`` adds a
    report.xlsx workbook with the same tables.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    tables = _report_tables(report) if report.schemes else {}
    for name, (header, rows) in tables.items():
        written.append(write_csv(out_dir / f'{name}.csv', header, rows))
    written.append(write_json(out_dir / 'summary.json', report.summary()))
    if xlsx and tables:
        written.append(write_workbook(out_dir / 'report.xlsx', tables))
    logger.info("Wrote %s report files to %s", len(written), out_dir)
    return written


def export_sweep(sweep, out_dir):
    out_dir = Path(out_dir)
    n_tiers = len(sweep.points[0].rate_bias.rate_factors)
    header = [sweep.parameter] + [f'rate_b{k}' for k in range(n_tiers)]
    with_sinr = sweep.points[0].sinr_bias is not None
    if with_sinr:
        header += [f'sinr_a{k}_db' for k in range(n_tiers)]
    rows = []
    for point in sweep.points:
        row = [point.value] + list(point.rate_bias.rate_factors)
        if with_sinr:
            row += list(point.sinr_bias.sinr_db)
        rows.append(row)
    return write_csv(out_dir / 'bias_sweep.csv', header, rows)
