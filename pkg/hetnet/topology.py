"""
Network topology and channel model.

Builds multi-tier scenarios (macro cells on a hexagonal layout, small cells
dropped uniformly inside each macro cell, users uniform over the region) and
turns them into the gain / SINR / spectral-efficiency tables every solver
consumes.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .conf import get_setting
from .exceptions import InvalidConfigError
from .validators import (
    validate_count,
    validate_finite_number,
    validate_positive_number,
)

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
LN2 = math.log(2.0)

LAYOUT_HEX = 'hex'
LAYOUT_SINGLE = 'single'
LAYOUT_CHOICES = (LAYOUT_HEX, LAYOUT_SINGLE)

COUNT_FIXED = 'fixed'
COUNT_POISSON = 'poisson'
COUNT_MODES = (COUNT_FIXED, COUNT_POISSON)

# Independent random streams spawned from the scenario seed.
PLACEMENT_STREAM = 0
SHADOWING_STREAM = 1


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(np.asarray(value, dtype=float))


def seed_stream(seed, stream):
    """Return a generator for one named stream of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(stream + 1)[stream])


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TierSpec:
    """One class of base stations sharing power and path-loss model."""
    name: str
    power_dbm: float
    pathloss_intercept_db: float
    pathloss_slope_db: float
    count_per_macro: float = 0.0

    def __post_init__(self):
        validate_finite_number(self.power_dbm, f"Tier '{self.name}' power_dbm")
        validate_finite_number(self.pathloss_intercept_db, f"Tier '{self.name}' pathloss_intercept_db")
        validate_positive_number(self.pathloss_slope_db, f"Tier '{self.name}' pathloss_slope_db")
        validate_positive_number(self.count_per_macro, f"Tier '{self.name}' count_per_macro", allow_zero=True)


@dataclass(frozen=True)
class MacroLayout:
    """
    Fixed macro placement.

    ``hex`` places 3r^2 + 3r + 1 cells (r = ``rings``) on a hexagonal grid with
    inter-site distance ``isd_m``; with ``wraparound`` the cluster tiles the
    plane so edge cells see a full ring of interferers. ``single`` places one
    macro in the middle of a square region and never wraps.
    """
    kind: str = LAYOUT_HEX
    rings: int = 1
    isd_m: float = 500.0
    wraparound: bool = True

    def __post_init__(self):
        if self.kind not in LAYOUT_CHOICES:
            raise InvalidConfigError(f"Unknown macro layout '{self.kind}'.")
        validate_count(self.rings, 'macro_layout.rings')
        validate_positive_number(self.isd_m, 'macro_layout.isd_m')

    @property
    def count(self):
        if self.kind == LAYOUT_SINGLE:
            return 1
        return 3 * self.rings * self.rings + 3 * self.rings + 1

    @staticmethod
    def rings_for_count(count):
        """Inverse of ``count`` for hexagonal layouts (1, 7, 19, 37, ...)."""
        count = validate_count(count, 'macro_layout.count', minimum=1)
        rings = 0
        while 3 * rings * rings + 3 * rings + 1 < count:
            rings += 1
        if 3 * rings * rings + 3 * rings + 1 != count:
            raise InvalidConfigError(
                f"A hexagonal layout holds 1, 7, 19, 37, ... macro cells; {count} is not one of them."
            )
        return rings


@dataclass(frozen=True)
class ChannelParams:
    """Per-tier path loss plus shadowing and noise shared by all links."""
    intercepts_db: tuple
    slopes_db: tuple
    shadowing_db: float = 8.0
    noise_dbm: float = -104.0
    bandwidth_hz: float = 10e6
    min_distance_m: float = None

    def __post_init__(self):
        if len(self.intercepts_db) != len(self.slopes_db) or not self.intercepts_db:
            raise InvalidConfigError("Path-loss intercepts and slopes must be given for every tier.")
        for slope in self.slopes_db:
            validate_positive_number(slope, 'pathloss_slope_db')
        validate_positive_number(self.shadowing_db, 'shadowing_db', allow_zero=True)
        validate_finite_number(self.noise_dbm, 'noise_dbm')
        validate_positive_number(self.bandwidth_hz, 'bandwidth_hz')
        if self.min_distance_m is None:
            object.__setattr__(self, 'min_distance_m', float(get_setting('MIN_DISTANCE_M')))
        validate_positive_number(self.min_distance_m, 'min_distance_m')

    @property
    def n_tiers(self):
        return len(self.intercepts_db)

    @property
    def noise_mw(self):
        return float(dbm_to_mw(self.noise_dbm))


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to draw a scenario, minus the seed's randomness."""
    tiers: tuple
    macro_layout: MacroLayout = field(default_factory=MacroLayout)
    region_m: float = 1000.0
    shadowing_db: float = 8.0
    noise_dbm: float = -104.0
    bandwidth_hz: float = 10e6
    n_users: int = None
    users_per_macro: float = None
    count_mode: str = COUNT_FIXED
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'tiers', tuple(self.tiers))
        if not self.tiers:
            raise InvalidConfigError("A scenario needs at least one tier of base stations.")
        if self.count_mode not in COUNT_MODES:
            raise InvalidConfigError(f"count_mode must be one of {COUNT_MODES}, got '{self.count_mode}'.")
        for tier in self.tiers[1:]:
            if self.count_mode == COUNT_FIXED and tier.count_per_macro != int(tier.count_per_macro):
                raise InvalidConfigError(
                    f"Tier '{tier.name}' needs an integer count_per_macro in fixed count mode."
                )
        validate_positive_number(self.region_m, 'region_m')
        validate_count(self.seed, 'seed')
        if self.n_users is None and self.users_per_macro is None:
            raise InvalidConfigError("Either n_users or users_per_macro is required.")
        if self.n_users is not None:
            validate_count(self.n_users, 'n_users')
        if self.users_per_macro is not None:
            validate_positive_number(self.users_per_macro, 'users_per_macro', allow_zero=True)
        if self.total_users < 1:
            raise InvalidConfigError("A scenario needs at least one user.")

    @property
    def total_users(self):
        if self.n_users is not None:
            return int(self.n_users)
        return int(round(self.users_per_macro * self.macro_layout.count))

    @property
    def n_tiers(self):
        return len(self.tiers)

    def channel_params(self):
        return ChannelParams(
            intercepts_db=tuple(t.pathloss_intercept_db for t in self.tiers),
            slopes_db=tuple(t.pathloss_slope_db for t in self.tiers),
            shadowing_db=self.shadowing_db,
            noise_dbm=self.noise_dbm,
            bandwidth_hz=self.bandwidth_hz,
        )

    def with_tier(self, index, **changes):
        """Copy of this config with one tier's fields replaced."""
        tiers = list(self.tiers)
        tiers[index] = replace(tiers[index], **changes)
        return replace(self, tiers=tuple(tiers))

    def to_dict(self):
        return {
            'region_m': self.region_m,
            'macro_layout': {
                'kind': self.macro_layout.kind,
                'rings': self.macro_layout.rings,
                'isd_m': self.macro_layout.isd_m,
                'wraparound': self.macro_layout.wraparound,
            },
            'tiers': [
                {
                    'name': t.name,
                    'power_dbm': t.power_dbm,
                    'pathloss_intercept_db': t.pathloss_intercept_db,
                    'pathloss_slope_db': t.pathloss_slope_db,
                    'count_per_macro': t.count_per_macro,
                }
                for t in self.tiers
            ],
            'shadowing_db': self.shadowing_db,
            'noise_dbm': self.noise_dbm,
            'bandwidth_hz': self.bandwidth_hz,
            'n_users': self.n_users,
            'users_per_macro': self.users_per_macro,
            'count_mode': self.count_mode,
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data):
        """Build a config from its JSON form, validated by the config forms."""
        from .forms import clean_scenario_config

        cleaned = clean_scenario_config(data)
        layout = MacroLayout(**cleaned['macro_layout'])
        tiers = tuple(TierSpec(**tier) for tier in cleaned['tiers'])
        return cls(
            tiers=tiers,
            macro_layout=layout,
            region_m=cleaned['region_m'],
            shadowing_db=cleaned['shadowing_db'],
            noise_dbm=cleaned['noise_dbm'],
            bandwidth_hz=cleaned['bandwidth_hz'],
            n_users=cleaned['n_users'],
            users_per_macro=cleaned['users_per_macro'],
            count_mode=cleaned['count_mode'],
            seed=cleaned['seed'],
        )


def three_tier_scenario_config(**overrides):
    """Three-tier macro/pico/femto scenario with the default simulation constants."""
    tiers = (
        TierSpec('macro', 46.0, 34.0, 40.0, 1),
        TierSpec('pico', 35.0, 34.0, 40.0, 5),
        TierSpec('femto', 20.0, 37.0, 30.0, 20),
    )
    params = dict(
        tiers=tiers,
        macro_layout=MacroLayout(kind=LAYOUT_HEX, rings=1, isd_m=500.0, wraparound=True),
        shadowing_db=8.0,
        noise_dbm=-104.0,
        bandwidth_hz=10e6,
        users_per_macro=30,
        count_mode=COUNT_FIXED,
    )
    params.update(overrides)
    return ScenarioConfig(**params)


def macro_only(config):
    """The same scenario with every small-cell tier removed."""
    return replace(config, tiers=config.tiers[:1])


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BaseStation:
    id: int
    tier: int
    position: tuple
    power_dbm: float


@dataclass(frozen=True)
class User:
    id: int
    position: tuple


@dataclass(frozen=True, eq=False)
class Scenario:
    """A drawn network: base stations of every tier plus users."""
    config: ScenarioConfig
    base_stations: tuple
    users: tuple
    channel: ChannelParams
    seed: int
    region: tuple
    wrap_vectors: np.ndarray

    def __post_init__(self):
        if not self.base_stations:
            raise InvalidConfigError("A scenario needs at least one base station.")
        if not self.users:
            raise InvalidConfigError("A scenario needs at least one user.")
        if len({bs.id for bs in self.base_stations}) != len(self.base_stations):
            raise InvalidConfigError("Base station ids must be unique.")
        if len({u.id for u in self.users}) != len(self.users):
            raise InvalidConfigError("User ids must be unique.")

    @property
    def n_users(self):
        return len(self.users)

    @property
    def n_bs(self):
        return len(self.base_stations)

    @cached_property
    def bs_positions(self):
        return np.array([bs.position for bs in self.base_stations], dtype=float)

    @cached_property
    def bs_tiers(self):
        return np.array([bs.tier for bs in self.base_stations], dtype=int)

    @cached_property
    def bs_power_dbm(self):
        return np.array([bs.power_dbm for bs in self.base_stations], dtype=float)

    @cached_property
    def user_positions(self):
        return np.array([u.position for u in self.users], dtype=float)

    def tier_counts(self):
        return np.bincount(self.bs_tiers, minlength=self.config.n_tiers)

    def distances(self):
        """User-to-BS distances in meters, using the nearest wrapped image."""
        diff = self.user_positions[:, None, :] - self.bs_positions[None, :, :]
        images = diff[:, :, None, :] - self.wrap_vectors[None, None, :, :]
        return np.sqrt((images ** 2).sum(axis=-1)).min(axis=-1)

    def to_dict(self):
        return {
            'seed': self.seed,
            'region_m': list(self.region),
            'config': self.config.to_dict(),
            'base_stations': [
                {'id': bs.id, 'tier': bs.tier, 'x': bs.position[0], 'y': bs.position[1], 'power_dbm': bs.power_dbm}
                for bs in self.base_stations
            ],
            'users': [{'id': u.id, 'x': u.position[0], 'y': u.position[1]} for u in self.users],
        }


def hex_centers(rings, isd_m):
    """Cell centers of a hexagonal cluster, center cell first, then ring by ring."""
    a1 = np.array([isd_m, 0.0])
    a2 = np.array([isd_m / 2.0, isd_m * SQRT3 / 2.0])
    cells = []
    for q in range(-rings, rings + 1):
        for r in range(-rings, rings + 1):
            ring = max(abs(q), abs(r), abs(q + r))
            if ring > rings:
                continue
            pos = q * a1 + r * a2
            angle = math.atan2(pos[1], pos[0]) % (2 * math.pi)
            cells.append((ring, round(angle, 9), pos))
    cells.sort(key=lambda item: (item[0], item[1]))
    return np.array([c[2] for c in cells])


def hex_wrap_vectors(rings, isd_m):
    """Translations that tile the plane with copies of a hexagonal cluster."""
    a1 = np.array([isd_m, 0.0])
    a2 = np.array([isd_m / 2.0, isd_m * SQRT3 / 2.0])
    shift = (rings + 1) * a1 + rings * a2
    vectors = [np.zeros(2)]
    for k in range(6):
        theta = k * math.pi / 3.0
        rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        vectors.append(rot @ shift)
    return np.array(vectors)


def uniform_in_hexagon(rng, n, isd_m):
    """``n`` points uniform in a hexagonal cell of inradius isd/2 centered at the origin."""
    half = isd_m / 2.0
    circumradius = isd_m / SQRT3
    normals = np.array([[1.0, 0.0], [0.5, SQRT3 / 2.0], [-0.5, SQRT3 / 2.0]])
    points = np.empty((0, 2))
    while len(points) < n:
        batch = rng.uniform((-half, -circumradius), (half, circumradius), size=(2 * (n - len(points)) + 8, 2))
        inside = np.all(np.abs(batch @ normals.T) <= half, axis=1)
        points = np.vstack([points, batch[inside]])
    return points[:n]


def _small_cell_count(rng, tier, count_mode):
    if count_mode == COUNT_POISSON:
        return int(rng.poisson(tier.count_per_macro))
    return int(tier.count_per_macro)


def generate_scenario(config, seed=None):
    """
    Draw a scenario from ``config``.

    Macro cells follow the fixed layout; small-cell counts are drawn per macro
    cell (fixed or Poisson) and placed uniformly inside it; users are uniform
    over the whole region. The same (config, seed) always yields the same
    scenario.
    """
    if not isinstance(config, ScenarioConfig):
        raise InvalidConfigError("generate_scenario needs a ScenarioConfig.")
    seed = config.seed if seed is None else validate_count(seed, 'seed')
    rng = seed_stream(seed, PLACEMENT_STREAM)
    layout = config.macro_layout
    n_users = config.total_users

    bs_records = []  # (tier, position)
    if layout.kind == LAYOUT_SINGLE:
        side = config.region_m
        centers = np.array([[side / 2.0, side / 2.0]])
        bs_records.append((0, centers[0]))
        for tier_index, tier in enumerate(config.tiers[1:], start=1):
            count = _small_cell_count(rng, tier, config.count_mode)
            for pos in rng.uniform(0.0, side, size=(count, 2)):
                bs_records.append((tier_index, pos))
        user_positions = rng.uniform(0.0, side, size=(n_users, 2))
        region = (side, side)
        wrap = np.zeros((1, 2))
    else:
        centers = hex_centers(layout.rings, layout.isd_m)
        for center in centers:
            bs_records.append((0, center))
        for tier_index, tier in enumerate(config.tiers[1:], start=1):
            for center in centers:
                count = _small_cell_count(rng, tier, config.count_mode)
                for offset in uniform_in_hexagon(rng, count, layout.isd_m):
                    bs_records.append((tier_index, center + offset))
        cells = rng.integers(len(centers), size=n_users)
        user_positions = centers[cells] + uniform_in_hexagon(rng, n_users, layout.isd_m)
        span = np.ptp(centers, axis=0) + np.array([layout.isd_m, 2.0 * layout.isd_m / SQRT3])
        region = (float(span[0]), float(span[1]))
        wrap = hex_wrap_vectors(layout.rings, layout.isd_m) if layout.wraparound else np.zeros((1, 2))

    base_stations = tuple(
        BaseStation(
            id=index,
            tier=tier_index,
            position=(float(pos[0]), float(pos[1])),
            power_dbm=float(config.tiers[tier_index].power_dbm),
        )
        for index, (tier_index, pos) in enumerate(bs_records)
    )
    users = tuple(
        User(id=index, position=(float(pos[0]), float(pos[1])))
        for index, pos in enumerate(user_positions)
    )
    scenario = Scenario(
        config=config,
        base_stations=base_stations,
        users=users,
        channel=config.channel_params(),
        seed=seed,
        region=region,
        wrap_vectors=wrap,
    )
    logger.debug(
        "Generated scenario seed=%s with %s BSs (per tier %s) and %s users",
        seed, scenario.n_bs, scenario.tier_counts().tolist(), scenario.n_users,
    )
    return scenario


# ---------------------------------------------------------------------------
# Channel model
# ---------------------------------------------------------------------------

def path_loss_db(tier, distance, params):
    """Path loss intercept + slope * log10(d), with d clamped to the minimum distance."""
    tier = np.asarray(tier, dtype=int)
    intercepts = np.asarray(params.intercepts_db, dtype=float)[tier]
    slopes = np.asarray(params.slopes_db, dtype=float)[tier]
    d = np.maximum(np.asarray(distance, dtype=float), params.min_distance_m)
    loss = intercepts + slopes * np.log10(d)
    return float(loss) if loss.ndim == 0 else loss


@dataclass(frozen=True, eq=False)
class LinkTable:
    """Dense per (user, BS) channel gain, SINR and spectral efficiency tables."""
    gain: np.ndarray
    sinr: np.ndarray
    rate: np.ndarray
    bs_tiers: np.ndarray
    power_dbm: np.ndarray
    noise_mw: float

    def __post_init__(self):
        shape = self.gain.shape
        if len(shape) != 2 or shape[0] == 0 or shape[1] == 0:
            raise ValueError(f"Link tables must be nonempty 2-D arrays, got shape {shape}.")
        for name in ('sinr', 'rate'):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} table shape {getattr(self, name).shape} does not match {shape}.")
        for name in ('gain', 'sinr', 'rate'):
            table = getattr(self, name)
            if not np.all(np.isfinite(table)) or np.any(table <= 0):
                raise ValueError(f"Every {name} entry must be finite and strictly positive.")
        if self.bs_tiers.shape != (shape[1],):
            raise ValueError("bs_tiers needs one entry per base station.")

    @property
    def n_users(self):
        return self.gain.shape[0]

    @property
    def n_bs(self):
        return self.gain.shape[1]

    @property
    def n_tiers(self):
        return int(self.bs_tiers.max()) + 1

    @cached_property
    def log_rate(self):
        return np.log(self.rate)

    @classmethod
    def from_sinr(cls, sinr, bs_tiers=None):
        """Hand-built table from SINR values; unit gains and powers are stored."""
        sinr = np.atleast_2d(np.asarray(sinr, dtype=float))
        tiers = np.zeros(sinr.shape[1], dtype=int) if bs_tiers is None else np.asarray(bs_tiers, dtype=int)
        return cls(
            gain=np.ones_like(sinr),
            sinr=sinr,
            rate=np.log1p(sinr) / LN2,
            bs_tiers=tiers,
            power_dbm=np.zeros(sinr.shape[1]),
            noise_mw=1.0,
        )

    @classmethod
    def from_rates(cls, rate, bs_tiers=None):
        """Hand-built table from spectral efficiencies (SINR = 2^c - 1)."""
        rate = np.atleast_2d(np.asarray(rate, dtype=float))
        table = cls.from_sinr(np.expm1(rate * LN2), bs_tiers=bs_tiers)
        return replace(table, rate=rate)

    def rows(self):
        """(user_id, bs_id, gain, sinr_db, rate_bps_hz) for every link."""
        sinr_db = linear_to_db(self.sinr)
        for i in range(self.n_users):
            for j in range(self.n_bs):
                yield i, j, float(self.gain[i, j]), float(sinr_db[i, j]), float(self.rate[i, j])


def sinr_from_received(received_mw, noise_mw):
    """
    SINR per link from received powers, every other BS interfering at full power.

    The interference term is a leave-one-out sum built from prefix and suffix
    sums, so it never subtracts the serving power from the total.
    """
    received_mw = np.asarray(received_mw, dtype=float)
    prefix = np.cumsum(received_mw, axis=1) - received_mw
    suffix = np.cumsum(received_mw[:, ::-1], axis=1)[:, ::-1] - received_mw
    interference = prefix + suffix
    return received_mw / (interference + noise_mw)


def compute_link_table(scenario):
    """
    Gain, SINR and spectral efficiency for every (user, BS) pair.

    g_ij = 10^(-(L(d_ij) + S_ij)/10) with S_ij ~ N(0, sigma_s^2) dB drawn from
    the scenario seed's shadowing stream; c_ij = log2(1 + SINR_ij).
    """
    channel = scenario.channel
    distances = scenario.distances()
    loss = path_loss_db(scenario.bs_tiers[None, :], distances, channel)
    if channel.shadowing_db > 0:
        rng = seed_stream(scenario.seed, SHADOWING_STREAM)
        loss = loss + rng.normal(0.0, channel.shadowing_db, size=loss.shape)
    gain = np.power(10.0, -loss / 10.0)
    received = dbm_to_mw(scenario.bs_power_dbm)[None, :] * gain
    sinr = sinr_from_received(received, channel.noise_mw)
    return LinkTable(
        gain=gain,
        sinr=sinr,
        rate=np.log1p(sinr) / LN2,
        bs_tiers=scenario.bs_tiers.copy(),
        power_dbm=scenario.bs_power_dbm.copy(),
        noise_mw=channel.noise_mw,
    )
