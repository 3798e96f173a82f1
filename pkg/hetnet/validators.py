"""
Validation utilities for the hetnet simulator.
Provides reusable checks for configuration values, bias factors and
association tables.
"""

import math

import numpy as np

from .exceptions import InvalidBiasError, InvalidConfigError


def validate_positive_number(value, name, allow_zero=False):
    """
    Validate a finite positive number (powers, distances, tolerances...).

    Args:
        value: Number to validate
        name: Field name used in the error message
        allow_zero: Accept 0 as well

    Returns:
        float: Validated number

    Raises:
        InvalidConfigError: If the number is missing, not finite or out of range
    """
    if value is None:
        raise InvalidConfigError(f"{name} is required.")
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidConfigError(f"{name} must be a number, got {value!r}.")
    if not math.isfinite(value):
        raise InvalidConfigError(f"{name} must be finite.")
    if value < 0 or (value == 0 and not allow_zero):
        bound = "at least 0" if allow_zero else "greater than 0"
        raise InvalidConfigError(f"{name} must be {bound}, got {value}.")
    return value


def validate_finite_number(value, name):
    if value is None:
        raise InvalidConfigError(f"{name} is required.")
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidConfigError(f"{name} must be a number, got {value!r}.")
    if not math.isfinite(value):
        raise InvalidConfigError(f"{name} must be finite.")
    return value


def validate_count(value, name, minimum=0):
    """Validate an integer count such as users or trials."""
    if isinstance(value, bool) or value is None:
        raise InvalidConfigError(f"{name} must be an integer.")
    try:
        as_int = int(value)
    except (TypeError, ValueError):
        raise InvalidConfigError(f"{name} must be an integer, got {value!r}.")
    if as_int != value:
        raise InvalidConfigError(f"{name} must be an integer, got {value!r}.")
    if as_int < minimum:
        raise InvalidConfigError(f"{name} must be at least {minimum}, got {as_int}.")
    return as_int


def parse_factor(value):
    """
    Parse one biasing factor.

    Plain numbers are linear. Strings ending in ``dB`` (case-insensitive) are
    converted with 10^(x/10).

    Raises:
        InvalidBiasError: If the factor is malformed or not strictly positive
    """
    if isinstance(value, str):
        text = value.strip()
        if text.lower().endswith('db'):
            try:
                db = float(text[:-2])
            except ValueError:
                raise InvalidBiasError(f"Cannot parse biasing factor {value!r}.")
            value = 10.0 ** (db / 10.0)
        else:
            try:
                value = float(text)
            except ValueError:
                raise InvalidBiasError(f"Cannot parse biasing factor {value!r}.")
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InvalidBiasError(f"Cannot parse biasing factor {value!r}.")
    if not math.isfinite(value) or value <= 0:
        raise InvalidBiasError(f"Biasing factors must be positive and finite, got {value}.")
    return value


def validate_bias_factors(factors, name='bias'):
    """Validate a per-tier factor sequence and return it as a float tuple."""
    if factors is None or len(factors) == 0:
        raise InvalidBiasError(f"{name} needs at least one factor.")
    return tuple(parse_factor(f) for f in factors)


def validate_row_stochastic(weights, tol=1e-9):
    """
    Check an association table: entries in [0, 1] and unit row sums.

    Raises:
        ValueError: If the table is not a valid association
    """
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2 or weights.shape[0] == 0 or weights.shape[1] == 0:
        raise ValueError(f"Association must be a nonempty 2-D table, got shape {weights.shape}.")
    if not np.all(np.isfinite(weights)):
        raise ValueError("Association weights must be finite.")
    if weights.min() < -tol or weights.max() > 1 + tol:
        raise ValueError("Association weights must lie in [0, 1].")
    row_sums = weights.sum(axis=1)
    worst = np.abs(row_sums - 1.0).max()
    if worst > tol:
        raise ValueError(f"Every association row must sum to 1 (worst deviation {worst:.3g}).")
    return weights
