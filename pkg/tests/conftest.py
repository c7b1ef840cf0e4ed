"""Shared fixtures and independent oracles for the test suite.

The oracle functions below re-derive model quantities with plain scalar
math so tests never validate the library against itself.
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))


def oracle_period(l, h, b):
    """Independent closed-form lift-cycle period."""
    return math.sqrt(l * l - h * h) + b


def oracle_force(x, l, h, b, k):
    """Independent scalar evaluation of the reverse-stroke force."""
    period = oracle_period(l, h, b)
    ramp = math.sqrt(l * l - h * h)
    xr = math.fmod(x, period)
    if xr < 0.0:
        xr += period
    theta = 0.5 * math.pi * xr / ramp if xr < ramp else 0.5 * math.pi
    sin_t = math.sin(theta)
    cos_t = math.cos(theta)
    denom = (h * cos_t + xr * sin_t) ** 2
    if denom < 1e-9:
        denom = 1e-9
    return k * sin_t * sin_t / denom


def oracle_force_curve(l, h, b, k, points=100_000):
    """Dense one-period grid scan of the closed form (positions, forces)."""
    period = oracle_period(l, h, b)
    xs = np.linspace(0.0, period, points, endpoint=False)
    forces = np.array([oracle_force(float(x), l, h, b, k) for x in xs])
    return xs, forces


def count_interior_maxima(values):
    values = np.asarray(values, dtype=float)
    interior = (values[1:-1] > values[:-2]) & (values[1:-1] > values[2:])
    return int(interior.sum())


@pytest.fixture
def default_patch():
    from furhaptics import FurPatch

    return FurPatch()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
