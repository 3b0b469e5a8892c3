"""Unit-circle helpers shared by the kernel and function code."""
from __future__ import annotations

import numpy as np

from ..exceptions import ValidationError


def to_points(theta):
    theta = np.asarray(theta, dtype=np.float64)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def to_angles(x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 2:
        raise ValidationError(f"circle geometry needs d=2 inputs, got d={x.shape[-1]}")
    return np.mod(np.arctan2(x[..., 1], x[..., 0]), 2 * np.pi)


def grid(Q):
    """Uniform angular grid of size Q on [0, 2*pi)."""
    return 2 * np.pi * np.arange(Q) / Q


def is_power_of_two(Q):
    return Q >= 1 and (Q & (Q - 1)) == 0
