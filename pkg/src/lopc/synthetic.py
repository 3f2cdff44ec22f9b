"""Deterministic synthetic fields for demos, tests and benchmarks."""

from __future__ import annotations

import numpy as np


def _axes(shape):
    return np.meshgrid(*[np.linspace(0.0, 1.0, n) for n in shape], indexing="ij")


def smooth(shape, seed: int = 0, dtype=np.float32) -> np.ndarray:
    """Sum of a few random separable sinusoids over the unit cube/square."""
    rng = np.random.default_rng(seed)
    axes = _axes(shape)
    f = np.zeros(shape)
    for _ in range(3):
        term = np.ones(shape)
        for a in axes:
            term = term * np.sin(2 * np.pi * rng.uniform(0.5, 2.5) * a + rng.uniform(0, 2 * np.pi))
        f += rng.uniform(0.5, 1.5) * term
    return f.astype(dtype)


def noise(shape, seed: int = 0, dtype=np.float32) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=shape).astype(dtype)


def plateaus(shape, seed: int = 0, levels: int = 6, dtype=np.float32) -> np.ndarray:
    """Smooth field snapped to a few levels: large regions of exactly equal values."""
    f = smooth(shape, seed, np.float64)
    lo, hi = f.min(), f.max()
    return (np.round((f - lo) / (hi - lo) * (levels - 1)) / (levels - 1)).astype(dtype)


def smooth_plus_noise(shape, seed: int = 7, amplitude: float = 0.01, dtype=np.float32) -> np.ndarray:
    """Fixed benchmark field: interfering waves plus small Gaussian noise."""
    axes = _axes(shape)
    x, y = axes[-1], axes[-2]
    z = axes[0] if len(shape) == 3 else np.zeros(shape)
    f = (
        np.sin(2 * np.pi * x) * np.cos(3 * np.pi * y)
        + np.sin(2.5 * np.pi * z + 1)
        + 0.5 * np.cos(4 * np.pi * (x + y))
    )
    f = f + amplitude * np.random.default_rng(seed).standard_normal(shape)
    return f.astype(dtype)
