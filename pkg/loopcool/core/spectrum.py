"""Sampled spectral densities and frequency grids."""
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from loopcool.core.errors import ParameterError

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    Real spectral density sampled on a strictly increasing angular-frequency grid.

    ``evaluator`` (optional) computes the same density at arbitrary
    frequencies, which lets the integrator refine beyond the stored grid.
    ``resonance`` and ``linewidth`` locate the mechanical peak when known.
    """
    omega: np.ndarray
    values: np.ndarray
    observable: str
    model: str
    symmetrized: bool = False
    resonance: Optional[float] = None
    linewidth: Optional[float] = None
    evaluator: Optional[Evaluator] = field(default=None, repr=False)
    metadata: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        check_grid(self.omega)
        if np.shape(self.values) != np.shape(self.omega):
            raise ParameterError("spectrum values and grid differ in shape")

    def __len__(self) -> int:
        return len(self.omega)


def check_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ParameterError("frequency grid must be one-dimensional with at least 2 points")
    if not np.all(np.isfinite(grid)):
        raise ParameterError("frequency grid contains non-finite values")
    if np.any(np.diff(grid) <= 0.0):
        raise ParameterError("frequency grid must be strictly increasing")
    return grid


def resonance_grid(center: float, linewidth: float, span: float = 20.0, points: int = 2001) -> np.ndarray:
    """Uniform grid of ``points`` samples over center +- span linewidths."""
    return np.linspace(center - span * linewidth, center + span * linewidth, points)


def mirrored_resonance_grid(
    center: float, linewidth: float, span: float = 20.0, points: int = 2001
) -> np.ndarray:
    """Grid covering both the +center and -center peaks (for two-sided spectra)."""
    positive = resonance_grid(center, linewidth, span, points)
    positive = positive[positive > 0.0]
    return np.concatenate([-positive[::-1], positive])
