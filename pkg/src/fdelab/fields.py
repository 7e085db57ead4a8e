"""Uniform grids, finite-difference stencils and space-time fields."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D node set. Periodic grids omit the duplicated endpoint."""

    x: np.ndarray
    dx: float
    periodic: bool

    @property
    def n(self) -> int:
        return self.x.size

    def check(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.n:
            raise DomainError(f"grid has {self.n} nodes, got trailing axis of length {values.shape[-1]}")
        if not np.all(np.isfinite(values)):
            raise DomainError("non-finite values on grid")
        return values

    def d1(self, v: np.ndarray) -> np.ndarray:
        """Second-order first derivative along the last axis."""
        return first_derivative(v, self.dx, self.periodic)

    def d2(self, v: np.ndarray) -> np.ndarray:
        """Second-order second derivative along the last axis."""
        return second_derivative(v, self.dx, self.periodic)


def first_derivative(v: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if periodic:
        return (np.roll(v, -1, axis=-1) - np.roll(v, 1, axis=-1)) / (2.0 * h)
    out = np.empty_like(v)
    out[..., 1:-1] = (v[..., 2:] - v[..., :-2]) / (2.0 * h)
    out[..., 0] = (-3.0 * v[..., 0] + 4.0 * v[..., 1] - v[..., 2]) / (2.0 * h)
    out[..., -1] = (3.0 * v[..., -1] - 4.0 * v[..., -2] + v[..., -3]) / (2.0 * h)
    return out


def one_sided_first_derivative(v: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    """Forward difference, first order. Only used as a known-order control."""
    v = np.asarray(v, dtype=float)
    if periodic:
        return (np.roll(v, -1, axis=-1) - v) / h
    out = np.empty_like(v)
    out[..., :-1] = (v[..., 1:] - v[..., :-1]) / h
    out[..., -1] = (v[..., -1] - v[..., -2]) / h
    return out


def second_derivative(v: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if periodic:
        return (np.roll(v, -1, axis=-1) - 2.0 * v + np.roll(v, 1, axis=-1)) / (h * h)
    out = np.empty_like(v)
    out[..., 1:-1] = (v[..., 2:] - 2.0 * v[..., 1:-1] + v[..., :-2]) / (h * h)
    # one-sided, second order
    out[..., 0] = (2.0 * v[..., 0] - 5.0 * v[..., 1] + 4.0 * v[..., 2] - v[..., 3]) / (h * h)
    out[..., -1] = (2.0 * v[..., -1] - 5.0 * v[..., -2] + 4.0 * v[..., -3] - v[..., -4]) / (h * h)
    return out


class Meaning(str, Enum):
    U = "U"
    V_I = "V_I"
    V_II = "V_II"


@dataclass(frozen=True)
class SpaceTimeField:
    """Positive grid function sampled on uniform time slices.

    ``values[k, j]`` is the value at ``times[k]`` and node ``grid.x[j]``.
    """

    grid: Grid
    times: np.ndarray
    values: np.ndarray
    meaning: Meaning = Meaning.U
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape != (self.times.size, self.grid.n):
            raise DomainError(f"values shape {vals.shape} does not match times x nodes")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
            raise DomainError("field values must be finite and strictly positive")
        t = np.asarray(self.times, dtype=float)
        if t.size > 1:
            steps = np.diff(t)
            if np.any(steps <= 0.0):
                raise DomainError("time axis must be strictly increasing")
            if np.max(np.abs(steps - steps.mean())) > 1e-9 * max(1.0, abs(t).max()):
                raise DomainError("time axis must be uniform")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "times", t)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def slice_summary(self) -> list[dict]:
        return [
            {"t": float(t), "min": float(row.min()), "max": float(row.max())}
            for t, row in zip(self.times, self.values)
        ]

    def to_csv(self, path) -> None:
        tt, xx = np.meshgrid(self.times, self.grid.x, indexing="ij")
        table = np.column_stack([tt.ravel(), xx.ravel(), self.values.ravel()])
        np.savetxt(path, table, delimiter=",", header="t,x,value", comments="", fmt="%.17g")
