"""Analytic film-thickness, speed and pressure laws.

Every law is a small frozen dataclass called as ``law(x, t)`` with points
``x`` of shape ``(n, dim)``; it returns an array of shape ``(n,)``.  Laws
serialise to a ``kind`` plus flat float parameters for the config layer.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np


def _npoints(x):
    x = np.asarray(x, dtype=float)
    return 1 if x.ndim <= 1 else x.shape[0]


def _first_coord(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1)
    if x.ndim == 1:
        return x[:1]
    return x[:, 0]


@dataclass(frozen=True)
class SinusoidalThickness:
    """``h = mean - amplitude * cos(2 pi x1 / wavelength)``, steady."""

    mean: float
    amplitude: float
    wavelength: float
    kind = "sinusoidal"
    steady = True

    def __call__(self, x, t=0.0):
        return self.mean - self.amplitude * np.cos(2.0 * np.pi * _first_coord(x) / self.wavelength)

    def bounds(self):
        a = abs(self.amplitude)
        return self.mean - a, self.mean + a


@dataclass(frozen=True)
class OscillatingThickness:
    """Spatially uniform ``h = mean + amplitude * cos(2 pi frequency t)``."""

    mean: float
    amplitude: float
    frequency: float
    kind = "oscillating"
    steady = False

    def __call__(self, x, t=0.0):
        return np.full(_npoints(x), self.mean + self.amplitude * np.cos(2.0 * np.pi * self.frequency * t))

    def bounds(self):
        a = abs(self.amplitude)
        return self.mean - a, self.mean + a


@dataclass(frozen=True)
class ConstantThickness:
    value: float
    kind = "constant"
    steady = True

    def __call__(self, x, t=0.0):
        return np.full(_npoints(x), float(self.value))

    def bounds(self):
        return self.value, self.value


@dataclass(frozen=True)
class ConstantSpeed:
    value: float
    kind = "constant"

    def __call__(self, x, t=0.0):
        return np.full(_npoints(x), float(self.value))


THICKNESS_LAWS = {cls.kind: cls for cls in (SinusoidalThickness, OscillatingThickness, ConstantThickness)}


def law_params(law):
    """``(kind, {name: value})`` of a law."""
    return law.kind, {f.name: float(getattr(law, f.name)) for f in dataclasses.fields(law)}


def thickness_from_params(kind, params):
    try:
        cls = THICKNESS_LAWS[kind]
    except KeyError:
        raise ValueError(f"unknown thickness law {kind!r}; known: {sorted(THICKNESS_LAWS)}") from None
    names = [f.name for f in dataclasses.fields(cls)]
    missing = [n for n in names if n not in params]
    if missing:
        raise ValueError(f"thickness law {kind!r} is missing {missing}")
    extra = sorted(set(params) - set(names))
    if extra:
        raise ValueError(f"thickness law {kind!r} does not take {extra}")
    return cls(**{n: float(params[n]) for n in names})
