"""Characteristic feet and the advected right-hand side of the implicit step."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .fem import MixedSpace, ScalarField


@dataclass
class TransportData:
    """Everything the transport part of one time step needs.

    ``speed`` and ``thickness`` are laws ``f(x, t)`` evaluated on point
    arrays of shape ``(n, dim)``.  ``thickness_old`` optionally replaces the
    analytic thickness at the previous time level by a stored field.
    """

    speed: Callable
    tau: float
    theta_old: ScalarField
    thickness: Callable
    theta_in: float = 1.0
    thickness_old: Optional[ScalarField] = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"time step must be positive, got {self.tau}")
        if not 0.0 <= self.theta_in <= 1.0:
            raise ValueError(f"inflow saturation must lie in [0, 1], got {self.theta_in}")


def foot_point(x, t, tau, speed):
    """Upstream foot ``x - tau * U(x, t) / 2 * e1`` of the characteristic through ``x``.

    ``x`` may be a scalar (1D), a single point of shape ``(dim,)`` or a batch
    ``(n, dim)``; the result has the same shape.
    """
    x = np.asarray(x, dtype=float)
    shape = x.shape
    pts = x.reshape(1, 1) if x.ndim == 0 else (x.reshape(1, -1) if x.ndim == 1 else x)
    drift = np.broadcast_to(np.asarray(speed(pts, t), dtype=float), (pts.shape[0],))
    foot = pts.copy()
    foot[:, 0] = pts[:, 0] - tau * (drift / 2.0)
    return foot.reshape(shape)


def advected_source(space: MixedSpace, data: TransportData, t):
    """Values of ``lambda_old + h(., t) - h_old`` at the pressure DOF points.

    ``t`` is the new time level; the old one is ``t - tau``.  Feet that leave
    the domain are clamped back onto the boundary and see the inflow
    saturation ``theta_in``.
    """
    mesh = space.mesh
    pts = space.pressure_points
    feet = foot_point(pts, t, data.tau, data.speed)
    cells, bary = mesh.locate_many(feet, space.pressure_hints)
    inside = cells >= 0

    theta_star = np.full(pts.shape[0], float(data.theta_in))
    theta_star[inside] = data.theta_old.eval_many(cells[inside], bary[inside])

    where = feet.copy()
    if not np.all(inside):
        where[~inside] = mesh.clamp(feet[~inside])
    t_old = t - data.tau
    if data.thickness_old is None:
        h_star = np.asarray(data.thickness(where, t_old), dtype=float)
    else:
        h_star = np.empty(pts.shape[0])
        h_star[inside] = data.thickness_old.eval_many(cells[inside], bary[inside])
        if not np.all(inside):
            c2, b2 = mesh.locate_many(where[~inside], space.pressure_hints[~inside])
            h_star[~inside] = data.thickness_old.eval_many(c2, b2)
    h_now = np.asarray(data.thickness(pts, t), dtype=float)
    lam_old = h_star * (1.0 - theta_star)
    return lam_old + h_now - h_star
