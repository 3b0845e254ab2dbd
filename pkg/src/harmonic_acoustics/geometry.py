"""Annulus geometry and tangential calculus on its two circular walls.

Each wall is parametrized by arclength tau in the direction
e_tau = -n_perp, where n is the outer unit normal of the domain and
u_perp = (u2, -u1).  With this choice the point x(tau) - s*n(tau) lies
inside the domain for small s > 0.  On the outer circle this is the
counter-clockwise direction, on the inner circle the clockwise one,
which gives curvature +1/R2 and -1/R1 respectively.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AnnulusDomain:
    r_inner: float = 1.5
    r_outer: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.r_inner < self.r_outer):
            raise ValueError(f"need 0 < R1 < R2, got R1={self.r_inner}, R2={self.r_outer}")

    @property
    def width(self) -> float:
        return self.r_outer - self.r_inner

    @property
    def mid_radius(self) -> float:
        return 0.5 * (self.r_inner + self.r_outer)

    @property
    def area(self) -> float:
        return np.pi * (self.r_outer**2 - self.r_inner**2)

    @property
    def inner(self) -> "BoundaryCurve":
        return BoundaryCurve("inner", self.r_inner)

    @property
    def outer(self) -> "BoundaryCurve":
        return BoundaryCurve("outer", self.r_outer)

    def boundaries(self):
        return (self.inner, self.outer)

    def distance_to_wall(self, r):
        """Distance s to the nearer wall, switching at the mid radius.

        Returns (s, which) where ``which`` is a boolean array that is True
        for points attributed to the outer wall.
        """
        r = np.asarray(r, dtype=float)
        outer = r > self.mid_radius
        s = np.where(outer, self.r_outer - r, r - self.r_inner)
        return s, outer


@dataclass(frozen=True)
class BoundaryCurve:
    which: str
    radius: float

    def __post_init__(self):
        if self.which not in ("inner", "outer"):
            raise ValueError(f"unknown boundary {self.which!r}")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def orientation_sign(self) -> int:
        """Sign of dtheta/dtau."""
        return 1 if self.which == "outer" else -1

    @property
    def normal_sign(self) -> int:
        """n = normal_sign * e_r."""
        return 1 if self.which == "outer" else -1

    @property
    def curvature(self) -> float:
        return curvature_of(self)

    @property
    def node_index(self) -> int:
        """Index of the wall node on an increasing radial grid."""
        return -1 if self.which == "outer" else 0


def perp(u):
    """Clockwise rotation by 90 degrees, u_perp = (u2, -u1)."""
    u = np.asarray(u)
    return np.stack([u[..., 1], -u[..., 0]], axis=-1)


def boundary_frame(boundary: BoundaryCurve, theta):
    """Outer normal n, turned normal n_perp and base point at angle theta."""
    theta = np.asarray(theta, dtype=float)
    er = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    n = boundary.normal_sign * er
    return n, perp(n), boundary.radius * er


def parametrization(boundary: BoundaryCurve, tau):
    """Unit-speed parametrization x(tau) and its first two derivatives."""
    tau = np.asarray(tau, dtype=float)
    R, sg = boundary.radius, boundary.orientation_sign
    th = sg * tau / R
    x = R * np.stack([np.cos(th), np.sin(th)], axis=-1)
    dx = sg * np.stack([-np.sin(th), np.cos(th)], axis=-1)
    ddx = -np.stack([np.cos(th), np.sin(th)], axis=-1) / R
    return x, dx, ddx


def curvature_of(boundary: BoundaryCurve) -> float:
    """Signed curvature x1' x2'' - x2' x1'' of the oriented wall."""
    return boundary.orientation_sign / boundary.radius


def tangential_derivative(trace, boundary: BoundaryCurve, order: int = 1):
    """Arclength derivative of a boundary trace given by angular modes.

    ``trace`` holds coefficients for m = -M..M along its last axis.
    """
    trace = np.asarray(trace, dtype=complex)
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    M = (trace.shape[-1] - 1) // 2
    m = np.arange(-M, M + 1)
    factor = 1j * m * boundary.orientation_sign / boundary.radius
    return trace * factor**order
