"""The logarithmic cone over a base space and its boundary quasimetrics.

Con(X) = X x (0, inf) with
    d((x, t), (x', t')) = 2 log( (d_X(x, x') + max(t, t')) / sqrt(t t') ).

Distinguished rays: gamma_x(s) = (x, e^-s) runs down to the boundary point x
and gamma_inf(s) = (x0, e^s) runs up the vertical direction.  The boundary
quasimetrics are truncated limits of exponentials of Gromov products along
these rays, computed inside the cone with the cone distance itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .spaces import SpaceHandle, distance


@dataclass(frozen=True)
class ConPoint:
    """A point (base, height) of the cone; height strictly positive."""

    base: tuple[float, ...]
    height: float

    def __post_init__(self):
        if self.height <= 0:
            raise DomainError("cone height must be positive")

    @property
    def packed(self) -> np.ndarray:
        return np.asarray(self.base + (self.height,), dtype=np.float64)


@dataclass(frozen=True)
class RaySpec:
    """kind 'downward' is gamma_x(s) = (x, e^-s); kind 'vertical' is (x0, e^s)."""

    kind: str
    anchor: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("downward", "vertical"):
            raise InputError("ray kind must be 'downward' or 'vertical'")


def con_distance(base_space: SpaceHandle, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Cone distance; heights are the last coordinate and must be positive."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    t1 = p[..., -1]
    t2 = q[..., -1]
    if np.any(t1 <= 0) or np.any(t2 <= 0):
        raise DomainError("cone heights must be positive")
    dx = distance(base_space, p[..., :-1], q[..., :-1])
    return 2.0 * np.log((dx + np.maximum(t1, t2)) / np.sqrt(t1 * t2))


def ray_point(ray: RaySpec, s) -> np.ndarray:
    """Point of the ray at parameter s >= 0 (vectorized over s)."""
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise InputError("ray parameter must be nonnegative")
    anchor = np.asarray(ray.anchor, dtype=np.float64)
    height = np.exp(-s) if ray.kind == "downward" else np.exp(s)
    base = np.broadcast_to(anchor, s.shape + anchor.shape)
    return np.concatenate([base, height[..., None]], axis=-1)


def con_gromov_product(base_space: SpaceHandle, p: np.ndarray, q: np.ndarray,
                       o: np.ndarray) -> np.ndarray:
    d = lambda a, b: con_distance(base_space, a, b)
    return 0.5 * (d(p, o) + d(o, q) - d(p, q))


@dataclass(frozen=True)
class QuasimetricValue:
    """Truncated-limit value with its half-depth check.

    ``converged`` is set when the values at s_max and s_max / 2 agree to 1e-6
    relative; Gromov products along the explicit rays stabilize exponentially
    fast, so disagreement flags a too-small truncation depth.
    """

    value: float
    value_half: float
    converged: bool


def _check_truncation(v_full: float, v_half: float) -> QuasimetricValue:
    scale = max(abs(v_full), abs(v_half), 1e-300)
    return QuasimetricValue(float(v_full), float(v_half), abs(v_full - v_half) <= 1e-6 * scale)


def visual_quasimetric(base_space: SpaceHandle, a: float, basepoint: np.ndarray,
                       r1: RaySpec, r2: RaySpec, s_max: float) -> QuasimetricValue:
    """a^(-(gamma1(s) | gamma2(s))_p) evaluated at s = s_max, with a half-depth check."""
    if a <= 1:
        raise InputError("visual base a must exceed 1")
    if r1.kind != "downward" or r2.kind != "downward":
        raise InputError("visual quasimetric takes two downward rays")
    if s_max < 10:
        raise InputError("s_max must be at least 10")
    basepoint = np.asarray(basepoint, dtype=np.float64)

    def value(s: float) -> float:
        g1 = ray_point(r1, np.asarray(s))
        g2 = ray_point(r2, np.asarray(s))
        prod = con_gromov_product(base_space, g1, g2, basepoint)
        return float(a ** (-prod))

    return _check_truncation(value(s_max), value(s_max / 2.0))


def parabolic_quasimetric(base_space: SpaceHandle, a: float, eta: RaySpec,
                          r1: RaySpec, r2: RaySpec, s_max: float) -> QuasimetricValue:
    """a^(s - (gamma1(s) | gamma2(s))_eta(s)) at s = s_max, with a half-depth check.

    The basepoint escapes along the vertical ray, so the value is unbounded in
    general and recovers the base distance (up to a bounded factor) for the
    cone over the base.
    """
    if a <= 1:
        raise InputError("visual base a must exceed 1")
    if eta.kind != "vertical":
        raise InputError("eta must be a vertical ray")
    if r1.kind != "downward" or r2.kind != "downward":
        raise InputError("parabolic quasimetric takes two downward rays")
    if s_max < 10:
        raise InputError("s_max must be at least 10")

    def value(s: float) -> float:
        g1 = ray_point(r1, np.asarray(s))
        g2 = ray_point(r2, np.asarray(s))
        o = ray_point(eta, np.asarray(s))
        prod = con_gromov_product(base_space, g1, g2, o)
        return float(a ** (s - prod))

    return _check_truncation(value(s_max), value(s_max / 2.0))
