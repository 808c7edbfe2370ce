"""Registered metric spaces behind one distance contract.

A SpaceHandle is a model tag plus immutable parameters; ``distance``
dispatches to the model formulas and is vectorized over leading axes.
Supported models: euclidean, twisted, heisenberg, half-space-real,
half-space-twisted (grid), complex-hyperbolic (ball / siegel / horo
coordinates), bump-half-plane (grid), and con-of(base).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import models
from .errors import DomainError, InputError


@dataclass(frozen=True)
class TwistedParams:
    lam: tuple[int, ...]

    def __post_init__(self):
        if not self.lam or any(int(v) != v or v < 1 for v in self.lam):
            raise InputError("twist exponents must be integers >= 1")


@dataclass(frozen=True)
class TwistedHalfSpaceParams:
    lam: tuple[int, ...]
    grid: models.GridSpec


@dataclass(frozen=True)
class CplxHypParams:
    n: int
    coords: str  # "ball" | "siegel" | "horo"


@dataclass(frozen=True)
class SpaceHandle:
    """Model tag + parameters + point dimension (length of a point array)."""

    model: str
    params: object
    point_dim: int


def euclidean(n: int) -> SpaceHandle:
    if n < 1:
        raise InputError("dimension must be >= 1")
    return SpaceHandle("euclidean", n, n)


def twisted(lam: tuple[int, ...]) -> SpaceHandle:
    p = TwistedParams(tuple(int(v) for v in lam))
    return SpaceHandle("twisted", p, len(p.lam))


def heisenberg() -> SpaceHandle:
    return SpaceHandle("heisenberg", None, 3)


def half_space(n: int) -> SpaceHandle:
    """Real hyperbolic upper half-space over a Euclidean base of dimension n."""
    if n < 1:
        raise InputError("base dimension must be >= 1")
    return SpaceHandle("half-space-real", n, n + 1)


def twisted_half_space(lam: tuple[int, ...], grid: models.GridSpec) -> SpaceHandle:
    p = TwistedHalfSpaceParams(tuple(int(v) for v in lam), grid)
    if len(grid.shape) != len(p.lam) + 1:
        raise InputError("grid dimension must be base dimension + 1")
    return SpaceHandle("half-space-twisted", p, len(p.lam) + 1)


def complex_hyperbolic(n: int = 2, coords: str = "ball") -> SpaceHandle:
    if n != 2:
        raise InputError("complex hyperbolic model implemented for complex dimension 2")
    if coords not in ("ball", "siegel", "horo"):
        raise InputError("coords must be ball, siegel, or horo")
    return SpaceHandle("complex-hyperbolic", CplxHypParams(n, coords), 2 * n)


def bump_half_plane(params: models.BumpParams) -> SpaceHandle:
    return SpaceHandle("bump-half-plane", params, 2)


def con_of(base: SpaceHandle) -> SpaceHandle:
    """The cone over a registered base; points are (base point, height)."""
    return SpaceHandle("con-of", base, base.point_dim + 1)


def _check_points(space: SpaceHandle, *pts: np.ndarray) -> list[np.ndarray]:
    arrs = []
    for p in pts:
        a = np.asarray(p, dtype=np.float64)
        if a.shape[-1] != space.point_dim:
            raise InputError(
                f"point dimension {a.shape[-1]} does not match {space.model} ({space.point_dim})")
        arrs.append(a)
    return arrs


def distance(space: SpaceHandle, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """d(p, q) for the space's model; broadcasts over leading axes."""
    p, q = _check_points(space, p, q)
    m = space.model
    if m == "euclidean":
        return np.linalg.norm(p - q, axis=-1)
    if m == "twisted":
        return models.twisted_distance(space.params.lam, p, q)
    if m == "heisenberg":
        return models.heis_gauge_distance(p, q)
    if m == "half-space-real":
        return models.halfspace_distance(p, q)
    if m == "half-space-twisted":
        return models.twisted_halfspace_distance(space.params.lam, p, q, space.params.grid)
    if m == "complex-hyperbolic":
        return _cplx_distance(space.params, p, q)
    if m == "bump-half-plane":
        return models.bump_halfplane_distance(space.params, p, q)
    if m == "con-of":
        from .cone import con_distance

        return con_distance(space.params, p, q)
    raise InputError(f"unknown model {m!r}")


def _cplx_distance(params: CplxHypParams, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    if params.coords == "ball":
        return models.cplx_hyp_distance("J1", models.ball_to_homogeneous(p),
                                        models.ball_to_homogeneous(q))
    if params.coords == "siegel":
        return models.cplx_hyp_distance("J2", models.siegel_to_homogeneous(p),
                                        models.siegel_to_homogeneous(q))
    # horospherical coordinates route through the Siegel model
    zp = models.siegel_to_homogeneous(models.horo_to_siegel(p))
    zq = models.siegel_to_homogeneous(models.horo_to_siegel(q))
    return models.cplx_hyp_distance("J2", zp, zq)


def validate_region(space: SpaceHandle, lo, hi) -> None:
    """Reject sampling boxes that leave a model's domain."""
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if lo.shape[-1] != space.point_dim:
        raise InputError("region dimension does not match the space")
    m = space.model
    if m in ("half-space-real", "half-space-twisted", "bump-half-plane", "con-of") and lo[-1] <= 0:
        raise DomainError("height range must be positive for this model")
    if m == "complex-hyperbolic" and space.params.coords == "ball":
        if np.sum(np.maximum(np.abs(lo), np.abs(hi)) ** 2) >= 1.0:
            raise DomainError("ball-model region must stay inside the unit ball")
    if m == "complex-hyperbolic" and space.params.coords == "horo" and lo[-1] <= 0:
        raise DomainError("horospherical height range must be positive")
