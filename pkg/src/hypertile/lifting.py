"""Lifting boundary homeomorphisms to the half-space above the base.

The lift sends (x, t) to (f(x), tau(x, t)) where tau(x, t) is the largest
displacement of f over the closed ball of radius t around x.  For monotone
one-dimensional maps the maximum is exactly max(f(x+t) - f(x), f(x) - f(x-t));
for the other built-in families it is attained on the sphere and computed by
sampled directions with optional golden-section refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import models
from .errors import DomainError, InputError
from .metric import DistortionReport, fit_qi_from_distances, ratio_stats, QiConstants
from .sampling import Box, halfspace_pairs_at_scales
from .spaces import SpaceHandle, distance


@dataclass(frozen=True)
class BoundaryMap:
    """A parametrized homeomorphism of the base space.

    Families: affine (invertible matrix + translation), power1d
    (sign-preserving x -> sign(x) |x|^p), heis-left-translation,
    heis-dilation, and table (a strictly increasing interpolation table,
    extended linearly beyond its knots).
    """

    family: str
    base: SpaceHandle
    matrix: tuple[tuple[float, ...], ...] | None = None
    translation: tuple[float, ...] | None = None
    exponent: float | None = None
    element: tuple[float, ...] | None = None
    factor: float | None = None
    knots_x: tuple[float, ...] | None = None
    knots_y: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family == "affine":
            m = np.asarray(self.matrix, dtype=np.float64)
            if m.shape != (self.base.point_dim, self.base.point_dim):
                raise InputError("affine matrix shape must match the base dimension")
            if abs(np.linalg.det(m)) < 1e-300:
                raise InputError("affine matrix must be invertible")
        elif self.family == "power1d":
            if self.base.point_dim != 1:
                raise InputError("power maps act on the real line")
            if not self.exponent or self.exponent <= 0:
                raise InputError("power exponent must be positive")
        elif self.family == "heis-left-translation":
            if self.base.model != "heisenberg":
                raise InputError("translation element lives in the Heisenberg group")
        elif self.family == "heis-dilation":
            if self.base.model != "heisenberg":
                raise InputError("dilations act on the Heisenberg group")
            if not self.factor or self.factor <= 0:
                raise InputError("dilation factor must be positive")
        elif self.family == "table":
            if self.base.point_dim != 1:
                raise InputError("table maps act on the real line")
            xs = np.asarray(self.knots_x, dtype=np.float64)
            ys = np.asarray(self.knots_y, dtype=np.float64)
            if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
                raise InputError("table needs matching knot arrays with >= 2 knots")
            if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
                raise InputError("table knots must be strictly increasing")
        else:
            raise InputError(f"unknown boundary map family {self.family!r}")

    @property
    def monotone_1d(self) -> bool:
        if self.family in ("power1d", "table"):
            return True
        if self.family == "affine" and self.base.point_dim == 1:
            return True
        return False

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        if self.family == "affine":
            m = np.asarray(self.matrix, dtype=np.float64)
            b = np.zeros(self.base.point_dim) if self.translation is None else \
                np.asarray(self.translation, dtype=np.float64)
            return pts @ m.T + b
        if self.family == "power1d":
            return np.sign(pts) * np.abs(pts) ** self.exponent
        if self.family == "heis-left-translation":
            return models.heis_multiply(np.asarray(self.element, dtype=np.float64), pts)
        if self.family == "heis-dilation":
            return models.heis_dilate(self.factor, pts)
        xs = np.asarray(self.knots_x, dtype=np.float64)
        ys = np.asarray(self.knots_y, dtype=np.float64)
        flat = pts.reshape(-1)
        out = np.interp(flat, xs, ys)
        lo_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        hi_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        below = flat < xs[0]
        above = flat > xs[-1]
        out[below] = ys[0] + lo_slope * (flat[below] - xs[0])
        out[above] = ys[-1] + hi_slope * (flat[above] - xs[-1])
        return out.reshape(pts.shape)


def affine_map(base: SpaceHandle, matrix, translation=None) -> BoundaryMap:
    return BoundaryMap("affine", base, matrix=tuple(tuple(float(v) for v in row) for row in matrix),
                       translation=None if translation is None else tuple(float(v) for v in translation))


def power_map(p: float) -> BoundaryMap:
    from .spaces import euclidean

    return BoundaryMap("power1d", euclidean(1), exponent=float(p))


def heis_translation_map(g) -> BoundaryMap:
    from .spaces import heisenberg

    return BoundaryMap("heis-left-translation", heisenberg(), element=tuple(float(v) for v in g))


def heis_dilation_map(s: float) -> BoundaryMap:
    from .spaces import heisenberg

    return BoundaryMap("heis-dilation", heisenberg(), factor=float(s))


def table_map(knots_x, knots_y) -> BoundaryMap:
    from .spaces import euclidean

    return BoundaryMap("table", euclidean(1), knots_x=tuple(float(v) for v in knots_x),
                       knots_y=tuple(float(v) for v in knots_y))


@dataclass(frozen=True)
class CallableBoundaryMap:
    """Adapter for compositions of built-in maps (e.g. a lattice translation
    after a power map); exposes the same surface the lift machinery needs."""

    fn: object
    base: SpaceHandle
    monotone_1d: bool = False

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return self.fn(pts)


@dataclass(frozen=True)
class LiftParams:
    """Discretization of the ball maximum: sampled sphere directions plus an
    optional golden-section polish along the best direction."""

    ball_samples: int = 64
    refine: bool = True

    def __post_init__(self):
        if self.ball_samples < 16:
            raise InputError("ball_samples must be at least 16")


@dataclass(frozen=True)
class LiftedMap:
    boundary: BoundaryMap
    params: LiftParams = field(default_factory=LiftParams)

    def tau(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        return tau(self, x, t)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return lift_eval(self, pts)


def _heis_sphere(n_samples: int) -> np.ndarray:
    """Grid on the unit gauge sphere |zeta|^4 + u^2 = 1."""
    k = max(4, int(math.sqrt(n_samples)))
    theta = np.linspace(0.0, 2.0 * np.pi, 2 * k, endpoint=False)
    psi = np.linspace(-np.pi / 2, np.pi / 2, k)
    TH, PS = np.meshgrid(theta, psi, indexing="ij")
    r = np.sqrt(np.abs(np.cos(PS)))
    pts = np.stack([r * np.cos(TH), r * np.sin(TH), np.sin(PS)], axis=-1)
    return pts.reshape(-1, 3)


def tau(lift: LiftedMap, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Largest displacement of the boundary map over the radius-t ball at x.

    Monotone 1d families use the exact two-point formula.  Euclidean bases in
    dimension >= 2 sample directions on the sphere (the maximum of a
    continuous homeomorphism's displacement over a ball is attained on the
    sphere for these families) and optionally polish with golden-section
    search; the Heisenberg families use the gauge sphere, on which their
    displacement is constant, so sampling is exact for them.
    """
    f = lift.boundary
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if np.any(t <= 0):
        raise DomainError("tau needs positive radius")
    if f.monotone_1d:
        fx = f(x)
        up = f(x + t[:, None]) - fx
        dn = fx - f(x - t[:, None])
        return np.maximum(up, dn)[:, 0]
    if f.base.model == "heisenberg":
        sphere = _heis_sphere(lift.params.ball_samples)
        fx = f(x)
        ball = models.heis_multiply(x[:, None, :], _heis_dilate_rows(sphere, t))
        disp = models.heis_gauge_distance(f(ball), fx[:, None, :])
        return disp.max(axis=1)
    if f.base.model == "euclidean" and f.base.point_dim == 2:
        m = lift.params.ball_samples
        ang = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        fx = f(x)
        disp = np.linalg.norm(f(x[:, None, :] + t[:, None, None] * dirs[None, :, :])
                              - fx[:, None, :], axis=-1)
        best = disp.max(axis=1)
        if lift.params.refine:
            k = disp.argmax(axis=1)
            lo = ang[k] - 2.0 * np.pi / m
            hi = ang[k] + 2.0 * np.pi / m
            gr = (math.sqrt(5.0) - 1.0) / 2.0
            a, b = lo, hi
            c = b - gr * (b - a)
            d = a + gr * (b - a)
            for _ in range(40):
                fc = np.linalg.norm(
                    f(x + t[:, None] * np.stack([np.cos(c), np.sin(c)], axis=-1)) - fx, axis=-1)
                fd = np.linalg.norm(
                    f(x + t[:, None] * np.stack([np.cos(d), np.sin(d)], axis=-1)) - fx, axis=-1)
                take_c = fc > fd
                b = np.where(take_c, d, b)
                a = np.where(take_c, a, c)
                c = b - gr * (b - a)
                d = a + gr * (b - a)
            mid = (a + b) / 2.0
            fm = np.linalg.norm(
                f(x + t[:, None] * np.stack([np.cos(mid), np.sin(mid)], axis=-1)) - fx, axis=-1)
            best = np.maximum(best, fm)
        return best
    raise InputError(f"tau not implemented for base {f.base.model} dim {f.base.point_dim}")


def _heis_dilate_rows(sphere: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.empty((len(t), len(sphere), 3))
    out[:, :, 0] = t[:, None] * sphere[None, :, 0]
    out[:, :, 1] = t[:, None] * sphere[None, :, 1]
    out[:, :, 2] = (t**2)[:, None] * sphere[None, :, 2]
    return out


def lift_eval(lift: LiftedMap, pts: np.ndarray) -> np.ndarray:
    """(x, t) -> (f(x), tau(x, t)); the output height stays positive."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    x = pts[:, :-1]
    t = pts[:, -1]
    if np.any(t <= 0):
        raise DomainError("half-space heights must be positive")
    fx = lift.boundary(x)
    return np.concatenate([fx, tau(lift, x, t)[:, None]], axis=1)


def lift_distortion(lift: LiftedMap, hplus: SpaceHandle, base_box: Box,
                    t_range: tuple[float, float], scales: tuple[float, ...],
                    count: int = 2000, seed: int = 0,
                    scale_span: float = 16.0) -> DistortionReport:
    """Distance-ratio extremes of the lift at each probe scale, plus a global
    (L, C) fit over all sampled pairs.

    A probe at scale s draws pair distances log-uniformly from [s/span, s], so
    the recorded constant max(max_ratio, 1/min_ratio) reflects behavior at and
    just below the scale.
    """
    if np.any(np.asarray(scales) <= 0):
        raise InputError("scales must be positive")
    report = DistortionReport(sample_count=0, seed=seed)
    all_src: list[np.ndarray] = []
    all_img: list[np.ndarray] = []
    for k, s in enumerate(scales):
        p, q, _ = halfspace_pairs_at_scales(base_box, t_range, count, seed,
                                            s / scale_span, s, stream=100 + k)
        d_src = distance(hplus, p, q)
        d_img = distance(hplus, lift_eval(lift, p), lift_eval(lift, q))
        report.local_bilip.append(ratio_stats(float(s), d_src, d_img, p, q))
        all_src.append(d_src)
        all_img.append(d_img)
        report.sample_count += len(d_src)
    qi, saturated, w = fit_qi_from_distances(np.concatenate(all_src), np.concatenate(all_img))
    report.qi = qi
    report.qi_saturated = saturated
    return report


# canonical extensions of base symmetries to the half-space


def extend_translation(v) -> callable:
    v = np.asarray(v, dtype=np.float64)

    def ext(pts):
        pts = np.asarray(pts, dtype=np.float64)
        out = pts.copy()
        out[..., :-1] += v
        return out

    return ext


def extend_homothety(base_factor: float, height_factor: float) -> callable:
    def ext(pts):
        pts = np.asarray(pts, dtype=np.float64)
        out = pts.copy()
        out[..., :-1] *= base_factor
        out[..., -1] *= height_factor
        return out

    return ext


def extend_heis_translation(g) -> callable:
    g = np.asarray(g, dtype=np.float64)

    def ext(pts):
        pts = np.asarray(pts, dtype=np.float64)
        out = pts.copy()
        out[..., :3] = models.heis_multiply(g, pts[..., :3])
        return out

    return ext


def extend_heis_dilation(s: float) -> callable:
    def ext(pts):
        pts = np.asarray(pts, dtype=np.float64)
        out = pts.copy()
        out[..., :3] = models.heis_dilate(s, pts[..., :3])
        out[..., 3] *= s
        return out

    return ext
