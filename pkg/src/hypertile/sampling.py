"""Deterministic seeded sampling.

Every random number is a pure function of (seed, sample index, slot index),
derived by a splitmix-style 64-bit hash.  Sample i never looks at sample
i-1, so estimates are bitwise reproducible and independent of how a sample
loop is chunked or parallelized; estimators built on top must only combine
samples through order-independent reductions (max / min / any / all).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

_PHI = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_ONE = np.uint64(1)


def _mix(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over uint64 arrays."""
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def unit_uniforms(seed: int, count: int, width: int, row0: int = 0, stream: int = 0) -> np.ndarray:
    """(count, width) array of floats in [0, 1); row i, slot j depends only on (seed, stream, row0+i, j)."""
    if count < 0 or width <= 0:
        raise InputError("count must be >= 0 and width >= 1")
    with np.errstate(over="ignore"):
        i = np.arange(row0, row0 + count, dtype=np.uint64)[:, None]
        j = np.arange(width, dtype=np.uint64)[None, :]
        key = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _PHI * np.uint64(stream + 1)
        inner = _mix(key + _PHI * (i + _ONE))
        v = _mix(inner + _PHI * (j + _ONE))
    return (v >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class Box:
    """Axis-aligned coordinate box, the region spec used by all samplers."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise InputError("lo and hi must have equal length")
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise InputError("box has hi < lo")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def is_empty(self) -> bool:
        return any(h <= l for l, h in zip(self.lo, self.hi))

    def diameter(self) -> float:
        return float(np.linalg.norm(np.asarray(self.hi) - np.asarray(self.lo)))

    def scaled(self, factor: float) -> "Box":
        return Box(tuple(l * factor for l in self.lo), tuple(h * factor for h in self.hi))

    def sample(self, seed: int, count: int, points_per_sample: int = 1, stream: int = 0) -> np.ndarray:
        """(count, points_per_sample, dim) points; affine image of unit uniforms.

        Scaling the box by a power of two scales the samples exactly (lo + u*(hi-lo)
        with both bounds scaled), which the scale-invariance tests rely on.
        """
        d = self.dim
        u = unit_uniforms(seed, count, points_per_sample * d, stream=stream)
        u = u.reshape(count, points_per_sample, d)
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        return lo + u * (hi - lo)


@dataclass(frozen=True)
class Sampler:
    """Region + count + seed bundle handed to the estimators."""

    box: Box
    count: int
    seed: int

    def points(self, points_per_sample: int = 1, stream: int = 0) -> np.ndarray:
        if self.box.is_empty:
            raise InputError("empty region")
        return self.box.sample(self.seed, self.count, points_per_sample, stream=stream)


def log_uniform(seed: int, count: int, lo: float, hi: float, stream: int = 0) -> np.ndarray:
    """count draws log-uniformly spread over [lo, hi]."""
    if not (0 < lo <= hi):
        raise InputError("log_uniform needs 0 < lo <= hi")
    u = unit_uniforms(seed, count, 1, stream=stream)[:, 0]
    return np.exp(np.log(lo) + u * (np.log(hi) - np.log(lo)))


def halfspace_geodesic_step(points: np.ndarray, direction: np.ndarray, omega: np.ndarray,
                            arclen: np.ndarray) -> np.ndarray:
    """Move each point of the upper half-space an exact hyperbolic arclength.

    ``points`` is (N, n+1) with height last.  ``direction`` is (N, n) unit
    vectors in the base, ``omega`` in (0, pi) is the initial angle from the
    upward vertical inside the vertical plane spanned by the direction.
    Geodesics are vertical lines and semicircles; the parametrization
    log tan(theta/2) makes the step exact, so the returned points sit at
    hyperbolic distance exactly ``arclen`` from the inputs.
    """
    x = points[:, :-1]
    t = points[:, -1]
    sin_w = np.sin(omega)
    cos_w = np.cos(omega)
    out = np.empty_like(points)
    vertical = np.abs(sin_w) < 1e-12
    # vertical geodesic: scale the height
    sgn = np.where(cos_w >= 0, 1.0, -1.0)
    out[:, -1] = t * np.exp(sgn * arclen)
    out[:, :-1] = x
    # semicircle: center offset c = t*cot(w), radius R = t/sin(w), start angle pi - w
    nv = ~vertical
    if np.any(nv):
        tn = t[nv]
        R = tn / sin_w[nv]
        c_off = tn * cos_w[nv] / sin_w[nv]
        theta0 = np.pi - omega[nv]
        tan_half = np.tan(theta0 / 2.0) * np.exp(-arclen[nv])
        theta1 = 2.0 * np.arctan(tan_half)
        par = c_off + R * np.cos(theta1)
        out[nv, -1] = R * np.sin(theta1)
        out_x = x[nv] + direction[nv] * par[:, None]
        out[nv, :-1] = out_x
    return out


def halfspace_pairs_at_scales(base_box: Box, t_range: tuple[float, float], count: int, seed: int,
                              s_lo: float, s_hi: float, stream: int = 0,
                              max_retries: int = 8) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pairs (P, Q) in the half-space over ``base_box`` at hyperbolic distances in [s_lo, s_hi].

    Distances are drawn log-uniformly; Q is reached from P by an exact
    geodesic step in a seeded random direction.  Directions that leave the
    window are redrawn from the same per-sample stream (bounded retries) so
    the result is still a pure function of (seed, index).  Returns
    (P, Q, target distances); pairs whose retries were exhausted are dropped.
    """
    n = base_box.dim
    lo = np.asarray(base_box.lo + (t_range[0],))
    hi = np.asarray(base_box.hi + (t_range[1],))
    if np.any(hi <= lo):
        raise InputError("empty region")
    u = unit_uniforms(seed, count, n + 2 + 2 * max_retries, stream=stream)
    p = lo + u[:, : n + 1] * (hi - lo)
    # heights log-uniform so every layer gets probed
    p[:, -1] = t_range[0] * np.exp(u[:, n] * np.log(t_range[1] / t_range[0]))
    s = np.exp(np.log(s_lo) + u[:, n + 1] * (np.log(s_hi) - np.log(s_lo)))
    q = np.full_like(p, np.nan)
    alive = np.ones(count, dtype=bool)
    for r in range(max_retries):
        todo = alive & np.isnan(q[:, 0])
        if not np.any(todo):
            break
        ur = u[todo, n + 2 + 2 * r: n + 4 + 2 * r]
        if n == 1:
            e = np.where(ur[:, 0] < 0.5, -1.0, 1.0)[:, None]
        else:
            ang = 2.0 * np.pi * ur[:, 0]
            e = np.zeros((ur.shape[0], n))
            e[:, 0] = np.cos(ang)
            e[:, 1] = np.sin(ang)
        omega = np.pi * np.clip(ur[:, 1], 1e-9, 1 - 1e-9)
        cand = halfspace_geodesic_step(p[todo], e, omega, s[todo])
        ok = np.all(cand[:, :-1] >= lo[:-1], axis=1) & np.all(cand[:, :-1] <= hi[:-1], axis=1)
        ok &= (cand[:, -1] >= lo[-1]) & (cand[:, -1] <= hi[-1])
        idx = np.flatnonzero(todo)
        q[idx[ok]] = cand[ok]
    keep = ~np.isnan(q[:, 0])
    return p[keep], q[keep], s[keep]
