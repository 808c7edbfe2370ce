"""Concrete metric models.

Closed-form metrics: Euclidean, the twisted norm sum |dx_i|^(1/lambda_i),
the Heisenberg group with its homogeneous gauge, the real upper half-space,
and complex hyperbolic space in three coordinate systems (ball, Siegel,
horospherical).  Grid metrics: shortest paths on a stencil graph for the
left-invariant half-space metric over a twisted base and for a bump-perturbed
hyperbolic half-plane.

All point arguments are numpy arrays with points along the last axis;
everything is vectorized over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, InputError


# ---------------------------------------------------------------------------
# twisted base metric


def twisted_distance(lam: tuple[int, ...], x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """sum_i |x_i - y_i|^(1/lambda_i).  Subadditive per term, hence a metric."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[-1] != len(lam) or y.shape[-1] != len(lam):
        raise InputError(f"expected {len(lam)} coordinates")
    exps = 1.0 / np.asarray(lam, dtype=np.float64)
    return np.sum(np.abs(x - y) ** exps, axis=-1)


def twisted_homothety(lam: tuple[int, ...], x: np.ndarray, n: int = 1) -> np.ndarray:
    """x_i -> 2^(n*lambda_i) x_i; scales twisted_distance by exactly 2^n."""
    scale = np.exp2(np.float64(n) * np.asarray(lam, dtype=np.float64))
    return np.asarray(x, dtype=np.float64) * scale


# ---------------------------------------------------------------------------
# Heisenberg group, points (x, y, u) for zeta = x + iy and center coordinate u


def heis_multiply(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Group law (zeta, u)(zeta', u') = (zeta + zeta', u + u' + 2 Im(zeta * conj(zeta')))."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    out = np.empty(np.broadcast_shapes(p.shape, q.shape), dtype=np.float64)
    out[..., 0] = p[..., 0] + q[..., 0]
    out[..., 1] = p[..., 1] + q[..., 1]
    # Im((x+iy) conj(x'+iy')) = y x' - x y'
    out[..., 2] = p[..., 2] + q[..., 2] + 2.0 * (p[..., 1] * q[..., 0] - p[..., 0] * q[..., 1])
    return out


def heis_inverse(p: np.ndarray) -> np.ndarray:
    return -np.asarray(p, dtype=np.float64)


def heis_dilate(s: float, p: np.ndarray) -> np.ndarray:
    """delta_s: (zeta, u) -> (s zeta, s^2 u)."""
    if s <= 0:
        raise DomainError("dilation factor must be positive")
    p = np.asarray(p, dtype=np.float64)
    out = np.empty_like(p)
    out[..., 0] = s * p[..., 0]
    out[..., 1] = s * p[..., 1]
    out[..., 2] = (s * s) * p[..., 2]
    return out


def heis_gauge_norm(p: np.ndarray) -> np.ndarray:
    """Homogeneous gauge (|zeta|^4 + u^2)^(1/4)."""
    p = np.asarray(p, dtype=np.float64)
    r2 = p[..., 0] ** 2 + p[..., 1] ** 2
    return (r2 * r2 + p[..., 2] ** 2) ** 0.25


def heis_gauge_distance(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Left-invariant gauge distance ||q^-1 p||; delta_s is an exact s-homothety of it."""
    return heis_gauge_norm(heis_multiply(heis_inverse(np.asarray(q, dtype=np.float64)), p))


# ---------------------------------------------------------------------------
# real upper half-space, points (x_1..x_n, t)


def halfspace_distance(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """arccosh(1 + (|dx|^2 + dt^2) / (2 t t')), the metric of ds^2 = (dx^2 + dt^2)/t^2."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    t1 = p[..., -1]
    t2 = q[..., -1]
    if np.any(t1 <= 0) or np.any(t2 <= 0):
        raise DomainError("half-space heights must be positive")
    d2 = np.sum((p[..., :-1] - q[..., :-1]) ** 2, axis=-1) + (t1 - t2) ** 2
    return np.arccosh(1.0 + d2 / (2.0 * t1 * t2))


# ---------------------------------------------------------------------------
# complex hyperbolic space (dimension n over C), homogeneous coordinates in C^(n+1)


def hermitian_form(form: str, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """J(z, w), linear in z and conjugate-linear in w.

    J1(z, w) = -z0 conj(w0) + sum_{i>=1} z_i conj(w_i)          (ball form)
    J2(z, w) = z0 conj(w1) + z1 conj(w0) + sum_{i>=2} z_i conj(w_i)   (Siegel form)
    """
    z = np.asarray(z, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    wc = np.conj(w)
    if form == "J1":
        return -z[..., 0] * wc[..., 0] + np.sum(z[..., 1:] * wc[..., 1:], axis=-1)
    if form == "J2":
        return (z[..., 0] * wc[..., 1] + z[..., 1] * wc[..., 0]
                + np.sum(z[..., 2:] * wc[..., 2:], axis=-1))
    raise InputError(f"unknown Hermitian form {form!r}")


def cplx_hyp_distance(form: str, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """cosh^2 d = J(z,w) J(w,z) / (J(z,z) J(w,w)) on negative vectors of the form.

    Scale-invariant in each homogeneous argument.  Raises DomainError when
    either argument is not a negative vector.
    """
    jzz = hermitian_form(form, z, z).real
    jww = hermitian_form(form, w, w).real
    if np.any(jzz >= 0) or np.any(jww >= 0):
        raise DomainError("point not inside the negative cone of the form")
    jzw = hermitian_form(form, z, w)
    c2 = (jzw * np.conj(jzw)).real / (jzz * jww)
    return np.arccosh(np.sqrt(np.clip(c2, 1.0, None)))


def ball_to_homogeneous(p: np.ndarray) -> np.ndarray:
    """Ball-model patch coordinates (2n reals) -> homogeneous (1, z_1..z_n)."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape[-1] % 2 != 0:
        raise InputError("ball coordinates come in (re, im) pairs")
    zc = p[..., 0::2] + 1j * p[..., 1::2]
    ones = np.ones(zc.shape[:-1] + (1,), dtype=np.complex128)
    return np.concatenate([ones, zc], axis=-1)


def siegel_to_homogeneous(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return ball_to_homogeneous(p)  # same (re, im) packing, patch z0 = 1


def horo_to_siegel(p: np.ndarray) -> np.ndarray:
    """(zeta, u, v) -> Siegel patch (z1, z2) = (-v - |zeta|^2 + i u, sqrt(2) zeta).

    The sign of the |zeta|^2 term is forced by the domain inequality:
    -2 Re(z1) - |z2|^2 = 2v, so the image is in the Siegel domain exactly
    when v > 0, and Heisenberg left translations act as exact J2 isometries.
    Input packing: (re zeta, im zeta, u, v); output packing (re z1, im z1,
    re z2, im z2).
    """
    p = np.asarray(p, dtype=np.float64)
    if p.shape[-1] != 4:
        raise InputError("horospherical points are (re zeta, im zeta, u, v)")
    v = p[..., 3]
    if np.any(v <= 0):
        raise DomainError("horospherical height v must be positive")
    out = np.empty_like(p)
    out[..., 0] = -v - (p[..., 0] ** 2 + p[..., 1] ** 2)
    out[..., 1] = p[..., 2]
    out[..., 2] = math.sqrt(2.0) * p[..., 0]
    out[..., 3] = math.sqrt(2.0) * p[..., 1]
    return out


def horo_dilation(s: float, p: np.ndarray) -> np.ndarray:
    """(zeta, u, v) -> (s zeta, s^2 u, s^2 v); a hyperbolic isometry of the Siegel metric."""
    if s <= 0:
        raise DomainError("dilation factor must be positive")
    p = np.asarray(p, dtype=np.float64)
    out = np.array(p, dtype=np.float64)
    out[..., 0] *= s
    out[..., 1] *= s
    out[..., 2] *= s * s
    out[..., 3] *= s * s
    return out


def horo_translate(g: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Left-translate the Heisenberg part of a horospherical point by g = (x, y, u)."""
    p = np.asarray(p, dtype=np.float64)
    out = np.array(p, dtype=np.float64)
    out[..., :3] = heis_multiply(np.asarray(g, dtype=np.float64), p[..., :3])
    return out


# Change of basis with C* A_J2 C = A_J1: ball coordinates z map to Siegel
# homogeneous coordinates Cz, and J2(Cz, Cw) = J1(z, w).
_CAYLEY = np.array([
    [1 / math.sqrt(2), 1 / math.sqrt(2), 0],
    [-1 / math.sqrt(2), 1 / math.sqrt(2), 0],
    [0, 0, 1],
], dtype=np.complex128)


def ball_to_siegel_homogeneous(z: np.ndarray) -> np.ndarray:
    """Map ball-model homogeneous coordinates (C^3) to Siegel-model ones, isometrically."""
    z = np.asarray(z, dtype=np.complex128)
    if z.shape[-1] != 3:
        raise InputError("basis change implemented for complex dimension 2")
    return z @ _CAYLEY.T


# ---------------------------------------------------------------------------
# grid shortest-path metrics


@dataclass(frozen=True)
class GridSpec:
    """Node lattice for a shortest-path metric: a window plus node counts per axis.

    Edges join nodes whose index offsets have Chebyshev radius <= stencil_radius
    and coprime components; weights integrate the line element by the midpoint
    rule.  Query points snap to the nearest node, so the documented error
    budget (about 2 percent for the default stencil) assumes node-aligned or
    densely gridded queries.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    shape: tuple[int, ...]
    stencil_radius: int = 3

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.shape)):
            raise InputError("grid lo/hi/shape lengths differ")
        if any(s < 2 for s in self.shape):
            raise InputError("grid needs at least 2 nodes per axis")
        if self.hi[-1] <= 0 or self.lo[-1] <= 0:
            raise DomainError("grid height window must be positive")

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(l, h, s) for l, h, s in zip(self.lo, self.hi, self.shape)]


def _stencil_offsets(dim: int, radius: int) -> np.ndarray:
    rng = range(-radius, radius + 1)
    offs = []
    for off in np.stack(np.meshgrid(*[list(rng)] * dim, indexing="ij"), axis=-1).reshape(-1, dim):
        if not np.any(off):
            continue
        g = 0
        for c in off:
            g = math.gcd(g, abs(int(c)))
        if g != 1:
            continue
        # one direction per line; the graph is symmetric anyway
        first = next(c for c in off if c != 0)
        if first < 0:
            continue
        offs.append(off)
    return np.asarray(offs, dtype=np.int64)


class _GridGraph:
    def __init__(self, spec: GridSpec, weight_fn):
        from scipy import sparse

        self.spec = spec
        axes = spec.axes()
        mesh = np.meshgrid(*axes, indexing="ij")
        self.coords = np.stack([m.ravel() for m in mesh], axis=-1)
        shape = np.asarray(spec.shape)
        nnodes = int(np.prod(shape))
        strides = np.cumprod(np.concatenate([[1], shape[::-1][:-1]]))[::-1]
        idx = np.arange(nnodes)
        multi = np.stack(np.unravel_index(idx, spec.shape), axis=-1)
        rows, cols, vals = [], [], []
        for off in _stencil_offsets(len(spec.shape), spec.stencil_radius):
            tgt = multi + off
            ok = np.all((tgt >= 0) & (tgt < shape), axis=1)
            src = idx[ok]
            dst = (tgt[ok] * strides).sum(axis=1)
            a = self.coords[src]
            b = self.coords[dst]
            w = weight_fn((a + b) / 2.0, b - a)
            rows.append(src)
            cols.append(dst)
            vals.append(w)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        m = sparse.csr_matrix((vals, (rows, cols)), shape=(nnodes, nnodes))
        self.graph = m.maximum(m.T)  # undirected
        self._axes = axes

    def snap(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        lo = np.asarray(self.spec.lo)
        hi = np.asarray(self.spec.hi)
        if np.any(pts < lo - 1e-12) or np.any(pts > hi + 1e-12):
            raise InputError("point outside grid window")
        shape = np.asarray(self.spec.shape)
        step = (hi - lo) / (shape - 1)
        ind = np.rint((pts - lo) / step).astype(np.int64)
        ind = np.clip(ind, 0, shape - 1)
        strides = np.cumprod(np.concatenate([[1], shape[::-1][:-1]]))[::-1]
        return (ind * strides).sum(axis=1)

    def distances(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        from scipy.sparse import csgraph

        src = self.snap(p)
        dst = self.snap(q)
        out = np.empty(len(src))
        uniq, inv = np.unique(src, return_inverse=True)
        # one Dijkstra run per distinct source, chunked to bound memory
        chunk = 64
        for k0 in range(0, len(uniq), chunk):
            sub = uniq[k0:k0 + chunk]
            dm = csgraph.dijkstra(self.graph, directed=False, indices=sub)
            for local, s in enumerate(sub):
                mask = src == s
                out[mask] = dm[local, dst[mask]]
        return out


@lru_cache(maxsize=16)
def _twisted_grid(lam: tuple[int, ...], spec: GridSpec) -> _GridGraph:
    exps = np.asarray(lam, dtype=np.float64)

    def weight(mid, delta):
        t = mid[:, -1]
        g = np.sum((t[:, None] ** (-2.0 * exps)) * delta[:, :-1] ** 2, axis=1)
        g += delta[:, -1] ** 2 / t**2
        return np.sqrt(g)

    return _GridGraph(spec, weight)


def twisted_halfspace_distance(lam: tuple[int, ...], p: np.ndarray, q: np.ndarray,
                               grid: GridSpec) -> np.ndarray:
    """Shortest-path distance for ds^2 = sum_i t^(-2 lambda_i) dx_i^2 + t^-2 dt^2.

    The line element is invariant under integer base translations and under
    (x, t) -> (2^lambda x, 2t); lambda = (1,) recovers the hyperbolic plane.
    """
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if p.shape[-1] != len(lam) + 1 or q.shape[-1] != len(lam) + 1:
        raise InputError(f"expected {len(lam) + 1} coordinates")
    if np.any(p[:, -1] <= 0) or np.any(q[:, -1] <= 0):
        raise DomainError("heights must be positive")
    g = _twisted_grid(tuple(int(v) for v in lam), grid)
    return g.distances(p, q)


@dataclass(frozen=True)
class BumpParams:
    """Conformal factor for the bump half-plane: f(t) = 1 + amplitude * w(s).

    s = frac(log_a t) and w is a raised cosine supported on [1/4, 3/4], so f
    equals 1 near every height a^k and the factor is a-periodic in log t.
    """

    a: float
    amplitude: float
    grid: GridSpec

    def __post_init__(self):
        if self.a <= 1:
            raise InputError("period factor a must exceed 1")
        if self.amplitude < 0:
            raise InputError("amplitude must be nonnegative")

    def factor(self, t: np.ndarray) -> np.ndarray:
        s = np.log(np.asarray(t, dtype=np.float64)) / math.log(self.a)
        s = s - np.floor(s)
        w = np.where((s > 0.25) & (s < 0.75),
                     np.sin(np.pi * (s - 0.25) / 0.5) ** 2, 0.0)
        return 1.0 + self.amplitude * w


@lru_cache(maxsize=16)
def _bump_grid(params: BumpParams) -> _GridGraph:
    def weight(mid, delta):
        t = mid[:, -1]
        base = (delta[:, 0] ** 2 + delta[:, 1] ** 2) / t**2
        return np.sqrt(params.factor(t) * base)

    return _GridGraph(params.grid, weight)


def bump_halfplane_distance(params: BumpParams, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Grid distance for the conformally perturbed half-plane metric f(t) ds_hyp^2."""
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    if p.shape[-1] != 2 or q.shape[-1] != 2:
        raise InputError("bump half-plane points are (x, t)")
    if np.any(p[:, -1] <= 0) or np.any(q[:, -1] <= 0):
        raise DomainError("heights must be positive")
    return _bump_grid(params).distances(p, q)
