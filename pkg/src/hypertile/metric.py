"""Distortion estimators: hyperbolicity defect, quasi-isometry constants,
quasi-symmetry moduli, and injectivity-scale checks.

Every estimator is a deterministic function of its inputs and a seed, reports
the witness samples attaining its constants, and combines samples only
through order-independent reductions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .sampling import Sampler
from .spaces import SpaceHandle, distance

DEFAULT_L_GRID = tuple(float(v) for v in np.exp2(np.arange(49) / 8.0))  # 1 .. 64, geometric
DEFAULT_ALPHA_GRID = (1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0)


@dataclass(frozen=True)
class QsModulus:
    """Control function eta(t) = c * max(t^alpha, t^(1/alpha)); eta(1) = c."""

    alpha: float
    c: float

    def __post_init__(self):
        if self.alpha < 1 or self.c < 1:
            raise InputError("modulus needs alpha >= 1 and c >= 1")

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        return self.c * np.maximum(t**self.alpha, t ** (1.0 / self.alpha))


@dataclass(frozen=True)
class QiConstants:
    """Multiplicative / additive distortion pair, L >= 1 and C >= 0."""

    L: float
    C: float

    def __post_init__(self):
        if self.L < 1 or self.C < 0:
            raise InputError("need L >= 1 and C >= 0")


@dataclass
class DistortionReport:
    """Fitted constants plus the witnesses that attain them."""

    qi: QiConstants | None = None
    qi_witness: tuple | None = None
    qi_saturated: bool = False
    eta: QsModulus | None = None
    eta_witness: tuple | None = None
    delta_estimate: float | None = None
    delta_witness: tuple | None = None
    local_bilip: list = field(default_factory=list)
    sample_count: int = 0
    seed: int = 0

    def to_dict(self) -> dict:
        def arr(x):
            if x is None:
                return None
            return [np.asarray(a).tolist() for a in x]

        return {
            "qi": None if self.qi is None else {"L": self.qi.L, "C": self.qi.C,
                                                "saturated": self.qi_saturated},
            "qi_witness": arr(self.qi_witness),
            "eta": None if self.eta is None else {"alpha": self.eta.alpha, "c": self.eta.c},
            "eta_witness": arr(self.eta_witness),
            "delta_estimate": self.delta_estimate,
            "delta_witness": arr(self.delta_witness),
            "local_bilip": [
                {"scale": s.scale, "constant": s.constant, "min_ratio": s.min_ratio,
                 "max_ratio": s.max_ratio, "pair_count": s.pair_count}
                for s in self.local_bilip
            ],
            "sample_count": self.sample_count,
            "seed": self.seed,
        }


def gromov_product(space: SpaceHandle, x: np.ndarray, x2: np.ndarray, y: np.ndarray) -> np.ndarray:
    """(x | x2)_y = (d(x, y) + d(y, x2) - d(x, x2)) / 2."""
    return 0.5 * (distance(space, x, y) + distance(space, y, x2) - distance(space, x, x2))


@dataclass(frozen=True)
class DeltaEstimate:
    value: float
    witness: tuple
    sample_count: int
    seed: int


def delta_four_point_estimate(space: SpaceHandle, sampler: Sampler) -> DeltaEstimate:
    """Max over sampled quadruples (x, x', x'', y) of
    min((x|x')_y, (x'|x'')_y) - (x|x'')_y, clamped below at zero.

    Monotone nondecreasing in the sample set; the witness quadruple attains
    the max.
    """
    if sampler.count < 4:
        raise InputError("need at least 4 quadruples")
    pts = sampler.points(points_per_sample=4)
    x, x1, x2, y = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
    g_xx1 = gromov_product(space, x, x1, y)
    g_x1x2 = gromov_product(space, x1, x2, y)
    g_xx2 = gromov_product(space, x, x2, y)
    defect = np.minimum(g_xx1, g_x1x2) - g_xx2
    k = int(np.argmax(defect))
    return DeltaEstimate(float(max(0.0, defect[k])), (x[k], x1[k], x2[k], y[k]),
                         sampler.count, sampler.seed)


@dataclass(frozen=True)
class QiFit:
    qi: QiConstants
    saturated: bool
    witness: tuple
    sample_count: int
    seed: int


def fit_qi_from_distances(d_src: np.ndarray, d_img: np.ndarray,
                          l_grid: tuple[float, ...] = DEFAULT_L_GRID) -> tuple[QiConstants, bool, int]:
    """Smallest additive slack per grid L, then the (L, C) minimizing L + C.

    Returns (constants, saturated-at-grid-max flag, witness index).  C for a
    given L is the least value making
    -C + d_src / L <= d_img <= L * d_src + C hold on every sample.
    """
    d_src = np.asarray(d_src, dtype=np.float64)
    d_img = np.asarray(d_img, dtype=np.float64)
    grid = np.asarray(l_grid, dtype=np.float64)
    up = d_img[None, :] - grid[:, None] * d_src[None, :]
    dn = d_src[None, :] / grid[:, None] - d_img[None, :]
    slack = np.maximum(up, dn)  # (len(grid), samples)
    c_per_l = np.maximum(0.0, slack.max(axis=1))
    score = grid + c_per_l
    k = int(np.argmin(score))  # argmin takes the first (smallest L) among ties
    witness = int(np.argmax(slack[k]))
    return QiConstants(float(grid[k]), float(c_per_l[k])), k == len(grid) - 1, witness


def fit_qi_constants(source: SpaceHandle, target: SpaceHandle, map_fn, sampler: Sampler,
                     l_grid: tuple[float, ...] = DEFAULT_L_GRID) -> QiFit:
    """Fit (L, C) of a map over sampled pairs.

    Only the two-sided distance inequality is fitted; coarse surjectivity onto
    an L-neighborhood is not checked, so the result certifies a quasi-isometry
    into the target.  When even the largest grid L needs slack, the fit is
    reported at the grid max with ``saturated`` set.
    """
    pts = sampler.points(points_per_sample=2)
    p, q = pts[:, 0], pts[:, 1]
    d_src = distance(source, p, q)
    keep = d_src > 0
    p, q, d_src = p[keep], q[keep], d_src[keep]
    d_img = distance(target, map_fn(p), map_fn(q))
    qi, saturated, w = fit_qi_from_distances(d_src, d_img, l_grid)
    return QiFit(qi, saturated, (p[w], q[w]), int(keep.sum()), sampler.seed)


@dataclass(frozen=True)
class QsCheck:
    passed: bool
    max_violation_ratio: float
    witness: tuple
    collapsed: bool
    sample_count: int
    seed: int


def _triple_ratios(space: SpaceHandle, map_fn, sampler: Sampler):
    pts = sampler.points(points_per_sample=3)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    den_src = distance(space, x, z)
    keep = den_src > 0
    x, y, z, den_src = x[keep], y[keep], z[keep], den_src[keep]
    t_src = distance(space, x, y) / den_src
    gx, gy, gz = map_fn(x), map_fn(y), map_fn(z)
    den_img = distance(space, gx, gz)
    num_img = distance(space, gx, gy)
    return x, y, z, t_src, num_img, den_img


def check_quasi_symmetry(space: SpaceHandle, map_fn, eta: QsModulus, sampler: Sampler,
                         triples: tuple | None = None) -> QsCheck:
    """Verify d(gx, gy) / d(gx, gz) <= eta(d(x, y) / d(x, z)) on sampled triples.

    ``triples`` may supply explicit (x, y, z) arrays in place of the sampler.
    A collapsed image pair (gx = gz) fails with its witness.
    """
    if triples is not None:
        x, y, z = (np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in triples)
        den_src = distance(space, x, z)
        keep = den_src > 0
        x, y, z, den_src = x[keep], y[keep], z[keep], den_src[keep]
        t_src = distance(space, x, y) / den_src
        gx, gy, gz = map_fn(x), map_fn(y), map_fn(z)
        den_img = distance(space, gx, gz)
        num_img = distance(space, gx, gy)
        seed, total = 0, int(keep.sum())
    else:
        x, y, z, t_src, num_img, den_img = _triple_ratios(space, map_fn, sampler)
        seed, total = sampler.seed, len(t_src)
    bad = den_img == 0
    if np.any(bad):
        k = int(np.argmax(bad))
        return QsCheck(False, np.inf, (x[k], y[k], z[k]), True, total, seed)
    violation = (num_img / den_img) / eta(t_src)
    k = int(np.argmax(violation))
    worst = float(violation[k])
    return QsCheck(worst <= 1.0 + 1e-12, worst, (x[k], y[k], z[k]), False, total, seed)


@dataclass(frozen=True)
class QsFit:
    modulus: QsModulus
    witness: tuple
    sample_count: int
    seed: int


def fit_qs_modulus(space: SpaceHandle, map_fn, alpha_grid: tuple[float, ...],
                   sampler: Sampler) -> QsFit:
    """For each alpha, the least c >= 1 covering all sampled triples; returns
    the (alpha, c) with minimal c, ties resolved toward the smallest alpha."""
    x, y, z, t_src, num_img, den_img = _triple_ratios(space, map_fn, sampler)
    ok = den_img > 0
    x, y, z, t_src = x[ok], y[ok], z[ok], t_src[ok]
    t_img = num_img[ok] / den_img[ok]
    best = None
    for alpha in alpha_grid:
        base = np.maximum(t_src**alpha, t_src ** (1.0 / alpha))
        req = t_img / base
        k = int(np.argmax(req))
        c = max(1.0, float(req[k]))
        if best is None or c < best[1] - 1e-15:
            best = (alpha, c, k)
    alpha, c, k = best
    return QsFit(QsModulus(alpha, c), (x[k], y[k], z[k]), len(t_src), sampler.seed)


@dataclass(frozen=True)
class PairSet:
    """Explicit pair sample (P[i], Q[i]) handed to pairwise checks."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        if np.asarray(self.p).shape != np.asarray(self.q).shape:
            raise InputError("pair arrays must have equal shapes")


def box_pairs(sampler: Sampler) -> PairSet:
    pts = sampler.points(points_per_sample=2)
    return PairSet(pts[:, 0], pts[:, 1])


@dataclass(frozen=True)
class InjectivityResult:
    passed: bool
    small_scale_ok: bool
    large_scale_ok: bool
    witness_small: tuple | None
    witness_large: tuple | None
    small_band_count: int
    large_band_count: int


def injectivity_scale_check(space: SpaceHandle, map_fn, r: float, epsilon: float,
                            pairs: PairSet) -> InjectivityResult:
    """Two-band separation check behind local-implies-global injectivity.

    (a) pairs with d(p, q) in [r/2, r) must have image distance > epsilon/10
        (points just below the injectivity radius stay separated), and
    (b) pairs with d(p, q) >= r must have image distance >= epsilon.
    Pairs below r/2 carry no fixed threshold: any continuous map sends them
    arbitrarily close together.  Failures carry their witness pair.
    """
    if r <= 0 or epsilon <= 0:
        raise InputError("need r > 0 and epsilon > 0")
    d_src = distance(space, pairs.p, pairs.q)
    d_img = distance(space, map_fn(pairs.p), map_fn(pairs.q))
    small = (d_src >= r / 2) & (d_src < r)
    large = d_src >= r
    witness_small = witness_large = None
    small_ok = True
    if np.any(small):
        margins = d_img[small] - epsilon / 10.0
        k = int(np.argmin(margins))
        if margins[k] <= 0:
            small_ok = False
            idx = np.flatnonzero(small)[k]
            witness_small = (pairs.p[idx], pairs.q[idx])
    large_ok = True
    if np.any(large):
        margins = d_img[large] - epsilon
        k = int(np.argmin(margins))
        if margins[k] < 0:
            large_ok = False
            idx = np.flatnonzero(large)[k]
            witness_large = (pairs.p[idx], pairs.q[idx])
    return InjectivityResult(small_ok and large_ok, small_ok, large_ok,
                             witness_small, witness_large,
                             int(small.sum()), int(large.sum()))


@dataclass(frozen=True)
class ScaleStats:
    """Distance-ratio extremes for pairs probed at one scale."""

    scale: float
    min_ratio: float
    max_ratio: float
    constant: float  # max(max_ratio, 1 / min_ratio)
    pair_count: int
    witness_min: tuple
    witness_max: tuple


def ratio_stats(scale: float, d_src: np.ndarray, d_img: np.ndarray,
                p: np.ndarray, q: np.ndarray) -> ScaleStats:
    keep = d_src > 0
    d_src, d_img, p, q = d_src[keep], d_img[keep], p[keep], q[keep]
    ratios = d_img / d_src
    kmin = int(np.argmin(ratios))
    kmax = int(np.argmax(ratios))
    mn, mx = float(ratios[kmin]), float(ratios[kmax])
    constant = max(mx, np.inf if mn == 0 else 1.0 / mn)
    return ScaleStats(scale, mn, mx, float(constant), len(ratios),
                      (p[kmin], q[kmin]), (p[kmax], q[kmax]))
