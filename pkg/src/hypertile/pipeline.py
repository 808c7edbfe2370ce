"""Tile-wise bi-Lipschitz approximation of a lifted boundary map on a window
of the hyperbolic plane.

The window is tiled by the dyadic decomposition, the tile graph is colored,
and the lift is approximated color by color: a piecewise-linear map per tile
(vertex images are lift values), then a partition-of-unity blend across each
tile's collar against what is already placed.  Blending stands in for a
non-constructive extension step, so the result is verified after the fact:
injectivity at the configured scale, distance-ratio bounds at several scales,
seam continuity, and boundary agreement.  All meshes are sub-lattices of one
global grid (uniform in x, geometric in t), which keeps the assembled map
continuous across every tile boundary by construction.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InputError
from .lifting import BoundaryMap, LiftedMap, lift_eval
from .metric import InjectivityResult, PairSet, ScaleStats, injectivity_scale_check, ratio_stats
from .models import halfspace_distance
from .sampling import Box, halfspace_pairs_at_scales, unit_uniforms
from .spaces import half_space
from .tiling import TileGraph, TileId, adjacency_graph, builtin_spec, greedy_coloring, tiles_in_window


@dataclass(frozen=True)
class PipelineConfig:
    """Window, budgets, and scales for one approximation run.

    epsilon is the final deviation budget (hyperbolic metric); the per-color
    budgets form the geometric ladder eps_i = epsilon * 2^(i - N) for the
    window's N colors, so earlier colors are approximated strictly tighter.
    The injectivity check runs at radius r_scale with separation threshold
    epsilon / 10.
    """

    layer_min: int = -3
    layer_max: int = 0
    x_min: float = -2.0
    x_max: float = 2.0
    grid_density: int = 16
    epsilon: float = 0.05
    collar_width: float = 0.25
    r_scale: float = 0.4
    max_refinements: int = 3
    sample_count: int = 10000
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.collar_width < 0.5):
            raise InputError("collar_width must lie strictly between 0 and 1/2")
        if self.epsilon <= 0:
            raise InputError("epsilon must be positive")
        if self.layer_min > self.layer_max:
            raise InputError("layer_min must not exceed layer_max")
        if self.x_min >= self.x_max:
            raise InputError("window must have positive width")
        if self.grid_density < 2:
            raise InputError("grid_density must be at least 2")
        if self.r_scale <= 0:
            raise InputError("r_scale must be positive")
        if self.max_refinements < 0 or self.max_refinements > 3:
            raise InputError("max_refinements must be between 0 and 3")

    def epsilon_ladder(self, n_colors: int) -> tuple[float, ...]:
        return tuple(self.epsilon * 2.0 ** (i - n_colors) for i in range(1, n_colors + 1))

    @property
    def t_min(self) -> float:
        return 2.0**self.layer_min

    @property
    def t_max(self) -> float:
        return 2.0 ** (self.layer_max + 1)


@dataclass(frozen=True)
class MeshSpec:
    """Triangulated grid: x uniform, rows at t = 2^(tau0 + j htau), cells split
    along the v00 -> v11 diagonal."""

    x0: float
    hx: float
    nx: int  # cell count
    tau0: float
    htau: float
    ntau: int  # cell count

    @property
    def n_vertices(self) -> int:
        return (self.nx + 1) * (self.ntau + 1)

    def xs(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx + 1)

    def ts(self) -> np.ndarray:
        return np.exp2(self.tau0 + self.htau * np.arange(self.ntau + 1))

    def vertex_coords(self) -> np.ndarray:
        X, T = np.meshgrid(self.xs(), self.ts(), indexing="xy")
        return np.stack([X.ravel(), T.ravel()], axis=1)  # index j * (nx+1) + i

    def locate(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        i = np.floor((pts[:, 0] - self.x0) / self.hx).astype(np.int64)
        jf = (np.log2(pts[:, 1]) - self.tau0) / self.htau
        j = np.floor(jf + 1e-12).astype(np.int64)
        return np.clip(i, 0, self.nx - 1), np.clip(j, 0, self.ntau - 1)


@dataclass
class PLMap2D:
    """Piecewise-linear map: per-vertex image points, barycentric interpolation
    inside each mesh triangle (in (x, t) coordinates)."""

    mesh: MeshSpec
    images: np.ndarray  # (n_vertices, 2)

    def eval_in_cell(self, pts: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """Linear evaluation using cell (i, j)'s triangles (extends affinely)."""
        m = self.mesh
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        x_i = m.x0 + m.hx * i
        t_j = np.exp2(m.tau0 + m.htau * j)
        t_j1 = np.exp2(m.tau0 + m.htau * (j + 1))
        u = (pts[:, 0] - x_i) / m.hx
        w = (pts[:, 1] - t_j) / (t_j1 - t_j)
        stride = m.nx + 1
        v00 = self.images[j * stride + i]
        v10 = self.images[j * stride + i + 1]
        v01 = self.images[(j + 1) * stride + i]
        v11 = self.images[(j + 1) * stride + i + 1]
        lower = (u >= w)[:, None]
        lo_val = v00 + u[:, None] * (v10 - v00) + w[:, None] * (v11 - v10)
        hi_val = v00 + w[:, None] * (v01 - v00) + u[:, None] * (v11 - v01)
        return np.where(lower, lo_val, hi_val)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        i, j = self.mesh.locate(pts)
        return self.eval_in_cell(pts, i, j)

    def triangles(self) -> np.ndarray:
        m = self.mesh
        stride = m.nx + 1
        tris = []
        for j in range(m.ntau):
            for i in range(m.nx):
                v00 = j * stride + i
                v10 = v00 + 1
                v01 = v00 + stride
                v11 = v01 + 1
                tris.append((v00, v10, v11))
                tris.append((v00, v11, v01))
        return np.asarray(tris, dtype=np.int64)


def export_mesh(plmap: PLMap2D) -> str:
    """Plain-text mesh: `v x t fx ft` per vertex then `f i j k` per triangle
    (0-based vertex indices), in stable row-major order."""
    coords = plmap.mesh.vertex_coords()
    lines = [f"v {x:.17g} {t:.17g} {fx:.17g} {ft:.17g}"
             for (x, t), (fx, ft) in zip(coords, plmap.images)]
    lines += [f"f {a} {b} {c}" for a, b, c in plmap.triangles()]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TileApprox:
    """Per-tile PL approximation of the lift on the tile enlarged by its collar."""

    tile: TileId
    plmap: PLMap2D
    deviation: float
    refinements: int
    density: int
    within_budget: bool


def _tile_bounds(tile: TileId) -> tuple[float, float, float, float]:
    """(x_lo, x_hi, tau_lo, tau_hi) of a dyadic(1) half-plane tile."""
    w = 2.0**tile.layer
    k = tile.gamma[0]
    return (w * k, w * (k + 1), float(tile.layer), float(tile.layer + 1))


def _hyp_deviation(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return halfspace_distance(a, b)


def _tile_probe_points(tile: TileId, density: int) -> np.ndarray:
    """Half-offset lattice inside the tile where PL error peaks (cell middles)."""
    x_lo, x_hi, tau_lo, tau_hi = _tile_bounds(tile)
    n = min(2 * density, 64)
    fx = (np.arange(n) + 0.5) / n
    ft = (np.arange(n) + 0.5) / n
    X, FT = np.meshgrid(x_lo + fx * (x_hi - x_lo), np.exp2(tau_lo + ft * (tau_hi - tau_lo)),
                        indexing="xy")
    return np.stack([X.ravel(), FT.ravel()], axis=1)


def pl_approximate_tile(lift: LiftedMap, tile: TileId, config: PipelineConfig,
                        eps_budget: float | None = None) -> TileApprox:
    """PL approximation of the lift on one tile plus its collar.

    Vertex images are lift values; the sampled deviation from the lift inside
    the tile (hyperbolic metric) must meet the budget, else the grid density
    doubles, up to max_refinements, before the tile is reported out of budget.
    """
    budget = config.epsilon if eps_budget is None else eps_budget
    x_lo, x_hi, tau_lo, tau_hi = _tile_bounds(tile)
    density = config.grid_density
    refinements = 0
    while True:
        ccells = max(1, round(config.collar_width * density))
        hx = (x_hi - x_lo) / density
        htau = 1.0 / density
        mesh = MeshSpec(x_lo - ccells * hx, hx, density + 2 * ccells,
                        tau_lo - ccells * htau, htau, density + 2 * ccells)
        images = lift_eval(lift, mesh.vertex_coords())
        plmap = PLMap2D(mesh, images)
        probes = _tile_probe_points(tile, density)
        dev = float(np.max(_hyp_deviation(plmap(probes), lift_eval(lift, probes))))
        if dev <= budget or refinements >= config.max_refinements:
            return TileApprox(tile, plmap, dev, refinements, density, dev <= budget)
        density *= 2
        refinements += 1


@dataclass
class Patchwork:
    """Progressively assembled global PL map plus bookkeeping."""

    plmap: PLMap2D
    defined: np.ndarray  # (n_vertices,) bool
    placed: list = field(default_factory=list)
    orientation_failures: list = field(default_factory=list)


def _smoothstep(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def blend_collar(patchwork: Patchwork, approx: TileApprox, config: PipelineConfig) -> Patchwork:
    """Blend a tile approximation into the patchwork across its collar.

    On the collar ring the vertex images become (1 - phi) existing + phi new
    in (x, t) coordinates, where phi ramps smoothly from 1 at the tile
    boundary to 0 at the outer collar edge; inside the tile the new values
    win, outside the collar nothing changes, and vertices with no previous
    value take the new one.  Image triangles of the affected cells are
    orientation-checked; degenerate ones are recorded with their witness.
    """
    mesh = patchwork.plmap.mesh
    x_lo, x_hi, tau_lo, tau_hi = _tile_bounds(approx.tile)
    cw_x = config.collar_width * (x_hi - x_lo)
    cw_tau = config.collar_width
    coords = mesh.vertex_coords()
    x = coords[:, 0]
    tau = np.log2(coords[:, 1])
    in_region = ((x >= x_lo - cw_x - 1e-12) & (x <= x_hi + cw_x + 1e-12)
                 & (tau >= tau_lo - cw_tau - 1e-9) & (tau <= tau_hi + cw_tau + 1e-9))
    idx = np.flatnonzero(in_region)
    out_x = np.maximum(0.0, np.maximum(x_lo - x[idx], x[idx] - x_hi)) / cw_x
    out_tau = np.maximum(0.0, np.maximum(tau_lo - tau[idx], tau[idx] - tau_hi)) / cw_tau
    phi = _smoothstep(1.0 - np.maximum(out_x, out_tau))
    new_vals = approx.plmap(coords[idx])
    images = patchwork.plmap.images.copy()
    have = patchwork.defined[idx]
    mixed = np.where(have[:, None], (1.0 - phi[:, None]) * images[idx] + phi[:, None] * new_vals,
                     new_vals)
    images[idx] = mixed
    defined = patchwork.defined.copy()
    defined[idx] = True
    new_plmap = PLMap2D(mesh, images)
    failures = list(patchwork.orientation_failures)
    tris = _region_triangles(mesh, x_lo - cw_x, x_hi + cw_x, tau_lo - cw_tau, tau_hi + cw_tau)
    if len(tris):
        a = images[tris[:, 0]]
        b = images[tris[:, 1]]
        c = images[tris[:, 2]]
        cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        bad = (cross <= 0) & defined[tris].all(axis=1)
        for k in np.flatnonzero(bad):
            failures.append({"tile": approx.tile, "triangle": tris[k].tolist(),
                             "orientation": float(cross[k])})
    return Patchwork(new_plmap, defined, patchwork.placed + [approx.tile], failures)


def _region_triangles(mesh: MeshSpec, x_lo, x_hi, tau_lo, tau_hi) -> np.ndarray:
    i0 = max(0, int(math.floor((x_lo - mesh.x0) / mesh.hx)))
    i1 = min(mesh.nx, int(math.ceil((x_hi - mesh.x0) / mesh.hx)))
    j0 = max(0, int(math.floor((tau_lo - mesh.tau0) / mesh.htau)))
    j1 = min(mesh.ntau, int(math.ceil((tau_hi - mesh.tau0) / mesh.htau)))
    stride = mesh.nx + 1
    tris = []
    for j in range(j0, j1):
        for i in range(i0, i1):
            v00 = j * stride + i
            tris.append((v00, v00 + 1, v00 + stride + 1))
            tris.append((v00, v00 + stride + 1, v00 + stride))
    return np.asarray(tris, dtype=np.int64) if tris else np.zeros((0, 3), dtype=np.int64)


@dataclass
class ApproxReport:
    """Everything a run measured, plus the stage it failed at if it did.

    Collar blending replaces a non-constructive extension step, so the
    bi-Lipschitz behavior of the output is measured on samples rather than
    guaranteed; that caveat ships in ``blending_note`` with every report.
    """

    status: str = "ok"
    color_count: int = 0
    ladder: tuple[float, ...] = ()
    per_tile: list = field(default_factory=list)
    stage_deviations: list = field(default_factory=list)
    injectivity: InjectivityResult | None = None
    bilip: list = field(default_factory=list)
    boundary_max_dev: float | None = None
    seam_max_gap: float | None = None
    orientation_failures: list = field(default_factory=list)
    final_density: int = 0
    sullivan_gap_measured: bool = True
    blending_note: str = ("collar blending replaces a non-constructive extension step; "
                          "bi-Lipschitz bounds are measured on samples, not guaranteed")
    wall_time_s: dict = field(default_factory=dict)
    seed: int = 0

    def to_dict(self, include_walltime: bool = True) -> dict:
        d = {
            "status": self.status,
            "color_count": self.color_count,
            "ladder": list(self.ladder),
            "per_tile": [
                {"tile": [t["tile"].layer, list(t["tile"].gamma)], "color": t["color"],
                 "deviation": t["deviation"], "refinements": t["refinements"],
                 "density": t["density"]}
                for t in self.per_tile
            ],
            "stage_deviations": self.stage_deviations,
            "injectivity": None if self.injectivity is None else {
                "passed": self.injectivity.passed,
                "small_scale_ok": self.injectivity.small_scale_ok,
                "large_scale_ok": self.injectivity.large_scale_ok,
                "small_band_count": self.injectivity.small_band_count,
                "large_band_count": self.injectivity.large_band_count,
            },
            "bilip": [{"scale": s.scale, "min_ratio": s.min_ratio, "max_ratio": s.max_ratio,
                       "constant": s.constant, "pair_count": s.pair_count} for s in self.bilip],
            "boundary_max_dev": self.boundary_max_dev,
            "seam_max_gap": self.seam_max_gap,
            "orientation_failures": [
                {"tile": [f["tile"].layer, list(f["tile"].gamma)],
                 "triangle": f["triangle"], "orientation": f["orientation"]}
                for f in self.orientation_failures
            ],
            "final_density": self.final_density,
            "blending_note": self.blending_note,
            "seed": self.seed,
        }
        if include_walltime:
            d["wall_time_s"] = dict(self.wall_time_s)
        return d


def _assert_same_color_separation(graph: TileGraph, config: PipelineConfig) -> None:
    """Enlarged same-color tiles must stay disjoint (collar precondition)."""
    by_color: dict[int, list[TileId]] = {}
    for tid, col in zip(graph.tiles, graph.coloring):
        by_color.setdefault(col, []).append(tid)
    for col, tiles in by_color.items():
        for i in range(len(tiles)):
            for j in range(i + 1, len(tiles)):
                a = _enlarged_bounds(tiles[i], config.collar_width)
                b = _enlarged_bounds(tiles[j], config.collar_width)
                if a[0] < b[1] and b[0] < a[1] and a[2] < b[3] and b[2] < a[3]:
                    raise InputError(
                        f"collar_width {config.collar_width} makes same-color tiles "
                        f"{tiles[i]} and {tiles[j]} overlap")


def _enlarged_bounds(tile: TileId, collar: float) -> tuple[float, float, float, float]:
    x_lo, x_hi, tau_lo, tau_hi = _tile_bounds(tile)
    cx = collar * (x_hi - x_lo)
    return (x_lo - cx, x_hi + cx, tau_lo - collar, tau_hi + collar)


def _seam_gap(plmap: PLMap2D, count: int, seed: int) -> float:
    """Max disagreement of the two cells meeting at sampled edge points."""
    m = plmap.mesh
    u = unit_uniforms(seed, count, 3, stream=7)
    worst = 0.0
    # vertical edges
    i = 1 + np.floor(u[:, 0] * (m.nx - 1)).astype(np.int64)
    j = np.floor(u[:, 1] * m.ntau).astype(np.int64)
    t_lo = np.exp2(m.tau0 + m.htau * j)
    t_hi = np.exp2(m.tau0 + m.htau * (j + 1))
    pts = np.stack([m.x0 + m.hx * i, t_lo + u[:, 2] * (t_hi - t_lo)], axis=1)
    va = plmap.eval_in_cell(pts, i - 1, j)
    vb = plmap.eval_in_cell(pts, i, j)
    worst = max(worst, float(np.max(np.abs(va - vb))))
    # horizontal edges
    j2 = 1 + np.floor(u[:, 1] * (m.ntau - 1)).astype(np.int64)
    i2 = np.floor(u[:, 0] * m.nx).astype(np.int64)
    pts2 = np.stack([m.x0 + m.hx * i2 + u[:, 2] * m.hx, np.exp2(m.tau0 + m.htau * j2)], axis=1)
    va2 = plmap.eval_in_cell(pts2, i2, j2 - 1)
    vb2 = plmap.eval_in_cell(pts2, i2, j2)
    worst = max(worst, float(np.max(np.abs(va2 - vb2))))
    return worst


def run_pipeline(f: BoundaryMap, config: PipelineConfig) -> tuple[PLMap2D | None, ApproxReport]:
    """Color-ordered tile approximation of the lift of ``f`` with verification.

    Steps: tile and color the window; PL-approximate every tile against the
    first rung of the budget ladder; assemble color by color with collar
    blending; then check injectivity at scale r, measure distance ratios at
    {r/4, r, 4r}, and verify seam continuity and boundary agreement.  Any
    stage failure is reported with its stage tag and witnesses; no partial map
    is returned silently.
    """
    report = ApproxReport(seed=config.seed)
    t_start = time.perf_counter()
    if f.base.model != "euclidean" or f.base.point_dim != 1:
        report.status = "failed:config"
        return None, report
    lift = LiftedMap(f)
    spec = builtin_spec("dyadic-euclidean", n=1)

    stage = time.perf_counter()
    tiles = tiles_in_window(spec, (config.layer_min, config.layer_max),
                            Box((config.x_min,), (config.x_max,)))
    graph = greedy_coloring(adjacency_graph(spec, tiles))
    n_colors = graph.color_count
    ladder = config.epsilon_ladder(n_colors)
    report.color_count = n_colors
    report.ladder = ladder
    try:
        _assert_same_color_separation(graph, config)
    except InputError:
        report.status = "failed:collar-disjointness"
        return None, report
    report.wall_time_s["tiling"] = time.perf_counter() - stage

    # per-tile approximation against the tightest budget
    stage = time.perf_counter()
    approxes: dict[TileId, TileApprox] = {}
    for tid in graph.tiles:
        ap = pl_approximate_tile(lift, tid, config, eps_budget=ladder[0])
        approxes[tid] = ap
        report.per_tile.append({"tile": tid, "color": graph.color_of(tid),
                                "deviation": ap.deviation, "refinements": ap.refinements,
                                "density": ap.density})
        if not ap.within_budget:
            report.status = "failed:pl-approximation"
            return None, report
    report.wall_time_s["pl_approximation"] = time.perf_counter() - stage

    # one conforming global mesh at the finest density any tile needed
    stage = time.perf_counter()
    density_max = max(ap.density for ap in approxes.values())
    rel = density_max / 2.0**config.layer_min
    hx = 1.0 / rel
    nx = round((config.x_max - config.x_min) * rel)
    ntau = (config.layer_max + 1 - config.layer_min) * density_max
    mesh = MeshSpec(config.x_min, hx, nx, float(config.layer_min), 1.0 / density_max, ntau)
    report.final_density = density_max
    patchwork = Patchwork(PLMap2D(mesh, np.zeros((mesh.n_vertices, 2))),
                          np.zeros(mesh.n_vertices, dtype=bool))

    order = sorted(graph.tiles, key=lambda t: (graph.color_of(t), t))
    current_color = None
    for tid in order:
        col = graph.color_of(tid)
        if current_color is not None and col != current_color:
            dev = _placed_deviation(patchwork, lift, approxes)
            report.stage_deviations.append({"color": current_color + 1, "max_deviation": dev,
                                            "budget": ladder[current_color]})
            if dev > ladder[current_color]:
                report.status = "failed:error-ladder"
                return None, report
        current_color = col
        patchwork = blend_collar(patchwork, approxes[tid], config)
    dev = _placed_deviation(patchwork, lift, approxes)
    report.stage_deviations.append({"color": current_color + 1, "max_deviation": dev,
                                    "budget": ladder[current_color]})
    report.orientation_failures = patchwork.orientation_failures
    if dev > ladder[current_color]:
        report.status = "failed:error-ladder"
        return None, report
    if patchwork.orientation_failures:
        report.status = "failed:blending-orientation"
        return None, report
    if not patchwork.defined.all():
        report.status = "failed:coverage"
        return None, report
    report.wall_time_s["assembly"] = time.perf_counter() - stage

    plmap = patchwork.plmap

    # verification stages
    stage = time.perf_counter()
    xs = mesh.xs()
    bottom = plmap.images[: mesh.nx + 1]
    f_vals = f(xs[:, None])[:, 0]
    report.boundary_max_dev = float(np.max(np.abs(bottom[:, 0] - f_vals)))
    report.seam_max_gap = _seam_gap(plmap, 2000, config.seed)
    r = config.r_scale
    eps_inj = config.epsilon / 10.0
    p, q, _ = halfspace_pairs_at_scales(Box((config.x_min,), (config.x_max,)),
                                        (config.t_min, config.t_max), config.sample_count,
                                        config.seed, r / 2.0, 4.0 * r, stream=21)
    hplane = half_space(1)
    report.injectivity = injectivity_scale_check(hplane, plmap, r, eps_inj, PairSet(p, q))
    report.bilip = measure_bilipschitz(plmap, (r / 4.0, r, 4.0 * r), config)
    report.wall_time_s["verification"] = time.perf_counter() - stage
    report.wall_time_s["total"] = time.perf_counter() - t_start

    checks = [report.boundary_max_dev <= config.epsilon,
              report.seam_max_gap <= 1e-12,
              report.injectivity.passed]
    if not all(checks):
        report.status = "failed:verification"
        return None, report
    return plmap, report


def _placed_deviation(patchwork: Patchwork, lift: LiftedMap, approxes) -> float:
    worst = 0.0
    for tid in patchwork.placed:
        probes = _tile_probe_points(tid, approxes[tid].density)
        dev = float(np.max(_hyp_deviation(patchwork.plmap(probes), lift_eval(lift, probes))))
        worst = max(worst, dev)
    return worst


def measure_bilipschitz(plmap: PLMap2D, scales: tuple[float, ...], config: PipelineConfig,
                        count: int | None = None, scale_span: float = 16.0) -> list[ScaleStats]:
    """Hyperbolic distance-ratio extremes of the PL map at each probe scale.

    Pairs are exact geodesic pairs inside the window at distances drawn
    log-uniformly from [s/span, s]; witnesses for the extremes are recorded.
    """
    n = count if count is not None else config.sample_count
    out = []
    for k, s in enumerate(scales):
        p, q, _ = halfspace_pairs_at_scales(Box((config.x_min,), (config.x_max,)),
                                            (config.t_min, config.t_max), n, config.seed,
                                            s / scale_span, s, stream=300 + k)
        d_src = halfspace_distance(p, q)
        d_img = halfspace_distance(plmap(p), plmap(q))
        out.append(ratio_stats(float(s), d_src, d_img, p, q))
    return out
