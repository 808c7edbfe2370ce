"""Stacked tilings of a base lattice and the induced tile decomposition of the
half-space above it.

A stacked tiling is a lattice of base isometries, a fundamental piece K, and
a homothety alpha whose rescaling alpha(K) is tiled by finitely many lattice
translates of K.  Built-ins:

* dyadic-euclidean(n): integer translations of the unit cube, alpha = 2 id.
* twisted(lambda): alpha stretches coordinate i by 2^lambda_i, so alpha(K) is
  covered by 2^(sum lambda_i) unit cubes.
* heisenberg: the integer lattice of the Heisenberg group with alpha the
  gauge-doubling dilation.  A coordinate box cannot tile here (the group law
  shears vertical columns), so K is the box sheared by a self-affine function
  phi: K = {(x, y, u): x, y in [0,1), u - phi(x, y) in [0,1)}.  phi solves
  4 phi((x+a)/2, (y+b)/2) = 2(b x - a y) + phi(x, y) for a, b in {0,1}, which
  makes alpha(K) exactly the union of the 16 translates by digits
  (a, b, c), a, b in {0,1}, c in {0..3}, and makes lattice translates of K
  tile the group with disjoint interiors (up to a null set of section
  boundaries).

Tiles of the half-space are alpha^n gamma Q0 with Q0 = K x [1, a], addressed
by (layer, lattice coordinates); adjacency, graph metric, coloring, and the
normal form Q = g gamma' Q0 are all computed in exact lattice arithmetic.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import InputError, TilingError
from .sampling import Box, unit_uniforms
from .spaces import SpaceHandle, distance, euclidean, heisenberg, twisted


class TileId(NamedTuple):
    layer: int
    gamma: tuple[int, ...]


@dataclass(frozen=True)
class StackedTilingSpec:
    """Lattice + fundamental piece + homothety data, with the finite digit set
    gamma_prime satisfying alpha(K) = union of gamma' K."""

    kind: str  # "dyadic" | "twisted" | "heisenberg"
    base: SpaceHandle
    lam: tuple[int, ...]
    a: float
    gamma_prime: tuple[tuple[int, ...], ...]
    generators: tuple[tuple[int, ...], ...]

    @property
    def base_dim(self) -> int:
        return self.base.point_dim

    @property
    def identity(self) -> tuple[int, ...]:
        return (0,) * (3 if self.kind == "heisenberg" else len(self.lam))


def builtin_spec(name: str, n: int | None = None, lam: tuple[int, ...] | None = None) -> StackedTilingSpec:
    """Construct one of the built-in stacked tilings; see the module docstring."""
    if name == "dyadic-euclidean":
        if not n or n < 1:
            raise InputError("dyadic-euclidean needs a dimension n >= 1")
        lam_ = (1,) * n
        digits = tuple(itertools.product((0, 1), repeat=n))
        gens = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
        return StackedTilingSpec("dyadic", euclidean(n), lam_, 2.0, digits, gens)
    if name == "twisted":
        if not lam:
            raise InputError("twisted needs an exponent vector lam")
        lam_ = tuple(int(v) for v in lam)
        digits = tuple(itertools.product(*[range(2**v) for v in lam_]))
        gens = tuple(tuple(int(i == j) for j in range(len(lam_))) for i in range(len(lam_)))
        return StackedTilingSpec("twisted", twisted(lam_), lam_, 2.0, digits, gens)
    if name == "heisenberg":
        digits = tuple((a, b, c) for a in (0, 1) for b in (0, 1) for c in range(4))
        gens = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
        return StackedTilingSpec("heisenberg", heisenberg(), (1, 1, 2), 2.0, digits, gens)
    raise InputError(f"unknown builtin spec {name!r}")


# ---------------------------------------------------------------------------
# the Heisenberg shear function


def shear_phi(x: np.ndarray, y: np.ndarray, depth: int = 48) -> np.ndarray:
    """Self-affine shear of the Heisenberg fundamental piece.

    phi(X, Y) = sum_k 4^-k * 2 * (b_k x_k - a_k y_k), where (a_k, b_k) are the
    binary digits of (X, Y) and (x_k, y_k) the tails after digit k.  Truncation
    error is below 4^-depth * 3.
    """
    x = np.array(x, dtype=np.float64)
    y = np.array(y, dtype=np.float64)
    acc = np.zeros(np.broadcast_shapes(x.shape, y.shape), dtype=np.float64)
    xf = np.broadcast_to(x, acc.shape).copy()
    yf = np.broadcast_to(y, acc.shape).copy()
    scale = 1.0
    for _ in range(depth):
        xf *= 2.0
        yf *= 2.0
        a = np.floor(xf)
        b = np.floor(yf)
        xf -= a
        yf -= b
        scale *= 0.25
        acc += scale * 2.0 * (b * xf - a * yf)
    return acc


@lru_cache(maxsize=1)
def _phi_range() -> tuple[float, float]:
    g = np.linspace(0.0, 1.0 - 1e-12, 701)
    vals = shear_phi(g[:, None], g[None, :])
    pad = 0.05
    return float(vals.min() - pad), float(vals.max() + pad)


# ---------------------------------------------------------------------------
# lattice arithmetic (exact integers)


def gamma_compose(spec: StackedTilingSpec, g, h) -> tuple[int, ...]:
    if spec.kind == "heisenberg":
        a, b, c = g
        a2, b2, c2 = h
        return (a + a2, b + b2, c + c2 + 2 * (b * a2 - a * b2))
    return tuple(int(u + v) for u, v in zip(g, h))


def gamma_inverse(spec: StackedTilingSpec, g) -> tuple[int, ...]:
    return tuple(int(-v) for v in g)


def alpha_conj(spec: StackedTilingSpec, g) -> tuple[int, ...]:
    """gamma -> alpha gamma alpha^-1, always a lattice element."""
    if spec.kind == "heisenberg":
        return (2 * g[0], 2 * g[1], 4 * g[2])
    return tuple(int(v * 2**l) for v, l in zip(g, spec.lam))


def alpha_conj_inv(spec: StackedTilingSpec, g) -> tuple[int, ...] | None:
    """gamma -> alpha^-1 gamma alpha when that stays in the lattice, else None."""
    if spec.kind == "heisenberg":
        a, b, c = g
        if a % 2 or b % 2 or c % 4:
            return None
        return (a // 2, b // 2, c // 4)
    out = []
    for v, l in zip(g, spec.lam):
        q, r = divmod(int(v), 2**l)
        if r:
            return None
        out.append(q)
    return tuple(out)


def apply_gamma(spec: StackedTilingSpec, g, pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64)
    gv = np.asarray(g, dtype=np.float64)
    if spec.kind == "heisenberg":
        from .models import heis_multiply

        return heis_multiply(gv, pts)
    return pts + gv


def apply_alpha(spec: StackedTilingSpec, pts: np.ndarray, k: int = 1) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64)
    if spec.kind == "heisenberg":
        from .models import heis_dilate

        return heis_dilate(2.0**k, pts)
    scale = np.exp2(np.float64(k) * np.asarray(spec.lam, dtype=np.float64))
    return pts * scale


def k_contains(spec: StackedTilingSpec, pts: np.ndarray, slack: float = 0.0) -> np.ndarray:
    """Membership in the fundamental piece K; positive slack expands, negative shrinks."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    if spec.kind == "heisenberg":
        x, y, u = pts[:, 0], pts[:, 1], pts[:, 2]
        inside_xy = (x >= -slack) & (x < 1 + slack) & (y >= -slack) & (y < 1 + slack)
        w = u - shear_phi(np.clip(x, 0, 1 - 1e-15), np.clip(y, 0, 1 - 1e-15))
        return inside_xy & (w >= -slack) & (w < 1 + slack)
    return np.all((pts >= -slack) & (pts < 1 + slack), axis=1)


def k_sample(spec: StackedTilingSpec, count: int, seed: int, stream: int = 0) -> np.ndarray:
    """Uniform points of K (for the shear tile: box sample lifted by phi)."""
    u = unit_uniforms(seed, count, spec.base_dim, stream=stream)
    if spec.kind == "heisenberg":
        out = u.copy()
        out[:, 2] = shear_phi(u[:, 0], u[:, 1]) + u[:, 2]
        return out
    return u


def address(spec: StackedTilingSpec, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The unique gamma with p in gamma K, plus the local coordinates gamma^-1 p."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    if spec.kind == "heisenberg":
        a = np.floor(pts[:, 0])
        b = np.floor(pts[:, 1])
        fx = pts[:, 0] - a
        fy = pts[:, 1] - b
        # local u before the c-shift: u - c - 2 b x + 2 a y for absolute x, y
        base_u = pts[:, 2] - 2.0 * b * pts[:, 0] + 2.0 * a * pts[:, 1]
        c = np.floor(base_u - shear_phi(fx, fy))
        gam = np.stack([a, b, c], axis=1).astype(np.int64)
        local = np.stack([fx, fy, base_u - c], axis=1)
        return gam, local
    gam = np.floor(pts).astype(np.int64)
    return gam, pts - gam


# ---------------------------------------------------------------------------
# tile geometry


def tile_base_intervals(spec: StackedTilingSpec, tid: TileId) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate closed intervals of the tile's base box (box lattices only)."""
    if spec.kind == "heisenberg":
        raise InputError("the sheared tile is not a coordinate box")
    scale = np.exp2(np.float64(tid.layer) * np.asarray(spec.lam, dtype=np.float64))
    g = np.asarray(tid.gamma, dtype=np.float64)
    return scale * g, scale * (g + 1.0)


def tile_height_interval(spec: StackedTilingSpec, tid: TileId) -> tuple[float, float]:
    return (spec.a**tid.layer, spec.a ** (tid.layer + 1))


@lru_cache(maxsize=4)
def _heis_contact_set(margin: float = 5e-3) -> frozenset[tuple[int, int, int]]:
    """Lattice elements whose translate of the shear tile touches the tile.

    For an offset (A, B, C) the vertical sections of K and (A,B,C) K at a
    shared base point (X, Y) are unit intervals with gap
    C + 2(B X - A Y) + phi(X - A, Y - B) - phi(X, Y); the tiles touch exactly
    when that gap meets [-1, 1] somewhere on the closed footprint overlap.
    The range of the gap is estimated on a dense grid with an inclusive
    margin, so borderline contacts are kept (a superset keeps colorings
    proper).
    """
    eps = 2.0**-40
    interior = np.linspace(0.0, 1.0, 513)
    near_one = 1.0 - np.exp2(-np.arange(1, 41, dtype=np.float64))
    axis_full = np.unique(np.clip(np.concatenate([interior, near_one, [eps]]), 0.0, 1.0 - eps))
    contacts: set[tuple[int, int, int]] = set()
    for A in (-1, 0, 1):
        for B in (-1, 0, 1):
            xs = axis_full if A == 0 else np.array([1.0 - eps if A == 1 else 0.0])
            ys = axis_full if B == 0 else np.array([1.0 - eps if B == 1 else 0.0])
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            xa = np.clip(X - A, 0.0, 1.0 - eps)
            yb = np.clip(Y - B, 0.0, 1.0 - eps)
            gap = 2.0 * (B * X - A * Y) + shear_phi(xa, yb) - shear_phi(X, Y)
            glo, ghi = float(gap.min()) - margin, float(gap.max()) + margin
            c_lo = math.ceil(-1.0 - ghi)
            c_hi = math.floor(1.0 - glo)
            for C in range(c_lo, c_hi + 1):
                if (A, B, C) != (0, 0, 0):
                    contacts.add((A, B, C))
    # contact is symmetric
    contacts |= {(-a, -b, -c) for a, b, c in contacts}
    return frozenset(contacts)


def base_contact_same_layer(spec: StackedTilingSpec, g, h) -> bool:
    if g == h:
        return False
    if spec.kind == "heisenberg":
        return gamma_compose(spec, gamma_inverse(spec, g), h) in _heis_contact_set()
    return all(abs(u - v) <= 1 for u, v in zip(g, h))


def base_contact_next_layer(spec: StackedTilingSpec, g, w) -> bool:
    """Do gamma K (layer n) and the layer-(n+1) tile of w meet in the base?"""
    if spec.kind == "heisenberg":
        contacts = _heis_contact_set()
        ginv = gamma_inverse(spec, g)
        w2 = alpha_conj(spec, w)
        for d in spec.gamma_prime:
            h = gamma_compose(spec, gamma_compose(spec, ginv, w2), d)
            if h == spec.identity or h in contacts:
                return True
        return False
    # closed box intervals [g, g+1] against [2^lam w, 2^lam (w+1)]
    for gi, wi, l in zip(g, w, spec.lam):
        s = 2**l
        if s * wi > gi + 1 or s * (wi + 1) < gi:
            return False
    return True


def tiles_adjacent(spec: StackedTilingSpec, t1: TileId, t2: TileId) -> bool:
    """Closed tiles intersect: same or adjacent layer and base parts touch."""
    if t1 == t2:
        return False
    if abs(t1.layer - t2.layer) > 1:
        return False
    if t1.layer == t2.layer:
        return base_contact_same_layer(spec, t1.gamma, t2.gamma)
    lo, hi = (t1, t2) if t1.layer < t2.layer else (t2, t1)
    return base_contact_next_layer(spec, lo.gamma, hi.gamma)


def tiles_in_window(spec: StackedTilingSpec, layer_range: tuple[int, int],
                    base_window: Box) -> tuple[TileId, ...]:
    """All tiles whose base-part interior meets the window, each exactly once.

    A degenerate window (lo == hi) selects the tile containing that single
    point in each layer.  For the sheared Heisenberg tile the vertical
    condition is decided from the conservative range of the section heights;
    windows spanning the full vertical extent (the standard test windows) and
    point windows are decided exactly.
    """
    n_min, n_max = layer_range
    if n_min > n_max:
        raise InputError("layer range must satisfy n_min <= n_max")
    if base_window.dim != spec.base_dim:
        raise InputError("window dimension must match the base")
    lo = np.asarray(base_window.lo, dtype=np.float64)
    hi = np.asarray(base_window.hi, dtype=np.float64)
    out: list[TileId] = []
    degenerate = bool(np.all(lo == hi))
    for n in range(n_min, n_max + 1):
        if degenerate:
            gam, _ = address(spec, apply_alpha(spec, lo[None, :], -n))
            out.append(TileId(n, tuple(int(v) for v in gam[0])))
            continue
        if spec.kind == "heisenberg":
            out.extend(_heis_tiles_in_layer(spec, n, lo, hi))
        else:
            scale = np.exp2(np.float64(n) * np.asarray(spec.lam, dtype=np.float64))
            ranges = []
            for s, l, h in zip(scale, lo, hi):
                k0 = math.floor(l / s) - 1
                k1 = math.ceil(h / s) + 1
                ranges.append([k for k in range(k0, k1 + 1) if s * k < h and s * (k + 1) > l])
            for gam in itertools.product(*ranges):
                out.append(TileId(n, tuple(int(v) for v in gam)))
    return tuple(sorted(set(out)))


def _heis_tiles_in_layer(spec: StackedTilingSpec, n: int, lo, hi) -> list[TileId]:
    # work in layer coordinates: window scaled by alpha^-n
    sx = 2.0**-n
    su = 4.0**-n
    wlo = np.array([lo[0] * sx, lo[1] * sx, lo[2] * su])
    whi = np.array([hi[0] * sx, hi[1] * sx, hi[2] * su])
    phi_lo, phi_hi = _phi_range()
    tiles = []
    for a in range(math.floor(wlo[0]) - 1, math.ceil(whi[0]) + 1):
        if not (a < whi[0] and a + 1 > wlo[0]):
            continue
        for b in range(math.floor(wlo[1]) - 1, math.ceil(whi[1]) + 1):
            if not (b < whi[1] and b + 1 > wlo[1]):
                continue
            # section height of (a,b,c)K over (x,y): c + 2(bx - ay) + phi + [0,1)
            x_iv = (max(wlo[0], a), min(whi[0], a + 1))
            y_iv = (max(wlo[1], b), min(whi[1], b + 1))
            shear_vals = [2.0 * (b * x - a * y) for x in x_iv for y in y_iv]
            sec_lo = min(shear_vals) + phi_lo
            sec_hi = max(shear_vals) + phi_hi + 1.0
            c0 = math.floor(wlo[2] - sec_hi) - 1
            c1 = math.ceil(whi[2] - sec_lo) + 1
            for c in range(c0, c1 + 1):
                if c + sec_lo < whi[2] and c + sec_hi > wlo[2]:
                    tiles.append(TileId(n, (a, b, c)))
    return tiles


# ---------------------------------------------------------------------------
# tile graph


@dataclass(frozen=True)
class TileGraph:
    """Adjacency graph of a finite tile set; optionally colored."""

    tiles: tuple[TileId, ...]
    edges: tuple[tuple[int, int], ...]
    coloring: tuple[int, ...] | None = None

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise InputError("adjacency is irreflexive")
        if self.coloring is not None:
            if len(self.coloring) != len(self.tiles):
                raise InputError("coloring must cover every tile")
            for i, j in self.edges:
                if self.coloring[i] == self.coloring[j]:
                    raise InputError("coloring has a monochromatic edge")

    @property
    def index(self) -> dict[TileId, int]:
        return {t: i for i, t in enumerate(self.tiles)}

    def neighbors(self) -> dict[int, list[int]]:
        nb: dict[int, list[int]] = {i: [] for i in range(len(self.tiles))}
        for i, j in self.edges:
            nb[i].append(j)
            nb[j].append(i)
        return {i: sorted(v) for i, v in nb.items()}

    def color_of(self, tid: TileId) -> int:
        if self.coloring is None:
            raise InputError("graph has no coloring")
        return self.coloring[self.index[tid]]

    @property
    def color_count(self) -> int:
        if self.coloring is None:
            return 0
        return max(self.coloring) + 1


def adjacency_graph(spec: StackedTilingSpec, tiles: tuple[TileId, ...]) -> TileGraph:
    """Edges exactly between tiles whose closed tiles intersect."""
    tiles = tuple(sorted(set(tiles)))
    if len(tiles) != len(set(tiles)):
        raise InputError("tiles must be distinct")
    # cheap vectorized prefilter: adjacent tiles differ by <= 1 layer and by a
    # bounded amount in each scaled address coordinate
    layers = np.asarray([t.layer for t in tiles], dtype=np.int64)
    gam = np.asarray([t.gamma for t in tiles], dtype=np.float64)
    lam = np.asarray(spec.lam if spec.kind != "heisenberg" else (1, 1, 2), dtype=np.float64)
    scaled = gam * np.exp2(layers[:, None] * lam[None, :])
    slack = np.exp2(np.maximum(layers[:, None], layers[None, :])[..., None] * lam)
    if spec.kind == "heisenberg":
        slack = slack * np.array([1.0, 1.0, 8.0])  # shear and digit offsets reach further
    close = np.abs(layers[:, None] - layers[None, :]) <= 1
    close &= np.all(np.abs(scaled[:, None, :] - scaled[None, :, :]) <= 1.001 * slack, axis=-1)
    edges = []
    ii, jj = np.nonzero(np.triu(close, k=1))
    for i, j in zip(ii.tolist(), jj.tolist()):
        if tiles_adjacent(spec, tiles[i], tiles[j]):
            edges.append((i, j))
    return TileGraph(tiles, tuple(edges))


def graph_distances_from(graph: TileGraph, source: TileId) -> dict[TileId, int]:
    """BFS distances from one tile to every reachable tile of the graph."""
    idx = graph.index
    if source not in idx:
        raise InputError("tile not in graph")
    nb = graph.neighbors()
    dist = {idx[source]: 0}
    frontier = deque([idx[source]])
    while frontier:
        node = frontier.popleft()
        for m in nb[node]:
            if m not in dist:
                dist[m] = dist[node] + 1
                frontier.append(m)
    return {graph.tiles[i]: d for i, d in dist.items()}


def graph_distance(graph: TileGraph, q1: TileId, q2: TileId) -> float:
    """BFS edge count; float('inf') when unreachable."""
    idx = graph.index
    if q1 not in idx or q2 not in idx:
        raise InputError("tile not in graph")
    if q1 == q2:
        return 0
    nb = graph.neighbors()
    start, goal = idx[q1], idx[q2]
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        node, d = frontier.popleft()
        for m in nb[node]:
            if m == goal:
                return d + 1
            if m not in seen:
                seen.add(m)
                frontier.append((m, d + 1))
    return float("inf")


def greedy_coloring(graph: TileGraph, root: TileId | None = None) -> TileGraph:
    """Proper greedy coloring in deterministic BFS order.

    The root is the fundamental tile (layer 0, identity) when present, else
    the lexicographically least tile; neighbors are visited in lex order and
    further components restart at their least tile.  Each tile gets the
    smallest color unused by its already-colored neighbors, so the color
    count is at most max degree + 1.
    """
    tiles = graph.tiles
    if not tiles:
        return replace(graph, coloring=())
    nb = graph.neighbors()
    colors: dict[int, int] = {}
    order: list[int] = []
    idx = graph.index
    visited: set[int] = set()
    roots = []
    if root is not None:
        if root not in idx:
            raise InputError("root tile not in graph")
        roots.append(idx[root])
    default_root = None
    for cand in sorted(range(len(tiles)), key=lambda i: tiles[i]):
        if tiles[cand].layer == 0 and all(v == 0 for v in tiles[cand].gamma):
            default_root = cand
            break
    if default_root is not None and root is None:
        roots.append(default_root)
    while len(visited) < len(tiles):
        start = None
        for r in roots:
            if r not in visited:
                start = r
                break
        if start is None:
            start = min((i for i in range(len(tiles)) if i not in visited),
                        key=lambda i: tiles[i])
        queue = deque([start])
        visited.add(start)
        while queue:
            node = queue.popleft()
            order.append(node)
            for m in sorted(nb[node], key=lambda i: tiles[i]):
                if m not in visited:
                    visited.add(m)
                    queue.append(m)
    for node in order:
        used = {colors[m] for m in nb[node] if m in colors}
        c = 0
        while c in used:
            c += 1
        colors[node] = c
    return replace(graph, coloring=tuple(colors[i] for i in range(len(tiles))))


# ---------------------------------------------------------------------------
# normal form and combinatorial isometries


@dataclass(frozen=True)
class TileDecomposition:
    """Q = g gamma' Q0 with g = alpha^power after g0 and g0 = alpha gamma1 alpha^-1."""

    tile: TileId
    power: int
    g0: tuple[int, ...]
    gamma1: tuple[int, ...]
    gamma_prime: tuple[int, ...]
    gamma_prime_index: int
    combinatorial_isometry_verified: bool
    neighbor_count: int


def _residue_decompose(spec: StackedTilingSpec, gamma) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """gamma = g0 * gamma' with gamma' a digit and g0 = alpha gamma1 alpha^-1."""
    if spec.kind == "heisenberg":
        m, nn, k = gamma
        a = m % 2
        b = nn % 2
        A = (m - a) // 2
        B = (nn - b) // 2
        c = (k - 4 * (B * a - A * b)) % 4
        C = (k - c - 4 * (B * a - A * b)) // 4
        g0 = (2 * A, 2 * B, 4 * C)
        gp = (a, b, c)
    else:
        gp = tuple(int(v % 2**l) for v, l in zip(gamma, spec.lam))
        g0 = tuple(int(v - r) for v, r in zip(gamma, gp))
    if gamma_compose(spec, g0, gp) != tuple(int(v) for v in gamma):
        raise TilingError("residue decomposition failed")
    if gp not in spec.gamma_prime:
        raise TilingError("decomposition not found within the digit set")
    return g0, gp


def infinite_neighbors(spec: StackedTilingSpec, tid: TileId) -> tuple[TileId, ...]:
    """All tiles of the full tiling adjacent to ``tid`` (any window)."""
    out: set[TileId] = set()
    g = tid.gamma
    n = tid.layer
    if spec.kind == "heisenberg":
        contacts = _heis_contact_set()
        for nu in contacts:
            out.add(TileId(n, gamma_compose(spec, g, nu)))
        contacts_id = set(contacts) | {spec.identity}
        # layer above: w with g^-1 (alpha w alpha^-1) d in contacts + id
        for h in contacts_id:
            for d in spec.gamma_prime:
                w2 = gamma_compose(spec, gamma_compose(spec, g, h), gamma_inverse(spec, d))
                w = alpha_conj_inv(spec, w2)
                if w is not None:
                    if tiles_adjacent(spec, tid, TileId(n + 1, w)):
                        out.add(TileId(n + 1, w))
        # layer below: h with h^-1 (alpha g alpha^-1) d in contacts + id
        g2 = alpha_conj(spec, g)
        for nu in contacts_id:
            for d in spec.gamma_prime:
                h = gamma_compose(spec, gamma_compose(spec, g2, d), gamma_inverse(spec, nu))
                if tiles_adjacent(spec, tid, TileId(n - 1, h)):
                    out.add(TileId(n - 1, h))
    else:
        dim = len(spec.lam)
        for off in itertools.product((-1, 0, 1), repeat=dim):
            if any(off):
                out.add(TileId(n, tuple(gi + oi for gi, oi in zip(g, off))))
        for w in itertools.product(*[range(math.floor(gi / 2**l) - 1,
                                           math.floor((gi + 1) / 2**l) + 2)
                                     for gi, l in zip(g, spec.lam)]):
            cand = TileId(n + 1, tuple(int(v) for v in w))
            if tiles_adjacent(spec, tid, cand):
                out.add(cand)
        for h in itertools.product(*[range(2**l * gi - 1, 2**l * (gi + 1) + 2)
                                     for gi, l in zip(g, spec.lam)]):
            cand = TileId(n - 1, tuple(int(v) for v in h))
            if tiles_adjacent(spec, tid, cand):
                out.add(cand)
    out.discard(tid)
    return tuple(sorted(out))


def decompose_tile(spec: StackedTilingSpec, q: TileId) -> TileDecomposition:
    """Normal form Q = g gamma' Q0 with g verified to be a combinatorial isometry.

    g maps Q to the digit tile gamma' Q0 in layer 0; the verification maps
    every neighbor of Q through g^-1 and checks each image is again a lattice
    tile.  This is exact integer arithmetic: conjugating by alpha^-1 across
    one layer up stays integral precisely because g0 = alpha gamma1 alpha^-1.
    """
    g0, gp = _residue_decompose(spec, q.gamma)
    gamma1 = alpha_conj_inv(spec, g0)
    if gamma1 is None:
        raise TilingError("g0 is not an alpha-conjugate of a lattice element")
    g0_inv = gamma_inverse(spec, g0)
    neighbors = infinite_neighbors(spec, q)
    verified = True
    for nb in neighbors:
        k = nb.layer - q.layer
        if k == 0:
            h = g0_inv
        elif k == -1:
            h = alpha_conj(spec, g0_inv)
        else:  # k == +1
            h = alpha_conj_inv(spec, g0_inv)
            if h is None:
                verified = False
                break
        image_gamma = gamma_compose(spec, h, nb.gamma)
        if any(int(v) != v for v in image_gamma):
            verified = False
            break
    return TileDecomposition(q, q.layer, g0, gamma1, gp, spec.gamma_prime.index(gp),
                             verified, len(neighbors))


@dataclass(frozen=True)
class NormalizationResult:
    """Normalizing pair: compose with alpha^n then gamma to pin the map at the
    fundamental piece with unit-scale displacement of the marked points."""

    n: int
    gamma: tuple[int, ...]


def normalize_map(spec: StackedTilingSpec, f, x0: np.ndarray, y0: np.ndarray) -> NormalizationResult:
    """Find n and gamma with a^n d(f x0, f y0) in [d(x0, y0), a d(x0, y0)] and
    gamma(alpha^n f(x0)) in K; boundary ties resolve to the lower endpoint."""
    x0 = np.asarray(x0, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    d0 = float(distance(spec.base, x0, y0))
    if d0 == 0:
        raise InputError("marked points must be distinct")
    fx0 = np.asarray(f(x0[None, :]))[0]
    fy0 = np.asarray(f(y0[None, :]))[0]
    d1 = float(distance(spec.base, fx0, fy0))
    if d1 == 0:
        raise InputError("map collapses the marked points")
    m = math.log(d1 / d0) / math.log(spec.a)
    if abs(m - round(m)) < 1e-9:
        m = round(m)
    n = -math.floor(m)
    moved = apply_alpha(spec, fx0[None, :], n)
    gam, _ = address(spec, moved)
    gamma = gamma_inverse(spec, tuple(int(v) for v in gam[0]))
    return NormalizationResult(n, gamma)


# ---------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    detail: str
    witness: tuple | None = None


@dataclass(frozen=True)
class TilingVerification:
    conditions: dict[str, ConditionResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def to_dict(self) -> dict:
        return {
            name: {"passed": c.passed, "detail": c.detail,
                   "witness": None if c.witness is None else [np.asarray(w).tolist() for w in c.witness]}
            for name, c in self.conditions.items()
        }


def verify_stacked_tiling(spec: StackedTilingSpec, sample_count: int = 10000,
                          seed: int = 0) -> TilingVerification:
    """Sample-wise check of the stacked-tiling conditions.

    covering: sampled points of alpha(K) lie in some digit translate of K;
    interior_disjoint: no sampled point is interior to two digit translates;
    containment: digit translates stay inside alpha(K);
    homothety: |d(alpha x, alpha y) - a d(x, y)| <= 1e-9 on sampled pairs;
    conjugation: alpha gamma alpha^-1 stays in the lattice on the generators.
    """
    conditions: dict[str, ConditionResult] = {}
    ks = k_sample(spec, sample_count, seed, stream=1)
    alpha_pts = apply_alpha(spec, ks, 1)
    digit_set = set(spec.gamma_prime)

    gam, _ = address(spec, alpha_pts)
    hit = np.array([tuple(int(v) for v in row) in digit_set for row in gam])
    if np.all(hit):
        conditions["covering"] = ConditionResult(True, f"{sample_count} sampled points covered")
    else:
        k = int(np.argmin(hit))
        conditions["covering"] = ConditionResult(
            False, "sampled point of alpha(K) outside every digit translate",
            (alpha_pts[k],))

    interior_counts = np.zeros(sample_count, dtype=np.int64)
    for gp in spec.gamma_prime:
        local = apply_gamma(spec, gamma_inverse(spec, gp), alpha_pts)
        interior_counts += k_contains(spec, local, slack=-1e-9)
    if np.all(interior_counts <= 1):
        conditions["interior_disjoint"] = ConditionResult(True, "no interior overlap at samples")
    else:
        k = int(np.argmax(interior_counts))
        conditions["interior_disjoint"] = ConditionResult(
            False, "sampled point interior to two digit translates", (alpha_pts[k],))

    bad = None
    for gp in spec.gamma_prime:
        moved = apply_alpha(spec, apply_gamma(spec, gp, ks), -1)
        ok = k_contains(spec, moved, slack=1e-9)
        if not np.all(ok):
            bad = (gp, ks[int(np.argmin(ok))])
            break
    if bad is None:
        conditions["containment"] = ConditionResult(True, "all digit translates inside alpha(K)")
    else:
        conditions["containment"] = ConditionResult(
            False, f"digit {bad[0]} maps a sample outside alpha(K)", (bad[1],))

    pairs = k_sample(spec, sample_count, seed, stream=2), k_sample(spec, sample_count, seed, stream=3)
    d_base = distance(spec.base, pairs[0], pairs[1])
    d_scaled = distance(spec.base, apply_alpha(spec, pairs[0], 1), apply_alpha(spec, pairs[1], 1))
    err = np.abs(d_scaled - spec.a * d_base)
    k = int(np.argmax(err))
    conditions["homothety"] = ConditionResult(
        bool(err[k] <= 1e-9), f"max |d(ax, ay) - a d(x,y)| = {err[k]:.3e}",
        None if err[k] <= 1e-9 else (pairs[0][k], pairs[1][k]))

    conj_ok = all(alpha_conj(spec, g) is not None for g in spec.generators)
    conditions["conjugation"] = ConditionResult(bool(conj_ok), "alpha Gamma alpha^-1 in Gamma on generators")

    return TilingVerification(conditions)


def export_tile_graph(graph: TileGraph) -> str:
    """Line-oriented edge list: `layer g.. -- layer g..` plus the endpoint colors.

    Edges are sorted by the lexicographic order of their TileId pair, so the
    output is stable across runs.
    """
    def fmt(t: TileId) -> str:
        return " ".join([str(t.layer)] + [str(v) for v in t.gamma])

    lines = []
    pairs = sorted((min(graph.tiles[i], graph.tiles[j]), max(graph.tiles[i], graph.tiles[j]))
                   for i, j in graph.edges)
    for a, b in pairs:
        line = f"{fmt(a)} -- {fmt(b)}"
        if graph.coloring is not None:
            line += f"  {graph.color_of(a)} {graph.color_of(b)}"
        lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")
