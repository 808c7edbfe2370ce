"""Experiment runner.

Subcommands: delta, con, tiling, lift, pipeline, distortion.  Each reads a
JSON config (all keys defaulted, unknown keys rejected), runs the library,
and writes a single JSON run record embedding the fully resolved config.
Numeric outputs carry a "metric" tag naming the metric they are measured in,
runs are reproducible (seeds are config data, never wall clock), and the exit
code is 0 exactly when every configured check passed.

See docs/config_schema.md for the annotated schema and configs/ for examples.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError, InputError
from .metric import (DEFAULT_ALPHA_GRID, QsModulus, Sampler, check_quasi_symmetry,
                     delta_four_point_estimate, fit_qi_constants, fit_qs_modulus)
from .models import BumpParams, GridSpec
from .pipeline import PipelineConfig, export_mesh, run_pipeline
from .sampling import Box
from .spaces import (SpaceHandle, bump_half_plane, complex_hyperbolic, con_of, distance,
                     euclidean, half_space, heisenberg, twisted, twisted_half_space)
from .cone import RaySpec, parabolic_quasimetric, visual_quasimetric
from .lifting import (LiftedMap, affine_map, heis_dilation_map, heis_translation_map,
                      lift_distortion, power_map, table_map)
from .tiling import (adjacency_graph, builtin_spec, export_tile_graph, greedy_coloring,
                     tiles_in_window, verify_stacked_tiling)

SCHEMA_VERSION = 1


def tagged(value, metric: str):
    """Attach the metric a number is measured in; prevents cross-metric mixups."""
    if isinstance(value, (list, tuple)):
        return {"value": [float(v) for v in value], "metric": metric}
    return {"value": float(value), "metric": metric}


def _space_from_config(cfg: dict) -> SpaceHandle:
    model = cfg.get("model", "euclidean")
    if model == "euclidean":
        return euclidean(int(cfg.get("n", 1)))
    if model == "twisted":
        return twisted(tuple(cfg.get("lam", [1])))
    if model == "heisenberg":
        return heisenberg()
    if model == "half-space-real":
        return half_space(int(cfg.get("n", 1)))
    if model == "half-space-twisted":
        grid = _grid_from_config(cfg["grid"])
        return twisted_half_space(tuple(cfg.get("lam", [1])), grid)
    if model == "complex-hyperbolic":
        return complex_hyperbolic(int(cfg.get("n", 2)), cfg.get("coords", "ball"))
    if model == "bump-half-plane":
        params = BumpParams(float(cfg.get("a", 2.0)), float(cfg.get("amplitude", 0.5)),
                            _grid_from_config(cfg["grid"]))
        return bump_half_plane(params)
    if model == "con-of":
        return con_of(_space_from_config(cfg["base"]))
    raise InputError(f"unknown space model {model!r}")


def _grid_from_config(cfg: dict) -> GridSpec:
    return GridSpec(tuple(cfg["lo"]), tuple(cfg["hi"]), tuple(cfg["shape"]),
                    int(cfg.get("stencil_radius", 3)))


def _sampler_from_config(cfg: dict, seed: int) -> Sampler:
    box = Box(tuple(cfg["lo"]), tuple(cfg["hi"]))
    return Sampler(box, int(cfg.get("count", 10000)), seed)


def _map_from_config(cfg: dict):
    family = cfg.get("family")
    if family == "affine":
        base = _space_from_config(cfg.get("base", {"model": "euclidean", "n": 1}))
        return affine_map(base, cfg["matrix"], cfg.get("translation"))
    if family == "power1d":
        return power_map(float(cfg["exponent"]))
    if family == "heis-left-translation":
        return heis_translation_map(cfg["element"])
    if family == "heis-dilation":
        return heis_dilation_map(float(cfg["factor"]))
    if family == "table":
        return table_map(cfg["knots_x"], cfg["knots_y"])
    raise InputError(f"unknown boundary map family {family!r}")


def _merge_config(defaults: dict, user: dict, path: str = "") -> dict:
    out = dict(defaults)
    for k, v in user.items():
        if k not in defaults:
            raise InputError(f"unknown config key {path + k!r}; allowed: {sorted(defaults)}")
        if isinstance(defaults[k], dict) and isinstance(v, dict) and defaults[k]:
            out[k] = _merge_config(defaults[k], v, path + k + ".")
        else:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# subcommands


DELTA_DEFAULTS = {
    "space": {"model": "euclidean", "n": 1},
    "region": {"lo": [-10.0], "hi": [10.0], "count": 10000},
    "seed": 0,
    "doublings": 0,
    "expect": None,  # None | "plateau" | "growth"
}


def cmd_delta(cfg: dict) -> tuple[dict, bool]:
    space = _space_from_config(cfg["space"])
    estimates = []
    box = Box(tuple(cfg["region"]["lo"]), tuple(cfg["region"]["hi"]))
    for k in range(int(cfg["doublings"]) + 1):
        sampler = Sampler(_double_box(box, k, space), int(cfg["region"]["count"]), int(cfg["seed"]))
        est = delta_four_point_estimate(space, sampler)
        estimates.append(est)
    ratios = [estimates[i + 1].value / max(estimates[i].value, 1e-300)
              for i in range(len(estimates) - 1)]
    plateau = bool(ratios) and all(r <= 1.25 for r in ratios)
    growth = bool(ratios) and all(r >= 2.0 for r in ratios)
    outputs = {
        "delta_estimate": tagged(estimates[0].value, "space metric"),
        "estimates": [tagged(e.value, "space metric") for e in estimates],
        "ratios": ratios,
        "plateau": plateau,
        "growth": growth,
        "witness": [np.asarray(w).tolist() for w in estimates[-1].witness],
    }
    expect = cfg["expect"]
    ok = True
    if expect == "plateau":
        ok = plateau
    elif expect == "growth":
        ok = growth
    return outputs, ok


def _double_box(box: Box, k: int, space: SpaceHandle) -> Box:
    """Double a region k times; height-like axes double in log scale."""
    if k == 0:
        return box
    lo = np.asarray(box.lo, dtype=np.float64)
    hi = np.asarray(box.hi, dtype=np.float64)
    scale = 2.0**k
    if space.model in ("half-space-real", "half-space-twisted", "con-of", "bump-half-plane"):
        out_lo = lo * scale
        out_hi = hi * scale
        out_lo[-1] = np.exp(np.log(lo[-1]) * scale) if lo[-1] < 1 else lo[-1] / scale**0
        # log-double the height range around 1
        out_lo[-1] = np.exp(scale * np.log(lo[-1]))
        out_hi[-1] = np.exp(scale * np.log(hi[-1]))
        return Box(tuple(out_lo), tuple(out_hi))
    return Box(tuple(lo * scale), tuple(hi * scale))


CON_DEFAULTS = {
    "base": {"model": "euclidean", "n": 1},
    "a": 2.718281828459045,
    "s_max": 40.0,
    "pairs": {"lo": [0.1], "hi": [10.0], "count": 200},
    "seed": 0,
    "band_limit": 4.0,
}


def cmd_con(cfg: dict) -> tuple[dict, bool]:
    base = _space_from_config(cfg["base"])
    box = Box(tuple(cfg["pairs"]["lo"]), tuple(cfg["pairs"]["hi"]))
    pts = box.sample(int(cfg["seed"]), int(cfg["pairs"]["count"]), 2)
    eta = RaySpec("vertical", tuple(0.0 for _ in range(base.point_dim)))
    band_hi = 0.0
    band_lo = np.inf
    converged = True
    rows = []
    for x, y in pts:
        d = float(distance(base, x, y))
        if d == 0:
            continue
        r1 = RaySpec("downward", tuple(x))
        r2 = RaySpec("downward", tuple(y))
        val = parabolic_quasimetric(base, float(cfg["a"]), eta, r1, r2, float(cfg["s_max"]))
        converged &= val.converged
        band_hi = max(band_hi, val.value / d)
        band_lo = min(band_lo, val.value / d)
        rows.append({"d_base": tagged(d, "base metric"),
                     "parabolic": tagged(val.value, "boundary quasimetric")})
    band = max(band_hi, 1.0 / band_lo)
    outputs = {
        "pair_count": len(rows),
        "band_ratio": band,
        "band_limit": float(cfg["band_limit"]),
        "converged": bool(converged),
        "pairs": rows[:16],
    }
    return outputs, bool(converged and band <= float(cfg["band_limit"]))


TILING_DEFAULTS = {
    "spec": {"name": "dyadic-euclidean", "n": 1, "lam": None},
    "layers": [-2, 0],
    "window": {"lo": [0.0], "hi": [4.0]},
    "samples": 10000,
    "seed": 0,
}


def cmd_tiling(cfg: dict) -> tuple[dict, bool]:
    s = cfg["spec"]
    spec = builtin_spec(s["name"], n=s.get("n"), lam=None if s.get("lam") is None else tuple(s["lam"]))
    verification = verify_stacked_tiling(spec, int(cfg["samples"]), int(cfg["seed"]))
    window = Box(tuple(cfg["window"]["lo"]), tuple(cfg["window"]["hi"]))
    tiles = tiles_in_window(spec, tuple(cfg["layers"]), window)
    graph = greedy_coloring(adjacency_graph(spec, tiles))
    outputs = {
        "digit_count": len(spec.gamma_prime),
        "verification": verification.to_dict(),
        "tile_count": len(tiles),
        "edge_count": len(graph.edges),
        "color_count": graph.color_count,
        "graph": export_tile_graph(graph),
    }
    return outputs, verification.passed


LIFT_DEFAULTS = {
    "map": {"family": "power1d", "exponent": 3.0, "matrix": None, "translation": None,
            "element": None, "factor": None, "knots_x": None, "knots_y": None,
            "base": {"model": "euclidean", "n": 1}},
    "region": {"lo": [-2.0], "hi": [2.0]},
    "t_range": [0.01, 1.0],
    "scales": [0.1, 1.0, 10.0],
    "count": 2000,
    "seed": 0,
    "blowup_scale_limit": 10.0,
}


def cmd_lift(cfg: dict) -> tuple[dict, bool]:
    f = _map_from_config(cfg["map"])
    lift = LiftedMap(f)
    hplus = half_space(f.base.point_dim)
    box = Box(tuple(cfg["region"]["lo"]), tuple(cfg["region"]["hi"]))
    report = lift_distortion(lift, hplus, box, tuple(cfg["t_range"]), tuple(cfg["scales"]),
                             int(cfg["count"]), int(cfg["seed"]))
    blowup = any(s.constant > float(cfg["blowup_scale_limit"]) for s in report.local_bilip)
    outputs = {
        "qi": {"L": report.qi.L, "C": tagged(report.qi.C, "hyperbolic").get("value"),
               "saturated": report.qi_saturated},
        "scales": [
            {"scale": tagged(s.scale, "hyperbolic"), "constant": s.constant,
             "min_ratio": s.min_ratio, "max_ratio": s.max_ratio}
            for s in report.local_bilip
        ],
        "local_blowup": blowup,
        "sample_count": report.sample_count,
    }
    return outputs, not report.qi_saturated


PIPELINE_DEFAULTS = {
    "map": LIFT_DEFAULTS["map"],
    "layer_min": -3,
    "layer_max": 0,
    "x_min": -2.0,
    "x_max": 2.0,
    "grid_density": 16,
    "epsilon": 0.05,
    "collar_width": 0.25,
    "r_scale": 0.4,
    "sample_count": 10000,
    "seed": 0,
}


def cmd_pipeline(cfg: dict, out_dir: Path | None) -> tuple[dict, bool]:
    f = _map_from_config(cfg["map"])
    pc = PipelineConfig(layer_min=int(cfg["layer_min"]), layer_max=int(cfg["layer_max"]),
                        x_min=float(cfg["x_min"]), x_max=float(cfg["x_max"]),
                        grid_density=int(cfg["grid_density"]), epsilon=float(cfg["epsilon"]),
                        collar_width=float(cfg["collar_width"]), r_scale=float(cfg["r_scale"]),
                        sample_count=int(cfg["sample_count"]), seed=int(cfg["seed"]))
    plmap, report = run_pipeline(f, pc)
    outputs = report.to_dict()
    outputs["epsilon"] = tagged(pc.epsilon, "hyperbolic")
    if plmap is not None and out_dir is not None:
        (out_dir / "mesh.txt").write_text(export_mesh(plmap))
        outputs["mesh_file"] = "mesh.txt"
    return outputs, report.status == "ok"


DISTORTION_DEFAULTS = {
    "space": {"model": "euclidean", "n": 1},
    "map": LIFT_DEFAULTS["map"],
    "sampler": {"lo": [-10.0], "hi": [10.0], "count": 10000},
    "seed": 0,
    "eta": None,  # optional {"alpha": ..., "c": ...} to check
    "alpha_grid": list(DEFAULT_ALPHA_GRID),
    "fit_qi": False,
}


def cmd_distortion(cfg: dict) -> tuple[dict, bool]:
    space = _space_from_config(cfg["space"])
    f = _map_from_config(cfg["map"])
    sampler = _sampler_from_config(cfg["sampler"], int(cfg["seed"]))
    fit = fit_qs_modulus(space, f, tuple(cfg["alpha_grid"]), sampler)
    outputs = {
        "qs_fit": {"alpha": fit.modulus.alpha, "c": fit.modulus.c,
                   "witness": [np.asarray(w).tolist() for w in fit.witness]},
        "sample_count": fit.sample_count,
    }
    ok = True
    if cfg["eta"] is not None:
        eta = QsModulus(float(cfg["eta"]["alpha"]), float(cfg["eta"]["c"]))
        check = check_quasi_symmetry(space, f, eta, sampler)
        outputs["qs_check"] = {"passed": check.passed,
                               "max_violation_ratio": check.max_violation_ratio,
                               "collapsed": check.collapsed}
        ok = check.passed
    if cfg["fit_qi"]:
        qi = fit_qi_constants(space, space, f, sampler)
        outputs["qi"] = {"L": qi.qi.L, "C": qi.qi.C, "saturated": qi.saturated}
        ok = ok and not qi.saturated
    return outputs, ok


# ---------------------------------------------------------------------------
# driver


_COMMANDS = {
    "delta": (DELTA_DEFAULTS, lambda cfg, out: cmd_delta(cfg)),
    "con": (CON_DEFAULTS, lambda cfg, out: cmd_con(cfg)),
    "tiling": (TILING_DEFAULTS, lambda cfg, out: cmd_tiling(cfg)),
    "lift": (LIFT_DEFAULTS, lambda cfg, out: cmd_lift(cfg)),
    "pipeline": (PIPELINE_DEFAULTS, cmd_pipeline),
    "distortion": (DISTORTION_DEFAULTS, lambda cfg, out: cmd_distortion(cfg)),
}


def _flatten(prefix: str, obj, rows: list):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, rows)
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, obj))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hypertile",
                                     description="metric-geometry experiment runner")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", type=Path, default=None, help="directory for record + artifacts")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    args = parser.parse_args(argv)

    defaults, runner = _COMMANDS[args.command]
    user_cfg = {}
    if args.config is not None:
        user_cfg = json.loads(Path(args.config).read_text())
    try:
        cfg = _merge_config(defaults, user_cfg)
        if args.seed is not None:
            cfg["seed"] = args.seed
        out_dir = args.out
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
        start = time.perf_counter()
        outputs, ok = runner(cfg, out_dir)
        wall = time.perf_counter() - start
    except (InputError, DomainError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    record = {
        "schema_version": SCHEMA_VERSION,
        "artifact_version": __version__,
        "experiment": args.command,
        "config": cfg,
        "status": "pass" if ok else "fail",
        "outputs": outputs,
        "wall_time_s": wall,
    }
    if args.format == "json":
        text = json.dumps(record, indent=2, default=str)
    else:
        rows: list = []
        _flatten("", {k: v for k, v in record.items() if k != "wall_time_s"}, rows)
        text = "\n".join(f"{k},{v}" for k, v in rows) + "\n"
    if out_dir is not None:
        ext = "json" if args.format == "json" else "csv"
        (out_dir / f"record.{ext}").write_text(text)
        if args.command == "tiling" and "graph" in outputs:
            (out_dir / "graph.txt").write_text(outputs["graph"])
    print(text if len(text) < 4000 else text[:4000] + "\n... (truncated; full record in --out)")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
