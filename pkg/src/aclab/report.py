"""Run orchestration: config validation, the solve/analyze pipeline, and
deterministic JSON reports.

A run is described by a single JSON config. The pipeline builds the 1D
profile, solves the Dirichlet problem posed by the boundary section, then
executes whichever analysis sections the config enables, collecting every
result into one report dict. Reports are written with sorted keys and
full-precision floats, so two runs of the same config produce identical
bytes apart from the wall-clock entries under meta.timings.

The config hash (sha256 of the normalized config's canonical JSON) is
recorded in the report; partial reports only merge when their hashes
agree, which keeps analysis results from being grafted onto a field they
were not computed from.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from typing import Optional

import numpy as np

from . import __version__
from .blowdown import angular_energy, balancing_defect, extract_rays
from .errors import AclabError, ConfigurationError
from .field import (
    Field2D,
    field_from_function,
    grid_from_extent,
    gradient,
    save_curves_csv,
    save_field_csv,
    zero_contours,
)
from .fitting import decay_fit, fit_trajectory, t_prime_flux
from .potentials import Potential, load_tabulated, make_quartic
from .profile1d import Profile1D, sigma0, solve_profile
from .solver import (
    constant_ansatz,
    layer_ansatz,
    multiend_ansatz,
    saddle_ansatz,
    solve_dirichlet,
)
from .spectral import (
    exterior_min_eigenvalue,
    line_gap,
    morse_index,
    stability_margin,
)
from .stress import stress_polygon, stress_potential

SCHEMA_VERSION = 1

# artifact file names are fixed so repeated runs are byte-comparable
FIELD_CSV = "field.csv"
ENERGY_CSV = "energy_history.csv"
ANGULAR_CSV = "angular.csv"
TRAJECTORY_CSV = "trajectory.csv"
CURVES_CSV = "curves.csv"
STRESS_CSV = "stress_potential.csv"
REPORT_JSON = "report.json"


# ---------------------------------------------------------------------------
# config validation


def _reject_unknown(section: dict, allowed, where: str):
    for key in section:
        if key not in allowed:
            raise ConfigurationError(f"unknown key '{key}' in {where}")


def _as_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{where} must be a number, got {value!r}")
    return float(value)


def _as_positive(value, where: str) -> float:
    v = _as_float(value, where)
    if v <= 0:
        raise ConfigurationError(f"{where} must be positive, got {value!r}")
    return v


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"{where} must be an integer, got {value!r}")
    return int(value)


def _norm_extent(value):
    arr = np.asarray(value, dtype=float)
    if arr.shape == (4,):
        arr = arr.reshape(2, 2)
    if arr.shape != (2, 2):
        raise ConfigurationError(
            "grid.extent must be [[x0, x1], [y0, y1]] or [x0, x1, y0, y1]"
        )
    if arr[0, 1] <= arr[0, 0] or arr[1, 1] <= arr[1, 0]:
        raise ConfigurationError("grid.extent sides must have positive length")
    return [[float(v) for v in row] for row in arr]


def _norm_grid(section) -> dict:
    if not isinstance(section, dict):
        raise ConfigurationError("grid section must be an object")
    _reject_unknown(section, {"h", "extent"}, "grid")
    if "h" not in section or "extent" not in section:
        raise ConfigurationError("grid needs both grid.h and grid.extent")
    return {
        "h": _as_positive(section["h"], "grid.h"),
        "extent": _norm_extent(section["extent"]),
    }


_BOUNDARY_KEYS = {
    "layer": {"kind", "ts"},
    "saddle": {"kind", "diagonal"},
    "multiend": {"kind", "angles"},
    "constant": {"kind", "value"},
}


def _norm_boundary(section) -> dict:
    if not isinstance(section, dict):
        raise ConfigurationError("boundary section must be an object")
    kind = section.get("kind")
    if kind not in _BOUNDARY_KEYS:
        raise ConfigurationError(
            f"boundary.kind must be one of {sorted(_BOUNDARY_KEYS)}, got {kind!r}"
        )
    _reject_unknown(section, _BOUNDARY_KEYS[kind], "boundary")
    out = {"kind": kind}
    if kind == "layer":
        ts = [
            _as_float(v, "boundary.ts") for v in section.get("ts", [0.0])
        ]
        if not ts:
            raise ConfigurationError("boundary.ts must not be empty")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigurationError("boundary.ts must be strictly increasing")
        out["ts"] = ts
    elif kind == "saddle":
        diagonal = section.get("diagonal", True)
        if not isinstance(diagonal, bool):
            raise ConfigurationError("boundary.diagonal must be a boolean")
        out["diagonal"] = diagonal
    elif kind == "multiend":
        angles = section.get("angles")
        if not angles:
            raise ConfigurationError("boundary.angles must list line angles in degrees")
        out["angles"] = [_as_float(v, "boundary.angles") for v in angles]
    else:
        if "value" not in section:
            raise ConfigurationError("boundary.value is required for kind 'constant'")
        out["value"] = _as_float(section["value"], "boundary.value")
    return out


def _norm_potential(section) -> dict:
    if section is None:
        return {"kind": "quartic"}
    if not isinstance(section, dict):
        raise ConfigurationError("potential section must be an object")
    kind = section.get("kind", "quartic")
    if kind == "quartic":
        _reject_unknown(section, {"kind"}, "potential")
        return {"kind": "quartic"}
    if kind == "tabulated":
        _reject_unknown(section, {"kind", "path"}, "potential")
        path = section.get("path")
        if not isinstance(path, str) or not path:
            raise ConfigurationError("potential.path is required for kind 'tabulated'")
        return {"kind": "tabulated", "path": path}
    raise ConfigurationError(
        f"potential.kind must be 'quartic' or 'tabulated', got {kind!r}"
    )


def _norm_solver(section) -> dict:
    section = {} if section is None else section
    if not isinstance(section, dict):
        raise ConfigurationError("solver section must be an object")
    allowed = {"tol", "max_newton", "max_flow", "tau", "flow_threshold", "jitter"}
    _reject_unknown(section, allowed, "solver")
    out = {
        "tol": _as_positive(section.get("tol", 1e-10), "solver.tol"),
        "max_newton": _as_int(section.get("max_newton", 30), "solver.max_newton"),
        "max_flow": _as_int(section.get("max_flow", 400), "solver.max_flow"),
        "tau": None,
        "flow_threshold": _as_positive(
            section.get("flow_threshold", 0.5), "solver.flow_threshold"
        ),
        "jitter": _as_float(section.get("jitter", 0.0), "solver.jitter"),
    }
    if section.get("tau") is not None:
        out["tau"] = _as_positive(section["tau"], "solver.tau")
    if out["jitter"] < 0:
        raise ConfigurationError("solver.jitter must be nonnegative")
    return out


def _norm_blowdown(section) -> dict:
    allowed = {"r_in", "r_out", "nbins", "threshold", "merge_bins", "center"}
    _reject_unknown(section, allowed, "analysis.blowdown")
    out = {
        "r_in": None,
        "r_out": None,
        "nbins": _as_int(section.get("nbins", 720), "analysis.blowdown.nbins"),
        "threshold": _as_positive(
            section.get("threshold", 0.2), "analysis.blowdown.threshold"
        ),
        "merge_bins": _as_int(section.get("merge_bins", 3), "analysis.blowdown.merge_bins"),
        "center": [
            _as_float(v, "analysis.blowdown.center")
            for v in section.get("center", [0.0, 0.0])
        ],
    }
    if len(out["center"]) != 2:
        raise ConfigurationError("analysis.blowdown.center must be [x, y]")
    for key in ("r_in", "r_out"):
        if section.get(key) is not None:
            out[key] = _as_positive(section[key], f"analysis.blowdown.{key}")
    return out


def _norm_stress(section) -> dict:
    allowed = {"level", "angle_tol_deg", "min_side_fraction", "dump_potential"}
    _reject_unknown(section, allowed, "analysis.stress")
    out = {
        "level": None,
        "angle_tol_deg": _as_positive(
            section.get("angle_tol_deg", 10.0), "analysis.stress.angle_tol_deg"
        ),
        "min_side_fraction": _as_positive(
            section.get("min_side_fraction", 0.05), "analysis.stress.min_side_fraction"
        ),
        "dump_potential": bool(section.get("dump_potential", False)),
    }
    if section.get("level") is not None:
        out["level"] = _as_positive(section["level"], "analysis.stress.level")
    return out


def _norm_fit(section) -> dict:
    allowed = {"n_layers", "window", "floor", "tail_columns"}
    _reject_unknown(section, allowed, "analysis.fit")
    out = {
        "n_layers": None,
        "window": None,
        "floor": _as_positive(section.get("floor", 1e-12), "analysis.fit.floor"),
        "tail_columns": _as_int(section.get("tail_columns", 30), "analysis.fit.tail_columns"),
    }
    if section.get("n_layers") is not None:
        out["n_layers"] = _as_int(section["n_layers"], "analysis.fit.n_layers")
    if section.get("window") is not None:
        w = section["window"]
        if not isinstance(w, (list, tuple)) or len(w) != 2:
            raise ConfigurationError("analysis.fit.window must be [x_lo, x_hi]")
        out["window"] = [_as_float(v, "analysis.fit.window") for v in w]
    return out


def _norm_spectral(section) -> dict:
    allowed = {"index", "margin", "exterior_radius", "gap"}
    _reject_unknown(section, allowed, "analysis.spectral")
    out = {
        "index": bool(section.get("index", True)),
        "margin": bool(section.get("margin", False)),
        "exterior_radius": None,
        "gap": None,
    }
    if section.get("exterior_radius") is not None:
        out["exterior_radius"] = _as_positive(
            section["exterior_radius"], "analysis.spectral.exterior_radius"
        )
    if section.get("gap") is not None:
        gap = section["gap"]
        if not isinstance(gap, dict):
            raise ConfigurationError("analysis.spectral.gap must be an object")
        _reject_unknown(gap, {"L_minus", "L_plus", "h"}, "analysis.spectral.gap")
        out["gap"] = {
            "L_minus": _as_positive(gap.get("L_minus", 20.0), "analysis.spectral.gap.L_minus"),
            "L_plus": _as_positive(gap.get("L_plus", 20.0), "analysis.spectral.gap.L_plus"),
            "h": _as_positive(gap.get("h", 0.01), "analysis.spectral.gap.h"),
        }
    return out


def _norm_curves(section) -> dict:
    _reject_unknown(section, {"level"}, "analysis.curves")
    return {"level": _as_float(section.get("level", 0.0), "analysis.curves.level")}


_ANALYSIS_NORMALIZERS = {
    "blowdown": _norm_blowdown,
    "stress": _norm_stress,
    "fit": _norm_fit,
    "spectral": _norm_spectral,
    "curves": _norm_curves,
}


def _norm_analysis(section) -> dict:
    section = {} if section is None else section
    if not isinstance(section, dict):
        raise ConfigurationError("analysis section must be an object")
    _reject_unknown(section, set(_ANALYSIS_NORMALIZERS), "analysis")
    out = {}
    for name, norm in _ANALYSIS_NORMALIZERS.items():
        if name in section:
            sub = section[name]
            if not isinstance(sub, dict):
                raise ConfigurationError(f"analysis.{name} must be an object")
            out[name] = norm(sub)
    return out


def validate_config(raw: dict) -> dict:
    """Normalize a raw config dict: fill defaults, reject unknown keys.

    The returned dict is fully explicit, so hashing it captures every
    setting that could change a result.
    """
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    allowed = {"grid", "boundary", "potential", "solver", "analysis"}
    _reject_unknown(raw, allowed, "config")
    out = {
        "potential": _norm_potential(raw.get("potential")),
        "solver": _norm_solver(raw.get("solver")),
        "analysis": _norm_analysis(raw.get("analysis")),
    }
    if "grid" in raw:
        out["grid"] = _norm_grid(raw["grid"])
    if "boundary" in raw:
        out["boundary"] = _norm_boundary(raw["boundary"])
    return out


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def config_sha256(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def _jsonable(obj):
    """Recursively convert numpy scalars and arrays to plain python."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# pipeline pieces


def _staged(stage: str, fn):
    """Run one pipeline stage, prefixing any failure with the stage name."""
    try:
        return fn()
    except AclabError as exc:
        raise type(exc)(f"{stage}: {exc}") from exc


def build_potential(config: dict) -> Potential:
    section = config["potential"]
    if section["kind"] == "quartic":
        return make_quartic()
    return load_tabulated(section["path"])


def build_ansatz(config: dict, prof: Profile1D) -> Field2D:
    if "grid" not in config or "boundary" not in config:
        raise ConfigurationError("config needs grid and boundary sections to solve")
    grid = grid_from_extent(config["grid"]["extent"], config["grid"]["h"])
    b = config["boundary"]
    if b["kind"] == "layer":
        return layer_ansatz(prof, grid, b["ts"])
    if b["kind"] == "saddle":
        return saddle_ansatz(prof, grid, diagonal=b["diagonal"])
    if b["kind"] == "multiend":
        return multiend_ansatz(prof, grid, b["angles"])
    return constant_ansatz(grid, b["value"])


def _modica_violation(f: Field2D, p: Potential) -> float:
    gx, gy = gradient(f)
    interior = f.interior_mask()
    ke = 0.5 * (gx.samples[interior] ** 2 + gy.samples[interior] ** 2)
    wv = np.asarray(p.w(f.samples[interior]), dtype=float)
    return float(max(0.0, (ke - wv).max()))


def _blowdown_section(opts, f, p, s0, out_dir, artifacts):
    extent = f.grid.extent
    cx, cy = opts["center"]
    half = min(extent[1] - cx, cx - extent[0], extent[3] - cy, cy - extent[2])
    r_out = opts["r_out"] if opts["r_out"] is not None else 0.9 * half
    r_in = opts["r_in"] if opts["r_in"] is not None else 0.5 * r_out
    dist = angular_energy(f, p, r_in, r_out, center=(cx, cy), nbins=opts["nbins"])
    if out_dir is not None:
        dist.to_csv(os.path.join(out_dir, ANGULAR_CSV))
        artifacts["angular"] = ANGULAR_CSV
    rays = extract_rays(
        dist, s0, threshold=opts["threshold"], merge_bins=opts["merge_bins"]
    )
    entries = []
    for r in rays:
        entries.append(
            {
                "angle_deg": r.angle_deg,
                "density_raw": r.density,
                "n": r.n,
                "rounding_defect": r.rounding_defect,
                "tau": {
                    "xx": float(r.tau[0, 0]),
                    "xy": float(r.tau[0, 1]),
                    "yy": float(r.tau[1, 1]),
                },
                "equipartition": r.equipartition,
            }
        )
    return {
        "r_in": float(r_in),
        "r_out": float(r_out),
        "rays": entries,
        "n_rays": len(entries),
        "balancing_defect": balancing_defect(rays),
    }


def _stress_section(opts, f, p, s0, out_dir, artifacts):
    sp = stress_potential(f, p)
    entry = {
        "consistency_defect": sp.consistency_defect,
        "trace_residual": sp.trace_residual,
        "convexity_margin": sp.convexity_margin,
        "linear_growth_const": sp.linear_growth_const,
        "residual_sup": sp.residual_sup,
    }
    if opts["level"] is not None:
        poly = stress_polygon(
            sp,
            opts["level"],
            angle_tol_deg=opts["angle_tol_deg"],
            min_side_fraction=opts["min_side_fraction"],
        )
        entry["level"] = poly.level
        entry["polygon"] = [
            {
                "vertex_angle_deg": v.direction_angle_deg,
                "interior_angle_deg": v.angle_deg,
                "jump_over_2sigma0": v.jump_over(2.0 * s0),
                "at_infinity": v.at_infinity,
            }
            for v in poly.vertices
        ]
        entry["open_directions"] = [list(d) for d in poly.open_directions]
    if opts["dump_potential"] and out_dir is not None:
        save_field_csv(sp.potential_field, os.path.join(out_dir, STRESS_CSV))
        artifacts["stress_potential"] = STRESS_CSV
    return entry


def _fit_section(opts, f, prof, p, s0, out_dir, artifacts):
    traj = fit_trajectory(f, prof, p, n_layers=opts["n_layers"])
    if out_dir is not None:
        traj.to_csv(os.path.join(out_dir, TRAJECTORY_CSV))
        artifacts["trajectory"] = TRAJECTORY_CSV
    window = None if opts["window"] is None else tuple(opts["window"])
    floor = opts["floor"]
    tail = min(opts["tail_columns"], traj.x.size)
    h_asym = float(np.mean(traj.energy[-tail:]))

    xs_tp, tp = traj.t_prime()
    tp_mag = np.abs(tp).max(axis=1)
    xs_fx, tpf = t_prime_flux(f, prof, traj)
    cross = float(np.abs(tp - tpf[1:-1]).max())

    def fitted(x, vals, asym):
        d = decay_fit(x, vals, asymptote=asym, window=window, floor=floor)
        return {
            "rate": d.rate,
            "r2": d.r2,
            "noise_dominated": d.noise_dominated,
            "floor": d.floor,
            "n_points": d.n_points,
        }

    return {
        "n_layers": traj.n_layers,
        "hamiltonian_asymptote": h_asym,
        "hamiltonian_reference": 2.0 * traj.n_layers * s0,
        "t_prime_crosscheck_sup": cross,
        "rates": {
            "F": fitted(traj.x, traj.misfit, 0.0),
            "hamiltonian": fitted(traj.x, traj.energy, h_asym),
            "t_prime": fitted(xs_tp, tp_mag, 0.0),
        },
    }


def _spectral_section(opts, f, p, prof):
    entry = {}
    if opts["index"]:
        entry["morse_index"] = morse_index(f, p)
    if opts["margin"]:
        entry["margin"] = stability_margin(f, p)
    if opts["exterior_radius"] is not None:
        entry["exterior_min_eigenvalue"] = exterior_min_eigenvalue(
            f, p, opts["exterior_radius"]
        )
    if opts["gap"] is not None:
        g = opts["gap"]
        res = line_gap(p, prof, L_minus=g["L_minus"], L_plus=g["L_plus"], h=g["h"])
        entry["gap"] = {
            "L_minus": res.L_minus,
            "L_plus": res.L_plus,
            "h": res.h,
            "mu_hat": res.mu_hat,
            "lambda_bottom": res.lambda_bottom,
            "secular_root": res.secular_root,
            "from_uncoupled": res.from_uncoupled,
        }
    return entry


def _curves_section(opts, f, out_dir, artifacts):
    curves = zero_contours(f, level=opts["level"])
    if out_dir is not None:
        save_curves_csv(curves, os.path.join(out_dir, CURVES_CSV))
        artifacts["curves"] = CURVES_CSV
    entries = []
    for c in curves:
        graph = c.as_graph(f.grid)
        end_slopes = None
        if graph is not None and graph[0].size >= 3:
            gx, gy = graph
            end_slopes = [
                float((gy[1] - gy[0]) / (gx[1] - gx[0])),
                float((gy[-1] - gy[-2]) / (gx[-1] - gx[-2])),
            ]
        entries.append(
            {
                "points": int(len(c.points)),
                "closed": bool(c.closed),
                "is_graph": graph is not None,
                "end_slopes": end_slopes,
            }
        )
    return {"level": opts["level"], "count": len(entries), "curves": entries}


def analyze_field(
    config: dict,
    f: Field2D,
    prof: Profile1D,
    p: Potential,
    out_dir: Optional[str] = None,
    timings: Optional[dict] = None,
    artifacts: Optional[dict] = None,
):
    """Run every analysis section the config enables against a field."""
    analysis = config["analysis"]
    s0 = sigma0(prof)
    artifacts = {} if artifacts is None else artifacts
    sections = {}

    def timed(name, fn):
        t0 = time.perf_counter()
        sections[name] = _staged(name, fn)
        if timings is not None:
            timings[name] = time.perf_counter() - t0

    if "blowdown" in analysis:
        timed("blowdown", lambda: _blowdown_section(
            analysis["blowdown"], f, p, s0, out_dir, artifacts))
    if "stress" in analysis:
        timed("stress", lambda: _stress_section(
            analysis["stress"], f, p, s0, out_dir, artifacts))
    if "fit" in analysis:
        timed("fit", lambda: _fit_section(
            analysis["fit"], f, prof, p, s0, out_dir, artifacts))
    if "spectral" in analysis:
        timed("spectral", lambda: _spectral_section(analysis["spectral"], f, p, prof))
    if "curves" in analysis:
        timed("curves", lambda: _curves_section(analysis["curves"], f, out_dir, artifacts))
    return sections


def _meta(sha, seed, grid, artifacts, timings) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config_sha256": sha,
        "seed": int(seed),
        "grid": {
            "h": grid.h,
            "extent": [list(grid.extent[:2]), list(grid.extent[2:])],
            "nx": grid.nx,
            "ny": grid.ny,
        },
        "artifacts": artifacts,
        "timings": timings,
    }


def run(
    config: dict,
    seed: int = 0,
    out_dir: Optional[str] = None,
    solve_only: bool = False,
) -> dict:
    """Full pipeline: profile, solve, enabled analyses, one report dict.

    When out_dir is given, the solved field, the energy history, any
    per-analysis tables, and report.json are written there. solve_only
    stops after the PDE solve; the config hash still covers the whole
    config, so a later analysis pass over the dumped field merges cleanly.
    """
    config = validate_config(config)
    sha = config_sha256(config)
    timings = {}
    artifacts = {}

    t0 = time.perf_counter()
    p = _staged("profile", lambda: build_potential(config))
    prof = _staged("profile", lambda: solve_profile(p))
    timings["profile"] = time.perf_counter() - t0

    ansatz = _staged("solve", lambda: build_ansatz(config, prof))
    sopt = config["solver"]
    if sopt["jitter"] > 0.0:
        rng = np.random.default_rng(seed)
        interior = ansatz.interior_mask()
        ansatz.samples[interior] += sopt["jitter"] * rng.standard_normal(
            int(interior.sum())
        )

    t0 = time.perf_counter()
    sol = _staged(
        "solve",
        lambda: solve_dirichlet(
            p,
            ansatz,
            tol=sopt["tol"],
            max_newton=sopt["max_newton"],
            max_flow=sopt["max_flow"],
            tau=sopt["tau"],
            flow_threshold=sopt["flow_threshold"],
        ),
    )
    timings["solve"] = time.perf_counter() - t0

    f = sol.field
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        save_field_csv(f, os.path.join(out_dir, FIELD_CSV))
        artifacts["field"] = FIELD_CSV
        with open(os.path.join(out_dir, ENERGY_CSV), "w") as fh:
            fh.write("step,energy\n")
            for k, e in enumerate(sol.energy_history):
                fh.write(f"{k},{e:.17g}\n")
        artifacts["energy_history"] = ENERGY_CSV

    report = {
        "config": config,
        "profile": {"sigma0": sigma0(prof)},
        "solve": {
            "residual_sup": sol.residual_sup,
            "newton_iters": sol.newton_iters,
            "flow_steps": sol.flow_steps,
            "energy": sol.energy,
            "modica_violation": _modica_violation(f, p),
            "energy_history_path": artifacts.get("energy_history"),
        },
    }
    if not solve_only:
        report.update(analyze_field(config, f, prof, p, out_dir, timings, artifacts))
    report["meta"] = _meta(sha, seed, f.grid, artifacts, timings)
    if out_dir is not None:
        write_report(report, os.path.join(out_dir, REPORT_JSON))
    return report


def analyze_run(config: dict, f: Field2D, out_dir: Optional[str] = None) -> dict:
    """Analysis sections of the pipeline against an already solved field.

    Returns a report without a solve section; writing or merging it into
    an existing report file is left to the caller.
    """
    config = validate_config(config)
    if not config["analysis"]:
        raise ConfigurationError(
            "no analysis sections enabled; add an analysis section to the config"
        )
    sha = config_sha256(config)
    timings = {}
    artifacts = {}

    t0 = time.perf_counter()
    p = _staged("profile", lambda: build_potential(config))
    prof = _staged("profile", lambda: solve_profile(p))
    timings["profile"] = time.perf_counter() - t0

    report = {"config": config, "profile": {"sigma0": sigma0(prof)}}
    report.update(analyze_field(config, f, prof, p, out_dir, timings, artifacts))
    report["meta"] = _meta(sha, 0, f.grid, artifacts, timings)
    return report


# ---------------------------------------------------------------------------
# report files


def write_report(report: dict, path: str):
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2)
    with open(path, "w") as fh:
        fh.write(text + "\n")


def load_report(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"report file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}")


def merge_reports(base: dict, update: dict) -> dict:
    """Overlay analysis sections of one report onto another.

    Both reports must carry the same config hash; results computed under
    different configs never belong in the same document.
    """
    sha_a = base.get("meta", {}).get("config_sha256")
    sha_b = update.get("meta", {}).get("config_sha256")
    if sha_a != sha_b:
        raise ConfigurationError(
            f"refusing to merge reports with different config hashes "
            f"({sha_a} vs {sha_b})"
        )
    out = dict(base)
    for key, value in update.items():
        if key == "meta":
            continue
        out[key] = value
    meta = dict(base["meta"])
    meta["timings"] = {**base["meta"].get("timings", {}),
                      **update["meta"].get("timings", {})}
    meta["artifacts"] = {**base["meta"].get("artifacts", {}),
                        **update["meta"].get("artifacts", {})}
    out["meta"] = meta
    return out


def strip_timings(report: dict) -> dict:
    """Copy of a report with the wall-clock entries removed.

    Everything else in a report is a pure function of the config, so this
    is the part that must match between two runs of the same config.
    """
    out = json.loads(json.dumps(_jsonable(report)))
    out.get("meta", {}).pop("timings", None)
    return out
