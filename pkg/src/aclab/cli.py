"""Command line front end.

Subcommands mirror the pipeline stages: `profile` emits the 1D profile
artifacts, `solve` stops after the PDE solve, `analyze` re-runs analysis
sections against a dumped field, `gap` sweeps the 1D segment spectrum,
`run` does the whole pipeline in one process, and `report` pretty-prints
an existing report file.

Exit codes: 0 on success, 1 for configuration problems (bad config keys,
missing input files, a locked output directory), 2 when a numerical stage
fails (non-convergence, degenerate fields, inconsistent cross-checks).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from typing import List, Optional

from .errors import AclabError, ConfigurationError
from .field import load_field_csv
from .potentials import load_tabulated, make_quartic
from .profile1d import first_integral_residual, sigma0, solve_profile
from .report import (
    REPORT_JSON,
    analyze_run,
    load_report,
    merge_reports,
    run,
    write_report,
)
from .spectral import line_gap

LOCK_NAME = ".aclab.lock"


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors, so they exit with 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"aclab: {message}", file=sys.stderr)
        raise SystemExit(1)


# ---------------------------------------------------------------------------
# helpers


def _load_config(path: Optional[str], overrides: Optional[List[str]]) -> dict:
    if path is None:
        cfg = {}
    else:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path} is not valid JSON: {exc}")
    for item in overrides or []:
        _apply_override(cfg, item)
    return cfg


def _apply_override(cfg: dict, item: str):
    """Apply one 'dotted.key=value' override; values parse as JSON when
    they can, otherwise they are taken as strings."""
    if "=" not in item:
        raise ConfigurationError(f"override '{item}' is not of the form key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for part in parts[:-1]:
        nxt = node.setdefault(part, {})
        if not isinstance(nxt, dict):
            raise ConfigurationError(f"override '{key}' descends through a non-object")
        node = nxt
    node[parts[-1]] = value


@contextlib.contextmanager
def _locked(out_dir: str):
    """Hold the single-instance lock for an output directory."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, LOCK_NAME)
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigurationError(
            f"output directory {out_dir} is in use (remove stale {path} if "
            "no other run is active)"
        )
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        try:
            os.remove(path)
        except OSError:
            pass


def _build_cli_potential(path: Optional[str]):
    if path is None:
        return make_quartic()
    return load_tabulated(path)


def _print_solve_summary(report: dict):
    s = report["solve"]
    print(
        f"solved: residual {s['residual_sup']:.3e}, "
        f"{s['newton_iters']} Newton steps, {s['flow_steps']} flow steps, "
        f"energy {s['energy']:.6f}"
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_profile(args) -> int:
    p = _build_cli_potential(args.potential)
    prof = solve_profile(p, half_width=args.half_width)
    prof.to_csv(args.out)
    print(f"profile written to {args.out}")
    print(f"sigma0 = {sigma0(prof):.15g}")
    print(f"first integral residual = {first_integral_residual(prof):.3e}")
    return 0


def cmd_solve(args) -> int:
    cfg = _load_config(args.config, args.set)
    with _locked(args.out_dir):
        report = run(cfg, seed=args.seed, out_dir=args.out_dir, solve_only=True)
    _print_solve_summary(report)
    print(f"report written to {os.path.join(args.out_dir, REPORT_JSON)}")
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args.config, args.set)
    with _locked(args.out_dir):
        report = run(cfg, seed=args.seed, out_dir=args.out_dir)
    _print_solve_summary(report)
    for name in ("blowdown", "stress", "fit", "spectral", "curves"):
        if name in report:
            print(f"{name}: done")
    print(f"report written to {os.path.join(args.out_dir, REPORT_JSON)}")
    return 0


_SECTION_FLAGS = ("blowdown", "stress", "fit", "spectral", "curves")


def cmd_analyze(args) -> int:
    try:
        field = load_field_csv(args.field)
    except FileNotFoundError:
        raise ConfigurationError(f"field file not found: {args.field}")
    cfg = _load_config(args.config, args.set)
    for name in _SECTION_FLAGS:
        if getattr(args, name):
            cfg.setdefault("analysis", {}).setdefault(name, {})

    if args.out_dir is None:
        report = analyze_run(cfg, field, out_dir=None)
        print(json.dumps(_public(report), sort_keys=True, indent=2))
        return 0

    with _locked(args.out_dir):
        report = analyze_run(cfg, field, out_dir=args.out_dir)
        path = os.path.join(args.out_dir, REPORT_JSON)
        if os.path.exists(path):
            report = merge_reports(load_report(path), report)
        write_report(report, path)
    print(f"report written to {path}")
    return 0


def _public(report: dict) -> dict:
    from .report import _jsonable

    return _jsonable(report)


def cmd_gap(args) -> int:
    if args.L and (args.L_minus is not None or args.L_plus is not None):
        raise ConfigurationError("pass either --L or --L-minus/--L-plus, not both")
    if args.L:
        pairs = [(L, L) for L in args.L]
    else:
        lm = 20.0 if args.L_minus is None else args.L_minus
        lp = 20.0 if args.L_plus is None else args.L_plus
        pairs = [(lm, lp)]
    p = _build_cli_potential(args.potential)
    prof = solve_profile(p)
    rows = []
    for lm, lp in pairs:
        res = line_gap(p, prof, L_minus=lm, L_plus=lp, h=args.h)
        rows.append(
            {
                "L_minus": res.L_minus,
                "L_plus": res.L_plus,
                "h": res.h,
                "mu_hat": res.mu_hat,
                "lambda_bottom": res.lambda_bottom,
                "secular_root": res.secular_root,
                "from_uncoupled": res.from_uncoupled,
            }
        )
        origin = "uncoupled level" if res.from_uncoupled else "secular root"
        print(
            f"L=({res.L_minus:g}, {res.L_plus:g}) h={res.h:g}: "
            f"mu_hat = {res.mu_hat:.9f} ({origin}), "
            f"lambda_bottom = {res.lambda_bottom:.3e}"
        )
    if args.out is not None:
        with open(args.out, "w") as fh:
            json.dump({"sweep": rows}, fh, sort_keys=True, indent=2)
            fh.write("\n")
        print(f"sweep written to {args.out}")
    return 0


def cmd_report(args) -> int:
    report = load_report(args.path)
    meta = report.get("meta", {})
    print(f"report {args.path}")
    print(
        f"  schema {meta.get('schema_version')}, package {meta.get('package_version')}, "
        f"seed {meta.get('seed')}"
    )
    print(f"  config sha256 {meta.get('config_sha256')}")
    grid = meta.get("grid")
    if grid:
        print(
            f"  grid: h={grid['h']:g} extent {grid['extent']} "
            f"({grid['nx']}x{grid['ny']})"
        )
    if "profile" in report:
        print(f"  profile: sigma0 = {report['profile']['sigma0']:.12g}")
    if "solve" in report:
        s = report["solve"]
        print(
            f"  solve: residual {s['residual_sup']:.3e}, "
            f"{s['newton_iters']} Newton / {s['flow_steps']} flow steps, "
            f"energy {s['energy']:.6f}, modica violation {s['modica_violation']:.3e}"
        )
    if "blowdown" in report:
        b = report["blowdown"]
        print(
            f"  blowdown: {b['n_rays']} rays over ({b['r_in']:g}, {b['r_out']:g}), "
            f"balancing defect {b['balancing_defect']:.3e}"
        )
        for ray in b["rays"]:
            print(
                f"    ray {ray['angle_deg']:8.2f} deg: n={ray['n']} "
                f"(rounding defect {ray['rounding_defect']:.3f}), "
                f"equipartition {ray['equipartition']:.4f}"
            )
    if "stress" in report:
        st = report["stress"]
        print(
            f"  stress: consistency {st['consistency_defect']:.3e}, "
            f"growth const {st['linear_growth_const']:.6f}, "
            f"convexity margin {st['convexity_margin']:.3e}"
        )
        for v in st.get("polygon", []):
            jump = v["jump_over_2sigma0"]
            jtxt = "n/a" if jump is None else f"{jump:.4f}"
            inf = " (at infinity)" if v["at_infinity"] else ""
            print(
                f"    vertex {v['vertex_angle_deg']:8.2f} deg: "
                f"jump/(2 sigma0) = {jtxt}{inf}"
            )
    if "fit" in report:
        ft = report["fit"]
        print(
            f"  fit: {ft['n_layers']} layers, H asymptote "
            f"{ft['hamiltonian_asymptote']:.6f} "
            f"(2 N sigma0 = {ft['hamiltonian_reference']:.6f})"
        )
        for name, d in sorted(ft["rates"].items()):
            if d["noise_dominated"]:
                print(f"    {name}: noise dominated below {d['floor']:.1e}")
            else:
                print(f"    {name}: rate {d['rate']:.4f} (R^2 {d['r2']:.5f})")
    if "spectral" in report:
        sp = report["spectral"]
        if "morse_index" in sp:
            print(f"  spectral: morse index {sp['morse_index']}")
        if "margin" in sp:
            print(f"    margin {sp['margin']:.6f}")
        if "exterior_min_eigenvalue" in sp:
            print(f"    exterior bottom {sp['exterior_min_eigenvalue']:.6f}")
        if "gap" in sp:
            g = sp["gap"]
            print(
                f"    gap: mu_hat {g['mu_hat']:.9f} on L=({g['L_minus']:g}, "
                f"{g['L_plus']:g}) h={g['h']:g}"
            )
    if "curves" in report:
        c = report["curves"]
        print(f"  curves: {c['count']} at level {c['level']:g}")
    timings = meta.get("timings", {})
    if timings:
        parts = ", ".join(f"{k} {v:.2f}s" for k, v in sorted(timings.items()))
        print(f"  timings: {parts}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aclab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("profile", help="emit the 1D profile and sigma0")
    pr.add_argument("--potential", help="tabulated potential CSV (default quartic)")
    pr.add_argument("--half-width", type=float, default=12.0)
    pr.add_argument("--out", default="profile.csv")
    pr.set_defaults(fn=cmd_profile)

    def common_run_args(sp, need_out=True):
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--out-dir", required=need_out, help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override a config key, e.g. --set grid.h=0.05",
        )

    so = sub.add_parser("solve", help="solve the Dirichlet problem and dump the field")
    common_run_args(so)
    so.set_defaults(fn=cmd_solve)

    ru = sub.add_parser("run", help="solve, then run every enabled analysis")
    common_run_args(ru)
    ru.set_defaults(fn=cmd_run)

    an = sub.add_parser("analyze", help="re-run analyses on a dumped field")
    an.add_argument("--field", required=True, help="field CSV from a solve")
    an.add_argument("--config", help="JSON run config")
    an.add_argument("--out-dir", help="merge results into DIR/report.json")
    an.add_argument("--set", action="append", metavar="KEY=VALUE")
    for name in _SECTION_FLAGS:
        an.add_argument(
            f"--{name}", action="store_true",
            help=f"enable the {name} section with default settings",
        )
    an.set_defaults(fn=cmd_analyze)

    ga = sub.add_parser("gap", help="sweep the 1D segment spectral gap")
    ga.add_argument("--L", type=float, nargs="+", help="symmetric segment sweep")
    ga.add_argument("--L-minus", dest="L_minus", type=float)
    ga.add_argument("--L-plus", dest="L_plus", type=float)
    ga.add_argument("--h", type=float, default=0.01)
    ga.add_argument("--potential", help="tabulated potential CSV (default quartic)")
    ga.add_argument("--out", help="write the sweep as JSON")
    ga.set_defaults(fn=cmd_gap)

    re = sub.add_parser("report", help="pretty-print an existing report.json")
    re.add_argument("path")
    re.set_defaults(fn=cmd_report)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as exc:
        print(f"aclab: config error: {exc}", file=sys.stderr)
        return 1
    except AclabError as exc:
        print(f"aclab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
