"""Command-line front end: render, solve, probe, and the full pipeline.

Configuration is a plain-text file of dotted `key = value` lines (see
README for the schema).  Exit codes: 0 success, 1 I/O or validation
failure, 2 ill-posed model/boundary combination, 3 non-convergence or
numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .camera import CameraRig
from .errors import IncompatibleProblemError, SolverError, ValidationError
from .fileio import (
    Config,
    model_from_entries,
    read_grid,
    read_image,
    write_grid,
    write_image,
    write_ply,
)
from .probes import run_all_checks
from .scene import HeightField, analytic_surface, render
from .solver import STATE_CONSTRAINTS, BoundaryCondition, SolverConfig, solve

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_ILL_POSED = 2
EXIT_NO_CONVERGENCE = 3


def _build_rig(cfg: Config) -> CameraRig:
    return CameraRig(
        f=cfg.get_float("camera.f", 1.0),
        x_min=cfg.get_float("camera.x_min", -0.5),
        x_max=cfg.get_float("camera.x_max", 0.5),
        y_min=cfg.get_float("camera.y_min", -0.5),
        y_max=cfg.get_float("camera.y_max", 0.5),
        nx=cfg.get_int("camera.nx", 65),
        ny=cfg.get_int("camera.ny", cfg.get_int("camera.nx", 65)),
    )


def _build_surface(cfg: Config, rig: CameraRig) -> HeightField:
    if "surface.file" in cfg:
        grid_rig, u = read_grid(cfg.require("surface.file"))
        return HeightField(grid_rig, u)
    name = cfg.get("surface.name", "dome")
    params = {}
    for key in ("u0", "amplitude", "width"):
        value = cfg.get_float(f"surface.{key}")
        if value is not None:
            params[key] = value
    return analytic_surface(name, rig, **params)


def _build_bc(cfg: Config, truth: HeightField | None) -> BoundaryCondition:
    kind = cfg.get("bc.kind", STATE_CONSTRAINTS)
    space = cfg.get("bc.space", "height")
    if kind in (STATE_CONSTRAINTS, "neumann"):
        return BoundaryCondition(kind)
    source = cfg.get("bc.datum", "ground_truth")
    if source == "ground_truth":
        if truth is None:
            raise ValidationError("bc.datum = ground_truth needs input.surface (or a surface config)")
        values = truth.u if space == "height" else np.log(truth.u)
    elif source == "constant":
        values = cfg.get_float("bc.constant")
        if values is None:
            raise ValidationError("bc.datum = constant needs bc.constant")
    elif source == "file":
        _, values = read_grid(cfg.require("bc.file"))
    else:
        raise ValidationError(f"unknown bc.datum source {source!r}")
    return BoundaryCondition(kind, values, space)


def _build_solver_config(cfg: Config, init_override=None) -> SolverConfig:
    init = init_override if init_override is not None else cfg.get("solver.init", "auto")
    return SolverConfig(
        cfl=cfg.get_float("solver.cfl", 0.9),
        sigma_x=cfg.get_float("solver.sigma_x"),
        sigma_y=cfg.get_float("solver.sigma_y"),
        tol=cfg.get_float("solver.tol", 1e-8),
        max_iters=cfg.get_int("solver.max_iters", 1_000_000),
        init=init,
        init_value=cfg.get_float("solver.init_value"),
        delta_min=cfg.get_float("solver.delta_min", 1e-6),
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    if not out.is_dir():
        raise ValidationError(f"output directory {out} does not exist")
    return out


def _dump_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_render(args) -> int:
    cfg = Config.from_file(args.config)
    out = _out_dir(args)
    rig = _build_rig(cfg)
    model = model_from_entries(cfg)
    surface = _build_surface(cfg, rig)
    image = render(model, surface)
    if cfg.get_bool("render.normalize", False):
        image = image.normalized()
    write_image(out / "image.pgm", image)
    write_grid(out / "surface_true.grid", surface.rig, surface.u)
    print(f"rendered {surface.rig.nx}x{surface.rig.ny} {model.kind} image -> {out / 'image.pgm'}")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = Config.from_file(args.config)
    out = _out_dir(args)
    image = read_image(cfg.require("input.image")).physical()
    model = model_from_entries(cfg) if "model.kind" in cfg else image.model
    truth = None
    if "input.surface" in cfg:
        truth_rig, truth_u = read_grid(cfg.require("input.surface"))
        truth = HeightField(truth_rig, truth_u)
    bc = _build_bc(cfg, truth)
    v, u, report = solve(model, image, bc, _build_solver_config(cfg))
    write_grid(out / "v.grid", image.rig, v)
    write_grid(out / "u.grid", image.rig, u)
    write_ply(out / "surface.ply", HeightField(image.rig, u))
    _dump_json(out / "report.json", report.to_dict())
    print(
        f"solve [{model.kind}, {bc.kind}] iterations={report.iterations} "
        f"converged={report.converged} residual={report.residual:.3e}"
    )
    if truth is not None and truth.u.shape == u.shape:
        err = float(np.abs(u - truth.u).max())
        print(f"max-norm height error vs ground truth: {err:.6e}")
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def cmd_probe(args) -> int:
    cfg = Config.from_file(args.config)
    out = _out_dir(args)
    if "input.image" in cfg:
        image = read_image(cfg.require("input.image")).physical()
        model = model_from_entries(cfg) if "model.kind" in cfg else image.model
    else:
        rig = _build_rig(cfg)
        model = model_from_entries(cfg)
        image = render(model, _build_surface(cfg, rig))
    reports = run_all_checks(
        model,
        image,
        r_bound=cfg.get_float("probe.r_bound", 2.0),
        seed=args.seed,
        n_samples=cfg.get_int("probe.samples", 10_000),
        n_boundary_samples=cfg.get_int("probe.boundary_samples", 200),
    )
    _dump_json(out / "probe_report.json", [r.to_dict() for r in reports])
    for r in reports:
        print(r.summary())
    bad = [r for r in reports if not r.ok]
    if bad:
        print(f"{len(bad)} check(s) did not match expectations", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = Config.from_file(args.config)
    out = _out_dir(args)
    model = model_from_entries(cfg)
    levels_raw = cfg.get("pipeline.levels")
    if levels_raw:
        levels = [int(tok) for tok in levels_raw.split()]
    else:
        levels = [cfg.get_int("camera.nx", 65)]

    rows = []
    worst_exit = EXIT_OK
    for n in levels:
        rig = CameraRig(
            f=cfg.get_float("camera.f", 1.0),
            x_min=cfg.get_float("camera.x_min", -0.5),
            x_max=cfg.get_float("camera.x_max", 0.5),
            y_min=cfg.get_float("camera.y_min", -0.5),
            y_max=cfg.get_float("camera.y_max", 0.5),
            nx=n, ny=n,
        )
        surface = _build_surface(cfg, rig)
        image = render(model, surface)
        bc = _build_bc(cfg, surface)
        v, u, report = solve(model, image, bc, _build_solver_config(cfg))
        err = np.abs(u - surface.u)
        rows.append({
            "nx": n,
            "err_linf": float(err.max()),
            "err_l1": float(err.mean()),
            "iterations": report.iterations,
            "converged": report.converged,
            "residual": report.residual,
            "scheme_residual": report.scheme_residual,
            "wall_time": report.wall_time,
        })
        if not report.converged:
            worst_exit = EXIT_NO_CONVERGENCE

    payload = {
        "model": model.kind,
        "bc": cfg.get("bc.kind", STATE_CONSTRAINTS),
        "seed": args.seed,
        "levels": rows,
    }
    _dump_json(out / "pipeline_report.json", payload)
    print(f"{'nx':>6s} {'L_inf(u)':>12s} {'L_1(u)':>12s} {'iters':>8s} {'residual':>12s}")
    for row in rows:
        print(f"{row['nx']:>6d} {row['err_linf']:>12.4e} {row['err_l1']:>12.4e} "
              f"{row['iterations']:>8d} {row['residual']:>12.4e}")
    return worst_exit


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="psfs",
        description="Perspective shape-from-shading: render, reconstruct, verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("render", cmd_render), ("solve", cmd_solve),
                     ("probe", cmd_probe), ("pipeline", cmd_pipeline)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a key = value config file")
        p.add_argument("--seed", type=int, default=0, help="RNG seed for sampling checks")
        p.add_argument("--out", default=".", help="existing output directory")
        p.set_defaults(fn=fn)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except IncompatibleProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ILL_POSED
    except (SolverError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
