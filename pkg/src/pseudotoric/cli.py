"""Command-line entry point: JSON config in, JSON/CSV reports out.

Exit codes: 0 pass, 2 config or validation error, 3 numerical failure,
4 run completed with a false certificate.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

from .analysis import decide_equivalence, lagrangian_defect, verify_structure
from .displacement import (CutProfile, displace, find_avoiding_ray,
                           profile_for_loop)
from .fibration import LevelValues, PseudotoricStructure
from .loops import classify_type, enclosed_area, loop_from_json, winding_number
from .symplectic import ConvergenceError, FlowParams
from .torus import TorusSpec, build_torus

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NO_CERTIFICATE = 4

_LOOP_SCHEMA = {"type": "object", "required": ["kind"]}
_RESOLUTIONS = {
    "type": "object",
    "properties": {"n_t": {"type": "integer"}, "n_phi": {"type": "integer"}},
    "additionalProperties": False,
}

SCHEMAS = {
    "verify-structure": {
        "type": "object",
        "properties": {
            "k": {"type": "integer", "minimum": 1},
            "n_points": {"type": "integer", "minimum": 10},
            "seed": {"type": "integer"},
            "tolerances": {
                "type": "object",
                "properties": {
                    "commutator": {"type": "number"},
                    "verticality": {"type": "number"},
                    "fiber_drift": {"type": "number"},
                },
                "additionalProperties": False,
            },
        },
        "required": ["k"],
        "additionalProperties": False,
    },
    "build-torus": {
        "type": "object",
        "properties": {
            "k": {"type": "integer", "minimum": 1},
            "levels": {"type": "array", "items": {"type": "number"}},
            "loop": _LOOP_SCHEMA,
            "resolutions": _RESOLUTIONS,
            "seed": {"type": "integer"},
        },
        "required": ["k", "levels", "loop"],
        "additionalProperties": False,
    },
    "verify-lagrangian": {
        "type": "object",
        "properties": {
            "k": {"type": "integer", "minimum": 1},
            "levels": {"type": "array", "items": {"type": "number"}},
            "loop": _LOOP_SCHEMA,
            "resolutions": _RESOLUTIONS,
            "tolerance": {"type": "number"},
            "seed": {"type": "integer"},
        },
        "required": ["k", "levels", "loop"],
        "additionalProperties": False,
    },
    "classify-loop": {
        "type": "object",
        "properties": {"loop": _LOOP_SCHEMA, "seed": {"type": "integer"}},
        "required": ["loop"],
        "additionalProperties": False,
    },
    "displace": {
        "type": "object",
        "properties": {
            "k": {"type": "integer", "minimum": 1},
            "levels": {"type": "array", "items": {"type": "number"}},
            "loop": _LOOP_SCHEMA,
            "resolutions": _RESOLUTIONS,
            "profile": {
                "type": "object",
                "properties": {
                    "strength": {"type": "number"},
                    "delta": {"type": "number"},
                    "delta_prime": {"type": "number"},
                    "ray_angle": {"type": "number"},
                    "n_dirs": {"type": "integer", "minimum": 64},
                },
                "additionalProperties": False,
            },
            "flow": {
                "type": "object",
                "properties": {
                    "step_size": {"type": "number"},
                    "max_time": {"type": "number"},
                    "tolerance": {"type": "number"},
                },
                "additionalProperties": False,
            },
            "stop_factor": {"type": "number"},
            "export_clouds": {"type": "boolean"},
            "seed": {"type": "integer"},
        },
        "required": ["k", "levels", "loop"],
        "additionalProperties": False,
    },
    "equivalence": {
        "type": "object",
        "properties": {
            "k": {"type": "integer", "minimum": 1},
            "levels": {"type": "array", "items": {"type": "number"}},
            "loop1": _LOOP_SCHEMA,
            "loop2": _LOOP_SCHEMA,
            "seed": {"type": "integer"},
        },
        "required": ["k", "levels", "loop1", "loop2"],
        "additionalProperties": False,
    },
}


class ConfigError(ValueError):
    pass


def _load_config(command: str, path: str) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    return config


def _write_json(path: Path, payload: dict) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _torus_spec(config: dict) -> TorusSpec:
    k = config["k"]
    levels = LevelValues(np.asarray(config["levels"], dtype=float))
    if levels.k != k:
        raise ConfigError(f"levels must have length k = {k}")
    loop = loop_from_json(config["loop"])
    return TorusSpec(PseudotoricStructure(k), loop, levels)


def _resolutions(config: dict, default_t=32, default_phi=32):
    res = config.get("resolutions", {})
    return res.get("n_t", default_t), res.get("n_phi", default_phi)


def cmd_verify_structure(config, outdir: Path, plots: bool) -> int:
    tol = config.get("tolerances", {})
    report = verify_structure(
        PseudotoricStructure(config["k"]),
        n_points=config.get("n_points", 100),
        seed=config["seed"],
        commutator_tol=tol.get("commutator", 1e-10),
        verticality_tol=tol.get("verticality", 1e-10),
        fiber_drift_tol=tol.get("fiber_drift", 1e-8),
    )
    _write_json(outdir / "report.json",
                {"command": "verify-structure", "config": config,
                 "report": report.to_dict()})
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def cmd_build_torus(config, outdir: Path, plots: bool) -> int:
    spec = _torus_spec(config)
    n_t, n_phi = _resolutions(config)
    sample = build_torus(spec, n_t, n_phi)
    sample.to_csv(outdir / "torus.csv")
    sample.write_metadata(outdir / "metadata.json")
    _write_json(outdir / "report.json",
                {"command": "build-torus", "config": config,
                 "report": sample.metadata()})
    if plots:
        from .plotting import plot_loop
        plot_loop(spec.loop, outdir / "loop.svg")
    return EXIT_OK


def cmd_verify_lagrangian(config, outdir: Path, plots: bool) -> int:
    spec = _torus_spec(config)
    n_t, n_phi = _resolutions(config)
    tolerance = config.get("tolerance", 1e-6)
    defect = lagrangian_defect(spec, n_t, n_phi)
    passed = defect <= tolerance
    _write_json(outdir / "report.json",
                {"command": "verify-lagrangian", "config": config,
                 "report": {"max_lagrangian_defect": defect,
                            "tolerance": tolerance, "pass": passed}})
    if plots:
        from .plotting import plot_loop
        plot_loop(spec.loop, outdir / "loop.svg")
    return EXIT_OK if passed else EXIT_NUMERICAL


def cmd_classify_loop(config, outdir: Path, plots: bool) -> int:
    loop = loop_from_json(config["loop"])
    report = {
        "winding_number": winding_number(loop),
        "enclosed_area": enclosed_area(loop),
        "type": classify_type(loop).value,
    }
    _write_json(outdir / "report.json",
                {"command": "classify-loop", "config": config,
                 "report": report})
    if plots:
        from .plotting import plot_loop
        plot_loop(loop, outdir / "loop.svg")
    return EXIT_OK


def _displacement_profile(config: dict, loop) -> CutProfile:
    over = config.get("profile", {})
    base = profile_for_loop(loop, strength=over.get("strength", 1.0),
                            n_dirs=over.get("n_dirs", 256))
    fields = base.to_dict()
    for key in ("delta", "delta_prime", "ray_angle"):
        if key in over:
            fields[key] = over[key]
    if "ray_angle" in over:
        # recompute the span about the overridden ray direction
        w = loop.samples(2048)
        rel = np.angle(w * np.exp(-1j * (over["ray_angle"] + np.pi)))
        fields["span"] = float(2 * np.max(np.abs(rel)))
    return CutProfile(**fields)


def cmd_displace(config, outdir: Path, plots: bool) -> int:
    spec = _torus_spec(config)
    profile = _displacement_profile(config, spec.loop)
    flow = config.get("flow", {})
    params = None
    if flow:
        params = FlowParams(step_size=flow.get("step_size", 0.01),
                            max_time=flow.get("max_time", 50.0),
                            tolerance=flow.get("tolerance", 1e-10))
    n_t, n_phi = _resolutions(config, default_t=8, default_phi=8)
    export = config.get("export_clouds", False)
    report = displace(spec, profile, params=params, n_t=n_t, n_phi=n_phi,
                      stop_factor=config.get("stop_factor", 1.15),
                      keep_points=export or plots)
    _write_json(outdir / "report.json",
                {"command": "displace", "config": config,
                 "profile": profile.to_dict(), "report": report.to_dict()})
    if export:
        _export_cloud(outdir / "original.csv", report.original, 0.0)
        _export_cloud(outdir / "flowed.csv", report.flowed, report.time_elapsed)
    if plots:
        from .plotting import plot_displacement
        plot_displacement(spec.loop, profile, report, outdir / "displacement.svg")
    return EXIT_OK if report.certificate else EXIT_NO_CERTIFICATE


def _export_cloud(path: Path, Z: np.ndarray, time: float) -> None:
    n = Z.shape[1]
    header = ",".join(f"re_z{j},im_z{j}" for j in range(1, n + 1)) + ",time"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in Z:
            vals = []
            for zj in row:
                vals += [repr(float(zj.real)), repr(float(zj.imag))]
            vals.append(repr(float(time)))
            fh.write(",".join(vals) + "\n")


def cmd_equivalence(config, outdir: Path, plots: bool) -> int:
    k = config["k"]
    levels = LevelValues(np.asarray(config["levels"], dtype=float))
    if levels.k != k:
        raise ConfigError(f"levels must have length k = {k}")
    structure = PseudotoricStructure(k)
    s1 = TorusSpec(structure, loop_from_json(config["loop1"]), levels)
    s2 = TorusSpec(structure, loop_from_json(config["loop2"]), levels)
    verdict = decide_equivalence(s1, s2)
    _write_json(outdir / "report.json",
                {"command": "equivalence", "config": config,
                 "report": verdict.to_dict()})
    if plots:
        from .plotting import plot_loop_pair
        plot_loop_pair(s1.loop, s2.loop, outdir / "loops.svg")
    return EXIT_OK


COMMANDS = {
    "verify-structure": cmd_verify_structure,
    "build-torus": cmd_build_torus,
    "verify-lagrangian": cmd_verify_lagrangian,
    "classify-loop": cmd_classify_loop,
    "displace": cmd_displace,
    "equivalence": cmd_equivalence,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pseudotoric",
        description="Numerical laboratory for loop-parameterized Lagrangian "
                    "tori: construction, verification, displacement.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed (default 0)")
        p.add_argument("--plots", action="store_true",
                       help="emit SVG figures alongside the reports")
    args = parser.parse_args(argv)

    try:
        config = _load_config(args.command, args.config)
        if args.seed is not None:
            config["seed"] = args.seed
        config.setdefault("seed", 0)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](config, outdir, args.plots)
    except (ConfigError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
