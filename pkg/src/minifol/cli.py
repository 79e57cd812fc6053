"""Command-line front end.

One JSON config drives every command: the map document fields plus grid,
levels, readings, variation, seed, and output_dir. Flags override config
fields. Reports embed the effective-config hash, seed, tolerances, and
version so identical inputs give byte-identical outputs.

Exit codes: 0 success (check: regular; variation: stationary), 1 the
check/sweep failed its criterion, 2 configuration or evaluation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .diffgeo import (
    default_readings,
    minimality_residual_batch,
    reading_from_label,
    regularity_check,
)
from .errors import MinifolError, SchemaError
from .lemma import (
    READING_RESIDUAL_TOL,
    check_closedness,
    check_linear_harmonicity,
    form_from_map,
    load_corpus,
    minimality_agreement,
    reconstruct_potential,
)
from .levelset import export_obj_path, extract_level_set, measure, sample_foliation
from .mapdef import MapDefinition, load_map
from .variational import DEFAULT_STATIONARY_TOL, stationarity_sweep

CLOSEDNESS_TOL = 1e-4
RECONSTRUCTION_TOL = 1e-5
HODGE_TOL = 1e-3


class ConfigError(SchemaError):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return doc


def _effective_config(doc: dict, args) -> dict:
    """Merge flag overrides into the config document."""
    cfg = dict(doc)
    if getattr(args, "grid", None):
        cfg["grid"] = args.grid
    if getattr(args, "level", None) is not None:
        cfg["level"] = args.level
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "out", None):
        cfg["output_dir"] = args.out
    return cfg


def _config_hash(cfg: dict) -> str:
    # the hash captures the computation; where outputs land is not part of it
    payload = {k: v for k, v in cfg.items() if k != "output_dir"}
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _map_from_config(cfg: dict) -> MapDefinition:
    return load_map(cfg)


def _grid_from_config(cfg: dict, n: int):
    grid = cfg.get("grid", [33] * n)
    if isinstance(grid, int):
        grid = [grid] * n
    grid = [int(g) for g in grid]
    if len(grid) == 1:
        grid = grid * n
    if len(grid) != n:
        raise ConfigError(f"grid must have {n} entries, got {len(grid)}")
    if min(grid) < 8:
        raise ConfigError("grid entries must be >= 8")
    return grid


def _seed_from_config(cfg: dict) -> int:
    variation = cfg.get("variation", {})
    return int(cfg.get("seed", variation.get("seed", 0)))


def _readings_from_config(cfg: dict, n: int):
    labels = cfg.get("readings")
    if labels is None:
        return default_readings(n)
    return tuple(reading_from_label(label) for label in labels)


def _level_from_config(cfg: dict, m: int):
    level = cfg.get("level")
    if level is None:
        raise ConfigError("a level is required (--level or config 'level')")
    if isinstance(level, (int, float)):
        level = [level]
    level = [float(v) for v in level]
    if len(level) != m:
        raise ConfigError(f"level must have {m} entries, got {len(level)}")
    return level


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg.get("output_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")


def _reading_samples(definition, seed, count=200):
    rng = np.random.default_rng(seed)
    lo = np.asarray(definition.domain_min)
    hi = np.asarray(definition.domain_max)
    return lo + rng.random((count, definition.n)) * (hi - lo)


# ---------------------------------------------------------------------------
# Commands


def cmd_check(args) -> int:
    cfg = _effective_config(_load_config(args.config), args)
    definition = _map_from_config(cfg)
    grid = _grid_from_config(cfg, definition.n)
    seed = _seed_from_config(cfg)
    readings = _readings_from_config(cfg, definition.n)

    report = regularity_check(definition, {"kind": "grid", "count": grid[0]})
    points = _reading_samples(definition, seed)
    reading_block = {}
    for reading in readings:
        residual = float(
            np.abs(minimality_residual_batch(definition, points, reading)).max()
        )
        reading_block[reading.label()] = {
            "verdict": "minimal" if residual <= READING_RESIDUAL_TOL else "not_minimal",
            "max_residual": residual,
        }

    doc = {
        "version": __version__,
        "config_hash": _config_hash(cfg),
        "seed": seed,
        "map": definition.name,
        "grid": grid,
        "regular": bool(report.regular),
        "min_singular_value": float(report.min_singular_value),
        "witnesses": [list(w) for w in report.witnesses],
        "samples_checked": int(report.samples_checked),
        "readings": reading_block,
        "tolerances": {"reading_residual": READING_RESIDUAL_TOL},
    }
    _write_json(_out_dir(cfg) / "report.json", doc)
    return 0 if report.regular else 1


def _leaf_summary(level, leaf, filename):
    return {
        "level": [float(v) for v in level],
        "file": filename,
        "volume": measure(leaf),
        "vertices": int(len(leaf.vertices)),
        "empty": bool(leaf.is_empty),
    }


def cmd_extract(args) -> int:
    cfg = _effective_config(_load_config(args.config), args)
    definition = _map_from_config(cfg)
    grid = _grid_from_config(cfg, definition.n)
    seed = _seed_from_config(cfg)
    level = _level_from_config(cfg, definition.m)
    out = _out_dir(cfg)

    leaf = extract_level_set(definition, level, grid)
    export_obj_path(leaf, out / "leaf_0.obj")
    doc = {
        "version": __version__,
        "config_hash": _config_hash(cfg),
        "seed": seed,
        "map": definition.name,
        "grid": grid,
        "leaves": [_leaf_summary(level, leaf, "leaf_0.obj")],
    }
    _write_json(out / "summary.json", doc)
    return 0


def cmd_foliate(args) -> int:
    cfg = _effective_config(_load_config(args.config), args)
    definition = _map_from_config(cfg)
    grid = _grid_from_config(cfg, definition.n)
    seed = _seed_from_config(cfg)
    level_count = int(cfg.get("levels", 4))
    out = _out_dir(cfg)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        foliation = sample_foliation(definition, level_count, grid)
    leaves = []
    for k, (level, leaf) in enumerate(zip(foliation.levels, foliation.leaves)):
        filename = f"leaf_{k}.obj"
        export_obj_path(leaf, out / filename)
        leaves.append(_leaf_summary(level, leaf, filename))
    doc = {
        "version": __version__,
        "config_hash": _config_hash(cfg),
        "seed": seed,
        "map": definition.name,
        "grid": grid,
        "map_regular": bool(foliation.map_regular),
        "warnings": [str(w.message) for w in caught],
        "leaves": leaves,
    }
    _write_json(out / "summary.json", doc)
    return 0


def cmd_variation(args) -> int:
    cfg = _effective_config(_load_config(args.config), args)
    definition = _map_from_config(cfg)
    grid = _grid_from_config(cfg, definition.n)
    level = _level_from_config(cfg, definition.m)
    variation = cfg.get("variation", {})
    seed = _seed_from_config(cfg)
    field_count = int(variation.get("fields", 16))
    tol = float(variation.get("tol", DEFAULT_STATIONARY_TOL))
    out = _out_dir(cfg)

    sweep = stationarity_sweep(
        definition, level, grid, field_count=field_count, seed=seed, tol=tol
    )
    fields = []
    for field in sweep.fields:
        fields.append(
            {
                "center": [float(v) for v in field.center],
                "radius": float(field.radius),
                "amplitude": float(field.amplitude),
                "direction": "normal"
                if isinstance(field.direction, str)
                else [float(v) for v in field.direction],
            }
        )
    doc = {
        "version": __version__,
        "config_hash": _config_hash(cfg),
        "seed": seed,
        "map": definition.name,
        "grid": grid,
        "level": level,
        "stationary": bool(sweep.stationary),
        "max_first_variation": float(sweep.max_first_variation),
        "first_variations": [float(v) for v in sweep.first_variations],
        "base_measure": float(sweep.base_measure),
        "field_count": field_count,
        "fields": fields,
        "tolerances": {"stationary": tol},
    }
    _write_json(out / "variation.json", doc)
    return 0 if sweep.stationary else 1


def _corpus_from_dir(path: str):
    from .mapdef import load_map_file

    files = sorted(Path(path).glob("*.json"))
    if not files:
        raise ConfigError(f"no corpus maps found in {path}")
    corpus = []
    for p in files:
        try:
            corpus.append(load_map_file(p))
        except MinifolError as exc:
            raise ConfigError(f"{p.name}: {exc}") from exc
    return tuple(corpus)


def _form_checks(corpus, entries_by_name):
    """Closedness on the regular corpus, reconstruction and harmonicity
    on the applicable m=1 maps. Each sub-check reports None when the map
    is outside its scope."""
    checks = []
    all_pass = True
    for definition in corpus:
        entry = entries_by_name.get(definition.name, {})
        regular = bool(entry.get("oracle", {}).get("regular", False))
        row = {"map": definition.name, "regular": regular}
        passed = True
        if regular:
            form = form_from_map(definition)
            closedness = check_closedness(form, h=1e-3)
            row["closedness"] = closedness
            passed &= closedness <= CLOSEDNESS_TOL
            if definition.m == 1:
                base = [
                    lo + 0.1 * (hi - lo)
                    for lo, hi in zip(definition.domain_min, definition.domain_max)
                ]
                rec = reconstruct_potential(form, base)
                row["reconstruction_error"] = rec.max_gradient_error
                row["exact"] = rec.exact
                passed &= rec.exact and rec.max_gradient_error <= RECONSTRUCTION_TOL
                trace_verdict = (
                    entry.get("readings", {}).get("FULL_TRACE", {}).get("verdict")
                )
                if trace_verdict == "minimal":
                    harm = check_linear_harmonicity(form, h=1e-3)
                    row["hodge_residual"] = harm["hodge_residual"]
                    passed &= harm["hodge_residual"] <= HODGE_TOL
        row["passed"] = bool(passed)
        checks.append(row)
        all_pass &= passed
    return checks, all_pass


def cmd_verify_lemma(args) -> int:
    corpus = _corpus_from_dir(args.corpus) if args.corpus else load_corpus()
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    grid = args.grid[0] if args.grid else 65
    seed = args.seed if args.seed is not None else 0

    report = minimality_agreement(corpus=corpus, grid=grid, seed=seed)
    entries_by_name = {e["map"]: e for e in report.entries}
    checks, all_pass = _form_checks(corpus, entries_by_name)

    doc = report.to_document()
    doc["config_hash"] = _config_hash(
        {"corpus": [d.name for d in corpus], "grid": grid, "seed": seed}
    )
    doc["form_checks"] = checks
    doc["form_tolerances"] = {
        "closedness": CLOSEDNESS_TOL,
        "reconstruction": RECONSTRUCTION_TOL,
        "hodge": HODGE_TOL,
    }
    doc["passed"] = bool(all_pass)
    _write_json(out / "agreement.json", doc)
    return 0 if all_pass else 1


# ---------------------------------------------------------------------------
# Argument parsing


def _add_common(parser, need_config=True):
    if need_config:
        parser.add_argument("--config", required=True, help="path to a JSON run config")
    parser.add_argument(
        "--grid",
        type=lambda s: [int(v) for v in s.split(",")],
        default=None,
        help="per-axis vertex counts, comma separated (or one count for all)",
    )
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minifol",
        description="level-set foliations: regularity checks, extraction, "
        "variational sweeps, and differential-form verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="regularity and trace-reading report")
    _add_common(p)

    p = sub.add_parser("extract", help="extract one level set to OBJ")
    _add_common(p)
    p.add_argument(
        "--level",
        type=lambda s: [float(v) for v in s.split(",")],
        default=None,
        help="level values, comma separated",
    )

    p = sub.add_parser("foliate", help="extract a foliation to OBJ files")
    _add_common(p)

    p = sub.add_parser("variation", help="stationarity sweep on one leaf")
    _add_common(p)
    p.add_argument(
        "--level",
        type=lambda s: [float(v) for v in s.split(",")],
        default=None,
    )

    p = sub.add_parser("verify-lemma", help="corpus-wide form checks and the "
                       "reading-vs-oracle agreement matrix")
    p.add_argument("--corpus", default=None, help="directory of map JSON files "
                   "(default: the shipped corpus)")
    _add_common(p, need_config=False)

    return parser


_COMMANDS = {
    "check": cmd_check,
    "extract": cmd_extract,
    "foliate": cmd_foliate,
    "variation": cmd_variation,
    "verify-lemma": cmd_verify_lemma,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except MinifolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
