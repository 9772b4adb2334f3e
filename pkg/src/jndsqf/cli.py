"""Command-line front end: fit, compare, simulate, export."""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .data import IngestError, build_histogram, dumps, ingest
from .gmm import VARIANCE_FLOOR
from .pipeline import compare_image, gmethod_fit
from .plots import histogram_svg, spectrum_svg, stair_svg
from .simulate import DEFAULT_LO, panel_from_config, simulate_panel

log = logging.getLogger("jndsqf")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2) + "\n")


def _safe_name(image_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", image_id) or "image"


def _groups_max(text: str) -> dict[str, int]:
    try:
        hi, mid, lo = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected three integers hi,mid,lo") from None
    if min(hi, mid, lo) < 1 or max(hi, mid, lo) > 10:
        raise argparse.ArgumentTypeError("component caps must lie in 1..10")
    return {"high": hi, "middle": mid, "low": lo}


def _variance_floor(text: str) -> float:
    v = float(text)
    if not 0 < v <= 100:
        raise argparse.ArgumentTypeError("variance floor must lie in (0, 100]")
    return v


def _effective_config(args) -> dict:
    cfg = {"command": args.command, "version": __version__}
    for key in ("input", "groups_max", "truncate_area", "variance_floor", "seed", "format", "out"):
        if hasattr(args, key):
            val = getattr(args, key)
            cfg[key] = str(val) if isinstance(val, Path) else val
    return cfg


def _load_images(args):
    path = Path(args.input)
    if not path.exists():
        raise InputError(f"{path}: no such file")
    fmt = args.format or ("json" if path.suffix.lower() == ".json" else "csv")
    try:
        images = ingest(path.read_bytes(), fmt)
    except (IngestError, UnicodeDecodeError) as e:
        raise InputError(f"{path}: {e}") from None
    if not images:
        raise InputError("no samples")
    return images


def _method_kwargs(args) -> dict:
    return {"caps": args.groups_max, "truncate": args.truncate_area == "on", "variance_floor": args.variance_floor}


def fit_report(result, image, config: dict) -> dict:
    part = result.partition
    hist = build_histogram(image.points())
    return {
        "image_id": result.image_id,
        "config": config,
        "n_subjects": len(image.subjects),
        "n_samples": image.n_points,
        "histogram": [float(m) for m in hist.mass],
        "partition": {
            "candidates": list(part.candidates),
            "boundaries": list(part.boundaries),
            "groups": [
                {"label": g.label, "interval": [g.lo, g.hi], "mass": g.mass, "n_points": len(g.points)}
                for g in part.groups()
            ],
        },
        "groups": {label: rep.to_dict() for label, rep in result.reports.items()},
        "bic": result.terms.to_dict(),
        "bic_additive": result.additive_terms.to_dict(),
        "sqf": result.sqf.to_dict(result.image_id, "G"),
    }


def cmd_fit(args) -> int:
    images = _load_images(args)
    config = _effective_config(args)
    out = Path(args.out)
    for image in images:
        result = gmethod_fit(image, **_method_kwargs(args))
        name = _safe_name(image.image_id)
        _write_json(out / f"{name}.fit.json", fit_report(result, image, config))
        _write_json(out / f"{name}.sqf.json", {**result.sqf.to_dict(image.image_id, "G"), "config": config})
        _atomic_write(out / f"{name}.sqf.csv", result.sqf.to_csv())
        log.info("%s: %d levels, BIC %.2f", image.image_id, len(result.sqf.jumps), result.bic)
    return EXIT_OK


def cmd_compare(args) -> int:
    images = _load_images(args)
    config = _effective_config(args)
    out = Path(args.out)
    per_image, rows = [], []
    for image in images:
        c = compare_image(image, **_method_kwargs(args))
        table = c.table_rows()
        rows.extend(table)
        per_image.append(
            {
                "image_id": image.image_id,
                "table": table,
                "g_bic_lower": c.g_wins,
                "k_model": c.k.to_dict(),
                "g_bic_additive": c.g.additive_terms.to_dict(),
                "g_sqf": c.g.sqf.to_dict(image.image_id, "G"),
                "k_sqf": c.k_sqf.to_dict(image.image_id, "K"),
            }
        )
    summary = {"n_images": len(per_image), "g_bic_lower": sum(r["g_bic_lower"] for r in per_image)}
    _write_json(out / "compare.json", {"config": config, "images": per_image, "summary": summary})

    cols = ["image_id", "method", "nll_term", "complexity_term", "bic", "n_free_params", "n_samples", "levels"]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(str(r[c]) if c in ("image_id", "method") else repr(r[c]) for c in cols))
    lines.append(f"# images with G-BIC < K-BIC: {summary['g_bic_lower']}/{summary['n_images']}")
    _atomic_write(out / "compare.csv", "\n".join(lines) + "\n")
    print(f"G-BIC < K-BIC on {summary['g_bic_lower']}/{summary['n_images']} images")
    return EXIT_OK


def cmd_simulate(args) -> int:
    path = Path(args.input)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON ({e.msg}, line {e.lineno})") from None
    if not isinstance(cfg, dict):
        raise InputError(f"{path}: config must be a JSON object")
    if args.seed is not None:
        cfg["seed"] = args.seed
    seed = int(cfg.get("seed", 0))
    lo = int(cfg.get("lo", DEFAULT_LO))
    try:
        panels = panel_from_config(cfg)
    except (ValueError, KeyError, TypeError) as e:
        raise InputError(f"{path}: invalid simulator config: {e}") from None

    images, truth = [], []
    for k, (image_id, subjects, shared) in enumerate(panels):
        # subject i of image k uses seed + 1000 k + i
        res = simulate_panel(subjects, seed=seed + 1000 * k, lo=lo, image_id=image_id)
        images.append(res.image)
        truth.append(
            {
                "image_id": image_id,
                "shared_jumps": shared,
                "subjects": [
                    {"subject_id": s.subject_id, "latent_jumps": res.truth[s.subject_id],
                     "comparisons": res.comparisons[s.subject_id]}
                    for s in subjects
                ],
            }
        )
    fmt = args.format or "csv"
    out = Path(args.out)
    _atomic_write(out / f"samples.{fmt}", dumps(images, fmt))
    _write_json(out / "truth.json", {"config": {**cfg, "lo": lo, "seed": seed}, "images": truth})
    return EXIT_OK


def cmd_export(args) -> int:
    src = Path(args.input)
    reports = [src] if src.is_file() else sorted(src.glob("*.fit.json"))
    if not reports:
        raise InputError(f"{src}: no *.fit.json fit reports found (run 'fit' first)")
    out = Path(args.out)
    from .gmm import GaussianMixture

    qf = np.linspace(1, 100, 397)
    for path in reports:
        try:
            rep = json.loads(path.read_text(encoding="utf-8"))
            hist = rep["histogram"]
            bounds = rep["partition"]["boundaries"]
            groups = {g["label"]: g for g in rep["partition"]["groups"]}
            jumps = rep["sqf"]["jumps"]
        except (OSError, json.JSONDecodeError, KeyError) as e:
            raise InputError(f"{path}: unreadable fit report ({e})") from None
        name = _safe_name(rep["image_id"])
        dens = {
            label: GaussianMixture.from_dict(g["selected"]).pdf(qf) * groups[label]["mass"]
            for label, g in rep["groups"].items()
        }
        _atomic_write(out / f"{name}.hist.svg", histogram_svg(hist, bounds, dens, qf, f"{rep['image_id']}: JND histogram"))
        pos = [j["qf"] for j in jumps]
        hts = [j["height"] for j in jumps]
        _atomic_write(
            out / f"{name}.spectrum.svg",
            spectrum_svg(pos, hts, [j["group"] for j in jumps], f"{rep['image_id']}: modeled JND spectrum"),
        )
        levels = np.cumsum(hts) / np.sum(hts)
        levels[-1] = 1.0
        _atomic_write(out / f"{name}.sqf.svg", stair_svg(pos, levels, f"{rep['image_id']}: G-SQF"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jndsqf", description="Stair quality functions from JND samples.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, input_help):
        sp.add_argument("input", help=input_help)
        sp.add_argument("-o", "--out", default="out", help="output directory (default: out)")
        sp.add_argument("--format", choices=("csv", "json"), default=None,
                        help="sample file format (default: from extension; csv)")
        sp.add_argument("--seed", type=int, default=None, help="random seed")

    def method(sp):
        sp.add_argument("--groups-max", type=_groups_max, default=_groups_max("3,4,3"),
                        metavar="HI,MID,LO", help="max GMM components per group (default: 3,4,3)")
        sp.add_argument("--truncate-area", choices=("on", "off"), default="on",
                        help="jump height uses the component's mass inside its group interval (default: on)")
        sp.add_argument("--variance-floor", type=_variance_floor, default=VARIANCE_FLOOR,
                        help=f"minimum component variance in QF^2 (default: {VARIANCE_FLOOR})")

    sp = sub.add_parser("fit", help="fit G-SQFs per image")
    common(sp, "JND sample file (CSV or JSON)")
    method(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("compare", help="compare G-method and K-method BIC per image")
    common(sp, "JND sample file (CSV or JSON)")
    method(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("simulate", help="simulate bisection-protocol subjects")
    common(sp, "simulator config (JSON)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("export", help="render SVG plots from fit reports")
    sp.add_argument("input", help="fit output directory or a single *.fit.json")
    sp.add_argument("-o", "--out", default="plots", help="output directory (default: plots)")
    sp.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
