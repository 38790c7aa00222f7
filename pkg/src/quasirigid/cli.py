"""Command-line interface.

Exit codes: 0 success, 1 bad input, 2 geometric failure, 3 ill-conditioned
rank decision, 4 a requested check of ``report`` failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bracing import (BracingPattern, evaluate_pattern, parse_pattern, pattern_from_json,
                      run_bracing_experiment, thread_cap)
from .dualize import square_patch, verify_dual_consistency, working_patch
from .errors import GeometryError, InputError, QuasirigidError
from .flexbasis import build_ribbon_shears, expand_flex, ribbon_direction, ribbon_figure
from .geometry import MultigridSpec, pentagrid_preset, tetragrid_preset
from .rigidity import Framework, field_from_json, field_to_json, flex_space
from .svg import render_svg
from .tiling import Tiling, export_tiling, import_tiling, ribbon_overlap_check
from .zeromode import (Multiphase, band_class_vector, band_zero_mode, interior_residual,
                       spectrum_sample, symbol_matrix)

REPORT_SCHEMA = "quasirigid.report/1"
EXIT_CHECK_FAILED = 4


@dataclass
class Source:
    tiling: Tiling
    spec: MultigridSpec | None
    ambient: Tiling | None = None


# ------------------------------------------------------------------ helpers

def _floats(text: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from exc
    if n is not None and len(vals) != n:
        raise InputError(f"expected {n} numbers, got {len(vals)}")
    return vals


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(doc) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _spec_from_args(args) -> MultigridSpec | None:
    given = [a for a in ("multigrid", "pentagrid", "tetragrid") if getattr(args, a, None)]
    if len(given) > 1:
        raise InputError("give at most one of --multigrid, --pentagrid, --tetragrid")
    if args.pentagrid:
        return pentagrid_preset(_floats(args.pentagrid, 5), normal_offsets=args.normal_offsets)
    if args.tetragrid:
        return tetragrid_preset(_floats(args.tetragrid, 4), normal_offsets=args.normal_offsets)
    if args.multigrid:
        return MultigridSpec.from_dict(_read_json(args.multigrid))
    return None


def load_source(args) -> Source:
    if args.tiling:
        t = import_tiling(_read_json(args.tiling))
        return Source(t, t.spec)
    if args.square:
        m, n = (int(v) for v in _floats(args.square, 2))
        t = square_patch(m, n)
        return Source(t, t.spec)
    spec = _spec_from_args(args)
    if spec is None:
        raise InputError("no tiling source: give --tiling, --square, --pentagrid, --tetragrid or --multigrid")
    wp = working_patch(spec, args.window, args.fraction)
    return Source(wp.tiling, spec, wp.ambient)


def load_pattern(args, tiling: Tiling) -> BracingPattern | None:
    if getattr(args, "braces", None) and getattr(args, "pattern", None):
        raise InputError("give --braces or --pattern, not both")
    if getattr(args, "braces", None):
        return pattern_from_json(_read_json(args.braces), tiling)
    if getattr(args, "pattern", None):
        return parse_pattern(args.pattern, tiling, args.seed)
    return None


def parse_lambda(text: str) -> complex:
    text = text.strip()
    try:
        if text.endswith("turns"):
            return complex(np.exp(2j * np.pi * float(text[:-5])))
        if text.endswith("rad"):
            return complex(np.exp(1j * float(text[:-3])))
        if "," in text:
            re, im = _floats(text, 2)
            return complex(re, im)
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise InputError(f"cannot parse lambda {text!r}") from exc


def parse_slice(text: str) -> dict:
    """``circle:i=1:n=256``, ``circles:n=64`` or ``torus:n=64`` (grid ids 1-based)."""
    parts = text.split(":")
    kind, opts = parts[0], {}
    for p in parts[1:]:
        key, _, val = p.partition("=")
        try:
            opts[key] = int(val)
        except ValueError as exc:
            raise InputError(f"bad slice option {p!r}") from exc
    if kind not in ("circle", "circles", "torus"):
        raise InputError(f"unknown slice kind {kind!r}")
    if kind == "circle" and "i" not in opts:
        raise InputError("circle slice needs i=<grid id>")
    return {"kind": kind, **opts}


def _grid_id(value: int, r: int) -> int:
    if not 1 <= value <= r:
        raise InputError(f"grid id must lie in 1..{r}")
    return value - 1


def _random_kernel_field(tiling: Tiling, seed: int, tol):
    fs = flex_space(Framework.from_tiling(tiling), tol)
    rng = np.random.default_rng(seed)
    return (fs.basis @ rng.standard_normal(fs.dimension)).reshape(-1, 2)


# -------------------------------------------------------------- commands

def cmd_generate(args) -> int:
    src = load_source(args)
    if src.spec is not None and src.tiling.has_labels:
        rep = verify_dual_consistency(src.ambient if src.ambient is not None else src.tiling)
        if not rep.ok:
            raise GeometryError(f"dual tiling failed its consistency check: {rep}")
    _emit(dumps(export_tiling(src.tiling)), args.out)
    if args.svg:
        pat = load_pattern(args, src.tiling)
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_svg(src.tiling, pat.tiles if pat else (), args.highlight_ribbon or ()))
    return 0


def cmd_ribbons(args) -> int:
    t = load_source(args).tiling
    overlap = ribbon_overlap_check(t)
    doc = {
        "count": len(t.ribbons),
        "two_ribbon_violations": len(overlap.violations),
        "ribbons": [
            {"id": r.id, "tiles": list(r.tiles), "label": list(r.label) if r.label else None,
             "edge_direction": [float(v) for v in t.direction_vectors[r.direction]]}
            for r in t.ribbons
        ],
    }
    _emit(dumps(doc), args.out)
    return 0


def cmd_rigidity(args) -> int:
    t = load_source(args).tiling
    pat = load_pattern(args, t)
    fs = flex_space(Framework.from_tiling(t, pat.tiles if pat else ()), args.tol, basis=False)
    doc = {"dimension": fs.dimension, "rigid": fs.dimension == 3, "gap_ratio": fs.gap_ratio,
           "ill_conditioned": fs.ill_conditioned, "threshold": fs.threshold,
           "braces": len(pat) if pat else 0}
    _emit(dumps(doc), args.out)
    fs.certified_dimension()
    return 0


def cmd_brace(args) -> int:
    t = load_source(args).tiling
    if args.trials:
        dens = _floats(args.density)
        rep = run_bracing_experiment(t, args.trials, dens if len(dens) > 1 else dens[0],
                                     seed=args.seed, tol=args.tol)
        _emit(dumps(rep.to_json()), args.out)
        return 0
    pat = load_pattern(args, t) or BracingPattern(())
    graph, pred, fs = evaluate_pattern(t, pat, args.tol)
    doc = {"c": pred.components, "predicted_dim": pred.predicted_dim, "predicted_rigid": pred.rigid,
           "oracle_dim": fs.dimension, "rigid": fs.dimension == 3, "agree": pred.predicted_dim == fs.dimension,
           "gap_ratio": fs.gap_ratio, "braces": len(pat), "pattern": pat.to_json()}
    _emit(dumps(doc), args.out)
    fs.certified_dimension()
    return 0


def cmd_expand(args) -> int:
    t = load_source(args).tiling
    u = field_from_json(_read_json(args.flex), t.n_joints) if args.flex else _random_kernel_field(t, args.seed, args.tol)
    shears = build_ribbon_shears(t)
    ex = expand_flex(t, shears, u, order=args.order, seed=args.seed)
    doc = ex.to_json()
    doc["reconstruction_error"] = float(np.max(np.abs(ex.reconstruct(shears) - u)))
    _emit(dumps(doc), args.out)
    return 0


def cmd_ribbon_figure(args) -> int:
    spec = load_source(args).spec
    if spec is None:
        raise InputError("ribbon figure needs a multigrid")
    angles = ribbon_figure(spec)
    dirs = [ribbon_direction(spec, i) for i in range(spec.r)]
    doc = {"angles_rad": angles, "angles_deg": [math.degrees(a) for a in angles],
           "directions": [[float(v[0]), float(v[1])] for v in dirs],
           "grid_line_directions": [[float(v) for v in g.direction] for g in spec.grids]}
    _emit(dumps(doc), args.out)
    return 0


def cmd_spectrum(args) -> int:
    t = load_source(args).tiling
    sym = symbol_matrix(t)
    sl = parse_slice(args.slice)
    n = sl.get("n", 256)
    if sl["kind"] == "circle":
        kind = f"circle:{_grid_id(sl['i'], sym.r)}"
    else:
        kind = sl["kind"]
    sample = spectrum_sample(sym, kind, n, generic=args.generic, seed=args.seed, threads=thread_cap())
    lines = ["t,min_sv,kernel_dim" if kind != "torus" else "t1,t2,min_sv,kernel_dim"]
    for p in sample.points:
        if kind == "torus":
            lines.append(f"{p.gammas[0]!r},{p.gammas[1]!r},{p.min_sv!r},{p.kernel_dim}")
        elif kind.startswith("circle:"):
            lines.append(f"{p.gammas[int(kind[7:])]!r},{p.min_sv!r},{p.kernel_dim}")
        else:
            lines.append(f"{';'.join(repr(g) for g in p.gammas)},{p.min_sv!r},{p.kernel_dim}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_zero_mode(args) -> int:
    t = load_source(args).tiling
    if t.spec is None:
        raise InputError("zero modes need a multigrid tiling")
    i = _grid_id(args.grid_id, t.spec.r)
    u = band_zero_mode(t, i, parse_lambda(args.lam))
    _emit(dumps(field_to_json(u)), args.out)
    res = interior_residual(t, u)
    if res >= 1e-9:
        raise GeometryError(f"band mode residual {res:.2e} on interior bars")
    return 0


def build_report(args) -> dict:
    src = load_source(args)
    t = src.tiling
    claims = []

    def claim(name: str, test: str, ok: bool, **detail):
        claims.append({"claim": name, "test": test, "pass": bool(ok), **detail})

    fw = Framework.from_tiling(t)
    fs = flex_space(fw, args.tol)
    R = len(t.ribbons)
    claim("unbraced flex dimension equals ribbons + 2", "oracle rank of rigidity matrix",
          fs.dimension == R + 2 and not fs.ill_conditioned, oracle=fs.dimension, predicted=R + 2)

    overlap = ribbon_overlap_check(t)
    claim("two ribbons share at most one tile", "exhaustive ribbon-pair scan",
          not overlap.violations, violations=len(overlap.violations))

    shears = build_ribbon_shears(t)
    rng = np.random.default_rng(args.seed)
    u = (fs.basis @ rng.standard_normal(fs.dimension)).reshape(-1, 2)
    exps = [expand_flex(t, shears, u, order=o, seed=args.seed) for o in ("lowest", "highest", "random")]
    err = float(np.max(np.abs(exps[0].reconstruct(shears) - u)))
    dev = max(float(np.max(np.abs(e.ribbons - exps[0].ribbons))) for e in exps)
    claim("shears and translations form a free basis", "expansion round trip over three orders",
          err < 1e-8 and dev < 1e-10, reconstruction_error=err, order_deviation=dev)

    doc = {"schema": REPORT_SCHEMA, "version": __version__, "seed": args.seed,
           "tiles": t.n_tiles, "joints": t.n_joints, "ribbons": R,
           "flex_dim": fs.dimension, "prediction_dim": R + 2, "agree": fs.dimension == R + 2,
           "gap_ratio": fs.gap_ratio}

    if src.spec is not None and t.has_labels:
        rep = verify_dual_consistency(src.ambient if src.ambient is not None else t)
        claim("dual tiling is consistent", "edge sharing, edge vectors, angle sums", rep.ok)
        angles = ribbon_figure(src.spec)
        doc["ribbon_figure_deg"] = [math.degrees(a) for a in angles]

    pat = load_pattern(args, t)
    if pat is not None:
        graph, pred, bfs = evaluate_pattern(t, pat, args.tol)
        ok = pred.predicted_dim == bfs.dimension and not bfs.ill_conditioned
        claim("braced rigid iff braces graph connected and spanning", "oracle rank vs component count",
              ok and (pred.rigid == (bfs.dimension == 3)), c=pred.components, oracle=bfs.dimension)
        doc["bracing"] = {"c": pred.components, "oracle_dim": bfs.dimension, "predicted_dim": pred.predicted_dim,
                          "agree": pred.predicted_dim == bfs.dimension, "rigid": bfs.dimension == 3,
                          "braces": len(pat), "gap_ratio": bfs.gap_ratio, "pattern": pat.to_json()}

    if src.spec is not None and t.index is not None and t.interior_joint_mask.any():
        sym = symbol_matrix(t)
        worst_res, worst_ker = 0.0, 0.0
        for i in range(src.spec.r):
            lam = np.exp(2j * np.pi * 0.3)
            worst_res = max(worst_res, interior_residual(t, band_zero_mode(t, i, lam)))
            w = Multiphase.circle(src.spec.r, i, 0.3)
            k = np.abs(sym.evaluate(w) @ band_class_vector(sym, t, i)).max()
            worst_ker = max(worst_ker, float(k))
        claim("band zero modes are flexes in the symbol kernel", "interior residual and symbol product",
              worst_res < 1e-12 and worst_ker < 1e-12, residual=worst_res, symbol_residual=worst_ker)
        doc["star_classes"] = len(sym.classes)

    doc["claims"] = claims
    doc["all_pass"] = all(c["pass"] for c in claims)
    return doc


def cmd_report(args) -> int:
    doc = build_report(args)
    _emit(dumps(doc), args.out)
    return 0 if doc["all_pass"] else EXIT_CHECK_FAILED


# ---------------------------------------------------------------- parser

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    p.add_argument("--tol", type=float, default=None, help="absolute rank threshold override")
    p.add_argument("--window", type=float, default=6.0, help="window radius for multigrid sources")
    p.add_argument("--fraction", type=float, default=0.8, help="inner window fraction for the patch seed")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--svg", default=None, help="SVG output path (generate)")
    src = p.add_argument_group("tiling source")
    src.add_argument("--tiling", help="tiling JSON file")
    src.add_argument("--multigrid", help="multigrid JSON file")
    src.add_argument("--pentagrid", help="five comma-separated offsets")
    src.add_argument("--tetragrid", help="four comma-separated offsets")
    src.add_argument("--square", help="M,N square-grid patch")
    src.add_argument("--normal-offsets", action="store_true",
                     help="preset offsets are normal distances of the grids")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="quasirigid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    def bracing_opts(sp):
        sp.add_argument("--braces", help="bracing JSON file")
        sp.add_argument("--pattern", help="checkered:p, thin, thick, square, rhomb, class:<deg>, random[:density]")

    g = add("generate", cmd_generate, "build a tiling and write its JSON")
    bracing_opts(g)
    g.add_argument("--highlight-ribbon", type=int, action="append", help="ribbon id to highlight (repeatable)")
    add("ribbons", cmd_ribbons, "list ribbons")
    bracing_opts(add("rigidity", cmd_rigidity, "oracle flex dimension"))
    b = add("brace", cmd_brace, "braces-graph prediction against the oracle")
    bracing_opts(b)
    b.add_argument("--trials", type=int, default=0, help="run a random bracing experiment instead")
    b.add_argument("--density", default="0.3", help="brace density or comma-separated schedule")
    e = add("expand", cmd_expand, "expand a flex in the ribbon-shear basis")
    e.add_argument("--flex", help="velocity field JSON (default: random flex from --seed)")
    e.add_argument("--order", default="lowest", choices=["lowest", "highest", "random"])
    add("ribbon-figure", cmd_ribbon_figure, "asymptotic ribbon directions")
    s = add("spectrum", cmd_spectrum, "sample the zero-mode spectrum (CSV)")
    s.add_argument("--slice", default="circles:n=64", help="circle:i=1:n=256, circles:n=64 or torus:n=64")
    s.add_argument("--generic", type=int, default=0, help="extra uniformly random multiphases")
    z = add("zero-mode", cmd_zero_mode, "band zero mode as a velocity field")
    z.add_argument("--grid-id", type=int, required=True, help="grid id, 1-based")
    z.add_argument("--lambda", dest="lam", default="0.25turns", help="e.g. 0.25turns, 1.2rad, or re,im")
    r = add("report", cmd_report, "consolidated analysis with pass/fail per claim")
    bracing_opts(r)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QuasirigidError as exc:
        print(f"quasirigid: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
