"""Command-line front end.

Subcommands: ``simulate``, ``describe``, ``test``, ``experiment`` and
``matrix``. Options may also come from a ``key = value`` config file
(``--config``); command-line flags override the file. The master seed is
taken from ``--seed``, else the config file, else ``$RANDSET_SEED``, else 0.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error,
4 not enough components.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .descriptors import DEFAULT_BINS, DEFAULT_RADIUS, describe_components, describe_image, descriptors_csv
from .errors import DecodeError, InsufficientDataError, InvalidParameterError, UnsupportedFormatError
from .imagery import encode_pbm, encode_png, filter_components, label_components, read_image
from .models import BooleanParams, EllipseParams, EmpiricalLaw, Window
from .ndist import DEFAULT_DEPTH
from .permtest import (DEFAULT_PERMUTATIONS, PermutationConfig, derive_seed, joint_similarity_test, matrix_csv,
                       outcomes_csv, pairwise_matrix, rng_stream, sample_components)
from .study import MODELS, ModelFactory, StudyConfig, paired_experiment, pooled_experiment

log = logging.getLogger("randset")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA = 0, 2, 3, 4
SEED_ENV = "RANDSET_SEED"
IMAGE_SUFFIXES = (".pbm", ".png")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# argument parsing


def _range_pair(text):
    lo, _, hi = text.partition(",")
    return (float(lo), float(hi or lo))


def _common(p, k_default=None, discard_default=False, testing=True):
    g = p.add_argument_group("analysis")
    g.add_argument("--radius", type=int, default=DEFAULT_RADIUS, help="disc radius r in pixels (default 5)")
    g.add_argument("--bins", type=int, default=DEFAULT_BINS, help="testing-function bins l (default 10)")
    g.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    g.add_argument("--discard-border", action=argparse.BooleanOptionalAction, default=discard_default,
                   help=f"drop components touching the image edge (default {'on' if discard_default else 'off'})")
    g.add_argument("--min-pixels", type=int, default=1)
    g.add_argument("--restrict", choices=("component", "image"), default="component",
                   help="count only the component's own pixels in each disc, or all foreground")
    if testing:
        g.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="subset-depth kernel D (default 2)")
        g.add_argument("--permutations", type=int, default=DEFAULT_PERMUTATIONS, help="permutations s (default 999)")
        g.add_argument("--k", type=int, default=k_default, help="components sampled per side")
        g.add_argument("--workers", type=int, default=os.cpu_count() or 1)


def _io(p, images=False):
    p.add_argument("--seed", type=int, default=None, help=f"master seed (else ${SEED_ENV}, else 0)")
    p.add_argument("--out", default=".", help="output directory (default: current directory)")
    p.add_argument("--config", default=None, help="key = value file; flags override it")
    if images:
        p.add_argument("--invert", action="store_true", help="treat dark pixels as foreground")
        p.add_argument("--threshold", type=int, default=127, help="grayscale threshold (default 127)")


def _model_args(p):
    g = p.add_argument_group("models")
    g.add_argument("--width", type=int, default=400)
    g.add_argument("--height", type=int, default=400)
    g.add_argument("--intensity", type=float, default=BooleanParams.intensity, help="Boolean germs per pixel^2")
    g.add_argument("--r-min", type=float, default=BooleanParams.r_min)
    g.add_argument("--r-max", type=float, default=BooleanParams.r_max)
    g.add_argument("--p-delete", type=float, default=0.5, help="component deletion probability (reduced Boolean)")
    g.add_argument("--fixed-side", type=int, default=4, help="fixed rectangle side")
    g.add_argument("--ellipse-intensity", type=float, default=EllipseParams.intensity)
    g.add_argument("--semi-major", type=_range_pair, default=EllipseParams.semi_major, help="lo,hi")
    g.add_argument("--semi-minor", type=_range_pair, default=EllipseParams.semi_minor, help="lo,hi")
    g.add_argument("--orientation", type=float, default=None, help="fixed ellipse angle (default uniform)")
    g.add_argument("--ratio-law", default=None, help="file of perimeter/area ratios (one column, or a 'ratio' column)")
    g.add_argument("--perimeter-law", default=None, help="file of rectangle perimeters")
    g.add_argument("--count-law", default=None, help="file of per-realisation component counts")
    g.add_argument("--count-mean", type=float, default=None, help="Poisson mean of the box count")
    g.add_argument("--reference", type=int, default=100,
                   help="Boolean realisations used to build any size or count law not given as a file")


def build_parser():
    parser = argparse.ArgumentParser(prog="randset", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write model realisations as images")
    p.add_argument("model", choices=MODELS)
    p.add_argument("--n", type=int, default=1, help="number of realisations")
    p.add_argument("--format", choices=("pbm", "png"), default="pbm")
    _model_args(p)
    _io(p)
    p.set_defaults(connectivity=8)

    p = sub.add_parser("describe", help="per-component descriptor CSV for each image")
    p.add_argument("images", nargs="+")
    _common(p, testing=False)
    _io(p, images=True)

    p = sub.add_parser("test", help="joint similarity test between two image sets")
    p.add_argument("--a", nargs="+", required=True, help="images of the first random set")
    p.add_argument("--b", nargs="+", required=True, help="images of the second random set")
    _common(p, k_default=10)
    _io(p, images=True)

    p = sub.add_parser("experiment", help="repeated model-vs-model tests; writes the p-value list")
    p.add_argument("model_a", choices=MODELS)
    p.add_argument("model_b", choices=MODELS)
    p.add_argument("--pairs", type=int, default=100, help="number of tests (realisation pairs or bootstrap repeats)")
    p.add_argument("--bootstrap", action="store_true", help="pool all components per model, test k-vs-k draws")
    p.add_argument("--realisations", type=int, default=100, help="realisations pooled per model with --bootstrap")
    p.add_argument("--svg", action="store_true", help="also write a p-value histogram as SVG")
    _common(p, k_default=None, discard_default=True)
    _model_args(p)
    _io(p)

    p = sub.add_parser("matrix", help="pairwise test matrix over a directory of images")
    p.add_argument("directory")
    p.add_argument("--repeats", type=int, default=100)
    _common(p, k_default=20)
    _io(p, images=True)
    return parser


def _config_defaults(parser, subparser, path):
    """Read ``key = value`` lines into defaults for ``subparser``."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}", EXIT_IO) from exc
    actions = {a.dest: a for a in subparser._actions}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().lstrip("-").replace("-", "_")
        val = val.strip()
        if not sep or key not in actions or key in ("config", "help"):
            raise CliError(f"{path}:{lineno}: unknown or malformed setting {raw.strip()!r}", EXIT_USAGE)
        act = actions[key]
        if isinstance(act, (argparse._StoreTrueAction, argparse.BooleanOptionalAction)):
            values[key] = val.lower() in ("1", "true", "yes", "on")
        elif act.nargs in ("+", "*"):
            values[key] = val.split()
        else:
            try:
                values[key] = act.type(val) if act.type else val
            except (TypeError, ValueError) as exc:
                raise CliError(f"{path}:{lineno}: bad value for {key}: {val!r}", EXIT_USAGE) from exc
            if act.choices is not None and values[key] not in act.choices:
                raise CliError(f"{path}:{lineno}: {key} must be one of {list(act.choices)}", EXIT_USAGE)
    subparser.set_defaults(**values)
    return values


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    file_values = {}
    if args.config:
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        file_values = _config_defaults(parser, subparser, args.config)
        args = parser.parse_args(argv)
    if args.seed is None and "seed" not in file_values:
        env = os.environ.get(SEED_ENV)
        try:
            args.seed = int(env) if env else 0
        except ValueError:
            raise CliError(f"${SEED_ENV} must be an integer, got {env!r}", EXIT_USAGE)
    if not 0 <= args.seed < 2**64:
        raise CliError(f"seed must be a 64-bit unsigned integer, got {args.seed}", EXIT_USAGE)
    return args


# ---------------------------------------------------------------------------
# helpers


def _outdir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".randset-write-probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise CliError(f"output directory {out} is not writable: {exc}", EXIT_IO) from exc
    return out


def _write(path, data):
    try:
        if isinstance(data, str):
            # LF endings regardless of platform
            with open(path, "w", newline="\n") as fh:
                fh.write(data)
        else:
            Path(path).write_bytes(data)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def _echo_config(out, args):
    lines = [f"{k} = {_fmt(v)}" for k, v in sorted(vars(args).items())]
    _write(out / "effective_config.txt", "\n".join(lines) + "\n")


def _fmt(v):
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v) if not all(isinstance(x, float) for x in v) else ",".join(map(repr, v))
    return str(v)


def _load(paths, args):
    imgs = []
    for path in paths:
        try:
            imgs.append(read_image(path, threshold=args.threshold, invert=args.invert))
        except (OSError, DecodeError, UnsupportedFormatError) as exc:
            raise CliError(f"cannot read image {path}: {exc}", EXIT_IO) from exc
    return imgs


def _components(img, args):
    return filter_components(label_components(img, args.connectivity), args.min_pixels, args.discard_border)


def _pcfg(args):
    return PermutationConfig(s=args.permutations, seed=args.seed, depth=args.depth, bins=args.bins, radius=args.radius)


def read_law(path) -> EmpiricalLaw:
    """One-column numeric file, or CSV whose header names a ``ratio`` column."""
    try:
        lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise CliError(f"cannot read law file {path}: {exc}", EXIT_IO) from exc
    col = 0
    if lines and not _is_number(lines[0].split(",")[0]):
        header = [h.strip() for h in lines[0].split(",")]
        col = header.index("ratio") if "ratio" in header else 0
        lines = lines[1:]
    try:
        return EmpiricalLaw([float(ln.split(",")[col]) for ln in lines])
    except (ValueError, IndexError, InsufficientDataError) as exc:
        raise CliError(f"bad law file {path}: {exc}", EXIT_USAGE) from exc


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _study_config(args) -> StudyConfig:
    cfg = StudyConfig(
        boolean=BooleanParams(args.intensity, args.r_min, args.r_max),
        ellipse=EllipseParams(args.ellipse_intensity, tuple(args.semi_major), tuple(args.semi_minor),
                              args.orientation),
        window=Window(args.width, args.height),
        p_delete=args.p_delete,
        fixed_side=args.fixed_side,
        reference=args.reference,
        connectivity=args.connectivity,
        min_pixels=getattr(args, "min_pixels", 1),
        discard_border=getattr(args, "discard_border", False),
        restrict=getattr(args, "restrict", "component") == "component",
    )
    if args.ratio_law:
        cfg.ratio_law = read_law(args.ratio_law)
    if args.perimeter_law:
        cfg.perimeter_law = read_law(args.perimeter_law)
    if args.count_law:
        cfg.count_law = read_law(args.count_law)
    elif args.count_mean is not None:
        cfg.count_law = args.count_mean
    return cfg


def svg_histogram(pvals, bins=20, width=400, height=200) -> str:
    counts, _ = np.histogram(np.asarray(pvals, dtype=float), bins=bins, range=(0.0, 1.0))
    top = max(int(counts.max(initial=0)), 1)
    bw = width / bins
    bars = "".join(
        f'<rect x="{i * bw:.2f}" y="{height - c / top * height:.2f}" width="{bw - 1:.2f}" '
        f'height="{c / top * height:.2f}" fill="#4a6fa5"/>'
        for i, c in enumerate(counts)
    )
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">{bars}</svg>\n')


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args):
    if args.n < 0:
        raise CliError("--n must be nonnegative", EXIT_USAGE)
    cfg = _study_config(args)
    if args.model == "squares" and cfg.ratio_law is None:
        raise CliError("simulate squares needs --ratio-law FILE", EXIT_USAGE)
    out = _outdir(args.out)
    _echo_config(out, args)
    factory = ModelFactory(cfg, args.seed)
    encode = encode_pbm if args.format == "pbm" else encode_png
    for i in range(args.n):
        seed = derive_seed(args.seed, i)
        img = factory.realise(args.model, seed)
        stem = f"{args.model}_{i:04d}"
        _write(out / f"{stem}.{args.format}", encode(img))
        _write(out / f"{stem}.txt", _sidecar(args, cfg, i, seed))
    return EXIT_OK


def _sidecar(args, cfg, index, seed):
    lines = [f"model = {args.model}", f"index = {index}", f"master_seed = {args.seed}", f"seed = {seed}",
             f"window = {cfg.window.width}x{cfg.window.height}"]
    if args.model in ("boolean", "reduced-boolean"):
        b = cfg.boolean
        lines += [f"intensity = {b.intensity!r}", f"r_min = {b.r_min!r}", f"r_max = {b.r_max!r}"]
        if args.model == "reduced-boolean":
            lines.append(f"p_delete = {cfg.p_delete!r}")
    elif args.model == "ellipses":
        e = cfg.ellipse
        lines += [f"intensity = {e.intensity!r}", f"semi_major = {e.semi_major}", f"semi_minor = {e.semi_minor}",
                  f"orientation = {e.orientation}"]
    else:
        ref = f"boolean reference ({cfg.reference} realisations)"
        lines += [f"ratio_law = {args.ratio_law or ref}", f"perimeter_law = {args.perimeter_law or 'from ratio law'}",
                  f"count_law = {args.count_law or args.count_mean or ref}"]
        if args.model == "rectangles":
            lines.append(f"fixed_side = {cfg.fixed_side}")
    return "\n".join(lines) + "\n"


def cmd_describe(args):
    out = _outdir(args.out)
    imgs = _load(args.images, args)
    _echo_config(out, args)
    for path, img in zip(args.images, imgs):
        comps = _components(img, args)
        if not comps:
            print(f"warning: {path}: no components left after filtering", file=sys.stderr)
        descs = describe_components(img, comps, args.radius, args.bins, args.restrict == "component")
        _write(out / f"{Path(path).stem}_descriptors.csv", descriptors_csv(descs, args.bins))
    return EXIT_OK


def _side_descriptors(paths, args):
    descs = []
    for img in _load(paths, args):
        descs += describe_components(img, _components(img, args), args.radius, args.bins,
                                     args.restrict == "component")
    return descs


def cmd_test(args):
    out = _outdir(args.out)
    da = _side_descriptors(args.a, args)
    db = _side_descriptors(args.b, args)
    rng = rng_stream(args.seed, 0)
    sa = sample_components(da, args.k, rng) if da else []
    sb = sample_components(db, args.k, rng) if db else []
    outcome = joint_similarity_test(sa, sb, _pcfg(args))
    _echo_config(out, args)
    _write(out / "test_outcome.csv", outcomes_csv([outcome]))
    print(f"components  A={len(sa)} (of {len(da)})  B={len(sb)} (of {len(db)})")
    print(f"N_ratio     {outcome.n_ratio_obs:.6g}")
    print(f"N_curve     {outcome.n_curve_obs:.6g}")
    print(f"p_ratio     {outcome.p_ratio:.4f}")
    print(f"p_curve     {outcome.p_curve:.4f}")
    print(f"p_joint     {outcome.p_joint:.4f}")
    return EXIT_OK


def cmd_experiment(args):
    out = _outdir(args.out)
    if args.k is None:
        args.k = 100 if args.bootstrap else 10
    scfg = _study_config(args)
    pcfg = _pcfg(args)
    _echo_config(out, args)
    if args.bootstrap:
        outcomes = pooled_experiment(args.model_a, args.model_b, args.realisations, args.k, args.pairs, pcfg, scfg,
                                     args.workers)
    else:
        outcomes = paired_experiment(args.model_a, args.model_b, args.pairs, args.k, pcfg, scfg, args.workers)
    _write(out / "pvalues.csv", outcomes_csv(outcomes))
    if args.svg:
        _write(out / "pvalues.svg", svg_histogram([o.p_joint for o in outcomes]))
    pj = np.array([o.p_joint for o in outcomes])
    if pj.size:
        print(f"{args.model_a} vs {args.model_b}: {pj.size} tests, mean p_joint {pj.mean():.3f}, "
              f"{int((pj < 0.05).sum())} below 0.05")
    return EXIT_OK


def cmd_matrix(args):
    directory = Path(args.directory)
    if not directory.is_dir():
        raise CliError(f"{directory} is not a directory", EXIT_IO)
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if len(paths) < 2:
        raise CliError(f"{directory} holds {len(paths)} images; the matrix needs at least 2", EXIT_DATA)
    out = _outdir(args.out)
    sets = []
    for img in _load(paths, args):
        sets.append(describe_components(img, _components(img, args), args.radius, args.bins,
                                        args.restrict == "component"))
    _echo_config(out, args)
    result = pairwise_matrix(sets, args.k, args.repeats, _pcfg(args), [p.stem for p in paths], args.workers)
    _write(out / "mean_p.csv", matrix_csv(result, "mean_p"))
    _write(out / "count_below_05.csv", matrix_csv(result, "count"))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "describe": cmd_describe,
    "test": cmd_test,
    "experiment": cmd_experiment,
    "matrix": cmd_matrix,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s: %(message)s")
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"randset: error: {exc}", file=sys.stderr)
        return exc.code
    except InsufficientDataError as exc:
        print(f"randset: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvalidParameterError, ValueError) as exc:
        print(f"randset: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"randset: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
