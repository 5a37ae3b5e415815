"""Command-line frontend.

Verbs: transform, reconstruct, segment, synth, compare. Every run
writes a run.log into the output directory recording the resolved
parameters (and the RNG identity and seed when randomness is used), so
results are self-describing. Exit codes: 0 success, 1 usage problems
(bad flags, values, or paths), 2 numerical or content validation
failures (divergence, frame validation, corrupt files).
"""

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .coeffio import CoeffDumpError, read_coefficients, write_coefficients
from .frame import PartitionOfUnityViolation, build_system
from .pnm import PnmError, read_pnm, write_pnm
from .regularizers import build_nl_graph, grad_operator, nl_operator
from .report import save_convergence_figure, save_rates_figure
from .segmentation import (
    AdmmConfig,
    CgError,
    DivergenceError,
    admm_generic,
    admm_shearlet,
    as_codebook,
    data_term,
    extract_labels,
    mislabel_rate,
)
from .synth import add_gaussian_noise, cartoon_image, grid_image, stripes_image
from .transform import Coefficients, ImaginaryResidueError, forward, inverse

log = logging.getLogger("shearseg")

NUMERICAL_ERRORS = (
    DivergenceError,
    CgError,
    ImaginaryResidueError,
    PartitionOfUnityViolation,
    CoeffDumpError,
    PnmError,
)


class UsageError(Exception):
    """Bad argument semantics; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; 2 is reserved for
    # numerical failures here, so usage problems must exit 1 instead
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_fraction(text):
    """Parse a float that may be written as a fraction like 1/512."""
    text = str(text).strip()
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return float(num) / float(den)
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse number {text!r}") from None


def parse_weights(text):
    """Comma-separated list of fraction-or-float weights."""
    vals = [parse_fraction(part) for part in str(text).split(",")]
    return vals[0] if len(vals) == 1 else vals


def parse_codebook_text(text):
    """Inline codebook: labels split by ';', channels by ','."""
    try:
        rows = [
            [float(x) for x in label.split(",")]
            for label in text.split(";")
            if label.strip()
        ]
    except ValueError:
        raise UsageError(f"cannot parse codebook {text!r}") from None
    return _validate_codebook(rows, text)


def parse_codebook_file(path):
    """Codebook file: one label per line, comma- or space-separated
    channel values.

    A file whose rows cannot be labels (channel count not 1 or 3, or
    fewer than 2 rows) is transposed before giving up, accepting the
    channels-as-rows layout some sources use.
    """
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            try:
                rows.append([float(x) for x in parts])
            except ValueError:
                raise UsageError(f"{path}: cannot parse codebook line {line!r}") from None
    if not rows or len({len(r) for r in rows}) != 1:
        raise UsageError(f"{path}: codebook rows must be nonempty and equally sized")
    arr = np.asarray(rows, dtype=float)
    if not _plausible_codebook(arr) and _plausible_codebook(arr.T):
        log.info("codebook %s: interpreting rows as channels (transposed)", path)
        arr = arr.T
    return _validate_codebook(arr, path)


def _plausible_codebook(arr):
    return arr.shape[0] >= 2 and arr.shape[1] in (1, 3)


def _validate_codebook(rows, origin):
    try:
        cb = as_codebook(rows)
    except ValueError as exc:
        raise UsageError(f"bad codebook ({origin}): {exc}") from None
    if cb.shape[1] not in (1, 3):
        raise UsageError(
            f"bad codebook ({origin}): {cb.shape[1]} channels, expected 1 or 3"
        )
    return cb


def load_codebook(spec):
    if os.path.exists(spec):
        return parse_codebook_file(spec)
    return parse_codebook_text(spec)


def _ensure_outdir(args):
    os.makedirs(args.output_dir, exist_ok=True)
    return args.output_dir


def _write_run_log(outdir, lines):
    path = os.path.join(outdir, "run.log")
    with open(path, "w") as fh:
        fh.write(f"shearseg {__version__}\n")
        for line in lines:
            fh.write(line + "\n")
    return path


def _rng_lines(seed):
    return [f"rng numpy.random.default_rng (PCG64) seed={seed}"]


def _pad_square(img):
    """Symmetric-pad to a square side; returns (padded, original shape)."""
    h, w = img.shape[0], img.shape[1]
    n = max(h, w)
    if h == w:
        return img, (h, w)
    pad = [(0, n - h), (0, n - w)] + [(0, 0)] * (img.ndim - 2)
    return np.pad(img, pad, mode="symmetric"), (h, w)


def _label_gray(labels, q):
    # gray level round(255 (k-1)/(q-1)), via the writer's [0,1] scaling
    return (np.asarray(labels, dtype=float) - 1.0) / (q - 1)


def cmd_transform(args):
    outdir = _ensure_outdir(args)
    img, _ = read_pnm(args.input)
    if img.ndim != 2:
        raise UsageError(f"{args.input}: transform expects a grayscale PGM")
    img, (h, w) = _pad_square(img)
    n = img.shape[0]
    notes = []
    if (h, w) != (n, n):
        notes.append(f"padded {h}x{w} input to {n}x{n} (symmetric)")
        log.info(notes[-1])
    system = build_system(n)
    coeffs = forward(img, system, workers=args.threads)
    dump = os.path.join(outdir, "coefficients.shco")
    write_coefficients(dump, coeffs)
    log.info("wrote %s (%d planes)", dump, system.num_subbands)
    if not args.no_previews:
        for i, sb in enumerate(system.subbands):
            mag = np.abs(coeffs.planes[i])
            peak = mag.max()
            if peak > 0:
                mag = mag / peak
            name = (
                f"subband_{i:02d}_lowpass.pgm"
                if sb.kind == "lowpass"
                else f"subband_{i:02d}_{sb.kind}_j{sb.j}_k{sb.k}.pgm"
            )
            write_pnm(os.path.join(outdir, name), mag, bits=8)
        notes.append(f"wrote {system.num_subbands} preview images")
    if args.dump_spectra:
        spectra = Coefficients(planes=np.array(system.spectra), system=system)
        write_coefficients(os.path.join(outdir, "spectra.shco"), spectra)
        notes.append("wrote spectra.shco")
    _write_run_log(
        outdir,
        ["command transform", f"input {args.input}", f"side {n}", *notes],
    )
    return 0


def cmd_reconstruct(args):
    outdir = _ensure_outdir(args)
    coeffs = read_coefficients(args.dump)
    img = inverse(coeffs, workers=args.threads)
    out = os.path.join(outdir, args.output)
    write_pnm(out, img, bits=16)
    log.info("wrote %s", out)
    _write_run_log(outdir, ["command reconstruct", f"dump {args.dump}", f"output {out}"])
    return 0


def _solver_config(args):
    try:
        return AdmmConfig(
            gamma=parse_fraction(args.gamma),
            weights=parse_weights(args.weights),
            max_iters=args.iters,
            tol=parse_fraction(args.tol),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_segment(args):
    outdir = _ensure_outdir(args)
    img, _ = read_pnm(args.input)
    codebook = load_codebook(args.codebook)
    channels = 1 if img.ndim == 2 else img.shape[2]
    if codebook.shape[1] != channels:
        raise UsageError(
            f"codebook has {codebook.shape[1]} channels but {args.input} has {channels}"
        )
    img, (h, w) = _pad_square(img)
    n = img.shape[0]
    notes = []
    if (h, w) != (n, n):
        notes.append(f"padded {h}x{w} input to {n}x{n} (symmetric); outputs cropped back")
        log.info(notes[-1])

    cfg = _solver_config(args)
    weights = np.atleast_1d(np.asarray(cfg.weights))
    if args.regularizer != "shearlet" and weights.size != 1:
        raise UsageError(f"{args.regularizer} takes a single weight, got {weights.size}")
    s = data_term(img, codebook, p=args.p)

    t0 = time.perf_counter()
    if args.regularizer == "shearlet":
        system = build_system(n)
        result = admm_shearlet(s, system, cfg, workers=args.threads)
    elif args.regularizer == "tv":
        result = admm_generic(s, grad_operator(n), cfg, workers=args.threads)
    else:
        base = img if img.ndim == 2 else img.mean(axis=2)
        graph = build_nl_graph(base)
        result = admm_generic(s, nl_operator(graph), cfg, workers=args.threads)
    elapsed = time.perf_counter() - t0

    labels = extract_labels(result.w)[:h, :w]
    q = codebook.shape[0]
    write_pnm(os.path.join(outdir, "labels.pgm"), _label_gray(labels, q), bits=8)
    colorized = codebook[labels - 1]
    if colorized.shape[-1] == 1:
        write_pnm(os.path.join(outdir, "colorized.pgm"), colorized[:, :, 0], bits=8)
    else:
        write_pnm(os.path.join(outdir, "colorized.ppm"), colorized, bits=8)
    for k in range(1, q + 1):
        write_pnm(
            os.path.join(outdir, f"mask_{k:02d}.pgm"),
            (labels == k).astype(float),
            bits=8,
        )
    with open(os.path.join(outdir, "convergence.csv"), "w") as fh:
        for line in result.record.csv_lines():
            fh.write(line + "\n")
    save_convergence_figure(
        result.record,
        os.path.join(outdir, "convergence.png"),
        title=f"{args.regularizer} ADMM convergence",
    )
    log.info(
        "segmented %s: %d iterations in %.2fs, final gap %.3e",
        args.input,
        result.iterations_run,
        elapsed,
        result.record.gaps[-1],
    )
    _write_run_log(
        outdir,
        [
            "command segment",
            f"input {args.input}",
            f"regularizer {args.regularizer}",
            f"gamma {cfg.gamma}",
            f"weights {np.atleast_1d(cfg.weights).tolist()}",
            f"iterations {result.iterations_run} of {cfg.max_iters}",
            f"p {args.p}",
            f"labels {q}",
            f"elapsed {elapsed:.2f}s",
            *notes,
        ],
    )
    return 0


def cmd_synth(args):
    outdir = _ensure_outdir(args)
    if args.n < 16:
        raise UsageError(f"synthetic images need N >= 16, got {args.n}")
    maker = {"grid": grid_image, "cartoon": cartoon_image, "stripes": stripes_image}
    img, truth, codebook = maker[args.kind](args.n)
    q = codebook.shape[0]
    ext = "ppm" if img.ndim == 3 else "pgm"
    write_pnm(os.path.join(outdir, f"{args.kind}.{ext}"), img, bits=8)
    write_pnm(os.path.join(outdir, f"{args.kind}_truth.pgm"), _label_gray(truth, q), bits=8)
    with open(os.path.join(outdir, f"{args.kind}_codebook.txt"), "w") as fh:
        for row in codebook:
            fh.write(",".join(f"{v:g}" for v in row) + "\n")
    lines = ["command synth", f"kind {args.kind}", f"n {args.n}", f"labels {q}"]
    if args.noise is not None:
        sigma = parse_fraction(args.noise)
        if sigma < 0:
            raise UsageError("noise level must be nonnegative")
        if args.seed is None:
            raise UsageError("--noise requires --seed for reproducibility")
        rng = np.random.default_rng(args.seed)
        noisy = add_gaussian_noise(img, sigma, rng)
        # display version is clamped; the .npy keeps working floats
        write_pnm(os.path.join(outdir, f"{args.kind}_noisy.{ext}"), noisy, bits=16)
        np.save(os.path.join(outdir, f"{args.kind}_noisy.npy"), noisy)
        lines += [f"noise sigma {sigma}", *_rng_lines(args.seed)]
    _write_run_log(outdir, lines)
    log.info("wrote %s images to %s", args.kind, outdir)
    return 0


def _method_names(paths):
    """File stems, disambiguated by parent directory when stems collide."""
    stems = [os.path.splitext(os.path.basename(p))[0] for p in paths]
    names = []
    for path, stem in zip(paths, stems):
        if stems.count(stem) > 1:
            parent = os.path.basename(os.path.dirname(os.path.abspath(path)))
            stem = f"{parent}_{stem}" if parent else stem
        names.append(stem)
    return names


def cmd_compare(args):
    outdir = _ensure_outdir(args)
    truth, _ = read_pnm(args.truth)
    names, rates = [], []
    for path, name in zip(args.labels, _method_names(args.labels)):
        cand, _ = read_pnm(path)
        if cand.shape != truth.shape:
            raise UsageError(
                f"{path}: shape {cand.shape} does not match truth {truth.shape}"
            )
        wrong = cand != truth
        if wrong.ndim == 3:
            wrong = wrong.any(axis=2)
        rate = float(wrong.mean())
        names.append(name)
        rates.append(rate)
        write_pnm(
            os.path.join(outdir, f"diff_{name}.pgm"),
            np.where(wrong, 0.0, 1.0),
            bits=8,
        )
    csv_path = os.path.join(outdir, "rates.csv")
    with open(csv_path, "w") as fh:
        fh.write("method,mislabel_rate\n")
        for name, rate in zip(names, rates):
            fh.write(f"{name},{rate:.8f}\n")
    save_rates_figure(names, rates, os.path.join(outdir, "rates.png"))
    print("method,mislabel_rate")
    for name, rate in zip(names, rates):
        print(f"{name},{rate:.8f}")
    _write_run_log(
        outdir,
        ["command compare", f"truth {args.truth}"]
        + [f"{n} {r:.8f}" for n, r in zip(names, rates)],
    )
    return 0


def build_parser():
    parser = _Parser(prog="shearseg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"shearseg {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--output-dir", default=".", help="directory for outputs")
    common.add_argument("--seed", type=int, default=None, help="RNG seed")
    common.add_argument("--threads", type=int, default=None, help="FFT worker threads")
    common.add_argument(
        "--log-level",
        default="info",
        choices=["debug", "info", "warning", "error"],
        help="console verbosity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", parents=[common], help="shearlet-analyze an image")
    p.add_argument("input", help="square grayscale PGM")
    p.add_argument("--no-previews", action="store_true", help="skip per-subband previews")
    p.add_argument("--dump-spectra", action="store_true", help="also dump the frame windows")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("reconstruct", parents=[common], help="synthesize from a dump")
    p.add_argument("dump", help="coefficient dump file")
    p.add_argument("--output", default="reconstruction.pgm", help="output file name")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("segment", parents=[common], help="multi-label segmentation")
    p.add_argument("input", help="PGM/PPM image")
    p.add_argument("--codebook", required=True, help="inline '0;0.5;1' or a file path")
    p.add_argument(
        "--regularizer",
        default="shearlet",
        choices=["shearlet", "tv", "nl"],
        help="sparsity operator",
    )
    p.add_argument("--gamma", default="1", help="data-term weight (fractions allowed)")
    p.add_argument(
        "--weights",
        default="0.1",
        help="shrinkage thresholds; comma list is per-scale (shearlet only)",
    )
    p.add_argument("--iters", type=int, default=100, help="ADMM iterations")
    p.add_argument("--p", type=int, default=2, choices=[1, 2], help="data-term exponent")
    p.add_argument("--tol", default="0", help="early-exit tolerance on relative u-change")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("synth", parents=[common], help="generate a test image")
    p.add_argument("kind", choices=["grid", "cartoon", "stripes"])
    p.add_argument("n", type=int, help="side length (>= 16)")
    p.add_argument("--noise", default=None, help="Gaussian noise level sigma")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("compare", parents=[common], help="mislabel rates against truth")
    p.add_argument("truth", help="reference label map")
    p.add_argument("labels", nargs="+", help="candidate label maps")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"shearseg: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"shearseg: error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"shearseg: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
