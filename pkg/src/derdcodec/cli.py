"""Command-line interface: encode, decode, evaluate, lambda-experiment,
fit-profile, gen-corpus."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .errors import CodecError, ConfigError


def _add_common_flags(p):
    p.add_argument("--profile", help="specific-energy profile JSON "
                   "(default: $DERD_PROFILE or the bundled synthetic profile)")
    p.add_argument("--out", help="output path or directory")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="derdcodec",
        description="Energy-aware intra codec and evaluation harness",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode an image/sequence to a bitstream")
    enc.add_argument("--input", required=True, help=".yuv, .pgm or .ppm input")
    enc.add_argument("--width", type=int, help="luma width (for .yuv)")
    enc.add_argument("--height", type=int, help="luma height (for .yuv)")
    enc.add_argument("--frames", type=int, default=None, help="frame count (for .yuv)")
    enc.add_argument("--qp", type=int, default=25)
    enc.add_argument("--objective", choices=["rdo", "dedo", "derdo"], default="rdo")
    enc.add_argument("--lambda-e", type=float, default=None,
                     help="override lambda_E (dedo/derdo)")
    _add_common_flags(enc)

    dec = sub.add_parser("decode", help="decode a bitstream to raw YUV")
    dec.add_argument("--input", required=True, help=".derd bitstream")
    _add_common_flags(dec)

    ev = sub.add_parser("evaluate", help="encode corpus, emit curves and BD reports")
    ev.add_argument("--config", required=True, help="experiment config JSON")
    ev.add_argument("--jobs", type=int, default=None, help="worker processes")
    _add_common_flags(ev)

    le = sub.add_parser("lambda-experiment", help="CTU-level QP search over "
                        "the lambda_E grid")
    le.add_argument("--config", required=True)
    le.add_argument("--full-grid", action="store_true",
                    help="search the whole QP range instead of +-5 windows")
    _add_common_flags(le)

    fit = sub.add_parser("fit-profile", help="least-squares profile calibration")
    fit.add_argument("--energies", required=True,
                     help="CSV with columns: features (path), energy_j")
    fit.add_argument("--nonnegative", action="store_true")
    _add_common_flags(fit)

    gen = sub.add_parser("gen-corpus", help="generate the synthetic test corpus")
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--fps", type=float, default=30.0)
    _add_common_flags(gen)
    return ap


def _fail(msg: str, code: int = 1):
    print(f"derdcodec: error: {msg}", file=sys.stderr)
    raise SystemExit(code)


def cmd_encode(args):
    from .codec import encode_to_file
    from .config import resolve_profile
    from .frames import load_input
    from .optimizer import Objective

    if args.profile and not Path(args.profile).exists():
        _fail(f"profile file not found: {args.profile}", 2)
    try:
        profile = resolve_profile(args.profile)
        frames = load_input(args.input, args.width, args.height, args.frames)
        objective = Objective.for_qp(args.objective, args.qp, profile,
                                     lambda_e=args.lambda_e)
    except (CodecError, ConfigError, FileNotFoundError) as exc:
        _fail(str(exc), 2)
    out = Path(args.out or (Path(args.input).stem + ".derd"))
    out.parent.mkdir(parents=True, exist_ok=True)
    result = encode_to_file(out, frames, args.qp, objective)

    log_path = out.with_suffix(".log.csv")
    with open(log_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["frame", "x", "y", "size", "objective", "qp", "mode",
                     "skip", "d", "r", "e", "j"])
        for fidx, x, y, n, mode, skip, d, r, e, j in result.log_rows:
            wr.writerow([fidx, x, y, n, args.objective, args.qp, mode, skip,
                         d, r, repr(e), repr(j)])
    feat_path = out.with_suffix(".features.json")
    result.counts.save(feat_path)

    from .energy_model import estimate_decoding_energy
    energy = estimate_decoding_energy(profile, result.counts)
    if energy < 0:
        logging.getLogger("derdcodec").warning(
            "negative estimated decoding energy (%g J): degenerate profile", energy)
    print(f"wrote {out} ({out.stat().st_size} bytes), "
          f"decision log {log_path}, feature log {feat_path}")
    print(f"estimated decoding energy: {energy:.6g} J")
    return 0


def cmd_decode(args):
    from .codec import decode_file
    from .frames import write_yuv

    try:
        header, frames, counts = decode_file(args.input)
    except (CodecError, FileNotFoundError) as exc:
        _fail(str(exc), 2)
    out = Path(args.out or (Path(args.input).stem + ".out.yuv"))
    out.parent.mkdir(parents=True, exist_ok=True)
    write_yuv(out, frames)
    feat_path = out.with_suffix(".features.json")
    counts.save(feat_path)
    print(f"decoded {header.frame_count} frame(s) {header.width}x{header.height} "
          f"(objective {header.objective}, QP {header.qp}) -> {out}")
    print(f"recomputed feature log: {feat_path}")
    return 0


def cmd_evaluate(args):
    from .config import load_config
    from .harness import run_evaluation

    try:
        config = load_config(args.config, overrides={
            "profile": args.profile, "out_dir": args.out, "jobs": args.jobs,
        })
        _, bd_report, _ = run_evaluation(config)
    except (CodecError, ConfigError) as exc:
        _fail(str(exc), 2)
    out_dir = Path(config.out_dir)
    print(f"curves: {out_dir/'curves.csv'}")
    print(f"BD report: {out_dir/'bd_report.json'}")
    print(f"streaming report: {out_dir/'streaming_report.json'}")
    if "mean" in bd_report:
        for kind, vals in bd_report["mean"].items():
            print(f"  {kind}: BDBR {vals['bdbr_percent']:+.2f}% | "
                  f"BDDE savings {vals['bdde_savings_percent']:+.2f}%")
    return 0


def cmd_lambda_experiment(args):
    from .config import load_config
    from .harness import run_lambda_experiment

    try:
        config = load_config(args.config, overrides={
            "profile": args.profile, "out_dir": args.out,
        })
        result = run_lambda_experiment(config, full_grid=args.full_grid)
    except (CodecError, ConfigError) as exc:
        _fail(str(exc), 2)
    out_dir = Path(config.out_dir)
    print(f"histograms: {out_dir/'lambda_qp_histogram.csv'}")
    print(f"dominant QPs: {out_dir/'lambda_qp_dominant.csv'}")
    for le, qp in result.dominant_series("ALL"):
        print(f"  lambda_E {le:.3e} -> dominant QP {qp}")
    return 0


def cmd_fit_profile(args):
    from .energy_model import FeatureCounts
    from .profile_fit import fit_profile

    samples = []
    try:
        with open(args.energies, newline="") as fh:
            rd = csv.DictReader(fh)
            if rd.fieldnames is None or "features" not in rd.fieldnames \
                    or "energy_j" not in rd.fieldnames:
                _fail(f"{args.energies}: need CSV columns features, energy_j", 2)
            for row in rd:
                counts = FeatureCounts.load(row["features"])
                samples.append((counts, float(row["energy_j"])))
        fit = fit_profile(samples, nonnegative=args.nonnegative)
    except (CodecError, FileNotFoundError, ValueError) as exc:
        _fail(str(exc), 2)
    out = Path(args.out or "fitted_profile.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    fit.profile.save(out)
    print(f"fitted profile -> {out}")
    print(f"samples: {len(samples)}, rank: {fit.rank}, "
          f"condition number: {fit.condition_number:.3e}")
    print(f"mean relative estimation error: {fit.mean_relative_error:.4%}")
    if fit.unidentifiable:
        print(f"unidentifiable (all-zero columns): {', '.join(fit.unidentifiable)}")
    return 0


def cmd_gen_corpus(args):
    from .corpus import generate_corpus

    out = Path(args.out or "corpus")
    entries = generate_corpus(out, seed=args.seed, fps=args.fps)
    print(f"wrote {len(entries)} images and {out/'corpus.json'}")
    return 0


COMMANDS = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "evaluate": cmd_evaluate,
    "lambda-experiment": cmd_lambda_experiment,
    "fit-profile": cmd_fit_profile,
    "gen-corpus": cmd_gen_corpus,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
