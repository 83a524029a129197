"""Command-line interface: train, score, evaluate, inspect, export-filters.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable images,
malformed manifests, dimension mismatches), 3 corrupt model bank.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from msunique.colorspace import to_ygcr
from msunique.decoder import TrainingConfig
from msunique.evaluation import evaluate, export_scatter, format_report
from msunique.filterbank import (
    DEFAULT_EPSILON,
    DEFAULT_SIZES,
    DEFAULT_SUPPRESSION_TAU,
    BankFormatError,
    FilterBank,
    FilterKind,
    export_filter_mosaic,
    load_bank,
    save_bank,
    train_bank,
)
from msunique.imageio import SubjectiveEntry, load_image, parse_manifest
from msunique.patches import PatchMatrix, extract_random_patches
from msunique.scoring import QualityRecord, image_features, quality_score, spearman

__all__ = ["main", "entrypoint", "UsageError"]

IMAGE_SUFFIXES = (".ppm", ".pnm", ".png")
SCORES_HEADER = ["dist_path", "ref_path", "rho", "score"]


class UsageError(Exception):
    """Bad flags or flag combinations; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through UsageError
    # instead so main() can keep 2 reserved for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _g17(v: float) -> str:
    return format(float(v), ".17g")


def _parse_sizes(text: str) -> tuple[int, ...]:
    try:
        sizes = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid size list: {text!r}")
    if not sizes:
        raise argparse.ArgumentTypeError("size list is empty")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="msunique", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train a model bank on an image corpus")
    train.add_argument("--images", required=True, help="directory of training images")
    train.add_argument(
        "--num-images", type=int, default=None, help="random subset size (default all)"
    )
    train.add_argument("--patches-per-image", type=int, default=100)
    train.add_argument("--patch-side", type=int, default=8)
    train.add_argument(
        "--sizes",
        type=_parse_sizes,
        default=DEFAULT_SIZES,
        help="comma-separated hidden widths (default 81,121,169,400,625)",
    )
    train.add_argument("--epochs", type=int, default=400)
    train.add_argument("--rho", type=float, default=0.035)
    train.add_argument("--beta", type=float, default=5.0)
    train.add_argument("--lambda", dest="lam", type=float, default=0.003)
    train.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    train.add_argument("--tau", type=float, default=DEFAULT_SUPPRESSION_TAU)
    train.add_argument("--loss-scale", choices=("mean", "sum"), default="mean")
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--out", required=True, help="output bank file")
    train.set_defaults(func=cmd_train)

    score = sub.add_parser("score", help="score image pairs against a bank")
    score.add_argument("--bank", required=True)
    score.add_argument("--ref", help="reference image (single-pair mode)")
    score.add_argument("--dist", help="distorted image (single-pair mode)")
    score.add_argument("--batch", help="manifest CSV of pairs to score")
    score.add_argument("--out", help="output CSV for --batch")
    score.set_defaults(func=cmd_score)

    ev = sub.add_parser("evaluate", help="run the validation protocol on a manifest")
    ev.add_argument("--bank", help="score pairs through this bank")
    ev.add_argument("--scores", help="pre-computed scores CSV (instead of --bank)")
    ev.add_argument("--manifest", required=True)
    ev.add_argument("--bins", type=int, default=10)
    ev.add_argument("--out", help="write an objective,regressed,subjective CSV here")
    ev.set_defaults(func=cmd_evaluate)

    inspect = sub.add_parser("inspect", help="print a bank summary")
    inspect.add_argument("--bank", required=True)
    inspect.set_defaults(func=cmd_inspect)

    export = sub.add_parser("export-filters", help="write filter mosaics as PPM")
    export.add_argument("--bank", required=True)
    export.add_argument("--out", default=".", help="output directory")
    export.add_argument("--kind", choices=("edge", "color", "all"), default="all")
    export.set_defaults(func=cmd_export_filters)
    return parser


def _config_lines(bank: FilterBank) -> list[str]:
    cfg = bank.config
    return [
        f"config.patch_side={bank.patch_side}",
        "config.sizes=" + ",".join(str(m.hidden) for m in bank.models),
        f"config.rho={_g17(cfg.rho)}",
        f"config.beta={_g17(cfg.beta)}",
        f"config.lambda={_g17(cfg.lam)}",
        f"config.epochs={cfg.epochs}",
        f"config.seed={cfg.seed}",
        f"config.epsilon={_g17(bank.whitening.epsilon)}",
        f"config.tau={_g17(bank.suppression_tau)}",
    ]


def _corpus_files(directory: str) -> list[Path]:
    root = Path(directory)
    if not root.is_dir():
        raise ValueError(f"not a directory: {directory}")
    files = sorted(
        p for p in root.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file()
    )
    if not files:
        raise ValueError(f"no images found in {directory}")
    return files


def cmd_train(args) -> int:
    files = _corpus_files(args.images)
    rng = np.random.default_rng(args.seed)
    if args.num_images is not None:
        if args.num_images < 1:
            raise ValueError("--num-images must be positive")
        if args.num_images < len(files):
            keep = rng.choice(len(files), size=args.num_images, replace=False)
            files = [files[i] for i in sorted(keep)]

    columns = []
    for path in files:
        ygcr = to_ygcr(load_image(path))
        patch = extract_random_patches(
            ygcr, args.patches_per_image, args.patch_side, rng
        )
        columns.append(patch.data)
    patches = PatchMatrix(args.patch_side, np.hstack(columns))

    cfg = TrainingConfig(
        rho=args.rho,
        beta=args.beta,
        lam=args.lam,
        epochs=args.epochs,
        seed=args.seed,
        loss_scale=args.loss_scale,
    )
    final_j = {}

    def log(h, iteration, j):
        final_j[h] = j
        print(f"h={h} iter={iteration} J={_g17(j)}")

    bank = train_bank(
        patches,
        sizes=args.sizes,
        cfg=cfg,
        epsilon=args.epsilon,
        suppression_tau=args.tau,
        on_iteration=log,
    )
    save_bank(bank, args.out)

    print(f"trained {len(bank.models)} models on {patches.count} patches")
    for model, labels in zip(bank.models, bank.labels):
        counts = {kind: 0 for kind in FilterKind}
        for label in labels:
            counts[label.kind] += 1
        print(
            f"model h={model.hidden}: J={_g17(final_j[model.hidden])}"
            f" edge={counts[FilterKind.EDGE]}"
            f" color={counts[FilterKind.COLOR]}"
            f" neutral={counts[FilterKind.NEUTRAL]}"
        )
    for line in _config_lines(bank):
        print(line)
    print(f"wrote {args.out}")
    return 0


def _features_from_path(bank: FilterBank, path: str):
    return image_features(bank, to_ygcr(load_image(path)))


def _score_entries(bank: FilterBank, entries) -> list[QualityRecord]:
    """Score manifest pairs in parallel, caching reference features.

    Results come back in manifest order regardless of worker scheduling.
    """
    refs = list(dict.fromkeys(e.ref_path for e in entries))
    with ThreadPoolExecutor() as pool:
        ref_features = dict(
            zip(refs, pool.map(lambda p: _features_from_path(bank, p), refs))
        )

        def one(entry: SubjectiveEntry) -> QualityRecord:
            dist = _features_from_path(bank, entry.dist_path)
            rho = spearman(ref_features[entry.ref_path].values, dist.values)
            return QualityRecord(entry.ref_path, entry.dist_path, rho, rho**10)

        return list(pool.map(one, entries))


def _write_scores(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCORES_HEADER)
        for rec in records:
            writer.writerow(
                [rec.distorted_id, rec.reference_id, _g17(rec.spearman_rho), _g17(rec.score)]
            )


def cmd_score(args) -> int:
    bank = load_bank(args.bank)
    if args.batch is not None:
        if args.ref is not None or args.dist is not None:
            raise UsageError("--batch cannot be combined with --ref/--dist")
        if args.out is None:
            raise UsageError("--batch requires --out")
        entries = parse_manifest(args.batch)
        records = _score_entries(bank, entries)
        _write_scores(records, args.out)
        print(f"scored {len(records)} pairs -> {args.out}")
        return 0
    if args.ref is None or args.dist is None:
        raise UsageError("score needs --ref and --dist, or --batch")
    record = quality_score(
        bank, load_image(args.ref), load_image(args.dist), args.ref, args.dist
    )
    print(f"rho={_g17(record.spearman_rho)} score={_g17(record.score)}")
    return 0


def _read_scores(path, entries) -> list[QualityRecord]:
    """Read a pre-computed scores CSV and align it with the manifest rows."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != SCORES_HEADER:
        raise ValueError(
            "malformed scores file: expected header " + ",".join(SCORES_HEADER)
        )
    body = rows[1:]
    if len(body) != len(entries):
        raise ValueError(
            f"scores file has {len(body)} rows but manifest has {len(entries)}"
        )
    records = []
    for row, entry in zip(body, entries):
        if len(row) != 4:
            raise ValueError("malformed scores file: expected 4 columns per row")
        dist_path, ref_path, rho_text, score_text = row
        if Path(dist_path).name != Path(entry.dist_path).name:
            raise ValueError(
                f"scores file does not match manifest: {dist_path} vs {entry.dist_path}"
            )
        try:
            rho = float(rho_text)
            score = float(score_text)
        except ValueError:
            raise ValueError("malformed scores file: non-numeric score") from None
        records.append(QualityRecord(ref_path, dist_path, rho, score))
    return records


def cmd_evaluate(args) -> int:
    if (args.bank is None) == (args.scores is None):
        raise UsageError("evaluate needs exactly one of --bank or --scores")
    entries = parse_manifest(args.manifest)
    if args.bank is not None:
        bank = load_bank(args.bank)
        records = _score_entries(bank, entries)
    else:
        bank = None
        records = _read_scores(args.scores, entries)

    report = evaluate(records, entries, bins=args.bins)
    if report.outlier_ratio is None:
        print(
            "notice: manifest has no score stds; outlier ratio unavailable",
            file=sys.stderr,
        )
    print(format_report(report, "text"))
    print(f"config.bins={args.bins}")
    if bank is not None:
        for line in _config_lines(bank):
            print(line)
    else:
        print(f"config.scores={args.scores}")
    if args.out is not None:
        objective = [rec.score for rec in records]
        export_scatter(objective, report.regression.regressed,
                       [e.score for e in entries], args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_inspect(args) -> int:
    bank = load_bank(args.bank)
    print(f"models={len(bank.models)}")
    print(f"total_filters={bank.total_filters}")
    for model, labels in zip(bank.models, bank.labels):
        counts = {kind: 0 for kind in FilterKind}
        for label in labels:
            counts[label.kind] += 1
        kurtoses = [label.kurtosis for label in labels]
        print(
            f"model h={model.hidden}: edge={counts[FilterKind.EDGE]}"
            f" color={counts[FilterKind.COLOR]}"
            f" neutral={counts[FilterKind.NEUTRAL]}"
            f" kurtosis_min={_g17(min(kurtoses))}"
            f" kurtosis_max={_g17(max(kurtoses))}"
        )
    for line in _config_lines(bank):
        print(line)
    return 0


def cmd_export_filters(args) -> int:
    bank = load_bank(args.bank)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for index, model in enumerate(bank.models):
        path = out_dir / f"filters_h{model.hidden}_{args.kind}.ppm"
        try:
            count = export_filter_mosaic(bank, index, path, kind=args.kind)
        except ValueError as exc:
            print(f"notice: h={model.hidden}: {exc}", file=sys.stderr)
            continue
        print(f"wrote {path} ({count} filters)")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return int(code) if code is not None else 0
    except BankFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
