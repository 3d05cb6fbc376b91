"""Command-line entry point for the contactless fingerprint toolkit.

Usage:
    python -m contactless_fingerprint [--verbose] [--config PATH] COMMAND [options]
    cfr COMMAND [options]

Commands:
- synth: write a synthetic dataset in the evaluation layout
- preprocess: dump the intermediate rasters of the minutiae branch for one photo
- train: train the siamese network, write the checkpoint and score calibration
- enroll / verify / list / remove: template store workflow
- evaluate: EER, FMR100 and FMR1000 for the embedding, minutiae and fused scores
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import create_enrollment_service, create_extractor
from .config import (
    DEFAULT_GLOBAL_THRESHOLD,
    DEFAULT_IMAGE_COLS,
    DEFAULT_IMAGE_ROWS,
    DEFAULT_IMPOSTOR_SETS,
    DEFAULT_PLANTED_MINUTIAE,
    DEFAULT_WAVELENGTH,
)
from .core.enrollment import EnrollmentService
from .core.imaging import global_threshold, read_rgb, write_gray, write_ridge_map
from .core.minutiae import minutiae_to_text
from .core.pipeline import FeatureExtractor, SiameseEmbedder
from .core.ridge_analysis import orientation_to_text
from .core.settings import SystemConfig, default_config_path
from .errors import CalibrationError, FingerprintError, ProtocolError
from .evaluation.dataset import DatasetEnumerator, load_images
from .evaluation.runner import format_summary, run_evaluation, score_dataset, write_report
from .evaluation.scoring_pool import ScoringPool
from .network.architecture import NetworkSpec
from .network.checkpoint import save_checkpoint
from .network.trainer import train_from_scratch
from .persistence.repository import TemplateRepository
from .synthetic.generator import generate_dataset

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"


def _load_config(args: argparse.Namespace) -> SystemConfig:
    config = SystemConfig.load(args.config)
    if getattr(args, "workers", None):
        config.max_workers = args.workers
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "store", None):
        config.store_dir = str(Path(args.store).resolve())
    config.validate()
    return config


def _config_path(args: argparse.Namespace) -> Path:
    return Path(args.config) if args.config else default_config_path()


def cmd_synth(args: argparse.Namespace) -> int:
    config = _load_config(args)
    dataset = generate_dataset(
        Path(args.out),
        fingers=args.fingers,
        impressions=args.impressions,
        seed=config.seed,
        image_shape=(args.rows, args.cols),
        wavelength=args.wavelength,
        planted=args.minutiae,
        max_workers=config.max_workers,
    )
    print(f"Wrote {dataset.image_count} images to {args.out}")
    return 0


def cmd_preprocess(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stages = FeatureExtractor(None, config.minutiae_settings()).minutiae_stages(read_rgb(args.photo))

    write_gray(out_dir / "gray.pgm", stages.gray)
    write_ridge_map(out_dir / "global.pgm", global_threshold(stages.gray, args.global_threshold))
    write_ridge_map(out_dir / "amt.pgm", stages.ridges)
    write_ridge_map(out_dir / "skeleton.pgm", stages.skeleton)
    (out_dir / "orientation.txt").write_text(orientation_to_text(stages.field), encoding="utf-8")
    (out_dir / "minutiae.txt").write_text(minutiae_to_text(stages.minutiae), encoding="utf-8")

    timings = ", ".join(f"{name} {1000 * seconds:.1f} ms" for name, seconds in stages.timings.items())
    print(f"{len(stages.minutiae)} minutiae ({timings})")
    print(f"Wrote preprocessing panels to {out_dir}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args)
    if args.architecture:
        config.architecture = args.architecture
    for name in ("epochs", "learning_rate", "batch_size", "margin"):
        value = getattr(args, name)
        if value is not None:
            setattr(config, name, value)

    index = DatasetEnumerator(Path(args.data), split=args.split).enumerate()
    pool = ScoringPool(max_workers=config.max_workers)
    images = load_images([path for _, _, path in index.samples()], pool)
    spec = NetworkSpec.named(config.architecture)
    result = train_from_scratch(images, index.labels(), spec, config.contrastive(), config.adam())

    checkpoint = save_checkpoint(result.params, Path(args.out))
    config.checkpoint = str(checkpoint.resolve())

    extractor = FeatureExtractor(SiameseEmbedder(result.params), config.minutiae_settings())
    try:
        _, scores = score_dataset(index, extractor, config.tolerances(), config.max_workers)
        calibration = scores.calibration()
        config.set_calibration(calibration)
        logger.info(f"Calibrated score bounds on the training split: {calibration.to_dict()}")
    except (CalibrationError, ProtocolError) as e:
        logger.warning(f"Could not calibrate on the training split: {e}")

    config.save(_config_path(args))
    if result.epoch_losses:
        print(f"Epoch losses: first {result.epoch_losses[0]:.6f}, last {result.epoch_losses[-1]:.6f}")
    print(f"Wrote checkpoint to {checkpoint}")
    return 0


def cmd_enroll(args: argparse.Namespace) -> int:
    config = _load_config(args)
    service = create_enrollment_service(config, create_extractor(config, args.ckpt))
    template = service.enroll(args.id, [read_rgb(path) for path in args.photos])
    print(f"Enrolled '{template.user_id}' ({len(template.minutiae)} minutiae)")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    config = _load_config(args)
    service = create_enrollment_service(config, create_extractor(config, args.ckpt))
    result = service.verify(args.id, read_rgb(args.photo), threshold=args.threshold)
    print(f"user:               {result.user_id}")
    print(f"S_d (embedding):    {result.embedding_score!r}")
    print(f"S_m (minutiae):     {result.minutiae_score}")
    print(f"S_d normalized:     {result.embedding_normalized!r}")
    print(f"S_m normalized:     {result.minutiae_normalized!r}")
    print(f"S_f (fused):        {result.fused_score!r}")
    print(f"threshold:          {result.threshold!r}")
    print(f"decision:           {result.decision.value}")
    return 0


def cmd_list(args: argparse.Namespace) -> int:
    config = _load_config(args)
    rows = TemplateRepository(config.resolved_store_dir()).list_templates()
    if not rows:
        print("No enrolled users")
        return 0
    print(f"{'User':<24}{'Enrolled at':<34}{'Minutiae':>9}")
    for row in rows:
        print(f"{row['user_id']:<24}{row['enrolled_at']:<34}{row['minutiae_count']:>9}")
    return 0


def cmd_remove(args: argparse.Namespace) -> int:
    config = _load_config(args)
    service = EnrollmentService(extractor=None, repository=TemplateRepository(config.resolved_store_dir()))
    if service.remove(args.id):
        print(f"Removed '{args.id}'")
    else:
        print(f"'{args.id}' was not enrolled")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    index = DatasetEnumerator(Path(args.data), split=args.split).enumerate()
    extractor = create_extractor(config, args.ckpt)
    calibration = config.calibration()
    report = run_evaluation(
        index,
        extractor,
        calibration=calibration,
        weights=config.weights(),
        tolerances=config.tolerances(),
        max_workers=config.max_workers,
        impostor_sets=args.impostor_sets,
    )
    write_report(report, Path(args.report))

    config.operating_threshold = report.approaches["fusion"].eer_threshold
    if calibration is None:
        config.set_calibration(report.calibration)
    config.save(_config_path(args))

    print(format_summary(report), end="")
    print(f"Operating threshold set to {config.operating_threshold!r}")
    return 0


def _exact_photo_count(parser: argparse.ArgumentParser, photos: List[str], expected: int = 3) -> None:
    if len(photos) != expected:
        parser.error(f"--photos needs exactly {expected} files, got {len(photos)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfr",
        description="Contactless fingerprint recognition toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    # Synthetic dataset: 20 fingers x 8 impressions
    cfr synth --fingers 20 --impressions 8 --seed 7 --out data/

    # Train on the first half of the fingers, then evaluate on the rest
    cfr train --data data/ --epochs 70 --out model.ckpt
    cfr evaluate --data data/ --split test --report report/

    # Enroll and verify
    cfr enroll --id alice --photos a0.png a1.png a2.png
    cfr verify --id alice --photo probe.png

Configuration precedence: flag > environment (CFR_HOME, CFR_CONFIG,
CFR_MAX_WORKERS) > config file > built-in default.
""",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    parser.add_argument(
        "--config", type=str, default=None, help="Config file (default: ~/.contactless-fingerprint/config.json)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="Generate a synthetic dataset")
    synth.add_argument("--fingers", type=int, required=True)
    synth.add_argument("--impressions", type=int, required=True)
    synth.add_argument("--seed", type=int, default=None, help="Dataset seed (default: config seed)")
    synth.add_argument("--out", type=str, required=True, help="Output directory (must be empty or absent)")
    synth.add_argument("--rows", type=int, default=DEFAULT_IMAGE_ROWS)
    synth.add_argument("--cols", type=int, default=DEFAULT_IMAGE_COLS)
    synth.add_argument("--wavelength", type=float, default=DEFAULT_WAVELENGTH, help="Ridge period in pixels")
    synth.add_argument("--minutiae", type=int, default=DEFAULT_PLANTED_MINUTIAE, help="Planted minutiae per finger")
    synth.add_argument("--workers", type=int, default=None)
    synth.set_defaults(handler=cmd_synth)

    preprocess = sub.add_parser("preprocess", help="Write thresholding, skeleton and minutiae dumps for a photo")
    preprocess.add_argument("--photo", type=str, required=True)
    preprocess.add_argument("--out", type=str, required=True)
    preprocess.add_argument("--global-threshold", type=int, default=DEFAULT_GLOBAL_THRESHOLD)
    preprocess.set_defaults(handler=cmd_preprocess)

    train = sub.add_parser("train", help="Train the siamese network")
    train.add_argument("--data", type=str, required=True)
    train.add_argument("--out", type=str, required=True, help="Checkpoint path")
    train.add_argument("--epochs", type=int, default=None)
    train.add_argument("--split", choices=("train", "test", "all"), default="train")
    train.add_argument("--architecture", choices=("full", "desk", "tiny"), default=None)
    train.add_argument("--learning-rate", type=float, default=None)
    train.add_argument("--batch-size", type=int, default=None)
    train.add_argument("--margin", type=float, default=None)
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--workers", type=int, default=None)
    train.set_defaults(handler=cmd_train)

    enroll = sub.add_parser("enroll", help="Enroll a user from three photos")
    enroll.add_argument("--id", type=str, required=True)
    enroll.add_argument("--photos", nargs="+", required=True)
    enroll.add_argument("--ckpt", type=str, default=None)
    enroll.add_argument("--store", type=str, default=None)
    enroll.set_defaults(handler=cmd_enroll)

    verify = sub.add_parser("verify", help="Verify a probe photo against an enrolled user")
    verify.add_argument("--id", type=str, required=True)
    verify.add_argument("--photo", type=str, required=True)
    verify.add_argument("--threshold", type=float, default=None, help="Operating threshold on S_f")
    verify.add_argument("--ckpt", type=str, default=None)
    verify.add_argument("--store", type=str, default=None)
    verify.set_defaults(handler=cmd_verify)

    list_cmd = sub.add_parser("list", help="List enrolled users")
    list_cmd.add_argument("--store", type=str, default=None)
    list_cmd.set_defaults(handler=cmd_list)

    remove = sub.add_parser("remove", help="Remove an enrolled user")
    remove.add_argument("--id", type=str, required=True)
    remove.add_argument("--store", type=str, default=None)
    remove.set_defaults(handler=cmd_remove)

    evaluate = sub.add_parser("evaluate", help="Evaluate verification performance on a dataset")
    evaluate.add_argument("--data", type=str, required=True)
    evaluate.add_argument("--report", type=str, required=True, help="Report output directory")
    evaluate.add_argument("--ckpt", type=str, default=None)
    evaluate.add_argument("--split", choices=("train", "test", "all"), default="all")
    evaluate.add_argument("--impostor-sets", type=int, default=DEFAULT_IMPOSTOR_SETS)
    evaluate.add_argument("--workers", type=int, default=None)
    evaluate.set_defaults(handler=cmd_evaluate)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "enroll":
        _exact_photo_count(parser, args.photos)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT, stream=sys.stderr)

    try:
        return args.handler(args)
    except FingerprintError as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
