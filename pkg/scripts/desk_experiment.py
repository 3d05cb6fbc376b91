#!/usr/bin/env python3
"""Desk-scale experiment on synthetic fingers.

Generates a synthetic dataset, trains the desk network on the first half of
the fingers, evaluates on the rest and prints the two fused-score checks.

Usage:
    python scripts/desk_experiment.py [--work-dir DIR] [--fingers 20] [--impressions 8]
                                      [--epochs 40] [--seed 0] [--dry-run]

Options:
    --work-dir   Directory for data, checkpoint, config and report (default: a temp dir)
    --dry-run    Print the cfr commands without running them
"""

import argparse
import json
import shlex
import sys
import tempfile
import time
from pathlib import Path
from typing import List

sys.path.insert(0, str(Path(__file__).parent.parent))

from contactless_fingerprint.__main__ import main as cfr_main  # noqa: E402

FUSION_MARGIN = 0.02


def build_commands(work_dir: Path, fingers: int, impressions: int, epochs: int, seed: int) -> List[List[str]]:
    config = ["--config", str(work_dir / "config.json")]
    return [
        config + ["synth", "--fingers", str(fingers), "--impressions", str(impressions)]
        + ["--seed", str(seed), "--out", str(work_dir / "data")],
        config + ["train", "--data", str(work_dir / "data"), "--split", "train", "--architecture", "desk"]
        + ["--epochs", str(epochs), "--seed", str(seed), "--out", str(work_dir / "desk.ckpt")],
        config + ["evaluate", "--data", str(work_dir / "data"), "--split", "test", "--report", str(work_dir / "report")],
    ]


def check_report(report_path: Path) -> bool:
    """Print the fused-score checks from the report; returns True when both hold."""
    report = json.loads(report_path.read_text(encoding="utf-8"))
    approaches = report["approaches"]
    fusion = approaches["fusion"]
    best_branch = min(approaches["embedding"]["eer"], approaches["minutiae"]["eer"])

    separated = fusion["genuine_mean"] > fusion["impostor_mean"]
    competitive = fusion["eer"] <= best_branch + FUSION_MARGIN

    print()
    print("Fused-score checks:")
    print(
        f"  [{'PASS' if separated else 'FAIL'}] genuine fused mean {fusion['genuine_mean']:.4f} "
        f"> impostor fused mean {fusion['impostor_mean']:.4f}"
    )
    print(
        f"  [{'PASS' if competitive else 'FAIL'}] fusion EER {100 * fusion['eer']:.2f}% "
        f"<= best branch EER {100 * best_branch:.2f}% + {100 * FUSION_MARGIN:.0f} pp"
    )
    return separated and competitive


def run(work_dir: Path, args: argparse.Namespace) -> int:
    commands = build_commands(work_dir, args.fingers, args.impressions, args.epochs, args.seed)
    for command in commands:
        print(f"$ cfr {shlex.join(command)}")
        if args.dry_run:
            continue
        start = time.monotonic()
        code = cfr_main(command)
        if code != 0:
            print(f"Command failed with exit code {code}")
            return code
        print(f"  done in {time.monotonic() - start:.1f} s")

    if args.dry_run:
        print("\n[DRY RUN] No commands were run.")
        return 0
    return 0 if check_report(work_dir / "report" / "report.json") else 1


def main() -> int:
    parser = argparse.ArgumentParser(
        description="Run the synthetic desk experiment end to end",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--work-dir", type=str, default=None, help="Working directory (default: temporary)")
    parser.add_argument("--fingers", type=int, default=20)
    parser.add_argument("--impressions", type=int, default=8)
    parser.add_argument("--epochs", type=int, default=40)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--dry-run", action="store_true", help="Print the commands without running them")
    args = parser.parse_args()

    print("=" * 60)
    print("Contactless Fingerprint - Desk Experiment")
    print("=" * 60)

    if args.work_dir:
        work_dir = Path(args.work_dir)
        work_dir.mkdir(parents=True, exist_ok=True)
        return run(work_dir, args)
    with tempfile.TemporaryDirectory(prefix="cfr-desk-") as tmpdir:
        return run(Path(tmpdir), args)


if __name__ == "__main__":
    sys.exit(main())
