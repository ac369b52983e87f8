"""Scoring through the primary toolkit's CLI (its external interface).

The evaluator treats every annotation file in its --gt directory as ground
truth, so scoring one split means handing it a directory holding exactly
that split's files.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

from .config import HarnessError


def split_gt_dir(dataset_dir: str | Path, split: str, target: Path) -> Path:
    """Copy the split's JSON annotations into `target`."""
    root = Path(dataset_dir)
    listing = root / split
    if not listing.exists():
        raise HarnessError(f"{listing} missing")
    target.mkdir(parents=True, exist_ok=True)
    for line in listing.read_text().splitlines():
        if not line.strip():
            continue
        stem = Path(line.strip()).stem
        src = root / "labels_json" / f"{stem}.json"
        if not src.exists():
            raise HarnessError(f"{src} missing for split entry {line.strip()}")
        shutil.copy(src, target / src.name)
    return target


def evaluate_predictions(
    pred_path: str | Path,
    dataset_dir: str | Path,
    split: str = "test.txt",
    thresholds: tuple[float, ...] = (0.5, 0.75),
) -> dict:
    """Run `bcv eval` against the split's ground truth; returns the JSON report."""
    root = Path(dataset_dir)
    with tempfile.TemporaryDirectory() as tmp:
        gt_dir = split_gt_dir(root, split, Path(tmp) / "gt")
        report_path = Path(tmp) / "report.json"
        cmd = [
            sys.executable, "-m", "bitcanvas",
            "eval",
            "--pred", str(pred_path),
            "--gt", str(gt_dir),
            "--classes", str(root / "classes.txt"),
            "--iou", ",".join(format(t, "g") for t in thresholds),
            "--json", str(report_path),
        ]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise HarnessError(
                f"evaluator failed (exit {proc.returncode}): {proc.stderr.strip()}"
            )
        return json.loads(report_path.read_text())


def map_at(report: dict, threshold: float) -> float:
    return float(report["map"][format(threshold, "g")])
