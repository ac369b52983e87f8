"""Input-size sweep: train/predict/eval once per size, emit a CSV table."""

from __future__ import annotations

import csv
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .config import HarnessConfig
from .evalbridge import evaluate_predictions, map_at
from .predict import predict_split
from .train import train


def sweep_input_size(
    config: HarnessConfig, sizes: Sequence[int], out_dir: str | Path
) -> list[tuple[int, float, float]]:
    """Returns [(size, mAP@0.5, mAP@0.75)] and writes sweep.csv under out_dir."""
    deduped: list[int] = []
    for size in sizes:
        if size in deduped:
            warnings.warn(f"duplicate input size {size} dropped from sweep", stacklevel=2)
            continue
        deduped.append(size)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[tuple[int, float, float]] = []
    for size in deduped:
        run_config = replace(config, input_size=size)
        run_dir = out / f"size_{size}"
        model_path = train(run_config, run_dir)
        pred_path = run_dir / "predictions.txt"
        predict_split(model_path, config.dataset_dir, "test.txt", run_config, pred_path)
        report = evaluate_predictions(pred_path, config.dataset_dir)
        rows.append((size, map_at(report, 0.5), map_at(report, 0.75)))

    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["input_size", "map50", "map75"])
        for size, m50, m75 in rows:
            writer.writerow([size, f"{m50:.4f}", f"{m75:.4f}"])
    return rows
