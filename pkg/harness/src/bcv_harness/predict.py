"""Inference: images -> prediction file in the evaluator's line format.

Each surviving box becomes one line `image_id class confidence x_min y_min
x_max y_max` with pixel coordinates in the ORIGINAL image frame (boxes are
regressed in normalized units, so resizing cancels out).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .config import HarnessConfig, HarnessError
from .model import decode, nms
from .train import load_model


def predict_image(model, pixels: torch.Tensor, config: HarnessConfig):
    with torch.no_grad():
        raw = model(pixels.unsqueeze(0))[0]
    return nms(decode(raw, config.confidence_threshold), config.nms_iou)


def predict(
    model_path: str | Path,
    image_paths: list[Path],
    config: HarnessConfig,
    out_path: str | Path,
) -> Path:
    model, classes, train_config = load_model(model_path)
    size = config.input_size
    if size != train_config.input_size:
        raise HarnessError(
            f"model was trained at input size {train_config.input_size}, "
            f"config requests {size}"
        )
    lines = []
    for path in image_paths:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            width, height = rgb.size
            resized = rgb.resize((size, size), Image.BILINEAR)
        pixels = torch.from_numpy(
            np.asarray(resized, dtype=np.uint8).transpose(2, 0, 1).copy()
        ).float() / 255.0
        for cls, conf, cx, cy, w, h in predict_image(model, pixels, config):
            x_min = max(0.0, (cx - w / 2) * width)
            y_min = max(0.0, (cy - h / 2) * height)
            x_max = min(float(width), (cx + w / 2) * width)
            y_max = min(float(height), (cy + h / 2) * height)
            if x_max <= x_min or y_max <= y_min:
                continue
            lines.append(
                f"{path.stem} {classes[cls]} {conf:.4f} "
                f"{x_min:.1f} {y_min:.1f} {x_max:.1f} {y_max:.1f}\n"
            )
    out = Path(out_path)
    out.write_text("".join(lines))
    return out


def predict_split(
    model_path: str | Path,
    dataset_dir: str | Path,
    split: str,
    config: HarnessConfig,
    out_path: str | Path,
) -> Path:
    root = Path(dataset_dir)
    listing = root / split
    if not listing.exists():
        raise HarnessError(f"{listing} missing")
    image_paths = [
        root / line.strip() for line in listing.read_text().splitlines() if line.strip()
    ]
    return predict(model_path, image_paths, config, out_path)
