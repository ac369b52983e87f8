"""Dataset directory loading (the layout the bitcanvas builder emits).

Expected tree: images/*.png, labels_yolo/*.txt (one `class cx cy w h` line
per box, normalized), classes.txt, train.txt / test.txt listing image paths
relative to the dataset root. Images are decoded once, resized to the
network input size, and cached as uint8 tensors.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .config import HarnessError


@dataclass
class Sample:
    image_id: str
    pixels: torch.Tensor           # (3, S, S) uint8
    boxes: np.ndarray              # (N, 4) normalized cx cy w h
    labels: np.ndarray             # (N,) class indices
    original_size: tuple[int, int]  # (width, height)


def read_class_list(dataset_dir: str | Path) -> list[str]:
    path = Path(dataset_dir) / "classes.txt"
    if not path.exists():
        raise HarnessError(f"{path} missing")
    classes = [line.strip() for line in path.read_text().splitlines() if line.strip()]
    if not classes:
        raise HarnessError(f"{path} is empty")
    return classes


def read_split(dataset_dir: str | Path, name: str) -> list[Path]:
    root = Path(dataset_dir)
    path = root / name
    if not path.exists():
        raise HarnessError(f"{path} missing")
    entries = [root / line.strip() for line in path.read_text().splitlines() if line.strip()]
    return entries


def read_yolo_labels(path: Path, n_classes: int) -> tuple[np.ndarray, np.ndarray]:
    boxes, labels = [], []
    if path.exists():
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 5:
                raise HarnessError(f"{path} line {lineno}: expected 5 fields")
            idx = int(fields[0])
            if not 0 <= idx < n_classes:
                raise HarnessError(
                    f"{path} line {lineno}: class index {idx} outside [0,{n_classes})"
                )
            labels.append(idx)
            boxes.append([float(v) for v in fields[1:]])
    return (
        np.array(boxes, dtype=np.float32).reshape(-1, 4),
        np.array(labels, dtype=np.int64),
    )


def load_samples(
    dataset_dir: str | Path, split: str, input_size: int, n_classes: int
) -> list[Sample]:
    root = Path(dataset_dir)
    samples = []
    for image_path in read_split(root, split):
        with Image.open(image_path) as img:
            rgb = img.convert("RGB")
            original = rgb.size
            resized = rgb.resize((input_size, input_size), Image.BILINEAR)
        pixels = torch.from_numpy(
            np.asarray(resized, dtype=np.uint8).transpose(2, 0, 1).copy()
        )
        label_path = root / "labels_yolo" / f"{image_path.stem}.txt"
        boxes, labels = read_yolo_labels(label_path, n_classes)
        samples.append(Sample(image_path.stem, pixels, boxes, labels, original))
    return samples


class DetectionDataset(torch.utils.data.Dataset):
    def __init__(self, samples: list[Sample]):
        if not samples:
            raise HarnessError("dataset split is empty")
        self.samples = samples

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, index: int):
        sample = self.samples[index]
        image = sample.pixels.float() / 255.0
        return image, sample.boxes, sample.labels


def collate(batch):
    images = torch.stack([item[0] for item in batch])
    boxes = [item[1] for item in batch]
    labels = [item[2] for item in batch]
    return images, boxes, labels
