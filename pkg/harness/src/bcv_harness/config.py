"""Run configuration for training, inference, and sweeps."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path


class HarnessError(Exception):
    pass


@dataclass
class HarnessConfig:
    dataset_dir: str
    input_size: int = 416          # square; images are resized before the net
    epochs: int = 60
    seed: int = 0
    backend: str = "micro-yolo"
    confidence_threshold: float = 0.5
    nms_iou: float = 0.45
    batch_size: int = 16
    learning_rate: float = 1e-3

    def validate(self) -> None:
        if self.input_size <= 0:
            raise HarnessError(f"input_size must be > 0, got {self.input_size}")
        if self.input_size % 16:
            raise HarnessError(f"input_size must be a multiple of 16, got {self.input_size}")
        if not 0.0 < self.confidence_threshold < 1.0:
            raise HarnessError(
                f"confidence_threshold {self.confidence_threshold} outside (0,1)"
            )
        if not 0.0 < self.nms_iou < 1.0:
            raise HarnessError(f"nms_iou {self.nms_iou} outside (0,1)")
        if self.epochs < 1:
            raise HarnessError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise HarnessError(f"batch_size must be >= 1, got {self.batch_size}")
        if not Path(self.dataset_dir).is_dir():
            raise HarnessError(f"dataset dir {self.dataset_dir} does not exist")

    def to_dict(self) -> dict:
        return asdict(self)
