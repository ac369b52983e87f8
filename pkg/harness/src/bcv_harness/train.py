"""Training loop: dataset dir -> model artifact + run.json log."""

from __future__ import annotations

import json
import time
from pathlib import Path

import torch

from .config import HarnessConfig, HarnessError
from .data import DetectionDataset, collate, load_samples, read_class_list
from .model import MicroYolo, detection_loss


def train(config: HarnessConfig, out_dir: str | Path) -> Path:
    """Train on the dataset's train split; returns the model artifact path.

    Writes `model.pt` (weights + class list + config) and `run.json` (config
    echo, per-epoch loss curve, schedule note, elapsed seconds).
    """
    config.validate()
    if config.backend != "micro-yolo":
        raise HarnessError(f"unknown backend {config.backend!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    classes = read_class_list(config.dataset_dir)
    samples = load_samples(config.dataset_dir, "train.txt", config.input_size, len(classes))
    if not samples:
        raise HarnessError("no training images listed in train.txt")

    torch.manual_seed(config.seed)
    dataset = DetectionDataset(samples)
    loader = torch.utils.data.DataLoader(
        dataset,
        batch_size=config.batch_size,
        shuffle=True,
        collate_fn=collate,
        generator=torch.Generator().manual_seed(config.seed),
        drop_last=False,
    )
    model = MicroYolo(len(classes))
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    # two training stages as in the usual fine-tuning recipe: second half at
    # a 10x smaller learning rate (there are no pretrained layers to freeze)
    stage_two_start = config.epochs // 2

    started = time.perf_counter()
    losses: list[float] = []
    model.train()
    for epoch in range(config.epochs):
        if epoch == stage_two_start and epoch > 0:
            for group in optimizer.param_groups:
                group["lr"] = config.learning_rate * 0.1
        total = 0.0
        seen = 0
        for images, boxes, labels in loader:
            optimizer.zero_grad()
            raw = model(images)
            loss = detection_loss(raw, boxes, labels, len(classes))
            loss.backward()
            optimizer.step()
            total += loss.item() * len(images)
            seen += len(images)
        losses.append(total / seen)
    elapsed = time.perf_counter() - started

    model_path = out / "model.pt"
    torch.save(
        {"state_dict": model.state_dict(), "classes": classes, "config": config.to_dict()},
        model_path,
    )
    run_log = {
        "config": config.to_dict(),
        "classes": classes,
        "train_images": len(samples),
        "schedule": {
            "kind": "two-stage-lr",
            "note": "trained from scratch; no pretrained layers to freeze",
            "stage_two_start_epoch": stage_two_start,
            "stage_learning_rates": [config.learning_rate, config.learning_rate * 0.1],
        },
        "loss_curve": losses,
        "elapsed_seconds": elapsed,
    }
    (out / "run.json").write_text(json.dumps(run_log, indent=2) + "\n")
    return model_path


def load_model(model_path: str | Path) -> tuple[MicroYolo, list[str], HarnessConfig]:
    artifact = torch.load(model_path, map_location="cpu", weights_only=False)
    classes = artifact["classes"]
    config = HarnessConfig(**artifact["config"])
    model = MicroYolo(len(classes))
    model.load_state_dict(artifact["state_dict"])
    model.eval()
    return model, classes, config
