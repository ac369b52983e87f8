"""Compact one-stage detector.

Four stride-2 stages bring an S x S input to an S/16 grid; every cell
regresses one box (sigmoid center offset within the cell, sigmoid width and
height as image fractions), an objectness logit, and class logits. Loss is
the usual mix: BCE objectness over all cells, MSE on box terms and
cross-entropy on classes over positive cells (the cell holding a ground-truth
center).
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

STRIDE = 16


def _block(cin: int, cout: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, stride=2, padding=1, bias=False),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
        nn.Conv2d(cout, cout, 3, padding=1, bias=False),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
    )


class MicroYolo(nn.Module):
    def __init__(self, n_classes: int, width: int = 16):
        super().__init__()
        w = width
        self.n_classes = n_classes
        self.backbone = nn.Sequential(
            _block(3, w), _block(w, 2 * w), _block(2 * w, 4 * w), _block(4 * w, 8 * w)
        )
        self.head = nn.Conv2d(8 * w, 5 + n_classes, 1)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """(B, 3, S, S) -> (B, 5 + C, S/16, S/16) raw logits."""
        return self.head(self.backbone(images))


def build_targets(
    boxes_batch: list[np.ndarray],
    labels_batch: list[np.ndarray],
    grid: int,
    n_classes: int,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """Per-cell supervision from normalized cx cy w h boxes."""
    batch = len(boxes_batch)
    obj = torch.zeros(batch, grid, grid)
    box_t = torch.zeros(batch, 4, grid, grid)  # (dx, dy, w, h)
    cls_t = torch.zeros(batch, grid, grid, dtype=torch.long)
    for b, (boxes, labels) in enumerate(zip(boxes_batch, labels_batch)):
        for (cx, cy, w, h), label in zip(boxes.tolist(), labels.tolist()):
            gx = min(int(cx * grid), grid - 1)
            gy = min(int(cy * grid), grid - 1)
            obj[b, gy, gx] = 1.0
            box_t[b, 0, gy, gx] = cx * grid - gx
            box_t[b, 1, gy, gx] = cy * grid - gy
            box_t[b, 2, gy, gx] = w
            box_t[b, 3, gy, gx] = h
            cls_t[b, gy, gx] = int(label)
    return obj, box_t, cls_t, obj.bool()


def detection_loss(
    raw: torch.Tensor,
    boxes_batch: list[np.ndarray],
    labels_batch: list[np.ndarray],
    n_classes: int,
) -> torch.Tensor:
    grid = raw.shape[-1]
    obj_target, box_target, cls_target, positive = build_targets(
        boxes_batch, labels_batch, grid, n_classes
    )
    obj_logit = raw[:, 4]
    # positives are ~1% of cells; upweight them so confidence saturates
    obj_loss = nn.functional.binary_cross_entropy_with_logits(
        obj_logit, obj_target, pos_weight=torch.tensor(8.0, device=raw.device)
    )
    if positive.any():
        pred_box = torch.sigmoid(raw[:, 0:4])
        pos = positive.unsqueeze(1).expand_as(pred_box)
        box_loss = nn.functional.mse_loss(pred_box[pos], box_target[pos])
        cls_logits = raw[:, 5:].permute(0, 2, 3, 1)[positive]
        cls_loss = nn.functional.cross_entropy(cls_logits, cls_target[positive])
    else:
        box_loss = raw.sum() * 0.0
        cls_loss = raw.sum() * 0.0
    return obj_loss + 5.0 * box_loss + cls_loss


def decode(
    raw: torch.Tensor, confidence_threshold: float
) -> list[tuple[int, float, float, float, float, float]]:
    """One image's raw map -> [(class, confidence, cx, cy, w, h)] normalized."""
    grid = raw.shape[-1]
    obj = torch.sigmoid(raw[4])
    cls_prob = torch.softmax(raw[5:], dim=0)
    best_prob, best_cls = cls_prob.max(dim=0)
    conf = obj * best_prob
    keep = conf >= confidence_threshold
    out = []
    ys, xs = torch.nonzero(keep, as_tuple=True)
    box = torch.sigmoid(raw[0:4])
    for y, x in zip(ys.tolist(), xs.tolist()):
        cx = (x + box[0, y, x].item()) / grid
        cy = (y + box[1, y, x].item()) / grid
        out.append(
            (int(best_cls[y, x]), float(conf[y, x]), cx, cy,
             float(box[2, y, x]), float(box[3, y, x]))
        )
    return out


def nms(
    detections: list[tuple[int, float, float, float, float, float]], iou_threshold: float
) -> list[tuple[int, float, float, float, float, float]]:
    """Per-class greedy suppression on (class, conf, cx, cy, w, h) tuples."""

    def to_corners(d):
        _, _, cx, cy, w, h = d
        return cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2

    def box_iou(a, b):
        ax0, ay0, ax1, ay1 = to_corners(a)
        bx0, by0, bx1, by1 = to_corners(b)
        iw = min(ax1, bx1) - max(ax0, bx0)
        ih = min(ay1, by1) - max(ay0, by0)
        if iw <= 0 or ih <= 0:
            return 0.0
        inter = iw * ih
        union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
        return inter / union if union > 0 else 0.0

    kept: list[tuple[int, float, float, float, float, float]] = []
    for det in sorted(detections, key=lambda d: -d[1]):
        if all(det[0] != other[0] or box_iou(det, other) <= iou_threshold for other in kept):
            kept.append(det)
    return kept
