"""IoU-thresholded average precision over detection files.

Matching is greedy in descending confidence (stable on ties): each detection
takes the unmatched ground-truth box of its class and image with the highest
IoU at or above the threshold (lowest index on IoU ties). AP integrates the
precision-recall curve at every recall change point after making precision
monotone from the right (all-point interpolation). Classes without ground
truth have undefined AP and are excluded from the mean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .annotation import BBoxAnnotation
from .errors import EvalError

Box = tuple[float, float, float, float]


@dataclass(frozen=True)
class Detection:
    image_id: str
    class_label: str
    bbox: Box
    confidence: float

    def __post_init__(self) -> None:
        x_min, y_min, x_max, y_max = self.bbox
        if not (x_min < x_max and y_min < y_max):
            raise EvalError(f"degenerate detection box {self.bbox}")
        if not 0.0 <= self.confidence <= 1.0:
            raise EvalError(f"confidence {self.confidence} outside [0,1]")


@dataclass
class EvalReport:
    thresholds: tuple[float, ...]
    classes: tuple[str, ...]
    ap: dict[float, dict[str, float | None]]
    mean_ap: dict[float, float]
    gt_counts: dict[str, int]
    det_counts: dict[str, int]

    def to_json_dict(self) -> dict:
        def thr_key(t: float) -> str:
            return format(t, "g")

        return {
            "thresholds": list(self.thresholds),
            "classes": list(self.classes),
            "ap": {
                thr_key(t): {c: self.ap[t][c] for c in self.classes} for t in self.thresholds
            },
            "map": {thr_key(t): self.mean_ap[t] for t in self.thresholds},
            "gt_counts": dict(self.gt_counts),
            "det_counts": dict(self.det_counts),
        }


def iou(a: Box | Sequence[float], b: Box | Sequence[float]) -> float:
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    ix0, iy0 = max(ax0, bx0), max(ay0, by0)
    ix1, iy1 = min(ax1, bx1), min(ay1, by1)
    iw, ih = ix1 - ix0, iy1 - iy0
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def _match_flags(
    dets: Sequence[Detection],
    gts_by_image: Mapping[str, Sequence[BBoxAnnotation]],
    class_label: str,
    iou_threshold: float,
) -> tuple[list[bool], int]:
    """True-positive flag per detection in confidence order, plus GT count."""
    class_gts = {
        image: [g for g in boxes if g.class_label == class_label]
        for image, boxes in gts_by_image.items()
    }
    n_gt = sum(len(v) for v in class_gts.values())
    ordered = sorted(
        (d for d in dets if d.class_label == class_label),
        key=lambda d: -d.confidence,
    )
    taken: dict[str, list[bool]] = {img: [False] * len(v) for img, v in class_gts.items()}
    flags: list[bool] = []
    for det in ordered:
        candidates = class_gts.get(det.image_id, [])
        used = taken.get(det.image_id, [])
        best_iou = 0.0
        best_j = -1
        for j, gt in enumerate(candidates):
            if used[j]:
                continue
            v = iou(det.bbox, gt.box)
            if v >= iou_threshold and v > best_iou:
                best_iou = v
                best_j = j
        if best_j >= 0:
            used[best_j] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags, n_gt


def average_precision(
    dets: Sequence[Detection],
    gts_by_image: Mapping[str, Sequence[BBoxAnnotation]],
    class_label: str,
    iou_threshold: float,
) -> float | None:
    """AP for one class, or None when the class has no ground truth."""
    if not 0.0 < iou_threshold < 1.0:
        raise EvalError(f"iou_threshold {iou_threshold} outside (0,1)")
    flags, n_gt = _match_flags(dets, gts_by_image, class_label, iou_threshold)
    if n_gt == 0:
        return None
    if not flags:
        return 0.0
    recalls: list[float] = []
    precisions: list[float] = []
    tp = fp = 0
    for is_tp in flags:
        tp += is_tp
        fp += not is_tp
        recalls.append(tp / n_gt)
        precisions.append(tp / (tp + fp))
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])
    ap = 0.0
    prev_recall = 0.0
    for r, p in zip(recalls, precisions):
        if r > prev_recall:
            ap += (r - prev_recall) * p
            prev_recall = r
    return ap


def read_predictions(path: str | Path, class_list: Sequence[str]) -> list[Detection]:
    """Parse `image_id class confidence x_min y_min x_max y_max` lines."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise EvalError(f"cannot read predictions {path}: {exc}") from exc
    dets: list[Detection] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 7:
            raise EvalError(f"{path} line {lineno}: expected 7 fields, got {len(fields)}")
        image_id, label = fields[0], fields[1]
        if label not in class_list:
            raise EvalError(f"{path} line {lineno}: unknown class {label!r}")
        try:
            conf = float(fields[2])
            box = tuple(float(f) for f in fields[3:])
        except ValueError as exc:
            raise EvalError(f"{path} line {lineno}: {exc}") from exc
        dets.append(Detection(image_id, label, box, conf))  # type: ignore[arg-type]
    return dets


def load_ground_truth(
    gt_dir: str | Path, class_list: Sequence[str]
) -> dict[str, list[BBoxAnnotation]]:
    """All JSON annotation documents in a directory, keyed by image id (stem)."""
    gt_dir = Path(gt_dir)
    if not gt_dir.is_dir():
        raise EvalError(f"ground-truth directory {gt_dir} does not exist")
    out: dict[str, list[BBoxAnnotation]] = {}
    for path in sorted(gt_dir.glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise EvalError(f"cannot read ground truth {path}: {exc}") from exc
        boxes = []
        for entry in doc.get("boxes", []):
            label = entry["class"]
            if label not in class_list:
                raise EvalError(f"{path}: unknown class {label!r}")
            boxes.append(
                BBoxAnnotation(
                    label, entry["x_min"], entry["y_min"], entry["x_max"], entry["y_max"]
                )
            )
        out[path.stem] = boxes
    return out


def evaluate(
    pred_path: str | Path,
    gt_dir: str | Path,
    class_list: Sequence[str],
    thresholds: Sequence[float] = (0.5, 0.75),
) -> EvalReport:
    dets = read_predictions(pred_path, class_list)
    gts = load_ground_truth(gt_dir, class_list)
    missing = sorted({d.image_id for d in dets} - set(gts))
    if missing:
        raise EvalError(f"no ground-truth file for predicted image(s): {missing}")

    gt_counts = {c: 0 for c in class_list}
    for boxes in gts.values():
        for b in boxes:
            gt_counts[b.class_label] += 1
    det_counts = {c: 0 for c in class_list}
    for d in dets:
        det_counts[d.class_label] += 1

    ap: dict[float, dict[str, float | None]] = {}
    mean_ap: dict[float, float] = {}
    for t in thresholds:
        per_class = {c: average_precision(dets, gts, c, t) for c in class_list}
        defined = [v for v in per_class.values() if v is not None]
        ap[t] = per_class
        mean_ap[t] = sum(defined) / len(defined) if defined else 0.0
    return EvalReport(
        thresholds=tuple(thresholds),
        classes=tuple(class_list),
        ap=ap,
        mean_ap=mean_ap,
        gt_counts=gt_counts,
        det_counts=det_counts,
    )
