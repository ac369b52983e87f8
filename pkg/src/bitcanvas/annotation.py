"""Placement rectangles -> pixel bounding boxes, plus annotation files.

Placement rectangles live in CLB-grid coordinates with row 0 at the BOTTOM
of the device (site-coordinate convention); pixel boxes are half-open with y
increasing downward. Two on-disk formats: a canonical JSON document and
one-line-per-box normalized text (class index, center x/y, width, height).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

from .device import DeviceProfile
from .errors import AnnotationError
from .fsio import atomic_write_text
from .image import pixel_columns


class AnnotationFormat(str, Enum):
    JSON = "json"
    YOLO_TXT = "yolo"


@dataclass
class PlacementRecord:
    class_label: str
    col_min: int
    col_max: int  # inclusive
    row_min: int
    row_max: int  # inclusive, row 0 = device bottom
    construction: str | None = None

    def validate(self, profile: DeviceProfile) -> None:
        if self.col_min > self.col_max or self.row_min > self.row_max:
            raise AnnotationError(
                f"placement rect must have min <= max, got cols "
                f"[{self.col_min},{self.col_max}] rows [{self.row_min},{self.row_max}]"
            )
        if self.col_min < 0 or self.col_max >= profile.grid_cols:
            raise AnnotationError(
                f"placement cols [{self.col_min},{self.col_max}] outside "
                f"grid of {profile.grid_cols} columns"
            )
        if self.row_min < 0 or self.row_max >= profile.grid_rows:
            raise AnnotationError(
                f"placement rows [{self.row_min},{self.row_max}] outside "
                f"grid of {profile.grid_rows} rows"
            )


@dataclass(frozen=True)
class BBoxAnnotation:
    class_label: str
    x_min: int
    y_min: int
    x_max: int  # exclusive
    y_max: int  # exclusive

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise AnnotationError(
                f"degenerate box ({self.x_min},{self.y_min},{self.x_max},{self.y_max})"
            )
        if self.x_min < 0 or self.y_min < 0:
            raise AnnotationError("box extends past the image origin")

    @property
    def box(self) -> tuple[int, int, int, int]:
        return self.x_min, self.y_min, self.x_max, self.y_max


def placement_to_bbox(record: PlacementRecord, profile: DeviceProfile) -> BBoxAnnotation:
    """Pixel box of a placement rect: x from per-column pixel spans, y from
    flipping bottom-origin grid rows to top-origin pixel rows."""
    record.validate(profile)
    spans = pixel_columns(profile)
    x_min = spans[record.col_min][0]
    x_max = spans[record.col_max][1]
    block_h = profile.family.block_height
    y_min = (profile.grid_rows - 1 - record.row_max) * block_h
    y_max = (profile.grid_rows - record.row_min) * block_h
    return BBoxAnnotation(record.class_label, x_min, y_min, x_max, y_max)


def _class_index(label: str, class_list: Sequence[str]) -> int:
    try:
        return class_list.index(label)  # type: ignore[union-attr]
    except ValueError:
        raise AnnotationError(f"class {label!r} not in class list {list(class_list)}") from None


def write_annotations(
    boxes: Sequence[BBoxAnnotation],
    image_name: str,
    width: int,
    height: int,
    class_list: Sequence[str],
    fmt: AnnotationFormat,
    path: str | Path,
) -> None:
    path = Path(path)
    if fmt is AnnotationFormat.JSON:
        doc = {
            "image": image_name,
            "width": width,
            "height": height,
            "classes": list(class_list),
            "boxes": [
                {
                    "class": b.class_label,
                    "x_min": b.x_min,
                    "y_min": b.y_min,
                    "x_max": b.x_max,
                    "y_max": b.y_max,
                }
                for b in boxes
            ],
        }
        for b in boxes:
            _class_index(b.class_label, class_list)
        atomic_write_text(path, json.dumps(doc, indent=2) + "\n")
    elif fmt is AnnotationFormat.YOLO_TXT:
        lines = []
        for b in boxes:
            idx = _class_index(b.class_label, class_list)
            cx = (b.x_min + b.x_max) / 2 / width
            cy = (b.y_min + b.y_max) / 2 / height
            bw = (b.x_max - b.x_min) / width
            bh = (b.y_max - b.y_min) / height
            lines.append(f"{idx} {cx:.6f} {cy:.6f} {bw:.6f} {bh:.6f}\n")
        atomic_write_text(path, "".join(lines))
    else:
        raise AnnotationError(f"unknown annotation format {fmt!r}")


def read_annotations(
    path: str | Path,
    fmt: AnnotationFormat,
    width: int,
    height: int,
    class_list: Sequence[str],
) -> list[BBoxAnnotation]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise AnnotationError(f"cannot read annotations {path}: {exc}") from exc

    if fmt is AnnotationFormat.JSON:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise AnnotationError(f"{path} is not valid JSON: {exc}") from exc
        boxes = []
        for i, entry in enumerate(doc.get("boxes", [])):
            label = entry.get("class") if isinstance(entry, dict) else None
            if label not in class_list:
                raise AnnotationError(f"{path} box {i}: unknown class {label!r}")
            try:
                boxes.append(
                    BBoxAnnotation(
                        label, entry["x_min"], entry["y_min"], entry["x_max"], entry["y_max"]
                    )
                )
            except (KeyError, TypeError) as exc:
                raise AnnotationError(f"{path} box {i}: {exc}") from exc
        return boxes

    if fmt is AnnotationFormat.YOLO_TXT:
        boxes = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 5:
                raise AnnotationError(
                    f"{path} line {lineno}: expected 5 fields, got {len(fields)}"
                )
            try:
                idx = int(fields[0])
                cx, cy, bw, bh = (float(f) for f in fields[1:])
            except ValueError as exc:
                raise AnnotationError(f"{path} line {lineno}: {exc}") from exc
            if not 0 <= idx < len(class_list):
                raise AnnotationError(
                    f"{path} line {lineno}: class index {idx} outside "
                    f"[0,{len(class_list)})"
                )
            x_min = round((cx - bw / 2) * width)
            x_max = round((cx + bw / 2) * width)
            y_min = round((cy - bh / 2) * height)
            y_max = round((cy + bh / 2) * height)
            boxes.append(
                BBoxAnnotation(
                    class_list[idx],
                    max(0, x_min),
                    max(0, y_min),
                    min(width, x_max),
                    min(height, y_max),
                )
            )
        return boxes

    raise AnnotationError(f"unknown annotation format {fmt!r}")
