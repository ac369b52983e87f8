"""Dataset assembly: bitstream+placement pairs -> images, labels, and splits.

The train/test split shuffles entry indices with the package's SplitMix64
generator (seeded from the manifest) and takes the first ceil(ratio * N) as
the training set, so splits reproduce bit-for-bit anywhere.

The synthetic generator stands in for a vendor-toolchain flow: each class is
a byte distribution plus a footprint range, placed as non-overlapping
rectangles on an otherwise sparsely-noisy device, then synthesized into a
container with matching placement records.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .annotation import (
    AnnotationFormat,
    PlacementRecord,
    placement_to_bbox,
    write_annotations,
)
from .device import DeviceProfile, load_profile, save_profile
from .errors import DatasetError
from .fsio import atomic_write_text
from .frames import ContainerFormat, parse_container, synthesize_container
from .image import PixelOrder, encode_image, image_dims, write_image
from .rng import SplitMix64

CONSTRUCTION_NAMES = ("module", "pipeline")


@dataclass
class ManifestEntry:
    bitstream: str
    placement: str
    fmt: ContainerFormat = ContainerFormat.SYNTH


@dataclass
class DatasetManifest:
    profile_path: str
    class_list: list[str]
    entries: list[ManifestEntry]
    split_seed: int = 0
    split_ratio: float = 0.8

    def validate(self) -> None:
        if not self.class_list:
            raise DatasetError("class list must be non-empty")
        if len(set(self.class_list)) != len(self.class_list):
            raise DatasetError("class list must be duplicate-free")
        if not self.entries:
            raise DatasetError("manifest must have at least one entry")
        if not 0.0 < self.split_ratio < 1.0:
            raise DatasetError(f"split ratio {self.split_ratio} outside (0,1)")


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read manifest {path}: {exc}") from exc
    try:
        entries = [
            ManifestEntry(e["bitstream"], e["placement"], ContainerFormat(e.get("format", "synth")))
            for e in obj["entries"]
        ]
        manifest = DatasetManifest(
            profile_path=obj["profile"],
            class_list=list(obj["classes"]),
            entries=entries,
            split_seed=int(obj.get("seed", 0)),
            split_ratio=float(obj.get("ratio", 0.8)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"manifest {path} malformed: {exc}") from exc
    manifest.validate()
    return manifest


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    obj = {
        "profile": manifest.profile_path,
        "classes": manifest.class_list,
        "seed": manifest.split_seed,
        "ratio": manifest.split_ratio,
        "entries": [
            {"bitstream": e.bitstream, "placement": e.placement, "format": e.fmt.value}
            for e in manifest.entries
        ],
    }
    atomic_write_text(Path(path), json.dumps(obj, indent=2) + "\n")


def split_entries(count: int, ratio: float, seed: int) -> tuple[list[int], list[int]]:
    """Deterministic train/test index split: SplitMix64 shuffle, first
    ceil(ratio * count) indices train."""
    if count <= 0:
        raise DatasetError("cannot split an empty entry list")
    if not 0.0 < ratio < 1.0:
        raise DatasetError(f"split ratio {ratio} outside (0,1)")
    indices = list(range(count))
    SplitMix64(seed).shuffle(indices)
    cut = math.ceil(ratio * count)
    return indices[:cut], indices[cut:]


# -- placement files -------------------------------------------------------


def write_placements(records: Sequence[PlacementRecord], path: str | Path) -> None:
    doc = {
        "placements": [
            {
                "class": r.class_label,
                "col_min": r.col_min,
                "col_max": r.col_max,
                "row_min": r.row_min,
                "row_max": r.row_max,
                **({"construction": r.construction} if r.construction else {}),
            }
            for r in records
        ]
    }
    atomic_write_text(Path(path), json.dumps(doc, indent=2) + "\n")


def read_placements(path: str | Path) -> list[PlacementRecord]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot read placements {path}: {exc}") from exc
    records = []
    for i, entry in enumerate(doc.get("placements", [])):
        try:
            records.append(
                PlacementRecord(
                    class_label=entry["class"],
                    col_min=entry["col_min"],
                    col_max=entry["col_max"],
                    row_min=entry["row_min"],
                    row_max=entry["row_max"],
                    construction=entry.get("construction"),
                )
            )
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"{path} placement {i} malformed: {exc}") from exc
    return records


# -- build: manifest -> images + labels + split ------------------------------


@dataclass
class BuildSummary:
    images_written: int = 0
    boxes_written: int = 0
    train_count: int = 0
    test_count: int = 0
    ignored_trailing_words: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)


def build_dataset(
    manifest: DatasetManifest,
    order: PixelOrder,
    out_dir: str | Path,
    jobs: int = 1,
    manifest_dir: str | Path | None = None,
) -> BuildSummary:
    """Render every manifest entry and emit the split lists.

    Relative paths inside the manifest resolve against ``manifest_dir`` when
    given. Per-entry failures are recorded and skipped; DatasetError is raised
    only when every entry fails.
    """
    manifest.validate()
    out = Path(out_dir)
    base = Path(manifest_dir) if manifest_dir is not None else Path(".")
    for sub in ("images", "labels_json", "labels_yolo"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    profile_path = Path(manifest.profile_path)
    if not profile_path.is_absolute():
        profile_path = base / profile_path
    profile = load_profile(profile_path)
    height, width = image_dims(profile)

    def render(entry: ManifestEntry) -> tuple[str | None, int, int, str | None]:
        """(image stem, boxes, ignored words, error)."""
        bit_path = base / entry.bitstream
        stem = Path(entry.bitstream).stem
        try:
            raw = bit_path.read_bytes()
            frames, ignored = parse_container(raw, profile, entry.fmt)
            image = encode_image(frames, profile, order)
            records = read_placements(base / entry.placement)
            boxes = [placement_to_bbox(r, profile) for r in records]
            write_image(image, out / "images" / f"{stem}.png")
            write_annotations(
                boxes, f"{stem}.png", width, height, manifest.class_list,
                AnnotationFormat.JSON, out / "labels_json" / f"{stem}.json",
            )
            write_annotations(
                boxes, f"{stem}.png", width, height, manifest.class_list,
                AnnotationFormat.YOLO_TXT, out / "labels_yolo" / f"{stem}.txt",
            )
            return stem, len(boxes), ignored, None
        except Exception as exc:  # per-entry isolation
            return None, 0, 0, f"{entry.bitstream}: {exc}"

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(render, manifest.entries))
    else:
        results = [render(e) for e in manifest.entries]

    summary = BuildSummary()
    stems: list[str | None] = []
    for (stem, n_boxes, ignored, error), entry in zip(results, manifest.entries):
        stems.append(stem)
        if error is not None:
            summary.failures.append((entry.bitstream, error))
            continue
        summary.images_written += 1
        summary.boxes_written += n_boxes
        summary.ignored_trailing_words += ignored
    if summary.images_written == 0:
        raise DatasetError(f"all {len(manifest.entries)} entries failed: {summary.failures}")

    train_idx, test_idx = split_entries(
        len(manifest.entries), manifest.split_ratio, manifest.split_seed
    )
    train_lines = [f"images/{stems[i]}.png\n" for i in train_idx if stems[i] is not None]
    test_lines = [f"images/{stems[i]}.png\n" for i in test_idx if stems[i] is not None]
    summary.train_count = len(train_lines)
    summary.test_count = len(test_lines)
    atomic_write_text(out / "classes.txt", "".join(f"{c}\n" for c in manifest.class_list))
    atomic_write_text(out / "train.txt", "".join(train_lines))
    atomic_write_text(out / "test.txt", "".join(test_lines))
    return summary


# -- synthetic corpus --------------------------------------------------------


@dataclass
class ByteDistribution:
    """Per-byte sampling: each byte is nonzero with probability ``density``
    and then uniform in [value_low, value_high]."""

    density: float
    value_low: int
    value_high: int

    def validate(self) -> None:
        if not 0.0 < self.density <= 1.0:
            raise DatasetError(f"density {self.density} outside (0,1]")
        if not 1 <= self.value_low <= self.value_high <= 255:
            raise DatasetError(
                f"value range [{self.value_low},{self.value_high}] must sit inside [1,255]"
            )

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        values = rng.integers(self.value_low, self.value_high + 1, size, dtype=np.uint8)
        mask = rng.random(size) < self.density
        return np.where(mask, values, 0).astype(np.uint8)


@dataclass
class ClassSignature:
    class_label: str
    footprint_cols: tuple[int, int]  # inclusive range of widths, in grid columns
    footprint_rows: tuple[int, int]  # inclusive range of heights, in grid rows
    variants: tuple[ByteDistribution, ...]

    @property
    def constructions(self) -> int:
        return len(self.variants)

    def validate(self, profile: DeviceProfile) -> None:
        if not 1 <= self.constructions <= 2:
            raise DatasetError(
                f"{self.class_label}: one or two constructions allowed, got {self.constructions}"
            )
        for v in self.variants:
            v.validate()
        lo_c, hi_c = self.footprint_cols
        lo_r, hi_r = self.footprint_rows
        if not (1 <= lo_c <= hi_c and 1 <= lo_r <= hi_r):
            raise DatasetError(f"{self.class_label}: footprint ranges must be >= 1 and ordered")
        if hi_c > profile.grid_cols or hi_r > profile.grid_rows:
            raise DatasetError(
                f"{self.class_label}: footprint up to {hi_c}x{hi_r} exceeds "
                f"grid {profile.grid_cols}x{profile.grid_rows}"
            )


def default_signatures(labels: Sequence[str], profile: DeviceProfile) -> list[ClassSignature]:
    """Class-distinct signatures: widely separated occupancy/brightness tiers
    so each class has its own appearance, with a second construction that
    stays inside its class's tier. Footprints are medium rectangles scaled to
    the grid."""
    if not labels:
        raise DatasetError("need at least one class label")
    # (variant densities, value band); tiers chosen so density x mean(band)
    # never overlaps between classes
    tiers = [
        ((0.95, 0.85), (190, 255)),
        ((0.35, 0.30), (30, 70)),
        ((0.50, 0.45), (100, 140)),
        ((0.80, 0.72), (130, 170)),
        ((0.95, 0.85), (60, 95)),
        ((0.20, 0.17), (200, 255)),
        ((0.65, 0.58), (160, 200)),
        ((0.10, 0.08), (90, 130)),
    ]
    max_w = max(2, profile.grid_cols // 2)
    max_h = max(4, profile.grid_rows // 3)
    sigs = []
    for i, label in enumerate(labels):
        (d1, d2), (lo, hi) = tiers[i % len(tiers)]
        sigs.append(
            ClassSignature(
                class_label=label,
                footprint_cols=(max(1, max_w // 2), max_w),
                footprint_rows=(max(2, max_h // 2), max_h),
                variants=(ByteDistribution(d1, lo, hi), ByteDistribution(d2, lo, hi)),
            )
        )
    return sigs


@dataclass
class SynthSummary:
    images: int = 0
    blocks_placed: int = 0
    blocks_dropped: int = 0


def _rects_overlap(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> bool:
    return not (a[1] < b[0] or b[1] < a[0] or a[3] < b[2] or b[3] < a[2])


def _rect_fully_mapped(profile: DeviceProfile, rect: tuple[int, int, int, int]) -> bool:
    c0, c1, r0, r1 = rect
    a = profile.grid_rows
    for row in range(r0, r1 + 1):
        grid_row = a - 1 - row
        for col in range(c0, c1 + 1):
            if (grid_row, col) not in profile.grid_map:
                return False
    return True


def synth_dataset(
    profile: DeviceProfile,
    signatures: Sequence[ClassSignature],
    count: int,
    out_dir: str | Path,
    blocks_per_image: tuple[int, int] = (1, 3),
    seed: int = 0,
    background_density: float = 0.01,
    split_ratio: float = 0.8,
    fmt: ContainerFormat = ContainerFormat.SYNTH,
) -> tuple[DatasetManifest, SynthSummary]:
    """Generate ``count`` synthetic bitstream+placement pairs and a manifest."""
    if count < 1:
        raise DatasetError("count must be >= 1")
    lo_blocks, hi_blocks = blocks_per_image
    if not 1 <= lo_blocks <= hi_blocks:
        raise DatasetError(f"blocks_per_image range {blocks_per_image} must be ordered and >= 1")
    if not 0.0 <= background_density < 1.0:
        raise DatasetError(f"background_density {background_density} outside [0,1)")
    for sig in signatures:
        sig.validate(profile)
    labels = [s.class_label for s in signatures]
    if len(set(labels)) != len(labels):
        raise DatasetError("signature class labels must be unique")

    out = Path(out_dir)
    (out / "bitstreams").mkdir(parents=True, exist_ok=True)
    (out / "placements").mkdir(parents=True, exist_ok=True)
    save_profile(profile, out / "profile.json")

    fam = profile.family
    # Deterministic ordering of every slice position for background noise.
    all_slices = sorted(
        (grid_row, grid_col, s)
        for (grid_row, grid_col) in profile.grid_map
        for s in range(fam.slices_per_clb)
    )
    slice_lens: dict[tuple[int, int, int], int] = {}
    for grid_row, grid_col, s in all_slices:
        r, c, _ = profile.grid_map[(grid_row, grid_col)]
        kind = profile.config_rows[r][c].kind.slice_kind
        slice_lens[(grid_row, grid_col, s)] = fam.slice_payload_len(kind)

    structure = SplitMix64(seed)
    summary = SynthSummary()
    entries: list[ManifestEntry] = []
    ext = "bcv" if fmt is ContainerFormat.SYNTH else "bin"
    digits = max(5, len(str(count - 1)))

    for i in range(count):
        payload_rng = np.random.Generator(np.random.PCG64(structure.next_u64()))
        want = lo_blocks + structure.below(hi_blocks - lo_blocks + 1)
        rects: list[tuple[ClassSignature, int, tuple[int, int, int, int]]] = []
        placed_boxes: list[tuple[int, int, int, int]] = []
        for _ in range(want):
            placed = False
            for _attempt in range(40):
                sig = signatures[structure.below(len(signatures))]
                w = sig.footprint_cols[0] + structure.below(
                    sig.footprint_cols[1] - sig.footprint_cols[0] + 1
                )
                h = sig.footprint_rows[0] + structure.below(
                    sig.footprint_rows[1] - sig.footprint_rows[0] + 1
                )
                c0 = structure.below(profile.grid_cols - w + 1)
                r0 = structure.below(profile.grid_rows - h + 1)
                rect = (c0, c0 + w - 1, r0, r0 + h - 1)
                if any(_rects_overlap(rect, other) for other in placed_boxes):
                    continue
                if not _rect_fully_mapped(profile, rect):
                    continue
                variant = structure.below(sig.constructions)
                rects.append((sig, variant, rect))
                placed_boxes.append(rect)
                placed = True
                break
            if not placed:
                summary.blocks_dropped += 1

        payloads: dict[tuple[int, int, int], bytes] = {}
        covered: set[tuple[int, int, int]] = set()
        records: list[PlacementRecord] = []
        for sig, variant, (c0, c1, r0, r1) in rects:
            dist = sig.variants[variant]
            for row in range(r0, r1 + 1):
                grid_row = profile.grid_rows - 1 - row
                for col in range(c0, c1 + 1):
                    for s in range(fam.slices_per_clb):
                        key = (grid_row, col, s)
                        payloads[key] = dist.sample(payload_rng, slice_lens[key]).tobytes()
                        covered.add(key)
            records.append(
                PlacementRecord(
                    class_label=sig.class_label,
                    col_min=c0,
                    col_max=c1,
                    row_min=r0,
                    row_max=r1,
                    construction=CONSTRUCTION_NAMES[variant],
                )
            )
        summary.blocks_placed += len(rects)

        if background_density > 0:
            background = [key for key in all_slices if key not in covered]
            total = sum(slice_lens[key] for key in background)
            noise = ByteDistribution(background_density, 1, 255).sample(payload_rng, total) \
                if total else np.zeros(0, dtype=np.uint8)
            off = 0
            for key in background:
                length = slice_lens[key]
                chunk = noise[off : off + length]
                off += length
                if chunk.any():
                    payloads[key] = chunk.tobytes()

        stem = f"img_{i:0{digits}d}"
        raw = synthesize_container(profile, payloads, fill=0, fmt=fmt)
        (out / "bitstreams" / f"{stem}.{ext}").write_bytes(raw)
        write_placements(records, out / "placements" / f"{stem}.json")
        entries.append(
            ManifestEntry(f"bitstreams/{stem}.{ext}", f"placements/{stem}.json", fmt)
        )
        summary.images += 1

    manifest = DatasetManifest(
        profile_path="profile.json",
        class_list=labels,
        entries=entries,
        split_seed=seed,
        split_ratio=split_ratio,
    )
    save_manifest(manifest, out / "manifest.json")
    return manifest, summary
