#!/usr/bin/env python3
"""Regenerate the builtin profile JSON files under src/bitcanvas/profiles/.

The two family files carry format constants only (empty column layout). The
three shaped device profiles reproduce the published per-device figures:
grid dimensions, total CLB count where attainable, total FDRI frame count,
and declared bitstream length. Real column maps (which columns are BRAM/DSP/
IOB and where) are not public, so non-CLB columns here are synthetic filler:
28-frame columns sprinkled between CLB columns plus one remainder column per
row sized to land the frame total exactly.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from bitcanvas.device import (
    ColumnKind,
    ColumnSpec,
    FamilyParams,
    SliceKind,
    make_profile,
    profile_to_json,
    total_fdri_frames,
)

OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "bitcanvas" / "profiles"


def zynq7000_family() -> FamilyParams:
    return FamilyParams(
        frame_words=101,
        clbs_per_column=50,
        excluded_mid_words=1,
        clb_bytes_per_frame=8,
        frames_per_column={SliceKind.UNIFORM: 36},
        slices_per_clb=2,
        slice_blocks={SliceKind.UNIFORM: (6, 8)},
    )


def ultrascale_family() -> FamilyParams:
    return FamilyParams(
        frame_words=93,
        clbs_per_column=60,
        excluded_mid_words=3,
        clb_bytes_per_frame=6,
        frames_per_column={SliceKind.SLICEL: 29, SliceKind.SLICEM: 79},
        slices_per_clb=1,
        slice_blocks={SliceKind.SLICEL: (7, 9), SliceKind.SLICEM: (7, 23)},
    )


def build_row(
    family: FamilyParams,
    grid_columns: list[int],
    kind_of: dict[int, ColumnKind],
    bram_count: int,
    remainder_frames: int,
) -> list[ColumnSpec]:
    """One config row: CLB columns at the given grid positions, BRAM-style
    28-frame columns interleaved at even intervals, one remainder column at
    the row end."""
    row: list[ColumnSpec] = []
    n_clb = len(grid_columns)
    gap = max(1, n_clb // (bram_count + 1)) if bram_count else n_clb + 1
    placed_brams = 0
    for i, grid_col in enumerate(grid_columns):
        kind = kind_of[grid_col]
        row.append(ColumnSpec(kind, family.frames_for(kind.slice_kind), grid_column=grid_col))
        if placed_brams < bram_count and (i + 1) % gap == 0:
            row.append(ColumnSpec(ColumnKind.NON_CLB, 28))
            placed_brams += 1
    while placed_brams < bram_count:
        row.append(ColumnSpec(ColumnKind.NON_CLB, 28))
        placed_brams += 1
    if remainder_frames:
        row.append(ColumnSpec(ColumnKind.NON_CLB, remainder_frames))
    return row


def z7020():
    family = zynq7000_family()
    kind_of = {c: ColumnKind.CLB_UNIFORM for c in range(57)}
    rows = [
        build_row(family, list(range(38, 57)), kind_of, bram_count=4, remainder_frames=1442),
        build_row(family, list(range(57)), kind_of, bram_count=14, remainder_frames=1441),
        build_row(family, list(range(57)), kind_of, bram_count=14, remainder_frames=1441),
    ]
    return make_profile("z7020", family, rows, grid_cols=57, bitstream_bits=32_364_512), 10_008


def z7030():
    family = zynq7000_family()
    kind_of = {c: ColumnKind.CLB_UNIFORM for c in range(60)}
    rows = [
        build_row(family, list(range(44, 60)), kind_of, bram_count=4, remainder_frames=1592),
    ] + [
        build_row(family, list(range(60)), kind_of, bram_count=15, remainder_frames=1592)
        for _ in range(3)
    ]
    return make_profile("z7030", family, rows, grid_cols=60, bitstream_bits=47_839_328), 14_796


def zu9eg():
    family = ultrascale_family()
    # 46 SLICEL + 51 SLICEM columns: alternate M,L over 0..91, then 5 more M.
    kind_of = {}
    for c in range(97):
        if c >= 92:
            kind_of[c] = ColumnKind.CLB_M
        else:
            kind_of[c] = ColumnKind.CLB_M if c % 2 == 0 else ColumnKind.CLB_L
    rows = [
        build_row(family, list(range(97)), kind_of, bram_count=12, remainder_frames=4664)
        for _ in range(5)
    ]
    rows.append(
        build_row(family, list(range(11, 97)), kind_of, bram_count=12, remainder_frames=4664)
    )
    # Processing-system row: no CLB columns at all.
    rows.append(build_row(family, [], kind_of, bram_count=20, remainder_frames=9141))
    return make_profile("zu9eg", family, rows, grid_cols=97, bitstream_bits=212_086_240), 71_260


def family_only(name: str, family: FamilyParams):
    return make_profile(name, family, []), 0


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    builders = {
        "zynq7000-family": lambda: family_only("zynq7000-family", zynq7000_family()),
        "ultrascale-family": lambda: family_only("ultrascale-family", ultrascale_family()),
        "z7020": z7020,
        "z7030": z7030,
        "zu9eg": zu9eg,
    }
    for name, build in builders.items():
        profile, expected_frames = build()
        got = total_fdri_frames(profile)
        if got != expected_frames:
            raise SystemExit(f"{name}: frame total {got} != expected {expected_frames}")
        path = OUT_DIR / f"{name}.json"
        path.write_text(
            json.dumps(profile_to_json(profile), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        print(
            f"{name}: frames={got} clbs={profile.total_clbs()} "
            f"grid={profile.grid_rows}x{profile.grid_cols} -> {path}"
        )


if __name__ == "__main__":
    main()
