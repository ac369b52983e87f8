"""Device profiles: frame geometry and column layout.

A profile captures everything the downstream codecs need to locate a CLB's
configuration bytes inside the frame payload: per-family frame geometry
(words per frame, excluded middle words, bytes per CLB per frame, frames per
CLB column) and the per-device column layout (which columns carry CLBs, how
many frames each non-CLB column consumes, and where each CLB column sits in
the device grid).

Grid convention: grid row 0 is the TOP of the device image; config row 0 is
the topmost clock-region row; within a column, CLB row 0 is the BOTTOM of
that clock region (frames fill columns bottom to top).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

from .errors import ProfileError
from .rng import SplitMix64

NON_CLB_DEFAULT_FRAMES = 28  # e.g. a BRAM column


class SliceKind(str, Enum):
    UNIFORM = "uniform"
    SLICEL = "L"
    SLICEM = "M"


class ColumnKind(str, Enum):
    CLB_UNIFORM = "clb"
    CLB_L = "clb_l"
    CLB_M = "clb_m"
    NON_CLB = "other"

    @property
    def is_clb(self) -> bool:
        return self is not ColumnKind.NON_CLB

    @property
    def slice_kind(self) -> SliceKind:
        try:
            return _COLUMN_SLICE_KIND[self]
        except KeyError:
            raise ProfileError(f"column kind {self.value!r} has no slice kind") from None


_COLUMN_SLICE_KIND = {
    ColumnKind.CLB_UNIFORM: SliceKind.UNIFORM,
    ColumnKind.CLB_L: SliceKind.SLICEL,
    ColumnKind.CLB_M: SliceKind.SLICEM,
}


@dataclass
class FamilyParams:
    """Per-family bitstream format constants.

    ``clb_bytes_per_frame`` is the canonical unit (the per-CLB word count may
    be fractional, the byte count never is).
    """

    frame_words: int
    clbs_per_column: int
    excluded_mid_words: int
    clb_bytes_per_frame: int
    frames_per_column: dict[SliceKind, int]
    slices_per_clb: int
    slice_blocks: dict[SliceKind, tuple[int, int]]
    swap_word_bytes: bool = False

    @property
    def frame_bytes(self) -> int:
        return 4 * self.frame_words

    @property
    def excluded_span(self) -> tuple[int, int]:
        """Byte span [start, stop) of the excluded middle words within a frame."""
        start = 2 * (self.frame_words - self.excluded_mid_words)
        return start, start + 4 * self.excluded_mid_words

    @property
    def reduced_frame_bytes(self) -> int:
        return 4 * (self.frame_words - self.excluded_mid_words)

    @property
    def slice_kinds(self) -> tuple[SliceKind, ...]:
        return tuple(self.frames_per_column)

    @property
    def block_height(self) -> int:
        return next(iter(self.slice_blocks.values()))[0]

    def frames_for(self, kind: SliceKind) -> int:
        try:
            return self.frames_per_column[kind]
        except KeyError:
            raise ProfileError(f"family has no frame count for slice kind {kind.value!r}") from None

    def block_for(self, kind: SliceKind) -> tuple[int, int]:
        try:
            return self.slice_blocks[kind]
        except KeyError:
            raise ProfileError(f"family has no pixel block for slice kind {kind.value!r}") from None

    def slice_bytes_per_frame(self) -> int:
        if self.clb_bytes_per_frame % self.slices_per_clb:
            raise ProfileError(
                "slice split invariant: clb_bytes_per_frame "
                f"{self.clb_bytes_per_frame} not divisible by slices_per_clb {self.slices_per_clb}"
            )
        return self.clb_bytes_per_frame // self.slices_per_clb

    def slice_payload_len(self, kind: SliceKind) -> int:
        return self.slice_bytes_per_frame() * self.frames_for(kind)

    def validate(self) -> None:
        counts = {
            "frame_words": self.frame_words,
            "clbs_per_column": self.clbs_per_column,
            "clb_bytes_per_frame": self.clb_bytes_per_frame,
            "slices_per_clb": self.slices_per_clb,
        }
        for name, value in counts.items():
            if value <= 0:
                raise ProfileError(f"count invariant: {name} must be > 0, got {value}")
        if self.excluded_mid_words < 0:
            raise ProfileError("count invariant: excluded_mid_words must be >= 0")
        if self.excluded_mid_words >= self.frame_words:
            raise ProfileError(
                "excluded-span invariant: excluded_mid_words "
                f"{self.excluded_mid_words} must be < frame_words {self.frame_words}"
            )
        reduced = self.reduced_frame_bytes
        budget = self.clbs_per_column * self.clb_bytes_per_frame
        if reduced != budget:
            raise ProfileError(
                "byte-budget invariant: (frame_words - excluded_mid_words) * 4 = "
                f"{reduced} != clbs_per_column * clb_bytes_per_frame = {budget}"
            )
        if not self.frames_per_column:
            raise ProfileError("family must declare at least one frames-per-column entry")
        if set(self.frames_per_column) != set(self.slice_blocks):
            raise ProfileError(
                "slice kinds of frames_per_column and slice_blocks must match: "
                f"{sorted(k.value for k in self.frames_per_column)} vs "
                f"{sorted(k.value for k in self.slice_blocks)}"
            )
        if SliceKind.UNIFORM in self.frames_per_column and len(self.frames_per_column) > 1:
            raise ProfileError("uniform slice kind cannot be mixed with L/M kinds")
        for kind, n in self.frames_per_column.items():
            if n <= 0:
                raise ProfileError(f"count invariant: frames_per_column[{kind.value}] must be > 0")
        heights = {h for h, _ in self.slice_blocks.values()}
        if len(heights) != 1:
            raise ProfileError(f"pixel blocks must share one height, got {sorted(heights)}")
        for kind, (h, w) in self.slice_blocks.items():
            if h <= 0 or w <= 0:
                raise ProfileError(f"pixel block for {kind.value!r} must be positive, got {(h, w)}")
        self.slice_bytes_per_frame()


@dataclass
class ColumnSpec:
    kind: ColumnKind
    frame_count: int
    grid_column: int | None = None


@dataclass
class DeviceProfile:
    name: str
    family: FamilyParams
    config_rows: list[list[ColumnSpec]]
    grid_rows: int
    grid_cols: int
    grid_map: dict[tuple[int, int], tuple[int, int, int]]
    bitstream_bits: int | None = None
    # derived, filled by validate(); excluded from equality
    _column_first_frame: dict[tuple[int, int], int] = field(
        default_factory=dict, repr=False, compare=False
    )
    _grid_col_kinds: list[SliceKind] = field(default_factory=list, repr=False, compare=False)

    def validate(self) -> None:
        self.family.validate()
        q = self.family.clbs_per_column

        expected_rows = len(self.config_rows) * q
        if self.grid_rows != expected_rows:
            raise ProfileError(
                "grid-height invariant: grid_rows "
                f"{self.grid_rows} != config rows {len(self.config_rows)} x clbs_per_column {q}"
            )

        self._column_first_frame = {}
        running = 0
        for r, row in enumerate(self.config_rows):
            for c, col in enumerate(row):
                if col.frame_count <= 0:
                    raise ProfileError(
                        f"count invariant: column ({r},{c}) frame_count must be > 0"
                    )
                if col.kind.is_clb:
                    expected = self.family.frames_for(col.kind.slice_kind)
                    if col.frame_count != expected:
                        raise ProfileError(
                            f"column-frames invariant: CLB column ({r},{c}) of kind "
                            f"{col.kind.value!r} has frame_count {col.frame_count}, family requires {expected}"
                        )
                    if col.grid_column is None:
                        raise ProfileError(f"CLB column ({r},{c}) must carry a grid column")
                    if not 0 <= col.grid_column < self.grid_cols:
                        raise ProfileError(
                            f"grid-bounds invariant: column ({r},{c}) grid_column "
                            f"{col.grid_column} outside [0,{self.grid_cols})"
                        )
                elif col.grid_column is not None:
                    raise ProfileError(f"non-CLB column ({r},{c}) must not carry a grid column")
                self._column_first_frame[(r, c)] = running
                running += col.frame_count

        # Rebuildable from config_rows; trust but verify the stored grid_map.
        expected_map = _build_grid_map(self.config_rows, q)
        if self.grid_map != expected_map:
            raise ProfileError("grid-map invariant: grid_map inconsistent with column layout")
        for (gr, gc) in self.grid_map:
            if not (0 <= gr < self.grid_rows and 0 <= gc < self.grid_cols):
                raise ProfileError(f"grid-bounds invariant: mapped cell ({gr},{gc}) outside grid")

        kinds: list[SliceKind | None] = [None] * self.grid_cols
        for row in self.config_rows:
            for col in row:
                if not col.kind.is_clb:
                    continue
                kind = col.kind.slice_kind
                seen = kinds[col.grid_column]
                if seen is None:
                    kinds[col.grid_column] = kind
                elif seen is not kind:
                    raise ProfileError(
                        f"column-kind invariant: grid column {col.grid_column} mapped as "
                        f"both {seen.value!r} and {kind.value!r}"
                    )
        missing = [i for i, k in enumerate(kinds) if k is None]
        if missing:
            raise ProfileError(
                f"grid-width invariant: grid columns {missing} have no CLB mapping, width undefined"
            )
        self._grid_col_kinds = [k for k in kinds if k is not None]

        if self.bitstream_bits is not None and self.bitstream_bits <= 0:
            raise ProfileError("count invariant: bitstream_bits must be > 0 when present")

    # -- lookups ---------------------------------------------------------

    def column_spec(self, config_row: int, column_id: int) -> ColumnSpec:
        if not 0 <= config_row < len(self.config_rows):
            raise ProfileError(f"config_row {config_row} out of range")
        row = self.config_rows[config_row]
        if not 0 <= column_id < len(row):
            raise ProfileError(f"column_id {column_id} out of range for config row {config_row}")
        return row[column_id]

    def locate(self, grid_row: int, grid_col: int) -> tuple[int, int, int] | None:
        """(config_row, column_id, clb_row) for a grid cell, or None if unmapped."""
        if not (0 <= grid_row < self.grid_rows and 0 <= grid_col < self.grid_cols):
            raise ProfileError(f"grid cell ({grid_row},{grid_col}) outside grid")
        return self.grid_map.get((grid_row, grid_col))

    def grid_col_kind(self, grid_col: int) -> SliceKind:
        return self._grid_col_kinds[grid_col]

    def total_clbs(self) -> int:
        return len(self.grid_map)


def _build_grid_map(
    config_rows: list[list[ColumnSpec]], clbs_per_column: int
) -> dict[tuple[int, int], tuple[int, int, int]]:
    grid_map: dict[tuple[int, int], tuple[int, int, int]] = {}
    for r, row in enumerate(config_rows):
        for c, col in enumerate(row):
            if not col.kind.is_clb or col.grid_column is None:
                continue
            for clb_row in range(clbs_per_column):
                grid_row = r * clbs_per_column + (clbs_per_column - 1 - clb_row)
                cell = (grid_row, col.grid_column)
                if cell in grid_map:
                    raise ProfileError(f"grid-map invariant: cell {cell} mapped twice")
                grid_map[cell] = (r, c, clb_row)
    return grid_map


def make_profile(
    name: str,
    family: FamilyParams,
    config_rows: list[list[ColumnSpec]],
    grid_cols: int | None = None,
    bitstream_bits: int | None = None,
) -> DeviceProfile:
    """Assemble and validate a profile; grid width defaults to the widest row."""
    positions = [c.grid_column for row in config_rows for c in row if c.kind.is_clb]
    if grid_cols is None:
        grid_cols = max(positions, default=-1) + 1
    grid_map = _build_grid_map(config_rows, family.clbs_per_column)
    profile = DeviceProfile(
        name=name,
        family=family,
        config_rows=config_rows,
        grid_rows=len(config_rows) * family.clbs_per_column,
        grid_cols=grid_cols,
        grid_map=grid_map,
        bitstream_bits=bitstream_bits,
    )
    profile.validate()
    return profile


# -- spec operations -----------------------------------------------------


def first_frame_index(profile: DeviceProfile, config_row: int, column_id: int) -> int:
    """Frame index (within the FDRI payload) of a CLB column's first frame."""
    col = profile.column_spec(config_row, column_id)
    if not col.kind.is_clb:
        raise ProfileError(
            f"column ({config_row},{column_id}) is {col.kind.value!r}, not a CLB column"
        )
    return profile._column_first_frame[(config_row, column_id)]


def total_fdri_frames(profile: DeviceProfile) -> int:
    return sum(col.frame_count for row in profile.config_rows for col in row)


def synthetic_profile(
    family: FamilyParams,
    clock_region_rows: int,
    clb_columns_per_row: int,
    non_clb_columns_per_row: int = 0,
    seed: int = 0,
) -> DeviceProfile:
    """Deterministic stand-in layout for devices whose real column maps are unpublished.

    Non-CLB columns (28 frames each) are interleaved pseudo-randomly per row;
    CLB columns keep their left-to-right order and occupy grid columns 0..b-1.
    Families with L/M kinds alternate L, M, L, ... by grid column.
    """
    if clock_region_rows < 1 or clb_columns_per_row < 1:
        raise ProfileError("clock_region_rows and clb_columns_per_row must be >= 1")
    if non_clb_columns_per_row < 0:
        raise ProfileError("non_clb_columns_per_row must be >= 0")
    family.validate()

    uniform = SliceKind.UNIFORM in family.frames_per_column
    rng = SplitMix64(seed)
    config_rows: list[list[ColumnSpec]] = []
    for _ in range(clock_region_rows):
        slots = [0] * clb_columns_per_row + [1] * non_clb_columns_per_row
        rng.shuffle(slots)
        row: list[ColumnSpec] = []
        next_grid_col = 0
        for slot in slots:
            if slot:
                row.append(ColumnSpec(ColumnKind.NON_CLB, NON_CLB_DEFAULT_FRAMES))
            else:
                if uniform:
                    kind = ColumnKind.CLB_UNIFORM
                else:
                    kind = ColumnKind.CLB_L if next_grid_col % 2 == 0 else ColumnKind.CLB_M
                row.append(
                    ColumnSpec(
                        kind,
                        family.frames_for(kind.slice_kind),
                        grid_column=next_grid_col,
                    )
                )
                next_grid_col += 1
        config_rows.append(row)

    name = (
        f"synthetic-r{clock_region_rows}c{clb_columns_per_row}"
        f"o{non_clb_columns_per_row}s{seed}"
    )
    return make_profile(name, family, config_rows)


# -- JSON (de)serialization ----------------------------------------------

_FAMILY_KEYS = {
    "frame_words",
    "clbs_per_column",
    "excluded_mid_words",
    "clb_bytes_per_frame",
    "n",
    "slices_per_clb",
    "slice_pixel_block",
    "swap_word_bytes",
}
_PROFILE_KEYS = {"name", "family", "rows", "grid", "bitstream_bits"}
_GRID_KEYS = {"cols", "column_positions"}
_COLUMN_KEYS = {"kind", "frames"}


def _require_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProfileError(f"{where}: expected an integer, got {value!r}")
    return value


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ProfileError(f"{where}: unknown keys {sorted(unknown)}")


def _kind_map_from_json(value, where: str, leaf) -> dict[SliceKind, object]:
    if isinstance(value, dict):
        _reject_unknown(value, {"L", "M"}, where)
        if set(value) != {"L", "M"}:
            raise ProfileError(f"{where}: per-kind map must have exactly keys L and M")
        return {SliceKind.SLICEL: leaf(value["L"], f"{where}.L"),
                SliceKind.SLICEM: leaf(value["M"], f"{where}.M")}
    return {SliceKind.UNIFORM: leaf(value, where)}


def _block_from_json(value, where: str) -> tuple[int, int]:
    if not isinstance(value, list) or len(value) != 2:
        raise ProfileError(f"{where}: expected [height, width]")
    return _require_int(value[0], f"{where}[0]"), _require_int(value[1], f"{where}[1]")


def family_from_json(obj: dict, where: str = "family") -> FamilyParams:
    if not isinstance(obj, dict):
        raise ProfileError(f"{where}: expected an object")
    _reject_unknown(obj, _FAMILY_KEYS, where)
    for key in _FAMILY_KEYS - {"swap_word_bytes"}:
        if key not in obj:
            raise ProfileError(f"{where}: missing key {key!r}")
    swap = obj.get("swap_word_bytes", False)
    if not isinstance(swap, bool):
        raise ProfileError(f"{where}.swap_word_bytes: expected a boolean")
    family = FamilyParams(
        frame_words=_require_int(obj["frame_words"], f"{where}.frame_words"),
        clbs_per_column=_require_int(obj["clbs_per_column"], f"{where}.clbs_per_column"),
        excluded_mid_words=_require_int(obj["excluded_mid_words"], f"{where}.excluded_mid_words"),
        clb_bytes_per_frame=_require_int(obj["clb_bytes_per_frame"], f"{where}.clb_bytes_per_frame"),
        frames_per_column=_kind_map_from_json(obj["n"], f"{where}.n", _require_int),
        slices_per_clb=_require_int(obj["slices_per_clb"], f"{where}.slices_per_clb"),
        slice_blocks=_kind_map_from_json(
            obj["slice_pixel_block"], f"{where}.slice_pixel_block", _block_from_json
        ),
        swap_word_bytes=swap,
    )
    family.validate()
    return family


def family_to_json(family: FamilyParams) -> dict:
    if set(family.frames_per_column) == {SliceKind.UNIFORM}:
        n_json: object = family.frames_per_column[SliceKind.UNIFORM]
        block_json: object = list(family.slice_blocks[SliceKind.UNIFORM])
    else:
        n_json = {k.value: v for k, v in family.frames_per_column.items()}
        block_json = {k.value: list(v) for k, v in family.slice_blocks.items()}
    out = {
        "frame_words": family.frame_words,
        "clbs_per_column": family.clbs_per_column,
        "excluded_mid_words": family.excluded_mid_words,
        "clb_bytes_per_frame": family.clb_bytes_per_frame,
        "n": n_json,
        "slices_per_clb": family.slices_per_clb,
        "slice_pixel_block": block_json,
    }
    if family.swap_word_bytes:
        out["swap_word_bytes"] = True
    return out


_KIND_FROM_JSON = {k.value: k for k in ColumnKind}


def profile_from_json(obj: dict) -> DeviceProfile:
    if not isinstance(obj, dict):
        raise ProfileError("profile: expected a JSON object")
    _reject_unknown(obj, _PROFILE_KEYS, "profile")
    for key in ("name", "family", "rows"):
        if key not in obj:
            raise ProfileError(f"profile: missing key {key!r}")
    if not isinstance(obj["name"], str):
        raise ProfileError("profile.name: expected a string")
    family = family_from_json(obj["family"])

    rows_json = obj["rows"]
    if not isinstance(rows_json, list):
        raise ProfileError("profile.rows: expected an array of arrays")

    grid_json = obj.get("grid", {})
    if not isinstance(grid_json, dict):
        raise ProfileError("profile.grid: expected an object")
    _reject_unknown(grid_json, _GRID_KEYS, "profile.grid")
    positions_json = grid_json.get("column_positions")
    if positions_json is not None:
        if not isinstance(positions_json, list) or len(positions_json) != len(rows_json):
            raise ProfileError(
                "profile.grid.column_positions: expected one position list per row"
            )

    config_rows: list[list[ColumnSpec]] = []
    for r, row_json in enumerate(rows_json):
        if not isinstance(row_json, list):
            raise ProfileError(f"profile.rows[{r}]: expected an array")
        row: list[ColumnSpec] = []
        clb_seen = 0
        row_positions = positions_json[r] if positions_json is not None else None
        for c, col_json in enumerate(row_json):
            where = f"profile.rows[{r}][{c}]"
            if not isinstance(col_json, dict):
                raise ProfileError(f"{where}: expected an object")
            _reject_unknown(col_json, _COLUMN_KEYS, where)
            kind_name = col_json.get("kind")
            if kind_name not in _KIND_FROM_JSON:
                raise ProfileError(f"{where}.kind: expected one of {sorted(_KIND_FROM_JSON)}")
            kind = _KIND_FROM_JSON[kind_name]
            frames = _require_int(col_json.get("frames"), f"{where}.frames")
            grid_column = None
            if kind.is_clb:
                if row_positions is not None:
                    if clb_seen >= len(row_positions):
                        raise ProfileError(
                            f"profile.grid.column_positions[{r}]: fewer entries than CLB columns"
                        )
                    grid_column = _require_int(
                        row_positions[clb_seen], f"profile.grid.column_positions[{r}][{clb_seen}]"
                    )
                else:
                    grid_column = clb_seen
                clb_seen += 1
            row.append(ColumnSpec(kind, frames, grid_column))
        if row_positions is not None and clb_seen != len(row_positions):
            raise ProfileError(
                f"profile.grid.column_positions[{r}]: more entries than CLB columns"
            )
        config_rows.append(row)

    grid_cols = None
    if "cols" in grid_json:
        grid_cols = _require_int(grid_json["cols"], "profile.grid.cols")
    bits = None
    if "bitstream_bits" in obj:
        bits = _require_int(obj["bitstream_bits"], "profile.bitstream_bits")
    return make_profile(obj["name"], family, config_rows, grid_cols=grid_cols, bitstream_bits=bits)


def profile_to_json(profile: DeviceProfile) -> dict:
    rows = [
        [{"kind": col.kind.value, "frames": col.frame_count} for col in row]
        for row in profile.config_rows
    ]
    positions = [
        [col.grid_column for col in row if col.kind.is_clb] for row in profile.config_rows
    ]
    out: dict = {
        "name": profile.name,
        "family": family_to_json(profile.family),
        "rows": rows,
        "grid": {"cols": profile.grid_cols, "column_positions": positions},
    }
    if profile.bitstream_bits is not None:
        out["bitstream_bits"] = profile.bitstream_bits
    return out


def load_profile(path: str | Path) -> DeviceProfile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ProfileError(f"cannot read profile {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"profile {path} is not valid JSON: {exc}") from exc
    return profile_from_json(obj)


def save_profile(profile: DeviceProfile, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(profile_to_json(profile), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


BUILTIN_PROFILES = (
    "zynq7000-family",
    "ultrascale-family",
    "z7020",
    "z7030",
    "zu9eg",
)


def builtin_profile_path(name: str) -> Path:
    if name not in BUILTIN_PROFILES:
        raise ProfileError(f"no builtin profile {name!r}; choose from {BUILTIN_PROFILES}")
    return Path(str(resources.files("bitcanvas").joinpath("profiles", f"{name}.json")))


def load_builtin(name: str) -> DeviceProfile:
    return load_profile(builtin_profile_path(name))


def resolve_profile(ref: str | Path) -> DeviceProfile:
    """Load a profile from a path, falling back to builtin names."""
    p = Path(ref)
    if p.exists():
        return load_profile(p)
    if str(ref) in BUILTIN_PROFILES:
        return load_builtin(str(ref))
    raise ProfileError(f"profile {ref!r} is neither a file nor a builtin name")
