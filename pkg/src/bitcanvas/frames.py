"""Bitstream containers and the frame -> CLB -> slice byte mapping.

Two container formats are handled: a minimal synthetic container (used for
generated corpora and tests) and the industry binary layout (ASCII header
skipped by scanning for the sync word, then type-1/type-2 configuration
packets locating the frame-data payload).

Mapping recap: every successive n frames configure one column of q CLBs from
bottom to top. Within a frame, the centered excluded words are skipped and
the remaining bytes split into q equal chunks, one per CLB; each chunk splits
evenly again among the CLB's slices, left to right.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .device import DeviceProfile, SliceKind, first_frame_index, total_fdri_frames
from .errors import ContainerError, ProfileError


class ContainerFormat(str, Enum):
    SYNTH = "synth"
    XILINX_BIN = "xilinx"


SYNTH_MAGIC = b"BCV1"
SYNC_WORD = 0xAA995566

_FDRI_REG = 2
_FAR_REG = 1
_CMD_REG = 4
_CMD_DESYNC = 0x0000000D
_TYPE1 = 1
_TYPE2 = 2
_OP_WRITE = 2


@dataclass(frozen=True)
class FrameArray:
    """FDRI payload as an immutable run of fixed-size frames."""

    data: bytes
    frame_words: int

    def __post_init__(self) -> None:
        if self.frame_words <= 0:
            raise ContainerError("frame_words must be positive")
        if len(self.data) % self.frame_bytes:
            raise ContainerError(
                f"payload length {len(self.data)} is not a multiple of "
                f"the {self.frame_bytes}-byte frame size"
            )

    @property
    def frame_bytes(self) -> int:
        return 4 * self.frame_words

    def __len__(self) -> int:
        return len(self.data) // self.frame_bytes

    def frame(self, index: int) -> bytes:
        if not 0 <= index < len(self):
            raise IndexError(f"frame index {index} out of range [0,{len(self)})")
        fb = self.frame_bytes
        return self.data[index * fb : (index + 1) * fb]

    def as_array(self) -> np.ndarray:
        """(frame_count, frame_bytes) uint8 view; read-only."""
        arr = np.frombuffer(self.data, dtype=np.uint8).reshape(len(self), self.frame_bytes)
        arr.flags.writeable = False
        return arr


@dataclass
class SliceConfig:
    """Configuration bytes of one slice, addressed by grid position."""

    grid_row: int
    grid_col: int
    slice_index: int
    kind: SliceKind
    payload: bytes


def _swap_words(buf: bytes) -> bytes:
    arr = np.frombuffer(buf, dtype=np.uint8).reshape(-1, 4)
    return arr[:, ::-1].tobytes()


# -- parsing ---------------------------------------------------------------


def parse_container(
    raw: bytes, profile: DeviceProfile, fmt: ContainerFormat = ContainerFormat.SYNTH
) -> tuple[FrameArray, int]:
    """Extract the frame payload; returns (frames, ignored trailing word count)."""
    expected_frames = total_fdri_frames(profile)
    m = profile.family.frame_words
    if fmt is ContainerFormat.SYNTH:
        payload, declared_words = _parse_synth(raw, m)
    elif fmt is ContainerFormat.XILINX_BIN:
        payload, declared_words = _parse_xilinx(raw)
    else:
        raise ContainerError(f"unknown container format {fmt!r}")

    needed_words = expected_frames * m
    if declared_words < needed_words:
        raise ContainerError(
            f"frame data holds {declared_words} words, profile "
            f"{profile.name!r} requires {needed_words}"
        )
    ignored = declared_words - needed_words
    payload = payload[: needed_words * 4]
    if profile.family.swap_word_bytes:
        payload = _swap_words(payload)
    return FrameArray(payload, m), ignored


def _parse_synth(raw: bytes, frame_words: int) -> tuple[bytes, int]:
    if len(raw) < 4 or raw[:4] != SYNTH_MAGIC:
        raise ContainerError(f"missing container magic {SYNTH_MAGIC!r}")
    off = 4
    try:
        (name_len,) = struct.unpack_from(">H", raw, off)
        off += 2
        off += name_len  # profile name, informational
        frame_count, m = struct.unpack_from(">IH", raw, off)
        off += 6
    except struct.error as exc:
        raise ContainerError(f"truncated container header: {exc}") from exc
    if m != frame_words:
        raise ContainerError(f"container frame size {m} words, profile expects {frame_words}")
    payload_len = frame_count * 4 * m
    if len(raw) < off + payload_len + 4:
        raise ContainerError(
            f"truncated container: need {off + payload_len + 4} bytes, have {len(raw)}"
        )
    payload = raw[off : off + payload_len]
    (crc_stored,) = struct.unpack_from(">I", raw, off + payload_len)
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    if crc != crc_stored:
        raise ContainerError(f"payload CRC mismatch: stored {crc_stored:#010x}, computed {crc:#010x}")
    return payload, frame_count * m


def _parse_xilinx(raw: bytes) -> tuple[bytes, int]:
    sync = struct.pack(">I", SYNC_WORD)
    pos = raw.find(sync)
    if pos < 0:
        raise ContainerError("missing sync word")
    off = pos + 4
    current_reg = None
    while off + 4 <= len(raw):
        (hdr,) = struct.unpack_from(">I", raw, off)
        off += 4
        ptype = hdr >> 29
        if ptype == _TYPE1:
            op = (hdr >> 27) & 0x3
            reg = (hdr >> 13) & 0x3FFF
            count = hdr & 0x7FF
            if op == _OP_WRITE:
                current_reg = reg
                if reg == _FDRI_REG and count > 0:
                    return _take_words(raw, off, count)
                off += 4 * count
            else:
                current_reg = reg if op else current_reg
                off += 4 * count
        elif ptype == _TYPE2:
            op = (hdr >> 27) & 0x3
            count = hdr & 0x07FFFFFF
            if op == _OP_WRITE and current_reg == _FDRI_REG:
                return _take_words(raw, off, count)
            off += 4 * count
        elif hdr in (0x20000000, 0xFFFFFFFF, 0x00000000):
            continue  # NOP / pad words
        else:
            raise ContainerError(f"unrecognized packet header {hdr:#010x} at offset {off - 4}")
    raise ContainerError("no frame-data write packet found after sync word")


def _take_words(raw: bytes, off: int, count: int) -> tuple[bytes, int]:
    end = off + 4 * count
    if end > len(raw):
        raise ContainerError(
            f"truncated file: frame-data packet declares {count} words, "
            f"only {(len(raw) - off) // 4} available"
        )
    return raw[off:end], count


# -- extraction ------------------------------------------------------------


def extract_clb_bytes(
    frames: FrameArray,
    profile: DeviceProfile,
    config_row: int,
    column_id: int,
    clb_row: int,
) -> bytes:
    """All configuration bytes of one CLB, concatenated in frame order.

    ``clb_row`` 0 is the bottom of the column. Per frame the CLB owns the
    clb_row-th chunk of the reduced byte stream (frame bytes minus the
    excluded middle span).
    """
    fam = profile.family
    col = profile.column_spec(config_row, column_id)
    if not col.kind.is_clb:
        raise ProfileError(f"column ({config_row},{column_id}) is not a CLB column")
    if not 0 <= clb_row < fam.clbs_per_column:
        raise ProfileError(f"clb_row {clb_row} outside [0,{fam.clbs_per_column})")
    first = first_frame_index(profile, config_row, column_id)
    n = col.frame_count
    if len(frames) < first + n:
        raise ContainerError(
            f"frame array has {len(frames)} frames; column needs [{first},{first + n})"
        )
    ex0, ex1 = fam.excluded_span
    chunk = fam.clb_bytes_per_frame
    lo = clb_row * chunk
    out = bytearray(chunk * n)
    for i in range(n):
        frame = frames.frame(first + i)
        reduced = frame[:ex0] + frame[ex1:]
        out[i * chunk : (i + 1) * chunk] = reduced[lo : lo + chunk]
    return bytes(out)


def extract_slice_bytes(
    clb_bytes: bytes, profile: DeviceProfile, kind: SliceKind, slice_index: int
) -> bytes:
    """One slice's share of a CLB's bytes (slice 0 = leftmost).

    Each per-frame chunk of ``clb_bytes_per_frame`` bytes splits evenly among
    the CLB's slices; identity when the family has one slice per CLB.
    """
    fam = profile.family
    slices = fam.slices_per_clb
    if not 0 <= slice_index < slices:
        raise ProfileError(f"slice_index {slice_index} outside [0,{slices})")
    chunk = fam.clb_bytes_per_frame
    n = fam.frames_for(kind)
    if len(clb_bytes) != chunk * n:
        raise ContainerError(
            f"CLB byte string has length {len(clb_bytes)}, expected {chunk * n}"
        )
    if slices == 1:
        return bytes(clb_bytes)
    per = fam.slice_bytes_per_frame()
    arr = np.frombuffer(clb_bytes, dtype=np.uint8).reshape(n, slices, per)
    return arr[:, slice_index, :].tobytes()


def read_slice(
    frames: FrameArray, profile: DeviceProfile, grid_row: int, grid_col: int, slice_index: int
) -> SliceConfig:
    """Locate a grid cell's CLB and pull one slice's configuration bytes."""
    located = profile.locate(grid_row, grid_col)
    if located is None:
        raise ProfileError(f"grid cell ({grid_row},{grid_col}) has no CLB")
    r, c, clb_row = located
    kind = profile.config_rows[r][c].kind.slice_kind
    clb = extract_clb_bytes(frames, profile, r, c, clb_row)
    payload = extract_slice_bytes(clb, profile, kind, slice_index)
    return SliceConfig(grid_row, grid_col, slice_index, kind, payload)


# -- synthesis ---------------------------------------------------------------


def synthesize_container(
    profile: DeviceProfile,
    slice_payloads: Mapping[tuple[int, int, int], bytes],
    fill: int = 0,
    fmt: ContainerFormat = ContainerFormat.SYNTH,
) -> bytes:
    """Build a container whose parse/extract path recovers every payload.

    Keys are (grid_row, grid_col, slice_index); unspecified slices take the
    ``fill`` byte; excluded middle words and non-CLB frames stay zero.
    """
    if not 0 <= fill <= 255:
        raise ContainerError(f"fill byte {fill} outside [0,255]")
    fam = profile.family
    frame_count = total_fdri_frames(profile)
    frames = np.zeros((frame_count, fam.frame_bytes), dtype=np.uint8)
    ex0, _ = fam.excluded_span
    per = fam.slice_bytes_per_frame()

    if fill:
        fill_payloads: dict[tuple[int, int, int], bytes] = {}
        for (gr, gc), (r, c, _) in profile.grid_map.items():
            kind = profile.config_rows[r][c].kind.slice_kind
            blank = bytes([fill]) * fam.slice_payload_len(kind)
            for s in range(fam.slices_per_clb):
                fill_payloads[(gr, gc, s)] = blank
        fill_payloads.update(slice_payloads)
        payloads: Mapping[tuple[int, int, int], bytes] = fill_payloads
    else:
        payloads = slice_payloads

    seen: set[tuple[int, int, int]] = set()
    for key, payload in payloads.items():
        grid_row, grid_col, slice_index = key
        if key in seen:
            raise ContainerError(f"duplicate payload for position {key}")
        seen.add(key)
        located = profile.locate(grid_row, grid_col)
        if located is None:
            raise ContainerError(f"grid cell ({grid_row},{grid_col}) has no CLB")
        r, c, clb_row = located
        col = profile.config_rows[r][c]
        kind = col.kind.slice_kind
        expected_len = fam.slice_payload_len(kind)
        if len(payload) != expected_len:
            raise ContainerError(
                f"payload for {key} has {len(payload)} bytes, "
                f"{kind.value!r} slices take exactly {expected_len}"
            )
        if not 0 <= slice_index < fam.slices_per_clb:
            raise ContainerError(f"slice_index {slice_index} outside [0,{fam.slices_per_clb})")
        first = first_frame_index(profile, r, c)
        n = col.frame_count
        base = clb_row * fam.clb_bytes_per_frame + slice_index * per
        chunks = np.frombuffer(bytes(payload), dtype=np.uint8).reshape(n, per)
        # Reduced-stream index i sits at raw index i before the excluded
        # span and i + 4l after it; a chunk straddling the span writes two runs.
        shift = 4 * fam.excluded_mid_words
        for red_lo, red_hi in _split_at(base, base + per, ex0):
            raw_lo = red_lo if red_lo < ex0 else red_lo + shift
            frames[first : first + n, raw_lo : raw_lo + (red_hi - red_lo)] = chunks[
                :, red_lo - base : red_hi - base
            ]

    payload_bytes = frames.tobytes()
    if fam.swap_word_bytes:
        payload_bytes = _swap_words(payload_bytes)
    if fmt is ContainerFormat.SYNTH:
        return _emit_synth(profile.name, frame_count, fam.frame_words, payload_bytes)
    if fmt is ContainerFormat.XILINX_BIN:
        return _emit_xilinx(frame_count * fam.frame_words, payload_bytes)
    raise ContainerError(f"unknown container format {fmt!r}")


def _split_at(lo: int, hi: int, cut: int) -> list[tuple[int, int]]:
    if lo < cut < hi:
        return [(lo, cut), (cut, hi)]
    return [(lo, hi)]


def _emit_synth(name: str, frame_count: int, frame_words: int, payload: bytes) -> bytes:
    encoded = name.encode("utf-8")
    head = SYNTH_MAGIC + struct.pack(">H", len(encoded)) + encoded
    head += struct.pack(">IH", frame_count, frame_words)
    return head + payload + struct.pack(">I", zlib.crc32(payload) & 0xFFFFFFFF)


def _type1(reg: int, count: int) -> int:
    return (_TYPE1 << 29) | (_OP_WRITE << 27) | (reg << 13) | count


def _emit_xilinx(word_count: int, payload: bytes) -> bytes:
    out = bytearray(b"\xff" * 16)  # pad bytes ahead of sync, as in real files
    out += struct.pack(">I", SYNC_WORD)
    out += struct.pack(">I", 0x20000000)  # NOP
    out += struct.pack(">II", _type1(_FAR_REG, 1), 0)
    out += struct.pack(">I", _type1(_FDRI_REG, 0))
    out += struct.pack(">I", (_TYPE2 << 29) | (_OP_WRITE << 27) | word_count)
    out += payload
    out += struct.pack(">II", _type1(_CMD_REG, 1), _CMD_DESYNC)
    out += struct.pack(">I", 0x20000000)
    return bytes(out)
