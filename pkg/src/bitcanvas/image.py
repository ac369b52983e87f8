"""Pixel encoding: slice payloads -> RGB blocks -> whole-device image.

Each slice's bytes fill a fixed pixel block in one of three index orders;
blocks are pasted at their device-grid position (grid row 0 at the top of the
image, slices left to right within a CLB). Non-CLB grid cells render as zero
pixels. On disk the image is always row-major interleaved RGB; the chosen
fill order is recorded as PNG metadata.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path

import numpy as np
from PIL import Image, PngImagePlugin, UnidentifiedImageError

from .device import DeviceProfile, first_frame_index, total_fdri_frames
from .errors import ImageCodecError
from .frames import FrameArray

PNG_KEY_ORDER = "bcv:order"
PNG_KEY_PROFILE = "bcv:profile"


class PixelOrder(str, Enum):
    CHW = "chw"  # default: channel, then rows top-down, then columns
    HWC = "hwc"
    CWH = "cwh"


@dataclass
class EncodedImage:
    height: int
    width: int
    pixels: bytes  # height*width*3, row-major interleaved RGB
    order: PixelOrder
    profile_name: str

    CHANNELS = 3

    def __post_init__(self) -> None:
        expected = self.height * self.width * self.CHANNELS
        if len(self.pixels) != expected:
            raise ImageCodecError(
                f"pixel buffer has {len(self.pixels)} bytes, "
                f"{self.height}x{self.width}x3 needs {expected}"
            )

    def as_array(self) -> np.ndarray:
        arr = np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width, 3)
        arr.flags.writeable = False
        return arr


@lru_cache(maxsize=64)
def _fill_permutation(height: int, width: int, order: PixelOrder) -> np.ndarray:
    """Destination flat index (row-major RGB) for each payload byte index."""
    k = np.arange(height * width * 3)
    plane = height * width
    if order is PixelOrder.CHW:
        c = k // plane
        y = (k % plane) // width
        x = k % width
    elif order is PixelOrder.HWC:
        y = k // (width * 3)
        x = (k % (width * 3)) // 3
        c = k % 3
    elif order is PixelOrder.CWH:
        c = k // plane
        x = (k % plane) // height
        y = k % height
    else:
        raise ImageCodecError(f"unknown pixel order {order!r}")
    dest = (y * width + x) * 3 + c
    dest.flags.writeable = False
    return dest


def encode_slice(payload: bytes, block: tuple[int, int], order: PixelOrder) -> bytes:
    """Fill an h x w x 3 block with payload bytes in the given index order;
    positions past the payload stay zero."""
    h, w = block
    capacity = h * w * 3
    if len(payload) > capacity:
        raise ImageCodecError(
            f"payload of {len(payload)} bytes exceeds {h}x{w}x3 block capacity {capacity}"
        )
    out = np.zeros(capacity, dtype=np.uint8)
    perm = _fill_permutation(h, w, order)
    out[perm[: len(payload)]] = np.frombuffer(bytes(payload), dtype=np.uint8)
    return out.tobytes()


def pixel_columns(profile: DeviceProfile) -> list[tuple[int, int]]:
    """Per grid column, its [x_start, x_end) pixel span."""
    fam = profile.family
    spans = []
    x = 0
    for col in range(profile.grid_cols):
        _, bw = fam.block_for(profile.grid_col_kind(col))
        width = fam.slices_per_clb * bw
        spans.append((x, x + width))
        x += width
    return spans


def image_dims(profile: DeviceProfile) -> tuple[int, int]:
    """(height, width) in pixels; depends only on the profile."""
    fam = profile.family
    height = profile.grid_rows * fam.block_height
    spans = pixel_columns(profile)
    width = spans[-1][1] if spans else 0
    return height, width


def encode_image(
    frames: FrameArray, profile: DeviceProfile, order: PixelOrder = PixelOrder.CHW
) -> EncodedImage:
    fam = profile.family
    if frames.frame_words != fam.frame_words:
        raise ImageCodecError(
            f"frame array has {frames.frame_words}-word frames, "
            f"profile {profile.name!r} expects {fam.frame_words}"
        )
    expected = total_fdri_frames(profile)
    if len(frames) != expected:
        raise ImageCodecError(
            f"frame array has {len(frames)} frames, profile needs {expected}"
        )

    height, width = image_dims(profile)
    img = np.zeros((height, width, 3), dtype=np.uint8)
    q = fam.clbs_per_column
    block_h = fam.block_height
    ex0, ex1 = fam.excluded_span
    raw = frames.as_array()
    reduced = np.concatenate([raw[:, :ex0], raw[:, ex1:]], axis=1)
    per = fam.slice_bytes_per_frame()
    spans = pixel_columns(profile)

    for r, row in enumerate(profile.config_rows):
        for c, col in enumerate(row):
            if not col.kind.is_clb:
                continue
            kind = col.kind.slice_kind
            bh, bw = fam.block_for(kind)
            n = col.frame_count
            first = first_frame_index(profile, r, c)
            # (n, q, slices, per) -> (q, slices, n*per): per-CLB-row, per-slice
            # payloads with bytes in frame order.
            data = reduced[first : first + n].reshape(n, q, fam.slices_per_clb, per)
            payloads = data.transpose(1, 2, 0, 3).reshape(q, fam.slices_per_clb, n * per)
            perm = _fill_permutation(bh, bw, order)
            blocks = np.zeros((q, fam.slices_per_clb, bh * bw * 3), dtype=np.uint8)
            blocks[:, :, perm[: n * per]] = payloads
            # clb_row 0 is the column bottom; flip so index 0 is the top grid row.
            blocks = blocks[::-1].reshape(q, fam.slices_per_clb, bh, bw, 3)
            x0, _ = spans[col.grid_column]
            y0 = r * q * block_h
            band = blocks.transpose(0, 2, 1, 3, 4).reshape(q * bh, fam.slices_per_clb * bw, 3)
            img[y0 : y0 + q * block_h, x0 : x0 + fam.slices_per_clb * bw] = band

    return EncodedImage(height, width, img.tobytes(), order, profile.name)


def compression_ratio(image: EncodedImage, bitstream_bits: int) -> float:
    """Image bits as a percentage of the bitstream length, 2 decimal places."""
    if bitstream_bits <= 0:
        raise ImageCodecError("bitstream_bits must be positive")
    return round(image.height * image.width * 3 * 8 / bitstream_bits * 100, 2)


def write_image(image: EncodedImage, path: str | Path) -> None:
    pil = Image.frombytes("RGB", (image.width, image.height), image.pixels)
    meta = PngImagePlugin.PngInfo()
    meta.add_text(PNG_KEY_ORDER, image.order.value)
    meta.add_text(PNG_KEY_PROFILE, image.profile_name)
    pil.save(path, format="PNG", pnginfo=meta)


def read_image(path: str | Path) -> EncodedImage:
    try:
        with Image.open(path) as pil:
            if pil.format != "PNG":
                raise ImageCodecError(f"{path} is {pil.format}, expected PNG")
            text = getattr(pil, "text", {})
            rgb = pil.convert("RGB")
            width, height = rgb.size
            pixels = rgb.tobytes()
    except (UnidentifiedImageError, OSError) as exc:
        raise ImageCodecError(f"cannot read image {path}: {exc}") from exc

    order_name = text.get(PNG_KEY_ORDER)
    profile_name = text.get(PNG_KEY_PROFILE)
    if order_name is None or profile_name is None:
        warnings.warn(
            f"{path} lacks {PNG_KEY_ORDER}/{PNG_KEY_PROFILE} metadata; "
            "assuming chw order and unknown profile",
            stacklevel=2,
        )
        order_name = order_name or PixelOrder.CHW.value
        profile_name = profile_name or "unknown"
    try:
        order = PixelOrder(order_name)
    except ValueError:
        raise ImageCodecError(f"{path}: unknown pixel order tag {order_name!r}") from None
    return EncodedImage(height, width, pixels, order, profile_name)
