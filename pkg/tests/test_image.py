import numpy as np
import pytest

from bitcanvas.device import synthetic_profile, total_fdri_frames
from bitcanvas.errors import ImageCodecError
from bitcanvas.frames import FrameArray, parse_container, synthesize_container
from bitcanvas.image import (
    EncodedImage,
    PixelOrder,
    compression_ratio,
    encode_image,
    encode_slice,
    image_dims,
    read_image,
    write_image,
)

from conftest import random_payload, tiny_profile


def oracle_fill(payload, h, w, order):
    """Index-formula oracle: place byte k at its (c, y, x) per the stated order."""
    out = np.zeros((h, w, 3), dtype=np.uint8)
    for k, value in enumerate(payload):
        if order is PixelOrder.CHW:
            c, rem = divmod(k, h * w)
            y, x = divmod(rem, w)
        elif order is PixelOrder.HWC:
            y, rem = divmod(k, w * 3)
            x, c = divmod(rem, 3)
        else:
            c, rem = divmod(k, h * w)
            x, y = divmod(rem, h)
        out[y, x, c] = value
    return out.tobytes()


def zero_frames(profile) -> FrameArray:
    fam = profile.family
    return FrameArray(bytes(total_fdri_frames(profile) * fam.frame_bytes), fam.frame_words)


# -- encode_slice -------------------------------------------------------------


def test_chw_positions_for_full_zynq_slice():
    payload = bytes(range(144))
    block = np.frombuffer(encode_slice(payload, (6, 8), PixelOrder.CHW), np.uint8).reshape(6, 8, 3)
    assert block[0, 0, 0] == 0
    assert block[0, 0, 1] == 48
    assert block[5, 7, 2] == 143
    assert block.tobytes() == oracle_fill(payload, 6, 8, PixelOrder.CHW)


@pytest.mark.parametrize("order", list(PixelOrder))
def test_fill_matches_index_oracle(order):
    rng = np.random.default_rng(hash(order.value) % 2**32)
    for h, w in ((6, 8), (7, 9), (7, 23), (3, 5)):
        for length in (0, 1, h * w * 3 // 2, h * w * 3):
            payload = random_payload(rng, length)
            assert encode_slice(payload, (h, w), order) == oracle_fill(payload, h, w, order)


@pytest.mark.parametrize("order", list(PixelOrder))
def test_zero_payload_gives_zero_block(order):
    assert encode_slice(b"", (6, 8), order) == bytes(144)
    assert encode_slice(bytes(144), (6, 8), order) == bytes(144)


def test_slicel_padding_is_zero():
    payload = bytes([255]) * 174  # 29 frames x 6 bytes
    block = encode_slice(payload, (7, 9), PixelOrder.CHW)
    arr = np.frombuffer(block, np.uint8)
    assert (arr == 255).sum() == 174
    assert len(block) - 174 == 15  # tail padding


def test_payload_longer_than_block_rejected():
    with pytest.raises(ImageCodecError, match="capacity"):
        encode_slice(bytes(145), (6, 8), PixelOrder.CHW)


def test_orders_are_permutations_of_each_other():
    rng = np.random.default_rng(8)
    for _ in range(50):
        payload = random_payload(rng, 144)
        blocks = [encode_slice(payload, (6, 8), o) for o in PixelOrder]
        multisets = [sorted(b) for b in blocks]
        assert multisets[0] == multisets[1] == multisets[2]


def test_orders_are_distinct_for_distinct_valued_payloads():
    rng = np.random.default_rng(9)
    for _ in range(20):
        payload = bytes(rng.permutation(144).astype(np.uint8).tolist())
        blocks = {encode_slice(payload, (6, 8), o) for o in PixelOrder}
        assert len(blocks) == 3


# -- encode_image -------------------------------------------------------------


def test_published_image_sizes(z7020, z7030, zu9eg):
    assert image_dims(z7020) == (900, 912)
    assert image_dims(z7030) == (1200, 960)
    assert image_dims(zu9eg) == (2940, 1587)


def test_zero_frames_give_zero_image(zynq_family):
    profile = tiny_profile(zynq_family)
    image = encode_image(zero_frames(profile), profile)
    assert image.height == 300 and image.width == 32
    assert image.pixels == bytes(300 * 32 * 3)


def test_image_placement_matches_per_slice_encoding(ultrascale_family):
    profile = synthetic_profile(ultrascale_family, 1, 4, 2, seed=21)
    rng = np.random.default_rng(22)
    fam = profile.family
    payloads = {}
    for (gr, gc), (r, c, _) in profile.grid_map.items():
        kind = profile.config_rows[r][c].kind.slice_kind
        payloads[(gr, gc, 0)] = random_payload(rng, fam.slice_payload_len(kind))
    raw = synthesize_container(profile, payloads)
    frames, _ = parse_container(raw, profile)
    for order in PixelOrder:
        image = encode_image(frames, profile, order)
        arr = image.as_array()
        from bitcanvas.image import pixel_columns

        spans = pixel_columns(profile)
        for (gr, gc, s), payload in payloads.items():
            kind = profile.grid_col_kind(gc)
            bh, bw = fam.block_for(kind)
            block = np.frombuffer(encode_slice(payload, (bh, bw), order), np.uint8)
            y0 = gr * bh
            x0 = spans[gc][0] + s * bw
            assert arr[y0 : y0 + bh, x0 : x0 + bw].tobytes() == block.tobytes()


def test_non_clb_grid_cells_render_zero(z7020):
    image = encode_image(zero_frames(z7020), z7020)
    arr = image.as_array()
    hole = next(
        (gr, gc)
        for gr in range(z7020.grid_rows)
        for gc in range(z7020.grid_cols)
        if (gr, gc) not in z7020.grid_map
    )
    gr, gc = hole
    assert not arr[gr * 6 : gr * 6 + 6, gc * 16 : gc * 16 + 16].any()


def test_image_dims_independent_of_content(zynq_family):
    profile = tiny_profile(zynq_family)
    rng = np.random.default_rng(4)
    raw = synthesize_container(profile, {(0, 0, 0): random_payload(rng, 144)})
    frames, _ = parse_container(raw, profile)
    a = encode_image(zero_frames(profile), profile)
    b = encode_image(frames, profile)
    assert (a.height, a.width) == (b.height, b.width)
    assert a.pixels != b.pixels  # content injectivity on a visible byte


def test_injective_on_clb_content(zynq_family):
    """Flipping any non-excluded byte inside a CLB column changes the image."""
    from bitcanvas.device import first_frame_index

    profile = synthetic_profile(zynq_family, 1, 2, 1, seed=50)
    fam = profile.family
    base = zero_frames(profile)
    reference = encode_image(base, profile).pixels
    ex0, ex1 = fam.excluded_span
    rng = np.random.default_rng(51)
    clb_frames = []
    for r, row in enumerate(profile.config_rows):
        for c, col in enumerate(row):
            if col.kind.is_clb:
                first = first_frame_index(profile, r, c)
                clb_frames.extend(range(first, first + col.frame_count))
    for _ in range(40):
        frame = clb_frames[int(rng.integers(0, len(clb_frames)))]
        offset = int(rng.integers(0, fam.frame_bytes - (ex1 - ex0)))
        if offset >= ex0:
            offset += ex1 - ex0  # skip the excluded span
        data = bytearray(base.data)
        data[frame * fam.frame_bytes + offset] = 0xA5
        flipped = encode_image(FrameArray(bytes(data), fam.frame_words), profile)
        assert flipped.pixels != reference, f"frame {frame} offset {offset} invisible"


def test_excluded_bytes_never_influence_pixels(zynq_family):
    profile = tiny_profile(zynq_family)
    rng = np.random.default_rng(14)
    base = bytearray(zero_frames(profile).data)
    image_before = encode_image(FrameArray(bytes(base), 101), profile)
    for i in range(72):
        base[i * 404 + 200 : i * 404 + 204] = rng.integers(0, 256, 4, dtype=np.uint8).tobytes()
    image_after = encode_image(FrameArray(bytes(base), 101), profile)
    assert image_before.pixels == image_after.pixels


def test_non_clb_column_frames_never_influence_pixels(zynq_family):
    profile = synthetic_profile(zynq_family, 1, 2, 2, seed=33)
    data = bytearray(zero_frames(profile).data)
    before = encode_image(FrameArray(bytes(data), 101), profile)
    rng = np.random.default_rng(34)
    for row in profile.config_rows:
        for c, col in enumerate(row):
            if not col.kind.is_clb:
                start = sum(x.frame_count for x in row[:c]) * 404
                end = start + col.frame_count * 404
                data[start:end] = rng.integers(0, 256, end - start, dtype=np.uint8).tobytes()
    after = encode_image(FrameArray(bytes(data), 101), profile)
    assert before.pixels == after.pixels


def test_frame_mismatch_rejected(zynq_family):
    profile = tiny_profile(zynq_family)
    with pytest.raises(ImageCodecError, match="frames"):
        encode_image(FrameArray(bytes(3 * 404), 101), profile)


# -- compression_ratio ----------------------------------------------------------


def test_published_compression_ratios():
    cases = [
        ((900, 912), 32_364_512, 60.86),
        ((1200, 960), 47_839_328, 57.79),
        ((2940, 1587), 212_086_240, 52.80),
    ]
    for (h, w), bits, expected in cases:
        image = EncodedImage(h, w, bytes(h * w * 3), PixelOrder.CHW, "x")
        assert abs(compression_ratio(image, bits) - expected) <= 0.01


def test_compression_ratio_rejects_zero_bits():
    image = EncodedImage(2, 2, bytes(12), PixelOrder.CHW, "x")
    with pytest.raises(ImageCodecError):
        compression_ratio(image, 0)


# -- PNG round trip ---------------------------------------------------------------


def test_png_round_trip(tmp_path, zynq_family):
    profile = tiny_profile(zynq_family)
    rng = np.random.default_rng(6)
    raw = synthesize_container(profile, {(3, 0, 1): random_payload(rng, 144)})
    frames, _ = parse_container(raw, profile)
    image = encode_image(frames, profile, PixelOrder.HWC)
    path = tmp_path / "img.png"
    write_image(image, path)
    loaded = read_image(path)
    assert loaded.pixels == image.pixels
    assert loaded.order is PixelOrder.HWC
    assert loaded.profile_name == profile.name


def test_png_compresses_sparse_device_image(tmp_path, z7020):
    image = encode_image(zero_frames(z7020), z7020)
    path = tmp_path / "zero.png"
    write_image(image, path)
    assert path.stat().st_size < 900 * 912 * 3


def test_png_missing_metadata_warns(tmp_path):
    from PIL import Image

    path = tmp_path / "plain.png"
    Image.new("RGB", (8, 4)).save(path)
    with pytest.warns(UserWarning, match="metadata"):
        image = read_image(path)
    assert image.order is PixelOrder.CHW
    assert image.profile_name == "unknown"


def test_read_rejects_non_png(tmp_path):
    path = tmp_path / "not.png"
    path.write_bytes(b"hello world, definitely not an image")
    with pytest.raises(ImageCodecError):
        read_image(path)


def test_read_rejects_other_formats(tmp_path):
    from PIL import Image

    path = tmp_path / "img.bmp"
    Image.new("RGB", (4, 4)).save(path, format="BMP")
    with pytest.raises(ImageCodecError, match="BMP"):
        read_image(path)
