"""Acceptance suite: one test per release criterion, each printing one
[PASS]/[FAIL] line (run with -s to see them live)."""

import time
from contextlib import contextmanager

import numpy as np

from bitcanvas.dataset import default_signatures, build_dataset, split_entries, synth_dataset
from bitcanvas.device import load_builtin, synthetic_profile, total_fdri_frames
from bitcanvas.frames import (
    ContainerFormat,
    FrameArray,
    extract_clb_bytes,
    extract_slice_bytes,
    parse_container,
    synthesize_container,
)
from bitcanvas.image import (
    EncodedImage,
    PixelOrder,
    compression_ratio,
    encode_image,
    encode_slice,
)
from bitcanvas.metrics import Detection, average_precision, iou
from bitcanvas.annotation import BBoxAnnotation

from test_metrics import oracle_ap


@contextmanager
def criterion(name):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name} ({time.perf_counter() - started:.2f}s)")


def zero_frames(profile) -> FrameArray:
    fam = profile.family
    return FrameArray(bytes(total_fdri_frames(profile) * fam.frame_bytes), fam.frame_words)


def test_table4_image_sizes():
    with criterion("Table 4 image sizes: 900x912x3 / 1200x960x3 / 2940x1587x3, exact, <1s"):
        profiles = {name: load_builtin(name) for name in ("z7020", "z7030", "zu9eg")}
        started = time.perf_counter()
        images = {name: encode_image(zero_frames(p), p) for name, p in profiles.items()}
        elapsed = time.perf_counter() - started
        assert (images["z7020"].height, images["z7020"].width) == (900, 912)
        assert (images["z7030"].height, images["z7030"].width) == (1200, 960)
        assert (images["zu9eg"].height, images["zu9eg"].width) == (2940, 1587)
        assert elapsed < 1.0, f"encoding took {elapsed:.3f}s"


def test_table4_compression_ratios():
    with criterion("Table 4 compression ratios: 60.86 / 57.79 / 52.80 within 0.01"):
        cases = [
            ((900, 912), 32_364_512, 60.86),
            ((1200, 960), 47_839_328, 57.79),
            ((2940, 1587), 212_086_240, 52.80),
        ]
        started = time.perf_counter()
        for (h, w), bits, expected in cases:
            image = EncodedImage(h, w, bytes(h * w * 3), PixelOrder.CHW, "x")
            got = compression_ratio(image, bits)
            assert abs(got - expected) <= 0.01, f"{h}x{w}: {got} vs {expected}"
        assert time.perf_counter() - started < 1.0


def test_table3_frame_and_word_totals():
    with criterion("Table 3 totals: frames x words-per-frame == published word counts, exact"):
        for name, frames, words_per_frame, words in (
            ("z7020", 10_008, 101, 1_010_808),
            ("z7030", 14_796, 101, 1_494_396),
            ("zu9eg", 71_260, 93, 6_627_180),
        ):
            profile = load_builtin(name)
            assert total_fdri_frames(profile) == frames
            assert profile.family.frame_words == words_per_frame
            assert total_fdri_frames(profile) * profile.family.frame_words == words


def test_round_trip_1000_cases():
    with criterion("Round trip: 1000 random (profile, payload) cases recover exactly, <30s"):
        families = [load_builtin("zynq7000-family").family,
                    load_builtin("ultrascale-family").family]
        started = time.perf_counter()
        rng = np.random.default_rng(2024)
        for case in range(1000):
            family = families[case % 2]
            profile = synthetic_profile(
                family,
                clock_region_rows=1,
                clb_columns_per_row=1 + case % 3,
                non_clb_columns_per_row=(case // 3) % 3,
                seed=case,
            )
            fmt = ContainerFormat.SYNTH if case % 4 else ContainerFormat.XILINX_BIN
            cells = sorted(profile.grid_map)
            n_payloads = 1 + case % 3
            payloads = {}
            for _ in range(n_payloads):
                gr, gc = cells[int(rng.integers(0, len(cells)))]
                s = int(rng.integers(0, family.slices_per_clb))
                r, c, _ = profile.grid_map[(gr, gc)]
                kind = profile.config_rows[r][c].kind.slice_kind
                payloads[(gr, gc, s)] = rng.integers(
                    0, 256, family.slice_payload_len(kind), dtype=np.uint8
                ).tobytes()
            raw = synthesize_container(profile, payloads, fmt=fmt)
            frames, _ = parse_container(raw, profile, fmt)
            for (gr, gc, s), want in payloads.items():
                r, c, k = profile.grid_map[(gr, gc)]
                kind = profile.config_rows[r][c].kind.slice_kind
                got = extract_slice_bytes(
                    extract_clb_bytes(frames, profile, r, c, k), profile, kind, s
                )
                assert got == want, f"case {case} position {(gr, gc, s)}"
        elapsed = time.perf_counter() - started
        assert elapsed < 30.0, f"{elapsed:.1f}s"


def test_exclusion_100_frame_arrays():
    with criterion("Exclusion: randomized excluded middle words never change the image, <10s"):
        started = time.perf_counter()
        rng = np.random.default_rng(77)
        families = [load_builtin("zynq7000-family").family,
                    load_builtin("ultrascale-family").family]
        for case in range(100):
            family = families[case % 2]
            profile = synthetic_profile(family, 1, 1 + case % 2, case % 2, seed=case)
            fam = profile.family
            n_frames = total_fdri_frames(profile)
            data = rng.integers(0, 256, n_frames * fam.frame_bytes, dtype=np.uint8)
            frames = FrameArray(data.tobytes(), fam.frame_words)
            order = list(PixelOrder)[case % 3]
            before = encode_image(frames, profile, order)
            ex0, ex1 = fam.excluded_span
            mutated = data.reshape(n_frames, fam.frame_bytes).copy()
            mutated[:, ex0:ex1] = rng.integers(
                0, 256, (n_frames, ex1 - ex0), dtype=np.uint8
            )
            after = encode_image(FrameArray(mutated.tobytes(), fam.frame_words), profile, order)
            assert before.pixels == after.pixels, f"case {case}"
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"{elapsed:.1f}s"


def test_ordering_1000_payloads():
    with criterion("Ordering: CHW/HWC/CWH multiset-equal, pairwise distinct, 1000 payloads, <5s"):
        started = time.perf_counter()
        rng = np.random.default_rng(55)
        blocks = [(6, 8, 144), (7, 9, 174)]
        for case in range(1000):
            h, w, length = blocks[case % 2]
            if case % 2 == 0:
                # all byte values distinct: any two fill orders must differ
                payload = bytes(rng.permutation(length).astype(np.uint8).tolist())
            else:
                payload = rng.integers(0, 256, length, dtype=np.uint8).tobytes()
            outs = [encode_slice(payload, (h, w), o) for o in PixelOrder]
            assert sorted(outs[0]) == sorted(outs[1]) == sorted(outs[2]), f"case {case}"
            if len(set(payload)) >= 2 and case % 2 == 0:
                assert len(set(outs)) == 3, f"case {case}: orders collided"
        elapsed = time.perf_counter() - started
        assert elapsed < 5.0, f"{elapsed:.1f}s"


def test_metrics_oracle_500_instances():
    with criterion("Metrics: AP matches exhaustive PR oracle on 500 instances, err < 1e-9, <10s"):
        started = time.perf_counter()
        assert iou((0, 0, 2, 2), (1, 1, 3, 3)) == 1 / 7
        rng = np.random.default_rng(9001)
        for case in range(500):
            n_gt = int(rng.integers(0, 4))
            n_det = int(rng.integers(0, 6))
            gts = {"i0": [], "i1": []}
            for _ in range(n_gt):
                img = f"i{int(rng.integers(0, 2))}"
                x0, y0 = (int(v) for v in rng.integers(0, 24, 2))
                w, h = (int(v) for v in rng.integers(1, 14, 2))
                gts[img].append(BBoxAnnotation("x", x0, y0, x0 + w, y0 + h))
            dets = []
            for _ in range(n_det):
                img = f"i{int(rng.integers(0, 2))}"
                x0, y0 = (int(v) for v in rng.integers(0, 24, 2))
                w, h = (int(v) for v in rng.integers(1, 14, 2))
                conf = round(float(rng.random()), 4)
                dets.append(Detection(img, "x", (x0, y0, x0 + w, y0 + h), conf))
            for threshold in (0.5, 0.75):
                got = average_precision(dets, gts, "x", threshold)
                want = oracle_ap(dets, gts, "x", threshold)
                if want is None:
                    assert got is None
                else:
                    assert abs(got - want) < 1e-9, f"case {case} threshold {threshold}"
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0, f"{elapsed:.1f}s"


def test_split_determinism(tmp_path):
    with criterion("Split determinism: byte-identical train/test lists, reference shuffle"):
        # independent inline SplitMix64 + Fisher-Yates as the cross-machine oracle
        def reference_shuffle(n, seed):
            mask = (1 << 64) - 1
            state = seed & mask

            def nxt():
                nonlocal state
                state = (state + 0x9E3779B97F4A7C15) & mask
                z = state
                z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
                z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
                return z ^ (z >> 31)

            items = list(range(n))
            for i in range(n - 1, 0, -1):
                j = nxt() % (i + 1)
                items[i], items[j] = items[j], items[i]
            return items

        order = reference_shuffle(10, 42)
        train, test = split_entries(10, 0.8, 42)
        assert train == order[:8] and test == order[8:]
        assert split_entries(10, 0.8, 42) == (train, test)
        assert split_entries(15_104, 0.8, 0)[0].__len__() == 12_084

        family = load_builtin("zynq7000-family").family
        profile = synthetic_profile(family, 1, 4, 0, seed=1)
        sigs = default_signatures(["aes", "md5"], profile)
        src = tmp_path / "src"
        manifest, _ = synth_dataset(profile, sigs, count=6, out_dir=src, seed=13)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        build_dataset(manifest, PixelOrder.CHW, out1, manifest_dir=src)
        build_dataset(manifest, PixelOrder.CHW, out2, manifest_dir=src)
        for name in ("train.txt", "test.txt"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_timing_proportionality():
    with criterion("Timing: encode time vs frame count at 1x/2x/4x fits a line, R^2 >= 0.9"):
        family = load_builtin("zynq7000-family").family
        profiles = [
            synthetic_profile(family, 2, cols, 0, seed=0) for cols in (30, 60, 120)
        ]
        raws = [synthesize_container(p, {}) for p in profiles]
        # warm up caches (permutation tables, numpy)
        parse_and_encode = lambda raw, p: encode_image(parse_container(raw, p)[0], p)
        parse_and_encode(raws[0], profiles[0])

        sizes = []
        times = []
        for profile, raw in zip(profiles, raws):
            runs = []
            for _ in range(5):
                started = time.perf_counter()
                parse_and_encode(raw, profile)
                runs.append(time.perf_counter() - started)
            sizes.append(total_fdri_frames(profile))
            times.append(sorted(runs)[len(runs) // 2])
        x = np.array(sizes, dtype=float)
        y = np.array(times, dtype=float)
        slope, intercept = np.polyfit(x, y, 1)
        predicted = slope * x + intercept
        ss_res = float(((y - predicted) ** 2).sum())
        ss_tot = float(((y - y.mean()) ** 2).sum())
        r_squared = 1.0 - ss_res / ss_tot
        assert slope > 0, f"encode time should grow with frame count, slope={slope}"
        assert r_squared >= 0.9, f"R^2 {r_squared:.4f} (times: {times})"
