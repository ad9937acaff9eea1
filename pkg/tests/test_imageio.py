import numpy as np
import pytest

import fragscan as fs
from fragscan.errors import ImageFileError, LayerSizeError
from fragscan.imageio import class_map_bytes, quantize_u8


class TestReadPgm:
    def test_two_by_two(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 0, 255]))
        plane = fs.read_pgm(path)
        assert plane.shape == (1, 2, 2)
        assert plane.tolist() == [[[0.0, 1.0], [0.0, 1.0]]]

    def test_header_comments_and_whitespace(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_bytes(b"P5\n# made by hand\n 3 # width\n1\n255\n" + bytes([10, 20, 30]))
        plane = fs.read_pgm(path)
        assert plane.shape == (1, 1, 3)
        assert np.allclose(plane[0, 0], np.array([10, 20, 30]) / 255, atol=1e-7)

    def test_round_trip_payload(self, tmp_path):
        src = tmp_path / "a.pgm"
        dst = tmp_path / "b.pgm"
        payload = bytes(range(16))
        src.write_bytes(b"P5\n4 4\n255\n" + payload)
        fs.write_pgm(dst, fs.read_pgm(src))
        assert dst.read_bytes().split(b"\n255\n", 1)[1] == payload

    def test_fixture_slice_round_trips(self, tmp_path):
        path = tmp_path / "slice.pgm"
        fs.write_pgm(path, fs.synthetic_slice(512, seed=0))
        plane = fs.read_pgm(path)
        assert plane.shape == (1, 512, 512)
        assert np.array_equal(plane, fs.synthetic_slice(512, seed=0))

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_bytes(b"P2\n2 2\n255\n0 0 0 0")
        with pytest.raises(ImageFileError, match="P5"):
            fs.read_pgm(path)

    def test_sixteen_bit_rejected(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
        with pytest.raises(ImageFileError, match="max value"):
            fs.read_pgm(path)

    def test_truncated_pixels(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_bytes(b"P5\n4 4\n255\n" + bytes(7))
        with pytest.raises(ImageFileError, match="truncated"):
            fs.read_pgm(path)

    def test_respects_precision_mode(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_bytes(b"P5\n1 1\n255\n\x80")
        with fs.precision("f64"):
            assert fs.read_pgm(path).dtype == np.float64


class TestQuantization:
    def test_fixed_rounding_rule(self):
        values = np.array([0.0, 0.4999 / 255, 0.5001 / 255, 1.0])
        assert quantize_u8(values).tolist() == [0, 0, 1, 255]

    def test_clipping(self):
        assert quantize_u8(np.array([-0.5, 1.5])).tolist() == [0, 255]

    def test_class_map_rendering(self):
        labels = np.array([[0, 1, 2]])
        assert class_map_bytes(labels, 3).tolist() == [[0, 128, 255]]
        assert class_map_bytes(labels[:, :2], 2).tolist() == [[0, 255]]
        assert class_map_bytes(np.zeros((1, 2), int), 1).tolist() == [[0, 0]]


class TestMirrorPad:
    def test_zero_margin_is_identity(self):
        plane = np.arange(6, dtype=np.float32).reshape(2, 3)
        assert np.array_equal(fs.mirror_pad(plane, 0), plane)

    def test_reflection_rule(self):
        plane = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], dtype=np.float32)
        padded = fs.mirror_pad(plane, 1)
        # each row becomes [b, a, b, c, b]; rows reflect the same way
        assert padded.tolist() == [
            [5.0, 4.0, 5.0, 6.0, 5.0],
            [2.0, 1.0, 2.0, 3.0, 2.0],
            [5.0, 4.0, 5.0, 6.0, 5.0],
            [2.0, 1.0, 2.0, 3.0, 2.0],
        ]

    def test_margin_for_95_pixel_window(self):
        plane = np.zeros((512, 512), dtype=np.float32)
        assert fs.mirror_pad(plane, 47).shape == (606, 606)

    def test_reflect_index_oracle(self):
        rng = np.random.default_rng(5)
        plane = rng.random((6, 7)).astype(np.float32)
        margin = 3
        padded = fs.mirror_pad(plane, margin)

        def reflect(i, n):
            # reflect about the border pixels without repeating them
            period = 2 * (n - 1)
            i = abs(i) % period
            return period - i if i >= n else i

        for y in range(-margin, 6 + margin):
            for x in range(-margin, 7 + margin):
                assert padded[y + margin, x + margin] == plane[reflect(y, 6), reflect(x, 7)]

    def test_margin_too_large(self):
        with pytest.raises(LayerSizeError, match="margin"):
            fs.mirror_pad(np.zeros((4, 4), dtype=np.float32), 4)

    def test_works_on_map_sets(self):
        maps = np.arange(8, dtype=np.float32).reshape(2, 2, 2)
        padded = fs.mirror_pad(maps, 1)
        assert padded.shape == (2, 4, 4)


class TestPosteriorDump:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "p.fsp"
        volume = np.random.default_rng(6).random((3, 4, 2)).astype(np.float32)
        fs.save_posteriors(path, volume)
        assert path.read_bytes()[:4] == b"FSP1"
        assert np.array_equal(fs.load_posteriors(path), volume)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "p.fsp"
        path.write_bytes(b"XXXX" + bytes(12))
        with pytest.raises(ImageFileError, match="magic"):
            fs.load_posteriors(path)

    def test_size_mismatch(self, tmp_path):
        path = tmp_path / "p.fsp"
        import struct

        path.write_bytes(b"FSP1" + struct.pack("<III", 2, 2, 2) + bytes(4 * 7))
        with pytest.raises(ImageFileError, match="payload"):
            fs.load_posteriors(path)


class TestSyntheticSlice:
    def test_deterministic(self):
        assert np.array_equal(fs.synthetic_slice(32, seed=4), fs.synthetic_slice(32, seed=4))
        assert not np.array_equal(fs.synthetic_slice(32, seed=4), fs.synthetic_slice(32, seed=5))

    def test_rectangular(self):
        assert fs.synthetic_slice(8, 5, seed=1).shape == (1, 5, 8)

    def test_range(self):
        plane = fs.synthetic_slice(64, seed=2)
        assert float(plane.min()) >= 0.0 and float(plane.max()) <= 1.0
