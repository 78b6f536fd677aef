"""Frame sampling, preprocessing geometry, and determinism."""

import cv2
import numpy as np
import pytest

from d3video import (
    DecodeError,
    EmptySourceError,
    FrameSequence,
    FrameTooSmallError,
    SamplingPolicy,
    preprocess,
    sample_frames,
)
from d3video.frames import jpeg_roundtrip


def write_frames(directory, values, size=64, ext="png"):
    """One solid-gray image per value, numbered in order."""
    directory.mkdir(parents=True, exist_ok=True)
    for k, v in enumerate(values):
        img = np.full((size, size, 3), v, dtype=np.uint8)
        assert cv2.imwrite(str(directory / f"{k:05d}.{ext}"), img)
    return directory


class TestSamplingPolicy:
    def test_defaults(self):
        policy = SamplingPolicy()
        assert policy.target_fps == 8.0
        assert policy.max_duration_s == 2.0
        assert policy.max_frames == 16

    def test_default_target_times(self):
        times = SamplingPolicy().target_times()
        assert times == [k / 8 for k in range(16)]
        assert times[-1] == 1.875

    def test_max_frames_follows_fps_and_duration(self):
        assert SamplingPolicy(target_fps=4, max_duration_s=3).max_frames == 12

    def test_explicit_max_frames_wins(self):
        assert SamplingPolicy(max_frames=5).max_frames == 5

    @pytest.mark.parametrize("kwargs", [{"target_fps": 0}, {"max_duration_s": -1}, {"max_frames": 0}])
    def test_invalid_policy(self, kwargs):
        with pytest.raises(ValueError):
            SamplingPolicy(**kwargs)


class TestDirectorySampling:
    def test_takes_first_max_frames_in_numeric_order(self, tmp_path):
        src = write_frames(tmp_path / "clip", range(0, 100, 5))  # 20 frames
        seq = sample_frames(src)
        assert seq.num_frames == 16
        got = [int(f[0, 0, 0]) for f in seq.frames]
        assert got == list(range(0, 80, 5))

    def test_numeric_sort_beats_lexicographic(self, tmp_path):
        src = tmp_path / "clip"
        src.mkdir()
        for k in (2, 10, 1):  # lexicographic order would be 1, 10, 2
            img = np.full((8, 8, 3), k, dtype=np.uint8)
            assert cv2.imwrite(str(src / f"{k}.png"), img)
        seq = sample_frames(src)
        assert [int(f[0, 0, 0]) for f in seq.frames] == [1, 2, 10]

    def test_short_directory_returns_all_frames(self, tmp_path):
        src = write_frames(tmp_path / "clip", range(0, 15, 3))
        assert sample_frames(src).num_frames == 5

    def test_frames_are_rgb(self, tmp_path):
        src = tmp_path / "clip"
        src.mkdir()
        img = np.zeros((8, 8, 3), dtype=np.uint8)
        img[:, :, 2] = 200  # red channel in OpenCV's BGR file order
        assert cv2.imwrite(str(src / "0.png"), img)
        frame = sample_frames(src).frames[0]
        assert frame[0, 0, 0] == 200 and frame[0, 0, 2] == 0

    def test_empty_directory(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        with pytest.raises(EmptySourceError):
            sample_frames(empty)

    def test_undecodable_frame(self, tmp_path):
        src = tmp_path / "clip"
        src.mkdir()
        (src / "0.png").write_bytes(b"not an image")
        with pytest.raises(DecodeError):
            sample_frames(src)

    def test_missing_source(self, tmp_path):
        with pytest.raises(DecodeError):
            sample_frames(tmp_path / "nope.mp4")


class TestVideoSampling:
    def test_24fps_counter_selects_every_third_frame(self, write_video):
        # 8 per second from a 24 fps source means source indices 0, 3, 6, ...
        path = write_video(24.0, 51, step=5)
        seq = sample_frames(path)
        assert seq.num_frames == 16
        for k, frame in enumerate(seq.frames):
            value = float(np.median(frame))
            assert round(value / 5) == 3 * k, f"sampled frame {k} is off"

    def test_short_video_returns_all_frames(self, write_video):
        path = write_video(8.0, 8, step=10)
        seq = sample_frames(path)
        assert seq.num_frames == 8
        for k, frame in enumerate(seq.frames):
            assert round(float(np.median(frame)) / 10) == k

    def test_decode_is_deterministic(self, write_video):
        path = write_video(24.0, 30, step=7)
        a = sample_frames(path)
        b = sample_frames(path)
        for fa, fb in zip(a.frames, b.frames):
            np.testing.assert_array_equal(fa, fb)

    def test_sample_dt_is_one_frame_unit(self, write_video):
        assert sample_frames(write_video(24.0, 30)).sample_dt == 1.0


class TestPreprocess:
    def seq_of(self, *frames):
        return FrameSequence(tuple(frames), source_fps=8.0)

    def test_output_shape_contract(self):
        rng = np.random.default_rng(0)
        for h, w in [(1000, 500), (500, 1000), (448, 448), (224, 224), (100, 300)]:
            frame = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
            out = preprocess(self.seq_of(frame))
            assert out.frames[0].shape == (224, 224, 3)

    def test_crop_removes_ten_percent_of_longer_edge_only(self):
        # 1000x500: crop strips the outer 50 columns per side; paint them
        # white and the interior dark, then check no white survives.
        frame = np.full((500, 1000, 3), 30, dtype=np.uint8)
        frame[:, :50] = 255
        frame[:, -50:] = 255
        out = preprocess(self.seq_of(frame))
        assert out.frames[0].max() < 200

    def test_shorter_edge_is_not_cropped(self):
        # Rows survive in full: white stripes on the top/bottom edges of the
        # SHORTER dimension must still be present after preprocessing.
        frame = np.full((500, 1000, 3), 30, dtype=np.uint8)
        frame[:10] = 255
        frame[-10:] = 255
        out = preprocess(self.seq_of(frame))
        assert out.frames[0][0].max() > 200
        assert out.frames[0][-1].max() > 200

    def test_square_input_ties_crop_the_width(self):
        # on a square frame the width is the one that gets cropped
        cols = np.full((100, 100, 3), 30, dtype=np.uint8)
        cols[:, :5] = 255  # 5 = round(0.05 * 100) columns per side
        cols[:, -5:] = 255
        assert preprocess(self.seq_of(cols)).frames[0].max() < 200
        rows = np.full((100, 100, 3), 30, dtype=np.uint8)
        rows[:5] = 255
        rows[-5:] = 255
        out = preprocess(self.seq_of(rows)).frames[0]
        assert out[0].max() > 200 and out[-1].max() > 200

    def test_solid_color_survives_jpeg(self):
        frame = np.full((224, 224, 3), 153, dtype=np.uint8)
        out = preprocess(self.seq_of(frame))
        assert int(np.abs(out.frames[0].astype(int) - 153).max()) <= 2

    def test_order_preserved(self):
        frames = [np.full((64, 64, 3), v, dtype=np.uint8) for v in (0, 100, 200)]
        out = preprocess(self.seq_of(*frames))
        medians = [float(np.median(f)) for f in out.frames]
        assert medians == sorted(medians)

    def test_determinism_bit_identical(self):
        rng = np.random.default_rng(1)
        frame = rng.integers(0, 256, size=(300, 200, 3), dtype=np.uint8)
        a = preprocess(self.seq_of(frame))
        b = preprocess(self.seq_of(frame.copy()))
        np.testing.assert_array_equal(a.frames[0], b.frames[0])

    def test_tiny_frame_rejected(self):
        frame = np.zeros((1, 10, 3), dtype=np.uint8)
        with pytest.raises(FrameTooSmallError):
            preprocess(self.seq_of(frame))


class TestJpegRoundtrip:
    def test_flat_image_nearly_unchanged(self):
        frame = np.full((64, 64, 3), 90, dtype=np.uint8)
        out = jpeg_roundtrip(frame, 95)
        assert int(np.abs(out.astype(int) - 90).max()) <= 2

    def test_shape_preserved(self):
        rng = np.random.default_rng(2)
        frame = rng.integers(0, 256, size=(48, 80, 3), dtype=np.uint8)
        assert jpeg_roundtrip(frame, 80).shape == frame.shape


class TestFrameSequence:
    def test_empty_rejected(self):
        with pytest.raises(EmptySourceError):
            FrameSequence((), source_fps=8.0)

    def test_wrong_dtype_rejected(self):
        with pytest.raises(ValueError):
            FrameSequence((np.zeros((4, 4, 3), dtype=np.float32),), source_fps=8.0)

    def test_wrong_channel_count_rejected(self):
        with pytest.raises(ValueError):
            FrameSequence((np.zeros((4, 4), dtype=np.uint8),), source_fps=8.0)
