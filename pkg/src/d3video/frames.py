"""Decode a video file or frame directory into preprocessed frames.

Sampling takes frames at equal source-time intervals (default 8 per second,
up to 2 seconds) starting at t=0. Preprocessing center-crops 10% of the longer
dimension, resizes to 224x224 (bilinear) and round-trips each frame through
JPEG at quality 95. Everything is deterministic: identical input bytes and
policy produce bit-identical output.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import DecodeError, EmptySourceError, FrameTooSmallError

FRAME_SIZE = 224
_FRAME_FILE_RE = re.compile(r"\.(png|jpg|jpeg)$", re.IGNORECASE)
# Used when a container reports no frame rate; timestamps degrade to a nominal
# clock but sampling stays deterministic.
_FALLBACK_FPS = 30.0


@dataclass(frozen=True)
class SamplingPolicy:
    """Equal-interval sampling policy.

    ``max_frames`` defaults to floor(target_fps * max_duration_s).
    """

    target_fps: float = 8.0
    max_duration_s: float = 2.0
    max_frames: int | None = None

    def __post_init__(self) -> None:
        if not (self.target_fps > 0 and math.isfinite(self.target_fps)):
            raise ValueError(f"target_fps must be positive, got {self.target_fps!r}")
        if not (self.max_duration_s > 0 and math.isfinite(self.max_duration_s)):
            raise ValueError(f"max_duration_s must be positive, got {self.max_duration_s!r}")
        if self.max_frames is None:
            object.__setattr__(
                self, "max_frames", int(math.floor(self.target_fps * self.max_duration_s))
            )
        if self.max_frames < 1:
            raise ValueError(f"max_frames must be >= 1, got {self.max_frames!r}")

    def target_times(self) -> list[float]:
        """Source timestamps (seconds) at which frames are requested."""
        return [
            k / self.target_fps
            for k in range(self.max_frames)
            if k / self.target_fps < self.max_duration_s
        ]


@dataclass(frozen=True)
class FrameSequence:
    """Ordered decoded frames of one clip.

    Frames are HxWx3 uint8 RGB arrays; ``sample_dt`` is the sampling interval
    in frame units (1 by default, the unit downstream features are expressed in).
    """

    frames: tuple[np.ndarray, ...]
    source_fps: float
    sample_dt: float = 1.0

    def __post_init__(self) -> None:
        if len(self.frames) < 1:
            raise EmptySourceError("frame sequence is empty")
        for i, frame in enumerate(self.frames):
            if not (
                isinstance(frame, np.ndarray)
                and frame.dtype == np.uint8
                and frame.ndim == 3
                and frame.shape[2] == 3
            ):
                raise ValueError(f"frame {i} is not an HxWx3 uint8 array")
        if not (self.source_fps > 0 and math.isfinite(self.source_fps)):
            raise ValueError(f"source_fps must be positive, got {self.source_fps!r}")
        if not (self.sample_dt > 0 and math.isfinite(self.sample_dt)):
            raise ValueError(f"sample_dt must be positive, got {self.sample_dt!r}")
        object.__setattr__(self, "frames", tuple(self.frames))

    @property
    def num_frames(self) -> int:
        return len(self.frames)


def _numeric_sort_key(path: Path) -> tuple:
    digits = re.findall(r"\d+", path.stem)
    return (tuple(int(d) for d in digits), path.name)


def _sample_directory(directory: Path, policy: SamplingPolicy) -> FrameSequence:
    # Frame directories carry no timebase; they are treated as pre-sampled at
    # the target rate and consumed in numeric file order.
    files = sorted(
        (p for p in directory.iterdir() if p.is_file() and _FRAME_FILE_RE.search(p.name)),
        key=_numeric_sort_key,
    )
    if not files:
        raise EmptySourceError(f"no PNG/JPEG frames in directory: {directory}")
    frames = []
    for path in files[: policy.max_frames]:
        img = cv2.imread(str(path), cv2.IMREAD_COLOR)
        if img is None:
            raise DecodeError(f"could not decode frame image: {path}")
        frames.append(np.ascontiguousarray(img[:, :, ::-1]))
    return FrameSequence(tuple(frames), source_fps=policy.target_fps, sample_dt=1.0)


def _sample_video(path: Path, policy: SamplingPolicy) -> FrameSequence:
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise DecodeError(f"could not open video: {path}")
    try:
        fps = float(cap.get(cv2.CAP_PROP_FPS) or 0.0)
        if not (fps > 0 and math.isfinite(fps)):
            fps = _FALLBACK_FPS
        targets = policy.target_times()
        half_interval = 0.5 / fps
        selected: list[np.ndarray] = []
        j = 0  # next unserved target
        prev_ts: float | None = None
        prev_frame: np.ndarray | None = None
        index = 0
        while j < len(targets):
            ok, frame = cap.read()
            if not ok:
                break
            ts = index / fps
            # Serve every target that sits closer to the previous frame than
            # to this one (earlier frame wins exact ties).
            while j < len(targets) and prev_ts is not None and targets[j] - prev_ts <= ts - targets[j]:
                selected.append(prev_frame)  # type: ignore[arg-type]
                j += 1
            while j < len(targets) and targets[j] <= ts:
                selected.append(frame)
                j += 1
            prev_ts, prev_frame = ts, frame
            index += 1
        # Source exhausted: the last frame still serves targets within half a
        # frame interval; later targets are dropped (no extrapolation).
        while j < len(targets) and prev_ts is not None and targets[j] < prev_ts + half_interval:
            selected.append(prev_frame)  # type: ignore[arg-type]
            j += 1
    finally:
        cap.release()
    if not selected:
        raise EmptySourceError(f"video contains no frames: {path}")
    rgb = tuple(np.ascontiguousarray(f[:, :, ::-1]) for f in selected)
    return FrameSequence(rgb, source_fps=fps, sample_dt=1.0)


def sample_frames(source: str | Path, policy: SamplingPolicy | None = None) -> FrameSequence:
    """Decode ``source`` (video file or directory of numbered frames).

    Frames are taken at equal source-time intervals of 1/target_fps starting
    at t=0 and truncated at max_duration_s; short sources yield all available
    frames in order.
    """
    policy = policy or SamplingPolicy()
    path = Path(source)
    if path.is_dir():
        return _sample_directory(path, policy)
    if not path.exists():
        raise DecodeError(f"source does not exist: {path}")
    return _sample_video(path, policy)


def jpeg_roundtrip(frame: np.ndarray, quality: int) -> np.ndarray:
    """Encode an RGB frame as JPEG at ``quality`` and decode it back."""
    bgr = np.ascontiguousarray(frame[:, :, ::-1])
    ok, buf = cv2.imencode(".jpg", bgr, [int(cv2.IMWRITE_JPEG_QUALITY), int(quality)])
    if not ok:
        raise DecodeError("JPEG encoding failed")
    decoded = cv2.imdecode(buf, cv2.IMREAD_COLOR)
    if decoded is None:
        raise DecodeError("JPEG decoding failed")
    return np.ascontiguousarray(decoded[:, :, ::-1])


def _center_crop_longer(frame: np.ndarray) -> np.ndarray:
    h, w = frame.shape[:2]
    if w >= h:  # ties crop the width
        trim = round(0.05 * w)
        cropped = frame[:, trim : w - trim]
    else:
        trim = round(0.05 * h)
        cropped = frame[trim : h - trim]
    ch, cw = cropped.shape[:2]
    if ch < 2 or cw < 2:
        raise FrameTooSmallError(f"frame of size {w}x{h} is {cw}x{ch} after crop")
    return cropped


def preprocess(
    seq: FrameSequence, *, size: int = FRAME_SIZE, jpeg_quality: int = 95
) -> FrameSequence:
    """Center-crop 10% of the longer dimension, resize, JPEG round-trip.

    The crop removes 5% from each side of the longer dimension only; resize is
    bilinear to ``size`` x ``size``; the JPEG pass re-encodes at
    ``jpeg_quality`` so downstream encoders always see JPEG-domain pixels.
    """
    out = []
    for frame in seq.frames:
        cropped = _center_crop_longer(frame)
        resized = cv2.resize(cropped, (size, size), interpolation=cv2.INTER_LINEAR)
        out.append(jpeg_roundtrip(resized, jpeg_quality))
    return FrameSequence(tuple(out), source_fps=seq.source_fps, sample_dt=seq.sample_dt)
