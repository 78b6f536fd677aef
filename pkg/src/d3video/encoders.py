"""Pluggable per-frame visual encoders.

Two deterministic toy encoders (luminance grid, seeded random projection) let
the whole pipeline and its tests run with zero downloaded weights; the
external runner loads a user-supplied TorchScript image encoder with
[1, 3, 224, 224] float input and a single vector output.
"""

from __future__ import annotations

import functools
import threading
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, EncoderNumericError, ModelError, ShapeError
from .features import EmbeddingSeries
from .frames import FRAME_SIZE, FrameSequence

LUMINANCE_GRID_CELLS = 16  # output grid is 16x16 = 256 dims
_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)  # Rec. 601


class EncoderKind(str, Enum):
    EXTERNAL_MODEL = "external"
    LUMINANCE_GRID = "luminance_grid"
    RANDOM_PROJECTION = "random_projection"


@dataclass(frozen=True)
class EncoderConfig:
    """Encoder selection plus the constants a backbone swap would change.

    ``input_mean``/``input_std`` normalize [0,1] pixels for the external
    model; ``output_name`` selects the output when a model returns a dict
    (key) or tuple (index); ``seed`` fixes the random-projection matrix.
    """

    kind: EncoderKind = EncoderKind.LUMINANCE_GRID
    model_path: str | None = None
    input_mean: tuple[float, float, float] = (0.0, 0.0, 0.0)
    input_std: tuple[float, float, float] = (1.0, 1.0, 1.0)
    output_dim: int = 256
    seed: int | None = None
    output_name: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", EncoderKind(self.kind))
        object.__setattr__(self, "input_mean", tuple(float(v) for v in self.input_mean))
        object.__setattr__(self, "input_std", tuple(float(v) for v in self.input_std))
        if len(self.input_mean) != 3 or len(self.input_std) != 3:
            raise ConfigError("input_mean and input_std must each have 3 components")
        if any(s <= 0 for s in self.input_std):
            raise ConfigError(f"input_std components must be > 0, got {self.input_std}")
        if self.output_dim < 1:
            raise ConfigError(f"output_dim must be >= 1, got {self.output_dim}")
        if self.kind is EncoderKind.EXTERNAL_MODEL:
            if not self.model_path:
                raise ConfigError("external encoder requires model_path")
        elif self.model_path is not None:
            raise ConfigError(f"{self.kind.value} encoder does not take model_path")
        if self.seed is not None and self.kind is not EncoderKind.RANDOM_PROJECTION:
            raise ConfigError("seed applies to the random_projection encoder only")
        if self.kind is EncoderKind.LUMINANCE_GRID and self.output_dim != LUMINANCE_GRID_CELLS**2:
            raise ConfigError(
                f"luminance_grid output_dim is fixed at {LUMINANCE_GRID_CELLS ** 2}, "
                f"got {self.output_dim}"
            )


def luminance_grid(frame: np.ndarray) -> np.ndarray:
    """Mean-pool frame luminance into a flattened 16x16 grid in [0, 1]."""
    h, w = frame.shape[:2]
    cell = h // LUMINANCE_GRID_CELLS
    luma = frame.astype(np.float64) @ _LUMA_WEIGHTS / 255.0
    grid = luma.reshape(LUMINANCE_GRID_CELLS, cell, LUMINANCE_GRID_CELLS, cell).mean(axis=(1, 3))
    return grid.ravel()


@functools.lru_cache(maxsize=8)
def _projection_matrix(seed: int, output_dim: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    mat = rng.standard_normal((LUMINANCE_GRID_CELLS**2, output_dim)) / np.sqrt(
        LUMINANCE_GRID_CELLS**2
    )
    mat.setflags(write=False)
    return mat


class ExternalModelSession:
    """One loaded TorchScript model; concurrent calls are serialized.

    Callers wanting parallel external encoding should hold one session per
    worker.
    """

    def __init__(self, cfg: EncoderConfig):
        if cfg.kind is not EncoderKind.EXTERNAL_MODEL:
            raise ConfigError("session requires an external-model config")
        try:
            import torch
        except ImportError as exc:  # pragma: no cover - torch is an optional extra
            raise ModelError("external encoder requires the optional 'torch' dependency") from exc
        self._torch = torch
        self._cfg = cfg
        self._lock = threading.Lock()
        try:
            self._model = torch.jit.load(cfg.model_path, map_location="cpu")
        except Exception as exc:
            raise ModelError(f"could not load TorchScript model {cfg.model_path!r}: {exc}") from exc
        self._model.eval()
        self._mean = torch.tensor(cfg.input_mean, dtype=torch.float32).view(1, 3, 1, 1)
        self._std = torch.tensor(cfg.input_std, dtype=torch.float32).view(1, 3, 1, 1)

    def _select_output(self, out):
        name = self._cfg.output_name
        if isinstance(out, dict):
            if name is None:
                if len(out) != 1:
                    raise ModelError(
                        f"model returns {sorted(out)}; set output_name to choose one"
                    )
                return next(iter(out.values()))
            if name not in out:
                raise ModelError(f"model output has no entry {name!r} (has {sorted(out)})")
            return out[name]
        if isinstance(out, (tuple, list)):
            index = int(name) if name is not None else 0
            try:
                return out[index]
            except (IndexError, ValueError) as exc:
                raise ModelError(f"cannot select output {name!r} from a {len(out)}-tuple") from exc
        return out

    def encode_frame(self, frame: np.ndarray) -> np.ndarray:
        torch = self._torch
        x = torch.from_numpy(np.ascontiguousarray(frame)).to(torch.float32) / 255.0
        x = x.permute(2, 0, 1).unsqueeze(0)
        x = (x - self._mean) / self._std
        with self._lock, torch.no_grad():
            out = self._select_output(self._model(x))
        if not torch.is_tensor(out):
            raise ModelError(f"selected model output is not a tensor: {type(out).__name__}")
        vec = out.detach().cpu().numpy().astype(np.float64).squeeze()
        if vec.ndim != 1 or vec.shape[0] != self._cfg.output_dim:
            raise ModelError(
                f"model output has shape {tuple(out.shape)}, expected a vector of "
                f"dimension {self._cfg.output_dim}"
            )
        return vec


def _check_frame_shape(seq: FrameSequence) -> None:
    for i, frame in enumerate(seq.frames):
        if frame.shape != (FRAME_SIZE, FRAME_SIZE, 3):
            raise ShapeError(
                f"frame {i} has shape {frame.shape}; encoder input must be preprocessed "
                f"to {FRAME_SIZE}x{FRAME_SIZE}x3"
            )


def encode(
    seq: FrameSequence, cfg: EncoderConfig, session: ExternalModelSession | None = None
) -> EmbeddingSeries:
    """Encode one preprocessed clip into per-frame vectors (order preserved)."""
    _check_frame_shape(seq)
    if cfg.kind is EncoderKind.LUMINANCE_GRID:
        vectors = np.stack([luminance_grid(f) for f in seq.frames])
    elif cfg.kind is EncoderKind.RANDOM_PROJECTION:
        mat = _projection_matrix(cfg.seed if cfg.seed is not None else 0, cfg.output_dim)
        vectors = np.stack([luminance_grid(f) @ mat for f in seq.frames])
    else:
        session = session or ExternalModelSession(cfg)
        vectors = np.stack([session.encode_frame(f) for f in seq.frames])
    if not np.isfinite(vectors).all():
        raise EncoderNumericError("encoder produced NaN or Inf feature values")
    return EmbeddingSeries(vectors, dt=seq.sample_dt)


def encode_batch(
    seqs: list[FrameSequence],
    cfg: EncoderConfig,
    *,
    collect_errors: bool = False,
) -> list[EmbeddingSeries] | tuple[list[EmbeddingSeries | None], list[tuple[int, Exception]]]:
    """Encode several clips; elementwise equal to per-item :func:`encode`.

    Fail-fast by default; with ``collect_errors`` failed slots become None and
    (index, exception) pairs are returned alongside.
    """
    session = ExternalModelSession(cfg) if cfg.kind is EncoderKind.EXTERNAL_MODEL and seqs else None
    if not collect_errors:
        return [encode(seq, cfg, session) for seq in seqs]
    results: list[EmbeddingSeries | None] = []
    failures: list[tuple[int, Exception]] = []
    for i, seq in enumerate(seqs):
        try:
            results.append(encode(seq, cfg, session))
        except Exception as exc:
            results.append(None)
            failures.append((i, exc))
    return results, failures
