"""Post-processing perturbations and the robustness sweep grid.

Perturbations model what a re-upload does to a clip: Gaussian blur and JPEG
recompression. They are applied per frame after preprocessing and before
encoding, so every grid point sees identical sampling and geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from scipy.ndimage import convolve1d

from .errors import ConfigError, ShapeError
from .frames import jpeg_roundtrip

if TYPE_CHECKING:  # pragma: no cover - import cycle is runtime-only
    from .harness import RunConfig, SweepResult
    from .metrics import EvalReport


class PerturbationKind(str, Enum):
    IDENTITY = "identity"
    GAUSSIAN_BLUR = "blur"
    JPEG_COMPRESS = "jpeg"


@dataclass(frozen=True)
class Perturbation:
    """One grid point: identity, blur(sigma), or jpeg(quality)."""

    kind: PerturbationKind
    sigma: float | None = None
    quality: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", PerturbationKind(self.kind))
        if self.kind is PerturbationKind.GAUSSIAN_BLUR:
            if self.sigma is None or self.quality is not None:
                raise ConfigError("blur takes sigma and nothing else")
            object.__setattr__(self, "sigma", float(self.sigma))
            if not (math.isfinite(self.sigma) and self.sigma >= 0):
                raise ConfigError(f"blur sigma must be finite and >= 0, got {self.sigma}")
        elif self.kind is PerturbationKind.JPEG_COMPRESS:
            if self.quality is None or self.sigma is not None:
                raise ConfigError("jpeg takes quality and nothing else")
            object.__setattr__(self, "quality", int(self.quality))
            if not 1 <= self.quality <= 100:
                raise ConfigError(f"jpeg quality must be in [1, 100], got {self.quality}")
        elif self.sigma is not None or self.quality is not None:
            raise ConfigError("identity carries no parameters")

    @classmethod
    def identity(cls) -> "Perturbation":
        return cls(PerturbationKind.IDENTITY)

    @classmethod
    def blur(cls, sigma: float) -> "Perturbation":
        return cls(PerturbationKind.GAUSSIAN_BLUR, sigma=sigma)

    @classmethod
    def jpeg(cls, quality: int) -> "Perturbation":
        return cls(PerturbationKind.JPEG_COMPRESS, quality=quality)

    @property
    def is_noop(self) -> bool:
        """True when apply() returns the input bit-identically."""
        return self.kind is PerturbationKind.IDENTITY or (
            self.kind is PerturbationKind.GAUSSIAN_BLUR and self.sigma == 0
        )

    @property
    def label(self) -> str:
        if self.kind is PerturbationKind.GAUSSIAN_BLUR:
            return f"blur_sigma{self.sigma:g}"
        if self.kind is PerturbationKind.JPEG_COMPRESS:
            return f"jpeg_q{self.quality}"
        return "identity"


def gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D Gaussian truncated at radius ceil(3*sigma), renormalized."""
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(x**2) / (2 * sigma**2))
    return w / w.sum()


def apply_perturbation(frame: np.ndarray, p: Perturbation) -> np.ndarray:
    """Perturb one RGB uint8 frame; dimensions are never changed.

    Blur is a separable 2-D Gaussian with reflect padding; sigma = 0 returns
    the input unchanged.
    """
    if frame.ndim != 3 or frame.shape[2] != 3 or frame.dtype != np.uint8:
        raise ShapeError(f"expected HxWx3 uint8 frame, got {frame.shape} {frame.dtype}")
    if p.is_noop:
        return frame
    if p.kind is PerturbationKind.JPEG_COMPRESS:
        return jpeg_roundtrip(frame, quality=p.quality)
    kernel = gaussian_kernel(p.sigma)
    blurred = frame.astype(np.float64)
    blurred = convolve1d(blurred, kernel, axis=0, mode="reflect")
    blurred = convolve1d(blurred, kernel, axis=1, mode="reflect")
    return np.clip(np.rint(blurred), 0, 255).astype(np.uint8)


def default_grid() -> list[Perturbation]:
    """Blur sigmas 0..4 plus JPEG qualities 100..60, ten points."""
    return [Perturbation.blur(s) for s in (0, 1, 2, 3, 4)] + [
        Perturbation.jpeg(q) for q in (100, 90, 80, 70, 60)
    ]


def grid_from_levels(
    blur_sigmas: Iterable[float] = (), jpeg_qualities: Iterable[int] = ()
) -> list[Perturbation]:
    grid = [Perturbation.blur(s) for s in blur_sigmas]
    grid += [Perturbation.jpeg(q) for q in jpeg_qualities]
    if not grid:
        raise ConfigError("sweep grid is empty")
    return grid


def sweep(
    manifest_path, config: "RunConfig", grid: Sequence[Perturbation], *, workers: int | None = None
) -> "SweepResult":
    """Run the full pipeline once per grid point and evaluate each run.

    A failing grid point is recorded and does not abort the others.
    """
    import dataclasses

    from .harness import SweepResult, evaluate, run_detection

    if not grid:
        raise ConfigError("sweep grid is empty")
    reports: dict[Perturbation, "EvalReport"] = {}
    failures: list[tuple[Perturbation, Exception]] = []
    for p in grid:
        effective = dataclasses.replace(config, perturbation=p)
        try:
            run = run_detection(manifest_path, effective, workers=workers)
            reports[p] = evaluate(run, config=effective)
        except Exception as exc:
            failures.append((p, exc))
    return SweepResult(reports=reports, failures=failures)


def find_baseline(reports: dict[Perturbation, "EvalReport"]) -> Perturbation:
    """The grid point whose perturbation is a no-op, used as ΔmAP reference."""
    for p in reports:
        if p.is_noop:
            return p
    raise ConfigError("sweep grid has no unperturbed point (identity or blur sigma 0)")


def degradation_rows(reports: dict[Perturbation, "EvalReport"]) -> list[list[str]]:
    """CSV rows: perturbation label, per-subset APs, mAP, ΔmAP vs. baseline."""
    baseline = reports[find_baseline(reports)].mean_ap
    subsets = sorted({name for r in reports.values() for name in r.per_subset})
    header = ["perturbation"] + [f"ap_{name}" for name in subsets] + ["mAP", "delta_mAP"]
    rows = [header]
    for p, report in reports.items():
        cells = [p.label]
        cells += [
            repr(report.per_subset[name].ap) if name in report.per_subset else ""
            for name in subsets
        ]
        cells += [repr(report.mean_ap), repr(report.mean_ap - baseline)]
        rows.append(cells)
    return rows
