"""Temporal feature chain scoring a clip by the volatility of its embedding dynamics.

Given per-frame embedding vectors F0, the chain computes first-order features
(inter-frame L2 distance or cosine similarity, divided by the sampling
interval), second-order features (first differences of the first-order series,
divided by the interval again), and finally the sample standard deviation of
the second-order series. Real footage tends to produce a volatile second-order
series while generated footage is flatter, so the negated deviation ranks the
generated class high.

All operations are pure; values are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateVectorError, ShapeError, TooFewFramesError


class DistanceKind(str, Enum):
    """How the first-order inter-frame feature is computed."""

    L2 = "l2"
    COSINE = "cosine"


class FeatureOrder(str, Enum):
    """Which feature series the final deviation is taken over."""

    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class EmbeddingSeries:
    """Per-frame feature vectors of one clip, in temporal order.

    ``vectors`` is a (T, N) float64 array; ``dt`` is the sampling interval in
    frame units. Inputs are widened to float64 on construction because the
    downstream differencing is cancellation-prone at lower precision.
    """

    vectors: np.ndarray
    dt: float = 1.0

    def __post_init__(self) -> None:
        try:
            arr = np.asarray(self.vectors, dtype=np.float64)
        except ValueError as exc:
            raise ShapeError(f"embedding vectors are ragged: {exc}") from exc
        if arr.ndim != 2:
            raise ShapeError(f"expected a (T, N) array of frame vectors, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ShapeError("need at least one frame vector")
        if arr.shape[1] < 1:
            raise ShapeError("embedding dimension must be >= 1")
        if not np.isfinite(arr).all():
            raise ValueError("embedding vectors contain NaN or Inf")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be a positive finite real, got {self.dt!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def num_frames(self) -> int:
        return int(self.vectors.shape[0])

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


@dataclass(frozen=True)
class ScalarSeries:
    """A first- or second-order scalar feature sequence with its sampling interval."""

    values: np.ndarray
    order: FeatureOrder
    dt: float = 1.0

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1:
            raise ShapeError(f"expected a 1-D series, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("series contains NaN or Inf")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be a positive finite real, got {self.dt!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "order", FeatureOrder(self.order))
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class DetectionScore:
    """Final score of one clip.

    ``sigma`` is the sample standard deviation of the feature series;
    ``fake_score`` is its negation so that the generated class (flat dynamics,
    low sigma) ranks high under AP/AUROC.
    """

    sigma: float
    feature_order: FeatureOrder
    distance_kind: DistanceKind

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be a non-negative finite real, got {self.sigma!r}")

    @property
    def fake_score(self) -> float:
        return -self.sigma


def first_order_l2(f0: EmbeddingSeries) -> ScalarSeries:
    """Per-step Euclidean distance between consecutive frame vectors, over dt.

    Returns a first-order series of length T-1.
    """
    if f0.num_frames < 2:
        raise TooFewFramesError(
            f"need at least 2 frames for first-order features, got {f0.num_frames}",
            required=2,
            actual=f0.num_frames,
        )
    steps = np.diff(f0.vectors, axis=0)
    values = np.linalg.norm(steps, axis=1) / f0.dt
    return ScalarSeries(values, FeatureOrder.FIRST, f0.dt)


def first_order_cosine(f0: EmbeddingSeries) -> ScalarSeries:
    """Per-step cosine similarity between consecutive frame vectors, over dt.

    Note this divides the *similarity* (not a dissimilarity) by dt, so the
    series is bounded by 1/dt and near-constant for visually similar frames;
    it exists as the normalized alternative to :func:`first_order_l2`.
    """
    if f0.num_frames < 2:
        raise TooFewFramesError(
            f"need at least 2 frames for first-order features, got {f0.num_frames}",
            required=2,
            actual=f0.num_frames,
        )
    norms = np.linalg.norm(f0.vectors, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        idx = int(zero[0])
        raise DegenerateVectorError(
            f"frame {idx} has a zero-norm embedding; cosine similarity is undefined",
            frame_index=idx,
        )
    dots = np.einsum("ij,ij->i", f0.vectors[:-1], f0.vectors[1:])
    values = dots / (norms[:-1] * norms[1:]) / f0.dt
    return ScalarSeries(values, FeatureOrder.FIRST, f0.dt)


def second_order_diff(f1: ScalarSeries) -> ScalarSeries:
    """First difference of a first-order series, over dt.

    Equivalent to the three-point second difference of the underlying signal
    at interior points; output length is one less than the input.
    """
    if f1.order is not FeatureOrder.FIRST:
        raise ValueError(f"expected a first-order series, got {f1.order.value}")
    if len(f1) < 2:
        raise TooFewFramesError(
            f"need a first-order series of length >= 2, got {len(f1)}",
            required=2,
            actual=len(f1),
        )
    return ScalarSeries(np.diff(f1.values) / f1.dt, FeatureOrder.SECOND, f1.dt)


def _min_frames(order: FeatureOrder) -> int:
    # T frames yield T-1 first-order and T-2 second-order values; the sample
    # deviation needs at least 2 values.
    return 4 if order is FeatureOrder.SECOND else 3


def sigma_score(
    series: ScalarSeries, distance_kind: DistanceKind = DistanceKind.L2
) -> DetectionScore:
    """Sample standard deviation of a feature series, as a detection score.

    Uses the Bessel-corrected deviation (denominator M-1 for M values, i.e.
    T-3 for the second-order series of a T-frame clip). ``distance_kind`` is
    carried through as provenance on the returned score.
    """
    if len(series) < 2:
        need = _min_frames(series.order)
        raise TooFewFramesError(
            f"need at least {need} frames for a {series.order.value}-order score "
            f"(series of length {len(series)} has no sample deviation)",
            required=need,
            actual=len(series) + (2 if series.order is FeatureOrder.SECOND else 1),
        )
    sigma = float(np.std(series.values, ddof=1))
    return DetectionScore(sigma, series.order, DistanceKind(distance_kind))


def d3_score(
    f0: EmbeddingSeries,
    distance_kind: DistanceKind = DistanceKind.L2,
    feature_order: FeatureOrder = FeatureOrder.SECOND,
) -> DetectionScore:
    """Full chain: first-order features, optional differencing, deviation.

    Second order (the default) needs T >= 4 frames; the first-order ablation
    needs T >= 3.
    """
    distance_kind = DistanceKind(distance_kind)
    feature_order = FeatureOrder(feature_order)
    need = _min_frames(feature_order)
    if f0.num_frames < need:
        raise TooFewFramesError(
            f"need at least {need} frames for a {feature_order.value}-order score, "
            f"got {f0.num_frames}",
            required=need,
            actual=f0.num_frames,
        )
    if distance_kind is DistanceKind.L2:
        f1 = first_order_l2(f0)
    else:
        f1 = first_order_cosine(f0)
    series = second_order_diff(f1) if feature_order is FeatureOrder.SECOND else f1
    return sigma_score(series, distance_kind)
