"""Independent reference implementations used to cross-check the library.

Everything here is written the most naive way available (scalar Python
loops, fractions.Fraction, direct formulas) and shares no code with the
package, so agreement is meaningful evidence rather than a tautology.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


# ---------------------------------------------------------------- features


def l2_first_order(vectors, dt: float) -> list[float]:
    """Pairwise Euclidean distance over dt, one scalar pair at a time."""
    out = []
    for a, b in zip(vectors[:-1], vectors[1:]):
        acc = 0.0
        for x, y in zip(a, b):
            acc += (float(y) - float(x)) ** 2
        out.append(math.sqrt(acc) / dt)
    return out


def cosine_first_order(vectors, dt: float) -> list[float]:
    out = []
    for a, b in zip(vectors[:-1], vectors[1:]):
        dot = na = nb = 0.0
        for x, y in zip(a, b):
            dot += float(x) * float(y)
            na += float(x) ** 2
            nb += float(y) ** 2
        out.append(dot / (math.sqrt(na) * math.sqrt(nb)) / dt)
    return out


def diff_over_dt(values, dt: float) -> list[float]:
    return [(float(b) - float(a)) / dt for a, b in zip(values[:-1], values[1:])]


def sample_std(values) -> float:
    """Bessel-corrected standard deviation, denominator len - 1."""
    n = len(values)
    mean = sum(float(v) for v in values) / n
    var = sum((float(v) - mean) ** 2 for v in values) / (n - 1)
    return math.sqrt(var)


# ----------------------------------------------------------------- metrics


def ap_fraction(scored: list[tuple[float, int]]) -> Fraction:
    """Riemann-sum AP: sum of (recall step) * (precision) over tied blocks.

    Ties form one block; both precision and the recall step are taken at the
    block end. Exact rational arithmetic throughout.
    """
    n_pos = sum(label for _, label in scored)
    if n_pos == 0:
        raise ValueError("no positives")
    by_score: dict[float, list[int]] = {}
    for score, label in scored:
        by_score.setdefault(score, []).append(label)
    tp = fp = 0
    ap = Fraction(0)
    prev_recall = Fraction(0)
    for score in sorted(by_score, reverse=True):
        labels = by_score[score]
        tp += sum(labels)
        fp += len(labels) - sum(labels)
        recall = Fraction(tp, n_pos)
        precision = Fraction(tp, tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def auroc_fraction(scored: list[tuple[float, int]]) -> Fraction:
    """All-pairs Mann-Whitney count with half credit for ties."""
    pos = [s for s, label in scored if label == 1]
    neg = [s for s, label in scored if label == 0]
    if not pos or not neg:
        raise ValueError("need both classes")
    total = Fraction(0)
    for p in pos:
        for n in neg:
            if p > n:
                total += 1
            elif p == n:
                total += Fraction(1, 2)
    return total / (len(pos) * len(neg))


# -------------------------------------------------------------- robustness


def blur2d_reference(frame: np.ndarray, kernel1d: np.ndarray) -> np.ndarray:
    """Non-separable 2-D blur: symmetric padding, full outer-product kernel."""
    radius = (len(kernel1d) - 1) // 2
    kernel2d = np.outer(kernel1d, kernel1d)
    out = np.empty(frame.shape, dtype=np.float64)
    for c in range(frame.shape[2]):
        padded = np.pad(frame[:, :, c].astype(np.float64), radius, mode="symmetric")
        windows = sliding_window_view(padded, kernel2d.shape)
        out[:, :, c] = np.einsum("hwij,ij->hw", windows, kernel2d)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


# ------------------------------------------------------------------ synth


def integrate_reference(
    a2: float,
    a1: float,
    a0: float,
    x0,
    v0,
    dt: float,
    steps: int,
    refine: int = 100,
) -> np.ndarray:
    """Unforced semi-implicit Euler at dt/refine, sampled at the coarse times."""
    h = dt / refine
    x = np.asarray(x0, dtype=np.float64).copy()
    v = np.asarray(v0, dtype=np.float64).copy()
    out = np.empty((steps, len(x)), dtype=np.float64)
    out[0] = x
    for k in range(1, steps):
        for _ in range(refine):
            a = (-a1 * v - a0 * x) / a2
            v = v + a * h
            x = x + v * h
        out[k] = x
    return out


def mechanical_energy(a2: float, a0: float, x: np.ndarray, v: np.ndarray) -> float:
    return 0.5 * a2 * float(np.dot(v, v)) + 0.5 * a0 * float(np.dot(x, x))
