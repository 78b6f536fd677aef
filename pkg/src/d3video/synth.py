"""Synthetic motion fixtures with known temporal statistics.

A "real-like" clip is a bright square driven by a damped second-order system
with per-step Gaussian force noise, so its speed fluctuates step to step. Its
"generated-like" counterpart keeps every 4th trajectory point and linearly
interpolates between them: piecewise-constant velocity, near-zero second
differences. The two classes are tuned to have closely matched mean speeds,
so only higher-order temporal statistics separate them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import cv2
import numpy as np

from .errors import ShapeError

CANVAS_SIZE = 256
SQUARE_SIZE = 16
SQUARE_VALUE = 230.0
EDGE_FEATHER = 3.0  # px over which the square's edge ramps to background
BACKGROUND_MEAN = 90.0
BACKGROUND_CONTRAST = 25.0  # two plane waves: gray in [40, 140]
BACKGROUND_WAVELENGTH = (64.0, 96.0)  # coarse, so mild blur/JPEG keep it
KEYFRAME_EVERY = 4
SPEED_RANGE = (2.2, 3.4)  # px/step drift speed drawn per clip
START_BOX = 40.0  # clip start offset from canvas center, per axis
AMPLITUDE_JITTER = (0.35, 2.6)  # per-clip scale on force noise, log-uniform
REAL_SUBSET = "real"
FAKE_SUBSET = "smooth_clone"


@dataclass(frozen=True)
class DynamicsParams:
    """Coefficients of a2*x'' + a1*x' + a0*x = u with per-step noise u."""

    a2: float = 1.0
    a1: float = 1.5
    a0: float = 0.0
    force_noise_std: float = 0.7
    dt_sim: float = 1.0
    steps: int = 16
    seed: int = 0

    def __post_init__(self) -> None:
        if self.a2 <= 0:
            raise ValueError(f"a2 must be > 0, got {self.a2}")
        if self.a1 < 0 or self.a0 < 0:
            raise ValueError("a1 and a0 must be >= 0")
        if self.force_noise_std < 0:
            raise ValueError("force_noise_std must be >= 0")
        if self.dt_sim <= 0:
            raise ValueError(f"dt_sim must be > 0, got {self.dt_sim}")
        if self.steps < 4:
            raise ValueError(f"steps must be >= 4, got {self.steps}")


@dataclass(frozen=True)
class Trajectory:
    """2-D positions, one per step; index 0 is the initial state."""

    positions: np.ndarray

    def __post_init__(self) -> None:
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ShapeError(f"positions must be (steps, 2), got {pos.shape}")
        if not np.isfinite(pos).all():
            raise ValueError("positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return self.positions.shape[0]


def simulate_second_order(
    p: DynamicsParams,
    x0: tuple[float, float] = (0.0, 0.0),
    v0: tuple[float, float] = (0.0, 0.0),
    force_mean: tuple[float, float] = (0.0, 0.0),
    rng: np.random.Generator | None = None,
) -> Trajectory:
    """Integrate the system with semi-implicit Euler for p.steps states.

    Update per step: a_k = (u_k - a1*v_k - a0*x_k)/a2, then v += a_k*dt and
    x += v*dt with the already-updated v. Force u_k is Gaussian per axis with
    mean force_mean and std force_noise_std, drawn from rng (seeded from
    p.seed when rng is omitted).
    """
    if rng is None:
        rng = np.random.default_rng(p.seed)
    x = np.asarray(x0, dtype=np.float64).copy()
    v = np.asarray(v0, dtype=np.float64).copy()
    mean = np.asarray(force_mean, dtype=np.float64)
    positions = np.empty((p.steps, 2), dtype=np.float64)
    positions[0] = x
    for k in range(p.steps - 1):
        u = mean + p.force_noise_std * rng.standard_normal(2)
        a = (u - p.a1 * v - p.a0 * x) / p.a2
        v = v + a * p.dt_sim
        x = x + v * p.dt_sim
        positions[k + 1] = x
    return Trajectory(positions)


def smooth_clone(traj: Trajectory, key_every: int = KEYFRAME_EVERY) -> Trajectory:
    """Keyframe-and-interpolate copy: same endpoints, flattened in between.

    Keyframes are every key_every-th point plus the final one; interior points
    are linear interpolations, so velocity is constant inside each segment.
    """
    n = len(traj)
    if n < 2:
        raise ValueError(f"trajectory must have >= 2 points, got {n}")
    keys = sorted(set(range(0, n, key_every)) | {n - 1})
    t = np.arange(n, dtype=np.float64)
    kept = traj.positions[keys]
    out = np.column_stack(
        [np.interp(t, np.asarray(keys, dtype=np.float64), kept[:, axis]) for axis in (0, 1)]
    )
    return Trajectory(out)


def _background(rng: np.random.Generator) -> np.ndarray:
    """Smooth coarse texture: two random plane waves over a mid gray.

    Smoothness matters: a locally flat background keeps the embedding
    response to a moving square nearly position-independent, so the feature
    series reflects the dynamics rather than where the square happens to be.
    """
    yy, xx = np.mgrid[0:CANVAS_SIZE, 0:CANVAS_SIZE].astype(np.float64)
    gray = np.full((CANVAS_SIZE, CANVAS_SIZE), BACKGROUND_MEAN)
    for _ in range(2):
        wavelength = rng.uniform(*BACKGROUND_WAVELENGTH)
        theta = rng.uniform(0.0, 2.0 * np.pi)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        k = 2.0 * np.pi / wavelength
        gray += BACKGROUND_CONTRAST * np.cos(
            k * (np.cos(theta) * xx + np.sin(theta) * yy) + phase
        )
    return np.repeat(gray[:, :, None], 3, axis=2)


def _axis_coverage(center: float, size: int) -> tuple[int, np.ndarray]:
    """Per-pixel opacity along one axis: a size-wide plateau with soft edges.

    The ramp makes each pixel's value continuously differentiable in the
    square's position. Hard (area-sampled) edges would make the embedding
    response piecewise linear, and the slope kinks at pixel boundaries alias
    into second-order feature noise at constant velocity.
    """
    half = size / 2.0
    reach = half + EDGE_FEATHER
    lo = int(np.floor(center - reach))
    centers = lo + 0.5 + np.arange(int(np.ceil(2 * reach)) + 1, dtype=np.float64)
    cover = np.clip((reach - np.abs(centers - center)) / EDGE_FEATHER, 0.0, 1.0)
    return lo, cover


def _stamp_square(frame: np.ndarray, cx: float, cy: float) -> None:
    half = SQUARE_SIZE / 2.0
    cx = float(np.clip(cx, half, CANVAS_SIZE - half))
    cy = float(np.clip(cy, half, CANVAS_SIZE - half))
    x_lo, cov_x = _axis_coverage(cx, SQUARE_SIZE)
    y_lo, cov_y = _axis_coverage(cy, SQUARE_SIZE)
    x0, x1 = max(0, x_lo), min(CANVAS_SIZE, x_lo + len(cov_x))
    y0, y1 = max(0, y_lo), min(CANVAS_SIZE, y_lo + len(cov_y))
    alpha = np.outer(cov_y[y0 - y_lo : y1 - y_lo], cov_x[x0 - x_lo : x1 - x_lo])
    region = frame[y0:y1, x0:x1]
    frame[y0:y1, x0:x1] = region + alpha[:, :, None] * (SQUARE_VALUE - region)


def render_clip(traj: Trajectory, out_dir: Path, rng: np.random.Generator) -> Path:
    """Write one PNG per trajectory point over a static textured background."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    background = _background(rng)
    for k, (cx, cy) in enumerate(traj.positions):
        frame = background.copy()
        _stamp_square(frame, cx, cy)
        img = np.clip(np.rint(frame), 0, 255).astype(np.uint8)
        ok = cv2.imwrite(str(out_dir / f"{k:04d}.png"), cv2.cvtColor(img, cv2.COLOR_RGB2BGR))
        if not ok:
            raise OSError(f"could not write frame {k} under {out_dir}")
    return out_dir


def _clip_trajectory(params: DynamicsParams, rng: np.random.Generator) -> Trajectory:
    """Drifting square with jittery speed, simulated around the origin.

    A constant force a1*v_drift holds the terminal velocity while the heavy
    damping turns the white force noise into nearly independent per-step
    velocity jitter; that jitter is what the smooth clone flattens out. The
    per-clip amplitude jitter (log-uniform, so small amplitudes are common)
    widens both classes' score spread without moving their ratio.
    """
    lo, hi = AMPLITUDE_JITTER
    jitter = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
    speed = rng.uniform(*SPEED_RANGE)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    start = CANVAS_SIZE / 2.0 + rng.uniform(-START_BOX, START_BOX, size=2)
    v_drift = (speed * np.cos(theta), speed * np.sin(theta))
    p = replace(params, force_noise_std=params.force_noise_std * jitter)
    traj = simulate_second_order(
        p,
        x0=(0.0, 0.0),
        v0=v_drift,
        force_mean=(p.a1 * v_drift[0], p.a1 * v_drift[1]),
        rng=rng,
    )
    return Trajectory(traj.positions + start)


def make_corpus(
    n_real: int,
    n_fake: int,
    out_dir: Path,
    params: DynamicsParams | None = None,
) -> Path:
    """Build a labeled corpus of rendered clips and return the manifest path.

    Clip i (real clips first, then fakes) draws its RNG from the seed pair
    (params.seed, i), so the whole corpus is reproducible and any clip can be
    regenerated alone. Fake clips are smooth clones of their own trajectories,
    not of any real clip's.
    """
    if n_real < 1 or n_fake < 1:
        raise ValueError("need at least one clip per class")
    params = params or DynamicsParams()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(n_real + n_fake):
        rng = np.random.default_rng(np.random.SeedSequence((params.seed, i)))
        traj = _clip_trajectory(params, rng)
        is_fake = i >= n_real
        if is_fake:
            traj = smooth_clone(traj)
        name = f"fake_{i - n_real:04d}" if is_fake else f"real_{i:04d}"
        render_clip(traj, out_dir / name, rng)
        entries.append(
            {
                "path": name,
                "label": 1 if is_fake else 0,
                "subset": FAKE_SUBSET if is_fake else REAL_SUBSET,
                "id": name,
            }
        )
    manifest = out_dir / "manifest.jsonl"
    with open(manifest, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry) + "\n")
    return manifest
