"""Shared fixtures: synthetic corpora, cached full-corpus runs, video factory."""

from __future__ import annotations

import sys
import time
from contextlib import contextmanager
from pathlib import Path

import cv2
import numpy as np
import pytest
from hypothesis import settings

from d3video import (
    FeatureOrder,
    RunConfig,
    default_grid,
    make_corpus,
    run_detection,
    sweep,
)

sys.path.insert(0, str(Path(__file__).parent))  # makes oracles importable

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

# Acceptance tests register (number, description, status) here; the summary
# hook prints one line per criterion after the run.
CRITERION_RESULTS: list[tuple[int, str, str]] = []

# Wall time spent building the expensive session fixtures, so timed criteria
# can charge for the work without rebuilding it.
FIXTURE_TIMINGS: dict[str, float] = {}


@contextmanager
def criterion(number: int, description: str):
    try:
        yield
    except pytest.skip.Exception:
        CRITERION_RESULTS.append((number, description, "SKIP"))
        raise
    except BaseException:
        CRITERION_RESULTS.append((number, description, "FAIL"))
        raise
    CRITERION_RESULTS.append((number, description, "PASS"))


def pytest_terminal_summary(terminalreporter):
    if not CRITERION_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, status in sorted(CRITERION_RESULTS):
        terminalreporter.write_line(f"{status} criterion {number}: {description}")


@pytest.fixture(scope="session")
def corpus100(tmp_path_factory) -> Path:
    """Default-parameter corpus at acceptance scale: 100 real + 100 clones."""
    out = tmp_path_factory.mktemp("corpus100")
    t0 = time.perf_counter()
    manifest = make_corpus(100, 100, out)
    FIXTURE_TIMINGS["corpus100"] = time.perf_counter() - t0
    return manifest


@pytest.fixture(scope="session")
def corpus_small(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("corpus_small")
    return make_corpus(6, 6, out)


@pytest.fixture(scope="session")
def run100_second(corpus100):
    """Unperturbed second-order run over the full corpus, with series."""
    t0 = time.perf_counter()
    run = run_detection(corpus100, RunConfig(workers=8), collect_series=True)
    FIXTURE_TIMINGS["run100_second"] = time.perf_counter() - t0
    return run


@pytest.fixture(scope="session")
def run100_first(corpus100):
    return run_detection(corpus100, RunConfig(workers=8, feature_order=FeatureOrder.FIRST))


@pytest.fixture(scope="session")
def sweep100(corpus100):
    """The full ten-point blur/JPEG sweep over the acceptance corpus."""
    return sweep(corpus100, RunConfig(workers=8), default_grid())


@pytest.fixture(scope="session")
def clip_real(corpus_small) -> Path:
    return corpus_small.parent / "real_0000"


@pytest.fixture(scope="session")
def clip_fake(corpus_small) -> Path:
    return corpus_small.parent / "fake_0000"


@pytest.fixture()
def write_video(tmp_path):
    """Factory writing a solid-color counter video: frame k has value k*step."""

    def build(
        fps: float,
        n_frames: int,
        *,
        step: int = 5,
        size: int = 64,
        name: str = "clip",
    ) -> Path:
        assert (n_frames - 1) * step <= 255, "values must fit in uint8"
        for fourcc, suffix in (("MJPG", ".avi"), ("mp4v", ".mp4")):
            path = tmp_path / f"{name}{suffix}"
            writer = cv2.VideoWriter(
                str(path), cv2.VideoWriter_fourcc(*fourcc), fps, (size, size)
            )
            if not writer.isOpened():
                writer.release()
                continue
            for k in range(n_frames):
                frame = np.full((size, size, 3), k * step, dtype=np.uint8)
                writer.write(frame)
            writer.release()
            return path
        pytest.skip("no working video codec available")

    return build
