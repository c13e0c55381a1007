import warnings

import numpy as np
import pytest

from stnlffm import (
    FusionConfig,
    FusionTask,
    RasterGrid,
    ReferencePair,
    SceneSpec,
    SimilarityParams,
    WeightParams,
    generate_series,
)


@pytest.fixture(autouse=True)
def _quiet_range_warnings():
    # cubic overshoot on synthetic edges routinely leaves [0, 1] by a hair
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="reflectance outside")
        yield


def small_config(**kw) -> FusionConfig:
    """Windows small enough for the pure-Python oracle."""
    sim = dict(search_window=9, cap=15)
    wts = dict(patch_size=3, whole_window=9)
    sim.update(kw.pop("similarity", {}))
    wts.update(kw.pop("weights", {}))
    return FusionConfig(similarity=SimilarityParams(**sim), weights=WeightParams(**wts), **kw)


def uniform_grid(value, height=12, width=12, bands=1):
    return RasterGrid(np.full((bands, height, width), value))


def series_task(spec: SceneSpec, dates, target_index):
    frames = generate_series(spec, dates)
    refs = tuple(f.pair() for i, f in enumerate(frames) if i != target_index)
    target = frames[target_index]
    return FusionTask(refs, target.coarse, target.date_tag), target


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_class_task():
    spec = SceneSpec(width=16, height=16, band_count=2, class_count=2, cell_size=3,
                     resolution_ratio=4, knot_dates=[0, 60], noise_sigma=0.003, seed=7)
    task, _ = series_task(spec, [0, 30, 60], 1)
    return task


def pair(date, fine, coarse):
    return ReferencePair(date, fine, coarse)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(test_acceptance.RESULTS):
        ok, detail = test_acceptance.RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
