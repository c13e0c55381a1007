import numpy as np
import pytest

from conftest import small_config
from stnlffm import FusionTask, RasterGrid, ReferencePair, SceneSpec, generate_series, oracle_predict
from stnlffm.errors import ConfigError
from stnlffm.synth import class_map, read_series, trajectory_values, write_series


class TestSceneSpec:
    def test_roundtrip(self, tmp_path):
        spec = SceneSpec(width=16, height=8, event_classes=[1], event_date=5.0, seed=9)
        p = tmp_path / "s.json"
        import json
        p.write_text(json.dumps(spec.to_dict()))
        assert SceneSpec.from_json(p) == spec

    @pytest.mark.parametrize("kw", [dict(width=10), dict(class_count=0), dict(class_map_mode="x"),
                                    dict(knot_dates=[5, 1]), dict(noise_sigma=-1),
                                    dict(knot_values=[[[0.1, 0.2]]])])
    def test_validation(self, kw):
        with pytest.raises(ConfigError):
            SceneSpec(**kw)


class TestGenerate:
    def test_deterministic_per_seed(self):
        spec = SceneSpec(noise_sigma=0.01, drift_sigma=1e-4, class_map_mode="voronoi_patches", seed=4)
        a = generate_series(spec, [0, 10])
        b = generate_series(spec, [0, 10])
        c = generate_series(SceneSpec(**{**spec.to_dict(), "seed": 5}), [0, 10])
        assert all(x.fine.data.tobytes() == y.fine.data.tobytes() for x, y in zip(a, b))
        assert a[1].fine.data.tobytes() != c[1].fine.data.tobytes()

    def test_constant_scene(self):
        spec = SceneSpec(width=8, height=8, band_count=2, class_count=1,
                         knot_dates=[0], knot_values=[[[0.2], [0.4]]])
        fr = generate_series(spec, [0, 50])[1]
        for g in (fr.fine, fr.coarse, fr.truth):
            np.testing.assert_allclose(g.data[0], np.float32(0.2), atol=1e-7)
            np.testing.assert_allclose(g.data[1], np.float32(0.4), atol=1e-7)

    def test_linear_trajectories(self):
        spec = SceneSpec(width=8, height=8, band_count=1, class_count=2, cell_size=2,
                         knot_dates=[0, 100], knot_values=[[[0.1, 0.3]], [[0.5, 0.2]]])
        labels = class_map(spec)
        for t in (0, 25, 100, 150):
            truth = generate_series(spec, [t])[0].truth.data[0]
            expect = np.where(labels == 0, 0.1 + 0.002 * t, 0.5 - 0.003 * t)
            np.testing.assert_allclose(truth, expect, atol=1e-7)

    def test_trajectory_piecewise(self):
        kv = np.array([[0.0, 1.0, 0.0]])
        assert trajectory_values([0, 10, 20], kv, 5)[0] == pytest.approx(0.5)
        assert trajectory_values([0, 10, 20], kv, 15)[0] == pytest.approx(0.5)
        assert trajectory_values([0, 10, 20], kv, 30)[0] == pytest.approx(-1.0)

    def test_checkerboard_layout(self):
        spec = SceneSpec(width=8, height=8, class_count=4, cell_size=2)
        labels = class_map(spec)
        assert set(np.unique(labels)) == {0, 1, 2, 3}
        assert labels[0, 0] == 0 and labels[2, 0] == 1 and labels[0, 2] == 2

    def test_voronoi_chunked_matches_dense(self):
        spec = SceneSpec(width=40, height=24, class_count=3, class_map_mode="voronoi_patches",
                         cell_size=3, seed=12)
        got = class_map(spec, np.random.default_rng(1))
        r = np.random.default_rng(1)
        n = (40 * 24) // 9
        sy, sx = r.uniform(0, 24, n), r.uniform(0, 40, n)
        yy, xx = np.mgrid[0:24, 0:40] + 0.5
        d2 = (yy[..., None] - sy) ** 2 + (xx[..., None] - sx) ** 2
        np.testing.assert_array_equal(got, (np.arange(n) % 3)[np.argmin(d2, axis=-1)])

    def test_event(self):
        spec = SceneSpec(width=8, height=8, band_count=1, class_count=2, cell_size=2,
                         knot_dates=[0], knot_values=[[[0.2]], [[0.3]]], event_date=10,
                         event_classes=[1], event_offset=[0.1])
        before, after = generate_series(spec, [9, 10])
        labels = class_map(spec)
        diff = after.truth.data[0] - before.truth.data[0]
        np.testing.assert_allclose(diff[labels == 1], 0.1, atol=1e-7)
        np.testing.assert_allclose(diff[labels == 0], 0.0, atol=1e-7)

    def test_drift_linear_in_time(self):
        spec = SceneSpec(width=8, height=8, band_count=1, class_count=1, knot_dates=[0],
                         knot_values=[[[0.3]]], drift_sigma=1e-3, drift_ref_date=0, seed=2)
        f0, f1, f2 = generate_series(spec, [0, 10, 20])
        np.testing.assert_allclose(f0.truth.data, np.float32(0.3), atol=1e-7)
        d1 = f1.truth.data - f0.truth.data
        d2 = f2.truth.data - f0.truth.data
        np.testing.assert_allclose(d2, 2 * d1, atol=1e-6)
        assert np.abs(d1).max() > 0

    def test_coarse_is_blurred_truth(self):
        spec = SceneSpec(width=16, height=16, band_count=1, class_count=2, cell_size=1, seed=1)
        fr = generate_series(spec, [0])[0]
        assert fr.coarse.data.std() < fr.truth.data.std()
        assert fr.coarse.data.mean() == pytest.approx(fr.truth.data.mean(), abs=1e-3)

    def test_write_read(self, tmp_path):
        spec = SceneSpec(width=8, height=8, noise_sigma=0.01, seed=3)
        frames = generate_series(spec, [0, 16])
        idx = write_series(frames, tmp_path, spec)
        back = read_series(idx)
        assert [f.date_tag for f in back] == [0, 16]
        assert back[1].coarse.data.tobytes() == frames[1].coarse.data.tobytes()


class TestOracle:
    def test_uniform_scene(self):
        g = RasterGrid(np.full((1, 12, 12), 0.3))
        cp = RasterGrid(np.full((1, 12, 12), 0.36))
        with pytest.warns(UserWarning):
            task = FusionTask((ReferencePair(0, g, g),), cp, 5)
        out = oracle_predict(task, small_config())
        np.testing.assert_allclose(out.data, 0.36, atol=1e-6)

    def test_starfm_hand(self):
        fine = np.array([[0.1, 0.2, 0.1], [0.2, 0.1, 0.2], [0.1, 0.2, 0.1]])[None]
        ck = np.full((1, 3, 3), 0.15)
        cp = ck + np.array([[0.0, 0.01, 0.0], [0.01, 0.02, 0.01], [0.0, 0.01, 0.0]])
        with pytest.warns(UserWarning):
            task = FusionTask((ReferencePair(0, RasterGrid(fine), RasterGrid(ck)),),
                              RasterGrid(cp), 5)
        out, ws = oracle_predict(task, small_config(mode="starfm"), return_weight_sums=True)
        # every member shares the target's date, so each predicts fine(member) + change(target)
        # and only the weighting differs; with a single class member set the centre stays exact
        f32 = lambda a: a.astype(np.float32).astype(float)
        change = f32(cp) - f32(ck)
        assert abs(out.data[0, 1, 1] - (0.1 + change[0, 1, 1])) <= 1e-6
        np.testing.assert_allclose(ws, 1.0, atol=1e-12)
