"""Synthetic data generation: font, geometry protocol, determinism."""

import numpy as np
import pytest

from spotter import synth
from spotter.strokefont import SUPPORTED, GlyphMask, rasterize_glyph


class TestStrokeFont:
    def test_every_supported_character_renders(self):
        assert len(SUPPORTED) == 62
        for ch in SUPPORTED:
            mask = rasterize_glyph(ch, 16)
            assert isinstance(mask, GlyphMask)
            assert (mask.alpha > 0).any(), ch
            assert mask.alpha.max() >= 0.9, ch
            assert mask.alpha.min() >= 0.0 and mask.alpha.max() <= 1.0

    def test_capital_i_is_narrow_vertical_band(self):
        mask = rasterize_glyph("I", 16)
        cols = np.nonzero((mask.alpha > 0.5).any(axis=0))[0]
        rows = np.nonzero((mask.alpha > 0.5).any(axis=1))[0]
        assert cols.max() - cols.min() + 1 <= 6
        assert rows.max() - rows.min() + 1 >= 14

    def test_deterministic(self):
        a = rasterize_glyph("Q", 20, thickness=2.0)
        b = rasterize_glyph("Q", 20, thickness=2.0)
        np.testing.assert_array_equal(a.alpha, b.alpha)

    def test_unsupported_character_rejected(self):
        with pytest.raises(ValueError, match="U\\+00E9"):
            rasterize_glyph("é", 16)

    def test_tiny_height_rejected(self):
        with pytest.raises(ValueError, match="at least 8"):
            rasterize_glyph("A", 4)

    def test_advance_scales_with_height(self):
        a = rasterize_glyph("M", 16)
        b = rasterize_glyph("M", 32)
        assert b.advance == pytest.approx(2 * a.advance)


class TestBackgrounds:
    def test_zero_amplitude_noise_is_constant_grey(self):
        field = synth.bg_noise(np.random.default_rng(0), 32, 32, amp=0.0)
        assert float(field.max() - field.min()) == 0.0

    def test_all_kinds_stay_renderable(self):
        rng = np.random.default_rng(1)
        for fn in (synth.bg_noise, synth.bg_gradient, synth.bg_stripes, synth.bg_blobs):
            for _ in range(5):
                field = fn(rng, 32, 64)
                assert field.shape == (32, 64)
                assert np.isfinite(field).all()

    def test_user_images_are_cropped(self):
        img = np.arange(64 * 64, dtype=np.uint8).reshape(64, 64)
        rng = np.random.default_rng(2)
        seen_user = False
        for _ in range(20):
            field = synth.background(rng, 32, 32, images=(img,))
            assert field.shape == (32, 32)
            seen_user = seen_user or field.dtype == np.float64 and field.max() <= 255
        assert seen_user


class TestPositives:
    def test_deterministic_given_seed(self):
        cfg = synth.GenConfig("bigram", 1, seed=5)
        a, _ = synth.synth_positive(cfg, np.random.default_rng(123))
        b, _ = synth.synth_positive(cfg, np.random.default_rng(123))
        np.testing.assert_array_equal(a.patch, b.patch)
        assert a.label == 1

    def test_geometry_constraints_hold(self):
        cfg = synth.GenConfig("bigram", 1, seed=0)
        w, h = cfg.window
        for i in range(1000):
            _, meta = synth.synth_positive(cfg, np.random.default_rng(i))
            assert meta["n_glyphs"] == 2
            assert synth.box_height_frac(meta["union_box"], h) >= 0.6
            assert synth.box_inside_frac(meta["union_box"], w, h) >= 0.8
            assert synth.positive_geometry_ok(meta, "bigram")

    def test_undistorted_patch_is_regression_stable(self):
        cfg = synth.GenConfig("unigram", 1, seed=9, rot_deg=0.0, persp=0.0,
                              noise_sigma=0.0, contrast=(1.0, 1.0))
        s1, m1 = synth.synth_positive(cfg, np.random.default_rng(77))
        s2, m2 = synth.synth_positive(cfg, np.random.default_rng(77))
        np.testing.assert_array_equal(s1.patch, s2.patch)
        # with all distortions off, the glyph box is axis-aligned in-window
        assert synth.box_inside_frac(m1["union_box"], 32, 32) >= 0.8

    def test_patch_dtype_and_dims(self):
        for kind, (w, h) in synth.WINDOWS.items():
            s, _ = synth.synth_positive(
                synth.GenConfig(kind, 1, seed=1), np.random.default_rng(4)
            )
            assert s.patch.shape == (h, w)
            assert s.patch.dtype == np.uint8


class TestNegatives:
    def test_never_satisfies_positive_geometry(self):
        for kind in ("unigram", "bigram"):
            cfg = synth.GenConfig(kind, 1, seed=0)
            for i in range(500):
                s, meta = synth.synth_negative(cfg, np.random.default_rng(i))
                assert s.label == 0
                assert not synth.positive_geometry_ok(meta, kind), (kind, i, meta)

    def test_fragments_mostly_cropped_out(self):
        cfg = synth.GenConfig("unigram", 1, seed=0)
        w, h = cfg.window
        seen = 0
        for i in range(200):
            _, meta = synth.synth_negative(cfg, np.random.default_rng(i))
            if meta["class"] == "frag":
                seen += 1
                assert synth.box_inside_frac(meta["union_box"], w, h) <= 0.4
        assert seen > 30

    def test_single_glyph_class_only_for_bigrams(self):
        for i in range(300):
            _, meta = synth.synth_negative(
                synth.GenConfig("unigram", 1, seed=0), np.random.default_rng(i)
            )
            assert meta["class"] in ("bg", "frag")
        classes = set()
        for i in range(300):
            _, meta = synth.synth_negative(
                synth.GenConfig("bigram", 1, seed=0), np.random.default_rng(i)
            )
            classes.add(meta["class"])
        assert classes == {"bg", "frag", "single"}

    def test_deterministic(self):
        cfg = synth.GenConfig("bigram", 1, seed=5)
        a, _ = synth.synth_negative(cfg, np.random.default_rng(321))
        b, _ = synth.synth_negative(cfg, np.random.default_rng(321))
        np.testing.assert_array_equal(a.patch, b.patch)


class TestGenerateDataset:
    def test_class_balance_is_ceiling(self):
        ds = synth.generate_dataset(synth.GenConfig("unigram", 11, pos_frac=0.5, seed=1))
        assert int(ds.labels.sum()) == 6  # ceil(5.5)

    def test_full_determinism(self):
        cfg = synth.GenConfig("bigram", 40, seed=99)
        a = synth.generate_dataset(cfg)
        b = synth.generate_dataset(cfg)
        np.testing.assert_array_equal(a.patches, b.patches)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_no_degenerate_patches(self):
        ds = synth.generate_dataset(synth.GenConfig("unigram", 60, seed=3))
        stds = ds.patches.reshape(len(ds), -1).std(axis=1)
        assert (stds > 0).all()

    def test_sample_seeds_are_order_independent(self):
        # sample i of a large run equals sample i generated alone
        cfg_big = synth.GenConfig("unigram", 10, seed=17)
        big = synth.generate_dataset(cfg_big)
        rng7 = synth._sample_rng(17, 7)
        lone, _ = synth.synth_negative(cfg_big, rng7)
        np.testing.assert_array_equal(big.patches[7], lone.patch)

    def test_splitmix_seeds_distinct(self):
        seeds = {synth.sample_seed(42, i) for i in range(10_000)}
        assert len(seeds) == 10_000


class TestScene:
    def test_scene_is_deterministic_with_truths(self):
        img1, t1 = synth.make_scene(5, size=128, n_items=3)
        img2, t2 = synth.make_scene(5, size=128, n_items=3)
        np.testing.assert_array_equal(img1, img2)
        assert [t["chars"] for t in t1] == [t["chars"] for t in t2]
        assert img1.shape == (128, 128) and img1.dtype == np.uint8
        assert len(t1) == 3
        for t in t1:
            x, y = t["center"]
            assert 0 <= x < 128 and 0 <= y < 128
