"""CIELAB conversion and the temperature colormap."""

from __future__ import annotations

import random

import pytest

from fieldsync.color import (
    BLUE_ENDPOINT,
    RED_ENDPOINT,
    delta_e,
    lab_to_srgb,
    srgb_to_lab,
    temp_color,
    temp_lab,
)


class TestSrgbLab:
    def test_white(self):
        l_star, a_star, b_star = srgb_to_lab((1.0, 1.0, 1.0))
        assert l_star == pytest.approx(100.0, abs=1e-4)
        assert abs(a_star) < 0.01
        assert abs(b_star) < 0.01

    def test_black(self):
        assert srgb_to_lab((0.0, 0.0, 0.0)) == (0.0, 0.0, 0.0)

    def test_round_trip_1000_random_colors(self):
        rng = random.Random(1)
        worst = 0.0
        for _ in range(1000):
            rgb = (rng.random(), rng.random(), rng.random())
            back, clamped = lab_to_srgb(srgb_to_lab(rgb))
            assert not clamped
            worst = max(worst, max(abs(a - b) for a, b in zip(rgb, back)))
        assert worst < 1e-6

    def test_agrees_with_skimage(self):
        """Independent pipeline check against an established implementation."""
        skimage_color = pytest.importorskip("skimage.color")
        import numpy as np

        rng = random.Random(2)
        for _ in range(100):
            rgb = (rng.random(), rng.random(), rng.random())
            mine = srgb_to_lab(rgb)
            ref = skimage_color.rgb2lab(np.array([[rgb]], dtype=float))[0, 0]
            assert mine == pytest.approx(tuple(ref), abs=0.05)

    def test_out_of_gamut_flagged_and_clamped(self):
        # as saturated a green as Lab can express is outside sRGB
        rgb, clamped = lab_to_srgb((50.0, -200.0, 0.0))
        assert clamped
        assert all(0.0 <= c <= 1.0 for c in rgb)


class TestTempColor:
    RANGE = (-10.0, 40.0)

    def test_low_end_is_exactly_blue(self):
        assert temp_color(-10.0, self.RANGE) == BLUE_ENDPOINT
        assert temp_color(-100.0, self.RANGE) == BLUE_ENDPOINT  # clamped

    def test_high_end_is_exactly_red(self):
        assert temp_color(40.0, self.RANGE) == RED_ENDPOINT
        assert temp_color(999.0, self.RANGE) == RED_ENDPOINT

    def test_midpoint_equidistant_in_lab(self):
        lo = temp_lab(-10.0, self.RANGE)
        mid = temp_lab(15.0, self.RANGE)
        hi = temp_lab(40.0, self.RANGE)
        assert abs(delta_e(lo, mid) - delta_e(mid, hi)) < 1e-9

    def test_lab_path_is_linear(self):
        lo = temp_lab(-10.0, self.RANGE)
        hi = temp_lab(40.0, self.RANGE)
        for t in (0.1, 0.25, 0.6, 0.9):
            value = self.RANGE[0] + t * (self.RANGE[1] - self.RANGE[0])
            lab = temp_lab(value, self.RANGE)
            expect = tuple((1 - t) * a + t * b for a, b in zip(lo, hi))
            assert lab == pytest.approx(expect, abs=1e-9)

    def test_lightness_monotone_along_ramp(self):
        lo_l = temp_lab(0.0, (0.0, 1.0))[0]
        hi_l = temp_lab(1.0, (0.0, 1.0))[0]
        direction = 1 if hi_l >= lo_l else -1
        previous = lo_l
        for i in range(1, 101):
            l_star = temp_lab(i / 100, (0.0, 1.0))[0]
            assert direction * (l_star - previous) >= -1e-12
            previous = l_star

    def test_ramp_stays_in_gamut(self):
        for i in range(101):
            _, clamped = lab_to_srgb(temp_lab(i / 100, (0.0, 1.0)))
            assert not clamped

    def test_bad_range_rejected(self):
        with pytest.raises(ValueError):
            temp_color(0.5, (1.0, 1.0))
