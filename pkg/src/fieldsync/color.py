"""sRGB <-> CIELAB conversion and the red-blue temperature colormap.

The pipeline is the standard one: sRGB companding (thresholds 0.04045 /
0.0031308, exponent 2.4), linear RGB to XYZ under D65, then CIE L*a*b* with
delta = 6/29. The reverse XYZ matrix is the numerical inverse of the
forward matrix so round trips are exact to machine precision.

Temperature values map onto a straight line in Lab between a blue and a red
endpoint chosen with near-equal lightness; interpolating in Lab keeps the
ramp perceptually even and the chosen endpoints keep it inside the sRGB
gamut.
"""

from __future__ import annotations

import math

import numpy as np

# D65 reference white
WHITE_POINT = (0.95047, 1.0, 1.08883)

_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)

_DELTA = 6.0 / 29.0

# Diverging pair with near-equal lightness; pure primaries would leave the
# gamut under Lab interpolation.
BLUE_ENDPOINT = (0.020, 0.443, 0.690)
RED_ENDPOINT = (0.792, 0.000, 0.125)

RGB = tuple[float, float, float]
Lab = tuple[float, float, float]


def _expand(channel: float) -> float:
    if channel > 0.04045:
        return ((channel + 0.055) / 1.055) ** 2.4
    return channel / 12.92


def _compand(linear: float) -> float:
    if linear > 0.0031308:
        return 1.055 * linear ** (1.0 / 2.4) - 0.055
    return 12.92 * linear


def _f(t: float) -> float:
    if t > _DELTA ** 3:
        return t ** (1.0 / 3.0)
    return t / (3.0 * _DELTA ** 2) + 4.0 / 29.0


def _f_inv(t: float) -> float:
    if t > _DELTA:
        return t ** 3
    return 3.0 * _DELTA ** 2 * (t - 4.0 / 29.0)


def srgb_to_lab(rgb: RGB) -> Lab:
    """sRGB in [0,1] per channel to CIE L*a*b* (D65)."""
    linear = np.array([_expand(c) for c in rgb])
    x, y, z = _RGB_TO_XYZ @ linear
    fx = _f(x / WHITE_POINT[0])
    fy = _f(y / WHITE_POINT[1])
    fz = _f(z / WHITE_POINT[2])
    return (float(116.0 * fy - 16.0), float(500.0 * (fx - fy)), float(200.0 * (fy - fz)))


def lab_to_srgb(lab: Lab) -> tuple[RGB, bool]:
    """Lab back to sRGB; second value reports an out-of-gamut clamp."""
    l_star, a_star, b_star = lab
    fy = (l_star + 16.0) / 116.0
    fx = fy + a_star / 500.0
    fz = fy - b_star / 200.0
    xyz = np.array([
        WHITE_POINT[0] * _f_inv(fx),
        WHITE_POINT[1] * _f_inv(fy),
        WHITE_POINT[2] * _f_inv(fz),
    ])
    linear = _XYZ_TO_RGB @ xyz
    channels = [_compand(c) if c > 0 else 12.92 * c for c in linear]
    clamped = any(c < 0.0 or c > 1.0 for c in channels)
    rgb = tuple(float(min(1.0, max(0.0, c))) for c in channels)
    return rgb, clamped


def delta_e(a: Lab, b: Lab) -> float:
    """CIE76 color difference (Euclidean distance in Lab)."""
    return math.dist(a, b)


def temp_lab(
    value: float,
    value_range: tuple[float, float],
    cold: RGB = BLUE_ENDPOINT,
    hot: RGB = RED_ENDPOINT,
) -> Lab:
    """The Lab point the colormap assigns to a value (before gamut mapping)."""
    lo, hi = value_range
    if not lo < hi:
        raise ValueError(f"bad value range [{lo}, {hi}]")
    t = min(1.0, max(0.0, (value - lo) / (hi - lo)))
    lab_cold = srgb_to_lab(cold)
    lab_hot = srgb_to_lab(hot)
    return tuple((1.0 - t) * c + t * h for c, h in zip(lab_cold, lab_hot))


def temp_color(
    value: float,
    value_range: tuple[float, float],
    cold: RGB = BLUE_ENDPOINT,
    hot: RGB = RED_ENDPOINT,
) -> RGB:
    """Red-blue temperature color for a value, interpolated in CIELAB.

    Values at or beyond the range ends return the endpoint colors exactly;
    interior values interpolate linearly in Lab and convert back to sRGB
    with channel clamping.
    """
    lo, hi = value_range
    if not lo < hi:
        raise ValueError(f"bad value range [{lo}, {hi}]")
    t = (value - lo) / (hi - lo)
    if t <= 0.0:
        return tuple(cold)
    if t >= 1.0:
        return tuple(hot)
    rgb, _ = lab_to_srgb(temp_lab(value, value_range, cold, hot))
    return rgb
