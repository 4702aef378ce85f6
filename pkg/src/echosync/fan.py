"""Rendering raw scan-line frames into fan-shaped images.

A raw frame is a polar grid: scan line i sits on the ray at angle
-FOV/2 + i * FOV/(scan_lines - 1) from the probe apex, and echo return
j at a radius proportional to j. The transform places the apex below
the image centre (tongue tip to the right for midsagittal probes) and
fills the fan interior by bilinear interpolation in polar coordinates.
Pixels outside the fan are masked and zeroed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_io import UltrasoundParams
from .errors import ShapeError, ValidationError


@dataclass
class FanImage:
    pixels: np.ndarray  # (height, width) float64; quantise only when rendering
    mask: np.ndarray  # (height, width) bool, True inside the fan

    def __post_init__(self):
        if self.pixels.shape != self.mask.shape:
            raise ValidationError(
                f"pixels {self.pixels.shape} and mask {self.mask.shape} differ in shape"
            )

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.round(self.pixels), 0, 255).astype(np.uint8)


def bilinear_sample(image: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Sample `image` at fractional (row, col) positions.

    Coordinates are clipped to the image border, so callers mask
    out-of-range positions themselves.
    """
    h, w = image.shape
    rows = np.clip(rows, 0.0, h - 1.0)
    cols = np.clip(cols, 0.0, w - 1.0)
    r0 = np.floor(rows).astype(np.intp)
    c0 = np.floor(cols).astype(np.intp)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = rows - r0
    fc = cols - c0
    img = image.astype(np.float64, copy=False)
    top = img[r0, c0] * (1 - fc) + img[r0, c1] * fc
    bottom = img[r1, c0] * (1 - fc) + img[r1, c1] * fc
    return top * (1 - fr) + bottom * fr


def fan_geometry(
    params: UltrasoundParams, out_height: int, out_width: int
) -> tuple[float, float, float]:
    """Apex (row, col) and outer radius that fit the fan into the output."""
    half = np.radians(params.field_of_view) / 2.0
    apex_row = float(out_height - 1)
    apex_col = (out_width - 1) / 2.0
    radius = min(out_height - 1.0, (out_width - 1) / (2.0 * np.sin(half)))
    return apex_row, apex_col, radius


def fan_transform(
    frame: np.ndarray,
    params: UltrasoundParams,
    out_height: int,
    out_width: int,
    flip_lr: bool = False,
    flip_ud: bool = False,
) -> FanImage:
    """Render one raw frame to real-world fan proportions.

    `flip_lr` reverses the scan-line order; `flip_ud` puts the apex at
    the top of the image instead of the bottom.
    """
    frame = np.asarray(frame)
    if frame.shape != (params.scan_lines, params.echo_returns):
        raise ShapeError(
            f"frame shape {frame.shape} does not match params "
            f"{params.scan_lines}x{params.echo_returns}"
        )
    if out_height < 2 or out_width < 2:
        raise ValidationError("output dimensions must be at least 2x2")
    if params.scan_lines < 2 or params.echo_returns < 2:
        raise ValidationError("fan transform needs at least 2 scan lines and 2 echo returns")

    half = np.radians(params.field_of_view) / 2.0
    apex_row, apex_col, radius = fan_geometry(params, out_height, out_width)

    ys, xs = np.mgrid[0:out_height, 0:out_width]
    dx = xs - apex_col
    dy = apex_row - ys  # positive pointing up from the apex
    r = np.hypot(dx, dy)
    theta = np.arctan2(dx, dy)  # angle from the vertical, positive to the right

    mask = (r <= radius) & (np.abs(theta) <= half)

    line_idx = (theta + half) / (2.0 * half) * (params.scan_lines - 1)
    if flip_lr:
        line_idx = (params.scan_lines - 1) - line_idx
    echo_idx = r / radius * (params.echo_returns - 1)

    pixels = np.zeros((out_height, out_width), dtype=np.float64)
    pixels[mask] = bilinear_sample(frame, line_idx[mask], echo_idx[mask])

    if flip_ud:
        pixels = pixels[::-1].copy()
        mask = mask[::-1].copy()
    return FanImage(pixels=pixels, mask=mask)
