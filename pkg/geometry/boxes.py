"""
Axis-aligned box arithmetic.

Two parameterizations are supported: normalized center-size ``[cx, cy, w, h]``
(what the detection head regresses) and absolute corners ``[x1, y1, x2, y2]``
(what IoU and GIoU are computed on).
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from utils.errors import ArgumentError, ValidationError

Coords = Tuple[float, float, float, float]
ImageSize = Tuple[float, float]

UNIT_IMAGE: ImageSize = (1.0, 1.0)


class BoxFormat(str, Enum):
    CENTER_SIZE = "center_size"
    CORNER = "corner"


@dataclass(frozen=True)
class Box:
    """A rectangle tagged with its parameterization."""

    fmt: BoxFormat
    coords: Coords

    def __post_init__(self):
        if len(self.coords) != 4:
            raise ValidationError(f"Box needs 4 coordinates, got {len(self.coords)}")
        if not all(math.isfinite(c) for c in self.coords):
            raise ValidationError(f"Box coordinates must be finite: {self.coords}")
        if self.fmt == BoxFormat.CENTER_SIZE:
            if not all(0.0 <= c <= 1.0 for c in self.coords):
                raise ValidationError(f"Center-size box values must lie in [0, 1]: {self.coords}")
        else:
            x1, y1, x2, y2 = self.coords
            if x1 > x2 or y1 > y2:
                raise ValidationError(f"Corner box needs x1 <= x2 and y1 <= y2: {self.coords}")

    @classmethod
    def center_size(cls, cx: float, cy: float, w: float, h: float) -> "Box":
        return cls(BoxFormat.CENTER_SIZE, (float(cx), float(cy), float(w), float(h)))

    @classmethod
    def corner(cls, x1: float, y1: float, x2: float, y2: float) -> "Box":
        return cls(BoxFormat.CORNER, (float(x1), float(y1), float(x2), float(y2)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=np.float64)

    @property
    def area(self) -> float:
        x1, y1, x2, y2 = _corners(self)
        return (x2 - x1) * (y2 - y1)


def _check_image_size(image_size: ImageSize) -> None:
    width, height = image_size
    if not (width > 0 and height > 0):
        raise ArgumentError(f"image_size must be positive, got {image_size}")


def convert(box: Box, target: BoxFormat, image_size: ImageSize = UNIT_IMAGE) -> Box:
    """
    Convert a box to another parameterization.

    Args:
        box: The box to convert
        target: The parameterization to convert to
        image_size: (width, height) of the frame the corners live in

    Returns:
        Box: The same rectangle in the target parameterization
    """
    if box.fmt == target:
        return box
    _check_image_size(image_size)
    width, height = image_size

    if target == BoxFormat.CORNER:
        cx, cy, w, h = box.coords
        return Box.corner(
            (cx - 0.5 * w) * width,
            (cy - 0.5 * h) * height,
            (cx + 0.5 * w) * width,
            (cy + 0.5 * h) * height,
        )

    x1, y1, x2, y2 = box.coords
    return Box.center_size(
        0.5 * (x1 + x2) / width,
        0.5 * (y1 + y2) / height,
        (x2 - x1) / width,
        (y2 - y1) / height,
    )


def _corners(box: Box) -> Coords:
    if box.fmt == BoxFormat.CORNER:
        return box.coords
    return convert(box, BoxFormat.CORNER).coords


def _overlap_terms(a: Coords, b: Coords) -> Tuple[float, float, float]:
    """Returns (intersection, union, hull) areas of two corner boxes."""
    ax1, ay1, ax2, ay2 = a
    bx1, by1, bx2, by2 = b
    iw = max(0.0, min(ax2, bx2) - max(ax1, bx1))
    ih = max(0.0, min(ay2, by2) - max(ay1, by1))
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    hull = (max(ax2, bx2) - min(ax1, bx1)) * (max(ay2, by2) - min(ay1, by1))
    return inter, union, hull


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 0 when the union has zero area."""
    inter, union, _ = _overlap_terms(_corners(a), _corners(b))
    if union <= 0.0:
        return 0.0
    return inter / union


def giou(a: Box, b: Box) -> float:
    """Generalized IoU in (-1, 1]; 0 when the enclosing hull has zero area."""
    inter, union, hull = _overlap_terms(_corners(a), _corners(b))
    if hull <= 0.0:
        return 0.0
    overlap = inter / union if union > 0.0 else 0.0
    return overlap - (hull - union) / hull


def center_size_to_corners(boxes: np.ndarray) -> np.ndarray:
    """Vectorized [cx, cy, w, h] -> [x1, y1, x2, y2] over the last axis (unit frame)."""
    cx, cy, w, h = np.moveaxis(np.asarray(boxes, dtype=np.float64), -1, 0)
    return np.stack([cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h], axis=-1)


def pairwise_giou(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    GIoU between every row of ``a`` (M x 4 corners) and every row of ``b`` (N x 4 corners).

    Follows the DETR ``generalized_box_iou`` layout, with the zero-hull convention of ``giou``.
    """
    a = np.asarray(a, dtype=np.float64)[:, None, :]
    b = np.asarray(b, dtype=np.float64)[None, :, :]
    iw = np.clip(np.minimum(a[..., 2], b[..., 2]) - np.maximum(a[..., 0], b[..., 0]), 0.0, None)
    ih = np.clip(np.minimum(a[..., 3], b[..., 3]) - np.maximum(a[..., 1], b[..., 1]), 0.0, None)
    inter = iw * ih
    area_a = (a[..., 2] - a[..., 0]) * (a[..., 3] - a[..., 1])
    area_b = (b[..., 2] - b[..., 0]) * (b[..., 3] - b[..., 1])
    union = area_a + area_b - inter
    hull = (np.maximum(a[..., 2], b[..., 2]) - np.minimum(a[..., 0], b[..., 0])) * (
        np.maximum(a[..., 3], b[..., 3]) - np.minimum(a[..., 1], b[..., 1])
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        overlap = np.where(union > 0.0, inter / union, 0.0)
        result = np.where(hull > 0.0, overlap - (hull - union) / hull, 0.0)
    return result


def giou_and_grad(pred_cs: np.ndarray, gt_cs: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    GIoU of a predicted center-size box against a ground-truth center-size box,
    with its partial derivatives w.r.t. the four predicted center-size values.

    Kinks (equal edges) take the one-sided derivative of the branch numpy picks.
    """
    cx, cy, w, h = (float(v) for v in pred_cs)
    px1, py1, px2, py2 = cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h
    gx1, gy1, gx2, gy2 = (float(v) for v in center_size_to_corners(gt_cs))

    iw_raw = min(px2, gx2) - max(px1, gx1)
    ih_raw = min(py2, gy2) - max(py1, gy1)
    iw, ih = max(0.0, iw_raw), max(0.0, ih_raw)
    inter = iw * ih
    area_p = (px2 - px1) * (py2 - py1)
    area_g = (gx2 - gx1) * (gy2 - gy1)
    union = area_p + area_g - inter
    hw = max(px2, gx2) - min(px1, gx1)
    hh = max(py2, gy2) - min(py1, gy1)
    hull = hw * hh

    zero = np.zeros(4, dtype=np.float64)
    if hull <= 0.0:
        return 0.0, zero

    # partials w.r.t. pred corners (x1, y1, x2, y2)
    d_area_p = np.array([-(py2 - py1), -(px2 - px1), py2 - py1, px2 - px1])
    if iw_raw > 0.0 and ih_raw > 0.0:
        d_iw = np.array([-1.0 if px1 > gx1 else 0.0, 0.0, 1.0 if px2 < gx2 else 0.0, 0.0])
        d_ih = np.array([0.0, -1.0 if py1 > gy1 else 0.0, 0.0, 1.0 if py2 < gy2 else 0.0])
        d_inter = d_iw * ih + d_ih * iw
    else:
        d_inter = zero
    d_union = d_area_p - d_inter
    d_hw = np.array([-1.0 if px1 < gx1 else 0.0, 0.0, 1.0 if px2 > gx2 else 0.0, 0.0])
    d_hh = np.array([0.0, -1.0 if py1 < gy1 else 0.0, 0.0, 1.0 if py2 > gy2 else 0.0])
    d_hull = d_hw * hh + d_hh * hw

    if union > 0.0:
        overlap = inter / union
        d_overlap = d_inter / union - inter * d_union / (union * union)
    else:
        overlap, d_overlap = 0.0, zero
    value = overlap - (hull - union) / hull
    # giou = overlap - 1 + union / hull
    d_corners = d_overlap + d_union / hull - union * d_hull / (hull * hull)

    # corners -> center-size: x1 = cx - w/2, x2 = cx + w/2
    d_cs = np.array(
        [
            d_corners[0] + d_corners[2],
            d_corners[1] + d_corners[3],
            0.5 * (d_corners[2] - d_corners[0]),
            0.5 * (d_corners[3] - d_corners[1]),
        ]
    )
    return value, d_cs
