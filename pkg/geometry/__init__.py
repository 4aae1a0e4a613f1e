from .boxes import (
    UNIT_IMAGE,
    Box,
    BoxFormat,
    center_size_to_corners,
    convert,
    giou,
    giou_and_grad,
    iou,
    pairwise_giou,
)

__all__ = [
    "UNIT_IMAGE",
    "Box",
    "BoxFormat",
    "center_size_to_corners",
    "convert",
    "giou",
    "giou_and_grad",
    "iou",
    "pairwise_giou",
]
