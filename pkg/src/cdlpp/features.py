"""Raw-pixel and Local Binary Pattern features.

LBP here is the plain 8-neighbour, 256-code variant. A neighbour sets its
bit when it is >= the centre pixel. Bits are assigned clockwise from the
top-left neighbour, which carries the least significant bit:

    1   2   4
  128   c   8
   64  32  16
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# (row offset, col offset) per bit, bit 0 first
NEIGHBOURS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


@dataclass(frozen=True)
class LbpConfig:
    grid_rows: int = 8
    grid_cols: int = 8

    def __post_init__(self):
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.grid_rows}x{self.grid_cols}")


def lbp_code_map(img) -> np.ndarray:
    """LBP codes of the interior pixels, shape ``(h - 2, w - 2)``."""
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"LBP needs a 2-D image of at least 3x3, got shape {img.shape}")
    h, w = img.shape
    centre = img[1:h - 1, 1:w - 1]
    codes = np.zeros(centre.shape, dtype=np.uint8)
    for bit, (dr, dc) in enumerate(NEIGHBOURS):
        nb = img[1 + dr:h - 1 + dr, 1 + dc:w - 1 + dc]
        codes |= (nb >= centre).astype(np.uint8) << bit
    return codes


def lbp_histogram(img, cfg: LbpConfig = LbpConfig()) -> np.ndarray:
    """Concatenated per-cell 256-bin code counts (cells in row-major order).

    The code map is split into ``grid_rows x grid_cols`` near-equal cells;
    counts are left unnormalized.
    """
    codes = lbp_code_map(img)
    ch, cw = codes.shape
    if cfg.grid_rows > ch or cfg.grid_cols > cw:
        raise ValueError(
            f"grid {cfg.grid_rows}x{cfg.grid_cols} is finer than the {ch}x{cw} code map")
    hists = []
    for band in np.array_split(codes, cfg.grid_rows, axis=0):
        for cell in np.array_split(band, cfg.grid_cols, axis=1):
            hists.append(np.bincount(cell.ravel(), minlength=256))
    return np.concatenate(hists).astype(float)


def lbp_features(data, image_shape, cfg: LbpConfig = LbpConfig()) -> np.ndarray:
    """Map every column of ``data`` (a flattened image) to its LBP histogram."""
    data = np.asarray(data)
    h, w = image_shape
    if data.shape[0] != h * w:
        raise ValueError(f"column length {data.shape[0]} does not match image shape {h}x{w}")
    return np.stack([lbp_histogram(col.reshape(h, w), cfg) for col in data.T], axis=1)
