"""Bars-and-Stripes patterns and target distributions.

Images are flattened in row-major order and pixel 0 is the most
significant bit of the integer index.
"""

import numpy as np


def _check_dims(rows, cols):
    if rows < 1 or cols < 1:
        raise ValueError(f"image dimensions must be positive, got {rows}x{cols}")


def bas_patterns(rows: int, cols: int) -> list[str]:
    """All bar and stripe images as sorted bitstrings.

    The blank and full images are both bars and stripes and appear once,
    so there are ``2**rows + 2**cols - 2`` patterns.
    """
    _check_dims(rows, cols)
    images = set()
    for mask in range(2 ** rows):
        # bars: each row constant
        rows_bits = [(mask >> (rows - 1 - r)) & 1 for r in range(rows)]
        images.add("".join(str(b) * cols for b in rows_bits))
    for mask in range(2 ** cols):
        cols_bits = [(mask >> (cols - 1 - c)) & 1 for c in range(cols)]
        images.add("".join(str(b) for b in cols_bits) * rows)
    return sorted(images)


def bas_indices(rows: int, cols: int) -> np.ndarray:
    return np.array([int(b, 2) for b in bas_patterns(rows, cols)], dtype=np.int64)


def bas_target(rows: int, cols: int) -> np.ndarray:
    """Uniform distribution over the BAS patterns, zero elsewhere."""
    idx = bas_indices(rows, cols)
    p = np.zeros(2 ** (rows * cols))
    p[idx] = 1.0 / idx.size
    return p


def bas_superposition(rows: int, cols: int) -> np.ndarray:
    """Equal-amplitude, equal-phase state over the BAS patterns."""
    return np.sqrt(bas_target(rows, cols)).astype(complex)
