"""Synthetic test images with known ground-truth labelings.

Each generator returns (image, truth, codebook): the clean image, a
1-based integer label map, and the codebook the labels refer to. Noise
is added separately and never clamped; display clamping is an output
concern.
"""

import numpy as np

__all__ = ["grid_image", "cartoon_image", "stripes_image", "add_gaussian_noise"]


def grid_image(n, period=None, thickness=None):
    """Binary grid: value-1 lines over a value-0 background.

    Lines run through both axes every `period` pixels (default n // 8),
    `thickness` pixels wide (default period // 6, at least 2).
    """
    if n < 16:
        raise ValueError("grid image needs n >= 16")
    if period is None:
        period = max(8, n // 8)
    if thickness is None:
        thickness = max(2, period // 6)
    coord = np.arange(n)
    on = (coord + period // 2) % period < thickness
    img = np.where(on[:, None] | on[None, :], 1.0, 0.0)
    truth = img.astype(int) + 1
    codebook = np.array([[0.0], [1.0]])
    return img, truth, codebook


def cartoon_image(n):
    """Four gray regions: two triangles split by the main diagonal, a
    disk in the upper triangle, and a rectangle in the lower one.

    The diagonal boundary is the feature of interest; the disk and
    rectangle keep well clear of it.
    """
    if n < 16:
        raise ValueError("cartoon image needs n >= 16")
    r = np.arange(n)[:, None]
    c = np.arange(n)[None, :]
    labels = np.where(r > c, 2, 1)
    disk = (r - 0.28 * n) ** 2 + (c - 0.72 * n) ** 2 <= (0.14 * n) ** 2
    labels = np.where(disk, 3, labels)
    rect = (r >= 0.62 * n) & (r <= 0.86 * n) & (c >= 0.14 * n) & (c <= 0.38 * n)
    labels = np.where(rect, 4, labels)
    codebook = np.array([[0.0], [1.0 / 3.0], [2.0 / 3.0], [1.0]])
    img = codebook[labels - 1, 0]
    return img, labels, codebook


def stripes_image(n):
    """Concentric curved color bands around an off-image center, four
    RGB classes cycling with radius."""
    if n < 16:
        raise ValueError("stripes image needs n >= 16")
    r = np.arange(n)[:, None]
    c = np.arange(n)[None, :]
    dist = np.sqrt((r + 0.25 * n) ** 2 + (c + 0.25 * n) ** 2)
    band = (dist / (0.22 * n)).astype(int) % 4
    labels = band + 1
    codebook = np.array(
        [
            [0.85, 0.15, 0.15],
            [0.20, 0.65, 0.25],
            [0.20, 0.30, 0.80],
            [0.95, 0.85, 0.25],
        ]
    )
    img = codebook[band]
    return img, labels, codebook


def add_gaussian_noise(img, sigma, rng):
    """Additive white Gaussian noise, unclamped."""
    if sigma < 0:
        raise ValueError("noise level must be nonnegative")
    img = np.asarray(img, dtype=float)
    return img + rng.normal(0.0, sigma, size=img.shape)
