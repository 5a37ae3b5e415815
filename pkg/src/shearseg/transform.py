"""Forward and inverse shearlet transform via the 2-D DFT.

The analysis operator multiplies the image spectrum by each subband
window and returns the inverse DFT per subband, so every coefficient
plane is a full-size, translation-covariant filtering of the input.
Because the windows form a partition of unity in the squared sense, the
adjoint (synthesis) operator inverts the analysis exactly.
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Coefficients",
    "ImaginaryResidueError",
    "dft2",
    "idft2",
    "forward",
    "inverse",
    "shift_covariance_check",
]

# Inverse DFTs of real-symmetric products must come out real; anything
# above this relative residue indicates a broken spectrum.
IMAG_RESIDUE_REL = 1e-8


class ImaginaryResidueError(Exception):
    """A nominally real plane came back with a significant imaginary part."""


def _require_square(a):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square 2-D array, got shape {a.shape}")
    return a


def dft2(f, workers=None):
    """Unnormalized 2-D DFT of a square array."""
    return sfft.fft2(_require_square(f), workers=workers)


def idft2(fhat, workers=None):
    """Inverse 2-D DFT with 1/n^2 normalization (exact inverse of dft2)."""
    return sfft.ifft2(_require_square(fhat), workers=workers)


def _real_checked(plane, what):
    imax = np.abs(plane.imag).max()
    rmax = np.abs(plane.real).max()
    if imax > IMAG_RESIDUE_REL * rmax:
        raise ImaginaryResidueError(
            f"{what}: imaginary residue {imax:.3e} exceeds "
            f"{IMAG_RESIDUE_REL:.0e} x {rmax:.3e}"
        )
    return plane.real


@dataclass(frozen=True)
class Coefficients:
    """Stack of real coefficient planes in the generating system's order."""

    planes: np.ndarray
    system: "object"

    def __post_init__(self):
        if self.planes.shape != (self.system.num_subbands, self.system.n, self.system.n):
            raise ValueError(
                f"plane stack shape {self.planes.shape} does not match system "
                f"({self.system.num_subbands} x {self.system.n} x {self.system.n})"
            )

    @property
    def n(self):
        return self.system.n


def forward(f, system, workers=None):
    """Analyze an image into one real coefficient plane per subband.

    The image spectrum is computed once and reused across subbands.
    """
    f = _require_square(f)
    if f.shape[0] != system.n:
        raise ValueError(f"image side {f.shape[0]} != system side {system.n}")
    fhat = sfft.fft2(f, workers=workers)
    planes_c = sfft.ifft2(system.spectra * fhat[None, :, :], axes=(-2, -1), workers=workers)
    planes = np.empty(planes_c.shape)
    for i in range(planes_c.shape[0]):
        planes[i] = _real_checked(planes_c[i], f"subband {i} analysis")
    return Coefficients(planes=planes, system=system)


def inverse(coeffs, system=None, workers=None):
    """Synthesize an image from coefficients (adjoint of `forward`).

    Sums spectrum-weighted plane spectra and inverts once. For
    coefficients produced by `forward` this reconstructs the input
    exactly, up to roundoff.
    """
    if system is None:
        system = coeffs.system
    elif not system.compatible_with(coeffs.system):
        raise ValueError("coefficients were generated by an incompatible system")
    phat = sfft.fft2(coeffs.planes, axes=(-2, -1), workers=workers)
    acc = np.einsum("kij,kij->ij", system.spectra, phat)
    return _real_checked(sfft.ifft2(acc, workers=workers), "synthesis")


def shift_covariance_check(f, system, shift, workers=None):
    """Max deviation between transforming a circular shift of `f` and
    circularly shifting each coefficient plane of `f`."""
    dr, dc = int(shift[0]), int(shift[1])
    shifted = forward(np.roll(f, (dr, dc), axis=(0, 1)), system, workers=workers)
    rolled = np.roll(forward(f, system, workers=workers).planes, (dr, dc), axis=(1, 2))
    return float(np.abs(shifted.planes - rolled).max())
