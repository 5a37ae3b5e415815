"""Discrete shearlet system on an N x N frequency grid.

Subbands are enumerated as one lowpass plane plus, per scale j, sheared
horizontal-cone and vertical-cone windows and two seam windows glued
across the diagonal. The squared spectra of a valid system sum to 1 at
every grid frequency (partition of unity), which makes the associated
transform a Parseval frame.
"""

from dataclasses import dataclass, field

import numpy as np

from .meyer import phi_hat_2d, psi1_hat, psi2_hat

__all__ = [
    "GridSpec",
    "SubbandIndex",
    "ShearletSystem",
    "PartitionOfUnityViolation",
    "enumerate_subbands",
    "cone_of",
    "build_spectrum",
    "build_system",
    "weight_index",
]

POU_TOL = 1e-10


class PartitionOfUnityViolation(Exception):
    """Raised when the squared spectra of a system fail to sum to 1."""

    def __init__(self, max_deviation, worst_omega):
        self.max_deviation = float(max_deviation)
        self.worst_omega = tuple(int(w) for w in worst_omega)
        super().__init__(
            f"partition of unity violated: max deviation {self.max_deviation:.3e} "
            f"at omega {self.worst_omega}"
        )


def _num_scales(n):
    j = 0
    while 4 ** (j + 1) <= n:
        j += 1
    return j


@dataclass(frozen=True)
class GridSpec:
    """Square frequency grid for an n x n image.

    Frequencies run over the centered integer range
    {-floor(n/2), ..., ceil(n/2)-1} in both axes. The scale count j0 is
    floor(log4(n)) and is derived, not chosen.
    """

    n: int
    j0: int = field(init=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 4:
            raise ValueError(f"grid side must be an integer >= 4, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "j0", _num_scales(self.n))

    @property
    def num_subbands(self):
        return 1 + 4 * (2 ** self.j0 - 1)

    def frequencies(self):
        """Centered integer frequencies as broadcastable (n,1) and (1,n) arrays."""
        lo = -(self.n // 2)
        w = np.arange(lo, lo + self.n, dtype=float)
        return w[:, None], w[None, :]


@dataclass(frozen=True)
class SubbandIndex:
    """Identifies one coefficient plane: kind, scale j, shear k."""

    kind: str
    j: int | None = None
    k: int | None = None

    def __post_init__(self):
        if self.kind == "lowpass":
            if self.j is not None or self.k is not None:
                raise ValueError("lowpass subband carries no scale or shear")
            return
        if self.kind not in ("horizontal", "vertical", "seam"):
            raise ValueError(f"unknown subband kind {self.kind!r}")
        if self.j is None or self.k is None or self.j < 0:
            raise ValueError("directional subbands need scale j >= 0 and shear k")
        if self.kind == "seam":
            if abs(self.k) != 2 ** self.j:
                raise ValueError("seam subbands live at |k| = 2^j")
        elif abs(self.k) > 2 ** self.j - 1:
            raise ValueError("cone subbands need |k| <= 2^j - 1")


def enumerate_subbands(grid):
    """All subbands of `grid` in normative order.

    Lowpass first, then scales ascending; within a scale all horizontal
    shears ascending, all vertical shears ascending, then the two seams.
    Coefficient files and stacked tensors rely on this order.
    """
    out = [SubbandIndex("lowpass")]
    for j in range(grid.j0):
        half = 2 ** j
        out.extend(SubbandIndex("horizontal", j, k) for k in range(-half + 1, half))
        out.extend(SubbandIndex("vertical", j, k) for k in range(-half + 1, half))
        out.extend(SubbandIndex("seam", j, k) for k in (-half, half))
    return out


def weight_index(subband):
    """Position of a subband's weight in a per-scale weight vector.

    Entry 0 is the lowpass weight, entry j+1 the weight for scale j.
    """
    return 0 if subband.kind == "lowpass" else subband.j + 1


def cone_of(omega1, omega2):
    """Classify a frequency point into the seam, horizontal, vertical, or
    low-frequency region. The seam takes precedence on the diagonal."""
    a1, a2 = abs(float(omega1)), abs(float(omega2))
    if a1 == a2 and a1 >= 0.5:
        return "Cx"
    if a1 >= 0.5 and a2 < a1:
        return "Ch"
    if a2 >= 0.5 and a1 < a2:
        return "Cv"
    return "C0"


def _cone_masks(w1, w2):
    a1, a2 = np.abs(w1), np.abs(w2)
    ch = (a1 >= 0.5) & (a2 < a1)
    cv = (a2 >= 0.5) & (a1 < a2)
    cx = (a1 >= 0.5) & (a1 == a2)
    return ch, cv, cx


def _radial(w, j, grid):
    """psi1_hat at scale j, extended past its outer edge on the last scale.

    The dyadic scales only cover radii up to 2*4^(j0-1); grids whose
    corners lie beyond that (n not a power of 4) would lose the partition
    of unity there, so the outermost window is held at 1 beyond its
    plateau. For power-of-4 sides this changes nothing.
    """
    scaled = w / 4.0 ** j
    r = psi1_hat(scaled)
    if j == grid.j0 - 1:
        r = np.where(np.abs(scaled) > 2.0, 1.0, r)
    return r


def _symmetrize_nyquist(s, n):
    """Make the Nyquist row/column of an even grid symmetric under negation.

    For even n the frequency -n/2 is its own negative modulo n, so real
    outputs require s(-n/2, t) = s(-n/2, -t) (and the transpose). The two
    values are replaced by their quadratic mean, which keeps the squared
    sum across subbands, the [0,1] range, and cone supports intact.
    Odd grids already pair every frequency with its mirror.
    """
    if n % 2:
        return s
    i = np.arange(1, n)
    row = s[0, :].copy()
    s[0, i] = np.sqrt((row[i] ** 2 + row[n - i] ** 2) / 2.0)
    col = s[:, 0].copy()
    s[i, 0] = np.sqrt((col[i] ** 2 + col[n - i] ** 2) / 2.0)
    return s


def build_spectrum(subband, grid):
    """Frequency-domain window of one subband, on the centered grid.

    Horizontal: psi1_hat(w1/4^j) * psi2_hat(2^j w2/w1 + k) on the
    horizontal cone; vertical swaps coordinates; a seam adds the
    diagonal part so the two half-windows glue into one atom; lowpass is
    the 2-D scaling spectrum. Entries lie in [0, 1].
    """
    if not isinstance(grid, GridSpec):
        grid = GridSpec(grid)
    w1, w2 = grid.frequencies()
    w1 = np.broadcast_to(w1, (grid.n, grid.n))
    w2 = np.broadcast_to(w2, (grid.n, grid.n))

    if subband.kind == "lowpass":
        s = phi_hat_2d(w1, w2)
        return _symmetrize_nyquist(s, grid.n)

    if subband.j >= grid.j0:
        raise ValueError(f"scale {subband.j} outside grid with {grid.j0} scales")

    ch, cv, cx = _cone_masks(w1, w2)
    j, k = subband.j, subband.k
    # The shear argument is only formed where the cone mask is true, so the
    # w1 = 0 column never divides by zero.
    ratio_h = np.divide(w2, w1, out=np.zeros_like(w1), where=ch | cx)
    ratio_v = np.divide(w1, w2, out=np.zeros_like(w1), where=cv)
    horiz = _radial(w1, j, grid) * psi2_hat(2.0 ** j * ratio_h + k)
    vert = _radial(w2, j, grid) * psi2_hat(2.0 ** j * ratio_v + k)

    if subband.kind == "horizontal":
        s = np.where(ch, horiz, 0.0)
    elif subband.kind == "vertical":
        s = np.where(cv, vert, 0.0)
    else:
        # Seam: horizontal part on its cone, vertical part on its cone, and
        # the diagonal itself, where both parameterizations coincide
        # (|w1| = |w2| gives identical shear arguments); each sign of k
        # reaches exactly one diagonal because psi2_hat(+-2^(j+1)) = 0.
        s = np.where(ch, horiz, 0.0) + np.where(cv, vert, 0.0) + np.where(cx, horiz, 0.0)
    return _symmetrize_nyquist(s, grid.n)


@dataclass(frozen=True)
class ShearletSystem:
    """Immutable bundle of grid, subband order, and spectra.

    `spectra` has shape (num_subbands, n, n) and is stored in DFT
    wrap-around order so transforms multiply without per-call shifting.
    """

    grid: GridSpec
    subbands: tuple
    spectra: np.ndarray

    @property
    def n(self):
        return self.grid.n

    @property
    def num_subbands(self):
        return len(self.subbands)

    def spectrum_centered(self, i):
        """Spectrum of subband i re-indexed to centered frequencies."""
        return np.fft.fftshift(self.spectra[i])

    def compatible_with(self, other):
        return self.grid == other.grid and self.subbands == other.subbands


def build_system(n, tol=POU_TOL):
    """Build and validate the shearlet system for an n x n grid.

    Raises PartitionOfUnityViolation if the squared spectra do not sum
    to 1 within `tol` at every frequency.
    """
    grid = GridSpec(n)
    subbands = tuple(enumerate_subbands(grid))
    spectra = np.empty((len(subbands), grid.n, grid.n))
    for i, sb in enumerate(subbands):
        spectra[i] = build_spectrum(sb, grid)

    pou = np.einsum("kij,kij->ij", spectra, spectra)
    dev = np.abs(pou - 1.0)
    worst = np.unravel_index(np.argmax(dev), dev.shape)
    if dev[worst] > tol:
        lo = -(grid.n // 2)
        raise PartitionOfUnityViolation(dev[worst], (lo + worst[0], lo + worst[1]))

    spectra = np.fft.ifftshift(spectra, axes=(-2, -1))
    spectra.setflags(write=False)
    return ShearletSystem(grid=grid, subbands=subbands, spectra=spectra)
