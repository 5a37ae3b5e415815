"""Meyer-type window functions in the frequency domain.

All functions are pure, vectorized over numpy arrays, and return values
in [0, 1]. They are the scalar building blocks for the 2-D shearlet
spectra assembled in `frame`.
"""

import numpy as np

__all__ = [
    "meyeraux",
    "bump",
    "psi1_hat",
    "psi2_hat",
    "varphi",
    "phi_hat_2d",
]


def meyeraux(x):
    """Polynomial smoothing ramp: 0 below 0, 1 above 1, C^3 in between.

    Satisfies meyeraux(x) + meyeraux(1 - x) = 1 on [0, 1].
    """
    x = np.asarray(x, dtype=float)
    # Horner form of 35x^4 - 84x^5 + 70x^6 - 20x^7; naive powers lose
    # accuracy near x = 1.
    core = x ** 4 * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)))
    return np.select([x < 0.0, x <= 1.0], [0.0, core], default=1.0)


def bump(x):
    """Even bump supported on 1 <= |x| <= 4, rising on [1,2], falling on [2,4]."""
    ax = np.abs(np.asarray(x, dtype=float))
    rise = np.sin(np.pi / 2.0 * meyeraux(ax - 1.0))
    fall = np.cos(np.pi / 2.0 * meyeraux(ax / 2.0 - 1.0))
    return np.select([ax < 1.0, ax <= 2.0, ax <= 4.0], [0.0, rise, fall], default=0.0)


def psi1_hat(omega):
    """Radial window sqrt(bump(2w)^2 + bump(w)^2), supported on 1/2 <= |w| <= 4.

    Identically 1 on 1 <= |w| <= 2; squares of dyadic-parabolic dilates
    telescope to a partition of unity for |w| > 1.
    """
    omega = np.asarray(omega, dtype=float)
    return np.sqrt(bump(2.0 * omega) ** 2 + bump(omega) ** 2)


def psi2_hat(omega):
    """Angular window, even, supported on [-1, 1] with psi2_hat(0) = 1.

    Squares of integer translates sum to 1 on the real line.
    """
    omega = np.asarray(omega, dtype=float)
    return np.where(
        omega <= 0.0,
        np.sqrt(meyeraux(1.0 + omega)),
        np.sqrt(meyeraux(1.0 - omega)),
    )


def varphi(omega):
    """1-D low-frequency profile: 1 on [-1/2, 1/2], cosine rolloff, 0 outside (-1, 1)."""
    ax = np.abs(np.asarray(omega, dtype=float))
    roll = np.cos(np.pi / 2.0 * meyeraux(2.0 * ax - 1.0))
    return np.select([ax <= 0.5, ax < 1.0], [1.0, roll], default=0.0)


def phi_hat_2d(omega1, omega2):
    """2-D scaling spectrum: varphi of the larger-magnitude coordinate.

    Zero once max(|w1|, |w2|) >= 1. On the diagonal |w1| = |w2| the first
    coordinate is used; varphi makes the choice value-irrelevant.
    """
    omega1 = np.asarray(omega1, dtype=float)
    omega2 = np.asarray(omega2, dtype=float)
    a1 = np.abs(omega1)
    a2 = np.abs(omega2)
    out = np.where((a1 < 1.0) & (a2 <= a1), varphi(omega1), 0.0)
    return np.where((a2 < 1.0) & (a1 < a2), varphi(omega2), out)
