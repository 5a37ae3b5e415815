"""Convex multi-label segmentation by ADMM.

A labeling u with q layers is sought inside the relaxed constraint set
C (entries in [0, 1], layers summing to 1 per pixel), minimizing
gamma * <u, s> plus a weighted sparsity penalty on transformed label
layers; the configured weights act directly as shrinkage thresholds.
The splitting introduces v (transform coefficients) and w (the
constrained copy), giving closed-form subproblems: the shearlet route
inverts its normal equations exactly because analysis followed by
synthesis is the identity, so A^T A = 2I.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.sparse
import scipy.sparse.linalg

from .frame import weight_index
from .regularizers import GRAM_DFT, GRAM_GENERAL, GRAM_IDENTITY, coupled_group_norm
from .transform import Coefficients, forward, inverse

__all__ = [
    "AdmmConfig",
    "ConvergenceRecord",
    "SolveResult",
    "DivergenceError",
    "CgError",
    "as_codebook",
    "data_term",
    "soft_shrink",
    "group_shrink",
    "project_simplex",
    "admm_shearlet",
    "admm_generic",
    "extract_labels",
    "mislabel_rate",
]

log = logging.getLogger("shearseg")


class DivergenceError(Exception):
    """An iterate went non-finite; names the iteration and subproblem."""

    def __init__(self, iteration, subproblem):
        self.iteration = iteration
        self.subproblem = subproblem
        super().__init__(f"non-finite iterate at iteration {iteration} ({subproblem})")


class CgError(Exception):
    """Inner conjugate-gradient solve failed to converge."""


@dataclass(frozen=True)
class AdmmConfig:
    """Solver parameters.

    gamma scales the data term; weights set the shrinkage thresholds
    applied to transformed coefficients, either a scalar or (for the
    shearlet solver) one weight per scale, lowpass first, length
    1 + number of scales. tol > 0 enables an early exit on relative
    u-change; 0 runs exactly max_iters iterations.
    """

    gamma: float
    weights: object
    max_iters: int
    tol: float = 0.0

    def __post_init__(self):
        g = float(self.gamma)
        if not np.isfinite(g) or g <= 0:
            raise ValueError(f"gamma must be a positive real, got {self.gamma!r}")
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")
        if not (float(self.tol) >= 0):
            raise ValueError("tol must be nonnegative")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "max_iters", int(self.max_iters))
        object.__setattr__(self, "tol", float(self.tol))


@dataclass
class ConvergenceRecord:
    iterations: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    normal_residuals: list = field(default_factory=list)

    def append(self, iteration, gap, energy):
        self.iterations.append(int(iteration))
        self.gaps.append(float(gap))
        self.energies.append(float(energy))

    def csv_lines(self):
        yield "iteration,gap,energy"
        for i, g, e in zip(self.iterations, self.gaps, self.energies):
            yield f"{i},{g:.12e},{e:.12e}"


@dataclass
class SolveResult:
    u: np.ndarray
    w: np.ndarray
    record: ConvergenceRecord
    iterations_run: int


def as_codebook(values):
    """Normalize codebook input to a (q, channels) float array, q >= 2."""
    c = np.asarray(values, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    if c.ndim != 2 or c.shape[0] < 2:
        raise ValueError(f"codebook needs at least 2 labels, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("codebook entries must be finite")
    return c


def data_term(f, codebook, p=2):
    """Per-pixel, per-label l_p^p distance to the codebook, shape (q, n, n).

    f is (n, n) grayscale or (n, n, channels); channel counts must match
    the codebook.
    """
    if p not in (1, 2):
        raise ValueError(f"p must be 1 or 2, got {p!r}")
    c = as_codebook(codebook)
    f = np.asarray(f, dtype=float)
    if f.ndim == 2:
        f = f[:, :, None]
    if f.ndim != 3 or f.shape[2] != c.shape[1]:
        raise ValueError(
            f"image channels {f.shape[2] if f.ndim == 3 else 1} do not match "
            f"codebook channels {c.shape[1]}"
        )
    diff = f[None, :, :, :] - c[:, None, None, :]
    if p == 2:
        return np.einsum("kijc,kijc->kij", diff, diff)
    return np.abs(diff).sum(axis=-1)


def soft_shrink(x, lam):
    """Componentwise soft threshold, the proximal map of lam * |.|."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("shrinkage threshold must be nonnegative")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def group_shrink(v, q, thresh):
    """Isotropic group soft shrinkage: each pixel's coefficient group
    (all labels and directions jointly) is scaled toward zero by
    max(0, 1 - thresh/norm), the proximal map of the coupled norm."""
    if thresh < 0:
        raise ValueError("shrinkage threshold must be nonnegative")
    v = np.asarray(v, dtype=float)
    norms = coupled_group_norm(v, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(norms > 0, np.maximum(0.0, 1.0 - thresh / norms), 0.0)
    return v * factor[None, None, :, :]


def project_simplex(g):
    """Euclidean projection onto the unit simplex along axis 0.

    Projects onto the sum-1 hyperplane, then repeatedly zeroes negative
    components and re-projects the remaining free ones. Terminates in at
    most q rounds; zeroed components never re-enter.
    """
    g = np.asarray(g, dtype=float)
    q = g.shape[0]
    x = g + (1.0 - g.sum(axis=0)) / q
    clamped = np.zeros(g.shape, dtype=bool)
    for _ in range(q):
        neg = (x < 0.0) & ~clamped
        if not neg.any():
            break
        clamped |= neg
        x = np.where(clamped, 0.0, x)
        nfree = q - clamped.sum(axis=0)
        x = np.where(clamped, 0.0, x + (1.0 - x.sum(axis=0)) / np.maximum(nfree, 1))
    return x


def extract_labels(u):
    """Per-pixel argmax layer as 1-based labels; ties take the lowest label."""
    return np.argmax(np.asarray(u), axis=0) + 1


def mislabel_rate(labels, truth):
    """Fraction of pixels whose label differs from the reference."""
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape != truth.shape:
        raise ValueError(f"shape mismatch: {labels.shape} vs {truth.shape}")
    return float(np.mean(labels != truth))


def _check_data_term(s):
    s = np.asarray(s, dtype=float)
    if s.ndim != 3 or s.shape[1] != s.shape[2]:
        raise ValueError(f"data term must be (q, n, n), got {s.shape}")
    if s.shape[0] < 2:
        raise ValueError("data term needs at least 2 label layers")
    if not np.all(np.isfinite(s)):
        raise ValueError("data term entries must be finite")
    return s


def _scale_weights(weights, system):
    """Expand solver weights to one entry per subband.

    A scalar applies everywhere (lowpass included). A vector is indexed
    by scale, entry 0 for the lowpass plane; wrong lengths are padded
    with the final entry or truncated, with a warning.
    """
    lam = np.atleast_1d(np.asarray(weights, dtype=float))
    want = system.grid.j0 + 1
    if lam.size == 1:
        lam = np.full(want, lam[0])
    elif lam.size != want:
        warnings.warn(
            f"{lam.size} scale weights supplied but the system has {want} "
            f"(lowpass + {system.grid.j0} scales); padding/truncating",
            stacklevel=3,
        )
        if lam.size < want:
            lam = np.concatenate([lam, np.full(want - lam.size, lam[-1])])
        else:
            lam = lam[:want]
    return lam, np.array([lam[weight_index(sb)] for sb in system.subbands])


def _guard_finite(arr, iteration, subproblem):
    if not np.all(np.isfinite(arr)):
        raise DivergenceError(iteration, subproblem)


def admm_shearlet(s, system, cfg, collect_normal_residual=False, workers=None):
    """Segment from a data term with per-scale shearlet sparsity.

    Each iteration: closed-form u-update (synthesis of v - b_v, plus
    w - b_w, minus gamma*s, halved), componentwise soft shrinkage of
    the analyzed u for v at the per-scale weights, per-pixel simplex
    projection for w, then the dual updates. Returns w, which is
    feasible by construction.
    """
    s = _check_data_term(s)
    q, n = s.shape[0], s.shape[1]
    if n != system.n:
        raise ValueError(f"data term side {n} != system side {system.n}")
    _, lam_sub = _scale_weights(cfg.weights, system)
    thresh = lam_sub[:, None, None]
    eta = system.num_subbands

    u = np.zeros((q, n, n))
    v = np.zeros((q, eta, n, n))
    bv = np.zeros((q, eta, n, n))
    w = np.full((q, n, n), 1.0 / q)
    bw = np.zeros((q, n, n))
    record = ConvergenceRecord()

    for it in range(1, cfg.max_iters + 1):
        u_prev = u
        u = np.empty_like(u_prev)
        for l in range(q):
            synth = inverse(Coefficients(v[l] - bv[l], system), workers=workers)
            u[l] = 0.5 * (synth + (w[l] - bw[l]) - cfg.gamma * s[l])
        _guard_finite(u, it, "u-update")

        if collect_normal_residual:
            res = 0.0
            for l in range(q):
                lhs = inverse(forward(u[l], system, workers=workers), workers=workers) + u[l]
                rhs = 2.0 * u[l]
                res = max(res, float(np.abs(lhs - rhs).max()))
            record.normal_residuals.append(res)

        reg_energy = 0.0
        for l in range(q):
            g = forward(u[l], system, workers=workers).planes
            reg_energy += float((lam_sub[:, None, None] * np.abs(g)).sum())
            g += bv[l]
            v[l] = soft_shrink(g, thresh)
            bv[l] = g - v[l]
        _guard_finite(v, it, "v-update")

        gw = u + bw
        w = project_simplex(gw)
        bw = gw - w
        _guard_finite(w, it, "w-update")

        gap = float(np.abs(u - w).max())
        energy = float((u * s).sum()) + reg_energy
        if not np.isfinite(gap) or not np.isfinite(energy):
            raise DivergenceError(it, "progress metrics")
        record.append(it, gap, energy)

        if cfg.tol > 0:
            change = float(np.abs(u - u_prev).max())
            scale = max(float(np.abs(u).max()), 1e-30)
            if change / scale < cfg.tol:
                return SolveResult(u=u, w=w, record=record, iterations_run=it)
    return SolveResult(u=u, w=w, record=record, iterations_run=record.iterations[-1])


def _solve_u_dft(rhs, gram_spectrum, workers=None):
    denom = 1.0 + gram_spectrum
    out = sfft.ifft2(sfft.fft2(rhs, workers=workers) / denom, workers=workers)
    return out.real


def _solve_u_cg(rhs, a_mat, x0, rtol=1e-6, maxiter=500):
    x, info = scipy.sparse.linalg.cg(
        a_mat, rhs.ravel(), x0=x0.ravel(), rtol=rtol, maxiter=maxiter
    )
    if info != 0:
        raise CgError(f"conjugate gradient did not converge (info={info})")
    return x.reshape(rhs.shape)


def admm_generic(s, op, cfg, workers=None):
    """Segment with an arbitrary difference operator and isotropic
    group-coupled shrinkage (labels and directions jointly, per pixel).

    The u-update solves (I + D^T D) u = rhs per layer, using the
    operator's Gram structure: an identity multiple directly, a DFT
    diagonalization for periodic differences, or warm-started conjugate
    gradients otherwise.
    """
    s = _check_data_term(s)
    q, n = s.shape[0], s.shape[1]
    if op.shape_in != (n, n):
        raise ValueError(f"operator expects {op.shape_in}, data term is {n} x {n}")
    lam = np.atleast_1d(np.asarray(cfg.weights, dtype=float))
    if lam.size != 1:
        raise ValueError("the generic solver takes a single scalar weight")
    lam = float(lam[0])
    m = op.shape_out[0]

    gram_arg = None
    if op.gram_structure == GRAM_DFT:
        gram_arg = op.gram_spectrum
    elif op.gram_structure == GRAM_GENERAL:
        if op.gram_matrix is None:
            raise ValueError("general operator needs its Gram matrix for the u-update")
        gram_arg = scipy.sparse.identity(n * n, format="csr") + op.gram_matrix
    elif op.gram_structure != GRAM_IDENTITY:
        raise ValueError(f"unknown gram structure {op.gram_structure!r}")

    u = np.zeros((q, n, n))
    v = np.zeros((q, m, n, n))
    bv = np.zeros((q, m, n, n))
    w = np.full((q, n, n), 1.0 / q)
    bw = np.zeros((q, n, n))
    record = ConvergenceRecord()

    for it in range(1, cfg.max_iters + 1):
        u_prev = u
        u = np.empty_like(u_prev)
        for l in range(q):
            rhs = op.apply_adjoint(v[l] - bv[l]) + (w[l] - bw[l]) - cfg.gamma * s[l]
            if op.gram_structure == GRAM_IDENTITY:
                u[l] = rhs / (1.0 + op.gram_scale)
            elif op.gram_structure == GRAM_DFT:
                u[l] = _solve_u_dft(rhs, gram_arg, workers=workers)
            else:
                u[l] = _solve_u_cg(rhs, gram_arg, u_prev[l])
        _guard_finite(u, it, "u-update")

        gv = np.stack([op.apply(u[l]) for l in range(q)]) + bv
        du_norm = coupled_group_norm(gv - bv, q)
        reg_energy = lam * float(du_norm.sum())
        v = group_shrink(gv, q, lam)
        bv = gv - v
        _guard_finite(v, it, "v-update")

        gw = u + bw
        w = project_simplex(gw)
        bw = gw - w
        _guard_finite(w, it, "w-update")

        gap = float(np.abs(u - w).max())
        energy = float((u * s).sum()) + reg_energy
        if not np.isfinite(gap) or not np.isfinite(energy):
            raise DivergenceError(it, "progress metrics")
        record.append(it, gap, energy)

        if cfg.tol > 0:
            change = float(np.abs(u - u_prev).max())
            scale = max(float(np.abs(u).max()), 1e-30)
            if change / scale < cfg.tol:
                return SolveResult(u=u, w=w, record=record, iterations_run=it)
    return SolveResult(u=u, w=w, record=record, iterations_run=record.iterations[-1])
