"""Difference operators used by the comparison regularizers.

Both the discrete gradient (total variation) and the nonlocal patch
graph operator are exposed through one linear-operator contract so the
generic solver can treat them uniformly: apply, apply the adjoint, and
report how (I + D^T D) can be inverted.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.ndimage
import scipy.sparse

__all__ = [
    "LinearOp",
    "NLGraph",
    "grad",
    "grad_operator",
    "patch_distance",
    "build_nl_graph",
    "nl_operator",
    "coupled_group_norm",
]

GRAM_IDENTITY = "identity-multiple"
GRAM_DFT = "dft-diagonalizable"
GRAM_GENERAL = "general"


@dataclass
class LinearOp:
    """A linear map with its adjoint and the structure of its Gram matrix.

    gram_structure is one of "identity-multiple" (D^T D = gram_scale * I),
    "dft-diagonalizable" (D^T D has DFT eigenvalues gram_spectrum), or
    "general" (D^T D available as the sparse gram_matrix).
    """

    shape_in: tuple
    shape_out: tuple
    apply: Callable
    apply_adjoint: Callable
    gram_structure: str
    gram_scale: float | None = None
    gram_spectrum: np.ndarray | None = None
    gram_matrix: "scipy.sparse.spmatrix | None" = None

    @property
    def input_dim(self):
        return int(np.prod(self.shape_in))

    @property
    def output_dim(self):
        return int(np.prod(self.shape_out))


def grad(u):
    """Periodic forward differences.

    (n, n) input gives (2, n, n): horizontal then vertical difference.
    (q, n, n) input gives (q, 2, n, n), per layer.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim == 2:
        return np.stack([np.roll(u, -1, axis=1) - u, np.roll(u, -1, axis=0) - u])
    if u.ndim == 3:
        return np.stack([grad(layer) for layer in u])
    raise ValueError(f"expected (n, n) or (q, n, n), got shape {u.shape}")


def _grad_adjoint(p):
    dx, dy = p[0], p[1]
    return (np.roll(dx, 1, axis=1) - dx) + (np.roll(dy, 1, axis=0) - dy)


def grad_operator(n):
    """Gradient as a LinearOp on (n, n) images, periodic boundary.

    Periodicity makes D^T D diagonal in the DFT basis with eigenvalues
    4 sin^2(pi k1 / n) + 4 sin^2(pi k2 / n).
    """
    xi = np.arange(n, dtype=float)
    sym1d = 4.0 * np.sin(np.pi * xi / n) ** 2
    spectrum = sym1d[:, None] + sym1d[None, :]
    return LinearOp(
        shape_in=(n, n),
        shape_out=(2, n, n),
        apply=grad,
        apply_adjoint=_grad_adjoint,
        gram_structure=GRAM_DFT,
        gram_spectrum=spectrum,
    )


def _gaussian_stencil(p, a):
    r = p // 2
    t = np.arange(-r, r + 1, dtype=float)
    g = np.exp(-(t[:, None] ** 2 + t[None, :] ** 2) / (2.0 * a ** 2))
    return g / g.sum()


def patch_distance(f, i, j, p=5, a=2.0):
    """Gaussian-weighted squared distance between the p x p patches at
    pixels i and j (row, col), with mirrored borders."""
    if p % 2 == 0 or p < 1:
        raise ValueError("patch side must be odd and positive")
    f = np.asarray(f, dtype=float)
    r = p // 2
    fp = np.pad(f, r, mode="symmetric")
    pi = fp[i[0]:i[0] + p, i[1]:i[1] + p]
    pj = fp[j[0]:j[0] + p, j[1]:j[1] + p]
    return float((_gaussian_stencil(p, a) * (pi - pj) ** 2).sum())


@dataclass(frozen=True)
class NLGraph:
    """Symmetric 0/1 patch-similarity graph with bounded vertex degree.

    links[i] lists the neighbors of pixel i (raster index) in the order
    the edges were created; every pixel has at most 2 * mtilde of them.
    """

    n: int
    mtilde: int
    patch: int
    window: int
    a: float
    links: tuple

    @property
    def degrees(self):
        return np.array([len(l) for l in self.links])

    def adjacency(self):
        """Sparse symmetric adjacency over the n^2 pixels."""
        rows = [i for i, ls in enumerate(self.links) for _ in ls]
        cols = [j for ls in self.links for j in ls]
        m = scipy.sparse.coo_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(self.n ** 2, self.n ** 2)
        )
        return m.tocsr()


def _offset_distance_maps(f, p, window, a):
    """d(i, i+delta) for every window offset delta, each as an (n, n) map."""
    n = f.shape[0]
    rp, rw = p // 2, window // 2
    pad = rp + rw
    fp = np.pad(f, pad, mode="symmetric")
    g = _gaussian_stencil(p, a)
    offsets = [
        (dr, dc)
        for dr in range(-rw, rw + 1)
        for dc in range(-rw, rw + 1)
        if (dr, dc) != (0, 0)
    ]
    base = fp[rw:rw + n + 2 * rp, rw:rw + n + 2 * rp]
    maps = np.empty((len(offsets), n, n))
    for idx, (dr, dc) in enumerate(offsets):
        shifted = fp[rw + dr:rw + dr + n + 2 * rp, rw + dc:rw + dc + n + 2 * rp]
        dsq = (base - shifted) ** 2
        full = scipy.ndimage.correlate(dsq, g, mode="constant")
        maps[idx] = full[rp:rp + n, rp:rp + n]
    return offsets, maps


def build_nl_graph(f, p=5, window=15, a=2.0, mtilde=5):
    """Select mutual patch neighbors pixel by pixel in raster order.

    Pixel i links to its k closest candidates inside the window, where
    k = max(0, min(mtilde, 2*mtilde - current degree of i)); candidates
    already linked to i or already at full degree are skipped, which
    caps every degree at 2*mtilde. Ties go to the earlier raster index.
    """
    f = np.asarray(f, dtype=float)
    if f.ndim == 3:
        f = f.mean(axis=2)
    n = f.shape[0]
    offsets, maps = _offset_distance_maps(f, p, window, a)
    off = np.array(offsets)

    links = [[] for _ in range(n * n)]
    deg = np.zeros(n * n, dtype=int)
    cap = 2 * mtilde
    for r in range(n):
        cand_r = r + off[:, 0]
        row_ok = (cand_r >= 0) & (cand_r < n)
        for c in range(n):
            i = r * n + c
            k = min(mtilde, cap - deg[i])
            if k <= 0:
                continue
            cand_c = c + off[:, 1]
            ok = row_ok & (cand_c >= 0) & (cand_c < n)
            cand = cand_r[ok] * n + cand_c[ok]
            dist = maps[ok, r, c]
            order = np.lexsort((cand, dist))
            taken = 0
            ls_i = links[i]
            for t in order:
                j = int(cand[t])
                if deg[j] >= cap or j in ls_i:
                    continue
                ls_i.append(j)
                links[j].append(i)
                deg[i] += 1
                deg[j] += 1
                taken += 1
                if taken == k:
                    break
    return NLGraph(
        n=n, mtilde=mtilde, patch=p, window=window, a=a,
        links=tuple(tuple(ls) for ls in links),
    )


def nl_operator(graph):
    """Difference operator of the patch graph as a LinearOp.

    Slot t of pixel i occupies output row t*n^2 + i and computes
    x[neighbor] - x[i]; slots past the pixel's degree stay zero rows.
    """
    n, m = graph.n, 2 * graph.mtilde
    npix = n * n
    rows, cols, vals = [], [], []
    for i, ls in enumerate(graph.links):
        for t, j in enumerate(ls):
            r = t * npix + i
            rows.extend((r, r))
            cols.extend((j, i))
            vals.extend((1.0, -1.0))
    mat = scipy.sparse.csr_matrix(
        (vals, (rows, cols)), shape=(m * npix, npix)
    )
    mat_t = mat.T.tocsr()

    def apply(u):
        return (mat @ np.asarray(u, dtype=float).ravel()).reshape(m, n, n)

    def apply_adjoint(y):
        return (mat_t @ np.asarray(y, dtype=float).ravel()).reshape(n, n)

    return LinearOp(
        shape_in=(n, n),
        shape_out=(m, n, n),
        apply=apply,
        apply_adjoint=apply_adjoint,
        gram_structure=GRAM_GENERAL,
        gram_matrix=(mat_t @ mat).tocsr(),
    )


def coupled_group_norm(v, q):
    """Per-pixel Euclidean norm across all labels and difference
    directions; v has shape (q, m, n, n) (or any leading axes whose
    product is a multiple of q) with pixels in the trailing two axes."""
    v = np.asarray(v, dtype=float)
    lead = int(np.prod(v.shape[:-2])) if v.ndim > 2 else 1
    if lead % q:
        raise ValueError(f"leading size {lead} is not a multiple of q={q}")
    return np.sqrt((v ** 2).sum(axis=tuple(range(v.ndim - 2))))
