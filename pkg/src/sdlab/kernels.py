"""Covariance kernels and covariance-matrix construction.

Families
--------
* ``gff(d)``            lattice Green's function of simple random walk on Z^d, d >= 3
* ``bargmann_fock(d)``  K(0,x) = exp(-|x|^2/2)
* ``cauchy(alpha, d)``  K(0,x) = (1+|x|^2)^(-alpha/2)
* ``monochromatic_wave(d)``  normalized Fourier transform of the unit-sphere measure
* ``polylog_decay(c, gamma, d)``  K(0,x) = (log(e+|x|))^(-gamma), raw g(r) = c*(log(e+r))^(-gamma)
* ``iid_standard(d)``   identity covariance
* ``explicit(matrix)``  user-supplied symmetric matrix on integer indices

All kernels are evaluated through a single displacement-based code path, so
symmetry K(x,y) == K(y,x) holds exactly.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError, InputError, ModelError, ParameterError

Point = tuple

# relative eigenvalue tolerance treated as roundoff in the PSD check
PSD_REL_TOL = 1e-10
# clipped eigenvalue mass above this fraction of the trace means "not PSD"
PSD_CLIP_LIMIT = 1e-6


@dataclass(frozen=True)
class CovarianceModel:
    """A kernel family with parameters, evaluable at point pairs.

    ``lattice`` marks whether points are meant as sites of Z^d (True) or as
    positions of a scaled grid of R^d.  Models are immutable and safe to share.
    """

    family: str
    dim: int
    alpha: float = 0.0
    gamma: float = 0.0
    scale: float = 1.0
    lattice: bool = False
    matrix: np.ndarray | None = field(default=None, compare=False)

    @property
    def stationary(self) -> bool:
        return self.family != "explicit"

    def __post_init__(self):
        if self.family == "gff" and self.dim < 3:
            raise DomainError(f"gff requires dimension >= 3, got d={self.dim}")
        if self.family == "cauchy" and self.alpha <= 0:
            raise ParameterError(f"cauchy requires alpha > 0, got {self.alpha}")
        if self.family == "monochromatic_wave" and self.dim < 2:
            raise DomainError("monochromatic_wave requires dimension >= 2")
        if self.family == "polylog_decay":
            if self.gamma <= 0:
                raise ParameterError(f"polylog_decay requires gamma > 0, got {self.gamma}")
            if self.scale <= 0:
                raise ParameterError(f"polylog_decay requires c > 0, got {self.scale}")
        if self.family == "explicit":
            m = self.matrix
            if m is None or m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise InputError("explicit model needs a square matrix")
            if not np.array_equal(m, m.T):
                raise InputError("explicit covariance matrix must be symmetric")


def gff(d: int = 3) -> CovarianceModel:
    return CovarianceModel("gff", d, lattice=True)


def bargmann_fock(d: int = 2) -> CovarianceModel:
    return CovarianceModel("bargmann_fock", d)


def cauchy(alpha: float, d: int = 2) -> CovarianceModel:
    return CovarianceModel("cauchy", d, alpha=alpha)


def monochromatic_wave(d: int = 2) -> CovarianceModel:
    return CovarianceModel("monochromatic_wave", d)


def polylog_decay(c: float, gamma: float, d: int = 1) -> CovarianceModel:
    return CovarianceModel("polylog_decay", d, gamma=gamma, scale=c)


def iid_standard(d: int = 1) -> CovarianceModel:
    return CovarianceModel("iid_standard", d, lattice=True)


def explicit(matrix) -> CovarianceModel:
    m = np.asarray(matrix, dtype=float)
    return CovarianceModel("explicit", 1, matrix=m, lattice=True)


# ---------------------------------------------------------------------------
# lattice Green's function of simple random walk (expected-visits normalization)
#
# G_d(x) = int_0^inf prod_k ive(|x_k|, s/d) ds, which satisfies
#   (1/2d) sum_{y~x} G_d(y) - G_d(x) = -delta_{x,0}
# and G_3(0) = 1.5163860591...  The integral is split at s=T with the tail
# mapped through s = 1/u^2 so both pieces are smooth for Gauss-Legendre.

_GREEN_T = 40.0
_GREEN_NODES: dict[int, tuple[np.ndarray, ...]] = {}
_GREEN_CACHE: dict[tuple[int, tuple], float] = {}
_GREEN_LOCK = threading.Lock()


def _green_quadrature(npanels: int = 24, order: int = 24) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    # [0, T] in equal panels
    edges = np.linspace(0.0, _GREEN_T, npanels + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _green_tail_quadrature(npanels: int = 12, order: int = 24) -> tuple[np.ndarray, np.ndarray]:
    # tail int_T^inf f(s) ds = int_0^{1/sqrt(T)} f(1/u^2) * 2 u^-3 du
    x, w = np.polynomial.legendre.leggauss(order)
    umax = 1.0 / math.sqrt(_GREEN_T)
    edges = np.linspace(0.0, umax, npanels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _green_batch(offsets: np.ndarray, d: int) -> np.ndarray:
    """Green's function values for an (m, d) array of integer offsets."""
    if d not in _GREEN_NODES:
        with _GREEN_LOCK:
            if d not in _GREEN_NODES:
                _GREEN_NODES[d] = _green_quadrature() + _green_tail_quadrature()
    s, ws, u, wu = _GREEN_NODES[d]
    a = np.abs(offsets).astype(float)  # (m, d)
    body = np.prod(special.ive(a[:, :, None], s[None, None, :] / d), axis=1) @ ws
    st = 1.0 / u**2
    tail_vals = np.prod(special.ive(a[:, :, None], st[None, None, :] / d), axis=1)
    tail = (tail_vals * (2.0 / u**3)[None, :]) @ wu
    return body + tail


def gff_green(offset, d: int = 3) -> float:
    """G_d at a lattice offset, cached by sorted absolute coordinates."""
    if d < 3:
        raise DomainError("gff green function requires d >= 3")
    key = (d, tuple(sorted(abs(int(v)) for v in offset)))
    hit = _GREEN_CACHE.get(key)
    if hit is not None:
        return hit
    val = float(_green_batch(np.array([key[1]], dtype=float), d)[0])
    with _GREEN_LOCK:
        _GREEN_CACHE.setdefault(key, val)
    return val


# ---------------------------------------------------------------------------
# isotropic kernel profiles K(0, r)


def _wave_profile(r: np.ndarray, d: int) -> np.ndarray:
    """2^nu Gamma(nu+1) r^-nu J_nu(r) with nu = d/2-1, continuous at r=0."""
    nu = d / 2.0 - 1.0
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    small = r < 1e-3
    rs = r[small]
    # ascending series: 1 - (r/2)^2/(nu+1) + (r/2)^4/(2 (nu+1)(nu+2))
    q = (rs / 2.0) ** 2
    out[small] = 1.0 - q / (nu + 1.0) + q * q / (2.0 * (nu + 1.0) * (nu + 2.0))
    rl = r[~small]
    if rl.size:
        norm = 2.0**nu * special.gamma(nu + 1.0)
        if d == 2:
            out[~small] = special.j0(rl)
        else:
            out[~small] = norm * rl ** (-nu) * special.jv(nu, rl)
    return out


def _profile(model: CovarianceModel, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    fam = model.family
    if fam == "iid_standard":
        return np.where(r == 0.0, 1.0, 0.0)
    if fam == "bargmann_fock":
        return np.exp(-(r**2) / 2.0)
    if fam == "cauchy":
        return (1.0 + r**2) ** (-model.alpha / 2.0)
    if fam == "polylog_decay":
        return np.log(math.e + r) ** (-model.gamma)
    if fam == "monochromatic_wave":
        return _wave_profile(r, model.dim)
    raise ModelError(f"family {fam!r} has no isotropic profile")


def polylog_raw_g(model: CovarianceModel, r) -> np.ndarray:
    """Unnormalized decay bound g(r) = c * (log(e+r))^(-gamma); g(0) = c."""
    if model.family != "polylog_decay":
        raise ParameterError("raw g is defined for polylog_decay models only")
    return model.scale * np.log(math.e + np.asarray(r, dtype=float)) ** (-model.gamma)


def _as_point(x) -> Point:
    if np.isscalar(x):
        return (x,)
    return tuple(x)


def cov_of_offsets(model: CovarianceModel, offsets: np.ndarray) -> np.ndarray:
    """Vectorized K(0, offset) for an (m, dim) displacement array (field units)."""
    offsets = np.atleast_2d(np.asarray(offsets, dtype=float))
    if model.family == "gff":
        if not np.allclose(offsets, np.round(offsets)):
            raise DomainError("gff is defined on integer lattice offsets")
        canon = np.sort(np.abs(np.round(offsets).astype(np.int64)), axis=1)
        uniq, inverse = np.unique(canon, axis=0, return_inverse=True)
        vals = np.empty(len(uniq))
        missing = []
        for k, row in enumerate(uniq):
            cached = _GREEN_CACHE.get((model.dim, tuple(row)))
            if cached is None:
                missing.append(k)
            else:
                vals[k] = cached
        if missing:
            fresh = _green_batch(uniq[missing].astype(float), model.dim)
            vals[missing] = fresh
            with _GREEN_LOCK:
                for k, v in zip(missing, fresh):
                    _GREEN_CACHE.setdefault((model.dim, tuple(uniq[k])), float(v))
        return vals[inverse.ravel()]
    if model.family == "explicit":
        raise ModelError("explicit models are not stationary; use eval_cov on indices")
    return _profile(model, np.linalg.norm(offsets, axis=1))


def eval_cov(model: CovarianceModel, x, y) -> float:
    """Covariance K(x, y) between two points of the model's domain."""
    xp, yp = _as_point(x), _as_point(y)
    if model.family == "explicit":
        m = model.matrix
        i, j = int(xp[0]), int(yp[0])
        if not (0 <= i < m.shape[0] and 0 <= j < m.shape[0]):
            raise InputError(f"index ({i},{j}) outside explicit matrix of size {m.shape[0]}")
        return float(m[i, j])
    if len(xp) != model.dim or len(yp) != model.dim:
        raise InputError(f"points must have dimension {model.dim}")
    off = np.array(xp, dtype=float) - np.array(yp, dtype=float)
    return float(cov_of_offsets(model, off[None, :])[0])


def repair_psd(mat: np.ndarray, rel_tol: float = PSD_REL_TOL) -> tuple[np.ndarray, float]:
    """Clip negative eigenvalues to zero.

    Returns the repaired matrix and the clipped eigenvalue mass.  The input is
    returned unchanged when the smallest eigenvalue is above -rel_tol * largest.
    """
    w = np.linalg.eigvalsh(mat)
    wmax = max(w[-1], 0.0)
    clipped = float(-w[w < 0].sum()) if (w < 0).any() else 0.0
    if w[0] >= -rel_tol * max(wmax, 1.0):
        return mat, clipped
    w, v = np.linalg.eigh(mat)
    wc = np.clip(w, 0.0, None)
    rep = (v * wc) @ v.T
    return 0.5 * (rep + rep.T), clipped


def build_cov_matrix(model: CovarianceModel, points, return_clipped_mass: bool = False):
    """Covariance matrix on a finite point set, PSD-checked and repaired.

    Raises ModelError when the clipped eigenvalue mass exceeds
    PSD_CLIP_LIMIT * trace (the kernel is genuinely indefinite on this set).
    """
    pts = [_as_point(p) for p in points]
    if len(set(pts)) != len(pts):
        raise InputError("points must be distinct")
    n = len(pts)
    if model.family == "explicit":
        idx = [int(p[0]) for p in pts]
        m = model.matrix[np.ix_(idx, idx)].astype(float)
    else:
        arr = np.asarray(pts, dtype=float)
        diffs = arr[:, None, :] - arr[None, :, :]
        m = cov_of_offsets(model, diffs.reshape(n * n, -1)).reshape(n, n)
    m = 0.5 * (m + m.T)
    rep, clipped = repair_psd(m)
    tr = float(np.trace(m))
    if clipped > PSD_CLIP_LIMIT * max(tr, 1e-300):
        raise ModelError(
            f"kernel not PSD on this point set: clipped eigenvalue mass {clipped:.3e} "
            f"exceeds {PSD_CLIP_LIMIT:.0e} of trace {tr:.3e}"
        )
    if return_clipped_mass:
        return rep, clipped
    return rep


def export_cov_csv(matrix: np.ndarray, path) -> None:
    """Row-major full-precision decimal CSV."""
    np.savetxt(path, np.asarray(matrix, dtype=float), delimiter=",", fmt="%.17g")
