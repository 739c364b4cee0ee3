"""Seeded Gaussian sampling: dense factorizations, circulant embedding, sprinkling.

Reproducibility contract: every replicate draws from a counter-based Philox
stream keyed by (base_seed, replicate), so draw(plan, r) is a pure function of
the plan and the replicate index, independent of evaluation order and thread
count.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import EmbeddingError, InputError, ModelError, ParameterError
from .kernels import Point, cov_of_offsets, repair_psd

DENSE_FACTOR_TOL = 1e-8
SPECTRUM_CLIP_LIMIT = 1e-6


class FieldSample(NamedTuple):
    """One realization: values aligned with an index map point -> coordinate."""

    values: np.ndarray
    index: Mapping[Point, int]


def _rng(base_seed: int, replicate: int) -> np.random.Generator:
    key = np.array([np.uint64(base_seed & 0xFFFFFFFFFFFFFFFF), np.uint64(replicate)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _fingerprint(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, np.ndarray):
            h.update(np.ascontiguousarray(p).tobytes())
        else:
            h.update(repr(p).encode())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class Grid:
    """Rectangular box of lattice sites with a physical spacing."""

    shape: tuple[int, ...]
    spacing: float = 1.0
    origin: tuple[int, ...] | None = None

    def sites(self) -> list[Point]:
        lo = self.origin or (0,) * len(self.shape)
        ranges = [range(o, o + s) for o, s in zip(lo, self.shape)]
        mesh = np.meshgrid(*ranges, indexing="ij")
        coords = np.stack([m.ravel() for m in mesh], axis=1)
        return [tuple(int(c) for c in row) for row in coords]


class SamplerPlan:
    """Common facade: point index map, seeded draws, covariance access."""

    mode: str
    points: tuple[Point, ...]
    index: dict[Point, int]
    base_seed: int
    fingerprint: str

    @property
    def npoints(self) -> int:
        return len(self.points)

    def draw_batch(self, replicates: Iterable[int]) -> np.ndarray:
        raise NotImplementedError

    def cov_block(self, pts1, pts2) -> np.ndarray:
        raise NotImplementedError

    def max_abs_cov(self) -> float:
        raise NotImplementedError

    def sample(self, replicate: int) -> FieldSample:
        return FieldSample(self.draw_batch([int(replicate)])[0], self.index)


class DensePlan(SamplerPlan):
    mode = "dense-factor"

    def __init__(self, cov: np.ndarray, factor: np.ndarray, base_seed: int, points):
        self.cov = cov
        self.factor = factor
        self.base_seed = int(base_seed)
        self.points = tuple(points)
        self.index = {p: i for i, p in enumerate(self.points)}
        self.fingerprint = _fingerprint("dense", factor, base_seed)

    def draw_batch(self, replicates) -> np.ndarray:
        reps = list(replicates)
        n = self.cov.shape[0]
        out = np.empty((len(reps), n))
        for k, r in enumerate(reps):
            z = _rng(self.base_seed, int(r)).standard_normal(n)
            out[k] = self.factor @ z
        return out

    def draw_pair_batch(self, replicates) -> tuple[np.ndarray, np.ndarray]:
        """Two independent copies per replicate from one stream (X, X')."""
        reps = list(replicates)
        n = self.cov.shape[0]
        a = np.empty((len(reps), n))
        b = np.empty((len(reps), n))
        for k, r in enumerate(reps):
            z = _rng(self.base_seed, int(r)).standard_normal((2, n))
            a[k] = self.factor @ z[0]
            b[k] = self.factor @ z[1]
        return a, b

    def cov_block(self, pts1, pts2) -> np.ndarray:
        i = [self.index[tuple(p)] for p in pts1]
        j = [self.index[tuple(p)] for p in pts2]
        return self.cov[np.ix_(i, j)]

    def max_abs_cov(self) -> float:
        return float(np.abs(self.cov).max())


def plan_dense(cov: np.ndarray, base_seed: int, points=None) -> DensePlan:
    """Factor a covariance matrix for seeded sampling.

    The factor L has columns ordered by descending eigenvalue with zero
    columns on degenerate directions, so LL^T reproduces the repaired matrix
    to machine precision and samples lie in the column space of the input.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise InputError("covariance must be a square matrix")
    if not np.allclose(cov, cov.T, atol=0, rtol=0):
        raise InputError("covariance must be exactly symmetric")
    rep, clipped = repair_psd(cov)
    tr = float(np.trace(cov))
    if clipped > 1e-6 * max(tr, 1e-300):
        raise ModelError(f"matrix indefinite beyond repair tolerance (clipped mass {clipped:.2e})")
    w, v = np.linalg.eigh(rep)
    order = np.argsort(-w, kind="stable")
    w, v = np.clip(w[order], 0.0, None), v[:, order]
    # sign convention: largest-magnitude entry of each column positive
    for k in range(v.shape[1]):
        j = np.argmax(np.abs(v[:, k]))
        if v[j, k] < 0:
            v[:, k] = -v[:, k]
    factor = v * np.sqrt(w)
    err = np.abs(factor @ factor.T - rep).max()
    if err > DENSE_FACTOR_TOL * max(1.0, np.abs(rep).max()):
        raise ModelError(f"factorization residual {err:.2e} above tolerance")
    if points is None:
        points = [(i,) for i in range(cov.shape[0])]
    return DensePlan(rep, factor, base_seed, [tuple(p) if not np.isscalar(p) else (p,) for p in points])


class CirculantPlan(SamplerPlan):
    mode = "circulant"

    def __init__(self, model, grid: Grid, torus_shape, sqrt_spectrum, clipped_fraction, base_seed):
        self.model = model
        self.grid = grid
        self.torus_shape = tuple(torus_shape)
        self.sqrt_spectrum = sqrt_spectrum
        self.clipped_fraction = float(clipped_fraction)
        self.base_seed = int(base_seed)
        self.points = tuple(grid.sites())
        self.index = {p: i for i, p in enumerate(self.points)}
        self.fingerprint = _fingerprint("circ", sqrt_spectrum, base_seed, grid.shape, grid.spacing)
        self._box = tuple(slice(0, s) for s in grid.shape)

    _FFT_BLOCK = 512  # replicates per FFT batch, bounds the transient working set

    def draw_batch(self, replicates) -> np.ndarray:
        reps = list(replicates)
        out = np.empty((len(reps), self.npoints))
        shape = self.torus_shape
        ntot = int(np.prod(shape))
        axes = tuple(range(1, len(shape) + 1))
        for lo in range(0, len(reps), self._FFT_BLOCK):
            block = reps[lo : lo + self._FFT_BLOCK]
            xi = np.empty((len(block),) + shape, dtype=complex)
            for k, r in enumerate(block):
                g = _rng(self.base_seed, int(r))
                xi[k] = g.standard_normal(shape) + 1j * g.standard_normal(shape)
            y = np.fft.ifftn(self.sqrt_spectrum[None] * xi, axes=axes) * math.sqrt(ntot)
            for k in range(len(block)):
                out[lo + k] = y[k].real[self._box].ravel()
        return out

    def cov_block(self, pts1, pts2) -> np.ndarray:
        a = np.asarray(list(pts1), dtype=float)
        b = np.asarray(list(pts2), dtype=float)
        diffs = (a[:, None, :] - b[None, :, :]) * self.grid.spacing
        flat = cov_of_offsets(self.model, diffs.reshape(-1, diffs.shape[-1]))
        return flat.reshape(len(a), len(b))

    def max_abs_cov(self) -> float:
        # stationary PSD kernel: the diagonal dominates every entry
        return float(cov_of_offsets(self.model, np.zeros((1, self.model.dim)))[0])


def _wrapped_covariance(model, grid: Grid, torus_shape) -> np.ndarray:
    axes_disp = [np.minimum(np.arange(m), m - np.arange(m)) * grid.spacing for m in torus_shape]
    mesh = np.meshgrid(*axes_disp, indexing="ij")
    disp = np.stack([m.ravel() for m in mesh], axis=1)
    return cov_of_offsets(model, disp).reshape(torus_shape)


def plan_circulant(model, grid: Grid, base_seed: int, padding: int = 2) -> CirculantPlan:
    """Embed a stationary model on a torus of ``padding`` times the box extent."""
    if not model.stationary:
        raise ModelError("circulant embedding requires a stationary model")
    if len(grid.shape) != model.dim:
        raise InputError(f"grid dimension {len(grid.shape)} != model dimension {model.dim}")
    if padding < 2:
        raise ParameterError("padding factor must be >= 2")
    torus_shape = tuple(int(2 ** math.ceil(math.log2(max(2, s * padding)))) for s in grid.shape)
    c = _wrapped_covariance(model, grid, torus_shape)
    lam = np.fft.fftn(c).real
    neg = float(-lam[lam < 0].sum())
    tot = float(np.abs(lam).sum())
    frac = neg / tot if tot > 0 else 0.0
    if frac > SPECTRUM_CLIP_LIMIT:
        raise EmbeddingError(
            f"circulant spectrum has clipped mass fraction {frac:.3e} > {SPECTRUM_CLIP_LIMIT:.0e}; "
            f"try padding={2 * padding}",
            suggested_padding=2 * padding,
        )
    lam = np.clip(lam, 0.0, None)
    return CirculantPlan(model, grid, torus_shape, np.sqrt(lam), frac, base_seed)


def draw(plan: SamplerPlan, replicate: int) -> FieldSample:
    """One seeded realization of the plan's Gaussian vector."""
    return plan.sample(replicate)


def shift(sample, eps: float):
    """Add a constant level to every coordinate (eps may be negative)."""
    if isinstance(sample, FieldSample):
        return FieldSample(sample.values + eps, sample.index)
    return np.asarray(sample, dtype=float) + eps


class DecomposedPlan(SamplerPlan):
    """Moving-average split X = X1 + X2 from a shared white noise.

    q is the inverse Fourier square root of the grid spectrum; q1 keeps the
    kernel within the truncation radius (torus metric), q2 the remainder.
    X1 restricted to sets separated by more than twice the radius is
    independent across the sets; sigma2 = sum of q2^2 bounds Var[X2(i)].
    """

    mode = "circulant"

    def __init__(self, base: CirculantPlan, radius: float):
        self.model = base.model
        self.grid = base.grid
        self.torus_shape = base.torus_shape
        self.base_seed = base.base_seed
        self.points = base.points
        self.index = base.index
        self._box = base._box
        self.radius = float(radius)
        q = np.fft.ifftn(base.sqrt_spectrum).real
        axes_disp = [np.minimum(np.arange(m), m - np.arange(m)) * base.grid.spacing for m in base.torus_shape]
        mesh = np.meshgrid(*axes_disp, indexing="ij")
        dist = np.sqrt(sum(m**2 for m in mesh))
        near = dist <= self.radius
        self.q_near = np.where(near, q, 0.0)
        self.q_far = np.where(near, 0.0, q)
        self.sigma2 = float((self.q_far**2).sum())
        self._spec_near = np.fft.fftn(self.q_near)
        self._spec_far = np.fft.fftn(self.q_far)
        self.fingerprint = _fingerprint("decomp", base.sqrt_spectrum, base.base_seed, radius)

    _FFT_BLOCK = CirculantPlan._FFT_BLOCK

    def draw_split_batch(self, replicates) -> tuple[np.ndarray, np.ndarray]:
        reps = list(replicates)
        shape = self.torus_shape
        axes = tuple(range(1, len(shape) + 1))
        n = len(reps)
        out1 = np.empty((n, self.npoints))
        out2 = np.empty((n, self.npoints))
        box = (slice(None),) + self._box
        for lo in range(0, n, self._FFT_BLOCK):
            block = reps[lo : lo + self._FFT_BLOCK]
            w = np.empty((len(block),) + shape)
            for k, r in enumerate(block):
                w[k] = _rng(self.base_seed, int(r)).standard_normal(shape)
            wf = np.fft.fftn(w, axes=axes)
            x1 = np.fft.ifftn(wf * self._spec_near[None], axes=axes).real
            x2 = np.fft.ifftn(wf * self._spec_far[None], axes=axes).real
            out1[lo : lo + len(block)] = x1[box].reshape(len(block), -1)
            out2[lo : lo + len(block)] = x2[box].reshape(len(block), -1)
        return out1, out2

    def draw_batch(self, replicates) -> np.ndarray:
        x1, x2 = self.draw_split_batch(replicates)
        return x1 + x2

    def cov_block(self, pts1, pts2) -> np.ndarray:
        a = np.asarray(list(pts1), dtype=float)
        b = np.asarray(list(pts2), dtype=float)
        diffs = (a[:, None, :] - b[None, :, :]) * self.grid.spacing
        return cov_of_offsets(self.model, diffs.reshape(-1, diffs.shape[-1])).reshape(len(a), len(b))

    def max_abs_cov(self) -> float:
        return float(cov_of_offsets(self.model, np.zeros((1, self.model.dim)))[0])


def plan_decomposed(model, grid: Grid, radius: float, base_seed: int, padding: int = 2) -> DecomposedPlan:
    if model.family not in ("bargmann_fock", "cauchy"):
        raise ParameterError("moving-average decomposition supports bargmann_fock and cauchy")
    if radius < grid.spacing:
        raise ParameterError(f"truncation radius {radius} smaller than one grid cell {grid.spacing}")
    base = plan_circulant(model, grid, base_seed, padding=padding)
    return DecomposedPlan(base, radius)


def draw_decomposed(plan: DecomposedPlan, replicate: int):
    """(X1, X2, sigma2) for one replicate; X1 + X2 has the plan's law."""
    x1, x2 = plan.draw_split_batch([int(replicate)])
    return FieldSample(x1[0], plan.index), FieldSample(x2[0], plan.index), plan.sigma2


# ---------------------------------------------------------------------------
# field snapshot format: one JSON header line, then row-major little-endian f8


def write_snapshot(path, sample: FieldSample, grid: Grid, seed: int, replicate: int, family: str) -> None:
    header = {
        "family": family,
        "grid_shape": list(grid.shape),
        "spacing": grid.spacing,
        "seed": int(seed),
        "replicate": int(replicate),
        "dtype": "<f8",
        "order": "row-major",
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.ascontiguousarray(sample.values, dtype="<f8").tobytes())


def read_snapshot(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        values = np.frombuffer(fh.read(), dtype="<f8")
    return header, values
