"""Monte Carlo verification engine for the decoupling inequality suite.

Every verifier reduces to threshold statistics: for an increasing event A and
a field X, occurs(A, X + u) iff T_A(X) <= u, so one threshold array per event
serves every sprinkling level.  This makes sprinkled indicators exactly
monotone in the sprinkling parameter replicate by replicate.

Difference estimators are paired: replicates are grouped in twos (a, b) and

    d = (J(a) + J(b))/2 - (S1(a) S2(b) + S1(b) S2(a))/2

is an unbiased per-pair statistic for P[A1 and A2] - P[X+e1 in A1] P[X+e2 in A2]
whose empirical standard deviation gives the standard error.  All reductions
run in fixed replicate order, so reports are bit-identical for any worker
count.
"""

from __future__ import annotations

import threading
import time
import warnings
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import analytic, measures
from .errors import InputError, ParameterError, PreconditionError
from .events import EventSpec, compile_event
from .sampler import DensePlan, Grid, SamplerPlan, plan_decomposed

VERDICT_PASS = "pass"
VERDICT_NOISE = "pass-within-noise"
VERDICT_FAIL = "fail"
VERDICT_NA = "not-applicable"


def classify(slack: float, se: float) -> str:
    """fail only when slack < -3 combined standard errors."""
    if slack >= 0:
        return VERDICT_PASS
    if slack >= -3.0 * se:
        return VERDICT_NOISE
    return VERDICT_FAIL


_WORST = {VERDICT_PASS: 0, VERDICT_NOISE: 1, VERDICT_NA: 2, VERDICT_FAIL: 3}


@dataclass(frozen=True)
class TermEstimate:
    value: float
    se: float
    n: int


@dataclass(frozen=True)
class SideCheck:
    name: str
    estimate: float
    se: float
    bound: float
    slack: float
    verdict: str


@dataclass
class InequalityReport:
    theorem_id: str
    terms: dict[str, TermEstimate]
    sides: list[SideCheck]
    constants: dict[str, float]
    seed: int
    n: int
    wall_time_s: float
    verdict: str = VERDICT_PASS
    slack: float = float("nan")
    se: float = float("nan")
    notes: tuple[str, ...] = ()

    def finalize(self) -> "InequalityReport":
        if self.sides:
            worst = max(self.sides, key=lambda s: (_WORST[s.verdict], -s.slack))
            self.slack, self.se = worst.slack, worst.se
            if self.verdict != VERDICT_NA:
                self.verdict = worst.verdict
        return self

    def to_dict(self) -> dict:
        def num(x):
            x = float(x)
            return x if np.isfinite(x) else None  # strict JSON: no NaN/Inf tokens

        return {
            "theorem_id": self.theorem_id,
            "terms": {k: {"value": v.value, "se": v.se, "n": v.n} for k, v in self.terms.items()},
            "sides": [
                {"name": s.name, "estimate": s.estimate, "se": s.se, "bound": num(s.bound),
                 "slack": num(s.slack), "verdict": s.verdict}
                for s in self.sides
            ],
            "constants": {k: num(v) for k, v in self.constants.items()},
            "seed": int(self.seed),
            "n": int(self.n),
            "slack": num(self.slack),
            "se": num(self.se),
            "verdict": self.verdict,
            "notes": list(self.notes),
            "meta": {"wall_time_s": float(self.wall_time_s)},
        }


# ---------------------------------------------------------------------------
# threshold engine with a small cross-call cache

_CACHE: OrderedDict[tuple, np.ndarray] = OrderedDict()
_CACHE_LOCK = threading.Lock()
_CACHE_MAX = 8
CHUNK = 256


def event_thresholds(plan: SamplerPlan, specs, n: int, workers: int = 1) -> np.ndarray:
    """Threshold matrix of shape (len(specs), n) over replicates 0..n-1."""
    specs = tuple(specs)
    key = (plan.fingerprint, specs, int(n))
    with _CACHE_LOCK:
        if key in _CACHE:
            _CACHE.move_to_end(key)
            return _CACHE[key]
    compiled = [compile_event(s, plan.index) for s in specs]
    out = np.empty((len(specs), n))
    blocks = [(a, min(a + CHUNK, n)) for a in range(0, n, CHUNK)]

    def work(block):
        a, b = block
        draws = plan.draw_batch(range(a, b))
        for k, ce in enumerate(compiled):
            out[k, a:b] = ce.thresholds_batch(draws)

    if workers <= 1:
        for blk in blocks:
            work(blk)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, blocks))
    with _CACHE_LOCK:
        _CACHE[key] = out
        while len(_CACHE) > _CACHE_MAX:
            _CACHE.popitem(last=False)
    return out


def _mean_se(x: np.ndarray) -> TermEstimate:
    n = len(x)
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    return TermEstimate(float(np.mean(x)), sd / np.sqrt(n), n)


def _paired_diff(joint: np.ndarray, s1: np.ndarray, s2: np.ndarray) -> TermEstimate:
    """Mean and SE of P[joint] - P[s1] P[s2] from paired replicates."""
    m = (len(joint) // 2) * 2
    a, b = slice(0, m, 2), slice(1, m, 2)
    d = 0.5 * (joint[a] + joint[b]) - 0.5 * (s1[a] * s2[b] + s1[b] * s2[a])
    return _mean_se(d)


def _support_overlap(A1: EventSpec, A2: EventSpec) -> bool:
    return bool(set(A1.support) & set(A2.support))


def _event_cov(plan: SamplerPlan, A1: EventSpec, A2: EventSpec) -> np.ndarray:
    return plan.cov_block(A1.support, A2.support)


def _joint_cov(plan: SamplerPlan, A1: EventSpec, A2: EventSpec):
    pts = tuple(A1.support) + tuple(A2.support)
    K = plan.cov_block(pts, pts)
    n1 = len(A1.support)
    return K, np.arange(n1), np.arange(n1, n1 + len(A2.support))


# ---------------------------------------------------------------------------
# verifiers


def verify_sprinkled(
    plan: SamplerPlan,
    A1: EventSpec,
    A2: EventSpec,
    eps1: float,
    eps2: float,
    n: int,
    constant_mode: str = "proof-36",
    workers: int = 1,
    theorem_id: str = "thm1.1",
) -> InequalityReport:
    """Two-sided sprinkled decoupling at error c * max|K_cross| / (eps1 eps2).

    constant_mode "proof-36" uses the explicit constant 36 on both sides;
    "positive-1" requires cross-covariances >= 0 and then uses c=1 for the
    upward side and c=0 for the downward side.
    """
    t0 = time.perf_counter()
    if eps1 <= 0 or eps2 <= 0:
        raise ParameterError("sprinkling parameters must be positive")
    block = _event_cov(plan, A1, A2)
    kappa = float(np.abs(block).max())
    kmin = float(block.min())
    notes = []
    if constant_mode == "proof-36":
        c_up, c_down = 36.0, 36.0
    elif constant_mode == "positive-1":
        if kmin < -1e-12:
            rep = InequalityReport(theorem_id, {}, [], {"kappa": kappa, "min_cross": kmin},
                                   plan.base_seed, n, time.perf_counter() - t0,
                                   verdict=VERDICT_NA,
                                   notes=("cross-covariance sign check failed; c=1 branch inapplicable",))
            return rep.finalize()
        c_up, c_down = 1.0, 0.0
    else:
        raise ParameterError(f"unknown constant_mode {constant_mode!r}")
    if _support_overlap(A1, A2) and eps1 != eps2:
        warnings.warn("supports overlap; inhomogeneous bound applies after restricting to disjoint blocks")
        notes.append("overlapping supports")
    T = event_thresholds(plan, (A1, A2), n, workers)
    t1, t2 = T[0], T[1]
    joint = ((t1 <= 0) & (t2 <= 0)).astype(float)
    up1, up2 = (t1 <= eps1).astype(float), (t2 <= eps2).astype(float)
    dn1, dn2 = (t1 <= -eps1).astype(float), (t2 <= -eps2).astype(float)
    bound = c_up * kappa / (eps1 * eps2)
    bound_dn = c_down * kappa / (eps1 * eps2)
    lhs_up = _paired_diff(joint, up1, up2)
    d_dn = _paired_diff(joint, dn1, dn2)  # estimates P12 - P[-e1]P[-e2]
    lhs_dn = TermEstimate(-d_dn.value, d_dn.se, d_dn.n)
    sides = [
        SideCheck("sprinkle-up", lhs_up.value, lhs_up.se, bound, bound - lhs_up.value,
                  classify(bound - lhs_up.value, lhs_up.se)),
        SideCheck("sprinkle-down", lhs_dn.value, lhs_dn.se, bound_dn, bound_dn - lhs_dn.value,
                  classify(bound_dn - lhs_dn.value, lhs_dn.se)),
    ]
    terms = {
        "joint": _mean_se(joint),
        "p1_up": _mean_se(up1),
        "p2_up": _mean_se(up2),
        "p1_down": _mean_se(dn1),
        "p2_down": _mean_se(dn2),
    }
    consts = {"kappa": kappa, "min_cross": kmin, "c_up": c_up, "c_down": c_down,
              "eps1": eps1, "eps2": eps2, "bound_up": bound, "bound_down": bound_dn}
    return InequalityReport(theorem_id, terms, sides, consts, plan.base_seed, n,
                            time.perf_counter() - t0, notes=tuple(notes)).finalize()


def verify_threshold_cov(plan, A1, A2, n: int, workers: int = 1) -> InequalityReport:
    """Cov[T_A1, T_A2] between min and max cross-covariance (sign-definite case)."""
    t0 = time.perf_counter()
    block = _event_cov(plan, A1, A2)
    kmin, kmax = float(block.min()), float(block.max())
    kabs = float(np.abs(block).max())
    if kmin < -1e-12 and kmax > 1e-12:
        return InequalityReport("prop2.2", {}, [], {"min_cross": kmin, "max_cross": kmax},
                                plan.base_seed, n, time.perf_counter() - t0, verdict=VERDICT_NA,
                                notes=("mixed-sign cross covariance: hypothesis unmet",)).finalize()
    lo, hi = (kmin, kabs) if kmin >= -1e-12 else (-kabs, kmax)
    T = event_thresholds(plan, (A1, A2), n, workers)
    t1, t2 = T[0], T[1]
    w = (t1 - t1.mean()) * (t2 - t2.mean()) * (n / (n - 1))
    est = _mean_se(w)
    sides = [
        SideCheck("cov>=lower", est.value, est.se, lo, est.value - lo, classify(est.value - lo, est.se)),
        SideCheck("cov<=upper", est.value, est.se, hi, hi - est.value, classify(hi - est.value, est.se)),
    ]
    return InequalityReport("prop2.2", {"cov": est}, sides,
                            {"lower": lo, "upper": hi, "min_cross": kmin, "max_cross": kmax},
                            plan.base_seed, n, time.perf_counter() - t0).finalize()


@dataclass(frozen=True)
class HoeffdingBox:
    u_lo: float
    u_hi: float
    v_lo: float
    v_hi: float
    bins: int = 256
    budget_tol: float = 0.02


def _tail_bound_fn(level: float, size: int, sigma: float):
    def m(u):
        z = np.abs(np.asarray(u, dtype=float) - level) / sigma
        return np.minimum(0.5, size * special.ndtr(-z))
    return m


def _sqrt_integral(fn, lo: float, hi: float, npts: int = 2001) -> float:
    grid = np.linspace(lo, hi, npts)
    return float(np.trapezoid(np.sqrt(fn(grid)), grid))


def verify_hoeffding(plan, A1, A2, n: int, box: HoeffdingBox, workers: int = 1) -> InequalityReport:
    """Cov[T1,T2] against the double integral of the joint-cdf defect.

    The integral is taken over the box at the box's resolution from the
    empirical cdfs; the outside contribution is bounded through the Gaussian
    tails of the 1-Lipschitz thresholds and reported as a truncation budget.
    """
    t0 = time.perf_counter()
    sig1 = float(np.sqrt(np.diag(plan.cov_block(A1.support, A1.support)).max()))
    sig2 = float(np.sqrt(np.diag(plan.cov_block(A2.support, A2.support)).max()))
    m1 = _tail_bound_fn(A1.level, len(A1.support), sig1)
    m2 = _tail_bound_fn(A2.level, len(A2.support), sig2)
    reach1, reach2 = A1.level + 42.0 * sig1, A2.level + 42.0 * sig2
    full1 = _sqrt_integral(m1, A1.level - 42.0 * sig1, reach1)
    full2 = _sqrt_integral(m2, A2.level - 42.0 * sig2, reach2)
    budget = (
        _sqrt_integral(m1, min(box.u_lo, A1.level - 42 * sig1), box.u_lo) * full2
        + _sqrt_integral(m1, box.u_hi, max(box.u_hi, reach1)) * full2
        + _sqrt_integral(m2, min(box.v_lo, A2.level - 42 * sig2), box.v_lo) * full1
        + _sqrt_integral(m2, box.v_hi, max(box.v_hi, reach2)) * full1
    )
    if budget > box.budget_tol:
        for k in range(4, 80):
            cand = HoeffdingBox(A1.level - k * sig1, A1.level + k * sig1,
                                A2.level - k * sig2, A2.level + k * sig2, box.bins, box.budget_tol)
            b = (
                _sqrt_integral(m1, cand.u_lo - 42 * sig1, cand.u_lo) * full2
                + _sqrt_integral(m1, cand.u_hi, cand.u_hi + 42 * sig1) * full2
                + _sqrt_integral(m2, cand.v_lo - 42 * sig2, cand.v_lo) * full1
                + _sqrt_integral(m2, cand.v_hi, cand.v_hi + 42 * sig2) * full1
            )
            if b <= 0.5 * box.budget_tol:
                raise ParameterError(
                    f"integration box too small: truncation budget {budget:.3e} > "
                    f"{box.budget_tol:.1e}; suggest u in [{cand.u_lo:.2f},{cand.u_hi:.2f}], "
                    f"v in [{cand.v_lo:.2f},{cand.v_hi:.2f}]"
                )
        raise ParameterError(f"integration box too small: truncation budget {budget:.3e}")

    T = event_thresholds(plan, (A1, A2), n, workers)
    t1, t2 = T[0], T[1]
    w = (t1 - t1.mean()) * (t2 - t2.mean()) * (n / (n - 1))
    cov_est = _mean_se(w)

    def box_integral(bins: int) -> float:
        mu = box.u_lo + (np.arange(bins) + 0.5) * (box.u_hi - box.u_lo) / bins
        mv = box.v_lo + (np.arange(bins) + 0.5) * (box.v_hi - box.v_lo) / bins
        eu = np.concatenate(([-np.inf], mu, [np.inf]))
        ev = np.concatenate(([-np.inf], mv, [np.inf]))
        counts, _, _ = np.histogram2d(t1, t2, bins=(eu, ev))
        F12 = counts.cumsum(axis=0).cumsum(axis=1)[:-1, :-1] / n
        F1 = np.searchsorted(np.sort(t1), mu, side="right") / n
        F2 = np.searchsorted(np.sort(t2), mv, side="right") / n
        integrand = F12 - np.outer(F1, F2)
        du = (box.u_hi - box.u_lo) / bins
        dv = (box.v_hi - box.v_lo) / bins
        return float(integrand.sum() * du * dv)

    integral = box_integral(box.bins)
    resolution = abs(integral - box_integral(max(16, box.bins // 2)))
    diff = abs(cov_est.value - integral)
    allowance = 3.0 * cov_est.se + budget + resolution
    sides = [SideCheck("cov=integral", diff, cov_est.se, allowance, allowance - diff,
                       VERDICT_PASS if allowance - diff >= 0 else VERDICT_FAIL)]
    terms = {"cov": cov_est, "integral": TermEstimate(integral, 0.0, n)}
    consts = {"budget": budget, "resolution": resolution, "bins": box.bins}
    return InequalityReport("hoeffding", terms, sides, consts, plan.base_seed, n,
                            time.perf_counter() - t0).finalize()


def verify_positive_association(plan, A1, A2, n: int, workers: int = 1) -> InequalityReport:
    """P[A1 and A2] - P[A1] P[A2] signed according to the cross-covariance sign."""
    t0 = time.perf_counter()
    block = _event_cov(plan, A1, A2)
    kmin, kmax = float(block.min()), float(block.max())
    if kmin < -1e-12 and kmax > 1e-12:
        return InequalityReport("pa", {}, [], {"min_cross": kmin, "max_cross": kmax},
                                plan.base_seed, n, time.perf_counter() - t0, verdict=VERDICT_NA,
                                notes=("mixed-sign cross covariance",)).finalize()
    positive = kmin >= -1e-12
    T = event_thresholds(plan, (A1, A2), n, workers)
    t1, t2 = T[0], T[1]
    joint = ((t1 <= 0) & (t2 <= 0)).astype(float)
    i1, i2 = (t1 <= 0).astype(float), (t2 <= 0).astype(float)
    gap = _paired_diff(joint, i1, i2)
    if positive:
        side = SideCheck("gap>=0", gap.value, gap.se, 0.0, gap.value, classify(gap.value, gap.se))
    else:
        side = SideCheck("gap<=0", gap.value, gap.se, 0.0, -gap.value, classify(-gap.value, gap.se))
    terms = {"gap": gap, "p1": _mean_se(i1), "p2": _mean_se(i2), "joint": _mean_se(joint)}
    return InequalityReport("pa", terms, [side], {"min_cross": kmin, "max_cross": kmax},
                            plan.base_seed, n, time.perf_counter() - t0).finalize()


def _grad_index(desc, draws: np.ndarray) -> np.ndarray:
    kind = desc[0]
    if kind == "linear":
        return np.full(draws.shape[0], desc[1], dtype=np.intp)
    if kind == "max":
        i, j = desc[1], desc[2]
        return np.where(draws[:, i] >= draws[:, j], i, j).astype(np.intp)
    raise ParameterError(f"unknown functional {desc!r}")


def _func_values(desc, draws: np.ndarray) -> np.ndarray:
    kind = desc[0]
    if kind == "linear":
        return draws[:, desc[1]]
    return np.maximum(draws[:, desc[1]], draws[:, desc[2]])


def verify_interp_formula(plan: DensePlan, n: int, t_nodes: int = 24, cases=None,
                          workers: int = 1) -> InequalityReport:
    """Interpolation covariance identity for linear and max-of-two functionals.

    Cov[f(X), g(X)] equals the exponentially weighted time integral of
    sum_ij K(i,j) E[df_i(X) dg_j(X^t)] along the Ornstein-Uhlenbeck
    interpolation X^t; the integral is mapped to (0,1) by s = e^{-t} and
    evaluated with Gauss-Legendre nodes sharing one replicate set.
    """
    t0 = time.perf_counter()
    if not isinstance(plan, DensePlan):
        raise InputError("interpolation check needs a dense plan with explicit covariance")
    K = plan.cov
    dim = K.shape[0]
    if cases is None:
        cases = [
            (("linear", 0), ("linear", min(1, dim - 1))),
            (("linear", 0), ("linear", 0)),
        ]
        if dim >= 3:
            cases.append((("max", 0, 1), ("linear", 2)))
    s_nodes, s_w = np.polynomial.legendre.leggauss(t_nodes)
    s_nodes = 0.5 * (s_nodes + 1.0)
    s_w = 0.5 * s_w
    X, Xp = plan.draw_pair_batch(range(n))
    sides, terms = [], {}
    for ci, (fd, gd) in enumerate(cases):
        fv, gv = _func_values(fd, X), _func_values(gd, X)
        w = (fv - fv.mean()) * (gv - gv.mean()) * (n / (n - 1))
        lhs = _mean_se(w)
        fidx = _grad_index(fd, X)

        def rhs_at(nodes, weights):
            acc = np.zeros(n)
            for s, wk in zip(nodes, weights):
                Xt = s * X + np.sqrt(1.0 - s * s) * Xp
                gidx = _grad_index(gd, Xt)
                acc += wk * K[fidx, gidx]
            return acc

        R = rhs_at(s_nodes, s_w)
        rhs = _mean_se(R)
        half = np.polynomial.legendre.leggauss(max(4, t_nodes // 2))
        hn, hw = 0.5 * (half[0] + 1.0), 0.5 * half[1]
        quad_budget = abs(float(np.mean(rhs_at(hn, hw))) - rhs.value)
        se = float(np.hypot(lhs.se, rhs.se))
        diff = abs(lhs.value - rhs.value)
        allowance = 3.0 * se + quad_budget
        name = f"case{ci}:{fd[0]}-{gd[0]}"
        sides.append(SideCheck(name, diff, se, allowance, allowance - diff,
                               VERDICT_PASS if allowance >= diff else VERDICT_FAIL))
        terms[f"lhs{ci}"] = lhs
        terms[f"rhs{ci}"] = rhs
    return InequalityReport("interp", terms, sides, {"t_nodes": t_nodes},
                            plan.base_seed, n, time.perf_counter() - t0).finalize()


def verify_finite_range(model, grid: Grid, radius: float, A1, A2, eps: float, n: int,
                        base_seed: int = 0, workers: int = 1) -> InequalityReport:
    """Sprinkled decoupling with the moving-average error 3 max|I| exp(-eps^2/(8 sigma^2))."""
    t0 = time.perf_counter()
    if eps <= 0:
        raise ParameterError("eps must be positive")
    plan = plan_decomposed(model, grid, radius, base_seed)
    p1 = np.asarray(A1.support, dtype=float) * grid.spacing
    p2 = np.asarray(A2.support, dtype=float) * grid.spacing
    d2 = ((p1[:, None, :] - p2[None, :, :]) ** 2).sum(-1)
    separation = float(np.sqrt(d2.min()))
    if separation <= 2.0 * radius:
        raise PreconditionError(
            f"supports separated by {separation:.3f} <= 2 * radius = {2 * radius:.3f}: "
            "the truncated fields are not independent across the two blocks"
        )
    sigma2 = plan.sigma2
    size = max(len(A1.support), len(A2.support))
    bound = finite_range_bound(size, sigma2, eps)
    T = event_thresholds(plan, (A1, A2), n, workers)
    t1, t2 = T[0], T[1]
    joint = ((t1 <= 0) & (t2 <= 0)).astype(float)
    up1, up2 = (t1 <= eps).astype(float), (t2 <= eps).astype(float)
    lhs = _paired_diff(joint, up1, up2)
    side = SideCheck("finite-range", lhs.value, lhs.se, bound, bound - lhs.value,
                     classify(bound - lhs.value, lhs.se))
    consts = {"sigma2": sigma2, "radius": radius, "eps": eps, "max_support": size,
              "separation": separation, "bound": bound}
    return InequalityReport("prop1.8", {"lhs": lhs}, [side], consts, base_seed, n,
                            time.perf_counter() - t0).finalize()


def finite_range_bound(max_support: int, sigma2: float, eps: float) -> float:
    if sigma2 <= 0:
        return 0.0
    return 3.0 * max_support * float(np.exp(-(eps**2) / (8.0 * sigma2)))


def _rho_of(plan, A1, A2) -> float:
    K, i1, i2 = _joint_cov(plan, A1, A2)
    return measures.max_corr(K, i1, i2).rho


def verify_sdi2(plan, A1, A2, eps: float, n: int, workers: int = 1) -> InequalityReport:
    """One-sided sprinkling against exp(-eps^2 / (8 |K|_inf rho^2))."""
    t0 = time.perf_counter()
    if eps <= 0:
        raise ParameterError("eps must be positive")
    rho = _rho_of(plan, A1, A2)
    kinf = plan.max_abs_cov()
    bound = float(np.exp(-(eps**2) / (8.0 * kinf * rho**2))) if rho > 0 else 0.0
    T = event_thresholds(plan, (A1, A2), n, workers)
    t1, t2 = T[0], T[1]
    joint = ((t1 <= 0) & (t2 <= 0)).astype(float)
    p1 = (t1 <= 0).astype(float)
    p2e = (t2 <= eps).astype(float)
    lhs = _paired_diff(joint, p1, p2e)
    side = SideCheck("one-sided-sprinkle", lhs.value, lhs.se, bound, bound - lhs.value,
                     classify(bound - lhs.value, lhs.se))
    return InequalityReport("thm1.7", {"lhs": lhs, "p1": _mean_se(p1), "p2_eps": _mean_se(p2e)},
                            [side], {"rho": rho, "k_inf": kinf, "eps": eps, "bound": bound},
                            plan.base_seed, n, time.perf_counter() - t0).finalize()


def verify_sdi3(plan, A1, A2, delta1: float, delta2: float, n: int, workers: int = 1) -> InequalityReport:
    """Errorless sprinkled decoupling at eps = kappa rho sqrt(|K|_inf).

    Hypothesis failures (rho too large, marginals too small) yield a
    not-applicable verdict, never a fail.
    """
    t0 = time.perf_counter()
    if not (0 < delta1 < 1 and 0 < delta2 < 1):
        raise ParameterError("delta1, delta2 must lie in (0,1)")
    rho = _rho_of(plan, A1, A2)
    kinf = plan.max_abs_cov()
    if rho > 1.0 - delta1:
        return InequalityReport("thm1.10", {}, [], {"rho": rho, "delta1": delta1},
                                plan.base_seed, n, time.perf_counter() - t0, verdict=VERDICT_NA,
                                notes=(f"rho={rho:.4f} exceeds 1-delta1={1-delta1:.4f}",)).finalize()
    T = event_thresholds(plan, (A1, A2), n, workers)
    t1, t2 = T[0], T[1]
    p1 = (t1 <= 0).astype(float)
    p2 = (t2 <= 0).astype(float)
    pmax = max(float(p1.mean()), float(p2.mean()))
    if pmax < delta2:
        return InequalityReport("thm1.10", {"p1": _mean_se(p1), "p2": _mean_se(p2)}, [],
                                {"rho": rho, "delta2": delta2}, plan.base_seed, n,
                                time.perf_counter() - t0, verdict=VERDICT_NA,
                                notes=(f"max marginal {pmax:.4f} below delta2={delta2}",)).finalize()
    kappa = 2.0 + max(0.0, -analytic.std_quantile(delta2)) / np.sqrt(delta1)
    eps = kappa * rho * float(np.sqrt(kinf))
    joint = ((t1 <= 0) & (t2 <= 0)).astype(float)
    up1, up2 = (t1 <= eps).astype(float), (t2 <= eps).astype(float)
    lhs = _paired_diff(joint, up1, up2)
    side = SideCheck("errorless", lhs.value, lhs.se, 0.0, -lhs.value, classify(-lhs.value, lhs.se))
    consts = {"rho": rho, "k_inf": kinf, "kappa": kappa, "eps": eps,
              "delta1": delta1, "delta2": delta2}
    return InequalityReport("thm1.10", {"lhs": lhs, "p1": _mean_se(p1), "p2": _mean_se(p2)},
                            [side], consts, plan.base_seed, n,
                            time.perf_counter() - t0).finalize()


def verify_isoperimetric(plan, A, eps: float, n: int, workers: int = 1) -> InequalityReport:
    """P[X+eps in A] >= Phi(Phi^{-1}(P[X in A]) + eps / sqrt(|K|_inf))."""
    t0 = time.perf_counter()
    if eps < 0:
        raise ParameterError("eps must be nonnegative")
    T = event_thresholds(plan, (A,), n, workers)[0]
    base = (T <= 0).astype(float)
    up = (T <= eps).astype(float)
    p0, pe = _mean_se(base), _mean_se(up)
    if p0.value <= 0.0 or p0.value >= 1.0:
        return InequalityReport("cor2.6", {"p0": p0, "p_eps": pe}, [], {"eps": eps},
                                plan.base_seed, n, time.perf_counter() - t0, verdict=VERDICT_NA,
                                notes=("degenerate marginal estimate",)).finalize()
    kinf = plan.max_abs_cov()
    t_shift = eps / float(np.sqrt(kinf))
    target = analytic.isoperimetric_profile(p0.value, t_shift)
    q = analytic.std_quantile(p0.value)
    dprof = float(analytic.std_pdf(q + t_shift) / analytic.std_pdf(q))
    se = float(np.hypot(pe.se, dprof * p0.se))
    slack = pe.value - target
    side = SideCheck("profile", pe.value, se, target, slack, classify(slack, se))
    return InequalityReport("cor2.6", {"p0": p0, "p_eps": pe}, [side],
                            {"eps": eps, "k_inf": kinf, "target": target},
                            plan.base_seed, n, time.perf_counter() - t0).finalize()


def verify_noise_stability(plan, A1, A2, n: int, workers: int = 1) -> InequalityReport:
    """P[A1 and A2] <= Phi_rho(Phi^{-1} P[A1], Phi^{-1} P[A2])."""
    t0 = time.perf_counter()
    rho = _rho_of(plan, A1, A2)
    T = event_thresholds(plan, (A1, A2), n, workers)
    t1, t2 = T[0], T[1]
    i1, i2 = (t1 <= 0).astype(float), (t2 <= 0).astype(float)
    joint = ((t1 <= 0) & (t2 <= 0)).astype(float)
    p1, p2, p12 = _mean_se(i1), _mean_se(i2), _mean_se(joint)
    if not (0 < p1.value < 1 and 0 < p2.value < 1):
        return InequalityReport("cor2.7", {"p1": p1, "p2": p2}, [], {"rho": rho},
                                plan.base_seed, n, time.perf_counter() - t0, verdict=VERDICT_NA,
                                notes=("marginal estimate at 0 or 1: quantile undefined",)).finalize()
    u, v = analytic.std_quantile(p1.value), analytic.std_quantile(p2.value)
    rhs = analytic.bivariate_cdf(rho, u, v)
    if rho < 1.0:
        du, dv, _ = analytic.bivariate_cdf_derivs(rho, u, v)
        # delta method through Phi^{-1}: d rhs/d p = (dPhi_rho/du) / phi(u) <= 1
        r1 = du / float(analytic.std_pdf(u))
        r2 = dv / float(analytic.std_pdf(v))
    else:
        r1 = r2 = 1.0
    se = float(np.sqrt(p12.se**2 + (r1 * p1.se) ** 2 + (r2 * p2.se) ** 2))
    slack = rhs - p12.value
    side = SideCheck("noise-stability", p12.value, se, rhs, slack, classify(slack, se))
    return InequalityReport("cor2.7", {"p1": p1, "p2": p2, "joint": p12}, [side],
                            {"rho": rho, "rhs": rhs}, plan.base_seed, n,
                            time.perf_counter() - t0).finalize()
