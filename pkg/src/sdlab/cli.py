"""Command-line front end: experiment configs, verification runs, persistence.

Exit codes: 0 all verdicts pass (or pass-within-noise / not-applicable),
2 at least one fail verdict, 1 configuration or model errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import analytic, bootstrap, kernels, measures, mc
from .errors import SdlabError
from .events import AllAbove, BoxCrossing, event_from_dict, event_to_dict
from .sampler import Grid, draw, plan_circulant, plan_dense, write_snapshot

THEOREM_IDS = (
    "thm1.1", "prop2.2", "hoeffding", "pa", "interp",
    "prop1.8", "thm1.7", "thm1.10", "cor2.6", "cor2.7",
)

# human-readable anchors so report consumers can map ids to the inequalities
THEOREM_TITLES = {
    "thm1.1": "sprinkled decoupling inequality",
    "prop2.2": "threshold covariance bounds",
    "hoeffding": "Hoeffding covariance formula",
    "pa": "local positive association",
    "interp": "interpolation covariance identity",
    "prop1.8": "finite-range sprinkled decoupling",
    "thm1.7": "maximum-correlation sprinkled decoupling",
    "thm1.10": "errorless sprinkled decoupling",
    "cor2.6": "Gaussian isoperimetric enlargement",
    "cor2.7": "Gaussian noise stability",
}

ENV_OUT = "SDLAB_OUT"


@dataclass(frozen=True)
class ExperimentConfig:
    theorem: str
    model: dict = field(default_factory=lambda: {"family": "iid", "d": 1})
    grid: dict | None = None
    events: tuple = ()
    eps: tuple = (0.5,)
    n: int = 10_000
    seed: int = 0
    workers: int = 1
    constant_mode: str = "proof-36"
    delta1: float = 0.5
    delta2: float = 0.25
    radius: float = 1.5

    def to_json(self) -> str:
        d = dataclasses.asdict(self)
        d["events"] = list(self.events)
        d["eps"] = list(self.eps)
        return json.dumps(d, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        d = json.loads(text)
        d["events"] = tuple(d.get("events", ()))
        d["eps"] = tuple(d.get("eps", (0.5,)))
        return ExperimentConfig(**d)

    @property
    def hash(self) -> str:
        # worker count is execution infrastructure: it must not change the
        # experiment identity (reports are byte-identical across worker counts)
        d = json.loads(self.to_json())
        d.pop("workers", None)
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def build_model(spec: dict) -> kernels.CovarianceModel:
    fam = spec.get("family", "iid")
    d = int(spec.get("d", 2))
    if fam in ("iid", "iid_standard"):
        return kernels.iid_standard(d)
    if fam in ("bf", "bargmann_fock"):
        return kernels.bargmann_fock(d)
    if fam == "gff":
        return kernels.gff(d)
    if fam == "cauchy":
        return kernels.cauchy(float(spec.get("alpha", 2.0)), d)
    if fam in ("wave", "monochromatic_wave"):
        return kernels.monochromatic_wave(d)
    if fam in ("polylog", "polylog_decay"):
        return kernels.polylog_decay(float(spec.get("c", 1.0)), float(spec.get("gamma", 3.5)), d)
    if fam == "explicit":
        return kernels.explicit(np.asarray(spec["matrix"], dtype=float))
    raise SdlabError(f"unknown model family {fam!r}; valid: iid, bf, gff, cauchy, wave, polylog, explicit")


def build_plan(config: ExperimentConfig, events):
    model = build_model(config.model)
    if config.grid is not None:
        g = config.grid
        grid = Grid(tuple(g["shape"]), float(g.get("spacing", 1.0)),
                    tuple(g["origin"]) if g.get("origin") else None)
        return plan_circulant(model, grid, config.seed)
    pts = sorted({p for ev in events for p in ev.support})
    cov = kernels.build_cov_matrix(model, pts)
    return plan_dense(cov, config.seed, pts)


def _parse_events(config: ExperimentConfig):
    return tuple(event_from_dict(d) for d in config.events)


def default_config(theorem: str, n: int, seed: int, workers: int) -> ExperimentConfig:
    """Built-in desk instance per theorem id (used by verify defaults and suites)."""
    iid8 = {
        "model": {"family": "iid", "d": 1},
        "events": (
            event_to_dict(AllAbove(tuple((i,) for i in range(4)), 0.0)),
            event_to_dict(AllAbove(tuple((i,) for i in range(4, 8)), 0.0)),
        ),
    }
    pair = {
        "model": {"family": "explicit", "matrix": [[1.0, 1.0], [1.0, 1.0]]},
        "events": (
            event_to_dict(AllAbove(((0,),), 0.0)),
            event_to_dict(AllAbove(((1,),), 0.0)),
        ),
    }
    bf_blocks = {
        "model": {"family": "bf", "d": 2},
        "grid": {"shape": [24, 24], "spacing": 0.5},
        "events": (
            event_to_dict(BoxCrossing((0, 0), (4, 4), 0)),
            event_to_dict(BoxCrossing((19, 19), (23, 23), 0)),
        ),
    }
    base = {"theorem": theorem, "n": n, "seed": seed, "workers": workers}
    if theorem == "thm1.1":
        return ExperimentConfig(**base, **iid8, eps=(0.5, 0.5))
    if theorem == "prop2.2":
        return ExperimentConfig(**base, **pair)
    if theorem == "hoeffding":
        return ExperimentConfig(**base, **pair)
    if theorem == "pa":
        cfg = dict(pair)
        cfg["events"] = (
            event_to_dict(AllAbove(((0,),), 1.0)),
            event_to_dict(AllAbove(((1,),), 1.0)),
        )
        return ExperimentConfig(**base, **cfg)
    if theorem == "interp":
        return ExperimentConfig(
            **base,
            model={"family": "explicit",
                   "matrix": [[1.0, 0.5, 0.3], [0.5, 1.0, 0.2], [0.3, 0.2, 1.0]]},
            events=(event_to_dict(AllAbove(((0,),), 0.0)), event_to_dict(AllAbove(((1,),), 0.0))),
        )
    if theorem == "prop1.8":
        return ExperimentConfig(**base, **bf_blocks, eps=(1.0,), radius=1.5)
    if theorem == "thm1.7":
        return ExperimentConfig(**base, **iid8, eps=(0.5,))
    if theorem == "thm1.10":
        return ExperimentConfig(**base, **bf_blocks, delta1=0.5, delta2=0.25)
    if theorem == "cor2.6":
        return ExperimentConfig(
            **base,
            model={"family": "explicit", "matrix": [[1.0]]},
            events=(event_to_dict(AllAbove(((0,),), 0.0)),),
            eps=(0.3,),
        )
    if theorem == "cor2.7":
        return ExperimentConfig(**base, **iid8)
    raise SdlabError(f"unknown theorem id {theorem!r}; valid ids: {', '.join(THEOREM_IDS)}")


def run_config(config: ExperimentConfig) -> mc.InequalityReport:
    events = _parse_events(config)
    theorem = config.theorem
    if theorem == "prop1.8":
        model = build_model(config.model)
        g = config.grid
        grid = Grid(tuple(g["shape"]), float(g.get("spacing", 1.0)),
                    tuple(g["origin"]) if g.get("origin") else None)
        return mc.verify_finite_range(model, grid, config.radius, events[0], events[1],
                                      config.eps[0], config.n, config.seed, config.workers)
    plan = build_plan(config, events)
    if theorem == "thm1.1":
        e1 = config.eps[0]
        e2 = config.eps[1] if len(config.eps) > 1 else e1
        return mc.verify_sprinkled(plan, events[0], events[1], e1, e2, config.n,
                                   config.constant_mode, config.workers)
    if theorem == "prop2.2":
        return mc.verify_threshold_cov(plan, events[0], events[1], config.n, config.workers)
    if theorem == "hoeffding":
        box = mc.HoeffdingBox(-8.0, 8.0, -8.0, 8.0)
        return mc.verify_hoeffding(plan, events[0], events[1], config.n, box, config.workers)
    if theorem == "pa":
        return mc.verify_positive_association(plan, events[0], events[1], config.n, config.workers)
    if theorem == "interp":
        return mc.verify_interp_formula(plan, config.n, workers=config.workers)
    if theorem == "thm1.7":
        return mc.verify_sdi2(plan, events[0], events[1], config.eps[0], config.n, config.workers)
    if theorem == "thm1.10":
        return mc.verify_sdi3(plan, events[0], events[1], config.delta1, config.delta2,
                              config.n, config.workers)
    if theorem == "cor2.6":
        return mc.verify_isoperimetric(plan, events[0], config.eps[0], config.n, config.workers)
    if theorem == "cor2.7":
        return mc.verify_noise_stability(plan, events[0], events[1], config.n, config.workers)
    raise SdlabError(f"unknown theorem id {theorem!r}; valid ids: {', '.join(THEOREM_IDS)}")


def _report_json(report: mc.InequalityReport, config: ExperimentConfig) -> str:
    d = report.to_dict()
    d["title"] = THEOREM_TITLES.get(report.theorem_id, report.theorem_id)
    d["config_hash"] = config.hash
    d["meta"]["timestamp"] = time.time()
    return json.dumps(d, sort_keys=True, indent=1)


def _out_dir(args) -> str:
    out = getattr(args, "out", None) or os.environ.get(ENV_OUT, ".")
    os.makedirs(out, exist_ok=True)
    return out


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serializable: {type(o)}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_sample(args) -> int:
    model = build_model(json.loads(args.model) if args.model.startswith("{") else {"family": args.model, "d": args.d})
    shape = tuple(int(s) for s in args.shape.split(","))
    grid = Grid(shape, args.spacing)
    plan = plan_circulant(model, grid, args.seed)
    sample = draw(plan, args.replicate)
    out = os.path.join(_out_dir(args), args.file)
    write_snapshot(out, sample, grid, args.seed, args.replicate, model.family)
    print(f"wrote {out}: {sample.values.size} values")
    return 0


def cmd_bvn(args) -> int:
    val = analytic.bivariate_cdf(args.rho, args.u, args.v)
    out = {"rho": args.rho, "u": args.u, "v": args.v, "cdf": val}
    if abs(args.rho) < 1.0:
        du, dv, dr = analytic.bivariate_cdf_derivs(args.rho, args.u, args.v)
        out.update({"d_du": du, "d_dv": dv, "d_drho": dr})
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_negbound(args) -> int:
    u = np.arange(args.u_step, args.u_max + 1e-12, args.u_step)
    table = analytic.neg_bound_scan(args.kappa, u)
    lines = ["u,r,exponent"]
    for uu, r, ex in table.rows():
        lines.append(f"{uu:.6g},{r:.17g},{ex:.12g}")
    text = "\n".join(lines) + "\n"
    if args.file:
        path = os.path.join(_out_dir(args), args.file)
        with open(path, "w") as fh:
            fh.write(text)
        print(f"wrote {path}")
    else:
        sys.stdout.write(text)
    try:
        fit = analytic.fit_limiting_exponent(table)
        print(f"# fitted limiting exponent: {fit:.6f}", file=sys.stderr)
    except SdlabError as exc:
        print(f"# limiting exponent not extrapolated: {exc}", file=sys.stderr)
    return 0


def _ball_points(R: float, d: int, center=None):
    c = np.asarray(center if center is not None else (0,) * d)
    m = int(math.ceil(R))
    ranges = [np.arange(v - m, v + m + 1) for v in c]
    mesh = np.meshgrid(*ranges, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=1)
    keep = ((pts - c) ** 2).sum(axis=1) <= R * R
    return [tuple(int(x) for x in row) for row in pts[keep]]


def cmd_capacity(args) -> int:
    if args.matrix:
        K = np.loadtxt(args.matrix, delimiter=",", ndmin=2)
        idx = [int(i) for i in args.set.split(",")] if args.set else None
    else:
        model = build_model({"family": args.model, "d": args.d})
        pts = _ball_points(args.ball, args.d)
        K = kernels.build_cov_matrix(model, pts)
        idx = None
    res = measures.capacity(K, idx, tol=args.tol)
    print(json.dumps({
        "capacity": res.value, "energy": res.energy, "gap": res.gap,
        "iterations": res.iterations, "converged": res.converged,
        "infinite": res.infinite,
    }, sort_keys=True, default=_json_default))
    return 0


def cmd_maxcorr(args) -> int:
    if args.matrix:
        K = np.loadtxt(args.matrix, delimiter=",", ndmin=2)
        i1 = [int(i) for i in args.i1.split(",")]
        i2 = [int(i) for i in args.i2.split(",")]
    else:
        model = build_model({"family": args.model, "d": args.d})
        p1 = _ball_points(args.ball, args.d)
        shiftv = (args.dist,) + (0,) * (args.d - 1)
        p2 = [tuple(a + b for a, b in zip(p, shiftv)) for p in p1]
        pts = p1 + p2
        K = kernels.build_cov_matrix(model, pts)
        i1 = list(range(len(p1)))
        i2 = list(range(len(p1), len(pts)))
    res = measures.max_corr(K, i1, i2, None if args.ridge < 0 else args.ridge)
    print(json.dumps({"rho": res.rho, "ridge": res.ridge}, sort_keys=True))
    return 0


def _exit_code(verdicts) -> int:
    return 2 if any(v == mc.VERDICT_FAIL for v in verdicts) else 0


def cmd_verify(args) -> int:
    if args.config:
        with open(args.config) as fh:
            config = ExperimentConfig.from_json(fh.read())
        if args.theorem and args.theorem != config.theorem:
            raise SdlabError("theorem id on the command line conflicts with the config file")
    else:
        config = default_config(args.theorem, args.n, args.seed, args.workers)
        if args.eps is not None:
            config = dataclasses.replace(config, eps=tuple(float(e) for e in args.eps.split(",")))
        if args.model:
            config = dataclasses.replace(config, model={"family": args.model, "d": args.d})
    report = run_config(config)
    out = os.path.join(_out_dir(args), f"{config.theorem.replace('.', '_')}_{config.hash}.json")
    with open(out, "w") as fh:
        fh.write(_report_json(report, config))
    print(f"{config.theorem}: {report.verdict} (slack={report.slack:.4g}, se={report.se:.4g}) -> {out}")
    return _exit_code([report.verdict])


def cmd_verify_all(args) -> int:
    rows, verdicts = [], []
    out_dir = _out_dir(args)
    for tid in THEOREM_IDS:
        config = default_config(tid, args.n, args.seed, args.workers)
        report = run_config(config)
        with open(os.path.join(out_dir, f"{tid.replace('.', '_')}.json"), "w") as fh:
            fh.write(_report_json(report, config))
        rows.append(f"{tid},{report.slack:.10g},{report.se:.10g},{report.verdict}")
        verdicts.append(report.verdict)
        print(rows[-1])
    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w") as fh:
        fh.write("theorem_id,slack,se,verdict\n" + "\n".join(rows) + "\n")
    print(f"wrote {path}")
    return _exit_code(verdicts)


def cmd_suite(args) -> int:
    n = 10_000 if args.set == "smoke" else 100_000
    rows, verdicts = [], []
    out_dir = _out_dir(args)
    for tid in THEOREM_IDS:
        config = default_config(tid, n, args.seed, args.workers)
        report = run_config(config)
        with open(os.path.join(out_dir, f"{tid.replace('.', '_')}.json"), "w") as fh:
            fh.write(_report_json(report, config))
        rows.append(f"{tid},{report.slack:.10g},{report.se:.10g},{report.verdict}")
        verdicts.append(report.verdict)
    path = os.path.join(out_dir, f"suite_{args.set}.csv")
    with open(path, "w") as fh:
        fh.write("theorem_id,slack,se,verdict\n" + "\n".join(rows) + "\n")
    print(f"wrote {path}: {sum(v == 'fail' for v in verdicts)} fail verdicts")
    return _exit_code(verdicts)


def cmd_bootstrap(args) -> int:
    out_dir = _out_dir(args)
    if args.boot_cmd == "schedule":
        sched = bootstrap.sprinkle_schedule(args.R0, args.delta, args.ell_prime, args.n_max,
                                            log_R0=args.log_R0)
        path = os.path.join(out_dir, "schedule.csv")
        with open(path, "w") as fh:
            fh.write("n,ell\n")
            for i, v in enumerate(sched.levels, start=1):
                fh.write(f"{i},{v:.17g}\n")
        print(json.dumps({"ell_inf_lower": sched.ell_inf_lower, "tail_bound": sched.tail_bound},
                         sort_keys=True))
        print(f"wrote {path}")
        return 0
    if args.boot_cmd == "run-recursion":
        g = bootstrap.decay_from_string(args.g)
        hp = bootstrap.decay_from_string(args.h_prime) if args.h_prime else None
        n_d = args.n_d or bootstrap.annulus_covering(args.d, 1.0).n_d
        if args.log_R0 is None and args.R0 is None:
            closure = bootstrap.find_closure(g, args.delta, n_d, args.c, hp)
            log_R0, p1 = closure.log_R0_min, closure.p1_max
        else:
            log_R0 = args.log_R0 if args.log_R0 is not None else math.log(args.R0)
            p1 = args.p1
        rep = bootstrap.run_recursion(g, args.delta, n_d, args.c, None, p1, h_prime=hp,
                                      n_steps=args.n_steps, log_R0=log_R0)
        sched = bootstrap.sprinkle_schedule(None, args.delta, args.ell_prime, 1000, log_R0=log_R0)
        cert = {
            "n_d": n_d, "c": args.c, "c_prime": rep.c_prime, "log_R0": rep.log_R0,
            "p1": rep.p1, "closure_r0_ok": rep.closure_r0_ok, "closure_base_ok": rep.closure_base_ok,
            "invariant_ok": rep.invariant_ok, "verdict": rep.verdict,
            "q_first": rep.q[0], "q_last": rep.q[-1], "failures": rep.failures,
            "ell_inf_lower": sched.ell_inf_lower,
        }
        path = os.path.join(out_dir, "recursion_certificate.json")
        with open(path, "w") as fh:
            json.dump(cert, fh, sort_keys=True, indent=1, default=_json_default)
        print(json.dumps(cert, sort_keys=True, default=_json_default))
        return 0 if rep.verdict else 2
    if args.boot_cmd == "crossing":
        model = build_model({"family": args.model, "d": 2})
        est = bootstrap.estimate_crossing(model, args.spacing, args.ell, args.R, args.kind,
                                          args.n, args.seed, aspect=args.aspect,
                                          workers=args.workers)
        print(json.dumps({"estimate": est.estimate, "se": est.se, "n": est.n,
                          "R": est.R, "ell": est.ell, "kind": est.kind}, sort_keys=True))
        return 0
    if args.boot_cmd == "decay-table":
        model = build_model({"family": args.model, "d": 2})
        hp = bootstrap.decay_from_string(args.h_prime) if args.h_prime else None
        Rs = [float(r) for r in args.Rs.split(",")]
        table = bootstrap.subcritical_decay_table(model, args.ell, Rs, args.n, args.seed,
                                                  h_prime=hp, spacing=args.spacing,
                                                  workers=args.workers)
        path = os.path.join(out_dir, "decay_table.csv")
        with open(path, "w") as fh:
            fh.write("R,estimate,se,envelope\n")
            for row in table.rows:
                fh.write(f"{row.R:.6g},{row.estimate:.10g},{row.se:.10g},{row.envelope:.10g}\n")
        print(f"wrote {path} (monotone in R: {table.monotone_in_R})")
        return 0
    raise SdlabError(f"unknown bootstrap subcommand {args.boot_cmd!r}")


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdlab", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    def add_common(sp):
        sp.add_argument("--out", default=None, help=f"output directory (default ${ENV_OUT} or .)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("sample", help="write a field snapshot")
    add_common(sp)
    sp.add_argument("--model", default="bf")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--shape", default="32,32")
    sp.add_argument("--spacing", type=float, default=1.0)
    sp.add_argument("--replicate", type=int, default=0)
    sp.add_argument("--file", default="field.snap")
    sp.set_defaults(fn=cmd_sample)

    sp = sub.add_parser("bvn", help="bivariate normal cdf and derivatives")
    sp.add_argument("rho", type=float)
    sp.add_argument("u", type=float)
    sp.add_argument("v", type=float)
    sp.set_defaults(fn=cmd_bvn)

    sp = sub.add_parser("negbound", help="tail-gap scan table as CSV")
    add_common(sp)
    sp.add_argument("--kappa", type=float, default=0.293)
    sp.add_argument("--u-max", type=float, default=40.0)
    sp.add_argument("--u-step", type=float, default=1.0)
    sp.add_argument("--file", default=None)
    sp.set_defaults(fn=cmd_negbound)

    sp = sub.add_parser("capacity", help="simplex-energy capacity of an index set")
    add_common(sp)
    sp.add_argument("--matrix", default=None, help="CSV covariance matrix")
    sp.add_argument("--set", default=None, help="comma-separated indices into the matrix")
    sp.add_argument("--model", default="gff")
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--ball", type=float, default=4.0)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.set_defaults(fn=cmd_capacity)

    sp = sub.add_parser("maxcorr", help="maximum correlation coefficient between blocks")
    add_common(sp)
    sp.add_argument("--matrix", default=None)
    sp.add_argument("--i1", default=None)
    sp.add_argument("--i2", default=None)
    sp.add_argument("--model", default="gff")
    sp.add_argument("--d", type=int, default=3)
    sp.add_argument("--ball", type=float, default=4.0)
    sp.add_argument("--dist", type=int, default=12)
    sp.add_argument("--ridge", type=float, default=-1.0, help="negative means automatic")
    sp.set_defaults(fn=cmd_maxcorr)

    sp = sub.add_parser("verify", help="run one theorem verification")
    add_common(sp)
    sp.add_argument("theorem", nargs="?", default=None, choices=(None,) + THEOREM_IDS)
    sp.add_argument("--config", default=None, help="JSON experiment config file")
    sp.add_argument("--model", default=None)
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--eps", default=None, help="comma-separated sprinkle values")
    sp.add_argument("-n", type=int, default=100_000)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("verify-all", help="run every theorem id once")
    add_common(sp)
    sp.add_argument("-n", type=int, default=10_000)
    sp.set_defaults(fn=cmd_verify_all)

    sp = sub.add_parser("suite", help="built-in config sets")
    add_common(sp)
    sp.add_argument("set", choices=("smoke", "full"))
    sp.set_defaults(fn=cmd_suite)

    sp = sub.add_parser("bootstrap", help="multi-scale recursion tools")
    boot = sp.add_subparsers(dest="boot_cmd", required=True)

    bp = boot.add_parser("schedule")
    add_common(bp)
    bp.add_argument("--R0", type=float, default=None)
    bp.add_argument("--log-R0", dest="log_R0", type=float, default=None)
    bp.add_argument("--delta", type=float, default=0.25)
    bp.add_argument("--ell-prime", dest="ell_prime", type=float, default=-1.0)
    bp.add_argument("--n-max", dest="n_max", type=int, default=1000)
    bp.set_defaults(fn=cmd_bootstrap)

    bp = boot.add_parser("run-recursion")
    add_common(bp)
    bp.add_argument("--g", default="polylog:3.5")
    bp.add_argument("--h-prime", dest="h_prime", default=None)
    bp.add_argument("--delta", type=float, default=0.25)
    bp.add_argument("--d", type=int, default=2)
    bp.add_argument("--n-d", dest="n_d", type=int, default=None)
    bp.add_argument("--c", type=float, default=36.0)
    bp.add_argument("--R0", type=float, default=None)
    bp.add_argument("--log-R0", dest="log_R0", type=float, default=None)
    bp.add_argument("--p1", type=float, default=1e-6)
    bp.add_argument("--n-steps", dest="n_steps", type=int, default=40)
    bp.add_argument("--ell-prime", dest="ell_prime", type=float, default=-1.0)
    bp.set_defaults(fn=cmd_bootstrap)

    bp = boot.add_parser("crossing")
    add_common(bp)
    bp.add_argument("--model", default="bf")
    bp.add_argument("--spacing", type=float, default=0.5)
    bp.add_argument("--ell", type=float, default=0.0)
    bp.add_argument("--R", type=float, default=32.0)
    bp.add_argument("--kind", default="hcross",
                    choices=("annulus", "one_arm", "hcross", "vcross"))
    bp.add_argument("--aspect", type=float, default=5.0)
    bp.add_argument("-n", type=int, default=2000)
    bp.set_defaults(fn=cmd_bootstrap)

    bp = boot.add_parser("decay-table")
    add_common(bp)
    bp.add_argument("--model", default="bf")
    bp.add_argument("--spacing", type=float, default=1.0)
    bp.add_argument("--ell", type=float, default=-0.5)
    bp.add_argument("--Rs", default="8,16,32")
    bp.add_argument("--h-prime", dest="h_prime", default=None)
    bp.add_argument("-n", type=int, default=2000)
    bp.set_defaults(fn=cmd_bootstrap)

    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SdlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
