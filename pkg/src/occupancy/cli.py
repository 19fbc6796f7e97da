"""Command-line front end.

``occupancy run --config FILE`` executes one task and writes CSV or JSON.
``occupancy schema`` prints the config schema and ``occupancy reference``
prints the bundled reference config.

Exit status: 0 success, 1 a validation check failed, 2 config error,
3 inapplicable bound, 4 work cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import asymptotics, bounds, exact, montecarlo
from .alphabet import SlowlyVaryingFn, rv_profile
from .config import SCHEMA, load_config, parse_config, reference_config_text
from .errors import BoundNotApplicable, CapExceeded, ConfigError
from .markov import finite_chain_bound, minorization_constants
from .regime import simulate

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_INAPPLICABLE, EXIT_CAP = 0, 1, 2, 3, 4
SLACK = 1e-12
VALIDATE_BOUND_NS = (12, 100)

COLUMNS = {
    "simulate": ["i", "regime", "letter", "method"],
    "exact": ["n", "r", "value", "method"],
    "bound": ["n", "r", "value", "method", "epsilon", "estimated"],
    "limit": ["n", "ratio", "limit", "band", "companion_ratio", "companion_limit", "stderr", "method"],
    "mc": ["n", "r", "mean", "stderr", "replicas", "seed", "method"],
    "validate": ["check", "passed", "n", "r", "value", "reference", "method"],
}


class Inapplicable(Exception):
    def __init__(self, message, threshold):
        super().__init__(message)
        self.threshold = threshold


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render(task, rows, fmt):
    cols = COLUMNS[task]
    if fmt == "json":
        clean = [{c: (float(r.get(c)) if isinstance(r.get(c), np.floating) else r.get(c)) for c in cols}
                 for r in rows]
        return json.dumps({"task": task, "columns": cols, "rows": clean}, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def _as_list(v):
    return list(v) if isinstance(v, list) else [v]


def _require(cfg, key):
    if key not in cfg.parameters:
        cfg.fail(f"task {cfg.task!r} needs parameters.{key}", "parameters")
    return cfg.parameters[key]


def _r_values(cfg, n):
    if "r" in cfg.parameters:
        return _as_list(cfg.parameters["r"])
    return list(range(n + 1))


# -- tasks ----------------------------------------------------------------


def task_simulate(cfg, model):
    n = _require(cfg, "n")
    if isinstance(n, list):
        cfg.fail("simulate takes a single n", "parameters", "n")
    path = simulate(model, n, cfg.parameters.get("seed", 0))
    return [{"i": i, "regime": x, "letter": k, "method": "simulation"} for i, x, k in path.csv_rows()]


def task_exact(cfg, model):
    method = cfg.parameters.get("method", "dp")
    if method not in ("dp", "enumeration"):
        cfg.fail("exact supports method dp or enumeration", "parameters", "method")
    rows = []
    for n in _as_list(_require(cfg, "n")):
        if n < 1:
            cfg.fail("n must be at least 1", "parameters", "n")
        if method == "dp":
            law = exact.model_joint_law(model, n, cfg.parameters.get("workers", 1))
            values = {r: exact.exact_regime_pmf(model, n, r, law) for r in _r_values(cfg, n)}
            tag = "local-time-dp"
        else:
            full = exact.brute_force_regime_law(model, n)
            values = {r: float(full[r]) if r <= n else 0.0 for r in _r_values(cfg, n)}
            tag = "enumeration"
        rows += [{"n": n, "r": r, "value": v, "method": tag} for r, v in values.items()]
    return rows


def default_envelope(model):
    """``(alpha, ell)`` with ``nu(a, eps) <= eps**-alpha ell(1/eps)`` for every regime.

    Finite supports use ``alpha = 0`` and ``ell = max support size``; zipf
    laws of one common index use ``ell = max_a c_a**alpha``.
    """
    profs = [rv_profile(P) for P in model.letters]
    if all(P.is_finite for P in model.letters):
        return 0.0, SlowlyVaryingFn.constant(float(max(P.support_size for P in model.letters)))
    if all(P.kind == "zipf" for P in model.letters) and len({p.alpha for p in profs}) == 1:
        return profs[0].alpha, SlowlyVaryingFn.constant(max(p.C for p in profs))
    return None, None


def _eps_candidates(cfg, model):
    if "eps" in cfg.parameters:
        return [cfg.parameters["eps"]]
    return cfg.parameters.get("eps_grid") or bounds.default_eps_grid(model)


def compute_bound(cfg, model, name, n, r, law, consts):
    """One bound report; raises :class:`Inapplicable` when its conditions fail."""
    p = cfg.parameters
    if name == "iid-counting-bound":
        if model.n_states != 1:
            cfg.fail("iid-counting-bound needs a single-regime model", "model", "driver")
        P = model.letters[0]
        grid = [e for e in _eps_candidates(cfg, model) if e > 0 or P.is_finite]
        rep = min((bounds.dgp_iid_bound(P, n, r, e) for e in grid),
                  key=lambda b: math.inf if b.value is None else b.value)
        eps = rep.components.get("epsilon")
    elif name == "chain-exponential-bound":
        try:
            rep = finite_chain_bound(n, r, consts, model.initial)
        except BoundNotApplicable as exc:
            raise Inapplicable(str(exc), exc.threshold) from None
        eps = None
    elif name == "regime-counting-bound":
        rep = bounds.theorem_bound(model, n, r, cfg.parameters.get("eps_grid"), law=law)
        eps = rep.components.get("epsilon_star")
    elif name == "shared-letter-bound":
        if any(P != model.letters[0] for P in model.letters):
            cfg.fail("shared-letter-bound needs every regime to use the same letters", "model", "letters")
        grid = [e for e in _eps_candidates(cfg, model) if e > 0 or model.letters[0].is_finite]
        rep = min((bounds.shared_letter_bound(model, n, r, e, law=law) for e in grid),
                  key=lambda b: b.value)
        eps = rep.components["epsilon"]
    elif name == "finite-support-bound":
        if not all(P.is_finite for P in model.letters):
            cfg.fail("finite-support-bound needs finite letter supports", "model", "letters")
        rep = bounds.finite_support_bound(model, n, r, law=law)
        eps = None
    else:
        alpha, ell = p.get("alpha"), cfg.ell()
        if alpha is None or ell is None:
            a0, l0 = default_envelope(model)
            alpha = a0 if alpha is None else alpha
            ell = l0 if ell is None else ell
        if alpha is None:
            cfg.fail(f"{name} needs parameters.alpha and parameters.ell for this model", "parameters")
        try:
            if name == "regular-variation-bound":
                rep = bounds.rv_bound(model, n, r, alpha, ell, law=law)
                eps = None
            else:
                eps = p.get("eps", consts.pi_min / 2)
                rep = bounds.rv_finite_sample_bound(model, n, r, alpha, ell, eps, consts)
        except ValueError as exc:
            cfg.fail(str(exc), "parameters")
    if not rep.applicable:
        th = rep.thresholds
        detail = f"; needs n > {max(th):.17g}" if th else ""
        failed = ", ".join(c.name for c in rep.validity if not c.satisfied)
        raise Inapplicable(f"{name} inapplicable at n={n}, r={r} ({failed}){detail}",
                           max(th) if th else None)
    return rep, eps


def task_bound(cfg, model):
    names = cfg.parameters.get("bounds", ["regime-counting-bound"])
    consts = minorization_constants(model.chain, cfg.model["driver"].get("t0"))
    rows = []
    for n in _as_list(_require(cfg, "n")):
        law = exact.model_joint_law(model, n)
        for r in _as_list(cfg.parameters.get("r", 0)):
            for name in names:
                rep, eps = compute_bound(cfg, model, name, n, r, law, consts)
                rows.append({"n": n, "r": r, "value": rep.value, "method": rep.theorem,
                             "epsilon": eps, "estimated": rep.estimated})
    return rows


def task_limit(cfg, model):
    p = cfg.parameters
    method = p.get("method", "exact")
    if method not in ("exact", "mc"):
        cfg.fail("limit supports method exact or mc", "parameters", "method")
    r = _as_list(p.get("r", 0))
    rows = []
    for rr in r:
        try:
            rep = asymptotics.convergence_diagnostic(
                model, rr, _require(cfg, "schedule"), method, band=p.get("band", asymptotics.DEFAULT_BAND),
                replicas=p.get("replicas", 100_000), seed=p.get("seed", 0), workers=p.get("workers"))
        except ValueError as exc:
            cfg.fail(str(exc), "model", "letters")
        comp = dict(rep.companion_diagnostics)
        errs = dict(rep.errors)
        for n, q in rep.diagnostics:
            rows.append({"n": n, "ratio": q, "limit": rep.constant, "band": rep.band,
                         "companion_ratio": comp.get(n), "companion_limit": rep.companion,
                         "stderr": errs.get(n), "method": "regime-limit"})
    return rows


def task_mc(cfg, model):
    p = cfg.parameters
    target = p.get("target", "pmf")
    replicas, seed, workers = p.get("replicas", 100_000), p.get("seed", 0), p.get("workers")
    rows = []
    for n in _as_list(_require(cfg, "n")):
        for r in _as_list(p.get("r", 0)):
            if target == "pmf":
                est = montecarlo.estimate_pmf(model, n, r, replicas, seed, workers)
            elif target == "local-time-pmf":
                est = montecarlo.estimate_local_time_pmf(model, n, r, replicas, seed, workers)
            else:
                extra = {k: p[k] for k in ("eps", "alpha", "u") if k in p}
                if target == "normalizer":
                    extra.setdefault("alpha", default_envelope(model)[0])
                    extra["ell"] = cfg.ell() or SlowlyVaryingFn.constant()
                try:
                    est = montecarlo.estimate_functional(model, n, r, target, replicas, seed, workers, **extra)
                except KeyError as exc:
                    cfg.fail(f"target {target!r} needs parameters.{exc.args[0]}", "parameters", "target")
            rows.append({"n": n, "r": r, "mean": est.mean, "stderr": est.stderr,
                         "replicas": est.replicas, "seed": est.seed, "method": "monte-carlo"})
    return rows


def task_validate(cfg, model):
    """Cross-check exact values against enumeration, Monte Carlo and every
    applicable bound."""
    p = cfg.parameters
    n = p.get("n", 6)
    if isinstance(n, list):
        cfg.fail("validate takes a single n", "parameters", "n")
    rows = []

    def check(name, ok, value, ref, method, nn=None, r=None):
        rows.append({"check": name, "passed": bool(ok), "n": nn, "r": r, "value": value,
                     "reference": ref, "method": method})

    law = exact.model_joint_law(model, n)
    values = exact.exact_regime_law(model, n, law)
    check("law-sums-to-one", abs(values.sum() - 1.0) <= 1e-12, float(values.sum()), 1.0, "local-time-dp", n)

    if all(P.is_finite for P in model.letters):
        for m in range(1, n + 1):
            try:
                brute = exact.brute_force_regime_law(model, m)
            except CapExceeded:
                break
            dp = exact.exact_regime_law(model, m)
            err = float(np.max(np.abs(dp - brute)))
            check("dp-vs-enumeration", err <= 1e-12, err, 0.0, "enumeration", m)

    replicas, seed = p.get("replicas", 20_000), p.get("seed", 0)
    mc, _ = montecarlo.estimate_law(model, n, replicas, seed, p.get("workers"))
    for r in range(n + 1):
        se = math.sqrt(values[r] * (1 - values[r]) / replicas)
        check("mc-agreement", abs(mc[r] - values[r]) <= 4 * se + SLACK, float(mc[r]), float(values[r]),
              "monte-carlo", n, r)

    consts = minorization_constants(model.chain, cfg.model["driver"].get("t0"))
    for nn in VALIDATE_BOUND_NS:
        blaw = exact.model_joint_law(model, nn)
        for r in range(3):
            target = exact.exact_regime_pmf(model, nn, r, blaw)
            for name in _validation_bounds(model):
                try:
                    rep, _ = compute_bound(cfg, model, name, nn, r, blaw, consts)
                except Inapplicable:
                    continue
                ref = target
                if name == "chain-exponential-bound":
                    ref = float(blaw.local_time_pmf()[:r + 1].sum())
                check("bound-domination", rep.value >= ref - SLACK, rep.value, ref, rep.theorem, nn, r)
    return rows


def _validation_bounds(model):
    names = ["chain-exponential-bound", "regime-counting-bound", "regular-variation-bound",
             "regular-variation-finite-sample"]
    if all(P == model.letters[0] for P in model.letters):
        names.append("shared-letter-bound")
    if all(P.is_finite for P in model.letters):
        names.append("finite-support-bound")
    if model.n_states == 1:
        names.append("iid-counting-bound")
    if default_envelope(model)[0] is None:
        names = [x for x in names if not x.startswith("regular-variation")]
    return names


TASK_FUNCS = {"simulate": task_simulate, "exact": task_exact, "bound": task_bound,
              "limit": task_limit, "mc": task_mc, "validate": task_validate}


def execute(cfg):
    """Run the configured task; returns ``(rows, exit_code)``."""
    model = cfg.build_model()
    rows = TASK_FUNCS[cfg.task](cfg, model)
    status = EXIT_OK
    if cfg.task == "validate" and not all(r["passed"] for r in rows):
        status = EXIT_CHECK_FAILED
    return rows, status


def _run(args):
    try:
        cfg = load_config(args.config) if args.config != "-" else parse_config(sys.stdin.read())
        if args.seed is not None:
            cfg.parameters["seed"] = args.seed
        if args.workers is not None:
            cfg.parameters["workers"] = args.workers
        elif "workers" not in cfg.parameters:
            cfg.parameters["workers"] = montecarlo.default_workers()
        rows, status = execute(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Inapplicable as exc:
        print(f"inapplicable bound: {exc}", file=sys.stderr)
        return EXIT_INAPPLICABLE
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fmt = args.format or cfg.output.get("format", "csv")
    text = render(cfg.task, rows, fmt)
    out = args.output or cfg.output.get("path")
    if out and out != "-":
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if status == EXIT_CHECK_FAILED:
        failed = sum(not r["passed"] for r in rows)
        print(f"{failed} validation check(s) failed", file=sys.stderr)
    return status


def build_parser():
    parser = argparse.ArgumentParser(prog="occupancy", description="Occupancy probabilities for "
                                     "regime-switching letter models.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a config")
    run.add_argument("--config", "-c", required=True, help="JSON config path, or - for stdin")
    run.add_argument("--seed", type=int, help="override parameters.seed")
    run.add_argument("--workers", type=int, help=f"override parameters.workers (default ${montecarlo.WORKERS_ENV})")
    run.add_argument("--output", "-o", help="output path (default stdout)")
    run.add_argument("--format", choices=["csv", "json"])
    sub.add_parser("schema", help="print the config JSON schema")
    sub.add_parser("reference", help="print the bundled reference config")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "schema":
        print(json.dumps(SCHEMA, indent=2))
        return EXIT_OK
    if args.command == "reference":
        sys.stdout.write(reference_config_text())
        return EXIT_OK
    return _run(args)


if __name__ == "__main__":
    sys.exit(main())
