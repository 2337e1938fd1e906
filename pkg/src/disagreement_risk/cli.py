"""Command-line front end.

Exit codes: 0 success, 1 a bound check failed (``bounds`` only), 2 bad input.
Output is deterministic: the same arguments give byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bounds import all_bounds
from .errors import DisagreementRiskError, InvalidSigma
from .priors import Prior, TailCondition, prior_from_dict, prior_to_dict, tail_constant
from .risk import CSV_HEADER, QuadratureSpec, risk_monte_carlo, risk_quadrature
from .search import SearchConfig, maximize_risk, sweep_sigma

MIN_SIGMA = 1e-6
BOUND_CSV_HEADER = ["name", "lhs", "rhs", "margin", "satisfied", "witness"]


class InputError(Exception):
    """Bad command-line input; the message names the offending field."""


def load_prior(path: Optional[str], field: str) -> Prior:
    if path is None:
        raise InputError(f"{field}: a prior JSON file is required")
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{field}: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{field}: invalid JSON in {path}: {exc}") from None
    try:
        return prior_from_dict(data)
    except DisagreementRiskError as exc:
        raise InputError(f"{field}: {exc}") from None


def _sigma_values(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"sigma: not a number or comma-separated list: {text!r}") from None
    if not values:
        raise InputError("sigma: no values given")
    for v in values:
        if not v >= MIN_SIGMA:
            raise InputError(f"sigma: InvalidSigma: {v!r} is below the minimum {MIN_SIGMA:g}")
    return values


def _spec(args) -> QuadratureSpec:
    try:
        return QuadratureSpec(
            gh_nodes=args.nodes, mc_samples=args.samples, seed=args.seed, theta_nodes=args.theta_nodes,
            rule=args.rule, panel_nodes=args.panel_nodes,
        )
    except DisagreementRiskError as exc:
        raise InputError(f"spec: {exc}") from None


def _tail(args) -> Optional[TailCondition]:
    if args.tail_k is None:
        if args.tail_c is not None:
            raise InputError("tail_k: required when tail_c is given")
        return None
    return args.tail_k, args.tail_c


def _header(command: str, spec: QuadratureSpec) -> dict:
    return {
        "command": command,
        "version": __version__,
        "spec": {
            "rule": spec.rule,
            "panel_nodes": spec.panel_nodes,
            "gh_nodes": spec.gh_nodes,
            "theta_nodes": spec.theta_nodes,
            "mc_samples": spec.mc_samples,
            "seed": spec.seed,
        },
    }


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _csv_with_header(meta: dict, header: list[str], rows: list[list]) -> str:
    spec = meta["spec"]
    line = "# " + " ".join(f"{k}={spec[k]}" for k in ("rule", "panel_nodes", "gh_nodes", "theta_nodes", "mc_samples", "seed"))
    return f"# command={meta['command']} version={meta['version']}\n{line}\n" + _csv(header, rows)


def _json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _report(g0: Prior, g1: Prior, sigma: float, method: str, spec: QuadratureSpec):
    if method == "mc":
        return risk_monte_carlo(g0, g1, sigma, spec)
    return risk_quadrature(g0, g1, sigma, spec)


def cmd_risk(args) -> tuple[str, int]:
    g0 = load_prior(args.g0, "g0")
    g1 = load_prior(args.g1, "g1")
    sigmas = _sigma_values(args.sigma)
    if len(sigmas) != 1:
        raise InputError("sigma: the risk command takes a single value; use sweep for a grid")
    spec = _spec(args)
    report = _report(g0, g1, sigmas[0], args.method, spec)
    meta = _header("risk", spec)
    if args.format == "csv":
        return _csv_with_header(meta, CSV_HEADER, [report.csv_row()]), 0
    payload = dict(meta, g0=prior_to_dict(g0), g1=prior_to_dict(g1), report=report.to_dict())
    return _json(payload), 0


def cmd_sweep(args) -> tuple[str, int]:
    g0 = load_prior(args.g0, "g0")
    g1 = load_prior(args.g1, "g1")
    sigmas = _sigma_values(args.sigma)
    spec = _spec(args)
    if args.method == "mc":
        reports = [risk_monte_carlo(g0, g1, s, spec) for s in sigmas]
    else:
        reports = sweep_sigma(g0, g1, sigmas, spec)
    meta = _header("sweep", spec)
    if args.format == "csv":
        return _csv_with_header(meta, CSV_HEADER, [r.csv_row() for r in reports]), 0
    payload = dict(meta, g0=prior_to_dict(g0), g1=prior_to_dict(g1), reports=[r.to_dict() for r in reports])
    return _json(payload), 0


def cmd_bounds(args) -> tuple[str, int]:
    g1 = load_prior(args.g1, "g1")
    g0 = load_prior(args.g0, "g0") if args.g0 is not None else g1
    sigmas = _sigma_values(args.sigma)
    if len(sigmas) != 1:
        raise InputError("sigma: the bounds command takes a single value")
    spec = _spec(args)
    tail = _tail(args)
    if tail is not None:
        k, c = tail
        try:
            if c is None:
                c = tail_constant(g1, k) * (1.0 + 1e-9)
            tail = TailCondition(k, c) if c > 0 else None
        except DisagreementRiskError as exc:
            raise InputError(f"tail_k: {exc}") from None
    try:
        reports = all_bounds(g0, g1, sigmas[0], spec, tail=tail)
    except DisagreementRiskError as exc:
        raise InputError(f"{type(exc).__name__}: {exc}") from None
    code = 0 if all(r.satisfied for r in reports) else 1
    meta = _header("bounds", spec)
    if args.format == "csv":
        rows = [
            [r.name, repr(r.lhs), repr(r.rhs), repr(r.margin), str(r.satisfied).lower(),
             "" if r.witness is None else repr(r.witness)]
            for r in reports
        ]
        return _csv_with_header(meta, BOUND_CSV_HEADER, rows), code
    payload = dict(meta, sigma=sigmas[0], g0=prior_to_dict(g0), g1=prior_to_dict(g1),
                   reports=[r.to_dict() for r in reports], all_satisfied=code == 0)
    return _json(payload), code


def cmd_search(args) -> tuple[str, int]:
    sigmas = _sigma_values(args.sigma)
    spec = _spec(args)
    try:
        cfg = SearchConfig(
            n_atoms_g0=args.n_atoms_g0, n_atoms_g1=args.n_atoms_g1, var_cap=args.var_cap,
            sigma_grid=tuple(sorted(sigmas)), restarts=args.restarts, iters=args.iters,
            seed=args.seed, tail_k=args.tail_k, tail_c=args.tail_c,
        )
    except DisagreementRiskError as exc:
        raise InputError(f"search config: {exc}") from None
    result = maximize_risk(cfg, spec, workers=args.workers)
    meta = _header("search", spec)
    if args.format == "csv":
        reports = sweep_sigma(result.best_g0, result.best_g1, cfg.sigma_grid, spec)
        return _csv_with_header(meta, CSV_HEADER, [r.csv_row() for r in reports]), 0
    config = {
        "n_atoms_g0": cfg.n_atoms_g0, "n_atoms_g1": cfg.n_atoms_g1, "var_cap": cfg.var_cap,
        "sigma_grid": list(cfg.sigma_grid), "restarts": cfg.restarts, "iters": cfg.iters,
        "seed": cfg.seed, "tail_k": cfg.tail_k, "tail_c": cfg.tail_c,
    }
    return _json(dict(meta, config=config, result=result.to_dict())), 0


def _add_spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rule", choices=("panels", "gauss_hermite"), default="panels",
                   help="deterministic quadrature rule (default: panels)")
    p.add_argument("--panel-nodes", type=int, default=16, help="Gauss-Legendre nodes per panel")
    p.add_argument("--nodes", type=int, default=121, help="Gauss-Hermite nodes over the noise (gauss_hermite rule)")
    p.add_argument("--theta-nodes", type=int, default=61,
                   help="Gauss-Hermite nodes per mixture component of g0 (gauss_hermite rule)")
    p.add_argument("--samples", type=int, default=200_000, help="Monte Carlo sample size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="disagreement-risk",
        description="Bayes risk of a posterior-mean rule under a disagreeing prior.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("risk", help="risk and second moment at one sigma")
    p.add_argument("--g0", required=True, help="prior JSON generating theta")
    p.add_argument("--g1", required=True, help="prior JSON defining the decision rule")
    p.add_argument("--sigma", required=True)
    p.add_argument("--method", choices=("quad", "mc"), default="quad")
    _add_spec_args(p)
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("sweep", help="risk over a comma-separated sigma grid")
    p.add_argument("--g0", required=True)
    p.add_argument("--g1", required=True)
    p.add_argument("--sigma", required=True, help="e.g. 0.125,0.25,0.5,1,2")
    p.add_argument("--method", choices=("quad", "mc"), default="quad")
    _add_spec_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bounds", help="check every inequality; exit 1 if any fails")
    p.add_argument("--g1", required=True)
    p.add_argument("--g0", default=None, help="defaults to g1")
    p.add_argument("--sigma", required=True)
    p.add_argument("--tail-k", type=float, default=None)
    p.add_argument("--tail-c", type=float, default=None,
                   help="defaults to the optimal tail constant of g1 when --tail-k is set")
    _add_spec_args(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("search", help="search for feasible prior pairs with large risk")
    p.add_argument("--n-atoms-g0", type=int, default=2)
    p.add_argument("--n-atoms-g1", type=int, default=2)
    p.add_argument("--var-cap", type=float, default=1.0)
    p.add_argument("--sigma", default="1", help="comma-separated sigma grid")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--iters", type=int, default=40)
    p.add_argument("--tail-k", type=float, default=None)
    p.add_argument("--tail-c", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    _add_spec_args(p)
    p.set_defaults(func=cmd_search)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text, code = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvalidSigma as exc:
        print(f"error: sigma: {exc}", file=sys.stderr)
        return 2
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
