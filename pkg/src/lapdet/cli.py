"""Command-line front end: ``lapdet <command> GRAPH [options]``.

Exit codes: 0 success, 1 input error, 2 analysis refused (size limits),
3 ``analyze`` found its component results inconsistent.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .beta import BetaPmf
from .density import (DEFAULT_SUBGRAPH_LIMIT, Homogeneity, deflate, density_check,
                      homogeneity_check, minimal_core)
from .dual import duality_gap, good_beta, max_entropy_solve
from .io import GraphFormatError, parse_graph, read_beta, read_sigma
from .multigraph import EnumerationLimitError, GraphError, Multigraph
from .solver import SolveConfig, Status, determinant_bound, solve_min_det
from .trees import DEFAULT_MAX_TREES, eta_from_sigma, enumerate_spanning_trees
from .wilson import edge_frequencies, wilson_sample

SCHEMA_ID = "lapdet-report/1"
COMMANDS = ("analyze", "mindet", "maxent", "density", "core", "deflate", "sample", "bound")

EXIT_OK, EXIT_INPUT, EXIT_REFUSED, EXIT_INCONSISTENT = 0, 1, 2, 3


class Refused(RuntimeError):
    pass


def num(x):
    """JSON-safe number: floats keep their shortest round-trip repr, non-finite become strings."""
    if isinstance(x, Fraction):
        return str(x)
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def nums(v):
    return None if v is None else [num(x) for x in v]


def _labels(g: Multigraph, ids):
    return [g.edge_label(i) for i in sorted(ids)]


def _graph_summary(g: Multigraph) -> dict:
    return {
        "n_vertices": g.n_vertices,
        "n_edges": g.n_edges,
        "vertices": [str(v) for v in g.vertices],
        "edges": [{"id": g.edge_label(i), "u": str(u), "v": str(v)} for i, (u, v) in enumerate(g.edges)],
    }


def _beta_payload(beta: BetaPmf) -> dict:
    return {"values": nums(beta.values), "exact": beta.as_strings()}


def _resolve_beta(source: str, parsed, args) -> tuple[BetaPmf, str]:
    g = parsed.graph
    if source == "uniform":
        return BetaPmf.uniform(g), "uniform"
    if source == "effres":
        return good_beta(g, "uniform"), "effres"
    if source.startswith("file:"):
        return read_beta(source[5:], g), source
    if source == "graph":
        if parsed.beta is None:
            raise GraphFormatError("--beta graph requested but the graph file has no beta column")
        return parsed.beta, "graph"
    raise GraphFormatError(f"unknown beta source {source!r}")


def _config(args) -> SolveConfig:
    kw = {"max_trees": args.max_trees, "max_subgraph_edges": args.max_subgraph_edges}
    if args.grad_tol is not None:
        kw["grad_tol"] = args.grad_tol
    if args.step is not None:
        kw["step_size"] = args.step
        kw["max_step"] = max(args.step, 1.0)
    return SolveConfig(**kw)


def _family(g, args):
    try:
        return enumerate_spanning_trees(g, args.max_trees)
    except EnumerationLimitError as exc:
        raise Refused(str(exc)) from None


def _mindet_payload(g, rep) -> dict:
    sigma = rep.sigma_star
    return {
        "status": rep.status.value,
        "p_star": num(rep.p_star),
        "log_p_star": num(rep.log_p_star),
        "sigma_star": nums(sigma),
        "eta_star": nums(eta_from_sigma(g, sigma)) if sigma is not None else None,
        "residual": num(rep.residual),
        "iterations": rep.iterations,
        "log_sigma_spread": num(rep.spread),
        "g_start": num(rep.g_history[0]) if rep.g_history else None,
        "g_final": num(rep.g_history[-1]) if rep.g_history else None,
        "witness": None if rep.witness_log_sigma is None else {
            "log_sigma": nums(rep.witness_log_sigma), "g": num(rep.witness_g)},
        "descent": None if rep.descent is None else {
            "g_at_ones": num(rep.descent[0]), "g_at_witness": num(rep.descent[1]),
            "drop": num(rep.descent[0] - rep.descent[1])},
        "n_fair_trees": None if rep.fair_trees is None else len(rep.fair_trees),
        "certificate_agrees": rep.certificate_agrees,
        "notes": list(rep.notes),
    }


def _maxent_payload(g, fam, me) -> dict:
    trees = [{"edges": _labels(g, fam.trees[i]), "mass": num(me.mu_star.mu[i])}
             for i in sorted(me.fair_trees)] if me.homogeneous else []
    return {
        "homogeneous": me.homogeneous,
        "strict": me.strict,
        "entropy": num(me.entropy),
        "dual_value": num(me.dual_value),
        "n_trees": len(fam),
        "n_fair_trees": len(me.fair_trees),
        "fair_trees": trees,
        "unfair_trees": [_labels(g, fam.trees[i]) for i in range(len(fam)) if i not in me.fair_trees],
        "constraint_residual": num(me.residual),
        "exact_certificate": bool(me.face.exact),
    }


def _subgraph_list(g, items):
    return [{"edges": _labels(g, h.edge_subset), "theta": num(t)} for h, t in items]


def _density_payload(g, beta, args) -> dict:
    try:
        hom = homogeneity_check(g, beta, args.max_subgraph_edges, certificate=False)
    except EnumerationLimitError as exc:
        raise Refused(str(exc)) from None
    d = hom.density
    return {
        "theta_G": num(d.theta_G),
        "verdict": d.verdict.value,
        "homogeneity": hom.verdict.value,
        "n_subgraphs": d.n_subgraphs,
        "violating_subgraphs": _subgraph_list(g, d.violating_subgraphs),
        "tight_subgraphs": _subgraph_list(g, d.tight_subgraphs),
        "blocks": [{"edges": _labels(g, b.edge_subset), "verdict": r.verdict.value} for b, r in hom.blocks],
    }


def _shrunk_payload(s: Multigraph) -> dict:
    return {"vertices": [str(v) for v in s.vertices],
            "edges": [{"id": s.edge_label(i), "u": str(u), "v": str(v)} for i, (u, v) in enumerate(s.edges)]}


def cmd_mindet(g, beta, args, parsed):
    sigma0 = read_sigma(args.sigma[5:], g) if args.sigma else None
    rep = solve_min_det(g, beta, _config(args), sigma0=sigma0)
    return _mindet_payload(g, rep)


def cmd_maxent(g, beta, args, parsed):
    fam = _family(g, args)
    return _maxent_payload(g, fam, max_entropy_solve(fam, beta))


def cmd_density(g, beta, args, parsed):
    return _density_payload(g, beta, args)


def cmd_core(g, beta, args, parsed):
    try:
        rep = minimal_core(g, args.max_subgraph_edges)
    except EnumerationLimitError as exc:
        raise Refused(str(exc)) from None
    return {
        "beta_rule": "constant",
        "strictly_dense": rep.strictly_dense,
        "relprime_shortcut": rep.shortcut,
        "theta_max": num(rep.theta_max),
        "core": None if rep.core is None else _labels(g, rep.core.edge_subset),
        "shrunk": None if rep.shrunk is None else _shrunk_payload(rep.shrunk),
        "fair_restriction": rep.restriction_ok,
    }


def cmd_deflate(g, beta, args, parsed):
    try:
        rep = deflate(g, args.max_subgraph_edges)
    except EnumerationLimitError as exc:
        raise Refused(str(exc)) from None
    return {
        "beta_rule": "constant",
        "n_steps": len(rep.deflation_sequence),
        "steps": [{"graph": _shrunk_payload(s.graph),
                   "core": _labels(s.graph, s.core.edge_subset),
                   "shrunk": _shrunk_payload(s.shrunk),
                   "projection_ok": s.projection_ok} for s in rep.deflation_sequence],
        "terminal": [_shrunk_payload(t) for t in rep.terminal_graphs],
    }


def cmd_sample(g, beta, args, parsed):
    source = "ones"
    sigma = np.ones(g.n_edges)
    if args.sigma_from == "mindet":
        rep = solve_min_det(g, beta, _config(args))
        if rep.sigma_star is None:
            # witness weights diverge; random walks across their cuts would not finish
            raise Refused(f"mindet found no minimizer ({rep.status.value}); nothing to sample at")
        sigma = rep.sigma_star
        source = f"mindet:{rep.status.value}"
    elif args.sigma:
        sigma = read_sigma(args.sigma[5:], g)
        source = args.sigma
    elif parsed.sigma is not None:
        sigma, source = parsed.sigma, "graph"
    samples = wilson_sample(g, sigma, seed=args.seed, n=args.n)
    freq = edge_frequencies(g, samples)
    eta = eta_from_sigma(g, sigma)
    se = np.sqrt(np.maximum(eta * (1 - eta), 1e-300) / args.n)
    return {
        "n": args.n,
        "seed": args.seed,
        "sigma_source": source,
        "sigma": nums(sigma),
        "frequencies": nums(freq),
        "eta_exact": nums(eta),
        "max_abs_z": num(float(np.max(np.abs(freq - eta) / se))),
    }


def cmd_bound(g, beta, args, parsed):
    rank = g.n_vertices - 1
    if args.b is not None:
        b = [Fraction(args.b)] * g.n_edges
    elif beta.exact is not None:
        b = [rank * x for x in beta.exact]
    else:
        b = list(rank * beta.values)
    rep = determinant_bound(g, b, family=_family(g, args))
    return {"b": [num(x) for x in b], "holds": rep.holds, "reason": rep.reason,
            "c_star": num(rep.c_star), "attained": rep.attained}


def cmd_analyze(g, beta, args, parsed):
    fam = _family(g, args)
    rep = solve_min_det(g, beta, _config(args), family=fam)
    me = max_entropy_solve(fam, beta)
    dens = _density_payload(g, beta, args)
    expected = {Homogeneity.STRICT.value: Status.STRICT.value,
                Homogeneity.NOT_STRICT.value: Status.NO_MINIMIZER.value,
                Homogeneity.NOT.value: Status.NOT_HOMOGENEOUS.value}[dens["homogeneity"]]
    gap = duality_gap(rep.p_star, me)
    checks = {
        "status_matches_density": rep.status.value == expected,
        "cone_matches_density": me.homogeneous == (dens["verdict"] != "NotDense"),
        "strict_matches_support": (rep.status == Status.STRICT) == me.strict,
        "duality_gap_small": gap <= 1e-6,
    }
    return {
        "mindet_status": rep.status.value,
        "p_star": num(rep.p_star),
        "dual_value": num(me.dual_value),
        "duality_gap": num(gap),
        "density_verdict": dens["verdict"],
        "homogeneity": dens["homogeneity"],
        "checks": checks,
        "consistent": all(checks.values()),
    }


HANDLERS = {
    "analyze": cmd_analyze, "mindet": cmd_mindet, "maxent": cmd_maxent, "density": cmd_density,
    "core": cmd_core, "deflate": cmd_deflate, "sample": cmd_sample, "bound": cmd_bound,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lapdet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lapdet {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("graph", help="edge-list or JSON graph file")
    p.add_argument("--beta", default="uniform",
                   help="uniform | effres | file:PATH | graph (column in the graph file)")
    p.add_argument("--sigma", help="file:PATH with per-edge weights")
    p.add_argument("--sigma-from", choices=["mindet"], help="sample at the min-det weights")
    p.add_argument("--b", help="constant per-edge exponent for 'bound' (default (|V|-1) beta)")
    p.add_argument("--n", type=int, default=10000, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the full JSON report here")
    p.add_argument("--max-trees", type=int, default=DEFAULT_MAX_TREES)
    p.add_argument("--max-subgraph-edges", type=int, default=DEFAULT_SUBGRAPH_LIMIT)
    p.add_argument("--grad-tol", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--format", choices=["text", "report"], default="text")
    return p


def _config_echo(args) -> dict:
    cfg = _config(args)
    return {
        "beta": args.beta, "sigma": args.sigma, "sigma_from": args.sigma_from, "b": args.b,
        "n": args.n, "seed": args.seed, "max_trees": args.max_trees,
        "max_subgraph_edges": args.max_subgraph_edges, "grad_tol": num(cfg.grad_tol),
        "step": num(cfg.step_size), "divergence_margin": num(cfg.divergence_margin),
        "spread_threshold": num(cfg.spread_threshold),
    }


def run(args) -> tuple[int, dict | None, str]:
    """Execute one request; returns (exit code, report or None, message)."""
    t0 = time.perf_counter()
    caught = []
    try:
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            parsed = parse_graph(args.graph)
            g = parsed.graph
            beta, beta_source = _resolve_beta(args.beta, parsed, args)
            if args.sigma and not args.sigma.startswith("file:"):
                raise GraphFormatError("--sigma expects file:PATH")
            if args.n < 1:
                raise GraphFormatError("--n must be positive")
            result = HANDLERS[args.command](g, beta, args, parsed)
            caught = [str(x.message) for x in w]
    except Refused as exc:
        return EXIT_REFUSED, None, f"refused: {exc}"
    except EnumerationLimitError as exc:
        return EXIT_REFUSED, None, f"refused: {exc}"
    except (GraphFormatError, GraphError, ValueError) as exc:
        return EXIT_INPUT, None, f"error: {exc}"
    report = {
        "schema": SCHEMA_ID,
        "tool": {"name": "lapdet", "version": __version__},
        "command": args.command,
        "input": str(args.graph),
        "graph": _graph_summary(g),
        "beta": dict(_beta_payload(beta), source=beta_source),
        "config": _config_echo(args),
        "warnings": caught,
        "result": result,
        "timings": {"seconds": time.perf_counter() - t0},
    }
    code = EXIT_OK
    if args.command == "analyze" and not result["consistent"]:
        code = EXIT_INCONSISTENT
    return code, report, ""


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False)


def summary(report: dict) -> str:
    r = report["result"]
    g = report["graph"]
    head = f"{report['command']}: |V|={g['n_vertices']} |E|={g['n_edges']} beta={report['beta']['source']}"
    lines = [head]
    keys = {
        "mindet": ["status", "p_star", "residual", "iterations", "log_sigma_spread"],
        "maxent": ["homogeneous", "dual_value", "entropy", "n_fair_trees", "n_trees"],
        "density": ["verdict", "homogeneity", "theta_G"],
        "core": ["strictly_dense", "core", "theta_max"],
        "deflate": ["n_steps"],
        "sample": ["n", "seed", "frequencies", "max_abs_z"],
        "bound": ["holds", "c_star", "attained", "reason"],
        "analyze": ["mindet_status", "p_star", "dual_value", "duality_gap", "density_verdict", "consistent"],
    }[report["command"]]
    for k in keys:
        lines.append(f"  {k}: {r[k]}")
    if report["command"] == "density":
        for item in r["tight_subgraphs"]:
            lines.append(f"  tight: {item['edges']} theta={item['theta']}")
        for item in r["violating_subgraphs"]:
            lines.append(f"  violating: {item['edges']} theta={item['theta']}")
    if report["command"] == "deflate":
        for s in r["steps"]:
            lines.append(f"  core {s['core']} -> shrunk with {len(s['shrunk']['edges'])} edges")
        lines.append(f"  strictly dense pieces: {len(r['terminal'])}")
    for w in report["warnings"]:
        lines.append(f"  warning: {w}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code, report, message = run(args)
    if report is None:
        print(message, file=sys.stderr)
        return code
    if args.out:
        Path(args.out).write_text(dumps(report) + "\n")
    print(dumps(report) if args.format == "report" else summary(report))
    if code == EXIT_INCONSISTENT:
        print("analyze: component results are inconsistent", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
