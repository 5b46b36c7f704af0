"""Graph and per-edge weight files.

Edge-list form, one edge per line::

    # id  u  v  [sigma]  [beta]
    e1    a  b  1.0      1/3

JSON form::

    {"vertices": ["a", "b"], "edges": [{"id": "e1", "u": "a", "v": "b", "sigma": 1.0, "beta": "1/3"}]}

beta entries may be decimals or ``p/q`` rationals; rationals stay exact.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .beta import BetaPmf
from .multigraph import GraphError, Multigraph, require_connected


class GraphFormatError(ValueError):
    def __init__(self, message: str, path=None, line: int | None = None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class ParsedGraph:
    graph: Multigraph
    sigma: np.ndarray | None
    beta: BetaPmf | None


def _positive_float(text: str, what: str, path, line) -> float:
    try:
        x = float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise GraphFormatError(f"{what} {text!r} is not a number", path, line) from None
    if not math.isfinite(x) or x <= 0:
        raise GraphFormatError(f"{what} must be positive and finite, got {text!r}", path, line)
    return x


def _beta_token(text, path, line):
    s = str(text).strip()
    try:
        value = Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise GraphFormatError(f"beta {s!r} is not a number", path, line) from None
    if value <= 0:
        raise GraphFormatError(f"beta must be positive, got {s!r}", path, line)
    return s


def _finish(names, edges, vertices, sigmas, betas, path) -> ParsedGraph:
    if not edges:
        raise GraphFormatError("no edges", path)
    for col, vals in (("sigma", sigmas), ("beta", betas)):
        given = [v is not None for v in vals]
        if any(given) and not all(given):
            missing = [names[i] for i, g in enumerate(given) if not g]
            raise GraphFormatError(f"{col} given for some edges but not for {missing}", path)
    try:
        g = Multigraph.from_edges(edges, vertices=vertices, names=names)
        require_connected(g)
    except GraphError as exc:
        raise GraphFormatError(str(exc), path) from None
    sigma = np.array(sigmas, dtype=float) if sigmas[0] is not None else None
    beta = BetaPmf.from_weights(betas) if betas[0] is not None else None
    return ParsedGraph(g, sigma, beta)


def parse_edge_list(text: str, path=None) -> ParsedGraph:
    names, edges, sigmas, betas = [], [], [], []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        tok = body.split()
        if not 3 <= len(tok) <= 5:
            raise GraphFormatError(f"expected 'edge_id u v [sigma] [beta]', got {len(tok)} fields",
                                   path, lineno)
        eid, u, v = tok[:3]
        if eid in seen:
            raise GraphFormatError(f"edge id {eid!r} already used on line {seen[eid]}", path, lineno)
        if u == v:
            raise GraphFormatError(f"edge {eid} is a self-loop at {u!r}", path, lineno)
        seen[eid] = lineno
        names.append(eid)
        edges.append((u, v))
        sigmas.append(_positive_float(tok[3], "sigma", path, lineno) if len(tok) > 3 else None)
        betas.append(_beta_token(tok[4], path, lineno) if len(tok) > 4 else None)
    return _finish(names, edges, None, sigmas, betas, path)


def parse_json_graph(text: str, path=None) -> ParsedGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("edges"), list):
        raise GraphFormatError("JSON graph needs an 'edges' list", path)
    names, edges, sigmas, betas = [], [], [], []
    for k, e in enumerate(doc["edges"]):
        where = f"edge #{k}"
        if not isinstance(e, dict) or "u" not in e or "v" not in e:
            raise GraphFormatError(f"{where} needs 'u' and 'v'", path)
        eid = str(e.get("id", k))
        if eid in names:
            raise GraphFormatError(f"{where}: edge id {eid!r} already used", path)
        if e["u"] == e["v"]:
            raise GraphFormatError(f"{where}: edge {eid} is a self-loop at {e['u']!r}", path)
        names.append(eid)
        edges.append((e["u"], e["v"]))
        s = e.get("sigma")
        sigmas.append(None if s is None else _positive_float(str(s), "sigma", path, None))
        b = e.get("beta")
        betas.append(None if b is None else _beta_token(b, path, None))
    vertices = doc.get("vertices")
    return _finish(names, edges, vertices, sigmas, betas, path)


def parse_graph(path) -> ParsedGraph:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise GraphFormatError(f"cannot read graph file: {exc.strerror}", p) from None
    if p.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        return parse_json_graph(text, p)
    return parse_edge_list(text, p)


def read_edge_values(path, g: Multigraph, what: str = "value") -> list[str]:
    """Per-edge values from ``edge_id value`` lines (or a JSON object), in edge order."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise GraphFormatError(f"cannot read {what} file: {exc.strerror}", p) from None
    labels = [g.edge_label(i) for i in range(g.n_edges)]
    found = {}
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"invalid JSON: {exc.msg}", p, exc.lineno) from None
        found = {str(k): (str(v), None) for k, v in doc.items()}
    else:
        for lineno, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0].strip()
            if not body:
                continue
            tok = body.split()
            if len(tok) != 2:
                raise GraphFormatError(f"expected 'edge_id {what}'", p, lineno)
            if tok[0] in found:
                raise GraphFormatError(f"edge {tok[0]!r} listed twice", p, lineno)
            found[tok[0]] = (tok[1], lineno)
    unknown = sorted(set(found) - set(labels))
    if unknown:
        raise GraphFormatError(f"unknown edge ids {unknown}", p, found[unknown[0]][1])
    missing = [x for x in labels if x not in found]
    if missing:
        raise GraphFormatError(f"no {what} for edges {missing}", p)
    out = []
    for x in labels:
        tok, line = found[x]
        _positive_float(tok, what, p, line)
        out.append(tok)
    return out


def read_beta(path, g: Multigraph) -> BetaPmf:
    """beta from a file; weights not summing to one are rescaled with a warning."""
    return BetaPmf.from_weights(read_edge_values(path, g, "beta"))


def read_sigma(path, g: Multigraph) -> np.ndarray:
    return np.array([float(Fraction(t)) for t in read_edge_values(path, g, "sigma")])


def format_edge_list(g: Multigraph, sigma=None, beta: BetaPmf | None = None) -> str:
    lines = []
    for i, (u, v) in enumerate(g.edges):
        row = [g.edge_label(i), str(u), str(v)]
        if sigma is not None or beta is not None:
            row.append(repr(float(sigma[i])) if sigma is not None else "1")
        if beta is not None:
            row.append(str(beta.exact[i]) if beta.exact is not None else repr(float(beta.values[i])))
        lines.append(" ".join(row))
    return "\n".join(lines) + "\n"
