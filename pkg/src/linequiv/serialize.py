"""JSON forms for problems, block functions, expression graphs and certificates.

Complex numbers are [re, im] pairs, matrices row-major nested lists of
pairs, polynomials ascending coefficient lists.  An expression graph is a
list of nodes in dependency order; nodes refer to each other by position.
"""
from __future__ import annotations

import datetime as _dt
import json
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import expr as X_
from .algebra import MatrixPolynomial
from .blockfun import (BlockOperatorFunction, ExcludedSet, FunctionEntry, PolyEntry, ProductEntry,
                       SchurEntry)
from .equivalence import EquivalenceCertificate, VerificationReport
from .errors import LinearizationError
from .reduction import KStep, PermuteDiag, ReductionTrace, SwapRows
from .spectra import SpectrumReport

PROBLEM_FORMAT = "linequiv-problem"
CERT_FORMAT = "linequiv-certificate"
VERSION = 1


class SchemaError(LinearizationError, ValueError):
    """Input that does not follow the file format."""


# scalars and arrays


def cnum(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def from_cnum(v) -> complex:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        if isinstance(v, (int, float)):
            return complex(v)
        raise SchemaError(f"expected [re, im], got {v!r}")
    return complex(float(v[0]), float(v[1]))


def matrix_json(M: np.ndarray) -> list:
    M = np.asarray(M, dtype=complex)
    return [[cnum(z) for z in row] for row in M]


def matrix_from(data, rows: int, cols: int) -> np.ndarray:
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols), complex)
    try:
        M = np.array([[from_cnum(z) for z in row] for row in data], dtype=complex)
    except TypeError as e:
        raise SchemaError(f"malformed matrix: {e}") from None
    if M.shape != (rows, cols):
        raise SchemaError(f"matrix is {M.shape}, expected {(rows, cols)}")
    return M


def poly_json(P: MatrixPolynomial) -> dict:
    return {"rows": P.rows, "cols": P.cols, "coeffs": [matrix_json(c) for c in P.coeffs]}


def poly_from(d) -> MatrixPolynomial:
    try:
        r, c = int(d["rows"]), int(d["cols"])
        cs = [matrix_from(m, r, c) for m in d["coeffs"]]
    except (KeyError, TypeError) as e:
        raise SchemaError(f"malformed polynomial: {e}") from None
    if not cs:
        return MatrixPolynomial.zeros(r, c)
    return MatrixPolynomial.from_coeffs(cs)


def excluded_json(S: ExcludedSet) -> dict:
    return {"points": [cnum(p) for p in S.points], "description": S.description}


def excluded_from(d) -> ExcludedSet:
    return ExcludedSet(tuple(from_cnum(p) for p in d.get("points", [])), d.get("description", ""))


def _finite(x: float):
    return None if x is None or not np.isfinite(x) else float(x)


def _unfinite(x):
    return float("inf") if x is None else float(x)


# graphs and block functions share one node table


class Writer:
    def __init__(self):
        self.nodes: list[dict] = []
        self._ids: dict[int, int] = {}
        self._keep: list = []

    def ref(self, node: X_.Node | None):
        if node is None:
            return None
        k = id(node)
        if k in self._ids:
            return self._ids[k]
        d = self._node(node)
        self._ids[k] = len(self.nodes)
        self._keep.append(node)
        self.nodes.append(d)
        return self._ids[k]

    def _node(self, n: X_.Node) -> dict:
        if isinstance(n, X_.Const):
            return {"op": "const", "rows": n.rows, "cols": n.cols, "value": matrix_json(n.value)}
        if isinstance(n, X_.Eye):
            return {"op": "eye", "n": n.rows}
        if isinstance(n, X_.Zeros):
            return {"op": "zeros", "rows": n.rows, "cols": n.cols}
        if isinstance(n, X_.LamPow):
            return {"op": "lam_pow", "k": n.k, "n": n.rows, "coef": cnum(n.coef)}
        if isinstance(n, X_.Poly):
            return {"op": "poly", "poly": poly_json(n.poly)}
        if isinstance(n, X_.Fun):
            if not isinstance(n.fn, BlockOperatorFunction):
                raise TypeError(f"cannot serialize a function node over {type(n.fn).__name__}")
            return {"op": "fun", "function": self.function(n.fn)}
        if isinstance(n, X_.Block):
            grid = [[self.ref(b) for b in row] for row in n.grid]
            return {"op": "block", "row_dims": list(n.row_dims), "col_dims": list(n.col_dims), "grid": grid}
        if isinstance(n, X_.Add):
            return {"op": "add", "args": [self.ref(c) for c in n.children]}
        if isinstance(n, X_.Scale):
            return {"op": "scale", "arg": self.ref(n.children[0]), "c": cnum(n.c)}
        if isinstance(n, X_.Inv):
            seen = min(n.min_rcond, getattr(n, "recorded_min_rcond", float("inf")))
            return {"op": "inv", "arg": self.ref(n.children[0]), "min_rcond": _finite(seen)}
        if isinstance(n, X_.Mul):
            return {"op": "mul", "args": [self.ref(c) for c in n.children]}
        if isinstance(n, X_.Select):
            return {"op": "select", "arg": self.ref(n.children[0]),
                    "rows": [int(i) for i in n.ridx], "cols": [int(i) for i in n.cidx]}
        raise TypeError(f"unknown node type {type(n).__name__}")

    def entry(self, e) -> dict:
        if e.kind == "polynomial":
            return {"kind": "polynomial", "poly": poly_json(e.P)}
        if e.kind == "product":
            return {"kind": "product", "factors": [poly_json(f) for f in e.factors]}
        if e.kind == "schur":
            return {"kind": "schur", **{k: poly_json(getattr(e, k)) for k in "ABCD"}}
        if e.kind == "function":
            return {"kind": "function", "node": self.ref(e.node)}
        raise TypeError(f"unknown entry kind {e.kind}")

    def function(self, F: BlockOperatorFunction) -> dict:
        return {"row_dims": list(F.row_dims), "col_dims": list(F.col_dims),
                "grid": [[self.entry(e) for e in row] for row in F.entries]}


class Reader:
    def __init__(self, nodes: list[dict] | None = None):
        self.raw = nodes or []
        self.built: list[X_.Node | None] = [None] * len(self.raw)

    def get(self, r):
        if r is None:
            return None
        if not isinstance(r, int) or not 0 <= r < len(self.raw):
            raise SchemaError(f"bad node reference {r!r}")
        if self.built[r] is None:
            self.built[r] = self._node(self.raw[r], r)
        return self.built[r]

    def _node(self, d: dict, me: int) -> X_.Node:
        def child(x):
            if not isinstance(x, int) or x >= me:
                raise SchemaError(f"node {me} refers forward to {x!r}")
            return self.get(x)

        op = d.get("op")
        try:
            if op == "const":
                return X_.Const(matrix_from(d["value"], int(d["rows"]), int(d["cols"])))
            if op == "eye":
                return X_.Eye(int(d["n"]))
            if op == "zeros":
                return X_.Zeros(int(d["rows"]), int(d["cols"]))
            if op == "lam_pow":
                return X_.LamPow(int(d["k"]), int(d["n"]), from_cnum(d["coef"]))
            if op == "poly":
                return X_.Poly(poly_from(d["poly"]))
            if op == "fun":
                return X_.Fun(self.function(d["function"]))
            if op == "block":
                grid = [[None if b is None else child(b) for b in row] for row in d["grid"]]
                return X_.Block(grid, d["row_dims"], d["col_dims"])
            if op == "add":
                return X_.Add(*[child(a) for a in d["args"]])
            if op == "scale":
                return X_.Scale(child(d["arg"]), from_cnum(d["c"]))
            if op == "inv":
                n = X_.Inv(child(d["arg"]))
                n.recorded_min_rcond = _unfinite(d.get("min_rcond"))
                return n
            if op == "mul":
                return X_.Mul(*[child(a) for a in d["args"]])
            if op == "select":
                return X_.Select(child(d["arg"]), d["rows"], d["cols"])
        except (KeyError, TypeError, IndexError) as e:
            raise SchemaError(f"malformed node {me}: {e}") from None
        raise SchemaError(f"unknown node op {op!r}")

    def entry(self, d: dict):
        kind = d.get("kind")
        if kind == "polynomial":
            return PolyEntry(poly_from(d["poly"]))
        if kind == "product":
            return ProductEntry(tuple(poly_from(f) for f in d["factors"]))
        if kind == "schur":
            return SchurEntry(*[poly_from(d[k]) for k in "ABCD"])
        if kind == "function":
            return FunctionEntry(self.get(d["node"]))
        raise SchemaError(f"unknown entry kind {kind!r}")

    def function(self, d: dict) -> BlockOperatorFunction:
        try:
            grid = [[self.entry(e) for e in row] for row in d["grid"]]
            return BlockOperatorFunction(grid, d["row_dims"], d["col_dims"])
        except KeyError as e:
            raise SchemaError(f"block function lacks {e}") from None


# problems


@dataclass
class Options:
    samples: int = 20
    tol: float = 1e-8
    seed: int = 0
    spectrum_tol: float = 1e-6


@dataclass
class Problem:
    function: BlockOperatorFunction
    l: tuple | None = None
    options: Options = field(default_factory=Options)
    description: str = ""


def problem_json(p: Problem) -> dict:
    w = Writer()
    fn = w.function(p.function)
    if w.nodes:
        raise TypeError("problems cannot hold function entries")
    out = {"format": PROBLEM_FORMAT, "version": VERSION, "description": p.description,
           "function": fn, "options": vars(p.options).copy()}
    if p.l is not None:
        out["l"] = list(p.l)
    return out


def problem_from(d: dict) -> Problem:
    if not isinstance(d, dict) or d.get("format") != PROBLEM_FORMAT:
        raise SchemaError("not a problem file")
    if d.get("version") != VERSION:
        raise SchemaError(f"unsupported version {d.get('version')!r}")
    if "function" not in d:
        raise SchemaError("problem lacks a function")
    try:
        F = Reader().function(d["function"])
    except (ValueError, TypeError) as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(f"invalid function: {e}") from None
    known = vars(Options())
    opts = d.get("options", {})
    bad = set(opts) - set(known)
    if bad:
        raise SchemaError(f"unknown options {sorted(bad)}")
    options = Options(**{k: type(known[k])(v) for k, v in opts.items()})
    l = d.get("l")
    return Problem(F, tuple(int(x) for x in l) if l is not None else None, options,
                   d.get("description", ""))


# reports and traces


def verification_json(r: VerificationReport) -> dict:
    return {"sample_points": [cnum(z) for z in r.sample_points],
            "residuals": [float(x) for x in r.factorization_residuals],
            "E_conditions": [_finite(x) for x in r.E_conditions],
            "F_conditions": [_finite(x) for x in r.F_conditions],
            "max_residual": float(r.max_residual), "passed": bool(r.passed),
            "tol": float(r.tol), "seed": int(r.seed)}


def verification_from(d: dict) -> VerificationReport:
    return VerificationReport([from_cnum(z) for z in d["sample_points"]], list(d["residuals"]),
                              [_unfinite(x) for x in d["E_conditions"]],
                              [_unfinite(x) for x in d["F_conditions"]],
                              float(d["max_residual"]), bool(d["passed"]), float(d["tol"]), int(d["seed"]))


def spectrum_json(r: SpectrumReport) -> dict:
    return {"pencil_eigs": [cnum(z) for z in r.pencil_eigs],
            "oracle_roots": [cnum(z) for z in r.oracle_roots],
            "excluded_discarded": [cnum(z) for z in r.excluded_discarded],
            "pairing": [[cnum(a), cnum(b), float(t)] for a, b, t in r.pairing],
            "max_pair_distance": float(r.max_pair_distance),
            "unmatched_pencil": [cnum(z) for z in r.unmatched_pencil],
            "unmatched_oracle": [cnum(z) for z in r.unmatched_oracle],
            "passed": bool(r.passed), "tol": float(r.tol)}


def spectrum_from(d: dict) -> SpectrumReport:
    c = lambda xs: [from_cnum(z) for z in xs]
    return SpectrumReport(np.array(c(d["pencil_eigs"]), complex), np.array(c(d["oracle_roots"]), complex),
                          c(d["excluded_discarded"]),
                          [(from_cnum(a), from_cnum(b), float(t)) for a, b, t in d["pairing"]],
                          float(d["max_pair_distance"]), c(d["unmatched_pencil"]),
                          c(d["unmatched_oracle"]), bool(d["passed"]), float(d["tol"]))


def _grid_json(grid) -> list:
    return [[poly_json(p) for p in row] for row in grid]


def _grid_from(d) -> list:
    return [[poly_from(p) for p in row] for row in d]


def trace_json(t: ReductionTrace) -> dict:
    steps = []
    for s in t.steps:
        if isinstance(s, KStep):
            if s.trivial:
                continue
            steps.append({"type": "k", "j": s.j, "i": s.i, "at": list(s.at), "K": poly_json(s.K)})
        elif isinstance(s, SwapRows):
            steps.append({"type": "swap", "i": s.i, "j": s.j})
        elif isinstance(s, PermuteDiag):
            steps.append({"type": "permute", "perm": list(s.perm)})
    return {"algorithm": t.algorithm, "repair_sweeps": t.repair_sweeps,
            "input": _grid_json(t.input), "final": _grid_json(t.final), "steps": steps}


def trace_steps_from(d: dict) -> list:
    out = []
    for s in d["steps"]:
        if s["type"] == "k":
            out.append(KStep(s["j"], s["i"], poly_from(s["K"]), tuple(s["at"])))
        elif s["type"] == "swap":
            out.append(SwapRows(s["i"], s["j"]))
        elif s["type"] == "permute":
            out.append(PermuteDiag(tuple(s["perm"])))
        else:
            raise SchemaError(f"unknown step type {s['type']!r}")
    return out


# certificates


@dataclass
class CertificateFile:
    cert: EquivalenceCertificate
    options: Options = field(default_factory=Options)
    verification: VerificationReport | None = None
    spectrum: SpectrumReport | None = None
    reduction: dict | None = None       # trace in JSON form
    extra: dict = field(default_factory=dict)
    created: str = ""


def certificate_json(cf: CertificateFile) -> dict:
    c = cf.cert
    w = Writer()
    body = {"lhs": w.function(c.lhs), "rhs": w.function(c.rhs),
            "w_lhs": w.ref(c.w_lhs), "w_rhs": w.ref(c.w_rhs), "E": w.ref(c.E), "F": w.ref(c.F)}
    return {"format": CERT_FORMAT, "version": VERSION,
            "created": cf.created or _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "label": c.label, "options": vars(cf.options).copy(), "nodes": w.nodes, **body,
            "excluded": excluded_json(c.excluded),
            "lhs_rows": [int(i) for i in c.lhs_rows], "lhs_cols": [int(i) for i in c.lhs_cols],
            "rhs_rows": [int(i) for i in c.rhs_rows], "rhs_cols": [int(i) for i in c.rhs_cols],
            "verification": verification_json(cf.verification) if cf.verification else None,
            "spectrum": spectrum_json(cf.spectrum) if cf.spectrum else None,
            "reduction": cf.reduction, "extra": cf.extra}


def certificate_from(d: dict) -> CertificateFile:
    if not isinstance(d, dict) or d.get("format") != CERT_FORMAT:
        raise SchemaError("not a certificate file")
    if d.get("version") != VERSION:
        raise SchemaError(f"unsupported version {d.get('version')!r}")
    try:
        r = Reader(d["nodes"])
        cert = EquivalenceCertificate(
            r.function(d["lhs"]), r.function(d["rhs"]), r.get(d["w_lhs"]), r.get(d["w_rhs"]),
            r.get(d["E"]), r.get(d["F"]), excluded_from(d["excluded"]),
            np.array(d["lhs_rows"], int), np.array(d["lhs_cols"], int),
            np.array(d["rhs_rows"], int), np.array(d["rhs_cols"], int), d.get("label", ""))
        options = Options(**d.get("options", {}))
        ver = verification_from(d["verification"]) if d.get("verification") else None
        spec = spectrum_from(d["spectrum"]) if d.get("spectrum") else None
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(f"malformed certificate: {type(e).__name__}: {e}") from None
    return CertificateFile(cert, options, ver, spec, d.get("reduction"), d.get("extra", {}),
                           d.get("created", ""))


# files


def dumps(d: dict) -> str:
    return json.dumps(d, indent=1, sort_keys=False) + "\n"


def write_json(path: str, d: dict) -> None:
    """Write atomically: a temporary file in the target directory, then rename."""
    text = dumps(d)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON ({e})") from None


def load_problem(path: str) -> Problem:
    return problem_from(read_json(path))


def load_certificate(path: str) -> CertificateFile:
    return certificate_from(read_json(path))
