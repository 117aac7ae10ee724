"""Command line: linearize, verify, reduce, spectrum.

Exit codes: 0 ok, 1 verification failed, 2 bad input, 3 construction
failed, 4 degenerate problem.
"""
from __future__ import annotations

import argparse
import sys

from .blockfun import BlockOperatorFunction
from .equivalence import verify_certificate
from .errors import DegenerateDeterminant, LinearizationError, PreconditionViolated
from .pipeline import linearize
from .reduction import column_reduce, degree_matrix, difference_matrix, format_matrix, reduction_certificate
from .serialize import (CertificateFile, Options, SchemaError, certificate_json, load_certificate,
                        load_problem, trace_json, write_json)
from .spectra import compare_spectra, eig_dense, lhs_oracle, pencil_matrix, spectral_check

OK, VERIFY_FAILED, BAD_INPUT, CONSTRUCTION_FAILED, DEGENERATE = 0, 1, 2, 3, 4


def _options(base: Options, args) -> Options:
    o = Options(**vars(base))
    for k in ("samples", "tol", "seed"):
        v = getattr(args, k, None)
        if v is not None:
            setattr(o, k, v)
    return o


def _fmt(z: complex) -> str:
    return f"{z.real:+.10f}{z.imag:+.10f}j"


def _load_problem(path):
    try:
        return load_problem(path)
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e.strerror}") from None


def _is_pencil(F: BlockOperatorFunction) -> bool:
    try:
        pencil_matrix(F)
        return True
    except (TypeError, ValueError):
        return False


def cmd_linearize(args) -> int:
    prob = _load_problem(args.input)
    opts = _options(prob.options, args)
    try:
        lin = linearize(prob.function, prob.l, algorithm=args.algorithm)
    except LinearizationError as e:
        print(f"construction failed at {getattr(e, 'stage', 'setup')}: "
              f"{type(getattr(e, 'cause', e)).__name__}: {getattr(e, 'cause', e)}", file=sys.stderr)
        return CONSTRUCTION_FAILED
    cert = lin.cert
    rep = verify_certificate(cert, opts.samples, opts.tol, opts.seed)
    spec = None
    if args.with_spectrum:
        try:
            spec = spectral_check(cert, opts.spectrum_tol)
        except DegenerateDeterminant as e:
            print(f"degenerate: {e}", file=sys.stderr)
            return DEGENERATE
    extra = {"T": [[[float(z.real), float(z.imag)] for z in row] for row in lin.T],
             "block_dims": list(lin.companion.layout.dims),
             "block_mask": lin.block_mask().tolist(),
             "stages": [s.name for s in lin.stages]}
    cf = CertificateFile(cert, opts, rep, spec, trace_json(lin.reduction), extra)
    write_json(args.output, certificate_json(cf))
    print(f"pencil dimension {lin.T.shape[0]} in {len(lin.companion.layout)} blocks")
    print("stages: " + " -> ".join(s.name for s in lin.stages))
    pts = cert.excluded.points
    print(f"excluded points ({len(pts)}): " + (", ".join(_fmt(p) for p in pts) if pts else "none"))
    print("verification: " + rep.summary())
    if spec is not None:
        print("spectrum: " + spec.summary())
    ok = rep.passed and (spec is None or spec.passed)
    return OK if ok else VERIFY_FAILED


def cmd_verify(args) -> int:
    try:
        cf = load_certificate(args.certificate)
    except OSError as e:
        raise SchemaError(f"cannot read {args.certificate}: {e.strerror}") from None
    opts = _options(cf.options, args)
    try:
        rep = verify_certificate(cf.cert, opts.samples, opts.tol, opts.seed)
    except LinearizationError as e:
        print(f"verification could not run: {type(e).__name__}: {e}", file=sys.stderr)
        return VERIFY_FAILED
    print("verification: " + rep.summary())
    ok = rep.passed
    old = cf.verification
    if old is not None and (old.seed, len(old.factorization_residuals)) == (opts.seed, opts.samples):
        drift = max((abs(a - b) for a, b in zip(old.factorization_residuals, rep.factorization_residuals)),
                    default=0.0)
        same = drift <= 1e-12 and old.passed == rep.passed
        print(f"recorded residuals reproduced: {'yes' if same else 'no'} (largest change {drift:.1e})")
        ok = ok and same
    if _is_pencil(cf.cert.rhs):
        try:
            spec = spectral_check(cf.cert, opts.spectrum_tol)
        except DegenerateDeterminant as e:
            print(f"degenerate: {e}", file=sys.stderr)
            return DEGENERATE
        print("spectrum: " + spec.summary())
        ok = ok and spec.passed
    return OK if ok else VERIFY_FAILED


def cmd_reduce(args) -> int:
    prob = _load_problem(args.input)
    F = prob.function
    if not F.is_polynomial:
        raise SchemaError("reduction needs a grid of polynomial entries")
    if F.row_dims != F.col_dims:
        raise SchemaError("reduction needs a square grid over one layout")
    grid = F.polys()
    print("degree matrix before:")
    print(format_matrix(degree_matrix(grid)))
    print("difference matrix before:")
    print(format_matrix(difference_matrix(grid)))
    try:
        final, trace = column_reduce(grid, args.algorithm, repair=not args.strict)
    except PreconditionViolated as e:
        print(f"precondition: {e}", file=sys.stderr)
        return BAD_INPUT
    except LinearizationError as e:
        at = getattr(e, "step_index", None)
        where = f" at step {at}" if at is not None else ""
        print(f"reduction failed{where}: {type(e).__name__}: {e}", file=sys.stderr)
        return CONSTRUCTION_FAILED
    print("degree matrix after:")
    print(format_matrix(degree_matrix(final)))
    print("difference matrix after:")
    print(format_matrix(difference_matrix(final)))
    ks = trace.ksteps
    print(f"{len(ks)} reduction steps: " + ", ".join(f"K{s.at}" for s in ks)
          + (f"; {trace.repair_sweeps} repair sweeps" if trace.repair_sweeps else ""))
    cert = reduction_certificate(trace)
    opts = _options(prob.options, args)
    rep = verify_certificate(cert, opts.samples, opts.tol, opts.seed)
    print("verification: " + rep.summary())
    cf = CertificateFile(cert, opts, rep, None, trace_json(trace))
    write_json(args.output, certificate_json(cf))
    return OK if rep.passed else VERIFY_FAILED


def cmd_spectrum(args) -> int:
    prob = _load_problem(args.input)
    try:
        roots, excl = lhs_oracle(prob.function)
    except DegenerateDeterminant as e:
        print(f"degenerate: {e}", file=sys.stderr)
        return DEGENERATE
    roots = sorted(roots, key=lambda z: (round(z.real, 8), round(z.imag, 8)))
    print(f"{len(roots)} determinant roots:")
    for z in roots:
        print("  " + _fmt(z))
    if len(excl):
        print(f"points to discard ({excl.description}): " + ", ".join(_fmt(p) for p in excl.points))
    if args.certificate:
        try:
            cf = load_certificate(args.certificate)
        except OSError as e:
            raise SchemaError(f"cannot read {args.certificate}: {e.strerror}") from None
        T = pencil_matrix(cf.cert.rhs)
        rep = compare_spectra(eig_dense(T), roots, cf.cert.excluded.union(excl), prob.options.spectrum_tol)
        print("comparison: " + rep.summary())
        return OK if rep.passed else VERIFY_FAILED
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="linequiv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--samples", type=int, default=None, help="sample points (default 20)")
        sp.add_argument("--tol", type=float, default=None, help="residual tolerance (default 1e-8)")
        sp.add_argument("--seed", type=int, default=None, help="sampling seed (default 0)")

    s = sub.add_parser("linearize", help="build and verify a linearization")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--algorithm", choices=["general", "same-space"], default="general")
    s.add_argument("--with-spectrum", action="store_true", help="also compare spectra")
    common(s)
    s.set_defaults(func=cmd_linearize)

    s = sub.add_parser("verify", help="re-check a certificate file")
    s.add_argument("certificate")
    common(s)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("reduce", help="column reduce a polynomial grid")
    s.add_argument("input")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--algorithm", choices=["general", "same-space"], default="general")
    s.add_argument("--strict", action="store_true", help="no repair sweeps")
    common(s)
    s.set_defaults(func=cmd_reduce)

    s = sub.add_parser("spectrum", help="determinant roots of a problem")
    s.add_argument("input")
    s.add_argument("--certificate", help="compare with the pencil of this certificate")
    s.set_defaults(func=cmd_spectrum)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as e:
        print(f"input error: {e}", file=sys.stderr)
        return BAD_INPUT
    except LinearizationError as e:
        print(f"construction failed: {type(e).__name__}: {e}", file=sys.stderr)
        return CONSTRUCTION_FAILED


if __name__ == "__main__":
    sys.exit(main())
