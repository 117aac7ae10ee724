"""Acceptance checks, one per criterion.

Each check prints a single PASS/FAIL line (visible under pytest and when the
file is run directly with python3).
"""
import contextlib
import io
import itertools
import json
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

from linequiv.algebra import NEG_INF, MatrixPolynomial as MP, random_matrix, random_well_conditioned
from linequiv.cli import main as cli
from linequiv.companion import CompanionSpec, companion_linearize
from linequiv.equivalence import verify_certificate
from linequiv.errors import LinearizationError
from linequiv.instances import FAMILIES, ThreeColumn, companion_cert, planted_diagonal
from linequiv.pipeline import linearize, through_pencil
from linequiv.reduction import (column_reduce_general, column_reduce_same_space, degree_matrix, difference_matrix,
                                f, f0, random_dominant_grid, random_grid, step_guard)
from linequiv.serialize import dumps, load_problem
from linequiv.spectra import compare_spectra, det_poly_roots, eig_dense, spectral_check

ROOT = Path(__file__).resolve().parent.parent
PROBLEMS = ROOT / "problems"
SEEDS = range(20)


def _rel(a, b):
    return np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b))


def c1():
    worst, bad = 0.0, []
    for name, build in FAMILIES.items():
        for s in SEEDS:
            rep = verify_certificate(build(np.random.default_rng(s)), samples=20, tol=1e-8)
            worst = max(worst, rep.max_residual)
            if not rep.passed:
                bad.append((name, s))
    return not bad, f"{len(FAMILIES)} families x {len(SEEDS)} seeds, worst residual {worst:.1e}, failures {bad}"


def c2():
    worst, bad = 0.0, []
    for name, build in FAMILIES.items():
        for s in SEEDS:
            rep = spectral_check(through_pencil(build(np.random.default_rng(s))), tol=1e-6)
            worst = max(worst, rep.max_pair_distance)
            if not rep.passed:
                bad.append((name, s))
    return not bad, f"worst pairing distance {worst:.1e}, failures {bad}"


def c3():
    bad = []
    for s in SEEDS:
        for d, m in ((1, 2), (2, 2), (3, 2), (4, 1)):
            P = companion_cert(np.random.default_rng(s), d, m, 0).lhs.polys()[0][0]
            Ts = [companion_linearize(CompanionSpec(P, l))[0].T for l in range(d + 1)]
            if not all(np.array_equal(Ts[0], T) for T in Ts[1:]):
                bad.append((s, d))
    return not bad, f"T bit-identical over every l, 20 seeds x 4 shapes, failures {bad}"


def c4():
    worst = 0.0
    I, Z = np.eye(3), np.zeros((3, 3))
    for s in SEEDS:
        rng = np.random.default_rng(s)
        A, B = random_well_conditioned(rng, 3), random_matrix(rng, 3, 3)
        res, c = companion_linearize(CompanionSpec(MP.from_coeffs([B, A]), 1))
        Ai = np.linalg.inv(A)
        for lam in (0.7 + 0.2j, -1.3j, 1.9, -0.6 - 0.9j):
            E = np.block([[I + B @ Ai / lam, B / lam], [Ai, I]])
            F = np.block([[Ai @ B + lam * I, Ai @ B], [I, I]])
            lhs = np.block([[A * lam + B, Z], [Z, -lam * I]])
            mid = np.block([[A, Z], [Z, res.T - lam * I]])
            worst = max(worst, _rel(lhs, E @ mid @ F), _rel(c.E(lam), E), _rel(c.F(lam), F))
    return worst <= 1e-10, f"worst relative error {worst:.1e} over 20 random 3x3 pencils"


def c5():
    prob = load_problem(str(PROBLEMS / "four_stage.json"))
    golden = np.array(json.loads((PROBLEMS / "four_stage_mask.json").read_text()))
    lin = linearize(prob.function, prob.l)
    mask_ok = np.array_equal(lin.block_mask(), golden)
    ver = verify_certificate(lin.cert, tol=1e-8)
    spec = spectral_check(lin.cert, tol=1e-6)
    ok = mask_ok and ver.passed and spec.passed
    return ok, (f"mask {'matches' if mask_ok else 'differs'} ({golden.shape[0]} rows), "
                f"residual {ver.max_residual:.1e}, pairing {spec.max_pair_distance:.1e}")


def c6():
    want = [[1, 0, NEG_INF], [0, 1, 0], [0, NEG_INF, 1]]
    bad, worst = [], 0.0
    for s in SEEDS:
        t = ThreeColumn.random(np.random.default_rng(s), 2)
        final, tr = column_reduce_same_space(t.grid())
        E = tr.E_poly()
        rng = np.random.default_rng(100 + s)
        for _ in range(20):
            r = np.sqrt(rng.uniform(0.25, 4.0))
            lam = r * np.exp(2j * np.pi * rng.uniform())
            worst = max(worst, abs(abs(np.linalg.det(E(lam))) - 1))
        if degree_matrix(final) != want:
            bad.append(s)
    return not bad and worst <= 1e-8, f"degree pattern failures {bad}, worst ||det E| - 1| {worst:.1e}"


def c7():
    ext = [NEG_INF] + list(range(-3, 4))
    bound = mono = 0
    for x, y, z, w in itertools.product(ext, repeat=4):
        v = f0(x, y, z, w)
        if not v <= max(x, y + z):
            bound += 1
        for x2 in ext:
            if x2 > x and f0(x2, y, z, w) < v:
                mono += 1
        for y2 in ext:
            if y2 > y and f0(x, y2, z, w) < v:
                mono += 1
        if f(x, y, z) < x:
            bound += 1
    return bound == mono == 0, f"{len(ext) ** 4} argument tuples, bound violations {bound}, monotonicity violations {mono}"


def _reduced(grid):
    D = difference_matrix(grid)
    return all(D[j][i] < 0 for j in range(len(D)) for i in range(len(D)) if i != j)


def c8():
    lines, ok = [], True
    for label, make, run in (
            ("same-space 4x4", lambda rng: random_grid(rng, (1, 1, 1, 1), 3), column_reduce_same_space),
            ("general (1,2,3)", lambda rng: random_dominant_grid(rng, (1, 2, 3), 3), column_reduce_general)):
        strict_fail = 0
        for s in SEEDS:
            g = make(np.random.default_rng(s))
            final, tr = run(g)
            if not _reduced(final) or len(tr.ksteps) > step_guard(g):
                ok = False
            try:
                run(g, repair=False)
            except LinearizationError:
                strict_fail += 1
        lines.append(f"{label}: 20/20 with repair, strict {20 - strict_fail}/20")
    return ok, "; ".join(lines)


def c9():
    planted = [[[1.0, -2.0], [0.5j], [3.0, -1.0 + 1j, 2.5]], [[0.3 - 0.2j], [-1.1 + 0.5j, 2.0]],
               [[-0.5, 0.5], [1.5j, -1.5j]], [[2.2]]]
    worst_root = 0.0
    roots_ok = True
    for groups in planted:
        rep = compare_spectra(det_poly_roots(planted_diagonal(groups)), [r for g in groups for r in g], tol=1e-8)
        roots_ok &= rep.passed
        worst_root = max(worst_root, rep.max_pair_distance)
    worst_eig = 0.0
    for s in range(100):
        rng = np.random.default_rng(s)
        A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        scale = max(1.0, np.linalg.norm(A, 2))
        for lam in eig_dense(A):
            worst_eig = max(worst_eig, np.linalg.svd(A - lam * np.eye(6), compute_uv=False)[-1] / scale)
    ok = roots_ok and worst_eig <= 1e-8
    return ok, f"planted roots worst {worst_root:.1e}; eig_dense worst sigma_min/scale {worst_eig:.1e} on 100 6x6"


def c10():
    sink = io.StringIO()
    with tempfile.TemporaryDirectory() as tmp, contextlib.redirect_stdout(sink), contextlib.redirect_stderr(sink):
        cert = Path(tmp) / "c.json"
        base = cli(["linearize", str(PROBLEMS / "four_stage.json"), "-o", str(cert)])
        d = json.loads(cert.read_text())
        d["nodes"].append({"op": "scale", "arg": d["E"], "c": [1.01, 0.0]})
        d["E"] = len(d["nodes"]) - 1
        bad = Path(tmp) / "bad.json"
        bad.write_text(dumps(d))
        corrupted = cli(["verify", str(bad)])
        singular = cli(["linearize", str(PROBLEMS / "four_stage_singular_lead.json"), "-o", str(Path(tmp) / "x.json")])
        degenerate = cli(["spectrum", str(PROBLEMS / "singular_grid.json")])
    codes = (base, corrupted, singular, degenerate)
    return codes == (0, 1, 3, 4), f"exit codes clean/corrupted E/singular lead/singular det = {codes}, want (0, 1, 3, 4)"


CHECKS = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10]


def _line(k, ok, detail):
    return f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("k", range(1, len(CHECKS) + 1))
def test_criterion(k, capsys):
    ok, detail = CHECKS[k - 1]()
    with capsys.disabled():
        print("\n" + _line(k, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for k, check in enumerate(CHECKS, 1):
        ok, detail = check()
        results.append(ok)
        print(_line(k, ok, detail), flush=True)
    sys.exit(0 if all(results) else 1)
