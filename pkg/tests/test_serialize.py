import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from linequiv.equivalence import verify_certificate
from linequiv.instances import FAMILIES, FourStage
from linequiv.pipeline import linearize
from linequiv.reduction import column_reduce_same_space, random_grid, replay
from linequiv.serialize import (CertificateFile, Options, Problem, SchemaError, certificate_from, certificate_json,
                                cnum, dumps, from_cnum, load_certificate, matrix_from, matrix_json, poly_from,
                                poly_json, problem_from, problem_json, read_json, trace_json, trace_steps_from,
                                write_json)
from linequiv.algebra import random_poly
from linequiv.spectra import spectral_check

STAMP = "2000-01-01T00:00:00+00:00"


def test_numbers_and_matrices():
    assert cnum(1 - 2j) == [1.0, -2.0] and from_cnum([0.5, 3]) == 0.5 + 3j
    M = np.array([[1 + 1j, 2], [3, 4j]])
    assert np.array_equal(matrix_from(matrix_json(M), 2, 2), M)
    with pytest.raises(SchemaError):
        matrix_from([[[1, 0]]], 2, 2)
    with pytest.raises(SchemaError):
        from_cnum([1, 2, 3])


def test_poly_roundtrip():
    P = random_poly(np.random.default_rng(0), 2, 3, 3)
    Q = poly_from(poly_json(P))
    assert np.array_equal(P.coeffs, Q.coeffs)
    assert poly_from(poly_json(random_poly(np.random.default_rng(0), 2, 2, -1))).is_zero


def test_problem_roundtrip_fixed_point():
    fs = FourStage.random(np.random.default_rng(1))
    d = problem_json(Problem(fs.function(), (0, 1, 0, 0), Options(samples=7), "four stage"))
    p = problem_from(json.loads(dumps(d)))
    assert p.l == (0, 1, 0, 0) and p.options.samples == 7
    assert dumps(problem_json(p)) == dumps(d)
    lam = 0.7 + 0.1j
    assert np.allclose(p.function.eval(lam), fs.function().eval(lam))


def test_problem_schema_errors():
    good = problem_json(Problem(FourStage.random(np.random.default_rng(2)).function()))
    for bad in ({}, {**good, "version": 99}, {**good, "options": {"color": 1}},
                {k: v for k, v in good.items() if k != "function"}):
        with pytest.raises(SchemaError):
            problem_from(bad)
    broken = json.loads(dumps(good))
    broken["function"]["row_dims"][0] = 5
    with pytest.raises(SchemaError):
        problem_from(broken)


def _cert_file(c, **kw):
    return CertificateFile(c, Options(), verify_certificate(c), created=STAMP, **kw)


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_certificate_roundtrip(name):
    c = FAMILIES[name](np.random.default_rng(3))
    text = dumps(certificate_json(_cert_file(c)))
    back = certificate_from(json.loads(text))
    assert dumps(certificate_json(back)) == text
    again = verify_certificate(back.cert)
    assert again.factorization_residuals == back.verification.factorization_residuals
    assert again.passed


def test_pipeline_certificate_roundtrip(tmp_path):
    lin = linearize(FourStage.random(np.random.default_rng(43)).function())
    cf = CertificateFile(lin.cert, Options(), verify_certificate(lin.cert), spectral_check(lin.cert),
                         trace_json(lin.reduction), {"note": 1}, STAMP)
    path = tmp_path / "c.json"
    write_json(str(path), certificate_json(cf))
    back = load_certificate(str(path))
    assert back.spectrum.passed and back.extra == {"note": 1}
    assert dumps(certificate_json(back)) == path.read_text()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp")]


def test_inverse_nodes_record_condition():
    c = FAMILIES["schur_extend"](np.random.default_rng(4))
    verify_certificate(c)
    d = certificate_json(_cert_file(c))
    rec = [n["min_rcond"] for n in d["nodes"] if n["op"] == "inv"]
    assert rec and all(r is not None and 0 < r <= 1 for r in rec)


def test_trace_roundtrip():
    g = random_grid(np.random.default_rng(5), (1, 1, 1), 3)
    final, tr = column_reduce_same_space(g)
    steps = trace_steps_from(json.loads(dumps(trace_json(tr))))
    out = replay(g, steps)
    lam = 0.2 - 0.9j
    for a, b in zip(out, final):
        for p, q in zip(a, b):
            assert np.allclose(p(lam), q(lam))


def test_certificate_schema_errors(tmp_path):
    c = FAMILIES["companion l=1"](np.random.default_rng(6))
    d = certificate_json(_cert_file(c))
    fwd = json.loads(dumps(d))
    fwd["nodes"][0] = {"op": "add", "args": [len(fwd["nodes"]) - 1]}
    for bad in ({**d, "format": "x"}, {**d, "E": 10**6}, fwd, {**d, "lhs_rows": [0]},
                {k: v for k, v in d.items() if k != "nodes"}):
        with pytest.raises(SchemaError):
            certificate_from(json.loads(dumps(bad)))
    path = tmp_path / "t.json"
    path.write_text(dumps(d)[:200])
    with pytest.raises(SchemaError):
        read_json(str(path))


@given(st.integers(0, 2**31), st.sampled_from(sorted(FAMILIES)))
def test_serialization_is_deterministic(seed, name):
    a = dumps(certificate_json(_cert_file(FAMILIES[name](np.random.default_rng(seed)))))
    b = dumps(certificate_json(_cert_file(FAMILIES[name](np.random.default_rng(seed)))))
    assert a == b
