import math

import numpy as np
import pytest

import lapinv


def test_diagonal_solve_matches_exponential():
    p = lapinv.diagonal_problem([-1.0, -2.0], [1.0, 1.0])
    r = lapinv.solve(p, 1.0, 1e-9, lapinv.options(validate=True))
    assert r.converged
    exact = np.exp([-1.0, -2.0])
    assert np.max(np.abs(r.u - exact)) <= 1e-9
    assert r.history and r.history[-1].N == r.N


def test_scalar_constant_source():
    # u' = -u + 1, u(0) = 0  =>  u(1) = 1 - e^{-1}
    p = lapinv.make_problem(np.array([[-1.0]]), np.array([0.0]), [(np.array([1.0]), 0.0)])
    r = lapinv.solve(p, 1.0, 1e-9)
    assert abs(r.u[0] - (1.0 - math.exp(-1.0))) <= 1e-8


def test_reference_and_problem_properties():
    p = lapinv.canonical_cd_problem(400.0, 63)
    assert p.dim == 62 and p.is_real
    assert p.A.shape == (62, 62)
    assert lapinv.canonical_cd_grid(400.0, 63).shape == (62,)
    u = lapinv.reference_solution(p, 1.0)
    assert u.shape == (62,)


def test_pseudospectrum_of_scalar():
    p = lapinv.diagonal_problem([-1.0], [1.0])
    x, y, s = lapinv.pseudospectrum(p, -3.0, 1.0, -2.0, 2.0, 9)
    assert s.shape == (len(y), len(x))
    xx, yy = np.meshgrid(x, y)
    assert np.allclose(s, np.abs(xx + 1j * yy + 1.0), atol=1e-12)


def test_errors_are_mapped():
    with pytest.raises(lapinv.DimensionError):
        lapinv.diagonal_problem([-1.0, -2.0], [1.0])
    with pytest.raises(lapinv.Error):
        lapinv.load_problem("/nonexistent.mtx", "/nonexistent.txt")
    with pytest.raises(TypeError):
        lapinv.options(no_such_field=1)


def test_report_round_trip(tmp_path):
    p = lapinv.diagonal_problem([-1.0], [1.0])
    r = lapinv.solve(p, 1.0, 1e-8)
    path = tmp_path / "report.txt"
    r.write(str(path))
    text = path.read_text()
    assert text.startswith("format=lapinv-report")
