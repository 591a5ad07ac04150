import math

import numpy as np
import pytest

from almathieu.cocycle import CocycleParams, degree
from almathieu.frequency import GOLDEN, Frequency
from almathieu.gaps import spectrum_membership
from almathieu.localization import dual_solution
from almathieu.reducibility import (
    FloquetResult,
    ReductionError,
    build_conjugation,
    cohomological_residual,
    collapsed_test,
    dichotomy_report,
    dichotomy_test,
    edge_candidates,
    floquet_reduce,
    reduce_eigenpair,
    solve_cohomological,
    synthetic_cocycle,
    triangularize,
)
from almathieu.rotation import Resonant, classify_rotation, sturmian_rotation
from almathieu.torus import TorusMap, matmul, pointwise, rotation_map, schrodinger_map

W = Frequency.golden()


def _const_vec(x, y):
    return TorusMap.constant(np.array([x, y], float))


@pytest.fixture(scope="module")
def dual_edge():
    """Isolated b = 4, phi = 0 eigenpair closest to the bottom, and its reduction."""
    e = edge_candidates(4.0, 0.0, W, 2001)[0]
    return e, reduce_eigenpair(e, W)


@pytest.fixture(scope="module")
def bottom_edge():
    """Lowest isolated eigenpair over phi in {0, pi}: the bottom of the dual spectrum."""
    cands = [e for phi in (0.0, math.pi) for e in edge_candidates(4.0, phi, W, 2001)]
    e = min(cands, key=lambda p: p.eigenvalue)
    return e, reduce_eigenpair(e, W)


def test_build_conjugation_simple():
    Z = build_conjugation(_const_vec(1.0, 0.0))
    assert Z(0.4) == pytest.approx(np.eye(2))
    v = TorusMap(np.array([[0.5, 0.5j], [0, 0], [0.5, -0.5j]]))  # (cos, sin)
    Z = build_conjugation(v)
    assert Z(1.1) == pytest.approx(rotation_map(1)(1.1), abs=1e-12)
    assert degree(Z) == 1


def test_build_conjugation_vanishing_vector():
    with pytest.raises(ReductionError, match="vanishing-vector"):
        build_conjugation(_const_vec(0.0, 0.0))


def test_build_conjugation_from_dual_solution(dual_edge):
    e, _ = dual_edge
    s = dual_solution(e)
    Z = build_conjugation(s.invariant_vector())
    th = np.linspace(0, 2 * np.pi, 17)
    assert np.max(np.abs(np.linalg.det(Z(th)) - 1)) <= 1e-8
    assert s.invariance_residual() <= 1e-6


def test_triangularize_constant():
    A = TorusMap.constant(np.array([[1.0, 5.0], [0.0, 1.0]]))
    b12, res = triangularize(A, _const_vec(1.0, 0.0), W)
    assert res <= 1e-14
    assert b12(np.linspace(0, 6, 5)) == pytest.approx(5.0)


def test_triangularize_synthetic():
    A, v, _ = synthetic_cocycle(2.0, W, seed=3)
    b12, res = triangularize(A, v, W)
    assert res <= 1e-10
    assert b12.mean() == pytest.approx(2.0, abs=1e-8)


def test_triangularize_rejects_non_invariant():
    A = schrodinger_map(0.3, 1.0)
    with pytest.raises(ReductionError, match="not-invariant"):
        triangularize(A, _const_vec(1.0, 0.0), W)


def test_solve_cohomological_single_mode():
    b12 = TorusMap.from_function(np.cos, K=16)
    y = solve_cohomological(b12, W)
    th = np.linspace(0, 6, 13)
    expect = np.real(np.exp(1j * th) / (np.exp(2j * np.pi * GOLDEN) - 1))
    assert y(th) == pytest.approx(expect, abs=1e-14)
    assert solve_cohomological(TorusMap.constant(3.0), W)(th) == pytest.approx(0.0)


def test_solve_cohomological_random_and_decay():
    rng = np.random.default_rng(11)
    M = 64
    m = np.arange(-M, M + 1)
    c = (rng.normal(size=2 * M + 1) + 1j * rng.normal(size=2 * M + 1)) * np.exp(-0.3 * np.abs(m))
    b12 = TorusMap(0.5 * (c + c[::-1].conj()))
    y = solve_cohomological(b12, W)
    assert cohomological_residual(y, b12, W) <= 1e-9
    dy, _ = y.decay_width()
    db, _ = b12.decay_width()
    assert 0 < dy and dy >= db - 0.1


def test_small_divisor_floor():
    with pytest.raises(ReductionError, match="small-divisor"):
        solve_cohomological(TorusMap.from_function(np.cos, K=16), W, floor=10.0)


def test_floquet_identity():
    f = floquet_reduce(TorusMap.constant(np.eye(2)), _const_vec(1.0, 0.0), W)
    assert f.c == 0.0 and f.B.to_array() == pytest.approx(np.eye(2))
    assert collapsed_test(f)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_floquet_synthetic(seed):
    A, v, _ = synthetic_cocycle(2.0, W, seed)
    f = floquet_reduce(A, v, W)
    assert f.c == pytest.approx(2.0, abs=1e-8)
    assert f.residual <= 1e-8
    assert not collapsed_test(f)
    assert f.residual <= sum(f.stages.values()) + 1e-10
    th = np.linspace(0, 2 * np.pi, 33)
    assert np.max(np.abs(np.linalg.det(f.Z(th)) - 1)) <= 1e-8


def test_floquet_conjugation_invariance():
    A, v, _ = synthetic_cocycle(0.7, W, seed=4)
    # W0 = [[1, h], [0, 1]] with analytic h, degree 0
    h = TorusMap.from_function(lambda t: 0.3 * np.cos(t) + 0.1 * np.sin(2 * t), K=32)

    def shear(x):
        out = np.zeros(x.shape + (2, 2))
        out[..., 0, 0] = out[..., 1, 1] = 1.0
        out[..., 0, 1] = x
        return out

    def shear_inv(x):
        return shear(-x)

    W0 = pointwise(shear, h)
    W0inv_s = pointwise(shear_inv, h.shift(2 * np.pi * GOLDEN))
    A2 = matmul(W0inv_s, A, W0)
    v2 = pointwise(lambda hs, vs: np.stack([vs[:, 0] - hs * vs[:, 1], vs[:, 1]], axis=1), h, v)
    assert floquet_reduce(A2, v2, W).c == pytest.approx(0.7, abs=1e-6)


def test_serialisation():
    A, v, _ = synthetic_cocycle(1.5, W, seed=7)
    f = floquet_reduce(A, v, W)
    rec = f.as_record()
    assert set(rec) == {"c", "residual", "degreeZ", "M"}
    assert rec["c"] == pytest.approx(1.5)
    assert isinstance(f, FloquetResult)


def test_dual_edge_not_collapsed(dual_edge):
    e, f = dual_edge
    assert abs(f.c) > 10 * f.residual
    assert not collapsed_test(f)
    assert f.stages["unipotent"] <= 1e-5


def test_dual_edge_rotation_is_resonant(dual_edge):
    e, f = dual_edge
    a2, b2 = 2 * e.eigenvalue / 4.0, 1.0
    rot = sturmian_rotation(CocycleParams(a2, b2, GOLDEN))
    assert isinstance(classify_rotation(rot, W, kmax=50, tol=1e-5), Resonant)


def test_dichotomy_basic():
    ell = TorusMap.constant(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert not dichotomy_test(ell, W, 100_000)
    rep = dichotomy_report(schrodinger_map(5.0, 1.0), W, 100_000)
    assert rep.hyperbolic
    assert rep.lyapunov == pytest.approx(math.log((5 + math.sqrt(21)) / 2), abs=0.05)


def test_bottom_edge_is_antiperiodic(bottom_edge):
    e, f = bottom_edge
    assert f.sign == -1 and e.center == 0
    assert f.B.trace() == pytest.approx(-2.0)
    assert f.c > 10 * f.residual
    rot = sturmian_rotation(CocycleParams(e.eigenvalue / 2, 1.0, GOLDEN))
    assert classify_rotation(rot, W) == Resonant(0)


@pytest.mark.parametrize("size", [1e-2, 1e-3, 1e-4])
def test_dichotomy_window(bottom_edge, size):
    e, f = bottom_edge
    a2 = e.eigenvalue / 2
    for alpha in (size, -size):
        a = a2 + alpha
        hyp = dichotomy_test(schrodinger_map(a, 1.0), W, 1_000_000)
        assert hyp == (f.c * alpha < 0)
        if hyp:
            assert not spectrum_membership(a, 1.0, W)
