import math

import numpy as np
import pytest

from almathieu.torus import TorusMap, inverse_sl2, matmul, pointwise, rotation_map, schrodinger_map


def test_evaluation_and_samples_agree():
    rng = np.random.default_rng(0)
    M = 7
    c = rng.normal(size=2 * M + 1) + 1j * rng.normal(size=2 * M + 1)
    c = 0.5 * (c + c[::-1].conj())
    f = TorusMap(c)
    K = 64
    th = 2 * np.pi * np.arange(K) / K
    assert f.is_real()
    assert f.samples(K) == pytest.approx(f(th), abs=1e-12)


def test_from_function_roundtrip():
    f = TorusMap.from_function(lambda t: np.cos(3 * t) + 0.5 * np.sin(t), K=64)
    assert f.coeffs[f.M + 3] == pytest.approx(0.5)
    assert f.coeffs[f.M + 1] == pytest.approx(-0.25j)
    assert f(0.7) == pytest.approx(math.cos(2.1) + 0.5 * math.sin(0.7))


def test_shift():
    f = TorusMap.from_function(np.cos, K=16)
    assert f.shift(0.4)(1.0) == pytest.approx(math.cos(1.4))


def test_rotation_and_schrodinger_maps():
    th = 0.9
    assert rotation_map(2)(th) == pytest.approx(np.array([[math.cos(1.8), -math.sin(1.8)], [math.sin(1.8), math.cos(1.8)]]))
    assert schrodinger_map(1.0, 2.0)(th) == pytest.approx(np.array([[1 - 2 * math.cos(th), -1], [1, 0]]))


def test_pointwise_products_and_inverse():
    A = schrodinger_map(0.3, 1.2)
    P = matmul(A, inverse_sl2(A))
    assert P(np.linspace(0, 6, 7)) == pytest.approx(np.broadcast_to(np.eye(2), (7, 2, 2)), abs=1e-12)
    sq = pointwise(lambda x: x * x, TorusMap.from_function(np.cos, K=16))
    assert sq(0.3) == pytest.approx(math.cos(0.3) ** 2)


def test_decay_width_and_serialisation():
    m = np.arange(-20, 21)
    f = TorusMap(np.exp(-0.5 * np.abs(m)).astype(complex))
    delta, C = f.decay_width()
    assert delta == pytest.approx(0.5, rel=1e-6)
    assert C == pytest.approx(1.0, rel=1e-6)
    g = TorusMap.from_json(f.to_json())
    assert np.array_equal(g.coeffs, f.coeffs)
    assert f.to_dict()["delta_estimate"] == pytest.approx(0.5, rel=1e-6)


def test_trimmed_keeps_values():
    f = TorusMap.from_function(np.cos, K=16).resized(40)
    assert f.trimmed(1e-14).M == 1
    assert f.trimmed(1e-14)(0.2) == pytest.approx(math.cos(0.2))


def test_even_coefficient_count_rejected():
    with pytest.raises(ValueError):
        TorusMap(np.zeros(4))
