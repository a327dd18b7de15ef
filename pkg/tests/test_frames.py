import math

import numpy as np
import pytest

from conftest import random_bound_state
from idealframe.core import SingularStateError
from idealframe.forces import ForceConfig
from idealframe.core import GravParams
from idealframe.formulations import FormulationKind, encode
from idealframe.frames import (
    departure_matrix,
    ideal_axes_in_space,
    orbital_frame,
    rotation_from_params,
    scale_params,
    space_axes,
    unscale_params,
)


def _unit_quaternion(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def test_orbital_frame_axis_aligned():
    f = orbital_frame([2, 0, 0], [0, 3, 0])
    assert np.array_equal(f.u, [1, 0, 0])
    assert np.array_equal(f.v, [0, 1, 0])
    assert np.array_equal(f.n, [0, 0, 1])
    assert (f.r, f.G) == (2.0, 6.0)


def test_orbital_frame_v_is_n_cross_u(rng):
    for _ in range(10):
        f = orbital_frame(rng.normal(size=3), rng.normal(size=3))
        assert np.array_equal(f.v, np.cross(f.n, f.u))


def test_orbital_frame_rectilinear_rejected():
    with pytest.raises(SingularStateError):
        orbital_frame([1, 0, 0], [2, 0, 0])


def test_departure_matrix_identity_and_retrograde():
    assert np.array_equal(departure_matrix(orbital_frame([1, 0, 0], [0, 1, 0])), np.eye(3))
    M = departure_matrix(orbital_frame([1, 0, 0], [0, -1, 0]))
    assert np.array_equal(M[:, 2], [0, 0, -1])
    assert np.allclose(M, np.diag([1, -1, -1]))


def test_departure_matrix_is_rotation(rng):
    for _ in range(20):
        M = departure_matrix(orbital_frame(rng.normal(size=3), rng.normal(size=3)))
        assert np.allclose(M.T @ M, np.eye(3), atol=1e-15)
        assert np.linalg.det(M) == pytest.approx(1.0, abs=1e-14)


def test_rotation_identity_and_z90():
    assert np.array_equal(rotation_from_params([0, 0, 0, 1]), np.eye(3))
    h = math.sqrt(2) / 2
    N = rotation_from_params([0, 0, h, h])
    assert np.allclose(N, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_rotation_orthogonal_and_double_cover(rng):
    for _ in range(50):
        lam = _unit_quaternion(rng)
        N = rotation_from_params(lam)
        assert np.allclose(N.T @ N, np.eye(3), atol=1e-14)
        assert np.linalg.det(N) == pytest.approx(1.0, abs=1e-14)
        assert np.array_equal(N, rotation_from_params(-lam))


def test_scale_unscale_examples():
    assert np.array_equal(scale_params([0, 0, 0, 1], 4.0), [0, 0, 0, 2])
    lam, G = unscale_params([1, 1, 1, 1])
    assert G == 4.0
    assert np.array_equal(lam, [0.5] * 4)


def test_scale_unscale_round_trip(rng):
    for _ in range(50):
        lam = _unit_quaternion(rng)
        G = rng.uniform(0.01, 100.0)
        lam2, G2 = unscale_params(scale_params(lam, G))
        assert np.max(np.abs(lam2 - lam)) < 1e-14
        assert abs(G2 - G) <= 1e-14 * G


def test_scale_rejects_nonpositive_G():
    with pytest.raises(SingularStateError):
        scale_params([0, 0, 0, 1], 0.0)
    with pytest.raises(SingularStateError):
        unscale_params([0, 0, 0, 0])


def test_ideal_axes_examples():
    u, v, n = ideal_axes_in_space(np.eye(3), [0, 0, 0, 1], 0.0)
    assert np.array_equal(u, [1, 0, 0]) and np.array_equal(v, [0, 1, 0]) and np.array_equal(n, [0, 0, 1])
    u, v, n = ideal_axes_in_space(np.eye(3), [0, 0, 0, 1], math.pi / 2)
    assert np.allclose(u, [0, 1, 0], atol=1e-16)
    assert np.allclose(v, [-1, 0, 0], atol=1e-16)


def test_ideal_axes_orthonormal_right_handed(rng):
    for _ in range(30):
        M0 = departure_matrix(orbital_frame(rng.normal(size=3), rng.normal(size=3)))
        g = rng.normal(size=4) * rng.uniform(0.5, 3.0)
        u, v, n = ideal_axes_in_space(M0, g, rng.uniform(-10, 10))
        B = np.column_stack([u, v, n])
        assert np.allclose(B.T @ B, np.eye(3), atol=1e-14)
        assert np.allclose(np.cross(u, v), n, atol=1e-14)


def test_space_axes_kernel_matches_matrix_form(rng):
    for scaled in (False, True):
        M0 = departure_matrix(orbital_frame(rng.normal(size=3), rng.normal(size=3)))
        p = _unit_quaternion(rng)
        k = 2.0
        if scaled:
            p = p * 1.7
            k = 2.0 / float(p @ p)
        th = rng.uniform(0, 2 * math.pi)
        ref = np.concatenate(ideal_axes_in_space(M0, p, th))
        fast = space_axes(tuple(M0.reshape(9)), *p, k, math.cos(th), math.sin(th))
        assert np.allclose(fast, ref, atol=1e-15)


def test_axes_after_encode_reproduce_orbital_frame(rng):
    cfg = ForceConfig(GravParams(GM=1.0))
    for kind in (FormulationKind.IDEAL7_CS, FormulationKind.IDEAL8_QQ):
        for _ in range(10):
            x, X = random_bound_state(rng)
            st, M0 = encode(x, X, kind, cfg)
            u, v, n = ideal_axes_in_space(M0, st.y[:4], st.theta)
            f = orbital_frame(x, X)
            assert np.allclose(np.concatenate([u, v, n]), np.concatenate([f.u, f.v, f.n]), atol=1e-14)
