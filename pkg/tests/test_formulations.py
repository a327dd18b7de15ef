import math

import numpy as np
import pytest

from conftest import random_bound_state
from idealframe.core import GravParams, SingularStateError, angular_momentum
from idealframe.forces import ForceConfig, j2_accel
from idealframe.formulations import (
    COMPONENTS,
    FormulationKind,
    FormulationState,
    cowell_field,
    cs_from_r,
    decode,
    encode,
    g_r_from_cs,
    ideal7_cs_field,
    ideal7_qq_field,
    ideal7_time_field,
    ideal8_cs_field,
    ideal8_qq_field,
    make_field,
)
from idealframe.frames import ideal_axes_in_space
from idealframe.propagator import bilinear_residual

K = FormulationKind
IDEAL = [k for k in K if k is not K.COWELL]


def _perturbed_states(rng, n, cfg):
    """Random (theta, g, M0, x, X) with the attitude moved off identity."""
    out = []
    for _ in range(n):
        x, X = random_bound_state(rng)
        _, M0 = encode(x, X, K.IDEAL7_QQ, cfg)
        q = rng.normal(size=4)
        g = q / np.linalg.norm(q) * math.sqrt(np.linalg.norm(np.cross(x, X)))
        out.append((rng.uniform(0, 2 * math.pi), g, M0))
    return out


def test_parse_kinds():
    assert K.parse("IDEAL7_CS") is K.IDEAL7_CS
    assert K.parse(" ideal8_qq ") is K.IDEAL8_QQ
    with pytest.raises(ValueError, match="unknown formulation"):
        K.parse("ideal9")
    assert [k.dimension for k in K] == [6, 8, 8, 7, 7, 7, 7]
    assert all(len(COMPONENTS[k]) == k.dimension for k in K)


# --- Cowell ---------------------------------------------------------------------


def test_cowell_circular(kepler_cfg):
    dy = cowell_field(0.0, np.array([1.0, 0, 0, 0, 1.0, 0]), kepler_cfg)
    assert np.array_equal(dy, [0, 1, 0, -1, 0, 0])


def test_cowell_conserves_angular_momentum(rng, kepler_cfg):
    for _ in range(10):
        x, X = random_bound_state(rng)
        dy = cowell_field(0.0, np.concatenate([x, X]), kepler_cfg)
        dG = np.cross(dy[:3], X) + np.cross(x, dy[3:])
        assert np.allclose(dG, 0.0, atol=1e-15)


def test_cowell_j2_additivity():
    grav = GravParams(GM=398600.8, J2=1.08265e-3, Re=6371.22)
    cfg = ForceConfig(grav, enable_j2=True)
    x, X = np.array([0.0, -5888.9727, -3400.0]), np.array([10.691338, 0.0, 0.0])
    dy = cowell_field(0.0, np.concatenate([x, X]), cfg)
    kepler = -grav.GM * x / np.linalg.norm(x) ** 3
    assert np.allclose(dy[3:], kepler + j2_accel(x, grav), rtol=1e-15, atol=0)


# --- regularised 7D -----------------------------------------------------------------


def test_ideal7_qq_circular_equilibrium(kepler_cfg):
    dy = ideal7_qq_field(0.3, [0, 0, 0, 1, 1, 0, 0], kepler_cfg, np.eye(3))
    assert np.array_equal(dy, [0, 0, 0, 0, 0, 0, 1])


def test_ideal7_qq_conic_satisfies_oscillator(kepler_cfg):
    e = 0.5
    for th in np.linspace(0, 2 * math.pi, 13):
        q = 1 + e * math.cos(th)
        Q = -e * math.sin(th)
        dy = ideal7_qq_field(th, [0, 0, 0, 1, q, Q, 0], kepler_cfg, np.eye(3))
        assert dy[4] == Q
        assert dy[5] == pytest.approx(-e * math.cos(th), abs=1e-15)


def test_ideal7_cs_constant_when_unperturbed(rng, kepler_cfg):
    for _ in range(10):
        g = rng.normal(size=4)
        C, S = rng.uniform(-0.3, 0.3, size=2)
        dy = ideal7_cs_field(rng.uniform(0, 6), np.concatenate([g, [C, S, 0]]), kepler_cfg, np.eye(3))
        assert np.array_equal(dy[:6], np.zeros(6))


def test_ideal7_cs_circular_clock(kepler_cfg):
    dy = ideal7_cs_field(1.0, [0, 0, 0, 1, 0, 0, 0], kepler_cfg, np.eye(3))
    assert dy[6] == 1.0


def test_q_nonpositive_is_singular(kepler_cfg):
    with pytest.raises(SingularStateError):
        ideal7_qq_field(0.0, [0, 0, 0, 1, 0.0, 0, 0], kepler_cfg, np.eye(3))
    with pytest.raises(SingularStateError):
        ideal8_qq_field(0.0, [0, 0, 0, 1, 1, -0.1, 0, 0], kepler_cfg, np.eye(3))


def test_ideal7_qq_chain_rule_against_time_field(rng, toy_cfg):
    for th, g, M0 in _perturbed_states(rng, 15, toy_cfg):
        G = float(g @ g)
        r = rng.uniform(0.6, 1.4)
        rdot = rng.uniform(-0.5, 0.5)
        t = rng.uniform(0, 20)
        d_reg = ideal7_qq_field(th, np.concatenate([g, [1 / r, -rdot / G, t]]), toy_cfg, M0)
        d_t = ideal7_time_field(t, np.concatenate([g, [r, rdot, th]]), toy_cfg, M0, flavor="qq")
        w = r * r / G  # dt/dtheta
        Gdot = 2 * float(g @ d_t[:4])
        expect = np.concatenate(
            [w * d_t[:4], [-rdot / G, w * (-d_t[5] / G + rdot * Gdot / G**2), w]]
        )
        assert np.allclose(d_reg, expect, rtol=1e-12, atol=1e-14)
        assert 1.0 / d_t[6] == pytest.approx(w, rel=1e-14)


def test_ideal7_cs_chain_rule_against_time_field(rng, toy_cfg):
    for th, g, M0 in _perturbed_states(rng, 15, toy_cfg):
        G = float(g @ g)
        C, S = rng.uniform(-0.3, 0.3, size=2)
        t = rng.uniform(0, 20)
        d_reg = ideal7_cs_field(th, np.concatenate([g, [C, S, t]]), toy_cfg, M0)
        d_t = ideal7_time_field(t, np.concatenate([g, [C, S, th]]), toy_cfg, M0, flavor="cs")
        w = d_reg[6]
        assert w * d_t[6] == pytest.approx(1.0, rel=1e-14)
        assert np.allclose(d_reg[:6], w * d_t[:6], rtol=1e-12, atol=1e-15)
        Gr = C * math.cos(th) + S * math.sin(th) + 1.0 / G
        assert w == pytest.approx(G / Gr**2, rel=1e-15)


def test_cs_field_matches_qq_field_through_mapping(rng, toy_cfg):
    # the same physical state in both regularised flavours must share dg
    for th, g, M0 in _perturbed_states(rng, 10, toy_cfg):
        G = float(g @ g)
        C, S = rng.uniform(-0.3, 0.3, size=2)
        Gr, rdot = g_r_from_cs(C, S, th, G, G * G)
        d_cs = ideal7_cs_field(th, np.concatenate([g, [C, S, 2.0]]), toy_cfg, M0)
        d_qq = ideal7_qq_field(th, np.concatenate([g, [Gr / G, -rdot / G, 2.0]]), toy_cfg, M0)
        assert np.allclose(d_cs[:4], d_qq[:4], rtol=1e-13, atol=1e-16)
        assert d_cs[6] == pytest.approx(d_qq[6], rel=1e-14)


# --- 8D -----------------------------------------------------------------------------


def test_ideal8_unperturbed_is_static(kepler_cfg):
    for field, rad in ((ideal8_qq_field, [1.2, 0.1]), (ideal8_cs_field, [0.1, -0.2])):
        lam = np.array([0.1, 0.2, 0.3, math.sqrt(1 - 0.14)])
        dy = field(0.7, np.concatenate([lam, [1.3], rad, [0]]), kepler_cfg, np.eye(3))
        assert np.array_equal(dy[:5], np.zeros(5))


@pytest.mark.parametrize("flavor", ["qq", "cs"])
def test_ideal8_product_rule_and_dG(rng, toy_cfg, flavor):
    f8 = {"qq": ideal8_qq_field, "cs": ideal8_cs_field}[flavor]
    f7 = {"qq": ideal7_qq_field, "cs": ideal7_cs_field}[flavor]
    for th, g, M0 in _perturbed_states(rng, 15, toy_cfg):
        G = float(g @ g)
        lam = g / math.sqrt(G)
        rad = [rng.uniform(0.7, 1.3), rng.uniform(-0.2, 0.2)] if flavor == "qq" else list(
            rng.uniform(-0.3, 0.3, size=2))
        d8 = f8(th, np.concatenate([lam, [G], rad, [1.0]]), toy_cfg, M0)
        d7 = f7(th, np.concatenate([g, rad, [1.0]]), toy_cfg, M0)
        # d(sum g**2) from the 7D field equals the 8D dG
        assert 2 * float(g @ d7[:4]) == pytest.approx(d8[4], rel=1e-12, abs=1e-16)
        dg = math.sqrt(G) * d8[:4] + lam * d8[4] / (2 * math.sqrt(G))
        assert np.allclose(dg, d7[:4], rtol=1e-12, atol=1e-16)
        assert np.allclose(d8[5:], d7[4:], rtol=1e-13, atol=1e-16)


def test_ideal8_dG_is_G_times_Pv(rng, toy_cfg):
    for th, g, M0 in _perturbed_states(rng, 10, toy_cfg):
        G = float(g @ g)
        lam = g / math.sqrt(G)
        q, t = 1.1, 3.0
        d8 = ideal8_qq_field(th, np.concatenate([lam, [G, q, 0.05, t]]), toy_cfg, M0)
        u, v, n = ideal_axes_in_space(M0, lam, th)
        r = 1 / q
        P = np.array(toy_cfg.accel(t, *(r * u)))
        assert d8[4] == pytest.approx(G * (r**3 / G**2) * float(P @ v), rel=1e-12)
        # lambda stays on the unit sphere: lambda . dlambda = 0
        assert abs(float(lam @ d8[:4])) < 1e-15


# --- physical-time 7D ---------------------------------------------------------------------


def test_time_field_circular(kepler_cfg):
    dy = ideal7_time_field(0.0, [0, 0, 0, 1, 1, 0, 0], kepler_cfg, np.eye(3), flavor="qq")
    assert np.array_equal(dy, [0, 0, 0, 0, 0, 0, 1])
    r, G = 2.0, math.sqrt(2.0)
    g = [0, 0, 0, math.sqrt(G)]
    dy = ideal7_time_field(0.0, g + [r, 0, 0], kepler_cfg, np.eye(3), flavor="qq")
    assert dy[5] == pytest.approx(0.0, abs=1e-15)
    assert dy[6] == pytest.approx(G / r**2, rel=1e-15)


def test_time_field_radial_equation_on_conic(kepler_cfg):
    p, e, G = 1.0, 0.6, 1.0
    for th in np.linspace(0, 2 * math.pi, 11):
        r = p / (1 + e * math.cos(th))
        rdot = G / p * e * math.sin(th)
        rddot = G / p * e * math.cos(th) * G / r**2
        dy = ideal7_time_field(0.0, [0, 0, 0, 1, r, rdot, th], kepler_cfg, np.eye(3), flavor="qq")
        assert dy[4] == rdot
        assert dy[5] == pytest.approx(rddot, abs=1e-14)


# --- ideal elements <-> radial motion ---------------------------------------------------------


def test_cs_examples():
    assert cs_from_r(1.0, 1.0, 1.0, 0.0, 0.83) == pytest.approx((0.0, 0.0), abs=1e-16)
    C, S = cs_from_r(1.0, 1.0, 2 / 3, 0.0, 0.0)
    assert (C, S) == pytest.approx((0.5, 0.0), abs=1e-15)
    Gr, rdot = g_r_from_cs(C, S, 0.0, 1.0, 1.0)
    assert Gr == pytest.approx(1.5, rel=1e-15)
    assert 1.0 / Gr == pytest.approx(2 / 3, rel=1e-15)
    assert rdot == 0.0


def test_cs_round_trip(rng):
    for _ in range(50):
        G, p = rng.uniform(0.5, 2.0, size=2)
        r, rdot, th = rng.uniform(0.3, 3.0), rng.uniform(-1, 1), rng.uniform(-7, 7)
        C, S = cs_from_r(G, p, r, rdot, th)
        Gr, rd = g_r_from_cs(C, S, th, G, p)
        assert G / Gr == pytest.approx(r, rel=1e-13)
        assert rd == pytest.approx(rdot, abs=1e-13)


# --- encode / decode ------------------------------------------------------------------------------


def test_encode_circular(kepler_cfg):
    st, M0 = encode([1, 0, 0], [0, 1, 0], K.IDEAL7_QQ, kepler_cfg)
    assert np.array_equal(st.y, [0, 0, 0, 1, 1, 0, 0])
    assert st.s == 0.0
    assert np.array_equal(M0, np.eye(3))
    st, _ = encode([1, 0, 0], [0, 1, 0], K.IDEAL7_CS, kepler_cfg)
    assert np.array_equal(st.y[4:6], [0, 0])


def test_encode_initial_attitude(rng, kepler_cfg):
    x, X = random_bound_state(rng)
    G = float(np.linalg.norm(angular_momentum(x, X)))
    for kind in IDEAL:
        st, _ = encode(x, X, kind, kepler_cfg, t0=4.0)
        assert np.array_equal(st.y[:3], [0, 0, 0])
        assert st.y[3] == (1.0 if kind in (K.IDEAL8_QQ, K.IDEAL8_CS) else math.sqrt(G))
        assert st.theta == 0.0 and st.t == 4.0


def test_decode_circular_exact(kepler_cfg):
    for kind in K:
        st, M0 = encode([1, 0, 0], [0, 1, 0], kind, kepler_cfg)
        c = decode(st, M0)
        assert np.array_equal(c.x, [1, 0, 0]) and np.allclose(c.X, [0, 1, 0], atol=1e-16)


@pytest.mark.parametrize("kind", list(K))
def test_decode_encode_round_trip(rng, toy_cfg, kind):
    for _ in range(30):
        x, X = random_bound_state(rng)
        st, M0 = encode(x, X, kind, toy_cfg, t0=1.5)
        c = decode(st, M0)
        assert np.linalg.norm(c.as_array() - np.concatenate([x, X])) <= 1e-13 * np.linalg.norm(
            np.concatenate([x, X]))
        assert c.t == 1.5


def test_decode_apoapsis_after_half_turn(kepler_cfg):
    e, p = 0.5, 1.0
    st, M0 = encode([p / (1 + e), 0, 0], [0, (1 + e) / p, 0], K.IDEAL7_CS, kepler_cfg)
    assert st.y[4:6] == pytest.approx([e, 0], abs=1e-15)
    half = FormulationState(K.IDEAL7_CS, math.pi, st.y, 1.0)
    c = decode(half, M0)
    assert c.r == pytest.approx(p / (1 - e), rel=1e-15)
    assert np.allclose(c.x, [-p / (1 - e), 0, 0], atol=1e-15)


def test_make_field_bilinear_identity(rng, toy_cfg):
    for kind in IDEAL:
        for _ in range(10):
            st, M0 = encode(*random_bound_state(rng), kind, toy_cfg)
            y = st.y.copy()
            q = rng.normal(size=4)
            y[:4] = q / np.linalg.norm(q) * np.linalg.norm(st.y[:4])
            th = rng.uniform(0, 2 * math.pi)
            f = make_field(kind, toy_cfg, M0)
            dy = f(th if kind.regularized else 0.5, y)
            scale = np.linalg.norm(y[:4]) * np.linalg.norm(dy[:4])
            assert abs(bilinear_residual(kind, y, dy)) <= 1e-14 * max(scale, 1e-300)
