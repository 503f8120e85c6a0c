import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from diracwalk.exceptions import InfeasibleError, UnsupportedError
from diracwalk.lattice import make_lattice
from diracwalk.linalg import identity, kron, unitarity_residual
from diracwalk.walk import (
    BUILDABLE,
    SCENARIOS,
    SIGNS,
    EMFieldSpec,
    WalkStep,
    build_walk,
    consistency_residual,
    em_coin_at_site,
    make_walk,
    mass_coin,
    symbol,
)
from oracles import STANDARD, S0, S1, S2, S3, dense_walk

EM = {"line1d_electric": 2, "square2d_em": 3, "cubic3d_em": 4}


def _fields(scenario, rng):
    n = EM.get(scenario)
    return None if n is None else tuple(rng.uniform(-1, 1, n))


@pytest.mark.parametrize("scenario", BUILDABLE)
def test_symbol_unitary_at_random_momenta(scenario, rng):
    walk = make_walk(scenario, 0.1, mass=0.8, fields=_fields(scenario, rng))
    for _ in range(50):
        k = rng.uniform(-20, 20, walk.dim)
        assert unitarity_residual(symbol(walk, k)) <= 1e-12


@pytest.mark.parametrize("scenario", BUILDABLE)
def test_coins_unitary_and_signs(scenario, rng):
    walk = make_walk(scenario, 0.1, mass=1.3, fields=_fields(scenario, rng))
    for s in walk.steps:
        if s.kind == "uniform_coin":
            assert unitarity_residual(s.matrix) <= 1e-12
        elif s.kind == "shift":
            assert s.signs == SIGNS[walk.spinor_dim]
    assert walk.dt == walk.lattice.alpha * walk.lattice.epsilon


def test_line_free_step_list():
    walk = make_walk("line1d_free", 0.1, mass=1.0)
    assert [s.kind for s in walk.steps] == ["shift", "uniform_coin"]
    c, s = math.cos(0.1), math.sin(0.1)
    assert np.allclose(walk.steps[1].matrix, [[c, -1j * s], [-1j * s, c]], atol=1e-16)
    massless = make_walk("line1d_free", 0.1)
    assert [s.kind for s in massless.steps] == ["shift"]


def test_equilateral_dt_and_mass_coin():
    walk = make_walk("tri_equilateral", 0.1, mass=1.0)
    assert walk.dt == pytest.approx(0.15, rel=1e-15)
    c, s = math.cos(1.5 * 0.1), math.sin(1.5 * 0.1)
    assert np.allclose(walk.steps[-1].matrix, [[c, -1j * s], [-1j * s, c]], atol=1e-15)


def test_four_spinor_mass_coin_uses_epsilon():
    m = mass_coin(4, 2.0, 0.1)
    ph = np.exp(-0.2j)
    assert np.allclose(m, np.diag([ph, ph, ph.conjugate(), ph.conjugate()]), atol=1e-16)


def test_cubic_wrappers_match_standard_form():
    # (U1 s1 x U_j) S_j (s1 U1^dagger x U_j^dagger) with the standard U_j
    walk = make_walk("cubic3d_free", 0.1)
    u1 = STANDARD["U1"][0]
    k = np.array([0.3, -0.7, 1.1])
    h = walk.lattice.grid_spacing
    dense = np.eye(4, dtype=complex)
    for name, step in zip(("U1", "U2", "U3"), np.eye(3)):
        outer = np.kron(u1 @ S1, STANDARD[name][0])
        ph = np.exp(1j * np.dot(k, step * h) * np.array([1, -1, -1, 1]))
        dense = outer @ np.diag(ph) @ outer.conj().T @ dense
    assert np.allclose(symbol(walk, k), dense, atol=1e-14)


def test_square_walk_matches_standard_product():
    walk = make_walk("square2d_free", 0.1, mass=0.5)
    u = STANDARD["U"][0]
    k = np.array([0.4, -1.2])
    s1 = np.diag(np.exp(1j * k[0] * 0.1 * np.array([1, -1])))
    s2 = np.diag(np.exp(1j * k[1] * 0.1 * np.array([1, -1])))
    c, s = math.cos(0.05), math.sin(0.05)
    mass = np.array([[c, -1j * s], [-1j * s, c]])
    assert np.allclose(symbol(walk, k), mass @ u @ s2 @ u.conj().T @ s1, atol=1e-14)


def test_gauge_coin_closed_forms():
    eps = 0.1
    a = 0.7
    c, s = math.cos(eps * a), math.sin(eps * a)
    assert np.allclose(em_coin_at_site((a, 0), (0,), "line1d_electric", eps), np.exp(1j * eps * a) * S0)
    assert np.allclose(em_coin_at_site((0, a), (0,), "line1d_electric", eps),
                       np.diag([np.exp(-1j * eps * a), np.exp(1j * eps * a)]))
    assert np.allclose(em_coin_at_site((0, 0, a), (0, 0), "square2d_em", eps), [[c, s], [-s, c]])
    for j, sig in enumerate((S1, S2, S3), start=1):
        pots = [0, 0, 0, 0]
        pots[j] = a
        expect = np.block([[c * S0, 1j * s * sig], [1j * s * sig, c * S0]])
        assert np.allclose(em_coin_at_site(tuple(pots), (0, 0, 0), "cubic3d_em", eps), expect)


def test_em_coin_examples():
    assert np.allclose(em_coin_at_site((1, 0), (3,), "line1d_electric", 0.1), np.exp(0.1j) * S0, atol=1e-16)
    assert np.array_equal(em_coin_at_site((0, 0), (0,), "line1d_electric", 0.1), identity(2))
    eps = 0.1
    m = em_coin_at_site((0, math.pi / (2 * eps), 0, 0), (0, 0, 0), "cubic3d_em", eps)
    expect = np.block([[np.zeros((2, 2)), 1j * S1], [1j * S1, np.zeros((2, 2))]])
    assert np.allclose(m, expect, atol=1e-15)


def test_em_coin_sampled_and_errors():
    grid = np.arange(8.0).reshape(8)
    f = EMFieldSpec((grid, 0.0))
    assert np.allclose(em_coin_at_site(f, (5,), "line1d_electric", 0.1), np.exp(0.5j) * S0)
    with pytest.raises(ValueError):
        em_coin_at_site((1.0,), (0,), "line1d_electric", 0.1)
    with pytest.raises(ValueError):
        em_coin_at_site((1.0, 0.0), (0,), "line1d_free", 0.1)


def test_minimal_coupling_symbol_identity(rng):
    for _ in range(20):
        a0, a1 = rng.uniform(-2, 2, 2)
        k = rng.uniform(-5, 5)
        eps = 0.1
        em = make_walk("line1d_electric", eps, mass=0.9, fields=(a0, a1))
        free = make_walk("line1d_free", eps, mass=0.9)
        lhs = symbol(em, [k])
        rhs = np.exp(1j * eps * a0) * symbol(free, [k - a1])
        assert np.max(np.abs(lhs - rhs)) <= 1e-13


@pytest.mark.parametrize("em,free,n", [("line1d_electric", "line1d_free", 2),
                                       ("square2d_em", "square2d_free", 3),
                                       ("cubic3d_em", "cubic3d_free", 4)])
def test_zero_field_reduces_to_free(em, free, n):
    a = make_walk(em, 0.1, mass=0.4, fields=(0.0,) * n)
    b = make_walk(free, 0.1, mass=0.4)
    assert len(a.steps) == len(b.steps)
    for s, t in zip(a.steps, b.steps):
        assert s.kind == t.kind
        if s.kind == "shift":
            assert (s.step, s.signs) == (t.step, t.signs)
        else:
            assert np.array_equal(s.matrix, t.matrix)


def test_symbol_examples():
    eps, k = 0.1, 1.7
    walk = make_walk("line1d_free", eps)
    assert np.allclose(symbol(walk, [k]), np.diag([np.exp(1j * k * eps), np.exp(-1j * k * eps)]), atol=1e-15)
    walk = make_walk("line1d_free", eps, mass=1.0)
    assert np.allclose(symbol(walk, [0.0]), walk.steps[-1].matrix, atol=0)


@pytest.mark.parametrize("scenario", ["line1d_free", "square2d_em", "tri_isosceles", "parallelepiped"])
def test_symbol_matches_dense_operator(scenario, rng):
    # plane wave through an explicitly assembled permutation/coin matrix
    walk = make_walk(scenario, 0.2, mass=0.6, fields=_fields(scenario, rng))
    grid = {1: (6,), 2: (4, 6), 3: (4, 6, 4)}[walk.dim]
    steps = [("shift", (s.step, s.signs)) if s.kind == "shift" else ("coin", s.matrix) for s in walk.steps]
    w = dense_walk(grid, steps)
    n = np.array([rng.integers(0, g) for g in grid])
    h = np.array(walk.lattice.grid_spacing)
    k = 2 * np.pi * n / (np.array(grid) * h)
    sites = np.array(list(np.ndindex(*grid)))
    wave = np.exp(1j * (sites * h) @ k)
    sym = symbol(walk, k)
    for c in range(walk.spinor_dim):
        spinor = np.zeros(walk.spinor_dim)
        spinor[c] = 1
        psi = np.kron(wave, spinor)
        out = (w @ psi).reshape(len(sites), walk.spinor_dim)
        assert np.allclose(out, np.outer(wave, sym @ spinor), atol=1e-12)


def test_consistency_residual_order():
    walk = lambda e: make_walk("line1d_free", e, mass=1.0)
    r = [consistency_residual(walk(e), [0.5]) for e in (0.1, 0.05, 0.025)]
    assert r[0] / r[1] == pytest.approx(4, rel=0.05)
    assert r[1] / r[2] == pytest.approx(4, rel=0.05)
    assert consistency_residual(make_walk("line1d_free", 0.1), [0.0]) == 0.0


def test_cubic_em_consistency_order(rng):
    pots = tuple(rng.uniform(-1, 1, 4))
    for _ in range(5):
        k = rng.uniform(-2, 2, 3)
        r1 = consistency_residual(make_walk("cubic3d_em", 0.04, 1.0, pots), k)
        r2 = consistency_residual(make_walk("cubic3d_em", 0.02, 1.0, pots), k)
        assert math.log2(r1 / r2) >= 1.9


def test_isosceles_is_square_with_composed_shift():
    sq = make_walk("square2d_free", 0.1, mass=0.7)
    tri = make_walk("tri_isosceles", 0.1, mass=0.7)
    k = np.array([0.9, -2.3])
    # S_2 -> S_v S_u on the isosceles index grid
    steps = []
    for s in sq.steps:
        if s.kind != "shift":
            steps.append(s)
        elif s.label == "x":
            steps.append(WalkStep.shift((2, 0), s.signs, "x"))
        else:
            steps += [WalkStep.shift((1, 1), s.signs, "u"), WalkStep.shift((-1, 1), s.signs, "v")]
    composed = replace(sq, steps=tuple(steps), lattice=tri.lattice)
    assert np.allclose(symbol(composed, k), symbol(tri, k), atol=1e-14)


def test_build_errors():
    with pytest.raises(InfeasibleError) as info:
        make_walk("rhombohedral", 0.1)
    assert info.value.report is not None and info.value.report.status == "infeasible"
    with pytest.raises(ValueError):
        make_walk("line1d_free", 0.1, fields=(1.0, 0.0))
    with pytest.raises(ValueError):
        make_walk("line1d_electric", 0.1, fields=(1.0,))
    with pytest.raises(ValueError):
        build_walk("square2d_free", make_lattice("line", 0.1))
    with pytest.raises(ValueError):
        make_walk("line1d_free", 0.1, mass=-1)
    with pytest.raises(ValueError):
        make_walk("nope", 0.1)
    with pytest.raises(ValueError):
        EMFieldSpec((math.inf, 0.0))
    with pytest.raises(ValueError):
        EMFieldSpec((np.zeros(4), np.zeros(5)))


def test_symbol_rejects_site_coins():
    walk = make_walk("line1d_electric", 0.1, fields=(np.linspace(0, 1, 8), 0.0))
    assert walk.has_site_coins and walk.grid_shape == (8,)
    with pytest.raises(UnsupportedError):
        symbol(walk, [0.1])
    with pytest.raises(ValueError):
        symbol(make_walk("line1d_free", 0.1), [0.1, 0.2])


@pytest.mark.parametrize("scenario", BUILDABLE)
def test_walk_json(scenario, rng):
    walk = make_walk(scenario, 0.1, mass=0.3, fields=_fields(scenario, rng))
    doc = json.loads(json.dumps(walk.to_dict()))
    assert doc["spinor_dim"] == walk.spinor_dim and doc["dt"] == walk.dt
    assert doc["lattice"]["name"] == SCENARIOS[scenario][0]
    for s, d in zip(walk.steps, doc["steps"]):
        if s.kind == "uniform_coin":
            flat = np.array([complex(re, im) for re, im in d["matrix"]])
            assert np.array_equal(flat.reshape(s.matrix.shape), s.matrix)
        else:
            assert d["step"] == list(s.step) and d["signs"] == list(s.signs)


@given(st.floats(0.01, 0.5), st.floats(0, 5))
def test_builders_pure_and_deterministic(eps, mass):
    a = make_walk("parallelepiped", eps, mass).to_dict()
    b = make_walk("parallelepiped", eps, mass).to_dict()
    assert json.dumps(a) == json.dumps(b)
