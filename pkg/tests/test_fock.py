import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhur import fock
from nhur.errors import TruncationTooSmall
from nhur.linalg import adjoint, commutator, inner, random_operator
from nhur.metric import weighted
from nhur.uncertainty import mean, ur_report, variance

N = 80


def test_ladder_two_levels():
    c, cd = fock.ladder(2)
    assert np.array_equal(c, [[0, 1], [0, 0]])
    assert np.array_equal(cd, [[0, 0], [1, 0]])


@pytest.mark.parametrize("n", [2, 5, 30])
def test_ladder_commutator_and_corner(n):
    c, cd = fock.ladder(n)
    vac = np.zeros(n)
    vac[0] = 1
    assert np.linalg.norm(c @ vac) == 0
    comm = commutator(c, cd)
    assert np.linalg.norm(fock.lower_block(comm) - np.eye(n - 1)) <= 1e-12
    assert comm[n - 1, n - 1] == pytest.approx(1 - n)
    assert np.array_equal(fock.number_operator(n), np.diag(np.arange(n)).astype(complex))
    assert np.allclose(cd @ c, fock.number_operator(n))


def test_ladder_rejects_small_n():
    with pytest.raises(ValueError):
        fock.ladder(1)


def test_position_momentum():
    x0, p0 = fock.position_momentum(10)
    assert np.array_equal(x0, adjoint(x0))
    assert np.allclose(p0, adjoint(p0), atol=1e-15)
    assert (x0 @ x0)[0, 0] == pytest.approx(0.5)
    comm = fock.lower_block(commutator(x0, p0))
    assert np.allclose(comm, 1j * np.eye(9), atol=1e-12)


def test_tail_mass_and_minimal_truncation():
    # independent oracle: explicit Poisson sum
    z = 1.5
    lam = abs(z) ** 2
    direct = 1 - sum(math.exp(-lam) * lam**k / math.factorial(k) for k in range(10))
    assert fock.tail_mass(z, 10) == pytest.approx(direct, rel=1e-8)
    need = fock.minimal_truncation(3.0)
    assert fock.tail_mass(3.0, need) <= fock.TAIL_TOL < fock.tail_mass(3.0, need - 1)
    assert need <= N


def test_coherent_vacuum():
    phi = fock.coherent_state(0, 5)
    assert np.array_equal(phi, [1, 0, 0, 0, 0])


@pytest.mark.parametrize("z", [0.3, 1 + 0.5j, -2 + 1j, 3j, 2.0 - 2.0j])
def test_coherent_state_properties(boson80, z):
    phi = fock.coherent_state(z, N)
    assert np.linalg.norm(phi) == pytest.approx(1.0, abs=1e-14)
    assert fock.coherent_residual(z, phi) <= 1e-8
    number = boson80["cdag"] @ boson80["c"]
    assert mean(number, phi) == pytest.approx(abs(z) ** 2, abs=1e-8)
    assert variance(boson80["x0"], phi) == pytest.approx(1 / np.sqrt(2), abs=1e-8)
    # closed-form coefficients z^k / sqrt(k!) up to normalization
    k = np.arange(6)
    expected = np.array([z**j / math.sqrt(math.factorial(j)) for j in k]) * math.exp(-abs(z) ** 2 / 2)
    assert np.allclose(phi[:6], expected, atol=1e-12)


def test_coherent_truncation_too_small():
    with pytest.raises(TruncationTooSmall) as info:
        fock.coherent_state(3.0, 20)
    assert info.value.minimal_n == fock.minimal_truncation(3.0)
    assert info.value.minimal_n > 20
    fock.coherent_state(3.0, info.value.minimal_n)


@pytest.mark.parametrize("z", [1.0, 1 + 1j, -0.5 + 2j])
def test_number_pair_anticommutator_closed_form(boson80, z):
    a = boson80["c"] + boson80["cdag"]
    b = boson80["cdag"] @ boson80["c"]
    phi = fock.coherent_state(z, N)
    anti = inner(phi, (a @ b + b @ a) @ phi)
    assert anti == pytest.approx((1 + 2 * abs(z) ** 2) * (z + np.conj(z)), abs=1e-8)


def test_identity_transform_gives_bosons(boson80):
    t = fock.identity_transform(N)
    a, b = fock.pseudo_boson_pair(t)
    assert np.array_equal(a, boson80["c"])
    assert np.array_equal(b, boson80["cdag"])
    x, p = fock.xp_pair(a, b)
    assert np.allclose(x, boson80["x0"]) and np.allclose(p, boson80["p0"])
    phi, psi = fock.bi_coherent(0.4 + 0.2j, t)
    assert np.array_equal(phi, psi)
    assert np.array_equal(phi, fock.coherent_state(0.4 + 0.2j, N))


def test_diagonal_transform_pair():
    n = 8
    t = fock.RegularTransform.from_matrix(np.diag(np.linspace(1, 2, n)))
    a, b = fock.pseudo_boson_pair(t)
    assert np.allclose(fock.lower_block(commutator(a, b)), np.eye(n - 1), atol=1e-12)
    assert np.count_nonzero(np.abs(a) > 1e-15) == n - 1


def test_random_transform_number_spectrum(rng):
    n = 10
    r = np.eye(n) + 0.2 * random_operator(rng, n)
    t = fock.RegularTransform.from_matrix(r)
    a, b = fock.pseudo_boson_pair(t)
    ev = np.sort(np.linalg.eigvals(b @ a).real)
    assert np.allclose(ev, np.arange(n), atol=1e-8)
    assert np.linalg.norm(adjoint(b) - a) > 1e-3


def test_transform_refuses_singular():
    with pytest.raises(ValueError):
        fock.RegularTransform.from_matrix(np.diag([1.0, 1e-12]))


def test_pair_dimension_mismatch():
    t = fock.identity_transform(4)
    with pytest.raises(ValueError):
        fock.pseudo_boson_pair(t, 5)
    with pytest.raises(ValueError):
        fock.bi_coherent(0.1, t, 5)
    with pytest.raises(ValueError):
        fock.xp_pair(np.eye(2), np.eye(3))


def test_canonical_transform_regular(canonical80):
    t = canonical80["T"]
    assert np.linalg.norm(t.R @ t.R_inv - np.eye(N)) <= 1e-10
    assert t.cond <= np.exp(2 * fock.CANONICAL_THETA) + 1e-9
    assert np.linalg.norm(adjoint(canonical80["b"]) - canonical80["a"]) > 1
    x, p = canonical80["X"], canonical80["P"]
    assert np.linalg.norm(x - adjoint(x)) > 1e-3
    # the truncation corner is conjugated by R: [a, b] = I - N (R e_top)(e_top^T R^-1)
    top = np.zeros(N)
    top[-1] = 1
    corner = N * np.outer(t.R @ top, top @ t.R_inv)
    assert np.linalg.norm(commutator(canonical80["a"], canonical80["b"]) - (np.eye(N) - corner)) <= 1e-9
    assert np.linalg.norm(commutator(x, p) - 1j * (np.eye(N) - corner)) <= 1e-9
    # R is banded with fast decay, so levels far from the top see the canonical relation
    low = commutator(x, p)[:40, :40]
    assert np.allclose(low, 1j * np.eye(40), atol=1e-10)


def test_canonical_metric_intertwines_pair(canonical80):
    met = canonical80["metric"]
    # the weighted adjoint of a is b
    assert np.linalg.norm(met.S_inv @ adjoint(canonical80["a"]) @ met.S - canonical80["b"]) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(re=st.floats(-1.4, 1.4), im=st.floats(-1.4, 1.4))
def test_bi_coherent_laws(canonical80, re, im):
    z = complex(re, im)
    t = canonical80["T"]
    phi, psi = fock.bi_coherent(z, t)
    assert np.linalg.norm(canonical80["a"] @ phi - z * phi) <= 1e-7
    assert np.linalg.norm(adjoint(canonical80["b"]) @ psi - z * psi) <= 1e-7
    assert inner(psi, phi) == pytest.approx(1.0, abs=1e-8)
    assert np.linalg.norm(phi - t.s_inverse() @ psi) <= 1e-8


@pytest.mark.parametrize("z", [0.0, 1.0, 1 + 1j, -1.5 + 0.5j, 2j])
def test_bi_coherent_weighted_moments(canonical80, z):
    phi, _ = fock.bi_coherent(z, canonical80["T"])
    prod = weighted(canonical80["metric"])
    x, p = canonical80["X"], canonical80["P"]
    zc = np.conj(z)
    assert prod.norm(phi) == pytest.approx(1.0, abs=1e-8)
    assert mean(x, phi, prod) == pytest.approx((z + zc) / np.sqrt(2), abs=1e-7)
    assert mean(p, phi, prod) == pytest.approx((z - zc) / (np.sqrt(2) * 1j), abs=1e-7)
    xx = prod.inner(x @ phi, x @ phi)
    pp = prod.inner(p @ phi, p @ phi)
    assert xx == pytest.approx(0.5 * (z**2 + zc**2 + 2 * abs(z) ** 2 + 1), abs=1e-7)
    assert pp == pytest.approx(-0.5 * (z**2 + zc**2 - 2 * abs(z) ** 2 - 1), abs=1e-7)
    rep = ur_report(x, p, phi, prod)
    assert rep.delta_A == pytest.approx(1 / np.sqrt(2), abs=1e-6)
    assert rep.delta_B == pytest.approx(1 / np.sqrt(2), abs=1e-6)
    assert rep.commutator_term == pytest.approx(1j, abs=1e-6)


def test_standard_product_breaks_minimum(canonical80):
    phi, _ = fock.bi_coherent(1.0, canonical80["T"])
    phi = phi / np.linalg.norm(phi)
    rep = ur_report(canonical80["X"], canonical80["P"], phi)
    assert rep.delta_product > 0.5 + 1e-6
