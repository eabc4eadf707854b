import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bst.bouncing_ball import StabilityData
from bst.errors import BadSetSingular, DegenerateDenominator, DegenerateOrbit, InputError, InsufficientJet
from bst.hessian import G_function, hessian_data, sign_change_roots
from bst.invariants import (InvariantConstants, b_invariant, decoupling_system, polynomial_remainder, prefactor,
                            zero_remainder)


def stability(kind, alpha):
    tr = 2 * math.cos(alpha) if kind == "elliptic" else 2 * math.cosh(alpha)
    return StabilityData(np.eye(2), tr, 1.0, kind, alpha, 0.0, tr)


def jet_sample(L, a, J=6, seed=0):
    rng = np.random.default_rng(seed)
    jet = rng.uniform(-2, 2, 2 * J + 1)
    jet[0], jet[1], jet[2] = L / 2, 0.0, -(1 + a / 2) / L
    return jet


# prefactor


def test_prefactor_examples():
    st_ = stability("elliptic", 2 * math.pi / 3)
    d = prefactor(st_, 1, "Dirichlet", 6, 3.7, 2.0)
    assert d.epsilon_B % 2 == 0
    assert abs(d.value) == pytest.approx(1 / math.sqrt(3), rel=1e-14)
    n = prefactor(st_, 1, "neumann", 6, 3.7, 2.0)
    assert n.value == pytest.approx(d.value, rel=1e-15)
    expected = np.exp(1j * 3.7 * 4.0) * np.exp(1j * math.pi * 6 / 4) / math.sqrt(3)
    assert abs(d.value - expected) < 1e-14


def test_prefactor_errors():
    with pytest.raises(DegenerateOrbit):
        prefactor(StabilityData(np.eye(2), 2.0, 1.0, "degenerate", None, 0.0, 2.0), 1, "dirichlet", 0, 1.0, 1.0)
    with pytest.raises(DegenerateOrbit):
        prefactor(stability("elliptic", math.pi), 2, "dirichlet", 0, 1.0, 1.0)
    with pytest.raises(InputError):
        prefactor(stability("elliptic", 1.0), 1, "robin", 0, 1.0, 1.0)


# b and b'


@pytest.mark.parametrize("j", [2, 3, 5])
@pytest.mark.parametrize("r", [1, 2])
def test_b_prime_display(r, j):
    L, a = 1.5, -1.1
    jet = jet_sample(L, a, seed=j)
    h = hessian_data(a, L, r)
    d = b_invariant(jet, h, InvariantConstants(), r, j)
    h11, S3 = h.h11, h.cube_sum
    f3, fo, fe = jet[3], jet[2 * j - 1], jet[2 * j]
    expected = h11**2 * (fe - 4 * L / (a + 2) * f3 * fo) + 4 * S3 * f3 * fo
    assert d.b_prime == pytest.approx(expected, rel=1e-12)
    assert d.coefficients == (pytest.approx(h11**2), pytest.approx(S3))


def test_vanishing_f3_decouples():
    L, a, j = 1.5, -1.1, 4
    jet = jet_sample(L, a)
    jet[3] = 0.0
    consts = InvariantConstants(C_tilde={4: 1.7})
    for r in (1, 2):
        h = hessian_data(a, L, r)
        d = b_invariant(jet, h, consts, r, j)
        assert d.b_prime == pytest.approx(1.7 * h.h11**2 * jet[8], rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.3, 4.0), st.integers(1, 2), st.integers(2, 6), st.integers(0, 1000))
def test_row_sum_substitution(a, L, r, j, seed):
    assume(min(abs(a - e) for e in (-2, 0, 2, math.sqrt(2), -math.sqrt(2))) > 0.02)
    d = b_invariant(jet_sample(L, a, seed=seed), hessian_data(a, L, r), InvariantConstants(), r, j)
    assert abs(d.b_prime - d.b_prime_direct) <= 1e-12 * max(1.0, abs(d.b_prime))


def test_linearity_in_constants_and_top_derivative():
    L, a, r, j = 1.2, 0.6, 2, 4
    h = hessian_data(a, L, r)
    jet = jet_sample(L, a, seed=4)
    base = InvariantConstants(C_tilde={j: 1.3}, C={j: -0.8}, C_hat={j: 0.5}, A={r: 1.1})

    def b_of(**kw):
        tabs = {name: dict(getattr(base, name)) for name in ("C_tilde", "C", "C_hat", "A")}
        for name, v in kw.items():
            tabs[name][j if name != "A" else r] = v
        return b_invariant(jet, h, InvariantConstants(**tabs), r, j).b

    for name in ("C_tilde", "C", "C_hat"):
        v1, v2, v3 = b_of(**{name: 1.0}), b_of(**{name: 2.0}), b_of(**{name: 3.0})
        assert v3 - v2 == pytest.approx(v2 - v1, rel=1e-12)
    assert b_of(A=2.2) == pytest.approx(2 * b_of(A=1.1), rel=1e-14)
    # coefficient of f^(2j) in b' is the first reported row entry
    d0 = b_invariant(jet, h, base, r, j)
    jet2 = jet.copy()
    jet2[2 * j] += 0.25
    d1 = b_invariant(jet2, h, base, r, j)
    assert (d1.b_prime - d0.b_prime) / 0.25 == pytest.approx(d0.row[0], rel=1e-12)


def test_insufficient_jet():
    h = hessian_data(0.5, 1.0, 1)
    with pytest.raises(InsufficientJet):
        b_invariant(np.zeros(7), h, InvariantConstants(), 1, 4)


def test_constants_validation():
    with pytest.raises(InputError):
        InvariantConstants(C={3: 0.0}).c(3)
    with pytest.raises(InputError):
        InvariantConstants.from_dict({"C": {"x": 1}})
    c = InvariantConstants.from_dict({"C_tilde": {"2": 1.5}, "A": {"1": 2.0}})
    assert c.c_tilde(2) == 1.5 and c.a_factor(1) == 2.0 and c.c(5) == 1.0
    assert InvariantConstants.from_dict(c.to_dict()) == c


def test_remainder_is_reflection_invariant():
    R = polynomial_remainder(0.7, {1: 1.3})
    jet = jet_sample(1.0, 0.3, seed=8)
    refl = jet * (-1.0) ** np.arange(len(jet))
    for j in (2, 3, 4, 5):
        assert R(jet[: 2 * j - 1], 1, j) == pytest.approx(R(refl[: 2 * j - 1], 1, j), rel=1e-15)
    assert zero_remainder(jet, 1, 3) == 0.0


# decoupling


def test_decoupling_examples():
    consts = InvariantConstants()
    with pytest.raises(BadSetSingular):
        decoupling_system(hessian_data(-1.0, 2.0, 1), hessian_data(-1.0, 2.0, 2), consts, 3)
    sys_ = decoupling_system(hessian_data(-0.6, 2.0, 1), hessian_data(-0.6, 2.0, 2), consts, 3)
    assert sys_.rel_det > 1e-3
    sys_ = decoupling_system(hessian_data(3.0, 2.0, 1), hessian_data(3.0, 2.0, 2), consts, 3)
    assert sys_.rel_det > 1e-3


@settings(max_examples=40, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.3, 4.0), st.integers(2, 6),
       st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.floats(-3.0, 3.0))
def test_determinant_is_multiple_of_G_difference(a, L, j, ct, ch, c):
    assume(min(abs(a - e) for e in (-2, -1, 0, 2, math.sqrt(2), -math.sqrt(2))) > 0.02 and abs(c) > 0.1)
    consts = InvariantConstants(C_tilde={j: ct}, C={j: c}, C_hat={j: ch})
    h1, h2 = hessian_data(a, L, 1), hessian_data(a, L, 2)
    det = decoupling_system(h1, h2, consts, j).det
    expected = 4 * ct * ch * (h1.h11 * h2.h11) ** 2 * (G_function(a, L, 2) - G_function(a, L, 1))
    assert det == pytest.approx(expected, rel=1e-9)


def test_determinant_zero_set():
    """On (-2, 2) the determinant vanishes only at a = -1; a = 0 is degenerate (T_4(0) = 1)."""
    consts = InvariantConstants()

    def det(a):
        return decoupling_system(hessian_data(a, 1.0, 1), hessian_data(a, 1.0, 2), consts, 3, tol=0.0).det

    roots, _ = sign_change_roots(det, -2.0, 2.0, n=4001)
    assert roots == [pytest.approx(-1.0, abs=1e-8)]
    with pytest.raises(DegenerateDenominator):
        hessian_data(0.0, 1.0, 2)
