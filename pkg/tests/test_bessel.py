from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, strategies as st

from klsym.bessel import (FrobMatrix2, LaurentBlock, d_operator, embed_cyclotomic,
                          fiber_trace_check, frobenius_matrix_rel, reduce_to_V, theta_coeffs,
                          theta_decay, transfer_residual, unit_root, verify_gauss_manin)
from klsym.exact import FqField, kloosterman_sum
from klsym.padic import PadicElem, omega_valuation
from klsym.series import OmegaSeries

P = 5


def theta_oracle(p, i, N):
    """theta_i = sum over a + p b = i of (-1)^b pi^(a+b) / (a! b!), folded into coordinates."""
    coords = [Fraction(0)] * (p - 1)
    for b in range(i // p + 1):
        a = i - p * b
        e = a + b
        k, r = divmod(e, p - 1)
        coords[r] += Fraction((-1) ** b * (-p) ** k, factorial(a) * factorial(b))
    mod = p ** N
    out = []
    for c in coords:
        assert c.denominator % p != 0
        out.append(c.numerator * pow(c.denominator, -1, mod) % mod)
    return tuple(out)


THETA = theta_coeffs(P, 120, 12)


@given(st.integers(0, 120))
def test_theta_matches_rational_oracle(i):
    assert THETA[i].coeffs == theta_oracle(P, i, 12)


@given(st.integers(0, 120))
def test_theta_valuation_bound(i):
    v = omega_valuation(THETA[i])
    assert v.is_infinite or not v.exact or Fraction(v.numerator) >= theta_decay(P) * i


def test_theta_at_one_is_root_of_unity():
    z = THETA.at_one()
    assert (z ** P).congruent(1)
    assert not (z - 1).congruent(0)


terms = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(-3, 3)),
    st.integers(-50, 50), min_size=1, max_size=5)


@pytest.mark.parametrize("q", [1, 5])
@given(x=terms, y=terms)
def test_reduction_kills_image_of_D(q, x, y):
    N, L = 12, 6
    X = LaurentBlock.from_terms(P, N, q, L, {k: v for k, v in x.items() if v})
    Y = LaurentBlock.from_terms(P, N, q, L, {k: v for k, v in y.items() if v})
    r1 = reduce_to_V(X)
    r2 = reduce_to_V(X + d_operator(Y))
    S = max(r1.shift, r2.shift)
    a1, a2 = r1.times_pi(S), r2.times_pi(S)
    assert a1.a.congruent(a2.a) and a1.b.congruent(a2.b)


def test_reduction_fixes_V():
    N, L = 10, 4
    blk = LaurentBlock.from_terms(P, N, 5, L, {(0, 0): 3, (1, 0): 2, (2, -1): PadicElem.pi(P, N)})
    vp = reduce_to_V(blk)
    a, b = vp.integral()
    assert a.congruent(OmegaSeries.from_ints(P, N, [3, 2, 0, 0]))
    assert b.congruent(OmegaSeries.from_ints(P, N, [0, 0, 1, 0]))


def test_gauss_manin_on_basis():
    out = verify_gauss_manin(P, 10)
    assert all(v["ok"] for v in out.values())


@pytest.fixture(scope="module")
def frob():
    return frobenius_matrix_rel(P, 1, 20, 12)


def test_frobenius_constants(frob):
    c = frob.constants_report()
    assert c["A1(0)=1"] and c["A2(0)=0"] and c["A4(0)=p^m"] and c["A3(0)!=0"]
    assert c["val A3(0)"] == "2"


def test_transfer_equation_holds(frob):
    assert transfer_residual(frob) is None


def test_transfer_equation_detects_perturbation(frob):
    bump = OmegaSeries.constant(PadicElem.pi(P, frob.A1.N, 3), frob.A1.length).shift(4)
    bad = FrobMatrix2(frob.A1, frob.A2, frob.A3 + bump, frob.A4, level=1, p=P)
    assert transfer_residual(bad) is not None


def test_level_two_composition_constants():
    F2 = frobenius_matrix_rel(P, 2, 6, 8)
    c = F2.constants_report()
    assert c["A1(0)=1"] and c["A2(0)=0"] and c["A4(0)=p^m"]


@pytest.mark.parametrize("tbar", [1, 2, 3, 4])
def test_fiber_trace_degree_one(tbar):
    r = fiber_trace_check(P, tbar, 1)
    assert r["ok"] and r["N_eff"] >= 10


def test_fiber_trace_degree_two():
    r = fiber_trace_check(P, 2, 2)
    assert r["ok"] and r["N_eff"] >= 10


def test_tampered_theta_breaks_fiber_trace():
    theta = theta_coeffs(P, 90, 14).tampered(3, PadicElem.pi(P, 14, 2))
    r = fiber_trace_check(P, 1, 1, theta=theta)
    assert not r["ok"]


def test_unit_root_properties():
    F = FqField(P, 1)
    for t in range(1, P):
        r = unit_root(F, F(t), THETA)
        kl = embed_cyclotomic(kloosterman_sum(F, F(t)), THETA)
        assert (r * r + kl * r + P).congruent(0, 30)
        assert (r - 1).valuation().value() > 0


def test_wider_x_window_changes_nothing(frob):
    wide = frobenius_matrix_rel(P, 1, 20, 12, U_x=frob.meta["U"] + 15)
    assert wide.meta["U"] > frob.meta["U"]
    for a, b in zip(frob.rows(), wide.rows()):
        for s, t in zip(a, b):
            for n in range(21):
                v = (s[n] - t[n]).valuation()
                assert v.is_infinite or not v.exact
