"""
Acceptance suite: one test per criterion, each recording a PASS/FAIL line that
is printed in the terminal summary.
"""
import random
from fractions import Fraction

import pytest
from flint import fmpz_poly

from klsym.bessel import (FrobMatrix2, LaurentBlock, d_operator, fiber_trace_check, reduce_to_V,
                          theta_coeffs, theta_decay, transfer_residual, verify_gauss_manin)
from klsym.cache import Cache
from klsym.cli import (PASS, Pipeline, VerificationReport, _continuity_check,
                       _identity_check, _lunit_checks, _t1_check)
from klsym.exact import exp_power_sums, l_sym_k_coeffs, newton_bound_report, power_sums
from klsym.padic import PadicElem, PrecisionProfile, omega_valuation
from klsym.series import OmegaSeries
from klsym.sym import (KappaValue, SymBlock, alpha_sym_columns, commutation_residual, delta_q,
                       kernel_dim, l_sym_inf)

from conftest import MEDIUM, SMALL

SEED = 20261018
DEFAULT = PrecisionProfile()


def record(criteria, n, ok, text):
    criteria[n] = (bool(ok), text)
    assert ok, text


@pytest.fixture(scope="module")
def default_pipe():
    return Pipeline(DEFAULT, Cache(None))


@pytest.fixture(scope="module")
def medium_pipe():
    return Pipeline(MEDIUM, Cache(None))


# 1 ------------------------------------------------------------------------

def test_criterion_01_exact_integrality(criteria):
    seen = []
    for p in (5, 7):
        for k in (1, 2, 3, 4):
            S = power_sums(p, 1, k, 4)
            c = exp_power_sums(S)
            assert all(isinstance(s, int) for s in S)
            assert all(x.denominator == 1 for x in c)
            assert l_sym_k_coeffs(p, 1, k, 4).coeffs == tuple(int(x) for x in c)
            seen.append((p, k))
    record(criteria, 1, len(seen) == 8, "S_k(m) and c_m integral for p in {5,7}, k=1..4, M=4")


# 2 ------------------------------------------------------------------------

def test_criterion_02_newton_bound(criteria):
    bad = []
    for p in (5, 7):
        for k in (1, 2, 3, 4):
            for r in newton_bound_report(l_sym_k_coeffs(p, 1, k, 4).coeffs, p, 1):
                if r["status"] != "pass":
                    bad.append((p, k, r))
    record(criteria, 2, not bad, f"ord_q c_m >= (1-1/(p-1)) m(m-1) exactly; violations: {bad}")


# 3 ------------------------------------------------------------------------

def test_criterion_03_fiber_traces(criteria):
    rows = [fiber_trace_check(5, tbar, m) for tbar in range(1, 5) for m in (1, 2)]
    ok = all(r["ok"] and r["N_eff"] >= 10 for r in rows)
    record(criteria, 3, ok, f"8 fibers agree, min N_eff {min(r['N_eff'] for r in rows)} (need 10)")


# 4 ------------------------------------------------------------------------

def test_criterion_04_frobenius_constants(criteria, default_pipe):
    c = default_pipe.frob().constants_report()
    gm = verify_gauss_manin(5, DEFAULT.N_padic)
    ok = (c["A1(0)=1"] and c["A2(0)=0"] and c["A4(0)=p^m"] and c["A3(0)!=0"]
          and all(v["ok"] for v in gm.values()))
    record(criteria, 4, ok, f"A1(0)=1, A2(0)=0, A4(0)=p, v(A3(0))={c['val A3(0)']}; "
                            "Gauss-Manin exact on 1 and pi t/x")


# 5 ------------------------------------------------------------------------

def test_criterion_05_symmetric_power_identity(criteria, default_pipe):
    rep = VerificationReport()
    for k in (1, 2):
        _identity_check(rep, default_pipe, k, required=8)
    neff = [min(c.precision["N_eff"]) for c in rep.checks]
    ok = all(c.status == PASS for c in rep.checks)
    record(criteria, 5, ok, f"k=1,2 through T^3 at the default profile, N_eff {neff} (need 8)")


# 6 ------------------------------------------------------------------------

def test_criterion_06_root_at_one(criteria, medium_pipe):
    rep = VerificationReport()
    for kappa in (-1, -3, 0):
        _t1_check(rep, medium_pipe, kappa)
    vals = [(c.name.rsplit("=", 1)[1], c.lhs, c.rhs) for c in rep.checks]
    ok = all(c.status == PASS for c in rep.checks)
    record(criteria, 6, ok, f"partial sums (kappa, ord_p, tail bound): {vals}")


# 7 ------------------------------------------------------------------------

def test_criterion_07_unit_routes(criteria, medium_pipe):
    rep = VerificationReport()
    _lunit_checks(rep, medium_pipe, required=8)
    ok = all(c.status == PASS for c in rep.checks)
    neff = [min(c.precision["N_eff"]) for c in rep.checks]
    record(criteria, 7, ok, f"kappa=0 closed form and kappa=2 Euler vs ratio agree, N_eff {neff}")


# 8 ------------------------------------------------------------------------

def test_criterion_08_kernel_dimensions(criteria):
    sample = KappaValue(3 + 5, 5, 2)
    cases = [(KappaValue(-1), 0), (KappaValue(-2), 0), (sample, 0), (KappaValue(0), 1)]
    got = []
    for kappa, want in cases:
        r = kernel_dim(kappa, 16, 16, 5)
        got.append((kappa.label(), r.dim, r.certified, want))
    ok = all(cert and d == w for _, d, cert, w in got)
    record(criteria, 8, ok, f"window 16x16 (kappa, dim, certified, expected): {got}")


# 9 ------------------------------------------------------------------------

def test_criterion_09_continuity(criteria, medium_pipe):
    rep = VerificationReport()
    _continuity_check(rep, medium_pipe)
    c = rep.checks[0]
    record(criteria, 9, c.status == PASS,
           f"kappa = 1 + 4*5^n, n=1..3: agreement digits {c.lhs} strictly increasing")


# 10 -----------------------------------------------------------------------

def _padic_oracle_mul(x, y, p, N):
    f = fmpz_poly([p] + [0] * (p - 2) + [1])
    r = (fmpz_poly(list(x)) * fmpz_poly(list(y))) % f
    c = [int(v) % p ** N for v in r.coeffs()]
    return tuple(c + [0] * (p - 1 - len(c)))


def _suite_padic(rng, n):
    p, N = 5, 10
    mod = p ** N
    for _ in range(n):
        a, b, c = ([rng.randrange(mod) for _ in range(p - 1)] for _ in range(3))
        x, y, z = (PadicElem(p, N, tuple(v)) for v in (a, b, c))
        if (x * y).coeffs != _padic_oracle_mul(a, b, p, N):
            return False
        if ((x * y) * z).coeffs != (x * (y * z)).coeffs:
            return False
        if (x * (y + z)).coeffs != (x * y + x * z).coeffs:
            return False
    return True


def _suite_theta(rng, n):
    theta = theta_coeffs(5, 400, 12)
    for _ in range(n):
        i = rng.randrange(401)
        v = omega_valuation(theta[i])
        if not (v.is_infinite or not v.exact or Fraction(v.numerator) >= theta_decay(5) * i):
            return False
    return True


def _random_laurent(rng, q):
    terms = {}
    for _ in range(rng.randrange(1, 5)):
        terms[(rng.randrange(4), rng.randrange(-3, 4))] = rng.randrange(-50, 51) or 1
    return LaurentBlock.from_terms(5, 12, q, 6, terms)


def _suite_reduce_to_V(rng, n):
    for i in range(n):
        q = 1 if i % 2 else 5
        X, Y = _random_laurent(rng, q), _random_laurent(rng, q)
        r1, r2 = reduce_to_V(X), reduce_to_V(X + d_operator(Y))
        S = max(r1.shift, r2.shift)
        a1, a2 = r1.times_pi(S), r2.times_pi(S)
        if not (a1.a.congruent(a2.a) and a1.b.congruent(a2.b)):
            return False
    return True


def _suite_commutation(rng, n, frob):
    cols = {}
    for _ in range(n):
        kappa = rng.choice([-1, -3, 2, 0])
        if kappa not in cols:
            cols[kappa] = alpha_sym_columns(kappa, frob, 8)
        terms = {(rng.randrange(4), rng.randrange(4)): rng.randrange(1, 500)
                 for _ in range(rng.randrange(1, 5))}
        blk = SymBlock.from_terms(kappa, 5, frob.A1.N, frob.A1.length, terms, "monomial")
        val, _ = commutation_residual(kappa, frob, blk, 8, 3, 3, cols=cols[kappa])
        if val is not None:
            return False
    return True


TINY = PrecisionProfile(p=5, a=1, N_padic=10, N_t=4, M_w=6, M_T=3)


def _suite_delta_q(rng, n, frob):
    for _ in range(n):
        if rng.random() < 0.5:
            kappa = KappaValue(rng.choice([-1, 1]) * rng.randrange(1, 40))
        else:
            kappa = KappaValue.parse("digits:" + ",".join(str(rng.randrange(5)) for _ in range(3)), 5)
        L, D = l_sym_inf(kappa, TINY, frob, return_det=True)
        Ds = D.series()
        Dq = OmegaSeries(5, Ds.N, Ds.data * [5 ** i for i in range(Ds.length)], Ds.prec)
        if not (Ds.congruent(L.series() * Dq) and delta_q(Ds, 5).congruent(L.series())):
            return False
    return True


def _negative_controls(frob):
    out = {}
    theta = theta_coeffs(5, 90, 14).tampered(3, PadicElem.pi(5, 14, 2))
    out["tampered theta breaks a fiber trace"] = not fiber_trace_check(5, 1, 1, theta=theta)["ok"]
    bump = OmegaSeries.constant(PadicElem.pi(5, frob.A1.N, 2), frob.A1.length).shift(2)
    bad = FrobMatrix2(frob.A1 + bump, frob.A2, frob.A3, frob.A4, level=1, p=5)
    out["perturbed Frobenius breaks the transfer equation"] = transfer_residual(bad) is not None
    blk = SymBlock.from_terms(-1, 5, frob.A1.N, frob.A1.length, {(1, 1): 1, (0, 2): 3}, "monomial")
    out["perturbed Frobenius breaks commutation"] = \
        commutation_residual(-1, bad, blk, 8, 3, 3)[0] is not None
    return out


def test_criterion_10_property_suites(criteria, frob_small):
    rng = random.Random(SEED)
    n = 100
    suites = {
        "padic ring vs oracle": _suite_padic(rng, n),
        "theta valuation bound": _suite_theta(rng, n),
        "reduce_to_V kills the image of D": _suite_reduce_to_V(rng, n),
        "beta/partial commutation": _suite_commutation(rng, n, frob_small),
        "D(T) = L(T) D(qT)": _suite_delta_q(rng, n, frob_small),
    }
    controls = _negative_controls(frob_small)
    ok = all(suites.values()) and all(controls.values())
    failed = [k for k, v in {**suites, **controls}.items() if not v]
    record(criteria, 10, ok, f"{len(suites)} suites x {n} cases (seed {SEED}), "
                             f"{len(controls)} negative controls; failing: {failed or 'none'}")


def test_summary_covers_all_criteria(criteria):
    # runs last within this module: every criterion produced a line
    assert sorted(criteria) == list(range(1, 11))
    assert SMALL.N_t < MEDIUM.N_t < DEFAULT.N_t
