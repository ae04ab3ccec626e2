"""
Command-line front end.

Every command writes one JSON document (integers as decimal strings, keys
sorted) to ``--out`` or standard output.  The ``newton`` command and
``lpoly --out`` also write a CSV of Newton points.  Exit status: 0 when every
check passes, 1 when any check fails, 2 when nothing fails but some check
could not be decided at the available precision, 3 for invalid input.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from pathlib import Path
from typing import Any

from .bessel import (FrobMatrix2, fiber_trace_check, frobenius_matrix_rel, theta_coeffs,
                     theta_decay, transfer_residual, verify_gauss_manin)
from .cache import Cache, frob_from_json, frob_to_json
from .exact import l_sym_k_coeffs, newton_bound_report, newton_polygon, proven_bound
from .padic import ConfigurationError, PadicElem, PrecisionProfile
from .series import OmegaSeries
from .sym import (KappaValue, LSeriesPadic, SymBlock, commutation_residual, fredholm_det,
                  kernel_dim, l_sym_inf, l_unit, reduced_frobenius_R)

log = logging.getLogger("klsym")

EXIT_PASS, EXIT_FAIL, EXIT_INDETERMINATE, EXIT_USAGE = 0, 1, 2, 3

PASS, FAIL, INDET = "pass", "fail", "indeterminate"


# ---------------------------------------------------------------------------
# configuration and reports

@dataclass(frozen=True)
class RunConfig:
    command: str
    profile: PrecisionProfile
    kappa: str | None = None
    k: int | None = None
    out: str | None = None
    cache: str | None = None
    seed: int = 0
    inject: str | None = None

    def to_json(self) -> dict:
        # the cache location and output path do not influence results
        return {"command": self.command, "profile": self.profile.to_json(),
                "kappa": self.kappa, "k": self.k, "seed": self.seed, "inject": self.inject}


@dataclass
class Check:
    name: str
    anchor: str
    status: str
    lhs: Any = None
    rhs: Any = None
    precision: Any = None

    def to_json(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "status": self.status,
                "lhs": _jsonable(self.lhs), "rhs": _jsonable(self.rhs),
                "precision": _jsonable(self.precision)}


@dataclass
class VerificationReport:
    checks: list[Check] = field(default_factory=list)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        log.info("%-13s %s", check.status, check.name)
        return check

    @property
    def totals(self) -> dict:
        out = {PASS: 0, FAIL: 0, INDET: 0}
        for c in self.checks:
            out[c.status] += 1
        return out

    @property
    def exit_code(self) -> int:
        t = self.totals
        if t[FAIL]:
            return EXIT_FAIL
        if t[INDET]:
            return EXIT_INDETERMINATE
        return EXIT_PASS

    def to_json(self) -> dict:
        return {"checks": [c.to_json() for c in self.checks], "totals": self.totals}


def _jsonable(x):
    if isinstance(x, PadicElem):
        return {"coeffs": [str(c) for c in x.coeffs], "prec_pi": x.prec}
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(y) for y in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# shared computations with caching

class Pipeline:
    """Frobenius matrices and L-series for one profile, memoized in memory and on disk."""

    def __init__(self, prof: PrecisionProfile, cache: Cache, inject: str | None = None):
        self.prof = prof
        self.cache = cache
        self.inject = inject
        self._frob: FrobMatrix2 | None = None
        self._lsym: dict[str, LSeriesPadic] = {}

    def frob(self) -> FrobMatrix2:
        if self._frob is None:
            prof = self.prof
            L = prof.q * prof.N_t
            key = {"kind": "frobenius", "p": prof.p, "a": prof.a, "N_padic": prof.N_padic, "L": L,
                   "U_x": prof.U_x}
            F = self.cache.fetch(key, lambda: frobenius_matrix_rel(prof.p, prof.a, L, prof.N_padic,
                                                                   U_x=prof.U_x),
                                 frob_to_json, frob_from_json)
            if self.inject == "frobenius":
                F = _perturbed(F)
            self._frob = F
        return self._frob

    def lsym(self, kappa: KappaValue) -> LSeriesPadic:
        label = kappa.label()
        if label not in self._lsym:
            if self.inject == "frobenius":
                self._lsym[label] = l_sym_inf(kappa, self.prof, self.frob())
            else:
                prof = self.prof
                key = {"kind": "lsyminf", "kappa": kappa.to_json(), **prof.to_json()}
                self._lsym[label] = self.cache.fetch(
                    key, lambda: l_sym_inf(kappa, prof, self.frob()), _lseries_to_json,
                    _lseries_from_json)
        return self._lsym[label]


def _perturbed(F: FrobMatrix2) -> FrobMatrix2:
    """Fault injection: add ``pi^2 t^2`` to ``A1``."""
    bump = OmegaSeries.constant(PadicElem.pi(F.p, F.A1.N, 2), F.A1.length).shift(2)
    return FrobMatrix2(F.A1 + bump, F.A2, F.A3, F.A4, level=F.level, p=F.p, meta=dict(F.meta))


def _lseries_to_json(L: LSeriesPadic) -> dict:
    return {"coeffs": [c.to_json() for c in L.coeffs], "n_eff": L.n_eff, "meta": L.meta}


def _lseries_from_json(obj: dict) -> LSeriesPadic:
    return LSeriesPadic([PadicElem.from_json(c) for c in obj["coeffs"]],
                        [int(n) for n in obj["n_eff"]], dict(obj["meta"]))


def _lseries_output(L: LSeriesPadic, p: int) -> dict:
    body = L.to_json()
    body["newton_points"] = _newton_points(L, p)
    return body


def _coeff_ord(c: PadicElem, neff: int) -> tuple[Fraction | None, bool]:
    """``(ord_p, exact)`` of a coefficient known to ``neff`` digits."""
    v = c.with_prec((c.p - 1) * neff).valuation()
    if v.numerator is None:
        return None, True
    return Fraction(v.numerator, c.p - 1), v.exact


def _newton_points(L: LSeriesPadic, p: int) -> list[dict]:
    pts = []
    for m, (c, ne) in enumerate(zip(L.coeffs, L.n_eff)):
        val, exact = _coeff_ord(c, ne)
        pts.append({"m": m, "ord_p": None if val is None else str(val), "exact": exact, "Neff": ne})
    return pts


# ---------------------------------------------------------------------------
# individual checks

def _status(agree_ok: bool, certified: int, required: int) -> str:
    if not agree_ok:
        return FAIL
    return PASS if certified >= required else INDET


def check_exact_pipeline(report: VerificationReport, prof: PrecisionProfile, seed: int) -> None:
    for k in (1, 2, 3, 4):
        try:
            lp = l_sym_k_coeffs(prof.p, prof.a, k, prof.M_T, seed=seed)
        except ArithmeticError as exc:
            report.add(Check(f"integrality k={k}", "integral L-polynomial", FAIL, str(exc)))
            continue
        report.add(Check(f"integrality k={k}", "integral L-polynomial", PASS,
                         list(lp.coeffs), None, "exact"))
        rows = newton_bound_report(lp.coeffs, prof.p, prof.a)
        bad = [r for r in rows if r["status"] != PASS]
        report.add(Check(f"Newton bound k={k}", "ord_q c_m >= (1-1/(p-1)) m(m-1)",
                         FAIL if bad else PASS, [r["ord_q"] for r in rows],
                         [r["bound"] for r in rows], "exact"))


def check_fiber_traces(report: VerificationReport, prof: PrecisionProfile, inject: str | None,
                       required: int = 10) -> None:
    # the fiber check needs only ~required digits; cap its working precision
    N = min(prof.N_padic, required + 2)
    theta = None
    if inject == "theta":
        dec = theta_decay(prof.p)
        I = int(ceil(((prof.p - 1) * N + 1) / dec)) + 4 * prof.p
        theta = theta_coeffs(prof.p, I, N + 2).tampered(1, PadicElem.one(prof.p, N + 2))
    for tbar in range(1, prof.p):
        for m in (1, 2):
            r = fiber_trace_check(prof.p, tbar, m, N_padic=N, theta=theta)
            report.add(Check(f"fiber trace t={tbar} m={m}", "trace formula on one fiber",
                             _status(r["ok"], r["N_eff"], required), r["lhs"], r["rhs"],
                             {"N_eff": r["N_eff"], "agreement": r["agreement_digits"]}))


def check_frobenius(report: VerificationReport, pipe: Pipeline) -> None:
    F = pipe.frob()
    c = F.constants_report()
    ok = c["A1(0)=1"] and c["A2(0)=0"] and c["A4(0)=p^m"] and c["A3(0)!=0"]
    report.add(Check("Frobenius constants", "constant terms of the Frobenius matrix",
                     PASS if ok else FAIL, {k: v for k, v in c.items() if k != "prec"}, None,
                     {"prec_pi": c["prec"]}))
    res = transfer_residual(F)
    report.add(Check("transfer equation", "Frobenius intertwines the connection",
                     PASS if res is None else FAIL, "vanishes" if res is None else f"valuation {res}",
                     None, {"prec_pi": F.prec}))
    gm = verify_gauss_manin(pipe.prof.p, pipe.prof.N_padic)
    ok = all(v["ok"] for v in gm.values())
    report.add(Check("Gauss-Manin", "connection on the basis", PASS if ok else FAIL,
                     {k: [v["a"][0], v["a"][1]] for k, v in gm.items()},
                     {k: [v["b"][0], v["b"][1]] for k, v in gm.items()}, "exact"))


def _identity_check(report: VerificationReport, pipe: Pipeline, k: int, required: int) -> None:
    prof = pipe.prof
    exact = l_sym_k_coeffs(prof.p, prof.a, k, prof.M_T).coeffs
    A = pipe.lsym(KappaValue(k))
    B = pipe.lsym(KappaValue(-(k + 2)))
    q = prof.q
    Bs = B.series()
    sc = q ** (k + 1)
    Bq = OmegaSeries(Bs.p, Bs.N, Bs.data * [sc ** i for i in range(Bs.length)], Bs.prec)
    R = A.series() * Bq.inverse()
    top = min(3, prof.M_T)
    ok, neff_all, lhs, rhs = True, [], [], []
    for m in range(top + 1):
        neff = min(A.n_eff[: m + 1] + [x + m * (k + 1) * prof.a for x in B.n_eff[: m + 1]])
        diff = (R[m] - int(exact[m])).with_prec((prof.p - 1) * neff).valuation()
        ok = ok and (diff.is_infinite or not diff.exact)
        neff_all.append(neff)
        lhs.append(exact[m])
        rhs.append(R[m])
    report.add(Check(f"Sym^{k} identity", "finite symmetric power from the infinite one",
                     _status(ok, min(neff_all), required), lhs, rhs, {"N_eff": neff_all}))


def _commutation_check(report: VerificationReport, pipe: Pipeline, kappa: int, seed: int) -> None:
    prof = pipe.prof
    F = pipe.frob()
    rng = random.Random(seed)
    N = F.A1.N
    terms = {(rng.randrange(3), rng.randrange(3)): rng.randrange(1, prof.p ** 3) for _ in range(4)}
    blk = SymBlock.from_terms(kappa, prof.p, N, F.A1.length, terms, basis="monomial")
    M_w = min(prof.M_w, 8)
    val, prec = commutation_residual(kappa, F, blk, M_w, min(prof.N_t, 3), 3)
    status = PASS if val is None else FAIL
    report.add(Check(f"commutation kappa={kappa}", "q d beta = beta d", status,
                     "vanishes" if val is None else f"valuation {Fraction(val, prof.p - 1)}", None,
                     {"prec_pi": prec}))


def _t1_check(report: VerificationReport, pipe: Pipeline, kappa: int) -> None:
    prof = pipe.prof
    L = pipe.lsym(KappaValue(kappa))
    s = L.series()
    label = str(kappa)
    if kappa == 0:
        s = s - s.shift(1).scale_int(prof.q)
        label = "0-adjusted"
    total = PadicElem.zero(prof.p, s.N)
    for m in range(prof.M_T + 1):
        total = total + s[m]
    M1 = prof.M_T + 1
    tail = proven_bound(prof.p, M1) * prof.a
    cert = Fraction(min(L.n_eff))
    target = min(tail, cert)
    val, exact = _coeff_ord(total, int(cert))
    holds = val is None or val >= target or not exact
    if not holds:
        status = FAIL
    else:
        status = PASS if cert >= tail else INDET
    report.add(Check(f"T=1 root kappa={label}", "L(1) = 0",
                     status, None if val is None else str(val), str(tail),
                     {"N_eff": int(cert)}))


def _lunit_checks(report: VerificationReport, pipe: Pipeline, required: int) -> None:
    prof = pipe.prof
    q = prof.q
    # kappa = 0 against (1 - T)/(1 - qT)
    A = pipe.lsym(KappaValue(0))
    B = pipe.lsym(KappaValue(-2))
    ratio = _ratio(A, B, q)
    target = [1] + [q ** m - q ** (m - 1) for m in range(1, prof.M_T + 1)]
    ok, neffs = True, []
    for m in range(prof.M_T + 1):
        ne = ratio.n_eff[m]
        d = (ratio.coeffs[m] - target[m]).with_prec((prof.p - 1) * ne).valuation()
        ok = ok and (d.is_infinite or not d.exact)
        neffs.append(ne)
    report.add(Check("unit L-function kappa=0", "(1-T)/(1-qT)", _status(ok, min(neffs), required),
                     ratio.coeffs, target, {"N_eff": neffs}))
    # kappa = 2: Euler product against the determinant ratio
    R = _ratio(pipe.lsym(KappaValue(2)), pipe.lsym(KappaValue(0)), q)
    E = l_unit(2, prof, route="euler")
    top = min(3, prof.M_T)
    ok, neffs = True, []
    for m in range(top + 1):
        ne = min(R.n_eff[m], E.n_eff[m])
        d = (R.coeffs[m] - E.coeffs[m]).with_prec((prof.p - 1) * ne).valuation()
        ok = ok and (d.is_infinite or not d.exact)
        neffs.append(ne)
    report.add(Check("unit L-function kappa=2 routes", "Euler product against determinant ratio",
                     _status(ok, min(neffs), required), R.coeffs[: top + 1], E.coeffs[: top + 1],
                     {"N_eff": neffs}))


def _ratio(A: LSeriesPadic, B: LSeriesPadic, q: int) -> LSeriesPadic:
    Bs = B.series()
    Bq = OmegaSeries(Bs.p, Bs.N, Bs.data * [q ** i for i in range(Bs.length)], Bs.prec)
    R = A.series() * Bq.inverse()
    neff = [min(A.n_eff[: m + 1] + [x + m for x in B.n_eff[: m + 1]]) for m in range(R.length)]
    return LSeriesPadic([R[m] for m in range(R.length)], neff)


def _continuity_check(report: VerificationReport, pipe: Pipeline) -> None:
    prof = pipe.prof
    p = prof.p
    base = pipe.lsym(KappaValue(1))
    agreements, capped = [], False
    for n in (1, 2, 3):
        Ln = pipe.lsym(KappaValue(1 + (p - 1) * p ** n))
        worst = None
        for m in range(1, prof.M_T + 1):
            ne = min(base.n_eff[m], Ln.n_eff[m])
            v = (base.coeffs[m] - Ln.coeffs[m]).with_prec((p - 1) * ne).valuation()
            if v.is_infinite or not v.exact:
                a, capped = ne, True
            else:
                a = Fraction(v.numerator, p - 1)
            worst = a if worst is None else min(worst, a)
        agreements.append(worst)
    increasing = all(x < y for x, y in zip(agreements, agreements[1:]))
    status = PASS if increasing else (INDET if capped else FAIL)
    report.add(Check("continuity in kappa", "1 + (p-1) p^n tends to 1", status,
                     [str(a) for a in agreements], None, {"N_eff": min(base.n_eff)}))


def _kernel_checks(report: VerificationReport, prof: PrecisionProfile, window: int = 16) -> None:
    sample = KappaValue(3 + prof.p, prof.p, 2)
    for kappa, want in ((KappaValue(-1), 0), (KappaValue(-2), 0), (sample, 0), (KappaValue(0), 1)):
        r = kernel_dim(kappa, window, window, prof.p)
        if not r.certified:
            status = INDET
        else:
            status = PASS if r.dim == want else FAIL
        report.add(Check(f"kernel dimension kappa={kappa.label()}", "zeroth homology",
                         status, r.dim, want, {"upper_bounds": list(r.upper_bounds)}))


def _cohomology_check(report: VerificationReport, pipe: Pipeline, kappa: int,
                      required: int = 8) -> None:
    prof = pipe.prof
    L = pipe.lsym(KappaValue(kappa))
    F = pipe.frob()
    N_R = max(prof.N_t - 2, 2)
    dets = [fredholm_det(reduced_frobenius_R(kappa, F, n, prof.M_w), prof.M_T)[0]
            for n in (N_R - 1, N_R)]
    D = dets[1]
    ok, neffs = True, []
    for m in range(prof.M_T + 1):
        ne = L.n_eff[m]
        v = (dets[1][m] - dets[0][m]).valuation()
        if v.exact and v.numerator is not None:
            ne = min(ne, v.numerator // (prof.p - 1))
        d = (D[m] - L.coeffs[m]).with_prec((prof.p - 1) * ne).valuation()
        ok = ok and (d.is_infinite or not d.exact)
        neffs.append(ne)
    report.add(Check(f"reduced-R determinant kappa={kappa}", "cohomological consistency",
                     _status(ok, min(neffs), required), [D[m] for m in range(prof.M_T + 1)],
                     L.coeffs, {"N_eff": neffs}))


def _sym_newton_check(report: VerificationReport, pipe: Pipeline, kappa: int) -> None:
    prof = pipe.prof
    L = pipe.lsym(KappaValue(kappa))
    pts = [_coeff_ord(c, ne) for c, ne in zip(L.coeffs, L.n_eff)]
    rows = newton_bound_report([(v * prof.a if v is not None else None, e) for v, e in pts],
                               prof.p, prof.a)
    statuses = {r["status"] for r in rows}
    status = FAIL if FAIL in statuses else (INDET if INDET in statuses else PASS)
    report.add(Check(f"Newton bound kappa={kappa}", "ord_q c_m >= (1-1/(p-1)) m(m-1)", status,
                     [r["ord_q"] for r in rows], [r["bound"] for r in rows], {"N_eff": L.n_eff}))


def run_verify_all(cfg: RunConfig, cache: Cache | None = None) -> VerificationReport:
    prof = cfg.profile
    pipe = Pipeline(prof, cache or Cache(None), cfg.inject)
    report = VerificationReport()
    check_exact_pipeline(report, prof, cfg.seed)
    check_fiber_traces(report, prof, cfg.inject)
    check_frobenius(report, pipe)
    for k in (1, 2):
        _identity_check(report, pipe, k, required=8)
    _commutation_check(report, pipe, -1, cfg.seed)
    for kappa in (-1, -3, 0):
        _t1_check(report, pipe, kappa)
    for kappa in (-1, -3):
        _sym_newton_check(report, pipe, kappa)
    _lunit_checks(report, pipe, required=8)
    _kernel_checks(report, prof)
    _cohomology_check(report, pipe, -1)
    _continuity_check(report, pipe)
    return report


def run_verify_identity(cfg: RunConfig, cache: Cache | None = None) -> VerificationReport:
    pipe = Pipeline(cfg.profile, cache or Cache(None), cfg.inject)
    report = VerificationReport()
    _identity_check(report, pipe, cfg.k, required=8)
    _commutation_check(report, pipe, cfg.k, cfg.seed)
    _commutation_check(report, pipe, -(cfg.k + 2), cfg.seed)
    return report


# ---------------------------------------------------------------------------
# commands

def _emit(cfg: RunConfig, body: dict) -> None:
    body = {"config": cfg.to_json(), **body}
    text = _dump(body)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_lpoly(cfg: RunConfig, cache: Cache) -> int:
    prof = cfg.profile
    lp = l_sym_k_coeffs(prof.p, prof.a, cfg.k, prof.M_T, seed=cfg.seed)
    rows = newton_bound_report(lp.coeffs, prof.p, prof.a)
    poly = newton_polygon(lp.coeffs, prof.p, prof.a)
    failed = any(r["status"] == FAIL for r in rows)
    _emit(cfg, {"lpoly": lp.to_json(), "Neff": "exact", "bound_report": rows,
                "newton_vertices": [[m, str(v)] for m, v in poly.vertices],
                "status": FAIL if failed else PASS})
    if cfg.out:
        Path(cfg.out).with_suffix(".csv").write_text(poly.to_csv())
    return EXIT_FAIL if failed else EXIT_PASS


def cmd_newton(cfg: RunConfig, cache: Cache) -> int:
    prof = cfg.profile
    lp = l_sym_k_coeffs(prof.p, prof.a, cfg.k, prof.M_T, seed=cfg.seed)
    csv = newton_polygon(lp.coeffs, prof.p, prof.a).to_csv()
    if cfg.out:
        Path(cfg.out).write_text(csv)
    else:
        sys.stdout.write(csv)
    return EXIT_PASS


def cmd_frobmat(cfg: RunConfig, cache: Cache) -> int:
    pipe = Pipeline(cfg.profile, cache, cfg.inject)
    F = pipe.frob()
    p = cfg.profile.p
    series = {}
    for name, s in zip(("A1", "A2", "A3", "A4"), (F.A1, F.A2, F.A3, F.A4)):
        series[name] = [{"digits": [str(c) for c in s[n].coeffs], "Neff": s.prec // (p - 1)}
                        for n in range(min(s.length, cfg.profile.N_t + 1))]
    consts = F.constants_report()
    res = transfer_residual(F)
    ok = consts["A1(0)=1"] and consts["A2(0)=0"] and consts["A4(0)=p^m"] and \
        consts["A3(0)!=0"] and res is None
    _emit(cfg, {"frobenius": series, "constants": _jsonable(consts),
                "transfer_residual": "vanishes" if res is None else str(res),
                "meta": _jsonable(F.meta), "status": PASS if ok else FAIL})
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_lsyminf(cfg: RunConfig, cache: Cache) -> int:
    pipe = Pipeline(cfg.profile, cache, cfg.inject)
    kappa = KappaValue.parse(cfg.kappa, cfg.profile.p)
    L = pipe.lsym(kappa)
    _emit(cfg, {"kappa": kappa.to_json(), **_lseries_output(L, cfg.profile.p)})
    return EXIT_PASS


def cmd_lunit(cfg: RunConfig, cache: Cache) -> int:
    prof = cfg.profile
    pipe = Pipeline(prof, cache, cfg.inject)
    kappa = KappaValue.parse(cfg.kappa, prof.p)
    R = _ratio(pipe.lsym(kappa), pipe.lsym(kappa.shifted(-2)), prof.q)
    E = l_unit(kappa, prof, route="euler")
    rows, ok, worst = [], True, None
    for m in range(prof.M_T + 1):
        ne = min(R.n_eff[m], E.n_eff[m])
        d = (R.coeffs[m] - E.coeffs[m]).with_prec((prof.p - 1) * ne).valuation()
        agree = d.is_infinite or not d.exact
        ok = ok and agree
        worst = ne if worst is None else min(worst, ne)
        rows.append({"m": m, "agree": agree, "Neff": ne})
    _emit(cfg, {"kappa": kappa.to_json(), "ratio": _lseries_output(R, prof.p),
                "euler": _lseries_output(E, prof.p), "comparison": rows,
                "status": PASS if ok else FAIL})
    return EXIT_PASS if ok else EXIT_FAIL


def _report_command(fn):
    def run(cfg: RunConfig, cache: Cache) -> int:
        report = fn(cfg, cache)
        _emit(cfg, {"report": report.to_json()})
        return report.exit_code
    return run


COMMANDS = {
    "lpoly": cmd_lpoly,
    "newton": cmd_newton,
    "frobmat": cmd_frobmat,
    "lsyminf": cmd_lsyminf,
    "lunit": cmd_lunit,
    "verify-identity": _report_command(run_verify_identity),
    "verify-all": _report_command(run_verify_all),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="klsym", description="Kloosterman symmetric-power L-functions.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    defaults = PrecisionProfile()
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--p", type=int, default=defaults.p)
        sp.add_argument("--a", "--level", dest="a", type=int, default=defaults.a)
        sp.add_argument("--k", type=int, default=None)
        sp.add_argument("--kappa", type=str, default=None,
                        help='integer or "digits:d0,d1,..." (base-p digits, lowest first)')
        sp.add_argument("--terms", "--Tdeg", dest="M_T", type=int, default=defaults.M_T)
        sp.add_argument("--tdeg", dest="N_t", type=int, default=defaults.N_t)
        sp.add_argument("--wdeg", dest="M_w", type=int, default=defaults.M_w)
        sp.add_argument("--prec", dest="N_padic", type=int, default=defaults.N_padic)
        sp.add_argument("--out", type=str, default=None)
        sp.add_argument("--cache", type=str, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--inject", choices=("theta", "frobenius"), default=None,
                        help=argparse.SUPPRESS)
    return parser


def _normalize_argv(argv: list[str]) -> list[str]:
    """Accept ``--kappa -7`` and ``--kappa -- -7`` for negative values."""
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in ("--kappa", "--k") and i + 1 < len(argv):
            j = i + 2 if argv[i + 1] == "--" and i + 2 < len(argv) else i + 1
            out.append(f"{a}={argv[j]}")
            i = j + 1
            continue
        out.append(a)
        i += 1
    return out


def parse_config(argv: list[str]) -> tuple[RunConfig, bool]:
    args = build_parser().parse_args(_normalize_argv(argv))
    prof = PrecisionProfile(p=args.p, a=args.a, N_padic=args.N_padic, N_t=args.N_t,
                            M_w=args.M_w, M_T=args.M_T)
    cache_dir = os.environ.get("LAB_CACHE_DIR") or args.cache
    if args.command in ("lpoly", "newton", "verify-identity") and (args.k is None or args.k < 1):
        raise ConfigurationError(f"{args.command} needs --k >= 1")
    if args.command in ("lsyminf", "lunit"):
        if args.kappa is None:
            raise ConfigurationError(f"{args.command} needs --kappa")
        KappaValue.parse(args.kappa, prof.p)
    cfg = RunConfig(args.command, prof, args.kappa, args.k, args.out, cache_dir, args.seed,
                    args.inject)
    return cfg, args.verbose


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, verbose = parse_config(argv)
    except (ConfigurationError, ValueError) as exc:
        sys.stderr.write(f"klsym: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return COMMANDS[cfg.command](cfg, Cache(cfg.cache))


if __name__ == "__main__":
    sys.exit(main())
