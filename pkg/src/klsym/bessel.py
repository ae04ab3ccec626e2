"""
Relative Bessel cohomology of the Kloosterman family over ``Omega``.

Elements of the Laurent spaces are stored as :class:`LaurentBlock` objects:
row ``u`` is a truncated ``t``-series ``A_u(t)`` standing for
``A_u(t) t^(q m(u)) x^u`` with ``m(u) = max(-u, 0)``.  The basis of the rank-two
quotient is ``{1, pi t^q / x}``; in block coordinates ``pi t^q/x = pi * e_{-1}``.

The splitting function ``theta(z) = exp(pi (z - z^p))`` is computed exactly:
``pi^i / i!`` is integral in ``Omega``, so no denominators ever appear.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import ceil, factorial

import numpy as np

from .exact import CycElem, FqElem, FqField, kloosterman_sum
from .padic import (ConfigurationError, PadicElem, PrecisionError, hensel_quadratic_unit_root,
                    omega_valuation, ord_p, teichmuller)
from .series import OmegaSeries

__all__ = [
    "SplittingFunction",
    "theta_coeffs",
    "theta_decay",
    "LaurentBlock",
    "VPair",
    "FrobMatrix2",
    "ConnectionMatrix",
    "psi_x",
    "d_operator",
    "frobenius_apply",
    "reduce_to_V",
    "gauss_manin_partial",
    "gauss_manin_matrix",
    "verify_gauss_manin",
    "frobenius_matrix_rel",
    "transfer_residual",
    "embed_cyclotomic",
    "fiber_trace_check",
    "unit_root",
    "storage_digits",
]


def theta_decay(p: int) -> Fraction:
    """Lower bound for ``v(theta_i)/i`` in pi-units: ``(p-1)^2/p^2``."""
    return Fraction((p - 1) ** 2, p * p)


def _pi_pow_over_fact(p: int, i: int, mod: int) -> tuple[int, int]:
    """``pi^i / i!`` as (coordinate index, integer value mod ``mod``)."""
    k, r = divmod(i, p - 1)
    f = factorial(i)
    v = ord_p(f, p)
    unit = f // p ** v
    # pi^i = (-p)^k pi^r and k >= v, so the quotient is integral
    return r, (-1) ** k * p ** (k - v) * pow(unit, -1, mod) % mod


@dataclass(frozen=True)
class SplittingFunction:
    p: int
    N: int
    coeffs: tuple[PadicElem, ...]

    @property
    def I(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, i: int) -> PadicElem:
        return self.coeffs[i]

    def series(self) -> OmegaSeries:
        return OmegaSeries.from_elems(list(self.coeffs))

    def tail_bound(self) -> int:
        """pi-adic valuation guaranteed for every omitted coefficient ``theta_i``, ``i > I``."""
        return ceil(theta_decay(self.p) * (self.I + 1))

    def at_one(self) -> PadicElem:
        """``theta(1)``, a primitive ``p``-th root of unity, with certified tail."""
        s = PadicElem.zero(self.p, self.N)
        for c in self.coeffs:
            s = s + c
        return s.with_prec(self.tail_bound())

    def tampered(self, i: int, delta: PadicElem) -> "SplittingFunction":
        """A copy with ``theta_i`` perturbed (negative controls)."""
        cs = list(self.coeffs)
        cs[i] = cs[i] + delta
        return SplittingFunction(self.p, self.N, tuple(cs))


@lru_cache(maxsize=32)
def theta_coeffs(p: int, I: int, N: int) -> SplittingFunction:
    """
    ``theta_0 .. theta_I`` of ``exp(pi z) exp(-pi z^p)``, each exact modulo ``p^N``.
    """
    if N < 1:
        raise PrecisionError("need at least one p-adic digit")
    mod = p ** N
    d = p - 1
    e1 = np.empty((d, I + 1), dtype=object)
    e1.fill(0)
    e2 = np.empty((d, I + 1), dtype=object)
    e2.fill(0)
    for i in range(I + 1):
        r, c = _pi_pow_over_fact(p, i, mod)
        e1[r, i] = c
    for j in range(I // p + 1):
        r, c = _pi_pow_over_fact(p, j, mod)
        e2[r, p * j] = (-1) ** j * c
    th = OmegaSeries(p, N, e1) * OmegaSeries(p, N, e2)
    coeffs = tuple(th[i] for i in range(I + 1))
    dec = theta_decay(p)
    for i, c in enumerate(coeffs):
        v = omega_valuation(c)
        if v.exact and v.numerator is not None and v.numerator < dec * i:
            raise ArithmeticError(f"theta_{i} violates the valuation bound")
    return SplittingFunction(p, N, coeffs)


def storage_digits(p: int, N_target: int, U: int, extra: int = 2) -> int:
    """Storage digits so that ``U`` divisions by ``pi`` still leave ``N_target`` digits."""
    return N_target + ceil((U + 1) / (p - 1)) + extra


# ---------------------------------------------------------------------------
# Laurent blocks

class LaurentBlock:
    """
    Truncated element of ``K_q``: rows ``u -> A_u(t)`` (all of length ``L``).

    ``tail`` is a pi-adic lower bound for the effect of everything that was
    discarded when the block was produced (``None`` if nothing was discarded).
    """

    def __init__(self, p: int, N: int, q: int, L: int, rows: dict[int, OmegaSeries] | None = None,
                 tail: int | None = None):
        self.p, self.N, self.q, self.L = p, N, q, L
        self.rows: dict[int, OmegaSeries] = {}
        self.tail = tail
        for u, s in (rows or {}).items():
            self.rows[u] = s.resized(L)

    @classmethod
    def from_terms(cls, p: int, N: int, q: int, L: int, terms: dict) -> "LaurentBlock":
        """``terms[(n, u)] = c`` means ``c t^n t^(q m(u)) x^u``."""
        blk = cls(p, N, q, L)
        for (n, u), c in terms.items():
            if not 0 <= n < L:
                raise ConfigurationError("t-degree outside the window")
            blk.add_term(n, u, c)
        return blk

    def add_term(self, n: int, u: int, c):
        if isinstance(c, int):
            c = PadicElem.from_int(self.p, self.N, c)
        row = self.row(u)
        data = row.data.copy()
        for j, x in enumerate(c.coeffs):
            data[j, n] += x
        self.rows[u] = OmegaSeries(self.p, self.N, data, min(row.prec, c.prec))

    def row(self, u: int) -> OmegaSeries:
        s = self.rows.get(u)
        return s if s is not None else OmegaSeries.zeros(self.p, self.N, self.L)

    def coeff(self, n: int, u: int) -> PadicElem:
        return self.row(u)[n]

    @property
    def U(self) -> int:
        nz = [abs(u) for u, s in self.rows.items() if not s.is_zero()]
        return max(nz, default=0)

    def copy(self) -> "LaurentBlock":
        return LaurentBlock(self.p, self.N, self.q, self.L,
                            {u: s.copy() for u, s in self.rows.items()}, self.tail)

    def __add__(self, other: "LaurentBlock") -> "LaurentBlock":
        if (self.q, self.L) != (other.q, other.L):
            raise ConfigurationError("blocks live in different spaces")
        out = self.copy()
        for u, s in other.rows.items():
            out.rows[u] = out.row(u) + s
        out.tail = _min_opt(self.tail, other.tail)
        return out

    def __neg__(self):
        return LaurentBlock(self.p, self.N, self.q, self.L, {u: -s for u, s in self.rows.items()},
                            self.tail)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LaurentBlock":
        return LaurentBlock(self.p, self.N, self.q, self.L, {u: s * c for u, s in self.rows.items()},
                            self.tail)

    def agreement(self, other: "LaurentBlock", L: int | None = None) -> int | None:
        """Smallest pi-adic valuation of ``self - other`` on the first ``L`` t-degrees."""
        diff = self - other
        best = None
        for s in diff.rows.values():
            s = s if L is None else s.resized(L)
            v = s.valuation()
            if v.is_infinite:
                continue
            best = v.numerator if best is None else min(best, v.numerator)
        return best

    def __repr__(self):
        return f"LaurentBlock(q={self.q}, L={self.L}, rows={sorted(self.rows)})"


def _min_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def psi_x(blk: LaurentBlock) -> LaurentBlock:
    """Keep rows with ``p | u`` and re-index them as ``u/p`` (a block of ``K_(pq)``)."""
    p = blk.p
    rows = {u // p: s for u, s in blk.rows.items() if u % p == 0}
    return LaurentBlock(p, blk.N, blk.q * p, blk.L, rows, blk.tail)


def d_operator(blk: LaurentBlock) -> LaurentBlock:
    """
    ``D = x d/dx + pi (x - t^q/x)`` in block coordinates:
    ``D e_u = u e_u + pi t^(q[u<0]) e_(u+1) - pi t^(q[u>=1]) e_(u-1)``.
    """
    p, q = blk.p, blk.q
    out = LaurentBlock(p, blk.N, q, blk.L, tail=blk.tail)
    pi = PadicElem.pi(p, blk.N)
    for u, s in blk.rows.items():
        out.rows[u] = out.row(u) + s.scale_int(u)
        up = s * pi
        out.rows[u + 1] = out.row(u + 1) + (up.shift(q) if u < 0 else up)
        out.rows[u - 1] = out.row(u - 1) - (up.shift(q) if u >= 1 else up)
    return out


def gauss_manin_partial(blk: LaurentBlock) -> LaurentBlock:
    """
    ``t d/dt + pi t/x`` on a block of ``K_1``:
    ``e_u -> (n + m(u)) e_u + pi t^[u>=1] e_(u-1)`` on ``t^n e_u``.
    """
    if blk.q != 1:
        raise ConfigurationError("the parameter derivative is implemented on K_1")
    p = blk.p
    out = LaurentBlock(p, blk.N, 1, blk.L, tail=blk.tail)
    pi = PadicElem.pi(p, blk.N)
    for u, s in blk.rows.items():
        mu = max(-u, 0)
        out.rows[u] = out.row(u) + s.t_derivative() + s.scale_int(mu)
        down = s * pi
        out.rows[u - 1] = out.row(u - 1) + (down.shift(1) if u >= 1 else down)
    return out


# ---------------------------------------------------------------------------
# Frobenius

def _kernel_series(theta: SplittingFunction, q: int, u: int, v: int,
                   L: int) -> tuple[OmegaSeries, bool]:
    """
    Series ``G(t)`` such that the ``x^(p v)`` part of ``theta(x) theta(t^q/x) t^(q m(u)) x^u``
    equals ``G(t) t^(pq m(v)) x^(p v)`` below ``t^L``.  The flag reports whether
    the theta table ran out before the ``t``-window did.
    """
    p = theta.p
    delta = p * v - u
    j = max(0, -delta)
    base = max(-u, 0) - p * max(-v, 0)
    data = np.empty((p - 1, L), dtype=object)
    data.fill(0)
    I = theta.I
    while True:
        e = q * (j + base)
        if e >= L:
            exhausted = False
            break
        if j + delta > I or j > I:
            exhausted = True
            break
        if e >= 0:
            prod = theta[j + delta] * theta[j]
            for r, c in enumerate(prod.coeffs):
                data[r, e] += c
        j += 1
    return OmegaSeries(p, theta.N, data), exhausted


def frobenius_apply(blk: LaurentBlock, theta: SplittingFunction, U_out: int,
                    L_out: int | None = None) -> LaurentBlock:
    """
    ``psi_x(F(t^q, x) * blk)`` with ``F(t, x) = theta(x) theta(t/x)``, keeping
    target rows ``|v| <= U_out`` and ``t``-degrees below ``L_out``.

    The result carries a tail bound: the smallest valuation of a discarded
    contribution (omitted rows or theta coefficients beyond ``theta.I``)
    after the ``|v|`` divisions by ``pi`` that reducing such a row could cost.
    """
    p, q = blk.p, blk.q
    L_out = blk.L if L_out is None else L_out
    out = LaurentBlock(p, blk.N, p * q, L_out)
    dec = theta_decay(p)
    tail = blk.tail
    for u, s in blk.rows.items():
        if s.is_zero():
            continue
        vs = s.valuation()
        v0 = vs.numerator if vs.numerator is not None else s.prec
        for v in range(-U_out, U_out + 1):
            G, exhausted = _kernel_series(theta, q, u, v, L_out)
            out.rows[v] = out.row(v) + s.mul(G, L_out)
            if exhausted:
                # omitted products contain some theta_i with i > I
                tail = _min_opt(tail, v0 + ceil(dec * (theta.I + 1)) - abs(v))
        for v in (-U_out - 1, U_out + 1):
            # every product theta_i theta_j landing in row v has i + j >= |p v - u|
            tail = _min_opt(tail, v0 + ceil(dec * abs(p * v - u)) - abs(v))
    out.tail = tail
    return out


# ---------------------------------------------------------------------------
# reduction to the rank-two quotient

@dataclass
class VPair:
    """
    Coordinates ``(a, b) / pi^shift`` of a class in the basis ``{1, pi t^q/x}``.
    """

    a: OmegaSeries
    b: OmegaSeries
    q: int
    shift: int = 0

    @property
    def prec(self) -> int:
        """Absolute pi-adic precision of the (unshifted) coordinates."""
        return min(self.a.prec, self.b.prec) - self.shift

    def integral(self) -> tuple[OmegaSeries, OmegaSeries]:
        """The coordinates themselves; fails unless they are integral."""
        a, b = self.a, self.b
        for _ in range(self.shift):
            a, b = a.div_pi(), b.div_pi()
        return a, b

    def times_pi(self, k: int) -> "VPair":
        """The pair multiplied by ``pi^k``."""
        if k <= self.shift:
            return VPair(self.a, self.b, self.q, self.shift - k)
        extra = k - self.shift
        return VPair(self.a.mul_pi(extra), self.b.mul_pi(extra), self.q, 0)


def reduce_to_V(blk: LaurentBlock, shift: int | None = None) -> VPair:
    """
    Reduce modulo the image of ``D``:

    * ``e_(u+1) = -(u/pi) e_u + t^q e_(u-1)`` for ``u >= 1``,
    * ``e_1 = e_(-1)``,
    * ``e_(-(v+1)) = -(v/pi) e_(-v) + t^q e_(-(v-1))`` for ``v >= 1``,

    eliminating rows from the outside in, positive side first.  What remains is
    ``A_0 e_0 + A_(-1) e_(-1)``, i.e. ``(A_0, A_(-1)/pi)`` in the basis
    ``{1, pi t^q/x}``.  A block whose coordinates are not integral is first
    multiplied by ``pi^shift`` (the default shift is the smallest that works).
    """
    p, q, L = blk.p, blk.q, blk.L
    rows = {u: s for u, s in blk.rows.items() if not s.is_zero()}
    if not rows:
        z = OmegaSeries.zeros(p, blk.N, L)
        return VPair(z, z.copy(), q, 0)
    if shift is None:
        need = 0
        for u, s in rows.items():
            v = s.valuation()
            vn = v.numerator if v.exact else s.prec
            need = max(need, abs(u) - vn if u != 0 else 0)
        shift = max(0, need)
    if shift:
        N = blk.N + ceil(shift / (p - 1))
        rows = {u: OmegaSeries(p, N, s.data, s.prec).mul_pi(shift) for u, s in rows.items()}
    else:
        N = blk.N

    def get(u):
        return rows.get(u) if u in rows else OmegaSeries.zeros(p, N, L)

    U = max(abs(u) for u in rows)
    for top in range(U, 1, -1):
        u = top - 1
        src = rows.pop(top, None)
        if src is not None:
            rows[u] = get(u) + src.div_pi().scale_int(-u)
            rows[u - 1] = get(u - 1) + src.shift(q)
    src = rows.pop(1, None)
    if src is not None:
        rows[-1] = get(-1) + src
    for top in range(U, 1, -1):
        v = top - 1
        src = rows.pop(-top, None)
        if src is not None:
            rows[-v] = get(-v) + src.div_pi().scale_int(-v)
            rows[-(v - 1)] = get(-(v - 1)) + src.shift(q)
    a = get(0)
    b = get(-1).div_pi()
    if blk.tail is not None:
        a, b = a.with_prec(blk.tail + shift), b.with_prec(blk.tail + shift)
    vp = VPair(a, b, q, shift)
    return _normalize(vp)


def _normalize(vp: VPair) -> VPair:
    a, b, shift = vp.a, vp.b, vp.shift
    while shift > 0:
        va, vb = a.valuation(), b.valuation()
        ok = all((v.numerator is None) or v.numerator >= 1 for v in (va, vb))
        if not ok:
            break
        a, b, shift = a.div_pi(), b.div_pi(), shift - 1
    return VPair(a, b, vp.q, shift)


def vpair_to_block(a: OmegaSeries, b: OmegaSeries, q: int) -> LaurentBlock:
    """The block ``a * 1 + b * (pi t^q / x)``."""
    p, N = a.p, a.N
    L = max(a.length, b.length)
    return LaurentBlock(p, N, q, L, {0: a, -1: b.mul_pi()})


# ---------------------------------------------------------------------------
# connection

@dataclass(frozen=True)
class ConnectionMatrix:
    """``H = [[0, 1], [pi^2 t, 0]]`` in row convention: row ``i`` is the image of basis vector ``i``."""

    p: int
    N: int

    def entries(self, L: int) -> list[list[OmegaSeries]]:
        p, N = self.p, self.N
        z = OmegaSeries.zeros(p, N, L)
        one = OmegaSeries.constant(1, L, p, N)
        pi2t = OmegaSeries.constant(PadicElem.pi(p, N, 2), L).shift(1)
        return [[z, one], [pi2t, z.copy()]]


def gauss_manin_matrix(p: int, N: int) -> ConnectionMatrix:
    return ConnectionMatrix(p, N)


def verify_gauss_manin(p: int, N: int, L: int = 4) -> dict:
    """Recompute ``d(1)`` and ``d(pi t/x)`` on blocks and reduce them."""
    one = LaurentBlock.from_terms(p, N, 1, L, {(0, 0): 1})
    w = LaurentBlock.from_terms(p, N, 1, L, {(0, -1): PadicElem.pi(p, N)})
    H = gauss_manin_matrix(p, N).entries(L)
    out = {}
    for name, blk, row in (("d(1)", one, H[0]), ("d(pi t/x)", w, H[1])):
        a, b = reduce_to_V(gauss_manin_partial(blk)).integral()
        out[name] = {"a": a, "b": b, "ok": a.congruent(row[0]) and b.congruent(row[1])}
    return out


# ---------------------------------------------------------------------------
# Frobenius matrices

@dataclass
class FrobMatrix2:
    """
    Relative Frobenius on the basis ``{1, pi t/x}``:
    ``alpha(1) = A1 + A3 w'`` and ``alpha(pi t/x) = A2 + A4 w'`` with ``w' = pi t^(p^level)/x``.
    """

    A1: OmegaSeries
    A2: OmegaSeries
    A3: OmegaSeries
    A4: OmegaSeries
    level: int
    p: int
    meta: dict = field(default_factory=dict)

    def rows(self) -> list[list[OmegaSeries]]:
        return [[self.A1, self.A3], [self.A2, self.A4]]

    @property
    def prec(self) -> int:
        return min(s.prec for s in (self.A1, self.A2, self.A3, self.A4))

    def truncated(self, L: int) -> "FrobMatrix2":
        return FrobMatrix2(*(s.resized(L) for s in (self.A1, self.A2, self.A3, self.A4)),
                           level=self.level, p=self.p, meta=dict(self.meta))

    def constants_report(self) -> dict:
        p, N = self.p, self.A1.N
        A1, A2, A3, A4 = (s[0] for s in (self.A1, self.A2, self.A3, self.A4))
        v3 = omega_valuation(A3)
        return {
            "A1(0)=1": A1.congruent(1),
            "A2(0)=0": A2.congruent(0),
            "A4(0)=p^m": A4.congruent(p ** self.level),
            "A3(0)!=0": v3.exact and not v3.is_infinite,
            "val A3(0)": str(v3),
            "prec": self.prec,
        }


def _basis_blocks(p: int, N: int, L_in: int = 1) -> tuple[LaurentBlock, LaurentBlock]:
    one = LaurentBlock.from_terms(p, N, 1, L_in, {(0, 0): 1})
    w = LaurentBlock.from_terms(p, N, 1, L_in, {(0, -1): PadicElem.pi(p, N)})
    return one, w


def frobenius_window(p: int, N_padic: int, L: int, U_x: int = 0) -> tuple[int, int, int]:
    """
    ``(U, I, N_store)``: x-window, number of theta coefficients and storage digits
    so that discarded rows of ``alpha(1)``, ``alpha(pi t/x)`` cost less than ``p^N_padic``.
    A positive ``U_x`` widens the x-window; it never narrows it.
    """
    dec = theta_decay(p)
    target = (p - 1) * N_padic
    # a discarded row v costs about dec*(p|v| - 1) - |v| pi-units
    U = max(int(ceil((target + 2 + dec) / (dec * p - 1))) + 1, U_x)
    I = L + p * (U + 1) + 2
    I = max(I, int(ceil((target + 2 * U + 4) / dec)))
    return U, I, storage_digits(p, N_padic, U)


def _frob_level1(p: int, N_padic: int, L: int, theta: SplittingFunction | None = None,
                 U_x: int = 0) -> FrobMatrix2:
    U, I, N = frobenius_window(p, N_padic, L, U_x)
    if theta is None:
        theta = theta_coeffs(p, I, N)
    N = theta.N
    one, w = _basis_blocks(p, N)
    ra = reduce_to_V(frobenius_apply(one, theta, U, L))
    rb = reduce_to_V(frobenius_apply(w, theta, U, L))
    A1, A3 = ra.integral()
    A2, A4 = rb.integral()
    return FrobMatrix2(A1, A2, A3, A4, level=1, p=p,
                       meta={"U": U, "I": theta.I, "N_store": N, "L": L})


def _matmul2(X, Y, L):
    return [[X[i][0].mul(Y[0][j], L) + X[i][1].mul(Y[1][j], L) for j in range(2)] for i in range(2)]


def frobenius_matrix_rel(p: int, level: int, N_t: int, N_padic: int,
                         theta: SplittingFunction | None = None, U_x: int = 0) -> FrobMatrix2:
    """
    ``A_(level, 1..4)`` as ``t``-series of length ``N_t + 1``.

    Level ``m`` is composed from level one: the row-convention matrix satisfies
    ``Phi_m(t) = Phi_(m-1)(t) Phi_1(t^(p^(m-1)))``.
    """
    if level < 1:
        raise ConfigurationError("level must be >= 1")
    L = N_t + 1
    F1 = _frob_level1(p, N_padic, L, theta, U_x)
    M = F1.rows()
    for k in range(1, level):
        step = [[s.substitute_power(p ** k, L) for s in row] for row in F1.rows()]
        M = _matmul2(M, step, L)
    return FrobMatrix2(M[0][0], M[1][0], M[0][1], M[1][1], level=level, p=p, meta=F1.meta)


def transfer_residual(F: FrobMatrix2, degree: int | None = None) -> int | None:
    """
    Valuation of ``t Phi' + p Phi H(t^p) - H(t) Phi`` on ``t``-degrees ``<= degree``
    (level one), or ``None`` if it vanishes to working precision.
    """
    p = F.p
    L = F.A1.length
    degree = L - 2 if degree is None else degree
    H = ConnectionMatrix(p, F.A1.N).entries(L)
    Hp = [[s.substitute_power(p, L) for s in row] for row in H]
    Phi = F.rows()
    left = _matmul2(Phi, Hp, L)
    right = _matmul2(H, Phi, L)
    worst = None
    for i in range(2):
        for j in range(2):
            r = Phi[i][j].t_derivative() + left[i][j].scale_int(p) - right[i][j]
            v = r.resized(degree + 1).valuation()
            if v.exact and not v.is_infinite:
                worst = v.numerator if worst is None else min(worst, v.numerator)
    return worst


# ---------------------------------------------------------------------------
# cyclotomic embedding, fiber traces, unit roots

def embed_cyclotomic(c: CycElem, theta: SplittingFunction) -> PadicElem:
    """The ring map ``zeta -> theta(1)``."""
    z = theta.at_one()
    acc = PadicElem.zero(theta.p, theta.N)
    power = PadicElem.one(theta.p, theta.N)
    for coeff in c.coeffs:
        acc = acc + power * coeff
        power = power * z
    return acc.with_prec(z.prec)


def _fiber_kernel(theta: SplittingFunction, that: PadicElem) -> dict[int, PadicElem]:
    """``g(delta) = sum_j theta_(j+delta) theta_j that^j`` for all representable ``delta``."""
    p, I = theta.p, theta.I
    b = []
    pw = PadicElem.one(p, theta.N)
    for j in range(I + 1):
        b.append(theta[j] * pw)
        pw = pw * that
    th = theta.series()
    brev = OmegaSeries.from_elems(b[::-1])
    prod = th.mul(brev, 2 * I + 1)
    return {k - I: prod[k] for k in range(2 * I + 1)}


def fiber_trace_check(p: int, tbar: int, m: int, N_padic: int = 12,
                      theta: SplittingFunction | None = None) -> dict:
    """
    Compare ``(p^m - 1) Tr(alpha_that^m)`` on an x-window with the Kloosterman sum of
    ``tbar`` over ``F_(p^m)`` embedded via ``theta(1)``.

    ``N_eff`` is the number of ``p``-adic digits certified: the working precision,
    the theta tail, and the valuation of any cycle through an omitted exponent.
    """
    dec = theta_decay(p)
    target = (p - 1) * N_padic
    U = int(ceil((target + 1) / (dec * (p - 1)))) + 1
    if theta is None:
        I = max(int(ceil((target + 1) / dec)), (p + 1) * U) + p
        theta = theta_coeffs(p, I, N_padic + 2)
    that = teichmuller(tbar, p, theta.N)
    g = _fiber_kernel(theta, that)
    idx = list(range(-U, U + 1))
    zero = PadicElem.zero(p, theta.N)
    A = [[g.get(p * v - u, zero) for u in idx] for v in idx]
    # trace of A^m via repeated products (m is small)
    P = A
    for _ in range(m - 1):
        P = [[sum((P[i][k] * A[k][j] for k in range(len(idx))), zero) for j in range(len(idx))]
             for i in range(len(idx))]
    tr = sum((P[i][i] for i in range(len(idx))), zero)
    lhs = tr * (p ** m - 1)
    F = FqField(p, m)
    kl = kloosterman_sum(F, F.from_int(tbar))
    rhs = embed_cyclotomic(kl, theta)
    cert = min(ceil(dec * (p - 1) * (U + 1)), ceil(dec * (theta.I + 1)), lhs.prec, rhs.prec)
    diff = (lhs - rhs).with_prec(cert)
    v = omega_valuation(diff)
    agree = v.numerator if (v.exact and v.numerator is not None) else cert
    n_eff = cert // (p - 1)
    return {
        "tbar": tbar, "m": m, "U": U, "I": theta.I,
        "N_eff": n_eff,
        "agreement_digits": Fraction(agree, p - 1),
        "ok": agree >= cert,
        "lhs": lhs, "rhs": rhs,
    }


def unit_root(field: FqField, t: FqElem | int, theta: SplittingFunction) -> PadicElem:
    """
    The unit root ``pi0`` of the fiber over ``t`` (as a point of ``field``):
    the root of ``X^2 + embed(Kl) X + |field|`` that is a 1-unit.
    """
    kl = kloosterman_sum(field, t if isinstance(t, FqElem) else field(t))
    return unit_root_from_kl(kl, field.q, theta)


def unit_root_from_kl(kl: CycElem, q: int, theta: SplittingFunction) -> PadicElem:
    s = -embed_cyclotomic(kl, theta)
    c = PadicElem.from_int(theta.p, theta.N, q)
    return hensel_quadratic_unit_root(s, c)
