"""
The kappa-symmetric-power layer.

``S`` is spanned by ``t^n w^(m)`` with ``w^(m) = kappa^(m, falling) w^m``.  Frobenius
on ``S`` is built from the 2x2 relative Frobenius: in the monomial basis ``w^m``,

    [alpha](w^m) = (A1 + A3 w)^(kappa - m) (A2 + A4 w)^m,

and ``beta = psi_t^a o [alpha]``.  The monomial basis differs from the normalized
one by the diagonal matrix of falling factorials, so Fredholm determinants agree;
the monomial form keeps every entry integral and needs no special case for
integer ``kappa``.  Determinants are computed with Chistov's division-free
method, so no division by ``m`` ever occurs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import ceil, factorial

import numpy as np
from flint import fmpz, fmpz_mat, fmpz_poly, nmod_mat, nmod_poly

from .bessel import FrobMatrix2, SplittingFunction, frobenius_matrix_rel, theta_coeffs, \
    unit_root_from_kl
from .exact import CycElem, FqField, kloosterman_counts_all
from .padic import ConfigurationError, PadicElem, PrecisionError, PrecisionProfile, ord_p
from .series import OmegaSeries

__all__ = [
    "KappaValue",
    "SymBlock",
    "OperatorMatrix",
    "LSeriesPadic",
    "falling_factorial",
    "binom_padic",
    "alpha_sym_column",
    "alpha_sym_columns",
    "beta_matrix",
    "beta_apply",
    "partial_kappa",
    "partial_kappa_monomial",
    "kernel_dim",
    "reduce_to_R",
    "lh_decomposition",
    "fredholm_det",
    "delta_q",
    "l_sym_inf",
    "l_sym_inf_euler",
    "l_unit",
    "finite_sym_check",
    "commutation_residual",
    "reduced_frobenius_R",
]


# ---------------------------------------------------------------------------
# kappa

@dataclass(frozen=True)
class KappaValue:
    """
    An exponent ``kappa`` in ``Z_p``: either an exact integer (``N is None``) or
    a residue ``value mod p^N``.
    """

    value: int
    p: int | None = None
    N: int | None = None

    def __post_init__(self):
        if self.N is not None:
            if self.p is None or self.N < 1:
                raise ConfigurationError("a p-adic kappa needs p and N >= 1")
            object.__setattr__(self, "value", self.value % self.p ** self.N)

    @classmethod
    def parse(cls, text: str | int, p: int) -> "KappaValue":
        """``"-7"`` or ``"digits:d0,d1,..."`` (base-``p`` digits, least significant first)."""
        if isinstance(text, int):
            return cls(text)
        text = text.strip()
        if text.startswith("digits:"):
            digits = [int(x) for x in text[len("digits:"):].split(",") if x.strip()]
            if not digits or any(not 0 <= x < p for x in digits):
                raise ConfigurationError("p-adic digits must lie in [0, p)")
            return cls(sum(x * p ** i for i, x in enumerate(digits)), p, len(digits))
        return cls(int(text))

    @property
    def is_integer(self) -> bool:
        return self.N is None

    @property
    def is_nonneg_integer(self) -> bool:
        return self.N is None and self.value >= 0

    @property
    def kind(self) -> str:
        if self.N is not None:
            return "padic"
        return "nonneg-integer" if self.value >= 0 else "negative-integer"

    def shifted(self, k: int) -> "KappaValue":
        return KappaValue(self.value + k, self.p, self.N)

    def precision_pi(self, p: int) -> int | None:
        """Absolute precision of ``kappa`` in pi-units (``None`` when exact)."""
        return None if self.N is None else (p - 1) * self.N

    def label(self) -> str:
        if self.N is None:
            return str(self.value)
        return f"{self.value} + O({self.p}^{self.N})"

    def to_json(self):
        return {"value": str(self.value), "kind": self.kind, "N": self.N}


def _kappa(k) -> KappaValue:
    return k if isinstance(k, KappaValue) else KappaValue(int(k))


def falling_factorial(kappa, m: int) -> int:
    """
    ``kappa (kappa-1) ... (kappa-m+1)``; for ``kappa = k >= 0`` the factor ``0``
    is skipped, so ``k^(k) = k^(k+1) = k!``.  For a p-adic ``kappa`` the result
    is a residue modulo ``p^N``.
    """
    kappa = _kappa(kappa)
    k = kappa.value
    out = 1
    for i in range(m):
        f = k - i
        if f == 0 and kappa.is_nonneg_integer:
            continue
        out *= f
    if kappa.N is not None:
        out %= kappa.p ** kappa.N
    return out


def _gen_binom(tau: int, l: int) -> int:
    num = 1
    for i in range(l):
        num *= tau - i
    return num // factorial(l)


def binom_padic(tau, l: int) -> int | PadicElem:
    """
    ``tau (tau-1) ... (tau-l+1) / l!``.  Exact for an integer ``tau``; for a
    p-adic ``tau`` a ``PadicElem`` valid to ``N - ord_p(l!)`` digits.
    """
    tau = _kappa(tau)
    b = _gen_binom(tau.value, l)
    if tau.N is None:
        return b
    p = tau.p
    lost = ord_p(factorial(l), p)
    return PadicElem.from_int(p, tau.N, b).with_prec((p - 1) * (tau.N - lost))


# ---------------------------------------------------------------------------
# blocks in S

class SymBlock:
    """
    Truncated element ``sum A_m(t) w^(m)`` of ``S`` in the normalized basis
    (``basis="normalized"``) or in the monomial basis ``w^m``.
    """

    def __init__(self, kappa, rows: dict[int, OmegaSeries], L: int, basis: str = "normalized",
                 p: int | None = None, N: int | None = None):
        self.kappa = _kappa(kappa)
        self.L = L
        self.basis = basis
        self.rows = {m: s.resized(L) for m, s in rows.items()}
        some = next(iter(self.rows.values()), None)
        self.p = some.p if some is not None else p
        self.N = some.N if some is not None else N
        if self.p is None or self.N is None:
            raise ConfigurationError("an empty block needs explicit p and N")

    @classmethod
    def from_terms(cls, kappa, p: int, N: int, L: int, terms: dict, basis: str = "normalized"):
        rows: dict[int, OmegaSeries] = {}
        for (n, m), c in terms.items():
            if isinstance(c, int):
                c = PadicElem.from_int(p, N, c)
            base = rows.get(m, OmegaSeries.zeros(p, N, L))
            rows[m] = base + OmegaSeries.constant(c, L).shift(n)
        return cls(kappa, rows, L, basis, p, N)

    def row(self, m: int) -> OmegaSeries:
        s = self.rows.get(m)
        if s is None:
            return OmegaSeries.zeros(self.p, self.N, self.L)
        return s

    def coeff(self, n: int, m: int) -> PadicElem:
        return self.row(m)[n]

    def __sub__(self, other: "SymBlock") -> "SymBlock":
        rows = dict(self.rows)
        for m, s in other.rows.items():
            rows[m] = self.row(m) - s if m in rows else -s
        return SymBlock(self.kappa, rows, self.L, self.basis, self.p, self.N)

    def valuation(self):
        vals = [s.valuation() for s in self.rows.values()]
        return min(vals) if vals else None

    def to_basis(self, basis: str) -> "SymBlock":
        """Change coordinates between ``w^(m)`` and ``w^m`` (the latter must stay integral)."""
        if basis == self.basis:
            return self
        rows = {}
        for m, s in self.rows.items():
            f = falling_factorial(self.kappa, m)
            if basis == "monomial":
                rows[m] = s * f
            else:
                rows[m] = _divide_int(s, f)
        return SymBlock(self.kappa, rows, self.L, basis, self.p, self.N)


def _divide_int(s: OmegaSeries, c: int) -> OmegaSeries:
    """Exact division of a series by a nonzero integer (unit part inverted, p-part by pi-shifts)."""
    p = s.p
    v = ord_p(c, p)
    if v is None:
        raise ZeroDivisionError("division by zero")
    unit = c // p ** v
    out = s * pow(unit, -1, p ** s.N)
    for _ in range((p - 1) * v):
        out = out.div_pi()
    return out * ((-1) ** v)


def partial_kappa(kappa, blk: SymBlock) -> SymBlock:
    """
    Boundary map in the normalized basis:
    ``t^n w^(m) -> n t^n w^(m) + t^n w^(m+1) + m (kappa-m+1) pi^2 t^(n+1) w^(m-1)``,
    with the rows ``m = k, k+1`` modified when ``kappa = k >= 0``.
    """
    kappa = _kappa(kappa)
    if blk.basis != "normalized":
        return partial_kappa_monomial(kappa, blk)
    out: dict[int, OmegaSeries] = {}
    p, N, L = blk.p, blk.N, blk.L
    pi2 = PadicElem.pi(p, N, 2)
    k = kappa.value

    def acc(m, s):
        out[m] = out[m] + s if m in out else s

    for m, s in blk.rows.items():
        acc(m, s.t_derivative())
        special = kappa.is_nonneg_integer
        if not (special and m == k):
            acc(m + 1, s)
        if m >= 1:
            if special and m == k + 1:
                c = k + 1
            else:
                c = m * (k - m + 1)
            if c:
                acc(m - 1, (s * pi2).shift(1).scale_int(c))
    return SymBlock(kappa, out, L, "normalized", p, N)


def partial_kappa_monomial(kappa, blk: SymBlock) -> SymBlock:
    """``t^n w^m -> n t^n w^m + (kappa-m) t^n w^(m+1) + m pi^2 t^(n+1) w^(m-1)``."""
    kappa = _kappa(kappa)
    out: dict[int, OmegaSeries] = {}
    p, N = blk.p, blk.N
    pi2 = PadicElem.pi(p, N, 2)

    def acc(m, s):
        out[m] = out[m] + s if m in out else s

    for m, s in blk.rows.items():
        acc(m, s.t_derivative())
        c = kappa.value - m
        if c:
            acc(m + 1, s.scale_int(c))
        if m >= 1:
            acc(m - 1, (s * pi2).shift(1).scale_int(m))
    return SymBlock(kappa, out, blk.L, "monomial", p, N)


# ---------------------------------------------------------------------------
# kernel of the boundary map

def _aux_primes(p: int, count: int = 2) -> list[tuple[int, int]]:
    """Primes ``l`` with a root ``s`` of ``s^((p-1)/2) = -p`` mod ``l`` (an image of ``pi^2``)."""
    out = []
    n = (1 << 61) - 1
    while len(out) < count:
        if fmpz(n).is_prime():
            f = nmod_poly([p] + [0] * ((p - 1) // 2 - 1) + [1], n)
            roots = f.roots()
            if roots:
                out.append((n, int(roots[0][0])))
        n -= 2
    return out


def _boundary_matrix_mod(kappa: KappaValue, N_t: int, M_w: int, ell: int, s: int) -> nmod_mat:
    """Matrix of the normalized boundary map from the window into the enlarged window, mod ``ell``."""
    cols = [(n, m) for n in range(N_t + 1) for m in range(M_w + 1)]
    rows_idx = {(n, m): i for i, (n, m) in
                enumerate((n, m) for n in range(N_t + 2) for m in range(M_w + 2))}
    mat = [[0] * len(cols) for _ in rows_idx]
    k = kappa.value
    special = kappa.is_nonneg_integer
    for c, (n, m) in enumerate(cols):
        mat[rows_idx[(n, m)]][c] += n
        if not (special and m == k):
            mat[rows_idx[(n, m + 1)]][c] += 1
        if m >= 1:
            coef = (k + 1) if (special and m == k + 1) else m * (k - m + 1)
            mat[rows_idx[(n + 1, m - 1)]][c] += coef * s
    flat = [x % ell for row in mat for x in row]
    return nmod_mat(len(rows_idx), len(cols), flat, ell)


@dataclass(frozen=True)
class KernelResult:
    dim: int | None
    certified: bool
    upper_bounds: tuple[int, ...]
    lower_bound: int


def kernel_dim(kappa, N_t: int, M_w: int, p: int) -> KernelResult:
    """
    Dimension of the kernel of the boundary map on the window
    ``n <= N_t, m <= M_w``, with the image taken in the enlarged window, so
    truncation cannot create solutions.

    The rank is computed modulo primes ``l`` where ``pi^2`` has an image; this
    can only over-estimate the kernel, so the result is certified when it
    meets the explicit lower bound (the constants for ``kappa = 0``).
    """
    kappa = _kappa(kappa)
    if kappa.is_integer and kappa.value > 0:
        raise ConfigurationError("kernel computation is not supported for positive integer kappa")
    lower = 1 if (kappa.is_integer and kappa.value == 0) else 0
    ups = []
    ncols = (N_t + 1) * (M_w + 1)
    for ell, s in _aux_primes(p):
        ups.append(ncols - _boundary_matrix_mod(kappa, N_t, M_w, ell, s).rank())
    best = min(ups)
    certified = best == lower
    return KernelResult(best if certified else None, certified, tuple(ups), lower)


# ---------------------------------------------------------------------------
# reduction to R

def lh_decomposition(kappa, blk: SymBlock) -> tuple[OmegaSeries, SymBlock]:
    """
    One sweep ``xi = eta + L_H(zeta)`` using
    ``w^(m) = L_H(w^(m-1)) - (m-1)(kappa-m+2) pi^2 t w^(m-2)``.
    """
    kappa = _kappa(kappa)
    if kappa.is_nonneg_integer:
        raise ConfigurationError("reduction to R needs kappa outside Z_{>=0}")
    if blk.basis != "normalized":
        raise ConfigurationError("reduction works in the normalized basis")
    rows = dict(blk.rows)
    p, N, L = blk.p, blk.N, blk.L
    pi2 = PadicElem.pi(p, N, 2)
    zeta: dict[int, OmegaSeries] = {}
    k = kappa.value
    for m in range(max(rows, default=0), 0, -1):
        if m not in rows:
            continue
        A = rows.pop(m)
        zeta[m - 1] = zeta[m - 1] + A if m - 1 in zeta else A
        if m >= 2:
            c = -(m - 1) * (k - m + 2)
            if c:
                add = (A * pi2).shift(1).scale_int(c)
                rows[m - 2] = rows[m - 2] + add if m - 2 in rows else add
    eta = rows.get(0, OmegaSeries.zeros(p, N, L))
    return eta, SymBlock(kappa, zeta, L, "normalized", p, N)


def reduce_to_R(kappa, blk: SymBlock, max_passes: int | None = None) -> OmegaSeries:
    """
    The ``R``-coordinate of ``blk`` modulo the image of the boundary map:
    split off ``L_H``-exact parts, re-inject ``-t d/dt`` of the primitive and
    repeat.  Each pass lowers the top ``w``-degree, so the sweep stops after at
    most ``M + 1`` passes on a window with top degree ``M``.
    """
    kappa = _kappa(kappa)
    top = max(blk.rows, default=0)
    max_passes = top + 2 if max_passes is None else max_passes
    total = None
    cur = blk
    for _ in range(max_passes):
        eta, zeta = lh_decomposition(kappa, cur)
        total = eta if total is None else total + eta
        nxt = {m: -s.t_derivative() for m, s in zeta.rows.items()}
        if all(s.is_zero() for s in nxt.values()):
            return total
        cur = SymBlock(kappa, nxt, blk.L, "normalized", blk.p, blk.N)
    raise PrecisionError("reduction to R did not terminate within the pass budget")


# ---------------------------------------------------------------------------
# Frobenius on S

def _A_power(A1: OmegaSeries, kappa: KappaValue) -> OmegaSeries:
    e = kappa.value
    return A1 ** e


def _kappa_prec(kappa: KappaValue, p: int, L: int) -> int | None:
    """
    Precision (pi-units) of ``f^kappa`` computed through an integer representative,
    for ``f`` a 1-unit series of length ``L`` and a ``w``-window of similar size.
    """
    if kappa.N is None:
        return None
    loss = 0
    while p ** (loss + 1) <= max(L, 2):
        loss += 1
    return (p - 1) * (kappa.N - loss)


def _pack_w(X: list[OmegaSeries], L: int) -> fmpz_poly:
    """Kronecker pack of ``sum_j X[j] w^j``: pi innermost, then t, then w."""
    p = X[0].p
    d = p - 1
    sp, st = 2 * d - 1, 2 * L - 1
    arr = np.zeros((len(X), st, sp), dtype=object)
    for j, s in enumerate(X):
        m = min(L, s.length)
        arr[j, :m, :d] = s.data[:, :m].T
    return fmpz_poly([int(c) for c in arr.ravel()])


def _unpack_w(poly: fmpz_poly, p: int, N: int, L: int, W: int, prec: int) -> list[OmegaSeries]:
    d = p - 1
    sp, st = 2 * d - 1, 2 * L - 1
    size = W * st * sp
    raw = [int(c) for c in poly.coeffs()[:size]]
    raw += [0] * (size - len(raw))
    arr = np.array(raw, dtype=object).reshape(W, st, sp)[:, :L, :]
    res = arr[:, :, :d].copy()
    for k in range(sp - 1, d - 1, -1):
        res[:, :, k - d] -= p * arr[:, :, k]
    return [OmegaSeries(p, N, np.ascontiguousarray(res[j].T), prec) for j in range(W)]


def _wval(X: list[OmegaSeries]) -> tuple[int, int]:
    """(lower bound for the valuation, precision) of a w-polynomial, in pi-units."""
    prec = min(s.prec for s in X)
    val = prec
    for s in X:
        v = s.valuation()
        if v.exact and v.numerator is not None:
            val = min(val, v.numerator)
    return val, prec


def _wmul(X: list[OmegaSeries], Y: list[OmegaSeries], W: int, L: int) -> list[OmegaSeries]:
    """``X(w) Y(w)`` truncated to ``w``-degree ``< W`` and ``t``-length ``L``."""
    vx, px = _wval(X)
    vy, py = _wval(Y)
    prod = _pack_w(X, L) * _pack_w(Y, L)
    return _unpack_w(prod, X[0].p, min(X[0].N, Y[0].N), L, W, min(px + vy, py + vx))


def alpha_sym_columns(kappa, frob: FrobMatrix2, M_w: int, L: int | None = None) -> list[list[OmegaSeries]]:
    """
    Columns ``m = 0..M_w`` of ``[alpha]`` in the monomial basis:
    ``cols[m][j]`` is the coefficient of ``w^j`` in ``(A1 + A3 w)^(kappa-m) (A2 + A4 w)^m``.

    ``A1^(kappa-m) (1 + (A3/A1) w)^(kappa-m)`` is expanded with integer binomial
    coefficients of an integer representative of ``kappa``.  Each column costs
    two bivariate products, done as single packed integer-polynomial products.
    """
    kappa = _kappa(kappa)
    L = frob.A1.length if L is None else L
    A1, A2, A3, A4 = (s.resized(L) for s in (frob.A1, frob.A2, frob.A3, frob.A4))
    p, N = A1.p, A1.N
    W = M_w + 1
    inv1 = A1.inverse()
    A3t = A3 * inv1
    kprec = _kappa_prec(kappa, p, max(L, W))
    base = _A_power(A1, kappa)
    if kprec is not None:
        base = base.with_prec(kprec)
    one = OmegaSeries.constant(1, L, p, N)
    powers3 = [one]
    for _ in range(M_w):
        powers3.append(powers3[-1] * A3t)
    Q = [one]
    cols = []
    for m in range(W):
        if m:
            base = base * inv1
            Q = _wmul(Q, [A2, A4], min(m + 1, W), L)
        e = kappa.value - m
        G = [powers3[l].scale_int(_gen_binom(e, l)) for l in range(W)]
        P = _wmul([base], G, W, L)
        col = _wmul(P, Q, W, L)
        if kprec is not None:
            col = [c.with_prec(kprec) for c in col]
        cols.append(col)
    return cols


def alpha_sym_column(kappa, m: int, frob: FrobMatrix2, M_w: int,
                     basis: str = "normalized") -> list[OmegaSeries]:
    """
    ``[alpha](w^(m))`` as coefficients of ``w^(j)``, ``j = 0..M_w`` (or of ``w^j`` and
    ``w^m`` with ``basis="monomial"``).  The normalized coefficients are
    ``kappa^(m)/kappa^(j)`` times the monomial ones; the division is exact in
    ``Omega`` and performed by pi-shifts.
    """
    kappa = _kappa(kappa)
    col = alpha_sym_columns(kappa, frob, max(M_w, m))[m][:M_w + 1]
    if basis == "monomial":
        return col
    fm = falling_factorial(kappa, m)
    out = []
    for j, s in enumerate(col):
        fj = falling_factorial(kappa, j)
        if fj == 0:
            raise ConfigurationError("falling factorial vanishes; use the monomial basis")
        out.append(_divide_int(s * fm, fj))
    return out


@dataclass
class OperatorMatrix:
    """
    Matrix of ``beta`` on the basis ``t^n w^m`` (``n <= N_t``, ``m <= M_w``).

    Entry ``[(n', j), (n, m)]`` is the coefficient of ``t^(q n' - n)`` in column
    ``m``'s ``w^j`` series (zero when ``q n' - n < 0``).  ``order`` lists the
    basis in the nested-window order used by the determinant.
    """

    p: int
    q: int
    N_t: int
    M_w: int
    cols: list[list[OmegaSeries]]
    order: list[tuple[int, int]]
    basis: str = "monomial"

    @property
    def dim(self) -> int:
        return len(self.order)

    def entry(self, row: tuple[int, int], col: tuple[int, int]) -> PadicElem:
        (n2, j), (n, m) = row, col
        k = self.q * n2 - n
        s = self.cols[m][j]
        if k < 0 or k >= s.length:
            return PadicElem(self.p, s.N, (0,) * (self.p - 1), s.prec)
        return s[k]

    @property
    def prec(self) -> int:
        return min(s.prec for col in self.cols for s in col)

    @property
    def N(self) -> int:
        return self.cols[0][0].N

    def coordinate_mats(self) -> list[fmpz_mat]:
        """``(p-1)`` integer matrices ``M_r`` with ``M = sum M_r pi^r``."""
        D = self.dim
        d = self.p - 1
        mats = [[0] * (D * D) for _ in range(d)]
        for r_i, row in enumerate(self.order):
            for c_i, col in enumerate(self.order):
                (n2, j), (n, m) = row, col
                k = self.q * n2 - n
                s = self.cols[m][j]
                if 0 <= k < s.length:
                    for r in range(d):
                        mats[r][r_i * D + c_i] = s.data[r, k]
        return [fmpz_mat(D, D, [int(x) for x in mm]) for mm in mats]


def window_order(N_t: int, M_w: int) -> list[tuple[int, int]]:
    """Basis order in which every leading segment is a smaller rectangular-ish window."""
    idx = [(n, m) for n in range(N_t + 1) for m in range(M_w + 1)]
    return sorted(idx, key=lambda nm: (max(nm[0] * M_w, nm[1] * N_t), nm[0], nm[1]))


def inner_window_size(N_t: int, M_w: int) -> int:
    """Length of the leading segment ``max(n M_w, m N_t) <= (N_t - 1) M_w``."""
    return sum(1 for n in range(N_t + 1) for m in range(M_w + 1)
               if max(n * M_w, m * N_t) <= (N_t - 1) * M_w)


def beta_matrix(kappa, prof: PrecisionProfile, frob: FrobMatrix2 | None = None) -> OperatorMatrix:
    """Assemble the matrix of ``beta = psi_t^a o [alpha_a]`` on the window of ``prof``."""
    kappa = _kappa(kappa)
    q = prof.q
    L = q * prof.N_t + 1
    if frob is None:
        frob = frobenius_matrix_rel(prof.p, prof.a, L - 1, prof.N_padic, U_x=prof.U_x)
    if frob.A1.length < L:
        raise ConfigurationError("Frobenius series are too short for the t-window")
    cols = alpha_sym_columns(kappa, frob, prof.M_w, L)
    return OperatorMatrix(prof.p, q, prof.N_t, prof.M_w, cols, window_order(prof.N_t, prof.M_w))


def beta_apply(kappa, cols: list[list[OmegaSeries]], q: int, blk: SymBlock, N_out: int) -> SymBlock:
    """``beta`` applied to a monomial-basis block, output ``t``-degrees ``<= N_out``."""
    kappa = _kappa(kappa)
    out: dict[int, OmegaSeries] = {}
    Lc = cols[0][0].length
    for m, s in blk.rows.items():
        if s.is_zero():
            continue
        for j, c in enumerate(cols[m]):
            prod = s.mul(c, Lc) if s.length <= Lc else s.resized(Lc).mul(c, Lc)
            img = prod.decimate(q, N_out + 1)
            out[j] = out[j] + img if j in out else img
    return SymBlock(kappa, out, N_out + 1, "monomial", blk.p, blk.N)


def commutation_residual(kappa, frob: FrobMatrix2, blk: SymBlock, M_w: int, N_check: int,
                         M_check: int, cols: list[list[OmegaSeries]] | None = None
                         ) -> tuple[int | None, int]:
    """
    ``q d(beta(xi)) - beta(d(xi))`` on ``n <= N_check``, ``m <= M_check`` for a
    monomial-basis block.  Returns (valuation of the residual or ``None`` if it
    vanishes, precision in pi-units).
    """
    kappa = _kappa(kappa)
    q = frob.p ** frob.level
    if cols is None:
        cols = alpha_sym_columns(kappa, frob, M_w)
    lhs = partial_kappa_monomial(kappa, beta_apply(kappa, cols, q, blk, N_check + 1))
    rhs = beta_apply(kappa, cols, q, partial_kappa_monomial(kappa, blk), N_check + 1)
    worst, prec = None, None
    for m in range(M_check + 1):
        r = lhs.row(m).resized(N_check + 1).scale_int(q) - rhs.row(m).resized(N_check + 1)
        prec = r.prec if prec is None else min(prec, r.prec)
        v = r.valuation()
        if v.exact and not v.is_infinite:
            worst = v.numerator if worst is None else min(worst, v.numerator)
    return worst, prec


# ---------------------------------------------------------------------------
# Fredholm determinants

@dataclass
class LSeriesPadic:
    """``sum c_m T^m`` with a per-coefficient count of certified ``p``-adic digits."""

    coeffs: list[PadicElem]
    n_eff: list[int]
    meta: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return self.coeffs[0].p

    def series(self) -> OmegaSeries:
        return OmegaSeries.from_elems(self.coeffs)

    def to_json(self) -> dict:
        out = []
        for c, ne in zip(self.coeffs, self.n_eff):
            v = c.with_prec((c.p - 1) * ne).valuation()
            out.append({"val_num": None if v.numerator is None else v.numerator,
                        "val_den": v.denominator, "val_exact": v.exact,
                        "digits": [str(x % c.p ** max(ne, 0)) for x in c.coeffs] if ne > 0
                        else ["0"] * (c.p - 1),
                        "Neff": ne})
        return {"coeffs": out, "meta": self.meta}


def _omega_matmul(A: list[fmpz_mat], B: list[fmpz_mat], p: int) -> list[fmpz_mat]:
    d = p - 1
    acc = [None] * (2 * d - 1)
    for i in range(d):
        for j in range(d):
            prod = A[i] * B[j]
            acc[i + j] = prod if acc[i + j] is None else acc[i + j] + prod
    for k in range(2 * d - 2, d - 1, -1):
        acc[k - d] = acc[k - d] - acc[k] * p
    return acc[:d]


def _mask_upper(mats: list[fmpz_mat], mod: int) -> list[fmpz_mat]:
    out = []
    for M in mats:
        D = M.nrows()
        tab = M.table()
        flat = []
        for i in range(D):
            row = tab[i]
            flat.extend([0] * i)
            flat.extend(int(x) % mod for x in row[i:])
        out.append(fmpz_mat(D, D, flat))
    return out


def chistov_factors(mats: list[fmpz_mat], p: int, N: int, K: int) -> list[list[tuple[int, ...]]]:
    """
    For each ``r`` the values ``(A_r^k)_(r,r)``, ``k = 0..K``, where ``A_r`` is the
    leading ``r x r`` block; all leading blocks are advanced at once by masking
    the product to its upper triangle.
    """
    D = mats[0].nrows()
    mod = p ** N
    d = p - 1
    V = [fmpz_mat(D, D, [1 if i == j else 0 for i in range(D) for j in range(D)])] + \
        [fmpz_mat(D, D) for _ in range(d - 1)]
    diag = [[(1,) + (0,) * (d - 1)] for _ in range(D)]
    for _ in range(K):
        V = _mask_upper(_omega_matmul(mats, V, p), mod)
        tabs = [M.table() for M in V]
        for r in range(D):
            diag[r].append(tuple(int(tabs[c][r][r]) for c in range(d)))
    return diag


def _series_from_coords(p: int, N: int, coords: list[tuple[int, ...]], prec: int) -> OmegaSeries:
    elems = [PadicElem(p, N, c, prec) for c in coords]
    return OmegaSeries.from_elems(elems)


def fredholm_det(Mx: OperatorMatrix | list[list[PadicElem]], M_T: int,
                 inner: int | None = None, p: int | None = None,
                 N: int | None = None) -> tuple[OmegaSeries, OmegaSeries | None]:
    """
    ``det(1 - Mx T)`` through ``T^M_T`` by Chistov's formula
    ``det(1 - T A) = prod_r (sum_k (A_r^k)_(r,r) T^k)^(-1)``.

    Also returns the determinant of the leading ``inner`` block (``None`` if not asked).
    ``p`` and ``N`` are only consulted for an empty matrix, whose determinant is 1.
    """
    if not isinstance(Mx, OperatorMatrix) and len(Mx) == 0:
        if p is None or N is None:
            raise ConfigurationError("an empty matrix needs explicit p and N")
        one = OmegaSeries.constant(1, M_T + 1, p, N)
        return one, (one if inner == 0 else None)
    if isinstance(Mx, OperatorMatrix):
        p, N, prec = Mx.p, Mx.N, Mx.prec
        mats = Mx.coordinate_mats()
        D = Mx.dim
    else:
        D = len(Mx)
        p, N = Mx[0][0].p, Mx[0][0].N
        prec = min(e.prec for row in Mx for e in row)
        d = p - 1
        mats = [fmpz_mat(D, D, [Mx[i][j].coeffs[r] for i in range(D) for j in range(D)])
                for r in range(d)]
    diag = chistov_factors(mats, p, N, M_T)
    L = M_T + 1
    prod = OmegaSeries.constant(1, L, p, N)
    inner_prod = None
    for r in range(D):
        f = _series_from_coords(p, N, diag[r], prec)
        prod = prod * f
        if inner is not None and r + 1 == inner:
            inner_prod = prod
    det = prod.inverse()
    return det, (inner_prod.inverse() if inner_prod is not None else None)


def delta_q(D: OmegaSeries, q: int) -> OmegaSeries:
    """``D(T) / D(qT)``."""
    Dq = OmegaSeries(D.p, D.N, D.data * [q ** i for i in range(D.length)], D.prec)
    return D * Dq.inverse()


def _digits(prec_pi: int, p: int) -> int:
    return max(prec_pi, 0) // (p - 1)


def _lseries(L: OmegaSeries, cert: OmegaSeries | None, meta: dict,
             cap: int | None = None) -> LSeriesPadic:
    p = L.p
    coeffs, neff = [], []
    for m in range(L.length):
        c = L[m]
        bound = c.prec
        if cert is not None:
            v = (L[m] - cert[m]).valuation()
            if v.exact and v.numerator is not None:
                bound = min(bound, v.numerator)
        coeffs.append(c)
        d = _digits(bound, p)
        neff.append(d if cap is None else min(d, cap))
    return LSeriesPadic(coeffs, neff, meta)


@lru_cache(maxsize=16)
def _frob_cached(p: int, a: int, N_t_series: int, N_padic: int, U_x: int = 0) -> FrobMatrix2:
    return frobenius_matrix_rel(p, a, N_t_series, N_padic, U_x=U_x)


def l_sym_inf(kappa, prof: PrecisionProfile, frob: FrobMatrix2 | None = None,
              return_det: bool = False):
    """
    ``L(Sym^(infty, kappa) Kl, T) = D(T)/D(qT)`` through ``T^M_T`` with
    ``D = det(1 - beta T)`` on the window of ``prof``.

    The truncation certificate compares with the determinant on the next
    smaller nested window; ``n_eff`` is the smaller of that agreement and the
    tracked working precision.
    """
    kappa = _kappa(kappa)
    q = prof.q
    if frob is None:
        frob = _frob_cached(prof.p, prof.a, q * prof.N_t, prof.N_padic, prof.U_x)
    Mx = beta_matrix(kappa, prof, frob)
    inner = inner_window_size(prof.N_t, prof.M_w)
    D, D_in = fredholm_det(Mx, prof.M_T, inner)
    L = delta_q(D, q)
    L_in = delta_q(D_in, q) if D_in is not None else None
    meta = {"kappa": kappa.label(), "p": prof.p, "a": prof.a, "window": [prof.N_t, prof.M_w],
            "dim": Mx.dim, "inner_dim": inner, "N_padic": prof.N_padic}
    res = _lseries(L, L_in, meta, prof.N_padic)
    if return_det:
        return res, _lseries(D, D_in, meta, prof.N_padic)
    return res


# ---------------------------------------------------------------------------
# Euler products

def _closed_points(p: int, a: int, r: int, seed: int = 0):
    """Frobenius orbits of exact size ``r`` on ``F_(q^r)^*``, with their Kloosterman counts."""
    F = FqField(p, a * r, seed=seed)
    q = p ** a
    counts = kloosterman_counts_all(F)
    seen = bytearray(F.q)
    for t in range(1, F.q):
        if seen[t]:
            continue
        orbit = [t]
        x = F.pow(t, q)
        while x != t:
            orbit.append(x)
            x = F.pow(x, q)
        for y in orbit:
            seen[y] = 1
        if len(orbit) == r:
            yield F, tuple(int(c) for c in counts[F._log[t]])


def _unit_pow(x: PadicElem, kappa: KappaValue) -> PadicElem:
    """``x^kappa`` for a 1-unit ``x`` (integer representative for p-adic ``kappa``)."""
    return x ** kappa.value


def _euler_factors(kappa: KappaValue, p: int, a: int, M_T: int, theta: SplittingFunction,
                   sym: bool) -> OmegaSeries:
    N = theta.N
    L = M_T + 1
    total = OmegaSeries.constant(1, L, p, N)
    q = p ** a
    for r in range(1, M_T + 1):
        cache: dict[tuple, OmegaSeries] = {}
        for F, cnt in _closed_points(p, a, r):
            fac = cache.get(cnt)
            if fac is None:
                kl = CycElem.from_exponent_counts(p, cnt)
                pi0 = unit_root_from_kl(kl, q ** r, theta)
                base = _unit_pow(pi0, kappa)
                fac = OmegaSeries.constant(1, L, p, N)
                if sym:
                    ratio = PadicElem.from_int(p, N, q ** r) * (pi0 ** -2)
                    term = base
                    # m-th factor has T-degree r and valuation >= m r a
                    m = 0
                    while m * r * a * (p - 1) < (p - 1) * N + p:
                        fac = fac * _geom(term, r, L)
                        term = term * ratio
                        m += 1
                else:
                    fac = _geom(base, r, L)
                cache[cnt] = fac
            total = total * fac
    return total


def _geom(c: PadicElem, r: int, L: int) -> OmegaSeries:
    """``(1 - c T^r)^(-1)`` truncated to length ``L``."""
    elems = [PadicElem.zero(c.p, c.N) for _ in range(L)]
    power = PadicElem.one(c.p, c.N)
    for i in range(0, L, r):
        elems[i] = power
        power = power * c
    return OmegaSeries.from_elems(elems)


def _euler_theta(p: int, N: int) -> SplittingFunction:
    from .bessel import theta_decay
    I = int(ceil(((p - 1) * N + 2) / theta_decay(p))) + 1
    return theta_coeffs(p, I, N)


def l_sym_inf_euler(kappa, p: int, M_T: int, N: int, a: int = 1) -> LSeriesPadic:
    """
    ``L(Sym^(infty, kappa))`` from its Euler product over closed points of degree
    ``<= M_T``: ``prod_m (1 - pi0^(kappa-m) pi1^m T^deg)^(-1)``.
    """
    kappa = _kappa(kappa)
    theta = _euler_theta(p, N + 2)
    S = _euler_factors(kappa, p, a, M_T, theta, sym=True)
    return _lseries(S, None, {"route": "euler", "kappa": kappa.label()})


def l_unit(kappa, prof: PrecisionProfile, route: str = "ratio",
           frob: FrobMatrix2 | None = None) -> LSeriesPadic:
    """
    ``L_unit(kappa, T)``: ``route="euler"`` multiplies ``(1 - pi0^kappa T^deg)^(-1)``
    over closed points; ``route="ratio"`` divides ``L(Sym^(infty, kappa), T)`` by
    ``L(Sym^(infty, kappa-2), qT)``.
    """
    kappa = _kappa(kappa)
    if route == "euler":
        theta = _euler_theta(prof.p, prof.N_padic + 2)
        S = _euler_factors(kappa, prof.p, prof.a, prof.M_T, theta, sym=False)
        return _lseries(S, None, {"route": "euler", "kappa": kappa.label()})
    if route != "ratio":
        raise ConfigurationError(f"unknown route {route!r}")
    q = prof.q
    A = l_sym_inf(kappa, prof, frob)
    B = l_sym_inf(kappa.shifted(-2), prof, frob)
    Bs = B.series()
    Bq = OmegaSeries(Bs.p, Bs.N, Bs.data * [q ** i for i in range(Bs.length)], Bs.prec)
    R = A.series() * Bq.inverse()
    neff = [min(A.n_eff[: m + 1] + [x + m for x in B.n_eff[: m + 1]]) for m in range(R.length)]
    return LSeriesPadic([R[m] for m in range(R.length)], neff,
                        {"route": "ratio", "kappa": kappa.label()})


# ---------------------------------------------------------------------------
# finite symmetric powers and the reduced matrix on R

def finite_sym_check(k: int, prof: PrecisionProfile, exact_coeffs=None,
                     frob: FrobMatrix2 | None = None) -> dict:
    """
    Compare ``L(Sym^k)`` from the exact pipeline with
    ``L(Sym^(infty,k), T) / L(Sym^(infty, -(k+2)), q^(k+1) T)``.
    """
    from .exact import l_sym_k_coeffs
    if exact_coeffs is None:
        exact_coeffs = l_sym_k_coeffs(prof.p, prof.a, k, prof.M_T).coeffs
    q = prof.q
    A = l_sym_inf(k, prof, frob)
    B = l_sym_inf(-(k + 2), prof, frob)
    Bs = B.series()
    sc = q ** (k + 1)
    Bq = OmegaSeries(Bs.p, Bs.N, Bs.data * [sc ** i for i in range(Bs.length)], Bs.prec)
    R = A.series() * Bq.inverse()
    rows = []
    ok = True
    for m in range(prof.M_T + 1):
        neff = min(A.n_eff[: m + 1] + [x + m * (k + 1) * prof.a for x in B.n_eff[: m + 1]])
        c = R[m]
        e = int(exact_coeffs[m]) if m < len(exact_coeffs) else 0
        v = (c - e).valuation()
        agree = neff if (v.is_infinite or not v.exact) else min(neff, v.numerator // (c.p - 1))
        good = agree >= neff
        ok = ok and good
        rows.append({"m": m, "exact": e, "agreement_digits": agree, "N_eff": neff, "ok": good})
    return {"k": k, "ok": ok, "rows": rows}


def reduced_frobenius_R(kappa, frob: FrobMatrix2, N_R: int, M_w: int) -> list[list[PadicElem]]:
    """
    Matrix of ``beta`` induced on ``R`` (basis ``t^n``, ``n <= N_R``): the image of
    ``t^n`` is ``psi_t(t^n sum_j A1^kappa (A3/A1)^j / j! w^(j))`` reduced to ``R``.
    """
    kappa = _kappa(kappa)
    if kappa.is_nonneg_integer:
        raise ConfigurationError("R-reduction needs kappa outside Z_{>=0}")
    q = frob.p ** frob.level
    L = min(frob.A1.length, q * N_R + 1)
    A1, A3 = frob.A1.resized(L), frob.A3.resized(L)
    p = A1.p
    A3t = A3 * A1.inverse()
    base = A1 ** kappa.value
    comps = []
    cur = base
    for j in range(M_w + 1):
        comps.append(_divide_int(cur, factorial(j)))
        cur = cur * A3t
    out = [[None] * (N_R + 1) for _ in range(N_R + 1)]
    for n in range(N_R + 1):
        rows = {j: s.shift(n).decimate(q, N_R + 1) for j, s in enumerate(comps)}
        r = reduce_to_R(kappa, SymBlock(kappa, rows, N_R + 1))
        for n2 in range(N_R + 1):
            out[n2][n] = r[n2]
    return out
