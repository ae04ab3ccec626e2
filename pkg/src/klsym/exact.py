"""
Exact pipeline: finite fields, cyclotomic integers, Kloosterman sums and the
integer coefficients of symmetric-power L-functions.

Finite fields ``F_{p^d}`` are modelled as ``F_p[x]/(f)``.  Elements are encoded
as integers ``sum_i a_i p^i`` (base-``p`` digit vectors of the coordinates in
the power basis), which keeps them hashable and cheap to tabulate.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .padic import ConfigurationError, PadicElem, omega_valuation, ord_p

__all__ = [
    "FqField",
    "FqElem",
    "CycElem",
    "LPolynomial",
    "NewtonPolygon",
    "fq_trace",
    "kloosterman_sum",
    "kloosterman_counts_all",
    "fiber_power_sum",
    "complete_homog",
    "power_sums",
    "l_sym_k_coeffs",
    "exp_power_sums",
    "newton_polygon",
    "newton_bound_report",
    "proven_bound",
]


# ---------------------------------------------------------------------------
# polynomials over F_p (coefficient lists, lowest degree first)

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a: list[int], f: list[int], p: int) -> list[int]:
    a = [c % p for c in a]
    _trim(a)
    df = len(f) - 1
    inv = pow(f[-1], -1, p)
    while len(a) - 1 >= df:
        c = a[-1] * inv % p
        s = len(a) - 1 - df
        for i, fc in enumerate(f):
            a[s + i] = (a[s + i] - c * fc) % p
        _trim(a)
    return a


def _pmul(a: list[int], b: list[int], p: int) -> list[int]:
    if not a or not b:
        return []
    r = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                r[i + j] = (r[i + j] + x * y) % p
    return _trim(r)


def _pmulmod(a, b, f, p):
    return _pmod(_pmul(a, b, p), f, p)


def _ppowmod(a, e, f, p):
    result = [1]
    base = _pmod(a, f, p)
    while e:
        if e & 1:
            result = _pmulmod(result, base, f, p)
        base = _pmulmod(base, base, f, p)
        e >>= 1
    return result


def _pgcd(a, b, p):
    a, b = _trim([c % p for c in a]), _trim([c % p for c in b])
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def _prime_factors(n: int) -> list[int]:
    out, k = [], 2
    while k * k <= n:
        if n % k == 0:
            out.append(k)
            while n % k == 0:
                n //= k
        k += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(f: Sequence[int], p: int) -> bool:
    """Rabin's test: ``x^(p^d) = x mod f`` and ``gcd(x^(p^(d/r)) - x, f) = 1``."""
    f = _trim([c % p for c in f])
    d = len(f) - 1
    if d < 1:
        return False
    if d == 1:
        return True
    x = [0, 1]
    if _ppowmod(x, p ** d, f, p) != _pmod(x, f, p):
        return False
    for r in _prime_factors(d):
        h = _ppowmod(x, p ** (d // r), f, p)
        h = h + [0] * (2 - len(h))
        h[1] = (h[1] - 1) % p
        g = _pgcd(_trim(h), f, p)
        if len(g) != 1:
            return False
    return True


# ---------------------------------------------------------------------------
# finite fields

class FqField:
    """
    The field ``F_p[x]/(f)`` with ``deg f = degree``.

    Without an explicit modulus a monic irreducible polynomial is found by a
    seeded random search, so that runs are reproducible.
    """

    def __init__(self, p: int, degree: int, modulus: Sequence[int] | None = None, seed: int = 0):
        if degree < 1:
            raise ConfigurationError("degree must be >= 1")
        self.p = p
        self.degree = degree
        self.q = p ** degree
        if modulus is None:
            modulus = self._find_modulus(seed)
        modulus = [c % p for c in modulus]
        if len(modulus) != degree + 1 or modulus[-1] != 1:
            raise ConfigurationError("modulus must be monic of the requested degree")
        if not is_irreducible(modulus, p):
            raise ConfigurationError(f"modulus {modulus} is reducible over F_{p}")
        self.modulus = tuple(modulus)
        self._build_tables()

    def _find_modulus(self, seed: int) -> list[int]:
        if self.degree == 1:
            return [0, 1]
        rng = random.Random(seed * 1000003 + self.p * 101 + self.degree)
        while True:
            f = [rng.randrange(self.p) for _ in range(self.degree)] + [1]
            if f[0] and is_irreducible(f, self.p):
                return f

    # encoding between integers and digit vectors
    def _digits(self, a: int) -> list[int]:
        out = []
        for _ in range(self.degree):
            a, r = divmod(a, self.p)
            out.append(r)
        return out

    def _encode(self, coeffs: Sequence[int]) -> int:
        v = 0
        for c in reversed(list(coeffs)[:self.degree]):
            v = v * self.p + c % self.p
        return v

    def _mul_slow(self, a: int, b: int) -> int:
        r = _pmulmod(self._digits(a), self._digits(b), list(self.modulus), self.p)
        return self._encode(r)

    def _build_tables(self):
        q = self.q
        self._exp = None
        for cand in range(1, q):
            if self._order_is_full(cand):
                g = cand
                break
        else:  # pragma: no cover - a finite field always has a generator
            raise RuntimeError("no primitive element found")
        exp = [1] * (q - 1)
        for i in range(1, q - 1):
            exp[i] = self._mul_slow(exp[i - 1], g)
        log = [-1] * q
        for i, e in enumerate(exp):
            log[e] = i
        self.generator = g
        self._exp = exp
        self._log = log
        # digit-wise addition via integer arrays of digits
        digits = np.array([self._digits(a) for a in range(q)], dtype=np.int64).reshape(q, self.degree)
        self._digit_table = digits
        self._weights = np.array([self.p ** i for i in range(self.degree)], dtype=np.int64)
        # trace is F_p-linear: Tr(a) = sum_i a_i Tr(x^i)
        basis_tr = [fq_trace_direct(self, self.p ** i) for i in range(self.degree)]
        self._trace_table = (digits @ np.array(basis_tr, dtype=np.int64)) % self.p

    def _order_is_full(self, a: int) -> bool:
        n = self.q - 1
        for r in _prime_factors(n):
            if self._pow_slow(a, n // r) == 1:
                return False
        return True

    def _pow_slow(self, a: int, e: int) -> int:
        r = _ppowmod(self._digits(a), e, list(self.modulus), self.p)
        return self._encode(r)

    # arithmetic on encoded integers
    def add(self, a: int, b: int) -> int:
        s = (self._digit_table[a] + self._digit_table[b]) % self.p
        return int(s @ self._weights)

    def neg(self, a: int) -> int:
        s = (-self._digit_table[a]) % self.p
        return int(s @ self._weights)

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp[(self._log[a] + self._log[b]) % (self.q - 1)]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse in a field")
        return self._exp[(-self._log[a]) % (self.q - 1)]

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e > 0 else 1
        return self._exp[(self._log[a] * e) % (self.q - 1)]

    def trace_int(self, a: int) -> int:
        return int(self._trace_table[a])

    def from_int(self, c: int) -> int:
        """Image of a rational integer."""
        return c % self.p

    def __call__(self, value: int | Sequence[int]) -> "FqElem":
        """Element from its integer encoding or from power-basis coordinates."""
        if isinstance(value, int):
            return FqElem(self, value % self.q)
        return FqElem(self, self._encode(value))

    def gen(self) -> "FqElem":
        """The class of ``x``."""
        return FqElem(self, self._encode([0, 1]) if self.degree > 1 else 0)

    def units(self) -> list["FqElem"]:
        return [FqElem(self, a) for a in range(1, self.q)]

    def log_traces(self) -> np.ndarray:
        """``Tr(g^i)`` for ``i = 0..q-2`` where ``g`` is the stored generator."""
        return self._trace_table[np.array(self._exp)]

    def __repr__(self):
        return f"FqField(p={self.p}, degree={self.degree}, modulus={list(self.modulus)})"

    def __eq__(self, other):
        return isinstance(other, FqField) and (self.p, self.modulus) == (other.p, other.modulus)

    def __hash__(self):
        return hash((self.p, self.modulus))


@dataclass(frozen=True)
class FqElem:
    field: FqField = field(repr=False)
    value: int

    def _v(self, other) -> int:
        if isinstance(other, FqElem):
            if other.field != self.field:
                raise ConfigurationError("elements of different fields")
            return other.value
        return self.field.from_int(int(other))

    def __add__(self, other):
        return FqElem(self.field, self.field.add(self.value, self._v(other)))

    __radd__ = __add__

    def __neg__(self):
        return FqElem(self.field, self.field.neg(self.value))

    def __sub__(self, other):
        return self + (-FqElem(self.field, self._v(other)))

    def __mul__(self, other):
        return FqElem(self.field, self.field.mul(self.value, self._v(other)))

    __rmul__ = __mul__

    def inverse(self):
        return FqElem(self.field, self.field.inv(self.value))

    def __truediv__(self, other):
        return self * FqElem(self.field, self._v(other)).inverse()

    def __rtruediv__(self, other):
        return FqElem(self.field, self._v(other)) * self.inverse()

    def __pow__(self, e: int):
        return FqElem(self.field, self.field.pow(self.value, e))

    def is_zero(self) -> bool:
        return self.value == 0

    def coords(self) -> list[int]:
        return self.field._digits(self.value)


def fq_trace_direct(field: FqField, a: int) -> int:
    """``sum_{i<d} a^(p^i)`` computed with polynomial arithmetic."""
    f, p = list(field.modulus), field.p
    x = field._digits(a)
    acc: list[int] = []
    cur = _pmod(x, f, p)
    for _ in range(field.degree):
        acc = _trim([((acc[i] if i < len(acc) else 0) + (cur[i] if i < len(cur) else 0)) % p
                     for i in range(max(len(acc), len(cur)))])
        cur = _ppowmod(cur, p, f, p)
    if len(acc) > 1:  # pragma: no cover - the trace always lies in F_p
        raise ArithmeticError("trace did not land in the prime field")
    return acc[0] if acc else 0


def fq_trace(x: FqElem) -> int:
    """Absolute trace ``Tr_{F_{p^d}/F_p}(x)`` as a residue in ``[0, p)``."""
    return fq_trace_direct(x.field, x.value)


def embed_field(small: FqField, big: FqField) -> dict[int, int]:
    """
    An embedding ``small -> big`` (as a table on encoded elements), obtained by
    locating a root of the smaller modulus in the larger field.
    """
    if big.p != small.p or big.degree % small.degree:
        raise ConfigurationError("not a subfield")
    if small.degree == 1:
        return {a: a for a in range(small.p)}

    def horner(coeffs, x):
        acc = 0
        for c in reversed(list(coeffs)):
            acc = big.add(big.mul(acc, x), c % big.p)
        return acc

    step = (big.q - 1) // (small.q - 1)
    for k in range(small.q - 1):
        root = big._exp[k * step]
        if horner(small.modulus, root) == 0:
            return {a: horner(small._digits(a), root) for a in range(small.q)}
    raise RuntimeError("no root of the subfield modulus found")  # pragma: no cover


# ---------------------------------------------------------------------------
# cyclotomic integers

@dataclass(frozen=True)
class CycElem:
    """Element of ``Z[zeta_p]`` in the basis ``1, zeta, ..., zeta^(p-2)``."""

    p: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.p - 1:
            raise ConfigurationError("expected p-1 coordinates")
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))

    @classmethod
    def from_int(cls, p: int, n: int) -> "CycElem":
        return cls(p, (n,) + (0,) * (p - 2))

    @classmethod
    def zeta(cls, p: int, k: int = 1) -> "CycElem":
        return cls.from_exponent_counts(p, [1 if j == k % p else 0 for j in range(p)])

    @classmethod
    def from_exponent_counts(cls, p: int, counts: Sequence[int]) -> "CycElem":
        """``sum_j counts[j] zeta^j`` for ``j = 0..p-1``."""
        top = int(counts[p - 1])
        return cls(p, tuple(int(counts[j]) - top for j in range(p - 1)))

    def exponent_vector(self) -> list[int]:
        """Coordinates in ``Z[x]/(x^p - 1)`` with zero ``zeta^(p-1)`` entry."""
        return list(self.coeffs) + [0]

    def _coerce(self, other) -> "CycElem":
        if isinstance(other, CycElem):
            if other.p != self.p:
                raise ConfigurationError("prime mismatch")
            return other
        if isinstance(other, int):
            return CycElem.from_int(self.p, other)
        raise TypeError(f"cannot combine CycElem with {type(other).__name__}")

    def __add__(self, other):
        o = self._coerce(other)
        return CycElem(self.p, tuple(a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return CycElem(self.p, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            return CycElem(self.p, tuple(a * other for a in self.coeffs))
        o = self._coerce(other)
        p = self.p
        r = [0] * p
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(o.coeffs):
                    if b:
                        r[(i + j) % p] += a * b
        return CycElem.from_exponent_counts(p, r)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "CycElem":
        result = CycElem.from_int(self.p, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def galois(self, a: int) -> "CycElem":
        """Image under ``zeta -> zeta^a``."""
        r = [0] * self.p
        for j, c in enumerate(self.coeffs):
            r[(j * a) % self.p] += c
        return CycElem.from_exponent_counts(self.p, r)

    def conjugate(self) -> "CycElem":
        return self.galois(-1)

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def to_int(self) -> int:
        if not self.is_rational():
            raise ValueError("cyclotomic integer is not rational")
        return self.coeffs[0]

    def embeddings(self) -> np.ndarray:
        """The ``p-1`` complex embeddings (double precision)."""
        p = self.p
        ks = np.arange(1, p)
        js = np.arange(p - 1)
        z = np.exp(2j * np.pi * np.outer(ks, js) / p)
        return z @ np.array([float(c) for c in self.coeffs])

    def __repr__(self):
        terms = []
        for j, c in enumerate(self.coeffs):
            if c:
                terms.append(str(c) if j == 0 else f"{c}*z^{j}")
        return "CycElem(" + (" + ".join(terms) if terms else "0") + ")"


# ---------------------------------------------------------------------------
# Kloosterman sums

def kloosterman_sum(field: FqField, t: FqElem | int) -> CycElem:
    """
    ``sum_{x != 0} zeta^{Tr(x + t/x)}`` by direct summation over the field.
    """
    tv = t.value if isinstance(t, FqElem) else field.from_int(t)
    if tv == 0:
        raise ValueError("the Kloosterman sum is defined for t != 0")
    counts = [0] * field.p
    for x in range(1, field.q):
        y = field.add(x, field.mul(tv, field.inv(x)))
        counts[fq_trace_direct(field, y)] += 1
    return CycElem.from_exponent_counts(field.p, counts)


def kloosterman_counts_all(field: FqField) -> np.ndarray:
    """
    Exponent counts of the Kloosterman sum of ``t = g^s`` for all ``s``.

    Row ``s`` counts ``#{x : Tr(x + t/x) = j}``.  With ``x = g^i`` the trace is
    ``tau[i] + tau[s-i]`` by additivity, so each row is a cyclic correlation.
    """
    p = field.p
    tau = field.log_traces().astype(np.int64)
    Q = field.q - 1
    i = np.arange(Q)
    out = np.zeros((Q, p), dtype=np.int64)
    for s in range(Q):
        vals = (tau + tau[(s - i) % Q]) % p
        out[s] = np.bincount(vals, minlength=p)
    return out


def fiber_power_sum(q_t: int, s, m: int):
    """``pi0^m + pi1^m`` from ``p_j = s p_{j-1} - q_t p_{j-2}``."""
    if m == 0:
        return s * 0 + 2
    prev, cur = s * 0 + 2, s
    for _ in range(m - 1):
        prev, cur = cur, s * cur - prev * q_t
    return cur


def complete_homog(k: int, e1, e2):
    """``h_k(a, b)`` from ``e1 = a + b`` and ``e2 = ab``."""
    if k == 0:
        return e1 * 0 + 1
    prev, cur = e1 * 0 + 1, e1
    for _ in range(k - 1):
        prev, cur = cur, e1 * cur - e2 * prev
    return cur


def power_sums(p: int, a: int, k: int, M: int, seed: int = 0) -> list[int]:
    """
    ``S_k(m) = sum_{t in F_{q^m}^*} h_k(pi0(t), pi1(t))`` for ``m = 1..M``.

    Fibers with equal Kloosterman sums are grouped; every sum is checked to be
    a rational integer.
    """
    out = []
    for m in range(1, M + 1):
        F = FqField(p, a * m, seed=seed)
        qm = F.q
        counts = kloosterman_counts_all(F)
        rows, mult = np.unique(counts, axis=0, return_counts=True)
        total = CycElem.from_int(p, 0)
        for row, c in zip(rows, mult):
            kl = CycElem.from_exponent_counts(p, [int(v) for v in row])
            total = total + complete_homog(k, -kl, qm) * int(c)
        if not total.is_rational():
            raise ArithmeticError(f"S_{k}({m}) = {total} is not a rational integer")
        out.append(total.to_int())
    return out


def exp_power_sums(S: Sequence[int]) -> list[Fraction]:
    """Coefficients of ``exp(sum_m S[m-1] T^m / m)`` through ``T^len(S)``."""
    c = [Fraction(1)]
    for m in range(1, len(S) + 1):
        acc = sum((S[r - 1] * c[m - r] for r in range(1, m + 1)), Fraction(0))
        c.append(acc / m)
    return c


@dataclass(frozen=True)
class LPolynomial:
    coeffs: tuple[int, ...]
    p: int
    a: int
    k: int
    M: int
    power_sums: tuple[int, ...] = ()

    def to_json(self) -> dict:
        return {"p": self.p, "a": self.a, "k": self.k, "M": self.M,
                "coeffs": [str(c) for c in self.coeffs],
                "power_sums": [str(s) for s in self.power_sums]}


def l_sym_k_coeffs(p: int, a: int, k: int, M: int, seed: int = 0) -> LPolynomial:
    """
    ``c_0 .. c_M`` of ``L(Sym^k Kl, T) = exp(sum_m S_k(m) T^m / m)``.
    The exponential is evaluated over the rationals and then checked to be integral.
    """
    if p < 5:
        raise ConfigurationError("p must be >= 5")
    if k < 1 or M < 0:
        raise ConfigurationError("need k >= 1 and M >= 0")
    S = power_sums(p, a, k, M, seed=seed)
    c = exp_power_sums(S)
    for m, x in enumerate(c):
        if x.denominator != 1:
            raise ArithmeticError(f"c_{m} = {x} is not an integer")
    return LPolynomial(tuple(int(x) for x in c), p, a, k, M, tuple(S))


# ---------------------------------------------------------------------------
# Newton polygons

@dataclass(frozen=True)
class NewtonPoint:
    m: int
    value: Fraction
    exact: bool


@dataclass(frozen=True)
class NewtonPolygon:
    points: tuple[NewtonPoint, ...]
    vertices: tuple[tuple[int, Fraction], ...]

    def slopes(self) -> list[Fraction]:
        v = self.vertices
        return [(v[i + 1][1] - v[i][1]) / (v[i + 1][0] - v[i][0]) for i in range(len(v) - 1)]

    def to_csv(self) -> str:
        lines = ["m,ord_q,exact,vertex"]
        vs = {m for m, _ in self.vertices}
        for pt in self.points:
            lines.append(f"{pt.m},{pt.value},{int(pt.exact)},{int(pt.m in vs)}")
        return "\n".join(lines) + "\n"


def _lower_hull(pts: list[tuple[int, Fraction]]) -> list[tuple[int, Fraction]]:
    hull: list[tuple[int, Fraction]] = []
    for pt in sorted(pts):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point if it lies on or above the chord
            if (y2 - y1) * (pt[0] - x1) >= (pt[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def _ord_q(c, p: int, a: int) -> tuple[Fraction | None, bool]:
    if isinstance(c, PadicElem):
        v = omega_valuation(c)
        if v.numerator is None:
            return None, True
        return Fraction(v.numerator, (p - 1) * a), v.exact
    if isinstance(c, tuple):
        val, exact = c
        return (None if val is None else Fraction(val) / a), exact
    v = ord_p(int(c), p)
    return (None if v is None else Fraction(v, a)), True


def newton_polygon(coeffs: Iterable, p: int, a: int = 1) -> NewtonPolygon:
    """
    Newton polygon of ``sum c_m T^m`` with respect to ``ord_q``.

    Entries may be integers, ``PadicElem`` values, or ``(ord_p value, exact)``
    pairs.  Vanishing coefficients are skipped and lower-bound points are
    recorded but never used as vertices, so they cannot pull the hull down.
    """
    pts = []
    for m, c in enumerate(coeffs):
        val, exact = _ord_q(c, p, a)
        if val is None:
            continue
        pts.append(NewtonPoint(m, val, exact))
    hull = _lower_hull([(pt.m, pt.value) for pt in pts if pt.exact])
    return NewtonPolygon(tuple(pts), tuple(hull))


def proven_bound(p: int, m: int) -> Fraction:
    """``(1 - 1/(p-1)) m (m-1)``."""
    return Fraction(p - 2, p - 1) * m * (m - 1)


def newton_bound_report(coeffs: Sequence, p: int, a: int = 1) -> list[dict]:
    """
    Per coefficient: ``ord_q c_m`` against the proven bound and against the
    sharper heuristic ``m(m-1)``.  The proven bound's status is ``pass``,
    ``fail`` or ``indeterminate`` (a lower bound below the target).
    """
    rows = []
    for m, c in enumerate(coeffs):
        val, exact = _ord_q(c, p, a)
        bound = proven_bound(p, m)
        heur = Fraction(m * (m - 1))
        if val is None:
            status, heur_ok = "pass", True
        elif val >= bound:
            status, heur_ok = "pass", (val >= heur) if exact else None
        else:
            status, heur_ok = ("fail" if exact else "indeterminate"), (False if exact else None)
        rows.append({"m": m, "ord_q": None if val is None else str(val), "exact": exact,
                     "bound": str(bound), "status": status, "heuristic_m(m-1)": heur_ok})
    return rows
