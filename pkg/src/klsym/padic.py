"""
Arithmetic in the totally ramified extension ``Omega = Q_p(pi)``, ``pi^(p-1) = -p``.

Elements are stored as integer coordinates in the basis ``1, pi, ..., pi^(p-2)``,
each reduced modulo ``p^N``.  Besides the storage modulus every element carries
an absolute precision ``prec`` measured in pi-units (one pi-unit is a valuation
of ``1/(p-1)``): the element is only known modulo ``pi^prec``.  Ring operations
take the minimum of the inputs' precisions; exact division by ``pi`` lowers it
by one, so precision loss caused by the reduction algorithms stays visible.

Valuations are normalized so that ``v(p) = 1`` and ``v(pi) = 1/(p-1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering

from flint import fmpz

__all__ = [
    "ConfigurationError",
    "PrecisionError",
    "NonUnitError",
    "Valuation",
    "PadicElem",
    "PrecisionProfile",
    "omega_mul",
    "omega_valuation",
    "invert_unit",
    "teichmuller",
    "hensel_quadratic_unit_root",
    "ord_p",
]


class ConfigurationError(ValueError):
    """Incompatible primes, precisions or profile parameters."""


class PrecisionError(ArithmeticError):
    """A result cannot be certified at the requested precision."""


class NonUnitError(ArithmeticError):
    """Raised when a unit was required but the element has positive valuation."""


def ord_p(n: int, p: int) -> int | None:
    """``p``-adic valuation of a rational integer, ``None`` for zero."""
    if n == 0:
        return None
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@total_ordering
@dataclass(frozen=True)
class Valuation:
    """
    A valuation ``numerator/(p-1)``.  ``numerator=None`` encodes ``+infinity``.

    ``exact=False`` marks a lower bound, which is what one gets for elements
    that vanish up to the precision horizon.
    """

    numerator: int | None
    denominator: int
    exact: bool = True

    @property
    def is_infinite(self) -> bool:
        return self.numerator is None

    def value(self) -> Fraction | None:
        if self.numerator is None:
            return None
        return Fraction(self.numerator, self.denominator)

    def _key(self):
        return (1, 0) if self.numerator is None else (0, Fraction(self.numerator, self.denominator))

    def __eq__(self, other):
        if not isinstance(other, Valuation):
            return NotImplemented
        return self._key() == other._key()

    def __lt__(self, other):
        if not isinstance(other, Valuation):
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self):
        return hash(self._key())

    def __add__(self, other: "Valuation") -> "Valuation":
        if self.denominator != other.denominator:
            raise ConfigurationError("valuations over different primes")
        if self.numerator is None or other.numerator is None:
            return Valuation(None, self.denominator, self.exact and other.exact)
        return Valuation(self.numerator + other.numerator, self.denominator,
                         self.exact and other.exact)

    def __str__(self):
        if self.numerator is None:
            s = "+oo"
        else:
            s = str(Fraction(self.numerator, self.denominator))
        return s if self.exact else ">=" + s


def _pi_power(p: int, e: int, mod: int) -> tuple[int, ...]:
    k, r = divmod(e, p - 1)
    out = [0] * (p - 1)
    out[r] = (-p) ** k % mod
    return tuple(out)


@dataclass(frozen=True)
class PadicElem:
    """
    Element of ``Omega`` known modulo ``pi^prec``.

    ``coeffs[j]`` is the coordinate of ``pi^j``; coordinates live in
    ``[0, p^N)``.  ``prec`` defaults to the storage horizon ``(p-1)*N``.
    """

    p: int
    N: int
    coeffs: tuple[int, ...]
    prec: int = field(default=-1)

    def __post_init__(self):
        if self.N < 1:
            raise ConfigurationError("precision N must be >= 1")
        if len(self.coeffs) != self.p - 1:
            raise ConfigurationError("expected p-1 coordinates")
        horizon = (self.p - 1) * self.N
        prec = horizon if self.prec < 0 else min(self.prec, horizon)
        mod = self.p ** self.N
        object.__setattr__(self, "coeffs", tuple(int(c) % mod for c in self.coeffs))
        object.__setattr__(self, "prec", prec)

    # -- constructors -------------------------------------------------
    @classmethod
    def from_int(cls, p: int, N: int, a: int) -> "PadicElem":
        return cls(p, N, (a,) + (0,) * (p - 2))

    @classmethod
    def zero(cls, p: int, N: int) -> "PadicElem":
        return cls.from_int(p, N, 0)

    @classmethod
    def one(cls, p: int, N: int) -> "PadicElem":
        return cls.from_int(p, N, 1)

    @classmethod
    def pi(cls, p: int, N: int, e: int = 1) -> "PadicElem":
        """The element ``pi^e`` for ``e >= 0``."""
        return cls(p, N, _pi_power(p, e, p ** N))

    # -- basic properties ---------------------------------------------
    @property
    def modulus(self) -> int:
        return self.p ** self.N

    @property
    def d(self) -> int:
        return self.p - 1

    def is_zero(self) -> bool:
        """True if the element vanishes modulo ``pi^prec``."""
        return self.valuation().is_infinite or not self.valuation().exact

    def valuation(self) -> Valuation:
        return omega_valuation(self)

    def _check(self, other: "PadicElem"):
        if self.p != other.p:
            raise ConfigurationError(f"prime mismatch: {self.p} vs {other.p}")

    def _coerce(self, other) -> "PadicElem":
        if isinstance(other, PadicElem):
            self._check(other)
            return other
        if isinstance(other, int):
            return PadicElem.from_int(self.p, self.N, other)
        raise TypeError(f"cannot combine PadicElem with {type(other).__name__}")

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        other = self._coerce(other)
        N = min(self.N, other.N)
        return PadicElem(self.p, N, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)),
                         min(self.prec, other.prec))

    __radd__ = __add__

    def __neg__(self):
        return PadicElem(self.p, self.N, tuple(-a for a in self.coeffs), self.prec)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            v = ord_p(other, self.p)
            gain = 0 if v is None else v * (self.p - 1)
            prec = (self.p - 1) * self.N if v is None else self.prec + gain
            return PadicElem(self.p, self.N, tuple(a * other for a in self.coeffs), prec)
        return omega_mul(self, self._coerce(other))

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "PadicElem":
        if e < 0:
            return invert_unit(self) ** (-e)
        result = PadicElem.one(self.p, self.N)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def div_pi(self, k: int = 1) -> "PadicElem":
        """
        Exact division by ``pi^k``; the element must be divisible.
        The absolute precision drops by ``k`` pi-units.
        """
        x = list(self.coeffs)
        p = self.p
        for _ in range(k):
            if x[0] % p:
                raise ArithmeticError("element is not divisible by pi")
            x = x[1:] + [-(x[0] // p)]
        # the top coordinate lost one p-adic digit of information
        return PadicElem(p, self.N, tuple(x), self.prec - k)

    def shift_pi(self, k: int) -> "PadicElem":
        """Multiplication by ``pi^k`` (``k >= 0``)."""
        return self * PadicElem.pi(self.p, self.N, k) if k else self

    def congruent(self, other, prec: int | None = None) -> bool:
        """
        ``self == other`` modulo ``pi^prec`` (default: the common precision).
        """
        other = self._coerce(other)
        diff = self - other
        bound = diff.prec if prec is None else min(prec, diff.prec)
        v = diff.valuation()
        return v.is_infinite or not v.exact or v.numerator >= bound

    def with_prec(self, prec: int) -> "PadicElem":
        return PadicElem(self.p, self.N, self.coeffs, min(prec, self.prec))

    def lift_N(self, N: int) -> "PadicElem":
        """Re-embed with a different storage modulus (precision is not increased)."""
        return PadicElem(self.p, N, self.coeffs, self.prec)

    def residue(self) -> int:
        """Image in the residue field ``F_p``."""
        return self.coeffs[0] % self.p

    def to_json(self) -> dict:
        return {"p": self.p, "N": self.N, "prec": self.prec,
                "coeffs": [str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj: dict) -> "PadicElem":
        return cls(int(obj["p"]), int(obj["N"]), tuple(int(c) for c in obj["coeffs"]),
                   int(obj.get("prec", -1)))

    def __repr__(self):
        terms = []
        for j, c in enumerate(self.coeffs):
            if c:
                terms.append(f"{c}" if j == 0 else f"{c}*pi^{j}")
        body = " + ".join(terms) if terms else "0"
        return f"PadicElem(p={self.p}, {body} + O(pi^{self.prec}))"


def omega_mul(x: PadicElem, y: PadicElem) -> PadicElem:
    """Product in ``Omega`` using ``pi^(p-1) = -p`` to fold high degrees."""
    if x.p != y.p:
        raise ConfigurationError(f"prime mismatch: {x.p} vs {y.p}")
    p = x.p
    d = p - 1
    r = [0] * (2 * d - 1)
    for i, a in enumerate(x.coeffs):
        if a:
            for j, b in enumerate(y.coeffs):
                r[i + j] += a * b
    for k in range(2 * d - 2, d - 1, -1):
        r[k - d] -= p * r[k]
    vx, vy = omega_valuation(x), omega_valuation(y)
    # relative precision argument: x*y is known modulo pi^(min(px + vy, py + vx))
    cands = []
    cands.append(x.prec + (vy.numerator if vy.numerator is not None and vy.exact else y.prec))
    cands.append(y.prec + (vx.numerator if vx.numerator is not None and vx.exact else x.prec))
    return PadicElem(p, min(x.N, y.N), tuple(r[:d]), min(cands))


def omega_valuation(x: PadicElem) -> Valuation:
    """
    ``min_j (p-1)*ord_p(c_j) + j`` in pi-units.  Zero modulo ``pi^prec`` is
    reported as the lower bound ``>= prec`` (or ``+oo`` when ``prec`` is the
    full storage horizon and every coordinate vanishes).
    """
    p = x.p
    best = None
    for j, c in enumerate(x.coeffs):
        if c == 0:
            continue
        v = (p - 1) * ord_p(c, p) + j
        if best is None or v < best:
            best = v
    if best is not None and best < x.prec:
        return Valuation(best, p - 1, True)
    if best is None and x.prec >= (p - 1) * x.N:
        return Valuation(None, p - 1, True)
    return Valuation(x.prec, p - 1, False)


def invert_unit(x: PadicElem) -> PadicElem:
    """Inverse of a unit by Newton iteration ``y <- y(2 - xy)``."""
    v = omega_valuation(x)
    if v.numerator != 0 or not v.exact:
        raise NonUnitError(f"element with valuation {v} is not a unit")
    p, N = x.p, x.N
    y = PadicElem.from_int(p, N, pow(x.coeffs[0], -1, p))
    known = 1
    target = x.prec
    while known < target:
        y = y * (2 - x * y)
        known *= 2
    return y.with_prec(x.prec)


def teichmuller(c: int, p: int, N: int) -> PadicElem:
    """
    Teichmueller lift of ``c in F_p^*``: the ``(p-1)``-st root of unity
    congruent to ``c``, found by iterating ``x -> x^p``.
    """
    c %= p
    if c == 0:
        raise ValueError("the Teichmueller lift of 0 is not a unit")
    mod = p ** N
    x = c
    for _ in range(N):
        x = pow(x, p, mod)
    return PadicElem.from_int(p, N, x)


def hensel_quadratic_unit_root(s: PadicElem, c: PadicElem) -> PadicElem:
    """
    The unit root of ``X^2 - s X + c`` when ``s`` is a unit and ``v(c) > 0``.
    Newton iteration seeded at ``s``; the other root is ``c/x``.
    """
    vs, vc = omega_valuation(s), omega_valuation(c)
    if vs.numerator != 0 or not vs.exact:
        raise NonUnitError("s is not a unit, so X^2 - sX + c has no unit root")
    if vc.exact and vc.numerator == 0:
        raise ValueError("c must have positive valuation")
    x = s
    prec = min(s.prec, c.prec)
    while True:
        x_new = x - (x * x - s * x + c) * invert_unit(2 * x - s)
        if x_new.congruent(x, prec):
            return x_new.with_prec(prec)
        x = x_new


@dataclass(frozen=True)
class PrecisionProfile:
    """
    Truncation choices for a computation.

    ``N_padic`` is the target absolute precision in ``p``-adic digits, ``N_t`` and
    ``M_w`` the ``t``- and ``w``-degree windows, ``U_x`` the ``x``-exponent bound
    and ``M_T`` the number of ``T``-coefficients of an L-series.
    """

    p: int = 5
    a: int = 1
    N_padic: int = 40
    N_t: int = 24
    U_x: int = 0
    M_w: int = 24
    M_T: int = 4

    def __post_init__(self):
        if self.p < 5 or not fmpz(self.p).is_prime():
            raise ConfigurationError("p must be a prime >= 5")
        for name in ("a", "N_padic", "N_t", "M_w", "M_T"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.U_x < 0:
            raise ConfigurationError("U_x must be non-negative (0 selects the default)")

    @property
    def q(self) -> int:
        return self.p ** self.a

    def to_json(self) -> dict:
        return {"p": self.p, "a": self.a, "N_padic": self.N_padic, "N_t": self.N_t,
                "U_x": self.U_x, "M_w": self.M_w, "M_T": self.M_T}

