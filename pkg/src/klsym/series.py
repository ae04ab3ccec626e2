"""
Truncated power series in one variable over ``Omega``.

A series of length ``L`` stores the coefficients of ``t^0 .. t^(L-1)`` as an
integer array of shape ``(p-1, L)``: row ``j`` holds the ``pi^j`` coordinates.
Products are computed with a single FLINT integer polynomial product after
Kronecker packing in ``pi`` (``pi`` gets a slot of width ``2(p-1)-1``), followed
by folding ``pi^(p-1) = -p``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from flint import fmpz_poly

from .padic import ConfigurationError, PadicElem, Valuation, ord_p

__all__ = ["OmegaSeries"]


def _obj_zeros(shape) -> np.ndarray:
    a = np.empty(shape, dtype=object)
    a.fill(0)
    return a


class OmegaSeries:
    """
    ``sum_n c_n t^n + O(t^L)`` with ``c_n`` in ``Omega`` known modulo ``pi^prec``.
    """

    __slots__ = ("p", "N", "data", "prec")

    def __init__(self, p: int, N: int, data: np.ndarray, prec: int | None = None):
        self.p = p
        self.N = N
        horizon = (p - 1) * N
        self.prec = horizon if prec is None else min(prec, horizon)
        if data.shape[0] != p - 1:
            raise ConfigurationError("series data must have p-1 rows")
        self.data = data % (p ** N)

    # -- constructors -------------------------------------------------
    @classmethod
    def zeros(cls, p: int, N: int, L: int) -> "OmegaSeries":
        return cls(p, N, _obj_zeros((p - 1, L)))

    @classmethod
    def from_elems(cls, elems: Sequence[PadicElem], L: int | None = None,
                   p: int | None = None, N: int | None = None) -> "OmegaSeries":
        if elems:
            p = elems[0].p
            N = min(e.N for e in elems) if N is None else N
        L = len(elems) if L is None else L
        data = _obj_zeros((p - 1, L))
        prec = (p - 1) * N
        for n, e in enumerate(elems[:L]):
            for j, c in enumerate(e.coeffs):
                data[j, n] = c
            prec = min(prec, e.prec)
        return cls(p, N, data, prec)

    @classmethod
    def from_ints(cls, p: int, N: int, values: Sequence[int], L: int | None = None) -> "OmegaSeries":
        L = len(values) if L is None else L
        data = _obj_zeros((p - 1, L))
        for n, v in enumerate(values[:L]):
            data[0, n] = v
        return cls(p, N, data)

    @classmethod
    def constant(cls, c: PadicElem | int, L: int, p: int | None = None,
                 N: int | None = None) -> "OmegaSeries":
        if isinstance(c, int):
            c = PadicElem.from_int(p, N, c)
        return cls.from_elems([c], L)

    def copy(self) -> "OmegaSeries":
        return OmegaSeries(self.p, self.N, self.data.copy(), self.prec)

    # -- access -------------------------------------------------------
    @property
    def length(self) -> int:
        return self.data.shape[1]

    def __len__(self):
        return self.length

    def __getitem__(self, n: int) -> PadicElem:
        if n >= self.length:
            return PadicElem(self.p, self.N, (0,) * (self.p - 1), self.prec)
        return PadicElem(self.p, self.N, tuple(self.data[:, n]), self.prec)

    def coefficients(self) -> list[PadicElem]:
        return [self[n] for n in range(self.length)]

    def valuations(self) -> list[Valuation]:
        return [self[n].valuation() for n in range(self.length)]

    def valuation(self) -> Valuation:
        """Minimum coefficient valuation."""
        p = self.p
        best = None
        for j in range(p - 1):
            for c in self.data[j]:
                if c:
                    v = (p - 1) * ord_p(c, p) + j
                    if best is None or v < best:
                        best = v
        if best is not None and best < self.prec:
            return Valuation(best, p - 1, True)
        if best is None and self.prec >= (p - 1) * self.N:
            return Valuation(None, p - 1, True)
        return Valuation(self.prec, p - 1, False)

    def is_zero(self) -> bool:
        v = self.valuation()
        return v.is_infinite or not v.exact

    def _like(self, data: np.ndarray, prec: int) -> "OmegaSeries":
        return OmegaSeries(self.p, self.N, data, prec)

    def resized(self, L: int) -> "OmegaSeries":
        if L <= self.length:
            return self._like(self.data[:, :L].copy(), self.prec)
        data = _obj_zeros((self.p - 1, L))
        data[:, :self.length] = self.data
        return self._like(data, self.prec)

    # -- ring operations ----------------------------------------------
    def _coerce(self, other) -> "OmegaSeries":
        if isinstance(other, OmegaSeries):
            if other.p != self.p:
                raise ConfigurationError("prime mismatch")
            return other
        if isinstance(other, (int, PadicElem)):
            return OmegaSeries.constant(other, 1, self.p, self.N)
        raise TypeError(f"cannot combine OmegaSeries with {type(other).__name__}")

    def __add__(self, other):
        other = self._coerce(other)
        L = max(self.length, other.length)
        a = self.resized(L).data
        a[:, :other.length] += other.data
        return OmegaSeries(self.p, min(self.N, other.N), a, min(self.prec, other.prec))

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.data, self.prec)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale_int(self, c: int) -> "OmegaSeries":
        v = ord_p(c, self.p)
        prec = (self.p - 1) * self.N if v is None else self.prec + (self.p - 1) * v
        return self._like(self.data * c, prec)

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale_int(other)
        other = self._coerce(other)
        return self.mul(other, self.length if other.length == 1 else min(self.length, other.length))

    __rmul__ = __mul__

    def mul(self, other: "OmegaSeries", L: int) -> "OmegaSeries":
        """Product truncated to length ``L``."""
        p = self.p
        d = p - 1
        w = 2 * d - 1
        la, lb = min(self.length, L), min(other.length, L)
        pa = [0] * (la * w)
        pb = [0] * (lb * w)
        for j in range(d):
            pa[j::w] = list(self.data[j, :la])
            pb[j::w] = list(other.data[j, :lb])
        prod = (fmpz_poly(pa) * fmpz_poly(pb)).coeffs()
        need = L * w
        prod = [int(c) for c in prod[:need]]
        prod += [0] * (need - len(prod))
        arr = np.array(prod, dtype=object).reshape(L, w).T
        res = arr[:d].copy()
        for k in range(w - 1, d - 1, -1):
            res[k - d] -= p * arr[k]
        va, vb = self.valuation(), other.valuation()
        pa_ = va.numerator if va.exact and va.numerator is not None else self.prec
        pb_ = vb.numerator if vb.exact and vb.numerator is not None else other.prec
        prec = min(self.prec + pb_, other.prec + pa_)
        return OmegaSeries(p, min(self.N, other.N), res, prec)

    def __pow__(self, e: int) -> "OmegaSeries":
        if e < 0:
            return self.inverse() ** (-e)
        result = OmegaSeries.constant(1, self.length, self.p, self.N)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> "OmegaSeries":
        """Inverse of a series whose constant term is a unit (Newton iteration)."""
        c0 = self[0]
        y = OmegaSeries.constant(c0 ** -1, self.length)
        k = 1
        while k < self.length:
            k = min(2 * k, self.length)
            y = y * (2 - self * y)
        return y.with_prec(self.prec)

    def with_prec(self, prec: int) -> "OmegaSeries":
        return self._like(self.data, min(self.prec, prec))

    # -- structural operations ----------------------------------------
    def shift(self, k: int) -> "OmegaSeries":
        """Multiply by ``t^k`` (``k >= 0``) or divide by ``t^(-k)``, keeping the length."""
        L = self.length
        data = _obj_zeros((self.p - 1, L))
        if k >= 0:
            if k < L:
                data[:, k:] = self.data[:, :L - k]
        else:
            data[:, :L + k] = self.data[:, -k:]
        return self._like(data, self.prec)

    def div_pi(self) -> "OmegaSeries":
        """Exact division by ``pi``; loses one pi-unit of absolute precision."""
        p = self.p
        top = self.data[0]
        if any(c % p for c in top):
            raise ArithmeticError("series is not divisible by pi")
        data = np.vstack([self.data[1:], [-(c // p) for c in top]])
        return self._like(data, self.prec - 1)

    def mul_pi(self, k: int = 1) -> "OmegaSeries":
        data = self.data
        for _ in range(k):
            data = np.vstack([[-self.p * c for c in data[-1]], data[:-1]])
        return self._like(data, self.prec + k)

    def t_derivative(self) -> "OmegaSeries":
        """``t d/dt``."""
        n = np.arange(self.length, dtype=object)
        return self._like(self.data * n, self.prec)

    def substitute_power(self, k: int, L: int | None = None) -> "OmegaSeries":
        """``f(t^k)`` truncated to length ``L`` (default: same length)."""
        L = self.length if L is None else L
        data = _obj_zeros((self.p - 1, L))
        m = min(self.length, (L - 1) // k + 1)
        data[:, 0:m * k:k] = self.data[:, :m]
        return self._like(data, self.prec)

    def decimate(self, k: int, L: int | None = None) -> "OmegaSeries":
        """Keep exponents divisible by ``k`` and divide them by ``k``."""
        sub = self.data[:, ::k]
        L = sub.shape[1] if L is None else L
        data = _obj_zeros((self.p - 1, L))
        m = min(L, sub.shape[1])
        data[:, :m] = sub[:, :m]
        return self._like(data, self.prec)

    def evaluate(self, tau: PadicElem) -> PadicElem:
        acc = PadicElem.zero(self.p, self.N)
        for n in range(self.length - 1, -1, -1):
            acc = acc * tau + self[n]
        return acc.with_prec(self.prec)

    def congruent(self, other, prec: int | None = None) -> bool:
        diff = self - self._coerce(other)
        bound = diff.prec if prec is None else min(prec, diff.prec)
        v = diff.valuation()
        return v.is_infinite or not v.exact or v.numerator >= bound

    def agreement(self, other, terms: int | None = None) -> Valuation:
        """Valuation of ``self - other`` on the first ``terms`` coefficients."""
        diff = self - self._coerce(other)
        if terms is not None:
            diff = diff.resized(terms)
        return diff.valuation()

    def __repr__(self):
        return f"OmegaSeries(p={self.p}, L={self.length}, prec={self.prec})"
