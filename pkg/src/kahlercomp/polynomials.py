"""Exact polynomial arithmetic in z_1..z_n and their conjugates.

Coefficients are complex numbers with rational real/imaginary parts, so every
algebraic step (products, determinants, truncated log series, derivatives) is
exact.  Floating point enters only when a polynomial is evaluated at a point;
``NumericPoly`` provides the fast vectorized path for that.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

__all__ = ["QC", "CPoly", "NumericPoly"]


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        # exact binary expansion of the float, so round trips are bit-exact
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Fraction")


class QC:
    """Complex scalar with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _to_fraction(re)
        self.im = _to_fraction(im)

    @classmethod
    def from_number(cls, v) -> "QC":
        if isinstance(v, QC):
            return v
        if isinstance(v, complex):
            return cls(v.real, v.imag)
        return cls(v)

    def __add__(self, other: "QC") -> "QC":
        return QC(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "QC") -> "QC":
        return QC(self.re - other.re, self.im - other.im)

    def __mul__(self, other: "QC") -> "QC":
        return QC(self.re * other.re - self.im * other.im,
                  self.re * other.im + self.im * other.re)

    def __neg__(self) -> "QC":
        return QC(-self.re, -self.im)

    def conjugate(self) -> "QC":
        return QC(self.re, -self.im)

    def scale(self, f: Fraction) -> "QC":
        return QC(self.re * f, self.im * f)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, QC):
            other = QC.from_number(other)
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QC({self.re}, {self.im})"


_QC_ZERO = QC()
_QC_ONE = QC(1)


class CPoly:
    """Polynomial in (z_1..z_n, conj(z_1)..conj(z_n)) with ``QC`` coefficients.

    Terms are stored canonically as a dict keyed by the exponent pair
    ``(alpha, beta)`` (tuples of non-negative ints); duplicate keys merge on
    construction and zero coefficients are dropped, so ``==`` is structural
    equality of the exact polynomials.
    """

    __slots__ = ("n", "coeffs", "_numeric")

    def __init__(self, n: int, coeffs=None):
        self.n = n
        self.coeffs: dict = {}
        self._numeric = None
        if coeffs:
            for key, val in (coeffs.items() if isinstance(coeffs, dict) else coeffs):
                self._accumulate(key, QC.from_number(val))

    def _accumulate(self, key, val: QC):
        cur = self.coeffs.get(key)
        new = val if cur is None else cur + val
        if new.is_zero():
            self.coeffs.pop(key, None)
        else:
            self.coeffs[key] = new

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls, n: int) -> "CPoly":
        return cls(n)

    @classmethod
    def constant(cls, n: int, value) -> "CPoly":
        z = (0,) * n
        return cls(n, {(z, z): QC.from_number(value)})

    @classmethod
    def monomial(cls, n: int, alpha, beta, coeff) -> "CPoly":
        return cls(n, {(tuple(alpha), tuple(beta)): QC.from_number(coeff)})

    # -- ring operations ---------------------------------------------------
    def __add__(self, other: "CPoly") -> "CPoly":
        out = CPoly(self.n)
        out.coeffs = dict(self.coeffs)
        for key, val in other.coeffs.items():
            out._accumulate(key, val)
        return out

    def __sub__(self, other: "CPoly") -> "CPoly":
        return self + (-other)

    def __neg__(self) -> "CPoly":
        out = CPoly(self.n)
        out.coeffs = {k: -v for k, v in self.coeffs.items()}
        return out

    def scale(self, value) -> "CPoly":
        c = QC.from_number(value)
        out = CPoly(self.n)
        if not c.is_zero():
            out.coeffs = {k: v * c for k, v in self.coeffs.items()}
        return out

    def mul(self, other: "CPoly", trunc: int | None = None) -> "CPoly":
        """Product, optionally dropping terms of total degree > ``trunc``."""
        out = CPoly(self.n)
        for (a1, b1), c1 in self.coeffs.items():
            d1 = sum(a1) + sum(b1)
            for (a2, b2), c2 in other.coeffs.items():
                if trunc is not None and d1 + sum(a2) + sum(b2) > trunc:
                    continue
                key = (tuple(x + y for x, y in zip(a1, a2)),
                       tuple(x + y for x, y in zip(b1, b2)))
                out._accumulate(key, c1 * c2)
        return out

    def __mul__(self, other: "CPoly") -> "CPoly":
        return self.mul(other)

    def conj(self) -> "CPoly":
        out = CPoly(self.n)
        out.coeffs = {(b, a): v.conjugate() for (a, b), v in self.coeffs.items()}
        return out

    # -- calculus ----------------------------------------------------------
    def dz(self, i: int) -> "CPoly":
        out = CPoly(self.n)
        for (a, b), c in self.coeffs.items():
            if a[i] == 0:
                continue
            na = list(a)
            na[i] -= 1
            out._accumulate((tuple(na), b), c.scale(Fraction(a[i])))
        return out

    def dzbar(self, i: int) -> "CPoly":
        out = CPoly(self.n)
        for (a, b), c in self.coeffs.items():
            if b[i] == 0:
                continue
            nb = list(b)
            nb[i] -= 1
            out._accumulate((a, tuple(nb)), c.scale(Fraction(b[i])))
        return out

    # -- structure ---------------------------------------------------------
    def total_degree(self) -> int:
        return max((sum(a) + sum(b) for a, b in self.coeffs), default=0)

    def min_degree(self) -> int:
        return min((sum(a) + sum(b) for a, b in self.coeffs), default=0)

    def truncate(self, degree: int) -> "CPoly":
        out = CPoly(self.n)
        out.coeffs = {k: v for k, v in self.coeffs.items()
                      if sum(k[0]) + sum(k[1]) <= degree}
        return out

    def part(self, degree: int) -> "CPoly":
        """Homogeneous part of the given total degree."""
        out = CPoly(self.n)
        out.coeffs = {k: v for k, v in self.coeffs.items()
                      if sum(k[0]) + sum(k[1]) == degree}
        return out

    def is_zero(self) -> bool:
        return not self.coeffs

    def __eq__(self, other) -> bool:
        return isinstance(other, CPoly) and self.n == other.n and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, frozenset(self.coeffs.items())))

    def sorted_terms(self):
        return sorted(self.coeffs.items(), key=lambda kv: (sum(kv[0][0]) + sum(kv[0][1]), kv[0]))

    def series_apply(self, series, trunc: int) -> "CPoly":
        """sum_k series[k] * self**k truncated at total degree ``trunc``.

        Requires a vanishing constant term, so only finitely many powers
        contribute below the truncation degree.
        """
        if self.min_degree() == 0 and not self.is_zero():
            raise ValueError("series composition needs a zero constant term")
        out = CPoly.constant(self.n, series[0]) if len(series) > 0 else CPoly.zero(self.n)
        power = CPoly.constant(self.n, 1)
        step = max(self.min_degree(), 1)
        for k in range(1, len(series)):
            if (k) * step > trunc:
                break
            power = power.mul(self, trunc=trunc)
            if power.is_zero():
                break
            coeff = QC.from_number(series[k])
            if not coeff.is_zero():
                out = out + power.scale(coeff)
        return out

    def log1p(self, trunc: int) -> "CPoly":
        """log(1 + self) truncated; the constant term of ``self`` must vanish."""
        step = max(self.min_degree(), 1)
        nterms = trunc // step + 1
        series = [Fraction(0)] + [Fraction((-1) ** (k + 1), k) for k in range(1, nterms + 1)]
        return self.series_apply(series, trunc)

    def linear_substitute(self, U) -> "CPoly":
        """Substitute z -> U z (and conj(z) -> conj(U) conj(z)) for a complex matrix U."""
        n = self.n
        U = np.asarray(U, dtype=complex)
        zs = [CPoly(n, {(tuple(1 if j == i else 0 for j in range(n)), (0,) * n): _QC_ONE})
              for i in range(n)]
        new_z = []
        new_zb = []
        for i in range(n):
            acc = CPoly.zero(n)
            for j in range(n):
                acc = acc + zs[j].scale(U[i, j])
            new_z.append(acc)
            new_zb.append(acc.conj())
        out = CPoly.zero(n)
        for (a, b), c in self.coeffs.items():
            term = CPoly.constant(n, c)
            for i, e in enumerate(a):
                for _ in range(e):
                    term = term * new_z[i]
            for i, e in enumerate(b):
                for _ in range(e):
                    term = term * new_zb[i]
            out = out + term
        return out

    # -- evaluation --------------------------------------------------------
    def numeric(self) -> "NumericPoly":
        if self._numeric is None:
            self._numeric = NumericPoly.from_poly(self)
        return self._numeric

    def evaluate(self, z) -> complex:
        return self.numeric().evaluate(z)

    def __repr__(self):
        terms = []
        for (a, b), c in self.sorted_terms()[:8]:
            terms.append(f"{complex(c):.6g}*z^{list(a)}zb^{list(b)}")
        more = "" if len(self.coeffs) <= 8 else f" ... ({len(self.coeffs)} terms)"
        return "CPoly[" + " + ".join(terms) + more + "]"


class NumericPoly:
    """Float-coefficient view of a ``CPoly`` for fast (batch) evaluation."""

    __slots__ = ("n", "alpha", "beta", "coeff", "max_pow")

    def __init__(self, n, alpha, beta, coeff):
        self.n = n
        self.alpha = alpha
        self.beta = beta
        self.coeff = coeff
        self.max_pow = int(max(alpha.max(initial=0), beta.max(initial=0)))

    @classmethod
    def from_poly(cls, poly: CPoly) -> "NumericPoly":
        m = len(poly.coeffs)
        alpha = np.zeros((m, poly.n), dtype=np.int64)
        beta = np.zeros((m, poly.n), dtype=np.int64)
        coeff = np.zeros(m, dtype=complex)
        for row, ((a, b), c) in enumerate(poly.sorted_terms()):
            alpha[row] = a
            beta[row] = b
            coeff[row] = complex(c)
        return cls(poly.n, alpha, beta, coeff)

    def evaluate(self, z) -> complex:
        z = np.asarray(z, dtype=complex)
        if self.coeff.size == 0:
            return 0.0 + 0.0j
        pw = np.ones((self.n, self.max_pow + 1), dtype=complex)
        for d in range(1, self.max_pow + 1):
            pw[:, d] = pw[:, d - 1] * z
        cw = pw.conj()
        idx = np.arange(self.n)
        mono = pw[idx, self.alpha].prod(axis=1) * cw[idx, self.beta].prod(axis=1)
        return complex(self.coeff @ mono)

    def evaluate_many(self, Z) -> np.ndarray:
        """Evaluate at all rows of an (N, n) complex array."""
        Z = np.asarray(Z, dtype=complex)
        if self.coeff.size == 0:
            return np.zeros(Z.shape[0], dtype=complex)
        mono = np.prod(Z[:, None, :] ** self.alpha[None, :, :], axis=2)
        mono *= np.prod(Z.conj()[:, None, :] ** self.beta[None, :, :], axis=2)
        return mono @ self.coeff
