"""
Exact differential polynomials in the derivatives ∂_z^k u

Coefficients are Gaussian rationals (pairs of Fractions); polynomials are
dictionaries from a sorted tuple of derivative orders to a nonzero coefficient.
2x2 matrices of such polynomials carry the R_j, K_j recursion.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

import numpy as np

Number = Union[int, Fraction, "GaussianRational"]


@dataclass(frozen=True)
class GaussianRational:
    """Exact complex number re + i·im with rational parts"""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def of(cls, value: Number) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction)):
            return cls(Fraction(value), Fraction(0))
        raise TypeError(f"Cannot coerce {value!r} to an exact Gaussian rational")

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __add__(self, other: Number) -> "GaussianRational":
        if not isinstance(other, _EXACT):
            return NotImplemented
        other = GaussianRational.of(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self) -> "GaussianRational":
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other: Number) -> "GaussianRational":
        return self + (-GaussianRational.of(other))

    def __rsub__(self, other: Number) -> "GaussianRational":
        return GaussianRational.of(other) - self

    def __mul__(self, other: Number) -> "GaussianRational":
        if not isinstance(other, _EXACT):
            return NotImplemented
        other = GaussianRational.of(other)
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "GaussianRational":
        other = GaussianRational.of(other)
        norm = other.re ** 2 + other.im ** 2
        if norm == 0:
            raise ZeroDivisionError("Division by zero Gaussian rational")
        return GaussianRational(
            (self.re * other.re + self.im * other.im) / norm,
            (self.im * other.re - self.re * other.im) / norm,
        )

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        if self.re == 0:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}*i)"


_EXACT = (int, Fraction, GaussianRational)


I = GaussianRational(Fraction(0), Fraction(1))


def _sort_key(factors: tuple[int, ...]) -> tuple:
    """Higher degree first, then lexicographically smaller orders first"""
    return (-len(factors), tuple(-k for k in factors))


class DiffPoly:
    """
    Polynomial in ∂_z u, ∂_z^2 u, ... with Gaussian-rational coefficients.

    Monomials are keyed by the ascending tuple of derivative orders; the empty
    tuple is the constant monomial. Zero coefficients are never stored.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple[int, ...], Number] | None = None):
        clean: dict[tuple[int, ...], GaussianRational] = {}
        for factors, coeff in (terms or {}).items():
            key = tuple(sorted(factors))
            if any(k < 1 for k in key):
                raise ValueError(f"Derivative orders must be >= 1, got {key}")
            total = clean.get(key, GaussianRational()) + GaussianRational.of(coeff)
            if total.is_zero():
                clean.pop(key, None)
            else:
                clean[key] = total
        self._terms = clean

    @classmethod
    def var(cls, k: int) -> "DiffPoly":
        """The monomial ∂_z^k u"""
        return cls({(k,): 1})

    @classmethod
    def const(cls, c: Number) -> "DiffPoly":
        return cls({(): c})

    @property
    def terms(self) -> dict[tuple[int, ...], GaussianRational]:
        return dict(self._terms)

    def items(self) -> Iterable[tuple[tuple[int, ...], GaussianRational]]:
        return sorted(self._terms.items(), key=lambda kv: _sort_key(kv[0]))

    def is_zero(self) -> bool:
        return not self._terms

    def weights(self) -> set[int]:
        return {sum(factors) for factors in self._terms}

    def max_order(self) -> int:
        return max((max(f) for f in self._terms if f), default=0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiffPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: "DiffPoly") -> "DiffPoly":
        merged = dict(self._terms)
        for key, coeff in other._terms.items():
            merged[key] = merged.get(key, GaussianRational()) + coeff
        return DiffPoly(merged)

    def __neg__(self) -> "DiffPoly":
        return DiffPoly({k: -c for k, c in self._terms.items()})

    def __sub__(self, other: "DiffPoly") -> "DiffPoly":
        return self + (-other)

    def __mul__(self, other: Union["DiffPoly", Number]) -> "DiffPoly":
        if not isinstance(other, DiffPoly):
            if not isinstance(other, _EXACT):
                return NotImplemented
            scalar = GaussianRational.of(other)
            return DiffPoly({k: c * scalar for k, c in self._terms.items()})
        product: dict[tuple[int, ...], GaussianRational] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                key = tuple(sorted(k1 + k2))
                product[key] = product.get(key, GaussianRational()) + c1 * c2
        return DiffPoly(product)

    def __rmul__(self, other: Number) -> "DiffPoly":
        return self * other

    def derivative(self) -> "DiffPoly":
        """∂_z by the Leibniz rule: each factor ∂^k u in turn becomes ∂^{k+1} u"""
        out: dict[tuple[int, ...], GaussianRational] = {}
        for factors, coeff in self._terms.items():
            for i, k in enumerate(factors):
                key = tuple(sorted(factors[:i] + (k + 1,) + factors[i + 1:]))
                out[key] = out.get(key, GaussianRational()) + coeff
        return DiffPoly(out)

    def evaluate(self, derivatives: Mapping[int, np.ndarray]) -> np.ndarray:
        """Substitute sampled ∂_z^k u arrays; returns a complex array"""
        shape = next(iter(derivatives.values())).shape if derivatives else ()
        total = np.zeros(shape, dtype=complex)
        for factors, coeff in self._terms.items():
            term = np.full(shape, complex(coeff), dtype=complex)
            for k in factors:
                term = term * derivatives[k]
            total = total + term
        return total

    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"DiffPoly({format_poly(self)})"


def _format_monomial(factors: tuple[int, ...]) -> str:
    parts = []
    for k in sorted(set(factors)):
        power = factors.count(k)
        parts.append(f"(Dz^{k} u)" + (f"^{power}" if power > 1 else ""))
    return "*".join(parts)


def format_poly(poly: DiffPoly) -> str:
    """
    Canonical text, e.g. "-1/2*(Dz^1 u)^3 + (Dz^3 u)"

    Terms run from highest to lowest degree; unit coefficients are omitted.
    """
    if poly.is_zero():
        return "0"
    out = []
    for n, (factors, coeff) in enumerate(poly.items()):
        if coeff.is_real() or coeff.re == 0:
            negative = (coeff.re if coeff.is_real() else coeff.im) < 0
            magnitude = -coeff if negative else coeff
        else:
            negative, magnitude = False, coeff

        monomial = _format_monomial(factors)
        if not monomial:
            body = str(magnitude)
        elif magnitude == GaussianRational.of(1):
            body = monomial
        else:
            body = f"{magnitude}*{monomial}"

        if n == 0:
            out.append(f"-{body}" if negative else body)
        else:
            out.append(f" - {body}" if negative else f" + {body}")
    return "".join(out)


ZERO = DiffPoly()
ONE = DiffPoly.const(1)


class MatPoly:
    """2x2 matrix of DiffPoly entries"""

    __slots__ = ("a11", "a12", "a21", "a22")

    def __init__(self, a11: DiffPoly = ZERO, a12: DiffPoly = ZERO, a21: DiffPoly = ZERO, a22: DiffPoly = ZERO):
        self.a11, self.a12, self.a21, self.a22 = a11, a12, a21, a22

    @classmethod
    def scalar_matrix(cls, rows: tuple[tuple[Number, Number], tuple[Number, Number]]) -> "MatPoly":
        (a, b), (c, d) = rows
        return cls(ONE * a, ONE * b, ONE * c, ONE * d)

    def entries(self) -> tuple[DiffPoly, DiffPoly, DiffPoly, DiffPoly]:
        return self.a11, self.a12, self.a21, self.a22

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries())

    def is_off_diagonal(self) -> bool:
        return self.a11.is_zero() and self.a22.is_zero()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatPoly):
            return NotImplemented
        return self.entries() == other.entries()

    def __add__(self, other: "MatPoly") -> "MatPoly":
        return MatPoly(*(x + y for x, y in zip(self.entries(), other.entries())))

    def __neg__(self) -> "MatPoly":
        return MatPoly(*(-x for x in self.entries()))

    def __sub__(self, other: "MatPoly") -> "MatPoly":
        return self + (-other)

    def __mul__(self, other: Union["MatPoly", DiffPoly, Number]) -> "MatPoly":
        if isinstance(other, MatPoly):
            return MatPoly(
                self.a11 * other.a11 + self.a12 * other.a21,
                self.a11 * other.a12 + self.a12 * other.a22,
                self.a21 * other.a11 + self.a22 * other.a21,
                self.a21 * other.a12 + self.a22 * other.a22,
            )
        return MatPoly(*(x * other for x in self.entries()))

    def __rmul__(self, other: Union[DiffPoly, Number]) -> "MatPoly":
        return MatPoly(*(x * other for x in self.entries()))

    def derivative(self) -> "MatPoly":
        return MatPoly(*(x.derivative() for x in self.entries()))

    def commutator(self, other: "MatPoly") -> "MatPoly":
        return self * other - other * self

    def __repr__(self) -> str:
        return "MatPoly([[{}, {}], [{}, {}]])".format(*map(format_poly, self.entries()))


SIGMA1 = MatPoly.scalar_matrix(((0, 1), (1, 0)))
SIGMA2 = MatPoly.scalar_matrix(((0, -I), (I, 0)))
SIGMA3 = MatPoly.scalar_matrix(((1, 0), (0, -1)))
