"""Truncated multivariate polynomials with complex coefficients.

Each variable carries an integer weight; the order of a monomial is the
weighted total degree and anything above ``max_order`` is discarded on every
product.  Pump couplings get weight 1, spectator symbols (the diagonal
detunings kept for readable output) get weight 0.
"""
from __future__ import annotations

from typing import Iterable, Mapping, Sequence

__all__ = ["TruncatedPolynomial", "PRUNE_TOL"]

PRUNE_TOL = 1e-15


class TruncatedPolynomial:
    """Sparse polynomial ``{exponent tuple: coefficient}``.

    >>> x = TruncatedPolynomial.variable("x", ["x"], max_order=2)
    >>> ((1 + x) * (1 + x) * (1 + x)).coefficient({"x": 3})
    0j
    """

    __slots__ = ("variables", "weights", "max_order", "terms", "_pos")

    def __init__(self, variables: Sequence[str], terms: Mapping | None = None,
                 max_order: int = 2, weights: Sequence[int] | None = None):
        self.variables = tuple(variables)
        self.weights = tuple(weights) if weights is not None else (1,) * len(self.variables)
        if len(self.weights) != len(self.variables):
            raise ValueError("one weight per variable")
        self.max_order = int(max_order)
        self._pos = {v: i for i, v in enumerate(self.variables)}
        self.terms = {}
        for exp, c in (terms or {}).items():
            exp = tuple(exp)
            if self.order_of(exp) <= self.max_order and abs(c) >= PRUNE_TOL:
                self.terms[exp] = complex(c)

    # construction

    @classmethod
    def constant(cls, value, variables, max_order=2, weights=None):
        return cls(variables, {(0,) * len(variables): value}, max_order, weights)

    @classmethod
    def variable(cls, name, variables, max_order=2, weights=None, coefficient=1.0):
        exp = [0] * len(variables)
        exp[list(variables).index(name)] = 1
        return cls(variables, {tuple(exp): coefficient}, max_order, weights)

    def _like(self, terms) -> "TruncatedPolynomial":
        return TruncatedPolynomial(self.variables, terms, self.max_order, self.weights)

    def zero(self) -> "TruncatedPolynomial":
        return self._like({})

    # inspection

    def order_of(self, exp) -> int:
        return sum(w * e for w, e in zip(self.weights, exp))

    @property
    def order(self) -> int:
        """Highest order present (-1 for the zero polynomial)."""
        return max((self.order_of(e) for e in self.terms), default=-1)

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def _exp(self, monomial: Mapping[str, int]) -> tuple:
        exp = [0] * len(self.variables)
        for name, power in monomial.items():
            exp[self._pos[name]] = power
        return tuple(exp)

    def coefficient(self, monomial: Mapping[str, int]) -> complex:
        return self.terms.get(self._exp(monomial), 0j)

    def monomial(self, exp) -> dict[str, int]:
        return {v: e for v, e in zip(self.variables, exp) if e}

    def truncate(self, order: int) -> "TruncatedPolynomial":
        return TruncatedPolynomial(self.variables, self.terms, order, self.weights)

    def homogeneous(self, order: int) -> "TruncatedPolynomial":
        return self._like({e: c for e, c in self.terms.items() if self.order_of(e) == order})

    # arithmetic

    def _coerce(self, other) -> "TruncatedPolynomial":
        if isinstance(other, TruncatedPolynomial):
            if other.variables != self.variables:
                raise ValueError("polynomials over different variables")
            return other
        return self.constant(other, self.variables, self.max_order, self.weights)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0j) + c
        out = self._like(terms)
        out.max_order = min(self.max_order, other.max_order)
        return out.truncate(out.max_order)

    __radd__ = __add__

    def __neg__(self):
        return self._like({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedPolynomial):
            return self._like({e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        limit = min(self.max_order, other.max_order)
        terms: dict = {}
        w = self.weights
        for e1, c1 in self.terms.items():
            o1 = self.order_of(e1)
            for e2, c2 in other.terms.items():
                if o1 + sum(a * b for a, b in zip(w, e2)) > limit:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0j) + c1 * c2
        return TruncatedPolynomial(self.variables, terms, limit, self.weights)

    __rmul__ = __mul__

    # evaluation

    def substitute(self, values: Mapping[str, complex]) -> "TruncatedPolynomial":
        """Bind some variables numerically; the result drops them."""
        keep = [i for i, v in enumerate(self.variables) if v not in values]
        bound = [(i, complex(values[v])) for i, v in enumerate(self.variables) if v in values]
        terms: dict = {}
        for e, c in self.terms.items():
            for i, val in bound:
                if e[i]:
                    c = c * val ** e[i]
            key = tuple(e[i] for i in keep)
            terms[key] = terms.get(key, 0j) + c
        return TruncatedPolynomial([self.variables[i] for i in keep], terms, self.max_order,
                                   [self.weights[i] for i in keep])

    def evaluate(self, values: Mapping[str, complex]) -> complex:
        missing = [v for v in self.variables if v not in values and
                   any(e[self._pos[v]] for e in self.terms)]
        if missing:
            raise KeyError(f"unbound variables: {', '.join(missing)}")
        total = 0j
        for e, c in self.terms.items():
            for v, p in zip(self.variables, e):
                if p:
                    c = c * complex(values[v]) ** p
            total += c
        return total

    # output

    def sorted_terms(self) -> list[tuple[tuple, complex]]:
        return sorted(self.terms.items(), key=lambda t: (self.order_of(t[0]), [-x for x in t[0]]))

    def to_records(self) -> list[dict]:
        return [{"monomial": self.monomial(e), "order": self.order_of(e),
                 "re": c.real, "im": c.imag} for e, c in self.sorted_terms()]

    def render(self, rename: Mapping[str, str] | None = None) -> str:
        rename = rename or {}
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            factors = []
            for v, p in zip(self.variables, e):
                if p:
                    name = rename.get(v, v)
                    factors.append(name if p == 1 else f"{name}^{p}")
            if c.imag == 0:
                sign = "+" if c.real >= 0 else "-"
                coeff = f"({abs(c.real):.6g})"
            else:
                sign, coeff = "+", f"({c.real:.6g}{c.imag:+.6g}i)"
            parts.append(f"{sign} " + "·".join([coeff] + factors))
        return " ".join(parts)

    def __repr__(self):
        return f"TruncatedPolynomial(order<={self.max_order}: {self.render()})"

    def iter_orders(self) -> Iterable[int]:
        return sorted({self.order_of(e) for e in self.terms})
