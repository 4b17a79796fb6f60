"""Vector-valued polynomials of d variables with exact coefficients.

Coefficients may be Fractions (exact path) or floats; mixed arithmetic
follows Python's rules.  A polynomial component is a dict mapping an
exponent multi-index to its coefficient; zero coefficients are dropped.
"""

from fractions import Fraction
from itertools import combinations_with_replacement
from math import factorial


def _clean(comp):
    return {m: c for m, c in comp.items() if c != 0}


def _add(a, b):
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, 0) + c
    return _clean(out)


def _scale(s, a):
    if s == 0:
        return {}
    return {m: s * c for m, c in a.items()}


def _mul(a, b):
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            out[m] = out.get(m, 0) + ca * cb
    return _clean(out)


def _deriv(a, axis):
    out = {}
    for m, c in a.items():
        if m[axis] == 0:
            continue
        mm = list(m)
        k = mm[axis]
        mm[axis] = k - 1
        out[tuple(mm)] = out.get(tuple(mm), 0) + k * c
    return _clean(out)


def _eval(a, point):
    total = 0
    for m, c in a.items():
        v = c
        for x, k in zip(point, m):
            for _ in range(k):
                v = v * x
        total += v
    return total


class MultiPolynomial:
    """n-component polynomial of d variables."""

    def __init__(self, d, comps):
        self.d = d
        self.comps = [_clean(dict(c)) for c in comps]
        self.n = len(self.comps)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, d, n=1):
        return cls(d, [{} for _ in range(n)])

    @classmethod
    def monomial(cls, d, exponents, coeff=Fraction(1), component=0, n=1):
        comps = [{} for _ in range(n)]
        comps[component] = {tuple(exponents): coeff}
        return cls(d, comps)

    @classmethod
    def constant(cls, d, values):
        zero_m = (0,) * d
        return cls(d, [{zero_m: v} for v in values])

    # -- algebra -----------------------------------------------------------

    def __add__(self, other):
        return MultiPolynomial(self.d, [_add(a, b) for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other):
        return self + other.scaled(-1)

    def scaled(self, s):
        return MultiPolynomial(self.d, [_scale(s, a) for a in self.comps])

    def deriv(self, axis):
        return MultiPolynomial(self.d, [_deriv(a, axis) for a in self.comps])

    def directional_deriv(self, vec):
        comps = [{} for _ in range(self.n)]
        out = MultiPolynomial(self.d, comps)
        for ax, s in enumerate(vec):
            if s != 0:
                out = out + self.deriv(ax).scaled(s)
        return out

    def degree(self):
        degs = [max((sum(m) for m in a), default=-1) for a in self.comps]
        return max(degs, default=-1)

    def evaluate(self, point):
        return tuple(_eval(a, point) for a in self.comps)

    def shifted(self, t):
        """p(r + t) as a polynomial of r."""
        d = self.d
        lin = [{(0,) * d: t[i]} for i in range(d)]
        for i in range(d):
            e = [0] * d
            e[i] = 1
            lin[i][tuple(e)] = 1
        return self._compose_linear_forms(lin)

    def compose_affine(self, b, cols):
        """p(b + sum_k s_k cols[k]) as a polynomial of s (len(cols) variables).

        ``b`` is a d-vector, ``cols`` a list of d-vectors.
        """
        k = len(cols)
        forms = []
        for i in range(self.d):
            f = {}
            if b[i] != 0:
                f[(0,) * k] = b[i]
            for j in range(k):
                if cols[j][i] != 0:
                    e = [0] * k
                    e[j] = 1
                    f[tuple(e)] = cols[j][i]
            forms.append(f)
        return self._compose_linear_forms(forms, out_d=k)

    def _compose_linear_forms(self, forms, out_d=None):
        out_d = self.d if out_d is None else out_d
        one = {(0,) * out_d: 1}
        # powers of each substituted variable, computed on demand
        pow_cache = [[one, forms[i]] for i in range(self.d)]

        def power(i, k):
            cache = pow_cache[i]
            while len(cache) <= k:
                cache.append(_mul(cache[-1], forms[i]))
            return cache[k]

        comps = []
        for a in self.comps:
            acc = {}
            for m, c in a.items():
                term = {(0,) * out_d: c}
                for i, k in enumerate(m):
                    if k:
                        term = _mul(term, power(i, k))
                acc = _add(acc, term)
            comps.append(acc)
        return MultiPolynomial(out_d, comps)

    def coeff_abs_sum(self):
        """Bound for sup |p| on the unit cube: sum of |coefficients|."""
        return max((sum(abs(c) for c in a.values()) for a in self.comps), default=0)

    def __repr__(self):
        return f"MultiPolynomial(d={self.d}, n={self.n}, comps={self.comps})"


def monomial_exponents(d, degree):
    """All exponent multi-indices of total degree exactly ``degree``."""
    out = set()
    for combo in combinations_with_replacement(range(d), degree):
        e = [0] * d
        for ax in combo:
            e[ax] += 1
        out.add(tuple(e))
    return sorted(out, reverse=True)


def monomial_exponents_upto(d, degree):
    out = []
    for k in range(degree + 1):
        out.extend(monomial_exponents(d, k))
    return out


def monomial_basis(d, degree, n=1, normalized=False):
    """Monomials of exact total degree, one per (multi-index, component).

    With ``normalized`` the monomial r^m is divided by m! (Taylor scaling).
    """
    basis = []
    for comp in range(n):
        for m in monomial_exponents(d, degree):
            coeff = Fraction(1)
            if normalized:
                denom = 1
                for k in m:
                    denom *= factorial(k)
                coeff = Fraction(1, denom)
            basis.append(MultiPolynomial.monomial(d, m, coeff=coeff, component=comp, n=n))
    return basis


def dim_P(d, p):
    """Dimension of the space of polynomials of degree <= p in d variables."""
    num = 1
    for k in range(1, d + 1):
        num = num * (p + k) // k
    return num
