"""Exact exterior calculus for matrix-valued polynomial forms on a coordinate patch.

Forms live on R^n with coordinates x1..xn.  A :class:`MatrixPolyForm` of
degree q stores, for each increasing index tuple ``(i1 < ... < iq)``, an
m x m matrix of polynomials with rational coefficients.  Coefficients may also
depend on an auxiliary parameter ``t`` (used for the homotopy interpolation
``A_t = t A``); ``d`` never differentiates in ``t``.

Polynomials are dicts from a packed exponent key to a coefficient: the
exponent of variable k sits in bits ``[BITS*k, BITS*(k+1))`` so multiplying
monomials is integer addition.  Variable index n is ``t``.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .expr import ExprError, degree_bound, evaluate, format_fraction, parse_expr

BITS = 12
MASK = (1 << BITS) - 1
DEFAULT_COEFF_CAP = 4

PolyDict = dict  # packed exponent -> int | Fraction


class FormDegreeError(ValueError):
    pass


class GaugeInverseError(ValueError):
    pass


# -- raw polynomial helpers -------------------------------------------------


def p_add_into(acc: PolyDict, p: PolyDict, scale=1) -> None:
    for k, c in p.items():
        v = acc.get(k, 0) + c * scale
        if v:
            acc[k] = v
        else:
            acc.pop(k, None)


def p_mul(a: PolyDict, b: PolyDict) -> PolyDict:
    if not a or not b:
        return {}
    if len(a) < len(b):
        a, b = b, a
    out: PolyDict = {}
    get = out.get
    for kb, cb in b.items():
        for ka, ca in a.items():
            k = ka + kb
            out[k] = get(k, 0) + ca * cb
    return {k: v for k, v in out.items() if v}


def p_deriv(a: PolyDict, var: int) -> PolyDict:
    shift = BITS * var
    unit = 1 << shift
    out = {}
    for k, c in a.items():
        e = (k >> shift) & MASK
        if e:
            out[k - unit] = c * e
    return out


def p_exponents(key: int, nvars: int) -> tuple[int, ...]:
    return tuple((key >> (BITS * i)) & MASK for i in range(nvars))


def p_key(exps: Sequence[int]) -> int:
    key = 0
    for i, e in enumerate(exps):
        if e > MASK:
            raise OverflowError("exponent too large")
        key |= e << (BITS * i)
    return key


def p_total_degree(key: int, nvars: int) -> int:
    return sum(p_exponents(key, nvars))


def p_normalize(p: PolyDict) -> PolyDict:
    out = {}
    for k, c in p.items():
        if c:
            if isinstance(c, Fraction) and c.denominator == 1:
                c = c.numerator
            out[k] = c
    return out


class Poly:
    """Polynomial in x1..xn (and the homotopy parameter t) with rational coefficients."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[int, int | Fraction] | None = None):
        self.n = n
        self.terms = p_normalize(dict(terms or {}))

    @classmethod
    def const(cls, n: int, c) -> "Poly":
        return cls(n, {0: c} if c else {})

    @classmethod
    def var(cls, n: int, i: int) -> "Poly":
        """Coordinate x_{i+1} (0-based ``i``); ``i == n`` is t."""
        return cls(n, {1 << (BITS * i): 1})

    def _lift(self, other):
        if isinstance(other, Poly):
            return other
        if isinstance(other, (int, Fraction)):
            return Poly.const(self.n, other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        p_add_into(out, other.terms)
        return Poly(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.n, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return Poly(self.n, p_mul(self.terms, other.terms))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        out = Poly.const(self.n, 1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((p_total_degree(k, self.n) for k in self.terms), default=0)

    def render(self, names: Sequence[str] | None = None) -> str:
        names = list(names or [f"x{i + 1}" for i in range(self.n)]) + ["t"]
        nv = self.n + 1
        if not self.terms:
            return "0"
        items = sorted(
            self.terms.items(),
            key=lambda kc: (p_total_degree(kc[0], nv), tuple(-e for e in p_exponents(kc[0], nv))),
        )
        out = []
        for idx, (k, c) in enumerate(items):
            c = Fraction(c)
            exps = p_exponents(k, nv)
            mono = "*".join(
                names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(exps) if e
            )
            mag = abs(c)
            if not mono:
                body = format_fraction(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{format_fraction(mag)}*{mono}"
            if idx == 0:
                out.append(body if c > 0 else f"-{body}")
            else:
                out.append(f" {'-' if c < 0 else '+'} {body}")
        return "".join(out)

    def __repr__(self):
        return f"Poly({self.render()!r})"


def parse_poly(
    text: str, n: int, names: Sequence[str] | None = None, max_degree: int | None = None
) -> Poly:
    """Parse a polynomial in the patch coordinates (default names x1..xn).

    ``max_degree`` rejects inputs whose syntactic degree bound is larger,
    before any expansion happens.
    """
    names = list(names or [f"x{i + 1}" for i in range(n)])
    index = {name: i for i, name in enumerate(names)}
    node = parse_expr(text)
    if max_degree is not None and degree_bound(node) > max_degree:
        raise ExprError(f"polynomial degree may exceed {max_degree}", 0)

    def name(ident: str, col: int) -> Poly:
        if ident not in index:
            raise ExprError(f"unknown coordinate {ident!r}", col)
        return Poly.var(n, index[ident])

    return evaluate(node, lambda q: Poly.const(n, q), name)


# -- matrix forms -----------------------------------------------------------

Index = tuple[int, ...]


def _merge_sign(a: Index, b: Index) -> tuple[int, Index] | None:
    """Sign and sorted union of dx^a ^ dx^b, or None when they share an index."""
    if set(a) & set(b):
        return None
    # count inversions between the two sorted runs
    inv = 0
    j = 0
    for x in a:
        while j < len(b) and b[j] < x:
            j += 1
        inv += j
    return (-1 if inv % 2 else 1), tuple(sorted(a + b))


class MatrixPolyForm:
    """Differential form of fixed degree with m x m polynomial-matrix coefficients.

    ``comps`` maps an increasing 0-based index tuple to a row-major list of
    ``m*m`` polynomial dicts.  Scalar forms use ``m = 1``.
    """

    __slots__ = ("n", "m", "degree", "comps")

    def __init__(self, n: int, m: int, degree: int, comps: Mapping[Index, Sequence[PolyDict]] | None = None):
        if degree < 0:
            raise FormDegreeError("negative form degree")
        self.n, self.m, self.degree = n, m, degree
        clean: dict[Index, list[PolyDict]] = {}
        if degree <= n:
            for idx, mat in (comps or {}).items():
                idx = tuple(idx)
                if len(idx) != degree or list(idx) != sorted(set(idx)) or (idx and (idx[0] < 0 or idx[-1] >= n)):
                    raise FormDegreeError(f"bad index tuple {idx} for a {degree}-form on R^{n}")
                if len(mat) != m * m:
                    raise ValueError("matrix has the wrong size")
                mat = [p_normalize(p) for p in mat]
                if any(mat):
                    clean[idx] = mat
        self.comps = clean

    # constructors

    @classmethod
    def zero(cls, n: int, m: int, degree: int) -> "MatrixPolyForm":
        return cls(n, m, degree, {})

    @classmethod
    def from_matrix(cls, n: int, entries: Sequence[Sequence[Poly | int | Fraction]]) -> "MatrixPolyForm":
        """0-form from a square matrix of polynomials."""
        m = len(entries)
        flat = []
        for row in entries:
            if len(row) != m:
                raise ValueError("matrix is not square")
            for e in row:
                flat.append(e.terms if isinstance(e, Poly) else ({0: e} if e else {}))
        return cls(n, m, 0, {(): flat})

    @classmethod
    def identity(cls, n: int, m: int) -> "MatrixPolyForm":
        return cls.from_matrix(n, [[1 if i == j else 0 for j in range(m)] for i in range(m)])

    @classmethod
    def one_form(cls, n: int, components: Mapping[int, Sequence[Sequence[Poly | int | Fraction]]]) -> "MatrixPolyForm":
        """Matrix 1-form sum_k components[k] dx^(k+1) (0-based k)."""
        comps = {}
        m = None
        for k, entries in components.items():
            mat = cls.from_matrix(n, entries)
            m = mat.m if m is None else m
            if mat.m != m:
                raise ValueError("components have different matrix sizes")
            if () in mat.comps:
                comps[(k,)] = mat.comps[()]
        return cls(n, m or 1, 1, comps)

    # arithmetic

    def _check(self, other: "MatrixPolyForm") -> None:
        if (self.n, self.m, self.degree) != (other.n, other.m, other.degree):
            raise FormDegreeError("forms of different shape")

    def __add__(self, other: "MatrixPolyForm") -> "MatrixPolyForm":
        self._check(other)
        out = {k: [dict(p) for p in v] for k, v in self.comps.items()}
        for k, v in other.comps.items():
            if k not in out:
                out[k] = [dict(p) for p in v]
            else:
                for acc, p in zip(out[k], v):
                    p_add_into(acc, p)
        return MatrixPolyForm(self.n, self.m, self.degree, out)

    def scale(self, c) -> "MatrixPolyForm":
        if not c:
            return MatrixPolyForm.zero(self.n, self.m, self.degree)
        return MatrixPolyForm(
            self.n, self.m, self.degree, {k: [{e: x * c for e, x in p.items()} for p in v] for k, v in self.comps.items()}
        )

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        if not isinstance(other, MatrixPolyForm):
            return NotImplemented
        return (self.n, self.m, self.degree) == (other.n, other.m, other.degree) and self.comps == other.comps

    def is_zero(self) -> bool:
        return not self.comps

    def wedge(self, other: "MatrixPolyForm") -> "MatrixPolyForm":
        return wedge(self, other)

    def __xor__(self, other):
        return wedge(self, other)

    def entry(self, idx: Index, i: int, j: int) -> Poly:
        mat = self.comps.get(tuple(idx))
        return Poly(self.n, mat[i * self.m + j] if mat else {})

    def coefficient_degree(self) -> int:
        nv = self.n + 1
        return max(
            (p_total_degree(k, nv) for v in self.comps.values() for p in v for k in p),
            default=0,
        )

    def render(self, names: Sequence[str] | None = None) -> str:
        names = list(names or [f"x{i + 1}" for i in range(self.n)])
        if not self.comps:
            return "0"
        lines = []
        for idx in sorted(self.comps):
            basis = "^".join(f"d{names[i]}" for i in idx) or "1"
            mat = self.comps[idx]
            if self.m == 1:
                body = Poly(self.n, mat[0]).render(names)
            else:
                rows = []
                for i in range(self.m):
                    rows.append("[" + ", ".join(Poly(self.n, mat[i * self.m + j]).render(names) for j in range(self.m)) + "]")
                body = "[" + ", ".join(rows) + "]"
            lines.append(f"({body}) {basis}")
        return "\n".join(lines)

    def __repr__(self):
        return f"MatrixPolyForm(n={self.n}, m={self.m}, degree={self.degree}, {len(self.comps)} components)"


def p_mul_add_into(acc: PolyDict, a: PolyDict, b: PolyDict, sign: int) -> None:
    """acc += sign * a * b, in place."""
    get = acc.get
    for kb, cb in b.items():
        cb = cb * sign
        for ka, ca in a.items():
            k = ka + kb
            acc[k] = get(k, 0) + ca * cb


def _prune(mat: list[PolyDict]) -> list[PolyDict]:
    return [{k: v for k, v in p.items() if v} for p in mat]


def _matmul(a: list[PolyDict], b: list[PolyDict], m: int, sign: int, acc: list[PolyDict]) -> None:
    for i in range(m):
        for k in range(m):
            target = acc[i * m + k]
            for j in range(m):
                x, y = a[i * m + j], b[j * m + k]
                if x and y:
                    p_mul_add_into(target, x, y, sign)


def wedge(a: MatrixPolyForm, b: MatrixPolyForm) -> MatrixPolyForm:
    """Matrix wedge product: (a ^ b)_{ik} = sum_j a_ij ^ b_jk."""
    if a.n != b.n:
        raise FormDegreeError("forms on different patches")
    if a.m != b.m:
        raise FormDegreeError("matrix sizes differ")
    n, m = a.n, a.m
    degree = a.degree + b.degree
    if degree > n:
        return MatrixPolyForm.zero(n, m, degree)
    out: dict[Index, list[PolyDict]] = {}
    for ia, ma in a.comps.items():
        for ib, mb in b.comps.items():
            merged = _merge_sign(ia, ib)
            if merged is None:
                continue
            sign, idx = merged
            acc = out.get(idx)
            if acc is None:
                acc = out[idx] = [{} for _ in range(m * m)]
            _matmul(ma, mb, m, sign, acc)
    return MatrixPolyForm(n, m, degree, {k: _prune(v) for k, v in out.items()})


def trace_wedge(a: MatrixPolyForm, b: MatrixPolyForm) -> MatrixPolyForm:
    """Tr(a ^ b) without forming the full matrix product."""
    if a.n != b.n or a.m != b.m:
        raise FormDegreeError("incompatible forms")
    n, m = a.n, a.m
    degree = a.degree + b.degree
    if degree > n:
        return MatrixPolyForm.zero(n, 1, degree)
    out: dict[Index, list[PolyDict]] = {}
    for ia, ma in a.comps.items():
        for ib, mb in b.comps.items():
            merged = _merge_sign(ia, ib)
            if merged is None:
                continue
            sign, idx = merged
            acc = out.get(idx)
            if acc is None:
                acc = out[idx] = [{}]
            target = acc[0]
            for i in range(m):
                for j in range(m):
                    x, y = ma[i * m + j], mb[j * m + i]
                    if x and y:
                        p_mul_add_into(target, x, y, sign)
    return MatrixPolyForm(n, 1, degree, {k: _prune(v) for k, v in out.items()})


def exterior_derivative(a: MatrixPolyForm) -> MatrixPolyForm:
    """d acting entrywise; only the coordinates x1..xn are differentiated."""
    n, m = a.n, a.m
    out: dict[Index, list[PolyDict]] = {}
    for idx, mat in a.comps.items():
        for k in range(n):
            if k in idx:
                continue
            sign = -1 if sum(1 for i in idx if i < k) % 2 else 1
            new = tuple(sorted(idx + (k,)))
            acc = None
            for e, p in enumerate(mat):
                if not p:
                    continue
                dp = p_deriv(p, k)
                if dp:
                    if acc is None:
                        acc = out.setdefault(new, [{} for _ in range(m * m)])
                    p_add_into(acc[e], dp, sign)
    return MatrixPolyForm(n, m, a.degree + 1, out)


d = exterior_derivative


def trace(a: MatrixPolyForm) -> MatrixPolyForm:
    m = a.m
    out = {}
    for idx, mat in a.comps.items():
        acc: PolyDict = {}
        for i in range(m):
            p_add_into(acc, mat[i * m + i])
        out[idx] = [acc]
    return MatrixPolyForm(a.n, 1, a.degree, out)


def power(a: MatrixPolyForm, j: int) -> MatrixPolyForm:
    if j == 0:
        return MatrixPolyForm.identity(a.n, a.m)
    out = a
    for _ in range(j - 1):
        out = wedge(out, a)
    return out


def integrate_t(a: MatrixPolyForm) -> MatrixPolyForm:
    """Integrate coefficients over t in [0, 1]: t^k -> 1/(k+1)."""
    shift = BITS * a.n
    out = {}
    for idx, mat in a.comps.items():
        new = []
        for p in mat:
            q: PolyDict = {}
            for k, c in p.items():
                e = k >> shift
                base = k & ((1 << shift) - 1)
                v = q.get(base, 0) + Fraction(c, e + 1)
                if v:
                    q[base] = v
                else:
                    q.pop(base, None)
            new.append(q)
        out[idx] = new
    return MatrixPolyForm(a.n, a.m, a.degree, out)


def multiply_t(a: MatrixPolyForm, power_: int = 1) -> MatrixPolyForm:
    shift = BITS * a.n + 0
    inc = power_ << shift
    return MatrixPolyForm(a.n, a.m, a.degree, {idx: [{k + inc: c for k, c in p.items()} for p in mat] for idx, mat in a.comps.items()})


def has_t(a: MatrixPolyForm) -> bool:
    shift = BITS * a.n
    return any(k >> shift for mat in a.comps.values() for p in mat for k in p)


# -- Chern-Weil ---------------------------------------------------------------


@dataclass(frozen=True)
class Prefactor:
    """``rational * i^i_power * (2 pi)^(-two_pi_power)``, kept symbolic."""

    rational: Fraction
    i_power: int
    two_pi_power: int

    def simplified(self) -> tuple[Fraction, bool]:
        """Real rational factor (with the sign of i^k folded in) and whether one i remains."""
        k = self.i_power % 4
        sign = -1 if k in (2, 3) else 1
        return self.rational * sign, k % 2 == 1

    def render(self) -> str:
        r, has_i = self.simplified()
        num = f"{abs(r.numerator)}" + ("i" if has_i else "")
        if num == "1i":
            num = "i"
        sign = "-" if r < 0 else ""
        den = r.denominator
        pi = f"(2pi)^{self.two_pi_power}" if self.two_pi_power > 1 else ("2pi" if self.two_pi_power else "")
        if den == 1 and not pi:
            return f"{sign}{num}"
        denom = " ".join(x for x in (str(den) if den != 1 else "", pi) if x)
        return f"{sign}{num}/({denom})"


def curvature(a: MatrixPolyForm) -> MatrixPolyForm:
    """F = dA + A ^ A."""
    if a.degree != 1:
        raise FormDegreeError(f"connection must be a 1-form, got degree {a.degree}")
    return exterior_derivative(a) + wedge(a, a)


@dataclass(frozen=True)
class CharacterForm:
    j: int
    form: MatrixPolyForm
    prefactor: Prefactor


def chern_character_form(f: MatrixPolyForm, j: int) -> CharacterForm:
    """Unnormalized Tr(F^j) with the (1/j!)(i/2pi)^j prefactor recorded.

    Returns the zero form when 2j exceeds the patch dimension.
    """
    if f.degree != 2:
        raise FormDegreeError(f"curvature must be a 2-form, got degree {f.degree}")
    if j < 0:
        raise ValueError("j must be non-negative")
    pref = Prefactor(Fraction(1, math.factorial(j)), j, j)
    if 2 * j > f.n:
        return CharacterForm(j, MatrixPolyForm.zero(f.n, 1, 2 * j), pref)
    if j == 0:
        return CharacterForm(j, trace(power(f, 0)), pref)
    return CharacterForm(j, trace_wedge(power(f, j - 1), f), pref)


def symmetrized_trace(first: MatrixPolyForm, rest: Sequence[MatrixPolyForm]) -> MatrixPolyForm:
    """Str(first, rest...): average of Tr over the cyclic placements of ``first``.

    When ``rest`` holds one repeated even form the placements agree (graded
    cyclicity of the trace), so a single product is computed.
    """
    if not rest:
        return trace(first)
    if all(r is rest[0] for r in rest) and rest[0].degree % 2 == 0:
        prod = rest[0]
        for r in rest[1:]:
            prod = wedge(prod, r)
        return trace_wedge(first, prod)
    k = len(rest) + 1
    total = None
    for pos in range(k):
        word = list(rest[:pos]) + [first] + list(rest[pos:])
        prod = word[0]
        for w in word[1:]:
            prod = wedge(prod, w)
        t = trace(prod)
        total = t if total is None else total + t
    return total.scale(Fraction(1, k))


@dataclass(frozen=True)
class Transgression:
    j: int
    unnormalized_form: MatrixPolyForm
    prefactor: Prefactor

    @property
    def homotopy_prefactor(self) -> Prefactor:
        """1/(j-1)! (i/2pi)^j, the factor in front of int_0^1 Str(A, F_t^(j-1)) dt."""
        return Prefactor(Fraction(1, math.factorial(self.j - 1)), self.j, self.j)


def interpolated_curvature(a: MatrixPolyForm) -> MatrixPolyForm:
    """F_t for A_t = t A: t dA + t^2 A^A  (= t F + (t^2 - t) A^A)."""
    return multiply_t(exterior_derivative(a), 1) + multiply_t(wedge(a, a), 2)


def cs_transgression(a: MatrixPolyForm, j: int) -> Transgression:
    """Chern-Simons form with d(unnormalized_form) = Tr(F^j).

    unnormalized = j * int_0^1 Str(A, F_t^(j-1)) dt, computed exactly since the
    integrand is polynomial in t.  The recorded prefactor (1/j!)(i/2pi)^j
    turns it into the normalized transgression of the Chern character.
    """
    if a.degree != 1:
        raise FormDegreeError(f"connection must be a 1-form, got degree {a.degree}")
    if j < 1:
        raise ValueError("j must be >= 1")
    pref = Prefactor(Fraction(1, math.factorial(j)), j, j)
    if 2 * j - 1 > a.n:
        return Transgression(j, MatrixPolyForm.zero(a.n, 1, 2 * j - 1), pref)
    ft = interpolated_curvature(a)
    integrand = symmetrized_trace(a, [ft] * (j - 1))
    return Transgression(j, integrate_t(integrand).scale(j), pref)


@dataclass(frozen=True)
class TransgressionCheck:
    j: int
    lhs: MatrixPolyForm
    rhs: MatrixPolyForm

    @property
    def exact(self) -> bool:
        return self.lhs == self.rhs


def verify_transgression(a: MatrixPolyForm, j: int) -> TransgressionCheck:
    """Compare d(T_{2j-1}(A)) against Tr(F^j)."""
    t = cs_transgression(a, j)
    lhs = exterior_derivative(t.unnormalized_form)
    rhs = chern_character_form(curvature(a), j).form
    return TransgressionCheck(j, lhs, rhs)


# -- gauge transformations ------------------------------------------------------


def _is_identity(mat: MatrixPolyForm) -> bool:
    return mat == MatrixPolyForm.identity(mat.n, mat.m)


def matrix_inverse(g: MatrixPolyForm) -> MatrixPolyForm:
    """Inverse of a polynomial matrix whose determinant is a nonzero constant."""
    if g.degree != 0:
        raise FormDegreeError("gauge transformation must be a 0-form")
    n, m = g.n, g.m
    entries = [[g.entry((), i, j) for j in range(m)] for i in range(m)]

    def det(mat):
        if len(mat) == 1:
            return mat[0][0]
        total = Poly.const(n, 0)
        for c in range(len(mat)):
            minor = [row[:c] + row[c + 1 :] for row in mat[1:]]
            term = mat[0][c] * det(minor)
            total = total + term if c % 2 == 0 else total - term
        return total

    dt = det(entries)
    if dt.is_zero() or set(dt.terms) != {0}:
        raise GaugeInverseError(f"determinant {dt.render()} is not a nonzero constant")
    inv_det = Fraction(1) / Fraction(dt.terms[0])
    adj = []
    for i in range(m):
        row = []
        for j in range(m):
            minor = [r[:i] + r[i + 1 :] for k, r in enumerate(entries) if k != j]
            cof = det(minor) if minor else Poly.const(n, 1)
            row.append(cof * (inv_det if (i + j) % 2 == 0 else -inv_det))
        adj.append(row)
    return MatrixPolyForm.from_matrix(n, adj)


def gauge_transform(
    a: MatrixPolyForm, g: MatrixPolyForm, g_inv: MatrixPolyForm | None = None
) -> MatrixPolyForm:
    """A^g = g^-1 A g + g^-1 dg.

    ``g_inv`` is checked exactly against ``g``; when omitted it is computed
    from the adjugate (the determinant must be a nonzero constant).
    """
    if a.degree != 1:
        raise FormDegreeError("connection must be a 1-form")
    if g_inv is None:
        g_inv = matrix_inverse(g)
    if not _is_identity(wedge(g, g_inv)) or not _is_identity(wedge(g_inv, g)):
        raise GaugeInverseError("g * g_inv is not the identity")
    return wedge(wedge(g_inv, a), g) + wedge(g_inv, exterior_derivative(g))


def pure_gauge(g: MatrixPolyForm, g_inv: MatrixPolyForm | None = None) -> MatrixPolyForm:
    """g^-1 dg."""
    return gauge_transform(MatrixPolyForm.zero(g.n, g.m, 1), g, g_inv)


# -- decomposable forms ------------------------------------------------------


@dataclass(frozen=True)
class SuspensionCheck:
    lhs: MatrixPolyForm
    rhs: MatrixPolyForm

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs


def suspension_strip(a: MatrixPolyForm, j: int, k: int) -> SuspensionCheck:
    """Check d(T_{2j-1} ^ Tr F^k) = Tr F^j ^ Tr F^k for the decomposable form.

    ``k = 0`` takes the second factor to be the constant 1.
    """
    f = curvature(a)
    t = cs_transgression(a, j).unnormalized_form
    if k == 0:
        second = MatrixPolyForm(a.n, 1, 0, {(): [{0: 1}]})
    else:
        second = chern_character_form(f, k).form
    lhs = exterior_derivative(wedge(t, second))
    rhs = wedge(chern_character_form(f, j).form, second)
    return SuspensionCheck(lhs, rhs)


# -- random data ---------------------------------------------------------------


def random_poly(rng: random.Random, n: int, max_degree: int, terms: int, coeff_range: int = 3) -> Poly:
    out: PolyDict = {}
    for _ in range(terms):
        deg = rng.randint(0, max_degree)
        exps = [0] * n
        for _ in range(deg):
            exps[rng.randrange(n)] += 1
        c = rng.randint(-coeff_range, coeff_range)
        if c:
            p_add_into(out, {p_key(exps): c})
    return Poly(n, out)


def random_connection(
    rng: random.Random,
    n: int,
    m: int,
    max_degree: int = 2,
    density: float = 0.5,
    terms: int = 2,
) -> MatrixPolyForm:
    """Sparse random matrix 1-form with integer polynomial entries."""
    comps = {}
    for k in range(n):
        entries = [
            [random_poly(rng, n, max_degree, terms) if rng.random() < density else 0 for _ in range(m)]
            for _ in range(m)
        ]
        comps[k] = entries
    return MatrixPolyForm.one_form(n, comps)


def random_gauge(rng: random.Random, n: int, m: int, max_degree: int = 1, terms: int = 1) -> tuple[MatrixPolyForm, MatrixPolyForm]:
    """g = U L with U, L unipotent triangular, and its exact inverse."""

    def unipotent(upper: bool) -> tuple[MatrixPolyForm, MatrixPolyForm]:
        entries = [[Poly.const(n, 1 if i == j else 0) for j in range(m)] for i in range(m)]
        for i, j in itertools.product(range(m), repeat=2):
            if (i < j) if upper else (i > j):
                entries[i][j] = random_poly(rng, n, max_degree, terms)
        u = MatrixPolyForm.from_matrix(n, entries)
        nil = u - MatrixPolyForm.identity(n, m)
        inv = MatrixPolyForm.identity(n, m)
        term = MatrixPolyForm.identity(n, m)
        for _ in range(m):
            term = wedge(term, nil).scale(-1)
            inv = inv + term
        return u, inv

    u, u_inv = unipotent(True)
    low, low_inv = unipotent(False)
    return wedge(u, low), wedge(low_inv, u_inv)


def form_from_entries(
    n: int,
    m: int,
    components: Mapping[int, Sequence[Sequence[str]]],
    names: Sequence[str] | None = None,
    coeff_cap: int | None = DEFAULT_COEFF_CAP,
) -> MatrixPolyForm:
    """Build a connection 1-form from textual polynomial entries."""
    comps = {}
    for k, rows in components.items():
        entries = [[parse_poly(e, n, names) for e in row] for row in rows]
        comps[k] = entries
    form = MatrixPolyForm.one_form(n, comps) if comps else MatrixPolyForm.zero(n, m, 1)
    if form.m != m:
        raise ValueError(f"connection matrices are {form.m}x{form.m}, patch declares {m}")
    if coeff_cap is not None and form.coefficient_degree() > coeff_cap:
        raise ValueError(f"coefficient degree {form.coefficient_degree()} exceeds cap {coeff_cap}")
    return form


def basis_label(idx: Iterable[int], names: Sequence[str]) -> str:
    return "^".join(f"d{names[i]}" for i in idx)
