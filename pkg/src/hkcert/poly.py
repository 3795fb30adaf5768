"""Exact sparse multivariate polynomials over the rationals.

A :class:`SparsePolynomial` is a fixed, named variable universe plus a
collection of ``exponent tuple -> Fraction`` terms.  Internally the terms are
stored as an integer polynomial (a FLINT ``fmpz_mpoly``) over a positive
integer denominator, kept coprime to the content of the numerator, so every
coefficient seen from outside is a ``Fraction`` in lowest terms and zero
coefficients are never stored.

Terms iterate in descending graded-lexicographic order: higher total degree
first, ties broken lexicographically with the first variable most
significant.  The first term is the leading term.

Serialization is canonical::

    {"vars": ["s1", "s2"], "terms": [{"c": "1/1", "e": [2, 0]}, ...]}
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Iterator, Mapping, Sequence, Union

import flint
from flint.utils.flint_exceptions import DomainError as FlintDomainError

from .errors import CapacityError, ParseError, StructuralError

__all__ = [
    "EXPONENT_LIMIT",
    "SparsePolynomial",
    "as_rational",
    "format_rational",
    "parse_rational",
    "poly_add",
    "poly_eval_exact",
    "poly_mul",
    "poly_substitute",
]

# Exponents are machine integers (signed 64-bit); anything larger is refused.
EXPONENT_LIMIT = 2**63 - 1
ORDERING = "deglex"

Exponent = tuple[int, ...]
RationalLike = Union[int, Fraction, str]

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")


def parse_rational(text: str, location=None) -> Fraction:
    """Parse ``"p/q"`` (or a bare integer ``"p"``) exactly."""
    if not isinstance(text, str):
        raise ParseError(f"expected a rational string 'p/q', got {text!r}", location)
    m = _RATIONAL_RE.match(text)
    if m is None:
        raise ParseError(f"malformed rational {text!r}", location)
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ParseError(f"zero denominator in {text!r}", location)
    return Fraction(num, den)


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def as_rational(value) -> Fraction:
    """Coerce an exact scalar to ``Fraction``; floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, flint.fmpz):
        return Fraction(int(value))
    if isinstance(value, flint.fmpq):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot use {type(value).__name__} {value!r} as an exact rational")


def _context(names: tuple[str, ...]):
    return flint.fmpz_mpoly_ctx.get(names, ORDERING)


def _check_exponent(e: int, name: str) -> None:
    if e > EXPONENT_LIMIT:
        raise CapacityError(
            f"degree {e} in variable {name!r} exceeds the exponent limit {EXPONENT_LIMIT}"
        )


class SparsePolynomial:
    """Immutable polynomial with rational coefficients over named variables."""

    __slots__ = ("_names", "_num", "_den", "_components")

    def __init__(self, variable_names: Iterable[str], terms=None):
        names = _validate_names(variable_names)
        ctx = _context(names)
        if not terms:
            self._assign(names, ctx.from_dict({}), 1)
            return
        items = terms.items() if isinstance(terms, Mapping) else terms
        collected: dict[Exponent, Fraction] = {}
        for exps, coeff in items:
            exps = tuple(exps)
            if len(exps) != len(names):
                raise StructuralError(
                    f"exponent vector {exps} has length {len(exps)}, expected {len(names)}"
                )
            for e, name in zip(exps, names):
                if not isinstance(e, int) or isinstance(e, bool) or e < 0:
                    raise StructuralError(f"exponent {e!r} of {name!r} is not a non-negative integer")
                _check_exponent(e, name)
            collected[exps] = collected.get(exps, Fraction(0)) + as_rational(coeff)
        den = 1
        for c in collected.values():
            den = lcm(den, c.denominator)
        ints = {e: c.numerator * (den // c.denominator) for e, c in collected.items() if c}
        self._assign(names, ctx.from_dict(ints), den)

    def _assign(self, names, num, den) -> None:
        if num.is_zero():
            den = 1
        elif den != 1:
            g = gcd(int(num.content()), den)
            if g > 1:
                num = num / g
                den //= g
        self._names = names
        self._num = num
        self._den = den
        self._components = None

    @classmethod
    def _wrap(cls, names, num, den=1) -> "SparsePolynomial":
        obj = cls.__new__(cls)
        obj._assign(names, num, den)
        return obj

    @classmethod
    def from_flint(cls, num, den: int = 1) -> "SparsePolynomial":
        """Adopt an existing ``fmpz_mpoly`` (divided by ``den``)."""
        if den <= 0:
            raise ValueError("denominator must be positive")
        ctx = num.context()
        names = tuple(ctx.names())
        if ctx.ordering().value != ORDERING:
            num = num.compose(*_context(names).gens(), ctx=_context(names))
        return cls._wrap(names, num, den)

    @classmethod
    def constant(cls, variable_names: Iterable[str], value: RationalLike) -> "SparsePolynomial":
        names = _validate_names(variable_names)
        q = as_rational(value)
        return cls._wrap(names, _context(names).from_dict({(0,) * len(names): q.numerator} if q else {}), q.denominator)

    @classmethod
    def variable(cls, variable_names: Iterable[str], name: str) -> "SparsePolynomial":
        names = _validate_names(variable_names)
        if name not in names:
            raise StructuralError(f"unknown variable {name!r}; universe is {list(names)}")
        ctx = _context(names)
        return cls._wrap(names, ctx.gens()[names.index(name)], 1)

    @classmethod
    def generators(cls, variable_names: Iterable[str]) -> tuple["SparsePolynomial", ...]:
        names = _validate_names(variable_names)
        return tuple(cls._wrap(names, g, 1) for g in _context(names).gens())

    # -- basic accessors -------------------------------------------------

    @property
    def variable_names(self) -> tuple[str, ...]:
        return self._names

    @property
    def nvars(self) -> int:
        return len(self._names)

    @property
    def numerator(self):
        """The integer ``fmpz_mpoly`` part; the polynomial is ``numerator / denominator``."""
        return self._num

    @property
    def denominator(self) -> int:
        return self._den

    def __len__(self) -> int:
        return len(self._num)

    def is_zero(self) -> bool:
        return self._num.is_zero()

    def __bool__(self) -> bool:
        return not self.is_zero()

    def terms(self) -> Iterator[tuple[Exponent, Fraction]]:
        den = self._den
        for exps, c in self._num.terms():
            yield tuple(map(int, exps)), Fraction(int(c), den)

    def to_dict(self) -> dict[Exponent, Fraction]:
        return dict(self.terms())

    def coefficient(self, exps: Sequence[int]) -> Fraction:
        exps = tuple(exps)
        if len(exps) != self.nvars:
            raise StructuralError(f"exponent vector {exps} does not match {self.nvars} variables")
        return Fraction(int(self._num[exps]), self._den)

    def leading_term(self) -> tuple[Exponent, Fraction]:
        if self.is_zero():
            raise ValueError("the zero polynomial has no leading term")
        return tuple(map(int, self._num.monomial(0))), Fraction(int(self._num.coefficient(0)), self._den)

    def degrees(self) -> tuple[int, ...]:
        """Per-variable maximal exponents (all zero for constants and zero)."""
        return tuple(max(int(d), 0) for d in self._num.degrees())

    def total_degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return int(self._num.total_degree())

    def min_total_degree(self) -> int:
        if self.is_zero():
            return -1
        # deglex puts the lowest total degree last
        return int(sum(self._num.monomial(len(self._num) - 1)))

    def is_homogeneous(self, degree: int | None = None) -> bool:
        if self.is_zero():
            return True
        top = self.total_degree()
        if degree is not None and top != degree:
            return False
        return self.min_total_degree() == top

    def is_constant(self) -> bool:
        return self.total_degree() <= 0

    # -- arithmetic ------------------------------------------------------

    def _coerce(self, other) -> "SparsePolynomial":
        if isinstance(other, SparsePolynomial):
            if other._names != self._names:
                raise StructuralError(
                    f"variable universes differ: {list(self._names)} vs {list(other._names)}"
                )
            return other
        try:
            return SparsePolynomial.constant(self._names, as_rational(other))
        except TypeError:
            return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self._den == other._den:
            return self._wrap(self._names, self._num + other._num, self._den)
        num = self._num * other._den + other._num * self._den
        return self._wrap(self._names, num, self._den * other._den)

    __radd__ = __add__

    def __neg__(self):
        return self._wrap(self._names, -self._num, self._den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_constant() or self.is_constant():
            return self._scale_or_mul(other)
        for name, da, db in zip(self._names, self.degrees(), other.degrees()):
            _check_exponent(da + db, name)
        return self._wrap(self._names, self._num * other._num, self._den * other._den)

    __rmul__ = __mul__

    def _scale_or_mul(self, other):
        return self._wrap(self._names, self._num * other._num, self._den * other._den)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a non-negative integer")
        for name, d in zip(self._names, self.degrees()):
            _check_exponent(d * k, name)
        return self._wrap(self._names, self._num**k, self._den**k)

    def __truediv__(self, other):
        """Division by a nonzero exact scalar (see :meth:`exact_quotient` for polynomials)."""
        try:
            q = as_rational(other)
        except TypeError:
            return NotImplemented
        if q == 0:
            raise ZeroDivisionError("polynomial division by zero")
        return self.scale(1 / q)

    def scale(self, factor: RationalLike) -> "SparsePolynomial":
        q = as_rational(factor)
        return self._wrap(self._names, self._num * q.numerator, self._den * q.denominator)

    def __eq__(self, other) -> bool:
        if isinstance(other, SparsePolynomial):
            return (
                self._names == other._names
                and self._den == other._den
                and self._num == other._num
            )
        try:
            q = as_rational(other)
        except TypeError:
            return NotImplemented
        return self.is_constant() and self.constant_term() == q

    __hash__ = None

    def constant_term(self) -> Fraction:
        return self.coefficient((0,) * self.nvars)

    # -- evaluation ------------------------------------------------------

    def _homogeneous_components(self):
        if self._components is None:
            groups: dict[int, dict] = {}
            for exps, c in self._num.terms():
                groups.setdefault(int(sum(exps)), {})[tuple(exps)] = c
            ctx = self._num.context()
            self._components = {k: ctx.from_dict(v) for k, v in groups.items()}
        return self._components

    def evaluate(self, point: Sequence[RationalLike]) -> Fraction:
        """Exact value at a rational point (no rounding anywhere)."""
        if len(point) != self.nvars:
            raise StructuralError(
                f"point has {len(point)} coordinates, polynomial has {self.nvars} variables"
            )
        if self.is_zero():
            return Fraction(0)
        xs = [as_rational(v) for v in point]
        q = 1
        for x in xs:
            q = lcm(q, x.denominator)
        ints = [x.numerator * (q // x.denominator) for x in xs]
        if self.is_homogeneous():
            d = self.total_degree()
            return Fraction(int(self._num(*ints)), self._den * q**d)
        total = Fraction(0)
        for k, comp in self._homogeneous_components().items():
            total += Fraction(int(comp(*ints)), q**k)
        return total / self._den

    __call__ = evaluate

    # -- structural transforms --------------------------------------------

    def substitute(self, bindings: Mapping[str, "SparsePolynomial"]) -> "SparsePolynomial":
        """Compose: replace each bound variable by a polynomial.

        All bound polynomials must share one target universe; variables of
        ``self`` that are not bound are mapped to the same-named variable of
        that universe and must therefore exist there.
        """
        if not bindings:
            return self
        for name in bindings:
            if name not in self._names:
                raise StructuralError(f"cannot substitute unknown variable {name!r}")
        targets = {b.variable_names for b in bindings.values()}
        if len(targets) != 1:
            raise StructuralError("substituted polynomials must share one variable universe")
        (target,) = targets
        tctx = _context(target)
        tgens = dict(zip(target, tctx.gens()))
        degrees = self.degrees()
        top_binding = max(max(b.total_degree(), 0) for b in bindings.values())
        _check_exponent(max(self.total_degree(), 0) * max(top_binding, 1), "<composition>")

        images = []
        scale = 1
        for name, deg in zip(self._names, degrees):
            if name in bindings:
                b = bindings[name]
                images.append(b)
            else:
                if deg > 0 and name not in tgens:
                    raise StructuralError(
                        f"variable {name!r} is unbound and absent from the target universe {list(target)}"
                    )
                images.append(None)
        if all(b is None or b._den == 1 for b in images):
            args = [
                b._num if b is not None else tgens.get(name, tctx.from_dict({}))
                for name, b in zip(self._names, images)
            ]
            return self._wrap(target, self._num.compose(*args, ctx=tctx), self._den)
        # rational bindings: evaluate through the rational-coefficient backend
        qctx = flint.fmpq_mpoly_ctx.get(target, ORDERING)
        qself = flint.fmpq_mpoly_ctx.get(self._names, ORDERING).from_dict(
            {e: flint.fmpq(int(c), self._den) for e, c in self._num.terms()}
        )
        qgens = dict(zip(target, qctx.gens()))
        args = []
        for name, b in zip(self._names, images):
            if b is None:
                args.append(qgens.get(name, qctx.from_dict({})))
            else:
                args.append(qctx.from_dict({e: flint.fmpq(int(c), b._den) for e, c in b._num.terms()}))
        composed = qself.compose(*args, ctx=qctx)
        return SparsePolynomial(target, {tuple(map(int, e)): as_rational(c) for e, c in composed.terms()})

    def exact_quotient(self, divisor: "SparsePolynomial") -> "SparsePolynomial":
        """``self / divisor`` when the division is exact; StructuralError otherwise."""
        divisor = self._coerce(divisor)
        if divisor.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        # divide by the primitive part over Z (Gauss's lemma), then by the content
        content = int(divisor._num.content())
        if divisor._num.coefficient(0) < 0:
            content = -content
        primitive = divisor._num / content
        try:
            q = self._num * divisor._den / primitive
        except FlintDomainError:
            raise StructuralError("division is not exact") from None
        if content < 0:
            q, content = -q, -content
        return self._wrap(self._names, q, self._den * content)

    def project(self, variable_names: Iterable[str]) -> "SparsePolynomial":
        """Re-express in another universe containing every variable that occurs."""
        names = _validate_names(variable_names)
        for name, deg in zip(self._names, self.degrees()):
            if deg > 0 and name not in names:
                raise StructuralError(f"variable {name!r} occurs but is missing from {list(names)}")
        return self._wrap(names, self._num.project_to_context(_context(names)), self._den)

    def parity_split(self, name: str) -> tuple["SparsePolynomial", "SparsePolynomial"]:
        """Split into (even, odd) parts by the parity of ``name``'s exponent."""
        idx = self._index(name)
        even: dict = {}
        odd: dict = {}
        for exps, c in self._num.terms():
            (odd if exps[idx] % 2 else even)[tuple(exps)] = c
        ctx = self._num.context()
        return (
            self._wrap(self._names, ctx.from_dict(even), self._den),
            self._wrap(self._names, ctx.from_dict(odd), self._den),
        )

    def deflate(self, strides: Sequence[int]) -> "SparsePolynomial":
        """Divide every exponent of variable ``i`` by ``strides[i]``.

        Refuses (StructuralError) unless every exponent is divisible.
        """
        strides = list(strides)
        if len(strides) != self.nvars or any(s < 1 for s in strides):
            raise StructuralError(f"need {self.nvars} positive strides, got {strides}")
        if not self.is_zero():
            _, actual = self._num.deflation()
            for name, s, a in zip(self._names, strides, actual):
                if int(a) % s:
                    raise StructuralError(f"exponents of {name!r} are not all divisible by {s}")
        return self._wrap(self._names, self._num.deflate(strides), self._den)

    def inflate(self, strides: Sequence[int]) -> "SparsePolynomial":
        strides = list(strides)
        if len(strides) != self.nvars or any(s < 1 for s in strides):
            raise StructuralError(f"need {self.nvars} positive strides, got {strides}")
        for name, d, s in zip(self._names, self.degrees(), strides):
            _check_exponent(d * s, name)
        return self._wrap(self._names, self._num.inflate(strides), self._den)

    def coefficients_in(self, name: str) -> dict[int, "SparsePolynomial"]:
        """Coefficients with respect to one variable: ``{power: coefficient}``.

        Coefficients keep the full universe (``name`` no longer occurs in them).
        """
        idx = self._index(name)
        x = self._num.context().gens()[idx]
        rest = self._num
        out: dict[int, SparsePolynomial] = {}
        power = 0
        while not rest.is_zero():
            c = rest.subs({idx: 0})
            if not c.is_zero():
                out[power] = self._wrap(self._names, c, self._den)
                rest = rest - c
            rest = rest / x
            power += 1
        return out

    def _index(self, name: str) -> int:
        try:
            return self._names.index(name)
        except ValueError:
            raise StructuralError(f"unknown variable {name!r}; universe is {list(self._names)}") from None

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        den = self._den
        terms = []
        for exps, c in self._num.terms():
            q = Fraction(int(c), den)
            terms.append({"c": f"{q.numerator}/{q.denominator}", "e": [int(e) for e in exps]})
        return {"vars": list(self._names), "terms": terms}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, document) -> "SparsePolynomial":
        if isinstance(document, (str, bytes)):
            try:
                document = json.loads(document)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc}") from None
        if not isinstance(document, dict):
            raise ParseError("polynomial document must be an object")
        names = document.get("vars")
        terms = document.get("terms")
        if not isinstance(names, list) or not all(isinstance(v, str) for v in names):
            raise ParseError("'vars' must be a list of strings", "vars")
        if not isinstance(terms, list):
            raise ParseError("'terms' must be a list", "terms")
        seen: dict[Exponent, Fraction] = {}
        for i, term in enumerate(terms):
            where = f"terms[{i}]"
            if not isinstance(term, dict) or set(term) != {"c", "e"}:
                raise ParseError("term must be an object with keys 'c' and 'e'", where)
            exps = term["e"]
            if (
                not isinstance(exps, list)
                or len(exps) != len(names)
                or not all(isinstance(e, int) and not isinstance(e, bool) and e >= 0 for e in exps)
            ):
                raise ParseError(f"'e' must list {len(names)} non-negative integers", where)
            key = tuple(exps)
            if key in seen:
                raise ParseError(f"duplicate monomial {list(key)}", where)
            seen[key] = parse_rational(term["c"], where + ".c")
        try:
            return cls(names, seen)
        except StructuralError as exc:
            raise ParseError(str(exc), "vars") from None

    @classmethod
    def loads(cls, text: str) -> "SparsePolynomial":
        return cls.from_json(text)

    def __repr__(self) -> str:
        body = str(self._num) if self._den == 1 else f"({self._num})/{self._den}"
        return f"SparsePolynomial({list(self._names)}, {body})"

    def __str__(self) -> str:
        return str(self._num) if self._den == 1 else f"({self._num})/{self._den}"


def _validate_names(variable_names) -> tuple[str, ...]:
    names = tuple(variable_names)
    if not all(isinstance(n, str) and n for n in names):
        raise StructuralError(f"variable names must be non-empty strings: {names!r}")
    if len(set(names)) != len(names):
        raise StructuralError(f"duplicate variable names in {list(names)}")
    return names


def poly_add(a: SparsePolynomial, b: SparsePolynomial) -> SparsePolynomial:
    if a.variable_names != b.variable_names:
        raise StructuralError(f"variable universes differ: {list(a.variable_names)} vs {list(b.variable_names)}")
    return a + b


def poly_mul(a: SparsePolynomial, b: SparsePolynomial) -> SparsePolynomial:
    if a.variable_names != b.variable_names:
        raise StructuralError(f"variable universes differ: {list(a.variable_names)} vs {list(b.variable_names)}")
    return a * b


def poly_eval_exact(p: SparsePolynomial, point: Sequence[RationalLike]) -> Fraction:
    return p.evaluate(point)


def poly_substitute(p: SparsePolynomial, bindings: Mapping[str, SparsePolynomial]) -> SparsePolynomial:
    return p.substitute(bindings)
