"""Polynomial relations eliminating the radicals from ``delta = t_1 + ... + t_n``.

For every ``n >= 2`` there is a family ``H_{n,0..K}`` (``K = 2**(n-1)``) of
polynomials in ``s_1..s_n`` with

    sum_j H_{n,j}(t_1^2, ..., t_n^2) * delta^(2(K - j)) = 0

whenever ``delta`` equals the sum of the ``t_j``.  ``H_{n,0} = 1`` and each
``H_{n,j}`` is homogeneous of degree ``j``.

Two independent constructions are provided:

* :func:`eliminate_radicals` runs the induction: start from the ``n = 2``
  relation, substitute ``delta -> delta - t`` for a fresh summand, separate
  the parts even and odd in ``t``, move the odd part across and square.
* :func:`sign_product_family` expands the product of ``delta - sum e_j t_j``
  over all sign vectors ``e`` and reads off the coefficients of ``delta^2``.

Both yield the same canonical family (the squaring step multiplies the two
half products ``Q_n(delta - t) * Q_n(delta + t)``, which is exactly the sign
product one size up), so each serves as the other's oracle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import lcm
from typing import Sequence

import flint
import numpy as np

from .errors import CapacityError, DomainError, InvariantViolation, ParseError, StructuralError
from .poly import ORDERING, SparsePolynomial, as_rational

log = logging.getLogger(__name__)

DEFAULT_N_MAX = 6


def s_names(n: int) -> tuple[str, ...]:
    return tuple(f"s{i}" for i in range(1, n + 1))


@dataclass(frozen=True, eq=True)
class RadicalFamily:
    """``members[j]`` is ``H_{n,j}`` over the variables ``s1..sn``."""

    n: int
    members: tuple[SparsePolynomial, ...]

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"family size n must be positive, got {self.n}")
        if len(self.members) != 2 ** (self.n - 1) + 1:
            raise StructuralError(
                f"family for n={self.n} needs {2 ** (self.n - 1) + 1} members, got {len(self.members)}"
            )
        names = s_names(self.n)
        for j, m in enumerate(self.members):
            if m.variable_names != names:
                raise StructuralError(f"member {j} is over {list(m.variable_names)}, expected {list(names)}")

    @property
    def K(self) -> int:
        return 2 ** (self.n - 1)

    def term_counts(self) -> list[int]:
        return [len(m) for m in self.members]

    def to_json(self) -> dict:
        return {"n": self.n, "members": [m.to_json() for m in self.members]}

    @classmethod
    def from_json(cls, document) -> "RadicalFamily":
        if not isinstance(document, dict) or set(document) != {"n", "members"}:
            raise ParseError("family document must be an object with keys 'n' and 'members'")
        n = document["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ParseError("'n' must be a positive integer", "n")
        if not isinstance(document["members"], list):
            raise ParseError("'members' must be a list", "members")
        members = []
        for j, m in enumerate(document["members"]):
            try:
                members.append(SparsePolynomial.from_json(m))
            except ParseError as exc:
                raise ParseError(str(exc), f"members[{j}]") from None
        try:
            return cls(n, tuple(members))
        except StructuralError as exc:
            raise ParseError(str(exc), "members") from None


def _check_n(n: int, n_max: int) -> None:
    if not isinstance(n, int) or isinstance(n, bool):
        raise DomainError(f"n must be an integer, got {n!r}")
    if n < 2:
        raise DomainError(f"n must satisfy n >= 2, got n={n}")
    if n > n_max:
        raise CapacityError(
            f"n={n} exceeds n_max={n_max}: the relation has degree 2^(n-1) = {2 ** (n - 1)} "
            f"in delta^2 and the term count grows roughly like its {n}-variable monomial count"
        )


# ---------------------------------------------------------------------------
# inductive construction


def _base_family() -> RadicalFamily:
    """The ``n = 2`` relation t1^4 + t2^4 - 2 t1^2 t2^2 - 2 d^2 (t1^2 + t2^2) + d^4."""
    delta, t1, t2 = SparsePolynomial.generators(("delta", "t1", "t2"))
    relation = t1**4 + t2**4 - 2 * t1**2 * t2**2 - 2 * delta**2 * (t1**2 + t2**2) + delta**4
    # every exponent is even; rewrite in D = delta^2, s_j = t_j^2
    relation = SparsePolynomial(("D", "s1", "s2"), relation.deflate([2, 2, 2]).to_dict())
    return _family_from_delta_polynomial(2, relation)


def _shifted_power_parts(k: int):
    """Even and odd parts of ``(delta - t)^(2k)`` after the odd part is divided by ``delta*t``.

    Both are returned over ``(D, T)`` with ``D = delta^2`` and ``T = t^2``.
    """
    delta, t = SparsePolynomial.generators(("delta", "t"))
    power = (delta ** (2 * k)).substitute({"delta": delta - t, "t": t})
    even, odd = power.parity_split("t")
    even = even.deflate([2, 2])
    odd = odd.exact_quotient(delta * t).deflate([2, 2]) if odd else odd
    rename = lambda p: SparsePolynomial(("D", "T"), p.to_dict())  # noqa: E731
    return rename(even), rename(odd)


def _step(family: RadicalFamily) -> RadicalFamily:
    """Pass from ``n`` summands to ``n + 1``.

    With ``g_k`` the coefficient of ``D^k`` (``g_k = H_{n,K-k}``) write
    ``sum_k g_k (delta - t)^(2k) = E + delta*t*O``.  Moving the odd part
    across and squaring gives ``E^2 - D*T*O^2 = 0``, collected here block by
    block: ``E^2 - D T O^2 = sum_{k,l} g_k g_l (e_k e_l - D T o_k o_l)``.
    """
    n, K = family.n, family.K
    names = s_names(n + 1)
    ctx = flint.fmpz_mpoly_ctx.get(names, ORDERING)
    T = ctx.gens()[-1]
    g = []
    den = 1
    for k in range(K + 1):
        member = family.members[K - k]
        den = lcm(den, member.denominator)
        g.append(member)
    # work with integer numerators scaled to the common denominator
    gnum = [m.numerator.project_to_context(ctx) * (den // m.denominator) for m in g]
    parts = [_shifted_power_parts(k) for k in range(K + 1)]
    D_, T_ = SparsePolynomial.generators(("D", "T"))

    K2 = 2 * K
    acc = [ctx.from_dict({}) for _ in range(K2 + 1)]
    for k in range(K + 1):
        ek, ok = parts[k]
        for l in range(k, K + 1):
            el, ol = parts[l]
            block = ek * el - D_ * T_ * ok * ol
            if not block:
                continue
            weight = 1 if k == l else 2
            gg = gnum[k] * gnum[l]
            for (a, b), c in block.terms():
                # c is integral: binomial coefficients only
                acc[a] += gg * (T**b) * (int(c) * weight)
    members = []
    for j in range(K2 + 1):
        members.append(SparsePolynomial._wrap(names, acc[K2 - j], den * den))
    return RadicalFamily(n + 1, tuple(members))


@lru_cache(maxsize=None)
def _induction(n: int) -> RadicalFamily:
    if n == 2:
        return _base_family()
    return _step(_induction(n - 1))


def eliminate_radicals(n: int, n_max: int = DEFAULT_N_MAX) -> RadicalFamily:
    """The family for ``n`` summands, built by repeated substitute-separate-square."""
    _check_n(n, n_max)
    family = _induction(n)
    log.info("induction n=%d term counts %s", n, family.term_counts())
    return family


# ---------------------------------------------------------------------------
# sign-product oracle


def _product_tree(factors: list):
    while len(factors) > 1:
        nxt = [factors[i] * factors[i + 1] for i in range(0, len(factors) - 1, 2)]
        if len(factors) % 2:
            nxt.append(factors[-1])
        factors = nxt
    return factors[0]


def _assert_even(poly, names, what: str) -> None:
    if poly.is_zero():
        return
    for name, stride in zip(names, poly.deflation()[1]):
        # a stride of 0 means the variable does not occur
        if int(stride) % 2:
            raise InvariantViolation(f"{what}: odd power of {name} survived the expansion")


def _sign_product(n: int):
    """Expanded prod_{e in {+-1}^n} (delta - sum e_j t_j), over (D, s1..sn).

    The factors are grouped by the sign of ``e_1 e_n``: with ``u = t1 + tn``
    and ``w = t1 - tn`` the product is ``R(u) * R(w)``, where ``R(v)`` is the
    product over the remaining ``n - 1`` signs of ``delta - e v - ...``.
    ``R`` is expanded by a balanced product tree; it is even in every
    variable, so it is rewritten in squares before the two copies are
    multiplied with ``u^2`` and ``w^2`` kept as independent variables.  Only
    then are ``(t1 +- tn)^2`` substituted.
    """
    inner = ("delta", "v") + tuple(f"t{i}" for i in range(2, n))
    ictx = flint.fmpz_mpoly_ctx.get(inner, ORDERING)
    idelta, v, *mid = ictx.gens()
    factors = []
    for mask in range(2 ** (n - 1)):
        lin = idelta
        for pos, x in enumerate([v] + mid):
            lin = lin + x if (mask >> pos) & 1 else lin - x
        factors.append(lin)
    R = _product_tree(factors)
    _assert_even(R, inner, f"half sign product for n={n}")
    R = R.deflate([2] * len(inner))

    pnames = ("D", "U", "W") + tuple(f"S{i}" for i in range(2, n))
    pctx = flint.fmpz_mpoly_ctx.get(pnames, ORDERING)
    D, U, W, *S = pctx.gens()
    both = R.compose(D, U, *S, ctx=pctx) * R.compose(D, W, *S, ctx=pctx)

    # s1 and sn temporarily hold t1 and tn until the final deflation
    names = ("D",) + s_names(n)
    qctx = flint.fmpz_mpoly_ctx.get(names, ORDERING)
    D2, t1, *rest = qctx.gens()
    tn = rest[-1]
    Q = both.compose(D2, (t1 + tn) ** 2, (t1 - tn) ** 2, *rest[:-1], ctx=qctx)
    strides = [int(x) for x in Q.deflation()[1]]
    if strides[1] % 2 or strides[-1] % 2:
        raise InvariantViolation(f"sign product for n={n}: odd power of t1 or t{n} survived the expansion")
    strides = [1] * len(names)
    strides[1] = strides[-1] = 2
    return Q.deflate(strides)


def _family_from_delta_polynomial(n: int, q: SparsePolynomial) -> RadicalFamily:
    """Split a polynomial over (D, s1..sn), monic of degree K in D, into members."""
    K = 2 ** (n - 1)
    names = s_names(n)
    target = flint.fmpz_mpoly_ctx.get(names, ORDERING)
    num = q.numerator
    D = num.context().gens()[0]
    coeffs = []
    rest = num
    for _ in range(K + 1):
        low = rest.subs({0: 0})
        coeffs.append(low)
        rest = (rest - low) / D
    if not rest.is_zero():
        raise InvariantViolation(f"relation for n={n} has D-degree above {K}")
    members = tuple(SparsePolynomial._wrap(names, coeffs[K - j].project_to_context(target), q.denominator) for j in range(K + 1))
    return RadicalFamily(n, members)


@lru_cache(maxsize=None)
def _oracle(n: int) -> RadicalFamily:
    return _family_from_delta_polynomial(n, SparsePolynomial.from_flint(_sign_product(n)))


def sign_product_family(n: int, n_max: int = DEFAULT_N_MAX) -> RadicalFamily:
    """The family read off the fully expanded sign product (independent oracle)."""
    _check_n(n, n_max)
    family = _oracle(n)
    log.info("sign product n=%d term counts %s", n, family.term_counts())
    return family


# ---------------------------------------------------------------------------
# verification


def identity_residuals(family: RadicalFamily, t: Sequence, deltas: Sequence) -> list[Fraction]:
    """Exact ``sum_j H_j(t^2) delta^(2(K-j))`` for each ``delta`` in ``deltas``.

    Member values are computed once and shared between the deltas.
    """
    if len(t) != family.n:
        raise StructuralError(f"expected {family.n} values of t, got {len(t)}")
    ts = [as_rational(x) for x in t]
    ds = [as_rational(x) for x in deltas]
    q = 1
    for x in ts + ds:
        q = lcm(q, x.denominator)
    # integer representatives; members are homogeneous so H_j(t^2) = H_j(p^2) / q^(2j)
    squares = [(x.numerator * (q // x.denominator)) ** 2 for x in ts]
    values = [m.evaluate(squares) for m in family.members]
    K = family.K
    out = []
    for d in ds:
        dd = (d.numerator * (q // d.denominator)) ** 2
        total = Fraction(0)
        power = 1
        for j in range(K, -1, -1):
            total += values[j] * power
            power *= dd
        out.append(total / Fraction(q) ** (2 * K))
    return out


def verify_identity(family: RadicalFamily, t: Sequence, delta=None) -> Fraction:
    """Residual of the relation at ``t``; ``delta`` defaults to ``sum(t)``.

    Passing ``delta`` explicitly is a debugging entry point for evaluating
    the relation off the constraint.
    """
    if len(t) != family.n:
        raise StructuralError(f"expected {family.n} values of t, got {len(t)}")
    if delta is None:
        delta = sum((as_rational(x) for x in t), Fraction(0))
    return identity_residuals(family, t, [delta])[0]


@dataclass
class StructureReport:
    unit_leading: bool
    homogeneous: bool
    monic_final: bool
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.unit_leading and self.homogeneous and self.monic_final

    def to_json(self) -> dict:
        return {
            "unit_leading": self.unit_leading,
            "homogeneous": self.homogeneous,
            "monic_final": self.monic_final,
            "violations": list(self.violations),
        }


def check_structure(family: RadicalFamily) -> StructureReport:
    """Check ``H_0 = 1``, homogeneity of degree ``j`` and monicity of the last member.

    "Monic" is read as: the graded-lex leading coefficient equals 1.
    """
    violations = []
    first = family.members[0]
    unit = first == 1
    if not unit:
        violations.append(f"member 0 is {first}, expected 1")
    homogeneous = True
    for j, m in enumerate(family.members[1:], start=1):
        if m.is_zero():
            homogeneous = False
            violations.append(f"member {j} is zero")
        elif not m.is_homogeneous(j):
            homogeneous = False
            violations.append(
                f"member {j} has total degrees {m.min_total_degree()}..{m.total_degree()}, expected exactly {j}"
            )
    last = family.members[-1]
    monic = False
    if last.is_zero():
        violations.append("final member is zero")
    else:
        exps, lc = last.leading_term()
        monic = last.total_degree() == family.K and lc == 1
        if not monic:
            violations.append(
                f"final member has degree {last.total_degree()} and leading coefficient {lc} at {list(exps)}; "
                f"expected degree {family.K} and coefficient 1"
            )
    return StructureReport(unit, homogeneous, monic, violations)


def homogeneity_by_scaling(member: SparsePolynomial, degree: int) -> bool:
    """Symbolic check ``H(lam*s) == lam^degree * H(s)`` with a fresh variable ``lam``."""
    names = member.variable_names + ("lam",)
    lam = SparsePolynomial.variable(names, "lam")
    bindings = {name: SparsePolynomial.variable(names, name) * lam for name in member.variable_names}
    lhs = member.substitute(bindings)
    return lhs == member.project(names) * lam**degree


def random_tuple(n: int, seed: int, trial: int, bound: int = 2**16, max_den: int = 64) -> list[Fraction]:
    """Seeded rational tuple ``p_j / q`` with one shared denominator per trial."""
    rng = np.random.default_rng([seed, trial])
    q = int(rng.integers(1, max_den + 1))
    return [Fraction(int(p), q) for p in rng.integers(-bound, bound + 1, size=n)]


@dataclass
class VerificationReport:
    n: int
    trials: int
    seed: int
    vanishing: int
    perturbed_nonzero: int
    perturbation: Fraction = Fraction(1)

    @property
    def all_vanish(self) -> bool:
        return self.vanishing == self.trials

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "vanishing": self.vanishing,
            "perturbation": f"{self.perturbation.numerator}/{self.perturbation.denominator}",
            "perturbed_nonzero": self.perturbed_nonzero,
        }


def verify_sweep(family: RadicalFamily, trials: int, seed: int, perturbation=1) -> VerificationReport:
    """Residuals on ``trials`` seeded tuples, on and off the constraint ``delta = sum t``."""
    if trials < 1:
        raise DomainError("trials must be at least 1")
    eps = as_rational(perturbation)
    if eps == 0:
        raise DomainError("perturbation must be nonzero")
    vanishing = nonzero = 0
    for trial in range(trials):
        t = random_tuple(family.n, seed, trial)
        delta = sum(t, Fraction(0))
        on, off = identity_residuals(family, t, [delta, delta + eps])
        vanishing += on == 0
        nonzero += off != 0
    return VerificationReport(family.n, trials, seed, vanishing, nonzero, eps)
