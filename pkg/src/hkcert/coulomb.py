"""Coulomb potentials and exact certificates that two of them differ.

A potential is a finite set of point charges ``Z_j`` at rational sites
``r_j``.  Subtracting two potentials gives coefficients ``alpha_j`` at the
union of their sites (``alpha_j = Z'_j - Z_j``).  If the difference is not
empty, the constraint

    sum_i sum_j alpha_j / |x_i - r_j| = c

(one term per electron ``i`` and site ``j``) can only hold on the zero set of
a nonzero polynomial ``P`` in the squared distances ``u_ij = |x_i - r_j|^2``.
``P`` is obtained from the radical-elimination relation by putting the first
site's term for electron 1 in the ``delta`` slot, ``c`` in the first ``t``
slot and the remaining terms (negated) in the other ``t`` slots, then clearing
the ``u`` denominators.  Only ``alpha^2`` and ``c^2`` enter, so ``P`` does not
depend on the sign convention of ``alpha``.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import CapacityError, DomainError, InvariantViolation, ParseError, StructuralError
from .poly import SparsePolynomial, as_rational, format_rational, parse_rational
from .radical import DEFAULT_N_MAX, eliminate_radicals

Vec3 = tuple[Fraction, Fraction, Fraction]

BOX_HALF_WIDTH = 64
BOX_DENOMINATOR = 2**16


@dataclass(frozen=True, order=True)
class NuclearSite:
    position: Vec3
    charge: Fraction

    def to_json(self) -> dict:
        return {"Z": format_rational(self.charge), "r": [format_rational(x) for x in self.position]}


def _canonical_sites(sites) -> tuple[NuclearSite, ...]:
    kept = sorted((s for s in sites if s.charge != 0), key=lambda s: s.position)
    for a, b in zip(kept, kept[1:]):
        if a.position == b.position:
            raise StructuralError(f"two sites share the position {[str(x) for x in a.position]}")
    return tuple(kept)


@dataclass(frozen=True)
class CoulombPotential:
    """``v(x) = -sum_j Z_j / |x - r_j|``; sites sorted by position, no zero charges."""

    sites: tuple[NuclearSite, ...]

    def __post_init__(self):
        object.__setattr__(self, "sites", _canonical_sites(self.sites))

    @classmethod
    def from_pairs(cls, pairs) -> "CoulombPotential":
        """Build from ``[(Z, (x, y, z)), ...]`` with exact scalars."""
        return cls(tuple(
            NuclearSite(tuple(as_rational(c) for c in r), as_rational(z)) for z, r in pairs
        ))

    @property
    def M(self) -> int:
        return len(self.sites)

    def to_json(self) -> dict:
        return {"sites": [s.to_json() for s in self.sites]}


@dataclass(frozen=True)
class PotentialDifference:
    """Coefficients ``alpha_j`` of ``v' - v`` at the merged sites (canonical order)."""

    sites: tuple[NuclearSite, ...]

    def __post_init__(self):
        object.__setattr__(self, "sites", _canonical_sites(self.sites))

    @property
    def m(self) -> int:
        return len(self.sites)

    @property
    def alphas(self) -> list[Fraction]:
        return [s.charge for s in self.sites]

    def is_empty(self) -> bool:
        return not self.sites

    def negated(self) -> "PotentialDifference":
        return PotentialDifference(tuple(NuclearSite(s.position, -s.charge) for s in self.sites))

    def to_json(self) -> dict:
        return {"sites": [s.to_json() for s in self.sites]}


def parse_potential(document) -> CoulombPotential:
    """Parse ``{"sites": [{"Z": "p/q", "r": ["p/q", "p/q", "p/q"]}, ...]}``."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(document, dict) or "sites" not in document:
        raise ParseError("potential must be an object with a 'sites' list")
    raw = document["sites"]
    if not isinstance(raw, list):
        raise ParseError("'sites' must be a list", "sites")
    if not raw:
        raise ParseError("potential has no sites", "sites")
    sites = []
    seen = {}
    for i, entry in enumerate(raw):
        where = f"sites[{i}]"
        if not isinstance(entry, dict) or set(entry) != {"Z", "r"}:
            raise ParseError("site must be an object with keys 'Z' and 'r'", where)
        z = parse_rational(entry["Z"], where + ".Z")
        r = entry["r"]
        if not isinstance(r, list) or len(r) != 3:
            raise ParseError("'r' must list three coordinates", where + ".r")
        pos = tuple(parse_rational(x, f"{where}.r[{k}]") for k, x in enumerate(r))
        if pos in seen:
            raise ParseError(f"position duplicates sites[{seen[pos]}]", where + ".r")
        seen[pos] = i
        sites.append(NuclearSite(pos, z))
    return CoulombPotential(tuple(sites))


def potential_difference(v: CoulombPotential, v2: CoulombPotential) -> PotentialDifference:
    """Merged coefficients ``Z2 - Z`` of ``v2`` against ``v`` (zeros dropped)."""
    alpha: dict[Vec3, Fraction] = {}
    for s in v2.sites:
        alpha[s.position] = alpha.get(s.position, Fraction(0)) + s.charge
    for s in v.sites:
        alpha[s.position] = alpha.get(s.position, Fraction(0)) - s.charge
    return PotentialDifference(tuple(NuclearSite(p, a) for p, a in alpha.items() if a != 0))


def constant_shift_check(d: PotentialDifference) -> bool:
    """Whether ``v' - v`` is constant in ``x``.

    Every remaining term blows up at its own site and decays at infinity, and
    after merging no two terms share a site, so only the empty difference is
    constant.
    """
    return d.is_empty()


# ---------------------------------------------------------------------------
# vanishing polynomial


def u_names(N: int, m: int) -> tuple[str, ...]:
    return tuple(f"u{i}_{j}" for i in range(1, N + 1) for j in range(1, m + 1))


def _slot_pairs(N: int, m: int, j0: int) -> list[tuple[int, int]]:
    """(electron, site) pairs feeding t_2..t_n, i.e. all except (1, j0)."""
    return [(i, j) for i in range(1, N + 1) for j in range(1, m + 1) if (i, j) != (1, j0)]


def build_vanishing_polynomial(
    d: PotentialDifference,
    N: int = 1,
    c=None,
    n_max: int = DEFAULT_N_MAX,
) -> SparsePolynomial:
    """Nonzero ``P(u)`` vanishing wherever ``sum_i (v'-v)(x_i) = c``.

    ``c=None`` keeps ``c`` as a trailing variable named ``"c"``; otherwise
    ``c`` is an exact rational.  The variables are ``u{i}_{j}`` for electron
    ``i`` and canonical site ``j``.
    """
    if d.is_empty():
        raise DomainError("the potentials are equal; there is nothing to certify")
    if not isinstance(N, int) or N < 1:
        raise DomainError(f"N must be a positive integer, got {N!r}")
    m = d.m
    n = m * N
    if n > n_max:
        raise CapacityError(f"n = m*N = {m}*{N} = {n} exceeds n_max={n_max}")
    symbolic = c is None
    cval = None if symbolic else as_rational(c)
    names = u_names(N, m)
    out_names = names + ("c",) if symbolic else names
    alphas = d.alphas
    j0 = next(j for j, a in enumerate(alphas, start=1) if a != 0)
    a0sq = alphas[j0 - 1] ** 2

    if n == 1:
        # alpha / |x - r| = c  <=>  c^2 u - alpha^2 = 0 (for the right sign of c)
        if symbolic:
            P = SparsePolynomial(out_names, {(1, 2): 1, (0, 0): -a0sq})
        else:
            P = SparsePolynomial(out_names, {(1,): cval**2, (0,): -a0sq})
        return _assert_nonzero(P)

    family = eliminate_radicals(n, n_max=max(n_max, n))
    K = family.K
    pairs = _slot_pairs(N, m, j0)
    index = {name: k for k, name in enumerate(names)}
    slot_var = [index[f"u{i}_{j}"] for i, j in pairs]
    slot_asq = [alphas[j - 1] ** 2 for _, j in pairs]
    dvar = index[f"u1_{j0}"]

    # Laurent terms in u (negative exponents), optionally with a c exponent
    laurent: dict[tuple[int, ...], Fraction] = {}
    width = len(names) + (1 if symbolic else 0)
    a0_powers = [a0sq**k for k in range(K + 1)]
    for j, member in enumerate(family.members):
        dpow = K - j
        for exps, coeff in member.terms():
            value = coeff * a0_powers[dpow]
            key = [0] * width
            key[dvar] = -dpow
            for b, var, asq in zip(exps[1:], slot_var, slot_asq):
                if b:
                    value *= asq**b
                    key[var] -= b
            if symbolic:
                key[-1] = 2 * exps[0]
            elif exps[0]:
                value *= cval ** (2 * exps[0])
            if value:
                k = tuple(key)
                laurent[k] = laurent.get(k, Fraction(0)) + value
    laurent = {k: v for k, v in laurent.items() if v}
    if not laurent:
        raise InvariantViolation("the cleared relation expanded to the zero polynomial")
    shift = [0] * width
    for k in laurent:
        for idx in range(len(names)):
            shift[idx] = min(shift[idx], k[idx])
    terms = {tuple(e - s for e, s in zip(k, shift)): v for k, v in laurent.items()}
    return _assert_nonzero(SparsePolynomial(out_names, terms))


def _assert_nonzero(P: SparsePolynomial) -> SparsePolynomial:
    if P.is_zero():
        raise InvariantViolation("vanishing polynomial is identically zero")
    return P


# ---------------------------------------------------------------------------
# sampling


def _float(x: Fraction) -> float:
    try:
        return float(x)
    except OverflowError:
        return math.copysign(sys.float_info.max, x)


def sample_configuration(
    d: PotentialDifference,
    N: int,
    seed: int,
    trial: int,
    half_width: int = BOX_HALF_WIDTH,
    denominator: int = BOX_DENOMINATOR,
    max_draws: int = 100,
) -> tuple[list[Vec3], int]:
    """Seeded electron positions with coordinates ``p / denominator``.

    Configurations placing an electron exactly on a site are redrawn; returns
    the configuration and the number of rejected draws.
    """
    rng = np.random.default_rng([seed, trial])
    bound = half_width * denominator
    sites = {s.position for s in d.sites}
    for rejected in range(max_draws):
        raw = rng.integers(-bound, bound + 1, size=(N, 3))
        xs = [tuple(Fraction(int(p), denominator) for p in row) for row in raw]
        if not any(x in sites for x in xs):
            return xs, rejected
    raise DomainError(f"trial {trial}: {max_draws} draws all hit a nucleus")


def squared_distances(d: PotentialDifference, xs: Sequence[Vec3]) -> list[Fraction]:
    """``u_ij`` in the order of :func:`u_names`."""
    return [
        sum(((a - b) ** 2 for a, b in zip(x, s.position)), Fraction(0))
        for x in xs
        for s in d.sites
    ]


@dataclass
class SamplingReport:
    trials: int
    zero_hits: int
    seed: int
    abs_min: float
    abs_median: float
    rejected: int = 0

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "zero_hits": self.zero_hits,
            "seed": self.seed,
            "abs_min": self.abs_min,
            "abs_median": self.abs_median,
        }


def measure_zero_sample(
    P: SparsePolynomial,
    d: PotentialDifference,
    N: int,
    trials: int,
    seed: int,
    half_width: int = BOX_HALF_WIDTH,
    denominator: int = BOX_DENOMINATOR,
) -> SamplingReport:
    """Evaluate ``P`` exactly at seeded random configurations and count zeros."""
    if trials < 1:
        raise DomainError("trials must be at least 1")
    names = u_names(N, d.m)
    if P.variable_names != names:
        raise StructuralError(
            f"polynomial is over {list(P.variable_names)}; sampling needs numeric c and variables {list(names)}"
        )
    values = []
    rejected = 0
    for trial in range(trials):
        xs, r = sample_configuration(d, N, seed, trial, half_width, denominator)
        rejected += r
        if rejected > 100 * trials:
            raise DomainError("too many configurations rejected")
        values.append(abs(P.evaluate(squared_distances(d, xs))))
    values.sort()
    mid = len(values) // 2
    median = values[mid] if len(values) % 2 else (values[mid - 1] + values[mid]) / 2
    return SamplingReport(
        trials=trials,
        zero_hits=sum(1 for v in values if v == 0),
        seed=seed,
        abs_min=_float(values[0]),
        abs_median=_float(median),
        rejected=rejected,
    )


class _Radicals:
    """Arithmetic in Q[r_0..r_{L-1}] / (r_l^2 - u_l) for nonzero rationals u_l.

    Elements are dicts from a bitmask of square roots to a rational coefficient.
    """

    def __init__(self, squares: Sequence[Fraction]):
        self.squares = list(squares)

    def mul(self, a: dict, b: dict) -> dict:
        out: dict[int, Fraction] = {}
        for ma, ca in a.items():
            for mb, cb in b.items():
                c = ca * cb
                both = ma & mb
                l = 0
                while both:
                    if both & 1:
                        c *= self.squares[l]
                    both >>= 1
                    l += 1
                key = ma ^ mb
                out[key] = out.get(key, Fraction(0)) + c
        return {k: v for k, v in out.items() if v}

    def add(self, a: dict, b: dict) -> dict:
        out = dict(a)
        for k, v in b.items():
            out[k] = out.get(k, Fraction(0)) + v
        return {k: v for k, v in out.items() if v}


def engineered_residual(P_symbolic: SparsePolynomial, d: PotentialDifference, xs: Sequence[Vec3]) -> dict:
    """``P(u(x), c(x))`` with ``c(x) = sum_i sum_j alpha_j / |x_i - r_j|``, exactly.

    The square roots ``|x_i - r_j|`` are kept symbolic in a multiquadratic
    extension, so the result is an exact element (empty dict means zero).
    """
    if not P_symbolic.variable_names or P_symbolic.variable_names[-1] != "c":
        raise StructuralError("engineered check needs the polynomial with symbolic c")
    u = squared_distances(d, xs)
    if len(u) + 1 != P_symbolic.nvars:
        raise StructuralError("configuration does not match the polynomial's variables")
    ring = _Radicals(u)
    # c = sum alpha_j * r_ij / u_ij
    alphas = d.alphas * len(xs)
    c = {}
    for l, (a, ul) in enumerate(zip(alphas, u)):
        c = ring.add(c, {1 << l: a / ul})
    c2 = ring.mul(c, c)
    by_power = P_symbolic.coefficients_in("c")
    point = u + [Fraction(0)]
    coeffs = {}
    for k, coeff in by_power.items():
        if k % 2:
            raise InvariantViolation("odd power of c in the vanishing polynomial")
        coeffs[k // 2] = coeff.evaluate(point)
    acc: dict = {}
    for k in range(max(coeffs), -1, -1):
        acc = ring.mul(acc, c2)
        if coeffs.get(k):
            acc = ring.add(acc, {0: coeffs[k]})
    return acc


@dataclass
class ConsistencyReport:
    trials: int
    seed: int
    exact_zeros: int

    def to_json(self) -> dict:
        return {"trials": self.trials, "seed": self.seed, "exact_zeros": self.exact_zeros}


def consistency_check(
    d: PotentialDifference,
    N: int,
    trials: int,
    seed: int,
    P_symbolic: SparsePolynomial | None = None,
    n_max: int = DEFAULT_N_MAX,
) -> ConsistencyReport:
    """At each sampled ``x`` set ``c`` to the actual ``sum_i (v'-v)(x_i)``; ``P`` must vanish."""
    if P_symbolic is None:
        P_symbolic = build_vanishing_polynomial(d, N, None, n_max)
    zeros = 0
    for trial in range(trials):
        xs, _ = sample_configuration(d, N, seed, trial)
        zeros += not engineered_residual(P_symbolic, d, xs)
    return ConsistencyReport(trials, seed, zeros)


# ---------------------------------------------------------------------------
# verdicts


@dataclass
class DistinguishVerdict:
    equal: bool
    vanishing_polynomial: SparsePolynomial | None = None
    sampling: SamplingReport | None = None
    difference: PotentialDifference | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.equal != (self.vanishing_polynomial is None):
            raise InvariantViolation("a verdict carries a certificate exactly when the potentials differ")

    def to_json(self) -> dict:
        return {
            "equal": self.equal,
            "certificate": None if self.vanishing_polynomial is None else self.vanishing_polynomial.to_json(),
            "sampling": None if self.sampling is None else self.sampling.to_json(),
        }


def distinguish(
    v: CoulombPotential,
    v2: CoulombPotential,
    N: int = 1,
    trials: int = 100,
    seed: int = 0,
    n_max: int = DEFAULT_N_MAX,
) -> DistinguishVerdict:
    """Equal potentials, or a symbolic-``c`` certificate plus a ``c = 0`` sampling run."""
    d = potential_difference(v, v2)
    if constant_shift_check(d):
        return DistinguishVerdict(equal=True, difference=d)
    P = build_vanishing_polynomial(d, N, None, n_max)
    P0 = build_vanishing_polynomial(d, N, 0, n_max)
    report = measure_zero_sample(P0, d, N, trials, seed)
    return DistinguishVerdict(equal=False, vanishing_polynomial=P, sampling=report, difference=d)
