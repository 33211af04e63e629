"""Truncated multivariate generalized power series and tree expansions.

A series is a finite sum of sectors.  A sector is a base monomial
(exact rational exponents on every variable, integer log powers) times
a polynomial tail in the *graded* variables (the edge ratios) with
nonnegative integer exponents of total degree at most the truncation
order N.  Ungraded variables (the root difference x_A and the
translation z_A) are never truncated.  Exponent arithmetic is exact
rational; coefficients are complex doubles.

Evaluation uses the principal logarithm, Arg in (-pi, pi); a variable
raised to a non-integer power (or carrying a log factor) must evaluate
off the cut R_{<=0}.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from opetree.coords import (
    CoordSystem,
    a_coordinates,
    on_cut,
    pair_difference,
)
from opetree.trees import Tree

ZERO = Fraction(0)


class SeriesError(ValueError):
    """Invalid series operation (bad leading term, missing value, cut)."""


def binomial(q, k: int) -> Fraction:
    """Generalized binomial coefficient C(q, k) with exact arithmetic."""
    q = Fraction(q)
    out = Fraction(1)
    for i in range(k):
        out = out * (q - i) / (i + 1)
    return out


def phase_pi(nu) -> complex:
    """exp(i*pi*nu) for rational nu, reduced mod 2 before evaluation."""
    nu = Fraction(nu) % 2
    if nu == 0:
        return 1.0 + 0.0j
    if 2 * nu == 1:
        return 1j
    if nu == 1:
        return -1.0 + 0.0j
    if 2 * nu == 3:
        return -1j
    return cmath.exp(1j * math.pi * float(nu))


def _logs_key(logs: Mapping) -> tuple:
    return tuple(sorted((v, int(k)) for v, k in logs.items() if k))


def _ungraded_key(exps: Mapping) -> tuple:
    return tuple(sorted((v, Fraction(q)) for v, q in exps.items() if q))


class GenSeries:
    """Truncated generalized power series over a fixed graded variable set."""

    __slots__ = ("graded", "order", "sectors")

    def __init__(self, graded: Sequence[str], order: int, sectors=None):
        self.graded = tuple(graded)
        self.order = int(order)
        # key: (logs, ungraded, base) with base a Fraction tuple over graded
        # value: tail {int exponent vector: complex coeff}
        self.sectors = {} if sectors is None else sectors

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, c, graded: Sequence[str], order: int) -> "GenSeries":
        s = cls(graded, order)
        if c != 0:
            zero = tuple([ZERO] * len(s.graded))
            s.sectors[((), (), zero)] = {tuple([0] * len(s.graded)): complex(c)}
        return s

    @classmethod
    def monomial(
        cls,
        coeff,
        exponents: Mapping,
        graded: Sequence[str],
        order: int,
        logs: Mapping | None = None,
    ) -> "GenSeries":
        """coeff * prod v^{q_v} * prod (log v)^{k_v}."""
        s = cls(graded, order)
        if coeff == 0:
            return s
        base = tuple(Fraction(exponents.get(g, 0)) for g in s.graded)
        ungraded = _ungraded_key(
            {v: q for v, q in exponents.items() if v not in s.graded}
        )
        key = (_logs_key(logs or {}), ungraded, base)
        s.sectors[key] = {tuple([0] * len(s.graded)): complex(coeff)}
        return s

    # -- bookkeeping -------------------------------------------------------

    def copy(self) -> "GenSeries":
        return GenSeries(
            self.graded,
            self.order,
            {k: dict(t) for k, t in self.sectors.items()},
        )

    def is_zero(self) -> bool:
        return not any(tail for tail in self.sectors.values())

    def n_terms(self) -> int:
        return sum(len(t) for t in self.sectors.values())

    def _prune(self) -> "GenSeries":
        for key in list(self.sectors):
            tail = self.sectors[key]
            for vec in list(tail):
                if tail[vec] == 0:
                    del tail[vec]
            if not tail:
                del self.sectors[key]
        return self

    def _aligned(self, other: "GenSeries"):
        if self.graded == other.graded:
            return self, other
        union = tuple(sorted(set(self.graded) | set(other.graded)))
        return self._embed(union), other._embed(union)

    def _embed(self, union: tuple) -> "GenSeries":
        if union == self.graded:
            return self
        idx = [self.graded.index(g) if g in self.graded else None for g in union]
        out = GenSeries(union, self.order)
        for (logs, ungraded, base), tail in self.sectors.items():
            ung = dict(ungraded)
            newbase = tuple(
                base[i] if i is not None else Fraction(ung.pop(union[k], 0))
                for k, i in enumerate(idx)
            )
            newtail = {}
            for vec, c in tail.items():
                nv = tuple(vec[i] if i is not None else 0 for i in idx)
                newtail[nv] = newtail.get(nv, 0) + c
            key = (logs, tuple(sorted(ung.items())), newbase)
            out._merge_sector(key, newtail)
        return out._prune()

    def _merge_sector(self, key, tail):
        """Add a sector, folding integer shifts of the graded base."""
        logs, ungraded, base = key
        target = None
        if key in self.sectors:
            target = key
        else:
            for (l2, u2, b2) in self.sectors:
                if l2 == logs and u2 == ungraded and all(
                    (q1 - q2).denominator == 1 for q1, q2 in zip(base, b2)
                ):
                    target = (l2, u2, b2)
                    break
        if target is None:
            self.sectors[key] = dict(tail)
            return
        _, _, b2 = target
        common = tuple(min(q1, q2) for q1, q2 in zip(base, b2))
        if common != b2:
            old = self.sectors.pop(target)
            shift = tuple(int(q2 - qc) for q2, qc in zip(b2, common))
            moved = {}
            for vec, c in old.items():
                nv = tuple(v + s for v, s in zip(vec, shift))
                if sum(nv) <= self.order:
                    moved[nv] = moved.get(nv, 0) + c
            target = (logs, ungraded, common)
            self.sectors[target] = moved
        dest = self.sectors[target]
        shift = tuple(int(q1 - qc) for q1, qc in zip(base, target[2]))
        for vec, c in tail.items():
            nv = tuple(v + s for v, s in zip(vec, shift))
            if sum(nv) <= self.order:
                dest[nv] = dest.get(nv, 0) + c

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, GenSeries):
            other = GenSeries.constant(other, self.graded, self.order)
        a, b = self._aligned(other)
        out = GenSeries(a.graded, min(a.order, b.order))
        for key, tail in a.sectors.items():
            out._merge_sector(key, tail)
        for key, tail in b.sectors.items():
            out._merge_sector(key, tail)
        return out._prune()

    __radd__ = __add__

    def __neg__(self):
        out = self.copy()
        for tail in out.sectors.values():
            for vec in tail:
                tail[vec] = -tail[vec]
        return out

    def __sub__(self, other):
        if not isinstance(other, GenSeries):
            other = GenSeries.constant(other, self.graded, self.order)
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, GenSeries):
            out = self.copy()
            c = complex(other)
            for tail in out.sectors.values():
                for vec in tail:
                    tail[vec] *= c
            return out._prune()
        a, b = self._aligned(other)
        order = min(a.order, b.order)
        out = GenSeries(a.graded, order)
        for (l1, u1, b1), t1 in a.sectors.items():
            for (l2, u2, b2), t2 in b.sectors.items():
                logs = _merge_counts(l1, l2)
                ungraded = _merge_fracs(u1, u2)
                base = tuple(q1 + q2 for q1, q2 in zip(b1, b2))
                tail = {}
                for v1, c1 in t1.items():
                    d1 = sum(v1)
                    if d1 > order:
                        continue
                    for v2, c2 in t2.items():
                        if d1 + sum(v2) > order:
                            continue
                        nv = tuple(x + y for x, y in zip(v1, v2))
                        tail[nv] = tail.get(nv, 0) + c1 * c2
                if tail:
                    out._merge_sector((logs, ungraded, base), tail)
        return out._prune()

    __rmul__ = __mul__

    def truncate(self, order: int) -> "GenSeries":
        out = GenSeries(self.graded, min(self.order, order))
        for key, tail in self.sectors.items():
            kept = {v: c for v, c in tail.items() if sum(v) <= out.order}
            if kept:
                out._merge_sector(key, kept)
        return out._prune()

    # -- leading-term operations -------------------------------------------

    def _leading(self):
        """For c*(monomial)*(1+u) series: (key, c, u as a tail dict).

        A unique divisibility-minimal tail monomial is factored into the
        sector base first, so z + z^2 is accepted as z*(1 + z).
        """
        if len(self.sectors) != 1:
            raise SeriesError("operation needs a single-sector series")
        (key,) = self.sectors
        logs, ungraded, base = key
        tail = self.sectors[key]
        if not tail:
            raise SeriesError("zero series has no leading term")
        minimal = [
            v
            for v in tail
            if not any(w != v and all(a <= b for a, b in zip(w, v)) for w in tail)
        ]
        zero = tuple([0] * len(self.graded))
        if len(minimal) != 1:
            raise SeriesError("leading term is not an invertible monomial")
        m0 = minimal[0]
        if m0 != zero:
            base = tuple(b + n for b, n in zip(base, m0))
            key = (logs, ungraded, base)
            tail = {tuple(v - n for v, n in zip(vec, m0)): c for vec, c in tail.items()}
        c = tail[zero]
        if c == 0:
            raise SeriesError("zero leading coefficient")
        u = {v: coeff / c for v, coeff in tail.items() if v != zero}
        return key, c, u

    def pow(self, q) -> "GenSeries":
        """Raise a c*(monomial)*(1+u) series to an exact rational power.

        The leading constant uses the principal branch c^q = exp(q Log c).
        """
        q = Fraction(q)
        key, c, u = self._leading()
        logs, ungraded, base = key
        if logs:
            raise SeriesError("cannot exponentiate a series with log factors")
        if on_cut(c) and q.denominator != 1:
            raise SeriesError("leading coefficient on the cut")
        cq = c ** int(q) if q.denominator == 1 else cmath.exp(q * cmath.log(c))
        newkey = (
            (),
            tuple((v, e * q) for v, e in ungraded),
            tuple(e * q for e in base),
        )
        tail = _binomial_tail(u, q, self.order, len(self.graded))
        for vec in tail:
            tail[vec] *= cq
        out = GenSeries(self.graded, self.order)
        out._merge_sector(newkey, tail)
        return out._prune()

    def log1p(self) -> "GenSeries":
        """log of a series with unit constant term and trivial base."""
        key, c, u = self._leading()
        logs, ungraded, base = key
        if logs or ungraded or any(base) or c != 1:
            raise SeriesError("log1p needs a series of the form 1 + u")
        zero = tuple([0] * len(self.graded))
        tail = {}
        power = {zero: 1.0 + 0j}
        for k in range(1, self.order + 1):
            power = _tail_mul(power, u, self.order)
            if not power:
                break
            sign = (-1.0) ** (k + 1) / k
            for vec, coeff in power.items():
                tail[vec] = tail.get(vec, 0) + sign * coeff
        out = GenSeries(self.graded, self.order)
        if tail:
            out._merge_sector(((), (), zero), tail)
        return out._prune()

    # -- introspection ------------------------------------------------------

    def terms(self) -> list:
        """Flatten to (exponents dict, logs dict, coeff), lexicographic."""
        flat = []
        for (logs, ungraded, base), tail in self.sectors.items():
            for vec, c in tail.items():
                exps = {v: q for v, q in ungraded}
                for g, b, n in zip(self.graded, base, vec):
                    q = b + n
                    if q:
                        exps[g] = q
                key = (tuple(sorted(exps.items())), logs)
                flat.append((key, exps, dict(logs), c))
        flat.sort(key=lambda it: it[0])
        return [(exps, logs, c) for _, exps, logs, c in flat]

    def coefficient(self, exponents: Mapping, logs: Mapping | None = None) -> complex:
        want = {v: Fraction(q) for v, q in exponents.items() if q}
        want_logs = {v: k for v, k in (logs or {}).items() if k}
        for exps, lg, c in self.terms():
            if exps == want and lg == want_logs:
                return c
        return 0j

    def __repr__(self):
        return (
            f"GenSeries(graded={self.graded}, order={self.order}, "
            f"terms={self.n_terms()})"
        )


def _merge_counts(l1, l2):
    d = dict(l1)
    for v, k in l2:
        d[v] = d.get(v, 0) + k
    return tuple(sorted(d.items()))


def _merge_fracs(u1, u2):
    d = dict(u1)
    for v, q in u2:
        d[v] = d.get(v, ZERO) + q
        if d[v] == 0:
            del d[v]
    return tuple(sorted(d.items()))


def _tail_mul(t1, t2, order):
    out = {}
    for v1, c1 in t1.items():
        d1 = sum(v1)
        for v2, c2 in t2.items():
            if d1 + sum(v2) > order:
                continue
            nv = tuple(x + y for x, y in zip(v1, v2))
            out[nv] = out.get(nv, 0) + c1 * c2
    return {v: c for v, c in out.items() if c != 0}


def _binomial_tail(u, q, order, nvars):
    """(1+u)^q truncated: sum_k C(q,k) u^k with u of positive degree."""
    zero = tuple([0] * nvars)
    out = {zero: 1.0 + 0j}
    power = {zero: 1.0 + 0j}
    for k in range(1, order + 1):
        power = _tail_mul(power, u, order)
        if not power:
            break
        coeff = complex(binomial(q, k))
        for vec, c in power.items():
            out[vec] = out.get(vec, 0) + coeff * c
    return {v: c for v, c in out.items() if c != 0}


# ---------------------------------------------------------------------------
# Formal products of configuration-space functions


@dataclass(frozen=True)
class PowerProduct:
    """constant * prod (z_i - z_j)^{s_ij} * prod z_i^{k_i}.

    ``diffs`` lists ((i, j), exponent) factors with exact rational
    exponents; ``powers`` lists (i, k) with nonnegative integer k.
    """

    diffs: tuple = ()
    powers: tuple = ()
    constant: complex = 1.0 + 0j

    def __post_init__(self):
        object.__setattr__(
            self,
            "diffs",
            tuple(((int(i), int(j)), Fraction(s)) for (i, j), s in self.diffs),
        )
        object.__setattr__(
            self, "powers", tuple((int(i), int(k)) for i, k in self.powers)
        )
        for (i, j), _ in self.diffs:
            if i == j:
                raise SeriesError(f"difference factor with i == j == {i}")
        for i, k in self.powers:
            if k < 0:
                raise SeriesError("plain powers must be nonnegative")

    def variables(self) -> set:
        out = set()
        for (i, j), _ in self.diffs:
            out |= {i, j}
        for i, _ in self.powers:
            out.add(i)
        return out

    def __mul__(self, other: "PowerProduct") -> "PowerProduct":
        return PowerProduct(
            self.diffs + other.diffs,
            self.powers + other.powers,
            self.constant * other.constant,
        )


@dataclass(frozen=True)
class BranchPlan:
    """Branch assignment for closed evaluation.

    ``paired`` lists pairs of indices into the difference factors that
    are evaluated jointly as the single-valued combination
    |z|^{2*s2} * z^{s1-s2} (requires the second value conjugate to the
    first and s1 - s2 an integer).  All other factors use the principal
    branch.
    """

    paired: tuple = ()


def evaluate_closed(f: PowerProduct, point: Sequence[complex], plan: BranchPlan | None = None) -> complex:
    """Evaluate a power product at a configuration point."""
    plan = plan or BranchPlan()
    z = {}
    for v in f.variables():
        if v - 1 >= len(point):
            raise SeriesError(f"point has no coordinate z{v}")
        z[v] = complex(point[v - 1])
    paired_idx = set()
    for a, b in plan.paired:
        paired_idx |= {a, b}
    total = complex(f.constant)
    for a, b in plan.paired:
        (i1, j1), s1 = f.diffs[a]
        (i2, j2), s2 = f.diffs[b]
        v1 = z[i1] - z[j1]
        v2 = z[i2] - z[j2]
        if abs(v2 - v1.conjugate()) > 1e-12 * (1 + abs(v1)):
            raise SeriesError("paired factors are not complex conjugates")
        if (s1 - s2).denominator != 1:
            raise SeriesError("paired exponents must differ by an integer")
        total *= abs(v1) ** float(2 * s2) * v1 ** int(s1 - s2)
    for idx, ((i, j), s) in enumerate(f.diffs):
        if idx in paired_idx:
            continue
        v = z[i] - z[j]
        if s.denominator == 1:
            total *= v ** int(s)
            continue
        if on_cut(v):
            raise SeriesError(f"factor (z{i} - z{j}) on the cut with exponent {s}")
        total *= cmath.exp(s * cmath.log(v))
    for i, k in f.powers:
        total *= z[i] ** k
    return total


# ---------------------------------------------------------------------------
# The expansion homomorphism into tree coordinates


@dataclass(frozen=True)
class ExpandedProduct:
    """Result of expanding a power product in tree coordinates."""

    series: GenSeries
    factors: tuple  # FactoredDifference per difference factor
    negative_pairs: tuple  # (i, j) factors whose leading sign was -1


def expand(
    a: Tree | CoordSystem,
    f: PowerProduct,
    order: int,
    conjugate: bool = False,
    negative_branch: str = "upper",
) -> ExpandedProduct:
    """Expand a power product as a truncated series in the A-coordinates.

    Each factor (z_i - z_j)^s is rewritten via the factored difference
    x_A^s c^s zeta^{s m} (1 + P)^s and expanded binomially; plain powers
    use z_i = z_A + x_A Q_i.  A leading sign c = -1 contributes
    exp(i pi s) for the upper convention, exp(-i pi s) for the lower;
    affected factors are reported in ``negative_pairs``.
    """
    cs = a if isinstance(a, CoordSystem) else a_coordinates(a)
    if negative_branch not in ("upper", "lower"):
        raise SeriesError("negative_branch must be 'upper' or 'lower'")
    names = cs.var_names(conjugate=conjugate)
    graded = names["zeta"]
    nvars = len(graded)
    out = GenSeries.constant(f.constant, graded, order)
    facs = []
    negative = []
    for (i, j), s in f.diffs:
        fac = pair_difference(cs, i, j)
        facs.append(fac)
        exps = {names["x"]: s}
        for idx, m in enumerate(fac.monomial):
            if m:
                exps[graded[idx]] = s * m
        coeff = 1.0 + 0j
        if fac.sign == -1:
            negative.append((i, j))
            coeff = phase_pi(s if negative_branch == "upper" else -s)
        piece = GenSeries.monomial(coeff, exps, graded, order)
        (key,) = piece.sectors
        tail_u = {
            vec: complex(c) for vec, c in fac.tail.items() if sum(vec) <= order
        }
        piece.sectors[key] = _scale_tail(
            _binomial_tail(tail_u, s, order, nvars), coeff
        )
        out = out * piece
    for i, k in f.powers:
        # z_i = z_A + x_A Q_i, expanded binomially in the two summands
        qi = cs.q_polys[i]
        piece = GenSeries(graded, order)
        for m in range(k + 1):
            coeff = complex(math.comb(k, m))
            exps = {names["z"]: Fraction(k - m), names["x"]: Fraction(m)}
            mono = GenSeries.monomial(coeff, exps, graded, order)
            if m:
                qpow = {tuple([0] * nvars): 1.0 + 0j}
                dense_qi = {vec: complex(c) for vec, c in qi.items()}
                for _ in range(m):
                    qpow = _tail_mul(qpow, dense_qi, order)
                term = GenSeries(graded, order)
                if qpow:
                    (key,) = mono.sectors
                    term.sectors[key] = _scale_tail(qpow, coeff)
                piece = piece + term
            else:
                piece = piece + mono
        out = out * piece
    return ExpandedProduct(series=out, factors=tuple(facs), negative_pairs=tuple(negative))


def _scale_tail(tail, c):
    if c == 1:
        return dict(tail)
    return {v: c * x for v, x in tail.items()}


# ---------------------------------------------------------------------------
# Evaluation of series


def evaluate_series(s: GenSeries, values: Mapping) -> complex:
    """Sum the series at numeric variable values, principal branches.

    Raises :class:`SeriesError` for a missing variable or a variable on
    the cut raised to a non-integer power or carrying a log factor.
    """
    logv = {}

    def log_of(v):
        if v not in logv:
            val = _value_of(values, v)
            if on_cut(val):
                raise SeriesError(f"variable {v} on the cut")
            logv[v] = cmath.log(val)
        return logv[v]

    pow_tables = {}

    def int_pow(v, n):
        table = pow_tables.setdefault(v, {0: 1.0 + 0j})
        if n not in table:
            val = _value_of(values, v)
            table[n] = val**n
        return table[n]

    total = 0j
    for (logs, ungraded, base), tail in s.sectors.items():
        sector_val = 1.0 + 0j
        for v, k in logs:
            sector_val *= log_of(v) ** k
        for v, q in ungraded:
            sector_val *= _frac_pow(values, v, q, log_of, int_pow)
        base_int = []
        for g, q in zip(s.graded, base):
            if q.denominator == 1:
                base_int.append(int(q))
            else:
                sector_val *= _frac_pow(values, g, q, log_of, int_pow)
                base_int.append(0)
        acc = 0j
        for vec, c in tail.items():
            term = c
            for g, b, n in zip(s.graded, base_int, vec):
                if b + n:
                    term *= int_pow(g, b + n)
            acc += term
        total += sector_val * acc
    return total


def _value_of(values, v):
    if v not in values:
        raise SeriesError(f"no value for variable {v}")
    return complex(values[v])


def _frac_pow(values, v, q, log_of, int_pow):
    if q.denominator == 1:
        return int_pow(v, int(q))
    return cmath.exp(q * log_of(v))


# ---------------------------------------------------------------------------
# JSON form (canonical ordering by lexicographic key)


def series_to_obj(s: GenSeries) -> list:
    out = []
    for exps, logs, c in s.terms():
        out.append(
            {
                "exponents": {v: str(Fraction(q)) for v, q in sorted(exps.items())},
                "logs": {v: int(k) for v, k in sorted(logs.items())},
                "re": c.real,
                "im": c.imag,
            }
        )
    return out
