"""The rank-one even unimodular lattice free boson with boundary.

Charges are integer pairs (n, m) in the hyperbolic lattice with Gram
matrix [[0, 1], [1, 0]].  For compactification radius R with R^2
rational, the left/right movers are a = (n/R + mR)/sqrt(2) and
abar = (n/R - mR)/sqrt(2); every pairing the correlators need is a
rational combination of u^2 = 1/(2 R^2), w^2 = R^2/2 and u*w = 1/2, so
all exponents are exact rationals.  Cocycle values are roots of unity
tracked as exact phase exponents nu, value exp(i pi nu).

Closed-form correlators are products over coordinate pairs with a fixed
branch plan (bulk pairs combined into single-valued factors, all mixed
pairs principal); per-tree expansions apply the series expansion
homomorphism in the (doubled) tree's coordinates and carry the OPE
structure constants of the tree.  The verification suites check the
bootstrap cocycle identities, per-tree convergence to the single
correlator with the predicted inter-region phases, single-valuedness
under numeric loops, and the half-loop skew relation.
"""

from __future__ import annotations

import cmath
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction

from opetree.coords import (
    CoordError,
    a_coordinates,
    nested_configuration,
    nested_configuration_open,
    on_cut,
    phi_embedding,
    psi,
    region_membership,
    validate_halfplane_point,
)
from opetree.series import (
    BranchPlan,
    GenSeries,
    PowerProduct,
    evaluate_closed,
    evaluate_series,
    expand,
    phase_pi,
)
from opetree.trees import (
    ClosedLeaf,
    Node,
    OpenLeaf,
    Tau,
    Tree,
    doubling,
    format_tree,
    is_colored,
    leaf_order,
    validate_colored,
    validate_tree,
)

Charge = tuple  # (n, m) integer pair


class LatticeError(ValueError):
    """Invalid charge data, nonconservation, or failed construction step."""


# ---------------------------------------------------------------------------
# Lattice and model

GRAM = ((0, 1), (1, 0))


def lattice_pairing(alpha: Charge, beta: Charge) -> int:
    """(alpha, beta) in the hyperbolic Gram form [[0,1],[1,0]]."""
    (n, m), (n2, m2) = alpha, beta
    return n * m2 + m * n2


def epsilon_exponent(alpha: Charge, beta: Charge) -> int:
    """epsilon(alpha, beta) = (-1)^e from the bimultiplicative extension of
    the basis table (1 for k <= l, (-1)^{(e_k,e_l)} for k > l)."""
    (_, m), (n2, _) = alpha, beta
    return (m * n2) % 2


def epsilon_cocycle(alpha: Charge, beta: Charge) -> int:
    return -1 if epsilon_exponent(alpha, beta) else 1


@dataclass(frozen=True)
class NarainModel:
    """Compactified free boson on the (1,1) lattice, R^2 rational."""

    r_squared: Fraction

    def __post_init__(self):
        rsq = Fraction(self.r_squared)
        if rsq <= 0:
            raise LatticeError("R^2 must be a positive rational")
        object.__setattr__(self, "r_squared", rsq)
        object.__setattr__(self, "_u2", 1 / (2 * rsq))
        object.__setattr__(self, "_w2", rsq / 2)

    def frame_product(self, v1, v2) -> Fraction:
        """Product of two left-mover frame vectors x*u + y*w, using
        u^2 = 1/(2R^2), w^2 = R^2/2, uw = 1/2."""
        (x1, y1), (x2, y2) = v1, v2
        return (
            x1 * x2 * self._u2
            + y1 * y2 * self._w2
            + Fraction(x1 * y2 + x2 * y1, 2)
        )

    @staticmethod
    def a_vec(alpha: Charge):
        return (alpha[0], alpha[1])

    @staticmethod
    def abar_vec(alpha: Charge):
        return (alpha[0], -alpha[1])

    def aa(self, alpha, beta) -> Fraction:
        return self.frame_product(self.a_vec(alpha), self.a_vec(beta))

    def abarbar(self, alpha, beta) -> Fraction:
        return self.frame_product(self.abar_vec(alpha), self.abar_vec(beta))

    def a_abar(self, alpha, beta) -> Fraction:
        return self.frame_product(self.a_vec(alpha), self.abar_vec(beta))

    def weight(self, alpha) -> tuple:
        return self.aa(alpha, alpha) / 2, self.abarbar(alpha, alpha) / 2

    def charge_values(self, alpha) -> tuple:
        n, m = alpha
        r = math.sqrt(float(self.r_squared))
        return (n / r + m * r) / math.sqrt(2), (n / r - m * r) / math.sqrt(2)


# ---------------------------------------------------------------------------
# Boundary data: reflection, boundary charge map, cocycles


@dataclass
class BoundaryData:
    """Reflection sign, boundary charges, and the cocycles eta and sigma.

    sigma is stored as exact phase exponents (value exp(i pi nu)),
    solved greedily along the lexicographic spanning tree of the lattice
    with sigma(0) = sigma(e1) = sigma(e2) = 1.  The boundary charge
    group is rank one, so the commutator-map construction yields the
    trivial eta (basis table has no off-diagonal entries).
    """

    model: NarainModel
    rho: int
    sigma_table: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rho not in (1, -1):
            raise LatticeError("reflection sign must be +1 or -1")
        self.sigma_table.setdefault((0, 0), Fraction(0))
        self.sigma_table.setdefault((1, 0), Fraction(0))
        self.sigma_table.setdefault((0, 1), Fraction(0))

    def t_coeff(self, alpha: Charge) -> int:
        """Boundary charge of alpha in units of the group generator."""
        n, m = alpha
        return n if self.rho == 1 else m

    @property
    def kernel_generator(self) -> Charge:
        return (0, 1) if self.rho == 1 else (1, 0)

    @property
    def m_generator(self) -> Charge:
        return (1, 0) if self.rho == 1 else (0, 1)

    def t_vec(self, k: int):
        """t = a + rho*abar of k times the group generator, as a frame vector."""
        return (2 * k, 0) if self.rho == 1 else (0, 2 * k)

    def phi_abar_vec(self, alpha: Charge):
        """The reflected right mover phi(pbar alpha) as a left frame vector."""
        n, m = alpha
        return (self.rho * n, -self.rho * m)

    def alpha_phi_beta(self, alpha: Charge, beta: Charge) -> int:
        """(alpha, phi beta) in the lattice form; always an integer."""
        val = self.model.frame_product(
            self.model.a_vec(alpha), self.phi_abar_vec(beta)
        ) - self.model.frame_product(
            self.model.abar_vec(alpha),
            tuple(self.rho * v for v in self.model.a_vec(beta)),
        )
        if val.denominator != 1:
            raise LatticeError("(alpha, phi beta) failed to be an integer")
        return int(val)

    def eta_exponent(self, k1: int, k2: int) -> Fraction:
        return Fraction(0)

    def eta(self, k1: int, k2: int) -> complex:
        return phase_pi(self.eta_exponent(k1, k2))

    def commutator_exponent(self, alpha: Charge, beta: Charge) -> Fraction:
        """c(alpha,beta) = exp(-i pi ((alpha,beta) + (alpha, phi beta)))."""
        return Fraction(
            -(lattice_pairing(alpha, beta) + self.alpha_phi_beta(alpha, beta))
        )

    def epsilon_prime_exponent(self, alpha: Charge, beta: Charge) -> Fraction:
        """eps' = eps * eta(ta,tb)^{-1} * exp(i pi (phi pbar a, p b))."""
        return (
            Fraction(epsilon_exponent(alpha, beta))
            - self.eta_exponent(self.t_coeff(alpha), self.t_coeff(beta))
            + self.model.frame_product(
                self.phi_abar_vec(alpha), self.model.a_vec(beta)
            )
        ) % 2

    def sigma_exponent(self, alpha: Charge) -> Fraction:
        alpha = (int(alpha[0]), int(alpha[1]))
        if alpha in self.sigma_table:
            return self.sigma_table[alpha]
        n, m = alpha
        # greedy coboundary solve, reducing n first, then m:
        # sigma(x + y) = sigma(x) sigma(y) / eps'(x, y)
        if n > 0:
            prev = (n - 1, m)
            nu = (
                self.sigma_exponent(prev)
                + self.sigma_exponent((1, 0))
                - self.epsilon_prime_exponent(prev, (1, 0))
            )
        elif n < 0:
            nxt = (n + 1, m)
            nu = (
                self.epsilon_prime_exponent(alpha, (1, 0))
                + self.sigma_exponent(nxt)
                - self.sigma_exponent((1, 0))
            )
        elif m > 0:
            prev = (0, m - 1)
            nu = (
                self.sigma_exponent(prev)
                + self.sigma_exponent((0, 1))
                - self.epsilon_prime_exponent(prev, (0, 1))
            )
        else:
            nxt = (0, m + 1)
            nu = (
                self.epsilon_prime_exponent(alpha, (0, 1))
                + self.sigma_exponent(nxt)
                - self.sigma_exponent((0, 1))
            )
        nu %= 2
        self.sigma_table[alpha] = nu
        return nu

    def sigma(self, alpha: Charge) -> complex:
        return phase_pi(self.sigma_exponent(alpha))

    def materialize(self, box: int) -> None:
        for n in range(-box, box + 1):
            for m in range(-box, box + 1):
                self.sigma_exponent((n, m))

    def perturbed(self, alpha: Charge, box: int) -> "BoundaryData":
        """Negative control: copy with sigma(alpha) sign-flipped after the
        box is materialized; no other entry is recomputed."""
        self.materialize(box)
        table = dict(self.sigma_table)
        table[tuple(alpha)] = (table[tuple(alpha)] + 1) % 2
        return BoundaryData(self.model, self.rho, table)


def build_boundary(model: NarainModel, rho: int, check_box: int = 6) -> BoundaryData:
    """Construct boundary data for the reflection sign rho.

    Verifies that eps' is symmetric (the precondition for the coboundary
    solve) before solving; asymmetry is reported, never patched.
    """
    bd = BoundaryData(model, rho)
    gens = [(1, 0), (0, 1), (1, 1), (-1, 2)]
    for n in range(-check_box, check_box + 1):
        for m in range(-check_box, check_box + 1):
            a = (n, m)
            for b in gens:
                if bd.epsilon_prime_exponent(a, b) != bd.epsilon_prime_exponent(b, a):
                    raise LatticeError(f"eps' not symmetric at {a}, {b}")
    bd.materialize(check_box)
    return bd


# ---------------------------------------------------------------------------
# Verification reports


@dataclass
class VerifyReport:
    name: str
    params: dict
    samples: list
    max_rel_err: float
    tolerance: float
    passed: bool
    runtime: float
    notes: list = field(default_factory=list)

    def to_obj(self, include_runtime: bool = False) -> dict:
        out = {
            "check": self.name,
            "params": self.params,
            "samples": self.samples,
            "max_rel_err": self.max_rel_err,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "notes": self.notes,
        }
        if include_runtime:
            out["runtime_s"] = self.runtime
        return out

    def text(self) -> str:
        lines = [
            f"[{'PASS' if self.passed else 'FAIL'}] {self.name}"
            f"  max_rel_err={self.max_rel_err:.3e}  tol={self.tolerance:.1e}"
            f"  ({self.runtime:.2f}s)"
        ]
        for note in self.notes:
            lines.append(f"    - {note}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Closed-form correlators


def bulk_correlator(model: NarainModel, dual: Charge, insertions) -> complex:
    """Sphere correlator of lattice vertex operators.

    epsilon prefactor over the insertion order times the single-valued
    pair product |z_ij|^{2 abar_i abar_j} z_ij^{(alpha_i, alpha_j)};
    zero unless the charges sum to the dual charge.
    """
    charges = [tuple(a) for a, _ in insertions]
    points = [complex(z) for _, z in insertions]
    if (sum(n for n, _ in charges), sum(m for _, m in charges)) != tuple(dual):
        return 0j
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if points[i] == points[j]:
                raise LatticeError("coincident insertion points")
    nu = 0
    value = 1.0 + 0j
    for i in range(len(charges)):
        for j in range(i + 1, len(charges)):
            nu += epsilon_exponent(charges[i], charges[j])
            v = points[i] - points[j]
            bb = model.abarbar(charges[i], charges[j])
            k = model.aa(charges[i], charges[j]) - bb
            if k.denominator != 1:
                raise LatticeError("bulk pair exponents differ non-integrally")
            value *= abs(v) ** float(2 * bb) * v ** int(k)
    return phase_pi(nu) * value


def reference_tree(r: int, s: int) -> Tree:
    """Right comb tau(c1) o (tau(c2) o (... o (o_{r+1} o ...)))."""
    items = [Tau(ClosedLeaf(k)) for k in range(1, r + 1)]
    items += [OpenLeaf(r + j) for j in range(1, s + 1)]
    if not items:
        raise LatticeError("need at least one insertion")
    out = items[-1]
    for item in reversed(items[:-1]):
        out = Node(item, out)
    return out


def ope_prefactor_exponent(bd: BoundaryData, e: Tree, bulk_charges, bdry_charges) -> Fraction:
    """Phase exponent of the product of OPE structure constants over the
    tree: epsilon at closed vertices, sigma at Tau, eta at open vertices."""
    r = len(bulk_charges)

    def walk(t):
        if isinstance(t, ClosedLeaf):
            return Fraction(0), "c", tuple(bulk_charges[t.label - 1])
        if isinstance(t, OpenLeaf):
            return Fraction(0), "o", int(bdry_charges[t.label - r - 1])
        if isinstance(t, Tau):
            nu, kind, ch = walk(t.child)
            if kind != "c":
                raise LatticeError("Tau over a non-closed subtree")
            return nu + bd.sigma_exponent(ch), "o", bd.t_coeff(ch)
        if isinstance(t, Node):
            nu1, k1, c1 = walk(t.left)
            nu2, k2, c2 = walk(t.right)
            if k1 != k2:
                raise LatticeError("mixed colors at a tree vertex")
            if k1 == "c":
                return (
                    nu1 + nu2 + epsilon_exponent(c1, c2),
                    "c",
                    (c1[0] + c2[0], c1[1] + c2[1]),
                )
            return nu1 + nu2 + bd.eta_exponent(c1, c2), "o", c1 + c2
        raise LatticeError(f"unexpected node {t!r}")

    nu, kind, _ = walk(e)
    if kind != "o":
        raise LatticeError("correlator tree must be o-colored")
    return nu % 2


def _doubled_charge_frames(bd: BoundaryData, bulk_charges, bdry_charges) -> dict:
    """Left frame vectors of the doubled chiral charges by doubled label."""
    model = bd.model
    r = len(bulk_charges)
    frames = {}
    for i, alpha in enumerate(bulk_charges, start=1):
        frames[2 * i - 1] = model.a_vec(alpha)
        frames[2 * i] = bd.phi_abar_vec(alpha)
    for j, k in enumerate(bdry_charges, start=1):
        frames[2 * r + j] = bd.t_vec(int(k))
    return frames


def mixed_power_product(bd: BoundaryData, bulk_charges, bdry_charges):
    """Doubled pair product and branch plan, in doubled labels."""
    model = bd.model
    r, s = len(bulk_charges), len(bdry_charges)
    frames = _doubled_charge_frames(bd, bulk_charges, bdry_charges)
    n = 2 * r + s
    diffs = []
    for k in range(1, n + 1):
        for l in range(k + 1, n + 1):
            q = model.frame_product(frames[k], frames[l])
            if q != 0:
                diffs.append(((k, l), q))
    index = {pair: idx for idx, (pair, _) in enumerate(diffs)}
    paired = []
    for i in range(1, r + 1):
        for j in range(i + 1, r + 1):
            a = index.get((2 * i - 1, 2 * j - 1))
            b = index.get((2 * i, 2 * j))
            if a is not None and b is not None:
                paired.append((a, b))
    return PowerProduct(diffs=tuple(diffs)), BranchPlan(paired=tuple(paired))


def mixed_correlator(
    model: NarainModel, bd: BoundaryData, dual: int, bulk_insertions, bdry_insertions
) -> complex:
    """Upper half-plane correlator with boundary, in closed form.

    Normalized by the OPE prefactor of the right-comb reference tree;
    the value is the doubled pair product under the fixed branch plan.
    Zero unless the boundary charge is conserved.
    """
    bulk_charges = [tuple(a) for a, _ in bulk_insertions]
    bdry_charges = [int(k) for k, _ in bdry_insertions]
    zs = [complex(z) for _, z in bulk_insertions]
    xs = [complex(x) for _, x in bdry_insertions]
    validate_halfplane_point(zs + xs, len(zs), len(xs))
    if sum(bd.t_coeff(a) for a in bulk_charges) + sum(bdry_charges) != int(dual):
        return 0j
    product, plan = mixed_power_product(bd, bulk_charges, bdry_charges)
    point = phi_embedding(zs + xs, len(zs), len(xs))
    pref = ope_prefactor_exponent(
        bd, reference_tree(len(zs), len(xs)), bulk_charges, bdry_charges
    )
    return phase_pi(pref) * evaluate_closed(product, point, plan)


# ---------------------------------------------------------------------------
# Per-tree expansions


@dataclass
class TreeExpansion:
    """A per-tree OPE expansion: the raw series in the (doubled) tree's
    coordinates and the tree's OPE prefactor, kept separate so region
    phases can be measured against the raw expansion."""

    tree: Tree
    working_tree: Tree
    series: GenSeries
    prefactor_exponent: Fraction
    colored: bool

    @property
    def prefactor(self) -> complex:
        return phase_pi(self.prefactor_exponent)

    def coordinate_values(self, point) -> dict:
        """Series variable values; ``point`` uses doubled coordinates for a
        colored tree and plain bulk coordinates otherwise."""
        cs = a_coordinates(self.working_tree)  # memoized
        cv = psi(cs, point)
        vals = cv.as_dict(cs.var_names())
        if not self.colored:
            cvb = psi(cs, [complex(z).conjugate() for z in point])
            vals.update(cvb.as_dict(cs.var_names(conjugate=True)))
        return vals

    def evaluate_raw(self, point) -> complex:
        return evaluate_series(self.series, self.coordinate_values(point))

    def evaluate(self, point) -> complex:
        return self.prefactor * self.evaluate_raw(point)


def _ordered_pairs(tree: Tree):
    order = leaf_order(tree)
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            yield order[i], order[j]


def tree_expansion(
    model: NarainModel,
    e: Tree,
    charges,
    order: int,
    bd: BoundaryData | None = None,
    bdry_charges=(),
) -> TreeExpansion:
    """Expand the correlator's pair product in the tree's coordinates.

    Factors are oriented by the tree's left-to-right leaf order, so each
    leading sign is +1 and every monomial carries the principal branch
    of the tree coordinates (in particular the bulk-pair separations
    2i Im z evaluate with the branch exp(i pi/2)).  For a plain tree the
    left-mover part expands in the tree coordinates and the right-mover
    part in their conjugates; for an o-colored tree the doubled tree is
    used.  The tree's OPE structure constants form the prefactor.
    """
    if is_colored(e):
        if bd is None:
            raise LatticeError("colored expansion needs boundary data")
        r, s, color = validate_colored(e)
        if color != "o":
            raise LatticeError("expansion tree must be o-colored")
        if len(charges) != r or len(bdry_charges) != s:
            raise LatticeError("charge count mismatch")
        working = doubling(e)
        frames = _doubled_charge_frames(bd, [tuple(a) for a in charges], bdry_charges)
        diffs = []
        for k, l in _ordered_pairs(working):
            q = model.frame_product(frames[k], frames[l])
            if q != 0:
                diffs.append(((k, l), q))
        ex = expand(working, PowerProduct(diffs=tuple(diffs)), order)
        if ex.negative_pairs:
            raise LatticeError(
                f"leaf-ordered factor with negative leading sign: {ex.negative_pairs}"
            )
        pref = ope_prefactor_exponent(bd, e, charges, bdry_charges)
        return TreeExpansion(e, working, ex.series, pref, colored=True)

    r = validate_tree(e)
    if len(charges) != r:
        raise LatticeError("charge count mismatch")
    charges = [tuple(a) for a in charges]
    cs = a_coordinates(e)
    diffs_z, diffs_zb = [], []
    for i, j in _ordered_pairs(e):
        aa = model.aa(charges[i - 1], charges[j - 1])
        bb = model.abarbar(charges[i - 1], charges[j - 1])
        if aa:
            diffs_z.append(((i, j), aa))
        if bb:
            diffs_zb.append(((i, j), bb))
    ex_z = expand(cs, PowerProduct(diffs=tuple(diffs_z)), order)
    ex_zb = expand(cs, PowerProduct(diffs=tuple(diffs_zb)), order, conjugate=True)
    if ex_z.negative_pairs or ex_zb.negative_pairs:
        raise LatticeError("leaf-ordered factor with negative leading sign")
    seq = leaf_order(e)
    nu = sum(
        epsilon_exponent(charges[seq[i] - 1], charges[seq[j] - 1])
        for i in range(r)
        for j in range(i + 1, r)
    )
    return TreeExpansion(
        e, e, ex_z.series * ex_zb.series, Fraction(nu % 2), colored=False
    )


# ---------------------------------------------------------------------------
# Bootstrap verification


def bootstrap_check(
    model: NarainModel, bd: BoundaryData, box: int, tol: float = 1e-12
) -> VerifyReport:
    """Exhaustively check the cocycle identities on the charge box.

    (1) sigma(0) = 1;
    (2) eps(a,b) sigma(a+b) exp(i pi (phi pbar a, p b))
        = sigma(a) sigma(b) eta(ta,tb);
    (3) eta(ta,tb) eta(tb,ta)^{-1} = exp(-i pi ((a,b) + (a, phi b)));
    plus the kernel property c(a,b) = 1 for a in ker t.
    """
    t0 = time.perf_counter()
    worst = abs(bd.sigma((0, 0)) - 1)
    kernel_worst = 0.0
    rng_box = range(-box, box + 1)
    for n in rng_box:
        for m in rng_box:
            a = (n, m)
            ta = bd.t_coeff(a)
            in_kernel = ta == 0
            for n2 in rng_box:
                for m2 in rng_box:
                    b = (n2, m2)
                    tb = bd.t_coeff(b)
                    lhs2 = (
                        Fraction(epsilon_exponent(a, b))
                        + bd.sigma_exponent((n + n2, m + m2))
                        + model.frame_product(bd.phi_abar_vec(a), model.a_vec(b))
                    )
                    rhs2 = (
                        bd.sigma_exponent(a)
                        + bd.sigma_exponent(b)
                        + bd.eta_exponent(ta, tb)
                    )
                    worst = max(worst, abs(phase_pi(lhs2) - phase_pi(rhs2)))
                    lhs3 = bd.eta_exponent(ta, tb) - bd.eta_exponent(tb, ta)
                    rhs3 = bd.commutator_exponent(a, b)
                    worst = max(worst, abs(phase_pi(lhs3) - phase_pi(rhs3)))
                    if in_kernel:
                        kernel_worst = max(
                            kernel_worst,
                            abs(phase_pi(bd.commutator_exponent(a, b)) - 1),
                        )
    worst = max(worst, kernel_worst)
    return VerifyReport(
        name="bootstrap",
        params={"R^2": str(model.r_squared), "rho": bd.rho, "box": box},
        samples=[{"worst_identity_error": worst, "kernel_error": kernel_worst}],
        max_rel_err=worst,
        tolerance=tol,
        passed=worst <= tol,
        runtime=time.perf_counter() - t0,
        notes=[
            f"kernel generator {bd.kernel_generator}, "
            f"charge group generated by t{bd.m_generator}"
        ],
    )


# ---------------------------------------------------------------------------
# Region samplers


def _sample_bulk_points(tree, rng, count, margin_min=0.45, shrink_range=(0.12, 0.3)):
    """Scaled/rotated/jittered copies of the nested base configuration,
    inside the cut region with the requested certificate margin and with
    all tree coordinates (and conjugates) off the cut.  The nesting
    shrink factor is resampled per point so depths spread from near the
    margin up to very deep."""
    cs = a_coordinates(tree)
    out = []
    attempts = 0
    while len(out) < count and attempts < 500 * count:
        attempts += 1
        base = nested_configuration(tree, shrink=rng.uniform(*shrink_range))
        spread = {
            k: min(abs(base[k] - base[j]) for j in range(len(base)) if j != k)
            for k in range(len(base))
        }
        shift = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        rot = cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        mag = rng.uniform(0.5, 2.0)
        pt = tuple(
            mag
            * rot
            * (
                base[k]
                + complex(rng.gauss(0, 0.05), rng.gauss(0, 0.05)) * spread[k]
            )
            + shift
            for k in range(len(base))
        )
        memb = region_membership(cs, pt)
        if not memb.in_u or memb.margin < margin_min:
            continue
        cv = psi(cs, pt)
        cvb = psi(cs, [z.conjugate() for z in pt])
        if any(on_cut(v) for v in (cv.x, cvb.x) + cv.zeta + cvb.zeta):
            continue
        out.append(pt)
    if len(out) < count:
        raise LatticeError("bulk sampler failed to reach the requested margin")
    return out


def _sample_open_points(e, rng, count, margin_min=0.45, shrink_range=(0.12, 0.3)):
    """Jittered nested configurations in the leaf-order component of the
    open tree region, with per-point nesting depth."""
    r, s, _ = validate_colored(e)
    working = doubling(e)
    cs = a_coordinates(working)
    out = []
    attempts = 0
    while len(out) < count and attempts < 1000 * count:
        attempts += 1
        base = nested_configuration_open(e, shrink=rng.uniform(*shrink_range))
        heights = [complex(base[k]).imag for k in range(r)]
        gaps = []
        for k in range(r + s):
            others = [
                abs(complex(base[k]) - complex(base[j]))
                for j in range(r + s)
                if j != k
            ]
            gaps.append(min(others) if others else 1.0)
        shift = rng.uniform(-1.0, 1.0)
        mag = rng.uniform(0.6, 1.8)
        pt = []
        ok = True
        for k in range(r + s):
            b = complex(base[k])
            dre = rng.gauss(0, 0.08) * gaps[k]
            if k < r:
                dim = rng.gauss(0, 0.15) * heights[k]
                im = mag * (b.imag + dim)
                if im <= 0:
                    ok = False
                    break
                pt.append(complex(mag * (b.real + dre) + shift, im))
            else:
                pt.append(complex(mag * (b.real + dre) + shift, 0.0))
        if not ok:
            continue
        try:
            validate_halfplane_point(pt, r, s)
        except CoordError:
            continue
        doubled = phi_embedding(pt, r, s)
        memb = region_membership(cs, doubled)
        if not memb.in_ubar or memb.margin < margin_min:
            continue
        cv = psi(cs, doubled)
        if on_cut(cv.x) or any(on_cut(v) for v in cv.zeta):
            continue
        out.append(tuple(pt))
    if len(out) < count:
        raise LatticeError("open-region sampler failed; loosen the margin")
    return out


# ---------------------------------------------------------------------------
# Consistency of per-tree expansions with the closed forms


def expansion_consistency_check(
    model: NarainModel,
    trees,
    charges,
    order: int,
    tol: float,
    n_points: int,
    seed: int,
    bd: BoundaryData | None = None,
    bdry_charges=(),
    margin_min: float = 0.45,
    phase_tol: float = 1e-10,
) -> VerifyReport:
    """Per-tree expansions converge to the single correlator.

    For each tree, sampled region points compare the truncated expansion
    (with its OPE prefactor) against the closed form.  Base-point ratios
    between the raw expansions of consecutive trees measure the
    inter-region phases; they must equal the OPE prefactor ratios, which
    for the canonical (1,1) and (2,0) tree pairs are the boundary and
    bulk exchange phase factors.
    """
    t0 = time.perf_counter()
    rng = random.Random(seed)
    charges = [tuple(a) for a in charges]
    colored = is_colored(trees[0])
    samples = []
    texps = []
    base_ratios = []
    worst = 0.0
    for tree in trees:
        texp = tree_expansion(
            model, tree, charges, order, bd=bd, bdry_charges=bdry_charges
        )
        texps.append(texp)
        if colored:
            r, s, _ = validate_colored(tree)
            base_pt = nested_configuration_open(tree)
            pts = _sample_open_points(tree, rng, n_points, margin_min)
            dual = sum(bd.t_coeff(a) for a in charges) + sum(
                int(k) for k in bdry_charges
            )

            def closed(pt):
                return mixed_correlator(
                    model,
                    bd,
                    dual,
                    list(zip(charges, pt[:r])),
                    list(zip(bdry_charges, pt[r:])),
                )

            def raw_eval(pt, te=texp, r=r, s=s):
                return te.evaluate_raw(phi_embedding(pt, r, s))

        else:
            base_pt = nested_configuration(tree)
            pts = _sample_bulk_points(tree, rng, n_points, margin_min)
            dual = (sum(n for n, _ in charges), sum(m for _, m in charges))

            def closed(pt):
                return bulk_correlator(model, dual, list(zip(charges, pt)))

            def raw_eval(pt, te=texp):
                return te.evaluate_raw(pt)

        errs = []
        pre = texp.prefactor
        for pt in pts:
            want = closed(pt)
            got = pre * raw_eval(pt)
            errs.append(abs(got - want) / max(abs(want), 1e-300))
        worst = max(worst, max(errs))
        base_ratios.append(closed(base_pt) / raw_eval(base_pt))
        samples.append(
            {
                "tree": format_tree(tree),
                "n_points": len(pts),
                "max_rel_err": max(errs),
                "mean_rel_err": sum(errs) / len(errs),
            }
        )
    phase_worst = 0.0
    for idx in range(1, len(trees)):
        measured = base_ratios[idx] / base_ratios[0]
        predicted = phase_pi(
            texps[idx].prefactor_exponent - texps[0].prefactor_exponent
        )
        err = abs(measured - predicted)
        phase_worst = max(phase_worst, err)
        samples[idx]["phase_measured"] = [measured.real, measured.imag]
        samples[idx]["phase_predicted"] = [predicted.real, predicted.imag]
        samples[idx]["phase_error"] = err
    passed = worst <= tol and phase_worst <= phase_tol
    return VerifyReport(
        name="expansion-consistency",
        params={
            "R^2": str(model.r_squared),
            "rho": getattr(bd, "rho", None),
            "charges": [list(a) for a in charges],
            "boundary_charges": [int(k) for k in bdry_charges],
            "order": order,
            "n_points": n_points,
            "seed": seed,
        },
        samples=samples,
        max_rel_err=worst,
        tolerance=tol,
        passed=passed,
        runtime=time.perf_counter() - t0,
        notes=[f"worst inter-region phase error {phase_worst:.3e} (tol {phase_tol:.0e})"],
    )


# ---------------------------------------------------------------------------
# Numeric analytic continuation


def continue_bulk(model: NarainModel, dual, charges, path) -> complex:
    """Continue the bulk correlator along a discretized path of
    configurations, tracking each pair logarithm by principal-log
    increments (valid while single steps stay off the ratio cut)."""
    charges = [tuple(a) for a in charges]
    if (sum(n for n, _ in charges), sum(m for _, m in charges)) != tuple(dual):
        return 0j
    pts = [list(map(complex, p)) for p in path]
    npts = len(charges)
    logs = {}
    for i in range(npts):
        for j in range(i + 1, npts):
            logs[(i, j)] = cmath.log(pts[0][i] - pts[0][j])
    for step in range(1, len(pts)):
        for i in range(npts):
            for j in range(i + 1, npts):
                old = pts[step - 1][i] - pts[step - 1][j]
                new = pts[step][i] - pts[step][j]
                logs[(i, j)] += cmath.log(new / old)
    nu = 0
    total = 0j
    for i in range(npts):
        for j in range(i + 1, npts):
            nu += epsilon_exponent(charges[i], charges[j])
            aa = model.aa(charges[i], charges[j])
            bb = model.abarbar(charges[i], charges[j])
            total += float(aa) * logs[(i, j)] + float(bb) * logs[(i, j)].conjugate()
    return phase_pi(nu) * cmath.exp(total)


def _loop_path(points, mover: int, around: int, turns: float, segments: int = 64):
    pts = [complex(z) for z in points]
    center = pts[around]
    offset = pts[mover] - center
    out = []
    for k in range(segments + 1):
        ang = 2 * math.pi * turns * k / segments
        cur = list(pts)
        cur[mover] = center + offset * cmath.exp(1j * ang)
        out.append(tuple(cur))
    return out


def _random_loop_sample(rng, count):
    """Distinct points where a full loop of one around another stays clear
    of the remaining points."""
    while True:
        pts = [complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(count)]
        mover, around = rng.sample(range(count), 2)
        radius = abs(pts[mover] - pts[around])
        ok = radius > 0.1
        for k in range(count):
            if k in (mover, around):
                continue
            if abs(abs(pts[k] - pts[around]) - radius) < 0.15 or abs(
                pts[k] - pts[around]
            ) < 0.1:
                ok = False
        if ok:
            return tuple(pts), mover, around


def single_valuedness_check(
    model: NarainModel, charges, n_samples: int, seed: int, tol: float = 1e-12
) -> VerifyReport:
    """A full numeric loop returns the bulk correlator to its value."""
    t0 = time.perf_counter()
    rng = random.Random(seed)
    charges = [tuple(a) for a in charges]
    dual = (sum(n for n, _ in charges), sum(m for _, m in charges))
    worst = 0.0
    samples = []
    for _ in range(n_samples):
        pts, mover, around = _random_loop_sample(rng, len(charges))
        path = _loop_path(pts, mover, around, turns=1.0)
        start = bulk_correlator(model, dual, list(zip(charges, pts)))
        end = continue_bulk(model, dual, charges, path)
        rel = abs(end - start) / max(abs(start), 1e-300)
        worst = max(worst, rel)
        samples.append({"mover": mover + 1, "around": around + 1, "rel_err": rel})
    return VerifyReport(
        name="single-valuedness",
        params={
            "R^2": str(model.r_squared),
            "charges": [list(a) for a in charges],
            "n_samples": n_samples,
            "seed": seed,
        },
        samples=samples,
        max_rel_err=worst,
        tolerance=tol,
        passed=worst <= tol,
        runtime=time.perf_counter() - t0,
    )


def skew_symmetry_check(
    model: NarainModel,
    charge_pairs,
    n_samples: int,
    seed: int,
    tol: float = 1e-10,
) -> VerifyReport:
    """Half-loop continuation reproduces the swapped two-point correlator.

    Rotating z_1 counterclockwise by pi around z_2 continues the
    correlator into the one with swapped insertions; the measured phase
    of the power part is (-1)^{(alpha,beta)}, the epsilon ratio.
    """
    t0 = time.perf_counter()
    rng = random.Random(seed)
    worst = 0.0
    samples = []
    for alpha, beta in charge_pairs:
        alpha, beta = tuple(alpha), tuple(beta)
        dual = (alpha[0] + beta[0], alpha[1] + beta[1])
        pair_worst = 0.0
        measured = None
        for _ in range(n_samples):
            pts = [
                complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(2)
            ]
            if abs(pts[0] - pts[1]) < 0.2:
                continue
            path = _loop_path(pts, 0, 1, turns=0.5)
            end = continue_bulk(model, dual, [alpha, beta], path)
            swapped = path[-1]
            want = bulk_correlator(
                model, dual, [(beta, swapped[1]), (alpha, swapped[0])]
            )
            rel = abs(end - want) / max(abs(want), 1e-300)
            pair_worst = max(pair_worst, rel)
            # power-part continuation phase, epsilon prefactors divided out
            measured = (end / phase_pi(epsilon_exponent(alpha, beta))) / (
                want / phase_pi(epsilon_exponent(beta, alpha))
            )
            pair_worst = max(
                pair_worst,
                abs(measured - (-1) ** (lattice_pairing(alpha, beta) % 2)),
            )
        worst = max(worst, pair_worst)
        samples.append(
            {
                "alpha": list(alpha),
                "beta": list(beta),
                "epsilon_ratio": epsilon_cocycle(alpha, beta) * epsilon_cocycle(beta, alpha),
                "pairing_parity": lattice_pairing(alpha, beta) % 2,
                "phase_measured": [measured.real, measured.imag]
                if measured is not None
                else None,
                "max_rel_err": pair_worst,
            }
        )
    return VerifyReport(
        name="skew-symmetry",
        params={
            "R^2": str(model.r_squared),
            "n_pairs": len(samples),
            "n_samples": n_samples,
            "seed": seed,
        },
        samples=samples,
        max_rel_err=worst,
        tolerance=tol,
        passed=worst <= tol,
        runtime=time.perf_counter() - t0,
    )
