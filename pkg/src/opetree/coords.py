"""Tree-adapted coordinates on configuration space.

For a tree A with r leaves the coordinate system consists of the
translation z_A (the rightmost leaf coordinate), the root difference
x_A = z_{L(t_A)} - z_{R(t_A)}, and one ratio zeta_e per internal edge.
The inverse map is polynomial: z_i = z_A + x_A * Q_i(zeta) with Q_i a
sparse 0/1 polynomial.  Convergence regions are certified by the
sum-of-moduli bound on the factored pair differences
z_i - z_j = x_A * c * zeta^m * (1 + P(zeta)); the certificate is a
sufficient condition (an under-approximation of the true region).

Branch convention everywhere: principal logarithm, Arg in (-pi, pi),
cut along the closed negative real axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

from opetree.trees import Tree, doubling, tree_meta, validate_colored

CUT_TOL = 1e-14

# Sparse integer polynomials in the edge ratios: {exponent tuple: coeff}.
Poly = dict


class CoordError(ValueError):
    """Degenerate configuration or invalid coordinate request."""


class CertificateError(ValueError):
    """No sum-of-moduli certificate exists for a pair difference."""


def on_cut(z: complex) -> bool:
    """True if z lies on the closed negative real axis (numerically)."""
    return z.real <= 0 and abs(z.imag) <= CUT_TOL * (1 + abs(z.real))


@dataclass(frozen=True)
class FactoredDifference:
    """z_i - z_j = x_A * sign * zeta^monomial * (1 + tail)."""

    i: int
    j: int
    monomial: tuple
    sign: int
    tail: Poly


@dataclass(frozen=True)
class CoordSystem:
    """Symbolic A-coordinates plus the polynomial inverse."""

    tree: Tree
    meta: object
    q_polys: dict  # leaf label -> Poly in the edge variables

    @property
    def r(self) -> int:
        return self.meta.r

    @property
    def n_edges(self) -> int:
        return len(self.meta.edges)

    def var_names(self, conjugate: bool = False) -> dict:
        """Series variable names: x_A, z_A and one name per edge ratio."""
        suf = "c" if conjugate else ""
        names = {"x": "xA" + suf, "z": "zA" + suf}
        names["zeta"] = tuple(f"ze{k}{suf}" for k in range(self.n_edges))
        return names

    def describe(self) -> dict:
        """Human-readable coordinate functions, for reports and the CLI."""
        m = self.meta
        root = m.root_vertex
        out = {
            "zA": f"z{m.rightmost_leaf}",
            "xA": f"z{m.left_leaf[root]} - z{m.right_leaf[root]}",
        }
        for k, e in enumerate(m.edges):
            d_num = f"z{m.left_leaf[e]} - z{m.right_leaf[e]}"
            u = m.upper(e)
            u_num = f"z{m.left_leaf[u]} - z{m.right_leaf[u]}"
            out[f"ze{k}"] = f"({d_num}) / ({u_num})"
        return out


@dataclass(frozen=True)
class CoordValues:
    """Numeric A-coordinate values at a configuration point."""

    x: complex
    z: complex
    zeta: tuple

    def as_dict(self, names: Mapping) -> dict:
        vals = {names["x"]: self.x, names["z"]: self.z}
        for name, value in zip(names["zeta"], self.zeta):
            vals[name] = value
        return vals


def a_coordinates(a: Tree) -> CoordSystem:
    """Build the A-coordinate system; requires r >= 2 leaves.

    Results are memoized; trees are immutable.
    """
    return _a_coordinates_cached(a)


@lru_cache(maxsize=4096)
def _a_coordinates_cached(a: Tree) -> CoordSystem:
    meta = tree_meta(a)
    nedges = len(meta.edges)
    zero = tuple([0] * nedges)

    def path_monomial(v):
        # product of zeta_e over the edges on the root path of v
        exps = list(zero)
        for k in range(1, len(v) + 1):
            exps[meta.edges.index(v[:k])] += 1
        return tuple(exps)

    q_polys = {}
    for label, path in meta.leaf_path.items():
        poly: Poly = {}
        for cut in range(len(path)):
            if path[cut] == "l":
                mono = path_monomial(path[:cut])
                poly[mono] = poly.get(mono, 0) + 1
        q_polys[label] = poly
    return CoordSystem(tree=a, meta=meta, q_polys=q_polys)


def psi(a: Tree | CoordSystem, point: Sequence[complex]) -> CoordValues:
    """Evaluate the A-coordinates at a configuration point."""
    cs = a if isinstance(a, CoordSystem) else a_coordinates(a)
    m = cs.meta
    z = [complex(w) for w in point]
    if len(z) != m.r:
        raise CoordError(f"expected {m.r} coordinates, got {len(z)}")
    for i in range(len(z)):
        for j in range(i + 1, len(z)):
            if z[i] == z[j]:
                raise CoordError(f"coincident points z{i+1} = z{j+1}")

    def vertex_value(v):
        return z[m.left_leaf[v] - 1] - z[m.right_leaf[v] - 1]

    x = vertex_value(m.root_vertex)
    zetas = tuple(vertex_value(e) / vertex_value(m.upper(e)) for e in m.edges)
    return CoordValues(x=x, z=z[m.rightmost_leaf - 1], zeta=zetas)


def eval_poly(poly: Poly, zeta: Sequence[complex]) -> complex:
    total = 0j
    for exps, coeff in poly.items():
        term = complex(coeff)
        for e, k in zip(zeta, exps):
            if k:
                term *= e**k
        total += term
    return total


def psi_inverse(cs: CoordSystem, cv: CoordValues) -> tuple:
    """Polynomial inverse: z_i = z_A + x_A * Q_i(zeta)."""
    return tuple(
        cv.z + cv.x * eval_poly(cs.q_polys[label], cv.zeta)
        for label in range(1, cs.r + 1)
    )


def pair_difference(a: Tree | CoordSystem, i: int, j: int) -> FactoredDifference:
    """Factor z_i - z_j as x_A * c * zeta^m * (1 + P) with c = +-1.

    ``m`` is the unique divisibility-minimal monomial of Q_i - Q_j; if it
    is not unique (or its coefficient is not a unit) no certificate
    exists and :class:`CertificateError` is raised.
    """
    cs = a if isinstance(a, CoordSystem) else a_coordinates(a)
    if i == j:
        raise CoordError("pair difference needs distinct leaves")
    for lbl in (i, j):
        if lbl not in cs.q_polys:
            raise CoordError(f"no leaf labeled {lbl}")
    diff: Poly = dict(cs.q_polys[i])
    for exps, coeff in cs.q_polys[j].items():
        diff[exps] = diff.get(exps, 0) - coeff
        if diff[exps] == 0:
            del diff[exps]
    monos = list(diff)
    minimal = [
        m
        for m in monos
        if not any(
            other != m and all(o <= mm for o, mm in zip(other, m)) for other in monos
        )
    ]
    if len(minimal) != 1:
        raise CertificateError(
            f"pair ({i},{j}): no unique minimal monomial among {sorted(minimal)}"
        )
    m0 = minimal[0]
    c = diff[m0]
    if abs(c) != 1:
        raise CertificateError(f"pair ({i},{j}): minimal coefficient {c} is not a unit")
    tail: Poly = {}
    for exps, coeff in diff.items():
        if exps == m0:
            continue
        shifted = tuple(e - f for e, f in zip(exps, m0))
        tail[shifted] = coeff * c  # divide by c = +-1
    return FactoredDifference(i=i, j=j, monomial=m0, sign=c, tail=tail)


@dataclass(frozen=True)
class Certificate:
    admissible: bool
    margin: float
    worst_pair: tuple | None
    failures: tuple = ()


def _tail_bound(tail: Poly, radii: Sequence[float]) -> float:
    total = 0.0
    for exps, coeff in tail.items():
        term = float(abs(coeff))
        for p, k in zip(radii, exps):
            if k:
                term *= p**k
        total += term
    return total


def admissibility_certificate(a: Tree | CoordSystem, radii: Sequence[float]) -> Certificate:
    """Sufficient admissibility test for the edge radii.

    Admissible when every pair difference factors and its tail satisfies
    sum |coeff| * prod p_e^deg < 1; the margin is 1 minus the worst sum.
    Shrinking any radius preserves admissibility.
    """
    cs = a if isinstance(a, CoordSystem) else a_coordinates(a)
    radii = [float(p) for p in radii]
    if len(radii) != cs.n_edges:
        raise CoordError(f"expected {cs.n_edges} radii, got {len(radii)}")
    if any(p <= 0 for p in radii):
        raise CoordError("radii must be positive")
    worst, worst_pair, failures = 0.0, None, []
    for i in range(1, cs.r + 1):
        for j in range(i + 1, cs.r + 1):
            try:
                fac = pair_difference(cs, i, j)
            except CertificateError as err:
                failures.append((i, j, str(err)))
                continue
            bound = _tail_bound(fac.tail, radii)
            if bound > worst:
                worst, worst_pair = bound, (i, j)
    if failures:
        return Certificate(False, float("-inf"), worst_pair, tuple(failures))
    return Certificate(worst < 1.0, 1.0 - worst, worst_pair)


@dataclass(frozen=True)
class RegionMembership:
    in_ubar: bool
    in_u: bool
    margin: float


def region_membership(a: Tree | CoordSystem, point: Sequence[complex]) -> RegionMembership:
    """Membership in the no-cut region and in the cut region.

    in_ubar: the certificate holds strictly at p_e = |zeta_e| with
    x_A != 0 and all zeta_e != 0.  in_u additionally needs x_A and every
    zeta_e off the cut R_{<=0}.
    """
    cs = a if isinstance(a, CoordSystem) else a_coordinates(a)
    try:
        cv = psi(cs, point)
    except CoordError:
        return RegionMembership(False, False, float("-inf"))
    if cv.x == 0 or any(z == 0 for z in cv.zeta):
        return RegionMembership(False, False, float("-inf"))
    if cs.n_edges == 0:
        return RegionMembership(True, not on_cut(cv.x), 1.0)
    cert = admissibility_certificate(cs, [abs(z) for z in cv.zeta])
    in_ubar = cert.admissible
    in_u = in_ubar and not on_cut(cv.x) and not any(on_cut(z) for z in cv.zeta)
    return RegionMembership(in_ubar, in_u, cert.margin)


# ---------------------------------------------------------------------------
# Upper half-plane points and the doubling embedding


def phi_embedding(point, r: int, s: int) -> tuple:
    """(z_1..z_r, x_1..x_s) -> (z_1, conj z_1, ..., z_r, conj z_r, x_1..x_s)."""
    if len(point) != r + s:
        raise CoordError(f"expected {r + s} coordinates, got {len(point)}")
    out = []
    for k in range(r):
        z = complex(point[k])
        out.extend([z, z.conjugate()])
    for j in range(s):
        out.append(complex(point[r + j]))
    return tuple(out)


def validate_halfplane_point(point, r: int, s: int) -> None:
    """Check bulk points in the open upper half-plane and boundary points
    real, strictly decreasing in label."""
    if len(point) != r + s:
        raise CoordError(f"expected {r + s} coordinates, got {len(point)}")
    for k in range(r):
        if complex(point[k]).imag <= 0:
            raise CoordError(f"bulk point z{k+1} not in the open upper half-plane")
    xs = []
    for j in range(s):
        x = complex(point[r + j])
        if x.imag != 0:
            raise CoordError(f"boundary point x{j+1} is not real")
        xs.append(x.real)
    for j in range(len(xs) - 1):
        if not xs[j] > xs[j + 1]:
            raise CoordError("boundary points must strictly decrease in label")


def region_membership_open(e: Tree, point) -> bool:
    """Membership of an upper half-plane configuration in the tree region.

    Applies the doubling embedding and tests the no-cut criterion on the
    doubled tree.
    """
    r, s, color = validate_colored(e)
    if color != "o":
        raise CoordError("open regions are defined for o-colored trees")
    validate_halfplane_point(point, r, s)
    if 2 * r + s < 2:
        return True
    doubled_point = phi_embedding(point, r, s)
    return region_membership(doubling(e), doubled_point).in_ubar


# ---------------------------------------------------------------------------
# Canonical nested base configurations, deep inside the regions


def nested_configuration(a: Tree, scale: float = 1.0, shrink: float = 0.125) -> tuple:
    """A point deep in the no-cut region: nested real positions, leaf order
    mapped to decreasing real part, block diameters shrinking by ``shrink``
    per level."""
    meta = tree_meta(a)
    pos = {}

    def place(t, center, radius):
        if hasattr(t, "label"):
            pos[t.label] = center
            return
        place(t.left, center + radius / 2, radius * shrink)
        place(t.right, center - radius / 2, radius * shrink)

    place(a, 0.0, float(scale))
    return tuple(complex(pos[i]) for i in range(1, meta.r + 1))


def nested_configuration_open(e: Tree, scale: float = 1.0, shrink: float = 0.125) -> tuple:
    """A point in the leaf-order component of the open tree region.

    Boundary leaves and Tau blocks follow the same nested layout; a Tau
    block places its bulk points at a common height small against the
    block separation, with the closed tree nested in real offsets small
    against the height.
    """
    r, s, color = validate_colored(e)
    if color != "o":
        raise CoordError("open configurations need an o-colored tree")
    bulk, bdry = {}, {}

    def place_closed(t, center, radius, height):
        if hasattr(t, "label") and not hasattr(t, "child"):
            bulk[t.label] = complex(center, height)
            return
        place_closed(t.left, center + radius / 2, radius * shrink, height)
        place_closed(t.right, center - radius / 2, radius * shrink, height)

    def place(t, center, radius):
        if hasattr(t, "child"):  # Tau block
            height = radius * shrink / 2
            place_closed(t.child, center, height * shrink, height)
            return
        if hasattr(t, "label"):
            bdry[t.label] = center
            return
        place(t.left, center + radius / 2, radius * shrink)
        place(t.right, center - radius / 2, radius * shrink)

    place(e, 0.0, float(scale))
    point = [bulk[k] for k in range(1, r + 1)]
    point += [bdry[r + j] for j in range(1, s + 1)]
    return tuple(point)
