import cmath
import math
import random
from fractions import Fraction

import pytest

from opetree.latticecft import (
    BoundaryData,
    LatticeError,
    NarainModel,
    bootstrap_check,
    build_boundary,
    bulk_correlator,
    continue_bulk,
    epsilon_cocycle,
    expansion_consistency_check,
    lattice_pairing,
    mixed_correlator,
    mixed_power_product,
    ope_prefactor_exponent,
    reference_tree,
    single_valuedness_check,
    skew_symmetry_check,
    tree_expansion,
    _loop_path,
)
from opetree.series import phase_pi
from opetree.trees import format_tree, parse_tree


@pytest.fixture(scope="module")
def model():
    return NarainModel(Fraction(2))


@pytest.fixture(scope="module")
def boundaries(model):
    return {rho: build_boundary(model, rho) for rho in (1, -1)}


class TestLattice:
    def test_gram_even_unimodular(self):
        for a in [(1, 0), (0, 1), (2, -3)]:
            assert lattice_pairing(a, a) % 2 == 0

    def test_epsilon_basis_table(self):
        assert epsilon_cocycle((1, 0), (0, 1)) == 1
        assert epsilon_cocycle((0, 1), (1, 0)) == -1
        assert epsilon_cocycle((3, -2), (0, 0)) == 1
        assert epsilon_cocycle((0, 0), (3, -2)) == 1

    def test_epsilon_commutator_and_diagonal(self, model):
        for n in range(-3, 4):
            for m in range(-3, 4):
                a = (n, m)
                for n2 in range(-3, 4):
                    for m2 in range(-3, 4):
                        b = (n2, m2)
                        lhs = epsilon_cocycle(a, b) * epsilon_cocycle(b, a)
                        assert lhs == (-1) ** lattice_pairing(a, b)
                assert epsilon_cocycle(a, a) == (-1) ** (lattice_pairing(a, a) // 2)

    def test_charge_identity_exact(self):
        for rsq in (Fraction(2), Fraction(1, 2), Fraction(7, 3)):
            model = NarainModel(rsq)
            for n in range(-4, 5):
                for m in range(-4, 5):
                    for n2 in range(-4, 5):
                        for m2 in range(-4, 5):
                            a, b = (n, m), (n2, m2)
                            assert model.aa(a, b) - model.abarbar(a, b) == lattice_pairing(a, b)

    def test_spin_integrality(self, model):
        for n in range(-5, 6):
            for m in range(-5, 6):
                h, hbar = model.weight((n, m))
                assert (h - hbar).denominator == 1
                assert int(h - hbar) == n * m

    def test_bad_radius(self):
        with pytest.raises(LatticeError):
            NarainModel(Fraction(-1))


class TestBulkCorrelator:
    def test_vacuum_one_point(self, model):
        assert bulk_correlator(model, (0, 0), [((0, 0), 0.3 + 1j)]) == 1

    def test_charge_conservation(self, model):
        assert bulk_correlator(model, (0, 0), [((1, 0), 0j), ((0, 1), 1j)]) == 0

    def test_two_point_half_charges(self, model):
        # R^2 = 2, alpha1 = (1,0), alpha2 = (0,1): eps z^{1/2} zbar^{-1/2}
        assert model.aa((1, 0), (0, 1)) == Fraction(1, 2)
        assert model.abarbar((1, 0), (0, 1)) == Fraction(-1, 2)
        z1, z2 = 0.7 + 0.2j, -0.1 + 0.9j
        got = bulk_correlator(model, (1, 1), [((1, 0), z1), ((0, 1), z2)])
        v = z1 - z2
        assert abs(got - v / abs(v)) < 1e-14

    def test_coincident_points(self, model):
        with pytest.raises(LatticeError):
            bulk_correlator(model, (1, 1), [((1, 0), 1j), ((0, 1), 1j)])

    def test_single_valued_under_loop(self, model):
        pts = (1.2 + 0.1j, -0.3 - 0.4j)
        charges = [(2, -1), (-1, 1)]
        dual = (1, 0)
        start = bulk_correlator(model, dual, list(zip(charges, pts)))
        path = _loop_path(pts, 0, 1, turns=1.0)
        end = continue_bulk(model, dual, charges, path)
        assert abs(end - start) <= 1e-12 * abs(start)

    def test_insertion_order_symmetry(self, model):
        # the epsilon prefactor change under reordering cancels against the
        # sign of the paired power, so the correlator is symmetric
        rng = random.Random(71)
        for _ in range(20):
            charges = [
                (rng.randint(-2, 2), rng.randint(-2, 2)) for _ in range(3)
            ]
            pts = [
                complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(3)
            ]
            if any(
                abs(pts[i] - pts[j]) < 0.1 for i in range(3) for j in range(i + 1, 3)
            ):
                continue
            dual = tuple(sum(c) for c in zip(*charges))
            ins = list(zip(charges, pts))
            base = bulk_correlator(model, dual, ins)
            perm = ins[:]
            rng.shuffle(perm)
            got = bulk_correlator(model, dual, perm)
            assert abs(got - base) <= 1e-12 * max(abs(base), 1e-300)


class TestBoundaryData:
    def test_kernel_and_group(self, boundaries):
        assert boundaries[1].kernel_generator == (0, 1)
        assert boundaries[1].m_generator == (1, 0)
        assert boundaries[-1].kernel_generator == (1, 0)
        assert boundaries[1].t_coeff((3, 5)) == 3
        assert boundaries[-1].t_coeff((3, 5)) == 5

    def test_sigma_normalized(self, boundaries):
        for bd in boundaries.values():
            assert bd.sigma((0, 0)) == 1

    def test_eta_trivial_rank_one(self, boundaries):
        for bd in boundaries.values():
            for k1 in range(-4, 5):
                for k2 in range(-4, 5):
                    assert bd.eta(k1, k2) == 1

    def test_commutator_trivial_on_box(self, boundaries):
        # (alpha,beta) + (alpha,phi beta) is even for the rank-one model
        for bd in boundaries.values():
            for n in range(-3, 4):
                for m in range(-3, 4):
                    for n2 in range(-3, 4):
                        for m2 in range(-3, 4):
                            assert bd.commutator_exponent((n, m), (n2, m2)) % 2 == 0

    def test_bootstrap_passes(self, model, boundaries):
        for rho, bd in boundaries.items():
            rep = bootstrap_check(model, bd, box=3)
            assert rep.passed, rep.text()

    def test_bootstrap_other_radii(self):
        for rsq in (Fraction(1, 2), Fraction(3)):
            model = NarainModel(rsq)
            for rho in (1, -1):
                bd = build_boundary(model, rho)
                assert bootstrap_check(model, bd, box=3).passed

    def test_perturbed_sigma_fails(self, model, boundaries):
        for rho, bd in boundaries.items():
            bad = bd.perturbed((1, 0), box=3)
            rep = bootstrap_check(model, bad, box=3)
            assert not rep.passed

    def test_kernel_property(self, boundaries):
        for bd in boundaries.values():
            gen = bd.kernel_generator
            for k in range(-5, 6):
                a = (gen[0] * k, gen[1] * k)
                for n2 in range(-5, 6):
                    for m2 in range(-5, 6):
                        assert phase_pi(bd.commutator_exponent(a, (n2, m2))) == 1


class TestMixedCorrelator:
    def test_reproduces_G(self, model, boundaries):
        # (r,s) = (1,1): sigma eta (z1-zb1)^{(pa,phi pba)} (z1-x2)^{(pa,tb)}
        # (zb1-x2)^{(phi pba, tb)}
        for rho, bd in boundaries.items():
            alpha, beta = (1, 2), (1, 1)
            k = bd.t_coeff(beta)
            z1, x2 = 0.4 + 0.6j, -0.8
            dual = bd.t_coeff(alpha) + k
            got = mixed_correlator(model, bd, dual, [(alpha, z1)], [(k, x2)])
            s1 = model.frame_product(model.a_vec(alpha), bd.phi_abar_vec(alpha))
            s2 = model.frame_product(model.a_vec(alpha), bd.t_vec(k))
            s3 = model.frame_product(bd.phi_abar_vec(alpha), bd.t_vec(k))
            g = cmath.exp(
                float(s1) * cmath.log(z1 - z1.conjugate())
                + float(s2) * cmath.log(z1 - x2)
                + float(s3) * cmath.log(z1.conjugate() - x2)
            )
            want = bd.sigma(alpha) * bd.eta(bd.t_coeff(alpha), k) * g
            assert abs(got - want) <= 1e-13 * abs(want)

    def test_reproduces_F_exponents(self, model, boundaries):
        # symbolic factor-by-factor comparison of the (2,0) closed form
        for rho, bd in boundaries.items():
            alpha, beta = (1, -1), (2, 1)
            product, plan = mixed_power_product(bd, [alpha, beta], [])
            exps = dict(product.diffs)
            assert exps.get((1, 3), 0) == model.aa(alpha, beta)
            assert exps.get((2, 4), 0) == model.abarbar(alpha, beta)
            assert exps.get((1, 4), 0) == model.frame_product(
                model.a_vec(alpha), bd.phi_abar_vec(beta)
            )
            assert exps.get((2, 3), 0) == model.frame_product(
                bd.phi_abar_vec(alpha), model.a_vec(beta)
            )
            assert exps.get((1, 2), 0) == model.frame_product(
                model.a_vec(alpha), bd.phi_abar_vec(alpha)
            )
            assert exps.get((3, 4), 0) == model.frame_product(
                model.a_vec(beta), bd.phi_abar_vec(beta)
            )
            # a bulk pair present on both sides is branch-paired
            pairs = [(product.diffs[a][0], product.diffs[b][0]) for a, b in plan.paired]
            if (1, 3) in exps and (2, 4) in exps:
                assert ((1, 3), (2, 4)) in pairs

    def test_all_zero_charges(self, model, boundaries):
        bd = boundaries[1]
        got = mixed_correlator(
            model, bd, 0, [((0, 0), 0.5 + 0.5j)], [(0, -0.5)]
        )
        assert got == 1

    def test_charge_conservation(self, model, boundaries):
        bd = boundaries[1]
        assert mixed_correlator(model, bd, 5, [((1, 0), 1j)], [(0, 0.0)]) == 0

    def test_F_single_valued_in_bulk_pair(self, model, boundaries):
        # continuing z1 around z2 inside H returns the same value
        bd = boundaries[-1]
        alpha, beta = (1, 0), (0, 1)
        dual = bd.t_coeff(alpha) + bd.t_coeff(beta)
        z2 = 0.0 + 1.0j
        vals = []
        for ang in (0.0, 2 * math.pi):
            z1 = z2 + 0.1 * cmath.exp(1j * (0.3 + ang))
            vals.append(
                mixed_correlator(model, bd, dual, [(alpha, z1), (beta, z2)], [])
            )
        assert abs(vals[0] - vals[1]) <= 1e-12 * abs(vals[0])


class TestRegionExpansionOracles:
    """Independent scalar binomial-series oracles for the two region
    expansions of the one-bulk-one-boundary correlator, including the
    explicit inter-region phase factor."""

    def test_right_region_series(self, model, boundaries):
        from opetree.series import binomial

        for rho, bd in boundaries.items():
            alpha, k = (1, 1), 2
            s1 = model.frame_product(model.a_vec(alpha), bd.phi_abar_vec(alpha))
            s2 = model.frame_product(model.a_vec(alpha), bd.t_vec(k))
            s3 = model.frame_product(bd.phi_abar_vec(alpha), bd.t_vec(k))
            z1, x2 = 0.8 + 0.04j, -0.5  # Re z1 > x2, 2y << |zbar - x|
            w = z1.conjugate() - x2
            two_iy = z1 - z1.conjugate()
            series = sum(
                complex(binomial(s2, j)) * (two_iy / w) ** j for j in range(80)
            )
            want = (
                bd.sigma(alpha)
                * bd.eta(bd.t_coeff(alpha), k)
                * cmath.exp(float(s1) * cmath.log(two_iy))
                * cmath.exp(float(s2 + s3) * cmath.log(w))
                * series
            )
            dual = bd.t_coeff(alpha) + k
            got = mixed_correlator(model, bd, dual, [(alpha, z1)], [(k, x2)])
            assert abs(got - want) <= 1e-12 * abs(want)

    def test_left_region_series_and_phase(self, model, boundaries):
        from opetree.series import binomial

        for rho, bd in boundaries.items():
            alpha, k = (1, 1), 2
            beta = (k * bd.m_generator[0], k * bd.m_generator[1])
            s1 = model.frame_product(model.a_vec(alpha), bd.phi_abar_vec(alpha))
            s2 = model.frame_product(model.a_vec(alpha), bd.t_vec(k))
            s3 = model.frame_product(bd.phi_abar_vec(alpha), bd.t_vec(k))
            z1, x2 = -0.8 + 0.04j, 0.5  # x2 > Re z1
            w = x2 - z1.conjugate()
            two_iy = z1 - z1.conjugate()
            series = sum(
                complex(binomial(s2, j)) * (-two_iy / w) ** j for j in range(80)
            )
            exchange = phase_pi(
                lattice_pairing(alpha, beta) + bd.alpha_phi_beta(alpha, beta)
            )
            want = (
                bd.sigma(alpha)
                * bd.eta(bd.t_coeff(alpha), k)
                * exchange
                * cmath.exp(float(s1) * cmath.log(two_iy))
                * cmath.exp(float(s2 + s3) * cmath.log(w))
                * series
            )
            dual = bd.t_coeff(alpha) + k
            got = mixed_correlator(model, bd, dual, [(alpha, z1)], [(k, x2)])
            assert abs(got - want) <= 1e-12 * abs(want)

    def test_two_bulk_leading_terms_and_phase(self, model, boundaries):
        # deep-point leading-order checks of the two expansions of the
        # two-bulk correlator, with the bulk exchange phase
        for rho, bd in boundaries.items():
            alpha, beta = (1, 1), (2, -1)
            pref = bd.sigma(alpha) * bd.sigma(beta) * bd.eta(
                bd.t_coeff(alpha), bd.t_coeff(beta)
            )
            dual = bd.t_coeff(alpha) + bd.t_coeff(beta)
            # boundary channel: y1, y2 << |zbar12|; the y1 exponent is
            # (p alpha, phi pbar alpha): the separation factors keep their
            # exponents in the limit
            eps = 1e-4
            z1, z2 = 0.5 + eps * 1j, -0.5 + eps * 1j
            got = mixed_correlator(model, bd, dual, [(alpha, z1), (beta, z2)], [])
            zb12 = z1.conjugate() - z2.conjugate()
            lead = (
                pref
                * cmath.exp(
                    float(
                        model.frame_product(
                            model.a_vec(alpha), bd.phi_abar_vec(alpha)
                        )
                    )
                    * cmath.log(z1 - z1.conjugate())
                )
                * cmath.exp(
                    float(
                        model.frame_product(
                            model.a_vec(beta), bd.phi_abar_vec(beta)
                        )
                    )
                    * cmath.log(z2 - z2.conjugate())
                )
                * cmath.exp(
                    float(
                        model.frame_product(
                            tuple(
                                a + b
                                for a, b in zip(
                                    model.a_vec(alpha), bd.phi_abar_vec(alpha)
                                )
                            ),
                            tuple(
                                a + b
                                for a, b in zip(
                                    model.a_vec(beta), bd.phi_abar_vec(beta)
                                )
                            ),
                        )
                    )
                    * cmath.log(zb12)
                )
            )
            assert abs(got / lead - 1) < 50 * eps
            # bulk channel: |z12| << y2, with the exchange phase
            z2 = 1j
            z1 = z2 + eps * cmath.exp(0.4j)
            got2 = mixed_correlator(model, bd, dual, [(alpha, z1), (beta, z2)], [])
            phase = phase_pi(
                -model.frame_product(bd.phi_abar_vec(alpha), model.a_vec(beta))
            )
            total = tuple(a + b for a, b in zip(alpha, beta))
            z12 = z1 - z2
            zb12 = z1.conjugate() - z2.conjugate()
            aa = model.aa(alpha, beta)
            bb = model.abarbar(alpha, beta)
            lead2 = (
                bd.sigma(alpha)
                * bd.sigma(beta)
                * bd.eta(bd.t_coeff(alpha), bd.t_coeff(beta))
                * phase
                * abs(z12) ** float(2 * bb)
                * z12 ** int(aa - bb)
                * cmath.exp(
                    float(
                        model.frame_product(
                            model.a_vec(total), bd.phi_abar_vec(total)
                        )
                    )
                    * cmath.log(z2 - z2.conjugate())
                )
            )
            assert abs(got2 / lead2 - 1) < 50 * eps


class TestOpePrefactor:
    def test_reference_tree_shapes(self):
        assert format_tree(reference_tree(1, 1)) == "t(c1)o2"
        assert format_tree(reference_tree(2, 0)) == "t(c1)t(c2)"
        assert format_tree(reference_tree(0, 2)) == "o1o2"

    def test_bb_channel_constants(self, model, boundaries):
        # tau(c1 c2): eps(a,b) sigma(a+b); tau(c1) o tau(c2):
        # sigma(a) sigma(b) eta(ta,tb)
        for rho, bd in boundaries.items():
            a, b = (1, 0), (1, 1)
            nu1 = ope_prefactor_exponent(bd, parse_tree("t(c1c2)"), [a, b], [])
            want1 = (
                Fraction(0 if epsilon_cocycle(a, b) == 1 else 1)
                + bd.sigma_exponent((2, 1))
            ) % 2
            assert nu1 == want1
            nu2 = ope_prefactor_exponent(bd, parse_tree("(t(c1))(t(c2))"), [a, b], [])
            want2 = (bd.sigma_exponent(a) + bd.sigma_exponent(b)) % 2
            assert nu2 == want2

    def test_bb3_channels(self, model, boundaries):
        for rho, bd in boundaries.items():
            a = (2, 1)
            k = 1
            nu1 = ope_prefactor_exponent(bd, parse_tree("t(c1)o2"), [a], [k])
            assert nu1 == bd.sigma_exponent(a) % 2
            nu2 = ope_prefactor_exponent(bd, parse_tree("o2t(c1)"), [a], [k])
            assert nu2 == bd.sigma_exponent(a) % 2  # eta trivial here


class TestTreeExpansion:
    def test_two_point_closed_form_no_zeta(self, model):
        # r = 2: no edge variables; the expansion is the closed form
        charges = [(1, 0), (0, 1)]
        texp = tree_expansion(model, parse_tree("12"), charges, order=10)
        assert all(
            not any(Fraction(q) for v, q in exps.items() if v.startswith("ze"))
            for exps, _, _ in texp.series.terms()
        )
        pt = (0.9 + 0.3j, -0.2 - 0.1j)
        got = texp.evaluate(pt)
        want = bulk_correlator(model, (1, 1), list(zip(charges, pt)))
        assert abs(got - want) <= 1e-13 * abs(want)

    def test_bb3_leading_terms(self, model, boundaries):
        # leading coefficients match the two boundary OPE channels
        for rho, bd in boundaries.items():
            alpha = (1, 1)
            k = 2
            e1 = tree_expansion(
                model, parse_tree("t(c1)o2"), [alpha], 6, bd=bd, bdry_charges=[k]
            )
            s1 = model.frame_product(model.a_vec(alpha), bd.phi_abar_vec(alpha))
            t_ab = model.frame_product(
                tuple(
                    x + y
                    for x, y in zip(model.a_vec(alpha), bd.phi_abar_vec(alpha))
                ),
                bd.t_vec(k),
            )
            lead = {"xA": s1 + t_ab, "ze0": s1}
            got = e1.series.coefficient({v: q for v, q in lead.items() if q})
            assert abs(got - 1) < 1e-13
            assert e1.prefactor == phase_pi(
                bd.sigma_exponent(alpha) + bd.eta_exponent(bd.t_coeff(alpha), k)
            )
            e2 = tree_expansion(
                model, parse_tree("o2t(c1)"), [alpha], 6, bd=bd, bdry_charges=[k]
            )
            got2 = e2.series.coefficient({v: q for v, q in lead.items() if q})
            assert abs(got2 - 1) < 1e-13
            assert e2.prefactor == phase_pi(
                bd.sigma_exponent(alpha) + bd.eta_exponent(k, bd.t_coeff(alpha))
            )

    def test_uncertifiable_tree_raises(self, model):
        # no plain tree with distinct leaves fails on the lattice products,
        # but charge mismatch must raise
        with pytest.raises(LatticeError):
            tree_expansion(model, parse_tree("12"), [(1, 0)], 4)


class TestConsistency:
    def test_boundary_11_and_20(self, model, boundaries):
        for rho, bd in boundaries.items():
            alpha, beta = (1, 1), (0, 1)
            rep = expansion_consistency_check(
                model,
                [parse_tree("t(c1)o2"), parse_tree("o2t(c1)")],
                [alpha],
                order=25,
                tol=1e-6,
                n_points=6,
                seed=17,
                bd=bd,
                bdry_charges=[bd.t_coeff(beta)],
            )
            assert rep.passed, rep.text()
            rep2 = expansion_consistency_check(
                model,
                [parse_tree("(t(c1))(t(c2))"), parse_tree("t(c1c2)")],
                [alpha, beta],
                order=25,
                tol=1e-6,
                n_points=6,
                seed=19,
                bd=bd,
            )
            assert rep2.passed, rep2.text()

    def test_bulk_three_trees(self, model):
        charges = [(1, 0), (0, 1), (-1, 1), (1, -1)]
        rep = expansion_consistency_check(
            model,
            [parse_tree("1(2(34))"), parse_tree("(12)(34)"), parse_tree("((12)3)4")],
            charges,
            order=25,
            tol=1e-6,
            n_points=4,
            seed=23,
        )
        assert rep.passed, rep.text()

    def test_errors_decrease_with_order(self, model, boundaries):
        bd = boundaries[-1]
        alpha, beta = (1, 1), (0, 1)
        errs = {}
        for order in (10, 20, 30):
            rep = expansion_consistency_check(
                model,
                [parse_tree("(t(c1))(t(c2))")],
                [alpha, beta],
                order=order,
                tol=1.0,
                n_points=8,
                seed=29,
                bd=bd,
            )
            errs[order] = rep.max_rel_err
        assert errs[20] <= errs[10] * 1.1
        assert errs[30] <= errs[20] * 1.1

    def test_determinism(self, model, boundaries):
        bd = boundaries[1]
        kwargs = dict(order=12, tol=1e-3, n_points=3, seed=31, bd=bd, bdry_charges=[1])
        r1 = expansion_consistency_check(
            model, [parse_tree("t(c1)o2")], [(1, 0)], **kwargs
        )
        r2 = expansion_consistency_check(
            model, [parse_tree("t(c1)o2")], [(1, 0)], **kwargs
        )
        assert r1.to_obj() == r2.to_obj()


class TestSkewAndLoops:
    def test_equal_charges_trivial_ratio(self, model):
        rep = skew_symmetry_check(model, [((1, 1), (1, 1))], n_samples=4, seed=37)
        assert rep.passed
        assert rep.samples[0]["epsilon_ratio"] == 1
        assert rep.samples[0]["pairing_parity"] == 0

    def test_basis_pair_ratio(self, model):
        rep = skew_symmetry_check(model, [((1, 0), (0, 1))], n_samples=4, seed=41)
        assert rep.passed
        assert rep.samples[0]["epsilon_ratio"] == -1
        assert rep.samples[0]["pairing_parity"] == 1

    def test_random_pairs(self, model):
        rng = random.Random(43)
        pairs = [
            ((rng.randint(-2, 2), rng.randint(-2, 2)), (rng.randint(-2, 2), rng.randint(-2, 2)))
            for _ in range(10)
        ]
        rep = skew_symmetry_check(model, pairs, n_samples=10, seed=47)
        assert rep.passed, rep.text()

    def test_single_valuedness(self, model):
        rep = single_valuedness_check(
            model, [(1, 0), (0, 1), (-1, 1), (1, -1)], n_samples=4, seed=53
        )
        assert rep.passed, rep.text()
