import itertools
import random

import pytest

from opetree.braids import (
    BraidError,
    BraidWord,
    PaBMorphism,
    abelianization,
    block_substitution,
    braid_permutation,
    cable_compose,
    conjugation_swapped,
    format_braid_word,
    identity_braid,
    is_pure,
    mirror,
    pab_compose,
    pab_morphism,
    papb_compose,
    papb_generator,
    papb_identity,
    papb_morphism,
    parse_braid_word,
    rank_frame,
)
from opetree.trees import compose_colored, parse_tree


def all_words(n, max_len):
    letters = [s * i for i in range(1, n) for s in (1, -1)]
    for length in range(max_len + 1):
        for combo in itertools.product(letters, repeat=length):
            yield BraidWord(n, combo)


def random_word(rng, n, max_len=6):
    if n < 2:
        return BraidWord(n, ())
    letters = [s * i for i in range(1, n) for s in (1, -1)]
    return BraidWord(n, tuple(rng.choice(letters) for _ in range(rng.randint(0, max_len))))


class TestPermutation:
    def test_sigma1_on_two(self):
        assert braid_permutation(BraidWord(2, (1,))) == (2, 1)

    def test_pure_square(self):
        w = BraidWord(2, (1, 1))
        assert braid_permutation(w) == (1, 2)
        assert is_pure(w)

    def test_braid_relation_permutation(self):
        a = braid_permutation(BraidWord(3, (1, 2, 1)))
        b = braid_permutation(BraidWord(3, (2, 1, 2)))
        assert a == b == (3, 2, 1)

    def test_generator_range(self):
        with pytest.raises(BraidError):
            BraidWord(2, (2,))
        with pytest.raises(BraidError):
            BraidWord(3, (0,))


class TestMirror:
    def test_single(self):
        assert mirror(BraidWord(2, (1,))).word == (-1,)

    def test_involution(self):
        rng = random.Random(51)
        for _ in range(100):
            w = random_word(rng, rng.randint(2, 5))
            assert mirror(mirror(w)) == w

    def test_permutation_preserved(self):
        rng = random.Random(52)
        for _ in range(200):
            w = random_word(rng, rng.randint(2, 5))
            assert braid_permutation(mirror(w)) == braid_permutation(w)

    def test_homomorphism(self):
        rng = random.Random(53)
        for _ in range(100):
            u = random_word(rng, 4)
            v = random_word(rng, 4)
            assert mirror(u * v) == mirror(u) * mirror(v)

    def test_negates_abelianization(self):
        rng = random.Random(54)
        for _ in range(100):
            w = random_word(rng, rng.randint(2, 5))
            ab = abelianization(w)
            mab = abelianization(mirror(w))
            assert mab == {k: -v for k, v in ab.items()}


class TestCable:
    def test_identity_times_identity(self):
        for n in (1, 2, 4):
            for m in (1, 2, 3):
                for p in range(1, n + 1):
                    out = cable_compose(identity_braid(n), p, identity_braid(m))
                    assert out == identity_braid(n + m - 1)

    def test_widening_worked_example(self):
        # sigma_1 on 2 strands, slot 2 widened by sigma_1 on 2 strands:
        # two positive expansion crossings at indices {1,2} plus the inner
        # word at the wide strand's final position; block-substituted
        # permutation
        out = cable_compose(BraidWord(2, (1,)), 2, BraidWord(2, (1,)))
        assert out.strands == 3
        assert sorted(abs(x) for x in out.word) == [1, 1, 2]
        assert all(x > 0 for x in out.word)
        assert braid_permutation(out) == block_substitution((2, 1), 2, (2, 1))

    def test_strand_deletion(self):
        out = cable_compose(BraidWord(2, (1, 1)), 1, BraidWord(0, ()))
        assert out == BraidWord(1, ())
        out2 = cable_compose(BraidWord(3, (1, 2, -1)), 2, BraidWord(0, ()))
        assert out2.strands == 2

    def test_strand_counts(self):
        rng = random.Random(55)
        for _ in range(100):
            n, m = rng.randint(1, 5), rng.randint(0, 4)
            g = random_word(rng, n)
            h = random_word(rng, m) if m else BraidWord(0, ())
            p = rng.randint(1, n)
            assert cable_compose(g, p, h).strands == n + m - 1

    def test_functoriality_moderate_exhaustive(self):
        # exhaustive over short words; the full sweep runs in acceptance
        for n in (2, 3):
            for g in all_words(n, 2):
                pg = braid_permutation(g)
                for m in (2, 3):
                    for h in all_words(m, 1):
                        ph = braid_permutation(h)
                        for p in range(1, n + 1):
                            cab = cable_compose(g, p, h)
                            assert braid_permutation(cab) == block_substitution(
                                pg, p, ph
                            )

    def test_pure_times_pure_is_pure(self):
        rng = random.Random(56)
        found = 0
        while found < 50:
            g = random_word(rng, rng.randint(2, 4))
            h = random_word(rng, rng.randint(2, 4))
            if not (is_pure(g) and is_pure(h)):
                continue
            p = rng.randint(1, g.strands)
            assert is_pure(cable_compose(g, p, h))
            found += 1

    def test_deletion_permutation(self):
        rng = random.Random(57)
        for _ in range(200):
            n = rng.randint(2, 5)
            g = random_word(rng, n)
            p = rng.randint(1, n)
            out = cable_compose(g, p, BraidWord(0, ()))
            pg = braid_permutation(g)
            gp = pg[p - 1]
            want = tuple(
                v - (1 if v > gp else 0)
                for i, v in enumerate(pg)
                if i != p - 1
            )
            assert braid_permutation(out) == want


class TestPaB:
    def test_pure_endomorphism(self):
        a = parse_tree("12")
        m = pab_morphism(a, a, BraidWord(2, (1, 1)))
        assert is_pure(m.word)

    def test_sigma_example(self):
        m = pab_morphism(parse_tree("12"), parse_tree("21"), BraidWord(2, (1,)))
        assert braid_permutation(m.word) == (2, 1)

    def test_alpha_example(self):
        pab_morphism(parse_tree("(12)3"), parse_tree("1(23)"), identity_braid(3))

    def test_permutation_mismatch(self):
        with pytest.raises(BraidError):
            pab_morphism(parse_tree("12"), parse_tree("21"), identity_braid(2))

    def test_composition(self):
        g = pab_morphism(parse_tree("12"), parse_tree("21"), BraidWord(2, (1,)))
        h = pab_morphism(parse_tree("12"), parse_tree("21"), BraidWord(2, (1,)))
        out = pab_compose(g, 2, h)
        assert out.word.strands == 3
        assert out.source == parse_tree("1(23)") or out.source is not None


class TestGenerators:
    def test_all_five_validate(self):
        for name in ("alpha_o", "alpha_c", "sigma", "p", "q"):
            g = papb_generator(name)
            conjugation_swapped(g)  # structural sanity: swap bars + mirror

    def test_alpha_o(self):
        g = papb_generator("alpha_o")
        assert g.word.strands == 3 and is_pure(g.word)
        assert g.source == parse_tree("(o1o2)o3")
        assert g.target == parse_tree("o1(o2o3)")

    def test_sigma_blockwise(self):
        g = papb_generator("sigma")
        assert g.word.strands == 4
        assert braid_permutation(g.word) == (3, 4, 1, 2)
        # signs: + on the bulk strands, - on the conjugates
        ab = abelianization(g.word)
        assert ab[(1, 3)] == 1 and ab[(2, 4)] == -1

    def test_p_signs(self):
        g = papb_generator("p")
        ab = abelianization(g.word)
        # bulk strand above the boundary strand: positive; conjugate: negative
        assert ab[(1, 3)] == 1 and ab[(2, 3)] == -1

    def test_q_identity_word(self):
        g = papb_generator("q")
        assert g.word.word == ()
        assert g.source == parse_tree("t(c1c2)")
        assert g.target == parse_tree("t(c1)t(c2)")

    def test_unknown_name(self):
        with pytest.raises(BraidError):
            papb_generator("nope")


class TestPaPBCompose:
    def test_identity_compose_identity(self):
        i1 = papb_identity(parse_tree("t(c1)o2"))
        i2 = papb_identity(parse_tree("o1"))
        out = papb_compose(i1, 2, i2)
        assert out.word.word == ()

    def test_trees_follow_colored_composition(self):
        mu = papb_generator("p")
        nu = papb_identity(parse_tree("t(c1)o2"))
        out = papb_compose(mu, 2, nu)
        assert out.source == compose_colored(mu.source, 2, nu.source)
        assert out.target == compose_colored(mu.target, 2, nu.target)

    def test_p_with_closed_sigma(self):
        mu = papb_generator("p")
        gamma = pab_morphism(parse_tree("12"), parse_tree("21"), BraidWord(2, (1,)))
        out = papb_compose(mu, 1, gamma)
        assert out.word.strands == 5
        assert braid_permutation(out.word) == (3, 2, 5, 4, 1)

    def test_block_permutation_oracle(self):
        # brute-force oracle: the composite's permutation is the block
        # substitution of the factors' permutations at the cabled strands
        from opetree.trees import validate_colored

        gens = [papb_generator(n) for n in ("sigma", "p", "q", "alpha_o")]
        gamma = pab_morphism(parse_tree("12"), parse_tree("21"), BraidWord(2, (1,)))
        nu_open = papb_generator("p")  # nontrivial word at an open slot
        for mu in gens:
            r, s, _ = validate_colored(mu.source)
            for slot in range(1, r + s + 1):
                if slot <= r:
                    out = papb_compose(mu, slot, gamma)
                    i1 = mu.source_frame.index(("z", slot)) + 1
                    i2 = mu.source_frame.index(("zbar", slot)) + 1
                    want = block_substitution(
                        braid_permutation(mu.word), i1, braid_permutation(gamma.word)
                    )
                    want = block_substitution(
                        want, i2 + 1, braid_permutation(mirror(gamma.word))
                    )
                else:
                    out = papb_compose(mu, slot, nu_open)
                    i1 = mu.source_frame.index(("x", slot - r)) + 1
                    want = block_substitution(
                        braid_permutation(mu.word), i1, braid_permutation(nu_open.word)
                    )
                assert braid_permutation(out.word) == want
                assert sorted(out.source_frame) == sorted(out.target_frame)

    def test_invariants_api(self):
        g = papb_generator("sigma")
        perm, ab = g.invariants()
        assert perm == (3, 4, 1, 2)
        # bulk strands cross everything from above (+), conjugates from
        # below (-): four crossings in the doubled half-twist
        assert dict(ab) == {(1, 3): 1, (1, 4): 1, (2, 3): -1, (2, 4): -1}
        # free insertion of a cancelling pair leaves the invariants fixed
        padded = papb_morphism(
            g.source, g.target, BraidWord(4, (1, -1) + g.word.word)
        )
        assert padded.invariants() == g.invariants()

    def test_color_mismatch(self):
        mu = papb_generator("p")
        with pytest.raises(BraidError):
            papb_compose(mu, 1, papb_identity(parse_tree("o1")))
        gamma = pab_morphism(parse_tree("1"), parse_tree("1"), identity_braid(1))
        with pytest.raises(BraidError):
            papb_compose(mu, 2, gamma)


class TestTextFormat:
    def test_round_trip(self):
        w = BraidWord(4, (1, -2, 3, -1))
        assert parse_braid_word(format_braid_word(w), strands=4) == w

    def test_parse(self):
        w = parse_braid_word("s1 s2^-1 s1")
        assert w.word == (1, -2, 1)

    def test_bad_tokens(self):
        with pytest.raises(BraidError):
            parse_braid_word("x2")
        with pytest.raises(BraidError):
            parse_braid_word("s1^2")


class TestRankFrames:
    def test_sorted_tree_is_interleaved(self):
        f = rank_frame(parse_tree("t(c1c2)"))
        assert f == (("z", 1), ("zbar", 1), ("z", 2), ("zbar", 2))

    def test_permuted_tree(self):
        f = rank_frame(parse_tree("t(c2c1)"))
        assert f == (("z", 2), ("zbar", 2), ("z", 1), ("zbar", 1))

    def test_boundary_order(self):
        f = rank_frame(parse_tree("o2t(c1)"))
        assert f == (("x", 1), ("z", 1), ("zbar", 1))
