import math

import pytest

from semidyn.commutator import (
    AffineGroup,
    ClosureOverflowError,
    CommutatorTable,
    NoAffineCommutatorError,
    DegenerateSamplesError,
    NotNearlyRepresentableError,
    SemigroupPresentation,
    build_commutator_table,
    conjugate_semigroup,
    find_affine_commutator,
    group_closure,
    is_nearly_abelian,
    presentation_from_json_dict,
    presentation_to_json_dict,
    verify_identity,
)
from semidyn.expr import (
    AffineMap,
    Cos,
    Exp,
    Identity,
    Negate,
    Power,
    SamplePlan,
    affine_compose,
    affine_distance,
    affine_inverse,
    numerically_equal,
)
from semidyn.fixtures import FIXTURES, INVOLUTION_FIXTURES

Z = Identity()
IDENT = AffineMap(1, 0)
PLAN = SamplePlan(seed=11)


def paper_pairs():
    for name in INVOLUTION_FIXTURES:
        S = FIXTURES[name].presentation
        yield name, S.generator(1), S.generator(2)


class TestFindAffineCommutator:
    @pytest.mark.parametrize("name", INVOLUTION_FIXTURES)
    def test_negation_pairs_give_minus_z(self, name):
        fx = FIXTURES[name]
        res = find_affine_commutator(*fx.presentation.generators, fx.plan)
        assert abs(res.map.a + 1) < 1e-9
        assert abs(res.map.b) < 1e-9

    def test_same_function_gives_identity(self):
        f = FIXTURES["example-2.1-exp"].presentation.generator(1)
        res = find_affine_commutator(f, f, PLAN)
        assert res.map == IDENT and res.residual == 0.0

    def test_shifted_exponential_pair(self):
        fx = FIXTURES["derived-exp-shift"]
        res = find_affine_commutator(*fx.presentation.generators, fx.plan)
        assert abs(res.map.a - math.e) < 1e-9
        assert abs(res.map.b + math.e) < 1e-9

    def test_non_pair_rejected(self):
        with pytest.raises((NoAffineCommutatorError, DegenerateSamplesError)):
            find_affine_commutator(Exp(Z), Power(Z, 2), PLAN)

    def test_transcendental_non_pair_rejected(self):
        with pytest.raises((NoAffineCommutatorError, DegenerateSamplesError)):
            find_affine_commutator(Exp(Z), Cos(Z), PLAN)


class TestCommutatorTable:
    def test_negation_pair_table(self):
        fx = FIXTURES["example-2.1-exp"]
        table = build_commutator_table(fx.presentation, fx.plan)
        assert affine_distance(table.entry(1, 2), AffineMap(-1, 0)) < 1e-9
        assert affine_distance(table.entry(2, 1), AffineMap(-1, 0)) < 1e-9
        assert table.entry(1, 1) == IDENT and table.entry(2, 2) == IDENT

    def test_single_generator(self):
        S = SemigroupPresentation((Cos(Z),), label="single")
        table = build_commutator_table(S, PLAN)
        assert table.entries == {(1, 1): IDENT}

    def test_failure_lists_pairs(self):
        S = SemigroupPresentation((Exp(Z), Cos(Z)), label="nonpair")
        with pytest.raises(NotNearlyRepresentableError) as exc:
            build_commutator_table(S, PLAN)
        assert (1, 2) in exc.value.failing_pairs

    @pytest.mark.parametrize("name", list(FIXTURES))
    def test_opposite_entries_compose_to_identity(self, name):
        fx = FIXTURES[name]
        table = build_commutator_table(fx.presentation, fx.plan)
        for i in range(1, len(fx.presentation) + 1):
            for j in range(1, len(fx.presentation) + 1):
                m = affine_compose(table.entry(i, j), table.entry(j, i))
                assert affine_distance(m, IDENT) < 1e-9

    def test_json_round_trip(self):
        fx = FIXTURES["derived-exp-shift"]
        table = build_commutator_table(fx.presentation, fx.plan)
        again = CommutatorTable.from_json_dict(table.to_json_dict())
        assert again.entries == table.entries
        doc = presentation_to_json_dict(fx.presentation)
        S2 = presentation_from_json_dict(doc)
        assert presentation_to_json_dict(S2) == doc


class TestNearlyAbelian:
    def test_cos_pair(self):
        fx = FIXTURES["example-2.1-cos"]
        rep = is_nearly_abelian(fx.presentation, fx.plan)
        assert rep.algebraic and rep.table is not None
        assert rep.precompactness_assumed

    def test_single_generator_is_abelian(self):
        S = SemigroupPresentation((Cos(Z),), label="single")
        rep = is_nearly_abelian(S, PLAN)
        assert rep.algebraic
        assert rep.table.entry(1, 1) == IDENT

    def test_non_pair(self):
        S = SemigroupPresentation((Exp(Z), Cos(Z)), label="nonpair")
        rep = is_nearly_abelian(S, PLAN)
        assert not rep.algebraic
        assert rep.table is None and rep.failing_pairs


class TestGroupClosure:
    def test_involution_gives_two_elements(self):
        G = group_closure([AffineMap(-1, 0)])
        assert len(G) == 2 and G.closed
        assert G.find(IDENT) is not None
        assert G.find(AffineMap(-1, 0)) is not None

    def test_empty_seeds_trivial_group(self):
        G = group_closure([])
        assert [m for m in G.elements] == [IDENT]

    def test_doubling_overflows(self):
        with pytest.raises(ClosureOverflowError) as exc:
            group_closure([AffineMap(2, 0)], cap=64)
        assert len(exc.value.partial) <= 64

    def test_rotation_order_four(self):
        G = group_closure([AffineMap(1j, 0)])
        assert len(G) == 4

    def test_closure_is_closed(self):
        G = group_closure([AffineMap(1j, 0), AffineMap(-1j, 0)], cap=256)
        for x in G.elements:
            for y in G.elements:
                assert G.find(affine_compose(x, y)) is not None


class TestIdentities:
    @pytest.mark.parametrize("name", INVOLUTION_FIXTURES)
    @pytest.mark.parametrize("which,n", [("1", 1), ("1", 2), ("1", 3),
                                         ("2", 1), ("2", 2), ("2", 3),
                                         ("3", 1)])
    def test_bracket_identities(self, name, which, n):
        fx = FIXTURES[name]
        f, g = fx.presentation.generators
        rep = verify_identity(which, f, g, n=n, plan=fx.plan)
        assert rep.holds, f"identity {which} (n={n}) residual {rep.residual:.3e}"
        assert rep.residual < 1e-9

    def test_diagonal_zero_residual(self):
        f = FIXTURES["example-2.1-cos"].presentation.generator(1)
        rep = verify_identity("diagonal", f, f, plan=PLAN)
        assert rep.holds and rep.residual == 0.0

    @pytest.mark.parametrize("name", list(FIXTURES))
    def test_inverse_law(self, name):
        fx = FIXTURES[name]
        f, g = fx.presentation.generators
        rep = verify_identity("inverse", f, g, plan=fx.plan)
        assert rep.holds and rep.residual < 1e-9

    def test_unknown_identity(self):
        with pytest.raises(ValueError):
            verify_identity("nope", Cos(Z), Cos(Z), plan=PLAN)

    def test_n_out_of_range(self):
        with pytest.raises(ValueError):
            verify_identity("1", Cos(Z), Cos(Z), n=4, plan=PLAN)


class TestConjugation:
    def test_identity_conjugation(self):
        fx = FIXTURES["example-2.1-cos"]
        conj = conjugate_semigroup(fx.presentation, IDENT)
        for g1, g2 in zip(conj.generators, fx.presentation.generators):
            assert numerically_equal(g1, g2, fx.plan).equal

    def test_negation_conjugation_swaps_even_pair(self):
        # phi f phi^{-1} = -f(-z) = -f for even f
        fx = FIXTURES["example-2.1-exp"]
        conj = conjugate_semigroup(fx.presentation, AffineMap(-1, 0))
        assert numerically_equal(
            conj.generator(1), fx.presentation.generator(2), fx.plan
        ).equal

    @pytest.mark.parametrize("name", INVOLUTION_FIXTURES)
    def test_double_conjugation_returns(self, name):
        fx = FIXTURES[name]
        phi = AffineMap(-1, 0)
        back = conjugate_semigroup(
            conjugate_semigroup(fx.presentation, phi), affine_inverse(phi)
        )
        for g1, g2 in zip(back.generators, fx.presentation.generators):
            rep = numerically_equal(g1, g2, fx.plan)
            assert rep.equal and rep.max_error < 1e-9

    @pytest.mark.parametrize("name", INVOLUTION_FIXTURES)
    def test_conjugate_preserves_near_abelianness(self, name):
        fx = FIXTURES[name]
        rep = is_nearly_abelian(fx.presentation, fx.plan)
        phi = rep.table.entry(1, 2)
        conj = conjugate_semigroup(fx.presentation, phi)
        rep2 = is_nearly_abelian(conj, fx.plan)
        assert rep.algebraic == rep2.algebraic

    def test_commutator_product_can_leave_commutator_set(self):
        # exhibited on the shifted-exp pair: the square of a commutator is
        # not within tolerance of any solved table entry
        fx = FIXTURES["derived-exp-shift"]
        table = build_commutator_table(fx.presentation, fx.plan)
        xi = affine_compose(table.entry(1, 2), table.entry(1, 2))
        assert all(affine_distance(xi, m) > 1e-6 for m in table.maps())


class TestPresentationValidation:
    def test_needs_generators(self):
        with pytest.raises(ValueError):
            SemigroupPresentation(())

    def test_transcendental_required(self):
        with pytest.raises(ValueError):
            SemigroupPresentation((Power(Z, 2),))

    def test_transcendental_check_can_be_waived(self):
        S = SemigroupPresentation((Power(Z, 2),), require_transcendental=False)
        assert len(S) == 1
