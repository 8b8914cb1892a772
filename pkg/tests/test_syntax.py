from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from conftest import GEOMETRIC, rngs
from pcfbounds.gen import TermGen, GenConfig, closed_nat_term, fix_term, open_term, perturb
from pcfbounds.syntax import (
    ERRCONV,
    ERRDIV,
    LOWER,
    NAT,
    UPPER,
    Abs,
    App,
    Arrow,
    Coin,
    Fix,
    If,
    Let,
    Num,
    ParseError,
    Pred,
    Succ,
    TypeCheckError,
    Var,
    alpha_eq,
    arrow,
    err_at_type,
    is_fix_free,
    parse,
    parse_type,
    render,
    substitute,
    term_preorder_leq,
    typecheck,
    unfold,
    wrap_observe,
)

ID = Abs("x", NAT, Var("x"))


class TestTypecheck:
    def test_coin_is_nat(self):
        assert typecheck({}, Coin(F(1, 2))) == NAT

    def test_identity(self):
        assert typecheck({}, ID) == Arrow(NAT, NAT)

    def test_if_at_arrow_type_rejected(self):
        with pytest.raises(TypeError):
            typecheck({}, If(Num(0), ID, ID))

    def test_let_needs_nat_binding(self):
        with pytest.raises(TypeCheckError):
            typecheck({}, Let("x", ID, Num(0)))

    def test_unbound_variable(self):
        with pytest.raises(TypeCheckError, match="unbound"):
            typecheck({}, Var("x"))

    def test_application_mismatch(self):
        with pytest.raises(TypeCheckError):
            typecheck({}, App(ID, ID))

    def test_fix_needs_endofunction(self):
        with pytest.raises(TypeCheckError):
            typecheck({}, Fix(Abs("x", arrow(NAT, NAT), Num(0))))

    def test_errors_are_nat(self):
        assert typecheck({}, ERRDIV) == typecheck({}, ERRCONV) == NAT

    def test_rightmost_binding_wins(self):
        ctx = {"f": arrow(NAT, NAT)}
        inner = Abs("f", NAT, Succ(Var("f")))
        assert typecheck(ctx, inner) == arrow(NAT, NAT)

    def test_nat_variable_used_as_function_is_flagged(self):
        with pytest.raises(TypeCheckError) as info:
            typecheck({"x": NAT}, App(Var("x"), Num(0)))
        assert info.value.variable == "x"

    def test_coin_rejects_floats_and_out_of_range(self):
        with pytest.raises(ValueError):
            Coin(0.5)
        with pytest.raises(ValueError):
            Coin(F(3, 2))


class TestParser:
    def test_coin(self):
        assert parse("coin(1/2)") == Coin(F(1, 2))

    def test_fix_program_structure(self):
        t = parse(r"fix (\f: nat -> nat. \y: nat. if coin(1/2) then y else f y)")
        expected = Fix(
            Abs("f", arrow(NAT, NAT), Abs("y", NAT, If(Coin(F(1, 2)), Var("y"), App(Var("f"), Var("y")))))
        )
        assert t == expected

    def test_let_errconv(self):
        assert parse("let x = err+ in x") == Let("x", ERRCONV, Var("x"))

    def test_arrow_is_right_associative(self):
        assert parse_type("nat -> nat -> nat") == Arrow(NAT, Arrow(NAT, NAT))
        assert parse_type("(nat -> nat) -> nat") == Arrow(Arrow(NAT, NAT), NAT)

    def test_application_is_left_associative(self):
        assert parse("f a b") == App(App(Var("f"), Var("a")), Var("b"))

    def test_prefix_operators_bind_tighter_than_application(self):
        assert parse("succ f 0") == App(Succ(Var("f")), Num(0))
        assert parse("succ (f 0)") == Succ(App(Var("f"), Num(0)))

    def test_comments_and_whitespace(self):
        assert parse("# a comment\n  succ # inline\n 0\n") == Succ(Num(0))

    def test_errors_carry_position(self):
        with pytest.raises(ParseError) as info:
            parse("succ\n  )")
        assert (info.value.line, info.value.col) == (2, 3)

    def test_decimal_coin_rejected(self):
        with pytest.raises(ParseError):
            parse("coin(0.5)")

    def test_trailing_input_rejected(self):
        with pytest.raises(ParseError):
            parse("0 )")

    def test_binder_extends_right(self):
        t = parse(r"\x: nat. succ x")
        assert t == Abs("x", NAT, Succ(Var("x")))

    def test_trailing_binder_as_argument(self):
        assert parse(r"f \x: nat. x") == App(Var("f"), ID)

    @given(rngs)
    def test_round_trip(self, rng):
        t = TermGen(rng, GenConfig(max_depth=6, allow_fix=True)).term()
        assert alpha_eq(parse(render(t)), t)

    def test_render_examples(self):
        assert render(parse(GEOMETRIC)) == r"fix (\f: nat -> nat. \y: nat. if coin(1/2) then y else f y) 0"
        assert render(Succ(Pred(Num(3)))) == "succ pred 3"


class TestSubstitution:
    def test_variable(self):
        assert substitute(Var("x"), "x", Num(3)) == Num(3)

    def test_shadowing(self):
        assert substitute(ID, "x", Num(3)) == ID

    def test_capture_avoided(self):
        out = substitute(Abs("y", NAT, Var("x")), "x", Var("y"))
        assert out == Abs("y'", NAT, Var("y"))
        assert alpha_eq(out, Abs("z", NAT, Var("y")))

    def test_let_binder_capture_avoided(self):
        out = substitute(Let("y", Num(0), Succ(Var("x"))), "x", Var("y"))
        assert alpha_eq(out, Let("z", Num(0), Succ(Var("y"))))

    def test_let_bound_term_is_substituted_even_when_shadowed(self):
        out = substitute(Let("x", Var("x"), Var("x")), "x", Num(1))
        assert out == Let("x", Num(1), Var("x"))

    @given(rngs)
    def test_composition(self, rng):
        env = {"x": NAT, "y": NAT}
        gen = TermGen(rng, GenConfig(max_depth=5))
        t = gen.term(NAT, env)
        a = gen.term(NAT, env, 3)
        b = gen.term(NAT, {"y": NAT, "z": NAT}, 3)  # x not free in b
        left = substitute(substitute(t, "x", a), "y", b)
        right = substitute(substitute(t, "y", b), "x", substitute(a, "y", b))
        assert alpha_eq(left, right)

    @given(rngs)
    def test_preserves_types(self, rng):
        t = open_term(rng)
        a = closed_nat_term(rng, 4)
        assert typecheck({}, substitute(t, "x", a)) == NAT


class TestPreorder:
    @given(rngs)
    def test_errdiv_below_everything_at_nat(self, rng):
        m = closed_nat_term(rng)
        assert term_preorder_leq(ERRDIV, m, {}, NAT)
        assert term_preorder_leq(m, ERRCONV, {}, NAT)

    def test_fix_below_its_unfolding(self):
        fixid = Fix(ID)
        assert term_preorder_leq(fixid, App(ID, fixid), {}, NAT)
        assert term_preorder_leq(App(ID, fixid), fixid, {}, NAT)

    def test_distinct_numerals_unrelated(self):
        assert not term_preorder_leq(Num(0), Num(1), {}, NAT)

    def test_errconv_not_below_numeral(self):
        assert not term_preorder_leq(ERRCONV, Num(0), {}, NAT)

    def test_error_functions_bound_arrow_type(self):
        ty = arrow(NAT, NAT)
        f = Abs("a", NAT, Succ(Var("a")))
        assert term_preorder_leq(err_at_type(ty, LOWER), f, {}, ty)
        assert term_preorder_leq(f, err_at_type(ty, UPPER), {}, ty)
        assert not term_preorder_leq(err_at_type(ty, UPPER), f, {}, ty)

    def test_alpha_equivalent_terms_related(self):
        assert term_preorder_leq(ID, Abs("z", NAT, Var("z")), {}, arrow(NAT, NAT))

    def test_type_mismatch_raises(self):
        with pytest.raises(TypeError):
            term_preorder_leq(Num(0), ID, {}, NAT)

    @given(rngs, st.sampled_from(["up", "down"]))
    def test_perturbation_preserves_type(self, rng, direction):
        m = fix_term(rng)
        n = perturb(m, rng, direction)
        assert typecheck({}, n) == NAT

    @given(rngs)
    def test_congruence_through_contexts(self, rng):
        m = fix_term(rng)
        lo = perturb(m, rng, "down")
        assert term_preorder_leq(Succ(lo), Succ(m), {}, NAT)
        assert term_preorder_leq(If(Coin(F(1, 3)), lo, Num(2)), If(Coin(F(1, 3)), m, Num(2)), {}, NAT)


class TestUnfold:
    def test_err_at_type(self):
        assert err_at_type(NAT, LOWER) == ERRDIV
        assert err_at_type(arrow(NAT, NAT), UPPER) == Abs("x1", NAT, ERRCONV)
        assert err_at_type(arrow(arrow(NAT, NAT), NAT), LOWER) == Abs("x1", arrow(NAT, NAT), ERRDIV)

    def test_examples(self):
        assert unfold(Num(5), 3, LOWER) == Num(5)
        assert unfold(Fix(ID), 2, UPPER) == App(ID, App(ID, ERRCONV))
        assert unfold(Fix(ID), 0, LOWER) == ERRDIV

    def test_nested_fix_unfolded_inside_first(self):
        inner = Fix(ID)
        outer = Fix(Abs("y", NAT, inner))
        body = Abs("y", NAT, App(ID, ERRDIV))
        assert unfold(outer, 1, LOWER) == App(body, ERRDIV)

    @given(rngs, st.integers(0, 4))
    def test_fix_free_and_typed(self, rng, k):
        m = fix_term(rng)
        for pol in (LOWER, UPPER):
            u = unfold(m, k, pol)
            assert is_fix_free(u)
            assert typecheck({}, u) == NAT

    @given(rngs, st.integers(0, 4))
    def test_sandwich_in_preorder(self, rng, k):
        m = fix_term(rng)
        assert term_preorder_leq(unfold(m, k, LOWER), m, {}, NAT)
        assert term_preorder_leq(m, unfold(m, k, UPPER), {}, NAT)

    def test_wrap_observe(self):
        assert wrap_observe(Num(0)) == Let("z", Num(0), ERRCONV)
        assert wrap_observe(ERRDIV) == Let("z", ERRDIV, ERRCONV)

    def test_wrap_avoids_capturing_free_z(self):
        w = wrap_observe(Var("z"))
        assert w.var != "z" and w.bound == Var("z")
