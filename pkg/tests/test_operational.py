import re
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from conftest import COIN_OR_OMEGA, GEOMETRIC, OMEGA, rngs, subdists
from pcfbounds.gen import closed_nat_term, fix_term
from pcfbounds.groundsem import SubDist
from pcfbounds.operational import (
    ERR_CONV,
    ERR_DIV,
    TIMEOUT,
    NotGround,
    Numeral,
    err_probability,
    estimate,
    exact_outcomes,
    is_whnormal,
    sample,
    sampler_term,
    step,
    trial_seed,
)
from pcfbounds.syntax import (
    ERRCONV,
    ERRDIV,
    NAT,
    Abs,
    App,
    Coin,
    If,
    Let,
    Num,
    Pred,
    Succ,
    Var,
    parse,
    wrap_observe,
)

GEO = wrap_observe(parse(GEOMETRIC))


def loop_budget(iterations: int) -> int:
    # the wrapped loop needs 6 steps when the first coin exits (fix, two
    # beta, coin, if, let) and 5 more for every further iteration
    return 6 + 5 * (iterations - 1)


class TestStep:
    def test_pred_zero(self):
        assert step(Pred(Num(0))) == [(1, Num(0))]

    def test_coin(self):
        assert step(Coin(F(1, 3))) == [(F(1, 3), Num(0)), (F(2, 3), Num(1))]

    def test_degenerate_coins_have_one_successor(self):
        assert step(Coin(F(1))) == [(1, Num(0))]
        assert step(Coin(F(0))) == [(1, Num(1))]

    @pytest.mark.parametrize("t", [Num(7), ERRDIV, ERRCONV])
    def test_normal_forms(self, t):
        assert step(t) == []
        assert is_whnormal(t)

    def test_not_normal(self):
        assert not is_whnormal(Succ(Num(7)))

    @pytest.mark.parametrize("err", [ERRDIV, ERRCONV])
    def test_error_propagation(self, err):
        for t in (Succ(err), Pred(err), If(err, Num(0), Num(1)), Let("x", err, Num(0))):
            assert step(t) == [(1, err)]

    def test_contexts(self):
        assert step(Succ(Succ(Num(1)))) == [(1, Succ(Num(2)))]
        assert step(If(Succ(Num(0)), Num(5), Num(6))) == [(1, If(Num(1), Num(5), Num(6)))]
        assert step(If(Num(3), Num(5), Num(6))) == [(1, Num(6))]

    def test_let_is_by_value(self):
        t = Let("x", Coin(F(1, 2)), Succ(Var("x")))
        assert step(t) == [(F(1, 2), Let("x", Num(0), Succ(Var("x")))), (F(1, 2), Let("x", Num(1), Succ(Var("x"))))]
        assert step(Let("x", Num(4), Succ(Var("x")))) == [(1, Succ(Num(4)))]

    def test_beta_is_by_name(self):
        t = App(Abs("x", NAT, Succ(Var("x"))), Coin(F(1, 2)))
        assert step(t) == [(1, Succ(Coin(F(1, 2))))]

    def test_fix(self):
        t = parse(OMEGA)
        assert step(t) == [(1, App(t.body, t))]

    def test_application_of_a_redex_reduces_the_function(self):
        t = parse(r"((\f: nat -> nat. f) (\x: nat. x)) 3")
        assert step(t) == [(1, parse(r"(\x: nat. x) 3"))]

    def test_open_or_functional_terms_rejected(self):
        with pytest.raises(NotGround):
            step(Var("x"))
        with pytest.raises(NotGround):
            step(Abs("x", NAT, Var("x")))

    @given(rngs)
    def test_probabilities_sum_to_one_and_successors_distinct(self, rng):
        t = fix_term(rng)
        for _ in range(30):
            succ = step(t)
            if not succ:
                break
            assert sum(p for p, _ in succ) == 1
            assert len({s for _, s in succ}) == len(succ)
            assert all(s != t for _, s in succ)
            if len(succ) > 1:
                assert all(0 < p < 1 for p, _ in succ)
            t = succ[rng.randrange(len(succ))][1]


class TestExact:
    def test_two_paths_to_zero(self):
        d = exact_outcomes(If(Coin(F(1, 2)), Num(0), Num(0)), 100)
        assert d.outcomes == {Num(0): 1} and d.residual == 0

    def test_omega(self):
        d = exact_outcomes(parse(OMEGA), max_steps=100)
        assert d.outcomes == {} and d.residual == 1

    def test_geometric_loop(self):
        for iterations in range(1, 13):
            d = exact_outcomes(GEO, loop_budget(iterations))
            assert d.outcomes == {ERRCONV: 1 - F(1, 2**iterations)}
            assert d.residual == F(1, 2**iterations)

    def test_err_probability(self):
        assert err_probability(ERRCONV) == (1, 1)
        assert err_probability(Coin(F(1, 2))) == (0, 0)
        assert err_probability(GEO, loop_budget(10)) == (F(1023, 1024), 1)

    def test_min_mass_pruning_is_sound(self):
        lo, hi = err_probability(GEO, 10_000, min_mass=F(1, 1000))
        assert lo <= 1 <= hi
        assert hi - lo < F(1, 500)

    @given(rngs, st.integers(0, 60))
    def test_total_mass_is_one(self, rng, budget):
        d = exact_outcomes(fix_term(rng), budget, min_mass=F(1, 512))
        assert sum(d.outcomes.values()) + d.residual == 1
        assert all(is_whnormal(t) for t in d.outcomes)

    @given(rngs, st.integers(0, 40), st.integers(1, 20))
    def test_budget_monotone(self, rng, budget, extra):
        t = fix_term(rng)
        small, large = exact_outcomes(t, budget), exact_outcomes(t, budget + extra)
        assert large.residual <= small.residual
        assert all(large.prob(o) >= p for o, p in small.outcomes.items())

    def test_open_term_rejected(self):
        with pytest.raises(NotGround):
            exact_outcomes(Var("x"))


class TestSampler:
    def test_examples(self):
        assert sample(Num(4), 123) == Numeral(4)
        assert sample(Coin(F(0)), 9) == Numeral(1)
        assert sample(parse(OMEGA), 5, max_steps=50) is TIMEOUT
        assert sample(ERRDIV, 1) == ERR_DIV
        assert sample(GEO, 1, 10_000) == ERR_CONV

    @given(st.integers(0, 2**64 - 1))
    def test_deterministic(self, seed):
        t = parse(COIN_OR_OMEGA)
        assert sample(t, seed, 100) == sample(t, seed, 100)

    def test_trial_seeds_are_pure(self):
        assert trial_seed(7, 3) == trial_seed(7, 3) != trial_seed(7, 4)
        assert 0 <= trial_seed(7, 3) < 2**64

    @settings(max_examples=30)
    @given(rngs)
    def test_step_budget_matches_the_oracle(self, rng):
        # with every coin forced to 0 or 1 the program is deterministic, and
        # the sampler must time out exactly when the explorer runs out of steps
        t = fix_term(rng)
        forced = parse(re.sub(r"coin\([0-9]+/[0-9]+\)", lambda m: rng.choice(["coin(0/1)", "coin(1/1)"]), str(t)))
        d = exact_outcomes(forced, 300)
        for budget in (d.depth - 1, d.depth, d.depth + 1):
            if budget < 0:
                continue
            got = sample(forced, 0, budget)
            resolved = exact_outcomes(forced, budget)
            assert (got is TIMEOUT) == (resolved.residual == 1)

    def test_estimate_examples(self):
        est = estimate(Coin(F(1, 2)), 10_000, 11, 10)
        for o in (Numeral(0), Numeral(1)):
            assert abs(est.freq(o) - 0.5) <= 5 * 0.005  # 5 sigma at p = 1/2
        assert estimate(Num(0), 10, 3, 10).counts == {Numeral(0): 10}
        geo = estimate(GEO, 10_000, 1, 500)
        assert geo.freq(ERR_CONV) == 1.0

    def test_estimate_independent_of_workers(self):
        t = parse(COIN_OR_OMEGA)
        one = estimate(t, 400, 5, 60, workers=1)
        two = estimate(t, 400, 5, 60, workers=2)
        assert one.counts == two.counts

    @settings(max_examples=25)
    @given(rngs)
    def test_sampler_agrees_with_oracle(self, rng):
        t = closed_nat_term(rng, 5)
        exact = exact_outcomes(t, 100_000)
        est = estimate(t, 10_000, rng.randrange(2**32), 100_000)
        for o, p in exact.outcomes.items():
            label = {ERRCONV: ERR_CONV, ERRDIV: ERR_DIV}.get(o) or Numeral(o.n)
            sigma = (float(p) * (1 - float(p)) / est.n) ** 0.5
            assert abs(est.freq(label) - float(p)) <= 5 * sigma + 1e-12
        assert sum(est.counts.values()) == est.n


class TestSamplerTerm:
    @given(subdists(support=(0, 1, 2, 5)))
    def test_sampler_term_reproduces_distribution(self, u):
        d = exact_outcomes(sampler_term(u), 1000)
        assert d.residual == 0
        assert d.prob(ERRCONV) == u.err
        assert d.prob(ERRDIV) == 1 - u.total()
        for n in (0, 1, 2, 5):
            assert d.prob(Num(n)) == u.mass(n)

    def test_empty(self):
        assert sampler_term(SubDist()) == ERRDIV
