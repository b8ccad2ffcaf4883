import random
from fractions import Fraction

import mpmath
import pytest

from liouville_functor.blocks import (
    _leg_terms,
    dehn_twist_phase,
    four_point_block,
    glue_four_point,
    glue_four_point_grid,
    glue_pants,
    glue_torus_one_point,
    half_dehn_twist,
    pants_half_dehn_twist,
    pants_legs,
    pants_phase,
    pants_wave_function_eval,
    phase,
    relation_fields,
    solve_three_point,
    torus_one_point_block,
    twist_factor,
    wave_function_eval,
)
from liouville_functor.errors import BlockError
from liouville_functor.graphs import OrientedEdge, StableGraph, Tail
from liouville_functor.groupoid import PantsDecomposition
from liouville_functor.models import BlockSeries
from liouville_functor.virasoro import LiouvilleParams, character, module_for

F = Fraction
PARAMS = LiouvilleParams(F(1))
D1, D2, D3, D4 = F(1, 3), F(2, 5), F(3, 7), F(5, 11)
BETA = F(7, 4)
TIGHT = mpmath.mpf(10) ** -30


# -- three-point blocks -----------------------------------------------------------------

def test_three_point_level_one_values():
    block = solve_three_point(PARAMS, (D1, D2, D3), 1)
    assert block.value(((), (), ())) == 1
    assert block.value(((1,), (), ())) == D1 + D2 - D3
    assert block.value(((), (1,), ())) == D3 - D1 - D2
    assert block.value(((), (), (1,))) == D3 + D2 - D1


def test_three_point_normalization_scales_values():
    block = solve_three_point(PARAMS, (D1, D2, D3), 1, normalization=F(3))
    assert block.value(((), (), ())) == 3
    assert block.value(((1,), (), ())) == 3 * (D1 + D2 - D3)
    assert block.with_normalization(F(1)).value(((1,), (), ())) == D1 + D2 - D3


def test_pairing_is_multilinear():
    block = solve_three_point(PARAMS, (D1, D2, D3), 1)
    m0, m1, m2 = (module_for(PARAMS, d) for d in (D1, D2, D3))
    v0 = m0.highest_weight() * 2 + m0.basis_vector((1,))
    expected = 2 * block.value(((), (), ())) + block.value(((1,), (), ()))
    assert block.pairing(v0, m1.highest_weight(), m2.highest_weight()) == expected


def test_relation_families_agree():
    window = solve_three_point(PARAMS, (D1, D2, D3), 2, family="window")
    triangular = solve_three_point(PARAMS, (D1, D2, D3), 2, family="triangular")
    assert window.ratios == triangular.ratios


def test_solution_satisfies_every_relation():
    block = solve_three_point(PARAMS, (D1, D2, D3), 2, family="triangular")
    assert block.residuals() == []


def test_relation_fields():
    assert (0, 0) in relation_fields(1)
    assert (1 - 2, 1) in relation_fields(2, "triangular")
    with pytest.raises(BlockError):
        relation_fields(1, "spiral")


@pytest.mark.parametrize("leg", [0, 1, 2])
@pytest.mark.parametrize("a,m", [(0, -1), (-2, -3), (1, -2), (2, 1)])
def test_leg_coefficients_stay_exact(leg, a, m):
    terms = list(_leg_terms(leg, a, m, 8))
    assert terms
    assert all(type(c) is Fraction for _, c in terms)


def test_default_window_solve_at_level_two():
    block = solve_three_point(PARAMS, (D1, D2, D3), 2)
    assert block.residuals() == []
    assert all(type(v) is Fraction for v in block.ratios.values())


def test_three_point_rejects_bad_arguments():
    with pytest.raises(BlockError):
        solve_three_point(PARAMS, (D1, D2, D3), -1)
    with pytest.raises(BlockError):
        solve_three_point(PARAMS, (D1, D2, D3), 1, support=(3,))
    with pytest.raises(BlockError):
        solve_three_point(PARAMS, (D1, D2), 1)


def test_value_outside_solved_range():
    block = solve_three_point(PARAMS, (D1, D2, D3), 1, support=(2,))
    with pytest.raises(BlockError):
        block.value(((1,), (), ()))


# -- four-point sphere ----------------------------------------------------------------------

def test_four_point_constant_term_and_first_coefficient():
    series = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 1)
    assert series.delta_beta == BETA
    assert series.constant_term == 1
    assert series.coefficients[1] == (BETA + D2 - D1) * (BETA + D3 - D4) / (2 * BETA)


def test_four_point_normalizations_are_bilinear():
    plain = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 2)
    scaled = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 2, normalizations=(F(2), F(-3)))
    assert scaled.constant_term == -6
    assert scaled == plain.scaled(F(-6))


def test_four_point_reflection_symmetry():
    forward = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 3)
    backward = four_point_block(PARAMS, (D4, D3, D2, D1), BETA, 3)
    assert forward.coefficients == backward.coefficients


def test_four_point_families_agree():
    window = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 2, family="window")
    triangular = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 2, family="triangular")
    assert window == triangular


def test_glue_checks_internal_weights():
    left = solve_three_point(PARAMS, (D1, D2, BETA), 1, support=(2,))
    right = solve_three_point(PARAMS, (D3, D3, D4), 1, support=(0,))
    with pytest.raises(BlockError):
        glue_four_point(PARAMS, left, right, BETA, 1)


def test_grid_keeps_input_order_for_any_thread_count():
    betas = [F(3, 2), F(7, 4), F(5, 2)]
    serial = glue_four_point_grid(PARAMS, (D1, D2, D3, D4), betas, 2, threads=1)
    parallel = glue_four_point_grid(PARAMS, (D1, D2, D3, D4), betas, 2, threads=3)
    assert serial == parallel
    assert [s.delta_beta for s in serial] == betas
    assert serial[1] == four_point_block(PARAMS, (D1, D2, D3, D4), betas[1], 2)


# -- torus one-point --------------------------------------------------------------------------

@pytest.mark.parametrize("dext", [F(1, 3), F(2), F(5, 6)])
def test_torus_first_coefficient(dext):
    series = torus_one_point_block(PARAMS, dext, BETA, 1)
    assert series.constant_term == 1
    assert series.coefficients[1] == 1 + dext * (dext - 1) / (2 * BETA)


def test_torus_diagnostic_is_the_character():
    series = torus_one_point_block(PARAMS, F(1, 3), BETA, 8, diagnostic=True)
    assert series == character(BETA, 8)


def test_torus_glue_checks_legs():
    block = solve_three_point(PARAMS, (BETA, D1, D2), 2, support=(0, 2))
    with pytest.raises(BlockError):
        glue_torus_one_point(PARAMS, block, BETA, 1)


# -- twists and wave functions ----------------------------------------------------------------

def test_twist_factor_has_unit_modulus():
    for z in (mpmath.mpc(0.3, 0.4), mpmath.mpc(-2, 0.1), mpmath.mpc(0, -5)):
        assert mpmath.almosteq(abs(twist_factor(F(7, 3), z, 0, 30)), 1)


def test_twist_factor_winding_adds_a_dehn_twist():
    z = mpmath.mpc(0.3, 0.4)
    with mpmath.workdps(55):
        ratio = twist_factor(F(7, 3), z, 1, 50) / twist_factor(F(7, 3), z, 0, 50)
        assert mpmath.almosteq(ratio, dehn_twist_phase(F(7, 3), 50), abs_eps=TIGHT)


def test_twist_factor_rejects_zero():
    with pytest.raises(BlockError):
        twist_factor(F(1), 0)


def test_half_twist_twice():
    series = BlockSeries(F(1, 2), (F(1), F(2), F(3), F(4)))
    once = half_dehn_twist(series)
    assert once.coefficients == (1, -2, 3, -4)
    with mpmath.workdps(55):
        assert mpmath.almosteq(phase(once, 50), mpmath.mpc(0, 1), abs_eps=TIGHT)
    twice = half_dehn_twist(once)
    assert twice.coefficients == series.coefficients
    assert twice.half_twists == 2
    with mpmath.workdps(55):
        assert mpmath.almosteq(phase(twice, 50), dehn_twist_phase(F(1, 2), 50), abs_eps=TIGHT)


def test_half_twist_negates_q():
    series = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 3)
    twisted = half_dehn_twist(series)
    for q in (F(1, 3), F(-2, 7)):
        assert twisted.evaluate_exact(q) == series.evaluate_exact(-q)


def test_wave_function_tends_to_constant_term():
    series = BlockSeries(F(3, 4), (F(5), F(7), F(-2)))
    with mpmath.workdps(40):
        value = wave_function_eval(series, mpmath.mpf(10) ** -20, 0, 40)
        assert abs(value - 5) < mpmath.mpf(10) ** -15


def test_wave_function_phase_and_winding():
    series = BlockSeries(F(1, 2), (F(1), F(1)))
    q = mpmath.mpc(0.01, 0.02)
    base = wave_function_eval(series, q, 0, 30)
    wound = wave_function_eval(series, q, 1, 30)
    assert mpmath.almosteq(wound, -base)
    twisted = wave_function_eval(half_dehn_twist(series), q, 0, 30)
    assert mpmath.almosteq(twisted, base * mpmath.mpc(0, 1) * half_dehn_twist(series).evaluate(q, 30) / series.evaluate(q, 30))
    with pytest.raises(BlockError):
        wave_function_eval(series, 0)


def test_wave_function_extrapolates_to_constant_term():
    series = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 3)
    with mpmath.workdps(60):
        qs = [mpmath.mpf(10) ** -k for k in range(1, 7)]
        values = [wave_function_eval(series, q, 0, 50).real for q in qs]
        # Lagrange extrapolation to q = 0
        limit = mpmath.mpf(0)
        for i, (qi, fi) in enumerate(zip(qs, values)):
            weight = mpmath.mpf(1)
            for j, qj in enumerate(qs):
                if j != i:
                    weight *= qj / (qj - qi)
            limit += fi * weight
        assert abs(limit - 1) < mpmath.mpf(10) ** -20


def random_weight(rng):
    return F(rng.randint(1, 40), rng.randint(1, 9))


def test_constant_term_law_on_random_weights():
    rng = random.Random(12)
    for _ in range(50):
        externals = [random_weight(rng) for _ in range(4)]
        beta = random_weight(rng) + 1
        n1, n2 = F(rng.randint(1, 9), rng.randint(1, 9)), F(rng.randint(-9, -1), rng.randint(1, 9))
        series = four_point_block(PARAMS, externals, beta, rng.randint(0, 2), normalizations=(n1, n2))
        assert series.constant_term == n1 * n2


def test_constant_term_law_at_order_six():
    series = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 6, normalizations=(F(2), F(5, 3)))
    assert series.constant_term == F(10, 3)
    assert series.order == 6


def test_first_coefficient_on_random_weights():
    rng = random.Random(13)
    for _ in range(50):
        params = LiouvilleParams(F(rng.randint(1, 4), rng.randint(1, 4)))
        d1, d2, d3, d4 = (random_weight(rng) for _ in range(4))
        beta = random_weight(rng) + 1
        # level one by hand: two relations per three-point block, then G_1 = 2 beta
        left = solve_three_point(params, (d1, d2, beta), 1, support=(2,))
        right = solve_three_point(params, (beta, d3, d4), 1, support=(0,))
        oracle = left.value(((), (), (1,))) * right.value(((1,), (), ())) / (2 * beta)
        assert oracle == (beta + d2 - d1) * (beta + d3 - d4) / (2 * beta)
        series = four_point_block(params, (d1, d2, d3, d4), beta, 1)
        assert series.coefficients[1] == oracle


def test_numeric_evaluation_matches_exact_at_small_q():
    series = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 4)
    q = F(1, 100)
    precision = 40
    with mpmath.workdps(precision + 5):
        exact = series.evaluate_exact(q)
        numeric = series.evaluate(mpmath.mpf(1) / 100, precision)
        expected = mpmath.mpf(exact.numerator) / exact.denominator
        assert abs(numeric - expected) < mpmath.mpf(10) ** -(precision - 5)


# -- pants decompositions ---------------------------------------------------------------

def tails(vertex, *numbers):
    return [Tail(vertex, n) for n in numbers]


S_CHANNEL = PantsDecomposition(StableGraph(["a", "b"], [("a", "b")], tails("a", 1, 2) + tails("b", 3, 4)))
TADPOLE = PantsDecomposition(StableGraph(["v"], [("v", "v")], tails("v", 1)))
COMB = PantsDecomposition(
    StableGraph(["a", "b", "c"], [("a", "b"), ("b", "c")], tails("a", 1, 2) + tails("b", 3) + tails("c", 4, 5))
)
EXTERNALS4 = {1: D1, 2: D2, 3: D3, 4: D4}


def test_pants_legs():
    graph = S_CHANNEL.graph
    assert pants_legs(graph, "a") == (Tail("a", 1), Tail("a", 2), OrientedEdge(0, -1))
    assert pants_legs(graph, "b") == (OrientedEdge(0, 1), Tail("b", 3), Tail("b", 4))
    assert pants_legs(TADPOLE.graph, "v") == (OrientedEdge(0, 1), Tail("v", 1), OrientedEdge(0, -1))


def test_pants_block_reduces_to_the_four_point_block():
    block = glue_pants(PARAMS, S_CHANNEL, {0: BETA}, EXTERNALS4, 3, normalizations={"a": F(2), "b": F(-3)})
    series = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 3, normalizations=(F(2), F(-3)))
    assert block.betas == (BETA,)
    assert [block.coefficient((n,)) for n in range(4)] == list(series.coefficients)


def test_pants_block_reduces_to_the_torus_block():
    block = glue_pants(PARAMS, TADPOLE, {0: BETA}, {1: F(1, 3)}, 3)
    series = torus_one_point_block(PARAMS, F(1, 3), BETA, 3)
    assert [block.coefficient((n,)) for n in range(4)] == list(series.coefficients)


def test_pants_constant_term_law_on_five_points():
    norms = {"a": F(2), "b": F(3, 5), "c": F(-7)}
    block = glue_pants(PARAMS, COMB, {0: BETA, 1: F(5, 2)}, {1: D1, 2: D2, 3: D3, 4: D4, 5: F(1, 2)}, 2, norms)
    assert block.constant_term == F(2) * F(3, 5) * F(-7)
    assert block.order == 2
    assert all(sum(m) <= 2 for m in block.series.terms())


def test_pants_edge_at_level_zero_leaves_a_four_point_block():
    beta1 = F(5, 2)
    block = glue_pants(PARAMS, COMB, {0: BETA, 1: beta1}, {1: D1, 2: D2, 3: D3, 4: D4, 5: F(1, 2)}, 2)
    series = four_point_block(PARAMS, (D1, D2, D3, beta1), BETA, 2)
    assert [block.coefficient((n, 0)) for n in range(3)] == list(series.coefficients)


def test_glue_pants_rejects_incomplete_weights():
    with pytest.raises(BlockError):
        glue_pants(PARAMS, S_CHANNEL, {}, EXTERNALS4, 1)
    with pytest.raises(BlockError):
        glue_pants(PARAMS, S_CHANNEL, {0: BETA}, {1: D1, 2: D2, 3: D3}, 1)
    with pytest.raises(BlockError):
        glue_pants(PARAMS, PantsDecomposition(StableGraph(["v"], [], tails("v", 1, 2, 3))), {}, {1: D1, 2: D2, 3: D3}, 1)


def test_pants_wave_function_matches_the_single_edge_one():
    block = glue_pants(PARAMS, S_CHANNEL, {0: BETA}, EXTERNALS4, 3)
    series = four_point_block(PARAMS, (D1, D2, D3, D4), BETA, 3)
    q = mpmath.mpc(0.01, 0.02)
    with mpmath.workdps(55):
        assert mpmath.almosteq(
            pants_wave_function_eval(block, [q], [1], 50), wave_function_eval(series, q, 1, 50), abs_eps=TIGHT
        )
        twisted = pants_half_dehn_twist(block, 0)
        assert mpmath.almosteq(
            pants_wave_function_eval(twisted, [q], None, 50),
            wave_function_eval(half_dehn_twist(series), q, 0, 50),
            abs_eps=TIGHT,
        )


def test_pants_half_twist_acts_on_one_edge():
    block = glue_pants(PARAMS, COMB, {0: F(1, 2), 1: F(5, 2)}, {1: D1, 2: D2, 3: D3, 4: D4, 5: F(1, 2)}, 2)
    twisted = pants_half_dehn_twist(block, 1)
    assert twisted.half_twists == (0, 1)
    for m, c in block.series.terms().items():
        assert twisted.coefficient(m) == (-c if m[1] % 2 else c)
    with mpmath.workdps(55):
        assert mpmath.almosteq(pants_phase(pants_half_dehn_twist(block, 0), 50), mpmath.mpc(0, 1), abs_eps=TIGHT)
    with pytest.raises(BlockError):
        pants_half_dehn_twist(block, 2)
    with pytest.raises(BlockError):
        pants_wave_function_eval(block, [mpmath.mpf("0.1")])
    with pytest.raises(BlockError):
        pants_wave_function_eval(block, [0, mpmath.mpf("0.1")])
