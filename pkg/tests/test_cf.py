import random
from fractions import Fraction

import pytest

from gaprenorm.cf import (
    CellBoundaryError,
    ExpansionExhaustedError,
    PartitionCell,
    cf_normalize,
    cf_value,
    classify_cell,
    classify_value,
    format_theta_spec,
    gap_derivative,
    gap_map,
    gap_map_value,
    gap_trajectory,
    gauss_map,
    parity_floor,
    parse_theta_spec,
    rational_to_cf,
    sample_theta,
)
from gaprenorm.exact import Surd, make_surd


# ---------------------------------------------------------------------------
# expansions and the theta grammar


def test_parse_grammar():
    assert cf_value(parse_theta_spec("rat:3/7")) == Fraction(3, 7)
    assert parse_theta_spec("cf:[2,3,4]").preperiod == (2, 3, 4)
    assert parse_theta_spec("cf:[2; 3, 4]").preperiod == (2, 3, 4)
    cf = parse_theta_spec("cfper:[1][2,3]")
    assert cf.preperiod == (1,) and cf.period == (2, 3)
    assert parse_theta_spec("cfper:[][2]").period == (2,)
    for bad in ("cf:[0,2]", "rat:7/3", "rat:0/5", "cf:[2.5]", "dec:0.3",
                "cf:[]", "rat:3/7 extra", "cfper:[2][]"):
        with pytest.raises(ValueError):
            parse_theta_spec(bad)


def test_format_round_trip():
    for spec in ("rat:3/7", "cf:[2,3,4]", "cfper:[1][2,3]", "cfper:[][2]"):
        cf = parse_theta_spec(spec)
        again = parse_theta_spec(format_theta_spec(cf))
        assert cf_value(again) == cf_value(cf)


def test_normalize_folds_trailing_one():
    assert format_theta_spec(cf_normalize([2, 3, 1])) == "cf:[2,4]"
    with pytest.raises(ValueError):
        cf_normalize([1])  # denotes 1, outside (0, 1)
    with pytest.raises(ValueError):
        cf_normalize([2, 0, 3])


def test_rational_round_trip():
    rng = random.Random(1)
    for _ in range(500):
        q = rng.randint(2, 10**6)
        p = rng.randint(1, q - 1)
        f = Fraction(p, q)
        cf = rational_to_cf(f)
        assert cf_value(cf) == f
        if len(cf.preperiod) > 1:
            assert cf.preperiod[-1] != 1  # canonical form


def test_quadratic_values():
    assert cf_value(parse_theta_spec("cfper:[][2]")) == make_surd(0, 1, 2) - 1
    assert cf_value(parse_theta_spec("cfper:[][1]")) == (make_surd(0, 1, 5) - 1) / 2
    assert cf_value(parse_theta_spec("cfper:[1][2]")) == make_surd(0, 1, 2) / 2


def test_gauss_map_shifts():
    cf = parse_theta_spec("cf:[2,3,4]")
    assert gauss_map(cf).preperiod == (3, 4)
    with pytest.raises(ExpansionExhaustedError):
        gauss_map(parse_theta_spec("cf:[5]"))


# ---------------------------------------------------------------------------
# the gap map


def test_branch_consistency_random():
    """The symbolic step and the arithmetic step agree on 1000 random points."""
    rng = random.Random(2)
    done = 0
    while done < 1000:
        q = rng.randint(100, 10**9)
        p = rng.randint(1, q - 1)
        cf = rational_to_cf(Fraction(p, q))
        try:
            image = gap_map(cf)
        except ExpansionExhaustedError:
            continue
        assert cf_value(image) == gap_map_value(cf_value(cf), cf)
        done += 1


def test_branch_consistency_surd():
    theta = parse_theta_spec("cfper:[2,1][3,2]")
    cf = theta
    value = cf_value(theta)
    for _ in range(40):
        nxt = gap_map(cf)
        value = gap_map_value(value, cf)
        assert cf_value(nxt) == value
        cf = nxt


def test_no_consecutive_half_steps():
    # a head of 1 maps to a head of a2 + 1 >= 2, so Half never repeats
    rng = random.Random(3)
    for _ in range(50):
        theta = sample_theta(rng, bits=128, min_quotients=40)
        traj = gap_trajectory(theta, 15)
        heads = [s.a1 for s in traj.steps]
        assert all(not (x == 1 and y == 1) for x, y in zip(heads, heads[1:]))


def test_parity_floor():
    assert [parity_floor(a) for a in (1, 2, 3, 4, 7)] == [0, 2, 2, 4, 6]
    with pytest.raises(ValueError):
        parity_floor(0)


def test_trajectory_bookkeeping():
    traj = gap_trajectory(parse_theta_spec("cfper:[][2]"), 10)
    assert len(traj.steps) == 11
    for step in traj.steps:
        assert step.a1 == 2 and step.e == 2
        assert step.delta == 1 - 2 * step.value
    prod = Fraction(1)
    want = traj.delta_product(4)
    for step in traj.steps[:4]:
        prod = prod * step.delta
    assert prod == want


def test_trajectory_exhaustion_reports_progress():
    cf = parse_theta_spec("rat:5/7")
    with pytest.raises(ExpansionExhaustedError) as err:
        gap_trajectory(cf, 30)
    assert err.value.steps_completed is not None
    assert 0 <= err.value.steps_completed < 30


def test_sample_theta_contract():
    rng = random.Random(4)
    for _ in range(20):
        cf = sample_theta(rng, bits=128, lower_half=True, min_quotients=30)
        assert cf.preperiod[0] >= 2
        assert len(cf.preperiod) >= 30


# ---------------------------------------------------------------------------
# the Markov partition


def test_cell_endpoints():
    assert PartitionCell("half").endpoints == (Fraction(1, 2), Fraction(1))
    assert PartitionCell("odd", k=1).endpoints == (Fraction(1, 4), Fraction(1, 3))
    assert PartitionCell("even", n=1, m=2).endpoints == (Fraction(2, 5), Fraction(3, 7))
    with pytest.raises(ValueError):
        PartitionCell("odd", k=0)
    with pytest.raises(ValueError):
        PartitionCell("weird")


def test_classify_partitions_interval():
    """Cells tile (0, 1): every non-boundary grid point lands in one cell."""
    denom = 10**4 + 7
    boundaries = 0
    for j in range(1, denom):
        x = Fraction(j, denom)
        try:
            cell = classify_value(x)
        except CellBoundaryError:
            boundaries += 1
            continue
        assert cell.contains(x)
    # 2nm + 1 = 10007 factors as (n, m) = (1, 5003) and (5003, 1), so exactly
    # the grid points 1/10007 and 5003/10007 are genuine cell endpoints
    assert boundaries == 2


def test_classify_boundaries_raise():
    for x in (Fraction(1, 2), Fraction(1, 3), Fraction(1, 4), Fraction(2, 5)):
        with pytest.raises(CellBoundaryError):
            classify_value(x)
    with pytest.raises(ValueError):
        classify_value(Fraction(3, 2))


def test_classify_cell_matches_value():
    rng = random.Random(5)
    done = 0
    while done < 300:
        q = rng.randint(10, 10**6)
        p = rng.randint(1, q - 1)
        cf = rational_to_cf(Fraction(p, q))
        try:
            by_cf = classify_cell(cf)
            by_val = classify_value(Fraction(p, q))
        except (CellBoundaryError, ExpansionExhaustedError):
            continue
        assert by_cf == by_val
        done += 1


def test_classify_surd():
    silver = cf_value(parse_theta_spec("cfper:[][2]"))
    cell = classify_value(silver)
    assert cell == PartitionCell("even", n=1, m=2)
    assert isinstance(silver, Surd)


def test_two_step_expansivity():
    """|(g o g)'| stays above 4: the only slope-1 branch is followed by
    a branch of slope above 4, and a steep branch is never followed by Half
    twice in a row."""
    denom = 1009
    for j in range(1, denom):
        x = Fraction(j, denom)
        try:
            c1 = classify_value(x)
            d1 = gap_derivative(x, c1)
            y = gap_map_value(x, rational_to_cf(x))
            c2 = classify_value(y)
            d2 = gap_derivative(y, c2)
        except (CellBoundaryError, ExpansionExhaustedError, ValueError):
            continue
        assert d1 * d2 > 4


def test_gap_derivative_values():
    assert gap_derivative(Fraction(3, 4), PartitionCell("half")) == 1
    # odd branch x / (1 - 2kx): slope (1 - 2kx)^-2
    x = Fraction(3, 10)
    assert gap_derivative(x, PartitionCell("odd", k=1)) == Fraction(25, 4)
    with pytest.raises(CellBoundaryError):
        gap_derivative(Fraction(3, 4), PartitionCell("odd", k=1))
