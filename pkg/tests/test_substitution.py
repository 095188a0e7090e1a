import math
import random

import pytest

from gaprenorm.cf import parse_theta_spec, sample_theta
from gaprenorm.substitution import (
    A,
    B,
    C,
    LETTERS,
    ReturnMatrix,
    SpreadBoundError,
    SubstitutionRule,
    WordBudgetError,
    WordStats,
    build_rule,
    check_length_growth,
    compose_stats,
    expand_word,
    lengths_by_level,
    level_report,
    lyapunov_estimate,
    matrices_along,
    matrix_product,
    matrix_product_lengths,
    renorm_identity,
    return_matrix,
    rules_along,
    stats_by_level,
)


def random_word(rng, max_len=60) -> str:
    return "".join(rng.choice(LETTERS) for _ in range(rng.randint(0, max_len)))


# ---------------------------------------------------------------------------
# the stats monoid


def test_stats_hand_values():
    s = WordStats.of_word("AACAC")
    assert (s.length, s.total, s.max_prefix, s.min_prefix) == (5, 1, 2, 1)
    assert s.rho == 2
    t = WordStats.of_word("CCA")
    assert (t.total, t.max_prefix, t.min_prefix) == (-1, -1, -2)
    assert t.rho == 2
    assert WordStats.empty().length == 0
    with pytest.raises(ValueError):
        WordStats.empty().rho


def test_concat_is_the_word_homomorphism():
    rng = random.Random(20)
    for _ in range(1000):
        u, v = random_word(rng), random_word(rng)
        assert WordStats.of_word(u + v) == WordStats.of_word(u) + WordStats.of_word(v)


def test_repeat_matches_brute_force():
    rng = random.Random(21)
    for _ in range(200):
        w = random_word(rng, 12)
        k = rng.randint(0, 9)
        assert WordStats.of_word(w).repeat(k) == WordStats.of_word(w * k)


def test_rho_subadditive_and_factor_monotone():
    rng = random.Random(22)
    for _ in range(2000):
        u, v = random_word(rng), random_word(rng)
        if not u or not v:
            continue
        su, sv = WordStats.of_word(u), WordStats.of_word(v)
        assert (su + sv).rho <= su.rho + sv.rho
        w = u + v
        i = rng.randrange(len(w))
        j = rng.randint(i + 1, len(w))
        assert WordStats.of_word(w[i:j]).rho <= WordStats.of_word(w).rho


# ---------------------------------------------------------------------------
# the rules


def test_rule_images_small_cases():
    odd = SubstitutionRule("odd", k=1)
    assert {L: odd.image_word(L) for L in LETTERS} == {A: "ABC", B: "AAC", C: "A"}
    even = SubstitutionRule("even", k=1, a2=1)
    assert {L: even.image_word(L) for L in LETTERS} == {A: "AAC", B: "ABC", C: "ABCAC"}
    even1 = SubstitutionRule("even", k=1, a2=1, next_one=True)
    assert {L: even1.image_word(L) for L in LETTERS} == {
        A: "ABCAC", B: "AACAC", C: "AAC"
    }
    ident = SubstitutionRule("identity")
    assert all(ident.image_word(L) == L for L in LETTERS)
    with pytest.raises(ValueError):
        SubstitutionRule("odd", k=0)
    with pytest.raises(ValueError):
        SubstitutionRule("even", k=1, a2=0)


def test_image_stats_match_words():
    rules = [SubstitutionRule("identity"), ]
    rules += [SubstitutionRule("odd", k=k) for k in range(1, 6)]
    rules += [
        SubstitutionRule("even", k=k, a2=a2, next_one=flag)
        for k in range(1, 6)
        for a2 in range(1, 6)
        for flag in (False, True)
    ]
    for rule in rules:
        for L in LETTERS:
            word = rule.image_word(L)
            assert rule.image_stats(L) == WordStats.of_word(word)
            assert rule.image_length(L) == len(word)


def test_a_and_b_images_share_length():
    for k in range(1, 8):
        rule = SubstitutionRule("odd", k=k)
        assert rule.image_length(A) == rule.image_length(B)
        for a2 in range(1, 8):
            for flag in (False, True):
                rule = SubstitutionRule("even", k=k, a2=a2, next_one=flag)
                assert rule.image_length(A) == rule.image_length(B)


def test_build_rule_reads_the_expansion():
    assert build_rule(parse_theta_spec("cf:[1,5,2]")).kind == "identity"
    r = build_rule(parse_theta_spec("cf:[5,2,3]"))
    assert r.kind == "odd" and r.k == 2
    r = build_rule(parse_theta_spec("cf:[4,3,1,2]"))
    assert r.kind == "even" and (r.k, r.a2, r.next_one) == (2, 3, True)
    r = build_rule(parse_theta_spec("cfper:[][2]"))
    assert (r.kind, r.k, r.a2, r.next_one) == ("even", 1, 2, False)


def test_compose_matches_expansion():
    rng = random.Random(23)
    checked = 0
    while checked < 20:
        theta = sample_theta(rng, bits=128, min_quotients=30)
        rules = rules_along(theta, 6)
        try:
            word = expand_word(rules, A, max_len=1_000_000)
        except WordBudgetError:  # a level with huge quotients; skip it
            continue
        assert compose_stats(rules, A) == WordStats.of_word(word)
        checked += 1


def test_expand_word_budget():
    rules = rules_along(parse_theta_spec("cfper:[][2]"), 20)
    with pytest.raises(WordBudgetError):
        expand_word(rules, A, max_len=100)


# ---------------------------------------------------------------------------
# the length cocycle


def test_matrices_track_lengths():
    rng = random.Random(24)
    for _ in range(20):
        theta = sample_theta(rng, bits=192, min_quotients=50)
        rules = rules_along(theta, 12)
        lens = lengths_by_level(rules)
        stats = stats_by_level(rules)
        for n in range(13):
            assert stats[n][A].length == lens[n][0]
            assert stats[n][C].length == lens[n][1]
        assert matrix_product_lengths(theta, 12) == lens[12]


def test_matrix_algebra():
    m = return_matrix(SubstitutionRule("odd", k=1))
    assert m.rows() == ((2, 1), (1, 0))
    assert m.det == -1
    e = return_matrix(SubstitutionRule("even", k=1, a2=2))
    assert e.rows() == ((3, 2), (4, 3)) and e.det == 1
    assert (m @ ReturnMatrix.identity()).rows() == m.rows()
    assert m.apply((1, 1)) == (3, 1)
    theta = parse_theta_spec("cfper:[][2]")
    prod = matrix_product(theta, 5)
    assert prod.apply((1, 1)) == matrix_product_lengths(theta, 5)
    assert abs(prod.det) == 1
    steps = matrices_along(theta, 5)
    acc = ReturnMatrix.identity()
    for step in steps:
        acc = step @ acc
    assert acc.rows() == prod.rows()


def test_growth_and_lyapunov_silver():
    theta = parse_theta_spec("cfper:[][2]")
    rep = check_length_growth(theta, 30)
    assert rep.all_steps_ok and rep.rate_in_band
    # each silver level eats two quotients, so lengths grow like (3 + 2 sqrt 2)^n
    assert math.isclose(lyapunov_estimate(theta, 40), math.log(3 + 2 * math.sqrt(2)),
                        rel_tol=0.05)


def test_renorm_identity_silver():
    theta = parse_theta_spec("cfper:[][2]")
    for n in range(2, 26):
        ident = renorm_identity(theta, n)
        assert ident.halfsum == n  # every level contributes e = 2
        assert ident.rho == ident.halfsum + ident.xi
        assert abs(ident.xi) <= 5


def test_renorm_identity_random():
    rng = random.Random(25)
    for _ in range(10):
        theta = sample_theta(rng, bits=192, min_quotients=50)
        ident = renorm_identity(theta, 20)
        assert abs(ident.xi) <= 5


def test_level_report_keys():
    rep = level_report(parse_theta_spec("cfper:[][2]"), 8)
    for key in ("theta_spec", "n", "lenA", "lenC", "rho", "halfsum", "xi",
                "lyap_estimate"):
        assert key in rep
    assert rep["n"] == 8 and rep["rho"] == rep["halfsum"] + rep["xi"]


def test_spread_bound_error_is_reachable_only_by_flag():
    # check=False must never raise even where the identity is checked
    theta = parse_theta_spec("cfper:[][2]")
    ident = renorm_identity(theta, 10, check=False)
    assert isinstance(ident.xi, int)
    assert SpreadBoundError.__mro__[1] is ValueError
