import random

import pytest

from wreathwalk.words import (
    ReducedWord,
    WordError,
    commutator,
    generator_word,
    parse_word,
    random_word,
    reduce_letters,
)


def test_cancellation():
    assert reduce_letters([(1, 1), (1, -1)], 2).letters == ()


def test_inner_cancellation():
    w = reduce_letters([(1, 1), (2, 1), (2, -1), (1, 1)], 2)
    assert w.letters == ((1, 1), (1, 1))


def test_reduce_idempotent():
    rng = random.Random(0)
    for _ in range(200):
        tokens = [(rng.randint(1, 3), rng.choice((1, -1))) for _ in range(rng.randint(0, 40))]
        once = reduce_letters(tokens, 3)
        again = reduce_letters(once.letters, 3)
        assert once == again


def test_index_out_of_range():
    with pytest.raises(WordError):
        reduce_letters([(3, 1)], 2)
    with pytest.raises(WordError):
        reduce_letters([(0, 1)], 2)


def test_multiply_inverse_random():
    rng = random.Random(1)
    for _ in range(1000):
        u = random_word(3, rng.randint(0, 64), rng)
        assert (u * u.inverse()).letters == ()


def test_multiply_length_subadditive():
    rng = random.Random(2)
    for _ in range(300):
        u = random_word(2, rng.randint(0, 30), rng)
        v = random_word(2, rng.randint(0, 30), rng)
        assert len(u * v) <= len(u) + len(v)


def test_rank_mismatch():
    with pytest.raises(WordError):
        generator_word(2, 1) * generator_word(3, 1)


def test_inverse_reverses_and_flips():
    w = parse_word("s1 s2", 2)
    assert w.inverse().letters == ((2, -1), (1, -1))


def test_commutator():
    u, v = generator_word(2, 1), generator_word(2, 2)
    assert commutator(u, v).letters == ((1, 1), (2, 1), (1, -1), (2, -1))
    assert commutator(u, u).letters == ()


def test_not_reduced_rejected():
    with pytest.raises(WordError):
        ReducedWord(2, ((1, 1), (1, -1)))
    with pytest.raises(WordError):
        ReducedWord(2, ((5, 1),))
    with pytest.raises(WordError):
        ReducedWord(2, ((1, 2),))


def test_parse_basic():
    assert parse_word("s1 s1^-1", 2).letters == ()
    assert parse_word("s2^3", 2).letters == ((2, 1),) * 3
    assert parse_word("s1^-2", 2).letters == ((1, -1),) * 2
    assert parse_word("", 2).letters == ()


def test_parse_commutator_sugar():
    assert parse_word("[s1,s2]", 2) == commutator(generator_word(2, 1), generator_word(2, 2))


def test_parse_conjugation():
    # w^u means u w u^-1
    w = parse_word("[s1,s2]^s1", 2)
    s1 = generator_word(2, 1)
    assert w == s1 * commutator(s1, generator_word(2, 2)) * s1.inverse()


def test_parse_nested():
    w = parse_word("[[s1,s2],[s1,s2]^s1]", 2)
    c = commutator(generator_word(2, 1), generator_word(2, 2))
    s1 = generator_word(2, 1)
    assert w == commutator(c, s1 * c * s1.inverse())


def test_parse_errors():
    with pytest.raises(WordError):
        parse_word("s1^0", 2)
    with pytest.raises(WordError):
        parse_word("s1 )", 2)
    with pytest.raises(WordError):
        parse_word("x1", 2)
    with pytest.raises(WordError):
        parse_word("[s1 s2", 2)


def test_str_roundtrip():
    rng = random.Random(3)
    for _ in range(100):
        w = random_word(3, rng.randint(0, 20), rng)
        assert parse_word(str(w), 3) == w
