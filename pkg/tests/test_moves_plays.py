"""Alphabets, polarity, play legality, swap preorder, word decoding."""

import pytest

from ficasata.config import scoped_max
from ficasata.data_forest import Allocator
from ficasata.fica_syntax import COM, EXP, SEM, Arrow, parse_context, EMPTY_CONTEXT
from ficasata.moves_plays import (
    DecodeError, Letter, alphabet, answer_matches, check_play, decode,
    format_letter, is_complete, parse_letter, play_defects, polarity,
    swap_closure, swap_successors,
)

GAMMA = parse_context("f:com->com, c:com")

Q = Letter("q")
RUN_F = Letter("run", ("f",))
DONE_F = Letter("done", ("f",))
RUN_F1 = Letter("run", ("f", 1))
DONE_F1 = Letter("done", ("f", 1))
RUN_C = Letter("run", ("c",))
DONE_C = Letter("done", ("c",))
ONE = Letter("1")

# the worked plays: s1 a prefix, s2 complete, s3 a swap-image of s2
S1 = ((Q, None), (RUN_F, 0), (DONE_F, 1))
S2 = ((Q, None), (RUN_F, 0), (RUN_F1, 1), (DONE_F1, 2), (RUN_C, 0), (DONE_C, 4), (DONE_F, 1), (ONE, 0))
S3 = ((Q, None), (RUN_F, 0), (RUN_F1, 1), (RUN_C, 0), (DONE_C, 3), (DONE_F1, 2), (DONE_F, 1), (ONE, 0))


### polarity


def test_polarity_flips_once_per_path_element():
    assert polarity(Letter("run")) == "OQ"
    assert polarity(Letter("done")) == "PA"
    assert polarity(RUN_F) == "PQ"
    assert polarity(DONE_F) == "OA"
    assert polarity(RUN_F1) == "OQ"
    assert polarity(DONE_F1) == "PA"
    assert polarity(Q) == "OQ"
    assert polarity(ONE) == "PA"
    assert polarity(Letter("write(1)")) == "OQ"
    assert polarity(Letter("ok", ("s",), 0, "grab")) == "OA"


def test_answer_matching():
    assert answer_matches(Letter("run"), Letter("done"))
    assert answer_matches(Letter("q"), Letter("1"))
    assert answer_matches(Letter("read", ("x",)), Letter("0", ("x",)))
    assert answer_matches(Letter("write(1)", ("x",)), Letter("ok", ("x",)))
    assert answer_matches(Letter("grab", ("s",)), Letter("ok", ("s",), 0, "grab"))
    assert not answer_matches(Letter("grab", ("s",)), Letter("ok", ("s",), 0, "release"))
    assert not answer_matches(Letter("run"), Letter("1"))


### alphabets


def test_alphabet_empty_com():
    assert alphabet(EMPTY_CONTEXT, COM, 0) == {Letter("run"), Letter("done")}


def test_alphabet_example_context():
    letters = alphabet(GAMMA, EXP, 0)
    expected_members = {
        RUN_F1, DONE_F1, RUN_F, DONE_F, RUN_C, DONE_C, Q, Letter("0"), Letter("1"),
    }
    assert expected_members <= letters
    assert letters == expected_members  # nothing else at rho 0, max 1


def test_alphabet_sem_has_two_ok_tags():
    letters = alphabet(EMPTY_CONTEXT, SEM, 0)
    assert letters == {
        Letter("grab"), Letter("release"),
        Letter("ok", (), 0, "grab"), Letter("ok", (), 0, "release"),
    }


def test_alphabet_rho_bound_scales_count():
    base = alphabet(GAMMA, EXP, 0)
    assert len(alphabet(GAMMA, EXP, 2)) == 3 * len(base)


def test_alphabet_nested_arrow_paths():
    # ((com -> com) -> com) argument moves sit two path steps deep
    ty = Arrow(Arrow(COM, COM), COM)
    letters = alphabet(EMPTY_CONTEXT, ty, 0)
    assert Letter("run", (1, 1)) in letters
    assert Letter("run", (1,)) in letters
    assert Letter("run") in letters


### letter text


def test_letter_text_roundtrip():
    samples = [
        Letter("run"),
        Letter("done", ("f",)),
        Letter("run", ("f", 1)),
        Letter("run", ("c",), 2),
        Letter("ok", ("s",), 0, "grab"),
        Letter("write(1)", ("x",)),
        Letter("5", (), 0),
        Letter("q", (), 3),
    ]
    for l in samples:
        assert parse_letter(format_letter(l)) == l


def test_letter_text_examples():
    assert format_letter(Letter("run", ("f", 1))) == "run^{f.1}"
    assert parse_letter("run^{f.1,0}") == Letter("run", ("f", 1))
    assert format_letter(Letter("run", ("c",), 2)) == "run^{c,2}"
    assert format_letter(Letter("ok", (), 0, "release")) == "ok[release]"
    assert parse_letter("run") == Letter("run")


### plays


def test_s1_s2_s3_are_plays():
    assert check_play(S1)
    assert check_play(S2)
    assert check_play(S3)


def test_completeness():
    assert not is_complete(S1)  # q never answered
    assert is_complete(S2)
    assert is_complete(())  # vacuously


def test_wrong_enabling_rejected():
    bad = ((Q, None), (RUN_F, 0), (DONE_F, 0))  # done^f cannot answer q
    assert not check_play(bad)
    assert any("answer enabling" in d for d in play_defects(bad))


def test_fork_rejected_on_answered_justifier():
    bad = ((Q, None), (RUN_F, 0), (DONE_F, 1), (RUN_F1, 1))
    assert any("FORK" in d for d in play_defects(bad))


def test_wait_rejected_on_open_subquestion():
    bad = ((Q, None), (RUN_F, 0), (RUN_F1, 1), (DONE_F, 1))
    assert any("WAIT" in d for d in play_defects(bad))


def test_first_move_must_be_o_question():
    assert not check_play(((RUN_F, None),))  # P-question cannot open
    assert not check_play(((Q, 0),))


### the swap preorder


def test_s2_reaches_s3_but_not_back():
    down = swap_closure(S2)
    assert S3 in down
    assert S2 not in swap_closure(S3)


def test_single_swap_moves_p_right():
    # done^{f1} (P) steps right past run^c (O): still one of s2's successors
    mid = ((Q, None), (RUN_F, 0), (RUN_F1, 1), (RUN_C, 0), (DONE_F1, 2), (DONE_C, 3), (DONE_F, 1), (ONE, 0))
    assert mid in swap_successors(S2)


def test_parallel_schedule_covers_sequential():
    run, done = Letter("run"), Letter("done")
    run1, done1 = Letter("run", (1,)), Letter("done", (1,))
    run2, done2 = Letter("run", (2,)), Letter("done", (2,))
    s4 = ((run, None), (run1, 0), (run2, 0), (done1, 1), (done2, 2), (done, 0))
    s5 = ((run, None), (run1, 0), (done1, 1), (run2, 0), (done2, 3), (done, 0))
    assert check_play(s4) and check_play(s5)
    assert s5 in swap_closure(s4)
    assert s4 not in swap_closure(s5)


def test_swaps_preserve_legality_and_letters():
    for p in swap_closure(S2):
        assert check_play(p)
        assert sorted(format_letter(l) for l, _ in p) == sorted(format_letter(l) for l, _ in S2)


### decoding


def _example_word():
    al = Allocator()
    d0 = al.fresh_root()
    d1 = al.fresh_child(d0)
    d2 = al.fresh_child(d1)
    d1p = al.fresh_child(d0)
    return (
        (Q, d0), (RUN_F, d1), (RUN_F1, d2), (DONE_F1, d2),
        (RUN_C, d1p), (DONE_C, d1p), (DONE_F, d1), (ONE, d0),
    )


def test_decode_worked_example_word():
    assert decode(_example_word()) == S2


def test_decode_skip_word():
    al = Allocator()
    d0 = al.fresh_root()
    w = ((Letter("run"), d0), (Letter("done"), d0))
    assert decode(w) == ((Letter("run"), None), (Letter("done"), 0))


def test_decode_rho_reaches_over_levels():
    al = Allocator()
    d0 = al.fresh_root()
    d1 = al.fresh_child(d0)
    d2 = al.fresh_child(d1)
    d3 = al.fresh_child(d2)
    w = ((Q, d0), (RUN_F, d1), (RUN_F1, d2), (Letter("run", ("c",), 2), d3))
    play = decode(w)
    assert play[3] == (RUN_C, 0)  # rho stripped, pointer to the initial q
    assert check_play(play)


def test_decode_errors():
    al = Allocator()
    d0 = al.fresh_root()
    d1 = al.fresh_child(d0)
    with pytest.raises(DecodeError):
        decode(((Q, d0), (Letter("q"), d0)))  # question datum reused
    with pytest.raises(DecodeError):
        decode(((Q, d0), (ONE, d1)))  # answer on fresh datum
    with pytest.raises(DecodeError):
        decode(((Q, d0), (Letter("run", ("c",), 5), d1)))  # rho overruns the chain
    with pytest.raises(DecodeError):
        decode(((Q, d0), (ONE, d0), (ONE, d0)))  # third occurrence
