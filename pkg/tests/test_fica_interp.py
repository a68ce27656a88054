"""Reduction rules, interleaving, may-termination."""

import pytest

from ficasata.config import max_value
from ficasata.fica_syntax import (
    COM, EXP, App, Assign, Cond, Deref, Div, Grab, Id, Lam, NewSem,
    NewVar, Num, Op, Par, Release, Seq, Skip, While, parse, substitute,
)
from ficasata.fica_interp import (
    BudgetExceededError, MachineState, may_terminate, step,
)

from tests.test_fica_syntax import EX_TERM


def states(term, store=()):
    return step(MachineState(store, term))


### single rules


def test_par_of_skips_steps_to_skip():
    assert states(Par(Skip(), Skip())) == {MachineState((), Skip())}


def test_grab_on_zero():
    st = MachineState((("v", 0),), Grab(Id("v")))
    assert step(st) == {MachineState((("v", 1),), Skip())}


def test_grab_on_nonzero_stuck():
    st = MachineState((("v", 1),), Grab(Id("v")))
    assert step(st) == set()


def test_release_on_nonzero_only():
    assert states(Release(Id("v")), (("v", 1),)) == {MachineState((("v", 0),), Skip())}
    assert states(Release(Id("v")), (("v", 0),)) == set()


def test_while_unfolds():
    w = While(Num(0), Skip())
    assert states(w) == {MachineState((), Cond(Num(0), Seq(Skip(), w), Skip()))}


def test_seq_skip_drops_for_any_continuation():
    # generalized rule: skip; M -> M even when M is not a constant
    t = Seq(Skip(), Deref(Id("v")))
    assert states(t, (("v", 1),)) == {MachineState((("v", 1),), Deref(Id("v")))}


def test_assign_and_deref():
    assert states(Assign(Id("v"), Num(1)), (("v", 0),)) == {MachineState((("v", 1),), Skip())}
    assert states(Deref(Id("v")), (("v", 1),)) == {MachineState((("v", 1),), Num(1))}


def test_op_reduces_numeral():
    assert states(Op("succ", Num(max_value()))) == {MachineState((), Num(0))}


def test_beta_at_runtime():
    t = App(Lam("z", COM, Seq(Id("z"), Id("z"))), Skip())
    assert states(t) == {MachineState((), Seq(Skip(), Skip()))}


def test_newvar_constant_body_drops():
    assert states(NewVar("x", 1, Skip())) == {MachineState((), Skip())}
    assert states(NewSem("s", 0, Num(1))) == {MachineState((), Num(1))}


def test_newvar_context_rule_rebinds_updated_value():
    t = NewVar("x", 0, Assign(Id("x"), Num(1)))
    assert states(t) == {MachineState((), NewVar("x", 1, Skip()))}


def test_par_interleaving_is_nondeterministic():
    t = NewVar("x", 0, Par(Assign(Id("x"), Num(1)), Cond(Deref(Id("x")), Skip(), Div(COM))))
    succs = states(t)
    assert len(succs) == 2  # either assign fires or the guard reads 0


### evaluation contexts: no descent into seq-second, cond branches, app args


def test_no_reduction_under_guarded_positions():
    # divergent guards freeze seq-second and cond branches; app args never step
    frozen = Seq(Div(COM), Par(Skip(), Skip()))
    assert states(frozen) == set()
    t = Cond(Div(EXP), Par(Skip(), Skip()), Skip())
    assert states(t) == set()
    t2 = App(Id("f"), Par(Skip(), Skip()))
    assert states(t2) == set()


def test_sequential_terms_have_at_most_one_successor():
    corpus = [
        parse("skip; skip; skip"),
        parse("newvar x := 0 in x := 1; if !x then skip else div"),
        parse("while 1 do skip"),
        parse("newsem s in grab(s); release(s)"),
    ]
    for t in corpus:
        frontier = [MachineState((), t)]
        for _ in range(40):
            nxt = []
            for st in frontier:
                succ = step(st)
                assert len(succ) <= 1
                nxt.extend(succ)
            frontier = nxt


def test_store_values_stay_in_range():
    t = parse("newvar x := 0 in (x := 1 || x := 0 || !x; skip)")
    seen = set()
    frontier = [MachineState((), t)]
    while frontier:
        st = frontier.pop()
        if st in seen:
            continue
        seen.add(st)
        for n, v in st.store:
            assert 0 <= v <= max_value()
        frontier.extend(step(st))
    assert len(seen) > 3


### may-termination


def test_skip_terminates():
    assert may_terminate(Skip()) is True


def test_div_diverges():
    assert may_terminate(Div(COM)) is False


def test_running_example_with_identity_f_terminates():
    t = substitute(substitute(EX_TERM, "f", Lam("z", COM, Id("z"))), "c", Skip())
    assert may_terminate(t) is True


def test_race_may_terminate():
    t = parse("newvar x := 0 in (x := 1 || if !x then skip else div)")
    assert may_terminate(t) is True


def test_deadlock_diverges():
    t = parse("newsem s in grab(s); grab(s)")
    assert may_terminate(t) is False


def test_semaphore_release_unblocks():
    t = parse("newsem s in grab(s); release(s); grab(s)")
    assert may_terminate(t) is True


def test_while_true_diverges():
    assert may_terminate(parse("while 1 do skip")) is False


def test_while_guarded_by_cell_terminates():
    t = parse("newvar x := 1 in while !x do x := 0")
    assert may_terminate(t) is True


def test_parallel_grab_race():
    # both branches want the semaphore; one always wins, nothing releases
    t = parse("newsem s in (grab(s) || grab(s))")
    assert may_terminate(t) is False


def test_budget_exceeded_raises():
    with pytest.raises(BudgetExceededError):
        may_terminate(parse("while 1 do skip"), budget=2)
