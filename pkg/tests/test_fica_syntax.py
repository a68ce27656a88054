"""Grammar, typing rules, normal forms, term size."""

import pytest
from hypothesis import given, settings, strategies as st

from ficasata.config import max_value, scoped_max
from ficasata.fica_syntax import (
    COM, EXP, VAR, SEM, Arrow, Context, EMPTY_CONTEXT,
    App, Assign, Cond, Deref, Div, Grab, Id, Lam, NewSem, NewVar, Num, Op,
    Par, Release, Seq, Skip, While,
    FicaSyntaxError, FicaTypeError,
    normalize, parse, parse_context, parse_type, print_term, print_type,
    term_size, typecheck, apply_op,
)

GAMMA = parse_context("f:com->com, c:com")

# the running example: newvar x in (f(x:=1) || if !x then c else div); !x
EX_SRC = "newvar x := 0 in (f(x := 1) || if !x then c else div); !x"
EX_TERM = NewVar(
    "x", 0,
    Seq(
        Par(
            App(Id("f"), Assign(Id("x"), Num(1))),
            Cond(Deref(Id("x")), Id("c"), Div(COM)),
        ),
        Deref(Id("x")),
    ),
)


### parsing


def test_parse_seq_of_skips():
    assert parse("skip ; skip") == Seq(Skip(), Skip())


def test_parse_running_example():
    assert parse(EX_SRC) == EX_TERM


def test_parse_cond_of_numerals():
    with scoped_max(3):
        assert parse("if 1 then 2 else 3") == Cond(Num(1), Num(2), Num(3))


def test_parse_precedence_par_looser_than_seq():
    t = parse("skip; c || c; skip")
    assert t == Par(Seq(Skip(), Id("c")), Seq(Id("c"), Skip()))


def test_parse_prefix_swallows_right():
    t = parse("while !x do x := 0; c")
    assert t == While(Deref(Id("x")), Seq(Assign(Id("x"), Num(0)), Id("c")))


def test_parse_fun_and_application():
    t = parse("(fun z : com -> z; z) skip")
    assert t == App(Lam("z", COM, Seq(Id("z"), Id("z"))), Skip())


def test_parse_grab_release_op():
    assert parse("grab(s); release(s)") == Seq(Grab(Id("s")), Release(Id("s")))
    assert parse("succ(!x)") == Op("succ", Deref(Id("x")))


def test_parse_div_annotation():
    assert parse("div") == Div(COM)
    assert parse("div : exp") == Div(EXP)
    assert parse("f (div : com)") == App(Id("f"), Div(COM))


def test_parse_newsem_default_init():
    assert parse("newsem s in grab(s)") == NewSem("s", 0, Grab(Id("s")))


def test_parse_numeral_above_max_rejected():
    with pytest.raises(FicaSyntaxError):
        parse("2")  # default max is 1


def test_parse_error_carries_position():
    with pytest.raises(FicaSyntaxError) as e:
        parse("skip ;; skip")
    assert e.value.line == 1 and e.value.col == 7


def test_parse_types():
    assert parse_type("com -> com") == Arrow(COM, COM)
    assert parse_type("(com -> com) -> exp") == Arrow(Arrow(COM, COM), EXP)
    # arrows associate right
    assert parse_type("com -> com -> com") == Arrow(COM, Arrow(COM, COM))


def test_parse_context_roundtrip():
    ctx = parse_context("f:com->com, c:com")
    assert ctx.lookup("f") == Arrow(COM, COM)
    assert ctx.lookup("c") == COM
    assert ctx.names() == ["f", "c"]


### typing


def test_typecheck_running_example_is_exp():
    assert typecheck(GAMMA, EX_TERM) == EXP


def test_typecheck_skip():
    assert typecheck(EMPTY_CONTEXT, Skip()) == COM


def test_typecheck_assign_to_non_var_rejected():
    with scoped_max(3):
        with pytest.raises(FicaTypeError) as e:
            typecheck(EMPTY_CONTEXT, Assign(Num(1), Num(2)))
    assert e.value.rule == "assign"


def test_typecheck_structural_rules():
    assert typecheck(EMPTY_CONTEXT, Par(Skip(), Skip())) == COM
    assert typecheck(EMPTY_CONTEXT, Seq(Skip(), Num(1))) == EXP
    assert typecheck(EMPTY_CONTEXT, While(Num(1), Skip())) == COM
    assert typecheck(EMPTY_CONTEXT, NewSem("s", 1, Grab(Id("s")))) == COM
    assert typecheck(GAMMA, App(Id("f"), Skip())) == COM
    assert typecheck(EMPTY_CONTEXT, Div(Arrow(COM, COM))) == Arrow(COM, COM)


def test_typecheck_seq_at_var_rejected():
    t = Seq(Skip(), NewVar("x", 0, Deref(Id("x"))))
    assert typecheck(EMPTY_CONTEXT, t) == EXP
    bad = Seq(Skip(), Div(VAR))
    with pytest.raises(FicaTypeError):
        typecheck(EMPTY_CONTEXT, bad)


def test_typecheck_unbound_identifier():
    with pytest.raises(FicaTypeError) as e:
        typecheck(EMPTY_CONTEXT, Id("nope"))
    assert e.value.rule == "id"


### operators


def test_ops_wrap_around():
    assert apply_op("succ", max_value()) == 0
    assert apply_op("pred", 0) == max_value()
    assert apply_op("succ", 0) == 1


### normalization


def test_normalize_beta_redex():
    t = App(Lam("x", COM, Id("x")), Skip())
    assert normalize(EMPTY_CONTEXT, t) == Skip()


def test_normalize_eta_expands_bare_identifier():
    n = normalize(GAMMA, Id("f"))
    assert n == Lam("z", COM, App(Id("f"), Id("z")))


def test_normalize_running_example_is_fixpoint():
    assert normalize(GAMMA, EX_TERM) == EX_TERM


def test_normalize_idempotent_and_type_preserving():
    corpus = [
        (GAMMA, EX_TERM),
        (GAMMA, Id("f")),
        (GAMMA, App(Lam("g", Arrow(COM, COM), App(Id("g"), Skip())), Id("f"))),
        (EMPTY_CONTEXT, Div(Arrow(COM, COM))),
        (EMPTY_CONTEXT, Lam("h", Arrow(COM, COM), Id("h"))),
        (EMPTY_CONTEXT, NewSem("s", 0, Par(Grab(Id("s")), Grab(Id("s"))))),
    ]
    for ctx, t in corpus:
        ty = typecheck(ctx, t)
        n = normalize(ctx, t)
        assert typecheck(ctx, n) == ty
        assert normalize(ctx, n) == n


def test_normalize_divergent_head_absorbs_arguments():
    t = App(Div(Arrow(COM, COM)), Skip())
    assert normalize(EMPTY_CONTEXT, t) == Div(COM)


def test_normalize_avoids_capture():
    # (fun x: com -> fun y: com -> x; y) y  with y free
    t = App(
        Lam("x", COM, Lam("y", COM, Seq(Id("x"), Id("y")))),
        Id("y"),
    )
    ctx = EMPTY_CONTEXT.append("y", COM)
    n = normalize(ctx, t)
    assert isinstance(n, Lam)
    assert n.binder != "y"
    assert n.body == Seq(Id("y"), Id(n.binder))


### term size


def test_term_size_basics():
    assert term_size(Skip()) == 1
    assert term_size(Seq(Skip(), Skip())) == 3


def test_term_size_running_example_frozen():
    # regression constant, counted by hand once
    assert term_size(EX_TERM) == 15


### printer roundtrip

NAMES = st.sampled_from(["x", "y", "f", "g", "c"])
TYPES = st.recursive(
    st.sampled_from([COM, EXP, VAR, SEM]),
    lambda t: st.builds(Arrow, t, t),
    max_leaves=4,
)


def _terms():
    leaf = st.one_of(
        st.builds(Skip),
        st.builds(Num, st.integers(0, max_value())),
        st.builds(Id, NAMES),
        st.builds(Div, TYPES),
    )
    return st.recursive(
        leaf,
        lambda sub: st.one_of(
            st.builds(Op, st.sampled_from(["succ", "pred"]), sub),
            st.builds(Seq, sub, sub),
            st.builds(Par, sub, sub),
            st.builds(Cond, sub, sub, sub),
            st.builds(While, sub, sub),
            st.builds(Lam, NAMES, TYPES, sub),
            st.builds(App, sub, sub),
            st.builds(Assign, sub, sub),
            st.builds(Deref, sub),
            st.builds(NewVar, NAMES, st.integers(0, max_value()), sub),
            st.builds(NewSem, NAMES, st.integers(0, max_value()), sub),
            st.builds(Grab, sub),
            st.builds(Release, sub),
        ),
        max_leaves=12,
    )


@given(_terms())
@settings(max_examples=300)
def test_parse_print_roundtrip(t):
    assert parse(print_term(t)) == t


@given(TYPES)
def test_type_print_roundtrip(ty):
    assert parse_type(print_type(ty)) == ty
