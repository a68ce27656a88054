"""Small-step operational semantics and the may-termination oracle.

States pair a store (active cells with values in {0..max}) with a term.
Reduction descends only through evaluation contexts:

    E ::= [-] | E;N | E||N | M||E | E N | op(E) | if E then N1 else N2
        | !E | E := M | M := E | grab(E) | release(E)

Root rules: skip||skip -> skip; skip;M -> M; op on a numeral; branching on a
numeral; beta; !v; v := i; grab on 0; release on nonzero; while-unfold;
newvar/newsem dropping a constant body; and the in-context cell rule that
substitutes a fresh cell for the binder, steps underneath, and rebinds with
the updated value.

The paper figure states skip;c -> c for constants c only, which would make
skip;!v stuck; we step skip;M -> M for every M.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import max_value
from .fica_syntax import (
    App, Assign, Cond, Deref, Div, Grab, Id, Lam, NewSem, NewVar, Num, Op,
    Par, Release, Seq, Skip, Term, While,
    apply_op, free_identifiers, fresh_name, print_type, substitute,
)

Store = tuple[tuple[str, int], ...]  # sorted by cell name


def store_get(store: Store, name: str) -> int | None:
    for n, v in store:
        if n == name:
            return v
    return None


def store_set(store: Store, name: str, value: int) -> Store:
    assert 0 <= value <= max_value()
    rest = tuple((n, v) for n, v in store if n != name)
    return tuple(sorted(rest + ((name, value),)))


def store_del(store: Store, name: str) -> Store:
    return tuple((n, v) for n, v in store if n != name)


@dataclass(frozen=True)
class MachineState:
    store: Store
    term: Term


class BudgetExceededError(Exception):
    """Search hit the canonical-state budget before settling the question."""


def _is_constant(t: Term) -> bool:
    return isinstance(t, (Skip, Num))


def _succ(store: Store, term: Term) -> list[tuple[Store, Term]]:
    out: list[tuple[Store, Term]] = []

    # root rules
    if isinstance(term, Par) and term.left == Skip() and term.right == Skip():
        out.append((store, Skip()))
    if isinstance(term, Seq) and term.first == Skip():
        out.append((store, term.second))
    if isinstance(term, Op) and isinstance(term.arg, Num):
        out.append((store, Num(apply_op(term.opName, term.arg.i))))
    if isinstance(term, Cond) and isinstance(term.guard, Num):
        out.append((store, term.thenBranch if term.guard.i != 0 else term.elseBranch))
    if isinstance(term, While):
        out.append((store, Cond(term.guard, Seq(term.body, term), Skip())))
    if isinstance(term, App) and isinstance(term.fun, Lam):
        out.append((store, substitute(term.fun.body, term.fun.binder, term.arg)))
    if isinstance(term, Deref) and isinstance(term.arg, Id):
        v = store_get(store, term.arg.name)
        if v is not None:
            out.append((store, Num(v)))
    if isinstance(term, Assign) and isinstance(term.target, Id) and isinstance(term.value, Num):
        if store_get(store, term.target.name) is not None:
            out.append((store_set(store, term.target.name, term.value.i), Skip()))
    if isinstance(term, Grab) and isinstance(term.arg, Id):
        v = store_get(store, term.arg.name)
        if v == 0:
            out.append((store_set(store, term.arg.name, 1), Skip()))
    if isinstance(term, Release) and isinstance(term.arg, Id):
        v = store_get(store, term.arg.name)
        if v is not None and v != 0:
            out.append((store_set(store, term.arg.name, 0), Skip()))
    if isinstance(term, (NewVar, NewSem)):
        if _is_constant(term.body):
            out.append((store, term.body))
        else:
            used = {n for n, _ in store} | (free_identifiers(term.body) - {term.binder})
            cell = fresh_name(term.binder, used)
            inner = substitute(term.body, term.binder, Id(cell))
            for s2, t2 in _succ(store_set(store, cell, term.init), inner):
                v2 = store_get(s2, cell)
                assert v2 is not None
                cls = NewVar if isinstance(term, NewVar) else NewSem
                out.append((store_del(s2, cell), cls(cell, v2, t2)))

    # context rules
    if isinstance(term, Seq):
        for s2, t2 in _succ(store, term.first):
            out.append((s2, Seq(t2, term.second)))
    if isinstance(term, Par):
        for s2, t2 in _succ(store, term.left):
            out.append((s2, Par(t2, term.right)))
        for s2, t2 in _succ(store, term.right):
            out.append((s2, Par(term.left, t2)))
    if isinstance(term, App):
        for s2, t2 in _succ(store, term.fun):
            out.append((s2, App(t2, term.arg)))
    if isinstance(term, Op):
        for s2, t2 in _succ(store, term.arg):
            out.append((s2, Op(term.opName, t2)))
    if isinstance(term, Cond):
        for s2, t2 in _succ(store, term.guard):
            out.append((s2, Cond(t2, term.thenBranch, term.elseBranch)))
    if isinstance(term, Deref):
        for s2, t2 in _succ(store, term.arg):
            out.append((s2, Deref(t2)))
    if isinstance(term, Assign):
        for s2, t2 in _succ(store, term.target):
            out.append((s2, Assign(t2, term.value)))
        for s2, t2 in _succ(store, term.value):
            out.append((s2, Assign(term.target, t2)))
    if isinstance(term, Grab):
        for s2, t2 in _succ(store, term.arg):
            out.append((s2, Grab(t2)))
    if isinstance(term, Release):
        for s2, t2 in _succ(store, term.arg):
            out.append((s2, Release(t2)))

    return out


def step(state: MachineState) -> set[MachineState]:
    """All one-step successors under every evaluation-context decomposition."""
    return {MachineState(s, t) for s, t in _succ(state.store, state.term)}


# ----------------------------------------------------------------------
# canonical keys: identify states up to renaming of binders/cells
# ----------------------------------------------------------------------


def canonical_key(state: MachineState):
    env: dict[str, int] = {}
    counter = [0]

    def walk(t: Term):
        if isinstance(t, Skip):
            return ("skip",)
        if isinstance(t, Div):
            return ("div", print_type(t.annotation))
        if isinstance(t, Num):
            return ("num", t.i)
        if isinstance(t, Id):
            if t.name in env:
                return ("bv", env[t.name])
            return ("free", t.name)
        if isinstance(t, (Lam, NewVar, NewSem)):
            saved = env.get(t.binder)
            env[t.binder] = counter[0]
            counter[0] += 1
            body = walk(t.body)
            if saved is None:
                del env[t.binder]
            else:
                env[t.binder] = saved
            if isinstance(t, Lam):
                return ("lam", print_type(t.binderType), body)
            tag = "newvar" if isinstance(t, NewVar) else "newsem"
            return (tag, t.init, body)
        if isinstance(t, Op):
            return ("op", t.opName, walk(t.arg))
        if isinstance(t, Seq):
            return ("seq", walk(t.first), walk(t.second))
        if isinstance(t, Par):
            return ("par", walk(t.left), walk(t.right))
        if isinstance(t, Cond):
            return ("cond", walk(t.guard), walk(t.thenBranch), walk(t.elseBranch))
        if isinstance(t, While):
            return ("while", walk(t.guard), walk(t.body))
        if isinstance(t, App):
            return ("app", walk(t.fun), walk(t.arg))
        if isinstance(t, Assign):
            return ("assign", walk(t.target), walk(t.value))
        if isinstance(t, Deref):
            return ("deref", walk(t.arg))
        if isinstance(t, Grab):
            return ("grab", walk(t.arg))
        if isinstance(t, Release):
            return ("release", walk(t.arg))
        raise TypeError(f"not a term: {t!r}")

    return (state.store, walk(state.term))


def _is_terminal(state: MachineState) -> bool:
    # Skip for com terms; a numeral is the terminal shape of exp terms
    return not state.store and _is_constant(state.term)


def may_terminate(term: Term, budget: int = 10**6) -> bool:
    """True iff some interleaving reaches a constant with an empty store."""
    start = MachineState((), term)
    seen = {canonical_key(start)}
    stack = [start]
    while stack:
        st = stack.pop()
        if _is_terminal(st):
            return True
        for nxt in step(st):
            key = canonical_key(nxt)
            if key not in seen:
                if len(seen) >= budget:
                    raise BudgetExceededError(f"exceeded {budget} canonical states")
                seen.add(key)
                stack.append(nxt)
    return False
