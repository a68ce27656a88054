"""Translation from normal-form terms to saturating automata.

The translation is by induction on a β-normal η-long term of base type
(binders are stripped first; their moves get integer path heads). Every
case builds the operand automata, retags their states with globally fresh
names, and glues:

  skip / numeral   one level-0 state between the question and the answer
  div              the question leads to a state with no exit
  op M             M's automaton with its final answers renamed through op
  M1 ; M2          M1's final answer becomes an ε into a latch state that
                   ε-starts M2; memory cells of M2 addressed at level 0 are
                   shifted past M1's
  M1 || M2         the root starts two tokens, one per operand; each token
                   ε-starts its side, each side's completion ε-banks a
                   finished token, and the answer needs both
  if M N1 N2       M runs at level 0; its answer i becomes an ε into N1's
                   start (i nonzero) or N2's (i zero)
  while M N        M's zero answer exits; nonzero ε-enters N, whose
                   completion ε-re-enters M's start
  x M1 .. Ml       a call gadget asks x and waits; while the call is open,
                   each argument can be spawned any number of times as a
                   child subtree two levels down, tagged with x and the
                   argument index; context calls made inside an argument
                   with an empty index vector point two levels further up
  x := V, !x, ...  run V to its value, then a question/answer pair on x
                   around the final answer
  newvar/newsem    one extra memory cell on the node that starts the block,
                   an explicit ε initialising it (re-entry in loops relies
                   on this), and every question/answer pair on the bound
                   name fused into a single memory ε
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .config import max_value
from .fica_syntax import (
    App, Assign, Base, Cond, Context, Deref, Div, FicaError, Grab, Id, Lam,
    NewSem, NewVar, Num, Op, Par, Release, Seq, Skip, Term, While, apply_op,
    base_result, normalize, typecheck,
)
from .moves_plays import (
    Letter, answer_moves, initial_question_moves, is_question_move, polarity,
)
from .sata_core import (
    AddEven, AddOdd, Automaton, Bounds, DelEven, DelOdd, EpsEven, EpsMem,
    MSet, make_automaton, reachable_configurations, validate,
)


class UnsupportedConstructError(FicaError):
    pass


# ======================================================================
# Mutable build state
# ======================================================================


class _Namer:
    def __init__(self) -> None:
        self.n = 0

    def fresh(self, hint: str) -> str:
        self.n += 1
        return f"{hint}{self.n}"


@dataclass
class _Build:
    k: int = 0
    N: int = 0
    states: list[set[str]] = field(default_factory=lambda: [set()])
    addEven: list[AddEven] = field(default_factory=list)
    addOdd: list[AddOdd] = field(default_factory=list)
    delEven: list[DelEven] = field(default_factory=list)
    delOdd: list[DelOdd] = field(default_factory=list)
    epsEven: list[EpsEven] = field(default_factory=list)
    epsMem: list[EpsMem] = field(default_factory=list)

    def ensure_level(self, level: int) -> None:
        while len(self.states) <= level:
            self.states.append(set())
        self.k = max(self.k, level)

    def fresh_state(self, namer: _Namer, level: int, hint: str) -> str:
        self.ensure_level(level)
        s = namer.fresh(hint)
        self.states[level].add(s)
        return s

    def labelled(self):
        return [*self.addEven, *self.addOdd, *self.delEven, *self.delOdd]


RootAdd = tuple[Letter, MSet]
RootDel = tuple[MSet, Letter]


def _merge(dst: _Build, src: _Build, namer: _Namer, *, hint: str, shift: int = 0,
           cell_offset: int = 0, letter_map=None) -> tuple[list[RootAdd], list[RootDel]]:
    """Copy src into dst with freshly renamed states, levels raised by
    shift, level-0 memory cells offset, and letters rewritten. The level-0
    question and answer rows are returned instead of copied; every case
    decides how to wire them."""
    if letter_map is None:
        letter_map = lambda l: l
    rename: dict[str, str] = {}
    for level, group in enumerate(src.states):
        dst.ensure_level(level + shift)
        for s in sorted(group):
            rename[s] = namer.fresh(hint)
            dst.states[level + shift].add(rename[s])
    dst.N = max(dst.N, src.N + cell_offset)

    def rem(ms: MSet) -> MSet:
        return MSet.of(*[rename[s] for s, n in ms.items for _ in range(n)])

    root_adds: list[RootAdd] = []
    root_dels: list[RootDel] = []
    for t in src.addEven:
        if t.level == 0:
            root_adds.append((letter_map(t.letter), rem(t.target)))
        else:
            dst.addEven.append(AddEven(t.level + shift, rename[t.source],
                                       letter_map(t.letter), rem(t.target)))
    for t in src.delEven:
        if t.level == 0:
            root_dels.append((rem(t.source), letter_map(t.letter)))
        else:
            dst.delEven.append(DelEven(t.level + shift, rem(t.source), letter_map(t.letter)))
    for t in src.addOdd:
        dst.addOdd.append(AddOdd(t.level + shift, rename[t.source],
                                 letter_map(t.letter), rename[t.target]))
    for t in src.delOdd:
        dst.delOdd.append(DelOdd(t.level + shift, rename[t.source],
                                 letter_map(t.letter), rename[t.target]))
    for t in src.epsEven:
        dst.epsEven.append(EpsEven(t.level + shift, rem(t.source), rem(t.target)))
    for t in src.epsMem:
        cell = t.cell + (cell_offset if t.memLevel == 0 else 0)
        dst.epsMem.append(EpsMem(t.level + shift, t.memLevel + shift, cell,
                                 t.read, t.write, rename[t.source], rename[t.target]))
    return root_adds, root_dels


def _prune(b: _Build) -> None:
    """Drop states no transition mentions, then trailing empty levels."""
    used: set[str] = set()
    for t in b.addEven:
        used.update(t.target.states())
        if t.source is not None:
            used.add(t.source)
    for t in b.addOdd:
        used.update((t.source, t.target))
    for t in b.delEven:
        used.update(t.source.states())
    for t in b.delOdd:
        used.update((t.source, t.target))
    for t in b.epsEven:
        used.update(t.source.states())
        used.update(t.target.states())
    for t in b.epsMem:
        used.update((t.source, t.target))
    b.states = [{s for s in group if s in used} for group in b.states]
    while len(b.states) > 1 and not b.states[-1]:
        b.states.pop()
    b.k = len(b.states) - 1


# ======================================================================
# Letter rewriting
# ======================================================================


def _binder_indices(binders: list[str]) -> dict[str, int]:
    # later binders shadow earlier ones with the same name
    p = len(binders)
    return {name: p + 1 - i for i, name in enumerate(binders, 1)}


def _argument_letter_map(x: str, u: int, binder_idx: dict[str, int]):
    """Rewrites an argument automaton's letters for embedding two levels
    down: binder-headed paths become x.u.index paths (same justifier
    distance), and context questions with an empty index vector point two
    levels further up."""

    def f(l: Letter) -> Letter:
        if not l.path:
            return l
        head = l.path[0]
        if head in binder_idx:
            return Letter(l.move, (x, u, binder_idx[head]) + l.path[1:], l.rho, l.flavor)
        if len(l.path) == 1 and is_question_move(l.move):
            return Letter(l.move, l.path, l.rho + 2, l.flavor)
        return l

    return f


def _strip_binders(ctx: Context, term: Term) -> tuple[Context, list[str], Term]:
    binders: list[str] = []
    while isinstance(term, Lam):
        ctx = ctx.extend(term.binder, term.binderType)
        binders.append(term.binder)
        term = term.body
    return ctx, binders, term


def _spine(term: Term) -> tuple[Term, list[Term]]:
    args: list[Term] = []
    while isinstance(term, App):
        args.append(term.arg)
        term = term.fun
    args.reverse()
    return term, args


# ======================================================================
# The translation, case by case
# ======================================================================


def _constant(namer: _Namer, question: str, answer: str) -> _Build:
    b = _Build()
    s = b.fresh_state(namer, 0, "k")
    b.addEven.append(AddEven(0, None, Letter(question), MSet.of(s)))
    b.delEven.append(DelEven(0, MSet.of(s), Letter(answer)))
    return b


def _diverge(namer: _Namer, beta: Base) -> _Build:
    b = _Build()
    s = b.fresh_state(namer, 0, "k")
    for m in initial_question_moves(beta):
        b.addEven.append(AddEven(0, None, Letter(m), MSet.of(s)))
    return b


def _call(ctx: Context, x: str, args: list[Term], namer: _Namer) -> _Build:
    """Identifier call gadget plus one spawnable subtree per argument."""
    from .fica_syntax import arg_types  # local name clash avoidance

    xty = ctx.lookup(x)
    expected = arg_types(xty)
    if len(args) != len(expected):
        raise UnsupportedConstructError(
            f"{x} applied to {len(args)} of {len(expected)} arguments; not η-long")
    beta = base_result(xty)
    b = _Build()
    b.ensure_level(1 if args else 1)
    odd_states: list[str] = []
    for m in initial_question_moves(beta):
        s0 = b.fresh_state(namer, 0, "a")
        s1 = b.fresh_state(namer, 1, "a")
        odd_states.append(s1)
        b.addEven.append(AddEven(0, None, Letter(m), MSet.of(s0)))
        b.addOdd.append(AddOdd(1, s0, Letter(m, (x,)), s1))
        for amove, afl in answer_moves(beta, m):
            fin = b.fresh_state(namer, 0, "a")
            b.delOdd.append(DelOdd(1, s1, Letter(amove, (x,), 0, afl), fin))
            b.delEven.append(DelEven(0, MSet.of(fin), Letter(amove, (), 0, afl)))
    l = len(args)
    for j, arg in enumerate(args, 1):
        u = l + 1 - j
        actx, binders, body = _strip_binders(ctx, arg)
        sub = _compile_term(actx, body, namer)
        lmap = _argument_letter_map(x, u, _binder_indices(binders))
        adds, dels = _merge(b, sub, namer, hint="a", shift=2, letter_map=lmap)
        for s1 in odd_states:
            for letter, target in adds:
                b.addEven.append(AddEven(2, s1, Letter(letter.move, (x, u), 0, letter.flavor), target))
        for source, letter in dels:
            b.delEven.append(DelEven(2, source, Letter(letter.move, (x, u), 0, letter.flavor)))
    return b


def _access(ctx: Context, term: Term, namer: _Namer) -> _Build:
    """Assign / Deref / Grab / Release on a free identifier: run the value
    (assign only), then the question/answer pair on the identifier around
    the final answer."""
    if isinstance(term, Assign):
        target, question_of = term.target, lambda i: f"write({i})"
    elif isinstance(term, Deref):
        target = term.arg
    elif isinstance(term, Grab):
        target = term.arg
    else:
        target = term.arg
    if not isinstance(target, Id):
        raise UnsupportedConstructError(
            f"{type(term).__name__.lower()} target must be an identifier in normal form")
    x = target.name

    b = _Build()
    b.ensure_level(1)
    if isinstance(term, Assign):
        sub = _compile_term(ctx, term.value, namer)
        adds, dels = _merge(b, sub, namer, hint="w")
        for _, targetD in adds:
            b.addEven.append(AddEven(0, None, Letter("run"), targetD))
        fin = b.fresh_state(namer, 0, "w")
        for source, letter in dels:
            ready = b.fresh_state(namer, 0, "w")
            wr = b.fresh_state(namer, 1, "w")
            i = int(letter.move)
            b.epsEven.append(EpsEven(0, source, MSet.of(ready)))
            b.addOdd.append(AddOdd(1, ready, Letter(question_of(i), (x,)), wr))
            b.delOdd.append(DelOdd(1, wr, Letter("ok", (x,)), fin))
        b.delEven.append(DelEven(0, MSet.of(fin), Letter("done")))
        return b
    if isinstance(term, Deref):
        s0 = b.fresh_state(namer, 0, "r")
        rd = b.fresh_state(namer, 1, "r")
        b.addEven.append(AddEven(0, None, Letter("q"), MSet.of(s0)))
        b.addOdd.append(AddOdd(1, s0, Letter("read", (x,)), rd))
        for j in range(max_value() + 1):
            fin = b.fresh_state(namer, 0, "r")
            b.delOdd.append(DelOdd(1, rd, Letter(str(j), (x,)), fin))
            b.delEven.append(DelEven(0, MSet.of(fin), Letter(str(j))))
        return b
    move = "grab" if isinstance(term, Grab) else "release"
    s0 = b.fresh_state(namer, 0, "g")
    g = b.fresh_state(namer, 1, "g")
    fin = b.fresh_state(namer, 0, "g")
    b.addEven.append(AddEven(0, None, Letter("run"), MSet.of(s0)))
    b.addOdd.append(AddOdd(1, s0, Letter(move, (x,)), g))
    b.delOdd.append(DelOdd(1, g, Letter("ok", (x,), 0, move), fin))
    b.delEven.append(DelEven(0, MSet.of(fin), Letter("done")))
    return b


def _binding(ctx: Context, term: Term, namer: _Namer) -> _Build:
    """newvar / newsem: extra cell, explicit init ε, and access fusion."""
    is_var = isinstance(term, NewVar)
    x = term.binder
    inner = ctx.extend(x, _VAR_TYPE if is_var else _SEM_TYPE)
    beta = typecheck(inner, term.body)
    sub = _compile_term(inner, term.body, namer)
    b = _Build()
    adds, dels = _merge(b, sub, namer, hint="v")
    cell = b.N + 1
    b.N = cell
    opening = b.fresh_state(namer, 0, "v")
    ready = b.fresh_state(namer, 0, "v")
    for m in initial_question_moves(beta):
        b.addEven.append(AddEven(0, None, Letter(m), MSet.of(opening)))
    b.epsMem.append(EpsMem(0, 0, cell, None, term.init, opening, ready))
    for _, target in adds:
        b.epsEven.append(EpsEven(0, MSet.of(ready), target))
    for source, letter in dels:
        b.delEven.append(DelEven(0, source, letter))

    def on_x(l: Letter) -> bool:
        return bool(l.path) and l.path[0] == x

    by_source: dict[str, list[DelOdd]] = {}
    for d in b.delOdd:
        if on_x(d.letter):
            by_source.setdefault(d.source, []).append(d)
    for a in b.addOdd:
        if not on_x(a.letter):
            continue
        for d in by_source.get(a.target, []):
            level = a.level - 1
            move = a.letter.move
            if move.startswith("write("):
                b.epsMem.append(EpsMem(level, 0, cell, None, int(move[6:-1]), a.source, d.target))
            elif move == "read":
                j = int(d.letter.move)
                b.epsMem.append(EpsMem(level, 0, cell, j, j, a.source, d.target))
            elif move == "grab":
                b.epsMem.append(EpsMem(level, 0, cell, 0, 1, a.source, d.target))
            else:  # release works from any non-zero value
                for v in range(1, max_value() + 1):
                    b.epsMem.append(EpsMem(level, 0, cell, v, 0, a.source, d.target))
    b.addOdd = [t for t in b.addOdd if not on_x(t.letter)]
    b.delOdd = [t for t in b.delOdd if not on_x(t.letter)]
    _prune(b)
    return b


def _compile_term(ctx: Context, term: Term, namer: _Namer) -> _Build:
    beta = typecheck(ctx, term)
    if not isinstance(beta, Base):
        raise UnsupportedConstructError("inner translation expects a base-typed term")

    if isinstance(term, Skip):
        return _constant(namer, "run", "done")
    if isinstance(term, Num):
        return _constant(namer, "q", str(term.i))
    if isinstance(term, Div):
        return _diverge(namer, beta)

    if isinstance(term, Op):
        sub = _compile_term(ctx, term.arg, namer)
        b = _Build()
        adds, dels = _merge(b, sub, namer, hint="o")
        for letter, target in adds:
            b.addEven.append(AddEven(0, None, letter, target))
        for source, letter in dels:
            out = apply_op(term.opName, int(letter.move))
            b.delEven.append(DelEven(0, source, Letter(str(out))))
        return b

    if isinstance(term, Seq):
        first = _compile_term(ctx, term.first, namer)
        second = _compile_term(ctx, term.second, namer)
        b = _Build()
        adds1, dels1 = _merge(b, first, namer, hint="s")
        adds2, dels2 = _merge(b, second, namer, hint="s", cell_offset=first.N)
        latch = b.fresh_state(namer, 0, "s")
        m = initial_question_moves(beta)[0]
        for _, target in adds1:
            b.addEven.append(AddEven(0, None, Letter(m), target))
        for source, _ in dels1:
            b.epsEven.append(EpsEven(0, source, MSet.of(latch)))
        for _, target in adds2:
            b.epsEven.append(EpsEven(0, MSet.of(latch), target))
        for source, letter in dels2:
            b.delEven.append(DelEven(0, source, letter))
        return b

    if isinstance(term, Par):
        left = _compile_term(ctx, term.left, namer)
        right = _compile_term(ctx, term.right, namer)
        b = _Build()
        addsL, delsL = _merge(b, left, namer, hint="p")
        addsR, delsR = _merge(b, right, namer, hint="p", cell_offset=left.N)
        goL = b.fresh_state(namer, 0, "p")
        goR = b.fresh_state(namer, 0, "p")
        okL = b.fresh_state(namer, 0, "p")
        okR = b.fresh_state(namer, 0, "p")
        b.addEven.append(AddEven(0, None, Letter("run"), MSet.of(goL, goR)))
        for adds, go in ((addsL, goL), (addsR, goR)):
            for _, target in adds:
                b.epsEven.append(EpsEven(0, MSet.of(go), target))
        for dels, ok in ((delsL, okL), (delsR, okR)):
            for source, _ in dels:
                b.epsEven.append(EpsEven(0, source, MSet.of(ok)))
        b.delEven.append(DelEven(0, MSet.of(okL, okR), Letter("done")))
        return b

    if isinstance(term, Cond):
        guard = _compile_term(ctx, term.guard, namer)
        then = _compile_term(ctx, term.thenBranch, namer)
        other = _compile_term(ctx, term.elseBranch, namer)
        b = _Build()
        addsG, delsG = _merge(b, guard, namer, hint="c")
        addsT, delsT = _merge(b, then, namer, hint="c", cell_offset=guard.N)
        addsE, delsE = _merge(b, other, namer, hint="c", cell_offset=guard.N + then.N)
        m = initial_question_moves(beta)[0]
        for _, target in addsG:
            b.addEven.append(AddEven(0, None, Letter(m), target))
        for source, letter in delsG:
            branch = addsT if int(letter.move) != 0 else addsE
            for _, target in branch:
                b.epsEven.append(EpsEven(0, source, target))
        for source, letter in delsT + delsE:
            b.delEven.append(DelEven(0, source, letter))
        return b

    if isinstance(term, While):
        guard = _compile_term(ctx, term.guard, namer)
        body = _compile_term(ctx, term.body, namer)
        b = _Build()
        addsG, delsG = _merge(b, guard, namer, hint="w")
        addsB, delsB = _merge(b, body, namer, hint="w", cell_offset=guard.N)
        for _, target in addsG:
            b.addEven.append(AddEven(0, None, Letter("run"), target))
        for source, letter in delsG:
            if int(letter.move) == 0:
                b.delEven.append(DelEven(0, source, Letter("done")))
            else:
                for _, target in addsB:
                    b.epsEven.append(EpsEven(0, source, target))
        for source, _ in delsB:
            for _, target in addsG:
                b.epsEven.append(EpsEven(0, source, target))
        return b

    if isinstance(term, (Assign, Deref, Grab, Release)):
        return _access(ctx, term, namer)

    if isinstance(term, (NewVar, NewSem)):
        return _binding(ctx, term, namer)

    if isinstance(term, (Id, App)):
        head, args = _spine(term)
        if not isinstance(head, Id):
            raise UnsupportedConstructError("application head must be an identifier in normal form")
        return _call(ctx, head.name, args, namer)

    raise UnsupportedConstructError(f"no translation for {type(term).__name__}")


from .fica_syntax import SEM as _SEM_TYPE, VAR as _VAR_TYPE  # noqa: E402


# ======================================================================
# Entry points, invariants, statistics
# ======================================================================


@dataclass(frozen=True)
class InvariantReport:
    oa: bool
    pq: bool
    fa: str = "not-checked"


@dataclass(frozen=True)
class CompileResult:
    automaton: Automaton
    stats: dict
    invariantReport: InvariantReport


def _freeze(b: _Build) -> Automaton:
    letters = {t.letter for t in b.labelled()}
    by_class = {"OQ": set(), "PQ": set(), "OA": set(), "PA": set()}
    for l in letters:
        by_class[polarity(l)].add(l)
    b.ensure_level(b.k)
    return make_automaton(
        sigma_oq=by_class["OQ"], sigma_pq=by_class["PQ"],
        sigma_oa=by_class["OA"], sigma_pa=by_class["PA"],
        k=b.k, N=b.N, states=b.states,
        addEven=b.addEven, addOdd=b.addOdd, delEven=b.delEven,
        delOdd=b.delOdd, epsEven=b.epsEven, epsMem=b.epsMem,
    )


def compile(ctx: Context, term: Term) -> CompileResult:
    """Translate a β-normal η-long term; rejects anything else."""
    start = time.perf_counter()
    typecheck(ctx, term)
    if normalize(ctx, term) != term:
        raise UnsupportedConstructError(
            "compile expects β-normal η-long input; normalize first")
    namer = _Namer()
    inner, binders, body = _strip_binders(ctx, term)
    b = _compile_term(inner, body, namer)
    if binders:
        idx = _binder_indices(binders)

        def remap(l: Letter) -> Letter:
            if l.path and l.path[0] in idx:
                return Letter(l.move, (idx[l.path[0]],) + l.path[1:], l.rho, l.flavor)
            return l

        b.addEven = [AddEven(t.level, t.source, remap(t.letter), t.target) for t in b.addEven]
        b.addOdd = [AddOdd(t.level, t.source, remap(t.letter), t.target) for t in b.addOdd]
        b.delEven = [DelEven(t.level, t.source, remap(t.letter)) for t in b.delEven]
        b.delOdd = [DelOdd(t.level, t.source, remap(t.letter), t.target) for t in b.delOdd]
    aut = _freeze(b)
    millis = (time.perf_counter() - start) * 1000.0
    stats = size_stats(aut)
    stats["millis"] = millis
    return CompileResult(aut, stats, InvariantReport(check_oa(aut), check_pq(aut)))


def check_oa(aut: Automaton) -> bool:
    """Each (odd state, O-answer) pair resolves to at most one target."""
    seen: dict[tuple, str] = {}
    for t in aut.delOdd:
        key = (t.source, t.letter)
        if seen.setdefault(key, t.target) != t.target:
            return False
    return True


def check_pq(aut: Automaton) -> bool:
    """Each (P-question, odd target) pair comes from at most one source."""
    seen: dict[tuple, str] = {}
    for t in aut.addOdd:
        key = (t.letter, t.target)
        if seen.setdefault(key, t.source) != t.source:
            return False
    return True


@dataclass(frozen=True)
class FAOutcome:
    ok: bool
    exhausted: bool

    def __bool__(self) -> bool:
        return self.ok


def check_fa(aut: Automaton, bounds: Bounds = Bounds()) -> FAOutcome:
    """Final readiness: whenever a level-0 answer row fits under the root
    label in a reachable configuration, the root is a leaf and the label is
    exactly that row."""
    defects = validate(aut)
    if defects:
        raise ValueError("check_fa needs a well-formed automaton: " + defects[0])
    configs, truncated = reachable_configurations(aut, bounds)
    for cfg in configs:
        roots = [d for d in cfg.alive if cfg.node(d).level == 0]
        if not roots:
            continue
        (root,) = roots
        label = cfg.node(root).label
        for t in aut.delEven:
            if t.level == 0 and t.source.below(label):
                if cfg.alive_children(root) or label != t.source:
                    return FAOutcome(False, truncated)
    return FAOutcome(True, truncated)


def size_stats(aut: Automaton) -> dict:
    wildcards = sum(1 for t in aut.epsMem if t.read is None)
    total = len(aut.transitions())
    return {
        "states": sum(len(group) for group in aut.states),
        "transitions": total,
        "transitionsExpanded": total + max_value() * wildcards,
        "k": aut.k,
        "N": aut.N,
    }
