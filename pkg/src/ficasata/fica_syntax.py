"""Surface syntax, types, typechecking, and normal forms for the source language.

Base types: com (commands), exp (finite-valued expressions), var (assignable
cells), sem (semaphores). Arrow types nest to the right. Ground values range
over {0..max} with max taken from config.

Concrete grammar (lowest precedence first):

    term   := par
    par    := seq ('||' par)?
    seq    := asg (';' seq)?
    asg    := prefix | app (':=' asg)?
    prefix := 'fun' ident ':' type '->' term
            | 'if' term 'then' term 'else' term
            | 'while' term 'do' term
            | 'newvar' ident (':=' num)? 'in' term
            | 'newsem' ident (':=' num)? 'in' term
    app    := unary+                      (application, left associated)
    unary  := '!' unary | atom
    atom   := 'skip' | num | ident | 'div' (':' type)?
            | opname '(' term ')' | 'grab' '(' term ')' | 'release' '(' term ')'
            | '(' term ')'

Prefix forms extend right as far as possible, so
`newvar x := 0 in M; N` binds x in all of `M; N`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Union

from .config import max_value

# ======================================================================
# Types
# ======================================================================


@dataclass(frozen=True)
class Base:
    name: str  # 'com' | 'exp' | 'var' | 'sem'

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Arrow:
    arg: "Type"
    result: "Type"

    def __repr__(self) -> str:
        return print_type(self)


Type = Union[Base, Arrow]

COM = Base("com")
EXP = Base("exp")
VAR = Base("var")
SEM = Base("sem")

BASE_NAMES = {"com": COM, "exp": EXP, "var": VAR, "sem": SEM}


def base_result(t: Type) -> Base:
    """Rightmost base of an arrow chain."""
    while isinstance(t, Arrow):
        t = t.result
    return t


def arg_types(t: Type) -> list[Type]:
    """Argument types in consumption order (leftmost arrow first)."""
    out = []
    while isinstance(t, Arrow):
        out.append(t.arg)
        t = t.result
    return out


def print_type(t: Type) -> str:
    if isinstance(t, Base):
        return t.name
    left = print_type(t.arg)
    if isinstance(t.arg, Arrow):
        left = f"({left})"
    return f"{left} -> {print_type(t.result)}"


# ======================================================================
# Terms
# ======================================================================


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Div:
    annotation: Type


@dataclass(frozen=True)
class Num:
    i: int


@dataclass(frozen=True)
class Op:
    opName: str
    arg: "Term"


@dataclass(frozen=True)
class Seq:
    first: "Term"
    second: "Term"


@dataclass(frozen=True)
class Par:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Cond:
    guard: "Term"
    thenBranch: "Term"
    elseBranch: "Term"


@dataclass(frozen=True)
class While:
    guard: "Term"
    body: "Term"


@dataclass(frozen=True)
class Id:
    name: str


@dataclass(frozen=True)
class Lam:
    binder: str
    binderType: Type
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Assign:
    target: "Term"
    value: "Term"


@dataclass(frozen=True)
class Deref:
    arg: "Term"


@dataclass(frozen=True)
class NewVar:
    binder: str
    init: int
    body: "Term"


@dataclass(frozen=True)
class NewSem:
    binder: str
    init: int
    body: "Term"


@dataclass(frozen=True)
class Grab:
    arg: "Term"


@dataclass(frozen=True)
class Release:
    arg: "Term"


Term = Union[
    Skip, Div, Num, Op, Seq, Par, Cond, While, Id, Lam, App,
    Assign, Deref, NewVar, NewSem, Grab, Release,
]


def term_size(term: Term) -> int:
    """Number of abstract-syntax nodes."""
    if isinstance(term, (Skip, Div, Num, Id)):
        return 1
    if isinstance(term, (Op, Deref, Grab, Release)):
        return 1 + term_size(term.arg)
    if isinstance(term, Seq):
        return 1 + term_size(term.first) + term_size(term.second)
    if isinstance(term, Par):
        return 1 + term_size(term.left) + term_size(term.right)
    if isinstance(term, Cond):
        return 1 + term_size(term.guard) + term_size(term.thenBranch) + term_size(term.elseBranch)
    if isinstance(term, While):
        return 1 + term_size(term.guard) + term_size(term.body)
    if isinstance(term, Lam):
        return 1 + term_size(term.body)
    if isinstance(term, App):
        return 1 + term_size(term.fun) + term_size(term.arg)
    if isinstance(term, Assign):
        return 1 + term_size(term.target) + term_size(term.value)
    if isinstance(term, (NewVar, NewSem)):
        return 1 + term_size(term.body)
    raise TypeError(f"not a term: {term!r}")


def subterms(term: Term) -> Iterator[Term]:
    """Depth-first enumeration, term itself first."""
    yield term
    for child in _children(term):
        yield from subterms(child)


def _children(term: Term) -> tuple[Term, ...]:
    if isinstance(term, (Skip, Div, Num, Id)):
        return ()
    if isinstance(term, (Op, Deref, Grab, Release)):
        return (term.arg,)
    if isinstance(term, Seq):
        return (term.first, term.second)
    if isinstance(term, Par):
        return (term.left, term.right)
    if isinstance(term, Cond):
        return (term.guard, term.thenBranch, term.elseBranch)
    if isinstance(term, While):
        return (term.guard, term.body)
    if isinstance(term, Lam):
        return (term.body,)
    if isinstance(term, App):
        return (term.fun, term.arg)
    if isinstance(term, Assign):
        return (term.target, term.value)
    if isinstance(term, (NewVar, NewSem)):
        return (term.body,)
    raise TypeError(f"not a term: {term!r}")


# ======================================================================
# Contexts
# ======================================================================


@dataclass(frozen=True)
class Context:
    """Ordered name/type assumptions; order fixes tag paths in the alphabet."""

    entries: tuple[tuple[str, Type], ...] = ()

    def lookup(self, name: str) -> Type | None:
        for n, t in self.entries:
            if n == name:
                return t
        return None

    def extend(self, name: str, t: Type) -> "Context":
        # inner binding shadows; keep first occurrence authoritative for lookup
        filtered = tuple((n, u) for n, u in self.entries if n != name)
        return Context(((name, t),) + filtered)

    def append(self, name: str, t: Type) -> "Context":
        if self.lookup(name) is not None:
            raise ValueError(f"duplicate context name {name}")
        return Context(self.entries + ((name, t),))

    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


EMPTY_CONTEXT = Context()


# ======================================================================
# Unary operator registry
# ======================================================================

# name -> function on {0..max}; applied with wraparound via the current max
OP_REGISTRY: dict[str, Callable[[int], int]] = {
    "succ": lambda i: (i + 1) % (max_value() + 1),
    "pred": lambda i: (i - 1) % (max_value() + 1),
}


def apply_op(name: str, i: int) -> int:
    fn = OP_REGISTRY[name]
    v = fn(i)
    if not 0 <= v <= max_value():
        raise ValueError(f"op {name} produced out-of-range value {v}")
    return v


# ======================================================================
# Errors
# ======================================================================


class FicaError(Exception):
    pass


class FicaSyntaxError(FicaError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


class FicaTypeError(FicaError):
    def __init__(self, rule: str, term: Term, msg: str):
        super().__init__(f"rule {rule}: {msg} (in {print_term(term)})")
        self.rule = rule
        self.term = term


# ======================================================================
# Lexer
# ======================================================================

KEYWORDS = {
    "skip", "div", "fun", "if", "then", "else", "while", "do",
    "newvar", "newsem", "in", "grab", "release",
    "com", "exp", "var", "sem",
}

_SYMBOLS = ["||", ":=", "->", ";", "!", "(", ")", ":", ","]


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | 'num' | 'kw' | 'sym' | 'eof'
    value: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    toks = []
    line, col = 1, 1
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":  # comment to end of line
            while i < n and source[i] != "\n":
                i += 1
            continue
        matched = False
        for sym in _SYMBOLS:
            if source.startswith(sym, i):
                toks.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                matched = True
                break
        if matched:
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            toks.append(Token("num", source[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] in "_'"):
                j += 1
            word = source[i:j]
            toks.append(Token("kw" if word in KEYWORDS else "ident", word, line, col))
            col += j - i
            i = j
            continue
        raise FicaSyntaxError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


# ======================================================================
# Parser
# ======================================================================


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def err(self, msg: str) -> FicaSyntaxError:
        t = self.peek()
        return FicaSyntaxError(msg + (f", got {t.value!r}" if t.kind != "eof" else ", got end of input"), t.line, t.col)

    def expect(self, kind: str, value: str) -> Token:
        t = self.peek()
        if t.kind != kind or t.value != value:
            raise self.err(f"expected {value!r}")
        return self.next()

    def at(self, kind: str, value: str) -> bool:
        t = self.peek()
        return t.kind == kind and t.value == value

    # ---- types ----

    def parse_type(self) -> Type:
        left = self.parse_type_atom()
        if self.at("sym", "->"):
            self.next()
            return Arrow(left, self.parse_type())
        return left

    def parse_type_in_term(self) -> Type:
        # '->' doubles as the fun-body separator, so extend the type only
        # while what follows still parses as a type
        left = self.parse_type_atom()
        if self.at("sym", "->"):
            save = self.pos
            self.next()
            try:
                return Arrow(left, self.parse_type_in_term())
            except FicaSyntaxError:
                self.pos = save
        return left

    def parse_type_atom(self) -> Type:
        t = self.peek()
        if t.kind == "kw" and t.value in BASE_NAMES:
            self.next()
            return BASE_NAMES[t.value]
        if self.at("sym", "("):
            self.next()
            ty = self.parse_type()
            self.expect("sym", ")")
            return ty
        raise self.err("expected a type")

    # ---- terms ----

    def parse_term(self) -> Term:
        return self.parse_par()

    def parse_par(self) -> Term:
        left = self.parse_seq()
        if self.at("sym", "||"):
            self.next()
            return Par(left, self.parse_par())
        return left

    def parse_seq(self) -> Term:
        left = self.parse_asg()
        if self.at("sym", ";"):
            self.next()
            return Seq(left, self.parse_seq())
        return left

    def parse_asg(self) -> Term:
        t = self.peek()
        if t.kind == "kw" and t.value in ("fun", "if", "while", "newvar", "newsem"):
            return self.parse_prefix()
        left = self.parse_app()
        if self.at("sym", ":="):
            self.next()
            return Assign(left, self.parse_asg())
        return left

    def parse_prefix(self) -> Term:
        t = self.next()
        if t.value == "fun":
            name = self.parse_ident()
            self.expect("sym", ":")
            ty = self.parse_type_in_term()
            self.expect("sym", "->")
            return Lam(name, ty, self.parse_term())
        if t.value == "if":
            guard = self.parse_term()
            self.expect("kw", "then")
            then = self.parse_term()
            self.expect("kw", "else")
            return Cond(guard, then, self.parse_term())
        if t.value == "while":
            guard = self.parse_term()
            self.expect("kw", "do")
            return While(guard, self.parse_term())
        # newvar / newsem
        name = self.parse_ident()
        init = 0
        if self.at("sym", ":="):
            self.next()
            init = self.parse_num()
        self.expect("kw", "in")
        body = self.parse_term()
        return (NewVar if t.value == "newvar" else NewSem)(name, init, body)

    def parse_app(self) -> Term:
        term = self.parse_unary()
        while self.starts_unary():
            term = App(term, self.parse_unary())
        return term

    def starts_unary(self) -> bool:
        t = self.peek()
        if t.kind in ("ident", "num"):
            return True
        if t.kind == "sym" and t.value in ("!", "("):
            return True
        if t.kind == "kw" and t.value in ("skip", "div", "grab", "release"):
            return True
        return False

    def parse_unary(self) -> Term:
        if self.at("sym", "!"):
            self.next()
            return Deref(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Term:
        t = self.peek()
        if t.kind == "num":
            return Num(self.parse_num())
        if t.kind == "ident":
            if t.value in OP_REGISTRY:
                self.next()
                self.expect("sym", "(")
                arg = self.parse_term()
                self.expect("sym", ")")
                return Op(t.value, arg)
            self.next()
            return Id(t.value)
        if t.kind == "kw":
            if t.value == "skip":
                self.next()
                return Skip()
            if t.value == "div":
                self.next()
                if self.at("sym", ":"):
                    self.next()
                    return Div(self.parse_type_in_term())
                return Div(COM)
            if t.value in ("grab", "release"):
                self.next()
                self.expect("sym", "(")
                arg = self.parse_term()
                self.expect("sym", ")")
                return (Grab if t.value == "grab" else Release)(arg)
        if self.at("sym", "("):
            self.next()
            term = self.parse_term()
            self.expect("sym", ")")
            return term
        raise self.err("expected a term")

    def parse_ident(self) -> str:
        t = self.peek()
        if t.kind != "ident":
            raise self.err("expected an identifier")
        if t.value in OP_REGISTRY:
            raise self.err(f"{t.value!r} names an operator")
        return self.next().value

    def parse_num(self) -> int:
        t = self.peek()
        if t.kind != "num":
            raise self.err("expected a numeral")
        i = int(self.next().value)
        if i > max_value():
            raise FicaSyntaxError(f"numeral {i} exceeds max {max_value()}", t.line, t.col)
        return i


def parse(source: str) -> Term:
    p = _Parser(tokenize(source))
    term = p.parse_term()
    if p.peek().kind != "eof":
        raise p.err("trailing input")
    return term


def parse_type(source: str) -> Type:
    p = _Parser(tokenize(source))
    ty = p.parse_type()
    if p.peek().kind != "eof":
        raise p.err("trailing input")
    return ty


def parse_context(source: str) -> Context:
    """Parse 'f:com->com, c:com' into a Context."""
    p = _Parser(tokenize(source))
    entries: list[tuple[str, Type]] = []
    if p.peek().kind != "eof":
        while True:
            name = p.parse_ident()
            p.expect("sym", ":")
            entries.append((name, p.parse_type()))
            if not p.at("sym", ","):
                break
            p.next()
    if p.peek().kind != "eof":
        raise p.err("trailing input")
    ctx = Context()
    for name, t in entries:
        ctx = ctx.append(name, t)
    return ctx


# ======================================================================
# Printer
# ======================================================================

# precedence levels: 0 par, 1 seq, 2 asg, 3 app, 4 unary, 5 atom
# prefix forms swallow rightward, so they print at level 0: safe only where
# the enclosing construct is closed on the right


def print_term(term: Term) -> str:
    return _pp(term, 0)


def _level(term: Term) -> int:
    if isinstance(term, (Par, Lam, Cond, While, NewVar, NewSem)):
        return 0
    if isinstance(term, Seq):
        return 1
    if isinstance(term, Assign):
        return 2
    if isinstance(term, App):
        return 3
    if isinstance(term, Deref):
        return 4
    if isinstance(term, Div) and term.annotation != COM:
        return 2  # 'div : T' reads on to the type, keep it bracketed like asg
    return 5


def _pp(term: Term, want: int) -> str:
    s = _raw(term)
    if _level(term) < want:
        return f"({s})"
    return s


def _raw(term: Term) -> str:
    if isinstance(term, Skip):
        return "skip"
    if isinstance(term, Div):
        return "div" if term.annotation == COM else f"div : {print_type(term.annotation)}"
    if isinstance(term, Num):
        return str(term.i)
    if isinstance(term, Op):
        return f"{term.opName}({_pp(term.arg, 0)})"
    if isinstance(term, Seq):
        return f"{_pp(term.first, 2)}; {_pp(term.second, 1)}"
    if isinstance(term, Par):
        return f"{_pp(term.left, 1)} || {_pp(term.right, 0)}"
    if isinstance(term, Cond):
        return f"if {_pp(term.guard, 0)} then {_pp(term.thenBranch, 0)} else {_pp(term.elseBranch, 0)}"
    if isinstance(term, While):
        return f"while {_pp(term.guard, 0)} do {_pp(term.body, 0)}"
    if isinstance(term, Id):
        return term.name
    if isinstance(term, Lam):
        return f"fun {term.binder} : {print_type(term.binderType)} -> {_pp(term.body, 0)}"
    if isinstance(term, App):
        return f"{_pp(term.fun, 3)} {_pp(term.arg, 4)}"
    if isinstance(term, Assign):
        return f"{_pp(term.target, 3)} := {_pp(term.value, 2)}"
    if isinstance(term, Deref):
        return f"!{_pp(term.arg, 4)}"
    if isinstance(term, NewVar):
        return f"newvar {term.binder} := {term.init} in {_pp(term.body, 0)}"
    if isinstance(term, NewSem):
        return f"newsem {term.binder} := {term.init} in {_pp(term.body, 0)}"
    if isinstance(term, Grab):
        return f"grab({_pp(term.arg, 0)})"
    if isinstance(term, Release):
        return f"release({_pp(term.arg, 0)})"
    raise TypeError(f"not a term: {term!r}")


# ======================================================================
# Typechecker
# ======================================================================


def typecheck(ctx: Context, term: Term) -> Type:
    """Type of term under ctx, or FicaTypeError naming the violated rule."""
    if isinstance(term, Skip):
        return COM
    if isinstance(term, Div):
        return term.annotation
    if isinstance(term, Num):
        if not 0 <= term.i <= max_value():
            raise FicaTypeError("num", term, f"numeral {term.i} out of range 0..{max_value()}")
        return EXP
    if isinstance(term, Op):
        if term.opName not in OP_REGISTRY:
            raise FicaTypeError("op", term, f"unknown operator {term.opName}")
        _require(ctx, term.arg, EXP, "op", term)
        return EXP
    if isinstance(term, Seq):
        _require(ctx, term.first, COM, "seq", term)
        beta = typecheck(ctx, term.second)
        if beta not in (COM, EXP):
            raise FicaTypeError("seq", term, f"second operand must be com or exp, has {beta}")
        return beta
    if isinstance(term, Par):
        _require(ctx, term.left, COM, "par", term)
        _require(ctx, term.right, COM, "par", term)
        return COM
    if isinstance(term, Cond):
        _require(ctx, term.guard, EXP, "cond", term)
        beta = typecheck(ctx, term.thenBranch)
        if beta not in (COM, EXP):
            raise FicaTypeError("cond", term, f"branches must be com or exp, have {beta}")
        _require(ctx, term.elseBranch, beta, "cond", term)
        return beta
    if isinstance(term, While):
        _require(ctx, term.guard, EXP, "while", term)
        _require(ctx, term.body, COM, "while", term)
        return COM
    if isinstance(term, Id):
        t = ctx.lookup(term.name)
        if t is None:
            raise FicaTypeError("id", term, f"unbound identifier {term.name}")
        return t
    if isinstance(term, Lam):
        body_t = typecheck(ctx.extend(term.binder, term.binderType), term.body)
        return Arrow(term.binderType, body_t)
    if isinstance(term, App):
        fun_t = typecheck(ctx, term.fun)
        if not isinstance(fun_t, Arrow):
            raise FicaTypeError("app", term, f"function position has base type {fun_t}")
        _require(ctx, term.arg, fun_t.arg, "app", term)
        return fun_t.result
    if isinstance(term, Assign):
        _require(ctx, term.target, VAR, "assign", term)
        _require(ctx, term.value, EXP, "assign", term)
        return COM
    if isinstance(term, Deref):
        _require(ctx, term.arg, VAR, "deref", term)
        return EXP
    if isinstance(term, (NewVar, NewSem)):
        rule = "newvar" if isinstance(term, NewVar) else "newsem"
        if not 0 <= term.init <= max_value():
            raise FicaTypeError(rule, term, f"init {term.init} out of range 0..{max_value()}")
        bind_t = VAR if isinstance(term, NewVar) else SEM
        beta = typecheck(ctx.extend(term.binder, bind_t), term.body)
        if beta not in (COM, EXP):
            raise FicaTypeError(rule, term, f"body must be com or exp, has {beta}")
        return beta
    if isinstance(term, Grab):
        _require(ctx, term.arg, SEM, "grab", term)
        return COM
    if isinstance(term, Release):
        _require(ctx, term.arg, SEM, "release", term)
        return COM
    raise TypeError(f"not a term: {term!r}")


def _require(ctx: Context, term: Term, expected: Type, rule: str, parent: Term) -> None:
    actual = typecheck(ctx, term)
    if actual != expected:
        raise FicaTypeError(rule, parent, f"{print_term(term)} has type {actual}, needs {expected}")


# ======================================================================
# Normalization: beta-normal, eta-long
# ======================================================================


def free_identifiers(term: Term) -> set[str]:
    if isinstance(term, Id):
        return {term.name}
    if isinstance(term, Lam):
        return free_identifiers(term.body) - {term.binder}
    if isinstance(term, (NewVar, NewSem)):
        return free_identifiers(term.body) - {term.binder}
    out: set[str] = set()
    for child in _children(term):
        out |= free_identifiers(child)
    return out


def fresh_name(base: str, used: set[str]) -> str:
    name = base
    while name in used:
        name += "'"
    return name


def substitute(term: Term, name: str, replacement: Term) -> Term:
    """Capture-avoiding substitution of replacement for Id(name)."""
    if isinstance(term, Id):
        return replacement if term.name == name else term
    if isinstance(term, (Skip, Div, Num)):
        return term
    if isinstance(term, (Lam, NewVar, NewSem)):
        if term.binder == name:
            return term
        if term.binder in free_identifiers(replacement):
            used = free_identifiers(term.body) | free_identifiers(replacement) | {name}
            nb = fresh_name(term.binder, used)
            body = substitute(term.body, term.binder, Id(nb))
            term = _rebind(term, nb, body)
        return _rebind(term, term.binder, substitute(term.body, name, replacement))
    kids = tuple(substitute(c, name, replacement) for c in _children(term))
    return _rebuild(term, kids)


def _rebind(term: Term, binder: str, body: Term) -> Term:
    if isinstance(term, Lam):
        return Lam(binder, term.binderType, body)
    if isinstance(term, NewVar):
        return NewVar(binder, term.init, body)
    return NewSem(binder, term.init, body)


def _rebuild(term: Term, kids: tuple[Term, ...]) -> Term:
    if isinstance(term, Op):
        return Op(term.opName, kids[0])
    if isinstance(term, Seq):
        return Seq(*kids)
    if isinstance(term, Par):
        return Par(*kids)
    if isinstance(term, Cond):
        return Cond(*kids)
    if isinstance(term, While):
        return While(*kids)
    if isinstance(term, App):
        return App(*kids)
    if isinstance(term, Assign):
        return Assign(*kids)
    if isinstance(term, Deref):
        return Deref(kids[0])
    if isinstance(term, Grab):
        return Grab(kids[0])
    if isinstance(term, Release):
        return Release(kids[0])
    raise TypeError(f"not rebuildable: {term!r}")


def _beta(term: Term) -> Term:
    """One full bottom-up pass of beta reduction; iterate to a fixpoint."""
    if isinstance(term, (Skip, Div, Num, Id)):
        return term
    if isinstance(term, (Lam, NewVar, NewSem)):
        return _rebind(term, term.binder, _beta(term.body))
    if isinstance(term, App):
        fun = _beta(term.fun)
        arg = _beta(term.arg)
        if isinstance(fun, Lam):
            return _beta(substitute(fun.body, fun.binder, arg))
        return App(fun, arg)
    return _rebuild(term, tuple(_beta(c) for c in _children(term)))


def _spine(term: Term) -> tuple[Term, list[Term]]:
    args: list[Term] = []
    while isinstance(term, App):
        args.append(term.arg)
        term = term.fun
    args.reverse()
    return term, args


def _eta(ctx: Context, term: Term, ty: Type) -> Term:
    """Eta-long form of a beta-normal term at the given type."""
    if isinstance(ty, Arrow):
        if isinstance(term, Lam):
            inner = ctx.extend(term.binder, term.binderType)
            return Lam(term.binder, term.binderType, _eta(inner, term.body, ty.result))
        z = fresh_name("z", free_identifiers(term) | set(ctx.names()))
        inner = ctx.extend(z, ty.arg)
        return Lam(z, ty.arg, _eta(inner, App(term, Id(z)), ty.result))
    # base type: walk the application spine
    head, args = _spine(term)
    if isinstance(head, Div):
        # a divergent head absorbs its arguments
        return Div(ty)
    if args:
        assert isinstance(head, Id), f"beta-normal spine head must be an identifier, got {head!r}"
        head_ty = ctx.lookup(head.name)
        assert head_ty is not None
        out: Term = head
        for arg in args:
            assert isinstance(head_ty, Arrow)
            out = App(out, _eta(ctx, arg, head_ty.arg))
            head_ty = head_ty.result
        return out
    if isinstance(term, Id):
        return term
    if isinstance(term, (Skip, Num)):
        return term
    if isinstance(term, Op):
        return Op(term.opName, _eta(ctx, term.arg, EXP))
    if isinstance(term, Seq):
        return Seq(_eta(ctx, term.first, COM), _eta(ctx, term.second, ty))
    if isinstance(term, Par):
        return Par(_eta(ctx, term.left, COM), _eta(ctx, term.right, COM))
    if isinstance(term, Cond):
        return Cond(_eta(ctx, term.guard, EXP), _eta(ctx, term.thenBranch, ty), _eta(ctx, term.elseBranch, ty))
    if isinstance(term, While):
        return While(_eta(ctx, term.guard, EXP), _eta(ctx, term.body, COM))
    if isinstance(term, Assign):
        return Assign(_eta(ctx, term.target, VAR), _eta(ctx, term.value, EXP))
    if isinstance(term, Deref):
        return Deref(_eta(ctx, term.arg, VAR))
    if isinstance(term, NewVar):
        inner = ctx.extend(term.binder, VAR)
        return NewVar(term.binder, term.init, _eta(inner, term.body, ty))
    if isinstance(term, NewSem):
        inner = ctx.extend(term.binder, SEM)
        return NewSem(term.binder, term.init, _eta(inner, term.body, ty))
    if isinstance(term, Grab):
        return Grab(_eta(ctx, term.arg, SEM))
    if isinstance(term, Release):
        return Release(_eta(ctx, term.arg, SEM))
    raise TypeError(f"cannot eta-expand {term!r} at {ty}")


def normalize(ctx: Context, term: Term) -> Term:
    """Beta-normal eta-long form; preserves the type."""
    ty = typecheck(ctx, term)
    reduced = _beta(term)
    while True:
        again = _beta(reduced)
        if again == reduced:
            break
        reduced = again
    return _eta(ctx, reduced, ty)
