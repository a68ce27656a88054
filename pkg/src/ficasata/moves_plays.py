"""Tagged move alphabets, polarity, justified plays, and word decoding.

A Letter is a base move plus an occurrence path and a justifier index rho.
The path is empty for moves of the result type, or a context identifier
followed by argument indices; every path element crosses one arrow and flips
O/P once. Q/A comes from the base move alone.

Base arenas (all questions initial, all O at path ε):

    com   run / done
    exp   q / i
    var   read / i   and   write(i) / ok
    sem   grab / ok[grab]   and   release / ok[release]

The two sem answers are distinct letters via the flavor field; var's ok is a
single letter.

Plays are sequences of (letter, justifier index or None). Legality =
justified-sequence structure + FORK (justifiers pending) + WAIT (an answered
question has all its questions answered). Words pair letters with data values;
decode rebuilds pointers: an answer points to the question that introduced its
datum, a question with index rho to the question that introduced the
(rho+1)-fold predecessor of its datum.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .config import max_value
from .fica_syntax import Base, COM, EXP, SEM, VAR, Context, Type, arg_types, base_result

# ======================================================================
# Letters
# ======================================================================

PathElem = "str | int"


@dataclass(frozen=True)
class Letter:
    move: str
    path: tuple = ()
    rho: int = 0
    flavor: str | None = None  # 'grab' | 'release' on sem answers only

    def __repr__(self) -> str:
        return format_letter(self)

    def strip_rho(self) -> "Letter":
        return Letter(self.move, self.path, 0, self.flavor)


def is_question_move(move: str) -> bool:
    return move in ("run", "q", "read", "grab", "release") or move.startswith("write(")


def is_answer_move(move: str) -> bool:
    return move in ("done", "ok") or move.isdigit()


def polarity(letter: Letter) -> str:
    """One of OQ, PQ, OA, PA."""
    qa = "Q" if is_question_move(letter.move) else "A"
    o_side = (qa == "Q")  # base questions are O, base answers are P
    if len(letter.path) % 2 == 1:
        o_side = not o_side
    return ("O" if o_side else "P") + qa


def is_o_letter(letter: Letter) -> bool:
    return polarity(letter)[0] == "O"


def answer_matches(question: Letter, answer: Letter) -> bool:
    """Does the answer's base move close the question's base move?"""
    q, a = question.move, answer.move
    if q == "run":
        return a == "done"
    if q in ("q", "read"):
        return a.isdigit()
    if q.startswith("write("):
        return a == "ok" and answer.flavor is None
    if q in ("grab", "release"):
        return a == "ok" and answer.flavor == q
    return False


# ----------------------------------------------------------------------
# textual form: move^{path,rho}; rho omitted when 0; bare move for ε path
# ----------------------------------------------------------------------


def format_letter(letter: Letter) -> str:
    s = letter.move
    if letter.flavor:
        s += f"[{letter.flavor}]"
    if letter.path or letter.rho:
        pth = ".".join(str(e) for e in letter.path) if letter.path else "ε"
        tag = pth + (f",{letter.rho}" if letter.rho else "")
        s += "^{" + tag + "}"
    return s


_LETTER_RE = re.compile(
    r"^(?P<move>run|done|q|read|grab|release|ok|\d+|write\(\d+\))"
    r"(\[(?P<flavor>grab|release)\])?"
    r"(\^\{(?P<tag>[^}]*)\})?$"
)


def parse_letter(text: str) -> Letter:
    m = _LETTER_RE.match(text.strip())
    if not m:
        raise ValueError(f"unreadable letter {text!r}")
    path: tuple = ()
    rho = 0
    tag = m.group("tag")
    if tag:
        parts = tag.split(",")
        if len(parts) > 2:
            raise ValueError(f"unreadable tag in {text!r}")
        if len(parts) == 2:
            rho = int(parts[1])
        if parts[0] not in ("ε", "e", ""):
            path = tuple(int(e) if e.isdigit() else e for e in parts[0].split("."))
    return Letter(m.group("move"), path, rho, m.group("flavor"))


def letter_sort_key(letter: Letter):
    return (
        len(letter.path),
        tuple(str(e) for e in letter.path),
        0 if is_question_move(letter.move) else 1,
        letter.move,
        letter.flavor or "",
        letter.rho,
    )


# ======================================================================
# Alphabets
# ======================================================================


def _base_moves(b: Base) -> list[tuple[str, str | None]]:
    if b == COM:
        return [("run", None), ("done", None)]
    if b == EXP:
        return [("q", None)] + [(str(i), None) for i in range(max_value() + 1)]
    if b == VAR:
        return (
            [("read", None)]
            + [(str(i), None) for i in range(max_value() + 1)]
            + [(f"write({i})", None) for i in range(max_value() + 1)]
            + [("ok", None)]
        )
    if b == SEM:
        return [("grab", None), ("release", None), ("ok", "grab"), ("ok", "release")]
    raise ValueError(f"not a base type: {b}")


def initial_question_moves(b: Base) -> list[str]:
    return [m for m, _ in _base_moves(b) if is_question_move(m)]


def answer_moves(b: Base, question: str) -> list[tuple[str, str | None]]:
    """The (move, flavor) answers closing the given base question."""
    return [
        (m, fl)
        for m, fl in _base_moves(b)
        if not is_question_move(m) and answer_matches(Letter(question), Letter(m, flavor=fl))
    ]


def _type_moves(ty: Type, prefix: tuple) -> list[tuple[str, tuple, str | None]]:
    out = []
    args = arg_types(ty)
    l = len(args)
    for u in range(1, l + 1):
        out.extend(_type_moves(args[l - u], prefix + (u,)))
    for m, fl in _base_moves(base_result(ty)):
        out.append((m, prefix, fl))
    return out


def alphabet(ctx: Context, ty: Type, rhoBound: int) -> set[Letter]:
    """All letters of the tagged alphabet with rho up to the bound."""
    base: list[tuple[str, tuple, str | None]] = []
    for name, t in ctx:
        base.extend(_type_moves(t, (name,)))
    base.extend(_type_moves(ty, ()))
    return {
        Letter(m, path, rho, fl)
        for m, path, fl in base
        for rho in range(rhoBound + 1)
    }


# ======================================================================
# Plays
# ======================================================================

# a play is a tuple of (Letter, justifier index or None)
Play = tuple


def play_defects(play: Play) -> list[str]:
    """Structural, FORK, and WAIT violations, each naming the offending prefix."""
    defects: list[str] = []
    answered: dict[int, int] = {}  # question position -> answering position
    justified_questions: dict[int, list[int]] = {}  # question position -> questions under it
    for p, (letter, j) in enumerate(play):
        if p == 0:
            if j is not None:
                defects.append("prefix 1: first move must be unjustified")
            if polarity(letter) != "OQ":
                defects.append("prefix 1: first move must be an O-question")
            continue
        if j is None:
            defects.append(f"prefix {p + 1}: non-initial move lacks a justifier")
            continue
        if not 0 <= j < p:
            defects.append(f"prefix {p + 1}: justifier {j} does not precede the move")
            continue
        jl = play[j][0]
        if not is_question_move(jl.move):
            defects.append(f"prefix {p + 1}: justifier is not a question")
            continue
        if is_question_move(letter.move):
            if not letter.path or letter.path[:-1] != jl.path:
                defects.append(f"prefix {p + 1}: question enabling violated ({letter} under {jl})")
            if j in answered:
                defects.append(f"prefix {p + 1}: FORK violated, justifier already answered")
            justified_questions.setdefault(j, []).append(p)
        else:
            if letter.path != jl.path or not answer_matches(jl, letter):
                defects.append(f"prefix {p + 1}: answer enabling violated ({letter} against {jl})")
            if j in answered:
                defects.append(f"prefix {p + 1}: FORK violated, question already answered")
            else:
                for q in justified_questions.get(j, []):
                    if q not in answered:
                        defects.append(f"prefix {p + 1}: WAIT violated, question at {q + 1} still open")
                answered[j] = p
    return defects


def check_play(play: Play) -> bool:
    return not play_defects(play)


def is_complete(play: Play) -> bool:
    """Every question answered."""
    answered = {j for _, j in play if j is not None}
    for p, (letter, _) in enumerate(play):
        if is_question_move(letter.move):
            if not any(
                jq == p and not is_question_move(l.move) for l, jq in play
            ):
                return False
    return True


def swap_successors(play: Play) -> set:
    """Plays one allowed adjacent swap below: O-moves travel left, P-moves right."""
    out = set()
    for i in range(len(play) - 1):
        (a, ja), (b, jb) = play[i], play[i + 1]
        if not (is_o_letter(b) or not is_o_letter(a)):
            continue  # would move a P-move left past an O-move
        if jb == i:
            continue  # pointer would invert

        def remap(j):
            if j == i:
                return i + 1
            if j == i + 1:
                return i
            return j

        body = play[:i] + ((b, jb), (a, ja)) + play[i + 2:]
        swapped = tuple((l, None if j is None else remap(j)) for l, j in body)
        if check_play(swapped):
            out.add(swapped)
    return out


def swap_closure(play: Play, limit: int = 100000) -> set:
    """All plays reachable by allowed swaps (the down-set under the preorder)."""
    seen = {play}
    frontier = [play]
    while frontier:
        p = frontier.pop()
        for s in swap_successors(p):
            if s not in seen:
                if len(seen) >= limit:
                    raise RuntimeError("swap closure too large")
                seen.add(s)
                frontier.append(s)
    return seen


# ======================================================================
# Words over data and decoding
# ======================================================================

# a word is a sequence of (Letter, DataValue)
Word = tuple


class DecodeError(ValueError):
    pass


def decode(word: Word) -> Play:
    """Rebuild justification pointers from data; letters come out with rho 0."""
    intro: dict[int, int] = {}  # datum id -> introducing position
    closed: set[int] = set()  # datum ids already answered
    out: list[tuple[Letter, int | None]] = []
    for p, (letter, d) in enumerate(word):
        if is_question_move(letter.move):
            if d.id in intro:
                raise DecodeError(f"position {p}: datum {d} reused by a question")
            intro[d.id] = p
            target = d.pred(letter.rho + 1)
            if target is None:
                if letter.rho == 0 and d.parent is None:
                    j = None
                else:
                    raise DecodeError(f"position {p}: rho {letter.rho} exceeds the ancestor chain of {d}")
            else:
                if target.id not in intro:
                    raise DecodeError(f"position {p}: justifying datum {target} never introduced")
                j = intro[target.id]
        else:
            if d.id not in intro:
                raise DecodeError(f"position {p}: answer on fresh datum {d}")
            if d.id in closed:
                raise DecodeError(f"position {p}: datum {d} occurs more than twice")
            closed.add(d.id)
            j = intro[d.id]
        out.append((letter.strip_rho(), j))
    return tuple(out)
