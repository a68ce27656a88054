"""Saturating automata over a data forest: definition, configuration
semantics, bounded trace/language search, and the saturation checker.

An automaton is ⟨Σ, k, N, C, δ⟩: a polarity-partitioned alphabet, a depth
bound, a per-node memory width, level-partitioned control states, and six
transition families. Configurations are trees of data values: even-level
nodes carry a multiset of even states plus an N-vector of values, odd-level
nodes carry a single odd state.

Firing rules (levels written on the transition):

  addEven(0)    † --t--> D         pre: nothing seen yet; makes the root,
                                   label D, memory all zero
  addEven(2i)   c --t--> D         pre: an alive odd parent labelled exactly c;
                                   new child labelled D, memory all zero;
                                   the parent keeps c (copies may respawn)
  addOdd(2i+1)  c --t--> d         pre: alive even parent with c in its label;
                                   c is removed from the parent, child gets d
  delOdd(2i+1)  c --t--> d         pre: alive odd leaf labelled c; the leaf
                                   dies, d joins the parent's multiset
  delEven(2i)   D --t--> †         pre: alive even leaf labelled EXACTLY D;
                                   the leaf dies; labels are never collected
  epsEven(2i)   D --> E            pre: D below the node's label; rewrites
                                   label to (label - D) + E
  epsMem(2i,2j) (cell,v->v') c->d  pre: c in the node's label and the level-2j
                                   ancestor's cell holds v (wildcard: any);
                                   swaps c for d and writes v'

Removed nodes keep their label and memory (no garbage collection); the seen
set D only ever grows, so the root rule fires at most once per run. A
configuration accepts when no node is alive.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Union

from .config import max_value
from .data_forest import Allocator
from .moves_plays import (
    Letter, format_letter, is_question_move, letter_sort_key, polarity,
)

# ======================================================================
# Multisets of control states
# ======================================================================


@dataclass(frozen=True)
class MSet:
    """Finite multiset of state names; canonical sorted item tuple."""

    items: tuple[tuple[str, int], ...] = ()

    @staticmethod
    def of(*states: str) -> "MSet":
        counts: dict[str, int] = {}
        for s in states:
            counts[s] = counts.get(s, 0) + 1
        return MSet(tuple(sorted(counts.items())))

    @staticmethod
    def from_counts(counts: dict[str, int]) -> "MSet":
        return MSet(tuple(sorted((s, n) for s, n in counts.items() if n > 0)))

    def count(self, state: str) -> int:
        for s, n in self.items:
            if s == state:
                return n
        return 0

    def __contains__(self, state: str) -> bool:
        return self.count(state) > 0

    def states(self) -> list[str]:
        return [s for s, _ in self.items]

    def total(self) -> int:
        return sum(n for _, n in self.items)

    def below(self, other: "MSet") -> bool:
        """Pointwise at most (multiset inclusion)."""
        return all(other.count(s) >= n for s, n in self.items)

    def plus(self, other: "MSet") -> "MSet":
        counts = dict(self.items)
        for s, n in other.items:
            counts[s] = counts.get(s, 0) + n
        return MSet.from_counts(counts)

    def minus(self, other: "MSet") -> "MSet":
        """Truncated subtraction."""
        counts = dict(self.items)
        for s, n in other.items:
            counts[s] = max(0, counts.get(s, 0) - n)
        return MSet.from_counts(counts)

    def __repr__(self) -> str:
        return "{" + ", ".join(s if n == 1 else f"{s}×{n}" for s, n in self.items) + "}"


# ======================================================================
# Transitions and the automaton
# ======================================================================


@dataclass(frozen=True)
class AddEven:
    level: int  # even; the created node's level
    source: str | None  # odd state of the parent; None at level 0
    letter: Letter  # an O-question
    target: MSet


@dataclass(frozen=True)
class AddOdd:
    level: int  # odd; the created node's level
    source: str  # even state consumed from the parent's label
    letter: Letter  # a P-question
    target: str


@dataclass(frozen=True)
class DelEven:
    level: int  # even; the deleted node's level
    source: MSet  # must equal the node's label exactly
    letter: Letter  # a P-answer


@dataclass(frozen=True)
class DelOdd:
    level: int  # odd
    source: str
    letter: Letter  # an O-answer
    target: str  # joins the parent's label


@dataclass(frozen=True)
class EpsEven:
    level: int  # even
    source: MSet
    target: MSet


@dataclass(frozen=True)
class EpsMem:
    level: int  # even; level of the node whose label rewrites
    memLevel: int  # even, <= level; absolute level of the addressed ancestor
    cell: int  # 1..N
    read: int | None  # None is the wildcard
    write: int
    source: str
    target: str


Transition = Union[AddEven, AddOdd, DelEven, DelOdd, EpsEven, EpsMem]


def _mset_key(ms: MSet):
    return ms.items


def _trans_key(t: Transition):
    if isinstance(t, AddEven):
        return (t.level, t.source or "", format_letter(t.letter), _mset_key(t.target))
    if isinstance(t, AddOdd):
        return (t.level, t.source, format_letter(t.letter), t.target)
    if isinstance(t, DelEven):
        return (t.level, _mset_key(t.source), format_letter(t.letter))
    if isinstance(t, DelOdd):
        return (t.level, t.source, format_letter(t.letter), t.target)
    if isinstance(t, EpsEven):
        return (t.level, _mset_key(t.source), _mset_key(t.target))
    return (t.level, t.memLevel, t.cell, -1 if t.read is None else t.read, t.write, t.source, t.target)


@dataclass(frozen=True)
class Automaton:
    sigma_oq: frozenset[Letter]
    sigma_pq: frozenset[Letter]
    sigma_oa: frozenset[Letter]
    sigma_pa: frozenset[Letter]
    k: int
    N: int
    states: tuple[frozenset[str], ...]  # index = level, length k+1
    addEven: tuple[AddEven, ...]
    addOdd: tuple[AddOdd, ...]
    delEven: tuple[DelEven, ...]
    delOdd: tuple[DelOdd, ...]
    epsEven: tuple[EpsEven, ...]
    epsMem: tuple[EpsMem, ...]

    def sigma(self) -> frozenset[Letter]:
        return self.sigma_oq | self.sigma_pq | self.sigma_oa | self.sigma_pa

    def p_letters(self) -> frozenset[Letter]:
        return self.sigma_pq | self.sigma_pa

    def o_letters(self) -> frozenset[Letter]:
        return self.sigma_oq | self.sigma_oa

    def all_states(self) -> list[str]:
        return [s for level in self.states for s in sorted(level)]

    def transitions(self) -> list[Transition]:
        return [*self.addEven, *self.addOdd, *self.delEven, *self.delOdd, *self.epsEven, *self.epsMem]


def make_automaton(
    *,
    sigma_oq: Iterable[Letter],
    sigma_pq: Iterable[Letter],
    sigma_oa: Iterable[Letter],
    sigma_pa: Iterable[Letter],
    k: int,
    N: int,
    states: Iterable[Iterable[str]],
    addEven: Iterable[AddEven] = (),
    addOdd: Iterable[AddOdd] = (),
    delEven: Iterable[DelEven] = (),
    delOdd: Iterable[DelOdd] = (),
    epsEven: Iterable[EpsEven] = (),
    epsMem: Iterable[EpsMem] = (),
) -> Automaton:
    """Freeze and deterministically order the pieces."""
    return Automaton(
        frozenset(sigma_oq), frozenset(sigma_pq), frozenset(sigma_oa), frozenset(sigma_pa),
        k, N,
        tuple(frozenset(level) for level in states),
        tuple(sorted(addEven, key=_trans_key)),
        tuple(sorted(addOdd, key=_trans_key)),
        tuple(sorted(delEven, key=_trans_key)),
        tuple(sorted(delOdd, key=_trans_key)),
        tuple(sorted(epsEven, key=_trans_key)),
        tuple(sorted(epsMem, key=_trans_key)),
    )


# ======================================================================
# Validation
# ======================================================================


def validate(aut: Automaton) -> list[str]:
    """Partition and level defects; empty list means well-formed."""
    defects: list[str] = []
    if len(aut.states) != aut.k + 1:
        defects.append(f"states tuple has {len(aut.states)} levels, expected k+1 = {aut.k + 1}")
        return defects

    seen_states: dict[str, int] = {}
    for level, group in enumerate(aut.states):
        for s in group:
            if s in seen_states:
                defects.append(f"state {s} appears at levels {seen_states[s]} and {level}")
            seen_states[s] = level

    classes = [("OQ", aut.sigma_oq), ("PQ", aut.sigma_pq), ("OA", aut.sigma_oa), ("PA", aut.sigma_pa)]
    for name, letters in classes:
        for letter in letters:
            if polarity(letter) != name:
                defects.append(f"letter {letter} in sigma_{name} has polarity {polarity(letter)}")
    for (n1, l1), (n2, l2) in [(a, b) for a in classes for b in classes if a[0] < b[0]]:
        overlap = l1 & l2
        if overlap:
            defects.append(f"sigma_{n1} and sigma_{n2} overlap: {sorted(map(str, overlap))}")

    def has(level: int, s: str) -> bool:
        return 0 <= level <= aut.k and s in aut.states[level]

    for t in aut.addEven:
        if t.level % 2 or not 0 <= t.level <= aut.k:
            defects.append(f"addEven at bad level {t.level}")
            continue
        if (t.source is None) != (t.level == 0):
            defects.append(f"addEven level {t.level} source must be † exactly at level 0")
        if t.source is not None and not has(t.level - 1, t.source):
            defects.append(f"addEven source {t.source} not a level-{t.level - 1} state")
        if t.letter not in aut.sigma_oq:
            defects.append(f"addEven letter {t.letter} not an O-question")
        for s in t.target.states():
            if not has(t.level, s):
                defects.append(f"addEven target state {s} not at level {t.level}")
    for t in aut.addOdd:
        if t.level % 2 == 0 or not 1 <= t.level <= aut.k:
            defects.append(f"addOdd at bad level {t.level}")
            continue
        if not has(t.level - 1, t.source):
            defects.append(f"addOdd source {t.source} not a level-{t.level - 1} state")
        if not has(t.level, t.target):
            defects.append(f"addOdd target {t.target} not a level-{t.level} state")
        if t.letter not in aut.sigma_pq:
            defects.append(f"addOdd letter {t.letter} not a P-question")
    for t in aut.delEven:
        if t.level % 2 or not 0 <= t.level <= aut.k:
            defects.append(f"delEven at bad level {t.level}")
            continue
        if t.letter not in aut.sigma_pa:
            defects.append(f"delEven letter {t.letter} not a P-answer")
        for s in t.source.states():
            if not has(t.level, s):
                defects.append(f"delEven source state {s} not at level {t.level}")
    for t in aut.delOdd:
        if t.level % 2 == 0 or not 1 <= t.level <= aut.k:
            defects.append(f"delOdd at bad level {t.level}")
            continue
        if not has(t.level, t.source):
            defects.append(f"delOdd source {t.source} not a level-{t.level} state")
        if not has(t.level - 1, t.target):
            defects.append(f"delOdd target {t.target} not a level-{t.level - 1} state")
        if t.letter not in aut.sigma_oa:
            defects.append(f"delOdd letter {t.letter} not an O-answer")
    for t in aut.epsEven:
        if t.level % 2 or not 0 <= t.level <= aut.k:
            defects.append(f"epsEven at bad level {t.level}")
            continue
        for s in t.source.states() + t.target.states():
            if not has(t.level, s):
                defects.append(f"epsEven state {s} not at level {t.level}")
    for t in aut.epsMem:
        if t.level % 2 or not 0 <= t.level <= aut.k:
            defects.append(f"epsMem at bad level {t.level}")
            continue
        if t.memLevel % 2 or t.memLevel > t.level or t.memLevel < 0:
            defects.append(f"epsMem memory level {t.memLevel} above node level {t.level}")
        if not 1 <= t.cell <= aut.N:
            defects.append(f"epsMem cell {t.cell} outside 1..{aut.N}")
        if t.read is not None and not 0 <= t.read <= max_value():
            defects.append(f"epsMem read value {t.read} out of range")
        if not 0 <= t.write <= max_value():
            defects.append(f"epsMem write value {t.write} out of range")
        if not has(t.level, t.source) or not has(t.level, t.target):
            defects.append(f"epsMem states {t.source}/{t.target} not at level {t.level}")
    return defects


# ======================================================================
# Configurations
# ======================================================================


@dataclass(frozen=True)
class NodeInfo:
    parent: int | None
    level: int
    label: object  # MSet at even levels, str at odd levels
    memory: tuple[int, ...] | None  # even levels only


@dataclass(frozen=True)
class Configuration:
    """Seen data (all of info), the alive subtree, labels, memory, and
    per-(parent, letter) spawn counters used by bounded search."""

    info: tuple[tuple[int, NodeInfo], ...] = ()  # sorted by datum id
    alive: frozenset[int] = frozenset()
    spawns: tuple[tuple[int, str, int], ...] = ()  # (parent id or -1, letter text, count)

    def node(self, datum: int) -> NodeInfo:
        for d, ni in self.info:
            if d == datum:
                return ni
        raise KeyError(f"datum {datum} never seen")

    def seen(self) -> frozenset[int]:
        return frozenset(d for d, _ in self.info)

    def accepting(self) -> bool:
        return not self.alive

    def alive_children(self, datum: int) -> list[int]:
        return [d for d in sorted(self.alive) if self.node(d).parent == datum]

    def is_leaf(self, datum: int) -> bool:
        return not any(self.node(d).parent == datum for d in self.alive)

    def spawn_count(self, parent: int, letter: Letter) -> int:
        text = format_letter(letter)
        for p, l, n in self.spawns:
            if p == parent and l == text:
                return n
        return 0

    def _with_node(self, datum: int, ni: NodeInfo) -> "Configuration":
        rest = tuple((d, x) for d, x in self.info if d != datum)
        return replace(self, info=tuple(sorted(rest + ((datum, ni),))))

    def next_datum(self) -> int:
        return max((d for d, _ in self.info), default=-1) + 1


EMPTY_CONFIGURATION = Configuration()


@dataclass(frozen=True)
class Instance:
    """A transition with its chosen node: the created datum and parent for
    ADDs, the acted-on datum for DELs and EPSs."""

    trans: Transition
    datum: int
    parent: int | None = None


class NotEnabledError(Exception):
    pass


def _require(cond: bool, why: str) -> None:
    if not cond:
        raise NotEnabledError(why)


def fire(aut: Automaton, cfg: Configuration, inst: Instance) -> Configuration:
    """Apply one enabled instance; raises NotEnabledError naming the failure."""
    t = inst.trans
    if isinstance(t, AddEven):
        _require(inst.datum not in cfg.seen(), f"datum {inst.datum} already seen")
        if t.level == 0:
            _require(inst.parent is None, "root transition takes no parent")
            _require(not cfg.info, "root rule needs an empty history")
        else:
            _require(inst.parent is not None, "non-root add needs a parent")
            _require(inst.parent in cfg.alive, f"parent {inst.parent} not alive")
            pn = cfg.node(inst.parent)
            _require(pn.level == t.level - 1, f"parent at level {pn.level}, need {t.level - 1}")
            _require(pn.label == t.source, f"parent labelled {pn.label}, need {t.source}")
        ni = NodeInfo(inst.parent, t.level, t.target, (0,) * aut.N)
        key = -1 if inst.parent is None else inst.parent
        text = format_letter(t.letter)
        counts = {(p, l): n for p, l, n in cfg.spawns}
        counts[(key, text)] = counts.get((key, text), 0) + 1
        spawns = tuple(sorted((p, l, n) for (p, l), n in counts.items()))
        new = replace(cfg, info=tuple(sorted(cfg.info + ((inst.datum, ni),))),
                      alive=cfg.alive | {inst.datum}, spawns=spawns)
        return new
    if isinstance(t, AddOdd):
        _require(inst.datum not in cfg.seen(), f"datum {inst.datum} already seen")
        _require(inst.parent is not None and inst.parent in cfg.alive, "parent not alive")
        pn = cfg.node(inst.parent)
        _require(pn.level == t.level - 1, f"parent at level {pn.level}, need {t.level - 1}")
        _require(t.source in pn.label, f"parent label {pn.label} lacks {t.source}")
        ni = NodeInfo(inst.parent, t.level, t.target, None)
        cfg2 = cfg._with_node(inst.parent, replace(pn, label=pn.label.minus(MSet.of(t.source))))
        return replace(cfg2, info=tuple(sorted(cfg2.info + ((inst.datum, ni),))),
                       alive=cfg2.alive | {inst.datum})
    if isinstance(t, DelEven):
        _require(inst.datum in cfg.alive, f"datum {inst.datum} not alive")
        n = cfg.node(inst.datum)
        _require(n.level == t.level, f"node at level {n.level}, need {t.level}")
        _require(cfg.is_leaf(inst.datum), "only leaves can be removed")
        _require(n.label == t.source, f"label {n.label} differs from {t.source}")
        return replace(cfg, alive=cfg.alive - {inst.datum})
    if isinstance(t, DelOdd):
        _require(inst.datum in cfg.alive, f"datum {inst.datum} not alive")
        n = cfg.node(inst.datum)
        _require(n.level == t.level, f"node at level {n.level}, need {t.level}")
        _require(cfg.is_leaf(inst.datum), "only leaves can be removed")
        _require(n.label == t.source, f"label {n.label} differs from {t.source}")
        assert n.parent is not None
        pn = cfg.node(n.parent)
        cfg2 = cfg._with_node(n.parent, replace(pn, label=pn.label.plus(MSet.of(t.target))))
        return replace(cfg2, alive=cfg2.alive - {inst.datum})
    if isinstance(t, EpsEven):
        _require(inst.datum in cfg.alive, f"datum {inst.datum} not alive")
        n = cfg.node(inst.datum)
        _require(n.level == t.level, f"node at level {n.level}, need {t.level}")
        _require(t.source.below(n.label), f"label {n.label} lacks {t.source}")
        label = n.label.minus(t.source).plus(t.target)
        return cfg._with_node(inst.datum, replace(n, label=label))
    if isinstance(t, EpsMem):
        _require(inst.datum in cfg.alive, f"datum {inst.datum} not alive")
        n = cfg.node(inst.datum)
        _require(n.level == t.level, f"node at level {n.level}, need {t.level}")
        _require(t.source in n.label, f"label {n.label} lacks {t.source}")
        hops = (t.level - t.memLevel) // 2 * 2
        anc = inst.datum
        for _ in range(hops):
            parent = cfg.node(anc).parent
            _require(parent is not None, "memory ancestor missing")
            anc = parent
        an = cfg.node(anc)
        assert an.memory is not None
        held = an.memory[t.cell - 1]
        _require(t.read is None or held == t.read, f"cell {t.cell} holds {held}, need {t.read}")
        label = n.label.minus(MSet.of(t.source)).plus(MSet.of(t.target))
        cfg2 = cfg._with_node(inst.datum, replace(n, label=label))
        an2 = cfg2.node(anc)
        assert an2.memory is not None
        memory = an2.memory[: t.cell - 1] + (t.write,) + an2.memory[t.cell :]
        return cfg2._with_node(anc, replace(an2, memory=memory))
    raise TypeError(f"not a transition: {t!r}")


# ======================================================================
# Enabled-instance enumeration
# ======================================================================


def enabled_labelled(aut: Automaton, cfg: Configuration) -> list[Instance]:
    """All enabled ADD/DEL instances, deterministically ordered. ADD
    instances take the next unused datum id."""
    out: list[Instance] = []
    nxt = cfg.next_datum()
    for t in aut.addEven:
        if t.level == 0:
            if not cfg.info:
                out.append(Instance(t, nxt, None))
            continue
        for d in sorted(cfg.alive):
            n = cfg.node(d)
            if n.level == t.level - 1 and n.label == t.source:
                out.append(Instance(t, nxt, d))
    for t in aut.addOdd:
        for d in sorted(cfg.alive):
            n = cfg.node(d)
            if n.level == t.level - 1 and t.source in n.label:
                out.append(Instance(t, nxt, d))
    for t in aut.delEven:
        for d in sorted(cfg.alive):
            n = cfg.node(d)
            if n.level == t.level and n.label == t.source and cfg.is_leaf(d):
                out.append(Instance(t, d))
    for t in aut.delOdd:
        for d in sorted(cfg.alive):
            n = cfg.node(d)
            if n.level == t.level and n.label == t.source and cfg.is_leaf(d):
                out.append(Instance(t, d))
    return out


def enabled_silent(aut: Automaton, cfg: Configuration) -> list[Instance]:
    """All enabled ε instances (epsEven and epsMem)."""
    out: list[Instance] = []
    for t in aut.epsEven:
        for d in sorted(cfg.alive):
            n = cfg.node(d)
            if n.level == t.level and t.source.below(n.label):
                out.append(Instance(t, d))
    for t in aut.epsMem:
        for d in sorted(cfg.alive):
            n = cfg.node(d)
            if n.level != t.level or t.source not in n.label:
                continue
            hops = (t.level - t.memLevel) // 2 * 2
            anc: int | None = d
            for _ in range(hops):
                anc = cfg.node(anc).parent
                if anc is None:
                    break
            if anc is None:
                continue
            mem = cfg.node(anc).memory
            if mem is None:
                continue
            if t.read is None or mem[t.cell - 1] == t.read:
                out.append(Instance(t, d))
    return out


# ======================================================================
# Canonical words
# ======================================================================


@dataclass(frozen=True)
class CanonWord:
    """A word over Σ × data, with each datum renamed to the position of its
    introducing question. parents maps an introduction position to the
    introduction position of the datum's predecessor (-1 at the roots)."""

    letters: tuple[tuple[Letter, int], ...] = ()
    parents: tuple[tuple[int, int], ...] = ()

    def parent_of(self, pos: int) -> int:
        for p, q in self.parents:
            if p == pos:
                return q
        raise KeyError(f"position {pos} introduces nothing")

    def extend(self, letter: Letter, parent_pos: int | None) -> "CanonWord":
        """Append a letter; questions get a fresh datum (named by their own
        position), answers must pass the introducing position as parent_pos
        with a negative marker."""
        pos = len(self.letters)
        if is_question_move(letter.move):
            pp = -1 if parent_pos is None else parent_pos
            return CanonWord(self.letters + ((letter, pos),),
                            tuple(sorted(self.parents + ((pos, pp),))))
        assert parent_pos is not None and parent_pos >= 0
        return CanonWord(self.letters + ((letter, parent_pos),), self.parents)

    def __len__(self) -> int:
        return len(self.letters)

    def __repr__(self) -> str:
        return format_word(self)


def format_word(word: CanonWord) -> str:
    if not word.letters:
        return "ε"
    return " ".join(f"({format_letter(l)},{k})" for l, k in word.letters)


def ancestor_positions(word: CanonWord, pos: int) -> list[int]:
    """Introduction positions of the datum at pos and its predecessors."""
    chain = []
    p = word.letters[pos][1]
    while p >= 0:
        chain.append(p)
        p = word.parent_of(p)
    return chain


def data_independent(word: CanonWord, i: int, j: int) -> bool:
    """Neither datum an ancestor of the other (identity included)."""
    ci, cj = ancestor_positions(word, i), ancestor_positions(word, j)
    return ci[0] not in cj and cj[0] not in ci


def swap_positions(word: CanonWord, p: int) -> CanonWord:
    """Exchange positions p and p+1, renaming every reference to the two
    introduction positions so the result is again canonical. Purely
    syntactic; callers check legality."""

    def rename(k: int) -> int:
        if k == p:
            return p + 1
        if k == p + 1:
            return p
        return k

    new_letters = [(l, rename(k)) for l, k in word.letters]
    new_letters[p], new_letters[p + 1] = new_letters[p + 1], new_letters[p]
    new_parents = tuple(sorted((rename(x), rename(y) if y >= 0 else y) for x, y in word.parents))
    return CanonWord(tuple(new_letters), new_parents)


def word_to_data(word: CanonWord):
    """Rebuild the word as (Letter, DataValue) pairs for the play decoder."""
    alloc = Allocator()
    by_pos: dict[int, object] = {}
    out = []
    for idx, (letter, k) in enumerate(word.letters):
        if is_question_move(letter.move):
            pp = word.parent_of(idx)
            d = alloc.fresh_root() if pp < 0 else alloc.fresh_child(by_pos[pp])
            by_pos[idx] = d
            out.append((letter, d))
        else:
            out.append((letter, by_pos[k]))
    return tuple(out)


# ======================================================================
# Canonical configurations (for search memoization)
# ======================================================================


def canonical_config(cfg: Configuration):
    """Shape of the alive forest up to datum renaming, plus the root-seen
    flag (the root rule is history-sensitive)."""

    def shape(d: int):
        n = cfg.node(d)
        label = n.label.items if isinstance(n.label, MSet) else n.label
        kids = tuple(sorted(shape(c) for c in cfg.alive_children(d)))
        spawn = tuple(sorted((l, c) for p, l, c in cfg.spawns if p == d))
        return (label, n.memory, spawn, kids)

    roots = tuple(sorted(shape(d) for d in sorted(cfg.alive) if cfg.node(d).parent not in cfg.alive))
    root_spawn = tuple(sorted((l, c) for p, l, c in cfg.spawns if p == -1))
    return (bool(cfg.info), root_spawn, roots)


# ======================================================================
# Bounded trace and language search
# ======================================================================


@dataclass(frozen=True)
class Bounds:
    maxWordLen: int = 12
    maxCopies: int = 2
    maxEpsChain: int | None = None  # None: unlimited, memoized


@dataclass
class WordSet:
    words: set[CanonWord]
    truncated: bool


def _explore(aut: Automaton, bounds: Bounds) -> tuple[WordSet, WordSet]:
    """Worklist search over (canonical word, configuration) pairs. Returns
    (traces, language); traces hold every reachable labelled word, language
    the accepted ones. truncated reports whether any bound bit. ε chains are
    memoized on configurations when maxEpsChain is None, else cut at the
    given length."""
    reached: set[CanonWord] = {CanonWord()}
    accepted: set[CanonWord] = set()
    truncated = False
    start = (CanonWord(), EMPTY_CONFIGURATION, 0)
    seen = {(start[0], canonical_config(start[1]), 0)}
    frontier: list[tuple[CanonWord, Configuration, int]] = [start]
    bounded_eps = bounds.maxEpsChain is not None
    while frontier:
        word, cfg, chain = frontier.pop()
        if cfg.accepting() and len(word) > 0:
            accepted.add(word)
        steps: list[tuple[CanonWord, Configuration, int]] = []
        for inst in enabled_labelled(aut, cfg):
            t = inst.trans
            if len(word) >= bounds.maxWordLen:
                truncated = True
                continue
            if isinstance(t, (AddEven, AddOdd)):
                key = -1 if inst.parent is None else inst.parent
                if isinstance(t, AddEven) and cfg.spawn_count(key, t.letter) >= bounds.maxCopies:
                    truncated = True
                    continue
                parent_pos = None
                if inst.parent is not None:
                    parent_pos = _intro_position(word, cfg, inst.parent)
                nxt = fire(aut, cfg, inst)
                steps.append((word.extend(t.letter, parent_pos), nxt, 0))
            else:
                intro = _intro_position(word, cfg, inst.datum)
                nxt = fire(aut, cfg, inst)
                steps.append((word.extend(t.letter, intro), nxt, 0))
        for inst in enabled_silent(aut, cfg):
            if bounded_eps and chain >= bounds.maxEpsChain:
                truncated = True
                continue
            steps.append((word, fire(aut, cfg, inst), chain + 1))
        for w, c, n in steps:
            key = (w, canonical_config(c), n if bounded_eps else 0)
            if key in seen:
                continue
            seen.add(key)
            reached.add(w)
            frontier.append((w, c, n))
    return WordSet(reached, truncated), WordSet(accepted, truncated)


def _intro_position(word: CanonWord, cfg: Configuration, datum: int) -> int:
    """Position in the word that introduced this datum. Data are created in
    word order, so the i-th smallest seen datum maps to the i-th question."""
    ordered = sorted(cfg.seen())
    idx = ordered.index(datum)
    questions = [pos for pos, (l, _) in enumerate(word.letters) if is_question_move(l.move)]
    return questions[idx]


def traces(aut: Automaton, bounds: Bounds = Bounds()) -> WordSet:
    return _explore(aut, bounds)[0]


def language(aut: Automaton, bounds: Bounds = Bounds()) -> WordSet:
    return _explore(aut, bounds)[1]


def accepts(aut: Automaton, word: CanonWord, maxEpsChain: int | None = None) -> bool:
    """Is this exact word accepted? Worklist search over configurations that
    realise the word's letters in order, ε-steps interleaved freely."""
    if len(word) == 0:
        return False
    bounded_eps = maxEpsChain is not None
    start = (0, EMPTY_CONFIGURATION, (), 0)
    seen = {(0, canonical_key_concrete(EMPTY_CONFIGURATION, ()), 0)}
    frontier = [start]
    while frontier:
        pos, cfg, datum_of, chain = frontier.pop()
        if pos == len(word):
            if cfg.accepting():
                return True
        nexts: list[tuple[int, Configuration, tuple, int]] = []
        if pos < len(word):
            letter, k = word.letters[pos]
            for inst in enabled_labelled(aut, cfg):
                t = inst.trans
                if format_letter(_letter_of(t)) != format_letter(letter):
                    continue
                if isinstance(t, (AddEven, AddOdd)):
                    want_parent = word.parent_of(pos)
                    have_parent = None if inst.parent is None else _datum_pos(datum_of, inst.parent)
                    if (want_parent if want_parent >= 0 else None) != have_parent:
                        continue
                    nexts.append((pos + 1, fire(aut, cfg, inst), datum_of + ((pos, inst.datum),), 0))
                else:
                    if _datum_pos(datum_of, inst.datum) != k:
                        continue
                    nexts.append((pos + 1, fire(aut, cfg, inst), datum_of, 0))
        for inst in enabled_silent(aut, cfg):
            if bounded_eps and chain >= maxEpsChain:
                continue
            nexts.append((pos, fire(aut, cfg, inst), datum_of, chain + 1))
        for p, c, m, n in nexts:
            key = (p, canonical_key_concrete(c, m), n if bounded_eps else 0)
            if key in seen:
                continue
            seen.add(key)
            frontier.append((p, c, m, n))
    return False


def canonical_key_concrete(cfg: Configuration, datum_of: tuple) -> tuple:
    info = tuple((d, ni.parent, ni.level,
                  ni.label.items if isinstance(ni.label, MSet) else ni.label, ni.memory)
                 for d, ni in cfg.info)
    return (info, cfg.alive, cfg.spawns, datum_of)


def _letter_of(t: Transition) -> Letter:
    return t.letter  # type: ignore[union-attr]


def _datum_pos(datum_of: tuple, datum: int) -> int | None:
    for pos, d in datum_of:
        if d == datum:
            return pos
    return None


# ======================================================================
# Saturation checking
# ======================================================================


@dataclass(frozen=True)
class SaturationViolation:
    word: CanonWord
    position: int
    swapped: CanonWord

    def __repr__(self) -> str:
        return (f"missing swap at {self.position}: {format_word(self.word)}"
                f" needs {format_word(self.swapped)}")


def check_saturated(words: set[CanonWord]) -> list[SaturationViolation]:
    """Closure check: for each word and each adjacent pair on independent
    data where the second letter is O or the first is P, the swapped word
    must be present too."""
    violations: list[SaturationViolation] = []
    o_side = {"OQ", "OA"}
    for word in sorted(words, key=format_word):
        for p in range(len(word) - 1):
            (l1, _), (l2, _) = word.letters[p], word.letters[p + 1]
            if not data_independent(word, p, p + 1):
                continue
            if polarity(l2) in o_side or polarity(l1) not in o_side:
                swapped = swap_positions(word, p)
                if swapped not in words:
                    violations.append(SaturationViolation(word, p, swapped))
    return violations


# ======================================================================
# Serialization
# ======================================================================


def _fmt_mset(ms: MSet) -> str:
    if not ms.items:
        return "{}"
    parts = []
    for s, n in ms.items:
        parts.extend([s] * n)
    return "{" + ", ".join(parts) + "}"


def automaton_to_text(aut: Automaton) -> str:
    lines = [f"k {aut.k}", f"N {aut.N}"]
    for name, letters in [("OQ", aut.sigma_oq), ("PQ", aut.sigma_pq),
                          ("OA", aut.sigma_oa), ("PA", aut.sigma_pa)]:
        shown = " ".join(format_letter(l) for l in sorted(letters, key=letter_sort_key))
        lines.append(f"sigma {name} {shown}".rstrip())
    for level, group in enumerate(aut.states):
        lines.append(f"states {level} " + " ".join(sorted(group)))
    for t in aut.addEven:
        src = "†" if t.source is None else t.source
        lines.append(f"addEven {t.level} {src} --{format_letter(t.letter)}--> {_fmt_mset(t.target)}")
    for t in aut.addOdd:
        lines.append(f"addOdd {t.level} {t.source} --{format_letter(t.letter)}--> {t.target}")
    for t in aut.delEven:
        lines.append(f"delEven {t.level} {_fmt_mset(t.source)} --{format_letter(t.letter)}--> †")
    for t in aut.delOdd:
        lines.append(f"delOdd {t.level} {t.source} --{format_letter(t.letter)}--> {t.target}")
    for t in aut.epsEven:
        lines.append(f"epsEven {t.level} {_fmt_mset(t.source)} --> {_fmt_mset(t.target)}")
    for t in aut.epsMem:
        rd = "?" if t.read is None else str(t.read)
        lines.append(f"epsMem {t.level} mem {t.memLevel} cell {t.cell}"
                     f" read {rd} write {t.write} {t.source} --> {t.target}")
    return "\n".join(lines) + "\n"


def config_to_dot(cfg: Configuration) -> str:
    lines = ["digraph configuration {", "  node [shape=box, fontname=\"monospace\"];"]
    for d, ni in cfg.info:
        label = _fmt_mset(ni.label) if isinstance(ni.label, MSet) else str(ni.label)
        if ni.memory is not None:
            label += " | " + ",".join(map(str, ni.memory))
        style = "solid" if d in cfg.alive else "dashed"
        lines.append(f'  d{d} [label="d{d}: {label}", style={style}];')
    for d, ni in cfg.info:
        if ni.parent is not None:
            lines.append(f"  d{ni.parent} -> d{d};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def reachable_configurations(aut: Automaton, bounds: Bounds = Bounds()) -> tuple[list[Configuration], bool]:
    """Configurations reachable under the bounds, one representative per
    canonical shape, plus whether any bound cut the search. Word length is
    tracked as a plain count of labelled steps."""
    start = EMPTY_CONFIGURATION
    seen = {(0, canonical_config(start))}
    shapes = {canonical_config(start)}
    out = [start]
    truncated = False
    frontier: list[tuple[int, Configuration]] = [(0, start)]
    while frontier:
        n, cfg = frontier.pop()
        steps: list[tuple[int, Configuration]] = []
        for inst in enabled_labelled(aut, cfg):
            if n >= bounds.maxWordLen:
                truncated = True
                continue
            t = inst.trans
            if isinstance(t, AddEven):
                key = -1 if inst.parent is None else inst.parent
                if cfg.spawn_count(key, t.letter) >= bounds.maxCopies:
                    truncated = True
                    continue
            steps.append((n + 1, fire(aut, cfg, inst)))
        for inst in enabled_silent(aut, cfg):
            steps.append((n, fire(aut, cfg, inst)))
        for m, c in steps:
            shape = canonical_config(c)
            key = (m, shape)
            if key in seen:
                continue
            seen.add(key)
            if shape not in shapes:
                shapes.add(shape)
                out.append(c)
            frontier.append((m, c))
    return out, truncated
