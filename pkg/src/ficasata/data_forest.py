"""Data values: an infinite forest with a predecessor map.

Every datum has a level (its depth; roots sit at level 0) and an optional
parent one level up. Two data values are independent when neither lies on
the other's ancestor chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class DataValue:
    """One node of the forest. Identity is the id; parent is None for roots."""

    id: int
    parent: DataValue | None
    level: int

    def pred(self, k: int = 1) -> DataValue | None:
        """k-fold parent, None once the chain runs out."""
        d: DataValue | None = self
        for _ in range(k):
            if d is None:
                return None
            d = d.parent
        return d

    def ancestors(self) -> list[DataValue]:
        """Strict ancestors, nearest first."""
        out = []
        d = self.parent
        while d is not None:
            out.append(d)
            d = d.parent
        return out

    def __repr__(self) -> str:
        return f"d{self.id}"


@dataclass
class Allocator:
    """Hands out fresh data values; ids are unique per allocator."""

    _next: int = 0

    def fresh_root(self) -> DataValue:
        return self.fresh_child(None)

    def fresh_child(self, parent: DataValue | None) -> DataValue:
        level = 0 if parent is None else parent.level + 1
        d = DataValue(self._next, parent, level)
        self._next += 1
        return d


def independent(d1: DataValue, d2: DataValue) -> bool:
    """Neither datum is an ancestor-or-self of the other."""
    if d1.level > d2.level:
        d1, d2 = d2, d1
    # d1 is the shallower one; only it can be an ancestor.
    d: DataValue | None = d2
    while d is not None and d.level >= d1.level:
        if d is d1 or d.id == d1.id:
            return False
        d = d.parent
    return True
