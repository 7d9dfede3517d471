"""Shared-object layer: swap objects, readable swap objects, the object store.

A swap object supports only ``Swap(v)``, which atomically installs ``v`` and
returns the previous content. A readable swap object additionally supports
``Read``. Both are historyless: the content after any sequence of operations
is the argument of the last swap.
"""

from __future__ import annotations

import enum
from typing import Any, Callable, Iterable, NamedTuple, Sequence, Union

from .errors import CorruptionError, UsageError

LapCounter = tuple[int, ...]


class Bottom(enum.Enum):
    """The initial, owner-less identifier. Never equal to a process id."""

    BOT = "bot"

    def __repr__(self) -> str:
        return "⊥"


BOT = Bottom.BOT

Owner = Union[int, Bottom]


class SwapCellValue(NamedTuple):
    """A ``<lap counter, identifier>`` pair held by one swap object."""

    counter: LapCounter
    owner: Owner

    def __repr__(self) -> str:
        owner = "⊥" if self.owner is BOT else f"p{self.owner}"
        return f"<{list(self.counter)}, {owner}>"


def zero_counter(m: int) -> LapCounter:
    return (0,) * m


def dominated(v: Sequence[int], w: Sequence[int]) -> bool:
    """True iff ``v`` is componentwise ``<=`` ``w`` (written v ⪯ w)."""
    if len(v) != len(w):
        raise UsageError(f"lap counters of different length: {len(v)} vs {len(w)}")
    return all(a <= b for a, b in zip(v, w))


def incomparable(v: Sequence[int], w: Sequence[int]) -> bool:
    return not dominated(v, w) and not dominated(w, v)


def merge_counters(v: LapCounter, w: LapCounter) -> LapCounter:
    """Componentwise maximum."""
    return tuple(a if a >= b else b for a, b in zip(v, w))


def _check_lap_cell(m: int) -> Callable[[Any], None]:
    def check(value: Any) -> None:
        if not isinstance(value, SwapCellValue):
            raise UsageError(f"expected SwapCellValue, got {value!r}")
        if len(value.counter) != m:
            raise UsageError(f"lap counter length {len(value.counter)} != m={m}")
        if any(x < 0 for x in value.counter):
            raise UsageError(f"negative lap value in {value!r}")
        if value.owner is not BOT and (not isinstance(value.owner, int) or value.owner < 0):
            raise UsageError(f"bad owner in {value!r}")

    return check


def _check_domain(b: int) -> Callable[[Any], None]:
    def check(value: Any) -> None:
        if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < b:
            raise UsageError(f"value {value!r} outside domain {{0..{b - 1}}}")

    return check


class ObjectStore:
    """A fixed-size array of historyless objects.

    The cell count never changes after construction. ``readable`` decides
    whether :meth:`read` is permitted; plain swap objects reject it.
    """

    __slots__ = ("cells", "readable", "_check", "kind")

    def __init__(
        self,
        cells: Iterable[Any],
        *,
        readable: bool = False,
        check: Callable[[Any], None] | None = None,
        kind: str = "plain",
    ) -> None:
        self.cells = list(cells)
        self.readable = readable
        self._check = check
        self.kind = kind
        if check is not None:
            for value in self.cells:
                check(value)

    @classmethod
    def lap_cells(cls, count: int, m: int) -> "ObjectStore":
        """Swap objects initialised to ``<[0, ..., 0], ⊥>``; no Read."""
        if count < 1:
            raise UsageError(f"object count must be >= 1, got {count}")
        initial = SwapCellValue(zero_counter(m), BOT)
        return cls([initial] * count, check=_check_lap_cell(m), kind="lap")

    @classmethod
    def generic(cls, count: int, b: int, *, initial: int = 0, readable: bool = True) -> "ObjectStore":
        """Small-domain objects with values in ``{0..b-1}`` (readable binary when b=2)."""
        if b < 2:
            raise UsageError(f"domain size must be >= 2, got {b}")
        return cls([initial] * count, readable=readable, check=_check_domain(b), kind="generic")

    @classmethod
    def plain(cls, count: int, initial: Any = BOT) -> "ObjectStore":
        return cls([initial] * count, kind="plain")

    def __len__(self) -> int:
        return len(self.cells)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ObjectStore):
            return NotImplemented
        return self.cells == other.cells and self.readable == other.readable

    def __repr__(self) -> str:
        return f"ObjectStore({self.cells!r})"

    def _index(self, obj: int) -> int:
        if not isinstance(obj, int) or not 0 <= obj < len(self.cells):
            raise UsageError(f"object id {obj!r} out of range for {len(self.cells)} objects")
        return obj

    def swap(self, obj: int, new: Any) -> Any:
        """Install ``new`` at ``obj`` and return the value held just before."""
        i = self._index(obj)
        if self._check is not None:
            self._check(new)
        old = self.cells[i]
        self.cells[i] = new
        return old

    def read(self, obj: int) -> Any:
        if not self.readable:
            raise UsageError("Read is not supported by plain swap objects")
        return self.cells[self._index(obj)]

    def clone(self) -> "ObjectStore":
        twin = ObjectStore.__new__(ObjectStore)
        twin.cells = list(self.cells)
        twin.readable = self.readable
        twin._check = self._check
        twin.kind = self.kind
        return twin

    def snapshot(self) -> tuple:
        return tuple(self.cells)


def swap(store: ObjectStore, obj: int, new: Any) -> Any:
    return store.swap(obj, new)


def read(store: ObjectStore, obj: int) -> Any:
    return store.read(obj)


def value_of(config: Any, obj: int) -> Any:
    """``value(B, C)``: the content of object ``obj`` in configuration ``config``."""
    store = config.store
    if not isinstance(obj, int) or not 0 <= obj < len(store):
        raise UsageError(f"object id {obj!r} out of range for {len(store)} objects")
    return store.cells[obj]


def check_counter(counter: Sequence[int], m: int) -> None:
    """Raise :class:`CorruptionError` unless ``counter`` is a length-``m`` natural vector."""
    if len(counter) != m or any((not isinstance(x, int)) or x < 0 for x in counter):
        raise CorruptionError(f"malformed lap counter {list(counter)!r} for m={m}")
