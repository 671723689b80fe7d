"""Grid geometry on Z^2 and predicates over configurations of agents."""

from __future__ import annotations

import enum
import os
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple

from . import kernels


class GridError(ValueError):
    pass


class Cell(NamedTuple):
    x: int
    y: int

    def __add__(self, other):  # type: ignore[override]
        return Cell(self[0] + other[0], self[1] + other[1])

    def __sub__(self, other):
        return Cell(self[0] - other[0], self[1] - other[1])


# N, E, S, W unit vectors; this order is used everywhere.
STEPS = ((0, 1), (1, 0), (0, -1), (-1, 0))

DEFAULT_ENUM_LIMIT = 12


def neighbors(c) -> tuple[Cell, Cell, Cell, Cell]:
    """The four neighbours of ``c`` in the order N, E, S, W."""
    x, y = c
    return (Cell(x, y + 1), Cell(x + 1, y), Cell(x, y - 1), Cell(x - 1, y))


def distance(a, b) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


class Configuration(Mapping):
    """Finite occupancy map from cells to positive agent counts."""

    __slots__ = ("_occ", "_hash")

    def __init__(self, cells: Iterable | Mapping = ()):
        if isinstance(cells, Mapping):
            occ = {Cell(*c): int(k) for c, k in cells.items()}
        else:
            occ = dict(Counter(Cell(*c) for c in cells))
        for c, k in occ.items():
            if k < 1:
                raise GridError(f"non-positive count {k} at {tuple(c)}")
        self._occ = occ
        self._hash = None

    def __getitem__(self, c) -> int:
        return self._occ[c]

    def __iter__(self) -> Iterator[Cell]:
        return iter(self._occ)

    def __len__(self) -> int:
        return len(self._occ)

    def __contains__(self, c) -> bool:
        return c in self._occ

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._occ.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Configuration):
            return self._occ == other._occ
        return NotImplemented

    def __repr__(self):
        return f"Configuration({self.sorted_cells()!r})"

    @property
    def agents(self) -> int:
        return sum(self._occ.values())

    @property
    def is_initial(self) -> bool:
        return all(k == 1 for k in self._occ.values())

    def cells(self) -> frozenset:
        return frozenset(self._occ)

    def sorted_cells(self) -> list[Cell]:
        return sorted(self._occ, key=lambda c: (c[1], c[0]))

    def translate(self, v) -> "Configuration":
        return Configuration({c + v: k for c, k in self._occ.items()})

    def canonical(self) -> "Configuration":
        """Translate so the smallest cell in (y, x) order sits at the origin."""
        if not self._occ:
            return self
        lo = min(self._occ, key=lambda c: (c[1], c[0]))
        return self.translate((-lo[0], -lo[1]))


def _require_nonempty(cfg: Configuration):
    if len(cfg) == 0:
        raise GridError("empty configuration")


def is_connected(cfg: Configuration) -> bool:
    _require_nonempty(cfg)
    return kernels.connected(cfg)


def is_contractible(cfg: Configuration) -> bool:
    """Connected and without holes (no finite component of empty cells)."""
    _require_nonempty(cfg)
    return kernels.connected(cfg) and kernels.hole_free(cfg)


def articulation_cells(cfg: Configuration) -> set[Cell]:
    _require_nonempty(cfg)
    if not kernels.connected(cfg):
        raise GridError("configuration is not connected")
    return {Cell(*c) for c in kernels.cut_cells(cfg)}


class Role(enum.Enum):
    N_LEAF = "N-leaf"
    E_LEAF = "E-leaf"
    S_LEAF = "S-leaf"
    W_LEAF = "W-leaf"
    NE_CORNER = "NE-corner"
    NW_CORNER = "NW-corner"
    OTHER = "other"


@dataclass(frozen=True)
class AgentRole:
    kind: Role
    in4cycle: bool


# occupied-neighbour pattern (N, E, S, W) -> role
_ROLE_BY_PATTERN = {
    (False, False, True, False): Role.N_LEAF,
    (False, False, False, True): Role.E_LEAF,
    (True, False, False, False): Role.S_LEAF,
    (False, True, False, False): Role.W_LEAF,
    (False, False, True, True): Role.NE_CORNER,
    (False, True, True, False): Role.NW_CORNER,
}


def role_from_pattern(pattern: tuple[bool, bool, bool, bool]) -> Role:
    return _ROLE_BY_PATTERN.get(tuple(pattern), Role.OTHER)


def in_4cycle(cells, c) -> bool:
    x, y = c
    for dx in (-1, 1):
        for dy in (-1, 1):
            if (x + dx, y) in cells and (x, y + dy) in cells and (x + dx, y + dy) in cells:
                return True
    return False


def classify(cfg: Configuration, c) -> AgentRole:
    if c not in cfg:
        raise GridError(f"cell {tuple(c)} is not occupied")
    pattern = tuple(nb in cfg for nb in neighbors(c))
    return AgentRole(role_from_pattern(pattern), in_4cycle(cfg, c))


def enum_limit() -> int:
    raw = os.environ.get("GRIDGATHER_ENUM_LIMIT")
    if raw is None:
        return DEFAULT_ENUM_LIMIT
    try:
        value = int(raw)
    except ValueError:
        raise GridError(f"GRIDGATHER_ENUM_LIMIT must be an integer, got {raw!r}") from None
    if value < 1:
        raise GridError("GRIDGATHER_ENUM_LIMIT must be positive")
    return value


def _check_size(n: int):
    limit = enum_limit()
    if not isinstance(n, int) or n < 1 or n > limit:
        raise GridError(f"polyomino size {n!r} outside 1..{limit}")


def enumerate_polyominoes(n: int, contractible_only: bool = False) -> list[Configuration]:
    """Fixed polyominoes of ``n`` cells, translation-canonical, sorted."""
    _check_size(n)
    polys = kernels.fixed_polyominoes(n)
    if contractible_only:
        polys = [p for p in polys if kernels.hole_free(p)]
    return [Configuration(p) for p in polys]


def lemma_geo_holds(cfg: Configuration) -> bool:
    """Leaf-or-corner property on one connected hole-free configuration.

    A configuration with more than one occupied cell must contain a leaf,
    or a NE-corner or NW-corner lying on an occupied 2x2 block.
    """
    _require_nonempty(cfg)
    if not cfg.is_initial:
        raise GridError("lemma applies to one agent per cell")
    if not is_contractible(cfg):
        raise GridError("lemma applies to connected contractible configurations")
    if len(cfg) == 1:
        return True
    return kernels.has_destructible(cfg)


def lemma_sweep(max_size: int) -> tuple[int, list[Configuration]]:
    """Run the lemma check over all contractible polyominoes of sizes 2..max_size."""
    if max_size >= 2:
        _check_size(max_size)
    checked = 0
    bad: list[Configuration] = []
    for n in range(2, max_size + 1):
        k, counter = kernels.lemma_scan(n)
        checked += k
        bad.extend(Configuration(p) for p in counter)
    return checked, bad


def parse_configuration(text: str, source: str = "<string>", first_line: int = 1) -> Configuration:
    """Read the ``x y`` per-line configuration format; '#' starts a comment.

    Errors carry ``source:line:column`` of the offending token.
    """
    cells = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), first_line):
        line = raw.split("#", 1)[0]
        tokens = [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", line)]
        if not tokens:
            continue
        if len(tokens) != 2:
            col = tokens[2][0] if len(tokens) > 2 else len(line.rstrip()) + 1
            raise GridError(f"{source}:{lineno}:{col}: expected 'x y', got {raw.strip()!r}")
        coords = []
        for col, tok in tokens:
            try:
                coords.append(int(tok))
            except ValueError:
                raise GridError(f"{source}:{lineno}:{col}: non-integer coordinate {tok!r}") from None
        c = Cell(*coords)
        if c in seen:
            raise GridError(f"{source}:{lineno}:{tokens[0][0]}: duplicate cell {c.x} {c.y} (first on line {seen[c]})")
        seen[c] = lineno
        cells.append(c)
    return Configuration(cells)


def format_configuration(cfg: Configuration) -> str:
    return "".join(f"{c.x} {c.y}\n" for c in cfg.sorted_cells())
