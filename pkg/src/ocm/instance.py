"""PACE-format OCM instances and solutions.

Fixed vertices carry labels ``1..n_fixed`` (label order is the fixed order),
free vertices ``n_fixed+1..n_fixed+n_free``.  Internally free vertices are
addressed by a dense 0-based index ``label - n_fixed - 1``; that mapping
stays inside the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

__all__ = [
    "ParseError",
    "BipartiteInstance",
    "Solution",
    "Numbering",
    "parse_instance",
    "parse_solution",
    "write_instance",
    "write_solution",
    "verify_solution",
    "numbering_width",
    "check_permutation",
]


class ParseError(ValueError):
    """Malformed instance or solution text.  ``line`` is 1-based (0 if unknown)."""

    def __init__(self, message: str, line: int = 0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class HeaderError(ParseError):
    pass


class EndpointRangeError(ParseError):
    pass


class DuplicateEdgeError(ParseError):
    pass


class EdgeCountError(ParseError):
    pass


@dataclass(frozen=True)
class Numbering:
    """Vertex label -> rank (1-based) over all fixed and free vertices."""

    position: dict
    claimed_width: Optional[int] = None

    def __post_init__(self):
        ranks = sorted(self.position.values())
        if ranks != list(range(1, len(ranks) + 1)):
            raise ValueError("numbering positions must be a permutation of 1..n")

    @classmethod
    def from_order(cls, order: Sequence[int], claimed_width: Optional[int] = None) -> "Numbering":
        return cls({v: i + 1 for i, v in enumerate(order)}, claimed_width)


@dataclass(frozen=True)
class BipartiteInstance:
    n_fixed: int
    n_free: int
    adj_free: tuple  # free index -> ascending tuple of fixed labels
    adj_fixed: tuple  # fixed index -> ascending tuple of free labels
    numbering: Optional[Numbering] = field(default=None, compare=False)

    @classmethod
    def from_edges(
        cls,
        n_fixed: int,
        n_free: int,
        edges: Iterable[tuple],
        numbering: Optional[Numbering] = None,
    ) -> "BipartiteInstance":
        """Build from ``(fixed_label, free_label)`` pairs; rejects duplicates."""
        free_adj = [[] for _ in range(n_free)]
        fixed_adj = [[] for _ in range(n_fixed)]
        seen = set()
        for a, b in edges:
            if not 1 <= a <= n_fixed:
                raise EndpointRangeError(f"fixed endpoint {a} outside 1..{n_fixed}")
            if not n_fixed < b <= n_fixed + n_free:
                raise EndpointRangeError(
                    f"free endpoint {b} outside {n_fixed + 1}..{n_fixed + n_free}"
                )
            if (a, b) in seen:
                raise DuplicateEdgeError(f"duplicate edge {a} {b}")
            seen.add((a, b))
            free_adj[b - n_fixed - 1].append(a)
            fixed_adj[a - 1].append(b)
        return cls(
            n_fixed,
            n_free,
            tuple(tuple(sorted(x)) for x in free_adj),
            tuple(tuple(sorted(x)) for x in fixed_adj),
            numbering,
        )

    @property
    def n_edges(self) -> int:
        return sum(len(x) for x in self.adj_free)

    @property
    def free_labels(self) -> range:
        return range(self.n_fixed + 1, self.n_fixed + self.n_free + 1)

    def index(self, label: int) -> int:
        i = label - self.n_fixed - 1
        if not 0 <= i < self.n_free:
            raise ValueError(f"{label} is not a free vertex")
        return i

    def label(self, index: int) -> int:
        return index + self.n_fixed + 1

    def neighbors(self, label: int) -> tuple:
        return self.adj_free[self.index(label)]

    def edges(self) -> list:
        return [(a, self.label(i)) for i, nb in enumerate(self.adj_free) for a in nb]

    def isolated(self) -> list:
        return [self.label(i) for i, nb in enumerate(self.adj_free) if not nb]

    def induced(self, free: Sequence[int]) -> tuple:
        """Subinstance on the given free labels and their fixed neighbors.

        Returns ``(sub, free_map)`` where ``free_map[i]`` is the original label
        of the sub-instance's i-th free vertex.  Fixed vertices are compacted
        but keep their relative order.
        """
        free_map = tuple(free)
        fixed_used = sorted({a for v in free_map for a in self.neighbors(v)})
        fixed_rank = {a: i + 1 for i, a in enumerate(fixed_used)}
        n_fixed = len(fixed_used)
        edges = [
            (fixed_rank[a], n_fixed + 1 + i)
            for i, v in enumerate(free_map)
            for a in self.neighbors(v)
        ]
        return BipartiteInstance.from_edges(n_fixed, len(free_map), edges), free_map


@dataclass(frozen=True)
class Solution:
    ordering: tuple
    crossings: Optional[int] = None  # None means unknown

    def __post_init__(self):
        object.__setattr__(self, "ordering", tuple(self.ordering))


_Text = Union[str, bytes, Iterable[str]]


def _lines(text: _Text):
    if isinstance(text, bytes):
        text = text.decode()
    if isinstance(text, str):
        text = text.splitlines()
    for lineno, raw in enumerate(text, 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        yield lineno, line


def _ints(line: str, lineno: int, what: str) -> list:
    try:
        return [int(t) for t in line.split()]
    except ValueError:
        raise ParseError(f"non-integer token in {what}: {line!r}", lineno) from None


def parse_instance(text: _Text) -> BipartiteInstance:
    """Parse ``p ocm n_fixed n_free m [cutwidth]`` plus edge lines.

    With the extra cutwidth token the header is followed by one vertex label
    per line giving a numbering of all vertices; it is kept on the instance.
    """
    lines = _lines(text)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise HeaderError("missing 'p ocm' header") from None
    tokens = header.split()
    if len(tokens) not in (5, 6) or tokens[:2] != ["p", "ocm"]:
        raise HeaderError(f"malformed header {header!r}", lineno)
    try:
        n_fixed, n_free, m, *rest = (int(t) for t in tokens[2:])
    except ValueError:
        raise HeaderError(f"malformed header {header!r}", lineno) from None
    if min(n_fixed, n_free, m) < 0:
        raise HeaderError("negative count in header", lineno)
    last = lineno

    numbering = None
    if rest:
        order = []
        for _ in range(n_fixed + n_free):
            try:
                lineno, line = next(lines)
            except StopIteration:
                raise HeaderError("numbering section shorter than n_fixed + n_free", last) from None
            vals = _ints(line, lineno, "numbering")
            if len(vals) != 1 or not 1 <= vals[0] <= n_fixed + n_free:
                raise EndpointRangeError(f"bad numbering entry {line!r}", lineno)
            order.append(vals[0])
            last = lineno
        if len(set(order)) != len(order):
            raise ParseError("numbering repeats a vertex", last)
        numbering = Numbering.from_order(order, rest[0])

    edges = []
    for lineno, line in lines:
        vals = _ints(line, lineno, "edge")
        if len(vals) != 2:
            raise ParseError(f"edge line needs two endpoints: {line!r}", lineno)
        if len(edges) == m:
            raise EdgeCountError(f"more than the declared {m} edges", lineno)
        a, b = vals
        if not 1 <= a <= n_fixed or not n_fixed < b <= n_fixed + n_free:
            raise EndpointRangeError(f"endpoint out of range in {line!r}", lineno)
        edges.append((a, b, lineno))
        last = lineno
    if len(edges) != m:
        raise EdgeCountError(f"header declares {m} edges, found {len(edges)}", last)

    seen = {}
    for a, b, lineno in edges:
        if (a, b) in seen:
            raise DuplicateEdgeError(f"duplicate edge {a} {b}", lineno)
        seen[a, b] = lineno
    return BipartiteInstance.from_edges(
        n_fixed, n_free, [(a, b) for a, b, _ in edges], numbering
    )


def write_instance(inst: BipartiteInstance) -> str:
    out = [f"p ocm {inst.n_fixed} {inst.n_free} {inst.n_edges}"]
    out += [f"{a} {b}" for a, b in inst.edges()]
    return "\n".join(out) + "\n"


def parse_solution(text: _Text) -> Solution:
    order = []
    for lineno, line in _lines(text):
        vals = _ints(line, lineno, "solution")
        if len(vals) != 1:
            raise ParseError(f"expected one label per line: {line!r}", lineno)
        order.append(vals[0])
    return Solution(tuple(order))


def write_solution(sol: Solution) -> str:
    return "".join(f"{v}\n" for v in sol.ordering)


def check_permutation(inst: BipartiteInstance, ordering: Sequence[int]) -> None:
    if len(ordering) != inst.n_free or sorted(ordering) != list(inst.free_labels):
        raise ValueError("ordering is not a permutation of the free vertices")


def verify_solution(inst: BipartiteInstance, sol: Solution) -> int:
    from .crossings import count_crossings_fast

    check_permutation(inst, sol.ordering)
    return count_crossings_fast(inst, sol.ordering)


def numbering_width(inst: BipartiteInstance, num: Numbering) -> int:
    """Max over cuts ``i`` of the edges ``{u, v}`` with ``pos(u) <= i < pos(v)``."""
    n = inst.n_fixed + inst.n_free
    if set(num.position) != set(range(1, n + 1)):
        raise ValueError("numbering must cover every vertex exactly once")
    diff = [0] * (n + 2)
    for a, b in inst.edges():
        lo, hi = sorted((num.position[a], num.position[b]))
        diff[lo] += 1
        diff[hi] -= 1
    width = running = 0
    for i in range(1, n + 1):
        running += diff[i]
        width = max(width, running)
    return width
