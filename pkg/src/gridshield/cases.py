"""Grid case files: parsing, validation, serialization, and bundled systems.

A :class:`GridCase` is the topology-level description of a transmission grid:
buses ``1..n_bus``, a designated slack (phase-reference) bus, and branches
carrying a positive per-unit susceptance.  Two on-disk formats are supported:

* the native format — a line-oriented text format (see :func:`parse_native_case`);
* a restricted MATPOWER-style ``.m`` case — only the ``bus`` and ``branch``
  matrix blocks are read (see :func:`parse_matpower_case`).

Branch susceptances are stored positive (``b = 1/x``), so the weighted graph
Laplacian built from them is positive semidefinite and equals the DC nodal
admittance matrix.
"""

from __future__ import annotations

import os
import re
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple

from .errors import CaseFormatError

__all__ = [
    "Branch",
    "GridCase",
    "DuplicateBranchWarning",
    "parse_native_case",
    "parse_matpower_case",
    "serialize_native_case",
    "parse_secure_fragment",
    "load_case",
    "load_case_file",
    "resolve_case_source",
    "bundled_case_names",
    "CASE_DIR_ENV",
]

CASE_DIR_ENV = "GRIDSHIELD_CASE_DIR"

_BUNDLED_SUFFIXES = (".grid", ".m")


class DuplicateBranchWarning(UserWarning):
    """Parallel branches between the same bus pair were merged by summing b."""


class Branch(NamedTuple):
    """One transmission branch with positive per-unit susceptance."""

    from_bus: int
    to_bus: int
    b: float


@dataclass(frozen=True)
class GridCase:
    """A validated grid topology.

    Buses are numbered ``1..n_bus`` internally; ``bus_ids`` maps each internal
    index (position ``i`` holds the external id of bus ``i+1``) back to the
    numbering used in the source file.
    """

    name: str
    n_bus: int
    slack_bus: int
    branches: tuple[Branch, ...]
    bus_ids: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "branches", tuple(Branch(*br) for br in self.branches))
        if not self.bus_ids:
            object.__setattr__(self, "bus_ids", tuple(range(1, self.n_bus + 1)))
        object.__setattr__(self, "bus_ids", tuple(int(b) for b in self.bus_ids))
        if self.n_bus < 1:
            raise ValueError(f"n_bus must be positive, got {self.n_bus}")
        if not 1 <= self.slack_bus <= self.n_bus:
            raise ValueError(
                f"slack bus {self.slack_bus} out of range 1..{self.n_bus}"
            )
        if len(self.bus_ids) != self.n_bus:
            raise ValueError(
                f"bus_ids has {len(self.bus_ids)} entries for {self.n_bus} buses"
            )
        seen: set[tuple[int, int]] = set()
        for br in self.branches:
            for end in (br.from_bus, br.to_bus):
                if not 1 <= end <= self.n_bus:
                    raise ValueError(f"bus index out of range: branch {br}")
            if br.from_bus == br.to_bus:
                raise ValueError(f"self-loop branch at bus {br.from_bus}")
            if br.b <= 0:
                raise ValueError(
                    f"non-positive susceptance {br.b} on branch "
                    f"({br.from_bus},{br.to_bus})"
                )
            key = (min(br.from_bus, br.to_bus), max(br.from_bus, br.to_bus))
            if key in seen:
                raise ValueError(f"duplicate branch between buses {key}")
            seen.add(key)
        if not _is_connected(self.n_bus, self.branches):
            raise ValueError("branch graph is not connected")

    @property
    def n_branch(self) -> int:
        return len(self.branches)

    def branch_index(self, bus_a: int, bus_b: int) -> int:
        """1-based index of the branch joining two buses (orientation ignored)."""
        key = (min(bus_a, bus_b), max(bus_a, bus_b))
        for i, br in enumerate(self.branches, start=1):
            if (min(br.from_bus, br.to_bus), max(br.from_bus, br.to_bus)) == key:
                return i
        raise KeyError(f"no branch between buses {bus_a} and {bus_b}")


def _is_connected(n_bus: int, branches: Iterable[Branch]) -> bool:
    if n_bus == 1:
        return True
    adjacency: dict[int, list[int]] = {k: [] for k in range(1, n_bus + 1)}
    for br in branches:
        adjacency[br.from_bus].append(br.to_bus)
        adjacency[br.to_bus].append(br.from_bus)
    seen = {1}
    stack = [1]
    while stack:
        bus = stack.pop()
        for nxt in adjacency[bus]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == n_bus


def _merge_duplicates(
    branches: list[tuple[Branch, int]], origin: str
) -> list[Branch]:
    """Merge parallel branches by summing susceptances, warning once per pair."""
    merged: dict[tuple[int, int], Branch] = {}
    order: list[tuple[int, int]] = []
    for br, line in branches:
        key = (min(br.from_bus, br.to_bus), max(br.from_bus, br.to_bus))
        if key in merged:
            prev = merged[key]
            warnings.warn(
                f"{origin}: line {line}: parallel branch between buses "
                f"{key[0]} and {key[1]} merged (susceptances summed)",
                DuplicateBranchWarning,
                stacklevel=3,
            )
            merged[key] = Branch(prev.from_bus, prev.to_bus, prev.b + br.b)
        else:
            merged[key] = br
            order.append(key)
    return [merged[key] for key in order]


# ---------------------------------------------------------------------------
# Native format
# ---------------------------------------------------------------------------

def parse_native_case(text: str, *, origin: str = "<native case>") -> GridCase:
    """Parse the native case format.

    Format (UTF-8 text, ``#`` starts a comment anywhere on a line)::

        grid <name> <n_bus> <slack_bus>
        branch <from> <to> <b>
        ...

    The header must come first; each ``branch`` line adds one branch with
    positive susceptance ``b``.  Parallel branches are merged by summing
    susceptances, with a :class:`DuplicateBranchWarning`.
    """
    header: tuple[str, int, int] | None = None
    raw_branches: list[tuple[Branch, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        keyword = tokens[0]
        if keyword == "grid":
            if header is not None:
                raise CaseFormatError(
                    "duplicate grid header", origin=origin, line=lineno
                )
            if len(tokens) != 4:
                raise CaseFormatError(
                    f"grid header needs 'grid <name> <n_bus> <slack_bus>', "
                    f"got {len(tokens) - 1} fields",
                    origin=origin,
                    line=lineno,
                )
            name = tokens[1]
            n_bus = _parse_int(tokens[2], raw, origin, lineno)
            slack = _parse_int(tokens[3], raw, origin, lineno)
            header = (name, n_bus, slack)
        elif keyword == "branch":
            if header is None:
                raise CaseFormatError(
                    "branch line before grid header", origin=origin, line=lineno
                )
            if len(tokens) != 4:
                raise CaseFormatError(
                    f"branch line needs 'branch <from> <to> <b>', "
                    f"got {len(tokens) - 1} fields",
                    origin=origin,
                    line=lineno,
                )
            f = _parse_int(tokens[1], raw, origin, lineno)
            t = _parse_int(tokens[2], raw, origin, lineno)
            b = _parse_float(tokens[3], raw, origin, lineno)
            n_bus = header[1]
            for end in (f, t):
                if not 1 <= end <= n_bus:
                    raise CaseFormatError(
                        f"bus index out of range: {end} not in 1..{n_bus}",
                        origin=origin,
                        line=lineno,
                        column=_column_of(raw, str(end)),
                    )
            if f == t:
                raise CaseFormatError(
                    f"self-loop branch at bus {f}", origin=origin, line=lineno
                )
            if b <= 0:
                raise CaseFormatError(
                    f"non-positive susceptance {b}",
                    origin=origin,
                    line=lineno,
                    column=_column_of(raw, tokens[3]),
                )
            raw_branches.append((Branch(f, t, b), lineno))
        else:
            raise CaseFormatError(
                f"unknown keyword {keyword!r}", origin=origin, line=lineno,
                column=_column_of(raw, keyword),
            )

    if header is None:
        raise CaseFormatError("missing grid header", origin=origin)
    name, n_bus, slack = header
    branches = _merge_duplicates(raw_branches, origin)
    try:
        return GridCase(
            name=name,
            n_bus=n_bus,
            slack_bus=slack,
            branches=tuple(branches),
            bus_ids=tuple(range(1, n_bus + 1)),
        )
    except ValueError as exc:
        raise CaseFormatError(str(exc), origin=origin) from exc


def serialize_native_case(case: GridCase) -> str:
    """Render a case in the native format; parsing it back gives the same case."""
    lines = [f"grid {case.name} {case.n_bus} {case.slack_bus}"]
    lines.extend(
        f"branch {br.from_bus} {br.to_bus} {br.b!r}" for br in case.branches
    )
    return "\n".join(lines) + "\n"


def parse_secure_fragment(text: str, *, origin: str = "<fragment>") -> list[int]:
    """Parse ``secure <bus>`` lines (as emitted with protection plans)."""
    buses: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] != "secure" or len(tokens) != 2:
            raise CaseFormatError(
                "expected 'secure <bus>'", origin=origin, line=lineno
            )
        buses.append(_parse_int(tokens[1], raw, origin, lineno))
    return buses


def _column_of(raw_line: str, token: str) -> int | None:
    pos = raw_line.find(token)
    return pos + 1 if pos >= 0 else None


def _parse_int(token: str, raw_line: str, origin: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise CaseFormatError(
            f"expected integer, got {token!r}",
            origin=origin,
            line=lineno,
            column=_column_of(raw_line, token),
        ) from None


def _parse_float(token: str, raw_line: str, origin: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise CaseFormatError(
            f"expected number, got {token!r}",
            origin=origin,
            line=lineno,
            column=_column_of(raw_line, token),
        ) from None
    if not value == value or value in (float("inf"), float("-inf")):
        raise CaseFormatError(
            f"non-finite number {token!r}",
            origin=origin,
            line=lineno,
            column=_column_of(raw_line, token),
        )
    return value


# ---------------------------------------------------------------------------
# MATPOWER-style import
# ---------------------------------------------------------------------------

_BLOCK_RE = re.compile(r"mpc\.(?P<key>\w+)\s*=\s*\[(?P<body>.*?)\]\s*;", re.DOTALL)
_NAME_RE = re.compile(r"function\s+mpc\s*=\s*(\w+)")


def parse_matpower_case(
    text: str, *, name: str | None = None, origin: str = "<matpower case>"
) -> GridCase:
    """Parse the ``bus`` and ``branch`` blocks of a MATPOWER-style case file.

    Only three facts are consumed: bus ids, bus types (type 3 marks the slack
    bus), and branch reactances of in-service branches (``b = 1/x``).  All
    other columns and blocks are ignored.  Bus ids are renumbered to ``1..N``
    in ascending order of the original ids, which are retained in ``bus_ids``.
    """
    blocks = {m.group("key"): m.group("body") for m in _BLOCK_RE.finditer(text)}
    for required in ("bus", "branch"):
        if required not in blocks:
            raise CaseFormatError(f"missing {required} block", origin=origin)

    bus_rows = _parse_matrix_block(blocks["bus"], "bus", origin)
    branch_rows = _parse_matrix_block(blocks["branch"], "branch", origin)

    bus_ids: list[int] = []
    slack_ids: list[int] = []
    for row in bus_rows:
        if len(row) < 2:
            raise CaseFormatError(
                f"bus row needs at least id and type, got {len(row)} columns",
                origin=origin,
            )
        bus_id, bus_type = int(row[0]), int(row[1])
        bus_ids.append(bus_id)
        if bus_type == 3:
            slack_ids.append(bus_id)
    if len(bus_ids) != len(set(bus_ids)):
        raise CaseFormatError("duplicate bus id in bus block", origin=origin)
    if not slack_ids:
        raise CaseFormatError("no slack bus found (no type-3 bus)", origin=origin)
    if len(slack_ids) > 1:
        raise CaseFormatError(
            f"multiple slack buses: {sorted(slack_ids)}", origin=origin
        )

    order = sorted(bus_ids)
    internal = {ext: i + 1 for i, ext in enumerate(order)}

    raw_branches: list[tuple[Branch, int]] = []
    for rowno, row in enumerate(branch_rows, start=1):
        if len(row) < 4:
            raise CaseFormatError(
                f"branch row {rowno} needs at least fbus,tbus,r,x", origin=origin
            )
        status = row[10] if len(row) > 10 else 1.0
        if status == 0:
            continue
        f_ext, t_ext, x = int(row[0]), int(row[1]), float(row[3])
        for ext in (f_ext, t_ext):
            if ext not in internal:
                raise CaseFormatError(
                    f"branch row {rowno} references unknown bus {ext}",
                    origin=origin,
                )
        if x == 0:
            raise CaseFormatError(
                f"branch row {rowno} has zero reactance", origin=origin
            )
        if x < 0:
            raise CaseFormatError(
                f"branch row {rowno} has negative reactance {x}", origin=origin
            )
        raw_branches.append(
            (Branch(internal[f_ext], internal[t_ext], 1.0 / x), rowno)
        )

    if name is None:
        match = _NAME_RE.search(text)
        name = match.group(1) if match else "matpower_case"

    branches = _merge_duplicates(raw_branches, origin)
    try:
        return GridCase(
            name=name,
            n_bus=len(order),
            slack_bus=internal[slack_ids[0]],
            branches=tuple(branches),
            bus_ids=tuple(order),
        )
    except ValueError as exc:
        raise CaseFormatError(str(exc), origin=origin) from exc


def _parse_matrix_block(body: str, key: str, origin: str) -> list[list[float]]:
    rows: list[list[float]] = []
    for raw in body.splitlines():
        line = raw.split("%", 1)[0].strip().rstrip(";").strip()
        if not line:
            continue
        row: list[float] = []
        for token in line.split():
            try:
                row.append(float(token))
            except ValueError:
                raise CaseFormatError(
                    f"non-numeric entry {token!r} in {key} block", origin=origin
                ) from None
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# Case loading
# ---------------------------------------------------------------------------

def load_case_file(path: str | Path) -> GridCase:
    """Load a case from a file, dispatching on its suffix (.grid or .m)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".m":
        return parse_matpower_case(text, origin=str(path))
    return parse_native_case(text, origin=str(path))


def bundled_case_names() -> list[str]:
    """Names of the cases shipped with the package."""
    data = resources.files(__package__) / "data"
    names = {
        entry.name.rsplit(".", 1)[0]
        for entry in data.iterdir()
        if entry.name.endswith(_BUNDLED_SUFFIXES)
    }
    return sorted(names)


def resolve_case_source(name_or_path: str | Path) -> tuple[str, str]:
    """Origin label and raw text of the case ``load_case`` would read.

    Resolution order: an existing file path wins; otherwise ``<name>.grid`` /
    ``<name>.m`` is searched in the directory named by the ``GRIDSHIELD_CASE_DIR``
    environment variable (if set), then among the bundled cases.
    """
    path = Path(name_or_path)
    if path.is_file():
        return str(path), path.read_text(encoding="utf-8")

    name = str(name_or_path)
    search_dirs: list[Path] = []
    env_dir = os.environ.get(CASE_DIR_ENV)
    if env_dir:
        search_dirs.append(Path(env_dir))
    for directory in search_dirs:
        for suffix in _BUNDLED_SUFFIXES:
            candidate = directory / f"{name}{suffix}"
            if candidate.is_file():
                return str(candidate), candidate.read_text(encoding="utf-8")

    data = resources.files(__package__) / "data"
    for suffix in _BUNDLED_SUFFIXES:
        candidate = data / f"{name}{suffix}"
        if candidate.is_file():
            return str(candidate), candidate.read_text(encoding="utf-8")

    raise FileNotFoundError(
        f"no case named {name!r}; bundled cases: {', '.join(bundled_case_names())}"
    )


def load_case(name_or_path: str | Path) -> GridCase:
    """Load a case by file path, by name from ``$GRIDSHIELD_CASE_DIR``, or bundled."""
    origin, text = resolve_case_source(name_or_path)
    if origin.endswith(".m"):
        return parse_matpower_case(text, origin=origin)
    return parse_native_case(text, origin=origin)
