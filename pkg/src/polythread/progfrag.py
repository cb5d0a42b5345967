"""Program fragments: instruction sequences, thread extraction, and execution."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import TermError
from .polythreading import Spt
from .runtime import ReplySource, Resolver, Trace, execute
from .services import Use
from .terms import D, S, Basic, Pcc, Switch, Thread, graph_to_term
from .dsl import parse_action


@dataclass(frozen=True)
class Plain:
    action: Basic


@dataclass(frozen=True)
class PosTest:
    action: Basic


@dataclass(frozen=True)
class NegTest:
    action: Basic


@dataclass(frozen=True)
class Jump:
    target: int

    def __post_init__(self):
        if self.target < 0:
            raise TermError("jump targets are natural numbers")


@dataclass(frozen=True)
class Halt:
    pass


@dataclass(frozen=True)
class Swo:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise TermError("switch-over indices are natural numbers")


INSTR_TYPES = (Plain, PosTest, NegTest, Jump, Halt, Swo)

_PREFIX = {"a": Plain, "+": PosTest, "-": NegTest}


def parse_instr(line: str):
    parts = line.split()
    if parts == ["!"]:
        return Halt()
    if len(parts) == 2:
        op, arg = parts
        if op in _PREFIX:
            a = parse_action(arg)
            if not isinstance(a, Basic):
                raise TermError("instructions perform basic actions only")
            return _PREFIX[op](a)
        if op in ("#", "swo"):
            if not re.fullmatch(r"\d+", arg):
                raise TermError(f"expected a natural number in {line!r}")
            return Jump(int(arg)) if op == "#" else Swo(int(arg))
    raise TermError(f"bad instruction {line!r}")


def parse_program(text: str) -> tuple:
    """One instruction per line; ``;`` starts a comment."""
    out = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse_instr(line))
        except TermError as e:
            raise TermError(f"line {n}: {e}") from None
    if not out:
        raise TermError("an instruction sequence must not be empty")
    return tuple(out)


def format_instr(ins) -> str:
    if isinstance(ins, Plain):
        return f"a {ins.action}"
    if isinstance(ins, PosTest):
        return f"+ {ins.action}"
    if isinstance(ins, NegTest):
        return f"- {ins.action}"
    if isinstance(ins, Jump):
        return f"# {ins.target}"
    if isinstance(ins, Swo):
        return f"swo {ins.index}"
    if isinstance(ins, Halt):
        return "!"
    raise TermError(f"not an instruction: {ins!r}")


def format_program(prog) -> str:
    return "".join(format_instr(i) + "\n" for i in prog)


# -- extraction --------------------------------------------------------------


def _resolve(prog, pos: int):
    """Follow jumps from 1-based ``pos``; returns a position or a leaf marker."""
    seen = set()
    while True:
        if not 1 <= pos <= len(prog):
            return "D"
        ins = prog[pos - 1]
        if not isinstance(ins, Jump):
            return pos
        if pos in seen:
            return "D"
        seen.add(pos)
        pos = ins.target


def extract(prog) -> Thread:
    """The thread a sequence of instructions performs from its first position.

    Jumps are absolute and 1-based. Jumping to 0 or past the end, falling
    off the end, and cycles of jumps all yield D.
    """
    prog = tuple(prog)
    if not prog:
        raise TermError("an instruction sequence must not be empty")
    succ: dict = {}
    root = _resolve(prog, 1)
    todo = [root]
    while todo:
        node = todo.pop()
        if node in succ:
            continue
        kids: tuple = ()
        if isinstance(node, int):
            ins = prog[node - 1]
            nxt = _resolve(prog, node + 1)
            if isinstance(ins, Plain):
                kids = (nxt, nxt)
            elif isinstance(ins, PosTest):
                kids = (nxt, _resolve(prog, node + 2))
            elif isinstance(ins, NegTest):
                kids = (_resolve(prog, node + 2), nxt)
        succ[node] = kids
        todo.extend(kids)

    def make(node, kids):
        if node == "D":
            return D
        ins = prog[node - 1]
        if isinstance(ins, Halt):
            return S
        if isinstance(ins, Swo):
            return Switch(ins.index)
        return Pcc(ins.action, kids[0], kids[1])

    return graph_to_term(root, succ, make)


# -- execution architecture --------------------------------------------------


@dataclass
class Architecture:
    """A program fragment, a fragment vector, and services keyed by focus."""

    program: tuple
    fragments: tuple = ()
    services: dict = field(default_factory=dict)
    resolver: Resolver | None = None
    replies: ReplySource | None = None

    def thread(self) -> Thread:
        t: Thread = Spt(extract(self.program), tuple(extract(p) for p in self.fragments))
        for focus, svc in self.services.items():
            t = Use(t, focus, svc)
        return t


def run_architecture(arch: Architecture, max_steps: int = 1000) -> Trace:
    """Execute the composition; actions on served foci appear as processed taus."""
    replies = arch.replies if arch.replies is not None else ReplySource()
    return execute(arch.thread(), replies, arch.resolver, max_steps)


def _natural_key(p: Path):
    return [int(s) if s.isdigit() else s for s in re.split(r"(\d+)", p.name)]


def load_fragments(path) -> tuple:
    """A directory of ``*.is`` files (natural name order) or a single file."""
    p = Path(path)
    files = sorted(p.glob("*.is"), key=_natural_key) if p.is_dir() else [p]
    return tuple(parse_program(f.read_text()) for f in files)
