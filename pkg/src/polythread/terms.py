"""Thread terms with guarded recursion.

Threads are immutable trees built from the constructors below. Operator
nodes (thread-service use, poly-threading, interleaving, ...) are also
threads: they carry a ``reduce`` method that rewrites the root one step
towards a constructor form, so every operator can be explored lazily.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field, fields
from typing import Callable, Iterable

from .errors import StateOverflow, TermError

DEFAULT_DEPTH = 64
DEFAULT_LIMIT = 10_000

_IDENT = re.compile(r"[a-z0-9_]+\Z")
_VARNAME = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")
_FIELD_NAMES: dict[type, tuple[str, ...]] = {}


def _compared_values(obj) -> tuple:
    names = _FIELD_NAMES.get(type(obj))
    if names is None:
        names = tuple(f.name for f in fields(obj) if f.compare)
        _FIELD_NAMES[type(obj)] = names
    return tuple(getattr(obj, n) for n in names)


class Node:
    """Structural equality with a cached hash (terms get hashed a lot)."""

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not type(self) or hash(self) != hash(other):
            return False
        return _compared_values(self) == _compared_values(other)

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = hash((type(self).__name__,) + _compared_values(self))
            object.__setattr__(self, "_hash", h)
            return h


# -- actions -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Basic(Node):
    """Basic action ``focus.method``.

    ``switch_to`` is a bookkeeping annotation set on the ``tls.init``
    performed when a fragment is started; it never takes part in equality.
    """

    focus: str
    method: str
    switch_to: int | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not (_IDENT.match(self.focus) and _IDENT.match(self.method)):
            raise TermError(f"bad basic action {self.focus!r}.{self.method!r}")

    def __str__(self):
        return f"{self.focus}.{self.method}"


@dataclass(frozen=True, eq=False)
class Tau(Node):
    """The internal action; ``origin`` records a processed basic action."""

    origin: Basic | None = field(default=None, compare=False, repr=False)

    def __str__(self):
        return "tau"


@dataclass(frozen=True, eq=False)
class LocAction(Node):
    location: int
    action: Basic | Tau

    def __str__(self):
        return f"{self.location}.{self.action}"


TAU = Tau()
TLS_INIT = Basic("tls", "init")
EXT_SEL = Basic("ext", "sel")


def is_tau(a) -> bool:
    if isinstance(a, LocAction):
        a = a.action
    return isinstance(a, Tau)


def tls_init(target: int | None = None) -> Basic:
    return Basic("tls", "init", switch_to=target)


# -- threads -----------------------------------------------------------------


class Thread(Node):
    def map_threads(self, fn: Callable[[Thread], Thread]) -> Thread:
        return self

    def thread_children(self) -> tuple:
        return ()


class Operator(Thread):
    """A thread-valued operator application, reduced on demand."""

    def reduce(self) -> Thread:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Stop(Thread):
    def __repr__(self):
        return "S"


@dataclass(frozen=True, eq=False)
class Deadlock(Thread):
    def __repr__(self):
        return "D"


S = Stop()
D = Deadlock()


@dataclass(frozen=True, eq=False)
class Pcc(Thread):
    """Postconditional composition: ``pos`` on reply True, ``neg`` on False."""

    action: Basic | Tau | LocAction
    pos: Thread
    neg: Thread

    def map_threads(self, fn):
        return Pcc(self.action, fn(self.pos), fn(self.neg))

    def thread_children(self):
        return (self.pos, self.neg)


def prefix(a, t: Thread) -> Pcc:
    return Pcc(a, t, t)


@dataclass(frozen=True, eq=False)
class Pcs(Thread):
    """k-ary postconditional switch: branch i on reply i."""

    action: Basic | Tau | LocAction
    branches: tuple

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.branches:
            raise TermError("postconditional switch needs at least one branch")

    def map_threads(self, fn):
        return Pcs(self.action, tuple(fn(b) for b in self.branches))

    def thread_children(self):
        return self.branches


@dataclass(frozen=True, eq=False)
class Switch(Thread):
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise TermError("switch index must be a natural number")


@dataclass(frozen=True, eq=False)
class ExternSwitch(Thread):
    def __repr__(self):
        return "Extern"


EXTERN = ExternSwitch()


@dataclass(frozen=True, eq=False)
class Mig(Thread):
    """Migration postconditional composition towards location ``target``."""

    target: int
    pos: Thread
    neg: Thread

    def map_threads(self, fn):
        return Mig(self.target, fn(self.pos), fn(self.neg))

    def thread_children(self):
        return (self.pos, self.neg)


@dataclass(frozen=True, eq=False)
class Choice(Thread):
    """External choice between the branches (or deadlock)."""

    branches: tuple

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.branches:
            raise TermError("external choice needs at least one branch")

    def map_threads(self, fn):
        return Choice(tuple(fn(b) for b in self.branches))

    def thread_children(self):
        return self.branches


@dataclass(frozen=True, eq=False)
class Var(Thread):
    """Recursion variable; only meaningful inside a RecSpec body."""

    name: str


@dataclass(frozen=True, eq=False)
class RecSpec(Node):
    equations: tuple

    def __post_init__(self):
        eqs = self.equations
        if isinstance(eqs, dict):
            eqs = eqs.items()
        eqs = tuple((name, body) for name, body in eqs)
        object.__setattr__(self, "equations", eqs)
        names = [n for n, _ in eqs]
        if len(set(names)) != len(names):
            raise TermError("duplicate recursion variable")
        defined = set(names)
        for name, body in eqs:
            if not _VARNAME.match(name) or name in ("S", "D"):
                raise TermError(f"bad recursion variable name {name!r}")
            if isinstance(body, Var):
                raise TermError(f"unguarded equation for {name}")
            for v in free_vars(body):
                if v not in defined:
                    raise TermError(f"unbound recursion variable {v}")
        object.__setattr__(self, "_bodies", dict(eqs))

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.equations)

    def body(self, name: str) -> Thread:
        try:
            return self.__dict__["_bodies"][name]
        except KeyError:
            raise TermError(f"unbound recursion variable {name}") from None


@dataclass(frozen=True, eq=False)
class RecRef(Thread):
    """The constant <name|spec>."""

    name: str
    spec: RecSpec

    def __post_init__(self):
        if self.name not in self.spec.__dict__["_bodies"]:
            raise TermError(f"unbound recursion variable {self.name}")

    def __repr__(self):
        return f"<{self.name}|{','.join(self.spec.names)}>"


CONSTRUCTORS = (Stop, Deadlock, Pcc, Pcs, Switch, ExternSwitch, Mig, Choice)
LEAVES = (Stop, Deadlock, Switch, ExternSwitch)


def free_vars(t: Thread) -> set[str]:
    out: set[str] = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Var):
            out.add(u.name)
        elif not isinstance(u, RecRef):
            stack.extend(u.thread_children())
    return out


def substitute(t: Thread, env: dict) -> Thread:
    """Replace free Var leaves according to ``env`` (name -> Thread)."""
    memo: dict = {}

    def go(u):
        if isinstance(u, Var):
            return env.get(u.name, u)
        if isinstance(u, RecRef) or isinstance(u, LEAVES):
            return u
        key = id(u)
        if key not in memo:
            memo[key] = (u, u.map_threads(go))
        return memo[key][1]

    return go(t)


def unfold(t: Thread) -> Thread:
    """One RDP step on a RecRef; anything else is returned unchanged."""
    if not isinstance(t, RecRef):
        return t
    spec = t.spec
    body = spec.body(t.name)
    return substitute(body, {n: RecRef(n, spec) for n in spec.names})


def head_normal(t: Thread, fuel: int = 100_000) -> Thread:
    """Rewrite the root until it is a constructor."""
    while not isinstance(t, CONSTRUCTORS):
        if isinstance(t, RecRef):
            t = unfold(t)
        elif isinstance(t, Operator):
            t = t.reduce()
        elif isinstance(t, Var):
            raise TermError(f"free recursion variable {t.name}")
        else:
            raise TermError(f"not a thread: {t!r}")
        fuel -= 1
        if fuel <= 0:
            raise TermError("head normalisation did not terminate")
    return t


# -- structural transformations ----------------------------------------------


def map_structure(t: Thread, leaf: Callable[[Thread], Thread | None]) -> Thread:
    """Rebuild ``t`` bottom-up, letting ``leaf`` replace nodes.

    ``leaf`` returns a replacement or None to recurse normally. Recursive
    specifications are rewritten once (bodies mapped, a fresh spec built).
    """
    specs: dict = {}
    memo: dict = {}

    def go(u):
        r = leaf(u)
        if r is not None:
            return r
        if isinstance(u, RecRef):
            return RecRef(u.name, spec_of(u.spec))
        if isinstance(u, Var):
            return u
        if isinstance(u, Operator):
            raise TermError(f"cannot rewrite through operator {type(u).__name__}")
        key = id(u)
        if key not in memo:
            memo[key] = (u, u.map_threads(go))
        return memo[key][1]

    def spec_of(spec):
        if spec not in specs:
            specs[spec] = RecSpec(tuple((n, go(b)) for n, b in spec.equations))
        return specs[spec]

    return go(t)


def normalize_tau(t: Thread) -> Thread:
    """Rewrite every tau-composition so both branches equal the first one."""

    def leaf(u):
        if isinstance(u, Pcc) and is_tau(u.action):
            x = normalize_tau_memo(u.pos)
            return Pcc(u.action, x, x)
        if isinstance(u, Pcs) and is_tau(u.action):
            x = normalize_tau_memo(u.branches[0])
            return Pcs(u.action, (x,) * len(u.branches))
        return None

    cache: dict = {}

    def normalize_tau_memo(u):
        if u not in cache:
            cache[u] = map_structure(u, leaf)
        return cache[u]

    return map_structure(t, leaf)


def project(t: Thread, n: int) -> Thread:
    """Depth-n approximation: branching heads consume depth, D below the cut."""
    if n <= 0:
        return D
    h = head_normal(t)
    if isinstance(h, LEAVES):
        return h
    return h.map_threads(lambda c: project(c, n - 1))


# -- transition view ---------------------------------------------------------


def signature(h: Thread) -> tuple:
    """Label and behaviour-relevant successors of a constructor.

    The tau-branches beyond the first are dropped here, which is how
    equivalence respects T1.
    """
    if isinstance(h, Pcc):
        label = ("pcc", h.action)
        return (label, (h.pos,)) if is_tau(h.action) else (label, (h.pos, h.neg))
    if isinstance(h, Pcs):
        label = ("pcs", h.action, len(h.branches))
        return (label, h.branches[:1]) if is_tau(h.action) else (label, h.branches)
    if isinstance(h, Mig):
        return (("mig", h.target), (h.pos, h.neg))
    if isinstance(h, Choice):
        return (("choice", len(h.branches)), h.branches)
    if isinstance(h, Switch):
        return (("switch", h.index), ())
    if isinstance(h, Stop):
        return (("S",), ())
    if isinstance(h, Deadlock):
        return (("D",), ())
    if isinstance(h, ExternSwitch):
        return (("extern",), ())
    raise TermError(f"not a constructor: {h!r}")


class _Heads:
    """Memoised head normal forms for one exploration."""

    def __init__(self):
        self._memo: dict = {}

    def __call__(self, t):
        try:
            return self._memo[t]
        except KeyError:
            h = self._memo[t] = head_normal(t)
            return h


@dataclass(frozen=True)
class StateSet:
    states: frozenset
    overflow: bool = False

    def __len__(self):
        return len(self.states)


def reachable_states(t: Thread, limit: int = DEFAULT_LIMIT) -> StateSet:
    """Head-normal states reachable from ``t``, or an overflow marker."""
    hn = _Heads()
    start = hn(t)
    seen = {start}
    todo = deque([start])
    while todo:
        h = todo.popleft()
        for c in h.thread_children():
            hc = hn(c)
            if hc not in seen:
                if len(seen) >= limit:
                    return StateSet(frozenset(seen), overflow=True)
                seen.add(hc)
                todo.append(hc)
    return StateSet(frozenset(seen))


def equivalent(t1: Thread, t2: Thread, depth: int = DEFAULT_DEPTH,
               limit: int = DEFAULT_LIMIT) -> bool:
    """Bisimilarity of the (deterministic) transition systems of two threads.

    Explores state pairs exhaustively while at most ``limit`` pairs exist;
    beyond that only pairs within ``depth`` steps are compared, which is
    the same as comparing the depth-``depth`` projections.
    """
    hn = _Heads()
    exact = _compare_pairs(hn, t1, t2, None, limit)
    if exact is not None:
        return exact
    return bool(_compare_pairs(hn, t1, t2, depth, None))


def try_equivalent(t1: Thread, t2: Thread, limit: int = DEFAULT_LIMIT) -> bool | None:
    """Exact bisimilarity, or None when more than ``limit`` state pairs arise."""
    return _compare_pairs(_Heads(), t1, t2, None, limit)


def _compare_pairs(hn, t1, t2, depth, limit):
    start = (hn(t1), hn(t2))
    seen = {start}
    todo = deque([(start, 0)])
    while todo:
        (a, b), d = todo.popleft()
        la, ca = signature(a)
        lb, cb = signature(b)
        if la != lb:
            return False
        if depth is not None and d + 1 >= depth:
            continue
        for x, y in zip(ca, cb):
            pair = (hn(x), hn(y))
            if pair not in seen:
                if limit is not None and len(seen) >= limit:
                    return None
                seen.add(pair)
                todo.append((pair, d + 1))
    return True


# -- materialisation ---------------------------------------------------------


def explore(t: Thread, limit: int = DEFAULT_LIMIT):
    """Reachable graph over head-normal states: (root, {state: child states})."""
    hn = _Heads()
    root = hn(t)
    graph: dict = {}
    todo = deque([root])
    graph[root] = None
    while todo:
        h = todo.popleft()
        kids = tuple(hn(c) for c in h.thread_children())
        graph[h] = kids
        for k in kids:
            if k not in graph:
                if len(graph) >= limit:
                    raise StateOverflow(f"more than {limit} states")
                graph[k] = None
                todo.append(k)
    return root, graph, hn


def _cyclic_states(graph: dict) -> set:
    """States lying on a cycle (iterative Tarjan)."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    cyclic: set = set()
    counter = 0
    for start in graph:
        if start in index:
            continue
        work = [(start, iter(graph[start]))]
        index[start] = low[start] = counter
        counter += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(graph[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                if len(comp) > 1 or v in graph[v]:
                    cyclic.update(comp)
    return cyclic


def to_term(t: Thread, limit: int = DEFAULT_LIMIT) -> Thread:
    """Materialise a (possibly operator-laden) thread as a plain term.

    States on a cycle become recursion variables; everything else is
    inlined. Raises StateOverflow past ``limit`` states.
    """
    root, graph, _ = explore(t, limit)

    def make(h, kids):
        it = iter(kids)
        return h.map_threads(lambda _c: next(it))

    return graph_to_term(root, graph, make)


def graph_to_term(root, succ: dict, make: Callable) -> Thread:
    """Build a term from an explicit finite graph.

    ``succ`` maps each node to its successor nodes; ``make(node, kids)``
    builds the constructor for ``node`` from already-built children.
    """
    cyclic = _cyclic_states(succ)
    names = {n: f"X{i}" for i, n in enumerate(n for n in succ if n in cyclic)}
    built: dict = {}

    def ref(n):
        return Var(names[n]) if n in names else build(n)

    def build(n):
        if n not in built:
            built[n] = make(n, [ref(k) for k in succ[n]])
        return built[n]

    if not names:
        return build(root)
    spec = RecSpec(tuple((names[n], make(n, [ref(k) for k in succ[n]]))
                         for n in names))
    if root in names:
        return RecRef(names[root], spec)
    return substitute(build(root), {n: RecRef(n, spec) for n in spec.names})


def actions_of(t: Thread) -> set:
    """Every action occurring syntactically in a plain term."""
    out = set()
    seen_specs = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, (Pcc, Pcs)):
            out.add(u.action)
        if isinstance(u, RecRef):
            if u.spec not in seen_specs:
                seen_specs.add(u.spec)
                stack.extend(b for _, b in u.spec.equations)
            continue
        stack.extend(u.thread_children())
    return out


def vector(items: Iterable[Thread]) -> tuple:
    return tuple(items)
