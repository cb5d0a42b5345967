"""ACP-style process terms and the translation of threads and services into them.

Process terms are stepped by a small structural operational semantics
(``proc_step``). ``trace_match`` and ``use_match`` compare a translated
process with the thread it came from by collapsing the send/receive
handshakes back into thread-level steps.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

from .errors import PolythreadError, StateOverflow, TermError
from .interleave import Std
from .polythreading import Spt
from .services import B, F, T, Reply, Service, Use
from .terms import (
    DEFAULT_DEPTH, DEFAULT_LIMIT, TAU, Basic, Choice, Deadlock, ExternSwitch, Mig, Node,
    Pcc, Pcs, RecRef, Stop, Switch, Tau, Thread, Var, actions_of, head_normal,
)


class TranslationError(PolythreadError):
    """A thread construct with no process counterpart."""


# -- actions -----------------------------------------------------------------

SND, RCV, STP, STP_BAR, STP_STAR, INTERNAL, LIT = (
    "snd", "rcv", "stp", "stp_bar", "stp_star", "i", "lit")


@dataclass(frozen=True, eq=False)
class PAct(Node):
    """Process action; ``channel`` is a focus, ``ext`` or ``serv``."""

    kind: str
    channel: str | None = None
    data: object = None

    def __str__(self):
        if self.kind in (SND, RCV):
            d = self.data.value if isinstance(self.data, Reply) else self.data
            return f"{self.kind}_{self.channel}({d})"
        if self.kind == LIT:
            return str(self.data)
        return {STP: "stp", STP_BAR: "stp_bar", STP_STAR: "stp*", INTERNAL: "i"}[self.kind]


def snd(channel, data) -> PAct:
    return PAct(SND, channel, data)


def rcv(channel, data) -> PAct:
    return PAct(RCV, channel, data)


def lit(action) -> PAct:
    return PAct(LIT, None, action)


ACT_STP = PAct(STP)
ACT_STP_BAR = PAct(STP_BAR)
ACT_STP_STAR = PAct(STP_STAR)
ACT_I = PAct(INTERNAL)


def comm(a: PAct, b: PAct) -> PAct | None:
    """Result of performing ``a`` and ``b`` synchronously, if defined."""
    for x, y in ((a, b), (b, a)):
        if (x.kind == SND and y.kind == RCV and x.channel == y.channel
                and x.channel != "serv" and x.data == y.data):
            return ACT_I
        if x.kind == STP and y.kind == STP_BAR:
            return ACT_STP_STAR
    return None


# -- action sets and renamings -----------------------------------------------


@dataclass(frozen=True, eq=False)
class ChannelSet(Node):
    """All sends and receives on one focus (the encapsulation set A_f)."""

    focus: str

    def __contains__(self, a):
        return a.kind in (SND, RCV) and a.channel == self.focus

    def __str__(self):
        return f"A_{self.focus}"


def encap_Af(focus: str) -> ChannelSet:
    return ChannelSet(focus)


STOP_SET = frozenset({ACT_STP, ACT_STP_BAR})


@dataclass(frozen=True, eq=False)
class ServiceRenaming(Node):
    """R_f: service-side sends and receives move to focus ``f``."""

    focus: str

    def __call__(self, a: PAct) -> PAct:
        if a.channel == "serv" and a.kind in (SND, RCV):
            return PAct(a.kind, self.focus, a.data)
        return a

    def __str__(self):
        return f"R_{self.focus}"


def rename_Rf(focus: str, a: PAct) -> PAct:
    return ServiceRenaming(focus)(a)


@dataclass(frozen=True, eq=False)
class ActionRenaming(Node):
    """Finite renaming given as (from, to) pairs; identity elsewhere."""

    pairs: tuple

    def __call__(self, a):
        for x, y in self.pairs:
            if a == x:
                return y
        return a

    def __str__(self):
        return ",".join(f"{x}->{y}" for x, y in self.pairs)


STAR_TO_STP = ActionRenaming(((ACT_STP_STAR, ACT_STP),))


# -- conditions --------------------------------------------------------------


class Cond(Node):
    def holds(self) -> bool:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class Top(Cond):
    def holds(self):
        return True

    def __str__(self):
        return "top"


@dataclass(frozen=True, eq=False)
class Bot(Cond):
    def holds(self):
        return False

    def __str__(self):
        return "bot"


@dataclass(frozen=True, eq=False)
class Atom(Cond):
    """``service(<method>) = reply``, evaluated against a concrete state."""

    service: Service
    method: str
    reply: object

    def holds(self):
        return self.service.step(self.method)[0] == self.reply

    def __str__(self):
        return f"H({self.method})={self.reply}"


@dataclass(frozen=True, eq=False)
class Not(Cond):
    arg: Cond

    def holds(self):
        return not self.arg.holds()

    def __str__(self):
        return f"-({self.arg})"


@dataclass(frozen=True, eq=False)
class And(Cond):
    left: Cond
    right: Cond

    def holds(self):
        return self.left.holds() and self.right.holds()

    def __str__(self):
        return f"({self.left} & {self.right})"


@dataclass(frozen=True, eq=False)
class Or(Cond):
    left: Cond
    right: Cond

    def holds(self):
        return self.left.holds() or self.right.holds()

    def __str__(self):
        return f"({self.left} | {self.right})"


# -- process terms -----------------------------------------------------------


class ProcTerm(Node):
    pass


@dataclass(frozen=True, eq=False)
class Dead(ProcTerm):
    pass


DEAD = Dead()


@dataclass(frozen=True, eq=False)
class Act(ProcTerm):
    action: PAct


@dataclass(frozen=True, eq=False)
class Alt(ProcTerm):
    left: ProcTerm
    right: ProcTerm


@dataclass(frozen=True, eq=False)
class Seq(ProcTerm):
    first: ProcTerm
    then: ProcTerm


@dataclass(frozen=True, eq=False)
class Guard(ProcTerm):
    cond: Cond
    body: ProcTerm


@dataclass(frozen=True, eq=False)
class Par(ProcTerm):
    left: ProcTerm
    right: ProcTerm


@dataclass(frozen=True, eq=False)
class Encap(ProcTerm):
    blocked: object  # a set of actions or a ChannelSet
    body: ProcTerm


@dataclass(frozen=True, eq=False)
class Rename(ProcTerm):
    mapping: object  # callable PAct -> PAct
    body: ProcTerm


class ProcSpec:
    """Mutable registry of process equations; compared by identity.

    Equations may be added after references to them are created, which is
    how mutually recursive translations are tied together.
    """

    def __init__(self):
        self.equations: dict = {}

    def define(self, name: str, body: ProcTerm):
        if name in self.equations:
            raise TermError(f"duplicate process variable {name}")
        self.equations[name] = body

    def body(self, name: str) -> ProcTerm:
        try:
            return self.equations[name]
        except KeyError:
            raise TermError(f"unbound process variable {name}") from None


@dataclass(frozen=True, eq=False)
class PRecRef(ProcTerm):
    name: str
    spec: ProcSpec


def act(a: PAct) -> Act:
    return Act(a)


def seq(*parts) -> ProcTerm:
    """Right-associated sequential composition; PActs are wrapped."""
    parts = [Act(p) if isinstance(p, PAct) else p for p in parts]
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Seq(p, out)
    return out


def alt(*parts) -> ProcTerm:
    """Right-associated alternative composition."""
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Alt(p, out)
    return out


# -- operational semantics ---------------------------------------------------


class _Terminated:
    def __repr__(self):
        return "TERMINATED"


TERMINATED = _Terminated()


def proc_step(p: ProcTerm) -> frozenset:
    """All one-step transitions ``(action, successor)`` of a closed term."""
    return _step(p, ())


def _step(p, unfolding):
    if isinstance(p, Dead):
        return frozenset()
    if isinstance(p, Act):
        return frozenset({(p.action, TERMINATED)})
    if isinstance(p, Alt):
        return _step(p.left, unfolding) | _step(p.right, unfolding)
    if isinstance(p, Seq):
        return frozenset((a, p.then if q is TERMINATED else Seq(q, p.then))
                         for a, q in _step(p.first, unfolding))
    if isinstance(p, Guard):
        return _step(p.body, unfolding) if p.cond.holds() else frozenset()
    if isinstance(p, Encap):
        return frozenset((a, q if q is TERMINATED else Encap(p.blocked, q))
                         for a, q in _step(p.body, unfolding) if a not in p.blocked)
    if isinstance(p, Rename):
        return frozenset((p.mapping(a), q if q is TERMINATED else Rename(p.mapping, q))
                         for a, q in _step(p.body, unfolding))
    if isinstance(p, Par):
        left = _step(p.left, unfolding)
        right = _step(p.right, unfolding)
        out = set()
        for a, q in left:
            out.add((a, p.right if q is TERMINATED else Par(q, p.right)))
        for b, r in right:
            out.add((b, p.left if r is TERMINATED else Par(p.left, r)))
        for a, q in left:
            for b, r in right:
                c = comm(a, b)
                if c is None:
                    continue
                if q is TERMINATED:
                    out.add((c, r))
                elif r is TERMINATED:
                    out.add((c, q))
                else:
                    out.add((c, Par(q, r)))
        return frozenset(out)
    if isinstance(p, PRecRef):
        key = (p.name, id(p.spec))
        if key in unfolding:
            raise TermError(f"unguarded recursion through {p.name}")
        return _step(p.spec.body(p.name), unfolding + (key,))
    if isinstance(p, LazyService):
        return _step(p.expand(), unfolding)
    raise TermError(f"not a process term: {p!r}")


# -- translation -------------------------------------------------------------


def _all_methods(t: Thread, focus: str) -> tuple:
    out = set()
    for a in actions_of(t):
        if isinstance(a, Basic) and a.focus == focus:
            out.add(a.method)
    return tuple(sorted(out))


class _Translator:
    """Maps threads to process terms, sharing one equation registry."""

    def __init__(self, tls_as_basic=False, swap_branches=False, drop_encap=False,
                 methods=None, limit=DEFAULT_LIMIT):
        self.spec = ProcSpec()
        self.tls_as_basic = tls_as_basic
        self.swap_branches = swap_branches
        self.drop_encap = drop_encap
        self.methods = methods
        self.limit = limit
        self._fragments: dict = {}
        self._recspecs: dict = {}
        self._counter = 0

    def fresh(self, stem: str) -> str:
        self._counter += 1
        return f"{stem}{self._counter}"

    def fragment(self, alpha: tuple, i: int) -> ProcTerm:
        key = (alpha, i)
        if key not in self._fragments:
            name = self.fresh(f"F{i}_")
            self._fragments[key] = PRecRef(name, self.spec)
            self.spec.define(name, self.thread(alpha[i - 1], alpha))
        return self._fragments[key]

    def start(self, alpha, i):
        if self.tls_as_basic:
            nxt = self.fragment(alpha, i)
            return seq(snd("tls", "init"), alt(seq(rcv("tls", T), nxt), seq(rcv("tls", F), nxt)))
        return seq(lit(Basic("tls", "init")), self.fragment(alpha, i))

    def recref(self, t: RecRef, alpha) -> PRecRef:
        key = (t.spec, alpha)
        if key not in self._recspecs:
            stem = self.fresh("R")
            names = {n: f"{stem}_{n}" for n in t.spec.names}
            self._recspecs[key] = names
            for n, body in t.spec.equations:
                self.spec.define(names[n], self.thread(body, alpha, names))
        return PRecRef(self._recspecs[key][t.name], self.spec)

    def thread(self, t: Thread, alpha: tuple = (), env=None) -> ProcTerm:
        alpha = tuple(alpha)
        if isinstance(t, Var):
            if env is None or t.name not in env:
                raise TermError(f"free recursion variable {t.name}")
            return PRecRef(env[t.name], self.spec)
        if isinstance(t, RecRef):
            return self.recref(t, alpha)
        if isinstance(t, Stop):
            return Act(ACT_STP)
        if isinstance(t, Deadlock):
            return seq(ACT_I, DEAD)
        if isinstance(t, Pcc):
            a = t.action
            if isinstance(a, Tau):
                return seq(ACT_I, ACT_I, self.thread(t.pos, alpha, env))
            if not isinstance(a, Basic):
                raise TranslationError(f"no process counterpart for action {a}")
            pos = self.thread(t.pos, alpha, env)
            neg = self.thread(t.neg, alpha, env)
            if self.swap_branches:
                pos, neg = neg, pos
            return seq(snd(a.focus, a.method),
                       alt(seq(rcv(a.focus, T), pos), seq(rcv(a.focus, F), neg)))
        if isinstance(t, Switch):
            if 1 <= t.index <= len(alpha):
                return self.start(alpha, t.index)
            return seq(ACT_I, DEAD)
        if isinstance(t, ExternSwitch):
            arms = [seq(rcv("ext", j), self.start(alpha, j)) for j in range(1, len(alpha) + 1)]
            return alt(*arms, seq(ACT_I, DEAD))
        if isinstance(t, Choice):
            arms = [seq(rcv("ext", j), self.thread(b, alpha, env))
                    for j, b in enumerate(t.branches, 1)]
            return alt(*arms, seq(ACT_I, DEAD))
        if isinstance(t, Spt):
            return self.thread(t.thread, t.alpha, env)
        if isinstance(t, Use):
            inner = self.thread(t.thread, alpha, env)
            methods = self.methods or _all_methods(t.thread, t.focus) or ("m",)
            svc = Rename(ServiceRenaming(t.focus), service_process(t.service, methods, self.limit))
            body = Par(inner, svc)
            if not self.drop_encap:
                body = Encap(ChannelSet(t.focus), body)
            return Rename(STAR_TO_STP, Encap(STOP_SET, body))
        if isinstance(t, (Pcs, Mig)):
            raise TranslationError(f"no process counterpart for {type(t).__name__}")
        if isinstance(t, Std):
            raise TranslationError("no process counterpart for deadlock at termination")
        raise TranslationError(f"no process counterpart for {type(t).__name__}")


def translate_thread(t: Thread, alpha=(), tls_as_basic=False, methods=None,
                     limit: int = DEFAULT_LIMIT, swap_branches=False,
                     drop_encap=False) -> ProcTerm:
    """The process interpretation of ``t`` under fragment vector ``alpha``.

    ``swap_branches`` and ``drop_encap`` deliberately corrupt the
    translation; they exist so tests can check that comparisons fail.
    """
    tr = _Translator(tls_as_basic, swap_branches, drop_encap, methods, limit)
    return tr.thread(t, tuple(alpha))


def _service_body(state: Service, methods, ref) -> ProcTerm:
    arms = []
    for m in methods:
        r, nxt = state.step(m)
        accepted = Or(Atom(state, m, T), Atom(state, m, F))
        arms.append(seq(rcv("serv", m), snd("serv", r),
                        alt(Guard(accepted, ref(nxt)), Guard(Not(accepted), ref(state)))))
    return alt(*arms, Act(ACT_STP_BAR))


def translate_service(s: Service, methods, limit: int = DEFAULT_LIMIT) -> PRecRef:
    """Recursive specification over the service states reachable via ``methods``."""
    methods = tuple(methods)
    if not methods:
        raise TermError("a service translation needs at least one method")
    spec = ProcSpec()
    names: dict = {}
    todo = deque([s])
    names[s] = "X0"
    while todo:
        h = todo.popleft()
        for m in methods:
            nxt = h.step(m)[1]
            if nxt not in names:
                if len(names) >= limit:
                    raise StateOverflow(f"service has more than {limit} states")
                names[nxt] = f"X{len(names)}"
                todo.append(nxt)
    for h, name in names.items():
        spec.define(name, _service_body(h, methods, lambda st: PRecRef(names[st], spec)))
    return PRecRef("X0", spec)


@dataclass(frozen=True, eq=False)
class LazyService(ProcTerm):
    """Service process generated on demand (for services with infinitely many states)."""

    state: Service
    methods: tuple

    def expand(self) -> ProcTerm:
        return _service_body(self.state, self.methods, lambda st: LazyService(st, self.methods))


def service_process(s: Service, methods, limit: int = DEFAULT_LIMIT) -> ProcTerm:
    try:
        return translate_service(s, methods, limit)
    except StateOverflow:
        return LazyService(s, tuple(methods))


# -- comparison with threads -------------------------------------------------

_TERM_SIG = (("term",), ())


def _thread_obs(h: Thread) -> tuple:
    if isinstance(h, Stop):
        return (("S",), ())
    if isinstance(h, Deadlock):
        return (("D",), ())
    if isinstance(h, Pcc):
        a = h.action
        if isinstance(a, Tau):
            return (("tau",), (h.pos,))
        if a.focus == "tls" and a.method == "init":
            return (("start",), (h.pos,))
        return (("act", a), (h.pos, h.neg))
    if isinstance(h, Choice):
        return (("choice", len(h.branches)), h.branches)
    raise TranslationError(f"cannot observe {type(h).__name__}")


def _only(trans):
    return next(iter(trans)) if len(trans) == 1 else None


def _proc_obs(p) -> tuple:
    """Collapse handshakes of a process state into one thread-like step."""
    if p is TERMINATED:
        return _TERM_SIG
    trans = proc_step(p)
    if not trans:
        return (("dead",), ())
    one = _only(trans)
    if one is not None:
        a, q = one
        if a == ACT_STP and q is TERMINATED:
            return (("S",), ())
        if a == ACT_I and q is not TERMINATED:
            nxt = proc_step(q)
            if not nxt:
                return (("D",), ())
            two = _only(nxt)
            if two is not None and two[0] == ACT_I:
                return (("tau",), (two[1],))
        if a.kind == LIT and a.data == Basic("tls", "init"):
            return (("start",), (q,))
        if a.kind == SND and a.channel not in ("ext", "serv") and q is not TERMINATED:
            replies = dict((b.data, r) for b, r in proc_step(q)
                           if b.kind == RCV and b.channel == a.channel)
            if len(proc_step(q)) == 2 and set(replies) == {T, F}:
                if a.channel == "tls" and a.data == "init" and replies[T] == replies[F]:
                    return (("start",), (replies[T],))
                return (("act", Basic(a.channel, a.data)), (replies[T], replies[F]))
    arms = {}
    stuck = 0
    for a, q in trans:
        if a.kind == RCV and a.channel == "ext":
            arms[a.data] = q
        elif a == ACT_I and q is not TERMINATED and not proc_step(q):
            stuck += 1
        else:
            break
    else:
        k = len(arms)
        if stuck == 1 and k >= 1 and set(arms) == set(range(1, k + 1)):
            return (("choice", k), tuple(arms[j] for j in range(1, k + 1)))
    return (("other", tuple(sorted(str(a) for a, _ in trans))), ())


def observe_match(t: Thread, p: ProcTerm, depth: int = DEFAULT_DEPTH,
                  limit: int = DEFAULT_LIMIT) -> bool:
    """Bisimilarity of ``t`` and the collapsed transition system of ``p``.

    Exhaustive while at most ``limit`` state pairs arise, otherwise
    bounded to ``depth`` observation steps.
    """
    tmemo: dict = {}

    def tsig(x):
        h = tmemo.get(x)
        if h is None:
            h = tmemo[x] = head_normal(x)
        return _thread_obs(h), h

    result = _match_pairs(tsig, t, p, None, limit)
    if result is None:
        result = _match_pairs(tsig, t, p, depth, None)
    return bool(result)


def _match_pairs(tsig, t, p, depth, limit):
    pmemo: dict = {}

    def psig(q):
        if q not in pmemo:
            pmemo[q] = _proc_obs(q)
        return pmemo[q]

    ht = tsig(t)[1]
    start = (ht, p)
    seen = {start}
    todo = deque([(start, 0)])
    while todo:
        (x, q), d = todo.popleft()
        (lx, cx), _ = tsig(x)
        lq, cq = psig(q)
        if lx != lq or len(cx) != len(cq):
            return False
        if depth is not None and d + 1 >= depth:
            continue
        for a, b in zip(cx, cq):
            pair = (tsig(a)[1], b)
            if pair not in seen:
                if limit is not None and len(seen) >= limit:
                    return None
                seen.add(pair)
                todo.append((pair, d + 1))
    return True


def trace_match(t: Thread, alpha=(), depth: int = DEFAULT_DEPTH, tls_as_basic=False,
                swap_branches=False) -> bool:
    """Does the translation of ``t`` behave like ``t`` once handshakes are collapsed?"""
    alpha = tuple(alpha)
    p = translate_thread(t, alpha, tls_as_basic=tls_as_basic, swap_branches=swap_branches)
    return observe_match(Spt(t, alpha), p, depth)


def use_match(t: Thread, focus: str, service: Service, depth: int = DEFAULT_DEPTH,
              drop_encap=False, swap_branches=False) -> bool:
    """Thread-level use versus its parallel-composition translation."""
    node = Use(t, focus, service)
    p = translate_thread(node, drop_encap=drop_encap, swap_branches=swap_branches)
    return observe_match(node, p, depth)


# -- printing ----------------------------------------------------------------


def _set_str(h) -> str:
    if isinstance(h, ChannelSet):
        return str(h)
    return "{" + ",".join(sorted(str(a) for a in h)) + "}"


def pretty(p: ProcTerm) -> str:
    """Text form; recursion references print as ``<X>``."""
    if p is TERMINATED:
        return "√"
    if isinstance(p, Dead):
        return "δ"
    if isinstance(p, Act):
        return str(p.action)
    if isinstance(p, Alt):
        return f"{pretty(p.left)} + {pretty(p.right)}"
    if isinstance(p, Seq):
        return f"{_atomic(p.first)} · {_atomic(p.then)}"
    if isinstance(p, Guard):
        return f"{p.cond} :→ {_atomic(p.body)}"
    if isinstance(p, Par):
        return f"{_atomic(p.left)} ∥ {_atomic(p.right)}"
    if isinstance(p, Encap):
        return f"∂_{_set_str(p.blocked)}({pretty(p.body)})"
    if isinstance(p, Rename):
        return f"ρ_{{{p.mapping}}}({pretty(p.body)})"
    if isinstance(p, PRecRef):
        return f"<{p.name}>"
    if isinstance(p, LazyService):
        return f"<H:{p.state}>"
    raise TermError(f"not a process term: {p!r}")


def _atomic(p) -> str:
    s = pretty(p)
    return f"({s})" if isinstance(p, (Alt, Par, Guard)) else s


def pretty_spec(p: ProcTerm) -> str:
    """``p`` followed by every equation reachable from it."""
    lines = [pretty(p)]
    specs = []
    stack = [p]
    seen_nodes = set()
    while stack:
        q = stack.pop()
        if id(q) in seen_nodes:
            continue
        seen_nodes.add(id(q))
        if isinstance(q, PRecRef):
            if q.spec not in specs:
                specs.append(q.spec)
                stack.extend(q.spec.equations.values())
            continue
        for v in vars(q).values():
            if isinstance(v, ProcTerm):
                stack.append(v)
    for spec in specs:
        for name, body in spec.equations.items():
            lines.append(f"  {name} = {pretty(body)}")
    return "\n".join(lines)


def transition_dump(p: ProcTerm, limit: int = DEFAULT_LIMIT) -> str:
    """States and labelled edges reachable from ``p`` as JSON text."""
    index = {p: 0}
    order = [p]
    edges = []
    todo = deque([p])
    while todo:
        q = todo.popleft()
        if q is TERMINATED:
            continue
        for a, r in sorted(proc_step(q), key=lambda e: (str(e[0]), pretty(e[1]))):
            if r not in index:
                if len(index) >= limit:
                    raise StateOverflow(f"more than {limit} process states")
                index[r] = len(order)
                order.append(r)
                todo.append(r)
            edges.append({"from": index[q], "action": str(a), "to": index[r]})
    states = [{"id": i, "term": pretty(q), "terminated": q is TERMINATED}
              for i, q in enumerate(order)]
    return json.dumps({"initial": 0, "states": states, "edges": edges}, indent=2,
                      ensure_ascii=False)


__all__ = [
    "PAct", "snd", "rcv", "lit", "comm", "ACT_STP", "ACT_STP_BAR", "ACT_STP_STAR", "ACT_I",
    "ChannelSet", "encap_Af", "ServiceRenaming", "rename_Rf", "ActionRenaming",
    "Cond", "Top", "Bot", "Atom", "Not", "And", "Or",
    "ProcTerm", "Dead", "DEAD", "Act", "Alt", "Seq", "Guard", "Par", "Encap", "Rename",
    "ProcSpec", "PRecRef", "LazyService", "act", "seq", "alt", "proc_step", "TERMINATED",
    "translate_thread", "translate_service", "service_process", "trace_match",
    "use_match", "observe_match", "pretty", "pretty_spec", "transition_dump",
    "TranslationError", "B",
]
