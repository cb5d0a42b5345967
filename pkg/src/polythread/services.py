"""Services as reply machines, derived services, and the use operator."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import StateOverflow, TermError
from .terms import (
    D, DEFAULT_LIMIT, S, Basic, Choice, Deadlock, ExternSwitch, LocAction, Mig,
    Operator, Pcc, Pcs, Stop, Switch, Tau, Thread, head_normal, is_tau, to_term,
)


class Reply(Enum):
    TRUE = "T"
    FALSE = "F"
    BLOCKED = "B"

    def __str__(self):
        return self.value


T, F, B = Reply.TRUE, Reply.FALSE, Reply.BLOCKED


def parse_reply(value) -> Reply | int:
    """``"T"``/``"F"``/``"B"`` or a positive integer."""
    if isinstance(value, Reply):
        return value
    if isinstance(value, bool):
        raise TermError(f"bad reply {value!r}")
    if isinstance(value, int):
        if value < 1:
            raise TermError(f"natural-number replies start at 1, got {value}")
        return value
    if isinstance(value, str):
        v = value.strip()
        if v in ("T", "F", "B"):
            return Reply(v)
        if v.isdigit():
            return parse_reply(int(v))
    raise TermError(f"bad reply {value!r}")


def format_reply(r) -> str | int:
    return r.value if isinstance(r, Reply) else r


# -- services ----------------------------------------------------------------


class Service:
    """Deterministic reply machine; subclasses are frozen dataclasses."""

    def step(self, method: str) -> tuple:
        raise NotImplementedError


@dataclass(frozen=True)
class Blocked(Service):
    def step(self, method):
        return B, self


BLOCKED = Blocked()


@dataclass(frozen=True)
class Constant(Service):
    value: object

    def step(self, method):
        if self.value == B:
            return B, self
        return self.value, self


@dataclass(frozen=True)
class NatCounter(Service):
    value: int = 0

    def step(self, method):
        if method == "inc":
            return T, NatCounter(self.value + 1)
        if method == "dec":
            if self.value == 0:
                return F, self
            return T, NatCounter(self.value - 1)
        if method == "iszero":
            return (T if self.value == 0 else F), self
        return B, BLOCKED


@dataclass(frozen=True)
class BoolRegister(Service):
    value: bool = False

    def step(self, method):
        if method == "get":
            return (T if self.value else F), self
        if method == "set_true":
            return T, BoolRegister(True)
        if method == "set_false":
            return T, BoolRegister(False)
        return B, BLOCKED


@dataclass(frozen=True)
class BitStack(Service):
    """Stack of bits: push0/push1 accept, pop replies with the popped bit."""

    contents: tuple = ()

    def step(self, method):
        if method == "push0":
            return T, BitStack(self.contents + (False,))
        if method == "push1":
            return T, BitStack(self.contents + (True,))
        if method == "empty":
            return (T if not self.contents else F), self
        if method == "pop":
            if not self.contents:
                return B, BLOCKED
            return (T if self.contents[-1] else F), BitStack(self.contents[:-1])
        return B, BLOCKED


@dataclass(frozen=True)
class Scripted(Service):
    """Replays a finite reply list for any method, then blocks."""

    replies: tuple = ()

    def step(self, method):
        if not self.replies:
            return B, self
        head = self.replies[0]
        if head == B:
            return B, Scripted(())
        return head, Scripted(self.replies[1:])


def reply(s: Service, m: str):
    return s.step(m)[0]


def derive(s: Service, m: str) -> Service:
    return s.step(m)[1]


def builtin_service(kind: str, params: dict | None = None) -> Service:
    params = dict(params or {})

    def take(name, default, check):
        v = params.pop(name, default)
        if not check(v):
            raise TermError(f"{kind}: bad parameter {name}={v!r}")
        return v

    if kind == "nat_counter":
        svc = NatCounter(take("value", 0, lambda v: isinstance(v, int) and not isinstance(v, bool) and v >= 0))
    elif kind == "bool_register":
        svc = BoolRegister(take("init", False, lambda v: isinstance(v, bool)))
    elif kind == "stack":
        bits = take("contents", [], lambda v: isinstance(v, list) and all(b in (0, 1) for b in v))
        svc = BitStack(tuple(bool(b) for b in bits))
    elif kind == "scripted":
        raw = take("replies", [], lambda v: isinstance(v, list))
        svc = Scripted(tuple(parse_reply(r) for r in raw))
    elif kind == "constant":
        svc = Constant(parse_reply(take("reply", "T", lambda v: True)))
    elif kind == "blocked":
        svc = BLOCKED
    else:
        raise TermError(f"unknown service kind {kind!r}")
    if params:
        raise TermError(f"{kind}: unexpected parameters {sorted(params)}")
    return svc


def load_services(text: str) -> dict:
    """Parse a service config: a JSON list of {focus, kind, params}."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise TermError(f"service config: {e}") from None
    if not isinstance(data, list):
        raise TermError("service config must be a list")
    out = {}
    for entry in data:
        if not isinstance(entry, dict) or "focus" not in entry or "kind" not in entry:
            raise TermError(f"bad service entry {entry!r}")
        focus = entry["focus"]
        if focus in out:
            raise TermError(f"duplicate service for focus {focus}")
        Basic(focus, "m")  # validates the identifier
        out[focus] = builtin_service(entry["kind"], entry.get("params"))
    return out


# -- use ---------------------------------------------------------------------


def _accepts(r, arity) -> int | None:
    """Branch index selected by reply ``r``, or None when it means deadlock."""
    if arity is None:
        if r == T:
            return 0
        if r == F:
            return 1
        return None
    if isinstance(r, int) and 1 <= r <= arity:
        return r - 1
    return None


@dataclass(frozen=True, eq=False)
class Use(Operator):
    """``thread /focus service``."""

    thread: Thread
    focus: str
    service: Service

    def _on(self, t, svc=None):
        return Use(t, self.focus, self.service if svc is None else svc)

    def reduce(self):
        h = head_normal(self.thread)
        if isinstance(h, (Stop, Deadlock, Switch, ExternSwitch)):
            return h
        if isinstance(h, (Mig, Choice)):
            return h.map_threads(self._on)
        a = h.action
        basic = a.action if isinstance(a, LocAction) else a
        if is_tau(a) or basic.focus != self.focus:
            return h.map_threads(self._on)
        r, nxt = self.service.step(basic.method)
        branches = h.thread_children()
        arity = len(branches) if isinstance(h, Pcs) else None
        idx = _accepts(r, arity)
        if idx is None:
            return D
        tau = Tau(origin=basic)
        if isinstance(a, LocAction):
            tau = LocAction(a.location, tau)
        cont = self._on(branches[idx], nxt)
        return Pcc(tau, cont, cont)


def use(t: Thread, focus: str, service: Service, limit: int = DEFAULT_LIMIT) -> Thread:
    """``t /focus service`` as a plain term, or lazily when too large."""
    node = Use(t, focus, service)
    try:
        return to_term(node, limit)
    except StateOverflow:
        return node


def uses_focus(t: Thread, focus: str) -> bool:
    from .terms import actions_of

    for a in actions_of(t):
        if isinstance(a, LocAction):
            a = a.action
        if isinstance(a, Basic) and a.focus == focus:
            return True
    return False


__all__ = [
    "Reply", "T", "F", "B", "Service", "Blocked", "BLOCKED", "Constant",
    "NatCounter", "BoolRegister", "BitStack", "Scripted", "reply", "derive",
    "builtin_service", "load_services", "Use", "use", "parse_reply",
    "format_reply", "uses_focus", "S", "D",
]
