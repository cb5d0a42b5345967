"""Traces, reply sources, resolvers, and the generic thread executor."""

from __future__ import annotations

import random
import sys
from dataclasses import dataclass, field

from .errors import ExecutionError, SwitchOutsideContext, TermError, UnresolvedChoice, UnservedFocus
from .services import B, F, Reply, T, _accepts, format_reply, parse_reply
from .terms import (
    Basic, Choice, Deadlock, ExternSwitch, LocAction, Mig, Pcc, Pcs, Stop, Switch, Tau,
    head_normal, is_tau,
)

TERMINATED = "terminated"
DEADLOCKED = "deadlocked"
CUT = "cut"


@dataclass(frozen=True)
class Step:
    action: object
    reply: object = None
    thread: int | None = field(default=None, compare=False)

    @property
    def location(self):
        return self.action.location if isinstance(self.action, LocAction) else None

    @property
    def bare(self):
        return self.action.action if isinstance(self.action, LocAction) else self.action

    def to_json(self, n: int) -> dict:
        out: dict = {"n": n}
        if self.location is not None:
            out["location"] = self.location
        if self.thread is not None:
            out["thread"] = self.thread
        a = self.bare
        out["action"] = str(a)
        if isinstance(a, Tau) and a.origin is not None:
            out["processed"] = str(a.origin)
        if self.reply is not None:
            out["reply"] = format_reply(self.reply)
        return out


@dataclass
class Trace:
    steps: list
    outcome: str
    choices: int = field(default=0, compare=False)
    turns: list = field(default_factory=list, compare=False, repr=False)

    def actions(self) -> list:
        return [s.action for s in self.steps]

    def without_tau(self) -> Trace:
        return Trace([s for s in self.steps if not is_tau(s.action)], self.outcome, self.choices)

    def to_json(self) -> dict:
        return {
            "steps": [s.to_json(i) for i, s in enumerate(self.steps, 1)],
            "outcome": self.outcome,
            "stats": {"steps": len(self.steps), "choices": self.choices},
        }

    def __str__(self):
        body = ", ".join(str(s.action) for s in self.steps)
        return f"[{body}] {self.outcome}"


class ReplySource:
    """Where basic actions get their replies during a simulation.

    Order of consultation: a per-focus service, the default True for
    ``tls``, a reply script, then a seeded random source.
    """

    def __init__(self, script=None, services=None, seed=None, tls_default=True):
        self.script = [parse_reply(r) for r in (script or [])]
        self._pos = 0
        self.services = dict(services or {})
        self.rng = random.Random(seed) if seed is not None else None
        self.tls_default = tls_default

    def reply(self, action: Basic, arity: int | None = None):
        svc = self.services.get(action.focus)
        if svc is not None:
            r, self.services[action.focus] = svc.step(action.method)
            return r
        if action.focus == "tls" and self.tls_default:
            return T
        if self._pos < len(self.script):
            r = self.script[self._pos]
            self._pos += 1
            return r
        if self.rng is not None:
            if arity is None:
                return T if self.rng.random() < 0.5 else F
            return self.rng.randint(1, arity)
        if self.script:
            raise ExecutionError("reply script exhausted")
        raise UnservedFocus(action.focus)


class Resolver:
    """Makes external choices: an index in [1, k], or 0 for deadlock."""

    def __init__(self, script=None, seed=None, stream=None):
        self.script = list(script) if script is not None else None
        self.rng = random.Random(seed) if seed is not None else None
        self.stream = stream
        if self.script is not None and any(c < 0 for c in self.script):
            raise TermError("resolver choices must be natural numbers")

    @classmethod
    def parse(cls, text: str) -> Resolver:
        text = text.strip()
        if text == "interactive":
            return cls(stream=sys.stdin)
        kind, _, arg = text.partition(":")
        try:
            if kind == "script":
                return cls(script=[int(x) for x in arg.split(",") if x.strip()])
            if kind == "seed":
                return cls(seed=int(arg))
        except ValueError:
            pass
        raise TermError(f"bad resolver spec {text!r}")

    def choose(self, k: int) -> int:
        if self.script is not None:
            if not self.script:
                raise UnresolvedChoice()
            c = self.script.pop(0)
        elif self.rng is not None:
            c = self.rng.randint(0, k)
        elif self.stream is not None:
            line = self.stream.readline()
            if not line:
                raise UnresolvedChoice()
            try:
                c = int(line)
            except ValueError:
                raise UnresolvedChoice(f"not a choice: {line.strip()!r}") from None
        else:
            raise UnresolvedChoice()
        return c if 0 <= c <= k else 0


def perform(action, arity, replies: ReplySource | None, attached: dict | None):
    """Reply for one action, and the step to record (None when blocked).

    Foci listed in ``attached`` are processed as by the use operator: the
    step is recorded as a tau carrying the processed action.
    """
    if is_tau(action):
        return (T if arity is None else 1), Step(action, None)
    loc = action.location if isinstance(action, LocAction) else None
    basic = action.action if loc is not None else action
    if attached and basic.focus in attached:
        r, attached[basic.focus] = attached[basic.focus].step(basic.method)
        tau = Tau(origin=basic)
        return r, Step(LocAction(loc, tau) if loc is not None else tau)
    if replies is None:
        raise UnservedFocus(basic.focus)
    r = replies.reply(basic, arity)
    return r, Step(action, r)


def execute(t, replies: ReplySource | None = None, resolver: Resolver | None = None,
            max_steps: int = 1000, attached: dict | None = None) -> Trace:
    """Run a closed thread to completion, deadlock, or the step cut."""
    attached = dict(attached) if attached else None
    steps: list = []
    choices = 0
    current = t
    while True:
        h = head_normal(current)
        if isinstance(h, Stop):
            return Trace(steps, TERMINATED, choices)
        if isinstance(h, Deadlock):
            return Trace(steps, DEADLOCKED, choices)
        if isinstance(h, (Switch, ExternSwitch)):
            raise SwitchOutsideContext()
        if isinstance(h, Mig):
            raise ExecutionError("migration outside distributed interleaving")
        if isinstance(h, Choice):
            if resolver is None:
                raise UnresolvedChoice()
            j = resolver.choose(len(h.branches))
            choices += 1
            if j == 0:
                return Trace(steps, DEADLOCKED, choices)
            current = h.branches[j - 1]
            continue
        if len(steps) >= max_steps:
            return Trace(steps, CUT, choices)
        branches = h.thread_children()
        arity = len(branches) if isinstance(h, Pcs) else None
        r, step = perform(h.action, arity, replies, attached)
        idx = _accepts(r, arity)
        if idx is None:
            return Trace(steps, DEADLOCKED, choices)
        steps.append(step)
        current = branches[idx]


__all__ = [
    "Step", "Trace", "ReplySource", "Resolver", "execute", "perform",
    "TERMINATED", "DEADLOCKED", "CUT", "B", "Reply",
]
