"""Poly-threading: sequencing fragments through Switch/Extern, and internalization."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ExecutionError, TermError, UnresolvedChoice
from .runtime import CUT, DEADLOCKED, TERMINATED, ReplySource, Resolver, Trace, perform
from .services import _accepts
from .terms import (
    D, DEFAULT_LIMIT, EXT_SEL, Basic, Choice, Deadlock, ExternSwitch, Mig, Operator,
    Pcc, Pcs, Stop, Switch, Thread, head_normal, map_structure, prefix, tls_init, to_term,
)


@dataclass(frozen=True, eq=False)
class Spt(Operator):
    """``spt(thread, alpha)``."""

    thread: Thread
    alpha: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(self.alpha))

    def _on(self, t):
        return Spt(t, self.alpha)

    def reduce(self):
        h = head_normal(self.thread)
        n = len(self.alpha)
        if isinstance(h, (Stop, Deadlock)):
            return h
        if isinstance(h, Switch):
            if 1 <= h.index <= n:
                return prefix(tls_init(h.index), self._on(self.alpha[h.index - 1]))
            return D
        if isinstance(h, ExternSwitch):
            if n == 0:
                return D
            return Choice(tuple(prefix(tls_init(j), self._on(x))
                                for j, x in enumerate(self.alpha, 1)))
        if isinstance(h, Mig):
            raise TermError("migration is not defined under poly-threading")
        return h.map_threads(self._on)


def spt(t: Thread, alpha, resolver: Resolver | None = None, max_steps: int = 1000,
        replies: ReplySource | None = None, attached: dict | None = None) -> Trace:
    """Run ``spt(t, alpha)`` as a small-step machine."""
    alpha = tuple(alpha)
    n = len(alpha)
    attached = dict(attached) if attached else None
    if replies is None:
        replies = ReplySource()
    steps: list = []
    choices = 0
    current = t
    while True:
        h = head_normal(current)
        if isinstance(h, Stop):
            return Trace(steps, TERMINATED, choices)
        if isinstance(h, Deadlock):
            return Trace(steps, DEADLOCKED, choices)
        if isinstance(h, Mig):
            raise ExecutionError("migration outside distributed interleaving")
        target = None
        if isinstance(h, Switch):
            if not 1 <= h.index <= n:
                return Trace(steps, DEADLOCKED, choices)
            target = h.index
        elif isinstance(h, (ExternSwitch, Choice)):
            k = n if isinstance(h, ExternSwitch) else len(h.branches)
            if k == 0:
                return Trace(steps, DEADLOCKED, choices)
            if resolver is None:
                raise UnresolvedChoice()
            j = resolver.choose(k)
            choices += 1
            if j == 0:
                return Trace(steps, DEADLOCKED, choices)
            if isinstance(h, Choice):
                current = h.branches[j - 1]
                continue
            target = j
        if len(steps) >= max_steps:
            return Trace(steps, CUT, choices)
        if target is not None:
            r, step = perform(tls_init(target), None, replies, attached)
            if _accepts(r, None) is None:
                return Trace(steps, DEADLOCKED, choices)
            steps.append(step)
            current = alpha[target - 1]
            continue
        branches = h.thread_children()
        arity = len(branches) if isinstance(h, Pcs) else None
        r, step = perform(h.action, arity, replies, attached)
        idx = _accepts(r, arity)
        if idx is None:
            return Trace(steps, DEADLOCKED, choices)
        steps.append(step)
        current = branches[idx]


def spt_term(t: Thread, alpha, limit: int = DEFAULT_LIMIT) -> Thread:
    """The thread denoted by ``spt(t, alpha)`` as a plain (recursive) term."""
    return to_term(Spt(t, tuple(alpha)), limit)


# -- internalization ---------------------------------------------------------


def swap_extern(t: Thread, k: int) -> Thread:
    """Simultaneously Extern -> Switch(k+1) and Switch(k+1) -> D."""

    def leaf(u):
        if isinstance(u, ExternSwitch):
            return Switch(k + 1)
        if isinstance(u, Switch) and u.index == k + 1:
            return D
        return None

    return map_structure(t, leaf)


def selector(k: int) -> Pcs:
    return Pcs(EXT_SEL, tuple(Switch(i) for i in range(1, k + 1)))


def internalize(p: Thread, ps) -> tuple:
    ps = tuple(ps)
    k = len(ps)
    if k < 1:
        raise TermError("internalization needs a non-empty thread vector")
    rho = [swap_extern(x, k) for x in ps]
    return swap_extern(p, k), tuple(rho) + (selector(k),)


def binary_selector(lo: int, hi: int) -> Thread:
    """Select among Switch(lo..hi) by halving; True picks the lower part."""
    if lo == hi:
        return Switch(lo)
    mid = lo + (hi - lo + 1) // 2 - 1
    return Pcc(Basic("ext", f"sel_{lo}_{hi}"), binary_selector(lo, mid),
               binary_selector(mid + 1, hi))


def internalize_binary(p: Thread, ps) -> tuple:
    ps = tuple(ps)
    k = len(ps)
    if k < 1:
        raise TermError("internalization needs a non-empty thread vector")
    rho = [swap_extern(x, k) for x in ps]
    return swap_extern(p, k), tuple(rho) + (binary_selector(1, k),)


def selection_paths(sel: Thread) -> dict:
    """Switch index -> number of actions on the path reaching it."""
    out: dict = {}
    todo = [(sel, 0)]
    while todo:
        t, d = todo.pop()
        if isinstance(t, Switch):
            out.setdefault(t.index, []).append(d)
        else:
            todo.extend((c, d + 1) for c in t.thread_children())
    return out
