"""Cyclic strategic interleaving of poly-threaded thread vectors."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

from .errors import ExecutionError, TermError, UnresolvedChoice
from .runtime import CUT, DEADLOCKED, TERMINATED, ReplySource, Resolver, Trace, perform
from .services import _accepts
from .terms import (
    D, DEFAULT_LIMIT, Choice, Deadlock, ExternSwitch, Mig, Operator, Pcs, S, Stop,
    Switch, Thread, head_normal, map_structure, prefix, tls_init, to_term,
)


def std(t: Thread) -> Thread:
    """Deadlock at termination: every S leaf becomes D."""

    def leaf(u):
        if isinstance(u, Stop):
            return D
        if isinstance(u, Operator):
            return Std(u)
        return None

    return map_structure(t, leaf)


@dataclass(frozen=True, eq=False)
class Std(Operator):
    thread: Thread

    def reduce(self):
        h = head_normal(self.thread)
        if isinstance(h, Stop):
            return D
        if isinstance(h, (Deadlock, Switch, ExternSwitch)):
            return h
        return h.map_threads(Std)


@dataclass(frozen=True, eq=False)
class Pci(Operator):
    """``pci(beta, alpha)`` with beta the rotating vector, alpha the fragments."""

    beta: tuple
    alpha: tuple

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(self.beta))
        object.__setattr__(self, "alpha", tuple(self.alpha))

    def reduce(self):
        if not self.beta:
            return S
        head, rest, alpha = self.beta[0], self.beta[1:], self.alpha
        h = head_normal(head)
        n = len(alpha)

        def then(x):
            return Pci(rest + (x,), alpha)

        if isinstance(h, Stop):
            return Pci(rest, alpha)
        if isinstance(h, Deadlock):
            return Std(Pci(rest, alpha))
        if isinstance(h, Switch):
            if 1 <= h.index <= n:
                return prefix(tls_init(h.index), then(alpha[h.index - 1]))
            return Std(Pci(rest, alpha))
        if isinstance(h, ExternSwitch):
            if n == 0:
                return Std(Pci(rest, alpha))
            return Choice(tuple(prefix(tls_init(j), then(x)) for j, x in enumerate(alpha, 1)))
        if isinstance(h, (Mig, Choice)):
            raise TermError(f"no interleaving rule for {type(h).__name__}")
        return h.map_threads(then)


@dataclass
class LocalSchedState:
    queue: deque
    fragments: tuple
    pending_deadlock: bool = False

    def threads(self) -> tuple:
        return tuple(t for _, t in self.queue)


def pci(beta, alpha, resolver: Resolver | None = None, max_steps: int = 1000,
        replies: ReplySource | None = None, observer=None) -> Trace:
    """Run cyclic interleaving as a small-step machine.

    Every turn is logged in ``Trace.turns`` as ``(thread_tag, event)``;
    threads keep their tag across continuations and switch-overs.
    ``observer`` (if given) is called with the state after every turn.
    """
    alpha = tuple(alpha)
    n = len(alpha)
    if replies is None:
        replies = ReplySource()
    st = LocalSchedState(deque(enumerate(beta)), alpha)
    steps: list = []
    turns: list = []
    choices = 0

    def finish(outcome):
        return Trace(steps, outcome, choices, turns)

    while True:
        if not st.queue:
            return finish(DEADLOCKED if st.pending_deadlock else TERMINATED)
        tag, head = st.queue[0]
        h = head_normal(head)
        if isinstance(h, Stop):
            st.queue.popleft()
            turns.append((tag, "stop"))
        elif isinstance(h, Deadlock):
            st.queue.popleft()
            st.pending_deadlock = True
            turns.append((tag, "deadlock"))
        elif isinstance(h, (Switch, ExternSwitch)):
            if isinstance(h, Switch):
                j = h.index if 1 <= h.index <= n else 0
            elif n == 0:
                j = 0
            else:
                if resolver is None:
                    raise UnresolvedChoice()
                j = resolver.choose(n)
                choices += 1
                if j == 0:
                    return finish(DEADLOCKED)
            if j == 0:
                st.queue.popleft()
                st.pending_deadlock = True
                turns.append((tag, "invalid-switch"))
            else:
                if len(steps) >= max_steps:
                    return finish(CUT)
                r, step = perform(tls_init(j), None, replies, None)
                if _accepts(r, None) is None:
                    return finish(DEADLOCKED)
                steps.append(replace(step, thread=tag))
                st.queue.popleft()
                st.queue.append((tag, alpha[j - 1]))
                turns.append((tag, "switch"))
        elif isinstance(h, (Mig, Choice)):
            raise ExecutionError(f"no interleaving rule for {type(h).__name__}")
        else:
            if len(steps) >= max_steps:
                return finish(CUT)
            branches = h.thread_children()
            arity = len(branches) if isinstance(h, Pcs) else None
            r, step = perform(h.action, arity, replies, None)
            idx = _accepts(r, arity)
            if idx is None:
                return finish(DEADLOCKED)
            steps.append(replace(step, thread=tag))
            st.queue.popleft()
            st.queue.append((tag, branches[idx]))
            turns.append((tag, "action"))
        if observer is not None:
            observer(st)


def pci_term(beta, alpha, limit: int = DEFAULT_LIMIT) -> Thread:
    """The thread denoted by ``pci(beta, alpha)`` as a plain term."""
    return to_term(Pci(tuple(beta), tuple(alpha)), limit)
