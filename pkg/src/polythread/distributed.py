"""Distributed cyclic interleaving with explicit thread migration."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

from .errors import ExecutionError, TermError, UnresolvedChoice
from .interleave import Std, std
from .runtime import CUT, DEADLOCKED, TERMINATED, ReplySource, Resolver, Trace, perform
from .services import _accepts
from .terms import (
    Choice, Deadlock, ExternSwitch, LocAction, Mig, Operator, Pcc, Pcs, S, Stop, Switch,
    Thread, head_normal, prefix, tls_init, TAU,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Site:
    """One entry of a distributed thread vector: a location and its local vector."""

    location: int
    threads: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "threads", tuple(self.threads))


def dist_vector(*entries) -> tuple:
    """Build a distributed vector from ``(location, threads)`` pairs."""
    return tuple(e if isinstance(e, Site) else Site(e[0], tuple(e[1])) for e in entries)


def app(l: int, x: Thread, delta: tuple) -> tuple:
    """Append ``x`` to the local vector of the first entry at location ``l``."""
    for i, site in enumerate(delta):
        if site.location == l:
            return delta[:i] + (Site(l, site.threads + (x,)),) + delta[i + 1:]
    if delta:
        log.warning("migrant to location %s dropped: no such entry", l)
    return delta


def is_proper(delta: tuple, locations) -> bool:
    return Counter(s.location for s in delta) == Counter(set(locations))


def locations_of(delta: tuple) -> frozenset:
    return frozenset(s.location for s in delta)


def std_located(u: Thread) -> Thread:
    """Deadlock at termination over located threads."""
    return std(u)


def located(l: int, a) -> LocAction:
    return LocAction(l, a)


@dataclass(frozen=True, eq=False)
class PciD(Operator):
    """Cyclic distributed interleaving of ``delta`` over fragments ``alpha``."""

    delta: tuple
    alpha: tuple
    locations: frozenset

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple(self.delta))
        object.__setattr__(self, "alpha", tuple(self.alpha))
        object.__setattr__(self, "locations", frozenset(self.locations))

    def _with(self, delta):
        return PciD(delta, self.alpha, self.locations)

    def reduce(self):
        delta, alpha = self.delta, self.alpha
        if all(not s.threads for s in delta):
            return S
        site, rest = delta[0], delta[1:]
        l = site.location
        if not site.threads:
            return self._with(rest + (site,))
        x, gamma = site.threads[0], site.threads[1:]
        h = head_normal(x)
        n = len(alpha)

        def then(y):
            return self._with(rest + (Site(l, gamma + (y,)),))

        dropped = self._with(rest + (Site(l, gamma),))
        if isinstance(h, Stop):
            return dropped
        if isinstance(h, Deadlock):
            return Std(dropped)
        if isinstance(h, Switch):
            if 1 <= h.index <= n:
                return prefix(LocAction(l, tls_init(h.index)), then(alpha[h.index - 1]))
            return Std(dropped)
        if isinstance(h, ExternSwitch):
            if n == 0:
                return Std(dropped)
            return Choice(tuple(prefix(LocAction(l, tls_init(j)), then(y))
                                for j, y in enumerate(alpha, 1)))
        if isinstance(h, Mig):
            if h.target in self.locations:
                return prefix(LocAction(l, TAU),
                              self._with(app(h.target, h.pos, rest + (Site(l, gamma),))))
            return prefix(LocAction(l, TAU), then(h.neg))
        if isinstance(h, Choice):
            raise TermError("no interleaving rule for Choice")
        return _locate(h, l, then)


def _locate(h, l, then):
    if isinstance(h.action, LocAction):
        raise TermError("located action inside a local thread vector")
    a = LocAction(l, h.action)
    if isinstance(h, Pcs):
        return Pcs(a, tuple(then(b) for b in h.branches))
    return Pcc(a, then(h.pos), then(h.neg))


@dataclass
class DistSchedState:
    delta: tuple
    pending_deadlock: bool = False


def pci_d(delta, alpha, resolver: Resolver | None = None, max_steps: int = 1000,
          replies: ReplySource | None = None, locations=None, observer=None) -> Trace:
    """Run distributed cyclic interleaving as a small-step machine.

    ``locations`` is the configured location set (default: the locations
    present in ``delta``); ``observer`` is called after every turn.
    """
    alpha = tuple(alpha)
    n = len(alpha)
    locs = frozenset(locations) if locations is not None else locations_of(delta)
    if replies is None:
        replies = ReplySource()
    st = DistSchedState(tuple(delta))
    steps: list = []
    choices = 0

    def finish(outcome):
        return Trace(steps, outcome, choices)

    while True:
        d = st.delta
        if all(not s.threads for s in d):
            return finish(DEADLOCKED if st.pending_deadlock else TERMINATED)
        site, rest = d[0], d[1:]
        l = site.location
        if not site.threads:
            st.delta = rest + (site,)
            continue
        x, gamma = site.threads[0], site.threads[1:]
        h = head_normal(x)
        nxt = None
        if isinstance(h, Stop):
            nxt = rest + (Site(l, gamma),)
        elif isinstance(h, Deadlock):
            st.pending_deadlock = True
            nxt = rest + (Site(l, gamma),)
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
                st.pending_deadlock = True
                nxt = rest + (Site(l, gamma),)
            else:
                if len(steps) >= max_steps:
                    return finish(CUT)
                r, step = perform(LocAction(l, tls_init(j)), None, replies, None)
                if _accepts(r, None) is None:
                    return finish(DEADLOCKED)
                steps.append(step)
                nxt = rest + (Site(l, gamma + (alpha[j - 1],)),)
        elif isinstance(h, Mig):
            if len(steps) >= max_steps:
                return finish(CUT)
            steps.append(perform(LocAction(l, TAU), None, replies, None)[1])
            if h.target in locs:
                nxt = app(h.target, h.pos, rest + (Site(l, gamma),))
            else:
                nxt = rest + (Site(l, gamma + (h.neg,)),)
        elif isinstance(h, Choice):
            raise ExecutionError("no interleaving rule for Choice")
        else:
            if len(steps) >= max_steps:
                return finish(CUT)
            branches = h.thread_children()
            arity = len(branches) if isinstance(h, Pcs) else None
            r, step = perform(LocAction(l, h.action), arity, replies, None)
            idx = _accepts(r, arity)
            if idx is None:
                return finish(DEADLOCKED)
            steps.append(step)
            nxt = rest + (Site(l, gamma + (branches[idx],)),)
        st.delta = nxt
        if observer is not None:
            observer(st)
