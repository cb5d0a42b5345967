"""Distributed interleaving with fragment searching (implicit migration)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import ExecutionError, TermError, UnresolvedChoice
from .interleave import Std
from .runtime import CUT, DEADLOCKED, TERMINATED, ReplySource, Resolver, Trace, perform
from .services import _accepts
from .terms import (
    Choice, Deadlock, ExternSwitch, LocAction, Mig, Operator, Pcc, Pcs, S, Stop, Switch,
    Thread, head_normal, prefix, tls_init, TAU,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FsSite:
    """Location, local thread vector, and the fragment indices present there."""

    location: int
    threads: tuple = ()
    fragments: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "threads", tuple(self.threads))
        object.__setattr__(self, "fragments", frozenset(self.fragments))
        if any(i < 1 for i in self.fragments):
            raise TermError("fragment indices start at 1")

    def with_threads(self, threads) -> FsSite:
        return FsSite(self.location, tuple(threads), self.fragments)


def fs_vector(*entries) -> tuple:
    """Build from ``(location, threads, fragments)`` triples."""
    return tuple(e if isinstance(e, FsSite) else FsSite(e[0], tuple(e[1]), frozenset(e[2]))
                 for e in entries)


def appfs(l: int, x: Thread, delta: tuple) -> tuple:
    for i, site in enumerate(delta):
        if site.location == l:
            return delta[:i] + (site.with_threads(site.threads + (x,)),) + delta[i + 1:]
    if delta:
        log.warning("migrant to location %s dropped: no such entry", l)
    return delta


def iml_prime(i: int, delta: tuple, fallback: int) -> int:
    """First location in ``delta`` holding fragment ``i``, else ``fallback``."""
    for site in delta:
        if i in site.fragments:
            return site.location
    return fallback


def iml(delta: tuple) -> int:
    """Where the head thread of a non-empty vector should run its next turn."""
    site = delta[0]
    if site.threads:
        h = head_normal(site.threads[0])
        if isinstance(h, Switch) and h.index not in site.fragments:
            return iml_prime(h.index, delta[1:], site.location)
    return site.location


def rotate(delta: tuple) -> tuple:
    """Move the head entry, minus its head thread, to the back."""
    site = delta[0]
    return delta[1:] + (site.with_threads(site.threads[1:]),)


def pv(delta: tuple) -> tuple:
    """Cyclic permutation that re-delivers the head thread, possibly elsewhere."""
    if not delta or not delta[0].threads:
        return delta
    return appfs(iml(delta), delta[0].threads[0], rotate(delta))


def _reheaded(site: FsSite, rest: tuple, x: Thread) -> tuple:
    return (site.with_threads((x,) + site.threads[1:]),) + rest


@dataclass(frozen=True, eq=False)
class PciFs(Operator):
    """Cyclic distributed interleaving with fragment searching."""

    delta: tuple
    alpha: tuple
    locations: frozenset

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple(self.delta))
        object.__setattr__(self, "alpha", tuple(self.alpha))
        object.__setattr__(self, "locations", frozenset(self.locations))

    def _with(self, delta):
        return PciFs(delta, self.alpha, self.locations)

    def reduce(self):
        delta, alpha = self.delta, self.alpha
        if all(not s.threads for s in delta):
            return S
        site, rest = delta[0], delta[1:]
        l = site.location
        if not site.threads:
            return self._with(rest + (site,))
        h = head_normal(site.threads[0])
        n = len(alpha)

        def then(x):
            return self._with(pv(_reheaded(site, rest, x)))

        dropped = self._with(rotate(delta))
        if isinstance(h, Stop):
            return dropped
        if isinstance(h, Deadlock):
            return Std(dropped)
        if isinstance(h, Switch):
            if h.index in site.fragments and 1 <= h.index <= n:
                return prefix(LocAction(l, tls_init(h.index)), then(alpha[h.index - 1]))
            return Std(dropped)
        if isinstance(h, ExternSwitch):
            if n == 0:
                return Std(dropped)
            return Choice(tuple(prefix(LocAction(l, tls_init(j)), then(y))
                                for j, y in enumerate(alpha, 1)))
        if isinstance(h, Mig):
            if h.target in self.locations:
                return prefix(LocAction(l, TAU), self._with(appfs(h.target, h.pos, rotate(delta))))
            return prefix(LocAction(l, TAU), then(h.neg))
        if isinstance(h, Choice):
            raise TermError("no interleaving rule for Choice")
        if isinstance(h.action, LocAction):
            raise TermError("located action inside a local thread vector")
        a = LocAction(l, h.action)
        if isinstance(h, Pcs):
            return Pcs(a, tuple(then(b) for b in h.branches))
        return Pcc(a, then(h.pos), then(h.neg))


@dataclass
class FsSchedState:
    delta: tuple
    pending_deadlock: bool = False


def pci_fs(delta, alpha, resolver: Resolver | None = None, max_steps: int = 1000,
           replies: ReplySource | None = None, locations=None, observer=None) -> Trace:
    """Run fragment-searching interleaving as a small-step machine."""
    alpha = tuple(alpha)
    n = len(alpha)
    delta = tuple(delta)
    locs = frozenset(locations) if locations is not None else frozenset(s.location for s in delta)
    if replies is None:
        replies = ReplySource()
    st = FsSchedState(delta)
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
        h = head_normal(site.threads[0])
        if isinstance(h, Stop):
            nxt = rotate(d)
        elif isinstance(h, Deadlock):
            st.pending_deadlock = True
            nxt = rotate(d)
        elif isinstance(h, (Switch, ExternSwitch)):
            if isinstance(h, Switch):
                ok = h.index in site.fragments and 1 <= h.index <= n
                j = h.index if ok else 0
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
                nxt = rotate(d)
            else:
                if len(steps) >= max_steps:
                    return finish(CUT)
                r, step = perform(LocAction(l, tls_init(j)), None, replies, None)
                if _accepts(r, None) is None:
                    return finish(DEADLOCKED)
                steps.append(step)
                nxt = pv(_reheaded(site, rest, alpha[j - 1]))
        elif isinstance(h, Mig):
            if len(steps) >= max_steps:
                return finish(CUT)
            steps.append(perform(LocAction(l, TAU), None, replies, None)[1])
            if h.target in locs:
                nxt = appfs(h.target, h.pos, rotate(d))
            else:
                nxt = pv(_reheaded(site, rest, h.neg))
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
            nxt = pv(_reheaded(site, rest, branches[idx]))
        st.delta = nxt
        if observer is not None:
            observer(st)
