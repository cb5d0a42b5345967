"""Randomized regression suites for the equational laws.

Every law is checked on random closed instances. A case passes when both
sides are equivalent (bisimilar at the given depth) and, where the law
has an executable left-hand side, when the dedicated small-step machine
on the left and the generic executor on the right produce identical
traces under the same reply and choice scripts.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .distributed import PciD, Site, app
from .fragsearch import FsSite, PciFs, appfs, pci_fs, pv
from .interleave import Pci, Std, pci
from .distributed import pci_d
from .polythreading import Spt, spt
from .runtime import ReplySource, Resolver, execute
from .services import (
    B, BLOCKED, F, T, BitStack, BoolRegister, Constant, NatCounter, Scripted, Use,
)
from .terms import (
    D, EXTERN, TAU, Basic, Choice, LocAction, Mig, Pcc, Pcs, RecRef, RecSpec, S, Switch,
    Var, equivalent, prefix, tls_init, try_equivalent,
)

FOCI = ("f", "g", "h")
METHODS = ("m", "n", "k")
EQ_DEPTH = 32
EQ_LIMIT = 3000
RUN_STEPS = 120
RUN_SEEDS = (1, 2)
OVERFLOW_SEEDS = tuple(range(1, 9))


@dataclass
class Gen:
    """Random closed terms within the configured bounds."""

    rng: random.Random
    depth: int = 6
    foci: tuple = FOCI
    methods: tuple = METHODS
    max_k: int = 4
    locations: tuple = (1, 2, 3)
    switch: bool = True
    extern: bool = True
    mig: bool = False
    pcs: bool = False
    rec: float = 0.15
    tau: float = 0.15

    def basic(self) -> Basic:
        return Basic(self.rng.choice(self.foci), self.rng.choice(self.methods))

    def action(self):
        return TAU if self.rng.random() < self.tau else self.basic()

    def leaf(self, k, env=()):
        opts = ["S", "S", "D"]
        if self.switch:
            opts.append("switch")
        if self.extern:
            opts.append("extern")
        if env:
            opts += ["var", "var"]
        c = self.rng.choice(opts)
        if c == "S":
            return S
        if c == "D":
            return D
        if c == "switch":
            return Switch(self.rng.randint(0, k + 1))
        if c == "extern":
            return EXTERN
        return Var(self.rng.choice(env))

    def thread(self, k: int = 0, depth: int | None = None, env=()):
        """A closed thread; ``k`` bounds Switch indices (k+1 is out of range)."""
        if depth is None:
            depth = self.rng.randint(0, self.depth)
            if not env and self.rng.random() < self.rec and depth >= 1:
                body = self._node(k, depth, ("X",))
                return RecRef("X", RecSpec((("X", body),)))
        if depth <= 0 or self.rng.random() < 0.25:
            return self.leaf(k, env)
        return self._node(k, depth, env)

    def _node(self, k, depth, env):
        r = self.rng.random()
        sub = lambda: self.thread(k, depth - 1, env)  # noqa: E731
        if self.mig and r < 0.15:
            return Mig(self.rng.choice(self.locations + (9,)), sub(), sub())
        if self.pcs and r < 0.3:
            return Pcs(self.action(), tuple(sub() for _ in range(self.rng.randint(1, 3))))
        return Pcc(self.action(), sub(), sub())

    def vector(self, k: int, lo: int = 0, hi: int = 3) -> tuple:
        return tuple(self.thread(k, self.rng.randint(0, 3)) for _ in range(self.rng.randint(lo, hi)))

    def fragments(self, lo: int = 0) -> tuple:
        n = self.rng.randint(lo, self.max_k)
        return tuple(self.thread(n, self.rng.randint(0, 3)) for _ in range(n))

    def service(self):
        r = self.rng.randrange(6)
        if r == 0:
            return Constant(self.rng.choice((T, F, B)))
        if r == 1:
            return NatCounter(self.rng.randint(0, 2))
        if r == 2:
            return BoolRegister(self.rng.random() < 0.5)
        if r == 3:
            return BitStack(tuple(self.rng.random() < 0.5 for _ in range(self.rng.randint(0, 2))))
        if r == 4:
            return Scripted(tuple(self.rng.choice((T, F, B)) for _ in range(self.rng.randint(0, 3))))
        return BLOCKED

    def nat_service(self, k: int):
        if self.rng.random() < 0.5:
            return Constant(self.rng.choice((B,) + tuple(range(1, k + 2))))
        return Scripted(tuple(self.rng.choice((B,) + tuple(range(1, k + 2)))
                              for _ in range(self.rng.randint(0, 3))))

    def proper_locations(self) -> tuple:
        locs = list(self.locations[: self.rng.randint(1, len(self.locations))])
        self.rng.shuffle(locs)
        return tuple(locs)


SERVICE_METHODS = {
    NatCounter: ("inc", "dec", "iszero"),
    BoolRegister: ("get", "set_true", "set_false"),
    BitStack: ("push0", "push1", "empty", "pop"),
}


def _service_with_reply(g: Gen, wanted) -> tuple:
    """A (service, method) pair whose reply satisfies ``wanted``."""
    while True:
        svc = g.service()
        m = g.rng.choice(SERVICE_METHODS.get(type(svc), g.methods))
        if wanted(svc.step(m)[0]):
            return svc, m


# -- cases -------------------------------------------------------------------


@dataclass
class Case:
    lhs: object
    rhs: object
    machine: Callable | None = None  # (replies, resolver) -> Trace
    run: bool = True                 # whether the sides are closed and executable


@dataclass
class AxiomResult:
    name: str
    passed: int = 0
    failed: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0


def _runs_agree(case: Case, seeds) -> str | None:
    for seed in seeds:
        left = _run(lambda r, c: case.machine(r, c) if case.machine else execute(case.lhs, r, c, RUN_STEPS), seed)
        right = _run(lambda r, c: execute(case.rhs, r, c, RUN_STEPS), seed)
        if left != right:
            return f"seed {seed}: {left} != {right}"
    return None


def _run(fn, seed):
    try:
        tr = fn(ReplySource(seed=seed), Resolver(seed=seed + 100))
        return (tuple(tr.steps), tr.outcome)
    except Exception as e:  # both sides must fail alike
        return ("error", type(e).__name__, str(e))


def check_case(case: Case) -> str | None:
    """None on success, otherwise a description of the disagreement.

    Sides are compared exactly when their joint state space is small.
    Otherwise executable cases fall back to trace equality over more
    scripts, and the rest to the depth-bounded comparison.
    """
    exact = try_equivalent(case.lhs, case.rhs, EQ_LIMIT)
    if exact is False:
        return "sides are not equivalent"
    if exact is None and not case.run and not equivalent(case.lhs, case.rhs, EQ_DEPTH, EQ_LIMIT):
        return "sides are not equivalent"
    if case.run:
        return _runs_agree(case, RUN_SEEDS if exact else OVERFLOW_SEEDS)
    return None


# -- basic thread algebra and use -------------------------------------------


def _t1(g):
    x, y = g.thread(), g.thread()
    return Case(Pcc(TAU, x, y), Pcc(TAU, x, x), run=False)


def _tsu(kind):
    def make(g: Gen):
        gg = Gen(g.rng, depth=4, switch=False, extern=False)
        x, y = gg.thread(), gg.thread()
        f = g.rng.choice(g.foci)
        if kind == 1:
            h = g.service()
            return Case(Use(S, f, h), S)
        if kind == 2:
            h = g.service()
            return Case(Use(D, f, h), D)
        if kind == 3:
            h = g.service()
            return Case(Use(prefix(TAU, x), f, h), prefix(TAU, Use(x, f, h)))
        if kind == 4:
            h = g.service()
            other = g.rng.choice([c for c in g.foci if c != f])
            a = Basic(other, g.rng.choice(g.methods))
            return Case(Use(Pcc(a, x, y), f, h), Pcc(a, Use(x, f, h), Use(y, f, h)))
        wanted = {5: lambda r: r == T, 6: lambda r: r == F, 7: lambda r: r == B}[kind]
        h, m = _service_with_reply(g, wanted)
        lhs = Use(Pcc(Basic(f, m), x, y), f, h)
        r, h2 = h.step(m)
        if kind == 5:
            return Case(lhs, prefix(TAU, Use(x, f, h2)))
        if kind == 6:
            return Case(lhs, prefix(TAU, Use(y, f, h2)))
        return Case(lhs, D)
    return make


# -- poly-threading ----------------------------------------------------------


def _spt_machine(t, alpha):
    return lambda r, c: spt(t, alpha, c, RUN_STEPS, r)


def _spt(kind):
    def make(g: Gen):
        if kind == 7:
            alpha = ()
        else:
            alpha = g.fragments(lo=1 if kind in (4, 6) else 0)
        n = len(alpha)
        x, y = g.thread(n), g.thread(n)
        if kind == 1:
            t, rhs = S, S
        elif kind == 2:
            t, rhs = D, D
        elif kind == 3:
            t = Pcc(g.action(), x, y)
            rhs = Pcc(t.action, Spt(x, alpha), Spt(y, alpha))
        elif kind == 4:
            i = g.rng.randint(1, n)
            t, rhs = Switch(i), prefix(tls_init(i), Spt(alpha[i - 1], alpha))
        elif kind == 5:
            t, rhs = Switch(g.rng.choice([0, n + 1, n + 2])), D
        elif kind == 6:
            t = EXTERN
            rhs = Choice(tuple(prefix(tls_init(j), Spt(xj, alpha)) for j, xj in enumerate(alpha, 1)))
        else:
            t, rhs = EXTERN, D
        return Case(Spt(t, alpha), rhs, _spt_machine(t, alpha))
    return make


# -- postconditional switching ----------------------------------------------


def _pcs(kind):
    def make(g: Gen):
        k = g.rng.randint(1, g.max_k)
        gg = Gen(g.rng, depth=4, switch=kind == "spt", extern=kind == "spt", pcs=True)
        alpha = gg.fragments() if kind == "spt" else ()
        xs = tuple(gg.thread(len(alpha)) for _ in range(k))
        f = g.rng.choice(g.foci)
        if kind == "tau":
            return Case(Pcs(TAU, xs), Pcs(TAU, (xs[0],) * k), run=False)
        if kind == "spt":
            a = g.action()
            t = Pcs(a, xs)
            return Case(Spt(t, alpha), Pcs(a, tuple(Spt(x, alpha) for x in xs)),
                        _spt_machine(t, alpha))
        h = gg.nat_service(k)
        if kind == "use-tau":
            return Case(Use(Pcs(TAU, xs), f, h), Pcs(TAU, tuple(Use(x, f, h) for x in xs)))
        if kind == "use-other":
            other = g.rng.choice([c for c in g.foci if c != f])
            a = Basic(other, g.rng.choice(g.methods))
            return Case(Use(Pcs(a, xs), f, h), Pcs(a, tuple(Use(x, f, h) for x in xs)))
        wanted = (lambda r: isinstance(r, int) and 1 <= r <= k) if kind == "use-reply" else \
            (lambda r: not (isinstance(r, int) and 1 <= r <= k))
        while True:
            h = gg.nat_service(k)
            m = g.rng.choice(g.methods)
            r, h2 = h.step(m)
            if wanted(r):
                break
        lhs = Use(Pcs(Basic(f, m), xs), f, h)
        if kind == "use-reply":
            return Case(lhs, prefix(TAU, Use(xs[r - 1], f, h2)))
        return Case(lhs, D)
    return make


# -- cyclic interleaving and deadlock at termination -------------------------


def _pci_machine(beta, alpha):
    return lambda r, c: pci(beta, alpha, c, RUN_STEPS, r)


def _pci(kind):
    def make(g: Gen):
        alpha = () if kind == 8 else g.fragments(lo=1 if kind in (5, 7) else 0)
        n = len(alpha)
        beta = g.vector(n, hi=2)
        if kind == 1:
            return Case(Pci((), alpha), S, _pci_machine((), alpha))
        x, y = g.thread(n, 3), g.thread(n, 3)
        if kind == 2:
            head, rhs = S, Pci(beta, alpha)
        elif kind == 3:
            head, rhs = D, Std(Pci(beta, alpha))
        elif kind == 4:
            head = Pcc(g.action(), x, y)
            rhs = Pcc(head.action, Pci(beta + (x,), alpha), Pci(beta + (y,), alpha))
        elif kind == 5:
            i = g.rng.randint(1, n)
            head, rhs = Switch(i), prefix(tls_init(i), Pci(beta + (alpha[i - 1],), alpha))
        elif kind == 6:
            head, rhs = Switch(g.rng.choice([0, n + 1])), Std(Pci(beta, alpha))
        elif kind == 7:
            head = EXTERN
            rhs = Choice(tuple(prefix(tls_init(j), Pci(beta + (xj,), alpha))
                               for j, xj in enumerate(alpha, 1)))
        else:
            head, rhs = EXTERN, Std(Pci(beta, ()))
        lhs_vec = (head,) + beta
        return Case(Pci(lhs_vec, alpha), rhs, _pci_machine(lhs_vec, alpha))
    return make


def _std(kind, located=False):
    def make(g: Gen):
        gg = Gen(g.rng, depth=4)
        x, y = gg.thread(2), gg.thread(2)
        if located:
            x, y = _locate(g, x), _locate(g, y)
        if kind == 1:
            return Case(Std(S), D, run=False)
        if kind == 2:
            return Case(Std(D), D, run=False)
        if kind == 3:
            a = g.action()
            if located:
                a = LocAction(g.rng.choice(g.locations), a)
            return Case(Std(Pcc(a, x, y)), Pcc(a, Std(x), Std(y)), run=False)
        if kind == 4:
            i = g.rng.randint(0, 4)
            return Case(Std(Switch(i)), Switch(i), run=False)
        if kind == 5:
            return Case(Std(EXTERN), EXTERN, run=False)
        xs = tuple(_locate(g, gg.thread(2)) if located else gg.thread(2)
                   for _ in range(g.rng.randint(1, g.max_k)))
        return Case(Std(Choice(xs)), Choice(tuple(Std(u) for u in xs)), run=False)
    return make


def _locate(g: Gen, t):
    """Attach random locations to every action of a plain thread."""
    from .terms import map_structure

    def leaf(u):
        if isinstance(u, Pcc) and not isinstance(u.action, LocAction):
            return Pcc(LocAction(g.rng.choice(g.locations), u.action), _locate(g, u.pos), _locate(g, u.neg))
        return None

    return map_structure(t, leaf)


def _lt1(g):
    gg = Gen(g.rng, depth=4)
    u, v = _locate(g, gg.thread(2)), _locate(g, gg.thread(2))
    a = LocAction(g.rng.choice(g.locations), TAU)
    return Case(Pcc(a, u, v), Pcc(a, u, u), run=False)


# -- distributed interleaving ------------------------------------------------


def _dist(g: Gen, n: int, mig=True) -> tuple:
    """A proper distributed vector with small local vectors."""
    gg = Gen(g.rng, depth=3, mig=mig, locations=g.locations)
    return tuple(Site(l, tuple(gg.thread(n, g.rng.randint(0, 2))
                               for _ in range(g.rng.randint(0, 2))))
                 for l in g.proper_locations())


def _pcdi_machine(delta, alpha, locs):
    return lambda r, c: pci_d(delta, alpha, c, RUN_STEPS, r, locations=locs)


def _pcdi(kind):
    def make(g: Gen):
        alpha = () if kind == 10 else g.fragments(lo=1 if kind in (7, 9) else 0)
        n = len(alpha)
        delta = _dist(g, n)
        locs = frozenset(s.location for s in delta)
        P = lambda d: PciD(d, alpha, locs)  # noqa: E731
        if kind == 1:
            return Case(P(()), S, _pcdi_machine((), alpha, locs))
        if kind == 2:
            empty = tuple(Site(s.location, ()) for s in delta)
            return Case(P(empty), S, _pcdi_machine(empty, alpha, locs))
        head_site, rest = delta[0], delta[1:]
        l, gamma = head_site.location, head_site.threads
        if kind == 3:
            lhs = (Site(l, ()),) + rest
            return Case(P(lhs), P(rest + (Site(l, ()),)), _pcdi_machine(lhs, alpha, locs))
        gg = Gen(g.rng, depth=3, mig=True, locations=g.locations)
        x, y = gg.thread(n, 2), gg.thread(n, 2)
        moved = lambda extra=(): rest + (Site(l, gamma + extra),)  # noqa: E731
        if kind == 4:
            head, rhs = S, P(moved())
        elif kind == 5:
            head, rhs = D, Std(P(moved()))
        elif kind == 6:
            a = g.action()
            head = Pcc(a, x, y)
            rhs = Pcc(LocAction(l, a), P(moved((x,))), P(moved((y,))))
        elif kind == 7:
            i = g.rng.randint(1, n)
            head, rhs = Switch(i), prefix(LocAction(l, tls_init(i)), P(moved((alpha[i - 1],))))
        elif kind == 8:
            head, rhs = Switch(g.rng.choice([0, n + 1])), Std(P(moved()))
        elif kind == 9:
            head = EXTERN
            rhs = Choice(tuple(prefix(LocAction(l, tls_init(j)), P(moved((xj,))))
                               for j, xj in enumerate(alpha, 1)))
        elif kind == 10:
            head, rhs = EXTERN, Std(P(moved()))
        elif kind == 11:
            target = g.rng.choice(sorted(locs))
            head = Mig(target, x, y)
            rhs = prefix(LocAction(l, TAU), P(app(target, x, moved())))
        else:
            head = Mig(g.rng.choice([0, 7, 9]), x, y)
            rhs = prefix(LocAction(l, TAU), P(moved((y,))))
        lhs = (Site(l, (head,) + gamma),) + rest
        return Case(P(lhs), rhs, _pcdi_machine(lhs, alpha, locs))
    return make


# -- fragment searching ------------------------------------------------------


def _fs_dist(g: Gen, n: int) -> tuple:
    gg = Gen(g.rng, depth=3, mig=True, locations=g.locations)
    out = []
    for l in g.proper_locations():
        frags = frozenset(i for i in range(1, g.max_k + 1) if g.rng.random() < 0.4)
        out.append(FsSite(l, tuple(gg.thread(max(n, g.max_k), g.rng.randint(0, 2))
                                   for _ in range(g.rng.randint(0, 2))), frags))
    return tuple(out)


def _pcdifs_machine(delta, alpha, locs):
    return lambda r, c: pci_fs(delta, alpha, c, RUN_STEPS, r, locations=locs)


def _pcdifs(kind):
    def make(g: Gen):
        alpha = () if kind == 10 else g.fragments(lo=1 if kind in (7, 9) else 0)
        n = len(alpha)
        delta = _fs_dist(g, n)
        locs = frozenset(s.location for s in delta)
        P = lambda d: PciFs(d, alpha, locs)  # noqa: E731
        if kind == 1:
            return Case(P(()), S, _pcdifs_machine((), alpha, locs))
        if kind == 2:
            empty = tuple(s.with_threads(()) for s in delta)
            return Case(P(empty), S, _pcdifs_machine(empty, alpha, locs))
        site, rest = delta[0], delta[1:]
        l, gamma, frags = site.location, site.threads, site.fragments
        if kind == 3:
            lhs = (site.with_threads(()),) + rest
            return Case(P(lhs), P(rest + (site.with_threads(()),)),
                        _pcdifs_machine(lhs, alpha, locs))
        gg = Gen(g.rng, depth=3, mig=True, locations=g.locations)
        x, y = gg.thread(g.max_k, 2), gg.thread(g.max_k, 2)
        at_head = lambda t: pv((FsSite(l, (t,) + gamma, frags),) + rest)  # noqa: E731
        moved = rest + (FsSite(l, gamma, frags),)
        if kind == 4:
            head, rhs = S, P(moved)
        elif kind == 5:
            head, rhs = D, Std(P(moved))
        elif kind == 6:
            a = g.action()
            head = Pcc(a, x, y)
            rhs = Pcc(LocAction(l, a), P(at_head(x)), P(at_head(y)))
        elif kind == 7:
            present = sorted(i for i in frags if 1 <= i <= n)
            if not present:
                frags = frags | {g.rng.randint(1, n)}
                present = sorted(i for i in frags if 1 <= i <= n)
                moved = rest + (FsSite(l, gamma, frags),)
            i = g.rng.choice(present)
            head, rhs = Switch(i), prefix(LocAction(l, tls_init(i)), P(at_head(alpha[i - 1])))
        elif kind == 8:
            absent = [i for i in range(0, n + 2) if not (i in frags and 1 <= i <= n)]
            head, rhs = Switch(g.rng.choice(absent)), Std(P(moved))
        elif kind == 9:
            head = EXTERN
            rhs = Choice(tuple(prefix(LocAction(l, tls_init(j)), P(at_head(xj)))
                               for j, xj in enumerate(alpha, 1)))
        elif kind == 10:
            head, rhs = EXTERN, Std(P(moved))
        elif kind == 11:
            target = g.rng.choice(sorted(locs))
            head = Mig(target, x, y)
            rhs = prefix(LocAction(l, TAU), P(appfs(target, x, moved)))
        else:
            head = Mig(g.rng.choice([0, 7, 9]), x, y)
            rhs = prefix(LocAction(l, TAU), P(at_head(y)))
        lhs = (FsSite(l, (head,) + gamma, frags),) + rest
        return Case(P(lhs), rhs, _pcdifs_machine(lhs, alpha, locs))
    return make


# -- registry ----------------------------------------------------------------

SUITES: dict = {
    "bta": {"T1": _t1},
    "tsu": {f"TSU{i}": _tsu(i) for i in range(1, 8)},
    "spt": {f"SPT{i}": _spt(i) for i in range(1, 8)},
    "pcs": {f"PCS-{k}": _pcs(k) for k in
            ("tau", "spt", "use-tau", "use-other", "use-reply", "use-blocked")},
    "pci": {f"PCI{i}": _pci(i) for i in range(1, 9)},
    "std": {f"S2D{i}": _std(i) for i in range(1, 7)},
    "located": {"LT1": _lt1, **{f"LS2D{i}": _std(i, located=True) for i in range(1, 7)}},
    "pcdi": {f"PCDI{i}": _pcdi(i) for i in range(1, 13)},
    "pcdifs": {f"PCDIfs{i}": _pcdifs(i) for i in range(1, 13)},
}


def suite_names() -> list:
    return list(SUITES) + ["all"]


def run_axiom(name: str, make, cases: int, rng: random.Random) -> AxiomResult:
    res = AxiomResult(name)
    for n in range(cases):
        case = make(Gen(rng))
        problem = check_case(case)
        if problem is None:
            res.passed += 1
        else:
            res.failed += 1
            if len(res.failures) < 3:
                res.failures.append(f"case {n}: {problem}")
    return res


def run_suite(suite: str, cases: int = 100, seed: int = 0) -> list:
    """Run one suite (or ``all``); returns an AxiomResult per law."""
    names = list(SUITES) if suite == "all" else [suite]
    out = []
    for s in names:
        if s not in SUITES:
            raise KeyError(f"unknown suite {s!r}")
        for name, make in SUITES[s].items():
            out.append(run_axiom(name, make, cases, random.Random(f"{seed}:{name}")))
    return out


def timed_suite(suite: str, cases: int = 100, seed: int = 0) -> tuple:
    start = time.perf_counter()
    results = run_suite(suite, cases, seed)
    return results, time.perf_counter() - start
