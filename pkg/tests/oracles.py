"""Independent reference implementations used to cross-check the library.

Vectors here are plain tuples: ``(location, threads)`` entries for
distributed vectors and ``(location, threads, fragments)`` for vectors
with fragment sets. Everything is written as direct structural recursion
over the defining equations, with no shortcuts.
"""

from polythread.terms import Deadlock, ExternSwitch, Mig, Pcc, Stop, Switch


# -- app_l over (location, threads) entries ----------------------------------


def app_literal(l, x, delta):
    if delta == ():
        return ()
    (l1, gamma), rest = delta[0], delta[1:]
    if l == l1:
        return ((l1, gamma + (x,)),) + rest
    return ((l1, gamma),) + app_literal(l, x, rest)


# -- appfs, iml', iml, pv over (location, threads, fragments) entries ---------


def appfs_literal(l, x, delta):
    if delta == ():
        return ()
    (l1, gamma, frags), rest = delta[0], delta[1:]
    if l == l1:
        return ((l1, gamma + (x,), frags),) + rest
    return ((l1, gamma, frags),) + appfs_literal(l, x, rest)


def iml_prime_literal(i, delta, fallback):
    if delta == ():
        return fallback
    (l, _gamma, frags), rest = delta[0], delta[1:]
    if i in frags:
        return l
    return iml_prime_literal(i, rest, fallback)


def iml_literal(delta):
    (l, gamma, frags), rest = delta[0], delta[1:]
    if gamma == ():
        return l
    x = gamma[0]
    if isinstance(x, (Stop, Deadlock, Pcc, ExternSwitch, Mig)):
        return l
    if isinstance(x, Switch):
        if x.index in frags:
            return l
        return iml_prime_literal(x.index, rest, l)
    raise AssertionError(f"no equation for {x!r}")


def pv_literal(delta):
    if delta == ():
        return ()
    (l, gamma, frags), rest = delta[0], delta[1:]
    if gamma == ():
        return delta
    target = iml_literal(delta)
    return appfs_literal(target, gamma[0], rest + ((l, gamma[1:], frags),))


def plain_dist(delta):
    return tuple((s.location, tuple(s.threads)) for s in delta)


def plain_fs(delta):
    return tuple((s.location, tuple(s.threads), frozenset(s.fragments)) for s in delta)


# -- an instruction-by-instruction interpreter --------------------------------


def run_instructions(prog, replies, max_steps=200):
    """Execute an instruction sequence directly.

    Returns ``(actions, end)`` where ``end`` is ``"terminated"``,
    ``"deadlocked"``, ``("switch", i)`` or ``"cut"``. ``replies`` is an
    iterator of booleans consumed by every performed action.
    """
    from polythread.progfrag import Halt, Jump, NegTest, Plain, PosTest, Swo

    pc = 1
    actions = []
    idle = 0  # jumps since the last action, to detect action-free cycles
    while True:
        if len(actions) >= max_steps:
            return actions, "cut"
        if not 1 <= pc <= len(prog):
            return actions, "deadlocked"
        ins = prog[pc - 1]
        if isinstance(ins, Halt):
            return actions, "terminated"
        if isinstance(ins, Swo):
            return actions, ("switch", ins.index)
        if isinstance(ins, Jump):
            idle += 1
            if idle > len(prog):
                return actions, "deadlocked"
            pc = ins.target
            continue
        idle = 0
        r = next(replies)
        actions.append(ins.action)
        if isinstance(ins, Plain):
            pc += 1
        elif isinstance(ins, PosTest):
            pc += 1 if r else 2
        elif isinstance(ins, NegTest):
            pc += 2 if r else 1


def run_thread(t, replies, max_steps=200):
    """Walk a plain thread with the same reply convention as ``run_instructions``."""
    from polythread.terms import head_normal

    actions = []
    while True:
        h = head_normal(t)
        if isinstance(h, Stop):
            return actions, "terminated"
        if isinstance(h, Deadlock):
            return actions, "deadlocked"
        if isinstance(h, Switch):
            return actions, ("switch", h.index)
        if len(actions) >= max_steps:
            return actions, "cut"
        r = next(replies)
        actions.append(h.action)
        t = h.pos if r else h.neg


# -- scheduling ---------------------------------------------------------------


def round_robin_violations(turns, n):
    """Count departures from strict round-robin order in a turn log.

    ``turns`` is a list of ``(tag, event)``; threads ``0..n-1`` start in
    order. Between two consecutive turns of one thread, every other thread
    that is still alive afterwards must take exactly one turn.
    """
    tags = [t for t, _ in turns]
    bad = 0
    if tags[:n] != list(range(n))[: len(tags)]:
        bad += 1
    positions = {}
    for i, t in enumerate(tags):
        positions.setdefault(t, []).append(i)
    for t, pos in positions.items():
        for a, b in zip(pos, pos[1:]):
            between = tags[a + 1:b]
            if len(between) != len(set(between)):
                bad += 1
            for u, upos in positions.items():
                if u != t and upos[-1] > b and u not in between:
                    bad += 1
    return bad
