import random

import pytest

from oracles import round_robin_violations
from polythread.axioms import Gen
from polythread.dsl import parse_thread as th
from polythread.errors import ExecutionError, UnresolvedChoice
from polythread.interleave import Pci, Std, pci, pci_term, std
from polythread.runtime import CUT, DEADLOCKED, TERMINATED, ReplySource, Resolver, execute
from polythread.terms import D, EXTERN, S, Switch, equivalent


def names(trace):
    return [str(a) for a in trace.actions()]


class TestStd:
    def test_stop(self):
        assert std(S) == D

    def test_switch(self):
        assert std(Switch(3)) == Switch(3)

    def test_postconditional(self):
        assert std(th("(pcc f.m S D)")) == th("(pcc f.m D D)")

    def test_recursive(self):
        t = th("(rec X (X (pcc f.m X S)))")
        assert equivalent(std(t), th("(rec X (X (pcc f.m X D)))"))

    def test_idempotent(self):
        g = Gen(random.Random(3))
        for _ in range(50):
            t = g.thread(2)
            assert equivalent(std(std(t)), std(t))

    def test_lazy_operator_agrees(self):
        t = th("(pcc f.m (do g.n S) extern)")
        assert equivalent(Std(t), std(t))


class TestMachine:
    def test_empty(self):
        tr = pci((), (S,))
        assert names(tr) == [] and tr.outcome == TERMINATED

    def test_two_threads_alternate(self):
        tr = pci((th("(do a.a S)"), th("(do b.b S)")), (), replies=ReplySource(seed=0))
        assert names(tr) == ["a.a", "b.b"] and tr.outcome == TERMINATED

    def test_deadlock_waits_for_the_rest(self):
        tr = pci((D, th("(do a.a S)")), (), replies=ReplySource(seed=0))
        assert names(tr) == ["a.a"] and tr.outcome == DEADLOCKED

    def test_switch(self):
        tr = pci((Switch(1),), (S,))
        assert names(tr) == ["tls.init"] and tr.outcome == TERMINATED

    def test_switch_keeps_position_in_rotation(self):
        beta = (th("(do a.a (switch 1))"), th("(do b.b (do b.b S))"))
        tr = pci(beta, (th("(do c.c S)"),), replies=ReplySource(seed=0))
        assert names(tr) == ["a.a", "b.b", "tls.init", "b.b", "c.c"]
        assert [s.thread for s in tr.steps] == [0, 1, 0, 1, 0]

    def test_invalid_switch_deadlocks_eventually(self):
        tr = pci((Switch(4), th("(do a.a S)")), (S,), replies=ReplySource(seed=0))
        assert names(tr) == ["a.a"] and tr.outcome == DEADLOCKED

    def test_extern_needs_resolver(self):
        with pytest.raises(UnresolvedChoice):
            pci((EXTERN,), (S,))
        tr = pci((EXTERN,), (th("(do g.n S)"),), Resolver(script=[1]), replies=ReplySource(seed=0))
        assert names(tr) == ["tls.init", "g.n"]

    def test_blocked_reply_deadlocks_everything(self):
        tr = pci((th("(do f.m S)"), th("(do g.n S)")), (), replies=ReplySource(script=["B"]))
        assert tr.steps == [] and tr.outcome == DEADLOCKED

    def test_cut(self):
        tr = pci((th("(rec X (X (do f.m X)))"),), (), max_steps=4, replies=ReplySource(seed=0))
        assert len(tr.steps) == 4 and tr.outcome == CUT

    def test_choice_has_no_rule(self):
        with pytest.raises(ExecutionError):
            pci((th("(choice S D)"),), ())

    def test_pending_deadlock_is_sticky(self):
        seen = []
        beta = (D, th("(do a.a (do a.a S))"), th("(do b.b S)"))
        pci(beta, (), replies=ReplySource(seed=0), observer=lambda st: seen.append(st.pending_deadlock))
        assert seen[0] and all(seen)


class TestTerms:
    def test_single_stop(self):
        assert pci_term((S,), ()) == S

    def test_single_thread(self):
        assert equivalent(pci_term((th("(pcc a.a S S)"),), ()), th("(pcc a.a S S)"))

    def test_single_deadlock(self):
        assert pci_term((D,), ()) == D

    def test_operator_and_machine_agree(self):
        beta = (th("(pcc f.m (switch 1) D)"), th("(rec X (X (pcc g.n X S)))"))
        alpha = (th("(do h.k S)"),)
        for seed in range(5):
            a = pci(beta, alpha, replies=ReplySource(seed=seed), max_steps=40)
            b = execute(Pci(beta, alpha), ReplySource(seed=seed), max_steps=40)
            assert a.steps == b.steps and a.outcome == b.outcome


class TestProperties:
    def test_single_thread_degenerates(self):
        g = Gen(random.Random(11), switch=False, extern=False)
        for seed in range(60):
            t = g.thread(0)
            a = pci((t,), (), replies=ReplySource(seed=seed), max_steps=50)
            b = execute(t, ReplySource(seed=seed), max_steps=50)
            assert a.steps == b.steps and a.outcome == b.outcome

    def test_round_robin_sample(self):
        g = Gen(random.Random(5), switch=False, extern=False)
        for seed in range(40):
            beta = g.vector(0, 1, 4)
            tr = pci(beta, (), replies=ReplySource(seed=seed), max_steps=100)
            assert round_robin_violations(tr.turns, len(beta)) == 0

    def test_oracle_detects_unfair_order(self):
        assert round_robin_violations([(0, "action"), (0, "action"), (1, "stop")], 2) > 0
        assert round_robin_violations([(0, "action"), (1, "action"), (1, "stop"), (0, "stop")], 2) > 0
