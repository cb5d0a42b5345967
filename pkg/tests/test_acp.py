import json
import random

import pytest

from polythread.acp import (
    ACT_I, ACT_STP, ACT_STP_BAR, ACT_STP_STAR, DEAD, Act, Alt, Encap, Par, PRecRef, Seq,
    TERMINATED, TranslationError, comm, encap_Af, pretty, pretty_spec, proc_step, rcv,
    rename_Rf, seq, snd, trace_match, transition_dump, translate_service, translate_thread,
    use_match,
)
from polythread.axioms import Gen
from polythread.dsl import parse_thread as th
from polythread.errors import StateOverflow
from polythread.services import B, BLOCKED, F, T, BoolRegister, Constant, NatCounter, Scripted
from polythread.terms import D, EXTERN, S, Switch, equivalent


class TestCommunication:
    def test_handshake(self):
        assert comm(snd("f", "m"), rcv("f", "m")) == ACT_I
        assert comm(rcv("f", "m"), snd("f", "m")) == ACT_I

    def test_stop_handshake(self):
        assert comm(ACT_STP, ACT_STP_BAR) == ACT_STP_STAR

    @pytest.mark.parametrize("a,b", [
        (snd("f", "m"), snd("f", "m")),
        (snd("f", "m"), rcv("g", "m")),
        (snd("f", "m"), rcv("f", "n")),
        (snd("serv", "m"), rcv("serv", "m")),
        (ACT_STP, ACT_STP),
    ])
    def test_undefined(self, a, b):
        assert comm(a, b) is None


class TestRenamingAndEncapsulation:
    def test_service_side_moves_to_focus(self):
        assert rename_Rf("f", snd("serv", T)) == snd("f", T)
        assert rename_Rf("f", rcv("serv", "m")) == rcv("f", "m")

    def test_other_actions_fixed(self):
        assert rename_Rf("f", ACT_STP) == ACT_STP
        assert rename_Rf("f", snd("g", "m")) == snd("g", "m")

    def test_channel_set(self):
        af = encap_Af("f")
        assert all(rcv("f", m) in af for m in ("m", "n", "anything"))
        assert snd("f", T) in af
        assert rcv("g", "m") not in af and ACT_STP not in af


class TestSemantics:
    def test_action(self):
        assert proc_step(Act(ACT_STP)) == {(ACT_STP, TERMINATED)}

    def test_dead(self):
        assert proc_step(DEAD) == frozenset()

    def test_encapsulation_blocks(self):
        assert proc_step(Encap(frozenset({ACT_STP}), Act(ACT_STP))) == frozenset()

    def test_merge(self):
        a, b = snd("f", "m"), rcv("f", "m")
        moves = proc_step(Par(Act(a), Act(b)))
        assert (ACT_I, TERMINATED) in moves
        assert (a, Act(b)) in moves and (b, Act(a)) in moves
        assert len(moves) == 3

    def test_sequence_and_choice(self):
        p = Alt(seq(ACT_I, ACT_STP), Act(ACT_STP_BAR))
        labels = {a for a, _ in proc_step(p)}
        assert labels == {ACT_I, ACT_STP_BAR}
        assert proc_step(Seq(Act(ACT_I), DEAD)) == {(ACT_I, DEAD)}


class TestThreadTranslation:
    def test_stop(self):
        assert translate_thread(S) == Act(ACT_STP)

    def test_deadlock(self):
        assert translate_thread(D) == Seq(Act(ACT_I), DEAD)

    def test_postconditional(self):
        p = translate_thread(th("(pcc f.m S D)"))
        assert pretty(p) == "snd_f(m) · (rcv_f(T) · stp + rcv_f(F) · i · δ)"

    def test_switch_over_uses_literal_tls(self):
        p = translate_thread(Switch(1), (S,))
        assert "tls.init" in pretty_spec(p)

    def test_tls_as_handshake(self):
        p = translate_thread(Switch(1), (S,), tls_as_basic=True)
        assert "snd_tls(init)" in pretty_spec(p)

    @pytest.mark.parametrize("text", ["(mig 1 S S)", "(pcs f.m S D)"])
    def test_untranslatable(self, text):
        with pytest.raises(TranslationError):
            translate_thread(th(text))


class TestServiceTranslation:
    def test_constant_is_one_state(self):
        p = translate_service(Constant(T), ["m", "n"])
        assert isinstance(p, PRecRef) and len(p.spec.equations) == 1
        labels = {str(a) for a, _ in proc_step(p)}
        assert labels == {"rcv_serv(m)", "rcv_serv(n)", "stp_bar"}

    def test_blocked_loops(self):
        p = translate_service(BLOCKED, ["m"])
        assert len(p.spec.equations) == 1
        (_, after_rcv), = [m for m in proc_step(p) if str(m[0]) == "rcv_serv(m)"]
        assert {str(a) for a, _ in proc_step(after_rcv)} == {"snd_serv(B)"}

    def test_scripted_two_states(self):
        assert len(translate_service(Scripted((T,)), ["m"]).spec.equations) == 2

    def test_register(self):
        p = translate_service(BoolRegister(False), ["get", "set_true", "set_false"])
        assert len(p.spec.equations) == 2

    def test_unbounded_service_overflows(self):
        with pytest.raises(StateOverflow):
            translate_service(NatCounter(0), ["inc"], limit=10)

    def test_transition_dump_is_json(self):
        out = json.loads(transition_dump(translate_service(Scripted((T,)), ["m"])))
        assert out["initial"] == 0 and out["states"] and out["edges"]


class TestObservationMatch:
    def test_stop(self):
        assert trace_match(S)

    def test_small_thread(self):
        assert trace_match(th("(pcc f.m S D)"), depth=4)

    def test_swapped_branches_caught(self):
        assert not trace_match(th("(pcc f.m S D)"), swap_branches=True)

    def test_loops_and_fragments(self):
        t = th("(rec X (X (pcc f.m X (switch 1))))")
        alpha = (th("(pcc g.n (switch 1) S)"),)
        assert trace_match(t, alpha)
        assert trace_match(t, alpha, tls_as_basic=True)

    def test_extern(self):
        assert trace_match(EXTERN, (S, th("(do f.m S)")))

    def test_use_composition(self):
        t = th("(rec X (X (pcc f.dec (do g.n X) S)))")
        assert use_match(t, "f", NatCounter(2))
        assert use_match(th("(do f.m S)"), "f", BLOCKED)

    def test_dropped_encapsulation_caught(self):
        assert not use_match(th("(do f.m S)"), "f", Constant(T), drop_encap=True)

    def test_random_sample(self):
        g = Gen(random.Random(8), depth=4, extern=False, rec=0.0)
        for _ in range(20):
            alpha = g.fragments()
            t = g.thread(len(alpha))
            assert trace_match(t, alpha)
