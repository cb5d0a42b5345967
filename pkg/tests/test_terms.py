import pytest

from polythread.dsl import parse_thread as th
from polythread.errors import StateOverflow, TermError
from polythread.terms import (
    D, EXTERN, TAU, Basic, Pcc, Pcs, RecRef, RecSpec, S, Switch, Tau, Var, equivalent,
    free_vars, head_normal, normalize_tau, prefix, project, reachable_states, signature,
    substitute, to_term, try_equivalent, unfold,
)

A = Basic("f", "m")
B_ = Basic("g", "n")


def loop(a=A, name="X"):
    return RecRef(name, RecSpec(((name, Pcc(a, Var(name), Var(name))),)))


class TestActions:
    def test_tau_is_not_basic(self):
        assert TAU != A
        assert Tau() == TAU

    def test_basic_identifiers_validated(self):
        with pytest.raises(TermError):
            Basic("F", "m")
        with pytest.raises(TermError):
            Basic("f", "")

    def test_switch_target_not_part_of_identity(self):
        assert Basic("tls", "init", 1) == Basic("tls", "init", 2)


class TestRecursion:
    def test_unfold_single_loop(self):
        x = loop()
        assert unfold(x) == Pcc(A, x, x)

    def test_unfold_plain_term_unchanged(self):
        assert unfold(S) is S

    def test_unfold_one_step(self):
        spec = RecSpec((("X", Pcc(A, S, Var("Y"))), ("Y", D)))
        assert unfold(RecRef("X", spec)) == Pcc(A, S, RecRef("Y", spec))

    def test_unbound_variable_rejected(self):
        with pytest.raises(TermError):
            RecSpec((("X", Pcc(A, Var("Z"), S)),))

    def test_unguarded_equation_rejected(self):
        with pytest.raises(TermError):
            RecSpec((("X", Var("X")),))

    def test_free_vars_and_substitute(self):
        t = Pcc(A, Var("X"), Var("Y"))
        assert free_vars(t) == {"X", "Y"}
        assert substitute(t, {"X": S, "Y": D}) == Pcc(A, S, D)

    def test_head_normal_of_free_variable(self):
        with pytest.raises(TermError):
            head_normal(Var("X"))


class TestTauNormalisation:
    def test_pcc(self):
        assert normalize_tau(Pcc(TAU, S, D)) == Pcc(TAU, S, S)

    def test_pcs(self):
        assert normalize_tau(Pcs(TAU, (S, D, D))) == Pcs(TAU, (S, S, S))

    def test_leaf(self):
        assert normalize_tau(S) == S


class TestProjection:
    def test_zero(self):
        assert project(th("(pcc f.m S D)"), 0) == D
        assert project(S, 0) == D

    def test_two_unfoldings(self):
        inner = Pcc(A, D, D)
        assert project(loop(), 2) == Pcc(A, inner, inner)

    def test_leaves_below_cut(self):
        assert project(Pcc(A, S, EXTERN), 1) == Pcc(A, D, D)


class TestReachableStates:
    def test_single_loop(self):
        states = reachable_states(loop(), 10)
        assert len(states) == 1 and not states.overflow

    def test_finite_tree(self):
        assert reachable_states(Pcc(A, S, D), 10).states == {Pcc(A, S, D), S, D}

    def test_two_mutual_states(self):
        t = th("(rec X (X (pcc f.m X Y)) (Y (pcc g.n Y X)))")
        assert len(reachable_states(t, 10)) == 2

    def test_overflow_flag(self):
        chain = S
        for _ in range(20):
            chain = Pcc(A, chain, D)
        assert reachable_states(chain, 5).overflow


class TestEquivalence:
    def test_tau_axiom(self):
        assert equivalent(Pcc(TAU, S, D), Pcc(TAU, S, S))

    def test_distinct_leaves(self):
        assert not equivalent(S, D, 1)

    def test_renamed_loops(self):
        y = RecRef("Y", RecSpec((("Y", Pcc(A, Var("Y"), Var("Y"))),)))
        assert equivalent(loop(), y, 32)

    def test_unrolled_loop(self):
        assert equivalent(loop(), Pcc(A, loop(), Pcc(A, loop(), loop())))

    def test_different_actions(self):
        assert not equivalent(loop(A), loop(B_))

    def test_branch_order_matters(self):
        assert not equivalent(Pcc(A, S, D), Pcc(A, D, S))

    def test_try_equivalent_gives_up(self):
        big = S
        for i in range(40):
            big = Pcc(A, big, Switch(i))
        assert try_equivalent(big, big, limit=3) is None

    def test_signature_drops_tau_branches(self):
        assert signature(Pcc(TAU, S, D)) == signature(Pcc(TAU, S, S))


class TestMaterialisation:
    def test_to_term_keeps_finite_terms(self):
        t = th("(pcc f.m (do g.n S) D)")
        assert to_term(t) == t

    def test_to_term_ties_loops(self):
        x = to_term(loop())
        assert isinstance(x, RecRef) and equivalent(x, loop())

    def test_to_term_through_operator(self):
        from polythread.polythreading import Spt

        counter = th("(rec X (X (do f.m X)))")
        assert equivalent(to_term(Spt(counter, ())), counter)

    def test_to_term_overflow(self):
        chain = S
        for _ in range(30):
            chain = prefix(A, chain)
        with pytest.raises(StateOverflow):
            to_term(chain, limit=5)
