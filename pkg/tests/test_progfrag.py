import itertools
import random

import pytest

from oracles import run_instructions, run_thread
from polythread.errors import TermError, UnservedFocus
from polythread.polythreading import spt
from polythread.progfrag import (
    Architecture, Halt, Jump, NegTest, Plain, PosTest, Swo, extract, format_program,
    load_fragments, parse_program, run_architecture,
)
from polythread.runtime import DEADLOCKED, TERMINATED, ReplySource, execute
from polythread.services import BLOCKED, Constant, NatCounter, T
from polythread.terms import D, S, Basic, Pcc, Switch, equivalent

FM = Basic("f", "m")
GN = Basic("g", "n")


class TestParsing:
    def test_all_forms(self):
        prog = parse_program("a f.m\n+ f.m\n- g.n ; test\n# 1\n!\nswo 2\n\n")
        assert prog == (Plain(FM), PosTest(FM), NegTest(GN), Jump(1), Halt(), Swo(2))

    def test_round_trip(self):
        prog = (Plain(FM), PosTest(GN), Jump(0), Swo(3), Halt())
        assert parse_program(format_program(prog)) == prog

    @pytest.mark.parametrize("bad", ["", "; only a comment\n", "a", "# x", "swo -1", "a tau",
                                     "? f.m", "+ F.m", "! !"])
    def test_rejects(self, bad):
        with pytest.raises(TermError):
            parse_program(bad)

    def test_error_names_line(self):
        with pytest.raises(TermError, match="line 2"):
            parse_program("!\nbogus\n")


class TestExtraction:
    def test_switch_discards_rest(self):
        assert extract([Swo(3), Plain(FM)]) == Switch(3)

    def test_halt(self):
        assert extract([Halt()]) == S

    def test_tests_and_fall_through(self):
        prog = [PosTest(FM), Halt(), Plain(GN), Halt()]
        assert extract(prog) == Pcc(FM, S, Pcc(GN, S, S))

    def test_negative_test(self):
        assert extract([NegTest(FM), Halt(), Swo(1)]) == Pcc(FM, Switch(1), S)

    def test_fall_off_end(self):
        assert extract([Plain(FM)]) == Pcc(FM, D, D)

    def test_jump_out_of_range(self):
        assert extract([Jump(0)]) == D
        assert extract([Plain(FM), Jump(9)]) == Pcc(FM, D, D)

    def test_jump_cycle_without_action(self):
        assert extract([Jump(2), Jump(1)]) == D

    def test_loop(self):
        t = extract([Plain(FM), Jump(1)])
        assert equivalent(t, Pcc(FM, t, t))

    def test_swo_zero_not_range_checked(self):
        assert extract([Swo(0)]) == Switch(0)

    def test_agrees_with_direct_interpreter(self):
        rng = random.Random(4)
        kinds = [
            lambda: Plain(rng.choice([FM, GN])),
            lambda: PosTest(rng.choice([FM, GN])),
            lambda: NegTest(rng.choice([FM, GN])),
            lambda: Jump(rng.randint(0, 7)),
            lambda: Halt(),
            lambda: Swo(rng.randint(0, 3)),
        ]
        for _ in range(300):
            prog = [rng.choice(kinds)() for _ in range(rng.randint(1, 6))]
            t = extract(prog)
            for _ in range(3):
                bits = [rng.random() < 0.5 for _ in range(60)]
                want = run_instructions(prog, iter(bits), 40)
                got = run_thread(t, iter(bits), 40)
                assert got == want, prog


class TestArchitecture:
    def test_halt_only(self):
        tr = run_architecture(Architecture(parse_program("!")))
        assert tr.steps == [] and tr.outcome == TERMINATED

    def test_swo_with_tls_service(self):
        arch = Architecture(parse_program("swo 1"), (parse_program("!"),), {"tls": Constant(T)})
        tr = run_architecture(arch)
        assert tr.to_json()["steps"] == [{"n": 1, "action": "tau", "processed": "tls.init"}]
        assert tr.outcome == TERMINATED

    def test_blocked_service(self):
        arch = Architecture(parse_program("a f.m\n!"), services={"f": BLOCKED})
        tr = run_architecture(arch)
        assert tr.steps == [] and tr.outcome == DEADLOCKED

    def test_unserved_focus(self):
        with pytest.raises(UnservedFocus):
            run_architecture(Architecture(parse_program("a f.m\n!")))

    def test_counter_program(self):
        prog = parse_program("a c.inc\na c.inc\n- c.dec\n# 6\n# 3\n!")
        tr = run_architecture(Architecture(prog, services={"c": NatCounter(0)}))
        assert [s.to_json(1)["processed"] for s in tr.steps] == ["c.inc"] * 2 + ["c.dec"] * 3
        assert tr.outcome == TERMINATED

    def test_round_trip_between_fragments(self):
        main = parse_program("a g.n\nswo 1")
        frag = parse_program("a f.m\nswo 2")
        back = parse_program("!")
        arch = Architecture(main, (frag, back), replies=ReplySource(script=["T", "T"]))
        tr = run_architecture(arch)
        assert [str(a) for a in tr.actions()] == ["g.n", "tls.init", "f.m", "tls.init"]

    def test_without_swo_matches_single_program(self):
        rng = random.Random(9)
        for _ in range(100):
            prog = [rng.choice([Plain(FM), PosTest(GN), NegTest(FM), Jump(rng.randint(0, 5)), Halt()])
                    for _ in range(rng.randint(1, 5))]
            seed = rng.randrange(1000)
            a = run_architecture(Architecture(tuple(prog), (), replies=ReplySource(seed=seed)), 50)
            b = execute(extract(prog), ReplySource(seed=seed), max_steps=50)
            assert a.steps == b.steps and a.outcome == b.outcome

    def test_composition_matches_spt(self):
        main, frag = parse_program("+ f.m\nswo 1\n!"), parse_program("a g.n\n!")
        for seed in range(5):
            a = run_architecture(Architecture(main, (frag,), replies=ReplySource(seed=seed)))
            b = spt(extract(main), (extract(frag),), replies=ReplySource(seed=seed))
            assert a.steps == b.steps and a.outcome == b.outcome


class TestFragmentFiles:
    def test_directory_in_natural_order(self, tmp_path):
        for name, body in (("f10.is", "swo 1"), ("f2.is", "!"), ("f1.is", "a f.m"), ("x.txt", "junk")):
            (tmp_path / name).write_text(body)
        frags = load_fragments(tmp_path)
        assert frags == ((Plain(FM),), (Halt(),), (Swo(1),))

    def test_single_file(self, tmp_path):
        p = tmp_path / "one.is"
        p.write_text("!\n")
        assert load_fragments(p) == ((Halt(),),)


def test_every_short_program_extracts():
    alphabet = [Plain(FM), PosTest(FM), NegTest(FM), Jump(0), Jump(1), Jump(2), Halt(), Swo(1)]
    for n in (1, 2):
        for prog in itertools.product(alphabet, repeat=n):
            extract(list(prog))
