"""Machine-to-machine compilations, checked against run-level oracles.

The frozen numbers (clock exponents, head counts, state counts) were
computed by hand from the closed forms before the implementation
existed; the language comparisons run both artifacts and diff verdicts.
"""

import pytest

from goilab import corpus
from goilab.machines import (
    CapExceeded,
    InputWord,
    PointerMachine,
    Rule,
    Step,
    fa_always_halts,
    fa_run,
    pm_run,
    words_up_to,
)
from goilab.transforms import (
    NotHaltingWarning,
    acyclify,
    automaton_to_pm,
    check_acyclic,
    clock_parameters,
    clockify,
    compilation_report,
    materialize,
    normalize_single_move,
)

AUTOMATA = ("fa_ones", "fa_loop", "fa_eq01")


# --- clock construction ---


def test_clock_exponent_frozen():
    # d = k + ceil(log3(|S| * 4^k)), worked out on paper:
    #   fa_ones : |S|=2, k=1 -> 1 + ceil(log3 8)  = 3
    #   fa_loop : |S|=4, k=1 -> 1 + ceil(log3 16) = 4
    #   fa_eq01 : |S|=3, k=2 -> 2 + ceil(log3 48) = 6
    expected = {"fa_ones": 3, "fa_loop": 4, "fa_eq01": 6}
    for name, d in expected.items():
        params = clock_parameters(corpus.load_automaton(name))
        assert params.d == d, name
        assert params.extra_heads == d + 1, name


def test_clock_exponent_inequality():
    for name in AUTOMATA:
        a = corpus.load_automaton(name)
        d = clock_parameters(a).d
        for length in range(1, 9):
            span = length + 2
            assert span ** (d + 1) >= len(a.states) * 4**a.k * span**a.k, (name, length)


def test_clock_exponent_is_tight_enough_to_be_checkable():
    # the exponent formula should not blow past what the tests can run
    for name in AUTOMATA:
        assert clock_parameters(corpus.load_automaton(name)).d <= 8


def test_clockify_counts_frozen():
    expected = {"fa_ones": (5, 32), "fa_loop": (6, 128), "fa_eq01": (9, 384)}
    for name, (heads, states) in expected.items():
        a = corpus.load_automaton(name)
        c = clockify(a)
        assert c.k == heads == a.k + clock_parameters(a).d + 1, name
        assert len(c.states) == states == len(a.states) * 2 ** clock_parameters(a).extra_heads, name


def test_clockify_language_agreement():
    for name in AUTOMATA:
        a = corpus.load_automaton(name)
        c = clockify(a)
        for w in words_up_to(6):
            assert (fa_run(c, w) == "accept") == (fa_run(a, w) == "accept"), (name, w)


def test_clockify_always_halts():
    for name in AUTOMATA:
        c = clockify(corpus.load_automaton(name))
        assert fa_always_halts(c, maxlen=6) == (True, None), name


def test_clockify_kills_the_loop():
    # fa_loop spins forever on the empty word; its clocked variant stops
    a = corpus.load_automaton("fa_loop")
    assert fa_run(a, InputWord.from_digits("")) == "cycle"
    assert fa_run(clockify(a), InputWord.from_digits("")) == "halt"


def test_clockify_preserves_determinism():
    for name in AUTOMATA:
        a = corpus.load_automaton(name)
        assert a.is_deterministic()
        assert clockify(a).is_deterministic(), name


# --- automaton to pointer machine ---


def test_compile_swaps_the_language():
    m = automaton_to_pm(corpus.load_automaton("fa_ones"))
    assert pm_run(m, InputWord.from_digits("00")) == "accept"
    assert pm_run(m, InputWord.from_digits("01")) == "reject"


def test_compile_colanguage_on_clocked_corpus():
    for name in AUTOMATA:
        a = corpus.load_automaton(name)
        m = automaton_to_pm(clockify(a))
        for w in words_up_to(5):
            want = "reject" if fa_run(a, w) == "accept" else "accept"
            assert pm_run(m, w) == want, (name, w)


def test_compile_is_deterministic_for_deterministic_input():
    for name in AUTOMATA:
        m = automaton_to_pm(clockify(corpus.load_automaton(name)))
        assert m.is_deterministic(), name


def test_compile_warns_when_the_automaton_can_hang():
    a = corpus.load_automaton("fa_loop")
    with pytest.warns(NotHaltingWarning):
        m = automaton_to_pm(a)
    # the hang carries over: the simulation cycles right where A does
    assert pm_run(m, InputWord.from_digits("")) == "cycle"


def test_compile_pointer_budget():
    for name in AUTOMATA:
        a = corpus.load_automaton(name)
        assert automaton_to_pm(clockify(a)).p == clockify(a).k + 2, name


def test_compilation_report_counts():
    a = corpus.load_automaton("fa_ones")
    c = clockify(a)
    rep = compilation_report(a, c, notes=["clock"])
    assert rep["source"]["states"] == 2 and rep["target"]["states"] == 32
    assert rep["source"]["width"] == 1 and rep["target"]["width"] == 5
    assert rep["notes"] == ["clock"]


# --- materialization ---


def test_materialize_small_compile():
    lazy = automaton_to_pm(corpus.load_automaton("fa_eq01"))
    m = materialize(lazy, cap=10_000)
    assert isinstance(m, PointerMachine)
    assert m.p == 4
    assert len(m.states) == 16  # 2k boot states + |S| * 2^k simulation states
    assert m.is_deterministic()
    for w in words_up_to(4):
        assert pm_run(m, w) == pm_run(lazy, w), w


def test_materialize_refuses_huge_tables():
    lazy = automaton_to_pm(clockify(corpus.load_automaton("fa_eq01")))
    with pytest.raises(CapExceeded):
        materialize(lazy, cap=10_000)


# --- single-move normalization ---


def _continue_moves(machine):
    for rule in machine.rules:
        for act in rule.actions:
            if isinstance(act, Step):
                yield sum(1 for mv in act.moves if mv != "0")


def test_normalize_leaves_single_move_machines_alone():
    m = corpus.load_machine("dpm_even")
    n = normalize_single_move(m)
    assert set(n.rules) == set(m.rules)
    assert n.states == m.states


def test_normalize_output_is_single_move():
    for name in ("pm_loop", "ndpm_twoptr", "dpm_lasttwo"):
        n = normalize_single_move(corpus.load_machine(name))
        assert all(c == 1 for c in _continue_moves(n)), name


def test_normalize_preserves_verdicts_including_cycles():
    m = corpus.load_machine("pm_loop")
    n = normalize_single_move(m)
    for value in range(32):
        w = InputWord.from_int(value)
        assert pm_run(n, w) == pm_run(m, w), value


def _two_pointer_demo():
    # one double move, one stay-only self-loop, reachable from both
    rules = [
        Rule((None, None), "q0", (Step(("+", "+"), "q1"),)),
        Rule(("0", None), "q1", ("accept",)),
        Rule(("1", None), "q1", (Step(("0", "0"), "q1"),)),
        Rule(("*", None), "q1", ("reject",)),
    ]
    return PointerMachine(2, ("q0", "q1"), rules, "q0", ("*", "*"))


def test_normalize_splits_multi_moves_and_dances_stays():
    m = _two_pointer_demo()
    n = normalize_single_move(m)
    assert all(c == 1 for c in _continue_moves(n))
    assert len(n.states) > len(m.states)
    for value in range(16):
        w = InputWord.from_int(value)
        assert pm_run(n, w) == pm_run(m, w), value


def test_normalize_compiled_machine():
    lazy = automaton_to_pm(corpus.load_automaton("fa_eq01"))
    n = normalize_single_move(materialize(lazy, cap=10_000))
    assert all(c == 1 for c in _continue_moves(n))
    assert n.is_deterministic()
    for w in words_up_to(4):
        assert pm_run(n, w) == pm_run(lazy, w), w


def test_normalize_preserves_determinism_flag():
    for name in ("dpm_even", "pm_loop"):
        assert normalize_single_move(corpus.load_machine(name)).is_deterministic(), name
    assert not normalize_single_move(corpus.load_machine("ndpm_andzero")).is_deterministic()


# --- acyclicity ---


def test_check_acyclic_on_clean_machines():
    for name in ("dpm_even", "dpm_lasttwo", "dpm_hasone", "ndpm_andzero", "ndpm_twoptr"):
        assert check_acyclic(corpus.load_machine(name), maxlen=5) == (True, None), name


def test_check_acyclic_finds_loops():
    for name in ("pm_loop", "pm_spinner"):
        ok, witness = check_acyclic(corpus.load_machine(name), maxlen=3)
        assert not ok, name
        start, word, cfg = witness
        assert len(start.reads) == corpus.load_machine(name).p
        assert cfg.state in corpus.load_machine(name).states


def test_check_acyclic_covers_unreachable_starts():
    # looping state is unreachable from the machine's own initial state,
    # so only the quantification over every start can see it
    rules = [
        Rule((None,), "good", ("accept",)),
        Rule((None,), "bad", (Step(("0",), "bad"),)),
    ]
    m = PointerMachine(1, ("good", "bad"), rules, "good", ("*",))
    ok, witness = check_acyclic(m, maxlen=2)
    assert not ok
    assert witness[0].state == "bad"


def test_acyclify_loop_machine():
    m = corpus.load_machine("pm_loop")
    a = acyclify(m)
    assert check_acyclic(a, maxlen=4) == (True, None)
    assert a.is_deterministic()
    for value in range(32):
        w = InputWord.from_int(value)
        want = pm_run(m, w)
        assert pm_run(a, w) == ("reject" if want == "cycle" else want), value


def test_acyclify_spinner_rejects_everything():
    a = acyclify(corpus.load_machine("pm_spinner"))
    for value in range(8):
        assert pm_run(a, InputWord.from_int(value)) == "reject", value
    assert check_acyclic(a, maxlen=3) == (True, None)


def test_acyclify_conservative_on_acyclic_machines():
    m = corpus.load_machine("dpm_even")
    a = acyclify(m)
    assert a.is_deterministic()
    for value in range(32):
        w = InputWord.from_int(value)
        assert pm_run(a, w) == pm_run(m, w), value
