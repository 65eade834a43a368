"""Core semantics: words, pointer-machine runs, head-automaton runs.

Expected values in the _frozen tests were computed by hand on paper tapes
before the implementation existed; they are the ground truth the executor
has to reproduce, not regression snapshots.
"""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from goilab import corpus
from goilab.machines import (
    ACCEPT,
    REJECT,
    FuelExhausted,
    HeadAutomaton,
    InputWord,
    MachineError,
    PointerMachine,
    digits_of,
    fa_always_halts,
    fa_halts_on,
    fa_run,
    initial_configuration,
    pm_run,
    pm_step,
    words_up_to,
)


def test_digits_of_frozen():
    assert digits_of(0) == ()
    assert digits_of(1) == (1,)
    assert digits_of(2) == (1, 0)
    assert digits_of(6) == (1, 1, 0)
    assert digits_of(255) == (1,) * 8


def test_word_cells_frozen():
    assert InputWord.from_int(6).cells == ("*", "1", "1", "0")
    assert InputWord.from_int(0).cells == ("*",)
    assert InputWord.from_digits([0, 1]).cells == ("*", "0", "1")
    assert InputWord.from_digits([]).cells == ("*",)


def test_word_value():
    assert InputWord.from_int(6).value() == 6
    assert InputWord.from_digits([0, 1, 1]).value() == 3
    assert InputWord.from_digits([0]).value() == 0


@given(st.integers(min_value=0, max_value=2**40))
def test_word_roundtrip(n):
    assert InputWord.from_int(n).value() == n


def test_word_symbols_wrap():
    w = InputWord.from_int(6)  # cells * 1 1 0
    assert w.symbol(0) == "*"
    assert w.symbol(3) == "0"
    assert w.symbol(4) == "*"
    assert w.symbol(-1) == "0"
    assert w.marked(0) == ">"
    assert w.marked(4) == "<"
    assert w.marked(1) == "1"


def test_even_machine_single_step_frozen():
    # One backward move from the star cell of w(6) wraps to position 3,
    # reads the digit 0, and lands in q1 with the slot facing out.
    m = corpus.load_machine("dpm_even")
    w = InputWord.from_int(6)
    c0 = initial_configuration(m)
    assert c0.positions == (0,)
    assert c0.slots == ("*i",)
    assert c0.state == "q0"
    (c1,) = pm_step(m, w, c0)
    assert c1.positions == (3,)
    assert c1.slots == ("0o",)
    assert c1.state == "q1"
    (outcome,) = pm_step(m, w, c1)
    assert outcome == ACCEPT


def test_even_machine_language():
    m = corpus.load_machine("dpm_even")
    for n in range(64):
        want = ACCEPT if n % 2 == 0 else REJECT
        assert pm_run(m, InputWord.from_int(n)) == want, n


def test_lasttwo_machine_language():
    m = corpus.load_machine("dpm_lasttwo")
    for n in range(64):
        want = ACCEPT if n % 4 == 0 else REJECT
        assert pm_run(m, InputWord.from_int(n)) == want, n


def test_lasttwo_on_padded_words():
    m = corpus.load_machine("dpm_lasttwo")
    for w in words_up_to(6):
        want = ACCEPT if w.value() % 4 == 0 else REJECT
        assert pm_run(m, w) == want, w


def test_hasone_machine_language():
    m = corpus.load_machine("dpm_hasone")
    for w in words_up_to(6):
        want = ACCEPT if "1" in w.cells else REJECT
        assert pm_run(m, w) == want, w


def test_andzero_machine_is_universal():
    # Both branches must accept: the forward scan finds a 0 or the
    # backward scan does.  A word of all 1s kills one branch, so the
    # machine rejects even though the other branch accepts.
    m = corpus.load_machine("ndpm_andzero")
    assert not m.is_deterministic()
    for w in words_up_to(6):
        want = ACCEPT if "0" in w.cells else REJECT
        assert pm_run(m, w) == want, w


def test_twoptr_machine_language():
    m = corpus.load_machine("ndpm_twoptr")
    assert m.p == 2
    for n in range(64):
        want = ACCEPT if n == 0 or n % 2 == 1 else REJECT
        assert pm_run(m, InputWord.from_int(n)) == want, n


def test_loop_fixture_cycles_on_zero_digits():
    m = corpus.load_machine("pm_loop")
    assert pm_run(m, InputWord.from_int(0)) == ACCEPT
    assert pm_run(m, InputWord.from_int(3)) == ACCEPT
    assert pm_run(m, InputWord.from_int(7)) == ACCEPT
    assert pm_run(m, InputWord.from_int(5)) == "cycle"
    assert pm_run(m, InputWord.from_int(2)) == "cycle"


def test_spinner_always_cycles():
    m = corpus.load_machine("pm_spinner")
    for n in (0, 1, 2, 9):
        assert pm_run(m, InputWord.from_int(n)) == "cycle"


def test_fuel_exhaustion():
    m = corpus.load_machine("pm_spinner")
    with pytest.raises(FuelExhausted):
        pm_run(m, InputWord.from_int(9), fuel=2)


def test_partial_machine_rejected():
    with pytest.raises(MachineError):
        PointerMachine(
            p=1,
            states=("q0",),
            rules=((("0",), "q0", (ACCEPT,)),),
            initial_state="q0",
            initial_slots=("*",),
        )


def test_overlapping_rules_rejected():
    with pytest.raises(MachineError):
        PointerMachine(
            p=1,
            states=("q0",),
            rules=(
                ((None,), "q0", (ACCEPT,)),
                (("0",), "q0", (REJECT,)),
            ),
            initial_state="q0",
            initial_slots=("*",),
        )


def test_words_up_to_is_lexicographic():
    got = [w.cells[1:] for w in words_up_to(2)]
    assert got == [
        (),
        ("0",), ("1",),
        ("0", "0"), ("0", "1"), ("1", "0"), ("1", "1"),
    ]


# --- automata ---


def test_ones_automaton_language():
    a = corpus.load_automaton("fa_ones")
    assert a.is_deterministic()
    for w in words_up_to(8):
        want = "accept" if "1" in w.cells else "halt"
        assert fa_run(a, w) == want, w


def test_loop_automaton_frozen():
    # Bounces between the endmarkers on the empty word, accepts words
    # starting with 1, and halts without accepting on words starting 0.
    a = corpus.load_automaton("fa_loop")
    assert fa_run(a, InputWord.from_digits([])) == "cycle"
    assert fa_run(a, InputWord.from_digits([1])) == "accept"
    assert fa_run(a, InputWord.from_digits([1, 0])) == "accept"
    assert fa_run(a, InputWord.from_digits([0])) == "halt"
    assert fa_run(a, InputWord.from_digits([0, 1])) == "halt"


def test_loop_automaton_halting():
    a = corpus.load_automaton("fa_loop")
    for w in words_up_to(6):
        assert fa_halts_on(a, w) == (len(w.cells) > 1), w
    ok, witness = fa_always_halts(a, maxlen=4)
    assert not ok
    word, looper = witness
    assert word.cells == ("*",)
    assert looper.state in ("s1", "s2")


def test_always_halts_witness_is_none_when_clean():
    a = corpus.load_automaton("fa_ones")
    assert fa_always_halts(a, maxlen=5) == (True, None)


def test_eq01_automaton_language():
    a = corpus.load_automaton("fa_eq01")
    assert a.k == 2
    assert a.is_deterministic()
    for w in words_up_to(8):
        digits = w.cells[1:]
        want = "accept" if digits.count("0") == digits.count("1") else "halt"
        assert fa_run(a, w) == want, w


def test_endmarker_guard_validation():
    with pytest.raises(MachineError):
        HeadAutomaton(
            k=1,
            states=("s0",),
            rules=((("<",), "s0", (((1,), "s0"),)),),
            initial="s0",
            accepting=frozenset(),
        )
    with pytest.raises(MachineError):
        HeadAutomaton(
            k=1,
            states=("s0",),
            rules=(((None,), "s0", (((1,), "s0"),)),),
            initial="s0",
            accepting=frozenset(),
        )
