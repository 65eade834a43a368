"""Compilations between machine models.

clockify bolts a multi-head odometer onto an automaton so every run
halts; automaton_to_pm turns an automaton into a pointer machine that
accepts the complement language; normalize_single_move and acyclify
massage pointer machines into the shape the operator encodings expect
(one pointer per step, no reachable run cycles from any start).
"""

from __future__ import annotations

import hashlib
import json
import warnings
from itertools import product
from typing import NamedTuple, Union

from . import files
from .machines import (
    ACCEPT,
    REJECT,
    ARule,
    CapExceeded,
    DEFAULT_FUEL,
    HeadAutomaton,
    InputWord,
    LazyMachine,
    MachineError,
    PointerMachine,
    Rule,
    Step,
    SYMBOLS,
    fa_always_halts,
    initial_configuration,
    pm_step,
    pseudo_configurations,
    words_up_to,
)


class NotHaltingWarning(UserWarning):
    """The compiled automaton can still cycle on some probed word."""


class ClockParameters(NamedTuple):
    d: int
    extra_heads: int


def _ceil_log3(m: int) -> int:
    out, power = 0, 1
    while power < m:
        power *= 3
        out += 1
    return out


def clock_parameters(auto: HeadAutomaton) -> ClockParameters:
    """Clock exponent d such that d+1 sweeping heads outlast every
    configuration of auto on every word of length >= 1.

    The tape span is l+2 cells; (l+2)^(d+1) must dominate the
    configuration count |S|*(l+2)^k times a safety factor 4^k, and the
    worst case is l=1 where the span is 3, hence the base-3 log."""
    d = auto.k + _ceil_log3(len(auto.states) * 4**auto.k)
    return ClockParameters(d=d, extra_heads=d + 1)


def clockify(auto: HeadAutomaton) -> HeadAutomaton:
    """Add d+1 odometer heads so that every run halts.

    Clock head 1 sweeps between the endmarkers on every step; a head
    that returns to '>' (read while heading left) has finished a round
    trip, restarts, and ticks the next head one step.  When all d+1
    heads finish together no rule applies and the machine halts."""
    span = clock_parameters(auto).extra_heads
    dirsets = ["".join(bits) for bits in product("FB", repeat=span)]

    def name(state, dirs):
        return f"{state}.{dirs}"

    rules = []
    for rule in auto.rules:
        for dirs in dirsets:
            for c in range(span):
                if any(b != "B" for b in dirs[:c]):
                    continue
                if dirs[c] == "F":
                    cases = ((">", 1, "F"), ("0", 1, "F"), ("1", 1, "F"), ("<", -1, "B"))
                else:
                    cases = (("0", -1, "B"), ("1", -1, "B"))
                for read, move, newdir in cases:
                    clock_reads = (">",) * c + (read,) + (None,) * (span - c - 1)
                    clock_moves = (1,) * c + (move,) + (0,) * (span - c - 1)
                    newdirs = "F" * c + newdir + dirs[c + 1 :]
                    targets = tuple(
                        (t.moves + clock_moves, name(t.state, newdirs))
                        for t in rule.targets
                    )
                    rules.append(
                        ARule(rule.reads + clock_reads, name(rule.state, dirs), targets)
                    )
    return HeadAutomaton(
        k=auto.k + span,
        states=[name(q, dirs) for q in auto.states for dirs in dirsets],
        rules=rules,
        initial=name(auto.initial, "F" * span),
        accepting=[name(q, dirs) for q in sorted(auto.accepting) for dirs in dirsets],
    )


def automaton_to_pm(auto: HeadAutomaton, halting_probe: int = 4) -> LazyMachine:
    """Compile an automaton into a pointer machine for the complement.

    The machine rejects as soon as the simulated automaton would accept
    and accepts when the automaton runs out of transitions, so it
    decides co-L(auto) whenever auto always halts.  The word's two
    endmarkers collapse onto the single star cell; each simulated
    pointer's last move direction (kept in the state) disambiguates
    which end the star means.  Two extra pointers never move."""
    ok, _ = fa_always_halts(auto, halting_probe)
    if not ok:
        warnings.warn(
            "automaton can cycle; the compiled machine will cycle too",
            NotHaltingWarning,
            stacklevel=2,
        )
    k = auto.k
    p = k + 2
    idle = ("0",) * 2

    def boot(i, phase):
        return f"boot.{i}.{phase}"

    def sim(q, bits):
        return f"sim.{q}.{bits}"

    def dispatch(reads, state):
        parts = state.split(".")
        if parts[0] == "boot":
            i, phase = int(parts[1]), parts[2]
            moves = ["0"] * p
            if phase == "f":
                moves[i - 1] = "+"
                return (Step(tuple(moves), boot(i, "b")),)
            moves[i - 1] = "-"
            after = boot(i + 1, "f") if i < k else sim(auto.initial, "B" * k)
            return (Step(tuple(moves), after),)
        bits = parts[-1]
        q = ".".join(parts[1:-1])
        if q in auto.accepting:
            return (REJECT,)
        syms = tuple(
            r if r in ("0", "1") else ("<" if bits[i] == "F" else ">")
            for i, r in enumerate(reads[:k])
        )
        targets = auto.targets_for(syms, q)
        if not targets:
            return (ACCEPT,)
        actions = []
        for target in targets:
            moves = ["0"] * k
            newbits = list(bits)
            for i, mv in enumerate(target.moves):
                if mv == 1:
                    moves[i], newbits[i] = "+", "F"
                elif mv == -1:
                    moves[i], newbits[i] = "-", "B"
            actions.append(Step(tuple(moves) + idle, sim(target.state, "".join(newbits))))
        return tuple(actions)

    states = [boot(i, phase) for i in range(1, k + 1) for phase in "fb"] + [
        sim(q, "".join(bits))
        for q in auto.states
        for bits in product("FB", repeat=k)
    ]
    return LazyMachine(
        p=p,
        initial_state=boot(1, "f"),
        initial_slots=("*",) * p,
        dispatch=dispatch,
        states=tuple(states),
        deterministic=auto.is_deterministic(),
    )


def materialize(machine, cap: int = 200_000) -> PointerMachine:
    """Expand a dispatch-backed machine into an explicit rule table."""
    states = machine.states
    total = len(states) * 3**machine.p
    if total > cap:
        raise CapExceeded(f"{total} rule entries exceed the cap of {cap}")
    rules = [
        Rule(reads, state, machine.actions_for(reads, state))
        for state in states
        for reads in product(SYMBOLS, repeat=machine.p)
    ]
    return PointerMachine(
        p=machine.p,
        states=states,
        rules=rules,
        initial_state=machine.initial_state,
        initial_slots=machine.initial_slots,
    )


def normalize_single_move(machine: PointerMachine) -> PointerMachine:
    """Rewrite so every Continue action moves exactly one pointer.

    Multi-moves are serialized through fresh chain states, pointer 1
    first.  A stay action becomes a forward-backward round trip on
    pointer 1; since that trip stomps slot 1, the machine afterwards
    runs in a "pretend" copy of the target state that remembers the
    displaced symbol and keeps dispatching on it until pointer 1
    genuinely moves again."""
    p = machine.p
    out_rules: list[Rule] = []
    aux_rules: list[Rule] = []
    pretend_todo: list[tuple[str, str]] = []
    pretend_seen: set[tuple[str, str]] = set()
    dance_seen: set[tuple[str, str]] = set()
    new_names: list[str] = []

    def fresh(kind: str, name: str) -> str:
        new_names.append(name)
        return name

    def pretend(q: str, v: str) -> str:
        if (q, v) not in pretend_seen:
            pretend_seen.add((q, v))
            pretend_todo.append((q, v))
            fresh("pretend", f"pr.{q}.{v}")
        return f"pr.{q}.{v}"

    def dance(q: str, v: str) -> str:
        name = f"dn.{q}.{v}"
        if (q, v) not in dance_seen:
            dance_seen.add((q, v))
            fresh("dance", name)
            back = Step(("-",) + ("0",) * (p - 1), pretend(q, v))
            aux_rules.append(Rule((None,) * p, name, (back,)))
        return name

    def single(j: int, mv: str) -> tuple[str, ...]:
        moves = ["0"] * p
        moves[j] = mv
        return tuple(moves)

    def lower(act, state, reads, idx, v):
        if act in (ACCEPT, REJECT):
            return act
        js = [j for j, mv in enumerate(act.moves) if mv != "0"]
        if not js:
            held = v if v is not None else reads[0]
            return Step(("+",) + ("0",) * (p - 1), dance(act.state, held))
        final = pretend(act.state, v) if v is not None and 0 not in js else act.state
        if len(js) == 1:
            return Step(single(js[0], act.moves[js[0]]), final)
        pat = "".join("?" if r is None else r for r in reads)
        hops = [
            fresh("chain", f"ch.{state}.{pat}.{idx}.{stage}")
            for stage in range(1, len(js))
        ]
        landings = hops + [final]
        for stage in range(1, len(js)):
            j = js[stage]
            aux_rules.append(
                Rule((None,) * p, hops[stage - 1], (Step(single(j, act.moves[j]), landings[stage]),))
            )
        return Step(single(js[0], act.moves[js[0]]), landings[0])

    for rule in machine.rules:
        stays = any(
            isinstance(a, Step) and all(mv == "0" for mv in a.moves) for a in rule.actions
        )
        variants = [rule.reads]
        if stays and rule.reads[0] is None:
            variants = [(s,) + rule.reads[1:] for s in SYMBOLS]
        for reads in variants:
            acts = tuple(
                lower(a, rule.state, reads, i, None) for i, a in enumerate(rule.actions)
            )
            out_rules.append(Rule(reads, rule.state, acts))

    while pretend_todo:
        q, v = pretend_todo.pop()
        pname = f"pr.{q}.{v}"
        for rule in machine.rules:
            if rule.state != q:
                continue
            head = rule.reads[0]
            if head is not None and head != v:
                continue
            pat = (None,) + rule.reads[1:]
            acts = tuple(lower(a, pname, pat, i, v) for i, a in enumerate(rule.actions))
            out_rules.append(Rule(pat, pname, acts))

    return PointerMachine(
        p=p,
        states=tuple(machine.states) + tuple(sorted(set(new_names))),
        rules=out_rules + aux_rules,
        initial_state=machine.initial_state,
        initial_slots=machine.initial_slots,
    )


def _find_cycle(machine, word, start, done, fuel):
    """First configuration seen on a reachable run cycle, or None.

    done accumulates configurations already proven cycle-free so
    repeated calls on the same word share their work."""
    GRAY = object()
    root = initial_configuration(machine, start)
    if root in done:
        return None

    def expand(cfg):
        return [c for c in pm_step(machine, word, cfg) if c not in (ACCEPT, REJECT)]

    color = {root: GRAY}
    stack = [(root, iter(expand(root)))]
    while stack:
        cfg, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            color[cfg] = True
            done.add(cfg)
            stack.pop()
            continue
        if nxt in done:
            continue
        mark = color.get(nxt)
        if mark is None:
            if len(done) + len(color) > fuel:
                raise CapExceeded(f"more than {fuel} configurations")
            color[nxt] = GRAY
            stack.append((nxt, iter(expand(nxt))))
        elif mark is GRAY:
            return nxt
    return None


def check_acyclic(machine, maxlen: int, fuel: int = DEFAULT_FUEL):
    """True iff no start pseudo-configuration can reach a run cycle on
    any input of digit length <= maxlen.  On failure returns the
    witness (start, word, configuration-on-the-cycle)."""
    starts = list(pseudo_configurations(machine))
    for word in words_up_to(maxlen):
        done: set = set()
        for start in starts:
            hit = _find_cycle(machine, word, start, done, fuel)
            if hit is not None:
                return False, (start, word, hit)
    return True, None


def acyclify(machine: PointerMachine) -> PointerMachine:
    """Force every run to end by counting steps.

    A counter in the state ticks once per transition; each time it
    wraps, a clock pointer advances one cell, carrying into the next
    clock pointer on each full lap (detected by reading the star right
    after the move).  When the last clock pointer laps, the machine
    rejects.  The budget R*(k+1)^p is at least twice the number of
    faced run configurations, so genuine verdicts are unaffected."""
    p = machine.p
    R = 2 * len(machine.states) * 6**p
    zeros = ("0",) * p

    def counting(q, c):
        return f"{q}@{c}"

    def checking(i, q):
        return f"cw{i}@{q}"

    rules = []
    for rule in machine.rules:
        pat = rule.reads + (None,) * p
        for c in range(1, R + 1):
            acts = []
            for act in rule.actions:
                if act in (ACCEPT, REJECT):
                    acts.append(act)
                elif c < R:
                    acts.append(Step(act.moves + zeros, counting(act.state, c + 1)))
                else:
                    first_clock = ("+",) + ("0",) * (p - 1)
                    acts.append(Step(act.moves + first_clock, checking(1, act.state)))
            rules.append(Rule(pat, counting(rule.state, c), tuple(acts)))
    for q in machine.states:
        for i in range(1, p + 1):
            blank: list = [None] * (2 * p)
            for sym in ("0", "1"):
                pat = list(blank)
                pat[p + i - 1] = sym
                rules.append(Rule(tuple(pat), checking(i, q), (Step(("0",) * (2 * p), counting(q, 1)),)))
            pat = list(blank)
            pat[p + i - 1] = "*"
            if i < p:
                carry = ["0"] * (2 * p)
                carry[p + i] = "+"
                rules.append(Rule(tuple(pat), checking(i, q), (Step(tuple(carry), checking(i + 1, q)),)))
            else:
                rules.append(Rule(tuple(pat), checking(i, q), (REJECT,)))

    states = [counting(q, c) for q in machine.states for c in range(1, R + 1)]
    states += [checking(i, q) for q in machine.states for i in range(1, p + 1)]
    return PointerMachine(
        p=2 * p,
        states=states,
        rules=rules,
        initial_state=counting(machine.initial_state, 1),
        initial_slots=machine.initial_slots + ("*",) * p,
    )


def _facts(obj) -> dict:
    if isinstance(obj, HeadAutomaton):
        blob = files.dumps(files.automaton_to_dict(obj))
        return {
            "kind": "automaton",
            "states": len(obj.states),
            "width": obj.k,
            "id": hashlib.sha256(blob.encode()).hexdigest()[:16],
        }
    facts = {"kind": "machine", "states": len(obj.states), "width": obj.p}
    if isinstance(obj, PointerMachine):
        blob = files.dumps(files.machine_to_dict(obj))
        facts["id"] = hashlib.sha256(blob.encode()).hexdigest()[:16]
    else:
        facts["id"] = None
    return facts


def compilation_report(source, target, notes=()) -> dict:
    return {"source": _facts(source), "target": _facts(target), "notes": list(notes)}
