"""Pointer machines and two-way multi-head automata over binary words.

The pointer machine side works on a circular tape ``* d1 d2 ... dk`` where
the digits are the binary expansion of the input (most significant first)
and ``*`` is the single separator cell.  A machine owns p pointers; each
pointer has a one-symbol buffer (its "slot") that refreshes only when the
pointer moves.  Transitions dispatch on the slot symbols and the state,
never on the true tape, so the machine can be wrong about where it is.
Acceptance is universal: every branch has to accept.

The automaton side is the classical picture: k two-way heads on
``> w <`` with existential acceptance.
"""

from __future__ import annotations

from typing import Iterable, Iterator, NamedTuple, Union

SYMBOLS = ("0", "1", "*")
FACES = ("i", "o")
FACE_VALUES = ("0i", "0o", "1i", "1o", "*i", "*o")
PM_MOVES = ("+", "-", "0")

ACCEPT = "accept"
REJECT = "reject"

DEFAULT_FUEL = 2_000_000


class MachineError(ValueError):
    """A machine definition violates a structural requirement."""


class FuelExhausted(RuntimeError):
    """A run visited more configurations than the caller allowed."""


class CapExceeded(RuntimeError):
    """An artifact would be bigger than the configured size cap."""


def digits_of(n: int) -> tuple[int, ...]:
    """Binary digits of n, most significant first.  0 has no digits."""
    if n < 0:
        raise ValueError("inputs are natural numbers")
    if n == 0:
        return ()
    return tuple(int(b) for b in bin(n)[2:])


class InputWord(NamedTuple):
    """A tape.  cells[0] is always '*'; the rest are '0'/'1' digits.

    The same object serves both machine models: the pointer machine sees
    the cells as a circle, the automaton sees the digits fenced by '>'
    and '<' (the star cell doubles as both endmarkers).
    """

    cells: tuple[str, ...]

    @classmethod
    def from_int(cls, n: int) -> "InputWord":
        return cls(("*",) + tuple(str(d) for d in digits_of(n)))

    @classmethod
    def from_digits(cls, digits: Iterable[Union[int, str]]) -> "InputWord":
        out = ["*"]
        for d in digits:
            s = str(d)
            if s not in ("0", "1"):
                raise ValueError(f"bad digit {d!r}")
            out.append(s)
        return cls(tuple(out))

    def value(self) -> int:
        bits = "".join(self.cells[1:])
        return int(bits, 2) if bits else 0

    @property
    def k(self) -> int:
        """Number of digit cells."""
        return len(self.cells) - 1

    def symbol(self, pos: int) -> str:
        """Circular read used by pointer machines."""
        return self.cells[pos % len(self.cells)]

    def marked(self, pos: int) -> str:
        """Endmarked read used by automata; pos ranges over 0..k+1."""
        if pos == 0:
            return ">"
        if pos == len(self.cells):
            return "<"
        return self.cells[pos]


def words_up_to(maxlen: int) -> Iterator[InputWord]:
    """All digit strings of length 0..maxlen, shortest first, then
    lexicographic.  Includes words with leading zeros."""
    for length in range(maxlen + 1):
        for bits in range(1 << length):
            yield InputWord.from_digits(format(bits, f"0{length}b") if length else "")


class Step(NamedTuple):
    """Move every pointer per moves ('+', '-' or '0') and change state."""

    moves: tuple[str, ...]
    state: str


# An action is a Step or one of the verdict strings ACCEPT / REJECT.
Action = Union[Step, str]


class Rule(NamedTuple):
    """reads is a symbol pattern; None entries match any symbol."""

    reads: tuple[Union[str, None], ...]
    state: str
    actions: tuple[Action, ...]


def _pattern_matches(pattern, reads) -> bool:
    return all(p is None or p == r for p, r in zip(pattern, reads))


def _patterns_overlap(a, b) -> bool:
    return all(p is None or q is None or p == q for p, q in zip(a, b))


class RunConfiguration(NamedTuple):
    positions: tuple[int, ...]
    slots: tuple[str, ...]  # face values like "0i", "*o"
    state: str


class PseudoConfiguration(NamedTuple):
    """What a machine believes: claimed slot symbols plus a state.

    Runs can be started from any of these, faithful or not; a machine's
    own (initial_slots, initial_state) is just the default choice.
    """

    reads: tuple[str, ...]
    state: str


class PointerMachine:
    """Table-driven machine.  Rules must be pairwise disjoint per state
    and jointly cover every read tuple (the transition relation is total;
    nondeterminism lives in a rule's action list)."""

    def __init__(self, p, states, rules, initial_state, initial_slots):
        self.p = int(p)
        self.states = tuple(states)
        self.rules = tuple(Rule(tuple(r[0]), r[1], tuple(r[2])) for r in rules)
        self.initial_state = initial_state
        self.initial_slots = tuple(initial_slots)
        self._by_state: dict[str, list[Rule]] = {}
        self._cache: dict[tuple, tuple[Action, ...]] = {}
        self._validate()

    def _validate(self) -> None:
        known = set(self.states)
        if len(known) != len(self.states):
            raise MachineError("duplicate state names")
        if self.initial_state not in known:
            raise MachineError("unknown initial state")
        if len(self.initial_slots) != self.p:
            raise MachineError("initial slots must name one symbol per pointer")
        for s in self.initial_slots:
            if s not in SYMBOLS:
                raise MachineError(f"bad initial slot symbol {s!r}")
        for rule in self.rules:
            if rule.state not in known:
                raise MachineError(f"rule for unknown state {rule.state!r}")
            if len(rule.reads) != self.p:
                raise MachineError("pattern arity != p")
            for sym in rule.reads:
                if sym is not None and sym not in SYMBOLS:
                    raise MachineError(f"bad pattern symbol {sym!r}")
            if not rule.actions:
                raise MachineError("empty action list (use accept/reject)")
            for act in rule.actions:
                if act in (ACCEPT, REJECT):
                    continue
                if len(act.moves) != self.p:
                    raise MachineError("move vector arity != p")
                for mv in act.moves:
                    if mv not in PM_MOVES:
                        raise MachineError(f"bad move {mv!r}")
                if act.state not in known:
                    raise MachineError(f"step into unknown state {act.state!r}")
            self._by_state.setdefault(rule.state, []).append(rule)
        full = 3**self.p
        for state, rules in self._by_state.items():
            exact: dict[tuple, Rule] = {}
            wild: list[Rule] = []
            volume = 0
            for rule in rules:
                holes = sum(1 for s in rule.reads if s is None)
                volume += 3**holes
                if holes:
                    wild.append(rule)
                else:
                    if rule.reads in exact:
                        raise MachineError(f"duplicate rule in {state}")
                    exact[rule.reads] = rule
            for i, a in enumerate(wild):
                for b in wild[i + 1 :]:
                    if _patterns_overlap(a.reads, b.reads):
                        raise MachineError(f"overlapping rules in {state}")
                for reads in exact:
                    if _pattern_matches(a.reads, reads):
                        raise MachineError(f"overlapping rules in {state}")
            if volume != full:
                raise MachineError(f"state {state} does not cover all reads")
        covered = set(self._by_state)
        missing = known - covered
        if missing:
            raise MachineError(f"states with no rules: {sorted(missing)}")

    def actions_for(self, reads, state) -> tuple[Action, ...]:
        key = (state, reads)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        for rule in self._by_state[state]:
            if _pattern_matches(rule.reads, reads):
                self._cache[key] = rule.actions
                return rule.actions
        raise MachineError(f"no rule for {reads} in {state}")

    def is_deterministic(self) -> bool:
        return all(len(r.actions) == 1 for r in self.rules)


class LazyMachine:
    """Machine defined by a dispatch function instead of a rule table.

    Compiled automata are huge as tables but cheap as functions; runs
    only ever touch the reachable part.  dispatch(reads, state) must be
    total and return a tuple of actions.
    """

    def __init__(self, p, initial_state, initial_slots, dispatch, states=None, deterministic=None):
        self.p = p
        self.initial_state = initial_state
        self.initial_slots = tuple(initial_slots)
        self._dispatch = dispatch
        self._states = states
        self._deterministic = deterministic
        self._cache: dict[tuple, tuple[Action, ...]] = {}

    @property
    def states(self):
        if self._states is None:
            raise MachineError("this machine does not enumerate its states")
        return self._states

    def is_deterministic(self) -> bool:
        if self._deterministic is None:
            raise MachineError("determinism of this machine was not recorded")
        return self._deterministic

    def actions_for(self, reads, state) -> tuple[Action, ...]:
        key = (state, reads)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = tuple(self._dispatch(reads, state))
        return hit


def pseudo_configurations(machine) -> Iterator[PseudoConfiguration]:
    """Every (reads, state) pair the machine could be started from."""
    from itertools import product

    for reads in product(SYMBOLS, repeat=machine.p):
        for state in machine.states:
            yield PseudoConfiguration(reads, state)


def initial_configuration(machine, start: Union[PseudoConfiguration, None] = None) -> RunConfiguration:
    """All pointers on the star cell, slots primed from the start
    pseudo-configuration (facing in).  The slots need not be faithful.
    Defaults to the machine's own initial pseudo-configuration."""
    if start is None:
        start = PseudoConfiguration(machine.initial_slots, machine.initial_state)
    if len(start.reads) != machine.p:
        raise MachineError("start reads arity != p")
    return RunConfiguration(
        positions=(0,) * machine.p,
        slots=tuple(s + "i" for s in start.reads),
        state=start.state,
    )


def _apply_step(word: InputWord, cfg: RunConfiguration, step: Step) -> RunConfiguration:
    size = len(word.cells)
    positions = list(cfg.positions)
    slots = list(cfg.slots)
    for j, mv in enumerate(step.moves):
        if mv == "0":
            continue
        if mv == "+":
            positions[j] = (positions[j] + 1) % size
            slots[j] = word.cells[positions[j]] + "i"
        else:
            positions[j] = (positions[j] - 1) % size
            slots[j] = word.cells[positions[j]] + "o"
    return RunConfiguration(tuple(positions), tuple(slots), step.state)


def pm_step(machine, word: InputWord, cfg: RunConfiguration):
    """One dispatch.  Returns a tuple whose entries are successor
    configurations or the strings ACCEPT / REJECT."""
    reads = tuple(s[0] for s in cfg.slots)
    out = []
    for act in machine.actions_for(reads, cfg.state):
        if act == ACCEPT or act == REJECT:
            out.append(act)
        else:
            out.append(_apply_step(word, cfg, act))
    return tuple(out)


def pm_run(machine, word: InputWord, fuel: int = DEFAULT_FUEL, start=None) -> str:
    """Universal-acceptance verdict: 'reject' if any branch rejects,
    else 'cycle' if any branch runs forever, else 'accept'.

    start picks the initial pseudo-configuration; None means the
    machine's own."""
    GRAY, BLACK = 0, 1
    start = initial_configuration(machine, start)
    color: dict[RunConfiguration, int] = {start: GRAY}
    cycling = False
    visited = 1

    def expand(cfg):
        succ = []
        for item in pm_step(machine, word, cfg):
            if item == REJECT:
                return None
            if item != ACCEPT:
                succ.append(item)
        return succ

    first = expand(start)
    if first is None:
        return REJECT
    stack = [(start, iter(first))]
    while stack:
        cfg, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            color[cfg] = BLACK
            stack.pop()
            continue
        seen = color.get(nxt)
        if seen is None:
            visited += 1
            if visited > fuel:
                raise FuelExhausted(f"more than {fuel} configurations")
            succ = expand(nxt)
            if succ is None:
                return REJECT
            color[nxt] = GRAY
            stack.append((nxt, iter(succ)))
        elif seen == GRAY:
            cycling = True
    return "cycle" if cycling else ACCEPT


def reachable_configurations(machine, word: InputWord, fuel: int = DEFAULT_FUEL, start=None):
    """Every configuration a run can touch, in discovery order."""
    start = initial_configuration(machine, start)
    seen = {start}
    queue = [start]
    out = [start]
    while queue:
        cfg = queue.pop()
        for item in pm_step(machine, word, cfg):
            if item in (ACCEPT, REJECT):
                continue
            if item not in seen:
                if len(seen) >= fuel:
                    raise FuelExhausted(f"more than {fuel} configurations")
                seen.add(item)
                out.append(item)
                queue.append(item)
    return out


# --- two-way multi-head automata ---

A_MOVES = (-1, 0, 1)


class ATarget(NamedTuple):
    moves: tuple[int, ...]
    state: str


class ARule(NamedTuple):
    reads: tuple[Union[str, None], ...]
    state: str
    targets: tuple[ATarget, ...]


class AutomatonConfiguration(NamedTuple):
    positions: tuple[int, ...]
    state: str


class HeadAutomaton:
    """k heads on > w <.  Missing transitions halt the branch; reaching
    an accepting state accepts the whole run.  Patterns may hold None
    wildcards, but a wildcard head must stand still so the endmarker
    guards cannot be violated blind."""

    def __init__(self, k, states, rules, initial, accepting):
        self.k = int(k)
        self.states = tuple(states)
        self.rules = tuple(
            ARule(tuple(r[0]), r[1], tuple(ATarget(tuple(t[0]), t[1]) for t in r[2]))
            for r in rules
        )
        self.initial = initial
        self.accepting = frozenset(accepting)
        self._by_state: dict[str, list[ARule]] = {}
        self._validate()

    def _validate(self) -> None:
        known = set(self.states)
        if len(known) != len(self.states):
            raise MachineError("duplicate state names")
        if self.initial not in known:
            raise MachineError("unknown initial state")
        if not self.accepting <= known:
            raise MachineError("accepting states not declared")
        for rule in self.rules:
            if rule.state not in known:
                raise MachineError(f"rule for unknown state {rule.state!r}")
            if len(rule.reads) != self.k:
                raise MachineError("pattern arity != k")
            for sym in rule.reads:
                if sym is not None and sym not in ("0", "1", ">", "<"):
                    raise MachineError(f"bad pattern symbol {sym!r}")
            for target in rule.targets:
                if len(target.moves) != self.k:
                    raise MachineError("move vector arity != k")
                if target.state not in known:
                    raise MachineError(f"step into unknown state {target.state!r}")
                for sym, mv in zip(rule.reads, target.moves):
                    if mv not in A_MOVES:
                        raise MachineError(f"bad move {mv!r}")
                    if sym == ">" and mv == -1:
                        raise MachineError("cannot move left off >")
                    if sym == "<" and mv == 1:
                        raise MachineError("cannot move right off <")
                    if sym is None and mv != 0:
                        raise MachineError("wildcard heads must stand still")
            self._by_state.setdefault(rule.state, []).append(rule)

    def targets_for(self, syms, state) -> tuple[ATarget, ...]:
        out = []
        for rule in self._by_state.get(state, ()):
            if _pattern_matches(rule.reads, syms):
                out.extend(rule.targets)
        return tuple(out)

    def is_deterministic(self) -> bool:
        for state, rules in self._by_state.items():
            for i, a in enumerate(rules):
                if len(a.targets) > 1:
                    return False
                for b in rules[i + 1 :]:
                    if _patterns_overlap(a.reads, b.reads):
                        return False
        return True


def fa_step(auto: HeadAutomaton, word: InputWord, cfg: AutomatonConfiguration):
    syms = tuple(word.marked(p) for p in cfg.positions)
    out = []
    for target in auto.targets_for(syms, cfg.state):
        positions = tuple(p + m for p, m in zip(cfg.positions, target.moves))
        out.append(AutomatonConfiguration(positions, target.state))
    return tuple(out)


def _fa_dfs(auto, word, stop_at_accepting, fuel):
    """Shared walk.  Returns (accept_seen, config_on_a_cycle_or_None)."""
    GRAY, BLACK = 0, 1
    start = AutomatonConfiguration((0,) * auto.k, auto.initial)
    if stop_at_accepting and start.state in auto.accepting:
        return True, None
    color = {start: GRAY}
    stack = [(start, iter(fa_step(auto, word, start)))]
    looper = None
    visited = 1
    while stack:
        cfg, it = stack[-1]
        nxt = next(it, None)
        if nxt is None:
            color[cfg] = BLACK
            stack.pop()
            continue
        if stop_at_accepting and nxt.state in auto.accepting:
            return True, looper
        seen = color.get(nxt)
        if seen is None:
            visited += 1
            if visited > fuel:
                raise FuelExhausted(f"more than {fuel} configurations")
            color[nxt] = GRAY
            stack.append((nxt, iter(fa_step(auto, word, nxt))))
        elif seen == GRAY and looper is None:
            looper = nxt
    return False, looper


def fa_run(auto: HeadAutomaton, word: InputWord, fuel: int = DEFAULT_FUEL) -> str:
    """Existential verdict: 'accept' if some branch reaches an accepting
    state, else 'cycle' if some branch runs forever, else 'halt'."""
    accepted, looper = _fa_dfs(auto, word, stop_at_accepting=True, fuel=fuel)
    if accepted:
        return "accept"
    return "cycle" if looper is not None else "halt"


def fa_halts_on(auto: HeadAutomaton, word: InputWord, fuel: int = DEFAULT_FUEL) -> bool:
    """True when no branch on this word can run forever, accepting
    states included (reaching one is not treated as a stop)."""
    _, looper = _fa_dfs(auto, word, stop_at_accepting=False, fuel=fuel)
    return looper is None


def fa_always_halts(auto: HeadAutomaton, maxlen: int, fuel: int = DEFAULT_FUEL):
    """Check halting on every word of length <= maxlen.

    Returns (True, None) or (False, (word, config)) where config sits on
    a reachable cycle for that word."""
    for word in words_up_to(maxlen):
        _, looper = _fa_dfs(auto, word, stop_at_accepting=False, fuel=fuel)
        if looper is not None:
            return False, (word, looper)
    return True, None
