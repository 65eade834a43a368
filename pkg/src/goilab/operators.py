"""Operator observations over the integer adjacency.

An integer n becomes a partial pairing on (face value, position) points:
each cell of the circular tape of n contributes an In point and an Out
point, Out at position i meeting In at position i+1.  Walking the pairing
is how an observation moves; everything a machine does with its pointers
is re-expressed as finitely many atoms acting on face values, positions,
claimed slot contents and an extended control state.

Two encoders are provided.  `encode_figures` is the literal transition
catalog (bf/ff/fb/bb plus rec, with a reject tail); its atoms are useful
for norm accounting and orthogonality checks but the strict
walk-then-act alternation starves parts of it.  `encode_reference`
produces the observation actually used for nilpotency testing: each
machine step costs three walk rounds (arm, activate, record) and a
rejecting run rewinds every pointer and restarts, so rejection shows up
as a cycle and acceptance as a dead end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import NamedTuple, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .machines import (
    ACCEPT,
    REJECT,
    FACE_VALUES,
    SYMBOLS,
    InputWord,
    MachineError,
    PointerMachine,
    PseudoConfiguration,
    Step,
)

ALL_FV = frozenset(FACE_VALUES)
IN_FACES = frozenset({"0i", "1i", "*i"})
OUT_FACES = frozenset({"0o", "1o", "*o"})
HOME = "*i"


class NotSingleMove(MachineError):
    """Raised when an encoder is given a machine that moves zero or
    several pointers in one action.  Normalize first."""


# --- extended control states ---
#
# Plain tuples so they serialize as JSON arrays.  "machine" carries a
# machine state; "mov" is the figures-catalog in-flight marker; the
# reference encoder splits a step into "mova" (armed) and "movr"
# (recording) instead, and walks pointers home through
# "movback"/"walking"/"back".


def machine_state(q: str) -> tuple:
    return ("machine", q)


def mov_state(j: int, q: str, q2: str) -> tuple:
    return ("mov", j, q, q2)


def back_state(i: int) -> tuple:
    return ("back", i)


def movback_state(i: int) -> tuple:
    return ("movback", i)


def mova_state(j: int, direction: str, q2: str) -> tuple:
    return ("mova", j, direction, q2)


def movr_state(j: int, direction: str, q2: str) -> tuple:
    return ("movr", j, direction, q2)


def walking_state(i: int) -> tuple:
    return ("walking", i)


def _state_key(state: tuple) -> tuple:
    return tuple(str(part) for part in state)


# --- actions on the face-value factor ---


class GuardSet(NamedTuple):
    values: frozenset


class MapInToOut(NamedTuple):
    pass


class MapOutToIn(NamedTuple):
    pass


class MatchWrite(NamedTuple):
    pairs: tuple  # ((sources frozenset, target str), ...)


PiAction = Union[GuardSet, MapInToOut, MapOutToIn, MatchWrite]


def pi_apply(action: PiAction, fv: str) -> Optional[str]:
    if isinstance(action, GuardSet):
        return fv if fv in action.values else None
    if isinstance(action, MapInToOut):
        return fv[0] + "o" if fv in IN_FACES else None
    if isinstance(action, MapOutToIn):
        return fv[0] + "i" if fv in OUT_FACES else None
    for sources, target in action.pairs:
        if fv in sources:
            return target
    return None


def _pi_sources(action: PiAction) -> frozenset:
    if isinstance(action, GuardSet):
        return action.values
    if isinstance(action, MapInToOut):
        return IN_FACES
    if isinstance(action, MapOutToIn):
        return OUT_FACES
    return frozenset().union(*(src for src, _ in action.pairs))


def _pi_dests(action: PiAction) -> frozenset:
    if isinstance(action, GuardSet):
        return action.values
    if isinstance(action, MapInToOut):
        return OUT_FACES
    if isinstance(action, MapOutToIn):
        return IN_FACES
    return frozenset(tgt for _, tgt in action.pairs)


# --- actions on one slot factor ---


class Ignore(NamedTuple):
    pass


class SlotGuard(NamedTuple):
    values: frozenset


class SlotWrite(NamedTuple):
    sources: frozenset
    target: str


SlotAction = Union[Ignore, SlotGuard, SlotWrite]


def slot_apply(action: SlotAction, fv: str) -> Optional[str]:
    if isinstance(action, Ignore):
        return fv
    if isinstance(action, SlotGuard):
        return fv if fv in action.values else None
    return action.target if fv in action.sources else None


def _slot_sources(action: SlotAction) -> frozenset:
    if isinstance(action, Ignore):
        return ALL_FV
    if isinstance(action, SlotGuard):
        return action.values
    return action.sources


def _slot_dests(action: SlotAction) -> frozenset:
    if isinstance(action, Ignore):
        return ALL_FV
    if isinstance(action, SlotGuard):
        return action.values
    return frozenset({action.target})


# --- atoms ---


@dataclass(frozen=True)
class Atom:
    """One summand of an observation: guards and rewrites on the face
    value, the p slots and the extended state, with an optional swap of
    the active position and position j.  Functional by construction."""

    coeff: Fraction
    pi: PiAction
    slots: tuple
    swap: Optional[int]
    state_guard: frozenset
    state_target: tuple

    def __post_init__(self):
        if self.coeff < 0:
            raise ValueError("coefficients are nonnegative")
        if isinstance(self.pi, MatchWrite):
            seen = set()
            for sources, _ in self.pi.pairs:
                if not sources or sources & seen:
                    raise ValueError("match sources must be disjoint and nonempty")
                seen |= sources
        if self.swap is not None and not 1 <= self.swap <= len(self.slots):
            raise ValueError("swap names a pointer index")
        if not self.state_guard:
            raise ValueError("empty state guard")


def atom_apply(atom: Atom, pi: str, positions: tuple, slots: tuple, xstate: tuple, sigma=None):
    """Image of a basis point under the atom, or None.  Positions carry
    the active point first, then one entry per pointer."""
    if xstate not in atom.state_guard:
        return None
    pi2 = pi_apply(atom.pi, pi)
    if pi2 is None:
        return None
    slots2 = []
    for action, fv in zip(atom.slots, slots):
        fv2 = slot_apply(action, fv)
        if fv2 is None:
            return None
        slots2.append(fv2)
    positions2 = list(positions)
    sigma2 = sigma
    if atom.swap is not None:
        j = atom.swap
        positions2[0], positions2[j] = positions2[j], positions2[0]
        if sigma is not None:
            tau = list(range(len(positions)))
            tau[0], tau[j] = tau[j], tau[0]
            sigma2 = tuple(tau[s] for s in sigma)
    out = (pi2, tuple(positions2), tuple(slots2), atom.state_target)
    return out if sigma is None else out + (sigma2,)


def _pi_to_dict(action: PiAction) -> dict:
    if isinstance(action, GuardSet):
        return {"kind": "guard", "values": sorted(action.values)}
    if isinstance(action, MapInToOut):
        return {"kind": "in_to_out"}
    if isinstance(action, MapOutToIn):
        return {"kind": "out_to_in"}
    pairs = sorted(
        ({"sources": sorted(src), "target": tgt} for src, tgt in action.pairs),
        key=lambda d: (d["target"], d["sources"]),
    )
    return {"kind": "match", "pairs": pairs}


def _pi_from_dict(d: dict) -> PiAction:
    kind = d["kind"]
    if kind == "guard":
        return GuardSet(frozenset(d["values"]))
    if kind == "in_to_out":
        return MapInToOut()
    if kind == "out_to_in":
        return MapOutToIn()
    if kind == "match":
        return MatchWrite(tuple((frozenset(p["sources"]), p["target"]) for p in d["pairs"]))
    raise MachineError(f"unknown face action {kind!r}")


def _slot_to_dict(action: SlotAction) -> dict:
    if isinstance(action, Ignore):
        return {"kind": "ignore"}
    if isinstance(action, SlotGuard):
        return {"kind": "guard", "values": sorted(action.values)}
    return {"kind": "write", "sources": sorted(action.sources), "target": action.target}


def _slot_from_dict(d: dict) -> SlotAction:
    kind = d["kind"]
    if kind == "ignore":
        return Ignore()
    if kind == "guard":
        return SlotGuard(frozenset(d["values"]))
    if kind == "write":
        return SlotWrite(frozenset(d["sources"]), d["target"])
    raise MachineError(f"unknown slot action {kind!r}")


def atom_to_dict(atom: Atom) -> dict:
    return {
        "coeff": str(atom.coeff),
        "pi": _pi_to_dict(atom.pi),
        "slots": [_slot_to_dict(s) for s in atom.slots],
        "swap": atom.swap,
        "state_guard": sorted((list(s) for s in atom.state_guard), key=lambda x: [str(p) for p in x]),
        "state_target": list(atom.state_target),
    }


def atom_from_dict(d: dict) -> Atom:
    return Atom(
        coeff=Fraction(d["coeff"]),
        pi=_pi_from_dict(d["pi"]),
        slots=tuple(_slot_from_dict(s) for s in d["slots"]),
        swap=d["swap"],
        state_guard=frozenset(tuple(s) for s in d["state_guard"]),
        state_target=tuple(d["state_target"]),
    )


def _atom_key(atom: Atom):
    d = atom_to_dict(atom)
    return (
        json.dumps(d["state_guard"]),
        json.dumps(d["slots"]),
        json.dumps(d["pi"], sort_keys=True),
        json.dumps(d["swap"]),
        json.dumps(d["state_target"]),
        d["coeff"],
    )


@dataclass(frozen=True)
class Observation:
    """A formal sum of atoms over p slots.  States is the extended
    control alphabet the atoms live over; provenance is free-form notes
    that never participate in equality."""

    arity: int
    states: tuple
    atoms: tuple
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(sorted(set(self.states), key=_state_key)))
        object.__setattr__(self, "atoms", tuple(sorted(set(self.atoms), key=_atom_key)))
        for atom in self.atoms:
            if len(atom.slots) != self.arity:
                raise ValueError("atom arity does not match the observation")

    def is_positive(self) -> bool:
        return all(a.coeff >= 0 for a in self.atoms)

    def is_boolean(self) -> bool:
        return all(a.coeff == 1 for a in self.atoms)


def obs_to_dict(obs: Observation) -> dict:
    return {
        "arity": obs.arity,
        "states": [list(s) for s in obs.states],
        "atoms": [atom_to_dict(a) for a in obs.atoms],
    }


def obs_from_dict(d: dict) -> Observation:
    try:
        return Observation(
            arity=d["arity"],
            states=tuple(tuple(s) for s in d["states"]),
            atoms=tuple(atom_from_dict(a) for a in d["atoms"]),
        )
    except (KeyError, TypeError) as exc:
        raise MachineError(f"malformed observation file: {exc}") from exc


# --- the integer representation ---


class IntegerRepresentation(NamedTuple):
    """The pairing an integer induces on (face value, position) points.
    Out at i meets In at i+1 around the circular tape; a point whose
    claimed digit disagrees with the tape has no partner."""

    word: InputWord
    adjacency: dict


def int_rep(n: int) -> IntegerRepresentation:
    word = InputWord.from_int(n)
    cells = word.cells
    size = len(cells)
    adjacency = {}
    for pos, sym in enumerate(cells):
        nxt = (pos + 1) % size
        prv = (pos - 1) % size
        adjacency[(sym + "o", pos)] = (cells[nxt] + "i", nxt)
        adjacency[(sym + "i", pos)] = (cells[prv] + "o", prv)
    return IntegerRepresentation(word, adjacency)


def apply_int(rep: IntegerRepresentation, fv: str, pos: int):
    """One step along the pairing, None when the claim is unfaithful."""
    return rep.adjacency.get((fv, pos))


# --- transition catalog ---


def _symbol_guard(symbol: str) -> SlotGuard:
    return SlotGuard(frozenset({symbol + "i", symbol + "o"}))


def _catalog_slots(c: PseudoConfiguration, j: int, jaction: SlotAction) -> tuple:
    slots = [_symbol_guard(sym) for sym in c.reads]
    slots[j - 1] = jaction
    return tuple(slots)


def make_bf(c: PseudoConfiguration, j: int, q2: str) -> Atom:
    return Atom(
        coeff=Fraction(1),
        pi=GuardSet(OUT_FACES),
        slots=_catalog_slots(c, j, SlotGuard(frozenset({c.reads[j - 1] + "o"}))),
        swap=j,
        state_guard=frozenset({machine_state(c.state)}),
        state_target=mov_state(j, c.state, q2),
    )


def make_ff(c: PseudoConfiguration, j: int, q2: str) -> Atom:
    return Atom(
        coeff=Fraction(1),
        pi=MapInToOut(),
        slots=_catalog_slots(c, j, SlotGuard(frozenset({c.reads[j - 1] + "i"}))),
        swap=j,
        state_guard=frozenset({machine_state(c.state)}),
        state_target=mov_state(j, c.state, q2),
    )


def make_fb(c: PseudoConfiguration, j: int, q2: str) -> Atom:
    return Atom(
        coeff=Fraction(1),
        pi=GuardSet(IN_FACES),
        slots=_catalog_slots(c, j, SlotGuard(frozenset({c.reads[j - 1] + "i"}))),
        swap=j,
        state_guard=frozenset({machine_state(c.state)}),
        state_target=mov_state(j, c.state, q2),
    )


def make_bb(c: PseudoConfiguration, j: int, q2: str) -> Atom:
    return Atom(
        coeff=Fraction(1),
        pi=MapOutToIn(),
        slots=_catalog_slots(c, j, SlotGuard(frozenset({c.reads[j - 1] + "o"}))),
        swap=j,
        state_guard=frozenset({machine_state(c.state)}),
        state_target=mov_state(j, c.state, q2),
    )


def make_rec(j: int, q: str, q2: str, direction: str, arity: int | None = None) -> list:
    """Three atoms recording the freshly read symbol into slot j and
    handing control back to the machine state."""
    p = arity if arity is not None else j
    face = "i" if direction == "forward" else "o"
    atoms = []
    for sym in SYMBOLS:
        slots = [Ignore()] * p
        slots[j - 1] = SlotWrite(ALL_FV, sym + face)
        atoms.append(
            Atom(
                coeff=Fraction(1),
                pi=GuardSet(frozenset({sym + face})),
                slots=tuple(slots),
                swap=j,
                state_guard=frozenset({mov_state(j, q, q2)}),
                state_target=machine_state(q2),
            )
        )
    return atoms


def make_rm(i: int, arity: int | None = None) -> Atom:
    p = arity if arity is not None else i
    return Atom(
        coeff=Fraction(1),
        pi=GuardSet(ALL_FV),
        slots=tuple([Ignore()] * p),
        swap=i,
        state_guard=frozenset({back_state(i)}),
        state_target=movback_state(i),
    )


def _rewind_write(i, p, pi_value, slot_target, source, target) -> Atom:
    slots = [Ignore()] * p
    slots[i - 1] = SlotWrite(ALL_FV, slot_target)
    return Atom(
        coeff=Fraction(1),
        pi=GuardSet(frozenset({pi_value})),
        slots=tuple(slots),
        swap=i,
        state_guard=frozenset({source}),
        state_target=target,
    )


def make_rr0(i: int, arity: int | None = None) -> Atom:
    p = arity if arity is not None else i
    return _rewind_write(i, p, "0o", "0o", movback_state(i), back_state(i))


def make_rr1(i: int, arity: int | None = None) -> Atom:
    p = arity if arity is not None else i
    return _rewind_write(i, p, "1o", "1o", movback_state(i), back_state(i))


def make_rc(i: int, s: PseudoConfiguration) -> Atom:
    p = len(s.reads)
    target = back_state(i + 1) if i < p else machine_state(s.state)
    return _rewind_write(i, p, "*o", s.reads[i - 1] + "i", movback_state(i), target)


# --- encoders ---


def _single_move(action: Step) -> tuple:
    """(pointer index, '+'/'-') of the unique move, or NotSingleMove."""
    moving = [(j + 1, d) for j, d in enumerate(action.moves) if d != "0"]
    if len(moving) != 1:
        raise NotSingleMove("encoders need exactly one pointer moving per action")
    return moving[0]


def _concrete_transitions(machine: PointerMachine):
    """Expand wildcard rules: (concrete reads, state, action) triples."""
    for rule in machine.rules:
        choices = [SYMBOLS if r is None else (r,) for r in rule.reads]
        for reads in product(*choices):
            for action in rule.actions:
                yield reads, rule.state, action


def _start_config(machine: PointerMachine, s) -> PseudoConfiguration:
    if s is None:
        return PseudoConfiguration(machine.initial_slots, machine.initial_state)
    if len(s.reads) != machine.p:
        raise MachineError("start configuration arity mismatch")
    return s


def _rewind_atoms(p: int, s: PseudoConfiguration) -> list:
    atoms = []
    for i in range(1, p + 1):
        atoms += [make_rm(i, p), make_rr0(i, p), make_rr1(i, p), make_rc(i, s)]
    return atoms


def encode_figures(machine: PointerMachine, s: PseudoConfiguration | None = None) -> Observation:
    """Literal transition catalog.  Expects a single-move machine;
    acyclicity is the caller's business (run check_acyclic first if the
    machine's history is unknown)."""
    s = _start_config(machine, s)
    p = machine.p
    atoms = []
    rejected = False
    rec_done = set()
    for reads, state, action in _concrete_transitions(machine):
        c = PseudoConfiguration(reads, state)
        if action == ACCEPT:
            continue
        if action == REJECT:
            rejected = True
            atoms.append(
                Atom(
                    coeff=Fraction(1),
                    pi=GuardSet(ALL_FV),
                    slots=tuple(_symbol_guard(sym) for sym in reads),
                    swap=None,
                    state_guard=frozenset({machine_state(state)}),
                    state_target=back_state(1),
                )
            )
            continue
        j, direction = _single_move(action)
        if direction == "+":
            atoms += [make_bf(c, j, action.state), make_ff(c, j, action.state)]
        else:
            atoms += [make_fb(c, j, action.state), make_bb(c, j, action.state)]
        key = (j, state, action.state, direction)
        if key not in rec_done:
            rec_done.add(key)
            word = "forward" if direction == "+" else "backward"
            atoms += make_rec(j, state, action.state, word, arity=p)
    if rejected:
        atoms += _rewind_atoms(p, s)
    states = {machine_state(q) for q in machine.states}
    for a in atoms:
        states |= a.state_guard | {a.state_target}
    return Observation(
        arity=p,
        states=tuple(states),
        atoms=tuple(atoms),
        provenance={"encoder": "figures", "machine_states": len(machine.states)},
    )


def encode_reference(machine: PointerMachine, s: PseudoConfiguration | None = None) -> Observation:
    """Observation whose nilpotency matches the machine's run from s.

    Every round is one walk step followed by one atom.  A machine step
    takes three rounds: arm the move while the point wastes at the far
    side of the tape, activate by planting the claimed slot value at the
    pointer's position, then record what the walk found and swap the
    pointer home.  Reject sends control through a rewind of every
    pointer (movback, then walking the tape down to the star) and
    restarts at s, so a rejecting run is a cycle.  Accepting
    configurations emit nothing and the trajectory dies out."""
    s = _start_config(machine, s)
    p = machine.p
    atoms = []
    seen = set()
    rejected = False

    def emit(key, atom):
        if key not in seen:
            seen.add(key)
            atoms.append(atom)

    for reads, state, action in _concrete_transitions(machine):
        if action == ACCEPT:
            continue
        if action == REJECT:
            rejected = True
            emit(
                ("J", reads, state),
                Atom(
                    coeff=Fraction(1),
                    pi=GuardSet(OUT_FACES),
                    slots=tuple(_symbol_guard(sym) for sym in reads),
                    swap=None,
                    state_guard=frozenset({machine_state(state)}),
                    state_target=movback_state(1),
                ),
            )
            continue
        j, direction = _single_move(action)
        q2 = action.state
        cj = reads[j - 1]
        emit(
            ("U", reads, state, j, direction, q2),
            Atom(
                coeff=Fraction(1),
                pi=GuardSet(OUT_FACES),
                slots=tuple(_symbol_guard(sym) for sym in reads),
                swap=None,
                state_guard=frozenset({machine_state(state)}),
                state_target=mova_state(j, direction, q2),
            ),
        )
        face = "o" if direction == "+" else "i"
        slots = [Ignore()] * p
        slots[j - 1] = _symbol_guard(cj)
        emit(
            ("A", cj, j, direction, q2),
            Atom(
                coeff=Fraction(1),
                pi=MatchWrite(((frozenset({HOME}), cj + face),)),
                slots=tuple(slots),
                swap=j,
                state_guard=frozenset({mova_state(j, direction, q2)}),
                state_target=movr_state(j, direction, q2),
            ),
        )
        rface = "i" if direction == "+" else "o"
        for sym in SYMBOLS:
            wslots = [Ignore()] * p
            wslots[j - 1] = SlotWrite(ALL_FV, sym + rface)
            emit(
                ("R", j, direction, q2, sym),
                Atom(
                    coeff=Fraction(1),
                    pi=MatchWrite(((frozenset({sym + rface}), HOME),)),
                    slots=tuple(wslots),
                    swap=j,
                    state_guard=frozenset({movr_state(j, direction, q2)}),
                    state_target=machine_state(q2),
                ),
            )

    if rejected:
        for i in range(1, p + 1):
            for sym in SYMBOLS:
                slots = [Ignore()] * p
                slots[i - 1] = SlotWrite(frozenset({sym + "i", sym + "o"}), sym + "i")
                emit(
                    ("rm", i, sym),
                    Atom(
                        coeff=Fraction(1),
                        pi=MatchWrite(((frozenset({HOME}), sym + "i"),)),
                        slots=tuple(slots),
                        swap=i,
                        state_guard=frozenset({movback_state(i)}),
                        state_target=walking_state(i),
                    ),
                )
            for sym in ("0", "1"):
                slots = [Ignore()] * p
                slots[i - 1] = SlotWrite(ALL_FV, sym + "o")
                emit(
                    ("rr", i, sym),
                    Atom(
                        coeff=Fraction(1),
                        pi=MatchWrite(((frozenset({sym + "o"}), sym + "i"),)),
                        slots=tuple(slots),
                        swap=None,
                        state_guard=frozenset({walking_state(i)}),
                        state_target=walking_state(i),
                    ),
                )
            slots = [Ignore()] * p
            slots[i - 1] = SlotWrite(ALL_FV, s.reads[i - 1] + "i")
            target = back_state(i + 1) if i < p else machine_state(s.state)
            emit(
                ("rc", i),
                Atom(
                    coeff=Fraction(1),
                    pi=MatchWrite(((frozenset({"*o"}), HOME),)),
                    slots=tuple(slots),
                    swap=i,
                    state_guard=frozenset({walking_state(i)}),
                    state_target=target,
                ),
            )
            if i >= 2:
                emit(
                    ("tick", i),
                    Atom(
                        coeff=Fraction(1),
                        pi=GuardSet(OUT_FACES),
                        slots=tuple([Ignore()] * p),
                        swap=None,
                        state_guard=frozenset({back_state(i)}),
                        state_target=movback_state(i),
                    ),
                )

    states = {machine_state(q) for q in machine.states}
    for a in atoms:
        states |= a.state_guard | {a.state_target}
    return Observation(
        arity=p,
        states=tuple(states),
        atoms=tuple(atoms),
        provenance={"encoder": "reference", "start": {"reads": list(s.reads), "state": s.state}},
    )


# --- orthogonality and the 1-norm ---


def _factor_sources(atom: Atom) -> list:
    return [_pi_sources(atom.pi), *map(_slot_sources, atom.slots), atom.state_guard]


def _factor_dests(atom: Atom) -> list:
    return [_pi_dests(atom.pi), *map(_slot_dests, atom.slots), frozenset({atom.state_target})]


def maher_orthogonal(a: Atom, b: Atom) -> bool:
    """True when a·b* and b*·a both vanish for structural reasons: the
    two atoms read from disjoint sets in some tensor factor, and write
    to disjoint sets in some factor.  Position and swap factors are
    permutations and never help."""
    if len(a.slots) != len(b.slots):
        raise ValueError("atoms of different arity")
    if a == b:
        return False
    ab = any(sa.isdisjoint(sb) for sa, sb in zip(_factor_sources(a), _factor_sources(b)))
    ba = any(da.isdisjoint(db) for da, db in zip(_factor_dests(a), _factor_dests(b)))
    return ab and ba


def _is_isometric_on_column(atom: Atom) -> bool:
    """Whether the atom restricted to one slot/state column acts with
    norm exactly coeff: face action a partial isometry, i.e. single
    sources per match pair and no shared targets."""
    if not isinstance(atom.pi, MatchWrite):
        return True
    targets = [tgt for _, tgt in atom.pi.pairs]
    return all(len(src) == 1 for src, _ in atom.pi.pairs) and len(targets) == len(set(targets))


def _pi_matrix(action: PiAction) -> np.ndarray:
    idx = {fv: i for i, fv in enumerate(FACE_VALUES)}
    m = np.zeros((6, 6))
    for fv in FACE_VALUES:
        out = pi_apply(action, fv)
        if out is not None:
            m[idx[out], idx[fv]] += 1.0
    return m


def _position_permutation(swap: Optional[int], arity: int, instlen: int) -> sp.csr_matrix:
    width = instlen + 1
    size = width ** (arity + 1)
    if swap is None:
        return sp.identity(size, format="csr")
    rows = []
    for flat in range(size):
        digits = []
        x = flat
        for _ in range(arity + 1):
            digits.append(x % width)
            x //= width
        digits[0], digits[swap] = digits[swap], digits[0]
        out = 0
        for d in reversed(digits):
            out = out * width + d
        rows.append(out)
    return sp.csr_matrix((np.ones(size), (rows, np.arange(size))), shape=(size, size))


def _atom_block(atom: Atom, arity: int, instlen: int) -> sp.csr_matrix:
    """The atom's action on face value x positions, slot and state
    factors held at a single column."""
    pi = sp.csr_matrix(_pi_matrix(atom.pi))
    pos = _position_permutation(atom.swap, arity, instlen)
    return float(atom.coeff) * sp.kron(pi, pos, format="csr")


def matrix_norm(mat) -> float:
    """Largest singular value."""
    if mat.shape[0] == 0 or mat.shape[1] == 0:
        return 0.0
    mat = sp.csr_matrix(mat)
    if mat.nnz == 0:
        return 0.0
    if max(mat.shape) <= 600:
        return float(np.linalg.norm(mat.toarray(), 2))
    try:
        vals = spla.svds(mat.astype(float), k=1, return_singular_vectors=False)
        return float(vals[0])
    except Exception:
        return float(np.linalg.norm(mat.toarray(), 2))


def instantiate(atoms, arity: int, states: tuple, instlen: int) -> sp.csr_matrix:
    """Concrete matrix of a sum of atoms on the full tensor space
    (face value, positions, slots, state) at a given tape length."""
    states = tuple(states)
    sidx = {s: i for i, s in enumerate(states)}
    fidx = {fv: i for i, fv in enumerate(FACE_VALUES)}
    width = instlen + 1
    pos_space = list(product(range(width), repeat=arity + 1))
    pidx = {t: i for i, t in enumerate(pos_space)}
    slot_space = list(product(FACE_VALUES, repeat=arity))
    lidx = {t: i for i, t in enumerate(slot_space)}
    nq, npos, nslot = len(states), len(pos_space), len(slot_space)

    def flat(fv, pos, slots, state):
        return ((fidx[fv] * npos + pidx[pos]) * nslot + lidx[slots]) * nq + sidx[state]

    rows, cols, vals = [], [], []
    for atom in atoms:
        for state in states:
            if state not in atom.state_guard:
                continue
            for slots in slot_space:
                moved = tuple(slot_apply(a, fv) for a, fv in zip(atom.slots, slots))
                if any(v is None for v in moved):
                    continue
                for fv in FACE_VALUES:
                    fv2 = pi_apply(atom.pi, fv)
                    if fv2 is None:
                        continue
                    for pos in pos_space:
                        pos2 = list(pos)
                        if atom.swap is not None:
                            pos2[0], pos2[atom.swap] = pos2[atom.swap], pos2[0]
                        rows.append(flat(fv2, tuple(pos2), moved, atom.state_target))
                        cols.append(flat(fv, pos, slots, state))
                        vals.append(float(atom.coeff))
    dim = 6 * npos * nslot * nq
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


class NormResult(NamedTuple):
    value: float
    columns: tuple
    max_entries_per_column: int
    bound_only: bool


def _entry_value(atoms, arity, instlen, numeric_cap, sigma_slots):
    """Norm of one column entry.  Pairwise orthogonal groups obey the
    max rule exactly; anything else gets instantiated numerically, or
    falls back to a declared upper bound past the size cap."""
    if all(_is_isometric_on_column(a) for a in atoms):
        tier = "coeff" if len(atoms) == 1 else "max-rule"
        return max(float(a.coeff) for a in atoms), tier, False
    dim = 6 * (instlen + 1) ** (arity + 1)
    if dim <= numeric_cap:
        groups = {}
        for a in atoms:
            written = tuple(slot_apply(act, fv) for act, fv in zip(a.slots, sigma_slots))
            key = (a.state_target, written)
            block = _atom_block(a, arity, instlen)
            groups[key] = block if key not in groups else groups[key] + block
        stack = sp.vstack(list(groups.values()), format="csr")
        return matrix_norm(stack), "numeric", False
    bound = 0.0
    for a in atoms:
        inflate = 1.0
        if isinstance(a.pi, MatchWrite):
            inflate = max(len(src) for src, _ in a.pi.pairs) ** 0.5
        bound += float(a.coeff) * inflate
    return bound, "bound", True


def one_norm(obs: Observation, instlen: int = 4, numeric_cap: int = 200_000) -> NormResult:
    """Column-wise operator 1-norm of the observation.

    A column is a choice of slot face values and extended state.  The
    atoms applicable to a column are grouped greedily into maximal
    pairwise orthogonal entries; the column's value is the sum of entry
    norms and the observation's norm the maximum over columns."""
    if not obs.atoms:
        return NormResult(0.0, (), 0, False)
    columns = []
    best = 0.0
    max_entries = 0
    any_bound = False
    for sigma in product(FACE_VALUES, repeat=obs.arity):
        for state in obs.states:
            applicable = [
                a
                for a in obs.atoms
                if state in a.state_guard
                and all(slot_apply(act, fv) is not None for act, fv in zip(a.slots, sigma))
            ]
            if not applicable:
                continue
            entries = []
            for a in applicable:
                for entry in entries:
                    if all(maher_orthogonal(a, b) for b in entry):
                        entry.append(a)
                        break
                else:
                    entries.append([a])
            total = 0.0
            traced = []
            for entry in entries:
                value, tier, bounded = _entry_value(entry, obs.arity, instlen, numeric_cap, sigma)
                total += value
                any_bound = any_bound or bounded
                traced.append({"tier": tier, "value": value, "atoms": len(entry)})
            columns.append({"slots": sigma, "state": state, "value": total, "entries": traced})
            best = max(best, total)
            max_entries = max(max_entries, len(entries))
    return NormResult(best, tuple(columns), max_entries, any_bound)


def is_in_Pplus1(obs: Observation, instlen: int = 4) -> bool:
    """Positive observations of norm at most one: the class where
    matching is deterministic and the single-successor walk applies."""
    return obs.is_positive() and one_norm(obs, instlen).value <= 1 + 1e-9
