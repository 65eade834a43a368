"""Load and save machines, automata and related artifacts as JSON.

One file, one object.  Machine files look like

    {"type": "dpm", "pointers": 1, "states": [...],
     "initial": {"reads": ["*"], "state": "q0"},
     "transitions": [{"reads": [null], "state": "q0",
                      "actions": [{"moves": [{"pointer": 1, "dir": "-"}],
                                   "next": "q1"}]}]}

where an action is either a move object or the literal strings
"accept" / "reject", and a move list only names the pointers that
actually move.  Automaton files keep one target per entry:

    {"heads": 1, "states": [...], "initial": "s0", "accepting": ["s1"],
     "transitions": [{"state": "s0", "reads": [">"], "to": "s0",
                      "moves": [1]}]}

Serialization is canonical: sorted keys, two-space indent, newline at
the end, so identical objects give identical bytes.
"""

from __future__ import annotations

import json
from typing import Union

from .machines import (
    ACCEPT,
    REJECT,
    ARule,
    HeadAutomaton,
    MachineError,
    PointerMachine,
    Rule,
    Step,
)


def _moves_to_json(moves: tuple[str, ...]) -> list[dict]:
    return [
        {"pointer": j + 1, "dir": mv}
        for j, mv in enumerate(moves)
        if mv != "0"
    ]


def _moves_from_json(entries, p: int) -> tuple[str, ...]:
    moves = ["0"] * p
    for entry in entries:
        j = entry["pointer"]
        if not 1 <= j <= p:
            raise MachineError(f"move names pointer {j} of {p}")
        moves[j - 1] = entry["dir"]
    return tuple(moves)


def machine_to_dict(machine: PointerMachine) -> dict:
    transitions = []
    for rule in machine.rules:
        actions: list = []
        for act in rule.actions:
            if act in (ACCEPT, REJECT):
                actions.append(act)
            else:
                actions.append({"moves": _moves_to_json(act.moves), "next": act.state})
        transitions.append(
            {"reads": list(rule.reads), "state": rule.state, "actions": actions}
        )
    return {
        "type": "dpm" if machine.is_deterministic() else "ndpm",
        "pointers": machine.p,
        "states": list(machine.states),
        "initial": {"reads": list(machine.initial_slots), "state": machine.initial_state},
        "transitions": transitions,
    }


def machine_from_dict(data: dict) -> PointerMachine:
    try:
        p = data["pointers"]
        rules = []
        for raw in data["transitions"]:
            actions: list = []
            for act in raw["actions"]:
                if act in (ACCEPT, REJECT):
                    actions.append(act)
                else:
                    actions.append(Step(_moves_from_json(act["moves"], p), act["next"]))
            rules.append(Rule(tuple(raw["reads"]), raw["state"], tuple(actions)))
        machine = PointerMachine(
            p=p,
            states=data["states"],
            rules=rules,
            initial_state=data["initial"]["state"],
            initial_slots=data["initial"]["reads"],
        )
    except (KeyError, TypeError) as exc:
        raise MachineError(f"malformed machine file: {exc}") from exc
    declared = data.get("type")
    if declared not in ("dpm", "ndpm"):
        raise MachineError(f"machine type must be dpm or ndpm, not {declared!r}")
    if declared == "dpm" and not machine.is_deterministic():
        raise MachineError("file says dpm but the table is nondeterministic")
    return machine


def automaton_to_dict(auto: HeadAutomaton) -> dict:
    transitions = []
    for rule in auto.rules:
        for target in rule.targets:
            transitions.append(
                {
                    "state": rule.state,
                    "reads": list(rule.reads),
                    "to": target.state,
                    "moves": list(target.moves),
                }
            )
    return {
        "heads": auto.k,
        "states": list(auto.states),
        "initial": auto.initial,
        "accepting": sorted(auto.accepting),
        "transitions": transitions,
    }


def automaton_from_dict(data: dict) -> HeadAutomaton:
    try:
        grouped: dict[tuple, list] = {}
        order: list[tuple] = []
        for raw in data["transitions"]:
            key = (tuple(raw["reads"]), raw["state"])
            if key not in grouped:
                grouped[key] = []
                order.append(key)
            grouped[key].append((tuple(raw["moves"]), raw["to"]))
        rules = [ARule(reads, state, tuple(grouped[(reads, state)])) for reads, state in order]
        return HeadAutomaton(
            k=data["heads"],
            states=data["states"],
            rules=rules,
            initial=data["initial"],
            accepting=data["accepting"],
        )
    except (KeyError, TypeError) as exc:
        raise MachineError(f"malformed automaton file: {exc}") from exc


def to_dict(obj: Union[PointerMachine, HeadAutomaton]) -> dict:
    if isinstance(obj, HeadAutomaton):
        return automaton_to_dict(obj)
    return machine_to_dict(obj)


def from_dict(data: dict) -> Union[PointerMachine, HeadAutomaton]:
    if "heads" in data:
        return automaton_from_dict(data)
    if "pointers" in data:
        return machine_from_dict(data)
    raise MachineError("file is neither a machine nor an automaton")


def dumps(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def load_path(path) -> Union[PointerMachine, HeadAutomaton]:
    with open(path, encoding="utf-8") as handle:
        return from_dict(json.load(handle))


def save_path(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps(to_dict(obj)))
