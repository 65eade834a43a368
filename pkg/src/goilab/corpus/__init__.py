"""Bundled example machines and their reference languages."""

from __future__ import annotations

import json
from importlib import resources

from .. import files
from ..machines import HeadAutomaton, PointerMachine, digits_of


def _read(name: str) -> dict:
    path = resources.files("goilab.corpus").joinpath(name + ".json")
    return json.loads(path.read_text(encoding="utf-8"))


def load_machine(name: str) -> PointerMachine:
    return files.machine_from_dict(_read(name))


def load_automaton(name: str) -> HeadAutomaton:
    return files.automaton_from_dict(_read(name))


def manifest() -> dict:
    return _read("manifest")


# What each bundled machine is supposed to accept, as a predicate on the
# input number.  The run itself is the thing under test, so these are
# written against arithmetic, not against any machine code.
ORACLES = {
    "even": lambda n: n % 2 == 0,
    "multiple-of-4": lambda n: n % 4 == 0,
    "has-a-one": lambda n: 1 in digits_of(n),
    "has-a-zero": lambda n: 0 in digits_of(n),
    "zero-or-odd": lambda n: n == 0 or n % 2 == 1,
    "no-zero-digit": lambda n: 0 not in digits_of(n),
}
