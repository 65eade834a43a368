"""Pointer machines, multi-head automata, and operator-style acceptance tests."""

from .machines import (
    ACCEPT,
    REJECT,
    FuelExhausted,
    HeadAutomaton,
    InputWord,
    MachineError,
    PointerMachine,
    digits_of,
    fa_run,
    pm_run,
    words_up_to,
)
from .nilpotency import (
    accepts,
    check_nilpotent,
    dense_nilpotent_oracle,
    validate_machine,
    verdict,
)
from .operators import (
    Observation,
    encode_figures,
    encode_reference,
    int_rep,
    is_in_Pplus1,
    one_norm,
)
from .transforms import acyclify, automaton_to_pm, clockify, normalize_single_move

__version__ = "0.1.0"

__all__ = [
    "ACCEPT",
    "REJECT",
    "FuelExhausted",
    "HeadAutomaton",
    "InputWord",
    "MachineError",
    "Observation",
    "PointerMachine",
    "accepts",
    "acyclify",
    "automaton_to_pm",
    "check_nilpotent",
    "clockify",
    "dense_nilpotent_oracle",
    "digits_of",
    "encode_figures",
    "encode_reference",
    "fa_run",
    "int_rep",
    "is_in_Pplus1",
    "normalize_single_move",
    "one_norm",
    "pm_run",
    "validate_machine",
    "verdict",
    "words_up_to",
    "__version__",
]
