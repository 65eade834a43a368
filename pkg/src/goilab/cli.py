"""Batch front end over machines, automata, observations and checkers.

Verbs: `pm run|normalize|check-acyclic|acyclify`, `fa
run|clockify|to-pm|encode-word`, `goi encode|norm1|check|validate`,
`suite`.  Every command prints one canonical JSON document, so output
is byte-stable for identical inputs; encode and check print the bare
artifact (observation, verdict) for round-tripping, everything else a
report wrapping the command echo, input digests and result.

Exit codes: 0 success, 1 property violation (fuel exhausted, a
validation disagreement in reference mode, a failed suite criterion),
2 unusable input (missing or malformed files, bad flags, oracle cap
exceeded).  Set GOILAB_LOG to error, info or debug for stderr logging.
"""

import argparse
import hashlib
import json
import logging
import os
import random
import sys

from . import __version__, files
from .corpus import load_automaton, load_machine, manifest
from .machines import (
    CapExceeded,
    FACE_VALUES,
    FuelExhausted,
    HeadAutomaton,
    InputWord,
    MachineError,
    PointerMachine,
    PseudoConfiguration,
    fa_always_halts,
    fa_run,
    pm_run,
    reachable_configurations,
    words_up_to,
)
from .nilpotency import (
    check_nilpotent,
    check_nilpotent_det,
    check_nilpotent_ndet,
    reconciliation_report,
    relabel_positions,
    successors,
    validate_machine,
    verdict,
    dense_nilpotent_oracle,
)
from .operators import (
    NotSingleMove,
    apply_int,
    encode_figures,
    encode_reference,
    instantiate,
    int_rep,
    is_in_Pplus1,
    maher_orthogonal,
    make_bb,
    make_bf,
    make_fb,
    make_ff,
    make_rc,
    make_rr0,
    make_rr1,
    matrix_norm,
    obs_from_dict,
    obs_to_dict,
    one_norm,
)
from .transforms import (
    acyclify,
    automaton_to_pm,
    check_acyclic,
    clockify,
    compilation_report,
    materialize,
    normalize_single_move,
)

TOOL_VERSION = __version__

log = logging.getLogger("goilab")


def _setup_logging():
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    level = levels.get(os.environ.get("GOILAB_LOG", "error"), logging.ERROR)
    if not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("goilab %(levelname)s: %(message)s"))
        log.addHandler(handler)
    log.setLevel(level)


def _digest(path):
    with open(path, "rb") as fh:
        return "sha256:" + hashlib.sha256(fh.read()).hexdigest()


def _emit(argv, inputs, result):
    report = {
        "command": list(argv),
        "version": TOOL_VERSION,
        "inputs": {path: _digest(path) for path in inputs},
        "result": result,
    }
    sys.stdout.write(files.dumps(report))


def _load_machine(path) -> PointerMachine:
    obj = files.load_path(path)
    if not isinstance(obj, PointerMachine):
        raise MachineError(f"{path} does not hold a pointer machine")
    log.debug("loaded machine %s", path)
    return obj


def _load_automaton(path) -> HeadAutomaton:
    obj = files.load_path(path)
    if not isinstance(obj, HeadAutomaton):
        raise MachineError(f"{path} does not hold an automaton")
    log.debug("loaded automaton %s", path)
    return obj


def _load_observation(path):
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    log.debug("loaded observation %s", path)
    return obs_from_dict(data)


def _parse_word(text) -> InputWord:
    if any(ch not in "01" for ch in text):
        raise MachineError(f"word {text!r} must be over 0/1")
    return InputWord.from_digits(text)


def _parse_range(text):
    lo, sep, hi = text.partition(":")
    try:
        a, b = int(lo), int(hi)
    except ValueError:
        raise MachineError(f"range {text!r} is not of the form lo:hi") from None
    if not sep or a < 0 or b < a:
        raise MachineError(f"range {text!r} is not of the form lo:hi")
    return a, b


def _parse_initial(text, machine) -> PseudoConfiguration:
    reads, sep, state = text.partition(":")
    if not sep or len(reads) != machine.p or any(ch not in "01*" for ch in reads):
        raise MachineError(f"initial {text!r} must be {machine.p} symbols, ':', state")
    if state not in machine.states:
        raise MachineError(f"unknown state {state!r}")
    return PseudoConfiguration(tuple(reads), state)


# --- pm ---


def cmd_pm_run(args, argv):
    machine = _load_machine(args.file)
    start = _parse_initial(args.initial, machine) if args.initial else None
    word = InputWord.from_int(args.input)
    result = pm_run(machine, word, fuel=args.fuel, start=start)
    seen = reachable_configurations(machine, word, start=start, fuel=args.fuel)
    _emit(argv, [args.file], {
        "n": args.input,
        "word": "".join(word.cells[1:]),
        "verdict": result,
        "configurations": len(seen),
    })
    return 0


def cmd_pm_normalize(args, argv):
    machine = _load_machine(args.file)
    single = normalize_single_move(machine)
    if args.out:
        files.save_path(args.out, single)
        _emit(argv, [args.file], compilation_report(machine, single, ["one move per step"]))
    else:
        sys.stdout.write(files.dumps(files.to_dict(single)))
    return 0


def cmd_pm_check_acyclic(args, argv):
    machine = _load_machine(args.file)
    ok, witness = check_acyclic(machine, maxlen=args.maxlen)
    result = {"acyclic": ok, "maxlen": args.maxlen}
    if witness is not None:
        start, word, hit = witness
        result["witness"] = {
            "start": start,
            "word": "".join(word.cells[1:]),
            "cycle_configuration": hit,
        }
    _emit(argv, [args.file], result)
    return 0 if ok else 1


def cmd_pm_acyclify(args, argv):
    machine = _load_machine(args.file)
    rebuilt = acyclify(machine)
    if args.out:
        files.save_path(args.out, rebuilt)
        _emit(argv, [args.file], compilation_report(machine, rebuilt, ["cycles turned into rejects"]))
    else:
        sys.stdout.write(files.dumps(files.to_dict(rebuilt)))
    return 0


# --- fa ---


def cmd_fa_run(args, argv):
    auto = _load_automaton(args.file)
    word = _parse_word(args.word)
    _emit(argv, [args.file], {"word": args.word, "verdict": fa_run(auto, word, fuel=args.fuel)})
    return 0


def cmd_fa_clockify(args, argv):
    auto = _load_automaton(args.file)
    clocked = clockify(auto)
    if args.out:
        files.save_path(args.out, clocked)
        _emit(argv, [args.file], compilation_report(auto, clocked, ["clock product, always halting"]))
    else:
        sys.stdout.write(files.dumps(files.to_dict(clocked)))
    return 0


def cmd_fa_to_pm(args, argv):
    # compiles the automaton as given; clockify first if it may loop
    auto = _load_automaton(args.file)
    machine = materialize(automaton_to_pm(auto), cap=args.cap)
    if args.out:
        files.save_path(args.out, machine)
        _emit(argv, [args.file], compilation_report(auto, machine, ["accepts the complement language"]))
    else:
        sys.stdout.write(files.dumps(files.to_dict(machine)))
    return 0


def cmd_fa_encode_word(args, argv):
    word = _parse_word(args.word)
    _emit(argv, [], {"word": args.word, "n": word.value(), "cells": list(word.cells)})
    return 0


# --- goi ---


_ENCODERS = {"figures": encode_figures, "reference": encode_reference}


def cmd_goi_encode(args, argv):
    machine = _load_machine(args.file)
    obs = _ENCODERS[args.mode](machine)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(files.dumps(obs_to_dict(obs)))
        _emit(argv, [args.file], {
            "mode": args.mode,
            "atoms": len(obs.atoms),
            "states": len(obs.states),
            "boolean": obs.is_boolean(),
        })
    else:
        sys.stdout.write(files.dumps(obs_to_dict(obs)))
    return 0


def cmd_goi_norm1(args, argv):
    obs = _load_observation(args.file)
    res = one_norm(obs, instlen=args.len)
    _emit(argv, [args.file], {
        "instlen": args.len,
        "value": res.value,
        "max_entries_per_column": res.max_entries_per_column,
        "bound_only": res.bound_only,
        "columns": list(res.columns),
    })
    return 0


def cmd_goi_check(args, argv):
    obs = _load_observation(args.file)
    out = verdict(obs, args.input, algo=args.algo, cap=args.cap)
    sys.stdout.write(files.dumps(out))
    return 0


def cmd_goi_validate(args, argv):
    machine = _load_machine(args.file)
    rng = _parse_range(args.range)
    table = validate_machine(machine, rng=rng, mode=args.mode)
    _emit(argv, [args.file], table)
    if args.mode == "reference" and not table["all_agree"]:
        return 1
    return 0


# --- suite ---


def _encoded_corpus(include_negative=False):
    """(name, machine, observation) for every corpus machine the
    reference encoder can take as-is; multi-action fixtures are the
    normalization exercises, not part of the encoded corpus."""
    out = []
    for entry in manifest()["machines"]:
        if entry.get("negative") and not include_negative:
            continue
        machine = load_machine(entry["name"])
        try:
            obs = encode_reference(machine)
        except NotSingleMove:
            continue
        out.append((entry["name"], machine, obs))
    return out


def _crit_soundness(opts):
    detail = {}
    passed = True
    for name, machine, _ in _encoded_corpus(opts["include_negative"]):
        table = validate_machine(machine, rng=opts["range"])
        detail[name] = f"{table['agreements']}/{table['total']}"
        passed = passed and table["all_agree"]
    return passed, detail


def _crit_norm_bound(opts):
    detail = {}
    passed = True
    for name, machine, obs in _encoded_corpus():
        if not machine.is_deterministic():
            continue
        per_len = {}
        for instlen in (4, 6, 8):
            res = one_norm(obs, instlen=instlen)
            ok = res.value <= 1 + 1e-9 and res.max_entries_per_column <= 1
            per_len[str(instlen)] = {"value": res.value, "entries": res.max_entries_per_column}
            passed = passed and ok
        detail[name] = per_len
    return passed, detail


def _crit_unique_successor(opts):
    detail = {}
    passed = True
    for name, _, obs in _encoded_corpus():
        if not is_in_Pplus1(obs):
            continue
        checked = 0
        agree = True
        for n in range(2 ** opts["digits"]):
            rep = int_rep(n)
            det = check_nilpotent_det(obs, rep)  # raises on any double successor
            ndet = check_nilpotent_ndet(obs, rep)
            agree = agree and (det.nilpotent, det.degree) == (ndet.nilpotent, ndet.degree)
            checked += 1
        detail[name] = {"inputs": checked, "checkers_agree": agree}
        passed = passed and agree
    return passed, detail


def _crit_maher_rule(opts):
    c = PseudoConfiguration(("0",), "q0")
    s = PseudoConfiguration(("*",), "q0")
    named_pairs = [
        ("bf/ff", make_bf(c, 1, "q1"), make_ff(c, 1, "q1")),
        ("fb/bb", make_fb(c, 1, "q1"), make_bb(c, 1, "q1")),
        ("rr0/rr1", make_rr0(1), make_rr1(1)),
        ("rr0/rc", make_rr0(1), make_rc(1, s)),
        ("rr1/rc", make_rr1(1), make_rc(1, s)),
    ]
    detail = {}
    passed = True
    for label, a, b in named_pairs:
        symbolic = maher_orthogonal(a, b)
        states = tuple(sorted({a.state_target, b.state_target} | set(a.state_guard) | set(b.state_guard),
                              key=lambda st: tuple(str(part) for part in st)))
        pair_sum = matrix_norm(instantiate([a, b], 1, states, 6))
        expected = max(matrix_norm(instantiate([a], 1, states, 6)),
                       matrix_norm(instantiate([b], 1, states, 6)))
        ok = symbolic and abs(pair_sum - expected) <= 1e-9
        detail[label] = {"symbolic": symbolic, "sum_norm": pair_sum, "max_norm": expected}
        passed = passed and ok
    detail["full_domain_rec"] = reconciliation_report(load_machine("dpm_even"))["full_domain_writes"]
    return passed, detail


def _crit_clock(opts):
    detail = {}
    passed = True
    for name in manifest()["automata"]:
        auto = load_automaton(name)
        clocked = clockify(auto)
        halts, _ = fa_always_halts(clocked, opts["maxlen"])
        agree = all(
            (fa_run(auto, word) == "accept") == (fa_run(clocked, word) == "accept")
            for word in words_up_to(opts["maxlen"])
        )
        detail[name] = {"halts": halts, "language_agrees": agree}
        passed = passed and halts and agree
    return passed, detail


def _crit_compile(opts):
    detail = {}
    passed = True
    for name in manifest()["automata"]:
        auto = load_automaton(name)
        # the clocked compile stays lazy: its rule table is huge by
        # construction and the executor never needs it whole
        machine = automaton_to_pm(clockify(auto))
        complement = all(
            (pm_run(machine, word) == "accept") == (fa_run(auto, word) != "accept")
            for word in words_up_to(opts["maxlen"])
        )
        det_kept = machine.is_deterministic() if auto.is_deterministic() else True
        detail[name] = {"complement_agrees": complement, "determinism_kept": det_kept}
        passed = passed and complement and det_kept
    return passed, detail


def _crit_oracle_equivalence(opts):
    detail = {}
    passed = True
    for name, _, obs in _encoded_corpus():
        functional = is_in_Pplus1(obs)
        agree = True
        for n in range(64):
            rep = int_rep(n)
            ref = check_nilpotent(obs, rep)
            dense = dense_nilpotent_oracle(obs, rep, cap=opts["cap"])
            agree = agree and (ref.nilpotent, ref.degree) == (dense.nilpotent, dense.degree)
            if functional:
                det = check_nilpotent_det(obs, rep)
                agree = agree and (det.nilpotent, det.degree) == (ref.nilpotent, ref.degree)
        detail[name] = {"inputs": 64, "agree": agree}
        passed = passed and agree
    return passed, detail


def _crit_structural(opts):
    rng = random.Random(0x60114B)
    involution_ok = True
    for _ in range(10_000):
        rep = int_rep(rng.randrange(2 ** 16))
        fv = FACE_VALUES[rng.randrange(6)]
        pos = rng.randrange(len(rep.word.cells))
        image = apply_int(rep, fv, pos)
        if image is not None and apply_int(rep, *image) != (fv, pos):
            involution_ok = False
            break
    detail = {"involution_probes": 10_000, "involution": involution_ok}
    passed = involution_ok
    for name, _, obs in _encoded_corpus():
        stable = True
        for n in range(32):
            rep = int_rep(n)
            plain = check_nilpotent(obs, rep)
            traced = check_nilpotent(obs, rep, sigma=True)
            size = len(rep.word.cells)
            rot = tuple((i + 1) % size for i in range(size))
            moved = check_nilpotent(obs, relabel_positions(rep, rot))
            stable = stable and (
                (plain.nilpotent, plain.degree)
                == (traced.nilpotent, traced.degree)
                == (moved.nilpotent, moved.degree)
            )
        detail[name] = {"sigma_and_relabel_stable": stable}
        passed = passed and stable
    return passed, detail


def _crit_negative_control(opts):
    lo = opts["range"][0]
    hi = min(opts["range"][1], lo + 15)
    detail = {}
    broken = False
    for entry in manifest()["machines"]:
        if not entry.get("negative"):
            continue
        machine = load_machine(entry["name"])
        table = validate_machine(machine, rng=(lo, hi))
        detail[entry["name"]] = f"{table['agreements']}/{table['total']}"
        broken = broken or not table["all_agree"]
    detail["note"] = "fixture must fail the soundness criterion"
    return broken, detail


_CRITERIA = (
    ("soundness", _crit_soundness),
    ("norm-bound", _crit_norm_bound),
    ("unique-successor", _crit_unique_successor),
    ("maher-rule", _crit_maher_rule),
    ("clock", _crit_clock),
    ("compile", _crit_compile),
    ("oracle-equivalence", _crit_oracle_equivalence),
    ("structural", _crit_structural),
    ("negative-control", _crit_negative_control),
)


def run_suite(filter_text=None, include_negative=False, rng=(0, 255), maxlen=8, digits=6, cap=2_000_000):
    opts = {
        "include_negative": include_negative,
        "range": rng,
        "maxlen": maxlen,
        "digits": digits,
        "cap": cap,
    }
    criteria = []
    for name, fn in _CRITERIA:
        if filter_text and filter_text not in name:
            continue
        log.info("criterion %s", name)
        passed, detail = fn(opts)
        criteria.append({"name": name, "passed": passed, "detail": detail})
    return {"criteria": criteria, "passed": all(c["passed"] for c in criteria)}


def cmd_suite(args, argv):
    result = run_suite(
        filter_text=args.filter,
        include_negative=args.include_negative,
        rng=_parse_range(args.range),
        maxlen=args.maxlen,
        digits=args.digits,
        cap=args.cap,
    )
    _emit(argv, [], result)
    return 0 if result["passed"] else 1


# --- argument plumbing ---


def _build_parser():
    parser = argparse.ArgumentParser(prog="goilab", description=__doc__.splitlines()[0])
    top = parser.add_subparsers(dest="group", required=True)

    pm = top.add_parser("pm", help="pointer machines").add_subparsers(dest="verb", required=True)
    run = pm.add_parser("run", help="execute on one integer")
    run.add_argument("file")
    run.add_argument("input", type=int)
    run.add_argument("--fuel", type=int, default=2_000_000)
    run.add_argument("--initial", help="start pseudo-configuration, SYMBOLS:STATE")
    run.set_defaults(handler=cmd_pm_run)
    norm = pm.add_parser("normalize", help="one move per step")
    norm.add_argument("file")
    norm.add_argument("--out")
    norm.set_defaults(handler=cmd_pm_normalize)
    chk = pm.add_parser("check-acyclic", help="search for run cycles")
    chk.add_argument("file")
    chk.add_argument("--maxlen", type=int, default=6)
    chk.set_defaults(handler=cmd_pm_check_acyclic)
    acy = pm.add_parser("acyclify", help="turn cycles into rejects")
    acy.add_argument("file")
    acy.add_argument("--out")
    acy.set_defaults(handler=cmd_pm_acyclify)

    fa = top.add_parser("fa", help="multi-head automata").add_subparsers(dest="verb", required=True)
    frun = fa.add_parser("run", help="run on a word")
    frun.add_argument("file")
    frun.add_argument("--word", required=True)
    frun.add_argument("--fuel", type=int, default=2_000_000)
    frun.set_defaults(handler=cmd_fa_run)
    fclk = fa.add_parser("clockify", help="compose with a halting clock")
    fclk.add_argument("file")
    fclk.add_argument("--out")
    fclk.set_defaults(handler=cmd_fa_clockify)
    fpm = fa.add_parser("to-pm", help="compile to a pointer machine for the complement")
    fpm.add_argument("file")
    fpm.add_argument("--out")
    fpm.add_argument("--cap", type=int, default=200_000)
    fpm.set_defaults(handler=cmd_fa_to_pm)
    few = fa.add_parser("encode-word", help="binary word to tape and integer")
    few.add_argument("word")
    few.set_defaults(handler=cmd_fa_encode_word)

    goi = top.add_parser("goi", help="observations and nilpotency").add_subparsers(dest="verb", required=True)
    genc = goi.add_parser("encode", help="machine to observation")
    genc.add_argument("file")
    genc.add_argument("--mode", choices=("figures", "reference"), default="reference")
    genc.add_argument("--out")
    genc.set_defaults(handler=cmd_goi_encode)
    gnorm = goi.add_parser("norm1", help="column norm with method trace")
    gnorm.add_argument("file")
    gnorm.add_argument("--len", type=int, default=4)
    gnorm.set_defaults(handler=cmd_goi_norm1)
    gchk = goi.add_parser("check", help="nilpotency verdict")
    gchk.add_argument("file")
    gchk.add_argument("--input", type=int, required=True)
    gchk.add_argument("--algo", choices=("det", "ndet", "dense"), default="ndet")
    gchk.add_argument("--cap", type=int, default=2_000_000)
    gchk.set_defaults(handler=cmd_goi_check)
    gval = goi.add_parser("validate", help="machine runs against nilpotency verdicts")
    gval.add_argument("file")
    gval.add_argument("--range", default="0:255")
    gval.add_argument("--mode", choices=("figures", "reference"), default="reference")
    gval.set_defaults(handler=cmd_goi_validate)

    suite = top.add_parser("suite", help="run the acceptance criteria")
    suite.add_argument("--filter", help="only criteria whose name contains this text")
    suite.add_argument("--include-negative", action="store_true")
    suite.add_argument("--range", default="0:255")
    suite.add_argument("--maxlen", type=int, default=8)
    suite.add_argument("--digits", type=int, default=6)
    suite.add_argument("--cap", type=int, default=2_000_000)
    suite.set_defaults(handler=cmd_suite)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args, argv)
    except FuelExhausted as exc:
        log.error("%s", exc)
        sys.stderr.write(f"property violation: {exc}\n")
        return 1
    except (MachineError, CapExceeded, OSError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        sys.stderr.write(f"input error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
