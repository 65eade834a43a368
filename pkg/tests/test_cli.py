"""Command line behaviour: exit codes, byte-stable reports, file
round-trips.  Everything runs through `python -m goilab.cli` so the
tests see exactly what a shell user sees."""

import json
import os
import subprocess
import sys

from goilab import corpus, files
from goilab.machines import InputWord, fa_run, pm_run
from goilab.operators import encode_figures, encode_reference, obs_from_dict
from goilab.transforms import check_acyclic

CORPUS = os.path.dirname(corpus.__file__)


def path_of(name):
    return os.path.join(CORPUS, name + ".json")


def run_cli(*args, env=None):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "goilab.cli", *args],
        capture_output=True,
        text=True,
        env=full_env,
    )


def test_pm_run_accept_and_reject():
    out = run_cli("pm", "run", path_of("dpm_even"), "6")
    assert out.returncode == 0, out.stderr
    report = json.loads(out.stdout)
    assert report["result"]["verdict"] == "accept"
    assert report["result"]["n"] == 6
    assert json.loads(run_cli("pm", "run", path_of("dpm_even"), "3").stdout)["result"]["verdict"] == "reject"


def test_pm_run_cycle_is_not_an_error():
    out = run_cli("pm", "run", path_of("pm_loop"), "2")
    assert out.returncode == 0
    assert json.loads(out.stdout)["result"]["verdict"] == "cycle"


def test_pm_run_missing_and_malformed_files(tmp_path):
    assert run_cli("pm", "run", str(tmp_path / "nope.json"), "6").returncode == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli("pm", "run", str(bad), "6").returncode == 2
    wrong = tmp_path / "wrong.json"
    wrong.write_text('{"type": "banana"}')
    assert run_cli("pm", "run", str(wrong), "6").returncode == 2


def test_pm_run_fuel_exhaustion_is_a_property_failure():
    # the sweep over 11111111 needs nine steps, two are not enough
    out = run_cli("pm", "run", path_of("pm_loop"), "255", "--fuel", "2")
    assert out.returncode == 1


def test_pm_normalize_writes_an_encodable_machine(tmp_path):
    target = tmp_path / "loop_single.json"
    out = run_cli("pm", "normalize", path_of("pm_loop"), "--out", str(target))
    assert out.returncode == 0
    machine = files.load_path(target)
    encode_reference(machine)  # would raise NotSingleMove before normalization
    original = corpus.load_machine("pm_loop")
    for n in range(8):
        assert pm_run(machine, InputWord.from_int(n)) == pm_run(original, InputWord.from_int(n))


def test_pm_check_acyclic_exit_codes():
    assert run_cli("pm", "check-acyclic", path_of("dpm_even"), "--maxlen", "4").returncode == 0
    out = run_cli("pm", "check-acyclic", path_of("pm_loop"), "--maxlen", "4")
    assert out.returncode == 1
    assert json.loads(out.stdout)["result"]["acyclic"] is False


def test_pm_acyclify_then_check(tmp_path):
    target = tmp_path / "loop_acyclic.json"
    assert run_cli("pm", "acyclify", path_of("pm_loop"), "--out", str(target)).returncode == 0
    machine = files.load_path(target)
    ok, _ = check_acyclic(machine, maxlen=4)
    assert ok
    # inputs that cycled now reject
    assert pm_run(machine, InputWord.from_int(2)) == "reject"
    assert pm_run(machine, InputWord.from_int(3)) == "accept"


def test_fa_run_and_encode_word():
    out = run_cli("fa", "run", path_of("fa_ones"), "--word", "010")
    assert out.returncode == 0
    assert json.loads(out.stdout)["result"]["verdict"] == "accept"
    enc = json.loads(run_cli("fa", "encode-word", "010").stdout)
    assert enc["result"] == {"word": "010", "n": 2, "cells": ["*", "0", "1", "0"]}


def test_fa_clockify_halts_and_preserves_language(tmp_path):
    target = tmp_path / "loop_clocked.json"
    out = run_cli("fa", "clockify", path_of("fa_loop"), "--out", str(target))
    assert out.returncode == 0
    clocked = files.load_path(target)
    original = corpus.load_automaton("fa_loop")
    from goilab.machines import fa_always_halts, words_up_to

    halts, _ = fa_always_halts(clocked, 4)
    assert halts
    for word in words_up_to(4):
        assert (fa_run(clocked, word) == "accept") == (fa_run(original, word) == "accept")


def test_fa_to_pm_complements_the_language(tmp_path):
    target = tmp_path / "ones_pm.json"
    assert run_cli("fa", "to-pm", path_of("fa_ones"), "--out", str(target)).returncode == 0
    machine = files.load_path(target)
    automaton = corpus.load_automaton("fa_ones")
    from goilab.machines import words_up_to

    for word in words_up_to(4):
        assert (pm_run(machine, word) == "accept") == (fa_run(automaton, word) != "accept")


def test_goi_encode_round_trips_both_modes():
    out = run_cli("goi", "encode", path_of("dpm_even"), "--mode", "reference")
    assert out.returncode == 0
    obs = obs_from_dict(json.loads(out.stdout))
    assert obs == encode_reference(corpus.load_machine("dpm_even"))
    fig = run_cli("goi", "encode", path_of("dpm_even"), "--mode", "figures")
    assert obs_from_dict(json.loads(fig.stdout)) == encode_figures(corpus.load_machine("dpm_even"))


def test_goi_encode_is_byte_stable():
    first = run_cli("goi", "encode", path_of("dpm_lasttwo"), "--mode", "reference")
    second = run_cli("goi", "encode", path_of("dpm_lasttwo"), "--mode", "reference")
    assert first.stdout == second.stdout


def test_goi_norm1_reports_the_bound(tmp_path):
    obs_file = tmp_path / "even_obs.json"
    obs_file.write_text(run_cli("goi", "encode", path_of("dpm_even"), "--mode", "reference").stdout)
    out = run_cli("goi", "norm1", str(obs_file), "--len", "4")
    assert out.returncode == 0
    result = json.loads(out.stdout)["result"]
    assert result["value"] <= 1 + 1e-9
    assert result["max_entries_per_column"] <= 1
    assert result["columns"]


def test_goi_check_verdicts(tmp_path):
    obs_file = tmp_path / "even_obs.json"
    obs_file.write_text(run_cli("goi", "encode", path_of("dpm_even"), "--mode", "reference").stdout)
    good = run_cli("goi", "check", str(obs_file), "--input", "6", "--algo", "det")
    assert good.returncode == 0
    verdict = json.loads(good.stdout)
    assert verdict["nilpotent"] is True and verdict["checker"] == "det"
    bad = run_cli("goi", "check", str(obs_file), "--input", "3", "--algo", "ndet")
    assert bad.returncode == 0
    cyc = json.loads(bad.stdout)
    assert cyc["nilpotent"] is False and cyc["witness"]
    # verdict JSON round-trips through its own serialization
    assert json.loads(files.dumps(cyc)) == cyc
    capped = run_cli("goi", "check", str(obs_file), "--input", "6", "--algo", "dense", "--cap", "10")
    assert capped.returncode == 2


def test_goi_validate_exit_codes():
    good = run_cli("goi", "validate", path_of("dpm_even"), "--range", "0:15")
    assert good.returncode == 0
    table = json.loads(good.stdout)["result"]
    assert table["agreements"] == 16 and table["all_agree"]
    broken = run_cli("goi", "validate", path_of("pm_spinner"), "--range", "0:3")
    assert broken.returncode == 1
    # the figure catalog is reported, not enforced
    figures = run_cli("goi", "validate", path_of("dpm_even"), "--range", "0:3", "--mode", "figures")
    assert figures.returncode == 0
    assert not json.loads(figures.stdout)["result"]["all_agree"]


def test_goi_validate_is_byte_stable():
    first = run_cli("goi", "validate", path_of("dpm_even"), "--range", "0:7")
    second = run_cli("goi", "validate", path_of("dpm_even"), "--range", "0:7")
    assert first.stdout == second.stdout


def test_suite_filters_and_negative_control():
    norm = run_cli("suite", "--filter", "norm")
    assert norm.returncode == 0, norm.stdout
    report = json.loads(norm.stdout)
    names = [c["name"] for c in report["result"]["criteria"]]
    assert names == ["norm-bound"]
    clean = run_cli("suite", "--filter", "soundness", "--range", "0:15")
    assert clean.returncode == 0
    dirty = run_cli("suite", "--filter", "soundness", "--range", "0:15", "--include-negative")
    assert dirty.returncode == 1
    failed = json.loads(dirty.stdout)["result"]["criteria"][0]
    assert failed["name"] == "soundness" and not failed["passed"]


def test_unknown_verbs_are_input_errors():
    assert run_cli("pm", "frobnicate").returncode == 2
    assert run_cli("goi", "check", "--input", "x").returncode == 2


def test_log_level_goes_to_stderr():
    quiet = run_cli("pm", "run", path_of("dpm_even"), "6")
    noisy = run_cli("pm", "run", path_of("dpm_even"), "6", env={"GOILAB_LOG": "debug"})
    assert quiet.stdout == noisy.stdout
    assert noisy.stderr != "" and "goilab" in noisy.stderr
    assert quiet.stderr == ""
