"""CLI surface: exit codes, determinism, JSON output."""

import json

import pytest

from bernabs import cli, corpus


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, text in (
        ("chain.cp", corpus.CHAIN_DRAWS_CP),
        ("chain.preds", corpus.CHAIN_DRAWS_PREDS),
        ("chain.bern", corpus.CHAIN_DRAWS_BERN),
        ("branch.cp", corpus.BRANCH_RESET_CP),
        ("branch.preds", corpus.BRANCH_RESET_PREDS),
        ("branch.bern", corpus.BRANCH_RESET_BERN),
        ("bad.cp", "var x in [0, 4)\nx = y\n"),
        ("broken.bern", "bool {x<-4}\nbool {x<3}\n{x<-4}, {x<3} = T, F\n"),
    ):
        p = tmp_path / name
        p.write_text(text)
        paths[name] = str(p)
    return paths, tmp_path


def test_abstract_golden(files, capsys):
    paths, tmp = files
    rc = cli.main(["abstract", paths["branch.cp"], paths["branch.preds"],
                   "--mode", "nondet", "--invariants", "none"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "if (*) {" in out
    assert "assume({x<3})" in out
    assert "{x<-4}, {x<3} = F, T" in out


def test_abstract_is_deterministic(files, capsys):
    paths, _ = files
    cli.main(["abstract", paths["chain.cp"], paths["chain.preds"], "--mode", "prob"])
    first = capsys.readouterr().out
    cli.main(["abstract", paths["chain.cp"], paths["chain.preds"], "--mode", "prob"])
    second = capsys.readouterr().out
    assert first == second


def test_abstract_bad_input_exit_2(files, capsys):
    paths, _ = files
    rc = cli.main(["abstract", paths["bad.cp"], paths["branch.preds"]])
    assert rc == 2


def test_abstract_missing_file_exit_2(files):
    paths, tmp = files
    rc = cli.main(["abstract", str(tmp / "nope.cp"), paths["branch.preds"]])
    assert rc == 2


def test_infer_eleven_thirty_seconds(files, capsys):
    paths, _ = files
    rc = cli.main(["infer", paths["chain.bern"], "--event", "{c<5}", "--json"])
    blob = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert (blob["numerator"], blob["denominator"]) == (11, 32)


def test_infer_trivial_event(files, capsys):
    paths, _ = files
    rc = cli.main(["infer", paths["chain.bern"]])
    out = capsys.readouterr().out
    assert rc == 0
    assert "probability 1\n" in out


def test_infer_survival_zero_exit_3(files, tmp_path, capsys):
    dead = tmp_path / "dead.bern"
    dead.write_text("bool a\nobserve(F)\n")
    rc = cli.main(["infer", str(dead), "--event", "a"])
    assert rc == 3


def test_infer_dot_dump(files, tmp_path, capsys):
    paths, _ = files
    dot = tmp_path / "delta.dot"
    rc = cli.main(["infer", paths["chain.bern"], "--event", "{c<5}", "--dot", str(dot)])
    assert rc == 0
    assert dot.read_text().startswith("digraph bdd {")


def test_check_pass(files, capsys):
    paths, _ = files
    rc = cli.main([
        "check", paths["branch.cp"], paths["branch.preds"], paths["branch.bern"],
        "--where", "x < 7",
    ])
    out = capsys.readouterr().out
    assert rc == 0
    assert "sound-nondet: pass" in out


def test_check_fail_exit_1(files, capsys):
    paths, _ = files
    rc = cli.main([
        "check", paths["branch.cp"], paths["branch.preds"], paths["broken.bern"],
        "--where", "x < 7", "--json",
    ])
    blob = json.loads(capsys.readouterr().out)
    assert rc == 1
    assert blob[0]["status"] == "fail"
    assert blob[0]["counterexamples"]


def test_fit_reproduces_hand_abstraction(files, capsys, tmp_path):
    paths, _ = files
    sites = tmp_path / "sites.json"
    rc = cli.main(["fit", paths["chain.cp"], paths["chain.preds"], "--sites", str(sites)])
    out = capsys.readouterr().out
    assert rc == 0
    for needle in ("{a<5} = flip(1/2)", "{b<5} = flip(1/4)", "{c<5} = flip(1/4)"):
        assert needle in out
    blob = json.loads(sites.read_text())
    assert not any(entry["flagged"] for entry in blob)


def test_fit_no_draw_sites(files, tmp_path, capsys):
    noflip = tmp_path / "const.cp"
    noflip.write_text("var x in [0, 8)\nx = 1\n")
    preds = tmp_path / "const.preds"
    preds.write_text("x<4: x < 4\n")
    rc = cli.main(["fit", str(noflip), str(preds), "--invariants", "none"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "flip" not in out


def test_selftest_quick(capsys):
    rc = cli.main(["selftest", "--seed", "3", "--scale", "0.02"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "PASS" in out
