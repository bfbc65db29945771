import json
import shutil
import subprocess
import sys

import pytest

from morphounify.cli import main, parse_spec
from morphounify.grammar import demo_file


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_avm(capsys):
    code, out, _ = run(capsys, "analyze", "rät")
    assert code == 0
    assert out.startswith("word\n")
    assert '"rAt+t"' in out and "aou_umlaut" in out and "<1>" in out


def test_analyze_json(capsys):
    code, out, _ = run(capsys, "analyze", "sagst", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert len(data) == 1
    types = [n["type"] for n in data[0]["nodes"]]
    assert '"sag+st"' in types and "say_rel" in types


def test_options_before_the_command(capsys):
    assert run(capsys, "--format", "json", "analyze", "rate")[0] == 0


def test_no_analysis(capsys):
    code, out, _ = run(capsys, "analyze", "rätet")
    assert code == 1 and out.strip() == "no analysis"


def test_bad_characters_are_usage_errors(capsys):
    code, _, err = run(capsys, "analyze", "r%t")
    assert code == 2 and "surface alphabet" in err


def test_generate(capsys):
    code, out, _ = run(capsys, "generate", "stem=bad", "person=3", "tense=pres")
    assert code == 0 and out.split() == ["badet"]
    code, out, _ = run(capsys, "generate", "mstring=rAt+t", "--format", "json")
    assert code == 0 and json.loads(out) == ["rät"]


def test_generate_reports_delay_and_failure(capsys):
    code, out, _ = run(capsys, "generate", "person=3")
    assert code == 1 and "delayed" in out
    code, out, _ = run(capsys, "generate", "stem=bad", "tense=past")
    assert code == 1 and out.strip() == "no realization"
    code, _, err = run(capsys, "generate", "colour=red")
    assert code == 2 and "unknown feature" in err


def test_parse_spec():
    assert parse_spec(["a=b", "c=d=e"]) == [("a", "b"), ("c", "d=e")]
    with pytest.raises(ValueError):
        parse_spec(["novalue"])


def test_check_demo(capsys):
    code, out, _ = run(capsys, "check")
    assert code == 0 and out.strip() == "ok"


def _copy_demo(tmp_path):
    paths = {}
    for k in ("grammar", "rules", "morphs", "lexemes"):
        paths[k] = tmp_path / f"demo.{k}"
        paths[k].write_text(demo_file(f"demo.{k}"), encoding="utf-8")
    return paths


def test_check_reports_problems(tmp_path, capsys):
    paths = _copy_demo(tmp_path)
    with paths["rules"].open("a", encoding="utf-8") as f:
        f.write("\nclash :: _ <=> A:a <=> _ :- filter(mhead:umlaut = aou_umlaut).\n")
    with paths["morphs"].open("a", encoding="utf-8") as f:
        f.write('\nmorph "gab" : marg [stem: "gab", mhead: verb_stem].\n')
    code, out, _ = run(capsys, "check", *(f"--{k}={v}" for k, v in paths.items()))
    assert code == 1
    assert "conflict" in out and "'gab'" in out and "2 problem(s)" in out


def test_custom_files_and_missing_file(tmp_path, capsys):
    paths = _copy_demo(tmp_path)
    args = [f"--{k}={v}" for k, v in paths.items()]
    assert run(capsys, "analyze", "sagt", *args)[0] == 0
    code, _, err = run(capsys, "analyze", "sagt", "--rules", str(tmp_path / "missing"))
    assert code == 2 and "cannot read" in err


def test_trace_goes_to_stderr(capsys):
    code, out, err = run(capsys, "--trace", "analyze", "badet")
    assert code == 0 and "trace:" not in out
    assert "trace: commit epenthesis" in err and "trace: accept" in err


def test_max_nulls_option(capsys):
    # rät aligns with rAt+t through two adjacent nulls (+:0 and t:0)
    assert run(capsys, "--max-nulls", "1", "analyze", "rät")[0] == 1
    assert run(capsys, "--max-nulls", "1", "analyze", "sagt")[0] == 0
    assert run(capsys, "--max-nulls", "2", "analyze", "rät")[0] == 0


def test_module_and_script_entry_points():
    p = subprocess.run([sys.executable, "-m", "morphounify", "analyze", "sagt"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and '"sagt"' in p.stdout
    exe = shutil.which("morphounify")
    if exe is not None:
        p = subprocess.run([exe, "check"], capture_output=True, text=True)
        assert p.returncode == 0 and p.stdout.strip() == "ok"
