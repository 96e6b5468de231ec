import io
import json
import subprocess
import sys

import pytest

from conftest import DATA
from moledit.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_canon():
    code, out, _ = run("canon", "OCC", "C1=CC=CC=C1")
    assert code == 0
    assert out.split() == ["CCO", "c1ccccc1"]


def test_canon_bad_smiles_exit_1():
    code, out, err = run("canon", "CCO", "C1CC")
    assert code == 1 and out.split() == ["CCO"] and "error" in err


def test_usage_error_exit_2():
    assert run("canon", "--format", "xml")[0] == 2
    assert run("nosuchcommand")[0] == 2
    assert run("filter", "/nonexistent/file.smi")[0] == 2


def test_number():
    code, out, _ = run("number", "--order", "input", "Nc1ccc(O)cc1")
    assert out.strip() == "[NH2:1][c:2]1[cH:3][cH:4][c:5]([OH:6])[cH:7][cH:8]1"


def test_edit_apply_all_products():
    code, out, _ = run("edit", "apply", "--mol", "Fc1ccc(cc1)N1CCOCC1",
                       "--action", "replace [*:1]c1ccc([*:2])cc1 with [*:1]c1ccc([*:2])nc1")
    assert code == 0 and len(out.split()) == 2


def test_edit_apply_missing_group_exit_1():
    code, _, err = run("edit", "apply", "--mol", "CCO", "--action", "replace [*:1]Br with [*:1]F")
    assert code == 1 and err.startswith("error:")


def test_exec_json(tmp_path):
    resp = {"Action Description": ["replace [*:1]Cl connected at atom 1 with [*:1]OC"],
            "Final Target Molecule": "COc1ccccc1"}
    f = tmp_path / "r.jsonl"
    f.write_text(json.dumps({"id": "a", "source": "Clc1ccccc1", "response": resp}) + "\n"
                 + json.dumps({"id": "b", "source": "CCO", "response": resp}) + "\n")
    code, out, err = run("edit", "exec-json", str(f))
    rows = [json.loads(l) for l in out.splitlines()]
    assert rows[0]["products"] == ["COc1ccccc1"] and rows[0]["consistent"] is True
    assert rows[1]["error"] and code == 1


def test_gen_synth(tmp_path):
    out_file = tmp_path / "s.jsonl"
    code, _, _ = run("gen", "synth", str(DATA / "corpus_1000.smi"), "--limit", "20", "-o", str(out_file))
    assert code == 0
    lines = out_file.read_text().splitlines()
    assert len(lines) == 20
    again = tmp_path / "t.jsonl"
    run("gen", "synth", str(DATA / "corpus_1000.smi"), "--limit", "20", "-o", str(again), "--jobs", "2")
    assert again.read_text() == out_file.read_text()


def test_mmp_extract_tsv():
    code, out, _ = run("mmp", "extract", str(DATA / "mmp_group.smi"), "--format", "tsv")
    assert code == 0
    rows = out.splitlines()
    assert rows[0].split("\t")[:2] == ["mol_a", "mol_b"]
    assert len(rows) == 13


def test_rxn_diff():
    code, out, _ = run("rxn", "diff", str(DATA / "reactions.tsv"))
    rows = [json.loads(l) for l in out.splitlines()]
    assert code == 0
    assert [r["status"] for r in rows].count("extracted") == 7
    assert [r["status"] for r in rows].count("rejected") == 3


def test_filter(tmp_path):
    f = tmp_path / "in.smi"
    f.write_text("[Na+].CC(=O)[O-]\tx1\nCC(=O)Nc1ccc(O)cc1\tx2\nC[Si](C)(C)C\tx3\n")
    rej = tmp_path / "rej.tsv"
    code, out, _ = run("filter", str(f), "--rejects", str(rej))
    assert code == 0
    assert out.split() == ["CC(=O)Nc1ccc(O)cc1", "x2"]
    assert "x1" in rej.read_text() and "atoms" in rej.read_text()


def test_decon(tmp_path):
    t = tmp_path / "test.tsv"
    t.write_text("[*:1]C#N\t[*:1]F\n[*:1]Cl\t[*:1]O\n")
    tr = tmp_path / "train.smi"
    tr.write_text("[*:1]F\n")
    code, out, _ = run("decon", "--test", str(t), "--train", str(tr), "--format", "tsv")
    assert code == 0 and "[*:1]Cl" in out and "C#N" not in out


def test_fp_sim():
    code, out, _ = run("fp", "sim", "c1ccccc1", "Cc1ccccc1")
    assert json.loads(out)["similarity"] == pytest.approx(0.25)


def test_eval_with_plots(tmp_path):
    code, out, err = run("eval", str(DATA / "predictions_20.jsonl"), "--oracle", "heavy_atoms",
                         "--plot-dir", str(tmp_path / "rep"))
    assert code == 0
    m = json.loads(out)
    assert m["validity_rate"] == pytest.approx(85.0, abs=1e-9)
    names = {p.name for p in (tmp_path / "rep").iterdir()}
    assert {"metrics.json", "records.tsv", "rates.png", "similarity.png"} <= names
    assert (tmp_path / "rep" / "rates.png").read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_eval_unknown_oracle():
    code, _, err = run("eval", str(DATA / "predictions_20.jsonl"), "--oracle", "qed")
    assert code == 1 and "qed" in err


def test_emit():
    code, out, _ = run("emit", "prompt", "--mol", "Clc1ccccc1", "--action", "replace [*:1]Cl with [*:1]F")
    assert out.startswith("You are given a molecule in SMILES format")
    code, out, _ = run("emit", "code", "--mol", "Clc1ccccc1", "--action", "replace [*:1]Cl with [*:1]F")
    assert "from rdkit import Chem" in out
    compile(out, "<snippet>", "exec")


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "moledit", "canon", "OCC"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "CCO"
