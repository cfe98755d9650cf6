import json
from pathlib import Path

import pytest

from vsearch.cli import main


def _read_all(directory: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(directory.rglob("*"))
            if p.is_file()}


def test_gen_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        rc = main(["gen", "--seed", "1", "--out", str(out),
                   "--queries", "300", "--users", "40"])
        assert rc == 0
    assert _read_all(a) == _read_all(b)
    assert (a / "manifest.txt").exists()
    assert (a / "docs.jsonl").exists()
    assert (a / "log.tsv").exists()
    assert (a / "annotations.txt").exists()
    assert list((a / "lexicons").glob("*.lex"))


def test_gen_seed_changes_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["gen", "--seed", "1", "--out", str(a), "--queries", "200", "--users", "30"])
    main(["gen", "--seed", "2", "--out", str(b), "--queries", "200", "--users", "30"])
    assert _read_all(a)["log.tsv"] != _read_all(b)["log.tsv"]


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--bogus", "1"])
    assert exc.value.code == 2


def test_mine_writes_pair_table(tmp_path):
    data = tmp_path / "data"
    main(["gen", "--seed", "3", "--out", str(data), "--queries", "600",
          "--users", "50"])
    out = tmp_path / "mined"
    rc = main(["mine", "--data", str(data), "--out", str(out)])
    assert rc == 0
    assert (out / "pairs.tsv").exists()
    manifest = (out / "manifest.txt").read_text()
    assert "pairs_mined=" in manifest


def test_train_eval_smoke(tmp_path):
    data = tmp_path / "data"
    models = tmp_path / "models"
    runs = tmp_path / "runs"
    main(["gen", "--seed", "4", "--out", str(data), "--queries", "600",
          "--users", "60"])
    rc = main(["train", "intent", "--data", str(data), "--out", str(models),
               "--epochs", "1", "--max-examples", "250"])
    assert rc == 0
    assert (models / "intent.vsnn").exists()
    manifest = (models / "manifest.txt").read_text()
    assert "hash.intent.vsnn=" in manifest
    rc = main(["eval", "--task", "intent", "--data", str(data),
               "--models", str(models), "--out", str(runs),
               "--max-examples", "150"])
    assert rc == 0
    reports = list(runs.glob("eval_intent_*.json"))
    assert reports
    body = json.loads(reports[0].read_text())
    assert 0.0 <= body["metrics"]["accuracy"] <= 1.0


def test_missing_data_dir_is_single_line_error(tmp_path, capsys):
    rc = main(["mine", "--data", str(tmp_path / "nope"), "--out",
               str(tmp_path / "out")])
    assert rc == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("error:") and "\n" not in err
