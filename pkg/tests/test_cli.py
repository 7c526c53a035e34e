import csv
import json
import subprocess
import sys

import pytest

from diamond_gap import __version__
from diamond_gap.channels import channel_to_json, random_channel
from diamond_gap.cli import DEFAULT_SEED, ConfigError, RunConfig, main, parse_config, run


def read_records(path):
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    assert set(header) == {"meta"}
    return header["meta"], lines[1:]


# --- configuration -----------------------------------------------------------


def test_parse_verify_flags():
    cfg = parse_config(["verify", "--d", "2", "--samples", "100", "--seed", "7"])
    assert (cfg.subcommand, cfg.d, cfg.seed, cfg.samples) == ("verify", 2, 7, 100)


def test_parse_norms_defaults():
    cfg = parse_config(["norms", "--channel", "depolarizing:p=1.0", "--d", "2"])
    assert cfg.subcommand == "norms" and cfg.d == 2
    assert cfg.seed == DEFAULT_SEED
    assert cfg.channel_spec == "depolarizing:p=1.0"


def test_seed_accepts_hex():
    assert parse_config(["lemmas", "--seed", "0x10"]).seed == 16


def test_config_file_precedence(tmp_path):
    f = tmp_path / "run.toml"
    f.write_text('[run]\nd = 3\nsamples = 5\nseed = 11\n\n[run.tol]\ntheorem = 1e-5\n')
    cfg = parse_config(["verify", "--config", str(f), "--d", "2"])
    assert cfg.d == 2 and cfg.samples == 5 and cfg.seed == 11
    assert cfg.tolerances == {"theorem": 1e-5}
    cfg = parse_config(["verify", "--config", str(f), "--tol", "theorem=1e-4"])
    assert cfg.d == 3 and cfg.tolerances == {"theorem": 1e-4}


@pytest.mark.parametrize(
    "argv",
    [
        ["verify", "--bogus"],
        ["verify", "--d", "9"],
        ["verify", "--d", "1"],
        ["verify", "--d", "two"],
        ["verify", "--samples", "0"],
        ["verify", "--env", "d3"],
        ["verify", "--seed", "-1"],
        ["verify", "--tol", "nope=1"],
        ["verify", "--tol", "theorem"],
        ["verify", "--tol", "theorem=-1"],
        ["norms", "--d", "2"],
        ["norms", "--channel", "identity", "--map", "other"],
        ["lemmas", "--samples", "3"],
        ["frobnicate"],
        [],
    ],
)
def test_parse_rejects(argv):
    with pytest.raises(ConfigError):
        parse_config(argv)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        parse_config(["lemmas", "--config", str(tmp_path / "missing.toml")])
    bad = tmp_path / "bad.toml"
    bad.write_text("[run\n")
    with pytest.raises(ConfigError, match="invalid TOML"):
        parse_config(["lemmas", "--config", str(bad)])
    unknown = tmp_path / "unknown.toml"
    unknown.write_text("[run]\ncolour = 1\n")
    with pytest.raises(ConfigError, match="unknown keys"):
        parse_config(["lemmas", "--config", str(unknown)])
    out_of_range = tmp_path / "range.toml"
    out_of_range.write_text("[run]\nd = 12\n")
    with pytest.raises(ConfigError):
        parse_config(["verify", "--config", str(out_of_range)])


def test_threads_precedence(monkeypatch, tmp_path):
    f = tmp_path / "run.toml"
    f.write_text("[run]\nthreads = 3\n")
    monkeypatch.delenv("DIAMOND_GAP_THREADS", raising=False)
    assert parse_config(["verify", "--config", str(f)]).threads == 3
    monkeypatch.setenv("DIAMOND_GAP_THREADS", "5")
    assert parse_config(["verify", "--config", str(f)]).threads == 5
    assert parse_config(["verify", "--threads", "2"]).threads == 2
    monkeypatch.setenv("DIAMOND_GAP_THREADS", "lots")
    with pytest.raises(ConfigError):
        parse_config(["verify"])


def test_usage_error_exit_code(capsys):
    assert main(["verify", "--d", "20"]) == 64
    assert "d must lie in" in capsys.readouterr().err


# --- runs --------------------------------------------------------------------


def test_lemmas_run(tmp_path, capsys):
    out = tmp_path / "lemmas.jsonl"
    assert main(["lemmas", "--trials", "20", "--seed", "42", "--out", str(out)]) == 0
    assert "8/8 statements pass" in capsys.readouterr().out
    meta, lines = read_records(out)
    assert meta["config"]["trials"] == 20 and meta["version"] == __version__
    assert len(lines) == 8 and all(json.loads(l)["pass"] for l in lines)


def test_lemmas_failure_exit(tmp_path):
    assert main(["lemmas", "--trials", "5", "--tol", "lemma=1e-300", "--out", str(tmp_path / "l.jsonl")]) == 1


def test_verify_run(tmp_path, capsys):
    out = tmp_path / "v.jsonl"
    assert main(["verify", "--d", "2", "--samples", "6", "--out", str(out), "--threads", "1"]) == 0
    text = capsys.readouterr().out
    assert "ratio = 0.500000" in text and "1/sqrt2 = 0.707107" in text
    _, lines = read_records(out)
    records = [json.loads(l) for l in lines]
    assert len(records) == 6 and all(r["pass"] for r in records)
    with open(out.with_suffix(".csv"), newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["d", "seed", "L", "R", "bound", "ratio", "pass", "sdp_gap_L", "sdp_gap_R"]
    assert len(rows) == 7


def test_verify_solver_failure_exit(tmp_path, capsys):
    argv = ["verify", "--samples", "1", "--tol", "sdp_gap=1e-30", "--out", str(tmp_path / "v.jsonl")]
    assert main(argv) == 2
    assert "solver failure" in capsys.readouterr().err


def test_verify_records_deterministic(tmp_path):
    paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    for p in paths:
        assert main(["verify", "--samples", "4", "--seed", "9", "--out", str(p)]) == 0
    assert read_records(paths[0])[1] == read_records(paths[1])[1]


def test_norms_identity(tmp_path, capsys):
    out = tmp_path / "n.jsonl"
    assert main(["norms", "--channel", "identity", "--d", "2", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "L = 0.000000" in text and "R = 0.000000" in text
    rec = json.loads(read_records(out)[1][0])
    assert rec["id-minus-T"]["value"] == 0 and rec["pass"]


def test_norms_single_map(tmp_path, capsys):
    out = tmp_path / "n.jsonl"
    assert main(["norms", "--channel", "depolarizing:p=1", "--d", "2", "--map", "T", "--out", str(out)]) == 0
    assert "||T||_diamond = 1.000000" in capsys.readouterr().out
    rec = json.loads(read_records(out)[1][0])
    assert set(rec) == {"channel", "d", "T"}


def test_norms_channel_file(tmp_path, capsys):
    f = tmp_path / "ch.json"
    f.write_text(json.dumps(channel_to_json(random_channel(2, 4, 123))))
    assert main(["norms", "--channel", f"@{f}", "--d", "2", "--map", "id-minus-T", "--out", str(tmp_path / "n.jsonl")]) == 0
    assert "= 1.723532" in capsys.readouterr().out


def test_norms_bad_channel(tmp_path, capsys):
    assert main(["norms", "--channel", "nosuch", "--d", "2", "--out", str(tmp_path / "n.jsonl")]) == 1
    assert "unknown channel family" in capsys.readouterr().err


def test_gap_run(tmp_path, capsys):
    out = tmp_path / "g.jsonl"
    assert main(["gap", "--channel", "depolarizing:p=1", "--d", "2", "--restarts", "5", "--out", str(out)]) == 0
    assert "classification: strict" in capsys.readouterr().out
    rec = json.loads(read_records(out)[1][0])
    assert rec["rank_X"] == 4 and rec["label"] == "empirical witness"


def test_gap_identity_rejected(tmp_path):
    assert main(["gap", "--channel", "identity", "--d", "2", "--out", str(tmp_path / "g.jsonl")]) == 1


def test_search_run(tmp_path, capsys):
    out = tmp_path / "s.jsonl"
    assert main(["search", "--d", "2", "--budget", "4", "--seed", "1", "--out", str(out)]) == 0
    assert "best ratio = 0.500000" in capsys.readouterr().out
    _, lines = read_records(out)
    assert len(lines) == 5
    assert json.loads(lines[-1])["evaluations"] == 4


def test_run_with_dataclass(tmp_path):
    cfg = RunConfig(subcommand="lemmas", trials=3, output_path=str(tmp_path / "x.jsonl"))
    assert run(cfg) == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "diamond_gap", "norms", "--channel", "zphase", "--d", "2", "--map", "id-minus-T",
         "--out", str(tmp_path / "n.jsonl")],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert "= 2.000000" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "diamond_gap", "--version"], capture_output=True, text=True)
    assert __version__ in proc.stdout
