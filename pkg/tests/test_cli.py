"""CLI end-to-end: every subcommand, exit codes, idempotent outputs."""

import hashlib

import pytest

from roamkit.cli import main

FLEET_TOML = """\
seed = 7
start_day = "2018-11-01"
n_days = 3

[platform]
n_devices = 30
failure_only_fraction = 0.3

[[platform.hmnos]]
plmn = "214-07"
share = 0.6
roaming_fraction = 0.8
vmno_pool = [["234-15", 2.0], ["234-30", 1.0], ["234-20", 1.0]]

[[platform.hmnos]]
plmn = "262-02"
share = 0.4
roaming_fraction = 0.5
vmno_pool = [["234-15", 1.0], ["234-30", 1.0]]

[platform.records]
median = 8.0
sigma = 1.0
max = 200

[population]
n_devices = 40
smip_native_count = 2
smip_roaming_count = 2
"""

RUN_TOML = """\
[inputs]
signaling = "{d}/signaling.csv"
radio = "{d}/radio.csv"
usage = "{d}/usage.csv"
tac_catalog = "{d}/tac_catalog.csv"
sectors = "{d}/sectors.csv"

[run]
out_dir = "{out}"

[labeler]
home_plmn = "234-15"
mvno_plmns = ["234-38"]
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One generated fleet plus a run config, shared by the read-only tests."""
    root = tmp_path_factory.mktemp("ws")
    data = root / "data"
    spec = root / "fleet.toml"
    spec.write_text(FLEET_TOML)
    assert main(["synth", str(spec), "--out", str(data)]) == 0
    cfg = root / "run.toml"
    cfg.write_text(RUN_TOML.format(d=data, out=root / "out"))
    return root, data, cfg


def _run_pipeline(cfg):
    assert main(["ingest-check", "--config", str(cfg)]) == 0
    assert main(["catalog", "--config", str(cfg)]) == 0
    assert main(["classify", "--config", str(cfg)]) == 0
    assert main(["report", "--config", str(cfg), "--which", "all"]) == 0


def _tree_hash(path):
    out = {}
    for f in sorted(path.rglob("*")):
        if f.is_file():
            out[str(f.relative_to(path))] = hashlib.sha256(f.read_bytes()).hexdigest()
    return out


class TestHappyPath:
    def test_full_pipeline(self, workspace, capsys):
        root, data, cfg = workspace
        assert main(["replay-check", str(data)]) == 0
        _run_pipeline(cfg)
        captured = capsys.readouterr()
        assert "platform" in captured.out
        out = root / "out"
        days = sorted(p.name for p in (out / "catalog").glob("catalog_*.csv"))
        assert days == [
            "catalog_2018-11-01.csv",
            "catalog_2018-11-02.csv",
            "catalog_2018-11-03.csv",
        ]
        assert (out / "classification.csv").exists()
        reports = out / "reports"
        assert (reports / "platform_heatmap.csv").exists()
        assert (reports / "platform_hmno_shares.csv").exists()
        assert (reports / "population_grid_counts.csv").exists()
        assert (reports / "population_summary.json").exists()
        assert (reports / "verticals_summary.json").exists()

    def test_rerun_is_byte_identical(self, workspace):
        root, _, cfg = workspace
        out = root / "out"
        _run_pipeline(cfg)
        before = _tree_hash(out)
        _run_pipeline(cfg)
        assert _tree_hash(out) == before

    def test_workers_do_not_change_output(self, workspace):
        root, _, cfg = workspace
        out = root / "out"
        assert main(["catalog", "--config", str(cfg)]) == 0
        before = _tree_hash(out / "catalog")
        assert main(["catalog", "--config", str(cfg), "--workers", "3"]) == 0
        assert _tree_hash(out / "catalog") == before


class TestExitCodes:
    def test_bad_fleet_shares_is_config_error(self, tmp_path):
        spec = tmp_path / "fleet.toml"
        spec.write_text(FLEET_TOML.replace("share = 0.6", "share = 0.5"))
        assert main(["synth", str(spec), "--out", str(tmp_path / "o")]) == 2

    def test_unknown_config_section(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text("[surprise]\nx = 1\n")
        assert main(["catalog", "--config", str(cfg)]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["catalog", "--config", str(tmp_path / "nope.toml")]) == 2

    def test_no_inputs_configured(self):
        assert main(["ingest-check"]) == 2

    def test_configured_input_file_missing(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text('[inputs]\nsignaling = "gone.csv"\n')
        assert main(["ingest-check", "--config", str(cfg)]) == 1

    def test_tampered_fleet_fails_replay(self, tmp_path):
        spec = tmp_path / "fleet.toml"
        spec.write_text(FLEET_TOML)
        data = tmp_path / "data"
        assert main(["synth", str(spec), "--out", str(data)]) == 0
        sig = data / "signaling.csv"
        lines = sig.read_text().splitlines()
        body = [i for i, l in enumerate(lines) if not l.startswith("#")]
        del lines[body[0]:body[0] + 2]
        sig.write_text("\n".join(lines) + "\n")
        assert main(["replay-check", str(data)]) == 1

    def test_report_without_classification(self, workspace, tmp_path, capsys):
        _, data, _ = workspace
        cfg = tmp_path / "run.toml"
        cfg.write_text(RUN_TOML.format(d=data, out=tmp_path / "out"))
        assert main(["catalog", "--config", str(cfg)]) == 0
        assert main(["report", "--config", str(cfg), "--which", "population"]) == 1
        assert "classify" in capsys.readouterr().err

    def test_report_without_catalog(self, tmp_path, capsys):
        cfg = tmp_path / "run.toml"
        cfg.write_text(f'[run]\nout_dir = "{tmp_path / "out"}"\n')
        assert main(["report", "--config", str(cfg), "--which", "population"]) == 1
        assert "catalog" in capsys.readouterr().err

    def test_classify_on_empty_catalog_dir(self, tmp_path):
        out = tmp_path / "out"
        (out / "catalog").mkdir(parents=True)
        cfg = tmp_path / "run.toml"
        cfg.write_text(f'[run]\nout_dir = "{out}"\n')
        assert main(["classify", "--config", str(cfg)]) == 0
        assert (out / "classification.csv").exists()


class TestDegradedInputs:
    def test_missing_sector_file_warns_but_runs(self, workspace, tmp_path, capsys):
        _, data, _ = workspace
        cfg = tmp_path / "run.toml"
        cfg.write_text(
            "[inputs]\n"
            f'radio = "{data}/radio.csv"\n'
            f'usage = "{data}/usage.csv"\n'
            f'tac_catalog = "{data}/tac_catalog.csv"\n'
            f'[run]\nout_dir = "{tmp_path / "out"}"\n'
        )
        assert main(["catalog", "--config", str(cfg)]) == 0
        assert "sector" in capsys.readouterr().err.lower()
        # catalogs exist, mobility columns are simply empty
        days = list((tmp_path / "out" / "catalog").glob("catalog_*.csv"))
        assert days

    def test_malformed_line_tolerant_vs_strict(self, workspace, tmp_path):
        _, data, _ = workspace
        radio = tmp_path / "radio.csv"
        good = (data / "radio.csv").read_text()
        radio.write_text(good + "this,is,not,a,record\n")
        base = [
            "catalog",
            "--radio", str(radio),
            "--tac-catalog", str(data / "tac_catalog.csv"),
            "--sectors", str(data / "sectors.csv"),
            "--out-dir", str(tmp_path / "out"),
        ]
        assert main(base) == 0
        assert main(base + ["--strict"]) == 1

    def test_flags_override_config(self, workspace, tmp_path):
        _, data, cfg = workspace
        alt = tmp_path / "alt_out"
        assert main(["catalog", "--config", str(cfg), "--out-dir", str(alt)]) == 0
        assert (alt / "catalog").exists()
