import hashlib
import json

import pytest

from ergostat import cli


RETURN_CFG = """\
# minimal return-count run
system = doubling
ball.center = 0.41421356
ball.rho = 0.001
t = 1.0
m = 200
seed = 11
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def run_cli(args):
    return cli.main([str(a) for a in args])


class TestConfigParsing:
    def test_flat_and_json_equivalent(self, tmp_path):
        flat = _write(tmp_path, "a.cfg", RETURN_CFG)
        as_json = _write(tmp_path, "a.json", json.dumps({
            "system": "doubling",
            "ball": {"center": 0.41421356, "rho": 0.001},
            "t": 1.0, "m": 200, "seed": 11,
        }))
        c1 = cli.load_config(flat, "return-dist")
        c2 = cli.load_config(as_json, "return-dist")
        assert c1 == c2

    def test_unknown_key_rejected(self, tmp_path):
        p = _write(tmp_path, "bad.cfg", RETURN_CFG + "extra.knob = 3\n")
        with pytest.raises(Exception):
            cli.load_config(p, "return-dist")

    def test_type_coercion_and_errors(self, tmp_path):
        p = _write(tmp_path, "t.cfg", "system = doubling\nm = 1e3\n")
        cfg = cli.load_config(p, "return-dist")
        assert cfg["m"] == 1000 and isinstance(cfg["m"], int)
        p2 = _write(tmp_path, "t2.cfg", "system = doubling\nm = 10.5\n")
        with pytest.raises(Exception):
            cli.load_config(p2, "return-dist")

    def test_comments_and_blank_lines(self, tmp_path):
        p = _write(tmp_path, "c.cfg", "\n# comment\nsystem = doubling # trail\n")
        assert cli.load_config(p, "return-dist") == {"system": "doubling"}


class TestExitCodes:
    def test_success(self, tmp_path):
        cfg = _write(tmp_path, "r.cfg", RETURN_CFG)
        assert run_cli(["return-dist", "--config", cfg,
                        "--out", tmp_path / "out"]) == 0

    def test_missing_config_is_validation(self, tmp_path, monkeypatch):
        monkeypatch.delenv("ERGOSTAT_CONFIG", raising=False)
        assert run_cli(["return-dist"]) == 2

    def test_unreadable_config(self, tmp_path):
        assert run_cli(["return-dist", "--config", tmp_path / "nope.cfg"]) == 2

    def test_unknown_key_exit(self, tmp_path):
        cfg = _write(tmp_path, "bad.cfg", RETURN_CFG + "bogus = 1\n")
        assert run_cli(["return-dist", "--config", cfg,
                        "--out", tmp_path / "out"]) == 2

    def test_computation_failure_exit(self, tmp_path):
        # correlation replicas starve on this budget -> resource failure
        cfg = _write(tmp_path, "c.cfg",
                     "system = doubling\nlags = [1,2,3,4,5]\n"
                     "budget = 20000\nreplicas = 50\n")
        assert run_cli(["correlations", "--config", cfg,
                        "--out", tmp_path / "out"]) == 3

    def test_no_partial_outputs_on_failure(self, tmp_path):
        cfg = _write(tmp_path, "c.cfg",
                     "system = doubling\nlags = [1,2,3,4,5]\n"
                     "budget = 20000\nreplicas = 50\n")
        out = tmp_path / "out"
        assert run_cli(["correlations", "--config", cfg, "--out", out]) == 3
        assert not out.exists()


class TestOutputs:
    def test_manifest_lists_every_file_with_hashes(self, tmp_path):
        cfg = _write(tmp_path, "r.cfg", RETURN_CFG)
        out = tmp_path / "out"
        assert run_cli(["return-dist", "--config", cfg, "--out", out]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        produced = {p.name for p in out.iterdir()} - {"manifest.json"}
        assert set(manifest["files"]) == produced
        for name, digest in manifest["files"].items():
            data = (out / name).read_bytes()
            assert hashlib.sha256(data).hexdigest() == digest
        assert manifest["config_sha256"] == hashlib.sha256(
            cfg.read_bytes()
        ).hexdigest()
        assert manifest["seed"] == 11
        assert "workers" not in manifest
        for pkg in ("numpy", "scipy", "numba", "ergostat", "python"):
            assert pkg in manifest["versions"]

    def test_results_json_sorted_and_seeded(self, tmp_path):
        cfg = _write(tmp_path, "r.cfg", RETURN_CFG)
        out = tmp_path / "out"
        run_cli(["return-dist", "--config", cfg, "--out", out])
        text = (out / "results.json").read_text()
        data = json.loads(text)
        assert data["seed"] == 11
        assert data["N"] == 500
        assert list(data) == sorted(data)
        assert "workers" not in data

    def test_csv_headers(self, tmp_path):
        cfg = _write(tmp_path, "r.cfg", RETURN_CFG)
        out = tmp_path / "out"
        run_cli(["return-dist", "--config", cfg, "--out", out])
        head = (out / "returns_hist.csv").read_text().splitlines()[0]
        assert head == "r,empirical_prob,poisson_prob,abs_error"

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = _write(tmp_path, "r.cfg", RETURN_CFG)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        run_cli(["return-dist", "--config", cfg, "--out", out1])
        run_cli(["return-dist", "--config", cfg, "--seed", "99", "--out", out2])
        h1 = json.loads((out1 / "manifest.json").read_text())
        h2 = json.loads((out2 / "manifest.json").read_text())
        assert h2["seed"] == 99
        assert h1["files"] != h2["files"]

    def test_worker_count_never_changes_outputs(self, tmp_path):
        cfg = _write(tmp_path, "r.cfg", RETURN_CFG)
        out1, out2 = tmp_path / "w1", tmp_path / "w2"
        run_cli(["return-dist", "--config", cfg, "--workers", "1", "--out", out1])
        run_cli(["return-dist", "--config", cfg, "--workers", "8", "--out", out2])
        f1 = json.loads((out1 / "manifest.json").read_text())["files"]
        f2 = json.loads((out2 / "manifest.json").read_text())["files"]
        assert f1 == f2

    def test_env_var_overrides_flag(self, tmp_path, monkeypatch):
        good = _write(tmp_path, "good.cfg", RETURN_CFG)
        bad = _write(tmp_path, "bad.cfg", "system = doubling\nbogus = 1\n")
        out = tmp_path / "out"
        monkeypatch.setenv("ERGOSTAT_CONFIG", str(good))
        # the flag points at a broken config; the env var must win
        assert run_cli(["return-dist", "--config", bad, "--out", out]) == 0


class TestChenSteinExperiment:
    def test_report_json(self, tmp_path):
        cfg = _write(tmp_path, "cs.json", json.dumps({
            "transition": [[0.9, 0.1], [0.5, 0.5]],
            "marked": [1], "N": 12, "Delta": 3,
        }))
        out = tmp_path / "out"
        assert run_cli(["chen-stein", "--config", cfg, "--out", out]) == 0
        data = json.loads((out / "results.json").read_text())
        assert data["bound"] >= 0.0
        assert data["bound_dominates"] is True
        assert data["R1"] >= 0.0 and data["R2"] >= 0.0


class TestShortReturnsExperiment:
    def test_vrho_csv_with_oracle_column(self, tmp_path):
        cfg = _write(tmp_path, "sr.cfg",
                     "system = doubling\nrho.grid = [0.01, 0.001]\n"
                     "a_frak = 0.25\nm = 1000\nseed = 3\n")
        out = tmp_path / "out"
        assert run_cli(["short-returns", "--config", cfg, "--out", out]) == 0
        lines = (out / "vrho.csv").read_text().splitlines()
        assert lines[0] == "rho,J,fraction,std_error,oracle"
        assert len(lines) == 3
        rho, J, frac, err, orc = lines[1].split(",")
        assert float(frac) == pytest.approx(float(orc), abs=3 * float(err) + 1e-3)
