"""子命令与命令行入口。"""

import pytest

from bernoulli_sieve import config
from bernoulli_sieve.commands import RunConfig, cmd_exact, cmd_limit, cmd_simulate, cmd_verify, parse_count, precision_cap
from bernoulli_sieve.errors import EXIT_OK, EXIT_USAGE, ConfigError
from bernoulli_sieve.storage import read_header
from scripts.sieve_lab import main


class TestRunConfig:
    def test_json_round_trip(self):
        cfg = RunConfig("simulate", model="gem:2", n="1e4", reps="50", stats="kstar,k0", seed=3)
        assert RunConfig.from_json(cfg.to_json()) == cfg
        assert cfg.n == 10_000
        assert cfg.stats == ("kstar", "k0")

    def test_header_drops_runtime_fields(self):
        a = RunConfig("simulate", workers=1, out="a.csv")
        b = RunConfig("simulate", workers=4, out="b.csv")
        assert a.header_json() == b.header_json()
        assert "workers" not in a.header_json()

    @pytest.mark.parametrize(
        "kwargs",
        [dict(command="bogus"), dict(command="simulate", fmt="xml"), dict(command="simulate", reps=0), dict(command="simulate", stats="kstar,foo")],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ConfigError):
            RunConfig(**kwargs)

    def test_unknown_json_field(self):
        with pytest.raises(ConfigError):
            RunConfig.from_json('{"command": "simulate", "colour": "red"}')

    def test_parse_count(self):
        assert parse_count("1_000") == 1000
        assert parse_count("2.5") == 2.5
        with pytest.raises(ConfigError):
            parse_count("-3")


class TestCommands:
    def test_simulate_independent_of_workers(self, tmp_path):
        paths = []
        for workers in (1, 2):
            cfg = RunConfig("simulate", n=40, reps=300, seed=17, stats="k,kstar,k0,z", workers=workers, out=str(tmp_path / f"w{workers}.csv"))
            paths.append(cmd_simulate(cfg))
        assert paths[0].read_bytes() == paths[1].read_bytes()
        lines = paths[0].read_text(encoding="utf-8").splitlines()
        assert lines[3] == "k,kstar,k0,z"
        assert len(lines) == 4 + 300
        assert read_header(paths[0])["seed"] == "17"

    def test_exact_csv(self, tmp_path):
        cfg = RunConfig("exact", model="beta:1,1", n=10, stat="z", out=str(tmp_path / "z.csv"))
        text = cmd_exact(cfg).read_text(encoding="utf-8")
        assert "k,probability" in text
        rows = dict(line.split(",") for line in text.splitlines() if line[:1].isdigit())
        # P{Z_10 = 10} = 1/10
        assert float(rows["10"]) == pytest.approx(0.1, rel=1e-12)

    def test_exact_rejects_fractional_n(self, tmp_path):
        with pytest.raises(ConfigError):
            cmd_exact(RunConfig("exact", n=2.5, out=str(tmp_path / "x.csv")))

    def test_limit_report(self, tmp_path):
        cfg = RunConfig("limit", model="logpareto:0.5", functional="kstar", fmt="report", n_grid=(1e6,), out=str(tmp_path / "l.txt"))
        text = cmd_limit(cfg).read_text(encoding="utf-8")
        assert "case: e" in text
        assert "law: mittag_leffler(0.5)" in text
        assert "b_n[n=1e+06]: 0.0" in text

    def test_verify_uniform_suite(self, tmp_path):
        cfg = RunConfig("verify", suite="uniform-closed-forms", out=str(tmp_path / "v.csv"))
        reports, code, path = cmd_verify(cfg)
        assert code == EXIT_OK
        assert len(reports) == 5
        assert all(report.passed for report in reports)
        assert path.exists()

    def test_verify_unknown_suite(self, tmp_path):
        with pytest.raises(ConfigError, match="uniform-closed-forms"):
            cmd_verify(RunConfig("verify", suite="nope", out=str(tmp_path / "v.csv")))

    def test_precision_cap_restores(self):
        saved = config.MAX_PRECISION_BITS
        with precision_cap(2048):
            assert config.MAX_PRECISION_BITS == 2048
        assert config.MAX_PRECISION_BITS == saved


class TestMain:
    def test_exact_exit_ok(self, tmp_path, capsys):
        out = tmp_path / "k.csv"
        with pytest.raises(SystemExit) as info:
            main(["exact", "--model", "gem:2", "--n", "12", "--stat", "k0", "--out", str(out)])
        assert info.value.code == EXIT_OK
        assert out.exists()
        assert "已保存" in capsys.readouterr().out

    def test_bad_model_is_usage_error(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as info:
            main(["simulate", "--model", "beta:1", "--out", str(tmp_path / "s.csv")])
        assert info.value.code == EXIT_USAGE
        assert "beta" in capsys.readouterr().err

    def test_n_above_full_limit(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["simulate", "--n", "1e10", "--stats", "k", "--out", str(tmp_path / "s.csv")])
        assert info.value.code == EXIT_USAGE
        assert not (tmp_path / "s.csv").exists()
