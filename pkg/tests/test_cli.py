import csv
import io
import json
import math
import subprocess
import sys
import time

import jsonschema
import numpy as np
import pytest

from eigloc import cli, specfun


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    rows = list(csv.reader(lines[1:]))
    return meta, rows[0], [[float(x) if x not in ("true", "false", "") else x for x in r] for r in rows[1:]]


class TestFormat:
    def test_csv_layout(self, capsys):
        code, out, _ = run(["h-of-w", "--w", "1,5,25"], capsys)
        assert code == 0
        meta, header, rows = parse_csv(out)
        assert meta["command"] == "h-of-w" and meta["config"]["w"] == [1.0, 5.0, 25.0]
        assert header == ["w", "h", "localized_radius"]
        radius = [r[2] for r in rows]
        assert radius[0] < radius[1] < radius[2]
        assert rows[1][2] == pytest.approx(0.5, abs=0.02)

    def test_single_point_grid(self, capsys):
        _, out, _ = run(["h-of-w", "--w", "5"], capsys)
        assert len(out.splitlines()) == 3

    def test_round_trip_floats(self, capsys):
        _, out, _ = run(["critical", "--R", "3"], capsys)
        s = out.splitlines()[2].split(",")[1]
        assert repr(float(s)) == s

    @pytest.mark.parametrize(
        "argv",
        [["h-of-w"], ["g-of-w", "--R", "2,3", "--w", "0,1,5"], ["critical"], ["zeros", "--kind", "cross"],
         ["index-sweep", "--ladder", "100", "--w", "1,s,10", "--eps", "0.1"], ["mode-export", "--resolution", "20"],
         ["convergence", "--ladder", "25:5;100:20"]],
    )
    def test_json_validates(self, argv, capsys):
        code, out, _ = run(argv + ["--format", "json"], capsys)
        assert code == 0
        doc = json.loads(out)
        jsonschema.validate(doc, cli.load_schema())
        assert all(len(r) == len(doc["columns"]) for r in doc["rows"])

    def test_schema_rejects_malformed(self):
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({"schema": "eigloc.sweep/v1", "command": "zeros"}, cli.load_schema())


class TestCommands:
    def test_g_of_w(self, capsys):
        _, out, _ = run(["g-of-w", "--R", "3", "--w", "0,1,1.9,2,5"], capsys)
        _, header, rows = parse_csv(out)
        assert header[:4] == ["R", "w", "g", "w_over_g"]
        assert rows[0][2] == math.pi / 2
        assert all(r[2] > math.pi / 2 for r in rows[1:])
        ratio = [r[3] for r in rows]
        assert ratio[2] < 1 < ratio[3]

    def test_critical(self, capsys):
        _, out, _ = run(["critical", "--R", "1.5,2,3,5,10"], capsys)
        _, _, rows = parse_csv(out)
        s = [r[1] for r in rows]
        assert all(a > b for a, b in zip(s, s[1:]))
        assert all(r[1] > math.pi / (r[0] - 1) for r in rows)

    def test_index_sweep_trend(self, capsys):
        _, out, _ = run(["index-sweep", "--eps", "0.2", "--w", "1,10", "--ladder", "100,200,500"], capsys)
        _, header, rows = parse_csv(out)
        g = {(r[2], int(r[3] if r[2] == 10 else r[4])): r[header.index("gamma")] for r in rows}
        sub = [r[header.index("gamma")] for r in rows if r[2] == 1.0]
        sup = [r[header.index("gamma")] for r in rows if r[2] == 10.0]
        assert min(sub) > 0.2
        assert sup[0] > sup[1] > sup[2]
        assert g

    def test_ladder_realized_ratio(self, capsys):
        _, out, _ = run(["index-sweep", "--eps", "0.1", "--w", "1.5,3", "--ladder", "100,200"], capsys)
        _, header, rows = parse_csv(out)
        for r in rows:
            assert r[header.index("realized_w")] == pytest.approx(r[2], rel=1e-2)
            assert r[header.index("realized_w")] == r[3] / r[4]

    def test_mode_export_disk(self, capsys):
        _, out, _ = run(["mode-export", "--resolution", "41"], capsys)
        meta, header, rows = parse_csv(out)
        assert header == ["r", "theta", "value"]
        assert meta["meta"]["envelope_argmax"] == pytest.approx(0.5, abs=0.05)
        vals = np.array([r[2] for r in rows])
        assert np.max(np.abs(vals)) <= 1.0

    def test_mode_export_annulus(self, capsys):
        _, out, _ = run(["mode-export", "--domain", "annulus", "--R", "3", "--l", "100", "--k", "10", "--resolution", "11"], capsys)
        meta, _, _ = parse_csv(out)
        assert meta["meta"]["envelope_argmax"] == pytest.approx(2.0, abs=0.1)

    def test_mode_export_collapse_at_origin(self, capsys):
        _, out, _ = run(["mode-export", "--l", "0", "--k", "5", "--resolution", "11"], capsys)
        _, _, rows = parse_csv(out)
        assert all(r[2] == 0.0 for r in rows if r[0] == 0.0)

    def test_zeros_table(self, capsys):
        _, out, _ = run(["zeros", "--nu", "0", "--k-max", "3"], capsys)
        _, header, rows = parse_csv(out)
        assert header == ["nu", "k", "zero"]
        assert rows[0][2] == pytest.approx(2.404825557695773, rel=1e-12)

    @pytest.mark.parametrize("family,limit", [("shell", None), ("shell-fixed-k", 1 / 3)])
    def test_convergence_shell(self, family, limit, capsys):
        code, out, _ = run(["convergence", "--family", family, "--quick"], capsys)
        assert code == 0
        _, header, rows = parse_csv(out)
        err = [r[header.index("abs_err")] for r in rows]
        assert all(a > b for a, b in zip(err, err[1:]))
        if limit is not None:
            assert rows[0][header.index("limit")] == pytest.approx(limit)


class TestConfigAndExitCodes:
    def test_config_file_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "h.cfg"
        cfg.write_text("# grid\nw = 2, 4\n")
        _, out, _ = run(["h-of-w", "--config", str(cfg)], capsys)
        assert json.loads(out.splitlines()[0][2:])["config"]["w"] == [2.0, 4.0]
        _, out, _ = run(["h-of-w", "--config", str(cfg), "--w", "7"], capsys)
        assert json.loads(out.splitlines()[0][2:])["config"]["w"] == [7.0]

    @pytest.mark.parametrize(
        "argv",
        [["h-of-w", "--w", "-1"], ["h-of-w", "--w", "abc"], ["h-of-w", "--config", "/nonexistent.cfg"],
         ["h-of-w", "--out", "/nonexistent/dir/out.csv"], ["h-of-w", "--workers", "0"], ["critical", "--R", "0.5"]],
    )
    def test_io_and_config_errors(self, argv, capsys):
        code, _, err = run(argv, capsys)
        assert code == 2 and err.startswith("eigloc:")

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("colour = red\n")
        assert run(["h-of-w", "--config", str(cfg)], capsys)[0] == 2

    def test_invariant_failure(self, capsys):
        code, _, err = run(["convergence", "--ladder", "2500:500;25:5"], capsys)
        assert code == 1 and "invariant" in err

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "h.csv"
        assert run(["h-of-w", "--out", str(path)], capsys)[0] == 0
        assert path.read_text().startswith("# ")


class TestDeterminism:
    def test_repeat_is_byte_identical(self, capsys):
        argv = ["g-of-w", "--R", "2,3", "--w", "0,0.5,3"]
        assert run(argv, capsys)[1] == run(argv, capsys)[1]

    def test_workers_do_not_change_output(self, capsys):
        argv = ["index-sweep", "--eps", "0.1", "--w", "1,10", "--ladder", "100,200"]
        one = run(argv + ["--workers", "1"], capsys)[1]
        three = run(argv + ["--workers", "3"], capsys)[1]
        assert one == three


class TestSelftest:
    def test_quick_passes_in_time(self):
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "eigloc", "selftest", "--quick"], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stdout + proc.stderr
        assert time.perf_counter() - t0 < 30
        groups = [line.split()[:2] for line in proc.stdout.splitlines()]
        assert {g for g, _ in groups} == set(cli.SELFTEST_GROUPS)
        assert all(status == "PASS" for _, status in groups)

    def test_corrupted_coefficients_fail_kernel(self, monkeypatch):
        bad = list(specfun._DEBYE_U)
        bad[1] = bad[1] * 1.5
        monkeypatch.setattr(specfun, "_DEBYE_U", tuple(bad))
        out = io.StringIO()
        assert cli.run_selftest(quick=True, out=out) is False
        lines = dict(line.split()[:2] for line in out.getvalue().splitlines())
        assert lines["kernel"] == "FAIL"

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["--version"])
        assert info.value.code == 0
        assert "eigloc" in capsys.readouterr().out
