import re

import pytest

from svbsc import report as rp
from svbsc.experiment import RESULT_COLUMNS

HEADER = ",".join(RESULT_COLUMNS)


def write(path, rows, h="abc"):
    lines = [HEADER] + [
        f"{s},{mode},{eps},{codec},100,{ber},{viol},{se},{ps},0.0,0,{inf},{h}" for s, mode, eps, codec, ber, viol, se, ps, inf in rows
    ]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_single_row_chart(tmp_path):
    p = write(tmp_path / "one.csv", [(10.0, "perfect", 0.0, "c", 0.01, 0.0, 3.0, 30.0, 0.0)])
    checks, _ = rp.build_report({"one": rp.read_results(p)}, tmp_path / "out")
    svg = (tmp_path / "out" / "ber.svg").read_text()
    assert svg.count("<circle") == 1 and svg.startswith("<svg")
    assert (tmp_path / "out" / "summary.txt").exists()


def test_two_inputs_legend_uses_file_labels(tmp_path):
    a = write(tmp_path / "alpha.csv", [(0.0, "perfect", 0.0, "c", 0.01, 0, 1, 30, 0), (5.0, "perfect", 0.0, "c", 0.02, 0, 2, 31, 0)])
    b = write(tmp_path / "beta.csv", [(0.0, "perfect", 0.0, "c", 0.03, 0, 1, 29, 0)])
    rp.build_report({"alpha": rp.read_results(a), "beta": rp.read_results(b)}, tmp_path / "out")
    svg = (tmp_path / "out" / "psnr.svg").read_text()
    assert re.findall(r'class="legend"[^>]*>([^<]*)<', svg) == ["alpha", "beta"]


def test_zero_ber_plotted_at_floor(tmp_path):
    p = write(tmp_path / "z.csv", [(0.0, "perfect", 0.0, "c", 0.0, 0, 1, 30, 0), (5.0, "perfect", 0.0, "c", 0.01, 0, 2, 31, 0)])
    rp.build_report({"z": rp.read_results(p)}, tmp_path / "out")
    svg = (tmp_path / "out" / "ber.svg").read_text()
    assert ">1e-7<" in svg


def test_mixed_hashes_refused_unless_forced(tmp_path):
    a = rp.read_results(write(tmp_path / "a.csv", [(0.0, "perfect", 0.0, "c", 0.01, 0, 1, 30, 0)], h="h1"))
    b = rp.read_results(write(tmp_path / "b.csv", [(0.0, "perfect", 0.0, "c", 0.01, 0, 1, 30, 0)], h="h2"))
    with pytest.raises(rp.MixedConfigError):
        rp.build_report({"a": a, "b": b}, tmp_path / "out")
    rp.build_report({"a": a, "b": b}, tmp_path / "out", force=True)


def test_schema_mismatch(tmp_path):
    (tmp_path / "bad.csv").write_text("snr_db,foo\n1,2\n")
    with pytest.raises(rp.SchemaError):
        rp.read_results(tmp_path / "bad.csv")
    p = write(tmp_path / "ok.csv", [])
    with pytest.raises(rp.SchemaError):
        rp.read_results(p)


def test_checks_detect_failures():
    Row = rp.Row
    rows = [
        Row(10.0, "perfect", 0.0, "code3-ladder", 2000, 0.06, 0.3, 3.0, 40.0, 0, 0, 0.0, "h"),
        Row(12.0, "perfect", 0.0, "code3-ladder", 2000, 0.01, 0.0, 4.0, 38.0, 0, 0, 0.0, "h"),
    ]
    names = {c.name: c.passed for c in rp.run_checks(rows)}
    assert names["perfect-CSI BER <= q0"] is False
    assert names["PSNR monotone in SNR (code3-ladder)"] is False
    assert names["Pr[q > q0] <= eps"] is None
