import io
import subprocess
import sys

import numpy as np
import pytest

from qsvdwm.cli import EXIT_CAPACITY, EXIT_IO, EXIT_OK, EXIT_USAGE, run
from qsvdwm.codec import load_bits, load_ppm, save_bits, save_ppm
from qsvdwm.transforms import OpLedger


def call(*argv: str) -> tuple[int, str]:
    out = io.StringIO()
    return run(list(argv), out), out.getvalue()


@pytest.fixture
def files(tmp_path, natural, rng):
    host = tmp_path / "host.ppm"
    save_ppm(natural, host)
    w = rng.integers(0, 2, (16, 16)).astype(np.uint8)
    save_bits(w, tmp_path / "w.pbm")
    return tmp_path


def test_embed_extract_round_trip(files):
    d = files
    code, text = call("embed", "--host", str(d / "host.ppm"), "--payload", str(d / "w.pbm"), "--key", "0x2A",
                      "--threshold", "0.02", "--out", str(d / "m.ppm"), "--report", str(d / "r.csv"))
    assert code == EXIT_OK and text.startswith("psnr ")
    assert (d / "r.csv").read_text().startswith("block_r,block_c,unit,bit,margin,delta1,delta2\n")
    code, text = call("extract", "--in", str(d / "m.ppm"), "--key", "42", "--dims", "16x16",
                      "--out", str(d / "got.pbm"), "--compare", str(d / "w.pbm"))
    assert code == EXIT_OK and text == "ber 0.0000\n"
    assert np.array_equal(load_bits(d / "got.pbm"), load_bits(d / "w.pbm"))


def test_triple_round_trip(files):
    d = files
    assert call("embed", "--host", str(d / "host.ppm"), "--payload", str(d / "w.pbm"), "--key", "7",
                "--triple", "--out", str(d / "m.ppm"))[0] == EXIT_OK
    outs = [str(d / f"g{a}.txt") for a in "ijk"]
    code, text = call("extract", "--in", str(d / "m.ppm"), "--key", "7", "--dims", "16x16", "--triple",
                      "--out", *outs, "--compare", *[str(d / "w.pbm")] * 3)
    assert code == EXIT_OK and text == "ber 0.0000\n" * 3


def test_attack_and_metrics(files):
    d = files
    code, text = call("attack", "--in", str(d / "host.ppm"), "--spec", "jpeg:40", "--out", str(d / "a.ppm"))
    assert code == EXIT_OK and text.startswith("psnr ")
    code, text = call("metrics", "--a", str(d / "host.ppm"), "--b", str(d / "host.ppm"))
    assert (code, text) == (EXIT_OK, "psnr inf\n")
    code, text = call("metrics", "--a", str(d / "host.ppm"), "--b", str(d / "a.ppm"))
    assert code == EXIT_OK and 25 < float(text.split()[1]) < 45
    code, text = call("metrics", "--bits", str(d / "w.pbm"), str(d / "w.pbm"))
    assert (code, text) == (EXIT_OK, "ber 0.0000\n")


def test_noise_attack_seed_handling(files):
    d = files
    args = ["attack", "--in", str(d / "host.ppm"), "--key", "5"]
    call(*args, "--spec", "speckle:0.05", "--out", str(d / "a.ppm"))
    call(*args, "--spec", "speckle:0.05", "--out", str(d / "b.ppm"))
    call(*args, "--spec", "speckle:0.05,99", "--out", str(d / "c.ppm"))
    assert (d / "a.ppm").read_bytes() == (d / "b.ppm").read_bytes() != (d / "c.ppm").read_bytes()


def test_analyze_nc(files):
    code, _ = call("analyze-nc", "--in", str(files / "host.ppm"), "--out", str(files / "nc.csv"))
    lines = (files / "nc.csv").read_text().splitlines()
    assert code == EXIT_OK and lines[0] == "unit,x,y,nc" and len(lines) == 19
    assert lines[4].startswith("i,u21,u31,")
    code, text = call("analyze-nc", "--in", str(files / "host.ppm"))
    assert text == (files / "nc.csv").read_text()


def test_bench(tmp_path):
    code, _ = call("bench-qsvd", "--a", "3", "--b", "2", "--kmax", "3", "--out", str(tmp_path / "b.csv"),
                   "--ledger", str(tmp_path / "l.txt"))
    rows = (tmp_path / "b.csv").read_text().splitlines()
    assert code == EXIT_OK and rows[0] == "k,m,n,wall_ns,flops,assignments,residual" and len(rows) == 4
    assert rows[3].startswith("3,9,6,")
    assert OpLedger.parse((tmp_path / "l.txt").read_text()).real_flops > 0


def test_reproduce_table2(files):
    code, _ = call("reproduce", "--suite", "table2", "--images", str(files), "--out", str(files / "t2.csv"))
    lines = (files / "t2.csv").read_text().splitlines()
    assert code == EXIT_OK and lines[0] == "image,unit,x,y,nc" and len(lines) == 19


def test_reproduce_table3(files, tmp_path):
    code, _ = call("reproduce", "--suite", "table3", "--images", str(files), "--payload", str(files / "w.pbm"),
                   "--out", str(files / "t3.csv"))
    lines = (files / "t3.csv").read_text().splitlines()
    assert code == EXIT_OK and lines[0] == "image,T,attack,ber,psnr" and len(lines) == 16
    assert lines[1].startswith("host,0.035,none,0.0000,")


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["embed", "--bogus"],
        ["extract", "--in", "x.ppm", "--key", "1", "--dims", "axb", "--out", "o.pbm"],
        ["attack", "--in", "x.ppm", "--spec", "blur:3", "--out", "o.ppm"],
        ["embed", "--host", "h", "--payload", "p", "--key", "-3", "--out", "o"],
        ["metrics"],
    ],
)
def test_usage_errors(argv, capsys):
    code, _ = call(*argv)
    assert code == EXIT_USAGE
    assert capsys.readouterr().err


def test_io_errors(files):
    d = files
    assert call("metrics", "--a", str(d / "missing.ppm"), "--b", str(d / "host.ppm"))[0] == EXIT_IO
    (d / "bad.ppm").write_bytes(b"P6\n2 2\n255\n\x00")
    assert call("attack", "--in", str(d / "bad.ppm"), "--spec", "crop:0.1", "--out", str(d / "o.ppm"))[0] == EXIT_IO
    assert not (d / "o.ppm").exists()


def test_capacity_error_leaves_no_output(files):
    d = files
    save_bits(np.ones((40, 40), dtype=np.uint8), d / "big.pbm")
    code, _ = call("embed", "--host", str(d / "host.ppm"), "--payload", str(d / "big.pbm"), "--key", "1",
                   "--out", str(d / "m.ppm"), "--report", str(d / "r.csv"))
    assert code == EXIT_CAPACITY
    assert not (d / "m.ppm").exists() and not (d / "r.csv").exists()
    assert call("extract", "--in", str(d / "host.ppm"), "--key", "1", "--dims", "64x64", "--out", str(d / "x.pbm"))[0] == EXIT_CAPACITY
    assert not list(d.glob(".*"))


def test_outputs_independent_of_threads(files):
    d = files
    for t in ("1", "3"):
        call("embed", "--host", str(d / "host.ppm"), "--payload", str(d / "w.pbm"), "--key", "9",
             "--out", str(d / f"m{t}.ppm"), "--report", str(d / f"r{t}.csv"), "--threads", t)
    assert (d / "m1.ppm").read_bytes() == (d / "m3.ppm").read_bytes()
    assert (d / "r1.csv").read_text() == (d / "r3.csv").read_text()


def test_console_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "qsvdwm.cli", "metrics", "--a", str(files / "host.ppm"),
                           "--b", str(files / "host.ppm")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "psnr inf\n"
    proc = subprocess.run([sys.executable, "-m", "qsvdwm.cli", "--nope"], capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE and "usage:" in proc.stderr


def test_embedded_host_loads(files):
    call("embed", "--host", str(files / "host.ppm"), "--payload", str(files / "w.pbm"), "--key", "1",
         "--out", str(files / "m.ppm"))
    assert load_ppm(files / "m.ppm").shape == load_ppm(files / "host.ppm").shape
