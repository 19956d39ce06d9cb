import os
import re
import shutil
import signal
import socket
import subprocess
import sys
import time

import pytest
import requests
from binfecund.build.toy import load_toy_program, toy_compile
from binfecund.cli import main
from binfecund.constants import _CRASH_LOG_FILENAME
from binfecund.flags.catalog import load_catalog
from binfecund.flags.mapping import FlagSelection, map_seed

from tests.utils import SIX_FLAGS, make_toy

_CAMPAIGN = """
program_id = "toy"
catalog = "toy.catalog"
source = "toy.json"
strategy = "na"
compressor = "lzma:0"
progress_interval = {progress}

[budget]
iterations = {iterations}

[compiler]
backend = "toy"
"""


def _campaign(tmp_path, iterations=2000, progress=500, **toy):
    make_toy(tmp_path, **(toy or SIX_FLAGS))
    path = tmp_path / "campaign.toml"
    path.write_text(_CAMPAIGN.format(iterations=iterations, progress=progress))
    return str(path)


def test_run(tmp_path, capsys):
    assert main(["run", "-c", _campaign(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1] == "unique=64"
    assert [line.split()[0] for line in lines[:-1]] == [f"iterations={i}" for i in (500, 1000, 1500, 2000)]


def test_run_zero_iterations(tmp_path, capsys):
    assert main(["run", "-c", _campaign(tmp_path, iterations=0)]) == 0
    assert capsys.readouterr().out.splitlines() == ["unique=0"]


def test_progress_is_deterministic(tmp_path, capsys):
    outputs = []
    for name in ("a", "b"):
        assert main(["run", "-c", _campaign(tmp_path / name, iterations=300, progress=100)]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
    assert len(outputs[0].splitlines()) == 4


def test_run_missing_catalog(tmp_path, capsys):
    path = _campaign(tmp_path)
    os.remove(tmp_path / "toy.catalog")
    assert main(["run", "-c", path]) == 2
    err = capsys.readouterr().err
    assert err.startswith("error: ")
    assert str(tmp_path / "toy.catalog") in err


def test_run_resume(tmp_path, capsys):
    path = _campaign(tmp_path, iterations=150, progress=1000)
    assert main(["run", "-c", path]) == 0
    assert main(["run", "-c", path]) == 2
    assert "resume = true" in capsys.readouterr().err
    assert main(["run", "-c", path, "--resume"]) == 0


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0
    assert capsys.readouterr().out.startswith("binfecund ")


def test_report(tmp_path, capsys):
    assert main(["run", "-c", _campaign(tmp_path, iterations=200)]) == 0
    capsys.readouterr()
    program = load_toy_program(str(tmp_path / "toy.json"))
    catalog = load_catalog(str(tmp_path / "toy.catalog"))
    o0 = tmp_path / "toy.O0"
    o0.write_bytes(toy_compile(program, FlagSelection.empty(catalog)))

    assert main(["report", "-a", str(tmp_path / "archive"), "--o0", f"toy={o0}"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("program_id,content_hash,ncd_o0,ncd_o3\n")
    assert re.search(r"^toy,median,[0-9.e-]+,$", out, re.MULTILINE)

    assert main(["report", "-a", str(tmp_path / "archive")]) == 1
    captured = capsys.readouterr()
    assert "toy,error:missing-o0-baseline" in captured.out
    assert "error: toy: missing O0 baseline" in captured.err

    assert main(["report", "-a", str(tmp_path / "archive"), "--o0", f"toy={tmp_path / 'gone.O0'}"]) == 1
    captured = capsys.readouterr()
    assert "toy,error:unreadable-baseline" in captured.out
    assert "error: toy: unreadable baseline:" in captured.err


def test_crashes(tmp_path, capsys):
    toy = dict(num_flags=6, effective=range(6), crash_pairs=[(0, 1)])
    assert main(["run", "-c", _campaign(tmp_path, iterations=200, **toy)]) == 0
    capsys.readouterr()
    assert os.path.isfile(tmp_path / "archive" / "toy" / _CRASH_LOG_FILENAME)

    assert main(["crashes", "-a", str(tmp_path / "archive")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("count\tsignal")
    assert len(lines) == 2
    assert "\tSIGSEGV\t" in lines[1]

    assert main(["crashes", "-a", str(tmp_path / "empty")]) == 0
    assert capsys.readouterr().out.strip() == "no crashes recorded"


def test_catalog_check(tmp_path, capsys, frame_pointer_catalog):
    path = tmp_path / "flags.catalog"
    path.write_text("# options\n" + frame_pointer_catalog)
    assert main(["catalog-check", str(path)]) == 0
    assert capsys.readouterr().out.strip() == "flags=3 switch=1 enum=1 uint=1 seed_width=4"

    assert main(["catalog-check", str(path), "--normalized"]) == 0
    assert capsys.readouterr().out == frame_pointer_catalog

    path.write_text("-fbroken\tfloat\n")
    assert main(["catalog-check", str(path)]) == 2
    assert "line 1" in capsys.readouterr().err


def _serve(tmp_path, *args):
    config = tmp_path / "service.toml"
    config.write_text('[service]\narchive_root = "served"\n')
    proc = subprocess.Popen(
        [sys.executable, "-m", "binfecund", "serve", "-c", str(config), *args],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    return proc


def _listening(proc) -> int:
    line = proc.stdout.readline()
    match = re.fullmatch(r"listening on http://127\.0\.0\.1:(\d+)\n", line)
    assert match, line + proc.stderr.read()
    return int(match.group(1))


def _toy_binary(tmp_path) -> bytes:
    make_toy(tmp_path / "toy", **SIX_FLAGS)
    program = load_toy_program(str(tmp_path / "toy" / "toy.json"))
    catalog = load_catalog(str(tmp_path / "toy" / "toy.catalog"))
    return toy_compile(program, map_seed(catalog, b"\x01\x00\x01"))


def test_serve(tmp_path):
    proc = _serve(tmp_path, "--port", "0")
    try:
        port = _listening(proc)
        with requests.Session() as session:
            response = session.post(f"http://127.0.0.1:{port}/v1/programs/toy/score", data=_toy_binary(tmp_path))
            assert response.status_code == 200
            assert response.json()["unique"] is True
            assert session.get(f"http://127.0.0.1:{port}/v1/programs/toy/stats").json()["unique_binaries"] == 1
    finally:
        proc.send_signal(signal.SIGTERM)
        proc.communicate(timeout=20)
    assert proc.returncode == 0
    assert os.path.isdir(tmp_path / "served" / "toy" / "bin")


def test_serve_port_in_use(tmp_path):
    with socket.socket() as busy:
        busy.bind(("127.0.0.1", 0))
        busy.listen(1)
        proc = _serve(tmp_path, "--port", str(busy.getsockname()[1]))
        _, err = proc.communicate(timeout=20)
    assert proc.returncode == 1
    assert "error:" in err


def test_serve_finishes_in_flight_requests(tmp_path):
    body = _toy_binary(tmp_path)
    proc = _serve(tmp_path, "--port", "0")
    try:
        port = _listening(proc)
        with socket.create_connection(("127.0.0.1", port), timeout=20) as conn:
            conn.sendall(
                b"POST /v1/programs/toy/score HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n"
                + f"Content-Type: application/octet-stream\r\nContent-Length: {len(body)}\r\n\r\n".encode()
                + body[:64]
            )
            time.sleep(0.5)
            proc.send_signal(signal.SIGTERM)
            time.sleep(0.5)
            conn.sendall(body[64:])
            response = b""
            while chunk := conn.recv(4096):
                response += chunk
        assert b" 200 " in response.split(b"\r\n", 1)[0]
        assert b'"unique":true' in response.replace(b" ", b"")
    finally:
        proc.communicate(timeout=20)
    assert proc.returncode == 0


@pytest.mark.integration
@pytest.mark.skipif(shutil.which("cc") is None, reason="needs a C compiler")
@pytest.mark.skipif(not os.getenv("BINFECUND_INTEGRATION"), reason="set BINFECUND_INTEGRATION=1 to build with cc")
def test_run_with_a_real_compiler(tmp_path, capsys):
    (tmp_path / "main.c").write_text(
        "int square(int x) { return x * x; }\nint main(int argc, char **argv) { return square(argc) - 1; }\n"
    )
    (tmp_path / "flags.catalog").write_text(
        "-fomit-frame-pointer\tswitch\n-finline-functions\tswitch\n-funroll-loops\tswitch\n-O\tswitch\n"
    )
    (tmp_path / "campaign.toml").write_text(
        'program_id = "square"\ncatalog = "flags.catalog"\nsource = "main.c"\nstrategy = "pm"\n'
        "[budget]\niterations = 20\n"
        '[compiler]\ninvocation_template = "cc -O0 {flags} -c {input} -o {output}"\n'
    )
    assert main(["run", "-c", str(tmp_path / "campaign.toml")]) == 0
    unique = int(capsys.readouterr().out.splitlines()[-1].split("=")[1])
    assert 1 <= unique <= 16
