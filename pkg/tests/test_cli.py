import json
import os
import re
import subprocess
import sys

from conftest import REFERENCE_SCENE_PATH
from doorteleop.protocol import LinkClient, MessageType
from doorteleop.scripting import plan_width_script, serialize_script
from doorteleop.rgbd.scene import load_scene_file


def run_cli(*args, **kwargs):
    return subprocess.run(
        [sys.executable, "-m", "doorteleop.cli", *args],
        capture_output=True,
        text=True,
        timeout=120,
        **kwargs,
    )


def test_render_once(tmp_path):
    color = tmp_path / "c.png"
    depth = tmp_path / "d.png"
    result = run_cli(
        "render-once",
        "--scene", str(REFERENCE_SCENE_PATH),
        "--pose", "0.3,0,0.05",
        "--out-color", str(color),
        "--out-depth", str(depth),
    )
    assert result.returncode == 0, result.stderr
    assert color.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert depth.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_run_script_cli(tmp_path):
    scene = load_scene_file(REFERENCE_SCENE_PATH)
    script = tmp_path / "width.jsonl"
    script.write_text(serialize_script(plan_width_script(scene)))
    out = tmp_path / "report.json"
    result = run_cli(
        "run-script",
        "--scene", str(REFERENCE_SCENE_PATH),
        "--script", str(script),
        "--out", str(out),
    )
    assert result.returncode == 0, result.stderr
    report = json.loads(out.read_text())
    assert report["ok"]
    assert 0.89 <= report["final"]["measured"]["door_width"] <= 0.91


def test_bad_pose_argument():
    result = run_cli(
        "render-once",
        "--scene", str(REFERENCE_SCENE_PATH),
        "--pose", "nonsense",
        "--out-color", "/tmp/x.png",
        "--out-depth", "/tmp/y.png",
    )
    assert result.returncode == 2
    assert "x,y,heading" in result.stderr


def test_numba_disable_flag_selects_fallback(tmp_path):
    env = dict(os.environ, DOORTELEOP_DISABLE_NUMBA="1")
    probe = subprocess.run(
        [
            sys.executable,
            "-c",
            "from doorteleop.rgbd import kernels; print(kernels.HAVE_NUMBA)",
        ],
        capture_output=True,
        text=True,
        env=env,
        timeout=120,
    )
    assert probe.stdout.strip() == "False"
    color = tmp_path / "fb.png"
    depth = tmp_path / "fbd.png"
    result = subprocess.run(
        [
            sys.executable, "-m", "doorteleop.cli", "render-once",
            "--scene", str(REFERENCE_SCENE_PATH),
            "--out-color", str(color),
            "--out-depth", str(depth),
        ],
        capture_output=True,
        text=True,
        env=env,
        timeout=120,
    )
    assert result.returncode == 0, result.stderr
    assert color.exists() and depth.exists()


def test_serve_and_slave_stub_end_to_end(tmp_path):
    stub = subprocess.Popen(
        [sys.executable, "-m", "doorteleop.cli", "slave-stub", "--listen", "127.0.0.1:0"],
        stdout=subprocess.PIPE,
        text=True,
    )
    serve = None
    try:
        stub_line = stub.stdout.readline()
        stub_addr = re.search(r"listening on (\S+)", stub_line).group(1)

        serve = subprocess.Popen(
            [
                sys.executable, "-m", "doorteleop.cli", "serve",
                "--scene", str(REFERENCE_SCENE_PATH),
                "--listen", "127.0.0.1:0",
                "--slave", stub_addr,
            ],
            stdout=subprocess.PIPE,
            text=True,
        )
        serve_line = serve.stdout.readline()
        serve_addr = re.search(r"serving on (\S+?),", serve_line + ",").group(1)

        import socket

        from doorteleop.protocol import read_payload, write_payload

        sock = socket.create_connection(
            (serve_addr.rsplit(":", 1)[0], int(serve_addr.rsplit(":", 1)[1])),
            timeout=10.0,
        )
        sock.settimeout(10.0)
        hello = read_payload(sock)
        assert hello["kind"] == "hello" and hello["role"] == "controller"
        write_payload(
            sock, {"kind": "action", "id": 1, "action": {"op": "hover", "u": 320, "v": 240}}
        )
        while True:
            msg = read_payload(sock)
            if msg.get("kind") == "result":
                assert msg["ok"]
                break
        sock.close()
    finally:
        if serve is not None:
            serve.terminate()
        stub.terminate()
        if serve is not None:
            serve.wait(timeout=10)
        stub.wait(timeout=10)
