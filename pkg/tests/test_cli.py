import subprocess
import sys

import pytest

TORPDE = [sys.executable, "-m", "torpde"]


def run_cli(*args, cwd=None):
    return subprocess.run(
        TORPDE + list(args), capture_output=True, text=True, cwd=cwd, timeout=300
    )


@pytest.fixture
def exact_config(tmp_path):
    path = tmp_path / "exact.txt"
    path.write_text(
        "scenario = exact_mode\npoints = 64\ncutoff = 31\nnu = 2.0\nxi0 = 1\n"
        "dt = 0.001\nhorizon = 1.0\n"
    )
    return path


def test_list_shows_scenarios_and_tags():
    proc = run_cli("list")
    assert proc.returncode == 0
    for name in ("exact_mode", "manufactured", "energy_study", "symbol_order",
                 "calculus_check", "symmetrizer_check"):
        assert name in proc.stdout
    assert "Corollary, fractional wave" in proc.stdout
    assert "toroidal symbol inequalities" in proc.stdout
    assert "asymptotic expansion" in proc.stdout


def test_run_pass_exit_zero(exact_config, tmp_path):
    out = tmp_path / "out"
    proc = run_cli("run", str(exact_config), "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    assert (out / "exact_mode.csv").exists()
    assert "[PASS]" in proc.stdout


def test_invalid_config_exit_one(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("scenario = exact_mode\npoints = 64\ncutoff = 40\n")
    proc = run_cli("run", str(bad))
    assert proc.returncode == 1
    assert "aliasing" in proc.stderr


def test_unknown_key_exit_one(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("scenario = exact_mode\nwibble = 3\n")
    proc = run_cli("run", str(bad))
    assert proc.returncode == 1


def test_missing_file_exit_one(tmp_path):
    proc = run_cli("run", str(tmp_path / "nope.txt"))
    assert proc.returncode == 1


def test_negative_control_exit_two(tmp_path):
    cfg = tmp_path / "neg.txt"
    cfg.write_text(
        "scenario = symmetrizer_check\npoints = 64\ncutoff = 31\nnegative_control = true\n"
    )
    proc = run_cli("run", str(cfg), "--out", str(tmp_path / "out"))
    assert proc.returncode == 2
    assert "[FAIL]" in proc.stdout


def test_deterministic_csv_bytes(exact_config, tmp_path):
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert run_cli("run", str(exact_config), "--out", str(out1)).returncode == 0
    assert run_cli("run", str(exact_config), "--out", str(out2)).returncode == 0
    for name in ("exact_mode.csv", "exact_mode_ledger.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_plot_flag_writes_svg(exact_config, tmp_path):
    out = tmp_path / "out"
    proc = run_cli("run", str(exact_config), "--out", str(out), "--plot")
    assert proc.returncode == 0
    assert (out / "exact_mode.svg").exists()


def test_seed_override_changes_nothing_for_deterministic_scenario(exact_config, tmp_path):
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    run_cli("run", str(exact_config), "--out", str(out1), "--seed", "1")
    run_cli("run", str(exact_config), "--out", str(out2), "--seed", "99")
    assert (out1 / "exact_mode.csv").read_bytes() == (out2 / "exact_mode.csv").read_bytes()


def test_reference_exact_mode_config(tmp_path):
    # the canonical configuration: n=1, G=128, N=63, nu=2, xi0=1, T=1, dt=1e-3
    cfg = tmp_path / "reference.txt"
    cfg.write_text(
        "scenario = exact_mode\npoints = 128\ncutoff = 63\nnu = 2.0\nxi0 = 1\n"
        "dt = 0.001\nhorizon = 1.0\n"
    )
    proc = run_cli("run", str(cfg), "--out", str(tmp_path / "out"))
    assert proc.returncode == 0, proc.stderr


def test_thin_client_against_live_server(exact_config, tmp_path):
    import socket
    import threading
    import time

    import uvicorn

    from torpde.cli import main
    from torpde.service import app

    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        deadline = time.time() + 15.0
        while not server.started:
            if time.time() > deadline:
                pytest.fail("service did not start")
            time.sleep(0.05)
        out_local = tmp_path / "local"
        out_remote = tmp_path / "remote"
        assert main(["run", str(exact_config), "--out", str(out_local)]) == 0
        code = main(
            ["run", str(exact_config), "--out", str(out_remote),
             "--server", f"http://127.0.0.1:{port}"]
        )
        assert code == 0
        # the thin client writes exactly the bytes the service produced
        assert (out_remote / "exact_mode.csv").read_bytes() == (
            out_local / "exact_mode.csv"
        ).read_bytes()
    finally:
        server.should_exit = True
        thread.join(timeout=10.0)
