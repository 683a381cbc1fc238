import json

import numpy as np
import pytest

from matschro.cli import main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path), "--quiet"])


@pytest.mark.slow
def test_verify_cubic(tmp_path):
    assert run(tmp_path, "verify") == 0
    data = json.loads((tmp_path / "verify.json").read_text())
    assert all(r["pass"] for r in data["reports"])
    assert len(data["reports"]) == 29
    assert len(data["provenance"]["config_hash"]) == 12


def test_verify_quintic_is_regular(tmp_path):
    assert run(tmp_path, "verify", "--sigma", "2", "--grid-n", "512") == 0
    data = json.loads((tmp_path / "verify.json").read_text())
    reg = next(r for r in data["reports"] if r["name"] == "threshold_regular")
    assert reg["pass"] and reg["details"]["kind"] == "Regular"


def test_verify_underresolved_grid_is_usage_error(tmp_path):
    assert run(tmp_path, "verify", "--grid-n", "128") == 2


def test_bad_arguments(tmp_path):
    assert main(["nonsense"]) == 2
    assert run(tmp_path, "verify", "--grid-n", "1000") == 2
    assert run(tmp_path, "verify", "--config", str(tmp_path / "nope.cfg")) == 2


def test_resonance_outputs(tmp_path):
    assert run(tmp_path, "resonance") == 0
    rep = json.loads((tmp_path / "resonance.json").read_text())
    assert rep["kind"] == "Irregular" and rep["rank"] == 1
    assert rep["c0"][0] == pytest.approx(1.0, abs=1e-6)
    assert rep["eta"] == pytest.approx(5 / 24, abs=1e-5)
    psi = np.loadtxt(tmp_path / "psi.dat")
    assert psi.shape == (1024, 5)
    assert (tmp_path / "psi.dat").read_text().startswith("# config_hash=")


def test_resonance_quintic(tmp_path):
    assert run(tmp_path, "resonance", "--sigma", "2", "--grid-n", "512") == 0
    rep = json.loads((tmp_path / "resonance.json").read_text())
    assert rep["kind"] == "Regular"
    assert not (tmp_path / "psi.dat").exists()


def test_tabulated_violation_is_usage_error(tmp_path):
    x = np.linspace(-15, 15, 301)
    table = tmp_path / "pot.txt"
    np.savetxt(table, np.column_stack([x, np.exp(-x ** 2), 3 * np.exp(-x ** 2)]))
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"potential = tabulated\npotential_file = {table}\nn = 256\n")
    assert run(tmp_path, "resonance", "--config", str(cfg)) == 2


def test_resolvent_dump(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 256\ndump_stride = 32\n")
    assert run(tmp_path, "resolvent-dump", "--config", str(cfg)) == 0
    lines = (tmp_path / "resolvent.csv").read_text().splitlines()
    assert lines[0].startswith("# matschro-kernel-csv v1 config_hash=")
    assert len(lines) == 2 + 4 * 8 * 8
    diag = np.loadtxt(tmp_path / "resolvent_diag11.dat")
    assert diag.shape == (256, 3)


def test_evolve(tmp_path):
    assert run(tmp_path, "evolve", "--grid-n", "1024", "--half-width", "100", "--t-min", "1", "--t-max", "4") == 0
    rows = np.loadtxt(tmp_path / "evolve.dat")
    assert rows.shape == (24, 4)
    assert np.all(np.diff(rows[:, 0]) > 0)
    final = np.loadtxt(tmp_path / "evolve_final.dat")
    assert final.shape == (1024, 3)
    assert run(tmp_path, "evolve", "--initial", "sideways", "--grid-n", "1024", "--half-width", "100") == 2


def test_decay_free_with_truncation(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("potential = zero\nevolution_half_width = 300\nevolution_n = 4096\nsponge = 0\n"
                   "t_count = 16\n")
    code = run(tmp_path, "decay", "--config", str(cfg))
    out = json.loads((tmp_path / "decay.json").read_text())
    assert out["flags"]["truncated"]
    assert out["brackets"]["unweighted"]["pass"]
    assert code == (0 if all(b["pass"] for b in out["brackets"].values()) else 1)
    assert (tmp_path / "decay_unweighted_sup.dat").exists()


def test_decay_empty_window_fails(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("potential = zero\nevolution_half_width = 30\nevolution_n = 512\nsponge = 0\nt_count = 12\n")
    assert run(tmp_path, "decay", "--config", str(cfg)) == 1
