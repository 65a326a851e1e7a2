import json
import subprocess
import sys

import pytest

from certibif.bifurcation import BifCertificate
from certibif.cli import main


def test_transcritical_prints_location(tmp_path, capsys):
    rc = main(["--out", str(tmp_path), "transcritical"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "72.22222222222" in out
    assert (tmp_path / "transcritical.json").exists()


def test_farey_prints_fraction(capsys):
    rc = main(["farey", "0.126", "0.129"])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "5/39"


def test_unwritable_output_dir_is_usage_error(capsys):
    rc = main(["--out", "/proc/no-such-dir/x", "transcritical"])
    assert rc == 2


def test_bad_flags_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["branch", "--no-such-flag"])
    assert exc.value.code == 2


def test_simulate_deterministic(tmp_path, capsys):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        rc = main(["--out", str(out), "simulate", "--R", "29.15",
                   "--years", "50", "--x0", "density:1500"])
        assert rc == 0
    assert (a / "simulate.csv").read_bytes() == (b / "simulate.csv").read_bytes()


def test_simulate_random_x0_seeded(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out, seed in ((a, "7"), (b, "7")):
        rc = main(["--out", str(out), "--seed", seed, "simulate", "--R", "100",
                   "--years", "10", "--x0", "random"])
        assert rc == 0
    assert (a / "simulate.csv").read_bytes() == (b / "simulate.csv").read_bytes()


def test_validate_sn_json_roundtrip(tmp_path, capsys):
    rc = main(["--out", str(tmp_path), "validate-sn"])
    assert rc == 0
    blob = (tmp_path / "sn_certificate.json").read_text()
    cert = BifCertificate.from_json_dict(json.loads(blob))
    assert json.loads(cert.dumps()) == json.loads(blob)
    assert cert.delta_accuracy <= 1e-10


def test_validate_ns_with_anchor_file(tmp_path, capsys, ns_cert):
    anchor_path = tmp_path / "anchor.json"
    anchor_path.write_text(json.dumps([repr(v) for v in ns_cert.anchor]))
    rc = main(["--out", str(tmp_path), "validate-ns", "--anchor", str(anchor_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "Neimark-Sacker certified" in out


def test_diagram_branch_structure(tmp_path, capsys):
    rc = main(["--out", str(tmp_path), "diagram", "--points", "400"])
    assert rc == 0
    lines = (tmp_path / "diagram.csv").read_text().splitlines()
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    iR, iP = header.index("R"), header.index("P")
    istab, ibr = header.index("stability"), header.index("branch")
    trivial = [r for r in rows if r[ibr] == "trivial"]
    assert all(float(r[iP]) == 0.0 for r in trivial)
    # trivial branch flips stability at R* = 72.22
    flips = [(float(a[iR]) + float(b[iR])) / 2
             for a, b in zip(trivial[:-1], trivial[1:]) if a[istab] != b[istab]]
    assert len(flips) == 1 and abs(flips[0] - 72.222) < 1.0
    # nontrivial branch flips near the Neimark-Sacker point
    nontriv = [r for r in rows if r[ibr] == "nontrivial"]
    flips = [(float(a[iR]) + float(b[iR])) / 2
             for a, b in zip(nontriv[:-1], nontriv[1:]) if a[istab] != b[istab]]
    assert any(abs(f - 154.1) < 2.0 for f in flips)


def test_rotation_csv(tmp_path, capsys):
    rc = main(["--out", str(tmp_path), "rotation", "--R-range", "160:160:1",
               "--iterates", "20000", "--skip", "5000"])
    assert rc == 0
    lines = (tmp_path / "rotation.csv").read_text().splitlines()
    assert lines[0] == "R,rho,convergence_gap,iterates"
    R, rho, gap, _ = lines[1].split(",")
    assert 0.1 < float(rho) < 0.15
    assert (tmp_path / "angle_profile.csv").exists()


def test_branch_cli_short_run(tmp_path, capsys):
    rc = main(["--out", str(tmp_path), "branch", "--from-R", "300",
               "--max-steps", "12"])
    assert rc == 0
    lines = (tmp_path / "branch.csv").read_text().splitlines()
    assert len(lines) == 13
    chain = json.loads((tmp_path / "branch_certificates.json").read_text())
    assert chain["steps"] == 12 and chain["all_linked"]


def test_config_file_flows_through(tmp_path, capsys, coral):
    cfg = tmp_path / "params.cfg"
    cfg.write_text(coral.params.to_config())
    rc = main(["--config", str(cfg), "--out", str(tmp_path), "transcritical"])
    assert rc == 0


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "certibif.cli", "farey",
                           "0.24", "0.26"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "1/4"


def test_branch_emits_validated_diagram(tmp_path):
    rc = main(["--out", str(tmp_path), "branch", "--from-R", "300",
               "--max-steps", "8"])
    assert rc == 0
    lines = (tmp_path / "bifurcation_diagram.csv").read_text().splitlines()
    assert lines[0] == "R,P,stability,delta_u,branch"
    rows = [ln.split(",") for ln in lines[1:]]
    trivial = [r for r in rows if r[4] == "trivial"]
    nontriv = [r for r in rows if r[4] == "nontrivial"]
    assert len(nontriv) == 8 and trivial
    assert all(float(r[1]) == 0.0 for r in trivial)
    assert all(float(r[3]) > 0.0 for r in nontriv)


def test_simulate_x0_from_csv_and_fixed(tmp_path, coral):
    import numpy as np
    x0 = 500.0 * coral.cf.a
    path = tmp_path / "x0.csv"
    path.write_text(",".join(repr(float(v)) for v in x0))
    rc = main(["--out", str(tmp_path), "simulate", "--R", "100",
               "--x0", str(path), "--years", "5"])
    assert rc == 0
    rc = main(["--out", str(tmp_path), "simulate", "--R", "100",
               "--x0", "fixed", "--years", "5"])
    assert rc == 0
    lines = (tmp_path / "simulate.csv").read_text().splitlines()
    first = [float(v) for v in lines[1].split(",")]
    last = [float(v) for v in lines[-1].split(",")]
    # starting on the fixed point: the trajectory stays there
    assert abs(first[-1] - last[-1]) <= 1e-6 * abs(first[-1])
