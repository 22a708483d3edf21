import json
import math

import numpy as np
import pytest

from sfcorr import cli, matcore, qubit
from sfcorr.matcore import PAULI_X, PAULI_Z

from helpers import random_hermitian, random_unitary


@pytest.fixture
def write(tmp_path):
    def _write(name, obj):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else matcore.matrix_to_json(obj))
        return str(path)
    return _write


@pytest.fixture
def qubit_pair(write):
    u1 = qubit.rotation_matrix(math.pi, (0, 0, 1))
    u2 = qubit.rotation_matrix(math.pi, (1, 0, 0))
    return write("u1.json", u1), write("u2.json", u2)


def run(capsys, argv):
    code = cli.main(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def run_json(capsys, argv):
    code, out, err = run(capsys, argv)
    assert code == 0, err
    return json.loads(out)


def test_exact_qubit_pair(capsys, qubit_pair):
    u1, u2 = qubit_pair
    rep = run_json(capsys, ["exact", "--u1", u1, "--u2", u2])
    assert rep["schema_version"] == 1
    for block in ("closed_form", "perm_sum"):
        assert rep[block]["pcc"] == pytest.approx(-0.5, abs=1e-12)
    assert rep["closed_form"]["method"] == "ClosedForm" and rep["perm_sum"]["method"] == "PermSum"


def test_exact_identity_is_degenerate(capsys, write, qubit_pair):
    code, _, err = run(capsys, ["exact", "--u1", write("id.json", np.eye(2)), "--u2", qubit_pair[1]])
    assert code == 3 and "DegenerateReadout" in err


def test_exact_malformed_json(capsys, write, qubit_pair):
    bad = write("bad.json", '{"dim": 2,\n "data": [[1, 0], [0, 0]\n')
    code, _, err = run(capsys, ["exact", "--u1", bad, "--u2", qubit_pair[1]])
    assert code == 4 and "line" in err and "column" in err


def test_exact_dimension_mismatch(capsys, write, qubit_pair, rng):
    code, _, _ = run(capsys, ["exact", "--u1", qubit_pair[0], "--u2", write("u3.json", random_unitary(3, rng))])
    assert code == 2


def test_exact_non_unitary(capsys, write, qubit_pair):
    code, _, _ = run(capsys, ["exact", "--u1", write("m.json", 2 * np.eye(2)), "--u2", qubit_pair[1]])
    assert code == 2


def test_missing_file_is_usage_error(capsys, qubit_pair, tmp_path):
    code, _, _ = run(capsys, ["exact", "--u1", str(tmp_path / "nope.json"), "--u2", qubit_pair[1]])
    assert code == 64


def test_unknown_flag_and_help(capsys, qubit_pair):
    with pytest.raises(SystemExit) as exc:
        cli.main(["exact", "--u1", qubit_pair[0], "--u2", qubit_pair[1], "--bogus"])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 64
    for sub in ("exact", "sample", "qubit", "sweep", "fringe", "echo", "contrast", "probe"):
        with pytest.raises(SystemExit) as exc:
            cli.main([sub, "--help"])
        assert exc.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--u1", "--seed", "--chunk-size", "--threads", "--delta", "--grid", "--times", "--axis"):
        assert flag in out


def test_sample_qubit_pair(capsys, qubit_pair):
    u1, u2 = qubit_pair
    rep = run_json(capsys, ["sample", "--u1", u1, "--u2", u2, "-n", "1000000", "--seed", "42"])
    assert rep["method"] == "MonteCarlo" and rep["n_samples"] == 10**6 and rep["seed"] == 42
    assert abs(rep["pcc"] + 0.5) < 4 * rep["stderr_pcc"]


def test_sample_repeatable_and_thread_invariant(capsys, qubit_pair):
    u1, u2 = qubit_pair
    base = ["sample", "--u1", u1, "--u2", u2, "-n", "30000", "--seed", "7", "--chunk-size", "4096"]
    outs = {run(capsys, base + ["--threads", t])[1] for t in ("1", "1", "8")}
    assert len(outs) == 1


def test_sample_below_floor(capsys, qubit_pair):
    code, _, _ = run(capsys, ["sample", "--u1", qubit_pair[0], "--u2", qubit_pair[1], "-n", "10"])
    assert code == 64


def test_sample_user_ensemble(capsys, write, qubit_pair, rng):
    states = rng.standard_normal((200, 2)) + 1j * rng.standard_normal((200, 2))
    states /= np.linalg.norm(states, axis=1, keepdims=True)
    ens = write("ens.json", json.dumps({"kind": "user",
                                        "states": [json.loads(matcore.state_to_json(s)) for s in states]}))
    rep = run_json(capsys, ["sample", "--u1", qubit_pair[0], "--u2", qubit_pair[1], "--ensemble", ens])
    assert rep["ensemble"] == "user" and rep["n_samples"] == 200
    x1 = matcore.self_fidelities(qubit.rotation_matrix(math.pi, (0, 0, 1)), states)
    assert rep["mean1"] == pytest.approx(x1.mean(), abs=1e-14)


def test_qubit_subcommand(capsys):
    rep = run_json(capsys, ["qubit", "--delta", "1.5707963"])
    assert rep["pcc_closed_form"] == pytest.approx(-0.5, abs=1e-10)
    assert rep["agree"] and abs(rep["pcc_exact"] - rep["pcc_closed_form"]) <= 1e-10
    code, _, _ = run(capsys, ["qubit", "--delta", "4"])
    assert code == 2
    code, _, _ = run(capsys, ["qubit", "--delta", "1", "--theta1", "7"])
    assert code == 2


def test_sweep_csv(capsys, tmp_path):
    code, out, _ = run(capsys, ["sweep", "--points", "2"])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "delta,pcc"
    rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
    np.testing.assert_allclose(rows, [[0, 1], [math.pi, 1]], atol=1e-15)
    assert float(lines[2].split(",")[0]) == math.pi  # round-trip formatting
    path = tmp_path / "sweep.csv"
    assert cli.main(["sweep", "--points", "1", "--out", str(path)]) == 2
    assert cli.main(["sweep", "--points", "181", "--out", str(path)]) == 0
    assert b"\r" not in path.read_bytes() and len(path.read_text().splitlines()) == 182


def test_fringe_csv(capsys, tmp_path):
    path = tmp_path / "fringe.csv"
    assert cli.main(["fringe", "--theta", "2.5", "--out", str(path)]) == 0
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (181 * 361, 6)
    assert data[:, 5].min() == pytest.approx(1 - math.sin(1.25) ** 2, abs=1e-12)
    assert cli.main(["fringe", "--theta", "1.0", "--axis", "1,1,0", "--grid", "11x21", "--out", str(path)]) == 0
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    n = np.array([1, 1, 0]) / math.sqrt(2)
    np.testing.assert_allclose(data[:, 5], 1 - math.sin(0.5) ** 2 * (1 - (data[:, 2:5] @ n) ** 2), atol=1e-12)
    assert cli.main(["fringe", "--theta", "1.0", "--axis", "0,0,0"]) == 2
    assert cli.main(["fringe", "--theta", "1.0", "--axis", "a,b"]) == 64
    assert cli.main(["fringe", "--theta", "1.0", "--grid", "1x5"]) == 2
    assert cli.main(["fringe", "--theta", "0"]) == 2


def test_echo_qubit_axes_gap_zero(capsys, write):
    h1 = write("h1.json", 0.5 * PAULI_Z)
    h2 = write("h2.json", 0.5 * PAULI_X)
    rep = run_json(capsys, ["echo", "--h1", h1, "--h2", h2, "--times", "0.1,0.5,1,3", "-n", "2000"])
    assert rep["dims"] == 2 and rep["route"] == "exact"
    for r in rep["records"]:
        assert r["gap"] <= 1e-9 and r["pcc_variance_limit"] == pytest.approx(-0.5)
    rep = run_json(capsys, ["echo", "--h1", h1, "--h2", h2, "--times", "0.1,1", "-n", "20000", "--mc"])
    assert rep["route"] == "monte_carlo"
    for r in rep["records"]:
        assert r["gap"] <= 1e-9


def test_echo_rigidity_and_errors(capsys, write, rng):
    h = random_hermitian(3, rng)
    h1, h2 = write("h1.json", h), write("h2.json", 2 * h)
    rep = run_json(capsys, ["echo", "--h1", h1, "--h2", h2, "--times", "0.1", "-n", "1000"])
    assert rep["rigidity"]["slope"] == pytest.approx(4.0)
    assert rep["rigidity"]["negative_slope_feasible"] is False
    skew = write("skew.json", np.array([[0, 1], [-1, 0]], dtype=complex))
    assert cli.main(["echo", "--h1", skew, "--h2", skew, "--times", "0.1"]) == 5
    assert cli.main(["echo", "--h1", h1, "--h2", h2, "--times", "-0.1"]) == 2
    assert cli.main(["echo", "--h1", h1, "--h2", h2, "--times", "x"]) == 64
    ident = write("id.json", np.eye(3))
    assert cli.main(["echo", "--h1", h1, "--h2", ident, "--times", "0.1", "-n", "1000"]) == 3


def test_contrast(capsys, qubit_pair, write):
    rep = run_json(capsys, ["contrast", "--u1", qubit_pair[0], "--u2", qubit_pair[1], "--grid", "11"])
    assert rep["kappa_star"] == pytest.approx(-0.5, abs=1e-12)
    assert rep["floor"] == pytest.approx(1 / 15, abs=1e-12)
    assert len(rep["curve"]) == 11 and min(v for _, v in rep["curve"]) == pytest.approx(1 / 15)
    rep = run_json(capsys, ["contrast", "--u1", qubit_pair[0], "--u2", qubit_pair[0]])
    assert rep["floor"] == pytest.approx(0.0, abs=1e-15)
    # axes at the magic angle: zero covariance
    magic = write("m.json", qubit.rotation_matrix(math.pi, qubit.axes_at_angle(math.acos(1 / math.sqrt(3)))[1]))
    rep = run_json(capsys, ["contrast", "--u1", qubit_pair[0], "--u2", magic])
    assert rep["kappa_star"] == pytest.approx(0.0, abs=1e-12)


def test_probe(capsys, write, qubit_pair, rng):
    u1, u2 = write("a.json", random_unitary(4, rng)), write("b.json", random_unitary(4, rng))
    rep = run_json(capsys, ["probe", "--u1", u1, "--u2", u2, "-n", "2000", "--seed", "3"])
    for key in ("max_overlap", "complement_violation", "pcc_min_bound_check"):
        assert rep[key]["pass"] is True
    rep = run_json(capsys, ["probe", "--u1", u1, "--u2", u1, "-n", "2000"])
    assert rep["max_overlap"]["value"] == pytest.approx(1.0, abs=1e-12)
    assert rep["complement_violation"]["value"] == pytest.approx(1.0, abs=1e-9)
    h = random_hermitian(2, rng)
    near = write("near.json", matcore.evolve(h, -1e-12))
    assert cli.main(["probe", "--u1", qubit_pair[0], "--u2", near, "-n", "200"]) == 3


def test_outputs_byte_stable(tmp_path, write, qubit_pair, rng):
    u1, u2 = qubit_pair
    h1, h2 = write("h1.json", random_hermitian(3, rng)), write("h2.json", random_hermitian(3, rng))
    commands = [
        ["exact", "--u1", u1, "--u2", u2],
        ["sample", "--u1", u1, "--u2", u2, "-n", "20000", "--seed", "11", "--chunk-size", "3000"],
        ["qubit", "--delta", "0.7", "--theta1", "1.1"],
        ["sweep", "--points", "50"],
        ["fringe", "--theta", "2.5", "--grid", "19x37"],
        ["echo", "--h1", h1, "--h2", h2, "--times", "0.1,0.2", "-n", "20000", "--mc", "--chunk-size", "3000"],
        ["contrast", "--u1", u1, "--u2", u2],
        ["probe", "--u1", u1, "--u2", u2, "-n", "5000", "--seed", "5", "--chunk-size", "1000"],
    ]
    for argv in commands:
        blobs = set()
        for i, threads in enumerate(("1", "1", "8")):
            out = tmp_path / f"out{i}"
            assert cli.main(argv + ["--threads", threads, "--out", str(out)]) == 0
            blobs.add(out.read_bytes())
        assert len(blobs) == 1, argv[0]
