import json
import math

import pytest

from ramulus.cli import main


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def two_atom_measure():
    return {"atoms": [{"x": [0.0, 0.0], "w": -1.0}, {"x": [3.0, 4.0], "w": 1.0}]}


def test_solve_two_atoms(tmp_path, capsys):
    inp = _write(tmp_path / "b.json", two_atom_measure())
    out = tmp_path / "result.json"
    code = main(["solve", "--alpha", "0.5", "--input", inp, "--output", str(out)])
    assert code == 0
    obj = json.loads(out.read_text())
    assert obj["value"] == pytest.approx(5.0)
    assert obj["certificates"]["is_forest"]
    assert not obj["ambiguous"]


def test_solve_output_is_byte_stable(tmp_path):
    inp = _write(tmp_path / "b.json", two_atom_measure())
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert main(["solve", "--alpha", "0.5", "--input", inp, "--output", str(out1)]) == 0
    assert main(["solve", "--alpha", "0.5", "--input", inp, "--output", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_validate_round_trip(tmp_path):
    inp = _write(tmp_path / "b.json", two_atom_measure())
    out = tmp_path / "result.json"
    main(["solve", "--alpha", "0.5", "--input", inp, "--output", str(out)])
    code = main(["validate", "--input", str(out)])
    assert code == 0


def test_flatnorm(tmp_path, capsys):
    inp = _write(tmp_path / "m.json", two_atom_measure())
    assert main(["flatnorm", "--input", inp]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["flat_norm"] == pytest.approx(2.0)  # distance 5 > 2: discard wins


def test_classify_collinear_z(tmp_path, capsys):
    inp = _write(
        tmp_path / "four.json",
        {"A": [-4.0, 0.0], "B": [-1.0, 0.0], "C": [1.0, 0.0], "D": [4.0, 0.0], "theta": 1.0, "k": 5},
    )
    svg_path = tmp_path / "sheet.svg"
    assert main(["classify", "--alpha", "0.5", "--input", inp, "--svg", str(svg_path)]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["label"] == "Z"
    assert svg_path.read_text().startswith("<svg")


def test_dyadic_csv_bound_column(tmp_path):
    atoms = []
    for i in range(4):
        for j in range(4):
            atoms.append({"x": [(2 * i + 1) / 8, (2 * j + 1) / 8], "w": 1 / 16})
    inp = _write(tmp_path / "grid.json", {"atoms": atoms})
    out = tmp_path / "table.csv"
    assert main(["dyadic", "--alpha", "0.75", "--depth", "6", "--input", inp, "--output", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "n,mass,alpha_mass,bound"
    c2 = math.sqrt(2) / 2
    for row in lines[1:]:
        n, mass, alpha_mass, bound = row.split(",")
        assert float(bound) == pytest.approx(c2 * 2 ** (-int(n) / 2), rel=1e-12)


def test_perturb(tmp_path, capsys):
    chain = {
        "vertices": [[0.0, 0.0], [1.0, 0.0]],
        "edges": [{"tail": 0, "head": 1, "w": 1.0}],
    }
    inp = _write(tmp_path / "p.json", {"chain": chain, "points": [[0.5, 0.0]]})
    assert main(["perturb", "--k", "2", "--n", "4", "--input", inp]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["mass_bound_ok"] and obj["flat_bound_ok"]


def test_stability(tmp_path, capsys):
    base = two_atom_measure()
    inp = _write(tmp_path / "s.json", {"base": base, "family": [base, base]})
    assert main(["stability", "--alpha", "0.5", "--input", inp]) == 0
    obj = json.loads(capsys.readouterr().out)
    assert obj["converged"]


def test_malformed_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"atoms": [}')
    code = main(["flatnorm", "--input", str(bad)])
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "domain"
    assert "line" in err["error"]["message"]


def test_unbalanced_boundary_exits_2(tmp_path, capsys):
    inp = _write(tmp_path / "u.json", {"atoms": [{"x": [0.0, 0.0], "w": 1.0}]})
    assert main(["solve", "--alpha", "0.5", "--input", inp]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "domain"


def test_atom_cap_exits_3(tmp_path, capsys):
    atoms = [{"x": [float(i), 0.0], "w": -1.0} for i in range(5)]
    atoms += [{"x": [float(i), 1.0], "w": 1.0} for i in range(5)]
    inp = _write(tmp_path / "big.json", {"atoms": atoms})
    assert main(["solve", "--alpha", "0.5", "--input", inp, "--atom-cap", "4"]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "capacity"


def test_solve_svg_output(tmp_path):
    inp = _write(tmp_path / "b.json", two_atom_measure())
    svg_path = tmp_path / "net.svg"
    assert main(["solve", "--alpha", "0.5", "--input", inp, "--svg", str(svg_path)]) == 0
    text = svg_path.read_text()
    assert text.startswith("<svg") and "line" in text
