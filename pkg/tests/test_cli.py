import json

from conftest import FIXTURES
from gradedkit.cli import main


def run(capsys, *args):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_exit_codes(capsys):
    assert run(capsys, "check", FIXTURES / "so3.gk")[0] == 0
    code, out, _ = run(capsys, "check", FIXTURES / "so3_perturbed.gk")
    assert code == 1
    assert "[Q,Q]^e2: -2*e1*e2*e3" in out


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.gk"
    bad.write_text("chart A\n  coord x weight (0) parity odd\n", encoding="utf-8")
    code, _, err = run(capsys, "check", bad)
    assert code == 2
    assert err.startswith(f"{bad}:1:1: error:")
    assert run(capsys, "check", tmp_path / "missing.gk")[0] == 2


def test_json_report_schema(tmp_path, capsys):
    out = tmp_path / "r.json"
    run(capsys, "check", FIXTURES / "de_rham.gk", "--json", out)
    data = json.loads(out.read_text())
    assert data["version"] == 1 and "timing" not in data
    assert [c["id"] for c in data["checks"]][:2] == ["Q:homological", "TM:algebroid.homological"]
    assert all(c["verdict"] == "pass" for c in data["checks"])
    run(capsys, "check", FIXTURES / "de_rham.gk", "--json", out, "--timing")
    assert "timing" in json.loads(out.read_text())


def test_derive_matches_handwritten_block(capsys):
    code, out, _ = run(capsys, "derive", FIXTURES / "pair_r2.gk", "--name", "pair2")
    assert code == 0
    assert "algebroid pair2_lie on pair2_lie_chart degree 1\n  anchor dY1 b1 = 1\n  anchor dY2 b2 = 1\nend" in out


def test_derive_requires_name_when_ambiguous(tmp_path, capsys):
    two = tmp_path / "two.gk"
    extra = "groupoid other on Gamma over R\n  unit\n    Y = 0\n  end\n  mult on K via p1 p2\n    Y = Y + Z\n  end\nend\n"
    two.write_text((FIXTURES / "pair_r.gk").read_text() + extra)
    code, _, err = run(capsys, "derive", two)
    assert code == 2 and "--name" in err
    assert run(capsys, "derive", two, "--name", "other")[0] == 0


def test_lift_and_homogenize(capsys):
    code, out, _ = run(capsys, "lift", FIXTURES / "homogenize_xyw.gk", "--name", "XYW", "higher", "1")
    assert code == 0 and "chart XYW_T1 bound (2,1)" in out
    code, _, err = run(capsys, "lift", FIXTURES / "t2m.gk", "--name", "T2M", "tangent")
    assert code == 2 and "duplicate coordinate name 'dx'" in err
    code, out, _ = run(capsys, "lift", FIXTURES / "t2m.gk", "--name", "h", "tangent", "--prefix", "v")
    assert code == 0 and "vd2x = t^2*vd2x" in out
    code, out, _ = run(capsys, "homogenize", FIXTURES / "homogenize_xyw.gk")
    assert (code, out) == (0, "w = -x*y + w\n")


def test_homogenize_refusal_exit_code(tmp_path, capsys):
    f = tmp_path / "h.gk"
    f.write_text(
        "chart A\n  coord x weight (0) parity even\n  coord w weight (1) parity even\n  coord y weight (2) parity even\nend\n"
        "action h on A\n  w = t*(w - y) + t^2*y\n  y = t^2*y\nend\n"
    )
    code, _, err = run(capsys, "homogenize", f)
    assert code == 1 and "out of supported class" in err


def test_bracket_command(capsys, tmp_path):
    f = tmp_path / "b.gk"
    f.write_text((FIXTURES / "so3.gk").read_text().split("check")[0] + "field a on Pso3\n  e1: 1\nend\nfield b on Pso3\n  e2: 1\nend\n")
    code, out, _ = run(capsys, "bracket", f, "--name", "Q", "a", "b")
    assert code == 0 and out == "field a_b_bracket on Pso3\n  e3: 1\nend\n"
    code, out, _ = run(capsys, "bracket", f, "--name", "so3", "a", "b")
    assert out.endswith("  e3: 1\nend\n")


def test_courant_bracket_command(capsys, tmp_path):
    f = tmp_path / "c.gk"
    f.write_text((FIXTURES / "courant_ttm.gk").read_text() + "expr s1 on C = chi_th\nexpr s2 on C = dx*th\n")
    code, out, _ = run(capsys, "bracket", f, "--name", "C", "s1", "s2")
    assert code == 0 and out.strip() != ""
