import json

import pytest

from pfworkbench import cli
from pfworkbench import numerics as num
from pfworkbench.convolve_input import ParseError, parse_systems
from pfworkbench.families import load_k_golden


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def test_verify_symbolic_passes_and_is_deterministic(capsys):
    code, first = run(capsys, "verify", "--scope", "symbolic")
    assert code == 0
    assert "suite verify/symbolic: PASS" in first.out
    _, second = run(capsys, "verify", "--scope", "symbolic")
    assert first.out == second.out


def test_verify_json(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out = run(capsys, "verify", "--scope", "symbolic", "--format", "json", "--json", str(path))
    data = json.loads(out.out)
    assert code == 0 and data["ok"]
    assert all(c["locator"] in cli.LOCATORS for c in data["checks"])
    assert json.loads(path.read_text()) == data


def test_verify_numeric_with_csv(capsys, tmp_path):
    path = tmp_path / "t.csv"
    code, out = run(capsys, "verify", "--scope", "numeric", "--tol", "1e-8", "--csv", str(path))
    assert code == 0
    assert "g.positive" in out.out
    assert path.read_text().startswith("b,nu_bar,g_direct,pf_fd,discrepancy")


def test_unknown_scope_is_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["verify", "--scope", "everything"])
    assert e.value.code == 2


def test_unknown_locator_fails_closed():
    rep = cli.Report("x")
    rep.add("not.a.locator", "pass", "ok")
    assert not rep.ok and rep.checks[0].status == "fail"
    rep = cli.Report("y")
    rep.add("mirror.reference-series", "info", "anything")
    assert rep.ok


def test_k_poly_first_term(capsys):
    code, out = run(capsys, "compute", "k-poly", "--at-i")
    assert code == 0
    radical = out.out.splitlines()[-1]
    golden_first = str(load_k_golden()).split(" + ")[0]
    assert radical.startswith("(" + golden_first.replace(" ", ""))


def test_period_matches_f32(capsys):
    code, out = run(capsys, "compute", "period", "--b", "8", "--terms", "40")
    value = complex(json.loads(out.out)["I"].replace("i", "j"))
    ref = num.f32_eval(1 / 16, 40) * num.TWO_PI_I_SQ
    assert code == 0 and abs(value - ref) <= 1e-12 * abs(ref)


def test_parse_b():
    assert cli.parse_b("i") == 1j
    assert cli.parse_b("2+3i") == 2 + 3j
    assert cli.parse_b("1j") == 1j
    assert cli.parse_b("-i") == -1j


def test_singular_b_is_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["compute", "g", "--b", "-4"])
    assert e.value.code == 2
    with pytest.raises(SystemExit):
        cli.main(["compute", "mirror", "--order", "0"])


def test_convolve_default_instance(capsys):
    code, out = run(capsys, "compute", "convolve")
    assert code == 0
    assert "A = (-6*nu - 3)/(nu*(nu + 1))" in out.out
    assert "compatibility residual = 0" in out.out
    assert "identity closes = True" in out.out


def test_convolve_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("[system]\nfibre = s\nparam = nu\nradical u1 = s ; s - 1\nA = 1 +* nu\n")
    code, out = run(capsys, "compute", "convolve", "--input", str(bad))
    assert code == 1
    assert "line 5, column 8" in out.err


def test_missing_file(capsys, tmp_path):
    code, out = run(capsys, "compute", "convolve", "--input", str(tmp_path / "nope.txt"))
    assert code == 1 and "error" in out.err


def test_parser_structure_errors():
    with pytest.raises(ParseError):
        parse_systems("fibre = s\n")
    with pytest.raises(ParseError):
        parse_systems("[system]\nfibre = s\nparam = nu\n")
    with pytest.raises(ParseError) as e:
        parse_systems("[system]\ncolour = blue\n")
    assert "unknown key" in str(e.value)


def test_mirror_and_g(capsys):
    code, out = run(capsys, "compute", "mirror", "--order", "3")
    data = json.loads(out.out)
    assert code == 0 and data["u_of_q"][:2] == ["0", "1"]
    code, out = run(capsys, "compute", "g", "--b", "i", "--route", "direct", "--tol", "1e-8")
    assert code == 0 and json.loads(out.out)["direct"]["converged"]
