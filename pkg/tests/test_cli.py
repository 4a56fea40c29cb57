import io
import json

import numpy as np
import pytest

from hoqt import scenarios, superop
from hoqt.cli import run
from hoqt.superop import choi_from_kraus
from hoqt.theory import BaseKind, Theory


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def q4(tmp_path):
    p = tmp_path / "quantum4.theory"
    p.write_text(Theory.uniform(["A0", "A1", "A2", "A3"], base=BaseKind.IDENTITY).dumps())
    return str(p)


@pytest.fixture
def g2(tmp_path):
    p = tmp_path / "generic2.theory"
    p.write_text(Theory.uniform(["A", "B"]).dumps())
    return str(p)


@pytest.fixture
def biased(tmp_path):
    p = tmp_path / "biased.theory"
    p.write_text(scenarios.biased_theory().dumps())
    return str(p)


def test_eq_example(q4):
    assert call("eq", "-t", q4, "((A0->A1)->A2)->A3", "(A1->A2)->(A0->A3)") == (0, "EQUAL\n", "")


def test_canonical_example(q4):
    code, out, _ = call("canonical", "-t", q4, "((A0->A1)->A2)->A3")
    assert (code, out) == (0, "~A0 << A1 << ~A2 << A3\n")


@pytest.mark.parametrize(
    "argv",
    [
        ("eq", "-t", "{g2}", "A -> B", "(~A << B) | (~A >> B)"),
        ("subset", "-t", "{g2}", "A -> B", "~A << B"),
        ("canonical", "-t", "{g2}", "~A -> ~B"),
        ("orders", "-t", "{g2}", "A -> B"),
        ("nosig", "A -> B"),
        ("parse", "~~A"),
    ],
)
def test_text_and_json_agree(g2, argv):
    argv = [a.format(g2=g2) for a in argv]
    code_t, text, _ = call(*argv)
    code_j, raw, _ = call(*argv, "--format", "json")
    payload = json.loads(raw)
    assert code_t == code_j
    assert payload["command"] == argv[0]
    if "verdict" in payload:
        assert payload["result"] == text.strip()
        assert payload["verdict"] == (code_t == 0)


def test_orders_output(g2):
    code, out, _ = call("orders", "-t", g2, "A * B")
    assert code == 0
    assert out.splitlines()[:3] == ["forced: 2", "  A << B", "  B << A"]
    assert "realizable: 0" in out


def test_matrix_file(tmp_path, biased):
    dest = tmp_path / "s.mat"
    code, out, _ = call("matrix", "-t", biased, "~A * B", "-o", str(dest))
    assert code == 0 and "rank 6 of 16" in out
    dims, norm, M = superop.read_matrix(dest)
    assert dims == (2, 2, 2, 2) and norm == 2.0
    assert np.allclose(M, superop.projector_matrix("~A * B", scenarios.biased_theory()).matrix)


def test_matrix_to_stdout(biased):
    code, out, _ = call("matrix", "-t", biased, "D[A]")
    assert code == 0
    assert out.startswith("dims: 2 2\nnorm: 1.0\n")
    assert len(out.splitlines()) == 2 + 4


def test_validate_and_signal(tmp_path, biased):
    q2 = tmp_path / "q2.theory"
    q2.write_text(Theory.uniform(["A0", "A1"], base=BaseKind.IDENTITY).dumps())
    ident = tmp_path / "id.mat"
    ident.write_text(superop.format_matrix((2, 2), 2, choi_from_kraus([np.eye(2)]).matrix))
    code, out, _ = call("validate", "-t", str(q2), "A0 -> A1", str(ident))
    assert code == 0 and out.startswith("PASS\npositive: True")
    code, out, _ = call("validate", "-t", str(q2), "A0 -> A1", str(ident), "--format", "json")
    assert json.loads(out)["pass"] is True
    code, out, _ = call("signal", "-t", str(q2), str(ident), "I[A0]")
    assert (code, out) == (1, "SIGNALING from A0\n")
    code, out, _ = call("signal", "-t", str(q2), str(ident), "~I[A1]", "--wires", "A0", "A1")
    assert (code, out) == (0, "NO SIGNALING from A1\n")


def test_validate_wrong_dims(tmp_path):
    q2 = tmp_path / "q2.theory"
    q2.write_text(Theory.uniform(["A0", "A1"], base=BaseKind.IDENTITY).dumps())
    m = tmp_path / "small.mat"
    m.write_text(superop.format_matrix((2,), 1, np.eye(2)))
    code, out, err = call("validate", "-t", str(q2), "A0 -> A1", str(m))
    assert code == 3 and out == ""
    assert err.startswith("hoqt: numeric error:") and err.count("\n") == 1


@pytest.mark.parametrize(
    "argv, code",
    [
        ((), 2),
        (("frobnicate",), 2),
        (("parse", "A ->"), 2),
        (("eq", "-t", "/nonexistent/theory", "A", "A"), 2),
        (("eq", "-t", "{g2}", "A", "A * B"), 2),
        (("eq", "-t", "{g2}", "A", "C"), 2),
        (("canonical", "-t", "{g2}", "A * B", "--max-wires", "1"), 2),
        (("nosig", "A << B"), 2),
        (("selftest", "--help"), 0),
    ],
)
def test_exit_codes(g2, argv, code):
    got, _, err = call(*[a.format(g2=g2) for a in argv])
    assert got == code
    if code == 2 and len(argv) > 1:
        # one-line diagnostic for library errors
        assert err.startswith("hoqt: ") and err.count("\n") == 1


def test_selftest_json():
    code, out, _ = call("selftest", "--format", "json")
    payload = json.loads(out)
    assert code == 0 and payload["ok"] is True
    assert len(payload["items"]) == 12


def test_selftest_force_generic():
    code, out, _ = call("selftest", "--force-generic")
    assert code == 0
    assert "XFAIL comb_network_n2" in out


def test_color(monkeypatch, g2):
    monkeypatch.setenv("HOQT_COLOR", "1")
    code, out, _ = call("eq", "-t", g2, "A", "A")
    assert out == "\x1b[32mEQUAL\x1b[0m\n"
    monkeypatch.setenv("HOQT_COLOR", "0")
    assert call("eq", "-t", g2, "A", "A")[1] == "EQUAL\n"
