import csv
import io
import math

import pytest

from ultrajet.cli import EXIT_DATA, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_USAGE, main
from ultrajet.jets import exp_jet, format_jet, polynomial_jet


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def section(text, name):
    lines = text.splitlines()
    start = lines.index(f"[{name}]")
    out = {}
    for line in lines[start + 1:]:
        if line.startswith("["):
            break
        if " = " in line:
            k, v = line.split(" = ", 1)
            out[k] = v
    return out


def test_growth_index_example():
    code, text = run("growth-index", "t^0.5", "t^0.5")
    assert code == EXIT_OK
    assert text.startswith("# ultrajet growth-index\n")
    gamma = float(next(v for k, v in section(text, "growth_index").items() if k == "gamma"))
    assert gamma == pytest.approx(2.0, rel=0.05)


def test_check_pair_example_fails_with_witnesses():
    code, text = run("check-pair", "t/(log t)^2", "t/(log t)", "--r", "0.9")
    assert code == EXIT_FAIL
    assert section(text, "verdict")["verdict"] == "fails"
    table = text.split("--- t,index,value\n", 1)[1].split("---", 1)[0].splitlines()
    values = [float(row.split(",")[2]) for row in table]
    assert len(values) == 3 and values == sorted(values)


def test_check_weight_example_fails():
    code, text = run("check-weight", "exp(t)")
    assert code == EXIT_FAIL
    assert "fails" in text


def test_interlacing_style_inconclusive_exit_is_distinct():
    assert len({EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE, EXIT_DATA}) == 5


def test_parameters_are_printed():
    code, text = run("kappa", "t^0.5", "--t", "100")
    assert code == EXIT_OK
    params = section(text, "parameters")
    assert params["t"] == "100" and params["tol"] and "t_min[omega]" in params


@pytest.mark.parametrize("argv", [
    ["check-weight", "t^0.5"],
    ["conjugate", "max(0,t-1)", "--ygrid", "0:5:11"],
    ["weight-matrix", "t^0.5", "--x", "1", "--kmax", "10"],
    ["check-pair", "t^0.5", "t^0.5", "--discrete"],
    ["reduce", "t^0.5", "t^0.5", "--f", "t^0.75", "--nmax", "4"],
])
def test_output_is_deterministic(argv):
    first, second = run(*argv), run(*argv)
    assert first == second
    assert first[0] in (EXIT_OK, EXIT_FAIL)


@pytest.mark.parametrize("argv", [[], ["bogus"], ["kappa", "t"], ["check-pair", "t", "t"],
                                  ["check-pair", "t", "t", "--r", "0.5", "--discrete"],
                                  ["conjugate", "t", "--ygrid", "0:1"]])
def test_usage_errors(argv, capsys):
    assert run(*argv)[0] == EXIT_USAGE
    assert capsys.readouterr().err


def test_syntax_error_is_a_data_error(capsys):
    code, text = run("check-weight", "t +")
    assert code == EXIT_DATA and text == ""
    assert "3" in capsys.readouterr().err


def test_bad_jet_file_is_a_data_error(tmp_path, capsys):
    path = tmp_path / "bad.jet"
    path.write_text("dim 1\npcap 1\npoint 0\nval 0 0 1\n")
    assert run("jet-seminorm", str(path), "max(0,t-1)", "--m", "1", "--pmax", "1")[0] == EXIT_DATA
    assert "missing value" in capsys.readouterr().err
    assert run("jet-seminorm", str(tmp_path / "none.jet"), "t", "--m", "1", "--pmax", "1")[0] == EXIT_DATA


def test_csv_is_lossless(tmp_path):
    path = tmp_path / "conj.csv"
    code, _ = run("conjugate", "t^0.5", "--ygrid", "0:3:7", "--csv", str(path))
    assert code == EXIT_OK
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    rows = list(csv.reader(io.StringIO(raw.decode())))
    assert rows[0] == ["y", "phi_star", "argmax"]
    for row in rows[1:]:
        for cell in row:
            assert float(repr(float(cell))) == float(cell)
            digits = cell.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(digits) <= 17


def test_weight_matrix_csv(tmp_path):
    path = tmp_path / "w.csv"
    assert run("weight-matrix", "max(0,t-1)", "--x", "1", "--kmax", "5", "--csv", str(path))[0] == EXIT_OK
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["index", "value", "log_value"]
    assert float(rows[3][1]) == pytest.approx(4 / math.e, rel=1e-15)
    assert len(rows) == 7


def test_reduce_csv_and_plot(tmp_path):
    table, fig = tmp_path / "seq.csv", tmp_path / "seq.png"
    code, text = run("reduce", "t^0.5", "t^0.5", "--f", "t^0.75", "--nmax", "5",
                     "--csv", str(table), "--plot", str(fig))
    assert code == EXIT_OK
    assert section(text, "claims")["all_hold"] == "true"
    rows = list(csv.reader(table.open()))
    assert rows[0] == ["n", "x", "y", "z"] and len(rows) == 6
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_jet_seminorm(tmp_path):
    path = tmp_path / "sq.jet"
    path.write_text(format_jet(polynomial_jet({(2,): 1}, [0, 1], 3)))
    code, text = run("jet-seminorm", str(path), "max(0,t-1)", "--m", "1", "--pmax", "3")
    assert code == EXIT_OK
    assert f"{math.e / 2:.12g}" in text


def test_jet_reduce_with_plot(tmp_path):
    path, fig = tmp_path / "exp.jet", tmp_path / "pipe.png"
    path.write_text(format_jet(exp_jet([0, "1/2", 1], 12)))
    code, text = run("jet-reduce", str(path), "t^0.5", "t^0.5", "--jmax", "32", "--pmax", "12",
                     "--nmax", "4", "--plot", str(fig))
    assert code == EXIT_OK, text
    assert fig.exists() and fig.stat().st_size > 0


def test_jet_reduce_abort_exit(tmp_path):
    path = tmp_path / "fast.jet"
    lines = ["dim 1", "pcap 12", "point 0"] + [f"val 0 {k} {math.factorial(k) ** 3}" for k in range(13)]
    path.write_text("\n".join(lines) + "\n")
    code, text = run("jet-reduce", str(path), "t^0.5", "t^0.5", "--jmax", "4", "--pmax", "12", "--nmax", "4")
    assert code == EXIT_FAIL
    assert "fit" in text
