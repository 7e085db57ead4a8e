import csv
import json

import pytest

from fdelab.cli import main

CIRCLE_IDENTITY = """
[nonlinearity]
kind = "logistic"
c = 0.5

[solver]
nx = 32
n_slices = 5
horizon = 0.1

[exponents]
m = 3
p = 0.75

[[tasks]]
kind = "identity"
id = "EvolV_I"
levels = 2
"""


def write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_exponents_subcommand_prints_json(capsys):
    assert main(["exponents", "--m", "4", "--p", "0.75"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["exponents"]["p_c"] == 0.5
    assert data["q_windows"]["Cor6_4"]["q1"] == pytest.approx(0.4384471871911697)


def test_exponents_task_report(tmp_path):
    cfg = write(tmp_path, '[exponents]\nm = 4\np = 0.75\n[[tasks]]\nkind = "exponents"\n')
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    report = json.loads((tmp_path / "out" / "00_exponents.json").read_text())
    assert report["exponents"]["p_c"] == 0.5
    assert report["schema_version"] == 1
    assert report["config"]["exponents"]["m"] == 4


def test_failing_hypothesis_names_the_bullet(tmp_path):
    cfg = write(tmp_path, """
[geometry.domain]
kind = "interval"
x_lo = -5.0
x_hi = 5.0
[nonlinearity]
kind = "power"
c = 1.0
a = 1.0
[exponents]
m = 3
p = 0.8
[[tasks]]
kind = "liouville"
id = "Thm7_4"
""")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "out")]) == 1
    report = json.loads((tmp_path / "out" / "00_liouville_Thm7_4.json").read_text())
    assert report["pass"] is False
    assert report["hypothesis_failure"]["text"] == "(3-2p) N/u - 2 N_u >= 0"


def test_empty_task_list(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", write(tmp_path, "seed = 3\n"), "--out", str(out)]) == 0
    assert list(out.iterdir()) == []


@pytest.mark.parametrize("text", [
    "bogus = 1\n",
    '[[tasks]]\nkind = "identity"\nid = "NotAnIdentity"\n',
    '[exponents]\nm = 1.5\n[[tasks]]\nkind = "exponents"\n',
    '[[tasks]]\nkind = "max_principle"\nid = "Cor11_4"\n[geometry.domain]\nkind = "interval"\n',
    "not toml at all [[[",
])
def test_invalid_configs_exit_with_usage_error(tmp_path, text, capsys):
    assert main(["run", "--config", write(tmp_path, text), "--out", str(tmp_path / "out")]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_file_is_a_usage_error(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.toml")]) == 2


def test_reports_are_byte_identical_and_echo_round_trips(tmp_path):
    cfg = write(tmp_path, CIRCLE_IDENTITY)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    first = (tmp_path / "a" / "00_identity_EvolV_I.json").read_bytes()
    assert first == (tmp_path / "b" / "00_identity_EvolV_I.json").read_bytes()
    echoed = str(tmp_path / "a" / "00_identity_EvolV_I.json")
    assert main(["run", "--config", echoed, "--out", str(tmp_path / "c")]) == 0
    assert first == (tmp_path / "c" / "00_identity_EvolV_I.json").read_bytes()
    rows = read_csv(tmp_path / "a" / "00_identity_EvolV_I_residual_vs_dx.csv")
    assert len(rows) == 2 and float(rows[1]["dx"]) < float(rows[0]["dx"])


def test_seed_is_recorded(tmp_path):
    cfg = write(tmp_path, '[[tasks]]\nkind = "matrix"\nsamples = 500\nrestarts = 1\n')
    assert main(["run", "--config", cfg, "--seed", "11", "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "00_matrix.json").read_text())
    assert report["config"]["seed"] == 11 and report["seed"] == 11


def test_sweep_over_dimension(tmp_path):
    cfg = write(tmp_path, '[[tasks]]\nkind = "exponents"\n')
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--axis", "m", "--values", "2,4,5,10", "--out", str(out)]) == 0
    rows = read_csv(out / "sweep.csv")
    assert [float(r["p_0"]) for r in rows] == pytest.approx([0.5, 0.5, 0.5, 2 / 3])


def test_sweep_with_no_values_writes_header_only(tmp_path):
    cfg = write(tmp_path, '[[tasks]]\nkind = "exponents"\n')
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--axis", "p", "--values", "", "--out", str(out)]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 1 and lines[0].startswith("value,")


def test_sweep_row_errors_do_not_abort_other_rows(tmp_path):
    cfg = write(tmp_path, '[[tasks]]\nkind = "exponents"\n')
    out = tmp_path / "sw"
    assert main(["sweep", "--config", cfg, "--axis", "m", "--values", "1,4", "--out", str(out)]) == 1
    rows = read_csv(out / "sweep.csv")
    assert rows[0]["error_message"] and rows[1]["p_c"] == "0.5"


def test_grid_sweep_reports_second_order(tmp_path):
    cfg = write(tmp_path, CIRCLE_IDENTITY)
    out = tmp_path / "sw"
    code = main(["sweep", "--config", cfg, "--axis", "nx", "--values", "32,64,128,256", "--workers", "2",
                 "--out", str(out)])
    assert code == 0
    orders = [float(r["order"]) for r in read_csv(out / "sweep.csv")[1:]]
    assert len(orders) == 3 and all(1.7 <= o <= 2.3 for o in orders), orders


def test_sweep_is_independent_of_worker_count(tmp_path):
    cfg = write(tmp_path, CIRCLE_IDENTITY)
    main(["sweep", "--config", cfg, "--axis", "p", "--values", "0.6,0.8", "--out", str(tmp_path / "one")])
    main(["sweep", "--config", cfg, "--axis", "p", "--values", "0.6,0.8", "--workers", "2",
          "--out", str(tmp_path / "two")])
    assert (tmp_path / "one" / "sweep.csv").read_bytes() == (tmp_path / "two" / "sweep.csv").read_bytes()


def test_unknown_axis_is_rejected(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--config", write(tmp_path, ""), "--axis", "colour", "--values", "1"])
    assert info.value.code == 2


def test_single_task_subcommands(tmp_path):
    cfg = write(tmp_path, CIRCLE_IDENTITY)
    assert main(["check-identity", "--config", cfg, "--id", "EvolV_I", "--levels", "2",
                 "--out", str(tmp_path / "ci")]) == 0
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "s")]) == 0
    header = (tmp_path / "s" / "00_solve_field.csv").read_text().splitlines()[0]
    assert header == "t,x,value"
    assert main(["max-principle", "--config", cfg, "--id", "Cor11_4", "--out", str(tmp_path / "mp")]) == 1
