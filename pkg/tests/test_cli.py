import csv
import io
import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from scipy import special

from relpot import __version__
from relpot.cli import EXIT_DOMAIN, EXIT_FAIL, EXIT_OK, EXIT_USAGE, UsageError, main, parse_axis, parse_values
from relpot.kernels import levy_density
from relpot.subordinator import McConfig, ProcessParams
from relpot.verify import check_identity

SCHEMA = json.loads((Path(__file__).resolve().parents[1] / "docs" / "report.schema.json").read_text())


def run(*argv):
    out = io.StringIO()
    rc = main(list(argv), out=out)
    return rc, out.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_eval_levy_example():
    rc, text = run("eval", "--what", "levy", "--alpha", "1", "--d", "1", "--m", "1", "--x", "1")
    assert rc == EXIT_OK
    (row,) = rows(text)
    assert float(row["value"]) == levy_density(1.0, ProcessParams(1.0, 1.0, 1))
    # alpha = 1, d = 1: the jump density is K_1(m|x|) m / (pi |x|)
    assert float(row["value"]) == pytest.approx(special.kv(1, 1.0) / np.pi, rel=1e-12)


def test_eval_green_gauss_halfline():
    rc, text = run("eval", "--what", "green-gauss", "--domain", "halfline", "--x", "2", "--y", "5")
    assert rc == EXIT_OK and float(rows(text)[0]["value"]) == 2.0


def test_eval_green_gauss_interval():
    rc, text = run("eval", "--what", "green-gauss", "--domain", "interval", "--R", "4", "--x", "1", "--y", "2")
    assert rc == EXIT_OK and float(rows(text)[0]["value"]) == 0.5


def test_eval_env_tail():
    rc, text = run("eval", "--what", "env-tail", "--alpha", "1", "--x", "4", "--t", "64")
    assert rc == EXIT_OK and float(rows(text)[0]["value"]) == 0.5


def test_eval_grid_rows_and_provenance():
    rc, text = run("eval", "--what", "theta", "--t", "1", "--u", "0.1:10:log:5", "--alpha", "1")
    r = rows(text)
    assert rc == EXIT_OK and len(r) == 5
    assert {row["seed"] for row in r} == {"0"} and {row["version"] for row in r} == {__version__}
    assert len({row["config_hash"] for row in r}) == 1
    assert list(r[0]) == ["t", "u", "value", "error", "seed", "config_hash", "version"]


def test_eval_json_validates():
    rc, text = run("eval", "--what", "laplace", "--t", "1", "--lam", "0.5,1,2", "--format", "json")
    doc = json.loads(text)
    jsonschema.validate(doc, SCHEMA)
    assert rc == EXIT_OK and len(doc["rows"]) == 3 and doc["meta"]["version"] == __version__


def test_eval_output_file(tmp_path):
    target = tmp_path / "levy.csv"
    rc, text = run("eval", "--what", "levy", "--x", "0.5:2:lin:4", "--output", str(target))
    assert rc == EXIT_OK and len(rows(target.read_text())) == 4


def test_eval_unknown_name_lists_names(capsys):
    rc, _ = run("eval", "--what", "nosuch", "--x", "1")
    assert rc == EXIT_USAGE and "levy" in capsys.readouterr().err


def test_eval_domain_error_names_point(capsys):
    rc, _ = run("eval", "--what", "levy", "--x", "0")
    assert rc == EXIT_DOMAIN and '"x": 0.0' in capsys.readouterr().err


def test_invalid_params_are_domain_errors():
    assert run("eval", "--what", "levy", "--alpha", "3", "--x", "1")[0] == EXIT_DOMAIN


def test_bad_grid_spec_is_usage_error():
    assert run("eval", "--what", "levy", "--x", "1:2:cubic:3")[0] == EXIT_USAGE


def test_parse_axis():
    assert np.allclose(parse_axis("0.1:10:log:3"), [0.1, 1.0, 10.0])
    assert np.allclose(parse_axis("0:1:lin:3"), [0, 0.5, 1])
    assert np.allclose(parse_axis("2.5"), [2.5])
    for bad in ("0:1:log:3", "1:2:lin", "1:2:lin:0", "a:b:lin:2"):
        with pytest.raises((UsageError, ValueError)):
            parse_axis(bad)


def test_parse_values_multidimensional():
    assert np.allclose(parse_values("1,2:3:lin:2"), [1, 2, 3])
    pts = parse_values("0:1:lin:2,5", d=2)
    assert np.allclose(np.asarray(pts), [[0, 5], [1, 5]])
    with pytest.raises(UsageError):
        parse_values("1,2", d=3)


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[process]\nalpha = 1.5\nm = 2\n[output]\nformat = json\n")
    rc, text = run("eval", "--what", "levy", "--x", "1", "--config", str(cfg))
    from_file = json.loads(text)["rows"][0]["value"]
    assert rc == EXIT_OK and from_file == levy_density(1.0, ProcessParams(1.5, 2.0, 1))
    rc, text = run("eval", "--what", "levy", "--x", "1", "--config", str(cfg), "--m", "1", "--format", "csv")
    assert float(rows(text)[0]["value"]) == levy_density(1.0, ProcessParams(1.5, 1.0, 1))


@pytest.mark.parametrize("body", ["[process]\nbeta = 1\n", "[nosection]\nx = 1\n", "[mc]\nn_samples = lots\n",
                                  "[output]\nformat = xml\n"])
def test_config_file_rejections(tmp_path, body):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(body)
    assert run("eval", "--what", "levy", "--x", "1", "--config", str(cfg))[0] == EXIT_USAGE


def test_simulate_exit_deterministic():
    argv = ("simulate", "--kind", "exit", "--domain", "interval", "--R", "2", "--x", "1", "--alpha", "1",
            "--m", "1", "--n", "100000", "--seed", "7")
    rc1, a = run(*argv)
    rc2, b = run(*argv)
    assert rc1 == rc2 == EXIT_OK and a == b
    row = rows(a)[0]
    assert row["seed"] == "7" and row["dt"] == "0.02"


def test_simulate_survival_deep_interior():
    rc, text = run("simulate", "--kind", "survival", "--domain", "halfspace", "--d", "1", "--x", "1000",
                   "--t", "1", "--n", "10000")
    assert rc == EXIT_OK and float(rows(text)[0]["value"]) > 0.99


def test_simulate_exitlaw_matches_ikeda_watanabe():
    rc, text = run("simulate", "--kind", "exitlaw", "--domain", "interval", "--R", "2", "--x", "1", "--E", "3,4")
    value = float(rows(text)[0]["value"])
    rep = check_identity("ikeda-watanabe", ProcessParams(1.0, 1.0, 1), McConfig())
    formula, tol = rep.notes["alpha=1"]["formula"], rep.notes["alpha=1"]["tolerance"]
    assert rc == EXIT_OK and abs(value - formula) <= tol


def test_simulate_green_cells():
    rc, text = run("simulate", "--kind", "green", "--domain", "interval", "--R", "2", "--x", "1",
                   "--cells", "0:2:8", "--n", "4000")
    r = rows(text)
    assert rc == EXIT_OK and len(r) == 8 and all(float(row["value"]) >= 0 for row in r)


def test_simulate_precondition_violations():
    assert run("simulate", "--kind", "exit", "--domain", "interval", "--R", "2", "--x", "3", "--n", "100")[0] \
        == EXIT_DOMAIN
    assert run("simulate", "--kind", "survival", "--domain", "halfspace", "--x", "1", "--n", "100")[0] \
        in (EXIT_USAGE, EXIT_DOMAIN)


def test_verify_unknown_suite():
    assert run("verify", "--suite", "nosuchsuite")[0] == EXIT_USAGE


def test_verify_identities_example(tmp_path):
    rc, text = run("verify", "--suite", "identities", "--alpha", "1", "--d", "1", "--output", str(tmp_path))
    assert rc == EXIT_OK
    lines = text.strip().splitlines()
    assert all(line.startswith("PASS") for line in lines[:-1]) and len(lines) == 9
    summary = json.loads((tmp_path / "summary.json").read_text())
    jsonschema.validate(summary, SCHEMA)
    assert summary["verdict"] and summary["missing"] == []
    for entry in summary["reports"]:
        doc = json.loads((tmp_path / entry["file"]).read_text())
        jsonschema.validate(doc, SCHEMA)
        assert max(doc["residuals"]) <= doc["tolerance"]


def test_verify_tail_deterministic(tmp_path):
    outs = []
    for k in range(2):
        rc, text = run("verify", "--suite", "tail", "--seed", "7", "--n", "8192", "--output", str(tmp_path / str(k)))
        assert rc in (EXIT_OK, EXIT_FAIL)
        outs.append(text.replace(str(tmp_path / str(k)), ""))
    assert outs[0] == outs[1]
    for name in sorted(p.name for p in (tmp_path / "0").iterdir()):
        assert (tmp_path / "0" / name).read_bytes() == (tmp_path / "1" / name).read_bytes()
