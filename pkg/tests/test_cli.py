import json
import shutil
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from oracles import chain_pair
from qcm import __version__
from qcm.cli import main
from qcm.dist import JointDistribution
from qcm.io import read_distribution, read_graph, read_model

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def work(tmp_path):
    for f in GOLDEN.glob("*.model.json"):
        shutil.copy(f, tmp_path)
    return tmp_path


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def _assert_same_csv(got: str, expected: str):
    g, e = got.splitlines(), expected.splitlines()
    assert g[:2] == e[:2]  # header and column names
    assert len(g) == len(e)
    for a, b in zip(g[2:], e[2:]):
        *la, pa = a.split(",")
        *lb, pb = b.split(",")
        assert la == lb
        assert float(pa) == pytest.approx(float(pb), abs=1e-12)


def test_version():
    res = run("--version")
    assert res.exit_code == 0 and __version__ in res.output


def test_help_documents_every_subcommand():
    res = run("--help")
    for name in ["simulate", "markov", "intervene", "unmeasure", "invert", "sic", "infer", "diff"]:
        assert name in res.output
        assert run(name, "--help").exit_code == 0


@pytest.mark.parametrize("stem", ["chain2", "singlenode"])
def test_simulate_matches_golden(work, stem):
    out = work / f"{stem}.csv"
    assert run("simulate", work / f"{stem}.model.json", "-o", out).exit_code == 0
    _assert_same_csv(out.read_text(), (GOLDEN / f"{stem}.expected.csv").read_text())


def test_simulate_chain2_hand_values_and_graph(work):
    out = work / "chain2.csv"
    run("simulate", work / "chain2.model.json", "-o", out)
    p = read_distribution(out)
    assert len(out.read_text().splitlines()) == 18
    ref = JointDistribution.from_function(p.variables, chain_pair)
    np.testing.assert_allclose(p.table, ref.table, atol=1e-12)
    graph = work / "chain2.graph.json"
    assert json.loads(graph.read_text()) == json.loads((GOLDEN / "chain2.expected.graph.json").read_text())


def test_simulate_is_byte_identical_on_rerun(work):
    run("simulate", work / "common_effect.model.json", "-o", work / "a.csv")
    run("simulate", work / "common_effect.model.json", "-o", work / "b.csv")
    assert (work / "a.csv").read_bytes() == (work / "b.csv").read_bytes()


def test_simulate_reseeding_changes_table(work):
    run("simulate", work / "common_effect.model.json", "-o", work / "a.csv")
    run("simulate", work / "common_effect.model.json", "--seed", 5, "-o", work / "b.csv")
    res = run("diff", work / "a.csv", work / "b.csv")
    assert float(res.output) > 1e-6


def test_markov_pass_and_inverted_graph(work):
    run("simulate", work / "common_cause.model.json", "-o", work / "cc.csv")
    res = run("markov", work / "cc.csv", work / "cc.graph.json", "-o", work / "rep.json")
    assert res.exit_code == 0, res.output
    assert res.output.strip().endswith("PASS")
    report = json.loads((work / "rep.json").read_text())
    assert report["header"].startswith(f"qcm {__version__}; inputs: cc.csv=sha256:")

    run("invert", work / "common_cause.model.json", "-o", work / "rev.model.json")
    assert run("markov", work / "cc.csv", work / "rev.graph.json").exit_code == 0


def test_markov_fails_on_hand_edited_table(work):
    run("simulate", work / "common_cause.model.json", "-o", work / "cc.csv")
    p = read_distribution(work / "cc.csv").reorder(["A", "B", "C"])
    bad = JointDistribution(p.variables, 0.9 * p.table + 0.1 * np.eye(4)[:, :, None] / 16)
    (work / "bad.csv").write_text(bad.to_csv())
    res = run("markov", work / "bad.csv", work / "cc.graph.json")
    assert res.exit_code == 1
    assert "FAIL A _||_ B | {}" in res.output


def test_markov_mismatch_is_input_error(work):
    run("simulate", work / "chain2.model.json", "-o", work / "c.csv")
    run("simulate", work / "singlenode.model.json", "-o", work / "s.csv")
    res = run("markov", work / "c.csv", work / "s.graph.json")
    assert res.exit_code == 2 and "error:" in res.output


def test_unmeasure_chain2_both(work):
    res = run("unmeasure", work / "chain2.model.json", "--node", "Z", "-o", work / "um")
    assert res.exit_code == 0
    tv = float(res.output.split("=")[1])
    assert tv < 1e-9
    np.testing.assert_allclose(read_distribution(work / "um.formula.csv").table, 0.25, atol=1e-12)
    report = json.loads((work / "um.report.json").read_text())
    assert report["agrees"] is True and report["kind"] == "unmeasurement"


def test_intervene_common_effect_variants(work):
    res = run("intervene", work / "common_effect.model.json", "--node", "C", "--value", 2, "-o", work / "am")
    assert res.exit_code == 0 and float(res.output.split("=")[1].split()[0]) < 1e-9
    res = run(
        "intervene", work / "common_effect.model.json", "--node", "C", "--value", 2,
        "--variant", "as-printed", "-o", work / "ap",
    )
    assert res.exit_code == 0
    assert "divergence" in res.output
    report = json.loads((work / "ap.report.json").read_text())
    assert report["agrees"] is False and report["tv_distance"] > 0.01
    assert report["warnings"]


def test_intervene_formula_only_from_table(work):
    run("simulate", work / "common_cause.model.json", "-o", work / "cc.csv")
    res = run(
        "intervene", work / "cc.csv", "--node", "C", "--value", 1, "--method", "formula",
        "--graph", work / "cc.graph.json", "-o", work / "f",
    )
    assert res.exit_code == 0
    assert (work / "f.formula.csv").exists() and not (work / "f.surgery.csv").exists()
    res = run("intervene", work / "cc.csv", "--node", "C", "--value", 1, "-o", work / "g")
    assert res.exit_code == 2


def test_exit_codes_for_undefined_and_unsupported(work):
    res = run("intervene", work / "common_cause.model.json", "--node", "A", "--value", 1, "--companions", "", "-o", work / "x")
    assert res.exit_code == 5
    res = run("intervene", work / "common_cause.model.json", "--node", "A", "--value", 1, "--companions", "B", "-o", work / "x")
    assert res.exit_code == 0 and float(res.output.split("=")[1]) < 1e-9
    t = np.zeros((4, 4))
    t[:2] = 1 / 8
    (work / "z.csv").write_text(JointDistribution([("Z", 4), ("D", 4)], t).to_csv())
    run("simulate", work / "chain2.model.json", "-o", work / "c.csv")
    res = run(
        "intervene", work / "z.csv", "--node", "Z", "--value", 3, "--method", "formula",
        "--graph", work / "c.graph.json", "-o", work / "y",
    )
    assert res.exit_code == 4


def test_parse_errors_exit_2(work):
    (work / "broken.model.json").write_text("{not json")
    assert run("simulate", work / "broken.model.json", "-o", work / "o.csv").exit_code == 2
    (work / "bad.csv").write_text("A,probability\n1,0.7\n")
    assert run("infer", work / "bad.csv").exit_code == 2


def test_invert_then_simulate_reproduces_table(work):
    assert run("invert", work / "chain2.model.json", "-o", work / "rev.model.json").exit_code == 0
    assert read_model(work / "rev.model.json").node_order == ("D", "Z")
    run("simulate", work / "chain2.model.json", "-o", work / "a.csv")
    run("simulate", work / "rev.model.json", "-o", work / "b.csv")
    assert float(run("diff", work / "a.csv", work / "b.csv").output) < 1e-9
    assert read_graph(work / "rev.graph.json").edges == {("D", "Z")}


def test_sic_builtin_and_search(work):
    res = run("sic", "--dim", 3, "-o", work / "f3.txt", "--report", work / "r3.json")
    assert res.exit_code == 0
    rep = json.loads((work / "r3.json").read_text())
    assert rep["pass"] and rep["tolerance"] == 1e-10 and rep["max_gram_error"] < 1e-10
    res = run("sic", "--dim", 4, "--seed", 1, "-o", work / "f4.txt")
    assert res.exit_code == 0
    assert (work / "f4.txt").read_text().startswith("# qcm")
    assert run("sic", "--dim", 4, "--max-iter", 0, "-o", work / "f0.txt").exit_code == 2


def test_searched_fiducial_usable_in_model(work):
    run("sic", "--dim", 4, "-o", work / "f4.txt")
    doc = {
        "format": "qcm-model",
        "wires": [{"id": "q", "dim": 4}],
        "gates": [{"type": "measure", "node": "X", "wire": "q", "povm": "f4.txt"}],
    }
    (work / "q4.model.json").write_text(json.dumps(doc))
    assert run("simulate", work / "q4.model.json", "-o", work / "q4.csv").exit_code == 0
    np.testing.assert_allclose(read_distribution(work / "q4.csv").table, 1 / 16, atol=1e-9)


def test_infer_common_cause_lists_fork_and_collider(work):
    run("simulate", work / "common_cause.model.json", "-o", work / "cc.csv")
    res = run("infer", work / "cc.csv", "-o", work / "inf.json")
    assert res.exit_code == 0
    lines = res.output.split()
    assert "[C][A|C][B|C]" in lines and "[A][B][C|A,B]" in lines
    assert len(json.loads((work / "inf.json").read_text())["graphs"]) == len(lines)
