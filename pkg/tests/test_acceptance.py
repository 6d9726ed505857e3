"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one PASS/FAIL line, printed in the terminal summary.
"""

import contextlib
import itertools
import time

import numpy as np
import pytest

from conftest import record
from oracles import chain_pair
from qcm.calculus import AS_PRINTED, compatible_qdags, intervene_formula, intervention_partition, markov_check, unmeasure_formula
from qcm.circuit import (
    TEMPLATES,
    apply_intervention_surgery,
    apply_unmeasurement_surgery,
    chain_model,
    derive_dag,
    simulate,
    time_reverse,
)
from qcm.dist import JointDistribution, condition, marginalize, max_ci_violation, tv_distance
from qcm.errors import UnsupportedShapeError
from qcm.graph import all_dags, causal_invert, q_separated
from qcm.sic import known_sic, search_fiducial, validate_sic, wh_povm_from_fiducial

pytestmark = pytest.mark.acceptance

EQUIV = 1e-9


@contextlib.contextmanager
def criterion(label):
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        record(label, False, f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
        raise
    record(label, True, detail.get("msg", "ok"))


@pytest.fixture(scope="module")
def tables(test_models):
    return {key: simulate(m) for key, m in test_models.items()}


def test_c01_sic_validity():
    with criterion("1 SIC validity") as out:
        worst = 0.0
        for d in (2, 3):
            rep = validate_sic(known_sic(d), 1e-10)
            errs = (rep.max_gram_error, rep.max_identity_error, rep.max_projector_error)
            assert max(errs) < 1e-10, (d, errs)
            worst = max(worst, *errs)
        out["msg"] = f"d=2,3 max error {worst:.1e} < 1e-10"


def test_c02_sic_search():
    with criterion("2 SIC search") as out:
        notes = []
        for d in (4, 5):
            t0 = time.perf_counter()
            f = search_fiducial(d, seed=1, tol=1e-7, max_iter=100_000)
            elapsed = time.perf_counter() - t0
            rep = validate_sic(wh_povm_from_fiducial(f), 1e-7)
            assert rep.passed, rep
            assert elapsed <= 60, elapsed
            notes.append(f"d={d} gram {rep.max_gram_error:.1e} in {elapsed:.2f}s")
        out["msg"] = "; ".join(notes)


def test_c03_unbiasedness():
    with criterion("3 unbiasedness") as out:
        worst = 0.0
        for d in (2, 3):
            p = simulate(chain_model(["X"], dim=d))
            worst = max(worst, float(np.abs(p.table - 1 / d**2).max()))
        assert worst < 1e-12
        out["msg"] = f"max |P(x) - 1/d^2| = {worst:.1e}"


def test_c04_bench_values(chain2, chain3):
    with criterion("4 bench values") as out:
        p = simulate(chain2)
        ref = JointDistribution.from_function(p.variables, chain_pair)
        e1 = float(np.abs(p.table - ref.table).max())
        assert e1 < 1e-12
        g = derive_dag(chain3)
        formula = unmeasure_formula(simulate(chain3), g, "Z").distribution
        surgery = simulate(apply_unmeasurement_surgery(chain3, "Z"))
        e2 = 0.0
        for q in (formula, surgery):
            for a in range(1, 5):
                want = np.array([(2 * (a == d) + 1) / 6 for d in range(1, 5)])
                e2 = max(e2, float(np.abs(condition(q, {"A": a}).table - want).max()))
        assert e2 < 1e-9
        out["msg"] = f"2-chain cell error {e1:.1e}; 3-chain un-measured P(d|a) error {e2:.1e}"


def test_c05_markov_condition(tables):
    with criterion("5 Markov condition") as out:
        worst = 0.0
        for (name, seed), p in tables.items():
            rep = markov_check(p, TEMPLATES[name], 1e-9)
            assert rep.passed, (name, seed, rep.worst_residual)
            worst = max(worst, rep.worst_residual)
        out["msg"] = f"{len(tables)} models pass; worst residual {worst:.1e}"


def test_c06_correlation_pattern(tables):
    # Canonical instance: seed 0 for both templates. The 20-seed tally is reported alongside.
    with criterion("6 correlation pattern") as out:
        marg, strong = {}, {}
        for name in ("common_cause", "common_effect"):
            marg[name] = max(max_ci_violation(tables[(name, s)], ["A"], ["B"]).residual for s in range(20))
            assert marg[name] < 1e-9, (name, marg[name])
            cond = [max_ci_violation(tables[(name, s)], ["A"], ["B"], ["C"]).residual for s in range(20)]
            assert cond[0] > 0.01, (name, cond[0])
            strong[name] = (cond[0], sum(c > 0.01 for c in cond))
        out["msg"] = (
            f"marginal residual <= {max(marg.values()):.1e}; conditional residual at seed 0: "
            f"cause {strong['common_cause'][0]:.4f}, effect {strong['common_effect'][0]:.4f}; "
            f"seeds above 0.01: cause {strong['common_cause'][1]}/20, effect {strong['common_effect'][1]}/20"
        )


def test_c07_urgleichung_oracle(test_models, tables):
    with criterion("7 Urgleichung oracle") as out:
        worst, n = 0.0, 0
        for (name, seed), m in test_models.items():
            p, g = tables[(name, seed)], TEMPLATES[name]
            for z in g.names:
                formula = unmeasure_formula(p, g, z).distribution
                surgery = simulate(apply_unmeasurement_surgery(m, z)).reorder(formula.names)
                tv = tv_distance(formula, surgery)
                assert tv < EQUIV, (name, seed, z, tv)
                worst, n = max(worst, tv), n + 1
        out["msg"] = f"{n} (model, node) pairs; worst tv {worst:.1e}"


def test_c08_intervention_oracle(test_models, tables):
    with criterion("8 intervention oracle") as out:
        worst_am = worst_ap = 0.0
        n_am = n_ap = 0
        divergence = []
        for (name, seed), m in test_models.items():
            p, g = tables[(name, seed)], TEMPLATES[name]
            for w in g.names:
                try:
                    intervention_partition(g, w)
                except UnsupportedShapeError:
                    with pytest.raises(UnsupportedShapeError):
                        intervene_formula(p, g, w, 1)
                    continue
                for value in range(1, 5):
                    surgery = simulate(apply_intervention_surgery(m, w, value)).reorder(p.names)
                    tv = tv_distance(intervene_formula(p, g, w, value).distribution, surgery)
                    assert tv < EQUIV, (name, seed, w, value, tv)
                    worst_am, n_am = max(worst_am, tv), n_am + 1
                    printed = intervene_formula(p, g, w, value, AS_PRINTED)
                    tv_ap = tv_distance(printed.distribution, surgery)
                    if not g.ancestors(w):
                        assert tv_ap < EQUIV, (name, seed, w, value, tv_ap)
                        worst_ap, n_ap = max(worst_ap, tv_ap), n_ap + 1
                    elif name == "common_effect" and w == "C":
                        assert printed.warnings
                        divergence.append(tv_ap)
        assert n_am > 0 and n_ap > 0
        assert divergence and min(divergence) > EQUIV
        out["msg"] = (
            f"ancestor_marginal: {n_am} queries, worst tv {worst_am:.1e}; "
            f"as_printed on ancestor-free nodes: {n_ap} queries, worst tv {worst_ap:.1e}; "
            f"as_printed on common-effect C diverges, tv {min(divergence):.3f}..{max(divergence):.3f}"
        )


def _disjoint_triples(names):
    for lab in itertools.product(range(4), repeat=len(names)):
        sets = [{n for n, l in zip(names, lab) if l == k} for k in (1, 2, 3)]
        if sets[0] and sets[1]:
            yield sets


def test_c09_causal_inversion(test_models, tables):
    with criterion("9 causal inversion") as out:
        worst = 0.0
        for (name, seed), m in test_models.items():
            p = tables[(name, seed)]
            r = simulate(time_reverse(m)).reorder(p.names)
            tv = tv_distance(p, r)
            assert tv < EQUIV, (name, seed, tv)
            worst = max(worst, tv)
            g = TEMPLATES[name]
            assert markov_check(p, g).passed and markov_check(p, causal_invert(g)).passed
        checks = 0
        for n in range(1, 5):
            names = list("ABCD"[:n])
            triples = list(_disjoint_triples(names))
            for g in all_dags([(x, 2) for x in names]):
                h = causal_invert(g)
                for u, v, w in triples:
                    assert q_separated(g, u, v, w) == q_separated(h, u, v, w), (str(g), u, v, w)
                    checks += 1
        out["msg"] = f"reversal worst tv {worst:.1e}; Markov holds for G and G*; {checks} q-separation queries agree"


def test_c10_inference_symmetry(tables):
    with criterion("10 inference symmetry") as out:
        sizes = set()
        for (name, seed), p in tables.items():
            found = compatible_qdags(p, 1e-9)
            for g in found:
                assert any(causal_invert(g).same_structure(h) for h in found), (name, seed, str(g))
            sizes.add(len(found))
            if name == "common_cause":
                assert any(g.same_structure(TEMPLATES["common_cause"]) for g in found), seed
                assert any(g.same_structure(TEMPLATES["common_effect"]) for g in found), seed
        out["msg"] = f"{len(tables)} tables closed under inversion (list sizes {sorted(sizes)}); fork and collider both found"
