"""``qcm`` command-line interface.

Exit codes: 0 success / check passed, 1 Markov check failed, 2 input error,
3 resource limit, 4 undefined query, 5 unsupported graph shape.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import __version__
from . import io as qio
from .calculus import ANCESTOR_MARGINAL, AS_PRINTED, compatible_qdags, intervene_formula, markov_check, unmeasure_formula
from .circuit import (
    apply_intervention_surgery,
    apply_unmeasurement_surgery,
    derive_dag,
    simulate,
    time_reverse,
    with_haar_seed_offset,
)
from .dist import tv_distance
from .errors import InputError, QcmError
from .graph import causal_invert
from .sic import ANALYTIC_TOL, SEARCH_TOL, known_fiducial, search_fiducial, validate_sic, wh_povm_from_fiducial

VARIANT_CHOICES = {"ancestor-marginal": ANCESTOR_MARGINAL, "as-printed": AS_PRINTED}
EQUIV_TOL = 1e-9


def _write(path, text: str):
    if str(path) == "-":
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text)


def _sibling(path, suffix: str) -> Path:
    path = Path(path)
    stem = path.name.split(".")[0]
    return path.with_name(stem + suffix)


def _is_model_file(path) -> bool:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    body = "\n".join(ln for ln in text.splitlines() if not ln.startswith("#")).lstrip()
    return body.startswith("{")


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except QcmError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)


@click.group(cls=_Group)
@click.version_option(__version__, prog_name="qcm")
def main():
    """Quantum causal models from SIC measurements: simulate, check, intervene, un-measure."""


@main.command("simulate")
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, help="Distribution CSV to write ('-' for stdout).")
@click.option("--graph-out", default=None, help="Derived DAG file. [default: <out stem>.graph.json]")
@click.option("--seed", type=int, default=None, help="Re-seed every Haar unitary from this base seed. [default: seeds in the file]")
def simulate_cmd(model, out, graph_out, seed):
    """Exactly simulate MODEL and write its joint outcome table and derived DAG."""
    m = qio.read_model(model)
    if seed is not None:
        m = with_haar_seed_offset(m, seed)
    header = qio.header_line([model], seed=seed)
    p = simulate(m)
    _write(out, p.to_csv(header))
    if graph_out is None and out != "-":
        graph_out = _sibling(out, ".graph.json")
    if graph_out is not None:
        _write(graph_out, qio.dumps_graph(derive_dag(m), header))


@main.command("markov")
@click.argument("dist", type=click.Path(exists=True, dir_okay=False))
@click.argument("graph", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=1e-9, show_default=True, help="Largest tolerated independence residual.")
@click.option("-o", "--out", default=None, help="Write the full report (JSON) here. [default: no file]")
def markov_cmd(dist, graph, tol, out):
    """Check DIST against the Quantum Markov Condition for GRAPH; exit 1 on failure."""
    p = qio.read_distribution(dist)
    g = qio.read_graph(graph)
    report = markov_check(p, g, tol)
    if out:
        _write(out, qio.dumps_report(report.to_dict(), qio.header_line([dist, graph], tol=tol)))
    n_sep = sum(t.separated for t in report.triples)
    click.echo(f"q-separated triples: {n_sep} of {len(report.triples)}")
    click.echo(f"worst residual: {report.worst_residual:.3e} (tol {tol:g})")
    for t in report.failures:
        click.echo(f"FAIL {','.join(t.u)} _||_ {','.join(t.v)} | {{{','.join(t.w)}}}: residual {t.residual:.3e}")
    click.echo("PASS" if report.passed else "FAIL")
    sys.exit(0 if report.passed else 1)


def _load_query_input(path, graph_path, method):
    """Return (model or None, distribution, graph)."""
    if _is_model_file(path):
        m = qio.read_model(path)
        if not m.is_pristine:
            raise InputError("query input model already contains surgery")
        p = simulate(m)
        g = qio.read_graph(graph_path) if graph_path else derive_dag(m)
        return m, p, g
    if method != "formula":
        raise InputError("surgery needs a model file; use --method formula with a distribution")
    if not graph_path:
        raise InputError("--graph is required when the input is a distribution")
    return None, qio.read_distribution(path), qio.read_graph(graph_path)


_method_option = click.option(
    "--method",
    type=click.Choice(["formula", "surgery", "both"]),
    default="both",
    show_default=True,
    help="Closed-form rule, circuit surgery, or both with their TV distance.",
)


@main.command("intervene")
@click.argument("input_path", metavar="INPUT", type=click.Path(exists=True, dir_okay=False))
@click.option("--node", required=True, help="Node to intervene on.")
@click.option("--value", type=int, required=True, help="Outcome label (1..d^2) to set.")
@_method_option
@click.option(
    "--variant",
    type=click.Choice(sorted(VARIANT_CHOICES)),
    default="ancestor-marginal",
    show_default=True,
    help="Intervention formula variant.",
)
@click.option(
    "--companions",
    default=None,
    help="Comma-separated slice companions for NODE ('' for the empty slice). [default: first covering slice]",
)
@click.option("--graph", "graph_path", default=None, help="Graph file. [default: derived from the model]")
@click.option("-o", "--out", required=True, help="Output prefix: writes <prefix>.formula.csv, .surgery.csv, .report.json.")
def intervene_cmd(input_path, node, value, method, variant, companions, graph_path, out):
    """Post-intervention statistics for setting NODE to VALUE."""
    m, p, g = _load_query_input(input_path, graph_path, method)
    header = qio.header_line([input_path] + ([graph_path] if graph_path else []), node=node, value=value)
    report = {"kind": "intervention", "node": node, "value": value, "method": method}
    formula = surgery = None
    if method in ("formula", "both"):
        if companions is not None:
            companions = [c.strip() for c in companions.split(",") if c.strip()]
        res = intervene_formula(p, g, node, value, VARIANT_CHOICES[variant], companions)
        formula = res.distribution
        report.update(res.to_dict())
        _write(f"{out}.formula.csv", formula.to_csv(header))
    if method in ("surgery", "both"):
        surgery = simulate(apply_intervention_surgery(m, node, value)).reorder(p.names)
        _write(f"{out}.surgery.csv", surgery.to_csv(header))
    if formula is not None and surgery is not None:
        tv = tv_distance(formula, surgery)
        report["tv_distance"] = tv
        report["agrees"] = tv < EQUIV_TOL
        click.echo(f"tv_distance={tv:.3e}")
        if tv >= EQUIV_TOL:
            click.echo(f"divergence: formula variant {variant} differs from surgery (documented for as-printed)")
    _write(f"{out}.report.json", qio.dumps_report(report, header))


@main.command("unmeasure")
@click.argument("input_path", metavar="INPUT", type=click.Path(exists=True, dir_okay=False))
@click.option("--node", required=True, help="Measurement to remove.")
@_method_option
@click.option("--graph", "graph_path", default=None, help="Graph file. [default: derived from the model]")
@click.option("--tol", type=float, default=1e-9, show_default=True, help="Clamping / realizability tolerance.")
@click.option("-o", "--out", required=True, help="Output prefix: writes <prefix>.formula.csv, .surgery.csv, .report.json.")
def unmeasure_cmd(input_path, node, method, graph_path, tol, out):
    """Statistics when measurement NODE is not performed."""
    m, p, g = _load_query_input(input_path, graph_path, method)
    header = qio.header_line([input_path] + ([graph_path] if graph_path else []), node=node)
    report = {"kind": "unmeasurement", "node": node, "method": method}
    formula = surgery = None
    if method in ("formula", "both"):
        res = unmeasure_formula(p, g, node, tol=tol)
        formula = res.distribution
        report.update(res.to_dict())
        _write(f"{out}.formula.csv", formula.to_csv(header))
    if method in ("surgery", "both"):
        rest = [n for n in p.names if n != node]
        surgery = simulate(apply_unmeasurement_surgery(m, node)).reorder(rest)
        _write(f"{out}.surgery.csv", surgery.to_csv(header))
    if formula is not None and surgery is not None:
        tv = tv_distance(formula, surgery)
        report["tv_distance"] = tv
        report["agrees"] = tv < EQUIV_TOL
        click.echo(f"tv_distance={tv:.3e}")
    _write(f"{out}.report.json", qio.dumps_report(report, header))


@main.command("invert")
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", required=True, help="Reversed model file.")
@click.option("--graph-out", default=None, help="Inverted DAG file. [default: <out stem>.graph.json]")
def invert_cmd(model, out, graph_out):
    """Time-reverse MODEL (unitaries replaced by adjoints) and write the inverted DAG."""
    m = qio.read_model(model)
    r = time_reverse(m)
    header = qio.header_line([model])
    _write(out, qio.dumps_model(r, header))
    _write(graph_out or _sibling(out, ".graph.json"), qio.dumps_graph(causal_invert(derive_dag(m)), header))


@main.command("sic")
@click.option("--dim", type=int, required=True, help="Hilbert space dimension d.")
@click.option("--seed", type=int, default=1, show_default=True, help="Search seed (ignored for built-in d=2,3).")
@click.option("--tol", type=float, default=None, help="Validation tolerance. [default: 1e-10 built-in, 1e-7 searched]")
@click.option("--max-iter", type=int, default=100_000, show_default=True, help="Search evaluation budget.")
@click.option("--search", is_flag=True, help="Search even when a built-in fiducial exists.")
@click.option("-o", "--out", default="-", show_default=True, help="Fiducial file.")
@click.option("--report", "report_path", default=None, help="Validation report (JSON). [default: print summary only]")
def sic_cmd(dim, seed, tol, max_iter, search, out, report_path):
    """Produce a SIC fiducial for dimension DIM and validate its POVM."""
    builtin = dim in (2, 3) and not search
    tol = tol if tol is not None else (ANALYTIC_TOL if builtin else SEARCH_TOL)
    fid = known_fiducial(dim) if builtin else search_fiducial(dim, seed, tol, max_iter)
    rep = validate_sic(wh_povm_from_fiducial(fid), tol)
    header = qio.header_line(dim=dim, seed=None if builtin else seed, source="builtin" if builtin else "search")
    _write(out, qio.dumps_fiducial(fid, header))
    if report_path:
        _write(report_path, qio.dumps_report({"kind": "sic_validation", "dim": dim, **rep.to_dict()}, header))
    click.echo(
        f"gram {rep.max_gram_error:.2e} identity {rep.max_identity_error:.2e} "
        f"projector {rep.max_projector_error:.2e} -> {'PASS' if rep.passed else 'FAIL'} at {tol:g}",
        err=out == "-",
    )
    sys.exit(0 if rep.passed else 1)


@main.command("infer")
@click.argument("dist", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=1e-9, show_default=True, help="Markov residual tolerance.")
@click.option("--max-nodes", type=int, default=5, show_default=True, help="Refuse inputs with more variables.")
@click.option("-o", "--out", default=None, help="Write the graph list (JSON) here. [default: print only]")
def infer_cmd(dist, tol, max_nodes, out):
    """List every QDAG compatible with DIST under the Quantum Markov Condition."""
    p = qio.read_distribution(dist)
    graphs = compatible_qdags(p, tol, max_nodes)
    for g in graphs:
        click.echo(str(g))
    if out:
        doc = {"kind": "compatible_qdags", "tol": tol, "graphs": [g.to_dict() for g in graphs]}
        _write(out, qio.dumps_report(doc, qio.header_line([dist], tol=tol)))


@main.command("diff")
@click.argument("a", type=click.Path(exists=True, dir_okay=False))
@click.argument("b", type=click.Path(exists=True, dir_okay=False))
def diff_cmd(a, b):
    """Total-variation distance between two distribution files (B aligned to A's variable order)."""
    p, q = qio.read_distribution(a), qio.read_distribution(b)
    click.echo(f"{tv_distance(p, q.reorder(p.names)):.17g}")


if __name__ == "__main__":
    main()
