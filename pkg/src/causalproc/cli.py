"""Command-line front end.

Every invocation writes a single JSON report
``{command, inputs, tolerances, results, residuals, pass}`` to stdout (or
``--output``) and exits 0 iff the report passes, 1 on a numerical failure,
and 2 when an input fails to parse.  Reports are byte-identical for
identical configuration and seed: keys are sorted and all randomness flows
from ``numpy.random.default_rng(seed)`` (the PCG64 generator).

Tolerances may be overridden through ``CAUSALPROC_TOL_<NAME>`` environment
variables (e.g. ``CAUSALPROC_TOL_SUPPORT=1e-8``); the values in force are
embedded in every report.
"""

from __future__ import annotations

import itertools
import json
import sys

import click
import numpy as np

from .config import Tolerances
from .linalg import ComplexMatrix
from .objects import DensityOperator, identity_choi
from .processes import SiteRegistry, markov_process, validate_process
from .discrimination import parity_protocol, run
from .observables import (
    channel_orthogonality_defect,
    condition3_counterexample,
    counting_bound,
    order_discrimination_protocol,
    permuted_ensemble,
    smallest_obstructed_n,
)
from .serialize import load_process


def _emit(report: dict, output: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if output:
        with open(output, "w") as f:
            f.write(text)
    else:
        click.echo(text, nl=False)


def _finish(command: str, inputs: dict, results: dict, residuals: dict,
            passed: bool, output: str | None) -> None:
    report = {
        "command": command,
        "inputs": inputs,
        "tolerances": Tolerances.from_env().to_dict(),
        "results": results,
        "residuals": residuals,
        "pass": bool(passed),
    }
    _emit(report, output)
    sys.exit(0 if passed else 1)


def _load_or_die(path: str):
    try:
        return load_process(path)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
        click.echo(f"error: cannot parse process file {path}: {e}", err=True)
        sys.exit(2)


@click.group()
def main():
    """Process-matrix validation, discrimination, and demonstration suites."""


@main.command()
@click.argument("file", type=click.Path(exists=False))
@click.option("--output", type=click.Path(), default=None,
              help="Write the JSON report here instead of stdout.")
def validate(file, output):
    """Validate a serialized process matrix FILE."""
    w = _load_or_die(file)
    report = validate_process(w)
    _finish(
        "validate",
        {"file": file},
        {"passed": report.passed, "failures": report.failures()},
        report.to_dict(),
        report.passed,
        output,
    )


@main.command()
@click.option("--process-a", "path_a", required=True, type=click.Path())
@click.option("--process-b", "path_b", required=True, type=click.Path())
@click.option("--protocol", type=click.Choice(["parity"]), default="parity")
@click.option("--pair", required=True, help="Comma-separated site pair, e.g. A,B.")
@click.option("--flip", required=True, help="Which pair site forwards the flipped bit.")
@click.option("--basis", type=click.Choice(["z", "x", "y"]), default="z")
@click.option("--output", type=click.Path(), default=None)
def discriminate(path_a, path_b, protocol, pair, flip, basis, output):
    """Run the parity protocol on two processes and test support disjointness."""
    wa = _load_or_die(path_a)
    wb = _load_or_die(path_b)
    sites = tuple(s.strip() for s in pair.split(","))
    if len(sites) != 2:
        click.echo(f"error: --pair must name two sites, got {pair!r}", err=True)
        sys.exit(2)
    if wa.registry.labels != wb.registry.labels:
        click.echo("error: the two processes have different site registries", err=True)
        sys.exit(2)
    tols = Tolerances.from_env()
    try:
        iv = parity_protocol(wa.registry, sites, flip_site=flip, basis=basis)
    except ValueError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    da = run(wa, iv)
    db = run(wb, iv)
    sa = da.support(tols.support)
    sb = db.support(tols.support)
    disjoint = not (sa & sb)
    _finish(
        "discriminate",
        {"process_a": path_a, "process_b": path_b, "protocol": protocol,
         "pair": list(sites), "flip": flip, "basis": basis},
        {"distributions": {"a": da.to_dict(), "b": db.to_dict()},
         "support_a": sorted(map(repr, sa)), "support_b": sorted(map(repr, sb)),
         "disjoint": disjoint},
        {"support_threshold": tols.support},
        disjoint,
        output,
    )


@main.group()
def demo():
    """Demonstration suites."""


@demo.command("cond3")
@click.option("--output", type=click.Path(), default=None)
def demo_cond3(output):
    """Two sharp opposite-order classes whose uniform mixtures coincide."""
    tols = Tolerances.from_env()
    res = condition3_counterexample()
    passed = res.condition3_violated
    _finish(
        "demo cond3",
        {"d": 2},
        res.to_dict(),
        {"mixture_distance": res.mixture_distance,
         "exact_threshold": tols.exact},
        passed,
        output,
    )


@demo.command("cond2-channels")
@click.option("--d", "d", type=int, default=4, show_default=True)
@click.option("--samples", type=int, default=500, show_default=True)
@click.option("--seed", type=int, default=None,
              help="Required whenever samples > 0.")
@click.option("--output", type=click.Path(), default=None)
def demo_cond2_channels(d, samples, seed, output):
    """Orthogonality defect of the d! permutation-dephasing channel outputs."""
    if samples > 0 and seed is None:
        click.echo("error: --seed is required when --samples > 0", err=True)
        sys.exit(2)
    rng = np.random.default_rng(seed)
    defects = []
    for _ in range(samples):
        v = rng.standard_normal(d * d) + 1j * rng.standard_normal(d * d)
        v /= np.linalg.norm(v)
        state = DensityOperator(ComplexMatrix(np.outer(v, v.conj()), (d, d)))
        defects.append(channel_orthogonality_defect(d, state).defect)
    min_defect = min(defects) if defects else None
    results: dict = {
        "d": d,
        "factorial": len(list(itertools.permutations(range(d)))),
        "samples": samples,
        "min_defect": min_defect,
        "max_defect": max(defects) if defects else None,
    }
    if d >= 3:
        # No input reaches mutual orthogonality of all d! outputs.
        passed = samples > 0 and min_defect > 1e-8
    else:
        # At d = 2 a maximally correlated computational-basis input does.
        basis = np.zeros((4, 4))
        basis[0, 0] = basis[3, 3] = 0.5
        basis[0, 3] = basis[3, 0] = 0.5
        ortho = channel_orthogonality_defect(
            2, DensityOperator(ComplexMatrix(basis, (2, 2)))
        ).defect
        results["orthogonal_case_defect"] = ortho
        passed = ortho <= 1e-12
    _finish(
        "demo cond2-channels",
        {"d": d, "samples": samples, "seed": seed,
         "generator": "numpy.random.default_rng (PCG64)"},
        results,
        {"defect_floor": 1e-8, "orthogonality_threshold": 1e-12},
        passed,
        output,
    )


@demo.command("counting")
@click.option("--n", "n", type=int, required=True)
@click.option("--d", "d", type=int, required=True)
@click.option("--output", type=click.Path(), default=None)
def demo_counting(n, d, output):
    """Exact comparison of n! causal orders against the d**(4n) image cap."""
    try:
        bound = counting_bound(n, d)
    except (ValueError, OverflowError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    results = bound.to_dict()
    results["smallest_obstructed_n_at_d"] = smallest_obstructed_n(d)
    _finish("demo counting", {"n": n, "d": d}, results, {}, True, output)


@demo.command("ensemble")
@click.option("--n", "n", type=int, default=3, show_default=True,
              help="Number of qubit sites.")
@click.option("--max-pairs", type=int, default=None,
              help="Subsample this many process pairs (requires --seed).")
@click.option("--seed", type=int, default=None)
@click.option("--output", type=click.Path(), default=None)
def demo_ensemble(n, max_pairs, seed, output):
    """Pairwise parity discrimination across all site permutations of a
    strict identity-link chain."""
    if max_pairs is not None and seed is None:
        click.echo("error: --seed is required with --max-pairs", err=True)
        sys.exit(2)
    if n < 2:
        click.echo("error: need at least 2 sites", err=True)
        sys.exit(2)
    reg = SiteRegistry.qubit_sites(n)
    start = markov_process(
        reg,
        DensityOperator.maximally_mixed((2,)),
        [identity_choi(2)] * (n - 1),
        reg.labels,
    )
    classes = permuted_ensemble(start)
    pairs = list(itertools.combinations(range(len(classes)), 2))
    if max_pairs is not None and max_pairs < len(pairs):
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(pairs), size=max_pairs, replace=False)
        pairs = [pairs[i] for i in sorted(idx)]
    entries = []
    passed = True
    for i, j in pairs:
        ci, cj = classes[i], classes[j]
        wi, wj = ci.members[0], cj.members[0]
        pair_sites, iv = order_discrimination_protocol(reg, ci.order, cj.order)
        di, dj = run(wi, iv), run(wj, iv)
        disjoint = not (di.support() & dj.support())
        passed = passed and disjoint
        entries.append({
            "order_a": ci.label, "order_b": cj.label,
            "pair": list(pair_sites), "disjoint": disjoint,
        })
    _finish(
        "demo ensemble",
        {"n": n, "max_pairs": max_pairs, "seed": seed,
         "generator": "numpy.random.default_rng (PCG64)"},
        {"classes": len(classes), "pairs_checked": len(pairs),
         "entries": entries},
        {},
        passed,
        output,
    )


if __name__ == "__main__":
    main()
