"""The ten acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line (also repeated in
the terminal summary) and then asserts the same condition.
"""
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from roughuniform.busemann import anchor_from_space, busemann_field
from roughuniform.experiments import (
    experiment_counterexample,
    experiment_lemmas,
    experiment_theorem,
    similarity_identification,
)
from roughuniform.hyperbolicity import delta_four_point
from roughuniform.models import ball_truncation, binary_tree, circle_perimeter, halfplane_grid, mesh_of

from conftest import ACCEPTANCE, LOG3


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def lemma_reports(default_grid):
    return {eps: experiment_lemmas(default_grid, "omega", eps, seed=0) for eps in (0.5, 1.0, 2.0)}


def _verdicts(rep, *words):
    return [v for v in rep.verdicts if all(w in v.claim for w in words)]


def test_criterion_1_tree_exactness():
    t0 = time.perf_counter()
    worst = 0.0
    for depth in range(2, 9):
        t = binary_tree(depth)
        d = delta_four_point(t).delta
        f = busemann_field(t, anchor_from_space(t, "xi"), 0.0)
        u, v = t.edges.T
        lip = np.abs(f.values[u] - f.values[v]) - t.dist[u, v]
        i, j = np.triu_indices(t.n, 1)
        lip_all = np.abs(f.values[i] - f.values[j]) - t.dist[i, j]
        worst = max(worst, d, f.error_bound, lip.max(), lip_all.max())
    elapsed = time.perf_counter() - t0
    record(1, worst == 0.0 and elapsed < 5, f"max(delta, error_bound, Lipschitz slack) = {worst:g}, {elapsed:.1f}s < 5s")


def test_criterion_2_halfplane_fidelity():
    t0 = time.perf_counter()
    g = halfplane_grid()
    d = g.d(g.base, g.nearest((0.0, math.e)))
    ref = math.pi * (math.exp(2) - math.exp(-2))
    circ = circle_perimeter(g, 2.0) / ref
    sub = ball_truncation(g, 200)
    delta = delta_four_point(sub).delta
    bound = LOG3 + 2 * mesh_of(g)
    elapsed = time.perf_counter() - t0
    ok = abs(d - 1) <= 0.02 and abs(circ - 1) < 0.10 and delta <= bound and elapsed < 120
    record(2, ok, f"n={g.n}, d(o,(0,e))={d:.4f}, circle ratio {circ:.3f}, delta(200)={delta:.3f} <= {bound:.3f}, {elapsed:.0f}s")


def test_criterion_3_busemann_oracle(lemma_reports):
    v = _verdicts(lemma_reports[1.0], "ln y")[0]
    record(3, v.passed, f"max |b(0,y) + ln y| = {v.observed:.4f} <= {v.bound:.4f}")


def test_criterion_4_harnack(lemma_reports):
    parts, ok = [], True
    for eps, rep in lemma_reports.items():
        vs = _verdicts(rep, "Harnack")
        ok = ok and all(v.passed for v in vs)
        parts.append(f"eps={eps:g}: {int(sum(v.observed for v in vs))} violations")
    record(4, ok, "; ".join(parts))


def test_criterion_5_discretization(lemma_reports):
    parts, ok = [], True
    for eps, rep in lemma_reports.items():
        for v in _verdicts(rep, "discretized"):
            ok = ok and v.passed
            parts.append(f"eps={eps:g} {v.claim.split('(')[1].split(')')[0]} {v.observed:.3g} <= {v.bound:.3g}")
    record(5, ok and bool(parts), "; ".join(parts))


def test_criterion_6_sandwich(lemma_reports):
    parts, ok = [], True
    for eps, rep in lemma_reports.items():
        vs = _verdicts(rep, "delta_eps >=") + _verdicts(rep, "delta_eps <=")
        ok = ok and len(vs) == 2 and all(v.passed for v in vs)
    ana = _verdicts(lemma_reports[2.0], "y^eps/eps")
    ok = ok and len(ana) == 1 and ana[0].passed
    record(6, ok, f"sandwich at eps 0.5,1,2; eps=2 analytic rel dev {ana[0].observed:.4f} <= {ana[0].bound:.4f}")


def test_criterion_7_counterexample():
    t0 = time.perf_counter()
    rep = experiment_counterexample([0.5, 1.0, 2.0], [1.0, 2.0, 3.0])
    elapsed = time.perf_counter() - t0
    bad = [v.claim for v in rep.verdicts if not v.passed]
    record(7, rep.passed and elapsed < 600, f"{len(rep.verdicts)} verdicts, failing {bad}, {elapsed:.0f}s < 600s")


def test_criterion_8_transport():
    rep = experiment_theorem(epsilon=1.0)
    bad = [v.claim for v in rep.verdicts if not v.passed]
    record(8, rep.passed, f"{len(rep.verdicts)} verdicts, failing {bad}")


def test_criterion_9_identification(small_grid):
    worst = 0.0
    for eps in (0.5, 2.0):
        out = similarity_identification(small_grid, "omega", 1.0, eps)
        worst = max(worst, out["dist_rel_dev"])
    record(9, worst <= 1e-9, f"max relative deviation {worst:.2e} <= 1e-9")


def _cli(*args):
    r = subprocess.run([sys.executable, "-m", "roughuniform", *args], capture_output=True, text=True)
    return r.returncode, r.stderr


def test_criterion_10_determinism(tmp_path):
    graph_dir = tmp_path / "tree"
    code, err = _cli("model", "tree", "--depth", "5", "--out", str(graph_dir))
    assert code == 0, err
    graph = str(graph_dir / "graph.json")
    runs = {
        "lemmas": ["experiment", "lemmas", graph, "--anchor", "xi", "--epsilon", "1", "--seed", "7"],
        "counterexample": ["experiment", "counterexample", "--R", "1", "--eps", "2"],
        "uniformize": ["uniformize", graph, "--anchor", "xi", "--epsilon", "0.5", "--seed", "7"],
    }
    same = []
    for name, args in runs.items():
        blobs = []
        for k in range(2):
            out = tmp_path / f"{name}{k}"
            code, err = _cli(*args, "--out", str(out))
            assert code in (0, 1), err
            blobs.append((out / "report.json").read_bytes())
        json.loads(blobs[0])
        same.append(blobs[0] == blobs[1])
    record(10, all(same), f"byte-identical report.json for {', '.join(runs)}")
