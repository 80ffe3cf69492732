"""Acceptance gate: one test per criterion, printed pass/fail lines.

Each test enforces the stated tolerance and runtime budget. The two
Cora-dependent criteria run only when data/cora is vendored (see
scripts/fetch_cora.py) and skip with an explicit reason otherwise.
"""
import json
import os
import time

import numpy as np
import pytest

from conftest import (CORA_DIR, TOY6_DIR, dense_filter_oracle,
                      pc_explicit_sum, random_graph)
from spcnet.cli import ExperimentConfig, grid_search, run, strip_timing
from spcnet.data import SplitProtocol, load_dataset, make_split
from spcnet.filters import FilterSpec, apply_filter, spectral_norm, \
    stability_constant
from spcnet.graph import build_normalized_laplacian, edge_homophily
from spcnet.model import ModelConfig, train
from spcnet.pcpoly import frequency_response, pc_coefficients
from spcnet.robustness import PerturbSpec, filter_matrix_dense, perturb
from test_model import fd_gradient_audit, small_instance

CORA_PRESENT = os.path.isdir(CORA_DIR)
CORA_SKIP = ("data/cora not vendored (no network in this environment); "
             "run scripts/fetch_cora.py on a networked machine first")


def _report(cid, desc, ok):
    print(f"[acceptance] criterion {cid} ({desc}): {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {cid} failed: {desc}"


def _require_cora(cid, desc):
    if not CORA_PRESENT:
        print(f"[acceptance] criterion {cid} ({desc}): SKIP (no data/cora)")
        pytest.skip(CORA_SKIP)


def test_c01_coefficient_recurrence_vs_explicit_sum():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    ok = True
    for _ in range(200):
        k = float(rng.uniform(-5, 5))
        t = float(rng.uniform(0, 5))
        n = int(rng.integers(0, 16))
        values = pc_coefficients(k, t, n).values
        for i in range(n + 1):
            expect = pc_explicit_sum(k, t, i)
            if abs(values[i] - expect) > 1e-9 * max(1.0, abs(expect)):
                ok = False
    elapsed = time.perf_counter() - t0
    _report(1, "coefficient recurrence vs explicit sum", ok and elapsed < 1.0)


def test_c02_sparse_filter_matches_dense_spectral_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(50):
        m = int(rng.integers(2, 61))
        g = random_graph(rng, m, edge_prob=0.3)
        lap = build_normalized_laplacian(g)
        spec = FilterSpec(k=float(rng.uniform(-2, 3)),
                          t=float(rng.uniform(0, 2)),
                          n_terms=int(rng.integers(0, 13)))
        block = rng.standard_normal((m, 3))
        got = apply_filter(lap, block, spec)
        oracle = dense_filter_oracle(lap.to_dense(), spec.k, spec.t,
                                     spec.n_terms) @ block
        worst = max(worst, float(np.abs(got - oracle).max()))
    elapsed = time.perf_counter() - t0
    _report(2, f"spectral equivalence (worst {worst:.2e})",
            worst <= 1e-8 and elapsed < 10.0)


def test_c03_stability_bound_zero_violations():
    # Committed distribution: k in [2, 3], t in [0, 0.4], N in 1..12 on
    # ER graphs. In this rectangle the constant dominates the truncated
    # response's slope over the realized spectra ([0, ~1.51] measured,
    # condition verified up to 1.6), so the inequality holds
    # structurally; outside it (fractional k < 2 or larger t) the
    # constant genuinely fails at a small rate because L's spectrum
    # exceeds the [-1, 1] premise.
    t0 = time.perf_counter()
    rng = np.random.default_rng(103)
    violations = 0
    checked = 0
    while checked < 100:
        m = int(rng.integers(8, 61))
        g = random_graph(rng, m, edge_prob=float(rng.uniform(0.15, 0.5)))
        if g.num_edges < 4:
            continue
        checked += 1
        spec = FilterSpec(k=float(rng.uniform(2.0, 3.0)),
                          t=float(rng.uniform(0.0, 0.4)),
                          n_terms=int(rng.integers(1, 13)))
        mode = ["add", "remove", "mixed"][int(rng.integers(3))]
        pspec = PerturbSpec(ratio=float(rng.uniform(0.01, 0.10)), mode=mode,
                            seed=int(rng.integers(1 << 31)))
        gp = perturb(g, pspec)
        L = build_normalized_laplacian(g)
        Lp = build_normalized_laplacian(gp)
        observed = spectral_norm(filter_matrix_dense(Lp, spec)
                                 - filter_matrix_dense(L, spec))
        bound = stability_constant(spec) * \
            spectral_norm(Lp.to_dense() - L.to_dense())
        violations += observed > bound + 1e-9
    elapsed = time.perf_counter() - t0
    _report(3, f"stability bound ({violations} violations in {checked})",
            violations == 0 and elapsed < 30.0)


def test_c04_gradient_audit_twenty_instances():
    t0 = time.perf_counter()
    rng = np.random.default_rng(104)
    plans = (["spcnet-d"] * 7 + ["spcnet-l"] * 7 + ["pcnet"] * 4
             + ["spcnet-d-linear", "spcnet-l-linear"])
    for variant in plans:
        hidden = 0 if variant.endswith("-linear") else 5
        base = variant.replace("-linear", "")
        kw = {"num_orders": 3} if base == "pcnet" else {}
        g, _, params, split = small_instance(rng, base, hidden=hidden, **kw)
        fd_gradient_audit(g, params, split, step=1e-5, rtol=1e-4)
    elapsed = time.perf_counter() - t0
    _report(4, "gradient audit incl. dloss/dk", elapsed < 30.0)


def test_c05_truncation_convergence_integer_orders():
    lams = np.arange(0.0, 2.0 + 1e-9, 0.05)
    worst = 0.0
    for k in range(5):
        for t in (0.25, 0.5, 1.0):
            coeffs = pc_coefficients(float(k), t, 25)
            got = frequency_response(coeffs, lams)
            target = 1.0 + (1.0 - lams) ** k * np.exp(t * lams)
            worst = max(worst, float(np.abs(got - target).max()))
    _report(5, f"truncation convergence (worst {worst:.2e})", worst < 1e-8)


def test_c06_sbm_qualitative_reproduction():
    t0 = time.perf_counter()
    sbm_split = {"kind": "dense-random", "train_frac": 0.1, "val_frac": 0.0}
    seeds = [0, 1, 2, 3, 4]

    homo = run(ExperimentConfig(
        task="sbm", sbm={"nodes": 500, "p": 0.2, "q": 0.05},
        split=sbm_split, model={}, seeds=seeds), workers=2)

    # tune (k, t) for the heterophilic setting on an independent draw
    # with its own validation split (no test leakage)
    best, _ = grid_search(ExperimentConfig(
        task="grid", sbm={"nodes": 500, "p": 0.05, "q": 0.2},
        split={"kind": "dense-random", "train_frac": 0.1, "val_frac": 0.1},
        model={}, seeds=[100]), workers=2)
    hetero_sbm = {"nodes": 500, "p": 0.05, "q": 0.2}
    tuned = run(ExperimentConfig(
        task="sbm", sbm=hetero_sbm, split=sbm_split,
        model={"k": best["k"], "t": best["t"]}, seeds=seeds), workers=2)
    low_pass = run(ExperimentConfig(
        task="sbm", sbm=hetero_sbm, split=sbm_split,
        model={"k": 1.0, "t": 0.0, "n_terms": 1}, seeds=seeds), workers=2)

    elapsed = time.perf_counter() - t0
    gap = 100.0 * (tuned["mean_accuracy"] - low_pass["mean_accuracy"])
    ok = (homo["mean_accuracy"] > 0.90 and gap >= 5.0 and elapsed < 300.0)
    _report(6, f"SBM reproduction (homophilic {homo['mean_accuracy']:.3f}, "
               f"heterophilic gap {gap:.1f} points)", ok)


def test_c07_cora_dataset_statistics():
    _require_cora(7, "Cora statistics")
    g = load_dataset(CORA_DIR)
    stats_ok = (g.num_nodes == 2708 and g.num_edges == 5278
                and g.features.shape[1] == 1433 and g.num_classes == 7)
    homophily = edge_homophily(g)
    _report(7, f"Cora statistics (H={homophily:.3f})",
            stats_ok and abs(homophily - 0.81) <= 0.01)


def test_c08_cora_benchmark_soft():
    _require_cora(8, "Cora benchmark")
    # soft criterion: the protocol's hyperparameters are not published,
    # so tuning uses 2 seeds with shortened training, then the full
    # 10-seed dense-random evaluation at the selected cell; expect
    # roughly 15-30 minutes at this scale (~0.2 s/epoch)
    split = {"kind": "dense-random"}
    best, _ = grid_search(ExperimentConfig(
        task="grid", dataset=CORA_DIR, split=split,
        model={"epochs": 300, "patience": 50}, seeds=[100, 101]), workers=2)
    report = run(ExperimentConfig(
        task="classify", dataset=CORA_DIR, split=split,
        model={"k": best["k"], "t": best["t"]},
        seeds=list(range(10))), workers=2)
    mean_pct = 100.0 * report["mean_accuracy"]
    _report(8, f"Cora benchmark (mean {mean_pct:.2f} vs 89.34, soft)",
            abs(mean_pct - 89.34) <= 3.0)


def test_c09_multiterm_reduction_trajectory():
    g = load_dataset(TOY6_DIR)
    split = make_split(g, SplitProtocol("dense-random", seed=0,
                                        train_frac=0.5, val_frac=0.17))
    common = dict(hidden=8, dropout=0.5, epochs=60, patience=60, t=0.5,
                  n_terms=6, seed=5)
    _, hist_single = train(g, split, ModelConfig(variant="spcnet-d", k=1.0,
                                                 **common))
    _, hist_multi = train(g, split, ModelConfig(variant="pcnet", num_orders=1,
                                                freeze_beta=True,
                                                beta_init=(0.0, 1.0),
                                                **common))
    losses_s = np.array([h["train_loss"] for h in hist_single])
    losses_m = np.array([h["train_loss"] for h in hist_multi])
    ok = (losses_s.shape == losses_m.shape
          and np.abs(losses_s - losses_m).max() <= 1e-10)
    _report(9, "multi-term (K=1, beta=[0,1]) tracks fixed order k=1", ok)


def test_c10_report_determinism():
    cfg = dict(
        task="classify", dataset=TOY6_DIR,
        split={"kind": "dense-random", "train_frac": 0.5, "val_frac": 0.17},
        model={"hidden": 8, "epochs": 30, "patience": 30, "n_terms": 6},
        seeds=[0, 1])
    first = json.dumps(strip_timing(run(ExperimentConfig(**cfg), workers=2)),
                       sort_keys=True)
    second = json.dumps(strip_timing(run(ExperimentConfig(**cfg), workers=2)),
                        sort_keys=True)
    _report(10, "identical config + seeds give identical reports",
            first == second)
