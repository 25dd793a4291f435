"""Acceptance criteria 1 to 9, each at its stated tolerance.

Every test registers a PASS/FAIL line that pytest prints in its terminal
summary. Running this file directly executes all criteria and prints the
same lines.
"""

import json
import time
from pathlib import Path

import numpy as np

from acceptance_report import record
from fires.cli import run as cli_run
from fires.engine import EngineConfig, FiresEngine
from fires.glm import glm_gradients
from fires.harness import grid_run, prequential_run
from fires.mc_models import AnnModel, SdtModel
from fires.prob import GaussianParamSet, gaussian_cdf_expectation
from fires.stability import stability_score
from fires.stream import Stream, gen_rbf_stream, gen_tree_stream, read_csv_stream
from fires.weighting import WeightConfig, check_attentive, check_monotonic, compute_weights, feature_ranking
from oracles import (
    brute_force_stability,
    frozen_noise_fd,
    glm_finite_difference,
    max_rel_error,
    mc_cdf_expectation,
    random_cdf_config,
    random_glm_instance,
    random_masks,
)

SPAMBASE = Path(__file__).parent / "data" / "spambase.csv"
TIMING = ("fs_ms", "train_ms", "step_ms")


def test_c1_gaussian_cdf_identity():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst, failures = 0.0, 0
    for i in range(100):
        dim = 1 if i < 50 else 2 + i % 7
        alpha, beta, mu, sigma = random_cdf_config(rng, dim)
        exact = gaussian_cdf_expectation(alpha, beta, GaussianParamSet(mu, sigma))
        est, se = mc_cdf_expectation(alpha, beta, mu, sigma, 10**6, rng)
        z = abs(est - exact) / se
        worst = max(worst, z)
        failures += z >= 5
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 60
    assert record(1, ok, f"100 configurations, worst |err|/SE {worst:.2f} (< 5), {elapsed:.1f} s (< 60 s)")


def _mc_instance(rng, kind):
    J = int(rng.integers(1, 21))
    if kind == "ann":
        model = AnnModel(J, hidden=tuple(int(h) for h in rng.integers(1, 6, rng.integers(1, 3))), mc_samples=3)
    else:
        model = SdtModel(J, depth=int(rng.integers(1, 4)), mc_samples=3, seed=int(rng.integers(1000)))
    K = len(model.params)
    model.params = GaussianParamSet(rng.normal(0, 1, K), rng.uniform(0.2, 1.5, K))
    B = int(rng.integers(1, 4))
    return model, rng.uniform(0, 1, (B, J)), rng.choice([-1.0, 1.0], B)


def test_c2_gradients_match_finite_differences():
    rng = np.random.default_rng(202)
    errors = {"glm": 0.0, "ann": 0.0, "sdt": 0.0}
    for _ in range(100):
        x, y, p = random_glm_instance(rng)
        d_mu, d_sigma = glm_gradients(x, y, p)
        f_mu, f_sigma = glm_finite_difference(x, y, p)
        errors["glm"] = max(errors["glm"], max_rel_error(d_mu, f_mu), max_rel_error(d_sigma, f_sigma))
    for kind in ("ann", "sdt"):
        for _ in range(50):
            model, X, y = _mc_instance(rng, kind)
            samples = model.draw(rng)
            d_mu, d_sigma = model.gradients(X, y, samples)
            f_mu, f_sigma = frozen_noise_fd(model, X, y, samples.r)
            errors[kind] = max(errors[kind], max_rel_error(d_mu, f_mu), max_rel_error(d_sigma, f_sigma))
    ok = all(e < 1e-4 for e in errors.values())
    detail = ", ".join(f"{k} max rel err {v:.1e}" for k, v in errors.items())
    assert record(2, ok, f"{detail} (< 1e-4)")


def test_c3_weight_properties():
    rng = np.random.default_rng(303)
    attentive = monotonic = invariant = 0
    n = 10**4
    for k in range(n):
        cfg = WeightConfig(rng.uniform(1e-3, 1), rng.uniform(1e-3, 1))
        J = int(rng.integers(2, 20))
        mu = rng.normal(size=J)
        mu[rng.random(J) < 0.3] = 0.0
        p = GaussianParamSet(mu, rng.uniform(0.05, 3, J))
        w = compute_weights(p, cfg)
        attentive += check_attentive(w, p, cfg)

        if k % 2:
            m = rng.normal()
            pi, pj = (m, rng.uniform(0.01, 3)), (-m if rng.random() < 0.5 else m, rng.uniform(0.01, 3))
        else:
            s = rng.uniform(0.01, 3)
            pi, pj = (rng.normal(), s), (rng.normal(), s)
        pair = compute_weights(GaussianParamSet(np.array([pi[0], pj[0]]), np.array([pi[1], pj[1]])), cfg).omega
        monotonic += check_monotonic(pi, pj, (float(pair[0]), float(pair[1])), cfg)

        scaled = WeightConfig(cfg.lambda_s, cfg.lambda_r * rng.uniform(0.1, 10))
        invariant += np.array_equal(feature_ranking(w), feature_ranking(compute_weights(p, scaled)))
    ok = attentive == monotonic == invariant == n
    assert record(3, ok, f"attentive {attentive}/{n}, monotonic {monotonic}/{n}, "
                         f"ranking invariant under lambda_r {invariant}/{n}")


def test_c4_stability_score():
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(1000):
        J = int(rng.integers(2, 31))
        M = int(rng.integers(1, J))
        masks = random_masks(rng, int(rng.integers(2, 16)), J, M)
        worst = max(worst, abs(stability_score(masks) - brute_force_stability(masks.tolist())))
    half = np.array([1] * 4 + [0] * 4)
    examples = [
        (stability_score(np.tile([1, 0, 1, 0, 0], (10, 1))), 1.0),
        (stability_score(np.array([half, 1 - half] * 5)), -1 / 9),
        (stability_score(np.array([[1, 0, 0, 0], [0, 1, 0, 0]])), -1 / 3),
    ]
    # "exact" up to the rounding of the final subtraction
    example_err = max(abs(a - b) for a, b in examples)
    ok = worst <= 1e-12 and example_err <= 1e-15
    assert record(4, ok, f"1000 windows max |diff| {worst:.1e} (<= 1e-12), "
                         f"examples 1, -1/9, -1/3 max |diff| {example_err:.1e}")


def test_c5_stationary_convergence():
    rng = np.random.default_rng(505)
    X = rng.uniform(size=(25_000, 10))
    y = np.where(X[:, 0] > 0.5, 1.0, -1.0)
    engine = FiresEngine(10, EngineConfig(n_selected=1, seed=5))
    rankings = []
    for t in range(1000):
        _, w = engine.step(X[25 * t:25 * (t + 1)], y[25 * t:25 * (t + 1)])
        rankings.append(tuple(feature_ranking(w)))
    tail = rankings[-200:]
    first = sum(r[0] == 0 for r in tail)
    top_classes = {(r[0], frozenset(r[1:])) for r in tail}
    full_orders = len(set(tail))
    # the nine irrelevant features are exchangeable, so only the class ranking is identifiable
    ok = first == 200 and len(top_classes) == 1
    assert record(5, ok, f"relevant feature first in {first}/200 final steps, "
                         f"{len(top_classes)} distinct (relevant, irrelevant) ranking over them; "
                         f"{full_orders} distinct orders within the irrelevant tie class")


def test_c6_planted_feature_recovery():
    stream = gen_tree_stream(0, 10_000, 50, n_relevant=5)
    planted = set(stream.relevant.tolist())
    hits = {}
    for model in ("glm", "ann", "sdt"):
        metrics = prequential_run(stream, EngineConfig(n_selected=10, base_model=model, seed=0), batch_size=25)
        quartile = metrics.records[-len(metrics.records) // 4:]
        counts = np.zeros(50)
        for rec in quartile:
            counts[rec.selected] += 1
        stable = set(np.flatnonzero(counts >= 0.5 * len(quartile)).tolist())
        hits[model] = len(planted & stable)
    ok = all(h >= 4 for h in hits.values())
    detail = ", ".join(f"{m} {h}/5" for m, h in hits.items())
    assert record(6, ok, f"planted features kept in >= half of final-quartile steps: {detail} (need >= 4 each)")


def test_c7_spambase_grid():
    start = time.perf_counter()
    stream = read_csv_stream(SPAMBASE)
    grid = grid_run(stream, [25, 50, 75, 100], [0.1, 0.15, 0.2], EngineConfig(n_selected=1, seed=0))
    elapsed = time.perf_counter() - start
    acc, stab = grid.mean_accuracy(), grid.mean_stability()
    ok = abs(acc - 0.742) <= 0.05 and abs(stab - 0.901) <= 0.07 and elapsed < 600
    assert record(7, ok, f"accuracy {acc:.3f} (0.742 +/- 0.05), stability {stab:.3f} (0.901 +/- 0.07), "
                         f"{elapsed:.1f} s (< 600 s)")


def test_c8_glm_faster_than_ann():
    stream = gen_rbf_stream(0, 1000, 500)
    times = {}
    for model in ("glm", "ann"):
        metrics = prequential_run(stream, EngineConfig(n_selected=50, base_model=model, seed=0), batch_size=25)
        times[model] = metrics.mean_fs_ms()
    ok = times["glm"] < times["ann"] / 5
    assert record(8, ok, f"mean selection time glm {times['glm']:.3f} ms, ann {times['ann']:.3f} ms "
                         f"(ratio {times['ann'] / times['glm']:.1f}, need > 5)")


def _strip(obj):
    if isinstance(obj, dict):
        return {k: _strip(v) for k, v in obj.items() if k not in TIMING}
    return obj


def test_c9_determinism(tmp_path):
    same = True
    for model in ("glm", "ann", "sdt"):
        stream = gen_tree_stream(3, 600, 12, n_relevant=4)
        cfg = EngineConfig(n_selected=3, base_model=model, hidden_layers=(20, 20), seed=42)
        a = [_strip(r.as_dict()) for r in prequential_run(stream, cfg, 25).records]
        b = [_strip(r.as_dict()) for r in prequential_run(gen_tree_stream(3, 600, 12, n_relevant=4), cfg, 25).records]
        same &= a == b
    ini = tmp_path / "run.ini"
    ini.write_text("[rbf]\nn_samples = 500\nn_features = 20\n[fires]\nbase_model = sdt\n"
                   "selected_fraction = 0.2\n[run]\nbatch_size = 25\nseed = 7\n")
    outputs = []
    for name in ("first.jsonl", "second.jsonl"):
        out = tmp_path / name
        same &= cli_run(ini, out=out) == 0
        outputs.append([_strip(json.loads(line)) for line in out.read_text().splitlines()])
    same &= outputs[0] == outputs[1]
    assert record(9, bool(same), "repeated runs (three base models and the command line) identical apart from timings")


if __name__ == "__main__":
    import tempfile

    for name, fn in sorted(globals().items()):
        if name.startswith("test_c") and callable(fn):
            try:
                fn(Path(tempfile.mkdtemp())) if name == "test_c9_determinism" else fn()
            except AssertionError:
                pass
