"""Acceptance suite: one test per criterion, each printing a pass/fail line.

The heavyweight training fixtures are session-scoped so the catch and
gridworld experiment grids run once and are shared by the criteria that
read them.
"""

import time
from dataclasses import dataclass

import numpy as np
import pytest

from alignrl import nn
from alignrl.alignment import ErrorPair, alignment_score
from alignrl.config import parse_run_config
from alignrl.envs import bellman_backup, state_values, tabular_mdp, value_iteration
from alignrl.runner import area_under_curve, read_metrics, run_training
from alignrl.theorysim import (
    UpdateModelParams,
    approximation_bound_check,
    p_aligned,
    p_productive_given_aligned,
    run_grid,
    sample_assumption_triples,
)

GAMMA = 0.99
LAMBDA_GRID = (0.55, 0.6, 0.75, 0.9)
C_GRID = (0.0, 0.25, 0.5, 0.9)


def report(line: str) -> None:
    print(f"\n[acceptance] {line}")


# ---------------------------------------------------------------------------
# heavyweight shared runs


@dataclass
class TimedRuns:
    results: dict
    elapsed: float


def _catch_arm_doc(out_dir, variant: str, tarl: bool, kind: str) -> dict:
    # identical base hyperparameters across arms; only the alignment
    # oversampling differs (b = m when enabled)
    return {
        "env": "catch",
        "seeds": [0, 1, 2, 3, 4],
        "total_steps": 100_000,
        "eval_points": 100,
        "eval_episodes": 5,
        "output_dir": str(out_dir),
        "agent": {
            "variant": variant,
            "tarl_enabled": tarl,
            "batch_size": 32,
            "oversample": 32 if tarl else 0,
            "hidden_sizes": [32, 32],
            "learning_starts": 1000,
            "buffer_capacity": 10_000,
            "target_update": {"kind": kind, "interval": 1000, "tau": 0.01},
            "align_diagnostics": tarl,
        },
    }


@pytest.fixture(scope="session")
def catch_runs(tmp_path_factory) -> TimedRuns:
    """Six catch arms x five seeds x 100k steps (criterion 7)."""
    base = tmp_path_factory.mktemp("catch_arms")
    arms = {
        "dqn_hard": ("dqn", False, "hard"),
        "tadqn_hard": ("dqn", True, "hard"),
        "ddqn_hard": ("ddqn", False, "hard"),
        "taddqn_hard": ("ddqn", True, "hard"),
        "ddqn_soft": ("ddqn", False, "soft"),
        "taddqn_soft": ("ddqn", True, "soft"),
    }
    t0 = time.perf_counter()
    results = {}
    for name, (variant, tarl, kind) in arms.items():
        config = parse_run_config(_catch_arm_doc(base / name, variant, tarl, kind))
        results[name] = run_training(config)
    return TimedRuns(results, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def gridworld_baseline_runs(tmp_path_factory) -> TimedRuns:
    """Baseline DQN on gridworld5, 50k steps, 5 seeds (criterion 6)."""
    doc = {
        "env": "gridworld5",
        "seeds": [0, 1, 2, 3, 4],
        "total_steps": 50_000,
        "eval_points": 100,
        "eval_episodes": 5,
        "output_dir": str(tmp_path_factory.mktemp("gridworld_dqn")),
        "agent": {"tarl_enabled": False, "align_diagnostics": False},
    }
    t0 = time.perf_counter()
    results = run_training(parse_run_config(doc))
    return TimedRuns({"dqn": results}, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def tarl_gridworld_runs(tmp_path_factory) -> TimedRuns:
    """TA-DQN on gridworld5 with hard updates every 1000 steps (criterion 8)."""
    doc = {
        "env": "gridworld5",
        "seeds": [0, 1, 2, 3, 4],
        "total_steps": 25_000,
        "eval_points": 25,
        "eval_episodes": 5,
        "output_dir": str(tmp_path_factory.mktemp("gridworld_ta")),
        "agent": {"tarl_enabled": True},
    }
    t0 = time.perf_counter()
    results = run_training(parse_run_config(doc))
    return TimedRuns({"tadqn": results}, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# criterion 1: closed forms vs Monte Carlo for the update model


def test_criterion_1_theory_closed_form_suite():
    t0 = time.perf_counter()
    results = run_grid(LAMBDA_GRID, C_GRID, n_samples=1_000_000, seed=20240)
    for cell in results:
        assert cell.passed, f"cell lam={cell.lam} c={cell.c}: {cell.failure_text}"
        assert cell.closed_form_p > cell.lam
    for lam in LAMBDA_GRID:
        p_full = p_productive_given_aligned(UpdateModelParams(lam, 1.0))
        assert abs(p_full - lam) < 1e-12
    spot = p_productive_given_aligned(UpdateModelParams(0.75, 0.0))
    assert abs(spot - 0.9) < 1e-12
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    report(f"criterion 1 PASS: {len(results)} cells within 4 sigma, p > lambda "
           f"everywhere, p == lambda at c=1 ({elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# criterion 2: pointwise approximation bound


def test_criterion_2_approximation_bound_pointwise():
    t0 = time.perf_counter()
    triples = sample_assumption_triples(100_000, np.random.default_rng(777))
    result = approximation_bound_check(triples)
    assert result.n_checked == 100_000
    assert result.n_rejected == 0
    assert result.fraction_satisfying == 1.0
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    report(f"criterion 2 PASS: estimated-alignment error <= always-one error on "
           f"all {result.n_checked} triples ({elapsed:.2f}s)")


# ---------------------------------------------------------------------------
# criterion 3: alignment metric properties


def _error_pair_grid(n: int = 250_000, bound: float = 1e6) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(31337)
    magnitudes = 10.0 ** rng.uniform(-6, np.log10(bound), size=(n, 2))
    signs = rng.choice([-1.0, 1.0], size=(n, 2))
    pairs = magnitudes * signs
    # sprinkle exact zeros and exact ties
    pairs[: n // 100, 0] = 0.0
    pairs[n // 100 : n // 50, 1] = 0.0
    pairs[n // 50 : n // 25, 1] = pairs[n // 50 : n // 25, 0]
    return pairs[:, 0], pairs[:, 1]


def test_criterion_3_range():
    t0 = time.perf_counter()
    online, offline = _error_pair_grid()
    values = np.array(
        [alignment_score(ErrorPair(d, db)).value for d, db in zip(online[:20_000], offline[:20_000])]
    )
    assert np.all(values >= 0.0) and np.all(values <= 1.0)
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    report(f"criterion 3 (range) PASS: 20000 pairs inside [0, 1] ({elapsed:.2f}s)")


def test_criterion_3_full_support_rule():
    t0 = time.perf_counter()
    online, offline = _error_pair_grid()
    for d, db in zip(online[:20_000], offline[:20_000]):
        value = alignment_score(ErrorPair(d, db)).value
        assert (value == 1.0) == (d * db > 0 and abs(d) > abs(db)), (d, db, value)
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    report(f"criterion 3 (full support iff) PASS ({elapsed:.2f}s)")


def test_criterion_3_symmetry_under_joint_negation():
    t0 = time.perf_counter()
    online, offline = _error_pair_grid()
    for d, db in zip(online[:20_000], offline[:20_000]):
        a = alignment_score(ErrorPair(d, db))
        b = alignment_score(ErrorPair(-d, -db))
        assert a.value == b.value and a.scenario == b.scenario
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    report(f"criterion 3 (symmetry) PASS ({elapsed:.2f}s)")


def test_criterion_3_monotone_degradation_grid():
    # As stated: with the offline error fixed > 0, the value should be
    # non-increasing along a grid of online errors decreasing from the
    # offline value toward -inf. The implemented formula violates this as
    # soon as the online error crosses 0 (the score climbs back toward 1/2),
    # which the module's own frozen examples pin down: A(0, 1) = 0 but
    # A(-0.5, 1) = 0.25. Kept as stated; see the decisions ledger.
    for offline in (0.5, 1.0, 2.0):
        grid = np.linspace(offline, -100.0 * offline, 1000)
        values = [alignment_score(ErrorPair(d, offline)).value for d in grid]
        drops = np.diff(values)
        bad = np.flatnonzero(drops > 1e-12)
        assert bad.size == 0, (
            f"offline={offline}: value increased while the online error decreased, "
            f"first at grid step {bad[0]}: online {grid[bad[0]]:.4f} -> {grid[bad[0]+1]:.4f}, "
            f"value {values[bad[0]]:.6f} -> {values[bad[0]+1]:.6f}"
        )
    report("criterion 3 (monotone degradation) PASS")


# ---------------------------------------------------------------------------
# criterion 4: gradient correctness over 100 random networks


def _relu_kink_margin(params, batch) -> float:
    """Smallest |pre-activation| over the hidden layers for this batch.

    Central differences are only a valid derivative estimate away from the
    ReLU kinks; a pre-activation within the finite-difference step of zero
    makes the numeric and analytic gradients legitimately disagree.
    """
    margin = np.inf
    a = batch
    for i in range(params.n_layers - 1):
        z = a @ params.weights[i].T + params.biases[i]
        margin = min(margin, float(np.min(np.abs(z))))
        a = np.maximum(z, 0.0)
    return margin


def test_criterion_4_gradient_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4242)
    worst = 0.0
    checked = 0
    while checked < 100:
        depth = int(rng.integers(1, 3))
        sizes = [int(rng.integers(2, 9))]
        sizes += [int(rng.integers(3, 17)) for _ in range(depth)]
        sizes.append(int(rng.integers(2, 6)))
        params = nn.he_uniform_init(sizes, rng)
        m = int(rng.integers(1, 9))
        batch = rng.normal(size=(m, sizes[0]))
        if _relu_kink_margin(params, batch) < 1e-3:
            continue  # redraw: the finite-difference oracle is invalid at kinks
        actions = rng.integers(0, sizes[-1], size=m)
        targets = rng.normal(size=m)
        err = nn.gradient_check(params, batch, actions, targets, fd_step=1e-5)
        worst = max(worst, err)
        assert err < 1e-4, f"sizes={sizes}: max relative error {err}"
        checked += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    report(f"criterion 4 PASS: 100 random nets, worst relative error {worst:.2e} "
           f"({elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# criterion 5: exact planning oracles


def test_criterion_5_oracle_equivalence():
    mdp = tabular_mdp("gridworld5")
    q = value_iteration(mdp, GAMMA, tol=1e-10)
    residual = float(np.max(np.abs(bellman_backup(mdp, q, GAMMA) - q)))
    assert residual <= 1e-10
    start_value = state_values(q)[0]
    assert abs(start_value - GAMMA**7) < 1e-9

    chain_q = value_iteration(tabular_mdp("chain5"), 1.0, tol=1e-12)
    chain_values = state_values(chain_q)
    expected = np.array([1, 2, 3, 4, 5]) / 6.0
    assert np.max(np.abs(chain_values - expected)) < 1e-9
    report(
        f"criterion 5 PASS: gridworld residual {residual:.1e}, start value matches "
        f"gamma^7, chain values match k/6"
    )


# ---------------------------------------------------------------------------
# criterion 6: learning sanity on gridworld


def test_criterion_6_learning_sanity(gridworld_baseline_runs):
    runs = gridworld_baseline_runs.results["dqn"]
    finals = [r.final_eval_score for r in runs]
    median_final = float(np.median(finals))
    threshold = 0.9 * GAMMA**7
    assert median_final >= threshold, f"median final {median_final} < {threshold}"
    assert gridworld_baseline_runs.elapsed < 300.0
    report(f"criterion 6 PASS: median final eval {median_final:.3f} >= "
           f"{threshold:.3f} (finals {finals}, {gridworld_baseline_runs.elapsed:.0f}s)")


# ---------------------------------------------------------------------------
# criterion 7: directional oversampling claim on catch


def _median_aulc(runs) -> float:
    return float(np.median([area_under_curve(np.asarray(r.eval_scores)) for r in runs]))


def test_criterion_7_directional_improvement(catch_runs):
    pairs = [
        ("tadqn_hard", "dqn_hard"),
        ("taddqn_hard", "ddqn_hard"),
        ("taddqn_soft", "ddqn_soft"),
    ]
    lines = []
    for ta_name, base_name in pairs:
        ta = _median_aulc(catch_runs.results[ta_name])
        base = _median_aulc(catch_runs.results[base_name])
        assert ta >= base, f"{ta_name} median AULC {ta:.4f} < {base_name} {base:.4f}"
        lines.append(f"{ta_name} {ta:.4f} >= {base_name} {base:.4f}")
    assert catch_runs.elapsed < 1800.0
    report(f"criterion 7 PASS: {'; '.join(lines)} ({catch_runs.elapsed:.0f}s total)")


# ---------------------------------------------------------------------------
# criterion 8: selection and alignment mechanism invariants


def test_criterion_8_mechanism_invariants(tarl_gridworld_runs):
    runs = tarl_gridworld_runs.results["tadqn"]
    interval = 1000
    per_run_medians = []
    decay_gaps = []
    total_rows = 0
    for run in runs:
        rows = read_metrics(run.metrics_path)
        pool = {}
        for row in rows:
            if row.mean_pool_alignment is not None:
                assert row.mean_selected_alignment >= row.mean_pool_alignment - 1e-12, (
                    f"seed {run.seed} step {row.step}: selected "
                    f"{row.mean_selected_alignment} < pool {row.mean_pool_alignment}"
                )
                pool[row.step] = row.mean_pool_alignment
                total_rows += 1
        events = [t for t in range(interval, rows[-1].step, interval)
                  if t in pool and t + 1 in pool]
        assert events, "no hard-update events with alignment data"
        jumps = [pool[t + 1] - pool[t] for t in events]
        per_run_medians.append(float(np.median(jumps)))
        decay_gaps.extend(pool[t + 1] - pool[t2] for t, t2 in zip(events, events[1:]))

    # right after each hard sync the pool alignment is at least what it was
    # just before the sync (median over events, for the median seed)
    assert float(np.median(per_run_medians)) >= 0.0, per_run_medians
    # and it decays over the interval: fresh-sync alignment beats the level
    # just before the next sync (median over all events across seeds)
    assert float(np.median(decay_gaps)) > 0.0
    report(
        f"criterion 8 PASS: selected >= pool on all {total_rows} update steps; "
        f"median post-sync jump per run {np.round(per_run_medians, 3).tolist()}; "
        f"median interval decay {float(np.median(decay_gaps)):.3f}"
    )


# ---------------------------------------------------------------------------
# criterion 9: byte-identical reruns


def test_criterion_9_determinism(tmp_path):
    doc = {
        "env": "gridworld5",
        "seeds": [11],
        "total_steps": 1500,
        "eval_points": 3,
        "eval_episodes": 2,
        "output_dir": "",
        "agent": {
            "hidden_sizes": [16, 16],
            "learning_starts": 200,
            "buffer_capacity": 2000,
            "tarl_enabled": True,
            "target_update": {"kind": "hard", "interval": 300},
        },
    }
    doc["output_dir"] = str(tmp_path / "a")
    (ra,) = run_training(parse_run_config(doc))
    doc["output_dir"] = str(tmp_path / "b")
    (rb,) = run_training(parse_run_config(doc))
    assert ra.metrics_path.read_bytes() == rb.metrics_path.read_bytes()
    assert ra.checkpoint_path.read_bytes() == rb.checkpoint_path.read_bytes()
    report("criterion 9 PASS: repeated (config, seed) runs are byte-identical")
