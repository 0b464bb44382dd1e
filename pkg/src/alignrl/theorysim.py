"""Monte Carlo verification of the correlated update model.

The model: each parameter update is productive (moves toward the optimum)
with baseline probability lam > 0.5. Two updates proposed for the same
transition by successive target networks share a sign correlation c in
[0, 1]. Closed forms below give the probability the pair agrees on
direction, and the productivity boost from conditioning on agreement; the
sampler reproduces the joint exactly so the estimates can be checked at
binomial-deviation tolerances.

Also includes the saturating linear scoring map and the pointwise
approximation-error comparison between alignment estimated from the online
error versus the implicit always-one score.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class UpdateModelParams:
    lam: float  # baseline probability an update is productive; > 0.5 for a learner
    c: float  # sign correlation between successive updates, in [0, 1]

    def validate(self) -> None:
        if not 0.5 < self.lam < 1.0:
            raise ValueError(f"lam: must lie in (0.5, 1), got {self.lam}")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"c: must lie in [0, 1], got {self.c}")


@dataclass(frozen=True)
class JointSignDistribution:
    p_pp: float  # both productive
    p_pu: float  # first productive, second not
    p_up: float
    p_uu: float  # both unproductive


def joint_distribution(params: UpdateModelParams) -> JointSignDistribution:
    """Joint over (X productive?, Y productive?) with the correlated mixture."""
    params.validate()
    lam, c = params.lam, params.c
    cross = c * lam * (1.0 - lam)
    return JointSignDistribution(
        p_pp=lam * lam + cross,
        p_pu=(1.0 - c) * lam * (1.0 - lam),
        p_up=(1.0 - c) * lam * (1.0 - lam),
        p_uu=(1.0 - lam) ** 2 + cross,
    )


def p_aligned(params: UpdateModelParams) -> float:
    """Probability the two updates agree on direction; always >= 0.5."""
    params.validate()
    lam, c = params.lam, params.c
    return lam * lam + (1.0 - lam) ** 2 + 2.0 * c * lam * (1.0 - lam)


def p_productive_given_aligned(params: UpdateModelParams) -> float:
    """Productivity conditioned on agreement; exceeds lam for c < 1, equals it at c = 1."""
    dist = joint_distribution(params)
    return dist.p_pp / (dist.p_pp + dist.p_uu)


@dataclass(frozen=True)
class MonteCarloEstimates:
    n_samples: int
    p_aligned: float
    p_aligned_se: float
    p_productive_given_aligned: float
    p_productive_given_aligned_se: float
    p_productive_given_misaligned: float  # nan when no misaligned pairs occurred
    p_productive_given_misaligned_se: float


def monte_carlo_model(
    params: UpdateModelParams, n_samples: int, rng: np.random.Generator
) -> MonteCarloEstimates:
    """Empirical estimates of the three conditional probabilities.

    Sampler: X ~ Bernoulli(lam) productive; with probability c, Y copies X's
    correctness, otherwise Y is an independent Bernoulli(lam). This mixture
    reproduces the joint distribution exactly.
    """
    params.validate()
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    lam, c = params.lam, params.c
    x = rng.random(n_samples) < lam
    copy = rng.random(n_samples) < c
    y_indep = rng.random(n_samples) < lam
    y = np.where(copy, x, y_indep)

    aligned = x == y
    n_aligned = int(aligned.sum())
    n_misaligned = n_samples - n_aligned
    p_al = n_aligned / n_samples
    p_al_se = math.sqrt(max(p_al * (1.0 - p_al), 0.0) / n_samples)

    if n_aligned > 0:
        p_prod_al = float(np.count_nonzero(x & aligned)) / n_aligned
        p_prod_al_se = math.sqrt(max(p_prod_al * (1.0 - p_prod_al), 0.0) / n_aligned)
    else:
        p_prod_al, p_prod_al_se = float("nan"), float("nan")
    if n_misaligned > 0:
        p_prod_mis = float(np.count_nonzero(x & ~aligned)) / n_misaligned
        p_prod_mis_se = math.sqrt(max(p_prod_mis * (1.0 - p_prod_mis), 0.0) / n_misaligned)
    else:
        p_prod_mis, p_prod_mis_se = float("nan"), float("nan")

    return MonteCarloEstimates(
        n_samples=n_samples,
        p_aligned=p_al,
        p_aligned_se=p_al_se,
        p_productive_given_aligned=p_prod_al,
        p_productive_given_aligned_se=p_prod_al_se,
        p_productive_given_misaligned=p_prod_mis,
        p_productive_given_misaligned_se=p_prod_mis_se,
    )


def scoring_function_f(x: float, offline_error: float) -> float:
    """Saturating linear score: x / offline_error capped at 1.

    Signs are assumed normalized by the caller: requires offline_error > 0
    and x >= 0.
    """
    if not offline_error > 0:
        raise ValueError(f"offline_error must be > 0, got {offline_error}")
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    return min(x / offline_error, 1.0)


@dataclass(frozen=True)
class BoundCheckResult:
    n_checked: int
    n_rejected: int
    fraction_satisfying: float


def approximation_bound_check(triples) -> BoundCheckResult:
    """Fraction of valid (offline, future, online) triples with the estimated
    alignment error no larger than the always-one baseline's error.

    A triple (d_bar, d_bar_next, d) is valid when d_bar > 0, both other
    entries are >= 0, and |d - d_bar_next| <= |d_bar - d_bar_next| (the
    online error is at least as close to the future error). Invalid triples
    are rejected and counted, not scored.
    """
    arr = np.asarray(list(triples), dtype=np.float64)
    if arr.size == 0:
        return BoundCheckResult(0, 0, float("nan"))
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("triples must be a sequence of (offline, future, online)")
    d_bar, d_future, d_online = arr[:, 0], arr[:, 1], arr[:, 2]
    valid = (
        (d_bar > 0.0)
        & (d_future >= 0.0)
        & (d_online >= 0.0)
        & (np.abs(d_online - d_future) <= np.abs(d_bar - d_future))
    )
    n_rejected = int((~valid).sum())
    if valid.sum() == 0:
        return BoundCheckResult(0, n_rejected, float("nan"))
    d_bar, d_future, d_online = d_bar[valid], d_future[valid], d_online[valid]
    truth = np.minimum(d_future / d_bar, 1.0)
    est = np.minimum(d_online / d_bar, 1.0)
    err_est = np.abs(truth - est)
    err_naive = np.abs(truth - 1.0)
    ok = err_est <= err_naive
    return BoundCheckResult(int(valid.sum()), n_rejected, float(ok.mean()))


def sample_assumption_triples(n: int, rng: np.random.Generator) -> np.ndarray:
    """n random triples satisfying the validity conditions by construction."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    d_bar = rng.uniform(0.05, 2.0, size=n)
    d_future = rng.uniform(0.0, 2.5, size=n)
    radius = np.abs(d_bar - d_future)
    lo = np.maximum(d_future - radius, 0.0)
    hi = d_future + radius
    d_online = lo + rng.random(n) * (hi - lo)
    return np.column_stack([d_bar, d_future, d_online])


@dataclass
class GridCellResult:
    lam: float
    c: float
    n_samples: int
    closed_form_p_aligned: float
    mc_p_aligned: float
    closed_form_p: float
    mc_p: float
    mc_misaligned_p: float
    sigma: float  # binomial sigma of the aligned-probability estimate
    passed: bool
    failures: list

    @property
    def failure_text(self) -> str:
        return "; ".join(self.failures)


def _check_cell(params: UpdateModelParams, est: MonteCarloEstimates) -> list:
    """4-sigma agreement of all estimates plus the acceleration inequality."""
    lam, c = params.lam, params.c
    failures = []
    cf_aligned = p_aligned(params)
    sig = math.sqrt(cf_aligned * (1.0 - cf_aligned) / est.n_samples)
    if abs(est.p_aligned - cf_aligned) > 4.0 * sig:
        failures.append(
            f"p_aligned off by {abs(est.p_aligned - cf_aligned):.3g} > 4 sigma ({4*sig:.3g})"
        )
    cf_p = p_productive_given_aligned(params)
    n_aligned = est.n_samples * cf_aligned
    sig_p = math.sqrt(cf_p * (1.0 - cf_p) / n_aligned)
    if abs(est.p_productive_given_aligned - cf_p) > 4.0 * sig_p:
        failures.append(
            f"p off by {abs(est.p_productive_given_aligned - cf_p):.3g} > 4 sigma ({4*sig_p:.3g})"
        )
    # Misaligned pairs vanish at c = 1; the 0.5 check is vacuous there.
    if not math.isnan(est.p_productive_given_misaligned):
        n_mis = est.n_samples * (1.0 - cf_aligned)
        if n_mis > 0:
            sig_m = math.sqrt(0.25 / n_mis)
            if abs(est.p_productive_given_misaligned - 0.5) > 4.0 * sig_m:
                failures.append(
                    f"misaligned productivity off by "
                    f"{abs(est.p_productive_given_misaligned - 0.5):.3g} > 4 sigma ({4*sig_m:.3g})"
                )
    if c < 1.0:
        if not cf_p > lam:
            failures.append(f"acceleration violated: p={cf_p} <= lam={lam}")
    elif abs(cf_p - lam) >= 1e-12:
        failures.append(f"c=1 should give p == lam, got |diff|={abs(cf_p - lam):.3g}")
    return failures


def run_grid(
    lambdas, cs, n_samples: int, seed: int
) -> list[GridCellResult]:
    """Closed-form-versus-Monte-Carlo table over the (lam, c) grid.

    Each cell draws from its own seeded stream, so the grid can be reordered
    or split without changing any cell's numbers.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    cells = [(lam, c) for lam in lambdas for c in cs]
    streams = np.random.SeedSequence(seed).spawn(len(cells))
    results = []
    for (lam, c), stream in zip(cells, streams):
        params = UpdateModelParams(lam, c)
        params.validate()
        est = monte_carlo_model(params, n_samples, np.random.default_rng(stream))
        failures = _check_cell(params, est)
        cf_aligned = p_aligned(params)
        results.append(
            GridCellResult(
                lam=lam,
                c=c,
                n_samples=n_samples,
                closed_form_p_aligned=cf_aligned,
                mc_p_aligned=est.p_aligned,
                closed_form_p=p_productive_given_aligned(params),
                mc_p=est.p_productive_given_aligned,
                mc_misaligned_p=est.p_productive_given_misaligned,
                sigma=math.sqrt(cf_aligned * (1.0 - cf_aligned) / n_samples),
                passed=not failures,
                failures=failures,
            )
        )
    return results


RESULTS_COLUMNS = (
    "lambda",
    "c",
    "closed_form_p_aligned",
    "mc_p_aligned",
    "closed_form_p",
    "mc_p",
    "mc_misaligned_p",
    "sigma",
)


def write_results_csv(results: list[GridCellResult], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    repr(r.lam),
                    repr(r.c),
                    repr(r.closed_form_p_aligned),
                    repr(r.mc_p_aligned),
                    repr(r.closed_form_p),
                    repr(r.mc_p),
                    repr(r.mc_misaligned_p),
                    repr(r.sigma),
                ]
            )
