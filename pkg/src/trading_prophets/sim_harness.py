"""Seeded Monte Carlo estimation of policy values and policy/prophet ratios.

Trials are processed in fixed-size chunks of 4096.  Chunk c of a run seeded
with s draws from ``Generator(Philox(key=[s, c]))`` — a fresh counter-based
stream per chunk — and partial sums are always combined in chunk order, so
results are bit-identical for any ``--threads`` setting and any scheduling.

Within a chunk everything is vectorized.  Threshold-family policies use the
pathwise identity

    profit = sum_i 1{X_i < T_i} * (X_{i+1} - X_i)

(the policy holds the item over the step i -> i+1 exactly when X_i was below
that period's threshold; buys, sells and the forced final liquidation
telescope into this marked-to-market form).  The per-trace runners in
:mod:`trading_prophets.policies` are the reference implementations; the test
suite pins the two against each other.
"""
from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .distributions import sample_many
from .errors import (
    BadArmIndex,
    InvalidParam,
    NonPositivePrice,
    NotIid,
    TooShort,
    ZeroOptimum,
)
from .instances import (
    BanditInstance,
    Instance,
    draw_bandit_many,
    draw_many,
    is_iid,
    random_walk_many,
)
from .offline_oracle import opt_bandit_many, opt_budgeted_many, opt_profit_many
from .policies import PolicySpec, resolve_threshold

CHUNK = 4096
_THREADS_ENV = "TRADING_PROPHETS_THREADS"


@dataclass(frozen=True)
class SimReport:
    mean: float
    stderr: float
    ci95: tuple[float, float]
    trials: int
    seed: int
    wall_time_ms: int


def chunk_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent reproducible stream: Philox keyed by (seed, stream)."""
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream & 0xFFFFFFFFFFFFFFFF],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _resolve_threads(threads: Optional[int], n_chunks: int) -> int:
    if threads is None:
        env = os.environ.get(_THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(int(threads), n_chunks))


def _chunk_sizes(trials: int) -> list[int]:
    full, rem = divmod(trials, CHUNK)
    return [CHUNK] * full + ([rem] if rem else [])


def _run_chunks(trials: int, seed: int, threads: Optional[int],
                score_fn: Callable[[np.random.Generator, int], np.ndarray]):
    """Evaluate score_fn over all chunks; returns stacked column moments.

    score_fn returns an (m,) or (m, d) array of per-trial scores; the result
    is (n, sums, sumsqs, cross) with cross = sum of column products (d = 2).
    """
    if trials < 1:
        raise InvalidParam(f"trials must be >= 1, got {trials}")
    sizes = _chunk_sizes(trials)

    def one(c: int):
        scores = np.asarray(score_fn(chunk_rng(seed, c), sizes[c]), dtype=float)
        if scores.ndim == 1:
            scores = scores[:, None]
        cross = float((scores[:, 0] * scores[:, 1]).sum()) if scores.shape[1] == 2 else 0.0
        return scores.sum(axis=0), (scores * scores).sum(axis=0), cross

    workers = _resolve_threads(threads, len(sizes))
    if workers == 1:
        partials = [one(c) for c in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(one, range(len(sizes))))
    sums = np.zeros_like(partials[0][0])
    sumsqs = np.zeros_like(partials[0][1])
    cross = 0.0
    for s, q, c in partials:  # fixed order: bit-exact under any thread count
        sums = sums + s
        sumsqs = sumsqs + q
        cross += c
    return trials, sums, sumsqs, cross


def _mean_stderr(n: int, s: float, q: float) -> tuple[float, float]:
    mean = s / n
    if n < 2:
        return mean, 0.0
    var = max(q - s * s / n, 0.0) / (n - 1)
    return mean, math.sqrt(var / n)


def threshold_profit_many(prices: np.ndarray, thresholds) -> np.ndarray:
    """Vectorized threshold-policy profits; thresholds is a scalar or an
    (m, n-1) per-period matrix."""
    p = np.asarray(prices, dtype=float)
    if p.shape[1] < 2:
        return np.zeros(p.shape[0])
    hold = p[:, :-1] < np.asarray(thresholds, dtype=float)
    return (hold * np.diff(p, axis=1)).sum(axis=1)


# ---------------------------------------------------------------------------
# per-chunk score functions


def _common_dist(inst: Instance, what: str):
    if not is_iid(inst):
        raise NotIid(f"{what} policy draws samples from the common distribution; "
                     "the instance is not i.i.d.")
    return inst.dists[0]


def _make_scorer(inst: Union[Instance, BanditInstance], spec: PolicySpec,
                 paired: bool) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Build the chunk evaluator; resolves thresholds once, up front."""
    if isinstance(inst, BanditInstance):
        if spec.kind != "bandit":
            raise InvalidParam(f"policy {spec.kind!r} does not run on a bandit instance")
        return _bandit_scorer(inst, spec, paired)
    if spec.kind == "bandit":
        raise InvalidParam("bandit policy needs a BanditInstance")

    if spec.kind == "budgeted":
        t = spec.t
        if not (t is not None and t > 0):
            raise NonPositivePrice(f"budgeted threshold must be positive, got {t}")

        def score(rng, m):
            _, prices, _ = draw_many(inst, rng, m)
            if np.any(prices <= 0):
                raise NonPositivePrice("budgeted model needs strictly positive prices")
            final = np.exp(threshold_profit_many(np.log(prices), math.log(t)))
            if not paired:
                return final
            return np.column_stack([final, opt_budgeted_many(prices)])

        return score

    if spec.kind in ("threshold", "iid_median", "mixture_median", "sixteenth", "best"):
        t = resolve_threshold(inst, spec).value

        def score(rng, m):
            _, prices, _ = draw_many(inst, rng, m)
            alg = threshold_profit_many(prices, t)
            if not paired:
                return alg
            return np.column_stack([alg, opt_profit_many(prices)])

        return score

    if spec.kind == "sample":
        common = _common_dist(inst, "sample")

        def score(rng, m):
            n = inst.n
            _, prices, shifts = draw_many(inst, rng, m)
            samples = sample_many(common, rng, m * (n - 1)).reshape(m, n - 1)
            if shifts is not None:
                samples = samples + shifts[:, None]
            alg = threshold_profit_many(prices, samples)
            if not paired:
                return alg
            return np.column_stack([alg, opt_profit_many(prices)])

        return score

    if spec.kind == "single_sample":
        common = _common_dist(inst, "single-sample")
        if inst.n < 2:
            raise TooShort("single-sample policy needs n >= 2")

        def score(rng, m):
            n = inst.n
            _, prices, shifts = draw_many(inst, rng, m)
            s1 = sample_many(common, rng, m)
            if shifts is not None:
                s1 = s1 + shifts
            th = _resampled_threshold_matrix(prices, s1, rng)
            alg = threshold_profit_many(prices, th)
            if not paired:
                return alg
            return np.column_stack([alg, opt_profit_many(prices)])

        return score

    if spec.kind == "unknown":
        if inst.n < 3:
            raise TooShort("unknown-distribution policy needs n >= 3")

        def score(rng, m):
            _, prices, _ = draw_many(inst, rng, m)
            tail = prices[:, 1:]
            th = _resampled_threshold_matrix(tail, prices[:, 0], rng)
            alg = threshold_profit_many(tail, th)
            if not paired:
                return alg
            return np.column_stack([alg, opt_profit_many(prices)])

        return score

    raise InvalidParam(f"unknown policy kind {spec.kind!r}")


def _resampled_threshold_matrix(prices: np.ndarray, s1: np.ndarray,
                                rng: np.random.Generator) -> np.ndarray:
    """Fresh-looking thresholds: column i is a uniform pick from the sample
    and the first i prices (one index vector per period, period-major)."""
    m, n = prices.shape
    pool = np.empty((m, n))  # pool[:, 0] = sample, pool[:, j] = price j-1
    pool[:, 0] = s1
    if n > 1:
        pool[:, 1:] = prices[:, :-1]
    rows = np.arange(m)
    th = np.empty((m, n - 1))
    for i in range(1, n):
        idx = rng.integers(0, i, size=m)
        th[:, i - 1] = pool[rows, idx]
    return th


def _bandit_scorer(binst: BanditInstance, spec: PolicySpec, paired: bool):
    inner = spec.inner
    k = binst.k
    if inner.kind == "threshold":
        arm_ts = np.full(k, inner.t, dtype=float)
    elif inner.kind in ("iid_median", "mixture_median", "sixteenth", "best"):
        arm_ts = np.array([resolve_threshold(arm, inner).value for arm in binst.arms])
    else:
        raise InvalidParam(f"bandit inner policy must be threshold-family, got {inner.kind!r}")
    fixed_arm = spec.arm
    if fixed_arm is not None and not 0 <= fixed_arm < k:
        raise BadArmIndex(f"arm {fixed_arm} out of range for {k} arms")

    def score(rng, m):
        tensor = draw_bandit_many(binst, rng, m)
        if fixed_arm is None:
            picks = rng.integers(0, k, size=m)
        else:
            picks = np.full(m, fixed_arm)
        rows = np.arange(m)
        chosen = tensor[rows, picks, :]
        alg = threshold_profit_many(chosen, arm_ts[picks][:, None])
        if not paired:
            return alg
        return np.column_stack([alg, opt_bandit_many(tensor)])

    return score


# ---------------------------------------------------------------------------
# public estimators


def estimate_policy(inst: Union[Instance, BanditInstance], spec: PolicySpec,
                    trials: int, seed: int,
                    threads: Optional[int] = None) -> SimReport:
    """Sample mean of the policy's profit (final budget for budgeted)."""
    t0 = time.perf_counter()
    score = _make_scorer(inst, spec, paired=False)
    n, sums, sumsqs, _ = _run_chunks(trials, seed, threads, score)
    mean, se = _mean_stderr(n, float(sums[0]), float(sumsqs[0]))
    return _report(mean, se, n, seed, t0)


def estimate_ratio(inst: Union[Instance, BanditInstance], spec: PolicySpec,
                   trials: int, seed: int,
                   threads: Optional[int] = None) -> SimReport:
    """mean(ALG)/mean(OPT) over common traces, delta-method standard error."""
    t0 = time.perf_counter()
    score = _make_scorer(inst, spec, paired=True)
    n, sums, sumsqs, cross = _run_chunks(trials, seed, threads, score)
    mean_a, se_a = _mean_stderr(n, float(sums[0]), float(sumsqs[0]))
    mean_o, se_o = _mean_stderr(n, float(sums[1]), float(sumsqs[1]))
    if mean_o <= 4.0 * se_o + 1e-15:
        raise ZeroOptimum(
            f"prophet mean {mean_o:.3g} is indistinguishable from zero "
            f"(stderr {se_o:.3g}); the ratio is undefined"
        )
    ratio = mean_a / mean_o
    if n < 2:
        se = 0.0
    else:
        var_a = max(float(sumsqs[0]) - float(sums[0]) ** 2 / n, 0.0) / (n - 1)
        var_o = max(float(sumsqs[1]) - float(sums[1]) ** 2 / n, 0.0) / (n - 1)
        cov = (cross - float(sums[0]) * float(sums[1]) / n) / (n - 1)
        var_r = (var_a - 2.0 * ratio * cov + ratio * ratio * var_o) / (n * mean_o * mean_o)
        se = math.sqrt(max(var_r, 0.0))
    return _report(ratio, se, n, seed, t0)


def estimate_walk_threshold(n: int, p0: float, t: float, trials: int, seed: int,
                            threads: Optional[int] = None) -> SimReport:
    """Mean threshold-policy profit on +-1 random-walk prices."""
    t0 = time.perf_counter()

    def score(rng, m):
        return threshold_profit_many(random_walk_many(n, p0, rng, m), t)

    trials_, sums, sumsqs, _ = _run_chunks(trials, seed, threads, score)
    mean, se = _mean_stderr(trials_, float(sums[0]), float(sumsqs[0]))
    return _report(mean, se, trials_, seed, t0)


def _report(mean: float, se: float, trials: int, seed: int, t0: float) -> SimReport:
    return SimReport(
        mean=mean,
        stderr=se,
        ci95=(mean - 1.96 * se, mean + 1.96 * se),
        trials=trials,
        seed=seed,
        wall_time_ms=int(round((time.perf_counter() - t0) * 1000)),
    )


# ---------------------------------------------------------------------------
# reporting


def report_to_json(rep: SimReport) -> dict:
    return {
        "mean": rep.mean,
        "stderr": rep.stderr,
        "ci95": [rep.ci95[0], rep.ci95[1]],
        "trials": rep.trials,
        "seed": rep.seed,
        "wall_time_ms": rep.wall_time_ms,
    }


_CSV_COLUMNS = ["instance", "policy", "trials", "seed", "mean", "stderr", "ci_lo", "ci_hi"]


def append_report_csv(path, instance_label: str, policy_label: str, rep: SimReport) -> None:
    p = Path(path)
    new = not p.exists()
    with p.open("a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(_CSV_COLUMNS)
        writer.writerow([instance_label, policy_label, rep.trials, rep.seed,
                         repr(rep.mean), repr(rep.stderr),
                         repr(rep.ci95[0]), repr(rep.ci95[1])])
