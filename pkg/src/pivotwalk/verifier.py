"""Monte-Carlo experiment harness.

Each `run_*` operation draws seeded trials, computes exact tree statistics
(displacement and translation length use word arithmetic, never floats),
aggregates them, and derives a verdict mechanically from the thresholds
recorded in the report.  Reports are bit-reproducible: identical config and
seed give identical JSON/CSV bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sps

from .schottky import SchottkySet, independent_contracting_pair
from .svgplot import histogram, line_plot
from .walks import (
    DiscrepancyWitness,
    StepMeasure,
    discrepancy_bound_witness,
    sample_increments,
)
from .words import GroupWord


class ConfigurationError(ValueError):
    """Bad experiment configuration (preconditions, schema)."""


@dataclass
class ExperimentReport:
    experiment: str
    model: str
    measure: str
    seed: int
    n_grid: Tuple[int, ...]
    stats: Dict
    thresholds: Dict
    verdict: bool
    samples: List[Tuple] = field(default_factory=list)
    sample_header: Tuple[str, ...] = ()

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "model": self.model,
            "measure": self.measure,
            "seed": self.seed,
            "n_grid": list(self.n_grid),
            "stats": self.stats,
            "thresholds": self.thresholds,
            "verdict": bool(self.verdict),
        }
        return json.dumps(payload, sort_keys=True, indent=1) + "\n"

    def write(self, outdir: str, svg: bool = False) -> None:
        import os

        os.makedirs(outdir, exist_ok=True)
        with open(os.path.join(outdir, "report.json"), "w") as fh:
            fh.write(self.to_json())
        with open(os.path.join(outdir, "samples.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.sample_header)
            writer.writerows(self.samples)
        if svg:
            self._plot(os.path.join(outdir, "%s.svg" % self.experiment))

    def _plot(self, path: str) -> None:
        per_n = self.stats.get("per_n", {})
        key = None
        for cand in ("failure_freq", "iqr", "p95", "ks_disp"):
            if per_n and all(cand in rec for rec in per_n.values()):
                key = cand
                break
        if key is None:
            return
        ns = sorted(int(n) for n in per_n)
        ys = [per_n[str(n)][key] for n in ns]
        line_plot([(key, [float(n) for n in ns], [float(y) for y in ys])],
                  title=self.experiment, xlabel="n", ylabel=key, path=path)


# ---------------------------------------------------------------------------
# fast tree walk ensembles (vectorized syllable stacks)


def _atom_syllables(measure: StepMeasure) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    gens, exps = [], []
    for w in measure.support:
        if len(w.syls) != 1:
            return None
        g, e = w.syls[0]
        gens.append(g)
        exps.append(e)
    return np.asarray(gens, dtype=np.int16), np.asarray(exps, dtype=np.int64)


def tree_walk_ensemble(
    measure: StepMeasure, n: int, trials: int, rng
) -> Tuple[np.ndarray, np.ndarray]:
    """(displacement, translation length) arrays for `trials` independent
    n-step walks, exact word arithmetic throughout.

    Single-syllable supports (generator powers) run on vectorized syllable
    stacks; anything else falls back to per-trial word products.
    """

    atoms = _atom_syllables(measure)
    if atoms is None:
        return _slow_ensemble(measure, n, trials, rng)
    gen_a, exp_a = atoms
    k = len(measure.support)
    idx = rng.choice(k, size=(trials, n), p=np.asarray(measure.weights))
    G = np.zeros((trials, n + 1), dtype=np.int16)
    E = np.zeros((trials, n + 1), dtype=np.int64)
    ptr = np.zeros(trials, dtype=np.int64)
    rows = np.arange(trials)
    for i in range(n):
        g = gen_a[idx[:, i]]
        e = exp_a[idx[:, i]]
        top_g = G[rows, np.maximum(ptr - 1, 0)]
        merge = (ptr > 0) & (top_g == g)
        mrows = rows[merge]
        if len(mrows):
            pm = ptr[mrows] - 1
            E[mrows, pm] += e[merge]
            dead = E[mrows, pm] == 0
            ptr[mrows[dead]] -= 1
        prows = rows[~merge]
        if len(prows):
            pp = ptr[prows]
            G[prows, pp] = g[~merge]
            E[prows, pp] = e[~merge]
            ptr[prows] += 1
    mask = np.arange(n + 1)[None, :] < ptr[:, None]
    disp = np.where(mask, np.abs(E), 0).sum(axis=1)
    tau = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        p = int(ptr[t])
        word = GroupWord.from_syllables(
            (int(G[t, j]), int(E[t, j])) for j in range(p)
        )
        tau[t] = word.translation_length()
    return disp.astype(np.int64), tau


def _slow_ensemble(measure: StepMeasure, n: int, trials: int, rng):
    disp = np.empty(trials, dtype=np.int64)
    tau = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        acc = GroupWord.identity()
        for s in measure.sample(rng, n):
            acc = acc * s
        disp[t] = len(acc)
        tau[t] = acc.translation_length()
    return disp, tau


def _trial_rng(seed: int, stream: int):
    return np.random.default_rng([seed, stream])


# ---------------------------------------------------------------------------
# shared statistics


def log_slope_fit(ns: Sequence[float], ys: Sequence[float]) -> Tuple[float, float]:
    """Least-squares slope and R^2 of log(y) against n, positive entries
    only; (0, 1) when fewer than two positive points remain."""

    pts = [(n, math.log(y)) for n, y in zip(ns, ys) if y > 0]
    if len(pts) < 2:
        return 0.0, 1.0
    xs = np.array([p[0] for p in pts])
    zs = np.array([p[1] for p in pts])
    slope, intercept = np.polyfit(xs, zs, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((zs - pred) ** 2))
    ss_tot = float(np.sum((zs - zs.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), r2


def non_elementary(measure: StepMeasure, model, budget: int = 64) -> bool:
    """Search the support semigroup for two independent contracting
    isometries (short products only)."""

    frontier = list(measure.support)
    elements = list(frontier)
    while len(elements) < budget and frontier:
        new = []
        for a in frontier[: budget // 4]:
            for s in measure.support:
                w = a * s
                if w not in elements:
                    new.append(w)
                    elements.append(w)
                    if len(elements) >= budget:
                        break
            if len(elements) >= budget:
                break
        frontier = new
    for i in range(len(elements)):
        for j in range(i + 1, len(elements)):
            if independent_contracting_pair(model, elements[i], elements[j]):
                return True
    return False


def calibrate(measure: StepMeasure, model, n: int, trials: int, seed: int) -> Dict[str, float]:
    """Escape-rate and variance estimates from a dedicated run (use a seed
    disjoint from the experiment seed to avoid selection bias)."""

    rng = _trial_rng(seed, 0)
    disp, _ = tree_walk_ensemble(measure, n, trials, rng)
    lam = float(disp.mean()) / n
    sigma2 = float(disp.var(ddof=1)) / n
    return {"lambda": lam, "sigma2": sigma2, "n": n, "trials": trials}


# ---------------------------------------------------------------------------
# experiments


def run_genericity(
    measure: StepMeasure,
    model,
    n_grid: Sequence[int],
    trials: int,
    L: float,
    seed: int,
    calibration: Optional[Dict] = None,
) -> ExperimentReport:
    """Frequency of {trivial or translation length < L*n} along the grid:
    must be non-increasing with a negative log-slope (or identically 0)."""

    if not non_elementary(measure, model):
        raise ConfigurationError("measure is elementary")
    calib = calibration or calibrate(measure, model, max(n_grid), min(trials, 2000), seed + 10_001)
    if L >= calib["lambda"]:
        raise ConfigurationError(
            "rate floor L=%g is not below the escape rate estimate %g" % (L, calib["lambda"])
        )
    per_n: Dict[str, Dict] = {}
    samples: List[Tuple] = []
    freqs = []
    for gi, n in enumerate(n_grid):
        rng = _trial_rng(seed, gi)
        disp, tau = tree_walk_ensemble(measure, n, trials, rng)
        fail = (tau < L * n) | (disp == 0)
        freq = float(fail.mean())
        freqs.append(freq)
        per_n[str(n)] = {
            "failure_freq": freq,
            "mean_tau": float(tau.mean()),
            "mean_disp": float(disp.mean()),
        }
        for t in range(trials):
            samples.append((n, t, int(disp[t]), int(tau[t]), int(fail[t])))
    slope, r2 = log_slope_fit(list(n_grid), freqs)
    monotone = all(freqs[i + 1] <= freqs[i] for i in range(len(freqs) - 1))
    # decay either reaches zero or fits a negative log-slope
    verdict = monotone and (freqs[-1] == 0 or (slope < 0 and r2 >= 0.8))
    return ExperimentReport(
        experiment="genericity",
        model=model.kind,
        measure=measure.to_json(),
        seed=seed,
        n_grid=tuple(n_grid),
        stats={"per_n": per_n, "log_slope": slope, "r2": r2,
               "calibration": calib, "L": L},
        thresholds={"r2_min": 0.8, "monotone": True},
        verdict=verdict,
        samples=samples,
        sample_header=("n", "trial", "disp", "tau", "fail"),
    )


def run_discrepancy(
    measure: StepMeasure,
    model,
    n_grid: Sequence[int],
    trials: int,
    seed: int,
    sch: Optional[SchottkySet] = None,
    claim_n: Optional[int] = None,
    claim_trials: int = 0,
) -> ExperimentReport:
    """Gap d(o, Z_n o) - tau(Z_n): 95th percentile must grow at most
    logarithmically (quadrupling n multiplies it by <= 1.6); optionally
    checks the per-trial two-sided reach bound on non-capped trials."""

    per_n: Dict[str, Dict] = {}
    samples: List[Tuple] = []
    p95s = []
    for gi, n in enumerate(n_grid):
        rng = _trial_rng(seed, gi)
        disp, tau = tree_walk_ensemble(measure, n, trials, rng)
        gap = disp - tau
        p95 = float(np.percentile(gap, 95))
        p95s.append(p95)
        per_n[str(n)] = {"p95": p95, "mean_gap": float(gap.mean())}
        for t in range(trials):
            samples.append((n, t, int(gap[t])))
    ratio_ok = True
    worst_ratio = 0.0
    grid = list(n_grid)
    for i, n in enumerate(grid):
        if 4 * n in grid:
            j = grid.index(4 * n)
            ratio = p95s[j] / max(p95s[i], 1e-9) if p95s[i] > 0 else (0.0 if p95s[j] == 0 else math.inf)
            worst_ratio = max(worst_ratio, ratio)
            ratio_ok = ratio_ok and ratio <= 1.6

    claim_stats = None
    claim_ok = True
    if sch is not None and claim_trials > 0 and claim_n:
        applicable = 0
        violations = 0
        for t in range(claim_trials):
            rng = _trial_rng(seed, 10_000 + t)
            incs = sample_increments(measure, claim_n, rng)
            horizon = max(sch.m0, claim_n // 10)
            aux = sample_increments(measure, 2 * (horizon + claim_n - claim_n // 2), rng)
            wit = discrepancy_bound_witness(model, sch, incs, aux, horizon=horizon)
            if wit.applicable:
                applicable += 1
                if wit.lhs > wit.rhs + 1e-9:
                    violations += 1
        claim_ok = violations == 0
        claim_stats = {"trials": claim_trials, "applicable": applicable, "violations": violations}
    verdict = ratio_ok and claim_ok
    return ExperimentReport(
        experiment="discrepancy",
        model=model.kind,
        measure=measure.to_json(),
        seed=seed,
        n_grid=tuple(n_grid),
        stats={"per_n": per_n, "worst_quadrupling_ratio": worst_ratio, "claim": claim_stats},
        thresholds={"quadrupling_ratio_max": 1.6, "claim_violations": 0},
        verdict=verdict,
        samples=samples,
        sample_header=("n", "trial", "gap"),
    )


def run_clt(
    measure: StepMeasure,
    model,
    n: int,
    trials: int,
    seed: int,
    calibration: Optional[Dict] = None,
) -> ExperimentReport:
    """Standardized displacement and translation length against the normal
    law, and against each other."""

    calib = calibration or calibrate(measure, model, n, min(trials, 2000), seed + 10_001)
    lam, sigma2 = calib["lambda"], calib["sigma2"]
    if sigma2 <= 1e-12:
        return ExperimentReport(
            experiment="clt", model=model.kind, measure=measure.to_json(), seed=seed,
            n_grid=(n,), stats={"degenerate": True, "calibration": calib},
            thresholds={}, verdict=True, samples=[], sample_header=(),
        )
    rng = _trial_rng(seed, 0)
    disp, tau = tree_walk_ensemble(measure, n, trials, rng)
    scale = math.sqrt(sigma2 * n)
    z_disp = (disp - lam * n) / scale
    z_tau = (tau - lam * n) / scale
    ks_disp = float(sps.kstest(z_disp, "norm").statistic)
    ks_tau = float(sps.kstest(z_tau, "norm").statistic)
    ks_two = float(sps.ks_2samp(z_disp, z_tau).statistic)
    verdict = ks_disp <= 0.05 and ks_tau <= 0.05 and ks_two <= 0.03
    samples = [(n, t, int(disp[t]), int(tau[t])) for t in range(trials)]
    return ExperimentReport(
        experiment="clt",
        model=model.kind,
        measure=measure.to_json(),
        seed=seed,
        n_grid=(n,),
        stats={
            "per_n": {str(n): {"ks_disp": ks_disp, "ks_tau": ks_tau, "ks_two_sample": ks_two}},
            "calibration": calib,
        },
        thresholds={"ks_one_sample_max": 0.05, "ks_two_sample_max": 0.03},
        verdict=verdict,
        samples=samples,
        sample_header=("n", "trial", "disp", "tau"),
    )


def run_clt_converse(
    measure: StepMeasure,
    model,
    n_grid: Sequence[int],
    trials: int,
    seed: int,
    use_tau: bool = False,
    contrast: bool = False,
) -> ExperimentReport:
    """Non-tightness of (d(o, Z_n o) - median)/sqrt(n) for infinite-variance
    steps: the IQR must grow by >= 20% per doubling.  With `contrast` set,
    a finite-variance measure must instead stabilize within 5%."""

    if not contrast and measure.moment_profile != "heavy_tail":
        raise ConfigurationError("converse test requires an infinite-variance measure")
    if contrast and measure.moment_profile == "heavy_tail":
        raise ConfigurationError("contrast run requires a finite-variance measure")
    per_n: Dict[str, Dict] = {}
    samples: List[Tuple] = []
    iqrs = []
    for gi, n in enumerate(n_grid):
        rng = _trial_rng(seed, gi)
        disp, tau = tree_walk_ensemble(measure, n, trials, rng)
        vals = tau if use_tau else disp
        med = float(np.median(vals))
        z = (vals - med) / math.sqrt(n)
        iqr = float(np.percentile(z, 75) - np.percentile(z, 25))
        iqrs.append(iqr)
        per_n[str(n)] = {"iqr": iqr, "median": med}
        for t in range(trials):
            samples.append((n, t, int(vals[t])))
    ratios = [iqrs[i + 1] / max(iqrs[i], 1e-12) for i in range(len(iqrs) - 1)]
    # growth per doubling, averaged over the grid (endpoint geometric mean);
    # individual ratios are quantile estimates and too noisy to gate on
    doublings = math.log2(n_grid[-1] / n_grid[0])
    growth = (iqrs[-1] / max(iqrs[0], 1e-12)) ** (1.0 / doublings)
    if contrast:
        verdict = abs(growth - 1.0) <= 0.05
        thresholds = {"stability_band": 0.05}
    else:
        verdict = growth >= 1.2
        thresholds = {"min_growth_per_doubling": 1.2}
    return ExperimentReport(
        experiment="clt_converse" + ("_contrast" if contrast else ""),
        model=model.kind,
        measure=measure.to_json(),
        seed=seed,
        n_grid=tuple(n_grid),
        stats={"per_n": per_n, "doubling_ratios": ratios, "growth_per_doubling": growth,
               "statistic": "tau" if use_tau else "disp"},
        thresholds=thresholds,
        verdict=verdict,
        samples=samples,
        sample_header=("n", "trial", "value"),
    )


def _free_words_ok(model, z1: GroupWord, z2: GroupWord, word_len: int, k1: float) -> bool:
    """Every nontrivial reduced word of length <= word_len in z1, z2 and
    inverses moves the basepoint by at least (word length) * k1."""

    alphabet = [(1, z1), (-1, z1.inverse()), (2, z2), (-2, z2.inverse())]

    def rec(prev: int, acc: GroupWord, depth: int) -> bool:
        for sym, w in alphabet:
            if sym == -prev:
                continue
            nxt = acc * w
            if nxt.is_identity():
                return False
            if len(nxt) < depth * k1:
                return False
            if depth < word_len and not rec(sym, nxt, depth + 1):
                return False
        return True

    return rec(0, GroupWord.identity(), 1)


def run_free_subgroup(
    measure: StepMeasure,
    model,
    n_grid: Sequence[int],
    trials: int,
    word_len: int,
    seed: int,
    seed2: Optional[int] = None,
    k1: Optional[float] = None,
    calibration: Optional[Dict] = None,
) -> ExperimentReport:
    """Two independent walks generate a free group of rank 2 with a linear
    orbit lower bound, outside a failure set shrinking in n."""

    if word_len <= 0:
        raise ConfigurationError("word_len must be positive")
    seed2 = seed2 if seed2 is not None else seed + 500_000
    if seed2 == seed:
        raise ConfigurationError("the two walks must use distinct seeds")
    calib = calibration or calibrate(measure, model, max(n_grid), min(trials, 2000), seed + 10_001)
    per_n: Dict[str, Dict] = {}
    samples: List[Tuple] = []
    freqs = []
    for gi, n in enumerate(n_grid):
        k1_n = k1 if k1 is not None else max(1.0, 0.05 * calib["lambda"] * n)
        fails = 0
        for t in range(trials):
            rng1 = _trial_rng(seed, gi * trials + t)
            rng2 = _trial_rng(seed2, gi * trials + t)
            z1 = GroupWord.identity()
            for s in measure.sample(rng1, n):
                z1 = z1 * s
            z2 = GroupWord.identity()
            for s in measure.sample(rng2, n):
                z2 = z2 * s
            ok = _free_words_ok(model, z1, z2, word_len, k1_n)
            fails += 0 if ok else 1
            samples.append((n, t, int(not ok)))
        freq = fails / trials
        freqs.append(freq)
        per_n[str(n)] = {"failure_freq": freq, "k1": k1_n}
    slope, r2 = log_slope_fit(list(n_grid), freqs)
    monotone = all(freqs[i + 1] <= freqs[i] for i in range(len(freqs) - 1))
    verdict = monotone and (freqs[-1] == 0 or slope < 0) and freqs[-1] <= 0.05
    return ExperimentReport(
        experiment="free_subgroup",
        model=model.kind,
        measure=measure.to_json(),
        seed=seed,
        n_grid=tuple(n_grid),
        stats={"per_n": per_n, "log_slope": slope, "r2": r2, "calibration": calib,
               "word_len": word_len},
        thresholds={"final_failure_max": 0.05, "monotone": True},
        verdict=verdict,
        samples=samples,
        sample_header=("n", "trial", "fail"),
    )
