"""Pivotal times for decorated products of Schottky blocks.

A configuration is a product

    W_n = w_0 A_1 B_1 v_1 C_1 D_1 w_1 ... A_n B_n v_n C_n D_n w_n

where each step contributes four Schottky blocks (entry buffer A, pivotable
middle pair B, C around a connector v, exit buffer D) separated by arbitrary
isometries w_i.  Pivotal times are maintained with a stack: a step is kept
when its entry block is aligned with the running anchor, its middle pair is
admissible, and its exit block is aligned with the step's endpoint; a failed
step pops stack entries whose exit blocks the new endpoint no longer
respects.  Replacing the middle pair at a pivotal time by any admissible
pair leaves every intermediate stack untouched, because all conditions are
evaluated relative to frames that contain the replaced middle as a common
left factor.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import Path, constants_for, is_aligned, is_semi_aligned
from .schottky import SchottkySet, SchottkySequence, gamma_axis, in_tilde, tilde_pairs
from .words import GroupWord, common_prefix_letters


@dataclass(frozen=True)
class PivotConfig:
    """Schottky set, per-step block indices (a, b, c, d) and connectors."""

    sch: SchottkySet
    quads: Tuple[Tuple[int, int, int, int], ...]
    w: Tuple  # n+1 isometries
    v: Tuple  # n isometries

    def __post_init__(self):
        n = len(self.quads)
        if len(self.w) != n + 1 or len(self.v) != n:
            raise ValueError("need n quads, n connectors and n+1 spacers")

    @property
    def n(self) -> int:
        return len(self.quads)

    def block_isometry(self, model, k: int):
        """Product contributed by step k (1-based), including w_k."""
        a, b, c, d = self.quads[k - 1]
        S = self.sch.sequences
        return (
            S[a].product()
            * S[b].product()
            * self.v[k - 1]
            * S[c].product()
            * S[d].product()
            * self.w[k]
        )

    def total(self, model):
        acc = self.w[0]
        for k in range(1, self.n + 1):
            acc = acc * self.block_isometry(model, k)
        return acc

    def prefix(self, model, k: int):
        """W_k: product through step k (W_0 = w_0)."""
        acc = self.w[0]
        for i in range(1, k + 1):
            acc = acc * self.block_isometry(model, i)
        return acc


@dataclass(frozen=True)
class PivotalTimes:
    indices: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, k: int) -> bool:
        return k in self.indices

    def __iter__(self):
        return iter(self.indices)


def _step_conditions(model, config: PivotConfig, k: int, anchor_rel) -> bool:
    """Local admissibility of step k; `anchor_rel` carries the anchor point
    into the frame of the step's entry block."""

    S = config.sch
    k0 = S.constants.k0
    a, b, c, d = config.quads[k - 1]
    # entry block vs current anchor (frame: start of the entry block)
    entry_axis = gamma_axis(model, S.sequences[a])
    z_local = model.apply(anchor_rel, model.basepoint)
    if not is_aligned(model, [z_local, entry_axis], k0).aligned:
        return False
    # admissible middle pair around the connector
    if not in_tilde(model, S, b, c, config.v[k - 1]):
        return False
    # exit block vs the step endpoint (frame: start of the exit block)
    exit_axis = gamma_axis(model, S.sequences[d])
    end_local = model.apply(S.sequences[d].product() * config.w[k], model.basepoint)
    return is_aligned(model, [exit_axis, end_local], k0).aligned


def _backtrack_ok(model, config: PivotConfig, j: int, tail) -> bool:
    """Does the current endpoint still respect the exit block of step j?

    `tail` is the isometry from the end of step j's exit block to the
    current endpoint, expressed in that block's frame.
    """

    S = config.sch
    d = config.quads[j - 1][3]
    exit_axis = gamma_axis(model, S.sequences[d])
    point = model.apply(S.sequences[d].product() * tail, model.basepoint)
    return is_aligned(model, [exit_axis, point], S.constants.k0).aligned


def compute_pivotal_times(model, config: PivotConfig) -> PivotalTimes:
    """Stack construction of the pivotal times of a configuration."""

    S = config.sch
    blocks = [None]  # blocks[k] = isometry of step k (with w_k)
    stack: List[int] = []
    # anchor point = anchor_rel applied to the basepoint, expressed in the
    # frame of the coming step's entry block; initially the basepoint seen
    # from the end of w_0
    anchor_rel = config.w[0].inverse()

    for k in range(1, config.n + 1):
        block_k = config.block_isometry(model, k)
        blocks.append(block_k)
        if _step_conditions(model, config, k, anchor_rel):
            stack.append(k)
            anchor_rel = config.w[k].inverse()
        else:
            # current endpoint relative to the previous anchor frame moves on
            anchor_rel = block_k.inverse() * anchor_rel
            while stack:
                j = stack[-1]
                tail = config.w[j]
                for i in range(j + 1, k + 1):
                    tail = tail * blocks[i]
                if _backtrack_ok(model, config, j, tail):
                    break
                stack.pop()
            if stack:
                j = stack[-1]
                # anchor returns to the end of step j's exit block
                rel = config.w[j]
                for i in range(j + 1, k + 1):
                    rel = rel * blocks[i]
                anchor_rel = rel.inverse()
            else:
                rel = config.w[0]
                for i in range(1, k + 1):
                    rel = rel * blocks[i]
                anchor_rel = rel.inverse()
    return PivotalTimes(tuple(stack))


def extremal_axes(model, config: PivotConfig, times: Optional[PivotalTimes] = None) -> List[Path]:
    """The four translated block axes of every pivotal step, in order."""

    times = times if times is not None else compute_pivotal_times(model, config)
    S = config.sch.sequences
    axes: List[Path] = []
    acc = config.w[0]
    pos = 1
    pivot_set = set(times.indices)
    for k in range(1, config.n + 1):
        a, b, c, d = config.quads[k - 1]
        frames = [acc]
        frames.append(frames[-1] * S[a].product())
        frames.append(frames[-1] * S[b].product() * config.v[k - 1])
        frames.append(frames[-1] * S[c].product())
        if k in pivot_set:
            for frame, idx in zip(frames, (a, b, c, d)):
                axes.append(gamma_axis(model, S[idx], frame=frame))
        acc = frames[-1] * S[d].product() * config.w[k]
    return axes


def pivotal_chain_report(model, config: PivotConfig, times: Optional[PivotalTimes] = None):
    """Alignment of (basepoint, pivotal axes..., endpoint) at width d1."""

    times = times if times is not None else compute_pivotal_times(model, config)
    axes = extremal_axes(model, config, times)
    endpoint = model.apply(config.total(model), model.basepoint)
    items = [model.basepoint] + axes + [endpoint]
    return is_semi_aligned(model, items)


def pivot(model, config: PivotConfig, i: int, beta: int, gamma: int, v) -> PivotConfig:
    """Replace the middle pair and connector at pivotal time i."""

    times = compute_pivotal_times(model, config)
    if i not in times:
        raise ValueError("time %d is not pivotal" % i)
    if not in_tilde(model, config.sch, beta, gamma, v):
        raise ValueError("replacement middle pair is not admissible")
    a, _, _, d = config.quads[i - 1]
    quads = list(config.quads)
    quads[i - 1] = (a, beta, gamma, d)
    vs = list(config.v)
    vs[i - 1] = v
    return replace(config, quads=tuple(quads), v=tuple(vs))


# ---------------------------------------------------------------------------
# fast tree simulation of the pivot-count distribution


def _tree_prefix_key(word: GroupWord, k0: int) -> tuple:
    return tuple(word.prefix(k0).letters()) if len(word) >= k0 else None


def simulate_pivot_counts(
    sch: SchottkySet,
    n: int,
    trials: int,
    seed: int,
    w: Optional[Sequence[GroupWord]] = None,
    v: Optional[Sequence[GroupWord]] = None,
) -> np.ndarray:
    """Monte-Carlo sample of #pivotal times for uniform block choices.

    Tree-only fast path; spacers w (length n+1) and connectors v (length n)
    are fixed words.  Uses the same step/backtrack conditions as
    compute_pivotal_times, specialized to leading-letter comparisons.
    """

    ident = GroupWord.identity()
    N = len(sch)
    k0 = int(sch.constants.k0)
    words = [s.product() for s in sch.sequences]
    w = list(w) if w is not None else [ident] * (n + 1)
    v = list(v) if v is not None else [ident] * n
    if len(w) != n + 1 or len(v) != n:
        raise ValueError("need n+1 spacers and n connectors")

    fwd_prefix = {}
    for idx, word in enumerate(words):
        fwd_prefix.setdefault(tuple(word.prefix(k0).letters()), set()).add(idx)

    # bad entry block for a given anchor word u: common_prefix(u, word) >= k0
    def bad_entry(u: GroupWord) -> set:
        if len(u) < k0:
            return set()
        return fwd_prefix.get(tuple(u.prefix(k0).letters()), set())

    # per position: bad middle pairs (b, c) given connector v_k; a pair is
    # bad when v*word_c cancels k0 letters into word_b, or v^-1 shares k0
    # letters with word_c.  Both reduce to prefix-class lookups.
    bad_middle: List[set] = []
    inv_words = [word.inverse() for word in words]
    bwd_prefix = {}
    for idx, word in enumerate(inv_words):
        bwd_prefix.setdefault(tuple(word.prefix(k0).letters()), set()).add(idx)
    for k in range(n):
        bad = set()
        vk_inv_key = _tree_prefix_key(v[k].inverse(), k0)
        for ci in range(N):
            t = v[k] * words[ci]
            key = _tree_prefix_key(t, k0)
            for bi in bwd_prefix.get(key, ()):
                bad.add((bi, ci))
            if vk_inv_key is not None and _tree_prefix_key(words[ci], k0) == vk_inv_key:
                for bi in range(N):
                    bad.add((bi, ci))
        bad_middle.append(bad)

    # per position: bad exit block d given spacer w_k
    bad_exit: List[set] = []
    for k in range(1, n + 1):
        bad = set()
        for di in range(N):
            if common_prefix_letters(inv_words[di], w[k]) >= k0:
                bad.add(di)
        bad_exit.append(bad)

    rng = np.random.default_rng(seed)
    counts = np.zeros(trials, dtype=np.int64)
    for t in range(trials):
        draws = rng.integers(0, N, size=(n, 4))
        stack: List[int] = []
        anchor = w[0].inverse()
        block_words: List[Optional[GroupWord]] = [None]
        for k in range(1, n + 1):
            a, b, c, d = (int(x) for x in draws[k - 1])
            ok = (
                a not in bad_entry(anchor)
                and (b, c) not in bad_middle[k - 1]
                and d not in bad_exit[k - 1]
            )
            block = (
                words[a] * words[b] * v[k - 1] * words[c] * words[d] * w[k]
            )
            block_words.append(block)
            if ok:
                stack.append(k)
                anchor = w[k].inverse()
            else:
                anchor = block.inverse() * anchor
                while stack:
                    j = stack[-1]
                    tail = w[j]
                    for i in range(j + 1, k + 1):
                        tail = tail * block_words[i]
                    if common_prefix_letters(inv_words[draws[j - 1][3]], tail) < k0:
                        break
                    stack.pop()
                if stack:
                    j = stack[-1]
                    rel = w[j]
                    for i in range(j + 1, k + 1):
                        rel = rel * block_words[i]
                    anchor = rel.inverse()
                else:
                    rel = w[0]
                    for i in range(1, k + 1):
                        rel = rel * block_words[i]
                    anchor = rel.inverse()
        counts[t] = len(stack)
    return counts


# ---------------------------------------------------------------------------
# reference jump law for the pivot count


def jump_law_pmf(n0: int, floor: int = -60) -> Dict[int, float]:
    """One-step law the pivot count dominates: +1 with mass (n0-4)/n0,
    -m with mass ((n0-4)/n0) * (4/n0)^m."""

    q = (n0 - 4) / n0
    r = 4 / n0
    pmf = {1: q}
    for m in range(1, -floor + 1):
        pmf[-m] = q * r ** m
    pmf[floor - 1] = max(0.0, 1.0 - sum(pmf.values()))
    return pmf


def jump_walk_cdf(n0: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Exact CDF of the n-fold sum of the jump law (support truncated)."""

    pmf = jump_law_pmf(n0)
    lo = min(pmf) * n
    size = n * (1 - min(pmf)) + 1
    offset = -lo
    dist = np.zeros(int(n - lo + 1))
    dist[offset] = 1.0
    for _ in range(n):
        new = np.zeros_like(dist)
        for j, p in pmf.items():
            if j >= 0:
                new[j:] += dist[: len(dist) - j] * p
            else:
                new[:j] += dist[-j:] * p
        dist = new
    values = np.arange(lo, n + 1)
    return values, np.cumsum(dist)


def dominates_jump_walk(counts: np.ndarray, n0: int, n: int, z: float = 3.0) -> bool:
    """Empirical CDF of pivot counts must sit below the jump-walk CDF
    (stochastic domination), up to z Monte-Carlo standard errors."""

    values, cdf = jump_walk_cdf(n0, n)
    trials = len(counts)
    for x, fx in zip(values, cdf):
        emp = np.mean(counts <= x)
        slack = z * math.sqrt(max(fx * (1 - fx), 1e-12) / trials)
        if emp > fx + slack:
            return False
    return True


def half_count_tail_bound(n0: int, n: int) -> float:
    """Upper bound (3 * (4/n0)^(1/4))^n for P(#pivotal times <= n/2)."""

    return (3.0 * (4.0 / n0) ** 0.25) ** n


def half_count_tail_ok(counts: np.ndarray, n0: int, n: int, z: float = 3.0) -> bool:
    """Empirical frequency of {count <= n/2} within z standard errors of the
    theoretical tail bound (vacuous when the bound exceeds 1)."""

    bound = half_count_tail_bound(n0, n)
    if bound >= 1.0:
        return True
    trials = len(counts)
    freq = float(np.mean(counts <= n / 2))
    slack = z * math.sqrt(max(bound * (1.0 - bound), 1e-12) / trials)
    return freq <= bound + slack


def sample_jump_dominated_counts(
    n0: int,
    n: int,
    trials: int,
    seed: int,
    sch: Optional[SchottkySet] = None,
) -> np.ndarray:
    """Sample pivot counts for a size-n0 tree set with fixed random spacers.

    The spacers and connectors are short reduced words drawn once from the
    seed, so the per-step failure rate is at most 4/n0 and the resulting
    counts dominate the jump walk of `jump_walk_cdf`.
    """

    from .schottky import tree_schottky_set
    from .words import random_reduced_word

    if sch is None:
        sch = tree_schottky_set(n0, seed=seed)
    if len(sch) != n0:
        raise ValueError("set size %d != n0 %d" % (len(sch), n0))
    rng = np.random.default_rng([seed, 7])
    k0 = int(sch.constants.k0)
    w = [random_reduced_word(rng, k0) for _ in range(n + 1)]
    v = [random_reduced_word(rng, k0) for _ in range(n)]
    return simulate_pivot_counts(sch, n, trials, seed, w=w, v=v)


def pivot_counts_csv(path: str, counts: np.ndarray, n0: int, n: int, seed: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "n0", "n", "seed", "pivot_count"])
        for t, c in enumerate(counts):
            writer.writerow([t, n0, n, seed, int(c)])


# ---------------------------------------------------------------------------
# pre-alignment and repulsion


def middle_chain(model, config: PivotConfig) -> List[Path]:
    """Axes of the middle pairs (B_k, C_k) in ambient coordinates, plus the
    endpoints, as used by the pre-alignment predicate."""

    S = config.sch.sequences
    items: List = [model.basepoint]
    acc = config.w[0]
    for k in range(1, config.n + 1):
        a, b, c, d = config.quads[k - 1]
        acc_a = acc * S[a].product()
        items.append(gamma_axis(model, S[b], frame=acc_a))
        acc_bv = acc_a * S[b].product() * config.v[k - 1]
        items.append(gamma_axis(model, S[c], frame=acc_bv))
        acc = acc_bv * S[c].product() * S[d].product() * config.w[k]
    items.append(model.apply(config.total(model), model.basepoint))
    return items


def is_pre_aligned_sequence(
    model,
    sch: SchottkySet,
    w_seq: Sequence,
    v_pool: Sequence,
    budget: int = 4096,
    rng=None,
) -> bool:
    """All admissible middle choices keep the middle chain aligned.

    w_seq has n+1 entries (the step quads' entry/exit blocks are already
    folded into the w's here, i.e. blocks are only the middle pairs).  The
    check enumerates admissible (b, c, v) choices exhaustively when the
    space is small, otherwise samples `budget` random choices.
    """

    n = len(w_seq) - 1
    N = len(sch)
    choices: List[List[Tuple[int, int, object]]] = []
    for _ in range(n):
        per = []
        for v in v_pool:
            for b, c in tilde_pairs(model, sch, v):
                per.append((b, c, v))
        if not per:
            return False
        choices.append(per)

    total = 1
    for per in choices:
        total *= len(per)
        if total > budget:
            break

    def chain_for(assignment) -> List:
        items: List = [model.basepoint]
        acc = w_seq[0]
        for k in range(n):
            b, c, v = assignment[k]
            items.append(gamma_axis(model, sch.sequences[b], frame=acc))
            acc = acc * sch.sequences[b].product() * v
            items.append(gamma_axis(model, sch.sequences[c], frame=acc))
            acc = acc * sch.sequences[c].product() * w_seq[k + 1]
        items.append(model.apply(acc, model.basepoint))
        return items

    if total <= budget:
        import itertools as it

        for assignment in it.product(*choices):
            if not is_semi_aligned(model, chain_for(assignment)).aligned:
                return False
        return True

    rng = rng if rng is not None else np.random.default_rng(0)
    for _ in range(budget):
        assignment = [per[int(rng.integers(0, len(per)))] for per in choices]
        if not is_semi_aligned(model, chain_for(assignment)).aligned:
            return False
    return True


def is_pre_aligned_isometry(model, sch: SchottkySet, phi, v_pool: Sequence, budget: int = 4096) -> bool:
    """phi is pre-aligned when every admissible exit/entry pair of middle
    blocks stays aligned across it."""

    checked = 0
    for v in v_pool:
        for b, c in tilde_pairs(model, sch, v):
            gaxis = gamma_axis(model, sch.sequences[c])
            baxis = gamma_axis(model, sch.sequences[b], frame=sch.sequences[c].product() * phi)
            if not is_semi_aligned(model, [gaxis, baxis]).aligned:
                return False
            checked += 1
            if checked >= budget:
                return True
    return True


@dataclass(frozen=True)
class RepulsionSets:
    phi: object
    front: Tuple[Tuple[int, int], ...]
    back: Tuple[Tuple[int, int], ...]


def _decorated_prefixes(model, sch: SchottkySet, w_seq, middles, upto: int):
    """W_k products of the reduced decorated walk
    W_k = w_0 B_1 v_1 C_1 w_1 ... B_k v_k C_k w_k."""

    acc = w_seq[0]
    out = [acc]
    for k in range(upto):
        b, c, v = middles[k]
        acc = acc * sch.sequences[b].product() * v * sch.sequences[c].product() * w_seq[k + 1]
        out.append(acc)
    return out


def repulsion_phi(model, sch: SchottkySet, w_seq, middles, k: int):
    """Comparison isometry between the length-(k-1) head of the walk and its
    mirrored tail: phi_k = (V_{n-k} C_{n-k+1})^{-1} W_n W_{k-1}."""

    n = len(middles)
    prefixes = _decorated_prefixes(model, sch, w_seq, middles, n)
    b, c, v = middles[n - k]
    v_part = prefixes[n - k] * sch.sequences[b].product() * v
    head = v_part * sch.sequences[c].product()
    return head.inverse() * prefixes[n] * prefixes[k - 1]


def self_repulsion_sets(model, sch: SchottkySet, w_seq, middles, k: int) -> RepulsionSets:
    """Admissible middle pairs at positions k and n-k+1 that keep the walk
    away from its own mirrored tail."""

    n = len(middles)
    k0 = sch.constants.k0
    phi = repulsion_phi(model, sch, w_seq, middles, k)
    v_front = middles[k - 1][2]
    v_back = middles[n - k][2]
    front = []
    anchor = model.apply(phi.inverse(), model.basepoint)
    for b, c in tilde_pairs(model, sch, v_front):
        axis = gamma_axis(model, sch.sequences[b])
        if is_aligned(model, [anchor, axis], k0).aligned:
            front.append((b, c))
    back = []
    b_k = middles[k - 1][0]
    shift = phi * sch.sequences[b_k].product()
    for b, c in tilde_pairs(model, sch, v_back):
        axis = gamma_axis(model, sch.sequences[c])
        point = model.apply(sch.sequences[c].product() * shift, model.basepoint)
        if is_aligned(model, [axis, point], k0).aligned:
            back.append((b, c))
    return RepulsionSets(phi=phi, front=tuple(front), back=tuple(back))


@dataclass(frozen=True)
class MultiRepulsionSets:
    front: Tuple[tuple, tuple]
    back: Tuple[tuple, tuple]
    mixed: Tuple[tuple, tuple]
    condition: bool


def multi_repulsion_sets(model, sch1: SchottkySet, sch2: SchottkySet, walks, k: int) -> MultiRepulsionSets:
    """Admissible-pair sets keeping two decorated walks transverse.

    `walks` is a pair of (w_seq, middles).  Produces the front/back/mixed
    membership sets at level k and whether the joint condition holds for the
    current choices.
    """

    (w1, m1), (w2, m2) = walks
    sets = [sch1, sch2]
    ws = [w1, w2]
    ms = [m1, m2]
    n = len(m1)
    k0 = sch1.constants.k0

    def prefixes(t, upto):
        return _decorated_prefixes(model, sets[t], ws[t], ms[t], upto)

    def v_head(t, pos):
        pref = prefixes(t, n)
        b, c, v = ms[t][pos]
        return pref[pos] * sets[t].sequences[b].product() * v

    fronts, backs, mixeds = [], [], []
    for t in (0, 1):
        s = 1 - t
        # front: heads of the two walks diverge
        phi_front = prefixes(s, k - 1)[k - 1].inverse() * prefixes(t, k - 1)[k - 1]
        anchor = model.apply(phi_front.inverse(), model.basepoint)
        front = []
        for b, c in tilde_pairs(model, sets[t], ms[t][k - 1][2]):
            if is_aligned(model, [anchor, gamma_axis(model, sets[t].sequences[b])], k0).aligned:
                front.append((b, c))
        fronts.append(tuple(front))

        # back: mirrored tails diverge
        head_t = v_head(t, n - k) * sets[t].sequences[ms[t][n - k][1]].product()
        head_s = v_head(s, n - k) * sets[s].sequences[ms[s][n - k][1]].product()
        phi_back = head_s.inverse() * prefixes(s, n)[n] * prefixes(t, n)[n].inverse() * head_t
        back = []
        for b, c in tilde_pairs(model, sets[t], ms[t][n - k][2]):
            axis = gamma_axis(model, sets[t].sequences[c])
            point = model.apply(sets[t].sequences[c].product() * phi_back.inverse(), model.basepoint)
            if is_aligned(model, [axis, point], k0).aligned:
                back.append((b, c))
        backs.append(tuple(back))

        # mixed: head of one walk vs mirrored tail of the other
        head = v_head(s, n - k) * sets[s].sequences[ms[s][n - k][1]].product()
        phi_mixed = head.inverse() * prefixes(s, n)[n] * prefixes(t, k - 1)[k - 1]
        anchor = model.apply(phi_mixed.inverse(), model.basepoint)
        mixed = []
        for b, c in tilde_pairs(model, sets[t], ms[t][k - 1][2]):
            if is_aligned(model, [anchor, gamma_axis(model, sets[t].sequences[b])], k0).aligned:
                mixed.append((b, c))
        mixeds.append(tuple(mixed))

    condition = True
    for t in (0, 1):
        cur_front = (ms[t][k - 1][0], ms[t][k - 1][1])
        cur_back = (ms[t][n - k][0], ms[t][n - k][1])
        if cur_front not in set(fronts[t]) or cur_front not in set(mixeds[t]):
            condition = False
        if cur_back not in set(backs[t]):
            condition = False
    return MultiRepulsionSets(
        front=(fronts[0], fronts[1]),
        back=(backs[0], backs[1]),
        mixed=(mixeds[0], mixeds[1]),
        condition=condition,
    )
