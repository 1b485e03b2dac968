"""Schottky sets: construction, verification and the product maps.

A Schottky sequence is a block of `m0` isometries; its axis is the orbit of
the basepoint under the partial products.  A Schottky set is a family of
such blocks whose axes are contracting, long, and mutually in general
position: from any point, at most one block of the family is badly aligned.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .words import GroupWord, common_prefix_letters, random_reduced_word
from .spaces import TreeModel
from . import geometry
from .geometry import Path, constants_for, is_aligned, is_contracting, schottky_length_scale


class BudgetExhausted(RuntimeError):
    """Raised when a search runs out of candidates or time budget."""


class NonIndependentPair(ValueError):
    """Raised when the two seed isometries share an axis."""


@dataclass(frozen=True)
class SchottkySequence:
    """A block of steps; the product and the axis derive from it."""

    steps: Tuple

    def __len__(self) -> int:
        return len(self.steps)

    def product(self):
        out = None
        for s in self.steps:
            out = s if out is None else out * s
        return out

    def inverse(self) -> "SchottkySequence":
        return SchottkySequence(tuple(s.inverse() for s in reversed(self.steps)))

    def partial_products(self) -> List:
        out = []
        acc = None
        for s in self.steps:
            acc = s if acc is None else acc * s
            out.append(acc)
        return out


@dataclass(frozen=True)
class SetConstants:
    k0: float
    d0: float
    d1: float
    e0: float
    length_floor: float


@dataclass(frozen=True)
class SchottkySet:
    sequences: Tuple[SchottkySequence, ...]
    m0: int
    constants: SetConstants

    def __len__(self) -> int:
        return len(self.sequences)

    def products(self) -> List:
        return [s.product() for s in self.sequences]

    def __getitem__(self, i: int) -> SchottkySequence:
        return self.sequences[i]


def gamma_axis(model, seq: SchottkySequence, frame=None) -> Path:
    """Axis of a block: basepoint orbit under the partial products."""
    frame = frame if frame is not None else model.identity()
    pts = [model.apply(frame, model.basepoint)]
    acc = frame
    for s in seq.steps:
        acc = acc * s
        pts.append(model.apply(acc, model.basepoint))
    return Path(tuple(pts))


def _axis_is_geodesic(model, axis: Path) -> bool:
    total = 0
    for i in range(len(axis.points) - 1):
        total += model.distance(axis.points[i], axis.points[i + 1])
    return model.distance(axis.start, axis.end) == total


# ---------------------------------------------------------------------------
# verification


@dataclass
class PropertyReport:
    ok: bool
    mode: str
    detail: str = ""
    witness: Optional[tuple] = None


@dataclass
class VerifyReport:
    ok: bool
    properties: Dict[str, PropertyReport]
    probe_radius: int

    def failures(self) -> List[str]:
        return [k for k, v in self.properties.items() if not v.ok]


def _tree_alignment_fail_count(word_prefixes, inv_prefixes, x: GroupWord, k0: int) -> int:
    """Number of blocks badly aligned from x (tree fast predicate).

    For a geodesic block axis [o, w o], the point x is badly aligned with
    the block iff x shares k0 letters with w, or cancels k0 letters when
    appended to w; both depend only on the first k0 letters of x.
    """

    fails = 0
    for wp, ip in zip(word_prefixes, inv_prefixes):
        if common_prefix_letters(x, wp) >= k0 or common_prefix_letters(x, ip) >= k0:
            fails += 1
    return fails


def verify_schottky(
    model,
    sch: SchottkySet,
    probe_radius: Optional[int] = None,
    contraction_radius: int = 4,
    mode: str = "auto",
    rng=None,
    sample_points: int = 400,
) -> VerifyReport:
    """Check the five defining properties of a Schottky set.

    On the tree the general-position property is exhausted over the ball of
    `probe_radius` (the predicate for a point depends only on its first k0
    letters, which the scan memoizes); elsewhere it is sampled.
    """

    consts = sch.constants
    k0 = consts.k0
    probe_radius = probe_radius if probe_radius is not None else sch.m0 + 5
    props: Dict[str, PropertyReport] = {}

    # (1) blocks are long enough for the alignment machinery
    props["length_floor"] = PropertyReport(
        ok=sch.m0 > consts.length_floor,
        mode="exact",
        detail="m0=%d floor=%s" % (sch.m0, consts.length_floor),
    )

    # (2) every axis is a contracting quasigeodesic
    ok2, witness2, mode2 = True, None, "exact-geodesic"
    for seq in sch.sequences:
        axis = gamma_axis(model, seq)
        if model.kind == "tree" and _axis_is_geodesic(model, axis):
            continue  # tree geodesics are contracting for any width >= 1
        good, wit = is_contracting(model, axis, k0, probe_radius=contraction_radius, rng=rng)
        mode2 = "probe"
        if not good:
            ok2, witness2 = False, wit
            break
    props["contracting_axes"] = PropertyReport(ok=ok2, mode=mode2, witness=witness2)

    # (3) blocks move the basepoint far
    floor3 = 10.0 * consts.e0
    dists = [model.distance(model.basepoint, model.apply(p, model.basepoint)) for p in sch.products()]
    props["length"] = PropertyReport(
        ok=all(d >= floor3 for d in dists),
        mode="exact",
        detail="min displacement %s >= %s" % (min(dists), floor3),
    )

    # (4) from any point, at most one block is badly aligned
    if model.kind == "tree" and all(
        _axis_is_geodesic(model, gamma_axis(model, s)) for s in sch.sequences
    ):
        k0i = int(k0)
        words = [s.product() for s in sch.sequences]
        wp = [w.prefix(k0i) for w in words]
        ip = [w.inverse().prefix(k0i) for w in words]
        # the predicate at x depends only on x's first k0 letters; when the
        # requested ball is too large to walk, the k0-ball already covers
        # every prefix class of the whole tree and stays exhaustive
        scan_radius = probe_radius
        if 2 * model.rank * (2 * model.rank - 1) ** max(probe_radius - 1, 0) > 2_000_000:
            scan_radius = min(probe_radius, k0i)
        cache: Dict[tuple, int] = {}
        ok4, witness4, scanned = True, None, 0
        for x in model.ball(scan_radius):
            scanned += 1
            key = tuple(itertools.islice(x.letters(), k0i))
            fails = cache.get(key)
            if fails is None:
                fails = _tree_alignment_fail_count(wp, ip, x, k0i)
                cache[key] = fails
            if fails > 1:
                ok4, witness4 = False, (x,)
                break
        props["general_position"] = PropertyReport(
            ok=ok4,
            mode="ball-exhaustive",
            detail="scanned %d points, radius %d" % (scanned, scan_radius),
            witness=witness4,
        )
    else:
        rng = rng if rng is not None else geometry._default_rng()
        ok4, witness4 = True, None
        for _ in range(sample_points):
            x = model.random_point(rng)
            fails = 0
            for seq in sch.sequences:
                if not _point_block_aligned(model, sch, seq, x):
                    fails += 1
            if fails > 1:
                ok4, witness4 = False, (x,)
                break
        props["general_position"] = PropertyReport(
            ok=ok4, mode="sampled", detail="%d sampled points" % sample_points, witness=witness4
        )

    # (5) a block does not fold back on its own translate
    ok5, witness5 = True, None
    for seq in sch.sequences:
        axis = gamma_axis(model, seq)
        translated = gamma_axis(model, seq, frame=seq.product())
        rep = is_aligned(model, [axis, translated], k0)
        if not rep.aligned:
            ok5, witness5 = False, (seq,)
            break
    props["self_alignment"] = PropertyReport(ok=ok5, mode="exact", witness=witness5)

    return VerifyReport(ok=all(p.ok for p in props.values()), properties=props, probe_radius=probe_radius)


def _point_block_aligned(model, sch: SchottkySet, seq: SchottkySequence, x) -> bool:
    k0 = sch.constants.k0
    axis = gamma_axis(model, seq)
    first = is_aligned(model, [x, axis], k0).aligned
    moved = model.apply(seq.product(), x)
    second = is_aligned(model, [axis, moved], k0).aligned
    return first and second


# ---------------------------------------------------------------------------
# construction


def _primitive_cyclic_key(word: GroupWord) -> tuple:
    """Conjugacy/axis invariant: primitive root of the cyclic word, up to
    rotation and inversion."""

    cyc = word.cyclic_reduce()
    letters = list(cyc.letters())
    n = len(letters)
    if n == 0:
        return ()
    # primitive root
    for period in range(1, n + 1):
        if n % period == 0 and letters == letters[period:] + letters[:period]:
            letters = letters[:period]
            break
    n = len(letters)
    variants = []
    for seq in (letters, [-l for l in reversed(letters)]):
        for r in range(n):
            variants.append(tuple(seq[r:] + seq[:r]))
    return min(variants)


def independent_contracting_pair(model, g, h) -> bool:
    if model.kind == "tree":
        if g.is_identity() or h.is_identity():
            return False
        return _primitive_cyclic_key(g) != _primitive_cyclic_key(h)
    tg, th = model.translation_length(g), model.translation_length(h)
    if tg <= 0 or th <= 0:
        return False
    # distinct axes iff the commutator does not vanish on axis endpoints;
    # cheap proxy: conjugating one by the other changes its axis midpoint
    moved = g * h * g.inverse()
    return not (moved == h)


def build_schottky(
    model,
    g,
    h,
    size: int,
    m0: int,
    k0: Optional[float] = None,
    seed: int = 0,
    symmetric: bool = True,
    step_pool: Optional[Sequence] = None,
    budget: int = 200000,
    probe_radius: Optional[int] = None,
) -> SchottkySet:
    """Search for a Schottky set of `size` blocks of length `m0`.

    Candidate blocks are step sequences over {g, h} (and inverses when
    `symmetric`), or over `step_pool` when given.  Blocks are accepted
    greedily when their leading/trailing letter patterns stay disjoint from
    the ones already used, then the whole set is verified.
    """

    import numpy as np

    if size <= 0:
        raise ValueError("size must be positive")
    if not independent_contracting_pair(model, g, h):
        raise NonIndependentPair("seed isometries must be independent and contracting")

    consts = constants_for(model)
    k0 = k0 if k0 is not None else consts.k0
    if m0 <= consts.length_floor:
        raise ValueError("block length %d too short (floor %s)" % (m0, consts.length_floor))

    pool = list(step_pool) if step_pool is not None else [g, h] + ([g.inverse(), h.inverse()] if symmetric else [])
    rng = np.random.default_rng(seed)

    set_consts = SetConstants(
        k0=k0,
        d0=consts.d0,
        d1=consts.d1,
        e0=schottky_length_scale(m0, k0),
        length_floor=consts.length_floor,
    )

    if model.kind != "tree":
        return _build_generic(model, pool, size, m0, set_consts, rng, budget, probe_radius)

    k0i = int(k0)
    chosen: List[SchottkySequence] = []
    used_prefixes: Set[tuple] = set()
    tried = 0
    # systematic enumeration first (covers small pools), then random search
    def candidates():
        space = len(pool) ** m0
        if space <= 4096:
            for combo in itertools.product(range(len(pool)), repeat=m0):
                yield [pool[i] for i in combo]
        while True:
            yield [pool[int(rng.integers(0, len(pool)))] for _ in range(m0)]

    for steps in candidates():
        tried += 1
        if tried > budget:
            raise BudgetExhausted(
                "no Schottky set of size %d found after %d candidates" % (size, tried)
            )
        seq = SchottkySequence(tuple(steps))
        word = seq.product()
        axis = gamma_axis(model, seq)
        if not _axis_is_geodesic(model, axis):
            continue
        if model.distance(model.basepoint, model.apply(word, model.basepoint)) < 10 * set_consts.e0:
            continue
        fwd = tuple(word.prefix(k0i).letters())
        bwd = tuple(word.inverse().prefix(k0i).letters())
        if fwd == bwd or fwd in used_prefixes or bwd in used_prefixes:
            continue
        chosen.append(seq)
        used_prefixes.add(fwd)
        used_prefixes.add(bwd)
        if len(chosen) == size:
            break
    if len(chosen) < size:
        raise BudgetExhausted("candidate space exhausted at %d of %d blocks" % (len(chosen), size))

    sch = SchottkySet(tuple(chosen), m0, set_consts)
    report = verify_schottky(model, sch, probe_radius=probe_radius)
    if not report.ok:
        raise BudgetExhausted("constructed set failed verification: %s" % report.failures())
    return sch


def _build_generic(model, pool, size, m0, set_consts, rng, budget, probe_radius):
    chosen: List[SchottkySequence] = []
    tried = 0
    while len(chosen) < size:
        tried += 1
        if tried > budget:
            raise BudgetExhausted("no Schottky set found after %d candidates" % tried)
        steps = [pool[int(rng.integers(0, len(pool)))] for _ in range(m0)]
        seq = SchottkySequence(tuple(steps))
        trial = SchottkySet(tuple(chosen + [seq]), m0, set_consts)
        if verify_schottky(model, trial, probe_radius=probe_radius, rng=rng, sample_points=100).ok:
            chosen.append(seq)
    sch = SchottkySet(tuple(chosen), m0, set_consts)
    report = verify_schottky(model, sch, probe_radius=probe_radius, rng=rng)
    if not report.ok:
        raise BudgetExhausted("constructed set failed verification: %s" % report.failures())
    return sch


def tree_schottky_set(size: int, seed: int = 0, model: Optional[TreeModel] = None) -> SchottkySet:
    """Build a tree Schottky set of a requested size, picking k0 and m0.

    A block occupies two letter-prefix classes (forward and backward), so a
    prefix length k0 supports at most 4 * 3^(k0-1) / 2 blocks; we take the
    smallest k0 with room to spare and the shortest block length compatible
    with a positive step scale.
    """

    if size <= 0:
        raise ValueError("size must be positive")
    model = model if model is not None else TreeModel()
    k0 = 2
    while 4 * 3 ** (k0 - 1) < 2 * size:
        k0 += 1
    m0 = max(int(constants_for(model).length_floor) + 1, 2 * k0 - 1)
    g = GroupWord.from_letters([1])
    h = GroupWord.from_letters([2])
    return build_schottky(model, g, h, size=size, m0=m0, k0=float(k0), seed=seed)


# ---------------------------------------------------------------------------
# derived sets and products


def inverse_set(sch: SchottkySet) -> SchottkySet:
    return SchottkySet(tuple(s.inverse() for s in sch.sequences), sch.m0, sch.constants)


@dataclass(frozen=True)
class PhiImage:
    """Products of four blocks, with the inverse map back to index tuples."""

    elements: tuple
    index: Dict
    arity: int = 4

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, w) -> bool:
        return w in self.index

    def preimage(self, w) -> Tuple[int, int, int, int]:
        return self.index[w]


def phi_image(sch: SchottkySet, budget: int = 2_000_000) -> PhiImage:
    n = len(sch)
    if n ** 4 > budget:
        raise BudgetExhausted("phi image of size %d^4 exceeds budget" % n)
    products = sch.products()
    elements = []
    index: Dict = {}
    for combo in itertools.product(range(n), repeat=4):
        w = products[combo[0]] * products[combo[1]] * products[combo[2]] * products[combo[3]]
        if w in index:
            raise ValueError("product map is not injective at %s" % (combo,))
        index[w] = combo
        elements.append(w)
    return PhiImage(tuple(elements), index)


def concat_check(model, sch: SchottkySet, indices: Sequence[int], signs: Sequence[int]) -> dict:
    """Alignment and progress of a chain of (possibly inverted) blocks.

    Rejects patterns with an adjacent block/inverse-block pair, which is the
    one configuration the chain lemma excludes.
    """

    if len(indices) != len(signs) or not indices:
        raise ValueError("need equally many indices and signs")
    if any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be +-1")
    for i in range(len(indices) - 1):
        if indices[i] == indices[i + 1] and signs[i] * signs[i + 1] == -1:
            raise ValueError("adjacent inverse pair at position %d" % i)

    seqs = [
        sch.sequences[i] if s == 1 else sch.sequences[i].inverse()
        for i, s in zip(indices, signs)
    ]
    axes = []
    frame = model.identity()
    for seq in seqs:
        axes.append(gamma_axis(model, seq, frame=frame))
        frame = frame * seq.product()
    word = frame
    displacement = model.distance(model.basepoint, model.apply(word, model.basepoint))
    k = len(indices)
    floor = 5.0 * sch.constants.e0 * k
    rep = is_aligned(model, axes, sch.constants.d0)
    return {
        "aligned": rep.aligned,
        "displacement": displacement,
        "floor": floor,
        "meets_floor": displacement >= floor and displacement > 0,
        "product": word,
    }


def in_tilde(model, sch: SchottkySet, beta: int, gamma: int, v) -> bool:
    """Membership in the admissible middle set for a connector v."""
    k0 = sch.constants.k0
    bseq, gseq = sch.sequences[beta], sch.sequences[gamma]
    baxis = gamma_axis(model, bseq)
    endpoint = model.apply(bseq.product() * v * gseq.product(), model.basepoint)
    if not is_aligned(model, [baxis, endpoint], k0).aligned:
        return False
    gaxis = gamma_axis(model, gseq)
    tail = model.apply(v.inverse(), model.basepoint)
    return is_aligned(model, [tail, gaxis], k0).aligned


def tilde_pairs(model, sch: SchottkySet, v) -> List[Tuple[int, int]]:
    n = len(sch)
    return [
        (b, c)
        for b in range(n)
        for c in range(n)
        if in_tilde(model, sch, b, c, v)
    ]


# ---------------------------------------------------------------------------
# serialization (tree sets)


def schottky_to_json(sch: SchottkySet) -> str:
    payload = {
        "m0": sch.m0,
        "constants": {
            "k0": sch.constants.k0,
            "d0": sch.constants.d0,
            "d1": sch.constants.d1,
            "e0": sch.constants.e0,
            "length_floor": sch.constants.length_floor,
        },
        "sequences": [
            [list(step.letters()) for step in seq.steps] for seq in sch.sequences
        ],
    }
    return json.dumps(payload, sort_keys=True)


def schottky_from_json(text: str) -> SchottkySet:
    payload = json.loads(text)
    consts = SetConstants(
        k0=payload["constants"]["k0"],
        d0=payload["constants"]["d0"],
        d1=payload["constants"]["d1"],
        e0=payload["constants"]["e0"],
        length_floor=payload["constants"]["length_floor"],
    )
    seqs = tuple(
        SchottkySequence(tuple(GroupWord.from_letters(step) for step in seq))
        for seq in payload["sequences"]
    )
    return SchottkySet(seqs, payload["m0"], consts)
