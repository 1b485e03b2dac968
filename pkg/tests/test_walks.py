"""Step measures, walk sampling, deviation witnesses and the reduction
pipeline (block decomposition, pivotal re-folding, counting decomposition)."""

import json
import math

import numpy as np
import pytest

from pivotwalk.words import GroupWord, word_from_str
from pivotwalk.spaces import TreeModel
from pivotwalk.schottky import SchottkySet, build_schottky
from pivotwalk.walks import (
    StepMeasure,
    simple_rw,
    dirac,
    mixture,
    reflect,
    heavy_tail,
    sample_increments,
    partial_products,
    sample_path,
    deviation,
    DeviationSample,
    discrepancy_bound_witness,
    schottky_step_rate,
    first_reduction_rate,
    first_reduction,
    second_reduction,
    fourfold_products,
    bernoulli_rate_bound,
    pick_epsilon,
    counting_measure_parts,
    counting_rest_measure,
    counting_reduction,
)

T = TreeModel()
a = GroupWord.from_letters([1])
b = GroupWord.from_letters([2])
SCH = build_schottky(T, a, b, size=2, m0=5)


def w(text):
    return word_from_str(text)


class TestStepMeasure:
    def test_validation(self):
        with pytest.raises(ValueError):
            StepMeasure((a, b), (1.0,))
        with pytest.raises(ValueError):
            StepMeasure((a, b), (0.6, 0.6))
        with pytest.raises(ValueError):
            StepMeasure((a, b), (1.5, -0.5))

    def test_simple_rw(self):
        mu = simple_rw()
        assert len(mu.support) == 4
        assert mu.mass(a) == 0.25
        assert mu.mass(a.inverse()) == 0.25
        assert mu.mass(w("a b")) == 0.0

    def test_dirac_and_mixture(self):
        mu = mixture([(dirac(a), 0.5), (simple_rw(), 0.5)])
        assert mu.mass(a) == pytest.approx(0.5 + 0.125)
        assert mu.mass(b) == pytest.approx(0.125)
        assert sum(mu.weights) == pytest.approx(1.0)

    def test_reflect(self):
        mu = mixture([(dirac(a), 0.75), (dirac(b), 0.25)])
        nu = reflect(mu)
        assert nu.mass(a.inverse()) == pytest.approx(0.75)
        assert nu.mass(b.inverse()) == pytest.approx(0.25)

    def test_heavy_tail_profile(self):
        mu = heavy_tail(eta=1.1, kmax=64)
        assert mu.moment_profile == "heavy_tail"
        assert sum(mu.weights) == pytest.approx(1.0)
        # power-law decay of the k-th power mass
        assert mu.mass(w("a^2")) / mu.mass(a) == pytest.approx(2 ** -2.1, rel=1e-9)
        with pytest.raises(ValueError):
            heavy_tail(eta=0.0)

    def test_json_roundtrip(self):
        mu = heavy_tail(eta=1.5, kmax=8)
        back = StepMeasure.from_json(mu.to_json())
        assert back == mu
        assert json.loads(mu.to_json())["moment_profile"] == "heavy_tail"


class TestSampling:
    def test_path_shape_and_consistency(self):
        rng = np.random.default_rng(0)
        path = sample_path(simple_rw(), 40, rng)
        assert len(path) == 41
        assert path[0].is_identity()
        for prev, cur in zip(path, path[1:]):
            step = prev.inverse() * cur
            assert simple_rw().mass(step) > 0

    def test_partial_products_hand(self):
        assert partial_products([a, b, a.inverse()]) == [
            GroupWord.identity(),
            a,
            w("a b"),
            w("a b A"),
        ]

    def test_increments_reproducible(self):
        mu = simple_rw()
        one = sample_increments(mu, 25, np.random.default_rng(7))
        two = sample_increments(mu, 25, np.random.default_rng(7))
        assert one == two


class TestDeviation:
    def test_straight_block_walk_has_minimal_deviation(self):
        blk0, blk1 = list(SCH[0].steps), list(SCH[1].steps)
        fwd = blk0 + blk1 + blk0
        chk = blk1 + blk0 + blk1
        d = deviation(T, SCH, chk, fwd, horizon=10)
        assert d == DeviationSample(d=SCH.m0, witness=SCH.m0, horizon=10, capped=False)
        dm = deviation(T, SCH, chk, fwd, horizon=10, mirrored=True)
        assert dm.d == SCH.m0 and not dm.capped

    def test_capped_when_no_block_spelled(self):
        rng = np.random.default_rng(1)
        incs = sample_increments(simple_rw(), 20, rng)
        d = deviation(T, SCH, incs, incs, horizon=10)
        assert d.capped and d.d == 11 and d.witness is None

    def test_horizon_validation(self):
        with pytest.raises(ValueError):
            deviation(T, SCH, [a] * 10, [a] * 10, horizon=SCH.m0 - 1)


class TestDiscrepancyWitness:
    def test_doubling_back_walk_has_zero_gap(self):
        # inverse-closed block fixture so both half-splits spell blocks
        sch = SchottkySet((SCH[0], SCH[0].inverse()), SCH.m0, SCH.constants)
        blk = list(sch[0].steps)
        inv = [s.inverse() for s in reversed(blk)]
        g = blk * 6 + inv * 6  # returns to the start: displacement 0, length 0
        aux = blk * 72
        wit = discrepancy_bound_witness(T, sch, g, aux[:72], horizon=6)
        assert wit.applicable
        assert wit.deviations == (5, 5, 5, 5)
        assert wit.lhs == 0
        assert wit.lhs <= wit.rhs

    def test_generic_walk_inapplicable_at_small_n(self):
        rng = np.random.default_rng(0)
        incs = sample_increments(simple_rw(), 60, rng)
        aux = sample_increments(simple_rw(), 2 * (6 + 30), rng)
        wit = discrepancy_bound_witness(T, SCH, incs, aux, horizon=6)
        assert not wit.applicable
        assert wit.lhs is None and wit.rhs is None

    def test_short_aux_rejected(self):
        with pytest.raises(ValueError):
            discrepancy_bound_witness(T, SCH, [a] * 20, [a] * 3, horizon=5)


class TestFirstReduction:
    def test_rates(self):
        assert schottky_step_rate(simple_rw(), SCH) == pytest.approx(0.25 ** 5)
        assert first_reduction_rate(simple_rw(), SCH) == pytest.approx(
            (2 * 0.25 ** 5) ** 4
        )

    def test_decomposition_shape(self):
        rng = np.random.default_rng(1)
        first = first_reduction(simple_rw(), SCH, 600, rng, p_override=0.5)
        assert first.m_target == int(0.5 * 600 / (8 * SCH.m0))
        assert len(first.quads) <= first.m_target
        assert len(first.w) == len(first.quads) + 1
        assert len(first.v) == len(first.quads)
        assert first.complete == (first.decorated_chunks >= first.m_target)

    def test_unsupported_blocks_rejected(self):
        with pytest.raises(ValueError):
            first_reduction(dirac(a), SCH, 100, np.random.default_rng(0))


class TestSecondReduction:
    def test_reassembly_identity(self):
        # the primed re-folding must reproduce the same group element
        for seed in range(5):
            rng = np.random.default_rng(seed)
            first = first_reduction(simple_rw(), SCH, 600, rng, p_override=0.5)
            second = second_reduction(T, SCH, first)
            assert second.total() == first.total(SCH)

    def test_target_and_selection(self):
        rng = np.random.default_rng(1)
        first = first_reduction(simple_rw(), SCH, 600, rng, p_override=0.5)
        second = second_reduction(T, SCH, first)
        m = len(first.quads)
        assert second.m_target == 2 * (m // 4)
        if second.complete and second.m_target:
            assert len(second.middles) == second.m_target
            assert list(second.selected) == sorted(set(second.selected))

    def test_empty_decomposition(self):
        rng = np.random.default_rng(0)
        first = first_reduction(simple_rw(), SCH, 50, rng, p_override=0.0)
        second = second_reduction(T, SCH, first)
        assert second.middles == () and second.total() == first.total(SCH)


class TestCounting:
    def setup_method(self):
        fwd, inv = counting_measure_parts(SCH)
        self.elements = fwd + inv
        uni = StepMeasure(
            tuple(self.elements), tuple(1.0 / len(self.elements) for _ in self.elements)
        )
        self.mu = mixture([(uni, 0.6), (simple_rw(), 0.4)])

    def test_fourfold_images(self):
        fwd, inv = counting_measure_parts(SCH)
        assert len(fwd) == len(inv) == len(SCH) ** 4
        assert not (set(fwd) & set(inv))

    def test_rest_measure_recomposes(self):
        rest = counting_rest_measure(self.mu, self.elements, 0.6)
        eset = set(self.elements)
        u = 0.6 / len(self.elements)
        for s in self.mu.support:
            back = (u if s in eset else 0.0) + 0.4 * rest.mass(s)
            assert back == pytest.approx(self.mu.mass(s), abs=1e-12)

    def test_rest_measure_needs_domination(self):
        with pytest.raises(ValueError):
            counting_rest_measure(simple_rw(), self.elements, 0.6)

    def test_chernoff_helpers(self):
        rate = bernoulli_rate_bound(0.6, 0.1)
        assert 0 < rate < 1
        assert rate == pytest.approx((0.6 / 0.2) ** 0.2 * (0.4 / 0.8) ** 0.8)
        with pytest.raises(ValueError):
            bernoulli_rate_bound(0.6, 0.4)  # 2*eps >= p
        eps = pick_epsilon(0.6, 0.5)
        assert 0 < 2 * eps < 0.6
        assert bernoulli_rate_bound(0.6, eps) <= 0.5

    def test_counting_reduction_structure(self):
        rng = np.random.default_rng(2)
        out = counting_reduction(self.mu, SCH, 200, rng, p=0.6, q=0.5)
        assert out.m_target == 2 * int(out.eps * 200)
        assert out.complete and len(out.middles) == out.m_target
        assert set(out.branches) <= {"fwd", "inv"}
        assert len(out.w) == len(out.middles) + 1
        # decorated product makes linear progress in the group
        assert out.total().translation_length() >= 5 * SCH.constants.e0 * out.eps * 200

    def test_counting_reduction_validation(self):
        with pytest.raises(ValueError):
            counting_reduction(self.mu, SCH, 50, np.random.default_rng(0), p=0.4, q=0.5)
