"""Model spaces: the 4-regular tree and the hyperbolic upper half-plane."""

import math

import numpy as np
import pytest

from pivotwalk.spaces import MatrixIsometry, PlaneModel, TreeModel, model_by_name
from pivotwalk.words import GroupWord, word_from_str

W = word_from_str


class TestTree:
    def setup_method(self):
        self.T = TreeModel()

    def test_ball_sizes(self):
        # 4 * 3^(r-1) new points per shell: 1, 5, 17, 53, 161
        for r, expect in [(0, 1), (1, 5), (2, 17), (3, 53), (4, 161)]:
            assert sum(1 for _ in self.T.ball(r)) == expect

    def test_ball_recentred(self):
        c = W("ab")
        pts = list(self.T.ball(1, center=c))
        assert len(pts) == 5
        assert all(self.T.distance(c, p) <= 1 for p in pts)

    def test_geodesic_endpoints_and_length(self):
        p, q = W("aab"), W("bA")
        geo = self.T.geodesic(p, q)
        assert geo[0] == p and geo[-1] == q
        assert len(geo) == self.T.distance(p, q) + 1
        for i in range(len(geo) - 1):
            assert self.T.distance(geo[i], geo[i + 1]) == 1

    def test_translation_length_matches_word(self):
        assert self.T.translation_length(W("abA")) == 1
        assert self.T.is_contracting_isometry(W("ab"))
        assert not self.T.is_contracting_isometry(GroupWord.identity())

    def test_apply_is_isometric(self):
        g = W("abB" "a")
        p, q = W("ba"), W("Ab")
        assert self.T.distance(self.T.apply(g, p), self.T.apply(g, q)) == self.T.distance(p, q)


class TestPlane:
    def setup_method(self):
        self.P = PlaneModel()

    def test_distance_hand_value(self):
        # d(i, 2i) = log 2 on the imaginary axis
        assert self.P.distance(1j, 2j) == pytest.approx(math.log(2), abs=1e-9)
        assert self.P.distance(1j, 1j) == 0.0

    def test_mobius_isometry_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            g = self.P.random_isometry(rng)
            p = self.P.random_point(rng)
            q = self.P.random_point(rng)
            assert self.P.distance(self.P.apply(g, p), self.P.apply(g, q)) == pytest.approx(
                self.P.distance(p, q), abs=1e-8
            )

    def test_translation_length_vs_orbit_growth(self):
        g = self.P.gen_a * self.P.gen_b  # [[5, 2], [2, 1]]: trace 6, hyperbolic
        tau = self.P.translation_length(g)
        assert tau == pytest.approx(2 * math.acosh(3.0), abs=1e-9)
        # orbit displacement growth per application converges to tau
        d8 = self.P.distance(self.P.basepoint, self.P.apply(g ** 8, self.P.basepoint))
        d7 = self.P.distance(self.P.basepoint, self.P.apply(g ** 7, self.P.basepoint))
        assert d8 - d7 == pytest.approx(tau, abs=1e-3)

    def test_parabolic_has_zero_translation_length(self):
        assert self.P.translation_length(self.P.gen_a) == 0.0
        assert not self.P.is_contracting_isometry(self.P.gen_a)

    def test_geodesic_arc_spacing(self):
        p, q = 1j, 2.0 + 1j
        geo = self.P.geodesic(p, q)
        assert geo[0] == pytest.approx(p) and geo[-1] == pytest.approx(q)
        total = self.P.distance(p, q)
        segs = [self.P.distance(geo[i], geo[i + 1]) for i in range(len(geo) - 1)]
        assert sum(segs) == pytest.approx(total, abs=1e-6)
        assert max(segs) <= self.P.geodesic_step + 1e-6

    def test_matrix_for_word_is_homomorphism(self):
        u, v = W("ab"), W("Ba")
        left = self.P.matrix_for_word(u * v)
        right = self.P.matrix_for_word(u) * self.P.matrix_for_word(v)
        assert left == right


def test_matrix_isometry_algebra():
    m = MatrixIsometry(1.0, 2.0, 0.0, 1.0)
    assert (m * m.inverse()).is_identity()
    assert (m ** 3).apply(1j) == pytest.approx(m.apply(m.apply(m.apply(1j))))


def test_model_by_name():
    assert model_by_name("tree2").kind == "tree"
    assert model_by_name("plane").kind == "plane"
    with pytest.raises(ValueError):
        model_by_name("cube")
