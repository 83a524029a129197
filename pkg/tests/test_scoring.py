"""Feature generation, suppression, Spearman, and the quality score."""

import numpy as np
import numpy.testing as npt
import pytest

from msunique.colorspace import to_ygcr
from msunique.decoder import DecoderModel, TrainingConfig
from msunique.filterbank import FilterBank, FilterKind, FilterLabel
from msunique.imageio import RgbImage
from msunique.patches import WhiteningTransform
from msunique.scoring import (
    FeatureVector,
    image_features,
    quality_score,
    spearman,
    suppress,
)

from _synth import blurred, natural_image


def hand_bank(labels, w1_columns, tau=0.0):
    """A patch_side-1 bank with identity whitening and prescribed labels."""
    w1 = np.column_stack(w1_columns)
    d, h = w1.shape
    assert d == 3
    model = DecoderModel(w1, np.zeros(h), np.zeros((h, d)), np.zeros(d))
    return FilterBank(
        patch_side=1,
        whitening=WhiteningTransform(np.zeros(3), np.eye(3), 0.0),
        models=(model,),
        labels=(tuple(labels),),
        config=TrainingConfig(),
        suppression_tau=tau,
    )


def flat_image(r, g, b, h=2, w=2):
    return RgbImage(np.full((h, w), r), np.full((h, w), g), np.full((h, w), b))


class TestImageFeatures:
    def test_neutral_pass_through(self):
        # zero filters respond 0.5 everywhere; neutral weight leaves that raw
        bank = hand_bank(
            [FilterLabel(FilterKind.NEUTRAL, 3.0)], [np.zeros(3)], tau=0.025
        )
        fv = image_features(bank, to_ygcr(flat_image(0.2, 0.4, 0.6)))
        npt.assert_array_equal(fv.values, np.full(4, 0.5))
        assert fv.suppressed

    def test_edge_is_four_times_color_twin(self):
        col = np.array([0.3, -0.2, 0.1])
        bank = hand_bank(
            [FilterLabel(FilterKind.EDGE, 6.0), FilterLabel(FilterKind.COLOR, 1.0)],
            [col, col],
        )
        fv = image_features(bank, to_ygcr(flat_image(0.5, 0.5, 0.5)))
        grid = fv.values.reshape(fv.patch_count, 2)
        npt.assert_allclose(grid[:, 0], 4.0 * grid[:, 1])

    def test_deterministic(self, tiny_bank):
        img = to_ygcr(natural_image(np.random.default_rng(0), 24, 24))
        a = image_features(tiny_bank, img)
        b = image_features(tiny_bank, img)
        npt.assert_array_equal(a.values, b.values)

    def test_layout_patch_major(self, tiny_bank):
        img = to_ygcr(natural_image(np.random.default_rng(1), 24, 24))
        fv = image_features(tiny_bank, img)
        total = sum(m.hidden for m in tiny_bank.models)
        assert fv.values.size == fv.patch_count * total
        assert fv.patch_count == (24 // 4) ** 2
        assert fv.filter_weights.size == total

    def test_pre_suppression_range(self):
        # weighted sigmoid responses live in [0, 2] before suppression
        rng = np.random.default_rng(2)
        bank = hand_bank(
            [FilterLabel(FilterKind.EDGE, 6.0), FilterLabel(FilterKind.COLOR, 1.0)],
            [rng.standard_normal(3), rng.standard_normal(3)],
            tau=0.0,
        )
        fv = image_features(bank, to_ygcr(natural_image(rng, 6, 6)))
        assert fv.values.min() >= 0.0
        assert fv.values.max() <= 2.0

    def test_image_too_small(self, tiny_bank):
        img = to_ygcr(flat_image(0.5, 0.5, 0.5, h=3, w=3))
        with pytest.raises(ValueError, match="image too small"):
            image_features(tiny_bank, img)


class TestSuppress:
    def grid_vector(self):
        weights = np.array([2.0, 1.0, 0.5])
        raw = np.array([0.01, 0.5, 0.02])
        return FeatureVector(raw * weights, weights, 1, False)

    def test_below_threshold_zeroed(self):
        out = suppress(self.grid_vector(), 0.025)
        npt.assert_array_equal(out.values, [0.0, 0.5, 0.0])
        assert out.suppressed

    def test_above_threshold_unchanged(self):
        out = suppress(self.grid_vector(), 0.025)
        assert out.values[1] == 0.5

    def test_tau_zero_is_identity(self):
        fv = self.grid_vector()
        out = suppress(fv, 0.0)
        npt.assert_array_equal(out.values, fv.values)

    def test_idempotent(self):
        once = suppress(self.grid_vector(), 0.025)
        twice = suppress(once, 0.025)
        npt.assert_array_equal(once.values, twice.values)

    def test_compares_unweighted_response(self):
        # raw 0.03 > tau even after the 0.5 color weight shrinks the entry
        weights = np.array([0.5])
        fv = FeatureVector(np.array([0.015]), weights, 1, False)
        out = suppress(fv, 0.025)
        assert out.values[0] == 0.015

    def test_negative_tau_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            suppress(self.grid_vector(), -0.1)

    def test_length_validation(self):
        with pytest.raises(ValueError, match="patch_count"):
            FeatureVector(np.zeros(5), np.ones(2), 2, False)


def rank_with_ties(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def pearson_loops(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    dx = sum((a - mx) ** 2 for a in x)
    dy = sum((b - my) ** 2 for b in y)
    return num / (dx * dy) ** 0.5


class TestSpearman:
    def test_identity(self):
        assert spearman([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0, 4.0]) == 1.0

    def test_reversal(self):
        x = [0.1, 0.7, 0.3, 0.9]
        assert spearman(x, [-v for v in x]) == -1.0

    def test_monotone_invariance(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0.0, 1.0, 30)
        y = rng.uniform(0.0, 1.0, 30)
        base = spearman(x, y)
        assert spearman(np.exp(x), 2.0 * y + 1.0) == pytest.approx(base, abs=1e-15)

    def test_ties_match_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(5, 40))
            x = rng.integers(0, 6, size=n).astype(float)
            y = rng.integers(0, 6, size=n).astype(float)
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            want = pearson_loops(rank_with_ties(list(x)), rank_with_ties(list(y)))
            got = spearman(x, y)
            assert abs(got - want) / max(1.0, abs(got), abs(want)) < 1e-12

    def test_constant_vector_errors(self):
        with pytest.raises(ValueError, match="zero rank variance"):
            spearman([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="equal length"):
            spearman([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_needs_two(self):
        with pytest.raises(ValueError, match="two samples"):
            spearman([1.0], [2.0])


class TestQualityScore:
    def test_self_score_is_one(self, tiny_bank):
        img = natural_image(np.random.default_rng(5), 28, 28)
        rec = quality_score(tiny_bank, img, img)
        assert abs(rec.score - 1.0) < 1e-12
        assert rec.spearman_rho == 1.0

    def test_symmetry(self, tiny_bank):
        rng = np.random.default_rng(6)
        a = natural_image(rng, 28, 28)
        b = blurred(a, 1.5)
        assert quality_score(tiny_bank, a, b).score == pytest.approx(
            quality_score(tiny_bank, b, a).score, abs=1e-12
        )

    def test_score_is_rho_to_the_tenth(self, tiny_bank):
        rng = np.random.default_rng(7)
        a = natural_image(rng, 28, 28)
        rec = quality_score(tiny_bank, a, blurred(a, 2.0))
        assert rec.score == rec.spearman_rho**10

    def test_score_in_unit_interval(self, tiny_bank):
        rng = np.random.default_rng(8)
        for _ in range(3):
            a = natural_image(rng, 24, 24)
            b = natural_image(rng, 24, 24)  # unrelated pair
            rec = quality_score(tiny_bank, a, b)
            assert 0.0 <= rec.score <= 1.0

    def test_blur_lowers_score(self, tiny_bank):
        rng = np.random.default_rng(9)
        a = natural_image(rng, 32, 32)
        rec = quality_score(tiny_bank, a, blurred(a, 2.0))
        assert rec.score < 1.0

    def test_dimension_mismatch(self, tiny_bank):
        rng = np.random.default_rng(10)
        with pytest.raises(ValueError, match="dimension mismatch"):
            quality_score(
                tiny_bank, natural_image(rng, 24, 24), natural_image(rng, 24, 28)
            )

    def test_identifiers_recorded(self, tiny_bank):
        img = natural_image(np.random.default_rng(11), 24, 24)
        rec = quality_score(tiny_bank, img, img, "ref.ppm", "dist.ppm")
        assert rec.reference_id == "ref.ppm"
        assert rec.distorted_id == "dist.ppm"
