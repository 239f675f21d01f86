import itertools
import math

import pytest

from fedchip import (
    CandidateSet,
    Corpus,
    DesignRecord,
    PpaMetrics,
    SigmaThresholds,
    ValidationError,
    accepts,
    chip_at_k,
    chip_at_k_single,
    deviations,
    sigma_thresholds,
)


def chip_oracle(n: int, c: int, k: int) -> float:
    """Exhaustive reference: fraction of size-k subsets hitting >= 1 accepted.

    By symmetry the accepted candidates can be taken as indices 0..c-1.
    """
    subsets = list(itertools.combinations(range(n), k))
    hits = sum(1 for subset in subsets if any(i < c for i in subset))
    return hits / len(subsets)


def corpus_with_areas(areas, power=None, slack=None):
    n = len(areas)
    power = power or [float(i + 1) for i in range(n)]
    slack = slack or [float(i) - 1.0 for i in range(n)]
    return Corpus(tuple(
        DesignRecord(
            id=f"r{i}",
            instruction="x",
            metrics=PpaMetrics(area=a, total_power=p, slack=s),
        )
        for i, (a, p, s) in enumerate(zip(areas, power, slack))
    ))


THRESH = SigmaThresholds(sigma_area=1.0, sigma_power=1.0, sigma_slack=1.0)


class TestSigmaThresholds:
    def test_hand_computed_sigma(self):
        corpus = corpus_with_areas([1.0, 2.0, 3.0])
        thr = sigma_thresholds(corpus)
        assert thr.sigma_area == pytest.approx(math.sqrt(2.0 / 3.0), abs=1e-15)

    def test_homogeneity_under_scaling(self):
        base = corpus_with_areas([1.0, 2.0, 3.0])
        doubled = corpus_with_areas([2.0, 4.0, 6.0])
        assert sigma_thresholds(doubled).sigma_area == pytest.approx(
            2.0 * sigma_thresholds(base).sigma_area, rel=1e-12
        )

    def test_single_record_rejected(self):
        with pytest.raises(ValidationError):
            sigma_thresholds(corpus_with_areas([1.0]))

    def test_constant_column_rejected(self):
        with pytest.raises(ValidationError, match="constant metric column"):
            sigma_thresholds(corpus_with_areas([5.0, 5.0, 5.0]))


class TestDeviations:
    def test_identity(self):
        m = PpaMetrics(100.0, 1.0, 0.5)
        assert deviations(m, m) == (0.0, 0.0, 0.0)

    def test_signs_preserved(self):
        gt = PpaMetrics(100.0, 1.0, 1.0)
        gen = PpaMetrics(90.0, 1.5, 0.5)
        assert deviations(gen, gt) == (-10.0, 0.5, -0.5)


class TestAccepts:
    def test_zero_deltas_accepted(self):
        assert accepts((0.0, 0.0, 0.0), THRESH)

    def test_boundary_is_rejected(self):
        # strict inequality: a deviation exactly at sigma fails
        assert not accepts((1.0, 0.0, 0.0), THRESH)
        assert not accepts((0.0, 1.0, 0.0), THRESH)
        assert not accepts((0.0, 0.0, 1.0), THRESH)
        assert accepts((math.nextafter(1.0, 0.0), 0.0, 0.0), THRESH)

    def test_large_negative_deltas_accepted_in_literal_mode(self):
        assert accepts((-1e3, -1e3, -1e3), THRESH, slack_mode="literal")

    def test_direction_aware_penalizes_slack_loss(self):
        assert accepts((-1e3, -1e3, -1e3), THRESH, slack_mode="literal")
        assert not accepts((0.0, 0.0, -1.5), THRESH, slack_mode="direction_aware")
        # and slack gains are fine in direction-aware mode
        assert accepts((0.0, 0.0, 5.0), THRESH, slack_mode="direction_aware")

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValidationError):
            accepts((0.0, 0.0, 0.0), THRESH, slack_mode="strict")

    def test_joint_acceptance_requires_all_three(self):
        assert not accepts((2.0, 0.0, 0.0), THRESH)
        assert not accepts((0.0, 2.0, 0.0), THRESH)
        assert not accepts((0.0, 0.0, 2.0), THRESH)


class TestChipAtKSingle:
    def test_k1_reduces_to_ratio_exactly(self):
        assert chip_at_k_single(10, 3, 1) == 0.3
        for n in range(1, 30):
            for c in range(n + 1):
                assert chip_at_k_single(n, c, 1) == c / n

    def test_hand_example_vs_enumeration(self):
        assert chip_at_k_single(5, 2, 2) == pytest.approx(0.7, abs=1e-12)
        assert chip_at_k_single(5, 2, 2) == pytest.approx(chip_oracle(5, 2, 2), abs=1e-12)

    def test_extremes(self):
        assert chip_at_k_single(7, 0, 3) == 0.0
        assert chip_at_k_single(7, 7, 1) == 1.0
        assert chip_at_k_single(7, 5, 3) == 1.0  # n - c < k forces a hit

    def test_oracle_equivalence_small_n(self):
        for n in range(1, 10):
            for c in range(n + 1):
                for k in range(1, n + 1):
                    assert chip_at_k_single(n, c, k) == pytest.approx(
                        chip_oracle(n, c, k), abs=1e-12
                    )

    def test_monotone_in_k_and_c(self):
        for n in (5, 9, 12):
            for c in range(n + 1):
                vals = [chip_at_k_single(n, c, k) for k in range(1, n + 1)]
                assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))
            for k in (1, 2, n):
                vals = [chip_at_k_single(n, c, k) for c in range(n + 1)]
                assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_domain_errors(self):
        with pytest.raises(ValidationError):
            chip_at_k_single(5, 2, 0)
        with pytest.raises(ValidationError):
            chip_at_k_single(5, 2, 6)
        with pytest.raises(ValidationError):
            chip_at_k_single(5, 6, 1)


def cand_set(desc_id, gt, candidates):
    return CandidateSet(description_id=desc_id, gt=gt, candidates=tuple(candidates))


class TestChipAtK:
    GT = PpaMetrics(100.0, 1.0, 0.5)

    def test_all_candidates_equal_gt(self):
        sets = [cand_set("d0", self.GT, [self.GT] * 5)]
        for k in range(1, 6):
            assert chip_at_k(sets, THRESH, k).chip_at_k[k] == 1.0

    def test_all_rejected(self):
        bad = PpaMetrics(1e6, 1e6, 1e6)
        sets = [cand_set("d0", self.GT, [bad] * 5), cand_set("d1", self.GT, [bad] * 5)]
        assert chip_at_k(sets, THRESH, 2).chip_at_k[2] == 0.0

    def test_composed_example(self):
        good, bad = self.GT, PpaMetrics(1e6, 1e6, 1e6)
        sets = [
            cand_set("d0", self.GT, [good, good, bad, bad, bad]),  # c = 2
            cand_set("d1", self.GT, [bad] * 5),                    # c = 0
        ]
        report = chip_at_k(sets, THRESH, 2)
        assert report.chip_at_k[2] == pytest.approx(0.35, abs=1e-12)
        assert report.per_description == (("d0", 5, 2), ("d1", 5, 0))

    def test_n_below_k_names_description(self):
        sets = [cand_set("tiny", self.GT, [self.GT] * 2)]
        with pytest.raises(ValidationError, match="tiny"):
            chip_at_k(sets, THRESH, 3)

    def test_multiple_ks_one_pass(self):
        good, bad = self.GT, PpaMetrics(1e6, 1e6, 1e6)
        sets = [cand_set("d0", self.GT, [good, bad, bad, bad])]
        report = chip_at_k(sets, THRESH, [1, 2, 4])
        assert report.chip_at_k[1] == 0.25
        assert report.chip_at_k[4] == 1.0

    def test_deterministic(self):
        good, bad = self.GT, PpaMetrics(1e6, 1e6, 1e6)
        sets = [cand_set("d0", self.GT, [good, bad, good])]
        a = chip_at_k(sets, THRESH, 2)
        b = chip_at_k(sets, THRESH, 2)
        assert a == b

    def test_report_exports(self, tmp_path):
        sets = [cand_set("d0", self.GT, [self.GT] * 3)]
        report = chip_at_k(sets, THRESH, [1, 3])
        assert report.to_json() == '{"1": 1.0, "3": 1.0}'
        path = tmp_path / "per_desc.csv"
        report.write_csv(path)
        assert path.read_text().splitlines() == ["description_id,n,c", "d0,3,3"]
