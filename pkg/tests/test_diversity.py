import itertools
import math

import numpy as np
import pytest

from swarmchem.diversity import (
    DiversityReport,
    bootstrap_diversity,
    diversity_coverage,
    diversity_entropy,
    diversity_mean_pairwise,
    feature_bounds,
)
from swarmchem.rng import make_rng


def oracle_coverage(matrix, resolution):
    """Direct enumeration oracle: normalize, quantize, count occupied cells."""
    m = np.asarray(matrix, dtype=np.float64)
    lo, hi = m.min(axis=0), m.max(axis=0)
    keep = (hi - lo) > 1e-12
    m = m[:, keep]
    lo, hi = lo[keep], hi[keep]
    occupied = set()
    for row in m:
        cell = tuple(
            min(int((v - a) / (b - a) * resolution), resolution - 1)
            for v, a, b in zip(row, lo, hi)
        )
        occupied.add(cell)
    total = resolution ** m.shape[1]
    return len(occupied) / total


def oracle_mean_pairwise(matrix):
    m = np.asarray(matrix, dtype=np.float64)
    lo, hi = m.min(axis=0), m.max(axis=0)
    keep = (hi - lo) > 1e-12
    x = (m[:, keep] - lo[keep]) / (hi[keep] - lo[keep])
    total, count = 0.0, 0
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            total += math.sqrt(sum((x[i, k] - x[j, k]) ** 2 for k in range(x.shape[1])))
            count += 1
    return total / count


def oracle_entropy(matrix, lam=1e-6):
    m = np.asarray(matrix, dtype=np.float64)
    lo, hi = m.min(axis=0), m.max(axis=0)
    keep = (hi - lo) > 1e-12
    x = (m[:, keep] - lo[keep]) / (hi[keep] - lo[keep])
    d = x.shape[1]
    sigma = np.atleast_2d(np.cov(x, rowvar=False, ddof=1)) + lam * np.eye(d)
    return 0.5 * math.log(((2 * math.pi * math.e) ** d) * np.linalg.det(sigma))


class TestCoverage:
    def test_identical_vectors_minimal(self):
        m = np.tile([0.3, 0.7, 0.1], (10, 1))
        cov = diversity_coverage(m, resolution=10)
        assert cov == pytest.approx(10.0**-3)

    def test_opposite_corners_exceed_identical(self):
        identical = diversity_coverage(np.tile([0.5, 0.5], (4, 1)), resolution=10)
        corners = diversity_coverage(
            np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0]]), resolution=10
        )
        assert corners > identical

    def test_uniform_2d_matches_enumeration_oracle(self):
        rng = np.random.default_rng(11)
        m = rng.uniform(0, 1, size=(100, 2))
        got = diversity_coverage(m, resolution=10)
        want = oracle_coverage(m, 10)
        assert got == want
        assert abs(got - want) <= 0.1

    @pytest.mark.parametrize("dims", [1, 2, 3])
    def test_oracle_exact_low_dim(self, dims):
        rng = np.random.default_rng(100 + dims)
        for trial in range(20):
            m = rng.normal(0, 1, size=(int(rng.integers(2, 100)), dims))
            assert diversity_coverage(m, resolution=7) == oracle_coverage(m, 7)

    def test_high_dim_returns_count(self):
        rng = np.random.default_rng(5)
        m = rng.uniform(0, 1, size=(50, 24))
        got = diversity_coverage(m, resolution=10)
        assert got == 50.0  # 50 distinct cells, grid too large to enumerate

    def test_needs_two_vectors(self):
        with pytest.raises(ValueError):
            diversity_coverage(np.zeros((1, 3)))

    def test_invariant_under_permutation_and_relabeling(self):
        rng = np.random.default_rng(7)
        m = rng.uniform(0, 1, size=(60, 3))
        base = diversity_coverage(m, resolution=6)
        shuffled_rows = m[rng.permutation(60)]
        relabeled_cols = m[:, [2, 0, 1]]
        assert diversity_coverage(shuffled_rows, resolution=6) == base
        assert diversity_coverage(relabeled_cols, resolution=6) == base


class TestMeanPairwise:
    def test_identical_zero(self):
        assert diversity_mean_pairwise(np.tile([1.0, 2.0], (5, 1))) == 0.0

    def test_two_vectors_normalized_distance(self):
        m = np.array([[0.0, 0.0], [3.0, 4.0]])
        # normalization maps the two points to the unit square corners
        assert diversity_mean_pairwise(m) == pytest.approx(math.sqrt(2.0))

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(17)
        m = rng.normal(0, 2, size=(50, 3))
        assert diversity_mean_pairwise(m) == pytest.approx(
            oracle_mean_pairwise(m), abs=1e-12
        )

    def test_permutation_invariant(self):
        rng = np.random.default_rng(19)
        m = rng.normal(0, 1, size=(30, 4))
        shuffled = m[rng.permutation(30)]
        assert diversity_mean_pairwise(m) == pytest.approx(
            diversity_mean_pairwise(shuffled), abs=1e-12
        )


class TestEntropy:
    def test_unit_gaussian_closed_form(self):
        rng = np.random.default_rng(23)
        samples = rng.normal(0, 1.0, size=(10_000, 1))
        got = diversity_entropy(samples, normalized=False)
        want = 0.5 * math.log(2 * math.pi * math.e)
        assert got == pytest.approx(want, abs=0.1)

    def test_spread_scaling_increases_entropy(self):
        rng = np.random.default_rng(29)
        m = rng.normal(0, 1, size=(200, 3))
        wide = m.copy()
        wide[:, 1] *= 4.0
        assert diversity_entropy(wide, normalized=False) > diversity_entropy(
            m, normalized=False
        )

    def test_near_degenerate_finite(self):
        m = np.tile([0.5, 0.5], (50, 1)) + 1e-12 * np.random.default_rng(1).normal(
            size=(50, 2)
        )
        v = diversity_entropy(m, normalized=False)
        assert np.isfinite(v)

    def test_normalization_identity_when_bounds_unit(self):
        rng = np.random.default_rng(31)
        m = rng.uniform(0, 1, size=(100, 2))
        m[0] = [0.0, 0.0]
        m[1] = [1.0, 1.0]  # spans exactly [0, 1] per dim
        assert diversity_entropy(m) == pytest.approx(
            diversity_entropy(m, normalized=False), abs=1e-12
        )

    def test_matches_det_oracle(self):
        rng = np.random.default_rng(37)
        m = rng.normal(0, 1, size=(80, 3))
        assert diversity_entropy(m) == pytest.approx(oracle_entropy(m), abs=1e-9)

    def test_sample_count_precondition(self):
        with pytest.raises(ValueError):
            diversity_entropy(np.random.default_rng(0).normal(size=(3, 2)))

    def test_permutation_invariant(self):
        rng = np.random.default_rng(41)
        m = rng.normal(0, 1, size=(40, 4))
        shuffled = m[rng.permutation(40)]
        assert diversity_entropy(m) == pytest.approx(diversity_entropy(shuffled), abs=1e-12)


class TestBootstrap:
    def test_paper_protocol_defaults(self):
        import inspect

        sig = inspect.signature(bootstrap_diversity)
        assert sig.parameters["replicates"].default == 100
        assert sig.parameters["subsample"].default == 250

    def test_single_full_replicate_equals_direct(self):
        rng = np.random.default_rng(43)
        m = rng.normal(0, 1, size=(40, 3))
        reports = bootstrap_diversity(m, make_rng(1), replicates=1, subsample=40)
        assert len(reports) == 1
        r = reports[0]
        assert r.coverage == diversity_coverage(m)
        assert r.mean_pairwise == pytest.approx(diversity_mean_pairwise(m), abs=1e-12)
        assert r.entropy == pytest.approx(diversity_entropy(m), abs=1e-12)
        assert r.n_samples == 40

    def test_seeded_reproducibility(self):
        rng = np.random.default_rng(47)
        m = rng.normal(0, 1, size=(60, 4))
        a = bootstrap_diversity(m, make_rng(7), replicates=20, subsample=30)
        b = bootstrap_diversity(m, make_rng(7), replicates=20, subsample=30)
        assert a == b

    def test_subsample_bound(self):
        with pytest.raises(ValueError):
            bootstrap_diversity(np.zeros((10, 2)), make_rng(0), replicates=1, subsample=11)

    def test_shared_bounds_respected(self):
        rng = np.random.default_rng(53)
        m = rng.uniform(0, 1, size=(30, 2))
        pooled = np.vstack([m, m * 10])
        bounds = feature_bounds(pooled)
        narrow = bootstrap_diversity(m, make_rng(1), replicates=5, subsample=20, bounds=bounds)
        own = bootstrap_diversity(m, make_rng(1), replicates=5, subsample=20)
        # under pooled bounds the narrow ensemble is measurably less diverse
        assert np.mean([r.mean_pairwise for r in narrow]) < np.mean(
            [r.mean_pairwise for r in own]
        )
