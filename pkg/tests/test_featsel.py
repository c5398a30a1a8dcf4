import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from amlboost.errors import SelectionError
from amlboost.featsel import (
    Chi2Result, chi2_select, chi2_sf, chi2_statistic, l1_select, literature_genes,
)


def chi2_oracle(table):
    """Direct sum (O-E)^2 / E with marginal-product expecteds."""
    (a, b), (c, d) = table
    n = a + b + c + d
    rows = (a + b, c + d)
    cols = (a + c, b + d)
    if n == 0 or 0 in rows or 0 in cols:
        return 0.0
    total = 0.0
    for i, row in enumerate(rows):
        for j, col in enumerate(cols):
            expected = row * col / n
            observed = table[i][j]
            total += (observed - expected) ** 2 / expected
    return total


def chi2_sf_quadrature(x, dof=1):
    """Numerical integration of the chi-squared density on [x, inf)."""
    def density(t):
        k = dof / 2.0
        return t ** (k - 1) * math.exp(-t / 2.0) / (2 ** k * math.gamma(k))

    value, _ = integrate.quad(density, x, np.inf, limit=200)
    return value


class TestChi2Statistic:
    def test_balanced_table_is_zero(self):
        assert chi2_statistic([[10, 10], [10, 10]]) == 0.0

    def test_spec_example_18(self):
        # oracle value: integrating the chi-squared density over [18, inf)
        # gives 2.2090e-5 (= erfc(3)); frozen from the quadrature oracle
        stat = chi2_statistic([[20, 5], [5, 20]])
        assert stat == pytest.approx(18.0, abs=1e-12)
        assert chi2_sf(stat, 1) == pytest.approx(chi2_sf_quadrature(18.0, 1), abs=1e-10)
        assert chi2_sf(stat, 1) == pytest.approx(2.2090497e-5, abs=1e-7)

    def test_zero_margin_convention(self):
        assert chi2_statistic([[0, 0], [7, 3]]) == 0.0
        assert chi2_statistic([[4, 0], [6, 0]]) == 0.0

    def test_random_tables_match_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(500):
            t = rng.integers(0, 30, size=(2, 2))
            assert chi2_statistic(t) == pytest.approx(chi2_oracle(t.tolist()), abs=1e-9)

    @given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30), st.integers(0, 30))
    @settings(max_examples=300, deadline=None)
    def test_code_swap_invariance(self, a, b, c, d):
        base = chi2_statistic([[a, b], [c, d]])
        assert chi2_statistic([[b, a], [d, c]]) == pytest.approx(base, abs=1e-9)
        assert chi2_statistic([[c, d], [a, b]]) == pytest.approx(base, abs=1e-9)


class TestChi2Sf:
    def test_at_zero(self):
        assert chi2_sf(0.0, 1) == 1.0
        assert chi2_sf(0.0, 5) == 1.0

    def test_classic_quantile(self):
        assert chi2_sf(3.841, 1) == pytest.approx(0.05, abs=1e-3)

    def test_against_quadrature(self):
        for dof in (1, 2, 4):
            for x in (0.01, 0.5, 1.0, 3.841, 10.0, 30.0, 60.0, 100.0):
                assert chi2_sf(x, dof) == pytest.approx(
                    chi2_sf_quadrature(x, dof), abs=1e-10
                )

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            chi2_sf(-1.0, 1)
        with pytest.raises(ValueError):
            chi2_sf(1.0, 0)

    def test_monotone_in_statistic(self):
        xs = np.linspace(0, 40, 200)
        ps = [chi2_sf(x, 1) for x in xs]
        assert all(p0 >= p1 for p0, p1 in zip(ps, ps[1:]))


class TestChi2Select:
    def test_select_flags_threshold(self):
        rng = np.random.default_rng(3)
        n = 200
        y = rng.integers(0, 2, n)
        strong = (y ^ (rng.random(n) < 0.08)).astype(int)  # strongly associated
        noise = rng.integers(0, 2, n)
        results = chi2_select(np.column_stack([strong, noise]), y,
                              feature_names=["strong", "noise"])
        by_name = {r.feature: r for r in results}
        assert by_name["strong"].selected
        assert by_name["strong"].p_value < 1e-6
        assert isinstance(by_name["noise"], Chi2Result)

    def test_constant_feature_never_selected(self):
        y = np.array([0, 1] * 10)
        results = chi2_select(np.zeros((20, 1)), y, feature_names=["flat"])
        assert results[0].statistic == 0.0
        assert results[0].p_value == 1.0
        assert not results[0].selected

    def test_test_row_leakage_rejected(self):
        y = np.array([0, 1] * 10)
        x = np.zeros((20, 1))
        with pytest.raises(SelectionError):
            chi2_select(x, y, rows=np.arange(15), test_rows=np.arange(10, 20))

    def test_non_binary_rejected(self):
        y = np.array([0, 1] * 5)
        with pytest.raises(SelectionError):
            chi2_select(np.full((10, 1), 2.0), y)


class TestLiteratureGenes:
    def test_fixed_list(self):
        genes = literature_genes()
        assert genes == ("FLT3", "NPM1", "DNMT3A", "IDH1", "IDH2", "TET2", "ASXL1",
                         "RUNX1", "CEBPA", "NRAS", "KRAS", "SF3B1", "U2AF1", "SRSF2")
        assert len(genes) == 14

    def test_union_with_chi2_picks_is_16(self):
        union = set(literature_genes()) | {"PHF6", "TP53"}
        assert len(union) == 16  # final MUT table: 16 genes + 2 meta columns

    def test_pure(self):
        assert literature_genes() is literature_genes() or literature_genes() == literature_genes()


class TestL1Select:
    def test_full_shrinkage_limit(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(60, 8))
        y = (x[:, 0] > 0).astype(int)
        path = l1_select(x, y, target_count=3, n_strengths=30)
        assert path.nonzero_counts[0] == 0  # strongest penalty kills everything

    def test_two_feature_soft_threshold_oracle(self):
        """Only feature A correlates; B must stay zero until far down the path,
        and A's coefficient obeys the closed-form soft-threshold solution while
        every hinge stays active."""
        rng = np.random.default_rng(6)
        n = 80
        xa = rng.normal(size=n)
        y01 = (xa + 0.3 * rng.normal(size=n) > 0).astype(int)
        xb = rng.normal(size=n)
        x = np.column_stack([xa, xb])
        path = l1_select(x, y01, target_count=1, feature_names=["A", "B"],
                         n_strengths=30, min_strength_ratio=1e-3)
        assert path.selected_features == ["A"]
        ka = int(np.flatnonzero(path.nonzero_counts > 0)[0])
        kb_candidates = np.flatnonzero(path.coefficients[:, 1] != 0)
        first_b = int(kb_candidates[0]) if kb_candidates.size else len(path.strengths)
        assert ka < first_b  # A activates strictly before B

        # closed-form check at the first active strength: with all margins
        # active, the coordinate optimum is soft-threshold(2*sum(a*c)) / (2*sum(a*a))
        lam = path.strengths[ka]
        w = path.coefficients[ka]
        b = path.intercepts[ka]
        xs = (x - x[:, :].mean(axis=0)) / x.std(axis=0)
        ys = np.where(y01 == 1, 1.0, -1.0)
        margins = 1.0 - ys * (xs @ w + b)
        if (margins > 0).all():
            a_vec = ys * xs[:, 0]
            c_vec = margins + a_vec * w[0]
            raw = 2.0 * float(a_vec @ c_vec)
            soft = np.sign(raw) * max(abs(raw) - lam, 0.0) / (2.0 * float(a_vec @ a_vec))
            assert w[0] == pytest.approx(soft, abs=1e-6)

    def test_path_monotone_or_logged(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(100, 40))
        beta = np.zeros(40)
        beta[:5] = 1.0
        y = ((x @ beta + rng.normal(size=100)) > 0).astype(int)
        path = l1_select(x, y, target_count=5)
        for stronger, weaker, lost in path.monotonicity_violations:
            assert lost <= 1  # spec tolerates one-feature blips, logged
        diffs = np.diff(path.nonzero_counts)
        assert (diffs >= -1).all()

    def test_deterministic(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(50, 12))
        y = (x[:, 2] > 0).astype(int)
        a = l1_select(x, y, target_count=2)
        b = l1_select(x, y, target_count=2)
        assert (a.coefficients == b.coefficients).all()
        assert a.chosen_strength == b.chosen_strength

    def test_target_calibration_prefers_stronger_penalty_on_tie(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(60, 6))
        y = (x[:, 0] + x[:, 1] > 0).astype(int)
        path = l1_select(x, y, target_count=1)
        gap = np.abs(path.nonzero_counts - 1)
        candidates = np.flatnonzero((gap == gap.min()) & (path.nonzero_counts > 0))
        assert path.chosen_index == candidates[0]

    def test_grid_size_floor(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(30, 3))
        y = (x[:, 0] > 0).astype(int)
        with pytest.raises(ValueError):
            l1_select(x, y, n_strengths=10)

    def test_test_row_leakage_rejected(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(30, 3))
        y = (x[:, 0] > 0).astype(int)
        with pytest.raises(SelectionError):
            l1_select(x, y, rows=np.arange(20), test_rows=np.arange(15, 30))
