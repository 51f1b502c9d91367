import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

import oracles
from bellcert import planner as pl
from bellcert.errors import InvalidArgument

LN100 = math.log(100.0)


class TestSdi:
    def test_isotropic_one_percent(self):
        res = pl.samples_sdi(0.75, 0.01, 0.01)
        assert res.N == 919
        assert res.N == oracles.sample_size(0.5, 0.01, 0.01)
        assert res.formula_tag == "SDI"

    def test_monotone_in_threshold(self):
        Ns = [pl.samples_sdi(g, 0.01, 0.01).N for g in (0.5, 0.6, 0.75, 0.85, 0.95, 0.99)]
        assert Ns == sorted(Ns)
        assert len(set(Ns)) == len(Ns)

    def test_ghz_coefficient(self):
        res = pl.samples_sdi(0.769, 0.01, 0.01)
        assert res.N == math.ceil(LN100 / -math.log(1 - 2 * 0.231 * 0.01))
        assert res.asymptotic == pytest.approx(LN100 / (2 * 0.231 * 0.01))
        assert res.N * 0.01 / LN100 == pytest.approx(2.16, abs=0.02)

    @pytest.mark.parametrize("g", [0.4, 1.0, 1.2])
    def test_domain(self, g):
        with pytest.raises(InvalidArgument):
            pl.samples_sdi(g, 0.01, 0.01)


class TestStandard:
    @pytest.mark.parametrize("nu", [2 / 3, 0.6667])
    def test_optimal_gap(self, nu):
        assert pl.samples_standard(nu, 0.01, 0.01).N == 689
        assert oracles.sample_size(nu, 0.01, 0.01) == 689

    @pytest.mark.parametrize("eps,delta", [(0.01, 0.01), (0.1, 0.05), (0.3, 0.001)])
    def test_perfect_test(self, eps, delta):
        assert pl.samples_standard(1.0, eps, delta).N == math.ceil(math.log(delta) / math.log(1 - eps))

    def test_asymptotic(self):
        res = pl.samples_standard(2 / 3, 1e-5, 0.01)
        assert pl.asymptotic_coefficient(res) == pytest.approx(1.5, rel=1e-4)

    @pytest.mark.parametrize("nu", [0.0, 1.5])
    def test_domain(self, nu):
        with pytest.raises(InvalidArgument):
            pl.samples_standard(nu, 0.01, 0.01)


class TestMermin:
    def test_coefficient(self):
        res = pl.samples_di_mermin(1e-5, 0.01)
        assert pl.asymptotic_coefficient(res) == pytest.approx(2 / (2 - math.sqrt(2)), rel=1e-4)
        assert 2 / (2 - math.sqrt(2)) == pytest.approx(3.41, abs=0.005)

    def test_one_percent_count(self):
        # ln(0.01)/ln(1 − 0.0029289…) = 1569.9997…, so the ceiling is 1570
        raw = math.log(0.01) / math.log(1 - (2 - math.sqrt(2)) / 2 * 0.01)
        assert 1569.99 < raw < 1570
        assert pl.samples_di_mermin(0.01, 0.01).N == 1570

    @pytest.mark.parametrize("delta", [0.0, 1.0])
    def test_delta_domain(self, delta):
        with pytest.raises(InvalidArgument):
            pl.samples_di_mermin(0.01, delta)


class TestQuadratic:
    def test_example(self):
        res = pl.samples_di_quadratic(1.0, 0.1, 0.01)
        assert res.N == 461
        assert "order of magnitude" in res.note

    def test_scaling(self):
        a = pl.samples_di_quadratic(1.0, 0.01, 0.01).asymptotic
        b = pl.samples_di_quadratic(1.0, 0.02, 0.01).asymptotic
        assert a / b == pytest.approx(4.0)

    def test_large_constant(self):
        assert pl.samples_di_quadratic(1e9, 0.1, 0.01).N == 1

    def test_constant_required_positive(self):
        with pytest.raises(InvalidArgument):
            pl.samples_di_quadratic(0.0, 0.1, 0.01)


class TestTraceDistance:
    def test_coefficient(self):
        assert pl.robustness_trace_distance(1.0) == pytest.approx(0.924, abs=5e-4)

    def test_zero(self):
        assert pl.robustness_trace_distance(0.0) == 0.0

    def test_one_percent(self):
        assert pl.robustness_trace_distance(0.01) == pytest.approx(0.0924, abs=5e-5)

    def test_negative(self):
        with pytest.raises(InvalidArgument):
            pl.robustness_trace_distance(-0.1)


class TestFig4:
    def test_ratios(self):
        (row,) = pl.fig4_table([1e-4])
        coeffs = [n * 1e-4 / LN100 for n in (row.N_standard, row.N_sdi_bell, row.N_sdi_ghz, row.N_di_mermin)]
        for got, want in zip(coeffs, (1.5, 2.0, 2.16, 3.41)):
            assert got == pytest.approx(want, rel=0.01)

    def test_one_percent_row(self):
        (row,) = pl.fig4_table([0.01])
        assert (row.N_standard, row.N_sdi_bell, row.N_di_mermin) == (689, 919, 1570)
        assert row.N_sdi_ghz == oracles.sample_size(2 * (0.5 - 1 / math.sqrt(4 + math.pi**2)), 0.01, 0.01)

    def test_csv(self):
        text = pl.fig4_csv(pl.fig4_table([0.01, 0.1]))
        lines = text.splitlines()
        assert lines[0] == "epsilon,N_standard,N_sdi_bell,N_sdi_ghz,N_di_mermin"
        assert lines[1].startswith("0.01,689,919,")
        assert len(lines) == 3

    def test_epsilon_one_rejected(self):
        with pytest.raises(InvalidArgument):
            pl.fig4_table([1.0])


class TestOrdering:
    @given(hst.floats(1e-4, 0.49), hst.floats(1e-4, 0.49), hst.floats(1e-6, 0.5))
    @settings(max_examples=100, deadline=None)
    def test_nonincreasing(self, e1, e2, delta):
        lo, hi = sorted((e1, e2))
        for plan in (lambda e, d: pl.samples_sdi(0.75, e, d), lambda e, d: pl.samples_standard(2 / 3, e, d),
                     pl.samples_di_mermin, lambda e, d: pl.samples_di_quadratic(1.0, e, d)):
            assert plan(hi, delta).N <= plan(lo, delta).N
            assert plan(lo, min(2 * delta, 0.99)).N <= plan(lo, delta).N

    @given(hst.floats(1e-6, 0.4999))
    @settings(max_examples=100, deadline=None)
    def test_sdi_beats_mermin(self, eps):
        assert pl.samples_sdi(0.75, eps, 0.01).N <= pl.samples_di_mermin(eps, 0.01).N
