"""Monte Carlo game tests.  Statistical checks use 4 binomial standard errors."""

import json
import math

import numpy as np
import pytest

from bellcert import ghz as gz
from bellcert import guessing as gs
from bellcert import qcore
from bellcert import simulator as sim
from bellcert import strategy as st
from bellcert.errors import InvalidArgument


def within(record, expected, k=4.0):
    se = math.sqrt(expected * (1 - expected) / record.trials)
    return abs(record.pass_rate - expected) <= k * se + 1e-12


class TestAdversary:
    def test_unknown(self):
        with pytest.raises(InvalidArgument):
            sim.AdversaryModel("clever")

    def test_fixed_needs_valid_state(self):
        with pytest.raises(InvalidArgument):
            sim.AdversaryModel.fixed(np.eye(4))

    def test_mixture_range(self):
        with pytest.raises(InvalidArgument):
            sim.AdversaryModel.mixture(1.5)

    def test_mixture_state(self):
        mu = st.make_named("XYZ")
        rho, dims = sim.bell_state_for(mu, sim.AdversaryModel.mixture(0.4))
        assert np.trace(rho).real == pytest.approx(1.0)
        assert gs.gamma_of_state(rho, mu, dims) == pytest.approx(gs.gamma_hat(mu, 0.4), abs=1e-12)

    def test_product_state_attains_threshold(self):
        for name in ("XY", "XYZ", "Polygon(3)", "EquatorPlusZ(opt)"):
            mu = st.parse_protocol(name)
            rho, dims = sim.bell_state_for(mu, sim.AdversaryModel.product())
            assert gs.gamma_of_state(rho, mu, dims) == pytest.approx(gs.gamma_star(mu), abs=1e-6)


class TestBellGame:
    @pytest.mark.parametrize("name", ["XY", "XYZ", "Isotropic", "Equator", "Icosahedron"])
    def test_honest_passes(self, name):
        rec = sim.play_bell(st.parse_protocol(name), sim.AdversaryModel.honest(), 20_000, seed=1)
        assert rec.passes == rec.trials
        assert rec.std_err == 0.0

    def test_xy_product(self):
        rec = sim.play_bell(st.make_named("XY"), sim.AdversaryModel.product(), 100_000, seed=2)
        assert within(rec, (2 + math.sqrt(2)) / 4)

    def test_isotropic_mixture(self):
        rec = sim.play_bell(st.make_named("Isotropic"), sim.AdversaryModel.mixture(0.5), 100_000, seed=3)
        assert within(rec, (3 + 0.5) / 4)

    def test_deterministic(self):
        mu = st.make_named("XYZ")
        a = sim.play_bell(mu, sim.AdversaryModel.mixture(0.3), 30_000, seed=9)
        b = sim.play_bell(mu, sim.AdversaryModel.mixture(0.3), 30_000, seed=9)
        assert a == b

    def test_thread_count_irrelevant(self):
        mu = st.make_named("Isotropic")
        a = sim.play_bell(mu, sim.AdversaryModel.product(), 50_000, seed=4, threads=1)
        b = sim.play_bell(mu, sim.AdversaryModel.product(), 50_000, seed=4, threads=4)
        assert a.passes == b.passes

    def test_seed_matters(self):
        mu = st.make_named("Isotropic")
        a = sim.play_bell(mu, sim.AdversaryModel.product(), 50_000, seed=4)
        b = sim.play_bell(mu, sim.AdversaryModel.product(), 50_000, seed=5)
        assert a.passes != b.passes

    def test_fixed_never_beats_bound(self, rng):
        mu = st.make_named("XYZ")
        for _ in range(5):
            rho = qcore.random_density(4, rng, rank=2)
            rec = sim.play_bell(mu, sim.AdversaryModel.fixed(rho), 20_000, seed=int(rng.integers(1 << 30)))
            bound = gs.gamma_hat(mu, qcore.concurrence(rho))
            assert rec.pass_rate <= bound + 4 * math.sqrt(bound * (1 - bound) / rec.trials) + 1e-12

    def test_fixed_matches_state_value(self, rng):
        mu = st.make_named("Polygon", M=3)
        rho = qcore.random_density(4, rng)
        rec = sim.play_bell(mu, sim.AdversaryModel.fixed(rho), 50_000, seed=6)
        assert within(rec, gs.gamma_of_state(rho, mu))

    def test_transcript(self, tmp_path):
        rows = []
        rec = sim.play_bell(st.make_named("XY"), sim.AdversaryModel.product(), 50, seed=1, transcript=rows)
        assert len(rows) == 50
        assert sum(r["pass"] for r in rows) == rec.passes
        assert [r["trial"] for r in rows] == list(range(50))
        path = tmp_path / "t.jsonl"
        sim.write_transcript(path, rows)
        lines = path.read_text().splitlines()
        assert json.loads(lines[0]).keys() >= {"trial", "test", "honest_outcomes", "adversary_response", "pass"}

    def test_trials_validated(self):
        with pytest.raises(InvalidArgument):
            sim.play_bell(st.make_named("XY"), sim.AdversaryModel.honest(), 0, seed=1)


class TestGhzGame:
    LAYOUTS = [gz.PartyLayout(3, (2,)), gz.PartyLayout(3, (1, 2)), gz.PartyLayout(4, (0, 2))]

    @pytest.mark.parametrize("layout", LAYOUTS)
    @pytest.mark.parametrize("law", ["continuous", 4])
    def test_honest_passes(self, layout, law):
        rec = sim.play_ghz(gz.GhzStrategy(0.3, law), layout, sim.AdversaryModel.honest(), 5_000, seed=1)
        assert rec.passes == rec.trials

    def test_equator_plus_z_product(self):
        rec = sim.play_ghz(gz.GhzStrategy(0.288), gz.PartyLayout(3, (2,)), sim.AdversaryModel.product(),
                           50_000, seed=2)
        assert within(rec, gs.gamma_star(st.make_named("EquatorPlusZ", pZ=0.288)))
        assert rec.pass_rate == pytest.approx(0.769, abs=0.01)

    def test_square_phases_product(self):
        rec = sim.play_ghz(gz.GhzStrategy(0.0, 4), gz.PartyLayout(3, (2,)), sim.AdversaryModel.product(),
                           50_000, seed=3)
        assert within(rec, (2 + math.sqrt(2)) / 4)

    @pytest.mark.parametrize("dishonest,adv", [((0,), sim.AdversaryModel.product()),
                                               ((1, 2), sim.AdversaryModel.mixture(0.4))])
    def test_matches_bell_game(self, dishonest, adv):
        strat = gz.GhzStrategy(1 / 3, 5)
        g = sim.play_ghz(strat, gz.PartyLayout(3, dishonest), adv, 40_000, seed=4)
        b = sim.play_bell(gz.effective_strategy(strat), adv, 40_000, seed=5)
        se = math.hypot(g.std_err, b.std_err)
        assert abs(g.pass_rate - b.pass_rate) <= 4 * se

    def test_fixed_state(self):
        layout = gz.PartyLayout(3, (2,))
        rho = np.eye(8) / 8
        rec = sim.play_ghz(gz.GhzStrategy(0.5), layout, sim.AdversaryModel.fixed(rho), 20_000, seed=7)
        # Z tests pass with probability 1/4, phase tests with 1/2 on the maximally mixed state
        assert within(rec, 0.5 * 0.25 + 0.5 * 0.5)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgument):
            sim.play_ghz(gz.GhzStrategy(0.5), gz.PartyLayout(3, (2,)), sim.AdversaryModel.fixed(np.eye(4) / 4),
                         10, seed=1)

    def test_mixture_needs_two_dishonest_levels(self):
        with pytest.raises(InvalidArgument):
            sim.play_ghz(gz.GhzStrategy(0.5), gz.PartyLayout(3, (2,)), sim.AdversaryModel.mixture(0.5), 10, seed=1)

    def test_deterministic_and_chunked(self):
        args = (gz.GhzStrategy(0.2), gz.PartyLayout(3, (1,)), sim.AdversaryModel.product(), 30_000)
        a = sim.play_ghz(*args, seed=8, threads=1)
        b = sim.play_ghz(*args, seed=8, threads=3)
        assert a == b

    def test_transcript_tests_are_valid(self):
        rows = []
        sim.play_ghz(gz.GhzStrategy(0.3, 4), gz.PartyLayout(3, (2,)), sim.AdversaryModel.product(), 40,
                     seed=1, transcript=rows)
        for r in rows:
            t = gz.GhzTest.from_json(r["test"])
            assert t.kind in ("Z", "phase")


class TestVerdict:
    def _record(self, passes, trials):
        return sim.GameRecord(trials, passes, 0, "x")

    def test_perfect(self):
        v = sim.verdict(self._record(100, 100), st.make_named("Isotropic"))
        assert v.entanglement_certified
        assert v.threshold == pytest.approx(0.75)

    def test_at_threshold(self):
        v = sim.verdict(self._record(3, 4), st.make_named("Isotropic"))
        assert not v.entanglement_certified

    def test_margin(self):
        rec = self._record(128_000, 160_000)
        assert rec.std_err == pytest.approx(0.001)
        assert sim.verdict(rec, st.make_named("Isotropic")).entanglement_certified

    def test_ghz_uses_effective_threshold(self):
        v = sim.verdict(self._record(10, 10), gz.GhzStrategy(st.optimal_pz_equator()))
        assert v.threshold == pytest.approx(0.5 + 1 / math.sqrt(4 + math.pi**2), abs=1e-9)

    def test_record_json(self):
        rec = self._record(3, 4)
        obj = rec.to_json()
        assert obj["pass_rate"] == 0.75
        assert obj["std_err"] == pytest.approx(math.sqrt(0.75 * 0.25 / 4))


class TestSweep:
    def test_xyz_endpoints(self):
        rows = sim.sweep_concurrence(st.make_named("XYZ"), [0.0, 1.0], 20_000, seed=1)
        assert rows[0].analytic == pytest.approx((3 + math.sqrt(3)) / 6, abs=1e-12)
        assert rows[1].analytic == 1.0
        assert rows[1].simulated == 1.0

    def test_isotropic_zero(self):
        (row,) = sim.sweep_concurrence(st.make_named("Isotropic"), [0.0], 20_000, seed=2)
        assert row.analytic == pytest.approx(0.75)
        assert abs(row.simulated - 0.75) <= 4 * math.sqrt(0.75 * 0.25 / 20_000)

    def test_xy_half(self):
        (row,) = sim.sweep_concurrence(st.make_named("XY"), [0.5], 50_000, seed=3)
        assert abs(row.simulated - row.analytic) <= 4 * math.sqrt(row.analytic * (1 - row.analytic) / 50_000)
