import numpy as np
import pytest

from pdlmba import lmba
from pdlmba.components import LineSpec, linear_phase_theta, make_line, make_phase_shifter
from pdlmba.netcore import cascade
from pdlmba.sfg import enumerate_paths, mason_transfer, solve_linear

M = 1 / np.sqrt(2)


def random_chain(rng, grid, lo=0.5, hi=1.0):
    """Matched-block S21 with random magnitude ripple and a random delay."""
    f = grid.points / grid.f_mid
    mag = rng.uniform(lo, hi) * (1 + 0.1 * np.sin(rng.uniform(1, 6) * f))
    return mag * np.exp(1j * (rng.uniform(-np.pi, np.pi) - rng.uniform(0, 6) * f))


def random_topology(rng, grid, theta=None):
    kw = {k: random_chain(rng, grid) for k in ("phs", "bi", "bo", "ci", "co")}
    kw["btr"] = random_chain(rng, grid, 1.0, 5.0)
    kw["ctr"] = random_chain(rng, grid, 1.0, 5.0)
    theta = linear_phase_theta(grid, rng.uniform(-800, -50)) if theta is None else theta
    return lmba.ideal_topology(grid, theta=theta, **kw), kw


class TestBuildGraph:
    def test_sources_and_sink(self, band):
        g = lmba.build_graph(lmba.ideal_topology(band))
        assert g.sources == ("a_BA", "a_CA")
        assert g.sinks == ("b_out",)

    def test_unit_blocks_transfer(self, band):
        ba, ca = lmba.graph_transfers(lmba.ideal_topology(band))
        np.testing.assert_allclose(ba.transfer, 2j * M ** 2, atol=1e-15)
        np.testing.assert_allclose(ca.transfer, 2j * M ** 2, atol=1e-15)

    def test_node_census(self, band):
        g = lmba.build_graph(lmba.ideal_topology(band))
        expected = {"a_BA", "b.PHS.2", "b.IN.2", "b.IN.4", "a_CA", "b.CA_IMN.2", "b.CA_TR.2",
                    "b.CA_OMN.1", "b.CA_OMN.2", "b.OUT.4", "b_out"}
        for br, port in (("BA1", 3), ("BA2", 1)):
            expected |= {f"b.{br}_IMN.2", f"b.{br}_TR.2", f"b.{br}_OMN.1", f"b.{br}_OMN.2", f"b.OUT.{port}"}
        assert set(g.nodes) == expected
        assert len(g.nodes) == 21

    def test_ca_path_census(self, band):
        g = lmba.build_graph(lmba.ideal_topology(band))
        paths = enumerate_paths(g, "a_CA", "b_out")
        assert len(paths) == 2
        for p in paths:
            br = "BA1" if "b.BA1_OMN.1" in p else "BA2"
            # reverse through the BA OMN, reflect off the drain, forward again
            i = p.index(f"b.{br}_OMN.1")
            assert p[i + 1] == f"b.{br}_TR.2" and p[i + 2] == f"b.{br}_OMN.2"

    def test_ba_paths_include_two_direct_routes(self, band):
        g = lmba.build_graph(lmba.ideal_topology(band))
        paths = enumerate_paths(g, "a_BA", "b_out")
        direct = [p for p in paths if "b.OUT.4" not in p]
        assert len(direct) == 2

    def test_solve_linear_fig2_unit_blocks(self, band):
        g = lmba.build_graph(lmba.ideal_topology(band))
        a_ba, a_ca = 0.3 - 0.1j, 1.2 + 0.4j
        out = solve_linear(g, {"a_BA": a_ba, "a_CA": a_ca})["b_out"]
        np.testing.assert_allclose(out, 1j * a_ba + 1j * a_ca, atol=1e-14)

    def test_grid_mismatch(self, band, small_grid):
        t = lmba.ideal_topology(band)
        with pytest.raises(ValueError):
            t.replace(ba_omn=lmba.ideal_topology(small_grid).ba_omn)


class TestOutputWaves:
    def test_ca_off(self, band):
        t, _ = random_topology(np.random.default_rng(0), band)
        b_ba, b_ca, b = lmba.output_waves(t, 0.7, 0.0)
        assert np.all(b_ca == 0) and np.array_equal(b, b_ba)

    def test_unit_blocks(self, band):
        _, _, b = lmba.output_waves(lmba.ideal_topology(band), 1.0, 1.0)
        np.testing.assert_allclose(b, 2j, atol=1e-15)

    def test_matches_mason(self, band):
        rng = np.random.default_rng(1)
        for _ in range(10):
            t, _ = random_topology(rng, band)
            ba, ca = lmba.graph_transfers(t)
            a_ba, a_ca = rng.normal(size=2) + 1j * rng.normal(size=2)
            b_ba, b_ca, b = lmba.output_waves(t, a_ba, a_ca)
            assert np.abs(b_ba - a_ba * ba.transfer).max() < 1e-12
            assert np.abs(b_ca - a_ca * ca.transfer).max() < 1e-12

    def test_ratio_independent_of_coupler_phase(self, band):
        rng = np.random.default_rng(2)
        _, kw = random_topology(rng, band)
        ratios = []
        for total in (0.0, -200.0, -1500.0):
            t = lmba.ideal_topology(band, theta=linear_phase_theta(band, total), **kw)
            b_ba, b_ca, _ = lmba.output_waves(t, 1.0, 1.0)
            ratios.append(b_ba / b_ca)
            sol_ba, sol_ca = lmba.graph_transfers(t)
            ratios.append(sol_ba.transfer / sol_ca.transfer)
        for r in ratios[1:]:
            np.testing.assert_allclose(r, ratios[0], rtol=1e-12)

    def test_ca_traverses_ba_omn_twice(self, band):
        rng = np.random.default_rng(3)
        t, kw = random_topology(rng, band)
        scaled = lmba.ideal_topology(band, theta=np.angle(t.input_coupler.sij(4, 1)),
                                     **{**kw, "bo": 2 * kw["bo"]})
        for fn in (lambda x: lmba.output_waves(x, 1.0, 1.0)[:2],
                   lambda x: tuple(s.transfer for s in lmba.graph_transfers(x))):
            b_ba0, b_ca0 = fn(t)
            b_ba1, b_ca1 = fn(scaled)
            np.testing.assert_allclose(b_ba1, 2 * b_ba0, rtol=1e-12)
            np.testing.assert_allclose(b_ca1, 4 * b_ca0, rtol=1e-12)

    def test_mismatched_fixture_graph_matches_linear_solve(self, band):
        t = lmba.wideband_fixture(band, phase_shifter_deg=111.0)
        g = lmba.build_graph(t)
        ba, ca = lmba.graph_transfers(t, g)
        assert len(ba.loops) > 2
        lin = solve_linear(g, {"a_BA": 1.0})["b_out"]
        assert np.abs(ba.transfer - lin).max() < 1e-12
        lin = solve_linear(g, {"a_CA": 1.0})["b_out"]
        assert np.abs(ca.transfer - lin).max() < 1e-12


class TestPhaseOffset:
    def test_zero_when_equal(self, band):
        rng = np.random.default_rng(4)
        chain, tr, co, bo = (random_chain(rng, band) for _ in range(4))
        t = lmba.ideal_topology(band, phs=co * bo, bi=chain, btr=tr, bo=bo, ci=chain, ctr=tr, co=co)
        np.testing.assert_allclose(lmba.phase_offset(t), 0.0, atol=1e-12)

    def test_half_wave_in_phase_shifter(self, band):
        t = lmba.wideband_fixture(band, phase_shifter_deg=111.0)
        f0 = band.f_mid
        extra = make_phase_shifter(LineSpec(50.0, 180.0, f0), band)
        shifted = t.replace(phase_shifter=cascade(t.phase_shifter, extra))
        diff = lmba.phase_offset(shifted) - lmba.phase_offset(t)
        expect = -180.0 * band.points / f0
        wrapped = (diff - expect + 180) % 360 - 180
        np.testing.assert_allclose(wrapped, 0.0, atol=1e-9)
        # continuous curves: the difference itself is a straight line up to one whole turn
        np.testing.assert_allclose(np.diff(diff, 2), 0.0, atol=1e-9)

    def test_first_sample_folded(self, band):
        t = lmba.ideal_topology(band, phs=np.exp(-1j * np.linspace(3.0, 30.0, len(band))))
        off = lmba.phase_offset(t)
        assert -180 < off[0] <= 180
        assert np.abs(np.diff(off)).max() < 180

    def test_unwrap_fold(self):
        out = lmba.unwrap_fold(np.array([190.0, -160.0, -150.0]))
        np.testing.assert_allclose(out, [-170.0, -160.0, -150.0])
        assert lmba.unwrap_fold(np.array([-180.0]))[0] == 180.0


class TestLoadReflection:
    def test_no_injection(self):
        g, z = lmba.load_reflection(1.0, 0.0, 0.3)
        assert z == 50 and g == 0

    def test_double_load(self):
        g, z = lmba.load_reflection(np.sqrt(2), 1.0, 0.0)
        assert z == pytest.approx(100.0, abs=1e-12)
        assert g == pytest.approx(1 / 3, abs=1e-15)

    def test_ba_off(self):
        g, z = lmba.load_reflection(0.0, 0.4, 0.0)
        assert g == 1 and np.isinf(z.real)

    def test_short(self):
        g, z = lmba.load_reflection(np.sqrt(2), 1.0, np.pi)
        assert abs(z) < 1e-12 and g == pytest.approx(-1.0, abs=1e-15)

    def test_errors(self):
        with pytest.raises(ValueError):
            lmba.load_reflection(0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            lmba.load_reflection(-1.0, 1.0, 0.0)

    def test_gamma_consistent_with_z(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            ib, ic, th = rng.uniform(0.01, 2), rng.uniform(0, 2), rng.uniform(-np.pi, np.pi)
            g, z = lmba.load_reflection(ib, ic, th, 35.0)
            assert g == pytest.approx((z - 35) / (z + 35), abs=1e-12)


class TestDriveProfile:
    def test_backoff_point(self):
        p = lmba.make_drive_profile(10.0, 101)
        assert p.r_backoff == pytest.approx(10 ** -0.5) == pytest.approx(0.316227766)

    def test_ba_off_at_backoff(self):
        p = lmba.make_drive_profile(20 * np.log10(2), 3)  # r_bo = 0.5, a grid point
        assert p.levels[1] == pytest.approx(0.5)
        assert p.i_b[1] == 0
        g, _ = lmba.load_reflection(p.i_b[1], p.i_c[1], 0.0)
        assert g == 1

    def test_monotone(self):
        p = lmba.make_drive_profile(10.0, 101)
        assert np.all(np.diff(p.i_c) >= 0) and np.all(np.diff(p.i_b) >= 0)
        assert np.all(p.i_b[p.levels <= p.r_backoff] == 0)
        assert np.all(p.i_b[p.levels > p.r_backoff] > 0)

    def test_full_power_load(self):
        for ratio in (1.5, 2.0, 3.0):
            p = lmba.make_drive_profile(10.0, 11, ratio)
            _, z = lmba.load_reflection(p.i_b[-1], p.i_c[-1], 0.0)
            assert z.real == pytest.approx(ratio * 50.0)

    @pytest.mark.parametrize("args", [(0.0, 10), (10.0, 2), (10.0, 10, 1.0)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            lmba.make_drive_profile(*args)


class TestTrajectory:
    def aligned(self, band, theta_total=-900.0):
        rng = np.random.default_rng(6)
        chain, tr, co, bo = (random_chain(rng, band) for _ in range(4))
        return lmba.ideal_topology(band, theta=linear_phase_theta(band, theta_total),
                                   phs=co * bo / np.abs(co * bo), bi=chain, btr=tr, bo=bo,
                                   ci=chain, ctr=tr, co=co)

    def test_aligned_is_resistive_and_identical(self, band):
        traj = lmba.trajectory_sweep(self.aligned(band), lmba.make_drive_profile(10.0, 21))
        assert traj.max_deviation() < 1e-9
        np.testing.assert_allclose(traj.gamma.imag, 0.0, atol=1e-12)
        assert traj.gamma[0, -1] == pytest.approx(1 / 3, abs=1e-12)
        assert np.all(np.abs(traj.gamma) <= 1 + 1e-15)

    def test_ba_off_rows(self, band):
        p = lmba.make_drive_profile(10.0, 21)
        traj = lmba.trajectory_sweep(self.aligned(band), p)
        assert np.all(traj.gamma[:, p.ba_off] == 1)
        assert np.all(np.isinf(traj.z[:, p.ba_off].real))
        assert np.array_equal(traj.ba_off, p.ba_off)

    def test_rotated_endpoint(self, band):
        t = self.aligned(band)
        rot = np.ones(len(band), complex)
        rot[40] = np.exp(-1j * np.deg2rad(30.0))  # CA lags 30 degrees at one frequency
        t = t.replace(ca_omn=lmba.ideal_topology(band, co=t.ca_omn.s21 * rot).ca_omn)
        p = lmba.make_drive_profile(10.0, 11)
        traj = lmba.trajectory_sweep(t, p)
        assert traj.offset_deg[40] == pytest.approx(30.0, abs=1e-9)
        _, z = lmba.load_reflection(p.i_b[-1], p.i_c[-1], np.deg2rad(30.0))
        assert traj.z[40, -1] == pytest.approx(z, abs=1e-9)
        assert abs(traj.z[40, -1]) != pytest.approx(100.0)
        assert abs(traj.gamma[39, -1] - 1 / 3) < 1e-9

    def test_graph_and_offset_sources_agree(self, band):
        t = lmba.wideband_fixture(band, phase_shifter_deg=100.0)
        p = lmba.make_drive_profile()
        a = lmba.trajectory_sweep(t, p, source="offset")
        # mismatched blocks: the graph phase includes reflections, so only near-agreement
        b = lmba.trajectory_sweep(t, p, source="graph")
        assert np.abs(a.gamma - b.gamma).max() < 0.2
        ideal = self.aligned(band)
        c = lmba.trajectory_sweep(ideal, p, source="offset")
        d = lmba.trajectory_sweep(ideal, p, source="graph")
        np.testing.assert_allclose(c.gamma, d.gamma, atol=1e-12)
        with pytest.raises(ValueError):
            lmba.trajectory_sweep(ideal, p, source="bogus")

    def test_singular_graph_raises(self, band):
        t = lmba.ideal_topology(band)
        bad = t.ca_omn.s.copy()
        bad[:, 0, 0] = 1.0  # closes a unit loop with the drain reflection
        t = t.replace(ca_omn=t.ca_omn.with_s(bad))
        with pytest.raises(lmba.SingularGraphError):
            lmba.trajectory_sweep(t, lmba.make_drive_profile())


def brute_force_minimax(t, f0, step):
    """Exhaustive search that rebuilds the phase shifter for every candidate."""
    best = (None, np.inf)
    for k in range(int(round(360 / step)) + 1):
        L = k * step
        worst = np.abs(lmba.phase_offset(lmba.with_phase_shifter(t, L, f0))).max()
        if worst < best[1] - 1e-9:
            best = (L, worst)
    return best


class TestAlign:
    def test_extra_quarter_wave_in_ca(self, band):
        f0 = band.f_mid
        q = make_line(LineSpec(50.0, 90.0, f0), band).s21
        t = lmba.ideal_topology(band, co=q, btr=2.0, ctr=3.0)
        best, worst = lmba.align_phase_shifter(t, f0=f0)
        assert best == pytest.approx(90.0)
        assert worst < 1e-9

    def test_already_aligned(self, band):
        t = lmba.ideal_topology(band)
        assert lmba.align_phase_shifter(t) == (0.0, 0.0)

    def test_matches_brute_force(self, band):
        t = lmba.wideband_fixture(band)
        f0 = band.f_mid
        best, worst = lmba.align_phase_shifter(t, f0=f0)
        ob, ow = brute_force_minimax(t, f0, 0.5)
        assert best == pytest.approx(ob) and worst == pytest.approx(ow, abs=1e-9)

    def test_objective_matches_phase_offset(self, band):
        t = lmba.wideband_fixture(band)
        lengths = [0.0, 37.5, 111.0, 359.0]
        obj = lmba.minimax_objective(t, lengths)
        for L, o in zip(lengths, obj):
            assert o == pytest.approx(np.abs(lmba.phase_offset(lmba.with_phase_shifter(t, L))).max(), abs=1e-9)

    def test_tie_break_shorter(self, band):
        t = lmba.ideal_topology(band)
        assert lmba.align_phase_shifter(t, [10.0, 0.0, 0.0]).best_length_deg == 0.0

    def test_candidates(self):
        c = lmba.candidate_lengths(0, 360, 0.5)
        assert c.size == 721 and c[-1] == 360.0
        with pytest.raises(ValueError):
            lmba.align_phase_shifter(lmba.ideal_topology(band_stub()), [])


def band_stub():
    from pdlmba.netcore import FrequencyGrid
    return FrequencyGrid.linspace(1e9, 2e9, 3)


def test_csv_writers(band):
    t = lmba.ideal_topology(band)
    text = lmba.offset_csv(band.points, lmba.phase_offset(t))
    rows = text.splitlines()
    assert rows[0] == "freq_hz,offset_deg" and len(rows) == 182
    traj = lmba.trajectory_sweep(t, lmba.make_drive_profile(10.0, 3))
    rows = lmba.trajectory_csv(traj).splitlines()
    assert rows[0] == "freq_hz,drive,re_gamma,im_gamma" and len(rows) == 1 + 181 * 3


def test_mason_on_graph_directly(band):
    g = lmba.build_graph(lmba.ideal_topology(band))
    sol = mason_transfer(g, "a_CA", "b_out")
    assert len(sol.loops) == 2
    # the two CA round-trip loops cancel for an ideal balanced pair
    np.testing.assert_allclose(sol.loop_gains.sum(axis=0), 0.0, atol=1e-15)
