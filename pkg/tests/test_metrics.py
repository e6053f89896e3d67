import numpy as np
import pytest

from ibflow import mesh, metrics, rbfgeom


class TestVelocityError:
    def test_identical_fields_zero(self):
        g = mesh.GridSpec(32, 32)
        st = mesh.FluidState.zeros(g)
        e2, einf = metrics.velocity_error(st, g, st, g)
        assert e2 == 0.0 and einf == 0.0

    def test_constant_offset_norms(self):
        # gold = run + c in both components: e_inf = sqrt(2)|c| and
        # e_2 = sqrt(2)|c|*sqrt(area)
        run_g = mesh.GridSpec(32, 32)
        gold_g = mesh.GridSpec(64, 64)
        c = 0.37
        run = mesh.FluidState.zeros(run_g)
        gold = mesh.FluidState.zeros(gold_g)
        gold.u += c
        gold.v += c
        e2, einf = metrics.velocity_error(run, run_g, gold, gold_g)
        # v wall rows carry the offset too after coarsening; centers see c
        assert einf == pytest.approx(np.sqrt(2) * c, rel=1e-12)
        assert e2 == pytest.approx(np.sqrt(2) * c * 1.0, rel=1e-12)

    def test_coarsening_averages_coincident_faces(self):
        run_g = mesh.GridSpec(8, 8)
        gold_g = mesh.GridSpec(16, 16)
        gold = mesh.FluidState.zeros(gold_g)
        gold.u[0, 0] = 2.0
        gold.u[0, 1] = 4.0
        u_c, v_c = metrics.coarsen_velocity(gold.u, gold.v, 2)
        assert u_c[0, 0] == pytest.approx(3.0)

    def test_non_nested_grids_rejected(self):
        with pytest.raises(ValueError):
            metrics.velocity_error(
                mesh.FluidState.zeros(mesh.GridSpec(32, 32)),
                mesh.GridSpec(32, 32),
                mesh.FluidState.zeros(mesh.GridSpec(16, 16)),
                mesh.GridSpec(16, 16),
            )


class TestConvergenceRate:
    def test_factor_four_is_second_order(self):
        assert metrics.convergence_rate(4e-3, 1e-3) == pytest.approx(2.0)

    def test_factor_two_is_first_order(self):
        assert metrics.convergence_rate(2e-3, 1e-3) == pytest.approx(1.0)

    def test_published_pair(self):
        assert metrics.convergence_rate(6.4090e-03, 1.5259e-03) == pytest.approx(
            2.07, abs=0.005
        )


class TestChordStats:
    def test_ideal_circle_is_exact(self):
        n, r = 400, 0.1
        lam = rbfgeom.uniform_nodes(n)
        pts = np.column_stack([r * np.cos(lam), r * np.sin(lam)])
        s = metrics.chord_stats(pts, metrics.ideal_chord(r, n))
        # the literal formula takes sqrt of summed |deviations|, which lifts
        # per-chord rounding (~1e-16) to ~1e-10; s_inf has no such lift
        assert s.s_inf < 1e-14
        assert s.s2 < 1e-9
        assert s.s2_rms < 1e-14

    def test_known_deviation(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        s = metrics.chord_stats(pts, 1.0)
        assert s.s_inf == 0.0
        assert s.s2 == 0.0

    def test_metric_against_gold_stats(self):
        n, r = 50, 0.1
        lam = rbfgeom.uniform_nodes(n)
        pts = np.column_stack([r * np.cos(lam), r * np.sin(lam)])
        gold = metrics.ChordStats(s2=1e-7, s_inf=5e-6, s2_rms=2e-8)
        e2, einf = metrics.chord_metric(pts, r, gold)
        # own stats are zero up to the formula's rounding floor (~1e-9)
        assert e2 == pytest.approx(1e-7, abs=2e-9)
        assert einf == pytest.approx(5e-6, abs=1e-12)

    def test_too_few_markers(self):
        with pytest.raises(ValueError):
            metrics.chord_stats(np.zeros((2, 2)), 0.1)


class TestEnclosedArea:
    def test_exact_circle(self):
        lam = rbfgeom.uniform_nodes(50)
        pts = np.column_stack([0.1 * np.cos(lam), 0.1 * np.sin(lam)])
        assert metrics.enclosed_area(pts) == pytest.approx(np.pi / 100, rel=1e-10)

    def test_ideal_ellipse_seven_digits(self):
        for n in (25, 50):
            lam = rbfgeom.uniform_nodes(n)
            pts = np.column_stack([0.2 * np.cos(lam), 0.05 * np.sin(lam)])
            area = metrics.enclosed_area(pts)
            assert abs(area - np.pi / 100) / (np.pi / 100) < 1e-7

    def test_translation_invariance(self):
        lam = rbfgeom.uniform_nodes(27)
        pts = np.column_stack([0.2 * np.cos(lam), 0.05 * np.sin(lam)])
        a0 = metrics.enclosed_area(pts)
        a1 = metrics.enclosed_area(pts + np.array([3.7, -1.2]))
        assert abs(a0 - a1) < 1e-12

    def test_rotation_invariance(self):
        lam = rbfgeom.uniform_nodes(27)
        pts = np.column_stack([0.2 * np.cos(lam), 0.05 * np.sin(lam)])
        th = 0.83
        R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        a0 = metrics.enclosed_area(pts)
        a1 = metrics.enclosed_area(pts @ R.T)
        assert abs(a0 - a1) < 1e-12

    def test_large_marker_sets_subsampled(self):
        lam = rbfgeom.uniform_nodes(400)
        pts = np.column_stack([0.1 * np.cos(lam), 0.1 * np.sin(lam)])
        assert metrics.enclosed_area(pts) == pytest.approx(np.pi / 100, rel=1e-8)

    def test_too_few_markers(self):
        with pytest.raises(ValueError):
            metrics.enclosed_area(np.zeros((5, 2)))


class TestEnergyChange:
    def test_all_zero(self):
        g = mesh.GridSpec(16, 16)
        st = mesh.FluidState.zeros(g)
        e = metrics.energy_change(st, st, None, None, 1e-4, 0.1, 1.0, g)
        assert e == 0.0

    def test_equal_states_no_force(self):
        g = mesh.GridSpec(16, 16)
        rng = np.random.default_rng(0)
        st = mesh.FluidState.zeros(g)
        st.u = rng.standard_normal(st.u.shape)
        e = metrics.energy_change(st, st, np.zeros((5, 2)), np.ones((5, 2)), 1e-4, 0.1, 1.0, g)
        assert e == 0.0

    def test_kinetic_change_sign(self):
        g = mesh.GridSpec(16, 16)
        a = mesh.FluidState.zeros(g)
        b = mesh.FluidState.zeros(g)
        b.u += 1.0
        assert metrics.energy_change(a, b, None, None, 1e-4, 0.1, 2.0, g) > 0
        assert metrics.energy_change(b, a, None, None, 1e-4, 0.1, 2.0, g) < 0


class TestStabilitySearch:
    def test_mock_threshold(self):
        calls = []

        def probe(dt):
            calls.append(dt)
            return dt <= 7.05e-4

        best = metrics.stability_search(probe, 2e-4, 1e-4, 5e-3)
        assert best == pytest.approx(7e-4)

    def test_unstable_at_start_reports_zero(self):
        assert metrics.stability_search(lambda dt: False, 2e-4, 1e-4, 5e-3) == 0.0


class TestProfileCounters:
    def test_zero_steps(self):
        p = metrics.profile_counters({}, 0, 0.0, 0, 0)
        assert p.fluid_fraction == 0.0
        assert p.mean_pressure_iterations == 0.0
        assert p.wall_per_step == 0.0

    def test_mean_iterations_per_step(self):
        p = metrics.profile_counters({"fluid_seconds": 5.0}, 10, 10.0, 400, 20)
        assert p.mean_pressure_iterations == pytest.approx(40.0)
        assert p.fluid_fraction == pytest.approx(0.5)
        assert p.wall_per_step == pytest.approx(1.0)
