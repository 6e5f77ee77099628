# tests/domains/enskog/diagnostics/test_diagnostics_service.py

import math

import numpy as np
import pytest

from app.core.exceptions.exceptions import ConfigInvalid, EmptyRequest, TimeOutOfRange
from app.core.utils.random_streams import substream
from app.domains.enskog.collision.entities.collision import CollisionOutcome
from app.domains.enskog.collision.services import collision_service
from app.domains.enskog.diagnostics.entities.diagnostics import TestFunction, TestFunctionKind, TestMethod
from app.domains.enskog.diagnostics.services import diagnostics_service as ds
from app.domains.enskog.kernels.services import kernel_service
from app.domains.enskog.measures.entities.measures import Ensemble
from app.domains.enskog.simulator.entities.simulation import InitialLaw, VelocityLaw
from app.domains.enskog.simulator.services import simulator_service
from tests.factories import make_config, make_kernels


def _stream(k=0):
    return ds.diagnostics_stream(2024, k)


def _gaussian_states(rng, m=20_000, scale=1.0):
    return Ensemble.from_states(np.zeros((m, 3)), scale * rng.standard_normal((m, 3)), 0.0)


class TestConventions:
    def test_single_check_uses_the_base_multiplier(self):
        assert ds.z_multiplier(1) == 3.0

    def test_family_multiplier_grows(self):
        assert 3.0 < ds.z_multiplier(10) < ds.z_multiplier(100)

    def test_ks_level_is_split(self):
        assert ds.ks_level(4) == pytest.approx(0.0025)


class TestTanakaSymmetry:
    def test_zero_frequency_is_exact(self):
        q = kernel_service.build_angular_measure("uniform")
        s = kernel_service.build_speed_factor("constant_one")
        report = ds.tanaka_symmetry_check(s, q, 10_000, _stream(), lambdas=np.zeros((1, 3)))
        assert report.passed
        assert report.statistic == 0.0

    @pytest.mark.parametrize("sigma", [("constant_one", ()), ("smooth_saturating", (1.0, 0.5))])
    def test_elastic_rule_is_symmetric(self, sigma):
        q = kernel_service.build_angular_measure("maxwellian_power", theta_min=0.1)
        s = kernel_service.build_speed_factor(sigma[0], params=sigma[1])
        report = ds.tanaka_symmetry_check(s, q, 50_000, _stream())
        assert report.passed, report.details["worst"]

    def test_broken_rule_is_detected(self, monkeypatch):
        def shrinking(u, v, theta, phi):
            return CollisionOutcome(u_star=0.5 * u, v_star=v, alpha=0.5 * u, n=np.zeros_like(u))

        monkeypatch.setattr(collision_service, "collide_batch", shrinking)
        q = kernel_service.build_angular_measure("uniform")
        s = kernel_service.build_speed_factor("constant_one")
        report = ds.tanaka_symmetry_check(s, q, 20_000, _stream())
        assert not report.passed

    def test_needs_enough_samples(self):
        q = kernel_service.build_angular_measure("uniform")
        s = kernel_service.build_speed_factor("constant_one")
        with pytest.raises(ConfigInvalid):
            ds.tanaka_symmetry_check(s, q, 100, _stream())


class TestMaxwellianInvariance:
    def test_standard_normal_passes(self, rng):
        report = ds.maxwellian_invariance_check(_gaussian_states(rng))
        assert report.passed
        names = [c["label"] for c in report.details["components"]]
        assert "E|Z|^2" in names and "ks[2]" in names

    def test_wrong_variance_fails(self, rng):
        report = ds.maxwellian_invariance_check(_gaussian_states(rng, scale=1.2))
        assert not report.passed

    def test_initial_paths_pass(self):
        result = simulator_service.simulate(make_config(n=20_000, kernels=make_kernels(mass=0.0)))
        report = ds.maxwellian_invariance_check(result.paths, times=[0.0])
        assert report.passed


class TestWeakForm:
    def test_no_collisions_and_no_position_dependence_is_exact(self):
        kernels = make_kernels(mass=0.0)
        paths = simulator_service.simulate(make_config(n=500, kernels=kernels)).paths
        psi = TestFunction(TestFunctionKind.HERMITE_POLY, multi_index=(2, 0, 0))
        report = ds.weak_form_residual(paths, psi, 0.5, 0.05, 1000, kernels, _stream())
        assert report.statistic == 0.0
        assert report.passed

    def test_states_are_rejected(self, rng):
        psi = ds.standard_test_functions()[0]
        with pytest.raises(TimeOutOfRange):
            ds.weak_form_residual(_gaussian_states(rng, 10), psi, 0.0, 0.1, 100, make_kernels(), _stream())

    def test_window_must_fit_the_horizon(self):
        kernels = make_kernels(mass=0.0)
        paths = simulator_service.simulate(make_config(n=10, kernels=kernels)).paths
        psi = ds.standard_test_functions()[0]
        with pytest.raises(TimeOutOfRange):
            ds.weak_form_residual(paths, psi, 0.95, 0.1, 100, kernels, _stream())
        with pytest.raises(EmptyRequest):
            ds.weak_form_residual(paths, psi, 0.5, 0.1, 0, kernels, _stream())

    @pytest.mark.slow
    @pytest.mark.parametrize("k", range(5))
    def test_mean_field_run_satisfies_the_weak_form(self, k):
        cfg = make_config(n=4000, horizon=1.0, kernels=make_kernels(radius=2.0))
        paths = simulator_service.simulate(cfg).paths
        psi = ds.standard_test_functions()[k]
        dt = 0.25 / cfg.candidate_rate
        report = ds.weak_form_residual(paths, psi, 0.5, dt, 200_000, cfg.kernels, _stream(k))
        assert report.passed, report.details

    def test_central_difference_error_is_second_order(self):
        law = InitialLaw(velocity=VelocityLaw.TWO_POINT, velocity_offset=1.5)
        kernels = make_kernels(mass=0.0)
        paths = simulator_service.simulate(make_config(n=500, kernels=kernels, initial=law)).paths
        psi = ds.standard_test_functions()[0]
        coarse = ds.weak_form_residual(paths, psi, 0.5, 0.2, 100, kernels, _stream())
        fine = ds.weak_form_residual(paths, psi, 0.5, 0.1, 100, kernels, _stream())
        d_02, d_01 = coarse.details["time_derivative"], coarse.details["time_derivative_half_step"]
        d_005 = fine.details["time_derivative_half_step"]
        assert fine.details["time_derivative"] == pytest.approx(d_01, rel=1e-12)
        assert (d_02 - d_01) / (d_01 - d_005) == pytest.approx(4.0, rel=0.05)

    @pytest.mark.slow
    @pytest.mark.parametrize("k", range(5))
    def test_two_point_start_satisfies_the_weak_form(self, k):
        law = InitialLaw(velocity=VelocityLaw.TWO_POINT, velocity_offset=1.5)
        cfg = make_config(n=4000, horizon=1.0, kernels=make_kernels(radius=2.0), initial=law)
        paths = simulator_service.simulate(cfg).paths
        psi = ds.standard_test_functions()[k]
        dt = 0.25 / cfg.candidate_rate
        report = ds.weak_form_residual(paths, psi, 0.5, dt, 200_000, cfg.kernels, _stream(k))
        assert report.passed, report.details


class TestUniqueness:
    def test_identical_runs(self):
        paths = simulator_service.simulate(make_config(n=200)).paths
        report = ds.marginal_uniqueness_check(paths, paths)
        assert report.passed
        assert report.statistic == 0.0

    def test_different_interaction_ranges_are_told_apart(self):
        law = InitialLaw(velocity=VelocityLaw.TWO_POINT, velocity_offset=1.5)
        wide = simulator_service.simulate(make_config(n=2000, initial=law)).paths
        narrow = simulator_service.simulate(make_config(n=2000, initial=law, kernels=make_kernels(radius=0.1))).paths
        report = ds.marginal_uniqueness_check(wide, narrow, times=(1.0,))
        assert not report.passed
        assert report.statistic > 0.0
        assert report.details["null"][0] < report.statistic


class TestThinningCalibration:
    def test_poisson_counts_pass(self, rng):
        report = ds.thinning_calibration_check(rng.poisson(20.0, size=400), 20.0)
        assert report.passed
        assert report.method is TestMethod.CHI2

    def test_wrong_rate_fails(self, rng):
        report = ds.thinning_calibration_check(rng.poisson(30.0, size=400), 20.0)
        assert not report.passed

    def test_needs_enough_counts(self):
        with pytest.raises(EmptyRequest):
            ds.thinning_calibration_check([1, 2, 3], 2.0)

    def test_bins_increase(self):
        cuts = ds.poisson_bins(20.0, 8)
        assert np.all(np.diff(cuts) > 0)

    @pytest.mark.slow
    @pytest.mark.parametrize("c", [1.0, 0.5, 0.1])
    def test_simulated_counts_follow_the_thinned_rate(self, c):
        cfg = make_config(n=1000, horizon=3.0, kernels=make_kernels(mass=1.0 / math.pi, sigma=c))
        results = simulator_service.run_replicates(cfg, 100)
        expected = cfg.particle_count * cfg.candidate_rate * c * cfg.horizon
        report = ds.thinning_calibration_check(ds.accepted_counts(results), expected)
        assert report.replicates == 100
        assert report.passed, report.details

    def test_accepted_counts_of_replicates(self):
        results = simulator_service.run_replicates(make_config(n=10, kernels=make_kernels(sigma=0.5)), 2, workers=1)
        assert ds.accepted_counts(results) == [r.accepted_count for r in results]


def _inside_ball_config(**kwargs):
    law = InitialLaw(velocity=VelocityLaw.TWO_POINT, velocity_offset=0.5)
    return make_config(n=30, horizon=1.0, initial=law, **kwargs)


def test_truncation_coupling_is_exact():
    report = ds.truncation_coupling_check(_inside_ball_config(), level=2, replicates=100)
    assert report.passed
    assert report.method is TestMethod.EXACT
    assert report.replicates == 100
    assert report.details["disagreeing_seeds"] == []
    assert report.details["compared_accepted"] > 0
    assert report.details["compared_events"] >= report.details["compared_accepted"]


def test_truncation_coupling_fails_when_every_run_stops_at_zero():
    # Maxwellian starts put some |Z_0| above 2, so tau_2 = 0 and nothing is compared
    report = ds.truncation_coupling_check(make_config(n=30, horizon=0.5), level=2, replicates=2)
    assert not report.passed
    assert report.details["compared_events"] == 0
    assert report.details["worst"] == "nothing_compared"


def test_cf_estimator_converges_at_root_rate():
    report = ds.cf_consistency_check([1_000, 16_000], substream(5, 6), repeats=16)
    assert report.passed
    assert report.details["slope"] == pytest.approx(-0.5, abs=0.1)


def test_n_scaling_report_lists_every_size():
    report = ds.n_scaling_report(make_config(n=10, horizon=0.5), [50, 200], time=0.5)
    assert [row["n"] for row in report.details["rows"]] == [50, 200]
    assert report.details["rows"][-1]["distance"] == 0.0


class TestTestFunctions:
    @pytest.mark.parametrize("psi", ds.standard_test_functions(), ids=lambda p: p.label)
    def test_bounded_by_one(self, psi, rng):
        x, u = 3 * rng.normal(size=(5000, 3)), 3 * rng.normal(size=(5000, 3))
        assert np.all(np.abs(psi.value(x, u)) <= 1.0 + 1e-6)

    @pytest.mark.parametrize("psi", ds.standard_test_functions(), ids=lambda p: p.label)
    def test_gradient_matches_finite_differences(self, psi, rng):
        x, u = rng.normal(size=(50, 3)), rng.normal(size=(50, 3))
        h = 1e-6
        numeric = np.stack(
            [(psi.value(x + h * e, u) - psi.value(x - h * e, u)) / (2 * h) for e in np.eye(3)], axis=1
        )
        np.testing.assert_allclose(psi.grad_x(x, u), numeric, atol=1e-8)

    def test_hermite_is_normalized(self):
        psi = TestFunction(TestFunctionKind.HERMITE_POLY, multi_index=(2, 0, 0))
        grid = np.linspace(-10, 10, 100_001)
        u = np.zeros((grid.size, 3))
        u[:, 0] = grid
        assert np.max(np.abs(psi.value(np.zeros_like(u), u))) == pytest.approx(1.0, abs=1e-6)

    def test_report_serializes(self, rng):
        report = ds.thinning_calibration_check(rng.poisson(5.0, size=50), 5.0)
        data = report.as_dict()
        assert data["method"] == "chi2"
        assert set(data) >= {"name", "statistic", "threshold", "passed", "details"}


def test_paired_estimates_match_the_gaussian_cf():
    q = kernel_service.build_angular_measure("uniform")
    s = kernel_service.build_speed_factor("constant_one")
    report = ds.tanaka_symmetry_check(s, q, 100_000, _stream(), lambdas=np.array([[1.0, 0.0, 0.0]]))
    assert report.passed
    assert report.details["a_real"][0] == pytest.approx(math.exp(-0.5), abs=0.01)


@pytest.mark.slow
def test_maxwellian_run_stays_maxwellian():
    cfg = make_config(n=10_000, horizon=2.0, kernels=make_kernels(mass=1.0 / math.pi), output_times=(0.0, 1.0, 2.0))
    paths = simulator_service.simulate(cfg).paths
    report = ds.maxwellian_invariance_check(paths, cfg.output_times)
    assert report.passed, report.details["worst"]
