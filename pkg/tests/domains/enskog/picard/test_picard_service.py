# tests/domains/enskog/picard/test_picard_service.py

import math

import numpy as np
import pytest

from app.core.exceptions.exceptions import ConfigInvalid, EmptyRequest, ToleranceBelowNoiseFloor
from app.core.utils.random_streams import StreamPurpose, substream
from app.domains.enskog.measures.entities.measures import Ensemble
from app.domains.enskog.picard.entities.iteration import IterationState, MomentEnvelope, PicardDriverConfig
from app.domains.enskog.measures.services import measure_service as ms
from app.domains.enskog.picard.services import picard_service as ps
from app.domains.enskog.simulator.entities.simulation import InitialLaw, SimulationMode, VelocityLaw
from app.domains.enskog.simulator.services import simulator_service
from tests.factories import make_config


def _start(m=400, horizon=0.5, seed=3, law=None):
    law = law or InitialLaw()
    return ps.initial_law(
        simulator_service.velocity_sampler(law),
        simulator_service.position_sampler(law),
        m,
        horizon,
        substream(seed, StreamPurpose.INITIAL_STATE),
    )


def _frozen_config(n=400, horizon=0.5):
    return make_config(n=n, horizon=horizon, mode=SimulationMode.FROZEN)


class TestInitialLaw:
    def test_paths_are_ballistic(self):
        start = _start(m=5000, horizon=1.0)
        assert start.index == 0
        assert start.distance_to_previous is None
        path = start.law.members[0]
        assert path.event_count == 0
        x1, z1 = path.state_at(1.0)
        np.testing.assert_allclose(x1 - path.initial.position, path.initial.velocity)
        np.testing.assert_array_equal(z1, path.initial.velocity)

    def test_second_moment_trace(self):
        start = _start(m=5000, horizon=1.0)
        assert [t for t, _, _ in start.moment2_trace] == [0.0, 0.5, 1.0]
        for _, m2, se in start.moment2_trace:
            assert m2 == pytest.approx(3.0, abs=4 * se)

    def test_needs_two_paths(self):
        with pytest.raises(EmptyRequest):
            _start(m=1)


class TestIterate:
    def test_iterate_runs_against_the_previous_law(self):
        start = _start()
        state = ps.iterate(start, _frozen_config(), workers=1)
        assert state.index == 1
        assert len(state.law) == 400
        assert len(state.distance_to_previous) == 3
        assert 0.0 < state.max_distance <= 2.0

    def test_mean_field_config_is_rejected(self):
        with pytest.raises(ConfigInvalid):
            ps.iterate(_start(), make_config(n=400, horizon=0.5))

    def test_common_random_numbers_share_one_seed(self):
        cfg = _frozen_config()
        assert ps.iterate_seed(cfg, 1, crn=True) == ps.iterate_seed(cfg, 2, crn=True)
        assert ps.iterate_seed(cfg, 1) != ps.iterate_seed(cfg, 2)


class TestRunToTolerance:
    def test_loose_tolerance_stops_after_one_iterate(self):
        trajectory = ps.run_to_tolerance(PicardDriverConfig(max_iters=5, tol=10.0), _frozen_config(), _start(), workers=1)
        assert trajectory.converged
        assert trajectory.iterations == 1
        assert trajectory.noise_floor > 0.0

    def test_tolerance_below_noise_floor(self):
        with pytest.raises(ToleranceBelowNoiseFloor):
            ps.run_to_tolerance(PicardDriverConfig(tol=1e-6), _frozen_config(), _start())

    def test_given_noise_floor_is_used(self):
        driver = PicardDriverConfig(max_iters=2, tol=1e-6, noise_floor=0.0)
        trajectory = ps.run_to_tolerance(driver, _frozen_config(n=100), _start(m=100), workers=1)
        assert not trajectory.converged
        assert trajectory.iterations == 2
        assert trajectory.noise_floor == 0.0

    @pytest.mark.slow
    def test_distances_shrink_on_short_horizons(self):
        driver = PicardDriverConfig(max_iters=3, tol=1e-3, noise_floor=0.0)
        trajectory = ps.run_to_tolerance(driver, _frozen_config(n=4000, horizon=0.3), _start(m=4000, horizon=0.3))
        distances = [s.max_distance for s in trajectory.states[1:]]
        assert distances[-1] <= distances[0]


def _state_with_trace(trace, index=0):
    law = Ensemble.from_states(np.zeros((2, 3)), np.ones((2, 3)), 0.0)
    return IterationState(index=index, law=law, moment2_trace=trace)


class TestMomentEnvelope:
    def test_exponential_growth_is_recovered(self):
        trace = [(t, 3.0 * math.exp(t), 0.01) for t in (0.0, 0.5, 1.0)]
        envelope = ps.fit_moment_envelope([_state_with_trace(trace)])
        assert envelope.rate == pytest.approx(1.0)
        assert envelope.k1 == pytest.approx(3.0)
        ok, worst = ps.check_moment_envelope(envelope, [_state_with_trace(trace, 1)])
        assert ok
        assert worst == pytest.approx(1 / 1.2)

    def test_decay_is_clipped_to_a_flat_envelope(self):
        trace = [(t, 3.0 * math.exp(-t), 0.01) for t in (0.0, 1.0)]
        envelope = ps.fit_moment_envelope([_state_with_trace(trace)])
        assert envelope.rate == 0.0
        assert envelope.k1 == pytest.approx(3.0)

    def test_violation_is_reported(self):
        envelope = MomentEnvelope(k1=3.0, rate=0.0)
        ok, worst = ps.check_moment_envelope(envelope, [_state_with_trace([(1.0, 10.0, 0.1)])])
        assert not ok
        assert worst == pytest.approx(10.0 / 3.6)

    def test_empty_traces(self):
        with pytest.raises(EmptyRequest):
            ps.fit_moment_envelope([_state_with_trace([])])


@pytest.mark.slow
def test_maxwellian_second_moment_is_kept_along_the_iterates():
    driver = PicardDriverConfig(max_iters=2, tol=1e-3, noise_floor=0.0)
    trajectory = ps.run_to_tolerance(driver, _frozen_config(n=5000, horizon=0.5), _start(m=5000, horizon=0.5))
    for state in trajectory.states:
        for _, m2, se in state.moment2_trace:
            assert abs(m2 - 3.0) < 4 * se


@pytest.mark.slow
def test_fitted_envelope_bounds_every_iterate():
    driver = PicardDriverConfig(max_iters=10, tol=1e-3, noise_floor=0.0)
    trajectory = ps.run_to_tolerance(driver, _frozen_config(n=2000, horizon=0.5), _start(m=2000, horizon=0.5))
    assert trajectory.iterations == 10
    envelope = ps.fit_moment_envelope(trajectory.states[:2])
    ok, worst = ps.check_moment_envelope(envelope, trajectory.states)
    assert ok, worst
    assert worst <= 1.0


@pytest.mark.slow
def test_maxwellian_iterates_stay_within_the_split_half_null():
    start = _start(m=4000, horizon=0.5)
    driver = PicardDriverConfig(max_iters=3, tol=1e-3, noise_floor=0.0)
    trajectory = ps.run_to_tolerance(driver, _frozen_config(n=4000, horizon=0.5), start)
    first, second = ms.split_half(start.law)
    null = [ms.law_distance(first, second, t) for t in (0.0, 0.25, 0.5)]
    null_value = max(d.value for d in null) / math.sqrt(2.0)
    null_se = max(d.standard_error for d in null) / math.sqrt(2.0)
    for state in trajectory.states[1:]:
        se = max(d.standard_error for d in state.distance_to_previous)
        assert state.max_distance <= null_value + 3.0 * math.hypot(se, null_se), state.index


@pytest.mark.slow
def test_two_point_mixture_distances_do_not_grow():
    law = InitialLaw(velocity=VelocityLaw.TWO_POINT, velocity_offset=1.5)
    cfg = make_config(n=10_000, horizon=0.5, mode=SimulationMode.FROZEN, initial=law)
    driver = PicardDriverConfig(max_iters=5, tol=1e-3, noise_floor=0.0)
    states = ps.run_to_tolerance(driver, cfg, _start(m=10_000, horizon=0.5, law=law)).states[1:]
    assert len(states) == 5

    def se(state):
        return max(d.standard_error for d in state.distance_to_previous)

    for before, after in zip(states, states[1:]):
        assert after.max_distance <= before.max_distance + 3.0 * math.hypot(se(before), se(after)), after.index
