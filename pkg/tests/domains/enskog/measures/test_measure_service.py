# tests/domains/enskog/measures/test_measure_service.py

import numpy as np
import pytest

from app.core.exceptions.exceptions import EmptyRequest, TimeOutOfRange
from app.core.utils.random_streams import substream
from app.domains.enskog.measures.entities.measures import (
    Ensemble,
    EnsembleKind,
    ParticlePath,
    ParticleState,
)
from app.domains.enskog.measures.services import measure_service as ms


def _path(z0=(1.0, 0, 0), times=(), velocities=()):
    return ParticlePath(
        initial=ParticleState(position=np.zeros(3), velocity=np.asarray(z0, dtype=float)),
        event_times=np.asarray(times, dtype=float),
        event_velocities=np.asarray(velocities, dtype=float).reshape(-1, 3),
    )


def _states(rng, m, scale=1.0, t=1.0):
    return Ensemble.from_states(np.zeros((m, 3)), scale * rng.normal(size=(m, 3)), t)


class TestMarginal:
    def test_ballistic_path(self):
        e = Ensemble(EnsembleKind.FROZEN_PATHS, (_path(),), time_horizon=2.0)
        ((x, z),) = ms.marginal_at(e, 2.0)
        np.testing.assert_allclose(x, [2, 0, 0])
        np.testing.assert_allclose(z, [1, 0, 0])

    def test_path_after_one_event(self):
        e = Ensemble(EnsembleKind.FROZEN_PATHS, (_path(times=[1.0], velocities=[[0, 1, 0]]),), time_horizon=2.0)
        ((x, z),) = ms.marginal_at(e, 1.5)
        np.testing.assert_allclose(x, [1, 0.5, 0])
        np.testing.assert_allclose(z, [0, 1, 0])

    def test_path_is_right_continuous(self):
        path = _path(times=[1.0], velocities=[[0, 1, 0]])
        x, z = path.state_at(1.0)
        np.testing.assert_allclose(x, [1, 0, 0])
        np.testing.assert_allclose(z, [0, 1, 0])

    def test_time_outside_horizon(self):
        e = Ensemble(EnsembleKind.FROZEN_PATHS, (_path(),), time_horizon=2.0)
        with pytest.raises(TimeOutOfRange):
            ms.marginal_at(e, 2.5)
        with pytest.raises(TimeOutOfRange):
            ms.marginal_at(e, -0.1)

    def test_states_only_answer_at_their_own_time(self, rng):
        e = _states(rng, 5, t=1.0)
        assert len(ms.marginal_at(e, 1.0)) == 5
        with pytest.raises(TimeOutOfRange):
            ms.marginal_at(e, 0.5)

    def test_unordered_events_are_rejected(self):
        with pytest.raises(ValueError):
            _path(times=[1.0, 0.5], velocities=[[0, 1, 0], [1, 0, 0]])


class TestLawDistance:
    def test_distance_to_itself_is_zero(self, rng):
        e = _states(rng, 500)
        d = ms.law_distance(e, e, 1.0)
        assert d.value == 0.0
        assert d.standard_error == 0.0
        assert d.test_family_size == 4 * 216 + 9

    def test_distinct_laws_are_far_apart(self, rng):
        a = _states(rng, 20_000, scale=1.0)
        b = _states(rng, 20_000, scale=2.0)
        d = ms.law_distance(a, b, 1.0, bootstrap_replicates=20)
        assert d.value > 0.4
        assert 0.0 < d.standard_error < 0.05

    def test_same_law_distance_is_small(self, rng):
        a = _states(rng, 20_000)
        b = _states(rng, 20_000)
        d = ms.law_distance(a, b, 1.0, bootstrap_replicates=20)
        assert d.value < 0.05

    def test_member_order_does_not_matter(self, rng):
        a = _states(rng, 300)
        b = _states(rng, 300, scale=1.5)
        shuffled = Ensemble(a.kind, tuple(a.members[i] for i in rng.permutation(len(a))), a.time_horizon)
        d1 = ms.law_distance(a, b, 1.0, bootstrap_replicates=10)
        d2 = ms.law_distance(shuffled, b, 1.0, bootstrap_replicates=10)
        assert d1.value == d2.value
        assert d1.standard_error == d2.standard_error

    def test_distance_is_symmetric(self, rng):
        a = _states(rng, 300)
        b = _states(rng, 200, scale=1.5)
        d1 = ms.law_distance(a, b, 1.0, bootstrap_replicates=10)
        d2 = ms.law_distance(b, a, 1.0, bootstrap_replicates=10)
        assert d1.value == d2.value
        assert d1.standard_error == d2.standard_error
        assert d1.standard_error > 0.0

    def test_dictionary_can_be_thinned(self):
        grid = ms.frequency_grid(64)
        assert grid.shape == (64, 3)
        assert len(np.unique(grid, axis=0)) == 64
        with pytest.raises(EmptyRequest):
            ms.frequency_grid(0)

    def test_features_are_bounded(self, rng):
        x, z = 10 * rng.normal(size=(1000, 3)), 10 * rng.normal(size=(1000, 3))
        f = ms.feature_matrix(x, z, ms.frequency_grid())
        assert np.all(np.abs(f) <= 1.0)


class TestResample:
    def test_count_must_be_positive(self, rng):
        with pytest.raises(EmptyRequest):
            ms.resample(_states(rng, 5), 0, substream(1, 7))

    def test_draws_members_of_the_input(self, rng):
        e = _states(rng, 10)
        stream = substream(1, 7)
        out = ms.resample(e, 50, stream)
        assert len(out) == 50
        assert all(any(m is n for n in e.members) for m in out.members)
        assert out.seed_lineage[-1] == stream.lineage_id

    def test_split_half(self, rng):
        a, b = ms.split_half(_states(rng, 7))
        assert (len(a), len(b)) == (4, 3)
        with pytest.raises(EmptyRequest):
            ms.split_half(_states(rng, 1))


def test_second_moment(rng):
    m2, se = ms.second_moment(rng.normal(size=(100_000, 3)))
    assert m2 == pytest.approx(3.0, abs=4 * se)
    assert se == pytest.approx(np.sqrt(6.0 / 100_000), rel=0.05)


def test_same_law_distance_shrinks_with_ensemble_size():
    def distance(m):
        rng = np.random.default_rng(m)
        return ms.law_distance(_states(rng, m), _states(rng, m), 1.0, bootstrap_replicates=4).value

    assert distance(10_000) < distance(1_000)
