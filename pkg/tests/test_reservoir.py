"""Reservoir construction and dynamics tests."""

import numpy as np
import pytest

from echochan.errors import RescaleError, ShapeError
from echochan.numerics import spectral_radius
from echochan.reservoir import (
    Activation,
    InitMethod,
    Reservoir,
    ReservoirConfig,
    build,
    harvest,
    init_matrix,
    rescale_to_radius,
    update_state,
)


def small_config(**overrides):
    base = dict(input_dim=2, reservoir_size=50, output_dim=2, seed=7)
    base.update(overrides)
    return ReservoirConfig(**base)


class TestInitMatrix:
    def test_xavier_bound(self):
        m = init_matrix(InitMethod.XAVIER, 100, 100, 1.0, seed=1)
        assert np.abs(m).max() <= 0.1

    def test_zero_sparsity_gives_zero_matrix(self):
        for method in InitMethod:
            m = init_matrix(method, 20, 20, 0.0, seed=2)
            assert not np.any(m)

    def test_he_sample_std(self):
        m = init_matrix(InitMethod.HE, 400, 400, 1.0, seed=3)
        expected = np.sqrt(2.0 / 400)
        assert m.std() == pytest.approx(expected, rel=0.10)

    def test_sparsity_fraction(self):
        m = init_matrix(InitMethod.RANDOM, 200, 200, 0.3, seed=4)
        assert np.count_nonzero(m) / m.size == pytest.approx(0.3, abs=0.03)

    def test_deterministic_per_seed(self):
        a = init_matrix(InitMethod.NORMALIZED_XAVIER, 30, 40, 0.5, seed=5)
        b = init_matrix(InitMethod.NORMALIZED_XAVIER, 30, 40, 0.5, seed=5)
        np.testing.assert_array_equal(a, b)
        c = init_matrix(InitMethod.NORMALIZED_XAVIER, 30, 40, 0.5, seed=6)
        assert np.any(a != c)

    def test_raw_radius_bands(self):
        # means over 5 seeds at two sizes; the full table runs in acceptance
        bands = {
            InitMethod.XAVIER: (0.50, 0.70),
            InitMethod.NORMALIZED_XAVIER: (0.92, 1.20),
            InitMethod.HE: (1.33, 1.55),
        }
        for n in (50, 150):
            for method, (lo, hi) in bands.items():
                mean = np.mean(
                    [spectral_radius(init_matrix(method, n, n, 1.0, seed=s)) for s in range(5)]
                )
                assert lo <= mean <= hi, f"{method.value} at N={n}: {mean}"


class TestRescale:
    def test_scales_down_to_target(self):
        rng = np.random.default_rng(8)
        w = rng.standard_normal((40, 40))
        w = w * (2.0 / spectral_radius(w))
        out = rescale_to_radius(w, 0.5)
        assert spectral_radius(out) == pytest.approx(0.5, abs=1e-10)
        np.testing.assert_allclose(out, w / 4.0, atol=1e-12)

    def test_already_at_target_unchanged(self):
        rng = np.random.default_rng(9)
        w = rescale_to_radius(rng.standard_normal((30, 30)), 0.7)
        again = rescale_to_radius(w, 0.7)
        assert np.abs(again - w).max() < 1e-12

    def test_he_raw_radius_then_rescale(self):
        w = init_matrix(InitMethod.HE, 578, 578, 1.0, seed=10)
        raw = spectral_radius(w)
        assert 1.3 < raw < 1.6
        out = rescale_to_radius(w, 0.5)
        assert spectral_radius(out) == pytest.approx(0.5, abs=1e-4)

    def test_zero_matrix_rejected(self):
        with pytest.raises(RescaleError):
            rescale_to_radius(np.zeros((5, 5)), 0.5)


class TestBuild:
    def test_deterministic_per_seed(self):
        a = build(small_config())
        b = build(small_config())
        np.testing.assert_array_equal(a.w, b.w)
        np.testing.assert_array_equal(a.w_in, b.w_in)
        np.testing.assert_array_equal(a.w_fb, b.w_fb)

    def test_different_seed_differs(self):
        a = build(small_config(seed=7))
        b = build(small_config(seed=8))
        assert np.any(a.w != b.w)

    def test_achieved_radius_matches_target(self):
        r = build(small_config(target_spectral_radius=0.3))
        assert r.achieved_radius == pytest.approx(0.3, abs=1e-4)
        assert spectral_radius(r.w) == pytest.approx(0.3, abs=1e-4)

    def test_allow_unstable_skips_rescale(self):
        r = build(small_config(init=InitMethod.HE, allow_unstable=True))
        assert r.achieved_radius > 1.3

    def test_weights_frozen(self):
        r = build(small_config())
        with pytest.raises(ValueError):
            r.w[0, 0] = 1.0

    def test_no_feedback_gives_zero_w_fb(self):
        r = build(small_config(use_feedback=False))
        assert not np.any(r.w_fb)

    def test_feedback_w_fb_initialized(self):
        r = build(small_config(use_feedback=True))
        assert np.any(r.w_fb)

    def test_zero_sparsity_cannot_rescale(self):
        with pytest.raises(RescaleError):
            build(small_config(sparsity=0.0))

    def test_bad_radius_rejected_without_allow_unstable(self):
        with pytest.raises(ValueError):
            small_config(target_spectral_radius=1.5)
        small_config(target_spectral_radius=1.5, allow_unstable=True)


class TestUpdateState:
    def test_zero_inputs_zero_state_tanh(self):
        r = build(small_config())
        out = update_state(r, np.zeros(50), np.zeros(2), np.zeros(2))
        assert not np.any(out)

    def test_scalar_tanh_value(self):
        r = scalar_reservoir(Activation.TANH)
        out = update_state(r, np.zeros(1), np.ones(1), np.zeros(1))
        assert out[0] == pytest.approx(np.tanh(1.0), abs=1e-9)

    def test_scalar_sigmoid_value(self):
        r = scalar_reservoir(Activation.SIGMOID)
        out = update_state(r, np.zeros(1), np.ones(1), np.zeros(1))
        assert out[0] == pytest.approx(1.0 / (1.0 + np.exp(-1.0)), abs=1e-9)

    def test_dimension_mismatch(self):
        r = build(small_config())
        with pytest.raises(ShapeError):
            update_state(r, np.zeros(49), np.zeros(2))
        with pytest.raises(ShapeError):
            update_state(r, np.zeros(50), np.zeros(3))


def scalar_reservoir(activation):
    """1x1 reservoir with w_in = [1], w = 0, w_fb = 0."""
    config = ReservoirConfig(
        input_dim=1,
        reservoir_size=1,
        output_dim=1,
        activation=activation,
        seed=0,
        allow_unstable=True,
        target_spectral_radius=0.5,
    )
    return Reservoir(
        config=config,
        w_in=np.array([[1.0]]),
        w=np.array([[0.0]]),
        w_fb=np.array([[0.0]]),
        achieved_radius=0.0,
    )


class TestHarvest:
    def test_zero_input_all_states_zero(self):
        r = build(small_config())
        traj = harvest(r, np.zeros((2, 30)))
        assert not np.any(traj.states)

    def test_washout_trims_columns(self):
        r = build(small_config(washout=5))
        rng = np.random.default_rng(0)
        traj = harvest(r, rng.uniform(-1, 1, size=(2, 20)))
        assert traj.states.shape == (50, 15)
        assert traj.t_offset == 5

    def test_washout_exhausts_sequence(self):
        r = build(small_config(washout=20))
        with pytest.raises(ShapeError):
            harvest(r, np.zeros((2, 20)))

    def test_states_in_activation_range(self):
        rng = np.random.default_rng(1)
        inputs = rng.uniform(-2, 2, size=(2, 100))
        for activation in Activation:
            r = build(small_config(activation=activation))
            traj = harvest(r, inputs)
            lo, hi = activation.state_range
            assert traj.states.min() >= lo
            assert traj.states.max() <= hi

    def test_deterministic(self):
        r = build(small_config())
        rng = np.random.default_rng(2)
        inputs = rng.uniform(-1, 1, size=(2, 50))
        a = harvest(r, inputs)
        b = harvest(r, inputs)
        np.testing.assert_array_equal(a.states, b.states)

    def test_fading_memory_from_different_initial_states(self):
        r = build(small_config(reservoir_size=200, target_spectral_radius=0.5, seed=3))
        rng = np.random.default_rng(4)
        inputs = rng.uniform(-1, 1, size=(2, 200))
        x0 = rng.uniform(-1, 1, size=200)
        a = harvest(r, inputs)
        b = harvest(r, inputs, initial_state=x0)
        diff = np.abs(a.states[:, -1] - b.states[:, -1]).max()
        assert diff < 1e-6

    def test_fading_memory_at_rho_09(self):
        r = build(small_config(reservoir_size=100, target_spectral_radius=0.9, seed=5))
        rng = np.random.default_rng(6)
        inputs = rng.uniform(-1, 1, size=(2, 500))
        x0 = rng.uniform(-1, 1, size=100)
        a = harvest(r, inputs)
        b = harvest(r, inputs, initial_state=x0)
        diff = np.abs(a.states[:, -1] - b.states[:, -1]).max()
        assert diff < 1e-6

    def test_feedback_requires_teacher(self):
        r = build(small_config(use_feedback=True))
        with pytest.raises(ShapeError):
            harvest(r, np.zeros((2, 10)))

    def test_teacher_forcing_changes_states(self):
        r = build(small_config(use_feedback=True))
        rng = np.random.default_rng(7)
        inputs = rng.uniform(-1, 1, size=(2, 30))
        teacher_a = np.zeros((2, 30))
        teacher_b = rng.uniform(-1, 1, size=(2, 30))
        a = harvest(r, inputs, teacher=teacher_a)
        b = harvest(r, inputs, teacher=teacher_b)
        assert np.any(a.states != b.states)

    def test_first_step_ignores_teacher_y0(self):
        # y(0) = 0: the first harvested state must not depend on teacher[:, -1]
        r = build(small_config(use_feedback=True))
        rng = np.random.default_rng(8)
        inputs = rng.uniform(-1, 1, size=(2, 10))
        teacher_a = rng.uniform(-1, 1, size=(2, 10))
        teacher_b = teacher_a.copy()
        teacher_b[:, -1] += 1.0
        a = harvest(r, inputs, teacher=teacher_a)
        b = harvest(r, inputs, teacher=teacher_b)
        np.testing.assert_array_equal(a.states[:, 0], b.states[:, 0])
