import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from esnkit.errors import (
    DimensionError,
    DivergenceError,
    ParameterError,
    SingularDesignError,
)
from esnkit.esn import (
    TrainedReadout,
    classify_by_forecast,
    forecast_free_run,
    readout_outputs,
    run_teacher_forced,
    step,
    train_readout,
)
from esnkit.reservoirs import (
    Normalization,
    Reservoir,
    ReservoirMeta,
    gen_delay_line,
    gen_er,
)
from oracles import highprec_ridge, ring_states

import scipy.sparse as sp


def tiny_reservoir(W, w_in=None, w_ofb=None):
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    return Reservoir(
        W=sp.csr_array(W),
        w_in=np.zeros(n) if w_in is None else np.asarray(w_in, dtype=float),
        w_ofb=np.zeros(n) if w_ofb is None else np.asarray(w_ofb, dtype=float),
        meta=ReservoirMeta(family="ER", n=n, avg_degree=0.0, seed=None),
    )


class TestStep:
    def test_all_zero(self):
        res = tiny_reservoir(np.zeros((4, 4)))
        assert_array_equal(step(res, np.ones(4), 2.0, 3.0), np.zeros(4))

    def test_scalar_closed_form(self):
        res = tiny_reservoir([[0.0]], w_in=[1.0])
        assert step(res, np.zeros(1), 0.5)[0] == pytest.approx(
            0.46211715726000974, abs=1e-12)

    def test_two_neuron_highprec(self):
        import mpmath as mp
        W = np.array([[0.3, -0.7], [1.1, 0.2]])
        w_in = np.array([0.5, -0.25])
        w_ofb = np.array([0.1, 0.9])
        res = tiny_reservoir(W, w_in, w_ofb)
        x_prev = np.array([0.2, -0.6])
        got = step(res, x_prev, 0.7, -0.3)
        with mp.workdps(40):
            for i in range(2):
                z = (mp.mpf(W[i, 0]) * mp.mpf(x_prev[0])
                     + mp.mpf(W[i, 1]) * mp.mpf(x_prev[1])
                     + mp.mpf(w_in[i]) * mp.mpf(0.7)
                     + mp.mpf(w_ofb[i]) * mp.mpf(-0.3))
                assert got[i] == pytest.approx(float(mp.tanh(z)), abs=1e-14)

    def test_dimension_check(self):
        res = tiny_reservoir(np.zeros((3, 3)))
        with pytest.raises(DimensionError):
            step(res, np.zeros(4), 0.0)


class TestTeacherForcedRun:
    def test_zero_input_zero_states(self):
        res = gen_er(20, 4, seed=0)
        run = run_teacher_forced(res, np.zeros(50))
        assert_array_equal(run.states, np.zeros((50, 20)))

    def test_teacher_ignored_without_feedback(self, rng):
        res = gen_er(15, 3, seed=1)
        u = rng.uniform(-1, 1, 80)
        a = run_teacher_forced(res, u, teacher=rng.standard_normal(80))
        b = run_teacher_forced(res, u, teacher=None)
        assert_array_equal(a.states, b.states)

    def test_feedback_changes_states(self, rng):
        res = gen_er(15, 3, seed=1, feedback=True)
        u = rng.uniform(-1, 1, 80)
        a = run_teacher_forced(res, u, teacher=np.ones(80))
        b = run_teacher_forced(res, u, teacher=None)
        assert not np.allclose(a.states, b.states)

    def test_delay_line_impulse_matches_scalar_recursion(self):
        res = gen_delay_line(5, 0.9, input_gain=0.1)
        u = np.zeros(12)
        u[0] = 1.0
        run = run_teacher_forced(res, u)
        assert_allclose(run.states, ring_states(5, 0.9, 0.1, 0, u), atol=1e-14)
        # neuron k first activates at time k
        for k in range(5):
            assert_array_equal(run.states[:k, k], np.zeros(k))
            assert run.states[k, k] != 0.0

    def test_states_bounded(self, rng):
        res = gen_er(30, 6, seed=2, normalization=Normalization("spectral_radius", 1.2))
        run = run_teacher_forced(res, 5 * rng.standard_normal(100))
        assert np.all(np.abs(run.states) < 1.0)

    def test_length_mismatch(self):
        res = gen_er(10, 2, seed=0, feedback=True)
        with pytest.raises(DimensionError):
            run_teacher_forced(res, np.zeros(10), teacher=np.zeros(9))

    def test_washout_bound(self):
        res = gen_er(10, 2, seed=0)
        with pytest.raises(ParameterError):
            run_teacher_forced(res, np.zeros(10), washout=10)

    def test_echo_state_contraction(self, rng):
        # with no input the state of a sub-unit-radius reservoir dies out
        res = gen_er(40, 8, seed=5, normalization=Normalization("spectral_radius", 0.9))
        x = rng.uniform(-0.9, 0.9, 40)
        norms = []
        for _ in range(400):
            x = step(res, x, 0.0)
            norms.append(np.linalg.norm(x))
        assert norms[-1] < 1e-12
        tail = np.array(norms[50:])
        assert np.all(np.diff(tail) <= 1e-15)

    def test_linearization_agreement_small_gain(self, rng):
        res = gen_er(100, 10, seed=9,
                     normalization=Normalization("spectral_radius", 0.9),
                     input_gain=1e-4)
        u = rng.uniform(-1, 1, 500)
        tanh_run = run_teacher_forced(res, u)
        lin_run = run_teacher_forced(res, u, activation="identity")
        rel = (np.linalg.norm(tanh_run.states - lin_run.states)
               / np.linalg.norm(lin_run.states))
        assert rel < 1e-6


class TestTrainReadout:
    def make_run(self, rng, n=20, T=200):
        res = gen_er(n, 5, seed=3)
        u = rng.uniform(-1, 1, T)
        return run_teacher_forced(res, u, washout=20)

    def test_input_column_reproduces_target(self, rng):
        run = self.make_run(rng)
        readout = train_readout(run, run.inputs, ridge=0.0)
        expected = np.zeros(21)
        expected[-1] = 1.0
        assert_allclose(readout.w_out, expected, atol=1e-8)

    def test_zero_target(self, rng):
        run = self.make_run(rng)
        readout = train_readout(run, np.zeros(len(run.inputs)), ridge=1e-8)
        assert_array_equal(readout.w_out, np.zeros(21))
        assert readout.train_nrmse == 0.0

    def test_matches_extended_precision_oracle(self, rng):
        run = self.make_run(rng)
        target = rng.standard_normal(len(run.inputs))
        readout = train_readout(run, target, ridge=1e-6)
        design = run.design_matrix()[run.washout:]
        expected = highprec_ridge(design, target[run.washout:], 1e-6)
        assert_allclose(readout.w_out, expected,
                        rtol=1e-6, atol=1e-9 * np.abs(expected).max())

    def test_rank_deficient_raises_and_advises(self, rng):
        res = tiny_reservoir(np.zeros((3, 3)))  # states stay identically zero
        u = rng.uniform(-1, 1, 50)
        run = run_teacher_forced(res, u)
        with pytest.raises(SingularDesignError, match="ridge"):
            train_readout(run, u, ridge=0.0)
        train_readout(run, u, ridge=1e-8)  # regularized fit succeeds

    def test_needs_enough_samples(self, rng):
        res = gen_er(30, 5, seed=1)
        run = run_teacher_forced(res, rng.uniform(-1, 1, 25))
        with pytest.raises(ParameterError):
            train_readout(run, np.zeros(25))

    def test_perturbing_weights_never_improves(self, rng):
        run = self.make_run(rng)
        target = rng.standard_normal(len(run.inputs))
        ridge = 1e-4
        readout = train_readout(run, target, ridge=ridge)
        design = run.design_matrix()[run.washout:]
        y = target[run.washout:]

        def objective(w):
            r = y - design @ w
            return r @ r + ridge * (w @ w)

        base = objective(readout.w_out)
        for i in range(len(readout.w_out)):
            for delta in (1e-3, -1e-3):
                w = readout.w_out.copy()
                w[i] += delta
                assert objective(w) >= base - 1e-12 * base

    def test_basis_change_preserves_predictions(self, rng):
        run = self.make_run(rng)
        target = rng.standard_normal(len(run.inputs))
        readout = train_readout(run, target, ridge=0.0)
        preds = readout_outputs(run, readout)[run.washout:]

        A = np.eye(21) + 0.3 * rng.standard_normal((21, 21))
        design = run.design_matrix() @ A
        from esnkit.esn import solve_ridge
        w2 = solve_ridge(design[run.washout:], target[run.washout:], 0.0)
        preds2 = design[run.washout:] @ w2
        assert_allclose(preds2, preds, rtol=1e-6, atol=1e-9)


class TestFreeRun:
    def test_zero_readout(self):
        res = gen_er(10, 2, seed=0)
        readout = TrainedReadout(np.zeros(11), 0.0, 0.0)
        ys = forecast_free_run(res, readout, np.zeros(10), 1.0, 7)
        assert_array_equal(ys, np.zeros(7))

    def test_horizon_one_is_single_application(self, rng):
        res = gen_er(12, 3, seed=4)
        u = rng.uniform(-1, 1, 60)
        run = run_teacher_forced(res, u, washout=10)
        readout = train_readout(run, rng.standard_normal(60))
        x = run.states[30]
        expected = readout.w_out[:-1] @ x + readout.w_out[-1] * u[30]
        got = forecast_free_run(res, readout, x, u[30], 1)
        assert got[0] == pytest.approx(expected)

    def test_divergence_reports_step(self):
        res = tiny_reservoir(np.zeros((2, 2)))
        readout = TrainedReadout(np.array([0.0, 0.0, 2.0]), 0.0, 0.0)
        with pytest.raises(DivergenceError) as err:
            forecast_free_run(res, readout, np.zeros(2), 1.0, 100)
        assert 0 < err.value.step <= 100

    def test_horizon_validation(self):
        res = gen_er(5, 1, seed=0)
        with pytest.raises(ParameterError):
            forecast_free_run(res, TrainedReadout(np.zeros(6), 0, 0),
                              np.zeros(5), 0.0, 0)


class TestClassification:
    def test_own_training_series_wins(self):
        t = np.arange(40)
        series_a = np.sin(2 * np.pi * 0.1 * t)
        series_b = np.sign(np.sin(2 * np.pi * 0.31 * t)) * 0.8
        res = gen_er(20, 4, seed=6)
        label, scores = classify_by_forecast(
            {0: [series_a], 1: [series_b]}, series_a, res, washout=3)
        assert label == 0
        assert scores[0] < scores[1]

    def test_tie_breaks_to_lowest_label(self):
        t = np.arange(40)
        series = np.sin(2 * np.pi * 0.1 * t)
        res = gen_er(20, 4, seed=6)
        label, scores = classify_by_forecast(
            {2: [series.copy()], 5: [series.copy()]}, series, res, washout=3)
        assert scores[2] == scores[5]
        assert label == 2

    def test_needs_two_classes(self):
        res = gen_er(10, 2, seed=0)
        with pytest.raises(ParameterError):
            classify_by_forecast({0: [np.zeros(30)]}, np.zeros(30), res)

    def test_insufficient_samples(self):
        res = gen_er(50, 5, seed=0)
        short = np.sin(np.arange(20))
        with pytest.raises(SingularDesignError):
            classify_by_forecast({0: [short], 1: [short]}, short, res)

    def test_two_band_synthetic_benchmark(self, rng):
        from esnkit.esn import score_against_classes, train_class_readouts

        def sinusoid(freq, length=60):
            phase = rng.uniform(0, 2 * np.pi)
            t = np.arange(length)
            return np.sin(2 * np.pi * freq * t + phase) + 0.1 * rng.standard_normal(length)

        train = {0: [sinusoid(0.05) for _ in range(50)],
                 1: [sinusoid(0.30) for _ in range(50)]}
        tests = [(label, sinusoid(freq))
                 for label, freq in ((0, 0.05), (1, 0.30)) for _ in range(10)]
        res = gen_er(100, 10, seed=8,
                     normalization=Normalization("spectral_radius", 1.0))
        readouts = train_class_readouts(train, res, washout=5)
        failures = sum(
            score_against_classes(readouts, series, res, washout=5)[0] != label
            for label, series in tests)
        assert failures / len(tests) <= 0.1
