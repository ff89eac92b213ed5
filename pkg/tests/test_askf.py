import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tankfdi.askf import (
    DiscreteModel,
    FilterState,
    ScalingParams,
    innovation_decomposition,
    predict,
    run_askf,
    update,
    update_scaling,
)
from tankfdi.errors import InvalidParameterError, SingularityError, UnsupportedShapeError
from tankfdi.model import benchmark_params, build_healthy, discretize_zoh


def scalar_model(A=1.0, B=1.0, Theta=1.0, Q=1.0, R=1.0):
    return DiscreteModel(A_k=[[A]], B_k=[[B]], Theta_k=[[Theta]], Q_k=[[Q]], R_k=[[R]])


def random_model(rng, n=3, p=2):
    A = rng.normal(size=(n, n))
    A *= 0.9 / max(np.abs(np.linalg.eigvals(A)).max(), 1e-6)
    B = rng.normal(size=(n, p))
    Theta = rng.normal(size=(1, n))
    q_diag = rng.uniform(0.1, 1.0, size=p)
    r = rng.uniform(0.1, 1.0)
    return DiscreteModel(A_k=A, B_k=B, Theta_k=Theta, Q_k=np.diag(q_diag), R_k=[[r]])


def plain_kf(model, xbar0, P0, inputs, measurements):
    """Textbook Kalman filter, the a=1 reduction oracle."""
    x = np.array(xbar0, dtype=float)
    P = np.array(P0, dtype=float)
    noise = model.B_k @ model.Q_k @ model.B_k.T
    eye = np.eye(model.n)
    xs, Ps = [x.copy()], [P.copy()]
    for u_k, y_k in zip(inputs, measurements):
        x = model.A_k @ x + model.B_k @ np.atleast_1d(u_k)
        P = model.A_k @ P @ model.A_k.T + noise
        S = model.Theta_k @ P @ model.Theta_k.T + model.R_k
        K = P @ model.Theta_k.T @ np.linalg.inv(S)
        x = x + K @ (np.atleast_1d(y_k) - model.Theta_k @ x)
        P = (eye - K @ model.Theta_k) @ P
        P = 0.5 * (P + P.T)
        xs.append(x.copy())
        Ps.append(P.copy())
    return xs, Ps


class TestTypes:
    def test_model_validation(self):
        with pytest.raises(InvalidParameterError):
            DiscreteModel(A_k=np.ones((2, 3)), B_k=np.ones((2, 1)), Theta_k=np.ones((1, 2)), Q_k=[[1.0]], R_k=[[1.0]])
        with pytest.raises(InvalidParameterError):
            scalar_model(Q=-1.0)
        with pytest.raises(InvalidParameterError):
            scalar_model(R=0.0)
        with pytest.raises(InvalidParameterError):
            DiscreteModel(A_k=np.eye(2), B_k=np.eye(2), Theta_k=np.ones((1, 2)), Q_k=[[1.0, 0.5], [0.4, 1.0]], R_k=[[1.0]])

    def test_model_shapes_and_gram(self):
        m = random_model(np.random.default_rng(0))
        assert (m.n, m.p, m.q) == (3, 2, 1)
        np.testing.assert_allclose(m.noise_gram(), m.B_k @ m.Q_k @ m.B_k.T, atol=0)

    def test_scaling_params_validation(self):
        ScalingParams(a=1.0, b=0.0, c=0.0)
        ScalingParams(a=1.0 / 3.0, b=1.0 / 3.0, c=1.0 / 3.0)
        with pytest.raises(InvalidParameterError):
            ScalingParams(a=0.5, b=0.5, c=0.5)
        with pytest.raises(InvalidParameterError):
            ScalingParams(a=-0.5, b=1.0, c=0.5)
        with pytest.raises(InvalidParameterError):
            ScalingParams(a=1.0, b=0.0, c=0.0, phi0=-1.0)

    def test_filter_state_validation(self):
        FilterState(xhat=np.zeros(2), P=np.eye(2), phi=1.0)
        with pytest.raises(InvalidParameterError):
            FilterState(xhat=np.zeros(2), P=np.eye(2), phi=-0.1)
        with pytest.raises(InvalidParameterError):
            FilterState(xhat=np.zeros(2), P=-np.eye(2), phi=1.0)

    def test_filter_state_resymmetrizes(self):
        P = np.array([[1.0, 0.2], [0.1, 1.0]])
        st_ = FilterState(xhat=np.zeros(2), P=P, phi=1.0)
        np.testing.assert_array_equal(st_.P, st_.P.T)


class TestPredict:
    def test_unit_scalar_case(self):
        state = FilterState(xhat=[0.0], P=[[1.0]], phi=1.0)
        xpred, Ppred = predict(state, scalar_model(), [0.0])
        assert Ppred[0, 0] == 2.0

    def test_zero_scaling_discounts_noise(self):
        state = FilterState(xhat=[1.0], P=[[1.0]], phi=0.0)
        _, Ppred = predict(state, scalar_model(A=2.0), [0.0])
        assert Ppred[0, 0] == 4.0

    def test_scaled_hand_case(self):
        state = FilterState(xhat=[0.0], P=[[4.0]], phi=2.0)
        _, Ppred = predict(state, scalar_model(A=0.5, Q=2.0), [0.0])
        assert Ppred[0, 0] == pytest.approx(5.0, abs=1e-15)

    def test_mean_uses_known_input(self):
        state = FilterState(xhat=[1.0], P=[[1.0]], phi=1.0)
        xpred, _ = predict(state, scalar_model(A=0.5, B=2.0), [3.0])
        assert xpred[0] == pytest.approx(6.5, abs=1e-15)


class TestInnovationDecomposition:
    def test_unit_case(self):
        state = FilterState(xhat=[0.0], P=[[1.0]], phi=1.0)
        parts = innovation_decomposition(state, scalar_model())
        assert (parts.beta, parts.gamma, parts.alpha) == (2.0, 1.0, 3.0)
        assert parts.gamma_unit == 1.0
        assert parts.scaling_identifiable

    def test_zero_scaling(self):
        state = FilterState(xhat=[0.0], P=[[1.0]], phi=0.0)
        parts = innovation_decomposition(state, scalar_model())
        assert parts.gamma == 0.0
        assert parts.alpha == parts.beta

    def test_dominant_measurement_noise(self):
        state = FilterState(xhat=[0.0], P=[[1.0]], phi=1.0)
        parts = innovation_decomposition(state, scalar_model(R=100.0))
        assert parts.alpha == pytest.approx(102.0, abs=1e-12)
        assert parts.alpha > 100.0

    def test_invisible_process_noise_flagged(self):
        m = DiscreteModel(A_k=np.eye(2), B_k=[[1.0], [0.0]], Theta_k=[[0.0, 1.0]], Q_k=[[1.0]], R_k=[[1.0]])
        state = FilterState(xhat=np.zeros(2), P=np.eye(2), phi=1.0)
        parts = innovation_decomposition(state, m)
        assert parts.gamma_unit == 0.0
        assert not parts.scaling_identifiable

    def test_vector_measurement_rejected(self):
        m = DiscreteModel(A_k=np.eye(2), B_k=np.eye(2), Theta_k=np.eye(2), Q_k=np.eye(2), R_k=np.eye(2))
        state = FilterState(xhat=np.zeros(2), P=np.eye(2), phi=1.0)
        with pytest.raises(UnsupportedShapeError):
            innovation_decomposition(state, m)


class TestUpdateScaling:
    def test_pure_reset_weights(self):
        params = ScalingParams(a=1.0, b=0.0, c=0.0, phi0=1.0)
        for nu in (0.0, 1.0, 37.0):
            assert update_scaling(params, 5.0, nu, beta=2.0, gamma_unit=1.0) == 1.0

    def test_innovation_matching_beta_drops_scaling(self):
        params = ScalingParams(a=0.25, b=0.25, c=0.5, phi0=1.0)
        phi = update_scaling(params, 2.0, np.sqrt(2.0), beta=2.0, gamma_unit=1.0)
        assert phi == pytest.approx(0.25 * 1.0 + 0.25 * 2.0, abs=1e-12)

    def test_pure_mismatch_weights(self):
        params = ScalingParams(a=0.0, b=0.0, c=1.0, phi0=1.0)
        phi = update_scaling(params, 0.7, np.sqrt(5.0), beta=2.0, gamma_unit=1.0)
        assert phi == pytest.approx(3.0, abs=1e-12)

    def test_clipped_at_zero(self):
        params = ScalingParams(a=0.0, b=0.0, c=1.0, phi0=1.0)
        assert update_scaling(params, 1.0, 0.0, beta=50.0, gamma_unit=1.0) == 0.0

    def test_consistency_branch(self):
        params = ScalingParams(a=0.2, b=0.3, c=0.5, phi0=1.0)
        phi_prev = 1.5
        alpha = 2.0 + phi_prev * 1.0
        phi = update_scaling(params, phi_prev, np.sqrt(alpha), beta=2.0, gamma_unit=1.0)
        assert phi == pytest.approx(0.2 * 1.0 + (0.3 + 0.5) * phi_prev, abs=1e-12)

    def test_degenerate_gamma_freezes_with_warning(self):
        params = ScalingParams(a=0.0, b=0.0, c=1.0, phi0=1.0)
        with pytest.warns(RuntimeWarning):
            phi = update_scaling(params, 0.7, 5.0, beta=2.0, gamma_unit=0.0)
        assert phi == 0.7

    def test_monotone_in_squared_innovation(self):
        params = ScalingParams(a=0.2, b=0.3, c=0.5, phi0=1.0)
        values = [update_scaling(params, 1.0, nu, beta=2.0, gamma_unit=0.5) for nu in np.linspace(0.0, 10.0, 40)]
        assert np.all(np.diff(values) >= -1e-15)

    @given(
        split=st.tuples(
            st.floats(0.0, 1.0, allow_nan=False), st.floats(0.0, 1.0, allow_nan=False)
        ),
        phi_prev=st.floats(0.0, 1e6, allow_nan=False),
        nu=st.floats(-1e6, 1e6, allow_nan=False),
        beta=st.floats(1e-9, 1e6, allow_nan=False),
        gamma_unit=st.floats(1e-9, 1e6, allow_nan=False),
        phi0=st.floats(0.0, 1e3, allow_nan=False),
    )
    @settings(max_examples=200, deadline=None)
    def test_never_negative(self, split, phi_prev, nu, beta, gamma_unit, phi0):
        lo, hi = sorted(split)
        params = ScalingParams(a=lo, b=hi - lo, c=1.0 - hi, phi0=phi0)
        phi = update_scaling(params, phi_prev, nu, beta=beta, gamma_unit=gamma_unit)
        assert phi >= 0.0
        assert np.isfinite(phi)


class TestUpdate:
    def test_scalar_gain_and_covariance(self):
        m = scalar_model()
        state = FilterState(xhat=[0.0], P=[[1.0]], phi=1.0)
        new = update(state, m, np.array([0.0]), np.array([[2.0]]), [3.0])
        # K = 2/3 on this data, so the posterior lands at 2 with P = 2/3.
        assert new.xhat[0] == pytest.approx(2.0, abs=1e-12)
        assert new.P[0, 0] == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert new.k == 1

    def test_zero_measurement_matrix_changes_nothing(self):
        m = scalar_model(Theta=0.0)
        state = FilterState(xhat=[1.0], P=[[1.0]], phi=1.0)
        new = update(state, m, np.array([1.5]), np.array([[2.0]]), [99.0])
        assert new.xhat[0] == 1.5
        assert new.P[0, 0] == 2.0

    def test_exact_measurement_limit(self):
        m = DiscreteModel(A_k=np.eye(1), B_k=np.eye(1), Theta_k=np.eye(1), Q_k=np.eye(1), R_k=[[1e-12]])
        state = FilterState(xhat=[0.0], P=[[1.0]], phi=1.0)
        new = update(state, m, np.array([0.0]), np.array([[1.0]]), [0.7])
        assert new.xhat[0] == pytest.approx(0.7, abs=1e-6)

    def test_singular_innovation_covariance(self):
        m = scalar_model(R=1.0)
        state = FilterState(xhat=[0.0], P=[[1.0]], phi=1.0)
        with pytest.raises(SingularityError):
            update(state, m, np.array([0.0]), np.array([[-1.0]]), [0.0])

    def test_joseph_form_agreement(self):
        rng = np.random.default_rng(21)
        m = random_model(rng)
        L = rng.normal(size=(3, 3))
        Ppred = L @ L.T
        state = FilterState(xhat=np.zeros(3), P=np.eye(3), phi=1.0)
        new = update(state, m, np.zeros(3), Ppred, [0.3])
        S = m.Theta_k @ Ppred @ m.Theta_k.T + m.R_k
        K = Ppred @ m.Theta_k.T @ np.linalg.inv(S)
        IKH = np.eye(3) - K @ m.Theta_k
        joseph = IKH @ Ppred @ IKH.T + K @ m.R_k @ K.T
        np.testing.assert_allclose(new.P, joseph, atol=1e-9)


class TestRunAskf:
    def test_reduces_to_plain_kf_with_a_one(self):
        rng = np.random.default_rng(77)
        m = random_model(rng)
        params = ScalingParams(a=1.0, b=0.0, c=0.0, phi0=1.0)
        N = 300
        inputs = [rng.normal(size=2) for _ in range(N)]
        meas = [rng.normal(size=1) for _ in range(N)]
        xbar0, P0 = np.zeros(3), np.eye(3)
        states = run_askf(m, params, (xbar0, P0), inputs, meas)
        xs, Ps = plain_kf(m, xbar0, P0, inputs, meas)
        for got, x_ref, P_ref in zip(states, xs, Ps):
            np.testing.assert_allclose(got.xhat, x_ref, atol=1e-12)
            np.testing.assert_allclose(got.P, P_ref, atol=1e-12)
            assert got.phi == 1.0

    def test_tracks_noise_free_self_generated_data(self):
        ss = build_healthy(benchmark_params())
        Ad, Bd = discretize_zoh(ss.A, ss.B, 0.01)
        m = DiscreteModel(A_k=Ad, B_k=Bd, Theta_k=ss.C, Q_k=[[1e-4]], R_k=[[1e-4]])
        params = ScalingParams(a=1.0 / 3.0, b=1.0 / 3.0, c=1.0 / 3.0, phi0=1.0)
        N = 200
        x = np.array([2.0, 1.0, 3.0])
        inputs, meas, truth = [], [], [x.copy()]
        for _ in range(N):
            x = Ad @ x + Bd[:, 0] * 1.0
            inputs.append([1.0])
            meas.append(ss.C @ x)
            truth.append(x.copy())
        states = run_askf(m, params, (truth[0], np.zeros((3, 3))), inputs, meas)
        errs = [np.abs(s.xhat - t).max() for s, t in zip(states, truth)]
        assert max(errs) <= 1e-8
        assert all(s.phi >= 0.0 for s in states)

    def test_covariance_stays_psd_over_many_random_steps(self):
        rng = np.random.default_rng(5)
        m = random_model(rng)
        params = ScalingParams(a=0.2, b=0.3, c=0.5, phi0=1.0)
        N = 10_000
        inputs = rng.normal(size=(N, 2))
        meas = rng.normal(size=(N, 1)) * 3.0
        states = run_askf(m, params, (np.zeros(3), np.eye(3)), list(inputs), list(meas))
        for s in states[:: max(1, N // 500)]:
            assert np.min(np.linalg.eigvalsh(s.P)) >= -1e-9
            assert s.phi >= 0.0
        assert np.min(np.linalg.eigvalsh(states[-1].P)) >= -1e-9

    def test_scaling_reacts_to_injected_disturbance(self):
        rng = np.random.default_rng(13)
        m = random_model(rng)
        params = ScalingParams(a=0.1, b=0.3, c=0.6, phi0=1.0)
        N = 120
        inputs = [np.zeros(2)] * N
        quiet = [np.zeros(1)] * N
        loud = [np.zeros(1)] * (N // 2) + [np.full(1, 25.0)] * (N - N // 2)
        phi_quiet = run_askf(m, params, (np.zeros(3), np.eye(3)), inputs, quiet)[-1].phi
        phi_loud = run_askf(m, params, (np.zeros(3), np.eye(3)), inputs, loud)[-1].phi
        assert phi_loud > phi_quiet

    def test_length_mismatch_rejected(self):
        m = scalar_model()
        params = ScalingParams(a=1.0, b=0.0, c=0.0)
        with pytest.raises(InvalidParameterError):
            run_askf(m, params, (np.zeros(1), np.eye(1)), [[0.0]], [[0.0], [0.0]])
