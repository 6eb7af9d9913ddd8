import math

import numpy as np
import pytest
import scipy.linalg

from effham.fidelity import Trial, TrialSet, average_fidelity
from effham.pauli import HamiltonianSum, PauliString, dense_matrix
from effham.statevector import basis_state
from effham.tfim import EffectiveParams, TFIMParams, initial_states, residual_hamiltonian
from effham.variational import (
    AnsatzCircuit,
    Gate,
    SingularSystemError,
    build_A,
    build_C,
    derivative_state,
    derivative_states,
    evolve_trajectory,
    landscape_point,
    landscape_scan,
    prepare_state,
    solve_velocity,
    step,
    trotter_reference,
)

from conftest import random_state


def dense_prepare(ansatz, theta, initial):
    """Independent circuit product with scipy.linalg.expm on dense generators."""
    psi = np.asarray(initial, dtype=complex)
    for g in ansatz.gates:
        G = dense_matrix(HamiltonianSum.from_terms([(1.0, g.generator.axes)], ansatz.n_sites))
        psi = scipy.linalg.expm(-1j * theta[g.param] * G) @ psi
    return psi


@pytest.fixture(scope="module")
def small():
    h = residual_hamiltonian(TFIMParams(3, 10, 1), EffectiveParams(1, 0.05))
    return h, AnsatzCircuit.trotter_layers(h, 2)


class TestAnsatz:
    def test_trotter_layers_shape(self, small):
        h, an = small
        assert an.n_params == 2 * len(h)
        assert [g.generator for g in an.gates[: len(h)]] == [t.string for t in h]

    def test_rejects_unused_parameter(self):
        with pytest.raises(ValueError):
            AnsatzCircuit((Gate(PauliString("X"), 1),), 2)

    def test_rejects_empty_template(self):
        with pytest.raises(ValueError):
            AnsatzCircuit.trotter_layers(HamiltonianSum.empty(2))

    def test_shared_parameter(self):
        an = AnsatzCircuit((Gate(PauliString("XI"), 0), Gate(PauliString("IZ"), 0)), 1)
        th = [0.4]
        np.testing.assert_allclose(prepare_state(an, th, basis_state(2, 0)), dense_prepare(an, th, basis_state(2, 0)), atol=1e-13)


class TestStates:
    def test_prepare_matches_dense(self, small, rng):
        _, an = small
        theta = rng.normal(size=an.n_params)
        psi0 = random_state(rng, 8)
        np.testing.assert_allclose(prepare_state(an, theta, psi0), dense_prepare(an, theta, psi0), atol=1e-12)

    def test_zero_parameters_identity(self, small, rng):
        _, an = small
        psi0 = random_state(rng, 8)
        np.testing.assert_allclose(prepare_state(an, np.zeros(an.n_params), psi0), psi0, atol=1e-15)

    def test_wrong_parameter_count(self, small):
        _, an = small
        with pytest.raises(ValueError):
            prepare_state(an, [0.1], basis_state(3, 0))

    def test_derivatives_central_difference(self, small, rng):
        _, an = small
        psi0 = random_state(rng, 8)
        theta = rng.uniform(-math.pi, math.pi, an.n_params)
        D = derivative_states(an, theta, psi0)
        eps = 1e-6
        for k in range(an.n_params):
            e = np.zeros(an.n_params)
            e[k] = eps
            fd = (prepare_state(an, theta + e, psi0) - prepare_state(an, theta - e, psi0)) / (2 * eps)
            assert np.linalg.norm(D[:, k] - fd) / np.linalg.norm(D[:, k]) < 1e-6

    def test_derivative_single_index(self, small, rng):
        _, an = small
        theta = rng.normal(size=an.n_params)
        psi0 = basis_state(3, "100")
        np.testing.assert_allclose(derivative_state(an, theta, 3, psi0), derivative_states(an, theta, psi0)[:, 3])
        with pytest.raises(IndexError):
            derivative_state(an, theta, an.n_params, psi0)


class TestLinearSystem:
    def test_single_z_gate(self):
        an = AnsatzCircuit.from_generators(["Z"])
        h = HamiltonianSum.from_dict({"Z": 1.0})
        psi0 = basis_state(1, 0)
        np.testing.assert_allclose(build_A(an, [0.3], psi0), [[1.0]])
        np.testing.assert_allclose(build_C(an, [0.3], h, psi0), [1j])
        assert solve_velocity(build_A(an, [0.3], psi0), build_C(an, [0.3], h, psi0))[0] == pytest.approx(1.0, rel=1e-7)

    def test_a_hermitian_psd(self, small, rng):
        _, an = small
        A = build_A(an, rng.normal(size=an.n_params), random_state(rng, 8))
        np.testing.assert_allclose(A, A.conj().T, atol=1e-13)
        assert np.min(np.linalg.eigvalsh(A)) > -1e-12

    def test_c_zero_for_empty_h(self, small, rng):
        _, an = small
        C = build_C(an, rng.normal(size=an.n_params), HamiltonianSum.empty(3), random_state(rng, 8))
        assert np.all(C == 0)

    def test_step_example(self):
        A = np.array([[2.0, 0], [0, 4.0]])
        C = np.array([2j, -4j])
        np.testing.assert_allclose(step([0.0, 1.0], A, C, 0.1, reg=0.0), [0.1, 0.9])

    def test_step_rejects_bad_dt(self):
        with pytest.raises(ValueError):
            step([0.0], np.eye(1), np.zeros(1), 0.0)

    def test_singular_raises(self):
        with pytest.raises(SingularSystemError):
            solve_velocity(np.zeros((2, 2)), np.zeros(2), reg=0.0)

    def test_regularization_handles_redundant_parameters(self):
        # two identical generators make A rank one
        an = AnsatzCircuit.from_generators(["X", "X"])
        A = build_A(an, [0.1, 0.2], basis_state(1, 0))
        assert np.linalg.matrix_rank(A) == 1
        v = solve_velocity(A, np.array([1j, 1j]))
        assert np.all(np.isfinite(v))


class TestTrajectory:
    def test_single_gate_tracks_exact(self):
        an = AnsatzCircuit.from_generators(["X"])
        h = HamiltonianSum.from_dict({"X": 0.7})
        trials = TrialSet([Trial(basis_state(1, 0), 1.0)])
        traj = evolve_trajectory(an, [0.0], h, trials, 1.0, 0.01, integrator="euler", keep_thetas=True)
        assert traj.thetas[-1, 0, 0] == pytest.approx(0.7, abs=1e-6)
        assert traj.f_ave[-1] == pytest.approx(math.cos(0.7) ** 2, abs=1e-6)

    def test_empty_h_stays_put(self):
        an = AnsatzCircuit.from_generators(["XX", "ZI"])
        trials = TrialSet.shared_time(initial_states(2), 1.0)
        traj = evolve_trajectory(an, [0.0, 0.0], HamiltonianSum.empty(2), trials, 1.0, 0.1)
        np.testing.assert_array_equal(traj.f_ave, 1.0)

    def test_euler_first_order(self, small):
        h, an = small
        trials = TrialSet.shared_time(initial_states(3), 0.5)
        theta0 = np.zeros(an.n_params)
        ref = evolve_trajectory(an, theta0, h, trials, 0.5, 1 / 1600, integrator="rk4", keep_thetas=True).thetas[-1]
        errs = [
            np.linalg.norm(evolve_trajectory(an, theta0, h, trials, 0.5, dt, integrator="euler", keep_thetas=True).thetas[-1] - ref)
            for dt in (1 / 400, 1 / 800)
        ]
        assert 1.8 < errs[0] / errs[1] < 2.2

    def test_integrators_agree(self, small):
        h, an = small
        trials = TrialSet.shared_time(initial_states(3), 0.5)
        f = {
            name: evolve_trajectory(an, np.zeros(an.n_params), h, trials, 0.5, 0.005, integrator=name).f_ave
            for name in ("heun", "rk4")
        }
        np.testing.assert_allclose(f["heun"], f["rk4"], atol=1e-4)

    def test_tracks_trotter(self, small):
        h, an = small
        trials = TrialSet.shared_time(initial_states(3), 1.0)
        traj = evolve_trajectory(an, np.zeros(an.n_params), h, trials, 1.0, 0.002, check_metric=True)
        _, ref = trotter_reference(h, trials, 1.0, 0.002)
        assert np.max(np.abs(traj.f_ave - ref)) < 0.02

    def test_validation(self, small):
        h, an = small
        trials = TrialSet.shared_time(initial_states(3), 1.0)
        with pytest.raises(ValueError):
            evolve_trajectory(an, np.zeros(an.n_params), h, trials, 1.0, 0.3)
        with pytest.raises(ValueError):
            evolve_trajectory(an, np.zeros(an.n_params), h, trials, 1.0, 0.1, integrator="leapfrog")


class TestLandscape:
    def test_point_methods_agree(self, small):
        h, _ = small
        trials = TrialSet.shared_time(initial_states(3), 1.0)
        exact = landscape_point(h, trials, 1.0, "exact")
        assert exact == pytest.approx(average_fidelity(h, trials))
        assert landscape_point(h, trials, 1.0, "trotter", tau=1e-3) == pytest.approx(exact, abs=1e-3)

    def test_scan_grid_and_rows(self):
        model = TFIMParams(3, 10, 1)
        trials = TrialSet.shared_time(initial_states(3), 1.0)
        scan = landscape_scan([0.9, 1.0], [0.0, 0.05, 0.1], model, trials, 1.0, workers=2)
        assert scan.values.shape == (2, 3)
        rows = list(scan.rows())
        assert [r[:2] for r in rows[:3]] == [(0.9, 0.0), (1.0, 0.0), (0.9, 0.05)]
        h = residual_hamiltonian(model, EffectiveParams(1.0, 0.1))
        assert scan.values[1, 2] == pytest.approx(average_fidelity(h, trials), abs=1e-14)

    def test_unknown_method(self, small):
        h, _ = small
        with pytest.raises(ValueError):
            landscape_point(h, TrialSet.shared_time(initial_states(3), 1.0), 1.0, "magic")
