import math

import numpy as np
import pytest
import scipy.linalg

from effham.pauli import HamiltonianSum, HamiltonianTerm, PauliString, dense_matrix
from effham.statevector import (
    apply_exp_pauli_term,
    basis_state,
    exact_evolve,
    inner_product,
    read_state_csv,
    trotter_evolve,
    write_state_csv,
)
from effham.tfim import EffectiveParams, TFIMParams, build_tfim, residual_hamiltonian

from conftest import random_state


def random_sum(rng, n, n_terms=6):
    terms = []
    for _ in range(n_terms):
        axes = "".join(rng.choice(list("IXYZ"), size=n))
        terms.append((float(rng.normal()), axes))
    return HamiltonianSum.from_terms(terms, n)


class TestExact:
    def test_empty_is_identity(self, rng):
        psi = random_state(rng, 8)
        np.testing.assert_array_equal(exact_evolve(HamiltonianSum.empty(3), psi, 1.7), psi)

    def test_zero_time_is_identity(self, rng):
        psi = random_state(rng, 8)
        np.testing.assert_array_equal(exact_evolve(random_sum(rng, 3), psi, 0.0), psi)

    def test_z_eigenstate_phase(self):
        h = HamiltonianSum.from_dict({"Z": 1.0})
        out = exact_evolve(h, basis_state(1, "0"), 0.8)
        np.testing.assert_allclose(out, [np.exp(-0.8j), 0], atol=1e-14)

    def test_matches_expm(self, rng):
        h = random_sum(rng, 4)
        psi = random_state(rng, 16)
        ref = scipy.linalg.expm(-1j * 0.9 * dense_matrix(h)) @ psi
        np.testing.assert_allclose(exact_evolve(h, psi, 0.9), ref, atol=1e-12)

    def test_unitary_and_group_property(self, rng):
        h = random_sum(rng, 4, 10)
        psi = random_state(rng, 16)
        a = exact_evolve(h, exact_evolve(h, psi, 0.4), 1.1)
        b = exact_evolve(h, psi, 1.5)
        assert abs(np.linalg.norm(b) - 1) < 1e-10
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_chain_example_regression(self, oracle):
        h = residual_hamiltonian(TFIMParams(5, 10, 1), EffectiveParams(1, 0.05))
        psi = basis_state(5, "10000")
        out = exact_evolve(h, psi, 2 * math.pi)
        re, im = oracle["trial_amplitudes_exact_point"][0]
        assert inner_product(psi, out) == pytest.approx(complex(re, im), abs=1e-10)
        assert abs(inner_product(psi, out)) ** 2 > 0.95


class TestPauliExponential:
    def test_zero_coefficient(self, rng):
        psi = random_state(rng, 4)
        out = apply_exp_pauli_term(HamiltonianTerm(0.0, PauliString("XY")), 0.3, psi)
        np.testing.assert_array_equal(out, psi)

    def test_half_x_rotation(self):
        out = apply_exp_pauli_term(HamiltonianTerm(1.0, PauliString("X")), math.pi / 2, basis_state(1, "0"))
        np.testing.assert_allclose(out, [0, -1j], atol=1e-15)

    @pytest.mark.parametrize("axes", ["XYZ", "ZZI", "YIY", "IXI"])
    def test_matches_exact(self, rng, axes):
        term = HamiltonianTerm(float(rng.normal()), PauliString(axes))
        psi = random_state(rng, 8)
        ref = exact_evolve(HamiltonianSum((term,), 3), psi, 0.37)
        np.testing.assert_allclose(apply_exp_pauli_term(term, 0.37, psi), ref, atol=1e-12)


class TestTrotter:
    def test_commuting_terms_exact(self, rng):
        h = HamiltonianSum.from_dict({"ZZI": 0.7, "IZZ": -1.3, "ZIZ": 0.4, "IZI": 2.0})
        psi = random_state(rng, 8)
        for n in (1, 3, 17):
            np.testing.assert_allclose(trotter_evolve(h, psi, 1.9, n), exact_evolve(h, psi, 1.9), atol=1e-12)

    def test_norm_preserved(self, rng):
        h = random_sum(rng, 4, 8)
        psi = random_state(rng, 16)
        assert abs(np.linalg.norm(trotter_evolve(h, psi, 2.0, 7)) - 1) < 1e-10

    def test_first_order_convergence(self):
        h = build_tfim(TFIMParams(3, 10, 1))
        psi = random_state(np.random.default_rng(7), 8)
        ref = exact_evolve(h, psi, 1.0)
        errs = [np.linalg.norm(trotter_evolve(h, psi, 1.0, n) - ref) for n in (50, 100, 200)]
        assert 1.8 < errs[0] / errs[1] < 2.2
        assert 1.8 < errs[1] / errs[2] < 2.2

    def test_chain_step_matches_exact_fidelity(self, chain_trials):
        h = residual_hamiltonian(TFIMParams(5, 10, 1), EffectiveParams(1, 0.05))
        for trial in chain_trials:
            psi = trial.initial_state
            a = abs(inner_product(psi, exact_evolve(h, psi, 2 * math.pi))) ** 2
            b = abs(inner_product(psi, trotter_evolve(h, psi, 2 * math.pi, 1000))) ** 2
            assert abs(a - b) < 1e-3

    def test_rejects_zero_steps(self):
        with pytest.raises(ValueError):
            trotter_evolve(HamiltonianSum.empty(1), basis_state(1, 0), 1.0, 0)


class TestInnerProduct:
    def test_basics(self, rng):
        s = random_state(rng, 8)
        assert inner_product(s, s) == pytest.approx(1.0)
        assert inner_product(basis_state(1, "0"), basis_state(1, "1")) == 0
        assert abs(inner_product(s, random_state(rng, 8))) <= 1

    def test_conjugates_left(self):
        a = np.array([1j, 0])
        assert inner_product(a, np.array([1, 0])) == -1j

    def test_mismatch(self):
        with pytest.raises(ValueError):
            inner_product(np.ones(2), np.ones(4))


def test_state_csv_round_trip(tmp_path, rng):
    psi = random_state(rng, 16)
    write_state_csv(psi, tmp_path / "s.csv")
    np.testing.assert_array_equal(read_state_csv(tmp_path / "s.csv"), psi)
