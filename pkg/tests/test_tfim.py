import warnings

import numpy as np
import pytest

from effham.pauli import dense_matrix
from effham.tfim import (
    EffectiveParams,
    TFIMParams,
    build_sw_effective,
    build_tfim,
    candidate_grid,
    exact_sw_coefficients,
    grid_values,
    initial_states,
    residual_hamiltonian,
)

from conftest import dense_sw, dense_tfim, kron_op


class TestTFIM:
    @pytest.mark.parametrize("N", [2, 3, 5, 8])
    def test_term_count(self, N):
        assert len(build_tfim(TFIMParams(N, 10, 1))) == 2 * N - 1

    def test_coefficients(self):
        d = build_tfim(TFIMParams(3, 10, 1)).as_dict()
        assert d == {"IIZ": -5.0, "IXX": -1.0, "IZI": -5.0, "XXI": -1.0, "ZII": -5.0}

    def test_matches_dense(self):
        np.testing.assert_allclose(dense_matrix(build_tfim(TFIMParams(4, 7, 0.6))), dense_tfim(4, 7, 0.6), atol=1e-14)

    def test_parity_symmetry(self):
        H = dense_tfim(4, 10, 1)
        P = kron_op(4, {i: "Z" for i in range(4)})
        np.testing.assert_allclose(H @ P, P @ H, atol=1e-14)

    def test_warns_outside_regime(self):
        with pytest.warns(UserWarning):
            TFIMParams(3, 2, 1)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            TFIMParams(3, 10, 1)

    def test_rejects_single_site(self):
        with pytest.raises(ValueError):
            TFIMParams(1, 10, 1)


class TestEffective:
    @pytest.mark.parametrize("N", [3, 5, 7])
    def test_term_count(self, N):
        assert len(build_sw_effective(EffectiveParams(1, 0.05), N)) == 2 * (N - 1) + 2 * (N - 2) + 2

    def test_two_sites_has_no_nnn(self):
        d = build_sw_effective(EffectiveParams(1, 0.05), 2).as_dict()
        assert set(d) == {"XX", "YY", "ZI", "IZ"}

    def test_matches_dense(self):
        np.testing.assert_allclose(dense_matrix(build_sw_effective(EffectiveParams(0.9, 0.07), 5)), dense_sw(5, 0.9, 0.07), atol=1e-14)

    def test_conserves_excitation_number(self):
        H = dense_sw(5, 1, 0.05)
        Nop = sum(kron_op(5, {i: "Z"}) for i in range(5))
        np.testing.assert_allclose(H @ Nop, Nop @ H, atol=1e-13)

    def test_exact_coefficients(self):
        e = exact_sw_coefficients(10, 1)
        assert e.lam == 1 and e.kappa == pytest.approx(0.05, abs=1e-12)
        assert exact_sw_coefficients(4, 0.5).kappa == pytest.approx(0.03125)
        with pytest.raises(ValueError):
            exact_sw_coefficients(0, 1)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            EffectiveParams(float("inf"), 0.0)


def test_residual_is_difference():
    p, e = TFIMParams(4, 10, 1), EffectiveParams(1.1, 0.03)
    np.testing.assert_allclose(dense_matrix(residual_hamiltonian(p, e)), dense_tfim(4, 10, 1) - dense_sw(4, 1.1, 0.03), atol=1e-14)


def test_initial_states():
    states = initial_states(3)
    assert [int(np.argmax(s)) for s in states] == [0b100, 0b010, 0b001]
    for s in states:
        assert np.count_nonzero(s) == 1 and np.linalg.norm(s) == 1


class TestGrid:
    def test_order_lambda_fastest(self):
        cs = candidate_grid([0.9, 1.0], [0.01, 0.02, 0.03])
        assert len(cs) == 6
        assert [(p.lam, p.kappa) for p in cs.labels[:3]] == [(0.9, 0.01), (1.0, 0.01), (0.9, 0.02)]
        assert cs.hamiltonians is None

    def test_with_hamiltonians(self):
        cs = candidate_grid([1.0], [0.05], N=3)
        assert cs.hamiltonians[0] == build_sw_effective(EffectiveParams(1.0, 0.05), 3)

    def test_empty(self):
        with pytest.raises(ValueError):
            candidate_grid([], [0.1])

    def test_grid_values(self):
        np.testing.assert_array_equal(grid_values(0.8, 1.2, 9), [0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 1.2])
        np.testing.assert_array_equal(grid_values(0.3, 0.7, 1), [0.3])
