import numpy as np
import pytest

from qtomo import (
    born_probabilities,
    bloch_to_rho,
    decompose_state,
    gram_schmidt_operator_basis,
    make_six,
    make_trine,
    make_von_neumann,
    random_density_matrix,
)
from qtomo.linalg import hermitize, trace_inner
from qtomo.states import SIGMA_Y


def project_onto(m, basis_elements):
    out = np.zeros_like(np.asarray(m, dtype=complex))
    for g in basis_elements:
        out = out + trace_inner(m, g) * g
    return out


class TestGramSchmidt:
    def test_von_neumann_span(self):
        pom = make_von_neumann(np.eye(2))
        basis = gram_schmidt_operator_basis(pom, rng_seed=0)
        assert len(basis.gamma_meas) == 2
        for outcome in pom.outcomes:
            recon = project_onto(outcome, basis.gamma_meas)
            assert np.abs(recon - outcome).max() <= 1e-9

    def test_six_complete(self):
        basis = gram_schmidt_operator_basis(make_six(), rng_seed=1)
        assert len(basis.gamma_meas) == 4
        assert len(basis.gamma_unmeas) == 0

    def test_trine_complement(self):
        pom = make_trine()
        basis = gram_schmidt_operator_basis(pom, rng_seed=2)
        assert len(basis.gamma_meas) == 3
        assert len(basis.gamma_unmeas) == 1
        for outcome in pom.outcomes:
            assert abs(trace_inner(basis.gamma_unmeas[0], outcome)) <= 1e-10

    def test_full_basis_orthonormal(self):
        for pom, seed in ((make_trine(), 3), (make_von_neumann(np.eye(3)), 4)):
            basis = gram_schmidt_operator_basis(pom, rng_seed=seed)
            elements = basis.elements
            assert len(elements) == pom.dim**2
            for j, a in enumerate(elements):
                for k, b in enumerate(elements):
                    want = 1.0 if j == k else 0.0
                    assert trace_inner(a, b) == pytest.approx(want, abs=1e-10)

    def test_deterministic_given_seed(self):
        a = gram_schmidt_operator_basis(make_trine(), rng_seed=9)
        b = gram_schmidt_operator_basis(make_trine(), rng_seed=9)
        for x, y in zip(a.elements, b.elements):
            np.testing.assert_array_equal(x, y)


class TestDecompose:
    def test_complete_pom_no_remainder(self):
        basis = gram_schmidt_operator_basis(make_six(), rng_seed=5)
        rho = bloch_to_rho((0.2, -0.1, 0.4))
        dec = decompose_state(rho, basis)
        assert np.abs(dec.rho_unmeas).max() <= 1e-12
        np.testing.assert_allclose(dec.rho_meas, rho.matrix, atol=1e-12)

    def test_trine_sigma_y_unmeasured(self):
        basis = gram_schmidt_operator_basis(make_trine(), rng_seed=6)
        rho = bloch_to_rho((0.0, 0.3, 0.0))
        dec = decompose_state(rho, basis)
        np.testing.assert_allclose(dec.rho_unmeas, 0.15 * SIGMA_Y, atol=1e-12)

    def test_parts_sum_to_state(self):
        basis = gram_schmidt_operator_basis(make_trine(), rng_seed=7)
        rho = random_density_matrix(2, seed=21)
        dec = decompose_state(rho, basis)
        np.testing.assert_allclose(dec.rho_meas + dec.rho_unmeas, rho.matrix, atol=1e-12)

    def test_unmeasured_traceless_for_perfect_pom(self):
        basis = gram_schmidt_operator_basis(make_trine(), rng_seed=8)
        for seed in (31, 32, 33):
            dec = decompose_state(random_density_matrix(2, seed=seed), basis)
            assert abs(np.trace(dec.rho_unmeas)) <= 1e-12

    def test_probabilities_come_from_measured_part(self):
        pom = make_trine()
        basis = gram_schmidt_operator_basis(pom, rng_seed=9)
        rho = random_density_matrix(2, seed=41)
        dec = decompose_state(rho, basis)
        p_full = born_probabilities(rho, pom)
        p_meas = np.array([
            trace_inner(hermitize(dec.rho_meas), outcome) for outcome in pom.outcomes
        ])
        np.testing.assert_allclose(p_full, p_meas, atol=1e-10)

    def test_orthogonal_parts(self):
        basis = gram_schmidt_operator_basis(make_trine(), rng_seed=10)
        dec = decompose_state(random_density_matrix(2, seed=51), basis)
        assert trace_inner(dec.rho_meas, dec.rho_unmeas) == pytest.approx(0.0, abs=1e-10)

    def test_incomplete_basis_rejected(self):
        basis = gram_schmidt_operator_basis(make_trine(), rng_seed=11)
        from qtomo import OperatorBasis

        partial = OperatorBasis(basis.gamma_meas, ())
        with pytest.raises(ValueError):
            decompose_state(bloch_to_rho((0, 0, 0)), partial)
