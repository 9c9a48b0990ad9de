import numpy as np
import pytest

from qtomo import (
    Pom,
    apply_efficiencies,
    gram_report,
    hermite_functions,
    make_phase_randomized_fock_mixture,
    make_quadrature_pom,
    make_qutrit_two_outcome,
    make_six,
    make_trine,
    make_von_neumann,
    optical_trine_outcomes,
)
from qtomo.states import SIGMA_X, SIGMA_Z


class TestVonNeumann:
    def test_computational_qubit(self):
        pom = make_von_neumann(np.eye(2))
        np.testing.assert_allclose(pom.outcomes[0], (np.eye(2) + SIGMA_Z) / 2)
        np.testing.assert_allclose(pom.outcomes[1], (np.eye(2) - SIGMA_Z) / 2)

    def test_computational_qutrit(self):
        pom = make_von_neumann(np.eye(3))
        for k in range(3):
            expected = np.zeros((3, 3))
            expected[k, k] = 1.0
            np.testing.assert_allclose(pom.outcomes[k], expected)

    def test_rotated_basis(self):
        basis = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        pom = make_von_neumann(basis)
        np.testing.assert_allclose(pom.outcomes[0], (np.eye(2) + SIGMA_X) / 2, atol=1e-15)
        np.testing.assert_allclose(pom.outcomes[1], (np.eye(2) - SIGMA_X) / 2, atol=1e-15)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            make_von_neumann(np.array([[1.0, 1.0], [0.0, 0.0]]))


class TestTrine:
    def test_first_outcome(self):
        np.testing.assert_allclose(make_trine().outcomes[0], (np.eye(2) + SIGMA_Z) / 3)

    def test_symmetric_overlaps(self):
        pom = make_trine()
        for j in range(3):
            for k in range(3):
                got = np.trace(pom.outcomes[j] @ pom.outcomes[k]).real
                want = (1 + 3 * (j == k)) / 9
                assert got == pytest.approx(want, abs=1e-14)

    def test_perfect(self):
        np.testing.assert_allclose(make_trine().sum_operator, np.eye(2), atol=1e-14)


class TestSix:
    def test_sum(self):
        np.testing.assert_allclose(make_six().sum_operator, np.eye(2), atol=1e-14)

    def test_gram_positive_eigenvalues(self):
        report = gram_report(make_six())
        positive = sorted(v for v in report.eigenvalues if v > 1e-10)
        np.testing.assert_allclose(positive, [1 / 9, 1 / 9, 1 / 9, 1 / 3], atol=1e-12)
        assert report.n_positive == 4


class TestQutritTwoOutcome:
    def test_outcomes(self):
        pom = make_qutrit_two_outcome()
        np.testing.assert_allclose(pom.outcomes[0], np.diag([0.5, 0.5, 1 / 3]))
        np.testing.assert_allclose(pom.outcomes[1], np.diag([0.5, 0.5, 2 / 3]))
        np.testing.assert_allclose(pom.sum_operator, np.eye(3), atol=1e-15)

    def test_gram_rank_two(self):
        assert gram_report(make_qutrit_two_outcome()).n_positive == 2


class TestClassification:
    def test_four_class_walkthrough(self):
        six = make_six()
        vn = make_von_neumann(np.eye(2))
        lossy_six = apply_efficiencies(six, 0.8 * np.eye(6))
        lossy_vn = apply_efficiencies(vn, np.diag([0.9, 0.7]))
        assert gram_report(six).classification == "perfect-complete"
        assert gram_report(lossy_six).classification == "imperfect-complete"
        assert gram_report(vn).classification == "perfect-incomplete"
        assert gram_report(lossy_vn).classification == "imperfect-incomplete"

    def test_half_efficiency_still_complete(self):
        report = gram_report(apply_efficiencies(make_six(), 0.5 * np.eye(6)))
        assert report.n_positive == 4
        assert report.classification == "imperfect-complete"

    def test_trine_incomplete(self):
        report = gram_report(make_trine())
        assert report.n_positive == 3
        assert report.classification == "perfect-incomplete"

    def test_n_positive_bounded(self):
        for pom in (make_six(), make_trine(), make_von_neumann(np.eye(2)),
                    make_qutrit_two_outcome(), optical_trine_outcomes(0.4)):
            assert gram_report(pom).n_positive <= pom.dim**2


class TestEfficiencies:
    def test_uniform_scaling(self):
        six = make_six()
        scaled = apply_efficiencies(six, 0.8 * np.eye(6))
        for a, b in zip(scaled.outcomes, six.outcomes):
            np.testing.assert_allclose(a, 0.8 * b)
        np.testing.assert_allclose(scaled.sum_operator, 0.8 * np.eye(2), atol=1e-14)
        assert not scaled.is_perfect

    def test_identity_map(self):
        six = make_six()
        same = apply_efficiencies(six, np.eye(6))
        for a, b in zip(same.outcomes, six.outcomes):
            np.testing.assert_allclose(a, b)
        assert same.is_perfect

    def test_mixing_row(self):
        trine = make_trine()
        eta = np.zeros((3, 3))
        eta[0, 0] = eta[0, 1] = 0.5
        eta[1, 2] = 0.3
        mixed = apply_efficiencies(trine, eta)
        np.testing.assert_allclose(
            mixed.outcomes[0], (trine.outcomes[0] + trine.outcomes[1]) / 2
        )

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            apply_efficiencies(make_trine(), -0.1 * np.eye(3))

    def test_rejects_overweight_columns(self):
        with pytest.raises(ValueError):
            apply_efficiencies(make_trine(), 1.2 * np.eye(3))


class TestQuadrature:
    def test_ground_level_density(self):
        x = np.linspace(-3, 3, 13)
        dx = x[1] - x[0]
        pom = make_quadrature_pom([0.7], x, d_rec=1)
        for i, xi in enumerate(x):
            assert pom.outcomes[i][0, 0].real == pytest.approx(
                dx * np.exp(-xi**2) / np.sqrt(np.pi), rel=1e-12
            )

    def test_zero_phase_real(self):
        x = np.linspace(-2, 2, 9)
        pom = make_quadrature_pom([0.0], x, d_rec=2)
        for outcome in pom.outcomes:
            assert abs(outcome[0, 1].imag) < 1e-14

    def test_phase_appears_off_diagonal(self):
        x = np.array([0.4, 0.8])
        theta = 0.9
        pom = make_quadrature_pom([theta], x, d_rec=2, dx=0.4)
        # <0|x><x|1> carries e^{-i theta}
        val = pom.outcomes[0][0, 1]
        assert np.angle(val) == pytest.approx(-theta, abs=1e-12)

    def test_completeness_on_wide_grid(self):
        x = np.linspace(-8, 8, 401)
        pom = make_quadrature_pom([0.3], x, d_rec=4)
        total = sum(pom.outcomes)
        assert np.abs(total - np.eye(4)).max() < 1e-3

    def test_outcomes_rank_one_psd(self):
        x = np.linspace(-3, 3, 13)
        pom = make_quadrature_pom([0.2, 1.1], x, d_rec=3)
        for outcome in pom.outcomes:
            vals = np.linalg.eigvalsh(outcome)
            assert vals.min() >= -1e-14
            assert np.sum(vals > 1e-14 * max(vals.max(), 1e-300)) <= 1

    def test_multiple_settings_stay_below_identity(self):
        x = np.linspace(-8, 8, 401)
        pom = make_quadrature_pom([0.0, np.pi / 3, 2 * np.pi / 3], x, d_rec=3)
        hi = np.linalg.eigvalsh(pom.sum_operator).max()
        assert hi <= 1 + 1e-10


class TestFockMixture:
    def test_diagonal(self):
        x = np.linspace(-3, 3, 11)
        pom = make_phase_randomized_fock_mixture(x, d_rec=3)
        for outcome in pom.outcomes:
            off = outcome - np.diag(np.diag(outcome))
            assert np.abs(off).max() == 0.0

    def test_origin_entries(self):
        x = np.array([-0.5, 0.0, 0.5])
        pom = make_phase_randomized_fock_mixture(x, d_rec=2)
        dx = 0.5
        middle = pom.outcomes[1]
        assert middle[0, 0].real == pytest.approx(dx / np.sqrt(np.pi), rel=1e-12)
        assert middle[1, 1].real == pytest.approx(0.0, abs=1e-15)

    def test_level_normalization(self):
        x = np.linspace(-8, 8, 401)
        pom = make_phase_randomized_fock_mixture(x, d_rec=4)
        totals = np.diag(sum(pom.outcomes)).real
        np.testing.assert_allclose(totals, np.ones(4), atol=1e-3)


class TestHermiteFunctions:
    def test_orthonormal(self):
        x = np.linspace(-10, 10, 2001)
        dx = x[1] - x[0]
        psi = hermite_functions(x, 6)
        overlaps = psi @ psi.T * dx
        np.testing.assert_allclose(overlaps, np.eye(6), atol=1e-8)

    def test_no_overflow_high_order(self):
        psi = hermite_functions(np.linspace(-20, 20, 101), 200)
        assert np.all(np.isfinite(psi))


class TestOpticalTrine:
    def test_matches_trine_at_design_point(self):
        built = optical_trine_outcomes(1 / np.sqrt(3))
        ref = make_trine()
        for a, b in zip(built.outcomes, ref.outcomes):
            np.testing.assert_allclose(a, b, atol=1e-12)

    def test_negative_mu_matches_as_a_set(self):
        built = optical_trine_outcomes(-1 / np.sqrt(3))
        ref = make_trine()
        np.testing.assert_allclose(built.outcomes[0], ref.outcomes[0], atol=1e-12)
        # reflected-arm detectors swap
        np.testing.assert_allclose(built.outcomes[1], ref.outcomes[2], atol=1e-12)
        np.testing.assert_allclose(built.outcomes[2], ref.outcomes[1], atol=1e-12)

    def test_reflected_outcome_matrix(self):
        mu = 1 / np.sqrt(3)
        built = optical_trine_outcomes(mu)
        expected = 0.5 * np.array([[mu**2, mu], [mu, 1.0]])
        np.testing.assert_allclose(built.outcomes[1], expected, atol=1e-15)

    def test_mu_zero_kills_h_entry(self):
        built = optical_trine_outcomes(0.0)
        assert built.outcomes[1][0, 0] == 0.0
        assert built.outcomes[2][0, 0] == 0.0

    def test_sums_to_identity(self):
        for mu in (1 / np.sqrt(3), 0.5, 0.0):
            np.testing.assert_allclose(
                optical_trine_outcomes(mu).sum_operator, np.eye(2), atol=1e-12
            )


class TestPomInvariants:
    def test_rejects_negative_outcome(self):
        with pytest.raises(ValueError):
            Pom((np.diag([1.0, -0.2]).astype(complex),))

    def test_rejects_oversized_sum(self):
        with pytest.raises(ValueError):
            Pom((np.eye(2, dtype=complex), np.eye(2, dtype=complex) * 0.5))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Pom(())

    def test_rejects_mixed_dimensions(self):
        with pytest.raises(ValueError):
            Pom((np.eye(2, dtype=complex) / 2, np.eye(3, dtype=complex) / 3))
