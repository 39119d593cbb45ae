import math

import numpy as np
import pytest

from rydsense.error_prevention import (
    ToyConfig,
    ToyFiCurve,
    enhancement_curve,
    error_prevention_channel,
    expectation_curves,
    expectation_oracle,
    fi_with_prevention,
    fi_without_prevention,
    initial_state,
    lossy_povm,
    optimality_bound,
    rotated_state,
    two_excitation_basis,
)
from rydsense.fockspace import (
    apply_channel,
    classical_fi,
    detection_loss_channel,
    measure,
    number_povm,
    povm_fi,
)

GRID = np.linspace(0.07, math.pi - 0.07, 50)


def two_excitation_sector(basis):
    return [basis.index_of(2, 0), basis.index_of(1, 1), basis.index_of(0, 2)]


class TestLossyPovm:
    def test_eta_one_reduces_to_bare_projectors(self):
        basis = two_excitation_basis()
        povm = lossy_povm(1.0, basis)
        by_label = dict(povm.items())
        sector = two_excitation_sector(basis)
        for occ in ((2, 0), (1, 1), (0, 2)):
            m = by_label[occ]
            expected = np.zeros_like(m)
            expected[basis.index_of(*occ), basis.index_of(*occ)] = 1.0
            assert np.allclose(m, expected)
        for occ in ((1, 0), (0, 1)):
            block = by_label[occ][np.ix_(sector, sector)]
            assert np.max(np.abs(block)) == 0.0

    def test_eta_zero_leaves_only_vacuum_outcome(self):
        basis = two_excitation_basis()
        sector = two_excitation_sector(basis)
        for label, m in lossy_povm(0.0, basis).items():
            block = m[np.ix_(sector, sector)]
            if label == (0, 0):
                assert np.allclose(block, np.eye(3))
            else:
                assert np.max(np.abs(block)) == 0.0

    def test_elements_carry_cited_weights(self):
        eta = 0.37
        basis = two_excitation_basis()
        by_label = dict(lossy_povm(eta, basis).items())
        i20, i11, i02 = (basis.index_of(*occ) for occ in ((2, 0), (1, 1), (0, 2)))

        def diag(label):
            return np.real(np.diag(by_label[label]))

        assert diag((2, 0))[i20] == pytest.approx(eta**2, abs=1e-12)
        assert diag((0, 2))[i02] == pytest.approx(eta**2, abs=1e-12)
        assert diag((1, 1))[i11] == pytest.approx(eta**2, abs=1e-12)
        assert diag((1, 0))[i20] == pytest.approx(2 * eta * (1 - eta), abs=1e-12)
        assert diag((1, 0))[i11] == pytest.approx(eta * (1 - eta), abs=1e-12)
        assert diag((0, 1))[i02] == pytest.approx(2 * eta * (1 - eta), abs=1e-12)
        assert diag((0, 1))[i11] == pytest.approx(eta * (1 - eta), abs=1e-12)
        for i in (i20, i11, i02):
            assert diag((0, 0))[i] == pytest.approx((1 - eta) ** 2, abs=1e-12)

    def test_completeness_on_full_space(self):
        basis = two_excitation_basis()
        total = sum(m for _, m in lossy_povm(0.37, basis).items())
        assert np.max(np.abs(total - np.eye(basis.dim))) < 1e-12

    def test_eta_out_of_range(self):
        with pytest.raises(ValueError):
            lossy_povm(-0.1)


class TestErrorPreventionChannel:
    def test_mixed_state_vacuum_weight(self):
        # the transferred |1,1> component carries weight sin^2(theta)/2
        basis = two_excitation_basis()
        channel = error_prevention_channel(basis)
        for theta in (math.pi / 2, 0.9):
            rho = apply_channel(rotated_state(theta, basis).to_density(), channel)
            i00 = basis.index_of(0, 0)
            assert rho.matrix[i00, i00].real == pytest.approx(
                0.5 * math.sin(theta) ** 2, abs=1e-12
            )

    def test_preserves_zero_two(self):
        basis = two_excitation_basis()
        rho = basis.state(0, 2).to_density()
        out = apply_channel(rho, error_prevention_channel(basis))
        assert np.allclose(out.matrix, rho.matrix)

    def test_idempotent_as_channel(self, rng):
        basis = two_excitation_basis()
        channel = error_prevention_channel(basis)
        for _ in range(5):
            mat = rng.normal(size=(basis.dim, basis.dim)) + 1j * rng.normal(
                size=(basis.dim, basis.dim)
            )
            mat = mat @ mat.conj().T
            from rydsense.fockspace import DensityOperator

            rho = DensityOperator(basis, mat / np.trace(mat))
            once = apply_channel(rho, channel)
            twice = apply_channel(once, channel)
            assert np.max(np.abs(twice.matrix - once.matrix)) < 1e-12

    def test_trace_preserving(self):
        assert error_prevention_channel().completeness_defect < 1e-12


class TestFiWithoutPrevention:
    def test_angle_independent_value_two_eta(self):
        eta = 0.3
        values = np.array([fi_without_prevention(eta, t) for t in GRID])
        assert np.max(np.abs(values - 2 * eta)) < 1e-8
        assert values.max() - values.min() < 1e-8

    def test_half_efficiency_reference_point(self):
        assert fi_without_prevention(0.5, 1.2) == pytest.approx(1.0, abs=1e-8)

    def test_lossless_reaches_qfi(self):
        assert fi_without_prevention(1.0, math.pi / 2) == pytest.approx(2.0, abs=1e-8)

    def test_degenerate_angles_return_limit_with_flag(self):
        for theta in (0.0, math.pi):
            value, diag = fi_without_prevention(0.3, theta, full_output=True)
            assert value == pytest.approx(0.6, abs=1e-8)
            assert diag["degenerate"]
        _, diag = fi_without_prevention(0.3, 1.0, full_output=True)
        assert not diag["degenerate"]

    def test_matches_manual_measure_pipeline(self):
        # oracle equivalence: assemble the same FI from the raw operations
        eta, theta = 0.41, 1.37
        basis = two_excitation_basis()
        povm = lossy_povm(eta, basis)

        def family(t):
            return measure(rotated_state(t, basis).to_density(), povm)

        manual = classical_fi(family, theta, degenerate="limit")
        assert fi_without_prevention(eta, theta) == pytest.approx(manual, abs=1e-6)

    def test_eta_zero_rejected(self):
        with pytest.raises(ValueError):
            fi_without_prevention(0.0, 1.0)


class TestFiWithPrevention:
    @pytest.mark.parametrize(
        "eta,expected",
        [(0.02, 0.0792), (0.5, 1.5), (1.0, 2.0)],
    )
    def test_peak_value(self, eta, expected):
        assert fi_with_prevention(eta, math.pi / 2) == pytest.approx(expected, abs=1e-8)

    def test_bounded_with_equality_at_odd_half_pi(self):
        eta = 0.37
        bound = 2 * eta * (2 - eta)
        values = [fi_with_prevention(eta, t) for t in GRID]
        assert max(values) <= bound + 1e-8
        for theta in (math.pi / 2, 3 * math.pi / 2):
            assert fi_with_prevention(eta, theta) == pytest.approx(bound, abs=1e-8)

    def test_probabilities_sum_to_one_no_postselection(self):
        basis = two_excitation_basis()
        povm = lossy_povm(0.23, basis)
        channel = error_prevention_channel(basis)
        for theta in GRID[::7]:
            rho = apply_channel(rotated_state(theta, basis).to_density(), channel)
            dist = measure(rho, povm)
            assert len(dist.probabilities) == 6
            assert dist.total() == pytest.approx(1.0, abs=1e-10)

    def test_wrong_channel_order_gives_no_advantage(self):
        # loss first, then the operation: never beats 2 eta at the peak angle
        basis = two_excitation_basis()
        channel = error_prevention_channel(basis)
        for eta in (0.02, 0.3, 0.7):
            loss = detection_loss_channel(basis, eta)

            def family(t):
                rho = rotated_state(t, basis).to_density()
                return apply_channel(apply_channel(rho, loss), channel)

            fi = povm_fi(family, number_povm(basis), math.pi / 2, degenerate="limit")
            assert fi <= 2 * eta + 1e-8


class TestCurves:
    def test_enhancement_ratio_is_two_minus_eta(self):
        for eta, expected in ((1.0, 1.0), (1e-6, 2.0), (0.02, 1.98)):
            rows = enhancement_curve(ToyConfig(eta, (math.pi / 2,)))
            ratio = rows[0].fi_with / rows[0].fi_without
            assert ratio == pytest.approx(expected, abs=1e-5)

    def test_curve_rows_respect_bound_invariant(self):
        rows = enhancement_curve(ToyConfig(0.3, tuple(GRID[::10])))
        for row in rows:
            assert isinstance(row, ToyFiCurve)
            assert row.qfi_bound == pytest.approx(optimality_bound(0.3))

    def test_detected_means_at_reference_angles(self):
        eta = 0.4
        curves = expectation_curves(eta, [0.0, math.pi / 2])
        assert curves.nd_with[0] == pytest.approx(2 * eta, abs=1e-12)
        assert curves.nd_without[0] == pytest.approx(2 * eta, abs=1e-12)
        ones = expectation_curves(1.0, [math.pi / 2])
        assert ones.nd_with[0] == pytest.approx(0.5, abs=1e-12)

    def test_matrix_oracle_agrees(self):
        thetas = [0.0, 0.6, math.pi / 2, 2.4]
        eta = 0.27
        curves = expectation_curves(eta, thetas)
        for i, theta in enumerate(thetas):
            nd_w, np_w, nd_wo, np_wo = expectation_oracle(eta, theta)
            assert curves.nd_with[i] == pytest.approx(nd_w, abs=1e-10)
            assert curves.np_with[i] == pytest.approx(np_w, abs=1e-10)
            assert curves.nd_without[i] == pytest.approx(nd_wo, abs=1e-10)
            assert curves.np_without[i] == pytest.approx(np_wo, abs=1e-10)


class TestConfigTypes:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            ToyConfig(1.2, (0.1, 0.2))
        with pytest.raises(ValueError):
            ToyConfig(0.5, ())
        with pytest.raises(ValueError):
            ToyConfig(0.5, (0.2, 0.1))

    def test_curve_bound_violation_rejected(self):
        with pytest.raises(ValueError):
            ToyFiCurve(theta=1.0, fi_without=0.6, fi_with=1.4, qfi_bound=1.0)

    def test_initial_state_is_two_zero(self):
        basis = two_excitation_basis()
        state = initial_state(basis)
        assert state.amplitudes[basis.index_of(2, 0)] == pytest.approx(1.0)
