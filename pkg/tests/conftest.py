import numpy as np
import pytest

from rydsense.fockspace import (
    FockBasis,
    apply_channel,
    coherent_state,
    detection_loss_channel,
    measure,
    number_povm,
)
from rydsense.multiparticle import LOSS_AFTER, LOSS_BEFORE, interaction_channel_kraus


def kraus_pipeline_distribution(n0, eta, gamma_tau, theta, n_max=14, loss_order=LOSS_AFTER, mode="d"):
    """Brute-force count distribution via the full Fock-space pipeline.

    Coherent input, mutual-decay Kraus channel, binomial detection loss and
    a projective number measurement, marginalized onto one mode.  Serves as
    the independent oracle for the analytic Poisson-mixture model.
    """
    basis = FockBasis(n_max)
    alpha_d = np.sqrt(n0) * np.cos(theta / 2.0)
    alpha_p = 1j * np.sqrt(n0) * np.sin(theta / 2.0)
    if loss_order == LOSS_BEFORE:
        alpha_d *= np.sqrt(eta)
        alpha_p *= np.sqrt(eta)
    rho = coherent_state(basis, alpha_d, alpha_p).to_density()
    rho = apply_channel(rho, interaction_channel_kraus(basis, gamma_tau, symmetric=True))
    if loss_order == LOSS_AFTER:
        rho = apply_channel(rho, detection_loss_channel(basis, eta))
    return measure(rho, number_povm(basis)).marginal(mode)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
