import numpy as np
import pytest

from rydcav.params import (
    CavityParams,
    DriveParams,
    EnsembleParams,
    PhysicalParams,
    RydbergLevel,
    ScanSpec,
    validate,
)


def make_params(gamma_c=10.0, delta_bg=0.0, cooperativity=5.0, gamma_e=3.0,
                atom_number=10_000, cloud_volume=6.8e5, n=70, series="S",
                gamma_r=0.2, gamma_s=None, xi=0.0, c6_override=None,
                delta_p=0.0, delta_cf=0.0, omega_cf=4.0, alpha=1.0,
                scan=None) -> PhysicalParams:
    return validate(PhysicalParams(
        cavity=CavityParams(gamma_c=gamma_c, delta_bg=delta_bg),
        ensemble=EnsembleParams(atom_number=atom_number,
                                cooperativity=cooperativity,
                                gamma_e=gamma_e, cloud_volume=cloud_volume),
        rydberg=RydbergLevel(n=n, series=series, gamma_r=gamma_r,
                             gamma_s=gamma_s, xi=xi, c6_override=c6_override),
        drive=DriveParams(delta_p=delta_p, delta_cf=delta_cf,
                          omega_cf=omega_cf, alpha=alpha),
        scan=scan,
    ))


@pytest.fixture
def paper_params():
    """Parameter set at the scale of the measured system."""
    return make_params()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
