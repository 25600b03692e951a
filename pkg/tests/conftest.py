import math

import numpy as np
import pytest

from loopcool.core.config import load_config
from loopcool.core.params import SystemParams
from loopcool.core.utils import hz_to_rad

OMEGA_M = hz_to_rad(1.9e6)
KAPPA = hz_to_rad(55e6)
GAMMA_M = OMEGA_M / 3.2e6


@pytest.fixture
def membrane():
    """Derived-phase system of the bundled membrane preset"""
    return load_config(preset="membrane").params


@pytest.fixture
def phase_scan_point():
    """Derived-phase point of the phase-scan preset (20 uW first pass, 3 uW auxiliary)"""
    return load_config(preset="phase_scan").params


@pytest.fixture
def phase_point(phase_scan_point):
    """Theory-mode twin of the phase-scan point with the loop phase set to pi/2"""
    return SystemParams.theory(
        omega_m=OMEGA_M,
        gamma_m=GAMMA_M,
        kappa=KAPPA,
        g1=phase_scan_point.g1,
        g2=phase_scan_point.g2,
        eta=phase_scan_point.eta,
        phi=math.pi / 2,
        tau=phase_scan_point.tau,
        detuning=phase_scan_point.detuning,
        temperature=20.0,
    )


@pytest.fixture
def resonant_point():
    """On cavity resonance with phi = omega_m tau = pi/2"""
    return SystemParams.theory(
        omega_m=OMEGA_M,
        gamma_m=GAMMA_M,
        kappa=KAPPA,
        g1=hz_to_rad(150e3),
        g2=hz_to_rad(150e3),
        eta=0.5,
        phi=math.pi / 2,
        tau=0.5 * math.pi / OMEGA_M,
        temperature=0.0,
        g0=hz_to_rad(160.0),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_theory(rng, detuning=True, temperature=0.0, **overrides) -> SystemParams:
    """Random stable-or-not theory point around the membrane scales"""
    kappa_ratio = rng.uniform(2.0, 60.0)
    values = dict(
        omega_m=OMEGA_M,
        gamma_m=OMEGA_M / rng.uniform(1e4, 1e7),
        kappa=kappa_ratio * OMEGA_M,
        g1=hz_to_rad(rng.uniform(10e3, 300e3)),
        g2=hz_to_rad(rng.uniform(10e3, 300e3)),
        eta=rng.uniform(0.05, 0.95),
        phi=rng.uniform(-math.pi, math.pi),
        tau=rng.uniform(0.0, 2.0) * math.pi / OMEGA_M,
        detuning=rng.uniform(-1.0, 1.0) * kappa_ratio * OMEGA_M if detuning else 0.0,
        temperature=temperature,
    )
    values.update(overrides)
    return SystemParams.theory(**values)
