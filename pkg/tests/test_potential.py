import numpy as np
import pytest

from clockspec import amplitudes as amp
from clockspec import potential as pot
from clockspec.errors import ConfigError, DomainError


def test_coupling_examples():
    m = pot.PotentialModel(0.75)
    assert pot.cell_coefficient(m, 16, 100, 1.0) == 0.125
    assert pot.cell_coefficient(m, 5, 100, 0.0) == 0.0
    # decaying coupling with alpha = 1/2 is below the model gate but the weight itself is defined
    assert -1.0 * pot.coupling_weight(0.5, 7, 100, pot.DECAYING) == pytest.approx(-0.1, abs=1e-15)


def test_alpha_gate_and_cell_range():
    with pytest.raises(ConfigError):
        pot.PotentialModel(0.5)
    m = pot.PotentialModel(0.75)
    with pytest.raises(DomainError):
        pot.cell_coefficient(m, 0, 10, 1.0)
    with pytest.raises(DomainError):
        pot.cell_coefficient(m, 10, 10, 1.0)


def test_evaluate_examples():
    m = pot.PotentialModel(1.0)
    omega = np.zeros(9)
    omega[1] = 1.0  # omega(2)
    real = m.with_amplitudes(10, omega)
    assert real.evaluate(2.5) == 0.5
    assert np.all(real.evaluate(np.linspace(0, 0.999, 20)) == 0.0)
    with pytest.raises(DomainError):
        real.evaluate(10.5)
    with pytest.raises(DomainError):
        real.evaluate(-0.1)
    bump = pot.PotentialModel(0.75, pot.Bump()).realize(20, 1, 0)
    assert np.all(bump.evaluate(np.arange(1, 20, dtype=float)) == 0.0)


@pytest.mark.parametrize("profile", [pot.Indicator(), pot.Bump(), pot.Table((0.2, -1.0, 0.5))],
                         ids=["indicator", "bump", "table"])
def test_envelope(profile):
    n = 300
    real = pot.PotentialModel(0.8, profile).realize(n, 3, 1)
    t = np.linspace(1, n, 20001)[:-1]
    j = np.floor(t)
    assert np.all(np.abs(real.evaluate(t)) <= j ** -0.8 * profile.sup_norm + 1e-15)


def test_decaying_coupling_magnitudes_constant():
    n = 64
    m = pot.PotentialModel(0.75, amplitudes=amp.IidRademacher(), mode=pot.DECAYING)
    c = m.realize(n, 0, 0).coefs[1:]
    assert np.allclose(np.abs(c), n ** -0.75, rtol=0, atol=1e-15)


def test_model_dict_round_trip_and_errors():
    m = pot.PotentialModel(0.9, pot.Table((1.0, 0.0)), amp.two_state_chain(0.7), pot.DECAYING)
    assert pot.model_from_dict(pot.model_to_dict(m)) == m
    with pytest.raises(ConfigError):
        pot.model_from_dict({"alpha": 0.75, "decay": 1})
    with pytest.raises(ConfigError):
        pot.model_from_dict({"profile": {"kind": "indicator"}})
    with pytest.raises(ConfigError):
        pot.profile_from_dict({"kind": "bump", "width": 2})
