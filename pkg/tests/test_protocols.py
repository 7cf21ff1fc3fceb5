"""Entangling transit and the three-cavity payload transfer."""

import math
import warnings

import numpy as np
import pytest

import _oracles as orc
from cavitypair.model import (
    DensityMatrix,
    FullBasis,
    PureState,
    SystemParams,
)
from cavitypair.analysis import populations, fidelity
from cavitypair.protocols import (
    CalibrationWarning,
    CavityStage,
    ProtocolError,
    calibrate_coupling,
    default_stages,
    detuned_target,
    entangle_atoms,
    initial_product_state,
    maximal_target,
    teleport,
)
from cavitypair.spectrum import phi_angle, wrap_angle


@pytest.fixture(scope="module")
def stages():
    return default_stages()


def test_quarter_turn_calibration():
    template = SystemParams(g0=1.0)
    tuned = calibrate_coupling(math.pi / 2.0, -1, template, floor=28.0)
    assert tuned.g0 == pytest.approx(orc.QUARTER, abs=1e-5)
    area = phi_angle(-1, tuned)
    assert abs(wrap_angle(area - math.pi / 2.0)) < 1e-6
    with pytest.raises(ValueError):
        calibrate_coupling(0.0, -1, template)
    with pytest.raises(ValueError):
        calibrate_coupling(math.pi, -1, template, floor=-1.0)


def test_default_stage_chain(stages):
    assert len(stages) == 3
    for stage, expected in zip(stages, orc.STAGE_AREAS):
        area = phi_angle(-1, stage.params)
        assert area == pytest.approx(expected, abs=1e-4)
        assert stage.params.n_max == 2
    assert orc.STAGE_AREAS[0] == pytest.approx(60.5 * math.pi, abs=1e-4)
    assert stages[1].params.g0 == 20.0
    assert stages[0].gates == ((2, math.pi / 2.0),)
    assert stages[1].gates == ((1, -math.pi / 2.0),)
    assert stages[2].gates == ()


def test_stage_calibration_scales_with_transit_time():
    slow = default_stages(sigma=2.0)
    assert slow[0].params.sigma == 2.0
    # the transit area depends on g0 sigma only, so doubling sigma halves g0
    assert slow[0].params.g0 == pytest.approx(orc.QUARTER / 2.0, abs=1e-5)
    custom = default_stages(stage2_g0=7.5)
    assert custom[1].params.g0 == 7.5


def test_product_and_target_states():
    basis = FullBasis(3)
    prod = initial_product_state(basis)
    assert prod.norm == pytest.approx(1.0)
    target = maximal_target(basis)
    assert target.norm == pytest.approx(1.0)
    assert abs(prod.overlap(target)) == pytest.approx(0.5)
    # zero dressing phases reproduce the maximal target
    dressed = detuned_target(0.0, 0.0, basis)
    assert abs(dressed.overlap(target)) == pytest.approx(1.0)


@pytest.mark.parametrize("eps", sorted(orc.ENTANGLE_F))
def test_entangling_transit_frozen_fidelities(eps):
    state, fid = entangle_atoms(SystemParams(g0=orc.G60, epsilon=eps))
    assert isinstance(state, PureState)
    assert fid == pytest.approx(orc.ENTANGLE_F[eps], abs=1e-4)


def test_entangling_transit_heralds_empty_cavity():
    labels = [(0, s1, s2) for s1 in "ge" for s2 in "ge"]
    state, _ = entangle_atoms(SystemParams(g0=orc.G60))
    herald = float(np.sum(populations(state, labels)))
    assert herald == pytest.approx(orc.P_VACUUM, abs=5e-5)
    for eps in (0.9, 1.1):
        state, _ = entangle_atoms(SystemParams(g0=orc.G60, epsilon=eps))
        assert float(np.sum(populations(state, labels))) > 0.85


def test_entangling_transit_needs_guard_level():
    with pytest.raises(ValueError):
        entangle_atoms(SystemParams(g0=orc.G60, n_max=2))


def test_entangling_transit_with_decay():
    state, fid = entangle_atoms(SystemParams(g0=orc.G40, gamma=0.125))
    assert isinstance(state, DensityMatrix)
    assert fid == pytest.approx(orc.GAMMA_F[0.125], abs=1e-4)


def test_teleport_trivial_payload(stages):
    result = teleport(1.0, 0.0, stages)
    assert result.fidelity > 1.0 - 1e-9
    # cavity three holds the vacuum it started with
    assert result.cavity_state.matrix[0, 0].real == pytest.approx(1.0,
                                                                  abs=1e-9)


def test_teleport_default_payload(stages):
    result = teleport(0.6, 0.8, stages)
    assert result.fidelity == pytest.approx(orc.TELEPORT_F_DEFAULT, abs=1e-5)
    for area, expected in zip(result.stage_areas, orc.STAGE_AREAS):
        assert area == pytest.approx(expected, abs=1e-4)
    assert result.stage_leakage[0] < 1e-3
    assert result.stage_leakage[1] < 1e-4
    assert result.warnings == ()
    basis = result.final_state.basis
    target = np.zeros(basis.size, dtype=complex)
    target[basis.index((0, "g", "g"))] = 0.6
    target[basis.index((1, "g", "g"))] = 0.8
    assert fidelity(result.final_state,
                    PureState(basis, target)) == result.fidelity


def test_teleport_is_linear_in_the_payload(stages):
    alpha, beta = 0.6, 0.8j
    zero = teleport(1.0, 0.0, stages).final_state.amplitudes
    one = teleport(0.0, 1.0, stages).final_state.amplitudes
    both = teleport(alpha, beta, stages).final_state.amplitudes
    resid = np.max(np.abs(both - (alpha * zero + beta * one)))
    assert resid < 1e-9


def test_teleport_input_validation(stages):
    with pytest.raises(ValueError):
        teleport(0.9, 0.1, stages)  # not normalized
    with pytest.raises(ValueError):
        teleport(0.6, 0.8, stages[:2])
    shallow = CavityStage(params=stages[0].params.replace(n_max=1),
                          gates=stages[0].gates)
    with pytest.raises(ValueError):
        teleport(0.6, 0.8, (shallow, stages[1], stages[2]))
    lossy = CavityStage(params=stages[0].params.replace(gamma=0.01),
                        gates=stages[0].gates)
    with pytest.raises(ValueError):
        teleport(0.6, 0.8, (lossy, stages[1], stages[2]))


def test_teleport_warns_on_miscalibrated_stage(stages):
    # 0.1 rad past the quarter-turn: reduced fidelity, but still a working
    # hand-off, so the protocol reports instead of raising
    off = CavityStage(params=stages[0].params.replace(g0=28.6446),
                      gates=stages[0].gates)
    with pytest.warns(CalibrationWarning):
        result = teleport(0.6, 0.8, (off, stages[1], stages[2]))
    assert result.fidelity < 0.999
    assert result.fidelity > 0.98
    assert any("stage 1" in note for note in result.warnings)


def test_teleport_gross_miscalibration_raises(stages):
    # half a radian off leaves ~15% of the payload in cavity one
    broken = CavityStage(params=stages[0].params.replace(g0=28.7048),
                         gates=stages[0].gates)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        with pytest.raises(ProtocolError):
            teleport(0.6, 0.8, (broken, stages[1], stages[2]))
