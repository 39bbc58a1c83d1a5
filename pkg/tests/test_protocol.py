import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlqkd.protocol import (PAULI_X, ProtocolParams, alice_povm, block_decompose, bob_povm,
                            build_R, closed_form_blocks, filter_op, is_psd, rotation_unitary,
                            verify_closed_forms, xi_state_A)

CONFIGS = [(M, L) for M in (4, 5, 6, 8) for L in (1, 2) if 2 * L <= M]


def test_params_validation():
    with pytest.raises(ValueError):
        ProtocolParams(4, 3)
    with pytest.raises(ValueError):
        ProtocolParams(2, 1)
    with pytest.raises(ValueError):
        ProtocolParams(5, 1, double_even=True)
    assert ProtocolParams(4, 1).theta == pytest.approx(math.pi / 4)


@pytest.mark.parametrize("M,L", CONFIGS)
def test_povms_complete(M, L):
    p = ProtocolParams(M, L)
    total = sum(alice_povm(p).values())
    assert np.allclose(total, np.eye(M), atol=1e-12)
    for j in range(M):
        F = filter_op(p, j)
        # the filter reproduces the conclusive POVM for this j
        assert np.allclose(F.conj().T @ F, bob_povm(p, j, 0) + bob_povm(p, j, 1), atol=1e-12)
        assert is_psd(bob_povm(p, j, 0))


@pytest.mark.parametrize("M,L", CONFIGS)
def test_closed_forms(M, L):
    rep = verify_closed_forms(ProtocolParams(M, L), [0.0, 0.37, 1.2, -0.8])
    assert rep.passed
    assert rep.max_deviation <= 1e-10
    assert rep.max_leakage <= 1e-12


def test_perturbation_detected():
    assert not verify_closed_forms(ProtocolParams(4, 1), [0.3], perturb=1e-6).passed


def test_R_con_block_frozen():
    # M=4, L=1: R_con block is (1 - X/2) / 4
    blk = closed_form_blocks(ProtocolParams(4, 1), "con")[0]
    assert np.allclose(blk, (np.eye(2) - 0.5 * PAULI_X) / 4, atol=1e-15)


@pytest.mark.parametrize("M,L", CONFIGS)
def test_rotation_invariance(M, L):
    p = ProtocolParams(M, L)
    for which, phi in (("con", 0.0), ("bit", 0.0), ("ph", 0.4)):
        R = build_R(p, which, phi)
        for th in p.angles():
            for U in (rotation_unitary(p, th), rotation_unitary(p, th).conj().T):
                assert np.max(np.abs(U @ R @ U.conj().T - R)) <= 1e-12


def test_block_decompose_rejects_bad_shape():
    with pytest.raises(ValueError):
        block_decompose(np.zeros((6, 6)), ProtocolParams(4, 1))


def test_xi_normalized():
    p = ProtocolParams(5, 2)
    assert np.linalg.norm(xi_state_A(p, 0.3)) == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(CONFIGS), st.floats(-math.pi, math.pi))
def test_phase_operator_blocks_any_phi(cfg, phi):
    p = ProtocolParams(*cfg)
    dec = block_decompose(build_R(p, "ph", phi), p)
    assert dec.leakage <= 1e-12
    assert np.max(np.abs(dec.blocks - closed_form_blocks(p, "ph", phi))) <= 1e-10
