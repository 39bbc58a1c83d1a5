import math

import pytest
from hypothesis import given, strategies as st

from mlqkd.channel import (ChannelModel, ObservedStats, X_from_r_con, detection_rate,
                           honest_stats, loss_constraint_rhs, max_K, stats_from_X, zeta)
from mlqkd.protocol import ProtocolParams
from mlqkd.source import angular_weights, poisson_dist


def test_honest_stats_sarg():
    s = honest_stats(ProtocolParams(4, 1), 0.1, ChannelModel(0.1, 0.1))
    assert s.eta_d == pytest.approx(0.01 * math.exp(-0.01))
    assert s.r_con == pytest.approx(0.1375)
    assert s.r_bit == pytest.approx(0.0125)


def test_noiseless_has_no_errors():
    s = honest_stats(ProtocolParams(6, 1), 0.3, ChannelModel(0.5, 0.0))
    assert s.r_bit == 0 and s.X == 1


def test_zeta_and_max_K():
    assert zeta(1) == pytest.approx(1 / 4)
    assert zeta(2) == pytest.approx(1 / 24)
    assert [max_K(M, 1) for M in (4, 5, 6, 8)] == [2, 3, 3, 4]
    assert max_K(4, 2) == 1
    assert max_K(8, 2) == 2


def test_invalid_inputs():
    with pytest.raises(ValueError):
        ChannelModel(0.0)
    with pytest.raises(ValueError):
        ChannelModel(0.5, 1.5)
    with pytest.raises(ValueError):
        X_from_r_con(ProtocolParams(4, 2), 0.25)
    with pytest.raises(ValueError):
        loss_constraint_rhs(angular_weights(poisson_dist(0.1), 4), 0.0)
    with pytest.raises(ValueError):
        ObservedStats(0.1, 1.0, 0.1, 0.2)


@given(st.integers(3, 10), st.integers(1, 5), st.floats(0, 1))
def test_X_roundtrip(M, L, eps):
    if 2 * L > M:
        return
    p = ProtocolParams(M, L)
    s = stats_from_X(p, 1 - eps, 0.01)
    assert ObservedStats.from_rates(p, 0.01, s.r_con, s.r_bit).X == pytest.approx(1 - eps)
    if 2 * L != M:
        assert X_from_r_con(p, s.r_con) == pytest.approx(1 - eps, abs=1e-9)


def test_detection_rate_small_loss_limit():
    assert detection_rate(0.1, 1e-6) == pytest.approx(1e-7, rel=1e-6)
