import pytest

from pmqcc import ChannelParams, ProtocolParams


@pytest.fixture
def bench_channel():
    """Benchmark channel at 50 km: 0.2 dB/km fiber, 65% detectors,
    7.2e-8 dark counts."""
    return ChannelParams(loss_rate=0.2, distance=50.0, detector_efficiency=0.65, dark_count=7.2e-8)


def bench_channel_at(distance: float) -> ChannelParams:
    return ChannelParams(
        loss_rate=0.2, distance=distance, detector_efficiency=0.65, dark_count=7.2e-8
    )


@pytest.fixture
def bench_protocol():
    return ProtocolParams(n_parties=3, signal_intensity=0.1333, slice_count=13, ec_efficiency=1.16)
