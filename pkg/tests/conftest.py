import numpy as np
import pytest

from ecghf import load_bank
from ecghf.signal_io import CHANNEL_NAMES, EcgRecord


@pytest.fixture(scope="session")
def haar():
    return load_bank("haar")


@pytest.fixture(scope="session")
def dmey():
    return load_bank("dmey")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_record(channels=None, rate=1028, subject="t01", label="unlabeled", n=8, rng=None):
    """Record builder; random channels of length n when none are given."""
    if channels is None:
        rng = rng or np.random.default_rng(0)
        channels = {name: rng.standard_normal(n) for name in CHANNEL_NAMES}
    return EcgRecord(channels=channels, sampling_rate=rate,
                     subject_id=subject, group_label=label)
