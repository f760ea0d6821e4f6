import zlib

import numpy as np
import pytest

import radarhand as rh


@pytest.fixture(scope="session")
def radar():
    return rh.RadarParams()


@pytest.fixture(scope="session")
def small_radar():
    # 8 fast-time samples and 32 chirps/frame keep cube math cheap
    return rh.RadarParams(samples_per_chirp=8, chirps_per_frame=32)


@pytest.fixture(scope="session")
def small_stft():
    return rh.StftConfig(window_len=16, hop=16, target_frames=4)


@pytest.fixture(scope="session")
def grasp_seq():
    return rh.make_gesture("grasp", seed=11)


@pytest.fixture(scope="session")
def flat_hand():
    """One open hand, 20 joints, 25 cm in front of the radar."""
    joints = rh.make_gesture("slide", seed=0).joints[0]
    return joints


def rng_for(name: str) -> np.random.Generator:
    # stable per-test seeding without a global
    return np.random.default_rng(zlib.crc32(name.encode()))
