import os

import numpy as np
import pytest

from config.config import Config
from services.mission import load_room
from services.params import load_params_file, read_params_document

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
PARAMS_PATH = os.path.join(ROOT, "config", "robopainter.params.json")
ROOMS_DIR = os.path.join(ROOT, "config", "rooms")


@pytest.fixture(scope="session")
def params():
    return load_params_file(PARAMS_PATH)


@pytest.fixture
def params_document():
    return read_params_document(PARAMS_PATH)


@pytest.fixture(scope="session")
def empty_room():
    return load_room(os.path.join(ROOMS_DIR, "empty4x4.json"))


@pytest.fixture(scope="session")
def door_room():
    return load_room(os.path.join(ROOMS_DIR, "door_window.json"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def isolated_config(tmp_path, monkeypatch):
    """Fresh Config singleton writing into a temporary output directory"""
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "outputs"))
    monkeypatch.setenv("ROBOPAINTER_PARAMS_PATH", PARAMS_PATH)
    Config.reset()
    yield Config.get_instance()
    Config.reset()
