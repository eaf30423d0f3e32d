import os
from pathlib import Path

import hypothesis
import numpy as np
import pytest

from neuromachine.layout import CompileParams, build_images
from neuromachine.net_model import Stimulus, parse_network

hypothesis.settings.register_profile("default", deadline=None, max_examples=60)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.register_profile("thorough", deadline=None, max_examples=1000)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SAMPLES = Path(__file__).resolve().parents[1] / "src" / "neuromachine" / "samples"


def f32_bits(a):
    return np.ascontiguousarray(a, np.float32).view(np.uint32)


def assert_bits_equal(a, b):
    a, b = np.asarray(a, np.float32), np.asarray(b, np.float32)
    assert a.shape == b.shape
    bad = np.flatnonzero(f32_bits(a).ravel() != f32_bits(b).ravel())
    assert bad.size == 0, f"{bad.size} values differ, first at {bad[0]}: {a.ravel()[bad[0]]!r} vs {b.ravel()[bad[0]]!r}"


@pytest.fixture(scope="session")
def small_desc():
    return parse_network((SAMPLES / "three_neuron.net").read_text())


@pytest.fixture(scope="session")
def small_stimulus():
    return Stimulus.parse((SAMPLES / "three_neuron.stim").read_text())


@pytest.fixture(scope="session")
def net1000_desc():
    return parse_network((SAMPLES / "net1000.net").read_text())


@pytest.fixture
def compile_net():
    def _compile(desc, n_hn=1, p=2, out_dir=None):
        return build_images(desc, CompileParams(n_hn=n_hn, p=p), out_dir)
    return _compile


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LOG

    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
