import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fairleak.data import SynthSpec, make_split, synth_biased

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Imbalanced family where S leaks into both the features and the label.
FAMILY = SynthSpec(n=2000, p_s1=0.9, p_y1_given_s=(0.3, 0.97), mean_shift=2.5,
                   leak_shift=1.0, d=2, exact_frequency=True)


def family_run(seed):
    ds = synth_biased(FAMILY, seed)
    return ds, make_split(ds, seed=seed)


@pytest.fixture
def family():
    return family_run(0)


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p
    return _write


def rng(seed=0):
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
        if 11 not in RESULTS:
            terminalreporter.write_line("criterion 11: SKIP  external COMPAS CSV not supplied")
