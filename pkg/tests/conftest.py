import numpy as np
import pytest

from rnnpb.network import NetworkTopology, init_network
from rnnpb.seqdata import SynthSpec, apply_normalizer, fit_normalizer, synth_corpus


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny():
    """D=2, n_h=3, n_PB=1 network with nonzero biases and a T=5 sequence."""
    r = np.random.default_rng(0)
    top = NetworkTopology(2, 3, 1)
    w = init_network(top, 1)
    w.b_h = r.normal(size=3)
    w.b_out = r.normal(size=2)
    x = r.uniform(0.1, 0.9, size=(5, 2))
    return top, w, x


@pytest.fixture(scope="session")
def small_corpus():
    raw = synth_corpus(SynthSpec(classes=2, dim=3, length=60, seed=3, period=30.0))
    return apply_normalizer(raw, fit_normalizer(raw))


@pytest.fixture(scope="session")
def small_model(small_corpus):
    from rnnpb.learning import TrainerConfig, train

    snap, report = train(small_corpus, NetworkTopology(3, 10, 2), TrainerConfig.desk(epochs=1500, seed=0))
    return snap, report


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
