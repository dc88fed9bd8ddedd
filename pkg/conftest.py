import os
import textwrap

import hypothesis
import numpy as np
import pytest

from tracing import disable_tracing

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=20, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=60, deadline=None, derandomize=True)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))

collect_ignore = ["examples"]

disable_tracing()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_graph(rng):
    """Builds a random nonnegative weight matrix with a zero diagonal."""
    def make(n, directed=False, density=0.6):
        w = rng.uniform(0.1, 1.0, size=(n, n)) * (rng.uniform(size=(n, n)) < density)
        if not directed:
            w = np.triu(w, 1)
            w = w + w.T
        np.fill_diagonal(w, 0.0)
        return w
    return make


SYNTHETIC_CONFIG = """
[data]
synthetic = true
synthetic_nodes = {nodes}
synthetic_steps = {steps}
synthetic_seed = 3
p = {p}
q = {q}

[graph]
kind = distance

[model]
archetype = rnn
graph_source = fixed
conv = diffusion
hidden = 4
k = 2

[train]
max_epochs = {epochs}
patience = 2
batch_size = 64
seed = 7

[output]
run = {run}

[benchmark]
models = {models}
baselines = persistence, historical-average
"""


@pytest.fixture
def write_config(tmp_path):
    """Writes a small synthetic run configuration into a fresh workspace and returns its path."""
    def write(nodes=4, steps=576, p=3, q=3, epochs=1, run="run", models="", extra=""):
        path = tmp_path / "run.conf"
        text = SYNTHETIC_CONFIG.format(nodes=nodes, steps=steps, p=p, q=q, epochs=epochs, run=run, models=models)
        path.write_text(textwrap.dedent(text) + extra, encoding="utf-8")
        return path
    return write
