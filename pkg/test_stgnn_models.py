import numpy as np
import pytest

from errors import ConfigurationError, ContractError, DimensionError
from graph_construct import AdjMatrix, GraphKind
from stgnn_models import (
    GCGRUCell, build_model, count_parameters, forecast, forecast_cnn, forecast_rnn, gcgru_step,
    make_graph_source, model_spec, receptive_field, required_blocks, sinusoidal_encoding,
)
from tensor_core import Tape, mul, reduce_sum


def jitter(model, seed=0, scale=0.3):
    """Replace every parameter with a random draw so no zero-initialised layer hides the graph."""
    r = np.random.default_rng(seed)
    for param in model.parameters():
        param.value = r.normal(0.0, scale, size=param.shape)


def graph_of(w, directed=False):
    return AdjMatrix(w, GraphKind.DISTANCE, directed=directed)


def gradient_error(model, window, h=1e-5):
    """Relative error between tape gradients and central differences over every parameter entry."""
    weights = None

    def objective(tape):
        nonlocal weights
        out = model.forward(tape, window)
        if weights is None:
            weights = np.cos(np.arange(out.value.size, dtype=np.float64)).reshape(out.shape)
        return reduce_sum(mul(out, tape.constant(weights)))

    tape = Tape()
    tape.backward(objective(tape))
    analytic = {p.name: p.grad.copy() for p in model.parameters()}

    worst = 0.0
    for param in model.parameters():
        numeric = np.zeros_like(param.value)
        for idx in np.ndindex(param.shape):
            original = param.value[idx]
            param.value[idx] = original + h
            plus = float(objective(Tape()).value)
            param.value[idx] = original - h
            minus = float(objective(Tape()).value)
            param.value[idx] = original
            numeric[idx] = (plus - minus) / (2.0 * h)
        a = analytic[param.name]
        scale = max(np.linalg.norm(a), np.linalg.norm(numeric), 1.0)
        worst = max(worst, float(np.linalg.norm(a - numeric) / scale))
    return worst


SMALL = {"p": 3, "q": 2, "hidden": 4, "k": 2}


# ----- output shapes and helpers -----

@pytest.mark.parametrize("archetype", ["rnn", "cnn", "attention"])
def test_forecast_shapes(random_graph, rng, archetype):
    spec = model_spec(archetype=archetype, nodes=5, input_dim=2, output_dim=2, layers=2, **SMALL)
    model = build_model(spec, graph_of(random_graph(5)))
    batch = rng.normal(size=(4, 3, 5, 2))
    assert model.predict(batch).shape == (4, 2, 5, 2)
    assert forecast(model, batch[0]).shape == (2, 5, 2)


def test_window_shape_is_checked(random_graph, rng):
    model = build_model(model_spec(archetype="cnn", nodes=4, layers=2, **SMALL), graph_of(random_graph(4)))
    with pytest.raises(DimensionError):
        model.predict(rng.normal(size=(2, 4, 4, 1)))
    with pytest.raises(DimensionError):
        model.predict(rng.normal(size=(2, 3, 5, 1)))


def test_archetype_specific_forecast_helpers(random_graph, rng):
    model = build_model(model_spec(archetype="rnn", nodes=3, **SMALL), graph_of(random_graph(3)))
    assert forecast_rnn(model, rng.normal(size=(3, 3, 1))).shape == (2, 3, 1)
    with pytest.raises(ContractError):
        forecast_cnn(model, rng.normal(size=(3, 3, 1)))


def test_same_spec_gives_same_initial_parameters(random_graph):
    spec = model_spec(archetype="attention", nodes=4, seed=5, **SMALL)
    graph = graph_of(random_graph(4))
    a, b = build_model(spec, graph), build_model(spec, graph)
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert pa.name == pb.name
        np.testing.assert_array_equal(pa.value, pb.value)


def test_parameter_count_of_gcn_recurrent_model():
    spec = model_spec(archetype="rnn", conv="gcn", nodes=3, hidden=4, p=3, q=2)
    # encoder and decoder cells: three GCNs over 1 + 4 inputs each; 4 -> 1 projection
    assert count_parameters(spec) == 2 * 3 * (5 * 4 + 4) + (4 + 1)


# ----- permutation equivariance -----

@pytest.mark.parametrize("archetype", ["rnn", "cnn", "attention"])
@pytest.mark.parametrize("conv", ["diffusion", "cheb", "multi-hop", "gat", "masked-attention"])
def test_archetypes_are_permutation_equivariant(random_graph, rng, archetype, conv):
    spec = model_spec(archetype=archetype, conv=conv, nodes=6, layers=2, **SMALL)
    graph = graph_of(random_graph(6))
    model = build_model(spec, graph)
    jitter(model)
    x = rng.normal(size=(2, 3, 6, 1))
    perm = rng.permutation(6)
    out = model.predict(x)
    model.source.adjacency = graph.permuted(perm)
    permuted = model.predict(x[:, :, perm])
    np.testing.assert_allclose(permuted, out[:, :, perm], atol=1e-10, rtol=0.0)


# ----- recurrent archetype -----

def test_gcgru_step_matches_dense_equations(rng):
    spec = model_spec(archetype="rnn", conv="gcn", nodes=2, hidden=2)
    cell = GCGRUCell(spec, 1, 2, rng, "cell")
    for param in cell.parameters():
        param.value = rng.normal(size=param.shape)
    graph = graph_of(np.array([[0.0, 1.0], [1.0, 0.0]]))
    x, h = rng.normal(size=(2, 1)), rng.normal(size=(2, 2))
    tape = Tape()
    out = gcgru_step(cell, graph, tape.constant(x), tape.constant(h))

    propagation = np.eye(2) + np.array([[0.0, 1.0], [1.0, 0.0]])

    def gc(layer, z):
        return propagation @ z @ layer.weight.value + layer.bias.value

    def sigmoid(v):
        return 1.0 / (1.0 + np.exp(-v))

    r = sigmoid(gc(cell.reset, np.concatenate([x, h], axis=1)))
    u = sigmoid(gc(cell.update, np.concatenate([x, h], axis=1)))
    c = np.tanh(gc(cell.candidate, np.concatenate([x, r * h], axis=1)))
    np.testing.assert_allclose(out.value, u * h + (1.0 - u) * c, atol=1e-12)


def test_gcgru_step_rejects_mismatched_state(rng):
    spec = model_spec(archetype="rnn", nodes=2, hidden=2)
    cell = GCGRUCell(spec, 1, 2, rng, "cell")
    tape = Tape()
    with pytest.raises(DimensionError):
        gcgru_step(cell, graph_of(np.zeros((2, 2))), tape.constant(np.ones((2, 1))), tape.constant(np.ones((2, 3))))


def test_rnn_horizon_limits_decoder_steps(random_graph, rng):
    model = build_model(model_spec(archetype="rnn", nodes=3, p=3, q=4, hidden=4), graph_of(random_graph(3)))
    out = model.forward(Tape(), rng.normal(size=(2, 3, 3, 1)), horizon=2)
    assert out.shape == (2, 2, 3, 1)


def test_untrained_rnn_forecasts_zero(random_graph, rng):
    model = build_model(model_spec(archetype="rnn", nodes=3, **SMALL), graph_of(random_graph(3)))
    assert np.all(model.predict(rng.normal(size=(2, 3, 3, 1))) == 0.0)


# ----- convolutional archetype -----

def test_receptive_field_of_three_blocks():
    assert receptive_field(2, [1, 2, 4]) == 8
    assert required_blocks(2, 12) == 4
    assert required_blocks(3, 5) == 2


def test_cnn_rejects_short_receptive_field(random_graph):
    with pytest.raises(ConfigurationError, match="at least 4 blocks"):
        build_model(model_spec(archetype="cnn", nodes=3, p=12, q=3, layers=2, kernel_size=2),
                    graph_of(random_graph(3)))


def test_cnn_temporal_convolution_is_causal(random_graph, rng):
    model = build_model(model_spec(archetype="cnn", nodes=3, p=4, q=2, layers=2, hidden=4),
                        graph_of(random_graph(3)))
    jitter(model)
    x = rng.normal(size=(1, 4, 3, 1))
    model.predict(x)
    before = [h.copy() for h in model.last_block_outputs]
    x[:, -1] += 5.0
    model.predict(x)
    for old, new in zip(before, model.last_block_outputs):
        np.testing.assert_allclose(old[:, :-1], new[:, :-1], atol=1e-12, rtol=0.0)
        assert not np.allclose(old[:, -1], new[:, -1])


# ----- attention archetype -----

def test_sinusoidal_encoding_values():
    enc = sinusoidal_encoding(4, 6)
    assert enc.shape == (4, 6)
    np.testing.assert_allclose(enc[0], [0.0, 1.0, 0.0, 1.0, 0.0, 1.0])
    assert enc[1, 0] == pytest.approx(np.sin(1.0))


def test_temporal_attention_rows_sum_to_one(random_graph, rng):
    model = build_model(model_spec(archetype="attention", nodes=3, attention_heads=2, **SMALL),
                        graph_of(random_graph(3)))
    model.predict(rng.normal(size=(2, 3, 3, 1)))
    for weights in model.temporal[0].last_weights:
        assert weights.shape == (2, 3, 3, 3)
        assert np.all(np.abs(weights.sum(axis=-1) - 1.0) <= 1e-12)


def test_attention_heads_must_divide_width(random_graph):
    with pytest.raises(ConfigurationError):
        build_model(model_spec(archetype="attention", nodes=3, hidden=5, attention_heads=2, p=3, q=2),
                    graph_of(random_graph(3)))


# ----- graph sources -----

@pytest.mark.parametrize("archetype", ["rnn", "cnn", "attention"])
@pytest.mark.parametrize("source", ["adaptive-directed", "sampled"])
def test_model_gradients_reach_every_parameter(rng, archetype, source):
    spec = model_spec(archetype=archetype, graph_source=source, conv="gcn", nodes=3, p=3, q=2,
                      hidden=2, layers=2, attention_heads=1, embedding_dim=2)
    model = build_model(spec)
    jitter(model, scale=0.5)
    assert gradient_error(model, rng.normal(size=(2, 3, 3, 1))) < 1e-5


def test_adaptive_attention_source_reads_node_features(rng):
    spec = model_spec(archetype="cnn", graph_source="adaptive-attention", conv="diffusion", nodes=4,
                      input_dim=2, output_dim=2, layers=2, **SMALL)
    model = build_model(spec)
    model.predict(rng.normal(size=(2, 3, 4, 2)))
    assert np.all(np.abs(model.last_graph.weights.sum(axis=1) - 1.0) <= 1e-12)


def test_sampled_source_is_noisy_only_in_training(rng):
    model = build_model(model_spec(archetype="cnn", graph_source="sampled", nodes=4, layers=2, **SMALL))
    x = rng.normal(size=(1, 3, 4, 1))
    np.testing.assert_array_equal(model.predict(x), model.predict(x))
    first = model.forward(Tape(), x, training=True)
    first_graph = model.last_graph.weights
    model.forward(Tape(), x, training=True)
    assert not np.array_equal(first_graph, model.last_graph.weights)
    assert first.shape == (1, 2, 4, 1)
    probs = model.source.probabilities()
    assert np.all((probs > 0.0) & (probs < 1.0))


def test_graph_penalty_needs_learned_graph_and_prior(random_graph, rng):
    prior = graph_of(random_graph(4))
    x = rng.normal(size=(1, 3, 4, 1))
    learned = build_model(model_spec(archetype="rnn", graph_source="adaptive-undirected", nodes=4, **SMALL),
                          prior=prior)
    learned.forward(Tape(), x)
    penalty = learned.graph_penalty(0.5)
    expected = 0.5 * np.sum((learned.last_graph.weights - prior.weights) ** 2)
    assert float(penalty.value) == pytest.approx(expected, rel=1e-12)
    assert learned.graph_penalty(0.0) is None

    fixed = build_model(model_spec(archetype="rnn", nodes=4, **SMALL), prior)
    fixed.forward(Tape(), x)
    assert fixed.graph_penalty(0.5) is None


def test_sampled_graph_penalty_uses_edge_probabilities(random_graph, rng):
    prior = graph_of(random_graph(4))
    model = build_model(model_spec(archetype="rnn", graph_source="sampled", nodes=4, **SMALL), prior=prior)
    x = rng.normal(size=(1, 3, 4, 1))
    draws, penalties = [], []
    for _ in range(2):
        tape = Tape()
        model.forward(tape, x, training=True)
        draws.append(model.last_graph.weights)
        penalty = model.graph_penalty(0.5)
        penalties.append(float(penalty.value))
        tape.backward(penalty)
        assert np.any(model.source.e1.grad != 0.0)
    assert not np.array_equal(draws[0], draws[1])
    assert penalties[0] == penalties[1]
    expected = 0.5 * np.sum((model.source.probabilities() - prior.weights) ** 2)
    assert penalties[0] == pytest.approx(expected, rel=1e-12)


def test_chebyshev_rejects_a_directed_fixed_graph(random_graph):
    spec = model_spec(archetype="rnn", conv="cheb", nodes=4, **SMALL)
    with pytest.raises(ConfigurationError, match="undirected") as err:
        build_model(spec, graph_of(random_graph(4, directed=True), directed=True))
    assert err.value.exit_code == 2
    build_model(spec, graph_of(random_graph(4)))


def test_fixed_source_needs_a_graph(rng):
    model = build_model(model_spec(archetype="rnn", nodes=3, **SMALL))
    with pytest.raises(ContractError):
        model.predict(rng.normal(size=(1, 3, 3, 1)))


def test_graph_source_errors(rng, random_graph):
    with pytest.raises(ConfigurationError):
        make_graph_source("adaptive-sideways", 3, rng)
    with pytest.raises(DimensionError):
        make_graph_source("fixed", 3, rng, fixed=graph_of(random_graph(4)))


# ----- model spec validation -----

def test_model_spec_errors():
    with pytest.raises(ConfigurationError) as err:
        model_spec(archetype="transformer")
    assert err.value.key == "archetype"
    with pytest.raises(ConfigurationError):
        model_spec(archetype="rnn", conv="spline")
    with pytest.raises(ConfigurationError):
        model_spec(archetype="rnn", conv="cheb", graph_source="sampled")
    with pytest.raises(ConfigurationError):
        model_spec(archetype="rnn", hidden=0)
    with pytest.raises(ConfigurationError):
        model_spec(archetype="rnn", dropout=0.1)
