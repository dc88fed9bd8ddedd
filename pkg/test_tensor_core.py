import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import CompatibilityError, ContractError, DimensionError, NumericalError
from tensor_core import (
    Parameter, Tape, absolute, add, broadcast, check_gradients, clip_gradient_norm, concat, div, exp,
    forward_primitive, global_grad_norm, inverse_power, leaky_relu, load_checkpoint, matmul, mul, neg,
    optimizer_step, OptimizerState, reduce_max, reduce_mean, reduce_sum, relu, reshape, restore_parameters,
    save_checkpoint, sigmoid, softmax, sub, take_slice, tanh, transpose,
)

GRAD_TOL = 1e-5
seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def away_from_zero(rng, shape, low=0.2):
    """Values bounded away from the kinks of abs, relu and leaky-relu."""
    return rng.uniform(low, 1.5, size=shape) * rng.choice([-1.0, 1.0], size=shape)


# (function of tape and leaves, input factory)
UNARY_CASES = {
    "neg": (lambda t, x: reduce_sum(mul(neg(x), x)), lambda r: r.normal(size=(3, 4))),
    "abs": (lambda t, x: reduce_sum(absolute(x)), lambda r: away_from_zero(r, (3, 4))),
    "exp": (lambda t, x: reduce_sum(exp(x)), lambda r: r.normal(size=(2, 3))),
    "tanh": (lambda t, x: reduce_sum(mul(tanh(x), x)), lambda r: r.normal(size=(3, 3))),
    "sigmoid": (lambda t, x: reduce_sum(mul(sigmoid(x), x)), lambda r: r.normal(size=(3, 3))),
    "relu": (lambda t, x: reduce_sum(mul(relu(x), x)), lambda r: away_from_zero(r, (4, 2))),
    "leaky-relu": (lambda t, x: reduce_sum(mul(leaky_relu(x, 0.2), x)), lambda r: away_from_zero(r, (4, 2))),
    "inverse-power": (lambda t, x: reduce_sum(inverse_power(x, 0.5)), lambda r: r.uniform(0.5, 2.0, size=(5,))),
    "softmax": (lambda t, x: reduce_sum(mul(softmax(x, axis=-1), t.constant(np.arange(12.0).reshape(3, 4)))),
                lambda r: r.normal(size=(3, 4))),
    "transpose": (lambda t, x: reduce_sum(mul(transpose(x), t.constant(np.arange(6.0).reshape(3, 2)))),
                  lambda r: r.normal(size=(2, 3))),
    "reshape": (lambda t, x: reduce_sum(mul(reshape(x, (3, 2)), t.constant(np.arange(6.0).reshape(3, 2)))),
                lambda r: r.normal(size=(2, 3))),
    "broadcast": (lambda t, x: reduce_sum(mul(broadcast(x, (3, 4)), t.constant(np.arange(12.0).reshape(3, 4)))),
                  lambda r: r.normal(size=(3, 1))),
    "slice": (lambda t, x: reduce_sum(mul(take_slice(x, (slice(None), slice(1, 3))), x[:, 0:2])),
              lambda r: r.normal(size=(3, 4))),
    "reduce-mean": (lambda t, x: reduce_sum(mul(reduce_mean(x, axis=0), reduce_mean(x, axis=0))),
                    lambda r: r.normal(size=(4, 3))),
    "reduce-max": (lambda t, x: reduce_sum(reduce_max(x, axis=-1)),
                   lambda r: r.permutation(12).astype(np.float64).reshape(3, 4)),
}

BINARY_CASES = {
    "add": (lambda t, a, b: reduce_sum(mul(add(a, b), a)), ((3, 4), (4,))),
    "sub": (lambda t, a, b: reduce_sum(mul(sub(a, b), b)), ((2, 3), (1, 3))),
    "mul": (lambda t, a, b: reduce_sum(mul(a, b)), ((3, 3), (3, 3))),
    "matmul": (lambda t, a, b: reduce_sum(mul(matmul(a, b), matmul(a, b))), ((2, 3, 4), (4, 2))),
    "concat": (lambda t, a, b: reduce_sum(mul(concat([a, b], axis=0), concat([b, a], axis=0))), ((2, 3), (2, 3))),
}


@pytest.mark.parametrize("name", sorted(UNARY_CASES))
@settings(max_examples=20)
@given(seed=seeds)
def test_unary_primitive_gradients(name, seed):
    fn, make = UNARY_CASES[name]
    x = make(np.random.default_rng(seed))
    assert check_gradients(fn, [x]) < GRAD_TOL


@pytest.mark.parametrize("name", sorted(BINARY_CASES))
@settings(max_examples=20)
@given(seed=seeds)
def test_binary_primitive_gradients(name, seed):
    fn, (sa, sb) = BINARY_CASES[name]
    r = np.random.default_rng(seed)
    assert check_gradients(fn, [r.normal(size=sa), r.normal(size=sb)]) < GRAD_TOL


@settings(max_examples=20)
@given(seed=seeds)
def test_div_gradients(seed):
    r = np.random.default_rng(seed)
    a, b = r.normal(size=(3, 2)), r.uniform(0.5, 2.0, size=(3, 2))
    assert check_gradients(lambda t, x, y: reduce_sum(div(x, y)), [a, b]) < GRAD_TOL


def test_gradient_of_reused_tensor_accumulates():
    tape = Tape()
    x = tape.variable([2.0])
    y = reduce_sum(x * x + x * 3.0)
    tape.backward(y)
    np.testing.assert_allclose(x.grad, [7.0])


def test_backward_requires_scalar_root():
    tape = Tape()
    x = tape.variable(np.ones((2, 2)))
    with pytest.raises(ContractError):
        tape.backward(x * 2.0)


def test_operands_from_two_tapes_rejected():
    a, b = Tape(), Tape()
    with pytest.raises(ContractError):
        add(a.variable([1.0]), b.variable([1.0]))


def test_leading_one_broadcast_only():
    tape = Tape()
    x = tape.variable(np.ones((3, 4)))
    add(x, tape.constant(np.ones(4)))
    with pytest.raises(DimensionError):
        add(x, tape.constant(np.ones((3, 1))))


def test_non_finite_values_raise():
    tape = Tape()
    with pytest.raises(NumericalError):
        tape.constant([np.nan])
    with pytest.raises(NumericalError):
        div(tape.variable([1.0]), tape.constant([0.0]))
    with pytest.raises(NumericalError):
        exp(tape.variable([1000.0]))


def test_inverse_power_zero_convention():
    tape = Tape()
    x = tape.variable([0.0, 4.0])
    y = inverse_power(x, 0.5)
    np.testing.assert_allclose(y.value, [0.0, 0.5])
    tape.backward(reduce_sum(y))
    np.testing.assert_allclose(x.grad, [0.0, -0.0625])


def test_softmax_rows_sum_to_one(rng):
    tape = Tape()
    y = softmax(tape.variable(rng.normal(size=(5, 7)) * 20.0), axis=-1)
    assert np.all(np.abs(y.value.sum(axis=-1) - 1.0) <= 1e-12)


def test_forward_primitive_dispatch():
    tape = Tape()
    x = tape.variable([[1.0, 2.0]])
    out = forward_primitive("matmul", [x, np.array([[1.0], [1.0]])])
    assert out.value.tolist() == [[3.0]]
    with pytest.raises(ContractError):
        forward_primitive("conv3d", [x])


def test_adam_first_step_moves_by_learning_rate():
    param = Parameter("w", np.array([1.0, -1.0]), grad=np.array([0.5, -2.0]))
    state = OptimizerState(learning_rate=0.1)
    optimizer_step([param], state)
    np.testing.assert_allclose(param.value, [0.9, -0.9], atol=1e-6)
    assert state.step == 1


def test_optimizer_requires_gradients():
    with pytest.raises(ContractError):
        optimizer_step([Parameter("w", np.ones(2))], OptimizerState())


def test_clip_gradient_norm_caps_joint_norm():
    params = [Parameter("a", np.zeros(2), grad=np.array([3.0, 4.0])),
              Parameter("b", np.zeros(1), grad=np.array([12.0]))]
    before = clip_gradient_norm(params, 5.0)
    assert before == pytest.approx(13.0)
    assert global_grad_norm(params) == pytest.approx(5.0)


def test_watched_parameter_receives_gradient():
    w = Parameter("w", np.array([[2.0]]))
    tape = Tape()
    out = reduce_sum(matmul(tape.constant([[3.0]]), tape.watch(w)))
    tape.backward(out)
    np.testing.assert_allclose(w.grad, [[3.0]])
    assert tape.parameters() == [w]


def test_checkpoint_round_trip_is_bit_exact(tmp_path, rng):
    params = [Parameter("layer.w", rng.normal(size=(3, 4))), Parameter("layer.b", rng.normal(size=(4,)))]
    save_checkpoint(tmp_path / "model", params, {"epoch": 3})
    values, metadata = load_checkpoint(tmp_path / "model")
    assert metadata == {"epoch": 3}
    for p in params:
        assert values[p.name].tobytes() == p.value.tobytes()

    fresh = [Parameter("layer.w", np.zeros((3, 4))), Parameter("layer.b", np.zeros(4))]
    restore_parameters(fresh, values)
    assert fresh[0].value.tobytes() == params[0].value.tobytes()


def test_checkpoint_mismatches_are_compatibility_errors(tmp_path):
    save_checkpoint(tmp_path / "model", [Parameter("w", np.ones((2, 2)))])
    values, _ = load_checkpoint(tmp_path / "model")
    with pytest.raises(CompatibilityError):
        restore_parameters([Parameter("w", np.ones((3, 2)))], values)
    with pytest.raises(CompatibilityError):
        restore_parameters([Parameter("v", np.ones((2, 2)))], values)
    with pytest.raises(CompatibilityError):
        load_checkpoint(tmp_path / "missing")


def test_adam_minimises_a_quadratic():
    w = Parameter("w", np.array([0.0]))
    state = OptimizerState(learning_rate=0.1)
    for _ in range(500):
        tape = Tape()
        diff = sub(tape.watch(w), tape.constant([5.0]))
        tape.backward(reduce_sum(mul(diff, diff)))
        optimizer_step([w], state)
    assert abs(w.value[0] - 5.0) < 0.05


def test_zero_gradient_leaves_parameters_unchanged():
    params = [Parameter("a", np.array([1.5, -2.0]), grad=np.zeros(2)),
              Parameter("b", np.array([[0.25]]), grad=np.zeros((1, 1)))]
    state = OptimizerState(learning_rate=0.1)
    for _ in range(3):
        optimizer_step(params, state)
    assert params[0].value.tolist() == [1.5, -2.0]
    assert params[1].value.tolist() == [[0.25]]


def test_clip_gradient_norm_examples():
    small = Parameter("s", np.zeros(2), grad=np.array([1.2, 1.6]))
    assert clip_gradient_norm([small], 5.0) == pytest.approx(2.0)
    assert small.grad.tolist() == [1.2, 1.6]

    large = Parameter("l", np.zeros(2), grad=np.array([6.0, 8.0]))
    assert clip_gradient_norm([large], 5.0) == pytest.approx(10.0)
    assert abs(global_grad_norm([large]) - 5.0) <= 1e-9

    pair = Parameter("p", np.zeros(2), grad=np.array([3.0, 4.0]))
    clip_gradient_norm([pair], 2.5)
    np.testing.assert_allclose(pair.grad, [1.5, 2.0], atol=1e-12)


def test_same_seed_replays_tape_and_gradients():
    def run(seed):
        r = np.random.default_rng(seed)
        w = Parameter("w", r.normal(size=(4, 3)))
        tape = Tape()
        x = tape.constant(r.normal(size=(5, 4)))
        out = softmax(tanh(matmul(x, tape.watch(w))), axis=-1)
        tape.backward(reduce_sum(mul(out, tape.constant(r.normal(size=(5, 3))))))
        ops = [node.op if node is not None else None for node in tape._nodes]
        return ops, [t.value for t in tape.tensors], w.grad

    ops_a, values_a, grad_a = run(3)
    ops_b, values_b, grad_b = run(3)
    assert ops_a == ops_b
    for a, b in zip(values_a, values_b):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(grad_a, grad_b)


@settings(max_examples=25)
@given(seed=seeds, rows=st.integers(1, 5), inner=st.integers(1, 5), cols=st.integers(1, 5))
def test_matmul_chain_gradients_for_random_shapes(seed, rows, inner, cols):
    r = np.random.default_rng(seed)

    def fn(t, a, b):
        return reduce_sum(mul(tanh(matmul(a, b)), sigmoid(matmul(a, b))))

    assert check_gradients(fn, [r.normal(size=(rows, inner)), r.normal(size=(inner, cols))]) < GRAD_TOL


@settings(max_examples=25)
@given(seed=seeds, shape=st.lists(st.integers(1, 4), min_size=1, max_size=3))
def test_elementwise_gradients_for_random_shapes(seed, shape):
    r = np.random.default_rng(seed)
    x = r.normal(size=tuple(shape))
    y = r.uniform(0.5, 2.0, size=tuple(shape))
    fn = lambda t, a, b: reduce_sum(add(mul(exp(a), div(a, b)), mul(softmax(a, axis=-1), b)))
    assert check_gradients(fn, [x, y]) < GRAD_TOL
