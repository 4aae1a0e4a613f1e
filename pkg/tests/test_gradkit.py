import math

import numpy as np
import pytest

from gradkit import OpKind, Tape, backward, finite_difference_check, numeric_gradient
from utils.errors import ArgumentError, NumericalError


def _run(build, shapes, vector):
    """Build a tape whose leaves are slices of ``vector``; returns (tape, loss id, leaf ids)."""
    tape = Tape()
    leaves, offset = [], 0
    for shape in shapes:
        size = int(np.prod(shape))
        leaves.append(tape.leaf(vector[offset : offset + size].reshape(shape)))
        offset += size
    return tape, build(tape, leaves), leaves


def _check(build, shapes, seed=0):
    size = sum(int(np.prod(s)) for s in shapes)
    point = np.random.default_rng(seed).normal(size=size)
    tape, loss, leaves = _run(build, shapes, point)
    grads = backward(tape, loss)
    analytic = np.concatenate([grads[leaf].ravel() for leaf in leaves])

    def f(vector):
        t, node, _ = _run(build, shapes, vector)
        return float(t.value(node))

    return finite_difference_check(f, point, analytic)


def test_matmul_identity():
    tape = Tape()
    v = np.array([1.0, -2.0, 3.0])
    out = tape.matmul(tape.constant(np.eye(3)), tape.leaf(v))
    assert np.array_equal(tape.value(out), v)


def test_activations_at_zero():
    tape = Tape()
    x = tape.leaf(np.zeros(3))
    assert np.array_equal(tape.value(tape.tanh(x)), np.zeros(3))
    assert np.array_equal(tape.value(tape.sigmoid(x)), np.full(3, 0.5))


def test_softmax_cross_entropy_uniform():
    tape = Tape()
    loss = tape.softmax_cross_entropy(tape.leaf(np.zeros(4)), 0)
    assert float(tape.value(loss)) == pytest.approx(math.log(4.0), abs=1e-15)


def test_softmax_cross_entropy_is_stable():
    tape = Tape()
    loss = tape.softmax_cross_entropy(tape.leaf(np.array([1000.0, 0.0, -1000.0])), 1)
    assert float(tape.value(loss)) == pytest.approx(1000.0)


def test_backward_of_sum_is_ones():
    tape = Tape()
    v = tape.leaf(np.arange(5.0))
    grads = backward(tape, tape.sum(v))
    assert np.array_equal(grads[v], np.ones(5))


def test_backward_of_sigmoid_at_zero():
    tape = Tape()
    x = tape.leaf(0.0)
    grads = backward(tape, tape.sigmoid(x))
    assert float(grads[x]) == pytest.approx(0.25, abs=1e-15)


def test_unreached_leaves_get_zero_gradient():
    tape = Tape()
    used = tape.leaf(np.ones(2))
    unused = tape.leaf(np.ones((2, 3)))
    grads = backward(tape, tape.sum(used))
    assert np.array_equal(grads[unused], np.zeros((2, 3)))
    assert set(grads) == {used, unused}


def test_backward_needs_scalar_loss():
    tape = Tape()
    x = tape.leaf(np.ones(3))
    with pytest.raises(ArgumentError, match="scalar"):
        backward(tape, tape.tanh(x))


def test_matmul_shape_error_names_both_shapes():
    tape = Tape()
    a, b = tape.leaf(np.ones((2, 3))), tape.leaf(np.ones((2, 3)))
    with pytest.raises(ArgumentError, match=r"\(2, 3\) @ \(2, 3\)"):
        tape.matmul(a, b)


def test_add_shape_error():
    tape = Tape()
    with pytest.raises(ArgumentError):
        tape.add(tape.leaf(np.ones((2, 3))), tape.leaf(np.ones(2)))


def test_rank_above_two_is_refused():
    with pytest.raises(ArgumentError):
        Tape().leaf(np.ones((2, 2, 2)))


def test_non_finite_values_are_refused():
    tape = Tape()
    with pytest.raises(NumericalError):
        tape.leaf(np.array([1.0, np.nan]))


def test_nodes_are_recorded_in_order():
    tape = Tape()
    x = tape.leaf(np.ones(2))
    y = tape.tanh(x)
    node = tape.node(y)
    assert node.op == OpKind.TANH
    assert node.inputs == (x,)
    assert all(i < n.node_id for n in tape.nodes for i in n.inputs)
    assert tape.leaves == [x]


@pytest.mark.parametrize(
    "build, shapes",
    [
        (lambda t, lv: t.sum(t.matmul(lv[0], lv[1])), [(3, 4), (4, 2)]),
        (lambda t, lv: t.sum(t.matmul(lv[0], lv[1])), [(3, 4), (4,)]),
        (lambda t, lv: t.sum(t.matmul(lv[0], lv[1])), [(4,), (4, 2)]),
        (lambda t, lv: t.sum(t.add(lv[0], lv[1])), [(3, 2), (2,)]),
        (lambda t, lv: t.sum(t.scale(t.tanh(lv[0]), -2.5)), [(3, 2)]),
        (lambda t, lv: t.sum(t.tanh(t.concat([lv[0], lv[1]], axis=1))), [(2, 2), (2, 3)]),
        (lambda t, lv: t.sum(t.sigmoid(t.concat([lv[0], lv[1]], axis=0))), [(2, 3), (1, 3)]),
        (lambda t, lv: t.softmax_cross_entropy(t.gather_row(lv[0], 1), 2), [(3, 4)]),
        (lambda t, lv: t.weighted_sum(t.tanh(lv[0]), np.arange(6.0).reshape(2, 3)), [(2, 3)]),
    ],
)
def test_each_op_matches_finite_differences(build, shapes):
    report = _check(build, shapes)
    assert report.max_scaled_error <= 1e-6
    assert report.max_relative_error <= 1e-4


def _three_layer(tape, leaves):
    x, w1, b1, w2, b2, w3 = leaves
    h1 = tape.tanh(tape.add(tape.matmul(x, w1), b1))
    h2 = tape.sigmoid(tape.add(tape.matmul(h1, w2), b2))
    logits = tape.matmul(h2, w3)
    first = tape.softmax_cross_entropy(tape.gather_row(logits, 0), 1)
    second = tape.softmax_cross_entropy(tape.gather_row(logits, 2), 0)
    return tape.add(tape.scale(first, 0.5), second)


THREE_LAYER_SHAPES = [(3, 5), (5, 4), (4,), (4, 4), (4,), (4, 3)]


@pytest.mark.parametrize("seed", range(10))
def test_random_three_layer_composition(seed):
    report = _check(_three_layer, THREE_LAYER_SHAPES, seed)
    assert report.max_scaled_error <= 1e-6


def test_backward_is_deterministic():
    point = np.random.default_rng(3).normal(size=sum(int(np.prod(s)) for s in THREE_LAYER_SHAPES))
    first_tape, first_loss, leaves = _run(_three_layer, THREE_LAYER_SHAPES, point)
    second_tape, second_loss, _ = _run(_three_layer, THREE_LAYER_SHAPES, point)
    first, second = backward(first_tape, first_loss), backward(second_tape, second_loss)
    for leaf in leaves:
        assert np.array_equal(first[leaf], second[leaf])


def test_finite_difference_quadratic():
    report = finite_difference_check(lambda x: float(x[0] ** 2), np.array([3.0]), np.array([6.0]), step=1e-6)
    assert report.numeric[0] == pytest.approx(6.0)
    assert report.max_relative_error < 1e-9


def test_finite_difference_constant():
    report = finite_difference_check(lambda x: 4.0, np.zeros(3), np.zeros(3))
    assert np.array_equal(report.numeric, np.zeros(3))
    assert report.max_relative_error == 0.0


def test_finite_difference_reports_worst_coordinate():
    report = finite_difference_check(lambda x: float(np.sum(x**2)), np.array([1.0, 2.0]), np.array([2.0, 5.0]))
    assert report.worst_index == 1
    assert report.max_relative_error == pytest.approx(0.2, rel=1e-6)


def test_finite_difference_coordinate_subset():
    grad = numeric_gradient(lambda x: float(np.sum(x**2)), np.array([1.0, 2.0, 3.0]), coordinates=[2])
    assert grad[0] == grad[1] == 0.0
    assert grad[2] == pytest.approx(6.0)


def test_finite_difference_rejects_bad_step():
    with pytest.raises(ArgumentError):
        numeric_gradient(lambda x: 0.0, np.zeros(1), step=0.0)
