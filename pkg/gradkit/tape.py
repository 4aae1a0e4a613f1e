"""
A reverse-mode differentiation tape over dense 64-bit arrays of rank <= 2.

Nodes are appended in evaluation order, so a node's inputs always have
smaller ids than the node itself and the tape is acyclic by construction.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import ArgumentError, NumericalError


class OpKind(str, Enum):
    LEAF = "leaf"
    CONSTANT = "constant"
    MATMUL = "matmul"
    ADD = "add"
    SCALE = "scale"
    CONCAT = "concat"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    SOFTMAX_CE = "softmax_cross_entropy"
    GATHER_ROW = "gather_row"
    SUM = "sum"
    WEIGHTED_SUM = "weighted_sum"


@dataclass(eq=False)
class TensorNode:
    node_id: int
    op: OpKind
    inputs: Tuple[int, ...]
    value: np.ndarray
    name: Optional[str] = None
    attrs: Dict[str, object] = field(default_factory=dict)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.value.shape)


def _as_array(value) -> np.ndarray:
    array = np.array(value, dtype=np.float64)
    if array.ndim > 2:
        raise ArgumentError(f"Tape values have rank <= 2, got shape {array.shape}")
    return array


class Tape:
    """Records operations and their values; see ``backward`` for the reverse pass."""

    def __init__(self):
        self.nodes: List[TensorNode] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def _push(self, op: OpKind, inputs: Sequence[int], value: np.ndarray, name: Optional[str] = None, **attrs) -> int:
        if not np.all(np.isfinite(value)):
            raise NumericalError(f"Non-finite value produced by {op.value}")
        node = TensorNode(len(self.nodes), op, tuple(inputs), value, name, dict(attrs))
        self.nodes.append(node)
        return node.node_id

    def node(self, node_id: int) -> TensorNode:
        if not 0 <= node_id < len(self.nodes):
            raise ArgumentError(f"Unknown node id {node_id}")
        return self.nodes[node_id]

    def value(self, node_id: int) -> np.ndarray:
        return self.node(node_id).value

    @property
    def leaves(self) -> List[int]:
        return [n.node_id for n in self.nodes if n.op == OpKind.LEAF]

    def leaf(self, value, name: Optional[str] = None) -> int:
        """A differentiable input (a parameter)."""
        return self._push(OpKind.LEAF, (), _as_array(value), name)

    def constant(self, value, name: Optional[str] = None) -> int:
        return self._push(OpKind.CONSTANT, (), _as_array(value), name)

    def matmul(self, a: int, b: int) -> int:
        va, vb = self.value(a), self.value(b)
        if va.ndim == 0 or vb.ndim == 0 or va.shape[-1] != vb.shape[0]:
            raise ArgumentError(f"matmul shape mismatch: {va.shape} @ {vb.shape}")
        return self._push(OpKind.MATMUL, (a, b), np.matmul(va, vb))

    def add(self, a: int, b: int) -> int:
        """Elementwise sum; a vector ``b`` is broadcast over the rows of a matrix ``a``."""
        va, vb = self.value(a), self.value(b)
        row_broadcast = va.ndim == 2 and vb.ndim == 1 and va.shape[1] == vb.shape[0]
        if va.shape != vb.shape and not row_broadcast:
            raise ArgumentError(f"add shape mismatch: {va.shape} + {vb.shape}")
        return self._push(OpKind.ADD, (a, b), va + vb, row_broadcast=row_broadcast)

    def scale(self, a: int, factor: float) -> int:
        return self._push(OpKind.SCALE, (a,), float(factor) * self.value(a), factor=float(factor))

    def concat(self, parts: Sequence[int], axis: int = 0) -> int:
        values = [self.value(p) for p in parts]
        if not values:
            raise ArgumentError("concat needs at least one input")
        ndim = values[0].ndim
        if ndim == 0 or any(v.ndim != ndim for v in values) or not 0 <= axis < ndim:
            raise ArgumentError(f"concat shape mismatch: {[v.shape for v in values]} on axis {axis}")
        other = [v.shape[:axis] + v.shape[axis + 1 :] for v in values]
        if any(o != other[0] for o in other):
            raise ArgumentError(f"concat shape mismatch: {[v.shape for v in values]} on axis {axis}")
        sizes = [v.shape[axis] for v in values]
        return self._push(OpKind.CONCAT, tuple(parts), np.concatenate(values, axis=axis), axis=axis, sizes=sizes)

    def tanh(self, a: int) -> int:
        return self._push(OpKind.TANH, (a,), np.tanh(self.value(a)))

    def sigmoid(self, a: int) -> int:
        # tanh form stays finite for large |x|
        return self._push(OpKind.SIGMOID, (a,), 0.5 * (1.0 + np.tanh(0.5 * self.value(a))))

    def softmax_cross_entropy(self, logits: int, target: int) -> int:
        """-log softmax(logits)[target] for a logit vector, in log-sum-exp form."""
        z = self.value(logits)
        if z.ndim != 1:
            raise ArgumentError(f"softmax_cross_entropy expects a logit vector, got shape {z.shape}")
        if not 0 <= target < z.shape[0]:
            raise ArgumentError(f"Target {target} out of range for {z.shape[0]} logits")
        shifted = z - np.max(z)
        log_norm = np.log(np.sum(np.exp(shifted)))
        probs = np.exp(shifted - log_norm)
        loss = np.asarray(log_norm - shifted[target])
        return self._push(OpKind.SOFTMAX_CE, (logits,), loss, target=target, probs=probs)

    def gather_row(self, a: int, index: int) -> int:
        va = self.value(a)
        if va.ndim != 2 or not 0 <= index < va.shape[0]:
            raise ArgumentError(f"gather_row: row {index} out of range for shape {va.shape}")
        return self._push(OpKind.GATHER_ROW, (a,), va[index].copy(), index=index)

    def sum(self, a: int) -> int:
        return self._push(OpKind.SUM, (a,), np.asarray(np.sum(self.value(a))))

    def weighted_sum(self, a: int, weights) -> int:
        """sum(a * weights) with constant weights; seeds externally computed gradients into the tape."""
        va = self.value(a)
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != va.shape:
            raise ArgumentError(f"weighted_sum shape mismatch: {va.shape} vs weights {w.shape}")
        return self._push(OpKind.WEIGHTED_SUM, (a,), np.asarray(np.sum(va * w)), weights=w)


def _matmul_grads(va: np.ndarray, vb: np.ndarray, g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if va.ndim == 2 and vb.ndim == 2:
        return g @ vb.T, va.T @ g
    if va.ndim == 2:
        return np.outer(g, vb), va.T @ g
    if vb.ndim == 2:
        return vb @ g, np.outer(va, g)
    return g * vb, g * va


def _input_grads(tape: Tape, node: TensorNode, g: np.ndarray) -> List[np.ndarray]:
    op = node.op
    if op == OpKind.MATMUL:
        ga, gb = _matmul_grads(tape.value(node.inputs[0]), tape.value(node.inputs[1]), g)
        return [ga, gb]
    if op == OpKind.ADD:
        return [g, np.sum(g, axis=0) if node.attrs["row_broadcast"] else g]
    if op == OpKind.SCALE:
        return [node.attrs["factor"] * g]  # type: ignore[operator]
    if op == OpKind.CONCAT:
        axis = node.attrs["axis"]
        bounds = np.cumsum(node.attrs["sizes"])[:-1]  # type: ignore[arg-type]
        return list(np.split(g, bounds, axis=axis))  # type: ignore[arg-type]
    if op == OpKind.TANH:
        return [g * (1.0 - node.value**2)]
    if op == OpKind.SIGMOID:
        return [g * node.value * (1.0 - node.value)]
    if op == OpKind.SOFTMAX_CE:
        grad = node.attrs["probs"].copy()  # type: ignore[attr-defined]
        grad[node.attrs["target"]] -= 1.0
        return [g * grad]
    if op == OpKind.GATHER_ROW:
        grad = np.zeros_like(tape.value(node.inputs[0]))
        grad[node.attrs["index"]] = g
        return [grad]
    if op == OpKind.SUM:
        return [np.full(tape.value(node.inputs[0]).shape, float(g))]
    if op == OpKind.WEIGHTED_SUM:
        return [float(g) * node.attrs["weights"]]  # type: ignore[operator]
    raise ArgumentError(f"No gradient rule for {op.value}")


def backward(tape: Tape, loss_node: int) -> Dict[int, np.ndarray]:
    """
    Reverse pass from a scalar node.

    Args:
        tape: The tape holding the forward computation
        loss_node: Id of a scalar node

    Returns:
        Dict[int, np.ndarray]: Gradient of the loss for every leaf id; zeros for leaves that do not reach the loss

    Raises:
        ArgumentError: The loss node is not a scalar
    """
    loss = tape.node(loss_node)
    if loss.value.shape != ():
        raise ArgumentError(f"backward needs a scalar loss, got shape {loss.value.shape}")

    grads: Dict[int, np.ndarray] = {loss_node: np.asarray(1.0)}
    for node in reversed(tape.nodes[: loss_node + 1]):
        g = grads.get(node.node_id)
        if g is None or not node.inputs:
            continue
        for input_id, input_grad in zip(node.inputs, _input_grads(tape, node, g)):
            if input_id in grads:
                grads[input_id] = grads[input_id] + input_grad
            else:
                grads[input_id] = input_grad

    result = {}
    for leaf_id in tape.leaves:
        g = grads.get(leaf_id)
        result[leaf_id] = np.zeros_like(tape.value(leaf_id)) if g is None else np.asarray(g, dtype=np.float64)
    return result
