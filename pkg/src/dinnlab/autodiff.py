"""Scalar automatic differentiation for derivative-constrained losses.

Two cooperating pieces:

* ``Tape``/``Var`` -- reverse mode. Nodes are appended in evaluation order
  with parent indices and local partials; one reverse sweep accumulates
  adjoints. Values may be floats or same-shaped numpy arrays (all operations
  are elementwise), with scalar leaves receiving summed adjoints.
* ``DualScalar`` -- forward mode. Carries (value, tangent) through arithmetic
  so the exact time derivative of a network output is available. Components
  may themselves be tape variables, which is what lets a loss containing
  d(output)/dt be back-propagated to weights (forward-over-reverse).
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

__all__ = [
    "Tape",
    "Var",
    "DualScalar",
    "grad_loss",
    "forward_with_time_derivative",
    "relu",
    "tanh",
    "exp",
    "log",
]


def _raw(x):
    """Underlying numeric value of a Var/DualScalar/number."""
    if isinstance(x, Var):
        return x.value
    if isinstance(x, DualScalar):
        return _raw(x.value)
    return x


class Tape:
    """Append-only record of primitive operations with local partials."""

    def __init__(self):
        self._values: list = []
        self._deps: list = []  # tuple of (parent_index, partial)
        self._ndim: list = []
        self.leaves: list[Var] = []

    def __len__(self):
        return len(self._values)

    def var(self, value, trainable: bool = False) -> "Var":
        """Create a leaf variable; trainable leaves are registered for grad_loss."""
        node = self._node(value, ())
        if trainable:
            self.leaves.append(node)
        return node

    def _node(self, value, deps) -> "Var":
        idx = len(self._values)
        self._values.append(value)
        self._deps.append(deps)
        self._ndim.append(np.ndim(value))
        return Var(self, idx)

    def gradient(self, loss: "Var", wrt) -> list:
        """Adjoints of a scalar loss node with respect to ``wrt`` variables.

        Unused variables get gradient 0. One reverse sweep; contributions
        into scalar-valued nodes coming from array-valued children are summed
        (the broadcast adjoint rule).
        """
        if np.ndim(loss.value) != 0:
            raise ValueError("loss node must be scalar")
        n = loss.index + 1
        adj: list = [None] * n
        adj[loss.index] = 1.0
        deps = self._deps
        ndim = self._ndim
        for i in range(loss.index, -1, -1):
            a = adj[i]
            if a is None:
                continue
            for parent, partial in deps[i]:
                contrib = partial * a
                if ndim[parent] == 0 and np.ndim(contrib) > 0:
                    contrib = contrib.sum()
                if adj[parent] is None:
                    adj[parent] = contrib
                else:
                    adj[parent] = adj[parent] + contrib
        out = []
        for v in wrt:
            g = adj[v.index] if v.index < n else None
            if g is None:
                g = np.zeros_like(self._values[v.index]) if ndim[v.index] else 0.0
            elif ndim[v.index] and np.ndim(g) == 0:
                g = np.full(np.shape(self._values[v.index]), float(g))
            out.append(g)
        return out


def grad_loss(tape: Tape, loss_node: "Var") -> list:
    """Gradient of a scalar loss with respect to every registered leaf."""
    return tape.gradient(loss_node, tape.leaves)


class Var:
    """A value recorded on a tape. Supports elementwise arithmetic."""

    __slots__ = ("tape", "index")
    __array_ufunc__ = None  # keep numpy from broadcasting over Var objects

    def __init__(self, tape: Tape, index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self):
        return self.tape._values[self.index]

    def __repr__(self):
        return f"Var({self.value!r})"

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Var):
            return self.tape._node(
                self.value + other.value,
                ((self.index, 1.0), (other.index, 1.0)),
            )
        return self.tape._node(self.value + other, ((self.index, 1.0),))

    __radd__ = __add__

    def __neg__(self):
        return self.tape._node(-self.value, ((self.index, -1.0),))

    def __sub__(self, other):
        if isinstance(other, Var):
            return self.tape._node(
                self.value - other.value,
                ((self.index, 1.0), (other.index, -1.0)),
            )
        return self.tape._node(self.value - other, ((self.index, 1.0),))

    def __rsub__(self, other):
        return self.tape._node(other - self.value, ((self.index, -1.0),))

    def __mul__(self, other):
        if isinstance(other, Var):
            return self.tape._node(
                self.value * other.value,
                ((self.index, other.value), (other.index, self.value)),
            )
        return self.tape._node(self.value * other, ((self.index, other),))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Var):
            inv = 1.0 / other.value
            return self.tape._node(
                self.value * inv,
                ((self.index, inv), (other.index, -self.value * inv * inv)),
            )
        return self.tape._node(self.value / other, ((self.index, 1.0 / other),))

    def __rtruediv__(self, other):
        inv = 1.0 / self.value
        return self.tape._node(other * inv, ((self.index, -other * inv * inv),))

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise TypeError("only constant exponents are supported")
        val = self.value ** exponent
        return self.tape._node(
            val, ((self.index, exponent * self.value ** (exponent - 1)),)
        )

    # -- elementwise functions ----------------------------------------
    def exp(self):
        val = np.exp(self.value) if np.ndim(self.value) else math.exp(self.value)
        return self.tape._node(val, ((self.index, val),))

    def log(self):
        val = np.log(self.value) if np.ndim(self.value) else math.log(self.value)
        return self.tape._node(val, ((self.index, 1.0 / self.value),))

    def tanh(self):
        val = np.tanh(self.value) if np.ndim(self.value) else math.tanh(self.value)
        return self.tape._node(val, ((self.index, 1.0 - val * val),))

    def relu(self):
        # subderivative 0 at exactly 0
        if np.ndim(self.value):
            gate = (self.value > 0).astype(float)
            val = self.value * gate
        else:
            gate = 1.0 if self.value > 0 else 0.0
            val = self.value if self.value > 0 else 0.0
        return self.tape._node(val, ((self.index, gate),))

    # -- reductions ----------------------------------------------------
    def sum(self):
        if np.ndim(self.value) == 0:
            return self
        return self.tape._node(float(self.value.sum()), ((self.index, 1.0),))

    def mean(self):
        if np.ndim(self.value) == 0:
            return self
        n = self.value.size
        return self.tape._node(float(self.value.mean()), ((self.index, 1.0 / n),))


class DualScalar:
    """Forward-mode pair (value, tangent); components may be Vars."""

    __slots__ = ("value", "tangent")
    __array_ufunc__ = None

    def __init__(self, value, tangent=0.0):
        self.value = value
        self.tangent = tangent

    def __repr__(self):
        return f"DualScalar({self.value!r}, {self.tangent!r})"

    @staticmethod
    def _lift(x) -> "DualScalar":
        return x if isinstance(x, DualScalar) else DualScalar(x, 0.0)

    def __add__(self, other):
        o = self._lift(other)
        return DualScalar(self.value + o.value, self.tangent + o.tangent)

    __radd__ = __add__

    def __neg__(self):
        return DualScalar(-self.value, -self.tangent)

    def __sub__(self, other):
        o = self._lift(other)
        return DualScalar(self.value - o.value, self.tangent - o.tangent)

    def __rsub__(self, other):
        o = self._lift(other)
        return DualScalar(o.value - self.value, o.tangent - self.tangent)

    def __mul__(self, other):
        o = self._lift(other)
        return DualScalar(
            self.value * o.value, self.tangent * o.value + self.value * o.tangent
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        val = self.value / o.value
        return DualScalar(val, (self.tangent - val * o.tangent) / o.value)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, exponent):
        val = self.value ** exponent
        return DualScalar(val, exponent * self.value ** (exponent - 1) * self.tangent)

    def exp(self):
        val = exp(self.value)
        return DualScalar(val, val * self.tangent)

    def log(self):
        return DualScalar(log(self.value), self.tangent / self.value)

    def tanh(self):
        val = tanh(self.value)
        return DualScalar(val, (1.0 - val * val) * self.tangent)

    def relu(self):
        gate = 1.0 if _raw(self.value) > 0 else 0.0
        return DualScalar(relu(self.value), self.tangent * gate)


# generic elementwise helpers dispatching on type
def relu(x):
    if isinstance(x, (Var, DualScalar)):
        return x.relu()
    if np.ndim(x):
        return np.maximum(x, 0.0)
    return x if x > 0 else 0.0


def tanh(x):
    if isinstance(x, (Var, DualScalar)):
        return x.tanh()
    return np.tanh(x) if np.ndim(x) else math.tanh(x)


def exp(x):
    if isinstance(x, (Var, DualScalar)):
        return x.exp()
    return np.exp(x) if np.ndim(x) else math.exp(x)


def log(x):
    if isinstance(x, (Var, DualScalar)):
        return x.log()
    return np.log(x) if np.ndim(x) else math.log(x)


def forward_with_time_derivative(net, t: float):
    """Network outputs and their exact derivative with respect to the input.

    Runs the MLP once on the dual number (t, 1). ``net`` needs ``weights``,
    ``biases`` and ``activation`` attributes. Returns two lists, one entry
    per output unit. Exact away from ReLU kinks; the subderivative at an
    exactly-zero preactivation is 0.
    """
    hidden_act = relu if net.activation == "relu" else tanh
    h = [DualScalar(t, 1.0)]
    n_layers = len(net.weights)
    for layer, (W, b) in enumerate(zip(net.weights, net.biases)):
        out = []
        for row, bias in zip(W, b):
            z = DualScalar(float(bias), 0.0)
            for w, hj in zip(row, h):
                z = z + hj * float(w)
            out.append(z if layer == n_layers - 1 else hidden_act(z))
        h = out
    return [u.value for u in h], [u.tangent for u in h]
