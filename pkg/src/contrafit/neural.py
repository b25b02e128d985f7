"""Small multilayer perceptron trained by per-sample backpropagation, with
an optional per-layer step-scaled update.

The per-sample cost is half the squared error, so a single linear neuron
reduces exactly to the LMS update. Layer factors use the entrywise L1 norm
of that layer's weight matrix normalized by the sup norm of the layer's
input activations, mirroring the vector case layer by layer.
"""

from dataclasses import dataclass

import numpy as np

from .contraction import FactorPolicy, step_factor
from .core import (
    DivergenceError,
    InvalidInputError,
    LearningCurve,
    RngStream,
    l1_norm,
    mse,
)

_ACTIVATIONS = {
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    "logistic": (
        lambda z: 1.0 / (1.0 + np.exp(-z)),
        lambda z: (s := 1.0 / (1.0 + np.exp(-z))) * (1.0 - s),
    ),
    "identity": (lambda z: z, lambda z: np.ones_like(z)),
}


@dataclass
class ForwardTrace:
    """Activations (input included) and pre-activations of one forward pass.
    Tied to the network version that produced it."""

    activations: list
    preacts: list
    version: int


class Mlp:
    """Fully connected network with identity output activation.

    Parameters
    ----------
    sizes: layer widths, e.g. ``[5, 8, 1]`` for one hidden layer of 8 units
    activation: hidden activation, one of tanh / logistic / identity
    mu: step size
    policy: optional FactorPolicy enabling the per-layer scaled update
    use_bias: add per-layer bias vectors (updated with the layer's factor)
    rng: RngStream for the fan-in scaled uniform weight init
    """

    def __init__(
        self,
        sizes,
        activation="tanh",
        mu=0.05,
        policy: FactorPolicy | None = None,
        use_bias=True,
        rng: RngStream | None = None,
    ):
        if len(sizes) < 2:
            raise InvalidInputError("Mlp: need at least input and output sizes")
        if activation not in _ACTIVATIONS:
            raise InvalidInputError(f"Mlp: unknown activation {activation!r}")
        if not mu > 0:
            raise InvalidInputError(f"Mlp: mu must be positive, got {mu}")
        rng = rng if rng is not None else RngStream(0)
        self.sizes = [int(s) for s in sizes]
        self.activation = activation
        self.mu = float(mu)
        self.policy = policy
        self.layers = []
        self.biases = [] if use_bias else None
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            w = (rng.uniform(n_out * n_in).reshape(n_out, n_in) - 0.5) / np.sqrt(n_in)
            self.layers.append(w)
            if use_bias:
                self.biases.append(np.zeros(n_out))
        self.steps_taken = 0
        self.last_factor = 1.0
        self._version = 0

    @property
    def l1(self) -> float:
        return float(sum(np.sum(np.abs(w)) for w in self.layers))

    def copy(self) -> "Mlp":
        dup = Mlp.__new__(Mlp)
        dup.sizes = list(self.sizes)
        dup.activation = self.activation
        dup.mu = self.mu
        dup.policy = self.policy
        dup.layers = [w.copy() for w in self.layers]
        dup.biases = None if self.biases is None else [b.copy() for b in self.biases]
        dup.steps_taken = self.steps_taken
        dup.last_factor = self.last_factor
        dup._version = self._version
        return dup

    def predict(self, X) -> np.ndarray:
        """Batch forward pass returning the scalar outputs."""
        act = _ACTIVATIONS[self.activation][0]
        a = np.asarray(X, dtype=float)
        last = len(self.layers) - 1
        for j, w in enumerate(self.layers):
            z = a @ w.T
            if self.biases is not None:
                z = z + self.biases[j]
            a = z if j == last else act(z)
        return a[:, 0] if a.ndim == 2 else a


def forward(mlp: Mlp, x) -> ForwardTrace:
    """Forward pass for one input, keeping activations and pre-activations
    for the backward pass. Output layer uses the identity activation."""
    x = np.asarray(x, dtype=float)
    if x.size != mlp.sizes[0]:
        raise InvalidInputError(f"forward: dim mismatch {x.size} vs {mlp.sizes[0]}")
    act = _ACTIVATIONS[mlp.activation][0]
    activations = [x]
    preacts = []
    last = len(mlp.layers) - 1
    for j, w in enumerate(mlp.layers):
        z = w @ activations[-1]
        if mlp.biases is not None:
            z = z + mlp.biases[j]
        preacts.append(z)
        activations.append(z if j == last else act(z))
    return ForwardTrace(activations=activations, preacts=preacts, version=mlp._version)


def backprop_deltas(mlp: Mlp, trace: ForwardTrace, t: float):
    """Backward pass for the half-squared-error cost.

    Returns ``(weight_grads, bias_grads)`` holding the descent increments
    ``G_j = delta_j (x) a_{j-1}`` per layer; adding ``mu * G_j`` to the
    weights is one plain gradient-descent step. ``bias_grads`` is None when
    the network has no biases.
    """
    if trace.version != mlp._version:
        raise InvalidInputError("backprop_deltas: trace is stale for this network")
    dact = _ACTIVATIONS[mlp.activation][1]
    n_layers = len(mlp.layers)
    e = float(t) - trace.activations[-1]
    delta = e  # identity output: dJ/dz_N = -(t - y)
    weight_grads = [None] * n_layers
    bias_grads = [None] * n_layers if mlp.biases is not None else None
    for j in range(n_layers - 1, -1, -1):
        weight_grads[j] = np.outer(delta, trace.activations[j])
        if bias_grads is not None:
            bias_grads[j] = delta
        if j > 0:
            delta = (mlp.layers[j].T @ delta) * dact(trace.preacts[j - 1])
    return weight_grads, bias_grads


def update_weights(mlp: Mlp, gradients, trace: ForwardTrace) -> Mlp:
    """Apply the per-layer update ``w(j) += f_j * mu * G_j``.

    ``f_j`` is 1 for the unscaled network and for the very first update;
    otherwise it comes from the layer's pre-update entrywise L1 norm and the
    sup norm of the layer's input activations. Bias vectors share their
    layer's factor.
    """
    weight_grads, bias_grads = gradients
    if len(weight_grads) != len(mlp.layers):
        raise InvalidInputError("update_weights: gradient/layer count mismatch")
    factors = []
    for j, (w, g) in enumerate(zip(mlp.layers, weight_grads)):
        if g.shape != w.shape:
            raise InvalidInputError(f"update_weights: shape mismatch at layer {j}")
        f = 1.0
        if mlp.policy is not None and mlp.steps_taken > 0:
            a_inf = float(np.max(np.abs(trace.activations[j])))
            if a_inf > 0.0:
                f = step_factor(l1_norm(w), a_inf, mlp.policy)
        w += (f * mlp.mu) * g
        if not np.all(np.isfinite(w)):
            raise DivergenceError(f"update_weights: non-finite weights in layer {j}")
        if mlp.biases is not None:
            mlp.biases[j] += (f * mlp.mu) * bias_grads[j]
        factors.append(f)
    mlp.steps_taken += 1
    mlp.last_factor = float(np.mean(factors))
    mlp._version += 1
    return mlp


def train_step(mlp: Mlp, sample) -> tuple:
    """Forward, backward and update for one sample. Returns (prediction, error)."""
    trace = forward(mlp, sample.x)
    y = float(trace.activations[-1][0])
    grads = backprop_deltas(mlp, trace, sample.t)
    update_weights(mlp, grads, trace)
    return y, sample.t - y


def train_epochs(
    mlp: Mlp,
    dataset,
    epochs: int,
    record_every: int = 1,
    rng: RngStream | None = None,
) -> LearningCurve:
    """Epoch training loop with RNG-shuffled sample order.

    Logs train/test MSE, the summed layer L1 norm and the mean realized
    factor at every ``record_every``-th epoch; the iteration column counts
    completed epochs.
    """
    if epochs < 1:
        raise InvalidInputError("train_epochs: epochs must be >= 1")
    if record_every < 1:
        raise InvalidInputError("train_epochs: record_every must be >= 1")
    n = len(dataset.train)
    if n == 0:
        raise InvalidInputError("train_epochs: empty training set")
    iters, train_curve, test_curve, l1s, factors = [], [], [], [], []
    fac_sum, fac_n = 0.0, 0
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n) if rng is not None else np.arange(n)
        for idx in order:
            train_step(mlp, dataset.train[int(idx)])
            fac_sum += mlp.last_factor
            fac_n += 1
        if epoch % record_every == 0:
            iters.append(epoch)
            train_curve.append(mse(mlp.predict(dataset.train_x), dataset.train_t))
            test_curve.append(mse(mlp.predict(dataset.test_x), dataset.test_t))
            l1s.append(mlp.l1)
            factors.append(fac_sum / fac_n)
            fac_sum, fac_n = 0.0, 0
    return LearningCurve(
        iterations=np.array(iters, dtype=int),
        train_mse=np.array(train_curve),
        test_mse=np.array(test_curve),
        l1=np.array(l1s),
        factor=np.array(factors),
    )
