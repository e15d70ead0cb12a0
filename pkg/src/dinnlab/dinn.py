"""Disease-informed neural network: architecture, loss, and training loop.

The network maps normalized time to normalized compartment values. Unknown
ODE parameters ride along as trainable scalars squashed into their search
range by a tanh map, and the full-batch loss is

    sum_k MSE(data_k)  +  sum_k MSE(residual_k)

in normalized units: observations are divided by the per-compartment scale
and residuals by the same scale (so a residual reads as a relative rate per
day, and the data term dominates early training; normalizing residuals by
scale/horizon instead makes long-window fits collapse onto the trivial
ODE solution before the data can bind). Training uses Adam under a cyclic
learning-rate schedule with exponentially decaying amplitude.

Gradients flow through both the network outputs and their exact time
derivatives. The derivative channel is propagated alongside the forward pass
(forward mode) and back-propagation traverses both channels; the coupling of
the residual to an arbitrary registry rhs is differentiated on a reverse tape
with array-valued nodes. A slow scalar-tape reference of the same loss lives
in ``loss_gradient_reference`` for cross-checking.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .autodiff import DualScalar, Tape, Var
from .autodiff import tanh as ad_tanh
from .dataset import Dataset
from .integrate import IntegratorConfig, Trajectory, integrate
from .models import CompartmentModel, registry_get

__all__ = [
    "TrainConfig",
    "FitReport",
    "DinnModel",
    "DivergenceError",
    "constrain",
    "constrain_inverse",
    "make_range",
    "param_error",
    "cyclic_lr",
    "init_model",
    "residuals",
    "loss_components",
    "loss",
    "train",
    "error_nn",
    "error_learnable",
    "loss_gradient_reference",
]

CHECKPOINT_FORMAT = "dinnlab.checkpoint"
CHECKPOINT_VERSION = 1

_ADAM_B1 = 0.9
_ADAM_B2 = 0.999
_ADAM_EPS = 1e-8


class DivergenceError(RuntimeError):
    """Training loss became non-finite."""

    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration


def constrain(raw: float, lo: float, hi: float):
    """Map an unconstrained value into (lo, hi) via tanh; strictly monotone."""
    if lo >= hi:
        raise ValueError(f"need lo < hi, got ({lo}, {hi})")
    return lo + (hi - lo) * (np.tanh(raw) + 1.0) * 0.5


def constrain_inverse(value: float, lo: float, hi: float) -> float:
    """Raw preimage of ``value`` under :func:`constrain`."""
    if lo >= hi:
        raise ValueError(f"need lo < hi, got ({lo}, {hi})")
    return math.atanh(2.0 * (value - lo) / (hi - lo) - 1.0)


def make_range(true_value: float, pct: float) -> tuple[float, float]:
    """Search range as a percentage band around the literature value.

    100% on v gives (-2v, 2v) and wider bands are multiples of that one
    (1000% on 0.1 is (-2, 2)). 0% degenerates to (v, v): a fixed parameter.
    """
    if pct < 0:
        raise ValueError("pct must be >= 0")
    if pct == 0:
        return (true_value, true_value)
    half = 2.0 * abs(true_value) * (pct / 100.0)
    return (-half, half)


def param_error(found: float, actual: float) -> float:
    """Percentage relative error, or absolute error when actual is 0."""
    if actual == 0:
        return abs(found - actual)
    return 100.0 * abs(found - actual) / abs(actual)


@dataclass
class TrainConfig:
    """Full-batch Adam training configuration."""

    iterations: int = 100_000
    lr_min: float = 1e-6
    lr_max: float = 1e-3
    lr_mode: str = "exp_range"
    gamma: float = 0.85
    step_size_up: int = 1000
    seed: int = 0
    layers: int = 4
    neurons: int = 20
    activation: str = "relu"
    # None: use the registry search ranges; otherwise make_range(value, pct)
    param_range_pct: float | None = None
    # fix every parameter at its literature value (missing-data experiments)
    params_known: bool = False
    loss_exit: float | None = None
    log_every: int = 0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.lr_min > self.lr_max:
            raise ValueError("lr_min must be <= lr_max")
        if self.lr_mode != "exp_range":
            raise ValueError("only the exp_range schedule is implemented")
        if self.activation not in ("relu", "tanh"):
            raise ValueError("activation must be relu or tanh")

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "lr_min": self.lr_min,
            "lr_max": self.lr_max,
            "lr_mode": self.lr_mode,
            "gamma": self.gamma,
            "step_size_up": self.step_size_up,
            "seed": self.seed,
            "layers": self.layers,
            "neurons": self.neurons,
            "activation": self.activation,
            "param_range_pct": self.param_range_pct,
            "params_known": self.params_known,
            "loss_exit": self.loss_exit,
        }


def cyclic_lr(step: int, cfg: TrainConfig) -> float:
    """Closed-form exp_range cyclic learning rate at an iteration index.

    Triangular oscillation between lr_min and lr_max rising over
    ``step_size_up`` iterations and falling symmetrically, with the amplitude
    damped by ``gamma**step`` (decay indexed by iteration, so small gamma
    values collapse the cycle onto lr_min quickly).
    """
    s = cfg.step_size_up
    cycle = math.floor(1.0 + step / (2.0 * s))
    x = abs(step / s - 2.0 * cycle + 1.0)
    return cfg.lr_min + (cfg.lr_max - cfg.lr_min) * max(0.0, 1.0 - x) * cfg.gamma**step


@dataclass
class FitReport:
    """Structured training outcome."""

    found_params: dict
    error_nn: dict | None
    error_learnable: dict | None
    loss_history: list
    wall_time: float
    iterations_run: int
    final_loss: float
    seed: int
    notes: list = field(default_factory=list)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "found_params": self.found_params,
            "error_nn": self.error_nn,
            "error_learnable": self.error_learnable,
            "loss_history": [[int(i), float(v)] for i, v in self.loss_history],
            "iterations_run": self.iterations_run,
            "final_loss": self.final_loss,
            "seed": self.seed,
            "notes": list(self.notes),
        }
        if include_timing:
            out["wall_time"] = self.wall_time
        return out


@dataclass
class DinnModel:
    """MLP weights plus constrained-parameter state and scaling constants."""

    weights: list
    biases: list
    activation: str
    time_scale: float
    comp_scale: np.ndarray
    param_names: tuple
    param_lo: np.ndarray
    param_hi: np.ndarray
    raw_params: np.ndarray
    fixed_params: dict
    model_name: str = ""

    def constrained(self) -> np.ndarray:
        """Learnable parameter values, always inside their (lo, hi) ranges."""
        if self.raw_params.size == 0:
            return np.empty(0)
        return self.param_lo + (self.param_hi - self.param_lo) * (
            np.tanh(self.raw_params) + 1.0
        ) * 0.5

    def params_dict(self) -> dict:
        vals = dict(self.fixed_params)
        vals.update(zip(self.param_names, self.constrained()))
        return vals

    def forward(self, that: np.ndarray):
        """Vectorized value/tangent pass over normalized times.

        Returns (outputs, d/dthat, caches); caches feed the backward pass.
        """
        a = np.asarray(that, dtype=float)[:, None]
        adot = np.ones_like(a)
        caches = []
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W.T + b
            zdot = adot @ W.T
            caches.append((a, adot, z, zdot))
            if i == last:
                a, adot = z, zdot
            elif self.activation == "relu":
                gate = z > 0.0
                a = np.where(gate, z, 0.0)
                adot = np.where(gate, zdot, 0.0)
            else:
                a = np.tanh(z)
                adot = (1.0 - a * a) * zdot
        return a, adot, caches

    def backward(self, caches, gout, gdot):
        """Back-propagate adjoints of (outputs, d/dthat) to weights/biases."""
        n_layers = len(self.weights)
        grads_W = [None] * n_layers
        grads_b = [None] * n_layers
        u, v = gout, gdot
        for i in range(n_layers - 1, -1, -1):
            a_prev, adot_prev, z, zdot = caches[i]
            if i == n_layers - 1:
                gz, gzdot = u, v
            elif self.activation == "relu":
                gate = z > 0.0
                gz = np.where(gate, u, 0.0)
                gzdot = np.where(gate, v, 0.0)
            else:
                th = np.tanh(z)
                d1 = 1.0 - th * th
                gz = u * d1 + v * (-2.0 * th * d1) * zdot
                gzdot = v * d1
            grads_W[i] = gz.T @ a_prev + gzdot.T @ adot_prev
            grads_b[i] = gz.sum(axis=0)
            if i:
                W = self.weights[i]
                u = gz @ W
                v = gzdot @ W
        return grads_W, grads_b

    def predict(self, times) -> np.ndarray:
        """Denormalized compartment values at the given times."""
        that = np.asarray(times, dtype=float) / self.time_scale
        out, _, _ = self.forward(that)
        return out * self.comp_scale

    def predict_with_derivative(self, times):
        """Denormalized values and time derivatives (per day)."""
        that = np.asarray(times, dtype=float) / self.time_scale
        out, dot, _ = self.forward(that)
        return out * self.comp_scale, dot * self.comp_scale / self.time_scale

    # -- serialization --------------------------------------------------
    def to_checkpoint(self, path, config: TrainConfig | None = None) -> None:
        payload = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "model_name": self.model_name,
            "activation": self.activation,
            "time_scale": self.time_scale,
            "comp_scale": self.comp_scale.tolist(),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "param_names": list(self.param_names),
            "param_lo": self.param_lo.tolist(),
            "param_hi": self.param_hi.tolist(),
            "raw_params": self.raw_params.tolist(),
            "fixed_params": self.fixed_params,
            "config": config.to_dict() if config else None,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)

    @classmethod
    def from_checkpoint(cls, path) -> "DinnModel":
        with open(path) as fh:
            payload = json.load(fh)
        if payload.get("format") != CHECKPOINT_FORMAT:
            raise ValueError("not a dinnlab checkpoint")
        if payload.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
        return cls(
            weights=[np.asarray(w, dtype=float) for w in payload["weights"]],
            biases=[np.asarray(b, dtype=float) for b in payload["biases"]],
            activation=payload["activation"],
            time_scale=payload["time_scale"],
            comp_scale=np.asarray(payload["comp_scale"], dtype=float),
            param_names=tuple(payload["param_names"]),
            param_lo=np.asarray(payload["param_lo"], dtype=float),
            param_hi=np.asarray(payload["param_hi"], dtype=float),
            raw_params=np.asarray(payload["raw_params"], dtype=float),
            fixed_params=dict(payload["fixed_params"]),
            model_name=payload["model_name"],
        )


def _search_ranges(model: CompartmentModel, cfg: TrainConfig):
    """Split parameters into learnable (with ranges) and fixed groups."""
    learnable, fixed = [], {}
    for spec in model.params:
        if cfg.params_known or spec.known:
            fixed[spec.name] = spec.true_value
            continue
        if cfg.param_range_pct is None:
            lo, hi = spec.search_lo, spec.search_hi
        else:
            lo, hi = make_range(spec.true_value, cfg.param_range_pct)
        if lo == hi:
            fixed[spec.name] = spec.true_value
        else:
            learnable.append((spec.name, lo, hi))
    return learnable, fixed


def init_model(model: CompartmentModel, ds: Dataset, cfg: TrainConfig) -> DinnModel:
    """Seeded initialization: uniform +-1/sqrt(fan_in) weights, uniform raws.

    Raw parameter values are drawn from the centered interval (-2, 2), whose
    tanh image covers ~96% of each search range.
    """
    if ds.times[0] != 0.0:
        raise ValueError("dataset must start at t=0")
    rng = np.random.default_rng(cfg.seed)
    n_comp = len(model.compartments)
    sizes = [1] + [cfg.neurons] * cfg.layers + [n_comp]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    learnable, fixed = _search_ranges(model, cfg)
    raw = rng.uniform(-2.0, 2.0, size=len(learnable))
    return DinnModel(
        weights=weights,
        biases=biases,
        activation=cfg.activation,
        time_scale=float(ds.times[-1]),
        comp_scale=ds.scale.copy(),
        param_names=tuple(name for name, _, _ in learnable),
        param_lo=np.array([lo for _, lo, _ in learnable]),
        param_hi=np.array([hi for _, _, hi in learnable]),
        raw_params=raw,
        fixed_params=fixed,
        model_name=model.name,
    )


def residuals(model: CompartmentModel, net: DinnModel, t_batch) -> np.ndarray:
    """Per-point per-equation residuals in model units (counts per day)."""
    times = np.asarray(t_batch, dtype=float)
    values, derivs = net.predict_with_derivative(times)
    p = net.params_dict()
    f = model.rhs(times, [values[:, k] for k in range(values.shape[1])], p)
    rhs_mat = np.column_stack([np.broadcast_to(fk, times.shape) for fk in f])
    return derivs - rhs_mat


def _loss_terms(net: DinnModel, model: CompartmentModel, ds: Dataset, want_grad: bool):
    """Shared fast path for loss (and optionally its full gradient)."""
    times = ds.times
    that = times / net.time_scale
    out, dot, caches = net.forward(that)
    B, K = out.shape
    scale = net.comp_scale
    norm_obs = ds.observations / scale
    inv_T = 1.0 / net.time_scale
    inv_s = 1.0 / scale

    gout = np.zeros_like(out) if want_grad else None
    gdot = np.zeros_like(out) if want_grad else None

    data_term = 0.0
    for k in range(K):
        if ds.mask[k]:
            d = out[:, k] - norm_obs[:, k]
            data_term += float(d @ d) / B
            if want_grad:
                gout[:, k] += (2.0 / B) * d
        elif ds.init_only[k]:
            d0 = out[0, k] - norm_obs[0, k]
            data_term += d0 * d0
            if want_grad:
                gout[0, k] += 2.0 * d0

    tape = Tape()
    xv = [tape.var(out[:, k] * scale[k]) for k in range(K)]
    cons = net.constrained()
    cv = [tape.var(c) for c in cons]
    p = dict(net.fixed_params)
    p.update(zip(net.param_names, cv))
    f = model.rhs(times, xv, p)

    res_node = None
    res_const = 0.0
    r_vals = np.empty((B, K))
    for k in range(K):
        fk = f[k]
        if isinstance(fk, Var):
            rk = inv_T * dot[:, k] - inv_s[k] * fk
            r_vals[:, k] = rk.value
            sq = (rk * rk).mean()
            res_node = sq if res_node is None else res_node + sq
        else:
            rk = inv_T * dot[:, k] - inv_s[k] * np.broadcast_to(fk, (B,))
            r_vals[:, k] = rk
            res_const += float(rk @ rk) / B

    res_term = res_const + (res_node.value if res_node is not None else 0.0)
    if not want_grad:
        return data_term, res_term, None

    if res_node is not None:
        grads = tape.gradient(res_node, xv + cv)
        for k in range(K):
            gout[:, k] += scale[k] * grads[k]
        gc = np.array(grads[K:], dtype=float) if cv else np.empty(0)
    else:
        gc = np.zeros(len(cv))
    gdot += (2.0 / B) * r_vals * inv_T

    grads_W, grads_b = net.backward(caches, gout, gdot)
    if net.raw_params.size:
        th = np.tanh(net.raw_params)
        graw = gc * (net.param_hi - net.param_lo) * 0.5 * (1.0 - th * th)
    else:
        graw = np.empty(0)
    return data_term, res_term, (grads_W, grads_b, graw)


def loss_components(net, model, ds) -> tuple[float, float]:
    """(data MSE, residual MSE) in normalized units."""
    data_term, res_term, _ = _loss_terms(net, model, ds, want_grad=False)
    return data_term, res_term


def loss(net, model, ds) -> float:
    """Full-batch training loss."""
    data_term, res_term = loss_components(net, model, ds)
    return data_term + res_term


class _FlatAdam:
    """Adam over one flat parameter vector backed by network views."""

    def __init__(self, net: DinnModel):
        self.parts = [*net.weights, *net.biases, net.raw_params]
        self.sizes = [p.size for p in self.parts]
        n = sum(self.sizes)
        self.g = np.zeros(n)
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def pack_grad(self, grads_W, grads_b, graw):
        flat = self.g
        offset = 0
        for p in [*grads_W, *grads_b, graw]:
            size = p.size
            flat[offset : offset + size] = np.ravel(p)
            offset += size
        return flat

    def step(self, lr):
        self.t += 1
        g = self.g
        self.m *= _ADAM_B1
        self.m += (1.0 - _ADAM_B1) * g
        self.v *= _ADAM_B2
        self.v += (1.0 - _ADAM_B2) * g * g
        mhat = self.m / (1.0 - _ADAM_B1**self.t)
        vhat = self.v / (1.0 - _ADAM_B2**self.t)
        delta = lr * mhat / (np.sqrt(vhat) + _ADAM_EPS)
        offset = 0
        for p in self.parts:
            size = p.size
            p -= delta[offset : offset + size].reshape(p.shape)
            offset += size


def train(
    model: CompartmentModel,
    ds: Dataset,
    cfg: TrainConfig,
    truth: Trajectory | None = None,
):
    """Train a DINN on a dataset; deterministic given the config seed.

    Returns (net, FitReport). When a ground-truth trajectory is supplied the
    report carries the two relative-error metrics; re-integration failures
    from out-of-basin parameters are recorded as notes instead of raised.
    """
    if len(ds.mask) != len(model.compartments):
        raise ValueError("dataset does not match model compartment count")
    net = init_model(model, ds, cfg)
    opt = _FlatAdam(net)

    log_every = cfg.log_every or max(1, cfg.iterations // 200)
    history = []
    notes = []
    started = time.perf_counter()
    current = None
    iterations_run = cfg.iterations
    for step in range(cfg.iterations):
        data_term, res_term, grads = _loss_terms(net, model, ds, want_grad=True)
        current = data_term + res_term
        if not math.isfinite(current):
            raise DivergenceError(f"non-finite loss at iteration {step}", step)
        if step % log_every == 0:
            history.append((step, current))
        if cfg.loss_exit is not None and current < cfg.loss_exit:
            iterations_run = step
            break
        opt.pack_grad(*grads)
        opt.step(cyclic_lr(step, cfg))

    final_loss = loss(net, model, ds)
    history.append((iterations_run, final_loss))
    wall = time.perf_counter() - started

    found = net.params_dict()
    err_nn = err_learn = None
    if truth is not None:
        err_nn = error_nn(net, truth, model)
        try:
            err_learn = error_learnable(
                model, found, truth.states[0], truth.times, truth
            )
        except Exception as exc:  # out-of-basin parameters can blow up the ODE
            notes.append(f"error_learnable failed: {exc}")
    report = FitReport(
        found_params={k: float(v) for k, v in found.items()},
        error_nn=err_nn,
        error_learnable=err_learn,
        loss_history=history,
        wall_time=wall,
        iterations_run=iterations_run,
        final_loss=final_loss,
        seed=cfg.seed,
        notes=notes,
    )
    return net, report


def error_nn(net: DinnModel, truth: Trajectory, model: CompartmentModel | None = None) -> dict:
    """Relative L2 error of the network trajectory per compartment."""
    model = model or registry_get(net.model_name)
    pred = net.predict(truth.times)
    return _relative_errors(pred, truth.states, model.compartments)


def error_learnable(
    model: CompartmentModel,
    found_params: dict,
    y0,
    grid,
    truth: Trajectory,
    cfg: IntegratorConfig | None = None,
) -> dict:
    """Relative L2 error of the trajectory re-integrated from found params."""
    traj = integrate(model, found_params, y0, grid, cfg)
    return _relative_errors(traj.states, truth.states, model.compartments)


def _relative_errors(pred, true, names) -> dict:
    out = {}
    for k, name in enumerate(names):
        denom = float(np.linalg.norm(true[:, k]))
        if denom == 0.0:
            out[name] = float("nan")
        else:
            out[name] = float(np.linalg.norm(pred[:, k] - true[:, k]) / denom)
    return out


def loss_gradient_reference(net: DinnModel, model: CompartmentModel, ds: Dataset):
    """Scalar-tape recomputation of the training loss and its gradient.

    Every weight, bias, and raw parameter becomes its own tape leaf (in the
    same order as the fast path's flat vector); dual numbers with tape-valued
    components carry the time derivative. Slow; used to validate the
    vectorized implementation.
    """
    tape = Tape()
    wvars = [
        [[tape.var(float(w), trainable=True) for w in row] for row in W]
        for W in net.weights
    ]
    bvars = [[tape.var(float(b), trainable=True) for b in bs] for bs in net.biases]
    rawvars = [tape.var(float(r), trainable=True) for r in net.raw_params]

    cons = [
        lo + (hi - lo) * (ad_tanh(rv) + 1.0) * 0.5
        for rv, lo, hi in zip(rawvars, net.param_lo, net.param_hi)
    ]
    pdict = dict(net.fixed_params)
    pdict.update(zip(net.param_names, cons))

    times = ds.times
    B = times.size
    K = len(model.compartments)
    scale = net.comp_scale
    inv_T = 1.0 / net.time_scale
    norm_obs = ds.observations / scale
    n_layers = len(net.weights)

    total = None

    def acc(term):
        nonlocal total
        total = term if total is None else total + term

    for i in range(B):
        that = times[i] / net.time_scale
        h = [DualScalar(that, 1.0)]
        for layer in range(n_layers):
            nxt = []
            for row, bias in zip(wvars[layer], bvars[layer]):
                z = DualScalar(bias, 0.0)
                for w, hj in zip(row, h):
                    z = z + hj * w
                if layer < n_layers - 1:
                    z = z.relu() if net.activation == "relu" else z.tanh()
                nxt.append(z)
            h = nxt
        for k in range(K):
            if ds.mask[k]:
                d = h[k].value - norm_obs[i, k]
                acc((d * d) * (1.0 / B))
            elif ds.init_only[k] and i == 0:
                d = h[k].value - norm_obs[0, k]
                acc(d * d)
        xs = [h[k].value * scale[k] for k in range(K)]
        f = model.rhs(float(times[i]), xs, pdict)
        for k in range(K):
            r = h[k].tangent * inv_T - (1.0 / scale[k]) * f[k]
            acc((r * r) * (1.0 / B))

    grads = tape.gradient(total, tape.leaves)
    flat = np.array([float(g) for g in grads])
    return float(total.value), flat
