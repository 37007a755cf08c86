"""Q-value function approximators built on bare numpy.

Two architectures share one flat-parameter representation:

* ``gru``: a single gated-recurrent layer consumes the observation window
  step by step; the final hidden state feeds a linear output head.  The
  cell is the classic formulation (the reset gate multiplies the previous
  hidden state before its candidate projection):

      z_t = sigmoid(x_t Wxz + h_{t-1} Whz + bz)
      r_t = sigmoid(x_t Wxr + h_{t-1} Whr + br)
      c_t = tanh(x_t Wxc + (r_t * h_{t-1}) Whc + bc)
      h_t = (1 - z_t) * h_{t-1} + z_t * c_t

* ``mlp``: the window is flattened through fully-connected ReLU layers
  into the same linear head.

Parameters live in one flat float64 vector with named views, so the
optimizer, target copies and federated averaging all operate on plain
1-D arrays.  Gradients come from handwritten backprop, verified against
central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ArchSpec:
    kind: str                 # "gru" | "mlp"
    input_size: int           # features per window step
    history: int              # window length H
    n_actions: int
    hidden: int = 64          # GRU hidden size
    mlp_hidden: tuple = (64, 64)

    def to_json(self) -> dict:
        return {"kind": self.kind, "input_size": self.input_size,
                "history": self.history, "n_actions": self.n_actions,
                "hidden": self.hidden, "mlp_hidden": list(self.mlp_hidden)}

    @staticmethod
    def from_json(d: dict) -> "ArchSpec":
        return ArchSpec(d["kind"], d["input_size"], d["history"], d["n_actions"],
                        d["hidden"], tuple(d["mlp_hidden"]))


def _layout(arch: ArchSpec) -> list:
    f, h, a = arch.input_size, arch.hidden, arch.n_actions
    if arch.kind == "gru":
        return [("wx", (f, 3 * h)), ("wh", (h, 3 * h)), ("b", (3 * h,)),
                ("wo", (h, a)), ("bo", (a,))]
    if arch.kind == "mlp":
        sizes = (arch.history * f,) + tuple(arch.mlp_hidden)
        shapes = []
        for i in range(len(sizes) - 1):
            shapes.append((f"w{i}", (sizes[i], sizes[i + 1])))
            shapes.append((f"b{i}", (sizes[i + 1],)))
        shapes.append(("wo", (sizes[-1], a)))
        shapes.append(("bo", (a,)))
        return shapes
    raise ValueError(f"unknown architecture {arch.kind!r}")


@dataclass
class NetParams:
    """Flat parameter vector with named views into it."""
    arch: ArchSpec
    theta: np.ndarray
    views: dict = field(default_factory=dict, repr=False)

    def copy(self) -> "NetParams":
        return wrap_params(self.arch, self.theta.copy())

    @property
    def size(self) -> int:
        return self.theta.size


def wrap_params(arch: ArchSpec, theta: np.ndarray) -> NetParams:
    views = {}
    pos = 0
    for name, shape in _layout(arch):
        n = int(np.prod(shape))
        views[name] = theta[pos:pos + n].reshape(shape)
        pos += n
    if pos != theta.size:
        raise ValueError(f"parameter vector has {theta.size} entries, expected {pos}")
    return NetParams(arch, theta, views)


def param_count(arch: ArchSpec) -> int:
    return int(sum(np.prod(s) for _, s in _layout(arch)))


def init_params(arch: ArchSpec, rng: np.random.Generator) -> NetParams:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""
    theta = np.zeros(param_count(arch))
    params = wrap_params(arch, theta)
    for name, shape in _layout(arch):
        if len(shape) == 2:
            bound = 1.0 / np.sqrt(shape[0])
            params.views[name][:] = rng.uniform(-bound, bound, size=shape)
    return params


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _gru_forward(x, p: NetParams, keep_cache: bool):
    b, hsz = x.shape[0], p.arch.hidden
    v = p.views
    h = np.zeros((b, hsz))
    cache = []
    for t in range(x.shape[1]):
        xt = x[:, t, :]
        ax = xt @ v["wx"] + v["b"]
        ah2 = h @ v["wh"][:, :2 * hsz]
        z = _sigmoid(ax[:, :hsz] + ah2[:, :hsz])
        r = _sigmoid(ax[:, hsz:2 * hsz] + ah2[:, hsz:2 * hsz])
        rh = r * h
        c = np.tanh(ax[:, 2 * hsz:] + rh @ v["wh"][:, 2 * hsz:])
        h_new = (1.0 - z) * h + z * c
        if keep_cache:
            cache.append((xt, h, z, r, rh, c))
        h = h_new
    q = h @ v["wo"] + v["bo"]
    return q, (cache, h)


def _gru_backward(cache_pack, dq, p: NetParams, grad: NetParams):
    cache, h_last = cache_pack
    hsz = p.arch.hidden
    v, g = p.views, grad.views
    g["wo"] += h_last.T @ dq
    g["bo"] += dq.sum(axis=0)
    dh = dq @ v["wo"].T
    whz = v["wh"][:, :hsz]
    whr = v["wh"][:, hsz:2 * hsz]
    whc = v["wh"][:, 2 * hsz:]
    for xt, h_prev, z, r, rh, c in reversed(cache):
        dz = dh * (c - h_prev)
        dc = dh * z
        dh_prev = dh * (1.0 - z)
        dac = dc * (1.0 - c * c)
        g["wh"][:, 2 * hsz:] += rh.T @ dac
        drh = dac @ whc.T
        dr = drh * h_prev
        dh_prev += drh * r
        daz = dz * z * (1.0 - z)
        dar = dr * r * (1.0 - r)
        g["wh"][:, :hsz] += h_prev.T @ daz
        g["wh"][:, hsz:2 * hsz] += h_prev.T @ dar
        dax = np.concatenate([daz, dar, dac], axis=1)
        g["wx"] += xt.T @ dax
        g["b"] += dax.sum(axis=0)
        dh_prev += daz @ whz.T + dar @ whr.T
        dh = dh_prev


def _mlp_forward(x, p: NetParams, keep_cache: bool):
    v = p.views
    a = x.reshape(x.shape[0], -1)
    cache = []
    n_hidden = len(p.arch.mlp_hidden)
    for i in range(n_hidden):
        pre = a @ v[f"w{i}"] + v[f"b{i}"]
        post = np.maximum(pre, 0.0)
        if keep_cache:
            cache.append((a, pre))
        a = post
    q = a @ v["wo"] + v["bo"]
    return q, (cache, a)


def _mlp_backward(cache_pack, dq, p: NetParams, grad: NetParams):
    cache, a_last = cache_pack
    v, g = p.views, grad.views
    g["wo"] += a_last.T @ dq
    g["bo"] += dq.sum(axis=0)
    da = dq @ v["wo"].T
    for i in reversed(range(len(cache))):
        a_in, pre = cache[i]
        dpre = da * (pre > 0.0)
        g[f"w{i}"] += a_in.T @ dpre
        g[f"b{i}"] += dpre.sum(axis=0)
        da = dpre @ v[f"w{i}"].T


def forward(obs: np.ndarray, params: NetParams) -> np.ndarray:
    """Q-values for one observation window (H, F) or a batch (B, H, F)."""
    x = np.asarray(obs, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None, :, :]
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite observation")
    if x.shape[1] != params.arch.history or x.shape[2] != params.arch.input_size:
        raise ValueError(f"observation shape {x.shape[1:]} does not match "
                         f"({params.arch.history}, {params.arch.input_size})")
    fwd = _gru_forward if params.arch.kind == "gru" else _mlp_forward
    q, _ = fwd(x, params, keep_cache=False)
    return q[0] if single else q


def forward_cached(obs: np.ndarray, params: NetParams):
    x = np.asarray(obs, dtype=np.float64)
    fwd = _gru_forward if params.arch.kind == "gru" else _mlp_forward
    return fwd(x, params, keep_cache=True)


def backward(cache_pack, dq: np.ndarray, params: NetParams) -> np.ndarray:
    """Backpropagate output-side gradients ``dq`` to a flat parameter grad."""
    grad = wrap_params(params.arch, np.zeros_like(params.theta))
    bwd = _gru_backward if params.arch.kind == "gru" else _mlp_backward
    bwd(cache_pack, dq, params, grad)
    return grad.theta
