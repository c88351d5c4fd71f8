"""Emission networks producing per-slot score vectors.

Both networks keep their weights in a flat ``params`` dict so that the
trainer, the checkpoint writer and the gradient checker can treat them
uniformly.  ``forward`` returns the five slot score arrays (slot order)
plus a cache, and ``backward`` maps score gradients back to a dict of
parameter gradients with the same keys.
"""
from dataclasses import dataclass

import numpy as np

from ..exceptions import InvalidInputError
from ..labels import SLOTS, VOCABULARIES

SLOT_SIZES = tuple(len(VOCABULARIES[s]) for s in SLOTS)
SEQ_LEN = 20


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _split(z, sizes):
    return np.split(z, np.cumsum(sizes)[:-1], axis=-1)


def _dropout_mask(rng, shape, keep_prob, dtype):
    if rng is None:
        raise InvalidInputError("train mode needs a random generator for dropout")
    return (rng.random(shape) < keep_prob).astype(dtype) / keep_prob


@dataclass
class MlpModel:
    """Stack of ReLU layers ending in a linear layer over the concatenated slot scores.

    ``sizes`` runs from the input width to ``sum(slot_sizes)``; every layer
    but the last is followed by a ReLU and (in train mode) dropout.
    """

    sizes: tuple
    params: dict
    keep_prob: float = 1.0
    slot_sizes: tuple = SLOT_SIZES

    @classmethod
    def create(cls, n_in, hidden=200, n_layers=1, keep_prob=1.0, rng=None, init_scale=0.1,
               slot_sizes=SLOT_SIZES, dtype=np.float64):
        rng = np.random.default_rng(rng)
        sizes = (n_in,) + (hidden,) * n_layers + (sum(slot_sizes),)
        params = {}
        for j, (a, b) in enumerate(zip(sizes[:-1], sizes[1:])):
            params[f"mlp{j}.W"] = rng.uniform(-init_scale, init_scale, size=(a, b)).astype(dtype)
            params[f"mlp{j}.b"] = np.zeros(b, dtype=dtype)
        return cls(tuple(sizes), params, keep_prob, tuple(slot_sizes))

    @property
    def n_in(self):
        return self.sizes[0]

    def validate(self):
        if self.sizes[-1] != sum(self.slot_sizes):
            raise InvalidInputError("output layer must match the slot vocabularies")
        for j, (a, b) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            if self.params[f"mlp{j}.W"].shape != (a, b) or self.params[f"mlp{j}.b"].shape != (b,):
                raise InvalidInputError(f"layer {j} does not match sizes {self.sizes}")
        return self

    def forward(self, x, train_mode=False, rng=None):
        x = np.asarray(x, dtype=self.params["mlp0.W"].dtype)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise InvalidInputError(f"expected rows of width {self.n_in}, got shape {x.shape}")
        n_layers = len(self.sizes) - 1
        acts, masks = [x], []
        h = x
        for j in range(n_layers):
            z = h @ self.params[f"mlp{j}.W"] + self.params[f"mlp{j}.b"]
            if j == n_layers - 1:
                h = z
                break
            h = np.maximum(z, 0.0)
            if train_mode and self.keep_prob < 1.0:
                m = _dropout_mask(rng, h.shape, self.keep_prob, h.dtype)
                h = h * m
                masks.append(m)
            else:
                masks.append(None)
            acts.append(h)
        return _split(h, self.slot_sizes), (acts, masks)

    def backward(self, cache, dscores):
        acts, masks = cache
        grads = {}
        dh = np.concatenate(dscores, axis=-1).astype(acts[0].dtype)
        for j in reversed(range(len(self.sizes) - 1)):
            a = acts[j]
            grads[f"mlp{j}.W"] = a.T @ dh
            grads[f"mlp{j}.b"] = dh.sum(axis=0)
            if j == 0:
                break
            dh = dh @ self.params[f"mlp{j}.W"].T
            if masks[j - 1] is not None:
                dh = dh * masks[j - 1]
            dh = dh * (a > 0)
        return grads


def mlp_forward(model, x, train_mode=False, rng=None):
    """Per-slot scores for event-level rows ``x`` of shape (n, d) or (d,)."""
    x = np.asarray(x)
    single = x.ndim == 1
    scores, _ = model.forward(x[None] if single else x, train_mode, rng)
    return [s[0] for s in scores] if single else scores


@dataclass
class LstmModel:
    """Shared linear input projection feeding five independent LSTM stacks.

    Stack ``k`` produces the scores of slot ``k`` from its top hidden state
    at the final time step.  The stacks are stored with a leading axis of
    length five so that all of them advance with one batched matmul.  Gate
    order along the last axis is input, forget, output, candidate.
    """

    n_in: int
    input_size: int
    hidden: int
    n_layers: int
    params: dict
    keep_prob: float = 1.0
    slot_sizes: tuple = SLOT_SIZES
    seq_len: int = SEQ_LEN

    @classmethod
    def create(cls, n_in, hidden=200, n_layers=1, input_size=None, keep_prob=1.0, rng=None,
               init_scale=0.1, slot_sizes=SLOT_SIZES, seq_len=SEQ_LEN, dtype=np.float64):
        rng = np.random.default_rng(rng)
        m = input_size or hidden
        k = len(slot_sizes)

        def u(*shape):
            return rng.uniform(-init_scale, init_scale, size=shape).astype(dtype)

        params = {"in.W": u(n_in, m), "in.b": np.zeros(m, dtype=dtype)}
        for j in range(n_layers):
            params[f"lstm{j}.Wx"] = u(k, m if j == 0 else hidden, 4 * hidden)
            params[f"lstm{j}.Wh"] = u(k, hidden, 4 * hidden)
            params[f"lstm{j}.b"] = np.zeros((k, 4 * hidden), dtype=dtype)
        for slot, n in zip(SLOTS, slot_sizes):
            params[f"head.{slot}.W"] = u(hidden, n)
            params[f"head.{slot}.b"] = np.zeros(n, dtype=dtype)
        return cls(n_in, m, hidden, n_layers, params, keep_prob, tuple(slot_sizes), seq_len)

    def validate(self):
        k, h = len(self.slot_sizes), self.hidden
        expect = {"in.W": (self.n_in, self.input_size), "in.b": (self.input_size,)}
        for j in range(self.n_layers):
            expect[f"lstm{j}.Wx"] = (k, self.input_size if j == 0 else h, 4 * h)
            expect[f"lstm{j}.Wh"] = (k, h, 4 * h)
            expect[f"lstm{j}.b"] = (k, 4 * h)
        for slot, n in zip(SLOTS, self.slot_sizes):
            expect[f"head.{slot}.W"] = (h, n)
            expect[f"head.{slot}.b"] = (n,)
        for key, shape in expect.items():
            if key not in self.params or self.params[key].shape != shape:
                raise InvalidInputError(f"parameter {key} should have shape {shape}")
        return self

    def forward(self, X, train_mode=False, rng=None):
        dtype = self.params["in.W"].dtype
        X = np.asarray(X, dtype=dtype)
        if X.ndim != 3 or X.shape[1] != self.seq_len or X.shape[2] != self.n_in:
            raise InvalidInputError(
                f"expected sequences of shape (n, {self.seq_len}, {self.n_in}), got {X.shape}")
        n, T, _ = X.shape
        K, H = len(self.slot_sizes), self.hidden
        drop = train_mode and self.keep_prob < 1.0
        xp = X.reshape(n * T, -1) @ self.params["in.W"] + self.params["in.b"]
        inp = xp[None]  # (1 or K, n*T, m)
        layers = []
        for j in range(self.n_layers):
            Wh, b = self.params[f"lstm{j}.Wh"], self.params[f"lstm{j}.b"]
            gx = (inp @ self.params[f"lstm{j}.Wx"]).reshape(K, n, T, 4 * H) + b[:, None, None, :]
            h = np.zeros((K, n, H), dtype=dtype)
            c = np.zeros((K, n, H), dtype=dtype)
            gates = np.empty((K, n, T, 4 * H), dtype=dtype)
            cs = np.empty((K, n, T + 1, H), dtype=dtype)
            tcs = np.empty((K, n, T, H), dtype=dtype)
            hs = np.empty((K, n, T + 1, H), dtype=dtype)
            cs[:, :, 0] = 0.0
            hs[:, :, 0] = 0.0
            for t in range(T):
                z = gx[:, :, t] + h @ Wh
                g = np.empty_like(z)
                g[..., :3 * H] = _sigmoid(z[..., :3 * H])
                g[..., 3 * H:] = np.tanh(z[..., 3 * H:])
                i, f, o, cand = g[..., :H], g[..., H:2 * H], g[..., 2 * H:3 * H], g[..., 3 * H:]
                c = f * c + i * cand
                tc = np.tanh(c)
                h = o * tc
                gates[:, :, t], cs[:, :, t + 1], tcs[:, :, t], hs[:, :, t + 1] = g, c, tc, h
            out = hs[:, :, 1:]
            mask = _dropout_mask(rng, out.shape, self.keep_prob, dtype) if drop else None
            if mask is not None:
                out = out * mask
            layers.append((inp, gates, cs, tcs, hs, mask))
            inp = out.reshape(K, n * T, H)
        top = inp.reshape(K, n, T, H)[:, :, -1]
        scores = [top[k] @ self.params[f"head.{slot}.W"] + self.params[f"head.{slot}.b"]
                  for k, slot in enumerate(SLOTS)]
        return scores, (n, T, X, top, layers)

    def backward(self, cache, dscores):
        n, T, X, top, layers = cache
        K, H = len(self.slot_sizes), self.hidden
        dtype = top.dtype
        grads = {}
        d_out = np.zeros((K, n, T, H), dtype=dtype)
        for k, slot in enumerate(SLOTS):
            ds = np.asarray(dscores[k], dtype=dtype)
            grads[f"head.{slot}.W"] = top[k].T @ ds
            grads[f"head.{slot}.b"] = ds.sum(axis=0)
            d_out[k, :, -1] = ds @ self.params[f"head.{slot}.W"].T
        for j in reversed(range(self.n_layers)):
            inp, gates, cs, tcs, hs, mask = layers[j]
            if mask is not None:
                d_out = d_out * mask
            Wh = self.params[f"lstm{j}.Wh"]
            WhT = np.swapaxes(Wh, 1, 2)
            dz_all = np.empty((K, n, T, 4 * H), dtype=dtype)
            dh_next = np.zeros((K, n, H), dtype=dtype)
            dc_next = np.zeros((K, n, H), dtype=dtype)
            for t in reversed(range(T)):
                g = gates[:, :, t]
                i, f, o, cand = g[..., :H], g[..., H:2 * H], g[..., 2 * H:3 * H], g[..., 3 * H:]
                tc = tcs[:, :, t]
                dh = d_out[:, :, t] + dh_next
                dc = dh * o * (1.0 - tc * tc) + dc_next
                dz = dz_all[:, :, t]
                dz[..., :H] = dc * cand * i * (1.0 - i)
                dz[..., H:2 * H] = dc * cs[:, :, t] * f * (1.0 - f)
                dz[..., 2 * H:3 * H] = dh * tc * o * (1.0 - o)
                dz[..., 3 * H:] = dc * i * (1.0 - cand * cand)
                dc_next = dc * f
                dh_next = dz @ WhT
            h_prev = hs[:, :, :T].reshape(K, n * T, H)
            dz_flat = dz_all.reshape(K, n * T, 4 * H)
            grads[f"lstm{j}.Wh"] = np.swapaxes(h_prev, 1, 2) @ dz_flat
            grads[f"lstm{j}.b"] = dz_all.sum(axis=(1, 2))
            grads[f"lstm{j}.Wx"] = np.swapaxes(inp, 1, 2) @ dz_flat
            d_inp = dz_flat @ np.swapaxes(self.params[f"lstm{j}.Wx"], 1, 2)
            if j > 0:
                d_out = d_inp.reshape(K, n, T, H)
        d_xp = d_inp.sum(axis=0)
        grads["in.W"] = X.reshape(n * T, -1).T @ d_xp
        grads["in.b"] = d_xp.sum(axis=0)
        return grads


def lstm_forward(model, X, train_mode=False, rng=None):
    """Per-slot scores for one (T, d) sequence or a batch of shape (n, T, d)."""
    X = np.asarray(X)
    single = X.ndim == 2
    if single and X.shape[0] != model.seq_len:
        raise InvalidInputError(f"expected {model.seq_len} rows, got {X.shape[0]}")
    scores, _ = model.forward(X[None] if single else X, train_mode, rng)
    return [s[0] for s in scores] if single else scores


__all__ = ["SEQ_LEN", "SLOT_SIZES", "LstmModel", "MlpModel", "lstm_forward", "mlp_forward"]
