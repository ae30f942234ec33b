"""Small dense networks with hand-written backpropagation.

Parameters are kept as a flat list ``[W0, b0, W1, b1, ...]`` with weights of
shape ``(fan_in, fan_out)``; inputs are batches of shape ``(batch, dim)``.
The dueling head ends in two parallel layers, a one-unit value stream
followed by an advantage stream, combined as ``Q = V + A - mean(A)``.
"""
from __future__ import annotations

import hashlib
import json
import struct

import numpy as np

HEADS = ("linear", "softmax", "dueling")
ACTIVATIONS = ("relu", "tanh")


class ShapeError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


class IntegrityError(ValueError):
    """A checkpoint file is truncated, corrupted or of another version."""


def _act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _act_grad(name, z, a):
    if name == "relu":
        return (z > 0).astype(z.dtype)
    return 1.0 - a * a


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


class DenseNetwork:
    """Multilayer perceptron with a linear, softmax or dueling head.

    Parameters
    ----------
    dims : sequence of int
        ``[input, hidden..., output]``.  For the dueling head the output is
        the number of actions.
    head : str
        One of ``HEADS``.
    activation : str
        Hidden-layer nonlinearity, one of ``ACTIVATIONS``.
    params : list of ndarray, optional
        Parameters in layout order; zeros when omitted.
    """

    def __init__(self, dims, head="linear", activation="relu", params=None):
        dims = [int(d) for d in dims]
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError(f"invalid layer dimensions {dims}")
        if head not in HEADS:
            raise ValueError(f"unknown head {head!r}")
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.dims, self.head, self.activation = dims, head, activation
        shapes = self.param_shapes()
        if params is None:
            params = [np.zeros(s) for s in shapes]
        params = [np.array(p, dtype=np.float64) for p in params]
        if [p.shape for p in params] != shapes:
            raise ShapeError("parameter shapes do not match the layer dimensions")
        self.params = params

    def param_shapes(self):
        d = self.dims
        shapes = []
        for a, b in zip(d[:-2], d[1:-1]):
            shapes += [(a, b), (b,)]
        if self.head == "dueling":
            shapes += [(d[-2], 1), (1,), (d[-2], d[-1]), (d[-1],)]
        else:
            shapes += [(d[-2], d[-1]), (d[-1],)]
        return shapes

    @property
    def n_hidden(self):
        return len(self.dims) - 2

    @classmethod
    def xavier(cls, dims, rng, head="linear", activation="relu"):
        """Uniform Xavier initialization with zero biases."""
        net = cls(dims, head, activation)
        for i, shape in enumerate(net.param_shapes()):
            if len(shape) == 2:
                bound = np.sqrt(6.0 / (shape[0] + shape[1]))
                net.params[i] = rng.uniform(-bound, bound, size=shape)
        return net

    def copy(self):
        return DenseNetwork(self.dims, self.head, self.activation,
                            [p.copy() for p in self.params])

    def load_params(self, other):
        for mine, theirs in zip(self.params, other.params):
            mine[...] = theirs

    def fingerprint(self):
        h = hashlib.blake2b(digest_size=16)
        for p in self.params:
            h.update(p.tobytes())
        return h.hexdigest()

    # ------------------------------------------------------------ forward

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.dims[0]:
            raise ShapeError(f"expected input width {self.dims[0]}, got shape {x.shape}")
        return x

    def forward_cache(self, x):
        """Forward pass returning ``(output, cache)`` for :meth:`backward`.

        ``cache["pre_head"]`` holds the head's raw outputs: logits for the
        softmax head, the value and advantage streams for the dueling head.
        """
        x = self._check_input(x)
        acts, zs = [x], []
        h = x
        for i in range(self.n_hidden):
            W, b = self.params[2 * i], self.params[2 * i + 1]
            z = h @ W + b
            h = _act(self.activation, z)
            zs.append(z)
            acts.append(h)
        k = 2 * self.n_hidden
        if self.head == "dueling":
            v = h @ self.params[k] + self.params[k + 1]
            a = h @ self.params[k + 2] + self.params[k + 3]
            out = v + a - a.mean(axis=1, keepdims=True)
            pre = (v, a)
        else:
            z = h @ self.params[k] + self.params[k + 1]
            out = softmax(z) if self.head == "softmax" else z
            pre = z
        if not np.all(np.isfinite(out)):
            raise NumericError("non-finite network output")
        return out, {"acts": acts, "zs": zs, "pre_head": pre, "out": out}

    def forward(self, x):
        return self.forward_cache(x)[0]

    __call__ = forward

    def logits(self, x):
        if self.head != "softmax":
            raise ValueError("logits are only defined for the softmax head")
        return self.forward_cache(x)[1]["pre_head"]

    # ----------------------------------------------------------- backward

    def backward(self, x, upstream, cache=None, upstream_is_logits=False):
        """Gradients of ``sum(upstream * output)`` for every parameter.

        With ``upstream_is_logits`` the softmax Jacobian is skipped and
        ``upstream`` is taken as the gradient with respect to the logits.
        """
        if cache is None:
            _, cache = self.forward_cache(x)
        out = cache["out"]
        g = np.asarray(upstream, dtype=np.float64)
        if g.ndim == 1:
            g = g[None, :]
        if g.shape != out.shape:
            raise ShapeError(f"upstream shape {g.shape} != output shape {out.shape}")
        acts, zs = cache["acts"], cache["zs"]
        h = acts[-1]
        k = 2 * self.n_hidden
        grads = [None] * len(self.params)
        if self.head == "dueling":
            gv = g.sum(axis=1, keepdims=True)
            ga = g - g.mean(axis=1, keepdims=True)
            grads[k], grads[k + 1] = h.T @ gv, gv.sum(axis=0)
            grads[k + 2], grads[k + 3] = h.T @ ga, ga.sum(axis=0)
            gh = gv @ self.params[k].T + ga @ self.params[k + 2].T
        else:
            if self.head == "softmax" and not upstream_is_logits:
                g = out * (g - np.sum(out * g, axis=1, keepdims=True))
            grads[k], grads[k + 1] = h.T @ g, g.sum(axis=0)
            gh = g @ self.params[k].T
        for i in range(self.n_hidden - 1, -1, -1):
            gz = gh * _act_grad(self.activation, zs[i], acts[i + 1])
            grads[2 * i] = acts[i].T @ gz
            grads[2 * i + 1] = gz.sum(axis=0)
            if i:
                gh = gz @ self.params[2 * i].T
        for idx, gr in enumerate(grads):
            if not np.all(np.isfinite(gr)):
                raise NumericError(f"non-finite gradient in layer {idx // 2}")
        return grads


class Adam:
    """Adaptive moment estimation over a network's parameter list."""

    def __init__(self, shapes, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    @classmethod
    def for_network(cls, net, lr=1e-3, **kw):
        return cls(net.param_shapes(), lr, **kw)

    def step(self, params, grads, lr=None):
        """Descend along ``grads`` in place."""
        if len(grads) != len(params):
            raise ShapeError("gradient list does not match parameters")
        lr = self.lr if lr is None else lr
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def apply_update(net, grads, optimizer, lr=None):
    optimizer.step(net.params, grads, lr)
    return net


# ------------------------------------------------------------- checkpoints

MAGIC = b"RLPRNGNN"
VERSION = 1
_HEAD_IDS = {h: i for i, h in enumerate(HEADS)}
_ACT_IDS = {a: i for i, a in enumerate(ACTIVATIONS)}


def _checksum(data):
    return hashlib.blake2b(data, digest_size=8).digest()


def dumps_checkpoint(net, optimizer=None, metadata=None):
    """Serialize a network (and optionally its optimizer) to bytes.

    Layout, little-endian: magic, u32 version, u8 head, u8 activation,
    u32 layer count, u32 dims, f64 parameters, u8 optimizer flag
    [u64 step, f64 first moments, f64 second moments], u32 metadata length,
    UTF-8 JSON metadata, 8-byte checksum of everything before it.
    """
    out = [MAGIC, struct.pack("<IBBI", VERSION, _HEAD_IDS[net.head],
                              _ACT_IDS[net.activation], len(net.dims))]
    out.append(struct.pack(f"<{len(net.dims)}I", *net.dims))
    out += [p.astype("<f8").tobytes() for p in net.params]
    if optimizer is None:
        out.append(b"\x00")
    else:
        out.append(b"\x01" + struct.pack("<Q", optimizer.t)
                   + struct.pack("<4d", optimizer.lr, optimizer.beta1,
                                 optimizer.beta2, optimizer.eps))
        out += [m.astype("<f8").tobytes() for m in optimizer.m]
        out += [v.astype("<f8").tobytes() for v in optimizer.v]
    meta = json.dumps(metadata or {}, sort_keys=True).encode()
    out.append(struct.pack("<I", len(meta)) + meta)
    body = b"".join(out)
    return body + _checksum(body)


class _Reader:
    def __init__(self, data):
        self.data, self.pos = data, 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise IntegrityError("checkpoint is truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, shape):
        n = int(np.prod(shape))
        return np.frombuffer(self.take(8 * n), dtype="<f8").reshape(shape).astype(np.float64)


def loads_checkpoint(data):
    """Inverse of :func:`dumps_checkpoint`; returns ``(net, optimizer, metadata)``."""
    if len(data) < len(MAGIC) + 8 or data[:len(MAGIC)] != MAGIC:
        raise IntegrityError("not a network checkpoint")
    body, check = data[:-8], data[-8:]
    r = _Reader(body)
    r.take(len(MAGIC))
    version, head_id, act_id, nlayers = r.unpack("<IBBI")
    if version != VERSION:
        raise IntegrityError(f"unsupported checkpoint version {version}")
    if _checksum(body) != check:
        raise IntegrityError("checkpoint checksum mismatch")
    try:
        dims = r.unpack(f"<{nlayers}I")
        net = DenseNetwork(dims, HEADS[head_id], ACTIVATIONS[act_id])
    except (IndexError, ValueError, struct.error) as exc:
        raise IntegrityError(f"corrupt checkpoint header: {exc}") from exc
    net.params = [r.array(s) for s in net.param_shapes()]
    optimizer = None
    if r.take(1) == b"\x01":
        (t,) = r.unpack("<Q")
        lr, b1, b2, eps = r.unpack("<4d")
        optimizer = Adam(net.param_shapes(), lr, b1, b2, eps)
        optimizer.t = t
        optimizer.m = [r.array(s) for s in net.param_shapes()]
        optimizer.v = [r.array(s) for s in net.param_shapes()]
    (mlen,) = r.unpack("<I")
    metadata = json.loads(r.take(mlen).decode())
    if r.pos != len(body):
        raise IntegrityError("trailing bytes in checkpoint")
    return net, optimizer, metadata


def save_checkpoint(net, path, optimizer=None, metadata=None):
    with open(path, "wb") as fh:
        fh.write(dumps_checkpoint(net, optimizer, metadata))


def load_checkpoint(path, with_state=False):
    """Load a network; with ``with_state`` also return optimizer and metadata."""
    with open(path, "rb") as fh:
        net, opt, meta = loads_checkpoint(fh.read())
    return (net, opt, meta) if with_state else net
