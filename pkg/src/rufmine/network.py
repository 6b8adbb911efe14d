"""Layered sigmoid MLP with link-presence flags and class-module ownership.

Node ownership drives the module tags: a link is intra(k) when its target is
owned by class ``k`` and its source is an input or also owned by ``k``;
anything else is an inter-module link. Net input of a unit is
``sum(w * y) - theta`` with ``theta`` the unit's bias (threshold).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .rough import DependencyRule, lit_attr, lit_negated

log = logging.getLogger(__name__)

INTER = 0          # tag value for inter-module links
SHARED = 0         # owner value for input nodes
RULE_WEIGHT = 8.0  # link magnitude used by the knowledge encoding


class EncodingError(ValueError):
    pass


class DivergenceError(RuntimeError):
    pass


@dataclass
class ModularNetwork:
    sizes: list
    weights: list      # per transition, (sizes[h+1], sizes[h])
    present: list      # bool, same shapes as weights
    biases: list       # per non-input layer
    owners: list       # per layer, int class label or SHARED
    out_classes: list  # class label of each output node

    def __post_init__(self):
        self.sizes = [int(s) for s in self.sizes]
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.present = [np.asarray(p, dtype=bool) for p in self.present]
        self.biases = [np.asarray(b, dtype=float) for b in self.biases]
        self.owners = [np.asarray(o, dtype=int) for o in self.owners]
        self.out_classes = [int(c) for c in self.out_classes]
        for h, w in enumerate(self.weights):
            if w.shape != (self.sizes[h + 1], self.sizes[h]):
                raise ValueError("weight matrix %d has shape %s" % (h, w.shape))

    @classmethod
    def blank(cls, sizes, owners=None, out_classes=None):
        sizes = [int(s) for s in sizes]
        if owners is None:
            owners = [np.full(s, SHARED) for s in sizes]
        if out_classes is None:
            out_classes = list(range(1, sizes[-1] + 1))
        return cls(sizes,
                   [np.zeros((b, a)) for a, b in zip(sizes[:-1], sizes[1:])],
                   [np.zeros((b, a), dtype=bool) for a, b in zip(sizes[:-1], sizes[1:])],
                   [np.zeros(s) for s in sizes[1:]],
                   owners, out_classes)

    def copy(self) -> "ModularNetwork":
        return ModularNetwork(list(self.sizes), [w.copy() for w in self.weights],
                              [p.copy() for p in self.present], [b.copy() for b in self.biases],
                              [o.copy() for o in self.owners], list(self.out_classes))

    @property
    def n_layers(self) -> int:
        return len(self.sizes)

    def tags(self, h: int) -> np.ndarray:
        src = self.owners[h][None, :]
        dst = self.owners[h + 1][:, None]
        intra = (src == SHARED) | (src == dst)
        return np.where(intra & (dst != SHARED), np.broadcast_to(dst, intra.shape), INTER)

    def effective(self, h: int) -> np.ndarray:
        return np.where(self.present[h], self.weights[h], 0.0)

    def links_possible(self) -> int:
        return int(sum(w.size for w in self.weights))

    def links_present(self) -> int:
        return int(sum(p.sum() for p in self.present))

    # flat views used by the batched kernels
    def flat(self):
        w = np.concatenate([x.ravel() for x in self.weights])
        p = np.concatenate([x.ravel() for x in self.present])
        b = np.concatenate(self.biases)
        return w, p, b

    def with_flat(self, wflat, pflat, bflat) -> "ModularNetwork":
        net = self.copy()
        off = boff = 0
        for h in range(self.n_layers - 1):
            shape = net.weights[h].shape
            k = shape[0] * shape[1]
            net.weights[h] = np.asarray(wflat[off:off + k], dtype=float).reshape(shape).copy()
            net.present[h] = np.asarray(pflat[off:off + k], dtype=bool).reshape(shape).copy()
            net.biases[h] = np.asarray(bflat[boff:boff + shape[0]], dtype=float).copy()
            off += k
            boff += shape[0]
        return net

    # --- serialization ---
    def to_dict(self) -> dict:
        offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        links = []
        for h in range(self.n_layers - 1):
            tags = self.tags(h)
            for j in range(self.sizes[h + 1]):
                for i in range(self.sizes[h]):
                    t = int(tags[j, i])
                    links.append({"from": int(offsets[h] + i), "to": int(offsets[h + 1] + j),
                                  "w": float(self.weights[h][j, i]),
                                  "present": bool(self.present[h][j, i]),
                                  "tag": "inter" if t == INTER else "intra:%d" % t})
        return {"layers": list(self.sizes),
                "out_classes": list(self.out_classes),
                "owners": [[int(x) for x in o] for o in self.owners],
                "biases": [[float(x) for x in b] for b in self.biases],
                "links": links}

    @classmethod
    def from_dict(cls, d: dict) -> "ModularNetwork":
        net = cls.blank(d["layers"], [np.array(o) for o in d["owners"]], d["out_classes"])
        offsets = np.concatenate([[0], np.cumsum(net.sizes)])
        layer_of = np.repeat(np.arange(len(net.sizes)), net.sizes)
        for link in d["links"]:
            a, b = int(link["from"]), int(link["to"])
            h = int(layer_of[a])
            i, j = a - offsets[h], b - offsets[h + 1]
            net.weights[h][j, i] = link["w"]
            net.present[h][j, i] = link["present"]
        net.biases = [np.array(b, dtype=float) for b in d["biases"]]
        return net


@dataclass
class NetworkOutput:
    activations: np.ndarray
    winner: int  # class label of the strongest output


def sigmoid(x):
    return expit(x)


def forward_layers(net: ModularNetwork, X) -> list[np.ndarray]:
    """Activations of every layer for a batch (N, sizes[0])."""
    a = np.atleast_2d(np.asarray(X, dtype=float))
    if a.shape[1] != net.sizes[0]:
        raise ValueError("input has %d components, network expects %d" % (a.shape[1], net.sizes[0]))
    acts = [a]
    for h in range(net.n_layers - 1):
        a = sigmoid(a @ net.effective(h).T - net.biases[h])
        acts.append(a)
    return acts


def forward(net: ModularNetwork, x) -> NetworkOutput:
    y = forward_layers(net, x)[-1][0]
    return NetworkOutput(y, net.out_classes[int(np.argmax(y))])


def predict(net: ModularNetwork, X) -> np.ndarray:
    y = forward_layers(net, X)[-1]
    return np.asarray(net.out_classes)[np.argmax(y, axis=1)]


# --- backprop ------------------------------------------------------------------

def loss_and_grad(net: ModularNetwork, X, T, decay: float = 1e-4):
    """Mean half squared error plus ``decay/2 * sum(w^2)`` over present links.

    Returns ``(loss, dW, dtheta)``; gradients of absent links are zero.
    """
    acts = forward_layers(net, X)
    T = np.atleast_2d(np.asarray(T, dtype=float))
    N = acts[0].shape[0]
    y = acts[-1]
    err = y - T
    loss = 0.5 * float((err * err).sum()) / N
    loss += 0.5 * decay * sum(float((net.effective(h) ** 2).sum()) for h in range(net.n_layers - 1))
    dW = [None] * (net.n_layers - 1)
    dth = [None] * (net.n_layers - 1)
    delta = err * y * (1.0 - y) / N
    for h in range(net.n_layers - 2, -1, -1):
        weff = net.effective(h)
        dW[h] = np.where(net.present[h], delta.T @ acts[h] + decay * weff, 0.0)
        dth[h] = -delta.sum(axis=0)
        if h:
            a = acts[h]
            delta = (delta @ weff) * a * (1.0 - a)
    return loss, dW, dth


def backprop_train(net: ModularNetwork, X, T, epochs: int = 2000, rate: float = 0.5,
                   decay: float = 1e-4):
    """Full-batch gradient descent on a copy of ``net``. Returns ``(net, losses)``."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    net = net.copy()
    losses = []
    for epoch in range(epochs):
        loss, dW, dth = loss_and_grad(net, X, T, decay)
        if not np.isfinite(loss):
            raise DivergenceError("loss became non-finite at epoch %d" % epoch)
        losses.append(loss)
        for h in range(net.n_layers - 1):
            net.weights[h] -= rate * dW[h]
            net.biases[h] -= rate * dth[h]
    return net, losses


def random_network(sizes, rng, scale: float = 0.5, out_classes=None) -> ModularNetwork:
    """Fully connected network with uniform(-scale, scale) weights and biases."""
    net = ModularNetwork.blank(sizes, out_classes=out_classes)
    for h in range(net.n_layers - 1):
        net.weights[h] = rng.uniform(-scale, scale, net.weights[h].shape)
        net.present[h][:] = True
        net.biases[h] = rng.uniform(-scale, scale, net.biases[h].shape)
    return net


# --- knowledge encoding --------------------------------------------------------

def encode_rule(rule: DependencyRule, n_features: int, weight: float = RULE_WEIGHT,
                hidden_layers: int = 1) -> ModularNetwork:
    """Sub-network for one dependency rule: a hidden node per conjunct, one output.

    A conjunct with ``p`` positive literals gets +w from those inputs, -w from
    negated ones and threshold ``w*(p - 1/2)``; the output ORs the hidden nodes
    with +w links and threshold ``w/2``.
    """
    n_in = 3 * n_features
    terms = rule.formula.conjuncts
    q = len(terms)
    if q == 0:
        raise EncodingError("rule for class %d has no conjuncts" % rule.cls)
    k = rule.cls
    if hidden_layers == 1:
        sizes = [n_in, q, 1]
    elif hidden_layers == 2:
        sizes = [n_in, q, 1, 1]
    else:
        raise ValueError("hidden_layers must be 1 or 2")
    owners = [np.full(n_in, SHARED)] + [np.full(s, k) for s in sizes[1:]]
    net = ModularNetwork.blank(sizes, owners, [k])
    for j, term in enumerate(terms):
        p = 0
        for l in term:
            a = lit_attr(l)
            if a >= n_in:
                raise EncodingError("literal on attribute %d but only %d inputs" % (a, n_in))
            net.weights[0][j, a] = -weight if lit_negated(l) else weight
            net.present[0][j, a] = True
            p += not lit_negated(l)
        net.biases[0][j] = weight * (p - 0.5)
    for h in range(1, len(sizes) - 1):
        net.weights[h][:] = weight
        net.present[h][:] = True
        net.biases[h][:] = weight / 2
    return net


def encode_rules(rules, n_features: int, n_classes: int | None = None, weight: float = RULE_WEIGHT,
                 hidden_layers: int = 1) -> list[ModularNetwork]:
    """One knowledge-based sub-network per dependency rule."""
    rules = list(rules)
    if not rules:
        raise EncodingError("no rules to encode")
    if n_classes is not None:
        for r in rules:
            if not 1 <= r.cls <= n_classes:
                raise EncodingError("rule class %d outside 1..%d" % (r.cls, n_classes))
    return [encode_rule(r, n_features, weight, hidden_layers) for r in rules]


def concatenate(subnets, class_labels, rng, inter_scale: float = 0.1) -> ModularNetwork:
    """Join one sub-network per class into a full network.

    Intra-module links are copied; links between modules (hidden of one class to
    units of another) are switched on with uniform(-inter_scale, inter_scale) weights.
    """
    class_labels = list(class_labels)
    depth = len(subnets[0].sizes)
    if any(len(s.sizes) != depth for s in subnets):
        raise ValueError("sub-networks differ in depth")
    n_in = subnets[0].sizes[0]
    hidden = [sum(s.sizes[h] for s in subnets) for h in range(1, depth - 1)]
    sizes = [n_in] + hidden + [len(class_labels)]
    owners = [np.full(n_in, SHARED)]
    for h in range(1, depth - 1):
        owners.append(np.concatenate([np.full(s.sizes[h], s.out_classes[0]) for s in subnets]))
    owners.append(np.array(class_labels))
    net = ModularNetwork.blank(sizes, owners, class_labels)
    # node offsets of each sub-network inside every layer
    offs = []
    for s in subnets:
        offs.append([0] * depth)
    for h in range(1, depth - 1):
        o = 0
        for si, s in enumerate(subnets):
            offs[si][h] = o
            o += s.sizes[h]
    for si, s in enumerate(subnets):
        offs[si][depth - 1] = class_labels.index(s.out_classes[0])
    for h in range(depth - 1):
        tags = net.tags(h)
        inter = tags == INTER
        net.weights[h][inter] = rng.uniform(-inter_scale, inter_scale, int(inter.sum()))
        net.present[h][inter] = True
        for si, s in enumerate(subnets):
            r0, c0 = offs[si][h + 1], offs[si][h]
            r1, c1 = r0 + s.sizes[h + 1], c0 + s.sizes[h]
            net.weights[h][r0:r1, c0:c1] = s.weights[h]
            net.present[h][r0:r1, c0:c1] = s.present[h]
            net.biases[h][r0:r1] = s.biases[h]
    return net


def network_to_json(net: ModularNetwork, **extra) -> str:
    d = net.to_dict()
    d.update(extra)
    return json.dumps(d, indent=1)
