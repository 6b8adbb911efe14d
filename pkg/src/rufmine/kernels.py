"""Hot loops of the genetic search: word decoding, batched fuzzification and forward passes.

Each kernel exists twice, a numba version (``*_nb``) and a vectorised numpy
version (``*_np``). The public names dispatch on :data:`rufmine._accel.USE_NUMBA`.

Flat network layout: for every layer transition ``h`` the weight matrix of shape
``(sizes[h+1], sizes[h])`` is stored row-major, transitions concatenated. Biases
(thresholds) are concatenated layer by layer.
"""
import numpy as np
from scipy.special import expit

from ._accel import USE_NUMBA, njit

WORD_BITS = 16
WORD_MAX = (1 << WORD_BITS) - 1


# --- bit words -> integers -------------------------------------------------

@njit
def decode_words_nb(bits, starts):
    P = bits.shape[0]
    W = starts.shape[0]
    out = np.empty((P, W), dtype=np.int64)
    for p in range(P):
        for w in range(W):
            s = starts[w]
            v = 0
            for b in range(WORD_BITS):
                v = (v << 1) | bits[p, s + b]
            out[p, w] = v
    return out


_POW = (1 << np.arange(WORD_BITS - 1, -1, -1)).astype(np.int64)


def decode_words_np(bits, starts):
    idx = starts[:, None] + np.arange(WORD_BITS)[None, :]
    return bits[:, idx].astype(np.int64) @ _POW


# --- batched pi-fuzzification ------------------------------------------------

@njit
def fuzzify_batch_nb(X, centers, radii):
    # X (N, n); centers/radii (P, n, 3) -> (P, N, 3n)
    P = centers.shape[0]
    N, n = X.shape
    out = np.empty((P, N, 3 * n))
    for p in range(P):
        for i in range(N):
            for f in range(n):
                for t in range(3):
                    d = abs(X[i, f] - centers[p, f, t]) / radii[p, f, t]
                    if d <= 0.5:
                        v = 1.0 - 2.0 * d * d
                    elif d <= 1.0:
                        v = 2.0 * (1.0 - d) * (1.0 - d)
                    else:
                        v = 0.0
                    out[p, i, 3 * f + t] = v
    return out


def fuzzify_batch_np(X, centers, radii):
    d = np.abs(X[None, :, :, None] - centers[:, None, :, :]) / radii[:, None, :, :]
    v = np.where(d <= 0.5, 1.0 - 2.0 * d * d, np.where(d <= 1.0, 2.0 * (1.0 - d) ** 2, 0.0))
    P, N = v.shape[0], v.shape[1]
    return v.reshape(P, N, -1)


# --- batched forward pass ------------------------------------------------------

@njit
def batch_forward_nb(wflat, present, biases, sizes, inputs):
    # wflat/present (P, n_links); biases (P, n_bias); inputs (P, N, sizes[0])
    P = wflat.shape[0]
    N = inputs.shape[1]
    L = sizes.shape[0]
    width = 0
    for h in range(L):
        if sizes[h] > width:
            width = sizes[h]
    n_out = sizes[L - 1]
    out = np.empty((P, N, n_out))
    prev = np.empty(width)
    cur = np.empty(width)
    for p in range(P):
        for i in range(N):
            for a in range(sizes[0]):
                prev[a] = inputs[p, i, a]
            off = 0
            boff = 0
            for h in range(L - 1):
                s_in = sizes[h]
                s_out = sizes[h + 1]
                for j in range(s_out):
                    acc = -biases[p, boff + j]
                    base = off + j * s_in
                    for a in range(s_in):
                        if present[p, base + a]:
                            acc += wflat[p, base + a] * prev[a]
                    cur[j] = 1.0 / (1.0 + np.exp(-acc))
                for j in range(s_out):
                    prev[j] = cur[j]
                off += s_in * s_out
                boff += s_out
            for j in range(n_out):
                out[p, i, j] = prev[j]
    return out


def batch_forward_np(wflat, present, biases, sizes, inputs):
    P = wflat.shape[0]
    weff = np.where(present, wflat, 0.0)
    act = inputs
    off = 0
    boff = 0
    for h in range(len(sizes) - 1):
        s_in, s_out = int(sizes[h]), int(sizes[h + 1])
        W = weff[:, off:off + s_in * s_out].reshape(P, s_out, s_in)
        b = biases[:, boff:boff + s_out]
        act = expit(np.einsum("pni,pji->pnj", act, W) - b[:, None, :])
        off += s_in * s_out
        boff += s_out
    return act


if USE_NUMBA:
    decode_words = decode_words_nb
    fuzzify_batch = fuzzify_batch_nb
    batch_forward = batch_forward_nb
else:
    decode_words = decode_words_np
    fuzzify_batch = fuzzify_batch_np
    batch_forward = batch_forward_np
