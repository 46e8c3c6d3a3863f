"""Branch autoencoders: parameterizations, forward passes, analytic backward.

Four kinds: rank-1 with tied direction (u u^T), rank-1 untied (u v^T), a
linear autoencoder (W encode, V decode), and a dense mlp autoencoder with
tanh hidden activations and linear code/output layers. Gradients are
hand-derived per kind, both w.r.t. parameters and w.r.t. the residual
input r (the latter feeds backprop through the residual coupling).

Masks modulate the branch *input* (effective input is mask * r); masking
the output before summation would be a different architecture and is not
implemented.

All entry points accept r of shape (d,) or batched (B, d); parameter
gradients are summed over the batch, input gradients keep r's shape.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, ShapeError
from .model import BranchSpec, LINEAR_AE, MLP_AE, RANK1_TIED, RANK1_UNTIED


@dataclass
class Rank1TiedParams:
    u: np.ndarray  # (d,)

    kind = RANK1_TIED


@dataclass
class Rank1UntiedParams:
    u: np.ndarray  # (d,) decoder direction
    v: np.ndarray  # (d,) encoder direction

    kind = RANK1_UNTIED


@dataclass
class LinearAEParams:
    W: np.ndarray  # (k, d) encoder
    V: np.ndarray  # (d, k) decoder

    kind = LINEAR_AE


@dataclass
class MlpAEParams:
    enc_w: list = field(default_factory=list)  # [(out, in)] matrices
    enc_b: list = field(default_factory=list)
    dec_w: list = field(default_factory=list)
    dec_b: list = field(default_factory=list)

    kind = MLP_AE


@dataclass
class BranchOutput:
    code: np.ndarray   # z, shape (k,) / (B, k); rank-1 scalar code stored as (1,) / (B, 1)
    recon: np.ndarray  # x-hat, shape mirrors r


@dataclass
class BranchGradients:
    """params maps parameter name -> gradient array (same shape as the
    parameter, summed over the batch); input_grad mirrors r."""

    params: dict
    input_grad: np.ndarray


HEAD_INIT_SCALE = 0.01
"""Extra shrink on decoder output layers at init.

The damped update starts every claim at zero; a freshly drawn branch
should honor that by emitting a near-zero reconstruction, otherwise its
random decoder direction pollutes the residuals of every other branch
until the (slow, code-variance-limited) regression washes it out. Only
the autoencoder kinds need this: rank-1 directions are unit vectors
whose output scale is already set by the code.
"""


def init_branch(spec: BranchSpec, d: int, seed: int, gain: float = 1.0):
    """Draw fresh branch parameters, deterministic per seed.

    Rank-1 directions: isotropic Gaussian normalized to unit l2 norm.
    Affine weights: Gaussian with std gain/sqrt(fan_in), zero biases;
    decoder output layers additionally shrunk by HEAD_INIT_SCALE so a
    new branch claims (near) nothing until training grows it.
    """
    errs = spec.validate()
    if errs:
        raise ConfigError("; ".join(errs))
    if d < 1:
        raise ConfigError("d must be >= 1")
    rng = np.random.default_rng(seed)
    if spec.kind == RANK1_TIED:
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        return Rank1TiedParams(u=u)
    if spec.kind == RANK1_UNTIED:
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        v = rng.standard_normal(d)
        v /= np.linalg.norm(v)
        return Rank1UntiedParams(u=u, v=v)
    if spec.kind == LINEAR_AE:
        k = spec.widths[0]
        W = rng.standard_normal((k, d)) * (gain / np.sqrt(d))
        V = rng.standard_normal((d, k)) * (HEAD_INIT_SCALE * gain / np.sqrt(k))
        return LinearAEParams(W=W, V=V)
    # mlp: encoder d -> w1 -> ... -> k, decoder mirrored back to d
    enc_widths = [d, *spec.widths]
    dec_widths = list(reversed(enc_widths))
    enc_w, enc_b, dec_w, dec_b = [], [], [], []
    for fan_in, fan_out in zip(enc_widths[:-1], enc_widths[1:]):
        enc_w.append(rng.standard_normal((fan_out, fan_in)) * (gain / np.sqrt(fan_in)))
        enc_b.append(np.zeros(fan_out))
    n_dec = len(dec_widths) - 1
    for li, (fan_in, fan_out) in enumerate(zip(dec_widths[:-1], dec_widths[1:])):
        scale = gain / np.sqrt(fan_in)
        if li == n_dec - 1:
            scale *= HEAD_INIT_SCALE
        dec_w.append(rng.standard_normal((fan_out, fan_in)) * scale)
        dec_b.append(np.zeros(fan_out))
    return MlpAEParams(enc_w=enc_w, enc_b=enc_b, dec_w=dec_w, dec_b=dec_b)


def branch_dim(branch) -> int:
    if isinstance(branch, (Rank1TiedParams, Rank1UntiedParams)):
        return branch.u.shape[0]
    if isinstance(branch, LinearAEParams):
        return branch.W.shape[1]
    return branch.enc_w[0].shape[1]


def branch_code_width(branch) -> int:
    if isinstance(branch, (Rank1TiedParams, Rank1UntiedParams)):
        return 1
    if isinstance(branch, LinearAEParams):
        return branch.W.shape[0]
    return branch.enc_w[-1].shape[0]


def param_items(branch) -> list:
    """(name, array) pairs in a stable order; arrays are live references."""
    if isinstance(branch, Rank1TiedParams):
        return [("u", branch.u)]
    if isinstance(branch, Rank1UntiedParams):
        return [("u", branch.u), ("v", branch.v)]
    if isinstance(branch, LinearAEParams):
        return [("W", branch.W), ("V", branch.V)]
    items = []
    for l, (w, b) in enumerate(zip(branch.enc_w, branch.enc_b)):
        items.append((f"enc_w{l}", w))
        items.append((f"enc_b{l}", b))
    for l, (w, b) in enumerate(zip(branch.dec_w, branch.dec_b)):
        items.append((f"dec_w{l}", w))
        items.append((f"dec_b{l}", b))
    return items


def _as_batch(r: np.ndarray, d: int, what: str):
    r = np.asarray(r, dtype=np.float64)
    if r.ndim == 1:
        if r.shape[0] != d:
            raise ShapeError(f"{what} has length {r.shape[0]}, branch expects {d}")
        return r[None, :], True
    if r.ndim == 2:
        if r.shape[1] != d:
            raise ShapeError(f"{what} has width {r.shape[1]}, branch expects {d}")
        return r, False
    raise ShapeError(f"{what} must be 1-D or 2-D")


def _check_mask(mask, d: int) -> Optional[np.ndarray]:
    if mask is None:
        return None
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (d,):
        raise ShapeError(f"mask has shape {mask.shape}, expected ({d},)")
    return mask


def branch_forward(branch, r: np.ndarray, mask: Optional[np.ndarray] = None) -> BranchOutput:
    """Evaluate code z and reconstruction x-hat on (masked) input r."""
    d = branch_dim(branch)
    r2, squeeze = _as_batch(r, d, "r")
    mask = _check_mask(mask, d)
    rp = r2 if mask is None else r2 * mask

    if isinstance(branch, Rank1TiedParams):
        z = rp @ branch.u                     # (B,)
        recon = z[:, None] * branch.u
        code = z[:, None]
    elif isinstance(branch, Rank1UntiedParams):
        z = rp @ branch.v
        recon = z[:, None] * branch.u
        code = z[:, None]
    elif isinstance(branch, LinearAEParams):
        code = rp @ branch.W.T                # (B, k)
        recon = code @ branch.V.T
    else:
        acts, code, recon = _mlp_forward(branch, rp)
    if squeeze:
        return BranchOutput(code=code[0], recon=recon[0])
    return BranchOutput(code=code, recon=recon)


def _mlp_forward(branch: MlpAEParams, rp: np.ndarray):
    """Returns (enc activations, dec activations) plus code and recon.

    Activation lists hold the *inputs* of each affine layer; tanh sits
    between affines, the code and the final output stay linear.
    """
    enc_in = [rp]
    h = rp
    for l, (w, b) in enumerate(zip(branch.enc_w, branch.enc_b)):
        h = h @ w.T + b
        if l < len(branch.enc_w) - 1:
            h = np.tanh(h)
        enc_in.append(h)
    code = h
    dec_in = [code]
    for l, (w, b) in enumerate(zip(branch.dec_w, branch.dec_b)):
        h = h @ w.T + b
        if l < len(branch.dec_w) - 1:
            h = np.tanh(h)
        dec_in.append(h)
    return (enc_in, dec_in), code, h


def branch_backward(branch, r: np.ndarray, mask: Optional[np.ndarray],
                    recon_grad: np.ndarray, code_grad: np.ndarray) -> BranchGradients:
    """Exact gradients of <recon_grad, recon> + <code_grad, code>.

    recon_grad/code_grad must match the shapes branch_forward returns for
    this r. The returned input_grad includes the chain through the mask.
    """
    d = branch_dim(branch)
    k = branch_code_width(branch)
    r2, squeeze = _as_batch(r, d, "r")
    mask = _check_mask(mask, d)
    rp = r2 if mask is None else r2 * mask
    B = r2.shape[0]

    g = np.asarray(recon_grad, dtype=np.float64).reshape(B, d)
    h = np.asarray(code_grad, dtype=np.float64).reshape(B, k)

    if isinstance(branch, Rank1TiedParams):
        u = branch.u
        z = rp @ u
        q = g @ u + h[:, 0]                               # total dz sensitivity
        du = z @ g + q @ rp                               # decoder + encoder terms
        gin = q[:, None] * u
        grads = {"u": du}
    elif isinstance(branch, Rank1UntiedParams):
        u, v = branch.u, branch.v
        z = rp @ v
        q = g @ u + h[:, 0]
        grads = {"u": z @ g, "v": q @ rp}
        gin = q[:, None] * v
    elif isinstance(branch, LinearAEParams):
        W, V = branch.W, branch.V
        code = rp @ W.T
        q = g @ V + h                                     # (B, k)
        grads = {"W": q.T @ rp, "V": g.T @ code}
        gin = q @ W
    else:
        grads, gin = _mlp_backward(branch, rp, g, h)

    if mask is not None:
        gin = gin * mask
    if squeeze:
        gin = gin[0]
    return BranchGradients(params=grads, input_grad=gin)


def _mlp_backward(branch: MlpAEParams, rp: np.ndarray, g: np.ndarray, h: np.ndarray):
    (enc_in, dec_in), _, _ = _mlp_forward(branch, rp)
    grads = {}
    # decoder, last affine is linear
    cur = g
    for l in range(len(branch.dec_w) - 1, -1, -1):
        grads[f"dec_w{l}"] = cur.T @ dec_in[l]
        grads[f"dec_b{l}"] = cur.sum(axis=0)
        cur = cur @ branch.dec_w[l]
        if l > 0:   # cross the tanh that produced dec_in[l]
            cur = cur * (1.0 - dec_in[l] ** 2)
    cur = cur + h  # code-level gradient joins below the decoder
    for l in range(len(branch.enc_w) - 1, -1, -1):
        grads[f"enc_w{l}"] = cur.T @ enc_in[l]
        grads[f"enc_b{l}"] = cur.sum(axis=0)
        cur = cur @ branch.enc_w[l]
        if l > 0:
            cur = cur * (1.0 - enc_in[l] ** 2)
    return grads, cur
