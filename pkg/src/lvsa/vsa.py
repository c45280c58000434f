"""Complex-vector symbolic algebra.

A ComplexVec is a numpy complex array whose last axis has length d; leading
axes are batch axes.  Gradients of a real loss with respect to a complex
array ``z`` are stored as ``dL/dRe(z) + 1j * dL/dIm(z)``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ArityError, DimensionError

NORM_EPS = 1e-12

ComplexVec = np.ndarray


def complex_vec(re, im=None, dtype=np.complex128) -> ComplexVec:
    """Build a ComplexVec from paired real/imaginary arrays."""
    re = np.asarray(re, dtype=float)
    im = np.zeros_like(re) if im is None else np.asarray(im, dtype=float)
    if re.shape != im.shape:
        raise DimensionError(f"re/im shapes differ: {re.shape} vs {im.shape}")
    if re.ndim == 0 or re.shape[-1] < 1:
        raise DimensionError("dimension d must be >= 1")
    if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
        raise ValueError("components must be finite")
    out = np.empty(re.shape, dtype=dtype)
    out.real = re
    out.imag = im
    return out


def stack(z: ComplexVec) -> np.ndarray:
    """[re; im] packing used wherever complex vectors enter an MLP."""
    return np.concatenate([z.real, z.imag], axis=-1)


def split(x: np.ndarray) -> ComplexVec:
    d = x.shape[-1] // 2
    return x[..., :d] + 1j * x[..., d:]


def _check_dims(a, b) -> None:
    if a.shape[-1] != b.shape[-1]:
        raise DimensionError(f"dimension mismatch: {a.shape[-1]} vs {b.shape[-1]}")


def bind(a: ComplexVec, b: ComplexVec) -> ComplexVec:
    """Hadamard (componentwise complex) product."""
    _check_dims(a, b)
    return a * b


def bind_vjp(a: ComplexVec, b: ComplexVec, g: ComplexVec) -> tuple[ComplexVec, ComplexVec]:
    return g * np.conj(b), g * np.conj(a)


def conjugate(a: ComplexVec) -> ComplexVec:
    return np.conj(a)


def mean_abs(z: ComplexVec) -> np.ndarray:
    """Mean absolute value over the 2d stacked real components."""
    return (np.abs(z.real).sum(axis=-1) + np.abs(z.imag).sum(axis=-1)) / (2 * z.shape[-1])


def _sorted_sum(x: np.ndarray) -> np.ndarray:
    # summing sorted values along axis 0 makes the result independent of input order
    return np.sort(x, axis=0).sum(axis=0)


def _as_stack(inputs) -> np.ndarray:
    if isinstance(inputs, np.ndarray):
        arr = inputs
    else:
        inputs = list(inputs)
        if not inputs:
            raise ArityError("norm_add needs at least one input")
        d = inputs[0].shape[-1]
        for z in inputs:
            if z.shape[-1] != d:
                raise DimensionError(f"dimension mismatch in norm_add: {z.shape[-1]} vs {d}")
        arr = np.stack(np.broadcast_arrays(*inputs))
    if arr.shape[0] == 0:
        raise ArityError("norm_add needs at least one input")
    return arr


def norm_add(inputs: Sequence[ComplexVec] | np.ndarray) -> ComplexVec:
    """Bundle by the mean, rescaled to the inputs' mean component magnitude.

    ``inputs`` is a list of ComplexVecs or an array stacked on axis 0.
    Returns zeros when the mean vector's magnitude is <= NORM_EPS.
    """
    arr = _as_stack(inputs)
    n = arr.shape[0]
    if n == 1:
        return arr[0].copy()
    mean = (_sorted_sum(arr.real) + 1j * _sorted_sum(arr.imag)) / n
    target = _sorted_sum(mean_abs(arr)) / n
    current = mean_abs(mean)
    ok = current > NORM_EPS
    scale = np.where(ok, target / np.where(ok, current, 1.0), 0.0)
    return mean * scale[..., None]


def norm_add_vjp(inputs, g: ComplexVec) -> np.ndarray:
    """Gradient for every input, stacked on axis 0 like the inputs."""
    arr = _as_stack(inputs)
    n, d = arr.shape[0], arr.shape[-1]
    if n == 1:
        return g[None].copy()
    mean = arr.mean(axis=0)
    target = mean_abs(arr).mean(axis=0)
    current = mean_abs(mean)
    ok = current > NORM_EPS
    safe = np.where(ok, current, 1.0)
    scale = np.where(ok, target / safe, 0.0)
    g_scale = (g.real * mean.real + g.imag * mean.imag).sum(axis=-1)
    g_target = np.where(ok, g_scale / safe, 0.0)
    g_current = np.where(ok, -g_scale * target / safe**2, 0.0)
    sgn_mean = np.sign(mean.real) + 1j * np.sign(mean.imag)
    g_mean = g * scale[..., None] + sgn_mean * (g_current / (2 * d))[..., None]
    sgn_in = np.sign(arr.real) + 1j * np.sign(arr.imag)
    return (g_mean / n)[None] + sgn_in * (g_target / (2 * d * n))[..., None]


def herm_score(q: ComplexVec, e: ComplexVec) -> np.ndarray:
    """Re<q, conj(e)> = Re(q).Re(e) + Im(q).Im(e)."""
    _check_dims(q, e)
    return (q.real * e.real + q.imag * e.imag).sum(axis=-1)


def score_all(q: ComplexVec, table: np.ndarray) -> np.ndarray:
    """herm_score of ``q`` against every row of ``table``.

    Reduces each row with the same elementwise-product-then-sum kernel as
    herm_score, so results match a per-row loop bit for bit.  ``q`` may be
    batched as (B, d), giving (B, |V|).
    """
    _check_dims(q, table)
    q = q[..., None, :]
    return (q.real * table.real + q.imag * table.imag).sum(axis=-1)


def score_matrix(q: ComplexVec, table: np.ndarray) -> np.ndarray:
    """BLAS version of score_all for training; not bit-matched to herm_score."""
    _check_dims(q, table)
    return q.real @ table.real.T + q.imag @ table.imag.T


def score_matrix_vjp(q: ComplexVec, table: np.ndarray, g: np.ndarray) -> tuple[ComplexVec, ComplexVec]:
    gq = g @ table.real + 1j * (g @ table.imag)
    gt = g.T @ q.real + 1j * (g.T @ q.imag)
    return gq, gt
