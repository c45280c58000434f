"""Central-difference checks of the trainer's analytic gradients."""

import numpy as np

from lvsa.trainer import batch_loss

# The losses are smooth except at the kinks of |x| (inside norm_add) and
# LeakyReLU.  A probe is only trusted when the central differences at h and
# h/10 agree: on a smooth stretch they differ by O(h^2), while a kink inside
# the wider stencil pulls them apart.
SMOOTH_TOL = 1e-5
# Below this magnitude central differences at h=1e-5 are dominated by roundoff.
FLOOR = 1e-6


def rel_err(a: float, n: float) -> float:
    return abs(a - n) / max(abs(a) + abs(n), FLOOR)


def _central(p, batch, arr, idx, step, loss_kw) -> float:
    old = arr[idx]
    arr[idx] = old + step
    up = batch_loss(p, batch, (), **loss_kw)[0]
    arr[idx] = old - step
    down = batch_loss(p, batch, (), **loss_kw)[0]
    arr[idx] = old
    return (up - down) / (2 * abs(step))


def max_loss_error(p, batch, trainable, probes: int = 6, h: float = 1e-5, seed: int = 0, stats=None, **loss_kw) -> float:
    """Largest relative error over ``probes`` random coordinates of every trainable array.

    Complex arrays are probed along both the real and the imaginary axis.
    ``stats``, when a dict, receives the checked and skipped probe counts.
    """
    rng = np.random.default_rng(seed)
    _, _, grads = batch_loss(p, batch, trainable, **loss_kw)
    named = p.named_params()
    worst, checked, skipped = 0.0, 0, 0
    for key, g in grads.items():
        arr = named[key]
        for _ in range(probes):
            idx = tuple(int(rng.integers(s)) for s in arr.shape)
            units = (1.0, 1j) if np.iscomplexobj(arr) else (1.0,)
            for unit in units:
                num = _central(p, batch, arr, idx, unit * h, loss_kw)
                fine = _central(p, batch, arr, idx, unit * h / 10, loss_kw)
                if abs(num - fine) > SMOOTH_TOL * max(abs(num), FLOOR):
                    skipped += 1
                    continue
                ana = g[idx].real if unit == 1.0 else g[idx].imag
                worst = max(worst, rel_err(float(ana), float(num)))
                checked += 1
    assert checked > 0, "every probe landed on a kink"
    if stats is not None:
        stats["checked"] = stats.get("checked", 0) + checked
        stats["skipped"] = stats.get("skipped", 0) + skipped
    return worst
