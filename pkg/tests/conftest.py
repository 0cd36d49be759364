import numpy as np
import pytest

from hyperrec.data import GenConfig, generate_synthetic, leave_one_out_split
from hyperrec import tensor as tn


def finite_difference_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of scalar f at x, entry by entry."""
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return g


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-8)
    return float(np.abs(a - b).max(initial=0.0) / denom)


def check_gradients(build_loss, leaves: dict, tol: float = 1e-4, h: float = 1e-5):
    """Analytic vs finite-difference gradients of `build_loss()` w.r.t. every
    tensor in `leaves` (name -> Tensor). build_loss must recompute from the
    leaves' current .data each call."""
    loss = build_loss()
    analytic = tn.backward(loss)
    for name, leaf in leaves.items():
        fd = finite_difference_grad(lambda: build_loss().item(), leaf.data, h=h)
        an = analytic.get(leaf)
        if an is None:
            an = np.zeros_like(leaf.data)
        err = rel_error(an, fd)
        assert err < tol, f"gradient mismatch for {name}: rel err {err:.2e}"


@pytest.fixture(scope="session")
def tiny_split():
    gen = GenConfig(T=2, users=10, items_per_domain=8, interactions_per_user=4,
                    latent_dim=4, overlap_fraction=0.25)
    ds = generate_synthetic(gen, seed=11)
    return leave_one_out_split(ds)
