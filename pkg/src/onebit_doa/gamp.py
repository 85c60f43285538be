"""Generic complex GAMP engine with EM hyperparameter updates.

The engine only touches the sensing operator through ``matvec``,
``rmatvec``, ``abs2_matvec`` and ``abs2_rmatvec``.  Output channels expose
``estimate(p_hat, nu_p) -> (z_hat, nu_z)``; input channels expose
``initial_moments(n)``, ``estimate(r_hat, nu_r) -> (x_hat, nu_x)`` and an
optional ``update()`` (the EM step) and ``snapshot()`` (trace row).
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


class GampDiverged(RuntimeError):
    """A state vector became non-finite; ``trace`` holds the iterations so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class GampConfig:
    t_max: int = 100
    damping: float = 0.9
    tol: float = 1e-6
    variance_floor: float = 1e-12
    uniform_variance: bool = True

    def __post_init__(self):
        if self.t_max < 1:
            raise ConfigurationError("t_max must be at least 1")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigurationError("damping must lie in (0, 1]")
        if self.tol < 0:
            raise ConfigurationError("tol must be nonnegative")
        if self.variance_floor < 0:
            raise ConfigurationError("variance_floor must be nonnegative")


@dataclass
class GampState:
    x_hat: np.ndarray
    nu_x: np.ndarray
    s_hat: np.ndarray
    nu_s: np.ndarray
    p_hat: np.ndarray = None
    nu_p: np.ndarray = None
    z_hat: np.ndarray = None
    nu_z: np.ndarray = None
    r_hat: np.ndarray = None
    nu_r: np.ndarray = None
    iter: int = 0


@dataclass
class GampResult:
    x_hat: np.ndarray
    nu_x: np.ndarray
    trace: list
    converged: bool
    iterations: int
    state: GampState = field(repr=False, default=None)


def damped_update(old, new, damping):
    """``damping * new + (1 - damping) * old``; ``damping == 1`` returns ``new``."""
    if damping == 1.0:
        return new
    return damping * new + (1.0 - damping) * old


def _finite(*arrays):
    return all(np.all(np.isfinite(a)) for a in arrays)


def run_gamp(op, y, out_ch, in_ch, cfg=None, callback=None):
    """Run GAMP until the relative change of ``x_hat`` drops below ``cfg.tol``.

    Parameters
    ----------
    op : operator
        Sensing operator of shape ``(M_y, N_x)``.
    y : ndarray
        Observations; only used for the dimension check, the output channel
        owns its copy.
    out_ch, in_ch : channel objects
    cfg : GampConfig
    callback : callable, optional
        Called with the :class:`GampState` after every iteration.

    Returns
    -------
    GampResult
    """
    cfg = cfg or GampConfig()
    M_y, N_x = op.shape
    if len(y) != M_y:
        raise ConfigurationError(f"observation length {len(y)} does not match operator rows {M_y}")

    x_hat, nu_x = in_ch.initial_moments(N_x)
    x_hat = np.asarray(x_hat, dtype=complex).copy()
    nu_x = np.asarray(nu_x, dtype=float).copy()
    if x_hat.shape != (N_x,) or nu_x.shape != (N_x,):
        raise ConfigurationError("input channel initial moments have the wrong length")
    # floor is relative to the prior signal scale so the run is scale equivariant
    scale = float(np.mean(np.abs(x_hat) ** 2 + nu_x)) or 1.0
    floor = cfg.variance_floor * scale
    nu_x = np.maximum(nu_x, floor)

    c = op.abs2_scalar if cfg.uniform_variance else None
    s_hat = np.zeros(M_y, dtype=complex)
    nu_s = np.zeros(M_y)
    state = GampState(x_hat=x_hat, nu_x=nu_x, s_hat=s_hat, nu_s=nu_s)
    trace = []
    converged = False
    d = cfg.damping

    for t in range(1, cfg.t_max + 1):
        if c is not None:
            nu_p = np.full(M_y, c * nu_x.sum())
        else:
            nu_p = op.abs2_matvec(nu_x)
        nu_p = np.maximum(nu_p, floor)
        p_hat = op.matvec(x_hat) - nu_p * s_hat

        z_hat, nu_z = out_ch.estimate(p_hat, nu_p)
        nu_z = np.asarray(nu_z, dtype=float)
        if np.any(nu_z < 0) or np.any(nu_z > nu_p * (1 + 1e-9)):
            raise ConfigurationError("output channel posterior variance outside [0, nu_p]")
        nu_z = np.maximum(nu_z, min(floor, 0.5 * float(nu_p.min())))

        nu_s_new = (1.0 - nu_z / nu_p) / nu_p
        s_hat_new = (z_hat - p_hat) / nu_p
        s_hat = damped_update(s_hat, s_hat_new, d)
        nu_s = damped_update(nu_s, nu_s_new, d)

        if c is not None:
            nu_r = np.full(N_x, 1.0 / (c * nu_s.sum()))
        else:
            nu_r = 1.0 / op.abs2_rmatvec(nu_s)
        nu_r = np.maximum(nu_r, floor)
        r_hat = x_hat + nu_r * op.rmatvec(s_hat)

        x_new, nu_x_new = in_ch.estimate(r_hat, nu_r)
        nu_x_new = np.maximum(np.asarray(nu_x_new, dtype=float), floor)
        x_prev = x_hat
        x_hat = damped_update(x_hat, x_new, d)
        nu_x = damped_update(nu_x, nu_x_new, d)

        norm_prev = np.linalg.norm(x_prev)
        resid = np.linalg.norm(x_hat - x_prev) / norm_prev if norm_prev > 0 else np.inf

        q_row = {}
        if hasattr(in_ch, "update"):
            in_ch.update()
        if hasattr(in_ch, "snapshot"):
            q_row = in_ch.snapshot()
        trace.append({"iter": t, "residual": float(resid), "norm_x": float(np.linalg.norm(x_hat)), **q_row})

        state = GampState(
            x_hat=x_hat, nu_x=nu_x, s_hat=s_hat, nu_s=nu_s, p_hat=p_hat, nu_p=nu_p,
            z_hat=z_hat, nu_z=nu_z, r_hat=r_hat, nu_r=nu_r, iter=t,
        )
        if not _finite(x_hat, nu_x, s_hat, nu_s, p_hat, nu_p, z_hat, nu_z, r_hat, nu_r):
            raise GampDiverged(f"non-finite GAMP state at iteration {t}", trace)
        if callback is not None:
            callback(state)
        if cfg.tol > 0 and resid <= cfg.tol:
            converged = True
            break

    return GampResult(x_hat=x_hat, nu_x=nu_x, trace=trace, converged=converged,
                      iterations=state.iter, state=state)


def trace_to_csv(trace, path):
    """Write a GAMP trace, one row per iteration, with fixed column order."""
    if not trace:
        fields = ["iter", "residual", "norm_x"]
    else:
        fields = list(trace[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for row in trace:
            w.writerow({k: repr(float(v)) if k != "iter" else int(v) for k, v in row.items()})


def read_trace_csv(path):
    with open(path, newline="") as fh:
        return [{k: (int(v) if k == "iter" else float(v)) for k, v in row.items()} for row in csv.DictReader(fh)]
