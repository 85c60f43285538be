"""Monte Carlo harness: one trial runs the full estimation chain, sweeps
aggregate trials into plot-ready CSV rows."""

import csv
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .channel_model import ChannelParams, SystemConfig, effective_channel, simulate_measurement
from .channels import BernoulliGMChannel, GaussianOutputChannel, ProbitChannel, init_prior
from .doa import estimate_all_doas, select_columns
from .gamp import GampConfig, GampDiverged, run_gamp
from .reconstruction import estimate_D, estimate_H, infer_sigma_x2, rescale_estimate

CSV_COLUMNS = ["sweep_value", "rmse_theta_deg", "nmse_D_db", "nmse_H_db", "detect_rate", "conv_rate", "trials"]


@dataclass(frozen=True)
class DoaSettings:
    rel_threshold: float = 0.05
    grid_oversample: int = 16
    refine_tol: float = 1e-8


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep over SNR (dB) or antenna count.

    With ``sweep_axis=None`` the scenario is used as given (one point).
    """

    cfg: SystemConfig
    params: ChannelParams
    sweep_axis: str = None
    sweep_values: tuple = ()
    fixed_snr_db: float = None
    fixed_M: int = None
    trials: int = 1
    gamp: GampConfig = field(default_factory=GampConfig)
    doa: DoaSettings = field(default_factory=DoaSettings)
    miss_penalty_deg: float = 5.0
    quantize: bool = True
    random_channels: bool = False
    base_seed: int = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sweep_axis not in (None, "snr_db", "M"):
            raise ValueError(f"unknown sweep axis {self.sweep_axis!r}")
        if self.sweep_axis is not None and len(self.sweep_values) == 0:
            raise ValueError("sweep must list at least one value")
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))

    @property
    def seed(self):
        return self.cfg.seed if self.base_seed is None else self.base_seed

    @property
    def n_points(self):
        return 1 if self.sweep_axis is None else len(self.sweep_values)

    def point_value(self, i):
        return None if self.sweep_axis is None else self.sweep_values[i]

    def point_config(self, i):
        """System configuration at sweep point ``i``."""
        cfg = self.cfg
        snr = self.fixed_snr_db
        if self.fixed_M is not None:
            cfg = replace(cfg, M=int(self.fixed_M))
        if self.sweep_axis == "M":
            cfg = replace(cfg, M=int(self.sweep_values[i]))
        elif self.sweep_axis == "snr_db":
            snr = float(self.sweep_values[i])
        if snr is not None:
            cfg = replace(cfg, noise_var=noise_var_from_snr(snr, cfg))
        return cfg


def noise_var_from_snr(snr_db, cfg):
    """Invert ``SNR = 10 log10(||S||_F^2 / (N_p sigma^2))`` with unit-modulus pilots."""
    s_fro2 = cfg.n_paths * cfg.N_p
    return s_fro2 / (cfg.N_p * 10.0 ** (snr_db / 10.0))


def snr_from_noise_var(noise_var, cfg):
    if noise_var == 0:
        return float("inf")
    return 10.0 * np.log10(cfg.n_paths / noise_var)


def trial_rng(base_seed, axis, point_index, trial_index):
    axis_code = zlib.crc32(str(axis).encode())
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), axis_code, int(point_index), int(trial_index)]))


@dataclass
class TrialResult:
    sweep_value: float
    trial_index: int
    theta_true: np.ndarray
    theta_hat: np.ndarray = field(default_factory=lambda: np.zeros(0))
    column_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    alpha_ml: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    D_hat: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    H_hat: np.ndarray = None
    x_hat: np.ndarray = None
    model_order_detected: int = 0
    assignment: list = field(default_factory=list)
    sq_err_sum: float = 0.0
    matched_rmse_theta: float = 0.0
    nmse_D: float = 1.0
    nmse_H: float = 1.0
    d_offdiag: float = float("nan")
    sigma_x2: float = float("nan")
    converged: bool = False
    iterations: int = 0
    trace: list = field(default_factory=list, repr=False)
    error: str = None

    @property
    def nmse_D_db(self):
        return _db(self.nmse_D)

    @property
    def nmse_H_db(self):
        return _db(self.nmse_H)

    def theta_by_column(self):
        return {int(c): float(t) for c, t in zip(self.column_indices, self.theta_hat)}


def _db(v):
    return float(10.0 * np.log10(v)) if v > 0 else float("-inf")


def match_estimates(theta_hat, theta_true, miss_penalty_deg=5.0):
    """Minimum squared-error assignment of estimates to true DoAs.

    Returns ``(assignment, rmse_deg)`` where ``assignment`` lists
    ``(estimate_index, truth_index)`` pairs.  Every true DoA left without an
    estimate adds ``miss_penalty_deg**2``; surplus estimates are ignored.
    """
    th = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    tt = np.atleast_1d(np.asarray(theta_true, dtype=float))
    if tt.size == 0:
        raise ValueError("need at least one true DoA")
    if th.size == 0:
        return [], float(miss_penalty_deg)
    cost = (th[:, None] - tt[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    pairs = sorted(zip(rows.tolist(), cols.tolist()), key=lambda p: p[1])
    sq = cost[rows, cols].sum() + (tt.size - len(pairs)) * miss_penalty_deg**2
    return pairs, float(np.sqrt(sq / tt.size))


def _random_params(cfg, rng):
    K = cfg.n_paths
    while True:
        thetas = rng.uniform(-60.0, 60.0, K)
        if np.unique(thetas).size == K:
            break
    alphas = (rng.standard_normal(K) + 1j * rng.standard_normal(K)) / np.sqrt(2)
    return ChannelParams(thetas, alphas)


def run_trial(spec, sweep_point=0, trial_index=0, keep_trace=False):
    """Simulate one pilot block and run the complete estimation chain.

    GAMP recovers the redundant DFT-domain matrix, the pre-quantization power
    fixes its norm, weak columns are dropped, each surviving column yields one
    DoA, and finally H and D are rebuilt.  Failures are stored in
    ``TrialResult.error`` instead of raised.
    """
    cfg = spec.point_config(sweep_point)
    rng = trial_rng(spec.seed, spec.sweep_axis, sweep_point, trial_index)
    params = _random_params(cfg, rng) if spec.random_channels else spec.params
    value = spec.point_value(sweep_point)
    res = TrialResult(sweep_value=float("nan") if value is None else float(value),
                      trial_index=trial_index, theta_true=params.thetas.copy())
    K = cfg.n_paths
    res.sq_err_sum = K * spec.miss_penalty_deg**2
    res.matched_rmse_theta = float(spec.miss_penalty_deg)

    meas, _, power = simulate_measurement(cfg, params, rng, quantize=spec.quantize)
    op = meas.op
    nv = cfg.noise_var
    out_ch = ProbitChannel(meas.y, nv) if spec.quantize else GaussianOutputChannel(meas.y, nv)
    in_ch = BernoulliGMChannel(init_prior(meas.y, op, nv, measured_power=power))
    try:
        g = run_gamp(op, meas.y, out_ch, in_ch, spec.gamp)
    except GampDiverged as exc:
        res.error = f"gamp: {exc}"
        res.trace = exc.trace if keep_trace else []
        return res
    res.converged = g.converged
    res.iterations = g.iterations
    res.x_hat = g.x_hat
    if keep_trace:
        res.trace = g.trace

    try:
        scale = infer_sigma_x2(power, op.frobenius_sq(), cfg.N_p, cfg.M, nv, cfg.N)
        res.sigma_x2 = scale.sigma_x2
        x_t = rescale_estimate(g.x_hat, scale.target_norm)
        X = x_t.reshape((cfg.M, cfg.N), order="F")
        sel = select_columns(X, spec.doa.rel_threshold)
        res.model_order_detected = int(sel.indices.size)
        ests = estimate_all_doas(X[:, sel.indices], sel.indices, sel.energies[sel.indices],
                                 spec.doa.grid_oversample, spec.doa.refine_tol)
        res.theta_hat = np.array([e.theta_deg for e in ests])
        res.column_indices = np.array([e.column_index for e in ests], dtype=int)
        res.alpha_ml = np.array([e.alpha for e in ests])
        pairs, rmse = match_estimates(res.theta_hat, params.thetas, spec.miss_penalty_deg)
        res.assignment = pairs
        res.matched_rmse_theta = rmse
        res.sq_err_sum = rmse**2 * K

        X_sel = X[:, res.column_indices]
        res.H_hat = estimate_H(X_sel)
        H = effective_channel(params, cfg.M)
        H_al = np.zeros_like(H)
        for i, j in pairs:
            H_al[:, j] = res.H_hat[:, i]
        res.nmse_H = float(np.linalg.norm(H_al - H) ** 2 / np.linalg.norm(H) ** 2)

        res.D_hat, res.d_offdiag = estimate_D(res.theta_hat, X_sel, return_offdiag=True)
        D_al = np.zeros(K, dtype=complex)
        for i, j in pairs:
            D_al[j] = res.D_hat[i]
        res.nmse_D = float(np.sum(np.abs(D_al - params.alphas) ** 2) / np.sum(np.abs(params.alphas) ** 2))
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    return res


def aggregate(results):
    """Reduce the trials of one sweep point to a summary row.

    RMSE is the root of the squared error pooled over trials and paths; NMSE
    values are averaged in linear scale and reported in dB.
    """
    if not results:
        raise ValueError("need at least one trial")
    n_true = np.array([r.theta_true.size for r in results])
    sq = np.array([r.sq_err_sum for r in results])
    rmse = float(np.sqrt(sq.sum() / n_true.sum()))
    return {
        "sweep_value": results[0].sweep_value,
        "rmse_theta_deg": rmse,
        "nmse_D_db": _db(float(np.mean([r.nmse_D for r in results]))),
        "nmse_H_db": _db(float(np.mean([r.nmse_H for r in results]))),
        "detect_rate": float(np.mean([r.model_order_detected == r.theta_true.size for r in results])),
        "conv_rate": float(np.mean([r.converged for r in results])),
        "trials": len(results),
    }


def _trial_task(args):
    spec, point, trial = args
    r = run_trial(spec, point, trial)
    # large arrays are not needed for aggregation
    r.x_hat = None
    r.H_hat = None
    return r


def run_trials(spec, workers=1):
    """All trials of a sweep, grouped per point in index order."""
    tasks = [(spec, p, t) for p in range(spec.n_points) for t in range(spec.trials)]
    if workers is None or workers <= 1:
        flat = [_trial_task(a) for a in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            flat = list(ex.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [flat[p * spec.trials:(p + 1) * spec.trials] for p in range(spec.n_points)]


def run_experiment(spec, csv_paths=(), workers=1):
    """Run a sweep and write one CSV per path in ``csv_paths``.

    Scheduling never affects the numbers: each trial owns a seed derived from
    ``(base_seed, axis, point, trial)`` and rows are reduced in index order.
    """
    rows = [aggregate(group) for group in run_trials(spec, workers)]
    for path in csv_paths:
        write_rows_csv(rows, path)
    return rows


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def write_rows_csv(rows, path):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for row in rows:
                w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_rows_csv(path):
    with open(path, newline="") as fh:
        out = []
        for row in csv.DictReader(fh):
            out.append({k: (int(v) if k == "trials" else float(v)) for k, v in row.items()})
        return out
