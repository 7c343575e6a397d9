"""Seeded two-level Monte-Carlo power sweeps.

Trial ``i`` at power index ``p`` uses covariance set ``i // n_ch``. Covariance
sets are seeded from ``(master_seed, cov_index)`` only, so every power and
every pilot length sees the same covariance realizations. Channels and
training noise come from a child seed hashed from
``(master_seed, p, i)``. Every trial is therefore a pure function of its
indices, and the merged result does not depend on how trials are
scheduled across workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..channel_model import (
    ChannelCovariance,
    SteeringParams,
    UmiModelParams,
    build_scaled_identity,
    build_umi_covariance,
    factorize,
    read_covariance_file,
    sample_channel,
)
from ..errors import RankDeficient
from ..estimation import (
    asymptotic_lmmse,
    estimate_lmmse,
    mse_closed_form_lmmse,
    mse_closed_form_ls,
)
from ..metrics import rates
from ..precoding import effective_channel, mf_precoder, zf_precoder
from ..training import PilotMatrix, TrainingObservation, effective_noise_variance, make_pilot_matrix, observe
from .config import CovarianceFileModel, ScaledIdentityModel, ScenarioConfig

__all__ = [
    "TrialResult",
    "SweepRow",
    "DiagnosticRow",
    "SweepResult",
    "child_seed",
    "pilot_matrix_for",
    "covariance_set",
    "run_trial",
    "run_power_sweep",
    "OracleRow",
    "mse_oracle_table",
]

log = logging.getLogger(__name__)

_STREAM_COV = 0
_STREAM_TRIAL = 1
_STREAM_PILOT = 2
_STREAM_ORACLE = 3


def child_seed(master_seed: int, *keys: int) -> int:
    """Stable 64-bit seed derived from the master seed and integer keys."""
    ss = np.random.SeedSequence([master_seed, *keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _rng(master_seed, *keys) -> np.random.Generator:
    return np.random.default_rng(child_seed(master_seed, *keys))


@dataclass(frozen=True)
class TrialResult:
    """Metrics of one trial.

    ``sum_rate`` and ``interference_ratio`` (total off-diagonal over total
    diagonal power of ``H^H P``) are keyed by ``(estimator, precoder)``;
    ``mse`` is the user-averaged squared error per estimator.
    ``rank_deficient`` marks combinations whose ZF precoder did not exist;
    their sum rate is recorded as 0.
    """

    sum_rate: dict
    mse: dict
    interference_ratio: dict
    rank_deficient: dict


@dataclass(frozen=True)
class SweepRow:
    power_db: float
    estimator: str
    precoder: str
    metric: str
    mean: float
    stderr: float
    n: int


@dataclass(frozen=True)
class DiagnosticRow:
    power_db: float
    estimator: str
    precoder: str
    rank_deficient: int
    n: int


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def get(self, power_db, estimator, precoder, metric) -> SweepRow:
        for r in self.rows:
            if (r.power_db, r.estimator, r.precoder, r.metric) == (float(power_db), estimator, precoder, metric):
                return r
        raise KeyError((power_db, estimator, precoder, metric))

    def failures(self, power_db, estimator, precoder) -> DiagnosticRow:
        for d in self.diagnostics:
            if (d.power_db, d.estimator, d.precoder) == (float(power_db), estimator, precoder):
                return d
        raise KeyError((power_db, estimator, precoder))


# ---------------------------------------------------------------------------
# per-process caches (configs are hashable, results are read-only)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def pilot_matrix_for(cfg: ScenarioConfig) -> PilotMatrix:
    """The sweep-wide pilot matrix (fixed for all trials)."""
    rng = _rng(cfg.master_seed, _STREAM_PILOT, cfg.T_dl)
    return make_pilot_matrix(cfg.M, cfg.T_dl, cfg.pilot_kind, rng)


@lru_cache(maxsize=4)
def _file_covariance(path: str) -> ChannelCovariance:
    return read_covariance_file(path)


def _cov_key(cfg: ScenarioConfig):
    # covariance sets do not depend on pilots, powers or trial counts
    return (cfg.master_seed, cfg.M, cfg.K, cfg.spacing, cfg.channel_model)


@lru_cache(maxsize=64)
def _covariance_set_cached(key, cov_index):
    master_seed, M, K, spacing, model = key
    if isinstance(model, UmiModelParams):
        rng = _rng(master_seed, _STREAM_COV, cov_index)
        steer = SteeringParams(M, spacing)
        covs = tuple(build_umi_covariance(model, steer, rng) for _ in range(K))
    elif isinstance(model, ScaledIdentityModel):
        covs = (build_scaled_identity(model.scale, M),) * K
    elif isinstance(model, CovarianceFileModel):
        c = _file_covariance(model.path)
        if c.num_antennas != M:
            raise ValueError(f"{model.path}: covariance is {c.num_antennas}x{c.num_antennas}, config has M={M}")
        covs = (c,) * K
    else:  # pragma: no cover
        raise TypeError(f"unsupported channel model {model!r}")
    factors = tuple(factorize(c) for c in covs)
    return covs, factors


def covariance_set(cfg: ScenarioConfig, cov_index: int):
    """``(covariances, factors)`` for all K users of covariance draw ``cov_index``."""
    return _covariance_set_cached(_cov_key(cfg), cov_index)


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------

def _estimate_all(cfg, pilots, covs, H, Y, sigma2):
    out = {"Genie": H}
    if "LS" in cfg.estimators:
        # Phi Y equals Phi Phi^H H exactly when the observations are noiseless
        out["LS"] = pilots.matrix @ Y
    if "LMMSE" in cfg.estimators:
        cols = []
        for k, cov in enumerate(covs):
            if sigma2 > 0:
                obs = TrainingObservation(Y[:, k], sigma2)
                cols.append(estimate_lmmse(pilots, obs, cov, sigma2).h_hat)
            else:
                cols.append(asymptotic_lmmse(pilots, H[:, k], cov).h_hat)
        out["LMMSE"] = np.column_stack(cols)
    return out


def run_trial(cfg: ScenarioConfig, power_db: float, trial_index: int) -> TrialResult:
    """Evaluate every configured estimator/precoder pair on one channel draw."""
    if cfg.pilot_sweep:
        raise ValueError("config has a pilot_sweep; run each expanded config separately")
    p_idx = cfg.power_grid_db.index(float(power_db))
    n_trials = cfg.n_cov * cfg.n_ch
    if not 0 <= trial_index < n_trials:
        raise IndexError(f"trial_index {trial_index} outside [0, {n_trials})")
    covs, factors = covariance_set(cfg, trial_index // cfg.n_ch)
    pilots = pilot_matrix_for(cfg)
    rng = _rng(cfg.master_seed, _STREAM_TRIAL, p_idx, trial_index)

    H = np.column_stack([sample_channel(f, c.mean, rng) for f, c in zip(factors, covs)])
    p_dl = 10.0 ** (power_db / 10.0)
    sigma2_data = 1.0 / p_dl
    if cfg.training_sigma2 is not None:
        sigma2 = cfg.training_sigma2
    else:
        p_fb = None if cfg.feedback_power_db is None else 10.0 ** (cfg.feedback_power_db / 10.0)
        sigma2 = effective_noise_variance(p_dl, p_fb, cfg.feedback_model)
    Y = observe(pilots, H, sigma2, rng).y

    estimates = _estimate_all(cfg, pilots, covs, H, Y, sigma2)
    sum_rate, mse, ratio, failed = {}, {}, {}, {}
    for est, H_hat in estimates.items():
        d = H - H_hat
        mse[est] = float(np.real(np.vdot(d, d))) / cfg.K
        for prec in cfg.precoders:
            key = (est, prec)
            try:
                P = zf_precoder(H_hat) if prec == "ZF" else mf_precoder(H_hat)
            except RankDeficient:
                sum_rate[key], ratio[key], failed[key] = 0.0, math.nan, True
                continue
            sum_rate[key] = rates(H, P, sigma2_data, cfg.T_dl, cfg.T_coh).sum_rate
            g = np.abs(effective_channel(H, P)) ** 2
            diag = float(np.trace(g))
            # sum the off-diagonal entries directly; total - diagonal cancels to ~1 ulp
            off = float(g.sum(where=~np.eye(cfg.K, dtype=bool)))
            ratio[key] = off / diag if diag > 0 else math.inf
            failed[key] = False
    return TrialResult(sum_rate, mse, ratio, failed)


def _combos(cfg):
    return [(e, p) for e in cfg.estimators for p in cfg.precoders]


def _run_chunk(cfg, p_idx, start, stop):
    power_db = cfg.power_grid_db[p_idx]
    combos = _combos(cfg)
    n = stop - start
    rate = np.empty((n, len(combos)))
    fail = np.zeros((n, len(combos)), dtype=bool)
    mse = np.empty((n, len(cfg.estimators)))
    for row, t in enumerate(range(start, stop)):
        res = run_trial(cfg, power_db, t)
        for j, key in enumerate(combos):
            rate[row, j] = res.sum_rate[key]
            fail[row, j] = res.rank_deficient[key]
        for j, est in enumerate(cfg.estimators):
            mse[row, j] = res.mse[est]
    return p_idx, start, rate, fail, mse


def _mean_stderr(x: np.ndarray):
    n = x.size
    mean = math.fsum(x.tolist()) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum(((x - mean) ** 2).tolist()) / (n - 1)
    return mean, math.sqrt(var / n)


def run_power_sweep(cfg: ScenarioConfig, workers: int = 1) -> SweepResult:
    """Run ``n_cov * n_ch`` trials at every grid power and aggregate them.

    With ``workers > 1`` chunks of trials (one covariance draw each) are
    spread over a process pool. Results are written into slots indexed by
    trial number and reduced with exactly rounded sums, so the output is
    identical for any worker count.
    """
    if cfg.pilot_sweep:
        raise ValueError("config has a pilot_sweep; run each expanded config separately")
    n_trials = cfg.n_cov * cfg.n_ch
    n_pow = len(cfg.power_grid_db)
    combos = _combos(cfg)
    rate = np.empty((n_pow, n_trials, len(combos)))
    fail = np.zeros((n_pow, n_trials, len(combos)), dtype=bool)
    mse = np.empty((n_pow, n_trials, len(cfg.estimators)))

    tasks = [(p, s, min(s + cfg.n_ch, n_trials)) for p in range(n_pow) for s in range(0, n_trials, cfg.n_ch)]

    def store(out):
        p, s, r, f, m = out
        rate[p, s:s + len(r)] = r
        fail[p, s:s + len(r)] = f
        mse[p, s:s + len(r)] = m

    if workers <= 1:
        for p, s, e in tasks:
            store(_run_chunk(cfg, p, s, e))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_chunk, cfg, p, s, e) for p, s, e in tasks]
            for fut in futures:
                store(fut.result())

    result = SweepResult()
    for p, power_db in enumerate(cfg.power_grid_db):
        for est in cfg.estimators:
            j_mse = cfg.estimators.index(est)
            for prec in cfg.precoders:
                j = combos.index((est, prec))
                m, se = _mean_stderr(mse[p, :, j_mse])
                result.rows.append(SweepRow(power_db, est, prec, "mse", m, se, n_trials))
                m, se = _mean_stderr(rate[p, :, j])
                result.rows.append(SweepRow(power_db, est, prec, "sum_rate", m, se, n_trials))
                result.diagnostics.append(DiagnosticRow(power_db, est, prec, int(fail[p, :, j].sum()), n_trials))
        log.debug("power %.1f dB done", power_db)
    result.rows.sort(key=lambda r: (r.power_db, r.estimator, r.precoder, r.metric))
    result.diagnostics.sort(key=lambda d: (d.power_db, d.estimator, d.precoder))
    return result


# ---------------------------------------------------------------------------
# closed-form vs Monte-Carlo MSE
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleRow:
    power_db: float
    estimator: str
    closed_form: float
    monte_carlo: float
    stderr: float
    n: int


def mse_oracle_table(cfg: ScenarioConfig) -> list[OracleRow]:
    """Closed-form MSE next to its Monte-Carlo estimate for LS and LMMSE.

    Both are averaged over the ``n_cov`` covariance sets and the K users;
    the Monte-Carlo side uses ``n_ch`` channel draws per covariance.
    """
    if cfg.pilot_sweep:
        raise ValueError("config has a pilot_sweep; run each expanded config separately")
    pilots = pilot_matrix_for(cfg)
    rows = []
    for p_idx, power_db in enumerate(cfg.power_grid_db):
        p_dl = 10.0 ** (power_db / 10.0)
        if cfg.training_sigma2 is not None:
            sigma2 = cfg.training_sigma2
        else:
            p_fb = None if cfg.feedback_power_db is None else 10.0 ** (cfg.feedback_power_db / 10.0)
            sigma2 = effective_noise_variance(p_dl, p_fb, cfg.feedback_model)
        closed = {"LS": [], "LMMSE": []}
        samples = {"LS": [], "LMMSE": []}
        for c_idx in range(cfg.n_cov):
            covs, factors = covariance_set(cfg, c_idx)
            rng = _rng(cfg.master_seed, _STREAM_ORACLE, p_idx, c_idx)
            for cov, fac in zip(covs, factors):
                h = cov.mean[:, None] + fac.factor @ (
                    (rng.standard_normal((fac.rank, cfg.n_ch)) + 1j * rng.standard_normal((fac.rank, cfg.n_ch))) / math.sqrt(2)
                )
                obs = observe(pilots, h, sigma2, rng)
                err_ls = h - pilots.matrix @ obs.y
                closed["LS"].append(mse_closed_form_ls(pilots, cov, sigma2))
                samples["LS"].append(np.sum(np.abs(err_ls) ** 2, axis=0))
                if sigma2 > 0:
                    err = h - estimate_lmmse(pilots, obs, cov, sigma2).h_hat
                    closed["LMMSE"].append(mse_closed_form_lmmse(pilots, cov, sigma2))
                else:
                    err = h - asymptotic_lmmse(pilots, h, cov).h_hat
                    closed["LMMSE"].append(math.nan)
                samples["LMMSE"].append(np.sum(np.abs(err) ** 2, axis=0))
        for est in ("LMMSE", "LS"):
            x = np.concatenate(samples[est])
            m, se = _mean_stderr(x)
            rows.append(OracleRow(power_db, est, math.fsum(closed[est]) / len(closed[est]), m, se, x.size))
    return rows
