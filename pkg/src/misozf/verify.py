"""Analytic identities checked on random draws, for the ``verify`` command."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel_model import ChannelCovariance, SteeringParams, UmiModelParams, build_scaled_identity, build_umi_covariance, factorize, sample_channel
from .errors import RankDeficient
from .estimation import (
    asymptotic_lmmse,
    asymptotic_ls,
    estimate_lmmse,
    estimate_ls,
    mse_closed_form_lmmse,
    mse_closed_form_ls,
)
from .precoding import effective_channel, mf_precoder, zf_precoder
from .training import PILOT_KINDS, TrainingObservation, make_pilot_matrix, observe


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _umi_draw(rng, M, K):
    steer = SteeringParams(M)
    covs = [build_umi_covariance(UmiModelParams(), steer, rng) for _ in range(K)]
    H = np.column_stack([sample_channel(factorize(c), c.mean, rng) for c in covs])
    return covs, H


def _offdiag_ratio(E):
    a = np.abs(E)
    off = a - np.diag(np.diag(a))
    return off.max() / np.diag(a).min()


def check_ls_zf_nulling(rng, draws=100, M=32, K=5, pilot_lengths=(8, 16, 31)) -> Check:
    worst = 0.0
    for T in pilot_lengths:
        pilots = make_pilot_matrix(M, T, "dft_subset")
        for _ in range(draws):
            _, H = _umi_draw(rng, M, K)
            P = zf_precoder(asymptotic_ls(pilots, H).h_hat)
            worst = max(worst, _offdiag_ratio(effective_channel(H, P)))
    return Check("LS-ZF interference nulling (noiseless training)", worst <= 1e-9,
                 f"max offdiag/min diag = {worst:.2e} (limit 1e-9)")


def check_genie_identity(rng, draws=100, M=32, K=5) -> Check:
    worst = 0.0
    for _ in range(draws):
        _, H = _umi_draw(rng, M, K)
        P = zf_precoder(H)
        E = effective_channel(H, P)
        worst = max(worst, np.abs(E - P.normalization * np.eye(K)).max() / P.normalization)
    return Check("genie ZF effective channel = delta I", worst <= 1e-9, f"max |H^H P - delta I| / delta = {worst:.2e}")


def check_lmmse_residual(rng, draws=100, M=32, K=5, T=16) -> Check:
    pilots = make_pilot_matrix(M, T, "dft_subset")
    hits = 0
    for _ in range(draws):
        covs, H = _umi_draw(rng, M, K)
        H_hat = np.column_stack([asymptotic_lmmse(pilots, H[:, k], covs[k]).h_hat for k in range(K)])
        g = np.abs(effective_channel(H, zf_precoder(H_hat))) ** 2
        diag = np.trace(g)
        hits += g.sum(where=~np.eye(K, dtype=bool)) > 1e-6 * diag
    return Check("LMMSE-ZF residual interference (noiseless training)", hits >= 0.95 * draws,
                 f"{hits}/{draws} draws with offdiag power > 1e-6 diag power")


def check_pilots(rng, M=32, T=16) -> Check:
    worst = 0.0
    for kind in PILOT_KINDS:
        Phi = make_pilot_matrix(M, T, kind, rng).matrix
        worst = max(worst, np.abs(Phi.conj().T @ Phi - np.eye(T)).max())
    return Check("pilot semi-unitarity", worst < 1e-10, f"max |Phi^H Phi - I| = {worst:.2e}")


def check_lmmse_scaled_ls(rng, M=32, T=16, c=2.5, sigma2=0.3) -> Check:
    pilots = make_pilot_matrix(M, T, "dft_subset")
    cov = build_scaled_identity(c, M)
    y = observe(pilots, sample_channel(factorize(cov), cov.mean, rng), sigma2, rng)
    ls = estimate_ls(pilots, y).h_hat
    lm = estimate_lmmse(pilots, y, cov, sigma2).h_hat
    err = np.abs(lm - c / (c + sigma2) * ls).max() / np.abs(ls).max()
    return Check("LMMSE = c/(c+sigma2) LS for C = cI", err < 1e-12, f"relative deviation {err:.2e}")


def check_asymptotic_agreement(rng, M=8, T=4, draws=20) -> Check:
    pilots = make_pilot_matrix(M, T, "dft_subset")
    worst = 0.0
    used = 0
    for _ in range(draws):
        A = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
        cov_m = A @ A.conj().T / M
        cov = ChannelCovariance(cov_m)
        G = pilots.H @ cov_m @ pilots.matrix
        if np.linalg.cond(G) >= 1e6:
            continue
        used += 1
        h = sample_channel(factorize(cov), cov.mean, rng)
        y = observe(pilots, h, 0.0)
        a = asymptotic_lmmse(pilots, h, cov).h_hat
        b = estimate_lmmse(pilots, TrainingObservation(y.y, 1e-10), cov, 1e-10).h_hat
        worst = max(worst, np.linalg.norm(a - b) / np.linalg.norm(a))
    return Check("LMMSE at sigma2=1e-10 matches noiseless limit", used > 0 and worst < 1e-4,
                 f"max relative error {worst:.2e} over {used} draws")


def check_mse_ordering(rng, cases=50, M=32) -> Check:
    bad = 0
    for _ in range(cases):
        T = int(rng.integers(1, M + 1))
        pilots = make_pilot_matrix(M, T, "random_semi_unitary", rng)
        cov = build_umi_covariance(UmiModelParams(), SteeringParams(M), rng)
        sigma2 = 10.0 ** rng.uniform(-4, 2)
        if mse_closed_form_lmmse(pilots, cov, sigma2) > mse_closed_form_ls(pilots, cov, sigma2) * (1 + 1e-12):
            bad += 1
    return Check("closed-form MSE: LMMSE <= LS", bad == 0, f"{bad}/{cases} violations")


def check_t_dl_below_k(rng, M=32, K=5, T=3) -> Check:
    pilots = make_pilot_matrix(M, T, "dft_subset")
    _, H = _umi_draw(rng, M, K)
    try:
        zf_precoder(pilots.matrix @ observe(pilots, H, 0.01, rng).y)
    except RankDeficient:
        return Check("LS-ZF undefined for T_dl < K", True, "RankDeficient raised")
    return Check("LS-ZF undefined for T_dl < K", False, "precoder was built")


def check_normalization(rng, M=16, K=4) -> Check:
    worst = 0.0
    for _ in range(20):
        H = rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))
        for P in (zf_precoder(H), mf_precoder(H)):
            worst = max(worst, abs(np.real(np.trace(P.matrix @ P.matrix.conj().T)) - 1))
    return Check("precoder power normalization", worst < 1e-10, f"max |tr(PP^H) - 1| = {worst:.2e}")


ALL_CHECKS = (
    check_pilots,
    check_ls_zf_nulling,
    check_genie_identity,
    check_lmmse_residual,
    check_lmmse_scaled_ls,
    check_asymptotic_agreement,
    check_mse_ordering,
    check_t_dl_below_k,
    check_normalization,
)


def run_all(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    return [check(rng) for check in ALL_CHECKS]
