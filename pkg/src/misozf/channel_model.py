"""Channel covariance construction and channel sampling.

Covariances follow a multipath urban-micro description: each user sees a
handful of clusters, each cluster is a bundle of rays around a center
angle, and every ray contributes the outer product of the array steering
vector towards its angle. Synthetic families (scaled identity, covariance
read from a text file) share the same :class:`ChannelCovariance` type.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InvalidDimensions, NonHermitian

__all__ = [
    "SteeringParams",
    "UmiModelParams",
    "ChannelCovariance",
    "CovarianceFactor",
    "steering_vector",
    "steering_matrix",
    "umi_covariance_from_angles",
    "build_umi_covariance",
    "build_scaled_identity",
    "factorize",
    "sample_channel",
    "sample_channels",
    "read_covariance_file",
    "write_covariance_file",
]

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10

PATHLOSS_MODES = ("unit_trace", "distance_based")


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SteeringParams:
    """Uniform linear array geometry.

    ``spacing`` is the element spacing in wavelengths, so the carrier
    frequency only enters through this electrical spacing.
    """

    num_antennas: int
    spacing: float = 0.5

    def __post_init__(self):
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 1:
            raise InvalidDimensions(f"num_antennas must be a positive integer, got {self.num_antennas}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")


@dataclass(frozen=True)
class UmiModelParams:
    """Parameters of the clustered urban-micro covariance model.

    Angles are in radians. ``per_cluster_angle_spread`` is the standard
    deviation of the Gaussian ray offsets around each cluster center. The
    default of 10 degrees is the BS-side cluster spread used for NLOS
    urban-micro links.

    ``pathloss_mode='unit_trace'`` fixes ``trace(C) = M``. With
    ``'distance_based'`` the user is dropped uniformly in a disc of radius
    ``cell_radius_m`` (no closer than ``min_distance_m``) and the covariance
    is scaled by ``(d / cell_radius_m) ** -pathloss_exponent``, so a cell-edge
    user keeps ``trace(C) = M``.
    """

    num_paths: int = 6
    num_rays: int = 20
    cluster_power_decay: float = 0.5
    per_cluster_angle_spread: float = math.radians(10.0)
    azimuth_range: tuple[float, float] = (-math.pi / 2, math.pi / 2)
    pathloss_mode: str = "unit_trace"
    pathloss_exponent: float = 3.7
    cell_radius_m: float = 250.0
    min_distance_m: float = 10.0

    def __post_init__(self):
        if self.num_paths < 1 or self.num_rays < 1:
            raise InvalidDimensions("num_paths and num_rays must be positive")
        if self.cluster_power_decay < 0:
            raise ValueError("cluster_power_decay must be >= 0")
        if not self.per_cluster_angle_spread > 0:
            raise ValueError("per_cluster_angle_spread must be > 0")
        lo, hi = self.azimuth_range
        # small slack so that +-pi/2 written with rounded digits is accepted
        if not (-math.pi / 2 - 1e-9 <= lo <= hi <= math.pi / 2 + 1e-9):
            raise ValueError(f"azimuth_range must lie within [-pi/2, pi/2], got {self.azimuth_range}")
        if self.pathloss_mode not in PATHLOSS_MODES:
            raise ValueError(f"pathloss_mode must be one of {PATHLOSS_MODES}")
        if self.pathloss_mode == "distance_based":
            if not (0 < self.min_distance_m < self.cell_radius_m):
                raise ValueError("need 0 < min_distance_m < cell_radius_m")

    def cluster_powers(self) -> np.ndarray:
        z = np.exp(-np.arange(self.num_paths) * self.cluster_power_decay)
        return z / z.sum()


@dataclass(frozen=True, eq=False)
class ChannelCovariance:
    """Hermitian PSD covariance ``matrix`` plus channel ``mean``.

    The stored matrix is symmetrized on construction; inputs that are not
    Hermitian within :data:`HERMITIAN_TOL` (relative to the largest entry)
    or that have eigenvalues below ``-PSD_TOL * lambda_max`` are rejected.
    """

    matrix: np.ndarray
    mean: np.ndarray = field(default=None)

    def __post_init__(self):
        C = np.array(self.matrix, dtype=complex)
        if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] == 0:
            raise InvalidDimensions(f"covariance must be square, got shape {C.shape}")
        scale = np.abs(C).max()
        if scale > 0 and np.abs(C - C.conj().T).max() > HERMITIAN_TOL * scale:
            raise NonHermitian("covariance matrix is not Hermitian")
        C = 0.5 * (C + C.conj().T)
        w = np.linalg.eigvalsh(C)
        if w.size and w[0] < -PSD_TOL * max(w[-1], 0.0) - 1e-300:
            raise ValueError(f"covariance is not positive semidefinite (min eigenvalue {w[0]:.3e})")
        mu = np.zeros(C.shape[0], complex) if self.mean is None else np.asarray(self.mean, complex)
        if mu.shape != (C.shape[0],):
            raise DimensionMismatch(f"mean has shape {mu.shape}, expected ({C.shape[0]},)")
        object.__setattr__(self, "matrix", _frozen(C))
        object.__setattr__(self, "mean", _frozen(mu))

    @property
    def num_antennas(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))


@dataclass(frozen=True, eq=False)
class CovarianceFactor:
    """Tall factor ``L`` with ``C = L L^H``; ``rank`` is its column count."""

    factor: np.ndarray
    rank: int


def steering_vector(theta: float, params: SteeringParams) -> np.ndarray:
    """ULA response towards azimuth ``theta``.

    Entry ``m`` equals ``exp(1j * 2*pi * spacing * m * sin(theta))``.
    """
    if not np.isfinite(theta):
        raise ValueError("theta must be finite")
    m = np.arange(params.num_antennas)
    return np.exp(2j * np.pi * params.spacing * m * np.sin(theta))


def steering_matrix(thetas, params: SteeringParams) -> np.ndarray:
    """Steering vectors for all ``thetas`` stacked as columns (M x len)."""
    thetas = np.asarray(thetas, dtype=float).ravel()
    m = np.arange(params.num_antennas)[:, None]
    return np.exp(2j * np.pi * params.spacing * m * np.sin(thetas)[None, :])


def umi_covariance_from_angles(ray_angles, cluster_powers, steer: SteeringParams, eta: float = 1.0) -> np.ndarray:
    """Deterministic part of the clustered model.

    ``ray_angles`` has shape (num_paths, num_rays); the result is
    ``eta * sum_n zeta_n / N_rays * sum_m a(theta_nm) a(theta_nm)^H``.
    """
    ray_angles = np.atleast_2d(np.asarray(ray_angles, dtype=float))
    zeta = np.asarray(cluster_powers, dtype=float)
    if zeta.shape != (ray_angles.shape[0],):
        raise DimensionMismatch("one cluster power per cluster is required")
    n_rays = ray_angles.shape[1]
    A = steering_matrix(ray_angles, steer)
    # column order of A is row-major over (cluster, ray)
    w = np.repeat(zeta / n_rays, n_rays)
    return eta * (A * w) @ A.conj().T


def _pathloss_gain(params: UmiModelParams, rng: np.random.Generator) -> float:
    if params.pathloss_mode == "unit_trace":
        return 1.0
    r_min, r_max = params.min_distance_m, params.cell_radius_m
    # uniform over the annulus r_min <= d <= r_max
    d = math.sqrt(rng.uniform(r_min**2, r_max**2))
    return (d / r_max) ** (-params.pathloss_exponent)


def build_umi_covariance(params: UmiModelParams, steer: SteeringParams, rng: np.random.Generator) -> ChannelCovariance:
    """Draw one user's covariance from the clustered urban-micro model.

    Cluster centers are uniform over ``azimuth_range``; ray angles add
    zero-mean Gaussian offsets with std ``per_cluster_angle_spread``.
    """
    lo, hi = params.azimuth_range
    centers = rng.uniform(lo, hi, size=params.num_paths)
    offsets = params.per_cluster_angle_spread * rng.standard_normal((params.num_paths, params.num_rays))
    eta = _pathloss_gain(params, rng)
    C = umi_covariance_from_angles(centers[:, None] + offsets, params.cluster_powers(), steer, eta)
    return ChannelCovariance(C)


def build_scaled_identity(c: float, M: int) -> ChannelCovariance:
    if not c > 0:
        raise ValueError(f"scale must be positive, got {c}")
    if M < 1:
        raise InvalidDimensions("M must be positive")
    return ChannelCovariance(c * np.eye(M))


def factorize(C: ChannelCovariance | np.ndarray, rel_tol: float = 1e-12) -> CovarianceFactor:
    """Eigendecomposition-based factor of a (possibly rank-deficient) covariance.

    Eigenvalues at or below ``rel_tol * lambda_max`` are dropped and the
    factor is ``U_r * sqrt(Lambda_r)``.
    """
    A = C.matrix if isinstance(C, ChannelCovariance) else np.asarray(C, dtype=complex)
    scale = np.abs(A).max() if A.size else 0.0
    if scale > 0 and np.abs(A - A.conj().T).max() > HERMITIAN_TOL * scale:
        raise NonHermitian("cannot factorize a non-Hermitian matrix")
    w, U = np.linalg.eigh(0.5 * (A + A.conj().T))
    lam_max = w[-1] if w.size else 0.0
    if lam_max <= 0:
        return CovarianceFactor(np.zeros((A.shape[0], 0), complex), 0)
    keep = w > rel_tol * lam_max
    L = U[:, keep] * np.sqrt(w[keep])
    return CovarianceFactor(L, int(keep.sum()))


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def sample_channel(factor: CovarianceFactor, mean, rng: np.random.Generator) -> np.ndarray:
    """One draw ``h = mean + L g`` with ``g ~ CN(0, I_r)``."""
    mean = np.asarray(mean, dtype=complex)
    if mean.shape != (factor.factor.shape[0],):
        raise DimensionMismatch("mean length does not match the factor")
    return mean + factor.factor @ _cn(rng, factor.rank)


def sample_channels(factor: CovarianceFactor, mean, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` independent draws stacked as columns (M x n)."""
    mean = np.asarray(mean, dtype=complex)
    if mean.shape != (factor.factor.shape[0],):
        raise DimensionMismatch("mean length does not match the factor")
    return mean[:, None] + factor.factor @ _cn(rng, (factor.rank, n))


def _parse_complex(token: str) -> complex:
    return complex(token.replace("i", "j"))


def _format_complex(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}i"


def read_covariance_file(path) -> ChannelCovariance:
    """Load a dense complex matrix, one row per line, ``re+imi`` tokens.

    Blank lines and lines starting with ``#`` are ignored.
    """
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rows.append([_parse_complex(tok) for tok in line.split()])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: cannot parse complex entry ({exc})") from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise InvalidDimensions(f"{path}: covariance file must hold a square matrix")
    return ChannelCovariance(np.array(rows, dtype=complex))


def write_covariance_file(C: ChannelCovariance | np.ndarray, path) -> None:
    A = C.matrix if isinstance(C, ChannelCovariance) else np.asarray(C, dtype=complex)
    lines = [" ".join(_format_complex(z) for z in row) for row in A]
    Path(path).write_text("\n".join(lines) + "\n")
