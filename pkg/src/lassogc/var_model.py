"""Stable VAR(p) processes: representation, simulation, second-order theory.

A :class:`VarModel` holds the coefficient matrices ``A_1..A_p`` and the noise
covariance of a vector autoregression

    v_t = A_1 v_{t-1} + ... + A_p v_{t-p} + e_t,   e_t ~ N(0, noise_cov),

and this module provides its companion (VAR(1)) embedding, a stability check,
stationary simulation, population autocovariances, and the spectral density
together with the eigenvalue extrema used by the bound calculator.

Randomness uses the counter-based Philox generator so that a given seed
produces the same trajectory on every platform.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence

import numpy as np

from .errors import NumericalError, StructuralError, UnstableModelError

# Largest companion dimension (d*p) for which the vectorized Lyapunov solve
# is attempted; beyond this the Kronecker system is unreasonably large.
MAX_COMPANION_DIM = 512

DEFAULT_STABILITY_MARGIN = 1e-10
DEFAULT_GRID_SIZE = 1024
DEFAULT_BURN_IN = 1000


def _as_square(a, dim, what):
    a = np.asarray(a, dtype=float)
    if a.shape != (dim, dim):
        raise StructuralError(f"{what} has shape {a.shape}, expected ({dim}, {dim})")
    return a


@dataclass(frozen=True)
class VarModel:
    """A VAR(p) generative model.

    Parameters
    ----------
    dim : int
        Number of channels d.
    order : int
        Autoregressive order p.
    coeffs : sequence of (d, d) arrays
        Coefficient matrices ``A_1 .. A_p``, most recent lag first.
    noise_cov : (d, d) array
        Symmetric positive semidefinite process-noise covariance. Strictly
        positive definite noise is required by the population-theory
        operations; a singular covariance is accepted here so degenerate
        (e.g. noiseless) models can still be represented and simulated.
    """

    dim: int
    order: int
    coeffs: tuple
    noise_cov: np.ndarray

    def __init__(self, dim, order, coeffs, noise_cov):
        if dim < 1 or order < 1:
            raise StructuralError(f"dim and order must be positive, got ({dim}, {order})")
        coeffs = tuple(_as_square(a, dim, f"coeffs[{i}]") for i, a in enumerate(coeffs))
        if len(coeffs) != order:
            raise StructuralError(f"expected {order} coefficient matrices, got {len(coeffs)}")
        noise_cov = _as_square(noise_cov, dim, "noise_cov")
        if not np.allclose(noise_cov, noise_cov.T, atol=1e-12):
            raise StructuralError("noise_cov must be symmetric")
        eigvals = np.linalg.eigvalsh(noise_cov)
        if eigvals.min() < -1e-12 * max(1.0, abs(eigvals.max())):
            raise StructuralError(
                f"noise_cov must be positive semidefinite (min eigenvalue {eigvals.min():.3e})"
            )
        for a in coeffs:
            a.setflags(write=False)
        noise_cov.setflags(write=False)
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "order", int(order))
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "noise_cov", noise_cov)

    @property
    def noise_is_pd(self) -> bool:
        return bool(np.linalg.eigvalsh(self.noise_cov).min() > 0.0)

    def to_json(self) -> str:
        """Serialize to the documented JSON schema."""
        doc = {
            "dim": self.dim,
            "order": self.order,
            "coeffs": [a.tolist() for a in self.coeffs],
            "noise_cov": self.noise_cov.tolist(),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "VarModel":
        doc = json.loads(text)
        try:
            return cls(doc["dim"], doc["order"], doc["coeffs"], doc["noise_cov"])
        except KeyError as exc:
            raise StructuralError(f"model JSON missing field {exc}") from exc


@dataclass(frozen=True)
class CompanionForm:
    """VAR(1) embedding of a VAR(p) model.

    ``matrix`` is the (d*p, d*p) block-companion matrix whose top block row is
    ``[A_1 ... A_p]`` with identity blocks on the sub-diagonal; ``noise_embed``
    is the noise covariance placed in the top-left d x d block of an otherwise
    zero (d*p, d*p) matrix.
    """

    matrix: np.ndarray
    noise_embed: np.ndarray
    dim: int
    order: int


class Stability(NamedTuple):
    """Stability verdict plus the companion spectral radius."""

    is_stable: bool
    spectral_radius: float

    def __bool__(self):
        return self.is_stable


@dataclass(frozen=True)
class SpectralSummary:
    """Eigenvalue extrema of the spectral density and characteristic polynomial.

    All quantities are grid approximations over ``grid_size`` uniformly spaced
    frequencies in [-pi, pi); they refine monotonically as the grid grows.
    """

    mu_max: float
    mu_min: float
    mu_min_companion: float
    m_upper: float
    m_lower: float
    grid_size: int


@dataclass(frozen=True)
class Trajectory:
    """Simulated samples, one row per time step, one column per channel."""

    data: np.ndarray
    burn_in: int
    seed: int

    def to_csv(self, path) -> None:
        """Write the documented trajectory CSV ("t,ch0,ch1,...")."""
        d = self.data.shape[1]
        header = "t," + ",".join(f"ch{i}" for i in range(d))
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for t, row in enumerate(self.data):
                fh.write(str(t) + "," + ",".join(format(v, ".17g") for v in row) + "\n")


def companion_form(model: VarModel) -> CompanionForm:
    """Build the block-companion (VAR(1)) form of ``model``.

    The top block row is ``[A_1 ... A_p]``; block row i (i >= 1) carries an
    identity in block column i-1; everything else is zero.
    """
    d, p = model.dim, model.order
    dp = d * p
    mat = np.zeros((dp, dp))
    for i, a in enumerate(model.coeffs):
        mat[:d, i * d:(i + 1) * d] = a
    for i in range(1, p):
        mat[i * d:(i + 1) * d, (i - 1) * d:i * d] = np.eye(d)
    noise = np.zeros((dp, dp))
    noise[:d, :d] = model.noise_cov
    return CompanionForm(matrix=mat, noise_embed=noise, dim=d, order=p)


def is_stable(model: VarModel, margin: float = DEFAULT_STABILITY_MARGIN) -> Stability:
    """Check stability via the companion spectral radius.

    The model is declared stable when the spectral radius is below
    ``1 - margin``, so numerically borderline unit roots are rejected.
    """
    comp = companion_form(model)
    try:
        eigvals = np.linalg.eigvals(comp.matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigen solver failed on companion matrix: {exc}") from exc
    radius = float(np.max(np.abs(eigvals)))
    return Stability(is_stable=radius < 1.0 - margin, spectral_radius=radius)


def _require_stable(model: VarModel) -> None:
    verdict = is_stable(model)
    if not verdict:
        raise UnstableModelError(
            f"model is not stable (companion spectral radius {verdict.spectral_radius:.6f})"
        )


def _solve_companion_lyapunov(comp: CompanionForm) -> np.ndarray:
    """Solve G = A G A^T + S for the companion state covariance.

    Uses the vectorized Kronecker form (I - A kron A) vec(G) = vec(S); the
    companion dimension is capped because the Kronecker system grows with its
    square.
    """
    dp = comp.matrix.shape[0]
    if dp > MAX_COMPANION_DIM:
        raise StructuralError(
            f"companion dimension {dp} exceeds the supported bound {MAX_COMPANION_DIM}"
        )
    a = comp.matrix
    lhs = np.eye(dp * dp) - np.kron(a, a)
    try:
        vec = np.linalg.solve(lhs, comp.noise_embed.reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Lyapunov solve failed: {exc}") from exc
    gamma = vec.reshape(dp, dp)
    # Symmetrize away round-off.
    return (gamma + gamma.T) / 2.0


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """Matrix square root of a PSD matrix; Cholesky when possible."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(cov)
        eigvals = np.clip(eigvals, 0.0, None)
        return eigvecs * np.sqrt(eigvals)


def simulate(
    model: VarModel,
    n: int,
    burn_in: int = DEFAULT_BURN_IN,
    seed: int = 0,
) -> Trajectory:
    """Simulate ``n + model.order`` stationary samples.

    The extra ``model.order`` rows let a caller build a length-``n``
    regression with the model's own order. The initial companion state is
    drawn from the stationary distribution (companion Lyapunov covariance)
    and ``burn_in`` additional samples are discarded on top of that, so the
    retained rows follow the stationary law.

    Parameters
    ----------
    model : VarModel
        Must be stable.
    n : int
        Number of post-initial-condition samples to retain (n >= 1).
    burn_in : int
        Extra leading samples to discard.
    seed : int
        Philox seed; identical seeds give bitwise-identical trajectories.

    Returns
    -------
    Trajectory
        ``data`` has shape (n + model.order, model.dim).
    """
    if n < 1:
        raise StructuralError(f"n must be >= 1, got {n}")
    if burn_in < 0:
        raise StructuralError(f"burn_in must be >= 0, got {burn_in}")
    _require_stable(model)
    d, p = model.dim, model.order
    comp = companion_form(model)
    gamma0 = _solve_companion_lyapunov(comp)
    rng = np.random.Generator(np.random.Philox(seed))

    state_factor = _psd_factor(gamma0)
    state = state_factor @ rng.standard_normal(d * p)
    # state stacks [v_{t}, v_{t-1}, ..., v_{t-p+1}]
    lags = [state[i * d:(i + 1) * d].copy() for i in range(p)]

    total = burn_in + n + p
    noise_factor = _psd_factor(model.noise_cov)
    shocks = rng.standard_normal((total, d)) @ noise_factor.T

    out = np.empty((total, d))
    for t in range(total):
        v = shocks[t].copy()
        for i, a in enumerate(model.coeffs):
            v += a @ lags[i]
        out[t] = v
        lags.pop()
        lags.insert(0, v)
    return Trajectory(data=out[burn_in:], burn_in=burn_in, seed=seed)


def autocovariance(model: VarModel, max_lag: int) -> List[np.ndarray]:
    """Population autocovariances ``[G(0), G(1), ..., G(max_lag)]``.

    G(0) is the top-left block of the companion Lyapunov solution; higher lags
    follow from the companion recursion ``G_comp(l) = A_comp G_comp(l-1)``.
    Negative lags are ``G(-l) = G(l)^T`` and are not returned.
    """
    if max_lag < 0:
        raise StructuralError(f"max_lag must be >= 0, got {max_lag}")
    _require_stable(model)
    d = model.dim
    comp = companion_form(model)
    gamma_comp = _solve_companion_lyapunov(comp)
    out = [gamma_comp[:d, :d].copy()]
    current = gamma_comp
    for _ in range(max_lag):
        current = comp.matrix @ current
        out.append(current[:d, :d].copy())
    return out


def char_poly(model: VarModel, z: complex) -> np.ndarray:
    """Matrix characteristic polynomial A(z) = I - sum_j A_j z^j."""
    acc = np.eye(model.dim, dtype=complex)
    zp = 1.0 + 0.0j
    for a in model.coeffs:
        zp *= z
        acc -= a * zp
    return acc


def spectral_density(model: VarModel, omega: float) -> np.ndarray:
    """Spectral density matrix F(omega) = A^{-1} S A^{-H} / (2 pi).

    Near-singular A(e^{-i omega}) is handled by a pseudo-inverse and flagged
    with a RuntimeWarning rather than raising.
    """
    _require_stable(model)
    a = char_poly(model, np.exp(-1j * omega))
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e12:
        warnings.warn(
            f"characteristic polynomial nearly singular at omega={omega:.6f} "
            f"(cond {cond:.3e}); using pseudo-inverse",
            RuntimeWarning,
            stacklevel=2,
        )
        ainv = np.linalg.pinv(a)
    else:
        ainv = np.linalg.inv(a)
    f = ainv @ model.noise_cov @ ainv.conj().T / (2.0 * np.pi)
    return (f + f.conj().T) / 2.0


def _char_poly_grid(coeffs: Sequence[np.ndarray], dim: int, grid: np.ndarray) -> np.ndarray:
    """Stack A(e^{-i omega}) over a frequency grid, shape (m, dim, dim)."""
    out = np.broadcast_to(np.eye(dim, dtype=complex), (grid.size, dim, dim)).copy()
    z = np.exp(-1j * grid)
    zp = np.ones_like(z)
    for a in coeffs:
        zp = zp * z
        out -= zp[:, None, None] * a
    return out


def spectral_summary(model: VarModel, grid_size: int = DEFAULT_GRID_SIZE) -> SpectralSummary:
    """Eigenvalue extrema of F(omega) and A^H(z)A(z) on a uniform grid.

    ``m_upper``/``m_lower`` are the sup/inf over the grid of the largest
    eigenvalue of the spectral density; ``mu_max``/``mu_min`` are the largest
    and smallest eigenvalues of A^H(z)A(z) over the grid, and
    ``mu_min_companion`` the smallest eigenvalue for the companion
    characteristic polynomial. These are grid approximations of essential
    extrema; they satisfy the sandwich

        m_upper <= max_eig(noise_cov) / (2 pi mu_min),
        m_lower >= min_eig(noise_cov) / (2 pi mu_max),

    up to round-off on any common grid.
    """
    if grid_size < 64:
        raise StructuralError(f"grid_size must be >= 64, got {grid_size}")
    _require_stable(model)
    grid = np.linspace(-np.pi, np.pi, grid_size, endpoint=False)

    a_grid = _char_poly_grid(model.coeffs, model.dim, grid)
    aha = np.einsum("mij,mik->mjk", a_grid.conj(), a_grid)
    mu_eigs = np.linalg.eigvalsh(aha)
    mu_max = float(mu_eigs[:, -1].max())
    mu_min = float(mu_eigs[:, 0].min())

    comp = companion_form(model)
    comp_model_like = _char_poly_grid([comp.matrix], comp.matrix.shape[0], grid)
    comp_aha = np.einsum("mij,mik->mjk", comp_model_like.conj(), comp_model_like)
    mu_min_comp = float(np.linalg.eigvalsh(comp_aha)[:, 0].min())

    ainv = np.linalg.inv(a_grid)
    f_grid = ainv @ model.noise_cov @ np.conj(np.transpose(ainv, (0, 2, 1))) / (2.0 * np.pi)
    f_grid = (f_grid + np.conj(np.transpose(f_grid, (0, 2, 1)))) / 2.0
    f_max = np.linalg.eigvalsh(f_grid)[:, -1]
    return SpectralSummary(
        mu_max=mu_max,
        mu_min=mu_min,
        mu_min_companion=mu_min_comp,
        m_upper=float(f_max.max()),
        m_lower=float(f_max.min()),
        grid_size=grid_size,
    )
