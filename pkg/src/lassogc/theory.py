"""Population-level constants and bounds for the thresholded statistic.

Everything here is computable from a known generative model: the population
Gram matrix of the lagged design, the surrogate reduced-model coefficients,
the restricted-eigenvalue and deviation-condition constants, the three
deviation radii for the loss comparisons, and the sample-size requirements.
These let experiments compare empirical behavior against the guarantees.

A handful of absolute constants inherited from concentration arguments have
no closed form; they are configuration (:class:`AbsoluteConstants`) with
illustrative defaults, and every derived quantity records how it was built
from them.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError, StructuralError
from .var_model import VarModel, autocovariance, spectral_summary

DEFAULT_M = 8.0

C11_MAX_COND = 1e12


@dataclass(frozen=True)
class AbsoluteConstants:
    """User-supplied absolute constants with illustrative defaults.

    ``d0``/``d0_prime`` scale the two deviation-condition functions, ``c``
    enters the restricted-eigenvalue tolerance, ``C0``/``D0``/``D0_prime``
    are the sample-size prefactors, and ``c1..c4, d1, d2, d1_prime, d2_prime``
    the failure-probability constants. The defaults for the probability
    constants are chosen so the aggregated values come out to
    K1 = 6, K2 = 6 and d_bar = 1.
    """

    d0: float = 5.2e-4
    d0_prime: float = 4.2e-4
    c: float = 0.02
    C0: float = 1e-6
    D0: float = 100.0
    D0_prime: float = 100.0
    c1: float = 2.0
    c2: float = 1.0
    c3: float = 2.0
    c4: float = 1.0
    d1: float = 6.0
    d2: float = 1.0
    d1_prime: float = 6.0
    d2_prime: float = 1.0


@dataclass(frozen=True)
class PopulationBlocks:
    """Population Gram matrix of the lagged design and its target/cross blocks.

    ``c_full`` is E[(1/n) X^T X] in the design's column order (target's own
    block first). ``c11`` is the own-lags block, ``c12``/``c21``/``c22`` the
    cross blocks, ``theta1``/``theta2`` the model's own and cross regression
    coefficients for the target, ``surrogate_reduced`` the population-optimal
    own-lag coefficients when the cross block is forced to zero, ``signal_d``
    the quadratic form of theta2 in the Schur complement (the population gap
    between reduced and full losses), and ``lambda_tilde_min`` the Schur
    complement's smallest eigenvalue.
    """

    c_full: np.ndarray
    c11: np.ndarray
    c12: np.ndarray
    c21: np.ndarray
    c22: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray
    surrogate_reduced: np.ndarray
    signal_d: float
    lambda_tilde_min: float
    target_channel: int
    p: int
    d: int

    def surrogate_for(self, theta2: np.ndarray) -> np.ndarray:
        """Surrogate own-lag coefficients theta1 + C11^{-1} C12 theta2."""
        theta2 = np.asarray(theta2, dtype=float)
        return self.theta1 + np.linalg.solve(self.c11, self.c12 @ theta2)

    def signal_for(self, theta2: np.ndarray) -> float:
        """Schur-complement quadratic form of an arbitrary cross vector."""
        theta2 = np.asarray(theta2, dtype=float)
        schur = self.c22 - self.c21 @ np.linalg.solve(self.c11, self.c12)
        return float(theta2 @ schur @ theta2)


def model_theta(model: VarModel, target: int) -> tuple:
    """Target-row regression coefficients (own block, cross blocks).

    Returns (theta1, theta2) in the design's column order: theta1 stacks the
    target's own-lag coefficients (lag 1..p), theta2 concatenates the other
    channels' blocks in ascending channel order.
    """
    if not 0 <= target < model.dim:
        raise StructuralError(f"target {target} out of range for d={model.dim}")
    theta1 = np.array([a[target, target] for a in model.coeffs])
    others = [c for c in range(model.dim) if c != target]
    theta2 = np.concatenate(
        [np.array([a[target, ch] for a in model.coeffs]) for ch in others]
    ) if others else np.empty(0)
    return theta1, theta2


def population_gram(model: VarModel, target: int, p: int) -> np.ndarray:
    """Population Gram matrix E[(1/n) X^T X] in the design's column order."""
    gammas = autocovariance(model, max(p - 1, 0))

    def gamma(lag: int) -> np.ndarray:
        return gammas[lag] if lag >= 0 else gammas[-lag].T

    channels = (target,) + tuple(c for c in range(model.dim) if c != target)
    dp = model.dim * p
    c_full = np.empty((dp, dp))
    for bi, chi in enumerate(channels):
        for bj, chj in enumerate(channels):
            for la in range(1, p + 1):
                for lb in range(1, p + 1):
                    # E[ch_i(t-la) * ch_j(t-lb)] = Gamma(lb - la)[chi, chj]
                    c_full[bi * p + la - 1, bj * p + lb - 1] = gamma(lb - la)[chi, chj]
    return (c_full + c_full.T) / 2.0


def population_blocks(model: VarModel, target: int, p: int) -> PopulationBlocks:
    """Assemble the population Gram blocks and derived signal quantities.

    ``p`` may exceed the model order; the extra coefficients are zero and the
    Gram matrix is still the exact population one.
    """
    if p < model.order:
        raise StructuralError(
            f"analysis order p={p} must cover the model order {model.order}"
        )
    c_full = population_gram(model, target, p)
    c11 = c_full[:p, :p]
    c12 = c_full[:p, p:]
    c21 = c_full[p:, :p]
    c22 = c_full[p:, p:]

    cond = np.linalg.cond(c11)
    if not np.isfinite(cond) or cond > C11_MAX_COND:
        raise NumericalError(
            f"own-lags Gram block is near-singular (condition number {cond:.3e})"
        )

    theta1_model, theta2_model = model_theta(model, target)
    theta1 = np.zeros(p)
    theta1[: model.order] = theta1_model
    theta2 = np.zeros((model.dim - 1) * p)
    for i in range(model.dim - 1):
        theta2[i * p: i * p + model.order] = theta2_model[i * model.order:(i + 1) * model.order]

    schur = c22 - c21 @ np.linalg.solve(c11, c12)
    schur = (schur + schur.T) / 2.0
    surrogate = theta1 + (np.linalg.solve(c11, c12 @ theta2) if theta2.size else 0.0)
    signal = float(theta2 @ schur @ theta2) if theta2.size else 0.0
    lam_tilde = float(np.linalg.eigvalsh(schur).min()) if theta2.size else 0.0
    return PopulationBlocks(
        c_full=c_full,
        c11=c11,
        c12=c12,
        c21=c21,
        c22=c22,
        theta1=theta1,
        theta2=theta2,
        surrogate_reduced=surrogate,
        signal_d=signal,
        lambda_tilde_min=lam_tilde,
        target_channel=target,
        p=p,
        d=model.dim,
    )


@dataclass(frozen=True)
class TheoryInputs:
    """The spectral/population scalars every bound is built from.

    These can be supplied directly (e.g. to reproduce a worked numerical
    instance) or derived from a model via :func:`inputs_from_model`.

    ``nu_l1``/``nu_l2`` are the norms of the stacked vector
    [-C11^{-1} C12 theta2; theta2] that drives the reduced-model deviation
    and the reduced deviation-condition constant; ``off_support_l1`` is the
    l1 mass of the surrogate reduced coefficients off the support of the
    target's own true coefficients.
    """

    sigma11: float
    lambda_max_noise: float
    lambda_min_noise: float
    mu_max: float
    mu_min: float
    mu_min_companion: float
    lambda_tilde_min: float
    c11c12_norm: float
    theta2_l2: float = 0.0
    nu_l1: float = 0.0
    nu_l2: float = 0.0
    off_support_l1: float = 0.0
    signal_d: float = 0.0

    def __post_init__(self):
        if min(self.lambda_max_noise, self.lambda_min_noise, self.sigma11) <= 0:
            raise StructuralError("noise eigenvalues and sigma11 must be positive")
        if min(self.mu_max, self.mu_min, self.mu_min_companion) <= 0:
            raise StructuralError("characteristic-polynomial extrema must be positive")


def inputs_from_model(
    model: VarModel,
    target: int,
    p: int,
    grid_size: int = 1024,
    blocks: Optional[PopulationBlocks] = None,
) -> TheoryInputs:
    """Compute :class:`TheoryInputs` from a generative model."""
    summary = spectral_summary(model, grid_size)
    if blocks is None:
        blocks = population_blocks(model, target, p)
    noise_eigs = np.linalg.eigvalsh(model.noise_cov)
    c11c12 = np.linalg.solve(blocks.c11, blocks.c12)
    nu = np.concatenate([-c11c12 @ blocks.theta2, blocks.theta2])
    support = blocks.theta1 != 0.0
    off_support = float(np.abs(blocks.surrogate_reduced[~support]).sum())
    return TheoryInputs(
        sigma11=float(model.noise_cov[target, target]),
        lambda_max_noise=float(noise_eigs[-1]),
        lambda_min_noise=float(noise_eigs[0]),
        mu_max=summary.mu_max,
        mu_min=summary.mu_min,
        mu_min_companion=summary.mu_min_companion,
        lambda_tilde_min=blocks.lambda_tilde_min,
        c11c12_norm=float(np.linalg.norm(c11c12, 2)) if c11c12.size else 0.0,
        theta2_l2=float(np.linalg.norm(blocks.theta2)),
        nu_l1=float(np.abs(nu).sum()),
        nu_l2=float(np.linalg.norm(nu)),
        off_support_l1=off_support,
        signal_d=blocks.signal_d,
    )


@dataclass(frozen=True)
class TheoryReport:
    """Every computable constant for one (model, n, k, m) configuration."""

    n: int
    p: int
    k: int
    m: float
    alpha: float
    zeta: float
    tau: float
    q_full: float
    q_reduced: float
    a_const: float
    lambda_n: float
    delta_f: float
    delta_r: float
    delta_d: float
    small_a: float
    small_b: float
    small_c: float
    b_const: float
    c_prime: float
    d_prime: float
    d_tilde: float
    c_dprime: float
    d_dprime: float
    min_n_theorem: int
    min_n_re: int
    alt_strength_bound: float
    k1: float
    k2: float
    c_bar: float
    d_bar: float
    full_l2_bound: float
    full_l1_bound: float
    full_pred_bound: float
    reduced_l2_bound: float
    reduced_l1_bound: float
    reduced_pred_bound: float
    inputs: TheoryInputs
    constants: AbsoluteConstants

    def to_json(self) -> str:
        doc = asdict(self)
        return json.dumps(doc, indent=2)

    def format_table(self) -> str:
        """Human-readable constant table for the CLI."""
        rows = [
            ("alpha", self.alpha),
            ("zeta", self.zeta),
            ("tau", self.tau),
            ("Q (full)", self.q_full),
            ("Q' (reduced)", self.q_reduced),
            ("A", self.a_const),
            ("lambda_n", self.lambda_n),
            ("delta_F", self.delta_f),
            ("delta_R", self.delta_r),
            ("delta_D", self.delta_d),
            ("a", self.small_a),
            ("b", self.small_b),
            ("c", self.small_c),
            ("B", self.b_const),
            ("C'", self.c_prime),
            ("D'", self.d_prime),
            ("D~", self.d_tilde),
            ("C''", self.c_dprime),
            ("D''", self.d_dprime),
            ("min n (theorem)", self.min_n_theorem),
            ("min n (RE)", self.min_n_re),
            ("alt strength bound", self.alt_strength_bound),
            ("K1", self.k1),
            ("K2", self.k2),
            ("c_bar", self.c_bar),
            ("d_bar", self.d_bar),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value:.6g}" for name, value in rows)


def deviation_radii(
    inputs: TheoryInputs,
    n: int,
    k: int,
    m: float,
    lambda_n: float,
    alpha: float,
    q_full: float,
    p: int,
) -> tuple:
    """The three deviation radii (delta_F, delta_R, delta_D).

    delta_F bounds the full-model loss deviation, delta_R the reduced-model
    one (including the surrogate's off-support l1 mass), and delta_D the
    concentration of the reduced-minus-full population gap around signal_d.
    """
    curvature = alpha / m
    delta_f = (24.0 / (m + 1.0)) * k * lambda_n**2 / curvature
    delta_r = 20.0 * k * lambda_n**2 / curvature + (
        8.0 * math.sqrt(2.0 * m) + 18.0
    ) * lambda_n * inputs.off_support_l1
    s = math.sqrt(math.log(2.0 * p) / n)
    delta_d = q_full * s * inputs.nu_l1 + (alpha / 27.0) * inputs.nu_l2**2
    return delta_f, delta_r, delta_d


def theory_report_from_inputs(
    inputs: TheoryInputs,
    n: int,
    p: int,
    k: int,
    m: float = DEFAULT_M,
    constants: Optional[AbsoluteConstants] = None,
    a_const: Optional[float] = None,
) -> TheoryReport:
    """Evaluate every constant from pre-computed spectral/population scalars.

    ``a_const`` optionally fixes the deviation-scale constant directly; it
    must dominate both deviation-condition functions, whose maximum is the
    default. ``m > 1`` trades curvature against the deviation radii.
    """
    if m <= 1.0:
        raise StructuralError(f"m must be > 1, got {m}")
    if n < 1 or p < 1 or k < 1:
        raise StructuralError(f"n, p, k must be positive, got ({n}, {p}, {k})")
    consts = constants or AbsoluteConstants()

    alpha = inputs.lambda_min_noise / (2.0 * inputs.mu_max)
    zeta = 54.0 * (inputs.lambda_max_noise / inputs.mu_min_companion) / (
        inputs.lambda_min_noise / inputs.mu_max
    )
    log2p = math.log(2.0 * p)
    tau = 4.0 * alpha * max(zeta**2, 1.0) / consts.c * log2p / n

    ar_factor = 1.0 + (1.0 + inputs.mu_max) / inputs.mu_min
    q_full = consts.d0 * inputs.lambda_max_noise * ar_factor
    q_reduced = consts.d0_prime * inputs.lambda_max_noise * (
        ar_factor + 3.0 * inputs.nu_l2 / inputs.mu_min_companion
    )
    q_max = max(q_full, q_reduced)
    if a_const is None:
        a_const = q_max
    elif a_const < q_max * (1.0 - 1e-12):
        raise StructuralError(
            f"a_const={a_const} must dominate the deviation-condition functions "
            f"(max {q_max})"
        )

    lambda_n = 4.0 * a_const * math.sqrt(log2p / n)
    delta_f, delta_r, delta_d = deviation_radii(
        inputs, n, k, m, lambda_n, alpha, q_full, p
    )

    small_a = alpha / 27.0 * (inputs.c11c12_norm**2 + 1.0)
    small_b = a_const * ((32.0 * math.sqrt(2.0 * m) + 73.0) * inputs.c11c12_norm + 1.0)
    small_c = 16.0 * a_const**2 / (alpha / m) * (168.0 / (m + 1.0) + 20.0)

    lam_tilde = inputs.lambda_tilde_min
    if lam_tilde <= 0:
        raise StructuralError(
            "lambda_tilde_min must be positive (a degenerate or absent "
            "cross-channel block has no detectable signal floor)"
        )
    b_const = 4.0 * small_b**2 / lam_tilde**2 + 4.0 * small_c / lam_tilde
    c_prime = (2.0 * alpha * (inputs.c11c12_norm**2 + 1.0) / (27.0 * lam_tilde)) ** 2
    d_prime = (1536.0 * m / (m + 1.0)) * a_const**2 / (alpha * inputs.sigma11)
    d_tilde = (42.0 * m / ((m + 1.0) * alpha)) * 16.0 * a_const**2 / inputs.sigma11

    c_dprime = max(c_prime, consts.D0, consts.D0_prime)
    d_dprime = max(d_prime, consts.C0 * max(zeta**2, 1.0))
    min_n_theorem = int(math.ceil(max(c_dprime, d_dprime * k) * log2p - 1e-12))
    min_n_re = int(
        math.ceil(128.0 / consts.c * (m / (m - 1.0)) * max(zeta**2, 1.0) * k * log2p - 1e-12)
    )
    alt_strength = b_const * k * log2p / n

    k1 = 2.0 + consts.c1 + consts.c3
    k2 = consts.d1 / 2.0**consts.d2 + consts.d1_prime / 2.0**consts.d2_prime
    c_bar = min(
        1.0 / 128.0,
        consts.c2,
        consts.c4,
        consts.c2 * zeta**-2,
        consts.c4 * zeta**-2 * max(consts.D0, consts.D0_prime),
    )
    d_bar = min(consts.d2, consts.d2_prime)

    curvature = alpha / m
    sqrt_k = math.sqrt(k)
    off = inputs.off_support_l1
    full_l2 = (3.0 * m / (m + 1.0)) * sqrt_k * lambda_n / alpha
    full_l1 = (12.0 * m / (m + 1.0)) * k * lambda_n / alpha
    full_pred = (18.0 * m / (m + 1.0)) * k * lambda_n**2 / alpha
    reduced_l2 = (
        1.5 * lambda_n * sqrt_k / curvature
        + math.sqrt(2.0 * m / k) * off
        + math.sqrt(4.0 * lambda_n / curvature * off)
    )
    reduced_l1 = (
        6.0 * lambda_n * k / curvature
        + 4.0 * (math.sqrt(2.0 * m) + 1.0) * off
        + 8.0 * math.sqrt(lambda_n * k / curvature) * math.sqrt(off)
    )
    reduced_pred = (
        9.0 * lambda_n**2 * k / curvature
        + (6.0 * (math.sqrt(2.0 * m) + 1.0) + 2.0) * lambda_n * off
        + 12.0 * math.sqrt(lambda_n**3 * k / curvature) * math.sqrt(off)
    )

    return TheoryReport(
        n=n,
        p=p,
        k=k,
        m=m,
        alpha=alpha,
        zeta=zeta,
        tau=tau,
        q_full=q_full,
        q_reduced=q_reduced,
        a_const=float(a_const),
        lambda_n=lambda_n,
        delta_f=delta_f,
        delta_r=delta_r,
        delta_d=delta_d,
        small_a=small_a,
        small_b=small_b,
        small_c=small_c,
        b_const=b_const,
        c_prime=c_prime,
        d_prime=d_prime,
        d_tilde=d_tilde,
        c_dprime=c_dprime,
        d_dprime=d_dprime,
        min_n_theorem=min_n_theorem,
        min_n_re=min_n_re,
        alt_strength_bound=alt_strength,
        k1=k1,
        k2=k2,
        c_bar=c_bar,
        d_bar=d_bar,
        full_l2_bound=full_l2,
        full_l1_bound=full_l1,
        full_pred_bound=full_pred,
        reduced_l2_bound=reduced_l2,
        reduced_l1_bound=reduced_l1,
        reduced_pred_bound=reduced_pred,
        inputs=inputs,
        constants=consts,
    )


def theory_report(
    model: VarModel,
    target: int,
    p: int,
    n: int,
    k: Optional[int] = None,
    m: float = DEFAULT_M,
    constants: Optional[AbsoluteConstants] = None,
    grid_size: int = 1024,
    a_const: Optional[float] = None,
) -> TheoryReport:
    """Evaluate every constant for a generative model.

    ``k`` defaults to the actual number of nonzero regression coefficients of
    the target at analysis order ``p``.
    """
    blocks = population_blocks(model, target, p)
    inputs = inputs_from_model(model, target, p, grid_size=grid_size, blocks=blocks)
    if k is None:
        k = int(np.count_nonzero(blocks.theta1) + np.count_nonzero(blocks.theta2))
        k = max(k, 1)
    return theory_report_from_inputs(
        inputs, n=n, p=p, k=k, m=m, constants=constants, a_const=a_const
    )


def quadratic_positivity_bound(a: float, b: float, c: float) -> float:
    """Return x0^2 = (b/a)^2 + 2c/a, beyond which a x^2 - b x - c > 0.

    Any positive x with x^2 >= x0^2 lies at or above the quadratic's positive
    root, so the quadratic is nonnegative there (strictly positive past the
    root).
    """
    if a <= 0:
        raise StructuralError(f"leading coefficient must be positive, got {a}")
    if b < 0 or c < 0:
        raise StructuralError(f"b and c must be >= 0, got ({b}, {c})")
    return (b / a) ** 2 + 2.0 * c / a


def normal_concentration_bound(n: int, t: float) -> float:
    """Tail bound 2*exp(-n t^2 / 8) for the mean of n squared standard normals."""
    if n < 1:
        raise StructuralError(f"n must be >= 1, got {n}")
    if t <= 0:
        raise StructuralError(f"t must be > 0, got {t}")
    return 2.0 * math.exp(-n * t * t / 8.0)
