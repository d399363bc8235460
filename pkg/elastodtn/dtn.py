"""Rayleigh modes, the truncated DtN map and its boundary moments."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .exceptions import DtnMismatchError, GeometryError, ResonanceError
from .mesh import BoundaryTag, Mesh
from .models import ElasticMedium, QuasiPeriodicParams, WaveKind
from .space import DofMap

_LOGGER = logging.getLogger(__name__)

RESONANCE_RTOL = 1e-12
"""Relative distance of |α_n| from κ below which a mode is resonant."""

SERIES_THRESHOLD = 0.5
"""Edge moments switch to the power series when |α_n h| is below this."""

SERIES_TERMS = 18

MAX_TRUNCATION = 100_000


def alpha_n(alpha: float, period: float, n: "int | np.ndarray"):
    """Mode wavenumber α_n = α + 2πn/Λ."""
    return alpha + 2.0 * math.pi * np.asarray(n) / period


def beta(kappa: float, alpha_n: float, n: Optional[int] = None) -> complex:
    """Vertical wavenumber on the outgoing branch.

    Parameters
    ----------
    kappa : float
        Wavenumber κ > 0.
    alpha_n : float
        Horizontal mode wavenumber.
    n : int, optional
        Mode index, only used in the error message.

    Returns
    -------
    complex
        (κ² − α_n²)^{1/2} for propagating modes, i(α_n² − κ²)^{1/2} for
        evanescent ones.

    Raises
    ------
    ResonanceError
        If |α_n| equals κ to a relative tolerance of 1e-12.
    """
    if not kappa > 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    gap = abs(alpha_n) - kappa
    if abs(gap) <= RESONANCE_RTOL * kappa:
        raise ResonanceError(n, alpha_n, kappa)
    if gap < 0.0:
        return complex(math.sqrt(kappa * kappa - alpha_n * alpha_n), 0.0)
    return complex(0.0, math.sqrt(alpha_n * alpha_n - kappa * kappa))


def betas(kappa: float, alphas: np.ndarray) -> np.ndarray:
    """Vectorized :func:`beta`."""
    alphas = np.asarray(alphas, dtype=float)
    gap = np.abs(alphas) - kappa
    resonant = np.abs(gap) <= RESONANCE_RTOL * kappa
    if np.any(resonant):
        first = int(np.argmax(resonant))
        raise ResonanceError(None, float(alphas.flat[first]), kappa)
    root = np.sqrt(np.abs(kappa * kappa - alphas * alphas))
    return np.where(gap < 0.0, root + 0j, 1j * root)


def dtn_matrices(medium: ElasticMedium, alphas: np.ndarray) -> np.ndarray:
    """Stack of M^{(n)} for an array of α_n, shape (..., 2, 2)."""
    alphas = np.asarray(alphas, dtype=float)
    b1 = betas(medium.kappa_p, alphas)
    b2 = betas(medium.kappa_s, alphas)
    chi = alphas * alphas + b1 * b2
    scale = np.maximum(alphas * alphas, np.abs(b1 * b2))
    singular = np.abs(chi) <= RESONANCE_RTOL * np.maximum(scale, 1.0)
    if np.any(singular):
        first = int(np.argmax(singular))
        raise ResonanceError(None, float(alphas.flat[first]), medium.kappa_s)
    w2 = medium.omega ** 2
    off = medium.mu * alphas * chi - w2 * alphas
    out = np.empty(alphas.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = w2 * b1
    out[..., 0, 1] = off
    out[..., 1, 0] = -off
    out[..., 1, 1] = w2 * b2
    return out * np.asarray(1j / chi)[..., None, None]


def dtn_matrix(medium: ElasticMedium, alpha_n: float) -> np.ndarray:
    """The 2×2 DtN matrix M^{(n)} of one mode."""
    return dtn_matrices(medium, np.array(alpha_n))


def symmetrized_block(M: np.ndarray) -> np.ndarray:
    """M̂ = −(M + M*)/2; works on stacks of matrices too."""
    M = np.asarray(M)
    return -0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))


@dataclass(frozen=True, eq=False)
class DtnMode:
    """Everything the DtN map needs to know about one Rayleigh mode."""

    n: int
    alpha_n: float
    beta1: complex
    beta2: complex
    chi: complex
    M: np.ndarray

    @property
    def propagating(self) -> bool:
        return self.beta2.imag == 0.0


def dtn_mode(medium: ElasticMedium, qp: QuasiPeriodicParams, n: int) -> DtnMode:
    a = float(alpha_n(qp.alpha, qp.period, n))
    b1 = beta(medium.kappa_p, a, n)
    b2 = beta(medium.kappa_s, a, n)
    return DtnMode(
        n=n,
        alpha_n=a,
        beta1=b1,
        beta2=b2,
        chi=a * a + b1 * b2,
        M=dtn_matrix(medium, a),
    )


def positive_definite(medium: ElasticMedium, alphas: np.ndarray) -> np.ndarray:
    """Whether M̂^{(n)} is positive definite, per α_n."""
    blocks = symmetrized_block(dtn_matrices(medium, alphas))
    return np.linalg.eigvalsh(blocks).min(axis=-1) > 0.0


def first_coercive_mode(
    medium: ElasticMedium,
    alpha: float,
    period: float,
    start: int = 0,
    limit: int = MAX_TRUNCATION,
) -> int:
    """Smallest |n| ≥ ``start`` with M̂^{(n)} and M̂^{(−n)} positive definite."""
    chunk = 256
    for base in range(start, limit, chunk):
        ns = np.arange(base, base + chunk)
        ok = positive_definite(medium, alpha_n(alpha, period, ns)) & (
            positive_definite(medium, alpha_n(alpha, period, -ns))
        )
        if ok.any():
            return int(ns[np.argmax(ok)])
    raise ValueError(f"no positive definite mode below |n| = {limit}")


def minimum_truncation(medium: ElasticMedium, alpha: float, period: float) -> int:
    """Smallest N ≥ 1 for which every mode with |n| > N is shear-evanescent."""
    bound = (medium.kappa_s + abs(alpha)) * period / (2.0 * math.pi)
    return max(1, int(math.floor(bound)))


def _tail_max(
    kappa: float, alpha: float, period: float, depth: float, N: int
) -> float:
    largest = 0.0
    for sign in (1, -1):
        previous = math.inf
        falling = 0
        n = N + 1
        while falling < 3:
            a = abs(alpha + sign * 2.0 * math.pi * n / period)
            decay = math.sqrt(max(a * a - kappa * kappa, 0.0))
            value = n * math.exp(-decay * depth)
            largest = max(largest, value)
            falling = falling + 1 if value < previous else 0
            previous = value
            n += 1
    return largest


def truncation_bound(
    medium: ElasticMedium,
    alpha: float,
    period: float,
    b: float,
    b_prime: float,
    N: int,
    uinc_h1_norm: float,
) -> float:
    """DtN truncation error ε_N = max_{|n|>N} |n| e^{−|β₂^{(n)}|(b−b′)} ‖u^inc‖.

    The maximum over the infinite tail is taken by scanning each sign branch
    until three consecutive terms decrease strictly.

    Raises
    ------
    GeometryError
        If ``b <= b_prime``.
    """
    if not b > b_prime:
        raise GeometryError(f"b={b} must exceed b'={b_prime}")
    depth = b - b_prime
    return _tail_max(medium.kappa_s, alpha, period, depth, N) * uinc_h1_norm


def select_truncation(
    medium: ElasticMedium,
    theta: float,
    period: float,
    b: float,
    b_prime: float,
    tol: float,
    uinc_h1_norm: float,
    kind: WaveKind = WaveKind.COMPRESSIONAL,
) -> Tuple[int, float]:
    """Smallest admissible truncation order with ε_N ≤ ``tol``.

    Parameters
    ----------
    medium : ElasticMedium
    theta : float
        Incident angle; α = κ sin θ with κ the wavenumber of ``kind``.
    period, b, b_prime : float
        Period, height of Γ and the height b′ = max f below which the
        evanescent tail is measured.
    tol : float
        Target for ε_N; ``math.inf`` returns the minimum admissible order.
    uinc_h1_norm : float
        ‖u^inc‖_{H¹(Ω)}.
    kind : WaveKind
        Incident wave polarization.

    Returns
    -------
    Tuple[int, float]
        The order N and its bound ε_N.
    """
    if not b > b_prime:
        raise GeometryError(f"b={b} must exceed b'={b_prime}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    kappa = medium.kappa_p if WaveKind(kind) is WaveKind.COMPRESSIONAL else (
        medium.kappa_s
    )
    alpha = kappa * math.sin(theta)
    N = minimum_truncation(medium, alpha, period)
    while N < MAX_TRUNCATION:
        eps = truncation_bound(
            medium, alpha, period, b, b_prime, N, uinc_h1_norm
        )
        if eps <= tol:
            _LOGGER.info("DtN truncation N=%d with eps_N=%.3e", N, eps)
            return N, eps
        N += 1
    raise ValueError(f"eps_N stays above {tol} up to N={MAX_TRUNCATION}")


def edge_moments(
    x0: float, h: float, alphas: "float | np.ndarray"
) -> Tuple[np.ndarray, np.ndarray]:
    """Fourier moments of the two hat functions on [x0, x0 + h].

    Returns
    -------
    Tuple[numpy.ndarray, numpy.ndarray]
        ∫₀^h (1 − t/h) e^{−iα(x0+t)} dt and ∫₀^h (t/h) e^{−iα(x0+t)} dt for
        every α in ``alphas``.
    """
    if not h > 0.0:
        raise ValueError(f"edge length must be positive, got {h}")
    a = np.atleast_1d(np.asarray(alphas, dtype=float))
    z = -1j * a
    w = z * h
    shift = np.exp(z * x0)
    left = np.empty(a.shape, dtype=complex)
    right = np.empty(a.shape, dtype=complex)

    small = np.abs(w) < SERIES_THRESHOLD
    if np.any(small):
        ws = w[small]
        acc_left = np.zeros(ws.shape, dtype=complex)
        acc_right = np.zeros(ws.shape, dtype=complex)
        power = np.ones(ws.shape, dtype=complex)
        for k in range(SERIES_TERMS):
            acc_left += power / math.factorial(k + 2)
            acc_right += power / (math.factorial(k) * (k + 2))
            power = power * ws
        left[small] = h * acc_left
        right[small] = h * acc_right
    big = ~small
    if np.any(big):
        zb = z[big]
        grow = np.exp(zb * h)
        i0 = (grow - 1.0) / zb
        i1 = h * grow / zb - (grow - 1.0) / (zb * zb)
        right[big] = i1 / h
        left[big] = i0 - i1 / h
    left *= shift
    right *= shift
    if np.ndim(alphas) == 0:
        return left[0], right[0]
    return left, right


@dataclass(frozen=True, eq=False)
class DtnOperator:
    """Truncated DtN map tied to the Γ masters of one mesh."""

    N: int
    period: float
    modes: Tuple[DtnMode, ...]
    alphas: np.ndarray
    matrices: np.ndarray
    gamma_vertices: np.ndarray
    moments: np.ndarray
    """c_{i,n}, shape (len(gamma_vertices), 2N + 1)."""

    @property
    def mode_indices(self) -> np.ndarray:
        return np.array([m.n for m in self.modes], dtype=np.int64)

    def block(self) -> np.ndarray:
        """Dense Γ block B[j, a, i, b] = Λ⁻¹ Σ_n conj(c_jn) M_n[a, b] c_in."""
        if self.moments.shape[1] != len(self.modes):
            raise DtnMismatchError(
                f"{self.moments.shape[1]} moment columns for"
                f" {len(self.modes)} modes"
            )
        c = self.moments
        return np.einsum("jn,nab,in->jaib", np.conj(c), self.matrices, c) / (
            self.period
        )


def build_dtn_operator(
    mesh: Mesh,
    dofmap: DofMap,
    medium: ElasticMedium,
    qp: QuasiPeriodicParams,
    N: int,
) -> DtnOperator:
    """Modes |n| ≤ N and the moments of the Γ hat functions of ``mesh``.

    Moments of the slave corner at x = Λ are folded into its master with the
    quasi-periodic phase, so a trace is fully described by its masters.

    Raises
    ------
    DtnMismatchError
        If an edge of Γ touches a vertex that has no Γ master.
    """
    modes = tuple(dtn_mode(medium, qp, n) for n in range(-N, N + 1))
    alphas = np.array([m.alpha_n for m in modes], dtype=float)
    if modes:
        matrices = np.stack([m.M for m in modes])
    else:
        matrices = np.zeros((0, 2, 2), dtype=complex)

    gamma = dofmap.gamma_vertices
    row = np.full(dofmap.num_vertices, -1, dtype=np.int64)
    row[gamma] = np.arange(len(gamma))
    weight = np.ones(dofmap.num_vertices, dtype=complex)
    slaves = dofmap.slave_vertices
    row[slaves] = np.where(
        row[dofmap.master[slaves]] >= 0, row[dofmap.master[slaves]], -1
    )
    weight[slaves] = dofmap.phase

    moments = np.zeros((len(gamma), len(modes)), dtype=complex)
    for a, b in mesh.tagged_edges(BoundaryTag.TOP):
        if mesh.vertices[a, 0] > mesh.vertices[b, 0]:
            a, b = b, a
        if row[a] < 0 or row[b] < 0:
            raise DtnMismatchError(f"edge ({a}, {b}) on y=b has no Γ master")
        x0 = mesh.vertices[a, 0]
        h = mesh.vertices[b, 0] - x0
        if len(modes) == 0:
            continue
        left, right = edge_moments(x0, h, alphas)
        moments[row[a]] += weight[a] * left
        moments[row[b]] += weight[b] * right
    return DtnOperator(
        N=N,
        period=qp.period,
        modes=modes,
        alphas=alphas,
        matrices=matrices,
        gamma_vertices=gamma,
        moments=moments,
    )


def trace_coefficients(
    dofmap: DofMap, full: np.ndarray, dtn: DtnOperator
) -> np.ndarray:
    """Fourier coefficients u^{(n)}(b) of the P1 trace, shape (2N + 1, 2).

    ``full`` is the per-vertex field after constraints are applied.
    """
    if not np.array_equal(dofmap.gamma_vertices, dtn.gamma_vertices):
        raise DtnMismatchError("DtN moments belong to a different mesh")
    trace = np.asarray(full, dtype=complex).reshape(-1, 2)[dtn.gamma_vertices]
    return dtn.moments.T @ trace / dtn.period


def evaluate_TN(
    dtn: DtnOperator, coefficients: np.ndarray, x: "float | np.ndarray"
) -> np.ndarray:
    """𝒯_N u(x) = Σ_{|n|≤N} M^{(n)} u^{(n)}(b) e^{iα_n x}."""
    coefficients = np.asarray(coefficients, dtype=complex).reshape(-1, 2)
    if len(coefficients) != len(dtn.modes):
        raise DtnMismatchError(
            f"{len(coefficients)} coefficients for {len(dtn.modes)} modes"
        )
    weighted = np.einsum("nab,nb->na", dtn.matrices, coefficients)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    values = np.exp(1j * np.outer(xs, dtn.alphas)) @ weighted
    return values[0] if np.ndim(x) == 0 else values


def synthesize_trace(
    dtn: DtnOperator, coefficients: np.ndarray, x: "float | np.ndarray"
) -> np.ndarray:
    """Σ_{|n|≤N} u^{(n)} e^{iα_n x}, the truncated Fourier synthesis."""
    coefficients = np.asarray(coefficients, dtype=complex).reshape(-1, 2)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    values = np.exp(1j * np.outer(xs, dtn.alphas)) @ coefficients
    return values[0] if np.ndim(x) == 0 else values


def trace_norm(
    dtn: DtnOperator, coefficients: np.ndarray, s: float = 0.5
) -> float:
    """H^s(Γ) norm (Λ Σ_n (1 + α_n²)^s |u^{(n)}|²)^{1/2} of a truncated trace."""
    coefficients = np.asarray(coefficients, dtype=complex).reshape(-1, 2)
    weights = (1.0 + dtn.alphas ** 2) ** s
    energy = np.sum(weights * np.sum(np.abs(coefficients) ** 2, axis=1))
    return float(math.sqrt(dtn.period * energy))
