"""
MHK Sampling Module
Seeded generators for matrices, series, colligations, node sets and measures
shared by the acceptance battery and the tests
"""
from typing import List, Optional

import numpy as np
import scipy.linalg as sla

from app.blaschke import Realization
from app.cara import HerglotzData
from app.mps import MatrixPowerSeries
from app.numkit import CMat, adjoint, spectral_radius
from app.symm import embed_quaternion, embed_split


def rng_for(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_cmat(rng: np.random.Generator, rows: int, cols: Optional[int] = None, scale: float = 1.0) -> CMat:
    cols = rows if cols is None else cols
    return scale * (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def with_radius(rng: np.random.Generator, n: int, rho: float) -> CMat:
    """Random n x n matrix rescaled to spectral radius rho."""
    a = random_cmat(rng, n)
    r = spectral_radius(a)
    return a * (rho / r) if r > 0 else a


def random_unitary(rng: np.random.Generator, n: int) -> CMat:
    q, r = sla.qr(random_cmat(rng, n))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_normal(rng: np.random.Generator, n: int, rho: float) -> CMat:
    """U diag(lambda) U^* with |lambda_i| <= rho."""
    u = random_unitary(rng, n)
    lam = rho * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    return (u * lam) @ adjoint(u)


def random_psd(rng: np.random.Generator, n: int, rank: Optional[int] = None) -> CMat:
    g = random_cmat(rng, n, n if rank is None else rank)
    return g @ adjoint(g)


def random_series(rng: np.random.Generator, p: int, order: int, decay: float = 0.5,
                  u: int = 1, v: int = 1) -> MatrixPowerSeries:
    """Coefficients decay^n times a standard complex Gaussian."""
    weights = decay ** np.arange(order + 1)
    coeffs = np.stack([w * random_cmat(rng, u * p, v * p) for w in weights])
    return MatrixPowerSeries(coeffs, p=p)


def random_polynomial(rng: np.random.Generator, p: int, degree: int, scale: float = 0.5,
                      decay: float = 0.7) -> MatrixPowerSeries:
    """
    Degree-limited series with coefficients scale * decay^n * Gaussian.

    The decay keeps the tail radius estimate comfortably above 1, so the
    polynomial can be evaluated anywhere in the closed unit disk.
    """
    return MatrixPowerSeries(np.stack([random_cmat(rng, p, scale=scale * decay ** n) for n in range(degree + 1)]), p=p)


def contractive_colligation(rng: np.random.Generator, state: int, p: int, scale: float = 0.9) -> Realization:
    """Blocks of scale * (random unitary) on C^state + C^p."""
    m = scale * random_unitary(rng, state + p)
    return Realization(a=m[:state, :state], b=m[:state, state:], c=m[state:, :state], d=m[state:, state:])


def schur_series(rng: np.random.Generator, p: int, order: int, state: int = 3, scale: float = 0.9) -> MatrixPowerSeries:
    return contractive_colligation(rng, state, p, scale).to_series(order, p=p)


def interpolation_nodes(rng: np.random.Generator, p: int, count: int, rho: float = 0.6) -> List[CMat]:
    return [with_radius(rng, p, rho * rng.uniform(0.3, 1.0)) for _ in range(count)]


def leech_sample(rng: np.random.Generator, p: int, matrices: int = 2) -> List[CMat]:
    """Scalar points {0, 0.3, -0.3i, 0.25+0.25i} I plus random normal matrices with rho <= 0.6."""
    eye = np.eye(p, dtype=np.complex128)
    points = [z * eye for z in (0.0, 0.3, -0.3j, 0.25 + 0.25j)]
    points += [random_normal(rng, p, 0.6) for _ in range(matrices)]
    return points


def model_sample(rng: np.random.Generator, p: int, ring: int = 8, radius: float = 0.6, matrices: int = 2) -> List[CMat]:
    """0 and ring scalar points spread on |z| = radius, plus random normal matrices with rho <= radius."""
    eye = np.eye(p, dtype=np.complex128)
    points = [0.0 * eye] + [radius * np.exp(2j * np.pi * k / ring) * eye for k in range(ring)]
    points += [random_normal(rng, p, radius) for _ in range(matrices)]
    return points


def herglotz_data(rng: np.random.Generator, p: int, atoms: int = 3) -> HerglotzData:
    x = random_cmat(rng, p)
    return HerglotzData.of(
        (x + adjoint(x)) / 2,
        [(float(rng.uniform(0, 2 * np.pi)), random_psd(rng, p) / p) for _ in range(atoms)],
    )


def quaternion_node(rng: np.random.Generator, radius: float = 0.7) -> CMat:
    """Scalar quaternion node with |a1|^2 + |a2|^2 = radius^2."""
    v = random_cmat(rng, 2, 1).ravel()
    v = radius * v / np.linalg.norm(v)
    return embed_quaternion(v[0], v[1])


def split_node(rng: np.random.Generator, bound: float = 0.7) -> CMat:
    """Scalar split-quaternion node with |a1| + |a2| = bound, so its norm is below 1."""
    v = random_cmat(rng, 2, 1).ravel()
    v = bound * v / np.sum(np.abs(v))
    return embed_split(v[0], v[1])
