"""Random matrix and sampling utilities on top of counter-based RNG streams.

All randomness in the package flows through :class:`RngStream`, a named
substream of numpy's Philox family.  A stream is identified by the pair
``(seed, stream_id)``; re-creating a stream with the same pair replays the
exact same draw sequence, and distinct ids give statistically independent
sequences.  Samplers consume draws in a documented, fixed order so whole
experiments replay bit-for-bit.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

__all__ = [
    "RngStream",
    "haar_orthogonal",
    "matrix_with_spectrum",
    "sample_sphere",
    "sample_l1_ball",
    "gaussian",
    "check_finite",
]


class RngStream:
    """A named, replayable random stream.

    Built on ``numpy.random.Philox`` (counter-based) keyed by
    ``SeedSequence(entropy=seed, spawn_key=(stream_id,))``.  Two streams with
    equal ``(seed, stream_id)`` produce identical draws; the generator itself
    is stateful, so consecutive draws from one stream advance as usual.
    """

    __slots__ = ("seed", "stream_id", "gen")

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0:
            raise ParameterError("seed must be a nonnegative integer")
        if stream_id < 0:
            raise ParameterError("stream_id must be a nonnegative integer")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.gen = np.random.Generator(np.random.Philox(ss))

    def spawn(self, stream_id: int) -> "RngStream":
        """A fresh stream with the same seed and a different id."""
        return RngStream(self.seed, stream_id)

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def _generator(rng) -> np.random.Generator:
    """Accept either an RngStream or a bare numpy Generator."""
    if isinstance(rng, RngStream):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    raise ParameterError(f"expected RngStream or numpy Generator, got {type(rng).__name__}")


def check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    """Validate that an array is float and finite; returns it unchanged."""
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


def haar_orthogonal(dim: int, rng) -> np.ndarray:
    """Draw a ``dim x dim`` orthogonal matrix from the Haar measure.

    QR of a standard Gaussian matrix, with each column j sign-flipped when
    R[j, j] < 0 (a zero diagonal entry is treated as positive) so the factor
    is unique and the distribution is exactly Haar.
    """
    if dim < 1:
        raise ParameterError("dim must be >= 1")
    gen = _generator(rng)
    g = gen.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diagonal(r))
    signs[signs == 0.0] = 1.0
    return q * signs


def matrix_with_spectrum(n_rows: int, n_cols: int, s_min: float, s_max: float, rng) -> np.ndarray:
    """An ``n_rows x n_cols`` matrix with prescribed singular values.

    Composes ``U diag(s) V^T`` with Haar orthogonal U (drawn first) and V,
    where ``s`` holds ``n_cols`` values linearly spaced from ``s_min`` to
    ``s_max``.  Requires ``1 <= n_cols <= n_rows`` and
    ``0 <= s_min <= s_max``.
    """
    if n_cols < 1 or n_rows < n_cols:
        raise ParameterError("need 1 <= n_cols <= n_rows")
    if not (0.0 <= s_min <= s_max):
        raise ParameterError("need 0 <= s_min <= s_max")
    u = haar_orthogonal(n_rows, rng)
    v = haar_orthogonal(n_cols, rng)
    spectrum = np.linspace(s_min, s_max, n_cols)
    return (u[:, :n_cols] * spectrum) @ v.T


def sample_sphere(dim: int, radius: float, rng) -> np.ndarray:
    """A uniform draw from the sphere of the given radius in R^dim.

    Gaussian direction normalized to exactly ``radius``; ``radius = 0``
    returns the zero vector (still consuming one Gaussian block so stream
    positions do not depend on the radius).
    """
    if dim < 1:
        raise ParameterError("dim must be >= 1")
    if radius < 0:
        raise ParameterError("radius must be >= 0")
    gen = _generator(rng)
    g = gen.standard_normal(dim)
    if radius == 0.0:
        return np.zeros(dim)
    norm = float(np.linalg.norm(g))
    while norm == 0.0:  # probability zero; guards exact-zero draws
        g = gen.standard_normal(dim)
        norm = float(np.linalg.norm(g))
    return (radius / norm) * g


def sample_l1_ball(dim: int, rng) -> np.ndarray:
    """A uniform draw from the unit l1 ball in R^dim.

    Exponential spacings put a point on the simplex, random signs spread it
    over the l1 sphere (the cone measure), and a ``U^(1/dim)`` radial factor
    fills the ball uniformly.  Draw order: exponentials, signs, radius.
    """
    if dim < 1:
        raise ParameterError("dim must be >= 1")
    gen = _generator(rng)
    spacings = gen.standard_exponential(dim)
    total = float(spacings.sum())
    while total == 0.0:  # probability zero
        spacings = gen.standard_exponential(dim)
        total = float(spacings.sum())
    simplex = spacings / total
    signs = 2.0 * gen.integers(0, 2, size=dim) - 1.0
    shrink = float(gen.uniform()) ** (1.0 / dim)
    return shrink * signs * simplex


def gaussian(mean: np.ndarray, cov, rng) -> np.ndarray:
    """Draw ``N(mean, cov)`` where ``cov`` is a scalar variance (times identity)
    or a positive semidefinite matrix.

    A scalar draws ``mean + sqrt(cov) * g``; ``cov = 0`` therefore returns the
    mean exactly (a Gaussian block is still consumed, keeping stream positions
    independent of the variance).  A matrix uses its Cholesky factor, falling
    back to a symmetric eigendecomposition with tiny negative eigenvalues
    clipped to zero.
    """
    mean = check_finite("mean", mean)
    gen = _generator(rng)
    if np.ndim(cov) == 0:
        variance = float(cov)
        if variance < 0:
            raise ParameterError("scalar covariance must be >= 0")
        g = gen.standard_normal(mean.shape)
        return mean + np.sqrt(variance) * g
    cov = check_finite("cov", cov)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] != mean.shape[0]:
        raise ParameterError("cov must be a square matrix matching mean's dimension")
    if not np.allclose(cov, cov.T, atol=1e-12 * max(1.0, float(np.abs(cov).max()))):
        raise ParameterError("cov must be symmetric")
    try:
        factor = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(cov)
        floor = -1e-8 * max(1.0, float(eigvals.max(initial=0.0)))
        if eigvals.min() < floor:
            raise ParameterError("cov is not positive semidefinite") from None
        factor = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
    g = gen.standard_normal(mean.shape[0])
    return mean + factor @ g
