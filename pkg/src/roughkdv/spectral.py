"""Mean-zero periodic Fourier states and the basic spectral operations.

A real mean-zero function on the torus is represented by its Fourier
coefficients on the positive modes only; negative modes are recovered by
conjugation, so realness and mean-zero hold by construction rather than by
runtime checks.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpectralCoeffs",
    "FLNormParams",
    "fl_norm",
    "airy_evolve",
    "project",
    "nonlinearity",
    "l2_inner",
    "random_state",
    "random_unit_state",
    "write_coeffs_csv",
    "read_coeffs_csv",
]


class SpectralCoeffs:
    """Fourier coefficients of a real mean-zero periodic function.

    Stores c[k-1] = u_hat(k) for k = 1..max_mode. Mode 0 is identically
    zero and u_hat(-k) = conj(u_hat(k)) is implied, never stored.
    Instances are immutable.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coeffs):
        arr = np.asarray(coeffs, dtype=complex).copy()
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coeffs must be a non-empty 1-d array (modes 1..N)")
        arr.setflags(write=False)
        object.__setattr__(self, "_coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralCoeffs is immutable")

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def max_mode(self) -> int:
        return self._coeffs.size

    @classmethod
    def zeros(cls, max_mode: int) -> "SpectralCoeffs":
        return cls(np.zeros(max_mode, dtype=complex))

    @classmethod
    def from_modes(cls, modes: dict, max_mode: int | None = None) -> "SpectralCoeffs":
        """Build from {k: value} for positive k; negative keys must conjugate-match."""
        pos = {}
        for k, v in modes.items():
            k = int(k)
            if k == 0:
                if v != 0:
                    raise ValueError("mode 0 must be zero (mean-zero state)")
                continue
            if k > 0:
                pos.setdefault(k, complex(v))
            else:
                pos.setdefault(-k, np.conj(complex(v)))
        for k, v in modes.items():
            k = int(k)
            if k < 0 and not np.isclose(np.conj(complex(v)), pos[-k]):
                raise ValueError(f"modes {k} and {-k} are not conjugate-symmetric")
        n = max_mode if max_mode is not None else max(pos, default=1)
        arr = np.zeros(n, dtype=complex)
        for k, v in pos.items():
            if k > n:
                raise ValueError(f"mode {k} exceeds max_mode {n}")
            arr[k - 1] = v
        return cls(arr)

    def mode(self, k: int) -> complex:
        """Coefficient at signed mode k (0 for |k| > max_mode or k = 0)."""
        if k == 0 or abs(k) > self.max_mode:
            return 0j
        return complex(self._coeffs[k - 1]) if k > 0 else complex(np.conj(self._coeffs[-k - 1]))

    def full_array(self) -> np.ndarray:
        """Dense coefficients over k = -N..N; index with k + N."""
        n = self.max_mode
        out = np.zeros(2 * n + 1, dtype=complex)
        out[n + 1:] = self._coeffs
        out[:n] = np.conj(self._coeffs)[::-1]
        return out

    def padded(self, max_mode: int) -> "SpectralCoeffs":
        if max_mode < self.max_mode:
            raise ValueError("padded() cannot shrink; use project()")
        arr = np.zeros(max_mode, dtype=complex)
        arr[: self.max_mode] = self._coeffs
        return SpectralCoeffs(arr)

    # vector-space operations (needed by the increment calculus)
    def __add__(self, other):
        n = max(self.max_mode, other.max_mode)
        return SpectralCoeffs(self.padded(n).coeffs + other.padded(n).coeffs)

    def __radd__(self, other):
        # lets sum() fold over states
        if other == 0:
            return self
        return NotImplemented

    def __sub__(self, other):
        n = max(self.max_mode, other.max_mode)
        return SpectralCoeffs(self.padded(n).coeffs - other.padded(n).coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralCoeffs):
            return NotImplemented
        return SpectralCoeffs(self._coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralCoeffs(-self._coeffs)

    def allclose(self, other, atol=1e-12, rtol=1e-9) -> bool:
        n = max(self.max_mode, other.max_mode)
        return np.allclose(self.padded(n).coeffs, other.padded(n).coeffs, atol=atol, rtol=rtol)

    def __repr__(self):
        return f"SpectralCoeffs(max_mode={self.max_mode})"


@dataclass(frozen=True)
class FLNormParams:
    """Weighted-lp norm parameters: weight <k>^alpha, exponent p in [1, inf]."""

    alpha: float
    p: float

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError(f"p must be >= 1, got {self.p}")


def _bracket(k: np.ndarray) -> np.ndarray:
    # <k> = (1 + k^2)^(1/2)
    return np.sqrt(1.0 + np.asarray(k, dtype=float) ** 2)


def fl_norm(f: SpectralCoeffs, params: FLNormParams) -> float:
    """Weighted lp norm of the coefficients, both mode signs counted.

    (sum_k <k>^(alpha p) |f_hat(k)|^p)^(1/p); sup over modes when p = inf.
    """
    k = np.arange(1, f.max_mode + 1)
    w = _bracket(k) ** params.alpha
    mags = np.abs(f.coeffs)
    if math.isinf(params.p):
        return float(np.max(w * mags, initial=0.0))
    # negative modes have equal magnitude: factor 2 on the positive-mode sum
    return float((2.0 * np.sum((w * mags) ** params.p)) ** (1.0 / params.p))


def airy_evolve(f: SpectralCoeffs, t: float) -> SpectralCoeffs:
    """Free dispersive flow: multiply mode k by exp(i k^3 t).

    k^3 is odd, so the implied negative modes stay conjugate-symmetric.
    An isometry of every weighted-lp norm.
    """
    k = np.arange(1, f.max_mode + 1, dtype=float)
    return SpectralCoeffs(f.coeffs * np.exp(1j * k**3 * t))


def project(f: SpectralCoeffs, max_mode: int) -> SpectralCoeffs:
    """Zero out all modes with |k| > max_mode."""
    if max_mode < 0:
        raise ValueError("max_mode must be >= 0")
    if max_mode >= f.max_mode:
        return f
    if max_mode == 0:
        return SpectralCoeffs.zeros(1)
    return SpectralCoeffs(f.coeffs[:max_mode])


def nonlinearity(f: SpectralCoeffs) -> SpectralCoeffs:
    """Spectral form of (1/2) d/dxi (f^2): mode k gets (ik/2) sum f(k1) f(k-k1).

    Output carries modes up to 2 * max_mode; mode 0 vanishes by the ik factor.
    Direct summation, no transform grid.
    """
    n = f.max_mode
    dense = f.full_array()
    m_out = 2 * n
    out = np.zeros(m_out, dtype=complex)
    k1 = np.arange(-n, n + 1)
    for k in range(1, m_out + 1):
        k2 = k - k1
        ok = (k1 != 0) & (k2 != 0) & (np.abs(k2) <= n)
        out[k - 1] = 0.5j * k * np.sum(dense[k1[ok] + n] * dense[k2[ok] + n])
    return SpectralCoeffs(out)


def l2_inner(f: SpectralCoeffs, g: SpectralCoeffs) -> float:
    """Spatial L2 pairing 2 pi sum_k f_hat(-k) g_hat(k); real for real fields."""
    n = max(f.max_mode, g.max_mode)
    fc, gc = f.padded(n).coeffs, g.padded(n).coeffs
    return float(4.0 * math.pi * np.real(np.sum(np.conj(fc) * gc)))


def random_state(max_mode: int, rng: np.random.Generator, decay: float = 0.0) -> SpectralCoeffs:
    """Random Hermitian state; coefficient magnitudes ~ k^(-decay)."""
    k = np.arange(1, max_mode + 1, dtype=float)
    raw = rng.standard_normal(max_mode) + 1j * rng.standard_normal(max_mode)
    return SpectralCoeffs(raw * k ** (-decay))


def random_unit_state(max_mode: int, params: FLNormParams, rng: np.random.Generator) -> SpectralCoeffs:
    """Random state normalised to unit weighted-lp norm."""
    f = random_state(max_mode, rng)
    nrm = fl_norm(f, params)
    if nrm == 0.0:
        return f
    return SpectralCoeffs(f.coeffs / nrm)


def write_coeffs_csv(f: SpectralCoeffs, target) -> None:
    """Write lines "k,re,im" for k = 1..max_mode (negative modes implied)."""
    own = isinstance(target, (str,))
    handle = open(target, "w") if own else target
    try:
        for k in range(1, f.max_mode + 1):
            c = f.coeffs[k - 1]
            handle.write(f"{k},{c.real:.17g},{c.imag:.17g}\n")
    finally:
        if own:
            handle.close()


def read_coeffs_csv(source) -> SpectralCoeffs:
    own = isinstance(source, str)
    handle = open(source) if own else source
    try:
        rows = {}
        for line in handle:
            line = line.strip()
            if not line:
                continue
            k_s, re_s, im_s = line.split(",")
            rows[int(k_s)] = float(re_s) + 1j * float(im_s)
    finally:
        if own:
            handle.close()
    if not rows:
        raise ValueError("empty coefficient file")
    n = max(rows)
    arr = np.zeros(n, dtype=complex)
    for k, v in rows.items():
        if k < 1:
            raise ValueError("coefficient files carry positive modes only")
        arr[k - 1] = v
    return SpectralCoeffs(arr)
