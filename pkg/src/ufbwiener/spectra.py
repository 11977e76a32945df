"""Second-order statistics of a uniform filter bank's analysis stage.

Builds the subband PSD matrix and the desired/observed cross-spectral
density from the analysis filters, and runs the time-domain analysis
bank with blocking of the input signal.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .algebra import LaurentPoly, PolyMatrix


@dataclass(frozen=True)
class FilterBankSpec:
    """Analysis stage: L causal FIR filters, common decimation M, delay d.

    Blocking convention for the desired signal: d_i(n) = x(Mn - i - d).
    With v_j(n) = sum_l h_j(l) x(Mn - l) this is the unique blocking for
    which E[d_i(n) v_j*(n-k)] = sum_l h_j*(l) R_xx(Mk + l - i - d),
    i.e. the blocked pair is jointly wide-sense stationary.
    """

    M: int
    filters: tuple[LaurentPoly, ...]
    delay: int = 0

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(self.filters))
        if self.M < 1:
            raise ValueError("decimation factor M must be >= 1")
        if not self.filters:
            raise ValueError("need at least one analysis filter")
        if self.delay < 0:
            raise ValueError("reconstruction delay must be >= 0")
        for k, h in enumerate(self.filters):
            if not h.is_zero and h.highest_power > 0:
                raise ValueError(f"analysis filter {k} is not causal")

    @property
    def L(self) -> int:
        return len(self.filters)

    @property
    def is_maximally_decimated(self) -> bool:
        return self.L == self.M

    def taps(self, j: int) -> np.ndarray:
        """Causal tap vector [h_j(0), h_j(1), ...] of channel j."""
        h = self.filters[j]
        n = -h.lowest_power + 1 if not h.is_zero else 1
        return h.causal_taps(n)

    def to_json_dict(self) -> dict:
        return {
            "M": self.M,
            "d": self.delay,
            "filters": [[float(c.real) for c in self.taps(j)] for j in range(self.L)],
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "FilterBankSpec":
        filters = tuple(LaurentPoly.from_causal(taps) for taps in d["filters"])
        return cls(M=int(d["M"]), filters=filters, delay=int(d.get("d", 0)))

    @classmethod
    def from_json_file(cls, path) -> "FilterBankSpec":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class InputPSD:
    """Scalar input power spectral density S_xx(z).

    Must be paraconjugate-symmetric and real non-negative on the unit
    circle (checked on a 1024-point grid at construction).
    """

    psd: LaurentPoly

    def __post_init__(self):
        p = self.psd
        if not p.paraconjugate().almost_equal(p, 1e-9):
            raise ValueError("PSD is not paraconjugate-symmetric")
        z = np.exp(2j * np.pi * np.arange(1024) / 1024)
        vals = p(z)
        scale = max(p.max_abs_coeff(), 1e-300)
        if np.abs(vals.imag).max() > 1e-9 * scale or vals.real.min() < -1e-9 * scale:
            raise ValueError("PSD is not real non-negative on the unit circle")

    @classmethod
    def white(cls, variance: float = 1.0) -> "InputPSD":
        return cls(LaurentPoly([variance]))

    @classmethod
    def from_shaping_filter(cls, g: LaurentPoly, variance: float = 1.0) -> "InputPSD":
        """S_xx = variance * G * G~ for a shaping filter G(z)."""
        return cls(g * g.paraconjugate() * variance)


@dataclass(frozen=True)
class BlockedSignal:
    """Time-indexed sequence of fixed-length complex vectors."""

    dim: int
    samples: np.ndarray  # shape (n_blocks, dim)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.ndim != 2 or s.shape[1] != self.dim:
            raise ValueError("samples must have shape (n_blocks, dim)")
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.shape[0]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n"] + [f"v{j}" for j in range(self.dim)])
            for n, row in enumerate(self.samples):
                w.writerow([n] + [_fmt_complex(v) for v in row])


def _fmt_complex(v: complex) -> str:
    return repr(float(v.real)) if v.imag == 0 else repr(complex(v))


def analysis_psd(fb: FilterBankSpec, sx: InputPSD) -> PolyMatrix:
    """Subband PSD matrix: entry (i,j) = (H_i S_xx H~_j) downsampled by M."""
    tildes = [h.paraconjugate() for h in fb.filters]
    return PolyMatrix([
        [(fb.filters[i] * sx.psd * tildes[j]).downsample(fb.M) for j in range(fb.L)]
        for i in range(fb.L)
    ])


def cross_psd(fb: FilterBankSpec, sx: InputPSD) -> PolyMatrix:
    """Desired/observed CSD: entry (i,j) = (z^-(d+i) S_xx H~_j) downsampled by M."""
    tildes = [h.paraconjugate() for h in fb.filters]
    return PolyMatrix([
        [(LaurentPoly.delay(fb.delay + i) * sx.psd * tildes[j]).downsample(fb.M)
         for j in range(fb.L)]
        for i in range(fb.M)
    ])


def cross_correlation_dv(fb: FilterBankSpec, rxx: Mapping[int, complex],
                         i: int, j: int, k: int) -> complex:
    """E[d_i(n) v_j*(n-k)] = sum_l h_j*(l) R_xx(Mk + l - i - d).

    `rxx` maps lag m to R_xx(m); missing lags read as 0 and the sequence
    must be conjugate-symmetric.
    """
    if not (0 <= i < fb.M and 0 <= j < fb.L):
        raise IndexError(f"index pair ({i},{j}) outside ({fb.M},{fb.L}) bounds")
    for m, v in rxx.items():
        if m >= 0 and not np.isclose(rxx.get(-m, 0.0), np.conj(v), atol=1e-12):
            raise ValueError("autocorrelation sequence is not conjugate-symmetric")
    h = fb.taps(j)
    acc = 0j
    for l, hv in enumerate(h):
        acc += np.conj(hv) * rxx.get(fb.M * k + l - i - fb.delay, 0.0)
    return complex(acc)


def run_analysis(fb: FilterBankSpec, x: Sequence[float]) -> BlockedSignal:
    """Filter and decimate: v_j(n) = sum_l h_j(l) x(Mn - l), x(m<0) = 0."""
    x = np.asarray(x, dtype=np.complex128)
    n_blocks = len(x) // fb.M
    out = np.zeros((n_blocks, fb.L), dtype=np.complex128)
    if n_blocks == 0:
        return BlockedSignal(fb.L, out)
    for j in range(fb.L):
        y = np.convolve(fb.taps(j), x)
        out[:, j] = y[np.arange(n_blocks) * fb.M]
    return BlockedSignal(fb.L, out)


def make_desired(x: Sequence[float], M: int, d: int = 0) -> BlockedSignal:
    """Blocked delayed input: d_i(n) = x(Mn - i - d), zero before time 0."""
    x = np.asarray(x, dtype=np.complex128)
    n_blocks = len(x) // M
    out = np.zeros((n_blocks, M), dtype=np.complex128)
    for i in range(M):
        idx = np.arange(n_blocks) * M - i - d
        valid = idx >= 0
        out[valid, i] = x[idx[valid]]
    return BlockedSignal(M, out)
