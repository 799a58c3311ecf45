"""Band-limited stationary test processes and exact Shannon-node statistics.

Spectral densities use the convention
``R[k] = (1/2pi) int_{-pi}^{pi} gamma(w) exp(i k w) dw``, so unit white noise
has ``gamma = 1``.  Generated sequences are stationary on the cycle of length
``K``: white noise is shaped by ``sqrt(gamma)`` on the ``K``-point DFT grid,
which makes the Shannon packet transform see no boundary effects.
"""
from dataclasses import dataclass, field
import json
import math

import numpy as np
from scipy import integrate

from .errors import MWPTError

__all__ = [
    "SpectrumSpec",
    "Realization",
    "NOISE_KINDS",
    "realization_rng",
    "gaussian_realization",
    "linear_process",
    "spectrum_on_bins",
    "band_average",
    "shannon_autocorr",
]

QUAD_RTOL = 1e-10

_PRESET_DEFAULTS = {
    "white": {"level": 1.0},
    "raised-cosine": {"center": math.pi / 2, "width": math.pi / 2, "height": 1.0, "floor": 0.1},
    "bandpass": {"lo": math.pi / 4, "hi": math.pi / 2, "level": 1.0, "floor": 0.0},
    "poly": {"coeffs": [0.0, 0.0, 1.0]},
}


class SpectrumSpec:
    """Even, nonnegative spectral density on ``[-pi, pi]``.

    Either a named preset::

        SpectrumSpec.preset("raised-cosine", center=2.0, width=1.0)

    or a table on ``[0, pi]`` interpolated linearly::

        SpectrumSpec.tabulated(grid, values)

    Presets: ``white(level)``, ``raised-cosine(center, width, height,
    floor)``, ``bandpass(lo, hi, level, floor)`` and ``poly(coeffs)`` with
    ``gamma(w) = sum_i coeffs[i] |w|^i``.
    """

    def __init__(self, kind, name=None, params=None, grid=None, values=None):
        self.kind = kind
        self.name = name
        self.params = dict(params or {})
        if kind == "preset":
            if name not in _PRESET_DEFAULTS:
                raise MWPTError(
                    f"unknown spectrum preset {name!r}; choose from {sorted(_PRESET_DEFAULTS)}"
                )
            unknown = set(self.params) - set(_PRESET_DEFAULTS[name])
            if unknown:
                raise MWPTError(f"unknown parameters for {name}: {sorted(unknown)}")
            merged = dict(_PRESET_DEFAULTS[name])
            merged.update(self.params)
            self.params = merged
            self._check_preset()
        elif kind == "tabulated":
            self.grid = np.asarray(grid, dtype=float)
            self.values = np.asarray(values, dtype=float)
            if self.grid.ndim != 1 or self.grid.shape != self.values.shape or self.grid.size < 2:
                raise MWPTError("tabulated spectrum needs matching 1-D grid and values")
            if np.any(np.diff(self.grid) <= 0):
                raise MWPTError("tabulated grid must be strictly increasing")
            if self.grid[0] > 0 or self.grid[-1] < math.pi * (1 - 1e-12):
                raise MWPTError("tabulated grid must cover [0, pi]")
            if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
                raise MWPTError("spectrum values must be finite and nonnegative")
        else:
            raise MWPTError(f"unknown spectrum kind {kind!r}")

    @classmethod
    def preset(cls, name, **params):
        return cls("preset", name=name, params=params)

    @classmethod
    def tabulated(cls, grid, values):
        return cls("tabulated", grid=grid, values=values)

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind", "preset")
        if kind == "preset":
            return cls("preset", name=d.get("name"), params=d.get("params", {}))
        return cls("tabulated", grid=d.get("grid"), values=d.get("values"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_dict(self):
        if self.kind == "preset":
            return {"kind": "preset", "name": self.name, "params": dict(self.params)}
        return {"kind": "tabulated", "grid": self.grid.tolist(), "values": self.values.tolist()}

    @property
    def label(self):
        if self.kind == "tabulated":
            return f"tabulated[{self.grid.size}]"
        args = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))
        return f"{self.name}({args})"

    def _check_preset(self):
        p = self.params
        if self.name == "white" and p["level"] < 0:
            raise MWPTError("white level must be >= 0")
        if self.name == "raised-cosine":
            if p["width"] <= 0 or p["height"] < 0 or p["floor"] < 0:
                raise MWPTError("raised-cosine needs width > 0, height >= 0, floor >= 0")
        if self.name == "bandpass":
            if not 0 <= p["lo"] < p["hi"] <= math.pi or p["level"] < 0 or p["floor"] < 0:
                raise MWPTError("bandpass needs 0 <= lo < hi <= pi and nonnegative levels")
        if self.name == "poly":
            coeffs = np.asarray(p["coeffs"], dtype=float)
            if coeffs.ndim != 1 or coeffs.size == 0:
                raise MWPTError("poly needs a nonempty coefficient list")
            grid = np.linspace(0, math.pi, 4097)
            if np.any(np.polynomial.polynomial.polyval(grid, coeffs) < 0):
                raise MWPTError("poly spectrum is negative somewhere on [0, pi]")

    def __call__(self, omega):
        """Evaluate at ``omega`` (radians); even, folded into ``[-pi, pi]``."""
        w = np.abs((np.asarray(omega, dtype=float) + math.pi) % (2 * math.pi) - math.pi)
        if self.kind == "tabulated":
            return np.interp(w, self.grid, self.values)
        p = self.params
        if self.name == "white":
            return np.full_like(w, p["level"])
        if self.name == "raised-cosine":
            x = (w - p["center"]) / p["width"]
            bump = 0.5 * p["height"] * (1 + np.cos(math.pi * x))
            return p["floor"] + np.where(np.abs(x) < 1, bump, 0.0)
        if self.name == "bandpass":
            inside = (w >= p["lo"]) & (w <= p["hi"])
            return np.where(inside, p["level"], p["floor"])
        return np.polynomial.polynomial.polyval(w, np.asarray(p["coeffs"], dtype=float))

    def breakpoints(self):
        """Frequencies in ``[0, pi]`` where the density is not smooth."""
        if self.kind == "tabulated":
            return self.grid.tolist()
        p = self.params
        if self.name == "raised-cosine":
            return [p["center"] - p["width"], p["center"] + p["width"]]
        if self.name == "bandpass":
            return [p["lo"], p["hi"]]
        return []

    def sup(self):
        """Upper bound of the density on ``[0, pi]`` (dense-grid maximum)."""
        if getattr(self, "_sup", None) is None:
            grid = np.union1d(
                np.linspace(0, math.pi, 8193), np.clip(self.breakpoints(), 0, math.pi)
            )
            self._sup = float(np.max(self(grid)))
        return self._sup


def _fmt(v):
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_fmt(x) for x in v) + "]"
    return f"{v:.6g}" if isinstance(v, float) else str(v)


NOISE_KINDS = ("gaussian", "uniform", "two-point", "laplace")


@dataclass(frozen=True, eq=False)
class Realization:
    samples: np.ndarray = field(repr=False)
    provenance: dict


def realization_rng(seed, index):
    """Generator for realization ``index`` under master ``seed``; streams for
    different indices are independent (spawned from one SeedSequence)."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def _unit_noise(rng, kind, K):
    if kind == "gaussian":
        return rng.standard_normal(K)
    if kind == "uniform":
        return rng.uniform(-math.sqrt(3), math.sqrt(3), K)
    if kind == "two-point":
        return rng.choice(np.array([-1.0, 1.0]), K)
    if kind == "laplace":
        return rng.laplace(0.0, 1 / math.sqrt(2), K)
    raise MWPTError(f"unknown noise kind {kind!r}; choose from {NOISE_KINDS}")


def spectrum_on_bins(spec, K):
    """``gamma(2 pi b / K)`` for ``b = 0..K-1``."""
    values = spec(2 * math.pi * np.arange(K) / K)
    if np.any(values < 0):
        raise MWPTError("spectrum is negative on the DFT grid")
    return values


def _shaped(spec, noise_kind, K, seed, index, generator):
    if K < 2 or K % 2:
        raise MWPTError(f"realization length must be even and >= 2, got {K}")
    gain = np.sqrt(spectrum_on_bins(spec, K))
    w = _unit_noise(realization_rng(seed, index), noise_kind, K)
    x = np.fft.ifft(np.fft.fft(w) * gain).real
    prov = {
        "spec": spec.label,
        "generator": generator,
        "noise": noise_kind,
        "K": int(K),
        "seed": int(seed),
        "index": int(index),
    }
    return Realization(x, prov)


def gaussian_realization(spec, K, seed, index=0):
    """Circularly stationary Gaussian sequence whose spectrum on the ``K``-bin
    grid is ``spec``; its exact autocovariance is the inverse DFT of the
    sampled density."""
    return _shaped(spec, "gaussian", K, seed, index, "gaussian")


def linear_process(spec, noise_kind, K, seed, index=0):
    """i.i.d. centred unit-variance noise filtered circularly by the gain
    ``sqrt(gamma)``.  Strictly stationary (on the cycle) and non-Gaussian for
    ``uniform``, ``two-point`` and ``laplace`` noise."""
    return _shaped(spec, noise_kind, K, seed, index, "linear")


def _check_band(j, p, M):
    if j < 0 or not 0 <= p < M**j:
        raise MWPTError(f"band index {p} outside 0..{M**j - 1} at level {j}")


def _band_integral(spec, j, p, M, k):
    """``(1/pi) int_0^pi gamma((p pi + u)/M^j) cos(k u) du``."""
    scale = M**j
    lo, hi = p / scale * math.pi, (p + 1) / scale * math.pi
    pts = sorted({(b * scale - p * math.pi) for b in spec.breakpoints() if lo < b < hi})
    pts = [u for u in pts if 0 < u < math.pi]

    if spec.kind == "tabulated" and k == 0:
        # exact trapezoid of the piecewise-linear table
        u = np.concatenate([[0.0], pts, [math.pi]])
        g = spec((p * math.pi + u) / scale)
        return float(integrate.trapezoid(g, u) / math.pi)

    def f(u):
        return float(spec((p * math.pi + u) / scale)) * math.cos(k * u)

    limit = max(200, 4 * len(pts) + 50)
    val, _ = integrate.quad(
        f,
        0.0,
        math.pi,
        points=pts or None,
        epsabs=1e-12 * max(spec.sup(), 1e-300),
        epsrel=QUAD_RTOL,
        limit=limit,
    )
    return val / math.pi


def band_average(spec, j, p, M=2):
    """``(M^j / pi) int`` of ``gamma`` over ``[p pi/M^j, (p+1) pi/M^j]``:
    the exact variance of Shannon coefficients at the node with ``G(n) = p``."""
    _check_band(j, p, M)
    return _band_integral(spec, j, p, M, 0)


def shannon_autocorr(spec, j, p, k, M=2):
    """Exact autocorrelation at lag ``k`` of Shannon coefficients at the node
    with frequency position ``p``:
    ``(M^j/pi) int gamma(w) cos(M^j k w) dw`` over the band."""
    _check_band(j, p, M)
    k = abs(int(k))
    if k == 0:
        return band_average(spec, j, p, M)
    # cos(k (p pi + u)) = (-1)^{kp} cos(k u)
    sign = -1.0 if (k * p) % 2 else 1.0
    return sign * _band_integral(spec, j, p, M, k)
