"""Empirical statistics of packet coefficient sequences.

Estimators treat every sequence as one period of a circularly stationary
process (matching :mod:`mwpt.synth`).  Monte Carlo statistics pool across
realizations by averaging per-realization estimators; the reduction order is
fixed by realization index so results do not depend on the worker count.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import stats

from .errors import MWPTError
from .filter_bank import builtin_bank, shannon_distance
from .path_algebra import NodeIndex, band, gray_inverse_table, gray_permute, shift_parameter
from .synth import band_average, gaussian_realization, linear_process, shannon_autocorr
from .wpt import decompose, decompose_shannon, node_sequence

__all__ = [
    "AutocorrEstimate",
    "CumulantEstimate",
    "WhitenessScore",
    "GaussianityScore",
    "NodeReport",
    "SpectrumEstimate",
    "PooledAutocorr",
    "autocorr",
    "pooled_autocorr",
    "cumulants",
    "lagged_cumulants",
    "whiteness_score",
    "gaussianity_score",
    "node_report",
    "estimate_spectrum",
    "map_realizations",
    "cumulant_decay_profile",
    "filter_convergence_profile",
]

WHITENESS_Z = 4.0
GAUSSIANITY_Z = 4.0
MIN_CUMULANT_LENGTH = 1024


@dataclass(frozen=True)
class AutocorrEstimate:
    values: np.ndarray
    count: int
    stderr: np.ndarray

    @property
    def L(self):
        return self.values.size - 1

    @property
    def normalized(self):
        return self.values / self.values[0]


def autocorr(c, L):
    """Biased circular autocorrelation ``R[k] = (1/K) sum_i c[i] c[i+k]`` for
    ``k = 0..L`` (no centring).

    Standard errors assume a white sequence: ``R[0] sqrt(2/K)`` at lag 0 and
    ``R[0] / sqrt(K)`` elsewhere.
    """
    c = np.asarray(c, dtype=float)
    K = c.size
    if L < 0 or K < 8 * L or K == 0:
        raise MWPTError(f"lag window L={L} too large for a sequence of length {K} (need K >= 8L)")
    F = np.fft.rfft(c)
    r = np.fft.irfft(F * np.conj(F), n=K)[: L + 1] / K
    se = np.full(L + 1, r[0] / math.sqrt(K))
    se[0] = r[0] * math.sqrt(2 / K)
    return AutocorrEstimate(r, K, se)


@dataclass(frozen=True)
class PooledAutocorr:
    """Per-realization autocorrelations (rows) with their mean and the
    standard error of the mean from the spread across realizations."""

    per_realization: np.ndarray
    count: int

    @property
    def mean(self):
        return self.per_realization.mean(axis=0)

    @property
    def stderr(self):
        R = self.per_realization.shape[0]
        if R < 2:
            return np.full(self.per_realization.shape[1], np.nan)
        return self.per_realization.std(axis=0, ddof=1) / math.sqrt(R)

    @property
    def normalized(self):
        m = self.mean
        return m / m[0]


def pooled_autocorr(sequences, L):
    rows = [autocorr(c, L).values for c in sequences]
    if not rows:
        raise MWPTError("no sequences to pool")
    return PooledAutocorr(np.array(rows), len(sequences[0]))


@dataclass(frozen=True)
class CumulantEstimate:
    k2: float
    k3: float
    k4: float
    count: int

    @property
    def skewness(self):
        return self.k3 / self.k2**1.5

    @property
    def excess_kurtosis(self):
        return self.k4 / self.k2**2


def _centred(c, what):
    c = np.asarray(c, dtype=float)
    if c.size < MIN_CUMULANT_LENGTH:
        raise MWPTError(f"{what} needs at least {MIN_CUMULANT_LENGTH} samples, got {c.size}")
    x = c - c.mean()
    if not np.any(x):
        raise MWPTError(f"{what}: degenerate (zero-variance) input")
    return x


def cumulants(c):
    """Marginal cumulants of orders 2..4 from central moments
    (``k4 = m4 - 3 m2^2``); biased by O(1/K)."""
    x = _centred(c, "cumulants")
    m2 = np.mean(x**2)
    m3 = np.mean(x**3)
    m4 = np.mean(x**4)
    return CumulantEstimate(float(m2), float(m3), float(m4 - 3 * m2**2), x.size)


def lagged_cumulants(c, max_lag=2):
    """Joint circular cumulants of orders 3 and 4 at small lags.

    Returns ``{(k1, k2): c3}`` for ``0 <= k1 <= k2 <= max_lag`` and
    ``{(k1, k2, k3): c4}`` for ``0 <= k1 <= k2 <= k3 <= max_lag``.  The
    estimator variance grows quickly with order, so these are informational.
    """
    x = _centred(c, "lagged_cumulants")

    def sh(k):
        return np.roll(x, -k)

    r = [np.mean(x * sh(k)) for k in range(max_lag + 1)]
    c3, c4 = {}, {}
    for k1 in range(max_lag + 1):
        for k2 in range(k1, max_lag + 1):
            c3[(k1, k2)] = float(np.mean(x * sh(k1) * sh(k2)))
            for k3 in range(k2, max_lag + 1):
                m = np.mean(x * sh(k1) * sh(k2) * sh(k3))
                c4[(k1, k2, k3)] = float(
                    m - r[k1] * r[k3 - k2] - r[k2] * r[k3 - k1] - r[k3] * r[k2 - k1]
                )
    return {"c3": c3, "c4": c4}


@dataclass(frozen=True)
class WhitenessScore:
    max_normalized_lag: float
    portmanteau: float
    threshold: float
    passed: bool


def whiteness_score(a, z=WHITENESS_Z):
    """Largest ``|R[k]/R[0]|`` over lags ``1..L`` against ``z / sqrt(K)``,
    plus the Box-Pierce statistic ``K sum_k (R[k]/R[0])^2``."""
    rho = a.values[1:] / a.values[0]
    if rho.size == 0:
        raise MWPTError("whiteness needs at least one nonzero lag")
    mx = float(np.max(np.abs(rho)))
    q = float(a.count * np.sum(rho**2))
    thr = z / math.sqrt(a.count)
    return WhitenessScore(mx, q, thr, mx <= thr)


@dataclass(frozen=True)
class GaussianityScore:
    skew_z: float
    kurt_z: float
    ks_distance: float
    passed: bool


def gaussianity_score(c, z=GAUSSIANITY_Z):
    """Skewness and excess-kurtosis z-scores under a Gaussian null
    (variances ``6/K`` and ``24/K``); passes when both ``|z| <= z``.

    The Kolmogorov distance to the fitted normal is reported but not
    thresholded.
    """
    est = cumulants(c)
    K = est.count
    sz = est.skewness / math.sqrt(6 / K)
    kz = est.excess_kurtosis / math.sqrt(24 / K)
    x = np.asarray(c, dtype=float)
    ks = stats.kstest((x - x.mean()) / x.std(), "norm").statistic
    return GaussianityScore(float(sz), float(kz), float(ks), abs(sz) <= z and abs(kz) <= z)


@dataclass(frozen=True, eq=False)
class NodeReport:
    j: int
    n: int
    p: int
    band: object
    variance: float
    autocorr: AutocorrEstimate = field(repr=False)
    cumulants: CumulantEstimate = None
    whiteness: WhitenessScore = None
    gaussianity: GaussianityScore = None
    theory: dict = None

    CSV_FIELDS = (
        "j", "n", "G(n)", "band_lo", "band_hi", "variance", "theoretical_variance",
        "max_norm_lag", "skew_z", "kurt_z", "white_pass", "gauss_pass",
    )

    def to_row(self):
        th = (self.theory or {}).get("band_average")
        g = self.gaussianity
        return {
            "j": self.j,
            "n": self.n,
            "G(n)": self.p,
            "band_lo": self.band.lo,
            "band_hi": self.band.hi,
            "variance": self.variance,
            "theoretical_variance": "" if th is None else th,
            "max_norm_lag": self.whiteness.max_normalized_lag,
            "skew_z": "" if g is None else g.skew_z,
            "kurt_z": "" if g is None else g.kurt_z,
            "white_pass": _flag(self.whiteness.passed),
            "gauss_pass": "" if g is None else _flag(g.passed),
        }

    def to_dict(self):
        d = self.to_row()
        d["autocorr"] = self.autocorr.values.tolist()
        if self.cumulants is not None:
            d["cumulants"] = {
                "k2": self.cumulants.k2,
                "k3": self.cumulants.k3,
                "k4": self.cumulants.k4,
                "skewness": self.cumulants.skewness,
                "excess_kurtosis": self.cumulants.excess_kurtosis,
            }
        if self.gaussianity is not None:
            d["ks_distance"] = self.gaussianity.ks_distance
        if self.theory:
            d["theory"] = self.theory
        return d


def _flag(ok):
    return "pass" if ok else "fail"


def node_report(tree, j, n, spec=None, L=32):
    """All per-node statistics; with ``spec`` the exact Shannon values
    (band average and lagged autocorrelation) are attached for comparison."""
    c = np.asarray(node_sequence(tree, j, n), dtype=float)
    if c.ndim != 1:
        raise MWPTError("node_report expects a tree of a single realization")
    L = min(L, c.size // 8)
    a = autocorr(c, L)
    p = gray_permute(NodeIndex.from_int(tree.M, j, n)).n
    cum = gauss = None
    if c.size >= MIN_CUMULANT_LENGTH and np.any(c - c.mean()):
        cum = cumulants(c)
        gauss = gaussianity_score(c)
    theory = None
    if spec is not None:
        theory = {
            "band_average": band_average(spec, j, p, tree.M),
            "autocorr": [shannon_autocorr(spec, j, p, k, tree.M) for k in range(L + 1)],
        }
    return NodeReport(
        j, n, p, band(j, p, tree.M), float(a.values[0]), a, cum,
        whiteness_score(a) if L > 0 else None, gauss, theory,
    )


@dataclass(frozen=True, eq=False)
class SpectrumEstimate:
    """Piecewise-constant spectral estimate on the bands of level ``j``,
    indexed by frequency position ``p``."""

    M: int
    j: int
    values: np.ndarray
    stderr: np.ndarray
    count: int

    def band(self, p):
        return band(self.j, p, self.M)

    def __call__(self, omega):
        w = np.abs((np.asarray(omega, dtype=float) + np.pi) % (2 * np.pi) - np.pi)
        p = np.minimum((w / np.pi * self.M**self.j).astype(int), self.M**self.j - 1)
        return self.values[p]

    def total_power(self):
        """``sum_p value_p * pi / M^j``; equals ``pi`` times the mean square of
        the input by Parseval."""
        return float(np.sum(self.values) * np.pi / self.M**self.j)


def estimate_spectrum(trees, j):
    """Band values from node variances, mapped through ``G``.

    The value on band ``p`` is the mean square of node ``(j, G^{-1}(p))``,
    averaged over the trees.  Without the ``G`` reordering the estimate
    would be scrambled across bands.
    """
    if not isinstance(trees, (list, tuple)):
        trees = [trees]
    if not trees:
        raise MWPTError("no trees supplied")
    M = trees[0].M
    size = M**j
    per_tree = np.empty((len(trees), size))
    inv = gray_inverse_table(M, j)
    for t, tree in enumerate(trees):
        if tree.M != M:
            raise MWPTError("all trees must share the same M")
        lvl = tree.level(j)
        if len(lvl) != size:
            raise MWPTError(f"level {j} is not fully populated ({len(lvl)} of {size} nodes)")
        for p in range(size):
            c = np.asarray(lvl[int(inv[p])], dtype=float)
            per_tree[t, p] = np.mean(c**2)
    values = per_tree.mean(axis=0)
    if len(trees) > 1:
        se = per_tree.std(axis=0, ddof=1) / math.sqrt(len(trees))
    else:
        N = trees[0].K // size
        se = values * math.sqrt(2 / N)
    return SpectrumEstimate(M, j, values, se, len(trees))


def map_realizations(fn, R, threads=1):
    """``[fn(i) for i in range(R)]``, optionally on a thread pool; results
    always come back in index order."""
    if threads is None or threads <= 1 or R <= 1:
        return [fn(i) for i in range(R)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(R)))


@dataclass(frozen=True, eq=False)
class CumulantProfile:
    """Per-level standardized cumulants along a path; arrays are
    ``(R, len(levels))``."""

    levels: list
    nodes: list
    positions: list
    skewness: np.ndarray = field(repr=False)
    excess_kurtosis: np.ndarray = field(repr=False)
    skew_z: np.ndarray = field(repr=False)
    kurt_z: np.ndarray = field(repr=False)

    def rows(self):
        out = []
        for i, j in enumerate(self.levels):
            sk, ku = self.skewness[:, i], self.excess_kurtosis[:, i]
            ok = (np.abs(self.skew_z[:, i]) <= GAUSSIANITY_Z) & (
                np.abs(self.kurt_z[:, i]) <= GAUSSIANITY_Z
            )
            out.append({
                "j": j,
                "n": self.nodes[i],
                "G(n)": self.positions[i],
                "pooled_skewness": float(sk.mean()),
                "pooled_excess_kurtosis": float(ku.mean()),
                "median_abs_skewness": float(np.median(np.abs(sk))),
                "median_abs_excess_kurtosis": float(np.median(np.abs(ku))),
                "gaussian_pass_fraction": float(ok.mean()),
            })
        return out


def cumulant_decay_profile(path, spec, noise, j_range, R, K, seed, threads=1):
    """Skewness and excess kurtosis of Shannon coefficients at
    ``(j, n(j))`` for each ``j`` in ``j_range``, over ``R`` realizations of
    the linear process driven by ``noise`` with spectrum ``spec``."""
    levels = list(j_range)
    J = max(levels)
    M = path.M
    nodes = [shift_parameter(path, j) for j in levels]

    def one(i):
        x = linear_process(spec, noise, K, seed, i).samples
        tree = decompose_shannon(x, M, J, "single-path", path)
        row = []
        for node in nodes:
            c = node_sequence(tree, node.j, node.n)
            est = cumulants(c)
            g = gaussianity_score(c)
            row.append((est.skewness, est.excess_kurtosis, g.skew_z, g.kurt_z))
        return row

    data = np.array(map_realizations(one, R, threads))  # (R, levels, 4)
    return CumulantProfile(
        levels,
        [nd.n for nd in nodes],
        [gray_permute(nd).n for nd in nodes],
        data[:, :, 0], data[:, :, 1], data[:, :, 2], data[:, :, 3],
    )


def filter_convergence_profile(spec, path, j, r_list, R, K, seed, L=8, threads=1,
                               include_shannon=True):
    """Distance between Daubechies-``r`` node autocorrelations and the exact
    Shannon values, for each order in ``r_list``.

    Every order sees the same ``R`` Gaussian realizations.  Each row holds
    ``sup_{0<=k<=L} |mean R_r[k] - R_S[k]|`` plus the frequency-domain
    distance of the bank to the ideal filters.  A Shannon row (Monte Carlo
    against its own exact values) shows the sampling noise floor.
    """
    if path.M != 2:
        raise MWPTError("Daubechies banks are two-band; the path must be binary")
    node = shift_parameter(path, j)
    p = gray_permute(node).n
    exact = np.array([shannon_autocorr(spec, j, p, k, 2) for k in range(L + 1)])
    banks = [(r, builtin_bank(f"db{r}")) for r in r_list]
    if include_shannon:
        banks.append(("shannon", builtin_bank("shannon:2")))

    def one(i):
        x = gaussian_realization(spec, K, seed, i).samples
        out = []
        for _, bank in banks:
            tree = decompose(x, bank, j, "single-path", path)
            out.append(autocorr(node_sequence(tree, j, node.n), L).values)
        return out

    data = np.array(map_realizations(one, R, threads))  # (R, banks, L+1)
    rows = []
    for b, (r, bank) in enumerate(banks):
        mean = data[:, b, :].mean(axis=0)
        se = data[:, b, :].std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.full(L + 1, np.nan)
        row = {
            "r": r,
            "j": j,
            "n": node.n,
            "G(n)": p,
            "sup_distance": float(np.max(np.abs(mean - exact))),
            "max_stderr": float(np.max(se)),
            "autocorr": mean.tolist(),
        }
        if r != "shannon":
            d = shannon_distance(bank)
            row["response_linf"] = d["linf"].tolist()
            row["response_l2"] = d["l2"].tolist()
        rows.append(row)
    return {"exact": exact.tolist(), "rows": rows}
