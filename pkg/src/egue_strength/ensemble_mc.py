"""Monte Carlo sampling of EGUE(k) with a random k0-body transition operator.

Every realization draws a k-particle GUE matrix V and a complex vector of
k0-particle amplitudes, embeds both into explicit Fock spaces and records the
normalized traces tr(O^dagger H_f^Q O H_i^P) / C(N, m) for all P + Q <= 4.

Sample ``i`` uses its own Philox stream keyed by (seed, i).  Results depend
only on (seed, n_samples), never on how samples are split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .combinatorics import binomial
from .errors import CostGuardError, DomainError
from .exact_moments import MOMENT_ORDERS, REMOVAL, BivariateMoments, ModelParams, check_mode, cumulants, h2_moment
from .fock_space import build_basis, hamiltonian_table, transition_table

__all__ = [
    "ALL_ORDERS",
    "N_BATCHES",
    "EnsembleConfig",
    "McMomentEstimates",
    "StrengthHistogram",
    "sample_stream",
    "sample_gue",
    "sample_amplitudes",
    "EnsembleSystem",
    "mc_moments",
    "strength_histogram",
]

# Every (P, Q) with P + Q <= 4, odd orders included.
ALL_ORDERS = tuple((P, n - P) for n in range(5) for P in range(n, -1, -1))
N_BATCHES = 20
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class EnsembleConfig:
    params: ModelParams
    n_samples: int
    seed: int
    mode: str = REMOVAL
    dim_cap: int = 5000
    workers: int = 1
    order: tuple | None = None

    def __post_init__(self):
        check_mode(self.params, self.mode)
        if not isinstance(self.n_samples, int) or self.n_samples < 2:
            raise DomainError(f"n_samples must be an int >= 2, got {self.n_samples!r}")
        if not isinstance(self.seed, int) or not (0 <= self.seed <= _MASK64):
            raise DomainError(f"seed must be a 64-bit unsigned int, got {self.seed!r}")
        if self.workers < 1:
            raise DomainError(f"workers must be >= 1, got {self.workers}")
        p = self.params
        for m in (p.m, p.final_m(self.mode)):
            if binomial(p.N, m) > self.dim_cap:
                raise CostGuardError(f"C({p.N},{m}) = {binomial(p.N, m)} exceeds dimension cap {self.dim_cap}")
        if binomial(p.N, p.k) > self.dim_cap:
            raise CostGuardError(f"C({p.N},{p.k}) exceeds dimension cap {self.dim_cap}")


def sample_stream(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based generator for sample ``index``."""
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, index & _MASK64]))


def sample_gue(dim: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Hermitian matrix with E[V_ab V_cd] = variance * delta_ad delta_bc."""
    if dim < 1:
        raise DomainError(f"dim must be >= 1, got {dim}")
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    # (g + g^dagger)/2: off-diagonal re/im parts get variance 1/2, diagonal 1
    return math.sqrt(variance) * 0.5 * (g + g.conj().T)


def sample_amplitudes(dim: int, variance: float, rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian vector with E[V_a V_b^*] = variance * delta_ab."""
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return math.sqrt(variance / 2) * z


class EnsembleSystem:
    """Fock-space embedding tables for one configuration, built once."""

    def __init__(self, config: EnsembleConfig):
        p = config.params
        self.config = config
        mf = p.final_m(config.mode)
        bk = build_basis(p.N, p.k)
        bk0 = build_basis(p.N, p.k0)
        bi = build_basis(p.N, p.m)
        bf = build_basis(p.N, mf)
        self.dim_k = len(bk)
        self.dim_k0 = len(bk0)
        self.dim_i = len(bi)
        self.H_i = hamiltonian_table(bk, bi, config.order)
        self.H_f = hamiltonian_table(bk, bf, config.order)
        self.O = transition_table(bk0, bi, bf, config.order)

    def realization(self, index: int):
        """(H_i, H_f, O, V_alpha) for sample ``index``."""
        p = self.config.params
        rng = sample_stream(self.config.seed, index)
        V = sample_gue(self.dim_k, p.vh2, rng)
        Va = sample_amplitudes(self.dim_k0, p.vo2, rng)
        return self.H_i.dense(V), self.H_f.dense(V), self.O.dense(Va), Va

    def trace_moments(self, Hi, Hf, O) -> np.ndarray:
        """tr(O^dagger Hf^Q O Hi^P) / d_i for every (P, Q) in ALL_ORDERS."""
        pow_i = [np.eye(len(Hi))]
        pow_f = [np.eye(len(Hf))]
        for _ in range(4):
            pow_i.append(pow_i[-1] @ Hi)
            pow_f.append(pow_f[-1] @ Hf)
        Od = O.conj().T
        sandwiched = [Od @ pow_f[q] @ O for q in range(5)]
        out = np.empty(len(ALL_ORDERS))
        for n, (P, Q) in enumerate(ALL_ORDERS):
            # tr(A B) = sum(A^T * B)
            out[n] = np.sum(sandwiched[Q].T * pow_i[P]).real / self.dim_i
        return out

    def sample_moments(self, index: int) -> np.ndarray:
        Hi, Hf, O, _ = self.realization(index)
        return self.trace_moments(Hi, Hf, O)


def _run_samples(fn, n: int, workers: int) -> np.ndarray:
    """Stack fn(i) for i < n; rows land at their own index, so order is fixed."""
    if workers == 1:
        return np.array([fn(i) for i in range(n)])
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(fn, range(n))))


def _batch_stats(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Grand mean and batch-means standard error along axis 0."""
    nb = min(N_BATCHES, len(rows))
    batches = np.array([b.mean(axis=0) for b in np.array_split(rows, nb)])
    return rows.mean(axis=0), batches.std(axis=0, ddof=1) / math.sqrt(nb)


@dataclass
class McMomentEstimates:
    """Sample means and standard errors of M_PQ in physical units."""

    mean: dict
    se: dict
    n_samples: int
    params: ModelParams
    mode: str
    samples: np.ndarray = field(default=None, repr=False)

    def as_moments(self) -> BivariateMoments:
        """Even orders as unit-scale coefficients, comparable with the closed forms."""
        p = self.params
        unit = {pq: p.vo2 * p.vh2 ** (sum(pq) / 2) for pq in MOMENT_ORDERS}
        vals = {pq: self.mean[pq] / unit[pq] for pq in MOMENT_ORDERS}
        return BivariateMoments(
            **{f"m{P}{Q}": vals[(P, Q)] for P, Q in MOMENT_ORDERS},
            mode=self.mode,
            provenance="mc",
            vh2=p.vh2,
            vo2=p.vo2,
            se={pq: self.se[pq] / unit[pq] for pq in MOMENT_ORDERS},
        )


def mc_moments(config: EnsembleConfig, *, keep_samples: bool = False) -> McMomentEstimates:
    """Trace-based Monte Carlo estimate of every M_PQ with P + Q <= 4."""
    system = EnsembleSystem(config)
    rows = _run_samples(system.sample_moments, config.n_samples, config.workers)
    mean, se = _batch_stats(rows)
    return McMomentEstimates(
        mean={pq: float(mean[n]) for n, pq in enumerate(ALL_ORDERS)},
        se={pq: float(se[n]) for n, pq in enumerate(ALL_ORDERS)},
        n_samples=config.n_samples,
        params=config.params,
        mode=config.mode,
        samples=rows if keep_samples else None,
    )


# ---------------------------------------------------------------------------
# Strength density histogram


@dataclass
class StrengthHistogram:
    """Binned |<E_f|O|E_i>|^2 over standardized (E_i, E_f), summed over samples.

    ``overflow`` is the weight that fell outside the grid, so
    ``counts.sum() + overflow == total_weight``.  ``reference`` is the
    bivariate Gaussian with correlation ``xi_exact`` scaled to the same
    total weight and evaluated at bin centres.
    """

    edges_i: np.ndarray
    edges_f: np.ndarray
    counts: np.ndarray
    overflow: float
    total_weight: float
    n_samples: int
    moments: dict
    moments_se: dict
    trace_moments: dict
    xi: float
    xi_se: float
    xi_exact: float | None
    reference: np.ndarray | None
    marginal_i: dict
    marginal_f: dict


def _gaussian_reference(edges_i, edges_f, xi: float, total: float) -> np.ndarray:
    ci = 0.5 * (edges_i[1:] + edges_i[:-1])
    cf = 0.5 * (edges_f[1:] + edges_f[:-1])
    x, y = np.meshgrid(ci, cf, indexing="ij")
    det = 1.0 - xi * xi
    dens = np.exp(-(x * x - 2 * xi * x * y + y * y) / (2 * det)) / (2 * math.pi * math.sqrt(det))
    area = np.outer(np.diff(edges_i), np.diff(edges_f))
    return total * dens * area


def strength_histogram(config: EnsembleConfig, bins: int = 40, span: float = 5.0) -> StrengthHistogram:
    """Eigen-decompose each realization and bin the transition strengths.

    Energies are standardized with the exact ensemble widths of H in the
    initial and final spaces (centroids are zero).  Per-sample moments are
    formed from the eigen data and, independently, from traces.
    """
    p = config.params
    system = EnsembleSystem(config)
    mf = p.final_m(config.mode)
    sig_i = math.sqrt(p.vh2 * float(h2_moment(p.N, p.m, p.k)))
    sig_f = math.sqrt(p.vh2 * float(h2_moment(p.N, mf, p.k)))
    if sig_i == 0 or sig_f == 0:
        raise DomainError("H has zero width in the initial or final space")
    exact = cumulants(p, config.mode) if p.k >= 1 else None

    edges = np.linspace(-span, span, bins + 1)
    counts = np.zeros((bins, bins))
    eig_rows, trace_rows = [], []
    total = 0.0
    n_mom = len(ALL_ORDERS)
    for i in range(config.n_samples):
        Hi, Hf, O, _ = system.realization(i)
        try:
            Ei, Ui = np.linalg.eigh(Hi)
            Ef, Uf = np.linalg.eigh(Hf)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"eigensolver failed on sample {i}") from exc
        S = np.abs(Uf.conj().T @ O @ Ui) ** 2  # rows final, columns initial
        total += S.sum()
        row = np.empty(n_mom)
        for n, (P, Q) in enumerate(ALL_ORDERS):
            row[n] = (Ef**Q) @ S @ (Ei**P) / system.dim_i
        eig_rows.append(row)
        trace_rows.append(system.trace_moments(Hi, Hf, O))
        xi_grid = np.broadcast_to(Ei / sig_i, S.shape).ravel()
        xf_grid = np.broadcast_to((Ef / sig_f)[:, None], S.shape).ravel()
        h, _, _ = np.histogram2d(xi_grid, xf_grid, bins=[edges, edges], weights=S.ravel())
        counts += h

    eig_rows = np.array(eig_rows)
    trace_rows = np.array(trace_rows)
    mean, se = _batch_stats(eig_rows)
    tmean = trace_rows.mean(axis=0)
    idx = {pq: n for n, pq in enumerate(ALL_ORDERS)}

    def corr(rows):
        m = rows.mean(axis=0)
        return m[idx[(1, 1)]] / math.sqrt(m[idx[(2, 0)]] * m[idx[(0, 2)]])

    nb = min(N_BATCHES, config.n_samples)
    xi_batches = np.array([corr(b) for b in np.array_split(eig_rows, nb)])
    xi_exact = exact.xi if exact is not None else None
    ref = _gaussian_reference(edges, edges, xi_exact, total) if xi_exact is not None and abs(xi_exact) < 1 else None

    def marginal(P_or_Q):
        out = {}
        for r in (0, 1, 2, 3, 4):
            pq = (r, 0) if P_or_Q == "i" else (0, r)
            out[r] = float(mean[idx[pq]])
        return out

    return StrengthHistogram(
        edges_i=edges,
        edges_f=edges.copy(),
        counts=counts,
        overflow=float(total - counts.sum()),
        total_weight=float(total),
        n_samples=config.n_samples,
        moments={pq: float(mean[n]) for n, pq in enumerate(ALL_ORDERS)},
        moments_se={pq: float(se[n]) for n, pq in enumerate(ALL_ORDERS)},
        trace_moments={pq: float(tmean[n]) for n, pq in enumerate(ALL_ORDERS)},
        xi=float(corr(eig_rows)),
        xi_se=float(xi_batches.std(ddof=1) / math.sqrt(nb)),
        xi_exact=xi_exact,
        reference=ref,
        marginal_i=marginal("i"),
        marginal_f=marginal("f"),
    )
