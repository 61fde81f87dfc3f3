"""Batch harness: consistency, feasibility-decay, and rate studies.

Each (n, replication) cell is a pure function of a derived seed: simulate a
dataset, fit the variational posterior, optionally run an MCMC chain.  Cells
are embarrassingly parallel; results are merged in (n, rep) order regardless
of scheduling, so outputs are identical for any thread count.

Seed derivation hashes (base_seed, purpose tag, n, rep) through BLAKE2b to a
64-bit value, so enlarging the n grid or replication count never perturbs
existing cells.

Per-replication failures (optimizer non-convergence, solver infeasibility)
are counted and excluded from the aggregates, never silently dropped; the
count is carried on every output row.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .distributions import Seed
from .erlang import erlang_c_delay
from .mcmc import McmcChain, McmcConfig, run_chain
from .queue_model import SuffStats, TrueParams, simulate_dataset
from .staffing import (StaffingInfeasibleError, StaffingSpec,
                       constraint_probability_gamma, constraint_probability_samples,
                       solve_staffing)
from .vb_engine import PriorSpec, ProductGammaPosterior, default_prior, fit_vb

__all__ = [
    "ExperimentConfig",
    "QuantileRow",
    "QuantileTable",
    "FeasibilityRow",
    "FeasibilityTable",
    "RateBound",
    "RateRow",
    "RateReport",
    "desk_config",
    "paper_config",
    "derive_seed",
    "true_optimum",
    "run_consistency",
    "run_feasibility_decay",
    "run_rate_check",
    "empirical_quantile",
    "write_consistency_csv",
    "write_feasibility_csv",
    "write_rate_csv",
]

DESK_N_GRID = (125, 250, 500, 1000, 2000)
DESK_REPLICATIONS = 50
PAPER_REPLICATIONS = 250


@dataclass(frozen=True)
class ExperimentConfig:
    true_params: TrueParams
    prior: PriorSpec
    spec: StaffingSpec
    n_grid: tuple[int, ...]
    replications: int
    mcmc: McmcConfig
    base_seed: Seed
    alpha_qos: float

    def __post_init__(self) -> None:
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ValueError(f"n_grid must contain positive sample sizes, got {self.n_grid}")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError(f"n_grid must be strictly increasing, got {self.n_grid}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if self.alpha_qos != self.spec.alpha:
            raise ValueError(
                f"alpha_qos ({self.alpha_qos!r}) must equal spec.alpha "
                f"({self.spec.alpha!r}); they are one quantity")


def desk_config(base_seed: Seed = 1729, *, alpha: float = 0.5, beta: float = 0.9,
                c_max: int = 200, true_params: TrueParams | None = None,
                prior: PriorSpec | None = None, mcmc: McmcConfig | None = None,
                n_grid: tuple[int, ...] = DESK_N_GRID,
                replications: int = DESK_REPLICATIONS) -> ExperimentConfig:
    """Desk-scale defaults: 50 replications over n in {125, ..., 2000}."""
    return ExperimentConfig(
        true_params=true_params or TrueParams(16.0, 1.0),
        prior=prior or default_prior(),
        spec=StaffingSpec(alpha=alpha, beta=beta, c_max=c_max),
        n_grid=tuple(n_grid),
        replications=replications,
        mcmc=mcmc or McmcConfig(total_samples=1000, burn_in=200),
        base_seed=base_seed,
        alpha_qos=alpha,
    )


def paper_config(base_seed: Seed = 1729, **kwargs) -> ExperimentConfig:
    """Full-scale defaults: 250 replications."""
    kwargs.setdefault("replications", PAPER_REPLICATIONS)
    return desk_config(base_seed, **kwargs)


def derive_seed(base_seed: Seed, *parts) -> int:
    """Stable 64-bit seed from the base seed and any hashable tags."""
    digest = hashlib.blake2b(repr((int(base_seed),) + tuple(parts)).encode(),
                             digest_size=8)
    return int.from_bytes(digest.digest(), "big")


def true_optimum(params: TrueParams, alpha: float, c_max: int = 200) -> int:
    """Deterministic optimum: brute-force scan for the smallest stable c whose
    delay probability is acceptable at the true rates."""
    r0 = params.lambda0 / params.mu0
    for c in range(1, c_max + 1):
        if c > r0 and erlang_c_delay(r0, c) <= alpha:
            return c
    raise ValueError(f"no feasible server count <= {c_max} at true rates {params}")


# --------------------------------------------------------------------------
# Replication cells

@dataclass(frozen=True)
class _CellResult:
    n: int
    rep: int
    q: ProductGammaPosterior
    converged: bool
    chain: McmcChain | None


def _run_cell(args: tuple[ExperimentConfig, int, int, bool]) -> _CellResult:
    config, n, rep, with_mcmc = args
    dataset = simulate_dataset(config.true_params, n,
                               derive_seed(config.base_seed, "data", n, rep))
    stats = SuffStats.from_dataset(dataset)
    q, report = fit_vb(stats, config.prior)
    chain = None
    if with_mcmc:
        chain = run_chain(stats, config.prior,
                          replace(config.mcmc, seed=derive_seed(config.base_seed,
                                                                "chain", n, rep)))
    return _CellResult(n=n, rep=rep, q=q, converged=report.converged, chain=chain)


def _map_cells(config: ExperimentConfig, with_mcmc: bool,
               threads: int) -> list[_CellResult]:
    payloads = [(config, n, rep, with_mcmc)
                for n in config.n_grid for rep in range(config.replications)]
    if threads <= 1:
        return [_run_cell(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        chunk = max(1, len(payloads) // (threads * 4))
        return list(pool.map(_run_cell, payloads, chunksize=chunk))


# --------------------------------------------------------------------------
# Consistency study (server-count quantiles per n, method, beta)

@dataclass(frozen=True)
class QuantileRow:
    n: int
    method: str  # "vb" or "mcmc"
    beta: float
    q05: float
    q50: float
    q95: float
    excluded: int

    def __post_init__(self) -> None:
        if not self.q05 <= self.q50 <= self.q95:
            raise ValueError(f"quantiles out of order in {self}")


@dataclass(frozen=True)
class QuantileTable:
    rows: tuple[QuantileRow, ...]

    def median(self, n: int, method: str, beta: float) -> float:
        for row in self.rows:
            if row.n == n and row.method == method and row.beta == beta:
                return row.q50
        raise KeyError(f"no row for n={n}, method={method}, beta={beta}")


def empirical_quantile(sorted_values: np.ndarray, q: float) -> float:
    """Order-statistic (inverted-CDF) quantile; stays on the sample lattice."""
    m = len(sorted_values)
    if m == 0:
        raise ValueError("no values to take a quantile of")
    index = max(0, math.ceil(q * m) - 1)
    return float(sorted_values[min(index, m - 1)])


def _solve_cell(cell: _CellResult, spec: StaffingSpec, method: str) -> int:
    hint = math.ceil(cell.q.q_lambda.mean / cell.q.q_mu.mean)
    if method == "vb":
        prob = lambda c: constraint_probability_gamma(cell.q, c, spec.alpha)
    else:
        prob = lambda c: constraint_probability_samples(cell.chain, c, spec.alpha)
    return solve_staffing(prob, spec, start=hint).c_star


def run_consistency(config: ExperimentConfig, betas: tuple[float, ...] | None = None,
                    threads: int = 1) -> QuantileTable:
    """Quantiles of the chosen server count per (n, method, beta).

    ``betas`` defaults to the single confidence level in ``config.spec``;
    pass several to sweep (each solved on the same fitted cells).
    """
    betas = tuple(betas) if betas else (config.spec.beta,)
    cells = _map_cells(config, with_mcmc=True, threads=threads)
    rows = []
    for n in config.n_grid:
        group = [c for c in cells if c.n == n]
        good = [c for c in group if c.converged]
        for method in ("vb", "mcmc"):
            for beta in betas:
                spec = replace(config.spec, beta=beta)
                excluded = len(group) - len(good)
                values = []
                for cell in good:
                    try:
                        values.append(_solve_cell(cell, spec, method))
                    except StaffingInfeasibleError:
                        excluded += 1
                values = np.sort(values)
                rows.append(QuantileRow(
                    n=n, method=method, beta=beta,
                    q05=empirical_quantile(values, 0.05),
                    q50=empirical_quantile(values, 0.50),
                    q95=empirical_quantile(values, 0.95),
                    excluded=excluded))
    return QuantileTable(rows=tuple(rows))


# --------------------------------------------------------------------------
# Feasibility decay (how often an infeasible probe sneaks into the VB set)

@dataclass(frozen=True)
class FeasibilityRow:
    n: int
    frequency: float
    excluded: int


@dataclass(frozen=True)
class FeasibilityTable:
    c_probe: int
    rows: tuple[FeasibilityRow, ...]


def run_feasibility_decay(config: ExperimentConfig, c_probe: int,
                          threads: int = 1) -> FeasibilityTable:
    """Fraction of replications whose VB posterior declares ``c_probe``
    feasible at confidence ``config.spec.beta``, per n.

    ``c_probe`` must be infeasible at the true rates (unstable, or stable with
    delay probability above alpha) -- otherwise the decay question is vacuous
    and a ValueError is raised.
    """
    if c_probe < 1:
        raise ValueError(f"c_probe must be >= 1, got {c_probe}")
    params = config.true_params
    r0 = params.lambda0 / params.mu0
    alpha = config.spec.alpha
    if c_probe > r0 and erlang_c_delay(r0, c_probe) <= alpha:
        raise ValueError(
            f"c_probe={c_probe} is feasible at the true rates "
            f"(delay {erlang_c_delay(r0, c_probe):.4f} <= alpha {alpha}); "
            "the decay experiment needs an infeasible probe")
    cells = _map_cells(config, with_mcmc=False, threads=threads)
    rows = []
    for n in config.n_grid:
        group = [c for c in cells if c.n == n]
        good = [c for c in group if c.converged]
        included = [
            constraint_probability_gamma(c.q, c_probe, alpha) >= config.spec.beta
            for c in good]
        rows.append(FeasibilityRow(n=n, frequency=float(np.mean(included)),
                                   excluded=len(group) - len(good)))
    return FeasibilityTable(c_probe=c_probe, rows=tuple(rows))


# --------------------------------------------------------------------------
# Rate study (mis-staffing frequency against the log(n)/n envelope)

@dataclass(frozen=True)
class RateBound:
    """The theoretical envelope sequence epsilon_n^2 = log(n)/n."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"rate bound needs n >= 2, got {self.n}")

    @property
    def epsilon_sq(self) -> float:
        return math.log(self.n) / self.n


@dataclass(frozen=True)
class RateRow:
    n: int
    frequency: float
    epsilon_sq: float
    excluded: int


@dataclass(frozen=True)
class RateReport:
    rows: tuple[RateRow, ...]
    m_hat: float  # max_n frequency / epsilon_sq


def run_rate_check(config: ExperimentConfig, threads: int = 1) -> RateReport:
    """Frequency of missing the deterministic optimum by >= 1 server, per n,
    with the epsilon_n^2 envelope and the fitted constant M-hat."""
    c_true = true_optimum(config.true_params, config.spec.alpha, config.spec.c_max)
    cells = _map_cells(config, with_mcmc=False, threads=threads)
    rows = []
    for n in config.n_grid:
        group = [c for c in cells if c.n == n]
        good = [c for c in group if c.converged]
        excluded = len(group) - len(good)
        misses = []
        for cell in good:
            try:
                c_star = _solve_cell(cell, config.spec, "vb")
                misses.append(abs(c_star - c_true) >= 1)
            except StaffingInfeasibleError:
                excluded += 1
        rows.append(RateRow(n=n, frequency=float(np.mean(misses)),
                            epsilon_sq=RateBound(n).epsilon_sq, excluded=excluded))
    m_hat = max(row.frequency / row.epsilon_sq for row in rows)
    return RateReport(rows=tuple(rows), m_hat=m_hat)


# --------------------------------------------------------------------------
# CSV emission (deterministic byte-for-byte: shortest-roundtrip floats)

def _write_csv(path, header: tuple[str, ...], rows) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else str(v) for v in row])


def write_consistency_csv(table: QuantileTable, path) -> None:
    _write_csv(path, ("n", "method", "beta", "q05", "q50", "q95", "excluded"),
               [(r.n, r.method, r.beta, r.q05, r.q50, r.q95, r.excluded)
                for r in table.rows])


def write_feasibility_csv(table: FeasibilityTable, path) -> None:
    _write_csv(path, ("n", "c_probe", "frequency", "excluded"),
               [(r.n, table.c_probe, r.frequency, r.excluded) for r in table.rows])


def write_rate_csv(report: RateReport, path) -> None:
    _write_csv(path, ("n", "frequency", "epsilon_sq", "excluded"),
               [(r.n, r.frequency, r.epsilon_sq, r.excluded) for r in report.rows])
