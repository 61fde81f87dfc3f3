"""Command-line interface.

Subcommands: ``consistency``, ``feasibility``, ``rate``, ``region``, ``fit``.
Settings resolve in three layers -- profile defaults, then a config file
(flat-key TOML, or a previously written ``manifest.json``), then command-line
flags.  Every run writes its CSV outputs plus a ``manifest.json`` recording
the fully resolved configuration, package/library versions, outputs, and wall
timings; re-running a subcommand with ``--config <manifest.json>`` reproduces
the CSVs byte for byte (timings live only in the manifest).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
import scipy

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__, experiments, gaussian_demo
from .distributions import BivariateNormal, InvGammaLaw
from .mcmc import McmcConfig, run_chain, write_chain_csv
from .queue_model import SuffStats, TrueParams, simulate_dataset
from .staffing import StaffingSpec
from .vb_engine import PriorSpec, default_prior, fit_vb

__all__ = ["cli_main", "main"]

_STAFFING_DEFAULTS = {
    "lambda0": 16.0,
    "mu0": 1.0,
    "alpha": 0.5,
    "beta": 0.9,
    "betas": [0.7, 0.8, 0.9],
    "c_max": 200,
    "n_grid": list(experiments.DESK_N_GRID),
    "replications": experiments.DESK_REPLICATIONS,
    "mcmc_samples": 1000,
    "mcmc_burn_in": 200,
    "proposal_std": 0.05,
    "base_seed": 1729,
    "prior_shape_lambda": 1.0,
    "prior_scale_lambda": 1.0,
    "prior_shape_mu": 1.0,
    "prior_scale_mu": 1.0,
    "threads": 1,
}

_REGION_DEFAULTS = {
    "sigma": -0.1,
    "beta": 0.9,
    "threshold": 1.0,
    "samples": 8000,
    "sampler": "direct",
    "burn_in": 3000,
    "proposal_std": 1.0,
    "method": "mc",
    "bounds": [-10.0, 10.0],
    "resolution": 201,
    "seed": 0,
}


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ValueError(f"config file not found: {path}")
    if p.suffix == ".json":
        doc = json.loads(p.read_text(encoding="utf-8"))
        if isinstance(doc, dict) and "config" in doc and isinstance(doc["config"], dict):
            return doc["config"]  # a manifest written by a previous run
        if isinstance(doc, dict):
            return doc
        raise ValueError(f"config file {path} does not contain an object")
    with open(p, "rb") as fh:
        return tomllib.load(fh)


def _resolve(defaults: dict, ns: argparse.Namespace,
             flag_keys: dict[str, str]) -> dict:
    """defaults < config file < explicit CLI flags."""
    cfg = dict(defaults)
    if getattr(ns, "config", None):
        file_cfg = _load_config_file(ns.config)
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)} "
                             f"(known: {sorted(defaults)})")
        cfg.update(file_cfg)
    for flag, key in flag_keys.items():
        value = getattr(ns, flag, None)
        if value is not None:
            cfg[key] = value
    if "profile" in vars(ns) and ns.profile == "paper" and \
            "replications" not in _explicit_sources(ns, flag_keys, cfg):
        cfg["replications"] = experiments.PAPER_REPLICATIONS
    return cfg


def _explicit_sources(ns: argparse.Namespace, flag_keys: dict[str, str],
                      cfg: dict) -> set[str]:
    explicit = set()
    if getattr(ns, "config", None):
        explicit.update(_load_config_file(ns.config))
    for flag, key in flag_keys.items():
        if getattr(ns, flag, None) is not None:
            explicit.add(key)
    return explicit


def _experiment_config(cfg: dict) -> experiments.ExperimentConfig:
    prior = PriorSpec(
        prior_lambda=InvGammaLaw(cfg["prior_shape_lambda"], cfg["prior_scale_lambda"]),
        prior_mu=InvGammaLaw(cfg["prior_shape_mu"], cfg["prior_scale_mu"]))
    return experiments.ExperimentConfig(
        true_params=TrueParams(cfg["lambda0"], cfg["mu0"]),
        prior=prior,
        spec=StaffingSpec(alpha=cfg["alpha"], beta=cfg["beta"], c_max=int(cfg["c_max"])),
        n_grid=tuple(int(n) for n in cfg["n_grid"]),
        replications=int(cfg["replications"]),
        mcmc=McmcConfig(total_samples=int(cfg["mcmc_samples"]),
                        burn_in=int(cfg["mcmc_burn_in"]),
                        proposal_std=cfg["proposal_std"]),
        base_seed=int(cfg["base_seed"]),
        alpha_qos=cfg["alpha"],
    )


def _write_manifest(out_dir: Path, command: str, cfg: dict, outputs: list[str],
                    timings: dict[str, float], summary: dict | None = None) -> None:
    manifest = {
        "command": command,
        "config": cfg,
        "outputs": outputs,
        "summary": summary or {},
        "timings_seconds": {k: round(v, 3) for k, v in timings.items()},
        "versions": {
            "artifact": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(ns: argparse.Namespace) -> Path:
    out = Path(getattr(ns, "out_dir", ".") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


_STAFFING_FLAGS = {"beta": "beta", "alpha": "alpha", "seed": "base_seed",
                   "threads": "threads", "replications": "replications"}


def _cmd_consistency(ns: argparse.Namespace) -> int:
    cfg = _resolve(_STAFFING_DEFAULTS, ns, _STAFFING_FLAGS)
    if ns.beta is not None:
        cfg["betas"] = [ns.beta]
    config = _experiment_config(cfg)
    out = _out_dir(ns)
    t0 = time.perf_counter()
    table = experiments.run_consistency(config, betas=tuple(cfg["betas"]),
                                        threads=int(cfg["threads"]))
    elapsed = time.perf_counter() - t0
    experiments.write_consistency_csv(table, out / "consistency.csv")
    _write_manifest(out, "consistency", cfg, ["consistency.csv"], {"run": elapsed})
    print(f"consistency: {len(table.rows)} rows -> {out / 'consistency.csv'}")
    return 0


def _cmd_feasibility(ns: argparse.Namespace) -> int:
    cfg = _resolve(_STAFFING_DEFAULTS, ns, _STAFFING_FLAGS)
    config = _experiment_config(cfg)
    c_probe = ns.c_probe
    if c_probe is None:
        c_probe = experiments.true_optimum(config.true_params, config.spec.alpha,
                                           config.spec.c_max) - 1
    out = _out_dir(ns)
    t0 = time.perf_counter()
    table = experiments.run_feasibility_decay(config, c_probe,
                                              threads=int(cfg["threads"]))
    elapsed = time.perf_counter() - t0
    experiments.write_feasibility_csv(table, out / "feasibility.csv")
    _write_manifest(out, "feasibility", cfg, ["feasibility.csv"], {"run": elapsed},
                    summary={"c_probe": c_probe})
    print(f"feasibility: c_probe={c_probe}, {len(table.rows)} rows -> "
          f"{out / 'feasibility.csv'}")
    return 0


def _cmd_rate(ns: argparse.Namespace) -> int:
    cfg = _resolve(_STAFFING_DEFAULTS, ns, _STAFFING_FLAGS)
    config = _experiment_config(cfg)
    out = _out_dir(ns)
    t0 = time.perf_counter()
    report = experiments.run_rate_check(config, threads=int(cfg["threads"]))
    elapsed = time.perf_counter() - t0
    experiments.write_rate_csv(report, out / "rate.csv")
    _write_manifest(out, "rate", cfg, ["rate.csv"], {"run": elapsed},
                    summary={"m_hat": report.m_hat})
    print(f"rate: M-hat = {report.m_hat:.3f}, {len(report.rows)} rows -> "
          f"{out / 'rate.csv'}")
    return 0


def _cmd_region(ns: argparse.Namespace) -> int:
    flags = {"sigma": "sigma", "beta": "beta", "method": "method",
             "samples": "samples", "seed": "seed", "sampler": "sampler",
             "burn_in": "burn_in", "resolution": "resolution",
             "threshold": "threshold"}
    cfg = _resolve(_REGION_DEFAULTS, ns, flags)
    if ns.bounds is not None:
        cfg["bounds"] = list(ns.bounds)
    law = BivariateNormal(mean=np.zeros(2),
                          covariance=np.array([[1.0, cfg["sigma"]],
                                               [cfg["sigma"], 1.0]]))
    cc = gaussian_demo.LinearCC(law=law, beta=cfg["beta"], threshold=cfg["threshold"])
    lo, hi = cfg["bounds"]
    res = int(cfg["resolution"])
    grid = gaussian_demo.GridSpec(x1_bounds=(lo, hi), x2_bounds=(lo, hi),
                                  resolution=(res, res))
    out = _out_dir(ns)
    t0 = time.perf_counter()
    grid_flags = gaussian_demo.emit_region_grid(
        cc, cfg["method"], grid, seed=int(cfg["seed"]),
        mc_samples=int(cfg["samples"]), sampler=cfg["sampler"],
        burn_in=int(cfg["burn_in"]), proposal_std=cfg["proposal_std"])
    elapsed = time.perf_counter() - t0
    gaussian_demo.write_region_csv(grid_flags, grid, out / "region.csv")
    _write_manifest(out, "region", cfg, ["region.csv"], {"run": elapsed},
                    summary={"feasible_points": int(grid_flags.sum())})
    print(f"region: method={cfg['method']}, {int(grid_flags.sum())} of "
          f"{grid_flags.size} grid points feasible -> {out / 'region.csv'}")
    return 0


def _cmd_fit(ns: argparse.Namespace) -> int:
    cfg = _resolve(_STAFFING_DEFAULTS, ns, {"alpha": "alpha", "beta": "beta"})
    params = TrueParams(cfg["lambda0"], cfg["mu0"])
    prior = PriorSpec(
        prior_lambda=InvGammaLaw(cfg["prior_shape_lambda"], cfg["prior_scale_lambda"]),
        prior_mu=InvGammaLaw(cfg["prior_shape_mu"], cfg["prior_scale_mu"]))
    dataset = simulate_dataset(params, ns.n, ns.seed)
    stats = SuffStats.from_dataset(dataset)
    q, report = fit_vb(stats, prior)
    print(f"n = {stats.n}  seed = {ns.seed}  "
          f"(true rates lambda0={params.lambda0}, mu0={params.mu0})")
    print(f"q_lambda: shape = {q.q_lambda.shape!r}  rate = {q.q_lambda.rate!r}  "
          f"mean = {q.q_lambda.mean:.6f}")
    print(f"q_mu:     shape = {q.q_mu.shape!r}  rate = {q.q_mu.rate!r}  "
          f"mean = {q.q_mu.mean:.6f}")
    print(f"elbo = {report.value!r}")
    print(f"iterations = {report.iterations}  converged = {report.converged}  "
          f"gradient_norm = {report.gradient_norm:.3e}")
    if ns.with_chain:
        chain_config = McmcConfig(total_samples=int(cfg["mcmc_samples"]),
                                  burn_in=int(cfg["mcmc_burn_in"]),
                                  proposal_std=cfg["proposal_std"],
                                  seed=experiments.derive_seed(ns.seed, "chain"))
        chain = run_chain(stats, prior, chain_config)
        print(f"mcmc: {len(chain.samples)} kept samples, acceptance_rate = "
              f"{chain.acceptance_rate:.3f}, mean lambda = "
              f"{chain.samples[:, 0].mean():.6f}, mean mu = "
              f"{chain.samples[:, 1].mean():.6f}")
        if ns.out_dir is not None:
            out = _out_dir(ns)
            write_chain_csv(chain, out / "chain.csv")
            print(f"chain -> {out / 'chain.csv'}")
    return 0


def _add_common(sub: argparse.ArgumentParser, with_experiment_flags: bool = True) -> None:
    sub.add_argument("--config", help="TOML config file or a manifest.json from a previous run")
    sub.add_argument("--out-dir", help="output directory (default: current directory)")
    if with_experiment_flags:
        sub.add_argument("--profile", choices=("desk", "paper"), default="desk",
                         help="replication scale (desk: 50, paper: 250)")
        sub.add_argument("--beta", type=float, help="confidence level")
        sub.add_argument("--alpha", type=float, help="max acceptable delay probability")
        sub.add_argument("--seed", type=int, help="base seed")
        sub.add_argument("--threads", type=int, help="parallel workers (default 1)")
        sub.add_argument("--replications", type=int, help="override replication count")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vbcc",
        description="Variational-Bayes joint chance-constrained staffing experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("consistency",
                        help="server-count quantiles vs n for VB and MCMC")
    _add_common(p)
    p.set_defaults(func=_cmd_consistency)

    p = subs.add_parser("feasibility",
                        help="how often an infeasible probe enters the VB set")
    _add_common(p)
    p.add_argument("--c-probe", type=int,
                   help="probe server count (default: deterministic optimum - 1)")
    p.set_defaults(func=_cmd_feasibility)

    p = subs.add_parser("rate", help="mis-staffing frequency vs the log(n)/n envelope")
    _add_common(p)
    p.set_defaults(func=_cmd_rate)

    p = subs.add_parser("region", help="Gaussian chance-constraint feasible region")
    _add_common(p, with_experiment_flags=False)
    p.add_argument("--sigma", type=float, help="off-diagonal covariance (default -0.1)")
    p.add_argument("--beta", type=float, help="confidence level (default 0.9)")
    p.add_argument("--method", choices=("exact", "mc", "vb"), help="region evaluator")
    p.add_argument("--samples", type=int, help="Monte-Carlo sample count")
    p.add_argument("--seed", type=int, help="sampling seed")
    p.add_argument("--sampler", choices=("direct", "metropolis"),
                   help="sample source for method=mc")
    p.add_argument("--burn-in", type=int, help="burn-in for sampler=metropolis")
    p.add_argument("--threshold", type=float, help="constraint right-hand side")
    p.add_argument("--bounds", type=float, nargs=2, metavar=("LO", "HI"),
                   help="grid bounds, both axes")
    p.add_argument("--resolution", type=int, help="grid points per axis")
    p.set_defaults(func=_cmd_region)

    p = subs.add_parser("fit", help="single-dataset VB (and optional MCMC) fit dump")
    _add_common(p, with_experiment_flags=False)
    p.add_argument("--n", type=int, required=True, help="sample size")
    p.add_argument("--seed", type=int, default=0, help="data seed")
    p.add_argument("--alpha", type=float, help=argparse.SUPPRESS)
    p.add_argument("--beta", type=float, help=argparse.SUPPRESS)
    p.add_argument("--with-chain", action="store_true",
                   help="also run the MCMC chain and print its summary")
    p.set_defaults(func=_cmd_fit)
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return ns.func(ns)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
