"""Command-line surface: experiment configuration, orchestration, and the
table/sweep/oracle experiment reproductions.

Subcommands:
    estimate  ruin and tail estimates for one configured group
    sweep     ruin estimates over group sizes 1..q (CSV, optional SVG)
    table     closed-form bound/approximation vs Monte-Carlo tail estimate
    oracle    cross-validate the ruin estimator against path simulation

Exit codes: 0 success, 2 configuration error, 3 oracle mismatch.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import approx
from .model import AgentSubset, RiskParams
from .netgen import BlockModel
from .output import fmt, render_csv, sweep_svg
from .pathsim import oracle_psi
from .ruin import estimate_psi, estimate_tail

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ORACLE = 3

SEED_ENV_VAR = "RUINNET_SEED"
DEFAULT_SEED = 42
DEFAULT_NS_GRID = (3, 4, 5, 6)

U_SHAPE = "U_SHAPE"
S_SHAPE = "S_SHAPE"
FLAT = "FLAT"


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class PremiumSpec:
    """Premium rates: an explicit vector, or a two-value scheme where the
    first ``ns`` objects get ``low`` and the rest get ``high``."""

    vector: Optional[tuple[float, ...]] = None
    low: Optional[float] = None
    high: Optional[float] = None
    ns: Optional[int] = None

    @property
    def is_two_value(self) -> bool:
        return self.vector is None

    def resolve(self, d: int, ns_override: Optional[int] = None) -> np.ndarray:
        if self.vector is not None:
            if ns_override is not None:
                raise ConfigError("cannot override ns with an explicit premium vector")
            if len(self.vector) != d:
                raise ConfigError(f"premium vector must have length {d}")
            return np.asarray(self.vector, dtype=np.float64)
        ns = self.ns if ns_override is None else int(ns_override)
        if ns is None:
            raise ConfigError("two-value premium scheme needs ns")
        if not 0 <= ns <= d:
            raise ConfigError(f"ns must lie in [0, {d}], got {ns}")
        out = np.full(d, float(self.high))
        out[:ns] = float(self.low)
        return out


@dataclass(frozen=True)
class SweepRow:
    """One sweep point: estimates, interval, and approximation columns."""

    qsize: int
    ns: int
    psi_hat: float
    stderr: float
    ci_lo: float
    ci_hi: float
    log10_psi: Optional[float]
    tail_hat: float
    approx_prob: float
    stein_bound: float

    def as_dict(self) -> dict:
        return {
            "qsize": self.qsize,
            "ns": self.ns,
            "psi_hat": self.psi_hat,
            "stderr": self.stderr,
            "ci_lo": self.ci_lo,
            "ci_hi": self.ci_hi,
            "log10_psi": self.log10_psi,
            "tail_hat": self.tail_hat,
            "approx_prob": self.approx_prob,
            "stein_bound": self.stein_bound,
        }


SWEEP_FIELDS = (
    "qsize",
    "ns",
    "psi_hat",
    "stderr",
    "ci_lo",
    "ci_hi",
    "log10_psi",
    "tail_hat",
    "approx_prob",
    "stein_bound",
)

TABLE_FIELDS = ("ns", "bound", "approximation", "estimate", "stderr", "abs_difference")


@dataclass
class ExperimentConfig:
    """Validated experiment description loaded from a JSON document."""

    lam: float
    q: int
    d: int
    premiums: PremiumSpec
    mu: np.ndarray
    reserves: np.ndarray
    network: BlockModel
    group_size: Optional[int]
    group_indices: Optional[tuple[int, ...]]
    beta: Optional[float]
    replicates: int
    seed: int
    threads: int
    ns_grid: Optional[tuple[int, ...]]
    horizon: float
    outer_networks: int
    inner_paths: int
    approx_mode: str
    m_configs: int

    def risk_params(self, ns_override: Optional[int] = None) -> RiskParams:
        c = self.premiums.resolve(self.d, ns_override)
        try:
            return RiskParams(lam=self.lam, c=c, mu=self.mu, u=self.reserves)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def group(self) -> AgentSubset:
        try:
            if self.group_indices is not None:
                subset = AgentSubset(self.group_indices)
            elif self.group_size is not None:
                subset = AgentSubset.prefix(self.group_size)
            else:
                subset = AgentSubset.prefix(self.q)
            subset.validate_for(self.q)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return subset

    @property
    def has_group(self) -> bool:
        return self.group_size is not None or self.group_indices is not None


def _broadcast(value, length: int, name: str) -> np.ndarray:
    if isinstance(value, (int, float)):
        return np.full(length, float(value))
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (length,):
        raise ConfigError(f"{name} must be a scalar or a vector of length {length}")
    return arr


def _parse_network(spec, q: int, d: int) -> BlockModel:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("network must be an object with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "bernoulli":
            return BlockModel.bernoulli(float(spec["p"]))
        if kind == "sbm":
            model = BlockModel(w=spec["w"], v=spec["v"], p=spec["p"])
            if "K" in spec and int(spec["K"]) != model.K:
                raise ConfigError(f"K={spec['K']} does not match w of length {model.K}")
            if "L" in spec and int(spec["L"]) != model.L:
                raise ConfigError(f"L={spec['L']} does not match v of length {model.L}")
            return model
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid network spec: {exc}") from exc
    raise ConfigError(f"unknown network kind {kind!r}")


def _parse_premiums(spec, d: int) -> PremiumSpec:
    if isinstance(spec, (list, tuple)):
        vec = tuple(float(x) for x in spec)
        if len(vec) != d:
            raise ConfigError(f"premium vector must have length {d}")
        return PremiumSpec(vector=vec)
    if isinstance(spec, dict):
        try:
            low = float(spec["low"])
            high = float(spec["high"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("two-value premiums need numeric 'low' and 'high'") from exc
        ns = spec.get("ns")
        return PremiumSpec(low=low, high=high, ns=None if ns is None else int(ns))
    raise ConfigError("premiums must be a vector or a {low, high, ns} object")


def parse_config(doc: dict, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Build a validated configuration from a JSON document plus overrides.

    Seed precedence: override flag, then file value, then the
    ``RUINNET_SEED`` environment variable, then 42.
    """
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    overrides = overrides or {}
    try:
        q = int(doc["q"])
        d = int(doc["d"])
        lam = float(doc.get("lambda", doc.get("lam", 1.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid or missing q/d/lambda: {exc}") from exc
    if q < 1 or d < 1:
        raise ConfigError("q and d must be at least 1")
    if "premiums" not in doc:
        raise ConfigError("missing 'premiums'")
    if "network" not in doc:
        raise ConfigError("missing 'network'")

    group_size = None
    group_indices = None
    group = doc.get("group")
    if group is not None:
        if not isinstance(group, dict):
            raise ConfigError("group must be an object with 'size' or 'indices'")
        if "indices" in group:
            group_indices = tuple(int(i) for i in group["indices"])
        elif "size" in group:
            group_size = int(group["size"])
        else:
            raise ConfigError("group must contain 'size' or 'indices'")

    seed = overrides.get("seed")
    if seed is None:
        seed = doc.get("seed")
    if seed is None:
        env = os.environ.get(SEED_ENV_VAR)
        if env is not None:
            try:
                seed = int(env)
            except ValueError as exc:
                raise ConfigError(f"{SEED_ENV_VAR} must be an integer") from exc
    if seed is None:
        seed = DEFAULT_SEED
    if int(seed) < 0:
        raise ConfigError("seed must be nonnegative")

    replicates = overrides.get("replicates")
    if replicates is None:
        replicates = doc.get("replicates", 1000)
    threads = overrides.get("threads")
    if threads is None:
        threads = doc.get("threads", 1)

    ns_grid = doc.get("ns_grid")
    if ns_grid is not None:
        ns_grid = tuple(int(x) for x in ns_grid)

    beta = doc.get("beta")
    try:
        cfg = ExperimentConfig(
            lam=lam,
            q=q,
            d=d,
            premiums=_parse_premiums(doc["premiums"], d),
            mu=_broadcast(doc.get("mu", 1.0), d, "mu"),
            reserves=_broadcast(doc.get("reserves", 0.0), q, "reserves"),
            network=_parse_network(doc["network"], q, d),
            group_size=group_size,
            group_indices=group_indices,
            beta=None if beta is None else float(beta),
            replicates=int(replicates),
            seed=int(seed),
            threads=int(threads),
            ns_grid=ns_grid,
            horizon=float(doc.get("horizon", 1000.0)),
            outer_networks=int(doc.get("outer_networks", 200)),
            inner_paths=int(doc.get("inner_paths", 500)),
            approx_mode=str(doc.get("approx_mode", "auto")),
            m_configs=int(doc.get("m_configs", 10_000)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return parse_config(doc, overrides)


def _approx_point(cfg: ExperimentConfig, params: RiskParams, group: AgentSubset):
    """Pick the approximation mode for a sweep/estimate point."""
    mode = cfg.approx_mode
    if mode == "auto":
        if cfg.network.is_bernoulli:
            mode = approx.MODE_CLOSED_FORM
        elif approx.exact_enumerable(params, cfg.network, group):
            mode = approx.MODE_EXACT
        else:
            mode = approx.MODE_SAMPLED
    return approx.mixture_probability(
        params,
        cfg.network,
        group,
        mode=mode,
        m_configs=cfg.m_configs,
        base_seed=cfg.seed,
        threads=cfg.threads,
    )


def cmd_estimate(cfg: ExperimentConfig) -> dict:
    """Ruin and tail estimates for the configured group."""
    params = cfg.risk_params()
    group = cfg.group()
    try:
        psi = estimate_psi(params, cfg.network, group, cfg.replicates, cfg.seed, cfg.threads)
        tail = estimate_tail(params, cfg.network, group, cfg.replicates, cfg.seed, cfg.threads)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return {
        "psi_hat": psi.mean,
        "stderr": psi.stderr,
        "tail_hat": tail.mean,
    }


def cmd_sweep(cfg: ExperimentConfig) -> list[SweepRow]:
    """Sweep the group size 1..q for every ns in the grid."""
    if cfg.has_group:
        raise ConfigError("sweep ranges over group sizes; leave 'group' unset")
    if not cfg.premiums.is_two_value:
        raise ConfigError("sweep requires the two-value premium scheme")
    grid = cfg.ns_grid or DEFAULT_NS_GRID
    rows: list[SweepRow] = []
    for ns in grid:
        params = cfg.risk_params(ns_override=ns)
        for k in range(1, cfg.q + 1):
            group = AgentSubset.prefix(k)
            try:
                psi = estimate_psi(
                    params, cfg.network, group, cfg.replicates, cfg.seed, cfg.threads
                )
                tail = estimate_tail(
                    params, cfg.network, group, cfg.replicates, cfg.seed, cfg.threads
                )
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            ap = _approx_point(cfg, params, group)
            rows.append(
                SweepRow(
                    qsize=k,
                    ns=int(ns),
                    psi_hat=psi.mean,
                    stderr=psi.stderr,
                    ci_lo=psi.mean - psi.halfwidth,
                    ci_hi=psi.mean + psi.halfwidth,
                    log10_psi=math.log10(psi.mean) if psi.mean > 0 else None,
                    tail_hat=tail.mean,
                    approx_prob=ap.probability,
                    stein_bound=ap.stein_bound,
                )
            )
    return rows


def cmd_table(cfg: ExperimentConfig) -> list[dict]:
    """Bound and approximation against the Monte-Carlo tail estimate."""
    if not cfg.network.is_bernoulli:
        raise ConfigError("table mode requires a Bernoulli network")
    if cfg.ns_grid is None:
        raise ConfigError("table mode requires an ns_grid")
    if not cfg.premiums.is_two_value:
        raise ConfigError("table mode requires the two-value premium scheme")
    group = cfg.group()
    rows = []
    for ns in cfg.ns_grid:
        params = cfg.risk_params(ns_override=ns)
        ap = approx.mixture_probability(params, cfg.network, group, approx.MODE_CLOSED_FORM)
        try:
            tail = estimate_tail(
                params, cfg.network, group, cfg.replicates, cfg.seed, cfg.threads
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        rows.append(
            {
                "ns": int(ns),
                "bound": ap.stein_bound,
                "approximation": ap.probability,
                "estimate": tail.mean,
                "stderr": tail.stderr,
                "abs_difference": abs(ap.probability - tail.mean),
            }
        )
    return rows


def cmd_oracle(cfg: ExperimentConfig) -> dict:
    """Cross-validate the ruin estimator against direct path simulation."""
    if cfg.q * cfg.d > 100:
        raise ConfigError("oracle mode limited to small instances (q*d <= 100)")
    params = cfg.risk_params()
    group = cfg.group()
    try:
        psi = estimate_psi(params, cfg.network, group, cfg.replicates, cfg.seed, cfg.threads)
        oracle = oracle_psi(
            params,
            cfg.network,
            group,
            horizon=cfg.horizon,
            outer_networks=cfg.outer_networks,
            inner_paths=cfg.inner_paths,
            base_seed=cfg.seed,
            threads=cfg.threads,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    discrepancy = abs(psi.mean - oracle.mean)
    tolerance = max(0.02, 4.0 * math.hypot(psi.stderr, oracle.stderr))
    return {
        "psi_hat": psi.mean,
        "psi_stderr": psi.stderr,
        "oracle": oracle.mean,
        "oracle_stderr": oracle.stderr,
        "discrepancy": discrepancy,
        "tolerance": tolerance,
        "pass": discrepancy <= tolerance,
    }


def classify_shape(rows: Sequence[SweepRow]) -> str:
    """Classify a sweep panel from a quadratic fit of log10 ruin on group size.

    U_SHAPE: significantly convex with an interior fitted minimum.
    S_SHAPE: fitted values increase monotonically (within noise) by a
    significant total amount.  FLAT otherwise.
    """
    pts = [
        (r.qsize, r.log10_psi)
        for r in rows
        if r.log10_psi is not None and math.isfinite(r.log10_psi)
    ]
    if len(pts) < 4:
        raise ValueError("shape classification needs at least 4 finite points")
    x = np.asarray([p[0] for p in pts], dtype=np.float64)
    y = np.asarray([p[1] for p in pts], dtype=np.float64)
    X = np.column_stack([np.ones_like(x), x, x * x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ coef
    dof = len(pts) - 3
    resid_var = float(((y - fitted) ** 2).sum()) / dof if dof > 0 else 0.0
    se_resid = math.sqrt(resid_var)
    cov = resid_var * np.linalg.inv(X.T @ X)
    se_quad = math.sqrt(max(0.0, cov[2, 2]))
    a, b, c = (float(v) for v in coef)

    q_max = max(r.qsize for r in rows)
    if c > 2.0 * se_quad:
        vertex = -b / (2.0 * c)
        if 1.0 < vertex < q_max:
            return U_SHAPE
    diffs = np.diff(fitted)
    rises = bool((diffs >= -2.0 * se_resid).all())
    if rises and fitted[-1] - fitted[0] > 2.0 * se_resid:
        return S_SHAPE
    return FLAT


# --- entry point -------------------------------------------------------------


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _report_text(report: dict, fieldnames: Sequence[str], fmt_name: str) -> str:
    if fmt_name == "json":
        return json.dumps({k: report[k] for k in fieldnames}, indent=2, sort_keys=True) + "\n"
    return render_csv(fieldnames, [report])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ruinnet",
        description="Group ruin probabilities on random bipartite insurance networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("estimate", "ruin/tail estimate for one configured group"),
        ("sweep", "sweep group sizes 1..q over an ns grid"),
        ("table", "bound/approximation table vs Monte-Carlo estimates"),
        ("oracle", "cross-check the estimator against path simulation"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="JSON experiment config")
        cmd.add_argument("--seed", type=int, default=None, help="override base seed")
        cmd.add_argument(
            "--replicates", type=int, default=None, help="override replicate count"
        )
        cmd.add_argument("--threads", type=int, default=None, help="worker threads")
        cmd.add_argument("--out", default=None, help="output file (default stdout)")
        cmd.add_argument(
            "--format", choices=("csv", "json"), default="csv", help="output format"
        )
        if name == "sweep":
            cmd.add_argument("--svg", default=None, help="also write an SVG plot")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        "seed": args.seed,
        "replicates": args.replicates,
        "threads": args.threads,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "estimate":
            report = cmd_estimate(cfg)
            _write_text(args.out, _report_text(report, ("psi_hat", "stderr", "tail_hat"), args.format))
        elif args.command == "sweep":
            rows = cmd_sweep(cfg)
            dicts = [r.as_dict() for r in rows]
            if args.format == "json":
                text = json.dumps(dicts, indent=2, sort_keys=True) + "\n"
            else:
                text = render_csv(SWEEP_FIELDS, dicts, comment="log10_psi uses base-10 logarithm")
            _write_text(args.out, text)
            if args.svg:
                _write_text(args.svg, sweep_svg(dicts))
        elif args.command == "table":
            rows = cmd_table(cfg)
            if args.format == "json":
                text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
            else:
                text = render_csv(TABLE_FIELDS, rows)
            _write_text(args.out, text)
        elif args.command == "oracle":
            report = cmd_oracle(cfg)
            fields = (
                "psi_hat",
                "psi_stderr",
                "oracle",
                "oracle_stderr",
                "discrepancy",
                "tolerance",
                "pass",
            )
            _write_text(args.out, _report_text(report, fields, args.format))
            status = "PASS" if report["pass"] else "FAIL"
            print(
                f"oracle {status}: discrepancy {fmt(report['discrepancy'])} "
                f"vs tolerance {fmt(report['tolerance'])}",
                file=sys.stderr,
            )
            if not report["pass"]:
                return EXIT_ORACLE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
