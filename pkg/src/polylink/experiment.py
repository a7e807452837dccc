"""Convergence experiments: seeded trials across n, rows in a stable CSV schema.

Each (n, trial) pair gets its own derived seed, so trials are independent of
each other and of the execution order; parallel runs (POLYLINK_THREADS > 1)
produce byte-identical output to sequential ones because rows are emitted in
(n, trial) order regardless of completion order.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .errors import ConfigurationError
from .geometry import build_polytope
from .limits import limit_constant
from .rates import BetaMode
from .sampling import derive_seed, make_density, sample_points
from .thresholds import k_connectivity_threshold, largest_k_nn_link

__all__ = [
    "KRule", "ExperimentConfig", "run_convergence_experiment",
    "read_rows", "CSV_COLUMNS",
]

CSV_COLUMNS = ("n", "trial", "seed", "k", "L", "M",
               "nLd_log", "nMd_log", "nLd_k", "nMd_k", "limit_const")


@dataclass(frozen=True)
class KRule:
    """Named presets for the neighbour-count sequence k(n).

    - fixed:     k(n) = k                  (beta = 0 regime)
    - beta_log:  k(n) = ceil(beta * log n) (beta < inf regime)
    - power:     k(n) = ceil(c * n**gamma), gamma < 1 (beta = inf regime)
    """

    kind: str
    k: int | None = None
    beta: float | None = None
    c: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        if self.kind == "fixed":
            if not isinstance(self.k, int) or self.k < 1:
                raise ConfigurationError(f"fixed k rule needs integer k >= 1, got {self.k!r}")
        elif self.kind == "beta_log":
            if self.beta is None or not (math.isfinite(self.beta) and self.beta > 0):
                raise ConfigurationError(f"beta_log rule needs finite beta > 0, got {self.beta!r}")
        elif self.kind == "power":
            if self.c is None or not self.c > 0:
                raise ConfigurationError(f"power rule needs c > 0, got {self.c!r}")
            if self.gamma is None or not 0.0 < self.gamma < 1.0:
                raise ConfigurationError(f"power rule needs 0 < gamma < 1, got {self.gamma!r}")
        else:
            raise ConfigurationError(f"unknown k rule kind {self.kind!r}")

    def k_of(self, n: int) -> int:
        if self.kind == "fixed":
            return self.k
        if self.kind == "beta_log":
            return max(1, math.ceil(self.beta * math.log(n)))
        return max(1, math.ceil(self.c * n ** self.gamma))

    def beta_mode(self) -> BetaMode:
        if self.kind == "fixed":
            return BetaMode.finite(0.0)
        if self.kind == "beta_log":
            return BetaMode.finite(self.beta)
        return BetaMode.infinite()

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        for name in ("k", "beta", "c", "gamma"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        return out

    @classmethod
    def from_dict(cls, d) -> "KRule":
        if isinstance(d, KRule):
            return d
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigurationError(f"k rule must be a dict with 'kind', got {d!r}")
        known = {k: v for k, v in d.items() if k in ("kind", "k", "beta", "c", "gamma")}
        if "k" in known and known["k"] is not None:
            known["k"] = int(known["k"])
        return cls(**known)


@dataclass
class ExperimentConfig:
    """Everything a convergence run needs; JSON-serializable."""

    polytope: dict
    density: dict
    k_rule: KRule
    n_values: list[int]
    trials: int
    master_seed: int
    outputs: tuple[str, ...] = ("L", "M")
    output_path: str | None = None

    def validate(self):
        if not self.n_values:
            raise ConfigurationError("n_values must be nonempty")
        ns = [int(n) for n in self.n_values]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigurationError(f"n_values must be strictly increasing, got {ns}")
        if ns[0] < 2:
            raise ConfigurationError(f"n must be >= 2, got {ns[0]}")
        if int(self.trials) < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        outs = tuple(self.outputs)
        if not outs or not set(outs) <= {"L", "M"}:
            raise ConfigurationError(f"outputs must be a nonempty subset of L, M; got {outs!r}")
        for n in ns:
            k = self.k_rule.k_of(n)
            if not 1 <= k < n:
                raise ConfigurationError(
                    f"k rule gives k={k} at n={n}; need 1 <= k < n")

    def to_dict(self) -> dict:
        return {
            "polytope": self.polytope,
            "density": self.density,
            "k_rule": self.k_rule.to_dict(),
            "n_values": [int(n) for n in self.n_values],
            "trials": int(self.trials),
            "master_seed": int(self.master_seed),
            "outputs": list(self.outputs),
            "output_path": self.output_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            return cls(
                polytope=d["polytope"],
                density=d.get("density", {"kind": "uniform"}),
                k_rule=KRule.from_dict(d["k_rule"]),
                n_values=[int(n) for n in d["n_values"]],
                trials=int(d.get("trials", 1)),
                master_seed=int(d.get("master_seed", 0)),
                outputs=tuple(d.get("outputs", ("L", "M"))),
                output_path=d.get("output_path"),
            )
        except KeyError as exc:
            raise ConfigurationError(f"experiment config is missing {exc}") from exc

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# one cache per worker process; keyed by the config JSON so distinct configs
# never share geometry
_WORKER_CACHE: dict = {}


def _trial_row(poly_json: str, dens_json: str, k_rule: KRule, master_seed: int,
               outputs: tuple[str, ...], limit_const: float, n: int, trial: int) -> dict:
    key = (poly_json, dens_json)
    if key not in _WORKER_CACHE:
        poly = build_polytope(json.loads(poly_json))
        _WORKER_CACHE[key] = (poly, make_density(json.loads(dens_json), poly))
    poly, dens = _WORKER_CACHE[key]
    seed = derive_seed(master_seed, n, trial)
    cloud = sample_points(poly, dens, n, seed)
    k = k_rule.k_of(n)
    d = poly.dim
    logn = math.log(n)
    L = largest_k_nn_link(cloud, k) if "L" in outputs else None
    M = k_connectivity_threshold(cloud, k) if "M" in outputs else None
    row = {"n": n, "trial": trial, "seed": seed, "k": k, "L": L, "M": M,
           "nLd_log": n * L ** d / logn if L is not None else None,
           "nMd_log": n * M ** d / logn if M is not None else None,
           "nLd_k": n * L ** d / k if L is not None else None,
           "nMd_k": n * M ** d / k if M is not None else None,
           "limit_const": limit_const}
    return row


def _thread_count() -> int:
    raw = os.environ.get("POLYLINK_THREADS", "1").strip() or "1"
    try:
        threads = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"POLYLINK_THREADS must be an integer, got {raw!r}") from exc
    return max(1, threads)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def format_row(row: dict) -> str:
    return ",".join(_fmt(row[c]) for c in CSV_COLUMNS)


def run_convergence_experiment(config: ExperimentConfig,
                               csv_path=None) -> list[dict]:
    """Run every (n, trial) pair of the config; return the rows in order.

    When a CSV path is given (argument or config.output_path), the header and
    each finished row are flushed immediately, so partial results survive a
    failure.  Floats are written with 17 significant digits for lossless
    round-trips; an absent output leaves its columns empty.
    """
    config.validate()
    poly = build_polytope(config.polytope)
    dens = make_density(config.density, poly)
    limit_const = limit_constant(poly, dens, config.k_rule.beta_mode()).constant

    poly_json = json.dumps(config.polytope, sort_keys=True)
    dens_json = json.dumps(config.density, sort_keys=True)
    jobs = [(int(n), t) for n in config.n_values for t in range(int(config.trials))]
    args = (poly_json, dens_json, config.k_rule, int(config.master_seed),
            tuple(config.outputs), limit_const)

    path = csv_path if csv_path is not None else config.output_path
    sink = open(path, "w", newline="") if path is not None else None
    rows: list[dict] = []
    try:
        if sink is not None:
            sink.write(",".join(CSV_COLUMNS) + "\n")
            sink.flush()
        threads = _thread_count()
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                futures = [pool.submit(_trial_row, *args, n, t) for n, t in jobs]
                for fut in futures:  # submission order == (n, trial) order
                    row = fut.result()
                    rows.append(row)
                    if sink is not None:
                        sink.write(format_row(row) + "\n")
                        sink.flush()
        else:
            for n, t in jobs:
                row = _trial_row(*args, n, t)
                rows.append(row)
                if sink is not None:
                    sink.write(format_row(row) + "\n")
                    sink.flush()
    finally:
        if sink is not None:
            sink.close()
    return rows


def read_rows(source) -> list[dict]:
    """Parse a convergence CSV back into typed rows ('' -> None, inf -> inf)."""
    own = isinstance(source, (str, os.PathLike))
    fh = open(source, newline="") if own else source
    try:
        reader = csv.DictReader(fh)
        rows = []
        for rec in reader:
            row = {}
            for col in CSV_COLUMNS:
                raw = rec.get(col, "")
                if raw == "" or raw is None:
                    row[col] = None
                elif col in ("n", "trial", "seed", "k"):
                    row[col] = int(raw)
                else:
                    row[col] = float(raw)
            rows.append(row)
        return rows
    finally:
        if own:
            fh.close()
