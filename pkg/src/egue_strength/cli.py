"""Command line interface.

    egue-strength table1
    egue-strength moments --N 20 --m 10 --k 2 --k0 1 --method exact
    egue-strength verify [--samples 2000 --seed 1]
    egue-strength histogram --N 6 --m 3 --k 2 --k0 1 --samples 500 --seed 7

Exit status: 0 on success, 1 when a check fails, 2 on bad configuration
(including cost-guard refusals).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields

import jsonschema

from . import __version__
from .asymptotics import asymptotic_cumulants, dilute_expansion
from .errors import CostGuardError, DomainError
from .exact_moments import MODES, MOMENT_ORDERS, REMOVAL, ModelParams, cumulants, exact_moments
from .table1 import QUANTITIES, TOLERANCE, reproduce_table

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

COMMANDS = ("table1", "moments", "verify", "histogram")
METHODS = ("exact", "asymp", "dilute", "wick", "mc")
FORMATS = ("csv", "json")
RANDOMIZED_METHODS = ("mc",)

DEFAULT_GRID = ((6, 3, 2, 1), (7, 3, 2, 1), (8, 4, 2, 2), (8, 4, 3, 1), (8, 5, 2, 1))
ORACLE_RTOL = 1e-10
MC_Z = 3.0

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "N": {"type": ["integer", "null"], "minimum": 0},
        "m": {"type": ["integer", "null"], "minimum": 0},
        "k": {"type": ["integer", "null"], "minimum": 0},
        "k0": {"type": ["integer", "null"], "minimum": 0},
        "vh2": {"type": "number", "exclusiveMinimum": 0},
        "vo2": {"type": "number", "exclusiveMinimum": 0},
        "mode": {"enum": list(MODES)},
        "method": {"enum": list(METHODS)},
        "n_samples": {"type": ["integer", "null"], "minimum": 2},
        "seed": {"type": ["integer", "null"], "minimum": 0, "maximum": 2**64 - 1},
        "output": {"enum": list(FORMATS)},
        "out_path": {"type": ["string", "null"]},
        "bins": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "grid": {
            "type": ["array", "null"],
            "items": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 4, "maxItems": 4},
        },
    },
    "required": ["command"],
    "additionalProperties": False,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    N: int | None = None
    m: int | None = None
    k: int | None = None
    k0: int | None = None
    vh2: float = 1.0
    vo2: float = 1.0
    mode: str = REMOVAL
    method: str = "exact"
    n_samples: int | None = None
    seed: int | None = None
    output: str = "json"
    out_path: str | None = None
    bins: int = 40
    workers: int = 1
    grid: list | None = field(default=None)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["grid"] is not None:
            d["grid"] = [list(g) for g in d["grid"]]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config {path}: {exc.message}") from None
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def has_params(self) -> bool:
        return None not in (self.N, self.m, self.k, self.k0)

    def params(self) -> ModelParams:
        if not self.has_params():
            raise ConfigError(f"command {self.command!r} needs --N, --m, --k and --k0")
        return ModelParams(self.N, self.m, self.k, self.k0, float(self.vh2), float(self.vo2))

    def params_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name in ("N", "m", "k", "k0", "vh2", "vo2")}

    def validate(self) -> None:
        needs_seed = self.command == "histogram" or (self.command == "moments" and self.method in RANDOMIZED_METHODS)
        if needs_seed:
            if self.seed is None:
                raise ConfigError("randomized commands need an explicit --seed")
            if self.n_samples is None:
                raise ConfigError("randomized commands need --samples")
        if self.command == "verify" and self.n_samples is not None and self.seed is None:
            raise ConfigError("verify with --samples needs an explicit --seed")
        if self.command in ("moments", "histogram"):
            self.params()


# ---------------------------------------------------------------------------
# Commands; each returns (records, exit_code, extra_meta)


def _moment_records(values: dict, provenance: str, se: dict | None = None) -> list[dict]:
    out = []
    for (P, Q), v in values.items():
        out.append(
            {"quantity": f"M{P}{Q}", "value": v, "se": None if se is None else se.get((P, Q)), "provenance": provenance}
        )
    return out


def _cumulant_records(values: dict, provenance: str) -> list[dict]:
    return [{"quantity": q, "value": v, "se": None, "provenance": provenance} for q, v in values.items()]


def cmd_table1(cfg: RunConfig):
    records = []
    ok = True
    for row in reproduce_table():
        N, m, k, k0 = row.params
        for q in QUANTITIES:
            passed = abs(row.delta[q]) <= TOLERANCE[q]
            ok &= passed
            records.append(
                {
                    "N": N,
                    "m": m,
                    "k": k,
                    "k0": k0,
                    "quantity": q,
                    "computed": row.computed[q],
                    "reference": row.reference[q],
                    "delta": row.delta[q],
                    "tolerance": TOLERANCE[q],
                    "ok": passed,
                }
            )
    return records, EXIT_OK if ok else EXIT_FAIL, {}


def cmd_moments(cfg: RunConfig):
    p = cfg.params()
    method = cfg.method
    if method == "exact":
        mom = exact_moments(p, cfg.mode)
        vals = {pq: mom.scaled(*pq) for pq in MOMENT_ORDERS}
        records = _moment_records(vals, mom.provenance)
        records += _cumulant_records(cumulants(mom).as_dict(), mom.provenance)
    elif method == "wick":
        from .wick import wick_moments

        mom = wick_moments(p, cfg.mode)
        vals = {pq: mom.scaled(*pq) for pq in MOMENT_ORDERS}
        records = _moment_records(vals, "wick")
        records += _cumulant_records(cumulants(mom).as_dict(), "wick")
    elif method == "asymp":
        if cfg.mode != REMOVAL:
            raise ConfigError("asymptotic forms are for removal mode")
        a = asymptotic_cumulants(p.m, p.k, p.k0)
        vals = {q: v for q, v in a.as_dict().items() if q in QUANTITIES}
        records = _cumulant_records(vals, "asymptotic")
    elif method == "dilute":
        if cfg.mode != REMOVAL:
            raise ConfigError("dilute-limit forms are for removal mode")
        xd, kd = dilute_expansion(p.m, p.k, p.k0)
        vals = {"xi": xd, "k40": kd, "k04": kd, "k31": kd, "k13": kd, "k22": kd}
        records = _cumulant_records(vals, "dilute")
    elif method == "mc":
        from .ensemble_mc import EnsembleConfig, mc_moments

        est = mc_moments(EnsembleConfig(p, cfg.n_samples, cfg.seed, cfg.mode, workers=cfg.workers))
        records = _moment_records(est.mean, "mc", est.se)
        records += _cumulant_records(cumulants(est.as_moments()).as_dict(), "mc")
    else:  # pragma: no cover - guarded by argparse and the schema
        raise ConfigError(f"unknown method {method!r}")
    return records, EXIT_OK, {}


def _rel_err(value: float, ref: float) -> float:
    if value == ref:
        return 0.0
    return abs(value - ref) / max(abs(ref), 1e-300)


def verify_point(params: ModelParams, mode: str, n_samples: int | None = None, seed: int | None = None, workers: int = 1):
    """All checks for one (params, mode); returns a list of check records."""
    from .exact_moments import h2_moment
    from .wick import WickSystem, wick_oracle

    N, m, k, k0 = params.N, params.m, params.k, params.k0
    base = {"N": N, "m": m, "k": k, "k0": k0, "mode": mode}
    records = []

    def add(moment, check, value, reference, ok):
        records.append(
            {**base, "moment": moment, "check": check, "value": value, "reference": reference,
             "rel_err": _rel_err(value, reference), "ok": bool(ok)}
        )

    closed = exact_moments(params, mode, hybrid_m22=False)
    system = WickSystem(params, mode)
    wick = {pq: wick_oracle(params, *pq, mode, system=system) for pq in MOMENT_ORDERS}
    for pq in MOMENT_ORDERS:
        if pq == (2, 2):
            continue
        v, r = closed.get(*pq), float(wick[pq])
        ok = math.isfinite(v) and _rel_err(v, r) <= ORACLE_RTOL
        add(f"M{pq[0]}{pq[1]}", "oracle_equality", v, r, ok)

    mf = params.final_m(mode)
    w20 = wick[(0, 0)] * h2_moment(N, m, k)
    w02 = wick[(0, 0)] * h2_moment(N, mf, k)
    add("M20", "factorization", float(wick[(2, 0)]), float(w20), wick[(2, 0)] == w20)
    add("M02", "factorization", float(wick[(0, 2)]), float(w02), wick[(0, 2)] == w02)

    # |M11| <= sqrt(M20 M02) and M22 M00 >= M11^2, both from the exact oracle
    cs_bound = math.sqrt(float(wick[(2, 0)] * wick[(0, 2)]))
    add("M11", "cauchy_schwarz", abs(float(wick[(1, 1)])), cs_bound, abs(float(wick[(1, 1)])) <= cs_bound * (1 + 1e-12))
    lhs = wick[(2, 2)] * wick[(0, 0)]
    add("M22", "cauchy_schwarz", float(lhs), float(wick[(1, 1)] ** 2), lhs >= wick[(1, 1)] ** 2)

    if n_samples is not None:
        from .ensemble_mc import ALL_ORDERS, EnsembleConfig, mc_moments

        est = mc_moments(EnsembleConfig(params, n_samples, seed, mode, workers=workers))
        for pq in ALL_ORDERS:
            ref = float(wick[pq]) * params.vo2 * params.vh2 ** (sum(pq) / 2) if sum(pq) % 2 == 0 else 0.0
            z = (est.mean[pq] - ref) / est.se[pq] if est.se[pq] > 0 else math.inf
            rec_ok = abs(z) <= MC_Z
            add(f"M{pq[0]}{pq[1]}", "mc_3se", est.mean[pq], ref, rec_ok)
            records[-1]["z"] = z
    return records


def cmd_verify(cfg: RunConfig):
    if cfg.has_params():
        grid = [(cfg.N, cfg.m, cfg.k, cfg.k0)]
    elif cfg.grid is not None:
        grid = [tuple(g) for g in cfg.grid]
    else:
        grid = list(DEFAULT_GRID)
    records = []
    for point in grid:
        p = ModelParams(*point, vh2=float(cfg.vh2), vo2=float(cfg.vo2))
        modes = [cfg.mode] if cfg.has_params() else list(MODES)
        for mode in modes:
            records += verify_point(p, mode, cfg.n_samples, cfg.seed, cfg.workers)
    for r in records:
        r.setdefault("z", None)
    ok = all(r["ok"] for r in records)
    return records, EXIT_OK if ok else EXIT_FAIL, {"n_checks": len(records), "n_failed": sum(not r["ok"] for r in records)}


def cmd_histogram(cfg: RunConfig):
    from .ensemble_mc import EnsembleConfig, strength_histogram

    p = cfg.params()
    h = strength_histogram(EnsembleConfig(p, cfg.n_samples, cfg.seed, cfg.mode, workers=cfg.workers), bins=cfg.bins)
    ci = 0.5 * (h.edges_i[1:] + h.edges_i[:-1])
    cf = 0.5 * (h.edges_f[1:] + h.edges_f[:-1])
    records = []
    for a, ei in enumerate(ci):
        for b, ef in enumerate(cf):
            records.append(
                {
                    "ei": float(ei),
                    "ef": float(ef),
                    "weight": float(h.counts[a, b]),
                    "gaussian": None if h.reference is None else float(h.reference[a, b]),
                }
            )
    summary = {
        "xi": h.xi,
        "xi_se": h.xi_se,
        "xi_exact": h.xi_exact,
        "total_weight": h.total_weight,
        "overflow": h.overflow,
        "moments": {f"M{P}{Q}": v for (P, Q), v in h.moments.items()},
    }
    return records, EXIT_OK, {"summary": summary}


DISPATCH = {"table1": cmd_table1, "moments": cmd_moments, "verify": cmd_verify, "histogram": cmd_histogram}


# ---------------------------------------------------------------------------
# Output


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(records: list[dict]) -> str:
    if not records:
        return ""
    header = list(records[0].keys())
    for r in records[1:]:
        header += [k for k in r if k not in header]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in records:
        writer.writerow([_cell(r.get(k)) for k in header])
    return buf.getvalue()


def to_json(cfg: RunConfig, records: list[dict], extra: dict) -> str:
    meta = {"version": __version__, "command": cfg.command, "params": cfg.params_dict(), **extra}
    if cfg.command in ("moments", "histogram", "verify"):
        meta.update({"mode": cfg.mode, "method": cfg.method, "n_samples": cfg.n_samples, "seed": cfg.seed})
    return json.dumps({"meta": meta, "records": records}, indent=2, allow_nan=False) + "\n"


def _clean(records: list[dict]) -> list[dict]:
    # JSON has no inf/nan; report them as null
    out = []
    for r in records:
        out.append({k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in r.items()})
    return out


# ---------------------------------------------------------------------------
# Argument parsing


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("model")
    for name in ("N", "m", "k", "k0"):
        g.add_argument(f"--{name}", type=int, default=argparse.SUPPRESS)
    g.add_argument("--vh2", type=float, default=argparse.SUPPRESS, help="variance of the k-body matrix elements")
    g.add_argument("--vo2", type=float, default=argparse.SUPPRESS, help="variance of the operator amplitudes")
    g.add_argument("--mode", choices=MODES, default=argparse.SUPPRESS)
    r = parser.add_argument_group("run")
    r.add_argument("--method", choices=METHODS, default=argparse.SUPPRESS)
    r.add_argument("--samples", dest="n_samples", type=int, default=argparse.SUPPRESS)
    r.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    r.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    r.add_argument("--bins", type=int, default=argparse.SUPPRESS, help="histogram bins per axis")
    r.add_argument("--grid", type=_parse_grid, default=argparse.SUPPRESS, help="verify grid as 'N,m,k,k0;N,m,k,k0;...'")
    r.add_argument("--format", dest="output", choices=FORMATS, default=argparse.SUPPRESS)
    r.add_argument("--out", dest="out_path", default=argparse.SUPPRESS, help="write here instead of stdout")
    r.add_argument("--config", default=argparse.SUPPRESS, help="JSON run config; flags override its fields")


def _parse_grid(text: str) -> list:
    try:
        grid = [[int(x) for x in part.split(",")] for part in text.split(";") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if not grid or any(len(g) != 4 for g in grid):
        raise argparse.ArgumentTypeError("each grid point needs four integers N,m,k,k0")
    return grid


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egue-strength",
        description="Bivariate moments and cumulants of EGUE transition strength densities.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "table1": "recompute the reference cumulant table and compare",
        "moments": "moments and cumulants for one parameter set",
        "verify": "closed forms against the Wick oracle (and optionally Monte Carlo)",
        "histogram": "sampled bivariate strength density on a standardized grid",
    }
    for name in COMMANDS:
        _common(sub.add_parser(name, help=helps[name]))
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    overrides = vars(args).copy()
    path = overrides.pop("config", None)
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data.update(overrides)
    return RunConfig.from_dict(data)


def run(cfg: RunConfig) -> tuple[str, int]:
    cfg.validate()
    records, code, extra = DISPATCH[cfg.command](cfg)
    records = _clean(records)
    text = to_csv(records) if cfg.output == "csv" else to_json(cfg, records, extra)
    return text, code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        text, code = run(cfg)
    except (ConfigError, DomainError, CostGuardError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(err), file=sys.stderr)
        return EXIT_CONFIG
    if cfg.out_path:
        with open(cfg.out_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
