"""Command-line entry point: simulate, externality, demand, duopoly.

Every run validates its inputs before doing any work, computes all results in
memory, and only then writes files, so a rejected configuration leaves the
output directory untouched. Data files (CSV and summary JSON) carry no
timestamps; run times go into a separate manifest.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import platform
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__, duopoly, externality, netsim
from .config import ConfigError, ScenarioConfig, SharingRegime, load_yaml
from .demand import equilibria, fe_demand
from .externality import (DEFAULT_GRID, SLOPE_REGIONS, ExternalityCurve, OpenResourceScenario,
                          PointCache, ResourceCaps)

EXIT_OK, EXIT_VALIDATION, EXIT_ECONOMICS, EXIT_IO = 0, 2, 3, 4
CACHE_ENV = "MMWSHARE_CACHE_DIR"
COMMANDS = ("simulate", "externality", "demand", "duopoly")

log = logging.getLogger("mmwshare")


class CliError(Exception):
    def __init__(self, message, code=EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- inputs

def preset_names():
    root = resources.files("mmwshare").joinpath("presets")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> dict:
    if name not in preset_names():
        raise CliError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    text = resources.files("mmwshare").joinpath(f"presets/{name}.yaml").read_text()
    return yaml.safe_load(text)


def _job(args, command):
    """The job mapping from --preset or --config, plus the config's directory."""
    base_dir = None
    if args.preset and args.config:
        raise CliError("use either --preset or --config, not both")
    if args.preset:
        job = load_preset(args.preset)
    elif args.config:
        path = Path(args.config)
        try:
            job = load_yaml(path)
        except OSError as exc:
            raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
        base_dir = path.parent
    else:
        job = {}
    if job is None:
        job = {}
    if not isinstance(job, dict):
        raise ConfigError(["<root>: expected a mapping"])
    if "command" not in job and "operators" in job:
        job = {"command": "simulate", "scenario": job}
    if job.get("command", command) != command:
        raise CliError(f"configuration is for {job['command']!r}, not {command!r}")
    return job, base_dir


def _overrides(args, d: dict) -> dict:
    d = dict(d)
    for key in ("seed", "slots", "drops"):
        val = getattr(args, key, None)
        if val is not None:
            d[key] = val
    return d


def _base_config(args, job, base_dir) -> ScenarioConfig:
    """Radio settings for the size sweeps; operators are filled in per point."""
    base = _overrides(args, job.get("base") or {})
    base.setdefault("operators", [{"bandwidth_hz": 1.0, "bs_density": 1.0, "ue_density": 1.0}])
    return ScenarioConfig.from_dict(base, base_dir)


def _grid(value):
    if value is None or value == "default":
        return DEFAULT_GRID
    if isinstance(value, str):
        try:
            value = [float(x) for x in value.split(",") if x.strip()]
        except ValueError:
            raise CliError(f"grid: cannot parse {value!r}") from None
    grid = sorted(float(x) for x in value)
    if not grid or any(not 0 < x <= 1 for x in grid):
        raise CliError("grid: points must lie in (0, 1]")
    return tuple(grid)


def _scenarios(values):
    try:
        return [OpenResourceScenario(str(v).upper()) for v in values]
    except ValueError as exc:
        raise CliError(f"scenario: {exc}") from None


def _caps(job):
    try:
        return ResourceCaps(**{k: float(v) for k, v in (job.get("caps") or {}).items()})
    except (TypeError, ValueError) as exc:
        raise CliError(f"caps: {exc}") from None


def _float_list(text, what):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise CliError(f"{what}: cannot parse {text!r}") from None


def cache_dir() -> Path:
    if os.environ.get(CACHE_ENV):
        return Path(os.environ[CACHE_ENV])
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "mmwshare"


# ---------------------------------------------------------------- outputs

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    return str(x)


def csv_text(header: dict, columns, rows) -> str:
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class Outputs:
    """Collects files in memory and writes them in one go."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.files = {}

    def add(self, name, text):
        self.files[name] = text

    def commit(self):
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
            for name, text in self.files.items():
                path = self.dir / name
                tmp = path.with_name(path.name + ".tmp")
                tmp.write_text(text)
                os.replace(tmp, path)
        except OSError as exc:
            raise CliError(f"cannot write to {self.dir}: {exc}", EXIT_IO) from exc
        return [str(self.dir / n) for n in self.files]


def _manifest(command, args, started, hashes, outputs, extra=None):
    import numba
    import scipy
    return {
        "command": command,
        "preset": args.preset,
        "config": args.config,
        "seed": getattr(args, "seed", None),
        "config_hashes": hashes,
        "versions": {"mmwshare": __version__, "numpy": np.__version__, "numba": numba.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
        "started_at": started,
        "finished_at": _now(),
        "outputs": outputs,
        **(extra or {}),
    }


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _header(config_hash, seed, **more):
    return {"mmwshare": __version__, "config_hash": config_hash,
            "seed": "none" if seed is None else seed, **more}


# ---------------------------------------------------------------- commands

RATE_COLUMNS = ("drop", "operator", "ue_index", "rate_bps", "link_class")
CURVE_COLUMNS = ("scenario", "n", "h", "ci_lo", "ci_hi", "raw_rate_bps")


def _rate_summary(dist: netsim.RateDistribution) -> dict:
    def block(r):
        if r.size == 0:
            return {"n_ue": 0}
        rng = np.random.default_rng([dist.config.seed, 0xB007])
        from .stats import bootstrap_ci, fifth_percentile
        lo, hi = bootstrap_ci(r, rng=rng)
        return {"n_ue": int(r.size), "mean_bps": float(r.mean()), "median_bps": float(np.median(r)),
                "p5_bps": fifth_percentile(r), "p5_ci95_bps": [lo, hi],
                "zero_rate_fraction": float(np.mean(r == 0))}
    ops = sorted(set(dist.operator.tolist()))
    return {"all": block(dist.rates), **{f"operator_{o + 1}": block(dist.for_operator(o)) for o in ops}}


def cmd_simulate(args) -> int:
    started = _now()
    job, base_dir = _job(args, "simulate")
    scen = _overrides(args, job.get("scenario") or {})
    regimes = args.regime or job.get("regimes") or [scen.get("regime", "NO_SHARING")]
    if not scen:
        raise CliError("simulate needs --preset or --config")
    cfgs = [ScenarioConfig.from_dict({**scen, "regime": r}, base_dir) for r in regimes]

    out = Outputs(args.out_dir)
    hashes = {}
    for cfg in cfgs:
        log.info("simulating %s / %s (%d drops x %d slots)", cfg.name, cfg.regime.value,
                 cfg.drops, cfg.slots)
        dist = netsim.simulate(cfg, threads=args.threads)
        stem = f"{cfg.name}_{cfg.regime.value.lower()}"
        h = cfg.config_hash()
        hashes[stem] = h
        rows = zip(dist.drop, dist.operator + 1, dist.ue_index, dist.rates,
                   (netsim.LINK_CLASS_NAMES[int(c)] for c in dist.link_class))
        out.add(f"{stem}_rates.csv", csv_text(_header(h, cfg.seed, regime=cfg.regime.value),
                                              RATE_COLUMNS, rows))
        out.add(f"{stem}_summary.json", json_text({"config_hash": h, "seed": cfg.seed,
                                                   "config": cfg.to_dict(),
                                                   "rates": _rate_summary(dist)}))
    paths = out.commit()
    _write_manifest(args, "simulate", started, hashes, paths)
    return EXIT_OK


def _write_manifest(args, command, started, hashes, paths, extra=None):
    m = Outputs(args.out_dir)
    m.add(f"manifest_{command}.json", json_text(_manifest(command, args, started, hashes, paths, extra)))
    m.commit()


def _sweep_inputs(args, job, base_dir):
    scenarios = _scenarios(args.scenario or job.get("scenarios") or [s.value for s in OpenResourceScenario])
    grid = _grid(args.grid if args.grid is not None else job.get("grid"))
    caps = _caps(job)
    base = _base_config(args, job, base_dir)
    return scenarios, grid, caps, base


def _run_curves(args, scenarios, grid, caps, base):
    cache = None if args.no_cache else PointCache(cache_dir())
    norm = externality.baseline_rate(base, caps, cache, args.threads)
    curves = []
    for s in scenarios:
        log.info("network-size sweep: %s (%d points)", s.value, len(grid))
        curves.append(externality.estimate_h(s, caps, grid, base, norm, cache, args.threads))
    return curves


def _curve_hash(base, caps, grid, scenario):
    return digest({"base": base.config_hash(), "caps": vars(caps), "grid": list(grid),
                   "scenario": OpenResourceScenario(scenario).value})


def cmd_externality(args) -> int:
    started = _now()
    job, base_dir = _job(args, "externality")
    scenarios, grid, caps, base = _sweep_inputs(args, job, base_dir)
    curves = _run_curves(args, scenarios, grid, caps, base)

    out = Outputs(args.out_dir)
    hashes, slopes, points = {}, {}, {}
    for c in curves:
        stem = c.scenario.value.lower()
        h = _curve_hash(base, caps, grid, c.scenario)
        hashes[stem] = h
        # the n = 0 anchor goes in the header so the body has one row per grid point
        anchor = ",".join(_fmt(v) for v in (c.h[0], c.ci_lo[0], c.ci_hi[0], c.raw_rate[0]))
        rows = ((c.scenario.value, n, hv, lo, hi, raw)
                for n, hv, lo, hi, raw in zip(c.n[1:], c.h[1:], c.ci_lo[1:], c.ci_hi[1:], c.raw_rate[1:]))
        out.add(f"{stem}_curve.csv", csv_text(_header(h, base.seed, normalization_bps=repr(c.normalization_bps),
                                                      slots=base.slots, drops=base.drops,
                                                      h_at_zero=anchor),
                                              CURVE_COLUMNS, rows))
        n_min = SLOPE_REGIONS[c.scenario]
        try:
            slopes[c.scenario.value] = {"n_min": n_min, "slope": externality.fit_slope(c, n_min)}
        except ValueError:
            slopes[c.scenario.value] = {"n_min": n_min, "slope": None}
        points[stem] = [{k: p.get(k) for k in ("n", "config_hash", "computed_at", "cached")}
                        for p in c.meta["points"]]
    out.add("externality_slopes.json", json_text({"seed": base.seed, "slopes": slopes}))
    paths = out.commit()
    _write_manifest(args, "externality", started, hashes, paths, {"points": points})
    return EXIT_OK


def read_curve_csv(path) -> ExternalityCurve:
    """Load a curve written by the externality command."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            k, _, v = line[1:].partition(":")
            meta[k.strip()] = v.strip()
        elif line.strip():
            body.append(line)
    rows = list(csv.DictReader(body))
    if not rows or set(CURVE_COLUMNS) - set(rows[0]):
        raise CliError(f"{path}: expected columns {', '.join(CURVE_COLUMNS)}")
    try:
        cols = {k: [float(r[k]) for r in rows] for k in CURVE_COLUMNS[1:]}
        if "h_at_zero" in meta and cols["n"][0] > 0:
            h0, lo0, hi0, raw0 = (float(v) for v in meta["h_at_zero"].split(","))
            for k, v in zip(("n", "h", "ci_lo", "ci_hi", "raw_rate_bps"), (0.0, h0, lo0, hi0, raw0)):
                cols[k].insert(0, v)
        col = lambda k: np.array(cols[k])
        return ExternalityCurve(OpenResourceScenario(rows[0]["scenario"]), col("n"), col("h"),
                                col("ci_lo"), col("ci_hi"), col("raw_rate_bps"),
                                float(meta.get("normalization_bps", "nan")),
                                {"source": str(path), **meta})
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from exc


DEMAND_COLUMNS = ("n", "p", "revenue")


def cmd_demand(args) -> int:
    started = _now()
    job, base_dir = _job(args, "demand")
    omega_hat = float(args.omega_hat if args.omega_hat is not None else job.get("omega_hat", 1.0))
    costs = _float_list(args.cost, "cost") if args.cost is not None else [float(c) for c in job.get("costs", [0.1])]
    if omega_hat <= 0:
        raise CliError("omega_hat must be positive")
    if not costs or any(c < 0 for c in costs):
        raise CliError("costs must be a nonempty list of nonnegative numbers")

    labelled = []  # (label, h, grid, config hash, seed)
    if args.analytic:
        grid = np.linspace(0.0, 1.0, 201)
        labelled.append(("analytic", lambda n: np.asarray(n, dtype=float), grid,
                         digest({"analytic": "h(n)=n"}), None))
    elif args.curve:
        for p in args.curve:
            c = read_curve_csv(p)
            labelled.append((c.scenario.value.lower(), c, c.n, c.meta.get("config_hash", ""),
                             c.meta.get("seed")))
    else:
        if "scenarios" not in job and args.scenario is None:
            raise CliError("demand needs --analytic, --curve or a preset with scenarios")
        scenarios, grid, caps, base = _sweep_inputs(args, job, base_dir)
        for c in _run_curves(args, scenarios, grid, caps, base):
            labelled.append((c.scenario.value.lower(), c, c.n,
                             _curve_hash(base, caps, grid, c.scenario), base.seed))

    out = Outputs(args.out_dir)
    hashes = {}
    infeasible = []
    for label, h, grid, src_hash, seed in labelled:
        d = fe_demand(h, omega_hat, grid=grid)
        if not np.max(d.p) > 0:
            infeasible.append(label)
        key = digest({"source": src_hash, "omega_hat": omega_hat, "costs": costs})
        hashes[label] = key
        hdr = _header(key, seed, source_hash=src_hash, omega_hat=repr(omega_hat))
        out.add(f"{label}_demand.csv", csv_text(hdr, DEMAND_COLUMNS, zip(d.n, d.p, d.revenue)))
        eqs = [equilibria(d, c).to_dict() for c in costs]
        out.add(f"{label}_equilibria.json", json_text({"config_hash": key, "seed": seed,
                                                       "source_hash": src_hash,
                                                       "omega_hat": omega_hat, "results": eqs}))
    paths = out.commit()
    _write_manifest(args, "demand", started, hashes, paths)
    if infeasible:
        log.error("demand is zero everywhere for: %s", ", ".join(infeasible))
        return EXIT_ECONOMICS
    return EXIT_OK


def _omega_grid(args, job):
    bounds = dict(job.get("omega") or {})
    for key, arg in (("start", "omega_min"), ("stop", "omega_max"), ("step", "omega_step")):
        if getattr(args, arg) is not None:
            bounds[key] = getattr(args, arg)
    start, stop, step = (float(bounds.get(k, d)) for k, d in
                         (("start", 1.5), ("stop", 4.0), ("step", 0.05)))
    if step <= 0 or stop < start:
        raise CliError("omega grid: need step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def cmd_duopoly(args) -> int:
    started = _now()
    job, _ = _job(args, "duopoly")
    q_hat = float(args.q_hat if args.q_hat is not None else job.get("q_hat", 1.5))
    if not q_hat > 0:
        raise CliError("q_hat must be positive")
    mus = _float_list(args.mu, "mu") if args.mu is not None else [float(m) for m in job.get("mu", duopoly.DEFAULT_MU)]
    if not mus:
        raise CliError("mu: need at least one value")
    omegas = _omega_grid(args, job)
    rows = duopoly.sweep(omegas, mus, q_hat)
    key = digest({"q_hat": q_hat, "omega": omegas, "mu": mus})
    out = Outputs(args.out_dir)
    out.add("duopoly_sweep.csv", csv_text(_header(key, None, q_hat=repr(q_hat)), duopoly.SWEEP_COLUMNS,
                                          ([getattr(r, c) for c in duopoly.SWEEP_COLUMNS] for r in rows)))
    paths = out.commit()
    _write_manifest(args, "duopoly", started, {"duopoly_sweep": key}, paths)
    if not any(r.feasible for r in rows):
        log.error("no admissible (omega_hat, mu) cell in the sweep")
        return EXIT_ECONOMICS
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmwshare", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mmwshare {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, radio=True):
        p.add_argument("--preset", help=f"bundled recipe: {', '.join(preset_names())}")
        p.add_argument("--config", help="YAML file (scenario or recipe)")
        p.add_argument("--out-dir", default="out")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, default=1, help="worker processes for drops")
        p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
        if radio:
            p.add_argument("--slots", type=int, help="override slots per drop")
            p.add_argument("--drops", type=int, help="override number of drops")

    p = sub.add_parser("simulate", help="per-UE rate distributions for a scenario")
    common(p)
    p.add_argument("--regime", action="append", choices=[r.value for r in SharingRegime],
                   help="run only these regimes (repeatable)")

    def sweep_opts(p):
        p.add_argument("--scenario", action="append",
                       choices=[s.value for s in OpenResourceScenario])
        p.add_argument("--grid", help="comma-separated network sizes, or 'default'")
        p.add_argument("--no-cache", action="store_true", help=f"ignore the point cache (${CACHE_ENV})")

    p = sub.add_parser("externality", help="network-size sweeps and h(n) curves")
    common(p)
    sweep_opts(p)

    p = sub.add_parser("demand", help="fulfilled-expectations demand and equilibria")
    common(p)
    sweep_opts(p)
    p.add_argument("--curve", action="append", help="curve CSV from the externality command")
    p.add_argument("--analytic", action="store_true", help="use h(n) = n instead of a curve")
    p.add_argument("--omega-hat", type=float)
    p.add_argument("--cost", help="comma-separated marginal costs")

    p = sub.add_parser("duopoly", help="duopoly equilibrium sweep")
    common(p, radio=False)
    p.add_argument("--q-hat", type=float)
    p.add_argument("--omega-min", type=float)
    p.add_argument("--omega-max", type=float)
    p.add_argument("--omega-step", type=float)
    p.add_argument("--mu", help="comma-separated network-effect intensities")
    return parser


HANDLERS = {"simulate": cmd_simulate, "externality": cmd_externality,
            "demand": cmd_demand, "duopoly": cmd_duopoly}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if getattr(args, "threads", 1) < 1:
            raise CliError("--threads must be >= 1")
        return HANDLERS[args.command](args)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except duopoly.GameError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ECONOMICS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
