"""Command-line interface: ``spatialperm {thermo,spectral,mc,verify}``.

Every run writes its outputs and a ``manifest.json`` (command, resolved
configuration, model hash, seed, version, timestamps, output files) into
the ``--out`` directory.  Exit codes: 0 success, 2 domain error, 3 resource
cap exceeded, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, mcmc, spectral, thermodynamics, verification
from .errors import DomainError, ResourceCapError
from .model_weights import model_from_config

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

EXIT_OK, EXIT_DOMAIN, EXIT_CAP, EXIT_VERIFY = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# config handling


def load_config(path) -> dict:
    """Read a TOML or JSON configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DomainError(f"cannot read config {path}: {exc}") from None
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise DomainError(f"config {path} is not valid {path.suffix[1:] or 'TOML'}: {exc}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _alpha(text) -> float:
    s = str(text).strip().lower()
    return math.inf if s in ("inf", "+inf", "infinity") else float(s)


def _merge(section: dict, args: argparse.Namespace, keys) -> dict:
    """Command-line values override the config section."""
    out = dict(section)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def _model_cfg(cfg: dict, args) -> dict:
    model = dict(cfg.get("model", {}))
    for k in ("kind", "beta", "dim", "table"):
        v = getattr(args, k, None)
        if v is not None:
            model[k] = v
    model.setdefault("kind", "gaussian")
    model.setdefault("beta", 1.0)
    model.setdefault("dim", 3)
    return model


def _model_hash(model_cfg: dict) -> str:
    return hashlib.sha256(json.dumps(model_cfg, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


class Run:
    """Collects outputs and writes the manifest."""

    def __init__(self, args, command: str, config: dict):
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.config = config
        self.seed = args.seed if args.seed is not None else int(np.random.SeedSequence().entropy % 2**64)
        self.started = datetime.now(timezone.utc).isoformat()
        self.outputs: list[str] = []

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def write_manifest(self, model_cfg: dict | None = None, status: str = "ok") -> None:
        manifest = {
            "command": self.command,
            "config": self.config,
            "model_hash": _model_hash(model_cfg) if model_cfg is not None else None,
            "seed": self.seed,
            "version": __version__,
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "outputs": self.outputs,
            "status": status,
        }
        (self.out / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


# ---------------------------------------------------------------------------
# thermo


def cmd_thermo(args, cfg: dict) -> int:
    section = _merge(cfg.get("thermo", {}), args, ("quantity", "mu", "alpha", "rho"))
    model_cfg = _model_cfg(cfg, args)
    model = model_from_config(model_cfg, getattr(args, "config_dir", None))
    q = section.get("quantity", "rhoc")
    mus = [float(x) for x in section.get("mu", [-1.0])]
    alphas = [_alpha(x) for x in section.get("alpha", [math.inf])]
    rhos = [float(x) for x in section.get("rho", [1.0])]
    run = Run(args, "thermo", {"model": model_cfg, "thermo": {**section, "quantity": q}})

    if q in ("p0", "palpha"):
        bad = [m for m in mus if not m < 0]
        if bad:
            raise DomainError(f"pressure requires mu < 0 (strictly negative chemical potential); got {bad}")
    if q == "p0":
        header = ["mu", "value", "est_error"]
        points = [(m,) for m in mus]
        f = lambda m: thermodynamics.ideal_pressure(model, m)  # noqa: E731
    elif q == "palpha":
        header = ["mu", "alpha", "value", "est_error"]
        points = [(m, a) for m in mus for a in alphas]
        f = lambda m, a: thermodynamics.alpha_pressure(model, m, a)  # noqa: E731
    elif q == "rhoc":
        header = ["value", "est_error"]
        points = [()]
        f = lambda: thermodynamics.critical_density(model)  # noqa: E731
    elif q == "rhoc_alpha":
        header = ["alpha", "value", "est_error"]
        points = [(a,) for a in alphas]
        f = lambda a: thermodynamics.critical_density_alpha(model, a)  # noqa: E731
    elif q == "tcshift":
        header = ["rho", "value", "est_error"]
        points = [(r,) for r in rhos]
        f = lambda r: thermodynamics.ThermoResult(  # noqa: E731
            thermodynamics.tc_shift_constant(r), thermodynamics.Method.QUADRATURE, 0.0)
    elif q == "bound":
        header = ["rho", "alpha", "value", "vacuous"]
        points = [(r, a) for r in rhos for a in alphas]
        f = lambda r, a: thermodynamics.thmalpha_lower_bound(model, r, a)  # noqa: E731
    else:
        raise DomainError(f"unknown quantity {q!r}")

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(pool.map(lambda p: f(*p), points))
    rows = []
    for p, r in zip(points, results):
        if isinstance(r, thermodynamics.LowerBound):
            rows.append(list(p) + [r.value, int(r.vacuous)])
        else:
            rows.append(list(p) + [r.value, r.est_error])
    _write_rows(run.path("thermo.csv"), header, rows)
    run.write_manifest(model_cfg)
    for row in rows:
        print(",".join(str(x) for x in row))
    return EXIT_OK


# ---------------------------------------------------------------------------
# spectral


def _spectral_table(section: dict, model_cfg: dict, base_dir):
    alpha = _alpha(section.get("alpha", 0.0))
    if "energies" in section and section["energies"] is not None:
        energies = [float(e) for e in section["energies"]]
        ms = spectral.ModeSet.from_energies(energies, volume=float(section.get("volume", 1.0)))
    else:
        if "L" not in section or section["L"] is None:
            raise DomainError("spectral tasks need a box side L (or a list of mode energies)")
        model = model_from_config(model_cfg, base_dir)
        ms = spectral.build_mode_set(model, float(section["L"]), float(section.get("tail_bound", 1e-10)),
                                     int(section.get("max_modes", spectral.DEFAULT_MAX_MODES)))
    if section.get("N") is not None:
        N = int(section["N"])
    elif section.get("rho") is not None:
        N = int(math.floor(float(section["rho"]) * ms.volume + 1e-9))
    else:
        raise DomainError("spectral tasks need N or rho")
    h = spectral.h_table(alpha, max(N, 1))
    return ms, spectral.partition_table(ms, N, h)


def cmd_spectral(args, cfg: dict) -> int:
    keys = ("task", "L", "N", "rho", "alpha", "tail_bound", "mode", "m", "n", "lam", "eta",
            "samples", "count", "energies", "volume")
    section = _merge(cfg.get("spectral", {}), args, keys)
    model_cfg = _model_cfg(cfg, args)
    task = section.get("task", "logZ")
    run = Run(args, "spectral", {"model": model_cfg, "spectral": {**section, "task": task}})
    if task == "rho" and _alpha(section.get("alpha", 0.0)) != 0.0:
        from .errors import UnsupportedExactError
        raise UnsupportedExactError("task 'rho' has no exact evaluation with alpha > 0; use the mc command")
    ms, table = _spectral_table(section, model_cfg, getattr(args, "config_dir", None))
    rng = np.random.default_rng(run.seed)
    out = run.path("spectral.csv")
    if task == "logZ":
        rows = [[table.N, table.logZ]]
        _write_rows(out, ["N", "logZ"], rows)
    elif task == "marginal":
        k = int(section.get("mode", 0))
        p = spectral.occupation_marginal(table, k)
        rows = [[j, float(v)] for j, v in enumerate(p)]
        _write_rows(out, ["n", "probability"], rows)
    elif task == "rho":
        m, n = int(section.get("m", 1)), int(section.get("n", table.N))
        rows = [[m, n, spectral.expected_cycle_density(table, m, n)]]
        _write_rows(out, ["m", "n", "value"], rows)
    elif task == "mgf":
        lams = [float(x) for x in section.get("lam", [0.0, 0.5, 1.0])]
        rows = [[lam, spectral.mgf_n0(table, lam)] for lam in lams]
        _write_rows(out, ["lambda", "value"], rows)
    elif task == "typical":
        est = spectral.typical_set_probability(table, float(section.get("eta", 0.1)),
                                               int(section.get("samples", 1000)), rng,
                                               rho0=section.get("rho0"))
        rows = [[float(section.get("eta", 0.1)), est.value, est.low, est.high, est.samples]]
        _write_rows(out, ["eta", "value", "ci_low", "ci_high", "samples"], rows)
    elif task == "sample":
        count = int(section.get("count", 1))
        draws = spectral.sample_occupations(table, rng, count) if table.N > 0 else None
        lines = [draws.state(i, rng).to_line() if draws is not None else "" for i in range(count)]
        run.outputs.remove("spectral.csv")
        out = run.path("samples.txt")
        out.write_text("\n".join(lines) + "\n")
        rows = [[line] for line in lines]
    else:
        raise DomainError(f"unknown spectral task {task!r}")
    run.write_manifest(model_cfg)
    for row in rows:
        print(",".join(str(x) for x in row))
    return EXIT_OK


# ---------------------------------------------------------------------------
# mc

MC_FIELDS = {
    "L": float, "N": int, "rho": float, "process": str, "points_file": str, "alpha": _alpha,
    "pair_a": float, "sweeps": int, "burn_in": int, "thinning": int, "point_move_fraction": float,
    "max_displacement": float, "cycle3_fraction": float, "windows": list,
}


def _mc_section(cfg: dict, args) -> dict:
    section = _merge(cfg.get("mc", {}), args, [k for k in MC_FIELDS if k != "windows"])
    clean = {}
    for k, v in section.items():
        if k not in MC_FIELDS:
            raise DomainError(f"mc.{k}: unknown field")
        if v is None:
            continue
        try:
            clean[k] = MC_FIELDS[k](v)
        except (TypeError, ValueError):
            raise DomainError(f"mc.{k}: cannot interpret {v!r}") from None
    if "L" not in clean:
        raise DomainError("mc.L: required field missing")
    if "sweeps" not in clean:
        raise DomainError("mc.sweeps: required field missing")
    return clean


def cmd_mc(args, cfg: dict) -> int:
    model_cfg = _model_cfg(cfg, args)
    section = _mc_section(cfg, args)
    run = Run(args, "mc", {"model": model_cfg, "mc": section})
    model = model_from_config(model_cfg, getattr(args, "config_dir", None))
    rng = np.random.default_rng(run.seed)
    L = section["L"]
    points_file = section.get("points_file")
    if points_file and getattr(args, "config_dir", None) and not Path(points_file).is_absolute():
        points_file = str(Path(args.config_dir) / points_file)
    pts = mcmc.generate_points(section.get("process", "poisson"), L, model.dim, N=section.get("N"),
                               rho=section.get("rho"), rng=rng, path=points_file)
    spec = mcmc.HamiltonianSpec(model, L, alpha=section.get("alpha", 0.0), pair_a=section.get("pair_a", 0.0))
    try:
        config = mcmc.ChainConfig(
            sweeps=section["sweeps"], burn_in=section.get("burn_in"), thinning=section.get("thinning", 1),
            point_move_fraction=section.get("point_move_fraction", 0.0),
            max_displacement=section.get("max_displacement", 1.0), seed=run.seed,
            cycle3_fraction=section.get("cycle3_fraction"))
    except DomainError as exc:
        raise DomainError(f"mc: {exc}") from None
    N = pts.shape[0]
    windows = [tuple(int(x) for x in w) for w in section.get("windows", [[1, 1], [2, N]])]
    trace = mcmc.run_chain(pts, spec, config, windows=windows, rng=rng)
    trace.write_csv(run.path("trace.csv"))
    summary = trace.summary()
    summary["manifest"] = "manifest.json"
    summary["N"] = N
    run.path("summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    run.write_manifest(model_cfg)
    print(json.dumps(_jsonable({"means": summary["means"], "blocked_errors": summary["blocked_errors"],
                                "acceptance": summary["acceptance"]}), sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args, cfg: dict) -> int:
    suites = sorted(verification.SUITES) if args.suite == "all" else [args.suite]
    run = Run(args, "verify", {"suites": suites})
    ok = True
    for name in suites:
        results = verification.run_suite(name, seed=args.seed)
        for r in results:
            print(r.line())
        run.path(f"verify_{name}.json").write_text(verification.report_json(name, results) + "\n")
        ok &= all(r.passed for r in results)
    run.write_manifest(None, status="pass" if ok else "fail")
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# parser


def _add_global(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="TOML or JSON configuration file")
    p.add_argument("--out", default=d("."), help="output directory (default: current)")
    p.add_argument("--seed", type=int, default=d(None), help="RNG seed (drawn and recorded if absent)")
    p.add_argument("--threads", type=int, default=d(1), help="worker threads for independent grid points")


def _add_model(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--kind", help="gaussian, exponential3d, powerlaw1d or tabulated")
    g.add_argument("--beta", type=float, help="length/temperature parameter")
    g.add_argument("--dim", type=int, help="spatial dimension")
    g.add_argument("--table", help="CSV of (r, g(r)) for the tabulated kind")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spatialperm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_global(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("thermo", help="pressures, critical densities, T_c shift, lower bound")
    _add_global(p, suppress=True)
    _add_model(p)
    p.add_argument("--quantity", choices=["p0", "palpha", "rhoc", "rhoc_alpha", "tcshift", "bound"])
    p.add_argument("--mu", type=_float_list, help="comma-separated chemical potentials (< 0)")
    p.add_argument("--alpha", type=lambda s: [_alpha(x) for x in s.split(",")],
                   help="comma-separated 2-cycle penalties ('inf' allowed)")
    p.add_argument("--rho", type=_float_list, help="comma-separated densities")
    p.set_defaults(func=cmd_thermo)

    p = sub.add_parser("spectral", help="exact occupation-number computations")
    _add_global(p, suppress=True)
    _add_model(p)
    p.add_argument("--task", choices=["logZ", "marginal", "rho", "mgf", "typical", "sample"])
    p.add_argument("--L", type=float, help="box side")
    p.add_argument("--N", type=int, help="number of particles")
    p.add_argument("--rho", type=float, help="density (N = floor(rho L^d))")
    p.add_argument("--alpha", type=_alpha, help="2-cycle penalty ('inf' allowed)")
    p.add_argument("--tail-bound", dest="tail_bound", type=float, help="mode truncation tail bound")
    p.add_argument("--energies", type=_float_list, help="explicit mode energies (toy mode set)")
    p.add_argument("--volume", type=float, help="volume for an explicit mode set")
    p.add_argument("--mode", type=int, help="mode index for task=marginal")
    p.add_argument("--m", type=int, help="lower cycle length for task=rho")
    p.add_argument("--n", type=int, help="upper cycle length for task=rho")
    p.add_argument("--lam", type=_float_list, help="comma-separated lambdas for task=mgf")
    p.add_argument("--eta", type=float, help="eta for task=typical")
    p.add_argument("--samples", type=int, help="sample count for task=typical")
    p.add_argument("--count", type=int, help="number of occupation states for task=sample")
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("mc", help="Metropolis chain over points and permutations")
    _add_global(p, suppress=True)
    _add_model(p)
    p.add_argument("--L", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--process", choices=["poisson", "lattice", "file"])
    p.add_argument("--points-file", dest="points_file")
    p.add_argument("--alpha", type=_alpha)
    p.add_argument("--pair-a", dest="pair_a", type=float)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thinning", type=int)
    p.add_argument("--point-move-fraction", dest="point_move_fraction", type=float)
    p.add_argument("--max-displacement", dest="max_displacement", type=float)
    p.add_argument("--cycle3-fraction", dest="cycle3_fraction", type=float)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("verify", help="run a named verification suite")
    _add_global(p, suppress=True)
    p.add_argument("--suite", required=True, choices=sorted(verification.SUITES) + ["all"])
    p.set_defaults(func=cmd_verify)
    return parser


_LIST_FLAGS = ("--mu", "--lam", "--alpha", "--rho", "--energies")


def _attach_negative_lists(argv: list[str]) -> list[str]:
    """Rewrite ``--mu -1,-0.5`` as ``--mu=-1,-0.5`` so argparse does not
    mistake a negative list for an option."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _LIST_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            try:
                _float_list(argv[i + 1])
            except argparse.ArgumentTypeError:
                pass
            else:
                out.append(f"{tok}={argv[i + 1]}")
                i += 2
                continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(_attach_negative_lists(argv))
    try:
        cfg = load_config(args.config) if args.config else {}
        args.config_dir = str(Path(args.config).resolve().parent) if args.config else None
        if args.threads < 1:
            raise DomainError("--threads must be at least 1")
        return args.func(args, cfg)
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    raise SystemExit(main())
