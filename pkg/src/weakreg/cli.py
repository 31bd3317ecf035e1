"""
Command-line entry point.

    weakreg <command> [--input PATH] [--output PATH] [--epsilon E] [--k K] ...

Every command writes one JSON report.  Exit status: 0 success, 1 a
certificate or check failed, 2 usage / input errors (the report then holds an
``error`` object).  Reports are deterministic for a fixed configuration except
for the ``timings`` field.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

from . import io, selftest
from .errors import ConvergenceError, WeakRegError
from .greedy import DecompositionCertificate, greedy_decompose, verify_certificate
from .kernel import Kernel, cut_norm
from .partitions import Partition, balanced_refine, decimal_fraction
from .poly import concentrate_pipeline
from .regularity import interpret_certificate, interval_regularity_partition, szemeredi_partition

COMMANDS = ("cutnorm", "decompose", "partition", "szemeredi", "interval", "poly-concentrate", "verify", "selftest")

DEFAULTS = {
    "epsilon": None,
    "k": 9,
    "seed": 0,
    "restarts": 8,
    "exact_threshold": 20,
    "mode": "exact",
    "input": None,
    "output": None,
    "threads": 1,
    "certificate": None,
    "partition": None,
    "nodes": None,
    "normalize": False,
}

EPSILON_DEFAULTS = {"partition": 0.5, "szemeredi": 0.25, "interval": 0.2, "poly-concentrate": 0.1}


class UsageError(WeakRegError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weakreg", description="Weak and strong regularity toolkit")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key-value JSON; command-line flags override it")
    parser.add_argument("--input", "-i")
    parser.add_argument("--output", "-o")
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--k", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--restarts", type=int)
    parser.add_argument("--exact-threshold", type=int, dest="exact_threshold")
    parser.add_argument("--mode", choices=("exact", "heuristic"))
    parser.add_argument("--threads", type=int)
    parser.add_argument("--certificate", help="certificate JSON for the verify command")
    parser.add_argument("--partition", help="starting partition JSON for szemeredi/interval")
    parser.add_argument("--nodes", type=int, help="vertex count for edge-list inputs")
    parser.add_argument("--normalize", action="store_true", default=None,
                        help="rescale a kernel to unit norm before decomposing")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    config = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        unknown = set(from_file) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        config.update(from_file)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            config[key] = val
    config["command"] = args.command
    if config["epsilon"] is None:
        config["epsilon"] = EPSILON_DEFAULTS.get(args.command)
    eps = config["epsilon"]
    if args.command in EPSILON_DEFAULTS and not (eps is not None and 0 < eps < 1):
        raise UsageError(f"--epsilon must lie in (0, 1), got {eps}")
    if args.command not in ("selftest", "partition") and not config["input"]:
        raise UsageError(f"{args.command} needs --input")
    return config


def _kernel_summary(k: Kernel) -> dict:
    return {"shape": list(k.shape), "scale": k.scale, "norm": k.norm()}


def cmd_cutnorm(cfg):
    k = io.read_kernel(cfg["input"])
    value, witness = cut_norm(k, cfg["mode"], exact_threshold=cfg["exact_threshold"],
                              restarts=cfg["restarts"], seed=cfg["seed"])
    exact = cfg["mode"] == "exact"
    return {"kernel": _kernel_summary(k), "value": value, "witness": witness.to_dict(),
            "is_lower_bound": not exact}, exact, True


def _load_decomposable(cfg) -> tuple[Kernel, float]:
    k = io.read_kernel(cfg["input"])
    factor = 1.0
    if cfg["normalize"] and k.norm() > 1:
        factor = 1.0 / k.norm()
        k = Kernel(k.values * factor, k.scale)
    return k, factor


def cmd_decompose(cfg):
    k, factor = _load_decomposable(cfg)
    cert = greedy_decompose(k, cfg["k"], cfg["mode"], cfg["seed"], cfg["exact_threshold"], cfg["restarts"])
    check_mode = "exact" if cfg["mode"] == "exact" else "heuristic"
    report = verify_certificate(k, cert, check_mode, cfg["exact_threshold"])
    results = {
        "kernel": _kernel_summary(k),
        "rescale_factor": factor,
        "certificate": cert.to_dict(),
        "bound": 1 / math.sqrt(cfg["k"]),
        "verification": report.to_dict(),
        "plot": {"energy_curve": list(cert.energies), "coefficients": [c for c, _ in cert.terms]},
    }
    return results, cert.exact, report.passed


def cmd_verify(cfg):
    if not cfg["certificate"]:
        raise UsageError("verify needs --certificate")
    k, _ = _load_decomposable(cfg)
    raw = io.read_json(cfg["certificate"])
    raw = raw.get("results", {}).get("certificate", raw)
    try:
        cert = DecompositionCertificate.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise io.FormatError(f"malformed certificate: {exc}") from None
    report = verify_certificate(k, cert, cfg["mode"], cfg["exact_threshold"])
    return {"verification": report.to_dict()}, cfg["mode"] == "exact" and cert.exact, report.passed


def cmd_partition(cfg):
    if cfg["input"]:
        p = io.read_partition(cfg["input"])
    elif cfg["nodes"]:
        p = Partition.trivial(cfg["nodes"])
    else:
        raise UsageError("partition needs --input or --nodes")
    eps = cfg["epsilon"]
    q, small = balanced_refine(p, eps)
    e = decimal_fraction(eps)
    small_mass = sum(len(q[i]) for i in small)
    checks = {
        "size_bound": len(q) * e <= (1 + e) * len(p),
        "small_mass_bound": small_mass <= e * p.n,
        "refines_input": q.refines(p),
    }
    results = {
        "input_blocks": len(p),
        "refined": q.to_dict(),
        "small_blocks": sorted(small),
        "small_mass": small_mass,
        "size_bound": float((1 + e) * len(p) / e),
        "checks": checks,
    }
    return results, True, all(checks.values())


def _read_graph_and_partition(cfg):
    g = io.read_graph(cfg["input"], cfg["nodes"])
    p = io.read_partition(cfg["partition"]) if cfg["partition"] else None
    return g, p


def _regularity_results(cert, interpret: bool):
    results = {"certificate": cert.to_dict(),
               "plot": {"pair_scores": [s.score for _, s in sorted(cert.pair_scores.items())],
                        "energy_curve": [r["energy"] for r in cert.rounds]}}
    ok = cert.passed
    if interpret:
        if cert.eps <= 0.25:
            interp = interpret_certificate(cert)
            results["interpretation"] = interp
            ok = ok and interp["passed"]
        else:
            results["interpretation"] = {"skipped": "needs eps <= 1/4"}
    results["proved"] = ok and cert.exact
    return results, cert.exact, ok


def cmd_szemeredi(cfg):
    g, p = _read_graph_and_partition(cfg)
    threshold = cfg["exact_threshold"] if cfg["mode"] == "exact" else 0
    try:
        cert = szemeredi_partition(g, p, cfg["epsilon"], cfg["seed"], threshold, cfg["restarts"], cfg["threads"])
    except ConvergenceError as exc:
        return {"error": str(exc), "certificate": exc.certificate.to_dict()}, False, False
    return _regularity_results(cert, interpret=True)


def cmd_interval(cfg):
    g, p = _read_graph_and_partition(cfg)
    cert = interval_regularity_partition(g, p, cfg["epsilon"], cfg["threads"])
    return _regularity_results(cert, interpret=True)


def cmd_poly(cfg):
    p = io.read_poly(cfg["input"])
    q, k, value, report = concentrate_pipeline(p, cfg["epsilon"], cfg["k"], cfg["seed"], cfg["restarts"])
    results = {"Q": q.tolist(), "k": k, "value": value, "report": report}
    return results, report["exact"], report["concentrated"]


def cmd_selftest(cfg):
    res = selftest.run(cfg["seed"])
    return res, True, res["passed"]


HANDLERS = {
    "cutnorm": cmd_cutnorm,
    "decompose": cmd_decompose,
    "partition": cmd_partition,
    "szemeredi": cmd_szemeredi,
    "interval": cmd_interval,
    "poly-concentrate": cmd_poly,
    "verify": cmd_verify,
    "selftest": cmd_selftest,
}


def run(config: dict) -> tuple[int, dict]:
    """Execute a resolved configuration; returns (exit code, report)."""
    start = time.perf_counter()
    report = {"command": config["command"], "config": {k: v for k, v in sorted(config.items())}}
    try:
        if config.get("input"):
            report["input_digest"] = io.digest(config["input"])
        results, exact, ok = HANDLERS[config["command"]](config)
    except (WeakRegError, OSError, ValueError) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        report["status"] = "error"
        report["timings"] = {"total_seconds": time.perf_counter() - start}
        return 2, report
    report["results"] = results
    report["exact"] = bool(exact)
    report["status"] = "ok" if ok else "failed"
    # a non-exact sub-result never counts as a proof
    report["proved"] = bool(ok and exact)
    report["timings"] = {"total_seconds": time.perf_counter() - start}
    return (0 if ok else 1), report


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
    except WeakRegError as exc:
        io.write_json({"command": args.command, "status": "error",
                       "error": {"type": type(exc).__name__, "message": str(exc)}}, args.output)
        return 2
    code, report = run(config)
    try:
        io.write_json(report, config["output"])
    except OSError as exc:
        sys.stderr.write(f"cannot write output: {exc}\n")
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
