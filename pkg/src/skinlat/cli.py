"""``skinlat`` command line: run, validate and list experiments.

Exit status: 0 on success, 2 for an invalid config, 3 when a computation
fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, io
from .errors import SkinlatError
from .experiments import EXPERIMENTS, ConfigError, compute, parse_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3
THREADS_ENV = "SKINLAT_THREADS"


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return parse_config(doc)


def _threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(THREADS_ENV, f"expected an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(THREADS_ENV, "must be >= 1")
        return n
    return None


def run(config_path, out=None, threads=None, seed_check=False):
    """Run one config; returns ``(exit_code, report)``.

    The report lists every written artifact with its SHA-256.  With
    ``seed_check`` the experiment is computed twice and the outputs must be
    byte-identical.
    """
    try:
        cfg = load_config(config_path)
        n_threads = _threads(threads)
    except ConfigError as exc:
        return EXIT_CONFIG, {"status": "invalid", "error": str(exc)}
    out_dir = out or cfg.output_dir or "skinlat-out"
    try:
        artifacts = _compute_limited(cfg, n_threads)
        if seed_check:
            again = _compute_limited(cfg, n_threads)
            changed = sorted(k for k in artifacts if again.get(k) != artifacts[k])
            if changed or set(again) != set(artifacts):
                return EXIT_COMPUTE, {"status": "failed",
                                      "error": f"non-deterministic outputs: {changed}"}
    except (SkinlatError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return EXIT_COMPUTE, {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
    written = []
    for name, data in artifacts.items():
        path = os.path.join(out_dir, name)
        io.atomic_write(path, data)
        written.append({"path": path, "sha256": io.sha256(data), "bytes": len(data)})
    return EXIT_OK, {"status": "ok", "experiment": cfg.experiment, "artifacts": written}


def _compute_limited(cfg, n_threads):
    if n_threads is None:
        return compute(cfg)
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=n_threads):
        return compute(cfg)


def _parser():
    p = argparse.ArgumentParser(prog="skinlat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"skinlat {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.add_argument("--threads", type=int, help=f"BLAS threads (overrides ${THREADS_ENV})")
    r.add_argument("--seed-check", action="store_true",
                   help="compute twice and require byte-identical outputs")
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    sub.add_parser("list-experiments", help="print the experiment kinds")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "list-experiments":
        print("\n".join(EXPERIMENTS))
        return EXIT_OK
    if args.command == "validate":
        try:
            cfg = load_config(args.config)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"ok: {cfg.experiment}")
        return EXIT_OK
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    code, report = run(args.config, args.out, args.threads, args.seed_check)
    if code == EXIT_OK:
        print(json.dumps(report, indent=2))
    else:
        print(f"error: {report['error']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
