"""``lambda-knob`` scenario runner.

Exit codes: 0 success, 1 usage or validation error, 2 numerical error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import PRESETS, Scenario, load_config, preset, resolve, set_value
from .model import NumericalError, ValidationError
from .oracle import compare, random_drives
from .pulse import propagate
from .response import (chi_norm, group_index, knob_scan, worker_count)

log = logging.getLogger("lambda_knob")

SUBCOMMANDS = ("susceptibility", "group-index", "knob-scan", "pulse", "oracle-check",
               "presets")

# Short flag aliases for the dotted ``--section.key value`` overrides.
ALIASES = {
    "omega-in-gamma": "drives.Omega_in_gamma",
    "g-in-gamma": "drives.G_in_gamma",
    "delta2-in-gamma": "drives.Delta2_in_gamma",
    "delta3-in-gamma": "drives.Delta3_in_gamma",
    "gamma": "atom.gamma",
    "density": "atom.density",
    "lambda13": "atom.lambda13",
    "eta": "atom.prefactor_eta",
    "doppler-delta": "doppler.delta",
    "pulse-gamma": "pulse.Gamma",
    "length": "pulse.L",
    "draws": "oracle.draws",
    "seed": "oracle.seed",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lambda-knob",
                description="Probe response of a Λ atom with a lower-level coupling field.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", type=Path, help="JSON config or run manifest")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--nodes", type=int, help="Doppler quadrature nodes")
    p.add_argument("--no-doppler", action="store_true")
    p.add_argument("--threads", type=int, help="worker cap (else LAMBDA_KNOB_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_overrides(extra: list[str]) -> list[tuple[str, object]]:
    out = []
    it = iter(extra)
    for flag in it:
        if not flag.startswith("--"):
            raise UsageError(f"unexpected argument {flag!r}")
        name, eq, value = flag[2:].partition("=")
        if not eq:
            try:
                value = next(it)
            except StopIteration:
                raise UsageError(f"flag {flag} needs a value") from None
        key = ALIASES.get(name, name)
        if "." not in key:
            raise UsageError(f"unknown flag --{name}")
        out.append((key, _parse_value(value)))
    return out


def fmt(x: float) -> str:
    return f"{x:.16e}"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o)}")


def run_susceptibility(sc: Scenario, out: Path, workers: int) -> dict:
    gamma = sc.params.gamma
    chi = chi_norm(sc.params, sc.drives, sc.probe.Delta1, sc.doppler)
    rows = [[fmt(d / gamma), fmt(c.real), fmt(c.imag)]
            for d, c in zip(sc.probe.Delta1, chi)]
    path = out / "susceptibility.csv"
    write_atomic(path, _csv_text(["Delta1_over_gamma", "Re_chi_norm", "Im_chi_norm"], rows))
    return {"files": [path.name], "eta": sc.params.eta}


def run_group_index(sc: Scenario, out: Path, workers: int) -> dict:
    res = group_index(sc.params, sc.drives, 0.0, sc.doppler)
    summary = {
        "n_g": res.n_g, "n_g_half_step": res.n_g_half_step,
        "derivative_converged": res.converged, "step": res.step,
        "chi_phys": res.chi, "im_ratio": res.im_ratio,
        "doppler": sc.doppler is not None,
    }
    write_atomic(out / "group_index.json", _json_text(summary))
    return {"files": ["group_index.json"], **summary}


def run_knob_scan(sc: Scenario, out: Path, workers: int) -> dict:
    if sc.omega_grid is None:
        raise ValidationError("knob-scan needs a 'knob' section with an Omega grid")
    gamma = sc.params.gamma
    scans = [knob_scan(sc.params, sc.drives, sc.omega_grid, None, workers)]
    if sc.doppler is not None:
        scans.append(knob_scan(sc.params, sc.drives, sc.omega_grid, sc.doppler, workers))
    rows = []
    for scan in scans:
        flag = int(scan.doppler)
        rows += [[fmt(w / gamma), fmt(n), flag]
                 for w, n in zip(scan.omega_grid, scan.ng_values)]
    write_atomic(out / "knob_scan.csv",
                 _csv_text(["Omega_over_gamma", "n_g", "doppler_flag"], rows))
    summary = {
        "scans": [{"doppler_flag": int(s.doppler),
                   "crossovers_over_gamma": [[a / gamma, b / gamma] for a, b in s.crossovers],
                   "skipped_over_gamma": [w / gamma for w in s.skipped]}
                  for s in scans],
    }
    write_atomic(out / "knob_scan.json", _json_text(summary))
    return {"files": ["knob_scan.csv", "knob_scan.json"], **summary}


def run_pulse(sc: Scenario, out: Path, workers: int) -> dict:
    if sc.pulse is None:
        raise ValidationError("pulse subcommand needs a 'pulse' section")
    trace = propagate(sc.pulse, sc.params, sc.drives, sc.doppler)
    ng = group_index(sc.params, sc.drives, 0.0, sc.doppler).n_g
    tau = sc.pulse.tau
    keep = np.abs(trace.t - trace.peak_delay / 2) <= 8 * tau + abs(trace.peak_delay)
    peak = trace.vacuum.max()
    rows = [[fmt(t * 1e6), fmt(v / peak), fmt(m / peak)]
            for t, v, m in zip(trace.t[keep], trace.vacuum[keep], trace.medium[keep])]
    write_atomic(out / "pulse.csv",
                 _csv_text(["t_microseconds", "vacuum_intensity", "medium_intensity"], rows))
    summary = {
        "peak_delay_us": trace.peak_delay * 1e6,
        "distortion": trace.distortion,
        "n_g_narrowband": ng,
        "narrowband_delay_us": sc.pulse.L * (ng - 1) / 299792458.0 * 1e6,
        "max_gain": trace.max_gain,
        "medium_peak_over_vacuum_peak": float(trace.medium.max() / peak),
    }
    write_atomic(out / "pulse.json", _json_text(summary))
    return {"files": ["pulse.csv", "pulse.json"], **summary}


def run_oracle_check(sc: Scenario, out: Path, workers: int) -> dict:
    cfg = sc.oracle
    rng = np.random.default_rng(int(cfg["seed"]))
    gamma = sc.params.gamma
    g = float(cfg.get("g_in_gamma", 1e-3)) * gamma
    tol = float(cfg.get("rel_tol", 1e-4))
    floor = float(cfg.get("abs_floor", 1e-8))
    records = []
    for _ in range(int(cfg["draws"])):
        drives, d1 = random_drives(rng, gamma, sc.drives)
        rec = compare(sc.params, drives, d1, g=g)
        rec["skipped"] = abs(rec["oracle"]) < floor
        rec["passed"] = rec["skipped"] or rec["rel_error"] <= tol
        records.append(rec)
    passed = all(r["passed"] for r in records)
    summary = {"passed": passed, "rel_tol": tol, "draws": records}
    write_atomic(out / "oracle_check.json", _json_text(summary))
    if not passed:
        raise NumericalError("oracle check failed; see oracle_check.json")
    return {"files": ["oracle_check.json"], "passed": passed}


RUNNERS = {
    "susceptibility": run_susceptibility,
    "group-index": run_group_index,
    "knob-scan": run_knob_scan,
    "pulse": run_pulse,
    "oracle-check": run_oracle_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        overrides = parse_overrides(extra)
    except UsageError as exc:
        print(parser.format_usage(), file=sys.stderr, end="")
        print(f"lambda-knob: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")

    if args.subcommand == "presets":
        write_atomic(args.out / "presets.json", _json_text(PRESETS))
        print("\n".join(sorted(PRESETS)))
        return 0

    started = time.perf_counter()
    try:
        if args.config is not None:
            config = load_config(args.config)
            name = args.config.stem
        elif args.preset is not None:
            config = preset(args.preset)
            name = args.preset
        else:
            raise ValidationError("give --config or --preset")
        for key, value in overrides:
            set_value(config, key, value)
        scenario = resolve(config, name, no_doppler=args.no_doppler, nodes=args.nodes)
        workers = worker_count(args.threads)
        result = RUNNERS[args.subcommand](scenario, args.out, workers)
    except ValidationError as exc:
        print(f"lambda-knob: validation error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"lambda-knob: numerical error: {exc}", file=sys.stderr)
        return 2

    manifest = {
        "tool": {"name": "lambda-knob", "version": __version__},
        "subcommand": args.subcommand,
        "scenario": scenario.name,
        "config": scenario.to_config(),
        "outputs": result.pop("files"),
        "summary": result,
        "timing_s": time.perf_counter() - started,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    write_atomic(args.out / "manifest.json", _json_text(manifest))
    log.info("wrote %s to %s", manifest["outputs"], args.out)
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
