"""Command-line harness wiring the library into reproducible benchmark runs.

Seven subcommands cover the pipeline end to end: ``solve-phases`` and
``verify-phases`` handle phase-factor files, ``ques`` and ``benchmark`` run
the noisy query-circuit experiments over parameter grids, ``haar-convergence``
measures how fast random circuits approach Haar statistics, and ``supremacy``
/ ``topt-mc`` produce the threshold-fidelity curves and the Monte-Carlo
justification of the optimal simulation time.

Every run is driven by one JSON config document plus optional flag overrides
(flags win).  The seed is mandatory.  The worker-thread count comes from
--threads, the config, or the HSBENCH_THREADS environment variable, in that
order; it only schedules work.  All randomness is drawn from per-task
substreams of the seed, keyed by flat instance index, and results are merged
by that index, so artifacts are byte-identical for identical (config, seed)
whatever the thread count.

Each artifact embeds the sha256 digest of the canonical (command, params,
seed) payload: CSV files as a leading ``# config=...`` comment, JSON files as
a ``config_digest`` key.  manifest.json echoes the resolved config, records
per-stage timings, and lists every artifact with the digest of its bytes, so
any output file can be traced back to the exact configuration that made it.

Random circuits are parameterized by a layer-count ``depth``: a circuit on m
qubits at one-qubit density p1 gets g1 = round(depth * m * p1) one-qubit
gates, with the CNOT budget derived from p1 as everywhere else.

Exit codes: 0 ok, 2 config error, 3 capacity exceeded, 4 phase solver did
not converge.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from datetime import datetime, timezone

import numpy as np

from hsbench import __version__, metrics, qsp
from hsbench.circuits import (
    column_stats,
    circuit_unitary,
    generate_rqc,
    haar_reference,
    make_coupling,
)
from hsbench.haar_analytics import (
    PrecisionLimitError,
    critical_times,
    mean_diag_evolution,
    write_curve_file,
)
from hsbench.linalg import CapacityError, RandomSource, block_and_spectrum, haar_unitary
from hsbench.mqsvt import OutputDistribution
from hsbench.noise import MqsvtNoisySampler, NoiseModel, alpha_ref

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPACITY = 3
EXIT_CONVERGENCE = 4

_MAX_TOTAL_QUBITS = 13


class ConfigError(ValueError):
    """A run configuration failed schema validation."""


# -- run configuration -----------------------------------------------------------


class RunConfig:
    """Resolved run parameters: command, seed, output dir, threads, params.

    ``params`` holds only JSON-native values in their validated form, so the
    digest of (command, params, seed) is stable across equivalent configs.
    """

    def __init__(self, command: str, seed: int, out: str, threads: int, params: dict):
        self.command = command
        self.seed = seed
        self.out = out
        self.threads = threads
        self.params = params

    @property
    def digest(self) -> str:
        payload = {"command": self.command, "params": self.params, "seed": self.seed}
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class RunManifest:
    """Accumulates timings and artifact digests; written as manifest.json."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.started = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self.stages: dict[str, float] = {}
        self.artifacts: dict[str, str] = {}
        self._t0 = time.perf_counter()

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        yield
        self.stages[name] = round(time.perf_counter() - t0, 6)

    def add(self, path: str) -> None:
        self.artifacts[os.path.basename(path)] = _sha256_file(path)
        print(f"wrote {path}")

    def write(self, status: str = "ok") -> str:
        payload = {
            "command": self.cfg.command,
            "version": __version__,
            "status": status,
            "config": {**self.cfg.params, "seed": self.cfg.seed},
            "config_digest": self.cfg.digest,
            "threads": self.cfg.threads,
            "started": self.started,
            "wall_clock_s": round(time.perf_counter() - self._t0, 3),
            "stages": self.stages,
            "artifacts": self.artifacts,
        }
        path = os.path.join(self.cfg.out, "manifest.json")
        _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


# -- artifact helpers --------------------------------------------------------------


def _sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _csv_cell(value) -> str:
    text = _fmt(value)
    if "," in text or '"' in text:
        return '"' + text.replace('"', '""') + '"'
    return text


def _write_csv(path: str, digest: str, header: str, rows) -> None:
    lines = [f"# config={digest}", header]
    lines.extend(",".join(_csv_cell(v) for v in row) for row in rows)
    _write_text(path, "\n".join(lines) + "\n")


def _write_json(path: str, digest: str, payload: dict) -> None:
    metrics.write_report_file(path, {"config_digest": digest, **payload})


# -- config schema ----------------------------------------------------------------

_MISSING = object()


def _take(cfg: dict, key: str, default=_MISSING):
    if key in cfg:
        return cfg.pop(key)
    if default is _MISSING:
        raise ConfigError(f"missing required config field {key!r}")
    return default


def _int_field(cfg, key, *, default=_MISSING, minimum=None, even=False) -> int:
    value = _take(cfg, key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    if even and value % 2:
        raise ConfigError(f"{key} must be even, got {value}")
    return value


def _float_field(cfg, key, *, default=_MISSING, minimum=None, below=None) -> float:
    value = _take(cfg, key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite, got {value}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    if below is not None and value >= below:
        raise ConfigError(f"{key} must be < {below}, got {value}")
    return value


def _str_field(cfg, key, *, default=_MISSING, choices=None) -> str:
    value = _take(cfg, key, default)
    if not isinstance(value, str):
        raise ConfigError(f"{key} must be a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(f"{key} must be one of {sorted(choices)}, got {value!r}")
    return value


def _int_list_field(cfg, key, *, minimum=None, even=False) -> list[int]:
    raw = _take(cfg, key)
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{key} must be a nonempty list of integers")
    out = []
    for item in raw:
        if isinstance(item, bool) or not isinstance(item, int):
            raise ConfigError(f"{key} entries must be integers, got {item!r}")
        if minimum is not None and item < minimum:
            raise ConfigError(f"{key} entries must be >= {minimum}, got {item}")
        if even and item % 2:
            raise ConfigError(f"{key} entries must be even, got {item}")
        out.append(item)
    return out


def _float_list_field(cfg, key, *, minimum=None) -> list[float]:
    raw = _take(cfg, key)
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{key} must be a nonempty list of numbers")
    out = []
    for item in raw:
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ConfigError(f"{key} entries must be numbers, got {item!r}")
        item = float(item)
        if not math.isfinite(item):
            raise ConfigError(f"{key} entries must be finite")
        if minimum is not None and item < minimum:
            raise ConfigError(f"{key} entries must be >= {minimum}, got {item}")
        out.append(item)
    return out


def _str_list_field(cfg, key, *, default=_MISSING) -> list[str]:
    raw = _take(cfg, key, default)
    if not isinstance(raw, list) or not raw or not all(isinstance(s, str) for s in raw):
        raise ConfigError(f"{key} must be a nonempty list of strings")
    return list(raw)


def _optional_float(cfg, key, *, minimum=None) -> float | None:
    if key not in cfg:
        return None
    if cfg[key] is None:
        cfg.pop(key)
        return None
    return _float_field(cfg, key, minimum=minimum)


def _reject_unknown(cfg: dict) -> None:
    if cfg:
        raise ConfigError(f"unknown config fields: {', '.join(sorted(cfg))}")


def _validate_solve_phases(cfg: dict) -> dict:
    params = {
        "t": _float_field(cfg, "t"),
        "d": _int_field(cfg, "d", minimum=2, even=True),
        "tol": _float_field(cfg, "tol", minimum=0.0),
        "restarts": _int_field(cfg, "restarts", default=8, minimum=0),
        "convention": _str_field(
            cfg, "convention", default=qsp.CIRCUIT, choices={qsp.QSP, qsp.CIRCUIT}
        ),
    }
    if params["tol"] == 0.0:
        raise ConfigError("tol must be positive")
    _reject_unknown(cfg)
    return params


def _validate_verify_phases(cfg: dict) -> dict:
    params = {"phase_file": _str_field(cfg, "phase_file")}
    _reject_unknown(cfg)
    return params


def _noise_fields(cfg: dict) -> dict:
    fields = {"r2": _float_field(cfg, "r2", default=0.0, minimum=0.0)}
    fields["r1"] = _optional_float(cfg, "r1", minimum=0.0)
    return fields


def _circuit_fields(cfg: dict) -> dict:
    return {
        "coupling": _str_field(cfg, "coupling", default="linear"),
        "depth": _int_field(cfg, "depth", minimum=1),
        "p1": _float_field(cfg, "p1", default=0.5, minimum=1e-9, below=1.0),
    }


def _validate_ques(cfg: dict) -> dict:
    params = {
        "n_values": _int_list_field(cfg, "n_values", minimum=1),
        "degrees": _int_list_field(cfg, "degrees", minimum=2, even=True),
        "t": _float_field(cfg, "t"),
        "tol": _float_field(cfg, "tol", minimum=1e-15),
        "instances": _int_field(cfg, "instances", minimum=2),
        "shots": _int_field(cfg, "shots", minimum=1),
    }
    params.update(_circuit_fields(cfg))
    params.update(_noise_fields(cfg))
    _reject_unknown(cfg)
    return params


def _validate_benchmark(cfg: dict) -> dict:
    params = {
        "n": _int_field(cfg, "n", minimum=1),
        "degrees": _int_list_field(cfg, "degrees", minimum=2, even=True),
        "r2_values": _float_list_field(cfg, "r2_values", minimum=0.0),
        "t": _float_field(cfg, "t"),
        "tol": _float_field(cfg, "tol", minimum=1e-15),
        "instances": _int_field(cfg, "instances", minimum=2),
        "shots": _int_field(cfg, "shots", minimum=1),
    }
    params.update(_circuit_fields(cfg))
    params["r1"] = _optional_float(cfg, "r1", minimum=0.0)
    _reject_unknown(cfg)
    return params


def _validate_haar_convergence(cfg: dict) -> dict:
    params = {
        "qubits": _int_field(cfg, "qubits", minimum=2),
        "couplings": _str_list_field(cfg, "couplings", default=["linear"]),
        "depths": _int_list_field(cfg, "depths", minimum=1),
        "p1": _float_field(cfg, "p1", default=0.5, minimum=1e-9, below=1.0),
        "instances": _int_field(cfg, "instances", minimum=1),
    }
    _reject_unknown(cfg)
    return params


def _validate_supremacy(cfg: dict) -> dict:
    params = {
        "n": _int_field(cfg, "n", minimum=2),
        "tol": _float_field(cfg, "tol", default=1e-10, minimum=1e-14),
        "t_points": _int_field(cfg, "t_points", default=376, minimum=376),
    }
    _reject_unknown(cfg)
    return params


def _validate_topt_mc(cfg: dict) -> dict:
    params = {
        "n": _int_field(cfg, "n", minimum=1),
        "samples": _int_field(cfg, "samples", minimum=2),
        "t_start": _float_field(cfg, "t_start", default=0.0, minimum=0.0),
        "t_stop": _float_field(cfg, "t_stop", default=8.0),
        "t_points": _int_field(cfg, "t_points", default=161, minimum=2),
    }
    if params["t_stop"] <= params["t_start"]:
        raise ConfigError("t_stop must exceed t_start")
    _reject_unknown(cfg)
    return params


_VALIDATORS = {
    "solve-phases": _validate_solve_phases,
    "verify-phases": _validate_verify_phases,
    "ques": _validate_ques,
    "benchmark": _validate_benchmark,
    "haar-convergence": _validate_haar_convergence,
    "supremacy": _validate_supremacy,
    "topt-mc": _validate_topt_mc,
}


# -- shared execution helpers ---------------------------------------------------


def _map_indexed(worker, count: int, threads: int) -> list:
    """Run worker(0..count-1), results in index order whatever the pool size."""
    if threads <= 1 or count <= 1:
        return [worker(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=min(threads, count)) as pool:
        return list(pool.map(worker, range(count)))


def _one_qubit_budget(depth: int, qubits: int, p1: float) -> int:
    return max(1, round(depth * qubits * p1))


def _coupling_map(style: str, qubits: int):
    try:
        return make_coupling(style, qubits)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _noise_model(params: dict, r2: float | None = None) -> NoiseModel:
    rate2 = params["r2"] if r2 is None else r2
    if params.get("r1") is None:
        return NoiseModel(r2=rate2)
    return NoiseModel(r2=rate2, r1=params["r1"])


def _solve_circuit_phases(params: dict, seed: int, manifest: RunManifest) -> dict:
    """One circuit-convention phase set per distinct polynomial degree."""
    solved: dict[int, qsp.PhaseFactorSequence] = {}
    with manifest.stage("solve_phases"):
        for j, degree in enumerate(dict.fromkeys(params["degrees"])):
            rng = RandomSource(seed).child(0).child(j)
            seq = qsp.solve_phases(params["t"], degree, params["tol"], rng)
            solved[degree] = qsp.convert_convention(seq, qsp.CIRCUIT)
    return solved


def _simulate_instance(n, coupling, g1, p1, phases, noise, shots, rng):
    """Draw one encoding circuit, sample it noisily, score the histogram."""
    circuit = generate_rqc(coupling, g1, p1, rng.child(0))
    sampler = MqsvtNoisySampler(circuit, phases)
    hist = sampler.sample(noise, shots, rng.child(1))
    probs = sampler.noiseless[: sampler.dim // 2]
    dist = OutputDistribution(
        probs=probs,
        total=float(probs.sum()),
        eps=phases.sup_error,
        all_probs=sampler.noiseless,
    )
    fraction, overlap = metrics.instance_scores(dist, hist)
    return fraction, overlap, dist


def _ques_bounds(mean: float, eps: float):
    if not 0.0 <= mean <= 1.0 or not eps < 0.125:
        return None
    fid = metrics.alpha_from_ques(mean, eps)
    return [fid.lower, fid.upper]


# -- subcommand runners -----------------------------------------------------------


def _run_solve_phases(cfg: RunConfig, manifest: RunManifest) -> None:
    params = cfg.params
    with manifest.stage("solve"):
        seq = qsp.solve_phases(
            params["t"],
            params["d"],
            params["tol"],
            RandomSource(cfg.seed),
            restarts=params["restarts"],
        )
    if params["convention"] == qsp.CIRCUIT:
        seq = qsp.convert_convention(seq, qsp.CIRCUIT)
    path = os.path.join(cfg.out, "phases.json")
    with manifest.stage("write"):
        obj = json.loads(qsp.phase_file_text(seq))
        obj["config_digest"] = cfg.digest
        _write_text(path, json.dumps(obj, indent=2) + "\n")
    manifest.add(path)


def _run_verify_phases(cfg: RunConfig, manifest: RunManifest) -> None:
    source = cfg.params["phase_file"]
    try:
        seq = qsp.read_phase_file(source)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read phase file {source}: {exc}") from exc
    probe = seq if seq.convention == qsp.QSP else qsp.convert_convention(seq, qsp.QSP)
    with manifest.stage("measure"):
        measured = qsp.measured_sup_error(probe.phases, probe.target_time, probe.degree)
    stored = seq.sup_error
    report = {
        "phase_file": source,
        "t": seq.target_time,
        "polynomial_degree": probe.degree,
        "convention": seq.convention,
        "stored_sup_error": stored,
        "measured_sup_error": measured,
        "relative_gap": abs(measured - stored) / stored if stored > 0 else None,
    }
    path = os.path.join(cfg.out, "verify_report.json")
    _write_json(path, cfg.digest, report)
    manifest.add(path)


def _run_ques(cfg: RunConfig, manifest: RunManifest) -> None:
    params = cfg.params
    cells = [(n, deg) for n in params["n_values"] for deg in params["degrees"]]
    couplings = {n: _coupling_map(params["coupling"], n + 1) for n in params["n_values"]}
    phases = _solve_circuit_phases(params, cfg.seed, manifest)
    noise = _noise_model(params)
    instances = params["instances"]
    root = RandomSource(cfg.seed)

    def worker(k: int):
        cell, _ = divmod(k, instances)
        n, degree = cells[cell]
        g1 = _one_qubit_budget(params["depth"], n + 1, params["p1"])
        fraction, _, _ = _simulate_instance(
            n,
            couplings[n],
            g1,
            params["p1"],
            phases[degree],
            noise,
            params["shots"],
            root.child(1).child(k),
        )
        return fraction

    with manifest.stage("simulate"):
        fractions = _map_indexed(worker, len(cells) * instances, cfg.threads)

    cell_reports = []
    means = {}
    for cell, (n, degree) in enumerate(cells):
        block = fractions[cell * instances : (cell + 1) * instances]
        report = metrics.ques(
            block, n=n, d=degree, t=params["t"], shots=params["shots"], seed=cfg.seed
        )
        means[(n, degree)] = report.mean
        cell_reports.append(
            {
                "alpha_ques": 2.0 * report.mean - 1.0,
                "alpha_ques_bounds": _ques_bounds(report.mean, phases[degree].sup_error),
                "sup_error": phases[degree].sup_error,
                **report.as_dict(),
            }
        )

    with manifest.stage("write"):
        json_path = os.path.join(cfg.out, "ques_report.json")
        _write_json(
            json_path,
            cfg.digest,
            {
                "t": params["t"],
                "shots": params["shots"],
                "instances": instances,
                "coupling": params["coupling"],
                "depth": params["depth"],
                "r1": noise.r1,
                "r2": noise.r2,
                "seed": cfg.seed,
                "cells": cell_reports,
            },
        )
        csv_path = os.path.join(cfg.out, "ques_heatmap.csv")
        header = "n," + ",".join(f"deg{deg}" for deg in params["degrees"])
        rows = [
            [n] + [means[(n, deg)] for deg in params["degrees"]]
            for n in params["n_values"]
        ]
        _write_csv(csv_path, cfg.digest, header, rows)
    manifest.add(json_path)
    manifest.add(csv_path)


def _run_benchmark(cfg: RunConfig, manifest: RunManifest) -> None:
    params = cfg.params
    n = params["n"]
    coupling = _coupling_map(params["coupling"], n + 1)
    g1 = _one_qubit_budget(params["depth"], n + 1, params["p1"])
    g2 = math.ceil((1.0 - params["p1"]) / (2.0 * params["p1"]) * g1)
    phases = _solve_circuit_phases(params, cfg.seed, manifest)
    cells = [(r2, deg) for r2 in params["r2_values"] for deg in params["degrees"]]
    instances = params["instances"]
    root = RandomSource(cfg.seed)

    def worker(k: int):
        cell, _ = divmod(k, instances)
        r2, degree = cells[cell]
        return _simulate_instance(
            n,
            coupling,
            g1,
            params["p1"],
            phases[degree],
            _noise_model(params, r2),
            params["shots"],
            root.child(1).child(k),
        )

    with manifest.stage("simulate"):
        results = _map_indexed(worker, len(cells) * instances, cfg.threads)

    table: dict[tuple[float, int], dict] = {}
    with manifest.stage("aggregate"):
        for cell, (r2, degree) in enumerate(cells):
            block = results[cell * instances : (cell + 1) * instances]
            fractions = [b[0] for b in block]
            overlaps = np.array([b[1] for b in block])
            dists = [b[2] for b in block]
            report = metrics.ques(
                fractions, n=n, d=degree, t=params["t"], shots=params["shots"], seed=cfg.seed
            )
            sx = metrics.alpha_from_sxes_empirical(float(overlaps.mean()), n, dists)
            se_overlap = float(overlaps.std(ddof=1)) / math.sqrt(len(block))
            table[(r2, degree)] = {
                "r2": r2,
                "degree": degree,
                "alpha_ques": 2.0 * report.mean - 1.0,
                "alpha_ques_bounds": _ques_bounds(report.mean, phases[degree].sup_error),
                "ques_mean": report.mean,
                "ques_ci95": report.ci95,
                "alpha_sxes": sx.alpha,
                "alpha_sxes_raw": sx.raw,
                "alpha_sxes_se": se_overlap / abs(sx.denominator),
                "alpha_ref": alpha_ref(
                    g1, g2, phases[degree].degree, _noise_model(params, r2)
                ),
                "sup_error": phases[degree].sup_error,
            }

    with manifest.stage("write"):
        json_path = os.path.join(cfg.out, "benchmark_report.json")
        _write_json(
            json_path,
            cfg.digest,
            {
                "n": n,
                "t": params["t"],
                "shots": params["shots"],
                "instances": instances,
                "coupling": params["coupling"],
                "depth": params["depth"],
                "g1": g1,
                "g2": g2,
                "seed": cfg.seed,
                "cells": [table[key] for key in cells],
            },
        )
        csv_path = os.path.join(cfg.out, "fidelity_table.csv")
        header = "r2,estimate," + ",".join(f"deg{deg}" for deg in params["degrees"])
        keys = {"ques": "alpha_ques", "sxes": "alpha_sxes", "ref": "alpha_ref"}
        rows = []
        for r2 in params["r2_values"]:
            for label, key in keys.items():
                rows.append(
                    [r2, label] + [table[(r2, deg)][key] for deg in params["degrees"]]
                )
        _write_csv(csv_path, cfg.digest, header, rows)
    manifest.add(json_path)
    manifest.add(csv_path)


def _run_haar_convergence(cfg: RunConfig, manifest: RunManifest) -> None:
    params = cfg.params
    qubits = params["qubits"]
    maps = {style: _coupling_map(style, qubits) for style in params["couplings"]}
    cells = [(style, depth) for style in params["couplings"] for depth in params["depths"]]
    instances = params["instances"]
    root = RandomSource(cfg.seed)

    def worker(k: int):
        cell, _ = divmod(k, instances)
        style, depth = cells[cell]
        g1 = _one_qubit_budget(depth, qubits, params["p1"])
        circuit = generate_rqc(maps[style], g1, params["p1"], root.child(1).child(k))
        return column_stats(circuit_unitary(circuit))

    with manifest.stage("simulate"):
        stats = _map_indexed(worker, len(cells) * instances, cfg.threads)

    dim = 1 << qubits
    moment_refs = [float(haar_reference(k, dim)[0]) for k in range(1, 6)]
    entropy_ref = float(haar_reference(1, dim)[2])
    rows = []
    for cell, (style, depth) in enumerate(cells):
        block = stats[cell * instances : (cell + 1) * instances]
        moments = np.mean([b[0] for b in block], axis=0)
        entropy = float(np.mean([b[1] for b in block]))
        rows.append(
            [style, depth, instances, entropy / entropy_ref]
            + [float(moments[k]) / moment_refs[k] for k in range(5)]
        )

    path = os.path.join(cfg.out, "haar_convergence.csv")
    header = "coupling,depth,instances,entropy_norm,m1_norm,m2_norm,m3_norm,m4_norm,m5_norm"
    with manifest.stage("write"):
        _write_csv(path, cfg.digest, header, rows)
    manifest.add(path)


def _run_supremacy(cfg: RunConfig, manifest: RunManifest) -> None:
    params = cfg.params
    grid = np.linspace(0.5, 8.0, params["t_points"])
    try:
        with manifest.stage("scan"):
            scan = critical_times(params["n"], grid, tol=params["tol"])
    except PrecisionLimitError as exc:
        raise ConfigError(str(exc)) from exc

    with manifest.stage("write"):
        csv_path = os.path.join(cfg.out, "supremacy_curve.csv")
        write_curve_file(csv_path, scan)
        with open(csv_path, "r", encoding="utf-8") as fh:
            body = fh.read()
        _write_text(csv_path, f"# config={cfg.digest}\n" + body)
        json_path = os.path.join(cfg.out, "supremacy_report.json")
        _write_json(
            json_path,
            cfg.digest,
            {
                "n": scan.n,
                "t_threshold": scan.t_threshold,
                "t_optimal": scan.t_optimal,
                "alpha_star_min": scan.alpha_star_min,
                "gamma_at_optimal": scan.gamma_at_optimal,
                "bessel_prediction": scan.bessel_prediction,
                "coeff_degree": scan.coeff_degree,
                "tol": scan.tol,
            },
        )
    manifest.add(csv_path)
    manifest.add(json_path)


def _run_topt_mc(cfg: RunConfig, manifest: RunManifest) -> None:
    params = cfg.params
    n = params["n"]
    if n + 1 > _MAX_TOTAL_QUBITS:
        raise CapacityError(
            f"dense sampling capped at {_MAX_TOTAL_QUBITS} total qubits, got {n + 1}"
        )
    grid = np.linspace(params["t_start"], params["t_stop"], params["t_points"])
    root = RandomSource(cfg.seed)

    def worker(k: int):
        u = haar_unitary(1 << (n + 1), root.child(1).child(k))
        _, spec = block_and_spectrum(u, n)
        weights = np.abs(spec.eigenvectors[0, :]) ** 2
        amps = np.exp(-1j * np.outer(grid, spec.eigenvalues)) @ weights
        return amps

    with manifest.stage("simulate"):
        amp_rows = np.array(_map_indexed(worker, params["samples"], cfg.threads))

    p_zero = np.abs(amp_rows) ** 2
    mean_p0 = p_zero.mean(axis=0)
    se_p0 = p_zero.std(axis=0, ddof=1) / math.sqrt(params["samples"])
    mean_amp_sq = np.abs(amp_rows.mean(axis=0)) ** 2
    bessel = np.array([abs(mean_diag_evolution(float(t))) ** 2 for t in grid])

    path = os.path.join(cfg.out, "topt_mc.csv")
    header = "t,mean_p0,se_p0,mean_amp_sq,bessel"
    rows = [
        [grid[i], mean_p0[i], se_p0[i], mean_amp_sq[i], bessel[i]]
        for i in range(grid.size)
    ]
    with manifest.stage("write"):
        _write_csv(path, cfg.digest, header, rows)
    manifest.add(path)


_RUNNERS = {
    "solve-phases": _run_solve_phases,
    "verify-phases": _run_verify_phases,
    "ques": _run_ques,
    "benchmark": _run_benchmark,
    "haar-convergence": _run_haar_convergence,
    "supremacy": _run_supremacy,
    "topt-mc": _run_topt_mc,
}

_COMMAND_HELP = {
    "solve-phases": "solve one phase-factor set and write it as a phase file",
    "verify-phases": "re-measure the certified error of a stored phase file",
    "ques": "unitary-evolution score over an (n, degree) grid",
    "benchmark": "fidelity table over a (noise rate, degree) grid",
    "haar-convergence": "random-circuit statistics against Haar references",
    "supremacy": "threshold-fidelity curve over simulation time",
    "topt-mc": "Monte-Carlo check of the optimal-time prediction",
}


# -- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsbench",
        description="Hamiltonian-simulation benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")
    for name, blurb in _COMMAND_HELP.items():
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory (default from config, else cwd)")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker threads (fallback: config, then HSBENCH_THREADS, then 1)",
        )
    return parser


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return raw


def _resolve(args: argparse.Namespace) -> RunConfig:
    raw = _load_json(args.config)

    seed = args.seed if args.seed is not None else raw.pop("seed", None)
    raw.pop("seed", None)
    if seed is None:
        raise ConfigError("seed is required (config field 'seed' or --seed)")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")

    out = args.out if args.out is not None else raw.pop("out", ".")
    raw.pop("out", None)
    if not isinstance(out, str) or not out:
        raise ConfigError(f"out must be a nonempty string, got {out!r}")

    threads = args.threads if args.threads is not None else raw.pop("threads", None)
    raw.pop("threads", None)
    if threads is None:
        env = os.environ.get("HSBENCH_THREADS")
        if env is not None:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"HSBENCH_THREADS must be an integer, got {env!r}")
    if threads is None:
        threads = 1
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"threads must be a positive integer, got {threads!r}")

    params = _VALIDATORS[args.command](dict(raw))
    return RunConfig(args.command, seed, out, threads, params)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
    except ConfigError as exc:
        print(f"hsbench: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(cfg.out, exist_ok=True)
    manifest = RunManifest(cfg)
    status, code = "ok", EXIT_OK
    try:
        _RUNNERS[cfg.command](cfg, manifest)
    except ConfigError as exc:
        print(f"hsbench: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityError as exc:
        print(f"hsbench: capacity exceeded: {exc}", file=sys.stderr)
        status, code = "capacity-error", EXIT_CAPACITY
    except qsp.PhaseSolverDidNotConverge as exc:
        print(f"hsbench: phase solver did not converge: {exc}", file=sys.stderr)
        status, code = "convergence-failure", EXIT_CONVERGENCE
    manifest_path = manifest.write(status)
    if code == EXIT_OK:
        print(f"{cfg.command}: ok (manifest {manifest_path})")
    return code


if __name__ == "__main__":
    sys.exit(main())
