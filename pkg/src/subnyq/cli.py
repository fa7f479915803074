"""Command-line surface: reproducible experiments with serialized outputs.

One binary with subcommands (synth, pattern, cond-hist, reconstruct, blind,
sense, pd-sweep).  Every command accepts --config pointing at a JSON file;
explicit flags override file values.  Stochastic commands require an explicit
seed, and identical config + seed reruns produce byte-identical outputs.
Each output file embeds the artifact version and a hash of the resolved
config for provenance.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import blind as blind_mod
from . import patterns as patterns_mod
from . import sensing as sensing_mod
from .reconstruct import (
    design_filter,
    reconstruct_time,
    spectral_index_from_support,
)
from .sampling import SamplingPattern, SpectralIndexSet, coset_decompose
from .sensing import SensingConfig, pd_sweep, sense
from .signals import (
    MultibandSignalSpec,
    NoiseModel,
    TimeSeries,
    apply_noise,
    synthesize,
    timeseries_from_csv,
    timeseries_to_csv,
)

__all__ = ["main", "run", "emit_plot_data", "SCHEMAS", "config_hash"]

COMMANDS = ("synth", "pattern", "cond-hist", "reconstruct", "blind", "sense", "pd-sweep")

SCHEMAS: dict[str, dict] = {
    "synth": {
        "spec": {"type": "path", "required": True, "help": "signal-spec JSON"},
        "T": {"type": "float", "required": False, "default": None, "help": "base period (default 1/f_max)"},
        "M": {"type": "int", "required": True, "help": "sample count"},
        "noise": {"type": "str", "required": False, "default": "none", "choices": ["none", "awgn", "quantizer"]},
        "sigma": {"type": "float", "required": False, "default": 0.0},
        "bits": {"type": "int", "required": False, "default": 8},
        "full_scale": {"type": "float", "required": False, "default": 1.0},
        "seed": {"type": "int", "required": False, "default": None},
        "out": {"type": "path", "required": True},
    },
    "pattern": {
        "method": {"type": "str", "required": True, "choices": ["exhaustive", "sfs", "blind-sfs"]},
        "L": {"type": "int", "required": False, "default": None},
        "p": {"type": "int", "required": False, "default": None},
        "k": {"type": "list[int]", "required": False, "default": None},
        "T": {"type": "float", "required": False, "default": 1.0},
        "N": {"type": "int", "required": False, "default": None},
        "B": {"type": "float", "required": False, "default": None},
        "fmax": {"type": "float", "required": False, "default": None},
        "d": {"type": "int", "required": False, "default": 1},
        "budget": {"type": "int", "required": False, "default": 10**6},
        "seed": {"type": "int", "required": False, "default": None},
        "out": {"type": "path", "required": True},
    },
    "cond-hist": {
        "L": {"type": "int", "required": True},
        "p": {"type": "int", "required": True},
        "k": {"type": "list[int]", "required": False, "default": None},
        "C": {"type": "list[int]", "required": False, "default": None},
        "N": {"type": "int", "required": False, "default": None},
        "d": {"type": "int", "required": False, "default": 1},
        "trials": {"type": "int", "required": True},
        "seed": {"type": "int", "required": True},
        "out": {"type": "path", "required": True},
    },
    "reconstruct": {
        "spec": {"type": "path", "required": True},
        "pattern": {"type": "path", "required": False, "default": None},
        "L": {"type": "int", "required": False, "default": None},
        "p": {"type": "int", "required": False, "default": None},
        "Nh": {"type": "int", "required": False, "default": 383},
        "M": {"type": "int", "required": True},
        "noise": {"type": "str", "required": False, "default": "none", "choices": ["none", "awgn", "quantizer"]},
        "sigma": {"type": "float", "required": False, "default": 0.0},
        "bits": {"type": "int", "required": False, "default": 8},
        "full_scale": {"type": "float", "required": False, "default": 1.0},
        "seed": {"type": "int", "required": False, "default": None},
        "out": {"type": "path", "required": True, "help": "reconstructed CSV"},
        "report": {"type": "path", "required": False, "default": None, "help": "JSON report (default: out + .json)"},
    },
    "blind": {
        "spec": {"type": "path", "required": False, "default": None},
        "streams": {"type": "path", "required": False, "default": None, "help": "coset-stream CSV"},
        "pattern": {"type": "path", "required": True},
        "M": {"type": "int", "required": False, "default": 4096},
        "snr_db": {"type": "float", "required": False, "default": None},
        "seed": {"type": "int", "required": False, "default": None},
        "order": {"type": "str", "required": False, "default": "mdl", "choices": ["aic", "mdl", "eft"]},
        "localize": {"type": "str", "required": False, "default": "music", "choices": ["music", "nlls"]},
        "qmin": {"type": "int", "required": False, "default": 0},
        "qmax": {"type": "int", "required": False, "default": None},
        "epsilon": {"type": "float", "required": False, "default": 0.01, "help": "NLLS stop, relative to total power"},
        "out": {"type": "path", "required": True},
    },
    "sense": {
        "fmax": {"type": "float", "required": True},
        "B": {"type": "float", "required": True},
        "omega": {"type": "float", "required": True},
        "order": {"type": "str", "required": False, "default": "mdl", "choices": ["aic", "mdl", "eft"]},
        "localize": {"type": "str", "required": False, "default": "music", "choices": ["music", "nlls"]},
        "p": {"type": "int", "required": False, "default": None},
        "input": {"type": "path", "required": False, "default": None, "help": "TimeSeries CSV at T = 1/fmax"},
        "spec": {"type": "path", "required": False, "default": None},
        "M": {"type": "int", "required": False, "default": None},
        "snr_db": {"type": "float", "required": False, "default": None},
        "seed": {"type": "int", "required": False, "default": 0},
        "out": {"type": "path", "required": True},
    },
    "pd-sweep": {
        "fmax": {"type": "float", "required": False, "default": 20.0},
        "B": {"type": "float", "required": False, "default": 1.0},
        "omega": {"type": "float", "required": False, "default": 0.1},
        "snr": {"type": "list[float]", "required": True},
        "cr": {"type": "list[float]", "required": True},
        "trials": {"type": "int", "required": True},
        "seed": {"type": "int", "required": True},
        "blocks": {"type": "int", "required": False, "default": 100},
        "metric": {"type": "str", "required": False, "default": "exact", "choices": ["exact", "contains"]},
        "order": {"type": "str", "required": False, "default": "mdl", "choices": ["aic", "mdl", "eft"]},
        "out": {"type": "path", "required": True},
    },
}

for _schema in SCHEMAS.values():
    _schema["plot_out"] = {"type": "path", "required": False, "default": None}

# commands that may not run without an explicit seed
_ALWAYS_STOCHASTIC = {"cond-hist", "pd-sweep"}


class ValidationError(ValueError):
    pass


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _parse_value(kind: str, raw):
    if raw is None:
        return None
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind in ("str", "path"):
        return str(raw)
    if kind.startswith("list["):
        inner = kind[5:-1]
        conv = int if inner == "int" else float
        if isinstance(raw, str):
            parts = [s for s in raw.split(",") if s != ""]
        else:
            parts = list(raw)
        return [conv(v) for v in parts]
    raise ValidationError(f"unknown schema type {kind}")


def _validate(command: str, config: dict) -> dict:
    schema = SCHEMAS[command]
    unknown = set(config) - set(schema)
    if unknown:
        raise ValidationError(f"unknown fields for {command}: {sorted(unknown)}")
    resolved = {}
    for name, meta in schema.items():
        if name in config and config[name] is not None:
            val = _parse_value(meta["type"], config[name])
        elif meta.get("required"):
            raise ValidationError(f"{command}: missing required field '{name}'")
        else:
            val = meta.get("default")
        if val is not None and "choices" in meta and val not in meta["choices"]:
            raise ValidationError(
                f"{command}: field '{name}' must be one of {meta['choices']}"
            )
        resolved[name] = val
    _check_seed(command, resolved)
    return resolved


def _check_seed(command: str, cfg: dict) -> None:
    stochastic = command in _ALWAYS_STOCHASTIC
    if command == "pattern" and cfg.get("method") == "blind-sfs":
        stochastic = True
    if cfg.get("noise") == "awgn" and cfg.get("sigma", 0.0):
        stochastic = True
    if command in ("blind", "sense") and cfg.get("snr_db") is not None:
        stochastic = True
    if stochastic and cfg.get("seed") is None:
        raise ValidationError(f"{command}: stochastic run requires an explicit seed")


def _provenance(config: dict) -> dict:
    return {"version": __version__, "config_hash": config_hash(config)}


def _write_json(path: str, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _csv_header(config: dict) -> str:
    return f"# subnyq={__version__} config_hash={config_hash(config)}"


def _write_csv(path: str, header: str, columns: list[str], rows) -> None:
    buf = io.StringIO()
    buf.write(header + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    Path(path).write_text(buf.getvalue())


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_plot_data(result, kind: str) -> str:
    """Flatten a result into plot-ready CSV text.

    Kinds: "spectrum" (freq, magnitude) from a TimeSeries; "histogram"
    (bin_left, count) from a value sequence; "eigenvalues" (index, value)
    from a descending profile; "pd" (snr_db, cr, pd) from a PdResult.
    """
    buf = io.StringIO()
    if kind == "spectrum":
        if not isinstance(result, TimeSeries):
            raise ValidationError("spectrum plot needs a TimeSeries")
        buf.write("freq,magnitude\n")
        n = len(result.samples)
        if n:
            mags = np.abs(np.fft.fft(result.samples)) / n
            freqs = np.arange(n) / (n * result.T)
            for f, m in zip(freqs, mags):
                buf.write(f"{_fmt(float(f))},{_fmt(float(m))}\n")
        return buf.getvalue()
    if kind == "histogram":
        vals = np.asarray(result, dtype=float)
        buf.write("bin_left,count\n")
        finite = vals[np.isfinite(vals)]
        if finite.size:
            counts, edges = np.histogram(finite, bins=50)
            for e, c in zip(edges[:-1], counts):
                buf.write(f"{_fmt(float(e))},{int(c)}\n")
        return buf.getvalue()
    if kind == "eigenvalues":
        vals = result.values if isinstance(result, blind_mod.EigenSpectrum) else np.asarray(result, dtype=float)
        buf.write("index,value\n")
        for i, v in enumerate(vals):
            buf.write(f"{i},{_fmt(float(v))}\n")
        return buf.getvalue()
    if kind == "pd":
        rows = result.rows if isinstance(result, sensing_mod.PdResult) else result
        buf.write("snr_db,cr,pd\n")
        for r in rows:
            buf.write(f"{_fmt(float(r.snr_db))},{_fmt(float(r.cr))},{_fmt(float(r.pd))}\n")
        return buf.getvalue()
    raise ValidationError(f"unknown plot kind {kind!r}")


def _load_spec(path: str) -> MultibandSignalSpec:
    return MultibandSignalSpec.from_dict(json.loads(Path(path).read_text()))


def _load_pattern(path: str) -> SamplingPattern:
    return SamplingPattern.from_dict(json.loads(Path(path).read_text()))


def _noise_from_cfg(cfg: dict) -> NoiseModel:
    kind = cfg.get("noise", "none")
    if kind == "awgn":
        return NoiseModel.awgn(cfg["sigma"])
    if kind == "quantizer":
        return NoiseModel.quantizer(cfg["bits"], cfg["full_scale"])
    return NoiseModel.none()


def _synth_input(spec: MultibandSignalSpec, M: int, snr_db, seed) -> TimeSeries:
    x = synthesize(spec, 1.0 / spec.f_max, M)
    if snr_db is not None:
        power = float(np.mean(np.abs(x.samples) ** 2))
        sigma = math.sqrt(power / 10.0 ** (snr_db / 10.0))
        x = apply_noise(x, NoiseModel.awgn(sigma), seed=seed or 0)
    return x


def _cmd_synth(cfg: dict) -> None:
    spec = _load_spec(cfg["spec"])
    T = cfg["T"] if cfg["T"] is not None else 1.0 / spec.f_max
    x = synthesize(spec, T, cfg["M"])
    x = apply_noise(x, _noise_from_cfg(cfg), seed=cfg["seed"] or 0)
    Path(cfg["out"]).write_text(
        timeseries_to_csv(x, header_comment=_csv_header(cfg)[2:])
    )
    if cfg["plot_out"]:
        Path(cfg["plot_out"]).write_text(emit_plot_data(x, "spectrum"))


def _cmd_pattern(cfg: dict) -> None:
    method = cfg["method"]
    if method == "blind-sfs":
        for f in ("N", "B", "fmax"):
            if cfg[f] is None:
                raise ValidationError(f"pattern blind-sfs requires '{f}'")
        res = patterns_mod.blind_sfs(
            cfg["N"], cfg["B"], cfg["fmax"], cfg["d"], cfg["seed"], L=cfg["L"]
        )
    else:
        for f in ("L", "p", "k"):
            if cfg[f] is None:
                raise ValidationError(f"pattern {method} requires '{f}'")
        k = SpectralIndexSet(tuple(cfg["k"]), cfg["L"])
        if method == "exhaustive":
            res = patterns_mod.exhaustive_pattern_search(
                cfg["L"], cfg["p"], k, T=cfg["T"], budget=cfg["budget"]
            )
        else:
            res = patterns_mod.sfs_pattern_search(cfg["L"], cfg["p"], k, T=cfg["T"])
    payload = {
        **_provenance(cfg),
        "method": method,
        "L": res.pattern.L,
        "p": res.pattern.p,
        "C": list(res.pattern.C),
        "cond": res.cond if math.isfinite(res.cond) else "inf",
        "evaluations": res.evaluations,
    }
    if res.design_k is not None:
        payload["design_k"] = list(res.design_k.k)
    _write_json(cfg["out"], payload)


def _cmd_cond_hist(cfg: dict) -> None:
    if cfg["k"] is not None:
        vals = patterns_mod.cond_histogram(
            cfg["L"], cfg["p"], cfg["trials"], cfg["seed"],
            k=SpectralIndexSet(tuple(cfg["k"]), cfg["L"]),
        )
    elif cfg["C"] is not None and cfg["N"] is not None:
        pattern = SamplingPattern(cfg["L"], tuple(cfg["C"]))
        N, d, L = cfg["N"], cfg["d"], cfg["L"]

        def gen(rng: np.random.Generator) -> SpectralIndexSet:
            anchors = patterns_mod.draw_anchors(N, d, L, rng)
            return patterns_mod.anchor_support(anchors, d, L)

        vals = patterns_mod.cond_histogram(
            cfg["L"], cfg["p"], cfg["trials"], cfg["seed"],
            pattern=pattern, support_generator=gen,
        )
    else:
        raise ValidationError("cond-hist needs either k (random patterns) or C plus N (random supports)")
    _write_csv(cfg["out"], _csv_header(cfg), ["cond"], ([v] for v in map(float, vals)))
    if cfg["plot_out"]:
        Path(cfg["plot_out"]).write_text(emit_plot_data(vals, "histogram"))


def _cmd_reconstruct(cfg: dict) -> None:
    spec = _load_spec(cfg["spec"])
    T = 1.0 / spec.f_max
    x_clean = synthesize(spec, T, cfg["M"])
    x = apply_noise(x_clean, _noise_from_cfg(cfg), seed=cfg["seed"] or 0)
    if cfg["pattern"] is not None:
        pattern = _load_pattern(cfg["pattern"])
        L = pattern.L
        k = spectral_index_from_support(spec.support(), L)
    else:
        if cfg["L"] is None or cfg["p"] is None:
            raise ValidationError("reconstruct needs a pattern file or both L and p")
        L = cfg["L"]
        k = spectral_index_from_support(spec.support(), L)
        pattern = patterns_mod.sfs_pattern_search(L, cfg["p"], k, T=T).pattern
    streams = coset_decompose(x, pattern)
    filt = design_filter(L, cfg["Nh"])
    report = reconstruct_time(streams, k, filt, reference=x_clean)
    Path(cfg["out"]).write_text(
        timeseries_to_csv(report.x_rec, header_comment=_csv_header(cfg)[2:])
    )
    payload = {
        **_provenance(cfg),
        "rmse": report.rmse,
        "cond": report.cond,
        "L": L,
        "p": pattern.p,
        "C": list(pattern.C),
        "k": list(k.k),
        "Nh": cfg["Nh"],
        "valid": list(report.valid),
    }
    _write_json(cfg["report"] or cfg["out"] + ".json", payload)
    if cfg["plot_out"]:
        Path(cfg["plot_out"]).write_text(emit_plot_data(report.x_rec, "spectrum"))


def _cmd_blind(cfg: dict) -> None:
    from .sampling import streams_from_csv

    pattern = _load_pattern(cfg["pattern"])
    if cfg["streams"] is not None:
        streams = streams_from_csv(Path(cfg["streams"]).read_text(), pattern)
    elif cfg["spec"] is not None:
        spec = _load_spec(cfg["spec"])
        x = _synth_input(spec, cfg["M"], cfg["snr_db"], cfg["seed"])
        streams = coset_decompose(x, pattern)
    else:
        raise ValidationError("blind needs either a spec or a streams CSV")
    report = blind_mod.estimate_support(
        streams,
        order_method=cfg["order"],
        localize_method=cfg["localize"],
        q_min=cfg["qmin"],
        q_max=cfg["qmax"],
        epsilon_rel=cfg["epsilon"],
    )
    payload = {
        **_provenance(cfg),
        "q_hat": report.q_hat,
        "k_hat": list(report.k_hat.k),
        "criterion_values": [float(v) for v in report.order.criterion_values],
        "order_method": report.order.method,
        "eigenvalues": [float(v) for v in report.eigs.values],
    }
    if report.pseudo_spectrum is not None:
        payload["pseudo_spectrum"] = [
            (float(v) if math.isfinite(v) else "inf") for v in report.pseudo_spectrum
        ]
    if report.ls_trace is not None:
        payload["ls_trace"] = [float(v) for v in report.ls_trace]
    _write_json(cfg["out"], payload)
    if cfg["plot_out"]:
        Path(cfg["plot_out"]).write_text(emit_plot_data(report.eigs, "eigenvalues"))


def _cmd_sense(cfg: dict) -> None:
    scfg = SensingConfig(
        f_max=cfg["fmax"],
        B=cfg["B"],
        omega=cfg["omega"],
        order_method=cfg["order"],
        localize_method=cfg["localize"],
        p=cfg["p"],
        seed=cfg["seed"],
    )
    if cfg["input"] is not None:
        x = timeseries_from_csv(Path(cfg["input"]).read_text(), T=1.0 / cfg["fmax"])
    elif cfg["spec"] is not None:
        spec = _load_spec(cfg["spec"])
        if cfg["M"] is None:
            raise ValidationError("sense from a spec requires M")
        x = _synth_input(spec, cfg["M"], cfg["snr_db"], cfg["seed"])
    else:
        raise ValidationError("sense needs either an input CSV or a spec")
    report = sense(scfg, x)
    payload = {
        **_provenance(cfg),
        "occupied": list(report.occupied.k),
        "free_channels": [[lo, hi] for lo, hi in report.free_channels],
        "q_hat": report.q_hat,
        "diagnostics": {
            k: (v if not isinstance(v, float) or math.isfinite(v) else "inf")
            for k, v in report.diagnostics.items()
        },
    }
    _write_json(cfg["out"], payload)


def _cmd_pd_sweep(cfg: dict) -> None:
    scfg = SensingConfig(
        f_max=cfg["fmax"],
        B=cfg["B"],
        omega=cfg["omega"],
        order_method=cfg["order"],
        seed=cfg["seed"],
    )
    result = pd_sweep(
        scfg,
        cfg["snr"],
        cfg["cr"],
        trials=cfg["trials"],
        seed=cfg["seed"],
        n_blocks=cfg["blocks"],
        metric=cfg["metric"],
    )
    _write_csv(
        cfg["out"],
        _csv_header(cfg),
        ["snr_db", "cr", "trials", "detections", "pd", "ci95"],
        (
            [r.snr_db, r.cr, r.trials, r.detections, r.pd, r.ci95]
            for r in result.rows
        ),
    )
    if cfg["plot_out"]:
        Path(cfg["plot_out"]).write_text(emit_plot_data(result, "pd"))


_HANDLERS = {
    "synth": _cmd_synth,
    "pattern": _cmd_pattern,
    "cond-hist": _cmd_cond_hist,
    "reconstruct": _cmd_reconstruct,
    "blind": _cmd_blind,
    "sense": _cmd_sense,
    "pd-sweep": _cmd_pd_sweep,
}


def run(command: str, config: dict) -> int:
    """Validate the config against the command schema and execute it."""
    if command not in SCHEMAS:
        raise ValidationError(f"unknown command {command!r}")
    resolved = _validate(command, config)
    _HANDLERS[command](resolved)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subnyq")
    parser.add_argument("--version", action="store_true", help="print version JSON and exit")
    parser.add_argument("--schema", metavar="COMMAND", help="print a command's config schema and exit")
    sub = parser.add_subparsers(dest="command")
    for cmd, schema in SCHEMAS.items():
        sp = sub.add_parser(cmd)
        sp.add_argument("--config", default=None, help="JSON config file (flags override)")
        for name, meta in schema.items():
            flag = "--" + name.replace("_", "-")
            sp.add_argument(flag, dest=name, default=None, help=meta.get("help"))
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.version:
        print(json.dumps({"name": "subnyq", "version": __version__}))
        return 0
    if args.schema:
        if args.schema not in SCHEMAS:
            print(json.dumps({"error": f"unknown command {args.schema!r}"}), file=sys.stderr)
            return 2
        print(json.dumps({"command": args.schema, "fields": SCHEMAS[args.schema]}, sort_keys=True, indent=2))
        return 0
    if not args.command:
        parser.print_usage()
        return 2
    config = {}
    if args.config:
        config.update(json.loads(Path(args.config).read_text()))
    for name in SCHEMAS[args.command]:
        val = getattr(args, name, None)
        if val is not None:
            config[name] = val
    try:
        return run(args.command, config)
    except ValidationError as exc:
        print(json.dumps({"error": str(exc), "kind": "validation"}), file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(json.dumps({"error": str(exc), "kind": "runtime"}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
