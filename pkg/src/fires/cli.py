"""Command-line front end.

    fires run CONFIG [--seed N] [--out PATH]
    fires plot METRICS --kind accuracy|stability|tradeoff [--out PATH]

A config is an INI file. Exactly one of the data sections ``[csv]``,
``[rbf]`` or ``[tree]`` must be present; ``[fires]`` and ``[run]`` are
optional and fall back to the defaults below. A comma-separated
``batch_size`` or ``selected_fraction`` turns the run into a grid.

Exit codes: 0 success, 1 config error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .engine import BASE_MODELS, EngineConfig
from .harness import RunMetrics, grid_run, n_selected_for, prequential_run
from .stream import DataError, Stream, gen_rbf_stream, gen_tree_stream, read_csv_stream
from .weighting import WeightConfig

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
PLOT_KINDS = ("accuracy", "stability", "tradeoff")

# spawn-key namespace for generator seeds, distinct from the engine's
_DATA_KEY = 2


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


def _int(v):
    return int(v)


def _float(v):
    return float(v)


def _int_list(v):
    return [int(s) for s in str(v).split(",") if s.strip()]


def _float_list(v):
    return [float(s) for s in str(v).split(",") if s.strip()]


def _opt_int(v):
    return None if str(v).strip().lower() in ("", "none") else int(v)


def _opt_str(v):
    return None if str(v).strip().lower() in ("", "none") else str(v)


# section -> key -> (parser, default); a default of ... means required
SCHEMA = {
    "csv": {"path": (str, ...), "label_column": (_opt_str, None)},
    "rbf": {
        "n_samples": (_int, ...),
        "n_features": (_int, ...),
        "n_centroids": (_int, 50),
        "max_spread": (_float, 1.0),
    },
    "tree": {
        "n_samples": (_int, ...),
        "n_num_features": (_int, ...),
        "n_cat_features": (_int, 0),
        "n_cat_values": (_int, 5),
        "n_relevant": (_opt_int, None),
        "max_depth": (_int, 5),
        "min_depth": (_int, 3),
        "leaf_fraction": (_float, 0.15),
        "label_noise": (_float, 0.0),
    },
    "fires": {
        "base_model": (str, "glm"),
        "n_selected": (_opt_int, None),
        "selected_fraction": (_float_list, [0.1]),
        "alpha_mu": (_float, 0.01),
        "alpha_sigma": (_float, 0.01),
        "lambda_s": (_float, 0.01),
        "lambda_r": (_float, 0.01),
        "mc_samples": (_int, 5),
        "hidden_layers": (_int_list, [100, 100, 100]),
        "tree_depth": (_int, 3),
        "sdt_penalty": (_float, 0.01),
    },
    "run": {
        "batch_size": (_int_list, [25]),
        "window": (_int, 10),
        "seed": (_int, 0),
        "jobs": (_int, 1),
        "out": (_opt_str, None),
    },
}
DATA_SECTIONS = ("csv", "rbf", "tree")


@dataclass
class RunConfig:
    source: str
    data: dict
    fires: dict
    run: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.run["seed"]

    @property
    def is_grid(self) -> bool:
        return len(self.run["batch_size"]) > 1 or (
            self.fires["n_selected"] is None and len(self.fires["selected_fraction"]) > 1
        )

    def engine_config(self, n_selected: int) -> EngineConfig:
        f = self.fires
        return EngineConfig(
            n_selected=n_selected,
            base_model=f["base_model"],
            alpha_mu=f["alpha_mu"],
            alpha_sigma=f["alpha_sigma"],
            weight_cfg=WeightConfig(f["lambda_s"], f["lambda_r"]),
            mc_samples=f["mc_samples"],
            hidden_layers=tuple(f["hidden_layers"]),
            tree_depth=f["tree_depth"],
            sdt_penalty=f["sdt_penalty"],
            seed=self.seed,
        )

    def to_sections(self) -> dict:
        """Resolved config, one dict per INI section; parses back to an equal config."""
        return {self.source: dict(self.data), "fires": dict(self.fires), "run": dict(self.run)}

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        for name, values in self.to_sections().items():
            parser[name] = {k: _ini_value(v) for k, v in values.items()}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def _ini_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, (list, tuple)):
        return ",".join(str(x) for x in v)
    return str(v)


def _parse_section(name, raw: dict) -> dict:
    schema = SCHEMA[name]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"[{name}] unknown key(s): {', '.join(unknown)}")
    out = {}
    for key, (conv, default) in schema.items():
        if key not in raw:
            if default is ...:
                raise ConfigError(f"[{name}] missing required key '{key}'")
            out[key] = list(default) if isinstance(default, list) else default
            continue
        try:
            out[key] = conv(raw[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{name}] {key}: cannot parse {raw[key]!r} ({exc})") from None
    return out


def config_from_sections(sections: dict) -> RunConfig:
    unknown = sorted(set(sections) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    sources = [s for s in DATA_SECTIONS if s in sections]
    if len(sources) != 1:
        raise ConfigError(
            "exactly one data source section ([csv], [rbf] or [tree]) is required, "
            f"found {len(sources)}"
        )
    source = sources[0]
    cfg = RunConfig(
        source=source,
        data=_parse_section(source, sections[source]),
        fires=_parse_section("fires", sections.get("fires", {})),
        run=_parse_section("run", sections.get("run", {})),
    )
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    f, r = cfg.fires, cfg.run
    if f["base_model"] not in BASE_MODELS:
        raise ConfigError(f"[fires] base_model must be one of {', '.join(BASE_MODELS)}")
    if not f["selected_fraction"]:
        raise ConfigError("[fires] selected_fraction is empty")
    for frac in f["selected_fraction"]:
        if not 0 < frac <= 1:
            raise ConfigError(f"[fires] selected_fraction must be in (0, 1], got {frac}")
    if f["n_selected"] is not None and f["n_selected"] < 1:
        raise ConfigError("[fires] n_selected must be >= 1")
    for key in ("alpha_mu", "alpha_sigma", "lambda_s", "lambda_r", "sdt_penalty"):
        if not f[key] > 0 and not (key == "sdt_penalty" and f[key] == 0):
            raise ConfigError(f"[fires] {key} must be positive")
    if f["mc_samples"] < 1 or f["tree_depth"] < 1:
        raise ConfigError("[fires] mc_samples and tree_depth must be >= 1")
    if not f["hidden_layers"] or min(f["hidden_layers"]) < 1:
        raise ConfigError("[fires] hidden_layers must be positive sizes")
    if not r["batch_size"] or min(r["batch_size"]) < 1:
        raise ConfigError("[run] batch_size must be positive")
    if r["window"] < 2:
        raise ConfigError("[run] window must be >= 2")
    if r["jobs"] < 1:
        raise ConfigError("[run] jobs must be >= 1")


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return config_from_sections({s: dict(parser[s]) for s in parser.sections()})


def build_stream(cfg: RunConfig) -> Stream:
    d = cfg.data
    if cfg.source == "csv":
        stream = read_csv_stream(d["path"], d["label_column"])
    else:
        seed = np.random.SeedSequence(cfg.seed, spawn_key=(_DATA_KEY,))
        try:
            if cfg.source == "rbf":
                stream = gen_rbf_stream(seed, **d)
            else:
                stream = gen_tree_stream(seed, **d)
        except ValueError as exc:
            raise ConfigError(f"[{cfg.source}] {exc}") from None
    stream.check_binary()
    return stream


def _check_selection(cfg: RunConfig, n_features: int) -> None:
    m = cfg.fires["n_selected"]
    if m is not None and m > n_features:
        raise ConfigError(f"[fires] n_selected={m} exceeds the stream's {n_features} features")


def execute(cfg: RunConfig, stream: Stream) -> list[dict]:
    """Run the configured experiment and return the JSON-lines objects."""
    _check_selection(cfg, stream.n_features)
    echo = cfg.to_sections()
    # where the metrics go is not part of the experiment
    echo["run"].pop("out")
    window, batches = cfg.run["window"], cfg.run["batch_size"]
    if not cfg.is_grid:
        m = cfg.fires["n_selected"] or n_selected_for(cfg.fires["selected_fraction"][0], stream.n_features)
        metrics = prequential_run(stream, cfg.engine_config(m), batches[0], window)
        return [r.as_dict() for r in metrics.records] + [_summary_object(metrics, echo)]

    if cfg.fires["n_selected"] is not None:
        fractions = [cfg.fires["n_selected"] / stream.n_features]
    else:
        fractions = cfg.fires["selected_fraction"]
    grid = grid_run(stream, batches, fractions, cfg.engine_config(1), window, cfg.run["jobs"])
    lines = []
    for cell, (b, frac, metrics) in enumerate(grid.cells):
        lines += [{"cell": cell, **r.as_dict()} for r in metrics.records]
        lines.append(_summary_object(metrics, echo, cell=cell, batch_size=b, selected_fraction=frac))
    lines.append({"grid_summary": {**grid.summary(), "config": echo}})
    return lines


def _summary_object(metrics: RunMetrics, echo: dict, **cell) -> dict:
    summary = metrics.summary()
    summary["engine"] = summary.pop("config")
    summary["config"] = echo
    summary.update(cell)
    return {"summary": summary}


def write_jsonl(lines, out) -> None:
    text = "".join(json.dumps(obj, sort_keys=True) + "\n" for obj in lines)
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def run(config_path, seed: int | None = None, out=None) -> int:
    """Run one experiment or grid from a config file; returns the exit status."""
    try:
        cfg = load_config(config_path)
        if seed is not None:
            cfg.run["seed"] = int(seed)
        if out is not None:
            cfg.run["out"] = str(out)
        stream = build_stream(cfg)
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            lines = execute(cfg, stream)
        write_jsonl(lines, cfg.run["out"])
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FloatingPointError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def read_metrics(path) -> tuple[list[dict], list[dict]]:
    """Step records and run summaries from a JSON-lines metrics file."""
    records, summaries = [], []
    try:
        with open(path, encoding="utf-8") as fh:
            for n, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise DataError(f"{path}:{n}: expected a JSON object")
                if "summary" in obj:
                    summaries.append(obj["summary"])
                elif "grid_summary" in obj:
                    continue
                elif {"t", "acc", "stability"} <= obj.keys():
                    records.append(obj)
                else:
                    raise DataError(f"{path}:{n}: not a step record or summary")
    except OSError as exc:
        raise DataError(f"cannot read metrics {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON ({exc})") from None
    return records, summaries


def plot_rows(records, summaries, kind: str) -> tuple[list[str], list[list]]:
    """Header and rows of plot-ready data for ``kind``."""
    if kind == "tradeoff":
        if not summaries:
            raise DataError("metrics contain no summary")
        return ["acc", "stability", "acc_var"], [
            [s["acc"], s["stability"], s["acc_var"]] for s in summaries
        ]
    key = "acc" if kind == "accuracy" else "stability"
    grid = any("cell" in r for r in records)
    header = (["cell"] if grid else []) + ["t", key]
    rows = []
    for r in records:
        if r[key] is None:
            continue
        rows.append(([r["cell"]] if grid else []) + [r["t"], r[key]])
    return header, rows


def emit_plot_data(metrics_path, kind: str, out=None) -> int:
    """Write CSV plot data for ``kind``; returns the exit status."""
    if kind not in PLOT_KINDS:
        print(f"config error: --kind must be one of {', '.join(PLOT_KINDS)}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        header, rows = plot_rows(*read_metrics(metrics_path), kind)
    except (DataError, KeyError, TypeError) as exc:
        print(f"data error: malformed metrics: {exc}", file=sys.stderr)
        return EXIT_DATA
    fh = sys.stdout if out is None else open(out, "w", newline="", encoding="utf-8")
    try:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(["" if v is None else v for v in row] for row in rows)
    finally:
        if out is not None:
            fh.close()
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage mistakes are config errors, not argparse's default status 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fires", description="Online feature selection experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from an INI config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None, help="override [run] seed")
    p_run.add_argument("--out", default=None, help="metrics file (default: [run] out, else stdout)")
    p_plot = sub.add_parser("plot", help="emit plot-ready CSV from a metrics file")
    p_plot.add_argument("metrics")
    p_plot.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p_plot.add_argument("--out", default=None, help="CSV file (default: stdout)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run(args.config, seed=args.seed, out=args.out)
    return emit_plot_data(args.metrics, args.kind, args.out)


if __name__ == "__main__":
    sys.exit(main())
