import io
import json
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from data_pipeline import (
    METRIC_COLUMNS, DatasetSplits, RawSeries, SeriesStats, compute_stats, fit_scaler, ingest_csv,
    split_windows, summary_row, synth_traffic,
)
from errors import CompatibilityError, InputError, StgBenchError
from graph_construct import (
    AdjMatrix, DistanceTable, GraphKind, ProbabilityGraph, adaptive_graph, build_connectivity_graph,
    build_distance_graph, build_distribution_graph, build_functionality_graph, build_semantic_graph,
    export_graph, init_embeddings, load_graph, read_distance_csv, read_edges_csv, read_poi_csv,
    sample_graph_gumbel,
)
from models import RunConfig
from stgnn_models import build_model
from tools.artifact_tools import (
    RunDirectoryLock, atomic_write_bytes, atomic_write_frame, atomic_write_json, read_jsonl,
    read_matrix_csv, write_jsonl, write_matrix_csv,
)
from tracing import RunTracer, get_tracer
from trainer import RunRecord, evaluate, evaluate_baseline, evaluate_model, train

COMMANDS = ("ingest", "build-graph", "train", "evaluate", "benchmark", "report")


def metrics_dict(table: pd.DataFrame) -> Dict[str, Dict[str, float]]:
    return {str(h): {c: float(row[c]) for c in METRIC_COLUMNS} for h, row in table.iterrows()}


class BenchmarkManager:
    """Runs one pipeline command against the artifact directories of a run configuration."""

    def __init__(self, config: RunConfig, tracer: Optional[RunTracer] = None, console: Optional[Console] = None):
        self.config = config
        self.tracer = tracer or get_tracer()
        self.console = console or Console(highlight=False)
        self.cache_dir = config.artifact_dir("cache")
        self.logs_dir = config.artifact_dir("logs")
        self.models_dir = config.artifact_dir("models")
        self.reports_dir = config.artifact_dir("reports")

    def run(self, command: str):
        """Run ``command`` while holding the run-directory lock."""
        handlers = {
            "ingest": self.ingest,
            "build-graph": self.build_graph,
            "train": self.train,
            "evaluate": self.evaluate,
            "benchmark": self.benchmark,
            "report": self.report,
        }
        if command not in handlers:
            raise InputError(f"unknown command '{command}', expected one of {COMMANDS}")

        self.tracer.start_workflow(command, {"workdir": str(self.config.workdir), "seed": self.config.train.seed})
        with RunDirectoryLock(self.config.workdir):
            try:
                result = handlers[command]()
                self.tracer.complete_workflow(command, success=True)
            except StgBenchError as e:
                self.tracer.log_error(command, str(e))
                self.tracer.complete_workflow(command, success=False)
                raise
            finally:
                self._write_events(command)
        return result

    def _write_events(self, command: str) -> None:
        if self.tracer.events:
            write_jsonl(self.logs_dir / f"{command}_events.jsonl", self.tracer.to_records())

    # ----- ingest -----

    def ingest(self) -> SeriesStats:
        data = self.config.data
        step = self.tracer.start_step("ingest", "synthetic series" if data.synthetic else str(data.series))
        distances = None
        if data.synthetic:
            synthetic = synth_traffic(data.synthetic_nodes, data.synthetic_steps, data.synthetic_seed,
                                      data.synthetic_missing)
            series, distances = synthetic.series, synthetic.distances
        else:
            series = ingest_csv(data.series, data.metadata)
        if data.channels:
            keep = [series.channel_index(c) for c in data.channels]
            series = RawSeries(series.values[:, :, keep], series.node_ids, series.interval_minutes,
                               [series.channels[i] for i in keep], series.start_slot)
        stats = compute_stats(series)

        buffer = io.BytesIO()
        np.save(buffer, series.values)
        atomic_write_bytes(self.cache_dir / "series.npy", buffer.getvalue())
        atomic_write_json(self.cache_dir / "series.json", {
            "node_ids": series.node_ids,
            "interval_minutes": series.interval_minutes,
            "channels": series.channels,
            "start_slot": series.start_slot,
            "stats": stats.model_dump(),
        })
        if distances is not None:
            write_matrix_csv(self.cache_dir / "distances.csv", distances.d)
        self.tracer.log_artifact("ingest", str(self.cache_dir / "series.npy"), "preprocessed series")

        self._print_stats(stats)
        self.tracer.complete_step(step, "ingest", f"{stats.nodes} nodes x {stats.steps} steps")
        return stats

    def _cached_series(self) -> RawSeries:
        values_path, meta_path = self.cache_dir / "series.npy", self.cache_dir / "series.json"
        if not values_path.exists() or not meta_path.exists():
            raise CompatibilityError(f"no preprocessed series under {self.cache_dir}; run ingest first")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        return RawSeries(np.load(values_path), list(meta["node_ids"]), int(meta["interval_minutes"]),
                         list(meta["channels"]), int(meta["start_slot"]))

    # ----- build-graph -----

    def build_graph(self) -> AdjMatrix:
        g = self.config.graph
        step = self.tracer.start_step("build-graph", g.kind.value)
        series = self._cached_series()
        graph = self._construct(series)
        path = export_graph(graph, self.cache_dir / "graph.csv", seed=g.seed)
        self.tracer.log_artifact("build-graph", str(path), f"{g.kind.value} graph")
        self.tracer.complete_step(step, "build-graph", f"{graph.n} nodes, {int(np.count_nonzero(graph.weights))} edges")
        return graph

    def _construct(self, series: RawSeries) -> AdjMatrix:
        g = self.config.graph
        kind = g.kind
        channel = series.channel_index(int(g.channel) if g.channel.isdigit() else g.channel)
        # similarity graphs only look at the training segment
        train_end, _ = self.config.data.split_spec().boundaries(series.steps)
        history = series.values[:train_end]

        if kind == GraphKind.DISTANCE:
            if g.distances is not None:
                table = read_distance_csv(g.distances, series.node_ids)
            else:
                cached = self.cache_dir / "distances.csv"
                if not cached.exists():
                    raise CompatibilityError("distance graph needs a distances file or a synthetic ingest")
                table = DistanceTable(read_matrix_csv(cached))
            sigma2 = g.sigma2 or float(np.std(table.d[~np.eye(table.n, dtype=bool)])) ** 2
            return build_distance_graph(table, sigma2, g.eps)
        if kind == GraphKind.CONNECTIVITY:
            edges, n = read_edges_csv(g.edges, series.node_ids)
            return build_connectivity_graph(edges, n, g.directed)
        if kind == GraphKind.SEMANTIC:
            return build_semantic_graph(history, channel, g.eps, g.band)
        if kind == GraphKind.FUNCTIONALITY:
            return build_functionality_graph(read_poi_csv(g.poi, series.node_ids))
        if kind == GraphKind.DISTRIBUTION:
            return build_distribution_graph(history, channel, g.bins, g.smoothing)
        if kind == GraphKind.SAMPLED:
            return sample_graph_gumbel(ProbabilityGraph(read_matrix_csv(g.probabilities), g.temperature), g.seed)

        variant = kind.value[len("adaptive-"):]
        rng = np.random.default_rng(g.seed)
        emb = init_embeddings(variant, series.nodes, rng, g.embedding_dim, g.alpha, feature_dim=series.features)
        x = history.mean(axis=0) if variant == "attention" else None
        return adaptive_graph(variant, emb, x).detached()

    # ----- train / evaluate -----

    def _splits(self, series: RawSeries) -> DatasetSplits:
        data = self.config.data
        split = data.split_spec()
        scaler = fit_scaler(series.values, split, series.channels)
        return split_windows(series, split, scaler, data.p, data.q)

    def _cached_graph(self, series: RawSeries, required: bool) -> Optional[AdjMatrix]:
        path = self.cache_dir / "graph.csv"
        if not path.exists():
            if required:
                raise CompatibilityError(f"no graph at {path}; run build-graph first")
            return None
        graph = load_graph(path)
        if graph.n != series.nodes:
            raise CompatibilityError(f"cached graph has {graph.n} nodes, the series has {series.nodes}")
        return graph

    def _prior(self, series: RawSeries) -> Optional[AdjMatrix]:
        if self.config.graph.prior is None:
            return None
        if not self.config.graph.prior.exists():
            raise CompatibilityError(f"prior graph not found: {self.config.graph.prior}")
        prior = load_graph(self.config.graph.prior)
        if prior.n != series.nodes:
            raise CompatibilityError(f"prior graph has {prior.n} nodes, the series has {series.nodes}")
        return prior

    def _train_one(self, series: RawSeries, data: DatasetSplits, run_name: str, **overrides) -> RunRecord:
        cfg = self.config
        spec = cfg.model.spec(cfg.data.p, cfg.data.q, nodes=series.nodes, input_dim=series.features,
                              seed=cfg.train.seed, **overrides)
        step = self.tracer.start_step("train", f"{run_name} ({spec.archetype}, {spec.graph_source})")
        graph = self._cached_graph(series, required=spec.graph_source == "fixed")
        model = build_model(spec, graph=graph if spec.graph_source == "fixed" else None, prior=self._prior(series))
        record = train(model, data, cfg.train, run_name=run_name, checkpoint_stem=self.models_dir / run_name,
                       tracer=self.tracer, config_snapshot=cfg.snapshot())
        record.metrics = metrics_dict(evaluate_model(model, data, "test"))
        self._write_run_log(record)
        self.tracer.complete_step(step, "train", f"best epoch {record.best_epoch}, val {record.best_val_loss:.4f}",
                                  {"parameters": record.parameter_count, "steps": record.steps})
        return record

    def _write_run_log(self, record: RunRecord) -> Path:
        lines = [{"type": "epoch", **epoch.model_dump()} for epoch in record.epochs]
        lines.append({"type": "summary", **record.model_dump(mode="json")})
        path = write_jsonl(self.logs_dir / f"{record.run}.jsonl", lines)
        self.tracer.log_artifact("train", str(path), "run log")
        return path

    def train(self) -> RunRecord:
        series = self._cached_series()
        return self._train_one(series, self._splits(series), self.config.output.run)

    def evaluate(self) -> pd.DataFrame:
        run = self.config.output.run
        step = self.tracer.start_step("evaluate", run)
        series = self._cached_series()
        data = self._splits(series)
        graph = self._cached_graph(series, required=False)
        table = evaluate(self.models_dir / run, data, "test", graph=graph)
        path = atomic_write_frame(self.reports_dir / f"{run}_metrics.csv", table.reset_index())
        self.tracer.log_artifact("evaluate", str(path), "metrics table")
        self._print_frame(f"Test metrics: {run}", table.reset_index())
        self.tracer.complete_step(step, "evaluate", f"average MAE {table.loc['average', 'mae']:.4f}")
        return table

    # ----- benchmark -----

    def benchmark(self) -> pd.DataFrame:
        """Every configured archetype:graph-source pair plus the baselines, on the same splits and seed."""
        bench = self.config.benchmark
        step = self.tracer.start_step("benchmark", f"{len(bench.models)} models, {len(bench.baselines)} baselines")
        series = self._cached_series()
        data = self._splits(series)

        rows: List[dict] = []
        efficiency: List[dict] = []
        for archetype, source in bench.pairs():
            run_name = f"{archetype}-{source}"
            record = self._train_one(series, data, run_name, archetype=archetype, graph_source=source)
            table = pd.DataFrame.from_dict(record.metrics, orient="index")
            rows.append({"model": run_name, **summary_row(table), "parameters": record.parameter_count})
            efficiency.append({"model": run_name, "parameters": record.parameter_count,
                               "seconds_per_epoch": record.seconds_per_epoch})
        for kind in bench.baselines:
            table = evaluate_baseline(kind, data, self.config.data.q)
            rows.append({"model": kind, **summary_row(table), "parameters": 0})

        frame = pd.DataFrame(rows)
        path = atomic_write_frame(self.reports_dir / "benchmark.csv", frame)
        self.tracer.log_artifact("benchmark", str(path), "comparison table")
        if efficiency:
            eff_path = atomic_write_frame(self.reports_dir / "benchmark_efficiency.csv", pd.DataFrame(efficiency))
            self.tracer.log_artifact("benchmark", str(eff_path), "efficiency table")
        self._print_frame("Benchmark", frame)
        self.tracer.complete_step(step, "benchmark", f"{len(rows)} rows")
        return frame

    # ----- report -----

    def _run_summaries(self) -> List[dict]:
        summaries = []
        for path in sorted(self.logs_dir.glob("*.jsonl")):
            summaries.extend(line for line in read_jsonl(path) if line.get("type") == "summary")
        if not summaries:
            raise InputError(f"no run logs under {self.logs_dir}")
        return summaries

    def report(self) -> List[Path]:
        """Plot-ready CSVs: MAE per horizon for each run and parameters against epoch time."""
        step = self.tracer.start_step("report", str(self.logs_dir))
        written = []
        efficiency = []
        for summary in self._run_summaries():
            record = RunRecord.model_validate({k: v for k, v in summary.items() if k != "type"})
            if record.metrics:
                horizons = sorted((h for h in record.metrics if h != "average"), key=int)
                curve = pd.DataFrame({
                    "horizon": [int(h) for h in horizons],
                    "mae": [record.metrics[h]["mae"] for h in horizons],
                })
                written.append(atomic_write_frame(self.reports_dir / f"{record.run}_horizon_mae.csv", curve))
            efficiency.append({"run": record.run, "parameters": record.parameter_count,
                               "seconds_per_epoch": record.seconds_per_epoch})
        written.append(atomic_write_frame(self.reports_dir / "efficiency.csv", pd.DataFrame(efficiency)))
        for path in written:
            self.tracer.log_artifact("report", str(path), "report")
        self.tracer.complete_step(step, "report", f"{len(efficiency)} runs")
        return written

    # ----- console output -----

    def _print_stats(self, stats: SeriesStats) -> None:
        table = Table(title="Dataset")
        for column in ("nodes", "steps", "channels", "interval (min)", "missing ratio"):
            table.add_column(column)
        table.add_row(str(stats.nodes), str(stats.steps), ", ".join(stats.channels),
                      str(stats.interval_minutes), f"{stats.missing_ratio:.3%}")
        self.console.print(table)

    def _print_frame(self, title: str, frame: pd.DataFrame) -> None:
        table = Table(title=title)
        for column in frame.columns:
            table.add_column(str(column))
        for _, row in frame.iterrows():
            table.add_row(*(f"{v:.4f}" if isinstance(v, float) else str(v) for v in row))
        self.console.print(table)
