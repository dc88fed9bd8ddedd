import configparser
import os
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, field_validator, model_validator
from typing_extensions import Annotated

from data_pipeline import SplitSpec
from errors import ConfigurationError, InputError
from graph_construct import GraphKind
from graph_construct.learned import DEFAULT_ALPHA, DEFAULT_EMBEDDING_DIM, DEFAULT_TEMPERATURE
from graph_construct.predefined import DEFAULT_BINS, DEFAULT_SMOOTHING
from stgnn_models import GRAPH_SOURCES, ModelSpec, required_blocks
from trainer import BASELINES, TrainConfig

# Define shared constants
DEFAULT_HORIZON = 12
DEFAULT_DISTANCE_EPS = 0.1
WORKDIR_ENV = "STGBENCH_WORKDIR"
SEED_ENV = "STGBENCH_SEED"
ARTIFACT_DIRS = ("data", "cache", "logs", "models", "reports")


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


CommaList = Annotated[List[str], BeforeValidator(_split_list)]


class DataSection(BaseModel):
    """Where the series comes from and how it is cut into windows"""
    model_config = ConfigDict(extra="forbid")

    series: Optional[Path] = Field(default=None, description="channel CSV (header = node ids)")
    metadata: Optional[Path] = None
    synthetic: bool = False
    synthetic_nodes: int = Field(default=20, ge=2)
    synthetic_steps: int = Field(default=2880, ge=288)
    synthetic_missing: float = Field(default=0.0, ge=0.0, lt=1.0)
    synthetic_seed: int = 0
    task: Optional[Literal["speed", "flow"]] = None
    train: Optional[float] = None
    val: Optional[float] = None
    test: Optional[float] = None
    p: int = Field(default=DEFAULT_HORIZON, ge=1)
    q: int = Field(default=DEFAULT_HORIZON, ge=1)
    channels: CommaList = Field(default_factory=list, description="subset of channels to keep, in order")

    @model_validator(mode="after")
    def _one_source(self):
        if self.synthetic == (self.series is not None):
            raise ValueError("set exactly one of 'series' or 'synthetic = true'")
        fractions = (self.train, self.val, self.test)
        if any(f is not None for f in fractions) and self.task is not None:
            raise ValueError("give either 'task' or explicit train/val/test fractions, not both")
        if any(f is not None for f in fractions) and any(f is None for f in fractions):
            raise ValueError("train, val and test fractions must be given together")
        self.split_spec()
        return self

    def split_spec(self) -> SplitSpec:
        if self.train is not None:
            return SplitSpec(self.train, self.val, self.test)
        return SplitSpec.for_task(self.task or "speed")


class GraphSection(BaseModel):
    """Graph kind plus the inputs and parameters its constructor takes"""
    model_config = ConfigDict(extra="forbid")

    kind: GraphKind = GraphKind.DISTANCE
    distances: Optional[Path] = None
    sigma2: Optional[float] = Field(default=None, gt=0.0, description="default: variance of the distances")
    eps: float = Field(default=DEFAULT_DISTANCE_EPS, ge=0.0)
    edges: Optional[Path] = None
    directed: bool = False
    poi: Optional[Path] = None
    channel: str = "0"
    band: Optional[int] = Field(default=None, ge=0)
    bins: int = Field(default=DEFAULT_BINS, ge=2)
    smoothing: float = Field(default=DEFAULT_SMOOTHING, gt=0.0)
    probabilities: Optional[Path] = None
    temperature: float = Field(default=DEFAULT_TEMPERATURE, gt=0.0)
    embedding_dim: int = Field(default=DEFAULT_EMBEDDING_DIM, ge=1)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0.0)
    seed: int = 0
    prior: Optional[Path] = Field(default=None, description="graph CSV the learned graph is regularised towards")

    @model_validator(mode="after")
    def _inputs_for_kind(self):
        needs = {
            GraphKind.CONNECTIVITY: ("edges", self.edges),
            GraphKind.FUNCTIONALITY: ("poi", self.poi),
            GraphKind.SAMPLED: ("probabilities", self.probabilities),
        }
        if self.kind in needs and needs[self.kind][1] is None:
            key, _ = needs[self.kind]
            raise ValueError(f"graph kind '{self.kind.value}' needs the '{key}' input")
        return self


class ModelSection(BaseModel):
    """Model hyperparameters; windows, node count and seed come from the other sections"""
    model_config = ConfigDict(extra="forbid")

    archetype: Literal["rnn", "cnn", "attention"] = "rnn"
    graph_source: str = "fixed"
    conv: str = "diffusion"
    hidden: int = Field(default=16, ge=1)
    layers: int = Field(default=1, ge=1)
    k: int = Field(default=2, ge=1)
    gat_heads: int = Field(default=2, ge=1)
    beta: float = Field(default=0.05, ge=0.0, le=1.0)
    aggregation: str = "linear"
    kernel_size: int = Field(default=2, ge=2)
    attention_heads: int = Field(default=2, ge=1)
    positional_encoding: bool = True
    embedding_dim: int = Field(default=DEFAULT_EMBEDDING_DIM, ge=1)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0.0)
    temperature: float = Field(default=DEFAULT_TEMPERATURE, gt=0.0)

    @field_validator("graph_source")
    @classmethod
    def _known_source(cls, value: str) -> str:
        if value not in GRAPH_SOURCES:
            raise ValueError(f"unknown graph source '{value}', expected one of {GRAPH_SOURCES}")
        return value

    def spec(self, p: int, q: int, nodes: int = 1, input_dim: int = 1, seed: int = 0, **overrides) -> ModelSpec:
        fields = {**self.model_dump(), **overrides}
        return ModelSpec(p=p, q=q, nodes=nodes, input_dim=input_dim, output_dim=input_dim, seed=seed, **fields)


class TrainSection(TrainConfig):
    """[train] keys are exactly the TrainConfig fields"""


class OutputSection(BaseModel):
    """Artifact root and run name; the sub-directories follow a fixed layout"""
    model_config = ConfigDict(extra="forbid")

    workdir: Optional[Path] = None
    run: str = Field(default="run", pattern=r"^[A-Za-z0-9_.-]+$")


class BenchmarkSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    models: CommaList = Field(default_factory=list, description="archetype:graph-source pairs")
    baselines: CommaList = Field(default_factory=lambda: list(BASELINES))

    @field_validator("models")
    @classmethod
    def _pairs(cls, value: List[str]) -> List[str]:
        for entry in value:
            archetype, _, source = entry.partition(":")
            if archetype not in ("rnn", "cnn", "attention") or source not in GRAPH_SOURCES:
                raise ValueError(f"benchmark entry '{entry}' is not archetype:graph-source")
        return value

    @field_validator("baselines")
    @classmethod
    def _known_baselines(cls, value: List[str]) -> List[str]:
        unknown = [b for b in value if b not in BASELINES]
        if unknown:
            raise ValueError(f"unknown baselines {unknown}, expected a subset of {list(BASELINES)}")
        return value

    def pairs(self) -> List[Tuple[str, str]]:
        return [tuple(entry.split(":", 1)) for entry in self.models]


class RunConfig(BaseModel):
    """One benchmark run: every section validated before any artifact is touched"""
    model_config = ConfigDict(extra="forbid")

    data: DataSection
    graph: GraphSection = Field(default_factory=GraphSection)
    model: ModelSection = Field(default_factory=ModelSection)
    train: TrainSection = Field(default_factory=TrainSection)
    output: OutputSection = Field(default_factory=OutputSection)
    benchmark: BenchmarkSection = Field(default_factory=BenchmarkSection)

    @model_validator(mode="after")
    def _consistent(self):
        if self.graph.kind == GraphKind.DISTANCE and self.graph.distances is None and not self.data.synthetic:
            raise ValueError("graph kind 'distance' needs the 'distances' input")
        variants = [{}] + [{"archetype": a, "graph_source": s} for a, s in self.benchmark.pairs()]
        for overrides in variants:
            try:
                spec = self.model.spec(self.data.p, self.data.q, **overrides)
            except ValidationError as e:
                raise ValueError(f"model {overrides or '[model]'}: {e.errors()[0]['msg']}") from None
            need = required_blocks(spec.kernel_size, spec.p)
            if spec.archetype == "cnn" and need > spec.layers:
                raise ValueError(f"cnn needs at least {need} blocks (layers) to cover P = {spec.p}")
            if spec.conv == "cheb" and spec.graph_source == "fixed" and self._graph_is_directed():
                raise ValueError(
                    f"Chebyshev filters need an undirected graph; the {self.graph.kind.value} graph is directed"
                )
        return self

    def _graph_is_directed(self) -> bool:
        """Direction known from the configuration alone; distance tables are checked when the graph is built."""
        g = self.graph
        return g.kind == GraphKind.SAMPLED or (g.kind == GraphKind.CONNECTIVITY and g.directed)

    @property
    def workdir(self) -> Path:
        return self.output.workdir or Path(".")

    def artifact_dir(self, name: str) -> Path:
        if name not in ARTIFACT_DIRS:
            raise ValueError(f"unknown artifact directory '{name}', expected one of {ARTIFACT_DIRS}")
        return self.workdir / name

    def snapshot(self) -> Dict:
        return self.model_dump(mode="json")


def _resolve(base: Path, path: Optional[Path]) -> Optional[Path]:
    if path is None or path.is_absolute():
        return path
    return base / path


INPUT_PATHS = (
    ("data", "series"), ("data", "metadata"), ("graph", "distances"), ("graph", "edges"),
    ("graph", "poi"), ("graph", "probabilities"),
)


def _check_paths(config: RunConfig) -> None:
    for section, key in INPUT_PATHS:
        path = getattr(getattr(config, section), key)
        if path is not None and not path.is_file():
            raise ConfigurationError(f"file not found: {path}", key=f"{section}.{key}")


def load_run_config(path, seed: Optional[int] = None) -> RunConfig:
    """Parse and validate an INI run file.

    Relative paths resolve against the file's directory. The seed override
    (``--seed``) beats STGBENCH_SEED, which beats the file's ``[train] seed``.
    """
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except configparser.Error as e:
        raise ConfigurationError(str(e).splitlines()[0], key="config") from None

    raw = {name: {k: v for k, v in parser.items(name) if v.strip() != ""} for name in parser.sections()}
    env_seed = os.getenv(SEED_ENV)
    override = seed if seed is not None else env_seed
    if override is not None:
        raw.setdefault("train", {})["seed"] = str(override)
    if "workdir" not in raw.get("output", {}) and os.getenv(WORKDIR_ENV):
        raw.setdefault("output", {})["workdir"] = os.getenv(WORKDIR_ENV)

    try:
        config = RunConfig(**raw)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(p) for p in first["loc"]) or None
        raise ConfigurationError(first["msg"], key=key) from None

    base = path.resolve().parent
    for section, key in INPUT_PATHS + (("graph", "prior"),):
        part = getattr(config, section)
        setattr(part, key, _resolve(base, getattr(part, key)))
    config.output.workdir = _resolve(base, config.output.workdir) or base
    _check_paths(config)
    return config
