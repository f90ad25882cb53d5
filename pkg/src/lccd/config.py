"""Pipeline configuration and its flat ``key = value`` text format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from lccd.descriptor import DEFAULT_PAIRS, channel_dim, normalize_pairs, spatial_dim
from lccd.divergence import HELLINGER, DivergenceKind
from lccd.errors import InvalidConfigError

ENCODINGS = ("fisher", "bow")


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the pipeline.

    Defaults describe the full-size setup (470x380 images, 50x50 regions,
    20 bins, window 3, Hellinger, RG/RB pairs, PCA to 80) with a 32-component
    codebook, which keeps fitting fast on a single machine.
    """

    resize_width: int = 470
    resize_height: int = 380
    grid_rows: int = 50
    grid_cols: int = 50
    bins: int = 20
    subspace_window: int = 3
    divergence: DivergenceKind = HELLINGER
    channel_pairs: tuple[str, ...] = DEFAULT_PAIRS
    pca_dim: int = 80
    pca_sample_cap: int = 200_000
    pca_whiten: bool = False
    gmm_components: int = 32
    gmm_max_iter: int = 100
    gmm_tol: float = 1e-5
    gmm_sample_cap: int = 200_000
    encoding: str = "fisher"
    svm_lambda: float = 1e-4
    svm_epochs: int = 50
    seed: int = 0
    workers: int = 1
    manifest: str = ""
    out_dir: str = ""

    def __post_init__(self):
        if isinstance(self.divergence, str):
            object.__setattr__(self, "divergence", DivergenceKind.parse(self.divergence))
        if isinstance(self.channel_pairs, str):
            object.__setattr__(self, "channel_pairs",
                               tuple(p for p in self.channel_pairs.replace(" ", "").split(",") if p))
        object.__setattr__(self, "channel_pairs", normalize_pairs(self.channel_pairs))
        self.validate()

    def validate(self):
        if self.grid_rows < 3 or self.grid_cols < 3:
            raise InvalidConfigError("grid must be at least 3x3 regions")
        if self.resize_width < self.grid_cols or self.resize_height < self.grid_rows:
            raise InvalidConfigError("resized image is smaller than the region grid")
        if self.bins < 2:
            raise InvalidConfigError("bins must be at least 2")
        if not 1 <= self.subspace_window <= self.bins:
            raise InvalidConfigError("subspace_window must lie in [1, bins]")
        if self.pca_dim < 1 or self.pca_dim > min(self.spatial_dim, self.channel_dim):
            raise InvalidConfigError(
                f"pca_dim {self.pca_dim} exceeds raw stream dims "
                f"({self.spatial_dim}, {self.channel_dim})")
        if self.gmm_components < 1:
            raise InvalidConfigError("gmm_components must be positive")
        if self.encoding not in ENCODINGS:
            raise InvalidConfigError(f"encoding must be one of {ENCODINGS}")
        if self.svm_lambda <= 0 or self.svm_epochs < 1:
            raise InvalidConfigError("svm_lambda must be > 0 and svm_epochs >= 1")
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1")

    @property
    def spatial_dim(self) -> int:
        return spatial_dim(self.bins, self.subspace_window)

    @property
    def channel_dim(self) -> int:
        return channel_dim(self.bins, self.subspace_window, len(self.channel_pairs))

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    # --- text form ------------------------------------------------------

    def dumps(self) -> str:
        lines = ["# lccd pipeline configuration"]
        for f in fields(self):
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "PipelineConfig":
        known = {f.name: f for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in known:
                raise InvalidConfigError(f"line {lineno}: unrecognized entry {raw!r}")
            values[key] = _parse(known[key], value, lineno)
        return cls(**values)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InvalidConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.loads(text)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(f: dataclasses.Field, value: str, lineno: int):
    default = f.default
    try:
        if isinstance(default, bool):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return value.lower() in ("true", "1", "yes")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError as exc:
        raise InvalidConfigError(f"line {lineno}: bad value for {f.name}: {value!r}") from exc
    return value
