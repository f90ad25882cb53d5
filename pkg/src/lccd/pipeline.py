"""Stage drivers: extract, fit, encode, train-eval and report.

Each stage reads the artifacts of the previous one from ``out_dir`` and
writes its own there.  With a partition column in the manifest, ``fit``,
``encode`` and ``train-eval`` run once per partition and their artifact
names carry a ``_p<partition>`` suffix.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lccd import formats
from lccd.classify import Report, evaluate, summarize_runs, train
from lccd.colorgrid import load_image
from lccd.config import PipelineConfig
from lccd.descriptor import Stream, extract_image
from lccd.encoding import EncodedImage, bow_histogram, concat_encodings, fisher_vector, fit_gmm
from lccd.errors import DataError, LCCDError
from lccd.reduction import fit_pca, project

log = logging.getLogger(__name__)

SPLITS = ("train", "test")
STREAM_FILES = {Stream.SPATIAL: "descriptors_spatial.lccd",
                Stream.CHANNEL: "descriptors_channel.lccd"}


@dataclass(frozen=True)
class ManifestEntry:
    image_path: str
    label: str
    split: str
    partition: str = ""


def read_manifest(path) -> list[ManifestEntry]:
    """Parse ``image_path,label,split[,partition]`` rows; a header row is optional."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    entries = []
    for lineno, row in enumerate(csv.reader(text.splitlines()), 1):
        if not row or not "".join(row).strip():
            continue
        row = [c.strip() for c in row]
        if lineno == 1 and row[0] == "image_path":
            continue
        if len(row) not in (3, 4):
            raise DataError(f"{path}:{lineno}: expected 3 or 4 columns, got {len(row)}")
        if row[2] not in SPLITS:
            raise DataError(f"{path}:{lineno}: split must be train or test, got {row[2]!r}")
        entries.append(ManifestEntry(*row))
    if not entries:
        raise DataError(f"{path}: manifest is empty")
    return entries


def partitions(entries) -> list[str]:
    return list(dict.fromkeys(e.partition for e in entries))


def split_ids(entries, partition: str) -> dict[str, dict[str, str]]:
    """``{"train": {id: label}, "test": {id: label}}`` for one partition."""
    out = {s: {} for s in SPLITS}
    for e in entries:
        if e.partition == partition:
            out[e.split][e.image_path] = e.label
    leaked = sorted(set(out["train"]) & set(out["test"]))
    if leaked:
        raise DataError(f"partition {partition!r}: images in both train and test "
                        f"(leakage): {', '.join(leaked[:5])}")
    return out


def image_order(entries) -> list[str]:
    return list(dict.fromkeys(e.image_path for e in entries))


def _suffix(partition: str) -> str:
    return f"_p{partition}" if partition else ""


def _stream_names(n_external: int) -> list[str]:
    return ["spatial", "channel"] + [f"external{i}" for i in range(n_external)]


# --- extract --------------------------------------------------------------


def _extract_one(args):
    path, image_id, config = args
    try:
        img = load_image(path)
        return extract_image(img, config, image_id=image_id), None
    except (LCCDError, OSError) as exc:
        return None, str(exc)


def cmd_extract(config: PipelineConfig, manifest, out_dir, strict: bool = False) -> dict:
    """Extract both descriptor streams for every manifest image.

    Returns a summary with the ids written and any skipped images.  Raises
    :class:`DataError` after writing outputs if ``strict`` and anything was
    skipped.
    """
    entries = read_manifest(manifest)
    base = Path(manifest).parent
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ids = image_order(entries)
    jobs = [(base / i, i, config) for i in ids]

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_extract_one, jobs))
    else:
        results = [_extract_one(j) for j in jobs]

    spatial, channel, errors = [], [], []
    for image_id, (sets, err) in zip(ids, results):
        if err is not None:
            log.error("skipping %s: %s", image_id, err)
            errors.append({"image": image_id, "error": err})
            continue
        log.info("extracted %s", image_id)
        spatial.append(sets[0])
        channel.append(sets[1])

    pr, pc = config.grid_rows - 2, config.grid_cols - 2
    formats.write_descriptors(out_dir / STREAM_FILES[Stream.SPATIAL], spatial,
                              Stream.SPATIAL, config.spatial_dim, pr, pc)
    formats.write_descriptors(out_dir / STREAM_FILES[Stream.CHANNEL], channel,
                              Stream.CHANNEL, config.channel_dim, pr, pc)
    (out_dir / "extract_errors.json").write_text(json.dumps(errors, indent=2) + "\n")
    if strict and errors:
        raise DataError(f"{len(errors)} image(s) could not be processed")
    return {"images": [s.image_id for s in spatial], "skipped": errors}


# --- fit ------------------------------------------------------------------


def _load_streams(out_dir: Path, external) -> list[dict[str, np.ndarray]]:
    """Descriptor arrays keyed by image id, one dict per stream."""
    paths = [out_dir / STREAM_FILES[Stream.SPATIAL], out_dir / STREAM_FILES[Stream.CHANNEL]]
    paths += [Path(p) for p in external]
    streams = []
    for p in paths:
        _, sets = formats.read_descriptors(p)
        streams.append({s.image_id: s.values for s in sets})
    return streams


def fit_stream(config: PipelineConfig, train_blocks):
    """Fit the PCA and GMM models of one stream on training descriptors only."""
    x = np.concatenate(train_blocks).astype(np.float64)
    k = min(config.pca_dim, x.shape[1])
    pca = fit_pca(x, k, sample_cap=config.pca_sample_cap, seed=config.seed,
                  whiten=config.pca_whiten)
    z = project(pca, x)
    gmm = fit_gmm(z, config.gmm_components, max_iter=config.gmm_max_iter,
                  tol=config.gmm_tol, seed=config.seed, sample_cap=config.gmm_sample_cap)
    return pca, gmm


def cmd_fit(config: PipelineConfig, manifest, out_dir, external=()) -> list[Path]:
    entries = read_manifest(manifest)
    out_dir = Path(out_dir)
    streams = _load_streams(out_dir, external)
    written = []
    for part in partitions(entries):
        split = split_ids(entries, part)
        train_ids = [i for i in image_order(entries) if i in split["train"]]
        if set(train_ids) & set(split["test"]):
            raise DataError("refusing to fit on test-split images")
        for name, stream in zip(_stream_names(len(external)), streams):
            blocks = [stream[i] for i in train_ids if i in stream]
            missing = [i for i in train_ids if i not in stream]
            if missing:
                log.warning("%s: %d training image(s) have no descriptors", name, len(missing))
            if not blocks:
                raise DataError(f"partition {part!r}: no training descriptors for {name}")
            pca, gmm = fit_stream(config, blocks)
            sfx = _suffix(part)
            pca_path = out_dir / f"pca_{name}{sfx}.lccd"
            gmm_path = out_dir / f"gmm_{name}{sfx}.lccd"
            formats.write_pca(pca_path, pca)
            formats.write_gmm(gmm_path, gmm)
            written += [pca_path, gmm_path]
            log.info("fitted %s%s: PCA %d->%d, GMM K=%d (%d iterations)", name, sfx,
                     pca.input_dim, pca.output_dim, gmm.n_components, len(gmm.log_likelihood))
    return written


# --- encode ---------------------------------------------------------------


def encode_stream(config: PipelineConfig, pca, gmm, descriptors) -> np.ndarray:
    z = project(pca, np.asarray(descriptors, dtype=np.float64))
    if config.encoding == "bow":
        return bow_histogram(gmm, z)
    return fisher_vector(gmm, z)


def cmd_encode(config: PipelineConfig, manifest, out_dir, external=()) -> list[Path]:
    entries = read_manifest(manifest)
    out_dir = Path(out_dir)
    streams = _load_streams(out_dir, external)
    ids = [i for i in image_order(entries) if i in streams[0] and i in streams[1]]
    for path, stream in zip(external, streams[2:]):
        missing = [i for i in ids if i not in stream]
        if missing:
            raise DataError(f"{path}: missing image ids: {', '.join(missing)}")

    names = _stream_names(len(external))
    written = []
    for part in partitions(entries):
        sfx = _suffix(part)
        models = [(formats.read_pca(out_dir / f"pca_{n}{sfx}.lccd"),
                   formats.read_gmm(out_dir / f"gmm_{n}{sfx}.lccd")) for n in names]
        for n, (pca, gmm) in zip(names, models):
            if pca.output_dim != gmm.dim:
                raise DataError(f"{n}: PCA output {pca.output_dim} != GMM dim {gmm.dim}")
        encoded = []
        for image_id in ids:
            parts = [EncodedImage(image_id, encode_stream(config, pca, gmm, stream[image_id]))
                     for (pca, gmm), stream in zip(models, streams)]
            encoded.append(concat_encodings(parts))
        path = out_dir / f"encoded{sfx}.lccd"
        formats.write_encoded(path, encoded)
        written.append(path)
    return written


# --- train / evaluate -----------------------------------------------------


def _matrix(encoded: dict, labels: dict[str, str]):
    ids = [i for i in labels if i in encoded]
    missing = [i for i in labels if i not in encoded]
    if missing:
        log.warning("%d image(s) have no encoding and are left out", len(missing))
    x = np.stack([encoded[i] for i in ids]) if ids else np.empty((0, 0))
    return x, [labels[i] for i in ids]


def cmd_train_eval(config: PipelineConfig, manifest, out_dir) -> dict:
    entries = read_manifest(manifest)
    out_dir = Path(out_dir)
    reports = {}
    for part in partitions(entries):
        split = split_ids(entries, part)
        train_classes = set(split["train"].values())
        test_classes = set(split["test"].values())
        lacking = sorted((train_classes | test_classes) - (train_classes & test_classes))
        if lacking:
            raise DataError(f"partition {part!r}: classes without both train and test "
                            f"items: {', '.join(lacking)}")
        encoded = {e.image_id: e.vector
                   for e in formats.read_encoded(out_dir / f"encoded{_suffix(part)}.lccd")}
        x_tr, y_tr = _matrix(encoded, split["train"])
        x_te, y_te = _matrix(encoded, split["test"])
        model = train(x_tr, y_tr, config.svm_lambda, config.svm_epochs, config.seed)
        report = evaluate(model, x_te, y_te)
        reports[part] = report
        (out_dir / f"confusion{_suffix(part)}.csv").write_text(report.confusion_csv())

    result = {"partitions": {p: r.to_dict() for p, r in reports.items()},
              "summary": summarize_runs(list(reports.values()))}
    (out_dir / "report.json").write_text(json.dumps(result, indent=2) + "\n")
    return result


# --- report ---------------------------------------------------------------


def cmd_report(report_path, out_dir=None) -> str:
    """Render ``report.json`` as text and write confusion/per-class CSV files."""
    report_path = Path(report_path)
    try:
        data = json.loads(report_path.read_text())
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read report {report_path}: {exc}") from exc
    out_dir = Path(out_dir) if out_dir else report_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)

    lines = []
    for part, d in data["partitions"].items():
        r = Report.from_dict(d)
        title = f"partition {part}" if part else "results"
        lines.append(f"== {title} ==")
        lines.append(f"accuracy  {100 * r.accuracy:6.2f}%")
        lines.append(f"mAP       {100 * r.mean_average_precision:6.2f}%")
        width = max(len(l) for l in r.labels)
        for label in r.labels:
            acc = r.per_class_accuracy.get(label, float("nan"))
            ap = r.average_precision.get(label, float("nan"))
            lines.append(f"  {label:<{width}}  acc {100 * acc:6.2f}%  AP {100 * ap:6.2f}%")
        sfx = _suffix(part)
        (out_dir / f"confusion{sfx}.csv").write_text(r.confusion_csv())
        with open(out_dir / f"per_class{sfx}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", "accuracy", "average_precision"])
            for label in r.labels:
                w.writerow([label, r.per_class_accuracy.get(label, ""),
                            r.average_precision.get(label, "")])
    s = data["summary"]
    lines.append(f"== summary over {s['partitions']} partition(s) ==")
    lines.append(f"accuracy  {100 * s['accuracy_mean']:6.2f}% +- {100 * s['accuracy_std']:.2f}")
    lines.append(f"mAP       {100 * s['map_mean']:6.2f}% +- {100 * s['map_std']:.2f}")
    return "\n".join(lines) + "\n"


def run_all(config: PipelineConfig, manifest, out_dir, external=(), strict=False) -> dict:
    """Run every stage in order; returns the train-eval result."""
    cmd_extract(config, manifest, out_dir, strict=strict)
    cmd_fit(config, manifest, out_dir, external)
    cmd_encode(config, manifest, out_dir, external)
    return cmd_train_eval(config, manifest, out_dir)
