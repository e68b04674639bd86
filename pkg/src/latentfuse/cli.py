"""Command-line surface for the full pipeline.

Subcommands: ingest, dump, train-encoder, encode, train-classifier, eval,
bench. Everything except paths and the permutation id comes from a
key=value config file so a run is reproducible from its manifest; every
command logs the fully-resolved config it ran with.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

File formats (full layouts in docs/formats.md):
- .lsfd windowed dataset: magic "LSFD", version, modality name table,
  window length, then per window: modality id, start index, label, and
  float32 samples.
- .lsfl latent dataset: magic "LSFL", version, embedding dim, grid size,
  modality name table, then per entry: modality id, start index, label,
  u16 code indices, float32 quantized tensor.
- .lsfw weights and .lsfi images are documented beside their modules.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import struct
import sys

import numpy as np

from . import baseline as baseline_mod
from . import costmodel, pipeline
from .errors import (BadMagicError, DataError, NumericError,
                     TruncatedPayloadError, UsageError, VersionError)
from .fusion import (ClassifierConfig, FusedLatent, SequenceSample, evaluate,
                     load_head, save_head, train_classifier,
                     write_training_curve)
from .ingest import (Window, load_labels, load_stream, prepare_stream,
                     window_stream)
from .spectral import SpectralConfig, load_image, spectral_image
from .vqvae import (VqVaeConfig, encode_image, load_model, save_model,
                    train_vqvae, write_loss_curve)

log = logging.getLogger(__name__)

_DATASET_MAGIC = b"LSFD"
_LATENT_MAGIC = b"LSFL"
_FORMAT_VERSION = 1

EXIT_CODES = {UsageError: 1, DataError: 2, NumericError: 3}


@dataclasses.dataclass
class RunConfig:
    """Typed view of the key=value config file."""

    seed: int = 0
    window_len: int = 128
    stride: int = 96
    frame_len: int = 64
    hop: int = 1
    taper: str = "hann"
    floor_db: float = -80.0
    codebook_size: int = 128
    embed_dim: int = 16
    beta: float = 0.25
    lr: float = 2e-3
    steps: int = 500
    batch: int = 8
    epochs: int = 30
    seq_len: int = 8
    threshold: float = 0.5
    resample_hz: float = 0.0
    energy_per_mac: float = costmodel.ENERGY_PER_MAC

    @classmethod
    def from_file(cls, path: str | None) -> "RunConfig":
        cfg = cls()
        if path is None:
            return cfg
        if not os.path.exists(path):
            raise DataError(f"no such config file: {path}")
        fields = {f.name: f.type for f in dataclasses.fields(cls)}
        casts = {"int": int, "float": float, "str": str}
        with open(path) as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}: line {line_no}: expected key=value")
                key, value = (part.strip() for part in line.split("=", 1))
                if key not in fields:
                    raise UsageError(f"{path}: line {line_no}: unknown config key "
                                     f"{key!r}")
                try:
                    setattr(cfg, key, casts[fields[key]](value))
                except ValueError:
                    raise UsageError(f"{path}: line {line_no}: bad value for "
                                     f"{key}: {value!r}") from None
        return cfg

    def spectral(self) -> SpectralConfig:
        return SpectralConfig(self.frame_len, self.hop, self.taper, self.floor_db)

    def pipeline(self) -> pipeline.PipelineConfig:
        return pipeline.PipelineConfig(
            self.window_len, self.stride, self.seq_len, self.threshold,
            self.spectral(), self.embed_dim, self.codebook_size,
            self.energy_per_mac)


def _log_config(cfg: RunConfig, command: str) -> None:
    resolved = " ".join(f"{k}={v}" for k, v in dataclasses.asdict(cfg).items())
    log.info("%s: config %s", command, resolved)


# ---------------------------------------------------------------------------
# Dataset container (.lsfd)
# ---------------------------------------------------------------------------

def _write_name_table(fh, names: list[str]) -> None:
    fh.write(struct.pack("<H", len(names)))
    for name in names:
        raw = name.encode("utf-8")
        fh.write(struct.pack("<H", len(raw)))
        fh.write(raw)


def _read_name_table(data: bytes, offset: int) -> tuple[list[str], int]:
    (count,) = struct.unpack_from("<H", data, offset)
    offset += 2
    names = []
    for _ in range(count):
        (ln,) = struct.unpack_from("<H", data, offset)
        offset += 2
        names.append(data[offset:offset + ln].decode("utf-8"))
        offset += ln
    return names, offset


def write_dataset(path: str, windows: dict[str, list[Window]],
                  window_len: int) -> None:
    names = sorted(windows)
    name_id = {n: i for i, n in enumerate(names)}
    with open(path, "wb") as fh:
        fh.write(_DATASET_MAGIC)
        fh.write(struct.pack("<I", _FORMAT_VERSION))
        _write_name_table(fh, names)
        total = sum(len(ws) for ws in windows.values())
        fh.write(struct.pack("<II", window_len, total))
        for name in names:
            for w in windows[name]:
                fh.write(struct.pack("<HIB", name_id[name], w.start_index, w.label))
                fh.write(w.values.astype("<f4").tobytes())


def read_dataset(path: str) -> tuple[dict[str, list[Window]], int]:
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _DATASET_MAGIC:
        raise BadMagicError(f"{path}: expected magic {_DATASET_MAGIC!r}, "
                            f"got {data[:4]!r}")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != _FORMAT_VERSION:
        raise VersionError(f"{path}: unsupported dataset version {version}")
    names, offset = _read_name_table(data, 8)
    window_len, total = struct.unpack_from("<II", data, offset)
    offset += 8
    windows: dict[str, list[Window]] = {n: [] for n in names}
    record = 2 + 4 + 1 + 4 * window_len
    for i in range(total):
        if offset + record > len(data):
            raise TruncatedPayloadError(f"{path}: truncated at window {i} "
                                        f"of {total}")
        mod_id, start, label = struct.unpack_from("<HIB", data, offset)
        offset += 7
        values = np.frombuffer(data, dtype="<f4", count=window_len,
                               offset=offset).astype(np.float64)
        offset += 4 * window_len
        if mod_id >= len(names):
            raise DataError(f"{path}: window {i} references modality id {mod_id}")
        name = names[mod_id]
        windows[name].append(Window(name, start, values, label))
    return windows, window_len


# ---------------------------------------------------------------------------
# Latent container (.lsfl)
# ---------------------------------------------------------------------------

@dataclasses.dataclass
class LatentEntry:
    modality: str
    start: int
    label: int
    indices: np.ndarray
    quantized: np.ndarray


def write_latents(path: str, entries: list[LatentEntry], embed_dim: int,
                  grid: int) -> None:
    names = sorted({e.modality for e in entries})
    name_id = {n: i for i, n in enumerate(names)}
    with open(path, "wb") as fh:
        fh.write(_LATENT_MAGIC)
        fh.write(struct.pack("<III", _FORMAT_VERSION, embed_dim, grid))
        _write_name_table(fh, names)
        fh.write(struct.pack("<I", len(entries)))
        for e in entries:
            fh.write(struct.pack("<HIB", name_id[e.modality], e.start, e.label))
            fh.write(e.indices.astype("<u2").tobytes())
            fh.write(e.quantized.astype("<f4").tobytes())


def read_latents(path: str) -> tuple[list[LatentEntry], int, int]:
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _LATENT_MAGIC:
        raise BadMagicError(f"{path}: expected magic {_LATENT_MAGIC!r}, "
                            f"got {data[:4]!r}")
    version, embed_dim, grid = struct.unpack_from("<III", data, 4)
    if version != _FORMAT_VERSION:
        raise VersionError(f"{path}: unsupported latent file version {version}")
    names, offset = _read_name_table(data, 16)
    (total,) = struct.unpack_from("<I", data, offset)
    offset += 4
    cells = grid * grid
    record = 7 + 2 * cells + 4 * embed_dim * cells
    entries = []
    for i in range(total):
        if offset + record > len(data):
            raise TruncatedPayloadError(f"{path}: truncated at entry {i} of {total}")
        mod_id, start, label = struct.unpack_from("<HIB", data, offset)
        offset += 7
        indices = np.frombuffer(data, dtype="<u2", count=cells,
                                offset=offset).reshape(grid, grid).copy()
        offset += 2 * cells
        quantized = np.frombuffer(data, dtype="<f4", count=embed_dim * cells,
                                  offset=offset).reshape(embed_dim, grid, grid).copy()
        offset += 4 * embed_dim * cells
        entries.append(LatentEntry(names[mod_id], start, int(label), indices,
                                   quantized))
    return entries, embed_dim, grid


def sequences_from_latents(entries: list[LatentEntry], modalities: tuple[str, ...],
                           seq_len: int) -> list[SequenceSample]:
    """Align latent entries across modalities and group into sequences."""
    by_mod: dict[str, dict[int, LatentEntry]] = {}
    for e in entries:
        by_mod.setdefault(e.modality, {})[e.start] = e
    for m in modalities:
        if m not in by_mod:
            raise DataError(f"latent file has no entries for modality {m!r}")
    common = sorted(set.intersection(*(set(by_mod[m]) for m in modalities)))
    if not common:
        raise DataError("no start indices shared by all requested modalities")
    steps = []
    labels = []
    for start in common:
        latents = {m: by_mod[m][start].quantized for m in modalities}
        steps.append(FusedLatent(np.concatenate([latents[m] for m in modalities]),
                                 tuple(modalities)))
        labels.append(by_mod[modalities[0]][start].label)
    samples = []
    for lo in range(0, len(steps) - seq_len + 1, seq_len):
        samples.append(SequenceSample(steps[lo:lo + seq_len],
                                      labels[lo + seq_len - 1]))
    if not samples:
        raise DataError(f"only {len(steps)} aligned steps; need at least "
                        f"seq_len={seq_len}")
    return samples


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _parse_schema(text: str) -> dict[str, str]:
    schema = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise UsageError(f"schema entry {part!r} is not column=modality")
        col, mod = (p.strip() for p in part.split("=", 1))
        schema[col] = mod
    if not schema:
        raise UsageError("schema is empty")
    return schema


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config)
    _log_config(cfg, "ingest")
    stream = load_stream(args.csv, _parse_schema(args.schema))
    if args.labels:
        stream.labels = load_labels(args.labels)
    if cfg.resample_hz > 0:
        stream = prepare_stream(stream, cfg.resample_hz)
    else:
        from .ingest import forward_fill
        stream = dataclasses.replace(
            stream, channels={n: forward_fill(c)
                              for n, c in stream.channels.items()})
    stream = pipeline.derive_acc_magnitude(stream)
    windows = window_stream(stream, cfg.window_len, cfg.stride)
    write_dataset(args.out, windows, cfg.window_len)
    total = sum(len(ws) for ws in windows.values())
    log.info("wrote %d windows over %d channels to %s", total, len(windows),
             args.out)
    return 0


def cmd_dump(args: argparse.Namespace) -> int:
    windows, window_len = read_dataset(args.data)
    printed = 0
    for name in sorted(windows):
        for w in windows[name]:
            if args.limit and printed >= args.limit:
                return 0
            values = ",".join(f"{v:.9g}" for v in w.values)
            print(f"{name},{w.start_index},{w.label},{values}")
            printed += 1
    return 0


def _load_image_dir(path: str) -> np.ndarray:
    files = sorted(f for f in os.listdir(path) if f.endswith(".lsfi"))
    if not files:
        raise DataError(f"{path}: no .lsfi image files found")
    return np.stack([load_image(os.path.join(path, f)).pixels for f in files])


def cmd_train_encoder(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config)
    _log_config(cfg, "train-encoder")
    if args.images:
        images = _load_image_dir(args.images)
    else:
        from .synthetic import make_images
        images = make_images(args.synthetic, cfg.seed)
    vq_cfg = VqVaeConfig(cfg.codebook_size, cfg.embed_dim, cfg.beta, cfg.lr,
                         cfg.steps, cfg.batch, cfg.seed)
    model, curve = train_vqvae(images, vq_cfg)
    save_model(model, args.out)
    if args.curve:
        write_loss_curve(args.curve, curve)
    log.info("trained on %d images for %d steps; final loss %.6f -> %s",
             images.shape[0], cfg.steps, curve[-1].total if curve else float("nan"),
             args.out)
    return 0


def cmd_encode(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config)
    _log_config(cfg, "encode")
    model = load_model(args.model)
    windows, window_len = read_dataset(args.data)
    entries = []
    for name in sorted(windows):
        for w in windows[name]:
            image = spectral_image(w, cfg.spectral())
            code = encode_image(model, image)
            entries.append(LatentEntry(name, w.start_index, w.label,
                                       code.indices, code.quantized))
    from .vqvae import GRID
    write_latents(args.out, entries, model.embed_dim, GRID)
    log.info("encoded %d windows -> %s", len(entries), args.out)
    return 0


def _resolve_modalities(args: argparse.Namespace) -> tuple[str, ...]:
    if args.modalities:
        return tuple(m.strip() for m in args.modalities.split(",") if m.strip())
    if args.permutation:
        return pipeline.permutation_modalities(args.permutation)
    raise UsageError("provide --permutation 1..6 or --modalities A,B,...")


def cmd_train_classifier(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config)
    _log_config(cfg, "train-classifier")
    entries, embed_dim, grid = read_latents(args.latents)
    modalities = _resolve_modalities(args)
    samples = sequences_from_latents(entries, modalities, cfg.seq_len)
    head, curve = train_classifier(
        samples, ClassifierConfig(cfg.lr, cfg.epochs, cfg.batch, cfg.seed))
    save_head(head, args.out)
    if args.curve:
        write_training_curve(args.curve, curve)
    log.info("trained head on %d sequences (%s); final accuracy %.3f -> %s",
             len(samples), "+".join(modalities),
             curve[-1].accuracy if curve else float("nan"), args.out)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config)
    _log_config(cfg, "eval")
    entries, embed_dim, grid = read_latents(args.latents)
    modalities = _resolve_modalities(args)
    samples = sequences_from_latents(entries, modalities, cfg.seq_len)
    head = load_head(args.head)
    metrics = evaluate(head, samples, cfg.threshold)
    text = metrics.to_json()
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return 0


def _build_synthetic_systems(cfg: RunConfig):
    """Seeded-initialization systems: runtime depends on shapes, not weights."""
    from .vqvae import build_model
    model = build_model(cfg.codebook_size, cfg.embed_dim, cfg.seed)
    model.frozen = True
    unified = pipeline.UnifiedSystem(model)
    encoders = {}
    all_mods = pipeline.PERMUTATIONS[6]
    for i, name in enumerate(all_mods):
        enc = baseline_mod.build_encoder(name, cfg.embed_dim, cfg.seed + i)
        encoders[name] = baseline_mod.splice(enc)
    base = baseline_mod.BaselineSystem(encoders, head=None)
    return unified, base


def _bench_metrics_rows(cfg: RunConfig) -> list[dict]:
    """Train and evaluate the unified pipeline per fusion size on synthetic data."""
    from .synthetic import make_images, make_stream
    from .vqvae import train_vqvae as _train

    vq_cfg = VqVaeConfig(cfg.codebook_size, cfg.embed_dim, cfg.beta, cfg.lr,
                         cfg.steps, cfg.batch, cfg.seed)
    model, _ = _train(make_images(64, cfg.seed), vq_cfg)
    system = pipeline.UnifiedSystem(model)
    pcfg = cfg.pipeline()
    train_stream = make_stream(seed=cfg.seed + 10)
    eval_stream = make_stream(seed=cfg.seed + 11)
    rows = []
    for m in sorted(pipeline.PERMUTATIONS):
        train_samples = pipeline.stream_to_sequences(system, train_stream, m, pcfg)
        eval_samples = pipeline.stream_to_sequences(system, eval_stream, m, pcfg)
        head, _ = train_classifier(
            train_samples, ClassifierConfig(cfg.lr, cfg.epochs, cfg.batch, cfg.seed))
        metrics = evaluate(head, eval_samples, cfg.threshold)
        rows.append({"m": m, "accuracy": metrics.accuracy, "f1": metrics.f1,
                     "auc": "" if metrics.auc is None else metrics.auc})
        log.info("fusion m=%d: accuracy %.3f f1 %.3f", m, metrics.accuracy,
                 metrics.f1)
    return rows


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_file(args.config)
    _log_config(cfg, "bench")
    os.makedirs(args.out_dir, exist_ok=True)
    pcfg = cfg.pipeline()

    if args.synthetic:
        unified, base = _build_synthetic_systems(cfg)
    else:
        if not args.model or not args.encoders:
            raise UsageError("bench needs --synthetic, or --model plus "
                             "--encoders pointing at trained systems")
        unified = pipeline.UnifiedSystem(load_model(args.model))
        encoders = {}
        for name in pipeline.PERMUTATIONS[6]:
            path = os.path.join(args.encoders, f"{name}.lsfw")
            if not os.path.exists(path):
                raise DataError(f"missing baseline encoder weights: {path}")
            encoders[name] = baseline_mod.load_extractor(path, name, cfg.embed_dim)
        base = baseline_mod.BaselineSystem(encoders, head=None)

    rows, runs = costmodel.scaling_table(
        m_values=(1, 2, 3, 4, 5, 6),
        time_unified=lambda m: pipeline.encoding_timer(unified, m, pcfg),
        time_baseline=lambda m: pipeline.encoding_timer(base, m, pcfg),
        repeat=args.repeat, embed_dim=cfg.embed_dim,
        codebook_size=cfg.codebook_size, seq_len=1, window_len=cfg.window_len,
        spectral_cfg=cfg.spectral(), energy_per_mac=cfg.energy_per_mac)

    costmodel.write_scaling_table(os.path.join(args.out_dir, "scaling_table.csv"),
                                  rows)
    with open(os.path.join(args.out_dir, "fig3_runtime.csv"), "w") as fh:
        fh.write("m,runtime_s_unified,runtime_s_baseline\n")
        for row in rows:
            fh.write(f"{row['m']},{row['runtime_s_unified']},"
                     f"{row['runtime_s_baseline']}\n")
    with open(os.path.join(args.out_dir, "fig3_runs.csv"), "w") as fh:
        fh.write("m,system,run,seconds\n")
        for m, system, i, seconds in runs:
            fh.write(f"{m},{system},{i},{seconds:.9f}\n")
    with open(os.path.join(args.out_dir, "fig5_macs.csv"), "w") as fh:
        fh.write("m,unified_macs,baseline_macs,unified_energy_j,baseline_energy_j\n")
        for row in rows:
            fh.write(f"{row['m']},{row['unified_macs']},{row['baseline_macs']},"
                     f"{row['unified_macs'] * cfg.energy_per_mac:.6e},"
                     f"{row['baseline_macs'] * cfg.energy_per_mac:.6e}\n")

    if args.skip_metrics:
        log.info("skipping fig4 metrics (--skip-metrics)")
    else:
        metrics_rows = _bench_metrics_rows(cfg)
        with open(os.path.join(args.out_dir, "fig4_metrics.csv"), "w") as fh:
            fh.write("m,accuracy,f1,auc\n")
            for row in metrics_rows:
                fh.write(f"{row['m']},{row['accuracy']},{row['f1']},{row['auc']}\n")
    log.info("benchmark data written to %s", args.out_dir)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through our exit-code table."""

    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="latentfuse",
                     description="Latent sensor fusion pipeline: spectral "
                                 "abstraction, shared encoding, fusion, and "
                                 "cost accounting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="CSV stream -> windowed dataset (.lsfd)")
    p.add_argument("--csv", required=True, help="input CSV with timestamp column")
    p.add_argument("--schema", required=True,
                   help="column=modality pairs, comma separated; map a column "
                        "to 'label' for inline labels")
    p.add_argument("--labels", help="separate start_index,label CSV")
    p.add_argument("--out", required=True, help="output .lsfd path")
    p.add_argument("--config", help="key=value config file")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("dump", help="print windows from a dataset file")
    p.add_argument("--data", required=True, help=".lsfd path")
    p.add_argument("--limit", type=int, default=0, help="max windows to print")
    p.set_defaults(fn=cmd_dump)

    p = sub.add_parser("train-encoder", help="train the shared encoder")
    p.add_argument("--synthetic", type=int, default=0, metavar="N",
                   help="train on N generated generic images")
    p.add_argument("--images", help="directory of .lsfi images instead")
    p.add_argument("--out", required=True, help="output weights (.lsfw)")
    p.add_argument("--curve", help="write per-step loss CSV here")
    p.add_argument("--config", help="key=value config file")
    p.set_defaults(fn=cmd_train_encoder)

    p = sub.add_parser("encode", help="dataset windows -> latent codes (.lsfl)")
    p.add_argument("--model", required=True, help="encoder weights (.lsfw)")
    p.add_argument("--data", required=True, help="windowed dataset (.lsfd)")
    p.add_argument("--out", required=True, help="output latents (.lsfl)")
    p.add_argument("--config", help="key=value config file")
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("train-classifier", help="train the fusion head")
    p.add_argument("--latents", required=True, help="latents file (.lsfl)")
    p.add_argument("--permutation", type=int, choices=range(1, 7),
                   help="fusion permutation id (cumulative modality sets)")
    p.add_argument("--modalities", help="explicit comma-separated modality list")
    p.add_argument("--out", required=True, help="output head weights (.lsfw)")
    p.add_argument("--curve", help="write per-epoch loss/accuracy CSV here")
    p.add_argument("--config", help="key=value config file")
    p.set_defaults(fn=cmd_train_classifier)

    p = sub.add_parser("eval", help="evaluate a trained head on latents")
    p.add_argument("--latents", required=True, help="latents file (.lsfl)")
    p.add_argument("--head", required=True, help="head weights (.lsfw)")
    p.add_argument("--permutation", type=int, choices=range(1, 7))
    p.add_argument("--modalities", help="explicit comma-separated modality list")
    p.add_argument("--out", help="also write the metrics JSON here")
    p.add_argument("--config", help="key=value config file")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("bench", help="emit scaling/runtime/metrics figure data")
    p.add_argument("--synthetic", action="store_true",
                   help="build systems from seeded synthetic data")
    p.add_argument("--model", help="trained unified encoder (.lsfw)")
    p.add_argument("--encoders", help="directory of per-modality .lsfw files")
    p.add_argument("--out-dir", default="bench_out", help="output directory")
    p.add_argument("--repeat", type=int, default=10, help="timed runs per point")
    p.add_argument("--skip-metrics", action="store_true",
                   help="skip the trained-accuracy sweep (fig4)")
    p.add_argument("--config", help="key=value config file")
    p.set_defaults(fn=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
