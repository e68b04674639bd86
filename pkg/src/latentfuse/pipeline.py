"""End-to-end wiring: streams -> windows -> images -> latents -> sequences.

This module owns the modality-permutation table, the derived accelerometer
magnitude channel, and the two runnable systems:

- UnifiedSystem: one shared frozen encoder applied to every modality.
- baseline.BaselineSystem: one spliced extractor per modality.

Both produce identically shaped FusedLatent tensors, so they share the
fusion head, the evaluation code, and the cost model; the only difference
is how many encoder parameter sets exist (counted structurally by
encoder_loads, which inspects distinct parameter stores rather than
trusting a label).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import baseline as baseline_mod
from . import costmodel
from .errors import DataError, UsageError
from .fusion import ClassifierHead, FusedLatent, Metrics, SequenceSample, evaluate, fuse
from .ingest import Channel, MultimodalStream, Window, window_stream
from .spectral import SpectralConfig, spectral_image
from .vqvae import VqVaeModel, encode_image

log = logging.getLogger(__name__)

# cumulative fusion permutations; entry m fuses the first m modality groups
PERMUTATIONS: dict[int, tuple[str, ...]] = {
    1: ("ECG",),
    2: ("ECG", "EMG"),
    3: ("ECG", "EMG", "EDA"),
    4: ("ECG", "EMG", "EDA", "Temp"),
    5: ("ECG", "EMG", "EDA", "Temp", "Resp"),
    6: ("ECG", "EMG", "EDA", "Temp", "Resp", "Acc"),
}

ACC_AXES = ("AccX", "AccY", "AccZ")


@dataclass
class PipelineConfig:
    window_len: int = 128
    stride: int = 96
    seq_len: int = 8
    threshold: float = 0.5
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    embed_dim: int = 16
    codebook_size: int = 128
    energy_per_mac: float = costmodel.ENERGY_PER_MAC


@dataclass
class UnifiedSystem:
    model: VqVaeModel
    head: ClassifierHead | None = None
    kind: str = "unified"


def permutation_modalities(permutation: int | list[str] | tuple[str, ...]) -> tuple[str, ...]:
    """Resolve a permutation id (1..6) or an explicit list to modality names."""
    if isinstance(permutation, int):
        if permutation not in PERMUTATIONS:
            raise UsageError(f"permutation must be 1..6, got {permutation}")
        return PERMUTATIONS[permutation]
    if not permutation:
        raise UsageError("modality list must not be empty")
    return tuple(permutation)


def derive_acc_magnitude(stream: MultimodalStream) -> MultimodalStream:
    """Add a single 'Acc' channel: Euclidean magnitude of the three axes.

    The accelerometer fuses as one modality (one encoder application), so
    its three axes are collapsed into one signal before windowing. Streams
    without all three axes are returned unchanged.
    """
    if "Acc" in stream.channels or not all(a in stream.channels for a in ACC_AXES):
        return stream
    axes = [stream.channels[a] for a in ACC_AXES]
    n = min(len(a) for a in axes)
    rates = {a.rate_hz for a in axes}
    if len(rates) != 1:
        raise DataError("accelerometer axes have differing rates; resample first")
    if any(a.missing.any() for a in axes):
        raise DataError("accelerometer axes have gaps; run forward_fill first")
    mag = np.sqrt(sum(a.values[:n] ** 2 for a in axes))
    channels = dict(stream.channels)
    channels["Acc"] = Channel("Acc", axes[0].rate_hz, mag)
    return MultimodalStream(channels, epoch=stream.epoch,
                            subject_meta=stream.subject_meta, labels=stream.labels)


def encode_window(system, modality: str, window: Window,
                  cfg: PipelineConfig) -> np.ndarray | object:
    """Window -> image -> latent, under either system."""
    image = spectral_image(window, cfg.spectral)
    if isinstance(system, UnifiedSystem):
        return encode_image(system.model, image)
    if isinstance(system, baseline_mod.BaselineSystem):
        if modality not in system.encoders:
            raise UsageError(f"baseline system has no encoder for {modality!r}")
        return baseline_mod.extract(system.encoders[modality], image)
    raise UsageError(f"unknown system type {type(system).__name__}")


def encoder_loads(system, modalities: tuple[str, ...]) -> int:
    """Count distinct encoder parameter stores the permutation touches."""
    if isinstance(system, UnifiedSystem):
        return len({id(system.model.store)})
    stores = {id(system.encoders[m].store) for m in modalities
              if m in system.encoders}
    missing = [m for m in modalities if m not in system.encoders]
    if missing:
        raise UsageError(f"baseline system missing encoders for {missing}")
    return len(stores)


def stream_to_sequences(system, stream: MultimodalStream,
                        permutation: int | list[str],
                        cfg: PipelineConfig = PipelineConfig()
                        ) -> list[SequenceSample]:
    """Windows from every modality, encoded, fused, grouped into sequences.

    The stream must be gap-repaired and uniformly sampled. Windows with the
    same start index across modalities form one fused step; consecutive
    steps are grouped into non-overlapping sequences of cfg.seq_len, each
    labeled by its final step (causal labeling, matching the windows).
    """
    modalities = permutation_modalities(permutation)
    stream = derive_acc_magnitude(stream)
    for m in modalities:
        if m not in stream.channels:
            raise DataError(f"stream has no channel {m!r}")
    sub = MultimodalStream({m: stream.channels[m] for m in modalities},
                           epoch=stream.epoch, subject_meta=stream.subject_meta,
                           labels=stream.labels)
    per_channel = window_stream(sub, cfg.window_len, cfg.stride)
    counts = {m: len(ws) for m, ws in per_channel.items()}
    n_steps = min(counts.values())
    if len(set(counts.values())) != 1:
        log.warning("modalities yield unequal window counts %s; using %d",
                    counts, n_steps)

    steps: list[FusedLatent] = []
    labels: list[int] = []
    for i in range(n_steps):
        latents = {}
        step_label = None
        for m in modalities:
            w = per_channel[m][i]
            latents[m] = encode_window(system, m, w, cfg)
            step_label = w.label if step_label is None else step_label
        steps.append(fuse(latents, modalities))
        labels.append(step_label)

    samples = []
    for lo in range(0, n_steps - cfg.seq_len + 1, cfg.seq_len):
        chunk = steps[lo:lo + cfg.seq_len]
        samples.append(SequenceSample(chunk, labels[lo + cfg.seq_len - 1]))
    return samples


def run_system(system, stream: MultimodalStream, permutation: int | list[str],
               cfg: PipelineConfig = PipelineConfig()
               ) -> tuple[Metrics, costmodel.PipelineCost]:
    """Encode, fuse, classify, and cost one prepared stream."""
    modalities = permutation_modalities(permutation)
    if getattr(system, "head", None) is None:
        raise UsageError("system has no trained classifier head")
    samples = stream_to_sequences(system, stream, permutation, cfg)
    if not samples:
        raise DataError("stream too short for even one sequence")
    metrics = evaluate(system.head, samples, cfg.threshold)
    kind = "unified" if isinstance(system, UnifiedSystem) else "baseline"
    cost = costmodel.pipeline_cost(
        kind, len(modalities), cfg.embed_dim, cfg.codebook_size, cfg.seq_len,
        cfg.window_len, cfg.spectral, cfg.energy_per_mac, modalities)
    loads = encoder_loads(system, modalities)
    if loads != cost.encoder_loads:
        raise UsageError(f"structural encoder loads ({loads}) disagree with the "
                         f"cost model ({cost.encoder_loads})")
    return metrics, cost


def fixed_benchmark_images(modalities: tuple[str, ...],
                           cfg: PipelineConfig = PipelineConfig()) -> dict[str, np.ndarray]:
    """Deterministic per-modality spectral images for runtime measurement."""
    from .synthetic import make_stream
    stream = make_stream(n_samples=cfg.window_len * 2, seed=1234)
    stream = derive_acc_magnitude(stream)
    images = {}
    for m in modalities:
        ch = stream.channels[m]
        w = Window(m, 0, ch.values[:cfg.window_len].copy(), 0)
        images[m] = spectral_image(w, cfg.spectral).pixels
    return images


def encoding_timer(system, m: int, cfg: PipelineConfig = PipelineConfig()):
    """Zero-argument callable that encodes one window per modality.

    Images are precomputed so the timed region is exactly the encoding
    stage (the stage that distinguishes the two systems).
    """
    from .spectral import SpectralImage
    modalities = permutation_modalities(m)
    pixel_map = fixed_benchmark_images(modalities, cfg)
    images = {name: SpectralImage(px, (name, 0)) for name, px in pixel_map.items()}

    if isinstance(system, UnifiedSystem):
        def run() -> None:
            for name in modalities:
                encode_image(system.model, images[name])
    else:
        for name in modalities:
            if name not in system.encoders:
                raise UsageError(f"baseline system has no encoder for {name!r}")

        def run() -> None:
            for name in modalities:
                baseline_mod.extract(system.encoders[name], images[name])
    return run
