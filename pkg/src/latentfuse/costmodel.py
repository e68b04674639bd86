"""Analytic cost accounting: MACs, parameters, memory traffic, modeled energy.

Conventions (documented with worked examples in docs/costmodel.md):
- MACs count multiplications only; adds, comparisons, and table lookups are
  free. conv2d: C_out*H_out*W_out*C_in*k^2; conv_transpose2d:
  C_in*H_in*W_in*C_out*k^2; dense: in*out; recurrent cell per step:
  3*(x_dim+hidden)*hidden; relu/sigmoid: 0.
- Memory traffic per layer: fetch = input elements * batch * 4 bytes plus
  parameter elements * 4 bytes (parameters are fetched once per batch, not
  per sample); write = output elements * batch * 4 bytes.
- Energy is macs * energy_per_mac with a pinned default of 4.6 pJ per MAC,
  a modeling constant, not a measurement.
- All counts are exact Python integers, so per-modality additivity holds
  with zero rounding error; this is what makes the emitted scaling columns
  exactly linear in the modality count.

The preprocessing stage (window -> spectral image) is not made of layer
descriptors; its per-step operation counts are pinned here with the same
multiplications-only convention.
"""

from __future__ import annotations

import logging
import statistics
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import nnkernel as nn
from .baseline import build_feature_stack
from .errors import UsageError
from .fusion import HEAD_CHANNELS, HEAD_HIDDEN
from .spectral import IMAGE_SIZE, SpectralConfig
from .vqvae import GRID, build_encoder

log = logging.getLogger(__name__)

ENERGY_PER_MAC = 4.6e-12
ELEM_BYTES = 4


@dataclass(frozen=True)
class CostRow:
    name: str
    kind: str
    macs: int
    params: int
    fetch_bytes: int
    write_bytes: int


@dataclass
class CostReport:
    rows: list[CostRow] = field(default_factory=list)
    energy_per_mac: float = ENERGY_PER_MAC

    @property
    def macs(self) -> int:
        return sum(r.macs for r in self.rows)

    @property
    def params(self) -> int:
        return sum(r.params for r in self.rows)

    @property
    def fetch_bytes(self) -> int:
        return sum(r.fetch_bytes for r in self.rows)

    @property
    def write_bytes(self) -> int:
        return sum(r.write_bytes for r in self.rows)

    @property
    def energy_j(self) -> float:
        return self.macs * self.energy_per_mac

    def extend(self, other: "CostReport") -> None:
        self.rows.extend(other.rows)


@dataclass
class PipelineCost:
    stages: dict[str, CostReport]
    m: int
    encoder_loads: int

    @property
    def total_macs(self) -> int:
        return sum(s.macs for s in self.stages.values())

    @property
    def total_params(self) -> int:
        return sum(s.params for s in self.stages.values())

    @property
    def total_fetch_bytes(self) -> int:
        return sum(s.fetch_bytes for s in self.stages.values())

    @property
    def total_write_bytes(self) -> int:
        return sum(s.write_bytes for s in self.stages.values())

    @property
    def total_energy_j(self) -> float:
        return sum(s.energy_j for s in self.stages.values())


def _shape_elems(shape: tuple[int, ...]) -> int:
    n = 1
    for s in shape:
        n *= int(s)
    return n


def layer_macs(desc: nn.LayerDescriptor, in_shape: tuple[int, ...]) -> int:
    """Multiplication count for one layer application on one sample."""
    if desc.kind == "conv2d":
        co, ho, wo = nn.out_shape(desc, in_shape)
        return co * ho * wo * desc.in_channels * desc.kernel * desc.kernel
    if desc.kind == "conv_transpose2d":
        ci, hi, wi = in_shape
        return ci * hi * wi * desc.out_channels * desc.kernel * desc.kernel
    if desc.kind == "dense":
        return desc.in_features * desc.out_features
    if desc.kind in ("relu", "sigmoid"):
        return 0
    if desc.kind == "residual_block":
        total = 0
        shape = in_shape
        for d in desc.inner:
            total += layer_macs(d, shape)
            shape = nn.out_shape(d, shape)
        return total
    if desc.kind == "recurrent_cell":
        return 3 * (desc.in_features + desc.hidden) * desc.hidden
    raise UsageError(f"unknown layer kind: {desc.kind}")


def layer_params(desc: nn.LayerDescriptor) -> int:
    return nn.param_count(desc)


def memory_traffic(desc: nn.LayerDescriptor, in_shape: tuple[int, ...],
                   batch: int = 1, elem_bytes: int = ELEM_BYTES) -> tuple[int, int]:
    """(fetch_bytes, write_bytes) for one layer at the given batch size."""
    if desc.kind == "recurrent_cell":
        in_elems = desc.in_features + desc.hidden
        out_elems = desc.hidden
    else:
        in_elems = _shape_elems(in_shape)
        out_elems = _shape_elems(nn.out_shape(desc, in_shape))
    fetch = in_elems * batch * elem_bytes + layer_params(desc) * elem_bytes
    write = out_elems * batch * elem_bytes
    return fetch, write


def layer_cost(desc: nn.LayerDescriptor, in_shape: tuple[int, ...],
               batch: int = 1) -> CostRow:
    fetch, write = memory_traffic(desc, in_shape, batch)
    name = desc.name or desc.kind
    return CostRow(name, desc.kind, layer_macs(desc, in_shape) * batch,
                   layer_params(desc), fetch, write)


def stack_cost(descs: Sequence[nn.LayerDescriptor], in_shape: tuple[int, ...],
               batch: int = 1, energy_per_mac: float = ENERGY_PER_MAC) -> CostReport:
    """Per-layer cost rows for a feed-forward stack."""
    report = CostReport(energy_per_mac=energy_per_mac)
    shape = in_shape
    for d in descs:
        report.rows.append(layer_cost(d, shape, batch))
        shape = nn.out_shape(d, shape)
    return report


def preprocess_cost(window_len: int = 128, cfg: SpectralConfig = SpectralConfig(),
                    energy_per_mac: float = ENERGY_PER_MAC) -> CostReport:
    """Pinned operation counts for one window -> spectral image conversion.

    Conventions per element: complex DFT term 4 mults; |z| then dB 3;
    min-max normalize 1; colormap interpolation 2 per output channel;
    bilinear resize 4 per output pixel per channel.
    """
    fl, hop = cfg.frame_len, cfg.hop
    f_bins = fl // 2 + 1
    frames = (window_len - fl) // hop + 1
    ft = f_bins * frames
    img = IMAGE_SIZE * IMAGE_SIZE
    b = ELEM_BYTES
    rows = [
        CostRow("frame_taper", "preprocess", frames * fl, 0,
                (window_len + fl) * b, frames * fl * b),
        CostRow("dft", "preprocess", 4 * f_bins * frames * fl, 0,
                frames * fl * b, 2 * ft * b),
        CostRow("magnitude_db", "preprocess", 3 * ft, 0, 2 * ft * b, ft * b),
        CostRow("normalize", "preprocess", ft, 0, ft * b, ft * b),
        CostRow("colormap", "preprocess", 6 * ft, 0, (ft + 256 * 3) * b, 3 * ft * b),
        CostRow("resize", "preprocess", 4 * 3 * img, 0, 3 * ft * b, 3 * img * b),
    ]
    return CostReport(rows, energy_per_mac)


def quantize_cost(embed_dim: int, codebook_size: int, batch: int = 1,
                  grid: int = GRID) -> CostRow:
    """Nearest-neighbor search: one mult per (cell, code, dim) difference."""
    cells = grid * grid
    macs = batch * cells * codebook_size * embed_dim
    params = codebook_size * embed_dim
    fetch = (batch * embed_dim * cells + params) * ELEM_BYTES
    write = batch * (embed_dim * cells + cells) * ELEM_BYTES
    return CostRow("quantize", "quantize", macs, params, fetch, write)


def head_cost(in_channels: int, seq_len: int = 1, grid: int = GRID,
              hidden: int = HEAD_HIDDEN,
              energy_per_mac: float = ENERGY_PER_MAC) -> CostReport:
    """Classifier head cost for one sequence of seq_len fused latents."""
    conv = [
        nn.conv2d("head.c1", in_channels, HEAD_CHANNELS, 3, 2, 1), nn.relu(),
        nn.conv2d("head.c2", HEAD_CHANNELS, HEAD_CHANNELS, 3, 2, 1), nn.relu(),
    ]
    report = stack_cost(conv, (in_channels, grid, grid), batch=seq_len,
                        energy_per_mac=energy_per_mac)
    feat_shape = nn.stack_out_shape(conv, (in_channels, grid, grid))
    x_dim = _shape_elems(feat_shape)
    cell = nn.recurrent_cell("head.cell", x_dim, hidden)
    fetch, write = memory_traffic(cell, (x_dim,), batch=seq_len)
    report.rows.append(CostRow("head.cell", "recurrent_cell",
                               layer_macs(cell, (x_dim,)) * seq_len,
                               layer_params(cell), fetch, write))
    out = nn.dense("head.out", hidden, 1)
    report.rows.append(layer_cost(out, (hidden,), batch=1))
    return report


def fuse_cost(m: int, embed_dim: int, grid: int = GRID, seq_len: int = 1,
              energy_per_mac: float = ENERGY_PER_MAC) -> CostReport:
    """Concatenation moves bytes but multiplies nothing."""
    elems = m * embed_dim * grid * grid * seq_len
    row = CostRow("fuse", "concat", 0, 0, elems * ELEM_BYTES, elems * ELEM_BYTES)
    return CostReport([row], energy_per_mac)


def pipeline_cost(kind: str, m: int, embed_dim: int = 16, codebook_size: int = 128,
                  seq_len: int = 1, window_len: int = 128,
                  spectral_cfg: SpectralConfig = SpectralConfig(),
                  energy_per_mac: float = ENERGY_PER_MAC,
                  modalities: Sequence[str] | None = None) -> PipelineCost:
    """Per-stage cost of one inference step for either system.

    The unified system applies one encoder M times (per-window activations
    scale with M, parameters do not); the baseline applies M distinct
    encoders (everything scales with M). Fusion and classification are
    identical across systems at equal M. Stage MACs cover seq_len windows
    per modality for preprocess/encode and one sequence for the head.
    """
    if kind not in ("unified", "baseline"):
        raise UsageError(f"kind must be 'unified' or 'baseline', got {kind!r}")
    if m < 1:
        raise UsageError("modality count must be >= 1")
    names = list(modalities) if modalities else [f"mod{i}" for i in range(m)]
    if len(names) != m:
        raise UsageError(f"got {len(names)} modality names for m={m}")

    pre = CostReport(energy_per_mac=energy_per_mac)
    one_window = preprocess_cost(window_len, spectral_cfg, energy_per_mac)
    for name in names:
        for r in one_window.rows:
            pre.rows.append(CostRow(f"{name}.{r.name}", r.kind,
                                    r.macs * seq_len, r.params,
                                    r.fetch_bytes * seq_len,
                                    r.write_bytes * seq_len))

    enc = CostReport(energy_per_mac=energy_per_mac)
    in_shape = (3, IMAGE_SIZE, IMAGE_SIZE)
    if kind == "unified":
        # one parameter set, applied once per modality per step
        enc.extend(stack_cost(build_encoder(embed_dim), in_shape,
                              batch=m * seq_len, energy_per_mac=energy_per_mac))
        enc.rows.append(quantize_cost(embed_dim, codebook_size, batch=m * seq_len))
        loads = 1
    else:
        for name in names:
            enc.extend(stack_cost(build_feature_stack(name, embed_dim), in_shape,
                                  batch=seq_len, energy_per_mac=energy_per_mac))
        loads = m

    fuse_stage = fuse_cost(m, embed_dim, GRID, seq_len, energy_per_mac)
    classify = head_cost(m * embed_dim, seq_len, GRID,
                         energy_per_mac=energy_per_mac)
    return PipelineCost({"preprocess": pre, "encode": enc, "fuse": fuse_stage,
                         "classify": classify}, m, loads)


def write_breakdown(path: str, report: CostReport) -> None:
    """Per-layer CSV: layer,kind,macs,params,fetch_bytes,write_bytes."""
    with open(path, "w") as fh:
        fh.write("layer,kind,macs,params,fetch_bytes,write_bytes\n")
        for r in report.rows:
            fh.write(f"{r.name},{r.kind},{r.macs},{r.params},"
                     f"{r.fetch_bytes},{r.write_bytes}\n")


# ---------------------------------------------------------------------------
# Scaling comparison
# ---------------------------------------------------------------------------

def measure_runtime(fn: Callable[[], None], repeat: int = 10,
                    warmup: int = 1) -> tuple[float, list[float]]:
    """Median wall-clock seconds over `repeat` runs, warm-up runs discarded."""
    for _ in range(warmup):
        fn()
    runs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs), runs


def scaling_table(m_values: Sequence[int] = (1, 2, 3, 4, 5, 6),
                  time_unified: Callable[[int], Callable[[], None]] | None = None,
                  time_baseline: Callable[[int], Callable[[], None]] | None = None,
                  repeat: int = 10, embed_dim: int = 16, codebook_size: int = 128,
                  seq_len: int = 1, window_len: int = 128,
                  spectral_cfg: SpectralConfig = SpectralConfig(),
                  energy_per_mac: float = ENERGY_PER_MAC
                  ) -> tuple[list[dict], list[tuple[int, str, int, float]]]:
    """One row per modality count: analytic columns plus optional runtimes.

    time_unified/time_baseline map a modality count to a zero-argument
    callable that performs one timed encoding pass; when omitted the
    runtime columns are left empty. The params columns report the encode
    stage (the quantity that distinguishes the systems); MAC columns are
    whole-pipeline totals. Individual timed runs are returned alongside
    the rows so they can be logged.
    """
    rows = []
    runs_log: list[tuple[int, str, int, float]] = []
    for m in m_values:
        uni = pipeline_cost("unified", m, embed_dim, codebook_size, seq_len,
                            window_len, spectral_cfg, energy_per_mac)
        base = pipeline_cost("baseline", m, embed_dim, codebook_size, seq_len,
                             window_len, spectral_cfg, energy_per_mac)
        row = {
            "m": m,
            "unified_macs": uni.total_macs,
            "baseline_macs": base.total_macs,
            "unified_params": uni.stages["encode"].params,
            "baseline_params": base.stages["encode"].params,
            "unified_loads": uni.encoder_loads,
            "baseline_loads": base.encoder_loads,
            "runtime_s_unified": "",
            "runtime_s_baseline": "",
        }
        if time_unified is not None:
            med, runs = measure_runtime(time_unified(m), repeat)
            row["runtime_s_unified"] = med
            runs_log += [(m, "unified", i, s) for i, s in enumerate(runs)]
        if time_baseline is not None:
            med, runs = measure_runtime(time_baseline(m), repeat)
            row["runtime_s_baseline"] = med
            runs_log += [(m, "baseline", i, s) for i, s in enumerate(runs)]
        rows.append(row)
        log.debug("scaling m=%d: unified %d MACs, baseline %d MACs", m,
                  row["unified_macs"], row["baseline_macs"])
    return rows, runs_log


def write_scaling_table(path: str, rows: list[dict]) -> None:
    cols = ["m", "unified_macs", "baseline_macs", "unified_params",
            "baseline_params", "unified_loads", "baseline_loads",
            "runtime_s_unified", "runtime_s_baseline"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in cols) + "\n")
