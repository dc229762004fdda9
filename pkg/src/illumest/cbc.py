"""Correlation-based illuminant classification over binned chromaticities.

For every candidate light source, training scenes are relit by its SPD and
the projected chromaticities of all usable pixels are histogrammed on a
shared, calibrated grid. A test image is classified by correlating its own
histogram against each candidate's (log-likelihood by default) and taking
the best-scoring candidate.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .illuminants import IlluminantSet
from .projections import KIND_RGB, Projection, projection_hash
from .spectral import SpectralImage, ZERO_NORM_EPS

#: Grids at or below this many cells are held as dense arrays in memory;
#: larger grids use the sorted sparse representation. Files are always sparse.
DENSE_CELL_LIMIT = 2**24

DEFAULT_SMOOTHING = 1e-9

#: Calibrated bounds are widened by this fraction of the observed span on
#: each side; a dimension with zero span gets a fixed window of this width.
BOUNDS_MARGIN = 1e-3
DEGENERATE_WIDTH = 1e-6

MODE_LOG = "log"
MODE_DOT = "dot"
SCORE_MODES = (MODE_LOG, MODE_DOT)

CBCM_MAGIC = b"CBCM1"

#: Soft cap (in float64 counts) for caching training features during model
#: construction; past it the feature stream is recomputed for the second pass.
_CACHE_LIMIT_FLOATS = 50_000_000


def pixel_features(projection: Projection, pixels: np.ndarray) -> np.ndarray:
    """Histogram coordinates for raw radiance pixel rows, black rows dropped.

    Camera-sensitivity projections integrate the raw radiance first and then
    L1-normalize the 3-channel response; every other kind L1-normalizes the
    spectral pixel first and projects the chromaticity. Rows whose relevant
    L1 norm is at or below ZERO_NORM_EPS are skipped.
    """
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.ndim != 2 or pixels.shape[1] != projection.input_dim:
        raise ValueError(
            f"expected (N, {projection.input_dim}) pixels, got {pixels.shape}"
        )
    if projection.kind == KIND_RGB:
        response = pixels @ projection.basis.T
        sums = response.sum(axis=1)
        keep = sums > ZERO_NORM_EPS
        return response[keep] / sums[keep][:, None]
    sums = pixels.sum(axis=1)
    keep = sums > ZERO_NORM_EPS
    if not np.any(keep):
        return np.empty((0, projection.output_dim))
    chroma = pixels[keep] / sums[keep][:, None]
    return projection.apply_rows(chroma)


def calibrate_bounds(
    feature_blocks: Iterable[np.ndarray], n_dims: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension histogram bounds from observed training coordinates.

    Bounds cover the global min/max over all blocks, widened by
    BOUNDS_MARGIN of the span per side; a degenerate (constant) dimension
    gets a DEGENERATE_WIDTH window centered on the constant.
    """
    lo = np.full(n_dims, np.inf)
    hi = np.full(n_dims, -np.inf)
    seen = False
    for block in feature_blocks:
        block = np.asarray(block, dtype=np.float64)
        if block.size == 0:
            continue
        if block.ndim != 2 or block.shape[1] != n_dims:
            raise ValueError(f"expected (N, {n_dims}) blocks, got {block.shape}")
        seen = True
        np.minimum(lo, block.min(axis=0), out=lo)
        np.maximum(hi, block.max(axis=0), out=hi)
    if not seen:
        raise ValueError("no feature rows to calibrate bounds from")
    span = hi - lo
    degenerate = span <= 0
    center = (lo + hi) / 2.0
    lo = np.where(degenerate, center - DEGENERATE_WIDTH / 2.0, lo - BOUNDS_MARGIN * span)
    hi = np.where(degenerate, center + DEGENERATE_WIDTH / 2.0, hi + BOUNDS_MARGIN * span)
    return lo, hi


def bin_indices(
    coords: np.ndarray, lo: np.ndarray, hi: np.ndarray, n_bins: int
) -> np.ndarray:
    """Flat row-major cell index per coordinate row, clamping to edge bins."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != lo.shape[0]:
        raise ValueError(f"expected (N, {lo.shape[0]}) coords, got {coords.shape}")
    scaled = (coords - lo) / (hi - lo) * n_bins
    idx = np.clip(np.floor(scaled).astype(np.int64), 0, n_bins - 1)
    flat = np.zeros(coords.shape[0], dtype=np.int64)
    for j in range(coords.shape[1]):
        flat = flat * n_bins + idx[:, j]
    return flat


@dataclass
class HistogramGrid:
    """Smoothed probability mass over the flat cells of one candidate.

    Cells never observed in training share one `base_prob`. Dense grids keep
    the full probability vector; sparse grids keep sorted occupied cell
    indices with their probabilities.
    """

    n_dims: int
    n_bins: int
    base_prob: float
    dense: Optional[np.ndarray] = None
    cells: Optional[np.ndarray] = None
    cell_probs: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if (self.dense is None) == (self.cells is None):
            raise ValueError("grid needs exactly one of dense / sparse storage")
        if self.dense is not None:
            self.dense = np.asarray(self.dense, dtype=np.float64)
            if self.dense.shape != (self.n_bins**self.n_dims,):
                raise ValueError("dense grid has the wrong cell count")
        else:
            self.cells = np.asarray(self.cells, dtype=np.int64)
            self.cell_probs = np.asarray(self.cell_probs, dtype=np.float64)
            if self.cells.shape != self.cell_probs.shape or self.cells.ndim != 1:
                raise ValueError("sparse cells and probabilities must align")
            if self.cells.size and np.any(np.diff(self.cells) <= 0):
                raise ValueError("sparse cells must be strictly increasing")

    @classmethod
    def from_counts(
        cls,
        occupied_cells: np.ndarray,
        counts: np.ndarray,
        n_dims: int,
        n_bins: int,
        smoothing: float,
    ) -> "HistogramGrid":
        """Normalize raw cell counts into smoothed probabilities.

        Every cell of the full grid receives `smoothing` pseudo-mass before
        normalization, so unobserved cells end with probability
        smoothing / (total + smoothing * n_cells).
        """
        total_cells = n_bins**n_dims
        total = float(counts.sum())
        if total <= 0:
            raise ValueError("histogram has no observations")
        denom = total + smoothing * total_cells
        base = smoothing / denom
        probs = (counts + smoothing) / denom
        if total_cells <= DENSE_CELL_LIMIT:
            dense = np.full(total_cells, base)
            dense[occupied_cells] = probs
            return cls(n_dims, n_bins, base, dense=dense)
        return cls(
            n_dims,
            n_bins,
            base,
            cells=np.asarray(occupied_cells, dtype=np.int64),
            cell_probs=probs,
        )

    def prob_at(self, flat_cells: np.ndarray) -> np.ndarray:
        """Probability of each queried flat cell."""
        q = np.asarray(flat_cells, dtype=np.int64)
        if self.dense is not None:
            return self.dense[q]
        pos = np.searchsorted(self.cells, q)
        pos_clamped = np.minimum(pos, self.cells.size - 1) if self.cells.size else pos
        found = (
            (pos < self.cells.size) & (self.cells[pos_clamped] == q)
            if self.cells.size
            else np.zeros(q.shape, dtype=bool)
        )
        out = np.full(q.shape, self.base_prob)
        out[found] = self.cell_probs[pos_clamped[found]]
        return out

    def occupied(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted (cells, probabilities) for cells observed in training."""
        if self.dense is not None:
            cells = np.flatnonzero(self.dense != self.base_prob)
            return cells.astype(np.int64), self.dense[cells]
        return self.cells.copy(), self.cell_probs.copy()


@dataclass
class CorrelationModel:
    """Calibrated per-candidate histograms plus the projection binding.

    The file format stores only a digest of the projection, so a loaded
    model starts with `projection=None`; `with_projection` re-attaches and
    verifies the projection before the model can score images.
    """

    n_dims: int
    n_bins: int
    lo: np.ndarray
    hi: np.ndarray
    smoothing: float
    candidate_names: tuple[str, ...]
    grids: tuple[HistogramGrid, ...]
    projection_digest: bytes
    projection: Optional[Projection] = None

    def __post_init__(self) -> None:
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.hi = np.asarray(self.hi, dtype=np.float64)
        if self.lo.shape != (self.n_dims,) or self.hi.shape != (self.n_dims,):
            raise ValueError("bounds must have one (lo, hi) pair per dimension")
        if np.any(self.hi <= self.lo):
            raise ValueError("bounds must satisfy lo < hi")
        self.candidate_names = tuple(self.candidate_names)
        self.grids = tuple(self.grids)
        if len(self.candidate_names) != len(self.grids) or not self.grids:
            raise ValueError("need one grid per candidate name")
        if len(self.projection_digest) != 32:
            raise ValueError("projection digest must be 32 bytes")
        if self.projection is not None and (
            projection_hash(self.projection) != self.projection_digest
        ):
            raise ValueError("projection does not match the model's digest")

    def with_projection(self, projection: Projection) -> "CorrelationModel":
        """Attach the projection this model was built with (digest-checked)."""
        if projection_hash(projection) != self.projection_digest:
            raise ValueError("projection does not match the model's digest")
        return replace(self, projection=projection)


def _candidate_feature_stream(
    images: Sequence[SpectralImage],
    candidates: IlluminantSet,
    projection: Projection,
):
    """Yield one (N_j, d') feature block per candidate, in candidate order."""
    pixel_blocks = [img.valid_pixels() for img in images]
    for ill in candidates:
        spd = ill.spd.values
        feats = [pixel_features(projection, block * spd) for block in pixel_blocks]
        feats = [f for f in feats if f.shape[0]]
        if not feats:
            raise ValueError(
                f"no usable training pixels under candidate {ill.name!r}"
            )
        yield np.concatenate(feats, axis=0)


def build_model(
    images: Sequence[SpectralImage],
    candidates: IlluminantSet,
    projection: Projection,
    n_bins: int,
    smoothing: float = DEFAULT_SMOOTHING,
    bounds: Optional[tuple[np.ndarray, np.ndarray]] = None,
    feature_blocks: Optional[Sequence[np.ndarray]] = None,
) -> CorrelationModel:
    """Build the per-candidate histogram model from training reflectances.

    Each training image is relit by each candidate's raw SPD; the projected
    chromaticities fill that candidate's histogram. Bounds are calibrated
    from the pooled training features unless given explicitly.
    `feature_blocks` may carry per-candidate feature arrays computed ahead of
    time (exactly what the internal stream would produce) so repeated builds
    at different resolutions skip the projection work.
    """
    if not images:
        raise ValueError("need at least one training image")
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    for img in images:
        if img.n_bands != projection.input_dim:
            raise ValueError(
                f"image has {img.n_bands} bands, projection expects "
                f"{projection.input_dim}"
            )
        if img.axis != candidates.axis:
            raise ValueError("training images and candidates must share a grid")
    d_out = projection.output_dim
    if n_bins**d_out > np.iinfo(np.int64).max:
        raise ValueError("histogram cell space is too large to index")

    if feature_blocks is not None:
        cached = list(feature_blocks)
        if len(cached) != len(candidates):
            raise ValueError("need one feature block per candidate")
    else:
        cached = None
    if bounds is None:
        if cached is None:
            est_rows = (
                sum(img.valid_pixels().shape[0] for img in images) * len(candidates)
            )
            if est_rows * d_out <= _CACHE_LIMIT_FLOATS:
                cached = list(_candidate_feature_stream(images, candidates, projection))
        if cached is not None:
            lo, hi = calibrate_bounds(cached, d_out)
        else:
            lo, hi = calibrate_bounds(
                _candidate_feature_stream(images, candidates, projection), d_out
            )
    else:
        lo, hi = bounds
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)

    stream = cached if cached is not None else _candidate_feature_stream(
        images, candidates, projection
    )
    grids = []
    for feats in stream:
        flat = bin_indices(feats, lo, hi, n_bins)
        occupied, counts = np.unique(flat, return_counts=True)
        grids.append(
            HistogramGrid.from_counts(occupied, counts, d_out, n_bins, smoothing)
        )
    return CorrelationModel(
        n_dims=d_out,
        n_bins=n_bins,
        lo=lo,
        hi=hi,
        smoothing=smoothing,
        candidate_names=tuple(candidates.names()),
        grids=tuple(grids),
        projection_digest=projection_hash(projection),
        projection=projection,
    )


def score(
    model: CorrelationModel, image: SpectralImage, mode: str = MODE_LOG
) -> np.ndarray:
    """Correlation score of the image against every candidate.

    The test histogram is normalized without smoothing; `log` mode returns
    sum(h_test * log(h_candidate)) over test-occupied cells, `dot` mode the
    plain dot product of the two histograms.
    """
    if mode not in SCORE_MODES:
        raise ValueError(f"mode must be one of {SCORE_MODES}, got {mode!r}")
    if model.projection is None:
        raise ValueError("model has no projection attached; call with_projection")
    feats = pixel_features(model.projection, image.valid_pixels())
    if feats.shape[0] == 0:
        raise ValueError("test image has no usable pixels")
    flat = bin_indices(feats, model.lo, model.hi, model.n_bins)
    occupied, counts = np.unique(flat, return_counts=True)
    weights = counts / counts.sum()
    out = np.empty(len(model.grids))
    for j, grid in enumerate(model.grids):
        probs = grid.prob_at(occupied)
        if mode == MODE_LOG:
            with np.errstate(divide="ignore"):
                out[j] = float(weights @ np.log(probs))
        else:
            out[j] = float(weights @ probs)
    return out


def classify(
    model: CorrelationModel, image: SpectralImage, mode: str = MODE_LOG
) -> tuple[str, np.ndarray]:
    """Best-scoring candidate name (lowest index on ties) plus all scores."""
    scores = score(model, image, mode=mode)
    return model.candidate_names[int(np.argmax(scores))], scores


# ---------------------------------------------------------------------------
# .cbcm serialization
#
# magic "CBCM1", u32 n_dims, u32 n_bins, u32 n_candidates, n_dims pairs of
# f64 (lo, hi), f64 smoothing, 32-byte sha256 of the projection file bytes,
# then per candidate: u32 name length + UTF-8 name, f64 base_prob,
# u64 cell count, and (u64 flat cell, f64 prob) pairs for cells observed in
# training. Little-endian; cells are strictly increasing.
# ---------------------------------------------------------------------------


def write_model(path, model: CorrelationModel) -> None:
    parts = [
        CBCM_MAGIC,
        struct.pack("<III", model.n_dims, model.n_bins, len(model.grids)),
    ]
    for j in range(model.n_dims):
        parts.append(struct.pack("<dd", model.lo[j], model.hi[j]))
    parts.append(struct.pack("<d", model.smoothing))
    parts.append(model.projection_digest)
    for name, grid in zip(model.candidate_names, model.grids):
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        cells, probs = grid.occupied()
        parts.append(struct.pack("<dQ", grid.base_prob, cells.size))
        parts.append(cells.astype("<u8").tobytes())
        parts.append(probs.astype("<f8", copy=False).tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_model(path) -> CorrelationModel:
    from .io import FormatError

    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 5 or blob[:5] != CBCM_MAGIC:
        raise FormatError(f"{path}: not a correlation model (bad magic)")
    try:
        n_dims, n_bins, n_candidates = struct.unpack_from("<III", blob, 5)
        offset = 5 + 12
        lo = np.empty(n_dims)
        hi = np.empty(n_dims)
        for j in range(n_dims):
            lo[j], hi[j] = struct.unpack_from("<dd", blob, offset)
            offset += 16
        (smoothing,) = struct.unpack_from("<d", blob, offset)
        offset += 8
        digest = blob[offset : offset + 32]
        if len(digest) != 32:
            raise FormatError(f"{path}: truncated projection digest")
        offset += 32
        names = []
        grids = []
        for _ in range(n_candidates):
            (name_len,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            names.append(blob[offset : offset + name_len].decode("utf-8"))
            offset += name_len
            base_prob, n_cells = struct.unpack_from("<dQ", blob, offset)
            offset += 16
            cells = np.frombuffer(blob, dtype="<u8", count=n_cells, offset=offset)
            offset += 8 * n_cells
            probs = np.frombuffer(blob, dtype="<f8", count=n_cells, offset=offset)
            offset += 8 * n_cells
            total_cells = n_bins**n_dims
            if total_cells <= DENSE_CELL_LIMIT:
                dense = np.full(total_cells, base_prob)
                dense[cells.astype(np.int64)] = probs
                grids.append(HistogramGrid(n_dims, n_bins, base_prob, dense=dense))
            else:
                grids.append(
                    HistogramGrid(
                        n_dims,
                        n_bins,
                        base_prob,
                        cells=cells.astype(np.int64),
                        cell_probs=probs.copy(),
                    )
                )
        if offset != len(blob):
            raise FormatError(f"{path}: {len(blob) - offset} trailing bytes")
        return CorrelationModel(
            n_dims=n_dims,
            n_bins=n_bins,
            lo=lo,
            hi=hi,
            smoothing=smoothing,
            candidate_names=tuple(names),
            grids=tuple(grids),
            projection_digest=digest,
        )
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: {exc}") from exc
