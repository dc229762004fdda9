"""Angular-error evaluation: metrics, run configuration, and the runners.

`run_grid` sweeps estimation methods over projection dimensionalities and
histogram resolutions; `run_noise` repeats one pinned configuration across
sensor noise levels. Both are fully deterministic: rerunning a fixed
configuration reproduces the report files byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .baselines import spectral_gray_world
from .cbc import (
    DEFAULT_SMOOTHING,
    MODE_LOG,
    SCORE_MODES,
    CorrelationModel,
    build_model,
    calibrate_bounds,
    classify,
    _candidate_feature_stream,
)
from .illuminants import IlluminantSet, load_illuminants, select_projection_set
from .io import (
    FormatError,
    format_float,
    read_dataset_manifest,
    read_name_list,
    read_scube,
    read_sensitivities,
)
from .projections import (
    KIND_ILL_PCA,
    KIND_LDA,
    KIND_NNMF,
    KIND_PCA,
    KIND_RAND,
    KIND_RGB,
    Projection,
    TrainingMatrix,
    fit_ill_pca,
    fit_lda,
    fit_nnmf,
    fit_pca,
    fit_rand,
    fit_rgb,
)
from .spectral import (
    SpectralImage,
    Spectrum,
    add_noise,
    chromaticity_pixels,
    downsample,
    mix_seed,
    relight,
)

METHOD_SGW = "sgw"
GRID_METHODS = (KIND_RGB, KIND_RAND, KIND_PCA, KIND_ILL_PCA, KIND_NNMF, KIND_LDA)
ALL_METHODS = GRID_METHODS + (METHOD_SGW,)

AVG_VARIANT = "avg"
NO_VARIANT = "-"


def angular_error_deg(
    a: Union[Spectrum, np.ndarray], b: Union[Spectrum, np.ndarray]
) -> float:
    """Angle between two spectra in degrees (scale-invariant)."""
    va = a.values if isinstance(a, Spectrum) else np.asarray(a, dtype=np.float64)
    vb = b.values if isinstance(b, Spectrum) else np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape or va.ndim != 1:
        raise ValueError(f"incompatible shapes {va.shape} and {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na <= 0 or nb <= 0:
        raise ValueError("angular error is undefined for zero vectors")
    ua = va / na
    ub = vb / nb
    # chord form of acos(ua . ub): same angle, but well conditioned near 0
    # and 180 degrees, and exactly zero for identical inputs
    diff = float(np.linalg.norm(ua - ub))
    total = float(np.linalg.norm(ua + ub))
    return math.degrees(2.0 * math.atan2(diff, total))


@dataclass(frozen=True)
class ErrorSummary:
    """Standard aggregate statistics over a set of angular errors."""

    mean: float
    median: float
    trimean: float
    best25: float
    worst25: float
    n: int


def summarize(errors: np.ndarray) -> ErrorSummary:
    """Mean, median, Tukey trimean, and best/worst-25% means.

    The trimean is (Q1 + 2*Q2 + Q3) / 4 with linearly interpolated
    quartiles. Best/worst-25% average the ceil(n/4) smallest/largest values.
    """
    errs = np.asarray(errors, dtype=np.float64)
    if errs.ndim != 1 or errs.size == 0:
        raise ValueError("need a non-empty 1-D error array")
    q1, q2, q3 = np.quantile(errs, [0.25, 0.5, 0.75])
    m = math.ceil(errs.size / 4)
    ordered = np.sort(errs)
    return ErrorSummary(
        mean=float(errs.mean()),
        median=float(np.median(errs)),
        trimean=float((q1 + 2 * q2 + q3) / 4),
        best25=float(ordered[:m].mean()),
        worst25=float(ordered[-m:].mean()),
        n=int(errs.size),
    )


@dataclass(frozen=True)
class CaseResult:
    """One (test scene, true illuminant) classification outcome."""

    scene: str
    true_name: str
    predicted: str
    error_deg: float


@dataclass
class ReportRow:
    """One aggregate line of a report."""

    method: str
    d_prime: Optional[int]
    n_bins: Optional[int]
    variant: str
    noise_label: str  # "-" for grid rows, "clean" or a dB figure for noise rows
    summary: ErrorSummary
    cases: Optional[list[CaseResult]] = None  # None on averaged rows

    def sort_key(self):
        if self.noise_label == NO_VARIANT:
            noise_rank = (0, 0.0)
        elif self.noise_label == "clean":
            noise_rank = (1, 0.0)
        else:
            noise_rank = (2, -float(self.noise_label))
        return (
            self.method,
            -1 if self.d_prime is None else self.d_prime,
            -1 if self.n_bins is None else self.n_bins,
            1 if self.variant == AVG_VARIANT else 0,
            self.variant,
            noise_rank,
        )


_REPORT_HEADER = "method,d_prime,B,variant,noise_db,mean,median,trimean,best25,worst25,n"
_RAW_HEADER = "method,d_prime,B,variant,noise_db,scene,true_illuminant,predicted,error_deg"


def _opt_int(v: Optional[int]) -> str:
    return NO_VARIANT if v is None else str(v)


@dataclass
class EvalReport:
    """Ordered report rows plus CSV writers (aggregate and per-case)."""

    rows: list[ReportRow] = field(default_factory=list)

    def sorted_rows(self) -> list[ReportRow]:
        return sorted(self.rows, key=ReportRow.sort_key)

    def write_csv(self, path) -> None:
        lines = [_REPORT_HEADER]
        for r in self.sorted_rows():
            s = r.summary
            lines.append(
                ",".join(
                    [
                        r.method,
                        _opt_int(r.d_prime),
                        _opt_int(r.n_bins),
                        r.variant,
                        r.noise_label,
                        format_float(s.mean),
                        format_float(s.median),
                        format_float(s.trimean),
                        format_float(s.best25),
                        format_float(s.worst25),
                        str(s.n),
                    ]
                )
            )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def write_raw_csv(self, path) -> None:
        lines = [_RAW_HEADER]
        for r in self.sorted_rows():
            if r.cases is None:
                continue
            prefix = [
                r.method,
                _opt_int(r.d_prime),
                _opt_int(r.n_bins),
                r.variant,
                r.noise_label,
            ]
            for c in r.cases:
                lines.append(
                    ",".join(
                        prefix
                        + [c.scene, c.true_name, c.predicted, format_float(c.error_deg)]
                    )
                )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass
class GridConfig:
    """Everything a grid or noise run needs; parseable from `key = value` text."""

    dataset: Path
    illuminants: Path
    methods: tuple[str, ...]
    d_primes: tuple[int, ...] = (1, 2, 3, 4, 5)
    bins: tuple[int, ...] = (5, 10, 20, 30)
    cameras: tuple[Path, ...] = ()
    rand_seeds: tuple[int, ...] = (42, 43, 44)
    projection_set: Optional[Path] = None  # names file; None clusters instead
    projection_set_k: int = 10
    projection_set_seed: int = 0
    downsample_fit: int = 8
    downsample_lda: int = 16
    downsample_eval: int = 4
    nnmf_seed: int = 0
    nnmf_max_iter: int = 300
    score_mode: str = MODE_LOG
    smoothing: float = DEFAULT_SMOOTHING
    allow_overlap: bool = False
    noise_master_seed: int = 1234
    noise_levels: tuple[float, ...] = (50.0, 40.0, 30.0, 20.0, 10.0)
    noise_method: str = KIND_ILL_PCA
    noise_d_prime: int = 4
    noise_bins: int = 20

    def __post_init__(self) -> None:
        self.dataset = Path(self.dataset)
        self.illuminants = Path(self.illuminants)
        self.methods = tuple(self.methods)
        if not self.methods:
            raise ValueError("config needs at least one method")
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ValueError(
                    f"unknown method {m!r}; valid: {', '.join(ALL_METHODS)}"
                )
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("methods must be unique")
        if KIND_RGB in self.methods and not self.cameras:
            raise ValueError("the rgb method needs at least one camera file")
        self.cameras = tuple(Path(c) for c in self.cameras)
        if not self.d_primes or any(d < 1 for d in self.d_primes):
            raise ValueError("d_primes must be positive")
        if not self.bins or any(b < 1 for b in self.bins):
            raise ValueError("bins must be positive")
        if not self.rand_seeds:
            raise ValueError("rand_seeds cannot be empty")
        for name, v in (
            ("downsample_fit", self.downsample_fit),
            ("downsample_lda", self.downsample_lda),
            ("downsample_eval", self.downsample_eval),
        ):
            if v < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.score_mode not in SCORE_MODES:
            raise ValueError(f"score_mode must be one of {SCORE_MODES}")
        if self.smoothing < 0:
            raise ValueError("smoothing must be non-negative")
        if self.projection_set is not None:
            self.projection_set = Path(self.projection_set)
        if self.projection_set_k < 2:
            raise ValueError("projection_set_k must be >= 2")
        if self.noise_method not in GRID_METHODS:
            raise ValueError(f"noise_method must be one of {GRID_METHODS}")
        if self.noise_d_prime < 1 or self.noise_bins < 1:
            raise ValueError("noise_d_prime and noise_bins must be positive")
        if any(not np.isfinite(l) for l in self.noise_levels):
            raise ValueError("noise_levels must be finite dB values")


def _split_list(raw: str) -> list[str]:
    return [p.strip() for p in raw.split(",") if p.strip()]


_CONFIG_KEYS = {
    "dataset": ("path", "dataset"),
    "illuminants": ("path", "illuminants"),
    "methods": ("strs", "methods"),
    "d_primes": ("ints", "d_primes"),
    "bins": ("ints", "bins"),
    "cameras": ("paths", "cameras"),
    "rand_seeds": ("ints", "rand_seeds"),
    "projection_set": ("path", "projection_set"),
    "projection_set_k": ("int", "projection_set_k"),
    "projection_set_seed": ("int", "projection_set_seed"),
    "downsample_fit": ("int", "downsample_fit"),
    "downsample_lda": ("int", "downsample_lda"),
    "downsample_eval": ("int", "downsample_eval"),
    "nnmf_seed": ("int", "nnmf_seed"),
    "nnmf_max_iter": ("int", "nnmf_max_iter"),
    "score_mode": ("str", "score_mode"),
    "smoothing": ("float", "smoothing"),
    "allow_overlap": ("bool", "allow_overlap"),
    "noise_master_seed": ("int", "noise_master_seed"),
    "noise_levels": ("floats", "noise_levels"),
    "noise_method": ("str", "noise_method"),
    "noise_d_prime": ("int", "noise_d_prime"),
    "noise_bins": ("int", "noise_bins"),
}


def parse_config(path) -> GridConfig:
    """Parse a `key = value` run configuration file.

    Unknown or duplicate keys are errors. Relative paths resolve against the
    config file's directory. Lists are comma-separated; booleans are
    true/false. Lines starting with '#' and blank lines are skipped.
    """
    path = Path(path)
    base = path.parent
    values: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, _, rhs = line.partition("=")
        key = key.strip()
        rhs = rhs.strip()
        if key not in _CONFIG_KEYS:
            raise FormatError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise FormatError(f"{path}:{lineno}: duplicate key {key!r}")
        typ, attr = _CONFIG_KEYS[key]
        try:
            if typ == "path":
                values[attr] = (base / rhs).resolve()
            elif typ == "paths":
                values[attr] = tuple((base / p).resolve() for p in _split_list(rhs))
            elif typ == "strs":
                values[attr] = tuple(_split_list(rhs))
            elif typ == "str":
                values[attr] = rhs
            elif typ == "ints":
                values[attr] = tuple(int(p) for p in _split_list(rhs))
            elif typ == "int":
                values[attr] = int(rhs)
            elif typ == "floats":
                values[attr] = tuple(float(p) for p in _split_list(rhs))
            elif typ == "float":
                values[attr] = float(rhs)
            elif typ == "bool":
                low = rhs.lower()
                if low not in ("true", "false"):
                    raise ValueError(f"expected true/false, got {rhs!r}")
                values[attr] = low == "true"
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    for required in ("dataset", "illuminants", "methods"):
        if required not in values:
            raise FormatError(f"{path}: missing required key {required!r}")
    try:
        return GridConfig(**values)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def training_chromaticities(
    images: Sequence[SpectralImage],
    candidates: IlluminantSet,
    labelled: bool = False,
) -> TrainingMatrix:
    """Pooled chromaticities of every image relit by every candidate.

    Rows are ordered candidate-major (all scenes under candidate 0, then
    candidate 1, ...). With `labelled=True` each row carries its candidate's
    index as the class label, which is what the supervised fit needs.
    """
    blocks = []
    labels = []
    for idx, ill in enumerate(candidates):
        for img in images:
            chroma = chromaticity_pixels(relight(img, ill.spd))
            if chroma.shape[0]:
                blocks.append(chroma)
                labels.append(np.full(chroma.shape[0], idx, dtype=np.int64))
    if not blocks:
        raise ValueError("training scenes contain no usable pixels")
    rows = np.concatenate(blocks, axis=0)
    rows = rows / rows.sum(axis=1, keepdims=True)  # force exact unit row sums
    if labelled:
        lab = np.concatenate(labels)
        if np.unique(lab).size < len(candidates):
            raise ValueError("every candidate needs at least one training pixel")
        return TrainingMatrix(rows, labels=lab)
    return TrainingMatrix(rows)


class _Runner:
    """Shared machinery for grid and noise runs (caching, deterministic order)."""

    def __init__(self, config: GridConfig):
        self.config = config
        self.full = load_illuminants(config.illuminants)
        if config.projection_set is not None:
            names = read_name_list(config.projection_set)
            self.proj_set = self.full.subset(names)
        else:
            self.proj_set = select_projection_set(
                self.full, k=config.projection_set_k, seed=config.projection_set_seed
            )
        train_paths, test_paths = read_dataset_manifest(config.dataset)
        if not config.allow_overlap:
            overlap = set(train_paths) & set(test_paths)
            if overlap:
                raise ValueError(
                    f"train/test scenes overlap: {sorted(str(p) for p in overlap)}"
                )
        self._sources = {
            p: read_scube(p) for p in dict.fromkeys(train_paths + test_paths)
        }
        for p, img in self._sources.items():
            if img.axis != self.full.axis:
                raise ValueError(
                    f"{p}: scene grid [{img.axis}] does not match illuminants"
                )
        self.train_paths = train_paths
        self.test_paths = test_paths
        self.train_eval = [
            downsample(self._sources[p], config.downsample_eval) for p in train_paths
        ]
        self.test_eval = [
            downsample(self._sources[p], config.downsample_eval) for p in test_paths
        ]
        self.test_names = [p.stem for p in test_paths]
        self._cameras: Optional[dict] = None
        self._fit_matrix: Optional[TrainingMatrix] = None
        self._lda_matrix: Optional[TrainingMatrix] = None
        self._projections: dict = {}
        self._bounds: dict = {}
        # Single-slot cache of per-candidate training features for the
        # projection currently being evaluated (shared across its B values).
        self._feature_slot: Optional[tuple] = None
        self._train_eval_pixels = sum(
            img.valid_pixels().shape[0] for img in self.train_eval
        )

    # -- lazy inputs --------------------------------------------------------

    def cameras(self) -> dict:
        if self._cameras is None:
            cams = {}
            for path in self.config.cameras:
                sens = read_sensitivities(path)
                if sens.axis != self.full.axis:
                    raise ValueError(f"{path}: camera grid does not match illuminants")
                if sens.camera_name in cams:
                    raise ValueError(f"duplicate camera name {sens.camera_name!r}")
                cams[sens.camera_name] = sens
            self._cameras = cams
        return self._cameras

    def _training_rows(self, factor: int, labelled: bool) -> TrainingMatrix:
        images = [downsample(self._sources[p], factor) for p in self.train_paths]
        return training_chromaticities(images, self.proj_set, labelled=labelled)

    def fit_matrix(self) -> TrainingMatrix:
        if self._fit_matrix is None:
            self._fit_matrix = self._training_rows(self.config.downsample_fit, False)
        return self._fit_matrix

    def lda_matrix(self) -> TrainingMatrix:
        if self._lda_matrix is None:
            self._lda_matrix = self._training_rows(self.config.downsample_lda, True)
        return self._lda_matrix

    # -- fitting ------------------------------------------------------------

    def variants_for(self, method: str) -> list[str]:
        if method == KIND_RGB:
            return sorted(self.cameras())
        if method == KIND_RAND:
            return [str(s) for s in self.config.rand_seeds]
        return [NO_VARIANT]

    def projection_for(self, method: str, d_prime: int, variant: str) -> Projection:
        key = (method, d_prime, variant)
        if key not in self._projections:
            cfg = self.config
            if method == KIND_RGB:
                proj = fit_rgb(self.cameras()[variant])
            elif method == KIND_RAND:
                proj = fit_rand(self.full.axis.count, d_prime, seed=int(variant))
            elif method == KIND_PCA:
                proj = fit_pca(self.fit_matrix(), d_prime)
            elif method == KIND_ILL_PCA:
                proj = fit_ill_pca(self.proj_set, d_prime)
            elif method == KIND_NNMF:
                proj = fit_nnmf(
                    self.fit_matrix(),
                    d_prime,
                    seed=cfg.nnmf_seed,
                    max_iter=cfg.nnmf_max_iter,
                )
            elif method == KIND_LDA:
                proj = fit_lda(self.lda_matrix(), d_prime)
            else:
                raise ValueError(f"method {method!r} has no projection")
            self._projections[key] = proj
        return self._projections[key]

    def _features_for(self, key, projection: Projection):
        """Cached per-candidate training features, or None when too large."""
        if self._feature_slot is not None and self._feature_slot[0] == key:
            return self._feature_slot[1]
        est = self._train_eval_pixels * len(self.full) * projection.output_dim
        if est > 50_000_000:
            return None
        blocks = list(
            _candidate_feature_stream(self.train_eval, self.full, projection)
        )
        self._feature_slot = (key, blocks)
        return blocks

    def bounds_for(self, key, projection: Projection):
        if key not in self._bounds:
            blocks = self._features_for(key, projection)
            source = (
                blocks
                if blocks is not None
                else _candidate_feature_stream(self.train_eval, self.full, projection)
            )
            self._bounds[key] = calibrate_bounds(source, projection.output_dim)
        return self._bounds[key]

    def model_for(self, method: str, d_prime: int, variant: str, n_bins: int):
        proj = self.projection_for(method, d_prime, variant)
        key = (method, d_prime, variant)
        bounds = self.bounds_for(key, proj)
        return build_model(
            self.train_eval,
            self.full,
            proj,
            n_bins,
            smoothing=self.config.smoothing,
            bounds=bounds,
            feature_blocks=self._features_for(key, proj),
        )

    # -- evaluation ---------------------------------------------------------

    def _evaluate(self, predictor, noise_db: Optional[float]):
        """Errors and per-case records over (test scene x candidate)."""
        errors = []
        cases = []
        master = self.config.noise_master_seed
        for i, img in enumerate(self.test_eval):
            scene = self.test_names[i]
            for j, ill in enumerate(self.full):
                radiance = relight(img, ill.normalized_spd())
                if noise_db is not None:
                    radiance = add_noise(radiance, noise_db, mix_seed(master, i, j))
                predicted = predictor(radiance)
                err = angular_error_deg(
                    self.full[self.full.index_of(predicted)].spd, ill.spd
                )
                errors.append(err)
                cases.append(CaseResult(scene, ill.name, predicted, err))
        return np.asarray(errors), cases

    def evaluate_model(self, model: CorrelationModel, noise_db: Optional[float]):
        mode = self.config.score_mode
        return self._evaluate(
            lambda image: classify(model, image, mode=mode)[0], noise_db
        )

    def evaluate_sgw(self):
        return self._evaluate(
            lambda image: spectral_gray_world(image, self.full)[0], None
        )

    # -- entry points -------------------------------------------------------

    def grid(self) -> EvalReport:
        cfg = self.config
        rows = []
        for method in cfg.methods:
            if method == METHOD_SGW:
                errors, cases = self.evaluate_sgw()
                rows.append(
                    ReportRow(
                        method, None, None, NO_VARIANT, NO_VARIANT,
                        summarize(errors), cases,
                    )
                )
                continue
            d_primes = (3,) if method == KIND_RGB else cfg.d_primes
            for d_prime in d_primes:
                for variant in self.variants_for(method):
                    for n_bins in cfg.bins:
                        model = self.model_for(method, d_prime, variant, n_bins)
                        errors, cases = self.evaluate_model(model, None)
                        rows.append(
                            ReportRow(
                                method, d_prime, n_bins, variant, NO_VARIANT,
                                summarize(errors), cases,
                            )
                        )
        rows.extend(_average_rows(rows))
        return EvalReport(rows)

    def noise(self) -> EvalReport:
        cfg = self.config
        method, d_prime, n_bins = cfg.noise_method, cfg.noise_d_prime, cfg.noise_bins
        rows = []
        for variant in self.variants_for(method):
            model = self.model_for(method, d_prime, variant, n_bins)
            errors, cases = self.evaluate_model(model, None)
            rows.append(
                ReportRow(
                    method, d_prime, n_bins, variant, "clean",
                    summarize(errors), cases,
                )
            )
            for level in cfg.noise_levels:
                errors, cases = self.evaluate_model(model, float(level))
                rows.append(
                    ReportRow(
                        method, d_prime, n_bins, variant, _noise_label(level),
                        summarize(errors), cases,
                    )
                )
        rows.extend(_average_rows(rows))
        return EvalReport(rows)


def _noise_label(level: float) -> str:
    return str(int(level)) if float(level).is_integer() else format_float(level)


def _average_rows(rows: Sequence[ReportRow]) -> list[ReportRow]:
    """Per-(method, d', B, noise) mean of aggregates when variants exist."""
    groups: dict = {}
    for r in rows:
        if r.variant == AVG_VARIANT:
            continue
        groups.setdefault((r.method, r.d_prime, r.n_bins, r.noise_label), []).append(r)
    out = []
    for (method, d_prime, n_bins, noise_label), members in groups.items():
        if len(members) < 2:
            continue
        s = ErrorSummary(
            mean=float(np.mean([m.summary.mean for m in members])),
            median=float(np.mean([m.summary.median for m in members])),
            trimean=float(np.mean([m.summary.trimean for m in members])),
            best25=float(np.mean([m.summary.best25 for m in members])),
            worst25=float(np.mean([m.summary.worst25 for m in members])),
            n=int(sum(m.summary.n for m in members)),
        )
        out.append(ReportRow(method, d_prime, n_bins, AVG_VARIANT, noise_label, s, None))
    return out


def run_grid(config: GridConfig) -> EvalReport:
    """Sweep every configured method over d' and histogram resolutions."""
    return _Runner(config).grid()


def run_noise(config: GridConfig) -> EvalReport:
    """Evaluate the pinned noise cell clean and at each configured SNR."""
    return _Runner(config).noise()
