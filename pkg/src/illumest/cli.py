"""Command-line interface.

Every subcommand exits 0 on success and nonzero with a one-line diagnostic
on stderr otherwise.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bundled import bundled_illuminant_manifest
from .cbc import DEFAULT_SMOOTHING, MODE_LOG, SCORE_MODES, build_model, classify, read_model, write_model
from .evaluation import (
    angular_error_deg,
    parse_config,
    run_grid,
    run_noise,
    training_chromaticities,
)
from .illuminants import load_illuminants, select_projection_set
from .io import (
    format_float,
    read_dataset_manifest,
    read_name_list,
    read_scube,
    read_sensitivities,
    write_name_list,
)
from .projections import (
    ALL_KINDS,
    KIND_ILL_PCA,
    KIND_LDA,
    KIND_NNMF,
    KIND_PCA,
    KIND_RAND,
    KIND_RGB,
    fit_ill_pca,
    fit_lda,
    fit_nnmf,
    fit_pca,
    fit_rand,
    fit_rgb,
    read_projection,
    write_projection,
)
from .spectral import SpectralAxis, downsample
from .synth import synth_dataset


def _add_illuminants_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--illuminants",
        type=Path,
        default=None,
        help="illuminant manifest (path,name lines); defaults to the bundled 28",
    )


def _illuminants(args) -> Path:
    return args.illuminants if args.illuminants is not None else bundled_illuminant_manifest()


def _projection_subset(full, args):
    if getattr(args, "projection_set", None) is not None:
        return full.subset(read_name_list(args.projection_set))
    return select_projection_set(
        full, k=args.projection_set_k, seed=args.projection_set_seed
    )


def _cmd_synth(args) -> int:
    axis = SpectralAxis(args.start, args.step, args.bands)
    manifest, paths = synth_dataset(
        args.out,
        args.scenes,
        axis,
        base_seed=args.seed,
        width=args.width,
        height=args.height,
        basis_count=args.basis,
        patch_count=args.patches,
        mask_fraction=args.mask_fraction,
        texture=args.texture,
    )
    print(f"wrote {len(paths)} scenes, manifest: {manifest}")
    return 0


def _cmd_select(args) -> int:
    full = load_illuminants(_illuminants(args))
    picked = select_projection_set(full, k=args.k, seed=args.seed)
    write_name_list(args.out, picked.names())
    print(f"selected {len(picked)} of {len(full)}: {', '.join(picked.names())}")
    return 0


def _fit_training(args, full):
    proj_set = _projection_subset(full, args)
    train_paths, _ = read_dataset_manifest(args.dataset)
    images = [downsample(read_scube(p), args.downsample) for p in train_paths]
    return proj_set, images


def _cmd_fit(args) -> int:
    full = load_illuminants(_illuminants(args))
    method = args.method
    if method == KIND_RGB:
        if args.camera is None:
            raise ValueError("--camera is required for the rgb method")
        proj = fit_rgb(read_sensitivities(args.camera))
    elif method == KIND_RAND:
        proj = fit_rand(full.axis.count, args.d_prime, seed=args.seed)
    elif method == KIND_ILL_PCA:
        proj = fit_ill_pca(_projection_subset(full, args), args.d_prime)
    else:
        if args.dataset is None:
            raise ValueError(f"--dataset is required for the {method} method")
        if args.downsample is None:
            args.downsample = 16 if method == KIND_LDA else 8
        proj_set, images = _fit_training(args, full)
        if method == KIND_PCA:
            proj = fit_pca(training_chromaticities(images, proj_set), args.d_prime)
        elif method == KIND_NNMF:
            proj = fit_nnmf(
                training_chromaticities(images, proj_set),
                args.d_prime,
                seed=args.seed,
                max_iter=args.nnmf_max_iter,
            )
        elif method == KIND_LDA:
            proj = fit_lda(
                training_chromaticities(images, proj_set, labelled=True),
                args.d_prime,
            )
        else:
            raise ValueError(f"unknown method {method!r}")
    write_projection(args.out, proj)
    print(f"wrote {proj.kind} projection ({proj.input_dim} -> {proj.output_dim}): {args.out}")
    return 0


def _cmd_build_model(args) -> int:
    full = load_illuminants(_illuminants(args))
    proj = read_projection(args.projection)
    train_paths, _ = read_dataset_manifest(args.dataset)
    images = [downsample(read_scube(p), args.downsample) for p in train_paths]
    model = build_model(
        images, full, proj, args.bins, smoothing=args.smoothing
    )
    write_model(args.out, model)
    print(
        f"wrote model ({model.n_dims}-D, {model.n_bins} bins, "
        f"{len(model.candidate_names)} candidates): {args.out}"
    )
    return 0


def _cmd_classify(args) -> int:
    model = read_model(args.model).with_projection(read_projection(args.projection))
    image = downsample(read_scube(args.cube), args.downsample)
    name, scores = classify(model, image, mode=args.mode)
    print(f"predicted: {name}")
    for cand, s in zip(model.candidate_names, scores):
        print(f"score,{cand},{format_float(float(s))}")
    if args.truth is not None:
        full = load_illuminants(_illuminants(args))
        err = angular_error_deg(
            full[full.index_of(name)].spd, full[full.index_of(args.truth)].spd
        )
        print(f"angular_error_deg,{format_float(err)}")
    return 0


def _run_report(args, runner) -> int:
    config = parse_config(args.config)
    report = runner(config)
    out = Path(args.out)
    raw = Path(args.raw) if args.raw else out.with_name(out.stem + "_raw" + out.suffix)
    report.write_csv(out)
    report.write_raw_csv(raw)
    print(f"wrote {len(report.rows)} rows: {out} (raw: {raw})")
    return 0


def _cmd_grid(args) -> int:
    return _run_report(args, run_grid)


def _cmd_noise(args) -> int:
    return _run_report(args, run_noise)


def _cmd_export_pca(args) -> int:
    full = load_illuminants(_illuminants(args))
    fitted_on = (
        full.subset(read_name_list(args.projection_set))
        if args.projection_set is not None
        else full
    )
    proj = fit_ill_pca(fitted_on, args.components)
    coords = proj.apply_rows(full.chromaticity_matrix())
    header = "name," + ",".join(f"c{i + 1}" for i in range(args.components))
    lines = [header]
    for name, row in zip(full.names(), coords):
        lines.append(name + "," + ",".join(format_float(v) for v in row))
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(full)} coordinate rows: {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="illumest",
        description="Illuminant estimation via correlation of reduced-dimension "
        "chromaticity histograms",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic reflectance dataset")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--scenes", type=int, default=24)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--basis", type=int, default=6, help="spectral basis functions")
    p.add_argument("--patches", type=int, default=12, help="rectangles per scene")
    p.add_argument("--mask-fraction", type=float, default=0.05)
    p.add_argument("--texture", type=float, default=0.08)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", type=float, default=400.0, help="first wavelength (nm)")
    p.add_argument("--step", type=float, default=10.0, help="wavelength step (nm)")
    p.add_argument("--bands", type=int, default=31)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser(
        "select-projection-set", help="cluster candidates into a reduced set"
    )
    _add_illuminants_arg(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="names file to write")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("fit", help="fit a projection and save it as .proj")
    p.add_argument("--method", choices=ALL_KINDS, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_illuminants_arg(p)
    p.add_argument("--dataset", type=Path, default=None, help="dataset manifest")
    p.add_argument("--projection-set", type=Path, default=None, help="names file")
    p.add_argument("--projection-set-k", type=int, default=10)
    p.add_argument("--projection-set-seed", type=int, default=0)
    p.add_argument("--d-prime", type=int, default=3, help="output dimensionality")
    p.add_argument("--seed", type=int, default=42, help="rand/nnmf seed")
    p.add_argument(
        "--downsample",
        type=int,
        default=None,
        help="training downsample factor (default 8, or 16 for lda)",
    )
    p.add_argument("--camera", type=Path, default=None, help="sensitivity CSV (rgb)")
    p.add_argument("--nnmf-max-iter", type=int, default=300)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("build-model", help="histogram model for a projection")
    p.add_argument("--projection", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    _add_illuminants_arg(p)
    p.add_argument("--bins", type=int, required=True, help="bins per dimension")
    p.add_argument("--smoothing", type=float, default=DEFAULT_SMOOTHING)
    p.add_argument("--downsample", type=int, default=4)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_build_model)

    p = sub.add_parser("classify", help="classify one radiance cube")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--projection", type=Path, required=True)
    p.add_argument("--cube", type=Path, required=True)
    p.add_argument("--mode", choices=SCORE_MODES, default=MODE_LOG)
    p.add_argument("--downsample", type=int, default=1)
    p.add_argument("--truth", type=str, default=None, help="true illuminant name")
    _add_illuminants_arg(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("grid", help="run the full evaluation grid from a config")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="aggregate CSV path")
    p.add_argument("--raw", type=Path, default=None, help="per-case CSV path")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("noise", help="run the pinned cell across noise levels")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--raw", type=Path, default=None)
    p.set_defaults(func=_cmd_noise)

    p = sub.add_parser(
        "export-pca-coords", help="candidate coordinates in an SPD principal basis"
    )
    _add_illuminants_arg(p)
    p.add_argument("--projection-set", type=Path, default=None, help="names file to fit on")
    p.add_argument("--components", type=int, default=3)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_export_pca)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface one-line diagnostics, not tracebacks
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
