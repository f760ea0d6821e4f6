"""Command-line front end.

Subcommands: simulate, train, evaluate, align, export, plot, inspect-params.
Exit codes: 0 on success, 1 with a diagnostic on stderr for handled errors,
2 for bad usage (argparse). Log verbosity comes from RADARHAND_LOG_LEVEL.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import dsp, metrics, pipeline, weightnet
from .dsp import StftConfig
from .hand_model import load_skeleton, save_skeleton
from .radar_sim import RadarParams, load_radar_config
from .weightnet import TrainSchedule, TrainStage


def _radar_from(args) -> RadarParams:
    if getattr(args, "config", None):
        return load_radar_config(args.config)
    return RadarParams()


def _net_from(args):
    if getattr(args, "weights", None):
        return weightnet.load_weightnet(args.weights)
    return None, None


def _common(sub):
    sub.add_argument("--config", help="radar parameter INI file")
    sub.add_argument("--seed", type=int, default=0, help="seed for stochastic steps")
    sub.add_argument("--weights", help="trained weighting-network file")
    return sub


def _cmd_simulate(args) -> int:
    radar = _radar_from(args)
    net, stats = _net_from(args)
    if args.skeleton:
        if not args.out:
            raise ValueError("--out is required with --skeleton")
        seq = load_skeleton(args.skeleton)
        spec = pipeline.synthesize_sequence(seq, radar, net=net, stats=stats)
        dsp.save_spectrogram(spec, args.out)
        print(args.out)
        return 0
    if args.manifest:
        if not args.out_dir:
            raise ValueError("--out-dir is required with --manifest")
        manifest = pipeline.load_manifest(args.manifest)
        index = pipeline.export_dataset(
            manifest, args.out_dir, radar, net=net, stats=stats, png=args.png
        )
        print(json.dumps({"written": len(index["entries"]), "failed": len(index["failures"])}))
        return 0 if not index["failures"] else 1
    raise ValueError("simulate needs --skeleton or --manifest")


def _cmd_train(args) -> int:
    radar = _radar_from(args)
    manifest = pipeline.load_manifest(args.manifest)
    items = []
    for entry in manifest.entries:
        if entry.reference_spectrogram is None:
            raise ValueError(f"entry {entry.item_id!r} has no reference spectrogram")
        seq = load_skeleton(entry.skeleton_file)
        ref = dsp.load_spectrogram(entry.reference_spectrogram)
        items.append(
            pipeline.prepare_item(
                seq,
                radar,
                label=entry.gesture_label,
                item_id=entry.item_id,
                real_spec=ref,
            )
        )
    stages = [TrainStage(*s) for s in args.stage] if args.stage else None
    schedule = (
        TrainSchedule(stages=stages, seed=args.seed)
        if stages
        else TrainSchedule(seed=args.seed)
    )
    result = weightnet.train(
        items, schedule, radar, hidden=args.hidden, log_path=args.log
    )
    weightnet.save_weightnet(result.params, args.out, stats=result.stats)
    print(
        json.dumps(
            {
                "out": args.out,
                "best_val_loss": result.best_val_loss,
                "best_val_ssim_x100": 100.0 * result.best_val_ssim,
                "diverged": result.diverged,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_evaluate(args) -> int:
    if args.files:
        if len(args.files) != 2:
            raise ValueError("evaluate takes exactly two spectrogram files")
        a = dsp.load_spectrogram(args.files[0])
        b = dsp.load_spectrogram(args.files[1])
        print(
            json.dumps(
                {"ssim_x100": 100.0 * metrics.ssim(a, b), "mse": metrics.mse(a, b)},
                sort_keys=True,
            )
        )
        return 0
    if args.manifest:
        radar = _radar_from(args)
        net, stats = _net_from(args)
        manifest = pipeline.load_manifest(args.manifest)
        report = pipeline.evaluate_manifest(manifest, radar, net=net, stats=stats)
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0 if not report["failures"] else 1
    raise ValueError("evaluate needs two spectrogram files or --manifest")


def _parse_triplet(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {text!r}")
    return tuple(parts)


def _cmd_align(args) -> int:
    seq = load_skeleton(args.infile)
    spec = pipeline.AlignmentSpec(
        translation=_parse_triplet(args.translation) if args.translation else None
    )
    aligned = pipeline.align_skeleton(seq, spec)
    save_skeleton(aligned, args.out)
    print(args.out)
    return 0


def _cmd_export(args) -> int:
    radar = _radar_from(args)
    net, stats = _net_from(args)
    manifest = pipeline.load_manifest(args.manifest)
    index = pipeline.export_dataset(
        manifest, args.out_dir, radar, net=net, stats=stats, png=args.png
    )
    print(
        json.dumps(
            {"written": len(index["entries"]), "failed": len(index["failures"])},
            sort_keys=True,
        )
    )
    return 0 if not index["failures"] else 1


def _cmd_plot(args) -> int:
    spec = dsp.load_spectrogram(args.infile)
    out = args.out or str(Path(args.infile).with_suffix(".png"))
    dsp.spectrogram_to_png(spec, out, colormap=args.colormap, scale=args.scale)
    print(out)
    return 0


def _cmd_inspect_params(args) -> int:
    if args.weights:
        params, stats = weightnet.load_weightnet(args.weights)
        doc = {
            "kind": "weightnet",
            "hidden_size": params.hidden_size,
            "input_dim": params.input_dim,
            "arrays": {k: list(v.shape) for k, v in params.arrays().items()},
            "parameter_count": int(sum(v.size for v in params.arrays().values())),
            "has_feature_stats": stats is not None,
        }
    else:
        p = _radar_from(args)
        doc = {
            "kind": "radar",
            "start_frequency_hz": p.start_frequency_hz,
            "bandwidth_hz": p.bandwidth_hz,
            "chirp_slope_hz_per_s": p.chirp_slope_hz_per_s,
            "chirp_duration_s": p.chirp_duration_s,
            "chirp_interval_s": p.chirp_interval_s,
            "samples_per_chirp": p.samples_per_chirp,
            "sample_rate_hz": p.sample_rate_hz,
            "chirps_per_frame": p.chirps_per_frame,
            "frame_rate_hz": p.frame_rate_hz,
            "max_velocity_m_s": p.max_velocity_m_s,
            "wavelength_m": p.wavelength_m,
            "range_bin_spacing_m": p.range_bin_spacing_m,
            "frame_velocity_resolution_m_s": p.frame_velocity_resolution_m_s,
            "doppler_bin_velocity_m_s": p.doppler_bin_velocity(StftConfig().window_len),
            "rx_gain_db": p.rx_gain_db,
            "tx_gain_db": p.tx_gain_db,
            "tx_power_dbm": p.tx_power_dbm,
        }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radarhand",
        description="Synthesize and evaluate radar time-Doppler spectrograms of hand gestures.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sim = _common(subs.add_parser("simulate", help="skeleton(s) -> spectrogram file(s)"))
    sim.add_argument("--skeleton", help="single skeleton JSON file")
    sim.add_argument("--out", help="output spectrogram path (single mode)")
    sim.add_argument("--manifest", help="dataset manifest JSON (batch mode)")
    sim.add_argument("--out-dir", help="output directory (batch mode)")
    sim.add_argument("--png", action="store_true", help="also write PNG heatmaps")
    sim.set_defaults(func=_cmd_simulate)

    tr = _common(subs.add_parser("train", help="fit the weighting network on a manifest"))
    tr.add_argument("--manifest", required=True)
    tr.add_argument("--out", required=True, help="output weights file")
    tr.add_argument("--hidden", type=int, default=32)
    tr.add_argument("--log", help="training-curve JSONL path")
    tr.add_argument(
        "--stage",
        action="append",
        type=lambda s: tuple(float(x) if i == 0 else int(x) for i, x in enumerate(s.split(":"))),
        help="override schedule stage as lr:batch:epochs (repeatable)",
    )
    tr.set_defaults(func=_cmd_train)

    ev = _common(subs.add_parser("evaluate", help="SSIM/MSE between spectrograms"))
    ev.add_argument("files", nargs="*", help="two spectrogram files")
    ev.add_argument("--manifest", help="manifest with reference spectrograms")
    ev.set_defaults(func=_cmd_evaluate)

    al = _common(subs.add_parser("align", help="convert a 22-joint skeleton to the internal layout"))
    al.add_argument("infile")
    al.add_argument("--out", required=True)
    al.add_argument("--translation", help="x,y,z offset in meters (default: auto)")
    al.set_defaults(func=_cmd_align)

    ex = _common(subs.add_parser("export", help="synthesize a manifest into a file tree"))
    ex.add_argument("--manifest", required=True)
    ex.add_argument("--out-dir", required=True)
    ex.add_argument("--png", action="store_true")
    ex.set_defaults(func=_cmd_export)

    pl = _common(subs.add_parser("plot", help="render a spectrogram file to PNG"))
    pl.add_argument("infile")
    pl.add_argument("--out")
    pl.add_argument("--colormap", choices=("gray", "hot"), default="gray")
    pl.add_argument("--scale", type=int, default=8)
    pl.set_defaults(func=_cmd_plot)

    ins = _common(subs.add_parser("inspect-params", help="print resolved radar or network parameters"))
    ins.set_defaults(func=_cmd_inspect_params)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("RADARHAND_LOG_LEVEL", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, np.linalg.LinAlgError, pipeline.PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
