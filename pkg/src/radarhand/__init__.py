"""Synthesis of FMCW radar time-Doppler spectrograms from 3D hand-skeleton
sequences: a cylinder-mesh reflection model drives per-scatterer IF signal
generation, standard range/Doppler processing produces 64x32 spectrogram
images, and a small trainable network reweights scatterers to better match
reference spectrograms (SSIM loss, hand-written reverse-mode gradients)."""

from .dsp import (
    RangeProfileCube,
    Spectrogram,
    StftConfig,
    beat_to_distance,
    clutter_suppress,
    load_spectrogram,
    phase_to_velocity,
    range_fft,
    save_spectrogram,
    select_range_bin,
    spectrogram_from_cube,
    spectrogram_to_csv,
    spectrogram_to_png,
    standardize_slow_time,
    stft_spectrogram,
    strongest_range_bin,
)
from .hand_model import (
    DEFAULT_SEGMENT_RADII,
    DEFAULT_TESSELLATION,
    SEGMENT_JOINT_PAIRS,
    CylinderSegment,
    HandMesh,
    JointFrameSequence,
    ScattererTrack,
    SensorOffset,
    build_mesh,
    build_segments,
    leap_to_radar,
    load_skeleton,
    normalize_bone_lengths,
    resample_tracks,
    save_skeleton,
    tessellate,
)
from .metrics import SsimConfig, mse, ssim, ssim_grad
from .pipeline import (
    AlignmentSpec,
    DatasetManifest,
    ManifestEntry,
    PipelineError,
    align_skeleton,
    evaluate_manifest,
    evaluate_pairs,
    export_dataset,
    load_manifest,
    prepare_item,
    synthesize_gesture,
    synthesize_sequence,
    write_manifest,
)
from .radar_sim import (
    ASPECT_CLAMP_RAD,
    IFSignalCube,
    RadarParams,
    attenuated_amplitude,
    compose,
    cylinder_rcs,
    load_radar_config,
    save_radar_config,
    synthesize_if,
    visibility_count,
)
from .synthetic import GESTURES, gesture_labels, make_gesture, point_scatterer_track
from .weightnet import (
    FEATURES,
    FeatureStats,
    FeatureTensor,
    TrainItem,
    TrainResult,
    TrainSchedule,
    TrainStage,
    WeightNetParams,
    extract_features,
    feature_ablation,
    forward,
    gradient,
    load_weightnet,
    loss,
    save_weightnet,
    standardize_features,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ASPECT_CLAMP_RAD",
    "AlignmentSpec",
    "CylinderSegment",
    "DEFAULT_SEGMENT_RADII",
    "DEFAULT_TESSELLATION",
    "DatasetManifest",
    "FEATURES",
    "FeatureStats",
    "FeatureTensor",
    "GESTURES",
    "HandMesh",
    "IFSignalCube",
    "JointFrameSequence",
    "ManifestEntry",
    "PipelineError",
    "RadarParams",
    "RangeProfileCube",
    "SEGMENT_JOINT_PAIRS",
    "ScattererTrack",
    "SensorOffset",
    "Spectrogram",
    "SsimConfig",
    "StftConfig",
    "TrainItem",
    "TrainResult",
    "TrainSchedule",
    "TrainStage",
    "WeightNetParams",
    "align_skeleton",
    "attenuated_amplitude",
    "beat_to_distance",
    "build_mesh",
    "build_segments",
    "clutter_suppress",
    "compose",
    "cylinder_rcs",
    "evaluate_manifest",
    "evaluate_pairs",
    "export_dataset",
    "extract_features",
    "feature_ablation",
    "forward",
    "gesture_labels",
    "gradient",
    "leap_to_radar",
    "load_manifest",
    "load_radar_config",
    "load_skeleton",
    "load_spectrogram",
    "load_weightnet",
    "loss",
    "make_gesture",
    "mse",
    "normalize_bone_lengths",
    "phase_to_velocity",
    "point_scatterer_track",
    "prepare_item",
    "range_fft",
    "resample_tracks",
    "save_radar_config",
    "save_skeleton",
    "save_spectrogram",
    "save_weightnet",
    "select_range_bin",
    "spectrogram_from_cube",
    "spectrogram_to_csv",
    "spectrogram_to_png",
    "ssim",
    "ssim_grad",
    "standardize_features",
    "standardize_slow_time",
    "stft_spectrogram",
    "strongest_range_bin",
    "synthesize_gesture",
    "synthesize_if",
    "synthesize_sequence",
    "tessellate",
    "train",
    "visibility_count",
    "write_manifest",
]
