"""Sensor-calibration fingerprinting of mobile devices on simulated populations."""

from sensorprint.accel import (G, GdConfig, RestWindow, SixParamFingerprint, ZAxisFingerprint,
                               classify_orientation, detect_rest_windows, estimate_six_params,
                               estimate_z_axis, six_param_residual)
from sensorprint.audio import (AudioFingerprint, FrequencyPlan, quadrature_response,
                               stealth_fingerprint, sweep_fingerprint, synthesize_tone)
from sensorprint.classify import (DistanceVariant, FingerprintDb, MleModel, ScaledDistanceConfig,
                                  extract_features, kfold_accuracy, knn_classify, l2_classify,
                                  mle_classify, mle_fit, scaled_accel_distance)
from sensorprint.config import ConfigError, ExperimentConfig
from sensorprint.dataset import Dataset, DatasetError, load_dataset, store_dataset
from sensorprint.device import (AccelCalibration, AudioResponseProfile, DeviceProfile,
                                LocationEffect, NoiseSpec, Orientation, ParameterRanges, Recording,
                                sample_population, simulate_audio_measurement,
                                simulate_rest_stream, simulate_submission_set)
from sensorprint.entropy import (GridEntropyReport, GridSpec, Submission, grid_entropy,
                                 intra_device_distances, origin_sensitivity,
                                 percentile_nearest_rank, recognition_rate, ua_fused_recognition)
from sensorprint.experiments import run_experiment, simulate_dataset

__version__ = "0.1.0"
