"""Acoustic feature extraction and hierarchical SVM classification of
dysarthria, apraxia of speech, and neurotypical speech."""

import json as _json

from ._core import (  # noqa: F401
    MsdError,
    __version__,
    anova_f,
    balanced_accuracy,
    descriptive_stats,
    extract_features,
    extract_features_wav,
    feature_names,
    fit_chi_shape,
    group_accuracies,
    predict_label,
    run_experiment_json,
    select_top,
    stft_magnitudes,
    stratified_folds,
    synth_cohort,
    train_hierarchical,
)


def run_experiment(*args, **kwargs):
    """Run the repeated nested-CV protocol; returns the report as a dict."""
    return _json.loads(run_experiment_json(*args, **kwargs))
