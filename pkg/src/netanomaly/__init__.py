"""Network anomaly detection under adversarial pressure.

Modules:
    dataset      flow CSV ingest, cleaning, encoding, feature selection, scaling
    adversarial  LDA-FGSM and feature mean-shift training sets
    classifiers  seven from-scratch binary classifiers
    ensemble     two-level soft-voting stacking and grid search
    midas        count-min sketches and MIDAS edge-stream scores
    baselines    isolation forest and local outlier factor
    evaluation   F1, AUC, ROC points, timing, report tables
    cli          ``netanomaly`` command
"""

__version__ = "0.1.0"
