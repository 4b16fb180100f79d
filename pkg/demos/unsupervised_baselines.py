"""Isolation forest and local outlier factor on a cluster with scattered outliers.

Run: python3 demos/unsupervised_baselines.py
"""

from netanomaly import baselines as B
from netanomaly.evaluation import auc


def main():
    X, y = B.synth_outliers(1000, outlier_fraction=0.05, seed=0)
    scores = {
        "isolation forest": B.isolation_forest_score(X, n_trees=100, subsample=256, seed=0),
        "local outlier factor": B.lof_score(X, k=20),
    }
    for name, s in scores.items():
        flags = B.flag_anomalies(s, contamination=0.05)
        recall = flags[y == 1].mean()
        print(f"{name:20s} AUC {auc(y, s):.4f}  recall at 5% contamination {recall:.3f}")


if __name__ == "__main__":
    main()
