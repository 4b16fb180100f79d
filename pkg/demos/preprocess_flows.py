"""Raw flow CSV to a standardized, feature-selected train/test pair.

Run: python3 demos/preprocess_flows.py
"""

import tempfile
from pathlib import Path

from netanomaly import dataset as D


def main():
    schema, records = D.synth_flows(4000, seed=1)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "flows.csv"
        D.write_flow_csv(path, records, schema)
        loaded = D.load_flow_csv(path, schema)

    kept, dropped = D.clean(loaded, [c.name for c in schema.of_kind("port")])
    print(f"read {len(loaded)} flows, dropped {dropped} invalid rows")

    ds = D.encode_nominal(kept, schema)
    print(f"{ds.n_features} encoded features: {', '.join(ds.feature_names)}")

    ds, report = D.select_features(ds, top_k=4, corr_threshold=0.85)
    print("top by chi-squared:     ", report["top_chi2"])
    print("top by mutual info:     ", report["top_mutual_info"])
    for drop in report["correlation_drops"]:
        print(f"correlation filter drops {drop['dropped']} (|r| = {abs(drop['r']):.3f} with {drop['kept']})")
    print("selected:               ", report["selected"])

    train, test = D.train_test_split(ds, 0.25, seed=0)
    train, (test,), stats = D.standardize(train, [test])
    print(f"train {train.n_samples} rows ({train.labels.mean():.1%} malicious), test {test.n_samples} rows")
    print("train column means after scaling:", train.features.mean(axis=0).round(12))


if __name__ == "__main__":
    main()
