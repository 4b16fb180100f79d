"""Build the three training sets: clean, LDA-FGSM perturbed and mean-shifted.

Run: python3 demos/adversarial_sets.py
"""

import numpy as np

from netanomaly import adversarial as A
from netanomaly.classifiers import LDA
from netanomaly.dataset import standardize, synth_generate
from netanomaly.evaluation import f1_per_class


def main():
    train, _, _ = standardize(synth_generate(3000, 600, m=4, separation=2.5, seed=2))
    config = A.PerturbationConfig(epsilon=0.3, features=[0, 1], fraction=0.2, seed=0)
    triple = A.build_training_sets(train, config)

    moved = np.any(triple.t2.features != triple.t1.features, axis=1)
    print(f"LDA-FGSM touched {moved.sum()} of {train.n_samples} rows with eps = {config.epsilon}")
    print("largest coordinate change:", np.abs(triple.t2.features - triple.t1.features).max())

    # a model trained on clean data sees the perturbed rows move across its boundary
    lda = LDA().fit(triple.t1.features, triple.t1.labels)
    mal = triple.t1.labels == 1
    for name, ds in (("clean", triple.t1), ("LDA-FGSM", triple.t2)):
        rows = mal & moved
        recall = lda.predict(ds.features[rows]).mean()
        print(f"recall on attacked malicious rows, {name:8s}: {recall:.3f}")

    print("\nmean-shift attack on columns", config.features)
    for k in config.features:
        normal = triple.t1.features[~mal, k].mean()
        before = triple.t1.features[mal, k].mean()
        after = triple.t3.features[mal, k].mean()
        print(f"  column {k}: normal mean {normal:+.4f}, malicious {before:+.4f} -> {after:+.4f}")

    f1 = f1_per_class(triple.t1.labels, lda.predict(triple.t3.features))
    print(f"clean LDA on the mean-shifted set: malicious F1 {f1[1].f1:.3f}")


if __name__ == "__main__":
    main()
