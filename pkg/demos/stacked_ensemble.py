"""Two-level stacking ensemble trained on the clean and attacked sets.

Run: python3 demos/stacked_ensemble.py
"""

from netanomaly import ensemble as S
from netanomaly.adversarial import PerturbationConfig, build_training_sets
from netanomaly.dataset import standardize, synth_generate, train_test_split
from netanomaly.evaluation import EvalEntry, auc, evaluate_matrix, f1_per_class


def main():
    ds = synth_generate(17600, 2400, m=8, separation=3.0, seed=0)
    train, test = train_test_split(ds, 0.25, seed=0)
    train, (test,), _ = standardize(train, [test])
    triple = build_training_sets(train, PerturbationConfig(epsilon=0.1, features=[0, 1], seed=0))

    stack = S.train_level1(triple)
    members = {m.model.kind + "@" + m.set_id: EvalEntry(m.model, m.stats) for m in stack.members}
    print("level 1 on the untouched test split")
    for rep in evaluate_matrix(members, test):
        print(f"  {rep.name:28s} F1 [normal, malicious] = [{rep.f1_pair[0]:.4f}, {rep.f1_pair[1]:.4f}]")

    print("level 2")
    for kind in ("gaussian_nb", "decision_tree"):
        ens = S.fit_stacked_ensemble(triple, level2_kind=kind)
        labels, probs = ens.predict_pipeline(test.features)
        f1 = f1_per_class(test.labels, labels)
        print(f"  {kind:14s} malicious F1 {f1[1].f1:.4f}  AUC {auc(test.labels, probs):.4f}  "
              f"level-2 fit {ens.level2_train_seconds * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
