"""Train the dual-view model on planted clusters and evaluate ranking quality.

Two user clusters with disjoint item pools are easy to recommend for once
the model discovers them; leave-one-out HR@N / NDCG@N confirm it. Also
shows the per-epoch loss components and the degree-stratified breakdown.
"""

from socrec import (TrainConfig, evaluate_stratified, stratify_by_degree,
                    train_model)
from socrec.synthetic import planted_clusters

ds, info = planted_clusters(num_users=60, num_items=160, items_per_user=8,
                            ties_per_user=6, cross_ratio=0.3,
                            hot_fraction=0.15, hot_weight=0.85, seed=1)
print(f"planted dataset: {ds.num_users} users, {ds.num_items} items, "
      f"{len(ds.train_edges)} train edges, "
      f"{len(ds.social_edges) // 2} social ties\n")

cfg = TrainConfig(dim=32, layers=2, batch=512, epochs=40, patience=999,
                  lr=5e-3, lambda1=0.1, lambda2=1e-3, lambda3=1e-5,
                  negatives=99, cutoffs=(5, 10, 20), seed=1)

print("epoch  rec      social   align    val HR@10")
result = train_model(
    ds, cfg,
    progress=lambda row: print(f"{row['epoch']:>5}  {row['rec']:<8.2f} "
                               f"{row['social']:<8.2f} {row['align']:<8.2f} "
                               f"{row['val']:.3f}")
    if row["epoch"] % 5 == 0 else None)

print(f"\nbest validation epoch: {result.best_epoch} "
      f"(HR@10={result.best_val_hr:.3f})")
print(f"mean epoch wall time: "
      f"{sum(result.timing) / max(len(result.timing), 1):.3f}s\n")

strata = stratify_by_degree(ds)
report = evaluate_stratified(result.model, ds, strata, split="test",
                             num_negatives=cfg.negatives, cutoffs=cfg.cutoffs,
                             seed=0)
print("test-split report:")
print(report.to_table())
