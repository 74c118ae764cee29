"""Comparing methods on a benchmark.

Cluster counts are rolled up to the aggregates they belong to, then
summarised per true size (mean, CV, SE) and by a predicted-vs-actual line.
"""

from plateletcount.counting import count_image, image_clusters
from plateletcount.metrics import group_stats, linear_fit, match_truth
from plateletcount.synth import benchmark_suite

for difficulty, sizes in (("clean", [1, 2, 3, 4]), ("overlapping", [1, 2, 3, 4, 5, 6])):
    suite = benchmark_suite(seed=1, sizes=sizes, per_size=50, difficulty=difficulty)
    print(f"\n{difficulty} benchmark, {len(suite)} aggregates")
    for method in ("pam", "pcm", "cca"):
        rows = []
        for s in suite:
            records = count_image(s.mask, s.plane, method)
            rows += match_truth(records, image_clusters(s.mask, method), s.truth, method)[1]
        groups = group_stats(rows)
        fit = linear_fit([(r.actual, r.count) for r in rows])
        means = " ".join(f"{g.mean:.2f}" for g in groups[:-1])
        pooled = groups[-1]
        cv = "n/a" if pooled.cv is None else f"{pooled.cv:.3f}"
        print(f"  {method}: mean by size [{means}]  pooled CV {cv}  "
              f"fit slope {fit.slope:.2f} intercept {fit.intercept:.2f} r2 {fit.r2:.2f}")
