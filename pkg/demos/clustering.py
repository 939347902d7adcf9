"""Unsupervised metric learning for k-means, scored by Rand agreement.

Clusters are learned on the training portion; validation tunes the
covariance regularizer and the interpolation weight by transferred Rand
score; the test portion is scored against its true labels.
"""
import numpy as np

from glmetric import (MetricMatrix, SplitSpec, cluster_transfer_tune, kmeans,
                      load_csv, rand_score)
from glmetric.dataset import scale_features, split
from glmetric.unsupervised import assign_to_centers

ds = load_csv("data/iris.csv", "label", has_header=True)
euclid, learned = [], []
for rep in range(30):
    train, validation, test = split(ds, SplitSpec(seed=1000 + rep))
    train, params = scale_features(train)
    validation, test = params.transform(validation), params.transform(test)

    base = kmeans(train.features, 3, MetricMatrix.identity(train.dim), seed=rep)
    euclid.append(rand_score(assign_to_centers(test.features, base.centers,
                                               base.metric), test.labels))

    tuned = cluster_transfer_tune(train, validation, 3,
                                  (1e-3, 1e-2, 1e-1), (0.0, 0.25, 0.5, 0.75),
                                  seed=rep)
    learned.append(rand_score(assign_to_centers(test.features,
                                                tuned["clustering"].centers,
                                                tuned["metric"]), test.labels))

print(f"{'method':<28}{'Rand score':>12}")
for name, scores in (("k-means + Euclidean", euclid),
                     ("k-means + learned metric", learned)):
    scores = np.asarray(scores)
    stderr = scores.std(ddof=1) / np.sqrt(len(scores))
    print(f"{name:<28}{scores.mean():>8.3f} +- {stderr:.3f}")
