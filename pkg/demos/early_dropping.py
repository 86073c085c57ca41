"""Dropping hopeless configurations partway through CV.

After each fold the accumulated out-of-fold predictions are bootstrapped; a
configuration that loses to the current best in almost every draw is not
trained on the remaining folds.
"""

import numpy as np

from bbccv.learners import Dataset, expand_grid
from bbccv.protocols import count_models, run_bbc_cv, run_bced
from bbccv.resampling import stratified_fold_plan

rng = np.random.default_rng(3)
n = 400
y = rng.integers(0, 2, size=n)
X = rng.normal(size=(n, 4)) + np.outer(y, [1.0, 0.5, 0, 0])
data = Dataset(X, y)

grid = expand_grid([
    {"learner": "knn", "params": {"k": [1, 5, 15, 45]}},
    {"learner": "logistic", "params": {"learning_rate": [0.01, 0.1, 1.0]}},
    {"learner": "stump", "params": {"min_leaf": [1, 20]}},
    {"learner": "majority"},
])
plan = stratified_fold_plan(y, 10, seed=3)

full, _ = run_bbc_cv(grid, data, plan, B=1000, seed=3)
early, _ = run_bced(grid, data, plan, B=1000, alpha_drop=0.99, min_oos=50, seed=3)

# zero-one is a loss, so lower is better here
print("BBC-CV : loss %.3f  CI [%.3f, %.3f]  models %d"
      % (full.estimate, *full.ci, full.models_trained))
print("BCED-CV: loss %.3f  CI [%.3f, %.3f]  models %d"
      % (early.estimate, *early.ci, early.models_trained))

for fold, j, p in early.drop_trace:
    print("  after fold %d dropped %-24s p=%.3f" % (fold, grid[j].id, p))
assert early.models_trained == count_models("bced", 10, len(grid), early.drop_trace)
print("speed-up %.1fx" % (full.models_trained / early.models_trained))
