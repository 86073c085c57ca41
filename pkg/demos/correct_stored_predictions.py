"""Correcting an existing tuning run from its stored out-of-fold predictions.

Any tool can write the prediction matrix; no model is retrained here.
"""

import tempfile
from pathlib import Path

import numpy as np

from bbccv.io import parse_prediction_matrix, write_prediction_matrix
from bbccv.learners import Dataset, expand_grid
from bbccv.protocols import bbc, run_cvt, tt_correct
from bbccv.resampling import stratified_fold_plan

rng = np.random.default_rng(1)
n = 150
y = rng.integers(0, 2, size=n)
X = rng.normal(size=(n, 5))
X[:, 0] += 0.8 * y  # only the first feature carries signal
data = Dataset(X, y)

grid = expand_grid([
    {"learner": "knn", "params": {"k": [1, 3, 9, 27], "distance": ["euclidean", "manhattan"]}},
    {"learner": "stump"},
    {"learner": "majority"},
])
plan = stratified_fold_plan(y, 10, seed=1)
report, store = run_cvt(grid, data, plan)
print("%d configurations, %d models trained" % (len(grid), report.models_trained))
print("CVT picks %s with accuracy %.3f" % (report.selected_config_id, 1 - report.estimate))

# round-trip through the file format other tools would produce
path = Path(tempfile.mkdtemp()) / "predictions.csv"
write_prediction_matrix(store, path)
print(path.read_text().splitlines()[0])
store = parse_prediction_matrix(path)

tt = tt_correct(store)
print("TT:  accuracy %.3f (bias estimate %.3f)" % (1 - tt.l_tt, tt.bias))

res = bbc(store, B=2000, seed=1)
print("BBC: accuracy %.3f, 95%% CI [%.3f, %.3f]" % (1 - res.estimate, 1 - res.ci[1], 1 - res.ci[0]))

# how often each configuration wins inside the bootstrap
picks, counts = np.unique(res.selected, return_counts=True)
for j, c in sorted(zip(picks, counts), key=lambda t: -t[1])[:4]:
    print("  %-28s won %4d of 2000 draws" % (store.config_ids[j], c))
