"""Why the winner's cross-validated score flatters it, and what BBC does about it.

Each simulated "configuration" is a column of correct/incorrect outcomes with a
known true accuracy. Picking the best column on 20 samples and reporting its
score is optimistic; the bootstrap correction and nested CV are not.
"""

import numpy as np

from bbccv.resampling import unstratified_fold_plan
from bbccv.selection import css
from bbccv.protocols import bbc
from bbccv.simulation import SimSetting, generate_instance, run_bias_study

# one replicate, looked at by hand
setting = SimSetting(N=20, C=100)
inst = generate_instance(setting, replicate=0)
print("correctness matrix:", inst.correctness.shape)
print("true accuracies: mean %.3f, best %.3f" % (inst.true_perf.mean(), inst.true_perf.max()))

plan = unstratified_fold_plan(setting.N, 10, seed=0)
store = inst.store(plan)
winner = css(store).best_index
print("CV winner %d: observed accuracy %.2f, true accuracy %.3f"
      % (winner, inst.correctness[:, winner].mean(), inst.true_perf[winner]))

res = bbc(store, B=1000, seed=0)
lo, hi = 1 - res.ci[1], 1 - res.ci[0]
print("BBC accuracy %.3f, 95%% CI [%.3f, %.3f]" % (1 - res.estimate, lo, hi))

# the same thing averaged over replicates
study = run_bias_study([SimSetting(N=20, C=100, reps=100)], B=500)
print()
print("%-5s %10s %8s" % ("", "mean bias", "se"))
for row in study.table():
    print("%-5s %+10.3f %8.3f" % (row.protocol, row.mean_bias, row.se_bias))

# with more data the optimism fades
for N in (20, 100, 500):
    row = run_bias_study([SimSetting(N=N, C=100, reps=100)], protocols=("cvt",)).row(0, "cvt")
    print("N=%4d  CVT bias %+.3f" % (N, row.mean_bias))
