"""
Reading the acceptance cells from the cache
===========================================

``python tests/acceptance_plan.py`` fills ``acceptance_cache/`` one
instance at a time. This script summarizes whatever is there.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
import acceptance_plan as plan  # noqa: E402

from ccldgm.harness import SUMMARY_HEADER, aggregate, cached_record  # noqa: E402


def show(config):
    recs = [r for k in range(config.instance_count) if (r := cached_record(config, k)) is not None]
    s = config.spec
    label = f"({s.l},{s.r},{s.n},{s.L},{s.w}) beta={config.params.beta:g}"
    if len(recs) < config.instance_count:
        D = [r.total_distortion for r in recs]
        print(f"{label}: {len(recs)}/{config.instance_count} cached", f"partial mean {np.mean(D):.4f}" if D else "")
        return None
    rep = aggregate(config, recs)
    print(rep.summary_row())
    return rep


print(SUMMARY_HEADER)
show(plan.table_ii())
show(plan.table_iv())
for c in plan.uncoupled_ordering():
    show(c)
coupled, uncoupled = plan.beta_sweep()
for c, u in zip(coupled, uncoupled):
    show(c)
    show(u)
rep = show(plan.profile_shape())
if rep is not None:
    print("mean profile (seed at L/2):", np.round(rep.mean_profile, 4).tolist())
