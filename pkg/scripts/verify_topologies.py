#!/usr/bin/env python3
"""Machine-verify the robustness claims of every shipped corpus topology.

Any authored topology failing its claim would be rejected from the corpus;
this script is the audit trail for the claims baked into the YAML comments.
"""

import time

from rclab.graphs import compact_schedule, union_graph
from rclab.robustness import (
    RobustnessQuery,
    is_jointly_robust_following,
    is_robust_following_static,
    necessary_conditions,
    strongly_robust_wrt_leaders,
)
from rclab.scenario import corpus_path, load_topology


def check(label, got, want):
    status = "OK " if got == want else "FAIL"
    print(f"{status:5s}{label}: {got}")
    return got == want


def main():
    ok = True
    t0 = time.time()

    sched9, l9 = load_topology(corpus_path("net9"))
    v = is_jointly_robust_following(RobustnessQuery(sched9, l9, r=2, l=1, f=1))
    ok &= check("net9 r=2 l=1 f=1", v.holds, False)
    ok &= check("  certificate F", set(v.certificate.F), {5})
    ok &= check("  certificate S", set(v.certificate.S), {1, 2, 3, 6})
    v = is_jointly_robust_following(RobustnessQuery(sched9, l9, r=2, l=2, f=1))
    ok &= check("net9 r=2 l=2 f=1", v.holds, True)

    sched9a, _ = load_topology(corpus_path("net9_aug"))
    v = is_jointly_robust_following(RobustnessQuery(sched9a, l9, r=2, l=1, f=1))
    ok &= check("net9_aug r=2 l=1 f=1", v.holds, True)
    u = union_graph(sched9a)
    ok &= check("union(net9_aug) strongly 3-robust wrt leaders",
                strongly_robust_wrt_leaders(u, l9, 3), False)
    ok &= check("union(net9_aug) robust following r=2 l=1 f=1",
                is_robust_following_static(u, l9, 2, 1, 1).holds, True)

    sched15, l15 = load_topology(corpus_path("net15"))
    v = is_jointly_robust_following(RobustnessQuery(sched15, l15, r=3, l=1, f=2))
    ok &= check("net15 r=3 l=1 f=2", v.holds, False)
    ok &= check("  certificate F", set(v.certificate.F), {7, 8})
    v = is_jointly_robust_following(RobustnessQuery(sched15, l15, r=3, l=3, f=2))
    ok &= check("net15 r=3 l=3 f=2", v.holds, True)

    sched7, l7 = load_topology(corpus_path("net7_secure"))
    reduced, mapping = compact_schedule(sched7, set(range(1, 8)) - l7)
    virtual = frozenset(mapping[i] for i in (2, 3, 4))
    v = is_jointly_robust_following(
        RobustnessQuery(reduced, virtual, r=2, l=1, f=1)
    )
    ok &= check("net7_secure reduced r=2 l=1 f=1", v.holds, True)

    for name, sched, leaders, (r, l, f) in [
        ("net9", sched9, l9, (2, 2, 1)),
        ("net9_aug", sched9a, l9, (2, 1, 1)),
        ("net15", sched15, l15, (3, 3, 2)),
        ("net7_secure(reduced)", reduced, virtual, (2, 1, 1)),
    ]:
        conds = necessary_conditions(RobustnessQuery(sched, leaders, r, l, f))
        ok &= check(f"{name} necessary conditions", all(p for _, p in conds), True)

    print(f"total {time.time() - t0:.2f}s — {'all claims verified' if ok else 'CLAIM MISMATCH'}")
    raise SystemExit(0 if ok else 1)


if __name__ == "__main__":
    main()
