"""
One epoch of page placement, by hand
====================================

Four ranks of two pages.  MQ ranks the pages by hotness, the groups are
matched to ranks so that as few pages as possible move, and the moves are cut
into segments that can run concurrently.
"""

from ramzzz.mq import MqStructure
from ramzzz.placement import (
    MigrationCost, Placement, build_migration_graph, count_migrations, eulerian_schedule,
    group_pages, match_groups_to_ranks, schedule_delay,
)

mq = MqStructure(M=4, lifetime=10**6)
for page, hits in [(0, 1), (1, 2), (2, 1), (3, 3), (4, 2), (5, 1), (6, 9), (7, 8)]:
    for _ in range(hits):
        mq.on_access(page, 0)

# %%
# Hottest pages first; within a queue the most recently touched page leads
print("hotness order:", mq.hotness_order())
groups = group_pages(mq, R=4, C=2)
print("groups:", groups)

# %%
# Pages start interleaved: page p on rank p mod 4
prev = Placement.from_sets([[0, 4], [1, 5], [2, 6], [3, 7]], capacity=2)
mapping = match_groups_to_ranks(prev, groups)
print("group -> rank:", mapping, " pages to move:", count_migrations(prev, groups, mapping))

graph = build_migration_graph(prev, groups, mapping)
sched = eulerian_schedule(graph)
print(sched.to_csv(), end="")
cost = MigrationCost()
serial = MigrationCost(concurrent=False)
print("delay in cycles, concurrent vs one page at a time:",
      schedule_delay(sched, cost), schedule_delay(sched, serial))
