# %% [markdown]
# # Predicted strong scaling
#
# The simulator charges each rank its balanced work plus the replicated
# top of the tree, then adds latency and bandwidth terms for every message
# it sends or receives. With 64 subtrees, only half of them non-empty and
# a few very heavy, granularity limits the speedup well before the default
# network does.

# %%
from fmm2d import MachineModel, TreeLoadModel, build_tree, clustered_particles, sweep

pos, q = clustered_particles(10_000, seed=0)
model = TreeLoadModel(build_tree(pos, q), p=12, k=3)

print(" P  speedup  efficiency  imbalance  comm bytes")
for rec in sweep(model, [1, 2, 4, 8, 16]):
    t = rec.timeline
    print(f"{rec.ranks:2d}  {t.speedup:7.3f}  {t.efficiency:10.3f}  {t.imbalance:9.3f}  {t.comm_bytes_total:10d}")

# %% [markdown]
# A slow network (1 MB/s, 1 ms latency) makes the communication term visible.

# %%
slow = MachineModel(flop_rate=1e9, latency=1e-3, bandwidth=1e6)
for rec in sweep(model, [1, 2, 4, 8], machine=slow):
    t = rec.timeline
    print(f"P={rec.ranks}: makespan {t.makespan * 1e3:.2f} ms, "
          f"comm share on busiest rank {t.comm_time.max() / t.makespan:.0%}")
