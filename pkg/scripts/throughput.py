"""Measure engine throughput on a 50,000-neuron / 2.5 M-synapse network.

A "row" is one lane row of p synapse slots; at p = 1 rows and synapses
coincide.  Wall time per step includes the soma substeps, so the rates
are end-to-end.  Each figure is the median over windows of 5 steps.
"""

import argparse
import os
import statistics
import time

from neuromachine.engine import Engine
from neuromachine.layout import CompileParams, build_images
from neuromachine.net_model import random_network


def measure(desc, p, workers, steps, n_hn):
    c = build_images(desc, CompileParams(n_hn=n_hn, p=p))
    rows = sum(h.rows for h in c.hns)
    with Engine(c, workers=workers) as eng:
        eng.run(3)
        windows, spikes = [], 0
        for _ in range(max(1, steps // 5)):
            t0 = time.perf_counter()
            spikes += len(eng.run(5).raster)
            windows.append((time.perf_counter() - t0) / 5)
    return rows, statistics.median(windows), spikes / (5 * len(windows))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--neurons", type=int, default=50_000)
    ap.add_argument("--in-degree", type=int, default=50)
    ap.add_argument("--steps", type=int, default=20)
    ap.add_argument("--p", type=int, nargs="+", default=[1, 2, 4])
    ap.add_argument("--workers", type=int, nargs="+", default=[1])
    ap.add_argument("--n-hn", type=int, default=1)
    args = ap.parse_args()

    desc = random_network(args.neurons, args.in_degree, seed=7, in_degree="fixed")
    print(f"{desc.n_neurons} neurons, {desc.n_synapses} synapses, {os.cpu_count()} CPU(s)")
    print("p  workers  ms/step  rows/s/worker  synapses/s  spikes/step")
    for p in args.p:
        for w in args.workers:
            rows, dt, spikes = measure(desc, p, w, args.steps, max(args.n_hn, w))
            print(f"{p:<2} {w:<8} {dt * 1e3:8.1f}  {rows / dt / w:13.3g}  {desc.n_synapses / dt:10.3g}  "
                  f"{spikes:10.0f}")


if __name__ == "__main__":
    main()
