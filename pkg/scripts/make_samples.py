"""Regenerate the bundled 1000-neuron sample and its golden raster.

The golden raster comes from the reference simulator, never the engine.
Run once; the outputs are committed and regression-locked by the tests.
"""

import argparse
import time
from pathlib import Path

from neuromachine.layout import CompileParams
from neuromachine.net_model import random_network, serialize_network
from neuromachine.oracle import oracle_run
from neuromachine.recording import atomic_write_text, format_raster

SAMPLES = Path(__file__).resolve().parents[1] / "src" / "neuromachine" / "samples"

NET1000 = dict(n_neurons=1000, mean_in_degree=10, seed=1000, in_degree="poisson")
GOLDEN_P = 2
GOLDEN_STEPS = 1000


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=SAMPLES)
    args = ap.parse_args()

    desc = random_network(**NET1000)
    atomic_write_text(args.out / "net1000.net", serialize_network(desc))
    t0 = time.perf_counter()
    res = oracle_run(desc, CompileParams(p=GOLDEN_P), GOLDEN_STEPS)
    atomic_write_text(args.out / "net1000.golden.csv", format_raster(res.raster))
    print(f"{desc.n_synapses} synapses, {len(res.raster)} spikes in {GOLDEN_STEPS} steps "
          f"(oracle {time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
