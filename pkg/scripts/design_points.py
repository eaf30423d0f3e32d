"""Print the analytic cycle model for the two published designs and a sweep
over HN count for the high-capacity network."""

from neuromachine.cli import format_perf
from neuromachine.layout import CompileParams, clock_breakdown, perf_estimate

DESIGNS = {
    "high capacity": (12_000_000, 600_000_000, 8),
    "high speed": (1_000_000, 50_000_000, 32),
}


def main():
    for name, (n, s, n_hn) in DESIGNS.items():
        params = CompileParams(n_hn=n_hn, p=2, clock_hz=300e6, substeps=25)
        soma, syn = clock_breakdown(n, s, params)
        print(f"{name:14s} {n:>11,d} neurons {s:>12,d} synapses {n_hn:>3d} HN: "
              f"{format_perf(perf_estimate(n, s, params))}  (soma {soma:,} / synapse {syn:,} cycles)")
    print("\nhigh-capacity network vs HN count (p = 2):")
    for n_hn in (1, 2, 4, 8, 16, 32, 64):
        v = perf_estimate(12_000_000, 600_000_000, CompileParams(n_hn=n_hn, p=2))
        print(f"  {n_hn:>3d} HN  {format_perf(v)}")


if __name__ == "__main__":
    main()
