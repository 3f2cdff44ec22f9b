"""
Where the bytes go as the bound tightens
========================================

At loose bounds almost every vertex shares a bin with its neighbors, so the
subbins that restore order dominate the archive.  At tight bounds bins are
nearly unique and the bin stream takes over.  The ratio peaks in between.
"""

from lopc import synthetic
from lopc.cli import sweep_rows

field = synthetic.smooth_plus_noise((64, 64, 64))
rows = sweep_rows(field, "noa", [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6])

print(f"{'bound':>8} {'ratio':>8} {'bins %':>8} {'subbins %':>10} {'raises':>9} {'iters':>6}")
for r in rows:
    print(
        f"{r['eb']:>8g} {r['ratio']:>8.2f} {r['bin_pct']:>8.1f} {r['subbin_pct']:>10.1f} "
        f"{r['raises']:>9} {r['iterations']:>6}"
    )
