"""Evolve a smooth state with the Hartree-side solver and store it as a snapshot.

    python demos/hartree_snapshot.py state.hvl
    hvlasov info state.hvl
"""

import sys

from hvlasov import PhaseGrid, PotentialSpec, sobolev_norm, velocity_fourier
from hvlasov.cli.experiments import smooth_datum
from hvlasov.meanfield import SolverParams, energy_hartree, solve_hamilton_hartree
from hvlasov.phasefield import save_snapshot

path = sys.argv[1] if len(sys.argv) > 1 else "state.hvl"
grid = PhaseGrid.square(64)
V = PotentialSpec.cosine(1.0, 1.0)

a0 = velocity_fourier(smooth_datum(grid))
run = solve_hamilton_hartree(a0, V, 1.0, SolverParams(dt=5e-3, snapshot_stride=50))
for t, f in zip(run.times, run.fields):
    print(f"t={t:.2f}  norm={f.norm():.12f}  energy={energy_hartree(f, V):+.10f}  "
          f"H1={sobolev_norm(f, 1):.5f}")
save_snapshot(path, run.final)
print("wrote", path)
