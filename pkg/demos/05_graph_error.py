"""Online learning driven by the graph-augmented error signal."""
import numpy as np

from dissreg import ErnGraph, OperatorSpec, build_task, companion_system, reduced_coefficients, run_graph
from dissreg.graph import estimate_epsilon, estimate_sigma, spatial_neighbors

spec = OperatorSpec(1, (0.999, 1.0), theta=1.0, mu=0, lam=-3.0)
sys_ = companion_system(reduced_coefficients(spec))
traj = build_task("sine", tau=0.1)

warm = traj.x[:20]
graph = ErnGraph(estimate_epsilon(warm), estimate_sigma(warm), rho=3, eta=0.3)
print(f"epsilon {graph.epsilon:.4f}  sigma {graph.sigma:.4f}")

log = run_graph(traj, sys_, spec, graph, epochs=5, step=1.0)
print("mse per epoch:", np.round(log.mse_per_epoch, 4))
print("nodes after each epoch:", log.node_count[len(traj) - 1::len(traj)])

k = 0
print("node 0 at", graph.nodes[k].position, "stores", round(graph.nodes[k].value, 4))
print("its predecessors:", dict(graph.temporal_counts[k]))
print("its spatial neighbours:", [(j, round(w, 3)) for j, w in spatial_neighbors(graph, k)])
