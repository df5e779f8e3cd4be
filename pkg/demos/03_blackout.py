"""Switch the supervisions off and watch the state forget, at the pace of the slowest root."""
import numpy as np

from dissreg import OperatorSpec, TrainingConfig, build_task, run_epochs, system_from_roots

sys_ = system_from_roots([-0.2, -0.8], 1)
spec = OperatorSpec.leading_only(1, theta=1.0, lam=-1.0)
traj = build_task("sine", tau=0.1)
n = len(traj)

log = run_epochs(traj, sys_, spec, TrainingConfig(13, 0.1, tau_prime=1.0, supervised_epochs=3))
ft = np.abs(log.f_tilde)
print("mse per epoch:", np.round(log.mse_per_epoch, 4))
print("|f~| at cutoff:", ft[3 * n])
for e in range(3, 13):
    print(f"epoch {e + 1:2d}  max |f~| = {ft[e * n:(e + 1) * n].max():.3e}")
print("5 / |slowest root| =", 5 / 0.2, "time units")
