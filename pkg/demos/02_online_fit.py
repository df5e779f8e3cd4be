"""Online learning of the sine task with the accelerated update step (tau' = 10 tau)."""
import numpy as np

from dissreg import OperatorSpec, TrainingConfig, build_task, companion_system, reduced_coefficients, run_epochs

spec = OperatorSpec(1, (0.999, 1.0), theta=1.0, mu=0, lam=-3.0)
sys_ = companion_system(reduced_coefficients(spec))
traj = build_task("sine", tau=0.1)
print(f"{len(traj)} supervisions per epoch")

log = run_epochs(traj, sys_, spec, TrainingConfig(epochs=10, tau=0.1, tau_prime=1.0))
for e, m in enumerate(log.mse_per_epoch, start=1):
    print(f"epoch {e:2d}  mse {m:.6f}")

# last epoch: prediction at each supervision instant against its target
last = log.f_tilde[-len(traj):]
for i in range(0, len(traj), 8):
    print(f"t={traj.t[i]:5.2f}  y={traj.y[i]: .3f}  f~={last[i]: .3f}")
print("diverged:", log.diverged)
