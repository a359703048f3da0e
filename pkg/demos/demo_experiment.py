import sys

from cli.commands import cmd_perturb, cmd_sweep, cmd_train
from cli.experiment_config import load_experiment

'''
Demo 003:
    * Runs the default Gaussian experiment end to end from its YAML config: the method
      comparison, the Delta-sweep with its robustness window and the perturbation families.

    * Every artifact lands in runs/gaussian_default (or $NTMP_OUTPUT_ROOT/gaussian_default).
'''
def demo_003(config_path="configs/gaussian_default.yaml"):
    exp = load_experiment(config_path)
    report = cmd_train(exp)
    print(f"[INFO] {len(report.metrics)} metric rows")
    _, window = cmd_sweep(exp)
    print(f"[INFO] Robust window up to Delta = {window.delta_max:.2f}")
    cmd_perturb(exp)


if __name__ == "__main__":
    demo_003(*sys.argv[1:])
