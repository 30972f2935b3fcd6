"""Self-convergence in space and time from a config file.

Run from the repository root::

    python demos/convergence.py demos/configs/convergence.ini
"""
import sys

from nonlocal_logistic import convergence_study, load_config


def main(path):
    cfg = load_config(path)
    reports = convergence_study(cfg, cfg.space_levels, cfg.time_levels, cfg.t_compare)
    for kind, rep in reports.items():
        print(f"{kind}: levels {rep.levels}")
        for level, err in zip(rep.levels, rep.errors):
            print(f"    {level!s:>8}  error vs finest {err:.3e}")
        print("    successive differences", ", ".join(f"{d:.3e}" for d in rep.differences))
        print("    observed orders", ", ".join(f"{o:.3f}" for o in rep.observed_orders))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "demos/configs/convergence.ini")
