"""
Acceptance runs: the complete-basis desk crystal and the free-electron oracle.

The desk crystal must pass every check with delta_J at round-off. The free
electron has no interband coupling, so its velocity-gauge current must equal
e0 (k0 - e0 A(t)) / V at every gauge time.

Usage:
    python scripts/run_acceptance.py            # desk + free electron
    python scripts/run_acceptance.py --default  # also the full default run

Exit status 0 when every run passes, 1 otherwise.
"""

import argparse
import logging
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from bloch_hhg.config import build_config, parse_config  # noqa: E402
from bloch_hhg.physics.observables import crystal_length  # noqa: E402
from bloch_hhg.pipeline import HHGPipeline, run_pipeline  # noqa: E402
from bloch_hhg.units import CONSTANTS  # noqa: E402

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIG_DIR = os.path.join(ROOT, "configs")

FREE_ELECTRON_TOLERANCE = 1e-10


def run_desk(out_dir: str) -> bool:
    """Complete basis: all checks pass, delta_J <= 1e-8, delta_j >= 1e3 delta_J."""
    config = parse_config(os.path.join(CONFIG_DIR, "v2_desk.toml"))
    config = config.model_copy(
        update={"run": config.run.model_copy(update={"output_dir": out_dir})}
    )
    summary = run_pipeline(config)
    delta_J = summary.metadata.get("delta_J", float("nan"))
    delta_j = summary.metadata.get("delta_j", float("nan"))
    ok = summary.passed and delta_J <= 1e-8 and delta_j >= 1e3 * delta_J
    print(f"[desk] delta_J={delta_J:.3e} delta_j={delta_j:.3e} passed={summary.passed}")
    for check in summary.failed():
        print(f"[desk]   {check.name}: {check.reason}")
    return ok


def run_free_electron(out_dir: str) -> bool:
    """Zero potential: J_v(t) follows the rigid shift of k = 0 exactly."""
    config = build_config(
        {
            "potential": {"kind": "FREE", "calibrate": False},
            "grid": {"n_points": 16, "n_k": 17, "n_bands": 4},
            "pulse": {"duration_fs": 30.0},
            "run": {"output_dir": out_dir},
        }
    )
    pipeline = HHGPipeline(config)
    pipeline.run(write=set())
    record = pipeline.record
    e0 = CONSTANTS.e0
    expected = e0 * (0.0 - e0 * record.A) / crystal_length(pipeline.matels)
    error = float(np.max(np.abs(record.J_v - expected)))
    scale = max(float(np.max(np.abs(expected))), 1e-30)
    ok = error <= FREE_ELECTRON_TOLERANCE * scale
    print(f"[free] max |J_v - J_exact| / max |J_exact| = {error / scale:.3e}")
    return ok


def run_default(out_dir: str) -> bool:
    """Literal defaults: flat V1 crystal, depth as given, no gap calibration."""
    config = build_config({"run": {"output_dir": out_dir}})
    summary = run_pipeline(config)
    print(f"[default] passed={summary.passed}")
    for check in summary.failed():
        print(f"[default]   {check.name}: {check.reason}")
    return summary.passed


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument(
        "--default", action="store_true", help="Also run the default configuration"
    )
    parser.add_argument("--out-dir", default=os.path.join(ROOT, "out", "acceptance"))
    args = parser.parse_args()

    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    results = {
        "desk": run_desk(os.path.join(args.out_dir, "desk")),
        "free": run_free_electron(os.path.join(args.out_dir, "free")),
    }
    if args.default:
        results["default"] = run_default(os.path.join(args.out_dir, "default"))

    print("\n=== Acceptance ===")
    for name, ok in results.items():
        print(f"  {name:8s} {'pass' if ok else 'FAIL'}")
    sys.exit(0 if all(results.values()) else 1)


if __name__ == "__main__":
    main()
