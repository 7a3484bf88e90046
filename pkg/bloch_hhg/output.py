# bloch-hhg - Result files: CSV tables, run metadata and SVG plots

import csv
import json
import logging
from pathlib import Path
from typing import Any, Iterable

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from bloch_hhg.physics.bloch import BandStructure  # noqa: E402
from bloch_hhg.physics.matels import MatrixElementSet  # noqa: E402
from bloch_hhg.physics.observables import CurrentRecord, Spectrum  # noqa: E402
from bloch_hhg.units import from_internal  # noqa: E402

logger = logging.getLogger(__name__)

# stable element ids in the SVG output
plt.rcParams["svg.hashsalt"] = "bloch-hhg"

CURRENT_COLUMNS = [
    "t_m",
    "s_m",
    "A",
    "F",
    "J_v",
    "j_v",
    "Pdot_v",
    "J_l",
    "j_l",
    "Pdot_l",
]
# diagnostics after the required columns
CURRENT_EXTRAS = ["t_fs"]
BAND_COLUMNS = ["k", "n", "E", "k_index", "E_Ha"]
GAUGE_REPORT_COLUMNS = [
    "t_m",
    "s_m",
    "max_norm_defect",
    "displacement",
    "pass",
    "norm_bound",
    "expected_displacement",
    "adiabatic_fraction",
]


def _cell(value: Any) -> Any:
    # repr of a Python float round-trips exactly
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_csv(path: Path, fieldnames: list[str], rows: Iterable[dict]) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(
            f, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n"
        )
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _cell(value) for key, value in row.items()})
    logger.info("Wrote %s", path)
    return path


def write_bands(path: Path, bands: BandStructure) -> Path:
    rows = (
        {
            "k": bands.grid.points[m],
            "n": n + 1,
            "E": from_internal(float(bands.energies[m, n]), "eV"),
            "k_index": m,
            "E_Ha": bands.energies[m, n],
        }
        for m in range(bands.grid.M)
        for n in range(bands.n_bands)
    )
    return write_csv(path, BAND_COLUMNS, rows)


def write_matels(path: Path, matels: MatrixElementSet) -> Path:
    """Per-k momentum-matrix summary."""
    hermiticity = matels.hermiticity_defects()
    rows = (
        {
            "k_index": m,
            "k": matels.grid.points[m],
            "p_max": float(np.max(np.abs(matels.momenta[m]))),
            "hermiticity_defect": hermiticity[m],
        }
        for m in range(matels.grid.M)
    )
    return write_csv(path, ["k_index", "k", "p_max", "hermiticity_defect"], rows)


def write_overlaps(path: Path, matels: MatrixElementSet) -> Path:
    """Per-shift overlap unitarity defects."""
    max_norm = matels.unitarity_defects("max")
    spectral = matels.unitarity_defects("spectral")
    rows = (
        {
            "shift": s,
            "unitarity_defect": max_norm[s],
            "unitarity_defect_spectral": spectral[s],
        }
        for s in matels.overlaps.shifts
    )
    return write_csv(
        path, ["shift", "unitarity_defect", "unitarity_defect_spectral"], rows
    )


def write_currents(path: Path, record: CurrentRecord) -> Path:
    rows = (
        {
            "t_m": record.times[i],
            "s_m": record.shifts[i],
            "A": record.A[i],
            "F": record.F[i],
            "J_v": record.J_v[i],
            "j_v": record.j_v[i],
            "Pdot_v": record.Pdot_v[i],
            "J_l": record.J_l[i],
            "j_l": record.j_l[i],
            "Pdot_l": record.Pdot_l[i],
            "t_fs": from_internal(float(record.times[i]), "fs"),
        }
        for i in range(len(record))
    )
    return write_csv(path, CURRENT_COLUMNS + CURRENT_EXTRAS, rows)


def read_currents(path: Path) -> dict[str, np.ndarray]:
    """Columns of a currents.csv as float arrays."""
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        return {name: np.zeros(0) for name in CURRENT_COLUMNS}
    return {
        name: np.array([float(row[name]) for row in rows]) for name in CURRENT_COLUMNS
    }


def write_spectrum(path: Path, spectrum: Spectrum) -> Path:
    rows = (
        {"harmonic_order": order, "power": power}
        for order, power in zip(spectrum.harmonic_order, spectrum.power)
    )
    return write_csv(path, ["harmonic_order", "power"], rows)


def write_gauge_report(path: Path, record: CurrentRecord) -> Path:
    checks = {c.t: c for c in record.shift_checks}
    rows = []
    for i, t in enumerate(record.times):
        check = checks.get(float(t))
        within_bound = bool(record.norm_defect[i] <= record.norm_bound[i] + 1e-14)
        rows.append(
            {
                "t_m": t,
                "s_m": record.shifts[i],
                "max_norm_defect": record.norm_defect[i],
                "displacement": check.displacement if check else "",
                "pass": within_bound and (check.passed if check else True),
                "norm_bound": record.norm_bound[i],
                "expected_displacement": check.expected if check else "",
                "adiabatic_fraction": check.adiabatic_fraction if check else "",
            }
        )
    return write_csv(path, GAUGE_REPORT_COLUMNS, rows)


def write_metadata(path: Path, metadata: dict[str, Any]) -> Path:
    def default(value: Any) -> Any:
        if isinstance(value, np.generic):
            return value.item()
        if isinstance(value, np.ndarray):
            return value.tolist()
        return str(value)

    path.write_text(
        json.dumps(metadata, indent=2, sort_keys=True, default=default) + "\n",
        encoding="utf-8",
    )
    logger.info("Wrote %s", path)
    return path


def plot_currents(path: Path, record: CurrentRecord) -> Path:
    """Total currents with the field, and the intraband parts of both gauges."""
    t_fs = from_internal(record.times, "fs")
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    axes[0].plot(t_fs, record.J_v, label="J (velocity)")
    axes[0].plot(t_fs, record.J_l, "--", label="J (length)")
    axes[0].set_ylabel("current (arb.)")
    axes[0].legend(loc="upper right")
    axes[1].plot(t_fs, record.F, color="black")
    axes[1].set_ylabel("F (a.u.)")
    axes[2].plot(t_fs, record.j_v, label="j (velocity)")
    axes[2].plot(t_fs, record.j_l, "--", label="j (length)")
    axes[2].set_ylabel("intraband current (arb.)")
    axes[2].set_xlabel("t (fs)")
    axes[2].legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("Wrote %s", path)
    return path


def plot_spectrum(path: Path, spectrum: Spectrum, max_order: float = 60.0) -> Path:
    fig, ax = plt.subplots(figsize=(8, 4))
    keep = spectrum.harmonic_order <= max_order
    power = np.where(spectrum.power[keep] > 0, spectrum.power[keep], np.nan)
    ax.semilogy(spectrum.harmonic_order[keep], power)
    ax.set_xlabel("harmonic order")
    ax.set_ylabel("power (arb.)")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("Wrote %s", path)
    return path
