"""
Closed-form index lower bounds

Bounds from the count of Jacobi fields, the improvement for solutions with
vanishing Jacobi fields at the half periods, the area-based bound, the area
lower bound and the Korevaar estimate. Floors are exact integer arithmetic.
"""

import math
from typing import Iterable, Optional

import numpy as np

from cmcindex.models import BoundInputs, BoundReport, ScalarField, SpectrumReport
from cmcindex.services import lattice as lat
from cmcindex.utils.logger import get_logger

logger = get_logger(__name__)

KNOWN_GENUS2_INDEX = 8

TABLE_COLUMNS = ("g", "m", "thm1", "thm2", "thm3", "thm3_sharp", "thm3_simplified", "flpp")


def _check_genus(g: int, m: int = 1) -> None:
    if int(g) != g or g < 2:
        raise ValueError(f"Spectral genus must be an integer >= 2, got {g}")
    if int(m) != m or m < 1:
        raise ValueError(f"Multiplicity must be an integer >= 1, got {m}")


def _parity_corrected_square(g: int) -> int:
    """(g+2)² − ½(1 + (−1)^g)"""
    return (g + 2) ** 2 - (1 if g % 2 == 0 else 0)


# ==================== Bounds ====================

def thm1_bound(g: int, m: int = 1) -> int:
    """m·⌊(g−1)/3⌋ − 2"""
    _check_genus(g, m)
    return m * ((g - 1) // 3) - 2


def thm2_bound(g: int, m: int = 1) -> int:
    """m·(⌊(g−1)/3⌋ + ⌊min((g−1)/3, 4)⌋) − 2, valid when Jacobi fields vanish at the half periods"""
    _check_genus(g, m)
    third = (g - 1) // 3
    return m * (third + min(third, 4)) - 2


def thm3_bound(g: int, c: float) -> tuple[float, float]:
    """
    Area-based bound

    Returns:
        (C·((g+2)² − ½(1+(−1)^g)) − 2, C·g² − 2)
    """
    _check_genus(g)
    if not c > 0:
        raise ValueError(f"Constant C must be positive, got {c}")
    return c * _parity_corrected_square(g) - 2, c * g * g - 2


def flpp_area_lower(g: int) -> float:
    """Area lower bound π/4·((g+2)² − ½(1+(−1)^g))"""
    _check_genus(g)
    return math.pi / 4 * _parity_corrected_square(g)


def surface_area(u: ScalarField) -> float:
    """∫ e^u dxdy over the fundamental domain of the surface lattice"""
    return lat.integrate(u.with_values(np.exp(u.values)))


def korevaar_lower(area: float, c_tilde: float = 1e7) -> int:
    """⌊A/C̃⌋ − 2"""
    if not area > 0 or not c_tilde > 0:
        raise ValueError(f"Area and C̃ must be positive, got A={area}, C̃={c_tilde}")
    return math.floor(area / c_tilde) - 2


# ==================== Reports ====================

def compare(inputs: BoundInputs, spectrum: Optional[SpectrumReport] = None) -> BoundReport:
    """
    Evaluate every bound for the inputs and, when a spectrum is given, set the
    "spectrum >= bound" flags against its lower index estimate

    The flags are expected to hold for genuine spectral-genus-g data but the
    genus of a numerical solution is never verified, so they are reported and
    the report carries "g-unverified".
    """
    g, m = inputs.g, inputs.m
    thm1 = thm1_bound(g, m)
    thm2 = thm2_bound(g, m)
    sharp, simplified = thm3_bound(g, inputs.c_value)
    thm3 = math.floor(sharp)
    area_lower = flpp_area_lower(g)

    korevaar = korevaar_lower(inputs.area, inputs.c_tilde) if inputs.area is not None else None
    area_consistent = inputs.area >= area_lower if inputs.area is not None else None

    consistency: dict[str, bool] = {}
    if inputs.d_zero:
        consistency["thm2>=thm1"] = thm2 >= thm1
    interval = None
    flags: list[str] = []
    if spectrum is not None:
        interval = (spectrum.index_lower, spectrum.index_upper)
        lower = spectrum.index_lower
        consistency["spectrum>=thm1"] = lower >= thm1
        if inputs.d_zero:
            consistency["spectrum>=thm2"] = lower >= thm2
        consistency["spectrum>=thm3"] = lower >= thm3
        if korevaar is not None:
            consistency["spectrum>=korevaar"] = lower >= korevaar
    if spectrum is not None or inputs.area is not None:
        flags.append("g-unverified")
    if not inputs.d_zero:
        flags.append("thm2-not-applicable")
    if area_consistent is False:
        flags.append("area-below-lower-bound")

    values = {"thm1": thm1, "thm2": thm2, "thm3": thm3, "korevaar": korevaar}
    vacuous = [name for name, value in values.items() if value is not None and value <= 0]

    report = BoundReport(
        inputs=inputs,
        thm1=thm1,
        thm2=thm2,
        thm2_applicable=inputs.d_zero,
        thm3=thm3,
        thm3_sharp=sharp,
        thm3_simplified=simplified,
        area_lower=area_lower,
        area=inputs.area,
        area_consistent=area_consistent,
        korevaar_lower=korevaar,
        spectrum_interval=interval,
        consistency=consistency,
        vacuous=vacuous,
        flags=flags,
        known_g2_index_lower=KNOWN_GENUS2_INDEX,
    )
    failed = [name for name, ok in consistency.items() if not ok]
    if failed:
        logger.warning(f"Bound consistency flags failed: {failed}", extra={"stage": "bounds"})
    logger.info(f"Bounds for g={g}, m={m}: thm1={thm1}, thm2={thm2}, thm3={thm3}", extra={"stage": "bounds"})
    return report


def table(g_values: Iterable[int], m_values: Iterable[int] = (1,), c: float = 1.0) -> list[dict]:
    """Rows of every bound over a g-range and multiplicities, in TABLE_COLUMNS order"""
    rows = []
    m_values = list(m_values)
    for g in g_values:
        sharp, simplified = thm3_bound(g, c)
        for m in m_values:
            rows.append({
                "g": g,
                "m": m,
                "thm1": thm1_bound(g, m),
                "thm2": thm2_bound(g, m),
                "thm3": math.floor(sharp),
                "thm3_sharp": sharp,
                "thm3_simplified": simplified,
                "flpp": flpp_area_lower(g),
            })
    return rows


def format_text(report: BoundReport) -> str:
    """Aligned two-column text rendering of a report"""
    status = {name: "vacuous" for name in report.vacuous}
    rows = [
        ("g", str(report.inputs.g), ""),
        ("m", str(report.inputs.m), ""),
        ("thm1", str(report.thm1), status.get("thm1", "")),
        ("thm2", str(report.thm2), status.get("thm2", "") or ("" if report.thm2_applicable else "not applicable")),
        ("thm3", str(report.thm3), status.get("thm3", "")),
        ("thm3 sharp", f"{report.thm3_sharp:.6g}", ""),
        ("thm3 simplified", f"{report.thm3_simplified:.6g}", ""),
        ("area lower", f"{report.area_lower:.6f}", ""),
    ]
    if report.area is not None:
        rows.append(("area", f"{report.area:.6f}", "" if report.area_consistent else "below lower bound"))
    if report.korevaar_lower is not None:
        rows.append(("korevaar", str(report.korevaar_lower), status.get("korevaar", "")))
    if report.spectrum_interval is not None:
        lo, hi = report.spectrum_interval
        rows.append(("index interval", f"[{lo}, {hi}]", ""))
    for name, ok in report.consistency.items():
        rows.append((name, "yes" if ok else "no", ""))
    rows.append(("known genus-2 index", f">= {report.known_g2_index_lower}", ""))

    width = max(len(r[0]) for r in rows)
    value_width = max(len(r[1]) for r in rows)
    lines = [f"{name.ljust(width)}  {value.rjust(value_width)}  {note}".rstrip() for name, value, note in rows]
    if report.flags:
        lines.append(f"flags: {', '.join(report.flags)}")
    return "\n".join(lines) + "\n"
