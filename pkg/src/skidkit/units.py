"""Physical constants and unit conversions."""

STANDARD_GRAVITY = 9.80665  # m/s²
MS_TO_KMH = 3.6


def kmh_to_ms(v_kmh: float) -> float:
    return v_kmh / MS_TO_KMH


def ms_to_kmh(v_ms: float) -> float:
    return v_ms * MS_TO_KMH
