"""Physical constants and shipped material defaults.

Material defaults come from ``data/materials.cfg``. Frequencies below are
angular (rad/s); the file stores them in Hz.
"""
from __future__ import annotations

from importlib import resources

from scipy import constants as _sc

from .units import hz_to_rad, parse_quantity, read_flat

HBAR = _sc.hbar
K_B = _sc.k

_KINDS = {
    "diamond.youngs_modulus": "pressure",
    "diamond.poisson_ratio": None,
    "diamond.density": "density",
    "diamond.flexural_velocity": "velocity",
    "siv.lambda_so": "frequency",
    "siv.orbital_zeeman_factor": None,
    "siv.strain_susceptibility_d": "strain_susceptibility",
    "siv.spin_gyromagnetic": "gyromagnetic",
    "siv.orbital_gyromagnetic": "gyromagnetic",
}


def load_materials(text: str | None = None) -> dict[str, float]:
    """Parse a materials table; defaults to the shipped file."""
    if text is None:
        text = resources.files(__package__).joinpath("data/materials.cfg").read_text()
    table = {}
    for line_no, key, value in read_flat(text):
        if key not in _KINDS:
            raise ValueError(f"line {line_no}: unknown material key {key!r}")
        table[key] = parse_quantity(value, _KINDS[key])
    missing = set(_KINDS) - set(table)
    if missing:
        raise ValueError(f"materials table is missing {sorted(missing)}")
    return table


MATERIALS = load_materials()

DIAMOND_YOUNGS = MATERIALS["diamond.youngs_modulus"]
DIAMOND_POISSON = MATERIALS["diamond.poisson_ratio"]
DIAMOND_DENSITY = MATERIALS["diamond.density"]
DIAMOND_FLEXURAL_VELOCITY = MATERIALS["diamond.flexural_velocity"]

LAMBDA_SO = hz_to_rad(MATERIALS["siv.lambda_so"])
ORBITAL_ZEEMAN_FACTOR = MATERIALS["siv.orbital_zeeman_factor"]
# d is stored in angular units: d/2pi = 1e15 Hz/strain
STRAIN_D = hz_to_rad(MATERIALS["siv.strain_susceptibility_d"])
SPIN_GYROMAGNETIC = hz_to_rad(MATERIALS["siv.spin_gyromagnetic"])
ORBITAL_GYROMAGNETIC = hz_to_rad(MATERIALS["siv.orbital_gyromagnetic"])

# nominal intrinsic ground-state splitting and reference waveguide
D_NOMINAL = hz_to_rad(46e9)
REFERENCE_GUIDE = (20e-6, 0.1e-6, 0.1e-6)  # (l, w, t) in meters
