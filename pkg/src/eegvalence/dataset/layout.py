"""Default electrode layout and frequency bands.

The 13 regions follow the functional grouping used for valence work on a
10/10 cap; membership is an editable default (52 electrodes).
"""

REGION_MAP = {
    "PFl": ["Fp1", "AF7", "AF3"],
    "PFr": ["Fp2", "AF8", "AF4"],
    "Fl": ["F7", "F5", "F3", "FC5", "FC3"],
    "Fm": ["Fz", "F1", "F2", "AFz"],
    "Fr": ["F8", "F6", "F4", "FC6", "FC4"],
    "Cl": ["C5", "C3", "C1", "FC1"],
    "Cm": ["FCz", "Cz", "CPz"],
    "Cr": ["C6", "C4", "C2", "FC2"],
    "Pl": ["CP5", "CP3", "CP1", "P5", "P3", "P1"],
    "Pr": ["CP6", "CP4", "CP2", "P6", "P4", "P2"],
    "POm": ["Pz", "POz", "Oz"],
    "Ol": ["PO7", "PO3", "O1"],
    "Or": ["PO8", "PO4", "O2"],
}

REGIONS = tuple(REGION_MAP)

# half-open [low, high) in Hz
BANDS = {
    "Delta": (1.0, 4.0),
    "Theta": (4.0, 8.0),
    "Alpha": (8.0, 12.0),
    "B1": (12.0, 20.0),
    "B2": (20.0, 30.0),
    "Gamma": (30.0, 45.0),
}


def all_channels(region_map=None):
    region_map = REGION_MAP if region_map is None else region_map
    return [ch for chans in region_map.values() for ch in chans]


def compact_region_map(per_region: int, region_map=None):
    """Keep the first ``per_region`` electrodes of every region."""
    region_map = REGION_MAP if region_map is None else region_map
    if per_region < 1:
        raise ValueError("per_region must be >= 1")
    return {r: list(chans[:per_region]) for r, chans in region_map.items()}


def feature_name(band: str, region: str) -> str:
    return f"{band}-{region}"


def split_feature_name(name: str):
    band, _, region = name.partition("-")
    if not region:
        raise ValueError(f"malformed feature name {name!r}")
    return band, region


def feature_names(bands=None, regions=None):
    """Band-major list of ``<band>-<region>`` names (78 by default)."""
    bands = list(BANDS) if bands is None else list(bands)
    regions = list(REGIONS) if regions is None else list(regions)
    return [feature_name(b, r) for b in bands for r in regions]
