"""Where does a tone land in the level-8 wavelet packet tree?

Decomposes a 12 s, 10 Hz sine sampled at 1000 Hz and prints the leaves
that hold most of its energy, then for each EEG band its share of the
energy and the band-power feature (mean power over the band's leaves).

    python3 demos/wavelet_leaves.py
"""

import numpy as np

from eegvalence.dataset import layout
from eegvalence.features.bandpower import band_power, leaf_band_map
from eegvalence.features.wavelets import WaveletSpec, wpd_decompose

fs = 1000.0
t = np.arange(12000) / fs
x = np.sin(2 * np.pi * 10.0 * t)

spectrum = wpd_decompose(x, sample_rate_hz=fs)
energy = spectrum.energies()
total = energy.sum()
print(f"signal energy {np.sum(x * x):.3f}, leaf energy {total:.3f}")

for leaf in np.argsort(energy)[::-1][:4]:
    lo, hi = spectrum.leaf_band_hz[leaf]
    print(f"leaf {leaf:3d}  {lo:6.2f}-{hi:6.2f} Hz  {energy[leaf] / total:6.1%}")

print()
for band, leaves in leaf_band_map(WaveletSpec(), fs, layout.BANDS).items():
    print(f"{band:6s} leaves {leaves.min():3d}-{leaves.max():3d}  "
          f"share {energy[leaves].sum() / total:6.1%}  power {band_power(spectrum, leaves):.4f}")
