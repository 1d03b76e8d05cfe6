"""Frozen fifth-order motion-sickness weighting filter (generated by scripts/fit_iso_filter.py)."""

import numpy as np

NUMERATOR = np.array([4.637511174144383, 0.               , 0.               ])
DENOMINATOR = np.array([ 1.               ,  3.137655072317742,  9.272358323161718, 10.526938702622045,  7.69611085557343 ,  2.994620825515224])
POLES = np.array([(-0.8670251104726576-2.210145697521692j), (-0.8670251104726576+2.210145697521692j), (-0.746768870147154+0j), (-0.3284179906126343-0.7769153325337552j), (-0.3284179906126343+0.7769153325337552j)])
RESIDUES = np.array([(-0.567957516286644+0.08901566632677527j), (-0.567957516286644-0.08901566632677527j), (0.6779677127051659-1.178818832629051e-16j), (0.2289736599340611-0.464438458646801j), (0.22897365993406107+0.4644384586468008j)])
FIT_BAND_HZ = (0.01, 2.0)
FIT_RMS_LOG_ERROR = 0.110238072971191
FIT_MAX_LOG_ERROR = 0.4375453797660098
