import math

import pytest

from meanfield_sphere import ProblemParams, sample_profile, scan_roots
from meanfield_sphere.sphere_field import field_for_root

# Narrow scan windows that contain every root (and ln 4*lambda) for the
# lambdas the suite exercises; kept tight so fixtures stay cheap.
SCAN_WINDOWS = {
    5.0: (2.5, 5.0),
    6.0: (2.5, 4.0),
    7.0: (1.8, 3.8),
    8.0: (1.2, 3.9),
}


@pytest.fixture(scope="session")
def root_scans():
    """Certified root scans on narrow windows, keyed by lambda."""
    out = {}
    for lam, (lo, hi) in SCAN_WINDOWS.items():
        profile = sample_profile(ProblemParams(lam), lo, hi, 0.05)
        out[lam] = scan_roots(profile)
    return out


@pytest.fixture(scope="session")
def nonzero_roots(root_scans):
    out = {}
    for lam, scan in root_scans.items():
        nz = [r for r in scan.certified if r.kind == "nonzero"]
        if nz:
            assert len(nz) == 1
            out[lam] = nz[0]
    return out


@pytest.fixture(scope="session")
def trivial_roots(root_scans):
    out = {}
    for lam, scan in root_scans.items():
        tv = [r for r in scan.certified if r.kind == "trivial"]
        assert len(tv) == 1
        out[lam] = tv[0]
    return out


@pytest.fixture(scope="session")
def nonzero_fields(nonzero_roots):
    """Validation-grade sphere fields at the nonzero roots."""
    return {lam: field_for_root(root) for lam, root in nonzero_roots.items()}


@pytest.fixture(scope="session")
def trivial_field_6(trivial_roots):
    return field_for_root(trivial_roots[6.0])
