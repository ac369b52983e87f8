import numpy as np
import pytest

from bitcanvas.device import (
    ColumnKind,
    ColumnSpec,
    FamilyParams,
    SliceKind,
    load_builtin,
    make_profile,
)


@pytest.fixture(scope="session")
def zynq_family() -> FamilyParams:
    return load_builtin("zynq7000-family").family


@pytest.fixture(scope="session")
def ultrascale_family() -> FamilyParams:
    return load_builtin("ultrascale-family").family


@pytest.fixture(scope="session")
def z7020():
    return load_builtin("z7020")


@pytest.fixture(scope="session")
def z7030():
    return load_builtin("z7030")


@pytest.fixture(scope="session")
def zu9eg():
    return load_builtin("zu9eg")


def tiny_profile(family: FamilyParams, name="tiny"):
    """One config row, two CLB columns, nothing else."""
    kind = (
        ColumnKind.CLB_UNIFORM
        if SliceKind.UNIFORM in family.frames_per_column
        else ColumnKind.CLB_L
    )
    n = family.frames_for(kind.slice_kind)
    rows = [[ColumnSpec(kind, n, 0), ColumnSpec(kind, n, 1)]]
    return make_profile(name, family, rows)


def random_payload(rng: np.random.Generator, length: int) -> bytes:
    return rng.integers(0, 256, length, dtype=np.uint8).tobytes()
