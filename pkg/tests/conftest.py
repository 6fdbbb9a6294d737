import numpy as np
import pytest
from hypothesis import strategies as st

from leadsafety.model import Dataset, Incident, OddBox, PairState, VehicleKinematics


def make_state(dhw, v_sv, v_pov, a_sv=0.0, a_pov=0.0, t=0, dt=0.2, pov_length=4.5,
               sv_class="car", pov_class="car", a_lat_sv=0.0, collision=False):
    sv = VehicleKinematics(0.0, 0.0, v_sv, a_long=a_sv, a_lat=a_lat_sv, vclass=sv_class)
    pov = VehicleKinematics(dhw + 2.25 + pov_length / 2, 0.0, v_pov, a_long=a_pov,
                            length=pov_length, vclass=pov_class)
    return PairState(t, dt, sv, pov, dhw, collision=collision)


def make_incident(rows, dt=0.2, sv_id=1, pov_id=2, iid=None):
    """``rows`` are (dhw, v_sv, v_pov[, a_sv, a_pov]) tuples."""
    states = []
    for k, row in enumerate(rows):
        dhw = row[0]
        states.append(make_state(*row, t=k, dt=dt, collision=(dhw == 0)))
    return Incident(iid or f"i{sv_id}-{pov_id}", sv_id, pov_id, tuple(states), 1.0 / dt)


def dataset_of(*incidents, odd=None):
    return Dataset(tuple(incidents), odd or OddBox())


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


finite = dict(allow_nan=False, allow_infinity=False)
speeds = st.floats(0.0, 45.0, **finite)
gaps = st.floats(0.1, 150.0, **finite)
accels = st.floats(-8.0, 4.0, **finite)


# acceptance verdicts, filled by test_acceptance and printed after the run
ACCEPTANCE = {}


def verdict(n, ok, detail=""):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 11):
        ok, detail = ACCEPTANCE.get(n, (False, "not run"))
        terminalreporter.write_line(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} {detail}")
