from datetime import datetime, timezone

import pytest

from meshat.clock import FixedClock
from meshat.domain import create_course, enroll, parse_roster_rows
from meshat.fixtures import reference_course_definition, reference_roster_csv
from meshat.store import DataStore

MID_COURSE = datetime(2010, 1, 15, 12, 0, tzinfo=timezone.utc)  # phase 3


@pytest.fixture
def clock():
    return FixedClock(MID_COURSE)


@pytest.fixture
def course():
    course = create_course(reference_course_definition())
    enroll(course, parse_roster_rows(reference_roster_csv()))
    return course


@pytest.fixture
def small_roster_csv():
    return reference_roster_csv(n_groups=2, students_per_group=4)


@pytest.fixture
def data_store(tmp_path, clock):
    return DataStore(tmp_path / "data", clock=clock)


@pytest.fixture
def course_store(data_store):
    store = data_store.init_course(reference_course_definition())
    store.import_roster(reference_roster_csv())
    return store


@pytest.fixture
def small_store(tmp_path, clock):
    ds = DataStore(tmp_path / "small", clock=clock)
    store = ds.init_course(reference_course_definition(course_id="pco-small"))
    store.import_roster(reference_roster_csv(n_groups=2, students_per_group=4))
    return store
