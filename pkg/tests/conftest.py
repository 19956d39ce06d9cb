import threading

import numpy as np
import pytest

from tests.utils import make_toy


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture()
def six_flag_toy(tmp_path):
    """Catalog and program of 6 independent effective switches."""
    return make_toy(tmp_path / "toy", num_flags=6, effective=range(6))


@pytest.fixture()
def frame_pointer_catalog():
    return "--addrsig\tswitch\n--frame-pointer\tenum:all,non-leaf,none\n--stack-alignment\tuint\n"


@pytest.fixture(autouse=True)
def _thread_police():
    """Attempts stopping left-over threads to avoid test interactions.

    Adapted from PyTorch Lightning.

    """
    active_threads_before = set(threading.enumerate())
    yield
    active_threads_after = set(threading.enumerate())

    for thread in active_threads_after - active_threads_before:
        stop = getattr(thread, "stop", None) or getattr(thread, "exit", None)
        if thread.daemon and callable(stop):
            # A daemon thread would anyway be stopped at the end of a program
            # We do it preemptively here to reduce the risk of interactions with other tests that run after
            stop()
            assert not thread.is_alive()
        elif thread.name == "QueueFeederThread" or thread.daemon:
            thread.join(timeout=20)
        else:
            raise AssertionError(f"Test left zombie thread: {thread}")
