import json
import os
import subprocess
import sys

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from cliffdesign import _kernels as kn
from cliffdesign.lagrangian import enumerate_sigma

@given(st.lists(st.lists(st.integers(0, 255), min_size=3, max_size=3), min_size=1, max_size=6))
def test_union_rank_forms_agree(rows):
    bases = np.array(rows, dtype=np.uint64)
    a = kn._pairwise_union_rank_numpy(bases, 8)
    b = kn._pairwise_union_rank_loop(bases, 8)
    assert np.array_equal(a, b)


@given(st.lists(st.integers(1, 63), min_size=6, max_size=6))
def test_preserve_count_forms_agree(cols):
    c = np.array(cols, dtype=np.uint64)
    assert kn._preserve_count_numpy(c, 6) == kn._preserve_count_loop(c, 6)


@given(st.lists(st.integers(0, 2**20), min_size=1, max_size=50), st.integers(0, 2**20))
def test_shift_count_forms_agree(elems, shift):
    e = np.array(elems, dtype=np.uint64)
    assert kn._shift_count_numpy(e, np.uint64(shift)) == kn._shift_count_loop(e, np.uint64(shift))


def test_span_array():
    assert sorted(kn.span_array([1, 2]).tolist()) == [0, 1, 2, 3]
    assert kn.popcount_array([0, 7, 2**40]).tolist() == [0, 3, 1]


def test_streams_are_distinct():
    a = kn._stream(np.uint64(1), 0)
    b = kn._stream(np.uint64(1), 1)
    assert a != b


SCRIPT = """
import json
import numpy as np
from cliffdesign import _kernels, stabilizer
from cliffdesign.commutant import overlap_exponents
from cliffdesign.moments import t_gate
est = stabilizer.interleaved_circuit_mc(3, 1, t_gate(), 2, 64, seed=3, block=8)
rows, signs = _kernels.sample_tableaux(2, 5, seed=1)
census = stabilizer.walk_census(1, 2000, seed=5)
print(json.dumps({"backend": _kernels.BACKEND, "g": overlap_exponents(4).tolist(),
                  "mc": est.mean.tolist(), "rows": rows.tolist(), "signs": signs.tolist(),
                  "census": census.tolist()}))
"""


def run_backend(disable):
    env = dict(os.environ)
    env.pop("CLIFFDESIGN_NO_NUMBA", None)
    if disable:
        env["CLIFFDESIGN_NO_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True,
                         text=True, check=True)
    return json.loads(out.stdout)


def test_fallback_backend_gives_same_numbers():
    slow = run_backend(True)
    fast = run_backend(False)
    assert slow["backend"] == "python" and fast["backend"] == "numba"
    for key in ("g", "rows", "signs", "census"):
        assert slow[key] == fast[key]
    assert np.allclose(slow["mc"], fast["mc"], rtol=1e-12)


def test_enumeration_does_not_need_kernels():
    assert len(enumerate_sigma(3)) == 6
