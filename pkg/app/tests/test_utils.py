import math
import threading

import numpy as np
import pytest

from app.constants.constants import SynthesisStatus
from app.core.config import settings
from app.utils.lattice_utils import LatticeUtils
from app.utils.random_utils import best_by_value, derive_rng, parallel_map
from app.utils.report_utils import canonical_json, content_id, parse_number, read_json, to_jsonable, write_json_atomic


def test_lp_norm_cases():
    v = np.array([3.0, -4.0])
    assert LatticeUtils.lp_norm(v, 2.0) == pytest.approx(5.0)
    assert LatticeUtils.lp_norm(v, 1.0) == pytest.approx(7.0)
    assert LatticeUtils.lp_norm(v, math.inf) == pytest.approx(4.0)
    assert LatticeUtils.lp_norm(v, 3.0) == pytest.approx((27 + 64) ** (1 / 3))


def test_dual_direction_norms_the_vector():
    v = np.array([1.0, -2.0, 0.5])
    for r in (1.0, 1.5, 2.0, 4.0, math.inf):
        d = LatticeUtils.dual_direction(v, r)
        assert float(v @ d) == pytest.approx(float(LatticeUtils.lp_norm(v, r)))


def test_sign_vectors_cover_pairs():
    signs = LatticeUtils.sign_vectors(3)
    assert signs.shape == (4, 3)
    assert np.all(signs[:, 0] == 1.0)
    assert len({tuple(s) for s in signs}) == 4


def test_walsh_family_rows_are_orthogonal():
    W = LatticeUtils.walsh_family(4)
    np.testing.assert_allclose(W @ W.T, 4 * np.eye(4))


def test_ternary_vectors_count():
    assert LatticeUtils.ternary_vectors(3).shape == (27, 3)


def test_derive_rng_is_reproducible_and_label_separated():
    a = derive_rng(7, "x", 1).random(3)
    b = derive_rng(7, "x", 1).random(3)
    c = derive_rng(7, "x", 2).random(3)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_parallel_map_keeps_order():
    assert parallel_map(lambda x: x * x, range(6), n_jobs=3) == [0, 1, 4, 9, 16, 25]


def test_parallel_map_follows_parallel_setting(monkeypatch):
    caller = threading.get_ident()

    monkeypatch.setattr(settings, "WEIGHTFORGE_THREADS", 1)
    assert not settings.PARALLEL_ENABLED
    assert set(parallel_map(lambda x: threading.get_ident(), range(4))) == {caller}

    monkeypatch.setattr(settings, "WEIGHTFORGE_THREADS", 3)
    assert settings.PARALLEL_ENABLED
    assert parallel_map(lambda x: x + 1, range(8)) == list(range(1, 9))


def test_best_by_value_first_index_tie_break():
    assert best_by_value([("a", 1), ("b", 3), ("c", 3)], key=lambda item: item[1]) == ("b", 3)


def test_to_jsonable_handles_numpy_enums_and_infinities():
    payload = {"x": np.array([1.0, np.inf]), "status": SynthesisStatus.feasible, "n": np.int64(3), "nan": float("nan")}
    assert to_jsonable(payload) == {"x": [1.0, "inf"], "status": "feasible", "n": 3, "nan": "nan"}
    assert parse_number("inf") == math.inf
    assert parse_number(None) is None


def test_content_id_ignores_its_own_field():
    payload = {"b": 1, "a": [1.0, 2.0]}
    identifier = content_id(payload)
    assert len(identifier) == 64
    assert content_id({**payload, "certificate_id": identifier}) == identifier
    assert content_id({"a": [1.0, 2.0], "b": 2}) != identifier
    assert canonical_json(payload) == '{"a":[1.0,2.0],"b":1}'


def test_write_json_atomic_round_trip(tmp_path):
    target = write_json_atomic(tmp_path / "out" / "report.json", {"value": np.float64(1.5)})
    assert read_json(target) == {"value": 1.5}
