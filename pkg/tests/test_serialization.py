import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from massart_sq import serialization as ser
from massart_sq.hidden_direction import HiddenDirectionInstance, random_unit_vector, sample_labeled, stream_rng
from massart_sq.massart_measures import verify_properties
from massart_sq.presets import LIFT_D, LIFT_M
from massart_sq.veronese_ptf import MonomialBasis, build_target


@pytest.fixture(scope="module")
def desk_bundle(tmp_path_factory, desk_pair):
    path = tmp_path_factory.mktemp("bundle") / "desk.json"
    v = random_unit_vector(4, stream_rng(0))
    report = {"checks": verify_properties(desk_pair).checks()}
    ser.write_bundle(path, desk_pair, report, {"construction": {"s": 0.25}}, v)
    return path, v


def test_bundle_round_trip_is_bit_exact(desk_pair, desk_bundle):
    path, v = desk_bundle
    b = ser.read_bundle(path)
    assert b.digest_ok
    for got, ref in ((b.pair.plus, desk_pair.plus), (b.pair.minus, desk_pair.minus)):
        assert got.coeff.hex() == ref.coeff.hex()
        for a, c in ((got.lo, ref.lo), (got.hi, ref.hi), (got.weight, ref.weight)):
            assert [x.hex() for x in a.tolist()] == [x.hex() for x in c.tolist()]
    assert np.array_equal(b.pair.J.lo, desk_pair.J.lo) and np.array_equal(b.pair.J.hi, desk_pair.J.hi)
    assert b.pair.params == desk_pair.params
    assert np.array_equal(b.direction, v)
    assert b.target is None
    assert b.code_digest == ser.code_digest()


def test_rewrite_gives_identical_bytes(tmp_path, desk_pair, desk_bundle):
    path, v = desk_bundle
    b = ser.read_bundle(path)
    again = tmp_path / "again.json"
    ser.write_bundle(again, b.pair, b.report, b.config, b.direction)
    assert again.read_bytes() == path.read_bytes()


def test_tampered_weight_breaks_digest(tmp_path, desk_bundle):
    path, _ = desk_bundle
    doc = json.loads(path.read_text())
    row = doc["measures"]["plus"]["pieces"][3]
    row[2] = (2 * float.fromhex(row[2])).hex()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert not ser.read_bundle(bad).digest_ok


def test_rejects_foreign_format(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"format": "other"}))
    with pytest.raises(ValueError):
        ser.read_bundle(path)


def test_bundle_with_target_round_trips(tmp_path, lift_pair):
    v = random_unit_vector(LIFT_M, stream_rng(3))
    target = build_target(v, lift_pair.J, MonomialBasis(LIFT_M, 2 * LIFT_D))
    path = tmp_path / "lift.json"
    ser.write_bundle(path, lift_pair, {}, {}, v, target)
    b = ser.read_bundle(path)
    assert np.array_equal(b.target.poly_coeffs, target.poly_coeffs)
    assert b.target.basis.M == target.basis.M
    x = stream_rng(4).standard_normal((500, LIFT_M))
    assert np.array_equal(b.target.predict(x), target.predict(x))


def test_dataset_round_trip(tmp_path, desk_pair):
    inst = HiddenDirectionInstance.from_pair(desk_pair, random_unit_vector(3, stream_rng(1)))
    data = sample_labeled(inst, 300, stream_rng(1, 1))
    path = tmp_path / "d.jsonl"
    ser.write_dataset(path, data, {"seed": 1})
    header, back = ser.read_dataset(path)
    assert header["n"] == 300 and header["seed"] == 1 and header["format"] == ser.DATASET_FORMAT
    assert np.array_equal(back.x, data.x)
    assert np.array_equal(back.y, data.y)
    assert np.array_equal(back.t, data.t)


def test_dataset_with_missing_latent(tmp_path):
    from massart_sq.hidden_direction import reference_null_sampler

    data = reference_null_sampler(2, 0.4, 10, stream_rng(0))
    path = tmp_path / "n.jsonl"
    ser.write_dataset(path, data, {})
    _, back = ser.read_dataset(path)
    assert np.all(np.isnan(back.t))
    assert np.array_equal(back.x, data.x)


def test_dataset_requires_header(tmp_path):
    path = tmp_path / "n.jsonl"
    path.write_text('{"x": [1.0], "y": 1, "t": 0.0}\n')
    with pytest.raises(ValueError):
        ser.read_dataset(path)


def test_config_round_trip(tmp_path):
    cfg = {"construction": {"s": 0.25, "eps": 0.01, "eta": 0.3, "variant": "standard", "m0": None},
           "instance": {"m": 6, "d": None, "seed": 0}}
    path = tmp_path / "c.toml"
    path.write_text(ser.dumps_config(cfg))
    back = ser.load_config(path)
    assert back == {"construction": {"s": 0.25, "eps": 0.01, "eta": 0.3, "variant": "standard"},
                    "instance": {"m": 6, "seed": 0}}


def test_to_jsonable_handles_non_finite():
    out = ser.to_jsonable({"a": math.inf, "b": -math.inf, "c": math.nan, "d": np.float64(1.5), "e": np.arange(2)})
    assert out == {"a": "inf", "b": "-inf", "c": "nan", "d": 1.5, "e": [0, 1]}


def test_canonical_json_ignores_key_order():
    assert ser.canonical_json({"b": 1, "a": [1, 2]}) == ser.canonical_json({"a": [1, 2], "b": 1})


@settings(max_examples=100, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_hex_float_round_trip(x):
    assert ser.unhexf(ser.hexf(x)) == x
