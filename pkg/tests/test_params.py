import copy
import json

import numpy as np
import pytest

from services.params import (
    SYMBOL_NAMES,
    InvariantViolation,
    MissingKey,
    ParamsError,
    UnitViolation,
    arm_mass,
    build_robot_params,
    inertia_warnings,
    load_params_file,
    load_robot_params,
    read_params_document,
    replace_symbol,
    serialize_params,
    total_mass,
    validate_params,
)


def test_table_values_load_in_si(params):
    assert params.symbols["M6"] == pytest.approx(2.435)
    assert params.symbols["Kt2"] == pytest.approx(12.283)
    assert params.arm_motors[1].torque_constant == pytest.approx(12.283)
    assert params.geometry.D3 == pytest.approx(0.700)
    assert params.geometry.r_f == pytest.approx(0.254)
    assert params.arm_links[2].cg[0] == pytest.approx(0.092378)


def test_tiny_products_of_inertia_treated_as_zero(params):
    assert params.symbols["XY2"] == pytest.approx(1.7e-17)
    assert params.arm_links[1].inertia[0, 1] == 0.0
    np.testing.assert_array_equal(params.arm_links[1].inertia, params.arm_links[1].inertia.T)


def test_products_of_inertia_kept_with_printed_sign(params):
    link3 = params.arm_links[2]
    assert link3.inertia[1, 2] == pytest.approx(params.symbols["YZ3"])
    assert link3.inertia[0, 2] == pytest.approx(params.symbols["XZ3"])


def test_every_table_symbol_is_present(params):
    assert len(SYMBOL_NAMES) == len(set(SYMBOL_NAMES)) == 130
    for name in SYMBOL_NAMES:
        assert name in params.symbols, name
        assert np.isfinite(params.si_value(name))


def test_total_mass(params):
    assert arm_mass(params) == pytest.approx(6.444)
    assert total_mass(params) == pytest.approx(20.668)
    assert total_mass(params) <= 21.5


def test_total_mass_is_order_independent(params, rng):
    masses = [link.mass for link in params.arm_links] + [params.base_link.mass] \
        + [params.orientable_hub.mass, params.castor_wheel.mass] * 2 + [params.fixed_wheel.mass] * 2
    for _ in range(5):
        shuffled = list(rng.permutation(masses))
        assert sum(shuffled) == pytest.approx(total_mass(params), abs=1e-12)


def test_shipped_file_is_valid(params):
    assert validate_params(params) == []


def test_negative_mass_reported(params):
    broken = replace_symbol(params, "M3", -params.symbols["M3"])
    messages = [v.description for v in validate_params(broken)]
    assert any(m.startswith("mass > 0") for m in messages)


def test_reach_violation_reported(params):
    broken = replace_symbol(params, "D3", 0.8)
    messages = [v.description for v in validate_params(broken)]
    assert any("D3+D4 reach" in m for m in messages)


def test_load_raises_first_violation(params_document):
    params_document["links"]["mass"]["M3"] = -1.241
    with pytest.raises(InvariantViolation):
        load_robot_params(params_document)


def test_missing_symbol(params_document):
    del params_document["motors"]["Kt4"]
    with pytest.raises(MissingKey) as info:
        build_robot_params(params_document)
    assert info.value.name == "Kt4"


def test_missing_section(params_document):
    del params_document["spray"]
    with pytest.raises(MissingKey):
        build_robot_params(params_document)


def test_unknown_length_unit(params_document):
    params_document["units"]["geometry"] = "inch"
    with pytest.raises(UnitViolation):
        build_robot_params(params_document)


def test_metre_document_matches_millimetre_document(params, params_document):
    metric = copy.deepcopy(params_document)
    metric["units"]["geometry"] = "m"
    for name, value in list(metric["geometry"].items()):
        if isinstance(value, (int, float)):
            metric["geometry"][name] = value / 1000.0
    metric["geometry"]["arm_mount"] = [v / 1000.0 for v in metric["geometry"]["arm_mount"]]
    converted = build_robot_params(metric)
    assert converted.geometry.D4 == pytest.approx(params.geometry.D4)
    assert converted.geometry.kk_table[2].d == pytest.approx(params.geometry.kk_table[2].d)


def test_serialize_reproduces_document(params, params_document):
    assert serialize_params(params) == params_document
    reloaded = build_robot_params(serialize_params(params))
    for name in SYMBOL_NAMES:
        assert reloaded.symbols[name] == params.symbols[name]


def test_triangle_inequality_is_a_warning(params):
    assert isinstance(inertia_warnings(params), list)
    skewed = replace_symbol(params, "ZZ1", 1.0)
    assert any(w.startswith("link1") for w in inertia_warnings(skewed))
    assert not any("triangle" in v.description for v in validate_params(skewed))


def test_unreadable_files(tmp_path):
    with pytest.raises(ParamsError):
        read_params_document(str(tmp_path / "absent.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ParamsError):
        load_params_file(str(bad))


def test_params_file_roundtrip_through_disk(tmp_path, params):
    target = tmp_path / "copy.json"
    target.write_text(json.dumps(serialize_params(params)), encoding="utf-8")
    assert total_mass(load_params_file(str(target))) == pytest.approx(total_mass(params))
