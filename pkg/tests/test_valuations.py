"""Value-function generation, free-disposal checks, fixed instances, files."""

import numpy as np
import pytest

from saabid import (
    GeneratorParams,
    ValueFunction,
    check_free_disposal,
    exposure_instance,
    generate_instance,
    generate_value_function,
)
from saabid.auction import AuctionConfig
from saabid.valuations import (
    find_free_disposal_violation,
    generate_profile,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    save_instance,
)

from helpers import all_subsets


class TestValueFunction:
    def test_rejects_bad_tables(self):
        with pytest.raises(ValueError):
            ValueFunction(2, np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            ValueFunction(1, np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            ValueFunction(1, np.array([0.0, np.inf]))

    def test_value_by_set_and_mask(self):
        v = ValueFunction(2, np.array([0.0, 3.0, 4.0, 10.0]))
        assert v.value({0}) == 3.0
        assert v.value(0b10) == 4.0
        assert v.value({0, 1}) == 10.0

    def test_round_trip(self):
        v = ValueFunction(2, np.array([0.0, 3.0, 4.0, 10.0]))
        assert ValueFunction.from_dict(v.to_dict()).table.tolist() == v.table.tolist()


class TestGenerator:
    def test_free_disposal_always_holds(self):
        rng = np.random.default_rng(0)
        params = GeneratorParams(v_cap=5.0, b_min=10.0, b_max=40.0)
        for _ in range(1000):
            m = int(rng.integers(1, 5))
            v = generate_value_function(m, params, rng)
            assert check_free_disposal(v)

    def test_reproducible(self):
        params = GeneratorParams(v_cap=5.0, b_min=10.0, b_max=40.0)
        a = generate_value_function(4, params, np.random.default_rng(42))
        b = generate_value_function(4, params, np.random.default_rng(42))
        assert np.array_equal(a.table, b.table)

    def test_v0_subadditive(self):
        params = GeneratorParams(v_cap=0.0, b_min=10.0, b_max=40.0)
        rng = np.random.default_rng(1)
        for _ in range(1000):
            m = int(rng.integers(2, 5))
            v = generate_value_function(m, params, rng)
            items = set(range(m))
            for X in all_subsets(items):
                for Y in all_subsets(items - X):
                    if X and Y:
                        assert v.value(X | Y) <= v.value(X) + v.value(Y) + 1e-12

    def test_singleton_uniform_mean(self):
        params = GeneratorParams(v_cap=5.0, b_min=0.0, b_max=0.0)
        rng = np.random.default_rng(2)
        draws = [generate_value_function(1, params, rng).value({0}) for _ in range(10000)]
        assert all(0.0 <= d <= 5.0 for d in draws)
        assert abs(np.mean(draws) - 2.5) < 0.1

    def test_budgets_in_range(self):
        params = GeneratorParams(v_cap=5.0, b_min=10.0, b_max=40.0)
        rng = np.random.default_rng(3)
        for _ in range(100):
            p = generate_profile(3, params, rng)
            assert 10.0 <= p.budget <= 40.0


class TestFreeDisposal:
    def test_canonical_tables_pass(self):
        _, (p1, p2) = exposure_instance()
        assert check_free_disposal(p1.values)
        assert check_free_disposal(p2.values)

    def test_explicit_violation(self):
        v = ValueFunction(2, np.array([0.0, 5.0, 1.0, 3.0]))
        assert not check_free_disposal(v)
        pair = find_free_disposal_violation(v)
        assert pair is not None
        sub, sup = pair
        assert sub < sup
        assert v.value(sub) > v.value(sup)


class TestExample1:
    def test_canonical_table_values(self):
        _, (p1, p2) = exposure_instance()
        assert p1.values.value({0, 1}) == 12.0
        assert p2.values.value({0}) == 0.0
        assert p2.values.value({0, 1}) == 20.0
        assert p1.values.value({0}) == 12.0
        assert p2.values.value({1}) == 0.0

    def test_budgets_parameterizable(self):
        _, (p1, p2) = exposure_instance(budget1=8.0, budget2=20.0)
        assert p1.budget == 8.0
        assert p2.budget == 20.0


class TestInstanceFiles:
    def test_round_trip(self, tmp_path):
        config = AuctionConfig(2, 3, 1.0, rng_seed=9)
        profiles = generate_instance(
            config, GeneratorParams(5.0, 10.0, 40.0), np.random.default_rng(5)
        )
        path = tmp_path / "inst.json"
        save_instance(path, config, profiles)
        config2, profiles2 = load_instance(path)
        assert config2 == config
        for a, b in zip(profiles, profiles2):
            assert a.budget == b.budget
            assert np.array_equal(a.values.table, b.values.table)

    def test_profile_count_checked(self):
        config, profiles = exposure_instance()
        doc = instance_to_dict(config, profiles)
        doc["profiles"] = doc["profiles"][:1]
        with pytest.raises(ValueError):
            instance_from_dict(doc)
