from __future__ import annotations

import json

import networkx as nx
import numpy as np
import pytest

from app.env.generator import (
    GeneratorConfig, chain_environment, extract_subgraph, generate_environment,
    parse_generator_config, random_digraph, with_onehot_features,
)
from app.env.io import content_hash, load_environment, save_environment
from app.env.spec import candidate_actions
from app.errors import ConfigError
from tests.conftest import make_spec


def _generate(**overrides):
    cfg = GeneratorConfig(**{"n_states": 60, "feature_dim": 5, "slate_size": 3, "seed": 3, **overrides})
    return generate_environment(cfg, np.random.default_rng(cfg.seed))


def test_generation_is_deterministic() -> None:
    assert content_hash(_generate()) == content_hash(_generate())
    assert content_hash(_generate()) != content_hash(_generate(seed=4))


def test_generated_graph_statistics() -> None:
    spec = _generate(max_out_degree=20)
    assert spec.n_states == 60
    for s in range(spec.n_states):
        cands = candidate_actions(spec, s)
        assert 1 <= len(cands) <= 20
        assert s not in cands
    assert np.allclose(np.linalg.norm(spec.features, axis=1), 1.0)
    assert np.all(spec.rewards >= 0)


def test_infeasible_out_degree_is_a_config_error() -> None:
    with pytest.raises(ConfigError) as err:
        random_digraph(5, 1, 10, 0.1, 1.0, np.random.default_rng(0))
    assert err.value.field == "max_out_degree"


def test_default_out_degree_fits_small_graphs() -> None:
    assert GeneratorConfig(n_states=60).max_out_degree == 59
    assert GeneratorConfig(n_states=8).max_out_degree == 7
    assert GeneratorConfig().max_out_degree == 60
    spec = _generate()
    assert max(len(candidate_actions(spec, s)) for s in range(spec.n_states)) <= 59
    with pytest.raises(ConfigError) as err:
        generate_environment(GeneratorConfig(n_states=60, max_out_degree=60), np.random.default_rng(0))
    assert err.value.field == "max_out_degree"


def test_parse_generator_config_names_the_field() -> None:
    with pytest.raises(ConfigError) as err:
        parse_generator_config({"n_states": 0})
    assert err.value.field == "n_states"
    with pytest.raises(ConfigError):
        parse_generator_config({"colour": "blue"})


def test_extract_subgraph_prunes_childless_nodes() -> None:
    host = nx.DiGraph()
    host.add_weighted_edges_from([(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 4, 1.0)])
    sub = extract_subgraph(host, 0, depth=5)
    # 3 and 4 are childless; once 3 goes, 2 is childless too
    assert sorted(sub.nodes) == [0, 1]
    assert all(deg > 0 for _, deg in sub.out_degree())


def test_bfs_mode_yields_a_valid_smaller_environment() -> None:
    spec = _generate(mode="bfs", n_states=30, max_out_degree=4, bfs_depth=30)
    assert 1 <= spec.n_states <= 30
    for s in range(spec.n_states):
        assert candidate_actions(spec, s)


def test_chain_environment_layout() -> None:
    spec = chain_environment(5, 1.0, 100.0)
    goal, lure, sink = 5, 6, 7
    assert spec.n_states == 8 and spec.slate_size == 1 and spec.start_state == 0
    assert candidate_actions(spec, 0) == [1, lure]
    assert candidate_actions(spec, 4) == [goal, lure]
    assert candidate_actions(spec, goal) == [sink]
    assert spec.rewards[goal] == 100.0 and spec.rewards[lure] == 1.0
    np.testing.assert_array_equal(spec.features, np.eye(8))


def test_chain_environment_validates_rewards() -> None:
    with pytest.raises(ConfigError):
        chain_environment(5, 10.0, 1.0)


def test_onehot_features() -> None:
    spec = with_onehot_features(_generate(n_states=10, max_out_degree=5))
    assert spec.feature_dim == 10
    np.testing.assert_array_equal(spec.features, np.eye(10))


def test_environment_file_round_trip(tmp_path) -> None:
    spec = _generate()
    path = save_environment(spec, tmp_path / "env.json")
    loaded = load_environment(path)
    assert content_hash(loaded) == content_hash(spec)
    np.testing.assert_array_equal(loaded.features, spec.features)
    assert loaded.edges == spec.edges


def test_environment_file_errors(tmp_path) -> None:
    with pytest.raises(ConfigError):
        load_environment(tmp_path / "missing.json")
    doc = json.loads((save_environment(_generate(), tmp_path / "env.json")).read_text())
    doc["version"] = 99
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    with pytest.raises(ConfigError) as err:
        load_environment(tmp_path / "bad.json")
    assert err.value.field == "version"


def test_spec_validation_rejects_duplicate_candidates() -> None:
    with pytest.raises(ConfigError) as err:
        make_spec(edges=(((1, 1.0), (1, 0.5)), ((0, 1.0),), ((0, 1.0),)))
    assert err.value.field == "edges"
