"""
Test configuration for pivotsat.
Provides shared fixtures and hypothesis strategies for all tests.
"""

import os

import pytest
from hypothesis import strategies as st

from config import CampaignConfig, Settings
from formula import CnfFormula
from pivot import complete, to_pivoted


@st.composite
def cnf_formulas(draw, max_atoms=4, max_clauses=5, min_width=1, max_width=3):
    """Small CNFs; duplicate literals collapse and tautologies drop."""
    n = draw(st.integers(min_value=max(1, min_width), max_value=max_atoms))
    literal = st.integers(min_value=1, max_value=n).flatmap(
        lambda a: st.sampled_from([a, -a])
    )
    clauses = draw(
        st.lists(
            st.lists(literal, min_size=min_width, max_size=max_width),
            max_size=max_clauses,
        )
    )
    return CnfFormula.from_lists(n, clauses)


@st.composite
def complete_pivoted(draw, max_atoms=4, max_clauses=4):
    return complete(to_pivoted(draw(cnf_formulas(max_atoms, max_clauses))))


@st.composite
def small_dags(draw, max_vertices=6):
    """Edge lists of acyclic digraphs over v0..vk, edges pointing upward."""
    n = draw(st.integers(min_value=2, max_value=max_vertices))
    pairs = [(f"v{i}", f"v{j}") for i in range(n) for j in range(i + 1, n)]
    return draw(st.lists(st.sampled_from(pairs), min_size=1, unique=True))


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep PIVOTSAT_* variables of the calling shell out of the tests."""
    for key in list(os.environ):
        if key.startswith("PIVOTSAT_"):
            monkeypatch.delenv(key)


@pytest.fixture
def settings():
    """Default runtime settings."""
    return Settings()


@pytest.fixture
def single_clause():
    """One 3-clause over three atoms."""
    return CnfFormula.from_lists(3, [[1, 2, 3]])


@pytest.fixture
def contradiction():
    """The unit contradiction x ∧ ¬x."""
    return CnfFormula.from_lists(1, [[1], [-1]])


@pytest.fixture
def square_2cnf():
    """All four 2-clauses over two atoms: the smallest unsatisfiable 2-CNF."""
    return CnfFormula.from_lists(2, [[1, 2], [1, -2], [-1, 2], [-1, -2]])


@pytest.fixture
def deep_formula():
    """
    A 3-CNF whose last clause survives the first pivot stratum, so the
    translation has to re-pivot through a fresh atom.
    """
    return CnfFormula.from_lists(5, [[1, 2, 3], [1, 4, 5], [2, 4, -3]])


@pytest.fixture
def small_campaign():
    """A campaign small enough to run inside a unit test."""
    return CampaignConfig(
        seed=5,
        instances=4,
        min_atoms=3,
        max_atoms=4,
        min_clauses=1,
        max_clauses=4,
        suites=("differential", "transform", "completion", "two_sat"),
        mutations=10,
        shrink=False,
    )


@pytest.fixture
def campaign_file(tmp_path, small_campaign):
    """The small campaign written as a config file."""
    path = tmp_path / "small.cfg"
    path.write_text(small_campaign.to_text(), encoding="utf-8")
    return path


@pytest.fixture
def dimacs_file(tmp_path):
    """Write DIMACS text to a temporary file and return its path."""

    def write(text, name="formula.cnf"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
